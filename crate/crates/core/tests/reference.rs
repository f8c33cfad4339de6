//! Differential tests against independent references: a brute-force
//! abstraction written here from scratch, and straight-line transcriptions of
//! the multiplication algorithms on plain integers.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use tnumlab::verify::{check_optimality, count_noncommutative_pairs};
use tnumlab::{OpId, Tnum};

fn mask_of(w: u32) -> u64 {
    if w == 64 {
        u64::MAX
    } else {
        (1 << w) - 1
    }
}

fn all_tnums(w: u32) -> Vec<(u64, u64)> {
    let mut out = Vec::new();
    for m in 0..=mask_of(w) {
        for v in 0..=mask_of(w) {
            if v & m == 0 {
                out.push((v, m));
            }
        }
    }
    out
}

/// Most precise tnum covering `{f(x, y) | x ∈ γ(p), y ∈ γ(q)}`, scanning
/// every word of the width instead of walking submasks.
fn brute(f: impl Fn(u64, u64) -> u64, p: (u64, u64), q: (u64, u64), w: u32) -> (u64, u64) {
    let lim = mask_of(w);
    let member = |t: (u64, u64), x: u64| x & !t.1 == t.0;
    let (mut lo, mut hi) = (lim, 0);
    for x in (0..=lim).filter(|&x| member(p, x)) {
        for y in (0..=lim).filter(|&y| member(q, y)) {
            let z = f(x, y) & lim;
            lo &= z;
            hi |= z;
        }
    }
    (lo, lo ^ hi)
}

type Word = (u64, u64);
type Concrete = fn(u64, u64) -> u64;
type MulRef = fn(Word, Word, u32) -> Word;

fn words(t: Tnum) -> (u64, u64) {
    (t.value(), t.mask())
}

fn tn(t: (u64, u64), w: u32) -> Tnum {
    Tnum::new(t.0, t.1, w).unwrap()
}

// -- plain-integer transcriptions ------------------------------------------

fn r_add(a: (u64, u64), b: (u64, u64), lim: u64) -> (u64, u64) {
    let sv = a.0.wrapping_add(b.0) & lim;
    let sm = a.1.wrapping_add(b.1) & lim;
    let s = sv.wrapping_add(sm) & lim;
    let eta = (s ^ sv) | a.1 | b.1;
    (sv & !eta, eta)
}

fn r_kern(p: (u64, u64), q: (u64, u64), w: u32) -> (u64, u64) {
    let lim = mask_of(w);
    let mut acc = (p.0.wrapping_mul(q.0) & lim, 0);
    for (x, y) in [(p.1, q.1 | q.0), (q.1, p.0)] {
        for k in 0..w {
            if y >> k & 1 == 1 {
                acc = r_add(acc, (0, (x << k) & lim), lim);
            }
        }
    }
    acc
}

fn r_bitwise(p: (u64, u64), q: (u64, u64), w: u32) -> (u64, u64) {
    let lim = mask_of(w);
    let mut sum = (0, 0);
    for i in 0..w {
        let prod = match (p.0 >> i & 1, p.1 >> i & 1) {
            (1, _) => q,
            (_, 1) => (0, q.0 | q.1),
            _ => (0, 0),
        };
        sum = r_add(sum, ((prod.0 << i) & lim, (prod.1 << i) & lim), lim);
    }
    sum
}

fn r_our(p: (u64, u64), q: (u64, u64), w: u32) -> (u64, u64) {
    let lim = mask_of(w);
    let mut acc_m = (0, 0);
    for i in 0..w {
        let qm = (q.1 << i) & lim;
        let qvm = ((q.0 | q.1) << i) & lim;
        if p.0 >> i & 1 == 1 {
            acc_m = r_add(acc_m, (0, qm), lim);
        } else if p.1 >> i & 1 == 1 {
            acc_m = r_add(acc_m, (0, qvm), lim);
        }
    }
    r_add((p.0.wrapping_mul(q.0) & lim, 0), acc_m, lim)
}

// --------------------------------------------------------------------------

#[test]
fn add_sub_and_bitwise_ops_equal_brute_force_abstraction() {
    for w in 1..=4 {
        let lim = mask_of(w);
        let all = all_tnums(w);
        for &p in &all {
            for &q in &all {
                let (tp, tq) = (tn(p, w), tn(q, w));
                let cases: [(OpId, Concrete); 5] = [
                    (OpId::Add, |x, y| x.wrapping_add(y)),
                    (OpId::Sub, |x, y| x.wrapping_sub(y)),
                    (OpId::And, |x, y| x & y),
                    (OpId::Or, |x, y| x | y),
                    (OpId::Xor, |x, y| x ^ y),
                ];
                for (op, f) in cases {
                    assert_eq!(
                        words(op.apply(tp, tq).unwrap()),
                        brute(|x, y| f(x, y) & lim, p, q, w),
                        "{op} {tp} {tq}"
                    );
                }
            }
        }
    }
}

#[test]
fn shifts_equal_brute_force_abstraction() {
    for w in 1..=5u32 {
        let lim = mask_of(w);
        for p in all_tnums(w) {
            let t = tn(p, w);
            for k in 0..=w + 1 {
                let shl = brute(|x, _| if k >= w { 0 } else { x << k }, p, (0, 0), w);
                let shr = brute(|x, _| if k >= w { 0 } else { x >> k }, p, (0, 0), w);
                let sar = brute(
                    |x, _| {
                        let s = ((x << (64 - w)) as i64) >> (64 - w);
                        (s >> k.min(w - 1)) as u64 & lim
                    },
                    p,
                    (0, 0),
                    w,
                );
                assert_eq!(words(OpId::Lshift.apply_shift(t, k).unwrap()), shl, "lshift {t} {k}");
                assert_eq!(words(OpId::Rshift.apply_shift(t, k).unwrap()), shr, "rshift {t} {k}");
                assert_eq!(words(OpId::Arsh.apply_shift(t, k).unwrap()), sar, "arsh {t} {k}");
            }
        }
    }
}

#[test]
fn multiplications_match_transcriptions_exhaustively() {
    for w in 1..=5 {
        let all = all_tnums(w);
        for &p in &all {
            for &q in &all {
                let (tp, tq) = (tn(p, w), tn(q, w));
                assert_eq!(words(OpId::KernMul.apply(tp, tq).unwrap()), r_kern(p, q, w));
                assert_eq!(words(OpId::BitwiseMul.apply(tp, tq).unwrap()), r_bitwise(p, q, w));
                assert_eq!(words(OpId::BitwiseMulOpt.apply(tp, tq).unwrap()), r_bitwise(p, q, w));
                assert_eq!(words(OpId::OurMul.apply(tp, tq).unwrap()), r_our(p, q, w));
                assert_eq!(words(OpId::OurMulSimplified.apply(tp, tq).unwrap()), r_our(p, q, w));
            }
        }
    }
}

#[test]
fn multiplications_match_transcriptions_at_width_64() {
    let mut rng = ChaCha8Rng::seed_from_u64(0xfeed);
    let mut sample = || {
        let m: u64 = rng.gen::<u64>() & rng.gen::<u64>();
        (rng.gen::<u64>() & !m, m)
    };
    for _ in 0..20_000 {
        let (p, q) = (sample(), sample());
        let (tp, tq) = (tn(p, 64), tn(q, 64));
        assert_eq!(words(OpId::KernMul.apply(tp, tq).unwrap()), r_kern(p, q, 64));
        assert_eq!(words(OpId::BitwiseMulOpt.apply(tp, tq).unwrap()), r_bitwise(p, q, 64));
        assert_eq!(words(OpId::OurMul.apply(tp, tq).unwrap()), r_our(p, q, 64));
    }
}

#[test]
fn multiplication_examples() {
    let (p, q) = ((1, 4), (2, 4));
    let expected = (0b00010, 0b11100);
    assert_eq!(brute(|x, y| x * y, p, q, 5), expected);
    for op in OpId::MULTIPLICATIONS {
        assert_eq!(words(op.apply(tn(p, 5), tn(q, 5)).unwrap()), expected, "{op}");
    }
    let (p9, q9) = ((0b11, 0), (0b0_1100_1100, 0b0_0010_0011));
    assert_eq!(r_kern(p9, q9, 9), (0, 0b1_1110_1111));
    assert_eq!(r_our(p9, q9, 9), (0, 0b0_1111_1111));
}

/// Optimality counts of the multiplications, frozen from the brute-force
/// abstraction in this file.
#[test]
fn multiplication_optimality_counts() {
    for (w, frozen) in [
        (4, [(OpId::KernMul, 6262), (OpId::BitwiseMulOpt, 6260), (OpId::OurMul, 6262)]),
        (5, [(OpId::KernMul, 55118), (OpId::BitwiseMulOpt, 55046), (OpId::OurMul, 55114)]),
    ] {
        let all = all_tnums(w);
        for (op, equal) in frozen {
            let reference = all
                .iter()
                .flat_map(|&p| all.iter().map(move |&q| (p, q)))
                .filter(|&(p, q)| {
                    let r = words(op.apply(tn(p, w), tn(q, w)).unwrap());
                    r == brute(|x, y| x.wrapping_mul(y), p, q, w)
                })
                .count() as u64;
            assert_eq!(reference, equal, "{op} at width {w}");
            let rep = check_optimality(op, w).unwrap();
            assert_eq!(rep.equal_pairs, equal);
            assert_eq!(rep.unsound_pairs, 0);
        }
    }
}

/// Commutativity is not claimed for either algorithm; these are the observed
/// counts of ordered pairs with `op(p, q) ≠ op(q, p)`.
#[test]
fn noncommutative_pair_counts() {
    let count = |f: MulRef, w: u32| {
        let all = all_tnums(w);
        all.iter()
            .flat_map(|&p| all.iter().map(move |&q| (p, q)))
            .filter(|&(p, q)| f(p, q, w) != f(q, p, w))
            .count() as u64
    };
    assert_eq!(count(r_kern, 5), 0);
    assert_eq!(count(r_our, 5), 0);
    assert_eq!(count(r_kern, 6), 20);
    assert_eq!(count(r_our, 6), 2);
    assert_eq!(count_noncommutative_pairs(OpId::KernMul, 6).unwrap(), 20);
    assert_eq!(count_noncommutative_pairs(OpId::OurMul, 6).unwrap(), 2);
    assert_eq!(count_noncommutative_pairs(OpId::BitwiseMul, 5).unwrap(), count(r_bitwise, 5));
}
