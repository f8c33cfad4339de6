//! Abstract addition, subtraction and the multiplication algorithms.
//!
//! Every intermediate word is truncated to the operands' width, so width 64
//! matches the Linux kernel bit for bit and smaller widths behave as `n`-bit
//! machines.

use crate::error::Result;
use crate::tnum::{same_width, Tnum};

/// `(value, mask)` pair; the multiplication loops work on bare words so the
/// width-dependent checks are paid once per call, not per iteration.
type Words = (u64, u64);

#[inline(always)]
fn add_words((av, am): Words, (bv, bm): Words, limit: u64) -> Words {
    let sv = av.wrapping_add(bv) & limit;
    let sm = am.wrapping_add(bm) & limit;
    let sigma = sv.wrapping_add(sm) & limit;
    let chi = sigma ^ sv;
    let eta = chi | am | bm;
    (sv & !eta, eta)
}

#[inline]
pub(crate) fn add_raw(p: Tnum, q: Tnum) -> Tnum {
    let (v, m) = add_words((p.value(), p.mask()), (q.value(), q.mask()), p.limit());
    Tnum::from_parts(v, m, p.width())
}

#[inline]
pub(crate) fn sub_raw(p: Tnum, q: Tnum) -> Tnum {
    let limit = p.limit();
    let dv = p.value().wrapping_sub(q.value()) & limit;
    let alpha = dv.wrapping_add(p.mask()) & limit;
    let beta = dv.wrapping_sub(q.mask()) & limit;
    let chi = alpha ^ beta;
    let mu = chi | p.mask() | q.mask();
    Tnum::from_parts(dv & !mu, mu, p.width())
}

/// Accumulates `(0, x << k)` into `acc` for every set bit `k` of `y`.
#[inline(always)]
fn hma(mut acc: Words, mut x: u64, mut y: u64, limit: u64) -> Words {
    while y != 0 {
        if y & 1 == 1 {
            acc = add_words(acc, (0, x), limit);
        }
        y >>= 1;
        x = (x << 1) & limit;
    }
    acc
}

#[inline]
pub(crate) fn kern_mul_raw(p: Tnum, q: Tnum) -> Tnum {
    let limit = p.limit();
    let pi = (p.value().wrapping_mul(q.value()) & limit, 0);
    let acc = hma(pi, p.mask(), q.mask() | q.value(), limit);
    let (v, m) = hma(acc, q.mask(), p.value(), limit);
    Tnum::from_parts(v, m, p.width())
}

/// Partial product of `q` by trit `i` of `p`.
#[inline(always)]
fn multiply_bit_naive(p: Words, q: Words, i: u32, width: u32) -> Words {
    let bit = 1u64 << i;
    if p.0 & bit != 0 {
        q
    } else if p.1 & bit != 0 {
        // kill every certain 1 of q, one trit at a time
        let (mut value, mut mask) = q;
        for j in 0..width {
            let b = 1u64 << j;
            if value & b != 0 && mask & b == 0 {
                value &= !b;
                mask |= b;
            }
        }
        (value, mask)
    } else {
        (0, 0)
    }
}

#[inline(always)]
fn multiply_bit_opt(p: Words, q: Words, i: u32, _width: u32) -> Words {
    let bit = 1u64 << i;
    if p.0 & bit != 0 {
        q
    } else if p.1 & bit != 0 {
        (0, q.0 | q.1)
    } else {
        (0, 0)
    }
}

#[inline(always)]
fn bitwise_mul_with(p: Tnum, q: Tnum, multiply_bit: fn(Words, Words, u32, u32) -> Words) -> Tnum {
    let (width, limit) = (p.width(), p.limit());
    let (pw, qw) = ((p.value(), p.mask()), (q.value(), q.mask()));
    let mut sum = (0, 0);
    for i in 0..width {
        let (v, m) = multiply_bit(pw, qw, i, width);
        sum = add_words(sum, ((v << i) & limit, (m << i) & limit), limit);
    }
    Tnum::from_parts(sum.0, sum.1, width)
}

#[inline]
pub(crate) fn bitwise_mul_raw(p: Tnum, q: Tnum) -> Tnum {
    bitwise_mul_with(p, q, multiply_bit_naive)
}

#[inline]
pub(crate) fn bitwise_mul_opt_raw(p: Tnum, q: Tnum) -> Tnum {
    bitwise_mul_with(p, q, multiply_bit_opt)
}

#[inline]
pub(crate) fn our_mul_simplified_raw(p: Tnum, q: Tnum) -> Tnum {
    let limit = p.limit();
    let (mut pv, mut pm, mut qv, mut qm) = (p.value(), p.mask(), q.value(), q.mask());
    let (mut acc_v, mut acc_m) = ((0, 0), (0, 0));
    for _ in 0..p.width() {
        if pv & 1 == 1 {
            acc_v = add_words(acc_v, (qv, 0), limit);
            acc_m = add_words(acc_m, (0, qm), limit);
        } else if pm & 1 == 1 {
            acc_m = add_words(acc_m, (0, qv | qm), limit);
        }
        // rshift / lshift by one trit
        pv >>= 1;
        pm >>= 1;
        qv = (qv << 1) & limit;
        qm = (qm << 1) & limit;
    }
    let (v, m) = add_words(acc_v, acc_m, limit);
    Tnum::from_parts(v, m, p.width())
}

#[inline]
pub(crate) fn our_mul_raw(p: Tnum, q: Tnum) -> Tnum {
    let limit = p.limit();
    let acc_v = (p.value().wrapping_mul(q.value()) & limit, 0);
    let mut acc_m = (0, 0);
    let (mut pv, mut pm, mut qv, mut qm) = (p.value(), p.mask(), q.value(), q.mask());
    while pv | pm != 0 {
        if pv & 1 == 1 {
            acc_m = add_words(acc_m, (0, qm), limit);
        } else if pm & 1 == 1 {
            acc_m = add_words(acc_m, (0, qv | qm), limit);
        }
        pv >>= 1;
        pm >>= 1;
        qv = (qv << 1) & limit;
        qm = (qm << 1) & limit;
    }
    let (v, m) = add_words(acc_v, acc_m, limit);
    Tnum::from_parts(v, m, p.width())
}

/// Abstract addition; sound and optimal.
pub fn tnum_add(p: Tnum, q: Tnum) -> Result<Tnum> {
    same_width(p, q)?;
    Ok(add_raw(p, q))
}

/// Abstract subtraction; sound and optimal.
pub fn tnum_sub(p: Tnum, q: Tnum) -> Result<Tnum> {
    same_width(p, q)?;
    Ok(sub_raw(p, q))
}

/// The Linux kernel's original multiplication, built from two
/// half-multiply-accumulate passes over the operand words.
pub fn kern_mul(p: Tnum, q: Tnum) -> Result<Tnum> {
    same_width(p, q)?;
    Ok(kern_mul_raw(p, q))
}

/// Long multiplication over the bitwise domain. Partial products for unknown
/// multiplier trits are built by turning each certain 1 of `q` into an unknown
/// trit in a per-trit loop.
pub fn bitwise_mul(p: Tnum, q: Tnum) -> Result<Tnum> {
    same_width(p, q)?;
    Ok(bitwise_mul_raw(p, q))
}

/// [`bitwise_mul`] with the per-trit loop replaced by the single tnum
/// `(0, q.value | q.mask)`.
pub fn bitwise_mul_opt(p: Tnum, q: Tnum) -> Result<Tnum> {
    same_width(p, q)?;
    Ok(bitwise_mul_opt_raw(p, q))
}

/// Value-mask decomposed multiplication, fixed trip count form.
///
/// Known partial products go to one accumulator and unknown ones to another;
/// the two are joined by a single abstract addition at the end.
pub fn our_mul_simplified(p: Tnum, q: Tnum) -> Result<Tnum> {
    same_width(p, q)?;
    Ok(our_mul_simplified_raw(p, q))
}

/// Value-mask decomposed multiplication.
///
/// The known-bits accumulator collapses to the machine product `p.v * q.v`
/// and the loop exits as soon as the multiplier has no bits left.
pub fn our_mul(p: Tnum, q: Tnum) -> Result<Tnum> {
    same_width(p, q)?;
    Ok(our_mul_raw(p, q))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::error::TnumError;

    fn t(v: u64, m: u64, w: u32) -> Tnum {
        Tnum::new(v, m, w).unwrap()
    }

    fn c(x: u64, w: u32) -> Tnum {
        Tnum::constant(x, w).unwrap()
    }

    #[test]
    fn add_examples() {
        assert_eq!(tnum_add(c(2, 8), c(3, 8)), Ok(c(5, 8)));
        assert_eq!(tnum_add(t(0b010, 0b101, 3), c(1, 3)), Ok(t(0, 0b111, 3)));
        let top = Tnum::top(4).unwrap();
        assert_eq!(tnum_add(top, c(0, 4)), Ok(top));
        assert_eq!(
            tnum_add(c(0, 4), c(0, 5)),
            Err(TnumError::WidthMismatch { left: 4, right: 5 })
        );
    }

    #[test]
    fn add_wraps_at_width() {
        assert_eq!(tnum_add(c(7, 3), c(1, 3)), Ok(c(0, 3)));
        assert_eq!(tnum_add(c(u64::MAX, 64), c(2, 64)), Ok(c(1, 64)));
    }

    #[test]
    fn sub_examples() {
        assert_eq!(tnum_sub(c(5, 8), c(3, 8)), Ok(c(2, 8)));
        assert_eq!(tnum_sub(t(0, 0b001, 3), c(1, 3)), Ok(t(0, 0b111, 3)));
        for width in 1..=6 {
            let zero = c(0, width);
            for p in Tnum::enumerate(width).unwrap() {
                assert_eq!(tnum_sub(p, zero), Ok(p));
            }
        }
    }

    const WIDTH9_P: (u64, u64) = (0b000000011, 0);
    const WIDTH9_Q: (u64, u64) = (0b011001100, 0b000100011);

    #[test]
    fn kern_mul_examples() {
        assert_eq!(kern_mul(c(3, 8), c(2, 8)), Ok(c(6, 8)));
        assert_eq!(kern_mul(t(1, 4, 5), t(2, 4, 5)), Ok(t(0b00010, 0b11100, 5)));
        let r = kern_mul(t(WIDTH9_P.0, WIDTH9_P.1, 9), t(WIDTH9_Q.0, WIDTH9_Q.1, 9)).unwrap();
        assert_eq!((r.value(), r.mask()), (0, 0b111101111));
        assert_eq!(r.to_string(), "xxxx0xxxx");
    }

    /// Step-by-step interpreter of the kernel listing, written against plain
    /// trit vectors rather than words.
    fn kern_mul_by_trits(p: Tnum, q: Tnum) -> Tnum {
        let w = p.width();
        let mut acc = Tnum::constant(p.value().wrapping_mul(q.value()) & p.limit(), w).unwrap();
        let passes = [(p.mask(), q.mask() | q.value()), (q.mask(), p.value())];
        for (x, y) in passes {
            for k in 0..w {
                if (y >> k) & 1 == 1 {
                    let shifted = (x << k) & p.limit();
                    acc = tnum_add(acc, Tnum::new(0, shifted, w).unwrap()).unwrap();
                }
            }
        }
        acc
    }

    #[test]
    fn kern_mul_matches_fixed_trip_interpreter() {
        for width in 1..=4 {
            let all = Tnum::enumerate(width).unwrap();
            for &p in &all {
                for &q in &all {
                    assert_eq!(kern_mul(p, q).unwrap(), kern_mul_by_trits(p, q));
                }
            }
        }
    }

    #[test]
    fn bitwise_mul_examples() {
        assert_eq!(bitwise_mul(c(3, 8), c(2, 8)), Ok(c(6, 8)));
        assert_eq!(bitwise_mul_opt(c(3, 8), c(2, 8)), Ok(c(6, 8)));
        assert_eq!(bitwise_mul(t(1, 4, 5), t(2, 4, 5)), Ok(t(0b00010, 0b11100, 5)));
        assert_eq!(bitwise_mul_opt(t(1, 4, 5), t(2, 4, 5)), Ok(t(0b00010, 0b11100, 5)));
    }

    #[test]
    fn bitwise_mul_variants_agree_exhaustively() {
        for width in 1..=5 {
            let all = Tnum::enumerate(width).unwrap();
            for &p in &all {
                for &q in &all {
                    assert_eq!(bitwise_mul_raw(p, q), bitwise_mul_opt_raw(p, q), "{p} {q}");
                }
            }
        }
    }

    #[test]
    fn our_mul_simplified_examples() {
        let (p, q) = (t(1, 4, 5), t(2, 4, 5));
        assert_eq!(our_mul_simplified(p, q), Ok(t(0b00010, 0b11100, 5)));
        for a in 0..16 {
            for b in 0..16 {
                assert_eq!(our_mul_simplified(c(a, 4), c(b, 4)), Ok(c((a * b) & 15, 4)));
            }
        }
    }

    #[test]
    fn our_mul_simplified_accumulators() {
        // P = x01, Q = x10 at width 5: iteration 1 (trit 1) adds Q.v to ACC_V
        // and Q.m to ACC_M, iteration 2 (trit 0) does nothing, iteration 3
        // (trit x) adds Q.v|Q.m shifted by two to ACC_M.
        let w = 5;
        let acc_v = [c(0b010, w), c(0, w), c(0, w)]
            .into_iter()
            .fold(c(0, w), |a, b| tnum_add(a, b).unwrap());
        let acc_m = [t(0, 0b100, w), c(0, w), t(0, 0b11000, w)]
            .into_iter()
            .fold(c(0, w), |a, b| tnum_add(a, b).unwrap());
        assert_eq!(acc_v, c(0b010, w));
        assert_eq!(acc_m, t(0, 0b11100, w));
        assert_eq!(
            tnum_add(acc_v, acc_m).unwrap(),
            our_mul_simplified(t(1, 4, w), t(2, 4, w)).unwrap()
        );
    }

    #[test]
    fn our_mul_examples() {
        let r = our_mul(t(WIDTH9_P.0, WIDTH9_P.1, 9), t(WIDTH9_Q.0, WIDTH9_Q.1, 9)).unwrap();
        assert_eq!((r.value(), r.mask()), (0, 0b011111111));
        assert_eq!(r.to_string(), "0xxxxxxxx");
        assert_eq!(our_mul(t(1, 4, 5), t(2, 4, 5)), Ok(t(0b00010, 0b11100, 5)));
        for q in Tnum::enumerate(4).unwrap() {
            assert_eq!(our_mul(c(0, 4), q), Ok(c(0, 4)));
        }
    }

    #[test]
    fn strength_reduction_small_widths() {
        for width in 1..=5 {
            let all = Tnum::enumerate(width).unwrap();
            for &p in &all {
                for &q in &all {
                    assert_eq!(our_mul_raw(p, q), our_mul_simplified_raw(p, q));
                }
            }
        }
    }

    #[test]
    fn mixed_widths_rejected() {
        let (a, b) = (c(1, 8), c(1, 16));
        for f in [kern_mul, bitwise_mul, bitwise_mul_opt, our_mul, our_mul_simplified, tnum_sub] {
            assert!(matches!(f(a, b), Err(TnumError::WidthMismatch { .. })));
        }
    }
}
