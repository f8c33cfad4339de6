//! Soundness, optimality, lemma and counterexample checking by enumeration
//! and seeded sampling.
//!
//! Sweeps run on the shared worker pool. Every report is independent of the
//! worker count: counts are summed and witnesses are the smallest ones under
//! the derived tnum ordering.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::arith::{add_raw, sub_raw};
use crate::bench::{sample_unchecked, Sampler};
use crate::error::{Result, TnumError};
use crate::galois::{members, optimal_unchecked, ConcreteOp};
use crate::op::OpId;
use crate::par::pool;
use crate::tnum::{check_width, width_mask, Tnum};

/// Widest width [`check_soundness`] and [`check_equivalence`] enumerate.
pub const EXHAUSTIVE_WIDTH_LIMIT: u32 = 8;
/// Widest width for optimality, lemma and counterexample enumeration.
pub const SMALL_WIDTH_LIMIT: u32 = 6;
/// Witness lists are truncated to this many entries.
pub const VIOLATION_CAP: usize = 100;
/// Sampled pairs with at most this many member pairs are checked completely.
pub const FULL_MEMBER_LIMIT: u128 = 4096;
/// Random member pairs drawn per sampled pair above [`FULL_MEMBER_LIMIT`].
pub const MEMBER_SAMPLES: usize = 64;

fn guard(width: u32, limit: u32) -> Result<()> {
    check_width(width)?;
    if width > limit {
        Err(TnumError::WidthTooLargeForEnumeration { width, limit })
    } else {
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Mode {
    Exhaustive,
    Sampled { count: u64, seed: u64 },
}

/// Keeps the smallest `VIOLATION_CAP` items seen.
fn push_capped<T: Ord>(list: &mut Vec<T>, item: T) {
    list.push(item);
    if list.len() >= 2 * VIOLATION_CAP {
        list.sort_unstable();
        list.truncate(VIOLATION_CAP);
    }
}

fn merge_capped<T: Ord>(mut a: Vec<T>, b: Vec<T>) -> Vec<T> {
    a.extend(b);
    a.sort_unstable();
    a.truncate(VIOLATION_CAP);
    a
}

fn min_opt<T: Ord>(a: Option<T>, b: Option<T>) -> Option<T> {
    match (a, b) {
        (Some(a), Some(b)) => Some(a.min(b)),
        (a, None) => a,
        (None, b) => b,
    }
}

/// Random member of `t`.
fn pick_member<R: Rng>(t: Tnum, rng: &mut R) -> u64 {
    t.value() | (rng.gen::<u64>() & t.mask())
}

/// Per-index generator: the stream is a pure function of `(seed, index)`.
fn indexed_rng(seed: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    rng
}

fn sample_rhs(op_is_shift: bool, width: u32, rng: &mut ChaCha8Rng) -> Tnum {
    if op_is_shift {
        let k = rng.gen_range(0..=u64::from(width));
        Tnum::from_parts(k, 0, width)
    } else {
        sample_unchecked(width, Sampler::PerTritUniform, rng)
    }
}

/// One failed membership check: `z = f(x, y)` is not in `r = f̂(p, q)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Violation {
    pub p: Tnum,
    pub q: Tnum,
    pub x: u64,
    pub y: u64,
    pub z: u64,
    pub r: Tnum,
}

impl Violation {
    /// Re-runs the membership test; true while the witness still fails it.
    pub fn recheck(&self) -> bool {
        self.p.contains_word(self.x) && self.q.contains_word(self.y) && !self.r.contains_word(self.z)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SoundnessReport {
    pub op: String,
    pub width: u32,
    pub mode: Mode,
    pub pairs_checked: u64,
    pub member_checks: u64,
    pub violation_count: u64,
    /// The smallest violations, at most [`VIOLATION_CAP`].
    pub violations: Vec<Violation>,
    /// Results with overlapping value and mask bits, or bits above the width.
    pub ill_formed_results: u64,
    /// Pairs also checked through the oracle refinement test.
    pub cross_checked_pairs: u64,
    /// Cross-checked pairs where the two soundness tests disagreed.
    pub cross_check_mismatches: u64,
}

impl SoundnessReport {
    pub fn is_sound(&self) -> bool {
        self.violation_count == 0 && self.ill_formed_results == 0
    }

    fn empty(op: &str, width: u32, mode: Mode) -> SoundnessReport {
        SoundnessReport {
            op: op.to_string(),
            width,
            mode,
            pairs_checked: 0,
            member_checks: 0,
            violation_count: 0,
            violations: Vec::new(),
            ill_formed_results: 0,
            cross_checked_pairs: 0,
            cross_check_mismatches: 0,
        }
    }

    fn merge(mut self, other: SoundnessReport) -> SoundnessReport {
        self.pairs_checked += other.pairs_checked;
        self.member_checks += other.member_checks;
        self.violation_count += other.violation_count;
        self.ill_formed_results += other.ill_formed_results;
        self.cross_checked_pairs += other.cross_checked_pairs;
        self.cross_check_mismatches += other.cross_check_mismatches;
        self.violations = merge_capped(self.violations, other.violations);
        self
    }

    fn record(&mut self, p: Tnum, q: Tnum, x: u64, y: u64, z: u64, r: Tnum) {
        self.member_checks += 1;
        if !r.contains_word(z) {
            self.violation_count += 1;
            push_capped(&mut self.violations, Violation { p, q, x, y, z, r });
        }
    }
}

fn is_well_formed(t: Tnum) -> bool {
    t.value() & t.mask() == 0 && (t.value() | t.mask()) & !width_mask(t.width()) == 0
}

/// Checks `f̂` against the concrete `f` for every member pair of `(p, q)`.
fn check_pair_exhaustively<F>(rep: &mut SoundnessReport, f: &F, concrete: ConcreteOp, p: Tnum, q: Tnum, cross_check: bool)
where
    F: Fn(Tnum, Tnum) -> Tnum,
{
    let width = p.width();
    let r = f(p, q);
    rep.pairs_checked += 1;
    if !is_well_formed(r) {
        rep.ill_formed_results += 1;
    }
    let before = rep.violation_count;
    for x in members(p) {
        for y in members(q) {
            rep.record(p, q, x, y, concrete.call(x, y, width), r);
        }
    }
    if cross_check {
        let refined = optimal_unchecked(concrete, p, q).refines(r);
        rep.cross_checked_pairs += 1;
        if refined != (rep.violation_count == before) {
            rep.cross_check_mismatches += 1;
        }
    }
}

/// Soundness of an arbitrary transfer function `f` for `concrete`.
///
/// `shift_rhs` selects the shift-amount domain (constants `0..=width`) for
/// the second operand instead of all tnums.
pub fn check_soundness_of<F>(
    name: &str,
    f: F,
    concrete: ConcreteOp,
    shift_rhs: bool,
    width: u32,
    mode: Mode,
) -> Result<SoundnessReport>
where
    F: Fn(Tnum, Tnum) -> Tnum + Sync,
{
    match mode {
        Mode::Exhaustive => {
            guard(width, EXHAUSTIVE_WIDTH_LIMIT)?;
            let lhs = Tnum::enumerate(width)?;
            let rhs: Vec<Tnum> = if shift_rhs {
                (0..=u64::from(width))
                    .map(|k| Tnum::from_parts(k, 0, width))
                    .collect()
            } else {
                Tnum::enumerate(width)?
            };
            let rhs_len = rhs.len();
            Ok(pool().install(|| {
                lhs.par_iter()
                    .enumerate()
                    .map(|(i, &p)| {
                        let mut part = SoundnessReport::empty(name, width, mode);
                        for (j, &q) in rhs.iter().enumerate() {
                            let cross = (i * rhs_len + j).is_multiple_of(100);
                            check_pair_exhaustively(&mut part, &f, concrete, p, q, cross);
                        }
                        part
                    })
                    .reduce(|| SoundnessReport::empty(name, width, mode), SoundnessReport::merge)
            }))
        }
        Mode::Sampled { count, seed } => {
            check_width(width)?;
            Ok(pool().install(|| {
                (0..count)
                    .into_par_iter()
                    .map(|i| {
                        let mut rng = indexed_rng(seed, i);
                        let p = sample_unchecked(width, Sampler::PerTritUniform, &mut rng);
                        let q = sample_rhs(shift_rhs, width, &mut rng);
                        let mut part = SoundnessReport::empty(name, width, mode);
                        if p.cardinality() * q.cardinality() <= FULL_MEMBER_LIMIT {
                            let cross = width <= 12 && i % 100 == 0;
                            check_pair_exhaustively(&mut part, &f, concrete, p, q, cross);
                            return part;
                        }
                        let r = f(p, q);
                        part.pairs_checked = 1;
                        if !is_well_formed(r) {
                            part.ill_formed_results = 1;
                        }
                        let (pl, ql) = (p.value() | p.mask(), q.value() | q.mask());
                        let corners = [(p.value(), q.value()), (pl, ql), (p.value(), ql), (pl, q.value())];
                        for (x, y) in corners {
                            part.record(p, q, x, y, concrete.call(x, y, width), r);
                        }
                        for _ in 0..MEMBER_SAMPLES {
                            let (x, y) = (pick_member(p, &mut rng), pick_member(q, &mut rng));
                            part.record(p, q, x, y, concrete.call(x, y, width), r);
                        }
                        part
                    })
                    .reduce(|| SoundnessReport::empty(name, width, mode), SoundnessReport::merge)
            }))
        }
    }
}

/// For every checked pair and every (or, for large sampled pairs, a sample
/// of) concrete member pairs, asserts `f(x, y) ∈ γ(f̂(p, q))`.
pub fn check_soundness(op: OpId, width: u32, mode: Mode) -> Result<SoundnessReport> {
    check_soundness_of(
        op.name(),
        |p, q| op.eval(p, q),
        op.concrete(),
        op.is_shift(),
        width,
        mode,
    )
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub struct OptimalityExample {
    pub p: Tnum,
    pub q: Tnum,
    pub result: Tnum,
    pub optimal: Tnum,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct OptimalityReport {
    pub op: OpId,
    pub width: u32,
    pub pairs: u64,
    pub equal_pairs: u64,
    /// Sound but strictly less precise than the oracle.
    pub strictly_worse_pairs: u64,
    /// Result does not contain the oracle output: a soundness bug.
    pub unsound_pairs: u64,
    /// The smallest differing pairs, at most [`VIOLATION_CAP`].
    pub examples: Vec<OptimalityExample>,
}

impl OptimalityReport {
    pub fn is_optimal(&self) -> bool {
        self.equal_pairs == self.pairs
    }

    pub fn equal_fraction(&self) -> f64 {
        if self.pairs == 0 {
            1.0
        } else {
            self.equal_pairs as f64 / self.pairs as f64
        }
    }

    fn empty(op: OpId, width: u32) -> OptimalityReport {
        OptimalityReport {
            op,
            width,
            pairs: 0,
            equal_pairs: 0,
            strictly_worse_pairs: 0,
            unsound_pairs: 0,
            examples: Vec::new(),
        }
    }

    fn merge(mut self, other: OptimalityReport) -> OptimalityReport {
        self.pairs += other.pairs;
        self.equal_pairs += other.equal_pairs;
        self.strictly_worse_pairs += other.strictly_worse_pairs;
        self.unsound_pairs += other.unsound_pairs;
        self.examples = merge_capped(self.examples, other.examples);
        self
    }
}

/// Compares `op` against the brute-force optimal abstraction on every pair.
pub fn check_optimality(op: OpId, width: u32) -> Result<OptimalityReport> {
    guard(width, SMALL_WIDTH_LIMIT)?;
    let lhs = Tnum::enumerate(width)?;
    let rhs = op.rhs_domain(width)?;
    let concrete = op.concrete();
    Ok(pool().install(|| {
        lhs.par_iter()
            .map(|&p| {
                let mut part = OptimalityReport::empty(op, width);
                for &q in &rhs {
                    let result = op.eval(p, q);
                    let optimal = optimal_unchecked(concrete, p, q);
                    part.pairs += 1;
                    if result == optimal {
                        part.equal_pairs += 1;
                        continue;
                    }
                    if optimal.refines(result) {
                        part.strictly_worse_pairs += 1;
                    } else {
                        part.unsound_pairs += 1;
                    }
                    push_capped(&mut part.examples, OptimalityExample { p, q, result, optimal });
                }
                part
            })
            .reduce(|| OptimalityReport::empty(op, width), OptimalityReport::merge)
    }))
}

/// Bit `k` is the carry into position `k` of `p + q`, modulo `2^width`.
pub fn carry_in_bits(p: u64, q: u64, width: u32) -> u64 {
    (p ^ q ^ p.wrapping_add(q)) & width_mask(width)
}

/// Bit `k` is the borrow into position `k` of `p - q`, modulo `2^width`.
pub fn borrow_in_bits(p: u64, q: u64, width: u32) -> u64 {
    (p ^ q ^ p.wrapping_sub(q)) & width_mask(width)
}

/// Which carry bound is used as the minimum.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Bounds {
    #[default]
    Normal,
    /// Minimum and maximum exchanged; exists so the harness can be seen to fail.
    Swapped,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub struct LemmaWitness {
    pub p: Tnum,
    pub q: Tnum,
    /// Concrete members, for lemmas quantified over them.
    pub x: Option<u64>,
    pub y: Option<u64>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LemmaCheck {
    pub lemma: String,
    pub checks: u64,
    pub violations: u64,
    pub witness: Option<LemmaWitness>,
}

impl LemmaCheck {
    fn new(lemma: &str) -> LemmaCheck {
        LemmaCheck {
            lemma: lemma.to_string(),
            checks: 0,
            violations: 0,
            witness: None,
        }
    }

    fn record(&mut self, ok: bool, witness: impl FnOnce() -> LemmaWitness) {
        self.checks += 1;
        if !ok {
            self.violations += 1;
            self.witness = min_opt(self.witness.take(), Some(witness()));
        }
    }

    fn merge(mut self, other: LemmaCheck) -> LemmaCheck {
        self.checks += other.checks;
        self.violations += other.violations;
        self.witness = min_opt(self.witness, other.witness);
        self
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LemmaReport {
    pub family: String,
    pub width: u32,
    pub bounds: Bounds,
    pub lemmas: Vec<LemmaCheck>,
}

impl LemmaReport {
    pub fn holds(&self) -> bool {
        self.lemmas.iter().all(|l| l.violations == 0)
    }

    pub fn lemma(&self, name: &str) -> Option<&LemmaCheck> {
        self.lemmas.iter().find(|l| l.lemma == name)
    }

    fn merge(mut self, other: LemmaReport) -> LemmaReport {
        self.lemmas = self
            .lemmas
            .into_iter()
            .zip(other.lemmas)
            .map(|(a, b)| a.merge(b))
            .collect();
        self
    }
}

pub const LEMMA_MIN: &str = "min_bound";
pub const LEMMA_MAX: &str = "max_bound";
pub const LEMMA_UNCERTAINTY: &str = "uncertainty";
pub const LEMMA_MASK_EQUIVALENCE: &str = "mask_equivalence";

/// Per-pair quantities of one carry-lemma family.
struct CarryFamily {
    name: &'static str,
    /// Carry (or borrow) word of a concrete pair.
    chain: fn(u64, u64, u32) -> u64,
    /// `(min, max)` bounding chains of a pair.
    bounds: fn(Tnum, Tnum) -> (u64, u64),
    /// The operator's own uncertainty term, before or-ing the input masks.
    spread: fn(Tnum, Tnum) -> u64,
}

const ADD_FAMILY: CarryFamily = CarryFamily {
    name: "add",
    chain: carry_in_bits,
    bounds: |p, q| {
        let w = p.width();
        let lo = carry_in_bits(p.value(), q.value(), w);
        let hi = carry_in_bits(p.value() + p.mask(), q.value() + q.mask(), w);
        (lo, hi)
    },
    spread: |p, q| {
        let sv = p.value().wrapping_add(q.value());
        let sigma = sv.wrapping_add(p.mask().wrapping_add(q.mask()));
        (sv ^ sigma) & p.limit()
    },
};

const SUB_FAMILY: CarryFamily = CarryFamily {
    name: "sub",
    chain: borrow_in_bits,
    bounds: |p, q| {
        let w = p.width();
        let lo = borrow_in_bits(p.value() + p.mask(), q.value(), w);
        let hi = borrow_in_bits(p.value(), q.value() + q.mask(), w);
        (lo, hi)
    },
    spread: |p, q| {
        let dv = p.value().wrapping_sub(q.value());
        let alpha = dv.wrapping_add(p.mask());
        let beta = dv.wrapping_sub(q.mask());
        (alpha ^ beta) & p.limit()
    },
};

fn check_carry_family(family: &CarryFamily, width: u32, bounds: Bounds) -> Result<LemmaReport> {
    guard(width, SMALL_WIDTH_LIMIT)?;
    let all = Tnum::enumerate(width)?;
    let empty = || LemmaReport {
        family: family.name.to_string(),
        width,
        bounds,
        lemmas: [LEMMA_MIN, LEMMA_MAX, LEMMA_UNCERTAINTY, LEMMA_MASK_EQUIVALENCE]
            .map(LemmaCheck::new)
            .to_vec(),
    };
    Ok(pool().install(|| {
        all.par_iter()
            .map(|&p| {
                let mut rep = empty();
                let [min_l, max_l, unc_l, eq_l] = &mut rep.lemmas[..] else {
                    unreachable!()
                };
                for &q in &all {
                    let (mut lo, mut hi) = (family.bounds)(p, q);
                    if bounds == Bounds::Swapped {
                        std::mem::swap(&mut lo, &mut hi);
                    }
                    let (mut and, mut or) = (width_mask(width), 0u64);
                    for x in members(p) {
                        for y in members(q) {
                            let c = (family.chain)(x, y, width);
                            and &= c;
                            or |= c;
                            let w = || LemmaWitness { p, q, x: Some(x), y: Some(y) };
                            min_l.record(lo & !c == 0, w);
                            max_l.record(c & !hi == 0, w);
                        }
                    }
                    let w = || LemmaWitness { p, q, x: None, y: None };
                    unc_l.record(lo ^ hi == and ^ or, w);
                    let masks = p.mask() | q.mask();
                    eq_l.record(((family.spread)(p, q) | masks) == ((lo ^ hi) | masks), w);
                }
                rep
            })
            .reduce(empty, LemmaReport::merge)
    }))
}

/// Carry-bound lemmas behind the addition operator, over every pair and
/// every member pair of `width` (at most 6).
pub fn check_add_lemmas(width: u32) -> Result<LemmaReport> {
    check_carry_family(&ADD_FAMILY, width, Bounds::Normal)
}

pub fn check_add_lemmas_with(width: u32, bounds: Bounds) -> Result<LemmaReport> {
    check_carry_family(&ADD_FAMILY, width, bounds)
}

/// Borrow-bound analogues for subtraction.
pub fn check_sub_lemmas(width: u32) -> Result<LemmaReport> {
    check_carry_family(&SUB_FAMILY, width, Bounds::Normal)
}

pub fn check_sub_lemmas_with(width: u32, bounds: Bounds) -> Result<LemmaReport> {
    check_carry_family(&SUB_FAMILY, width, bounds)
}

pub const LEMMA_UNION_WITH_ZERO: &str = "union_with_zero";
pub const LEMMA_DECOMPOSED_SUMMATION: &str = "decomposed_summation";
pub const LEMMA_PARTIAL_PRODUCT: &str = "partial_product";

/// Supporting facts for the multiplication operator:
///
/// * `(0, v|m)` contains every member of `(v, m)` and zero (all tnums);
/// * a sum of members of `T_0..T_{n-1}` lies in the sum of the value parts
///   plus the sum of the mask parts (`samples` random tuples, `n = width`);
/// * `x * y` is the sum of its shifted partial products (`samples` pairs).
pub fn check_mul_lemmas(width: u32, samples: u64, seed: u64) -> Result<LemmaReport> {
    guard(width, SMALL_WIDTH_LIMIT)?;
    let limit = width_mask(width);
    let mut union = LemmaCheck::new(LEMMA_UNION_WITH_ZERO);
    for p in Tnum::enumerate(width)? {
        let cover = Tnum::from_parts(0, p.value() | p.mask(), width);
        union.record(p.refines(cover) && cover.contains_word(0), || LemmaWitness {
            p,
            q: cover,
            x: None,
            y: None,
        });
    }

    let mut summation = LemmaCheck::new(LEMMA_DECOMPOSED_SUMMATION);
    let mut product = LemmaCheck::new(LEMMA_PARTIAL_PRODUCT);
    let zero = Tnum::from_parts(0, 0, width);
    for i in 0..samples {
        let mut rng = indexed_rng(seed, i);
        let terms: Vec<Tnum> = (0..width)
            .map(|_| sample_unchecked(width, Sampler::PerTritUniform, &mut rng))
            .collect();
        let (mut acc_v, mut acc_m, mut z) = (zero, zero, 0u64);
        for &t in &terms {
            acc_v = add_raw(acc_v, Tnum::from_parts(t.value(), 0, width));
            acc_m = add_raw(acc_m, Tnum::from_parts(0, t.mask(), width));
            z = z.wrapping_add(pick_member(t, &mut rng)) & limit;
        }
        let s = add_raw(acc_v, acc_m);
        summation.record(s.contains_word(z), || LemmaWitness {
            p: acc_v,
            q: acc_m,
            x: Some(z),
            y: None,
        });

        let x = rng.gen::<u64>() & limit;
        let y = rng.gen::<u64>() & limit;
        let partial = (0..width)
            .filter(|k| x >> k & 1 == 1)
            .fold(0u64, |acc, k| acc.wrapping_add(y << k));
        product.record(partial & limit == y.wrapping_mul(x) & limit, || LemmaWitness {
            p: Tnum::from_parts(x, 0, width),
            q: Tnum::from_parts(y, 0, width),
            x: Some(x),
            y: Some(y),
        });
    }
    Ok(LemmaReport {
        family: "mul".to_string(),
        width,
        bounds: Bounds::Normal,
        lemmas: vec![union, summation, product],
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Mismatch {
    pub p: Tnum,
    pub q: Tnum,
    pub a: Tnum,
    pub b: Tnum,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EquivalenceReport {
    pub a: OpId,
    pub b: OpId,
    pub width: u32,
    pub mode: Mode,
    pub pairs_checked: u64,
    pub mismatch_count: u64,
    pub mismatches: Vec<Mismatch>,
}

impl EquivalenceReport {
    pub fn is_equivalent(&self) -> bool {
        self.mismatch_count == 0
    }

    fn empty(a: OpId, b: OpId, width: u32, mode: Mode) -> EquivalenceReport {
        EquivalenceReport {
            a,
            b,
            width,
            mode,
            pairs_checked: 0,
            mismatch_count: 0,
            mismatches: Vec::new(),
        }
    }

    fn record(&mut self, p: Tnum, q: Tnum) {
        self.pairs_checked += 1;
        let (ra, rb) = (self.a.eval(p, q), self.b.eval(p, q));
        if ra != rb {
            self.mismatch_count += 1;
            push_capped(&mut self.mismatches, Mismatch { p, q, a: ra, b: rb });
        }
    }

    fn merge(mut self, other: EquivalenceReport) -> EquivalenceReport {
        self.pairs_checked += other.pairs_checked;
        self.mismatch_count += other.mismatch_count;
        self.mismatches = merge_capped(self.mismatches, other.mismatches);
        self
    }
}

/// Checks that two operators return identical tnums.
pub fn check_equivalence(a: OpId, b: OpId, width: u32, mode: Mode) -> Result<EquivalenceReport> {
    if a.is_shift() != b.is_shift() {
        return Err(TnumError::InvalidConfig(format!(
            "cannot compare {a} with {b}: operand kinds differ"
        )));
    }
    let empty = || EquivalenceReport::empty(a, b, width, mode);
    match mode {
        Mode::Exhaustive => {
            guard(width, EXHAUSTIVE_WIDTH_LIMIT)?;
            let lhs = Tnum::enumerate(width)?;
            let rhs = a.rhs_domain(width)?;
            Ok(pool().install(|| {
                lhs.par_iter()
                    .map(|&p| {
                        let mut part = empty();
                        for &q in &rhs {
                            part.record(p, q);
                        }
                        part
                    })
                    .reduce(empty, EquivalenceReport::merge)
            }))
        }
        Mode::Sampled { count, seed } => {
            check_width(width)?;
            const CHUNK: u64 = 4096;
            Ok(pool().install(|| {
                (0..count.div_ceil(CHUNK))
                    .into_par_iter()
                    .map(|chunk| {
                        let mut rng = indexed_rng(seed, chunk);
                        let mut part = empty();
                        for _ in chunk * CHUNK..((chunk + 1) * CHUNK).min(count) {
                            let p = sample_unchecked(width, Sampler::PerTritUniform, &mut rng);
                            let q = sample_rhs(a.is_shift(), width, &mut rng);
                            part.record(p, q);
                        }
                        part
                    })
                    .reduce(empty, EquivalenceReport::merge)
            }))
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "property", rename_all = "snake_case")]
pub enum Property {
    /// `(a + b) + c ≠ a + (b + c)`.
    NonassocAdd,
    /// `(p + q) - q ≠ p`.
    NoninverseAddSub,
    /// `op(p, q) ≠ op(q, p)`.
    Noncomm { op: OpId },
}

impl Property {
    pub const SEARCHED: [Property; 5] = [
        Property::NonassocAdd,
        Property::NoninverseAddSub,
        Property::Noncomm { op: OpId::KernMul },
        Property::Noncomm { op: OpId::OurMul },
        Property::Noncomm { op: OpId::BitwiseMul },
    ];

    pub fn arity(self) -> usize {
        match self {
            Property::NonassocAdd => 3,
            _ => 2,
        }
    }

    /// Both sides of the property's equation.
    pub fn sides(self, operands: &[Tnum]) -> (Tnum, Tnum) {
        match self {
            Property::NonassocAdd => {
                let (a, b, c) = (operands[0], operands[1], operands[2]);
                (add_raw(add_raw(a, b), c), add_raw(a, add_raw(b, c)))
            }
            Property::NoninverseAddSub => {
                let (p, q) = (operands[0], operands[1]);
                (sub_raw(add_raw(p, q), q), p)
            }
            Property::Noncomm { op } => {
                let (p, q) = (operands[0], operands[1]);
                (op.eval(p, q), op.eval(q, p))
            }
        }
    }

    fn holds_at(self, operands: &[Tnum]) -> bool {
        let (l, r) = self.sides(operands);
        l != r
    }
}

impl std::fmt::Display for Property {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Property::NonassocAdd => f.write_str("nonassoc_add"),
            Property::NoninverseAddSub => f.write_str("noninverse_add_sub"),
            Property::Noncomm { op } => write!(f, "noncomm({op})"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Search {
    Exhaustive,
    Randomized { seed: u64, attempts: u64 },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Counterexample {
    #[serde(flatten)]
    pub property: Property,
    pub width: u32,
    pub operands: Vec<Tnum>,
    pub lhs: Tnum,
    pub rhs: Tnum,
    pub search: Search,
}

impl Counterexample {
    fn new(property: Property, operands: Vec<Tnum>, search: Search) -> Counterexample {
        let (lhs, rhs) = property.sides(&operands);
        Counterexample {
            property,
            width: operands[0].width(),
            operands,
            lhs,
            rhs,
            search,
        }
    }

    /// Recomputes both sides from the stored operands.
    pub fn replay(&self) -> Result<(Tnum, Tnum)> {
        if self.operands.len() != self.property.arity() {
            return Err(TnumError::InvalidConfig(format!(
                "{} takes {} operands, got {}",
                self.property,
                self.property.arity(),
                self.operands.len()
            )));
        }
        for &t in &self.operands[1..] {
            crate::tnum::same_width(self.operands[0], t)?;
        }
        Ok(self.property.sides(&self.operands))
    }

    /// True when the replay reproduces the stored, unequal sides.
    pub fn reproduces(&self) -> bool {
        matches!(self.replay(), Ok((l, r)) if l == self.lhs && r == self.rhs && l != r)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CounterexampleSearch {
    pub width: u32,
    pub budget: u64,
    pub seed: u64,
    pub found: Vec<Counterexample>,
    /// Properties with no counterexample after every search stage.
    pub not_found: Vec<Property>,
}

impl CounterexampleSearch {
    pub fn get(&self, property: Property) -> Option<&Counterexample> {
        self.found.iter().find(|c| c.property == property)
    }
}

fn first_exhaustive(property: Property, width: u32) -> Result<Option<Vec<Tnum>>> {
    let all = Tnum::enumerate(width)?;
    if property.arity() == 3 {
        for &a in &all {
            for &b in &all {
                for &c in &all {
                    if property.holds_at(&[a, b, c]) {
                        return Ok(Some(vec![a, b, c]));
                    }
                }
            }
        }
    } else {
        for &p in &all {
            for &q in &all {
                if property.holds_at(&[p, q]) {
                    return Ok(Some(vec![p, q]));
                }
            }
        }
    }
    Ok(None)
}

fn first_random(property: Property, width: u32, budget: u64, seed: u64) -> Option<Vec<Tnum>> {
    let mut rng = indexed_rng(seed, u64::from(width));
    (0..budget).find_map(|_| {
        let operands: Vec<Tnum> = (0..property.arity())
            .map(|_| sample_unchecked(width, Sampler::PerTritUniform, &mut rng))
            .collect();
        property.holds_at(&operands).then_some(operands)
    })
}

/// Searches for counterexamples to associativity of addition, add/sub
/// round trips and commutativity of the multiplications.
///
/// Widths up to 6 are searched exhaustively in enumeration order, so the
/// first hit is reproducible; a property with no hit there, or any property
/// at a wider width, gets `budget` seeded random attempts at width 64.
pub fn find_counterexamples(width: u32, budget: u64, seed: u64) -> Result<CounterexampleSearch> {
    check_width(width)?;
    let mut found = Vec::new();
    let mut not_found = Vec::new();
    for property in Property::SEARCHED {
        let exhaustive = if width <= SMALL_WIDTH_LIMIT {
            first_exhaustive(property, width)?
        } else {
            None
        };
        let hit = match exhaustive {
            Some(ops) => Some(Counterexample::new(property, ops, Search::Exhaustive)),
            None => {
                let random_width = if width <= SMALL_WIDTH_LIMIT { 64 } else { width };
                first_random(property, random_width, budget, seed).map(|ops| {
                    Counterexample::new(property, ops, Search::Randomized { seed, attempts: budget })
                })
            }
        };
        match hit {
            Some(c) => found.push(c),
            None => not_found.push(property),
        }
    }
    Ok(CounterexampleSearch {
        width,
        budget,
        seed,
        found,
        not_found,
    })
}

/// Number of pairs `(p, q)` at `width` where `op(p, q) ≠ op(q, p)`.
pub fn count_noncommutative_pairs(op: OpId, width: u32) -> Result<u64> {
    guard(width, EXHAUSTIVE_WIDTH_LIMIT)?;
    let all = Tnum::enumerate(width)?;
    Ok(pool().install(|| {
        all.par_iter()
            .map(|&p| all.iter().filter(|&&q| op.eval(p, q) != op.eval(q, p)).count() as u64)
            .sum()
    }))
}
