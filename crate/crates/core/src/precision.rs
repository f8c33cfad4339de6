//! Pairwise precision comparison of two operators over every input pair of a
//! given width.
//!
//! For comparable outputs the ratio of concretization sizes is exact:
//! `|γ(RA)| / |γ(RB)| = 2^(popcount(RA.mask) - popcount(RB.mask))`, so the
//! histogram is keyed by that integer exponent. A negative exponent means
//! operator A produced the smaller (more precise) set.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Result, TnumError};
use crate::op::OpId;
use crate::par::pool;
use crate::tnum::{Order, Tnum};

/// Widest exhaustive sweep in the default mode (9^8 ≈ 4.3e7 pairs).
pub const SWEEP_WIDTH_LIMIT: u32 = 8;
/// Widest sweep in the long-running mode.
pub const LONG_SWEEP_WIDTH_LIMIT: u32 = 10;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PrecisionRecord {
    pub p: Tnum,
    pub q: Tnum,
    pub op_a: OpId,
    pub op_b: OpId,
    pub ra: Tnum,
    pub rb: Tnum,
    pub relation: Order,
    /// `log2(|γ(ra)| / |γ(rb)|)`; `None` when the outputs are incomparable.
    pub log2_ratio: Option<i32>,
}

#[inline]
fn log2_ratio(relation: Order, ra: Tnum, rb: Tnum) -> Option<i32> {
    match relation {
        Order::Incomparable => None,
        _ => Some(ra.unknown_count() as i32 - rb.unknown_count() as i32),
    }
}

pub fn compare_pair(op_a: OpId, op_b: OpId, p: Tnum, q: Tnum) -> Result<PrecisionRecord> {
    let ra = op_a.apply(p, q)?;
    let rb = op_b.apply(p, q)?;
    let relation = ra.compare(rb)?;
    Ok(PrecisionRecord {
        p,
        q,
        op_a,
        op_b,
        ra,
        rb,
        relation,
        log2_ratio: log2_ratio(relation, ra, rb),
    })
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PrecisionSummary {
    pub width: u32,
    pub op_a: OpId,
    pub op_b: OpId,
    pub total_pairs: u64,
    pub equal_count: u64,
    pub a_more_precise: u64,
    pub b_more_precise: u64,
    pub incomparable: u64,
    /// Differing comparable pairs bucketed by `log2_ratio`.
    pub histogram: BTreeMap<i32, u64>,
}

impl PrecisionSummary {
    fn empty(width: u32, op_a: OpId, op_b: OpId) -> PrecisionSummary {
        PrecisionSummary {
            width,
            op_a,
            op_b,
            total_pairs: 0,
            equal_count: 0,
            a_more_precise: 0,
            b_more_precise: 0,
            incomparable: 0,
            histogram: BTreeMap::new(),
        }
    }

    #[inline]
    fn record(&mut self, relation: Order, ra: Tnum, rb: Tnum) {
        self.total_pairs += 1;
        match relation {
            Order::Equal => self.equal_count += 1,
            Order::LeftMorePrecise => self.a_more_precise += 1,
            Order::RightMorePrecise => self.b_more_precise += 1,
            Order::Incomparable => self.incomparable += 1,
        }
        if let (Order::LeftMorePrecise | Order::RightMorePrecise, Some(r)) =
            (relation, log2_ratio(relation, ra, rb))
        {
            *self.histogram.entry(r).or_insert(0) += 1;
        }
    }

    fn merge(mut self, other: PrecisionSummary) -> PrecisionSummary {
        self.total_pairs += other.total_pairs;
        self.equal_count += other.equal_count;
        self.a_more_precise += other.a_more_precise;
        self.b_more_precise += other.b_more_precise;
        self.incomparable += other.incomparable;
        for (k, v) in other.histogram {
            *self.histogram.entry(k).or_insert(0) += v;
        }
        self
    }

    pub fn differing(&self) -> u64 {
        self.total_pairs - self.equal_count
    }

    pub fn comparable_differing(&self) -> u64 {
        self.a_more_precise + self.b_more_precise
    }

    pub fn equal_fraction(&self) -> f64 {
        ratio(self.equal_count, self.total_pairs)
    }

    /// Fraction of differing comparable pairs where A is strictly more precise.
    pub fn a_more_precise_fraction(&self) -> f64 {
        ratio(self.a_more_precise, self.comparable_differing())
    }

    /// Swaps the roles of A and B.
    pub fn swapped(&self) -> PrecisionSummary {
        PrecisionSummary {
            width: self.width,
            op_a: self.op_b,
            op_b: self.op_a,
            total_pairs: self.total_pairs,
            equal_count: self.equal_count,
            a_more_precise: self.b_more_precise,
            b_more_precise: self.a_more_precise,
            incomparable: self.incomparable,
            histogram: self.histogram.iter().map(|(k, v)| (-k, *v)).collect(),
        }
    }

    /// Histogram buckets followed by one summary row.
    pub fn to_csv(&self) -> String {
        let mut out = String::from(
            "kind,width,op_a,op_b,log2_ratio,count,total_pairs,equal,a_more_precise,b_more_precise,incomparable,equal_fraction\n",
        );
        for (bucket, count) in &self.histogram {
            let _ = writeln!(
                out,
                "bucket,{},{},{},{},{},,,,,,",
                self.width, self.op_a, self.op_b, bucket, count
            );
        }
        let _ = writeln!(
            out,
            "summary,{},{},{},,{},{},{},{},{},{},{:.6}",
            self.width,
            self.op_a,
            self.op_b,
            self.differing(),
            self.total_pairs,
            self.equal_count,
            self.a_more_precise,
            self.b_more_precise,
            self.incomparable,
            self.equal_fraction()
        );
        out
    }
}

fn ratio(num: u64, den: u64) -> f64 {
    if den == 0 {
        0.0
    } else {
        num as f64 / den as f64
    }
}

fn sweep_with_limit(op_a: OpId, op_b: OpId, width: u32, limit: u32) -> Result<PrecisionSummary> {
    if width > limit {
        return Err(TnumError::WidthTooLargeForEnumeration { width, limit });
    }
    if op_a.is_shift() != op_b.is_shift() {
        return Err(TnumError::InvalidConfig(format!(
            "cannot compare {op_a} with {op_b}: operand kinds differ"
        )));
    }
    let lhs = Tnum::enumerate(width)?;
    let rhs = op_a.rhs_domain(width)?;
    let summary = pool().install(|| {
        lhs.par_iter()
            .map(|&p| {
                let mut part = PrecisionSummary::empty(width, op_a, op_b);
                for &q in &rhs {
                    let ra = op_a.eval(p, q);
                    let rb = op_b.eval(p, q);
                    part.record(ra.compare_unchecked(rb), ra, rb);
                }
                part
            })
            .reduce(
                || PrecisionSummary::empty(width, op_a, op_b),
                PrecisionSummary::merge,
            )
    });
    Ok(summary)
}

/// Compares `op_a` and `op_b` on every input pair of `width` (at most 8).
pub fn sweep_exhaustive(op_a: OpId, op_b: OpId, width: u32) -> Result<PrecisionSummary> {
    sweep_with_limit(op_a, op_b, width, SWEEP_WIDTH_LIMIT)
}

/// As [`sweep_exhaustive`] but accepts widths 9 and 10, which take minutes to hours.
pub fn sweep_exhaustive_long(op_a: OpId, op_b: OpId, width: u32) -> Result<PrecisionSummary> {
    sweep_with_limit(op_a, op_b, width, LONG_SWEEP_WIDTH_LIMIT)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BitwidthRow {
    pub width: u32,
    pub total_pairs: u64,
    pub equal: u64,
    pub a_more_precise: u64,
    pub b_more_precise: u64,
    pub incomparable: u64,
    pub pct_equal: f64,
    /// Share of differing pairs whose outputs are comparable.
    pub pct_differing_comparable: f64,
    /// Share of comparable differing pairs where A is strictly more precise.
    pub pct_a_more_precise: f64,
}

impl From<&PrecisionSummary> for BitwidthRow {
    fn from(s: &PrecisionSummary) -> BitwidthRow {
        let differing = s.differing();
        BitwidthRow {
            width: s.width,
            total_pairs: s.total_pairs,
            equal: s.equal_count,
            a_more_precise: s.a_more_precise,
            b_more_precise: s.b_more_precise,
            incomparable: s.incomparable,
            pct_equal: 100.0 * s.equal_fraction(),
            pct_differing_comparable: if differing == 0 {
                100.0
            } else {
                100.0 * ratio(s.comparable_differing(), differing)
            },
            pct_a_more_precise: 100.0 * s.a_more_precise_fraction(),
        }
    }
}

pub fn sweep_bitwidths(
    op_a: OpId,
    op_b: OpId,
    widths: impl IntoIterator<Item = u32>,
    long: bool,
) -> Result<Vec<BitwidthRow>> {
    let limit = if long {
        LONG_SWEEP_WIDTH_LIMIT
    } else {
        SWEEP_WIDTH_LIMIT
    };
    widths
        .into_iter()
        .map(|w| sweep_with_limit(op_a, op_b, w, limit).map(|s| BitwidthRow::from(&s)))
        .collect()
}

pub fn bitwidth_rows_to_csv(op_a: OpId, op_b: OpId, rows: &[BitwidthRow]) -> String {
    let mut out = String::from(
        "width,op_a,op_b,total_pairs,equal,a_more_precise,b_more_precise,incomparable,pct_equal,pct_differing_comparable,pct_a_more_precise\n",
    );
    for r in rows {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{},{},{:.4},{:.4},{:.4}",
            r.width,
            op_a,
            op_b,
            r.total_pairs,
            r.equal,
            r.a_more_precise,
            r.b_more_precise,
            r.incomparable,
            r.pct_equal,
            r.pct_differing_comparable,
            r.pct_a_more_precise
        );
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn t(v: u64, m: u64, w: u32) -> Tnum {
        Tnum::new(v, m, w).unwrap()
    }

    #[test]
    fn width9_pair_is_incomparable() {
        let p = t(0b000000011, 0, 9);
        let q = t(0b011001100, 0b000100011, 9);
        let r = compare_pair(OpId::KernMul, OpId::OurMul, p, q).unwrap();
        assert_eq!(r.relation, Order::Incomparable);
        assert_eq!(r.log2_ratio, None);
        assert_eq!(r.ra.to_string(), "xxxx0xxxx");
        assert_eq!(r.rb.to_string(), "0xxxxxxxx");
    }

    #[test]
    fn identical_operators_are_equal() {
        let r = compare_pair(OpId::OurMul, OpId::OurMul, t(1, 4, 5), t(2, 4, 5)).unwrap();
        assert_eq!((r.relation, r.log2_ratio), (Order::Equal, Some(0)));
        let s = sweep_exhaustive(OpId::KernMul, OpId::KernMul, 4).unwrap();
        assert_eq!(s.equal_count, s.total_pairs);
        assert_eq!(s.total_pairs, 9u64.pow(4));
        assert!(s.histogram.is_empty());
    }

    #[test]
    fn constant_inputs_give_equal_products() {
        for width in 1..=8 {
            for x in (0..1u64 << width).step_by(3) {
                for y in (0..1u64 << width).step_by(5) {
                    let (p, q) = (t(x, 0, width), t(y, 0, width));
                    for a in OpId::MULTIPLICATIONS {
                        let r = compare_pair(a, OpId::OurMul, p, q).unwrap();
                        assert_eq!(r.relation, Order::Equal);
                        assert_eq!(r.ra, t((x * y) & ((1 << width) - 1), 0, width));
                    }
                }
            }
        }
    }

    #[test]
    fn summary_counts_are_consistent() {
        let s = sweep_exhaustive(OpId::OurMul, OpId::KernMul, 5).unwrap();
        assert_eq!(
            s.equal_count + s.a_more_precise + s.b_more_precise + s.incomparable,
            s.total_pairs
        );
        let hist: u64 = s.histogram.values().sum();
        assert_eq!(hist, s.total_pairs - s.equal_count - s.incomparable);
        // our_mul is the A side, so its wins sit at negative exponents
        let negative: u64 = s.histogram.range(..0).map(|(_, v)| v).sum();
        assert_eq!(negative, s.a_more_precise);
    }

    #[test]
    fn swapping_operators_swaps_counts() {
        let ab = sweep_exhaustive(OpId::OurMul, OpId::BitwiseMulOpt, 4).unwrap();
        let ba = sweep_exhaustive(OpId::BitwiseMulOpt, OpId::OurMul, 4).unwrap();
        assert_eq!(ab.swapped(), ba);
    }

    #[test]
    fn shift_sweeps_use_constant_amounts() {
        let s = sweep_exhaustive(OpId::Lshift, OpId::Lshift, 3).unwrap();
        assert_eq!(s.total_pairs, 27 * 4);
        assert!(sweep_exhaustive(OpId::Lshift, OpId::Add, 3).is_err());
    }

    #[test]
    fn width_guard() {
        assert!(matches!(
            sweep_exhaustive(OpId::Add, OpId::Sub, 9),
            Err(TnumError::WidthTooLargeForEnumeration { width: 9, limit: 8 })
        ));
        assert!(matches!(
            sweep_exhaustive_long(OpId::Add, OpId::Sub, 11),
            Err(TnumError::WidthTooLargeForEnumeration { width: 11, limit: 10 })
        ));
    }

    #[test]
    fn csv_shapes() {
        let s = sweep_exhaustive(OpId::OurMul, OpId::KernMul, 4).unwrap();
        let csv = s.to_csv();
        let lines: Vec<&str> = csv.lines().collect();
        assert_eq!(lines.len(), 2 + s.histogram.len());
        assert!(lines.last().unwrap().starts_with("summary,4,our_mul,kern_mul,"));
        for line in &lines {
            assert_eq!(line.split(',').count(), 12);
        }
        let rows = sweep_bitwidths(OpId::OurMul, OpId::KernMul, 2..=4, false).unwrap();
        assert_eq!(rows.len(), 3);
        let csv = bitwidth_rows_to_csv(OpId::OurMul, OpId::KernMul, &rows);
        assert_eq!(csv.lines().count(), 4);
        assert_eq!(rows[2].total_pairs, 81 * 81);
    }
}
