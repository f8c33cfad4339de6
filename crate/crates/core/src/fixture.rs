//! JSON fixtures: operator inputs with their computed outputs, for checking
//! other implementations of the same operators.
//!
//! One record:
//!
//! ```json
//! {"op": "add", "width": 8, "p": {"v": "0x1", "m": "0x4"},
//!  "q": {"v": "0x2", "m": "0x0"}, "shift": null, "r": {"v": "0x3", "m": "0x4"}}
//! ```
//!
//! Shift operators carry their amount in `shift` and have `"q": null`.
//! Words are lowercase, `0x`-prefixed hex.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::bench::{sample_unchecked, Sampler};
use crate::error::{Result, TnumError};
use crate::op::OpId;
use crate::tnum::{check_width, parse_hex_word, Tnum};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HexTnum {
    pub v: String,
    pub m: String,
}

impl HexTnum {
    pub fn of(t: Tnum) -> HexTnum {
        HexTnum {
            v: format!("{:#x}", t.value()),
            m: format!("{:#x}", t.mask()),
        }
    }

    pub fn to_tnum(&self, width: u32) -> Result<Tnum> {
        Tnum::new(parse_hex_word(&self.v, 0)?, parse_hex_word(&self.m, 0)?, width)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FixtureRecord {
    pub op: OpId,
    pub width: u32,
    pub p: HexTnum,
    pub q: Option<HexTnum>,
    pub shift: Option<u32>,
    pub r: HexTnum,
}

/// Second operand of a fixture record.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Rhs {
    Tnum(Tnum),
    Shift(u32),
}

impl FixtureRecord {
    /// Evaluates `op` and records inputs and output.
    pub fn evaluate(op: OpId, p: Tnum, rhs: Rhs) -> Result<FixtureRecord> {
        let (r, q, shift) = match rhs {
            Rhs::Tnum(q) if !op.is_shift() => (op.apply(p, q)?, Some(HexTnum::of(q)), None),
            Rhs::Shift(k) if op.is_shift() => (op.apply_shift(p, k)?, None, Some(k)),
            _ => {
                return Err(TnumError::InvalidConfig(format!(
                    "{op} needs {}",
                    if op.is_shift() { "a shift amount" } else { "a second tnum" }
                )))
            }
        };
        Ok(FixtureRecord {
            op,
            width: p.width(),
            p: HexTnum::of(p),
            q,
            shift,
            r: HexTnum::of(r),
        })
    }

    /// Decodes and validates the inputs.
    pub fn inputs(&self) -> Result<(Tnum, Rhs)> {
        check_width(self.width)?;
        let p = self.p.to_tnum(self.width)?;
        let rhs = match (&self.q, self.shift, self.op.is_shift()) {
            (None, Some(k), true) => Rhs::Shift(k),
            (Some(q), None, false) => Rhs::Tnum(q.to_tnum(self.width)?),
            _ => {
                return Err(TnumError::InvalidConfig(format!(
                    "{} records need {}",
                    self.op,
                    if self.op.is_shift() {
                        "\"q\": null and an integer \"shift\""
                    } else {
                        "a \"q\" tnum and \"shift\": null"
                    }
                )))
            }
        };
        Ok((p, rhs))
    }

    pub fn output(&self) -> Result<Tnum> {
        check_width(self.width)?;
        self.r.to_tnum(self.width)
    }

    /// Recomputes the output from the inputs.
    pub fn recompute(&self) -> Result<Tnum> {
        let (p, rhs) = self.inputs()?;
        match rhs {
            Rhs::Tnum(q) => self.op.apply(p, q),
            Rhs::Shift(k) => self.op.apply_shift(p, k),
        }
    }

    pub fn is_consistent(&self) -> Result<bool> {
        Ok(self.recompute()? == self.output()?)
    }
}

/// `count` records of random per-trit-uniform inputs; shift amounts are
/// drawn from `0..=width`.
pub fn generate(op: OpId, width: u32, count: usize, seed: u64) -> Result<Vec<FixtureRecord>> {
    check_width(width)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count)
        .map(|_| {
            let p = sample_unchecked(width, Sampler::PerTritUniform, &mut rng);
            let rhs = if op.is_shift() {
                Rhs::Shift(rng.gen_range(0..=width))
            } else {
                Rhs::Tnum(sample_unchecked(width, Sampler::PerTritUniform, &mut rng))
            };
            FixtureRecord::evaluate(op, p, rhs)
        })
        .collect()
}

pub fn to_json(records: &[FixtureRecord]) -> String {
    serde_json::to_string_pretty(records).expect("fixture records always serialize")
}

/// Parses a JSON array of records and validates each one's words.
pub fn from_json(text: &str) -> Result<Vec<FixtureRecord>> {
    let records: Vec<FixtureRecord> = serde_json::from_str(text).map_err(|e| TnumError::Fixture {
        index: 0,
        message: format!("schema error at line {} column {}: {e}", e.line(), e.column()),
    })?;
    for (index, rec) in records.iter().enumerate() {
        rec.inputs()
            .and_then(|_| rec.output())
            .map_err(|e| TnumError::Fixture {
                index,
                message: e.to_string(),
            })?;
    }
    Ok(records)
}

/// Indices of records whose stored output differs from a re-evaluation.
pub fn mismatches(records: &[FixtureRecord]) -> Result<Vec<usize>> {
    let mut out = Vec::new();
    for (index, rec) in records.iter().enumerate() {
        let ok = rec.is_consistent().map_err(|e| TnumError::Fixture {
            index,
            message: e.to_string(),
        })?;
        if !ok {
            out.push(index);
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn record_layout() {
        let p = Tnum::new(1, 4, 8).unwrap();
        let q = Tnum::constant(2, 8).unwrap();
        let rec = FixtureRecord::evaluate(OpId::Add, p, Rhs::Tnum(q)).unwrap();
        let json = serde_json::to_string(&rec).unwrap();
        assert_eq!(
            json,
            r#"{"op":"add","width":8,"p":{"v":"0x1","m":"0x4"},"q":{"v":"0x2","m":"0x0"},"shift":null,"r":{"v":"0x3","m":"0x4"}}"#
        );
        let shift = FixtureRecord::evaluate(OpId::Lshift, p, Rhs::Shift(1)).unwrap();
        assert_eq!(
            serde_json::to_string(&shift).unwrap(),
            r#"{"op":"lshift","width":8,"p":{"v":"0x1","m":"0x4"},"q":null,"shift":1,"r":{"v":"0x2","m":"0x8"}}"#
        );
        assert!(FixtureRecord::evaluate(OpId::Lshift, p, Rhs::Tnum(q)).is_err());
        assert!(FixtureRecord::evaluate(OpId::Add, p, Rhs::Shift(1)).is_err());
    }

    #[test]
    fn generated_records_are_self_consistent() {
        for op in OpId::ALL {
            let recs = generate(op, 64, 200, 17).unwrap();
            assert_eq!(recs.len(), 200);
            assert_eq!(mismatches(&recs).unwrap(), Vec::<usize>::new());
            let back = from_json(&to_json(&recs)).unwrap();
            assert_eq!(back, recs);
        }
        assert!(generate(OpId::Add, 8, 0, 1).unwrap().is_empty());
        assert_eq!(generate(OpId::KernMul, 8, 50, 3).unwrap(), generate(OpId::KernMul, 8, 50, 3).unwrap());
    }

    #[test]
    fn flipped_output_bit_is_a_mismatch() {
        let mut recs = generate(OpId::KernMul, 8, 10, 2).unwrap();
        let r = recs[4].output().unwrap();
        let flipped = if r.mask() & 1 == 0 {
            Tnum::new(r.value() ^ 1, r.mask(), 8)
        } else {
            Tnum::new(r.value(), r.mask() ^ 1, 8)
        }
        .unwrap();
        recs[4].r = HexTnum::of(flipped);
        assert_eq!(mismatches(&recs).unwrap(), vec![4]);
    }

    #[test]
    fn malformed_records_are_rejected() {
        let bad = [
            // value and mask overlap
            r#"[{"op":"add","width":4,"p":{"v":"0x1","m":"0x1"},"q":{"v":"0x0","m":"0x0"},"shift":null,"r":{"v":"0x1","m":"0x0"}}]"#,
            // shift op with a tnum operand
            r#"[{"op":"rshift","width":4,"p":{"v":"0x1","m":"0x0"},"q":{"v":"0x0","m":"0x0"},"shift":null,"r":{"v":"0x1","m":"0x0"}}]"#,
            // unknown operator
            r#"[{"op":"mul","width":4,"p":{"v":"0x1","m":"0x0"},"q":{"v":"0x0","m":"0x0"},"shift":null,"r":{"v":"0x0","m":"0x0"}}]"#,
            // bits above width
            r#"[{"op":"add","width":4,"p":{"v":"0x10","m":"0x0"},"q":{"v":"0x0","m":"0x0"},"shift":null,"r":{"v":"0x0","m":"0x0"}}]"#,
            // not hex
            r#"[{"op":"add","width":4,"p":{"v":"0xg","m":"0x0"},"q":{"v":"0x0","m":"0x0"},"shift":null,"r":{"v":"0x0","m":"0x0"}}]"#,
        ];
        for text in bad {
            assert!(matches!(from_json(text), Err(TnumError::Fixture { .. })), "{text}");
        }
        assert_eq!(from_json("[]").unwrap(), vec![]);
    }
}
