//! Operator identifiers shared by every harness.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::arith::{
    add_raw, bitwise_mul_opt_raw, bitwise_mul_raw, kern_mul_raw, our_mul_raw,
    our_mul_simplified_raw, sub_raw,
};
use crate::bitops::{and_raw, arsh_raw, lshift_raw, or_raw, rshift_raw, sign_extend, xor_raw};
use crate::error::{Result, TnumError};
use crate::galois::ConcreteOp;
use crate::tnum::{same_width, width_mask, Tnum};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OpId {
    Add,
    Sub,
    And,
    Or,
    Xor,
    Lshift,
    Rshift,
    Arsh,
    KernMul,
    BitwiseMul,
    BitwiseMulOpt,
    OurMul,
    OurMulSimplified,
}

impl OpId {
    pub const ALL: [OpId; 13] = [
        OpId::Add,
        OpId::Sub,
        OpId::And,
        OpId::Or,
        OpId::Xor,
        OpId::Lshift,
        OpId::Rshift,
        OpId::Arsh,
        OpId::KernMul,
        OpId::BitwiseMul,
        OpId::BitwiseMulOpt,
        OpId::OurMul,
        OpId::OurMulSimplified,
    ];

    pub const MULTIPLICATIONS: [OpId; 5] = [
        OpId::KernMul,
        OpId::BitwiseMul,
        OpId::BitwiseMulOpt,
        OpId::OurMul,
        OpId::OurMulSimplified,
    ];

    pub fn name(self) -> &'static str {
        match self {
            OpId::Add => "add",
            OpId::Sub => "sub",
            OpId::And => "and",
            OpId::Or => "or",
            OpId::Xor => "xor",
            OpId::Lshift => "lshift",
            OpId::Rshift => "rshift",
            OpId::Arsh => "arsh",
            OpId::KernMul => "kern_mul",
            OpId::BitwiseMul => "bitwise_mul",
            OpId::BitwiseMulOpt => "bitwise_mul_opt",
            OpId::OurMul => "our_mul",
            OpId::OurMulSimplified => "our_mul_simplified",
        }
    }

    /// Shift operators take a concrete amount instead of a second tnum.
    pub fn is_shift(self) -> bool {
        matches!(self, OpId::Lshift | OpId::Rshift | OpId::Arsh)
    }

    pub fn is_multiplication(self) -> bool {
        OpId::MULTIPLICATIONS.contains(&self)
    }

    /// Applies a binary operator. Shift operators read their amount from `q`,
    /// which must then be a constant.
    pub fn apply(self, p: Tnum, q: Tnum) -> Result<Tnum> {
        same_width(p, q)?;
        if self.is_shift() && !q.is_constant() {
            return Err(TnumError::NotAShiftAmount { op: self.name() });
        }
        Ok(self.eval(p, q))
    }

    pub fn apply_shift(self, t: Tnum, k: u32) -> Result<Tnum> {
        match self {
            OpId::Lshift => Ok(lshift_raw(t, k)),
            OpId::Rshift => Ok(rshift_raw(t, k)),
            OpId::Arsh => Ok(arsh_raw(t, k)),
            other => Err(TnumError::InvalidConfig(format!(
                "{other} is not a shift operator"
            ))),
        }
    }

    /// Unchecked dispatch: equal widths, constant `q` for shifts.
    #[inline]
    pub(crate) fn eval(self, p: Tnum, q: Tnum) -> Tnum {
        match self {
            OpId::Add => add_raw(p, q),
            OpId::Sub => sub_raw(p, q),
            OpId::And => and_raw(p, q),
            OpId::Or => or_raw(p, q),
            OpId::Xor => xor_raw(p, q),
            OpId::Lshift => lshift_raw(p, shift_amount(q)),
            OpId::Rshift => rshift_raw(p, shift_amount(q)),
            OpId::Arsh => arsh_raw(p, shift_amount(q)),
            OpId::KernMul => kern_mul_raw(p, q),
            OpId::BitwiseMul => bitwise_mul_raw(p, q),
            OpId::BitwiseMulOpt => bitwise_mul_opt_raw(p, q),
            OpId::OurMul => our_mul_raw(p, q),
            OpId::OurMulSimplified => our_mul_simplified_raw(p, q),
        }
    }

    /// The concrete `n`-bit machine operation this operator abstracts.
    pub fn concrete(self) -> ConcreteOp {
        let eval: fn(u64, u64, u32) -> u64 = match self {
            OpId::Add => |x, y, w| x.wrapping_add(y) & width_mask(w),
            OpId::Sub => |x, y, w| x.wrapping_sub(y) & width_mask(w),
            OpId::And => |x, y, _| x & y,
            OpId::Or => |x, y, _| x | y,
            OpId::Xor => |x, y, _| x ^ y,
            OpId::Lshift => |x, y, w| {
                if y >= w as u64 {
                    0
                } else {
                    (x << y) & width_mask(w)
                }
            },
            OpId::Rshift => |x, y, w| if y >= w as u64 { 0 } else { x >> y },
            OpId::Arsh => |x, y, w| {
                let k = y.min(w as u64 - 1);
                (sign_extend(x, w) >> k) as u64 & width_mask(w)
            },
            _ => |x, y, w| x.wrapping_mul(y) & width_mask(w),
        };
        ConcreteOp {
            name: self.name(),
            eval,
        }
    }

    /// Second-operand domain for exhaustive sweeps: every tnum of the width
    /// for binary operators, the constants `0..=width` for shifts.
    pub fn rhs_domain(self, width: u32) -> Result<Vec<Tnum>> {
        if self.is_shift() {
            (0..=u64::from(width).min(width_mask(width)))
                .map(|k| Tnum::constant(k, width))
                .collect()
        } else {
            Tnum::enumerate(width)
        }
    }
}

#[inline]
fn shift_amount(q: Tnum) -> u32 {
    q.value().min(u64::from(u32::MAX)) as u32
}

impl fmt::Display for OpId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for OpId {
    type Err = TnumError;

    fn from_str(s: &str) -> Result<OpId> {
        OpId::ALL
            .into_iter()
            .find(|op| op.name() == s)
            .ok_or_else(|| TnumError::Parse {
                position: 0,
                message: format!("unknown operator {s:?}"),
            })
    }
}
