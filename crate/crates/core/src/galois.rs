//! Concretization, abstraction and the brute-force optimal-operator oracle.
//!
//! Everything here works by enumeration and is guarded by a width limit; the
//! oracle never falls back to sampling.

use std::fmt;

use crate::error::{Result, TnumError};
use crate::tnum::{check_width, width_mask, Tnum};

/// Widest tnum [`gamma`] will enumerate.
pub const GAMMA_WIDTH_LIMIT: u32 = 16;
/// Widest operand pair [`concrete_image`] and [`optimal_abstract`] will enumerate.
pub const PAIR_WIDTH_LIMIT: u32 = 12;

fn guard(width: u32, limit: u32) -> Result<()> {
    check_width(width)?;
    if width > limit {
        Err(TnumError::WidthTooLargeForEnumeration { width, limit })
    } else {
        Ok(())
    }
}

/// A concrete binary `n`-bit operation.
#[derive(Clone, Copy)]
pub struct ConcreteOp {
    pub name: &'static str,
    pub eval: fn(u64, u64, u32) -> u64,
}

impl ConcreteOp {
    #[inline]
    pub fn call(&self, x: u64, y: u64, width: u32) -> u64 {
        (self.eval)(x, y, width)
    }
}

impl fmt::Debug for ConcreteOp {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ConcreteOp").field("name", &self.name).finish()
    }
}

/// Iterates the members of `t` in ascending order.
#[inline]
pub(crate) fn members(t: Tnum) -> impl Iterator<Item = u64> {
    let (value, mask) = (t.value(), t.mask());
    let mut next = Some(0u64);
    std::iter::from_fn(move || {
        let sub = next?;
        next = if sub == mask {
            None
        } else {
            Some(sub.wrapping_sub(mask) & mask)
        };
        Some(value | sub)
    })
}

/// A nonempty set of `n`-bit words, `n <= 16`, stored as a bitset.
#[derive(Clone, PartialEq, Eq)]
pub struct ConcreteSet {
    width: u32,
    len: usize,
    bits: Vec<u64>,
}

impl ConcreteSet {
    pub fn new(width: u32, words: impl IntoIterator<Item = u64>) -> Result<ConcreteSet> {
        guard(width, GAMMA_WIDTH_LIMIT)?;
        let mut set = ConcreteSet {
            width,
            len: 0,
            bits: vec![0; (1usize << width).div_ceil(64)],
        };
        for word in words {
            if word & !width_mask(width) != 0 {
                return Err(TnumError::BitsAboveWidth {
                    field: "member",
                    word,
                    width,
                });
            }
            set.insert(word);
        }
        if set.len == 0 {
            return Err(TnumError::EmptySet);
        }
        Ok(set)
    }

    fn insert(&mut self, word: u64) {
        let (slot, bit) = ((word / 64) as usize, 1u64 << (word % 64));
        if self.bits[slot] & bit == 0 {
            self.bits[slot] |= bit;
            self.len += 1;
        }
    }

    pub fn width(&self) -> u32 {
        self.width
    }

    pub fn len(&self) -> usize {
        self.len
    }

    /// Always false; kept for API symmetry with collections.
    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn contains(&self, word: u64) -> bool {
        word & !width_mask(self.width) == 0
            && self.bits[(word / 64) as usize] & (1u64 << (word % 64)) != 0
    }

    pub fn iter(&self) -> impl Iterator<Item = u64> + '_ {
        self.bits.iter().enumerate().flat_map(|(slot, &chunk)| {
            (0..64)
                .filter(move |b| chunk & (1u64 << b) != 0)
                .map(move |b| slot as u64 * 64 + b)
        })
    }

    pub fn min(&self) -> u64 {
        self.iter().next().expect("nonempty")
    }

    pub fn is_subset(&self, other: &ConcreteSet) -> Result<bool> {
        if self.width != other.width {
            return Err(TnumError::WidthMismatch {
                left: self.width,
                right: other.width,
            });
        }
        Ok(self
            .bits
            .iter()
            .zip(&other.bits)
            .all(|(a, b)| a & !b == 0))
    }
}

impl fmt::Debug for ConcreteSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_set().entries(self.iter()).finish()
    }
}

pub fn gamma(t: Tnum) -> Result<ConcreteSet> {
    guard(t.width(), GAMMA_WIDTH_LIMIT)?;
    ConcreteSet::new(t.width(), members(t))
}

/// Most precise tnum covering `s`: known bits are those on which every member
/// agrees.
pub fn alpha(s: &ConcreteSet) -> Tnum {
    let (and, or) = s
        .iter()
        .fold((u64::MAX, 0u64), |(a, o), x| (a & x, o | x));
    let and = and & width_mask(s.width);
    Tnum::from_parts(and, and ^ or, s.width)
}

/// `alpha` over any nonempty word sequence.
pub fn alpha_of_words(width: u32, words: impl IntoIterator<Item = u64>) -> Result<Tnum> {
    check_width(width)?;
    let mut iter = words.into_iter();
    let first = iter.next().ok_or(TnumError::EmptySet)?;
    let (and, or) = iter.fold((first, first), |(a, o), x| (a & x, o | x));
    Tnum::new(and, and ^ or, width)
}

pub fn subset(a: &ConcreteSet, b: &ConcreteSet) -> Result<bool> {
    a.is_subset(b)
}

fn check_pair(p: Tnum, q: Tnum) -> Result<u32> {
    if p.width() != q.width() {
        return Err(TnumError::WidthMismatch {
            left: p.width(),
            right: q.width(),
        });
    }
    guard(p.width(), PAIR_WIDTH_LIMIT)?;
    Ok(p.width())
}

/// `{ f(x, y) | x ∈ γ(p), y ∈ γ(q) }`.
pub fn concrete_image(f: ConcreteOp, p: Tnum, q: Tnum) -> Result<ConcreteSet> {
    let width = check_pair(p, q)?;
    ConcreteSet::new(
        width,
        members(p).flat_map(|x| members(q).map(move |y| f.call(x, y, width))),
    )
}

/// `α(f(γ(p), γ(q)))`, computed as an AND/OR fold over the image.
pub fn optimal_abstract(f: ConcreteOp, p: Tnum, q: Tnum) -> Result<Tnum> {
    check_pair(p, q)?;
    Ok(optimal_unchecked(f, p, q))
}

#[inline]
pub(crate) fn optimal_unchecked(f: ConcreteOp, p: Tnum, q: Tnum) -> Tnum {
    let width = p.width();
    let (mut and, mut or) = (u64::MAX, 0u64);
    for x in members(p) {
        for y in members(q) {
            let z = f.call(x, y, width);
            and &= z;
            or |= z;
        }
    }
    let and = and & width_mask(width);
    Tnum::from_parts(and, and ^ or, width)
}
