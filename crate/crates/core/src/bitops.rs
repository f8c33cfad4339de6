//! Bitwise and shift transfer functions, following the Linux kernel's
//! constructions generalized to any width.
//!
//! Shift amounts are concrete. Amounts at or beyond the width saturate:
//! logical shifts produce the zero constant and the arithmetic shift produces
//! the sign trit replicated across the whole word.

use crate::error::Result;
use crate::tnum::{same_width, width_mask, Tnum};

#[inline]
pub(crate) fn and_raw(p: Tnum, q: Tnum) -> Tnum {
    let alpha = p.value() | p.mask();
    let beta = q.value() | q.mask();
    let v = p.value() & q.value();
    Tnum::from_parts(v, alpha & beta & !v, p.width())
}

#[inline]
pub(crate) fn or_raw(p: Tnum, q: Tnum) -> Tnum {
    let v = p.value() | q.value();
    let mu = p.mask() | q.mask();
    Tnum::from_parts(v, mu & !v, p.width())
}

#[inline]
pub(crate) fn xor_raw(p: Tnum, q: Tnum) -> Tnum {
    let v = p.value() ^ q.value();
    let mu = p.mask() | q.mask();
    Tnum::from_parts(v & !mu, mu, p.width())
}

#[inline]
pub(crate) fn lshift_raw(t: Tnum, k: u32) -> Tnum {
    if k >= t.width() {
        return Tnum::from_parts(0, 0, t.width());
    }
    let limit = t.limit();
    Tnum::from_parts((t.value() << k) & limit, (t.mask() << k) & limit, t.width())
}

#[inline]
pub(crate) fn rshift_raw(t: Tnum, k: u32) -> Tnum {
    if k >= t.width() {
        return Tnum::from_parts(0, 0, t.width());
    }
    Tnum::from_parts(t.value() >> k, t.mask() >> k, t.width())
}

/// Sign-extends an `width`-bit word to 64 bits.
#[inline]
pub(crate) fn sign_extend(word: u64, width: u32) -> i64 {
    let unused = 64 - width;
    ((word << unused) as i64) >> unused
}

#[inline]
pub(crate) fn arsh_raw(t: Tnum, k: u32) -> Tnum {
    let width = t.width();
    let k = k.min(width - 1);
    let limit = width_mask(width);
    let value = (sign_extend(t.value(), width) >> k) as u64 & limit;
    let mask = (sign_extend(t.mask(), width) >> k) as u64 & limit;
    Tnum::from_parts(value, mask, width)
}

pub fn tnum_and(p: Tnum, q: Tnum) -> Result<Tnum> {
    same_width(p, q)?;
    Ok(and_raw(p, q))
}

pub fn tnum_or(p: Tnum, q: Tnum) -> Result<Tnum> {
    same_width(p, q)?;
    Ok(or_raw(p, q))
}

pub fn tnum_xor(p: Tnum, q: Tnum) -> Result<Tnum> {
    same_width(p, q)?;
    Ok(xor_raw(p, q))
}

pub fn tnum_lshift(t: Tnum, k: u32) -> Tnum {
    lshift_raw(t, k)
}

pub fn tnum_rshift(t: Tnum, k: u32) -> Tnum {
    rshift_raw(t, k)
}

/// Arithmetic right shift: the sign trit of both fields fills the vacated
/// positions, so an unknown sign floods unknown trits in from the top.
pub fn tnum_arsh(t: Tnum, k: u32) -> Tnum {
    arsh_raw(t, k)
}
