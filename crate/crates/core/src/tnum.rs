//! The tristate number itself.
//!
//! A tnum of width `n` is a pair of `n`-bit words `(value, mask)`. A set mask
//! bit marks an unknown trit; where the mask is clear the value bit holds the
//! known bit. Only pairs with `value & mask == 0` are representable, so there
//! is no bottom element: every `Tnum` denotes a nonempty set of words.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Result, TnumError};

pub const MAX_WIDTH: u32 = 64;

/// All-ones word of the given width.
#[inline]
pub(crate) fn width_mask(width: u32) -> u64 {
    if width >= 64 {
        u64::MAX
    } else {
        (1u64 << width) - 1
    }
}

pub(crate) fn check_width(width: u32) -> Result<()> {
    if (1..=MAX_WIDTH).contains(&width) {
        Ok(())
    } else {
        Err(TnumError::WidthRange(width))
    }
}

pub(crate) fn check_word(field: &'static str, word: u64, width: u32) -> Result<()> {
    if word & !width_mask(width) != 0 {
        Err(TnumError::BitsAboveWidth { field, word, width })
    } else {
        Ok(())
    }
}

pub(crate) fn same_width(a: Tnum, b: Tnum) -> Result<u32> {
    if a.width == b.width {
        Ok(a.width)
    } else {
        Err(TnumError::WidthMismatch {
            left: a.width,
            right: b.width,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Trit {
    Zero,
    One,
    Unknown,
}

impl Trit {
    pub fn to_char(self) -> char {
        match self {
            Trit::Zero => '0',
            Trit::One => '1',
            Trit::Unknown => 'x',
        }
    }
}

/// Outcome of comparing two tnums under the abstract order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Order {
    Equal,
    LeftMorePrecise,
    RightMorePrecise,
    Incomparable,
}

impl Order {
    pub fn flip(self) -> Order {
        match self {
            Order::LeftMorePrecise => Order::RightMorePrecise,
            Order::RightMorePrecise => Order::LeftMorePrecise,
            other => other,
        }
    }
}

/// A well-formed tristate number of width 1..=64.
///
/// The derived `Ord` (width, then value, then mask) is only used for
/// deterministic witness selection; the abstract order is [`Tnum::compare`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Tnum {
    width: u32,
    value: u64,
    mask: u64,
}

impl Tnum {
    /// Builds a tnum, rejecting ill-formed pairs and bits above `width`.
    pub fn new(value: u64, mask: u64, width: u32) -> Result<Tnum> {
        check_width(width)?;
        check_word("value", value, width)?;
        check_word("mask", mask, width)?;
        if value & mask != 0 {
            return Err(TnumError::IllFormed { value, mask });
        }
        Ok(Tnum { width, value, mask })
    }

    /// Caller guarantees well-formedness and truncation.
    #[inline]
    pub(crate) fn from_parts(value: u64, mask: u64, width: u32) -> Tnum {
        debug_assert!(value & mask == 0, "ill-formed {value:#x}/{mask:#x}");
        debug_assert!((value | mask) & !width_mask(width) == 0);
        Tnum { width, value, mask }
    }

    /// Every word of the given width.
    pub fn top(width: u32) -> Result<Tnum> {
        check_width(width)?;
        Ok(Tnum::from_parts(0, width_mask(width), width))
    }

    pub fn constant(x: u64, width: u32) -> Result<Tnum> {
        Tnum::new(x, 0, width)
    }

    #[inline]
    pub fn value(self) -> u64 {
        self.value
    }

    #[inline]
    pub fn mask(self) -> u64 {
        self.mask
    }

    #[inline]
    pub fn width(self) -> u32 {
        self.width
    }

    #[inline]
    pub(crate) fn limit(self) -> u64 {
        width_mask(self.width)
    }

    pub fn is_constant(self) -> bool {
        self.mask == 0
    }

    pub fn unknown_count(self) -> u32 {
        self.mask.count_ones()
    }

    /// Number of concrete words represented: `2^popcount(mask)`.
    pub fn cardinality(self) -> u128 {
        1u128 << self.mask.count_ones()
    }

    pub fn trit_at(self, index: u32) -> Result<Trit> {
        if index >= self.width {
            return Err(TnumError::IndexRange {
                index,
                width: self.width,
            });
        }
        Ok(self.trit(index))
    }

    #[inline]
    pub(crate) fn trit(self, index: u32) -> Trit {
        if (self.mask >> index) & 1 == 1 {
            Trit::Unknown
        } else if (self.value >> index) & 1 == 1 {
            Trit::One
        } else {
            Trit::Zero
        }
    }

    /// Whether `x` is one of the words this tnum represents.
    pub fn contains(self, x: u64) -> Result<bool> {
        check_word("member", x, self.width)?;
        Ok(self.contains_word(x))
    }

    #[inline]
    pub(crate) fn contains_word(self, x: u64) -> bool {
        x & !self.mask == self.value
    }

    /// `self ⊑ other`: every unknown trit of `self` is unknown in `other`
    /// and every known trit of `other` is identical in `self`.
    #[inline]
    pub(crate) fn refines(self, other: Tnum) -> bool {
        self.mask & !other.mask == 0 && (self.value ^ other.value) & !other.mask == 0
    }

    pub fn compare(self, other: Tnum) -> Result<Order> {
        same_width(self, other)?;
        Ok(self.compare_unchecked(other))
    }

    #[inline]
    pub(crate) fn compare_unchecked(self, other: Tnum) -> Order {
        if self == other {
            Order::Equal
        } else if self.refines(other) {
            Order::LeftMorePrecise
        } else if other.refines(self) {
            Order::RightMorePrecise
        } else {
            Order::Incomparable
        }
    }

    /// Parses a trit string (`0`, `1`, and `x`/`X`/`μ`/`?` for unknown, most
    /// significant trit first) or the `v=<hex>,m=<hex>` form.
    ///
    /// Trit strings shorter than `width` are zero-extended on the left.
    pub fn parse(text: &str, width: u32) -> Result<Tnum> {
        check_width(width)?;
        let text = text.trim();
        if text.starts_with("v=") {
            return parse_hex_form(text, width);
        }
        let trits: Vec<char> = text.chars().collect();
        if trits.is_empty() {
            return Err(TnumError::Parse {
                position: 0,
                message: "empty tnum".into(),
            });
        }
        if trits.len() > width as usize {
            return Err(TnumError::Parse {
                position: width as usize,
                message: format!("{} trits do not fit width {width}", trits.len()),
            });
        }
        let (mut value, mut mask) = (0u64, 0u64);
        for (position, c) in trits.iter().enumerate() {
            value <<= 1;
            mask <<= 1;
            match c {
                '0' => {}
                '1' => value |= 1,
                'x' | 'X' | 'μ' | '?' => mask |= 1,
                other => {
                    return Err(TnumError::Parse {
                        position,
                        message: format!("unexpected character {other:?}"),
                    })
                }
            }
        }
        Ok(Tnum::from_parts(value, mask, width))
    }

    /// `v=0x..,m=0x..` with lowercase hex.
    pub fn to_hex_string(self) -> String {
        format!("v={:#x},m={:#x}", self.value, self.mask)
    }

    /// Enumerates all `3^width` well-formed tnums in base-3 order
    /// (trit 0 least significant; digit 0 = `0`, 1 = `1`, 2 = unknown).
    pub fn enumerate(width: u32) -> Result<Vec<Tnum>> {
        const LIMIT: u32 = 16;
        check_width(width)?;
        if width > LIMIT {
            return Err(TnumError::WidthTooLargeForEnumeration {
                width,
                limit: LIMIT,
            });
        }
        let count = 3usize.pow(width);
        let mut out = Vec::with_capacity(count);
        for mut index in 0..count {
            let (mut value, mut mask) = (0u64, 0u64);
            for bit in 0..width {
                match index % 3 {
                    1 => value |= 1 << bit,
                    2 => mask |= 1 << bit,
                    _ => {}
                }
                index /= 3;
            }
            out.push(Tnum::from_parts(value, mask, width));
        }
        Ok(out)
    }
}

pub(crate) fn parse_hex_word(text: &str, offset: usize) -> Result<u64> {
    let digits = text
        .strip_prefix("0x")
        .or_else(|| text.strip_prefix("0X"))
        .unwrap_or(text);
    u64::from_str_radix(digits, 16).map_err(|e| TnumError::Parse {
        position: offset,
        message: format!("bad hex word {text:?}: {e}"),
    })
}

fn parse_hex_form(text: &str, width: u32) -> Result<Tnum> {
    let (v_part, m_part) = text.split_once(',').ok_or_else(|| TnumError::Parse {
        position: text.len(),
        message: "expected \"v=<hex>,m=<hex>\"".into(),
    })?;
    let m_offset = v_part.len() + 1;
    let m_digits = m_part.trim().strip_prefix("m=").ok_or(TnumError::Parse {
        position: m_offset,
        message: "expected \"m=\"".into(),
    })?;
    let value = parse_hex_word(v_part[2..].trim(), 2)?;
    let mask = parse_hex_word(m_digits, m_offset + 2)?;
    Tnum::new(value, mask, width)
}

/// JSON form: `{"v": "0x..", "m": "0x..", "width": n}` with lowercase hex.
#[derive(Serialize, Deserialize)]
struct TnumRepr {
    v: String,
    m: String,
    width: u32,
}

impl Serialize for Tnum {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        TnumRepr {
            v: format!("{:#x}", self.value),
            m: format!("{:#x}", self.mask),
            width: self.width,
        }
        .serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for Tnum {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> std::result::Result<Tnum, D::Error> {
        use serde::de::Error;
        let repr = TnumRepr::deserialize(deserializer)?;
        let value = parse_hex_word(&repr.v, 0).map_err(D::Error::custom)?;
        let mask = parse_hex_word(&repr.m, 0).map_err(D::Error::custom)?;
        Tnum::new(value, mask, repr.width).map_err(D::Error::custom)
    }
}

impl fmt::Display for Tnum {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s: String = (0..self.width)
            .rev()
            .map(|k| self.trit(k).to_char())
            .collect();
        f.write_str(&s)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn t(v: u64, m: u64, w: u32) -> Tnum {
        Tnum::new(v, m, w).unwrap()
    }

    #[test]
    fn make_examples() {
        assert_eq!(t(0b010, 0b100, 3).to_string(), "x10");
        assert_eq!(
            Tnum::new(0b001, 0b001, 3),
            Err(TnumError::IllFormed { value: 1, mask: 1 })
        );
        let zero = t(0, 0, 64);
        assert!(zero.is_constant());
        assert_eq!(zero.value(), 0);
    }

    #[test]
    fn make_rejects_bad_widths_and_high_bits() {
        assert_eq!(Tnum::new(0, 0, 0), Err(TnumError::WidthRange(0)));
        assert_eq!(Tnum::new(0, 0, 65), Err(TnumError::WidthRange(65)));
        assert!(matches!(
            Tnum::new(0b1000, 0, 3),
            Err(TnumError::BitsAboveWidth { field: "value", .. })
        ));
        assert!(matches!(
            Tnum::new(0, 0b1000, 3),
            Err(TnumError::BitsAboveWidth { field: "mask", .. })
        ));
        assert!(Tnum::new(u64::MAX, 0, 64).is_ok());
    }

    #[test]
    fn trit_access() {
        let p = t(0b010, 0b100, 3);
        assert_eq!(p.trit_at(2), Ok(Trit::Unknown));
        assert_eq!(p.trit_at(1), Ok(Trit::One));
        assert_eq!(p.trit_at(0), Ok(Trit::Zero));
        assert_eq!(
            p.trit_at(3),
            Err(TnumError::IndexRange { index: 3, width: 3 })
        );
    }

    #[test]
    fn membership() {
        assert_eq!(t(0b010, 0b100, 3).contains(6), Ok(true));
        assert_eq!(t(0b001, 0b110, 3).contains(2), Ok(false));
        assert!(matches!(
            t(0, 0b111, 3).contains(8),
            Err(TnumError::BitsAboveWidth { .. })
        ));
        for p in Tnum::enumerate(4).unwrap() {
            assert!(p.contains(p.value()).unwrap());
        }
    }

    #[test]
    fn membership_agrees_with_brute_force_enumeration() {
        for width in 1..=8 {
            for p in Tnum::enumerate(width).unwrap() {
                for x in 0..(1u64 << width) {
                    // bit-by-bit: every known trit must match
                    let by_trits = (0..width).all(|k| match p.trit(k) {
                        Trit::Unknown => true,
                        Trit::One => (x >> k) & 1 == 1,
                        Trit::Zero => (x >> k) & 1 == 0,
                    });
                    assert_eq!(p.contains_word(x), by_trits, "{p} {x:#b}");
                }
            }
        }
    }

    #[test]
    fn compare_examples() {
        let one_mu = t(0b10, 0b01, 2);
        let mu_mu = t(0, 0b11, 2);
        assert_eq!(one_mu.compare(mu_mu), Ok(Order::LeftMorePrecise));
        assert_eq!(mu_mu.compare(one_mu), Ok(Order::RightMorePrecise));
        assert_eq!(one_mu.compare(one_mu), Ok(Order::Equal));
        assert_eq!(
            t(0b10, 0, 2).compare(t(0b01, 0, 2)),
            Ok(Order::Incomparable)
        );
        assert_eq!(
            t(0, 0, 2).compare(t(0, 0, 3)),
            Err(TnumError::WidthMismatch { left: 2, right: 3 })
        );
    }

    #[test]
    fn compare_is_a_partial_order() {
        for width in 1..=4 {
            let all = Tnum::enumerate(width).unwrap();
            for &a in &all {
                assert_eq!(a.compare_unchecked(a), Order::Equal);
                for &b in &all {
                    let ab = a.compare_unchecked(b);
                    assert_eq!(ab, b.compare_unchecked(a).flip());
                    if ab == Order::Equal {
                        assert_eq!(a, b);
                    }
                    if !a.refines(b) {
                        continue;
                    }
                    for &c in &all {
                        if b.refines(c) {
                            assert!(a.refines(c), "{a} {b} {c}");
                        }
                    }
                }
            }
        }
    }

    #[test]
    fn order_matches_set_inclusion() {
        for width in 1..=4 {
            let all = Tnum::enumerate(width).unwrap();
            for &a in &all {
                for &b in &all {
                    let included = (0..1u64 << width)
                        .filter(|&x| a.contains_word(x))
                        .all(|x| b.contains_word(x));
                    assert_eq!(a.refines(b), included);
                }
            }
        }
    }

    #[test]
    fn parse_and_format() {
        assert_eq!(Tnum::parse("x10", 3), Ok(t(0b010, 0b100, 3)));
        assert_eq!(Tnum::parse("μ10", 3), Ok(t(0b010, 0b100, 3)));
        assert_eq!(Tnum::parse("?10", 3), Ok(t(0b010, 0b100, 3)));
        assert_eq!(t(0, 0b1111, 4).to_string(), "xxxx");
        assert_eq!(Tnum::parse("v=0x2,m=0x4", 3), Ok(t(2, 4, 3)));
        assert_eq!(Tnum::parse("v=0xCC,m=0x23", 9), Ok(t(0xcc, 0x23, 9)));
        assert_eq!(t(2, 4, 3).to_hex_string(), "v=0x2,m=0x4");
        assert_eq!(Tnum::parse("x1", 3), Ok(t(0b001, 0b010, 3)));
    }

    #[test]
    fn parse_errors() {
        assert_eq!(
            Tnum::parse("01a", 3),
            Err(TnumError::Parse {
                position: 2,
                message: "unexpected character 'a'".into()
            })
        );
        assert!(matches!(
            Tnum::parse("0000", 3),
            Err(TnumError::Parse { .. })
        ));
        assert!(matches!(Tnum::parse("", 3), Err(TnumError::Parse { .. })));
        assert_eq!(
            Tnum::parse("v=0x1,m=0x1", 3),
            Err(TnumError::IllFormed { value: 1, mask: 1 })
        );
        assert!(matches!(
            Tnum::parse("v=0x1;m=0x1", 3),
            Err(TnumError::Parse { .. })
        ));
        assert!(matches!(
            Tnum::parse("v=0xzz,m=0x0", 3),
            Err(TnumError::Parse { position: 2, .. })
        ));
    }

    #[test]
    fn round_trips_small_widths() {
        for width in 1..=6 {
            for p in Tnum::enumerate(width).unwrap() {
                assert_eq!(Tnum::parse(&p.to_string(), width), Ok(p));
                assert_eq!(Tnum::parse(&p.to_hex_string(), width), Ok(p));
            }
        }
    }

    #[test]
    fn json_form() {
        let p = t(0x2, 0x4, 3);
        let json = serde_json::to_string(&p).unwrap();
        assert_eq!(json, r#"{"v":"0x2","m":"0x4","width":3}"#);
        assert_eq!(serde_json::from_str::<Tnum>(&json).unwrap(), p);
        assert!(serde_json::from_str::<Tnum>(r#"{"v":"0x1","m":"0x1","width":3}"#).is_err());
    }

    #[test]
    fn top_const_cardinality() {
        let top = Tnum::top(2).unwrap();
        assert_eq!(top.to_string(), "xx");
        assert_eq!(top.cardinality(), 4);
        let c = Tnum::constant(5, 4).unwrap();
        assert_eq!((c.value(), c.mask(), c.cardinality()), (5, 0, 1));
        assert_eq!(t(0b010, 0b100, 3).cardinality(), 2);
        assert_eq!(Tnum::top(64).unwrap().cardinality(), 1u128 << 64);
    }

    #[test]
    fn enumeration_counts() {
        for width in 1..=10 {
            let all = Tnum::enumerate(width).unwrap();
            assert_eq!(all.len(), 3usize.pow(width));
            let mut dedup = all.clone();
            dedup.sort();
            dedup.dedup();
            assert_eq!(dedup.len(), all.len());
        }
        assert!(matches!(
            Tnum::enumerate(17),
            Err(TnumError::WidthTooLargeForEnumeration { .. })
        ));
    }
}
