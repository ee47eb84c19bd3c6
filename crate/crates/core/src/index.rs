//! Binary digit bookkeeping for Walsh–Paley indices.
//!
//! An index `n = Σ ε_j(n) 2^j` is read through its digits `ε_j(n)`, its
//! order `|n|` (position of the leading digit) and the two truncations
//! `n^(s) = Σ_{j≥s} ε_j(n) 2^j` and `n(s) = Σ_{j≤s} ε_j(n) 2^j`.

use serde::{Deserialize, Serialize};
use std::fmt;

use crate::error::{Error, Result};

/// A nonnegative Walsh–Paley index.
///
/// Stored as `u128` so that the block constructions in [`crate::witness`]
/// can address scales up to `2^127` without materializing anything at that
/// size.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct WalshIndex(pub u128);

/// The four digit quantities reported by [`WalshIndex::bit_digits`].
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct BitDigits {
    pub order: u32,
    pub digit: u8,
    pub upper: u128,
    pub lower: u128,
}

impl WalshIndex {
    pub const fn new(value: u128) -> Self {
        WalshIndex(value)
    }

    pub const fn value(self) -> u128 {
        self.0
    }

    /// `ε_j(n)`; zero for every `j ≥ 128`.
    pub const fn digit(self, j: u32) -> u8 {
        if j >= 128 {
            0
        } else {
            ((self.0 >> j) & 1) as u8
        }
    }

    /// `|n| = max{s : ε_s(n) = 1}`. Undefined for `n = 0`.
    pub fn order(self) -> Result<u32> {
        if self.0 == 0 {
            return Err(Error::Domain("order |n| is undefined for n = 0".into()));
        }
        Ok(127 - self.0.leading_zeros())
    }

    /// `n^(s)`: the digits at positions `≥ s`.
    pub const fn upper(self, s: u32) -> u128 {
        if s >= 128 {
            0
        } else {
            (self.0 >> s) << s
        }
    }

    /// `n(s)`: the digits at positions `≤ s`.
    pub const fn lower(self, s: u32) -> u128 {
        if s >= 127 {
            self.0
        } else {
            self.0 & ((1u128 << (s + 1)) - 1)
        }
    }

    /// Positions of the nonzero digits, ascending.
    pub fn ones(self) -> impl Iterator<Item = u32> {
        let v = self.0;
        (0..128u32).filter(move |&j| (v >> j) & 1 == 1)
    }

    /// `(|n|, ε_s(n), n^(s), n(s))`.
    pub fn bit_digits(self, s: u32) -> Result<BitDigits> {
        Ok(BitDigits {
            order: self.order()?,
            digit: self.digit(s),
            upper: self.upper(s),
            lower: self.lower(s),
        })
    }
}

impl From<u64> for WalshIndex {
    fn from(v: u64) -> Self {
        WalshIndex(v as u128)
    }
}

impl From<u128> for WalshIndex {
    fn from(v: u128) -> Self {
        WalshIndex(v)
    }
}

impl From<usize> for WalshIndex {
    fn from(v: usize) -> Self {
        WalshIndex(v as u128)
    }
}

impl fmt::Display for WalshIndex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// `|n|` for a nonzero machine integer.
pub(crate) fn order_of(n: u128) -> u32 {
    debug_assert!(n > 0);
    127 - n.leading_zeros()
}
