//! Fixed-length bitstrings addressing computational basis states.
//!
//! Qubit 0 is the leftmost character of the textual form and the most
//! significant bit of [`Bitstring::value`], so the value doubles as the index
//! of the basis state in a dense `2^n` vector.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::Error;

pub const MAX_BITS: usize = 64;

#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Bitstring {
    len: u8,
    value: u64,
}

impl Bitstring {
    pub fn new(len: usize, value: u64) -> Result<Self, Error> {
        if len > MAX_BITS {
            return Err(Error::BadBitstring(format!("length {len}")));
        }
        if len < 64 && value >> len != 0 {
            return Err(Error::BadBitstring(format!("value {value} does not fit in {len} bits")));
        }
        Ok(Self::from_raw(len, value))
    }

    /// Caller guarantees `len <= 64` and `value < 2^len`.
    #[inline]
    pub(crate) fn from_raw(len: usize, value: u64) -> Self {
        debug_assert!(len <= MAX_BITS);
        Bitstring { len: len as u8, value }
    }

    pub fn zeros(len: usize) -> Result<Self, Error> {
        Self::new(len, 0)
    }

    pub fn from_bits(bits: &[bool]) -> Result<Self, Error> {
        let value = bits.iter().fold(0u64, |acc, &b| (acc << 1) | b as u64);
        Self::new(bits.len(), value)
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.len as usize
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    #[inline]
    pub fn value(&self) -> u64 {
        self.value
    }

    #[inline]
    pub fn index(&self) -> usize {
        self.value as usize
    }

    /// Bit of qubit `q` (0 = leftmost).
    #[inline]
    pub fn bit(&self, q: usize) -> bool {
        (self.value >> (self.len() - 1 - q)) & 1 == 1
    }

    pub fn bits(&self) -> Vec<bool> {
        (0..self.len()).map(|q| self.bit(q)).collect()
    }

    /// All strings of length `len`, in index order.
    pub fn all(len: usize) -> impl Iterator<Item = Bitstring> {
        assert!(len > 0 && len < 64, "enumeration needs 0 < len < 64");
        (0..1u64 << len).map(move |v| Bitstring::from_raw(len, v))
    }

    pub fn hamming_distance(&self, other: &Bitstring) -> u32 {
        (self.value ^ other.value).count_ones()
    }
}

impl fmt::Display for Bitstring {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for q in 0..self.len() {
            f.write_str(if self.bit(q) { "1" } else { "0" })?;
        }
        Ok(())
    }
}

impl fmt::Debug for Bitstring {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "\"{self}\"")
    }
}

impl FromStr for Bitstring {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        if s.len() > MAX_BITS {
            return Err(Error::BadBitstring(s.to_string()));
        }
        let mut value = 0u64;
        for c in s.chars() {
            value = (value << 1)
                | match c {
                    '0' => 0,
                    '1' => 1,
                    _ => return Err(Error::BadBitstring(s.to_string())),
                };
        }
        Ok(Bitstring::from_raw(s.len(), value))
    }
}

impl Serialize for Bitstring {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for Bitstring {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}
