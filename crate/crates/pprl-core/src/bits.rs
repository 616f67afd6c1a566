//! Fixed-length bit vectors.
//!
//! Bits are stored packed MSB-first: bit position `p` lives in byte `p / 8`
//! at bit `7 - (p % 8)`. This is also the on-disk layout of every binary
//! string in the wire formats, so serialization is a plain byte copy. Padding
//! bits past `len` are kept at zero as an invariant.

use std::fmt;

use crate::error::{Error, Result};

#[derive(Clone, PartialEq, Eq, Hash)]
pub struct BitVec {
    len: usize,
    bytes: Vec<u8>,
}

impl BitVec {
    /// All-zero vector of `len` bits.
    pub fn zeros(len: usize) -> Self {
        Self {
            len,
            bytes: vec![0u8; len.div_ceil(8)],
        }
    }

    pub fn from_bools(bits: impl IntoIterator<Item = bool>) -> Self {
        let bits: Vec<bool> = bits.into_iter().collect();
        let mut v = Self::zeros(bits.len());
        for (p, b) in bits.iter().enumerate() {
            if *b {
                v.set(p);
            }
        }
        v
    }

    /// Vector of `len` bits with ones at the given positions.
    pub fn from_ones(len: usize, ones: &[usize]) -> Result<Self> {
        let mut v = Self::zeros(len);
        for &p in ones {
            if p >= len {
                return Err(Error::Shape {
                    context: "bit position".into(),
                    expected: len,
                    actual: p,
                });
            }
            v.set(p);
        }
        Ok(v)
    }

    /// Parse a string of '0'/'1' characters, most significant position first.
    pub fn from_bitstring(s: &str) -> Result<Self> {
        let mut v = Self::zeros(s.len());
        for (p, c) in s.chars().enumerate() {
            match c {
                '0' => {}
                '1' => v.set(p),
                _ => {
                    return Err(Error::Inconsistent(format!(
                        "bitstring contains non-binary character {c:?}"
                    )))
                }
            }
        }
        Ok(v)
    }

    /// Reconstruct from packed bytes. Padding bits are masked to zero.
    pub fn from_bytes(len: usize, mut bytes: Vec<u8>) -> Result<Self> {
        let expected = len.div_ceil(8);
        if bytes.len() != expected {
            return Err(Error::Shape {
                context: "packed bit-vector bytes".into(),
                expected,
                actual: bytes.len(),
            });
        }
        let tail = len % 8;
        if tail != 0 {
            if let Some(last) = bytes.last_mut() {
                *last &= 0xffu8 << (8 - tail);
            }
        }
        Ok(Self { len, bytes })
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn as_bytes(&self) -> &[u8] {
        &self.bytes
    }

    #[inline]
    pub fn get(&self, p: usize) -> bool {
        debug_assert!(p < self.len);
        self.bytes[p / 8] & (0x80 >> (p % 8)) != 0
    }

    #[inline]
    pub fn set(&mut self, p: usize) {
        debug_assert!(p < self.len);
        self.bytes[p / 8] |= 0x80 >> (p % 8);
    }

    pub fn count_ones(&self) -> usize {
        self.bytes.iter().map(|b| b.count_ones() as usize).sum()
    }

    /// Positions of the one bits, ascending.
    pub fn ones(&self) -> Vec<usize> {
        (0..self.len).filter(|&p| self.get(p)).collect()
    }

    /// Bitwise OR of `other` into `self`; lengths must match.
    pub fn or_assign(&mut self, other: &BitVec) -> Result<()> {
        if self.len != other.len {
            return Err(Error::Shape {
                context: "bitwise OR".into(),
                expected: self.len,
                actual: other.len,
            });
        }
        for (a, b) in self.bytes.iter_mut().zip(&other.bytes) {
            *a |= b;
        }
        Ok(())
    }

    /// popcount(self AND other) without materializing the intersection.
    pub fn and_count(&self, other: &BitVec) -> Result<usize> {
        if self.len != other.len {
            return Err(Error::Shape {
                context: "bitwise AND".into(),
                expected: self.len,
                actual: other.len,
            });
        }
        Ok(self
            .bytes
            .iter()
            .zip(&other.bytes)
            .map(|(a, b)| (a & b).count_ones() as usize)
            .sum())
    }

    pub fn to_bitstring(&self) -> String {
        (0..self.len)
            .map(|p| if self.get(p) { '1' } else { '0' })
            .collect()
    }
}

impl fmt::Debug for BitVec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.len <= 64 {
            write!(f, "BitVec({})", self.to_bitstring())
        } else {
            write!(f, "BitVec(len={}, ones={})", self.len, self.count_ones())
        }
    }
}

impl fmt::Display for BitVec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.to_bitstring())
    }
}
