//! Fixed-width bitsets over catalog ordinals.

use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;
use core::fmt;

use serde::{Deserialize, Serialize};

use crate::error::Error;

/// A bitset whose width is fixed at construction (the catalog size).
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct PropSet {
    width: usize,
    words: Vec<u64>,
}

impl PropSet {
    pub fn empty(width: usize) -> Self {
        PropSet {
            width,
            words: vec![0; width.div_ceil(64)],
        }
    }

    pub fn from_ordinals(width: usize, ordinals: impl IntoIterator<Item = usize>) -> Self {
        let mut set = Self::empty(width);
        for ordinal in ordinals {
            set.insert(ordinal);
        }
        set
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn insert(&mut self, ordinal: usize) {
        assert!(ordinal < self.width, "ordinal {ordinal} out of range {}", self.width);
        self.words[ordinal / 64] |= 1 << (ordinal % 64);
    }

    pub fn remove(&mut self, ordinal: usize) {
        if ordinal < self.width {
            self.words[ordinal / 64] &= !(1 << (ordinal % 64));
        }
    }

    pub fn contains(&self, ordinal: usize) -> bool {
        ordinal < self.width && self.words[ordinal / 64] & (1 << (ordinal % 64)) != 0
    }

    pub fn len(&self) -> usize {
        self.words.iter().map(|w| w.count_ones() as usize).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.words.iter().all(|&w| w == 0)
    }

    pub fn is_subset(&self, other: &PropSet) -> bool {
        debug_assert_eq!(self.width, other.width);
        self.words.iter().zip(&other.words).all(|(a, b)| a & !b == 0)
    }

    /// Strict inclusion.
    pub fn is_proper_subset(&self, other: &PropSet) -> bool {
        self.is_subset(other) && self != other
    }

    pub fn is_disjoint(&self, other: &PropSet) -> bool {
        self.words.iter().zip(&other.words).all(|(a, b)| a & b == 0)
    }

    pub fn union_with(&mut self, other: &PropSet) {
        for (a, b) in self.words.iter_mut().zip(&other.words) {
            *a |= b;
        }
    }

    /// Number of ordinals in `self` that are missing from `other`.
    pub fn difference_len(&self, other: &PropSet) -> usize {
        self.words
            .iter()
            .zip(&other.words)
            .map(|(a, b)| (a & !b).count_ones() as usize)
            .sum()
    }

    pub fn iter(&self) -> impl Iterator<Item = usize> + '_ {
        self.words.iter().enumerate().flat_map(|(i, &word)| {
            let mut w = word;
            core::iter::from_fn(move || {
                if w == 0 {
                    return None;
                }
                let bit = w.trailing_zeros() as usize;
                w &= w - 1;
                Some(i * 64 + bit)
            })
        })
    }

    /// Lowercase hex, one byte per pair, byte `k` holding ordinals `8k..8k+8`
    /// with ordinal `8k + j` in bit `j`.
    pub fn to_hex(&self) -> String {
        const DIGITS: &[u8; 16] = b"0123456789abcdef";
        let nbytes = self.width.div_ceil(8);
        let mut out = String::with_capacity(nbytes * 2);
        for k in 0..nbytes {
            let byte = (self.words[k / 8] >> ((k % 8) * 8)) as u8;
            out.push(DIGITS[(byte >> 4) as usize] as char);
            out.push(DIGITS[(byte & 0xf) as usize] as char);
        }
        out
    }

    pub fn from_hex(width: usize, hex: &str) -> Result<Self, Error> {
        let nbytes = width.div_ceil(8);
        if hex.len() != nbytes * 2 {
            return Err(Error::Malformed("bitset hex has the wrong width"));
        }
        let mut set = Self::empty(width);
        for (k, pair) in hex.as_bytes().chunks(2).enumerate() {
            let hi = hex_digit(pair[0])?;
            let lo = hex_digit(pair[1])?;
            let byte = (hi << 4 | lo) as u64;
            set.words[k / 8] |= byte << ((k % 8) * 8);
        }
        if set.iter().any(|o| o >= width) {
            return Err(Error::Malformed("bitset hex sets bits past its width"));
        }
        Ok(set)
    }
}

fn hex_digit(c: u8) -> Result<u8, Error> {
    match c {
        b'0'..=b'9' => Ok(c - b'0'),
        b'a'..=b'f' => Ok(c - b'a' + 10),
        _ => Err(Error::Malformed("bitset hex digit")),
    }
}

impl fmt::Debug for PropSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_set().entries(self.iter()).finish()
    }
}
