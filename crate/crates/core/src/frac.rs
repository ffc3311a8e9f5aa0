//! Arbitrary-precision binary fractions.
//!
//! Bit `p` (1-based) carries value `2^-p`. Used for the compactor progress
//! measure, which can need more than 64 bits of precision.

use alloc::vec::Vec;
use core::cmp::Ordering;

#[derive(Clone, Debug, Default)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct BinaryFraction {
    int: u64,
    // Bit p lives in words[(p - 1) / 64] at mask 1 << (63 - (p - 1) % 64),
    // so word-wise comparison is numeric comparison.
    words: Vec<u64>,
}

fn locate(p: usize) -> (usize, u64) {
    debug_assert!(p >= 1);
    let i = p - 1;
    (i / 64, 1u64 << (63 - i % 64))
}

impl BinaryFraction {
    pub fn zero() -> Self {
        Self::default()
    }

    pub fn is_zero(&self) -> bool {
        self.int == 0 && self.words.iter().all(|&w| w == 0)
    }

    /// Integer part; a progress measure is valid only while this is 0.
    pub fn int_part(&self) -> u64 {
        self.int
    }

    pub fn bit(&self, p: usize) -> bool {
        let (w, m) = locate(p);
        self.words.get(w).is_some_and(|&x| x & m != 0)
    }

    pub fn set_bit(&mut self, p: usize, on: bool) {
        let (w, m) = locate(p);
        if self.words.len() <= w {
            if !on {
                return;
            }
            self.words.resize(w + 1, 0);
        }
        if on {
            self.words[w] |= m;
        } else {
            self.words[w] &= !m;
        }
    }

    /// Adds `2^-p`; `p = 0` adds one.
    pub fn add_pow2(&mut self, p: usize) {
        if p == 0 {
            self.int += 1;
            return;
        }
        let (mut w, m) = locate(p);
        if self.words.len() <= w {
            self.words.resize(w + 1, 0);
        }
        let (v, mut carry) = self.words[w].overflowing_add(m);
        self.words[w] = v;
        while carry {
            if w == 0 {
                self.int += 1;
                break;
            }
            w -= 1;
            let (v, c) = self.words[w].overflowing_add(1);
            self.words[w] = v;
            carry = c;
        }
    }

    /// Clears every bit at a position greater than `p`.
    pub fn truncate_after(&mut self, p: usize) {
        let full = p / 64;
        if full < self.words.len() {
            let rem = p % 64;
            if rem == 0 {
                self.words.truncate(full);
            } else {
                self.words[full] &= !(u64::MAX >> rem);
                self.words.truncate(full + 1);
            }
        }
        while self.words.last() == Some(&0) {
            self.words.pop();
        }
    }

    /// Position of the least significant set fractional bit.
    pub fn lowest_set_bit(&self) -> Option<usize> {
        self.words
            .iter()
            .enumerate()
            .rev()
            .find(|(_, &w)| w != 0)
            .map(|(i, &w)| i * 64 + 64 - w.trailing_zeros() as usize)
    }

    pub fn to_f64(&self) -> f64 {
        let mut v = self.int as f64;
        let mut scale = 1.0;
        for &w in &self.words {
            scale /= 18446744073709551616.0;
            if scale == 0.0 {
                break;
            }
            v += w as f64 * scale;
        }
        v
    }

    /// Reads a fraction from its binary digits after the point, e.g. "0110".
    pub fn from_bits(digits: &str) -> Self {
        let mut f = Self::zero();
        for (i, c) in digits.chars().enumerate() {
            if c == '1' {
                f.set_bit(i + 1, true);
            }
        }
        f
    }
}

impl PartialEq for BinaryFraction {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl Eq for BinaryFraction {}

impl PartialOrd for BinaryFraction {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for BinaryFraction {
    fn cmp(&self, other: &Self) -> Ordering {
        self.int.cmp(&other.int).then_with(|| {
            let n = self.words.len().max(other.words.len());
            (0..n)
                .map(|i| {
                    let a = self.words.get(i).copied().unwrap_or(0);
                    let b = other.words.get(i).copied().unwrap_or(0);
                    a.cmp(&b)
                })
                .find(|o| o.is_ne())
                .unwrap_or(Ordering::Equal)
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn carry_crosses_words() {
        let mut f = BinaryFraction::zero();
        f.add_pow2(64);
        f.add_pow2(64);
        assert!(f.bit(63));
        assert!(!f.bit(64));
        assert_eq!(f.lowest_set_bit(), Some(63));
    }

    #[test]
    fn overflow_reaches_integer_part() {
        let mut f = BinaryFraction::from_bits("11");
        f.add_pow2(2);
        assert_eq!(f.int_part(), 1);
        assert!(f.lowest_set_bit().is_none());
    }

    #[test]
    fn truncate_and_compare() {
        let mut f = BinaryFraction::from_bits("0110");
        f.truncate_after(2);
        assert_eq!(f, BinaryFraction::from_bits("01"));
        assert!(BinaryFraction::from_bits("01") < BinaryFraction::from_bits("0101"));
        let mut g = BinaryFraction::zero();
        g.add_pow2(130);
        g.truncate_after(129);
        assert!(g.is_zero());
    }

    #[test]
    fn float_view() {
        assert_eq!(BinaryFraction::from_bits("101").to_f64(), 0.625);
    }
}
