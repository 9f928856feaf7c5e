//! Per-row bucket and sign hashes.
//!
//! Bucket hashes are multiply-add-shift functions over 64-bit keys:
//! `(a·x + b) mod 2¹²⁸` keeps its high 64 bits, which are then reduced to
//! `[0, w)` with a multiply-high. Sign hashes are an independent
//! multiply-add-shift function whose top bit selects ±1.

use crate::noise::Xoshiro256pp;

/// Deepest sketch supported (bounds the on-stack scratch used by queries).
pub const MAX_DEPTH: usize = 64;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
struct MultiplyAddShift {
    mul: u128,
    add: u128,
}

impl MultiplyAddShift {
    fn random(rng: &mut Xoshiro256pp) -> Self {
        let mul = ((rng.next_u64() as u128) << 64) | rng.next_u64() as u128;
        let add = ((rng.next_u64() as u128) << 64) | rng.next_u64() as u128;
        Self { mul: mul | 1, add }
    }

    #[inline]
    fn hash64(&self, key: u64) -> u64 {
        (self.mul.wrapping_mul(key as u128).wrapping_add(self.add) >> 64) as u64
    }
}

/// Hash pair for one sketch row.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct HashRow {
    index: MultiplyAddShift,
    sign: MultiplyAddShift,
    width: u64,
    negate: bool,
}

impl HashRow {
    #[inline]
    pub fn bucket(&self, key: u64) -> usize {
        ((self.index.hash64(key) as u128 * self.width as u128) >> 64) as usize
    }

    #[inline]
    pub fn sign(&self, key: u64) -> i64 {
        let positive = (self.sign.hash64(key) >> 63 == 0) != self.negate;
        if positive {
            1
        } else {
            -1
        }
    }
}

/// `depth` independent rows of hashes into `[0, width)`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct HashFamily {
    rows: Vec<HashRow>,
    width: usize,
}

impl HashFamily {
    pub fn new(depth: usize, width: usize, seed: u64) -> Self {
        assert!(width >= 1 && depth >= 1);
        let mut rng = Xoshiro256pp::seed_from_u64(seed);
        let rows = (0..depth)
            .map(|_| HashRow {
                index: MultiplyAddShift::random(&mut rng),
                sign: MultiplyAddShift::random(&mut rng),
                width: width as u64,
                negate: false,
            })
            .collect();
        Self { rows, width }
    }

    pub fn depth(&self) -> usize {
        self.rows.len()
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn rows(&self) -> &[HashRow] {
        &self.rows
    }

    #[inline]
    pub fn row(&self, i: usize) -> &HashRow {
        &self.rows[i]
    }

    /// Flips every sign hash (g_i → −g_i); bucket hashes are untouched.
    pub fn negate_signs(&mut self) {
        for row in &mut self.rows {
            row.negate = !row.negate;
        }
    }
}

/// Lower median (index ⌈n/2⌉ − 1 of the sorted values). Sorts in place.
pub(crate) fn lower_median<T: PartialOrd + Copy>(values: &mut [T]) -> T {
    assert!(!values.is_empty());
    values.sort_unstable_by(|a, b| a.partial_cmp(b).expect("no NaN readings"));
    values[values.len().div_ceil(2) - 1]
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn buckets_in_range_and_deterministic() {
        let a = HashFamily::new(4, 33, 7);
        let b = HashFamily::new(4, 33, 7);
        for key in 0..10_000u64 {
            for i in 0..4 {
                let j = a.row(i).bucket(key);
                assert!(j < 33);
                assert_eq!(j, b.row(i).bucket(key));
                assert_eq!(a.row(i).sign(key), b.row(i).sign(key));
            }
        }
    }

    #[test]
    fn negated_signs_flip() {
        let a = HashFamily::new(3, 16, 1);
        let mut b = a.clone();
        b.negate_signs();
        for key in 0..1000u64 {
            for i in 0..3 {
                assert_eq!(a.row(i).sign(key), -b.row(i).sign(key));
                assert_eq!(a.row(i).bucket(key), b.row(i).bucket(key));
            }
        }
    }

    #[test]
    fn lower_median_picks_lower_middle() {
        assert_eq!(lower_median(&mut [3, 1, 2]), 2);
        assert_eq!(lower_median(&mut [4, 1, 3, 2]), 2);
        assert_eq!(lower_median(&mut [5]), 5);
        assert_eq!(lower_median(&mut [2.5, -1.0]), -1.0);
    }
}
