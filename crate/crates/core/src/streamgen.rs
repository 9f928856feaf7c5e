//! Synthetic Zipfian streams, trace-file ingestion and the exact-frequency
//! oracle used as ground truth.
//!
//! Trace files are UTF-8 with one token per line. Each token (surrounding
//! whitespace trimmed, blank lines skipped) becomes a 64-bit key through
//! [`ingest_hash`], which is 64-bit FNV-1a over the token's bytes.

use std::collections::HashMap;
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::noise::{derive_seed, Xoshiro256pp};

/// Fixed 64-bit FNV-1a hash applied to trace tokens.
pub fn ingest_hash(token: &str) -> u64 {
    const OFFSET: u64 = 0xcbf2_9ce4_8422_2325;
    const PRIME: u64 = 0x0000_0100_0000_01b3;
    token
        .as_bytes()
        .iter()
        .fold(OFFSET, |h, &b| (h ^ b as u64).wrapping_mul(PRIME))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ZipfSpec {
    pub skew: f64,
    pub universe: u64,
    pub length: u64,
    pub seed: u64,
}

impl ZipfSpec {
    pub fn validate(&self) -> Result<()> {
        if !self.skew.is_finite() || self.skew <= 0.0 {
            return Err(Error::Parameter(format!(
                "skew must be positive, got {}",
                self.skew
            )));
        }
        if self.universe == 0 {
            return Err(Error::Parameter("universe must be at least 1".into()));
        }
        Ok(())
    }
}

/// Inverse-CDF sampler over ranks `1..=n` with `P(r) ∝ r^(−skew)`.
#[derive(Debug, Clone)]
pub struct ZipfSampler {
    cdf: Vec<f64>,
}

impl ZipfSampler {
    pub fn new(skew: f64, universe: u64) -> Self {
        assert!(universe >= 1);
        let mut cdf = Vec::with_capacity(universe as usize);
        let mut acc = 0.0;
        for r in 1..=universe {
            acc += (r as f64).powf(-skew);
            cdf.push(acc);
        }
        let total = acc;
        for c in &mut cdf {
            *c /= total;
        }
        *cdf.last_mut().unwrap() = 1.0;
        Self { cdf }
    }

    pub fn universe(&self) -> u64 {
        self.cdf.len() as u64
    }

    /// Probability of rank `r` (1-based).
    pub fn pmf(&self, r: u64) -> f64 {
        let i = (r - 1) as usize;
        if i == 0 {
            self.cdf[0]
        } else {
            self.cdf[i] - self.cdf[i - 1]
        }
    }

    #[inline]
    pub fn sample(&self, rng: &mut Xoshiro256pp) -> u64 {
        let u = rng.next_f64();
        self.cdf.partition_point(|&c| c <= u) as u64 + 1
    }
}

/// Item stream: an iterator of 64-bit keys.
pub enum StreamSource {
    Zipf {
        sampler: ZipfSampler,
        rng: Xoshiro256pp,
        remaining: u64,
    },
    Keys(std::vec::IntoIter<u64>),
}

impl Iterator for StreamSource {
    type Item = u64;

    fn next(&mut self) -> Option<u64> {
        match self {
            StreamSource::Zipf {
                sampler,
                rng,
                remaining,
            } => {
                if *remaining == 0 {
                    return None;
                }
                *remaining -= 1;
                Some(sampler.sample(rng))
            }
            StreamSource::Keys(it) => it.next(),
        }
    }

    fn size_hint(&self) -> (usize, Option<usize>) {
        match self {
            StreamSource::Zipf { remaining, .. } => {
                (*remaining as usize, Some(*remaining as usize))
            }
            StreamSource::Keys(it) => it.size_hint(),
        }
    }
}

impl ExactSizeIterator for StreamSource {}

/// i.i.d. Zipf ranks (keys are the ranks themselves).
pub fn zipf_stream(spec: &ZipfSpec) -> Result<StreamSource> {
    spec.validate()?;
    Ok(StreamSource::Zipf {
        sampler: ZipfSampler::new(spec.skew, spec.universe),
        rng: Xoshiro256pp::seed_from_u64(spec.seed),
        remaining: spec.length,
    })
}

/// Keys of a newline-delimited token file, in file order.
pub fn trace_stream(path: impl AsRef<Path>) -> Result<StreamSource> {
    let path = path.as_ref();
    let io_err = |source| Error::Io {
        path: path.to_path_buf(),
        source,
    };
    let reader = BufReader::new(File::open(path).map_err(io_err)?);
    let mut keys = Vec::new();
    for line in reader.lines() {
        let line = line.map_err(io_err)?;
        let token = line.trim();
        if !token.is_empty() {
            keys.push(ingest_hash(token));
        }
    }
    if keys.is_empty() {
        return Err(Error::EmptyStream(path.to_path_buf()));
    }
    Ok(StreamSource::Keys(keys.into_iter()))
}

/// Writes keys as decimal tokens, one per line.
pub fn write_keys(path: impl AsRef<Path>, keys: impl IntoIterator<Item = u64>) -> Result<u64> {
    write_tokens(path, keys.into_iter().map(|k| k.to_string()))
}

fn write_tokens(path: impl AsRef<Path>, tokens: impl Iterator<Item = String>) -> Result<u64> {
    let path = path.as_ref();
    let io_err = |source| Error::Io {
        path: path.to_path_buf(),
        source,
    };
    let mut out = BufWriter::new(File::create(path).map_err(io_err)?);
    let mut n = 0;
    for token in tokens {
        writeln!(out, "{token}").map_err(io_err)?;
        n += 1;
    }
    out.flush().map_err(io_err)?;
    Ok(n)
}

/// A heavy-tailed, traffic-like token stream: a few "elephant" sources whose
/// shares halve from one to the next, over a Zipf-distributed population of
/// "mice". Tokens are rendered as dotted IPv4 strings.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FixtureSpec {
    pub length: u64,
    pub elephants: u32,
    /// Fraction of arrivals that come from elephants.
    pub elephant_mass: f64,
    pub mice: u64,
    pub mice_skew: f64,
    pub seed: u64,
}

impl Default for FixtureSpec {
    fn default() -> Self {
        Self {
            length: 1 << 22,
            elephants: 4,
            elephant_mass: 0.8,
            mice: 480_000,
            mice_skew: 0.72,
            seed: 2019,
        }
    }
}

impl FixtureSpec {
    /// Expected share of elephant `i` (0-based).
    pub fn elephant_share(&self, i: u32) -> f64 {
        let total: f64 = (0..self.elephants).map(|j| 0.5f64.powi(j as i32)).sum();
        self.elephant_mass * 0.5f64.powi(i as i32) / total
    }

    /// The fixture's token sequence.
    pub fn tokens(&self) -> Result<impl Iterator<Item = String>> {
        if self.elephants == 0 || !(0.0..=1.0).contains(&self.elephant_mass) || self.mice == 0 {
            return Err(Error::Parameter("invalid fixture spec".into()));
        }
        let mut rng = Xoshiro256pp::seed_from_u64(self.seed);
        let mice = ZipfSampler::new(self.mice_skew, self.mice);
        let elephants =
            ZipfSampler::from_weights((0..self.elephants).map(|i| 0.5f64.powi(i as i32)));
        let mass = self.elephant_mass;
        let offset = self.elephants as u64;
        let salt = derive_seed(self.seed, 0x1f);
        Ok((0..self.length).map(move |_| {
            let id = if rng.next_f64() < mass {
                elephants.sample(&mut rng) - 1
            } else {
                offset + mice.sample(&mut rng) - 1
            };
            ipv4_token(id, salt)
        }))
    }

    pub fn write(&self, path: impl AsRef<Path>) -> Result<u64> {
        write_tokens(path, self.tokens()?)
    }
}

impl ZipfSampler {
    /// Sampler over ranks with arbitrary positive weights.
    pub fn from_weights(weights: impl IntoIterator<Item = f64>) -> Self {
        let mut cdf: Vec<f64> = weights
            .into_iter()
            .scan(0.0, |acc, w| {
                *acc += w;
                Some(*acc)
            })
            .collect();
        let total = *cdf.last().expect("at least one weight");
        for c in &mut cdf {
            *c /= total;
        }
        *cdf.last_mut().unwrap() = 1.0;
        Self { cdf }
    }
}

/// Bijective scramble of a source id into a dotted-quad token.
fn ipv4_token(id: u64, salt: u64) -> String {
    let mut x = (id as u32) ^ (salt as u32);
    // xorshift-multiply rounds; every step is invertible on u32
    x ^= x >> 16;
    x = x.wrapping_mul(0x7feb_352d);
    x ^= x >> 15;
    x = x.wrapping_mul(0x846c_a68b);
    x ^= x >> 16;
    let [a, b, c, d] = x.to_be_bytes();
    format!("{a}.{b}.{c}.{d}")
}

/// Exact frequencies and moments of everything observed so far.
#[derive(Debug, Clone, Default)]
pub struct ExactOracle {
    counts: HashMap<u64, u64>,
    t: u64,
    f2: u128,
}

impl ExactOracle {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn from_keys<'a>(keys: impl IntoIterator<Item = &'a u64>) -> Self {
        let mut o = Self::new();
        for &k in keys {
            o.observe(k);
        }
        o
    }

    #[inline]
    pub fn observe(&mut self, key: u64) {
        let f = self.counts.entry(key).or_insert(0);
        self.f2 += 2 * *f as u128 + 1;
        *f += 1;
        self.t += 1;
    }

    pub fn frequency(&self, key: u64) -> u64 {
        self.counts.get(&key).copied().unwrap_or(0)
    }

    pub fn t(&self) -> u64 {
        self.t
    }

    /// F₁ = Σ f (equals t for unit-weight streams).
    pub fn f1(&self) -> u64 {
        self.counts.values().sum()
    }

    /// F₂ = Σ f², maintained incrementally.
    pub fn f2(&self) -> u128 {
        self.f2
    }

    pub fn distinct(&self) -> usize {
        self.counts.len()
    }

    pub fn counts(&self) -> &HashMap<u64, u64> {
        &self.counts
    }

    /// Exact top-k by frequency, ties broken by ascending key.
    pub fn topk(&self, k: usize) -> Vec<(u64, u64)> {
        let mut all: Vec<(u64, u64)> = self.counts.iter().map(|(&k, &f)| (k, f)).collect();
        let by_freq = |a: &(u64, u64), b: &(u64, u64)| b.1.cmp(&a.1).then(a.0.cmp(&b.0));
        if k < all.len() {
            all.select_nth_unstable_by(k, by_freq);
            all.truncate(k);
        }
        all.sort_unstable_by(by_freq);
        all
    }

    /// Keys with frequency at least `threshold`.
    pub fn heavy_set(&self, threshold: f64) -> Vec<u64> {
        let mut keys: Vec<u64> = self
            .counts
            .iter()
            .filter(|(_, &f)| f as f64 >= threshold)
            .map(|(&k, _)| k)
            .collect();
        keys.sort_unstable();
        keys
    }
}

/// [`ExactOracle::topk`] as a free function.
pub fn oracle_topk(oracle: &ExactOracle, k: usize) -> Vec<(u64, u64)> {
    oracle.topk(k)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::collections::HashSet;

    #[test]
    fn fnv_reference_values() {
        assert_eq!(ingest_hash(""), 0xcbf29ce484222325);
        assert_eq!(ingest_hash("a"), 0xaf63dc4c8601ec8c);
        assert_eq!(ingest_hash("foobar"), 0x85944171f73967e8);
    }

    #[test]
    fn zipf_is_deterministic() {
        let spec = ZipfSpec {
            skew: 1.3,
            universe: 1000,
            length: 5000,
            seed: 17,
        };
        let a: Vec<u64> = zipf_stream(&spec).unwrap().collect();
        let b: Vec<u64> = zipf_stream(&spec).unwrap().collect();
        assert_eq!(a, b);
        assert_eq!(a.len(), 5000);
        assert!(a.iter().all(|&k| (1..=1000).contains(&k)));
    }

    #[test]
    fn pmf_sums_to_one() {
        let z = ZipfSampler::new(1.1, 500);
        let total: f64 = (1..=500).map(|r| z.pmf(r)).sum();
        assert!((total - 1.0).abs() < 1e-12);
        assert!(z.pmf(1) > z.pmf(2));
    }

    #[test]
    fn invalid_zipf_rejected() {
        let spec = ZipfSpec {
            skew: 0.0,
            universe: 10,
            length: 1,
            seed: 0,
        };
        assert!(zipf_stream(&spec).is_err());
    }

    #[test]
    fn oracle_moments() {
        let mut o = ExactOracle::new();
        for k in [1, 2, 1, 3, 1] {
            o.observe(k);
        }
        assert_eq!(o.t(), 5);
        assert_eq!(o.f1(), 5);
        assert_eq!(o.f2(), 9 + 1 + 1);
        assert_eq!(o.topk(2), vec![(1, 3), (2, 1)]);
        assert_eq!(o.heavy_set(2.0), vec![1]);
    }

    #[test]
    fn topk_edge_cases() {
        let o = ExactOracle::from_keys(&[5, 5, 5]);
        assert_eq!(oracle_topk(&o, 1), vec![(5, 3)]);
        let o = ExactOracle::from_keys(&[1, 2, 3, 4]);
        assert_eq!(o.topk(10).len(), 4);
    }

    #[test]
    fn ipv4_tokens_are_distinct() {
        let tokens: HashSet<String> = (0..100_000).map(|i| ipv4_token(i, 99)).collect();
        assert_eq!(tokens.len(), 100_000);
    }

    #[test]
    fn fixture_shares() {
        let spec = FixtureSpec::default();
        let total: f64 = (0..spec.elephants).map(|i| spec.elephant_share(i)).sum();
        assert!((total - spec.elephant_mass).abs() < 1e-12);
        assert!(spec.elephant_share(0) > spec.elephant_share(1));
    }
}
