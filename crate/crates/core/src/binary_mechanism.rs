//! Continual-release counters built on the binary-tree mechanism with
//! Gaussian node noise.
//!
//! A counter over `T` steps keeps a stack of disjoint dyadic intervals that
//! partition `[1, t]`. Each interval carries its exact count and one noise
//! draw taken when the node was created. After step `t` the stack holds
//! exactly `popcount(t)` nodes, so a released prefix sum aggregates at most
//! `⌈log₂(T+1)⌉` noise terms.

use crate::error::{Error, Result};
use crate::noise::{calibrate_sigma, tree_height, GaussianSampler, NoiseScale, PrivacyParams};

/// One noisy dyadic interval `[lo, hi]` (1-indexed, inclusive).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TreeNode {
    pub lo: u64,
    pub hi: u64,
    pub count: i64,
    pub noise: f64,
}

impl TreeNode {
    pub fn width(&self) -> u64 {
        self.hi - self.lo + 1
    }
}

/// State of a single binary-mechanism counter.
///
/// The counter does not own a random source: callers pass a
/// [`GaussianSampler`] to [`update`](Self::update) so that a grid of counters
/// can share one seeded stream. [`GaussBm`] bundles a counter with its own
/// sampler for standalone use.
#[derive(Debug)]
pub struct GaussBmCounter {
    capacity: u64,
    sigma: NoiseScale,
    t_now: u64,
    nodes: Vec<TreeNode>,
}

// A derived clone would shrink `nodes` to its length and reintroduce
// allocations on the update path.
impl Clone for GaussBmCounter {
    fn clone(&self) -> Self {
        let mut nodes = Vec::with_capacity(self.nodes.capacity());
        nodes.extend_from_slice(&self.nodes);
        Self {
            capacity: self.capacity,
            sigma: self.sigma,
            t_now: self.t_now,
            nodes,
        }
    }
}

impl GaussBmCounter {
    /// Counter for `capacity` steps, σ calibrated for `sensitivity`-neighbouring
    /// inputs.
    pub fn new(capacity: u64, params: PrivacyParams, sensitivity: u32) -> Result<Self> {
        let sigma = calibrate_sigma(capacity, params, sensitivity)?;
        Self::with_scale(capacity, sigma)
    }

    /// Counter with an explicit noise scale (σ = 0 turns noise off).
    pub fn with_scale(capacity: u64, sigma: NoiseScale) -> Result<Self> {
        if capacity == 0 {
            return Err(Error::Parameter(
                "counter capacity must be at least 1".into(),
            ));
        }
        // one slot per tree level, plus the transient leaf before merging
        let slots = tree_height(capacity) as usize + 1;
        Ok(Self {
            capacity,
            sigma,
            t_now: 0,
            nodes: Vec::with_capacity(slots),
        })
    }

    /// Consumes the increment for step `t`, which must be `t_now + 1`.
    ///
    /// Appends a leaf with fresh noise, then merges the two rightmost nodes
    /// once for every trailing one bit of `t − 1` (equivalently, every
    /// trailing zero bit of `t`). Each merged node gets one new noise draw;
    /// the children's draws are discarded. Returns the number of nodes
    /// created (leaf plus merges).
    #[inline]
    pub fn update(&mut self, increment: i64, t: u64, sampler: &mut GaussianSampler) -> Result<u32> {
        if t != self.t_now + 1 {
            return Err(Error::OutOfSequence {
                expected: self.t_now + 1,
                got: t,
            });
        }
        if t > self.capacity {
            return Err(Error::CapacityExceeded {
                t,
                capacity: self.capacity,
            });
        }
        self.nodes.push(TreeNode {
            lo: t,
            hi: t,
            count: increment,
            noise: sampler.sample(self.sigma),
        });
        let mut created = 1;
        let step = t - 1;
        let mut level = 0;
        while self.nodes.len() > 1 && (step >> level) & 1 == 1 {
            let right = self.nodes.pop().expect("len > 1");
            let left = self.nodes.pop().expect("len > 1");
            self.nodes.push(TreeNode {
                lo: left.lo,
                hi: right.hi,
                count: left.count + right.count,
                noise: sampler.sample(self.sigma),
            });
            created += 1;
            level += 1;
        }
        self.t_now = t;
        Ok(created)
    }

    /// Noisy prefix sum: Σ (count + noise) over the live nodes.
    #[inline]
    pub fn query(&self) -> f64 {
        self.nodes.iter().map(|n| n.count as f64 + n.noise).sum()
    }

    /// Exact prefix sum (not private; for tests and diagnostics).
    pub fn exact_sum(&self) -> i64 {
        self.nodes.iter().map(|n| n.count).sum()
    }

    /// Sum of the noise terms currently aggregated by [`query`](Self::query).
    pub fn noise_sum(&self) -> f64 {
        self.nodes.iter().map(|n| n.noise).sum()
    }

    pub fn nodes(&self) -> &[TreeNode] {
        &self.nodes
    }

    /// Number of noise terms a query aggregates right now (= popcount(t_now)).
    pub fn noise_terms(&self) -> usize {
        self.nodes.len()
    }

    pub fn t_now(&self) -> u64 {
        self.t_now
    }

    pub fn capacity(&self) -> u64 {
        self.capacity
    }

    pub fn sigma(&self) -> NoiseScale {
        self.sigma
    }

    pub fn height(&self) -> u32 {
        tree_height(self.capacity)
    }

    /// Storage slots reserved per counter: one per tree level plus one.
    pub fn slots(&self) -> usize {
        slots_for_capacity(self.capacity)
    }
}

/// Node slots preallocated for a counter of the given capacity.
pub fn slots_for_capacity(capacity: u64) -> usize {
    tree_height(capacity) as usize + 1
}

/// A [`GaussBmCounter`] with its own seeded noise source.
#[derive(Debug, Clone)]
pub struct GaussBm {
    counter: GaussBmCounter,
    sampler: GaussianSampler,
}

impl GaussBm {
    pub fn new(capacity: u64, params: PrivacyParams, sensitivity: u32, seed: u64) -> Result<Self> {
        Ok(Self {
            counter: GaussBmCounter::new(capacity, params, sensitivity)?,
            sampler: GaussianSampler::new(seed),
        })
    }

    pub fn with_scale(capacity: u64, sigma: NoiseScale, seed: u64) -> Result<Self> {
        Ok(Self {
            counter: GaussBmCounter::with_scale(capacity, sigma)?,
            sampler: GaussianSampler::new(seed),
        })
    }

    pub fn update(&mut self, increment: i64, t: u64) -> Result<u32> {
        self.counter.update(increment, t, &mut self.sampler)
    }

    pub fn query(&self) -> f64 {
        self.counter.query()
    }

    pub fn counter(&self) -> &GaussBmCounter {
        &self.counter
    }
}

/// `n` independent counters fed by a vector update stream.
///
/// All counters share one seeded sampler; draws are taken counter by counter
/// in index order within each step.
#[derive(Debug, Clone)]
pub struct PrivateCounters {
    counters: Vec<GaussBmCounter>,
    sampler: GaussianSampler,
    t_now: u64,
}

impl PrivateCounters {
    pub fn new(
        n: usize,
        capacity: u64,
        params: PrivacyParams,
        sensitivity: u32,
        seed: u64,
    ) -> Result<Self> {
        let sigma = calibrate_sigma(capacity, params, sensitivity)?;
        Self::with_scale(n, capacity, sigma, seed)
    }

    pub fn with_scale(n: usize, capacity: u64, sigma: NoiseScale, seed: u64) -> Result<Self> {
        if n == 0 {
            return Err(Error::Parameter("need at least one counter".into()));
        }
        let counters = (0..n)
            .map(|_| GaussBmCounter::with_scale(capacity, sigma))
            .collect::<Result<Vec<_>>>()?;
        Ok(Self {
            counters,
            sampler: GaussianSampler::new(seed),
            t_now: 0,
        })
    }

    pub fn len(&self) -> usize {
        self.counters.len()
    }

    pub fn is_empty(&self) -> bool {
        self.counters.is_empty()
    }

    /// Applies one update vector and writes the `n` released prefix sums into
    /// `release`.
    pub fn step(&mut self, update: &[i64], release: &mut [f64]) -> Result<()> {
        let n = self.counters.len();
        if update.len() != n || release.len() != n {
            return Err(Error::Shape {
                step: self.t_now as usize,
                expected: n,
                got: update.len(),
            });
        }
        let t = self.t_now + 1;
        for ((counter, &inc), out) in self.counters.iter_mut().zip(update).zip(release.iter_mut()) {
            counter.update(inc, t, &mut self.sampler)?;
            *out = counter.query();
        }
        self.t_now = t;
        Ok(())
    }

    pub fn counters(&self) -> &[GaussBmCounter] {
        &self.counters
    }
}

/// Runs `n` counters over the whole update sequence (capacity = sequence
/// length) and returns the release at every step.
pub fn private_counters_run(
    updates: &[Vec<i64>],
    params: PrivacyParams,
    sensitivity: u32,
    seed: u64,
) -> Result<Vec<Vec<f64>>> {
    let sigma = calibrate_sigma(updates.len().max(1) as u64, params, sensitivity)?;
    private_counters_run_with_scale(updates, sigma, seed)
}

/// As [`private_counters_run`] with an explicit noise scale.
pub fn private_counters_run_with_scale(
    updates: &[Vec<i64>],
    sigma: NoiseScale,
    seed: u64,
) -> Result<Vec<Vec<f64>>> {
    let Some(first) = updates.first() else {
        return Ok(Vec::new());
    };
    let n = first.len();
    if let Some((step, v)) = updates.iter().enumerate().find(|(_, v)| v.len() != n) {
        return Err(Error::Shape {
            step,
            expected: n,
            got: v.len(),
        });
    }
    let mut counters = PrivateCounters::with_scale(n, updates.len() as u64, sigma, seed)?;
    let mut releases = Vec::with_capacity(updates.len());
    for v in updates {
        let mut out = vec![0.0; n];
        counters.step(v, &mut out)?;
        releases.push(out);
    }
    Ok(releases)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn noiseless(capacity: u64) -> (GaussBmCounter, GaussianSampler) {
        (
            GaussBmCounter::with_scale(capacity, NoiseScale::ZERO).unwrap(),
            GaussianSampler::new(0),
        )
    }

    fn intervals(c: &GaussBmCounter) -> Vec<(u64, u64)> {
        c.nodes().iter().map(|n| (n.lo, n.hi)).collect()
    }

    #[test]
    fn four_ones_collapse_to_one_node() {
        let (mut c, mut g) = noiseless(8);
        for t in 1..=4 {
            c.update(1, t, &mut g).unwrap();
        }
        assert_eq!(intervals(&c), vec![(1, 4)]);
        assert_eq!(c.nodes()[0].count, 4);
    }

    #[test]
    fn state_at_seven_has_three_nodes() {
        let (mut c, mut g) = noiseless(16);
        for t in 1..=7 {
            c.update(t as i64, t, &mut g).unwrap();
        }
        assert_eq!(intervals(&c), vec![(1, 4), (5, 6), (7, 7)]);
        assert_eq!(c.nodes()[0].count, 1 + 2 + 3 + 4);
        assert_eq!(c.nodes()[1].count, 5 + 6);
        assert_eq!(c.nodes()[2].count, 7);
    }

    #[test]
    fn query_at_seven_adds_exactly_three_draws() {
        let sigma = NoiseScale::new(2.0).unwrap();
        let mut c = GaussBmCounter::with_scale(16, sigma).unwrap();
        let mut g = GaussianSampler::new(11);
        for t in 1..=7 {
            c.update(1, t, &mut g).unwrap();
        }
        assert_eq!(c.noise_terms(), 3);
        let expected = 7.0 + c.nodes().iter().map(|n| n.noise).sum::<f64>();
        assert!((c.query() - expected).abs() < 1e-12);
        // repeat queries see the stored draws
        assert_eq!(c.query(), c.query());
    }

    #[test]
    fn empty_counter_queries_zero() {
        let c = GaussBmCounter::with_scale(4, NoiseScale::new(3.0).unwrap()).unwrap();
        assert_eq!(c.query(), 0.0);
    }

    #[test]
    fn zero_stream_is_pure_noise() {
        let sigma = NoiseScale::new(1.0).unwrap();
        let mut c = GaussBmCounter::with_scale(32, sigma).unwrap();
        let mut g = GaussianSampler::new(5);
        for t in 1..=13 {
            c.update(0, t, &mut g).unwrap();
            assert!(c.nodes().iter().all(|n| n.count == 0));
            assert_eq!(c.query(), c.noise_sum());
        }
    }

    #[test]
    fn sequencing_errors() {
        let (mut c, mut g) = noiseless(2);
        assert!(matches!(
            c.update(1, 2, &mut g),
            Err(Error::OutOfSequence {
                expected: 1,
                got: 2
            })
        ));
        c.update(1, 1, &mut g).unwrap();
        assert!(matches!(
            c.update(1, 1, &mut g),
            Err(Error::OutOfSequence { .. })
        ));
        c.update(1, 2, &mut g).unwrap();
        assert!(matches!(
            c.update(1, 3, &mut g),
            Err(Error::CapacityExceeded { t: 3, capacity: 2 })
        ));
    }

    #[test]
    fn constructor_heights() {
        let p = PrivacyParams::new(1.0, 0.05).unwrap();
        assert_eq!(GaussBmCounter::new(8, p, 1).unwrap().height(), 4);
        assert_eq!(GaussBmCounter::new(1, p, 1).unwrap().height(), 1);
        assert!(GaussBmCounter::new(0, p, 1).is_err());
    }

    #[test]
    fn seeded_counters_are_identical() {
        let p = PrivacyParams::new(1.0, 0.05).unwrap();
        let mut a = GaussBm::new(64, p, 1, 42).unwrap();
        let mut b = GaussBm::new(64, p, 1, 42).unwrap();
        for t in 1..=64 {
            a.update((t % 3) as i64, t).unwrap();
            b.update((t % 3) as i64, t).unwrap();
            assert_eq!(a.query().to_bits(), b.query().to_bits());
        }
    }

    #[test]
    fn n_counters_noise_off() {
        let updates: Vec<Vec<i64>> = (0..10).map(|_| vec![1, 0]).collect();
        let out = private_counters_run_with_scale(&updates, NoiseScale::ZERO, 1).unwrap();
        for (i, r) in out.iter().enumerate() {
            assert_eq!(r, &vec![(i + 1) as f64, 0.0]);
        }
    }

    #[test]
    fn single_counter_composition_identity() {
        let p = PrivacyParams::new(0.7, 0.01).unwrap();
        let incs: Vec<i64> = (0..100).map(|i| (i % 5) - 2).collect();
        let updates: Vec<Vec<i64>> = incs.iter().map(|&x| vec![x]).collect();
        let out = private_counters_run(&updates, p, 1, 99).unwrap();
        let mut single = GaussBm::new(100, p, 1, 99).unwrap();
        for (t, &x) in incs.iter().enumerate() {
            single.update(x, t as u64 + 1).unwrap();
            assert_eq!(out[t][0].to_bits(), single.query().to_bits());
        }
    }

    #[test]
    fn ragged_input_is_a_shape_error() {
        let updates = vec![vec![1, 2], vec![1]];
        assert!(matches!(
            private_counters_run_with_scale(&updates, NoiseScale::ZERO, 0),
            Err(Error::Shape {
                step: 1,
                expected: 2,
                got: 1
            })
        ));
    }

    #[test]
    fn slots_cover_the_stack() {
        for cap in [1u64, 2, 3, 7, 8, 100, 1024] {
            let (mut c, mut g) = noiseless(cap);
            let slots = c.slots();
            for t in 1..=cap {
                c.update(1, t, &mut g).unwrap();
                assert!(c.noise_terms() <= c.height() as usize);
                assert!(c.noise_terms() < slots);
            }
        }
    }
}
