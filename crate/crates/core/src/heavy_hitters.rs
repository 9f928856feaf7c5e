//! Private heavy hitters over a lazy Count-Min sketch.
//!
//! Every arrival updates a `d × k̃` [`LazySketch`] and joins the candidate set
//! `C`. Every `k̃` arrivals the report is refreshed: each candidate is queried
//! once, those whose estimate clears `max{τ₁, τ₂} + 1` are reported, and `C`
//! is cut back to the `k̃` largest estimates. Between refreshes the previous
//! report is returned unchanged.
//!
//! With `T` the declared stream length:
//!
//! * depth `d = ⌈log₂(4T/β)⌉`
//! * `γ = 3·log₂(T/k̃)/ε · √(d · ln(4Td/β) · log₂(1.25/δ))`
//! * `λ₁ = γ + k̃`, `λ₂ = 2t/k̃ + γ`, `τ₁ = t/k`, `τ₂ = t/k̃ + λ₁ + 2λ₂`

use std::collections::HashSet;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hashing::MAX_DEPTH;
use crate::noise::PrivacyParams;
use crate::private_sketch::LazySketch;
use crate::sketch::SketchKind;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HhConfig {
    /// Heavy-hitter parameter: report items above t/k.
    pub k: usize,
    /// Candidate-set size and sketch width.
    pub k_tilde: usize,
    pub params: PrivacyParams,
    /// Utility failure probability, in (0, δ).
    pub beta: f64,
    /// Declared stream length T.
    pub capacity: u64,
}

impl HhConfig {
    pub fn validate(&self) -> Result<()> {
        if self.k == 0 {
            return Err(Error::Parameter("k must be at least 1".into()));
        }
        if self.k_tilde < self.k {
            return Err(Error::Parameter(format!(
                "k_tilde ({}) must be at least k ({})",
                self.k_tilde, self.k
            )));
        }
        if !(self.beta > 0.0 && self.beta < self.params.delta()) {
            return Err(Error::Parameter(format!(
                "beta must lie in (0, delta={}), got {}",
                self.params.delta(),
                self.beta
            )));
        }
        if self.capacity == 0 {
            return Err(Error::Parameter("capacity must be at least 1".into()));
        }
        let d = self.depth();
        if d > MAX_DEPTH {
            return Err(Error::Parameter(format!(
                "derived depth {d} exceeds {MAX_DEPTH}"
            )));
        }
        Ok(())
    }

    /// Sketch depth ⌈log₂(4T/β)⌉.
    pub fn depth(&self) -> usize {
        (4.0 * self.capacity as f64 / self.beta)
            .log2()
            .ceil()
            .max(1.0) as usize
    }
}

/// Noise bound γ used by the refresh thresholds (0 when k̃ ≥ T).
pub fn hh_gamma(config: &HhConfig) -> f64 {
    let t = config.capacity as f64;
    let d = config.depth() as f64;
    let eps = config.params.epsilon();
    let delta = config.params.delta();
    let levels = (t / config.k_tilde as f64).log2().max(0.0);
    3.0 * levels / eps * (d * (4.0 * t * d / config.beta).ln() * (1.25 / delta).log2()).sqrt()
}

/// Refresh-time thresholds for time `t`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Thresholds {
    pub lambda1: f64,
    pub lambda2: f64,
    pub tau1: f64,
    pub tau2: f64,
}

impl Thresholds {
    pub fn new(t: u64, k: usize, k_tilde: usize, gamma: f64) -> Self {
        let t = t as f64;
        let kt = k_tilde as f64;
        let lambda1 = gamma + kt;
        let lambda2 = 2.0 * t / kt + gamma;
        Self {
            lambda1,
            lambda2,
            tau1: t / k as f64,
            tau2: t / kt + lambda1 + 2.0 * lambda2,
        }
    }

    /// Estimates strictly above this value are reported.
    pub fn admit_above(&self) -> f64 {
        self.tau1.max(self.tau2) + 1.0
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ReportItem {
    pub key: u64,
    pub estimate: f64,
}

/// Reported heavy hitters as of refresh time `t`, largest estimate first.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct HhReport {
    pub t: u64,
    pub items: Vec<ReportItem>,
}

impl HhReport {
    pub fn contains(&self, key: u64) -> bool {
        self.items.iter().any(|i| i.key == key)
    }

    pub fn keys(&self) -> impl Iterator<Item = u64> + '_ {
        self.items.iter().map(|i| i.key)
    }
}

/// Abstract work done, for checking the amortized cost bound.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct HhWork {
    /// Tree nodes created plus buffer operations in the sketch.
    pub sketch_ops: u64,
    /// Tree nodes read by refresh-time queries.
    pub query_node_reads: u64,
    /// Candidates handled by refreshes (scoring and selection).
    pub candidate_ops: u64,
}

impl HhWork {
    pub fn total(&self) -> u64 {
        self.sketch_ops + self.query_node_reads + self.candidate_ops
    }
}

fn by_estimate_desc(a: &(u64, f64), b: &(u64, f64)) -> std::cmp::Ordering {
    b.1.total_cmp(&a.1).then(a.0.cmp(&b.0))
}

#[derive(Debug, Clone)]
pub struct LazyHeavyHitters {
    config: HhConfig,
    gamma: f64,
    sketch: LazySketch,
    candidates: HashSet<u64>,
    scored: Vec<(u64, f64)>,
    report: Arc<HhReport>,
    t_now: u64,
    query_node_reads: u64,
    candidate_ops: u64,
}

impl LazyHeavyHitters {
    pub fn new(config: HhConfig, seed: u64) -> Result<Self> {
        config.validate()?;
        let sketch = LazySketch::new(
            SketchKind::Cms,
            config.depth(),
            config.k_tilde,
            config.capacity,
            config.params,
            seed,
        )?;
        Ok(Self::with_sketch(config, sketch))
    }

    /// Tracker over a caller-built sketch (e.g. noise-off for tests). The
    /// sketch must be an empty CMS of width k̃.
    pub fn with_sketch(config: HhConfig, sketch: LazySketch) -> Self {
        assert_eq!(sketch.kind(), SketchKind::Cms);
        assert_eq!(sketch.width(), config.k_tilde);
        assert_eq!(sketch.t_now(), 0);
        Self {
            gamma: hh_gamma(&config),
            config,
            sketch,
            candidates: HashSet::with_capacity(2 * config.k_tilde),
            scored: Vec::with_capacity(2 * config.k_tilde),
            report: Arc::new(HhReport::default()),
            t_now: 0,
            query_node_reads: 0,
            candidate_ops: 0,
        }
    }

    /// Processes one arrival and returns the current report.
    pub fn update(&mut self, key: u64) -> Result<Arc<HhReport>> {
        self.sketch.update(key)?;
        self.candidates.insert(key);
        self.t_now += 1;
        if self.t_now % self.config.k_tilde as u64 == 0 {
            self.refresh();
        }
        Ok(Arc::clone(&self.report))
    }

    fn refresh(&mut self) {
        let t = self.t_now;
        let thresholds = Thresholds::new(t, self.config.k, self.config.k_tilde, self.gamma);
        let view = self.sketch.view();
        let depth = self.sketch.depth();

        self.scored.clear();
        for &key in &self.candidates {
            self.scored.push((key, view.query(key)));
            for (i, row) in self.sketch.hashes().rows().iter().enumerate() {
                self.query_node_reads +=
                    self.sketch.counter(i, row.bucket(key)).noise_terms() as u64;
            }
        }
        self.candidate_ops += (self.scored.len() * (depth + 1)) as u64;
        self.scored.sort_unstable_by(by_estimate_desc);

        let cut = thresholds.admit_above();
        let items = self
            .scored
            .iter()
            .take_while(|(_, v)| *v > cut)
            .map(|&(key, estimate)| ReportItem { key, estimate })
            .collect();
        self.report = Arc::new(HhReport { t, items });

        let keep = self.config.k_tilde.min(self.scored.len());
        self.candidates.clear();
        self.candidates
            .extend(self.scored[..keep].iter().map(|&(k, _)| k));
    }

    pub fn report(&self) -> Arc<HhReport> {
        Arc::clone(&self.report)
    }

    /// Candidates scored at the most recent refresh, with their estimates,
    /// in descending estimate order (before pruning to k̃).
    pub fn last_scored(&self) -> &[(u64, f64)] {
        &self.scored
    }

    pub fn candidates(&self) -> &HashSet<u64> {
        &self.candidates
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    pub fn config(&self) -> &HhConfig {
        &self.config
    }

    pub fn thresholds(&self, t: u64) -> Thresholds {
        Thresholds::new(t, self.config.k, self.config.k_tilde, self.gamma)
    }

    pub fn sketch(&self) -> &LazySketch {
        &self.sketch
    }

    pub fn t_now(&self) -> u64 {
        self.t_now
    }

    pub fn work(&self) -> HhWork {
        let stats = self.sketch.stats();
        HhWork {
            sketch_ops: stats.nodes_created + stats.buffer_ops,
            query_node_reads: self.query_node_reads,
            candidate_ops: self.candidate_ops,
        }
    }

    /// Sketch words plus one word per candidate slot (2k̃).
    pub fn memory_words(&self) -> usize {
        self.sketch.memory_words() + 2 * self.config.k_tilde
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hashing::HashFamily;
    use crate::noise::NoiseScale;

    fn config(k: usize, k_tilde: usize, eps: f64, capacity: u64) -> HhConfig {
        HhConfig {
            k,
            k_tilde,
            params: PrivacyParams::new(eps, 0.001).unwrap(),
            beta: 0.0005,
            capacity,
        }
    }

    #[test]
    fn threshold_arithmetic() {
        let th = Thresholds::new(1024, 32, 128, 100.0);
        assert_eq!(th.lambda1, 228.0);
        assert_eq!(th.lambda2, 116.0);
        assert_eq!(th.tau1, 32.0);
        assert_eq!(th.tau2, 8.0 + 228.0 + 232.0);
        assert_eq!(th.admit_above(), 469.0);
    }

    #[test]
    fn degenerate_thresholds_fall_back_to_t_over_k() {
        let th = Thresholds::new(1000, 10, 1000, 0.0);
        // τ₂ = 1 + 1000 + 4 is large in absolute terms only through k̃
        assert_eq!(th.tau1, 100.0);
        let th = Thresholds::new(1_000_000, 10, 1000, 0.0);
        assert!(th.tau1 > th.tau2);
        assert_eq!(th.admit_above(), 100_001.0);
    }

    #[test]
    fn tau2_nonincreasing_in_k_tilde() {
        let mut prev = f64::INFINITY;
        for kt in [64, 128, 256, 512] {
            let th = Thresholds::new(1 << 16, 32, kt, 50.0);
            let t_terms = th.tau2 - th.lambda1 - 2.0 * 50.0;
            assert!(t_terms <= prev);
            prev = t_terms;
        }
    }

    #[test]
    fn gamma_scaling() {
        let base = config(32, 128, 1.0, 1 << 16);
        let g1 = hh_gamma(&base);
        let g2 = hh_gamma(&HhConfig {
            params: PrivacyParams::new(1e9, 0.001).unwrap(),
            ..base
        });
        assert!(g2 < 1e-6 * g1);
        let wider = hh_gamma(&HhConfig {
            k_tilde: 256,
            ..base
        });
        assert!(wider < g1);
    }

    #[test]
    fn config_validation() {
        assert!(config(32, 128, 1.0, 100).validate().is_ok());
        assert!(config(32, 32, 1.0, 100).validate().is_ok());
        assert!(config(32, 16, 1.0, 100).validate().is_err());
        assert!(config(0, 16, 1.0, 100).validate().is_err());
        let mut c = config(8, 16, 1.0, 100);
        c.beta = 0.001;
        assert!(c.validate().is_err());
        c.beta = 0.0;
        assert!(c.validate().is_err());
    }

    #[test]
    fn empty_candidates_report_nothing() {
        let hh = LazyHeavyHitters::new(config(4, 8, 1.0, 64), 0).unwrap();
        assert!(hh.report().items.is_empty());
    }

    #[test]
    fn report_is_stable_between_refreshes() {
        let mut hh = LazyHeavyHitters::new(config(4, 16, 1.0, 256), 3).unwrap();
        let mut last = hh.report();
        for t in 1..=256u64 {
            let r = hh.update(t % 5).unwrap();
            if t % 16 != 0 {
                assert!(Arc::ptr_eq(&r, &last));
            } else {
                assert_eq!(r.t, t);
            }
            last = r;
        }
    }

    #[test]
    fn noise_off_single_key_reported() {
        // ε large enough that γ is negligible
        let cfg = config(2, 8, 1e9, 512);
        let hashes = HashFamily::new(cfg.depth(), cfg.k_tilde, 1);
        let sketch =
            LazySketch::with_hashes(SketchKind::Cms, hashes, cfg.capacity, NoiseScale::ZERO, 1)
                .unwrap();
        let mut hh = LazyHeavyHitters::with_sketch(cfg, sketch);
        let mut first = None;
        for t in 1..=512u64 {
            let r = hh.update(7).unwrap();
            if r.contains(7) && first.is_none() {
                first = Some(t);
            }
            if first.is_some() {
                assert!(r.contains(7), "dropped at t={t}");
            }
        }
        assert!(first.is_some());
        assert!(hh.candidates().len() <= cfg.k_tilde);
    }
}
