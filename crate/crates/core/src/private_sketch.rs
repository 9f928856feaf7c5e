//! Continual-observation private sketches.
//!
//! Both sketches keep a d×w grid `O` of binary-mechanism counters, each built
//! for sensitivity `2d` (one arrival changes at most two cells per row between
//! neighbouring streams). They differ in how arrivals reach `O`:
//!
//! * [`PunctualSketch`] feeds every counter on every arrival, `+1`/`g_i(x)` in
//!   the hashed cell and `0` everywhere else. Update cost is Θ(d·w).
//! * [`LazySketch`] accumulates arrivals in a hidden exact matrix `P` and, on
//!   each arrival, pushes one column of `P` into `O` in round-robin order.
//!   Counters therefore see ⌈T/w⌉ steps and update cost is Θ(d). Released
//!   estimates lag the exact sketch by whatever sits in `P`, at most `w`
//!   arrivals per cell. `P` is never read by queries.
//!
//! When `T` is not a multiple of `w`, counts still buffered at the end of the
//! stream are never pushed.
//!
//! # Memory accounting
//!
//! [`memory_words`] counts storage slots: a counter over `c` steps reserves
//! `⌈log₂(c+1)⌉ + 1` node slots (one per tree level plus the transient leaf).
//!
//! | variant  | words                                   |
//! |----------|-----------------------------------------|
//! | plain    | `d·w`                                   |
//! | punctual | `d·w·(⌈log₂(T+1)⌉ + 1)`                 |
//! | lazy     | `d·w·(⌈log₂(⌈T/w⌉+1)⌉ + 1) + d·w`       |
//!
//! # Snapshot format
//!
//! [`ReleasedSketch::to_bytes`] writes, little-endian: the magic `CODPREL1`,
//! `kind: u32` (0 = CMS, 1 = CS), `depth: u32`, `width: u32`, `t: u64`, then
//! `depth·width` `f64` noisy counter values in row-major order. The JSON form
//! carries the same fields.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::binary_mechanism::{slots_for_capacity, GaussBmCounter};
use crate::error::{Error, Result};
use crate::hashing::{lower_median, HashFamily, MAX_DEPTH};
use crate::noise::{calibrate_sigma, derive_seed, GaussianSampler, NoiseScale, PrivacyParams};
use crate::sketch::{check_dims, SketchKind};

const NOISE_STREAM: u64 = 0x6E6F697365;

/// How a sketch moves arrivals into its released counters.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Variant {
    Plain,
    Punctual,
    Lazy,
}

/// One of the six sketch configurations (variant × estimator).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct SketchSpec {
    pub variant: Variant,
    pub kind: SketchKind,
}

impl SketchSpec {
    pub const ALL: [SketchSpec; 6] = [
        SketchSpec::new(Variant::Plain, SketchKind::Cms),
        SketchSpec::new(Variant::Plain, SketchKind::Cs),
        SketchSpec::new(Variant::Lazy, SketchKind::Cms),
        SketchSpec::new(Variant::Lazy, SketchKind::Cs),
        SketchSpec::new(Variant::Punctual, SketchKind::Cms),
        SketchSpec::new(Variant::Punctual, SketchKind::Cs),
    ];

    pub const fn new(variant: Variant, kind: SketchKind) -> Self {
        Self { variant, kind }
    }

    pub fn is_private(&self) -> bool {
        self.variant != Variant::Plain
    }
}

impl fmt::Display for SketchSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.variant {
            Variant::Plain => write!(f, "{}", self.kind),
            Variant::Lazy => write!(f, "lazy-{}", self.kind),
            Variant::Punctual => write!(f, "punctual-{}", self.kind),
        }
    }
}

impl FromStr for SketchSpec {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let (variant, kind) = match s.split_once('-') {
            None => (Variant::Plain, s),
            Some(("lazy", k)) => (Variant::Lazy, k),
            Some(("punctual", k)) => (Variant::Punctual, k),
            Some(_) => return Err(Error::Parameter(format!("unknown sketch {s:?}"))),
        };
        Ok(SketchSpec::new(variant, kind.parse()?))
    }
}

/// Capacity of each lazy counter: ⌈T/w⌉.
pub fn lazy_counter_capacity(capacity: u64, width: usize) -> u64 {
    capacity.div_ceil(width as u64).max(1)
}

/// Storage words for a `depth`×`width` sketch over a stream of `capacity`
/// arrivals (see the module docs for the formula).
pub fn memory_words(variant: Variant, depth: usize, width: usize, capacity: u64) -> usize {
    let cells = depth * width;
    match variant {
        Variant::Plain => cells,
        Variant::Punctual => cells * slots_for_capacity(capacity),
        Variant::Lazy => cells * (slots_for_capacity(lazy_counter_capacity(capacity, width)) + 1),
    }
}

/// Work counters, for asserting per-arrival cost laws.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct OpStats {
    /// Binary-mechanism counter updates issued.
    pub counter_updates: u64,
    /// Tree nodes created (leaves plus merges).
    pub nodes_created: u64,
    /// Reads and writes of the hidden buffer `P`.
    pub buffer_ops: u64,
    /// Sum of the buffer values pushed into `O`.
    pub pushed_mass: i64,
    /// Number of buffer cells pushed into `O`.
    pub pushes: u64,
}

#[derive(Debug, Clone)]
struct CounterGrid {
    width: usize,
    counters: Vec<GaussBmCounter>,
    sampler: GaussianSampler,
}

impl CounterGrid {
    fn new(
        depth: usize,
        width: usize,
        capacity: u64,
        sigma: NoiseScale,
        seed: u64,
    ) -> Result<Self> {
        let proto = GaussBmCounter::with_scale(capacity, sigma)?;
        Ok(Self {
            width,
            counters: vec![proto; depth * width],
            sampler: GaussianSampler::new(seed),
        })
    }

    #[inline]
    fn update(&mut self, row: usize, col: usize, increment: i64, t: u64) -> Result<u32> {
        self.counters[row * self.width + col].update(increment, t, &mut self.sampler)
    }

    #[inline]
    fn get(&self, row: usize, col: usize) -> &GaussBmCounter {
        &self.counters[row * self.width + col]
    }
}

/// Read-only view of the released part of a private sketch: the hashes and
/// the noisy counter grid. This is everything an observer may see.
#[derive(Clone, Copy)]
pub struct ReleaseView<'a> {
    kind: SketchKind,
    hashes: &'a HashFamily,
    grid: &'a CounterGrid,
    t: u64,
}

impl<'a> ReleaseView<'a> {
    /// Minimum (CMS) or lower median (CS) of the d released counters the key
    /// hashes to.
    #[inline]
    pub fn query(&self, key: u64) -> f64 {
        let rows = self.hashes.rows();
        match self.kind {
            SketchKind::Cms => rows
                .iter()
                .enumerate()
                .map(|(i, row)| self.grid.get(i, row.bucket(key)).query())
                .fold(f64::INFINITY, f64::min),
            SketchKind::Cs => {
                let mut buf = [0f64; MAX_DEPTH];
                for (i, row) in rows.iter().enumerate() {
                    buf[i] = row.sign(key) as f64 * self.grid.get(i, row.bucket(key)).query();
                }
                lower_median(&mut buf[..rows.len()])
            }
        }
    }

    pub fn t(&self) -> u64 {
        self.t
    }

    pub fn snapshot(&self) -> ReleasedSketch {
        ReleasedSketch {
            kind: self.kind,
            depth: self.hashes.depth(),
            width: self.hashes.width(),
            t: self.t,
            values: self
                .grid
                .counters
                .iter()
                .map(GaussBmCounter::query)
                .collect(),
        }
    }
}

/// Noisy counter values of `O` at time `t`; never includes the lazy buffer.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReleasedSketch {
    pub kind: SketchKind,
    pub depth: usize,
    pub width: usize,
    pub t: u64,
    pub values: Vec<f64>,
}

const SNAPSHOT_MAGIC: &[u8; 8] = b"CODPREL1";

impl ReleasedSketch {
    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(28 + 8 * self.values.len());
        out.extend_from_slice(SNAPSHOT_MAGIC);
        let kind: u32 = match self.kind {
            SketchKind::Cms => 0,
            SketchKind::Cs => 1,
        };
        out.extend_from_slice(&kind.to_le_bytes());
        out.extend_from_slice(&(self.depth as u32).to_le_bytes());
        out.extend_from_slice(&(self.width as u32).to_le_bytes());
        out.extend_from_slice(&self.t.to_le_bytes());
        for v in &self.values {
            out.extend_from_slice(&v.to_le_bytes());
        }
        out
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        let bad = |msg: &str| Error::Snapshot(msg.to_string());
        if bytes.len() < 28 || &bytes[..8] != SNAPSHOT_MAGIC {
            return Err(bad("missing header"));
        }
        let u32_at = |i: usize| u32::from_le_bytes(bytes[i..i + 4].try_into().unwrap());
        let kind = match u32_at(8) {
            0 => SketchKind::Cms,
            1 => SketchKind::Cs,
            _ => return Err(bad("unknown kind")),
        };
        let depth = u32_at(12) as usize;
        let width = u32_at(16) as usize;
        let t = u64::from_le_bytes(bytes[20..28].try_into().unwrap());
        let body = &bytes[28..];
        if body.len() != depth * width * 8 {
            return Err(bad("body length does not match dimensions"));
        }
        let values = body
            .chunks_exact(8)
            .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
            .collect();
        Ok(Self {
            kind,
            depth,
            width,
            t,
            values,
        })
    }
}

fn sigma_for(capacity: u64, params: PrivacyParams, depth: usize) -> Result<NoiseScale> {
    calibrate_sigma(capacity, params, 2 * depth as u32)
}

/// Every counter receives an update on every arrival.
#[derive(Debug, Clone)]
pub struct PunctualSketch {
    kind: SketchKind,
    hashes: HashFamily,
    grid: CounterGrid,
    capacity: u64,
    t_now: u64,
    stats: OpStats,
}

impl PunctualSketch {
    pub fn new(
        kind: SketchKind,
        depth: usize,
        width: usize,
        capacity: u64,
        params: PrivacyParams,
        seed: u64,
    ) -> Result<Self> {
        check_dims(depth, width)?;
        let sigma = sigma_for(capacity.max(1), params, depth)?;
        Self::with_hashes(
            kind,
            HashFamily::new(depth, width, seed),
            capacity,
            sigma,
            seed,
        )
    }

    /// Sketch over explicit hashes and noise scale (σ = 0 for oracle tests).
    pub fn with_hashes(
        kind: SketchKind,
        hashes: HashFamily,
        capacity: u64,
        sigma: NoiseScale,
        seed: u64,
    ) -> Result<Self> {
        check_dims(hashes.depth(), hashes.width())?;
        let grid = CounterGrid::new(
            hashes.depth(),
            hashes.width(),
            capacity,
            sigma,
            derive_seed(seed, NOISE_STREAM),
        )?;
        Ok(Self {
            kind,
            hashes,
            grid,
            capacity,
            t_now: 0,
            stats: OpStats::default(),
        })
    }

    pub fn update(&mut self, key: u64) -> Result<()> {
        let t = self.t_now + 1;
        if t > self.capacity {
            return Err(Error::CapacityExceeded {
                t,
                capacity: self.capacity,
            });
        }
        let w = self.hashes.width();
        for (i, row) in self.hashes.rows().iter().enumerate() {
            let hot = row.bucket(key);
            let c = match self.kind {
                SketchKind::Cms => 1,
                SketchKind::Cs => row.sign(key),
            };
            for j in 0..w {
                let inc = if j == hot { c } else { 0 };
                self.stats.nodes_created += self.grid.update(i, j, inc, t)? as u64;
            }
            self.stats.counter_updates += w as u64;
        }
        self.t_now = t;
        Ok(())
    }

    pub fn query(&self, key: u64) -> f64 {
        self.view().query(key)
    }

    pub fn view(&self) -> ReleaseView<'_> {
        ReleaseView {
            kind: self.kind,
            hashes: &self.hashes,
            grid: &self.grid,
            t: self.t_now,
        }
    }

    pub fn release(&self) -> ReleasedSketch {
        self.view().snapshot()
    }

    pub fn kind(&self) -> SketchKind {
        self.kind
    }

    pub fn depth(&self) -> usize {
        self.hashes.depth()
    }

    pub fn width(&self) -> usize {
        self.hashes.width()
    }

    pub fn capacity(&self) -> u64 {
        self.capacity
    }

    pub fn t_now(&self) -> u64 {
        self.t_now
    }

    pub fn hashes(&self) -> &HashFamily {
        &self.hashes
    }

    pub fn stats(&self) -> OpStats {
        self.stats
    }

    pub fn counter(&self, row: usize, col: usize) -> &GaussBmCounter {
        self.grid.get(row, col)
    }

    pub fn memory_words(&self) -> usize {
        memory_words(Variant::Punctual, self.depth(), self.width(), self.capacity)
    }
}

/// Round-robin lazy push of a hidden exact buffer into the released grid.
#[derive(Debug, Clone)]
pub struct LazySketch {
    kind: SketchKind,
    hashes: HashFamily,
    buffer: Vec<i64>,
    grid: CounterGrid,
    capacity: u64,
    pos: usize,
    t_now: u64,
    stats: OpStats,
}

impl LazySketch {
    pub fn new(
        kind: SketchKind,
        depth: usize,
        width: usize,
        capacity: u64,
        params: PrivacyParams,
        seed: u64,
    ) -> Result<Self> {
        check_dims(depth, width)?;
        let sigma = sigma_for(lazy_counter_capacity(capacity, width), params, depth)?;
        Self::with_hashes(
            kind,
            HashFamily::new(depth, width, seed),
            capacity,
            sigma,
            seed,
        )
    }

    pub fn with_hashes(
        kind: SketchKind,
        hashes: HashFamily,
        capacity: u64,
        sigma: NoiseScale,
        seed: u64,
    ) -> Result<Self> {
        let (depth, width) = (hashes.depth(), hashes.width());
        check_dims(depth, width)?;
        if capacity == 0 {
            return Err(Error::Parameter("capacity must be at least 1".into()));
        }
        let grid = CounterGrid::new(
            depth,
            width,
            lazy_counter_capacity(capacity, width),
            sigma,
            derive_seed(seed, NOISE_STREAM),
        )?;
        Ok(Self {
            kind,
            hashes,
            buffer: vec![0; depth * width],
            grid,
            capacity,
            pos: 0,
            t_now: 0,
            stats: OpStats::default(),
        })
    }

    /// Adds the arrival to `P`, then pushes column `pos` of every row into
    /// `O` (at that column's next interval step), clears it and advances
    /// `pos`.
    #[inline]
    pub fn update(&mut self, key: u64) -> Result<()> {
        let t = self.t_now + 1;
        if t > self.capacity {
            return Err(Error::CapacityExceeded {
                t,
                capacity: self.capacity,
            });
        }
        let w = self.hashes.width();
        // column `pos` is pushed for the ⌊(t−1)/w⌋+1-th time
        let interval = (t - 1) / w as u64 + 1;
        let pos = self.pos;
        for (i, row) in self.hashes.rows().iter().enumerate() {
            let c = match self.kind {
                SketchKind::Cms => 1,
                SketchKind::Cs => row.sign(key),
            };
            self.buffer[i * w + row.bucket(key)] += c;
            let cell = &mut self.buffer[i * w + pos];
            let pushed = std::mem::take(cell);
            self.stats.nodes_created += self.grid.update(i, pos, pushed, interval)? as u64;
            self.stats.pushed_mass += pushed;
        }
        let d = self.hashes.depth() as u64;
        self.stats.buffer_ops += 2 * d;
        self.stats.counter_updates += d;
        self.stats.pushes += d;
        self.pos = (pos + 1) % w;
        self.t_now = t;
        Ok(())
    }

    pub fn query(&self, key: u64) -> f64 {
        self.view().query(key)
    }

    pub fn view(&self) -> ReleaseView<'_> {
        ReleaseView {
            kind: self.kind,
            hashes: &self.hashes,
            grid: &self.grid,
            t: self.t_now,
        }
    }

    pub fn release(&self) -> ReleasedSketch {
        self.view().snapshot()
    }

    pub fn kind(&self) -> SketchKind {
        self.kind
    }

    pub fn depth(&self) -> usize {
        self.hashes.depth()
    }

    pub fn width(&self) -> usize {
        self.hashes.width()
    }

    pub fn capacity(&self) -> u64 {
        self.capacity
    }

    pub fn counter_capacity(&self) -> u64 {
        lazy_counter_capacity(self.capacity, self.width())
    }

    pub fn t_now(&self) -> u64 {
        self.t_now
    }

    pub fn pos(&self) -> usize {
        self.pos
    }

    pub fn hashes(&self) -> &HashFamily {
        &self.hashes
    }

    pub fn stats(&self) -> OpStats {
        self.stats
    }

    pub fn counter(&self, row: usize, col: usize) -> &GaussBmCounter {
        self.grid.get(row, col)
    }

    /// Exact in-interval count of a cell. Not private: diagnostics only.
    pub fn unreleased_count(&self, row: usize, col: usize) -> i64 {
        self.buffer[row * self.width() + col]
    }

    pub fn memory_words(&self) -> usize {
        memory_words(Variant::Lazy, self.depth(), self.width(), self.capacity)
    }
}

/// Feeds `keys` into a private sketch and hands the released view to
/// `on_release` after every arrival.
pub fn run_with_releases<S, I, F>(sketch: &mut S, keys: I, mut on_release: F) -> Result<()>
where
    S: ContinualSketch,
    I: IntoIterator<Item = u64>,
    F: FnMut(ReleaseView<'_>),
{
    for key in keys {
        sketch.update(key)?;
        on_release(sketch.view());
    }
    Ok(())
}

/// Shared interface of the two private sketches.
pub trait ContinualSketch {
    fn update(&mut self, key: u64) -> Result<()>;
    fn view(&self) -> ReleaseView<'_>;
    fn memory_words(&self) -> usize;
    fn stats(&self) -> OpStats;
}

impl ContinualSketch for PunctualSketch {
    fn update(&mut self, key: u64) -> Result<()> {
        PunctualSketch::update(self, key)
    }
    fn view(&self) -> ReleaseView<'_> {
        PunctualSketch::view(self)
    }
    fn memory_words(&self) -> usize {
        PunctualSketch::memory_words(self)
    }
    fn stats(&self) -> OpStats {
        self.stats
    }
}

impl ContinualSketch for LazySketch {
    fn update(&mut self, key: u64) -> Result<()> {
        LazySketch::update(self, key)
    }
    fn view(&self) -> ReleaseView<'_> {
        LazySketch::view(self)
    }
    fn memory_words(&self) -> usize {
        LazySketch::memory_words(self)
    }
    fn stats(&self) -> OpStats {
        self.stats
    }
}
