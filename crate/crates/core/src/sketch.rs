//! Non-private Count-Min and Count Sketch, plus the CMS + min-heap
//! heavy-hitter baseline.

use std::collections::{BTreeSet, HashMap};
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hashing::{lower_median, HashFamily, MAX_DEPTH};

/// Estimator family: Count-Min (row minimum) or Count Sketch (signed median).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SketchKind {
    Cms,
    Cs,
}

impl fmt::Display for SketchKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            SketchKind::Cms => "cms",
            SketchKind::Cs => "cs",
        })
    }
}

impl FromStr for SketchKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "cms" => Ok(SketchKind::Cms),
            "cs" => Ok(SketchKind::Cs),
            other => Err(Error::Parameter(format!("unknown sketch kind {other:?}"))),
        }
    }
}

pub(crate) fn check_dims(depth: usize, width: usize) -> Result<()> {
    if depth == 0 || depth > MAX_DEPTH {
        return Err(Error::Parameter(format!(
            "depth must be in 1..={MAX_DEPTH}, got {depth}"
        )));
    }
    if width == 0 {
        return Err(Error::Parameter("width must be at least 1".into()));
    }
    Ok(())
}

/// A d×w matrix of exact integer counters.
#[derive(Debug, Clone)]
pub struct PlainSketch {
    kind: SketchKind,
    hashes: HashFamily,
    counters: Vec<i64>,
}

impl PlainSketch {
    pub fn new(kind: SketchKind, depth: usize, width: usize, seed: u64) -> Result<Self> {
        check_dims(depth, width)?;
        Ok(Self::with_hashes(kind, HashFamily::new(depth, width, seed)))
    }

    pub fn with_hashes(kind: SketchKind, hashes: HashFamily) -> Self {
        let counters = vec![0; hashes.depth() * hashes.width()];
        Self {
            kind,
            hashes,
            counters,
        }
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

    pub fn hashes(&self) -> &HashFamily {
        &self.hashes
    }

    /// Adds `weight` to one cell per row (signed by g_i for CS).
    #[inline]
    pub fn update(&mut self, key: u64, weight: i64) {
        let w = self.width();
        for (i, row) in self.hashes.rows().iter().enumerate() {
            let c = match self.kind {
                SketchKind::Cms => weight,
                SketchKind::Cs => row.sign(key) * weight,
            };
            self.counters[i * w + row.bucket(key)] += c;
        }
    }

    /// Row minimum (CMS) or lower median of signed readings (CS).
    #[inline]
    pub fn query(&self, key: u64) -> i64 {
        let w = self.width();
        let rows = self.hashes.rows();
        match self.kind {
            SketchKind::Cms => rows
                .iter()
                .enumerate()
                .map(|(i, row)| self.counters[i * w + row.bucket(key)])
                .min()
                .expect("depth >= 1"),
            SketchKind::Cs => {
                let mut buf = [0i64; MAX_DEPTH];
                for (i, row) in rows.iter().enumerate() {
                    buf[i] = row.sign(key) * self.counters[i * w + row.bucket(key)];
                }
                lower_median(&mut buf[..rows.len()])
            }
        }
    }

    pub fn cell(&self, row: usize, col: usize) -> i64 {
        self.counters[row * self.width() + col]
    }

    pub fn row(&self, row: usize) -> &[i64] {
        let w = self.width();
        &self.counters[row * w..(row + 1) * w]
    }

    /// Counter words held: d·w.
    pub fn memory_words(&self) -> usize {
        self.counters.len()
    }
}

/// CMS-backed top-k tracker: an ordered set keyed by (estimate, key) acts as
/// the size-k min-heap.
#[derive(Debug, Clone)]
pub struct HeapHeavyHitters {
    sketch: PlainSketch,
    k: usize,
    heap: BTreeSet<(i64, u64)>,
    entries: HashMap<u64, i64>,
    t_now: u64,
}

impl HeapHeavyHitters {
    pub fn new(k: usize, depth: usize, width: usize, seed: u64) -> Result<Self> {
        if k == 0 {
            return Err(Error::Parameter("k must be at least 1".into()));
        }
        Ok(Self {
            sketch: PlainSketch::new(SketchKind::Cms, depth, width, seed)?,
            k,
            heap: BTreeSet::new(),
            entries: HashMap::with_capacity(k + 1),
            t_now: 0,
        })
    }

    pub fn update(&mut self, key: u64) {
        self.sketch.update(key, 1);
        self.t_now += 1;
        let est = self.sketch.query(key);
        if let Some(old) = self.entries.get_mut(&key) {
            self.heap.remove(&(*old, key));
            *old = est;
            self.heap.insert((est, key));
        } else if self.heap.len() < self.k {
            self.entries.insert(key, est);
            self.heap.insert((est, key));
        } else if let Some(&(min_est, min_key)) = self.heap.first() {
            if est > min_est {
                self.heap.pop_first();
                self.entries.remove(&min_key);
                self.entries.insert(key, est);
                self.heap.insert((est, key));
            }
        }
    }

    /// Heap entries whose estimate is at least t/k, largest first.
    pub fn report(&self) -> Vec<(u64, i64)> {
        let threshold = self.t_now as f64 / self.k as f64;
        self.heap
            .iter()
            .rev()
            .filter(|(est, _)| *est as f64 >= threshold)
            .map(|&(est, key)| (key, est))
            .collect()
    }

    pub fn sketch(&self) -> &PlainSketch {
        &self.sketch
    }

    pub fn t_now(&self) -> u64 {
        self.t_now
    }

    /// Sketch words plus two words per heap entry.
    pub fn memory_words(&self) -> usize {
        self.sketch.memory_words() + 2 * self.k
    }
}
