//! Experiment harness: frequency-estimation and heavy-hitter runs, memory
//! budgeting and CSV/JSON reporting.
//!
//! Memory is accounted in 8-byte words (see [`crate::private_sketch`] for the
//! per-variant formula) and byte budgets use 1 KB = 1000 bytes.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hashing::HashFamily;
use crate::heavy_hitters::{HhConfig, HhReport, LazyHeavyHitters};
use crate::noise::{derive_seed, NoiseScale, PrivacyParams};
use crate::private_sketch::{memory_words, LazySketch, PunctualSketch, SketchSpec, Variant};
use crate::sketch::{HeapHeavyHitters, PlainSketch};
use crate::streamgen::{trace_stream, zipf_stream, ExactOracle, ZipfSpec};

pub const WORD_BYTES: usize = 8;
pub const BYTES_PER_KB: usize = 1000;
/// Number of true top items scored by ARE.
pub const ARE_TOP: usize = 15;
pub const SCHEMA_VERSION: u32 = 1;
/// Depth of the non-private heap baseline in heavy-hitter runs.
pub const BASELINE_DEPTH: usize = 3;

const STREAM_LABEL: u64 = 0x5354;
const SKETCH_LABEL: u64 = 0x534b;

/// Any of the six frequency sketches behind one interface.
#[derive(Debug, Clone)]
pub enum AnySketch {
    Plain(PlainSketch),
    Punctual(PunctualSketch),
    Lazy(LazySketch),
}

impl AnySketch {
    /// Builds `spec` with `depth × width` cells over `capacity` arrivals.
    /// `noise_off` replaces the calibrated σ with zero (tests only).
    pub fn build(
        spec: SketchSpec,
        depth: usize,
        width: usize,
        capacity: u64,
        params: PrivacyParams,
        seed: u64,
        noise_off: bool,
    ) -> Result<Self> {
        Ok(match (spec.variant, noise_off) {
            (Variant::Plain, _) => {
                AnySketch::Plain(PlainSketch::new(spec.kind, depth, width, seed)?)
            }
            (Variant::Punctual, false) => AnySketch::Punctual(PunctualSketch::new(
                spec.kind, depth, width, capacity, params, seed,
            )?),
            (Variant::Lazy, false) => AnySketch::Lazy(LazySketch::new(
                spec.kind, depth, width, capacity, params, seed,
            )?),
            (Variant::Punctual, true) => AnySketch::Punctual(PunctualSketch::with_hashes(
                spec.kind,
                HashFamily::new(depth, width, seed),
                capacity,
                NoiseScale::ZERO,
                seed,
            )?),
            (Variant::Lazy, true) => AnySketch::Lazy(LazySketch::with_hashes(
                spec.kind,
                HashFamily::new(depth, width, seed),
                capacity,
                NoiseScale::ZERO,
                seed,
            )?),
        })
    }

    #[inline]
    pub fn update(&mut self, key: u64) -> Result<()> {
        match self {
            AnySketch::Plain(s) => {
                s.update(key, 1);
                Ok(())
            }
            AnySketch::Punctual(s) => s.update(key),
            AnySketch::Lazy(s) => s.update(key),
        }
    }

    pub fn query(&self, key: u64) -> f64 {
        match self {
            AnySketch::Plain(s) => s.query(key) as f64,
            AnySketch::Punctual(s) => s.query(key),
            AnySketch::Lazy(s) => s.query(key),
        }
    }

    pub fn memory_words(&self) -> usize {
        match self {
            AnySketch::Plain(s) => s.memory_words(),
            AnySketch::Punctual(s) => s.memory_words(),
            AnySketch::Lazy(s) => s.memory_words(),
        }
    }
}

/// Largest width whose memory fits in `budget_bytes`.
///
/// Lazy memory is not monotone in `w` (wider sketches have shorter counter
/// streams and may drop a tree level), so every candidate width is checked.
pub fn width_for_budget(
    variant: Variant,
    budget_bytes: usize,
    depth: usize,
    capacity: u64,
    word_bytes: usize,
) -> Result<usize> {
    if depth == 0 || word_bytes == 0 {
        return Err(Error::Config("depth and word size must be positive".into()));
    }
    let budget_words = budget_bytes / word_bytes;
    (1..=budget_words / depth)
        .rev()
        .find(|&w| memory_words(variant, depth, w, capacity) <= budget_words)
        .ok_or_else(|| {
            Error::Config(format!(
                "budget of {budget_bytes} bytes cannot hold a {variant:?} sketch of depth {depth}"
            ))
        })
}

/// (1/k) Σ |f − f̂| / f over the given true items.
pub fn average_relative_error(truth: &[(u64, u64)], mut estimate: impl FnMut(u64) -> f64) -> f64 {
    if truth.is_empty() {
        return 0.0;
    }
    let total: f64 = truth
        .iter()
        .map(|&(key, f)| (f as f64 - estimate(key)).abs() / f as f64)
        .sum();
    total / truth.len() as f64
}

/// Precision and recall of `reported` against `truth`. An empty report has
/// precision 1; an empty truth set has recall 1.
pub fn precision_recall(reported: &[u64], truth: &[u64]) -> (f64, f64) {
    let hits = reported.iter().filter(|k| truth.contains(k)).count() as f64;
    let precision = if reported.is_empty() {
        1.0
    } else {
        hits / reported.len() as f64
    };
    let recall = if truth.is_empty() {
        1.0
    } else {
        hits / truth.len() as f64
    };
    (precision, recall)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Dims {
    Explicit { depth: usize, width: usize },
    Budget { depth: usize, bytes: usize },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    pub spec: SketchSpec,
    pub epsilon: f64,
    pub delta: f64,
    pub dims: Dims,
    pub skew: f64,
    pub universe: u64,
    pub length: u64,
    pub seed: u64,
    pub trials: usize,
    pub noise_off: bool,
}

impl RunConfig {
    pub fn validate(&self) -> Result<PrivacyParams> {
        if self.trials == 0 {
            return Err(Error::Config("trials must be at least 1".into()));
        }
        if self.length == 0 {
            return Err(Error::Config("stream length must be at least 1".into()));
        }
        PrivacyParams::new(self.epsilon, self.delta)
    }

    /// Resolved (depth, width).
    pub fn shape(&self) -> Result<(usize, usize)> {
        match self.dims {
            Dims::Explicit { depth, width } => Ok((depth, width)),
            Dims::Budget { depth, bytes } => Ok((
                depth,
                width_for_budget(self.spec.variant, bytes, depth, self.length, WORD_BYTES)?,
            )),
        }
    }

    /// Stream of trial `trial`; shared by every sketch run with this seed.
    pub fn stream_spec(&self, trial: usize) -> ZipfSpec {
        ZipfSpec {
            skew: self.skew,
            universe: self.universe,
            length: self.length,
            seed: derive_seed(derive_seed(self.seed, STREAM_LABEL), trial as u64),
        }
    }
}

/// Measurements from one trial.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrialResult {
    pub wall_time_s: f64,
    pub are: f64,
    pub precision: Option<f64>,
    pub recall: Option<f64>,
}

/// One CSV row: configuration echo plus trial-averaged metrics.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchReport {
    pub schema_version: u32,
    pub sketch: String,
    pub epsilon: f64,
    pub delta: f64,
    pub skew: Option<f64>,
    pub length: u64,
    pub depth: usize,
    pub width: usize,
    pub k: Option<usize>,
    pub k_tilde: Option<usize>,
    pub seed: u64,
    pub trials: usize,
    pub memory_words: usize,
    pub memory_bytes: usize,
    pub are_topk: f64,
    pub are_std: f64,
    pub precision: Option<f64>,
    pub precision_std: Option<f64>,
    pub recall: Option<f64>,
    pub recall_std: Option<f64>,
    pub wall_time_total_s: f64,
    pub wall_time_std_s: f64,
    pub updates_per_s: f64,
}

impl BenchReport {
    pub const COLUMNS: [&'static str; 23] = [
        "schema_version",
        "sketch",
        "epsilon",
        "delta",
        "skew",
        "length",
        "depth",
        "width",
        "k",
        "k_tilde",
        "seed",
        "trials",
        "memory_words",
        "memory_bytes",
        "are_topk",
        "are_std",
        "precision",
        "precision_std",
        "recall",
        "recall_std",
        "wall_time_total_s",
        "wall_time_std_s",
        "updates_per_s",
    ];

    /// Columns that depend on wall-clock time.
    pub const TIMING_COLUMNS: [&'static str; 3] =
        ["wall_time_total_s", "wall_time_std_s", "updates_per_s"];
}

/// Arithmetic mean and population standard deviation.
pub fn mean_std(values: &[f64]) -> (f64, f64) {
    if values.is_empty() {
        return (0.0, 0.0);
    }
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
    (mean, var.sqrt())
}

fn optional_mean_std(values: &[Option<f64>]) -> (Option<f64>, Option<f64>) {
    let present: Vec<f64> = values.iter().flatten().copied().collect();
    if present.is_empty() {
        (None, None)
    } else {
        let (m, s) = mean_std(&present);
        (Some(m), Some(s))
    }
}

struct Aggregate {
    are: (f64, f64),
    precision: (Option<f64>, Option<f64>),
    recall: (Option<f64>, Option<f64>),
    time: (f64, f64),
}

fn aggregate(trials: &[TrialResult]) -> Aggregate {
    let pick = |f: fn(&TrialResult) -> f64| trials.iter().map(f).collect::<Vec<_>>();
    let pick_opt = |f: fn(&TrialResult) -> Option<f64>| trials.iter().map(f).collect::<Vec<_>>();
    Aggregate {
        are: mean_std(&pick(|t| t.are)),
        precision: optional_mean_std(&pick_opt(|t| t.precision)),
        recall: optional_mean_std(&pick_opt(|t| t.recall)),
        time: mean_std(&pick(|t| t.wall_time_s)),
    }
}

/// Runs every trial of a frequency-estimation configuration.
pub fn run_frequency_trials(cfg: &RunConfig) -> Result<Vec<TrialResult>> {
    let params = cfg.validate()?;
    let (depth, width) = cfg.shape()?;
    let mut results = Vec::with_capacity(cfg.trials);
    for trial in 0..cfg.trials {
        let keys: Vec<u64> = zipf_stream(&cfg.stream_spec(trial))?.collect();
        let oracle = ExactOracle::from_keys(&keys);
        let sketch_seed = derive_seed(derive_seed(cfg.seed, SKETCH_LABEL), trial as u64);
        let mut sketch = AnySketch::build(
            cfg.spec,
            depth,
            width,
            cfg.length,
            params,
            sketch_seed,
            cfg.noise_off,
        )?;

        let start = Instant::now();
        for &key in &keys {
            sketch.update(key)?;
        }
        let wall_time_s = start.elapsed().as_secs_f64();

        let top = oracle.topk(ARE_TOP);
        results.push(TrialResult {
            wall_time_s,
            are: average_relative_error(&top, |k| sketch.query(k)),
            precision: None,
            recall: None,
        });
    }
    Ok(results)
}

/// Builds the report row for `cfg` from already-run trials.
pub fn summarize_frequency(cfg: &RunConfig, trials: &[TrialResult]) -> Result<BenchReport> {
    let (depth, width) = cfg.shape()?;
    let words = memory_words(cfg.spec.variant, depth, width, cfg.length);
    let agg = aggregate(trials);
    Ok(BenchReport {
        schema_version: SCHEMA_VERSION,
        sketch: cfg.spec.to_string(),
        epsilon: cfg.epsilon,
        delta: cfg.delta,
        skew: Some(cfg.skew),
        length: cfg.length,
        depth,
        width,
        k: None,
        k_tilde: None,
        seed: cfg.seed,
        trials: trials.len(),
        memory_words: words,
        memory_bytes: words * WORD_BYTES,
        are_topk: agg.are.0,
        are_std: agg.are.1,
        precision: agg.precision.0,
        precision_std: agg.precision.1,
        recall: agg.recall.0,
        recall_std: agg.recall.1,
        wall_time_total_s: agg.time.0,
        wall_time_std_s: agg.time.1,
        updates_per_s: if agg.time.0 > 0.0 {
            cfg.length as f64 / agg.time.0
        } else {
            0.0
        },
    })
}

/// Streams `cfg.length` Zipf items through the configured sketch, timing only
/// the update loop, and scores ARE over the true top-15 at end of stream.
pub fn run_frequency_bench(cfg: &RunConfig) -> Result<BenchReport> {
    let trials = run_frequency_trials(cfg)?;
    summarize_frequency(cfg, &trials)
}

/// Where a heavy-hitter run gets its arrivals.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum StreamInput {
    Zipf {
        skew: f64,
        universe: u64,
        length: u64,
    },
    Trace(PathBuf),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HhRunConfig {
    pub input: StreamInput,
    pub k: usize,
    pub k_tilde: usize,
    pub epsilon: f64,
    pub delta: f64,
    pub beta: f64,
    pub seed: u64,
    pub trials: usize,
    /// Width of the CMS + heap baseline; defaults to the LazyHH word budget
    /// spread over [`BASELINE_DEPTH`] rows.
    pub baseline_width: Option<usize>,
}

/// LazyHH and baseline rows for one heavy-hitter configuration.
#[derive(Debug, Clone, PartialEq)]
pub struct HhBenchOutcome {
    pub lazy: BenchReport,
    pub baseline: BenchReport,
    pub lazy_trials: Vec<TrialResult>,
    pub baseline_trials: Vec<TrialResult>,
}

impl HhBenchOutcome {
    pub fn rows(&self) -> [BenchReport; 2] {
        [self.lazy.clone(), self.baseline.clone()]
    }
}

fn hh_keys(input: &StreamInput, seed: u64, trial: usize) -> Result<Vec<u64>> {
    match input {
        StreamInput::Zipf {
            skew,
            universe,
            length,
        } => Ok(zipf_stream(&ZipfSpec {
            skew: *skew,
            universe: *universe,
            length: *length,
            seed: derive_seed(derive_seed(seed, STREAM_LABEL), trial as u64),
        })?
        .collect()),
        StreamInput::Trace(path) => Ok(trace_stream(path)?.collect()),
    }
}

/// Runs LazyHH and the heap baseline on the same streams. Precision and recall
/// are taken at end of stream against `{y : f_y ≥ T/k}`; ARE is over the
/// reported items (0 when nothing is reported). When `reports` is given, the
/// first trial's LazyHH report is written as a JSON line at every refresh.
pub fn run_hh_bench(
    cfg: &HhRunConfig,
    mut reports: Option<&mut dyn Write>,
) -> Result<HhBenchOutcome> {
    if cfg.trials == 0 {
        return Err(Error::Config("trials must be at least 1".into()));
    }
    let params = PrivacyParams::new(cfg.epsilon, cfg.delta)?;
    let trace_keys = match &cfg.input {
        StreamInput::Trace(_) => Some(hh_keys(&cfg.input, cfg.seed, 0)?),
        StreamInput::Zipf { .. } => None,
    };

    let mut lazy_trials = Vec::with_capacity(cfg.trials);
    let mut base_trials = Vec::with_capacity(cfg.trials);
    let mut lazy_words = 0;
    let mut base_shape = (BASELINE_DEPTH, 0);
    let mut length = 0;

    for trial in 0..cfg.trials {
        let owned;
        let keys: &[u64] = match &trace_keys {
            Some(k) => k,
            None => {
                owned = hh_keys(&cfg.input, cfg.seed, trial)?;
                &owned
            }
        };
        length = keys.len() as u64;
        let oracle = ExactOracle::from_keys(keys);
        let truth = oracle.heavy_set(length as f64 / cfg.k as f64);
        let sketch_seed = derive_seed(derive_seed(cfg.seed, SKETCH_LABEL), trial as u64);

        let hh_cfg = HhConfig {
            k: cfg.k,
            k_tilde: cfg.k_tilde,
            params,
            beta: cfg.beta,
            capacity: length,
        };
        let mut lazy = LazyHeavyHitters::new(hh_cfg, sketch_seed)?;
        lazy_words = lazy.memory_words();
        let mut sink = if trial == 0 {
            reports.as_deref_mut()
        } else {
            None
        };
        let start = Instant::now();
        let mut last_t = 0;
        for &key in keys {
            let report = lazy.update(key)?;
            if let Some(out) = sink.as_deref_mut() {
                if report.t != last_t {
                    last_t = report.t;
                    write_report_line(out, &report)?;
                }
            }
        }
        let lazy_time = start.elapsed().as_secs_f64();
        let final_report = lazy.report();
        lazy_trials.push(score_report(
            lazy_time,
            final_report.items.iter().map(|i| (i.key, i.estimate)),
            &oracle,
            &truth,
        ));

        let width = cfg
            .baseline_width
            .unwrap_or_else(|| (lazy_words / BASELINE_DEPTH).max(1));
        base_shape = (BASELINE_DEPTH, width);
        let mut heap = HeapHeavyHitters::new(cfg.k, BASELINE_DEPTH, width, sketch_seed)?;
        let start = Instant::now();
        for &key in keys {
            heap.update(key);
        }
        let base_time = start.elapsed().as_secs_f64();
        base_trials.push(score_report(
            base_time,
            heap.report().into_iter().map(|(k, v)| (k, v as f64)),
            &oracle,
            &truth,
        ));
    }

    let row = |sketch: &str, depth, width, words, k_tilde, trials: &[TrialResult]| {
        let agg = aggregate(trials);
        BenchReport {
            schema_version: SCHEMA_VERSION,
            sketch: sketch.to_string(),
            epsilon: cfg.epsilon,
            delta: cfg.delta,
            skew: match cfg.input {
                StreamInput::Zipf { skew, .. } => Some(skew),
                StreamInput::Trace(_) => None,
            },
            length,
            depth,
            width,
            k: Some(cfg.k),
            k_tilde,
            seed: cfg.seed,
            trials: trials.len(),
            memory_words: words,
            memory_bytes: words * WORD_BYTES,
            are_topk: agg.are.0,
            are_std: agg.are.1,
            precision: agg.precision.0,
            precision_std: agg.precision.1,
            recall: agg.recall.0,
            recall_std: agg.recall.1,
            wall_time_total_s: agg.time.0,
            wall_time_std_s: agg.time.1,
            updates_per_s: if agg.time.0 > 0.0 {
                length as f64 / agg.time.0
            } else {
                0.0
            },
        }
    };
    let hh_depth = HhConfig {
        k: cfg.k,
        k_tilde: cfg.k_tilde,
        params,
        beta: cfg.beta,
        capacity: length,
    }
    .depth();
    let base_words = base_shape.0 * base_shape.1 + 2 * cfg.k;
    Ok(HhBenchOutcome {
        lazy: row(
            "lazy-hh",
            hh_depth,
            cfg.k_tilde,
            lazy_words,
            Some(cfg.k_tilde),
            &lazy_trials,
        ),
        baseline: row(
            "cms-heap",
            base_shape.0,
            base_shape.1,
            base_words,
            None,
            &base_trials,
        ),
        lazy_trials,
        baseline_trials: base_trials,
    })
}

fn score_report(
    wall_time_s: f64,
    reported: impl Iterator<Item = (u64, f64)>,
    oracle: &ExactOracle,
    truth: &[u64],
) -> TrialResult {
    let reported: Vec<(u64, f64)> = reported.collect();
    let keys: Vec<u64> = reported.iter().map(|&(k, _)| k).collect();
    let (precision, recall) = precision_recall(&keys, truth);
    let are = if reported.is_empty() {
        0.0
    } else {
        reported
            .iter()
            .map(|&(k, v)| {
                let f = oracle.frequency(k).max(1) as f64;
                (f - v).abs() / f
            })
            .sum::<f64>()
            / reported.len() as f64
    };
    TrialResult {
        wall_time_s,
        are,
        precision: Some(precision),
        recall: Some(recall),
    }
}

/// One JSON line: `{"t":…,"items":[{"key":…,"estimate":…},…]}`.
pub fn write_report_line(out: &mut dyn Write, report: &HhReport) -> Result<()> {
    serde_json::to_writer(&mut *out, report)?;
    out.write_all(b"\n").map_err(|source| Error::Io {
        path: PathBuf::from("<reports>"),
        source,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ReportFormat {
    Csv,
    Json,
}

impl std::str::FromStr for ReportFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "csv" => Ok(ReportFormat::Csv),
            "json" => Ok(ReportFormat::Json),
            other => Err(Error::Config(format!("unknown format {other:?}"))),
        }
    }
}

/// Writes the reports to any writer. CSV always starts with the header row,
/// even when `reports` is empty.
pub fn write_reports<W: Write>(
    reports: &[BenchReport],
    format: ReportFormat,
    out: W,
) -> Result<()> {
    match format {
        ReportFormat::Csv => {
            let mut w = csv::WriterBuilder::new()
                .has_headers(false)
                .from_writer(out);
            w.write_record(BenchReport::COLUMNS)?;
            for r in reports {
                w.serialize(r)?;
            }
            w.flush().map_err(|source| Error::Io {
                path: PathBuf::from("<csv>"),
                source,
            })?;
        }
        ReportFormat::Json => {
            let mut out = out;
            serde_json::to_writer_pretty(&mut out, reports)?;
            out.write_all(b"\n").map_err(|source| Error::Io {
                path: PathBuf::from("<json>"),
                source,
            })?;
        }
    }
    Ok(())
}

/// [`write_reports`] to a file.
pub fn emit_report(
    reports: &[BenchReport],
    format: ReportFormat,
    path: impl AsRef<Path>,
) -> Result<()> {
    let path = path.as_ref();
    let file = File::create(path).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })?;
    write_reports(reports, format, BufWriter::new(file))
}
