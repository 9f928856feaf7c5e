use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use codp_sketch::bench::{
    run_frequency_bench, run_hh_bench, write_reports, Dims, HhRunConfig, ReportFormat, RunConfig,
    StreamInput, BYTES_PER_KB,
};
use codp_sketch::streamgen::{write_keys, zipf_stream, FixtureSpec, ZipfSpec};
use codp_sketch::{Error, Result, SketchSpec};

#[derive(Parser)]
#[command(
    name = "codp",
    version,
    about = "Private sketches under continual observation"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Write a Zipf stream as newline-delimited tokens.
    GenZipf(GenZipf),
    /// Write the heavy-tailed heavy-hitter fixture trace.
    GenFixture(GenFixture),
    /// Frequency-estimation benchmark over a grid of sketches and parameters.
    FreqBench(FreqBench),
    /// Heavy-hitter benchmark: LazyHH against a CMS + heap baseline.
    HhBench(HhBench),
}

#[derive(Args)]
struct Common {
    /// Base seed (overridden by CODP_SEED).
    #[arg(long, default_value_t = 1)]
    seed: u64,
    /// Output path; stdout when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct GenZipf {
    #[arg(long, default_value_t = 1.3)]
    skew: f64,
    #[arg(long, default_value_t = 1 << 20)]
    length: u64,
    #[arg(long, default_value_t = 1_000_000)]
    universe: u64,
    #[command(flatten)]
    common: Common,
}

#[derive(Args)]
struct GenFixture {
    #[arg(long)]
    length: Option<u64>,
    #[command(flatten)]
    common: Common,
}

#[derive(Args)]
struct FreqBench {
    /// Sketches to run (comma separated).
    #[arg(long, value_delimiter = ',', default_value = "lazy-cms")]
    kind: Vec<SketchSpec>,
    #[arg(long, value_delimiter = ',', default_value = "1.0")]
    eps: Vec<f64>,
    #[arg(long, default_value_t = 0.001)]
    delta: f64,
    /// Explicit widths (comma separated).
    #[arg(long, value_delimiter = ',', conflicts_with = "budget_kb")]
    width: Vec<usize>,
    /// Byte budgets in KB of 1000 bytes; the width is solved per sketch.
    #[arg(long, value_delimiter = ',')]
    budget_kb: Vec<f64>,
    #[arg(long, default_value_t = 3)]
    depth: usize,
    #[arg(long, value_delimiter = ',', default_value = "1.3")]
    skew: Vec<f64>,
    #[arg(long, default_value_t = 1 << 20)]
    length: u64,
    #[arg(long, default_value_t = 1_000_000)]
    universe: u64,
    #[arg(long, default_value_t = 5)]
    trials: usize,
    #[arg(long, default_value = "csv")]
    format: ReportFormat,
    /// Run private sketches with σ = 0.
    #[arg(long)]
    noise_off: bool,
    #[command(flatten)]
    common: Common,
}

#[derive(Args)]
struct HhBench {
    /// Trace of newline-delimited tokens; a Zipf stream is used otherwise.
    #[arg(long)]
    trace: Option<PathBuf>,
    #[arg(long, default_value_t = 1.3)]
    skew: f64,
    #[arg(long, default_value_t = 1 << 20)]
    length: u64,
    #[arg(long, default_value_t = 1_000_000)]
    universe: u64,
    #[arg(long, default_value_t = 128)]
    k: usize,
    /// Candidate-set sizes (comma separated); defaults to 4k.
    #[arg(long, value_delimiter = ',')]
    ktilde: Vec<usize>,
    #[arg(long, default_value_t = 0.5)]
    eps: f64,
    #[arg(long, default_value_t = 0.001)]
    delta: f64,
    #[arg(long, default_value_t = 0.0005)]
    beta: f64,
    /// Width of the baseline CMS; matched to LazyHH memory when omitted.
    #[arg(long)]
    width: Option<usize>,
    #[arg(long, default_value_t = 5)]
    trials: usize,
    #[arg(long, default_value = "csv")]
    format: ReportFormat,
    /// Write LazyHH reports of the first trial as JSON lines to this path.
    #[arg(long)]
    emit_reports: Option<PathBuf>,
    #[command(flatten)]
    common: Common,
}

fn seed(flag: u64) -> Result<u64> {
    match std::env::var("CODP_SEED") {
        Ok(v) => v.trim().parse().map_err(|_| {
            Error::Config(format!("CODP_SEED must be an unsigned integer, got {v:?}"))
        }),
        Err(_) => Ok(flag),
    }
}

fn create(path: &PathBuf) -> Result<BufWriter<File>> {
    File::create(path)
        .map(BufWriter::new)
        .map_err(|source| Error::Io {
            path: path.clone(),
            source,
        })
}

fn output(out: &Option<PathBuf>) -> Result<Box<dyn Write>> {
    Ok(match out {
        Some(p) => Box::new(create(p)?),
        None => Box::new(BufWriter::new(io::stdout().lock())),
    })
}

fn flush(mut w: Box<dyn Write>, path: &Option<PathBuf>) -> Result<()> {
    w.flush().map_err(|source| Error::Io {
        path: path.clone().unwrap_or_else(|| PathBuf::from("<stdout>")),
        source,
    })
}

fn gen_zipf(a: GenZipf) -> Result<()> {
    let out = a
        .common
        .out
        .ok_or_else(|| Error::Config("--out is required".into()))?;
    let spec = ZipfSpec {
        skew: a.skew,
        universe: a.universe,
        length: a.length,
        seed: seed(a.common.seed)?,
    };
    let n = write_keys(&out, zipf_stream(&spec)?)?;
    eprintln!("wrote {n} tokens to {}", out.display());
    Ok(())
}

fn gen_fixture(a: GenFixture) -> Result<()> {
    let out = a
        .common
        .out
        .ok_or_else(|| Error::Config("--out is required".into()))?;
    let mut spec = FixtureSpec {
        seed: seed(a.common.seed)?,
        ..FixtureSpec::default()
    };
    if let Some(len) = a.length {
        spec.length = len;
    }
    let n = spec.write(&out)?;
    eprintln!("wrote {n} tokens to {}", out.display());
    Ok(())
}

fn freq_bench(a: FreqBench) -> Result<()> {
    let seed = seed(a.common.seed)?;
    let dims: Vec<Dims> = if !a.budget_kb.is_empty() {
        a.budget_kb
            .iter()
            .map(|&kb| Dims::Budget {
                depth: a.depth,
                bytes: (kb * BYTES_PER_KB as f64).round() as usize,
            })
            .collect()
    } else if !a.width.is_empty() {
        a.width
            .iter()
            .map(|&width| Dims::Explicit {
                depth: a.depth,
                width,
            })
            .collect()
    } else {
        return Err(Error::Config(
            "one of --width or --budget-kb is required".into(),
        ));
    };

    let mut reports = Vec::new();
    for &skew in &a.skew {
        for &dim in &dims {
            for &spec in &a.kind {
                for &epsilon in &a.eps {
                    let cfg = RunConfig {
                        spec,
                        epsilon,
                        delta: a.delta,
                        dims: dim,
                        skew,
                        universe: a.universe,
                        length: a.length,
                        seed,
                        trials: a.trials,
                        noise_off: a.noise_off,
                    };
                    reports.push(run_frequency_bench(&cfg)?);
                }
            }
        }
    }
    let mut w = output(&a.common.out)?;
    write_reports(&reports, a.format, &mut w)?;
    flush(w, &a.common.out)
}

fn hh_bench(a: HhBench) -> Result<()> {
    let seed = seed(a.common.seed)?;
    let input = match a.trace {
        Some(path) => StreamInput::Trace(path),
        None => StreamInput::Zipf {
            skew: a.skew,
            universe: a.universe,
            length: a.length,
        },
    };
    let ktildes = if a.ktilde.is_empty() {
        vec![4 * a.k]
    } else {
        a.ktilde
    };
    let mut sink = a.emit_reports.as_ref().map(create).transpose()?;

    let mut reports = Vec::new();
    for (i, &k_tilde) in ktildes.iter().enumerate() {
        let cfg = HhRunConfig {
            input: input.clone(),
            k: a.k,
            k_tilde,
            epsilon: a.eps,
            delta: a.delta,
            beta: a.beta,
            seed,
            trials: a.trials,
            baseline_width: a.width,
        };
        // reports are emitted for the first candidate-set size only
        let reports_out = if i == 0 {
            sink.as_mut().map(|s| s as &mut dyn Write)
        } else {
            None
        };
        let outcome = run_hh_bench(&cfg, reports_out)?;
        reports.extend(outcome.rows());
    }
    if let (Some(s), Some(p)) = (sink, &a.emit_reports) {
        flush(Box::new(s), &Some(p.clone()))?;
    }
    let mut w = output(&a.common.out)?;
    write_reports(&reports, a.format, &mut w)?;
    flush(w, &a.common.out)
}

fn main() -> ExitCode {
    let result = match Cli::parse().command {
        Command::GenZipf(a) => gen_zipf(a),
        Command::GenFixture(a) => gen_fixture(a),
        Command::FreqBench(a) => freq_bench(a),
        Command::HhBench(a) => hh_bench(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
