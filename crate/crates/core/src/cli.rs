//! Command-line front end: `separate`, `simulate`, `evaluate` and `benchmark`.
//!
//! Exit codes: 0 success, 1 invalid arguments or input, 2 I/O failure,
//! 3 numerical failure, 4 benchmark failure.

use std::ffi::OsString;
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Args, Parser, Subcommand};
use nalgebra::DMatrix;

use crate::audio::{load_impulse_responses, mix, read_wav, synth_source, write_wav, MixingSpec, SourceKind};
use crate::error::{Error, Result, Violation};
use crate::metrics::{mean_improvement, sdr_improvement, write_jsonl, write_table};
use crate::pipeline::{back_project, Ilrma};
use crate::stft::{istft, stft, StftPlan};
use crate::cost_eval::audit_descent;
use crate::suite::{descent_trace, majorizer_draws, separation_trial, SyntheticScenario};
use crate::types::{ConvergenceTrace, GgdConfig, TraceRecord};

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 1;
pub const EXIT_IO: i32 = 2;
pub const EXIT_NUMERICAL: i32 = 3;
pub const EXIT_SUITE: i32 = 4;

#[derive(Debug, Parser)]
#[command(name = "ilrma", version, about = "Blind source separation with generalized Gaussian ILRMA")]
pub struct Cli {
    /// Worker threads for the per-bin updates (0 = one per core).
    #[arg(long, global = true, default_value_t = 0)]
    pub threads: usize,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Separate a multichannel WAV file into one WAV file per source.
    Separate(SeparateArgs),
    /// Mix given or synthesized sources and write the references alongside.
    Simulate(SimulateArgs),
    /// Score separated sources against references with SI-SDR.
    Evaluate(EvaluateArgs),
    /// Run the seeded property and separation suite.
    Benchmark(BenchmarkArgs),
}

#[derive(Debug, Args)]
pub struct SeparateArgs {
    /// Multichannel mixture (PCM16 or float32 WAV).
    #[arg(long)]
    pub input: PathBuf,
    /// Directory for source_{n}.wav outputs.
    #[arg(long)]
    pub out_dir: PathBuf,
    /// Shape parameter: any value in (0, 2], or 4.
    #[arg(long, default_value_t = 4.0)]
    pub beta: f64,
    /// Domain parameter of the low-rank scale model.
    #[arg(long, default_value_t = 0.5)]
    pub p: f64,
    /// NMF bases per source.
    #[arg(long, default_value_t = 20)]
    pub bases: usize,
    #[arg(long, default_value_t = 1000)]
    pub iters: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Analysis window length in milliseconds.
    #[arg(long, default_value_t = 128.0)]
    pub win_ms: f64,
    /// Frame shift in milliseconds.
    #[arg(long, default_value_t = 64.0)]
    pub hop_ms: f64,
    /// Channel the sources are projected back onto (1-based).
    #[arg(long, default_value_t = 1)]
    pub ref_channel: usize,
    /// Convergence trace output (JSON lines); defaults to OUT_DIR/trace.jsonl.
    #[arg(long)]
    pub trace: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    /// Mono source files to mix; synthesized when omitted.
    #[arg(long, num_args = 1..)]
    pub sources: Vec<PathBuf>,
    /// Instantaneous mixing matrix, rows separated by ';' (default: 1 on the diagonal, 0.5 elsewhere).
    #[arg(long, conflicts_with = "ir_dir")]
    pub matrix: Option<String>,
    /// Directory of ir_m{m}_n{n}.wav impulse responses for convolutive mixing.
    #[arg(long)]
    pub ir_dir: Option<PathBuf>,
    /// Output mixture WAV.
    #[arg(long)]
    pub out: PathBuf,
    /// Directory for the unmixed references (default: <out stem>_refs next to the mixture).
    #[arg(long)]
    pub ref_dir: Option<PathBuf>,
    /// Synthetic source kinds, comma separated and cycled over the sources:
    /// subgaussian, gaussian, supergaussian, low_rank_tonal.
    #[arg(long, value_delimiter = ',', default_value = "subgaussian")]
    pub kind: Vec<SourceKind>,
    /// Number of synthetic sources when the mixing does not fix it.
    #[arg(long)]
    pub num_sources: Option<usize>,
    /// Spectral patterns per synthetic source.
    #[arg(long, default_value_t = 2)]
    pub rank: usize,
    #[arg(long, default_value_t = 10.0)]
    pub len_s: f64,
    #[arg(long, default_value_t = 16000)]
    pub sample_rate: u32,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

#[derive(Debug, Args)]
pub struct EvaluateArgs {
    /// Directory with estimated source_{n}.wav files.
    #[arg(long)]
    pub est: PathBuf,
    /// Directory with reference source_{n}.wav files.
    #[arg(long = "ref")]
    pub reference: PathBuf,
    /// Mixture WAV used for the improvement baseline.
    #[arg(long)]
    pub mix: PathBuf,
    /// Mixture channel used as the baseline (1-based).
    #[arg(long, default_value_t = 1)]
    pub ref_channel: usize,
    /// Also write one JSON record per source.
    #[arg(long)]
    pub jsonl: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct BenchmarkArgs {
    #[arg(long, default_value_t = 10)]
    pub trials: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Skip the end-to-end synthetic separations.
    #[arg(long)]
    pub no_separation: bool,
    /// Plants a cost increase in one audited trace.
    #[arg(long, hide = true)]
    pub inject_fault: bool,
}

/// Parses `args` (program name first) and runs the chosen command.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(err) => {
            let code = if err.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            let _ = err.print();
            return code;
        }
    };
    let pool = match rayon::ThreadPoolBuilder::new().num_threads(cli.threads).build() {
        Ok(pool) => pool,
        Err(err) => {
            eprintln!("error: cannot start worker threads: {err}");
            return EXIT_USAGE;
        }
    };
    pool.install(|| {
        let outcome = match &cli.command {
            Command::Separate(args) => cmd_separate(args),
            Command::Simulate(args) => cmd_simulate(args).map(|_| EXIT_OK),
            Command::Evaluate(args) => cmd_evaluate(args).map(|_| EXIT_OK),
            Command::Benchmark(args) => cmd_benchmark(args),
        };
        outcome.unwrap_or_else(|err| {
            eprintln!("error: {err}");
            exit_code(&err)
        })
    })
}

pub fn exit_code(err: &Error) -> i32 {
    match err {
        Error::Io(_) | Error::Wav(_) | Error::UnsupportedFormat(_) => EXIT_IO,
        e if e.is_numerical() => EXIT_NUMERICAL,
        _ => EXIT_USAGE,
    }
}

fn check_config(cfg: &GgdConfig) -> Result<()> {
    let mut violations = Vec::new();
    if cfg.update_scheme().is_none() {
        violations.push(Violation::UnsupportedBeta(cfg.beta));
    }
    if !(cfg.p > 0.0 && cfg.p.is_finite()) {
        violations.push(Violation::NonPositiveDomain(cfg.p));
    }
    if cfg.rank == 0 {
        violations.push(Violation::ZeroRank);
    }
    if violations.is_empty() { Ok(()) } else { Err(Error::Validation(violations)) }
}

fn channel_index(one_based: usize, channels: usize) -> Result<usize> {
    if one_based == 0 || one_based > channels {
        return Err(Error::ShapeMismatch(format!("reference channel {one_based} is not in 1..={channels}")));
    }
    Ok(one_based - 1)
}

fn source_path(dir: &Path, n: usize) -> PathBuf {
    dir.join(format!("source_{}.wav", n + 1))
}

fn write_trace(path: &Path, trace: &ConvergenceTrace) -> Result<()> {
    let mut out = BufWriter::new(File::create(path)?);
    trace.write_jsonl(&mut out)?;
    out.flush()?;
    Ok(())
}

fn cmd_separate(args: &SeparateArgs) -> Result<i32> {
    let mut cfg = GgdConfig::new(args.beta)
        .with_p(args.p)
        .with_rank(args.bases)
        .with_iterations(args.iters)
        .with_seed(args.seed);
    check_config(&cfg)?;
    let (channels, sample_rate) = read_wav(&args.input)?;
    cfg = cfg.with_reference_channel(channel_index(args.ref_channel, channels.len())?);
    let plan = StftPlan::hamming_ms(args.win_ms, args.hop_ms, sample_rate)?;
    let x = stft(&channels, &plan)?;
    std::fs::create_dir_all(&args.out_dir)?;
    let trace_path = args.trace.clone().unwrap_or_else(|| args.out_dir.join("trace.jsonl"));

    let started = Instant::now();
    let mut state = Ilrma::new(&x, &cfg)?;
    for _ in 0..cfg.iterations {
        if let Err(err) = state.step() {
            write_trace(&trace_path, &state.trace)?;
            eprintln!("error: {err} (trace written to {})", trace_path.display());
            return Ok(exit_code(&err));
        }
    }
    write_trace(&trace_path, &state.trace)?;
    let sources = back_project(&state.demixed(), &state.demixing, cfg.reference_channel)?;
    let waveforms = istft(&sources.data, &plan, channels[0].len())?;
    for (n, wave) in waveforms.iter().enumerate() {
        write_wav(source_path(&args.out_dir, n), std::slice::from_ref(wave), sample_rate)?;
    }
    let skipped: u64 = state.trace.records.iter().map(|r| u64::from(r.skipped_updates)).sum();
    println!(
        "separated {} sources: {} iterations in {:.1} s, final cost {:.6e}, {} skipped filter updates",
        waveforms.len(),
        state.trace.records.len(),
        started.elapsed().as_secs_f64(),
        state.trace.costs().last().copied().or(state.trace.initial_cost).unwrap_or(f64::NAN),
        skipped
    );
    Ok(EXIT_OK)
}

fn default_matrix(sources: usize) -> MixingSpec {
    MixingSpec::Instantaneous(DMatrix::from_fn(sources, sources, |m, n| if m == n { 1.0 } else { 0.5 }))
}

fn cmd_simulate(args: &SimulateArgs) -> Result<()> {
    let mut spec = match &args.matrix {
        Some(text) => Some(MixingSpec::parse_matrix(text)?),
        None => None,
    };
    let mut ir_rate = None;
    if let Some(dir) = &args.ir_dir {
        let (loaded, rate) = load_impulse_responses(dir)?;
        spec = Some(loaded);
        ir_rate = Some(rate);
    }

    let (sources, sample_rate) = if args.sources.is_empty() {
        let kinds = &args.kind;
        let count = spec.as_ref().map(MixingSpec::sources).or(args.num_sources).unwrap_or(2);
        if count == 0 {
            return Err(Error::ShapeMismatch("at least one source is required".into()));
        }
        if !(args.len_s > 0.0) {
            return Err(Error::ShapeMismatch(format!("length {} s must be positive", args.len_s)));
        }
        let len = (args.len_s * f64::from(args.sample_rate)).round() as usize;
        let sources = (0..count)
            .map(|n| {
                let seed = args.seed.wrapping_mul(1000).wrapping_add(n as u64);
                synth_source(kinds[n % kinds.len()], args.rank, len, args.sample_rate, seed)
            })
            .collect::<Vec<_>>();
        (sources, args.sample_rate)
    } else {
        let mut rate = None;
        let mut sources = Vec::new();
        for path in &args.sources {
            let (channels, sr) = read_wav(path)?;
            if *rate.get_or_insert(sr) != sr {
                return Err(Error::LengthMismatch(format!("{} has sample rate {sr}", path.display())));
            }
            sources.push(channels.into_iter().next().unwrap_or_default());
        }
        (sources, rate.unwrap_or(args.sample_rate))
    };
    if let Some(rate) = ir_rate {
        if rate != sample_rate {
            return Err(Error::LengthMismatch(format!(
                "impulse responses are at {rate} Hz, sources at {sample_rate} Hz"
            )));
        }
    }
    let spec = spec.unwrap_or_else(|| default_matrix(sources.len()));
    let mixture = mix(&sources, &spec)?;

    if let Some(parent) = args.out.parent().filter(|p| !p.as_os_str().is_empty()) {
        std::fs::create_dir_all(parent)?;
    }
    write_wav(&args.out, &mixture, sample_rate)?;
    let ref_dir = args.ref_dir.clone().unwrap_or_else(|| {
        let stem = args.out.file_stem().map_or_else(|| "mix".into(), |s| s.to_string_lossy().into_owned());
        args.out.with_file_name(format!("{stem}_refs"))
    });
    std::fs::create_dir_all(&ref_dir)?;
    for (n, s) in sources.iter().enumerate() {
        write_wav(source_path(&ref_dir, n), std::slice::from_ref(s), sample_rate)?;
    }
    println!(
        "wrote {}-channel mixture of {} sources to {} and references to {}",
        mixture.len(),
        sources.len(),
        args.out.display(),
        ref_dir.display()
    );
    Ok(())
}

/// Reads source_1.wav, source_2.wav, … until the first missing index.
fn read_source_dir(dir: &Path) -> Result<Vec<Vec<f64>>> {
    let mut out = Vec::new();
    loop {
        let path = source_path(dir, out.len());
        if !path.exists() {
            break;
        }
        let (channels, _) = read_wav(&path)?;
        out.push(channels.into_iter().next().unwrap_or_default());
    }
    if out.is_empty() {
        return Err(Error::Io(std::io::Error::new(
            std::io::ErrorKind::NotFound,
            format!("no source_1.wav in {}", dir.display()),
        )));
    }
    Ok(out)
}

fn cmd_evaluate(args: &EvaluateArgs) -> Result<()> {
    let estimates = read_source_dir(&args.est)?;
    let references = read_source_dir(&args.reference)?;
    let (mixture, _) = read_wav(&args.mix)?;
    let channel = channel_index(args.ref_channel, mixture.len())?;
    let scores = sdr_improvement(&estimates, &references, &mixture[channel])?;
    write_table(std::io::stdout().lock(), &scores)?;
    if let Some(path) = &args.jsonl {
        let mut out = BufWriter::new(File::create(path)?);
        write_jsonl(&mut out, &scores)?;
        out.flush()?;
    }
    Ok(())
}

fn report(name: &str, passed: bool, detail: String) -> bool {
    println!("{} {name}: {detail}", if passed { "PASS" } else { "FAIL" });
    passed
}

fn cmd_benchmark(args: &BenchmarkArgs) -> Result<i32> {
    let trials = args.trials.max(1);
    let mut all_passed = true;

    for beta in [1.0, 1.99, 2.0, 4.0] {
        let mut monotone = 0;
        let mut checked = 0;
        let mut worst = 0.0f64;
        for t in 0..trials {
            let seed = args.seed.wrapping_add(t as u64);
            let mut trace = descent_trace(beta, seed, 50)?;
            if args.inject_fault && t == 0 && beta == 4.0 {
                let last = trace.costs().last().copied().unwrap_or(0.0);
                trace.records.push(TraceRecord { iter: trace.records.len() as u32 + 1, cost: last + 1.0 + last.abs() * 1e-3, ..TraceRecord::default() });
            }
            let audit = audit_descent(&trace);
            checked += audit.checked;
            for v in &audit.violations {
                worst = worst.max((v.current - v.previous) / (1.0 + v.previous.abs()));
            }
            monotone += usize::from(audit.is_monotone());
        }
        all_passed &= report(
            &format!("descent beta={beta}"),
            monotone == trials,
            format!("{monotone}/{trials} monotone traces, {checked} steps checked, worst relative increase {worst:.2e}"),
        );
    }

    let mut min_gap = f64::INFINITY;
    let mut contact = 0.0f64;
    let mut draws = 0;
    for t in 0..trials {
        let stats = majorizer_draws(args.seed.wrapping_add(1000 + t as u64), 1000)?;
        min_gap = min_gap.min(stats.min_gap);
        contact = contact.max(stats.max_contact_error);
        draws += stats.draws;
    }
    all_passed &= report(
        "quartic majorizer",
        min_gap >= -1e-10 && contact <= 1e-10,
        format!("{draws} draws, min gap {min_gap:.3e}, max contact error {contact:.3e}"),
    );

    if !args.no_separation {
        let scenario = SyntheticScenario::quick();
        let mut improvements = Vec::with_capacity(trials);
        for t in 0..trials {
            let outcome = separation_trial(&scenario, 4.0, args.seed.wrapping_add(t as u64))?;
            improvements.push(mean_improvement(&outcome.scores));
        }
        let mean = improvements.iter().sum::<f64>() / trials as f64;
        let min = improvements.iter().copied().fold(f64::INFINITY, f64::min);
        all_passed &= report(
            "separation beta=4",
            mean > 0.0,
            format!("{trials} trials of {} s, mean SI-SDR improvement {mean:.2} dB, worst {min:.2} dB", scenario.seconds),
        );
    }

    Ok(if all_passed { EXIT_OK } else { EXIT_SUITE })
}
