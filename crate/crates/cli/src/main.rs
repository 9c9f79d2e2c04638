use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use trackbench::eval::{assign_ranks, benchmark, threads_from_env, tukey_hsd, BenchmarkOptions, Direction};
use trackbench::io::{
    self, load_sequence, rank_table_text, read_summaries, summary_text, write_bench_report, write_sequence,
    write_track_results, BenchConfig, SYNTH_PREFIX,
};
use trackbench::synth::{generate, preset, Preset};
use trackbench::trackers::{run_sequence, TrackerConfig, TrackerKind};

const EXIT_CONFIG: u8 = 2;
const EXIT_RUNTIME: u8 = 3;

#[derive(Parser)]
#[command(name = "trackbench", version, about = "Ridge and l1 trackers, benchmark and significance ranking")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Track one sequence with one tracker.
    Track {
        /// Benchmark config to take the tracker settings from.
        #[arg(long)]
        config: Option<PathBuf>,
        /// Tracker label from the config, or a kind (RR, L1_ORIGINAL, L1_WMB, L1_APG).
        #[arg(long)]
        tracker: String,
        /// Sequence directory or `synth:<preset>`.
        #[arg(long)]
        sequence: String,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 0)]
        run: u64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Run every tracker on every sequence and rank them.
    Bench {
        #[arg(long)]
        config: PathBuf,
        /// Overrides `output_directory` from the config.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Rank groups given as `label,mean,std,n` rows.
    Rank {
        #[arg(long)]
        summaries: PathBuf,
        #[arg(long, default_value_t = 0.05)]
        alpha: f64,
        /// `lower` (CLE) or `higher` (TSR) is better.
        #[arg(long, default_value = "lower")]
        direction: Direction,
    },
    /// Write a synthetic sequence to disk.
    Synth {
        /// translation, illumination, occlusion, clutter or fast_motion.
        #[arg(long)]
        preset: Preset,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
}

enum Failure {
    Config(String),
    Runtime(String),
}

fn config<E: std::fmt::Display>(e: E) -> Failure {
    Failure::Config(e.to_string())
}

fn runtime<E: std::fmt::Display>(e: E) -> Failure {
    Failure::Runtime(e.to_string())
}

fn config_base(path: &Path) -> PathBuf {
    path.parent().map(Path::to_path_buf).unwrap_or_default()
}

fn load_input(sequence: &str, seed: u64) -> Result<(Vec<trackbench::Frame>, Vec<trackbench::BoundingBox>), Failure> {
    if let Some(name) = sequence.strip_prefix(SYNTH_PREFIX) {
        let p: Preset = name.parse().map_err(config)?;
        generate(&preset(p), seed).map_err(config)
    } else {
        load_sequence(Path::new(sequence)).map_err(runtime)
    }
}

fn select_tracker(cfg: Option<&BenchConfig>, name: &str) -> Result<TrackerConfig, Failure> {
    if let Some(c) = cfg {
        if let Some(t) = c.trackers.iter().find(|t| t.label() == name) {
            return Ok(t.clone());
        }
    }
    let kind: TrackerKind = name
        .parse()
        .map_err(|_| Failure::Config(format!("no tracker labelled '{name}' and not a tracker kind")))?;
    Ok(match cfg.and_then(|c| c.trackers.iter().find(|t| t.kind == kind)) {
        Some(t) => t.clone(),
        None => TrackerConfig::of_kind(kind),
    })
}

fn track(
    config_path: Option<&Path>,
    tracker: &str,
    sequence: &str,
    seed: u64,
    run: u64,
    out: &Path,
) -> Result<(), Failure> {
    let cfg = config_path.map(BenchConfig::load).transpose().map_err(config)?;
    let tcfg = select_tracker(cfg.as_ref(), tracker)?;
    tcfg.validate().map_err(config)?;
    let sequence = match (config_path, sequence.starts_with(SYNTH_PREFIX)) {
        (Some(p), false) if Path::new(sequence).is_relative() && !Path::new(sequence).exists() => {
            config_base(p).join(sequence).to_string_lossy().into_owned()
        }
        _ => sequence.to_string(),
    };
    let (frames, gt) = load_input(&sequence, seed)?;
    match run_sequence(&tcfg, &frames, gt[0], seed, run) {
        Ok(results) => {
            write_track_results(out, &results).map_err(runtime)?;
            let m = trackbench::eval::run_metrics(&results, &gt, trackbench::eval::DEFAULT_SUCCESS_THRESHOLD).map_err(runtime)?;
            println!(
                "{}: {} frames, mean CLE {:.3} px, TSR {:.3}, {:.1} fps",
                tcfg.label(),
                m.frames,
                m.mean_cle,
                m.tsr,
                m.fps
            );
            Ok(())
        }
        Err(aborted) => {
            write_track_results(out, &aborted.completed).map_err(runtime)?;
            Err(runtime(aborted))
        }
    }
}

fn bench(config_path: &Path, out: Option<&Path>) -> Result<(), Failure> {
    let cfg = BenchConfig::load(config_path).map_err(config)?;
    let base = config_base(config_path);
    let out = match (out, &cfg.output_directory) {
        (Some(o), _) => o.to_path_buf(),
        (None, Some(o)) if o.is_relative() => base.join(o),
        (None, Some(o)) => o.clone(),
        (None, None) => return Err(Failure::Config("no output directory: pass --out or set output_directory".into())),
    };
    let sequences = cfg.load_sequences(&base).map_err(|e| match e {
        io::IoError::Config { .. } => config(e),
        other => runtime(other),
    })?;
    let opts = BenchmarkOptions {
        seed: cfg.seed,
        runs: cfg.runs,
        threads: threads_from_env(),
        ..BenchmarkOptions::default()
    };
    let report = benchmark(&cfg.trackers, &sequences, &opts).map_err(runtime)?;
    for w in &report.warnings {
        eprintln!("warning: {w}");
    }
    write_bench_report(&out, &report).map_err(runtime)?;
    print!("{}", summary_text(&report));
    Ok(())
}

fn rank(summaries: &Path, alpha: f64, direction: Direction) -> Result<(), Failure> {
    let groups = read_summaries(summaries).map_err(config)?;
    let tukey = tukey_hsd(&groups, alpha).map_err(config)?;
    let table = assign_ranks(&groups, &tukey.significant, direction).map_err(config)?;
    print!("{}", rank_table_text(&table));
    Ok(())
}

fn synth(which: Preset, seed: u64, out: &Path) -> Result<(), Failure> {
    let (frames, gt) = generate(&preset(which), seed).map_err(config)?;
    write_sequence(out, &frames, &gt).map_err(runtime)?;
    println!("wrote {} frames of '{which}' to {}", frames.len(), out.display());
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Track {
            config,
            tracker,
            sequence,
            seed,
            run,
            out,
        } => track(config.as_deref(), tracker, sequence, *seed, *run, out),
        Command::Bench { config, out } => bench(config, out.as_deref()),
        Command::Rank {
            summaries,
            alpha,
            direction,
        } => rank(summaries, *alpha, *direction),
        Command::Synth { preset, seed, out } => synth(*preset, *seed, out),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Config(m)) => {
            eprintln!("config error: {m}");
            ExitCode::from(EXIT_CONFIG)
        }
        Err(Failure::Runtime(m)) => {
            eprintln!("error: {m}");
            ExitCode::from(EXIT_RUNTIME)
        }
    }
}
