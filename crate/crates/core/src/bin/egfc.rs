use std::fs::File;
use std::io::{self, BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use egfc::chart::{write_chart_csv, ChartMode};
use egfc::classifier::{Horizon, RuleBase};
use egfc::features::{self, N_ATTRIBUTES};
use egfc::pipeline::{self, RunConfig, RunSummary};
use egfc::synth::{self, SynthConfig};
use egfc::{Error, Result};

#[derive(Parser)]
#[command(name = "egfc", version, about = "Log-rate anomaly detection with an evolving fuzzy classifier")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a synthetic log file and its anomaly annotations.
    Synth(SynthArgs),
    /// Turn a log into a labeled feature dataset.
    Prepare(PrepareArgs),
    /// Replay a dataset (or a log, online) through the classifier.
    Run(RunArgs),
    /// Print saved run reports as a table.
    Report {
        #[arg(required = true)]
        reports: Vec<PathBuf>,
    },
}

#[derive(Args)]
struct SynthArgs {
    /// TOML synth configuration; flags below override it.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Use the built-in benchmark anomaly schedule.
    #[arg(long)]
    benchmark: bool,
    #[arg(long)]
    hours: Option<u64>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    base_rate: Option<f64>,
    #[arg(long)]
    noise: Option<f64>,
    /// Log output path, `-` for stdout.
    #[arg(long, short)]
    out: PathBuf,
    /// Sidecar CSV `start,end,severity`.
    #[arg(long)]
    annotations: Option<PathBuf>,
}

#[derive(Args, Clone)]
struct Common {
    /// TOML run configuration; flags override it.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    window: Option<usize>,
    #[arg(long)]
    stride: Option<usize>,
    #[arg(long, value_parser = ["batch", "streaming"])]
    chart_mode: Option<String>,
    /// chrono format of the leading timestamp.
    #[arg(long)]
    timestamp_format: Option<String>,
}

#[derive(Args)]
struct PrepareArgs {
    #[command(flatten)]
    common: Common,
    /// Log file, `-` for stdin.
    #[arg(long)]
    log: PathBuf,
    /// Dataset CSV output, `-` for stdout.
    #[arg(long, short)]
    out: PathBuf,
    /// Also write `window_start,window_end,mean,min,max`.
    #[arg(long)]
    windows_csv: Option<PathBuf>,
    /// Also write `window_start,mean,class`.
    #[arg(long)]
    chart_csv: Option<PathBuf>,
}

#[derive(Args)]
struct RunArgs {
    #[command(flatten)]
    common: Common,
    /// Prepared dataset CSV.
    #[arg(long, conflicts_with = "log")]
    dataset: Option<PathBuf>,
    /// Raw log, processed online (streaming chart, no shuffle).
    #[arg(long)]
    log: Option<PathBuf>,
    #[arg(long)]
    runs: Option<usize>,
    /// Seed of the first shuffle; run i uses seed + i.
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    no_shuffle: bool,
    #[arg(long)]
    label_fraction: Option<f64>,
    #[arg(long)]
    rho_init: Option<f64>,
    #[arg(long)]
    delta: Option<f64>,
    /// Inactivity horizon in steps, or `inf`.
    #[arg(long)]
    h_r: Option<Horizon>,
    /// Classifier state: loaded if the file exists, saved after the run.
    #[arg(long)]
    checkpoint: Option<PathBuf>,
    /// JSON report output.
    #[arg(long)]
    report: Option<PathBuf>,
    /// CSV time series `h,acc,c_avg,rules,rho` of the last run.
    #[arg(long)]
    trace: Option<PathBuf>,
}

fn open_in(path: &Path) -> Result<Box<dyn BufRead>> {
    if path.as_os_str() == "-" {
        return Ok(Box::new(io::stdin().lock()));
    }
    let f = File::open(path).map_err(|e| Error::io(path, e))?;
    Ok(Box::new(BufReader::new(f)))
}

fn open_out(path: &Path) -> Result<Box<dyn Write>> {
    if path.as_os_str() == "-" {
        return Ok(Box::new(io::stdout().lock()));
    }
    let f = File::create(path).map_err(|e| Error::io(path, e))?;
    Ok(Box::new(BufWriter::new(f)))
}

fn read_toml<T: serde::de::DeserializeOwned>(path: &Path) -> Result<T> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    toml::from_str(&text).map_err(|e| Error::Config(format!("{}: {e}", path.display())))
}

fn run_config(common: &Common) -> Result<RunConfig> {
    let mut cfg: RunConfig = match &common.config {
        Some(p) => read_toml(p)?,
        None => RunConfig::default(),
    };
    if let Some(w) = common.window {
        cfg.window_minutes = w;
    }
    if common.stride.is_some() {
        cfg.stride_minutes = common.stride;
    }
    if let Some(m) = &common.chart_mode {
        cfg.chart_mode = m.parse::<ChartMode>().map_err(Error::Config)?;
    }
    if let Some(f) = &common.timestamp_format {
        cfg.timestamp_format = f.clone();
    }
    Ok(cfg)
}

fn cmd_synth(args: SynthArgs) -> Result<()> {
    let mut cfg: SynthConfig = match &args.config {
        Some(p) => read_toml(p)?,
        None => SynthConfig::default(),
    };
    if args.benchmark {
        let minutes = args.hours.map_or(cfg.duration_minutes, |h| h * 60);
        cfg = SynthConfig::benchmark(minutes, args.seed.unwrap_or(cfg.seed));
    }
    if let Some(h) = args.hours {
        cfg.duration_minutes = h * 60;
    }
    if let Some(s) = args.seed {
        cfg.seed = s;
    }
    if let Some(r) = args.base_rate {
        cfg.base_rate = r;
    }
    if let Some(n) = args.noise {
        cfg.noise = n;
    }
    let stream = synth::generate(&cfg)?;
    stream.write_log(open_out(&args.out)?)?;
    if let Some(p) = &args.annotations {
        stream.write_annotations(open_out(p)?)?;
    }
    eprintln!(
        "wrote {} lines over {} minutes, {} anomaly segments",
        stream.total_lines(),
        stream.counts.len(),
        stream.segments.len()
    );
    Ok(())
}

fn cmd_prepare(args: PrepareArgs) -> Result<()> {
    let cfg = run_config(&args.common)?;
    let (ds, stats) = pipeline::prepare_log(open_in(&args.log)?, &cfg)?;
    if stats.skipped > 0 {
        eprintln!(
            "skipped {} unparseable lines (first at lines {:?})",
            stats.skipped, stats.first_skipped
        );
    }
    if stats.late_dropped > 0 {
        eprintln!("dropped {} out-of-order events", stats.late_dropped);
    }
    ds.write_csv(open_out(&args.out)?)?;
    if let Some(p) = &args.windows_csv {
        ds.write_windows_csv(open_out(p)?)?;
    }
    if let Some(p) = &args.chart_csv {
        write_chart_csv(ds.chart_rows(), open_out(p)?)?;
    }
    eprintln!(
        "{} windows of {} min from {} lines; chart mean {:.3}, sigma {:.3}",
        ds.vectors.len(),
        cfg.window_minutes,
        stats.parsed,
        ds.chart.mean_of_means(),
        ds.chart.sigma()
    );
    Ok(())
}

fn cmd_run(args: RunArgs) -> Result<()> {
    let mut cfg = run_config(&args.common)?;
    if let Some(r) = args.runs {
        cfg.runs = r;
    }
    if let Some(s) = args.seed {
        cfg.shuffle_seed = Some(s);
    }
    if args.no_shuffle {
        cfg.shuffle_seed = None;
    }
    if let Some(f) = args.label_fraction {
        cfg.label_fraction = f;
    }
    if let Some(r) = args.rho_init {
        cfg.meta.rho_init = r;
    }
    if let Some(d) = args.delta {
        cfg.meta.delta = d;
    }
    if let Some(h) = args.h_r {
        cfg.meta.h_r = h;
    }

    let samples = match (&args.dataset, &args.log) {
        (Some(p), _) => {
            let ds = features::read_dataset(open_in(p)?)?;
            if ds.rejected > 0 {
                eprintln!(
                    "rejected {} malformed rows (first at rows {:?})",
                    ds.rejected, ds.first_rejected
                );
            }
            ds.samples
        }
        (None, Some(p)) => {
            cfg.chart_mode = ChartMode::Streaming;
            cfg.shuffle_seed = None;
            pipeline::prepare_log(open_in(p)?, &cfg)?.0.samples()
        }
        (None, None) => return Err(Error::Config("pass --dataset or --log".into())),
    };

    let initial = match &args.checkpoint {
        Some(p) if p.exists() => {
            if cfg.runs != 1 {
                return Err(Error::Config("--checkpoint needs --runs 1".into()));
            }
            let m = RuleBase::load(p)?;
            if m.dim() != N_ATTRIBUTES {
                return Err(Error::Config(format!(
                    "checkpoint has {} attributes, dataset has {N_ATTRIBUTES}",
                    m.dim()
                )));
            }
            Some(m)
        }
        Some(_) if cfg.runs != 1 => {
            return Err(Error::Config("--checkpoint needs --runs 1".into()));
        }
        _ => None,
    };

    let (summary, model) = pipeline::run_dataset(&samples, &cfg, initial.as_ref())?;
    if let Some(p) = &args.checkpoint {
        model.save(p)?;
    }
    if let Some(p) = &args.trace {
        let last = summary.runs.last().expect("at least one run");
        pipeline::write_trace_csv(&last.trace, open_out(p)?)?;
    }
    if let Some(p) = &args.report {
        let mut out = open_out(p)?;
        writeln!(out, "{}", summary.to_json()?).map_err(|e| Error::io(p, e))?;
    }
    print!("{}", pipeline::format_table(std::slice::from_ref(&summary)));
    Ok(())
}

fn cmd_report(paths: &[PathBuf]) -> Result<()> {
    let summaries = paths
        .iter()
        .map(|p| {
            let text = std::fs::read_to_string(p).map_err(|e| Error::io(p, e))?;
            Ok(serde_json::from_str::<RunSummary>(&text)?)
        })
        .collect::<Result<Vec<_>>>()?;
    print!("{}", pipeline::format_table(&summaries));
    for s in &summaries {
        if let Some(run) = s.runs.last() {
            let w = s.window_minutes.map_or("-".to_string(), |w| format!("{w} min"));
            println!("\nconfusion ({w}, last run; rows true, columns predicted):");
            for row in &run.metrics.confusion {
                println!("  {row:?}");
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let res = match cli.command {
        Command::Synth(a) => cmd_synth(a),
        Command::Prepare(a) => cmd_prepare(a),
        Command::Run(a) => cmd_run(a),
        Command::Report { reports } => cmd_report(&reports),
    };
    match res {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
