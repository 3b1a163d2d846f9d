//! Stage wiring: log → windows → chart labels → features → classifier → metrics.
//!
//! `prepare_*` turn a log or rate series into a labeled dataset; `run_*`
//! replay a dataset through a fresh (or restored) rule base, optionally
//! shuffled and with a fraction of labels withheld, and aggregate repeated
//! runs into mean ± deviation rows.

use std::fmt::Write as _;
use std::io::{BufRead, Write};
use std::time::Instant;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::chart::{ChartMode, ChartModel};
use crate::classifier::{MetaParams, RuleBase, StepReport};
use crate::error::{Error, Result};
use crate::features::{self, FeatureVector, Normalizer, Sample, N_ATTRIBUTES};
use crate::ingest::{self, IngestStats, RateSeries, WindowSummary, DEFAULT_TIMESTAMP_FORMAT};
use crate::metrics::{MetricsReport, MetricsState};
use crate::{ClassId, N_CLASSES};

/// Window lengths, in minutes, compared by default.
pub const DEFAULT_WINDOWS: [usize; 4] = [60, 30, 15, 5];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RunConfig {
    pub window_minutes: usize,
    /// Defaults to `window_minutes` (tumbling windows).
    pub stride_minutes: Option<usize>,
    pub meta: MetaParams,
    pub chart_mode: ChartMode,
    /// Fraction of samples whose label reaches the learner.
    pub label_fraction: f64,
    /// Seed of the first run's shuffle; run `i` uses `shuffle_seed + i`.
    /// `None` replays in dataset order.
    pub shuffle_seed: Option<u64>,
    pub runs: usize,
    pub timestamp_format: String,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            window_minutes: 60,
            stride_minutes: None,
            meta: MetaParams::default(),
            chart_mode: ChartMode::Batch,
            label_fraction: 1.0,
            shuffle_seed: Some(1),
            runs: 5,
            timestamp_format: DEFAULT_TIMESTAMP_FORMAT.to_string(),
        }
    }
}

impl RunConfig {
    pub fn stride(&self) -> usize {
        self.stride_minutes.unwrap_or(self.window_minutes)
    }

    pub fn validate(&self) -> Result<()> {
        self.meta.validate()?;
        if self.window_minutes == 0 || self.stride() == 0 || self.stride() > self.window_minutes {
            return Err(Error::Config(
                "need 1 <= stride_minutes <= window_minutes".into(),
            ));
        }
        if !(0.0..=1.0).contains(&self.label_fraction) {
            return Err(Error::Config("label_fraction must be within [0, 1]".into()));
        }
        if self.runs == 0 {
            return Err(Error::Config("runs must be at least 1".into()));
        }
        Ok(())
    }
}

/// Labeled feature vectors for one window length.
#[derive(Debug, Clone)]
pub struct PreparedDataset {
    pub window_minutes: usize,
    pub vectors: Vec<FeatureVector>,
    pub chart: ChartModel,
    pub windows: Vec<WindowSummary>,
}

impl PreparedDataset {
    pub fn samples(&self) -> Vec<Sample> {
        self.vectors
            .iter()
            .map(|v| Sample {
                window_start: v.window_start,
                x: v.normalized,
                label: v.label,
            })
            .collect()
    }

    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        features::write_dataset(&self.samples(), out)
    }

    /// Rows for a control-chart plot.
    pub fn chart_rows(&self) -> impl Iterator<Item = (chrono::NaiveDateTime, f64, ClassId)> + '_ {
        self.vectors
            .iter()
            .zip(&self.windows)
            .map(|(v, w)| (v.window_start, w.mean, v.label.unwrap_or(ClassId(1))))
    }

    /// Rows `window_start,window_end,mean,min,max`.
    pub fn write_windows_csv<W: Write>(&self, out: W) -> Result<()> {
        ingest::write_windows_csv(&self.windows, out)
    }
}

/// Window, tag and featurize a rate series.
///
/// Batch mode fits the chart and the normalizer over the whole series;
/// streaming mode tags and scales each window before absorbing it.
pub fn prepare_series(series: &RateSeries, cfg: &RunConfig) -> Result<PreparedDataset> {
    cfg.validate()?;
    let windows: Vec<_> = series.windows(cfg.window_minutes, cfg.stride())?.collect();
    if windows.is_empty() {
        return Err(Error::Empty("log covers less than one window"));
    }
    let means: Vec<f64> = windows.iter().map(|w| w.mean).collect();
    let raw: Vec<_> = windows
        .iter()
        .map(features::extract)
        .collect::<Result<_>>()?;

    let (chart, labels, normalized) = match cfg.chart_mode {
        ChartMode::Batch => {
            let chart = ChartModel::fit(&means)?;
            let labels = means.iter().map(|&m| chart.tag(m)).collect::<Vec<_>>();
            let nz = Normalizer::fit(&raw);
            let normalized = raw.iter().map(|v| nz.transform(v)).collect::<Vec<_>>();
            (chart, labels, normalized)
        }
        ChartMode::Streaming => {
            let mut chart = ChartModel::streaming();
            let labels = means
                .iter()
                .map(|&m| chart.tag_then_update(m))
                .collect::<Result<Vec<_>>>()?;
            let mut nz = Normalizer::new();
            let normalized = raw.iter().map(|v| nz.transform_then_observe(v)).collect();
            (chart, labels, normalized)
        }
    };

    let vectors = windows
        .iter()
        .zip(raw)
        .zip(normalized)
        .zip(labels)
        .map(|(((w, raw), normalized), label)| FeatureVector {
            window_start: w.window_start,
            raw,
            normalized,
            label: Some(label),
        })
        .collect();
    Ok(PreparedDataset {
        window_minutes: cfg.window_minutes,
        vectors,
        chart,
        windows,
    })
}

/// Ingest a log and prepare it. An empty log (no parseable line) is an error.
pub fn prepare_log<R: BufRead>(reader: R, cfg: &RunConfig) -> Result<(PreparedDataset, IngestStats)> {
    let (series, stats) = ingest::ingest_reader(reader, &cfg.timestamp_format)?;
    let series = series.ok_or(Error::Empty("no parseable log line"))?;
    Ok((prepare_series(&series, cfg)?, stats))
}

/// One row of the optional per-step trace.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TracePoint {
    pub h: u64,
    pub acc: f64,
    pub c_avg: f64,
    pub rules: usize,
    pub rho: f64,
}

pub fn write_trace_csv<W: Write>(trace: &[TracePoint], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for p in trace {
        w.serialize(p)?;
    }
    w.flush().map_err(|e| Error::io("<trace>", e))?;
    Ok(())
}

/// Result of one replay.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunOutcome {
    pub seed: Option<u64>,
    pub metrics: MetricsReport,
    pub final_rules: usize,
    pub final_rho: f64,
    pub labels_fed: u64,
    pub wall_time_s: f64,
    #[serde(skip)]
    pub trace: Vec<TracePoint>,
    #[serde(skip)]
    pub steps: Vec<StepReport>,
}

/// Options for a single replay.
#[derive(Debug, Clone, Copy)]
pub struct ReplayOptions {
    pub label_fraction: f64,
    pub seed: Option<u64>,
    pub keep_steps: bool,
}

impl Default for ReplayOptions {
    fn default() -> Self {
        ReplayOptions {
            label_fraction: 1.0,
            seed: None,
            keep_steps: false,
        }
    }
}

const LABEL_MASK_SALT: u64 = 0x6c61_6265_6c73;

/// Replay `samples` through `model`, predicting each sample before learning it.
///
/// With a seed the sample order is shuffled first. Samples without a label
/// are learned unlabeled and left out of the metrics.
pub fn replay(samples: &[Sample], model: &mut RuleBase, opts: ReplayOptions) -> Result<RunOutcome> {
    let mut order: Vec<usize> = (0..samples.len()).collect();
    if let Some(seed) = opts.seed {
        order.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    }
    let mut mask_rng = ChaCha8Rng::seed_from_u64(opts.seed.unwrap_or(0) ^ LABEL_MASK_SALT);

    let mut metrics = MetricsState::new(model.n_classes());
    let mut trace = Vec::with_capacity(samples.len());
    let mut steps = Vec::new();
    let mut labels_fed = 0;

    let started = Instant::now();
    for &i in &order {
        let s = &samples[i];
        let feed = mask_rng.random::<f64>() < opts.label_fraction;
        let y = if feed { s.label } else { None };
        labels_fed += y.is_some() as u64;
        let report = model.learn_step(&s.x, y)?;
        if let Some(truth) = s.label {
            metrics.record(report.predicted, truth, report.rule_count_after)?;
        }
        trace.push(TracePoint {
            h: report.step,
            acc: metrics.acc(),
            c_avg: metrics.c_avg(),
            rules: report.rule_count_after,
            rho: report.rho_after,
        });
        if opts.keep_steps {
            steps.push(report);
        }
    }
    let wall_time_s = started.elapsed().as_secs_f64();

    Ok(RunOutcome {
        seed: opts.seed,
        metrics: metrics.report(),
        final_rules: model.len(),
        final_rho: model.rho(),
        labels_fed,
        wall_time_s,
        trace,
        steps,
    })
}

/// Mean and sample standard deviation over repeated runs.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MeanDev {
    pub mean: f64,
    pub dev: f64,
}

impl MeanDev {
    pub fn of(values: &[f64]) -> Self {
        let n = values.len();
        if n == 0 {
            return MeanDev { mean: 0.0, dev: 0.0 };
        }
        let mean = values.iter().sum::<f64>() / n as f64;
        let dev = if n > 1 {
            (values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1) as f64).sqrt()
        } else {
            0.0
        };
        MeanDev { mean, dev }
    }
}

/// Aggregate of repeated replays over one dataset.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunSummary {
    pub window_minutes: Option<usize>,
    pub samples: usize,
    pub label_fraction: f64,
    pub meta: MetaParams,
    pub acc: MeanDev,
    /// Average rule count over time (`c_avg`).
    pub rules: MeanDev,
    pub wall_time_s: MeanDev,
    pub runs: Vec<RunOutcome>,
}

impl RunSummary {
    /// Copy with every wall-time figure zeroed, for byte comparisons.
    pub fn without_timing(&self) -> Self {
        let mut s = self.clone();
        s.wall_time_s = MeanDev { mean: 0.0, dev: 0.0 };
        for r in &mut s.runs {
            r.wall_time_s = 0.0;
        }
        s
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }
}

/// Run `cfg.runs` replays, each on a fresh copy of `initial` (or a new model).
pub fn run_dataset(samples: &[Sample], cfg: &RunConfig, initial: Option<&RuleBase>) -> Result<(RunSummary, RuleBase)> {
    cfg.validate()?;
    if samples.is_empty() {
        return Err(Error::Empty("dataset has no samples"));
    }
    let mut outcomes = Vec::with_capacity(cfg.runs);
    let mut last_model = None;
    for r in 0..cfg.runs {
        let mut model = match initial {
            Some(m) => m.clone(),
            None => RuleBase::new(N_ATTRIBUTES, N_CLASSES, cfg.meta)?,
        };
        let opts = ReplayOptions {
            label_fraction: cfg.label_fraction,
            seed: cfg.shuffle_seed.map(|s| s + r as u64),
            keep_steps: false,
        };
        outcomes.push(replay(samples, &mut model, opts)?);
        last_model = Some(model);
    }
    let pick = |f: fn(&RunOutcome) -> f64| MeanDev::of(&outcomes.iter().map(f).collect::<Vec<_>>());
    let summary = RunSummary {
        window_minutes: Some(cfg.window_minutes),
        samples: samples.len(),
        label_fraction: cfg.label_fraction,
        meta: cfg.meta,
        acc: pick(|o| o.metrics.acc),
        rules: pick(|o| o.metrics.c_avg),
        wall_time_s: pick(|o| o.wall_time_s),
        runs: outcomes,
    };
    Ok((summary, last_model.expect("runs >= 1")))
}

/// Table with one row per summary: window, accuracy (%), rules, time (s).
pub fn format_table(summaries: &[RunSummary]) -> String {
    let mut out = String::new();
    let _ = writeln!(
        out,
        "{:>8} | {:>16} | {:>14} | {:>16}",
        "Window", "Acc(%)", "# Rules", "Time (s)"
    );
    let _ = writeln!(out, "{}", "-".repeat(64));
    for s in summaries {
        let window = s
            .window_minutes
            .map(|w| format!("{w} min"))
            .unwrap_or_else(|| "-".into());
        let _ = writeln!(
            out,
            "{:>8} | {:>16} | {:>14} | {:>16}",
            window,
            format!("{:.2} ± {:.2}", 100.0 * s.acc.mean, 100.0 * s.acc.dev),
            format!("{:.1} ± {:.1}", s.rules.mean, s.rules.dev),
            format!("{:.3} ± {:.3}", s.wall_time_s.mean, s.wall_time_s.dev),
        );
    }
    out
}
