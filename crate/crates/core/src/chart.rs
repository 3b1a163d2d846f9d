//! Control chart over window means.
//!
//! A window mean is tagged by the smallest `k` for which it lies within
//! `k` standard deviations of the mean of means: class 1 is normal operation,
//! classes 2–4 are low, medium and high severity. Deviations past four sigma
//! saturate at class 4.

use std::io::Write;

use chrono::NaiveDateTime;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ingest::CSV_TIMESTAMP_FORMAT;
use crate::ClassId;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ChartMode {
    /// Fit once over the whole series, then frozen.
    #[default]
    Batch,
    /// Running statistics; each window is tagged before it is absorbed.
    Streaming,
}

impl std::str::FromStr for ChartMode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "batch" => Ok(ChartMode::Batch),
            "streaming" => Ok(ChartMode::Streaming),
            _ => Err(format!("unknown chart mode {s:?} (expected batch or streaming)")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChartModel {
    mean_of_means: f64,
    sigma: f64,
    count: u64,
    mode: ChartMode,
    /// Sum of squared deviations from the running mean (Welford).
    m2: f64,
}

impl ChartModel {
    /// Batch fit: population mean and standard deviation of `means`.
    pub fn fit(means: &[f64]) -> Result<Self> {
        if means.is_empty() {
            return Err(Error::Empty("control chart needs at least one window mean"));
        }
        let m = means.len() as f64;
        let mean = means.iter().sum::<f64>() / m;
        let m2: f64 = means.iter().map(|v| (v - mean).powi(2)).sum();
        Ok(ChartModel {
            mean_of_means: mean,
            sigma: (m2 / m).sqrt(),
            count: means.len() as u64,
            mode: ChartMode::Batch,
            m2,
        })
    }

    /// Empty streaming chart.
    pub fn streaming() -> Self {
        ChartModel {
            mean_of_means: 0.0,
            sigma: 0.0,
            count: 0,
            mode: ChartMode::Streaming,
            m2: 0.0,
        }
    }

    pub fn mean_of_means(&self) -> f64 {
        self.mean_of_means
    }

    pub fn sigma(&self) -> f64 {
        self.sigma
    }

    pub fn count(&self) -> u64 {
        self.count
    }

    pub fn mode(&self) -> ChartMode {
        self.mode
    }

    /// Absorb one window mean into a streaming chart.
    pub fn update(&mut self, mean: f64) -> Result<()> {
        if self.mode == ChartMode::Batch {
            return Err(Error::FrozenChart);
        }
        self.count += 1;
        let delta = mean - self.mean_of_means;
        self.mean_of_means += delta / self.count as f64;
        self.m2 += delta * (mean - self.mean_of_means);
        self.sigma = (self.m2.max(0.0) / self.count as f64).sqrt();
        Ok(())
    }

    /// Severity class of a window mean.
    pub fn tag(&self, mean: f64) -> ClassId {
        let d = (mean - self.mean_of_means).abs();
        if self.sigma == 0.0 {
            return ClassId(if d == 0.0 { 1 } else { 4 });
        }
        let k = (d / self.sigma).ceil();
        ClassId(k.clamp(1.0, 4.0) as u32)
    }

    /// Streaming labeling: tag with the current state, then absorb.
    ///
    /// Until two windows have been absorbed the chart has no spread, so those
    /// early windows are tagged class 1.
    pub fn tag_then_update(&mut self, mean: f64) -> Result<ClassId> {
        let class = if self.count < 2 {
            ClassId(1)
        } else {
            self.tag(mean)
        };
        self.update(mean)?;
        Ok(class)
    }
}

/// CSV with header `window_start,mean,class`.
pub fn write_chart_csv<W: Write>(
    rows: impl IntoIterator<Item = (NaiveDateTime, f64, ClassId)>,
    out: W,
) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["window_start", "mean", "class"])?;
    for (start, mean, class) in rows {
        w.write_record([
            start.format(CSV_TIMESTAMP_FORMAT).to_string(),
            mean.to_string(),
            class.to_string(),
        ])?;
    }
    w.flush().map_err(|e| Error::io("<csv>", e))?;
    Ok(())
}
