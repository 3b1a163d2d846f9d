//! Seeded synthetic log streams with injected rate anomalies.
//!
//! The per-minute rate follows a daily sinusoid around `base_rate` plus
//! Gaussian noise. Inside an anomaly segment the rate is scaled or shifted.
//! Each minute's count is expanded into evenly spaced log lines.

use std::io::Write;

use chrono::{Duration, NaiveDate, NaiveDateTime};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ingest::{RateSeries, CSV_TIMESTAMP_FORMAT, DEFAULT_TIMESTAMP_FORMAT};

const MINUTES_PER_DAY: f64 = 1440.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RateEffect {
    /// Scale the clean rate.
    Multiplier(f64),
    /// Add a constant number of events per minute.
    Shift(f64),
}

impl RateEffect {
    fn apply(self, rate: f64) -> f64 {
        match self {
            RateEffect::Multiplier(m) => rate * m,
            RateEffect::Shift(s) => rate + s,
        }
    }
}

/// Anomaly regime over minutes `[start_minute, end_minute)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AnomalySegment {
    pub start_minute: u64,
    pub end_minute: u64,
    pub severity: u32,
    pub effect: RateEffect,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SynthConfig {
    pub seed: u64,
    pub start: NaiveDateTime,
    pub duration_minutes: u64,
    /// Mean events per minute.
    pub base_rate: f64,
    /// Relative amplitude of the daily cycle (0.3 means ±30%).
    pub diurnal_amplitude: f64,
    /// Standard deviation of the per-minute count noise, in events.
    pub noise: f64,
    pub anomaly_segments: Vec<AnomalySegment>,
}

impl Default for SynthConfig {
    fn default() -> Self {
        SynthConfig {
            seed: 0,
            start: default_start(),
            duration_minutes: 24 * 60,
            base_rate: 20.0,
            diurnal_amplitude: 0.3,
            noise: 3.0,
            anomaly_segments: Vec::new(),
        }
    }
}

fn default_start() -> NaiveDateTime {
    NaiveDate::from_ymd_opt(2020, 1, 1)
        .and_then(|d| d.and_hms_opt(0, 0, 0))
        .expect("valid date")
}

impl SynthConfig {
    /// A long stream with anomaly regimes scattered through it.
    ///
    /// Roughly one segment every two days, starting on the hour and lasting
    /// two to eight hours. Each severity has its own rate level; a quarter of
    /// the severe segments are outages (the rate collapses) instead of bursts.
    /// Placement depends only on `seed`.
    pub fn benchmark(duration_minutes: u64, seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5eed_a11a);
        let mut segments = Vec::new();
        let mut t = 12 * 60;
        while t < duration_minutes {
            let start = (t + rng.random_range(24 * 60..72 * 60)) / 60 * 60;
            let len = rng.random_range(2..=8) * 60;
            if start + len > duration_minutes {
                break;
            }
            let severity = rng.random_range(2..=4);
            let jitter = rng.random_range(-0.05..0.05);
            let effect = match severity {
                2 => RateEffect::Multiplier(1.65 + jitter),
                3 => RateEffect::Multiplier(2.1 + jitter),
                _ if rng.random_bool(0.25) => RateEffect::Multiplier(0.05),
                _ => RateEffect::Multiplier(2.9 + jitter),
            };
            segments.push(AnomalySegment {
                start_minute: start,
                end_minute: start + len,
                severity,
                effect,
            });
            t = start + len;
        }
        SynthConfig {
            seed,
            duration_minutes,
            diurnal_amplitude: 0.1,
            noise: 5.0,
            anomaly_segments: segments,
            ..Default::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::Config(m));
        if self.duration_minutes == 0 {
            return bad("duration must be at least one minute".into());
        }
        if !(self.base_rate >= 0.0) || !(self.noise >= 0.0) {
            return bad("base_rate and noise must be non-negative".into());
        }
        if !(self.diurnal_amplitude.abs() <= 1.0) {
            return bad("diurnal_amplitude must be within [-1, 1]".into());
        }
        for s in &self.anomaly_segments {
            if s.start_minute >= s.end_minute || s.end_minute > self.duration_minutes {
                return bad(format!(
                    "anomaly segment [{}, {}) outside [0, {})",
                    s.start_minute, s.end_minute, self.duration_minutes
                ));
            }
            if !(2..=4).contains(&s.severity) {
                return bad(format!("anomaly severity {} not in 2..=4", s.severity));
            }
            if let RateEffect::Multiplier(m) = s.effect {
                if !(m > 0.0) {
                    return bad(format!("rate multiplier {m} must be positive"));
                }
            }
        }
        Ok(())
    }

    fn clean_rate(&self, minute: u64) -> f64 {
        let phase = 2.0 * std::f64::consts::PI * minute as f64 / MINUTES_PER_DAY;
        self.base_rate * (1.0 + self.diurnal_amplitude * phase.sin())
    }
}

/// Generated stream: per-minute counts plus the segments that shaped them.
#[derive(Debug, Clone, PartialEq)]
pub struct SynthStream {
    pub start: NaiveDateTime,
    pub counts: Vec<u64>,
    pub segments: Vec<AnomalySegment>,
}

const MESSAGES: [&str; 4] = [
    "INFO  synth.frontend - request served",
    "INFO  synth.backend - transfer completed",
    "WARN  synth.backend - slow checksum",
    "DEBUG synth.frontend - session refreshed",
];

pub fn generate(cfg: &SynthConfig) -> Result<SynthStream> {
    cfg.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let noise = Normal::new(0.0, cfg.noise).map_err(|e| Error::Config(e.to_string()))?;
    let counts = (0..cfg.duration_minutes)
        .map(|m| {
            let mut rate = cfg.clean_rate(m);
            for s in &cfg.anomaly_segments {
                if (s.start_minute..s.end_minute).contains(&m) {
                    rate = s.effect.apply(rate);
                }
            }
            // always draw so the noise sequence does not depend on the segments
            let eps = noise.sample(&mut rng);
            (rate + eps).round().max(0.0) as u64
        })
        .collect();
    Ok(SynthStream {
        start: cfg.start,
        counts,
        segments: cfg.anomaly_segments.clone(),
    })
}

impl SynthStream {
    pub fn total_lines(&self) -> u64 {
        self.counts.iter().sum()
    }

    pub fn rate_series(&self) -> RateSeries {
        RateSeries {
            start_minute: self.start,
            counts: self.counts.clone(),
        }
    }

    /// Log lines in time order, `count` evenly spaced lines per minute.
    pub fn lines(&self) -> impl Iterator<Item = String> + '_ {
        let mut seq = 0u64;
        self.counts.iter().enumerate().flat_map(move |(m, &count)| {
            let minute = self.start + Duration::minutes(m as i64);
            (0..count).map(move |i| {
                let ms = (i * 60_000 / count) as i64;
                let ts = minute + Duration::milliseconds(ms);
                (ts, i)
            })
        })
        .map(move |(ts, i)| {
            seq += 1;
            format!(
                "{} - {} #{seq}",
                ts.format(DEFAULT_TIMESTAMP_FORMAT),
                MESSAGES[(i % MESSAGES.len() as u64) as usize]
            )
        })
    }

    pub fn write_log<W: Write>(&self, mut out: W) -> Result<()> {
        for line in self.lines() {
            writeln!(out, "{line}").map_err(|e| Error::io("<log output>", e))?;
        }
        out.flush().map_err(|e| Error::io("<log output>", e))
    }

    /// Sidecar CSV `start,end,severity`, timestamps of the segment bounds.
    pub fn write_annotations<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["start", "end", "severity"])?;
        for s in &self.segments {
            let at = |m: u64| {
                (self.start + Duration::minutes(m as i64))
                    .format(CSV_TIMESTAMP_FORMAT)
                    .to_string()
            };
            w.write_record([at(s.start_minute), at(s.end_minute), s.severity.to_string()])?;
        }
        w.flush().map_err(|e| Error::io("<annotations>", e))?;
        Ok(())
    }
}
