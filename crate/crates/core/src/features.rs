//! Five-attribute window features and min-max normalization.

use std::io::{Read, Write};

use chrono::NaiveDateTime;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ingest::{WindowSummary, CSV_TIMESTAMP_FORMAT};
use crate::ClassId;

pub const N_ATTRIBUTES: usize = 5;

pub type Attributes = [f64; N_ATTRIBUTES];

/// `[mean, std, min, max, max |u[i+1] - u[i]|]` over the per-minute counts of
/// one window. Standard deviation is the population one; a one-minute window
/// has a largest step of zero.
pub fn extract(window: &WindowSummary) -> Result<Attributes> {
    extract_counts(&window.counts)
}

pub fn extract_counts(counts: &[u64]) -> Result<Attributes> {
    if counts.is_empty() {
        return Err(Error::Empty("window has no minutes"));
    }
    let n = counts.len() as f64;
    let mean = counts.iter().sum::<u64>() as f64 / n;
    let var = counts
        .iter()
        .map(|&c| (c as f64 - mean).powi(2))
        .sum::<f64>()
        / n;
    let min = *counts.iter().min().expect("non-empty") as f64;
    let max = *counts.iter().max().expect("non-empty") as f64;
    let step = counts
        .windows(2)
        .map(|p| p[0].abs_diff(p[1]))
        .max()
        .unwrap_or(0) as f64;
    Ok([mean, var.sqrt(), min, max, step])
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureVector {
    pub window_start: NaiveDateTime,
    pub raw: Attributes,
    pub normalized: Attributes,
    pub label: Option<ClassId>,
}

/// Per-attribute min-max scaler into the unit hypercube.
///
/// Values outside the observed range are clamped. An attribute whose range is
/// still a single point maps to 0.5.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Normalizer {
    range: Option<(Attributes, Attributes)>,
    frozen: bool,
}

impl Normalizer {
    pub fn new() -> Self {
        Self::default()
    }

    /// Frozen normalizer with fixed per-attribute ranges.
    pub fn with_ranges(min: Attributes, max: Attributes) -> Result<Self> {
        if min.iter().zip(&max).any(|(lo, hi)| lo > hi) {
            return Err(Error::Config("normalizer min exceeds max".into()));
        }
        Ok(Normalizer {
            range: Some((min, max)),
            frozen: true,
        })
    }

    /// Observe every vector, then freeze.
    pub fn fit<'a>(vectors: impl IntoIterator<Item = &'a Attributes>) -> Self {
        let mut nz = Normalizer::new();
        for v in vectors {
            nz.observe(v);
        }
        nz.frozen = true;
        nz
    }

    pub fn is_frozen(&self) -> bool {
        self.frozen
    }

    pub fn freeze(&mut self) {
        self.frozen = true;
    }

    pub fn ranges(&self) -> Option<(Attributes, Attributes)> {
        self.range
    }

    /// Widen the running ranges. No-op once frozen.
    pub fn observe(&mut self, v: &Attributes) {
        if self.frozen {
            return;
        }
        match &mut self.range {
            None => self.range = Some((*v, *v)),
            Some((lo, hi)) => {
                for j in 0..N_ATTRIBUTES {
                    lo[j] = lo[j].min(v[j]);
                    hi[j] = hi[j].max(v[j]);
                }
            }
        }
    }

    pub fn transform(&self, v: &Attributes) -> Attributes {
        let mut out = [0.5; N_ATTRIBUTES];
        if let Some((lo, hi)) = &self.range {
            for j in 0..N_ATTRIBUTES {
                let span = hi[j] - lo[j];
                if span > 0.0 {
                    out[j] = ((v[j] - lo[j]) / span).clamp(0.0, 1.0);
                }
            }
        }
        out
    }

    /// Causal streaming use: scale with the ranges seen so far, then observe.
    pub fn transform_then_observe(&mut self, v: &Attributes) -> Attributes {
        let out = self.transform(v);
        self.observe(v);
        out
    }
}

#[derive(Debug, Serialize, Deserialize)]
struct DatasetRow {
    window_start: String,
    x1: f64,
    x2: f64,
    x3: f64,
    x4: f64,
    x5: f64,
    label: Option<u32>,
}

/// One row of the interchange dataset: normalized attributes and a label.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Sample {
    pub window_start: NaiveDateTime,
    pub x: Attributes,
    pub label: Option<ClassId>,
}

/// Write `window_start,x1,x2,x3,x4,x5,label` rows.
pub fn write_dataset<W: Write>(samples: &[Sample], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for s in samples {
        w.serialize(DatasetRow {
            window_start: s.window_start.format(CSV_TIMESTAMP_FORMAT).to_string(),
            x1: s.x[0],
            x2: s.x[1],
            x3: s.x[2],
            x4: s.x[3],
            x5: s.x[4],
            label: s.label.map(|c| c.0),
        })?;
    }
    w.flush().map_err(|e| Error::io("<dataset>", e))?;
    Ok(())
}

/// Parsed dataset plus the number of rows that had to be rejected.
#[derive(Debug, Clone, Default)]
pub struct Dataset {
    pub samples: Vec<Sample>,
    pub rejected: usize,
    /// 1-based data row numbers of the first few rejected rows.
    pub first_rejected: Vec<usize>,
}

/// Read a dataset CSV. Malformed rows are skipped and counted.
pub fn read_dataset<R: Read>(input: R) -> Result<Dataset> {
    let mut rd = csv::Reader::from_reader(input);
    let headers = rd.headers()?.clone();
    let expected = ["window_start", "x1", "x2", "x3", "x4", "x5", "label"];
    if headers.iter().ne(expected) {
        return Err(Error::Dataset(format!(
            "unexpected header {:?}, want {}",
            headers.iter().collect::<Vec<_>>(),
            expected.join(",")
        )));
    }
    let mut ds = Dataset::default();
    for (i, row) in rd.deserialize::<DatasetRow>().enumerate() {
        let parsed = row.ok().and_then(|r| {
            let ts = NaiveDateTime::parse_from_str(&r.window_start, CSV_TIMESTAMP_FORMAT).ok()?;
            let x = [r.x1, r.x2, r.x3, r.x4, r.x5];
            x.iter().all(|v| v.is_finite()).then_some(Sample {
                window_start: ts,
                x,
                label: r.label.map(ClassId),
            })
        });
        match parsed {
            Some(s) => ds.samples.push(s),
            None => {
                ds.rejected += 1;
                if ds.first_rejected.len() < 16 {
                    ds.first_rejected.push(i + 1);
                }
            }
        }
    }
    Ok(ds)
}
