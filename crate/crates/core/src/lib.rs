//! Online anomaly detection on log-rate streams.
//!
//! Timestamped log lines are counted per minute ([`ingest`]), cut into
//! fixed-length windows, tagged into four severity classes by a control chart
//! ([`chart`]), summarized as five-attribute vectors ([`features`]) and fed to
//! an evolving Gaussian fuzzy classifier ([`classifier`]) that grows, adapts,
//! merges and prunes its rules while it predicts. [`metrics`] keeps the
//! recursive accuracy and rule-count accounting, [`synth`] produces seeded
//! log streams with injected anomaly regimes, and [`pipeline`] wires the
//! stages together.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

use std::fmt;

use serde::{Deserialize, Serialize};

pub mod chart;
pub mod classifier;
pub mod error;
pub mod features;
pub mod granule;
pub mod ingest;
pub mod metrics;
pub mod pipeline;
pub mod synth;

pub use chart::{ChartMode, ChartModel};
pub use classifier::{MetaParams, RuleBase, StepReport};
pub use error::{Error, Result};
pub use features::{FeatureVector, Normalizer};
pub use granule::{GaussianMf, Granule, TNorm};
pub use ingest::{RateSeries, WindowSummary};
pub use metrics::{MetricsReport, MetricsState};

/// Class identifier. Severity classes produced by the control chart are 1..=4.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ClassId(pub u32);

impl fmt::Display for ClassId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.0.fmt(f)
    }
}

/// Number of severity classes emitted by the control chart.
pub const N_CLASSES: u32 = 4;
