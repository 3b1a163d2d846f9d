//! Evolving Gaussian fuzzy classifier.
//!
//! [`RuleBase::learn_step`] runs one iteration of the online semi-supervised
//! loop: predict with the current rules, then create or adapt a granule,
//! move the activation threshold, drop stale rules and merge the closest
//! compatible pair. Labels are optional per sample.

use std::fmt;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::granule::{self, DispersionBand, Granule, TNorm};
use crate::ClassId;

/// Inactivity horizon after which a rule is deleted.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "HorizonRepr", into = "HorizonRepr")]
pub enum Horizon {
    Steps(u64),
    /// Never delete; for streams where some classes are rare.
    Infinite,
}

#[derive(Serialize, Deserialize)]
#[serde(untagged)]
enum HorizonRepr {
    Steps(u64),
    Word(String),
}

impl TryFrom<HorizonRepr> for Horizon {
    type Error = String;

    fn try_from(r: HorizonRepr) -> Result<Self, String> {
        match r {
            HorizonRepr::Steps(n) => Ok(Horizon::Steps(n)),
            HorizonRepr::Word(w) => w.parse(),
        }
    }
}

impl From<Horizon> for HorizonRepr {
    fn from(h: Horizon) -> Self {
        match h {
            Horizon::Steps(n) => HorizonRepr::Steps(n),
            Horizon::Infinite => HorizonRepr::Word("inf".into()),
        }
    }
}

impl std::str::FromStr for Horizon {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s.trim().to_ascii_lowercase().as_str() {
            "inf" | "infinite" | "infinity" | "never" => Ok(Horizon::Infinite),
            other => other
                .parse()
                .map(Horizon::Steps)
                .map_err(|_| format!("invalid horizon {s:?}: expected a step count or \"inf\"")),
        }
    }
}

impl fmt::Display for Horizon {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Horizon::Steps(n) => write!(f, "{n}"),
            Horizon::Infinite => f.write_str("inf"),
        }
    }
}

/// Learning meta-parameters. Defaults: `rho_init = delta = 0.1`, `h_r = 200`,
/// dispersions in `[1/(4π), 1/(2π)]`, `rho_min = 0.01`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct MetaParams {
    pub rho_init: f64,
    pub delta: f64,
    pub h_r: Horizon,
    pub sigma_lo: f64,
    pub sigma_hi: f64,
    pub rho_min: f64,
    pub tnorm: TNorm,
}

impl Default for MetaParams {
    fn default() -> Self {
        let band = DispersionBand::default();
        MetaParams {
            rho_init: 0.1,
            delta: 0.1,
            h_r: Horizon::Steps(200),
            sigma_lo: band.lo,
            sigma_hi: band.hi,
            rho_min: 0.01,
            tnorm: TNorm::Minimum,
        }
    }
}

impl MetaParams {
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: &str| Err(Error::Config(msg.to_string()));
        if !(self.rho_init > 0.0 && self.rho_init <= 1.0) {
            return bad("rho_init must be in (0, 1]");
        }
        if !(self.rho_min > 0.0 && self.rho_min <= self.rho_init) {
            return bad("rho_min must be in (0, rho_init]");
        }
        if !(self.delta > 0.0) {
            return bad("delta must be positive");
        }
        if self.h_r == Horizon::Steps(0) {
            return bad("h_r must be at least 1");
        }
        if !(self.sigma_lo > 0.0 && self.sigma_lo < self.sigma_hi) {
            return bad("dispersion bounds must satisfy 0 < sigma_lo < sigma_hi");
        }
        Ok(())
    }

    pub fn band(&self) -> DispersionBand {
        DispersionBand {
            lo: self.sigma_lo,
            hi: self.sigma_hi,
        }
    }
}

/// Output of [`RuleBase::classify`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Prediction {
    pub class: Option<ClassId>,
    /// Index of the most active rule, labeled or not.
    pub rule: Option<usize>,
    pub activation: f64,
}

/// What one learning step did.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StepReport {
    pub step: u64,
    pub predicted: Option<ClassId>,
    pub predicted_rule: Option<usize>,
    pub activation: f64,
    pub created_rule: bool,
    /// Id of the granule created or updated by this sample.
    pub touched_id: u64,
    /// Unlabeled granules that received a label during this step.
    pub tagged: usize,
    pub merged: bool,
    /// Ids of the pair replaced by the merge, if one happened.
    pub merged_ids: Option<[u64; 2]>,
    pub deleted_count: usize,
    pub deleted_ids: Vec<u64>,
    pub rho_after: f64,
    pub rule_count_after: usize,
}

/// The evolving rule base.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RuleBase {
    dim: usize,
    n_classes: u32,
    params: MetaParams,
    rho: f64,
    step: u64,
    /// Average dispersion recorded by the previous threshold update.
    prev_avg_dispersion: Option<f64>,
    next_id: u64,
    granules: Vec<Granule>,
}

const CHECKPOINT_FORMAT: &str = "egfc-rulebase";
const CHECKPOINT_VERSION: u32 = 1;

#[derive(Serialize, Deserialize)]
struct Checkpoint<T> {
    format: String,
    version: u32,
    model: T,
}

impl RuleBase {
    pub fn new(dim: usize, n_classes: u32, params: MetaParams) -> Result<Self> {
        params.validate()?;
        if dim == 0 {
            return Err(Error::Config("attribute dimension must be at least 1".into()));
        }
        if n_classes == 0 {
            return Err(Error::Config("need at least one class".into()));
        }
        Ok(RuleBase {
            dim,
            n_classes,
            params,
            rho: params.rho_init,
            step: 0,
            prev_avg_dispersion: None,
            next_id: 0,
            granules: Vec::new(),
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn n_classes(&self) -> u32 {
        self.n_classes
    }

    pub fn params(&self) -> &MetaParams {
        &self.params
    }

    pub fn rho(&self) -> f64 {
        self.rho
    }

    pub fn step(&self) -> u64 {
        self.step
    }

    pub fn prev_avg_dispersion(&self) -> Option<f64> {
        self.prev_avg_dispersion
    }

    pub fn granules(&self) -> &[Granule] {
        &self.granules
    }

    pub fn len(&self) -> usize {
        self.granules.len()
    }

    pub fn is_empty(&self) -> bool {
        self.granules.is_empty()
    }

    fn check_label(&self, y: Option<ClassId>) -> Result<()> {
        match y {
            Some(ClassId(c)) if c == 0 || c > self.n_classes => Err(Error::InvalidLabel {
                label: c,
                max: self.n_classes,
            }),
            _ => Ok(()),
        }
    }

    /// Insert a granule directly, e.g. to seed a model with prior knowledge.
    /// Returns its index.
    pub fn push_granule(&mut self, mut g: Granule) -> Result<usize> {
        Error::check_dim(self.dim, g.dim())?;
        self.check_label(g.label())?;
        g.id = self.next_id;
        self.next_id += 1;
        self.granules.push(g);
        Ok(self.granules.len() - 1)
    }

    fn activations(&self, x: &[f64]) -> Vec<f64> {
        self.granules
            .iter()
            .map(|g| {
                g.activation_with(x, self.params.tnorm)
                    .expect("dimension checked by caller")
            })
            .collect()
    }

    /// Predict the class of `x` without touching the model.
    ///
    /// The winner is the most active rule (lowest index on ties). When it is
    /// unlabeled the most active labeled rule supplies the class instead.
    pub fn classify(&self, x: &[f64]) -> Result<Prediction> {
        Error::check_dim(self.dim, x.len())?;
        let acts = self.activations(x);
        Ok(self.predict_from(&acts))
    }

    fn predict_from(&self, acts: &[f64]) -> Prediction {
        let winner = argmax(acts.iter().copied().enumerate());
        let Some((rule, activation)) = winner else {
            return Prediction {
                class: None,
                rule: None,
                activation: 0.0,
            };
        };
        let class = self.granules[rule].label().or_else(|| {
            argmax(
                acts.iter()
                    .copied()
                    .enumerate()
                    .filter(|&(i, _)| self.granules[i].label().is_some()),
            )
            .and_then(|(i, _)| self.granules[i].label())
        });
        Prediction {
            class,
            rule: Some(rule),
            activation,
        }
    }

    /// Process one sample: predict first, then learn from `(x, y)`.
    pub fn learn_step(&mut self, x: &[f64], y: Option<ClassId>) -> Result<StepReport> {
        Error::check_dim(self.dim, x.len())?;
        self.check_label(y)?;

        let acts = self.activations(x);
        let prediction = self.predict_from(&acts);

        self.step += 1;
        let h = self.step;
        let band = self.params.band();

        // Rules above the threshold, most active first; ties keep index order.
        let mut active: Vec<usize> = (0..acts.len()).filter(|&i| acts[i] > self.rho).collect();
        active.sort_by(|&a, &b| acts[b].total_cmp(&acts[a]));

        let target = match y {
            None => active.first().copied(),
            Some(label) => active
                .iter()
                .copied()
                .find(|&i| self.granules[i].label().is_none_or(|c| c == label)),
        };

        let mut tagged = 0;
        let (created_rule, touched_id) = match target {
            None => {
                let idx = self.push_granule(Granule::create(x, y, h, band))?;
                (true, self.granules[idx].id)
            }
            Some(i) => {
                if let Some(label) = y {
                    for &j in &active {
                        if self.granules[j].tag(label) {
                            tagged += 1;
                        }
                    }
                }
                self.granules[i].absorb(x, h, band)?;
                (false, self.granules[i].id)
            }
        };

        self.update_rho();
        let deleted_ids = self.prune_ids();
        let merged_ids = self.merge_closest();

        Ok(StepReport {
            step: h,
            predicted: prediction.class,
            predicted_rule: prediction.rule,
            activation: prediction.activation,
            created_rule,
            touched_id,
            tagged,
            merged: merged_ids.is_some(),
            merged_ids,
            deleted_count: deleted_ids.len(),
            deleted_ids,
            rho_after: self.rho,
            rule_count_after: self.granules.len(),
        })
    }

    /// Mean dispersion over every rule and attribute, `None` with no rules.
    pub fn avg_dispersion(&self) -> Option<f64> {
        if self.granules.is_empty() {
            return None;
        }
        let total: f64 = self.granules.iter().flat_map(|g| g.dispersions()).sum();
        Some(total / (self.granules.len() * self.dim) as f64)
    }

    /// Rescale the threshold by the ratio of the current to the previous
    /// average dispersion, clamped to `[rho_min, 1]`.
    ///
    /// The first call with rules present only records the average.
    pub fn update_rho(&mut self) -> f64 {
        let Some(current) = self.avg_dispersion() else {
            return self.rho;
        };
        if let Some(prev) = self.prev_avg_dispersion {
            self.rho = (current / prev * self.rho).clamp(self.params.rho_min, 1.0);
        }
        self.prev_avg_dispersion = Some(current);
        self.rho
    }

    /// Delete rules that have not been created or updated for more than `h_r` steps.
    pub fn prune_inactive(&mut self) -> usize {
        self.prune_ids().len()
    }

    fn prune_ids(&mut self) -> Vec<u64> {
        let Horizon::Steps(h_r) = self.params.h_r else {
            return Vec::new();
        };
        let now = self.step;
        let mut deleted = Vec::new();
        self.granules.retain(|g| {
            let keep = now.saturating_sub(g.last_active_step()) <= h_r;
            if !keep {
                deleted.push(g.id);
            }
            keep
        });
        deleted
    }

    /// Merge the closest label-compatible pair if it lies within `delta`.
    /// At most one merge per call.
    pub fn merge_pass(&mut self) -> bool {
        self.merge_closest().is_some()
    }

    fn merge_closest(&mut self) -> Option<[u64; 2]> {
        let mut best: Option<(usize, usize, f64)> = None;
        for i in 0..self.granules.len() {
            for j in i + 1..self.granules.len() {
                let (a, b) = (&self.granules[i], &self.granules[j]);
                if !granule::labels_compatible(a.label(), b.label()) {
                    continue;
                }
                let d = granule::distance(a, b).expect("rule base dimensions agree");
                if best.is_none_or(|(_, _, bd)| d < bd) {
                    best = Some((i, j, d));
                }
            }
        }
        let (i, j, d) = best?;
        if d > self.params.delta {
            return None;
        }
        let ids = [self.granules[i].id, self.granules[j].id];
        let mut merged = granule::merge(
            &self.granules[i],
            &self.granules[j],
            self.step,
            self.params.band(),
        )
        .expect("pair was checked for label compatibility");
        merged.id = self.next_id;
        self.next_id += 1;
        self.granules.remove(j);
        self.granules[i] = merged;
        Some(ids)
    }

    /// Serialize the full model state as a self-describing JSON document.
    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(&Checkpoint {
            format: CHECKPOINT_FORMAT.to_string(),
            version: CHECKPOINT_VERSION,
            model: self,
        })?)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let ck: Checkpoint<RuleBase> = serde_json::from_str(s)?;
        if ck.format != CHECKPOINT_FORMAT || ck.version != CHECKPOINT_VERSION {
            return Err(Error::Config(format!(
                "unsupported checkpoint {} v{}",
                ck.format, ck.version
            )));
        }
        let rb = ck.model;
        rb.params.validate()?;
        for g in &rb.granules {
            Error::check_dim(rb.dim, g.dim())?;
            rb.check_label(g.label())?;
        }
        Ok(rb)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        std::fs::write(path, self.to_json()?).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let s = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json(&s)
    }
}

/// First index holding the maximum value.
fn argmax(it: impl Iterator<Item = (usize, f64)>) -> Option<(usize, f64)> {
    it.fold(None, |best, (i, v)| match best {
        Some((_, bv)) if bv >= v => best,
        _ => Some((i, v)),
    })
}
