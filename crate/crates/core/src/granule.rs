//! Gaussian membership functions and the information granules built from them.
//!
//! A granule is the Cartesian product of one normal Gaussian per attribute,
//! aggregated with a T-norm. Granules are created at a sample, drift toward
//! the samples that select them, and can be merged when two of them carry
//! the same information.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ClassId;

/// Upper dispersion bound, `1/(2π)`. Also the width of a freshly created granule.
pub const SIGMA_MAX: f64 = 1.0 / (2.0 * PI);
/// Lower dispersion bound, `1/(4π)`.
pub const SIGMA_MIN: f64 = 1.0 / (4.0 * PI);

/// Closed interval every dispersion is clamped into after creation, update or merge.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DispersionBand {
    pub lo: f64,
    pub hi: f64,
}

impl Default for DispersionBand {
    fn default() -> Self {
        DispersionBand {
            lo: SIGMA_MIN,
            hi: SIGMA_MAX,
        }
    }
}

impl DispersionBand {
    pub fn clamp(&self, sigma: f64) -> f64 {
        sigma.clamp(self.lo, self.hi)
    }

    pub fn contains(&self, sigma: f64) -> bool {
        sigma >= self.lo && sigma <= self.hi
    }
}

/// Normal (height one) Gaussian membership function.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GaussianMf {
    pub modal: f64,
    pub dispersion: f64,
}

impl GaussianMf {
    pub fn new(modal: f64, dispersion: f64) -> Self {
        debug_assert!(dispersion > 0.0);
        GaussianMf { modal, dispersion }
    }

    /// `exp(-(x - modal)^2 / (2 dispersion^2))`. Equals one only at the modal value.
    pub fn membership(&self, x: f64) -> f64 {
        let z = (x - self.modal) / self.dispersion;
        (-0.5 * z * z).exp()
    }
}

/// Fuzzy conjunction used to aggregate per-attribute memberships.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TNorm {
    /// Gödel minimum.
    #[default]
    Minimum,
    /// Algebraic product.
    Product,
}

impl TNorm {
    pub fn combine<I: IntoIterator<Item = f64>>(self, degrees: I) -> f64 {
        match self {
            TNorm::Minimum => degrees.into_iter().fold(1.0, f64::min),
            TNorm::Product => degrees.into_iter().product(),
        }
    }
}

/// Antecedent of one rule: a Gaussian per attribute plus the bookkeeping the
/// learner needs (class, number of absorbed samples, last selection step).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Granule {
    /// Stable identity, assigned by the owning rule base.
    #[serde(default)]
    pub id: u64,
    mfs: Vec<GaussianMf>,
    label: Option<ClassId>,
    update_count: u64,
    last_active_step: u64,
}

impl Granule {
    /// New granule centred on `x` with every dispersion at `band.hi`.
    ///
    /// The founding sample counts as the first absorption, so `update_count`
    /// starts at one.
    pub fn create(x: &[f64], label: Option<ClassId>, step: u64, band: DispersionBand) -> Self {
        Granule {
            id: 0,
            mfs: x.iter().map(|&v| GaussianMf::new(v, band.hi)).collect(),
            label,
            update_count: 1,
            last_active_step: step,
        }
    }

    /// Rebuild a granule from raw parts. Dispersions are clamped into `band`.
    pub fn from_parts(
        mfs: Vec<GaussianMf>,
        label: Option<ClassId>,
        update_count: u64,
        last_active_step: u64,
        band: DispersionBand,
    ) -> Self {
        Granule {
            id: 0,
            mfs: mfs
                .into_iter()
                .map(|mf| GaussianMf::new(mf.modal, band.clamp(mf.dispersion)))
                .collect(),
            label,
            update_count: update_count.max(1),
            last_active_step,
        }
    }

    pub fn dim(&self) -> usize {
        self.mfs.len()
    }

    pub fn mfs(&self) -> &[GaussianMf] {
        &self.mfs
    }

    pub fn label(&self) -> Option<ClassId> {
        self.label
    }

    pub fn update_count(&self) -> u64 {
        self.update_count
    }

    pub fn last_active_step(&self) -> u64 {
        self.last_active_step
    }

    pub fn modal(&self) -> impl Iterator<Item = f64> + '_ {
        self.mfs.iter().map(|mf| mf.modal)
    }

    pub fn dispersions(&self) -> impl Iterator<Item = f64> + '_ {
        self.mfs.iter().map(|mf| mf.dispersion)
    }

    /// Assign a class to an unlabeled granule. Returns `false` (and leaves the
    /// granule untouched) if it already carries a label.
    pub fn tag(&mut self, label: ClassId) -> bool {
        if self.label.is_some() {
            return false;
        }
        self.label = Some(label);
        true
    }

    /// Aggregated membership of `x` under the minimum T-norm.
    pub fn activation(&self, x: &[f64]) -> Result<f64> {
        self.activation_with(x, TNorm::Minimum)
    }

    pub fn activation_with(&self, x: &[f64], tnorm: TNorm) -> Result<f64> {
        Error::check_dim(self.dim(), x.len())?;
        Ok(tnorm.combine(
            self.mfs
                .iter()
                .zip(x)
                .map(|(mf, &v)| mf.membership(v)),
        ))
    }

    /// Absorb `x`: bump the update count, then move each modal value to the
    /// running mean and recompute the dispersion recursively from the old mode.
    pub fn absorb(&mut self, x: &[f64], step: u64, band: DispersionBand) -> Result<()> {
        Error::check_dim(self.dim(), x.len())?;
        self.update_count += 1;
        let w = self.update_count as f64;
        let keep = (w - 1.0) / w;
        for (mf, &v) in self.mfs.iter_mut().zip(x) {
            let old = mf.modal;
            mf.modal = old + (v - old) / w;
            let dev = v - old;
            let sigma = (keep * mf.dispersion * mf.dispersion + dev * dev / w).sqrt();
            mf.dispersion = band.clamp(sigma);
        }
        self.last_active_step = step;
        Ok(())
    }
}

/// Two granules can merge when both are unlabeled or both carry the same class.
pub fn labels_compatible(a: Option<ClassId>, b: Option<ClassId>) -> bool {
    a == b
}

/// Distance between two granules: mean over attributes of the modal gap plus
/// the specificity gap `σ1 + σ2 - 2√(σ1σ2)`.
pub fn distance(a: &Granule, b: &Granule) -> Result<f64> {
    Error::check_dim(a.dim(), b.dim())?;
    let n = a.dim();
    if n == 0 {
        return Ok(0.0);
    }
    let sum: f64 = a
        .mfs
        .iter()
        .zip(&b.mfs)
        .map(|(p, q)| {
            (p.modal - q.modal).abs() + p.dispersion + q.dispersion
                - 2.0 * (p.dispersion * q.dispersion).sqrt()
        })
        .sum();
    Ok(sum / n as f64)
}

/// Merge two label-compatible granules into one.
///
/// Modal values are averaged with weights `σ1/σ2` and `σ2/σ1`; dispersions add
/// and are then clamped into `band`. Counts add up and the result is marked
/// active at `step`.
pub fn merge(a: &Granule, b: &Granule, step: u64, band: DispersionBand) -> Result<Granule> {
    Error::check_dim(a.dim(), b.dim())?;
    if !labels_compatible(a.label, b.label) {
        return Err(Error::LabelConflict(
            a.label.map(|c| c.0),
            b.label.map(|c| c.0),
        ));
    }
    let mfs = a
        .mfs
        .iter()
        .zip(&b.mfs)
        .map(|(p, q)| {
            let wa = p.dispersion / q.dispersion;
            let wb = q.dispersion / p.dispersion;
            let modal = (wa * p.modal + wb * q.modal) / (wa + wb);
            GaussianMf::new(modal, band.clamp(p.dispersion + q.dispersion))
        })
        .collect();
    Ok(Granule {
        id: 0,
        mfs,
        label: a.label,
        update_count: a.update_count + b.update_count,
        last_active_step: step,
    })
}
