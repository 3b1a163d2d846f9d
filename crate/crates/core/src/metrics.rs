//! Recursive accuracy and rule-count accounting plus a confusion matrix.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ClassId;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsState {
    n_classes: u32,
    acc: f64,
    c_avg: f64,
    h: u64,
    correct: u64,
    /// Rows are true classes, columns predicted classes.
    confusion: Vec<Vec<u64>>,
    unpredicted: u64,
}

impl Default for MetricsState {
    fn default() -> Self {
        Self::new(crate::N_CLASSES)
    }
}

impl MetricsState {
    pub fn new(n_classes: u32) -> Self {
        let n = n_classes as usize;
        MetricsState {
            n_classes,
            acc: 0.0,
            c_avg: 0.0,
            h: 0,
            correct: 0,
            confusion: vec![vec![0; n]; n],
            unpredicted: 0,
        }
    }

    fn index(&self, c: ClassId) -> Result<usize> {
        if c.0 == 0 || c.0 > self.n_classes {
            return Err(Error::InvalidLabel {
                label: c.0,
                max: self.n_classes,
            });
        }
        Ok(c.0 as usize - 1)
    }

    /// Account for one prediction. A missing prediction counts as wrong but
    /// stays out of the confusion matrix.
    pub fn record(&mut self, predicted: Option<ClassId>, truth: ClassId, rule_count: usize) -> Result<()> {
        let t = self.index(truth)?;
        let p = predicted.map(|c| self.index(c)).transpose()?;

        self.h += 1;
        let h = self.h as f64;
        let tau = if p == Some(t) { 1.0 } else { 0.0 };
        self.acc = (h - 1.0) / h * self.acc + tau / h;
        self.c_avg = (h - 1.0) / h * self.c_avg + rule_count as f64 / h;
        match p {
            Some(p) => {
                self.confusion[t][p] += 1;
                if p == t {
                    self.correct += 1;
                }
            }
            None => self.unpredicted += 1,
        }
        Ok(())
    }

    pub fn acc(&self) -> f64 {
        self.acc
    }

    pub fn c_avg(&self) -> f64 {
        self.c_avg
    }

    pub fn h(&self) -> u64 {
        self.h
    }

    pub fn correct(&self) -> u64 {
        self.correct
    }

    pub fn unpredicted(&self) -> u64 {
        self.unpredicted
    }

    pub fn confusion(&self) -> &[Vec<u64>] {
        &self.confusion
    }

    pub fn report(&self) -> MetricsReport {
        let n = self.n_classes as usize;
        let col = |j: usize| (0..n).map(|i| self.confusion[i][j]).sum::<u64>();
        let ratio = |num: u64, den: u64| (den > 0).then(|| num as f64 / den as f64);
        MetricsReport {
            acc: self.acc,
            c_avg: self.c_avg,
            h: self.h,
            unpredicted: self.unpredicted,
            confusion: self.confusion.clone(),
            precision: (0..n).map(|k| ratio(self.confusion[k][k], col(k))).collect(),
            recall: (0..n)
                .map(|k| ratio(self.confusion[k][k], self.confusion[k].iter().sum()))
                .collect(),
        }
    }
}

/// Read-only summary of a [`MetricsState`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub acc: f64,
    pub c_avg: f64,
    pub h: u64,
    pub unpredicted: u64,
    pub confusion: Vec<Vec<u64>>,
    /// Per class; `None` when the class was never predicted.
    pub precision: Vec<Option<f64>>,
    /// Per class; `None` when the class never occurred with a prediction.
    pub recall: Vec<Option<f64>>,
}
