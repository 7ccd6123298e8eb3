//! Consistency indices and the aggregate inconsistency report.

use serde::{Deserialize, Serialize};

use crate::completion::incomplete_preference_scale;
use crate::error::{Error, Result};
use crate::merw::induce;
use crate::pcm::Pcm;
use crate::spectral::perron;

/// Saaty's consistency index `(eta - n) / (n - 1)`. Complete matrices only.
pub fn saaty_ci(pcm: &Pcm) -> Result<f64> {
    require_complete(pcm, "CI")?;
    let n = pcm.n() as f64;
    let eta = perron(pcm.entries())?.eta;
    Ok((eta - n) / (n - 1.0))
}

/// Harmonic consistency index.
///
/// With column sums `t_b = sum_a W_ab`, `HM = n / sum_b (1 / t_b)` and
/// `HCI = (HM - n)(n + 1) / (n (n - 1))`. For a consistent matrix
/// `W_ab = f_a / f_b`, `t_b = (sum f) / f_b`, so `sum 1/t_b = 1` and the
/// index is zero.
pub fn hci(pcm: &Pcm) -> Result<f64> {
    require_complete(pcm, "HCI")?;
    let n = pcm.n() as f64;
    let inv_sum: f64 = pcm.entries().column_iter().map(|c| 1.0 / c.sum()).sum();
    let hm = n / inv_sum;
    Ok((hm - n) * (n + 1.0) / (n * (n - 1.0)))
}

fn require_complete(pcm: &Pcm, index: &'static str) -> Result<()> {
    match pcm.missing_count() {
        0 => Ok(()),
        missing => Err(Error::Incomplete { index, missing }),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PairContribution {
    pub a: usize,
    pub b: usize,
    pub value: f64,
}

/// Everything the tools report about one matrix.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct InconsistencyReport {
    pub sdot: f64,
    pub ci: Option<f64>,
    pub hci: Option<f64>,
    pub scale: Vec<f64>,
    pub per_comparison: Vec<PairContribution>,
    pub per_alternative: Vec<f64>,
    pub complete: bool,
    pub gamma: f64,
    pub labels: Vec<String>,
}

impl InconsistencyReport {
    /// Comparisons ordered by descending contribution; ties keep edge order.
    pub fn ranked_comparisons(&self) -> Vec<PairContribution> {
        let mut v = self.per_comparison.clone();
        v.sort_by(|x, y| y.value.total_cmp(&x.value));
        v
    }

    /// Alternatives with their scale values, largest first; ties keep label
    /// order.
    pub fn ranking(&self) -> Vec<(&str, f64)> {
        let mut v: Vec<(&str, f64)> = self
            .labels
            .iter()
            .map(String::as_str)
            .zip(self.scale.iter().copied())
            .collect();
        v.sort_by(|x, y| y.1.total_cmp(&x.1));
        v
    }
}

/// Builds the full report. CI and HCI are present only for complete
/// matrices.
pub fn report(pcm: &Pcm, gamma: f64) -> Result<InconsistencyReport> {
    let model = induce(pcm, gamma)?;
    let complete = pcm.is_complete();
    let (ci, hci) = if complete {
        (Some(saaty_ci(pcm)?), Some(hci(pcm)?))
    } else {
        (None, None)
    };
    let scale = incomplete_preference_scale(pcm)?;
    Ok(InconsistencyReport {
        sdot: model.sdot,
        ci,
        hci,
        scale: scale.iter().copied().collect(),
        per_comparison: model
            .per_comparison()
            .into_iter()
            .map(|(a, b, value)| PairContribution { a, b, value })
            .collect(),
        per_alternative: model.per_alternative(),
        complete,
        gamma,
        labels: pcm.labels().to_vec(),
    })
}
