//! Explanation fidelity: does the claimed importance of each feature track how
//! much the action moves when that feature is perturbed?

use ndarray::Array2;
use serde::{Deserialize, Serialize};

use crate::agent::AttentionActor;
use crate::error::{Error, Result};

/// Pearson correlation; `None` when either side has zero variance.
pub fn pearson(x: &[f64], y: &[f64]) -> Option<f64> {
    if x.len() != y.len() || x.len() < 2 {
        return None;
    }
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (a, b) in x.iter().zip(y) {
        let (dx, dy) = (a - mx, b - my);
        sxy += dx * dy;
        sxx += dx * dx;
        syy += dy * dy;
    }
    // Treat round-off-level spread (e.g. a constant vector whose mean is
    // inexact) as zero variance.
    let tiny = |ss: f64, v: &[f64]| {
        let scale = v.iter().fold(0.0f64, |m, a| m.max(a.abs()));
        ss.sqrt() <= 1e-12 * scale * n.sqrt()
    };
    if tiny(sxx, x) || tiny(syy, y) {
        return None;
    }
    Some((sxy / (sxx.sqrt() * syy.sqrt())).clamp(-1.0, 1.0))
}

/// Population standard deviation of each feature over `states`.
pub fn feature_std(states: &[Vec<f64>]) -> Vec<f64> {
    let Some(first) = states.first() else {
        return Vec::new();
    };
    let n = states.len() as f64;
    (0..first.len())
        .map(|i| {
            let mean = states.iter().map(|s| s[i]).sum::<f64>() / n;
            (states.iter().map(|s| (s[i] - mean).powi(2)).sum::<f64>() / n).sqrt()
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FidelityReport {
    /// Pearson r per state; `None` for skipped states.
    pub per_state: Vec<Option<f64>>,
    pub mean_r: Option<f64>,
    pub delta: Vec<f64>,
    pub states: usize,
    pub skipped: usize,
}

/// `L2` change of the action vector when each feature in turn is shifted by
/// its `delta`.
pub fn perturbation_response(actor: &AttentionActor, state: &[f64], delta: &[f64]) -> Result<Vec<f64>> {
    let d = state.len();
    if delta.len() != d {
        return Err(Error::DimensionMismatch {
            context: "perturbation size",
            expected: d,
            actual: delta.len(),
        });
    }
    // Row 0 is the unperturbed state, row i+1 shifts feature i.
    let mut batch = Array2::zeros((d + 1, d));
    for mut row in batch.rows_mut() {
        row.iter_mut().zip(state).for_each(|(dst, &v)| *dst = v);
    }
    for i in 0..d {
        batch[[i + 1, i]] += delta[i];
    }
    let actions = actor.predict_batch(&batch)?;
    let base = actions.row(0);
    Ok((0..d)
        .map(|i| {
            actions
                .row(i + 1)
                .iter()
                .zip(base)
                .map(|(a, b)| (a - b).powi(2))
                .sum::<f64>()
                .sqrt()
        })
        .collect())
}

/// Correlates attention weights with perturbation responses on each state.
pub fn fidelity_pearson(actor: &AttentionActor, states: &[Vec<f64>], delta: &[f64]) -> Result<FidelityReport> {
    let mut per_state = Vec::with_capacity(states.len());
    for s in states {
        let (alpha, _) = actor.attention_forward(s)?;
        let response = perturbation_response(actor, s, delta)?;
        per_state.push(pearson(&alpha, &response));
    }
    let valid: Vec<f64> = per_state.iter().flatten().copied().collect();
    let mean_r = (!valid.is_empty()).then(|| valid.iter().sum::<f64>() / valid.len() as f64);
    Ok(FidelityReport {
        skipped: per_state.len() - valid.len(),
        states: per_state.len(),
        per_state,
        mean_r,
        delta: delta.to_vec(),
    })
}
