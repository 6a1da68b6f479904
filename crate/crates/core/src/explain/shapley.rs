//! Shapley values of a cooperative game over state features.
//!
//! `shapley_exact` enumerates every coalition and applies the combinatorial
//! weights `|C|! (d - |C| - 1)! / d!`. `shapley_mc` draws uniform random
//! permutations; the features preceding `i` in a permutation form a coalition
//! distributed with exactly those weights, so the mean marginal contribution
//! is an unbiased estimate of the exact value.

use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use super::coalition::Coalition;
use crate::error::{Error, Result};

pub const MAX_EXACT_FEATURES: usize = 12;

/// Characteristic function `v(C)` over `num_players` features.
pub trait CoalitionGame {
    fn num_players(&self) -> usize;

    fn value(&self, coalition: &Coalition) -> Result<f64>;

    /// Evaluates several coalitions; implementations may batch the work.
    fn values(&self, coalitions: &[Coalition]) -> Result<Vec<f64>> {
        coalitions.iter().map(|c| self.value(c)).collect()
    }

    /// Rollout parameters to record in a report, if any.
    fn rollout_info(&self) -> Option<RolloutInfo> {
        None
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RolloutInfo {
    pub horizon: usize,
    pub gamma: f64,
    pub rollouts: usize,
    pub baseline: Vec<f64>,
}

/// Game defined by a closure.
pub struct FnGame<F> {
    players: usize,
    f: F,
}

impl<F: Fn(&Coalition) -> f64> FnGame<F> {
    pub fn new(players: usize, f: F) -> Self {
        Self { players, f }
    }
}

impl<F: Fn(&Coalition) -> f64> CoalitionGame for FnGame<F> {
    fn num_players(&self) -> usize {
        self.players
    }

    fn value(&self, coalition: &Coalition) -> Result<f64> {
        Ok((self.f)(coalition))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum EstimatorKind {
    Exact,
    MonteCarlo,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ShapleyReport {
    pub values: Vec<f64>,
    pub kind: EstimatorKind,
    /// Permutations drawn (Monte-Carlo) or coalitions enumerated (exact).
    pub samples: usize,
    /// Standard error per feature; Monte-Carlo with at least two samples only.
    pub std_errors: Option<Vec<f64>>,
    pub full_value: f64,
    pub empty_value: f64,
    pub rollout: Option<RolloutInfo>,
}

impl ShapleyReport {
    pub fn total(&self) -> f64 {
        self.values.iter().sum()
    }
}

/// `s! (d - s - 1)! / d!` for `s = 0..d`.
pub fn shapley_weights(d: usize) -> Vec<f64> {
    // Computed as 1 / (d * C(d-1, s)) to stay exact for moderate d.
    (0..d)
        .map(|s| {
            let mut binom = 1.0f64;
            for k in 0..s {
                binom = binom * (d - 1 - k) as f64 / (k + 1) as f64;
            }
            1.0 / (d as f64 * binom)
        })
        .collect()
}

pub fn shapley_exact<G: CoalitionGame + ?Sized>(game: &G) -> Result<ShapleyReport> {
    let d = game.num_players();
    if d > MAX_EXACT_FEATURES {
        return Err(Error::TooManyFeatures {
            features: d,
            max: MAX_EXACT_FEATURES,
        });
    }
    if d == 0 {
        return Err(Error::InvalidArgument("game has no players".into()));
    }
    let count = 1usize << d;
    let coalitions: Vec<Coalition> = (0..count as u64).map(|m| Coalition::from_mask(d, m)).collect();
    let v = game.values(&coalitions)?;
    let weights = shapley_weights(d);
    let mut values = vec![0.0; d];
    for (i, psi) in values.iter_mut().enumerate() {
        let bit = 1usize << i;
        for mask in (0..count).filter(|m| m & bit == 0) {
            let size = mask.count_ones() as usize;
            *psi += weights[size] * (v[mask | bit] - v[mask]);
        }
    }
    Ok(ShapleyReport {
        values,
        kind: EstimatorKind::Exact,
        samples: count,
        std_errors: None,
        full_value: v[count - 1],
        empty_value: v[0],
        rollout: game.rollout_info(),
    })
}

pub fn shapley_mc<G: CoalitionGame + ?Sized, R: Rng + ?Sized>(
    game: &G,
    samples: usize,
    rng: &mut R,
) -> Result<ShapleyReport> {
    let d = game.num_players();
    if samples == 0 {
        return Err(Error::InvalidArgument("Monte-Carlo Shapley needs at least one sample".into()));
    }
    if d == 0 {
        return Err(Error::InvalidArgument("game has no players".into()));
    }
    let ends = game.values(&[Coalition::empty(d), Coalition::full(d)])?;
    let (empty_value, full_value) = (ends[0], ends[1]);

    let mut sum = vec![0.0; d];
    let mut sum_sq = vec![0.0; d];
    let mut order: Vec<usize> = (0..d).collect();
    for _ in 0..samples {
        order.shuffle(rng);
        // Proper prefixes of length 1..d-1; the empty and full ends are cached.
        let mut prefixes = Vec::with_capacity(d.saturating_sub(1));
        let mut c = Coalition::empty(d);
        for &f in &order[..d - 1] {
            c.insert(f);
            prefixes.push(c.clone());
        }
        let inner = game.values(&prefixes)?;
        let mut prev = empty_value;
        for (pos, &f) in order.iter().enumerate() {
            let cur = if pos + 1 == d { full_value } else { inner[pos] };
            let marginal = cur - prev;
            sum[f] += marginal;
            sum_sq[f] += marginal * marginal;
            prev = cur;
        }
    }
    let m = samples as f64;
    let values: Vec<f64> = sum.iter().map(|s| s / m).collect();
    let std_errors = (samples >= 2).then(|| {
        values
            .iter()
            .zip(&sum_sq)
            .map(|(mean, sq)| {
                let var = ((sq - m * mean * mean) / (m - 1.0)).max(0.0);
                (var / m).sqrt()
            })
            .collect()
    });
    Ok(ShapleyReport {
        values,
        kind: EstimatorKind::MonteCarlo,
        samples,
        std_errors,
        full_value,
        empty_value,
        rollout: game.rollout_info(),
    })
}
