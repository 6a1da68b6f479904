//! Link-level quantities: path-loss gain, inter-cell interference, PRB
//! throughput and end-to-end delay.

use ndarray::Array2;

use super::topology::Point;
use crate::config::NetworkConfig;

/// Distance below which the path-loss law is clamped.
pub const REFERENCE_DISTANCE: f64 = 1.0;

/// Power-law gain `(max(d, d_ref) / d_ref)^-exponent`, always in `(0, 1]`.
pub fn channel_gain(vehicle: Point, gnb: Point, exponent: f64) -> f64 {
    let d = vehicle.distance(&gnb).max(REFERENCE_DISTANCE);
    (d / REFERENCE_DISTANCE).powf(-exponent)
}

/// Downlink interference at a receiver served by `serving`: the sum of
/// `P * G` over every other gNB.
pub fn interference_at(gains: &[f64], serving: usize, tx_power: f64) -> f64 {
    gains
        .iter()
        .enumerate()
        .filter(|&(m, _)| m != serving)
        .map(|(_, g)| tx_power * g)
        .sum()
}

/// Shannon rate over `prbs` resource blocks.
pub fn throughput(prbs: u32, gain: f64, interference: f64, config: &NetworkConfig) -> f64 {
    if prbs == 0 {
        return 0.0;
    }
    let sinr = config.tx_power() * gain / (config.noise_power + interference);
    prbs as f64 * config.prb_bandwidth * (1.0 + sinr).log2()
}

/// Transmission plus fixed delay. Infinite when a non-empty payload meets a
/// zero rate.
pub fn delay(demand: f64, rate: f64, config: &NetworkConfig) -> f64 {
    if demand <= 0.0 {
        return config.fixed_delay;
    }
    if rate <= 0.0 {
        return f64::INFINITY;
    }
    demand / rate + config.fixed_delay
}

/// Gains, per-link interference and normalized loads for one slot.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelSnapshot {
    /// `gains[[i, m]]`, vehicle `i` to gNB `m`.
    pub gains: Array2<f64>,
    /// `interference[[i, m]]` seen by vehicle `i` when served by `m`.
    pub interference: Array2<f64>,
    /// Fraction of each gNB's PRBs in use.
    pub loads: Vec<f64>,
}

impl ChannelSnapshot {
    pub fn from_gains(gains: Array2<f64>, loads: Vec<f64>, tx_power: f64) -> Self {
        let (n, m) = gains.dim();
        let mut interference = Array2::zeros((n, m));
        for i in 0..n {
            let row = gains.row(i).to_vec();
            for j in 0..m {
                interference[[i, j]] = interference_at(&row, j, tx_power);
            }
        }
        Self {
            gains,
            interference,
            loads,
        }
    }
}
