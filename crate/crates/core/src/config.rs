//! Physical and QoS constants of the simulated network.
//!
//! Defaults reproduce the reference scenario: a 1 km square with three gNBs,
//! five vehicles, 273 PRBs of 360 kHz per gNB and 50 dBm transmit power.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct NetworkConfig {
    /// Side length of the square service area in meters.
    pub area_side: f64,
    pub num_gnbs: usize,
    pub num_vehicles: usize,
    /// PRB capacity `W_m`, identical for every gNB.
    pub prbs_per_gnb: u32,
    pub tx_power_dbm: f64,
    /// Receiver noise power in watts.
    pub noise_power: f64,
    /// Bandwidth of one PRB in Hz.
    pub prb_bandwidth: f64,
    /// URLLC delay bound `T_th` in seconds.
    pub urllc_delay_max: f64,
    /// eMBB rate floor `R_th` in bits/s.
    pub embb_rate_min: f64,
    /// Vehicle speed in m/s.
    pub vehicle_speed: f64,
    pub pathloss_exponent: f64,
    /// URLLC payload per slot in bits.
    pub urllc_demand: f64,
    /// Processing plus scheduling delay in seconds.
    pub fixed_delay: f64,
    /// Decision interval in seconds.
    pub slot_duration: f64,
    pub weight_urllc: f64,
    pub weight_embb: f64,
    /// Upper bound on a single vehicle's per-slice penalty. Keeps the reward
    /// finite when a vehicle gets no PRBs and its delay is unbounded.
    pub penalty_cap: f64,
    /// Log-normal shadowing standard deviation in dB; 0 disables it.
    pub shadowing_std_db: f64,
    /// Speed that maps to 1.0 in the observation vector.
    pub speed_norm: f64,
}

impl Default for NetworkConfig {
    fn default() -> Self {
        Self {
            area_side: 1000.0,
            num_gnbs: 3,
            num_vehicles: 5,
            prbs_per_gnb: 273,
            tx_power_dbm: 50.0,
            noise_power: 1.4e-15,
            prb_bandwidth: 3.6e5,
            urllc_delay_max: 0.015,
            embb_rate_min: 20e6,
            vehicle_speed: 15.0,
            pathloss_exponent: 3.5,
            urllc_demand: 3e5,
            fixed_delay: 0.0015,
            slot_duration: 1.0,
            weight_urllc: 1.0,
            weight_embb: 1.0,
            penalty_cap: 10.0,
            shadowing_std_db: 0.0,
            speed_norm: 30.0,
        }
    }
}

impl NetworkConfig {
    /// Transmit power in watts.
    pub fn tx_power(&self) -> f64 {
        10f64.powf(self.tx_power_dbm / 10.0) * 1e-3
    }

    /// Observation-vector length for this vehicle/gNB count.
    pub fn observation_dim(&self) -> usize {
        self.num_vehicles * (9 + 3 * self.num_gnbs) + self.num_gnbs
    }

    /// Length of a flattened action: association scores then PRB fractions.
    pub fn action_dim(&self) -> usize {
        2 * self.num_vehicles * self.num_gnbs
    }

    pub fn validate(&self) -> Result<()> {
        if self.num_gnbs < 1 {
            return Err(Error::config("num_gnbs", "must be ≥ 1"));
        }
        if self.num_vehicles < 1 {
            return Err(Error::config("num_vehicles", "must be ≥ 1"));
        }
        if self.prbs_per_gnb < 1 {
            return Err(Error::config("prbs_per_gnb", "must be ≥ 1"));
        }
        let positive = [
            ("area_side", self.area_side),
            ("noise_power", self.noise_power),
            ("prb_bandwidth", self.prb_bandwidth),
            ("urllc_delay_max", self.urllc_delay_max),
            ("embb_rate_min", self.embb_rate_min),
            ("vehicle_speed", self.vehicle_speed),
            ("pathloss_exponent", self.pathloss_exponent),
            ("urllc_demand", self.urllc_demand),
            ("fixed_delay", self.fixed_delay),
            ("slot_duration", self.slot_duration),
            ("penalty_cap", self.penalty_cap),
            ("speed_norm", self.speed_norm),
        ];
        for (field, value) in positive {
            if !(value.is_finite() && value > 0.0) {
                return Err(Error::config(field, format!("must be finite and > 0 (got {value})")));
            }
        }
        if !self.tx_power_dbm.is_finite() {
            return Err(Error::config("tx_power_dbm", "must be finite"));
        }
        let non_negative = [
            ("weight_urllc", self.weight_urllc),
            ("weight_embb", self.weight_embb),
            ("shadowing_std_db", self.shadowing_std_db),
        ];
        for (field, value) in non_negative {
            if !(value.is_finite() && value >= 0.0) {
                return Err(Error::config(field, format!("must be finite and ≥ 0 (got {value})")));
            }
        }
        if self.urllc_delay_max <= self.fixed_delay {
            return Err(Error::config(
                "urllc_delay_max",
                format!(
                    "must exceed fixed_delay ({} s), otherwise every URLLC slot violates",
                    self.fixed_delay
                ),
            ));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_are_valid() {
        let cfg = NetworkConfig::default();
        cfg.validate().unwrap();
        assert_eq!(cfg.observation_dim(), 93);
        assert_eq!(cfg.action_dim(), 30);
        assert!((cfg.tx_power() - 100.0).abs() < 1e-9);
    }

    #[test]
    fn zero_gnbs_rejected_with_field_name() {
        let cfg = NetworkConfig {
            num_gnbs: 0,
            ..Default::default()
        };
        let err = cfg.validate().unwrap_err().to_string();
        assert_eq!(err, "num_gnbs must be ≥ 1");
    }

    #[test]
    fn delay_bound_must_exceed_fixed_delay() {
        let cfg = NetworkConfig {
            urllc_delay_max: 0.001,
            ..Default::default()
        };
        assert!(cfg.validate().unwrap_err().to_string().starts_with("urllc_delay_max"));
    }

    #[test]
    fn negative_noise_rejected() {
        let cfg = NetworkConfig {
            noise_power: -1.0,
            ..Default::default()
        };
        assert!(cfg.validate().unwrap_err().to_string().starts_with("noise_power"));
    }
}
