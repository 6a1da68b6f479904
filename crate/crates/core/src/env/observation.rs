//! Flattened state vector and its feature ordering.
//!
//! Per vehicle `i` (in order): `x, y, D, s_urllc, s_embb, a`, then `q_prev`
//! for every gNB, `B / W` for every gNB, normalized gain for every gNB, then
//! `x_next, y_next, v`. The per-gNB loads `L_1..L_M` close the vector, giving
//! `N * (9 + 3M) + M` entries.
//!
//! Normalization uses fixed constants only: coordinates by the area side,
//! demand by the URLLC payload, PRBs by the gNB capacity, speed by
//! `speed_norm`, and gains on a log scale between the gain at the area
//! diagonal (0) and the reference-distance gain (1).

use serde::{Deserialize, Serialize};

use crate::config::NetworkConfig;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ObservationVector(pub Vec<f64>);

impl ObservationVector {
    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

impl std::ops::Deref for ObservationVector {
    type Target = [f64];
    fn deref(&self) -> &[f64] {
        &self.0
    }
}

/// Feature kinds in per-vehicle order.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Feature {
    X,
    Y,
    Demand,
    Urllc,
    Embb,
    Active,
    PrevAssociation(usize),
    Prbs(usize),
    Gain(usize),
    NextX,
    NextY,
    Speed,
    Load(usize),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct FeatureLayout {
    pub num_vehicles: usize,
    pub num_gnbs: usize,
}

impl FeatureLayout {
    pub fn new(num_vehicles: usize, num_gnbs: usize) -> Self {
        Self {
            num_vehicles,
            num_gnbs,
        }
    }

    pub fn from_config(config: &NetworkConfig) -> Self {
        Self::new(config.num_vehicles, config.num_gnbs)
    }

    pub fn per_vehicle(&self) -> usize {
        9 + 3 * self.num_gnbs
    }

    pub fn dim(&self) -> usize {
        self.num_vehicles * self.per_vehicle() + self.num_gnbs
    }

    /// Flat index of a vehicle feature, or of a load when `feature` is `Load`.
    pub fn index(&self, vehicle: usize, feature: Feature) -> usize {
        let m = self.num_gnbs;
        let offset = match feature {
            Feature::X => 0,
            Feature::Y => 1,
            Feature::Demand => 2,
            Feature::Urllc => 3,
            Feature::Embb => 4,
            Feature::Active => 5,
            Feature::PrevAssociation(g) => 6 + g,
            Feature::Prbs(g) => 6 + m + g,
            Feature::Gain(g) => 6 + 2 * m + g,
            Feature::NextX => 6 + 3 * m,
            Feature::NextY => 7 + 3 * m,
            Feature::Speed => 8 + 3 * m,
            Feature::Load(g) => return self.num_vehicles * self.per_vehicle() + g,
        };
        vehicle * self.per_vehicle() + offset
    }

    /// Inverse of [`FeatureLayout::index`]: `(vehicle, feature)`; loads report vehicle `None`.
    pub fn feature_at(&self, index: usize) -> (Option<usize>, Feature) {
        let m = self.num_gnbs;
        let block = self.num_vehicles * self.per_vehicle();
        if index >= block {
            return (None, Feature::Load(index - block));
        }
        let vehicle = index / self.per_vehicle();
        let k = index % self.per_vehicle();
        let feature = match k {
            0 => Feature::X,
            1 => Feature::Y,
            2 => Feature::Demand,
            3 => Feature::Urllc,
            4 => Feature::Embb,
            5 => Feature::Active,
            k if k < 6 + m => Feature::PrevAssociation(k - 6),
            k if k < 6 + 2 * m => Feature::Prbs(k - 6 - m),
            k if k < 6 + 3 * m => Feature::Gain(k - 6 - 2 * m),
            k if k == 6 + 3 * m => Feature::NextX,
            k if k == 7 + 3 * m => Feature::NextY,
            _ => Feature::Speed,
        };
        (Some(vehicle), feature)
    }

    /// Human-readable label, e.g. `v2.gain[1]` or `gnb0.load`.
    pub fn name(&self, index: usize) -> String {
        match self.feature_at(index) {
            (None, Feature::Load(g)) => format!("gnb{g}.load"),
            (Some(v), f) => {
                let suffix = match f {
                    Feature::X => "x".to_string(),
                    Feature::Y => "y".to_string(),
                    Feature::Demand => "demand".to_string(),
                    Feature::Urllc => "s_urllc".to_string(),
                    Feature::Embb => "s_embb".to_string(),
                    Feature::Active => "active".to_string(),
                    Feature::PrevAssociation(g) => format!("q_prev[{g}]"),
                    Feature::Prbs(g) => format!("prb[{g}]"),
                    Feature::Gain(g) => format!("gain[{g}]"),
                    Feature::NextX => "x_next".to_string(),
                    Feature::NextY => "y_next".to_string(),
                    Feature::Speed => "speed".to_string(),
                    Feature::Load(g) => format!("load[{g}]"),
                };
                format!("v{v}.{suffix}")
            }
            (None, _) => unreachable!("only loads have no vehicle"),
        }
    }

    pub fn names(&self) -> Vec<String> {
        (0..self.dim()).map(|i| self.name(i)).collect()
    }
}

/// Maps a linear gain onto `[0, 1]` on a log scale: 1 at the reference
/// distance, 0 at the area diagonal.
pub fn normalize_gain(gain: f64, config: &NetworkConfig) -> f64 {
    let diagonal = config.area_side * std::f64::consts::SQRT_2;
    let floor_log = -config.pathloss_exponent * diagonal.max(1.0).log10();
    if floor_log >= 0.0 {
        return 1.0;
    }
    (1.0 - gain.log10() / floor_log).clamp(0.0, 1.0)
}
