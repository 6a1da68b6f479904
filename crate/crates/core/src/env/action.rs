//! Relaxed agent actions and their projection onto feasible allocations.

use ndarray::Array2;

use crate::config::NetworkConfig;
use crate::error::{Error, Result};

/// Raw agent output: association scores and PRB fractions, both `N x M` in `[0, 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct RelaxedAction {
    pub association: Array2<f64>,
    pub fractions: Array2<f64>,
}

impl RelaxedAction {
    pub fn zeros(num_vehicles: usize, num_gnbs: usize) -> Self {
        Self {
            association: Array2::zeros((num_vehicles, num_gnbs)),
            fractions: Array2::zeros((num_vehicles, num_gnbs)),
        }
    }

    /// Splits a flat vector laid out as `[q (row-major N x M), b (row-major N x M)]`.
    pub fn from_flat(flat: &[f64], num_vehicles: usize, num_gnbs: usize) -> Result<Self> {
        let half = num_vehicles * num_gnbs;
        if flat.len() != 2 * half {
            return Err(Error::DimensionMismatch {
                context: "relaxed action",
                expected: 2 * half,
                actual: flat.len(),
            });
        }
        let shape = (num_vehicles, num_gnbs);
        Ok(Self {
            association: Array2::from_shape_vec(shape, flat[..half].to_vec()).expect("shape checked"),
            fractions: Array2::from_shape_vec(shape, flat[half..].to_vec()).expect("shape checked"),
        })
    }

    pub fn to_flat(&self) -> Vec<f64> {
        self.association.iter().chain(self.fractions.iter()).copied().collect()
    }

    pub fn dim(&self) -> (usize, usize) {
        self.association.dim()
    }
}

/// Binary association plus integer PRB counts satisfying the capacity,
/// single-association and linkage constraints.
#[derive(Debug, Clone, PartialEq)]
pub struct FeasibleAllocation {
    /// Serving gNB per vehicle; `None` for inactive vehicles.
    pub serving: Vec<Option<usize>>,
    pub prbs: Array2<u32>,
}

impl FeasibleAllocation {
    pub fn empty(num_vehicles: usize, num_gnbs: usize) -> Self {
        Self {
            serving: vec![None; num_vehicles],
            prbs: Array2::zeros((num_vehicles, num_gnbs)),
        }
    }

    /// `q_{i,m}` as 0/1.
    pub fn association(&self, vehicle: usize, gnb: usize) -> u8 {
        u8::from(self.serving[vehicle] == Some(gnb))
    }

    pub fn prbs_of(&self, vehicle: usize) -> u32 {
        self.serving[vehicle].map_or(0, |m| self.prbs[[vehicle, m]])
    }

    pub fn used_prbs(&self, gnb: usize) -> u32 {
        self.prbs.column(gnb).sum()
    }

    /// Checks capacity, exactly-one association for active vehicles and the
    /// PRB/association linkage. Returns the first violated rule.
    pub fn check(&self, capacity: u32, active: &[bool]) -> std::result::Result<(), String> {
        let (n, m) = self.prbs.dim();
        for g in 0..m {
            let used: u64 = self.prbs.column(g).iter().map(|&b| b as u64).sum();
            if used > capacity as u64 {
                return Err(format!("gNB {g} uses {used} PRBs > {capacity}"));
            }
        }
        for i in 0..n {
            let count: u32 = (0..m).map(|g| self.association(i, g) as u32).sum();
            if active[i] && count != 1 {
                return Err(format!("vehicle {i} has {count} associations"));
            }
            for g in 0..m {
                if self.prbs[[i, g]] > 0 && self.association(i, g) == 0 {
                    return Err(format!("vehicle {i} holds PRBs on unassociated gNB {g}"));
                }
            }
        }
        Ok(())
    }
}

/// Index of the largest entry; ties go to the lowest index.
fn argmax(row: impl Iterator<Item = f64>) -> usize {
    let mut best = 0;
    let mut best_val = f64::NEG_INFINITY;
    for (j, v) in row.enumerate() {
        if v > best_val {
            best = j;
            best_val = v;
        }
    }
    best
}

/// Projects every vehicle as active.
pub fn project_action(raw: &RelaxedAction, config: &NetworkConfig) -> Result<FeasibleAllocation> {
    let (n, _) = raw.dim();
    project_action_masked(raw, config, &vec![true; n])
}

/// Argmax association per active vehicle, `round(b * W)` PRB requests on the
/// chosen gNB, then proportional scale-down with flooring on any gNB whose
/// requests exceed its capacity.
pub fn project_action_masked(
    raw: &RelaxedAction,
    config: &NetworkConfig,
    active: &[bool],
) -> Result<FeasibleAllocation> {
    let (n, m) = raw.dim();
    if raw.fractions.dim() != (n, m) {
        return Err(Error::DimensionMismatch {
            context: "resource fractions",
            expected: n * m,
            actual: raw.fractions.len(),
        });
    }
    if n != config.num_vehicles || m != config.num_gnbs {
        return Err(Error::DimensionMismatch {
            context: "relaxed action rows x cols",
            expected: config.num_vehicles * config.num_gnbs,
            actual: n * m,
        });
    }
    if active.len() != n {
        return Err(Error::DimensionMismatch {
            context: "activity mask",
            expected: n,
            actual: active.len(),
        });
    }
    for ((i, j), v) in raw.association.indexed_iter() {
        if v.is_nan() {
            return Err(Error::NanAction {
                field: "association",
                vehicle: i,
                gnb: j,
            });
        }
    }
    for ((i, j), v) in raw.fractions.indexed_iter() {
        if v.is_nan() {
            return Err(Error::NanAction {
                field: "fractions",
                vehicle: i,
                gnb: j,
            });
        }
    }

    let capacity = config.prbs_per_gnb;
    let mut alloc = FeasibleAllocation::empty(n, m);
    let mut requested = vec![0u64; m];
    for i in (0..n).filter(|&i| active[i]) {
        let g = argmax(raw.association.row(i).iter().copied());
        alloc.serving[i] = Some(g);
        let frac = raw.fractions[[i, g]].clamp(0.0, 1.0);
        let r = (frac * capacity as f64).round() as u32;
        alloc.prbs[[i, g]] = r;
        requested[g] += r as u64;
    }
    for (g, &total) in requested.iter().enumerate() {
        if total > capacity as u64 {
            for i in 0..n {
                let r = alloc.prbs[[i, g]] as u64;
                if r > 0 {
                    alloc.prbs[[i, g]] = (r * capacity as u64 / total) as u32;
                }
            }
        }
    }
    Ok(alloc)
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    fn single_gnb_config(n: usize) -> NetworkConfig {
        NetworkConfig {
            num_vehicles: n,
            num_gnbs: 3,
            ..Default::default()
        }
    }

    #[test]
    fn argmax_association() {
        let cfg = single_gnb_config(1);
        let raw = RelaxedAction {
            association: array![[0.2, 0.5, 0.3]],
            fractions: array![[0.0, 0.5, 0.0]],
        };
        let a = project_action(&raw, &cfg).unwrap();
        assert_eq!(a.serving, vec![Some(1)]);
        assert_eq!(a.prbs[[0, 1]], 137);
    }

    #[test]
    fn ties_go_to_lowest_index() {
        let cfg = single_gnb_config(1);
        let raw = RelaxedAction {
            association: array![[0.4, 0.4, 0.2]],
            fractions: array![[0.1, 0.1, 0.1]],
        };
        assert_eq!(project_action(&raw, &cfg).unwrap().serving, vec![Some(0)]);
    }

    #[test]
    fn over_subscription_is_scaled_and_floored() {
        let cfg = single_gnb_config(2);
        // round(f * 273) = 200 and 150
        let f1 = 200.0 / 273.0;
        let f2 = 150.0 / 273.0;
        let raw = RelaxedAction {
            association: array![[1.0, 0.0, 0.0], [1.0, 0.0, 0.0]],
            fractions: array![[f1, 0.0, 0.0], [f2, 0.0, 0.0]],
        };
        let a = project_action(&raw, &cfg).unwrap();
        assert_eq!(a.prbs[[0, 0]], 156);
        assert_eq!(a.prbs[[1, 0]], 117);
        assert_eq!(a.used_prbs(0), 273);
        a.check(273, &[true, true]).unwrap();
    }

    #[test]
    fn nan_rejected() {
        let cfg = single_gnb_config(1);
        let raw = RelaxedAction {
            association: array![[0.2, f64::NAN, 0.3]],
            fractions: array![[0.0, 0.5, 0.0]],
        };
        assert!(matches!(
            project_action(&raw, &cfg),
            Err(Error::NanAction { vehicle: 0, gnb: 1, .. })
        ));
    }

    #[test]
    fn inactive_vehicles_get_nothing() {
        let cfg = single_gnb_config(2);
        let raw = RelaxedAction {
            association: array![[1.0, 0.0, 0.0], [0.0, 1.0, 0.0]],
            fractions: array![[1.0, 1.0, 1.0], [1.0, 1.0, 1.0]],
        };
        let a = project_action_masked(&raw, &cfg, &[true, false]).unwrap();
        assert_eq!(a.serving, vec![Some(0), None]);
        assert_eq!(a.prbs.row(1).sum(), 0);
        a.check(273, &[true, false]).unwrap();
    }

    #[test]
    fn flat_layout_round_trip() {
        let flat: Vec<f64> = (0..12).map(|v| v as f64 / 12.0).collect();
        let a = RelaxedAction::from_flat(&flat, 2, 3).unwrap();
        assert_eq!(a.association[[1, 0]], 3.0 / 12.0);
        assert_eq!(a.fractions[[0, 0]], 6.0 / 12.0);
        assert_eq!(a.to_flat(), flat);
        assert!(RelaxedAction::from_flat(&flat, 3, 3).is_err());
    }
}
