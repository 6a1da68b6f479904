//! Discrete-time vehicular network environment.
//!
//! One slot is one near-RT decision interval. Within a slot the agent's
//! relaxed action is projected onto a feasible allocation, rates and delays
//! are evaluated on the current channel, penalties are summed into the
//! reward, and only then do vehicles move and the channel refresh.

pub mod action;
pub mod channel;
pub mod observation;
pub mod topology;

use std::collections::VecDeque;

use ndarray::Array2;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

pub use action::{project_action, project_action_masked, FeasibleAllocation, RelaxedAction};
pub use channel::{channel_gain, delay, interference_at, throughput, ChannelSnapshot};
pub use observation::{Feature, FeatureLayout, ObservationVector};
pub use topology::{gnb_layout, Heading, Point, RoadGrid, Turn};

use crate::config::NetworkConfig;
use crate::error::Result;

#[derive(Debug, Clone, PartialEq)]
pub struct VehicleState {
    pub position: Point,
    /// Where the vehicle will be after one more slot, assuming it stays in the area.
    pub next_position: Point,
    pub speed: f64,
    pub heading: Heading,
    pub active: bool,
    pub urllc: bool,
    pub embb: bool,
    /// URLLC payload in bits for the current slot; zero for eMBB-only vehicles.
    pub demand: f64,
    pub prev_association: Option<usize>,
    /// PRBs held on each gNB after the last allocation.
    pub allocation: Vec<u32>,
    /// Pre-drawn turns for the next intersections, so the position one slot
    /// ahead is known exactly.
    turns: VecDeque<Turn>,
}

/// Per-vehicle link results for one slot.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VehicleSlot {
    pub active: bool,
    pub urllc: bool,
    pub embb: bool,
    pub serving: Option<usize>,
    pub prbs: u32,
    pub rate: f64,
    pub delay: f64,
    pub urllc_penalty: f64,
    pub embb_penalty: f64,
    pub urllc_violated: bool,
    pub embb_violated: bool,
    /// The vehicle left the area during this slot's movement and re-entered elsewhere.
    pub respawned: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct StepOutcome {
    pub slot: u64,
    pub observation: ObservationVector,
    pub reward: f64,
    pub allocation: FeasibleAllocation,
    pub vehicles: Vec<VehicleSlot>,
}

impl StepOutcome {
    pub fn any_violation(&self) -> bool {
        self.vehicles
            .iter()
            .any(|v| v.urllc_violated || v.embb_violated)
    }
}

#[derive(Debug, Clone)]
pub struct Environment {
    config: NetworkConfig,
    grid: RoadGrid,
    gnbs: Vec<Point>,
    vehicles: Vec<VehicleState>,
    channel: ChannelSnapshot,
    rng: ChaCha8Rng,
    slot: u64,
}

impl Environment {
    pub fn new(config: NetworkConfig, seed: u64) -> Result<Self> {
        config.validate()?;
        let grid = RoadGrid::new(config.area_side);
        let gnbs = gnb_layout(config.area_side, config.num_gnbs);
        let (n, m) = (config.num_vehicles, config.num_gnbs);
        let mut env = Self {
            channel: ChannelSnapshot::from_gains(Array2::zeros((n, m)), vec![0.0; m], config.tx_power()),
            config,
            grid,
            gnbs,
            vehicles: Vec::with_capacity(n),
            rng: ChaCha8Rng::seed_from_u64(seed),
            slot: 0,
        };
        env.reset();
        Ok(env)
    }

    /// Respawns every vehicle at a random road position and returns the
    /// initial observation. The RNG stream continues, so successive episodes differ.
    pub fn reset(&mut self) -> ObservationVector {
        let n = self.config.num_vehicles;
        self.vehicles.clear();
        for _ in 0..n {
            let (pos, heading) = self.grid.random_on_road(&mut self.rng);
            let v = self.spawn_vehicle(pos, heading);
            self.vehicles.push(v);
        }
        self.slot = 0;
        self.refresh_channel();
        self.observe()
    }

    /// Replaces the RNG stream, e.g. to give each rollout of a cloned
    /// environment its own randomness.
    pub fn reseed(&mut self, seed: u64) {
        self.rng = ChaCha8Rng::seed_from_u64(seed);
    }

    pub fn config(&self) -> &NetworkConfig {
        &self.config
    }

    pub fn grid(&self) -> &RoadGrid {
        &self.grid
    }

    pub fn gnb_positions(&self) -> &[Point] {
        &self.gnbs
    }

    pub fn vehicles(&self) -> &[VehicleState] {
        &self.vehicles
    }

    pub fn channel(&self) -> &ChannelSnapshot {
        &self.channel
    }

    pub fn slot(&self) -> u64 {
        self.slot
    }

    pub fn layout(&self) -> FeatureLayout {
        FeatureLayout::from_config(&self.config)
    }

    /// Marks a vehicle (in)active. Inactive vehicles are not served, not
    /// penalized and do not move.
    pub fn set_active(&mut self, vehicle: usize, active: bool) {
        self.vehicles[vehicle].active = active;
        self.refresh_channel();
    }

    fn turn_queue_len(&self) -> usize {
        self.grid
            .max_crossings(self.config.vehicle_speed * self.config.slot_duration)
    }

    fn spawn_vehicle(&mut self, position: Point, heading: Heading) -> VehicleState {
        let (urllc, embb) = match self.rng.gen_range(0..3) {
            0 => (true, false),
            1 => (false, true),
            _ => (true, true),
        };
        let queue_len = self.turn_queue_len();
        let turns: VecDeque<Turn> = (0..queue_len).map(|_| Turn::random(&mut self.rng)).collect();
        let mut v = VehicleState {
            position,
            next_position: position,
            speed: self.config.vehicle_speed,
            heading,
            active: true,
            urllc,
            embb,
            demand: if urllc { self.config.urllc_demand } else { 0.0 },
            prev_association: None,
            allocation: vec![0; self.config.num_gnbs],
            turns,
        };
        v.next_position = self.predict(&v);
        v
    }

    fn predict(&self, v: &VehicleState) -> Point {
        let turns: Vec<Turn> = v.turns.iter().copied().collect();
        self.grid
            .advance(v.position, v.heading, &turns, v.speed * self.config.slot_duration)
            .position
    }

    /// Moves every active vehicle one slot along the grid. Returns which
    /// vehicles left the area and were respawned at an entry point.
    pub fn advance_mobility(&mut self) -> Vec<bool> {
        let mut respawned = vec![false; self.vehicles.len()];
        let queue_len = self.turn_queue_len();
        for i in 0..self.vehicles.len() {
            if !self.vehicles[i].active {
                continue;
            }
            let v = &self.vehicles[i];
            let turns: Vec<Turn> = v.turns.iter().copied().collect();
            let mv = self
                .grid
                .advance(v.position, v.heading, &turns, v.speed * self.config.slot_duration);
            if mv.exited {
                let (pos, heading) = self.grid.random_entry(&mut self.rng);
                self.vehicles[i] = self.spawn_vehicle(pos, heading);
                respawned[i] = true;
                continue;
            }
            let v = &mut self.vehicles[i];
            v.position = mv.position;
            v.heading = mv.heading;
            v.turns.drain(..mv.turns_used.min(v.turns.len()));
            while v.turns.len() < queue_len {
                v.turns.push_back(Turn::random(&mut self.rng));
            }
            let next = self.predict(&self.vehicles[i]);
            self.vehicles[i].next_position = next;
        }
        respawned
    }

    fn refresh_channel(&mut self) {
        let (n, m) = (self.config.num_vehicles, self.config.num_gnbs);
        let mut gains = Array2::zeros((n, m));
        for (i, v) in self.vehicles.iter().enumerate() {
            for (j, g) in self.gnbs.iter().enumerate() {
                let mut gain = channel_gain(v.position, *g, self.config.pathloss_exponent);
                if self.config.shadowing_std_db > 0.0 {
                    let z: f64 = self.rng.sample(StandardNormal);
                    gain = (gain * 10f64.powf(self.config.shadowing_std_db * z / 10.0)).min(1.0);
                }
                gains[[i, j]] = gain;
            }
        }
        let capacity = self.config.prbs_per_gnb as f64;
        let loads = (0..m)
            .map(|j| {
                let used: u32 = self
                    .vehicles
                    .iter()
                    .filter(|v| v.active)
                    .map(|v| v.allocation[j])
                    .sum();
                (used as f64 / capacity).min(1.0)
            })
            .collect();
        self.channel = ChannelSnapshot::from_gains(gains, loads, self.config.tx_power());
    }

    /// Builds the normalized observation for the current slot.
    pub fn observe(&self) -> ObservationVector {
        let cfg = &self.config;
        let layout = self.layout();
        let mut s = vec![0.0; layout.dim()];
        let side = cfg.area_side;
        let cap = cfg.prbs_per_gnb as f64;
        for (i, v) in self.vehicles.iter().enumerate() {
            let mut put = |f: Feature, value: f64| s[layout.index(i, f)] = value.clamp(0.0, 1.0);
            put(Feature::X, v.position.x / side);
            put(Feature::Y, v.position.y / side);
            put(Feature::NextX, v.next_position.x / side);
            put(Feature::NextY, v.next_position.y / side);
            put(Feature::Speed, v.speed / cfg.speed_norm);
            put(Feature::Urllc, f64::from(u8::from(v.urllc)));
            put(Feature::Embb, f64::from(u8::from(v.embb)));
            put(Feature::Active, f64::from(u8::from(v.active)));
            put(
                Feature::Demand,
                if v.active { v.demand / cfg.urllc_demand } else { 0.0 },
            );
            for g in 0..cfg.num_gnbs {
                put(
                    Feature::PrevAssociation(g),
                    f64::from(u8::from(v.prev_association == Some(g))),
                );
                put(Feature::Prbs(g), v.allocation[g] as f64 / cap);
                put(
                    Feature::Gain(g),
                    observation::normalize_gain(self.channel.gains[[i, g]], cfg),
                );
            }
        }
        for g in 0..cfg.num_gnbs {
            s[layout.index(0, Feature::Load(g))] = self.channel.loads[g].clamp(0.0, 1.0);
        }
        ObservationVector(s)
    }

    /// Applies one relaxed action and advances the environment by one slot.
    pub fn step(&mut self, raw: &RelaxedAction) -> Result<StepOutcome> {
        let cfg = self.config.clone();
        let active: Vec<bool> = self.vehicles.iter().map(|v| v.active).collect();
        let alloc = project_action_masked(raw, &cfg, &active)?;

        let mut reward = 0.0;
        let mut slots = Vec::with_capacity(self.vehicles.len());
        for (i, v) in self.vehicles.iter().enumerate() {
            let mut slot = VehicleSlot {
                active: v.active,
                urllc: v.urllc,
                embb: v.embb,
                serving: alloc.serving[i],
                prbs: alloc.prbs_of(i),
                rate: 0.0,
                delay: cfg.fixed_delay,
                urllc_penalty: 0.0,
                embb_penalty: 0.0,
                urllc_violated: false,
                embb_violated: false,
                respawned: false,
            };
            if let Some(m) = alloc.serving[i] {
                let rate = throughput(
                    slot.prbs,
                    self.channel.gains[[i, m]],
                    self.channel.interference[[i, m]],
                    &cfg,
                );
                slot.rate = rate;
                slot.delay = delay(v.demand, rate, &cfg);
                if v.urllc {
                    slot.urllc_penalty = urllc_penalty(slot.delay, &cfg);
                    slot.urllc_violated = slot.delay > cfg.urllc_delay_max;
                }
                if v.embb {
                    slot.embb_penalty = embb_penalty(rate, &cfg);
                    slot.embb_violated = rate < cfg.embb_rate_min;
                }
                reward -= cfg.weight_urllc * slot.urllc_penalty + cfg.weight_embb * slot.embb_penalty;
            }
            slots.push(slot);
        }

        for (i, v) in self.vehicles.iter_mut().enumerate() {
            v.prev_association = alloc.serving[i];
            for g in 0..cfg.num_gnbs {
                v.allocation[g] = alloc.prbs[[i, g]];
            }
        }
        let respawned = self.advance_mobility();
        for (slot, r) in slots.iter_mut().zip(respawned) {
            slot.respawned = r;
        }
        self.refresh_channel();
        self.slot += 1;

        Ok(StepOutcome {
            slot: self.slot,
            observation: self.observe(),
            // avoid -0.0 in exported metrics
            reward: if reward == 0.0 { 0.0 } else { reward },
            allocation: alloc,
            vehicles: slots,
        })
    }
}

/// Normalized delay excess, capped at `penalty_cap`.
pub fn urllc_penalty(delay: f64, config: &NetworkConfig) -> f64 {
    let excess = (delay - config.urllc_delay_max).max(0.0) / config.urllc_delay_max;
    excess.min(config.penalty_cap)
}

/// Normalized rate shortfall, capped at `penalty_cap`.
pub fn embb_penalty(rate: f64, config: &NetworkConfig) -> f64 {
    let shortfall = (config.embb_rate_min - rate).max(0.0) / config.embb_rate_min;
    shortfall.min(config.penalty_cap)
}

/// Free-function form of [`Environment::observe`].
pub fn assemble_state(env: &Environment) -> ObservationVector {
    env.observe()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn env(seed: u64) -> Environment {
        Environment::new(NetworkConfig::default(), seed).unwrap()
    }

    fn full_action(n: usize, m: usize, value: f64) -> RelaxedAction {
        RelaxedAction {
            association: Array2::from_elem((n, m), value),
            fractions: Array2::from_elem((n, m), value),
        }
    }

    #[test]
    fn same_seed_same_initial_state() {
        assert_eq!(env(1).observe(), env(1).observe());
    }

    #[test]
    fn seeds_change_service_flags() {
        let flags = |e: &Environment| -> Vec<(bool, bool)> {
            e.vehicles().iter().map(|v| (v.urllc, v.embb)).collect()
        };
        let a = flags(&env(1));
        let b = flags(&env(2));
        assert_ne!(a, b);
        for (u, e) in a.into_iter().chain(b) {
            assert!(u || e);
        }
    }

    #[test]
    fn invalid_config_rejected() {
        let cfg = NetworkConfig {
            num_gnbs: 0,
            ..Default::default()
        };
        let err = Environment::new(cfg, 1).unwrap_err();
        assert_eq!(err.to_string(), "num_gnbs must be ≥ 1");
    }

    #[test]
    fn penalty_arithmetic() {
        let c = NetworkConfig::default();
        assert!((urllc_penalty(0.084_833_333_333_333_33, &c) - 4.655_555_555).abs() < 1e-6);
        assert!((embb_penalty(3.6e6, &c) - 0.82).abs() < 1e-12);
        assert_eq!(urllc_penalty(f64::INFINITY, &c), 10.0);
        assert_eq!(urllc_penalty(0.01, &c), 0.0);
        assert_eq!(embb_penalty(25e6, &c), 0.0);
    }

    #[test]
    fn observation_shape_and_range() {
        let mut e = env(4);
        let obs = e.observe();
        assert_eq!(obs.len(), 93);
        for _ in 0..50 {
            let out = e.step(&full_action(5, 3, 0.7)).unwrap();
            assert!(out.observation.iter().all(|v| (0.0..=1.0).contains(v)));
        }
    }

    #[test]
    fn inactive_vehicle_is_masked() {
        let mut e = env(5);
        e.set_active(2, false);
        let layout = e.layout();
        let obs = e.observe();
        assert_eq!(obs[layout.index(2, Feature::Active)], 0.0);
        assert_eq!(obs[layout.index(2, Feature::Demand)], 0.0);
        let out = e.step(&full_action(5, 3, 0.5)).unwrap();
        assert_eq!(out.vehicles[2].serving, None);
        assert_eq!(out.vehicles[2].urllc_penalty + out.vehicles[2].embb_penalty, 0.0);
    }

    #[test]
    fn next_position_is_realized() {
        let mut e = env(6);
        for _ in 0..300 {
            let predicted: Vec<Point> = e.vehicles().iter().map(|v| v.next_position).collect();
            let out = e.step(&full_action(5, 3, 0.5)).unwrap();
            for (i, v) in e.vehicles().iter().enumerate() {
                if !out.vehicles[i].respawned {
                    assert!(v.position.distance(&predicted[i]) < 1e-9);
                }
                assert!(e.grid().on_road(v.position));
            }
        }
    }

    #[test]
    fn reward_matches_penalties() {
        let mut e = env(7);
        for _ in 0..100 {
            let out = e.step(&full_action(5, 3, 0.3)).unwrap();
            let total: f64 = out
                .vehicles
                .iter()
                .map(|v| v.urllc_penalty + v.embb_penalty)
                .sum();
            assert!(out.reward <= 0.0);
            assert!((out.reward + total).abs() < 1e-9);
            assert_eq!(out.reward == 0.0, !out.any_violation());
        }
    }
}
