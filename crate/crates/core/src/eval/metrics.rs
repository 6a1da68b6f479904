use serde::{Deserialize, Serialize};

use crate::env::{StepOutcome, VehicleSlot};

/// Satisfaction counts per slice, one opportunity per active (vehicle, slot)
/// that subscribes to the slice.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct QosTally {
    pub urllc_satisfied: u64,
    pub urllc_opportunities: u64,
    pub embb_satisfied: u64,
    pub embb_opportunities: u64,
}

impl QosTally {
    pub fn record_vehicle(&mut self, v: &VehicleSlot) {
        if !v.active {
            return;
        }
        let served = v.serving.is_some();
        if v.urllc {
            self.urllc_opportunities += 1;
            self.urllc_satisfied += u64::from(served && !v.urllc_violated);
        }
        if v.embb {
            self.embb_opportunities += 1;
            self.embb_satisfied += u64::from(served && !v.embb_violated);
        }
    }

    pub fn record(&mut self, outcome: &StepOutcome) {
        outcome.vehicles.iter().for_each(|v| self.record_vehicle(v));
    }

    pub fn merge(&mut self, other: &QosTally) {
        self.urllc_satisfied += other.urllc_satisfied;
        self.urllc_opportunities += other.urllc_opportunities;
        self.embb_satisfied += other.embb_satisfied;
        self.embb_opportunities += other.embb_opportunities;
    }

    /// Percentage of satisfied URLLC opportunities; `None` when there were none.
    pub fn urllc_pct(&self) -> Option<f64> {
        pct(self.urllc_satisfied, self.urllc_opportunities)
    }

    pub fn embb_pct(&self) -> Option<f64> {
        pct(self.embb_satisfied, self.embb_opportunities)
    }
}

fn pct(ok: u64, total: u64) -> Option<f64> {
    (total > 0).then(|| 100.0 * ok as f64 / total as f64)
}

/// Per-slot record of one evaluation episode.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SlotRecord {
    pub slot: u64,
    pub reward: f64,
    pub vehicles: Vec<VehicleSlot>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct EpisodeMetrics {
    pub slots: Vec<SlotRecord>,
    pub total_reward: f64,
    pub qos: QosTally,
}

impl EpisodeMetrics {
    pub fn record(&mut self, outcome: &StepOutcome) {
        self.total_reward += outcome.reward;
        self.qos.record(outcome);
        self.slots.push(SlotRecord {
            slot: outcome.slot,
            reward: outcome.reward,
            vehicles: outcome.vehicles.clone(),
        });
    }

    pub fn mean_reward(&self) -> f64 {
        if self.slots.is_empty() {
            0.0
        } else {
            self.total_reward / self.slots.len() as f64
        }
    }
}

/// `(urllc_pct, embb_pct)` pooled over every (vehicle, slot) opportunity in the series.
pub fn qos_satisfaction(series: &[EpisodeMetrics]) -> (Option<f64>, Option<f64>) {
    let mut total = QosTally::default();
    series.iter().for_each(|m| total.merge(&m.qos));
    (total.urllc_pct(), total.embb_pct())
}
