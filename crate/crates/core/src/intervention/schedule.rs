use alloc::format;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::mdp::DeterministicPolicy;

/// Random intervention timing. After control returns to the agent at step
/// `t`, the agent keeps control through step `I ~ U(t + gap_low, t + gap_high)`
/// and the expert then controls the next `k ~ U(takeover_low, takeover_high)`
/// steps. Bounds are inclusive.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "ScheduleWire", into = "ScheduleWire")]
pub struct RandomInterventionSchedule {
    gap_low: usize,
    gap_high: usize,
    takeover_low: usize,
    takeover_high: usize,
}

#[derive(Serialize, Deserialize)]
struct ScheduleWire {
    gap_low: usize,
    gap_high: usize,
    takeover_low: usize,
    takeover_high: usize,
}

impl From<RandomInterventionSchedule> for ScheduleWire {
    fn from(s: RandomInterventionSchedule) -> Self {
        Self {
            gap_low: s.gap_low,
            gap_high: s.gap_high,
            takeover_low: s.takeover_low,
            takeover_high: s.takeover_high,
        }
    }
}

impl TryFrom<ScheduleWire> for RandomInterventionSchedule {
    type Error = Error;

    fn try_from(w: ScheduleWire) -> Result<Self> {
        Self::new(w.gap_low, w.gap_high, w.takeover_low, w.takeover_high)
    }
}

impl RandomInterventionSchedule {
    pub fn new(gap_low: usize, gap_high: usize, takeover_low: usize, takeover_high: usize) -> Result<Self> {
        if gap_low == 0 || takeover_low == 0 || gap_low > gap_high || takeover_low > takeover_high {
            return Err(Error::param(
                "schedule",
                format!("need 0 < low <= high, got gap {gap_low}..{gap_high}, takeover {takeover_low}..{takeover_high}"),
            ));
        }
        Ok(Self {
            gap_low,
            gap_high,
            takeover_low,
            takeover_high,
        })
    }

    pub fn gap_range(&self) -> (usize, usize) {
        (self.gap_low, self.gap_high)
    }

    pub fn takeover_range(&self) -> (usize, usize) {
        (self.takeover_low, self.takeover_high)
    }

    pub(crate) fn draw_gap<R: Rng + ?Sized>(&self, rng: &mut R) -> usize {
        rng.gen_range(self.gap_low..=self.gap_high)
    }

    pub(crate) fn draw_takeover<R: Rng + ?Sized>(&self, rng: &mut R) -> usize {
        rng.gen_range(self.takeover_low..=self.takeover_high)
    }

    /// Renewal-reward long-run fraction of expert-controlled steps.
    pub fn asymptotic_rate(&self) -> f64 {
        let agent = (self.gap_low + self.gap_high) as f64 / 2.0 + 1.0;
        let expert = (self.takeover_low + self.takeover_high) as f64 / 2.0;
        expert / (agent + expert)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RatePreset {
    Rate30,
    Rate50,
    Rate85,
}

impl RatePreset {
    pub const ALL: [RatePreset; 3] = [RatePreset::Rate30, RatePreset::Rate50, RatePreset::Rate85];

    pub fn nominal_rate(self) -> f64 {
        match self {
            RatePreset::Rate30 => 0.30,
            RatePreset::Rate50 => 0.50,
            RatePreset::Rate85 => 0.85,
        }
    }

    pub fn schedule(self) -> RandomInterventionSchedule {
        let (a, b, c, d) = match self {
            RatePreset::Rate30 => (1, 10, 1, 5),
            RatePreset::Rate50 => (1, 5, 3, 7),
            RatePreset::Rate85 => (1, 2, 12, 16),
        };
        RandomInterventionSchedule {
            gap_low: a,
            gap_high: b,
            takeover_low: c,
            takeover_high: d,
        }
    }
}

/// Random-schedule expert acting with `pi_exp` during takeovers.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RandomExpert {
    pub pi_exp: DeterministicPolicy,
    pub schedule: RandomInterventionSchedule,
}

impl RandomExpert {
    pub fn new(pi_exp: DeterministicPolicy, schedule: RandomInterventionSchedule) -> Self {
        Self { pi_exp, schedule }
    }
}
