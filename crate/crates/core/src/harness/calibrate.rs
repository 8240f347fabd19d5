use std::collections::HashMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::grid::{count_received, grid_channel, trial_waveform};
use super::{
    condition_seed, Condition, ConditionGrid, ConfigPair, GridSummary, HarnessConfig, HarnessError,
    TrialRecord,
};
use crate::channel_sim::{path_loss_db, ContextLoss, LossModel, SimError};

/// Aggregate reception rates to fit, as fractions in [0, 1]. Absent targets
/// are not scored. A target of exactly 0 is a hard constraint: candidates
/// that let a single message through are rejected.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CalibrationTargets {
    #[serde(default)]
    pub same_space: Option<f64>,
    #[serde(default)]
    pub shut_door_cross_space: Option<f64>,
    #[serde(default)]
    pub open_door_leak: Option<ConfigPair<f64>>,
    #[serde(default)]
    pub bag_near_door: Option<ConfigPair<f64>>,
}

impl CalibrationTargets {
    pub fn validate(&self) -> Result<(), SimError> {
        let all = self.pairs();
        if all.is_empty() {
            return Err(SimError::Argument("no calibration targets given".into()));
        }
        for (name, v) in all {
            if !(0.0..=1.0).contains(&v) {
                return Err(SimError::Argument(format!(
                    "target {name} = {v} is not a fraction"
                )));
            }
        }
        Ok(())
    }

    fn pairs(&self) -> Vec<(&'static str, f64)> {
        let mut v = Vec::new();
        if let Some(x) = self.same_space {
            v.push(("same_space", x));
        }
        if let Some(x) = self.shut_door_cross_space {
            v.push(("shut_door_cross_space", x));
        }
        if let Some(p) = self.open_door_leak {
            v.push(("open_door_leak.mobile_beacon", p.mobile_beacon));
            v.push(("open_door_leak.mobile_receiver", p.mobile_receiver));
        }
        if let Some(p) = self.bag_near_door {
            v.push(("bag_near_door.mobile_beacon", p.mobile_beacon));
            v.push(("bag_near_door.mobile_receiver", p.mobile_receiver));
        }
        v
    }

    /// Sum of squared rate errors, or `None` if a hard zero is violated.
    pub fn objective(&self, s: &GridSummary) -> Option<f64> {
        let mut total = 0.0;
        let mut term = |target: f64, rate: Option<f64>| -> bool {
            let Some(rate) = rate else { return true };
            if target == 0.0 && rate > 0.0 {
                return false;
            }
            total += (rate - target).powi(2);
            true
        };
        let ok = self.same_space.is_none_or(|t| term(t, s.same_space.rate()))
            && self
                .shut_door_cross_space
                .is_none_or(|t| term(t, s.shut_door_cross_space.rate()))
            && self.open_door_leak.is_none_or(|p| {
                term(p.mobile_beacon, s.open_door_leak.mobile_beacon.rate())
                    && term(p.mobile_receiver, s.open_door_leak.mobile_receiver.rate())
            })
            && self.bag_near_door.is_none_or(|p| {
                term(p.mobile_beacon, s.bag_near_door.mobile_beacon.rate())
                    && term(p.mobile_receiver, s.bag_near_door.mobile_receiver.rate())
            });
        ok.then_some(total)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ContextGrid {
    #[serde(rename = "HAND")]
    pub hand: Vec<f64>,
    #[serde(rename = "POCKET")]
    pub pocket: Vec<f64>,
    #[serde(rename = "BAG")]
    pub bag: Vec<f64>,
}

impl ContextGrid {
    fn single(c: ContextLoss) -> Self {
        Self {
            hand: vec![c.hand],
            pocket: vec![c.pocket],
            bag: vec![c.bag],
        }
    }

    fn expand(&self) -> Vec<ContextLoss> {
        let mut out = Vec::new();
        for &hand in &self.hand {
            for &pocket in &self.pocket {
                for &bag in &self.bag {
                    out.push(ContextLoss { hand, pocket, bag });
                }
            }
        }
        out
    }
}

/// Candidate values for every loss-model field; the search is over their
/// Cartesian product.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SearchGrid {
    pub shut_door_loss: Vec<f64>,
    pub open_door_loss: Vec<f64>,
    pub wall_loss: Vec<f64>,
    pub tx_context_loss: ContextGrid,
    pub rx_context_loss: ContextGrid,
    pub reference_distance_ft: Vec<f64>,
}

impl SearchGrid {
    /// A grid holding exactly one model.
    pub fn single(m: &LossModel) -> Self {
        Self {
            shut_door_loss: vec![m.shut_door_loss],
            open_door_loss: vec![m.open_door_loss],
            wall_loss: vec![m.wall_loss],
            tx_context_loss: ContextGrid::single(m.tx_context_loss),
            rx_context_loss: ContextGrid::single(m.rx_context_loss),
            reference_distance_ft: vec![m.reference_distance_ft],
        }
    }

    /// Candidates in a fixed order.
    pub fn candidates(&self) -> Vec<LossModel> {
        let tx = self.tx_context_loss.expand();
        let rx = self.rx_context_loss.expand();
        let mut out = Vec::new();
        for &shut_door_loss in &self.shut_door_loss {
            for &open_door_loss in &self.open_door_loss {
                for &wall_loss in &self.wall_loss {
                    for &tx_context_loss in &tx {
                        for &rx_context_loss in &rx {
                            for &reference_distance_ft in &self.reference_distance_ft {
                                out.push(LossModel {
                                    shut_door_loss,
                                    open_door_loss,
                                    wall_loss,
                                    tx_context_loss,
                                    rx_context_loss,
                                    reference_distance_ft,
                                });
                            }
                        }
                    }
                }
            }
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Calibration {
    pub model: LossModel,
    pub objective: f64,
    pub summary: GridSummary,
    /// Valid candidates scored.
    pub candidates_evaluated: usize,
}

/// Exhaustive search for the loss model whose simulated grid aggregates best
/// match `targets`.
///
/// Both environments get the candidate model. A condition's outcome depends
/// only on its seed and its total path loss, so outcomes are cached on that
/// pair and shared between candidates. Ties keep the earliest candidate.
pub fn calibrate(
    targets: &CalibrationTargets,
    grid: &SearchGrid,
    trials: u32,
    seed: u64,
    base: &HarnessConfig,
) -> Result<Calibration, HarnessError> {
    targets.validate()?;
    let candidates: Vec<LossModel> = grid
        .candidates()
        .into_iter()
        .filter(|m| m.validate().is_ok())
        .collect();
    if candidates.is_empty() {
        return Err(SimError::Argument("search grid has no valid candidate".into()).into());
    }

    let conditions: Vec<(Condition, u64)> = ConditionGrid::default()
        .expand()
        .into_iter()
        .enumerate()
        .map(|(i, c)| (c, condition_seed(seed, i)))
        .collect();
    let channel = grid_channel(base)?;
    let waveform = trial_waveform(base, channel)?;

    // Path loss for every (candidate, condition).
    let losses: Vec<Vec<f64>> = candidates
        .par_iter()
        .map(|m| {
            conditions
                .iter()
                .map(|(c, s)| {
                    let scene = c.scene(*m, base.noise_floor_dbfs, *s)?;
                    let (tx, rx) = c.link();
                    Ok(path_loss_db(&scene, tx, rx)?)
                })
                .collect::<Result<Vec<f64>, HarnessError>>()
        })
        .collect::<Result<_, _>>()?;

    let mut keys: Vec<(usize, u64)> = losses
        .iter()
        .flat_map(|row| row.iter().enumerate().map(|(i, l)| (i, l.to_bits())))
        .collect();
    keys.sort_unstable();
    keys.dedup();

    let nominal_scenes = conditions
        .iter()
        .map(|(c, s)| c.scene(base.home_losses, base.noise_floor_dbfs, *s))
        .collect::<Result<Vec<_>, _>>()?;
    let outcomes: HashMap<(usize, u64), u32> = keys
        .par_iter()
        .map(|&(i, bits)| {
            let n = count_received(
                &nominal_scenes[i],
                &waveform,
                f64::from_bits(bits),
                trials,
                channel,
                &base.payload,
                base,
            );
            ((i, bits), n)
        })
        .collect();

    let mut best: Option<(usize, f64, GridSummary)> = None;
    for (k, row) in losses.iter().enumerate() {
        let records: Vec<TrialRecord> = conditions
            .iter()
            .zip(row)
            .enumerate()
            .map(|(i, ((c, s), l))| TrialRecord {
                condition: *c,
                sent: trials,
                received: outcomes[&(i, l.to_bits())],
                seed: *s,
            })
            .collect();
        let summary = GridSummary::from_records(&records);
        if let Some(obj) = targets.objective(&summary) {
            if best.as_ref().is_none_or(|(_, b, _)| obj < *b) {
                best = Some((k, obj, summary));
            }
        }
    }
    let (k, objective, summary) = best.ok_or_else(|| {
        HarnessError::Sim(SimError::Argument(
            "no candidate satisfies the zero-rate targets".into(),
        ))
    })?;
    Ok(Calibration {
        model: candidates[k],
        objective,
        summary,
        candidates_evaluated: candidates.len(),
    })
}
