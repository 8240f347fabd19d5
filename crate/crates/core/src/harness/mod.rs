//! Evaluation harness: the condition grid, the grid runner and CSV output,
//! loss-model calibration, and scripted end-to-end scenarios.

mod calibrate;
mod grid;
mod scenario;

pub use calibrate::{calibrate, Calibration, CalibrationTargets, ContextGrid, SearchGrid};
pub use grid::{
    condition_seed, run_condition, run_grid, write_csv, Condition, ConditionGrid, ConfigPair,
    Environment, FixedLocation, GridConfig, GridReport, GridSummary, MobileContext, Rate,
    TrialRecord, UserLocation, CSV_HEADER, FIXED_ID, INSIDE, MOBILE_ID, OUTSIDE,
};
pub use scenario::{
    parse_script, run_scenario_files, scenario_play, Action, ScenarioLogs, ScenarioScene,
    ScriptStep, COMMANDS_FILE, TRANSITIONS_FILE,
};

use serde::{Deserialize, Serialize};

use crate::channel_sim::{LossModel, SimError};
use crate::modem::{HexPayload, ModemError, ModemParams};
use crate::protocol::{ProtocolError, ProtocolTimers};
use crate::services::SinkError;

#[derive(Debug, thiserror::Error)]
pub enum HarnessError {
    #[error("constraint violated: {0}")]
    Constraint(String),

    #[error("parse error: {0}")]
    Parse(String),

    #[error("i/o: {0}")]
    Io(String),

    #[error(transparent)]
    Modem(#[from] ModemError),

    #[error(transparent)]
    Sim(#[from] SimError),

    #[error(transparent)]
    Protocol(#[from] ProtocolError),

    #[error(transparent)]
    Sink(#[from] SinkError),
}

impl HarnessError {
    /// Errors caused by bad input rather than the environment.
    pub fn is_user_error(&self) -> bool {
        matches!(
            self,
            HarnessError::Constraint(_)
                | HarnessError::Parse(_)
                | HarnessError::Sim(_)
                | HarnessError::Modem(_)
                | HarnessError::Protocol(_)
        )
    }
}

impl From<csv::Error> for HarnessError {
    fn from(e: csv::Error) -> Self {
        HarnessError::Io(e.to_string())
    }
}

impl From<std::io::Error> for HarnessError {
    fn from(e: std::io::Error) -> Self {
        HarnessError::Io(e.to_string())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct HarnessConfig {
    pub modem: ModemParams,
    pub home_losses: LossModel,
    pub office_losses: LossModel,
    pub noise_floor_dbfs: f64,
    /// Transmit level as a fraction of full scale.
    pub amplitude: f64,
    pub payload: HexPayload,
    pub timers: ProtocolTimers,
    /// Silent symbols before and after each trial message.
    pub guard_symbols: usize,
}

impl Default for HarnessConfig {
    fn default() -> Self {
        Self::with_losses(LossModel::shipped())
    }
}

impl HarnessConfig {
    /// Default settings with one loss model for both environments.
    pub fn with_losses(losses: LossModel) -> Self {
        Self {
            modem: ModemParams::default(),
            home_losses: losses,
            office_losses: losses,
            noise_floor_dbfs: -55.0,
            amplitude: 0.7,
            payload: "aa".parse().expect("literal payload"),
            timers: ProtocolTimers::default(),
            guard_symbols: 2,
        }
    }

    pub fn losses_for(&self, env: Environment) -> LossModel {
        match env {
            Environment::Home => self.home_losses,
            Environment::Office => self.office_losses,
        }
    }
}
