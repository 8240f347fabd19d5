use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use super::SimError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum DoorState {
    Shut,
    Open,
}

/// How a device is carried. `Fixed` is reserved for mounted devices.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum CarryContext {
    Hand,
    Pocket,
    Bag,
    Fixed,
}

/// Attenuation per carry context, in dB. `Fixed` devices are unattenuated.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ContextLoss {
    #[serde(rename = "HAND")]
    pub hand: f64,
    #[serde(rename = "POCKET")]
    pub pocket: f64,
    #[serde(rename = "BAG")]
    pub bag: f64,
}

impl ContextLoss {
    pub fn get(&self, context: CarryContext) -> f64 {
        match context {
            CarryContext::Hand => self.hand,
            CarryContext::Pocket => self.pocket,
            CarryContext::Bag => self.bag,
            CarryContext::Fixed => 0.0,
        }
    }

    fn values(&self) -> [f64; 3] {
        [self.hand, self.pocket, self.bag]
    }
}

/// Acoustic attenuation constants, in dB.
///
/// `Default` is the shipped calibrated model (see `scenarios/losses.json`).
/// [`LossModel::nominal`] holds the uncalibrated starting point.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LossModel {
    pub shut_door_loss: f64,
    pub open_door_loss: f64,
    /// Occlusion through solid wall. The door path never uses it.
    pub wall_loss: f64,
    pub tx_context_loss: ContextLoss,
    pub rx_context_loss: ContextLoss,
    pub reference_distance_ft: f64,
}

impl LossModel {
    pub fn nominal() -> Self {
        Self {
            shut_door_loss: 60.0,
            open_door_loss: 14.0,
            wall_loss: 70.0,
            tx_context_loss: ContextLoss {
                hand: 0.0,
                pocket: 3.0,
                bag: 6.0,
            },
            rx_context_loss: ContextLoss {
                hand: 0.0,
                pocket: 6.0,
                bag: 20.0,
            },
            reference_distance_ft: 1.0,
        }
    }

    /// The calibrated model shipped in the scenario pack.
    pub fn shipped() -> Self {
        serde_json::from_str(SHIPPED_LOSSES).expect("shipped loss model parses")
    }

    pub fn validate(&self) -> Result<(), SimError> {
        let mut all = vec![self.shut_door_loss, self.open_door_loss, self.wall_loss];
        all.extend(self.tx_context_loss.values());
        all.extend(self.rx_context_loss.values());
        if all.iter().any(|v| !(v.is_finite() && *v >= 0.0)) {
            return Err(SimError::InvalidScene(
                "losses must be finite and >= 0".into(),
            ));
        }
        if !(self.reference_distance_ft.is_finite() && self.reference_distance_ft > 0.0) {
            return Err(SimError::InvalidScene(
                "reference_distance_ft must be positive".into(),
            ));
        }
        if self.rx_context_loss.bag <= self.tx_context_loss.bag {
            return Err(SimError::InvalidScene(
                "rx_context_loss.BAG must exceed tx_context_loss.BAG".into(),
            ));
        }
        Ok(())
    }
}

impl Default for LossModel {
    fn default() -> Self {
        Self::shipped()
    }
}

pub(crate) const SHIPPED_LOSSES: &str = include_str!("../../scenarios/losses.json");

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RfModel {
    pub rf_range_ft: f64,
}

impl Default for RfModel {
    fn default() -> Self {
        Self { rf_range_ft: 50.0 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DevicePlacement {
    pub id: String,
    pub space: String,
    pub distance_ft: f64,
    pub context: CarryContext,
}

impl DevicePlacement {
    pub fn new(
        id: impl Into<String>,
        space: impl Into<String>,
        distance_ft: f64,
        context: CarryContext,
    ) -> Self {
        Self {
            id: id.into(),
            space: space.into(),
            distance_ft,
            context,
        }
    }
}

fn default_rf_range() -> f64 {
    RfModel::default().rf_range_ft
}

fn default_noise_floor() -> f64 {
    -55.0
}

/// Two spaces separated by one door, plus the devices placed in them.
///
/// Scenes are immutable; the `with_*` methods return modified copies.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AcousticScene {
    spaces: [String; 2],
    door_state: DoorState,
    devices: Vec<DevicePlacement>,
    #[serde(default)]
    losses: LossModel,
    /// Noise power per 100 Hz band, relative to a full-scale sine.
    #[serde(default = "default_noise_floor")]
    noise_floor_dbfs: f64,
    #[serde(default)]
    seed: u64,
    #[serde(default = "default_rf_range")]
    rf_range_ft: f64,
}

impl AcousticScene {
    pub fn new(
        spaces: [String; 2],
        door_state: DoorState,
        devices: Vec<DevicePlacement>,
        losses: LossModel,
        noise_floor_dbfs: f64,
        seed: u64,
    ) -> Result<Self, SimError> {
        let scene = Self {
            spaces,
            door_state,
            devices,
            losses,
            noise_floor_dbfs,
            seed,
            rf_range_ft: default_rf_range(),
        };
        scene.validate()?;
        Ok(scene)
    }

    pub fn from_json(text: &str) -> Result<Self, SimError> {
        let scene: Self = serde_json::from_str(text).map_err(|e| SimError::Parse(e.to_string()))?;
        scene.validate()?;
        Ok(scene)
    }

    pub fn validate(&self) -> Result<(), SimError> {
        if self.spaces[0] == self.spaces[1] {
            return Err(SimError::InvalidScene("the two spaces must differ".into()));
        }
        let mut ids = BTreeSet::new();
        for d in &self.devices {
            if !ids.insert(d.id.as_str()) {
                return Err(SimError::InvalidScene(format!(
                    "duplicate device id {:?}",
                    d.id
                )));
            }
            if !self.spaces.contains(&d.space) {
                return Err(SimError::InvalidScene(format!(
                    "device {:?} is in unknown space {:?}",
                    d.id, d.space
                )));
            }
            if !(d.distance_ft.is_finite() && d.distance_ft >= 0.0) {
                return Err(SimError::InvalidScene(format!(
                    "device {:?} has negative or non-finite distance",
                    d.id
                )));
            }
        }
        self.losses.validate()?;
        if !self.noise_floor_dbfs.is_finite() {
            return Err(SimError::InvalidScene(
                "noise_floor_dbfs must be finite".into(),
            ));
        }
        if !(self.rf_range_ft.is_finite() && self.rf_range_ft > 0.0) {
            return Err(SimError::InvalidScene(
                "rf_range_ft must be positive".into(),
            ));
        }
        Ok(())
    }

    pub fn spaces(&self) -> &[String; 2] {
        &self.spaces
    }

    pub fn door_state(&self) -> DoorState {
        self.door_state
    }

    pub fn devices(&self) -> &[DevicePlacement] {
        &self.devices
    }

    pub fn losses(&self) -> &LossModel {
        &self.losses
    }

    pub fn noise_floor_dbfs(&self) -> f64 {
        self.noise_floor_dbfs
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn rf(&self) -> RfModel {
        RfModel {
            rf_range_ft: self.rf_range_ft,
        }
    }

    pub fn device(&self, id: &str) -> Result<&DevicePlacement, SimError> {
        self.devices
            .iter()
            .find(|d| d.id == id)
            .ok_or_else(|| SimError::UnknownDevice(id.to_string()))
    }

    pub fn with_door(&self, door_state: DoorState) -> Self {
        Self {
            door_state,
            ..self.clone()
        }
    }

    pub fn with_losses(&self, losses: LossModel) -> Result<Self, SimError> {
        losses.validate()?;
        Ok(Self {
            losses,
            ..self.clone()
        })
    }

    pub fn with_rf(&self, rf: RfModel) -> Result<Self, SimError> {
        let scene = Self {
            rf_range_ft: rf.rf_range_ft,
            ..self.clone()
        };
        scene.validate()?;
        Ok(scene)
    }

    pub fn with_seed(&self, seed: u64) -> Self {
        Self {
            seed,
            ..self.clone()
        }
    }

    pub fn with_noise_floor(&self, noise_floor_dbfs: f64) -> Result<Self, SimError> {
        let scene = Self {
            noise_floor_dbfs,
            ..self.clone()
        };
        scene.validate()?;
        Ok(scene)
    }

    /// Replaces the device with the same id.
    pub fn with_device(&self, placement: DevicePlacement) -> Result<Self, SimError> {
        self.device(&placement.id)?;
        let devices = self
            .devices
            .iter()
            .map(|d| {
                if d.id == placement.id {
                    placement.clone()
                } else {
                    d.clone()
                }
            })
            .collect();
        let scene = Self {
            devices,
            ..self.clone()
        };
        scene.validate()?;
        Ok(scene)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn spaces() -> [String; 2] {
        ["inside".to_string(), "outside".to_string()]
    }

    #[test]
    fn shipped_model_is_valid() {
        LossModel::shipped().validate().unwrap();
        LossModel::nominal().validate().unwrap();
        assert_eq!(LossModel::default(), LossModel::shipped());
    }

    #[test]
    fn bag_asymmetry_enforced() {
        let mut m = LossModel::nominal();
        m.rx_context_loss.bag = m.tx_context_loss.bag;
        assert!(m.validate().is_err());
    }

    #[test]
    fn rejects_bad_devices() {
        let dup = vec![
            DevicePlacement::new("a", "inside", 0.0, CarryContext::Fixed),
            DevicePlacement::new("a", "outside", 0.0, CarryContext::Hand),
        ];
        assert!(AcousticScene::new(
            spaces(),
            DoorState::Shut,
            dup,
            LossModel::nominal(),
            -55.0,
            1
        )
        .is_err());
        let unknown = vec![DevicePlacement::new("a", "attic", 0.0, CarryContext::Fixed)];
        assert!(AcousticScene::new(
            spaces(),
            DoorState::Shut,
            unknown,
            LossModel::nominal(),
            -55.0,
            1
        )
        .is_err());
        let negative = vec![DevicePlacement::new(
            "a",
            "inside",
            -1.0,
            CarryContext::Fixed,
        )];
        assert!(AcousticScene::new(
            spaces(),
            DoorState::Shut,
            negative,
            LossModel::nominal(),
            -55.0,
            1
        )
        .is_err());
    }

    #[test]
    fn parses_scene_json() {
        let text = r#"{
            "spaces": ["inside", "outside"],
            "door_state": "OPEN",
            "devices": [
                {"id": "lock", "space": "inside", "distance_ft": 0, "context": "FIXED"},
                {"id": "phone", "space": "outside", "distance_ft": 2.5, "context": "POCKET"}
            ],
            "noise_floor_dbfs": -50.0,
            "seed": 9
        }"#;
        let scene = AcousticScene::from_json(text).unwrap();
        assert_eq!(scene.door_state(), DoorState::Open);
        assert_eq!(scene.device("phone").unwrap().context, CarryContext::Pocket);
        assert_eq!(scene.losses(), &LossModel::shipped());
        assert_eq!(scene.rf().rf_range_ft, 50.0);
        assert_eq!(scene.seed(), 9);
    }

    #[test]
    fn scene_json_errors() {
        assert!(matches!(
            AcousticScene::from_json("{"),
            Err(SimError::Parse(_))
        ));
        let bad_ctx = r#"{"spaces":["a","b"],"door_state":"SHUT","devices":[{"id":"x","space":"a","distance_ft":0,"context":"HAT"}]}"#;
        assert!(matches!(
            AcousticScene::from_json(bad_ctx),
            Err(SimError::Parse(_))
        ));
    }
}
