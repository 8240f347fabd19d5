use std::fmt;
use std::io::Write;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{HarnessConfig, HarnessError};
use crate::channel_sim::{
    path_loss_db, propagate, AcousticScene, CarryContext, DevicePlacement, DoorState, LossModel,
};
use crate::modem::{decode, encode, HexPayload, PcmFrame, UsFrame};
use crate::protocol::ChannelAssignment;

pub const INSIDE: &str = "inside";
pub const OUTSIDE: &str = "outside";
pub const FIXED_ID: &str = "fixed";
pub const MOBILE_ID: &str = "mobile";

macro_rules! label_enum {
    ($name:ident { $($variant:ident => $label:literal),+ $(,)? }) => {
        #[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
        pub enum $name {
            $(#[serde(rename = $label)] $variant),+
        }

        impl $name {
            pub const ALL: &'static [$name] = &[$($name::$variant),+];

            pub fn label(self) -> &'static str {
                match self {
                    $($name::$variant => $label),+
                }
            }
        }

        impl fmt::Display for $name {
            fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                f.write_str(self.label())
            }
        }
    };
}

label_enum!(Environment { Home => "home", Office => "office" });
label_enum!(FixedLocation { Internal => "internal", External => "external" });
label_enum!(UserLocation { SameSpace => "same_space", OtherSpace => "other_space" });
label_enum!(MobileContext { Hand => "hand", Pocket => "pocket", Bag => "bag" });
label_enum!(GridConfig { MobileBeacon => "mobile_beacon", MobileReceiver => "mobile_receiver" });

impl MobileContext {
    pub fn carry(self) -> CarryContext {
        match self {
            MobileContext::Hand => CarryContext::Hand,
            MobileContext::Pocket => CarryContext::Pocket,
            MobileContext::Bag => CarryContext::Bag,
        }
    }
}

fn door_label(d: DoorState) -> &'static str {
    match d {
        DoorState::Shut => "shut",
        DoorState::Open => "open",
    }
}

/// One combination of the seven experimental factors.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Condition {
    pub env: Environment,
    pub door: DoorState,
    pub fixed_loc: FixedLocation,
    pub user_loc: UserLocation,
    pub distance_ft: u32,
    pub context: MobileContext,
    pub config: GridConfig,
}

impl Condition {
    /// 0 ft is only tested with the door shut and the user on the far side.
    pub fn validate(&self) -> Result<(), HarnessError> {
        if self.distance_ft == 0
            && !(self.door == DoorState::Shut && self.user_loc == UserLocation::OtherSpace)
        {
            return Err(HarnessError::Constraint(format!(
                "0 ft requires door shut and user in the other space, got {self}"
            )));
        }
        Ok(())
    }

    pub fn fixed_space(&self) -> &'static str {
        match self.fixed_loc {
            FixedLocation::Internal => INSIDE,
            FixedLocation::External => OUTSIDE,
        }
    }

    pub fn mobile_space(&self) -> &'static str {
        match (self.fixed_loc, self.user_loc) {
            (FixedLocation::Internal, UserLocation::SameSpace)
            | (FixedLocation::External, UserLocation::OtherSpace) => INSIDE,
            _ => OUTSIDE,
        }
    }

    /// (transmitter, receiver) device ids.
    pub fn link(&self) -> (&'static str, &'static str) {
        match self.config {
            GridConfig::MobileBeacon => (MOBILE_ID, FIXED_ID),
            GridConfig::MobileReceiver => (FIXED_ID, MOBILE_ID),
        }
    }

    pub fn scene(
        &self,
        losses: LossModel,
        noise_floor_dbfs: f64,
        seed: u64,
    ) -> Result<AcousticScene, HarnessError> {
        let devices = vec![
            DevicePlacement::new(FIXED_ID, self.fixed_space(), 0.0, CarryContext::Fixed),
            DevicePlacement::new(
                MOBILE_ID,
                self.mobile_space(),
                self.distance_ft as f64,
                self.context.carry(),
            ),
        ];
        Ok(AcousticScene::new(
            [INSIDE.to_string(), OUTSIDE.to_string()],
            self.door,
            devices,
            losses,
            noise_floor_dbfs,
            seed,
        )?)
    }
}

impl fmt::Display for Condition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{}/{}/{}/{}/{}ft/{}/{}",
            self.env,
            door_label(self.door),
            self.fixed_loc,
            self.user_loc,
            self.distance_ft,
            self.context,
            self.config
        )
    }
}

/// Factor levels to cross. The default is the full evaluation grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConditionGrid {
    pub environments: Vec<Environment>,
    pub doors: Vec<DoorState>,
    pub fixed_locations: Vec<FixedLocation>,
    pub user_locations: Vec<UserLocation>,
    pub distances_ft: Vec<u32>,
    pub contexts: Vec<MobileContext>,
    pub configs: Vec<GridConfig>,
}

impl Default for ConditionGrid {
    fn default() -> Self {
        Self {
            environments: Environment::ALL.to_vec(),
            doors: vec![DoorState::Shut, DoorState::Open],
            fixed_locations: FixedLocation::ALL.to_vec(),
            user_locations: UserLocation::ALL.to_vec(),
            distances_ft: vec![10, 2, 0],
            contexts: MobileContext::ALL.to_vec(),
            configs: GridConfig::ALL.to_vec(),
        }
    }
}

impl ConditionGrid {
    /// All valid combinations, in a fixed nesting order (environment
    /// outermost, configuration innermost). Invalid 0 ft combinations are
    /// dropped.
    pub fn expand(&self) -> Vec<Condition> {
        let mut out = Vec::new();
        for &env in &self.environments {
            for &door in &self.doors {
                for &fixed_loc in &self.fixed_locations {
                    for &user_loc in &self.user_locations {
                        for &distance_ft in &self.distances_ft {
                            for &context in &self.contexts {
                                for &config in &self.configs {
                                    let c = Condition {
                                        env,
                                        door,
                                        fixed_loc,
                                        user_loc,
                                        distance_ft,
                                        context,
                                        config,
                                    };
                                    if c.validate().is_ok() {
                                        out.push(c);
                                    }
                                }
                            }
                        }
                    }
                }
            }
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TrialRecord {
    pub condition: Condition,
    pub sent: u32,
    pub received: u32,
    pub seed: u64,
}

/// Per-condition seed from the master seed and the condition's index.
pub fn condition_seed(master: u64, index: usize) -> u64 {
    // splitmix64 finalizer
    let mut z = master
        ^ (index as u64)
            .wrapping_add(1)
            .wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// The clean audio for one beacon message, with a quiet guard on each side.
pub(crate) fn trial_waveform(
    config: &HarnessConfig,
    channel: usize,
) -> Result<PcmFrame, HarnessError> {
    let frame = UsFrame {
        channel,
        payload: config.payload.clone(),
    };
    let pcm = encode(&frame, &config.modem, config.amplitude)?;
    let guard = config.guard_symbols * config.modem.symbol_len;
    Ok(pcm.padded(guard, guard))
}

/// Messages decoded out of `trials`, each sent through `loss_db`.
pub(crate) fn count_received(
    scene: &AcousticScene,
    waveform: &PcmFrame,
    loss_db: f64,
    trials: u32,
    channel: usize,
    payload: &HexPayload,
    config: &HarnessConfig,
) -> u32 {
    (0..trials)
        .filter(|&t| {
            let heard = propagate(scene, waveform, loss_db, t as u64);
            decode(&heard, &config.modem, channel)
                .iter()
                .any(|d| &d.payload == payload)
        })
        .count() as u32
}

/// Channel the single grid mobile is given by the fixed device.
pub(crate) fn grid_channel(config: &HarnessConfig) -> Result<usize, HarnessError> {
    let mut assignments = ChannelAssignment::new(config.modem.channel_count);
    Ok(assignments.allocate(MOBILE_ID)?)
}

/// Sends `trials` messages for one condition and counts what was heard.
pub fn run_condition(
    condition: &Condition,
    trials: u32,
    seed: u64,
    config: &HarnessConfig,
) -> Result<TrialRecord, HarnessError> {
    condition.validate()?;
    let channel = grid_channel(config)?;
    let waveform = trial_waveform(config, channel)?;
    run_condition_with(condition, trials, seed, config, &waveform, channel)
}

fn run_condition_with(
    condition: &Condition,
    trials: u32,
    seed: u64,
    config: &HarnessConfig,
    waveform: &PcmFrame,
    channel: usize,
) -> Result<TrialRecord, HarnessError> {
    let scene = condition.scene(
        config.losses_for(condition.env),
        config.noise_floor_dbfs,
        seed,
    )?;
    let (tx, rx) = condition.link();
    let loss = path_loss_db(&scene, tx, rx)?;
    let received = count_received(
        &scene,
        waveform,
        loss,
        trials,
        channel,
        &config.payload,
        config,
    );
    Ok(TrialRecord {
        condition: *condition,
        sent: trials,
        received,
        seed,
    })
}

/// Received over sent; `rate` is `None` when nothing was sent.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct Rate {
    pub received: u64,
    pub sent: u64,
}

impl Rate {
    pub fn rate(&self) -> Option<f64> {
        (self.sent > 0).then(|| self.received as f64 / self.sent as f64)
    }

    fn add(&mut self, r: &TrialRecord) {
        self.received += r.received as u64;
        self.sent += r.sent as u64;
    }
}

impl Serialize for Rate {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        use serde::ser::SerializeStruct;
        let mut st = s.serialize_struct("Rate", 3)?;
        st.serialize_field("received", &self.received)?;
        st.serialize_field("sent", &self.sent)?;
        st.serialize_field("rate", &self.rate())?;
        st.end()
    }
}

impl fmt::Display for Rate {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.rate() {
            Some(r) => write!(f, "{}/{} ({:.1}%)", self.received, self.sent, 100.0 * r),
            None => write!(f, "0/0 (n/a)"),
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConfigPair<T> {
    pub mobile_beacon: T,
    pub mobile_receiver: T,
}

impl<T> ConfigPair<T> {
    pub fn get(&self, c: GridConfig) -> &T {
        match c {
            GridConfig::MobileBeacon => &self.mobile_beacon,
            GridConfig::MobileReceiver => &self.mobile_receiver,
        }
    }

    pub fn get_mut(&mut self, c: GridConfig) -> &mut T {
        match c {
            GridConfig::MobileBeacon => &mut self.mobile_beacon,
            GridConfig::MobileReceiver => &mut self.mobile_receiver,
        }
    }
}

/// The four headline aggregates.
///
/// * `same_space`: user with the fixed device, hand or pocket.
/// * `shut_door_cross_space`: door shut, user in the other space.
/// * `open_door_leak`: door open, user in the other space, hand or pocket.
/// * `bag_near_door`: user with the fixed device, bag, 2 ft from the door.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize)]
pub struct GridSummary {
    pub same_space: Rate,
    pub shut_door_cross_space: Rate,
    pub open_door_leak_total: Rate,
    pub open_door_leak: ConfigPair<Rate>,
    pub bag_near_door: ConfigPair<Rate>,
}

impl GridSummary {
    pub fn from_records(records: &[TrialRecord]) -> Self {
        let mut s = Self::default();
        for r in records {
            let c = &r.condition;
            let hand_or_pocket = matches!(c.context, MobileContext::Hand | MobileContext::Pocket);
            match c.user_loc {
                UserLocation::SameSpace => {
                    if hand_or_pocket {
                        s.same_space.add(r);
                    }
                    if c.context == MobileContext::Bag && c.distance_ft == 2 {
                        s.bag_near_door.get_mut(c.config).add(r);
                    }
                }
                UserLocation::OtherSpace => match c.door {
                    DoorState::Shut => s.shut_door_cross_space.add(r),
                    DoorState::Open if hand_or_pocket => {
                        s.open_door_leak_total.add(r);
                        s.open_door_leak.get_mut(c.config).add(r);
                    }
                    DoorState::Open => {}
                },
            }
        }
        s
    }
}

impl fmt::Display for GridSummary {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "same-space reception (hand+pocket): {}", self.same_space)?;
        writeln!(
            f,
            "shut-door cross-space:             {}",
            self.shut_door_cross_space
        )?;
        writeln!(
            f,
            "open-door leak (hand+pocket):      {}",
            self.open_door_leak_total
        )?;
        writeln!(
            f,
            "  mobile beacon:                   {}",
            self.open_door_leak.mobile_beacon
        )?;
        writeln!(
            f,
            "  mobile receiver:                 {}",
            self.open_door_leak.mobile_receiver
        )?;
        writeln!(f, "bag near door (2 ft, same space):")?;
        writeln!(
            f,
            "  mobile beacon:                   {}",
            self.bag_near_door.mobile_beacon
        )?;
        write!(
            f,
            "  mobile receiver:                 {}",
            self.bag_near_door.mobile_receiver
        )
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GridReport {
    pub records: Vec<TrialRecord>,
    pub summary: GridSummary,
}

impl GridReport {
    pub fn write_csv<W: Write>(&self, out: W) -> Result<(), HarnessError> {
        write_csv(&self.records, out)
    }

    pub fn to_csv(&self) -> Result<Vec<u8>, HarnessError> {
        let mut buf = Vec::new();
        self.write_csv(&mut buf)?;
        Ok(buf)
    }
}

pub const CSV_HEADER: [&str; 10] = [
    "env",
    "door",
    "fixed_loc",
    "user_loc",
    "dist_ft",
    "context",
    "config",
    "sent",
    "received",
    "seed",
];

pub fn write_csv<W: Write>(records: &[TrialRecord], out: W) -> Result<(), HarnessError> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(CSV_HEADER)?;
    for r in records {
        let c = &r.condition;
        w.write_record([
            c.env.label().to_string(),
            door_label(c.door).to_string(),
            c.fixed_loc.label().to_string(),
            c.user_loc.label().to_string(),
            c.distance_ft.to_string(),
            c.context.label().to_string(),
            c.config.label().to_string(),
            r.sent.to_string(),
            r.received.to_string(),
            r.seed.to_string(),
        ])?;
    }
    w.flush().map_err(|e| HarnessError::Io(e.to_string()))?;
    Ok(())
}

/// Runs every condition of `grid`, in parallel, aggregating in grid order.
pub fn run_grid(
    grid: &ConditionGrid,
    trials: u32,
    seed: u64,
    config: &HarnessConfig,
) -> Result<GridReport, HarnessError> {
    let conditions = grid.expand();
    let channel = grid_channel(config)?;
    let waveform = trial_waveform(config, channel)?;
    let records = conditions
        .par_iter()
        .enumerate()
        .map(|(i, c)| {
            run_condition_with(
                c,
                trials,
                condition_seed(seed, i),
                config,
                &waveform,
                channel,
            )
        })
        .collect::<Result<Vec<_>, _>>()?;
    let records: Vec<TrialRecord> = if trials == 0 { Vec::new() } else { records };
    let summary = GridSummary::from_records(&records);
    Ok(GridReport { records, summary })
}
