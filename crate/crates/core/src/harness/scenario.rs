use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{HarnessConfig, HarnessError};
use crate::channel_sim::{
    rf_visible, transmit, AcousticScene, CarryContext, DevicePlacement, DoorState,
};
use crate::modem::{decode, encode, HexPayload};
use crate::protocol::{
    observe, Beacon, ChannelAssignment, Configuration, Observation, Presence, PresenceState,
    Transition, UsSource,
};
use crate::services::{
    CommandRecord, EventSink, FileSink, LockController, LockPolicy, MemorySink, SinkError,
};

/// File names written by [`ScenarioLogs::write_to`].
pub const TRANSITIONS_FILE: &str = "transitions.jsonl";
pub const COMMANDS_FILE: &str = "commands.jsonl";

/// A scene plus the deployment it runs under.
///
/// The JSON form is a scene document with two optional extra keys,
/// `configuration` (default `A_MOBILE_BEACON`) and `payload` (default `"aa"`).
/// Devices with context `FIXED` are the fixed devices; the one in the first
/// space is the interior device and, in the dual-fixed configuration, the
/// one in the second space is the exterior device. Every other device is a
/// mobile.
#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioScene {
    pub scene: AcousticScene,
    pub configuration: Configuration,
    pub payload: HexPayload,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct ScenarioExtras {
    #[serde(default = "default_configuration")]
    configuration: Configuration,
    #[serde(default = "default_payload")]
    payload: HexPayload,
}

fn default_configuration() -> Configuration {
    Configuration::MobileBeacon
}

fn default_payload() -> HexPayload {
    "aa".parse().expect("literal payload")
}

impl ScenarioScene {
    pub fn new(scene: AcousticScene, configuration: Configuration) -> Self {
        Self {
            scene,
            configuration,
            payload: default_payload(),
        }
    }

    pub fn from_json(text: &str) -> Result<Self, HarnessError> {
        let mut doc: serde_json::Value =
            serde_json::from_str(text).map_err(|e| HarnessError::Parse(format!("scene: {e}")))?;
        let obj = doc
            .as_object_mut()
            .ok_or_else(|| HarnessError::Parse("scene: expected a JSON object".into()))?;
        let mut extras = serde_json::Map::new();
        for key in ["configuration", "payload"] {
            if let Some(v) = obj.remove(key) {
                extras.insert(key.into(), v);
            }
        }
        let extras: ScenarioExtras = serde_json::from_value(extras.into())
            .map_err(|e| HarnessError::Parse(format!("scene: {e}")))?;
        let scene = AcousticScene::from_json(&doc.to_string())
            .map_err(|e| HarnessError::Parse(e.to_string()))?;
        Ok(Self {
            scene,
            configuration: extras.configuration,
            payload: extras.payload,
        })
    }

    fn fixed_in(&self, space: &str) -> Option<&DevicePlacement> {
        self.scene
            .devices()
            .iter()
            .find(|d| d.context == CarryContext::Fixed && d.space == space)
    }

    fn roles(&self) -> Result<Roles, HarnessError> {
        let [inside, outside] = self.scene.spaces();
        let fixed: Vec<&DevicePlacement> = self
            .scene
            .devices()
            .iter()
            .filter(|d| d.context == CarryContext::Fixed)
            .collect();
        let mobiles: Vec<String> = {
            let mut m: Vec<String> = self
                .scene
                .devices()
                .iter()
                .filter(|d| d.context != CarryContext::Fixed)
                .map(|d| d.id.clone())
                .collect();
            m.sort();
            m
        };
        let (interior, exterior) = match self.configuration {
            Configuration::DualFixedNoRf => {
                let int = self.fixed_in(inside);
                let ext = self.fixed_in(outside);
                match (int, ext, fixed.len()) {
                    (Some(i), Some(e), 2) => (i.id.clone(), Some(e.id.clone())),
                    _ => {
                        return Err(HarnessError::Constraint(
                            "dual-fixed scenes need one FIXED device in each space".into(),
                        ))
                    }
                }
            }
            _ => match fixed.as_slice() {
                [one] => (one.id.clone(), None),
                _ => {
                    return Err(HarnessError::Constraint(
                        "this configuration needs exactly one FIXED device".into(),
                    ))
                }
            },
        };
        Ok(Roles {
            interior,
            exterior,
            mobiles,
        })
    }
}

struct Roles {
    interior: String,
    exterior: Option<String>,
    mobiles: Vec<String>,
}

/// One scripted change to the scene, applied at time `t`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "action", rename_all = "lowercase", deny_unknown_fields)]
pub enum Action {
    /// Moves a device; omitted fields keep their value.
    Move {
        device: String,
        #[serde(default)]
        space: Option<String>,
        #[serde(default)]
        distance_ft: Option<f64>,
    },
    Door {
        state: DoorState,
    },
    Context {
        device: String,
        context: CarryContext,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScriptStep {
    pub t: f64,
    #[serde(flatten)]
    pub action: Action,
}

pub fn parse_script(text: &str) -> Result<Vec<ScriptStep>, HarnessError> {
    let steps: Vec<ScriptStep> =
        serde_json::from_str(text).map_err(|e| HarnessError::Parse(format!("script: {e}")))?;
    for (i, w) in steps.windows(2).enumerate() {
        if w[1].t < w[0].t {
            return Err(HarnessError::Parse(format!(
                "script: step {} at t={} is earlier than step {}",
                i + 1,
                w[1].t,
                i
            )));
        }
    }
    if let Some((i, s)) = steps
        .iter()
        .enumerate()
        .find(|(_, s)| !(s.t.is_finite() && s.t >= 0.0))
    {
        return Err(HarnessError::Parse(format!(
            "script: step {i} has invalid t={}",
            s.t
        )));
    }
    Ok(steps)
}

fn apply(scene: &AcousticScene, action: &Action) -> Result<AcousticScene, HarnessError> {
    Ok(match action {
        Action::Door { state } => scene.with_door(*state),
        Action::Move {
            device,
            space,
            distance_ft,
        } => {
            let mut d = scene.device(device)?.clone();
            if let Some(s) = space {
                d.space = s.clone();
            }
            if let Some(x) = distance_ft {
                d.distance_ft = *x;
            }
            scene.with_device(d)?
        }
        Action::Context { device, context } => {
            let mut d = scene.device(device)?.clone();
            d.context = *context;
            scene.with_device(d)?
        }
    })
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct ScenarioLogs {
    pub transitions: Vec<Transition>,
    pub commands: Vec<CommandRecord>,
    /// Presence of each mobile when the run ended.
    pub final_states: BTreeMap<String, Presence>,
}

impl ScenarioLogs {
    /// Appends both logs as JSON lines under `dir`.
    pub fn write_to(&self, dir: &Path) -> Result<(), HarnessError> {
        std::fs::create_dir_all(dir)?;
        let mut tr = FileSink::new(dir.join(TRANSITIONS_FILE));
        let mut cmd = FileSink::new(dir.join(COMMANDS_FILE));
        // Start from empty files so reruns are reproducible.
        for sink in [&tr, &cmd] {
            std::fs::write(sink.path(), b"")?;
        }
        for t in &self.transitions {
            tr.append(t)?;
        }
        for c in &self.commands {
            cmd.append(c)?;
        }
        Ok(())
    }
}

/// Runs `script` against the full stack: RF and ultrasonic links through the
/// simulator, presence inference, and the lock controller.
///
/// Time advances in steps of one message period from 0 until the absence
/// timeout plus two periods after the last step. At each tick, script steps
/// due by then are applied, then for each mobile (in id order) the RF
/// sighting, the ultrasonic message and a clock tick are observed in that
/// order. An empty script produces empty logs.
pub fn scenario_play(
    scenario: &ScenarioScene,
    script: &[ScriptStep],
    config: &HarnessConfig,
) -> Result<ScenarioLogs, HarnessError> {
    let Some(last) = script.last() else {
        return Ok(ScenarioLogs::default());
    };
    let timers = config.timers;
    timers.validate()?;
    let roles = scenario.roles()?;
    let cfg = scenario.configuration;
    let end = last.t + timers.absence_timeout + 2.0 * timers.message_period;

    let mut scene = scenario.scene.clone();
    let mut assignments = ChannelAssignment::new(config.modem.channel_count);
    let mut states: BTreeMap<String, PresenceState> = roles
        .mobiles
        .iter()
        .map(|m| (m.clone(), PresenceState::new(m.clone(), cfg)))
        .collect();
    if !cfg.uses_rf() {
        for m in &roles.mobiles {
            assignments.allocate(m)?;
        }
    }
    let mut lock = LockController::new(LockPolicy::default(), MemorySink::default());
    let mut transitions = Vec::new();
    let mut call_index = 0u64;
    let mut pending = script.iter().peekable();

    let mut k = 0u64;
    loop {
        let now = k as f64 * timers.message_period;
        if now > end {
            break;
        }
        k += 1;
        while let Some(step) = pending.next_if(|s| s.t <= now) {
            scene = apply(&scene, &step.action)?;
        }

        for mobile in &roles.mobiles {
            let mut events = Vec::new();
            if cfg.uses_rf() {
                if rf_visible(&scene, &roles.interior, mobile)? {
                    assignments.allocate(mobile)?;
                    events.push(Observation::RfSeen);
                } else if let (Some(last_rf), Some(_)) =
                    (states[mobile].last_rf, assignments.channel_of(mobile))
                {
                    assignments.release(mobile, now, last_rf, &timers)?;
                }
            }

            if let Some(channel) = assignments.channel_of(mobile) {
                let links: Vec<(&str, &str, UsSource)> = match cfg {
                    Configuration::MobileBeacon => {
                        vec![(mobile, &roles.interior, UsSource::Interior)]
                    }
                    Configuration::MobileReceiver => {
                        vec![(&roles.interior, mobile, UsSource::Interior)]
                    }
                    Configuration::DualFixedNoRf => {
                        let mut l =
                            vec![(mobile.as_str(), roles.interior.as_str(), UsSource::Interior)];
                        if let Some(ext) = &roles.exterior {
                            l.push((mobile, ext, UsSource::Exterior));
                        }
                        l
                    }
                };
                // Frames use the mobile's channel whichever side transmits.
                let beacon = Beacon::new(mobile.clone()).with_payload(scenario.payload.clone());
                for (_, frame) in
                    beacon.run(&assignments, now, now + timers.message_period, &timers)?
                {
                    let pcm = encode(&frame, &config.modem, config.amplitude)?;
                    let guard = config.guard_symbols * config.modem.symbol_len;
                    let pcm = pcm.padded(guard, guard);
                    for &(tx, rx, source) in &links {
                        let heard = transmit(&scene, tx, rx, &pcm, call_index)?;
                        call_index += 1;
                        if decode(&heard, &config.modem, channel)
                            .iter()
                            .any(|d| d.payload == scenario.payload)
                        {
                            events.push(Observation::UsSeen(source));
                        }
                    }
                }
            }
            events.push(Observation::Tick);

            for ev in events {
                let state = states.get_mut(mobile).expect("mobile state");
                let (next, tr) = observe(state, ev, now, &timers)?;
                *state = next;
                if let Some(tr) = tr {
                    lock.handle(&tr)
                        .map_err(|e: SinkError| HarnessError::Sink(e))?;
                    transitions.push(tr);
                }
            }
        }
    }

    let commands = lock
        .into_sink()
        .into_lines()
        .iter()
        .map(|l| serde_json::from_str(l).expect("own command record"))
        .collect();
    Ok(ScenarioLogs {
        transitions,
        commands,
        final_states: states.into_iter().map(|(k, v)| (k, v.state)).collect(),
    })
}

/// Reads a scene and a script from disk, plays them and writes the logs.
pub fn run_scenario_files(
    scene_path: &Path,
    script_path: &Path,
    out_dir: &Path,
    config: &HarnessConfig,
) -> Result<ScenarioLogs, HarnessError> {
    let read = |p: &Path| {
        std::fs::read_to_string(p).map_err(|e| HarnessError::Io(format!("{}: {e}", p.display())))
    };
    let scenario = ScenarioScene::from_json(&read(scene_path)?)?;
    let script = parse_script(&read(script_path)?)?;
    let logs = scenario_play(&scenario, &script, config)?;
    logs.write_to(out_dir)?;
    Ok(logs)
}
