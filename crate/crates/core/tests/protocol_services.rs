use proptest::prelude::*;

use usthreshold::channel_sim::{
    AcousticScene, CarryContext, DevicePlacement, DoorState, LossModel,
};
use usthreshold::harness::{scenario_play, Action, HarnessConfig, ScenarioScene, ScriptStep};
use usthreshold::protocol::{
    observe, Configuration, Observation, Presence, PresenceState, ProtocolTimers, Transition,
    UsSource,
};
use usthreshold::services::{apply_transition, LockPolicy, LockState};

fn event() -> impl Strategy<Value = Observation> {
    prop_oneof![
        Just(Observation::RfSeen),
        Just(Observation::UsSeen(UsSource::Interior)),
        Just(Observation::UsSeen(UsSource::Exterior)),
        Just(Observation::Tick),
    ]
}

fn config() -> impl Strategy<Value = Configuration> {
    prop_oneof![
        Just(Configuration::MobileBeacon),
        Just(Configuration::MobileReceiver),
        Just(Configuration::DualFixedNoRf),
    ]
}

fn play(config: Configuration, events: &[(Observation, f64)]) -> Vec<Transition> {
    let timers = ProtocolTimers::default();
    let mut s = PresenceState::new("m", config);
    let mut now = 0.0;
    let mut out = Vec::new();
    for &(ev, dt) in events {
        now += dt;
        let (next, tr) = observe(&s, ev, now, &timers).unwrap();
        out.extend(tr);
        s = next;
    }
    out
}

fn command_log(transitions: &[Transition]) -> String {
    let policy = LockPolicy::default();
    let mut lock = LockState::default();
    let mut log = String::new();
    for tr in transitions {
        let (next, cmd) = apply_transition(&lock, &policy, tr);
        if let Some(c) = cmd {
            log.push_str(&serde_json::to_string(&c).unwrap());
            log.push('\n');
        }
        lock = next;
    }
    log
}

proptest! {
    #[test]
    fn replay_is_identical(config in config(), events in proptest::collection::vec((event(), 0.0f64..2.0), 0..60)) {
        let a = play(config, &events);
        let b = play(config, &events);
        prop_assert_eq!(&a, &b);
        prop_assert_eq!(command_log(&a), command_log(&b));
    }

    #[test]
    fn commands_alternate(config in config(), events in proptest::collection::vec((event(), 0.0f64..2.0), 0..80)) {
        let log = command_log(&play(config, &events));
        let cmds: Vec<&str> = log.lines().collect();
        prop_assert!(cmds.windows(2).all(|w| w[0] != w[1]), "{:?}", cmds);
        // The lock starts locked, so the first command can only unlock.
        prop_assert!(cmds.first().is_none_or(|c| c.contains("UNLOCK")));
    }

    #[test]
    fn dual_fixed_ignores_rf(events in proptest::collection::vec((event(), 0.0f64..2.0), 0..60)) {
        let without: Vec<_> = events.iter().copied().filter(|(e, _)| *e != Observation::RfSeen).collect();
        // Dropping an RF event must not change the clock either, so fold its
        // delay into the next event.
        let mut folded = Vec::new();
        let mut carry = 0.0;
        for &(e, dt) in &events {
            if e == Observation::RfSeen {
                carry += dt;
            } else {
                folded.push((e, dt + carry));
                carry = 0.0;
            }
        }
        prop_assert_eq!(without.len(), folded.len());
        let a: Vec<_> = play(Configuration::DualFixedNoRf, &events).into_iter().map(|t| (t.from, t.to)).collect();
        let b: Vec<_> = play(Configuration::DualFixedNoRf, &folded).into_iter().map(|t| (t.from, t.to)).collect();
        prop_assert_eq!(a, b);
    }
}

fn two_space_scene(
    fixed: Vec<DevicePlacement>,
    mobile: DevicePlacement,
    seed: u64,
) -> AcousticScene {
    let mut devices = fixed;
    devices.push(mobile);
    AcousticScene::new(
        ["inside".into(), "outside".into()],
        DoorState::Shut,
        devices,
        LossModel::shipped(),
        -55.0,
        seed,
    )
    .unwrap()
}

fn step(t: f64, action: Action) -> ScriptStep {
    ScriptStep { t, action }
}

#[test]
fn nearby_hand_held_mobile_is_detected_promptly() {
    let timers = ProtocolTimers::default();
    let deadline = timers.absence_timeout + timers.message_period;
    let config = HarnessConfig::default();
    for cfg in [
        Configuration::MobileBeacon,
        Configuration::MobileReceiver,
        Configuration::DualFixedNoRf,
    ] {
        for d in 0..=10 {
            let mut fixed = vec![DevicePlacement::new(
                "lock",
                "inside",
                0.0,
                CarryContext::Fixed,
            )];
            if cfg == Configuration::DualFixedNoRf {
                fixed.push(DevicePlacement::new(
                    "plate",
                    "outside",
                    0.0,
                    CarryContext::Fixed,
                ));
            }
            let scene = two_space_scene(
                fixed,
                DevicePlacement::new("phone", "outside", 300.0, CarryContext::Hand),
                d as u64,
            );
            let arrive = 2.0;
            let script = [step(
                arrive,
                Action::Move {
                    device: "phone".into(),
                    space: Some("inside".into()),
                    distance_ft: Some(d as f64),
                },
            )];
            let logs = scenario_play(&ScenarioScene::new(scene, cfg), &script, &config).unwrap();
            let first_present = logs
                .transitions
                .iter()
                .find(|t| t.to == Presence::Present)
                .unwrap_or_else(|| panic!("{cfg:?} at {d} ft never PRESENT"));
            assert!(
                first_present.t - arrive <= deadline,
                "{cfg:?} at {d} ft: {}",
                first_present.t
            );
        }
    }
}

#[test]
fn shut_door_never_yields_present() {
    let config = HarnessConfig::default();
    let mut plays = 0;
    for cfg in [Configuration::MobileBeacon, Configuration::MobileReceiver] {
        for (fixed_space, mobile_space) in [("inside", "outside"), ("outside", "inside")] {
            for ctx in [CarryContext::Hand, CarryContext::Pocket, CarryContext::Bag] {
                for d in [0.0, 2.0, 10.0] {
                    let scene = two_space_scene(
                        vec![DevicePlacement::new(
                            "lock",
                            fixed_space,
                            0.0,
                            CarryContext::Fixed,
                        )],
                        DevicePlacement::new("phone", mobile_space, 100.0, ctx),
                        plays,
                    );
                    // Walk up to the door and loiter there for 20 s.
                    let script = [
                        step(
                            1.0,
                            Action::Move {
                                device: "phone".into(),
                                space: None,
                                distance_ft: Some(d),
                            },
                        ),
                        step(
                            21.0,
                            Action::Move {
                                device: "phone".into(),
                                space: None,
                                distance_ft: Some(d),
                            },
                        ),
                    ];
                    let sc = ScenarioScene::new(scene, cfg);
                    let logs = scenario_play(&sc, &script, &config).unwrap();
                    assert!(
                        logs.transitions.iter().all(|t| t.to != Presence::Present),
                        "{cfg:?} {fixed_space}/{mobile_space} {ctx:?} {d} ft: {:?}",
                        logs.transitions
                    );
                    assert_eq!(logs.final_states["phone"], Presence::NearbyOutside);
                    plays += 1;
                }
            }
        }
    }
    assert_eq!(plays, 36);
}
