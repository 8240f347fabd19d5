use std::path::{Path, PathBuf};
use std::process::Command as Process;

use usthreshold::harness::{
    parse_script, run_scenario_files, scenario_play, HarnessConfig, HarnessError, ScenarioScene,
    COMMANDS_FILE, TRANSITIONS_FILE,
};
use usthreshold::protocol::Presence;
use usthreshold::services::Command;

fn pack(rel: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("scenarios")
        .join(rel)
}

fn play(scene: &str, script: &str) -> usthreshold::harness::ScenarioLogs {
    let sc = ScenarioScene::from_json(&std::fs::read_to_string(pack(scene)).unwrap()).unwrap();
    let steps = parse_script(&std::fs::read_to_string(pack(script)).unwrap()).unwrap();
    scenario_play(&sc, &steps, &HarnessConfig::default()).unwrap()
}

fn commands(logs: &usthreshold::harness::ScenarioLogs) -> Vec<(f64, Command)> {
    logs.commands.iter().map(|c| (c.t, c.command)).collect()
}

#[test]
fn walking_in_unlocks_then_locks() {
    let logs = play("scenes/front_door.json", "scripts/enter.json");
    // Hand trace: RF at t=1 with the door shut gives NEARBY_OUTSIDE; the door
    // opens at 4 with the phone 10 ft out (too far to leak); the phone is
    // inside at 6 and heard at once.
    assert_eq!(
        commands(&logs),
        vec![(1.0, Command::Unlock), (6.0, Command::Lock)]
    );
    assert_eq!(logs.final_states["phone"], Presence::Present);
}

#[test]
fn passing_by_unlocks_then_relocks() {
    let logs = play("scenes/front_door.json", "scripts/pass_by.json");
    // Last RF sighting at t=4, stale after 3 s, so AWAY at t=8.
    assert_eq!(
        commands(&logs),
        vec![(1.0, Command::Unlock), (8.0, Command::Lock)]
    );
    assert_eq!(logs.final_states["phone"], Presence::Away);
}

#[test]
fn staying_outside_keeps_the_outside_state() {
    let logs = play("scenes/front_door_bag.json", "scripts/stay_outside.json");
    assert_eq!(commands(&logs), vec![(1.0, Command::Unlock)]);
    assert!(logs.transitions.iter().all(|t| t.to != Presence::Present));
    assert_eq!(logs.final_states["phone"], Presence::NearbyOutside);
}

#[test]
fn dual_fixed_walk_in_needs_no_rf() {
    let logs = play("scenes/dual_fixed.json", "scripts/enter.json");
    assert_eq!(
        commands(&logs),
        vec![(1.0, Command::Unlock), (6.0, Command::Lock)]
    );
    assert!(logs
        .transitions
        .iter()
        .all(|t| t.config.as_str() == "C_DUAL_FIXED_NO_RF"));
}

#[test]
fn open_door_leak_is_visible_to_a_hand_held_beacon() {
    // Standing 2 ft outside an open door is inside the leak region; the
    // system reports PRESENT. This is the measured trade-off, not a bug.
    let sc =
        ScenarioScene::from_json(&std::fs::read_to_string(pack("scenes/front_door.json")).unwrap())
            .unwrap();
    let steps = parse_script(
        r#"[{"t": 1, "action": "move", "device": "phone", "distance_ft": 2},
            {"t": 3, "action": "door", "state": "OPEN"}]"#,
    )
    .unwrap();
    let logs = scenario_play(&sc, &steps, &HarnessConfig::default()).unwrap();
    assert!(logs.transitions.iter().any(|t| t.to == Presence::Present));
}

#[test]
fn empty_script_gives_empty_logs() {
    let dir = tempfile::tempdir().unwrap();
    let script = dir.path().join("empty.json");
    std::fs::write(&script, "[]").unwrap();
    let logs = run_scenario_files(
        &pack("scenes/front_door.json"),
        &script,
        dir.path(),
        &HarnessConfig::default(),
    )
    .unwrap();
    assert!(logs.transitions.is_empty() && logs.commands.is_empty());
    assert_eq!(
        std::fs::read_to_string(dir.path().join(TRANSITIONS_FILE)).unwrap(),
        ""
    );
    assert_eq!(
        std::fs::read_to_string(dir.path().join(COMMANDS_FILE)).unwrap(),
        ""
    );
}

#[test]
fn logs_are_written_as_json_lines() {
    let dir = tempfile::tempdir().unwrap();
    run_scenario_files(
        &pack("scenes/front_door.json"),
        &pack("scripts/enter.json"),
        dir.path(),
        &HarnessConfig::default(),
    )
    .unwrap();
    let cmds = std::fs::read_to_string(dir.path().join(COMMANDS_FILE)).unwrap();
    assert_eq!(
        cmds,
        "{\"t\":1.0,\"command\":\"UNLOCK\"}\n{\"t\":6.0,\"command\":\"LOCK\"}\n"
    );
    let trs = std::fs::read_to_string(dir.path().join(TRANSITIONS_FILE)).unwrap();
    assert_eq!(
        trs.lines().next().unwrap(),
        r#"{"t":1.0,"device":"phone","from":"AWAY","to":"NEARBY_OUTSIDE","config":"A_MOBILE_BEACON"}"#
    );
}

#[test]
fn malformed_scripts_are_parse_errors() {
    let bad_action = parse_script("[\n  {\"t\": 1, \"action\": \"teleport\"}\n]").unwrap_err();
    match bad_action {
        HarnessError::Parse(msg) => assert!(msg.contains("line 2"), "{msg}"),
        other => panic!("{other:?}"),
    }
    assert!(matches!(
        parse_script(
            r#"[{"t": 2, "action": "door", "state": "OPEN"}, {"t": 1, "action": "door", "state": "SHUT"}]"#
        ),
        Err(HarnessError::Parse(_))
    ));
    assert!(matches!(
        parse_script(r#"[{"t": 1, "action": "door", "state": "AJAR"}]"#),
        Err(HarnessError::Parse(_))
    ));
    assert!(matches!(
        ScenarioScene::from_json(r#"{"spaces": ["a"], "door_state": "SHUT", "devices": []}"#),
        Err(HarnessError::Parse(_))
    ));
}

fn cli() -> Process {
    Process::new(env!("CARGO_BIN_EXE_usthreshold"))
}

#[test]
fn cli_encode_decode_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let wav = dir.path().join("f.wav");
    let st = cli()
        .args(["encode", "--payload", "c0ffee", "--channel", "2", "--out"])
        .arg(&wav)
        .output()
        .unwrap()
        .status;
    assert!(st.success());
    let out = cli()
        .arg("decode")
        .arg(&wav)
        .args(["--channel", "2"])
        .output()
        .unwrap();
    assert!(out.status.success());
    assert_eq!(String::from_utf8(out.stdout).unwrap(), "c0ffee\n");
    let other = cli()
        .arg("decode")
        .arg(&wav)
        .args(["--channel", "1"])
        .output()
        .unwrap();
    assert!(other.status.success() && other.stdout.is_empty());
}

#[test]
fn cli_exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.json");
    let mut negative = usthreshold::channel_sim::LossModel::shipped();
    negative.shut_door_loss = -1.0;
    std::fs::write(&bad, serde_json::to_string(&negative).unwrap()).unwrap();
    let csv = dir.path().join("r.csv");
    let st = cli()
        .args(["run-grid", "--trials", "1", "--out"])
        .arg(&csv)
        .arg("--losses")
        .arg(&bad)
        .output()
        .unwrap()
        .status;
    assert_eq!(st.code(), Some(2));

    let st = cli()
        .arg("run-scenario")
        .arg("--scene")
        .arg(pack("scenes/front_door.json"))
        .arg("--script")
        .arg(&bad)
        .arg("--out-dir")
        .arg(dir.path())
        .output()
        .unwrap()
        .status;
    assert_eq!(st.code(), Some(2));

    let st = cli()
        .args(["encode", "--payload", "", "--out"])
        .arg(dir.path().join("x.wav"))
        .output()
        .unwrap()
        .status;
    assert_eq!(st.code(), Some(2));

    let st = cli()
        .args(["encode", "--payload", "aa", "--channel", "9", "--out"])
        .arg(dir.path().join("x.wav"))
        .output()
        .unwrap()
        .status;
    assert_eq!(st.code(), Some(2));
}

#[test]
fn cli_calibrate_with_degenerate_grid() {
    let dir = tempfile::tempdir().unwrap();
    let grid = dir.path().join("grid.json");
    let model = usthreshold::channel_sim::LossModel::shipped();
    std::fs::write(
        &grid,
        serde_json::to_string(&usthreshold::harness::SearchGrid::single(&model)).unwrap(),
    )
    .unwrap();
    let out = dir.path().join("losses.json");
    let st = cli()
        .arg("calibrate")
        .arg("--targets")
        .arg(pack("targets.json"))
        .arg("--grid")
        .arg(&grid)
        .args(["--trials", "2", "--out"])
        .arg(&out)
        .output()
        .unwrap()
        .status;
    assert!(st.success());
    let back: usthreshold::channel_sim::LossModel =
        serde_json::from_str(&std::fs::read_to_string(&out).unwrap()).unwrap();
    assert_eq!(back, model);
}
