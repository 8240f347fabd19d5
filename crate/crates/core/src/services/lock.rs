use serde::{Deserialize, Serialize};

use super::{EventSink, SinkError};
use crate::protocol::{Presence, Transition};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum LockStatus {
    Locked,
    Unlocked,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Command {
    Lock,
    Unlock,
}

impl Command {
    fn target(self) -> LockStatus {
        match self {
            Command::Lock => LockStatus::Locked,
            Command::Unlock => LockStatus::Unlocked,
        }
    }
}

/// One line of the command log.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CommandRecord {
    pub t: f64,
    pub command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LockState {
    pub state: LockStatus,
    pub last_command_time: Option<f64>,
}

impl Default for LockState {
    fn default() -> Self {
        Self {
            state: LockStatus::Locked,
            last_command_time: None,
        }
    }
}

/// Command for each transition target. Total by construction.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct LockPolicy {
    pub on_away: Command,
    pub on_nearby_outside: Command,
    pub on_present: Command,
}

impl Default for LockPolicy {
    fn default() -> Self {
        Self {
            on_away: Command::Lock,
            on_nearby_outside: Command::Unlock,
            on_present: Command::Lock,
        }
    }
}

impl LockPolicy {
    pub fn command_for(&self, to: Presence) -> Command {
        match to {
            Presence::Away => self.on_away,
            Presence::NearbyOutside => self.on_nearby_outside,
            Presence::Present => self.on_present,
        }
    }
}

/// Applies the policy; a command is issued only when the lock changes state.
pub fn apply_transition(
    lock: &LockState,
    policy: &LockPolicy,
    transition: &Transition,
) -> (LockState, Option<CommandRecord>) {
    let command = policy.command_for(transition.to);
    if command.target() == lock.state {
        return (*lock, None);
    }
    let next = LockState {
        state: command.target(),
        last_command_time: Some(transition.t),
    };
    (
        next,
        Some(CommandRecord {
            t: transition.t,
            command,
        }),
    )
}

/// A lock plus the sink its commands are logged to.
///
/// State only advances once the command is durably appended, so a failed
/// write leaves the controller where it was and the same transition can be
/// retried.
#[derive(Debug)]
pub struct LockController<S> {
    lock: LockState,
    policy: LockPolicy,
    sink: S,
}

impl<S: EventSink> LockController<S> {
    pub fn new(policy: LockPolicy, sink: S) -> Self {
        Self {
            lock: LockState::default(),
            policy,
            sink,
        }
    }

    pub fn lock(&self) -> &LockState {
        &self.lock
    }

    pub fn sink(&self) -> &S {
        &self.sink
    }

    pub fn into_sink(self) -> S {
        self.sink
    }

    pub fn handle(&mut self, transition: &Transition) -> Result<Option<CommandRecord>, SinkError> {
        let (next, command) = apply_transition(&self.lock, &self.policy, transition);
        if let Some(cmd) = &command {
            self.sink.append(cmd)?;
        }
        self.lock = next;
        Ok(command)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::protocol::Configuration;
    use crate::services::{FileSink, MemorySink};
    use Presence::*;

    fn tr(t: f64, from: Presence, to: Presence) -> Transition {
        Transition {
            t,
            device: "phone".into(),
            from,
            to,
            config: Configuration::MobileBeacon,
        }
    }

    fn status(state: LockStatus) -> LockState {
        LockState {
            state,
            last_command_time: None,
        }
    }

    #[test]
    fn approach_unlocks() {
        let (l, c) = apply_transition(
            &status(LockStatus::Locked),
            &LockPolicy::default(),
            &tr(1.0, Away, NearbyOutside),
        );
        assert_eq!(l.state, LockStatus::Unlocked);
        assert_eq!(c.unwrap().command, Command::Unlock);
        assert_eq!(l.last_command_time, Some(1.0));
    }

    #[test]
    fn entering_locks() {
        let (l, c) = apply_transition(
            &status(LockStatus::Unlocked),
            &LockPolicy::default(),
            &tr(2.0, NearbyOutside, Present),
        );
        assert_eq!(l.state, LockStatus::Locked);
        assert_eq!(c.unwrap().command, Command::Lock);
    }

    #[test]
    fn relock_is_silent() {
        let start = status(LockStatus::Locked);
        let (l, c) = apply_transition(
            &start,
            &LockPolicy::default(),
            &tr(3.0, NearbyOutside, Away),
        );
        assert_eq!(l, start);
        assert!(c.is_none());
    }

    #[test]
    fn command_json_line() {
        let c = CommandRecord {
            t: 4.0,
            command: Command::Unlock,
        };
        assert_eq!(
            serde_json::to_string(&c).unwrap(),
            r#"{"t":4.0,"command":"UNLOCK"}"#
        );
    }

    #[test]
    fn controller_logs_commands() {
        let mut ctl = LockController::new(LockPolicy::default(), MemorySink::default());
        ctl.handle(&tr(0.0, Away, NearbyOutside)).unwrap();
        ctl.handle(&tr(1.0, NearbyOutside, Present)).unwrap();
        ctl.handle(&tr(5.0, Present, Away)).unwrap();
        assert_eq!(
            ctl.sink().lines(),
            &[
                r#"{"t":0.0,"command":"UNLOCK"}"#,
                r#"{"t":1.0,"command":"LOCK"}"#
            ]
        );
    }

    #[test]
    fn sink_failure_keeps_lock_state() {
        let dir = tempfile::tempdir().unwrap();
        let sink = FileSink::new(dir.path().join("missing").join("log.jsonl"));
        let mut ctl = LockController::new(LockPolicy::default(), sink);
        assert!(ctl.handle(&tr(0.0, Away, NearbyOutside)).is_err());
        assert_eq!(ctl.lock(), &LockState::default());
    }
}
