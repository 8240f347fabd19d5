//! Consumers of presence transitions: a smart-lock controller and an
//! append-only JSON-lines sink.

mod lock;
mod sink;

pub use lock::{
    apply_transition, Command, CommandRecord, LockController, LockPolicy, LockState, LockStatus,
};
pub use sink::{EventSink, FileSink, MemorySink, Receipt, SinkError};
