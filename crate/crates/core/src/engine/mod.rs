//! Discrete-event core: event queue, processor-sharing CPU model, checkpoint
//! overhead, the event loop itself and run metrics.

mod alloc;
mod event;
mod eventlog;
mod metrics;
mod overhead;
mod sim;

pub use alloc::allocate_cpu;
pub use event::{EventKind, EventQueue, SimEvent};
pub use eventlog::{EventLog, LogRecord};
pub use metrics::{average_completion, completion_time, makespan, JobRecord};
pub use overhead::{OverheadModel, OverheadSampler};
pub use sim::{advance, MigrationRecord, RunRecord, SimParams, Simulation, TimelinePoint};
