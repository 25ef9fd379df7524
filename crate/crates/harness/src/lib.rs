//! Measurement harness for the history-independent two-choice allocators:
//! workload generation, trace replay with recourse and overload metrics,
//! parallel-worlds instrumentation, verification suites, and report output.

pub mod replay;
pub mod report;
pub mod stats;
pub mod verify;
pub mod workload;
pub mod worlds;

pub use replay::{replay_trial, run_workload, RunReport};
pub use workload::{generate_trace, AllocatorKind, ChurnMode, Trace, TraceOp, WorkloadSpec};
pub use worlds::{two_worlds, WorldsReport};
