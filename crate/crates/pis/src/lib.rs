//! Deadlock-freedom checking for port-based interaction systems:
//! components with labeled-transition behaviors, ports with protocols
//! over disjoint action alphabets, and interactions that fire jointly.
//! The fast path decides deadlock freedom from per-port conformance,
//! the shape of the communication graph, and protocol pairs alone; the
//! oracle path explores the global product and is used to cross-check.

pub mod composition;
pub mod dot;
pub mod equivalence;
pub mod exec;
pub mod generate;
pub mod lts;
pub mod scaling;
pub mod system;
pub mod text;
pub mod topology;
pub mod verify;

pub use composition::{
    global_behavior, partial_behavior, port_behavior, ComposeError, Composite,
    DEFAULT_STATE_BUDGET,
};
pub use dot::{dot_comm_graph, dot_lts};
pub use equivalence::{branching_bisimilar, branching_partition, conforms, minimize, Partition};
pub use exec::Exec;
pub use scaling::{bench_scaling, bench_scaling_with, to_csv, ScalingError, ScalingRow};
pub use text::{parse_system, render_system, ParseIssue};
pub use lts::{ActionId, Label, Lts, LtsBuilder, LtsError, StateId};
pub use system::{
    ComponentId, Interaction, PortId, PortRef, QueryError, Severity, System, Violation,
};
pub use topology::{comm_graph, CommGraph, Vertex};
pub use verify::{
    check_oracle, check_oracle_with, check_theorem, check_theorem_with, component_pair_checks_with,
    cross_validate, cross_validate_with, pair_checks_with, replay_reaches_deadlock, CrossReport,
    Options, PairCheck, PreconditionFailure, Trace, Verdict, VerifyError,
};
