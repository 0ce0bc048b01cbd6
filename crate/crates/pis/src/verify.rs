//! Deadlock-freedom checking. `check_theorem` decides from local
//! evidence only: protocol conformance per port, shape conditions on
//! the communication graph, and deadlock freedom of each linked
//! protocol pair. It never builds a composite larger than two
//! protocols. `check_oracle` walks the global state space instead and
//! is the ground truth the fast path is validated against.

use std::collections::{BTreeMap, BTreeSet, VecDeque};
use std::fmt;

use thiserror::Error;

use crate::composition::{self, render_interaction, ComposeError, DEFAULT_STATE_BUDGET};
use crate::equivalence::{conforms, minimize};
use crate::exec::{run_batch, Exec};
use crate::lts::{ActionId, Label, Lts, StateId};
use crate::system::{ComponentId, PortRef, System, Violation};
use crate::topology::comm_graph;

/// A run prefix, one joint action set per step.
pub type Trace = Vec<BTreeSet<ActionId>>;

pub fn format_trace(trace: &Trace) -> String {
    if trace.is_empty() {
        return "the initial state".into();
    }
    trace
        .iter()
        .map(|step| render_interaction(step).to_string())
        .collect::<Vec<_>>()
        .join(" ")
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum PreconditionFailure {
    NotTreeLike,
    PortNotUniquelyConnected(PortRef),
    PortNotConform(PortRef),
    ProtocolNotTauFree(PortRef),
    PairDeadlock {
        left: PortRef,
        right: PortRef,
        trace: Trace,
    },
}

impl fmt::Display for PreconditionFailure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            PreconditionFailure::NotTreeLike => {
                write!(f, "communication graph is not tree-like")
            }
            PreconditionFailure::PortNotUniquelyConnected(p) => {
                write!(f, "port `{p}` is linked to more than one peer port")
            }
            PreconditionFailure::PortNotConform(p) => {
                write!(
                    f,
                    "behavior hidden to port `{p}` is not branching-bisimilar to its protocol"
                )
            }
            PreconditionFailure::ProtocolNotTauFree(p) => {
                write!(
                    f,
                    "protocol of port `{p}` keeps internal steps after minimization"
                )
            }
            PreconditionFailure::PairDeadlock { left, right, trace } => {
                write!(
                    f,
                    "protocol pair `{left}` / `{right}` can deadlock after {}",
                    format_trace(trace)
                )
            }
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Verdict {
    /// Every local precondition holds, so the composition result
    /// applies and the system cannot deadlock.
    DeadlockFreeByTheorem,
    /// The exhaustive search finished without finding a stuck state.
    DeadlockFreeByOracle,
    /// A reachable stuck state, with a shortest run leading to it.
    DeadlockWitness { trace: Trace },
    /// The compositional argument does not apply; every failed
    /// precondition is listed.
    Inapplicable { failures: Vec<PreconditionFailure> },
}

impl Verdict {
    pub fn is_deadlock_free(&self) -> bool {
        matches!(
            self,
            Verdict::DeadlockFreeByTheorem | Verdict::DeadlockFreeByOracle
        )
    }
}

impl fmt::Display for Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Verdict::DeadlockFreeByTheorem => {
                write!(f, "deadlock-free (compositional check)")
            }
            Verdict::DeadlockFreeByOracle => {
                write!(f, "deadlock-free (exhaustive search)")
            }
            Verdict::DeadlockWitness { trace } => {
                write!(f, "deadlock after {}", format_trace(trace))
            }
            Verdict::Inapplicable { failures } => {
                write!(f, "compositional check not applicable:")?;
                for failure in failures {
                    write!(f, "\n  {failure}")?;
                }
                Ok(())
            }
        }
    }
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum VerifyError {
    #[error("system fails validation:\n{}", render_violations(.0))]
    InvalidSystem(Vec<Violation>),
    #[error(transparent)]
    Compose(#[from] ComposeError),
}

fn render_violations(violations: &[Violation]) -> String {
    violations
        .iter()
        .map(|v| format!("  {v}"))
        .collect::<Vec<_>>()
        .join("\n")
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Options {
    /// Cap on states per composite.
    pub budget: usize,
    pub exec: Exec,
}

impl Default for Options {
    fn default() -> Self {
        Options {
            budget: DEFAULT_STATE_BUDGET,
            exec: Exec::default(),
        }
    }
}

/// Outcome of one protocol-pair composition.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PairCheck {
    pub left: PortRef,
    pub right: PortRef,
    pub deadlock_free: bool,
    pub composite_states: usize,
    pub composite_transitions: usize,
    pub witness: Option<Trace>,
}

impl PairCheck {
    pub fn cost(&self) -> u64 {
        self.composite_states as u64 + self.composite_transitions as u64
    }
}

/// Outcome of one component-pair composition, the non-compositional
/// baseline used for scaling comparisons.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ComponentPairCheck {
    pub left: ComponentId,
    pub right: ComponentId,
    pub deadlock_free: bool,
    pub composite_states: usize,
    pub composite_transitions: usize,
}

impl ComponentPairCheck {
    pub fn cost(&self) -> u64 {
        self.composite_states as u64 + self.composite_transitions as u64
    }
}

fn validated(system: &System) -> Result<(), VerifyError> {
    let errors: Vec<Violation> = system
        .validate()
        .into_iter()
        .filter(|v| v.severity().is_error())
        .collect();
    if errors.is_empty() {
        Ok(())
    } else {
        Err(VerifyError::InvalidSystem(errors))
    }
}

/// Breadth-first shortest path from an initial state to a state with no
/// outgoing transitions. Deterministic: states are expanded in sorted
/// order within each layer.
fn shortest_trace_to_sink(lts: &Lts) -> Option<Vec<Label>> {
    let mut parent: BTreeMap<&StateId, (&StateId, &Label)> = BTreeMap::new();
    let mut seen: BTreeSet<&StateId> = lts.initials().collect();
    let mut queue: VecDeque<&StateId> = lts.initials().collect();
    while let Some(state) = queue.pop_front() {
        if !lts.has_outgoing(state) {
            let mut labels = Vec::new();
            let mut cursor = state;
            while let Some((prev, label)) = parent.get(cursor) {
                labels.push((*label).clone());
                cursor = prev;
            }
            labels.reverse();
            return Some(labels);
        }
        for (label, target) in lts.outgoing(state) {
            if seen.insert(target) {
                parent.insert(target, (state, label));
                queue.push_back(target);
            }
        }
    }
    None
}

fn decode_trace(composite: &composition::Composite, labels: &[Label]) -> Trace {
    labels
        .iter()
        .map(|l| composite.decode(l).cloned().unwrap_or_default())
        .collect()
}

/// Follows a trace from the initial states and reports whether a stuck
/// state is reachable at its end. An empty step stands for an internal
/// move.
pub fn replay_reaches_deadlock(lts: &Lts, trace: &Trace) -> bool {
    let mut current: BTreeSet<&StateId> = lts.initials().collect();
    for step in trace {
        let label = if step.is_empty() {
            Label::Tau
        } else {
            render_interaction(step)
        };
        let mut next: BTreeSet<&StateId> = BTreeSet::new();
        for state in &current {
            for (l, target) in lts.outgoing(state) {
                if *l == label {
                    next.insert(target);
                }
            }
        }
        if next.is_empty() {
            return false;
        }
        current = next;
    }
    current.iter().any(|s| !lts.has_outgoing(s))
}

fn pair_check(
    system: &System,
    left: PortRef,
    right: PortRef,
    budget: usize,
) -> Result<PairCheck, ComposeError> {
    let ports: BTreeSet<PortRef> = [left.clone(), right.clone()].into();
    let composite = composition::port_behavior(system, &ports, budget)?;
    let witness = shortest_trace_to_sink(&composite.lts)
        .map(|labels| decode_trace(&composite, &labels));
    Ok(PairCheck {
        left,
        right,
        deadlock_free: witness.is_none(),
        composite_states: composite.lts.state_count(),
        composite_transitions: composite.lts.transition_count(),
        witness,
    })
}

fn minimized_protocols(system: &System, exec: Exec) -> BTreeMap<PortRef, Lts> {
    let ports: Vec<PortRef> = system.ports().cloned().collect();
    run_batch(exec, ports, |p| {
        let protocol = system
            .protocol(&p)
            .expect("validated systems have a protocol per port");
        (p.clone(), minimize(protocol))
    })
    .into_iter()
    .collect()
}

pub fn check_theorem(system: &System) -> Result<Verdict, VerifyError> {
    check_theorem_with(system, &Options::default())
}

pub fn check_theorem_with(system: &System, opts: &Options) -> Result<Verdict, VerifyError> {
    validated(system)?;
    let graph = comm_graph(system);
    let minimized = minimized_protocols(system, opts.exec);

    let mut failures: Vec<PreconditionFailure> = Vec::new();
    if !graph.is_tree_like() {
        failures.push(PreconditionFailure::NotTreeLike);
    }
    for p in system.ports() {
        if !graph
            .is_uniquely_connected(p)
            .expect("system ports are graph vertices")
        {
            failures.push(PreconditionFailure::PortNotUniquelyConnected(p.clone()));
        }
    }

    let ports: Vec<PortRef> = system.ports().cloned().collect();
    let conformance = run_batch(opts.exec, ports, |p| {
        let ok = conforms(system, &p).expect("validated systems answer conformance");
        (p, ok)
    });
    for (p, ok) in &conformance {
        if !ok {
            failures.push(PreconditionFailure::PortNotConform(p.clone()));
        }
    }
    for (p, lts) in &minimized {
        if !lts.is_tau_free() {
            failures.push(PreconditionFailure::ProtocolNotTauFree(p.clone()));
        }
    }
    if !failures.is_empty() {
        return Ok(Verdict::Inapplicable { failures });
    }

    let reduced = system.with_protocols(minimized);
    let budget = opts.budget;
    let checks: Result<Vec<PairCheck>, ComposeError> = run_batch(
        opts.exec,
        graph.port_port_edges(),
        |(left, right)| pair_check(&reduced, left, right, budget),
    )
    .into_iter()
    .collect();
    for check in checks? {
        if !check.deadlock_free {
            failures.push(PreconditionFailure::PairDeadlock {
                left: check.left,
                right: check.right,
                trace: check.witness.unwrap_or_default(),
            });
        }
    }
    if failures.is_empty() {
        Ok(Verdict::DeadlockFreeByTheorem)
    } else {
        Ok(Verdict::Inapplicable { failures })
    }
}

/// Runs only the pair phase: minimize every protocol, then compose each
/// linked pair. Used for cost measurements and reporting.
pub fn pair_checks_with(system: &System, opts: &Options) -> Result<Vec<PairCheck>, VerifyError> {
    validated(system)?;
    let graph = comm_graph(system);
    let minimized = minimized_protocols(system, opts.exec);
    let reduced = system.with_protocols(minimized);
    let budget = opts.budget;
    let checks: Result<Vec<PairCheck>, ComposeError> = run_batch(
        opts.exec,
        graph.port_port_edges(),
        |(left, right)| pair_check(&reduced, left, right, budget),
    )
    .into_iter()
    .collect();
    Ok(checks?)
}

/// The brute-force baseline: for every port-port edge, compose the full
/// behaviors of the two owning components.
pub fn component_pair_checks_with(
    system: &System,
    opts: &Options,
) -> Result<Vec<ComponentPairCheck>, VerifyError> {
    validated(system)?;
    let graph = comm_graph(system);
    let budget = opts.budget;
    let checks: Result<Vec<ComponentPairCheck>, ComposeError> = run_batch(
        opts.exec,
        graph.port_port_edges(),
        |(left, right)| {
            let left = left.component.clone();
            let right = right.component.clone();
            let components: BTreeSet<ComponentId> =
                [left.clone(), right.clone()].into();
            let composite = composition::partial_behavior(system, &components, budget)?;
            Ok(ComponentPairCheck {
                left,
                right,
                deadlock_free: shortest_trace_to_sink(&composite.lts).is_none(),
                composite_states: composite.lts.state_count(),
                composite_transitions: composite.lts.transition_count(),
            })
        },
    )
    .into_iter()
    .collect();
    Ok(checks?)
}

pub fn check_oracle(system: &System) -> Result<Verdict, VerifyError> {
    check_oracle_with(system, &Options::default())
}

pub fn check_oracle_with(system: &System, opts: &Options) -> Result<Verdict, VerifyError> {
    validated(system)?;
    let composite = composition::global_behavior(system, opts.budget)?;
    match shortest_trace_to_sink(&composite.lts) {
        Some(labels) => Ok(Verdict::DeadlockWitness {
            trace: decode_trace(&composite, &labels),
        }),
        None => Ok(Verdict::DeadlockFreeByOracle),
    }
}

/// Both verdicts side by side. `oracle` is `None` when the global walk
/// ran out of budget; `soundness_violation` is set when the fast path
/// claims deadlock freedom but the oracle found a witness.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CrossReport {
    pub theorem: Verdict,
    pub oracle: Option<Verdict>,
    pub soundness_violation: bool,
}

pub fn cross_validate(system: &System) -> Result<CrossReport, VerifyError> {
    cross_validate_with(system, &Options::default())
}

pub fn cross_validate_with(system: &System, opts: &Options) -> Result<CrossReport, VerifyError> {
    let theorem = check_theorem_with(system, opts)?;
    let oracle = match check_oracle_with(system, opts) {
        Ok(verdict) => Some(verdict),
        Err(VerifyError::Compose(ComposeError::BudgetExceeded { .. })) => None,
        Err(e) => return Err(e),
    };
    let soundness_violation = matches!(theorem, Verdict::DeadlockFreeByTheorem)
        && matches!(oracle, Some(Verdict::DeadlockWitness { .. }));
    Ok(CrossReport {
        theorem,
        oracle,
        soundness_violation,
    })
}
