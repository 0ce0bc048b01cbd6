//! Finite labeled transition systems, the carrier for behaviors, port
//! protocols, and everything composition produces.

use std::collections::{BTreeMap, BTreeSet, VecDeque};
use std::fmt;

use thiserror::Error;

/// Name of a visible action. Action names are globally unique across a
/// system; `tau` is reserved and never a valid action name.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct ActionId(String);

impl ActionId {
    pub fn new(name: impl Into<String>) -> Self {
        ActionId(name.into())
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl fmt::Display for ActionId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl From<&str> for ActionId {
    fn from(s: &str) -> Self {
        ActionId::new(s)
    }
}

/// Transition label: either the internal step `tau` or a visible action.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Label {
    Tau,
    Visible(ActionId),
}

impl Label {
    pub fn visible(name: impl Into<String>) -> Self {
        Label::Visible(ActionId::new(name))
    }

    pub fn is_tau(&self) -> bool {
        matches!(self, Label::Tau)
    }

    pub fn action(&self) -> Option<&ActionId> {
        match self {
            Label::Tau => None,
            Label::Visible(a) => Some(a),
        }
    }
}

impl fmt::Display for Label {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Label::Tau => f.write_str("tau"),
            Label::Visible(a) => write!(f, "{a}"),
        }
    }
}

/// Name of a state. Opaque, scoped to its own LTS; composed states get
/// canonically rendered tuple names like `(s0,t1)`.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct StateId(String);

impl StateId {
    pub fn new(name: impl Into<String>) -> Self {
        StateId(name.into())
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl fmt::Display for StateId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl From<&str> for StateId {
    fn from(s: &str) -> Self {
        StateId::new(s)
    }
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum LtsError {
    #[error("initial state set is empty")]
    NoInitialStates,
    #[error("initial state `{0}` is not a state of the LTS")]
    UnknownInitialState(StateId),
    #[error("transition endpoint `{0}` is not a state of the LTS")]
    UnknownEndpoint(StateId),
    #[error("transition label `{0}` is not in the label set")]
    UnknownLabel(Label),
}

/// A finite LTS: states, labels, a transition relation (a set, so
/// duplicates collapse), and a nonempty set of initial states.
///
/// The declared label set may be larger than the set of labels that
/// actually occur on transitions; operations that rebuild an LTS
/// (hiding, minimization, composition) emit only occurring labels.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Lts {
    states: BTreeSet<StateId>,
    labels: BTreeSet<Label>,
    out: BTreeMap<StateId, BTreeSet<(Label, StateId)>>,
    initials: BTreeSet<StateId>,
    transition_count: usize,
}

impl Lts {
    /// Builds an LTS, checking that initials are nonempty and that every
    /// transition uses declared states and labels.
    pub fn new(
        states: BTreeSet<StateId>,
        labels: BTreeSet<Label>,
        transitions: BTreeSet<(StateId, Label, StateId)>,
        initials: BTreeSet<StateId>,
    ) -> Result<Self, LtsError> {
        if initials.is_empty() {
            return Err(LtsError::NoInitialStates);
        }
        if let Some(s) = initials.iter().find(|s| !states.contains(*s)) {
            return Err(LtsError::UnknownInitialState(s.clone()));
        }
        let mut out: BTreeMap<StateId, BTreeSet<(Label, StateId)>> = BTreeMap::new();
        let mut transition_count = 0;
        for (from, label, to) in transitions {
            if !states.contains(&from) {
                return Err(LtsError::UnknownEndpoint(from));
            }
            if !states.contains(&to) {
                return Err(LtsError::UnknownEndpoint(to));
            }
            if !labels.contains(&label) {
                return Err(LtsError::UnknownLabel(label));
            }
            if out.entry(from).or_default().insert((label, to)) {
                transition_count += 1;
            }
        }
        Ok(Lts {
            states,
            labels,
            out,
            initials,
            transition_count,
        })
    }

    pub fn states(&self) -> impl Iterator<Item = &StateId> {
        self.states.iter()
    }

    pub fn state_count(&self) -> usize {
        self.states.len()
    }

    pub fn has_state(&self, s: &StateId) -> bool {
        self.states.contains(s)
    }

    pub fn labels(&self) -> impl Iterator<Item = &Label> {
        self.labels.iter()
    }

    pub fn label_set(&self) -> &BTreeSet<Label> {
        &self.labels
    }

    pub fn initials(&self) -> impl Iterator<Item = &StateId> {
        self.initials.iter()
    }

    pub fn initial_set(&self) -> &BTreeSet<StateId> {
        &self.initials
    }

    pub fn transition_count(&self) -> usize {
        self.transition_count
    }

    pub fn transitions(&self) -> impl Iterator<Item = (&StateId, &Label, &StateId)> {
        self.out
            .iter()
            .flat_map(|(from, succs)| succs.iter().map(move |(l, to)| (from, l, to)))
    }

    /// Outgoing transitions of one state, in canonical label order.
    pub fn outgoing(&self, s: &StateId) -> impl Iterator<Item = (&Label, &StateId)> {
        self.out
            .get(s)
            .into_iter()
            .flat_map(|succs| succs.iter().map(|(l, t)| (l, t)))
    }

    pub fn has_outgoing(&self, s: &StateId) -> bool {
        self.out.get(s).is_some_and(|succs| !succs.is_empty())
    }

    pub fn is_tau_free(&self) -> bool {
        self.transitions().all(|(_, l, _)| !l.is_tau())
    }

    /// States reachable from the initial states.
    pub fn reachable_states(&self) -> BTreeSet<StateId> {
        let mut seen: BTreeSet<StateId> = self.initials.clone();
        let mut queue: VecDeque<StateId> = self.initials.iter().cloned().collect();
        while let Some(s) = queue.pop_front() {
            for (_, to) in self.outgoing(&s) {
                if seen.insert(to.clone()) {
                    queue.push_back(to.clone());
                }
            }
        }
        seen
    }

    /// True when every reachable state has at least one outgoing
    /// transition. Unreachable sink states do not count.
    pub fn is_deadlock_free(&self) -> bool {
        self.reachable_states().iter().all(|s| self.has_outgoing(s))
    }

    /// Relabels every transition whose action is outside `keep` (and every
    /// existing tau) to tau. States and initials are untouched; the label
    /// set is recomputed from the transitions that remain, so it contains
    /// exactly the kept actions that occur, plus tau if any step became
    /// internal.
    pub fn hide(&self, keep: &BTreeSet<ActionId>) -> Lts {
        let transitions: BTreeSet<(StateId, Label, StateId)> = self
            .transitions()
            .map(|(from, label, to)| {
                let label = match label {
                    Label::Visible(a) if keep.contains(a) => label.clone(),
                    _ => Label::Tau,
                };
                (from.clone(), label, to.clone())
            })
            .collect();
        let labels = transitions.iter().map(|(_, l, _)| l.clone()).collect();
        Lts::new(self.states.clone(), labels, transitions, self.initials.clone())
            .expect("hiding preserves LTS well-formedness")
    }
}

/// Incremental construction; infers the state and label sets from what
/// the transitions and initial states mention.
#[derive(Default, Debug)]
pub struct LtsBuilder {
    states: BTreeSet<StateId>,
    labels: BTreeSet<Label>,
    transitions: BTreeSet<(StateId, Label, StateId)>,
    initials: BTreeSet<StateId>,
}

impl LtsBuilder {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn state(&mut self, s: impl Into<String>) -> &mut Self {
        self.states.insert(StateId::new(s));
        self
    }

    pub fn initial(&mut self, s: impl Into<String>) -> &mut Self {
        let s = StateId::new(s);
        self.states.insert(s.clone());
        self.initials.insert(s);
        self
    }

    pub fn transition(&mut self, from: impl Into<String>, label: Label, to: impl Into<String>) -> &mut Self {
        let from = StateId::new(from);
        let to = StateId::new(to);
        self.states.insert(from.clone());
        self.states.insert(to.clone());
        self.labels.insert(label.clone());
        self.transitions.insert((from, label, to));
        self
    }

    /// Shorthand for a visible transition.
    pub fn act(&mut self, from: impl Into<String>, action: &str, to: impl Into<String>) -> &mut Self {
        self.transition(from, Label::visible(action), to)
    }

    pub fn tau(&mut self, from: impl Into<String>, to: impl Into<String>) -> &mut Self {
        self.transition(from, Label::Tau, to)
    }

    pub fn build(&self) -> Result<Lts, LtsError> {
        Lts::new(
            self.states.clone(),
            self.labels.clone(),
            self.transitions.clone(),
            self.initials.clone(),
        )
    }
}
