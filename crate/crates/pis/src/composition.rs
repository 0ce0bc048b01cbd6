//! Synchronized products: the global behavior over all components, the
//! partial behavior of a component subset, and the protocol product of a
//! port subset. All three are built on the fly from the initial states,
//! so only reachable composite states are ever materialized, guarded by
//! a state budget.

use std::collections::{BTreeMap, BTreeSet, HashMap, VecDeque};

use thiserror::Error;

use crate::lts::{ActionId, Label, Lts, StateId};
use crate::system::{ComponentId, PortRef, QueryError, System};

/// Default cap on composite states per composition.
pub const DEFAULT_STATE_BUDGET: usize = 1_000_000;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ComposeError {
    #[error("composite state budget of {budget} exceeded")]
    BudgetExceeded { budget: usize },
    #[error("cannot compose an empty selection")]
    EmptySelection,
    #[error("component `{0}` has no behavior")]
    MissingBehavior(ComponentId),
    #[error("port `{0}` has no protocol")]
    MissingProtocol(PortRef),
    #[error(transparent)]
    Query(#[from] QueryError),
}

/// A composed LTS together with the meaning of its labels: each visible
/// composite label is the canonical rendering of a sub-interaction, and
/// `label_actions` maps it back to the action set.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Composite {
    pub lts: Lts,
    pub label_actions: BTreeMap<Label, BTreeSet<ActionId>>,
}

impl Composite {
    /// states + transitions; the work metric used for scaling reports.
    pub fn size(&self) -> u64 {
        self.lts.state_count() as u64 + self.lts.transition_count() as u64
    }

    pub fn decode(&self, label: &Label) -> Option<&BTreeSet<ActionId>> {
        self.label_actions.get(label)
    }
}

/// Canonical label for a jointly executed action set: `{a,b}` with the
/// actions in sorted order.
pub fn render_interaction(actions: &BTreeSet<ActionId>) -> Label {
    let mut s = String::from("{");
    for (i, a) in actions.iter().enumerate() {
        if i > 0 {
            s.push(',');
        }
        s.push_str(a.as_str());
    }
    s.push('}');
    Label::visible(s)
}

/// Canonical name for a composite state: the participant states in
/// participant order, `(s,t)`.
fn render_tuple(parts: &[Participant<'_>], tuple: &[u32]) -> StateId {
    let mut s = String::from("(");
    for (k, &i) in tuple.iter().enumerate() {
        if k > 0 {
            s.push(',');
        }
        s.push_str(parts[k].states[i as usize].as_str());
    }
    s.push(')');
    StateId::new(s)
}

struct Participant<'a> {
    states: Vec<&'a StateId>,
    initials: Vec<u32>,
    /// per state, per action: successor state indices
    moves: Vec<BTreeMap<&'a ActionId, Vec<u32>>>,
    /// per state: tau successor state indices
    tau_moves: Vec<Vec<u32>>,
}

impl<'a> Participant<'a> {
    fn index(lts: &'a Lts) -> Self {
        let states: Vec<&StateId> = lts.states().collect();
        let index: BTreeMap<&StateId, u32> =
            states.iter().enumerate().map(|(i, s)| (*s, i as u32)).collect();
        let mut moves: Vec<BTreeMap<&ActionId, Vec<u32>>> = vec![BTreeMap::new(); states.len()];
        let mut tau_moves: Vec<Vec<u32>> = vec![Vec::new(); states.len()];
        for (from, label, to) in lts.transitions() {
            let f = index[from] as usize;
            let t = index[to];
            match label.action() {
                Some(a) => moves[f].entry(a).or_default().push(t),
                None => tau_moves[f].push(t),
            }
        }
        let initials = lts.initials().map(|s| index[s]).collect();
        Participant { states, initials, moves, tau_moves }
    }
}

/// A composite label: the actions it stands for and, per participant,
/// the single action that participant must fire (None = stay put).
struct LabelSpec {
    rendered: Label,
    actions: BTreeSet<ActionId>,
    shares: Vec<Option<ActionId>>,
}

fn cartesian<T: Clone>(lists: &[Vec<T>]) -> Vec<Vec<T>> {
    let mut acc: Vec<Vec<T>> = vec![Vec::new()];
    for list in lists {
        let mut next = Vec::with_capacity(acc.len() * list.len());
        for prefix in &acc {
            for item in list {
                let mut row = prefix.clone();
                row.push(item.clone());
                next.push(row);
            }
        }
        acc = next;
    }
    acc
}

/// Shared product construction. `tau_interleave` adds, for every
/// participant tau step, a composite tau step that moves only that
/// participant.
fn compose(
    parts: Vec<Participant<'_>>,
    specs: Vec<LabelSpec>,
    tau_interleave: bool,
    budget: usize,
) -> Result<Composite, ComposeError> {
    let initial_tuples: Vec<Vec<u32>> = cartesian(
        &parts.iter().map(|p| p.initials.clone()).collect::<Vec<_>>(),
    );

    let mut seen: HashMap<Vec<u32>, ()> = HashMap::new();
    let mut queue: VecDeque<Vec<u32>> = VecDeque::new();
    for tuple in &initial_tuples {
        if seen.insert(tuple.clone(), ()).is_none() {
            if seen.len() > budget {
                return Err(ComposeError::BudgetExceeded { budget });
            }
            queue.push_back(tuple.clone());
        }
    }

    let mut transitions: BTreeSet<(StateId, Label, StateId)> = BTreeSet::new();
    let mut states: BTreeSet<StateId> = BTreeSet::new();
    let mut label_actions: BTreeMap<Label, BTreeSet<ActionId>> = BTreeMap::new();

    while let Some(tuple) = queue.pop_front() {
        let from = render_tuple(&parts, &tuple);
        states.insert(from.clone());

        let push = |succ: Vec<u32>,
                        label: Label,
                        queue: &mut VecDeque<Vec<u32>>,
                        seen: &mut HashMap<Vec<u32>, ()>,
                        transitions: &mut BTreeSet<(StateId, Label, StateId)>|
         -> Result<(), ComposeError> {
            let to = render_tuple(&parts, &succ);
            transitions.insert((from.clone(), label, to));
            if seen.insert(succ.clone(), ()).is_none() {
                if seen.len() > budget {
                    return Err(ComposeError::BudgetExceeded { budget });
                }
                queue.push_back(succ);
            }
            Ok(())
        };

        for spec in &specs {
            let mut targets: Vec<Vec<u32>> = Vec::with_capacity(parts.len());
            let mut blocked = false;
            for (k, share) in spec.shares.iter().enumerate() {
                match share {
                    None => targets.push(vec![tuple[k]]),
                    Some(action) => {
                        match parts[k].moves[tuple[k] as usize].get(action) {
                            Some(succs) if !succs.is_empty() => targets.push(succs.clone()),
                            _ => {
                                blocked = true;
                                break;
                            }
                        }
                    }
                }
            }
            if blocked {
                continue;
            }
            label_actions
                .entry(spec.rendered.clone())
                .or_insert_with(|| spec.actions.clone());
            for succ in cartesian(&targets) {
                push(succ, spec.rendered.clone(), &mut queue, &mut seen, &mut transitions)?;
            }
        }

        if tau_interleave {
            for k in 0..parts.len() {
                for &t in &parts[k].tau_moves[tuple[k] as usize] {
                    let mut succ = tuple.clone();
                    succ[k] = t;
                    push(succ, Label::Tau, &mut queue, &mut seen, &mut transitions)?;
                }
            }
        }
    }

    let labels: BTreeSet<Label> = transitions.iter().map(|(_, l, _)| l.clone()).collect();
    label_actions.retain(|l, _| labels.contains(l));
    let initials: BTreeSet<StateId> = initial_tuples
        .iter()
        .map(|t| render_tuple(&parts, t))
        .collect();
    let lts = Lts::new(states, labels, transitions, initials)
        .expect("composition produces a well-formed LTS");
    Ok(Composite { lts, label_actions })
}

/// Projects the system's interactions onto a family of alphabets and
/// keeps the distinct nonempty shares, each with its per-participant
/// action. A participant owning two actions of one interaction never
/// happens in a valid system; such a share is treated as blocked.
fn label_specs(system: &System, alphabets: &[BTreeSet<ActionId>]) -> Vec<LabelSpec> {
    let scope: BTreeSet<&ActionId> = alphabets.iter().flatten().collect();
    let mut decoded: BTreeSet<BTreeSet<ActionId>> = BTreeSet::new();
    for alpha in system.interactions() {
        let share: BTreeSet<ActionId> = alpha
            .actions()
            .iter()
            .filter(|a| scope.contains(*a))
            .cloned()
            .collect();
        if !share.is_empty() {
            decoded.insert(share);
        }
    }
    decoded
        .into_iter()
        .filter_map(|share| {
            let mut shares = Vec::with_capacity(alphabets.len());
            for alphabet in alphabets {
                let mine: Vec<&ActionId> = share.iter().filter(|a| alphabet.contains(*a)).collect();
                match mine.len() {
                    0 => shares.push(None),
                    1 => shares.push(Some(mine[0].clone())),
                    _ => return None,
                }
            }
            Some(LabelSpec {
                rendered: render_interaction(&share),
                actions: share,
                shares,
            })
        })
        .collect()
}

/// The behavior of the whole system: every component steps jointly on
/// each interaction it shares.
pub fn global_behavior(system: &System, budget: usize) -> Result<Composite, ComposeError> {
    let components: BTreeSet<ComponentId> = system.components().cloned().collect();
    partial_behavior(system, &components, budget)
}

/// The behavior of a nonempty component subset, over the nonempty
/// projections of the interactions onto the subset's actions.
pub fn partial_behavior(
    system: &System,
    components: &BTreeSet<ComponentId>,
    budget: usize,
) -> Result<Composite, ComposeError> {
    if components.is_empty() {
        return Err(ComposeError::EmptySelection);
    }
    let mut parts = Vec::with_capacity(components.len());
    let mut alphabets = Vec::with_capacity(components.len());
    for c in components {
        if !system.has_component(c) {
            return Err(QueryError::UnknownComponent(c.clone()).into());
        }
        let behavior = system
            .behavior(c)
            .ok_or_else(|| ComposeError::MissingBehavior(c.clone()))?;
        parts.push(Participant::index(behavior));
        alphabets.push(system.component_alphabet(c));
    }
    let specs = label_specs(system, &alphabets);
    compose(parts, specs, false, budget)
}

/// The product of a nonempty port subset's protocols: joint steps on the
/// projected interactions, plus interleaved tau steps (exactly one
/// protocol moves internally, the rest stay put).
pub fn port_behavior(
    system: &System,
    ports: &BTreeSet<PortRef>,
    budget: usize,
) -> Result<Composite, ComposeError> {
    if ports.is_empty() {
        return Err(ComposeError::EmptySelection);
    }
    let mut parts = Vec::with_capacity(ports.len());
    let mut alphabets = Vec::with_capacity(ports.len());
    for p in ports {
        let alphabet = system
            .port_alphabet(p)
            .ok_or_else(|| QueryError::UnknownPort(p.clone()))?;
        let protocol = system
            .protocol(p)
            .ok_or_else(|| ComposeError::MissingProtocol(p.clone()))?;
        parts.push(Participant::index(protocol));
        alphabets.push(alphabet.clone());
    }
    let specs = label_specs(system, &alphabets);
    compose(parts, specs, true, budget)
}
