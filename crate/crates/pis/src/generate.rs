//! Fixture systems used across the test suite and the `gen`
//! subcommand, plus seeded random generators for LTSs and for whole
//! systems whose construction guarantees the checker's structural
//! preconditions.

use std::collections::{BTreeMap, BTreeSet};

use rand::Rng;
use thiserror::Error;

use crate::equivalence::minimize;
use crate::lts::{ActionId, Lts, LtsBuilder, StateId};
use crate::system::{ComponentId, Interaction, PortRef, System};

/// The pieces of a system, open for adjustment before assembly. Tests
/// use this to knock a fixture out of shape on purpose.
#[derive(Clone, Debug)]
pub struct SystemParts {
    pub name: String,
    pub components: BTreeSet<ComponentId>,
    pub alphabets: BTreeMap<PortRef, BTreeSet<ActionId>>,
    pub interactions: BTreeSet<Interaction>,
    pub behaviors: BTreeMap<ComponentId, Lts>,
    pub protocols: BTreeMap<PortRef, Lts>,
}

impl SystemParts {
    pub fn new(name: impl Into<String>) -> Self {
        SystemParts {
            name: name.into(),
            components: BTreeSet::new(),
            alphabets: BTreeMap::new(),
            interactions: BTreeSet::new(),
            behaviors: BTreeMap::new(),
            protocols: BTreeMap::new(),
        }
    }

    pub fn build(self) -> System {
        System::new(
            self.name,
            self.components,
            self.alphabets,
            self.interactions,
            self.behaviors,
            self.protocols,
        )
    }
}

#[derive(Debug, Error, Clone, Copy, PartialEq, Eq)]
#[error("a star system needs at least one border component")]
pub struct StarSizeError;

fn actions(names: &[&str]) -> BTreeSet<ActionId> {
    names.iter().map(|n| ActionId::new(*n)).collect()
}

/// One state named `name`, looping on every given label.
pub fn single_state_loop(name: &str, labels: &[&str]) -> Lts {
    let mut b = LtsBuilder::new();
    b.initial(name);
    for l in labels {
        b.act(name, l, name);
    }
    b.build().expect("loop builder output is well-formed")
}

/// The port's protocol as derived from the behavior: hide everything
/// the port does not own, then minimize.
fn derived_protocol(behavior: &Lts, alphabet: &BTreeSet<ActionId>) -> Lts {
    minimize(&behavior.hide(alphabet))
}

/// Two components in lockstep. Component `i` chooses between `a_i` and
/// `b_i` and then between `c_i` and `d_i`; component `j` offers the
/// complementary choices in the opposite order, so the joint run is
/// forced through the `a` and `c` handshakes forever.
pub fn generate_ex1_raw() -> SystemParts {
    let mut bi = LtsBuilder::new();
    bi.initial("s0")
        .act("s0", "a_i", "s1")
        .act("s0", "b_i", "s1")
        .act("s1", "c_i", "s0")
        .act("s1", "d_i", "s0");
    let bi = bi.build().expect("fixture builder output is well-formed");
    let mut bj = LtsBuilder::new();
    bj.initial("t0")
        .act("t0", "a_j", "t1")
        .act("t0", "d_j", "t1")
        .act("t1", "b_j", "t0")
        .act("t1", "c_j", "t0");
    let bj = bj.build().expect("fixture builder output is well-formed");

    let mut parts = SystemParts::new("ex1");
    parts.components = [ComponentId::new("i"), ComponentId::new("j")].into();
    parts.alphabets = [
        (PortRef::new("i", "p"), actions(&["a_i", "b_i", "c_i", "d_i"])),
        (PortRef::new("j", "q"), actions(&["a_j", "b_j", "c_j", "d_j"])),
    ]
    .into();
    parts.interactions = [
        Interaction::of(&["a_i", "a_j"]),
        Interaction::of(&["b_i", "b_j"]),
        Interaction::of(&["c_i", "c_j"]),
        Interaction::of(&["d_i", "d_j"]),
    ]
    .into();
    parts.protocols = [
        (PortRef::new("i", "p"), bi.clone()),
        (PortRef::new("j", "q"), bj.clone()),
    ]
    .into();
    parts.behaviors = [(ComponentId::new("i"), bi), (ComponentId::new("j"), bj)].into();
    parts
}

pub fn generate_ex1() -> System {
    generate_ex1_raw().build()
}

/// A middle component `m` with one port per border component, each
/// border synchronizing with its own middle action. Every protocol is a
/// single-state loop, so the pair products stay constant size while the
/// middle's behavior grows with `n`.
pub fn generate_star(n: usize) -> Result<System, StarSizeError> {
    if n == 0 {
        return Err(StarSizeError);
    }
    let mut parts = SystemParts::new(format!("star_{n}"));
    let m = ComponentId::new("m");
    parts.components.insert(m.clone());

    let mut middle = LtsBuilder::new();
    middle.initial("s");
    for k in 1..=n {
        middle.act("s", &format!("a_m_{k}"), "s");
    }
    let middle = middle.build().expect("fixture builder output is well-formed");

    for k in 1..=n {
        let hub_action = format!("a_m_{k}");
        let border_action = format!("a_{k}");
        let border = ComponentId::new(k.to_string());
        parts.components.insert(border.clone());

        let hub_port = PortRef::new("m", k.to_string());
        let hub_alphabet: BTreeSet<ActionId> = [ActionId::new(&hub_action)].into();
        parts
            .protocols
            .insert(hub_port.clone(), derived_protocol(&middle, &hub_alphabet));
        parts.alphabets.insert(hub_port, hub_alphabet);

        let border_port = PortRef::new(k.to_string(), "p");
        let border_alphabet: BTreeSet<ActionId> = [ActionId::new(&border_action)].into();
        let border_behavior = single_state_loop("t", &[&border_action]);
        parts.protocols.insert(
            border_port.clone(),
            derived_protocol(&border_behavior, &border_alphabet),
        );
        parts.alphabets.insert(border_port, border_alphabet);
        parts.behaviors.insert(border, border_behavior);

        parts
            .interactions
            .insert(Interaction::of(&[&hub_action, &border_action]));
    }
    parts.behaviors.insert(m, middle);
    Ok(parts.build())
}

/// Like the star, but every border walks a two-step cycle, so the
/// global state space doubles with each border while the pair products
/// stay at two states.
pub fn two_phase_star(n: usize) -> Result<System, StarSizeError> {
    if n == 0 {
        return Err(StarSizeError);
    }
    let mut parts = SystemParts::new(format!("twophase_{n}"));
    let m = ComponentId::new("m");
    parts.components.insert(m.clone());

    let mut middle = LtsBuilder::new();
    middle.initial("s");
    for k in 1..=n {
        middle.act("s", &format!("a_m_{k}"), "s");
        middle.act("s", &format!("b_m_{k}"), "s");
    }
    let middle = middle.build().expect("fixture builder output is well-formed");

    for k in 1..=n {
        let border = ComponentId::new(k.to_string());
        parts.components.insert(border.clone());

        let hub_port = PortRef::new("m", k.to_string());
        let hub_alphabet = actions(&[&format!("a_m_{k}"), &format!("b_m_{k}")]);
        parts
            .protocols
            .insert(hub_port.clone(), derived_protocol(&middle, &hub_alphabet));
        parts.alphabets.insert(hub_port, hub_alphabet);

        let border_port = PortRef::new(k.to_string(), "p");
        let border_alphabet = actions(&[&format!("a_{k}"), &format!("b_{k}")]);
        let mut walk = LtsBuilder::new();
        walk.initial("u0")
            .act("u0", &format!("a_{k}"), "u1")
            .act("u1", &format!("b_{k}"), "u0");
        let walk = walk.build().expect("fixture builder output is well-formed");
        parts.protocols.insert(
            border_port.clone(),
            derived_protocol(&walk, &border_alphabet),
        );
        parts.alphabets.insert(border_port, border_alphabet);
        parts.behaviors.insert(border, walk);

        parts
            .interactions
            .insert(Interaction::of(&[&format!("a_m_{k}"), &format!("a_{k}")]));
        parts
            .interactions
            .insert(Interaction::of(&[&format!("b_m_{k}"), &format!("b_{k}")]));
    }
    parts.behaviors.insert(m, middle);
    Ok(parts.build())
}

/// One component, one port, one self-looping action fired alone.
pub fn single_loop_system() -> System {
    let mut parts = SystemParts::new("solo");
    parts.components.insert(ComponentId::new("c"));
    parts
        .alphabets
        .insert(PortRef::new("c", "p"), actions(&["a"]));
    parts.interactions.insert(Interaction::of(&["a"]));
    parts
        .behaviors
        .insert(ComponentId::new("c"), single_state_loop("s", &["a"]));
    parts
        .protocols
        .insert(PortRef::new("c", "p"), single_state_loop("s", &["a"]));
    parts.build()
}

/// A middle port serving two border ports at once. Everything conforms,
/// the graph is even a tree, but `m.p` is linked to two peers.
pub fn shared_port_system() -> System {
    let mut parts = SystemParts::new("shared");
    for c in ["m", "l", "r"] {
        parts.components.insert(ComponentId::new(c));
    }
    parts
        .alphabets
        .insert(PortRef::new("m", "p"), actions(&["x1", "x2"]));
    parts.alphabets.insert(PortRef::new("l", "p"), actions(&["y"]));
    parts.alphabets.insert(PortRef::new("r", "p"), actions(&["z"]));
    parts.interactions.insert(Interaction::of(&["x1", "y"]));
    parts.interactions.insert(Interaction::of(&["x2", "z"]));
    parts
        .behaviors
        .insert(ComponentId::new("m"), single_state_loop("s", &["x1", "x2"]));
    parts
        .behaviors
        .insert(ComponentId::new("l"), single_state_loop("t", &["y"]));
    parts
        .behaviors
        .insert(ComponentId::new("r"), single_state_loop("u", &["z"]));
    parts
        .protocols
        .insert(PortRef::new("m", "p"), single_state_loop("s", &["x1", "x2"]));
    parts
        .protocols
        .insert(PortRef::new("l", "p"), single_state_loop("t", &["y"]));
    parts
        .protocols
        .insert(PortRef::new("r", "p"), single_state_loop("u", &["z"]));
    parts.build()
}

/// Three components handshaking around a cycle. Each port has exactly
/// one peer and every protocol conforms, but the graph has a loop.
pub fn ring_system() -> System {
    let mut parts = SystemParts::new("ring");
    let wiring = [("a", "b", "ab"), ("b", "c", "bc"), ("c", "a", "ca")];
    for (left, right, tag) in wiring {
        parts.components.insert(ComponentId::new(left));
        let out_action = format!("{tag}_{left}");
        let in_action = format!("{tag}_{right}");
        parts
            .alphabets
            .insert(PortRef::new(left, "r"), actions(&[&out_action]));
        parts
            .alphabets
            .insert(PortRef::new(right, "l"), actions(&[&in_action]));
        parts
            .interactions
            .insert(Interaction::of(&[&out_action, &in_action]));
        parts
            .protocols
            .insert(PortRef::new(left, "r"), single_state_loop("s", &[&out_action]));
        parts
            .protocols
            .insert(PortRef::new(right, "l"), single_state_loop("s", &[&in_action]));
    }
    for (left, _, tag) in wiring {
        let peer = wiring
            .iter()
            .find(|(_, right, _)| *right == left)
            .expect("every component receives one edge");
        parts.behaviors.insert(
            ComponentId::new(left),
            single_state_loop("s", &[&format!("{tag}_{left}"), &format!("{}_{left}", peer.2)]),
        );
    }
    parts.build()
}

/// Two components with no ports at all: two isolated graph vertices.
pub fn disconnected_system() -> System {
    let mut parts = SystemParts::new("apart");
    for c in ["x", "y"] {
        parts.components.insert(ComponentId::new(c));
        let mut b = LtsBuilder::new();
        b.initial("s");
        parts
            .behaviors
            .insert(ComponentId::new(c), b.build().expect("single state"));
    }
    parts.build()
}

/// One three-way interaction. Its three ports are pairwise linked, so
/// none of them is uniquely connected and the graph has a cycle.
pub fn triple_sync_system() -> System {
    let mut parts = SystemParts::new("triple");
    for c in ["a", "b", "c"] {
        parts.components.insert(ComponentId::new(c));
        let action = format!("x{c}");
        parts
            .alphabets
            .insert(PortRef::new(c, "p"), actions(&[&action]));
        parts
            .behaviors
            .insert(ComponentId::new(c), single_state_loop("s", &[&action]));
        parts
            .protocols
            .insert(PortRef::new(c, "p"), single_state_loop("s", &[&action]));
    }
    parts
        .interactions
        .insert(Interaction::of(&["xa", "xb", "xc"]));
    parts.build()
}

/// A star whose first border wants a two-step handshake while the
/// middle only ever offers the first step: that protocol pair gets
/// stuck even though the whole system can always keep running through
/// the second border.
pub fn pair_deadlock_system() -> System {
    let mut parts = SystemParts::new("stuckpair");
    let m = ComponentId::new("m");
    parts.components.insert(m.clone());
    parts.components.insert(ComponentId::new("1"));
    parts.components.insert(ComponentId::new("2"));

    let middle = single_state_loop("s", &["a_m_1", "a_m_2"]);
    let hub1 = PortRef::new("m", "1");
    let hub1_alphabet = actions(&["a_m_1", "b_m_1"]);
    parts
        .protocols
        .insert(hub1.clone(), derived_protocol(&middle, &hub1_alphabet));
    parts.alphabets.insert(hub1, hub1_alphabet);
    let hub2 = PortRef::new("m", "2");
    let hub2_alphabet = actions(&["a_m_2"]);
    parts
        .protocols
        .insert(hub2.clone(), derived_protocol(&middle, &hub2_alphabet));
    parts.alphabets.insert(hub2, hub2_alphabet);
    parts.behaviors.insert(m, middle);

    let mut walk = LtsBuilder::new();
    walk.initial("u0").act("u0", "a_1", "u1").act("u1", "b_1", "u0");
    let walk = walk.build().expect("fixture builder output is well-formed");
    let border1 = PortRef::new("1", "p");
    let border1_alphabet = actions(&["a_1", "b_1"]);
    parts
        .protocols
        .insert(border1.clone(), derived_protocol(&walk, &border1_alphabet));
    parts.alphabets.insert(border1, border1_alphabet);
    parts.behaviors.insert(ComponentId::new("1"), walk);

    let border2 = PortRef::new("2", "p");
    parts.alphabets.insert(border2.clone(), actions(&["a_2"]));
    parts
        .behaviors
        .insert(ComponentId::new("2"), single_state_loop("t", &["a_2"]));
    parts
        .protocols
        .insert(border2, single_state_loop("t", &["a_2"]));

    parts.interactions.insert(Interaction::of(&["a_m_1", "a_1"]));
    parts.interactions.insert(Interaction::of(&["b_m_1", "b_1"]));
    parts.interactions.insert(Interaction::of(&["a_m_2", "a_2"]));
    parts.build()
}

/// Two components whose single handshake runs once and then stops:
/// the pair check and the global walk find the same stuck state.
pub fn sink_pair_system() -> System {
    let mut parts = SystemParts::new("oneshot");
    parts.components.insert(ComponentId::new("x"));
    parts.components.insert(ComponentId::new("y"));
    parts.alphabets.insert(PortRef::new("x", "p"), actions(&["a"]));
    parts.alphabets.insert(PortRef::new("y", "q"), actions(&["b"]));
    parts.interactions.insert(Interaction::of(&["a", "b"]));

    let mut once = LtsBuilder::new();
    once.initial("v0").act("v0", "a", "v1");
    let once = once.build().expect("fixture builder output is well-formed");
    parts.protocols.insert(PortRef::new("x", "p"), once.clone());
    parts.behaviors.insert(ComponentId::new("x"), once);
    parts
        .behaviors
        .insert(ComponentId::new("y"), single_state_loop("w0", &["b"]));
    parts
        .protocols
        .insert(PortRef::new("y", "q"), single_state_loop("w0", &["b"]));
    parts.build()
}

/// A protocol whose internal step discards an option, so minimization
/// cannot remove it.
pub fn sticky_tau_system() -> System {
    let mut parts = SystemParts::new("sticky");
    parts.components.insert(ComponentId::new("c"));
    parts
        .alphabets
        .insert(PortRef::new("c", "p"), actions(&["a", "b"]));
    parts.interactions.insert(Interaction::of(&["a"]));
    parts.interactions.insert(Interaction::of(&["b"]));
    parts
        .behaviors
        .insert(ComponentId::new("c"), single_state_loop("s", &["a", "b"]));
    let mut proto = LtsBuilder::new();
    proto
        .initial("q0")
        .tau("q0", "q1")
        .act("q0", "b", "q0")
        .act("q1", "a", "q1");
    parts.protocols.insert(
        PortRef::new("c", "p"),
        proto.build().expect("fixture builder output is well-formed"),
    );
    parts.build()
}

/// A random LTS with up to `max_states` states over the given labels,
/// possibly with internal steps and with extra initial states.
pub fn random_lts(rng: &mut impl Rng, max_states: usize, labels: &[&str], allow_tau: bool) -> Lts {
    let n = rng.gen_range(1..=max_states.max(1));
    let mut b = LtsBuilder::new();
    b.initial("s0");
    for i in 1..n {
        b.state(format!("s{i}"));
        if rng.gen_bool(0.2) {
            b.initial(format!("s{i}"));
        }
    }
    for i in 0..n {
        for _ in 0..rng.gen_range(0..=2) {
            let to = format!("s{}", rng.gen_range(0..n));
            if allow_tau && (labels.is_empty() || rng.gen_bool(0.3)) {
                b.tau(format!("s{i}"), to);
            } else if !labels.is_empty() {
                b.act(format!("s{i}"), labels[rng.gen_range(0..labels.len())], to);
            }
        }
    }
    b.build().expect("random builder output is well-formed")
}

/// Bounds for `random_system`.
#[derive(Clone, Copy, Debug)]
pub struct RandomSystemConfig {
    pub max_components: usize,
    pub max_protocol_states: usize,
    pub max_port_actions: usize,
    /// Cap on each component's behavior size (the product of its port
    /// protocol sizes is reduced until it fits).
    pub max_behavior_states: usize,
}

impl Default for RandomSystemConfig {
    fn default() -> Self {
        RandomSystemConfig {
            max_components: 4,
            max_protocol_states: 3,
            max_port_actions: 2,
            max_behavior_states: 8,
        }
    }
}

/// Interleaving product: the parts run side by side without
/// synchronizing. Composite states are the part states joined with `-`;
/// a single part comes back unchanged.
fn interleave(lts_parts: &[&Lts]) -> Lts {
    use std::collections::VecDeque;

    let name = |tuple: &[&StateId]| -> String {
        tuple
            .iter()
            .map(|s| s.as_str())
            .collect::<Vec<_>>()
            .join("-")
    };

    let mut initial_tuples: Vec<Vec<&StateId>> = vec![Vec::new()];
    for part in lts_parts {
        let mut next = Vec::new();
        for prefix in &initial_tuples {
            for init in part.initials() {
                let mut row = prefix.clone();
                row.push(init);
                next.push(row);
            }
        }
        initial_tuples = next;
    }

    let mut b = LtsBuilder::new();
    let mut seen: BTreeSet<Vec<&StateId>> = BTreeSet::new();
    let mut queue: VecDeque<Vec<&StateId>> = VecDeque::new();
    for tuple in initial_tuples {
        b.initial(name(&tuple));
        if seen.insert(tuple.clone()) {
            queue.push_back(tuple);
        }
    }
    while let Some(tuple) = queue.pop_front() {
        for (k, part) in lts_parts.iter().enumerate() {
            for (label, target) in part.outgoing(tuple[k]) {
                let mut succ = tuple.clone();
                succ[k] = target;
                b.transition(name(&tuple), label.clone(), name(&succ));
                if seen.insert(succ.clone()) {
                    queue.push_back(succ);
                }
            }
        }
    }
    b.build().expect("interleaving of well-formed parts is well-formed")
}

/// A random system over a random component tree. Each tree edge becomes
/// a pair of linked ports with a fresh alphabet, each port follows a
/// random protocol in which every state keeps at least one move, each
/// behavior is the interleaving of the component's protocols, and each
/// stored protocol is the hidden behavior, minimized or not by a coin
/// flip. The communication graph is a tree, every port has exactly one
/// peer, and every protocol conforms by construction; protocol pairs
/// may still deadlock.
pub fn random_system(rng: &mut impl Rng, cfg: &RandomSystemConfig) -> System {
    let k = rng.gen_range(2..=cfg.max_components.max(2));
    let mut parts = SystemParts::new("random");
    for c in 0..k {
        parts.components.insert(ComponentId::new(format!("c{c}")));
    }

    // One port per edge endpoint, named after the edge.
    let mut ports_of: Vec<Vec<(PortRef, BTreeSet<ActionId>)>> = vec![Vec::new(); k];
    for v in 1..k {
        let parent = rng.gen_range(0..v);
        let edge = v - 1;
        for (owner, side) in [(parent, "l"), (v, "r")] {
            let port = PortRef::new(format!("c{owner}"), format!("e{edge}"));
            let size = rng.gen_range(1..=cfg.max_port_actions.max(1));
            let alphabet: BTreeSet<ActionId> = (0..size)
                .map(|t| ActionId::new(format!("x{edge}{side}{t}")))
                .collect();
            parts.alphabets.insert(port.clone(), alphabet.clone());
            ports_of[owner].push((port, alphabet));
        }
        let left: Vec<ActionId> = ports_of[parent].last().unwrap().1.iter().cloned().collect();
        let right: Vec<ActionId> = ports_of[v].last().unwrap().1.iter().cloned().collect();
        for a in &left {
            let b = &right[rng.gen_range(0..right.len())];
            parts
                .interactions
                .insert(Interaction::new([a.clone(), b.clone()].into()).unwrap());
        }
        for b in &right {
            let a = &left[rng.gen_range(0..left.len())];
            parts
                .interactions
                .insert(Interaction::new([a.clone(), b.clone()].into()).unwrap());
        }
    }

    for (c, owned) in ports_of.iter().enumerate() {
        let mut sizes: Vec<usize> = owned
            .iter()
            .map(|_| rng.gen_range(1..=cfg.max_protocol_states.max(1)))
            .collect();
        while sizes.iter().product::<usize>() > cfg.max_behavior_states.max(1) {
            let widest = sizes
                .iter()
                .enumerate()
                .max_by_key(|(_, s)| **s)
                .map(|(i, _)| i)
                .expect("components in a tree own at least one port");
            sizes[widest] -= 1;
        }

        let mut protos: Vec<Lts> = Vec::with_capacity(owned.len());
        for ((_, alphabet), &size) in owned.iter().zip(&sizes) {
            protos.push(random_protocol(rng, size, alphabet));
        }
        let behavior = interleave(&protos.iter().collect::<Vec<_>>());
        for (port, alphabet) in owned {
            let hidden = behavior.hide(alphabet);
            let stored = if rng.gen_bool(0.5) { minimize(&hidden) } else { hidden };
            parts.protocols.insert(port.clone(), stored);
        }
        parts
            .behaviors
            .insert(ComponentId::new(format!("c{c}")), behavior);
    }
    parts.build()
}

/// A protocol shape: every state keeps at least one outgoing move and
/// every action of the alphabet occurs somewhere.
fn random_protocol(rng: &mut impl Rng, size: usize, alphabet: &BTreeSet<ActionId>) -> Lts {
    let actions: Vec<&ActionId> = alphabet.iter().collect();
    let mut b = LtsBuilder::new();
    b.initial("q0");
    if size > 1 && rng.gen_bool(0.15) {
        b.initial(format!("q{}", rng.gen_range(1..size)));
    }
    let mut used: BTreeSet<usize> = BTreeSet::new();
    for i in 0..size {
        for _ in 0..rng.gen_range(1..=2) {
            let a = rng.gen_range(0..actions.len());
            used.insert(a);
            b.act(
                format!("q{i}"),
                actions[a].as_str(),
                format!("q{}", rng.gen_range(0..size)),
            );
        }
    }
    for (a, action) in actions.iter().enumerate() {
        if !used.contains(&a) {
            b.act(
                format!("q{}", rng.gen_range(0..size)),
                action.as_str(),
                format!("q{}", rng.gen_range(0..size)),
            );
        }
    }
    b.build().expect("random protocol is well-formed")
}
