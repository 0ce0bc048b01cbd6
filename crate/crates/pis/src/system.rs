//! The system model: components with named ports, disjoint port
//! alphabets, multiway interactions, component behaviors, and per-port
//! protocols. Validation reports problems as data instead of failing on
//! the first one.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use thiserror::Error;

use crate::lts::{ActionId, Lts};

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct ComponentId(String);

impl ComponentId {
    pub fn new(name: impl Into<String>) -> Self {
        ComponentId(name.into())
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl fmt::Display for ComponentId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl From<&str> for ComponentId {
    fn from(s: &str) -> Self {
        ComponentId::new(s)
    }
}

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct PortId(String);

impl PortId {
    pub fn new(name: impl Into<String>) -> Self {
        PortId(name.into())
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl fmt::Display for PortId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

/// A port, addressed as `component.port` in surface syntax.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct PortRef {
    pub component: ComponentId,
    pub port: PortId,
}

impl PortRef {
    pub fn new(component: impl Into<String>, port: impl Into<String>) -> Self {
        PortRef {
            component: ComponentId::new(component),
            port: PortId::new(port),
        }
    }
}

impl fmt::Display for PortRef {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}.{}", self.component, self.port)
    }
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
#[error("an interaction must contain at least one action")]
pub struct EmptyInteraction;

/// A nonempty set of actions executed jointly, at most one per component
/// (the latter is a validation rule, not a construction rule, so broken
/// input can still be represented and reported).
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub struct Interaction(BTreeSet<ActionId>);

impl Interaction {
    pub fn new(actions: BTreeSet<ActionId>) -> Result<Self, EmptyInteraction> {
        if actions.is_empty() {
            return Err(EmptyInteraction);
        }
        Ok(Interaction(actions))
    }

    pub fn of(names: &[&str]) -> Self {
        Interaction::new(names.iter().map(|n| ActionId::new(*n)).collect())
            .expect("nonempty action list")
    }

    pub fn actions(&self) -> &BTreeSet<ActionId> {
        &self.0
    }

    pub fn contains(&self, a: &ActionId) -> bool {
        self.0.contains(a)
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }
}

impl fmt::Display for Interaction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("{")?;
        for (i, a) in self.0.iter().enumerate() {
            if i > 0 {
                f.write_str(",")?;
            }
            write!(f, "{a}")?;
        }
        f.write_str("}")
    }
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum QueryError {
    #[error("unknown component `{0}`")]
    UnknownComponent(ComponentId),
    #[error("unknown port `{0}`")]
    UnknownPort(PortRef),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub enum Severity {
    Error,
    Warning,
}

impl Severity {
    pub fn is_error(self) -> bool {
        self == Severity::Error
    }
}

/// One validation finding. Errors make the system unusable for checking;
/// warnings flag legal but suspicious modeling.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Violation {
    SharedAction { action: ActionId, ports: Vec<PortRef> },
    UncoveredAction { action: ActionId },
    UnknownInteractionAction { interaction: Interaction, action: ActionId },
    MultipleActionsOneComponent { interaction: Interaction, component: ComponentId },
    TauInBehavior { component: ComponentId },
    BehaviorActionOutsideAlphabet { component: ComponentId, action: ActionId },
    ProtocolActionOutsideAlphabet { port: PortRef, action: ActionId },
    MissingBehavior { component: ComponentId },
    MissingProtocol { port: PortRef },
    BehaviorForUnknownComponent { component: ComponentId },
    ProtocolForUnknownPort { port: PortRef },
    PortOnUnknownComponent { port: PortRef },
    BadIdentifier { kind: &'static str, name: String },
    ReservedActionName { port: PortRef },
    UnusedAction { component: ComponentId, action: ActionId },
    EmptyAlphabet { port: PortRef },
}

impl Violation {
    pub fn severity(&self) -> Severity {
        match self {
            Violation::UnusedAction { .. } | Violation::EmptyAlphabet { .. } => Severity::Warning,
            _ => Severity::Error,
        }
    }
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::SharedAction { action, ports } => {
                let names: Vec<String> = ports.iter().map(|p| p.to_string()).collect();
                write!(f, "action `{action}` appears in the alphabets of {}", names.join(" and "))
            }
            Violation::UncoveredAction { action } => {
                write!(f, "action `{action}` is in a port alphabet but in no interaction")
            }
            Violation::UnknownInteractionAction { interaction, action } => {
                write!(f, "interaction `{interaction}` uses `{action}`, which is in no port alphabet")
            }
            Violation::MultipleActionsOneComponent { interaction, component } => {
                write!(f, "interaction `{interaction}` uses more than one action of component `{component}`")
            }
            Violation::TauInBehavior { component } => {
                write!(f, "behavior of component `{component}` contains a tau transition")
            }
            Violation::BehaviorActionOutsideAlphabet { component, action } => {
                write!(f, "behavior of component `{component}` uses `{action}`, which is outside its alphabet")
            }
            Violation::ProtocolActionOutsideAlphabet { port, action } => {
                write!(f, "protocol of port `{port}` uses `{action}`, which is outside the port alphabet")
            }
            Violation::MissingBehavior { component } => {
                write!(f, "component `{component}` has no behavior")
            }
            Violation::MissingProtocol { port } => {
                write!(f, "port `{port}` has no protocol")
            }
            Violation::BehaviorForUnknownComponent { component } => {
                write!(f, "behavior given for undeclared component `{component}`")
            }
            Violation::ProtocolForUnknownPort { port } => {
                write!(f, "protocol given for undeclared port `{port}`")
            }
            Violation::PortOnUnknownComponent { port } => {
                write!(f, "port `{port}` belongs to an undeclared component")
            }
            Violation::BadIdentifier { kind, name } => {
                write!(f, "invalid {kind} identifier `{name}`")
            }
            Violation::ReservedActionName { port } => {
                write!(f, "port `{port}` uses the reserved name `tau` as an action")
            }
            Violation::UnusedAction { component, action } => {
                write!(f, "warning: action `{action}` of component `{component}` never occurs in its behavior")
            }
            Violation::EmptyAlphabet { port } => {
                write!(f, "warning: port `{port}` has an empty alphabet")
            }
        }
    }
}

/// True when the token can safely appear in the file format, inside
/// canonical composite renderings, and quoted in DOT output.
pub(crate) fn valid_ident(s: &str, allow_dot: bool) -> bool {
    !s.is_empty()
        && s.chars().all(|c| {
            !c.is_whitespace() && !"#{}(),\"\\".contains(c) && (allow_dot || c != '.')
        })
}

/// A complete interaction system. Ports are the keys of the alphabet
/// map; a component's alphabet is the union of its port alphabets.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct System {
    name: String,
    components: BTreeSet<ComponentId>,
    alphabets: BTreeMap<PortRef, BTreeSet<ActionId>>,
    interactions: BTreeSet<Interaction>,
    behaviors: BTreeMap<ComponentId, Lts>,
    protocols: BTreeMap<PortRef, Lts>,
}

impl System {
    pub fn new(
        name: impl Into<String>,
        components: BTreeSet<ComponentId>,
        alphabets: BTreeMap<PortRef, BTreeSet<ActionId>>,
        interactions: BTreeSet<Interaction>,
        behaviors: BTreeMap<ComponentId, Lts>,
        protocols: BTreeMap<PortRef, Lts>,
    ) -> Self {
        System {
            name: name.into(),
            components,
            alphabets,
            interactions,
            behaviors,
            protocols,
        }
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn components(&self) -> impl Iterator<Item = &ComponentId> {
        self.components.iter()
    }

    pub fn has_component(&self, c: &ComponentId) -> bool {
        self.components.contains(c)
    }

    pub fn ports(&self) -> impl Iterator<Item = &PortRef> {
        self.alphabets.keys()
    }

    pub fn ports_of<'a>(&'a self, c: &'a ComponentId) -> impl Iterator<Item = &'a PortRef> {
        self.alphabets.keys().filter(move |p| &p.component == c)
    }

    pub fn port_alphabet(&self, p: &PortRef) -> Option<&BTreeSet<ActionId>> {
        self.alphabets.get(p)
    }

    /// Union of the component's port alphabets.
    pub fn component_alphabet(&self, c: &ComponentId) -> BTreeSet<ActionId> {
        self.ports_of(c)
            .filter_map(|p| self.alphabets.get(p))
            .flatten()
            .cloned()
            .collect()
    }

    /// Every action of the system.
    pub fn actions(&self) -> BTreeSet<ActionId> {
        self.alphabets.values().flatten().cloned().collect()
    }

    pub fn interactions(&self) -> impl Iterator<Item = &Interaction> {
        self.interactions.iter()
    }

    pub fn interaction_count(&self) -> usize {
        self.interactions.len()
    }

    pub fn behavior(&self, c: &ComponentId) -> Option<&Lts> {
        self.behaviors.get(c)
    }

    pub fn protocol(&self, p: &PortRef) -> Option<&Lts> {
        self.protocols.get(p)
    }

    pub fn protocols(&self) -> impl Iterator<Item = (&PortRef, &Lts)> {
        self.protocols.iter()
    }

    /// Same system with some protocols replaced, for checking derived
    /// (for example minimized) protocols without rebuilding everything.
    pub fn with_protocols(&self, protocols: BTreeMap<PortRef, Lts>) -> System {
        let mut out = self.clone();
        for (p, lts) in protocols {
            out.protocols.insert(p, lts);
        }
        out
    }

    /// The component's share of an interaction: the actions of `alpha`
    /// drawn from `c`'s alphabet (empty when `c` does not participate).
    pub fn project_component(
        &self,
        alpha: &Interaction,
        c: &ComponentId,
    ) -> Result<BTreeSet<ActionId>, QueryError> {
        if !self.components.contains(c) {
            return Err(QueryError::UnknownComponent(c.clone()));
        }
        let alphabet = self.component_alphabet(c);
        Ok(alpha.actions().intersection(&alphabet).cloned().collect())
    }

    /// The port's share of an interaction.
    pub fn project_port(
        &self,
        alpha: &Interaction,
        p: &PortRef,
    ) -> Result<BTreeSet<ActionId>, QueryError> {
        let alphabet = self
            .alphabets
            .get(p)
            .ok_or_else(|| QueryError::UnknownPort(p.clone()))?;
        Ok(alpha.actions().intersection(alphabet).cloned().collect())
    }

    pub fn is_valid(&self) -> bool {
        self.validate()
            .iter()
            .all(|v| v.severity() != Severity::Error)
    }

    /// Checks every model invariant and returns one descriptor per
    /// finding, sorted lexicographically by rendered message so the
    /// output is canonical regardless of construction order.
    pub fn validate(&self) -> Vec<Violation> {
        let mut out = Vec::new();

        if !valid_ident(&self.name, true) {
            out.push(Violation::BadIdentifier { kind: "system", name: self.name.clone() });
        }
        for c in &self.components {
            if !valid_ident(c.as_str(), false) {
                out.push(Violation::BadIdentifier { kind: "component", name: c.as_str().into() });
            }
        }

        // Ports: identifiers, owners, alphabets.
        let mut owner_of: BTreeMap<&ActionId, Vec<&PortRef>> = BTreeMap::new();
        for (port, alphabet) in &self.alphabets {
            if !valid_ident(port.port.as_str(), false) {
                out.push(Violation::BadIdentifier { kind: "port", name: port.port.as_str().into() });
            }
            if !self.components.contains(&port.component) {
                out.push(Violation::PortOnUnknownComponent { port: port.clone() });
            }
            if alphabet.is_empty() {
                out.push(Violation::EmptyAlphabet { port: port.clone() });
            }
            for a in alphabet {
                if a.as_str() == "tau" {
                    out.push(Violation::ReservedActionName { port: port.clone() });
                } else if !valid_ident(a.as_str(), true) {
                    out.push(Violation::BadIdentifier { kind: "action", name: a.as_str().into() });
                }
                owner_of.entry(a).or_default().push(port);
            }
        }
        for (action, ports) in &owner_of {
            if ports.len() > 1 {
                out.push(Violation::SharedAction {
                    action: (*action).clone(),
                    ports: ports.iter().map(|p| (*p).clone()).collect(),
                });
            }
        }

        // Interactions: known actions, at most one action per component,
        // and joint coverage of every declared action.
        let all_actions = self.actions();
        let mut covered: BTreeSet<&ActionId> = BTreeSet::new();
        for alpha in &self.interactions {
            let mut per_component: BTreeMap<&ComponentId, usize> = BTreeMap::new();
            for a in alpha.actions() {
                if let Some(ports) = owner_of.get(a) {
                    covered.insert(a);
                    // With shared actions already reported, the first
                    // owner is as good as any for the per-component count.
                    *per_component.entry(&ports[0].component).or_default() += 1;
                } else {
                    out.push(Violation::UnknownInteractionAction {
                        interaction: alpha.clone(),
                        action: a.clone(),
                    });
                }
            }
            for (component, count) in per_component {
                if count > 1 {
                    out.push(Violation::MultipleActionsOneComponent {
                        interaction: alpha.clone(),
                        component: component.clone(),
                    });
                }
            }
        }
        for action in &all_actions {
            if !covered.contains(action) {
                out.push(Violation::UncoveredAction { action: action.clone() });
            }
        }

        // Behaviors: total over components, tau-free, within alphabet.
        for component in self.behaviors.keys() {
            if !self.components.contains(component) {
                out.push(Violation::BehaviorForUnknownComponent { component: component.clone() });
            }
        }
        for component in &self.components {
            let Some(behavior) = self.behaviors.get(component) else {
                out.push(Violation::MissingBehavior { component: component.clone() });
                continue;
            };
            let alphabet = self.component_alphabet(component);
            let mut reported_tau = false;
            for label in behavior.label_set() {
                match label.action() {
                    None if !reported_tau => {
                        reported_tau = true;
                        out.push(Violation::TauInBehavior { component: component.clone() });
                    }
                    None => {}
                    Some(a) if !alphabet.contains(a) => {
                        out.push(Violation::BehaviorActionOutsideAlphabet {
                            component: component.clone(),
                            action: a.clone(),
                        });
                    }
                    Some(_) => {}
                }
            }
            let used: BTreeSet<&ActionId> =
                behavior.transitions().filter_map(|(_, l, _)| l.action()).collect();
            for action in &alphabet {
                if !used.contains(action) {
                    out.push(Violation::UnusedAction {
                        component: component.clone(),
                        action: action.clone(),
                    });
                }
            }
            for state in behavior.states() {
                if !valid_ident(state.as_str(), true) {
                    out.push(Violation::BadIdentifier { kind: "state", name: state.as_str().into() });
                }
            }
        }

        // Protocols: total over ports, within the port alphabet plus tau.
        for port in self.protocols.keys() {
            if !self.alphabets.contains_key(port) {
                out.push(Violation::ProtocolForUnknownPort { port: port.clone() });
            }
        }
        for (port, alphabet) in &self.alphabets {
            let Some(protocol) = self.protocols.get(port) else {
                out.push(Violation::MissingProtocol { port: port.clone() });
                continue;
            };
            for label in protocol.label_set() {
                if let Some(a) = label.action() {
                    if !alphabet.contains(a) {
                        out.push(Violation::ProtocolActionOutsideAlphabet {
                            port: port.clone(),
                            action: a.clone(),
                        });
                    }
                }
            }
            for state in protocol.states() {
                if !valid_ident(state.as_str(), true) {
                    out.push(Violation::BadIdentifier { kind: "state", name: state.as_str().into() });
                }
            }
        }

        out.sort_by_key(|v| v.to_string());
        out.dedup();
        out
    }
}
