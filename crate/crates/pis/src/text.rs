//! The line-based system format. One declaration per line, `#` starts
//! a comment, blank lines are skipped:
//!
//! ```text
//! system phone
//! component i
//! port i.p alphabet dial hang
//! behavior i init s0
//! behavior i trans s0 dial s1
//! behavior i trans s1 hang s0
//! protocol i.p init s0
//! protocol i.p trans s0 dial s1
//! protocol i.p trans s1 hang s0
//! interaction dial
//! interaction hang
//! ```
//!
//! Components must be declared before their ports and ports before
//! their protocol lines; everything else may come in any order. The
//! label `tau` marks an internal step and is only legal in protocol
//! transitions. Rendering emits a canonical order, so
//! `parse(render(s))` reproduces `s` exactly for any system whose LTSs
//! mention every state and label in a transition or an init line.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::fmt::Write as _;

use crate::lts::{ActionId, Label, Lts, LtsBuilder, StateId};
use crate::system::{ComponentId, Interaction, PortRef, System, Violation};

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum ParseIssue {
    Syntax {
        line: usize,
        column: usize,
        message: String,
    },
    Invalid(Violation),
}

impl fmt::Display for ParseIssue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ParseIssue::Syntax {
                line,
                column,
                message,
            } => write!(f, "line {line}:{column}: {message}"),
            ParseIssue::Invalid(v) => write!(f, "{v}"),
        }
    }
}

/// Tokens with their 1-based character columns. The comment tail is
/// already stripped by the caller.
fn tokenize(line: &str) -> Vec<(usize, &str)> {
    let mut out = Vec::new();
    let mut start: Option<(usize, usize)> = None;
    let mut end = line.len();
    for (pos, (idx, ch)) in line.char_indices().enumerate() {
        if ch.is_whitespace() {
            if let Some((c, b)) = start.take() {
                out.push((c, &line[b..idx]));
            }
        } else if start.is_none() {
            start = Some((pos + 1, idx));
        }
        end = idx + ch.len_utf8();
    }
    if let Some((c, b)) = start {
        out.push((c, &line[b..end]));
    }
    out
}

enum Decl {
    Init(Vec<String>),
    Trans(String, Label, String),
}

struct LtsLines {
    first_line: usize,
    initials: Vec<String>,
    transitions: Vec<(String, Label, String)>,
}

impl LtsLines {
    fn new(first_line: usize) -> Self {
        LtsLines {
            first_line,
            initials: Vec::new(),
            transitions: Vec::new(),
        }
    }

    fn apply(&mut self, decl: Decl) {
        match decl {
            Decl::Init(states) => self.initials.extend(states),
            Decl::Trans(from, label, to) => self.transitions.push((from, label, to)),
        }
    }

    fn build(&self) -> Option<Lts> {
        if self.initials.is_empty() {
            return None;
        }
        let mut b = LtsBuilder::new();
        for s in &self.initials {
            b.initial(s.clone());
        }
        for (from, label, to) in &self.transitions {
            b.transition(from.clone(), label.clone(), to.clone());
        }
        Some(b.build().expect("init states are present"))
    }
}

struct Parser {
    issues: Vec<ParseIssue>,
    name: Option<String>,
    components: BTreeSet<ComponentId>,
    alphabets: BTreeMap<PortRef, BTreeSet<ActionId>>,
    interactions: BTreeSet<Interaction>,
    behaviors: BTreeMap<ComponentId, LtsLines>,
    protocols: BTreeMap<PortRef, LtsLines>,
}

impl Parser {
    fn syntax(&mut self, line: usize, column: usize, message: impl Into<String>) {
        self.issues.push(ParseIssue::Syntax {
            line,
            column,
            message: message.into(),
        });
    }

    fn port_ref(&mut self, line: usize, (column, token): (usize, &str)) -> Option<PortRef> {
        let Some((component, port)) = token.split_once('.') else {
            self.syntax(line, column, format!("expected `component.port`, got `{token}`"));
            return None;
        };
        if component.is_empty() || port.is_empty() || port.contains('.') {
            self.syntax(line, column, format!("expected `component.port`, got `{token}`"));
            return None;
        }
        Some(PortRef::new(component, port))
    }

    fn line(&mut self, number: usize, text: &str) {
        let text = text.split('#').next().unwrap_or("");
        let tokens = tokenize(text);
        let Some(&(head_col, head)) = tokens.first() else {
            return;
        };
        let rest = &tokens[1..];
        match head {
            "system" => self.system_line(number, head_col, rest),
            "component" => self.component_line(number, head_col, rest),
            "port" => self.port_line(number, head_col, rest),
            "behavior" => self.behavior_line(number, head_col, rest),
            "protocol" => self.protocol_line(number, head_col, rest),
            "interaction" => self.interaction_line(number, head_col, rest),
            other => self.syntax(
                number,
                head_col,
                format!("unknown declaration `{other}`"),
            ),
        }
    }

    fn system_line(&mut self, line: usize, head_col: usize, rest: &[(usize, &str)]) {
        match rest {
            [(_, name)] => {
                if self.name.is_some() {
                    self.syntax(line, head_col, "second `system` line");
                } else {
                    self.name = Some((*name).to_string());
                }
            }
            _ => self.syntax(line, head_col, "expected `system <name>`"),
        }
    }

    fn component_line(&mut self, line: usize, head_col: usize, rest: &[(usize, &str)]) {
        match rest {
            [(col, name)] => {
                if !self.components.insert(ComponentId::new(*name)) {
                    self.syntax(line, *col, format!("component `{name}` declared twice"));
                }
            }
            _ => self.syntax(line, head_col, "expected `component <name>`"),
        }
    }

    fn port_line(&mut self, line: usize, head_col: usize, rest: &[(usize, &str)]) {
        if rest.len() < 2 {
            self.syntax(line, head_col, "expected `port <component.port> alphabet <action>...`");
            return;
        }
        let Some(port) = self.port_ref(line, rest[0]) else {
            return;
        };
        if rest[1].1 != "alphabet" {
            self.syntax(line, rest[1].0, "expected the keyword `alphabet`");
            return;
        }
        if !self.components.contains(&port.component) {
            self.syntax(
                line,
                rest[0].0,
                format!("component `{}` is not declared yet", port.component),
            );
            return;
        }
        if self.alphabets.contains_key(&port) {
            self.syntax(line, rest[0].0, format!("port `{port}` declared twice"));
            return;
        }
        let mut alphabet = BTreeSet::new();
        for (col, action) in &rest[2..] {
            if *action == "tau" {
                self.syntax(line, *col, "`tau` is reserved and cannot name an action");
                continue;
            }
            alphabet.insert(ActionId::new(*action));
        }
        self.alphabets.insert(port, alphabet);
    }

    /// Parses the `init ...` / `trans ...` tail shared by behavior and
    /// protocol lines. `rest` starts at the keyword.
    fn lts_decl(
        &mut self,
        line: usize,
        rest: &[(usize, &str)],
        allow_tau: bool,
    ) -> Option<Decl> {
        match rest[0].1 {
            "init" => {
                if rest.len() < 2 {
                    self.syntax(line, rest[0].0, "expected at least one initial state");
                    return None;
                }
                Some(Decl::Init(
                    rest[1..].iter().map(|(_, s)| (*s).to_string()).collect(),
                ))
            }
            "trans" => {
                if rest.len() != 4 {
                    self.syntax(line, rest[0].0, "expected `trans <from> <label> <to>`");
                    return None;
                }
                let (_, from) = rest[1];
                let (label_col, label) = rest[2];
                let (_, to) = rest[3];
                let label = if label == "tau" {
                    if !allow_tau {
                        self.syntax(line, label_col, "behaviors cannot take internal steps");
                        return None;
                    }
                    Label::Tau
                } else {
                    Label::visible(label)
                };
                Some(Decl::Trans(from.to_string(), label, to.to_string()))
            }
            other => {
                self.syntax(
                    line,
                    rest[0].0,
                    format!("expected `init` or `trans`, got `{other}`"),
                );
                None
            }
        }
    }

    fn behavior_line(&mut self, line: usize, head_col: usize, rest: &[(usize, &str)]) {
        if rest.len() < 2 {
            self.syntax(line, head_col, "expected `behavior <component> init|trans ...`");
            return;
        }
        let component = ComponentId::new(rest[0].1);
        let Some(decl) = self.lts_decl(line, &rest[1..], false) else {
            return;
        };
        self.behaviors
            .entry(component)
            .or_insert_with(|| LtsLines::new(line))
            .apply(decl);
    }

    fn protocol_line(&mut self, line: usize, head_col: usize, rest: &[(usize, &str)]) {
        if rest.len() < 2 {
            self.syntax(line, head_col, "expected `protocol <component.port> init|trans ...`");
            return;
        }
        let Some(port) = self.port_ref(line, rest[0]) else {
            return;
        };
        if !self.alphabets.contains_key(&port) {
            self.syntax(
                line,
                rest[0].0,
                format!("port `{port}` is not declared yet"),
            );
            return;
        }
        let Some(decl) = self.lts_decl(line, &rest[1..], true) else {
            return;
        };
        self.protocols
            .entry(port)
            .or_insert_with(|| LtsLines::new(line))
            .apply(decl);
    }

    fn interaction_line(&mut self, line: usize, head_col: usize, rest: &[(usize, &str)]) {
        if rest.is_empty() {
            self.syntax(line, head_col, "an interaction needs at least one action");
            return;
        }
        let mut actions = BTreeSet::new();
        for (col, action) in rest {
            if *action == "tau" {
                self.syntax(line, *col, "`tau` is reserved and cannot name an action");
                return;
            }
            actions.insert(ActionId::new(*action));
        }
        self.interactions
            .insert(Interaction::new(actions).expect("nonempty by the arity check"));
    }

    fn finish(mut self) -> Result<System, Vec<ParseIssue>> {
        let name = match &self.name {
            Some(n) => n.clone(),
            None => {
                self.syntax(1, 1, "missing `system <name>` line");
                String::new()
            }
        };

        let mut behaviors: BTreeMap<ComponentId, Lts> = BTreeMap::new();
        for (c, lines) in &self.behaviors {
            match lines.build() {
                Some(lts) => {
                    behaviors.insert(c.clone(), lts);
                }
                None => self.issues.push(ParseIssue::Syntax {
                    line: lines.first_line,
                    column: 1,
                    message: format!("behavior of `{c}` has no init line"),
                }),
            }
        }
        let mut protocols: BTreeMap<PortRef, Lts> = BTreeMap::new();
        for (p, lines) in &self.protocols {
            match lines.build() {
                Some(lts) => {
                    protocols.insert(p.clone(), lts);
                }
                None => self.issues.push(ParseIssue::Syntax {
                    line: lines.first_line,
                    column: 1,
                    message: format!("protocol of `{p}` has no init line"),
                }),
            }
        }
        if !self.issues.is_empty() {
            return Err(self.issues);
        }

        let system = System::new(
            name,
            self.components,
            self.alphabets,
            self.interactions,
            behaviors,
            protocols,
        );
        let errors: Vec<ParseIssue> = system
            .validate()
            .into_iter()
            .filter(|v| v.severity().is_error())
            .map(ParseIssue::Invalid)
            .collect();
        if errors.is_empty() {
            Ok(system)
        } else {
            Err(errors)
        }
    }
}

/// Parses a whole document. Syntax issues carry line and column;
/// a syntactically fine document is also validated, and error-grade
/// findings fail the parse. Warnings do not.
pub fn parse_system(text: &str) -> Result<System, Vec<ParseIssue>> {
    let mut parser = Parser {
        issues: Vec::new(),
        name: None,
        components: BTreeSet::new(),
        alphabets: BTreeMap::new(),
        interactions: BTreeSet::new(),
        behaviors: BTreeMap::new(),
        protocols: BTreeMap::new(),
    };
    for (idx, line) in text.lines().enumerate() {
        parser.line(idx + 1, line);
    }
    parser.finish()
}

fn write_lts_lines(out: &mut String, keyword: &str, owner: &str, lts: &Lts) {
    let initials: Vec<&str> = lts.initials().map(StateId::as_str).collect();
    let _ = writeln!(out, "{keyword} {owner} init {}", initials.join(" "));
    for (from, label, to) in lts.transitions() {
        let label = match label.action() {
            Some(a) => a.as_str(),
            None => "tau",
        };
        let _ = writeln!(out, "{keyword} {owner} trans {from} {label} {to}");
    }
}

/// The `protocol` lines for one port, in the file format.
pub fn render_protocol_lines(port: &PortRef, lts: &Lts) -> String {
    let mut out = String::new();
    write_lts_lines(&mut out, "protocol", &port.to_string(), lts);
    out
}

/// Renders a system in canonical order: header, components, ports,
/// behaviors, protocols, interactions, everything sorted.
pub fn render_system(system: &System) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "system {}", system.name());
    out.push('\n');
    for c in system.components() {
        let _ = writeln!(out, "component {c}");
    }
    for p in system.ports() {
        let alphabet: Vec<&str> = system
            .port_alphabet(p)
            .expect("listed port has an alphabet")
            .iter()
            .map(ActionId::as_str)
            .collect();
        let mut line = format!("port {p} alphabet");
        for a in alphabet {
            line.push(' ');
            line.push_str(a);
        }
        let _ = writeln!(out, "{line}");
    }
    out.push('\n');
    for c in system.components() {
        if let Some(behavior) = system.behavior(c) {
            write_lts_lines(&mut out, "behavior", c.as_str(), behavior);
        }
    }
    for (p, protocol) in system.protocols() {
        write_lts_lines(&mut out, "protocol", &p.to_string(), protocol);
    }
    out.push('\n');
    for alpha in system.interactions() {
        let actions: Vec<&str> = alpha.actions().iter().map(ActionId::as_str).collect();
        let _ = writeln!(out, "interaction {}", actions.join(" "));
    }
    out
}
