//! GraphViz renderings: the communication graph as an undirected
//! `graph`, an LTS as a `digraph` with a point marker per initial
//! state. Output is deterministic, so it can be diffed and tested.

use std::fmt::Write as _;

use crate::lts::Lts;
use crate::topology::{CommGraph, Vertex};

/// Components come out as boxes, ports as ellipses, port-port links in
/// bold.
pub fn dot_comm_graph(graph: &CommGraph) -> String {
    let mut out = String::from("graph system {\n");
    let _ = writeln!(out, "  node [fontname=\"monospace\"];");
    for v in graph.vertices() {
        let shape = match v {
            Vertex::Component(_) => "box",
            Vertex::Port(_) => "ellipse",
        };
        let _ = writeln!(out, "  \"{v}\" [shape={shape}];");
    }
    for (a, b) in graph.edges() {
        let style = match (a, b) {
            (Vertex::Port(_), Vertex::Port(_)) => " [style=bold]",
            _ => "",
        };
        let _ = writeln!(out, "  \"{a}\" -- \"{b}\"{style};");
    }
    out.push_str("}\n");
    out
}

/// Initial states get an unlabeled point feeding into them; internal
/// steps are dashed.
pub fn dot_lts(name: &str, lts: &Lts) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "digraph \"{name}\" {{");
    let _ = writeln!(out, "  rankdir=LR;");
    let _ = writeln!(out, "  node [fontname=\"monospace\"];");
    for (k, init) in lts.initials().enumerate() {
        let _ = writeln!(out, "  __init{k} [shape=point];");
        let _ = writeln!(out, "  __init{k} -> \"{init}\";");
    }
    for s in lts.states() {
        let _ = writeln!(out, "  \"{s}\";");
    }
    for (from, label, to) in lts.transitions() {
        let attrs = match label.action() {
            Some(a) => format!("label=\"{a}\""),
            None => "label=\"tau\", style=dashed".to_string(),
        };
        let _ = writeln!(out, "  \"{from}\" -> \"{to}\" [{attrs}];");
    }
    out.push_str("}\n");
    out
}
