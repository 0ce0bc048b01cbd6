//! The communication graph of a system: one vertex per component and
//! per port, an edge from every component to each of its ports, and an
//! edge between two distinct ports whenever some interaction makes them
//! both participate. The checker's structural preconditions (unique
//! port connectivity, tree shape) are read off this graph.

use std::collections::{BTreeMap, BTreeSet, VecDeque};
use std::fmt;

use crate::lts::ActionId;
use crate::system::{ComponentId, PortRef, QueryError, System};

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub enum Vertex {
    Component(ComponentId),
    Port(PortRef),
}

impl fmt::Display for Vertex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Vertex::Component(c) => write!(f, "{c}"),
            Vertex::Port(p) => write!(f, "{p}"),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CommGraph {
    vertices: BTreeSet<Vertex>,
    /// Undirected edges stored once, smaller endpoint first.
    edges: BTreeSet<(Vertex, Vertex)>,
}

fn ordered(a: Vertex, b: Vertex) -> (Vertex, Vertex) {
    if a <= b {
        (a, b)
    } else {
        (b, a)
    }
}

/// Builds the communication graph. Two ports are linked when some
/// interaction has a nonempty share on both of their alphabets; every
/// pair of participating ports of one interaction is linked, so an
/// interaction across three ports contributes three edges.
pub fn comm_graph(system: &System) -> CommGraph {
    let mut vertices: BTreeSet<Vertex> = BTreeSet::new();
    let mut edges: BTreeSet<(Vertex, Vertex)> = BTreeSet::new();

    for c in system.components() {
        vertices.insert(Vertex::Component(c.clone()));
    }
    for p in system.ports() {
        vertices.insert(Vertex::Port(p.clone()));
        vertices.insert(Vertex::Component(p.component.clone()));
        edges.insert(ordered(
            Vertex::Component(p.component.clone()),
            Vertex::Port(p.clone()),
        ));
    }

    let mut owner: BTreeMap<&ActionId, &PortRef> = BTreeMap::new();
    for p in system.ports() {
        if let Some(alphabet) = system.port_alphabet(p) {
            for a in alphabet {
                owner.insert(a, p);
            }
        }
    }

    for alpha in system.interactions() {
        let mut participants: BTreeSet<&PortRef> = BTreeSet::new();
        for a in alpha.actions() {
            if let Some(p) = owner.get(a) {
                participants.insert(p);
            }
        }
        let participants: Vec<&PortRef> = participants.into_iter().collect();
        for i in 0..participants.len() {
            for j in i + 1..participants.len() {
                edges.insert(ordered(
                    Vertex::Port((*participants[i]).clone()),
                    Vertex::Port((*participants[j]).clone()),
                ));
            }
        }
    }

    CommGraph { vertices, edges }
}

impl CommGraph {
    pub fn vertices(&self) -> impl Iterator<Item = &Vertex> {
        self.vertices.iter()
    }

    pub fn vertex_count(&self) -> usize {
        self.vertices.len()
    }

    pub fn edges(&self) -> impl Iterator<Item = &(Vertex, Vertex)> {
        self.edges.iter()
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn has_edge(&self, a: &Vertex, b: &Vertex) -> bool {
        self.edges
            .contains(&ordered(a.clone(), b.clone()))
    }

    pub fn neighbors<'a>(&'a self, v: &'a Vertex) -> impl Iterator<Item = &'a Vertex> {
        self.edges.iter().filter_map(move |(a, b)| {
            if a == v {
                Some(b)
            } else if b == v {
                Some(a)
            } else {
                None
            }
        })
    }

    /// The port-port edges, in sorted order. These are exactly the pairs
    /// the compositional check inspects.
    pub fn port_port_edges(&self) -> Vec<(PortRef, PortRef)> {
        self.edges
            .iter()
            .filter_map(|(a, b)| match (a, b) {
                (Vertex::Port(p), Vertex::Port(q)) => Some((p.clone(), q.clone())),
                _ => None,
            })
            .collect()
    }

    /// How many other ports a port is linked to.
    pub fn port_connectivity(&self, port: &PortRef) -> Result<usize, QueryError> {
        let v = Vertex::Port(port.clone());
        if !self.vertices.contains(&v) {
            return Err(QueryError::UnknownPort(port.clone()));
        }
        Ok(self
            .neighbors(&v)
            .filter(|n| matches!(n, Vertex::Port(_)))
            .count())
    }

    /// A port is uniquely connected when it is linked to at most one
    /// other port.
    pub fn is_uniquely_connected(&self, port: &PortRef) -> Result<bool, QueryError> {
        Ok(self.port_connectivity(port)? < 2)
    }

    /// Connected and with exactly one fewer edge than vertices. The
    /// empty graph does not count.
    pub fn is_tree_like(&self) -> bool {
        let Some(start) = self.vertices.iter().next() else {
            return false;
        };
        let mut seen: BTreeSet<&Vertex> = [start].into();
        let mut queue: VecDeque<&Vertex> = [start].into();
        while let Some(v) = queue.pop_front() {
            for n in self.neighbors(v) {
                if seen.insert(n) {
                    queue.push_back(n);
                }
            }
        }
        seen.len() == self.vertices.len() && self.edges.len() + 1 == self.vertices.len()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::generate;

    #[test]
    fn pair_system_graph_is_a_path() {
        let sys = generate::generate_ex1();
        let g = comm_graph(&sys);
        // i - i.p - j.q - j
        assert_eq!(g.vertex_count(), 4);
        assert_eq!(g.edge_count(), 3);
        assert!(g.is_tree_like());
        assert_eq!(
            g.port_port_edges(),
            vec![(PortRef::new("i", "p"), PortRef::new("j", "q"))]
        );
    }

    #[test]
    fn star_graph_is_tree_like_with_one_pair_per_border() {
        let sys = generate::generate_star(5).unwrap();
        let g = comm_graph(&sys);
        // m, its 5 ports, 5 borders, their 5 ports.
        assert_eq!(g.vertex_count(), 16);
        assert_eq!(g.edge_count(), 15);
        assert!(g.is_tree_like());
        assert_eq!(g.port_port_edges().len(), 5);
        for (p, q) in g.port_port_edges() {
            assert!(g.is_uniquely_connected(&p).unwrap());
            assert!(g.is_uniquely_connected(&q).unwrap());
        }
    }

    #[test]
    fn connectivity_counts_only_ports() {
        let sys = generate::generate_ex1();
        let g = comm_graph(&sys);
        // i.p touches its component and one peer port.
        assert_eq!(g.port_connectivity(&PortRef::new("i", "p")).unwrap(), 1);
    }

    #[test]
    fn unknown_port_is_a_query_error() {
        let sys = generate::generate_ex1();
        let g = comm_graph(&sys);
        assert_eq!(
            g.port_connectivity(&PortRef::new("i", "zz")),
            Err(QueryError::UnknownPort(PortRef::new("i", "zz")))
        );
    }

    #[test]
    fn shared_port_breaks_unique_connectivity() {
        // One middle port wired to two border ports at once.
        let sys = generate::shared_port_system();
        let g = comm_graph(&sys);
        assert!(!g.is_uniquely_connected(&PortRef::new("m", "p")).unwrap());
        assert_eq!(g.port_connectivity(&PortRef::new("m", "p")).unwrap(), 2);
        assert_eq!(g.port_port_edges().len(), 2);
        // The graph itself is still a tree; the two conditions are
        // independent.
        assert!(g.is_tree_like());
    }

    #[test]
    fn ring_system_is_not_tree_like() {
        let sys = generate::ring_system();
        let g = comm_graph(&sys);
        assert!(!g.is_tree_like());
        assert_eq!(g.vertex_count(), g.edge_count());
        for p in sys.ports() {
            assert!(g.is_uniquely_connected(p).unwrap());
        }
    }

    #[test]
    fn empty_graph_is_not_tree_like() {
        let g = CommGraph {
            vertices: BTreeSet::new(),
            edges: BTreeSet::new(),
        };
        assert!(!g.is_tree_like());
    }

    #[test]
    fn disconnected_graph_is_not_tree_like() {
        let sys = generate::disconnected_system();
        let g = comm_graph(&sys);
        assert!(!g.is_tree_like());
        assert_eq!(g.edge_count() + 2, g.vertex_count());
    }

    #[test]
    fn multiway_interaction_links_all_participating_ports() {
        let sys = generate::triple_sync_system();
        let g = comm_graph(&sys);
        // Three ports all participating in one interaction: three
        // port-port edges, which closes a cycle through the components.
        assert_eq!(g.port_port_edges().len(), 3);
        assert!(!g.is_tree_like());
        for p in sys.ports() {
            assert!(!g.is_uniquely_connected(p).unwrap());
        }
    }
}
