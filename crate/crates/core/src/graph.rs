//! Finite graphs stored as darts with a fixed-point-free reversal.
//!
//! Edge `e` owns darts `2e` (forward, written `e+`) and `2e + 1` (backward,
//! written `e-`). Reversal flips the low bit.

use std::collections::{BTreeMap, VecDeque};
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::FinGraphError;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Dart(pub usize);

impl Dart {
    pub fn new(edge: usize, forward: bool) -> Self {
        Dart(2 * edge + usize::from(!forward))
    }

    pub fn edge(self) -> usize {
        self.0 / 2
    }

    pub fn is_forward(self) -> bool {
        self.0.is_multiple_of(2)
    }

    pub fn reverse(self) -> Self {
        Dart(self.0 ^ 1)
    }
}

impl fmt::Display for Dart {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "d{}", self.0)
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Graph {
    vertex_names: Vec<String>,
    edge_names: Vec<String>,
    ends: Vec<(usize, usize)>,
    // outgoing darts per vertex, sorted
    stars: Vec<Vec<Dart>>,
}

impl Graph {
    pub fn new(
        vertex_names: Vec<String>,
        edges: Vec<(String, usize, usize)>,
    ) -> Result<Self, FinGraphError> {
        check_unique(&vertex_names, "vertex")?;
        let edge_names: Vec<String> = edges.iter().map(|e| e.0.clone()).collect();
        check_unique(&edge_names, "edge")?;
        let n = vertex_names.len();
        let mut ends = Vec::with_capacity(edges.len());
        for (name, from, to) in &edges {
            if *from >= n || *to >= n {
                return Err(FinGraphError::UnknownVertex(format!("endpoint of edge {name}")));
            }
            ends.push((*from, *to));
        }
        let mut stars = vec![Vec::new(); n];
        for (e, &(from, to)) in ends.iter().enumerate() {
            stars[from].push(Dart::new(e, true));
            stars[to].push(Dart::new(e, false));
        }
        for s in &mut stars {
            s.sort();
        }
        Ok(Graph { vertex_names, edge_names, ends, stars })
    }

    /// Builds a graph from vertex and edge names, resolving endpoints by name.
    pub fn from_names(
        vertices: &[&str],
        edges: &[(&str, &str, &str)],
    ) -> Result<Self, FinGraphError> {
        let names: Vec<String> = vertices.iter().map(|s| s.to_string()).collect();
        let index: BTreeMap<&str, usize> =
            vertices.iter().enumerate().map(|(i, v)| (*v, i)).collect();
        let mut es = Vec::new();
        for (id, from, to) in edges {
            let f = *index
                .get(from)
                .ok_or_else(|| FinGraphError::UnknownVertex(from.to_string()))?;
            let t = *index
                .get(to)
                .ok_or_else(|| FinGraphError::UnknownVertex(to.to_string()))?;
            es.push((id.to_string(), f, t));
        }
        Graph::new(names, es)
    }

    pub fn num_vertices(&self) -> usize {
        self.vertex_names.len()
    }

    pub fn num_edges(&self) -> usize {
        self.ends.len()
    }

    pub fn num_darts(&self) -> usize {
        2 * self.ends.len()
    }

    pub fn darts(&self) -> impl Iterator<Item = Dart> {
        (0..self.num_darts()).map(Dart)
    }

    pub fn origin(&self, d: Dart) -> usize {
        let (from, to) = self.ends[d.edge()];
        if d.is_forward() {
            from
        } else {
            to
        }
    }

    pub fn terminus(&self, d: Dart) -> usize {
        self.origin(d.reverse())
    }

    /// Outgoing darts at `v` in increasing order.
    pub fn star(&self, v: usize) -> &[Dart] {
        &self.stars[v]
    }

    pub fn vertex_name(&self, v: usize) -> &str {
        &self.vertex_names[v]
    }

    pub fn vertex_names(&self) -> &[String] {
        &self.vertex_names
    }

    pub fn edge_name(&self, e: usize) -> &str {
        &self.edge_names[e]
    }

    pub fn edge_ends(&self, e: usize) -> (usize, usize) {
        self.ends[e]
    }

    pub fn dart_name(&self, d: Dart) -> String {
        format!("{}{}", self.edge_names[d.edge()], if d.is_forward() { '+' } else { '-' })
    }

    pub fn vertex_index(&self, name: &str) -> Option<usize> {
        self.vertex_names.iter().position(|v| v == name)
    }

    pub fn edge_index(&self, name: &str) -> Option<usize> {
        self.edge_names.iter().position(|e| e == name)
    }

    /// Component label per vertex; labels are numbered by smallest member.
    pub fn components(&self) -> Vec<usize> {
        let n = self.num_vertices();
        let mut comp = vec![usize::MAX; n];
        let mut next = 0;
        for s in 0..n {
            if comp[s] != usize::MAX {
                continue;
            }
            comp[s] = next;
            let mut queue = VecDeque::from([s]);
            while let Some(v) = queue.pop_front() {
                for &d in self.star(v) {
                    let w = self.terminus(d);
                    if comp[w] == usize::MAX {
                        comp[w] = next;
                        queue.push_back(w);
                    }
                }
            }
            next += 1;
        }
        comp
    }

    pub fn is_connected(&self) -> bool {
        self.num_vertices() > 0 && self.components().iter().all(|&c| c == 0)
    }

    /// Euler characteristic |V| - |E|.
    pub fn euler_characteristic(&self) -> i64 {
        self.num_vertices() as i64 - self.num_edges() as i64
    }

    /// BFS spanning forest: for each vertex the dart used to reach it.
    pub fn spanning_forest(&self) -> Vec<Option<Dart>> {
        let n = self.num_vertices();
        let mut parent = vec![None; n];
        let mut seen = vec![false; n];
        for s in 0..n {
            if seen[s] {
                continue;
            }
            seen[s] = true;
            let mut queue = VecDeque::from([s]);
            while let Some(v) = queue.pop_front() {
                for &d in self.star(v) {
                    let w = self.terminus(d);
                    if !seen[w] {
                        seen[w] = true;
                        parent[w] = Some(d);
                        queue.push_back(w);
                    }
                }
            }
        }
        parent
    }
}

pub(crate) fn check_unique(names: &[String], what: &str) -> Result<(), FinGraphError> {
    let mut seen = std::collections::BTreeSet::new();
    for n in names {
        if !seen.insert(n.as_str()) {
            return Err(FinGraphError::DuplicateName(format!("{what} {n}")));
        }
    }
    Ok(())
}
