//! Graphs with fins: a connected graph together with a finite family of
//! closed immersed dart cycles, each oriented fin carrying a colour token.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use num_bigint::BigInt;
use serde::{Deserialize, Serialize};

use crate::error::FinGraphError;
use crate::graph::{check_unique, Dart, Graph};
use crate::Rational;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Direction {
    #[serde(rename = "+")]
    Forward,
    #[serde(rename = "-")]
    Backward,
}

impl Direction {
    pub fn reverse(self) -> Self {
        match self {
            Direction::Forward => Direction::Backward,
            Direction::Backward => Direction::Forward,
        }
    }

    pub fn from_sign(sign: i32) -> Self {
        if sign >= 0 {
            Direction::Forward
        } else {
            Direction::Backward
        }
    }

    pub fn sign(self) -> i32 {
        match self {
            Direction::Forward => 1,
            Direction::Backward => -1,
        }
    }

    /// Composition: travelling `other` along something already flipped by `self`.
    pub fn compose(self, other: Direction) -> Direction {
        Direction::from_sign(self.sign() * other.sign())
    }

    pub(crate) fn index(self) -> usize {
        match self {
            Direction::Forward => 0,
            Direction::Backward => 1,
        }
    }

    pub fn suffix(self) -> char {
        match self {
            Direction::Forward => '+',
            Direction::Backward => '-',
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct OrientedFin {
    pub fin: usize,
    pub dir: Direction,
}

impl OrientedFin {
    pub fn new(fin: usize, dir: Direction) -> Self {
        OrientedFin { fin, dir }
    }

    pub fn reverse(self) -> Self {
        OrientedFin { fin: self.fin, dir: self.dir.reverse() }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Fin {
    pub name: String,
    pub cycle: Vec<Dart>,
}

impl Fin {
    pub fn len(&self) -> usize {
        self.cycle.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cycle.is_empty()
    }

    /// Dart sequence read in the given direction.
    pub fn darts(&self, dir: Direction) -> Vec<Dart> {
        match dir {
            Direction::Forward => self.cycle.clone(),
            Direction::Backward => self.cycle.iter().rev().map(|d| d.reverse()).collect(),
        }
    }
}

/// Which end of an arc: `Next` leaves along the fin's forward direction.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Side {
    Next,
    Prev,
}

impl Side {
    pub fn other(self) -> Self {
        match self {
            Side::Next => Side::Prev,
            Side::Prev => Side::Next,
        }
    }

    /// Orientation of the fin that leaves through this end.
    pub fn direction(self) -> Direction {
        match self {
            Side::Next => Direction::Forward,
            Side::Prev => Direction::Backward,
        }
    }
}

/// A passage of a fin through a vertex: position `pos` sits at `origin(cycle[pos])`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Arc {
    pub fin: usize,
    pub pos: usize,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct ArcEnd {
    pub arc: Arc,
    pub side: Side,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct GraphWithFins {
    graph: Graph,
    fins: Vec<Fin>,
    colours: Vec<[String; 2]>,
}

impl GraphWithFins {
    /// Checks that every fin is a closed immersed path and that both
    /// orientations carry a colour. Connectivity is not required here.
    pub fn new(
        graph: Graph,
        fins: Vec<Fin>,
        colours: Vec<[String; 2]>,
    ) -> Result<Self, FinGraphError> {
        let names: Vec<String> = fins.iter().map(|f| f.name.clone()).collect();
        check_unique(&names, "fin")?;
        if colours.len() != fins.len() {
            return Err(FinGraphError::MissingColour(format!(
                "{} colour pairs for {} fins",
                colours.len(),
                fins.len()
            )));
        }
        for fin in &fins {
            if fin.cycle.is_empty() {
                return Err(FinGraphError::EmptyFin(fin.name.clone()));
            }
            let n = fin.cycle.len();
            for i in 0..n {
                let d = fin.cycle[i];
                if d.edge() >= graph.num_edges() {
                    return Err(FinGraphError::UnknownEdge(format!("in fin {}", fin.name)));
                }
                let next = fin.cycle[(i + 1) % n];
                if next.edge() >= graph.num_edges() {
                    return Err(FinGraphError::UnknownEdge(format!("in fin {}", fin.name)));
                }
                if graph.terminus(d) != graph.origin(next) {
                    return Err(FinGraphError::BrokenCycle { fin: fin.name.clone(), position: i });
                }
                if next == d.reverse() {
                    return Err(FinGraphError::BacktrackingLoop {
                        fin: fin.name.clone(),
                        position: i,
                    });
                }
            }
        }
        Ok(GraphWithFins { graph, fins, colours })
    }

    /// Like `new`, but also rejects disconnected or empty graphs.
    pub fn new_connected(
        graph: Graph,
        fins: Vec<Fin>,
        colours: Vec<[String; 2]>,
    ) -> Result<Self, FinGraphError> {
        if graph.num_vertices() == 0 {
            return Err(FinGraphError::Empty);
        }
        if !graph.is_connected() {
            return Err(FinGraphError::Disconnected);
        }
        Self::new(graph, fins, colours)
    }

    pub fn graph(&self) -> &Graph {
        &self.graph
    }

    pub fn fins(&self) -> &[Fin] {
        &self.fins
    }

    pub fn fin(&self, f: usize) -> &Fin {
        &self.fins[f]
    }

    pub fn num_fins(&self) -> usize {
        self.fins.len()
    }

    pub fn num_vertices(&self) -> usize {
        self.graph.num_vertices()
    }

    pub fn fin_index(&self, name: &str) -> Option<usize> {
        self.fins.iter().position(|f| f.name == name)
    }

    pub fn colour(&self, of: OrientedFin) -> &str {
        &self.colours[of.fin][of.dir.index()]
    }

    pub fn colour_pairs(&self) -> &[[String; 2]] {
        &self.colours
    }

    pub fn oriented_fins(&self) -> impl Iterator<Item = OrientedFin> + '_ {
        (0..self.fins.len()).flat_map(|f| {
            [OrientedFin::new(f, Direction::Forward), OrientedFin::new(f, Direction::Backward)]
        })
    }

    /// Distinct colours in sorted order.
    pub fn colour_set(&self) -> BTreeSet<String> {
        self.colours.iter().flat_map(|c| c.iter().cloned()).collect()
    }

    pub fn with_colours(&self, colours: Vec<[String; 2]>) -> Result<Self, FinGraphError> {
        Self::new(self.graph.clone(), self.fins.clone(), colours)
    }

    pub fn arc_vertex(&self, a: Arc) -> usize {
        self.graph.origin(self.fins[a.fin].cycle[a.pos])
    }

    /// Outgoing dart used by an arc end.
    pub fn end_dart(&self, end: ArcEnd) -> Dart {
        let cycle = &self.fins[end.arc.fin].cycle;
        match end.side {
            Side::Next => cycle[end.arc.pos],
            Side::Prev => cycle[(end.arc.pos + cycle.len() - 1) % cycle.len()].reverse(),
        }
    }

    /// The arc end on the far side of the face crossed by `end`.
    pub fn across(&self, end: ArcEnd) -> ArcEnd {
        let n = self.fins[end.arc.fin].len();
        let pos = match end.side {
            Side::Next => (end.arc.pos + 1) % n,
            Side::Prev => (end.arc.pos + n - 1) % n,
        };
        ArcEnd { arc: Arc { fin: end.arc.fin, pos }, side: end.side.other() }
    }

    pub fn end_colour(&self, end: ArcEnd) -> &str {
        self.colour(OrientedFin::new(end.arc.fin, end.side.direction()))
    }

    /// Arcs grouped by vertex, each list sorted.
    pub fn arcs_by_vertex(&self) -> Vec<Vec<Arc>> {
        let mut out = vec![Vec::new(); self.num_vertices()];
        for (f, fin) in self.fins.iter().enumerate() {
            for pos in 0..fin.len() {
                let a = Arc { fin: f, pos };
                out[self.arc_vertex(a)].push(a);
            }
        }
        out
    }

    /// Arc ends grouped by outgoing dart.
    pub fn ends_by_dart(&self) -> Vec<Vec<ArcEnd>> {
        let mut out = vec![Vec::new(); self.graph.num_darts()];
        for (f, fin) in self.fins.iter().enumerate() {
            for pos in 0..fin.len() {
                for side in [Side::Next, Side::Prev] {
                    let e = ArcEnd { arc: Arc { fin: f, pos }, side };
                    out[self.end_dart(e).0].push(e);
                }
            }
        }
        out
    }

    /// Sum of lengths of oriented fins of colour `c`, divided by |V|.
    pub fn density(&self, colour: &str) -> Rational {
        let total: usize = self
            .oriented_fins()
            .filter(|of| self.colour(*of) == colour)
            .map(|of| self.fins[of.fin].len())
            .sum();
        Rational::new(BigInt::from(total), BigInt::from(self.num_vertices()))
    }

    pub fn densities(&self) -> BTreeMap<String, Rational> {
        self.colour_set().into_iter().map(|c| {
            let d = self.density(&c);
            (c, d)
        }).collect()
    }

    /// Replaces every edge by a path of `k` edges.
    ///
    /// Original vertices keep their names; the `j`-th piece of edge `e` is
    /// named `e/j` and interior vertices `e/j` for `1 <= j < k`.
    pub fn subdivide(&self, k: usize) -> Result<GraphWithFins, FinGraphError> {
        if k == 0 {
            return Err(FinGraphError::BadSubdivision(k));
        }
        if k == 1 {
            return Ok(self.clone());
        }
        let g = &self.graph;
        let mut names: Vec<String> = g.vertex_names().to_vec();
        let mut edges = Vec::new();
        for e in 0..g.num_edges() {
            let (from, to) = g.edge_ends(e);
            let first_interior = names.len();
            for j in 1..k {
                names.push(format!("{}/{}", g.edge_name(e), j));
            }
            for j in 0..k {
                let a = if j == 0 { from } else { first_interior + j - 1 };
                let b = if j + 1 == k { to } else { first_interior + j };
                edges.push((format!("{}/{}", g.edge_name(e), j), a, b));
            }
        }
        let sub = Graph::new(names, edges)?;
        let fins = self
            .fins
            .iter()
            .map(|fin| {
                let mut cycle = Vec::with_capacity(fin.len() * k);
                for d in &fin.cycle {
                    let base = d.edge() * k;
                    if d.is_forward() {
                        cycle.extend((0..k).map(|j| Dart::new(base + j, true)));
                    } else {
                        cycle.extend((0..k).rev().map(|j| Dart::new(base + j, false)));
                    }
                }
                Fin { name: fin.name.clone(), cycle }
            })
            .collect();
        GraphWithFins::new(sub, fins, self.colours.clone())
    }

    /// Connected component containing vertex `root`, with fins restricted to it.
    pub fn component(&self, root: usize) -> GraphWithFins {
        let comp = self.graph.components();
        let keep: Vec<usize> = (0..self.num_vertices()).filter(|&v| comp[v] == comp[root]).collect();
        let mut new_index = vec![usize::MAX; self.num_vertices()];
        for (i, &v) in keep.iter().enumerate() {
            new_index[v] = i;
        }
        let names = keep.iter().map(|&v| self.graph.vertex_name(v).to_string()).collect();
        let mut edge_index = vec![usize::MAX; self.graph.num_edges()];
        let mut edges = Vec::new();
        for e in 0..self.graph.num_edges() {
            let (a, b) = self.graph.edge_ends(e);
            if comp[a] == comp[root] {
                edge_index[e] = edges.len();
                edges.push((self.graph.edge_name(e).to_string(), new_index[a], new_index[b]));
            }
        }
        let graph = Graph::new(names, edges).expect("sub-graph of a valid graph");
        let mut fins = Vec::new();
        let mut colours = Vec::new();
        for (f, fin) in self.fins.iter().enumerate() {
            if comp[self.graph.origin(fin.cycle[0])] != comp[root] {
                continue;
            }
            let cycle = fin
                .cycle
                .iter()
                .map(|d| Dart::new(edge_index[d.edge()], d.is_forward()))
                .collect();
            fins.push(Fin { name: fin.name.clone(), cycle });
            colours.push(self.colours[f].clone());
        }
        GraphWithFins::new(graph, fins, colours).expect("restriction of a valid graph with fins")
    }

    pub fn describe_oriented(&self, of: OrientedFin) -> String {
        format!("{}:{}", self.fins[of.fin].name, of.dir.suffix())
    }
}

impl fmt::Display for GraphWithFins {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "graph with {} vertices, {} edges, {} fins",
            self.graph.num_vertices(),
            self.graph.num_edges(),
            self.fins.len()
        )
    }
}
