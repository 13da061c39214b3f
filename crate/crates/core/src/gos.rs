//! Graphs of spaces whose edge spaces are circles, and their invariants:
//! cylinder numbers, stretch ratios, volumes and densities.
//!
//! Rigid vertex spaces are graphs with fins. Every fin is the image of
//! exactly one edge circle, which also maps homeomorphically onto the fibre
//! of a cylindrical vertex space (a circle, or a torus with one transverse
//! direction). An edge's `sign` records how orientations match: the positive
//! orientation of the fibre reads the fin forwards exactly when the sign is
//! `Forward`.

use std::collections::{BTreeMap, BTreeSet};

use num_integer::Integer;
use num_traits::{One, Zero};
use serde::{Deserialize, Serialize};

use crate::error::GosError;
use crate::fins::{Direction, Fin, GraphWithFins, OrientedFin};
use crate::graph::check_unique;
use crate::ratio;
use crate::types::{canonical_colours, refine_local_types, verdict_from_table, CanonicalColouring, ColourMode, UniversalCoverVerdict};
use crate::words::primitive_period;
use crate::Rational;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CylinderKind {
    Circle,
    Torus,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Cylinder {
    pub name: String,
    pub kind: CylinderKind,
    /// Rank of the free factor next to the fibre; only 1 is supported for tori.
    pub transverse_rank: usize,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RigidVertex {
    pub name: String,
    pub space: GraphWithFins,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct GosEdge {
    pub name: String,
    pub rigid: usize,
    pub fin: usize,
    pub cylinder: usize,
    pub sign: Direction,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct GraphOfSpaces {
    pub rigid: Vec<RigidVertex>,
    pub cylinders: Vec<Cylinder>,
    pub edges: Vec<GosEdge>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct GosReport {
    pub ok: bool,
    pub problems: Vec<String>,
}

/// Canonical key of the line carried by a fin: the primitive root of its
/// dart cycle, minimised over rotations and reversal.
fn fin_line(fin: &Fin) -> Vec<usize> {
    let fwd: Vec<usize> = fin.darts(Direction::Forward).iter().map(|d| d.0).collect();
    let bwd: Vec<usize> = fin.darts(Direction::Backward).iter().map(|d| d.0).collect();
    [fwd, bwd]
        .iter()
        .flat_map(|w| {
            let p = primitive_period(w);
            (0..p).map(move |k| w[k..p].iter().chain(&w[..k]).copied().collect::<Vec<_>>())
        })
        .min()
        .unwrap_or_default()
}

impl GraphOfSpaces {
    pub fn edge_index(&self, name: &str) -> Option<usize> {
        self.edges.iter().position(|e| e.name == name)
    }

    /// Edges attached to a cylinder, in edge order.
    pub fn link(&self, cylinder: usize) -> Vec<usize> {
        (0..self.edges.len()).filter(|&e| self.edges[e].cylinder == cylinder).collect()
    }

    /// Fin of edge `e` oriented by orientation `o` of its cylinder.
    pub fn oriented_fin(&self, e: usize, o: Direction) -> OrientedFin {
        let edge = &self.edges[e];
        OrientedFin::new(edge.fin, edge.sign.compose(o))
    }

    /// Colour of edge `e` seen from orientation `o` of its cylinder.
    pub fn edge_colour(&self, e: usize, o: Direction) -> &str {
        self.rigid[self.edges[e].rigid].space.colour(self.oriented_fin(e, o))
    }

    pub fn fin_length(&self, e: usize) -> usize {
        let edge = &self.edges[e];
        self.rigid[edge.rigid].space.fin(edge.fin).len()
    }

    /// Total number of vertices over all rigid vertex spaces.
    pub fn volume(&self) -> usize {
        self.rigid.iter().map(|r| r.space.num_vertices()).sum()
    }

    /// Cylinders and edge circles contribute nothing.
    pub fn euler_characteristic(&self) -> i64 {
        self.rigid.iter().map(|r| r.space.graph().euler_characteristic()).sum()
    }

    /// Same object with every rigid space recoloured.
    pub fn recoloured(&self, colours: &[Vec<[String; 2]>]) -> GraphOfSpaces {
        let mut g = self.clone();
        for (r, c) in g.rigid.iter_mut().zip(colours) {
            r.space = r.space.with_colours(c.clone()).expect("same fins");
        }
        g
    }

    /// Every rigid space subdivided `k` times; fins keep their order.
    pub fn subdivide_rigid(&self, k: usize) -> Result<GraphOfSpaces, GosError> {
        let mut g = self.clone();
        for r in &mut g.rigid {
            r.space = r.space.subdivide(k)?;
        }
        Ok(g)
    }

    fn is_connected(&self) -> bool {
        let n = self.rigid.len() + self.cylinders.len();
        if n == 0 {
            return false;
        }
        let mut parent: Vec<usize> = (0..n).collect();
        fn find(p: &mut [usize], x: usize) -> usize {
            let mut r = x;
            while p[r] != r {
                r = p[r];
            }
            p[x] = r;
            r
        }
        for e in &self.edges {
            let a = find(&mut parent, e.rigid);
            let b = find(&mut parent, self.rigid.len() + e.cylinder);
            parent[a] = b;
        }
        let root = find(&mut parent, 0);
        (0..n).all(|x| find(&mut parent, x) == root)
    }
}

/// Checks every structural requirement and lists all violations.
pub fn validate_gos(g: &GraphOfSpaces) -> GosReport {
    let mut problems = Vec::new();
    for (what, names) in [
        ("rigid vertex", g.rigid.iter().map(|r| r.name.clone()).collect::<Vec<_>>()),
        ("cylinder", g.cylinders.iter().map(|c| c.name.clone()).collect()),
        ("edge", g.edges.iter().map(|e| e.name.clone()).collect()),
    ] {
        if let Err(e) = check_unique(&names, what) {
            problems.push(e.to_string());
        }
    }
    for c in &g.cylinders {
        match (c.kind, c.transverse_rank) {
            (CylinderKind::Circle, _) | (CylinderKind::Torus, 1) => {}
            (CylinderKind::Torus, r) => problems.push(format!(
                "cylinder {} has transverse rank {r}; only rank 1 tori are supported",
                c.name
            )),
        }
    }
    let mut attached: Vec<Vec<usize>> = g.rigid.iter().map(|r| vec![0; r.space.num_fins()]).collect();
    for e in &g.edges {
        if e.rigid >= g.rigid.len() || e.cylinder >= g.cylinders.len() {
            problems.push(format!("edge {} has a dangling endpoint", e.name));
            continue;
        }
        match attached[e.rigid].get_mut(e.fin) {
            Some(n) => *n += 1,
            None => problems.push(format!("edge {} names a missing fin", e.name)),
        }
    }
    for (u, r) in g.rigid.iter().enumerate() {
        if !r.space.graph().is_connected() {
            problems.push(format!("rigid vertex {} has a disconnected space", r.name));
        }
        for (f, &n) in attached[u].iter().enumerate() {
            let fin = &r.space.fin(f).name;
            match n {
                1 => {}
                0 => problems.push(format!("fin {fin} of {} has no edge", r.name)),
                _ => problems.push(format!("fin {fin} of {} has {n} edges", r.name)),
            }
        }
        let mut lines: BTreeMap<Vec<usize>, &str> = BTreeMap::new();
        for fin in r.space.fins() {
            if let Some(other) = lines.insert(fin_line(fin), &fin.name) {
                problems.push(format!("fins {other} and {} of {} carry the same line", fin.name, r.name));
            }
        }
    }
    for (v, c) in g.cylinders.iter().enumerate() {
        if g.link(v).is_empty() {
            problems.push(format!("cylinder {} has no edges", c.name));
        }
    }
    if !g.is_connected() {
        problems.push("underlying graph is disconnected".into());
    }
    GosReport { ok: problems.is_empty(), problems }
}

/// `t_c(v, O)` for every cylinder, orientation and colour with a nonzero count.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CylinderNumbers {
    /// Keyed by (cylinder, orientation, colour).
    pub counts: BTreeMap<(usize, Direction, String), usize>,
}

impl CylinderNumbers {
    pub fn get(&self, v: usize, o: Direction, colour: &str) -> usize {
        self.counts.get(&(v, o, colour.to_string())).copied().unwrap_or(0)
    }

    /// The function `c -> t_c(v, O)` at one oriented cylinder.
    pub fn profile(&self, v: usize, o: Direction) -> BTreeMap<String, usize> {
        self.counts
            .iter()
            .filter(|((w, p, _), _)| *w == v && *p == o)
            .map(|((_, _, c), &n)| (c.clone(), n))
            .collect()
    }
}

pub fn cylinder_numbers(g: &GraphOfSpaces) -> CylinderNumbers {
    let mut counts = BTreeMap::new();
    for (e, edge) in g.edges.iter().enumerate() {
        for o in [Direction::Forward, Direction::Backward] {
            *counts.entry((edge.cylinder, o, g.edge_colour(e, o).to_string())).or_insert(0) += 1;
        }
    }
    CylinderNumbers { counts }
}

/// Colour reversal read off the fins, if it is a function.
pub fn colour_reversal(g: &GraphOfSpaces) -> Option<BTreeMap<String, String>> {
    let mut rev = BTreeMap::new();
    for r in &g.rigid {
        for [a, b] in r.space.colour_pairs() {
            for (x, y) in [(a, b), (b, a)] {
                if rev.insert(x.clone(), y.clone()).is_some_and(|old| old != *y) {
                    return None;
                }
            }
        }
    }
    Some(rev)
}

/// Checks `t_c(v, O) = t_{rev c}(v, rev O)` for every cylinder, orientation
/// and colour, including colours absent at the cylinder.
pub fn check_flip_identity(g: &GraphOfSpaces, t: &CylinderNumbers, reversal: &BTreeMap<String, String>) -> bool {
    (0..g.cylinders.len()).all(|v| {
        [Direction::Forward, Direction::Backward].into_iter().all(|o| {
            reversal.iter().all(|(c, cbar)| t.get(v, o, c) == t.get(v, o.reverse(), cbar))
        })
    })
}

/// Fin lengths over the link of a cylinder, divided by their gcd.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct StretchRatio {
    pub edges: Vec<String>,
    pub ratio: Vec<u64>,
}

pub fn stretch_ratio(g: &GraphOfSpaces, v: usize) -> StretchRatio {
    let link = g.link(v);
    let lengths: Vec<u64> = link.iter().map(|&e| g.fin_length(e) as u64).collect();
    let d = lengths.iter().fold(0u64, |a, &b| a.gcd(&b)).max(1);
    StretchRatio {
        edges: link.iter().map(|&e| g.edges[e].name.clone()).collect(),
        ratio: lengths.iter().map(|l| l / d).collect(),
    }
}

/// Classes of rigid vertices sharing a universal cover (colours respected).
/// Returns the class index of every rigid vertex, numbered by first occurrence.
pub fn rigid_classes(spaces: &[&GraphWithFins]) -> Vec<usize> {
    let table = refine_local_types(spaces, ColourMode::Respect);
    let mut class: Vec<usize> = Vec::with_capacity(spaces.len());
    let mut reps: Vec<usize> = Vec::new();
    for i in 0..spaces.len() {
        let found = reps.iter().position(|&r| {
            verdict_from_table(&table, spaces[r], spaces[i], r, i) == UniversalCoverVerdict::Compatible
        });
        match found {
            Some(k) => class.push(k),
            None => {
                class.push(reps.len());
                reps.push(i);
            }
        }
    }
    class
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ColourDensityCheck {
    pub colour: String,
    #[serde(with = "ratio::as_string")]
    pub lhs: Rational,
    #[serde(with = "ratio::as_string")]
    pub rhs: Rational,
    pub ok: bool,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct DensityReport {
    pub volume: usize,
    /// Class index of every rigid vertex.
    pub class_of: Vec<usize>,
    /// `rho_[u]` per class.
    #[serde(with = "rational_vec")]
    pub class_density: Vec<Rational>,
    /// `rho_c` per colour, constant on its class.
    #[serde(with = "ratio::map_as_string")]
    pub colour_density: BTreeMap<String, Rational>,
    /// Class carrying each colour.
    pub colour_class: BTreeMap<String, usize>,
    pub class_densities_sum_to_one: bool,
    pub checks: Vec<ColourDensityCheck>,
    pub ok: bool,
}

pub(crate) mod rational_vec {
    use serde::{Deserialize, Deserializer, Serializer};

    use crate::Rational;

    pub fn serialize<S: Serializer>(v: &[Rational], s: S) -> Result<S::Ok, S::Error> {
        s.collect_seq(v.iter().map(|r| r.to_string()))
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Vec<Rational>, D::Error> {
        Vec::<String>::deserialize(d)?
            .into_iter()
            .map(|s| s.parse::<Rational>().map_err(serde::de::Error::custom))
            .collect()
    }
}

/// Volume, class densities and colour densities, with the identity
/// `sum of lengths of fins coloured c = rho_c rho_[u] |X|` checked per colour.
pub fn densities(g: &GraphOfSpaces) -> Result<DensityReport, GosError> {
    let spaces: Vec<&GraphWithFins> = g.rigid.iter().map(|r| &r.space).collect();
    let class_of = rigid_classes(&spaces);
    let volume = g.volume();
    if volume == 0 {
        return Err(GosError::Malformed("no rigid vertices".into()));
    }
    let classes = class_of.iter().max().map_or(0, |m| m + 1);
    let mut class_size = vec![0usize; classes];
    for (u, r) in g.rigid.iter().enumerate() {
        class_size[class_of[u]] += r.space.num_vertices();
    }
    let class_density: Vec<Rational> =
        class_size.iter().map(|&n| ratio::frac(n as i64, volume as i64)).collect();

    let mut colour_density: BTreeMap<String, Rational> = BTreeMap::new();
    let mut colour_class: BTreeMap<String, usize> = BTreeMap::new();
    let mut owner: BTreeMap<String, &str> = BTreeMap::new();
    for (u, r) in g.rigid.iter().enumerate() {
        for c in r.space.colour_set() {
            let rho = r.space.density(&c);
            if let Some(&k) = colour_class.get(&c) {
                if k != class_of[u] {
                    return Err(GosError::InconsistentClassDensity {
                        colour: c.clone(),
                        detail: format!("appears in two rigid classes, at {} and {}", owner[&c], r.name),
                    });
                }
            }
            if let Some(prev) = colour_density.get(&c) {
                if *prev != rho {
                    return Err(GosError::InconsistentClassDensity {
                        colour: c.clone(),
                        detail: format!("{} has {prev} but {} has {rho}", owner[&c], r.name),
                    });
                }
            }
            colour_class.insert(c.clone(), class_of[u]);
            owner.insert(c.clone(), &r.name);
            colour_density.insert(c, rho);
        }
    }
    // A colour missing from one space of its class has density zero there.
    for (u, r) in g.rigid.iter().enumerate() {
        for (c, &k) in &colour_class {
            if k == class_of[u] && !r.space.colour_set().contains(c) {
                return Err(GosError::InconsistentClassDensity {
                    colour: c.clone(),
                    detail: format!("absent from {}", r.name),
                });
            }
        }
    }

    let mut checks = Vec::new();
    for (c, rho) in &colour_density {
        let mut lhs = Rational::zero();
        for r in &g.rigid {
            for of in r.space.oriented_fins() {
                if r.space.colour(of) == c {
                    lhs += ratio::int(r.space.fin(of.fin).len() as i64);
                }
            }
        }
        let rhs = rho * &class_density[colour_class[c]] * ratio::int(volume as i64);
        checks.push(ColourDensityCheck { colour: c.clone(), ok: lhs == rhs, lhs, rhs });
    }
    let sum: Rational = class_density.iter().sum();
    let class_densities_sum_to_one = sum.is_one();
    let ok = class_densities_sum_to_one && checks.iter().all(|c| c.ok);
    Ok(DensityReport {
        volume,
        class_of,
        class_density,
        colour_density,
        colour_class,
        class_densities_sum_to_one,
        checks,
        ok,
    })
}

/// Recolours the rigid spaces of several graphs of spaces jointly by their
/// structural fin labels, ignoring the given colours.
pub fn canonically_coloured(inputs: &[&GraphOfSpaces]) -> (Vec<GraphOfSpaces>, CanonicalColouring) {
    let spaces: Vec<&GraphWithFins> = inputs.iter().flat_map(|g| g.rigid.iter().map(|r| &r.space)).collect();
    let (_, canon) = canonical_colours(&spaces, ColourMode::Ignore);
    let mut out = Vec::new();
    let mut k = 0;
    for g in inputs {
        let n = g.rigid.len();
        out.push(g.recoloured(&canon.labels[k..k + n]));
        k += n;
    }
    (out, canon)
}

/// Set of colours used on edges, with both orientations.
pub fn edge_colours(g: &GraphOfSpaces) -> BTreeSet<String> {
    (0..g.edges.len())
        .flat_map(|e| [Direction::Forward, Direction::Backward].map(|o| g.edge_colour(e, o).to_string()))
        .collect()
}

#[cfg(test)]
pub(crate) mod fixtures {
    use super::*;
    use crate::words::{pattern_to_fins, Word};

    pub fn rose(words: &[&str]) -> GraphWithFins {
        let ws: Vec<Word> = words.iter().map(|w| Word::parse(w).unwrap()).collect();
        pattern_to_fins(2, &ws).unwrap()
    }

    /// One rigid rose carrying the word `w`, glued to a torus.
    pub fn single_edge(w: &str) -> GraphOfSpaces {
        GraphOfSpaces {
            rigid: vec![RigidVertex { name: "u".into(), space: rose(&[w]) }],
            cylinders: vec![Cylinder { name: "v".into(), kind: CylinderKind::Torus, transverse_rank: 1 }],
            edges: vec![GosEdge { name: "e".into(), rigid: 0, fin: 0, cylinder: 0, sign: Direction::Forward }],
        }
    }
}
