//! Covering maps of graphs with fins and their verification.

use std::collections::BTreeSet;
use std::fmt;

use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::FinGraphError;
use crate::fins::{Arc, ArcEnd, Direction, Fin, GraphWithFins, OrientedFin, Side};
use crate::graph::{Dart, Graph};

/// Image of a source fin: the trace starting at `offset` of the target fin
/// read in direction `dir`, wrapped `degree` times.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct FinImage {
    pub fin: usize,
    pub offset: usize,
    pub degree: usize,
    pub dir: Direction,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CoveringMap {
    pub vertex_map: Vec<usize>,
    pub dart_map: Vec<Dart>,
    pub fin_map: Vec<FinImage>,
}

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum CoverFailure {
    Shape { detail: String },
    Reversal { dart: String },
    Incidence { dart: String },
    NotLocallyBijective { vertex: String },
    NonUniformDegree { vertex: String, preimages: usize, expected: usize },
    FinTrace { fin: String, detail: String },
    Colour { fin: String, source: String, target: String },
    ArcBijection { vertex: String },
}

impl fmt::Display for CoverFailure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CoverFailure::Shape { detail } => write!(f, "malformed map: {detail}"),
            CoverFailure::Reversal { dart } => write!(f, "dart map does not commute with reversal at {dart}"),
            CoverFailure::Incidence { dart } => write!(f, "dart map does not commute with origin at {dart}"),
            CoverFailure::NotLocallyBijective { vertex } => write!(f, "star of {vertex} not mapped bijectively"),
            CoverFailure::NonUniformDegree { vertex, preimages, expected } => {
                write!(f, "vertex {vertex} has {preimages} preimages, expected {expected}")
            }
            CoverFailure::FinTrace { fin, detail } => write!(f, "fin {fin}: {detail}"),
            CoverFailure::Colour { fin, source, target } => {
                write!(f, "oriented fin {fin} has colour {source} but maps to colour {target}")
            }
            CoverFailure::ArcBijection { vertex } => write!(f, "arcs at {vertex} not mapped bijectively"),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CoverReport {
    pub ok: bool,
    pub degree: Option<usize>,
    pub failures: Vec<CoverFailure>,
}

impl CoveringMap {
    /// Target arc end hit by a source arc end.
    pub fn map_end(&self, target: &GraphWithFins, end: ArcEnd) -> ArcEnd {
        let img = self.fin_map[end.arc.fin];
        let len = target.fin(img.fin).len();
        let k = (img.offset + end.arc.pos) % len;
        match img.dir {
            Direction::Forward => ArcEnd { arc: Arc { fin: img.fin, pos: k }, side: end.side },
            Direction::Backward => {
                ArcEnd { arc: Arc { fin: img.fin, pos: (len - k) % len }, side: end.side.other() }
            }
        }
    }

    pub fn map_oriented(&self, of: OrientedFin) -> OrientedFin {
        let img = self.fin_map[of.fin];
        OrientedFin::new(img.fin, img.dir.compose(of.dir))
    }

    /// Composite `other ∘ self`.
    pub fn then(&self, middle: &GraphWithFins, last: &GraphWithFins, other: &CoveringMap) -> CoveringMap {
        let vertex_map = self.vertex_map.iter().map(|&v| other.vertex_map[v]).collect();
        let dart_map = self.dart_map.iter().map(|d| other.dart_map[d.0]).collect();
        let fin_map = self
            .fin_map
            .iter()
            .enumerate()
            .map(|(f, img)| {
                let second = other.fin_map[img.fin];
                let start = ArcEnd { arc: Arc { fin: f, pos: 0 }, side: Side::Next };
                let hit = other.map_end(last, self.map_end(middle, start));
                let len = last.fin(second.fin).len();
                let dir = img.dir.compose(second.dir);
                let offset = match dir {
                    Direction::Forward => hit.arc.pos,
                    Direction::Backward => (len - hit.arc.pos) % len,
                };
                FinImage { fin: second.fin, offset, degree: img.degree * second.degree, dir }
            })
            .collect();
        CoveringMap { vertex_map, dart_map, fin_map }
    }
}

fn trace(fin: &Fin, dir: Direction, offset: usize, len: usize) -> Vec<Dart> {
    let seq = fin.darts(dir);
    (0..len).map(|i| seq[(offset + i) % seq.len()]).collect()
}

/// Checks every covering condition and reports all violations found.
pub fn verify_covering(
    source: &GraphWithFins,
    target: &GraphWithFins,
    map: &CoveringMap,
) -> CoverReport {
    let sg = source.graph();
    let tg = target.graph();
    let mut failures = BTreeSet::new();
    let fail = |failures: &mut BTreeSet<CoverFailure>, f| {
        failures.insert(f);
    };

    if map.vertex_map.len() != sg.num_vertices()
        || map.dart_map.len() != sg.num_darts()
        || map.fin_map.len() != source.num_fins()
    {
        fail(&mut failures, CoverFailure::Shape { detail: "map lengths do not match source".into() });
        return report(failures, None);
    }
    if map.vertex_map.iter().any(|&v| v >= tg.num_vertices())
        || map.dart_map.iter().any(|d| d.0 >= tg.num_darts())
        || map.fin_map.iter().any(|i| {
            i.fin >= target.num_fins() || i.offset >= target.fin(i.fin).len() || i.degree == 0
        })
    {
        fail(&mut failures, CoverFailure::Shape { detail: "map value out of range".into() });
        return report(failures, None);
    }

    for d in sg.darts() {
        let img = map.dart_map[d.0];
        if map.dart_map[d.reverse().0] != img.reverse() {
            fail(&mut failures, CoverFailure::Reversal { dart: sg.dart_name(d) });
        }
        if tg.origin(img) != map.vertex_map[sg.origin(d)] {
            fail(&mut failures, CoverFailure::Incidence { dart: sg.dart_name(d) });
        }
    }

    for v in 0..sg.num_vertices() {
        let w = map.vertex_map[v];
        let mut imgs: Vec<Dart> = sg.star(v).iter().map(|d| map.dart_map[d.0]).collect();
        imgs.sort();
        if imgs != tg.star(w) {
            fail(&mut failures, CoverFailure::NotLocallyBijective { vertex: sg.vertex_name(v).into() });
        }
    }

    let mut counts = vec![0usize; tg.num_vertices()];
    for &w in &map.vertex_map {
        counts[w] += 1;
    }
    let degree = counts.first().copied().unwrap_or(0);
    for (w, &c) in counts.iter().enumerate() {
        if c != degree || c == 0 {
            fail(
                &mut failures,
                CoverFailure::NonUniformDegree {
                    vertex: tg.vertex_name(w).into(),
                    preimages: c,
                    expected: degree.max(1),
                },
            );
        }
    }

    let mut traces_ok = true;
    for (f, fin) in source.fins().iter().enumerate() {
        let img = map.fin_map[f];
        let tfin = target.fin(img.fin);
        if fin.len() != img.degree * tfin.len() {
            traces_ok = false;
            fail(
                &mut failures,
                CoverFailure::FinTrace {
                    fin: fin.name.clone(),
                    detail: format!(
                        "length {} is not degree {} times target length {}",
                        fin.len(),
                        img.degree,
                        tfin.len()
                    ),
                },
            );
            continue;
        }
        let mapped: Vec<Dart> = fin.cycle.iter().map(|d| map.dart_map[d.0]).collect();
        if mapped != trace(tfin, img.dir, img.offset, fin.len()) {
            traces_ok = false;
            fail(
                &mut failures,
                CoverFailure::FinTrace {
                    fin: fin.name.clone(),
                    detail: format!("image is not the trace of {}", tfin.name),
                },
            );
        }
        for dir in [Direction::Forward, Direction::Backward] {
            let of = OrientedFin::new(f, dir);
            let s = source.colour(of);
            let t = target.colour(map.map_oriented(of));
            if s != t {
                fail(
                    &mut failures,
                    CoverFailure::Colour {
                        fin: source.describe_oriented(of),
                        source: s.into(),
                        target: t.into(),
                    },
                );
            }
        }
    }

    if traces_ok {
        let src_arcs = source.arcs_by_vertex();
        let tgt_arcs = target.arcs_by_vertex();
        for v in 0..sg.num_vertices() {
            let mut imgs: Vec<Arc> = src_arcs[v]
                .iter()
                .map(|&a| map.map_end(target, ArcEnd { arc: a, side: Side::Next }).arc)
                .collect();
            imgs.sort();
            if imgs != tgt_arcs[map.vertex_map[v]] {
                fail(&mut failures, CoverFailure::ArcBijection { vertex: sg.vertex_name(v).into() });
            }
        }
    }

    let deg = if failures.is_empty() { Some(degree) } else { None };
    report(failures, deg)
}

fn report(failures: BTreeSet<CoverFailure>, degree: Option<usize>) -> CoverReport {
    CoverReport { ok: failures.is_empty(), degree, failures: failures.into_iter().collect() }
}

/// A covering map of bare graphs.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct GraphCover {
    pub vertex_map: Vec<usize>,
    pub dart_map: Vec<Dart>,
}

/// Returns the degree, or a description of the first violated condition.
pub fn verify_graph_cover(source: &Graph, target: &Graph, map: &GraphCover) -> Result<usize, String> {
    if map.vertex_map.len() != source.num_vertices() || map.dart_map.len() != source.num_darts() {
        return Err("map lengths do not match source".into());
    }
    for d in source.darts() {
        let img = map.dart_map[d.0];
        if img.0 >= target.num_darts() || map.dart_map[d.reverse().0] != img.reverse() {
            return Err(format!("reversal fails at {}", source.dart_name(d)));
        }
        if target.origin(img) != map.vertex_map[source.origin(d)] {
            return Err(format!("incidence fails at {}", source.dart_name(d)));
        }
    }
    for v in 0..source.num_vertices() {
        let mut imgs: Vec<Dart> = source.star(v).iter().map(|d| map.dart_map[d.0]).collect();
        imgs.sort();
        if imgs != target.star(map.vertex_map[v]) {
            return Err(format!("star of {} not mapped bijectively", source.vertex_name(v)));
        }
    }
    let mut counts = vec![0usize; target.num_vertices()];
    for &w in &map.vertex_map {
        counts[w] += 1;
    }
    let d = counts[0];
    if d == 0 || counts.iter().any(|&c| c != d) {
        return Err("preimage counts are not uniform".into());
    }
    Ok(d)
}

/// Lifts the fins of `base` through a graph covering.
///
/// Lifted fins are named `fin.k` in order of discovery; colours are pulled back.
pub fn induced_cover(
    base: &GraphWithFins,
    cover: &Graph,
    map: &GraphCover,
) -> Result<(GraphWithFins, CoveringMap), FinGraphError> {
    verify_graph_cover(cover, base.graph(), map).map_err(FinGraphError::NotACovering)?;
    let lift = lift_table(cover, map);
    let mut fins = Vec::new();
    let mut colours = Vec::new();
    let mut fin_map = Vec::new();
    for (t, fin) in base.fins().iter().enumerate() {
        let start = base.graph().origin(fin.cycle[0]);
        let mut used = vec![false; cover.num_vertices()];
        let mut count = 0;
        for w in 0..cover.num_vertices() {
            if map.vertex_map[w] != start || used[w] {
                continue;
            }
            let mut cycle = Vec::new();
            let mut cur = w;
            let mut passes = 0;
            loop {
                used[cur] = true;
                for &d in &fin.cycle {
                    let dd = lift[cur][d.0];
                    cycle.push(dd);
                    cur = cover.terminus(dd);
                }
                passes += 1;
                if cur == w {
                    break;
                }
            }
            fins.push(Fin { name: format!("{}.{}", fin.name, count), cycle });
            colours.push(base.colour_pairs()[t].clone());
            fin_map.push(FinImage { fin: t, offset: 0, degree: passes, dir: Direction::Forward });
            count += 1;
        }
    }
    let lifted = GraphWithFins::new(cover.clone(), fins, colours)?;
    let cmap = CoveringMap { vertex_map: map.vertex_map.clone(), dart_map: map.dart_map.clone(), fin_map };
    Ok((lifted, cmap))
}

// Indexed by (cover vertex, raw base dart id).
fn lift_table(cover: &Graph, map: &GraphCover) -> Vec<Vec<Dart>> {
    let base_darts = map.dart_map.iter().map(|d| d.0).max().map_or(0, |m| (m | 1) + 1);
    let mut table = vec![vec![Dart(usize::MAX); base_darts]; cover.num_vertices()];
    for d in cover.darts() {
        table[cover.origin(d)][map.dart_map[d.0].0] = d;
    }
    table
}

/// A random degree-`degree` cover given by one permutation per edge.
///
/// Vertex `(v, i)` is named `v.i`; edge `(e, i)` runs from `(from, i)` to
/// `(to, perm_e(i))`.
pub fn random_graph_cover<R: Rng + ?Sized>(g: &Graph, degree: usize, rng: &mut R) -> (Graph, GraphCover) {
    let n = g.num_vertices();
    let mut names = Vec::with_capacity(n * degree);
    let mut vertex_map = Vec::with_capacity(n * degree);
    for v in 0..n {
        for i in 0..degree {
            names.push(format!("{}.{}", g.vertex_name(v), i));
            vertex_map.push(v);
        }
    }
    let mut edges = Vec::new();
    let mut dart_map = Vec::new();
    for e in 0..g.num_edges() {
        let (from, to) = g.edge_ends(e);
        let mut perm: Vec<usize> = (0..degree).collect();
        perm.shuffle(rng);
        for (i, &p) in perm.iter().enumerate() {
            edges.push((format!("{}.{}", g.edge_name(e), i), from * degree + i, to * degree + p));
            dart_map.push(Dart::new(e, true));
            dart_map.push(Dart::new(e, false));
        }
    }
    let cover = Graph::new(names, edges).expect("permutation cover is well formed");
    (cover, GraphCover { vertex_map, dart_map })
}

/// Random connected cover; gives up after `tries` attempts.
pub fn random_connected_cover<R: Rng + ?Sized>(
    g: &Graph,
    degree: usize,
    tries: usize,
    rng: &mut R,
) -> Option<(Graph, GraphCover)> {
    (0..tries)
        .map(|_| random_graph_cover(g, degree, rng))
        .find(|(c, _)| c.is_connected())
}
