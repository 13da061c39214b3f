//! Iterated local types.
//!
//! Labels live on vertices, darts and arc ends of several inputs at once, so
//! labels are comparable across the inputs of one run. Each round a vertex is
//! relabelled by the isomorphism class of its star decorated with the
//! previous dart and end labels; darts and ends look one step further along
//! the graph. Rounds stop when the joint partition stops splitting.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use crate::fins::{Arc, ArcEnd, Direction, GraphWithFins, OrientedFin, Side};
use crate::graph::Dart;
use crate::star::Star;
use crate::words::primitive_period;

/// Whether user colours seed the refinement.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum ColourMode {
    Respect,
    Ignore,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TypeTable {
    pub mode: ColourMode,
    pub rounds: usize,
    /// `vertex[i][v]` is the stable label of vertex `v` of input `i`.
    pub vertex: Vec<Vec<u32>>,
    pub dart: Vec<Vec<u32>>,
    end_offsets: Vec<Vec<usize>>,
    end: Vec<Vec<u32>>,
}

impl TypeTable {
    pub fn end_label(&self, input: usize, end: ArcEnd) -> u32 {
        let side = match end.side {
            Side::Next => 0,
            Side::Prev => 1,
        };
        self.end[input][2 * (self.end_offsets[input][end.arc.fin] + end.arc.pos) + side]
    }

    pub fn dart_label(&self, input: usize, d: Dart) -> u32 {
        self.dart[input][d.0]
    }

    pub fn vertex_types(&self, input: usize) -> BTreeSet<u32> {
        self.vertex[input].iter().copied().collect()
    }

    pub(crate) fn star(&self, x: &GraphWithFins, input: usize, v: usize, arcs: &[Arc]) -> Star {
        Star::build(x, v, arcs, |d| self.dart_label(input, d), |e| self.end_label(input, e))
    }
}

fn end_offsets(x: &GraphWithFins) -> Vec<usize> {
    let mut acc = 0;
    x.fins()
        .iter()
        .map(|f| {
            let o = acc;
            acc += f.len();
            o
        })
        .collect()
}

fn end_at(offsets: &[usize], idx: usize) -> ArcEnd {
    let slot = idx / 2;
    let fin = offsets.partition_point(|&o| o <= slot) - 1;
    let side = if idx.is_multiple_of(2) { Side::Next } else { Side::Prev };
    ArcEnd { arc: Arc { fin, pos: slot - offsets[fin] }, side }
}

/// Replaces signatures by their rank among all signatures of the same kind.
fn relabel<S: Ord + Clone>(sigs: Vec<Vec<S>>) -> (Vec<Vec<u32>>, usize) {
    let all: BTreeSet<S> = sigs.iter().flatten().cloned().collect();
    let index: BTreeMap<S, u32> = all.into_iter().enumerate().map(|(i, s)| (s, i as u32)).collect();
    let labels = sigs.iter().map(|v| v.iter().map(|s| index[s]).collect()).collect();
    (labels, index.len())
}

/// Joint refinement of all inputs to the stable partition.
pub fn refine_local_types(inputs: &[&GraphWithFins], mode: ColourMode) -> TypeTable {
    let offsets: Vec<Vec<usize>> = inputs.iter().map(|x| end_offsets(x)).collect();
    let arcs: Vec<Vec<Vec<Arc>>> = inputs.iter().map(|x| x.arcs_by_vertex()).collect();
    let ends_at: Vec<Vec<Vec<ArcEnd>>> = inputs.iter().map(|x| x.ends_by_dart()).collect();

    let mut vertex: Vec<Vec<u32>> = inputs.iter().map(|x| vec![0; x.num_vertices()]).collect();
    let mut dart: Vec<Vec<u32>> = inputs.iter().map(|x| vec![0; x.graph().num_darts()]).collect();
    let (mut end, mut end_count) = relabel(
        inputs
            .iter()
            .zip(&offsets)
            .map(|(x, off)| {
                let total = 2 * x.fins().iter().map(|f| f.len()).sum::<usize>();
                (0..total)
                    .map(|i| match mode {
                        ColourMode::Respect => x.end_colour(end_at(off, i)).to_string(),
                        ColourMode::Ignore => String::new(),
                    })
                    .collect()
            })
            .collect(),
    );
    let mut counts = (1usize, 1usize, end_count);
    let mut rounds = 0;
    loop {
        rounds += 1;
        let mut end_sigs = Vec::with_capacity(inputs.len());
        let mut dart_sigs = Vec::with_capacity(inputs.len());
        let mut vertex_sigs = Vec::with_capacity(inputs.len());
        for (i, x) in inputs.iter().enumerate() {
            let g = x.graph();
            let off = &offsets[i];
            let el = |e: ArcEnd| {
                let side = usize::from(e.side == Side::Prev);
                end[i][2 * (off[e.arc.fin] + e.arc.pos) + side]
            };
            let es: Vec<[u32; 4]> = (0..end[i].len())
                .map(|k| {
                    let e = end_at(off, k);
                    let other = ArcEnd { arc: e.arc, side: e.side.other() };
                    [end[i][k], dart[i][x.end_dart(e).0], el(x.across(e)), el(other)]
                })
                .collect();
            end_sigs.push(es);
            let stars: Vec<Star> =
                (0..g.num_vertices()).map(|v| Star::build(x, v, &arcs[i][v], |d| dart[i][d.0], el)).collect();
            // where each dart sits in its star, up to automorphism
            let mut pointed: Vec<Vec<u32>> = vec![Vec::new(); g.num_darts()];
            for star in &stars {
                for (d, form) in star.darts.iter().zip(star.pointed_forms()) {
                    pointed[d.0] = form;
                }
            }
            let ds: Vec<Vec<u32>> = g
                .darts()
                .map(|d| {
                    let mut crossing: Vec<u32> = ends_at[i][d.0].iter().map(|&e| el(e)).collect();
                    crossing.sort();
                    let mut s = vec![dart[i][d.0], vertex[i][g.origin(d)], dart[i][d.reverse().0]];
                    s.extend(crossing);
                    s.push(u32::MAX);
                    s.extend(&pointed[d.0]);
                    s
                })
                .collect();
            dart_sigs.push(ds);
            let vs: Vec<Vec<u32>> = stars
                .iter()
                .enumerate()
                .map(|(v, star)| {
                    let mut s = vec![vertex[i][v]];
                    s.extend(star.canonical_form());
                    s
                })
                .collect();
            vertex_sigs.push(vs);
        }
        let (e2, ec) = relabel(end_sigs);
        let (d2, dc) = relabel(dart_sigs);
        let (v2, vc) = relabel(vertex_sigs);
        end = e2;
        dart = d2;
        vertex = v2;
        end_count = ec;
        let next = (vc, dc, end_count);
        if next == counts {
            break;
        }
        counts = next;
    }
    TypeTable { mode, rounds, vertex, dart, end_offsets: offsets, end }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "verdict", rename_all = "snake_case")]
pub enum UniversalCoverVerdict {
    Compatible,
    Incompatible { witness: String },
}

/// Whether two graphs with fins share their stable vertex types.
pub fn same_universal_cover(
    a: &GraphWithFins,
    b: &GraphWithFins,
    mode: ColourMode,
) -> UniversalCoverVerdict {
    let table = refine_local_types(&[a, b], mode);
    verdict_from_table(&table, a, b, 0, 1)
}

pub(crate) fn verdict_from_table(
    table: &TypeTable,
    a: &GraphWithFins,
    b: &GraphWithFins,
    ia: usize,
    ib: usize,
) -> UniversalCoverVerdict {
    let ta = table.vertex_types(ia);
    let tb = table.vertex_types(ib);
    if let Some(t) = ta.difference(&tb).next() {
        let v = table.vertex[ia].iter().position(|x| x == t).unwrap_or(0);
        return UniversalCoverVerdict::Incompatible {
            witness: format!("vertex {} of the first input has a type absent from the second", a.graph().vertex_name(v)),
        };
    }
    if let Some(t) = tb.difference(&ta).next() {
        let v = table.vertex[ib].iter().position(|x| x == t).unwrap_or(0);
        return UniversalCoverVerdict::Incompatible {
            witness: format!("vertex {} of the second input has a type absent from the first", b.graph().vertex_name(v)),
        };
    }
    UniversalCoverVerdict::Compatible
}

/// Structural labels for oriented fins across a set of inputs.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CanonicalColouring {
    /// `labels[i][f]` holds the forward and backward labels of fin `f` of input `i`.
    pub labels: Vec<Vec<[String; 2]>>,
    /// Label of the reversed orientation, for every label in use.
    pub reversal: BTreeMap<String, String>,
}

impl CanonicalColouring {
    pub fn label(&self, input: usize, of: OrientedFin) -> &str {
        &self.labels[input][of.fin][match of.dir {
            Direction::Forward => 0,
            Direction::Backward => 1,
        }]
    }

    /// Input `i` recoloured with its canonical labels.
    pub fn apply(&self, input: usize, x: &GraphWithFins) -> GraphWithFins {
        x.with_colours(self.labels[input].clone()).expect("same fins, new colours")
    }
}

fn least_rotation<T: Ord + Clone>(w: &[T]) -> Vec<T> {
    (0..w.len())
        .map(|k| w[k..].iter().chain(&w[..k]).cloned().collect::<Vec<_>>())
        .min()
        .unwrap_or_default()
}

/// Word of stable end labels read along an oriented fin, reduced to its
/// primitive root at least rotation.
fn fin_word(table: &TypeTable, input: usize, x: &GraphWithFins, of: OrientedFin) -> Vec<u32> {
    let n = x.fin(of.fin).len();
    let word: Vec<u32> = match of.dir {
        Direction::Forward => (0..n)
            .map(|pos| table.end_label(input, ArcEnd { arc: Arc { fin: of.fin, pos }, side: Side::Next }))
            .collect(),
        Direction::Backward => (0..n)
            .map(|k| {
                let pos = (n - k) % n;
                table.end_label(input, ArcEnd { arc: Arc { fin: of.fin, pos }, side: Side::Prev })
            })
            .collect(),
    };
    let p = primitive_period(&word);
    least_rotation(&word[..p])
}

/// Labels oriented fins by the cyclic word of stable types along them.
///
/// Labels are `k0, k1, ...` numbered by the sorted order of those words, so
/// they are comparable only within one call.
pub fn canonical_colours(inputs: &[&GraphWithFins], mode: ColourMode) -> (TypeTable, CanonicalColouring) {
    let table = refine_local_types(inputs, mode);
    let words: Vec<Vec<[Vec<u32>; 2]>> = inputs
        .iter()
        .enumerate()
        .map(|(i, x)| {
            (0..x.num_fins())
                .map(|f| {
                    [
                        fin_word(&table, i, x, OrientedFin::new(f, Direction::Forward)),
                        fin_word(&table, i, x, OrientedFin::new(f, Direction::Backward)),
                    ]
                })
                .collect()
        })
        .collect();
    let distinct: BTreeSet<&Vec<u32>> = words.iter().flatten().flatten().collect();
    let name: BTreeMap<&Vec<u32>, String> =
        distinct.into_iter().enumerate().map(|(k, w)| (w, format!("k{k}"))).collect();
    let mut reversal = BTreeMap::new();
    let labels = words
        .iter()
        .map(|fins| {
            fins.iter()
                .map(|[f, b]| {
                    let (lf, lb) = (name[f].clone(), name[b].clone());
                    reversal.insert(lf.clone(), lb.clone());
                    reversal.insert(lb.clone(), lf.clone());
                    [lf, lb]
                })
                .collect()
        })
        .collect();
    (table, CanonicalColouring { labels, reversal })
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "verdict", rename_all = "snake_case")]
pub enum Transitivity {
    Pass,
    Fail { colour: String, classes: Vec<String> },
}

/// Checks that each user colour class lies inside one structural class,
/// the computable stand-in for transitivity on fins of each colour.
pub fn check_fin_transitivity(inputs: &[&GraphWithFins]) -> Transitivity {
    let (_, canon) = canonical_colours(inputs, ColourMode::Respect);
    let mut classes: BTreeMap<String, BTreeSet<String>> = BTreeMap::new();
    for (i, x) in inputs.iter().enumerate() {
        for of in x.oriented_fins() {
            classes.entry(x.colour(of).to_string()).or_default().insert(canon.label(i, of).to_string());
        }
    }
    for (colour, set) in classes {
        if set.len() > 1 {
            return Transitivity::Fail { colour, classes: set.into_iter().collect() };
        }
    }
    Transitivity::Pass
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cover::{induced_cover, random_graph_cover};
    use crate::fins::Fin;
    use crate::graph::Graph;
    use crate::words::{pattern_to_fins, Word};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn rose(words: &[&str]) -> GraphWithFins {
        let ws: Vec<Word> = words.iter().map(|w| Word::parse(w).unwrap()).collect();
        pattern_to_fins(2, &ws).unwrap()
    }

    fn circle_with_loops(lengths: &[usize]) -> GraphWithFins {
        // one vertex, one loop edge, fins wrapping the loop the given number of times
        let g = Graph::from_names(&["o"], &[("x", "o", "o")]).unwrap();
        let fins = lengths
            .iter()
            .enumerate()
            .map(|(i, &n)| Fin { name: format!("s{i}"), cycle: vec![Dart(0); n] })
            .collect();
        let colours = (0..lengths.len()).map(|_| ["c".to_string(), "c".to_string()]).collect();
        GraphWithFins::new(g, fins, colours).unwrap()
    }

    #[test]
    fn cover_is_compatible_with_base() {
        let x = rose(&["x", "y", "xy"]);
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let (g, gc) = random_graph_cover(x.graph(), 3, &mut rng);
        let (cx, _) = induced_cover(&x, &g, &gc).unwrap();
        assert_eq!(same_universal_cover(&x, &cx, ColourMode::Respect), UniversalCoverVerdict::Compatible);
    }

    #[test]
    fn fin_count_matters() {
        let a = circle_with_loops(&[1]);
        let b = circle_with_loops(&[1, 1]);
        assert!(matches!(
            same_universal_cover(&a, &b, ColourMode::Respect),
            UniversalCoverVerdict::Incompatible { .. }
        ));
    }

    #[test]
    fn covers_preserve_every_label() {
        let x = rose(&["xxY", "xy"]);
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let (g, gc) = random_graph_cover(x.graph(), 4, &mut rng);
        let (cx, cm) = induced_cover(&x, &g, &gc).unwrap();
        let t = refine_local_types(&[&x, &cx], ColourMode::Ignore);
        for v in 0..cx.num_vertices() {
            assert_eq!(t.vertex[1][v], t.vertex[0][cm.vertex_map[v]]);
        }
        for d in cx.graph().darts() {
            assert_eq!(t.dart[1][d.0], t.dart[0][cm.dart_map[d.0].0]);
        }
    }

    #[test]
    fn canonical_labels_are_cover_invariant_and_reversal_is_an_involution() {
        let x = rose(&["xxY", "xy"]);
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let (g, gc) = random_graph_cover(x.graph(), 3, &mut rng);
        let (cx, cm) = induced_cover(&x, &g, &gc).unwrap();
        let (_, canon) = canonical_colours(&[&x, &cx], ColourMode::Ignore);
        for of in cx.oriented_fins() {
            assert_eq!(canon.label(1, of), canon.label(0, cm.map_oriented(of)));
            let l = canon.label(1, of);
            assert_eq!(canon.reversal[&canon.reversal[l]], l);
            assert_eq!(canon.reversal[l], canon.label(1, of.reverse()));
        }
    }

    #[test]
    fn transitivity_of_canonical_and_merged_colourings() {
        let x = rose(&["xxY", "xy"]);
        let (_, canon) = canonical_colours(&[&x], ColourMode::Ignore);
        let recoloured = canon.apply(0, &x);
        assert_eq!(check_fin_transitivity(&[&recoloured]), Transitivity::Pass);
        // structurally different fins forced into one colour
        let y = rose(&["x", "xy"]);
        let merged = y.with_colours(vec![["c".into(), "c".into()]; 2]).unwrap();
        assert!(matches!(check_fin_transitivity(&[&merged]), Transitivity::Fail { .. }));
        // a loop and its double wrap are the same line upstairs
        let same = circle_with_loops(&[1, 2]);
        assert_eq!(check_fin_transitivity(&[&same]), Transitivity::Pass);
    }
}
