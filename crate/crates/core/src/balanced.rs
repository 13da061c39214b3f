//! Balancedness of graphs of free groups with cyclic edge groups.
//!
//! Each edge group is infinite cyclic and embeds in its end vertex groups
//! through an attaching word. At a vertex, attaching words whose powers are
//! conjugate share a maximal cyclic subgroup; these classes are the nodes of
//! the cylinder graph. Along an edge with words `g^p` and `h^q` (primitive
//! roots `g`, `h`) a generator of the edge group is `g^p = h^q`, so going
//! round a loop of the cylinder graph multiplies the index by `|p| / |q|`.
//! The input is balanced when every such holonomy is 1.

use std::collections::{BTreeMap, VecDeque};

use num_traits::One;
use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::WordError;
use crate::ratio;
use crate::words::{CyclicWord, Word};
use crate::Rational;

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct RawVertex {
    pub name: String,
    /// Rank of the free vertex group.
    pub rank: usize,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct RawEdge {
    pub name: String,
    pub from: usize,
    pub to: usize,
    /// Image of the edge generator in the `from` vertex group.
    pub from_word: Word,
    pub to_word: Word,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct RawGraphOfCyclicGroups {
    pub vertices: Vec<RawVertex>,
    pub edges: Vec<RawEdge>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Balance {
    Balanced,
    Unbalanced,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct UnbalancedLoop {
    /// Edges of the loop, each with the direction it is traversed in.
    pub edges: Vec<(String, bool)>,
    /// Holonomy of the loop, inverted if needed so that it exceeds 1.
    #[serde(with = "ratio::as_string")]
    pub modulus: Rational,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct BalanceReport {
    pub verdict: Balance,
    pub classification: Vec<String>,
    pub witness: Option<UnbalancedLoop>,
}

/// End of an edge at a vertex: its maximal cyclic subgroup class and exponent.
fn end_data(rank: usize, w: &Word) -> Result<(CyclicWord, usize), WordError> {
    w.check_rank(rank)?;
    let (cw, _) = w.cyclic_reduce()?;
    let (_, k) = cw.primitive_root();
    Ok((cw.line_key(), k))
}

impl RawGraphOfCyclicGroups {
    pub fn validate(&self) -> Result<(), WordError> {
        for e in &self.edges {
            for (v, w) in [(e.from, &e.from_word), (e.to, &e.to_word)] {
                let rank = self.vertices.get(v).map_or(0, |x| x.rank);
                if rank == 0 {
                    return Err(WordError::BadRank(rank));
                }
                end_data(rank, w)?;
            }
        }
        Ok(())
    }
}

const BALANCED_TEXT: [&str; 3] = [
    "every finitely generated subgroup is separable",
    "virtually special",
    "hyperbolic relative to virtually Z x F_n subgroups",
];

const UNBALANCED_TEXT: [&str; 3] = [
    "not subgroup separable",
    "not virtually special",
    "not hyperbolic relative to virtually Z x F_n subgroups",
];

/// Decides balancedness by exact holonomy along a spanning forest of the
/// cylinder graph.
pub fn balanced(raw: &RawGraphOfCyclicGroups) -> Result<BalanceReport, WordError> {
    raw.validate()?;
    // Nodes: (vertex, line key).
    let mut node_index: BTreeMap<(usize, CyclicWord), usize> = BTreeMap::new();
    // Arcs: (from node, to node, factor, edge index, forward).
    let mut adj: Vec<Vec<(usize, Rational, usize, bool)>> = Vec::new();
    let mut node = |key: (usize, CyclicWord), adj: &mut Vec<Vec<_>>| {
        let n = node_index.len();
        *node_index.entry(key).or_insert_with(|| {
            adj.push(Vec::new());
            n
        })
    };
    for (i, e) in raw.edges.iter().enumerate() {
        let (ka, p) = end_data(raw.vertices[e.from].rank, &e.from_word)?;
        let (kb, q) = end_data(raw.vertices[e.to].rank, &e.to_word)?;
        let a = node((e.from, ka), &mut adj);
        let b = node((e.to, kb), &mut adj);
        // lambda(b) = lambda(a) * p / q
        adj[a].push((b, ratio::frac(p as i64, q as i64), i, true));
        adj[b].push((a, ratio::frac(q as i64, p as i64), i, false));
    }

    let n = adj.len();
    let mut lambda: Vec<Option<Rational>> = vec![None; n];
    let mut parent: Vec<Option<(usize, usize, bool)>> = vec![None; n];
    for root in 0..n {
        if lambda[root].is_some() {
            continue;
        }
        lambda[root] = Some(Rational::one());
        let mut queue = VecDeque::from([root]);
        while let Some(x) = queue.pop_front() {
            let lx = lambda[x].clone().expect("visited");
            for (y, f, edge, fwd) in adj[x].clone() {
                let want = &lx * &f;
                match &lambda[y] {
                    None => {
                        lambda[y] = Some(want);
                        parent[y] = Some((x, edge, fwd));
                        queue.push_back(y);
                    }
                    Some(have) if *have != want => {
                        let h = have / &want;
                        let modulus = if h > Rational::one() { h } else { Rational::one() / h };
                        let edges = loop_through(raw, &parent, x, y, edge, fwd);
                        return Ok(BalanceReport {
                            verdict: Balance::Unbalanced,
                            classification: UNBALANCED_TEXT.iter().map(|s| s.to_string()).collect(),
                            witness: Some(UnbalancedLoop { edges, modulus }),
                        });
                    }
                    Some(_) => {}
                }
            }
        }
    }
    Ok(BalanceReport {
        verdict: Balance::Balanced,
        classification: BALANCED_TEXT.iter().map(|s| s.to_string()).collect(),
        witness: None,
    })
}

/// Tree path from `y` up to the common ancestor, back down to `x`, then the
/// closing edge `x -> y`.
fn loop_through(
    raw: &RawGraphOfCyclicGroups,
    parent: &[Option<(usize, usize, bool)>],
    x: usize,
    y: usize,
    edge: usize,
    fwd: bool,
) -> Vec<(String, bool)> {
    let path_to_root = |mut a: usize| {
        let mut nodes = vec![a];
        while let Some((p, _, _)) = parent[a] {
            nodes.push(p);
            a = p;
        }
        nodes
    };
    let px = path_to_root(x);
    let py = path_to_root(y);
    let top = *px.iter().find(|a| py.contains(a)).expect("same tree");
    let mut out = Vec::new();
    // from y up to top: traverse parent edges backwards
    let mut a = y;
    while a != top {
        let (p, e, f) = parent[a].expect("below top");
        out.push((raw.edges[e].name.clone(), !f));
        a = p;
    }
    // from top down to x
    let mut down = Vec::new();
    let mut a = x;
    while a != top {
        let (p, e, f) = parent[a].expect("below top");
        down.push((raw.edges[e].name.clone(), f));
        a = p;
    }
    out.extend(down.into_iter().rev());
    out.push((raw.edges[edge].name.clone(), fwd));
    out
}

fn power(letter: i32, k: i64) -> Word {
    let l = if k < 0 { -letter } else { letter };
    Word::new(vec![l; k.unsigned_abs() as usize])
}

/// `<a, t | t a^m t^-1 = a^n>` as a single rank-one vertex with a loop.
pub fn baumslag_solitar(m: i64, n: i64) -> RawGraphOfCyclicGroups {
    RawGraphOfCyclicGroups {
        vertices: vec![RawVertex { name: "a".into(), rank: 1 }],
        edges: vec![RawEdge { name: "t".into(), from: 0, to: 0, from_word: power(1, m), to_word: power(1, n) }],
    }
}

/// Partitions of `n` into non-increasing positive parts.
fn partitions(n: usize) -> Vec<Vec<usize>> {
    fn go(left: usize, max: usize, prefix: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if left == 0 {
            out.push(prefix.clone());
            return;
        }
        for p in (1..=left.min(max)).rev() {
            prefix.push(p);
            go(left - p, p, prefix, out);
            prefix.pop();
        }
    }
    let mut out = Vec::new();
    go(n, n, &mut Vec::new(), &mut out);
    out
}

fn gcd(a: usize, b: usize) -> usize {
    num_integer::gcd(a, b)
}

/// A random finite cover of degree `degree` of a graph of groups whose
/// vertex groups all have rank one, or `None` if none exists among the
/// first `tries` choices of vertex partitions.
///
/// Each vertex lifts to subgroups of index `a_i` with `sum a_i = degree`. An
/// edge with exponent `p` at that end lifts to `gcd(a_i, p)` edges of edge
/// index `a_i / gcd(a_i, p)` and new exponent `p / gcd(a_i, p)`. A choice of
/// partitions is feasible when both ends of every edge produce the same
/// multiset of edge indices; one feasible choice is drawn uniformly and lifts
/// from the two ends are then matched at random among those of equal index.
pub fn random_cover_rank_one<R: Rng + ?Sized>(
    raw: &RawGraphOfCyclicGroups,
    degree: usize,
    tries: usize,
    rng: &mut R,
) -> Option<RawGraphOfCyclicGroups> {
    if degree == 0 || raw.vertices.iter().any(|v| v.rank != 1) {
        return None;
    }
    let exponent = |w: &Word| w.exponent_sum(0);
    // (edge index, lifted vertex, new exponent) for every lift at one end
    let ends = |parts: &[Vec<usize>], first: &[usize], v: usize, k: i64| -> Vec<(usize, usize, i64)> {
        let mut out = Vec::new();
        for (i, &a) in parts[v].iter().enumerate() {
            let g = gcd(a, k.unsigned_abs() as usize);
            for _ in 0..g {
                out.push((a / g, first[v] + i, k / g as i64));
            }
        }
        out
    };
    let offsets = |parts: &[Vec<usize>]| -> Vec<usize> {
        parts
            .iter()
            .scan(0, |acc, p| {
                let o = *acc;
                *acc += p.len();
                Some(o)
            })
            .collect()
    };
    let indices = |mut v: Vec<(usize, usize, i64)>| -> Vec<usize> {
        v.sort();
        v.into_iter().map(|x| x.0).collect()
    };

    let all = partitions(degree);
    let mut choice = vec![0usize; raw.vertices.len()];
    let mut feasible = Vec::new();
    for _ in 0..tries {
        let parts: Vec<Vec<usize>> = choice.iter().map(|&c| all[c].clone()).collect();
        let first = offsets(&parts);
        if raw.edges.iter().all(|e| {
            indices(ends(&parts, &first, e.from, exponent(&e.from_word)))
                == indices(ends(&parts, &first, e.to, exponent(&e.to_word)))
        }) {
            feasible.push(parts);
        }
        // next choice, odometer style
        let mut i = 0;
        while i < choice.len() {
            choice[i] += 1;
            if choice[i] < all.len() {
                break;
            }
            choice[i] = 0;
            i += 1;
        }
        if i == choice.len() {
            break;
        }
    }
    let parts = feasible.choose(rng)?.clone();
    let first = offsets(&parts);
    let mut vertices = Vec::new();
    for (v, ps) in parts.iter().enumerate() {
        for i in 0..ps.len() {
            vertices.push(RawVertex { name: format!("{}.{i}", raw.vertices[v].name), rank: 1 });
        }
    }
    let mut edges = Vec::new();
    for e in &raw.edges {
        let mut lo = ends(&parts, &first, e.from, exponent(&e.from_word));
        let mut hi = ends(&parts, &first, e.to, exponent(&e.to_word));
        lo.shuffle(rng);
        hi.shuffle(rng);
        lo.sort_by_key(|x| x.0);
        hi.sort_by_key(|x| x.0);
        for (j, (a, b)) in lo.into_iter().zip(hi).enumerate() {
            edges.push(RawEdge {
                name: format!("{}.{j}", e.name),
                from: a.1,
                to: b.1,
                from_word: power(1, a.2),
                to_word: power(1, b.2),
            });
        }
    }
    Some(RawGraphOfCyclicGroups { vertices, edges })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn bs12_is_unbalanced_with_modulus_two() {
        let r = balanced(&baumslag_solitar(1, 2)).unwrap();
        assert_eq!(r.verdict, Balance::Unbalanced);
        let w = r.witness.unwrap();
        assert_eq!(w.modulus, ratio::int(2));
        assert_eq!(w.edges, vec![("t".to_string(), true)]);
    }

    #[test]
    fn equal_moduli_are_balanced() {
        assert_eq!(balanced(&baumslag_solitar(2, -2)).unwrap().verdict, Balance::Balanced);
    }

    #[test]
    fn trees_are_balanced() {
        let raw = RawGraphOfCyclicGroups {
            vertices: vec![RawVertex { name: "a".into(), rank: 1 }, RawVertex { name: "b".into(), rank: 2 }],
            edges: vec![RawEdge {
                name: "e".into(),
                from: 0,
                to: 1,
                from_word: Word::parse("xxx").unwrap(),
                to_word: Word::parse("xyxy").unwrap(),
            }],
        };
        assert_eq!(balanced(&raw).unwrap().verdict, Balance::Balanced);
    }

    #[test]
    fn loop_through_two_vertices() {
        // a^2 = b^1 along e, b^1 = a^1 along f: holonomy 2.
        let raw = RawGraphOfCyclicGroups {
            vertices: vec![RawVertex { name: "a".into(), rank: 1 }, RawVertex { name: "b".into(), rank: 1 }],
            edges: vec![
                RawEdge { name: "e".into(), from: 0, to: 1, from_word: power(1, 2), to_word: power(1, 1) },
                RawEdge { name: "f".into(), from: 1, to: 0, from_word: power(1, 1), to_word: power(1, 1) },
            ],
        };
        let r = balanced(&raw).unwrap();
        let w = r.witness.unwrap();
        assert_eq!(w.modulus, ratio::int(2));
        assert_eq!(w.edges.len(), 2);
    }

    #[test]
    fn non_commensurable_ends_do_not_form_loops() {
        // both ends of the loop sit on different lines of the same vertex
        let raw = RawGraphOfCyclicGroups {
            vertices: vec![RawVertex { name: "a".into(), rank: 2 }],
            edges: vec![RawEdge {
                name: "t".into(),
                from: 0,
                to: 0,
                from_word: Word::parse("x").unwrap(),
                to_word: Word::parse("yy").unwrap(),
            }],
        };
        assert_eq!(balanced(&raw).unwrap().verdict, Balance::Balanced);
    }

    #[test]
    fn covers_keep_the_verdict() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for (m, n) in [(1, 2), (2, 2), (2, 3), (4, -4)] {
            let base = balanced(&baumslag_solitar(m, n)).unwrap().verdict;
            for d in 1..=6 {
                let c = random_cover_rank_one(&baumslag_solitar(m, n), d, 200, &mut rng).unwrap();
                assert_eq!(balanced(&c).unwrap().verdict, base, "BS({m},{n}) cover of degree {d}");
            }
        }
    }
}
