//! Finite covers in which every fin unwraps by a prescribed degree.
//!
//! Free groups are omnipotent, so such covers exist for independent fins, but
//! no effective bound is known. The search is bounded by a candidate budget:
//! cyclic covers obtained by solving the holonomy congruences come first,
//! then permutation covers drawn from a seeded generator.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::cover::{induced_cover, GraphCover};
use crate::fins::GraphWithFins;
use crate::graph::{Dart, Graph};

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SearchOutcome {
    pub cover: Graph,
    pub map: GraphCover,
    pub degree: usize,
    pub candidates: usize,
}

/// Degrees by which every lift of every fin unwraps, or `None` if lifts of
/// one fin disagree.
pub fn unwrap_degrees(x: &GraphWithFins, cover: &Graph, map: &GraphCover) -> Option<Vec<usize>> {
    let (lifted, cmap) = induced_cover(x, cover, map).ok()?;
    let mut out = vec![0; x.num_fins()];
    for f in 0..lifted.num_fins() {
        let img = cmap.fin_map[f];
        if out[img.fin] != 0 && out[img.fin] != img.degree {
            return None;
        }
        out[img.fin] = img.degree;
    }
    Some(out)
}

fn lcm(a: usize, b: usize) -> usize {
    num_integer::lcm(a, b)
}

/// Cover built from an assignment of elements of `Z/m` to edges.
fn cyclic_cover(g: &Graph, m: usize, value: &[i64]) -> (Graph, GraphCover) {
    let n = g.num_vertices();
    let names = (0..n * m).map(|k| format!("{}#{}", g.vertex_name(k / m), k % m)).collect();
    let vertex_map = (0..n * m).map(|k| k / m).collect();
    let mut edges = Vec::new();
    let mut dart_map = Vec::new();
    for e in 0..g.num_edges() {
        let (a, b) = g.edge_ends(e);
        let shift = value[e].rem_euclid(m as i64) as usize;
        for i in 0..m {
            edges.push((format!("{}#{i}", g.edge_name(e)), a * m + i, b * m + (i + shift) % m));
            dart_map.push(Dart::new(e, true));
            dart_map.push(Dart::new(e, false));
        }
    }
    (Graph::new(names, edges).expect("cyclic cover is well formed"), GraphCover { vertex_map, dart_map })
}

/// Diagonalises an integer matrix: returns `(d, u, v)` with `u * a * v`
/// diagonal (entries `d`), `u` and `v` unimodular.
fn diagonalise(a: &[Vec<i128>], cols: usize) -> (Vec<i128>, Vec<Vec<i128>>, Vec<Vec<i128>>) {
    let rows = a.len();
    let mut m: Vec<Vec<i128>> = a.to_vec();
    let mut u: Vec<Vec<i128>> = (0..rows).map(|i| (0..rows).map(|j| i128::from(i == j)).collect()).collect();
    let mut v: Vec<Vec<i128>> = (0..cols).map(|i| (0..cols).map(|j| i128::from(i == j)).collect()).collect();
    let mut diag = Vec::new();
    for t in 0..rows.min(cols) {
        // pivot: smallest nonzero entry in the remaining block
        let Some((pi, pj)) = (t..rows)
            .flat_map(|i| (t..cols).map(move |j| (i, j)))
            .filter(|&(i, j)| m[i][j] != 0)
            .min_by_key(|&(i, j)| m[i][j].abs())
        else {
            break;
        };
        m.swap(t, pi);
        u.swap(t, pi);
        for row in m.iter_mut() {
            row.swap(t, pj);
        }
        for row in v.iter_mut() {
            row.swap(t, pj);
        }
        loop {
            let mut clean = true;
            for i in t + 1..rows {
                let q = m[i][t] / m[t][t];
                if q != 0 {
                    for j in 0..cols {
                        m[i][j] -= q * m[t][j];
                    }
                    for j in 0..rows {
                        u[i][j] -= q * u[t][j];
                    }
                }
                if m[i][t] != 0 {
                    clean = false;
                }
            }
            for j in t + 1..cols {
                let q = m[t][j] / m[t][t];
                if q != 0 {
                    for row in m.iter_mut() {
                        row[j] -= q * row[t];
                    }
                    for row in v.iter_mut() {
                        row[j] -= q * row[t];
                    }
                }
                if m[t][j] != 0 {
                    clean = false;
                }
            }
            if clean {
                break;
            }
            // move the smallest remaining entry of row/column t to the pivot
            let (bi, bj) = (t..rows)
                .map(|i| (i, t))
                .chain((t..cols).map(|j| (t, j)))
                .filter(|&(i, j)| m[i][j] != 0)
                .min_by_key(|&(i, j)| m[i][j].abs())
                .expect("pivot is nonzero");
            if bi != t {
                m.swap(t, bi);
                u.swap(t, bi);
            }
            if bj != t {
                for row in m.iter_mut() {
                    row.swap(t, bj);
                }
                for row in v.iter_mut() {
                    row.swap(t, bj);
                }
            }
        }
        diag.push(m[t][t]);
    }
    (diag, u, v)
}

/// Solves `a x = b (mod m)` through a diagonal form, if solvable.
fn solve_mod(d: &[i128], u: &[Vec<i128>], v: &[Vec<i128>], b: &[i128], m: i128) -> Option<Vec<i128>> {
    let ub: Vec<i128> = u.iter().map(|row| row.iter().zip(b).map(|(x, y)| x * y).sum::<i128>().rem_euclid(m)).collect();
    let cols = v.len();
    let mut y = vec![0i128; cols];
    for (i, &c) in ub.iter().enumerate() {
        match d.get(i) {
            Some(&di) => {
                // di * y = c (mod m)
                let (g, s, _) = ext_gcd(di.rem_euclid(m), m);
                if c % g != 0 {
                    return None;
                }
                y[i] = (s * (c / g)).rem_euclid(m / g);
            }
            None if c != 0 => return None,
            None => {}
        }
    }
    Some(v.iter().map(|row| row.iter().zip(&y).map(|(a, b)| a * b).sum::<i128>().rem_euclid(m)).collect())
}

fn ext_gcd(a: i128, b: i128) -> (i128, i128, i128) {
    if b == 0 {
        (a, 1, 0)
    } else {
        let (g, x, y) = ext_gcd(b, a % b);
        (g, y, x - (a / b) * y)
    }
}

/// Searches for a cover in which every lift of fin `f` has degree `wanted[f]`.
/// Each candidate examined uses one unit of `budget`.
pub fn find_unwrapping_cover(
    x: &GraphWithFins,
    wanted: &[usize],
    budget: &mut usize,
    seed: u64,
) -> Option<SearchOutcome> {
    let g = x.graph();
    let m = wanted.iter().copied().fold(1, lcm);
    let mut candidates = 0;
    let mut take = |budget: &mut usize| {
        if *budget == 0 {
            return false;
        }
        *budget -= 1;
        candidates += 1;
        true
    };

    // Cyclic covers: edge values off a spanning forest, fin f needs holonomy
    // of order exactly wanted[f] in Z/m.
    let forest = g.spanning_forest();
    let tree: Vec<bool> = (0..g.num_edges()).map(|e| forest.iter().flatten().any(|d| d.edge() == e)).collect();
    let free: Vec<usize> = (0..g.num_edges()).filter(|&e| !tree[e]).collect();
    let rows: Vec<Vec<i128>> = x
        .fins()
        .iter()
        .map(|fin| {
            free.iter()
                .map(|&e| fin.cycle.iter().filter(|d| d.edge() == e).map(|d| if d.is_forward() { 1 } else { -1 }).sum())
                .collect()
        })
        .collect();
    let (d, u, v) = diagonalise(&rows, free.len());
    let units: Vec<Vec<usize>> = wanted
        .iter()
        .map(|&w| (1..=w).filter(|&k| num_integer::gcd(k, w) == 1).collect())
        .collect();
    let mut choice = vec![0usize; wanted.len()];
    loop {
        if !take(budget) {
            return None;
        }
        let b: Vec<i128> = (0..wanted.len()).map(|f| ((m / wanted[f]) * units[f][choice[f]]) as i128).collect();
        if let Some(sol) = solve_mod(&d, &u, &v, &b, m as i128) {
            let mut value = vec![0i64; g.num_edges()];
            for (k, &e) in free.iter().enumerate() {
                value[e] = sol[k] as i64;
            }
            let (cover, map) = cyclic_cover(g, m, &value);
            if unwrap_degrees(x, &cover, &map).as_deref() == Some(wanted) {
                return Some(SearchOutcome { cover, map, degree: m, candidates });
            }
        }
        // next unit choice, odometer style
        let mut i = 0;
        loop {
            if i == choice.len() {
                break;
            }
            choice[i] += 1;
            if choice[i] < units[i].len() {
                break;
            }
            choice[i] = 0;
            i += 1;
        }
        if i == choice.len() {
            break;
        }
    }

    // Permutation covers of degree m, 2m, ... from a seeded generator.
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for k in 1.. {
        let n = m * k;
        for _ in 0..16 {
            if !take(budget) {
                return None;
            }
            let (cover, map) = permutation_cover(g, n, &mut rng);
            if unwrap_degrees(x, &cover, &map).as_deref() == Some(wanted) {
                return Some(SearchOutcome { cover, map, degree: n, candidates });
            }
        }
    }
    None
}

fn permutation_cover(g: &Graph, n: usize, rng: &mut ChaCha8Rng) -> (Graph, GraphCover) {
    let verts = g.num_vertices();
    let names = (0..verts * n).map(|k| format!("{}#{}", g.vertex_name(k / n), k % n)).collect();
    let vertex_map = (0..verts * n).map(|k| k / n).collect();
    let mut edges = Vec::new();
    let mut dart_map = Vec::new();
    for e in 0..g.num_edges() {
        let (a, b) = g.edge_ends(e);
        let mut perm: Vec<usize> = (0..n).collect();
        perm.shuffle(rng);
        for (i, &p) in perm.iter().enumerate() {
            edges.push((format!("{}#{i}", g.edge_name(e)), a * n + i, b * n + p));
            dart_map.push(Dart::new(e, true));
            dart_map.push(Dart::new(e, false));
        }
    }
    (Graph::new(names, edges).expect("permutation cover is well formed"), GraphCover { vertex_map, dart_map })
}
