//! Generators and brute-force oracles shared by the integration tests.
#![allow(dead_code)]

use std::collections::BTreeMap;

use comcover::cover::{induced_cover, random_connected_cover};
use comcover::fins::{Arc, ArcEnd, Side};
use comcover::gos::{validate_gos, Cylinder, CylinderKind, GosEdge, GraphOfSpaces, RigidVertex};
use comcover::leighton::{FacePair, PolyhedralPair};
use comcover::sample::random_gwf;
use comcover::types::TypeTable;
use comcover::{Dart, Direction, GraphWithFins, Rational};
use num_bigint::BigInt;
use rand::Rng;

/// Density computed straight from the definition, independently of the library.
pub fn density(x: &GraphWithFins, colour: &str) -> Rational {
    let mut total = 0usize;
    for (f, fin) in x.fins().iter().enumerate() {
        for c in &x.colour_pairs()[f] {
            if c == colour {
                total += fin.len();
            }
        }
    }
    Rational::new(BigInt::from(total), BigInt::from(x.num_vertices()))
}

fn prefixed(x: &GraphWithFins, prefix: &str) -> GraphWithFins {
    let colours = x
        .colour_pairs()
        .iter()
        .map(|[a, b]| [format!("{prefix}{a}"), format!("{prefix}{b}")])
        .collect();
    x.with_colours(colours).expect("same fins")
}

/// A valid graph of spaces with up to three rigid vertices and three
/// cylinders. Some rigid spaces are finite covers of earlier ones, so rigid
/// classes with several members and shared colours do occur.
pub fn random_gos<R: Rng + ?Sized>(rng: &mut R) -> GraphOfSpaces {
    loop {
        let k = rng.gen_range(1..=3);
        let mut rigid: Vec<RigidVertex> = Vec::new();
        for u in 0..k {
            let space = if u > 0 && rng.gen_bool(0.4) {
                let base = &rigid[rng.gen_range(0..u)].space;
                let d = rng.gen_range(1..=2);
                match random_connected_cover(base.graph(), d, 16, rng) {
                    Some((g, gc)) => induced_cover(base, &g, &gc).expect("graph cover lifts").0,
                    None => continue,
                }
            } else {
                prefixed(&random_gwf(4, 3, 0, rng), &format!("u{u}"))
            };
            rigid.push(RigidVertex { name: format!("u{u}"), space });
        }
        let m = rng.gen_range(1..=3);
        let cylinders: Vec<Cylinder> = (0..m)
            .map(|v| Cylinder {
                name: format!("v{v}"),
                kind: if rng.gen_bool(0.5) { CylinderKind::Circle } else { CylinderKind::Torus },
                transverse_rank: 1,
            })
            .collect();
        let mut edges = Vec::new();
        for (u, r) in rigid.iter().enumerate() {
            for f in 0..r.space.num_fins() {
                edges.push(GosEdge {
                    name: format!("e{}", edges.len()),
                    rigid: u,
                    fin: f,
                    cylinder: rng.gen_range(0..m),
                    sign: if rng.gen_bool(0.5) { Direction::Forward } else { Direction::Backward },
                });
            }
        }
        let g = GraphOfSpaces { rigid, cylinders, edges };
        if validate_gos(&g).ok {
            return g;
        }
    }
}

/// Product over dart labels of (multiplicity)!: the number of label
/// preserving dart bijections the oracle must try at a vertex pair.
pub fn dart_search_size(table: &TypeTable, x: &GraphWithFins, input: usize, v: usize) -> u64 {
    let mut count: BTreeMap<u32, u64> = BTreeMap::new();
    for &d in x.graph().star(v) {
        *count.entry(table.dart_label(input, d)).or_default() += 1;
    }
    count.values().map(|&n| (1..=n).product::<u64>()).product()
}

/// Every label-preserving bijection between the decorated stars of `v1` and
/// `v2`, found by plain backtracking over darts and then arcs.
pub fn brute_force_pairs(
    table: &TypeTable,
    x1: &GraphWithFins,
    x2: &GraphWithFins,
    v1: usize,
    v2: usize,
) -> Vec<PolyhedralPair> {
    let star1 = x1.graph().star(v1).to_vec();
    let star2 = x2.graph().star(v2).to_vec();
    let arcs1 = &x1.arcs_by_vertex()[v1];
    let arcs2 = &x2.arcs_by_vertex()[v2];
    let mut out = Vec::new();
    if star1.len() != star2.len() || arcs1.len() != arcs2.len() || table.vertex[0][v1] != table.vertex[1][v2] {
        return out;
    }
    let mut image: Vec<Dart> = Vec::new();
    let mut used = vec![false; star2.len()];
    dart_step(table, x1, x2, &star1, &star2, arcs1, arcs2, &mut image, &mut used, &mut out, v1, v2);
    out
}

#[allow(clippy::too_many_arguments)]
fn dart_step(
    table: &TypeTable,
    x1: &GraphWithFins,
    x2: &GraphWithFins,
    star1: &[Dart],
    star2: &[Dart],
    arcs1: &[Arc],
    arcs2: &[Arc],
    image: &mut Vec<Dart>,
    used: &mut [bool],
    out: &mut Vec<PolyhedralPair>,
    v1: usize,
    v2: usize,
) {
    let i = image.len();
    if i == star1.len() {
        let darts: Vec<(Dart, Dart)> = star1.iter().copied().zip(image.iter().copied()).collect();
        let mut arc_image = Vec::new();
        let mut arc_used = vec![false; arcs2.len()];
        arc_step(table, x1, x2, &darts, arcs1, arcs2, &mut arc_image, &mut arc_used, &mut |arcs| {
            out.push(PolyhedralPair { v1, v2, darts: darts.clone(), arcs });
        });
        return;
    }
    for j in 0..star2.len() {
        if !used[j] && table.dart_label(0, star1[i]) == table.dart_label(1, star2[j]) {
            used[j] = true;
            image.push(star2[j]);
            dart_step(table, x1, x2, star1, star2, arcs1, arcs2, image, used, out, v1, v2);
            image.pop();
            used[j] = false;
        }
    }
}

#[allow(clippy::too_many_arguments)]
fn arc_step(
    table: &TypeTable,
    x1: &GraphWithFins,
    x2: &GraphWithFins,
    darts: &[(Dart, Dart)],
    arcs1: &[Arc],
    arcs2: &[Arc],
    chosen: &mut Vec<(Arc, Arc, bool)>,
    used: &mut [bool],
    emit: &mut dyn FnMut(Vec<(Arc, Arc, bool)>),
) {
    let i = chosen.len();
    if i == arcs1.len() {
        emit(chosen.clone());
        return;
    }
    let img = |d: Dart| darts.iter().find(|p| p.0 == d).expect("dart in star").1;
    let a = arcs1[i];
    for (j, &b) in arcs2.iter().enumerate() {
        if used[j] {
            continue;
        }
        for flipped in [false, true] {
            let fits = [Side::Next, Side::Prev].into_iter().all(|side| {
                let e1 = ArcEnd { arc: a, side };
                let e2 = ArcEnd { arc: b, side: if flipped { side.other() } else { side } };
                img(x1.end_dart(e1)) == x2.end_dart(e2) && table.end_label(0, e1) == table.end_label(1, e2)
            });
            if fits {
                used[j] = true;
                chosen.push((a, b, flipped));
                arc_step(table, x1, x2, darts, arcs1, arcs2, chosen, used, emit);
                chosen.pop();
                used[j] = false;
            }
        }
    }
}

/// Face sides recounted from scratch: each pair contributes to the face of
/// every edge at its first vertex, keyed by the edge, the image of its
/// forward dart, and the matching of crossings read at the edge's origin.
pub fn brute_force_face_counts(
    x1: &GraphWithFins,
    x2: &GraphWithFins,
    pairs: &[PolyhedralPair],
) -> Vec<(usize, Dart, usize, usize)> {
    type Key = (usize, Dart, Vec<(ArcEnd, ArcEnd)>);
    let mut sides: BTreeMap<Key, (usize, usize)> = BTreeMap::new();
    for pair in pairs {
        let img_end = |e: ArcEnd| {
            let &(_, b, flipped) = pair.arcs.iter().find(|p| p.0 == e.arc).expect("arc in star");
            ArcEnd { arc: b, side: if flipped { e.side.other() } else { e.side } }
        };
        for &(d, dimg) in &pair.darts {
            let mut matching: Vec<(ArcEnd, ArcEnd)> = Vec::new();
            for arc in &x1.arcs_by_vertex()[pair.v1] {
                for side in [Side::Next, Side::Prev] {
                    let e = ArcEnd { arc: *arc, side };
                    if x1.end_dart(e) != d {
                        continue;
                    }
                    let f = img_end(e);
                    matching.push(if d.is_forward() { (e, f) } else { (x1.across(e), x2.across(f)) });
                }
            }
            matching.sort();
            let forward_img = if d.is_forward() { dimg } else { dimg.reverse() };
            let entry = sides.entry((d.edge(), forward_img, matching)).or_default();
            if d.is_forward() {
                entry.0 += 1;
            } else {
                entry.1 += 1;
            }
        }
    }
    let mut out: Vec<_> = sides.into_iter().map(|((e, d, _), (l, r))| (e, d, l, r)).collect();
    out.sort();
    out
}

/// The library's face pairs in the same shape as [`brute_force_face_counts`].
pub fn face_counts(faces: &[FacePair]) -> Vec<(usize, Dart, usize, usize)> {
    let mut out: Vec<_> = faces.iter().map(|f| (f.key.edge1, f.key.dart2, f.left.len(), f.right.len())).collect();
    out.sort();
    out
}
