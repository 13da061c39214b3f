//! Common finite covers of two graphs with coloured fins.
//!
//! Pieces are polyhedral pairs: a vertex of each input together with a
//! decorated star isomorphism between them. A face pair is the restriction of
//! a polyhedral pair to one edge, including how the fins crossing that edge
//! are matched. Weights come from propagating extension-count ratios over the
//! stable vertex types; taking that many copies of each piece and gluing left
//! to right slots along every face pair gives the cover.

use std::collections::{BTreeMap, BTreeSet, VecDeque};

use num_bigint::BigInt;
use num_traits::Zero;
use serde::{Deserialize, Serialize};

use crate::cover::{induced_cover, verify_covering, CoverReport, CoveringMap, FinImage, GraphCover};
use crate::error::LeightonError;
use crate::fins::{Arc, ArcEnd, Direction, GraphWithFins, OrientedFin, Side};
use crate::graph::{Dart, Graph};
use crate::ratio::{self, integral_multiplier, to_u64};
use crate::types::{check_fin_transitivity, refine_local_types, Transitivity, verdict_from_table, ColourMode, TypeTable, UniversalCoverVerdict};
use crate::Rational;

/// Cap on decorated star isomorphisms enumerated per vertex pair.
pub const STAR_ISO_LIMIT: usize = 20_000;

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub struct PolyhedralPair {
    pub v1: usize,
    pub v2: usize,
    /// Star of `v1` in dart order, each paired with its image.
    pub darts: Vec<(Dart, Dart)>,
    /// Arcs at `v1` with their images; `true` when orientation is reversed.
    pub arcs: Vec<(Arc, Arc, bool)>,
}

impl PolyhedralPair {
    pub fn image_dart(&self, d: Dart) -> Dart {
        self.darts.iter().find(|p| p.0 == d).expect("dart in star").1
    }

    pub fn image_end(&self, e: ArcEnd) -> ArcEnd {
        let &(_, b, flipped) = self.arcs.iter().find(|p| p.0 == e.arc).expect("arc in star");
        ArcEnd { arc: b, side: if flipped { e.side.other() } else { e.side } }
    }
}

/// A face pair: the forward dart of `edge1` in the first input goes to
/// `dart2`, and the fin crossings of `edge1` (listed by their end on the
/// origin side, sorted) go to `crossings`.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub struct FaceKey {
    pub edge1: usize,
    pub dart2: Dart,
    pub crossings: Vec<ArcEnd>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FacePair {
    pub key: FaceKey,
    /// Pairs at the origin of the face, by index.
    pub left: Vec<usize>,
    /// Pairs at the terminus of the face.
    pub right: Vec<usize>,
}

/// Every polyhedral pair admitted by the stable types, in sorted order.
pub fn enumerate_polyhedral_pairs(
    x1: &GraphWithFins,
    x2: &GraphWithFins,
    table: &TypeTable,
) -> Result<Vec<PolyhedralPair>, LeightonError> {
    let arcs1 = x1.arcs_by_vertex();
    let arcs2 = x2.arcs_by_vertex();
    let mut out = Vec::new();
    for v1 in 0..x1.num_vertices() {
        let s1 = table.star(x1, 0, v1, &arcs1[v1]);
        for v2 in 0..x2.num_vertices() {
            if table.vertex[0][v1] != table.vertex[1][v2] {
                continue;
            }
            let s2 = table.star(x2, 1, v2, &arcs2[v2]);
            let isos = s1
                .isomorphisms(&s2, STAR_ISO_LIMIT)
                .map_err(|limit| LeightonError::StarIsomorphismLimit { limit })?;
            for iso in isos {
                out.push(PolyhedralPair {
                    v1,
                    v2,
                    darts: s1.darts.iter().zip(&iso.dart_map).map(|(&d, &q)| (d, s2.darts[q])).collect(),
                    arcs: s1
                        .arcs
                        .iter()
                        .zip(&iso.arc_map)
                        .map(|(a, &(b, flipped))| (a.arc, s2.arcs[b].arc, flipped))
                        .collect(),
                });
            }
        }
    }
    out.sort();
    Ok(out)
}

/// Groups the faces of all pairs into face pairs with their two sides.
pub fn enumerate_face_pairs(
    x1: &GraphWithFins,
    x2: &GraphWithFins,
    pairs: &[PolyhedralPair],
) -> Vec<FacePair> {
    let ends1 = x1.ends_by_dart();
    let mut faces: BTreeMap<FaceKey, (Vec<usize>, Vec<usize>)> = BTreeMap::new();
    for (p, pair) in pairs.iter().enumerate() {
        for &(d, img) in &pair.darts {
            if d.is_forward() {
                let crossings = ends1[d.0].iter().map(|&e| pair.image_end(e)).collect();
                let key = FaceKey { edge1: d.edge(), dart2: img, crossings };
                faces.entry(key).or_default().0.push(p);
            } else {
                let mut matched: Vec<(ArcEnd, ArcEnd)> = ends1[d.0]
                    .iter()
                    .map(|&e| (x1.across(e), x2.across(pair.image_end(e))))
                    .collect();
                matched.sort();
                let key = FaceKey {
                    edge1: d.edge(),
                    dart2: img.reverse(),
                    crossings: matched.into_iter().map(|m| m.1).collect(),
                };
                faces.entry(key).or_default().1.push(p);
            }
        }
    }
    faces.into_iter().map(|(key, (left, right))| FacePair { key, left, right }).collect()
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct HaarWeights {
    /// Weight per stable vertex type of the first input.
    pub by_type: BTreeMap<u32, u64>,
    /// Weight of each polyhedral pair.
    pub pair: Vec<u64>,
}

/// Solves `mu(t_L) * n_L = mu(t_R) * n_R` over a spanning tree of the type
/// graph, checks every other face, and scales to minimal positive integers.
pub fn haar_weights(
    x1: &GraphWithFins,
    table: &TypeTable,
    pairs: &[PolyhedralPair],
    faces: &[FacePair],
) -> Result<HaarWeights, LeightonError> {
    let g = x1.graph();
    let ty = |v: usize| table.vertex[0][v];
    let mut relations: BTreeMap<u32, Vec<(u32, Rational)>> = BTreeMap::new();
    for f in faces {
        let (n_l, n_r) = (f.left.len(), f.right.len());
        if n_l == 0 || n_r == 0 {
            return Err(LeightonError::InconsistentRatios(format!(
                "face pair over edge {} has no completion on the {} side",
                g.edge_name(f.key.edge1),
                if n_l == 0 { "left" } else { "right" }
            )));
        }
        let d = Dart::new(f.key.edge1, true);
        let (tl, tr) = (ty(g.origin(d)), ty(g.terminus(d)));
        // mu(tr) = mu(tl) * n_l / n_r
        relations.entry(tl).or_default().push((tr, ratio::frac(n_l as i64, n_r as i64)));
        relations.entry(tr).or_default().push((tl, ratio::frac(n_r as i64, n_l as i64)));
    }
    let types: BTreeSet<u32> = (0..x1.num_vertices()).map(ty).collect();
    let root = *types.iter().next().ok_or_else(|| LeightonError::BadInput("empty graph".into()))?;
    let mut mu: BTreeMap<u32, Rational> = BTreeMap::from([(root, ratio::int(1))]);
    let mut queue = VecDeque::from([root]);
    while let Some(t) = queue.pop_front() {
        let here = mu[&t].clone();
        for (u, r) in relations.get(&t).into_iter().flatten() {
            let want = &here * r;
            match mu.get(u) {
                Some(have) if *have != want => {
                    return Err(LeightonError::InconsistentRatios(format!(
                        "types {t} and {u}: propagated weight {want} disagrees with {have}"
                    )));
                }
                Some(_) => {}
                None => {
                    mu.insert(*u, want);
                    queue.push_back(*u);
                }
            }
        }
    }
    if let Some(t) = types.iter().find(|t| !mu.contains_key(t)) {
        return Err(LeightonError::NoAdmissiblePairs(format!("vertex type {t} is not reached by any face pair")));
    }
    let m = integral_multiplier(mu.values());
    let mut by_type = BTreeMap::new();
    for (t, w) in &mu {
        let w = to_u64(&(w * &m)).ok_or_else(|| LeightonError::InconsistentRatios("weight overflow".into()))?;
        by_type.insert(*t, w);
    }
    let pair = pairs.iter().map(|p| by_type[&ty(p.v1)]).collect();
    Ok(HaarWeights { by_type, pair })
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct FaceCheck {
    pub edge: String,
    pub dart2: String,
    pub left_pairs: usize,
    pub right_pairs: usize,
    pub left_weight: u64,
    pub right_weight: u64,
    pub constant_within_sides: bool,
    pub ok: bool,
}

/// Checks the gluing equation and within-side constancy on every face pair.
pub fn check_gluing(
    x1: &GraphWithFins,
    x2: &GraphWithFins,
    faces: &[FacePair],
    weights: &HaarWeights,
) -> Vec<FaceCheck> {
    faces
        .iter()
        .map(|f| {
            let sum = |side: &[usize]| side.iter().map(|&p| weights.pair[p]).sum::<u64>();
            let constant = |side: &[usize]| side.windows(2).all(|w| weights.pair[w[0]] == weights.pair[w[1]]);
            let (lw, rw) = (sum(&f.left), sum(&f.right));
            let constant_within_sides = constant(&f.left) && constant(&f.right);
            FaceCheck {
                edge: x1.graph().edge_name(f.key.edge1).to_string(),
                dart2: x2.graph().dart_name(f.key.dart2),
                left_pairs: f.left.len(),
                right_pairs: f.right.len(),
                left_weight: lw,
                right_weight: rw,
                constant_within_sides,
                ok: lw == rw && constant_within_sides,
            }
        })
        .collect()
}

/// Extension count of a face pair: the number of pairs on the given side.
pub fn extension_count(face: &FacePair, left: bool) -> usize {
    if left {
        face.left.len()
    } else {
        face.right.len()
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct FinEquationEntry {
    pub fin1: String,
    pub fin2: String,
    pub colour: String,
    #[serde(with = "ratio::as_string")]
    pub lhs: Rational,
    #[serde(with = "ratio::as_string")]
    pub rhs: Rational,
    pub ok: bool,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct FinEquationReport {
    pub entries: Vec<FinEquationEntry>,
    /// `|X̂| / (rho_c |X1| |X2|)` per colour.
    #[serde(with = "ratio::map_as_string")]
    pub k: BTreeMap<String, Rational>,
    pub densities_equal: bool,
    pub ok: bool,
}

/// Checks the fin equation for every same-coloured pair of oriented fins.
pub fn fin_equation(
    x1: &GraphWithFins,
    x2: &GraphWithFins,
    cover: &GraphWithFins,
    leg1: &CoveringMap,
    leg2: &CoveringMap,
) -> FinEquationReport {
    let mut lhs: BTreeMap<(OrientedFin, OrientedFin), usize> = BTreeMap::new();
    for of in cover.oriented_fins() {
        *lhs.entry((leg1.map_oriented(of), leg2.map_oriented(of))).or_default() += cover.fin(of.fin).len();
    }
    let colours: BTreeSet<String> = x1.colour_set().union(&x2.colour_set()).cloned().collect();
    let densities_equal = colours.iter().all(|c| x1.density(c) == x2.density(c) && x1.density(c) == cover.density(c));
    let mut k = BTreeMap::new();
    for c in &colours {
        let rho = x1.density(c);
        if !rho.is_zero() {
            let size = ratio::int(cover.num_vertices() as i64);
            let denom = rho * ratio::int((x1.num_vertices() * x2.num_vertices()) as i64);
            k.insert(c.clone(), size / denom);
        }
    }
    let mut entries = Vec::new();
    for s1 in x1.oriented_fins() {
        for s2 in x2.oriented_fins() {
            let c = x1.colour(s1);
            if c != x2.colour(s2) {
                continue;
            }
            let left = ratio::int(lhs.get(&(s1, s2)).copied().unwrap_or(0) as i64);
            let right = match k.get(c) {
                Some(kc) => kc * ratio::int((x1.fin(s1.fin).len() * x2.fin(s2.fin).len()) as i64),
                None => Rational::zero(),
            };
            entries.push(FinEquationEntry {
                fin1: x1.describe_oriented(s1),
                fin2: x2.describe_oriented(s2),
                colour: c.to_string(),
                ok: left == right,
                lhs: left,
                rhs: right,
            });
        }
    }
    let ok = densities_equal && entries.iter().all(|e| e.ok);
    FinEquationReport { entries, k, densities_equal, ok }
}

#[derive(Clone, Debug)]
pub struct CommonCover {
    pub cover: GraphWithFins,
    pub leg1: CoveringMap,
    pub leg2: CoveringMap,
    pub pairs: Vec<PolyhedralPair>,
    pub faces: Vec<FacePair>,
    pub weights: HaarWeights,
    pub gluing: Vec<FaceCheck>,
    pub leg1_report: CoverReport,
    pub leg2_report: CoverReport,
    pub fin_equation: FinEquationReport,
}

impl CommonCover {
    pub fn ok(&self) -> bool {
        self.leg1_report.ok
            && self.leg2_report.ok
            && self.fin_equation.ok
            && self.gluing.iter().all(|f| f.ok)
    }
}

/// Builds the cover from weighted pairs: `w(P)` copies of each pair, with the
/// k-th left slot of every face pair glued to its k-th right slot.
fn assemble(
    x1: &GraphWithFins,
    x2: &GraphWithFins,
    pairs: &[PolyhedralPair],
    faces: &[FacePair],
    weights: &HaarWeights,
) -> Result<(GraphWithFins, CoveringMap, CoveringMap), LeightonError> {
    let mut first = Vec::with_capacity(pairs.len());
    let mut names = Vec::new();
    let mut vertex_map = Vec::new();
    for (p, pair) in pairs.iter().enumerate() {
        first.push(names.len());
        for c in 0..weights.pair[p] {
            names.push(format!("p{p}.{c}"));
            vertex_map.push(pair.v1);
        }
    }
    let mut edges = Vec::new();
    let mut dart_map = Vec::new();
    for (fi, f) in faces.iter().enumerate() {
        let first = &first;
        let slots = |side: &[usize]| -> Vec<usize> {
            side.iter().flat_map(|&p| (0..weights.pair[p] as usize).map(move |c| first[p] + c)).collect()
        };
        let (l, r) = (slots(&f.left), slots(&f.right));
        if l.len() != r.len() {
            return Err(LeightonError::InconsistentRatios(format!(
                "face pair over edge {} has {} left and {} right slots",
                x1.graph().edge_name(f.key.edge1),
                l.len(),
                r.len()
            )));
        }
        for (k, (a, b)) in l.into_iter().zip(r).enumerate() {
            edges.push((format!("f{fi}.{k}"), a, b));
            dart_map.push(Dart::new(f.key.edge1, true));
            dart_map.push(Dart::new(f.key.edge1, false));
        }
    }
    let owner: Vec<usize> = (0..pairs.len())
        .flat_map(|p| std::iter::repeat_n(p, weights.pair[p] as usize))
        .collect();
    let graph = Graph::new(names, edges).map_err(|e| LeightonError::BadInput(e.to_string()))?;
    let gc = GraphCover { vertex_map, dart_map };
    let (cover, leg1) = induced_cover(x1, &graph, &gc).map_err(|e| LeightonError::BadInput(e.to_string()))?;

    let vertex_map2 = owner.iter().map(|&p| pairs[p].v2).collect();
    let dart_map2 = cover
        .graph()
        .darts()
        .map(|d| pairs[owner[cover.graph().origin(d)]].image_dart(leg1.dart_map[d.0]))
        .collect();
    let fin_map2 = (0..cover.num_fins())
        .map(|f| {
            let v = cover.graph().origin(cover.fin(f).cycle[0]);
            let pair = &pairs[owner[v]];
            let base = ArcEnd { arc: Arc { fin: leg1.fin_map[f].fin, pos: 0 }, side: Side::Next };
            let hit = pair.image_end(base);
            let len = x2.fin(hit.arc.fin).len();
            let (dir, offset) = match hit.side {
                Side::Next => (Direction::Forward, hit.arc.pos),
                Side::Prev => (Direction::Backward, (len - hit.arc.pos) % len),
            };
            FinImage { fin: hit.arc.fin, offset, degree: cover.fin(f).len() / len, dir }
        })
        .collect();
    let leg2 = CoveringMap { vertex_map: vertex_map2, dart_map: dart_map2, fin_map: fin_map2 };
    Ok((cover, leg1, leg2))
}

/// Runs the whole construction and verifies the result.
pub fn leighton_fins(x1: &GraphWithFins, x2: &GraphWithFins) -> Result<CommonCover, LeightonError> {
    for x in [x1, x2] {
        if !x.graph().is_connected() {
            return Err(LeightonError::BadInput("inputs must be connected".into()));
        }
    }
    let table = refine_local_types(&[x1, x2], ColourMode::Respect);
    if let UniversalCoverVerdict::Incompatible { witness } = verdict_from_table(&table, x1, x2, 0, 1) {
        return Err(LeightonError::IncompatibleUniversalCovers(witness));
    }
    if let Transitivity::Fail { colour, classes } = check_fin_transitivity(&[x1, x2]) {
        return Err(LeightonError::BadInput(format!(
            "colour {colour} spans {} local classes of oriented fins: {}",
            classes.len(),
            classes.join(", ")
        )));
    }
    let pairs = enumerate_polyhedral_pairs(x1, x2, &table)?;
    let covered2: BTreeSet<usize> = pairs.iter().map(|p| p.v2).collect();
    let covered1: BTreeSet<usize> = pairs.iter().map(|p| p.v1).collect();
    if covered1.len() != x1.num_vertices() || covered2.len() != x2.num_vertices() {
        return Err(LeightonError::NoAdmissiblePairs("some vertex has no decorated star match".into()));
    }
    let faces = enumerate_face_pairs(x1, x2, &pairs);
    let weights = haar_weights(x1, &table, &pairs, &faces)?;
    let gluing = check_gluing(x1, x2, &faces, &weights);
    let (cover, leg1, leg2) = assemble(x1, x2, &pairs, &faces, &weights)?;
    let leg1_report = verify_covering(&cover, x1, &leg1);
    let leg2_report = verify_covering(&cover, x2, &leg2);
    let fin_equation = fin_equation(x1, x2, &cover, &leg1, &leg2);
    Ok(CommonCover { cover, leg1, leg2, pairs, faces, weights, gluing, leg1_report, leg2_report, fin_equation })
}

/// Total weight, which is the number of vertices of the assembled cover.
pub fn total_weight(w: &HaarWeights) -> BigInt {
    w.pair.iter().map(|&x| BigInt::from(x)).sum()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cover::{random_connected_cover, induced_cover};
    use crate::fins::Fin;
    use crate::words::{pattern_to_fins, Word};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn rose(words: &[&str]) -> GraphWithFins {
        let ws: Vec<Word> = words.iter().map(|w| Word::parse(w).unwrap()).collect();
        pattern_to_fins(2, &ws).unwrap()
    }

    #[test]
    fn periodic_fins_hit_the_star_isomorphism_cap() {
        // x^2, x^6 and x^4 on one loop: arcs of each fin are interchangeable
        let g = Graph::new(vec!["o".into()], vec![("x".into(), 0, 0)]).unwrap();
        let fins: Vec<Fin> = [2, 6, 4]
            .iter()
            .enumerate()
            .map(|(i, &n)| Fin { name: format!("f{i}"), cycle: vec![Dart::new(0, true); n] })
            .collect();
        let colours = (0..3).map(|i| [format!("c{i}+"), format!("c{i}-")]).collect();
        let x = GraphWithFins::new(g, fins, colours).unwrap();
        assert_eq!(leighton_fins(&x, &x).unwrap_err(), LeightonError::StarIsomorphismLimit { limit: STAR_ISO_LIMIT });
    }

    #[test]
    fn rose_with_itself_is_its_own_common_cover() {
        let x = rose(&["x", "y", "xy"]);
        let cc = leighton_fins(&x, &x).unwrap();
        assert!(cc.ok(), "{:?}", cc.fin_equation);
        assert_eq!(cc.cover.num_vertices(), 1);
    }

    #[test]
    fn base_and_cover() {
        let x = rose(&["xxY", "xy"]);
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let (g, gc) = random_connected_cover(x.graph(), 3, 100, &mut rng).unwrap();
        let (cx, _) = induced_cover(&x, &g, &gc).unwrap();
        let cc = leighton_fins(&x, &cx).unwrap();
        assert!(cc.ok(), "{:?} {:?}", cc.leg1_report, cc.leg2_report);
        assert_eq!(cc.leg1_report.degree, Some(3));
    }

    #[test]
    fn rigid_and_flexible_ends_get_weights_two_to_one() {
        // u carries a loop with a fin, so its star is rigid; w has a bare
        // loop whose two darts can be swapped.
        let g = Graph::from_names(&["u", "w"], &[("m", "u", "u"), ("e", "u", "w"), ("l", "w", "w")]).unwrap();
        let fin = Fin { name: "s".into(), cycle: vec![Dart::new(0, true)] };
        let x = GraphWithFins::new_connected(g, vec![fin], vec![["c+".into(), "c-".into()]]).unwrap();
        let cc = leighton_fins(&x, &x).unwrap();
        assert!(cc.ok());
        let face = cc.faces.iter().find(|f| f.key.edge1 == 1).unwrap();
        assert_eq!((extension_count(face, true), extension_count(face, false)), (1, 2));
        let mut w: Vec<u64> = cc.weights.by_type.values().copied().collect();
        w.sort();
        assert_eq!(w, vec![1, 2]);
        assert_eq!(cc.leg1_report.degree, Some(2));
    }

    #[test]
    fn circle_pairs() {
        let g = Graph::from_names(&["o"], &[("x", "o", "o")]).unwrap();
        let fin = Fin { name: "s".into(), cycle: vec![Dart::new(0, true)] };
        let c1 = GraphWithFins::new_connected(g, vec![fin], vec![["a".into(), "a".into()]]).unwrap();
        let cc = leighton_fins(&c1, &c1).unwrap();
        // identity and the edge reversal both preserve the single colour
        assert_eq!(cc.pairs.len(), 2);
        assert!(cc.ok());
        assert_eq!(cc.cover.num_vertices(), 2);
        assert!(cc.fin_equation.entries.iter().all(|e| e.lhs == ratio::int(1)));
    }

    #[test]
    fn shared_colour_across_different_lines_is_rejected() {
        let x = rose(&["x", "xy"]);
        let y = x.with_colours(vec![["c".into(), "c".into()], ["c".into(), "c".into()]]).unwrap();
        assert!(matches!(leighton_fins(&y, &y), Err(LeightonError::BadInput(_))));
    }

    #[test]
    fn incompatible_inputs_are_rejected() {
        let a = rose(&["x"]);
        let b = rose(&["x", "y"]);
        assert!(matches!(leighton_fins(&a, &b), Err(LeightonError::IncompatibleUniversalCovers(_))));
    }
}
