//! Common finite covers of two graphs of spaces.
//!
//! The construction runs in stages. Inputs are recoloured jointly by
//! structural fin labels and their invariants are matched. Each matched pair
//! of rigid vertex spaces gets a common cover of graphs with fins, which is
//! then covered further until every fin over an edge class has one common
//! length. The global gluing equations are solved in closed form and the
//! witness is glued together from copies of all the pieces. The witness is
//! checked again from scratch by [`verify_witness`].

use std::collections::{BTreeMap, BTreeSet, VecDeque};

use num_integer::Integer;
use num_traits::Zero;
use serde::{Deserialize, Serialize};

use crate::cover::{induced_cover, verify_covering, CoveringMap, FinImage};
use crate::error::{GosError, PipelineError};
use crate::fins::{Direction, GraphWithFins};
use crate::gos::{
    canonically_coloured, cylinder_numbers, densities, edge_colours, rigid_classes, validate_gos, Cylinder,
    CylinderKind, CylinderNumbers, DensityReport, GosEdge, GraphOfSpaces, RigidVertex,
};
use crate::graph::Graph;
use crate::leighton::leighton_fins;
use crate::omnipotence::find_unwrapping_cover;
use crate::ratio::{self, integral_multiplier, to_u64};
use crate::star::permutations;
use crate::Rational;

pub const DEFAULT_BUDGET: usize = 20_000;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct PipelineConfig {
    /// Candidate covers the fin-length search may examine in total.
    pub budget: usize,
    pub seed: u64,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        PipelineConfig { budget: DEFAULT_BUDGET, seed: 0 }
    }
}

const ORIENTATIONS: [Direction; 2] = [Direction::Forward, Direction::Backward];

fn side_name(side: usize) -> &'static str {
    ["first", "second"][side]
}

fn no_match(diagnostic: String) -> PipelineError {
    PipelineError::NoMatching { diagnostic }
}

/// Unordered colour class of an edge: the smaller of its two oriented colours.
fn edge_class(g: &GraphOfSpaces, e: usize) -> String {
    let a = g.edge_colour(e, Direction::Forward);
    let b = g.edge_colour(e, Direction::Backward);
    a.min(b).to_string()
}

/// Cylinder-number profile of an oriented cylinder divided by its gcd.
fn normalised(profile: &BTreeMap<String, usize>) -> Vec<(String, usize)> {
    let d = profile.values().fold(0usize, |a, &b| a.gcd(&b)).max(1);
    profile.iter().map(|(c, &n)| (c.clone(), n / d)).collect()
}

type ProfileKey = (CylinderKind, Vec<(String, usize)>);

#[derive(Clone, Debug)]
pub struct MatchingPlan {
    /// Inputs recoloured by structural labels.
    pub inputs: [GraphOfSpaces; 2],
    pub densities: [DensityReport; 2],
    pub numbers: [CylinderNumbers; 2],
    /// Joint rigid class of every rigid vertex.
    pub rigid_class: [Vec<usize>; 2],
    /// `rho_[u]` per joint class.
    pub class_density: BTreeMap<usize, Rational>,
    pub rigid_pairs: Vec<(usize, usize)>,
    /// `(v, v', s)`: the positive orientation of `v` matches orientation `s` of `v'`.
    pub cylinder_pairs: Vec<(usize, usize, Direction)>,
    /// Profile key of every oriented cylinder.
    keys: [BTreeMap<(usize, Direction), ProfileKey>; 2],
    /// Normalised stretch value `r_[e]` per edge class.
    pub unit_length: BTreeMap<String, u64>,
    /// `lambda_v`: gcd of fin lengths at each cylinder.
    pub scale: [Vec<u64>; 2],
    /// Edge attached to each fin, per side and rigid vertex.
    fin_edge: [Vec<Vec<usize>>; 2],
}

/// Recolours both inputs and checks every invariant that must agree for the
/// construction to proceed.
pub fn match_structures(a: &GraphOfSpaces, b: &GraphOfSpaces) -> Result<MatchingPlan, PipelineError> {
    for (side, g) in [a, b].into_iter().enumerate() {
        let r = validate_gos(g);
        if !r.ok {
            return Err(GosError::Malformed(format!("{} input: {}", side_name(side), r.problems.join("; "))).into());
        }
    }
    let (cc, _) = canonically_coloured(&[a, b]);
    let inputs = [cc[0].clone(), cc[1].clone()];
    let dens = [densities(&inputs[0])?, densities(&inputs[1])?];

    // Rigid classes, jointly.
    let spaces: Vec<&GraphWithFins> = inputs.iter().flat_map(|g| g.rigid.iter().map(|r| &r.space)).collect();
    let joint = rigid_classes(&spaces);
    let na = inputs[0].rigid.len();
    let rigid_class = [joint[..na].to_vec(), joint[na..].to_vec()];
    let mut class_density: BTreeMap<usize, Rational> = BTreeMap::new();
    let mut side_density: [BTreeMap<usize, Rational>; 2] = Default::default();
    for side in 0..2 {
        let g = &inputs[side];
        let vol = ratio::int(g.volume() as i64);
        for (u, r) in g.rigid.iter().enumerate() {
            *side_density[side].entry(rigid_class[side][u]).or_insert_with(Rational::zero) +=
                ratio::int(r.space.num_vertices() as i64) / &vol;
        }
    }
    for side in 0..2 {
        for (u, r) in inputs[side].rigid.iter().enumerate() {
            if !side_density[1 - side].contains_key(&rigid_class[side][u]) {
                return Err(no_match(format!(
                    "rigid vertex {} of the {} input has no counterpart with the same universal cover",
                    r.name,
                    side_name(side)
                )));
            }
        }
    }
    for (k, rho) in &side_density[0] {
        let other = &side_density[1][k];
        if rho != other {
            return Err(no_match(format!("rigid class densities differ: {rho} against {other}")));
        }
        class_density.insert(*k, rho.clone());
    }
    let mut rigid_pairs = Vec::new();
    for u in 0..na {
        for w in 0..inputs[1].rigid.len() {
            if rigid_class[0][u] == rigid_class[1][w] {
                rigid_pairs.push((u, w));
            }
        }
    }

    let (ca, cb) = (edge_colours(&inputs[0]), edge_colours(&inputs[1]));
    if let Some(c) = ca.symmetric_difference(&cb).next() {
        let side = if ca.contains(c) { 0 } else { 1 };
        return Err(no_match(format!("colour {c} appears only in the {} input", side_name(side))));
    }

    // Cylinder classes from cylinder-number profiles.
    let numbers = [cylinder_numbers(&inputs[0]), cylinder_numbers(&inputs[1])];
    let mut keys: [BTreeMap<(usize, Direction), ProfileKey>; 2] = Default::default();
    let mut exact: [BTreeMap<(usize, Direction), BTreeMap<String, usize>>; 2] = Default::default();
    let mut colour_keys: BTreeMap<String, BTreeSet<ProfileKey>> = BTreeMap::new();
    for side in 0..2 {
        let g = &inputs[side];
        for v in 0..g.cylinders.len() {
            for o in ORIENTATIONS {
                let profile = numbers[side].profile(v, o);
                let key = (g.cylinders[v].kind, normalised(&profile));
                for c in profile.keys() {
                    colour_keys.entry(c.clone()).or_default().insert(key.clone());
                }
                keys[side].insert((v, o), key);
                exact[side].insert((v, o), profile);
            }
        }
    }
    if let Some((c, _)) = colour_keys.iter().find(|(_, ks)| ks.len() > 1) {
        return Err(no_match(format!("colour {c} meets oriented cylinders with different cylinder-number profiles")));
    }
    let mut seen: BTreeMap<ProfileKey, (usize, usize, &BTreeMap<String, usize>)> = BTreeMap::new();
    for side in 0..2 {
        for ((v, o), key) in &keys[side] {
            let profile = &exact[side][&(*v, *o)];
            match seen.get(key) {
                Some(&(s0, v0, p0)) if p0 != profile => {
                    return Err(no_match(format!(
                        "cylinder numbers differ (ratios match): cylinder {} of the {} input against cylinder {} of the {} input",
                        inputs[s0].cylinders[v0].name,
                        side_name(s0),
                        inputs[side].cylinders[*v].name,
                        side_name(side)
                    )));
                }
                Some(_) => {}
                None => {
                    seen.insert(key.clone(), (side, *v, profile));
                }
            }
        }
    }

    // Stretch ratios.
    let mut unit_length: BTreeMap<String, u64> = BTreeMap::new();
    let mut class_owner: BTreeMap<String, (usize, usize, BTreeMap<String, u64>)> = BTreeMap::new();
    let mut scale: [Vec<u64>; 2] = Default::default();
    for side in 0..2 {
        let g = &inputs[side];
        for v in 0..g.cylinders.len() {
            let mut lengths: BTreeMap<String, u64> = BTreeMap::new();
            for e in g.link(v) {
                let len = g.fin_length(e) as u64;
                if lengths.insert(edge_class(g, e), len).is_some_and(|old| old != len) {
                    return Err(no_match(format!(
                        "stretch ratio at cylinder {} of the {} input is not determined by edge colours",
                        g.cylinders[v].name,
                        side_name(side)
                    )));
                }
            }
            let lambda = lengths.values().fold(0u64, |a, &b| a.gcd(&b)).max(1);
            scale[side].push(lambda);
            let norm: BTreeMap<String, u64> = lengths.iter().map(|(k, l)| (k.clone(), l / lambda)).collect();
            for k in norm.keys() {
                match class_owner.get(k) {
                    Some((s0, v0, n0)) if *n0 != norm => {
                        return Err(no_match(format!(
                            "stretch ratios differ: cylinder {} of the {} input against cylinder {} of the {} input",
                            inputs[*s0].cylinders[*v0].name,
                            side_name(*s0),
                            g.cylinders[v].name,
                            side_name(side)
                        )));
                    }
                    Some(_) => {}
                    None => {
                        class_owner.insert(k.clone(), (side, v, norm.clone()));
                    }
                }
            }
            unit_length.extend(norm);
        }
    }

    let mut cylinder_pairs = Vec::new();
    for v in 0..inputs[0].cylinders.len() {
        for w in 0..inputs[1].cylinders.len() {
            for s in ORIENTATIONS {
                if keys[0][&(v, Direction::Forward)] == keys[1][&(w, s)] {
                    cylinder_pairs.push((v, w, s));
                }
            }
        }
    }

    let fin_edge = [0, 1].map(|side| {
        let g = &inputs[side];
        let mut table: Vec<Vec<usize>> = g.rigid.iter().map(|r| vec![0; r.space.num_fins()]).collect();
        for (e, edge) in g.edges.iter().enumerate() {
            table[edge.rigid][edge.fin] = e;
        }
        table
    });

    Ok(MatchingPlan {
        inputs,
        densities: dens,
        numbers,
        rigid_class,
        class_density,
        rigid_pairs,
        cylinder_pairs,
        keys,
        unit_length,
        scale,
        fin_edge,
    })
}

/// A common cover of one rigid vertex space from each input.
#[derive(Clone, Debug)]
pub struct RigidPiece {
    pub pair: (usize, usize),
    pub cover: GraphWithFins,
    pub legs: [CoveringMap; 2],
    /// Degree of the extra cover taken to equalise fin lengths.
    pub unwrap_degree: usize,
}

/// Common length `l_[e] = N r_[e]` per edge class, and `N`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TargetLengths {
    pub n: u64,
    pub length: BTreeMap<String, u64>,
}

fn piece_fin_class(plan: &MatchingPlan, u: usize, leg: &CoveringMap, f: usize) -> String {
    let e = plan.fin_edge[0][u][leg.fin_map[f].fin];
    edge_class(&plan.inputs[0], e)
}

/// Leighton common covers for every matched pair of rigid vertices.
pub fn rigid_common_covers(plan: &MatchingPlan) -> Result<Vec<RigidPiece>, PipelineError> {
    let mut out = Vec::new();
    for &(u, w) in &plan.rigid_pairs {
        let x1 = &plan.inputs[0].rigid[u].space;
        let x2 = &plan.inputs[1].rigid[w].space;
        let cc = leighton_fins(x1, x2)?;
        if !cc.ok() {
            return Err(PipelineError::SelfCheck(format!(
                "common cover of {} and {} failed verification",
                plan.inputs[0].rigid[u].name, plan.inputs[1].rigid[w].name
            )));
        }
        out.push(RigidPiece { pair: (u, w), cover: cc.cover, legs: [cc.leg1, cc.leg2], unwrap_degree: 1 });
    }
    Ok(out)
}

/// Chooses `N` so that every `l_[e]` is a multiple of every fin length over
/// `[e]`, in the inputs and in the pieces.
pub fn target_lengths(plan: &MatchingPlan, pieces: &[RigidPiece]) -> TargetLengths {
    let mut n: u64 = plan.scale.iter().flatten().fold(1, |a, &b| a.lcm(&b));
    for p in pieces {
        for f in 0..p.cover.num_fins() {
            let r = plan.unit_length[&piece_fin_class(plan, p.pair.0, &p.legs[0], f)];
            let len = p.cover.fin(f).len() as u64;
            n = n.lcm(&(len / len.gcd(&r)));
        }
    }
    let length = plan.unit_length.iter().map(|(k, r)| (k.clone(), n * r)).collect();
    TargetLengths { n, length }
}

/// Covers each piece further so that all of its fins have their target length.
pub fn normalize_fin_lengths(
    plan: &MatchingPlan,
    pieces: Vec<RigidPiece>,
    targets: &TargetLengths,
    config: &PipelineConfig,
) -> Result<Vec<RigidPiece>, PipelineError> {
    let mut budget = config.budget;
    let mut out = Vec::new();
    for p in pieces {
        let wanted: Vec<usize> = (0..p.cover.num_fins())
            .map(|f| {
                let target = targets.length[&piece_fin_class(plan, p.pair.0, &p.legs[0], f)];
                (target / p.cover.fin(f).len() as u64) as usize
            })
            .collect();
        if wanted.iter().all(|&m| m == 1) {
            out.push(p);
            continue;
        }
        let Some(found) = find_unwrapping_cover(&p.cover, &wanted, &mut budget, config.seed) else {
            let pending: Vec<String> = wanted
                .iter()
                .enumerate()
                .filter(|(_, &m)| m > 1)
                .map(|(f, m)| format!("{} x{m}", p.cover.fin(f).name))
                .collect();
            return Err(PipelineError::BudgetExhausted(format!(
                "no cover of the piece over {} and {} unwraps {}",
                plan.inputs[0].rigid[p.pair.0].name,
                plan.inputs[1].rigid[p.pair.1].name,
                pending.join(", ")
            )));
        };
        let (lifted, map) = induced_cover(&p.cover, &found.cover, &found.map)
            .map_err(|e| PipelineError::SelfCheck(e.to_string()))?;
        let x1 = &plan.inputs[0].rigid[p.pair.0].space;
        let x2 = &plan.inputs[1].rigid[p.pair.1].space;
        let legs = [map.then(&p.cover, x1, &p.legs[0]), map.then(&p.cover, x2, &p.legs[1])];
        out.push(RigidPiece { pair: p.pair, cover: lifted, legs, unwrap_degree: found.degree });
    }
    Ok(out)
}

/// Colour-preserving bijections from the link of `v` to the link of `w`,
/// with `v` read positively and `w` in orientation `s`, in lexicographic
/// order. Each map lists the image of every edge of `link(v)` in order.
pub fn enumerate_link_maps(a: &GraphOfSpaces, b: &GraphOfSpaces, v: usize, w: usize, s: Direction) -> Vec<Vec<usize>> {
    let lv = a.link(v);
    let lw = b.link(w);
    let mut groups: BTreeMap<String, (Vec<usize>, Vec<usize>)> = BTreeMap::new();
    for (i, &e) in lv.iter().enumerate() {
        groups.entry(a.edge_colour(e, Direction::Forward).to_string()).or_default().0.push(i);
    }
    for &e in &lw {
        groups.entry(b.edge_colour(e, s).to_string()).or_default().1.push(e);
    }
    if lv.len() != lw.len() || groups.values().any(|(x, y)| x.len() != y.len()) {
        return Vec::new();
    }
    let mut maps: Vec<Vec<usize>> = vec![vec![usize::MAX; lv.len()]];
    for (slots, targets) in groups.values() {
        let perms = permutations(slots.len());
        maps = maps
            .iter()
            .flat_map(|m| {
                perms.iter().map(move |p| {
                    let mut m = m.clone();
                    for (k, &i) in slots.iter().enumerate() {
                        m[i] = targets[p[k]];
                    }
                    m
                })
            })
            .collect();
    }
    maps.sort();
    maps
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct RigidWeight {
    pub rigid: [String; 2],
    pub cover_vertices: usize,
    pub weight: u64,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CylinderWeight {
    pub cylinder: [String; 2],
    pub orientation: Direction,
    pub degrees: [u64; 2],
    pub link_maps: usize,
    pub weight: u64,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct EdgeWeight {
    pub edge: [String; 2],
    /// Relative direction in which the edge circle meets the two fins.
    pub relative: Direction,
    pub weight: u64,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct IdentityCheck {
    pub name: String,
    pub lhs: String,
    pub rhs: String,
    pub ok: bool,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct GluingSolution {
    /// Global factor applied to the closed-form values.
    #[serde(with = "ratio::as_string")]
    pub multiplier: Rational,
    pub target_lengths: BTreeMap<String, u64>,
    pub rigid: Vec<RigidWeight>,
    pub cylinders: Vec<CylinderWeight>,
    pub edges: Vec<EdgeWeight>,
    pub checks: Vec<IdentityCheck>,
}

/// `d_v = N / lambda_v` for every cylinder of one side.
fn cylinder_degrees(plan: &MatchingPlan, targets: &TargetLengths, side: usize) -> Vec<u64> {
    plan.scale[side].iter().map(|l| targets.n / l).collect()
}

/// `l(S_e) l(S_e') / (l_[e] rho_c rho_[u])` for edges of matching colour.
fn edge_value(plan: &MatchingPlan, targets: &TargetLengths, e: usize, e2: usize, colour: &str) -> Rational {
    let a = &plan.inputs[0];
    let b = &plan.inputs[1];
    let rho_c = &plan.densities[0].colour_density[colour];
    let rho_u = &plan.class_density[&plan.rigid_class[0][a.edges[e].rigid]];
    let num = ratio::int((a.fin_length(e) * b.fin_length(e2)) as i64);
    let len = ratio::int(targets.length[&edge_class(a, e)] as i64);
    num / (len * rho_c * rho_u)
}

fn check(name: String, lhs: &Rational, rhs: &Rational) -> IdentityCheck {
    IdentityCheck { name, lhs: lhs.to_string(), rhs: rhs.to_string(), ok: lhs == rhs }
}

/// Closed-form solution of the global gluing equations, scaled by the least
/// positive factor making every weight integral and every cylinder weight a
/// multiple of its number of link maps.
pub fn solve_global_gluing(
    plan: &MatchingPlan,
    pieces: &[RigidPiece],
    targets: &TargetLengths,
) -> Result<GluingSolution, PipelineError> {
    let a = &plan.inputs[0];
    let b = &plan.inputs[1];
    let deg = [cylinder_degrees(plan, targets, 0), cylinder_degrees(plan, targets, 1)];
    let volume = ratio::int(a.volume() as i64);
    let mut checks = Vec::new();

    let rigid_raw: Vec<Rational> = pieces
        .iter()
        .map(|p| {
            let (u, w) = p.pair;
            let size = (a.rigid[u].space.num_vertices() * b.rigid[w].space.num_vertices()) as i64;
            ratio::int(size) / (&plan.class_density[&plan.rigid_class[0][u]] * ratio::int(p.cover.num_vertices() as i64))
        })
        .collect();

    let mut edge_raw: Vec<((usize, usize, Direction), Rational)> = Vec::new();
    let mut cyl_raw: Vec<(usize, Rational, usize)> = Vec::new();
    for (pi, &(v, w, s)) in plan.cylinder_pairs.iter().enumerate() {
        let maps = enumerate_link_maps(a, b, v, w, s).len();
        if maps == 0 {
            return Err(PipelineError::NonPositiveSolution(format!(
                "no link maps between cylinders {} and {}",
                a.cylinders[v].name, b.cylinders[w].name
            )));
        }
        let profile = plan.numbers[0].profile(v, Direction::Forward);
        let mut per_colour: Vec<(String, Rational)> = Vec::new();
        for e in a.link(v) {
            let c = a.edge_colour(e, Direction::Forward).to_string();
            for e2 in b.link(w) {
                if b.edge_colour(e2, s) != c {
                    continue;
                }
                let value = edge_value(plan, targets, e, e2, &c);
                let relative = a.edges[e].sign.compose(s).compose(b.edges[e2].sign);
                let reverse = edge_value(plan, targets, e, e2, a.edge_colour(e, Direction::Backward));
                checks.push(check(
                    format!("edge weight of ({},{}) is orientation independent", a.edges[e].name, b.edges[e2].name),
                    &value,
                    &reverse,
                ));
                per_colour.push((c.clone(), ratio::int(profile[&c] as i64) * &value));
                edge_raw.push(((e, e2, relative), value));
            }
        }
        let first = per_colour[0].1.clone();
        for (c, x) in &per_colour {
            if *x != first {
                return Err(PipelineError::NonPositiveSolution(format!(
                    "cylinder pair ({},{}) needs weight {first} from one colour but {x} from colour {c}",
                    a.cylinders[v].name, b.cylinders[w].name
                )));
            }
        }
        // Orientation-reversed pair gives the same weight.
        let rev_profile = plan.numbers[0].profile(v, Direction::Backward);
        let e0 = a.link(v)[0];
        let cbar = a.edge_colour(e0, Direction::Backward).to_string();
        let e2 = b.link(w).into_iter().find(|&x| b.edge_colour(x, s.reverse()) == cbar).expect("matched link");
        let reversed = ratio::int(rev_profile[&cbar] as i64) * edge_value(plan, targets, e0, e2, &cbar);
        checks.push(check(
            format!("cylinder weight of ({},{}) is orientation independent", a.cylinders[v].name, b.cylinders[w].name),
            &first,
            &reversed,
        ));
        // Closed form: |X| / sum over oriented cylinders of the class of d_v d_v' / d_v*.
        let key = &plan.keys[0][&(v, Direction::Forward)];
        let mut sum = Rational::zero();
        for ((v2, _), k2) in &plan.keys[0] {
            if k2 == key {
                sum += ratio::frac((deg[0][v] * deg[1][w]) as i64, deg[0][*v2] as i64);
            }
        }
        checks.push(check(
            format!("cylinder weight of ({},{}) depends only on the two cylinders", a.cylinders[v].name, b.cylinders[w].name),
            &first,
            &(&volume / sum),
        ));
        cyl_raw.push((pi, first, maps));
    }

    let mut scaled_inputs: Vec<Rational> = rigid_raw.clone();
    scaled_inputs.extend(edge_raw.iter().map(|x| x.1.clone()));
    scaled_inputs.extend(cyl_raw.iter().map(|(_, x, m)| x / ratio::int(*m as i64)));
    if scaled_inputs.iter().any(|x| *x <= Rational::zero()) {
        return Err(PipelineError::NonPositiveSolution("a closed-form weight is not positive".into()));
    }
    let multiplier = integral_multiplier(scaled_inputs.iter());
    let as_int = |x: &Rational| -> Result<u64, PipelineError> {
        to_u64(&(x * &multiplier)).ok_or_else(|| PipelineError::NonPositiveSolution(format!("weight {x} does not scale")))
    };

    let rigid = pieces
        .iter()
        .zip(&rigid_raw)
        .map(|(p, x)| {
            Ok(RigidWeight {
                rigid: [a.rigid[p.pair.0].name.clone(), b.rigid[p.pair.1].name.clone()],
                cover_vertices: p.cover.num_vertices(),
                weight: as_int(x)?,
            })
        })
        .collect::<Result<Vec<_>, PipelineError>>()?;
    let edges = edge_raw
        .iter()
        .map(|((e, e2, r), x)| {
            Ok(EdgeWeight { edge: [a.edges[*e].name.clone(), b.edges[*e2].name.clone()], relative: *r, weight: as_int(x)? })
        })
        .collect::<Result<Vec<_>, PipelineError>>()?;
    let cylinders = cyl_raw
        .iter()
        .map(|(pi, x, maps)| {
            let (v, w, s) = plan.cylinder_pairs[*pi];
            Ok(CylinderWeight {
                cylinder: [a.cylinders[v].name.clone(), b.cylinders[w].name.clone()],
                orientation: s,
                degrees: [deg[0][v], deg[1][w]],
                link_maps: *maps,
                weight: as_int(x)?,
            })
        })
        .collect::<Result<Vec<_>, PipelineError>>()?;
    for c in &cylinders {
        if c.weight % c.link_maps as u64 != 0 {
            return Err(PipelineError::SelfCheck("link map count does not divide a cylinder weight".into()));
        }
    }
    if checks.iter().any(|c| !c.ok) {
        let bad: Vec<&str> = checks.iter().filter(|c| !c.ok).map(|c| c.name.as_str()).collect();
        return Err(PipelineError::NonPositiveSolution(format!("identities fail: {}", bad.join("; "))));
    }
    Ok(GluingSolution { multiplier, target_lengths: targets.length.clone(), rigid, cylinders, edges, checks })
}

/// Where a witness cylinder goes: a cylinder of one input, the degree of the
/// fibre map, and the orientation hit by the positive orientation.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CylinderImage {
    pub cylinder: usize,
    pub degree: usize,
    pub orientation: Direction,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct WitnessLeg {
    /// Target rigid vertex and covering map for every witness rigid vertex.
    pub rigid: Vec<(usize, CoveringMap)>,
    pub cylinders: Vec<CylinderImage>,
    pub edges: Vec<usize>,
}

/// A common finite cover of two graphs of spaces with both covering maps.
/// `inputs` are the inputs as given; legs map onto their structural
/// recolouring.
#[derive(Clone, Debug)]
pub struct Witness {
    pub inputs: [GraphOfSpaces; 2],
    pub cover: GraphOfSpaces,
    pub legs: [WitnessLeg; 2],
    pub gluing: GluingSolution,
}

/// Restriction of a covered graph with fins to one component.
fn restrict(x: &GraphWithFins, legs: &[CoveringMap; 2], root: usize) -> (GraphWithFins, [CoveringMap; 2]) {
    let g = x.graph();
    let comp = g.components();
    let keep: Vec<usize> = (0..g.num_vertices()).filter(|&v| comp[v] == comp[root]).collect();
    let kept_edges: Vec<usize> = (0..g.num_edges()).filter(|&e| comp[g.edge_ends(e).0] == comp[root]).collect();
    let kept_fins: Vec<usize> =
        (0..x.num_fins()).filter(|&f| comp[g.origin(x.fin(f).cycle[0])] == comp[root]).collect();
    let part = x.component(root);
    let legs = legs.clone().map(|m| CoveringMap {
        vertex_map: keep.iter().map(|&v| m.vertex_map[v]).collect(),
        dart_map: kept_edges.iter().flat_map(|&e| [m.dart_map[2 * e], m.dart_map[2 * e + 1]]).collect(),
        fin_map: kept_fins.iter().map(|&f| m.fin_map[f]).collect(),
    });
    (part, legs)
}

/// Relative direction of the two fin images of a witness fin.
fn relative(a: FinImage, b: FinImage) -> Direction {
    a.dir.compose(b.dir)
}

/// Takes the prescribed numbers of copies of every piece and glues them.
pub fn assemble_witness(
    original: [&GraphOfSpaces; 2],
    plan: &MatchingPlan,
    pieces: &[RigidPiece],
    gluing: &GluingSolution,
) -> Result<Witness, PipelineError> {
    let a = &plan.inputs[0];
    let b = &plan.inputs[1];
    let mut rigid = Vec::new();
    let mut legs_rigid: [Vec<(usize, CoveringMap)>; 2] = Default::default();
    // (e, e', relative) -> queue of (witness rigid, fin, direction over e)
    let mut slots: BTreeMap<(usize, usize, Direction), VecDeque<(usize, usize, Direction)>> = BTreeMap::new();
    for (p, w) in pieces.iter().zip(&gluing.rigid) {
        let comps = p.cover.graph().components();
        let roots: Vec<usize> = (0..p.cover.num_vertices())
            .filter(|&v| comps[..v].iter().all(|&c| c != comps[v]))
            .collect();
        let parts: Vec<(GraphWithFins, [CoveringMap; 2])> =
            roots.iter().map(|&r| restrict(&p.cover, &p.legs, r)).collect();
        for copy in 0..w.weight {
            for (ci, (space, legs)) in parts.iter().enumerate() {
                let idx = rigid.len();
                rigid.push(RigidVertex {
                    name: format!("{}|{}#{copy}.{ci}", a.rigid[p.pair.0].name, b.rigid[p.pair.1].name),
                    space: space.clone(),
                });
                for f in 0..space.num_fins() {
                    let (i1, i2) = (legs[0].fin_map[f], legs[1].fin_map[f]);
                    let e = plan.fin_edge[0][p.pair.0][i1.fin];
                    let e2 = plan.fin_edge[1][p.pair.1][i2.fin];
                    slots.entry((e, e2, relative(i1, i2))).or_default().push_back((idx, f, i1.dir));
                }
                legs_rigid[0].push((p.pair.0, legs[0].clone()));
                legs_rigid[1].push((p.pair.1, legs[1].clone()));
            }
        }
    }

    let mut cylinders = Vec::new();
    let mut cyl_images: [Vec<CylinderImage>; 2] = Default::default();
    let mut edges = Vec::new();
    let mut edge_images: [Vec<usize>; 2] = Default::default();
    for (&(v, w, s), cw) in plan.cylinder_pairs.iter().zip(&gluing.cylinders) {
        let maps = enumerate_link_maps(a, b, v, w, s);
        let link = a.link(v);
        for copy in 0..cw.weight as usize {
            let sigma = &maps[copy % maps.len()];
            let c = cylinders.len();
            cylinders.push(Cylinder {
                name: format!("{}|{}{}#{copy}", a.cylinders[v].name, b.cylinders[w].name, s.suffix()),
                kind: a.cylinders[v].kind,
                transverse_rank: a.cylinders[v].transverse_rank,
            });
            cyl_images[0].push(CylinderImage { cylinder: v, degree: cw.degrees[0] as usize, orientation: Direction::Forward });
            cyl_images[1].push(CylinderImage { cylinder: w, degree: cw.degrees[1] as usize, orientation: s });
            for (i, &e) in link.iter().enumerate() {
                let e2 = sigma[i];
                let r = a.edges[e].sign.compose(s).compose(b.edges[e2].sign);
                let (ridx, fin, dir1) = slots.get_mut(&(e, e2, r)).and_then(|q| q.pop_front()).ok_or_else(|| {
                    PipelineError::SelfCheck(format!(
                        "no fin left for an edge space over ({},{})",
                        a.edges[e].name, b.edges[e2].name
                    ))
                })?;
                edges.push(GosEdge {
                    name: format!("{}|{}#{}", a.edges[e].name, b.edges[e2].name, edges.len()),
                    rigid: ridx,
                    fin,
                    cylinder: c,
                    sign: a.edges[e].sign.compose(dir1),
                });
                edge_images[0].push(e);
                edge_images[1].push(e2);
            }
        }
    }
    if let Some(((e, e2, _), _)) = slots.iter().find(|(_, q)| !q.is_empty()) {
        return Err(PipelineError::SelfCheck(format!(
            "unmatched fin over ({},{})",
            a.edges[*e].name, b.edges[*e2].name
        )));
    }
    let [r0, r1] = legs_rigid;
    let [c0, c1] = cyl_images;
    let [e0, e1] = edge_images;
    Ok(Witness {
        inputs: [original[0].clone(), original[1].clone()],
        cover: GraphOfSpaces { rigid, cylinders, edges },
        legs: [
            WitnessLeg { rigid: r0, cylinders: c0, edges: e0 },
            WitnessLeg { rigid: r1, cylinders: c1, edges: e1 },
        ],
        gluing: gluing.clone(),
    })
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct WitnessReport {
    pub ok: bool,
    /// Covering degree of each leg, when uniform.
    pub degrees: [Option<usize>; 2],
    /// Common factor relating weights read off the witness to closed forms.
    pub multiplier: Option<String>,
    pub checks: Vec<IdentityCheck>,
    pub failures: Vec<String>,
}

/// Re-checks a witness from its inputs alone.
pub fn verify_witness(w: &Witness) -> WitnessReport {
    let mut failures: Vec<String> = Vec::new();
    let mut checks = Vec::new();
    let plan = match match_structures(&w.inputs[0], &w.inputs[1]) {
        Ok(p) => p,
        Err(e) => {
            return WitnessReport {
                ok: false,
                degrees: [None, None],
                multiplier: None,
                checks,
                failures: vec![format!("inputs do not match: {e}")],
            }
        }
    };
    let cover = &w.cover;

    // Every fin of the witness carries exactly one edge space.
    let mut attached: Vec<Vec<usize>> = cover.rigid.iter().map(|r| vec![0; r.space.num_fins()]).collect();
    for e in &cover.edges {
        match attached.get_mut(e.rigid).and_then(|v| v.get_mut(e.fin)) {
            Some(n) => *n += 1,
            None => failures.push(format!("edge space {} is attached to a missing fin", e.name)),
        }
    }
    for (u, counts) in attached.iter().enumerate() {
        for (f, &n) in counts.iter().enumerate() {
            if n != 1 {
                let what = if n == 0 { "unmatched fin" } else { "fin with several edge spaces" };
                failures.push(format!("{what} {} of {}", cover.rigid[u].space.fin(f).name, cover.rigid[u].name));
            }
        }
    }

    let mut degrees = [None, None];
    for side in 0..2 {
        let target = &plan.inputs[side];
        let leg = &w.legs[side];
        let tag = side_name(side);
        if leg.rigid.len() != cover.rigid.len()
            || leg.cylinders.len() != cover.cylinders.len()
            || leg.edges.len() != cover.edges.len()
        {
            failures.push(format!("{tag} leg has the wrong shape"));
            continue;
        }
        let mut rigid_deg = vec![0usize; target.rigid.len()];
        let mut cyl_deg = vec![0usize; target.cylinders.len()];
        let mut edge_deg = vec![0usize; target.edges.len()];
        for (r, (u, map)) in leg.rigid.iter().enumerate() {
            let Some(t) = target.rigid.get(*u) else {
                failures.push(format!("{tag} leg sends {} to a missing vertex", cover.rigid[r].name));
                continue;
            };
            let report = verify_covering(&cover.rigid[r].space, &t.space, map);
            if !report.ok {
                for f in report.failures {
                    failures.push(format!("{tag} leg at {}: {f}", cover.rigid[r].name));
                }
                continue;
            }
            if cover.rigid[r].space.densities() != t.space.densities() {
                failures.push(format!("{tag} leg at {}: densities change", cover.rigid[r].name));
            }
            rigid_deg[*u] += report.degree.unwrap_or(0);
        }
        for (c, img) in leg.cylinders.iter().enumerate() {
            match target.cylinders.get(img.cylinder) {
                Some(t) if t.kind == cover.cylinders[c].kind && img.degree > 0 => cyl_deg[img.cylinder] += img.degree,
                _ => failures.push(format!("{tag} leg sends cylinder {} badly", cover.cylinders[c].name)),
            }
        }
        for (k, edge) in cover.edges.iter().enumerate() {
            let e = leg.edges[k];
            let Some(te) = target.edges.get(e) else {
                failures.push(format!("{tag} leg sends edge space {} to a missing edge", edge.name));
                continue;
            };
            let (u, map) = &leg.rigid[edge.rigid];
            let img = leg.cylinders[edge.cylinder];
            let Some(fin_img) = map.fin_map.get(edge.fin).copied() else { continue };
            if *u != te.rigid || fin_img.fin != te.fin || img.cylinder != te.cylinder {
                failures.push(format!("{tag} leg: edge space {} does not lie over edge {}", edge.name, te.name));
                continue;
            }
            if fin_img.degree != img.degree {
                failures.push(format!("{tag} leg: edge space {} has fin degree {} but cylinder degree {}", edge.name, fin_img.degree, img.degree));
            }
            if edge.sign.compose(fin_img.dir) != img.orientation.compose(te.sign) {
                failures.push(format!("orientation mismatch on edge space {} ({tag} leg)", edge.name));
            }
            edge_deg[e] += fin_img.degree;
        }
        for (c, cyl) in cover.cylinders.iter().enumerate() {
            let v = leg.cylinders[c].cylinder;
            let mut images: Vec<usize> = cover.link(c).iter().map(|&k| leg.edges[k]).collect();
            images.sort();
            if v < target.cylinders.len() && images != target.link(v) {
                failures.push(format!("{tag} leg: link of cylinder {} is not mapped bijectively", cyl.name));
            }
        }
        let all: BTreeSet<usize> = rigid_deg.iter().chain(&cyl_deg).chain(&edge_deg).copied().collect();
        if all.len() == 1 {
            let d = *all.iter().next().expect("one degree");
            degrees[side] = Some(d);
            let lhs = cover.euler_characteristic();
            let rhs = d as i64 * target.euler_characteristic();
            checks.push(IdentityCheck {
                name: format!("Euler characteristic multiplies along the {tag} leg"),
                lhs: lhs.to_string(),
                rhs: rhs.to_string(),
                ok: lhs == rhs,
            });
        } else {
            failures.push(format!("{tag} leg is not of uniform degree: {all:?}"));
        }
    }
    if !failures.is_empty() {
        return WitnessReport { ok: false, degrees, multiplier: None, checks, failures };
    }

    // Gluing equations read off the witness, against the closed forms.
    let a = &plan.inputs[0];
    let b = &plan.inputs[1];
    let mut length: BTreeMap<String, usize> = BTreeMap::new();
    for (k, edge) in cover.edges.iter().enumerate() {
        let l = cover.rigid[edge.rigid].space.fin(edge.fin).len();
        if length.insert(edge_class(a, w.legs[0].edges[k]), l).is_some_and(|old| old != l) {
            failures.push(format!("fins over one edge class have different lengths near {}", edge.name));
        }
    }
    let mut deg: [BTreeMap<usize, usize>; 2] = Default::default();
    for side in 0..2 {
        for img in &w.legs[side].cylinders {
            if deg[side].insert(img.cylinder, img.degree).is_some_and(|old| old != img.degree) {
                failures.push(format!("copies of one cylinder of the {} input have different degrees", side_name(side)));
            }
        }
    }
    if !failures.is_empty() {
        return WitnessReport { ok: false, degrees, multiplier: None, checks, failures };
    }

    let rho_u = |u: usize| plan.class_density[&plan.rigid_class[0][u]].clone();
    let mut observed: Vec<(String, Rational, Rational)> = Vec::new();
    let mut rigid_count: BTreeMap<(usize, usize), usize> = BTreeMap::new();
    for r in 0..cover.rigid.len() {
        let key = (w.legs[0].rigid[r].0, w.legs[1].rigid[r].0);
        *rigid_count.entry(key).or_default() += cover.rigid[r].space.num_vertices();
    }
    for ((u, u2), n) in &rigid_count {
        let form = ratio::int((a.rigid[*u].space.num_vertices() * b.rigid[*u2].space.num_vertices()) as i64) / rho_u(*u);
        observed.push((format!("rigid pair ({},{})", a.rigid[*u].name, b.rigid[*u2].name), ratio::int(*n as i64), form));
    }
    let edge_form = |e: usize, e2: usize| -> Rational {
        let c = a.edge_colour(e, Direction::Forward);
        let num = ratio::int((a.fin_length(e) * b.fin_length(e2)) as i64);
        num / (ratio::int(length[&edge_class(a, e)] as i64) * &plan.densities[0].colour_density[c] * rho_u(a.edges[e].rigid))
    };
    let mut edge_count: BTreeMap<(usize, usize, Direction), usize> = BTreeMap::new();
    for (k, edge) in cover.edges.iter().enumerate() {
        let i1 = w.legs[0].rigid[edge.rigid].1.fin_map[edge.fin];
        let i2 = w.legs[1].rigid[edge.rigid].1.fin_map[edge.fin];
        *edge_count.entry((w.legs[0].edges[k], w.legs[1].edges[k], relative(i1, i2))).or_default() += 1;
    }
    for ((e, e2, r), n) in &edge_count {
        observed.push((
            format!("edge spaces over ({},{}) {}", a.edges[*e].name, b.edges[*e2].name, r.suffix()),
            ratio::int(*n as i64),
            edge_form(*e, *e2),
        ));
    }
    let mut cyl_copies: BTreeMap<(usize, usize, Direction), Vec<usize>> = BTreeMap::new();
    for c in 0..cover.cylinders.len() {
        let (i1, i2) = (w.legs[0].cylinders[c], w.legs[1].cylinders[c]);
        cyl_copies.entry((i1.cylinder, i2.cylinder, i1.orientation.compose(i2.orientation))).or_default().push(c);
    }
    for ((v, v2, s), copies) in &cyl_copies {
        let n = ratio::int(copies.len() as i64);
        let profile = plan.numbers[0].profile(*v, Direction::Forward);
        for e in a.link(*v) {
            let c = a.edge_colour(e, Direction::Forward);
            if let Some(e2) = b.link(*v2).into_iter().find(|&x| b.edge_colour(x, *s) == c) {
                let form = ratio::int(profile[c] as i64) * edge_form(e, e2);
                observed.push((format!("cylinder pair ({},{}) via colour {c}", a.cylinders[*v].name, b.cylinders[*v2].name), n.clone(), form));
            }
        }
        let key = &plan.keys[0][&(*v, Direction::Forward)];
        let mut sum = Rational::zero();
        for ((x, _), k2) in &plan.keys[0] {
            if k2 == key {
                sum += ratio::frac((deg[0][v] * deg[1][v2]) as i64, deg[0][x] as i64);
            }
        }
        observed.push((
            format!("cylinder pair ({},{}) closed form", a.cylinders[*v].name, b.cylinders[*v2].name),
            n,
            ratio::int(a.volume() as i64) / sum,
        ));
        // link maps spread evenly over the copies
        let mut used: BTreeMap<Vec<usize>, usize> = BTreeMap::new();
        for &c in copies {
            let mut sigma: Vec<(usize, usize)> = cover.link(c).iter().map(|&k| (w.legs[0].edges[k], w.legs[1].edges[k])).collect();
            sigma.sort();
            *used.entry(sigma.into_iter().map(|x| x.1).collect()).or_default() += 1;
        }
        let all = enumerate_link_maps(a, b, *v, *v2, *s).len();
        let even = used.len() == all && used.values().collect::<BTreeSet<_>>().len() == 1;
        checks.push(IdentityCheck {
            name: format!("link maps spread evenly over cylinder pair ({},{})", a.cylinders[*v].name, b.cylinders[*v2].name),
            lhs: used.len().to_string(),
            rhs: all.to_string(),
            ok: even,
        });
    }
    let multiplier = observed.first().map(|(_, n, f)| n / f);
    if let Some(m) = &multiplier {
        for (name, n, f) in &observed {
            checks.push(check(format!("{name}: count against closed form"), n, &(f * m)));
        }
    }
    for c in &checks {
        if !c.ok {
            failures.push(format!("identity fails: {}", c.name));
        }
    }
    WitnessReport {
        ok: failures.is_empty(),
        degrees,
        multiplier: multiplier.map(|m| m.to_string()),
        checks,
        failures,
    }
}

/// Runs every stage and verifies the result.
pub fn commensurate(
    a: &GraphOfSpaces,
    b: &GraphOfSpaces,
    config: &PipelineConfig,
) -> Result<(Witness, WitnessReport), PipelineError> {
    let plan = match_structures(a, b)?;
    let pieces = rigid_common_covers(&plan)?;
    let targets = target_lengths(&plan, &pieces);
    let pieces = normalize_fin_lengths(&plan, pieces, &targets, config)?;
    let gluing = solve_global_gluing(&plan, &pieces, &targets)?;
    let witness = assemble_witness([a, b], &plan, &pieces, &gluing)?;
    let report = verify_witness(&witness);
    Ok((witness, report))
}

/// Lifts a graph of spaces along a graph cover of each rigid space that
/// unwraps every fin by the same degree `d`, with cylinders covered by `d`.
///
/// With `d = 1` and identity covers this relabels; it is used to build
/// test inputs that are finite covers of a given graph of spaces.
pub fn uniform_cover(g: &GraphOfSpaces, lifts: &[(Graph, crate::cover::GraphCover)], d: usize) -> Option<GraphOfSpaces> {
    let mut rigid = Vec::new();
    let mut fins_over: Vec<Vec<Vec<(usize, Direction)>>> = Vec::new();
    for (r, (cg, gc)) in g.rigid.iter().zip(lifts) {
        let (lifted, map) = induced_cover(&r.space, cg, gc).ok()?;
        let mut over = vec![Vec::new(); r.space.num_fins()];
        for f in 0..lifted.num_fins() {
            let img = map.fin_map[f];
            if img.degree != d {
                return None;
            }
            over[img.fin].push((f, img.dir));
        }
        fins_over.push(over);
        rigid.push(RigidVertex { name: format!("{}~", r.name), space: lifted });
    }
    let mut cylinders = Vec::new();
    let mut edges = Vec::new();
    // every cylinder lifts once per lift of each incident fin, all links
    // having the same number of lifts
    for (v, c) in g.cylinders.iter().enumerate() {
        let link = g.link(v);
        let copies = fins_over[g.edges[link[0]].rigid][g.edges[link[0]].fin].len();
        if link.iter().any(|&e| fins_over[g.edges[e].rigid][g.edges[e].fin].len() != copies) {
            return None;
        }
        for k in 0..copies {
            let idx = cylinders.len();
            cylinders.push(Cylinder { name: format!("{}~{k}", c.name), ..c.clone() });
            for &e in &link {
                let (f, dir) = fins_over[g.edges[e].rigid][g.edges[e].fin][k];
                edges.push(GosEdge {
                    name: format!("{}~{k}", g.edges[e].name),
                    rigid: g.edges[e].rigid,
                    fin: f,
                    cylinder: idx,
                    sign: g.edges[e].sign.compose(dir),
                });
            }
        }
    }
    Some(GraphOfSpaces { rigid, cylinders, edges })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cover::GraphCover;
    use crate::graph::Dart;
    use crate::gos::fixtures::{rose, single_edge};
    use crate::words::{rigidity_sufficient, Rigidity, Word};

    /// x -> 1, y -> 0 in Z/2 on a rank-two rose.
    fn parity_cover() -> (Graph, GraphCover) {
        let g = Graph::from_names(&["o.0", "o.1"], &[("x.0", "o.0", "o.1"), ("x.1", "o.1", "o.0"), ("y.0", "o.0", "o.0"), ("y.1", "o.1", "o.1")])
            .unwrap();
        let dart_map = vec![
            Dart::new(0, true), Dart::new(0, false), Dart::new(0, true), Dart::new(0, false),
            Dart::new(1, true), Dart::new(1, false), Dart::new(1, true), Dart::new(1, false),
        ];
        (g, GraphCover { vertex_map: vec![0, 0], dart_map })
    }

    const W1: &str = "xxxYxYYYXYxxyXyXYYxyx";
    const W2: &str = "xYYYxyyxyXyxxxYxxxyxY";

    fn amalgam() -> GraphOfSpaces {
        GraphOfSpaces {
            rigid: vec![
                RigidVertex { name: "u1".into(), space: rose(&[W1]) },
                RigidVertex { name: "u2".into(), space: rose(&[W2]) },
            ],
            cylinders: vec![Cylinder { name: "v".into(), kind: CylinderKind::Circle, transverse_rank: 1 }],
            edges: vec![
                GosEdge { name: "e1".into(), rigid: 0, fin: 0, cylinder: 0, sign: Direction::Forward },
                GosEdge { name: "e2".into(), rigid: 1, fin: 0, cylinder: 0, sign: Direction::Forward },
            ],
        }
    }

    #[test]
    fn words_are_rigid_with_odd_x_sum() {
        for w in [W1, W2] {
            let w = Word::parse(w).unwrap();
            assert_eq!(rigidity_sufficient(2, std::slice::from_ref(&w)).unwrap(), Rigidity::Sufficient);
            assert_eq!(w.exponent_sum(0).rem_euclid(2), 1);
        }
    }

    #[test]
    fn identical_inputs_give_a_verified_witness() {
        let g = single_edge(W1);
        let (w, report) = commensurate(&g, &g, &PipelineConfig::default()).unwrap();
        assert!(report.ok, "{:?}", report.failures);
        assert_eq!(report.degrees, [Some(1), Some(1)]);
        assert_eq!(w.cover.rigid.len(), 1);
    }

    #[test]
    fn amalgam_against_its_double_cover() {
        let a = amalgam();
        let lifts = vec![parity_cover(), parity_cover()];
        let b = uniform_cover(&a, &lifts, 2).expect("both words unwrap");
        assert!(validate_gos(&b).ok, "{:?}", validate_gos(&b).problems);
        let (w, report) = commensurate(&a, &b, &PipelineConfig::default()).unwrap();
        assert!(report.ok, "{:?}", report.failures);
        // the double cover itself is the smallest common cover
        assert_eq!(report.degrees, [Some(2), Some(1)]);
        assert_eq!(w.gluing.cylinders[0].degrees, [2, 1]);
    }

    #[test]
    fn longer_targets_unwrap_every_piece() {
        let g = single_edge(W1);
        let plan = match_structures(&g, &g).unwrap();
        let pieces = rigid_common_covers(&plan).unwrap();
        let mut targets = target_lengths(&plan, &pieces);
        targets.n *= 2;
        targets.length.values_mut().for_each(|l| *l *= 2);
        let config = PipelineConfig { budget: 0, seed: 0 };
        let err = normalize_fin_lengths(&plan, pieces.clone(), &targets, &config).unwrap_err();
        assert!(matches!(err, PipelineError::BudgetExhausted(_)), "{err}");
        let pieces = normalize_fin_lengths(&plan, pieces, &targets, &PipelineConfig::default()).unwrap();
        assert!(pieces.iter().all(|p| p.unwrap_degree == 2));
        let gluing = solve_global_gluing(&plan, &pieces, &targets).unwrap();
        let w = assemble_witness([&g, &g], &plan, &pieces, &gluing).unwrap();
        let report = verify_witness(&w);
        assert!(report.ok, "{:?}", report.failures);
        assert_eq!(w.gluing.cylinders[0].degrees, [2, 2]);
    }

    #[test]
    fn reversible_fin_doubles_the_cover() {
        // xyXXY is conjugate to its own reverse, so both cylinder orientations pair up
        let g = single_edge("xyXXY");
        let (w, report) = commensurate(&g, &g, &PipelineConfig::default()).unwrap();
        assert!(report.ok, "{:?}", report.failures);
        assert_eq!(report.degrees, [Some(2), Some(2)]);
        assert_eq!(w.gluing.cylinders.len(), 2);
    }

    #[test]
    fn different_cylinder_numbers_are_reported() {
        let a = single_edge("xyXXY");
        let mut b = a.clone();
        // second copy of the rigid vertex on the same cylinder
        b.rigid.push(RigidVertex { name: "u2".into(), space: b.rigid[0].space.clone() });
        b.edges.push(GosEdge { name: "f".into(), rigid: 1, fin: 0, cylinder: 0, sign: Direction::Forward });
        let err = commensurate(&a, &b, &PipelineConfig::default()).unwrap_err();
        assert!(err.to_string().contains("cylinder numbers differ (ratios match)"), "{err}");
        assert!(err.to_string().contains("not commensurable"));
    }

    #[test]
    fn tampered_witness_fails() {
        let g = single_edge("xyXXY");
        let (w, _) = commensurate(&g, &g, &PipelineConfig::default()).unwrap();
        let mut flipped = w.clone();
        flipped.cover.edges[0].sign = flipped.cover.edges[0].sign.reverse();
        let r = verify_witness(&flipped);
        assert!(r.failures.iter().any(|f| f.contains("orientation mismatch on edge space")));
        let mut unglued = w;
        unglued.cover.edges.clear();
        unglued.legs[0].edges.clear();
        unglued.legs[1].edges.clear();
        let r = verify_witness(&unglued);
        assert!(r.failures.iter().any(|f| f.contains("unmatched fin")));
    }
}
