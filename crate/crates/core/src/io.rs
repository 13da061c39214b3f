//! Versioned JSON documents. Everything on disk refers to vertices, edges,
//! fins and cylinders by name; indices never leave the process.

use std::collections::BTreeMap;

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::balanced::{RawEdge, RawGraphOfCyclicGroups, RawVertex};
use crate::cover::{CoverReport, CoveringMap, FinImage};
use crate::error::{FinGraphError, WordError};
use crate::fins::{Direction, Fin, GraphWithFins};
use crate::gos::{Cylinder, CylinderKind, GosEdge, GraphOfSpaces, RigidVertex};
use crate::graph::{Dart, Graph};
use crate::leighton::{CommonCover, FinEquationReport, HaarWeights};
use crate::pipeline::{CylinderImage, GluingSolution, Witness, WitnessLeg, WitnessReport};
use crate::words::Word;

#[derive(Debug, Error)]
pub enum IoError {
    #[error("{0}")]
    Json(#[from] serde_json::Error),
    #[error("expected schema {expected}, found {found}")]
    Schema { expected: String, found: String },
    #[error("field {field}: {detail}")]
    Field { field: String, detail: String },
    #[error(transparent)]
    FinGraph(#[from] FinGraphError),
    #[error(transparent)]
    Word(#[from] WordError),
}

fn field(field: impl Into<String>, detail: impl Into<String>) -> IoError {
    IoError::Field { field: field.into(), detail: detail.into() }
}

#[derive(Deserialize)]
struct Tag {
    schema: Option<String>,
}

/// Schema tag of a document, if any.
pub fn schema_of(text: &str) -> Result<Option<String>, IoError> {
    Ok(serde_json::from_str::<Tag>(text)?.schema)
}

fn parse_tagged<T: DeserializeOwned>(text: &str, expected: &str) -> Result<T, IoError> {
    match schema_of(text)? {
        Some(s) if s == expected => Ok(serde_json::from_str(text)?),
        found => Err(IoError::Schema { expected: expected.into(), found: found.unwrap_or_else(|| "none".into()) }),
    }
}

/// Splits `"a+"` into edge `a` forwards.
fn parse_signed<'a>(token: &'a str, what: &str) -> Result<(&'a str, Direction), IoError> {
    match token.char_indices().last() {
        Some((i, '+')) if i > 0 => Ok((&token[..i], Direction::Forward)),
        Some((i, '-')) if i > 0 => Ok((&token[..i], Direction::Backward)),
        _ => Err(field(what, format!("{token:?} is not a signed name such as \"a+\" or \"a-\""))),
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct EdgeV1 {
    pub id: String,
    pub from: String,
    pub to: String,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct FinV1 {
    pub id: String,
    /// Signed edge ids, `"a+"` along the edge and `"a-"` against it.
    pub cycle: Vec<String>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct GwfV1 {
    pub schema: String,
    pub vertices: Vec<String>,
    pub edges: Vec<EdgeV1>,
    pub fins: Vec<FinV1>,
    /// `"fin:+"` and `"fin:-"` to colour.
    pub colours: BTreeMap<String, String>,
}

pub const GWF: &str = "gwf.v1";
pub const COVER: &str = "cover.v1";
pub const TYPES: &str = "types.v1";
pub const GOS: &str = "gos.v1";
pub const RAWGOG: &str = "rawgog.v1";
pub const WITNESS_FINS: &str = "witness-fins.v1";
pub const WITNESS: &str = "witness.v1";

impl GwfV1 {
    pub fn from_gwf(x: &GraphWithFins) -> Self {
        let g = x.graph();
        let mut colours = BTreeMap::new();
        for (fin, pair) in x.fins().iter().zip(x.colour_pairs()) {
            colours.insert(format!("{}:+", fin.name), pair[0].clone());
            colours.insert(format!("{}:-", fin.name), pair[1].clone());
        }
        GwfV1 {
            schema: GWF.into(),
            vertices: g.vertex_names().to_vec(),
            edges: (0..g.num_edges())
                .map(|e| {
                    let (a, b) = g.edge_ends(e);
                    EdgeV1 { id: g.edge_name(e).into(), from: g.vertex_name(a).into(), to: g.vertex_name(b).into() }
                })
                .collect(),
            fins: x
                .fins()
                .iter()
                .map(|f| FinV1 { id: f.name.clone(), cycle: f.cycle.iter().map(|&d| g.dart_name(d)).collect() })
                .collect(),
            colours,
        }
    }

    /// Builds the graph with fins; connectivity is left to the caller.
    pub fn to_gwf(&self) -> Result<GraphWithFins, IoError> {
        let edges: Vec<(&str, &str, &str)> =
            self.edges.iter().map(|e| (e.id.as_str(), e.from.as_str(), e.to.as_str())).collect();
        let names: Vec<&str> = self.vertices.iter().map(String::as_str).collect();
        let graph = Graph::from_names(&names, &edges)?;
        let mut fins = Vec::new();
        let mut colours = Vec::new();
        for (i, f) in self.fins.iter().enumerate() {
            let mut cycle = Vec::new();
            for (k, t) in f.cycle.iter().enumerate() {
                let at = format!("fins[{i}].cycle[{k}]");
                let (e, dir) = parse_signed(t, &at)?;
                let e = graph.edge_index(e).ok_or_else(|| field(&at, format!("unknown edge {e}")))?;
                cycle.push(Dart::new(e, dir == Direction::Forward));
            }
            fins.push(Fin { name: f.id.clone(), cycle });
            let colour = |s: char| {
                let key = format!("{}:{s}", f.id);
                self.colours.get(&key).cloned().ok_or_else(|| field("colours", format!("missing colour for {key}")))
            };
            colours.push([colour('+')?, colour('-')?]);
        }
        if let Some(k) = self.colours.keys().find(|k| {
            !self.fins.iter().any(|f| **k == format!("{}:+", f.id) || **k == format!("{}:-", f.id))
        }) {
            return Err(field("colours", format!("{k} names no oriented fin")));
        }
        Ok(GraphWithFins::new(graph, fins, colours)?)
    }
}

pub fn parse_gwf(text: &str) -> Result<GraphWithFins, IoError> {
    parse_tagged::<GwfV1>(text, GWF)?.to_gwf()
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct FinImageV1 {
    pub fin: String,
    pub offset: usize,
    pub degree: usize,
    pub dir: Direction,
}

/// A covering map by names: every dart of the source (`"a+"`, `"a-"`) is listed.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct MapV1 {
    pub vertex_map: BTreeMap<String, String>,
    pub dart_map: BTreeMap<String, String>,
    pub fin_map: BTreeMap<String, FinImageV1>,
}

impl MapV1 {
    pub fn from_map(source: &GraphWithFins, target: &GraphWithFins, m: &CoveringMap) -> Self {
        let (gs, gt) = (source.graph(), target.graph());
        MapV1 {
            vertex_map: m
                .vertex_map
                .iter()
                .enumerate()
                .map(|(v, &w)| (gs.vertex_name(v).into(), gt.vertex_name(w).into()))
                .collect(),
            dart_map: m.dart_map.iter().enumerate().map(|(d, &e)| (gs.dart_name(Dart(d)), gt.dart_name(e))).collect(),
            fin_map: m
                .fin_map
                .iter()
                .enumerate()
                .map(|(f, img)| {
                    let v = FinImageV1 {
                        fin: target.fin(img.fin).name.clone(),
                        offset: img.offset,
                        degree: img.degree,
                        dir: img.dir,
                    };
                    (source.fin(f).name.clone(), v)
                })
                .collect(),
        }
    }

    pub fn to_map(&self, source: &GraphWithFins, target: &GraphWithFins) -> Result<CoveringMap, IoError> {
        let (gs, gt) = (source.graph(), target.graph());
        let lookup = |map: &BTreeMap<String, String>, key: &str, what: &str| -> Result<String, IoError> {
            map.get(key).cloned().ok_or_else(|| field(what, format!("no image for {key}")))
        };
        let mut vertex_map = Vec::new();
        for v in gs.vertex_names() {
            let w = lookup(&self.vertex_map, v, "vertex_map")?;
            vertex_map.push(gt.vertex_index(&w).ok_or_else(|| field("vertex_map", format!("unknown vertex {w}")))?);
        }
        let mut dart_map = Vec::new();
        for d in gs.darts() {
            let w = lookup(&self.dart_map, &gs.dart_name(d), "dart_map")?;
            let (e, dir) = parse_signed(&w, "dart_map")?;
            let e = gt.edge_index(e).ok_or_else(|| field("dart_map", format!("unknown edge {e}")))?;
            dart_map.push(Dart::new(e, dir == Direction::Forward));
        }
        let mut fin_map = Vec::new();
        for f in source.fins() {
            let img = self.fin_map.get(&f.name).ok_or_else(|| field("fin_map", format!("no image for {}", f.name)))?;
            let fin = target.fin_index(&img.fin).ok_or_else(|| field("fin_map", format!("unknown fin {}", img.fin)))?;
            fin_map.push(FinImage { fin, offset: img.offset, degree: img.degree, dir: img.dir });
        }
        for (name, len, what) in [
            (self.vertex_map.len(), gs.num_vertices(), "vertex_map"),
            (self.dart_map.len(), gs.num_darts(), "dart_map"),
            (self.fin_map.len(), source.num_fins(), "fin_map"),
        ] {
            if name != len {
                return Err(field(what, "lists names that are not in the source"));
            }
        }
        Ok(CoveringMap { vertex_map, dart_map, fin_map })
    }
}

/// A covering map together with its source and target.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CoverV1 {
    pub schema: String,
    pub source: GwfV1,
    pub target: GwfV1,
    #[serde(flatten)]
    pub map: MapV1,
}

pub fn write_cover(source: &GraphWithFins, target: &GraphWithFins, m: &CoveringMap) -> CoverV1 {
    CoverV1 {
        schema: COVER.into(),
        source: GwfV1::from_gwf(source),
        target: GwfV1::from_gwf(target),
        map: MapV1::from_map(source, target, m),
    }
}

pub fn parse_cover(text: &str) -> Result<(GraphWithFins, GraphWithFins, CoveringMap), IoError> {
    let doc: CoverV1 = parse_tagged(text, COVER)?;
    let source = doc.source.to_gwf()?;
    let target = doc.target.to_gwf()?;
    let map = doc.map.to_map(&source, &target)?;
    Ok((source, target, map))
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct RigidV1 {
    pub id: String,
    pub space: GwfV1,
}

fn default_rank() -> usize {
    1
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CylinderV1 {
    pub id: String,
    pub kind: CylinderKind,
    #[serde(default = "default_rank")]
    pub transverse_rank: usize,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct GosEdgeV1 {
    pub id: String,
    pub rigid: String,
    pub fin: String,
    pub cylinder: String,
    pub sign: Direction,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct GosV1 {
    pub schema: String,
    pub rigid: Vec<RigidV1>,
    pub cylinders: Vec<CylinderV1>,
    pub edges: Vec<GosEdgeV1>,
}

impl GosV1 {
    pub fn from_gos(g: &GraphOfSpaces) -> Self {
        GosV1 {
            schema: GOS.into(),
            rigid: g.rigid.iter().map(|r| RigidV1 { id: r.name.clone(), space: GwfV1::from_gwf(&r.space) }).collect(),
            cylinders: g
                .cylinders
                .iter()
                .map(|c| CylinderV1 { id: c.name.clone(), kind: c.kind, transverse_rank: c.transverse_rank })
                .collect(),
            edges: g
                .edges
                .iter()
                .map(|e| GosEdgeV1 {
                    id: e.name.clone(),
                    rigid: g.rigid[e.rigid].name.clone(),
                    fin: g.rigid[e.rigid].space.fin(e.fin).name.clone(),
                    cylinder: g.cylinders[e.cylinder].name.clone(),
                    sign: e.sign,
                })
                .collect(),
        }
    }

    pub fn to_gos(&self) -> Result<GraphOfSpaces, IoError> {
        let mut rigid = Vec::new();
        for r in &self.rigid {
            rigid.push(RigidVertex { name: r.id.clone(), space: r.space.to_gwf()? });
        }
        let cylinders: Vec<Cylinder> = self
            .cylinders
            .iter()
            .map(|c| Cylinder { name: c.id.clone(), kind: c.kind, transverse_rank: c.transverse_rank })
            .collect();
        let mut edges = Vec::new();
        for (i, e) in self.edges.iter().enumerate() {
            let at = |f: &str| format!("edges[{i}].{f}");
            let u = rigid
                .iter()
                .position(|r| r.name == e.rigid)
                .ok_or_else(|| field(at("rigid"), format!("unknown rigid vertex {}", e.rigid)))?;
            let fin = rigid[u]
                .space
                .fin_index(&e.fin)
                .ok_or_else(|| field(at("fin"), format!("{} has no fin {}", e.rigid, e.fin)))?;
            let cylinder = cylinders
                .iter()
                .position(|c| c.name == e.cylinder)
                .ok_or_else(|| field(at("cylinder"), format!("unknown cylinder {}", e.cylinder)))?;
            edges.push(GosEdge { name: e.id.clone(), rigid: u, fin, cylinder, sign: e.sign });
        }
        Ok(GraphOfSpaces { rigid, cylinders, edges })
    }
}

pub fn parse_gos(text: &str) -> Result<GraphOfSpaces, IoError> {
    parse_tagged::<GosV1>(text, GOS)?.to_gos()
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct RawVertexV1 {
    pub id: String,
    pub rank: usize,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct RawEdgeV1 {
    pub id: String,
    pub from: String,
    pub to: String,
    /// Edge generator in the `from` vertex group, spelled as a word.
    pub from_word: String,
    pub to_word: String,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct RawgogV1 {
    pub schema: String,
    pub vertices: Vec<RawVertexV1>,
    pub edges: Vec<RawEdgeV1>,
}

impl RawgogV1 {
    pub fn from_raw(raw: &RawGraphOfCyclicGroups) -> Self {
        RawgogV1 {
            schema: RAWGOG.into(),
            vertices: raw.vertices.iter().map(|v| RawVertexV1 { id: v.name.clone(), rank: v.rank }).collect(),
            edges: raw
                .edges
                .iter()
                .map(|e| RawEdgeV1 {
                    id: e.name.clone(),
                    from: raw.vertices[e.from].name.clone(),
                    to: raw.vertices[e.to].name.clone(),
                    from_word: e.from_word.to_string(),
                    to_word: e.to_word.to_string(),
                })
                .collect(),
        }
    }

    pub fn to_raw(&self) -> Result<RawGraphOfCyclicGroups, IoError> {
        let vertices: Vec<RawVertex> = self.vertices.iter().map(|v| RawVertex { name: v.id.clone(), rank: v.rank }).collect();
        let find = |name: &str, at: String| {
            vertices.iter().position(|v| v.name == name).ok_or_else(|| field(at, format!("unknown vertex {name}")))
        };
        let mut edges = Vec::new();
        for (i, e) in self.edges.iter().enumerate() {
            edges.push(RawEdge {
                name: e.id.clone(),
                from: find(&e.from, format!("edges[{i}].from"))?,
                to: find(&e.to, format!("edges[{i}].to"))?,
                from_word: Word::parse(&e.from_word)?,
                to_word: Word::parse(&e.to_word)?,
            });
        }
        let raw = RawGraphOfCyclicGroups { vertices, edges };
        raw.validate()?;
        Ok(raw)
    }
}

pub fn parse_rawgog(text: &str) -> Result<RawGraphOfCyclicGroups, IoError> {
    parse_tagged::<RawgogV1>(text, RAWGOG)?.to_raw()
}

/// A common cover of two graphs with fins, both legs and the fin equation.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct WitnessFinsV1 {
    pub schema: String,
    pub inputs: [GwfV1; 2],
    pub cover: GwfV1,
    pub legs: [MapV1; 2],
    pub weights: HaarWeights,
    pub leg_reports: [CoverReport; 2],
    pub fin_equation: FinEquationReport,
    pub ok: bool,
}

pub fn write_witness_fins(x1: &GraphWithFins, x2: &GraphWithFins, cc: &CommonCover) -> WitnessFinsV1 {
    WitnessFinsV1 {
        schema: WITNESS_FINS.into(),
        inputs: [GwfV1::from_gwf(x1), GwfV1::from_gwf(x2)],
        cover: GwfV1::from_gwf(&cc.cover),
        legs: [MapV1::from_map(&cc.cover, x1, &cc.leg1), MapV1::from_map(&cc.cover, x2, &cc.leg2)],
        weights: cc.weights.clone(),
        leg_reports: [cc.leg1_report.clone(), cc.leg2_report.clone()],
        fin_equation: cc.fin_equation.clone(),
        ok: cc.ok(),
    }
}

/// Inputs, cover and both legs of a `witness-fins.v1` document.
pub type FinsWitness = ([GraphWithFins; 2], GraphWithFins, [CoveringMap; 2]);

pub fn parse_witness_fins(text: &str) -> Result<FinsWitness, IoError> {
    let doc: WitnessFinsV1 = parse_tagged(text, WITNESS_FINS)?;
    let x1 = doc.inputs[0].to_gwf()?;
    let x2 = doc.inputs[1].to_gwf()?;
    let cover = doc.cover.to_gwf()?;
    let l1 = doc.legs[0].to_map(&cover, &x1)?;
    let l2 = doc.legs[1].to_map(&cover, &x2)?;
    Ok(([x1, x2], cover, [l1, l2]))
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct RigidImageV1 {
    pub vertex: String,
    pub target: String,
    pub map: MapV1,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CylinderImageV1 {
    pub cylinder: String,
    pub target: String,
    pub degree: usize,
    pub orientation: Direction,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct EdgeImageV1 {
    pub edge: String,
    pub target: String,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct LegV1 {
    pub rigid: Vec<RigidImageV1>,
    pub cylinders: Vec<CylinderImageV1>,
    pub edges: Vec<EdgeImageV1>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct WitnessV1 {
    pub schema: String,
    pub inputs: [GosV1; 2],
    pub cover: GosV1,
    pub legs: [LegV1; 2],
    pub gluing: GluingSolution,
    pub report: WitnessReport,
}

pub fn write_witness(w: &Witness, report: &WitnessReport) -> WitnessV1 {
    let legs = [0, 1].map(|side| {
        let target = &w.inputs[side];
        let leg = &w.legs[side];
        LegV1 {
            rigid: leg
                .rigid
                .iter()
                .enumerate()
                .map(|(r, (u, m))| RigidImageV1 {
                    vertex: w.cover.rigid[r].name.clone(),
                    target: target.rigid[*u].name.clone(),
                    map: MapV1::from_map(&w.cover.rigid[r].space, &target.rigid[*u].space, m),
                })
                .collect(),
            cylinders: leg
                .cylinders
                .iter()
                .enumerate()
                .map(|(c, img)| CylinderImageV1 {
                    cylinder: w.cover.cylinders[c].name.clone(),
                    target: target.cylinders[img.cylinder].name.clone(),
                    degree: img.degree,
                    orientation: img.orientation,
                })
                .collect(),
            edges: leg
                .edges
                .iter()
                .enumerate()
                .map(|(e, &t)| EdgeImageV1 { edge: w.cover.edges[e].name.clone(), target: target.edges[t].name.clone() })
                .collect(),
        }
    });
    WitnessV1 {
        schema: WITNESS.into(),
        inputs: [GosV1::from_gos(&w.inputs[0]), GosV1::from_gos(&w.inputs[1])],
        cover: GosV1::from_gos(&w.cover),
        legs,
        gluing: w.gluing.clone(),
        report: report.clone(),
    }
}

pub fn parse_witness(text: &str) -> Result<Witness, IoError> {
    let doc: WitnessV1 = parse_tagged(text, WITNESS)?;
    let inputs = [doc.inputs[0].to_gos()?, doc.inputs[1].to_gos()?];
    let cover = doc.cover.to_gos()?;
    let mut legs = Vec::new();
    for (side, leg) in doc.legs.iter().enumerate() {
        let target = &inputs[side];
        let at = |f: &str| format!("legs[{side}].{f}");
        if leg.rigid.len() != cover.rigid.len()
            || leg.cylinders.len() != cover.cylinders.len()
            || leg.edges.len() != cover.edges.len()
        {
            return Err(field(at("rigid"), "every vertex and edge of the cover needs one image"));
        }
        let mut rigid = Vec::new();
        for (r, img) in leg.rigid.iter().enumerate() {
            if img.vertex != cover.rigid[r].name {
                return Err(field(at("rigid"), format!("expected {} in position {r}", cover.rigid[r].name)));
            }
            let u = target
                .rigid
                .iter()
                .position(|t| t.name == img.target)
                .ok_or_else(|| field(at("rigid"), format!("unknown rigid vertex {}", img.target)))?;
            rigid.push((u, img.map.to_map(&cover.rigid[r].space, &target.rigid[u].space)?));
        }
        let mut cylinders = Vec::new();
        for (c, img) in leg.cylinders.iter().enumerate() {
            if img.cylinder != cover.cylinders[c].name {
                return Err(field(at("cylinders"), format!("expected {} in position {c}", cover.cylinders[c].name)));
            }
            let v = target
                .cylinders
                .iter()
                .position(|t| t.name == img.target)
                .ok_or_else(|| field(at("cylinders"), format!("unknown cylinder {}", img.target)))?;
            cylinders.push(CylinderImage { cylinder: v, degree: img.degree, orientation: img.orientation });
        }
        let mut edges = Vec::new();
        for (e, img) in leg.edges.iter().enumerate() {
            if img.edge != cover.edges[e].name {
                return Err(field(at("edges"), format!("expected {} in position {e}", cover.edges[e].name)));
            }
            edges.push(
                target
                    .edge_index(&img.target)
                    .ok_or_else(|| field(at("edges"), format!("unknown edge {}", img.target)))?,
            );
        }
        legs.push(WitnessLeg { rigid, cylinders, edges });
    }
    let [l0, l1]: [WitnessLeg; 2] = legs.try_into().expect("two legs");
    Ok(Witness { inputs, cover, legs: [l0, l1], gluing: doc.gluing })
}
