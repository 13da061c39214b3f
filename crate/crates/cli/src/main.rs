//! `comcover`: command line front end. Every command reads JSON documents,
//! prints one JSON document on standard output and reports through its exit
//! code: 0 success, 1 verification failure, 2 malformed input, 3 no
//! matching, 4 search budget exhausted.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::Context;
use clap::{Parser, Subcommand};
use serde_json::{json, Value};

use comcover::balanced::{balanced, Balance};
use comcover::gos::{
    check_flip_identity, colour_reversal, cylinder_numbers, densities, stretch_ratio, validate_gos, GraphOfSpaces,
};
use comcover::io::{self, IoError};
use comcover::leighton::{fin_equation, leighton_fins};
use comcover::pipeline::{commensurate, verify_witness, PipelineConfig, DEFAULT_BUDGET};
use comcover::types::{canonical_colours, same_universal_cover, ColourMode, UniversalCoverVerdict};
use comcover::words::{random_reduced_word, rigidity_sufficient, Rigidity, Word};
use comcover::{verify_covering, GraphWithFins, LeightonError, PipelineError};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

#[derive(Parser)]
#[command(name = "comcover", version, about = "Common finite covers of graphs with fins and graphs of spaces")]
struct Cli {
    /// Print a short human-readable summary instead of JSON.
    #[arg(long, global = true)]
    pretty: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Parse and check a gwf.v1, gos.v1, cover.v1 or rawgog.v1 document.
    Validate {
        file: PathBuf,
        /// Keep only the component of the first vertex.
        #[arg(long)]
        component: bool,
    },
    /// Colour densities of a graph with fins, or class densities of a graph of spaces.
    Density {
        file: PathBuf,
        #[arg(long)]
        component: bool,
    },
    /// Verify a cover.v1 covering map.
    CoverCheck { file: PathBuf },
    /// Decide whether two graphs with fins have isomorphic universal covers.
    UnivEq {
        a: PathBuf,
        b: PathBuf,
        /// Compare structure only, ignoring colour tokens.
        #[arg(long)]
        ignore_colours: bool,
        #[arg(long)]
        component: bool,
    },
    /// Stable local types and canonical fin colours (types.v1).
    Colours {
        #[arg(required = true)]
        files: Vec<PathBuf>,
        #[arg(long)]
        ignore_colours: bool,
        #[arg(long)]
        component: bool,
    },
    /// Common finite cover of two graphs with fins (witness-fins.v1).
    CommonCover {
        a: PathBuf,
        b: PathBuf,
        #[arg(long)]
        component: bool,
    },
    /// Balancedness of a graph of cyclic groups (rawgog.v1).
    Balanced { file: PathBuf },
    /// Cylinder numbers, stretch ratios and densities of a graph of spaces.
    Invariants { file: PathBuf },
    /// Length-three rigidity test for words, or sampled statistics.
    Rigidity {
        words: Vec<String>,
        #[arg(long, default_value_t = 2)]
        rank: usize,
        /// Number of random words to sample instead of testing `words`.
        #[arg(long)]
        sample: Option<usize>,
        #[arg(long, default_value_t = 200)]
        length: usize,
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Common finite cover of two graphs of spaces (witness.v1).
    Commensurate {
        a: PathBuf,
        b: PathBuf,
        #[arg(long, default_value_t = DEFAULT_BUDGET)]
        budget: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Re-check a witness.v1 or witness-fins.v1 document from its inputs.
    VerifyWitness { file: PathBuf },
}

/// Result of one command: exit code, JSON document and summary lines.
struct Outcome {
    code: u8,
    json: Value,
    summary: Vec<String>,
}

impl Outcome {
    fn new(ok: bool, json: Value, summary: Vec<String>) -> Self {
        Outcome { code: if ok { 0 } else { 1 }, json, summary }
    }
}

/// Errors that map to a nonzero exit code other than 1.
#[derive(Debug)]
enum Refusal {
    Malformed(String),
    NoMatching(String),
    Budget(String),
}

impl std::fmt::Display for Refusal {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Refusal::Malformed(m) | Refusal::NoMatching(m) | Refusal::Budget(m) => f.write_str(m),
        }
    }
}

impl std::error::Error for Refusal {}

fn malformed(e: impl std::fmt::Display) -> anyhow::Error {
    Refusal::Malformed(e.to_string()).into()
}

fn read(path: &Path) -> anyhow::Result<String> {
    std::fs::read_to_string(path).with_context(|| format!("cannot read {}", path.display())).map_err(malformed)
}

fn parse<T>(path: &Path, f: impl Fn(&str) -> Result<T, IoError>) -> anyhow::Result<T> {
    let text = read(path)?;
    f(&text).map_err(|e| malformed(format!("{}: {e}", path.display())))
}

fn load_gwf(path: &Path, component: bool) -> anyhow::Result<GraphWithFins> {
    let x = parse(path, io::parse_gwf)?;
    let x = if component && x.num_vertices() > 0 { x.component(0) } else { x };
    if x.num_vertices() == 0 || !x.graph().is_connected() {
        return Err(malformed(format!("{}: graph is empty or disconnected (see --component)", path.display())));
    }
    Ok(x)
}

fn load_gos(path: &Path) -> anyhow::Result<GraphOfSpaces> {
    let g = parse(path, io::parse_gos)?;
    let report = validate_gos(&g);
    if !report.ok {
        return Err(malformed(format!("{}: {}", path.display(), report.problems.join("; "))));
    }
    Ok(g)
}

fn mode(ignore: bool) -> ColourMode {
    if ignore {
        ColourMode::Ignore
    } else {
        ColourMode::Respect
    }
}

fn to_value<T: serde::Serialize>(x: &T) -> Value {
    serde_json::to_value(x).expect("reports serialise")
}

fn run(cli: &Cli) -> anyhow::Result<Outcome> {
    match &cli.command {
        Command::Validate { file, component } => validate(file, *component),
        Command::Density { file, component } => density(file, *component),
        Command::CoverCheck { file } => {
            let (s, t, m) = parse(file, io::parse_cover)?;
            let r = verify_covering(&s, &t, &m);
            let summary = match r.degree {
                Some(d) if r.ok => vec![format!("covering map of degree {d}")],
                _ => r.failures.iter().map(|f| f.to_string()).collect(),
            };
            Ok(Outcome::new(r.ok, json!({"schema": "cover-check", "report": to_value(&r)}), summary))
        }
        Command::UnivEq { a, b, ignore_colours, component } => {
            let (x, y) = (load_gwf(a, *component)?, load_gwf(b, *component)?);
            let v = same_universal_cover(&x, &y, mode(*ignore_colours));
            let ok = v == UniversalCoverVerdict::Compatible;
            let summary = vec![match &v {
                UniversalCoverVerdict::Compatible => "universal covers are isomorphic".to_string(),
                UniversalCoverVerdict::Incompatible { witness } => format!("universal covers differ: {witness}"),
            }];
            Ok(Outcome::new(ok, json!({"schema": "univ-eq", "result": to_value(&v)}), summary))
        }
        Command::Colours { files, ignore_colours, component } => {
            let xs = files.iter().map(|f| load_gwf(f, *component)).collect::<anyhow::Result<Vec<_>>>()?;
            Ok(types_report(&xs, mode(*ignore_colours)))
        }
        Command::CommonCover { a, b, component } => {
            let (x, y) = (load_gwf(a, *component)?, load_gwf(b, *component)?);
            let cc = leighton_fins(&x, &y).map_err(|e| match e {
                LeightonError::BadInput(m) => malformed(m),
                LeightonError::IncompatibleUniversalCovers(_) => Refusal::NoMatching(e.to_string()).into(),
                LeightonError::StarIsomorphismLimit { .. } => Refusal::Budget(e.to_string()).into(),
                other => anyhow::Error::from(other),
            })?;
            let doc = io::write_witness_fins(&x, &y, &cc);
            let summary = vec![
                format!("common cover with {} vertices and {} fins", cc.cover.num_vertices(), cc.cover.num_fins()),
                format!("leg degrees {:?} and {:?}", cc.leg1_report.degree, cc.leg2_report.degree),
                format!("fin equation {}", if cc.fin_equation.ok { "holds" } else { "fails" }),
            ];
            Ok(Outcome::new(cc.ok(), to_value(&doc), summary))
        }
        Command::Balanced { file } => {
            let raw = parse(file, io::parse_rawgog)?;
            let r = balanced(&raw).map_err(malformed)?;
            let ok = r.verdict == Balance::Balanced;
            let mut summary = vec![format!("{:?}", r.verdict).to_lowercase()];
            if let Some(w) = &r.witness {
                let path: Vec<String> =
                    w.edges.iter().map(|(e, fwd)| format!("{e}{}", if *fwd { '+' } else { '-' })).collect();
                summary.push(format!("loop {} has modulus {}", path.join(" "), w.modulus));
            }
            Ok(Outcome::new(ok, json!({"schema": "balanced", "report": to_value(&r)}), summary))
        }
        Command::Invariants { file } => invariants(file),
        Command::Rigidity { words, rank, sample, length, seed } => rigidity(words, *rank, *sample, *length, *seed),
        Command::Commensurate { a, b, budget, seed } => {
            let (x, y) = (load_gos(a)?, load_gos(b)?);
            let config = PipelineConfig { budget: *budget, seed: *seed };
            let (w, report) = commensurate(&x, &y, &config).map_err(|e| match e {
                PipelineError::NoMatching { .. } => Refusal::NoMatching(e.to_string()).into(),
                PipelineError::BudgetExhausted(_)
                | PipelineError::Leighton(LeightonError::StarIsomorphismLimit { .. }) => Refusal::Budget(e.to_string()).into(),
                PipelineError::Gos(g) => malformed(g),
                other => anyhow::Error::from(other),
            })?;
            let doc = io::write_witness(&w, &report);
            Ok(Outcome::new(report.ok, to_value(&doc), witness_summary(&w.cover, &report)))
        }
        Command::VerifyWitness { file } => verify(file),
    }
}

fn validate(file: &Path, component: bool) -> anyhow::Result<Outcome> {
    let text = read(file)?;
    let schema = io::schema_of(&text).map_err(malformed)?.unwrap_or_default();
    let err = |e: IoError| malformed(format!("{}: {e}", file.display()));
    let summary = match schema.as_str() {
        io::GWF => {
            let x = load_gwf(file, component)?;
            format!("graph with {} vertices and {} fins", x.num_vertices(), x.num_fins())
        }
        io::GOS => {
            let g = load_gos(file)?;
            format!("graph of spaces with {} rigid vertices and {} cylinders", g.rigid.len(), g.cylinders.len())
        }
        io::COVER => {
            io::parse_cover(&text).map_err(err)?;
            "covering map document".into()
        }
        io::RAWGOG => {
            let r = io::parse_rawgog(&text).map_err(err)?;
            format!("graph of cyclic groups with {} vertices", r.vertices.len())
        }
        io::WITNESS => {
            io::parse_witness(&text).map_err(err)?;
            "witness document".into()
        }
        io::WITNESS_FINS => {
            io::parse_witness_fins(&text).map_err(err)?;
            "witness document for graphs with fins".into()
        }
        other => return Err(malformed(format!("{}: unknown schema {other:?}", file.display()))),
    };
    Ok(Outcome::new(true, json!({"schema": "validate", "input": schema, "ok": true}), vec![summary]))
}

fn density(file: &Path, component: bool) -> anyhow::Result<Outcome> {
    let text = read(file)?;
    if io::schema_of(&text).map_err(malformed)?.as_deref() == Some(io::GOS) {
        let g = load_gos(file)?;
        let r = densities(&g).map_err(malformed)?;
        let summary = r.colour_density.iter().map(|(c, d)| format!("{c}: {d}")).collect();
        return Ok(Outcome::new(r.ok, json!({"schema": "density", "report": to_value(&r)}), summary));
    }
    let x = load_gwf(file, component)?;
    let d: BTreeMap<String, String> = x.densities().into_iter().map(|(c, r)| (c, r.to_string())).collect();
    let summary = d.iter().map(|(c, r)| format!("{c}: {r}")).collect();
    Ok(Outcome::new(true, json!({"schema": "density", "densities": d}), summary))
}

fn types_report(xs: &[GraphWithFins], mode: ColourMode) -> Outcome {
    let refs: Vec<&GraphWithFins> = xs.iter().collect();
    let (table, canon) = canonical_colours(&refs, mode);
    let inputs: Vec<Value> = xs
        .iter()
        .enumerate()
        .map(|(i, x)| {
            let vertex: BTreeMap<&str, u32> =
                (0..x.num_vertices()).map(|v| (x.graph().vertex_name(v), table.vertex[i][v])).collect();
            let fins: BTreeMap<String, &str> = x
                .oriented_fins()
                .map(|of| (format!("{}:{}", x.fin(of.fin).name, of.dir.suffix()), canon.label(i, of)))
                .collect();
            json!({"vertex_types": vertex, "fin_labels": fins})
        })
        .collect();
    let summary = vec![format!("stable after {} rounds", table.rounds)];
    let doc = json!({"schema": io::TYPES, "rounds": table.rounds, "inputs": inputs, "reversal": canon.reversal});
    Outcome::new(true, doc, summary)
}

fn invariants(file: &Path) -> anyhow::Result<Outcome> {
    let g = load_gos(file)?;
    let t = cylinder_numbers(&g);
    let numbers: Vec<Value> = t
        .counts
        .iter()
        .map(|((v, o, c), n)| json!({"cylinder": g.cylinders[*v].name, "orientation": o, "colour": c, "count": n}))
        .collect();
    let stretch: BTreeMap<&str, Value> =
        (0..g.cylinders.len()).map(|v| (g.cylinders[v].name.as_str(), to_value(&stretch_ratio(&g, v)))).collect();
    let reversal = colour_reversal(&g);
    let flip = reversal.as_ref().map(|r| check_flip_identity(&g, &t, r));
    let dens = densities(&g).map_err(malformed)?;
    let ok = dens.ok && flip != Some(false);
    let summary = vec![
        format!("{} cylinder numbers", numbers.len()),
        format!("orientation flip identity {}", if flip == Some(false) { "fails" } else { "holds" }),
        format!("densities {}", if dens.ok { "consistent" } else { "inconsistent" }),
    ];
    let doc = json!({
        "schema": "invariants",
        "cylinder_numbers": numbers,
        "stretch_ratios": stretch,
        "colour_reversal": reversal,
        "flip_identity": flip,
        "densities": to_value(&dens),
    });
    Ok(Outcome::new(ok, doc, summary))
}

fn rigidity(
    words: &[String],
    rank: usize,
    sample: Option<usize>,
    length: usize,
    seed: Option<u64>,
) -> anyhow::Result<Outcome> {
    if let Some(n) = sample {
        let seed = seed.ok_or_else(|| malformed("sampling needs an explicit --seed"))?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut hits = 0;
        for _ in 0..n {
            let w = random_reduced_word(rank, length, &mut rng);
            if rigidity_sufficient(rank, &[w]).map_err(malformed)? == Rigidity::Sufficient {
                hits += 1;
            }
        }
        let doc = json!({"schema": "rigidity", "rank": rank, "length": length, "seed": seed, "samples": n, "sufficient": hits});
        return Ok(Outcome::new(true, doc, vec![format!("{hits} of {n} sampled words pass the length-three test")]));
    }
    if words.is_empty() {
        return Err(malformed("give words to test or --sample"));
    }
    let ws = words.iter().map(|w| Word::parse(w)).collect::<Result<Vec<_>, _>>().map_err(malformed)?;
    let r = rigidity_sufficient(rank, &ws).map_err(malformed)?;
    let ok = r == Rigidity::Sufficient;
    let verdict = if ok { "sufficient" } else { "unknown" };
    Ok(Outcome::new(ok, json!({"schema": "rigidity", "rank": rank, "words": words, "verdict": verdict}), vec![verdict.into()]))
}

fn witness_summary(cover: &GraphOfSpaces, r: &comcover::pipeline::WitnessReport) -> Vec<String> {
    let mut out = vec![format!(
        "witness with {} rigid vertices, {} cylinders and {} edges",
        cover.rigid.len(),
        cover.cylinders.len(),
        cover.edges.len()
    )];
    if let [Some(a), Some(b)] = r.degrees {
        out.push(format!("degrees {a} and {b}"));
    }
    out.push(if r.ok { "verified".into() } else { format!("verification failed: {}", r.failures.join("; ")) });
    out
}

fn verify(file: &Path) -> anyhow::Result<Outcome> {
    let text = read(file)?;
    let err = |e: IoError| malformed(format!("{}: {e}", file.display()));
    match io::schema_of(&text).map_err(malformed)?.as_deref() {
        Some(io::WITNESS) => {
            let w = io::parse_witness(&text).map_err(err)?;
            let r = verify_witness(&w);
            Ok(Outcome::new(r.ok, json!({"schema": "verify-witness", "report": to_value(&r)}), witness_summary(&w.cover, &r)))
        }
        Some(io::WITNESS_FINS) => {
            let ([x1, x2], cover, [l1, l2]) = io::parse_witness_fins(&text).map_err(err)?;
            let r1 = verify_covering(&cover, &x1, &l1);
            let r2 = verify_covering(&cover, &x2, &l2);
            let eq = fin_equation(&x1, &x2, &cover, &l1, &l2);
            let ok = r1.ok && r2.ok && eq.ok;
            let summary = vec![
                format!("legs {} and {}", if r1.ok { "cover" } else { "fail" }, if r2.ok { "cover" } else { "fail" }),
                format!("fin equation {}", if eq.ok { "holds" } else { "fails" }),
            ];
            let doc = json!({"schema": "verify-witness", "legs": [to_value(&r1), to_value(&r2)], "fin_equation": to_value(&eq), "ok": ok});
            Ok(Outcome::new(ok, doc, summary))
        }
        other => Err(malformed(format!("{}: not a witness document ({other:?})", file.display()))),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let outcome = run(&cli).unwrap_or_else(|e| {
        let (code, kind) = match e.downcast_ref::<Refusal>() {
            Some(Refusal::Malformed(_)) => (2, "malformed_input"),
            Some(Refusal::NoMatching(_)) => (3, "no_matching"),
            Some(Refusal::Budget(_)) => (4, "budget_exhausted"),
            None => (1, "failure"),
        };
        eprintln!("comcover: {e:#}");
        Outcome { code, json: json!({"schema": "error", "kind": kind, "message": format!("{e:#}")}), summary: vec![format!("{kind}: {e:#}")] }
    });
    if cli.pretty {
        for line in &outcome.summary {
            println!("{line}");
        }
    } else {
        println!("{}", serde_json::to_string_pretty(&outcome.json).expect("json"));
    }
    ExitCode::from(outcome.code)
}
