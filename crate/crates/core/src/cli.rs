//! The `qigraph` command line.
//!
//! Exit status: 0 success or true, 1 false, 2 input error, 3 internal error.

use std::collections::BTreeMap;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use clap::{Parser, Subcommand, ValueEnum};
use serde::Deserialize;
use serde_json::{json, Value};

use crate::catalog::{validate_catalog, OrbifoldCatalog};
use crate::cover::{covering_report, degree_refinement, find_common_cover_with, validate_typed, TypedGraph};
use crate::error::Error;
use crate::fixtures::{fixture_catalog, random_graph, random_h_graph, rng, GraphOptions, LabelMode};
use crate::graph::{balanced, from_manifest, integral_witnesses, validate};
use crate::hgraph::{find_h_isomorphism, h_canonical_moves, minimize_h, validate_h, verify_h_morphism};
use crate::io::{
    graph_to_doc, h_graph_to_doc, h_morphism_from_doc, h_morphism_to_doc, morphism_from_doc, morphism_to_doc, read_document, read_graph,
    read_h_graph, resolve_catalog, serialize, write_document, CatalogRef, Document, FormatError,
};
use crate::linear::{format_rational, Lattice2, Matrix2};
use crate::minimize::{bisimilar, minimize};
use crate::morphism::verify_morphism;
use crate::realize::realize_with;
use crate::report::Report;

#[derive(Parser, Debug)]
#[command(name = "qigraph", version, about = "NAH-graphs and H-graphs: validation, minimization, realization, common covers")]
struct Cli {
    /// Emit machine-readable JSON on stdout.
    #[arg(long, global = true)]
    json: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum Mode {
    Random,
    Balanced,
    Integral,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum GraphKind {
    Nah,
    H,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Validate any document (graph, H-graph, catalog, typed graph, manifest).
    Validate {
        file: PathBuf,
        /// Catalog for manifests.
        #[arg(long)]
        catalog: Option<PathBuf>,
    },
    /// Validate a catalog file.
    CatalogValidate { file: PathBuf },
    /// Test whether a graph is balanced; prints the potential.
    Balanced { graph: PathBuf },
    /// Test whether a graph is integral.
    Integral { graph: PathBuf },
    /// Minimal graph of the bisimilarity class.
    Minimize {
        graph: PathBuf,
        #[arg(short, long)]
        output: Option<PathBuf>,
        /// Write the morphism onto the minimal graph.
        #[arg(short, long)]
        morphism: Option<PathBuf>,
    },
    /// Test whether two graphs are isomorphic.
    Iso { first: PathBuf, second: PathBuf },
    /// Test whether two graphs are bisimilar.
    Bisimilar { first: PathBuf, second: PathBuf },
    /// Integral graph realizing a balanced graph.
    Realize {
        graph: PathBuf,
        /// JSON object {"assignments": {vertex: covering id}, "catalog": path or inline}.
        #[arg(long)]
        covers: Option<PathBuf>,
        /// Sublattice override EDGE=a,b,c,d (basis matrix, row-major).
        #[arg(long = "sublattice", value_name = "EDGE=BASIS")]
        sublattices: Vec<String>,
        #[arg(short, long)]
        output: Option<PathBuf>,
        #[arg(short = 'm', long)]
        manifest: Option<PathBuf>,
        /// Catalog fragment with the synthetic covers (default OUTPUT.fragment.json).
        #[arg(long)]
        fragment: Option<PathBuf>,
        /// Write the morphism onto the minimal graph.
        #[arg(long)]
        morphism: Option<PathBuf>,
    },
    /// Verify a morphism between two graphs or H-graphs.
    MorphismCheck { source: PathBuf, target: PathBuf, morphism: PathBuf },
    /// Canonical representative of an H-graph under the moves.
    Hnormalize {
        graph: PathBuf,
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// Minimal H-graph.
    Hminimize {
        graph: PathBuf,
        #[arg(short, long)]
        output: Option<PathBuf>,
        #[arg(short, long)]
        morphism: Option<PathBuf>,
    },
    /// Test whether two H-graphs are isomorphic up to the moves.
    Hiso { first: PathBuf, second: PathBuf },
    /// Bounded search for a common finite cover of two typed graphs.
    CommonCover {
        first: PathBuf,
        second: PathBuf,
        #[arg(long)]
        max_size: usize,
        /// Search even when the base quotient is not a tree.
        #[arg(long)]
        force: bool,
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// Random valid graph from the built-in fixture catalog.
    Generate {
        #[arg(long)]
        seed: u64,
        #[arg(long, default_value_t = 5)]
        vertices: usize,
        #[arg(long, default_value_t = 7)]
        edges: usize,
        #[arg(long, value_enum, default_value_t = Mode::Balanced)]
        mode: Mode,
        #[arg(long, value_enum, default_value_t = GraphKind::Nah)]
        kind: GraphKind,
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
}

/// Outcome of a command: the boolean verdict, text lines and a JSON body.
struct Outcome {
    verdict: bool,
    text: Vec<String>,
    json: Value,
    /// Document printed on stdout when no output file is given; the text then
    /// goes to stderr.
    document: Option<String>,
}

impl Outcome {
    fn new(verdict: bool, text: impl Into<String>, json: Value) -> Self {
        Outcome { verdict, text: vec![text.into()], json, document: None }
    }

    fn line(mut self, line: impl Into<String>) -> Self {
        self.text.push(line.into());
        self
    }
}

fn report_outcome(report: &Report, what: &str) -> Outcome {
    let mut out = Outcome::new(
        report.is_empty(),
        if report.is_empty() { format!("{what}: valid") } else { format!("{what}: {} violation(s)", report.len()) },
        json!({ "valid": report.is_empty(), "violations": report.violations }),
    );
    for v in &report.violations {
        out = out.line(format!("  {} [{}] {}", v.subject, v.condition, v.detail));
    }
    out
}

/// Input errors exit 2; arithmetic failures that valid input cannot cause exit 3.
fn exit_code(e: &Error) -> i32 {
    match e {
        Error::SingularMatrix(_) => 3,
        _ => 2,
    }
}

fn write_or_print(path: &Option<PathBuf>, doc: &Document, out: &mut Outcome) -> crate::Result<()> {
    match path {
        Some(p) => {
            write_document(p, doc)?;
            out.text.push(format!("wrote {}", p.display()));
        }
        None => out.document = Some(String::from_utf8(serialize(doc)).expect("JSON is UTF-8")),
    }
    Ok(())
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct CoversFile {
    assignments: BTreeMap<String, String>,
    #[serde(default)]
    catalog: Option<CatalogRef>,
}

fn read_covers(path: &Path) -> crate::Result<(BTreeMap<String, String>, Option<OrbifoldCatalog>)> {
    let bytes = std::fs::read(path).map_err(|e| FormatError::Io(format!("{}: {e}", path.display())))?;
    let mut de = serde_json::Deserializer::from_slice(&bytes);
    let doc: CoversFile = serde_path_to_error::deserialize(&mut de).map_err(|e| {
        let path = format!("{}: {}", path.display(), e.path());
        let inner = e.into_inner();
        if inner.is_syntax() || inner.is_eof() {
            FormatError::Syntax { line: inner.line(), column: inner.column(), message: format!("{path}: {inner}") }
        } else {
            FormatError::Schema { path, message: inner.to_string() }
        }
    })?;
    let extra = match &doc.catalog {
        Some(r) => Some(resolve_catalog(Some(r), path.parent().unwrap_or(Path::new("")))?),
        None => None,
    };
    Ok((doc.assignments, extra))
}

fn parse_sublattice(arg: &str) -> crate::Result<(String, Lattice2)> {
    let bad = |m: &str| FormatError::Schema { path: format!("--sublattice {arg}"), message: m.to_string() };
    let (edge, basis) = arg.split_once('=').ok_or_else(|| bad("expected EDGE=a,b,c,d"))?;
    let entries: Vec<String> = basis.split(',').map(|s| s.trim().to_string()).collect();
    if entries.len() != 4 {
        return Err(bad("basis needs 4 entries").into());
    }
    let m = Matrix2::from_strings(&entries).map_err(|e| bad(&e.to_string()))?;
    Ok((edge.to_string(), Lattice2::from_basis(&m)?))
}

fn execute(cli: &Cli) -> crate::Result<Outcome> {
    match &cli.command {
        Command::Validate { file, catalog } => match read_document(file)? {
            Document::NahGraph(_) => Ok(report_outcome(&validate(&read_graph(file)?), "graph")),
            Document::HGraph(_) => Ok(report_outcome(&validate_h(&read_h_graph(file)?), "H-graph")),
            Document::Catalog(c) => Ok(report_outcome(&validate_catalog(&c), "catalog")),
            Document::TypedGraph(t) => Ok(report_outcome(&validate_typed(&t), "typed graph")),
            Document::Morphism(_) => Ok(Outcome::new(true, "morphism: well-formed (check it with morphism-check)", json!({"valid": true}))),
            Document::Manifest(m) => {
                let cat = match catalog {
                    Some(p) => crate::io::read_catalog(p)?,
                    None => resolve_catalog(None, Path::new(""))?,
                };
                let g = from_manifest(&m, Arc::new(cat))?;
                Ok(Outcome::new(true, format!("manifest: valid, {} pieces", g.vertices.len()), json!({"valid": true})))
            }
        },
        Command::CatalogValidate { file } => {
            let cat = crate::io::read_catalog(file)?;
            Ok(report_outcome(&validate_catalog(&cat), "catalog"))
        }
        Command::Balanced { graph } => {
            let g = read_graph(graph)?;
            validate(&g).into_result("graph")?;
            let b = balanced(&g)?;
            match (&b.potential, &b.witness) {
                (Some(m), _) => {
                    let pot: BTreeMap<&String, String> = m.iter().map(|(v, r)| (v, format_rational(r))).collect();
                    let mut out = Outcome::new(true, "balanced", json!({"balanced": true, "potential": pot}));
                    for (v, r) in &pot {
                        out = out.line(format!("  m({v}) = {r}"));
                    }
                    Ok(out)
                }
                (None, Some((e, p))) => Ok(Outcome::new(
                    false,
                    format!("not balanced: the cycle closed by edge {e} has product {}", format_rational(p)),
                    json!({"balanced": false, "witness": {"edge": e, "product": format_rational(p)}}),
                )),
                _ => Ok(Outcome::new(false, "not balanced", json!({"balanced": false}))),
            }
        }
        Command::Integral { graph } => {
            let g = read_graph(graph)?;
            validate(&g).into_result("graph")?;
            let w = integral_witnesses(&g)?;
            let failing: Vec<&String> = w.iter().filter(|(_, ok)| !**ok).map(|(e, _)| e).collect();
            let verdict = failing.is_empty();
            let text = if verdict { "integral".to_string() } else { format!("not integral: edges {failing:?} are not lattice isomorphisms") };
            Ok(Outcome::new(verdict, text, json!({"integral": verdict, "failing_edges": failing})))
        }
        Command::Minimize { graph, output, morphism } => {
            let g = read_graph(graph)?;
            validate(&g).into_result("graph")?;
            let (q, m) = minimize(&g)?;
            let mut out = Outcome::new(
                true,
                format!("minimal graph: {} vertices, {} edges", q.vertices.len(), q.edges.len()),
                json!({"vertices": q.vertices.len(), "edges": q.edges.len()}),
            );
            write_or_print(output, &Document::NahGraph(graph_to_doc(&q)), &mut out)?;
            if let Some(p) = morphism {
                write_document(p, &Document::Morphism(morphism_to_doc(&m, &q.catalog)))?;
                out.text.push(format!("wrote {}", p.display()));
            }
            Ok(out)
        }
        Command::Iso { first, second } => {
            let (a, b) = (read_graph(first)?, read_graph(second)?);
            validate(&a).into_result("first graph")?;
            validate(&b).into_result("second graph")?;
            let iso = crate::canon::isomorphic(&a, &b)?;
            Ok(Outcome::new(iso, if iso { "isomorphic" } else { "not isomorphic" }, json!({"isomorphic": iso})))
        }
        Command::Bisimilar { first, second } => {
            let (a, b) = (read_graph(first)?, read_graph(second)?);
            validate(&a).into_result("first graph")?;
            validate(&b).into_result("second graph")?;
            let bis = bisimilar(&a, &b)?;
            Ok(Outcome::new(bis, if bis { "bisimilar" } else { "not bisimilar" }, json!({"bisimilar": bis})))
        }
        Command::Realize { graph, covers, sublattices, output, manifest, fragment, morphism } => {
            let mut g = read_graph(graph)?;
            validate(&g).into_result("graph")?;
            let mut assignments = BTreeMap::new();
            if let Some(p) = covers {
                let (a, extra) = read_covers(p)?;
                assignments = a;
                if let Some(extra) = extra {
                    let mut cat = (*g.catalog).clone();
                    cat.merge(&extra);
                    g.catalog = Arc::new(cat);
                }
            }
            let mut overrides = BTreeMap::new();
            for s in sublattices {
                let (e, l) = parse_sublattice(s)?;
                overrides.insert(e, l);
            }
            let r = realize_with(&g, &assignments, &overrides).map_err(|e| match e {
                Error::Unbalanced(m) => Error::Unbalanced(format!("{m}; realize requires a balanced graph")),
                other => other,
            })?;
            let mut out = Outcome::new(
                true,
                format!("realized by {} pieces and {} gluings (scale b = {})", r.graph.vertices.len(), r.graph.edges.len(), r.plan.scale),
                json!({"pieces": r.graph.vertices.len(), "gluings": r.graph.edges.len(), "plan": r.plan}),
            );
            for (v, p) in &r.plan.vertices {
                out = out.line(format!("  {v}: covering {} of degree {}, {} copies", p.covering, p.degree, p.copies));
            }
            if !r.fragment.orbifolds.is_empty() {
                out = out.line(format!("  {}", r.fragment.note.clone().unwrap_or_default()));
            }
            write_or_print(output, &Document::NahGraph(graph_to_doc(&r.graph)), &mut out)?;
            if let Some(p) = manifest {
                write_document(p, &Document::Manifest(r.manifest.clone()))?;
                out.text.push(format!("wrote {}", p.display()));
            }
            let sidecar = fragment.clone().or_else(|| output.as_ref().map(|o| o.with_extension("fragment.json")));
            if let Some(p) = sidecar {
                write_document(&p, &Document::Catalog(r.fragment.clone()))?;
                out.text.push(format!("wrote {}", p.display()));
            }
            if let Some(p) = morphism {
                write_document(p, &Document::Morphism(morphism_to_doc(&r.morphism, &r.graph.catalog)))?;
                out.text.push(format!("wrote {}", p.display()));
            }
            Ok(out)
        }
        Command::MorphismCheck { source, target, morphism } => {
            let doc = match read_document(morphism)? {
                Document::Morphism(m) => m,
                other => {
                    return Err(FormatError::Schema { path: format!("{}: kind", morphism.display()), message: format!("expected morphism, found {}", other.kind().name()) }.into())
                }
            };
            let is_h = matches!(read_document(source)?, Document::HGraph(_)) || matches!(read_document(target)?, Document::HGraph(_));
            let report = if is_h {
                let (a, b) = (read_h_graph(source)?, read_h_graph(target)?);
                let m = h_morphism_from_doc(&doc, a.catalog())?;
                verify_h_morphism(&a, &b, &m)
            } else {
                let (a, b) = (read_graph(source)?, read_graph(target)?);
                let m = morphism_from_doc(&doc, &a.catalog)?;
                verify_morphism(&a, &b, &m)
            };
            Ok(report_outcome(&report, "morphism"))
        }
        Command::Hnormalize { graph, output } => {
            let h = read_h_graph(graph)?;
            validate_h(&h).into_result("H-graph")?;
            let c = h_canonical_moves(&h)?;
            let mut out = Outcome::new(true, "canonical H-graph", json!({"seifert_vertices": c.seifert.len()}));
            write_or_print(output, &Document::HGraph(h_graph_to_doc(&c)), &mut out)?;
            Ok(out)
        }
        Command::Hminimize { graph, output, morphism } => {
            let h = read_h_graph(graph)?;
            let (q, m) = minimize_h(&h)?;
            let mut out = Outcome::new(
                true,
                format!("minimal H-graph: {} hyperbolic and {} Seifert vertices", q.hyperbolic.vertices.len(), q.seifert.len()),
                json!({"hyperbolic_vertices": q.hyperbolic.vertices.len(), "seifert_vertices": q.seifert.len()}),
            );
            write_or_print(output, &Document::HGraph(h_graph_to_doc(&q)), &mut out)?;
            if let Some(p) = morphism {
                write_document(p, &Document::Morphism(h_morphism_to_doc(&m, q.catalog())))?;
                out.text.push(format!("wrote {}", p.display()));
            }
            Ok(out)
        }
        Command::Hiso { first, second } => {
            let (a, b) = (read_h_graph(first)?, read_h_graph(second)?);
            validate_h(&a).into_result("first H-graph")?;
            validate_h(&b).into_result("second H-graph")?;
            let iso = find_h_isomorphism(&a, &b)?.is_some();
            Ok(Outcome::new(iso, if iso { "isomorphic" } else { "not isomorphic" }, json!({"isomorphic": iso})))
        }
        Command::CommonCover { first, second, max_size, force, output } => {
            let read = |p: &PathBuf| -> crate::Result<TypedGraph> {
                match read_document(p)? {
                    Document::TypedGraph(t) => Ok(t),
                    other => Err(FormatError::Schema { path: format!("{}: kind", p.display()), message: format!("expected typed_graph, found {}", other.kind().name()) }.into()),
                }
            };
            let (a, b) = (read(first)?, read(second)?);
            match find_common_cover_with(&a, &b, *max_size, *force) {
                Ok(Some(found)) => {
                    let sound = covering_report(&found.cover, &a, &found.first).is_empty() && covering_report(&found.cover, &b, &found.second).is_empty();
                    let n = found.cover.types.len();
                    let mut out = Outcome::new(
                        sound,
                        format!("common cover with {n} vertices (degrees {} and {})", n / a.types.len(), n / b.types.len()),
                        json!({
                            "found": true,
                            "vertices": n,
                            "first": {"vertex_map": found.first.vertex_map, "edge_map": found.first.edge_map},
                            "second": {"vertex_map": found.second.vertex_map, "edge_map": found.second.edge_map},
                        }),
                    );
                    write_or_print(output, &Document::TypedGraph(found.cover), &mut out)?;
                    Ok(out)
                }
                Ok(None) => Ok(Outcome::new(
                    false,
                    format!("no common cover with at most {max_size} vertices (bounded search, not a proof of nonexistence)"),
                    json!({"found": false, "max_size": max_size}),
                )),
                Err(Error::IncompatibleRefinement) => {
                    let (ra, rb) = (degree_refinement(&a), degree_refinement(&b));
                    Ok(Outcome::new(
                        false,
                        "degree refinements differ: the graphs have no common cover",
                        json!({"found": false, "incompatible": true, "first": ra.matrix, "second": rb.matrix}),
                    ))
                }
                Err(e) => Err(e),
            }
        }
        Command::Generate { seed, vertices, edges, mode, kind, output } => {
            let cat = Arc::new(fixture_catalog());
            let mode = match mode {
                Mode::Random => LabelMode::Random,
                Mode::Balanced => LabelMode::Balanced,
                Mode::Integral => LabelMode::Integral,
            };
            let opts = GraphOptions::new((*vertices).max(1), *edges, mode);
            let mut r = rng(*seed);
            let doc = match kind {
                GraphKind::Nah => Document::NahGraph(graph_to_doc(&random_graph(&mut r, &cat, &opts))),
                GraphKind::H => Document::HGraph(h_graph_to_doc(&random_h_graph(&mut r, &cat, &opts))),
            };
            let mut out = Outcome::new(true, format!("generated with seed {seed}"), json!({"seed": seed}));
            write_or_print(output, &doc, &mut out)?;
            Ok(out)
        }
    }
}

/// Runs the command line `args` (program name first), writing to `out` and `err`.
pub fn run_with(args: &[String], out: &mut dyn Write, err: &mut dyn Write) -> i32 {
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let text = e.render().to_string();
            let _ = if code == 0 { write!(out, "{text}") } else { write!(err, "{text}") };
            return code;
        }
    };
    let result = std::panic::catch_unwind(std::panic::AssertUnwindSafe(|| execute(&cli)));
    match result {
        Ok(Ok(outcome)) => {
            if cli.json {
                let mut body = outcome.json;
                if let Value::Object(map) = &mut body {
                    map.insert("result".into(), Value::Bool(outcome.verdict));
                }
                let _ = writeln!(out, "{}", serde_json::to_string_pretty(&body).expect("values serialize"));
            } else if let Some(doc) = &outcome.document {
                let _ = write!(out, "{doc}");
                for line in &outcome.text {
                    let _ = writeln!(err, "{line}");
                }
            } else {
                for line in &outcome.text {
                    let _ = writeln!(out, "{line}");
                }
            }
            if outcome.verdict {
                0
            } else {
                1
            }
        }
        Ok(Err(e)) => {
            let code = exit_code(&e);
            if cli.json {
                let _ = writeln!(out, "{}", serde_json::to_string_pretty(&json!({"error": e.to_string(), "exit": code})).expect("values serialize"));
            }
            let _ = writeln!(err, "error: {e}");
            code
        }
        Err(_) => {
            let _ = writeln!(err, "internal error");
            3
        }
    }
}

pub fn run(args: &[String]) -> i32 {
    run_with(args, &mut std::io::stdout(), &mut std::io::stderr())
}
