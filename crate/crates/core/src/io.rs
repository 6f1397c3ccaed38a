//! JSON documents: parsing with located diagnostics and deterministic serialization.
//!
//! Every file is an envelope `{"format_version": "1", "kind": ..., "payload": ...}`.
//! Serialization sorts object keys and pretty-prints, so equal objects give
//! byte-equal files.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use serde_json::Value;
use thiserror::Error;

use crate::catalog::{CoveringEntry, OrbifoldCatalog};
use crate::cover::TypedGraph;
use crate::error::{Error, Result};
use crate::graph::{DirectedEdge, Edge, GluingManifest, NahGraph};
use crate::hgraph::{HGraph, HMorphism, MixedEdge, SeifertEdge, SeifertLabel};
use crate::linear::Vector2;
use crate::morphism::GraphMorphism;

pub const FORMAT_VERSION: &str = "1";

/// Environment variable naming a default catalog file.
pub const CATALOG_ENV: &str = "QIGRAPH_CATALOG";

#[derive(Debug, Error)]
pub enum FormatError {
    #[error("syntax error at line {line}, column {column}: {message}")]
    Syntax { line: usize, column: usize, message: String },
    #[error("schema error at {path}: {message}")]
    Schema { path: String, message: String },
    #[error("unsupported format_version {0:?}")]
    Version(String),
    #[error("{0}")]
    Io(String),
}

impl FormatError {
    fn schema(path: impl Into<String>, message: impl Into<String>) -> Self {
        FormatError::Schema { path: path.into(), message: message.into() }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Kind {
    Catalog,
    NahGraph,
    HGraph,
    Morphism,
    Manifest,
    TypedGraph,
}

impl Kind {
    pub fn name(self) -> &'static str {
        match self {
            Kind::Catalog => "catalog",
            Kind::NahGraph => "nah_graph",
            Kind::HGraph => "h_graph",
            Kind::Morphism => "morphism",
            Kind::Manifest => "manifest",
            Kind::TypedGraph => "typed_graph",
        }
    }
}

/// Catalog of a graph file: a path (relative to the graph file) or inline.
#[derive(Clone, Debug, PartialEq)]
pub enum CatalogRef {
    Path(String),
    Inline(Box<OrbifoldCatalog>),
}

impl Serialize for CatalogRef {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        match self {
            CatalogRef::Path(p) => s.serialize_str(p),
            CatalogRef::Inline(c) => c.serialize(s),
        }
    }
}

impl<'de> Deserialize<'de> for CatalogRef {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        match Value::deserialize(d)? {
            Value::String(p) => Ok(CatalogRef::Path(p)),
            v @ Value::Object(_) => OrbifoldCatalog::deserialize(v).map(|c| CatalogRef::Inline(Box::new(c))).map_err(serde::de::Error::custom),
            _ => Err(serde::de::Error::custom("catalog must be a path string or an inline catalog object")),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GraphDoc {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub catalog: Option<CatalogRef>,
    pub vertices: BTreeMap<String, String>,
    pub edges: BTreeMap<String, Edge>,
}

/// Hyperbolic-to-Seifert edge without its slope (slopes are listed separately).
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MixedEdgeDoc {
    pub hyperbolic: String,
    pub cusp: String,
    pub seifert: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HGraphDoc {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub catalog: Option<CatalogRef>,
    #[serde(default)]
    pub vertices: BTreeMap<String, String>,
    #[serde(default)]
    pub edges: BTreeMap<String, Edge>,
    #[serde(default)]
    pub seifert_vertices: BTreeMap<String, SeifertLabel>,
    #[serde(default)]
    pub mixed_edges: BTreeMap<String, MixedEdgeDoc>,
    #[serde(default)]
    pub seifert_edges: BTreeMap<String, SeifertEdge>,
    #[serde(default)]
    pub slopes: BTreeMap<String, Vector2>,
    #[serde(default)]
    pub signs: BTreeMap<String, i8>,
}

/// A covering given by catalog id or spelled out.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum CoveringRef {
    Id(String),
    Inline(CoveringEntry),
}

/// NAH- or H-graph morphism. Seifert vertices have no covering.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MorphismDoc {
    pub vertex_map: BTreeMap<String, String>,
    pub edge_map: BTreeMap<String, DirectedEdge>,
    pub vertex_coverings: BTreeMap<String, CoveringRef>,
}

#[derive(Clone, Debug, PartialEq)]
pub enum Document {
    Catalog(OrbifoldCatalog),
    NahGraph(GraphDoc),
    HGraph(HGraphDoc),
    Morphism(MorphismDoc),
    Manifest(GluingManifest),
    TypedGraph(TypedGraph),
}

impl Document {
    pub fn kind(&self) -> Kind {
        match self {
            Document::Catalog(_) => Kind::Catalog,
            Document::NahGraph(_) => Kind::NahGraph,
            Document::HGraph(_) => Kind::HGraph,
            Document::Morphism(_) => Kind::Morphism,
            Document::Manifest(_) => Kind::Manifest,
            Document::TypedGraph(_) => Kind::TypedGraph,
        }
    }
}

fn typed<T: DeserializeOwned>(payload: Value) -> std::result::Result<T, FormatError> {
    serde_path_to_error::deserialize(payload).map_err(|e| {
        let path = e.path().to_string();
        let path = if path == "." { "payload".to_string() } else { format!("payload.{path}") };
        FormatError::schema(path, e.into_inner().to_string())
    })
}

/// Parses an envelope document.
pub fn parse(bytes: &[u8]) -> std::result::Result<Document, FormatError> {
    let text = std::str::from_utf8(bytes).map_err(|e| {
        let before = &bytes[..e.valid_up_to()];
        let line = before.iter().filter(|&&b| b == b'\n').count() + 1;
        let column = before.iter().rev().take_while(|&&b| b != b'\n').count() + 1;
        FormatError::Syntax { line, column, message: "invalid UTF-8".into() }
    })?;
    let value: Value = serde_json::from_str(text)
        .map_err(|e| FormatError::Syntax { line: e.line(), column: e.column(), message: e.to_string() })?;
    let Value::Object(mut top) = value else {
        return Err(FormatError::schema("$", "document must be a JSON object"));
    };
    for key in top.keys() {
        if !["format_version", "kind", "payload"].contains(&key.as_str()) {
            return Err(FormatError::schema(key.clone(), "unknown field"));
        }
    }
    match top.remove("format_version") {
        Some(Value::String(v)) if v == FORMAT_VERSION => {}
        Some(Value::String(v)) => return Err(FormatError::Version(v)),
        Some(other) => return Err(FormatError::Version(other.to_string())),
        None => return Err(FormatError::schema("format_version", "missing field")),
    }
    let kind: Kind = match top.remove("kind") {
        Some(k) => serde_json::from_value(k).map_err(|e| FormatError::schema("kind", e.to_string()))?,
        None => return Err(FormatError::schema("kind", "missing field")),
    };
    let payload = top.remove("payload").ok_or_else(|| FormatError::schema("payload", "missing field"))?;
    Ok(match kind {
        Kind::Catalog => Document::Catalog(typed(payload)?),
        Kind::NahGraph => Document::NahGraph(typed(payload)?),
        Kind::HGraph => Document::HGraph(typed(payload)?),
        Kind::Morphism => Document::Morphism(typed(payload)?),
        Kind::Manifest => Document::Manifest(typed(payload)?),
        Kind::TypedGraph => Document::TypedGraph(typed(payload)?),
    })
}

/// Canonical bytes: sorted keys, two-space indentation, trailing newline.
pub fn serialize(doc: &Document) -> Vec<u8> {
    let payload = match doc {
        Document::Catalog(x) => serde_json::to_value(x),
        Document::NahGraph(x) => serde_json::to_value(x),
        Document::HGraph(x) => serde_json::to_value(x),
        Document::Morphism(x) => serde_json::to_value(x),
        Document::Manifest(x) => serde_json::to_value(x),
        Document::TypedGraph(x) => serde_json::to_value(x),
    }
    .expect("documents serialize to JSON");
    let envelope = serde_json::json!({
        "format_version": FORMAT_VERSION,
        "kind": doc.kind().name(),
        "payload": payload,
    });
    let mut out = serde_json::to_vec_pretty(&envelope).expect("values serialize");
    out.push(b'\n');
    out
}

pub fn read_document(path: &Path) -> Result<Document> {
    let bytes = std::fs::read(path).map_err(|e| FormatError::Io(format!("{}: {e}", path.display())))?;
    parse(&bytes).map_err(|e| match e {
        FormatError::Io(m) => FormatError::Io(m),
        FormatError::Syntax { line, column, message } => {
            FormatError::Syntax { line, column, message: format!("{}: {message}", path.display()) }
        }
        FormatError::Schema { path: p, message } => FormatError::Schema { path: format!("{}: {p}", path.display()), message },
        FormatError::Version(v) => FormatError::Version(v),
    }).map_err(Error::from)
}

pub fn write_document(path: &Path, doc: &Document) -> Result<()> {
    std::fs::write(path, serialize(doc)).map_err(|e| FormatError::Io(format!("{}: {e}", path.display())).into())
}

fn wrong_kind(path: &Path, want: Kind, got: Kind) -> Error {
    FormatError::schema(format!("{}: kind", path.display()), format!("expected {}, found {}", want.name(), got.name())).into()
}

pub fn read_catalog(path: &Path) -> Result<OrbifoldCatalog> {
    match read_document(path)? {
        Document::Catalog(c) => Ok(c),
        other => Err(wrong_kind(path, Kind::Catalog, other.kind())),
    }
}

/// The catalog named by `r` (paths relative to `base_dir`), else by `QIGRAPH_CATALOG`.
pub fn resolve_catalog(r: Option<&CatalogRef>, base_dir: &Path) -> Result<OrbifoldCatalog> {
    match r {
        Some(CatalogRef::Inline(c)) => Ok((**c).clone()),
        Some(CatalogRef::Path(p)) => read_catalog(&base_dir.join(p)),
        None => match std::env::var_os(CATALOG_ENV) {
            Some(p) => read_catalog(&PathBuf::from(p)),
            None => Err(FormatError::schema("payload.catalog", format!("no catalog given and {CATALOG_ENV} is unset")).into()),
        },
    }
}

fn parent_dir(path: &Path) -> PathBuf {
    path.parent().map(Path::to_path_buf).unwrap_or_default()
}

pub fn graph_from_doc(doc: &GraphDoc, catalog: Arc<OrbifoldCatalog>) -> NahGraph {
    NahGraph { catalog, vertices: doc.vertices.clone(), edges: doc.edges.clone() }
}

/// Graph document with the catalog inlined.
pub fn graph_to_doc(g: &NahGraph) -> GraphDoc {
    GraphDoc {
        catalog: Some(CatalogRef::Inline(Box::new((*g.catalog).clone()))),
        vertices: g.vertices.clone(),
        edges: g.edges.clone(),
    }
}

pub fn read_graph(path: &Path) -> Result<NahGraph> {
    match read_document(path)? {
        Document::NahGraph(doc) => {
            let cat = resolve_catalog(doc.catalog.as_ref(), &parent_dir(path))?;
            Ok(graph_from_doc(&doc, Arc::new(cat)))
        }
        other => Err(wrong_kind(path, Kind::NahGraph, other.kind())),
    }
}

pub fn h_graph_from_doc(doc: &HGraphDoc, catalog: Arc<OrbifoldCatalog>) -> Result<HGraph> {
    let mut h = HGraph::from_nah(NahGraph { catalog, vertices: doc.vertices.clone(), edges: doc.edges.clone() });
    h.seifert = doc.seifert_vertices.clone();
    for (id, e) in &doc.mixed_edges {
        let slope = doc
            .slopes
            .get(id)
            .cloned()
            .ok_or_else(|| FormatError::schema(format!("payload.slopes.{id}"), "mixed edge has no slope"))?;
        h.mixed.insert(id.clone(), MixedEdge { hyperbolic: e.hyperbolic.clone(), cusp: e.cusp.clone(), seifert: e.seifert.clone(), slope });
    }
    if let Some(id) = doc.slopes.keys().find(|id| !doc.mixed_edges.contains_key(*id)) {
        return Err(FormatError::schema(format!("payload.slopes.{id}"), "slope on an edge that is not a mixed edge").into());
    }
    h.seifert_edges = doc.seifert_edges.clone();
    h.signs = doc.signs.clone();
    Ok(h)
}

pub fn h_graph_to_doc(h: &HGraph) -> HGraphDoc {
    HGraphDoc {
        catalog: Some(CatalogRef::Inline(Box::new((**h.catalog()).clone()))),
        vertices: h.hyperbolic.vertices.clone(),
        edges: h.hyperbolic.edges.clone(),
        seifert_vertices: h.seifert.clone(),
        mixed_edges: h
            .mixed
            .iter()
            .map(|(id, e)| (id.clone(), MixedEdgeDoc { hyperbolic: e.hyperbolic.clone(), cusp: e.cusp.clone(), seifert: e.seifert.clone() }))
            .collect(),
        seifert_edges: h.seifert_edges.clone(),
        slopes: h.mixed.iter().map(|(id, e)| (id.clone(), e.slope.clone())).collect(),
        signs: h.signs.clone(),
    }
}

/// Reads an H-graph; a plain NAH-graph file is accepted as an H-graph without
/// Seifert vertices.
pub fn read_h_graph(path: &Path) -> Result<HGraph> {
    match read_document(path)? {
        Document::HGraph(doc) => {
            let cat = resolve_catalog(doc.catalog.as_ref(), &parent_dir(path))?;
            h_graph_from_doc(&doc, Arc::new(cat))
        }
        Document::NahGraph(doc) => {
            let cat = resolve_catalog(doc.catalog.as_ref(), &parent_dir(path))?;
            Ok(HGraph::from_nah(graph_from_doc(&doc, Arc::new(cat))))
        }
        other => Err(wrong_kind(path, Kind::HGraph, other.kind())),
    }
}

fn resolve_coverings(doc: &MorphismDoc, catalog: &OrbifoldCatalog) -> Result<BTreeMap<String, CoveringEntry>> {
    doc.vertex_coverings
        .iter()
        .map(|(v, c)| {
            let entry = match c {
                CoveringRef::Id(id) => catalog.covering(id)?,
                CoveringRef::Inline(e) => e.clone(),
            };
            Ok((v.clone(), entry))
        })
        .collect()
}

pub fn morphism_from_doc(doc: &MorphismDoc, catalog: &OrbifoldCatalog) -> Result<GraphMorphism> {
    Ok(GraphMorphism {
        vertex_map: doc.vertex_map.clone(),
        edge_map: doc.edge_map.clone(),
        vertex_coverings: resolve_coverings(doc, catalog)?,
    })
}

pub fn h_morphism_from_doc(doc: &MorphismDoc, catalog: &OrbifoldCatalog) -> Result<HMorphism> {
    Ok(HMorphism {
        vertex_map: doc.vertex_map.clone(),
        edge_map: doc.edge_map.clone(),
        vertex_coverings: resolve_coverings(doc, catalog)?,
    })
}

/// Coverings are written by id when the catalog declares exactly that entry.
fn covering_refs(coverings: &BTreeMap<String, CoveringEntry>, catalog: &OrbifoldCatalog) -> BTreeMap<String, CoveringRef> {
    coverings
        .iter()
        .map(|(v, c)| {
            let r = match catalog.covering(&c.id) {
                Ok(declared) if declared == *c => CoveringRef::Id(c.id.clone()),
                _ => CoveringRef::Inline(c.clone()),
            };
            (v.clone(), r)
        })
        .collect()
}

pub fn morphism_to_doc(m: &GraphMorphism, catalog: &OrbifoldCatalog) -> MorphismDoc {
    MorphismDoc { vertex_map: m.vertex_map.clone(), edge_map: m.edge_map.clone(), vertex_coverings: covering_refs(&m.vertex_coverings, catalog) }
}

pub fn h_morphism_to_doc(m: &HMorphism, catalog: &OrbifoldCatalog) -> MorphismDoc {
    MorphismDoc { vertex_map: m.vertex_map.clone(), edge_map: m.edge_map.clone(), vertex_coverings: covering_refs(&m.vertex_coverings, catalog) }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures::{fixture_catalog, random_graph, rng, GraphOptions, LabelMode};

    fn sample() -> Document {
        let cat = Arc::new(fixture_catalog());
        let g = random_graph(&mut rng(3), &cat, &GraphOptions::new(4, 5, LabelMode::Balanced));
        Document::NahGraph(graph_to_doc(&g))
    }

    #[test]
    fn round_trip_is_byte_identical() {
        let doc = sample();
        let bytes = serialize(&doc);
        let back = parse(&bytes).unwrap();
        assert_eq!(back, doc);
        assert_eq!(serialize(&back), bytes);
    }

    #[test]
    fn errors_are_located() {
        let bytes = String::from_utf8(serialize(&sample())).unwrap();
        match parse(bytes.replacen("\"kind\"", "\"kind\" x", 1).as_bytes()) {
            Err(FormatError::Syntax { line, .. }) => assert!(line > 1),
            other => panic!("{other:?}"),
        }
        match parse(bytes.replacen("\"format_version\": \"1\"", "\"format_version\": \"9\"", 1).as_bytes()) {
            Err(FormatError::Version(v)) => assert_eq!(v, "9"),
            other => panic!("{other:?}"),
        }
        let doc = r#"{"format_version":"1","kind":"nah_graph","payload":{"vertices":{"a":"N1"},
            "edges":{"e":{"head":"a","head_cusp":"c0","tail":"a","tail_cusp":"c0","label":["2/4","0","0","-1"]}}}}"#;
        match parse(doc.as_bytes()) {
            Err(FormatError::Schema { path, .. }) => assert_eq!(path, "payload.edges.e.label"),
            other => panic!("{other:?}"),
        }
        let doc = r#"{"format_version":"1","kind":"nah_graph","payload":{"vertices":{},"edges":{},"extra":1}}"#;
        assert!(matches!(parse(doc.as_bytes()), Err(FormatError::Schema { .. })));
    }
}
