//! NAH-graphs: hyperbolic orbifold vertex labels, cusp-to-cusp edges labelled by
//! orientation-reversing rational maps, the balanced and integral predicates, and
//! import from gluing manifests.

use std::collections::{BTreeMap, BTreeSet, VecDeque};
use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use num_traits::{One, Zero};
use serde::{Deserialize, Serialize};

use crate::catalog::{CuspSpec, OrbifoldCatalog};
use crate::error::{Error, Result};
use crate::linear::{conjugates_into, coset_canonical, Matrix2, Rational};
use crate::report::Report;

/// One undirected edge, stored with an explicit direction. The label maps the
/// tangent plane of the head cusp to that of the tail cusp; the reversed edge
/// carries the inverse label.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Edge {
    pub head: String,
    pub head_cusp: String,
    pub tail: String,
    pub tail_cusp: String,
    pub label: Matrix2,
}

impl Edge {
    pub fn new(head: &str, head_cusp: &str, tail: &str, tail_cusp: &str, label: Matrix2) -> Self {
        Edge {
            head: head.into(),
            head_cusp: head_cusp.into(),
            tail: tail.into(),
            tail_cusp: tail_cusp.into(),
            label,
        }
    }

    /// The same edge stored in the opposite direction.
    pub fn reversed(&self) -> Result<Edge> {
        Ok(Edge {
            head: self.tail.clone(),
            head_cusp: self.tail_cusp.clone(),
            tail: self.head.clone(),
            tail_cusp: self.head_cusp.clone(),
            label: self.label.inverse()?,
        })
    }

    pub fn is_loop(&self) -> bool {
        self.head == self.tail
    }

    /// A loop whose two ends sit at the same cusp.
    pub fn is_same_cusp_loop(&self) -> bool {
        self.is_loop() && self.head_cusp == self.tail_cusp
    }
}

/// An edge traversed forwards (`e`) or backwards (`~e`).
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct DirectedEdge {
    pub edge: String,
    pub reversed: bool,
}

impl DirectedEdge {
    pub fn forward(edge: impl Into<String>) -> Self {
        DirectedEdge { edge: edge.into(), reversed: false }
    }

    pub fn backward(edge: impl Into<String>) -> Self {
        DirectedEdge { edge: edge.into(), reversed: true }
    }

    pub fn rev(&self) -> Self {
        DirectedEdge { edge: self.edge.clone(), reversed: !self.reversed }
    }
}

impl fmt::Display for DirectedEdge {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.reversed {
            write!(f, "~{}", self.edge)
        } else {
            f.write_str(&self.edge)
        }
    }
}

impl FromStr for DirectedEdge {
    type Err = String;
    fn from_str(s: &str) -> std::result::Result<Self, String> {
        let (edge, reversed) = match s.strip_prefix('~') {
            Some(rest) => (rest, true),
            None => (s, false),
        };
        if edge.is_empty() || edge.starts_with('~') {
            return Err(format!("malformed directed edge {s:?}"));
        }
        Ok(DirectedEdge { edge: edge.to_string(), reversed })
    }
}

impl Serialize for DirectedEdge {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(&self.to_string())
    }
}

impl<'de> Deserialize<'de> for DirectedEdge {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        String::deserialize(d)?.parse().map_err(serde::de::Error::custom)
    }
}

#[derive(Clone, Debug)]
pub struct NahGraph {
    pub catalog: Arc<OrbifoldCatalog>,
    /// Vertex id to orbifold id.
    pub vertices: BTreeMap<String, String>,
    pub edges: BTreeMap<String, Edge>,
}

/// Graphs are equal when their vertices and edge records agree; the catalogs are
/// compared only if they are different allocations.
impl PartialEq for NahGraph {
    fn eq(&self, other: &Self) -> bool {
        self.vertices == other.vertices
            && self.edges == other.edges
            && (Arc::ptr_eq(&self.catalog, &other.catalog) || self.catalog == other.catalog)
    }
}

impl NahGraph {
    pub fn new(catalog: Arc<OrbifoldCatalog>) -> Self {
        NahGraph { catalog, vertices: BTreeMap::new(), edges: BTreeMap::new() }
    }

    pub fn add_vertex(&mut self, id: impl Into<String>, orbifold: impl Into<String>) {
        self.vertices.insert(id.into(), orbifold.into());
    }

    pub fn add_edge(&mut self, id: impl Into<String>, edge: Edge) {
        self.edges.insert(id.into(), edge);
    }

    pub fn edge(&self, id: &str) -> Result<&Edge> {
        self.edges.get(id).ok_or_else(|| Error::UnknownEdge(id.to_string()))
    }

    pub fn orbifold_of(&self, vertex: &str) -> Result<&str> {
        self.vertices
            .get(vertex)
            .map(String::as_str)
            .ok_or_else(|| Error::UnknownVertex(vertex.to_string()))
    }

    /// Both directions of every edge, forward first, in edge id order.
    pub fn directed_edges(&self) -> Vec<DirectedEdge> {
        self.edges
            .keys()
            .flat_map(|id| [DirectedEdge::forward(id.clone()), DirectedEdge::backward(id.clone())])
            .collect()
    }

    pub fn head(&self, d: &DirectedEdge) -> Result<&str> {
        let e = self.edge(&d.edge)?;
        Ok(if d.reversed { &e.tail } else { &e.head })
    }

    pub fn tail(&self, d: &DirectedEdge) -> Result<&str> {
        self.head(&d.rev())
    }

    pub fn head_cusp(&self, d: &DirectedEdge) -> Result<&str> {
        let e = self.edge(&d.edge)?;
        Ok(if d.reversed { &e.tail_cusp } else { &e.head_cusp })
    }

    pub fn tail_cusp(&self, d: &DirectedEdge) -> Result<&str> {
        self.head_cusp(&d.rev())
    }

    /// `l_e` for forward edges, `l_e^-1` for reversed ones.
    pub fn label(&self, d: &DirectedEdge) -> Result<Matrix2> {
        let e = self.edge(&d.edge)?;
        if d.reversed {
            e.label.inverse()
        } else {
            Ok(e.label.clone())
        }
    }

    pub fn cusp_spec(&self, vertex: &str, cusp: &str) -> Result<&CuspSpec> {
        self.catalog.cusp(self.orbifold_of(vertex)?, cusp)
    }

    pub fn head_spec(&self, d: &DirectedEdge) -> Result<&CuspSpec> {
        self.cusp_spec(self.head(d)?, self.head_cusp(d)?)
    }

    pub fn tail_spec(&self, d: &DirectedEdge) -> Result<&CuspSpec> {
        self.cusp_spec(self.tail(d)?, self.tail_cusp(d)?)
    }

    /// Directed edges leaving `vertex`, in edge id order.
    pub fn out_edges(&self, vertex: &str) -> Vec<DirectedEdge> {
        self.directed_edges()
            .into_iter()
            .filter(|d| self.head(d).is_ok_and(|h| h == vertex))
            .collect()
    }

    /// Directed edges leaving `vertex` at `cusp`. Two entries only for a loop
    /// using the cusp at both ends.
    pub fn edges_at(&self, vertex: &str, cusp: &str) -> Vec<DirectedEdge> {
        self.out_edges(vertex)
            .into_iter()
            .filter(|d| self.head_cusp(d).is_ok_and(|c| c == cusp))
            .collect()
    }

    /// The directed edge leaving `vertex` at `cusp`, if any. For a same-cusp loop
    /// the forward direction is returned.
    pub fn edge_at(&self, vertex: &str, cusp: &str) -> Option<DirectedEdge> {
        self.edges_at(vertex, cusp).into_iter().next()
    }

    pub fn neighbors(&self, vertex: &str) -> BTreeSet<String> {
        self.out_edges(vertex)
            .iter()
            .filter_map(|d| self.tail(d).ok().map(str::to_string))
            .collect()
    }

    pub fn is_connected(&self) -> bool {
        let Some(start) = self.vertices.keys().next() else {
            return false;
        };
        self.component_of(start).len() == self.vertices.len()
    }

    pub fn component_of(&self, start: &str) -> BTreeSet<String> {
        let mut adj: BTreeMap<&str, Vec<&str>> = BTreeMap::new();
        for e in self.edges.values() {
            adj.entry(&e.head).or_default().push(&e.tail);
            adj.entry(&e.tail).or_default().push(&e.head);
        }
        let mut seen = BTreeSet::new();
        let mut queue = VecDeque::from([start.to_string()]);
        seen.insert(start.to_string());
        while let Some(v) = queue.pop_front() {
            for w in adj.get(v.as_str()).into_iter().flatten() {
                if seen.insert(w.to_string()) {
                    queue.push_back(w.to_string());
                }
            }
        }
        seen
    }

    /// Every edge record stored in the opposite direction.
    pub fn with_edges_reversed(&self) -> Result<NahGraph> {
        let mut out = self.clone();
        for e in out.edges.values_mut() {
            *e = e.reversed()?;
        }
        Ok(out)
    }

    /// Same vertices and edges up to the stored direction of each edge record.
    pub fn same_up_to_orientation(&self, other: &NahGraph) -> bool {
        self.vertices == other.vertices
            && self.edges.len() == other.edges.len()
            && self.edges.iter().all(|(id, e)| match other.edges.get(id) {
                Some(o) => o == e || e.reversed().is_ok_and(|r| &r == o),
                None => false,
            })
    }

    /// Renames vertices; unmapped ids are kept.
    pub fn rename_vertices(&self, map: &BTreeMap<String, String>) -> NahGraph {
        let rn = |v: &String| map.get(v).cloned().unwrap_or_else(|| v.clone());
        NahGraph {
            catalog: self.catalog.clone(),
            vertices: self.vertices.iter().map(|(k, o)| (rn(k), o.clone())).collect(),
            edges: self
                .edges
                .iter()
                .map(|(id, e)| {
                    let mut e = e.clone();
                    e.head = rn(&e.head);
                    e.tail = rn(&e.tail);
                    (id.clone(), e)
                })
                .collect(),
        }
    }

    /// Renames edges; unmapped ids are kept.
    pub fn rename_edges(&self, map: &BTreeMap<String, String>) -> NahGraph {
        NahGraph {
            catalog: self.catalog.clone(),
            vertices: self.vertices.clone(),
            edges: self
                .edges
                .iter()
                .map(|(id, e)| (map.get(id).cloned().unwrap_or_else(|| id.clone()), e.clone()))
                .collect(),
        }
    }
}

/// Whether every cusp of every vertex must be used by an edge.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum CuspCoverage {
    /// Every cusp is hit by exactly one edge end (a same-cusp loop counts once).
    #[default]
    Strict,
    /// Unglued cusps are allowed; the edge-to-cusp map need only be injective.
    Injective,
}

pub fn validate(g: &NahGraph) -> Report {
    validate_with(g, CuspCoverage::Strict)
}

/// Every violated NAH-graph condition; condition names are `(1)`..`(6)`, plus
/// `structure`, `connected` and `surjective`.
pub fn validate_with(g: &NahGraph, coverage: CuspCoverage) -> Report {
    let mut report = Report::new();
    if g.vertices.is_empty() {
        report.push("graph", "structure", "no vertices");
        return report;
    }
    let mut structural = false;
    for (v, orb) in &g.vertices {
        if g.catalog.orbifold(orb).is_err() {
            report.push(format!("vertex {v}"), "structure", format!("unknown orbifold {orb}"));
            structural = true;
        }
    }
    for (id, e) in &g.edges {
        if id.starts_with('~') {
            report.push(format!("edge {id}"), "structure", "edge ids may not start with '~'");
        }
        for (v, c) in [(&e.head, &e.head_cusp), (&e.tail, &e.tail_cusp)] {
            if !g.vertices.contains_key(v) {
                report.push(format!("edge {id}"), "structure", format!("unknown vertex {v}"));
                structural = true;
            } else if g.cusp_spec(v, c).is_err() {
                report.push(format!("edge {id}"), "structure", format!("vertex {v} has no cusp {c}"));
                structural = true;
            }
        }
    }
    if structural {
        return report;
    }
    if !g.is_connected() {
        report.push("graph", "connected", "graph is not connected");
    }

    // (1) the edge-to-cusp map at each vertex
    let mut uses: BTreeMap<(&str, &str), Vec<&str>> = BTreeMap::new();
    for (id, e) in &g.edges {
        uses.entry((&e.head, &e.head_cusp)).or_default().push(id);
        if !e.is_same_cusp_loop() {
            uses.entry((&e.tail, &e.tail_cusp)).or_default().push(id);
        }
    }
    for ((v, c), ids) in &uses {
        if ids.len() > 1 {
            report.push(format!("vertex {v} cusp {c}"), "(1)", format!("used by several edge ends: {}", ids.join(", ")));
        }
    }
    if coverage == CuspCoverage::Strict {
        for (v, orb) in &g.vertices {
            let entry = g.catalog.orbifold(orb).expect("checked above");
            for c in &entry.cusps {
                if !uses.contains_key(&(v.as_str(), c.id.as_str())) {
                    report.push(format!("vertex {v} cusp {}", c.id), "surjective", "cusp is not glued to any edge");
                }
            }
        }
    }

    for (id, e) in &g.edges {
        let subject = format!("edge {id}");
        let hs = g.cusp_spec(&e.head, &e.head_cusp).expect("checked above");
        let ts = g.cusp_spec(&e.tail, &e.tail_cusp).expect("checked above");
        if hs.degree != ts.degree {
            report.push(&subject, "(2)", format!("cusp degrees {} and {} differ", hs.degree, ts.degree));
        }
        let det = e.label.det();
        if det >= Rational::zero() {
            report.push(&subject, "(3)", format!("label {} has determinant {} (must be negative)", e.label, det));
            continue;
        }
        if hs.degree == ts.degree {
            let fh = hs.symmetry();
            let ft = ts.symmetry();
            if !conjugates_into(&e.label, &fh, &ft).unwrap_or(false) {
                report.push(&subject, "(5)", format!("label {} does not conjugate the head symmetry group onto the tail one", e.label));
            }
            if e.is_same_cusp_loop() {
                let inv = e.label.inverse().expect("nonzero determinant");
                if coset_canonical(&e.label, &fh) != coset_canonical(&inv, &fh) {
                    report.push(&subject, "(4)", "a loop at a single cusp needs its label coset-equal to its inverse");
                }
            }
        }
    }

    let any_non_arithmetic = g
        .vertices
        .values()
        .any(|orb| g.catalog.orbifold(orb).is_ok_and(|o| !o.arithmetic));
    if !any_non_arithmetic {
        report.push("graph", "(6)", "every vertex label is arithmetic");
    }
    report
}

/// `delta_e`: minus the determinant of `l_e` measured in bases of the two cusp
/// lattices. For `Z^2` cusps this is `-det(l_e)`.
pub fn delta(g: &NahGraph, d: &DirectedEdge) -> Result<Rational> {
    let label = g.label(d)?;
    let head = g.head_spec(d)?;
    let tail = g.tail_spec(d)?;
    Ok(-label.det() * head.lattice.covolume() / tail.lattice.covolume())
}

/// Result of the balanced test.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Balance {
    pub balanced: bool,
    /// `m(tail e) = delta_e m(head e)`, with `m = 1` at the least vertex id.
    /// Present only when balanced.
    pub potential: Option<BTreeMap<String, Rational>>,
    /// A non-tree edge whose cycle product differs from 1, when unbalanced.
    pub witness: Option<(String, Rational)>,
}

/// Spanning-tree propagation of the potential plus a check on every other edge.
pub fn balanced(g: &NahGraph) -> Result<Balance> {
    let mut m: BTreeMap<String, Rational> = BTreeMap::new();
    let mut adjacency: BTreeMap<&str, Vec<DirectedEdge>> = BTreeMap::new();
    for d in g.directed_edges() {
        adjacency.entry(g.head(&d)?).or_default().push(d);
    }
    for root in g.vertices.keys() {
        if m.contains_key(root) {
            continue;
        }
        m.insert(root.clone(), Rational::one());
        let mut queue = VecDeque::from([root.clone()]);
        while let Some(v) = queue.pop_front() {
            let mv = m[&v].clone();
            for d in adjacency.get(v.as_str()).into_iter().flatten() {
                let w = g.tail(d)?;
                if !m.contains_key(w) {
                    m.insert(w.to_string(), delta(g, d)? * &mv);
                    queue.push_back(w.to_string());
                }
            }
        }
    }
    for (id, e) in &g.edges {
        let d = DirectedEdge::forward(id.clone());
        let expected = delta(g, &d)? * &m[&e.head];
        if expected != m[&e.tail] {
            let product = expected / &m[&e.tail];
            return Ok(Balance { balanced: false, potential: None, witness: Some((id.clone(), product)) });
        }
    }
    Ok(Balance { balanced: true, potential: Some(m), witness: None })
}

pub fn is_balanced(g: &NahGraph) -> Result<bool> {
    Ok(balanced(g)?.balanced)
}

/// Per edge, whether `l_e` maps the head cusp lattice onto the tail cusp lattice.
pub fn integral_witnesses(g: &NahGraph) -> Result<BTreeMap<String, bool>> {
    let mut out = BTreeMap::new();
    for (id, e) in &g.edges {
        let head = g.cusp_spec(&e.head, &e.head_cusp)?;
        let tail = g.cusp_spec(&e.tail, &e.tail_cusp)?;
        out.insert(id.clone(), head.lattice.image(&e.label)? == tail.lattice);
    }
    Ok(out)
}

pub fn is_integral(g: &NahGraph) -> Result<bool> {
    Ok(integral_witnesses(g)?.values().all(|&ok| ok))
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Piece {
    pub id: String,
    pub orbifold: String,
}

/// Glues cusp `cusp_a` of `piece_a` to cusp `cusp_b` of `piece_b`; `gluing` maps
/// the first cusp plane to the second.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Pairing {
    pub piece_a: String,
    pub cusp_a: String,
    pub piece_b: String,
    pub cusp_b: String,
    pub gluing: Matrix2,
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GluingManifest {
    pub pieces: Vec<Piece>,
    pub pairings: Vec<Pairing>,
}

/// The integral graph of a manifest: one vertex per piece, edge `g<i>` for pairing `i`.
pub fn from_manifest(m: &GluingManifest, catalog: Arc<OrbifoldCatalog>) -> Result<NahGraph> {
    let mut g = NahGraph::new(catalog);
    for p in &m.pieces {
        g.catalog.orbifold(&p.orbifold)?;
        g.add_vertex(p.id.clone(), p.orbifold.clone());
    }
    let mut paired: BTreeSet<(String, String)> = BTreeSet::new();
    for (i, p) in m.pairings.iter().enumerate() {
        let a = g.cusp_spec(&p.piece_a, &p.cusp_a)?.clone();
        let b = g.cusp_spec(&p.piece_b, &p.cusp_b)?.clone();
        for (piece, cusp) in [(&p.piece_a, &p.cusp_a), (&p.piece_b, &p.cusp_b)] {
            if !paired.insert((piece.clone(), cusp.clone())) {
                return Err(Error::DuplicatePairing { piece: piece.clone(), cusp: cusp.clone() });
            }
        }
        let integral = p.gluing.det() < Rational::zero() && a.lattice.image(&p.gluing).is_ok_and(|img| img == b.lattice);
        if !integral {
            return Err(Error::NonIntegralGluing(format!("#{i} {}:{} -> {}:{}", p.piece_a, p.cusp_a, p.piece_b, p.cusp_b)));
        }
        g.add_edge(format!("g{i}"), Edge::new(&p.piece_a, &p.cusp_a, &p.piece_b, &p.cusp_b, p.gluing.clone()));
    }
    for p in &m.pieces {
        let entry = g.catalog.orbifold(&p.orbifold)?;
        for c in &entry.cusps {
            if !paired.contains(&(p.id.clone(), c.id.clone())) {
                return Err(Error::UnpairedCusp { piece: p.id.clone(), cusp: c.id.clone() });
            }
        }
    }
    validate(&g).into_result("graph built from manifest")?;
    Ok(g)
}

/// The manifest of an integral graph, pairings in edge id order.
pub fn to_manifest(g: &NahGraph) -> Result<GluingManifest> {
    let witnesses = integral_witnesses(g)?;
    if let Some((id, _)) = witnesses.iter().find(|(_, ok)| !**ok) {
        return Err(Error::NonIntegralGluing(format!("edge {id}")));
    }
    Ok(GluingManifest {
        pieces: g
            .vertices
            .iter()
            .map(|(id, orbifold)| Piece { id: id.clone(), orbifold: orbifold.clone() })
            .collect(),
        pairings: g
            .edges
            .values()
            .map(|e| Pairing {
                piece_a: e.head.clone(),
                cusp_a: e.head_cusp.clone(),
                piece_b: e.tail.clone(),
                cusp_b: e.tail_cusp.clone(),
                gluing: e.label.clone(),
            })
            .collect(),
    })
}
