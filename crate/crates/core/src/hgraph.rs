//! H-graphs: NAH-graphs with Seifert vertices attached.
//!
//! Seifert vertices carry a colour and a fibre type. Edges from hyperbolic to
//! Seifert vertices carry a slope in the hyperbolic cusp plane; edges between
//! fibre-orientable ("o") pieces, or from an o piece to a hyperbolic piece, carry
//! a sign. Slopes and signs are only meaningful up to three moves: flipping all
//! signs at an o vertex, negating a slope together with its sign, and scaling all
//! slopes at a Seifert vertex.

use std::collections::{BTreeMap, BTreeSet};
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::canon::ColoredGraph;
use crate::catalog::{identity_covering, minimal_quotient_of, CoveringEntry, OrbifoldCatalog};
use crate::error::{Error, Result};
use crate::graph::{validate_with, CuspCoverage, DirectedEdge, Edge, NahGraph};
use crate::linear::{coset_canonical, Matrix2, Rational, Vector2};
use crate::minimize::candidate_list;
use crate::morphism::{pushforward_edge_label, verify_morphism, GraphMorphism};
use crate::report::Report;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Color {
    Black,
    White,
}

/// Whether the Seifert fibres can be oriented consistently.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum FiberType {
    #[serde(rename = "o")]
    O,
    #[serde(rename = "n")]
    N,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SeifertLabel {
    pub color: Color,
    pub fiber_type: FiberType,
}

impl SeifertLabel {
    pub fn new(color: Color, fiber_type: FiberType) -> Self {
        SeifertLabel { color, fiber_type }
    }

    fn code(&self) -> String {
        let c = match self.color {
            Color::Black => "black",
            Color::White => "white",
        };
        let t = match self.fiber_type {
            FiberType::O => "o",
            FiberType::N => "n",
        };
        format!("{c}:{t}")
    }
}

/// Edge from cusp `cusp` of a hyperbolic vertex to a Seifert vertex.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MixedEdge {
    pub hyperbolic: String,
    pub cusp: String,
    pub seifert: String,
    pub slope: Vector2,
}

/// Edge between two Seifert vertices; `symmetric` when its group is `{1, -1}`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SeifertEdge {
    pub a: String,
    pub b: String,
    #[serde(default, skip_serializing_if = "std::ops::Not::not")]
    pub symmetric: bool,
}

#[derive(Clone, Debug, PartialEq)]
pub struct HGraph {
    /// Hyperbolic vertices and the edges between them.
    pub hyperbolic: NahGraph,
    pub seifert: BTreeMap<String, SeifertLabel>,
    pub mixed: BTreeMap<String, MixedEdge>,
    pub seifert_edges: BTreeMap<String, SeifertEdge>,
    /// `+1` or `-1` on every sign-carrying edge.
    pub signs: BTreeMap<String, i8>,
}

impl HGraph {
    pub fn new(catalog: Arc<OrbifoldCatalog>) -> Self {
        HGraph::from_nah(NahGraph::new(catalog))
    }

    pub fn from_nah(g: NahGraph) -> Self {
        HGraph {
            hyperbolic: g,
            seifert: BTreeMap::new(),
            mixed: BTreeMap::new(),
            seifert_edges: BTreeMap::new(),
            signs: BTreeMap::new(),
        }
    }

    pub fn catalog(&self) -> &Arc<OrbifoldCatalog> {
        &self.hyperbolic.catalog
    }

    pub fn is_hyperbolic(&self, v: &str) -> bool {
        self.hyperbolic.vertices.contains_key(v)
    }

    fn is_o(&self, v: &str) -> bool {
        self.seifert.get(v).is_some_and(|l| l.fiber_type == FiberType::O)
    }

    pub fn vertex_ids(&self) -> BTreeSet<String> {
        self.hyperbolic.vertices.keys().chain(self.seifert.keys()).cloned().collect()
    }

    /// Whether edge `id` must carry a sign.
    pub fn carries_sign(&self, id: &str) -> bool {
        if let Some(e) = self.mixed.get(id) {
            return self.is_o(&e.seifert);
        }
        if let Some(e) = self.seifert_edges.get(id) {
            return self.is_o(&e.a) && self.is_o(&e.b);
        }
        false
    }

    /// `true` for `-1`.
    fn sign_bit(&self, id: &str) -> bool {
        self.signs.get(id).is_some_and(|&s| s < 0)
    }

    /// Endpoints of any edge, in stored orientation.
    pub fn endpoints(&self, id: &str) -> Option<(&str, &str)> {
        if let Some(e) = self.hyperbolic.edges.get(id) {
            return Some((&e.head, &e.tail));
        }
        if let Some(e) = self.mixed.get(id) {
            return Some((&e.hyperbolic, &e.seifert));
        }
        self.seifert_edges.get(id).map(|e| (e.a.as_str(), e.b.as_str()))
    }

    pub fn edge_ids(&self) -> BTreeSet<String> {
        self.hyperbolic
            .edges
            .keys()
            .chain(self.mixed.keys())
            .chain(self.seifert_edges.keys())
            .cloned()
            .collect()
    }

    /// Directed edges leaving `v` (loops contribute both directions).
    pub fn out_ends(&self, v: &str) -> Vec<DirectedEdge> {
        let mut out = Vec::new();
        for id in self.edge_ids() {
            let (a, b) = self.endpoints(&id).expect("listed edge");
            if a == v {
                out.push(DirectedEdge::forward(id.clone()));
            }
            if b == v {
                out.push(DirectedEdge::backward(id.clone()));
            }
        }
        out
    }

    /// Terminal vertex of a directed edge.
    pub fn end_of(&self, d: &DirectedEdge) -> Option<&str> {
        self.endpoints(&d.edge).map(|(a, b)| if d.reversed { a } else { b })
    }

    pub fn start_of(&self, d: &DirectedEdge) -> Option<&str> {
        self.endpoints(&d.edge).map(|(a, b)| if d.reversed { b } else { a })
    }

    pub fn is_connected(&self) -> bool {
        let all = self.vertex_ids();
        let Some(start) = all.iter().next() else { return true };
        let mut seen = BTreeSet::from([start.clone()]);
        let mut stack = vec![start.clone()];
        while let Some(v) = stack.pop() {
            for d in self.out_ends(&v) {
                let w = self.end_of(&d).expect("listed edge").to_string();
                if seen.insert(w.clone()) {
                    stack.push(w);
                }
            }
        }
        seen.len() == all.len()
    }
}

/// Every violated H-graph condition. Condition names: `structure`, `connected`,
/// `(2)` (hyperbolic part), `(4)` (edge groups at Seifert vertices), `(5)`
/// (slopes) and `(6)` (sign placement).
pub fn validate_h(h: &HGraph) -> Report {
    let mut report = Report::new();
    if h.hyperbolic.vertices.is_empty() && h.seifert.is_empty() {
        report.push("graph", "structure", "no vertices");
        return report;
    }
    for v in h.seifert.keys() {
        if h.is_hyperbolic(v) {
            report.push(format!("vertex {v}"), "structure", "both hyperbolic and Seifert");
        }
    }
    let mut ids = BTreeSet::new();
    for id in h.hyperbolic.edges.keys().chain(h.mixed.keys()).chain(h.seifert_edges.keys()) {
        if !ids.insert(id) {
            report.push(format!("edge {id}"), "structure", "edge id used twice");
        }
    }
    for (id, e) in &h.mixed {
        if !h.is_hyperbolic(&e.hyperbolic) || !h.seifert.contains_key(&e.seifert) {
            report.push(format!("edge {id}"), "structure", "must join a hyperbolic vertex to a Seifert vertex");
        } else if h.hyperbolic.cusp_spec(&e.hyperbolic, &e.cusp).is_err() {
            report.push(format!("edge {id}"), "structure", format!("vertex {} has no cusp {}", e.hyperbolic, e.cusp));
        }
    }
    for (id, e) in &h.seifert_edges {
        if !h.seifert.contains_key(&e.a) || !h.seifert.contains_key(&e.b) {
            report.push(format!("edge {id}"), "structure", "must join two Seifert vertices");
        }
    }
    for (id, s) in &h.signs {
        if *s != 1 && *s != -1 {
            report.push(format!("edge {id}"), "structure", format!("sign {s} is not +1 or -1"));
        }
    }
    if !report.is_empty() {
        return report;
    }
    if !h.is_connected() {
        report.push("graph", "connected", "graph is not connected");
    }

    // (2): every hyperbolic component is an NAH-graph once mixed edges are counted
    let mut seen = BTreeSet::new();
    for v in h.hyperbolic.vertices.keys() {
        if seen.contains(v) {
            continue;
        }
        let comp = h.hyperbolic.component_of(v);
        seen.extend(comp.iter().cloned());
        let mut sub = NahGraph::new(h.catalog().clone());
        for u in &comp {
            sub.add_vertex(u.clone(), h.hyperbolic.vertices[u].clone());
        }
        for (id, e) in &h.hyperbolic.edges {
            if comp.contains(&e.head) {
                sub.add_edge(id.clone(), e.clone());
            }
        }
        for viol in validate_with(&sub, CuspCoverage::Injective).violations {
            if viol.condition != "connected" {
                report.push(viol.subject, "(2)", format!("{}: {}", viol.condition, viol.detail));
            }
        }
    }
    let mut used: BTreeMap<(String, String), usize> = BTreeMap::new();
    for e in h.hyperbolic.edges.values() {
        *used.entry((e.head.clone(), e.head_cusp.clone())).or_default() += 1;
        if !e.is_same_cusp_loop() {
            *used.entry((e.tail.clone(), e.tail_cusp.clone())).or_default() += 1;
        }
    }
    for e in h.mixed.values() {
        *used.entry((e.hyperbolic.clone(), e.cusp.clone())).or_default() += 1;
    }
    for (v, orb) in &h.hyperbolic.vertices {
        if let Ok(entry) = h.catalog().orbifold(orb) {
            for c in &entry.cusps {
                match used.get(&(v.clone(), c.id.clone())).copied().unwrap_or(0) {
                    0 => report.push(format!("vertex {v} cusp {}", c.id), "(2)", "cusp carries no edge"),
                    1 => {}
                    _ => report.push(format!("vertex {v} cusp {}", c.id), "(2)", "cusp carries several edges"),
                }
            }
        }
    }

    for (id, e) in &h.mixed {
        let subject = format!("edge {id}");
        let spec = h.hyperbolic.cusp_spec(&e.hyperbolic, &e.cusp).expect("checked above");
        match spec.degree {
            1 => {}
            2 if !h.is_o(&e.seifert) => {}
            2 => report.push(&subject, "(4)", "group {1,-1} at an edge into a type o Seifert vertex"),
            k => report.push(&subject, "(4)", format!("cusp group of order {k} at a Seifert edge")),
        }
        if e.slope.is_zero() {
            report.push(&subject, "(5)", "slope is zero");
        }
    }
    for (id, e) in &h.seifert_edges {
        if e.symmetric && (h.is_o(&e.a) || h.is_o(&e.b)) {
            report.push(format!("edge {id}"), "(4)", "group {1,-1} at an edge into a type o Seifert vertex");
        }
    }
    for id in h.edge_ids() {
        let want = h.carries_sign(&id);
        let has = h.signs.contains_key(&id);
        if want && !has {
            report.push(format!("edge {id}"), "(6)", "sign label missing");
        } else if has && !want {
            report.push(format!("edge {id}"), "(6)", "sign label on an edge that carries none");
        }
    }
    for id in h.signs.keys() {
        if !ids.contains(id) {
            report.push(format!("edge {id}"), "(6)", "sign label on an unknown edge");
        }
    }
    report
}

/// Linear algebra over GF(2) on dense boolean rows.
mod gf2 {
    /// Solves `sum_{i in vars} x_i = rhs` for all equations; `None` if inconsistent.
    pub fn solve(nvars: usize, equations: &[(Vec<usize>, bool)]) -> Option<Vec<bool>> {
        let mut rows: Vec<(Vec<bool>, bool)> = equations
            .iter()
            .map(|(vars, rhs)| {
                let mut r = vec![false; nvars];
                for &v in vars {
                    r[v] ^= true;
                }
                (r, *rhs)
            })
            .collect();
        let mut pivots = Vec::new();
        let mut next = 0;
        for col in 0..nvars {
            let Some(p) = (next..rows.len()).find(|&i| rows[i].0[col]) else { continue };
            rows.swap(next, p);
            for i in 0..rows.len() {
                if i != next && rows[i].0[col] {
                    let (pivot_row, pivot_rhs) = rows[next].clone();
                    for (a, b) in rows[i].0.iter_mut().zip(&pivot_row) {
                        *a ^= *b;
                    }
                    rows[i].1 ^= pivot_rhs;
                }
            }
            pivots.push(col);
            next += 1;
        }
        if rows[next..].iter().any(|(_, rhs)| *rhs) {
            return None;
        }
        let mut x = vec![false; nvars];
        for (i, &col) in pivots.iter().enumerate() {
            x[col] = rows[i].1;
        }
        Some(x)
    }

    /// The unique representative of `v` modulo the span of `generators` that
    /// vanishes on the pivot columns of the reduced row echelon basis.
    pub fn reduce(v: &[bool], generators: &[Vec<bool>]) -> Vec<bool> {
        let n = v.len();
        let mut rows: Vec<Vec<bool>> = generators.to_vec();
        let mut basis: Vec<(usize, Vec<bool>)> = Vec::new();
        let mut next = 0;
        for col in 0..n {
            let Some(p) = (next..rows.len()).find(|&i| rows[i][col]) else { continue };
            rows.swap(next, p);
            let pivot = rows[next].clone();
            for (i, r) in rows.iter_mut().enumerate() {
                if i != next && r[col] {
                    for (a, b) in r.iter_mut().zip(&pivot) {
                        *a ^= *b;
                    }
                }
            }
            basis.push((col, pivot));
            next += 1;
        }
        let mut out = v.to_vec();
        for (col, row) in &basis {
            if out[*col] {
                for (a, b) in out.iter_mut().zip(row) {
                    *a ^= *b;
                }
            }
        }
        out
    }
}

/// `v` scaled to the primitive lattice vector on its line with positive leading sign.
fn primitive_positive(v: &Vector2, lattice: &crate::linear::Lattice2) -> Vector2 {
    let p = lattice.primitive_along(v).expect("nonzero slope");
    if p.leading_sign() < 0 {
        -&p
    } else {
        p
    }
}

fn sign_normalized(v: &Vector2) -> (Vector2, bool) {
    if v.leading_sign() < 0 {
        (-v, true)
    } else {
        (v.clone(), false)
    }
}

/// Canonical representative under the three moves. Per Seifert vertex the
/// slope on the least incident mixed edge becomes primitive in its cusp lattice,
/// every slope gets a positive leading coordinate (flipping its sign), and the
/// sign vector is reduced modulo the flips the moves still allow.
pub fn h_canonical_moves(h: &HGraph) -> Result<HGraph> {
    let mut out = h.clone();
    for v in h.seifert.keys() {
        let Some((rid, r)) = h.mixed.iter().find(|(_, e)| &e.seifert == v) else { continue };
        let lattice = &h.hyperbolic.cusp_spec(&r.hyperbolic, &r.cusp)?.lattice;
        let target = primitive_positive(&r.slope, lattice);
        let scale = target.ratio_to(&r.slope).ok_or_else(|| Error::InvalidTarget(format!("slope of {rid}")))?;
        for e in out.mixed.values_mut().filter(|e| &e.seifert == v) {
            e.slope = e.slope.scale(&scale);
        }
    }
    for (id, e) in out.mixed.iter_mut() {
        let (s, flipped) = sign_normalized(&e.slope);
        e.slope = s;
        if flipped {
            if let Some(sign) = out.signs.get_mut(id) {
                *sign = -*sign;
            }
        }
    }
    let signed: Vec<String> = out.signs.keys().cloned().collect();
    let index: BTreeMap<&str, usize> = signed.iter().enumerate().map(|(i, e)| (e.as_str(), i)).collect();
    let mut generators = Vec::new();
    for v in out.seifert.keys() {
        let mut all = vec![false; signed.len()];
        let mut mixed_only = vec![false; signed.len()];
        for id in &signed {
            let (a, b) = out.endpoints(id).expect("signed edges exist");
            for end in [a, b] {
                if end == v {
                    all[index[id.as_str()]] ^= true;
                    if out.mixed.contains_key(id) {
                        mixed_only[index[id.as_str()]] ^= true;
                    }
                }
            }
        }
        if out.is_o(v) {
            generators.push(all);
        }
        generators.push(mixed_only);
    }
    let bits: Vec<bool> = signed.iter().map(|id| out.sign_bit(id)).collect();
    let reduced = gf2::reduce(&bits, &generators);
    for (id, bit) in signed.iter().zip(reduced) {
        out.signs.insert(id.clone(), if bit { -1 } else { 1 });
    }
    Ok(out)
}

/// A morphism of H-graphs. Mixed edges map forwards; coverings are given for
/// hyperbolic vertices only.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct HMorphism {
    pub vertex_map: BTreeMap<String, String>,
    pub edge_map: BTreeMap<String, DirectedEdge>,
    pub vertex_coverings: BTreeMap<String, CoveringEntry>,
}

impl HMorphism {
    fn map_end(&self, d: &DirectedEdge) -> Option<DirectedEdge> {
        self.edge_map.get(&d.edge).map(|img| if d.reversed { img.rev() } else { img.clone() })
    }

    fn hyperbolic_part(&self, src: &HGraph) -> GraphMorphism {
        GraphMorphism {
            vertex_map: self.vertex_map.iter().filter(|(v, _)| src.is_hyperbolic(v)).map(|(a, b)| (a.clone(), b.clone())).collect(),
            edge_map: self
                .edge_map
                .iter()
                .filter(|(e, _)| src.hyperbolic.edges.contains_key(*e))
                .map(|(a, b)| (a.clone(), b.clone()))
                .collect(),
            vertex_coverings: self.vertex_coverings.clone(),
        }
    }

    /// Tangent map of the covering at `cusp` of hyperbolic vertex `v`.
    fn psi(&self, v: &str, cusp: &str) -> Option<(&str, &Matrix2)> {
        let a = self.vertex_coverings.get(v)?.assignment(cusp)?;
        Some((a.target_cusp.as_str(), &a.psi))
    }
}

pub fn identity_h_morphism(h: &HGraph) -> Result<HMorphism> {
    let mut vertex_coverings = BTreeMap::new();
    for (v, orb) in &h.hyperbolic.vertices {
        vertex_coverings.insert(v.clone(), identity_covering(h.catalog().orbifold(orb)?));
    }
    Ok(HMorphism {
        vertex_map: h.vertex_ids().into_iter().map(|v| (v.clone(), v)).collect(),
        edge_map: h.edge_ids().into_iter().map(|e| (e.clone(), DirectedEdge::forward(e))).collect(),
        vertex_coverings,
    })
}

/// `second . first`.
pub fn compose_h(first: &HMorphism, second: &HMorphism) -> Result<HMorphism> {
    let mut out = HMorphism { vertex_map: BTreeMap::new(), edge_map: BTreeMap::new(), vertex_coverings: BTreeMap::new() };
    for (v, w) in &first.vertex_map {
        let x = second.vertex_map.get(w).ok_or_else(|| Error::UnknownVertex(w.clone()))?;
        out.vertex_map.insert(v.clone(), x.clone());
        if let (Some(c1), Some(c2)) = (first.vertex_coverings.get(v), second.vertex_coverings.get(w)) {
            out.vertex_coverings.insert(v.clone(), crate::catalog::compose_coverings(c1, c2)?);
        }
    }
    for (e, img) in &first.edge_map {
        let d = second.map_end(img).ok_or_else(|| Error::UnknownEdge(img.edge.clone()))?;
        out.edge_map.insert(e.clone(), d);
    }
    Ok(out)
}

/// Ratio `psi(s_e) / s_f` for a mixed source edge and its image, if parallel.
fn slope_ratio(src: &HGraph, dst: &HGraph, m: &HMorphism, e: &str) -> Option<Rational> {
    let me = src.mixed.get(e)?;
    let img = m.edge_map.get(e)?;
    let f = dst.mixed.get(&img.edge)?;
    let (_, psi) = m.psi(&me.hyperbolic, &me.cusp)?;
    psi.apply(&me.slope).ratio_to(&f.slope)
}

/// Unknowns of the sign system: moves at source o vertices, slope-scaling signs
/// at source Seifert vertices, and either moves at target o vertices or the
/// target signs themselves.
struct SignSystem {
    nvars: usize,
    equations: Vec<(Vec<usize>, bool)>,
    target_vars: BTreeMap<String, usize>,
}

fn sign_system(src: &HGraph, dst: &HGraph, m: &HMorphism, unknown_target_signs: bool) -> SignSystem {
    let mut nvars = 0;
    let var = |n: &mut usize| {
        *n += 1;
        *n - 1
    };
    let x: BTreeMap<&str, usize> = src.seifert.keys().filter(|v| src.is_o(v)).map(|v| (v.as_str(), var(&mut nvars))).collect();
    let z: BTreeMap<&str, usize> = src.seifert.keys().map(|v| (v.as_str(), var(&mut nvars))).collect();
    let y: BTreeMap<&str, usize> = if unknown_target_signs {
        BTreeMap::new()
    } else {
        dst.seifert.keys().filter(|v| dst.is_o(v)).map(|v| (v.as_str(), var(&mut nvars))).collect()
    };
    let mut target_vars = BTreeMap::new();
    if unknown_target_signs {
        for id in dst.edge_ids() {
            if dst.carries_sign(&id) {
                target_vars.insert(id, var(&mut nvars));
            }
        }
    }
    let mut equations = Vec::new();
    for e in src.signs.keys() {
        let Some(img) = m.edge_map.get(e) else { continue };
        let f = &img.edge;
        if !dst.carries_sign(f) {
            continue;
        }
        let mut vars = Vec::new();
        let mut rhs = src.sign_bit(e);
        let (a, b) = src.endpoints(e).expect("signed edge exists");
        for end in [a, b] {
            if let Some(&i) = x.get(end) {
                vars.push(i);
            }
        }
        if let Some(me) = src.mixed.get(e) {
            vars.push(z[me.seifert.as_str()]);
            if slope_ratio(src, dst, m, e).is_some_and(|r| r < Rational::from_integer(0.into())) {
                rhs ^= true;
            }
        }
        if unknown_target_signs {
            vars.push(target_vars[f]);
        } else {
            rhs ^= dst.sign_bit(f);
            let (c, d) = dst.endpoints(f).expect("image edge exists");
            for end in [c, d] {
                if let Some(&i) = y.get(end) {
                    vars.push(i);
                }
            }
        }
        equations.push((vars, rhs));
    }
    SignSystem { nvars, equations, target_vars }
}

/// Whether the o-to-n rule holds at target vertex `w`: every edge at `w` has
/// preimages of different (slope-adjusted) signs or a preimage ending at a type n
/// Seifert vertex.
fn o_to_n_allowed(src: &HGraph, dst: &HGraph, m: &HMorphism, w: &str) -> bool {
    for f in dst.out_ends(w) {
        let mut signs = BTreeSet::new();
        let mut n_end = false;
        for (e, img) in &m.edge_map {
            for d in [DirectedEdge::forward(e.clone()), DirectedEdge::backward(e.clone())] {
                let image = if d.reversed { img.rev() } else { img.clone() };
                if image != f || m.vertex_map.get(src.start_of(&d).unwrap_or_default()).map(String::as_str) != Some(w) {
                    continue;
                }
                let far = src.end_of(&d).unwrap_or_default();
                if src.seifert.get(far).is_some_and(|l| l.fiber_type == FiberType::N) {
                    n_end = true;
                }
                if src.signs.contains_key(e) {
                    let flip = src.mixed.contains_key(e) && slope_ratio(src, dst, m, e).is_some_and(|r| r < Rational::from_integer(0.into()));
                    signs.insert(src.sign_bit(e) ^ flip);
                }
            }
        }
        if !n_end && signs.len() < 2 {
            return false;
        }
    }
    true
}

/// Every violated morphism condition: `vertex-map`, `edge-map`, `homomorphism`,
/// `open`, `color`, `type`, `o-to-n`, `slope`, `sign`, and those of the
/// hyperbolic restriction.
pub fn verify_h_morphism(src: &HGraph, dst: &HGraph, m: &HMorphism) -> Report {
    let mut report = Report::new();
    for v in src.vertex_ids() {
        let subject = format!("vertex {v}");
        let Some(w) = m.vertex_map.get(&v) else {
            report.push(&subject, "vertex-map", "vertex is not mapped");
            continue;
        };
        match (src.seifert.get(&v), dst.seifert.get(w)) {
            (None, None) if dst.is_hyperbolic(w) => {}
            (Some(a), Some(b)) => {
                if a.color != b.color {
                    report.push(&subject, "color", format!("{:?} maps to {:?}", a.color, b.color));
                }
                if a.fiber_type == FiberType::N && b.fiber_type == FiberType::O {
                    report.push(&subject, "type", "type n maps to type o");
                }
            }
            _ => report.push(&subject, "vertex-map", format!("image {w} is missing or of the other kind")),
        }
    }
    if !report.is_empty() {
        return report;
    }
    for id in src.edge_ids() {
        let subject = format!("edge {id}");
        let Some(img) = m.edge_map.get(&id) else {
            report.push(&subject, "edge-map", "edge is not mapped");
            continue;
        };
        let same_kind = (src.hyperbolic.edges.contains_key(&id) && dst.hyperbolic.edges.contains_key(&img.edge))
            || (src.mixed.contains_key(&id) && dst.mixed.contains_key(&img.edge) && !img.reversed)
            || (src.seifert_edges.contains_key(&id) && dst.seifert_edges.contains_key(&img.edge));
        if !same_kind {
            report.push(&subject, "edge-map", format!("image {img} is missing or of another kind"));
            continue;
        }
        let d = DirectedEdge::forward(id.clone());
        let (a, b) = (src.start_of(&d).expect("edge"), src.end_of(&d).expect("edge"));
        if dst.start_of(img) != Some(m.vertex_map[a].as_str()) || dst.end_of(img) != Some(m.vertex_map[b].as_str()) {
            report.push(&subject, "homomorphism", format!("endpoints do not map to those of {img}"));
        }
        if let (Some(me), Some(f)) = (src.mixed.get(&id), dst.mixed.get(&img.edge)) {
            match m.psi(&me.hyperbolic, &me.cusp) {
                Some((c, _)) if c == f.cusp => {}
                _ => report.push(&subject, "cusps", format!("cusp {} does not cover cusp {}", me.cusp, f.cusp)),
            }
        }
    }
    if !report.is_empty() {
        return report;
    }
    for viol in verify_morphism(&src.hyperbolic, &dst.hyperbolic, &m.hyperbolic_part(src)).violations {
        report.violations.push(viol);
    }
    for v in src.vertex_ids() {
        let w = &m.vertex_map[&v];
        let images: BTreeSet<DirectedEdge> = src.out_ends(&v).iter().filter_map(|d| m.map_end(d)).collect();
        for f in dst.out_ends(w) {
            let covered = if dst.seifert_edges.contains_key(&f.edge) {
                images.iter().any(|d| d.edge == f.edge)
            } else {
                dst.hyperbolic.edges.contains_key(&f.edge) || images.contains(&f)
            };
            if !covered {
                report.push(format!("vertex {v}"), "open", format!("edge {f} at {w} has no preimage at {v}"));
            }
        }
    }
    for v in src.seifert.keys() {
        let mut ratios = BTreeSet::new();
        for (id, e) in src.mixed.iter().filter(|(_, e)| &e.seifert == v) {
            match slope_ratio(src, dst, m, id) {
                Some(r) => {
                    ratios.insert(crate::linear::rational::abs(&r));
                }
                None => report.push(format!("edge {id}"), "slope", format!("pushed slope of {} is not parallel to the image slope", e.cusp)),
            }
        }
        if ratios.len() > 1 {
            report.push(format!("vertex {v}"), "slope", "slopes need different scalings");
        }
    }
    let system = sign_system(src, dst, m, false);
    if gf2::solve(system.nvars, &system.equations).is_none() {
        report.push("graph", "sign", "no choice of moves matches the signs");
    }
    let o_to_n: BTreeSet<&String> = src
        .seifert
        .iter()
        .filter(|(v, l)| l.fiber_type == FiberType::O && dst.seifert.get(&m.vertex_map[*v]).is_some_and(|t| t.fiber_type == FiberType::N))
        .map(|(v, _)| &m.vertex_map[v])
        .collect();
    for w in o_to_n {
        if !o_to_n_allowed(src, dst, m, w) {
            report.push(format!("vertex {w}"), "o-to-n", "an edge has preimages of one sign only and none ending at a type n vertex");
        }
    }
    report
}

/// Vertex- and arc-coloured encoding: vertices first, then one node per edge.
/// Slope directions are move-invariant and part of the colours; magnitudes and
/// signs are compared separately.
fn encode(h: &HGraph) -> Result<(ColoredGraph, Vec<String>, Vec<String>)> {
    let mut g = ColoredGraph::default();
    let vertices: Vec<String> = h.vertex_ids().into_iter().collect();
    let index: BTreeMap<&str, usize> = vertices.iter().enumerate().map(|(i, v)| (v.as_str(), i)).collect();
    for v in &vertices {
        match h.seifert.get(v) {
            Some(l) => g.add_vertex(format!("S:{}", l.code())),
            None => g.add_vertex(format!("H:{}", h.hyperbolic.vertices[v])),
        };
    }
    let edges: Vec<String> = h.edge_ids().into_iter().collect();
    for id in &edges {
        if let Some(e) = h.hyperbolic.edges.get(id) {
            let fw = DirectedEdge::forward(id.clone());
            let text = |d: &DirectedEdge| -> Result<String> {
                let f = h.hyperbolic.head_spec(d)?.symmetry();
                Ok(format!(
                    "hh:{}>{}:{}",
                    h.hyperbolic.head_cusp(d)?,
                    h.hyperbolic.tail_cusp(d)?,
                    coset_canonical(&h.hyperbolic.label(d)?, &f)
                ))
            };
            let (tf, tr) = (text(&fw)?, text(&fw.rev())?);
            let node = g.add_vertex(tf.clone().min(tr.clone()));
            if tf == tr {
                g.add_arc(index[e.head.as_str()], node, "x");
                g.add_arc(index[e.tail.as_str()], node, "x");
            } else if tf < tr {
                g.add_arc(index[e.head.as_str()], node, "h");
                g.add_arc(node, index[e.tail.as_str()], "t");
            } else {
                g.add_arc(index[e.tail.as_str()], node, "h");
                g.add_arc(node, index[e.head.as_str()], "t");
            }
        } else if let Some(e) = h.mixed.get(id) {
            let lattice = &h.hyperbolic.cusp_spec(&e.hyperbolic, &e.cusp)?.lattice;
            let node = g.add_vertex(format!("hs:{}:{}", e.cusp, primitive_positive(&e.slope, lattice)));
            g.add_arc(index[e.hyperbolic.as_str()], node, "h");
            g.add_arc(node, index[e.seifert.as_str()], "s");
        } else if let Some(e) = h.seifert_edges.get(id) {
            let node = g.add_vertex(format!("ss:{}", e.symmetric));
            g.add_arc(index[e.a.as_str()], node, "e");
            g.add_arc(index[e.b.as_str()], node, "e");
        }
    }
    Ok((g, vertices, edges))
}

/// `b` with vertex and edge ids renamed along an isomorphism from `a`.
fn transport(b: &HGraph, vmap: &BTreeMap<String, String>, emap: &BTreeMap<String, DirectedEdge>) -> Result<HGraph> {
    let inv_v: BTreeMap<&String, &String> = vmap.iter().map(|(x, y)| (y, x)).collect();
    let mut out = HGraph::new(b.catalog().clone());
    for (v, orb) in &b.hyperbolic.vertices {
        out.hyperbolic.add_vertex(inv_v[v].clone(), orb.clone());
    }
    for (v, l) in &b.seifert {
        out.seifert.insert(inv_v[v].clone(), *l);
    }
    for (id, img) in emap {
        if let Some(e) = b.hyperbolic.edges.get(&img.edge) {
            let e = if img.reversed { e.reversed()? } else { e.clone() };
            out.hyperbolic
                .add_edge(id.clone(), Edge::new(inv_v[&e.head], &e.head_cusp, inv_v[&e.tail], &e.tail_cusp, e.label.clone()));
        } else if let Some(e) = b.mixed.get(&img.edge) {
            out.mixed.insert(
                id.clone(),
                MixedEdge { hyperbolic: inv_v[&e.hyperbolic].clone(), cusp: e.cusp.clone(), seifert: inv_v[&e.seifert].clone(), slope: e.slope.clone() },
            );
        } else if let Some(e) = b.seifert_edges.get(&img.edge) {
            let (x, y) = if img.reversed { (&e.b, &e.a) } else { (&e.a, &e.b) };
            out.seifert_edges.insert(id.clone(), SeifertEdge { a: inv_v[x].clone(), b: inv_v[y].clone(), symmetric: e.symmetric });
        }
        if let Some(s) = b.signs.get(&img.edge) {
            out.signs.insert(id.clone(), *s);
        }
    }
    Ok(out)
}

/// Equality of canonical decorations on graphs with the same ids.
fn same_decorations(a: &HGraph, b: &HGraph) -> Result<bool> {
    let (ca, cb) = (h_canonical_moves(a)?, h_canonical_moves(b)?);
    if ca.mixed != cb.mixed || ca.signs != cb.signs || ca.seifert != cb.seifert || ca.seifert_edges != cb.seifert_edges {
        return Ok(false);
    }
    for (id, e) in &ca.hyperbolic.edges {
        let Some(f) = cb.hyperbolic.edges.get(id) else { return Ok(false) };
        if (&e.head, &e.head_cusp, &e.tail, &e.tail_cusp) != (&f.head, &f.head_cusp, &f.tail, &f.tail_cusp) {
            return Ok(false);
        }
        let sym = ca.hyperbolic.cusp_spec(&e.head, &e.head_cusp)?.symmetry();
        if coset_canonical(&e.label, &sym) != coset_canonical(&f.label, &sym) {
            return Ok(false);
        }
    }
    Ok(ca.hyperbolic.vertices == cb.hyperbolic.vertices && ca.hyperbolic.edges.len() == cb.hyperbolic.edges.len())
}

/// An isomorphism `a -> b` (degree-one coverings, data equal up to the moves).
pub fn find_h_isomorphism(a: &HGraph, b: &HGraph) -> Result<Option<HMorphism>> {
    let (ga, va, ea) = encode(a)?;
    let (gb, vb, eb) = encode(b)?;
    let mut found = None;
    let mut failure = None;
    ga.isomorphisms(&gb, |map| {
        let vmap: BTreeMap<String, String> = va.iter().enumerate().map(|(i, v)| (v.clone(), vb[map[i]].clone())).collect();
        let mut emap = BTreeMap::new();
        for (j, id) in ea.iter().enumerate() {
            let img = eb[map[va.len() + j] - vb.len()].clone();
            let d = DirectedEdge::forward(id.clone());
            let (s, t) = (a.start_of(&d).expect("edge"), a.end_of(&d).expect("edge"));
            let fw = DirectedEdge::forward(img.clone());
            let forward = b.start_of(&fw) == Some(vmap[s].as_str())
                && b.end_of(&fw) == Some(vmap[t].as_str())
                && a.hyperbolic.edges.get(id).is_none_or(|e| b.hyperbolic.edges[&img].head_cusp == e.head_cusp);
            emap.insert(id.clone(), DirectedEdge { edge: img, reversed: !forward });
        }
        match transport(b, &vmap, &emap).and_then(|t| same_decorations(a, &t)) {
            Ok(true) => {
                found = Some((vmap, emap));
                true
            }
            Ok(false) => false,
            Err(e) => {
                failure = Some(e);
                true
            }
        }
    });
    if let Some(e) = failure {
        return Err(e);
    }
    let Some((vertex_map, edge_map)) = found else { return Ok(None) };
    let mut vertex_coverings = BTreeMap::new();
    for (v, orb) in &a.hyperbolic.vertices {
        vertex_coverings.insert(v.clone(), identity_covering(a.catalog().orbifold(orb)?));
    }
    Ok(Some(HMorphism { vertex_map, edge_map, vertex_coverings }))
}

pub fn h_isomorphic(a: &HGraph, b: &HGraph) -> Result<bool> {
    Ok(find_h_isomorphism(a, b)?.is_some())
}

/// Replaces hyperbolic labels by their minimal orbifolds, pushing edge labels
/// and slopes forward.
pub fn normalize_h(h: &HGraph) -> Result<(HGraph, HMorphism)> {
    let mut coverings = BTreeMap::new();
    for (v, orb) in &h.hyperbolic.vertices {
        let entry = h.catalog().orbifold(orb)?;
        coverings.insert(v.clone(), minimal_quotient_of(h.catalog(), orb, &entry.own_degrees())?);
    }
    let m = HMorphism {
        vertex_map: h.vertex_ids().into_iter().map(|v| (v.clone(), v)).collect(),
        edge_map: h.edge_ids().into_iter().map(|e| (e.clone(), DirectedEdge::forward(e))).collect(),
        vertex_coverings: coverings,
    };
    let blocks = m.vertex_map.clone();
    let slopes = pushed_slopes(h, &m.vertex_coverings)?;
    let types = h.seifert.iter().map(|(v, l)| (v.clone(), l.fiber_type)).collect();
    let (mut q, qm) = quotient(h, &blocks, &m.vertex_coverings, &slopes, &types, false)?;
    q.signs = h.signs.clone();
    Ok((q, qm))
}

/// Slopes of mixed edges pushed through the chosen coverings, with the image cusp.
fn pushed_slopes(h: &HGraph, coverings: &BTreeMap<String, CoveringEntry>) -> Result<BTreeMap<String, (String, Vector2)>> {
    let mut out = BTreeMap::new();
    for (id, e) in &h.mixed {
        let a = coverings[&e.hyperbolic]
            .assignment(&e.cusp)
            .ok_or_else(|| Error::NotDeclared(format!("cusp {} in covering of {}", e.cusp, e.hyperbolic)))?;
        out.insert(id.clone(), (a.target_cusp.clone(), a.psi.apply(&e.slope)));
    }
    Ok(out)
}

/// Quotient by a vertex partition (block names are vertex ids) with coverings
/// at hyperbolic vertices. Slopes are taken from `slopes` (edge -> image cusp,
/// slope); with `collapse`, parallel Seifert edges collapse. Signs are left empty.
fn quotient(
    h: &HGraph,
    blocks: &BTreeMap<String, String>,
    coverings: &BTreeMap<String, CoveringEntry>,
    slopes: &BTreeMap<String, (String, Vector2)>,
    types: &BTreeMap<String, FiberType>,
    collapse: bool,
) -> Result<(HGraph, HMorphism)> {
    let nah_blocks: BTreeMap<String, String> =
        blocks.iter().filter(|(v, _)| h.is_hyperbolic(v)).map(|(a, b)| (a.clone(), b.clone())).collect();
    let (hyp, hm) = crate::minimize::build_quotient(&h.hyperbolic, &nah_blocks, coverings)?;
    let mut q = HGraph::from_nah(hyp);
    for (v, l) in &h.seifert {
        let b = &blocks[v];
        let fiber_type = types.get(b).copied().unwrap_or(l.fiber_type);
        q.seifert.insert(b.clone(), SeifertLabel::new(l.color, fiber_type));
    }
    let mut edge_map = hm.edge_map.clone();
    let mut mixed_ends: BTreeMap<(String, String), String> = BTreeMap::new();
    for (id, e) in &h.mixed {
        let (cusp, slope) = &slopes[id];
        let key = (blocks[&e.hyperbolic].clone(), cusp.clone());
        let qid = mixed_ends.entry(key.clone()).or_insert_with(|| id.clone()).clone();
        q.mixed.entry(qid.clone()).or_insert_with(|| MixedEdge {
            hyperbolic: key.0.clone(),
            cusp: key.1.clone(),
            seifert: blocks[&e.seifert].clone(),
            slope: slope.clone(),
        });
        edge_map.insert(id.clone(), DirectedEdge::forward(qid));
    }
    let mut ss_ends: BTreeMap<(String, String, bool, String), String> = BTreeMap::new();
    for (id, e) in &h.seifert_edges {
        let (a, b) = (blocks[&e.a].clone(), blocks[&e.b].clone());
        let own = if collapse { String::new() } else { id.clone() };
        let key = (a.clone().min(b.clone()), a.clone().max(b.clone()), e.symmetric, own);
        let qid = ss_ends.entry(key.clone()).or_insert_with(|| id.clone()).clone();
        q.seifert_edges
            .entry(qid.clone())
            .or_insert_with(|| SeifertEdge { a: key.0.clone(), b: key.1.clone(), symmetric: e.symmetric });
        let qe = &q.seifert_edges[&qid];
        edge_map.insert(id.clone(), DirectedEdge { edge: qid.clone(), reversed: qe.a != a });
    }
    let m = HMorphism { vertex_map: blocks.clone(), edge_map, vertex_coverings: coverings.clone() };
    Ok((q, m))
}

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord)]
enum HEnd {
    Unglued,
    Hyperbolic(usize, String, Matrix2),
    ToSeifert(usize, Vector2),
    ToHyperbolic(usize, String, Vector2),
    Seifert(usize, bool),
}

type HSignature = BTreeMap<String, BTreeSet<HEnd>>;

/// Joint refinement of hyperbolic and Seifert vertices.
struct HFolding<'a> {
    h: &'a HGraph,
    vertices: Vec<String>,
    index: BTreeMap<String, usize>,
    /// Hyperbolic vertices only.
    candidates: BTreeMap<usize, Vec<CoveringEntry>>,
    /// Initial classes.
    classes: Vec<String>,
}

impl<'a> HFolding<'a> {
    fn new(h: &'a HGraph, singletons: &BTreeSet<String>) -> Result<Self> {
        let vertices: Vec<String> = h.vertex_ids().into_iter().collect();
        let index = vertices.iter().enumerate().map(|(i, v)| (v.clone(), i)).collect();
        let mut candidates = BTreeMap::new();
        let mut classes = Vec::new();
        for (i, v) in vertices.iter().enumerate() {
            let mut class = match h.seifert.get(v) {
                Some(l) => format!("S:{}", l.code()),
                None => {
                    candidates.insert(i, candidate_list(h.catalog(), &h.hyperbolic.vertices[v])?);
                    String::new()
                }
            };
            if singletons.contains(v) {
                class.push_str(&format!("#{v}"));
            }
            classes.push(class);
        }
        Ok(HFolding { h, vertices, index, candidates, classes })
    }

    fn covering(&self, v: usize, choice: &[usize]) -> &CoveringEntry {
        &self.candidates[&v][choice[v]]
    }

    /// Normalized pushed slope per mixed edge, for the current blocks.
    fn slopes(&self, choice: &[usize], blocks: &[usize]) -> Result<BTreeMap<String, (String, Vector2)>> {
        let h = self.h;
        let mut pushed: BTreeMap<&String, (String, Vector2, (usize, String))> = BTreeMap::new();
        for (id, e) in &h.mixed {
            let u = self.index[&e.hyperbolic];
            let cov = self.covering(u, choice);
            let a = cov.assignment(&e.cusp).ok_or_else(|| Error::NotDeclared(format!("cusp {} in {}", e.cusp, cov.id)))?;
            pushed.insert(id, (a.target_cusp.clone(), a.psi.apply(&e.slope), (blocks[u], a.target_cusp.clone())));
        }
        let mut out = BTreeMap::new();
        for v in h.seifert.keys() {
            let edges: Vec<&String> = h.mixed.iter().filter(|(_, e)| &e.seifert == v).map(|(id, _)| id).collect();
            let Some(min_key) = edges.iter().map(|id| &pushed[id].2).min() else { continue };
            let mut best: Option<Vec<((usize, String), Vector2)>> = None;
            let mut best_scale = None;
            for id in edges.iter().filter(|id| &pushed[*id].2 == min_key) {
                let e = &h.mixed[*id];
                let cov = self.covering(self.index[&e.hyperbolic], choice);
                let lattice = &h.catalog().cusp(&cov.target, &pushed[id].0)?.lattice;
                let p = &pushed[id].1;
                let scale = primitive_positive(p, lattice).ratio_to(p).expect("parallel");
                let mut set: Vec<((usize, String), Vector2)> =
                    edges.iter().map(|f| (pushed[f].2.clone(), sign_normalized(&pushed[f].1.scale(&scale)).0)).collect();
                set.sort();
                if best.as_ref().is_none_or(|b| &set < b) {
                    best = Some(set);
                    best_scale = Some(scale);
                }
            }
            let scale = best_scale.expect("some edge has the least key");
            for id in edges {
                let (cusp, p, _) = &pushed[id];
                out.insert(id.clone(), (cusp.clone(), sign_normalized(&p.scale(&scale)).0));
            }
        }
        Ok(out)
    }

    fn signature(
        &self,
        v: usize,
        cov: Option<&CoveringEntry>,
        choice: &[usize],
        blocks: &[usize],
        slopes: &BTreeMap<String, (String, Vector2)>,
    ) -> Result<HSignature> {
        let h = self.h;
        let vid = &self.vertices[v];
        let mut sig = HSignature::new();
        if let Some(cov) = cov {
            let target = h.catalog().orbifold(&cov.target)?;
            for c in &target.cusps {
                sig.insert(c.id.clone(), BTreeSet::new());
            }
            for cusp in &h.catalog().orbifold(&h.hyperbolic.vertices[vid])?.cusps {
                let a = cov.assignment(&cusp.id).ok_or_else(|| Error::NotDeclared(format!("cusp {} in {}", cusp.id, cov.id)))?;
                let f = target.cusp(&a.target_cusp).ok_or_else(|| Error::NotDeclared(a.target_cusp.clone()))?.symmetry();
                let slot = sig.entry(a.target_cusp.clone()).or_default();
                let mut glued = false;
                for d in h.hyperbolic.edges_at(vid, &cusp.id) {
                    glued = true;
                    let w = self.index[h.hyperbolic.tail(&d)?];
                    let wa = self
                        .covering(w, choice)
                        .assignment(h.hyperbolic.tail_cusp(&d)?)
                        .ok_or_else(|| Error::NotDeclared("cusp".into()))?;
                    let pushed = pushforward_edge_label(&h.hyperbolic.label(&d)?, &a.psi, &wa.psi)?;
                    slot.insert(HEnd::Hyperbolic(blocks[w], wa.target_cusp.clone(), coset_canonical(&pushed, &f)));
                }
                for (id, e) in h.mixed.iter().filter(|(_, e)| &e.hyperbolic == vid && e.cusp == cusp.id) {
                    glued = true;
                    slot.insert(HEnd::ToSeifert(blocks[self.index[&e.seifert]], slopes[id].1.clone()));
                }
                if !glued {
                    slot.insert(HEnd::Unglued);
                }
            }
        } else {
            let slot = sig.entry(String::new()).or_default();
            for (id, e) in h.mixed.iter().filter(|(_, e)| &e.seifert == vid) {
                let (cusp, s) = &slopes[id];
                slot.insert(HEnd::ToHyperbolic(blocks[self.index[&e.hyperbolic]], cusp.clone(), s.clone()));
            }
            for e in h.seifert_edges.values() {
                if &e.a == vid {
                    slot.insert(HEnd::Seifert(blocks[self.index[&e.b]], e.symmetric));
                }
                if &e.b == vid {
                    slot.insert(HEnd::Seifert(blocks[self.index[&e.a]], e.symmetric));
                }
            }
        }
        Ok(sig)
    }

    fn refine(&self, choice: &[usize]) -> Result<(Vec<usize>, Vec<HSignature>, BTreeMap<String, (String, Vector2)>)> {
        let n = self.vertices.len();
        let initial: Vec<String> = (0..n)
            .map(|v| match self.candidates.get(&v) {
                Some(c) => format!("H:{}{}", c[choice[v]].target, self.classes[v]),
                None => self.classes[v].clone(),
            })
            .collect();
        let names: BTreeSet<&String> = initial.iter().collect();
        let rank: BTreeMap<&String, usize> = names.into_iter().enumerate().map(|(i, t)| (t, i)).collect();
        let mut blocks: Vec<usize> = initial.iter().map(|t| rank[t]).collect();
        loop {
            let slopes = self.slopes(choice, &blocks)?;
            let mut sigs = Vec::with_capacity(n);
            for v in 0..n {
                let cov = self.candidates.get(&v).map(|c| &c[choice[v]]);
                sigs.push(self.signature(v, cov, choice, &blocks, &slopes)?);
            }
            let keys: Vec<(usize, &HSignature)> = (0..n).map(|v| (blocks[v], &sigs[v])).collect();
            let distinct: BTreeSet<_> = keys.iter().cloned().collect();
            let lookup: BTreeMap<_, usize> = distinct.into_iter().enumerate().map(|(i, k)| (k, i)).collect();
            let next: Vec<usize> = keys.iter().map(|k| lookup[k]).collect();
            let before = blocks.iter().collect::<BTreeSet<_>>().len();
            let after = next.iter().collect::<BTreeSet<_>>().len();
            if before == after {
                return Ok((blocks, sigs, slopes));
            }
            blocks = next;
        }
    }

    fn run(&self) -> Result<(Vec<usize>, Vec<usize>, BTreeMap<String, (String, Vector2)>)> {
        let n = self.vertices.len();
        let mut choice = vec![0usize; n];
        loop {
            let (blocks, sigs, slopes) = self.refine(&choice)?;
            let consistent = |s: &HSignature| s.values().all(|x| x.len() == 1);
            let bad: Vec<usize> = self.candidates.keys().copied().filter(|&v| !consistent(&sigs[v])).collect();
            if bad.is_empty() {
                return Ok((choice, blocks, slopes));
            }
            let mut next = choice.clone();
            for v in bad {
                let list = &self.candidates[&v];
                let mut j = choice[v] + 1;
                while j + 1 < list.len() {
                    if consistent(&self.signature(v, Some(&list[j]), &choice, &blocks, &slopes)?) {
                        break;
                    }
                    j += 1;
                }
                next[v] = j;
            }
            choice = next;
        }
    }
}

/// Quotient with signs solved; `None` when the signs cannot be matched.
fn signed_quotient(
    h: &HGraph,
    blocks: &BTreeMap<String, String>,
    coverings: &BTreeMap<String, CoveringEntry>,
    slopes: &BTreeMap<String, (String, Vector2)>,
    types: &BTreeMap<String, FiberType>,
    collapse: bool,
) -> Result<Option<(HGraph, HMorphism)>> {
    let (mut q, m) = quotient(h, blocks, coverings, slopes, types, collapse)?;
    let system = sign_system(h, &q, &m, true);
    let Some(x) = gf2::solve(system.nvars, &system.equations) else { return Ok(None) };
    for (f, i) in &system.target_vars {
        q.signs.insert(f.clone(), if x[*i] { -1 } else { 1 });
    }
    Ok(Some((q, m)))
}

/// Quotient for the current partition, promoting o blocks to type n where the
/// signs force it and the o-to-n rule allows it.
fn resolve_signs(
    h: &HGraph,
    blocks: &BTreeMap<String, String>,
    coverings: &BTreeMap<String, CoveringEntry>,
    slopes: &BTreeMap<String, (String, Vector2)>,
    collapse: bool,
) -> Result<Option<(HGraph, HMorphism)>> {
    let mut types: BTreeMap<String, FiberType> = BTreeMap::new();
    for (v, l) in &h.seifert {
        types.insert(blocks[v].clone(), l.fiber_type);
    }
    if let Some(found) = signed_quotient(h, blocks, coverings, slopes, &types, collapse)? {
        return Ok(Some(found));
    }
    let o_blocks: Vec<String> = types.iter().filter(|(_, t)| **t == FiberType::O).map(|(b, _)| b.clone()).collect();
    let promotable = |types: &BTreeMap<String, FiberType>, b: &str| -> Result<bool> {
        let (q, m) = quotient(h, blocks, coverings, slopes, types, collapse)?;
        Ok(o_to_n_allowed(h, &q, &m, b))
    };
    for b in &o_blocks {
        let mut t = types.clone();
        t.insert(b.clone(), FiberType::N);
        if promotable(&t, b)? {
            if let Some(found) = signed_quotient(h, blocks, coverings, slopes, &t, collapse)? {
                return Ok(Some(found));
            }
        }
    }
    let mut t = types.clone();
    for b in &o_blocks {
        let mut trial = t.clone();
        trial.insert(b.clone(), FiberType::N);
        if promotable(&trial, b)? {
            t = trial;
            if let Some(found) = signed_quotient(h, blocks, coverings, slopes, &t, collapse)? {
                return Ok(Some(found));
            }
        }
    }
    Ok(None)
}

/// The minimal H-graph of the bisimilarity class of `h` with a morphism onto it.
pub fn minimize_h(h: &HGraph) -> Result<(HGraph, HMorphism)> {
    validate_h(h).into_result("H-graph")?;
    let (normal, to_normal) = normalize_h(h)?;
    let o_vertices: BTreeSet<String> = normal.seifert.iter().filter(|(_, l)| l.fiber_type == FiberType::O).map(|(v, _)| v.clone()).collect();
    let attempts = [BTreeSet::new(), o_vertices, normal.vertex_ids()];
    for singletons in attempts {
        let folding = HFolding::new(&normal, &singletons)?;
        let (choice, blocks, slopes) = folding.run()?;
        let mut least: BTreeMap<usize, String> = BTreeMap::new();
        for (v, b) in folding.vertices.iter().zip(&blocks) {
            least.entry(*b).or_insert_with(|| v.clone());
        }
        let names: BTreeMap<String, String> =
            folding.vertices.iter().zip(&blocks).map(|(v, b)| (v.clone(), least[b].clone())).collect();
        let coverings: BTreeMap<String, CoveringEntry> =
            folding.candidates.keys().map(|&i| (folding.vertices[i].clone(), folding.covering(i, &choice).clone())).collect();
        for collapse in [true, false] {
            if let Some((q, m)) = resolve_signs(&normal, &names, &coverings, &slopes, collapse)? {
                let mut report = verify_h_morphism(&normal, &q, &m);
                report.extend(validate_h(&q));
                if report.is_empty() {
                    let q = h_canonical_moves(&q)?;
                    let composed = compose_h(&to_normal, &m)?;
                    return Ok((q, composed));
                }
            }
        }
    }
    // the identity quotient always verifies
    let m = identity_h_morphism(&normal)?;
    Ok((h_canonical_moves(&normal)?, compose_h(&to_normal, &m)?))
}

pub fn h_bisimilar(a: &HGraph, b: &HGraph) -> Result<bool> {
    h_isomorphic(&minimize_h(a)?.0, &minimize_h(b)?.0)
}
