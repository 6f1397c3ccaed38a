//! Morphisms of NAH-graphs: graph homomorphisms with cusp-respecting orbifold
//! coverings at the vertices whose tangent maps intertwine the edge labels.

use std::collections::BTreeMap;

use crate::catalog::{compose_coverings, cusp_covering_degree, identity_covering, validate_covering, CoveringEntry};
use crate::error::{Error, Result};
use crate::graph::{delta, DirectedEdge, NahGraph};
use crate::linear::{coset_canonical, Matrix2, Rational};
use crate::report::Report;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct GraphMorphism {
    pub vertex_map: BTreeMap<String, String>,
    /// Image of each source edge traversed forwards; reversals map to reversals.
    pub edge_map: BTreeMap<String, DirectedEdge>,
    pub vertex_coverings: BTreeMap<String, CoveringEntry>,
}

impl GraphMorphism {
    /// Image of a directed source edge.
    pub fn map_edge(&self, d: &DirectedEdge) -> Result<DirectedEdge> {
        let img = self.edge_map.get(&d.edge).ok_or_else(|| Error::UnknownEdge(d.edge.clone()))?;
        Ok(if d.reversed { img.rev() } else { img.clone() })
    }

    pub fn map_vertex(&self, v: &str) -> Result<&str> {
        self.vertex_map
            .get(v)
            .map(String::as_str)
            .ok_or_else(|| Error::UnknownVertex(v.to_string()))
    }

    /// Tangent map at `cusp` of source vertex `v`.
    pub fn psi(&self, v: &str, cusp: &str) -> Result<&Matrix2> {
        let cov = self.vertex_coverings.get(v).ok_or_else(|| Error::UnknownVertex(v.to_string()))?;
        cov.assignment(cusp)
            .map(|a| &a.psi)
            .ok_or_else(|| Error::UnknownCusp { orbifold: cov.source.clone(), cusp: cusp.to_string() })
    }

    /// A bijection on vertices and edges with degree-1 coverings.
    pub fn is_isomorphism(&self, src: &NahGraph, dst: &NahGraph) -> bool {
        let images: std::collections::BTreeSet<_> = self.vertex_map.values().collect();
        let edge_images: std::collections::BTreeSet<_> = self.edge_map.values().map(|d| &d.edge).collect();
        images.len() == dst.vertices.len()
            && self.vertex_map.len() == src.vertices.len()
            && edge_images.len() == dst.edges.len()
            && self.edge_map.len() == src.edges.len()
            && self.vertex_coverings.values().all(|c| c.total_degree == 1)
    }
}

pub fn identity_morphism(g: &NahGraph) -> Result<GraphMorphism> {
    let mut vertex_coverings = BTreeMap::new();
    for (v, orb) in &g.vertices {
        vertex_coverings.insert(v.clone(), identity_covering(g.catalog.orbifold(orb)?));
    }
    Ok(GraphMorphism {
        vertex_map: g.vertices.keys().map(|v| (v.clone(), v.clone())).collect(),
        edge_map: g.edges.keys().map(|e| (e.clone(), DirectedEdge::forward(e.clone()))).collect(),
        vertex_coverings,
    })
}

/// `psi_tail . l . psi_head^-1`, the label an edge induces downstairs.
pub fn pushforward_edge_label(l: &Matrix2, psi_head: &Matrix2, psi_tail: &Matrix2) -> Result<Matrix2> {
    Ok(&(psi_tail * l) * &psi_head.inverse()?)
}

/// Every violated morphism condition. Condition names: `vertex-map`, `edge-map`,
/// `homomorphism`, `covering`, `cusps`, `commutativity`.
pub fn verify_morphism(src: &NahGraph, dst: &NahGraph, m: &GraphMorphism) -> Report {
    let mut report = Report::new();
    for (v, orb) in &src.vertices {
        let subject = format!("vertex {v}");
        let Some(w) = m.vertex_map.get(v) else {
            report.push(&subject, "vertex-map", "vertex is not mapped");
            continue;
        };
        let Some(worb) = dst.vertices.get(w) else {
            report.push(&subject, "vertex-map", format!("image {w} is not a vertex of the target"));
            continue;
        };
        let Some(cov) = m.vertex_coverings.get(v) else {
            report.push(&subject, "covering", "no covering given");
            continue;
        };
        if &cov.source != orb || &cov.target != worb {
            report.push(
                &subject,
                "covering",
                format!("covering {} goes {} -> {}, expected {} -> {}", cov.id, cov.source, cov.target, orb, worb),
            );
            continue;
        }
        match (src.catalog.orbifold(orb), dst.catalog.orbifold(worb)) {
            (Ok(s), Ok(t)) => {
                for viol in validate_covering(cov, s, t).violations {
                    report.push(&subject, "covering", format!("{}: {}", viol.condition, viol.detail));
                }
            }
            _ => report.push(&subject, "covering", "unknown orbifold label"),
        }
    }
    for v in m.vertex_map.keys() {
        if !src.vertices.contains_key(v) {
            report.push(format!("vertex {v}"), "vertex-map", "not a vertex of the source");
        }
    }
    if !report.is_empty() {
        return report;
    }

    for id in src.edges.keys() {
        let subject = format!("edge {id}");
        let e = DirectedEdge::forward(id.clone());
        let Some(img) = m.edge_map.get(id) else {
            report.push(&subject, "edge-map", "edge is not mapped");
            continue;
        };
        if !dst.edges.contains_key(&img.edge) {
            report.push(&subject, "edge-map", format!("image {img} is not an edge of the target"));
            continue;
        }
        if let Err(err) = check_edge(src, dst, m, &e, img, &subject, &mut report) {
            report.push(&subject, "edge-map", err.to_string());
        }
    }
    report
}

fn check_edge(
    src: &NahGraph,
    dst: &NahGraph,
    m: &GraphMorphism,
    e: &DirectedEdge,
    img: &DirectedEdge,
    subject: &str,
    report: &mut Report,
) -> Result<()> {
    let (h, t) = (src.head(e)?, src.tail(e)?);
    if m.map_vertex(h)? != dst.head(img)? || m.map_vertex(t)? != dst.tail(img)? {
        report.push(subject, "homomorphism", format!("endpoints do not commute with the image {img}"));
        return Ok(());
    }
    for (end, img_end, v) in [(e.clone(), img.clone(), h), (e.rev(), img.rev(), t)] {
        let cusp = src.head_cusp(&end)?;
        let cov = &m.vertex_coverings[v];
        let assigned = cov.assignment(cusp).map(|a| a.target_cusp.as_str());
        let expected = dst.head_cusp(&img_end)?;
        if assigned != Some(expected) {
            report.push(
                subject,
                "cusps",
                format!("cusp {cusp} of {v} covers {:?}, but the image edge end uses {expected}", assigned),
            );
            return Ok(());
        }
    }
    let psi_head = m.psi(h, src.head_cusp(e)?)?;
    let psi_tail = m.psi(t, src.tail_cusp(e)?)?;
    let pushed = pushforward_edge_label(&src.label(e)?, psi_head, psi_tail)?;
    let f = dst.head_spec(img)?.symmetry();
    let target = dst.label(img)?;
    if coset_canonical(&pushed, &f) != coset_canonical(&target, &f) {
        report.push(
            subject,
            "commutativity",
            format!("pushed-forward label {pushed} is not in the coset of {target}"),
        );
    }
    Ok(())
}

/// `d_e delta_e' = delta_e d_ebar` for one directed source edge.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BalanceTransfer {
    pub edge: DirectedEdge,
    pub image: DirectedEdge,
    pub d_e: Rational,
    pub d_ebar: Rational,
    pub delta_e: Rational,
    pub delta_image: Rational,
    pub holds: bool,
}

/// The per-edge certificate relating source and image determinants through the
/// cusp covering degrees at the two ends.
pub fn check_balance_transfer(src: &NahGraph, dst: &NahGraph, m: &GraphMorphism) -> Result<Vec<BalanceTransfer>> {
    let mut out = Vec::new();
    for e in src.directed_edges() {
        let img = m.map_edge(&e)?;
        let (h, t) = (src.head(&e)?, src.tail(&e)?);
        let d_e = cusp_covering_degree(m.psi(h, src.head_cusp(&e)?)?, src.head_spec(&e)?, dst.head_spec(&img)?)?;
        let d_ebar = cusp_covering_degree(m.psi(t, src.tail_cusp(&e)?)?, src.tail_spec(&e)?, dst.tail_spec(&img)?)?;
        let delta_e = delta(src, &e)?;
        let delta_image = delta(dst, &img)?;
        let holds = &d_e * &delta_image == &delta_e * &d_ebar;
        out.push(BalanceTransfer { edge: e, image: img, d_e, d_ebar, delta_e, delta_image, holds });
    }
    Ok(out)
}

/// `second . first`.
pub fn compose_morphisms(first: &GraphMorphism, second: &GraphMorphism) -> Result<GraphMorphism> {
    let mut vertex_map = BTreeMap::new();
    let mut vertex_coverings = BTreeMap::new();
    for (v, w) in &first.vertex_map {
        let x = second.map_vertex(w)?;
        vertex_map.insert(v.clone(), x.to_string());
        let c1 = first.vertex_coverings.get(v).ok_or_else(|| Error::UnknownVertex(v.clone()))?;
        let c2 = second.vertex_coverings.get(w).ok_or_else(|| Error::UnknownVertex(w.clone()))?;
        vertex_coverings.insert(v.clone(), compose_coverings(c1, c2)?);
    }
    let mut edge_map = BTreeMap::new();
    for (e, img) in &first.edge_map {
        edge_map.insert(e.clone(), second.map_edge(img)?);
    }
    Ok(GraphMorphism { vertex_map, edge_map, vertex_coverings })
}
