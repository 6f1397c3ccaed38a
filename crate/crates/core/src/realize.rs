//! Realization of balanced graphs by integral ones.
//!
//! Every edge gets a lattice `Lambda'_e` inside the intersection of the tail
//! cusp lattice with the image of the head cusp lattice. Each vertex is replaced
//! by `n(v)` copies of a cover `M_v` whose cusps over the edge ends are exactly
//! those lattices, and the copies are glued end to end. Covers not supplied by
//! the caller are synthesized as catalog entries.

use std::collections::{BTreeMap, BTreeSet, VecDeque};
use std::sync::Arc;

use num_bigint::BigInt;
use num_traits::ToPrimitive;
use serde::Serialize;

use crate::catalog::{identity_covering, validate_covering, CoveringEntry, CuspAssignment, CuspSpec, OrbifoldCatalog};
use crate::error::{Error, Result};
use crate::graph::{balanced, delta, to_manifest, validate, DirectedEdge, Edge, GluingManifest, NahGraph};
use crate::linear::rational::{lcm_denominators, serde_rational};
use crate::linear::{integer_index, lattice_intersect, Lattice2, Matrix2, Rational};
use crate::minimize::minimize;
use crate::morphism::{compose_morphisms, GraphMorphism};
use crate::report::Report;

/// Marker carried by catalog fragments holding synthesized covers.
pub const SYNTHETIC_NOTE: &str = "synthetic: existence assumes CCC₃";

/// Upper bound on the number of pieces `realize` assembles.
pub const MAX_PIECES: u64 = 20_000;

/// `Lambda_e`: the tail cusp lattice intersected with `l_e` of the head cusp lattice.
pub fn common_sublattice(g: &NahGraph, edge: &str) -> Result<Lattice2> {
    let e = g.edge(edge)?;
    let head = g.cusp_spec(&e.head, &e.head_cusp)?;
    let tail = g.cusp_spec(&e.tail, &e.tail_cusp)?;
    Ok(lattice_intersect(&tail.lattice, &head.lattice.image(&e.label)?))
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct EdgePlan {
    pub intersection: Lattice2,
    /// `Lambda'_e`, in the tail cusp plane.
    pub sublattice: Lattice2,
    /// `d_e`: degree of the cusp cover at the head end.
    pub head_degree: u64,
    /// `d_ebar`: degree at the tail end.
    pub tail_degree: u64,
    #[serde(with = "serde_rational")]
    pub delta: Rational,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct VertexPlan {
    pub covering: String,
    /// `d_v`.
    pub degree: u64,
    #[serde(with = "serde_rational")]
    pub potential: Rational,
    /// `n(v)`.
    pub copies: u64,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct RealizationPlan {
    pub scale: u64,
    pub vertices: BTreeMap<String, VertexPlan>,
    pub edges: BTreeMap<String, EdgePlan>,
}

impl RealizationPlan {
    /// Re-checks the arithmetic identities of the plan.
    pub fn check(&self, g: &NahGraph) -> Result<Report> {
        let mut report = Report::new();
        let b = Rational::from_integer(self.scale.into());
        for (v, p) in &self.vertices {
            let n = &b * &p.potential / Rational::from_integer(p.degree.into());
            if n != Rational::from_integer(p.copies.into()) || p.copies == 0 {
                report.push(format!("vertex {v}"), "copies", format!("n(v) = {n}, recorded {}", p.copies));
            }
        }
        for (id, p) in &self.edges {
            let e = g.edge(id)?;
            let subject = format!("edge {id}");
            if !p.sublattice.is_sublattice_of(&p.intersection) {
                report.push(&subject, "sublattice", "chosen lattice leaves the intersection");
            }
            let lhs = Rational::from_integer(p.head_degree.into()) * &p.delta;
            if lhs != Rational::from_integer(p.tail_degree.into()) {
                report.push(&subject, "degrees", format!("d_e delta_e = {lhs}, d_ebar = {}", p.tail_degree));
            }
            let (vh, vt) = (&self.vertices[&e.head], &self.vertices[&e.tail]);
            let ends_h = &b * &vh.potential / Rational::from_integer(p.head_degree.into());
            let ends_t = &b * &vt.potential / Rational::from_integer(p.tail_degree.into());
            if ends_h != ends_t || !ends_h.is_integer() {
                report.push(&subject, "end-counts", format!("{ends_h} head ends, {ends_t} tail ends"));
            }
        }
        Ok(report)
    }
}

/// Lattices every cusp of `M_v` over `(v, cusp)` must carry, in the cusp plane of `v`.
fn required_lattices(g: &NahGraph, sublattices: &BTreeMap<String, Lattice2>) -> Result<BTreeMap<(String, String), Lattice2>> {
    let mut out = BTreeMap::new();
    for (id, e) in &g.edges {
        let sub = &sublattices[id];
        let inv = e.label.inverse()?;
        out.insert((e.head.clone(), e.head_cusp.clone()), sub.image(&inv)?);
        out.insert((e.tail.clone(), e.tail_cusp.clone()), sub.clone());
    }
    Ok(out)
}

fn index_u64(sub: &Lattice2, sup: &Lattice2, what: &str) -> Result<u64> {
    integer_index(sub, sup)
        .and_then(|i| i.to_u64())
        .ok_or_else(|| Error::LatticeNotContained(what.to_string()))
}

fn lcm(a: u64, b: u64) -> u64 {
    num_integer::lcm(a, b)
}

/// Chosen `Lambda'_e`: the intersection, or a validated override.
fn sublattices(g: &NahGraph, overrides: &BTreeMap<String, Lattice2>) -> Result<BTreeMap<String, (Lattice2, Lattice2)>> {
    for id in overrides.keys() {
        g.edge(id)?;
    }
    let mut out = BTreeMap::new();
    for (id, e) in &g.edges {
        let inter = common_sublattice(g, id)?;
        let sub = match overrides.get(id) {
            None => inter.clone(),
            Some(s) => {
                if !s.is_sublattice_of(&inter) {
                    return Err(Error::LatticeNotContained(id.clone()));
                }
                let f = g.cusp_spec(&e.tail, &e.tail_cusp)?.symmetry();
                if !f.check(s).is_empty() {
                    return Err(Error::CoverMismatch(format!("sublattice of edge {id} is not invariant under the cusp symmetry")));
                }
                if e.is_same_cusp_loop() && s.image(&e.label.inverse()?)? != *s {
                    return Err(Error::CoverMismatch(format!("sublattice of loop {id} is not preserved by its label")));
                }
                s.clone()
            }
        };
        out.insert(id.clone(), (inter, sub));
    }
    Ok(out)
}

/// Synthetic covers `M_v -> N_v` realizing the given edge lattices (in tail
/// planes): cusps over `c` carry the required lattice, `d_v / d_c` of them.
/// Vertices needing no cover get none. The fragment passes `validate_catalog`
/// together with the catalog of `g`.
pub fn synthesize_covers(g: &NahGraph, plan_lattices: &BTreeMap<String, Lattice2>) -> Result<OrbifoldCatalog> {
    let overrides = plan_lattices.clone();
    let chosen = sublattices(g, &overrides)?;
    let subs: BTreeMap<String, Lattice2> = chosen.into_iter().map(|(k, (_, s))| (k, s)).collect();
    let skip = BTreeSet::new();
    let (fragment, _) = synthesize(g, &subs, &skip)?;
    Ok(fragment)
}

fn synthesize(
    g: &NahGraph,
    subs: &BTreeMap<String, Lattice2>,
    skip: &BTreeSet<String>,
) -> Result<(OrbifoldCatalog, BTreeMap<String, CoveringEntry>)> {
    let required = required_lattices(g, subs)?;
    let mut fragment = OrbifoldCatalog::new();
    fragment.note = Some(SYNTHETIC_NOTE.to_string());
    let mut covers = BTreeMap::new();
    for (v, orb) in &g.vertices {
        if skip.contains(v) {
            continue;
        }
        let base = g.catalog.orbifold(orb)?;
        let mut degrees = Vec::new();
        for c in &base.cusps {
            let lattice = required.get(&(v.clone(), c.id.clone())).unwrap_or(&c.lattice);
            degrees.push((c, lattice, index_u64(lattice, &c.lattice, &format!("{v}:{}", c.id))?));
        }
        let d_v = degrees.iter().fold(1, |acc, (_, _, d)| lcm(acc, *d));
        if d_v == 1 {
            covers.insert(v.clone(), identity_covering(base));
            continue;
        }
        let id = format!("{orb}@{v}");
        let mut cusps = Vec::new();
        let mut assignments = Vec::new();
        for (c, lattice, d) in degrees {
            for i in 0..d_v / d {
                let cid = format!("{}.{i}", c.id);
                cusps.push(CuspSpec { id: cid.clone(), degree: c.degree, lattice: lattice.clone(), symmetry: c.symmetry.clone() });
                assignments.push(CuspAssignment { source_cusp: cid, target_cusp: c.id.clone(), psi: Matrix2::identity() });
            }
        }
        let mut entry = crate::catalog::OrbifoldEntry::new(id.clone(), base.arithmetic, cusps);
        entry.synthetic = true;
        if entry.cusps.len() == base.cusps.len() && base.is_minimal {
            entry.is_minimal = false;
            let targets = entry.own_degrees();
            entry.minimal_quotients.push(crate::catalog::QuotientDecl { targets, covering: format!("{id}>{orb}") });
        }
        let cov = CoveringEntry {
            id: format!("{id}>{orb}"),
            source: id,
            target: orb.clone(),
            total_degree: d_v,
            cusp_assignments: assignments,
            synthetic: true,
        };
        fragment.add_orbifold(entry);
        fragment.add_covering(cov.clone());
        covers.insert(v.clone(), cov);
    }
    Ok((fragment, covers))
}

/// Checks a supplied cover against the lattices it must realize.
fn check_cover(g: &NahGraph, v: &str, cov: &CoveringEntry, required: &BTreeMap<(String, String), Lattice2>) -> Result<()> {
    let orb = g.orbifold_of(v)?;
    if cov.target != orb {
        return Err(Error::CoverMismatch(format!("cover {} of vertex {v} does not end at {orb}", cov.id)));
    }
    let source = g.catalog.orbifold(&cov.source)?;
    let report = validate_covering(cov, source, g.catalog.orbifold(orb)?);
    if !report.is_empty() {
        return Err(Error::CoverMismatch(format!("cover {} of vertex {v}:\n{report}", cov.id)));
    }
    for a in &cov.cusp_assignments {
        let lattice = source.cusp(&a.source_cusp).expect("validated").lattice.image(&a.psi)?;
        if let Some(want) = required.get(&(v.to_string(), a.target_cusp.clone())) {
            if lattice != *want {
                return Err(Error::CoverMismatch(format!(
                    "cusp {} of cover {} maps to {:?}, edge lattice is {:?}",
                    a.source_cusp, cov.id, lattice.basis().to_strings(), want.basis().to_strings()
                )));
            }
        }
    }
    Ok(())
}

/// Plan plus the covers it uses, keyed by vertex.
pub fn plan(
    g: &NahGraph,
    covers: &BTreeMap<String, String>,
    overrides: &BTreeMap<String, Lattice2>,
) -> Result<(RealizationPlan, OrbifoldCatalog, BTreeMap<String, CoveringEntry>)> {
    validate(g).into_result("graph")?;
    let bal = balanced(g)?;
    let Some(potential) = bal.potential else {
        let (e, p) = bal.witness.expect("unbalanced graphs carry a witness");
        return Err(Error::Unbalanced(format!("cycle through edge {e} has product {p}")));
    };
    let chosen = sublattices(g, overrides)?;
    let subs: BTreeMap<String, Lattice2> = chosen.iter().map(|(k, (_, s))| (k.clone(), s.clone())).collect();
    let required = required_lattices(g, &subs)?;
    let mut supplied = BTreeMap::new();
    for (v, id) in covers {
        g.orbifold_of(v)?;
        let cov = g.catalog.covering(id)?;
        check_cover(g, v, &cov, &required)?;
        supplied.insert(v.clone(), cov);
    }
    let skip: BTreeSet<String> = supplied.keys().cloned().collect();
    let (fragment, mut all) = synthesize(g, &subs, &skip)?;
    all.extend(supplied);

    let ratios: Vec<Rational> = g
        .vertices
        .keys()
        .map(|v| &potential[v] / Rational::from_integer(all[v].total_degree.into()))
        .collect();
    let b: BigInt = lcm_denominators(&ratios);
    let scale = b.to_u64().ok_or(Error::TooLarge { size: usize::MAX, limit: MAX_PIECES as usize })?;
    let mut vertices = BTreeMap::new();
    let mut pieces = 0u64;
    for (v, r) in g.vertices.keys().zip(&ratios) {
        let n = (r * Rational::from_integer(b.clone())).to_integer().to_u64().unwrap_or(u64::MAX);
        pieces = pieces.saturating_add(n);
        vertices.insert(
            v.clone(),
            VertexPlan { covering: all[v].id.clone(), degree: all[v].total_degree, potential: potential[v].clone(), copies: n },
        );
    }
    if pieces > MAX_PIECES {
        return Err(Error::TooLarge { size: pieces.try_into().unwrap_or(usize::MAX), limit: MAX_PIECES as usize });
    }
    let mut edges = BTreeMap::new();
    for (id, (inter, sub)) in chosen {
        let e = g.edge(&id)?;
        let head = g.cusp_spec(&e.head, &e.head_cusp)?;
        let tail = g.cusp_spec(&e.tail, &e.tail_cusp)?;
        let head_degree = index_u64(&required[&(e.head.clone(), e.head_cusp.clone())], &head.lattice, &id)?;
        let tail_degree = index_u64(&sub, &tail.lattice, &id)?;
        let delta = delta(g, &DirectedEdge::forward(id.clone()))?;
        edges.insert(id, EdgePlan { intersection: inter, sublattice: sub, head_degree, tail_degree, delta });
    }
    Ok((RealizationPlan { scale, vertices, edges }, fragment, all))
}

/// Output of [`realize`].
#[derive(Clone, Debug)]
pub struct Realization {
    pub graph: NahGraph,
    pub manifest: GluingManifest,
    /// Morphism from `graph` to `minimize(g)`.
    pub morphism: GraphMorphism,
    pub minimal: NahGraph,
    pub plan: RealizationPlan,
    /// Synthesized covers, marked with [`SYNTHETIC_NOTE`].
    pub fragment: OrbifoldCatalog,
}

/// One cusp of one copy, with the tangent map of its cover.
#[derive(Clone, Debug)]
struct Slot {
    piece: String,
    cusp: String,
    psi: Matrix2,
}

struct Components {
    parent: Vec<usize>,
}

impl Components {
    fn find(&mut self, x: usize) -> usize {
        if self.parent[x] != x {
            let r = self.find(self.parent[x]);
            self.parent[x] = r;
        }
        self.parent[x]
    }

    fn union(&mut self, a: usize, b: usize) {
        let (ra, rb) = (self.find(a), self.find(b));
        self.parent[ra] = rb;
    }
}

/// Edges of `g` in spanning-tree-first order.
fn edge_order(g: &NahGraph) -> Vec<String> {
    let mut order = Vec::new();
    let mut seen = BTreeSet::new();
    let mut used = BTreeSet::new();
    if let Some(root) = g.vertices.keys().next() {
        seen.insert(root.clone());
        let mut queue = VecDeque::from([root.clone()]);
        while let Some(v) = queue.pop_front() {
            for d in g.out_edges(&v) {
                let w = g.tail(&d).expect("valid graph").to_string();
                if seen.insert(w.clone()) {
                    used.insert(d.edge.clone());
                    order.push(d.edge.clone());
                    queue.push_back(w);
                }
            }
        }
    }
    order.extend(g.edges.keys().filter(|e| !used.contains(*e)).cloned());
    order
}

fn count_components(pieces: &BTreeMap<String, usize>, pairs: &[(String, Slot, Slot)]) -> usize {
    let mut uf = Components { parent: (0..pieces.len()).collect() };
    for (_, a, b) in pairs {
        uf.union(pieces[&a.piece], pieces[&b.piece]);
    }
    (0..pieces.len()).filter(|&i| uf.find(i) == i).count()
}

/// Realizes a balanced graph: an integral graph, its manifest and a morphism to
/// the minimal graph of `g`. `covers` names catalog coverings for some vertices;
/// the rest are synthesized.
pub fn realize(g: &NahGraph, covers: &BTreeMap<String, String>) -> Result<Realization> {
    realize_with(g, covers, &BTreeMap::new())
}

pub fn realize_with(g: &NahGraph, covers: &BTreeMap<String, String>, overrides: &BTreeMap<String, Lattice2>) -> Result<Realization> {
    let (plan, fragment, coverings) = plan(g, covers, overrides)?;
    let mut catalog = (*g.catalog).clone();
    catalog.merge(&fragment);
    let catalog = Arc::new(catalog);

    let mut out = NahGraph::new(catalog);
    let mut to_g = GraphMorphism { vertex_map: BTreeMap::new(), edge_map: BTreeMap::new(), vertex_coverings: BTreeMap::new() };
    let mut piece_index = BTreeMap::new();
    let mut ends: BTreeMap<(String, String), Vec<Slot>> = BTreeMap::new();
    for (v, p) in &plan.vertices {
        let cov = &coverings[v];
        for k in 0..p.copies {
            let piece = format!("{v}.{k}");
            piece_index.insert(piece.clone(), piece_index.len());
            out.add_vertex(piece.clone(), cov.source.clone());
            to_g.vertex_map.insert(piece.clone(), v.clone());
            to_g.vertex_coverings.insert(piece.clone(), cov.clone());
            for a in &cov.cusp_assignments {
                ends.entry((v.clone(), a.target_cusp.clone())).or_default().push(Slot {
                    piece: piece.clone(),
                    cusp: a.source_cusp.clone(),
                    psi: a.psi.clone(),
                });
            }
        }
    }

    let mut uf = Components { parent: (0..piece_index.len()).collect() };
    let mut pairs: Vec<(String, Slot, Slot)> = Vec::new();
    for id in edge_order(g) {
        let e = g.edge(&id)?;
        let mut heads = ends.remove(&(e.head.clone(), e.head_cusp.clone())).unwrap_or_default();
        let mut tails = if e.is_same_cusp_loop() {
            Vec::new()
        } else {
            ends.remove(&(e.tail.clone(), e.tail_cusp.clone())).unwrap_or_default()
        };
        heads.reverse();
        while let Some(a) = heads.pop() {
            let pool = if e.is_same_cusp_loop() { &mut heads } else { &mut tails };
            if pool.is_empty() {
                // odd count on a same-cusp loop: close the last end on itself
                pairs.push((id.clone(), a.clone(), a));
                continue;
            }
            let ra = uf.find(piece_index[&a.piece]);
            let mut choice = pool.len() - 1;
            for (i, s) in pool.iter().enumerate().rev() {
                if uf.find(piece_index[&s.piece]) != ra {
                    choice = i;
                    break;
                }
            }
            let b = pool.remove(choice);
            uf.union(piece_index[&a.piece], piece_index[&b.piece]);
            pairs.push((id.clone(), a, b));
        }
        if !tails.is_empty() {
            return Err(Error::CoverMismatch(format!("edge {id}: end counts differ")));
        }
    }
    connect(&piece_index, &mut pairs);
    if count_components(&piece_index, &pairs) > 1 {
        return Err(Error::Invalid {
            what: "realization".into(),
            report: {
                let mut r = Report::new();
                r.push("pairing", "connected", "no exchange of matched ends connects the pieces");
                r
            },
        });
    }

    for (j, (id, a, b)) in pairs.iter().enumerate() {
        let e = g.edge(id)?;
        let label = &(&b.psi.inverse()? * &e.label) * &a.psi;
        let eid = format!("{id}.{j}");
        out.add_edge(eid.clone(), Edge::new(&a.piece, &a.cusp, &b.piece, &b.cusp, label));
        to_g.edge_map.insert(eid, DirectedEdge::forward(id.clone()));
    }
    let (minimal, to_min) = minimize(g)?;
    let morphism = compose_morphisms(&to_g, &to_min)?;
    let manifest = to_manifest(&out)?;
    Ok(Realization { graph: out, manifest, morphism, minimal, plan, fragment })
}

/// Exchanges partners of two lifts of the same edge while that lowers the
/// number of components.
fn connect(pieces: &BTreeMap<String, usize>, pairs: &mut [(String, Slot, Slot)]) {
    let mut current = count_components(pieces, pairs);
    'outer: while current > 1 {
        for i in 0..pairs.len() {
            for j in i + 1..pairs.len() {
                if pairs[i].0 != pairs[j].0 {
                    continue;
                }
                let (bi, bj) = (pairs[i].2.clone(), pairs[j].2.clone());
                pairs[i].2 = bj.clone();
                pairs[j].2 = bi.clone();
                let next = count_components(pieces, pairs);
                if next < current {
                    current = next;
                    continue 'outer;
                }
                pairs[i].2 = bi;
                pairs[j].2 = bj;
            }
        }
        return;
    }
}
