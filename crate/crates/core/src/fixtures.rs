//! Seeded generators of catalogs, graphs and morphisms for tests, examples and
//! `qigraph generate`.

use std::collections::{BTreeMap, BTreeSet};
use std::sync::Arc;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::catalog::{CoveringEntry, CuspAssignment, CuspSpec, OrbifoldCatalog, OrbifoldEntry, QuotientDecl};
use crate::graph::{validate, DirectedEdge, Edge, NahGraph};
use crate::hgraph::{validate_h, Color, FiberType, HGraph, MixedEdge, SeifertEdge, SeifertLabel};
use crate::linear::{ratio, CyclicSymmetry, Lattice2, Matrix2, Rational, Vector2};
use crate::morphism::GraphMorphism;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn torus_cusps(n: usize) -> Vec<CuspSpec> {
    (0..n).map(|i| CuspSpec::torus(format!("c{i}"))).collect()
}

fn entry(id: &str, arithmetic: bool, cusps: Vec<CuspSpec>, minimal: bool) -> OrbifoldEntry {
    let mut e = OrbifoldEntry::new(id, arithmetic, cusps);
    e.is_minimal = minimal;
    e
}

fn covering(id: &str, source: &str, target: &str, degree: u64, parts: &[(&str, &str, Matrix2)]) -> CoveringEntry {
    CoveringEntry {
        id: id.into(),
        source: source.into(),
        target: target.into(),
        total_degree: degree,
        cusp_assignments: parts
            .iter()
            .map(|(s, t, psi)| CuspAssignment { source_cusp: (*s).into(), target_cusp: (*t).into(), psi: psi.clone() })
            .collect(),
        synthetic: false,
    }
}

fn quotient(e: &mut OrbifoldEntry, covering: &str) {
    let targets = e.own_degrees();
    e.minimal_quotients.push(QuotientDecl { targets, covering: covering.into() });
}

/// The catalog all generated graphs refer to.
///
/// * `N1`..`N3`: minimal non-arithmetic, 1-3 torus cusps. `A1`, `A2`: arithmetic.
/// * `R2`, `R3`, `R4`, `R6`: one cusp of orbifold degree 2, 3, 4, 6.
/// * `M1`, `M2`, `M2s`, `MR2`: double covers keeping the cusp count, with minimal
///   quotients `N1`, `N2`, `N2`, `R2`. `P1` double covers `M1`.
/// * `S1`, `S2`: minimal covers of `N1`, `N2` with more cusps.
/// * `N1b`: an isometric copy of `N1` under a shear.
pub fn fixture_catalog() -> OrbifoldCatalog {
    let mut cat = OrbifoldCatalog::new();
    let d21 = Matrix2::ints(2, 0, 0, 1);
    let d12 = Matrix2::ints(1, 0, 0, 2);
    let id = Matrix2::identity();
    for n in 1..=3 {
        cat.add_orbifold(entry(&format!("N{n}"), false, torus_cusps(n), true));
    }
    cat.add_orbifold(entry("A1", true, torus_cusps(1), true));
    cat.add_orbifold(entry("A2", true, torus_cusps(2), true));
    for k in [2u32, 3, 4, 6] {
        cat.add_orbifold(entry(&format!("R{k}"), false, vec![CuspSpec::new("c0", k, Lattice2::standard())], true));
    }

    let mut m1 = entry("M1", false, torus_cusps(1), false);
    quotient(&mut m1, "M1>N1");
    cat.add_orbifold(m1);
    cat.add_covering(covering("M1>N1", "M1", "N1", 2, &[("c0", "c0", d21.clone())]));

    let mut m2 = entry("M2", false, torus_cusps(2), false);
    quotient(&mut m2, "M2>N2");
    cat.add_orbifold(m2);
    cat.add_covering(covering("M2>N2", "M2", "N2", 2, &[("c0", "c0", d12.clone()), ("c1", "c1", d21.clone())]));

    let mut m2s = entry("M2s", false, torus_cusps(2), false);
    quotient(&mut m2s, "M2s>N2");
    cat.add_orbifold(m2s);
    cat.add_covering(covering("M2s>N2", "M2s", "N2", 2, &[("c0", "c0", d21.clone()), ("c1", "c1", d21.clone())]));

    let mut mr2 = entry("MR2", false, vec![CuspSpec::new("c0", 2, Lattice2::standard())], false);
    quotient(&mut mr2, "MR2>R2");
    cat.add_orbifold(mr2);
    cat.add_covering(covering("MR2>R2", "MR2", "R2", 2, &[("c0", "c0", d21.clone())]));

    let mut p1 = entry("P1", false, torus_cusps(1), false);
    quotient(&mut p1, "P1>N1");
    cat.add_orbifold(p1);
    cat.add_covering(covering("P1>M1", "P1", "M1", 2, &[("c0", "c0", d12.clone())]));
    cat.add_covering(covering("P1>N1", "P1", "N1", 4, &[("c0", "c0", Matrix2::ints(2, 0, 0, 2))]));

    cat.add_orbifold(entry("S1", false, torus_cusps(2), true));
    cat.add_covering(covering("S1>N1", "S1", "N1", 2, &[("c0", "c0", id.clone()), ("c1", "c0", id.clone())]));
    cat.add_orbifold(entry("S2", false, torus_cusps(3), true));
    cat.add_covering(covering(
        "S2>N2",
        "S2",
        "N2",
        2,
        &[("c0", "c0", id.clone()), ("c1", "c0", id.clone()), ("c2", "c1", d21.clone())],
    ));

    cat.add_orbifold(entry("N1b", false, torus_cusps(1), true));
    cat.add_covering(covering("N1b>N1", "N1b", "N1", 1, &[("c0", "c0", Matrix2::ints(1, 1, 0, 1))]));
    cat
}

/// A random element of `GL2(Z)` with the given determinant sign.
pub fn random_unimodular<R: Rng>(rng: &mut R, det: i64) -> Matrix2 {
    let mut m = Matrix2::identity();
    for _ in 0..rng.gen_range(0..4) {
        let k = rng.gen_range(-2..=2);
        let step = if rng.gen_bool(0.5) { Matrix2::ints(1, k, 0, 1) } else { Matrix2::ints(1, 0, k, 1) };
        m = &m * &step;
    }
    if det < 0 {
        m = &m * &Matrix2::ints(1, 0, 0, -1);
    }
    m
}

pub fn random_rational<R: Rng>(rng: &mut R) -> Rational {
    ratio(rng.gen_range(1..=4), rng.gen_range(1..=3))
}

/// How edge labels are drawn.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum LabelMode {
    /// Any valid label; cycles are usually unbalanced.
    Random,
    /// Labels consistent with a random potential.
    Balanced,
    /// Lattice isomorphisms.
    Integral,
}

#[derive(Clone, Debug)]
pub struct GraphOptions {
    pub max_vertices: usize,
    pub max_edges: usize,
    pub mode: LabelMode,
    /// Orbifold ids vertices are labelled with.
    pub pool: Vec<String>,
}

impl GraphOptions {
    pub fn new(max_vertices: usize, max_edges: usize, mode: LabelMode) -> Self {
        GraphOptions {
            max_vertices,
            max_edges,
            mode,
            pool: ["N1", "N2", "N3", "A1", "A2", "R2", "R4", "R3", "R6", "M1", "M2", "S1", "N1b"]
                .map(String::from)
                .to_vec(),
        }
    }
}

/// Orientation-reversing element normalizing the standard rotation of order `k`.
fn reflection(k: u32) -> Matrix2 {
    match k {
        4 => Matrix2::ints(1, 0, 0, -1),
        _ => Matrix2::ints(0, 1, 1, 0),
    }
}

/// A valid label between two `Z^2` cusps of degree `k` with `delta = lambda^2`
/// (for `k >= 3`) or an arbitrary `delta` (for `k <= 2`).
fn label_with_delta<R: Rng>(rng: &mut R, k: u32, delta: &Rational, root: &Rational, integral: bool) -> Matrix2 {
    if k >= 3 {
        let g = CyclicSymmetry::standard(k).expect("allowed order").generator;
        let base = &reflection(k) * &g.pow(rng.gen_range(0..k));
        return base.scale(root);
    }
    let u = random_unimodular(rng, -1);
    if integral {
        return u;
    }
    let a = random_rational(rng);
    let diag = Matrix2::new(a.clone(), Rational::from_integer(0.into()), Rational::from_integer(0.into()), delta / &a);
    &(&random_unimodular(rng, 1) * &diag) * &u
}

/// A random valid NAH-graph with `Z^2` cusp lattices. Retries until the cusp
/// degrees pair up and the result is connected and valid.
pub fn random_graph<R: Rng>(rng: &mut R, catalog: &Arc<OrbifoldCatalog>, opts: &GraphOptions) -> NahGraph {
    loop {
        if let Some(g) = try_random_graph(rng, catalog, opts) {
            return g;
        }
    }
}

fn try_random_graph<R: Rng>(rng: &mut R, catalog: &Arc<OrbifoldCatalog>, opts: &GraphOptions) -> Option<NahGraph> {
    let n = rng.gen_range(1..=opts.max_vertices);
    let mut g = NahGraph::new(catalog.clone());
    let mut ends: BTreeMap<u32, Vec<(String, String)>> = BTreeMap::new();
    for i in 0..n {
        let orb = opts.pool.choose(rng)?;
        let entry = catalog.orbifold(orb).ok()?;
        let v = format!("v{i}");
        for c in &entry.cusps {
            ends.entry(c.degree).or_default().push((v.clone(), c.id.clone()));
        }
        g.add_vertex(v, orb.clone());
    }
    let total: usize = ends.values().map(Vec::len).sum();
    if total > 2 * opts.max_edges + 2 {
        return None;
    }
    // potential: squares of random rationals so every ratio is a square
    let roots: BTreeMap<String, Rational> = g.vertices.keys().map(|v| (v.clone(), random_rational(rng))).collect();
    let mut edge_no = 0;
    for (k, mut list) in ends {
        list.shuffle(rng);
        while let Some(a) = list.pop() {
            // an unmatched end, or by chance, becomes a same-cusp loop
            let b = if list.is_empty() || rng.gen_bool(0.08) { a.clone() } else { list.pop()? };
            let same = a == b;
            let (root, delta) = match opts.mode {
                LabelMode::Integral => (Rational::from_integer(1.into()), Rational::from_integer(1.into())),
                _ if same => (Rational::from_integer(1.into()), Rational::from_integer(1.into())),
                LabelMode::Balanced => {
                    let r = &roots[&b.0] / &roots[&a.0];
                    (r.clone(), &r * &r)
                }
                LabelMode::Random => {
                    let r = random_rational(rng);
                    (r.clone(), &r * &r)
                }
            };
            let label = if same {
                self_inverse_label(rng, k)
            } else {
                label_with_delta(rng, k, &delta, &root, opts.mode == LabelMode::Integral)
            };
            g.add_edge(format!("e{edge_no}"), Edge::new(&a.0, &a.1, &b.0, &b.1, label));
            edge_no += 1;
        }
    }
    if g.edges.len() > opts.max_edges || !validate(&g).is_empty() {
        return None;
    }
    Some(g)
}

/// An orientation-reversing involution up to the cusp symmetry of order `k`.
fn self_inverse_label<R: Rng>(rng: &mut R, k: u32) -> Matrix2 {
    if k >= 3 {
        return reflection(k);
    }
    let u = random_unimodular(rng, 1);
    let r = Matrix2::ints(0, 1, 1, 0);
    &(&u * &r) * &u.inverse().expect("unimodular")
}

/// Coverings onto `target` that keep the cusps in bijection, identity included.
fn bijective_covers(catalog: &OrbifoldCatalog, target: &str) -> Vec<CoveringEntry> {
    let mut out = vec![crate::catalog::identity_covering(catalog.orbifold(target).expect("known label"))];
    for c in catalog.coverings.values() {
        let images: BTreeSet<&String> = c.cusp_assignments.iter().map(|a| &a.target_cusp).collect();
        if c.target == target && images.len() == c.cusp_assignments.len() {
            out.push(c.clone());
        }
    }
    out
}

/// A random graph `src` with a morphism `src -> g`: every vertex of `g` gets
/// `copies` lifts labelled by covers of its label, every edge lifts along a
/// random matching, and the component of the first lift is kept.
pub fn random_lift<R: Rng>(rng: &mut R, g: &NahGraph, copies: usize) -> (NahGraph, GraphMorphism) {
    let cat = &g.catalog;
    let mut src = NahGraph::new(cat.clone());
    let mut vertex_map = BTreeMap::new();
    let mut coverings: BTreeMap<String, CoveringEntry> = BTreeMap::new();
    for (w, orb) in &g.vertices {
        let options = bijective_covers(cat, orb);
        for k in 0..copies {
            let v = format!("{w}.{k}");
            let cov = options.choose(rng).expect("identity is always available").clone();
            src.add_vertex(v.clone(), cov.source.clone());
            vertex_map.insert(v.clone(), w.clone());
            coverings.insert(v, cov);
        }
    }
    let preimage = |cov: &CoveringEntry, t: &str| -> (String, Matrix2) {
        let a = cov.cusp_assignments.iter().find(|a| a.target_cusp == t).expect("bijective cover");
        (a.source_cusp.clone(), a.psi.clone())
    };
    let mut edge_map = BTreeMap::new();
    for (id, e) in &g.edges {
        let mut sigma: Vec<usize> = (0..copies).collect();
        sigma.shuffle(rng);
        if e.is_same_cusp_loop() {
            sigma = involution(rng, copies);
        }
        for k in 0..copies {
            let j = sigma[k];
            if e.is_same_cusp_loop() && j < k {
                continue;
            }
            let h = format!("{}.{k}", e.head);
            let t = format!("{}.{j}", e.tail);
            let (hc, psi_h) = preimage(&coverings[&h], &e.head_cusp);
            let (tc, psi_t) = preimage(&coverings[&t], &e.tail_cusp);
            let mut label = &(&psi_t.inverse().expect("covering") * &e.label) * &psi_h;
            let f = src.catalog.cusp(&coverings[&h].source, &hc).expect("known cusp").symmetry();
            let elements = f.elements();
            label = &label * elements.choose(rng).expect("nonempty group");
            let eid = format!("{id}.{k}");
            src.add_edge(eid.clone(), Edge::new(&h, &hc, &t, &tc, label));
            edge_map.insert(eid, DirectedEdge::forward(id.clone()));
        }
    }
    let keep = src.component_of(src.vertices.keys().next().expect("nonempty"));
    src.vertices.retain(|v, _| keep.contains(v));
    src.edges.retain(|_, e| keep.contains(&e.head));
    edge_map.retain(|e, _| src.edges.contains_key(e));
    vertex_map.retain(|v, _| keep.contains(v));
    coverings.retain(|v, _| keep.contains(v));
    (src, GraphMorphism { vertex_map, edge_map, vertex_coverings: coverings })
}

/// A random involution of `0..n`.
fn involution<R: Rng>(rng: &mut R, n: usize) -> Vec<usize> {
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(rng);
    let mut sigma: Vec<usize> = (0..n).collect();
    let mut i = 0;
    while i + 1 < n {
        if rng.gen_bool(0.7) {
            sigma[order[i]] = order[i + 1];
            sigma[order[i + 1]] = order[i];
            i += 2;
        } else {
            i += 1;
        }
    }
    sigma
}

/// A random nonzero rational vector.
pub fn random_slope<R: Rng>(rng: &mut R) -> Vector2 {
    loop {
        let x = ratio(rng.gen_range(-3..=3), rng.gen_range(1..=2));
        let y = ratio(rng.gen_range(-3..=3), rng.gen_range(1..=2));
        let v = Vector2::new(x, y);
        if !v.is_zero() {
            return v;
        }
    }
}

/// A random valid H-graph: a random NAH-graph with some edges cut open and
/// routed through Seifert vertices, plus Seifert-Seifert edges.
pub fn random_h_graph<R: Rng>(rng: &mut R, catalog: &Arc<OrbifoldCatalog>, opts: &GraphOptions) -> HGraph {
    loop {
        let g = random_graph(rng, catalog, opts);
        let mut h = HGraph::from_nah(g.clone());
        let nseifert = rng.gen_range(1..=3);
        let seifert: Vec<String> = (0..nseifert).map(|i| format!("s{i}")).collect();
        for s in &seifert {
            let color = if rng.gen_bool(0.5) { Color::Black } else { Color::White };
            let fiber_type = if rng.gen_bool(0.5) { FiberType::O } else { FiberType::N };
            h.seifert.insert(s.clone(), SeifertLabel::new(color, fiber_type));
        }
        for (id, e) in &g.edges {
            let degree = g.cusp_spec(&e.head, &e.head_cusp).map(|c| c.degree).unwrap_or(0);
            if degree > 2 || !rng.gen_bool(0.5) {
                continue;
            }
            h.hyperbolic.edges.remove(id);
            let ends: Vec<(&String, &String)> = if e.is_same_cusp_loop() {
                vec![(&e.head, &e.head_cusp)]
            } else {
                vec![(&e.head, &e.head_cusp), (&e.tail, &e.tail_cusp)]
            };
            for (k, (v, c)) in ends.into_iter().enumerate() {
                let s = seifert.choose(rng).expect("nonempty").clone();
                if degree == 2 {
                    h.seifert.get_mut(&s).expect("listed").fiber_type = FiberType::N;
                }
                let mid = format!("{id}.{k}");
                h.mixed.insert(mid, MixedEdge { hyperbolic: v.clone(), cusp: c.clone(), seifert: s, slope: random_slope(rng) });
            }
        }
        for i in 0..rng.gen_range(0..=nseifert) {
            let a = seifert.choose(rng).expect("nonempty").clone();
            let b = seifert.choose(rng).expect("nonempty").clone();
            let both_n = h.seifert[&a].fiber_type == FiberType::N && h.seifert[&b].fiber_type == FiberType::N;
            h.seifert_edges.insert(format!("t{i}"), SeifertEdge { a, b, symmetric: both_n && rng.gen_bool(0.5) });
        }
        for id in h.edge_ids() {
            if h.carries_sign(&id) {
                h.signs.insert(id, if rng.gen_bool(0.5) { 1 } else { -1 });
            }
        }
        if validate_h(&h).is_empty() {
            return h;
        }
    }
}
