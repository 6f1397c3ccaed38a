//! Acceptance suite: one line per criterion, nonzero exit on any failure.

mod common;

use std::collections::{BTreeMap, BTreeSet};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::{Path, PathBuf};
use std::sync::Arc;
use std::time::{Duration, Instant};

use num_traits::{One, Signed};
use qigraph::cover::{find_common_cover, validate_typed, verify_covering, CommonCover, TypedGraph};
use qigraph::fixtures::{fixture_catalog, random_graph, random_h_graph, random_lift, rng, GraphOptions, LabelMode};
use qigraph::graph::{balanced, is_balanced, is_integral, validate, DirectedEdge, Edge, NahGraph};
use qigraph::hgraph::{
    h_canonical_moves, h_isomorphic, minimize_h, validate_h, verify_h_morphism, Color, FiberType, HGraph, MixedEdge,
    SeifertEdge, SeifertLabel,
};
use qigraph::io;
use qigraph::linear::{integer_index, lattice_index, lattice_intersect, ratio, Lattice2, Matrix2, Rational, Vector2};
use qigraph::minimize::{bisimilar, brute_force_minimize, minimize};
use qigraph::morphism::{check_balance_transfer, compose_morphisms, verify_morphism, GraphMorphism};
use qigraph::realize::realize;
use rand::seq::SliceRandom;
use rand::Rng;

use common::*;

type Outcome = Result<String, String>;

macro_rules! ensure {
    ($cond:expr, $($msg:tt)+) => {
        if !$cond {
            return Err(format!($($msg)+));
        }
    };
}

fn catalog() -> Arc<qigraph::catalog::OrbifoldCatalog> {
    Arc::new(fixture_catalog())
}

fn oriented(g: &NahGraph, d: &DirectedEdge) -> Edge {
    let e = g.edges[&d.edge].clone();
    if !d.reversed {
        return e;
    }
    Edge::new(&e.tail, &e.tail_cusp, &e.head, &e.head_cusp, e.label.inverse().unwrap())
}

fn balanced_agreement() -> Outcome {
    let cat = catalog();
    let mut r = rng(1);
    let (mut yes, mut no) = (0, 0);
    for i in 0..1000 {
        let mode = if i % 2 == 0 { LabelMode::Random } else { LabelMode::Balanced };
        let g = random_graph(&mut r, &cat, &GraphOptions::new(8, 12, mode));
        ensure!(g.vertices.len() <= 8 && g.edges.len() <= 12, "generator exceeded its bounds");
        let b = balanced(&g).map_err(|e| e.to_string())?;
        let expected = balanced_oracle(&g);
        ensure!(b.balanced == expected, "graph {i}: balanced() = {}, cycle products say {expected}", b.balanced);
        if let Some(m) = &b.potential {
            for e in g.edges.values() {
                ensure!(&m[&e.tail] == &(delta_of(&g, e) * &m[&e.head]), "graph {i}: potential fails on an edge");
            }
            yes += 1;
        } else {
            no += 1;
        }
    }
    ensure!(yes > 100 && no > 100, "too one-sided: {yes} balanced, {no} unbalanced");
    Ok(format!("{yes} balanced, {no} unbalanced"))
}

fn integral_implies_balanced() -> Outcome {
    let cat = catalog();
    let mut r = rng(2);
    for i in 0..500 {
        let g = random_graph(&mut r, &cat, &GraphOptions::new(8, 12, LabelMode::Integral));
        ensure!(is_integral(&g).unwrap(), "graph {i} is not integral");
        ensure!(is_balanced(&g).unwrap(), "integral graph {i} is unbalanced");
        ensure!(balanced_oracle(&g), "oracle: integral graph {i} is unbalanced");
    }
    Ok("500 graphs".into())
}

fn transfer_checked(src: &NahGraph, dst: &NahGraph, m: &GraphMorphism) -> Result<(), String> {
    let report = verify_morphism(src, dst, m);
    ensure!(report.is_empty(), "morphism does not verify:\n{report}");
    ensure!(balanced_oracle(src), "source is unbalanced");
    ensure!(is_balanced(dst).unwrap() && balanced_oracle(dst), "target is unbalanced");
    let degree = |g: &NahGraph, h: &NahGraph, v: &str, cusp: &str, img: &str, img_cusp: &str| {
        let psi = &m.vertex_coverings[v].assignment(cusp).unwrap().psi;
        let s = g.catalog.cusp(&g.vertices[v], cusp).unwrap();
        let t = h.catalog.cusp(&h.vertices[img], img_cusp).unwrap();
        cusp_degree(psi, &s.lattice, s.degree, &t.lattice, t.degree)
    };
    for t in check_balance_transfer(src, dst, m).map_err(|e| e.to_string())? {
        ensure!(t.holds, "transfer fails on {:?}", t.edge);
        let e = oriented(src, &t.edge);
        let f = oriented(dst, &t.image);
        let d_e = degree(src, dst, &e.head, &e.head_cusp, &f.head, &f.head_cusp);
        let d_ebar = degree(src, dst, &e.tail, &e.tail_cusp, &f.tail, &f.tail_cusp);
        let (de, df) = (delta_of(src, &e), delta_of(dst, &f));
        ensure!(&d_e * &df == &de * &d_ebar, "oracle: d_e delta' != delta d_ebar on {:?}", t.edge);
        ensure!(t.d_e == d_e && t.d_ebar == d_ebar && t.delta_e == de && t.delta_image == df, "transfer values differ from the oracle");
    }
    Ok(())
}

fn morphisms_preserve_balance() -> Outcome {
    let cat = catalog();
    let mut r = rng(3);
    let mut nontrivial = 0;
    for i in 0..300 {
        let g = random_graph(&mut r, &cat, &GraphOptions::new(5, 8, LabelMode::Balanced));
        let (src, dst, m) = match i % 3 {
            0 => {
                let copies = r.gen_range(2..=3);
                let (lift, m) = random_lift(&mut r, &g, copies);
                (lift, g, m)
            }
            1 => {
                let (q, m) = minimize(&g).map_err(|e| e.to_string())?;
                (g, q, m)
            }
            _ => {
                let (lift, up) = random_lift(&mut r, &g, 2);
                let (q, down) = minimize(&g).map_err(|e| e.to_string())?;
                let m = compose_morphisms(&up, &down).map_err(|e| e.to_string())?;
                (lift, q, m)
            }
        };
        if m.vertex_coverings.values().any(|c| c.total_degree > 1) {
            nontrivial += 1;
        }
        transfer_checked(&src, &dst, &m).map_err(|e| format!("morphism {i}: {e}"))?;
    }
    ensure!(nontrivial > 30, "only {nontrivial} morphisms use a proper covering");
    Ok(format!("300 morphisms, {nontrivial} with proper coverings"))
}

fn minimization_suite() -> Outcome {
    let cat = catalog();
    let mut r = rng(4);
    let mut small = 0;
    for i in 0..260 {
        let mode = [LabelMode::Random, LabelMode::Balanced, LabelMode::Integral][i % 3];
        let g = random_graph(&mut r, &cat, &GraphOptions::new(5, 7, mode));
        let (q, m) = minimize(&g).map_err(|e| e.to_string())?;
        ensure!(verify_morphism(&g, &q, &m).is_empty(), "graph {i}: minimize morphism does not verify");
        let (qq, _) = minimize(&q).map_err(|e| e.to_string())?;
        ensure!(nah_isomorphic(&q, &qq), "graph {i}: minimize is not idempotent");
        if g.vertices.len() <= 5 {
            let brute = brute_force_minimize(&g, 5).map_err(|e| e.to_string())?;
            ensure!(nah_isomorphic(&brute, &q), "graph {i}: brute force finds a different minimal graph");
            small += 1;
        }
    }
    ensure!(small >= 200, "only {small} graphs with at most 5 vertices");
    for i in 0..100 {
        let c = random_graph(&mut r, &cat, &GraphOptions::new(3, 5, LabelMode::Random));
        let (b, bc) = random_lift(&mut r, &c, 2);
        let (a, ab) = random_lift(&mut r, &b, 2);
        let ac = compose_morphisms(&ab, &bc).map_err(|e| e.to_string())?;
        ensure!(verify_morphism(&a, &c, &ac).is_empty(), "chain {i}: composite does not verify");
        let (ma, mc) = (minimize(&a).unwrap().0, minimize(&c).unwrap().0);
        ensure!(nah_isomorphic(&ma, &mc), "chain {i}: endpoints minimize differently");
        ensure!(nah_isomorphic(&minimize(&b).unwrap().0, &mc), "chain {i}: middle minimizes differently");
    }
    Ok(format!("{small} brute-force comparisons, 100 chains"))
}

fn contained(sub: &Lattice2, sup: &Lattice2) -> bool {
    let inv = sup.basis().inverse().unwrap();
    (&inv * sub.basis()).entries().iter().all(|x| x.is_integer())
}

fn realization_round_trip() -> Outcome {
    let cat = catalog();
    let mut r = rng(5);
    let mut pieces = 0;
    for i in 0..100 {
        let g = random_graph(&mut r, &cat, &GraphOptions::new(4, 6, LabelMode::Balanced));
        let out = realize(&g, &BTreeMap::new()).map_err(|e| format!("graph {i}: {e}"))?;
        pieces += out.graph.vertices.len();
        ensure!(validate(&out.graph).is_empty(), "graph {i}: output is invalid");
        ensure!(is_integral(&out.graph).unwrap(), "graph {i}: output is not integral");
        ensure!(bisimilar(&out.graph, &g).unwrap(), "graph {i}: output is not bisimilar to the input");
        ensure!(verify_morphism(&out.graph, &out.minimal, &out.morphism).is_empty(), "graph {i}: morphism does not verify");
        ensure!(nah_isomorphic(&out.minimal, &minimize(&g).unwrap().0), "graph {i}: wrong minimal graph");
        ensure!(out.plan.check(&g).unwrap().is_empty(), "graph {i}: plan check fails");
        for (id, p) in &out.plan.edges {
            let e = &g.edges[id];
            let head = g.catalog.cusp(&g.vertices[&e.head], &e.head_cusp).unwrap();
            let tail = g.catalog.cusp(&g.vertices[&e.tail], &e.tail_cusp).unwrap();
            ensure!(contained(&p.sublattice, &tail.lattice), "edge {id}: sublattice leaves the tail lattice");
            ensure!(contained(&p.sublattice, &head.lattice.image(&e.label).unwrap()), "edge {id}: sublattice leaves the head image");
            let d_e = covol(&p.sublattice) / (det(&e.label).abs() * covol(&head.lattice));
            let d_ebar = covol(&p.sublattice) / covol(&tail.lattice);
            ensure!(d_e == Rational::from_integer(p.head_degree.into()), "edge {id}: d_e differs from the index");
            ensure!(d_ebar == Rational::from_integer(p.tail_degree.into()), "edge {id}: d_ebar differs from the index");
            ensure!(&d_e * delta_of(&g, e) == d_ebar, "edge {id}: d_e delta_e != d_ebar");
        }
    }
    Ok(format!("100 realizations, {pieces} pieces"))
}

fn random_gl2<R: Rng>(r: &mut R) -> Matrix2 {
    let sign = if r.gen_bool(0.5) { 1 } else { -1 };
    qigraph::fixtures::random_unimodular(r, sign)
}

fn lattice_oracle() -> Outcome {
    let mut r = rng(6);
    for i in 0..500 {
        let (x, y) = (random_hnf(&mut r, 12), random_hnf(&mut r, 12));
        let lib = lattice_intersect(&x.lattice(), &y.lattice());
        let want = intersection_by_enumeration(&x, &y);
        ensure!(same_lattice(&lib, &want), "pair {i}: {x:?} and {y:?} intersect in {want:?}");
        // the intersection commutes with rational linear maps
        let m = random_gl2(&mut r).scale(&ratio(r.gen_range(1..=5), r.gen_range(1..=5)));
        let moved = lattice_intersect(&x.lattice().image(&m).unwrap(), &y.lattice().image(&m).unwrap());
        ensure!(moved == want.lattice().image(&m).unwrap(), "pair {i}: intersection does not commute with a linear map");
    }
    for i in 0..500 {
        let a = random_hnf(&mut r, 12);
        let (h1, h2) = (random_hnf(&mut r, 6), random_hnf(&mut r, 6));
        let m = random_gl2(&mut r).scale(&ratio(r.gen_range(1..=4), r.gen_range(1..=4)));
        let ab = Matrix2::ints(a.a, a.b, 0, a.d);
        let bb = &ab * &Matrix2::ints(h1.a, h1.b, 0, h1.d);
        let cb = &bb * &Matrix2::ints(h2.a, h2.b, 0, h2.d);
        let [la, lb, lc] = [ab, bb, cb].map(|basis| Lattice2::from_basis(&(&m * &basis)).unwrap());
        let (ca, cb_, ba) = (integer_index(&lc, &la), integer_index(&lc, &lb), integer_index(&lb, &la));
        let (Some(ca), Some(cb_), Some(ba)) = (ca, cb_, ba) else {
            return Err(format!("triple {i}: a nested lattice is reported as not contained"));
        };
        ensure!(ca == &cb_ * &ba, "triple {i}: index is not multiplicative");
        ensure!(ba == h1.index().into() && cb_ == h2.index().into(), "triple {i}: index differs from the determinant");
        let (ratio_ac, inside) = lattice_index(&la, &lc);
        ensure!(!inside || h1.index() * h2.index() == 1, "triple {i}: a larger lattice is reported inside a smaller one");
        ensure!(ratio_ac * Rational::from_integer(ca) == Rational::one(), "triple {i}: covolume ratio is not reciprocal");
    }
    Ok("500 pairs, 500 triples".into())
}

fn h_moves() -> Outcome {
    let cat = catalog();
    let mut r = rng(7);
    let mut moved = 0;
    for i in 0..300 {
        let h = random_h_graph(&mut r, &cat, &GraphOptions::new(4, 6, LabelMode::Random));
        let canon = h_canonical_moves(&h).map_err(|e| e.to_string())?;
        ensure!(h_canonical_moves(&canon).unwrap() == canon, "graph {i}: canonical form is not idempotent");
        let mut g = h.clone();
        for _ in 0..r.gen_range(1..=20) {
            random_move(&mut r, &mut g);
        }
        if g != h {
            moved += 1;
        }
        ensure!(validate_h(&g).is_empty(), "graph {i}: moves broke validity");
        ensure!(h_canonical_moves(&g).unwrap() == canon, "graph {i}: canonical form changes under moves");
    }
    let mut checked = 0;
    let mut nontrivial = 0;
    while checked < 60 {
        let h = random_h_graph(&mut r, &cat, &GraphOptions::new(4, 6, LabelMode::Random));
        let k = h.signs.len();
        if k == 0 || k > 6 {
            continue;
        }
        let ids: Vec<String> = h.signs.keys().cloned().collect();
        let mut canon_of: BTreeMap<Vec<i8>, HGraph> = BTreeMap::new();
        for bits in 0..(1u32 << k) {
            let mut g = h.clone();
            for (j, id) in ids.iter().enumerate() {
                g.signs.insert(id.clone(), if bits >> j & 1 == 1 { -1 } else { 1 });
            }
            canon_of.insert(g.signs.values().copied().collect(), h_canonical_moves(&g).unwrap());
        }
        for (signs, c) in &canon_of {
            let mut g = h.clone();
            for (id, s) in ids.iter().zip(signs) {
                g.signs.insert(id.clone(), *s);
            }
            let orbit = sign_orbit(&g);
            let same: BTreeSet<Vec<i8>> = canon_of.iter().filter(|(_, d)| *d == c).map(|(s, _)| s.clone()).collect();
            ensure!(orbit == same, "sign class of {signs:?} differs from the coboundary orbit");
            if orbit.len() > 1 {
                nontrivial += 1;
            }
        }
        checked += 1;
    }
    ensure!(nontrivial > 0, "no nontrivial coboundary orbit was exercised");
    Ok(format!("300 move sequences ({moved} changed the graph), 60 exhaustive sign checks"))
}

fn compact(h: &HGraph) -> String {
    let mut doc = io::h_graph_to_doc(h);
    doc.catalog = None;
    serde_json::to_string(&doc).unwrap_or_default()
}

/// Builder for hand-made H-graphs.
struct HBuilder(HGraph);

impl HBuilder {
    fn new() -> Self {
        HBuilder(HGraph::new(catalog()))
    }

    fn hyp(mut self, v: &str, orb: &str) -> Self {
        self.0.hyperbolic.add_vertex(v, orb);
        self
    }

    fn hh(mut self, id: &str, head: &str, hc: &str, tail: &str, tc: &str, label: Matrix2) -> Self {
        self.0.hyperbolic.add_edge(id, Edge::new(head, hc, tail, tc, label));
        self
    }

    fn seifert(mut self, v: &str, color: Color, t: FiberType) -> Self {
        self.0.seifert.insert(v.into(), SeifertLabel::new(color, t));
        self
    }

    fn mixed(mut self, id: &str, h: &str, cusp: &str, s: &str, slope: (i64, i64), sign: i8) -> Self {
        self.0.mixed.insert(id.into(), MixedEdge { hyperbolic: h.into(), cusp: cusp.into(), seifert: s.into(), slope: Vector2::ints(slope.0, slope.1) });
        self.0.signs.insert(id.into(), sign);
        self
    }

    fn ss(mut self, id: &str, a: &str, b: &str, sign: i8) -> Self {
        self.0.seifert_edges.insert(id.into(), SeifertEdge { a: a.into(), b: b.into(), symmetric: false });
        self.0.signs.insert(id.into(), sign);
        self
    }

    /// Drops signs the edges cannot carry.
    fn build(mut self) -> HGraph {
        let h = self.0.clone();
        self.0.signs.retain(|id, _| h.carries_sign(id));
        let report = validate_h(&self.0);
        assert!(report.is_empty(), "hand-built H-graph is invalid:\n{report}");
        self.0
    }
}

const SLOPES: [(i64, i64); 5] = [(1, 0), (1, 2), (2, -3), (0, 1), (3, 1)];
const COLORS: [Color; 2] = [Color::White, Color::Black];

/// `(input, expected minimal H-graph)`.
fn mergeable_fixtures() -> Vec<(String, HGraph, HGraph)> {
    let mut out = Vec::new();
    let swap = Matrix2::ints(0, 1, 1, 0);
    // A: k copies of a piece over one Seifert vertex fold onto one copy
    for (n, k) in (2..=6).enumerate() {
        for (c, t) in [(0, FiberType::O), (1, FiberType::N)] {
            let slope = SLOPES[(n + c) % SLOPES.len()];
            let color = COLORS[(n + c) % 2];
            let mut b = HBuilder::new().seifert("s", color, t);
            for i in 0..k {
                let h = format!("h{i}");
                // odd copies use the negated slope and sign (an equivalent presentation)
                let (sl, sign) = if i % 2 == 1 { ((-slope.0, -slope.1), -1) } else { (slope, 1) };
                b = b.hyp(&h, "N1").mixed(&format!("m{i}"), &h, "c0", "s", sl, sign);
            }
            let want = HBuilder::new().seifert("s", color, t).hyp("h", "N1").mixed("m", "h", "c0", "s", slope, 1);
            out.push((format!("A1 k={k} {t:?}"), b.build(), want.build()));

            let mut b = HBuilder::new().seifert("s", color, t);
            for i in 0..k {
                let (h, g) = (format!("h{i}"), format!("g{i}"));
                let sl = (slope.0 * (i as i64 + 1), slope.1 * (i as i64 + 1));
                b = b
                    .hyp(&h, "N2")
                    .hyp(&g, "N1")
                    .hh(&format!("e{i}"), &h, "c1", &g, "c0", swap.clone())
                    .mixed(&format!("m{i}"), &h, "c0", "s", if i == 0 { sl } else { slope }, 1);
                if i == 0 {
                    // a single copy may carry any multiple: the scaling move is per Seifert vertex
                    b.0.mixed.get_mut("m0").unwrap().slope = Vector2::ints(slope.0, slope.1);
                }
            }
            let want = HBuilder::new()
                .seifert("s", color, t)
                .hyp("h", "N2")
                .hyp("g", "N1")
                .hh("e", "h", "c1", "g", "c0", swap.clone())
                .mixed("m", "h", "c0", "s", (2 * slope.0, 2 * slope.1), 1);
            out.push((format!("A2 k={k} {t:?}"), b.build(), want.build()));
        }
    }
    // the same with the scaling move applied to the whole input
    let extra: Vec<(String, HGraph, HGraph)> = out
        .iter()
        .map(|(name, h, want)| {
            let mut g = h.clone();
            scale_slopes(&mut g, "s", &ratio(-3, 2));
            (format!("{name} scaled"), g, want.clone())
        })
        .collect();
    out.extend(extra);
    // B: pairs or rings of Seifert vertices whose parallel Seifert edges collapse to one loop
    for color in COLORS {
        for t in [FiberType::O, FiberType::N] {
            for shape in ["double", "triple", "ring3", "ring4"] {
                let (m, edges): (usize, Vec<(usize, usize)>) = match shape {
                    "double" => (2, vec![(0, 1), (1, 0)]),
                    "triple" => (2, vec![(0, 1), (1, 0), (0, 1)]),
                    "ring3" => (3, vec![(0, 1), (1, 2), (2, 0)]),
                    _ => (4, vec![(0, 1), (1, 2), (2, 3), (3, 0)]),
                };
                let mut b = HBuilder::new();
                for i in 0..m {
                    let (h, s) = (format!("h{i}"), format!("s{i}"));
                    b = b.seifert(&s, color, t).hyp(&h, "N1").mixed(&format!("m{i}"), &h, "c0", &s, (1, 1), 1);
                }
                for (j, (x, y)) in edges.iter().enumerate() {
                    b = b.ss(&format!("t{j}"), &format!("s{x}"), &format!("s{y}"), 1);
                }
                let want = HBuilder::new().seifert("s", color, t).hyp("h", "N1").mixed("m", "h", "c0", "s", (1, 1), 1).ss("t", "s", "s", 1);
                out.push((format!("B {shape} {color:?} {t:?}"), b.build(), want.build()));
            }
        }
    }
    // C: opposite signs at a type o vertex force the merged vertex to type n
    let patterns: [&[i8]; 7] = [&[1, -1], &[-1, 1], &[1, 1, -1], &[1, -1, -1], &[-1, 1, 1], &[1, -1, 1, -1], &[1, 1, 1, -1]];
    for (n, signs) in patterns.iter().enumerate() {
        for color in COLORS {
            let slope = SLOPES[n % SLOPES.len()];
            let mut b = HBuilder::new().seifert("s", color, FiberType::O);
            for (i, sign) in signs.iter().enumerate() {
                let h = format!("h{i}");
                b = b.hyp(&h, "N1").mixed(&format!("m{i}"), &h, "c0", "s", slope, *sign);
            }
            let want = HBuilder::new().seifert("s", color, FiberType::N).hyp("h", "N1").mixed("m", "h", "c0", "s", slope, 1);
            out.push((format!("C {signs:?} {color:?}"), b.build(), want.build()));
        }
    }
    out
}

fn h_minimization() -> Outcome {
    let cat = catalog();
    let mut r = rng(8);
    for i in 0..150 {
        let h = random_h_graph(&mut r, &cat, &GraphOptions::new(4, 6, LabelMode::Random));
        let (q, m) = minimize_h(&h).map_err(|e| format!("graph {i}: {e}"))?;
        ensure!(validate_h(&q).is_empty(), "graph {i}: quotient is invalid");
        let report = verify_h_morphism(&h, &q, &m);
        ensure!(report.is_empty(), "graph {i}: quotient morphism does not verify:\n{report}");
        let (qq, _) = minimize_h(&q).map_err(|e| e.to_string())?;
        ensure!(h_isomorphic(&q, &qq).unwrap(), "graph {i}: minimize_h is not idempotent");
    }
    for i in 0..100 {
        let g = random_graph(&mut r, &cat, &GraphOptions::new(5, 7, LabelMode::Random));
        let (q, m) = minimize_h(&HGraph::from_nah(g.clone())).map_err(|e| e.to_string())?;
        ensure!(q.seifert.is_empty() && q.mixed.is_empty(), "graph {i}: Seifert data appeared");
        ensure!(verify_h_morphism(&HGraph::from_nah(g.clone()), &q, &m).is_empty(), "graph {i}: morphism does not verify");
        ensure!(nah_isomorphic(&q.hyperbolic, &minimize(&g).unwrap().0), "graph {i}: differs from minimize");
    }
    let fixtures = mergeable_fixtures();
    ensure!(fixtures.len() >= 50, "only {} fixtures", fixtures.len());
    for (name, h, want) in &fixtures {
        let (q, m) = minimize_h(h).map_err(|e| format!("{name}: {e}"))?;
        let report = verify_h_morphism(h, &q, &m);
        ensure!(report.is_empty(), "{name}: morphism does not verify:\n{report}");
        ensure!(h_isomorphic(&q, want).unwrap(), "{name}: expected quotient not reached, got {}", compact(&q));
    }
    Ok(format!("150 random, 100 Seifert-free, {} fixtures", fixtures.len()))
}

fn check_common(g1: &TypedGraph, g2: &TypedGraph, c: &CommonCover) -> Result<(), String> {
    ensure!(validate_typed(&c.cover).is_empty(), "cover is not a valid connected typed graph");
    ensure!(verify_covering(&c.cover, g1, &c.first), "first map is not a covering");
    ensure!(verify_covering(&c.cover, g2, &c.second), "second map is not a covering");
    for (g, map) in [(g1, &c.first), (g2, &c.second)] {
        let sizes = fibre_sizes(map, g);
        ensure!(sizes.len() == 1, "fibres have sizes {sizes:?}");
        let d = *sizes.iter().next().unwrap();
        ensure!(d >= 1 && d * g.types.len() == c.cover.types.len(), "degree {d} does not match the vertex count");
        ensure!(d * g.edges.len() == c.cover.edges.len(), "degree {d} does not match the edge count");
    }
    Ok(())
}

/// Base graphs whose degree-refinement quotient is a tree.
fn tree_bases() -> Vec<TypedGraph> {
    let mut out = Vec::new();
    let mut g = TypedGraph::default();
    g.add_vertex("a", "A");
    g.add_vertex("b", "B");
    g.add_edge("x0", "a", "b", "x");
    g.add_edge("x1", "a", "b", "x");
    out.push(g.clone());
    g.add_edge("x2", "a", "b", "x");
    out.push(g);
    let mut g = TypedGraph::default();
    for (v, t) in [("a", "A"), ("b", "B"), ("c", "C")] {
        g.add_vertex(v, t);
    }
    g.add_edge("x0", "a", "b", "x");
    g.add_edge("x1", "a", "b", "x");
    g.add_edge("y0", "b", "c", "y");
    g.add_edge("y1", "c", "b", "y");
    out.push(g.clone());
    g.add_vertex("d", "D");
    g.add_edge("z0", "b", "d", "z");
    out.push(g);
    out
}

/// Voltages that keep a cyclic cover of every tree base connected.
fn voltages(base: &TypedGraph, shift: usize) -> BTreeMap<String, usize> {
    base.edges.keys().map(|id| (id.clone(), if id.ends_with('1') { 1 + shift } else { 0 })).collect()
}

fn common_covers() -> Outcome {
    let mut found = 0;
    let mut r = rng(9);
    let combos = [(2, 3, 0, 0), (2, 3, 0, 1), (3, 4, 1, 2), (4, 6, 0, 4), (5, 2, 2, 0)];
    for (bi, base) in tree_bases().iter().enumerate() {
        for &(n1, n2, s1, s2) in &combos {
            let (g1, m1) = voltage_cover(base, n1, &voltages(base, s1));
            let (g2, m2) = voltage_cover(base, n2, &voltages(base, s2));
            ensure!(g1.is_connected() && g2.is_connected(), "fixture cover is disconnected");
            ensure!(verify_covering(&g1, base, &m1) && verify_covering(&g2, base, &m2), "fixture is not a cover of its base");
            let bound = n1 * n2 * base.types.len();
            let c = find_common_cover(&g1, &g2, bound).map_err(|e| format!("base {bi} ({n1},{n2}): {e}"))?;
            let Some(c) = c else {
                return Err(format!("base {bi} ({n1},{n2}): no common cover within {bound} vertices"));
            };
            check_common(&g1, &g2, &c).map_err(|e| format!("base {bi} ({n1},{n2}): {e}"))?;
            found += 1;
        }
    }
    let mut successes = 0;
    for i in 0..60 {
        let bases = tree_bases();
        let base = bases.choose(&mut r).unwrap();
        let mut covers = Vec::new();
        for _ in 0..2 {
            let n = r.gen_range(1..=4);
            let volts: BTreeMap<String, usize> = base.edges.keys().map(|e| (e.clone(), r.gen_range(0..n))).collect();
            covers.push(voltage_cover(base, n, &volts).0);
        }
        if !covers.iter().all(|g| g.is_connected()) {
            continue;
        }
        if let Some(c) = find_common_cover(&covers[0], &covers[1], 40).map_err(|e| format!("random {i}: {e}"))? {
            check_common(&covers[0], &covers[1], &c).map_err(|e| format!("random {i}: {e}"))?;
            successes += 1;
        }
    }
    for (a, b) in [("typed_square", "typed_hexagon"), ("typed_square", "typed_theta"), ("typed_hexagon", "typed_theta")] {
        let load = |name: &str| match io::read_document(&fixture_dir().join(format!("{name}.json"))) {
            Ok(io::Document::TypedGraph(g)) => Ok(g),
            other => Err(format!("{name}: {other:?}")),
        };
        let (g1, g2) = (load(a)?, load(b)?);
        if let Ok(Some(c)) = find_common_cover(&g1, &g2, 60) {
            check_common(&g1, &g2, &c).map_err(|e| format!("{a}/{b}: {e}"))?;
            successes += 1;
        }
    }
    Ok(format!("{found} tree-base fixtures, {successes} further verified successes"))
}

fn fixture_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("fixtures")
}

fn corpus() -> Vec<PathBuf> {
    let mut out = Vec::new();
    let mut stack = vec![fixture_dir()];
    while let Some(dir) = stack.pop() {
        for entry in std::fs::read_dir(dir).unwrap() {
            let p = entry.unwrap().path();
            if p.is_dir() {
                stack.push(p);
            } else if p.extension().is_some_and(|e| e == "json") {
                out.push(p);
            }
        }
    }
    out.sort();
    out
}

fn format_determinism() -> Outcome {
    let files = corpus();
    ensure!(files.len() >= 10, "corpus has only {} files", files.len());
    for p in &files {
        let bytes = std::fs::read(p).unwrap();
        let doc = io::parse(&bytes).map_err(|e| format!("{}: {e}", p.display()))?;
        let first = io::serialize(&doc);
        ensure!(first == bytes, "{}: not in canonical form", p.display());
        let again = io::parse(&first).map_err(|e| e.to_string())?;
        ensure!(again == doc, "{}: round trip changes the document", p.display());
        ensure!(io::serialize(&again) == first, "{}: second serialization differs", p.display());
    }
    let run = |args: &[&str]| {
        let args: Vec<String> = std::iter::once("qigraph").chain(args.iter().copied()).map(String::from).collect();
        let (mut out, mut err) = (Vec::new(), Vec::new());
        let code = qigraph::cli::run_with(&args, &mut out, &mut err);
        (code, out)
    };
    for kind in ["nah", "h"] {
        let a = run(&["generate", "--seed", "42", "--kind", kind]);
        let b = run(&["generate", "--seed", "42", "--kind", kind]);
        ensure!(a.0 == 0 && a == b, "generate --kind {kind} is not deterministic");
        let doc = io::parse(&a.1).map_err(|e| e.to_string())?;
        ensure!(io::serialize(&doc) == a.1, "generated {kind} document is not canonical");
    }
    let two = fixture_dir().join("two_cycle.json");
    let a = run(&["minimize", two.to_str().unwrap()]);
    let b = run(&["minimize", two.to_str().unwrap()]);
    ensure!(a == b, "minimize output differs between runs");
    Ok(format!("{} files", files.len()))
}

fn main() {
    let criteria: [(&str, fn() -> Outcome, u64); 10] = [
        ("balanced() agrees with cycle products", balanced_agreement, 60),
        ("integral graphs are balanced", integral_implies_balanced, 10),
        ("morphisms carry balance to the target", morphisms_preserve_balance, 60),
        ("minimization: idempotent, brute force, chains", minimization_suite, 300),
        ("realization round trip", realization_round_trip, 300),
        ("lattice intersection and index", lattice_oracle, 60),
        ("H-graph move invariance and sign classes", h_moves, 120),
        ("H-graph minimization", h_minimization, 120),
        ("common covers", common_covers, 300),
        ("format determinism", format_determinism, 10),
    ];
    let filter: Vec<String> = std::env::args().skip(1).filter(|a| !a.starts_with('-')).collect();
    let mut failed = 0;
    for (n, (name, run, limit)) in criteria.iter().enumerate() {
        let id = n + 1;
        if !filter.is_empty() && !filter.iter().any(|f| *f == id.to_string()) {
            continue;
        }
        let start = Instant::now();
        let result = catch_unwind(AssertUnwindSafe(run)).unwrap_or_else(|p| {
            Err(p.downcast_ref::<String>().cloned().or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string())).unwrap_or_default())
        });
        let elapsed = start.elapsed();
        let result = match result {
            Ok(_) if elapsed > Duration::from_secs(*limit) => Err(format!("took longer than {limit}s")),
            other => other,
        };
        match result {
            Ok(detail) => println!("PASS  {id:>2}  {name} ({:.1}s): {detail}", elapsed.as_secs_f64()),
            Err(e) => {
                failed += 1;
                println!("FAIL  {id:>2}  {name} ({:.1}s): {e}", elapsed.as_secs_f64());
            }
        }
    }
    if failed > 0 {
        std::process::exit(1);
    }
}
