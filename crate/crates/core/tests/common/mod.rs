//! Brute-force oracles shared by the integration tests. They use only public
//! data of the library types and plain integer or rational arithmetic.
#![allow(dead_code)]

use std::collections::{BTreeMap, BTreeSet, VecDeque};

use num_traits::{One, Signed, Zero};
use qigraph::cover::{CoveringMap, TypedGraph};
use qigraph::graph::{DirectedEdge, Edge, NahGraph};
use qigraph::hgraph::{FiberType, HGraph};
use qigraph::linear::{Lattice2, Matrix2, Rational};
use rand::Rng;

pub fn det(m: &Matrix2) -> Rational {
    let [a, b, c, d] = m.entries();
    a * d - b * c
}

pub fn covol(l: &Lattice2) -> Rational {
    det(l.basis()).abs()
}

/// `-det(l) covol(head) / covol(tail)` recomputed from the catalog.
pub fn delta_of(g: &NahGraph, e: &Edge) -> Rational {
    let head = g.catalog.cusp(&g.vertices[&e.head], &e.head_cusp).unwrap();
    let tail = g.catalog.cusp(&g.vertices[&e.tail], &e.tail_cusp).unwrap();
    -det(&e.label) * covol(&head.lattice) / covol(&tail.lattice)
}

/// Products of `delta` around every simple cycle, both loops and cycles
/// through several vertices, each cycle found once per starting edge.
pub fn simple_cycle_products(g: &NahGraph) -> Vec<Rational> {
    let vertices: Vec<&String> = g.vertices.keys().collect();
    let index: BTreeMap<&str, usize> = vertices.iter().enumerate().map(|(i, v)| (v.as_str(), i)).collect();
    // adjacency: (neighbour, edge index, delta when walked this way)
    let mut adj: Vec<Vec<(usize, usize, Rational)>> = vec![Vec::new(); vertices.len()];
    let mut out = Vec::new();
    for (k, e) in g.edges.values().enumerate() {
        let d = delta_of(g, e);
        let (h, t) = (index[e.head.as_str()], index[e.tail.as_str()]);
        if h == t {
            out.push(d);
            continue;
        }
        adj[h].push((t, k, d.clone()));
        adj[t].push((h, k, d.recip()));
    }
    fn walk(
        adj: &[Vec<(usize, usize, Rational)>],
        start: usize,
        v: usize,
        used: &mut Vec<usize>,
        on_path: &mut Vec<bool>,
        product: Rational,
        out: &mut Vec<Rational>,
    ) {
        for (w, k, d) in &adj[v] {
            if used.contains(k) {
                continue;
            }
            let p = &product * d;
            if *w == start {
                out.push(p);
            } else if *w > start && !on_path[*w] {
                on_path[*w] = true;
                used.push(*k);
                walk(adj, start, *w, used, on_path, p, out);
                used.pop();
                on_path[*w] = false;
            }
        }
    }
    for s in 0..vertices.len() {
        let mut on_path = vec![false; vertices.len()];
        on_path[s] = true;
        walk(&adj, s, s, &mut Vec::new(), &mut on_path, Rational::one(), &mut out);
    }
    out
}

pub fn balanced_oracle(g: &NahGraph) -> bool {
    simple_cycle_products(g).iter().all(|p| p.is_one())
}

/// Degree of the cusp cover given by `psi` between two cusps with orbifold
/// degrees `f_src`, `f_dst`.
pub fn cusp_degree(psi: &Matrix2, src: &Lattice2, f_src: u32, dst: &Lattice2, f_dst: u32) -> Rational {
    det(psi).abs() * covol(src) / covol(dst) * Rational::from_integer(f_dst.into()) / Rational::from_integer(f_src.into())
}

/// Integer sublattice of `Z^2` in column Hermite form: basis `(a, 0), (b, d)`, `0 <= b < a`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Hnf {
    pub a: i64,
    pub b: i64,
    pub d: i64,
}

impl Hnf {
    pub fn index(&self) -> i64 {
        self.a * self.d
    }

    pub fn contains(&self, x: i64, y: i64) -> bool {
        y % self.d == 0 && (x - self.b * (y / self.d)) % self.a == 0
    }

    pub fn basis(&self) -> [(i64, i64); 2] {
        [(self.a, 0), (self.b, self.d)]
    }

    pub fn within(&self, other: &Hnf) -> bool {
        self.basis().iter().all(|&(x, y)| other.contains(x, y))
    }

    pub fn lattice(&self) -> Lattice2 {
        Lattice2::from_basis(&Matrix2::ints(self.a, self.b, 0, self.d)).unwrap()
    }
}

/// Every sublattice of `Z^2` of index `n`.
pub fn sublattices_of_index(n: i64) -> Vec<Hnf> {
    let mut out = Vec::new();
    for a in 1..=n {
        if n % a == 0 {
            for b in 0..a {
                out.push(Hnf { a, b, d: n / a });
            }
        }
    }
    out
}

pub fn random_hnf<R: Rng>(rng: &mut R, max_index: i64) -> Hnf {
    let n = rng.gen_range(1..=max_index);
    let all = sublattices_of_index(n);
    all[rng.gen_range(0..all.len())]
}

/// Largest common sublattice, found by scanning indices upwards.
pub fn intersection_by_enumeration(x: &Hnf, y: &Hnf) -> Hnf {
    for n in 1.. {
        let found: Vec<Hnf> = sublattices_of_index(n).into_iter().filter(|l| l.within(x) && l.within(y)).collect();
        if let Some(l) = found.first() {
            assert_eq!(found.len(), 1, "two common sublattices of minimal index");
            return *l;
        }
    }
    unreachable!()
}

/// Integer lattice `l` as the set it generates, tested by comparing with an `Hnf`.
pub fn same_lattice(l: &Lattice2, h: &Hnf) -> bool {
    let b = l.basis();
    let cols: Vec<(Rational, Rational)> = (0..2).map(|j| {
        let c = b.column(j);
        (c.x().clone(), c.y().clone())
    }).collect();
    let ints: Option<Vec<(i64, i64)>> = cols
        .iter()
        .map(|(x, y)| {
            (x.is_integer() && y.is_integer()).then(|| (x.to_integer().try_into().unwrap(), y.to_integer().try_into().unwrap()))
        })
        .collect();
    let Some(ints) = ints else { return false };
    let generated_in_h = ints.iter().all(|&(x, y)| h.contains(x, y));
    let d = (ints[0].0 * ints[1].1 - ints[0].1 * ints[1].0).abs();
    generated_in_h && d == h.index()
}

/// Whether two labels agree up to the cusp symmetry group at the head.
fn same_coset(l: &Matrix2, other: &Matrix2, group: &[Matrix2]) -> bool {
    group.iter().any(|g| &(l * g) == other)
}

/// Backtracking isomorphism test for NAH-graphs with identity vertex coverings.
pub fn nah_isomorphic(a: &NahGraph, b: &NahGraph) -> bool {
    if a.vertices.len() != b.vertices.len() || a.edges.len() != b.edges.len() {
        return false;
    }
    let va: Vec<&String> = a.vertices.keys().collect();
    let mut map: BTreeMap<String, String> = BTreeMap::new();
    let mut used = BTreeSet::new();
    extend(a, b, &va, &mut map, &mut used)
}

fn extend(a: &NahGraph, b: &NahGraph, va: &[&String], map: &mut BTreeMap<String, String>, used: &mut BTreeSet<String>) -> bool {
    if map.len() == va.len() {
        return edges_match(a, b, map);
    }
    let v = va[map.len()];
    for (w, orb) in &b.vertices {
        if used.contains(w) || *orb != a.vertices[v] {
            continue;
        }
        map.insert(v.clone(), w.clone());
        used.insert(w.clone());
        if partial_ok(a, b, map) && extend(a, b, va, map, used) {
            return true;
        }
        map.remove(v);
        used.remove(w);
    }
    false
}

/// Edges of `b` as `(head, head cusp, tail, tail cusp, label)` in both directions.
fn directed(b: &NahGraph) -> Vec<(String, (String, String, String, String, Matrix2))> {
    let mut out = Vec::new();
    for (id, e) in &b.edges {
        out.push((id.clone(), (e.head.clone(), e.head_cusp.clone(), e.tail.clone(), e.tail_cusp.clone(), e.label.clone())));
        let inv = e.label.inverse().unwrap();
        out.push((id.clone(), (e.tail.clone(), e.tail_cusp.clone(), e.head.clone(), e.head_cusp.clone(), inv)));
    }
    out
}

fn edge_image(a: &NahGraph, e: &Edge, map: &BTreeMap<String, String>, candidates: &[(String, (String, String, String, String, Matrix2))]) -> Vec<String> {
    let group = a.catalog.cusp(&a.vertices[&e.head], &e.head_cusp).unwrap().symmetry().elements();
    let (h, t) = (&map[&e.head], &map[&e.tail]);
    candidates
        .iter()
        .filter(|(_, (bh, bhc, bt, btc, l))| bh == h && bt == t && *bhc == e.head_cusp && *btc == e.tail_cusp && same_coset(&e.label, l, &group))
        .map(|(id, _)| id.clone())
        .collect()
}

fn partial_ok(a: &NahGraph, b: &NahGraph, map: &BTreeMap<String, String>) -> bool {
    let cands = directed(b);
    a.edges
        .values()
        .filter(|e| map.contains_key(&e.head) && map.contains_key(&e.tail))
        .all(|e| !edge_image(a, e, map, &cands).is_empty())
}

fn edges_match(a: &NahGraph, b: &NahGraph, map: &BTreeMap<String, String>) -> bool {
    let cands = directed(b);
    let options: Vec<Vec<String>> = a.edges.values().map(|e| edge_image(a, e, map, &cands)).collect();
    fn assign(options: &[Vec<String>], i: usize, taken: &mut BTreeSet<String>) -> bool {
        if i == options.len() {
            return true;
        }
        for o in &options[i] {
            if taken.insert(o.clone()) {
                if assign(options, i + 1, taken) {
                    return true;
                }
                taken.remove(o);
            }
        }
        false
    }
    assign(&options, 0, &mut BTreeSet::new())
}

// ---- H-graph moves ----

/// Move (a): flip every sign at the type o Seifert vertex `v`.
pub fn flip_signs_at(h: &mut HGraph, v: &str) {
    assert_eq!(h.seifert[v].fiber_type, FiberType::O);
    let ids: Vec<String> = h.signs.keys().cloned().collect();
    for id in ids {
        let (x, y) = h.endpoints(&id).map(|(x, y)| (x.to_string(), y.to_string())).unwrap();
        for end in [x, y] {
            if end == v {
                let s = h.signs.get_mut(&id).unwrap();
                *s = -*s;
            }
        }
    }
}

/// Move (b): negate one slope together with its sign.
pub fn negate_slope(h: &mut HGraph, edge: &str) {
    let m = h.mixed.get_mut(edge).unwrap();
    m.slope = -&m.slope;
    if let Some(s) = h.signs.get_mut(edge) {
        *s = -*s;
    }
}

/// Move (c): scale every slope at Seifert vertex `v`.
pub fn scale_slopes(h: &mut HGraph, v: &str, q: &Rational) {
    assert!(!q.is_zero());
    for m in h.mixed.values_mut().filter(|m| m.seifert == v) {
        m.slope = m.slope.scale(q);
    }
}

pub fn random_move<R: Rng>(rng: &mut R, h: &mut HGraph) {
    let o: Vec<String> = h.seifert.iter().filter(|(_, l)| l.fiber_type == FiberType::O).map(|(v, _)| v.clone()).collect();
    let mixed: Vec<String> = h.mixed.keys().cloned().collect();
    let seifert: Vec<String> = h.seifert.keys().cloned().collect();
    match rng.gen_range(0..3) {
        0 if !o.is_empty() => flip_signs_at(h, &o[rng.gen_range(0..o.len())]),
        1 if !mixed.is_empty() => negate_slope(h, &mixed[rng.gen_range(0..mixed.len())]),
        _ if !seifert.is_empty() => {
            let mut q = Rational::new(rng.gen_range(1..=5).into(), rng.gen_range(1..=4).into());
            if rng.gen_bool(0.5) {
                q = -q;
            }
            scale_slopes(h, &seifert[rng.gen_range(0..seifert.len())], &q)
        }
        _ => {}
    }
}

/// Sign assignments reachable from `h` by move sequences that return every
/// slope to its starting value.
pub fn sign_orbit(h: &HGraph) -> BTreeSet<Vec<i8>> {
    let key = |h: &HGraph| h.signs.values().copied().collect::<Vec<i8>>();
    let mut seen = BTreeSet::from([key(h)]);
    let mut queue = VecDeque::from([h.clone()]);
    let minus_one = -Rational::one();
    while let Some(cur) = queue.pop_front() {
        let mut next = Vec::new();
        for (v, label) in &cur.seifert {
            if label.fiber_type == FiberType::O {
                let mut g = cur.clone();
                flip_signs_at(&mut g, v);
                next.push(g);
            }
            let mut g = cur.clone();
            scale_slopes(&mut g, v, &minus_one);
            let at_v: Vec<String> = g.mixed.iter().filter(|(_, m)| &m.seifert == v).map(|(id, _)| id.clone()).collect();
            for id in at_v {
                negate_slope(&mut g, &id);
            }
            next.push(g);
        }
        for g in next {
            if seen.insert(key(&g)) {
                queue.push_back(g);
            }
        }
    }
    seen
}

// ---- typed graphs ----

/// Cyclic `n`-sheeted cover of `base`: edge `e` from `a` to `b` lifts to edges
/// from `a#i` to `b#(i + voltage[e])`.
pub fn voltage_cover(base: &TypedGraph, n: usize, voltage: &BTreeMap<String, usize>) -> (TypedGraph, CoveringMap) {
    let mut g = TypedGraph::default();
    let mut map = CoveringMap::default();
    for (v, ty) in &base.types {
        for i in 0..n {
            let id = format!("{v}#{i}");
            g.add_vertex(id.clone(), ty.clone());
            map.vertex_map.insert(id, v.clone());
        }
    }
    for (id, e) in &base.edges {
        let s = voltage.get(id).copied().unwrap_or(0);
        for i in 0..n {
            let lid = format!("{id}#{i}");
            g.add_edge(lid.clone(), format!("{}#{i}", e.a), format!("{}#{}", e.b, (i + s) % n), e.kind.clone());
            map.edge_map.insert(lid, DirectedEdge::forward(id.clone()));
        }
    }
    (g, map)
}

/// Preimage sizes of a map onto `base`; a covering of connected graphs has them all equal.
pub fn fibre_sizes(map: &CoveringMap, base: &TypedGraph) -> BTreeSet<usize> {
    let mut count: BTreeMap<&String, usize> = base.types.keys().map(|v| (v, 0)).collect();
    for w in map.vertex_map.values() {
        *count.get_mut(w).unwrap() += 1;
    }
    count.into_values().collect()
}
