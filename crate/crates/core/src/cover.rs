//! Typed graphs, degree refinement and bounded search for common finite covers.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::DirectedEdge;
use crate::report::Report;

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TypedEdge {
    pub a: String,
    pub b: String,
    pub kind: String,
}

/// Undirected multigraph with typed vertices and typed edges (loops allowed).
///
/// `permutations` optionally restricts, per vertex type, how a common cover may
/// match the ends of its two images (see [`find_common_cover`]).
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TypedGraph {
    pub types: BTreeMap<String, String>,
    pub edges: BTreeMap<String, TypedEdge>,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub permutations: BTreeMap<String, Vec<Vec<usize>>>,
}

/// One end of an edge at a vertex; `reversed` when the vertex is the `b` side.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord)]
struct End {
    kind: String,
    edge: String,
    reversed: bool,
    far: String,
}

impl TypedGraph {
    pub fn add_vertex(&mut self, id: impl Into<String>, ty: impl Into<String>) {
        self.types.insert(id.into(), ty.into());
    }

    pub fn add_edge(&mut self, id: impl Into<String>, a: impl Into<String>, b: impl Into<String>, kind: impl Into<String>) {
        self.edges.insert(id.into(), TypedEdge { a: a.into(), b: b.into(), kind: kind.into() });
    }

    /// Ends at every vertex, sorted by kind, edge and side.
    fn ends(&self) -> BTreeMap<&str, Vec<End>> {
        let mut out: BTreeMap<&str, Vec<End>> = self.types.keys().map(|v| (v.as_str(), Vec::new())).collect();
        for (id, e) in &self.edges {
            if let Some(list) = out.get_mut(e.a.as_str()) {
                list.push(End { kind: e.kind.clone(), edge: id.clone(), reversed: false, far: e.b.clone() });
            }
            if let Some(list) = out.get_mut(e.b.as_str()) {
                list.push(End { kind: e.kind.clone(), edge: id.clone(), reversed: true, far: e.a.clone() });
            }
        }
        for list in out.values_mut() {
            list.sort();
        }
        out
    }

    pub fn is_connected(&self) -> bool {
        let Some(start) = self.types.keys().next() else { return true };
        let ends = self.ends();
        let mut seen = BTreeSet::from([start.as_str()]);
        let mut stack = vec![start.as_str()];
        while let Some(v) = stack.pop() {
            for e in &ends[v] {
                if seen.insert(e.far.as_str()) {
                    stack.push(e.far.as_str());
                }
            }
        }
        seen.len() == self.types.len()
    }
}

/// Conditions: `structure`, `connected`, `kinds` (an edge kind joins one pair of
/// vertex types) and `permutations`.
pub fn validate_typed(g: &TypedGraph) -> Report {
    let mut report = Report::new();
    if g.types.is_empty() {
        report.push("graph", "structure", "no vertices");
        return report;
    }
    let mut kinds: BTreeMap<&str, (&str, &str)> = BTreeMap::new();
    for (id, e) in &g.edges {
        let (Some(ta), Some(tb)) = (g.types.get(&e.a), g.types.get(&e.b)) else {
            report.push(format!("edge {id}"), "structure", "endpoint is not a vertex");
            continue;
        };
        let pair = (ta.as_str().min(tb.as_str()), ta.as_str().max(tb.as_str()));
        if let Some(old) = kinds.insert(&e.kind, pair) {
            if old != pair {
                report.push(format!("edge {id}"), "kinds", format!("kind {} joins types {:?} and {:?}", e.kind, old, pair));
            }
        }
    }
    if report.is_empty() && !g.is_connected() {
        report.push("graph", "connected", "graph is not connected");
    }
    let ends = g.ends();
    for (ty, perms) in &g.permutations {
        let Some((v, _)) = g.types.iter().find(|(_, t)| *t == ty) else {
            report.push(format!("type {ty}"), "permutations", "no vertex has this type");
            continue;
        };
        let degree = ends[v.as_str()].len();
        for p in perms {
            let mut sorted = p.clone();
            sorted.sort();
            if sorted != (0..degree).collect::<Vec<_>>() {
                report.push(format!("type {ty}"), "permutations", format!("{p:?} is not a permutation of {degree} ends"));
            }
        }
    }
    report
}

/// Map from a cover to a base; edges map with an orientation.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct CoveringMap {
    pub vertex_map: BTreeMap<String, String>,
    pub edge_map: BTreeMap<String, DirectedEdge>,
}

impl CoveringMap {
    pub fn identity(g: &TypedGraph) -> Self {
        CoveringMap {
            vertex_map: g.types.keys().map(|v| (v.clone(), v.clone())).collect(),
            edge_map: g.edges.keys().map(|e| (e.clone(), DirectedEdge::forward(e.clone()))).collect(),
        }
    }
}

/// Conditions: `vertex-map`, `edge-map`, `type`, `kind`, `homomorphism`, `local`.
pub fn covering_report(cover: &TypedGraph, base: &TypedGraph, map: &CoveringMap) -> Report {
    let mut report = Report::new();
    if cover.types.is_empty() || base.types.is_empty() {
        report.push("graph", "vertex-map", "empty graph");
        return report;
    }
    for (v, ty) in &cover.types {
        match map.vertex_map.get(v).and_then(|w| base.types.get(w)) {
            None => report.push(format!("vertex {v}"), "vertex-map", "not mapped to a base vertex"),
            Some(t) if t != ty => report.push(format!("vertex {v}"), "type", format!("type {ty} maps to {t}")),
            Some(_) => {}
        }
    }
    for (id, e) in &cover.edges {
        let Some(f) = map.edge_map.get(id).and_then(|d| base.edges.get(&d.edge).map(|f| (d, f))) else {
            report.push(format!("edge {id}"), "edge-map", "not mapped to a base edge");
            continue;
        };
        let (d, f) = f;
        if f.kind != e.kind {
            report.push(format!("edge {id}"), "kind", format!("kind {} maps to {}", e.kind, f.kind));
        }
        let (fa, fb) = if d.reversed { (&f.b, &f.a) } else { (&f.a, &f.b) };
        if map.vertex_map.get(&e.a) != Some(fa) || map.vertex_map.get(&e.b) != Some(fb) {
            report.push(format!("edge {id}"), "homomorphism", format!("endpoints do not map to those of {}", d.edge));
        }
    }
    if !report.is_empty() {
        return report;
    }
    let base_ends = base.ends();
    for (v, ends) in cover.ends() {
        let mut images: Vec<(String, bool)> =
            ends.iter().map(|e| (map.edge_map[&e.edge].edge.clone(), e.reversed ^ map.edge_map[&e.edge].reversed)).collect();
        images.sort();
        let mut expected: Vec<(String, bool)> =
            base_ends[map.vertex_map[v].as_str()].iter().map(|e| (e.edge.clone(), e.reversed)).collect();
        expected.sort();
        if images != expected {
            report.push(format!("vertex {v}"), "local", "edge ends do not map bijectively onto the ends at the image");
        }
    }
    report
}

/// Whether `map` is a type-preserving covering `cover -> base`.
pub fn verify_covering(cover: &TypedGraph, base: &TypedGraph, map: &CoveringMap) -> bool {
    covering_report(cover, base, map).is_empty()
}

/// One row of the type matrix: the vertex type of a block and the number of
/// edge ends of each kind into each block.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Serialize)]
pub struct BlockRow {
    pub vertex_type: String,
    /// `(kind, block, count)`.
    pub counts: Vec<(String, usize, usize)>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Refinement {
    pub blocks: BTreeMap<String, usize>,
    pub matrix: Vec<BlockRow>,
}

/// Coarsest partition refining vertex types and stable under counting edge ends
/// of each kind into each block. Block numbers depend only on the isomorphism
/// type, so graphs with a common cover get equal matrices.
pub fn degree_refinement(g: &TypedGraph) -> Refinement {
    let ends = g.ends();
    let vertices: Vec<&String> = g.types.keys().collect();
    let distinct: BTreeSet<&String> = g.types.values().collect();
    let lookup: BTreeMap<&String, usize> = distinct.into_iter().enumerate().map(|(i, t)| (t, i)).collect();
    let mut rank: BTreeMap<&str, usize> = vertices.iter().map(|v| (v.as_str(), lookup[&g.types[*v]])).collect();
    loop {
        let sig = |v: &str, rank: &BTreeMap<&str, usize>| {
            let mut counts: BTreeMap<(String, usize), usize> = BTreeMap::new();
            for e in &ends[v] {
                *counts.entry((e.kind.clone(), rank[e.far.as_str()])).or_default() += 1;
            }
            (rank[v], counts.into_iter().map(|((k, b), c)| (k, b, c)).collect::<Vec<_>>())
        };
        let sigs: BTreeMap<&str, _> = vertices.iter().map(|v| (v.as_str(), sig(v, &rank))).collect();
        let distinct: BTreeSet<&_> = sigs.values().collect();
        let lookup: BTreeMap<&_, usize> = distinct.into_iter().enumerate().map(|(i, s)| (s, i)).collect();
        let next: BTreeMap<&str, usize> = sigs.iter().map(|(v, s)| (*v, lookup[s])).collect();
        let before = rank.values().collect::<BTreeSet<_>>().len();
        let after = next.values().collect::<BTreeSet<_>>().len();
        rank = next;
        if before == after {
            break;
        }
    }
    let nblocks = rank.values().collect::<BTreeSet<_>>().len();
    let mut matrix = vec![None; nblocks];
    for v in &vertices {
        let b = rank[v.as_str()];
        if matrix[b].is_none() {
            let mut counts: BTreeMap<(String, usize), usize> = BTreeMap::new();
            for e in &ends[v.as_str()] {
                *counts.entry((e.kind.clone(), rank[e.far.as_str()])).or_default() += 1;
            }
            matrix[b] = Some(BlockRow {
                vertex_type: g.types[*v].clone(),
                counts: counts.into_iter().map(|((k, b), c)| (k, b, c)).collect(),
            });
        }
    }
    Refinement {
        blocks: rank.into_iter().map(|(v, b)| (v.to_string(), b)).collect(),
        matrix: matrix.into_iter().map(|r| r.expect("every block has a vertex")).collect(),
    }
}

/// A common cover with its covering maps onto the two inputs.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CommonCover {
    pub cover: TypedGraph,
    pub first: CoveringMap,
    pub second: CoveringMap,
}

/// Whether the block quotient (blocks joined by edge kinds) is a tree.
fn base_is_tree(r: &Refinement) -> bool {
    let mut adjacent = BTreeSet::new();
    for (b, row) in r.matrix.iter().enumerate() {
        for (kind, c, _) in &row.counts {
            if *c == b {
                return false;
            }
            adjacent.insert((b.min(*c), b.max(*c), kind.clone()));
        }
    }
    let mut seen = BTreeSet::from([0]);
    let mut stack = vec![0];
    while let Some(b) = stack.pop() {
        for (x, y, _) in &adjacent {
            let other = if *x == b { *y } else if *y == b { *x } else { continue };
            if seen.insert(other) {
                stack.push(other);
            }
        }
    }
    adjacent.len() + 1 == r.matrix.len() && seen.len() == r.matrix.len()
}

/// End of an edge at a vertex, by index: `(kind, edge, reversed, far vertex, index of the opposite end at far)`.
type IndexedEnd = (String, String, bool, usize, usize);

fn indexed_ends(g: &TypedGraph) -> (Vec<String>, Vec<Vec<IndexedEnd>>) {
    let names: Vec<String> = g.types.keys().cloned().collect();
    let index: BTreeMap<&str, usize> = names.iter().enumerate().map(|(i, v)| (v.as_str(), i)).collect();
    let ends = g.ends();
    let lists: Vec<Vec<IndexedEnd>> = names
        .iter()
        .map(|v| {
            ends[v.as_str()]
                .iter()
                .map(|e| {
                    let opp = ends[e.far.as_str()].iter().position(|f| f.edge == e.edge && f.reversed != e.reversed).expect("edge has two ends");
                    (e.kind.clone(), e.edge.clone(), e.reversed, index[e.far.as_str()], opp)
                })
                .collect()
        })
        .collect();
    (names, lists)
}

/// Partial common cover grown from a root vertex: every cover vertex lies over a
/// pair `(v1, v2)` and pairs the ends of `v1` with the ends of `v2`.
struct Grow<'a> {
    names: [Vec<String>; 2],
    ends: [Vec<Vec<IndexedEnd>>; 2],
    types: [Vec<&'a String>; 2],
    limit: usize,
    verts: Vec<(usize, usize)>,
    /// Per cover vertex and end of `v1`: the paired end of `v2` and the neighbour.
    pairs: Vec<Vec<Option<(usize, usize)>>>,
    used: Vec<Vec<bool>>,
    counts: [Vec<usize>; 2],
    nodes: usize,
}

const NODE_LIMIT: usize = 5_000_000;

impl<'a> Grow<'a> {
    fn new(g1: &'a TypedGraph, g2: &'a TypedGraph) -> Self {
        let (n1, e1) = indexed_ends(g1);
        let (n2, e2) = indexed_ends(g2);
        Grow {
            types: [g1.types.values().collect(), g2.types.values().collect()],
            counts: [vec![0; n1.len()], vec![0; n2.len()]],
            names: [n1, n2],
            ends: [e1, e2],
            limit: 0,
            verts: Vec::new(),
            pairs: Vec::new(),
            used: Vec::new(),
            nodes: 0,
        }
    }

    fn push(&mut self, v1: usize, v2: usize) {
        self.verts.push((v1, v2));
        self.pairs.push(vec![None; self.ends[0][v1].len()]);
        self.used.push(vec![false; self.ends[1][v2].len()]);
        self.counts[0][v1] += 1;
        self.counts[1][v2] += 1;
    }

    fn pop(&mut self) {
        let (v1, v2) = self.verts.pop().expect("nonempty");
        self.pairs.pop();
        self.used.pop();
        self.counts[0][v1] -= 1;
        self.counts[1][v2] -= 1;
    }

    fn room(&self, v1: usize, v2: usize) -> bool {
        self.verts.len() < self.limit
            && (self.counts[0][v1] + 1) * self.names[0].len() <= self.limit
            && (self.counts[1][v2] + 1) * self.names[1].len() <= self.limit
    }

    fn link(&mut self, u: usize, i: usize, j: usize, w: usize, k: usize, l: usize, on: bool) {
        self.pairs[u][i] = on.then_some((j, w));
        self.used[u][j] = on;
        self.pairs[w][k] = on.then_some((l, u));
        self.used[w][l] = on;
    }

    fn run(&mut self, limit: usize, accept: &mut dyn FnMut(CommonCover) -> bool) -> Result<bool> {
        self.limit = limit;
        for v2 in 0..self.names[1].len() {
            if self.types[1][v2] != self.types[0][0] {
                continue;
            }
            self.push(0, v2);
            let done = self.step(accept)?;
            self.pop();
            if done {
                return Ok(true);
            }
        }
        Ok(false)
    }

    fn step(&mut self, accept: &mut dyn FnMut(CommonCover) -> bool) -> Result<bool> {
        self.nodes += 1;
        if self.nodes > NODE_LIMIT {
            return Err(Error::TooLarge { size: self.nodes, limit: NODE_LIMIT });
        }
        let open = self.pairs.iter().enumerate().find_map(|(u, p)| p.iter().position(Option::is_none).map(|i| (u, i)));
        let Some((u, i)) = open else {
            return Ok(accept(self.build()));
        };
        let (v1, v2) = self.verts[u];
        let (kind, _, _, far1, k) = self.ends[0][v1][i].clone();
        for j in 0..self.ends[1][v2].len() {
            let (ref kind2, _, _, far2, l) = self.ends[1][v2][j];
            if self.used[u][j] || *kind2 != kind || self.types[0][far1] != self.types[1][far2] {
                continue;
            }
            let targets: Vec<usize> = (0..self.verts.len())
                .filter(|&w| self.verts[w] == (far1, far2) && self.pairs[w][k].is_none() && !self.used[w][l] && !(w == u && (k == i || l == j)))
                .collect();
            for w in targets {
                self.link(u, i, j, w, k, l, true);
                let done = self.step(accept)?;
                self.link(u, i, j, w, k, l, false);
                if done {
                    return Ok(true);
                }
            }
            if self.room(far1, far2) {
                self.push(far1, far2);
                let w = self.verts.len() - 1;
                self.link(u, i, j, w, k, l, true);
                let done = self.step(accept)?;
                self.link(u, i, j, w, k, l, false);
                self.pop();
                if done {
                    return Ok(true);
                }
            }
        }
        Ok(false)
    }

    fn build(&self) -> CommonCover {
        let mut seen: BTreeMap<(usize, usize), usize> = BTreeMap::new();
        let names: Vec<String> = self
            .verts
            .iter()
            .map(|&(v1, v2)| {
                let n = seen.entry((v1, v2)).or_default();
                *n += 1;
                format!("{}|{}/{}", self.names[0][v1], self.names[1][v2], *n - 1)
            })
            .collect();
        let name = |u: usize| names[u].clone();
        let mut lifts: BTreeMap<&String, usize> = BTreeMap::new();
        let mut cover = TypedGraph::default();
        let mut first = CoveringMap::default();
        let mut second = CoveringMap::default();
        for (u, &(v1, v2)) in self.verts.iter().enumerate() {
            cover.add_vertex(name(u), self.types[0][v1].clone());
            first.vertex_map.insert(name(u), self.names[0][v1].clone());
            second.vertex_map.insert(name(u), self.names[1][v2].clone());
        }
        for (u, &(v1, v2)) in self.verts.iter().enumerate() {
            for (i, (kind, e1, r1, _, _)) in self.ends[0][v1].iter().enumerate() {
                if *r1 {
                    continue;
                }
                let (j, w) = self.pairs[u][i].expect("complete");
                let (_, e2, r2, _, _) = &self.ends[1][v2][j];
                let n = lifts.entry(e1).or_default();
                let id = format!("{e1}/{n}");
                *n += 1;
                cover.add_edge(id.clone(), name(u), name(w), kind.clone());
                first.edge_map.insert(id.clone(), DirectedEdge::forward(e1.clone()));
                second.edge_map.insert(id, DirectedEdge { edge: e2.clone(), reversed: *r2 });
            }
        }
        CommonCover { cover, first, second }
    }
}

/// Matching of sorted ends at `v` (in the cover) onto the sorted ends of its image.
fn local_permutation(cover: &TypedGraph, base: &TypedGraph, map: &CoveringMap, v: &str) -> Vec<usize> {
    let base_ends = &base.ends()[map.vertex_map[v].as_str()];
    cover.ends()[v]
        .iter()
        .map(|e| {
            let d = &map.edge_map[&e.edge];
            base_ends
                .iter()
                .position(|f| f.edge == d.edge && f.reversed == (e.reversed ^ d.reversed))
                .expect("covering is locally bijective")
        })
        .collect()
}

/// Whether every vertex whose type carries permutation constraints matches the
/// ends of its two images by an allowed permutation.
fn permitted(g1: &TypedGraph, g2: &TypedGraph, found: &CommonCover) -> bool {
    let constraints: BTreeMap<&String, BTreeSet<&Vec<usize>>> = g1
        .permutations
        .iter()
        .chain(&g2.permutations)
        .fold(BTreeMap::new(), |mut acc, (t, ps)| {
            acc.entry(t).or_default().extend(ps.iter());
            acc
        });
    for (v, ty) in &found.cover.types {
        let Some(allowed) = constraints.get(ty) else { continue };
        let p1 = local_permutation(&found.cover, g1, &found.first, v);
        let p2 = local_permutation(&found.cover, g2, &found.second, v);
        let mut composed = vec![0; p1.len()];
        for (i, &x) in p1.iter().enumerate() {
            composed[x] = p2[i];
        }
        if !allowed.contains(&composed) {
            return false;
        }
    }
    true
}

/// Bounded search for a common cover with at most `max_size` vertices.
/// `Ok(None)` is a verdict of the bounded search only.
pub fn find_common_cover(g1: &TypedGraph, g2: &TypedGraph, max_size: usize) -> Result<Option<CommonCover>> {
    find_common_cover_with(g1, g2, max_size, false)
}

/// As [`find_common_cover`]; with `force`, a non-tree base quotient is searched
/// the same way instead of being rejected.
///
/// The cover is grown from a vertex over the first vertex of `g1`: each open end
/// is paired with an end of the second image and joined to an existing or a new
/// cover vertex. Sizes are tried in increasing order, so the first cover found
/// is a smallest one.
pub fn find_common_cover_with(g1: &TypedGraph, g2: &TypedGraph, max_size: usize, force: bool) -> Result<Option<CommonCover>> {
    for g in [g1, g2] {
        validate_typed(g).into_result("typed graph")?;
    }
    let (r1, r2) = (degree_refinement(g1), degree_refinement(g2));
    if r1.matrix != r2.matrix {
        return Err(Error::IncompatibleRefinement);
    }
    if g1 == g2 && g1.types.len() <= max_size {
        return Ok(Some(CommonCover { cover: g1.clone(), first: CoveringMap::identity(g1), second: CoveringMap::identity(g2) }));
    }
    if !force && !base_is_tree(&r1) {
        return Err(Error::BaseNotTree);
    }
    let first_block = |r: &Refinement| r.blocks.values().filter(|b| **b == 0).count();
    let (n1, n2) = (first_block(&r1), first_block(&r2));
    let p = n2 / num_integer::gcd(n1, n2);
    let mut search = Grow::new(g1, g2);
    for m in 1.. {
        let total = p * m * g1.types.len();
        if total > max_size {
            return Ok(None);
        }
        if total % g2.types.len() != 0 {
            continue;
        }
        let mut found = None;
        search.run(total, &mut |candidate| {
            let ok = verify_covering(&candidate.cover, g1, &candidate.first)
                && verify_covering(&candidate.cover, g2, &candidate.second)
                && permitted(g1, g2, &candidate);
            if ok {
                found = Some(candidate);
            }
            ok
        })?;
        if found.is_some() {
            return Ok(found);
        }
    }
    unreachable!("the size bound ends the loop")
}

/// Some covering `cover -> base`, by backtracking from the least cover vertex.
pub fn find_covering(cover: &TypedGraph, base: &TypedGraph) -> Option<CoveringMap> {
    if !cover.is_connected() {
        return None;
    }
    let matcher = Matcher { cover, base, cover_ends: cover.ends(), base_ends: base.ends() };
    let start = cover.types.keys().next()?;
    for v in base.types.keys() {
        if base.types[v] != cover.types[start] {
            continue;
        }
        let mut map = CoveringMap::default();
        map.vertex_map.insert(start.clone(), v.clone());
        if matcher.extend(&mut map) {
            return Some(map);
        }
    }
    None
}

struct Matcher<'a> {
    cover: &'a TypedGraph,
    base: &'a TypedGraph,
    cover_ends: BTreeMap<&'a str, Vec<End>>,
    base_ends: BTreeMap<&'a str, Vec<End>>,
}

impl Matcher<'_> {
    fn image(&self, map: &CoveringMap, e: &End) -> Option<(String, bool)> {
        map.edge_map.get(&e.edge).map(|d| (d.edge.clone(), e.reversed ^ d.reversed))
    }

    fn extend(&self, map: &mut CoveringMap) -> bool {
        let next = map.vertex_map.iter().find_map(|(h, v)| {
            self.cover_ends[h.as_str()].iter().find(|e| !map.edge_map.contains_key(&e.edge)).map(|e| (h.clone(), v.clone(), e.clone()))
        });
        let Some((h, v, end)) = next else {
            return map.vertex_map.len() == self.cover.types.len() && verify_covering(self.cover, self.base, map);
        };
        let used: BTreeSet<(String, bool)> = self.cover_ends[h.as_str()].iter().filter_map(|e| self.image(map, e)).collect();
        for f in &self.base_ends[v.as_str()] {
            if f.kind != end.kind || used.contains(&(f.edge.clone(), f.reversed)) {
                continue;
            }
            let far_ok = match map.vertex_map.get(&end.far) {
                Some(w) => *w == f.far,
                None => self.cover.types[&end.far] == self.base.types[&f.far],
            };
            if !far_ok {
                continue;
            }
            let fresh = !map.vertex_map.contains_key(&end.far);
            map.edge_map.insert(end.edge.clone(), DirectedEdge { edge: f.edge.clone(), reversed: end.reversed ^ f.reversed });
            if fresh {
                map.vertex_map.insert(end.far.clone(), f.far.clone());
            }
            // the other end of the edge must not reuse an image end at the far vertex
            let clash = {
                let far_ends = &self.cover_ends[end.far.as_str()];
                let mut images: Vec<(String, bool)> = far_ends.iter().filter_map(|e| self.image(map, e)).collect();
                let n = images.len();
                images.sort();
                images.dedup();
                images.len() != n
            };
            if !clash && self.extend(map) {
                return true;
            }
            map.edge_map.remove(&end.edge);
            if fresh {
                map.vertex_map.remove(&end.far);
            }
        }
        false
    }
}
