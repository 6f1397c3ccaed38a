//! Canonical forms and isomorphisms.
//!
//! NAH-graphs have an ordered cusp list at every vertex and each cusp carries at
//! most one edge, so a traversal from a chosen root is fully determined; the
//! canonical form is the least traversal over all roots. Graphs without that
//! rigidity (H-graphs, typed graphs) go through [`canonical_labeling`], an
//! individualization-refinement search over vertex- and arc-coloured graphs.

use std::collections::{BTreeMap, BTreeSet};

use crate::catalog::identity_covering;
use crate::error::Result;
use crate::graph::{DirectedEdge, NahGraph};
use crate::linear::coset_canonical;
use crate::morphism::GraphMorphism;

/// Serialization of the component of `root`, visiting cusps in catalog order.
/// Returns the text and the visiting order.
fn traversal(g: &NahGraph, root: &str) -> Result<(String, Vec<String>)> {
    let mut order = vec![root.to_string()];
    let mut index: BTreeMap<String, usize> = BTreeMap::from([(root.to_string(), 0)]);
    let mut out = String::new();
    let mut i = 0;
    while i < order.len() {
        let v = order[i].clone();
        let orb = g.orbifold_of(&v)?;
        out.push_str(&format!("[{orb}"));
        for cusp in &g.catalog.orbifold(orb)?.cusps {
            match g.edge_at(&v, &cusp.id) {
                None => out.push_str(&format!(" {}:-", cusp.id)),
                Some(d) => {
                    let w = g.tail(&d)?.to_string();
                    let next = order.len();
                    let wi = *index.entry(w.clone()).or_insert_with(|| {
                        order.push(w.clone());
                        next
                    });
                    let label = coset_canonical(&g.label(&d)?, &cusp.symmetry());
                    out.push_str(&format!(" {}:{}.{}={}", cusp.id, wi, g.tail_cusp(&d)?, label));
                }
            }
        }
        out.push(']');
        i += 1;
    }
    Ok((out, order))
}

fn best_root(g: &NahGraph, component: &BTreeSet<String>) -> Result<(String, String)> {
    let mut best: Option<(String, String)> = None;
    for r in component {
        let (text, _) = traversal(g, r)?;
        if best.as_ref().is_none_or(|(t, _)| text < *t) {
            best = Some((text, r.clone()));
        }
    }
    Ok(best.expect("components are nonempty"))
}

fn components(g: &NahGraph) -> Vec<BTreeSet<String>> {
    let mut seen = BTreeSet::new();
    let mut out = Vec::new();
    for v in g.vertices.keys() {
        if !seen.contains(v) {
            let c = g.component_of(v);
            seen.extend(c.iter().cloned());
            out.push(c);
        }
    }
    out
}

/// Isomorphism-invariant text of `g`: equal exactly for isomorphic graphs, where
/// isomorphisms preserve orbifold ids, cusp ids and label cosets.
pub fn canonical_form(g: &NahGraph) -> Result<String> {
    let mut parts = Vec::new();
    for c in components(g) {
        parts.push(best_root(g, &c)?.0);
    }
    parts.sort();
    Ok(parts.join("|"))
}

/// An isomorphism `a -> b` with identity vertex coverings, when one exists.
/// Both graphs must be connected.
pub fn find_isomorphism(a: &NahGraph, b: &NahGraph) -> Result<Option<GraphMorphism>> {
    if a.vertices.len() != b.vertices.len() || a.edges.len() != b.edges.len() || !a.is_connected() || !b.is_connected() {
        return Ok(None);
    }
    let all: BTreeSet<String> = a.vertices.keys().cloned().collect();
    let (text, root) = best_root(a, &all)?;
    let (_, order_a) = traversal(a, &root)?;
    for rb in b.vertices.keys() {
        let (tb, order_b) = traversal(b, rb)?;
        if tb != text {
            continue;
        }
        let vertex_map: BTreeMap<String, String> = order_a.iter().cloned().zip(order_b.iter().cloned()).collect();
        let mut edge_map = BTreeMap::new();
        for id in a.edges.keys() {
            let e = DirectedEdge::forward(id.clone());
            let (h, hc, tc) = (a.head(&e)?, a.head_cusp(&e)?, a.tail_cusp(&e)?);
            let f = a.head_spec(&e)?.symmetry();
            let label = coset_canonical(&a.label(&e)?, &f);
            let image = b
                .edges_at(&vertex_map[h], hc)
                .into_iter()
                .find(|d| b.tail_cusp(d).is_ok_and(|c| c == tc) && b.label(d).is_ok_and(|l| coset_canonical(&l, &f) == label));
            match image {
                Some(d) => {
                    edge_map.insert(id.clone(), d);
                }
                None => return Ok(None),
            }
        }
        let mut vertex_coverings = BTreeMap::new();
        for (v, orb) in &a.vertices {
            vertex_coverings.insert(v.clone(), identity_covering(a.catalog.orbifold(orb)?));
        }
        return Ok(Some(GraphMorphism { vertex_map, edge_map, vertex_coverings }));
    }
    Ok(None)
}

pub fn isomorphic(a: &NahGraph, b: &NahGraph) -> Result<bool> {
    Ok(canonical_form(a)? == canonical_form(b)?)
}

/// A graph with coloured vertices and coloured directed arcs (parallel arcs allowed).
/// Undirected edges are two opposite arcs.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct ColoredGraph {
    pub colors: Vec<String>,
    pub arcs: Vec<(usize, usize, String)>,
}

impl ColoredGraph {
    pub fn add_vertex(&mut self, color: impl Into<String>) -> usize {
        self.colors.push(color.into());
        self.colors.len() - 1
    }

    pub fn add_arc(&mut self, from: usize, to: usize, color: impl Into<String>) {
        self.arcs.push((from, to, color.into()));
    }

    /// Text of the graph with vertex `order[i]` renamed to `i`.
    fn serialize(&self, order: &[usize]) -> String {
        let mut pos = vec![0; order.len()];
        for (i, &v) in order.iter().enumerate() {
            pos[v] = i;
        }
        let vertices: Vec<&str> = order.iter().map(|&v| self.colors[v].as_str()).collect();
        let mut arcs: Vec<(usize, usize, &str)> = self.arcs.iter().map(|(a, b, c)| (pos[*a], pos[*b], c.as_str())).collect();
        arcs.sort();
        let mut out = String::new();
        for c in vertices {
            out.push_str(&format!("({c})"));
        }
        out.push('#');
        for (a, b, c) in arcs {
            out.push_str(&format!("({a},{b},{c})"));
        }
        out
    }

    /// Colour refinement: ranks stable under counting coloured arcs into each class.
    fn refine(&self, mut ranks: Vec<usize>) -> Vec<usize> {
        let n = self.colors.len();
        loop {
            let mut sigs: Vec<(usize, Vec<(bool, &str, usize)>)> = (0..n).map(|v| (ranks[v], Vec::new())).collect();
            for (a, b, c) in &self.arcs {
                sigs[*a].1.push((true, c.as_str(), ranks[*b]));
                sigs[*b].1.push((false, c.as_str(), ranks[*a]));
            }
            for s in &mut sigs {
                s.1.sort();
            }
            let distinct: BTreeSet<_> = sigs.iter().cloned().collect();
            let lookup: BTreeMap<_, usize> = distinct.into_iter().enumerate().map(|(i, s)| (s, i)).collect();
            let next: Vec<usize> = sigs.iter().map(|s| lookup[s]).collect();
            let before = ranks.iter().collect::<BTreeSet<_>>().len();
            let after = next.iter().collect::<BTreeSet<_>>().len();
            ranks = next;
            if after == before {
                return ranks;
            }
        }
    }

    fn search(&self, ranks: Vec<usize>, best: &mut Option<(String, Vec<usize>)>) {
        let ranks = self.refine(ranks);
        let n = ranks.len();
        let mut cells: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
        for v in 0..n {
            cells.entry(ranks[v]).or_default().push(v);
        }
        match cells.values().find(|c| c.len() > 1) {
            None => {
                let mut order: Vec<usize> = (0..n).collect();
                order.sort_by_key(|&v| ranks[v]);
                let text = self.serialize(&order);
                if best.as_ref().is_none_or(|(b, _)| text < *b) {
                    *best = Some((text, order));
                }
            }
            Some(cell) => {
                for &v in cell {
                    // split v off in front of the rest of its cell
                    let split: Vec<usize> = (0..n).map(|u| 2 * ranks[u] + usize::from(u != v && ranks[u] == ranks[v])).collect();
                    self.search(split, best);
                }
            }
        }
    }

    /// Calls `visit` with every isomorphism `self -> other` (as `map[v] = w`)
    /// until it returns `true`; returns whether some call did.
    pub fn isomorphisms(&self, other: &ColoredGraph, mut visit: impl FnMut(&[usize]) -> bool) -> bool {
        let n = self.colors.len();
        if n != other.colors.len() || self.arcs.len() != other.arcs.len() {
            return false;
        }
        let mut union = self.clone();
        for c in &other.colors {
            union.add_vertex(c.clone());
        }
        for (a, b, c) in &other.arcs {
            union.add_arc(a + n, b + n, c.clone());
        }
        let distinct: BTreeSet<&String> = union.colors.iter().collect();
        let lookup: BTreeMap<&String, usize> = distinct.into_iter().enumerate().map(|(i, c)| (c, i)).collect();
        let ranks = union.colors.iter().map(|c| lookup[c]).collect();
        let mut target: Vec<(usize, usize, &str)> = other.arcs.iter().map(|(a, b, c)| (*a, *b, c.as_str())).collect();
        target.sort();
        union.match_search(n, ranks, &target, &mut visit)
    }

    fn match_search(&self, n: usize, ranks: Vec<usize>, target: &[(usize, usize, &str)], visit: &mut dyn FnMut(&[usize]) -> bool) -> bool {
        let ranks = self.refine(ranks);
        let mut cells: BTreeMap<usize, (Vec<usize>, Vec<usize>)> = BTreeMap::new();
        for (v, &r) in ranks.iter().enumerate() {
            let cell = cells.entry(r).or_default();
            if v < n {
                cell.0.push(v);
            } else {
                cell.1.push(v - n);
            }
        }
        if cells.values().any(|(a, b)| a.len() != b.len()) {
            return false;
        }
        let Some((left, right)) = cells.values().filter(|(a, _)| a.len() > 1).min_by_key(|(a, _)| a.len()) else {
            let mut map = vec![0; n];
            for (a, b) in cells.values() {
                map[a[0]] = b[0];
            }
            let mut image: Vec<(usize, usize, &str)> =
                self.arcs.iter().filter(|(a, _, _)| *a < n).map(|(a, b, c)| (map[*a], map[*b], c.as_str())).collect();
            image.sort();
            return image == target && visit(&map);
        };
        let v = left[0];
        let fresh = ranks.iter().max().map_or(0, |m| m + 1);
        for &w in right {
            let mut split = ranks.clone();
            split[v] = fresh;
            split[w + n] = fresh;
            if self.match_search(n, split, target, visit) {
                return true;
            }
        }
        false
    }

    /// Canonical text and the vertex order realizing it.
    pub fn canonical_labeling(&self) -> (String, Vec<usize>) {
        let distinct: BTreeSet<&String> = self.colors.iter().collect();
        let lookup: BTreeMap<&String, usize> = distinct.into_iter().enumerate().map(|(i, c)| (c, i)).collect();
        let ranks = self.colors.iter().map(|c| lookup[c]).collect();
        let mut best = None;
        self.search(ranks, &mut best);
        best.unwrap_or_default()
    }
}
