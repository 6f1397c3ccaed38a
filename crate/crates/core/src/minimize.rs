//! Minimal NAH-graphs.
//!
//! [`normalize_labels`] replaces every vertex label by its declared minimal
//! orbifold. [`minimize`] then searches for the coarsest quotient: every vertex
//! picks a covering among the degree-preserving coverings reachable in the
//! catalog (identity included), vertices are partitioned by target label and
//! refined Moore-style on their pushed-forward edge signatures, and vertices whose
//! covering folds cusps with different signatures together move to a finer
//! covering. Both loops are monotone, so the result is a greatest fixpoint.

use std::collections::{BTreeMap, BTreeSet};

use crate::canon::canonical_form;
use crate::catalog::{minimal_quotient_of, reachable_coverings, CoveringEntry, OrbifoldCatalog};
use crate::error::{Error, Result};
use crate::graph::{validate_with, CuspCoverage, DirectedEdge, Edge, NahGraph};
use crate::linear::{coset_canonical, Matrix2};
use crate::morphism::{compose_morphisms, pushforward_edge_label, verify_morphism, GraphMorphism};

/// Longest chain of declared coverings composed when listing candidates.
pub const MAX_COVERING_DEPTH: usize = 8;

/// Default vertex limit of [`brute_force_minimize`].
pub const BRUTE_FORCE_LIMIT: usize = 6;

/// Replaces each label by its minimal orbifold for the label's own cusp degrees
/// and pushes the edge labels forward.
pub fn normalize_labels(g: &NahGraph) -> Result<(NahGraph, GraphMorphism)> {
    let mut coverings = BTreeMap::new();
    for (v, orb) in &g.vertices {
        let entry = g.catalog.orbifold(orb)?;
        coverings.insert(v.clone(), minimal_quotient_of(&g.catalog, orb, &entry.own_degrees())?);
    }
    let mut out = NahGraph::new(g.catalog.clone());
    for (v, cov) in &coverings {
        out.add_vertex(v.clone(), cov.target.clone());
    }
    let mut edge_map = BTreeMap::new();
    for (id, e) in &g.edges {
        let hc = &coverings[&e.head];
        let tc = &coverings[&e.tail];
        let ha = hc.assignment(&e.head_cusp).ok_or_else(|| Error::NotDeclared(format!("cusp {} in covering {}", e.head_cusp, hc.id)))?;
        let ta = tc.assignment(&e.tail_cusp).ok_or_else(|| Error::NotDeclared(format!("cusp {} in covering {}", e.tail_cusp, tc.id)))?;
        let label = pushforward_edge_label(&e.label, &ha.psi, &ta.psi)?;
        out.add_edge(id.clone(), Edge::new(&e.head, &ha.target_cusp, &e.tail, &ta.target_cusp, label));
        edge_map.insert(id.clone(), DirectedEdge::forward(id.clone()));
    }
    let morphism = GraphMorphism {
        vertex_map: g.vertices.keys().map(|v| (v.clone(), v.clone())).collect(),
        edge_map,
        vertex_coverings: coverings,
    };
    Ok((out, morphism))
}

/// Candidate coverings of `orbifold`: non-identity ones from most to least folded
/// (total degree, then target id), the identity last.
pub(crate) fn candidate_list(cat: &OrbifoldCatalog, orbifold: &str) -> Result<Vec<CoveringEntry>> {
    let mut all = reachable_coverings(cat, orbifold, MAX_COVERING_DEPTH)?;
    let identity = all.remove(0);
    let mut keyed = Vec::with_capacity(all.len());
    for c in all {
        let class = crate::catalog::covering_class(cat, &c)?;
        keyed.push((std::cmp::Reverse(c.total_degree), class, c));
    }
    keyed.sort_by(|a, b| (&a.0, &a.1).cmp(&(&b.0, &b.1)));
    let mut out: Vec<CoveringEntry> = keyed.into_iter().map(|(_, _, c)| c).collect();
    out.push(identity);
    Ok(out)
}

/// What an edge end looks like after folding: neighbour block, neighbour image
/// cusp and pushed-forward label coset. `None` for an unglued cusp.
type EndSig = Option<(usize, String, Matrix2)>;
type Signature = BTreeMap<String, BTreeSet<EndSig>>;

struct Folding<'a> {
    g: &'a NahGraph,
    vertices: Vec<String>,
    index: BTreeMap<String, usize>,
    candidates: Vec<Vec<CoveringEntry>>,
}

impl<'a> Folding<'a> {
    fn new(g: &'a NahGraph) -> Result<Self> {
        let vertices: Vec<String> = g.vertices.keys().cloned().collect();
        let index = vertices.iter().enumerate().map(|(i, v)| (v.clone(), i)).collect();
        let mut candidates = Vec::with_capacity(vertices.len());
        for v in &vertices {
            candidates.push(candidate_list(&g.catalog, g.orbifold_of(v)?)?);
        }
        Ok(Folding { g, vertices, index, candidates })
    }

    fn signature(&self, v: usize, cov: &CoveringEntry, choice: &[usize], blocks: &[usize]) -> Result<Signature> {
        let g = self.g;
        let target = g.catalog.orbifold(&cov.target)?;
        let mut sig: Signature = target.cusps.iter().map(|c| (c.id.clone(), BTreeSet::new())).collect();
        let vid = &self.vertices[v];
        for cusp in &g.catalog.orbifold(g.orbifold_of(vid)?)?.cusps {
            let a = cov.assignment(&cusp.id).ok_or_else(|| Error::NotDeclared(format!("cusp {} in {}", cusp.id, cov.id)))?;
            let t_spec = target.cusp(&a.target_cusp).ok_or_else(|| Error::NotDeclared(a.target_cusp.clone()))?;
            let slot = sig.entry(a.target_cusp.clone()).or_default();
            let out = g.edges_at(vid, &cusp.id);
            if out.is_empty() {
                slot.insert(None);
            }
            for d in out {
                let w = self.index[g.tail(&d)?];
                let wc = &self.candidates[w][choice[w]];
                let wa = wc.assignment(g.tail_cusp(&d)?).ok_or_else(|| Error::NotDeclared(format!("cusp in {}", wc.id)))?;
                let pushed = pushforward_edge_label(&g.label(&d)?, &a.psi, &wa.psi)?;
                slot.insert(Some((blocks[w], wa.target_cusp.clone(), coset_canonical(&pushed, &t_spec.symmetry()))));
            }
        }
        Ok(sig)
    }

    /// Coarsest partition by target label that is stable under signatures.
    fn refine(&self, choice: &[usize]) -> Result<(Vec<usize>, Vec<Signature>)> {
        let n = self.vertices.len();
        let targets: Vec<&str> = (0..n).map(|v| self.candidates[v][choice[v]].target.as_str()).collect();
        let names: BTreeSet<&str> = targets.iter().copied().collect();
        let rank: BTreeMap<&str, usize> = names.into_iter().enumerate().map(|(i, t)| (t, i)).collect();
        let mut blocks: Vec<usize> = targets.iter().map(|t| rank[t]).collect();
        loop {
            let mut sigs = Vec::with_capacity(n);
            for v in 0..n {
                sigs.push(self.signature(v, &self.candidates[v][choice[v]], choice, &blocks)?);
            }
            let keys: Vec<(usize, &Signature)> = (0..n).map(|v| (blocks[v], &sigs[v])).collect();
            let distinct: BTreeSet<_> = keys.iter().cloned().collect();
            let lookup: BTreeMap<_, usize> = distinct.into_iter().enumerate().map(|(i, k)| (k, i)).collect();
            let next: Vec<usize> = keys.iter().map(|k| lookup[k]).collect();
            let before = blocks.iter().collect::<BTreeSet<_>>().len();
            let after = next.iter().collect::<BTreeSet<_>>().len();
            if before == after {
                return Ok((blocks, sigs));
            }
            blocks = next;
        }
    }

    fn run(&self) -> Result<(Vec<usize>, Vec<usize>)> {
        let n = self.vertices.len();
        let mut choice = vec![0usize; n];
        loop {
            let (blocks, sigs) = self.refine(&choice)?;
            let inconsistent: Vec<usize> = (0..n).filter(|&v| !consistent(&sigs[v])).collect();
            if inconsistent.is_empty() {
                return Ok((choice, blocks));
            }
            let mut next = choice.clone();
            for v in inconsistent {
                let mut j = choice[v] + 1;
                while j + 1 < self.candidates[v].len() {
                    if consistent(&self.signature(v, &self.candidates[v][j], &choice, &blocks)?) {
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

fn consistent(sig: &Signature) -> bool {
    sig.values().all(|s| s.len() == 1)
}

/// Quotient of `g` by a vertex partition with a covering per vertex. Block names
/// are their least vertex id; each quotient edge takes the least id among the
/// edges over it. Fails if folded edge ends disagree.
pub fn build_quotient(
    g: &NahGraph,
    blocks: &BTreeMap<String, String>,
    coverings: &BTreeMap<String, CoveringEntry>,
) -> Result<(NahGraph, GraphMorphism)> {
    let mut q = NahGraph::new(g.catalog.clone());
    for (v, b) in blocks {
        let target = &coverings[v].target;
        if let Some(existing) = q.vertices.get(b) {
            if existing != target {
                return Err(Error::Invalid {
                    what: "quotient".into(),
                    report: single(format!("block {b}"), "labels", format!("members cover {existing} and {target}")),
                });
            }
        }
        q.add_vertex(b.clone(), target.clone());
    }
    let mut ends: BTreeMap<(String, String), String> = BTreeMap::new();
    let mut edge_map = BTreeMap::new();
    for (id, e) in &g.edges {
        let ha = coverings[&e.head].assignment(&e.head_cusp).ok_or_else(|| Error::UnknownEdge(id.clone()))?;
        let ta = coverings[&e.tail].assignment(&e.tail_cusp).ok_or_else(|| Error::UnknownEdge(id.clone()))?;
        let h_end = (blocks[&e.head].clone(), ha.target_cusp.clone());
        let t_end = (blocks[&e.tail].clone(), ta.target_cusp.clone());
        if !ends.contains_key(&h_end) && !ends.contains_key(&t_end) {
            let label = pushforward_edge_label(&e.label, &ha.psi, &ta.psi)?;
            q.add_edge(id.clone(), Edge::new(&h_end.0, &h_end.1, &t_end.0, &t_end.1, label));
            ends.insert(h_end.clone(), id.clone());
            ends.insert(t_end.clone(), id.clone());
        }
        let (Some(qh), Some(qt)) = (ends.get(&h_end), ends.get(&t_end)) else {
            return Err(fold_error(id));
        };
        if qh != qt {
            return Err(fold_error(id));
        }
        let qe = &q.edges[qh];
        let forward = (qe.head.as_str(), qe.head_cusp.as_str()) == (h_end.0.as_str(), h_end.1.as_str())
            && (qe.tail.as_str(), qe.tail_cusp.as_str()) == (t_end.0.as_str(), t_end.1.as_str());
        edge_map.insert(id.clone(), DirectedEdge { edge: qh.clone(), reversed: !forward });
    }
    let morphism = GraphMorphism { vertex_map: blocks.clone(), edge_map, vertex_coverings: coverings.clone() };
    Ok((q, morphism))
}

fn single(subject: String, condition: &str, detail: String) -> crate::Report {
    let mut r = crate::Report::new();
    r.push(subject, condition, detail);
    r
}

fn fold_error(edge: &str) -> Error {
    Error::Invalid {
        what: "quotient".into(),
        report: single(format!("edge {edge}"), "folding", "edge ends fold onto different quotient edges".into()),
    }
}

fn checked_quotient(
    g: &NahGraph,
    blocks: &BTreeMap<String, String>,
    coverings: &BTreeMap<String, CoveringEntry>,
) -> Result<(NahGraph, GraphMorphism)> {
    let (q, m) = build_quotient(g, blocks, coverings)?;
    let mut report = verify_morphism(g, &q, &m);
    report.extend(validate_with(&q, CuspCoverage::Injective));
    report.into_result("quotient morphism")?;
    Ok((q, m))
}

/// The minimal graph of the bisimilarity class of `g` with a morphism onto it.
pub fn minimize(g: &NahGraph) -> Result<(NahGraph, GraphMorphism)> {
    let (normal, to_normal) = normalize_labels(g)?;
    let folding = Folding::new(&normal)?;
    let (choice, blocks) = folding.run()?;
    let mut least: BTreeMap<usize, String> = BTreeMap::new();
    for (v, b) in folding.vertices.iter().zip(&blocks) {
        least.entry(*b).or_insert_with(|| v.clone());
    }
    let block_names: BTreeMap<String, String> =
        folding.vertices.iter().zip(&blocks).map(|(v, b)| (v.clone(), least[b].clone())).collect();
    let coverings: BTreeMap<String, CoveringEntry> = folding
        .vertices
        .iter()
        .enumerate()
        .map(|(i, v)| (v.clone(), folding.candidates[i][choice[i]].clone()))
        .collect();
    let (q, to_q) = checked_quotient(&normal, &block_names, &coverings)?;
    Ok((q, compose_morphisms(&to_normal, &to_q)?))
}

pub fn bisimilar(a: &NahGraph, b: &NahGraph) -> Result<bool> {
    Ok(canonical_form(&minimize(a)?.0)? == canonical_form(&minimize(b)?.0)?)
}

/// Restricted-growth enumeration of all set partitions of `0..n`.
fn set_partitions(n: usize) -> Vec<Vec<usize>> {
    fn go(i: usize, n: usize, cur: &mut Vec<usize>, max: usize, out: &mut Vec<Vec<usize>>) {
        if i == n {
            out.push(cur.clone());
            return;
        }
        for b in 0..=max {
            cur.push(b);
            go(i + 1, n, cur, max.max(b + 1), out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    go(0, n, &mut Vec::new(), 0, &mut out);
    out
}

/// Exhaustive search over vertex partitions and candidate coverings for the
/// smallest verified quotient of `g`: fewest vertices, then fewest edges, then
/// fewest labels that still cover something, then largest total covering degree.
/// Intended as a test oracle.
pub fn brute_force_minimize(g: &NahGraph, max_vertices: usize) -> Result<NahGraph> {
    let n = g.vertices.len();
    if n > max_vertices {
        return Err(Error::TooLarge { size: n, limit: max_vertices });
    }
    let vertices: Vec<String> = g.vertices.keys().cloned().collect();
    let mut candidates = Vec::with_capacity(n);
    for v in &vertices {
        candidates.push(reachable_coverings(&g.catalog, g.orbifold_of(v)?, MAX_COVERING_DEPTH)?);
    }
    type Score = (usize, usize, usize, std::cmp::Reverse<u64>, String);
    let mut best: Option<(Score, NahGraph)> = None;
    for partition in set_partitions(n) {
        let mut choice = vec![0usize; n];
        loop {
            let coherent = (0..n).all(|i| {
                (0..i).all(|j| partition[i] != partition[j] || candidates[i][choice[i]].target == candidates[j][choice[j]].target)
            });
            if coherent {
                let names: BTreeMap<String, String> =
                    (0..n).map(|i| (vertices[i].clone(), format!("b{}", partition[i]))).collect();
                let coverings: BTreeMap<String, CoveringEntry> =
                    (0..n).map(|i| (vertices[i].clone(), candidates[i][choice[i]].clone())).collect();
                if let Ok((q, _)) = checked_quotient(g, &names, &coverings) {
                    let degree: u64 = coverings.values().map(|c| c.total_degree).sum();
                    let mut open = 0;
                    for orb in q.vertices.values() {
                        if reachable_coverings(&g.catalog, orb, MAX_COVERING_DEPTH)?.len() > 1 {
                            open += 1;
                        }
                    }
                    let score = (q.vertices.len(), q.edges.len(), open, std::cmp::Reverse(degree), canonical_form(&q)?);
                    if best.as_ref().is_none_or(|(s, _)| score < *s) {
                        best = Some((score, q));
                    }
                }
            }
            // odometer over candidate choices
            let mut i = 0;
            while i < n {
                choice[i] += 1;
                if choice[i] < candidates[i].len() {
                    break;
                }
                choice[i] = 0;
                i += 1;
            }
            if i == n {
                break;
            }
        }
    }
    Ok(best.expect("the identity quotient always verifies").1)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::sync::Arc;

    use crate::canon::isomorphic;
    use crate::catalog::{CuspAssignment, CuspSpec, OrbifoldEntry, QuotientDecl};
    use crate::graph::validate;
    use crate::linear::{int, ratio, Matrix2};

    fn catalog() -> Arc<OrbifoldCatalog> {
        let mut cat = OrbifoldCatalog::new();
        cat.add_orbifold(OrbifoldEntry::new("N", false, vec![CuspSpec::torus("c0"), CuspSpec::torus("c1")]));
        let mut m = OrbifoldEntry::new("M", false, vec![CuspSpec::torus("c0"), CuspSpec::torus("c1")]);
        m.is_minimal = false;
        m.minimal_quotients.push(QuotientDecl {
            targets: [("c0".to_string(), 1), ("c1".to_string(), 1)].into(),
            covering: "p".into(),
        });
        cat.add_orbifold(m);
        cat.add_covering(CoveringEntry {
            id: "p".into(),
            source: "M".into(),
            target: "N".into(),
            total_degree: 2,
            cusp_assignments: vec![
                CuspAssignment { source_cusp: "c0".into(), target_cusp: "c0".into(), psi: Matrix2::ints(2, 0, 0, 1) },
                CuspAssignment { source_cusp: "c1".into(), target_cusp: "c1".into(), psi: Matrix2::ints(2, 0, 0, 1) },
            ],
            synthetic: false,
        });
        Arc::new(cat)
    }

    /// A cycle of `n` copies of `orb`, cusp c1 of each glued to cusp c0 of the next.
    fn ring(n: usize, orb: &str, label: Matrix2) -> NahGraph {
        let mut g = NahGraph::new(catalog());
        for i in 0..n {
            g.add_vertex(format!("v{i}"), orb);
        }
        for i in 0..n {
            g.add_edge(format!("e{i}"), Edge::new(&format!("v{i}"), "c1", &format!("v{}", (i + 1) % n), "c0", label.clone()));
        }
        g
    }

    #[test]
    fn ring_collapses_to_one_vertex() {
        let g = ring(3, "N", Matrix2::ints(0, 1, 1, 0));
        assert!(validate(&g).is_empty());
        let (q, m) = minimize(&g).unwrap();
        assert_eq!(q.vertices.len(), 1);
        assert_eq!(q.edges.len(), 1);
        assert!(verify_morphism(&g, &q, &m).is_empty());
        let (qq, _) = minimize(&q).unwrap();
        assert!(isomorphic(&q, &qq).unwrap());
        assert!(isomorphic(&q, &brute_force_minimize(&g, 6).unwrap()).unwrap());
    }

    #[test]
    fn different_labels_do_not_merge() {
        let mut g = ring(2, "N", Matrix2::ints(0, 1, 1, 0));
        g.edges.get_mut("e1").unwrap().label = Matrix2::ints(0, 1, 3, 0);
        let (q, _) = minimize(&g).unwrap();
        assert_eq!(q.vertices.len(), 2);
        assert_eq!(brute_force_minimize(&g, 6).unwrap().vertices.len(), 2);
    }

    #[test]
    fn normalization_pushes_labels_forward() {
        let g = ring(1, "M", Matrix2::ints(0, 1, 1, 0));
        let (n, m) = normalize_labels(&g).unwrap();
        assert_eq!(n.vertices["v0"], "N");
        // psi = diag(2, 1) at both ends: [[0, 2], [1/2, 0]] up to sign
        assert_eq!(n.edges["e0"].label, Matrix2::new(int(0), int(2), ratio(1, 2), int(0)));
        assert!(verify_morphism(&g, &n, &m).is_empty());
        let (q, mq) = minimize(&g).unwrap();
        assert!(verify_morphism(&g, &q, &mq).is_empty());
    }

    #[test]
    fn partitions_are_counted_by_bell_numbers() {
        let counts: Vec<usize> = (0..7).map(|n| set_partitions(n).len()).collect();
        assert_eq!(counts, vec![1, 1, 2, 5, 15, 52, 203]);
    }

    #[test]
    fn brute_force_limit() {
        let g = ring(7, "N", Matrix2::ints(0, 1, 1, 0));
        assert!(matches!(brute_force_minimize(&g, 6), Err(Error::TooLarge { size: 7, limit: 6 })));
    }
}
