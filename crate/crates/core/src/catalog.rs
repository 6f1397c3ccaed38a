//! Symbolic stand-ins for cusped hyperbolic 3-orbifolds.
//!
//! Nothing here computes hyperbolic geometry. Orbifolds, their cusps, the coverings
//! between them and the minimal-orbifold quotients are declared data; this module
//! checks that the declarations are internally consistent and composes coverings.

use std::collections::{BTreeMap, BTreeSet};

use num_traits::{One, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linear::symmetry::{left_coset_canonical, ALLOWED_ORDERS};
use crate::linear::{conjugates_into, lattice_index, CyclicSymmetry, Lattice2, Matrix2, Rational};
use crate::report::Report;

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CuspSpec {
    pub id: String,
    /// Orbifold degree, the order of the cusp symmetry group.
    pub degree: u32,
    pub lattice: Lattice2,
    /// Generator of the cusp symmetry group. Defaults to the standard rotation of
    /// order `degree`, which preserves `Z^2` and the hexagonal-coordinates lattice.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub symmetry: Option<Matrix2>,
}

impl CuspSpec {
    pub fn new(id: impl Into<String>, degree: u32, lattice: Lattice2) -> Self {
        CuspSpec { id: id.into(), degree, lattice, symmetry: None }
    }

    /// Torus cusp with lattice `Z^2`.
    pub fn torus(id: impl Into<String>) -> Self {
        CuspSpec::new(id, 1, Lattice2::standard())
    }

    pub fn symmetry(&self) -> CyclicSymmetry {
        match &self.symmetry {
            Some(g) => CyclicSymmetry { order: self.degree, generator: g.clone() },
            None => CyclicSymmetry::standard(self.degree).unwrap_or_else(|_| CyclicSymmetry::trivial()),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct QuotientDecl {
    /// Target degree per cusp id.
    pub targets: BTreeMap<String, u32>,
    pub covering: String,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OrbifoldEntry {
    pub id: String,
    pub arithmetic: bool,
    pub cusps: Vec<CuspSpec>,
    pub is_minimal: bool,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub minimal_quotients: Vec<QuotientDecl>,
    #[serde(default, skip_serializing_if = "is_false")]
    pub synthetic: bool,
}

fn is_false(b: &bool) -> bool {
    !*b
}

impl OrbifoldEntry {
    pub fn new(id: impl Into<String>, arithmetic: bool, cusps: Vec<CuspSpec>) -> Self {
        OrbifoldEntry {
            id: id.into(),
            arithmetic,
            cusps,
            is_minimal: true,
            minimal_quotients: Vec::new(),
            synthetic: false,
        }
    }

    pub fn cusp(&self, id: &str) -> Option<&CuspSpec> {
        self.cusps.iter().find(|c| c.id == id)
    }

    pub fn own_degrees(&self) -> BTreeMap<String, u32> {
        self.cusps.iter().map(|c| (c.id.clone(), c.degree)).collect()
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CuspAssignment {
    pub source_cusp: String,
    pub target_cusp: String,
    /// Tangent map from the source cusp plane to the target cusp plane.
    pub psi: Matrix2,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CoveringEntry {
    pub id: String,
    pub source: String,
    pub target: String,
    pub total_degree: u64,
    pub cusp_assignments: Vec<CuspAssignment>,
    #[serde(default, skip_serializing_if = "is_false")]
    pub synthetic: bool,
}

impl CoveringEntry {
    pub fn assignment(&self, source_cusp: &str) -> Option<&CuspAssignment> {
        self.cusp_assignments.iter().find(|a| a.source_cusp == source_cusp)
    }

    pub fn is_identity_of(&self, orbifold: &str) -> bool {
        self.source == orbifold
            && self.target == orbifold
            && self.total_degree == 1
            && self
                .cusp_assignments
                .iter()
                .all(|a| a.source_cusp == a.target_cusp && a.psi.is_identity())
    }
}

/// Prefix of the implicit identity covering ids, `id:<orbifold>`.
pub const IDENTITY_PREFIX: &str = "id:";

pub fn identity_covering(entry: &OrbifoldEntry) -> CoveringEntry {
    CoveringEntry {
        id: format!("{IDENTITY_PREFIX}{}", entry.id),
        source: entry.id.clone(),
        target: entry.id.clone(),
        total_degree: 1,
        cusp_assignments: entry
            .cusps
            .iter()
            .map(|c| CuspAssignment {
                source_cusp: c.id.clone(),
                target_cusp: c.id.clone(),
                psi: Matrix2::identity(),
            })
            .collect(),
        synthetic: false,
    }
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "CatalogDoc", into = "CatalogDoc")]
pub struct OrbifoldCatalog {
    pub orbifolds: BTreeMap<String, OrbifoldEntry>,
    pub coverings: BTreeMap<String, CoveringEntry>,
    /// Free-form provenance note, e.g. the marker on synthesized fragments.
    pub note: Option<String>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct CatalogDoc {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    note: Option<String>,
    orbifolds: Vec<OrbifoldEntry>,
    #[serde(default)]
    coverings: Vec<CoveringEntry>,
}

impl TryFrom<CatalogDoc> for OrbifoldCatalog {
    type Error = String;
    fn try_from(doc: CatalogDoc) -> std::result::Result<Self, String> {
        let mut cat = OrbifoldCatalog { note: doc.note, ..Default::default() };
        for o in doc.orbifolds {
            if o.id.starts_with(IDENTITY_PREFIX) {
                return Err(format!("orbifold id {:?} uses the reserved prefix {IDENTITY_PREFIX:?}", o.id));
            }
            if cat.orbifolds.insert(o.id.clone(), o).is_some() {
                return Err("duplicate orbifold id".into());
            }
        }
        for c in doc.coverings {
            if c.id.starts_with(IDENTITY_PREFIX) {
                return Err(format!("covering id {:?} uses the reserved prefix {IDENTITY_PREFIX:?}", c.id));
            }
            let id = c.id.clone();
            if cat.coverings.insert(c.id.clone(), c).is_some() {
                return Err(format!("duplicate covering id {id:?}"));
            }
        }
        Ok(cat)
    }
}

impl From<OrbifoldCatalog> for CatalogDoc {
    fn from(cat: OrbifoldCatalog) -> Self {
        CatalogDoc {
            note: cat.note,
            orbifolds: cat.orbifolds.into_values().collect(),
            coverings: cat.coverings.into_values().collect(),
        }
    }
}

impl OrbifoldCatalog {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add_orbifold(&mut self, entry: OrbifoldEntry) {
        self.orbifolds.insert(entry.id.clone(), entry);
    }

    pub fn add_covering(&mut self, entry: CoveringEntry) {
        self.coverings.insert(entry.id.clone(), entry);
    }

    pub fn orbifold(&self, id: &str) -> Result<&OrbifoldEntry> {
        self.orbifolds.get(id).ok_or_else(|| Error::UnknownOrbifold(id.to_string()))
    }

    pub fn cusp(&self, orbifold: &str, cusp: &str) -> Result<&CuspSpec> {
        self.orbifold(orbifold)?.cusp(cusp).ok_or_else(|| Error::UnknownCusp {
            orbifold: orbifold.to_string(),
            cusp: cusp.to_string(),
        })
    }

    /// Resolves a covering id; `id:<orbifold>` names the identity covering.
    pub fn covering(&self, id: &str) -> Result<CoveringEntry> {
        if let Some(orb) = id.strip_prefix(IDENTITY_PREFIX) {
            return Ok(identity_covering(self.orbifold(orb)?));
        }
        self.coverings
            .get(id)
            .cloned()
            .ok_or_else(|| Error::NotDeclared(format!("covering {id}")))
    }

    /// Declared coverings with the given source, in id order.
    pub fn coverings_from<'a>(&'a self, source: &'a str) -> impl Iterator<Item = &'a CoveringEntry> + 'a {
        self.coverings.values().filter(move |c| c.source == source)
    }

    /// Adds every entry of `other`; entries of `other` win on id clashes.
    pub fn merge(&mut self, other: &OrbifoldCatalog) {
        for o in other.orbifolds.values() {
            self.add_orbifold(o.clone());
        }
        for c in other.coverings.values() {
            self.add_covering(c.clone());
        }
    }

    /// Id of a covering in this catalog equal to `cov`, if any.
    pub fn find_declared(&self, cov: &CoveringEntry) -> Option<String> {
        if let Ok(src) = self.orbifold(&cov.source) {
            if cov.is_identity_of(&src.id) {
                return Some(format!("{IDENTITY_PREFIX}{}", src.id));
            }
        }
        self.coverings.get(&cov.id).filter(|c| *c == cov).map(|c| c.id.clone())
    }
}

/// Degree of the cusp cover induced by `psi`: `[Lambda : psi Lambda'] * f / f'`.
pub fn cusp_covering_degree(psi: &Matrix2, source: &CuspSpec, target: &CuspSpec) -> Result<Rational> {
    let image = source.lattice.image(psi)?;
    let (index, _) = lattice_index(&image, &target.lattice);
    Ok(index * Rational::from_integer(target.degree.into()) / Rational::from_integer(source.degree.into()))
}

fn check_cusp(orbifold: &str, cusp: &CuspSpec, report: &mut Report) {
    let subject = format!("orbifold {orbifold} cusp {}", cusp.id);
    if !ALLOWED_ORDERS.contains(&cusp.degree) {
        report.push(&subject, "cusp-degree", format!("degree {} not in {{1,2,3,4,6}}", cusp.degree));
        return;
    }
    for problem in cusp.symmetry().check(&cusp.lattice) {
        report.push(&subject, "cusp-symmetry", problem);
    }
}

/// Checks one covering against explicit source and target entries.
pub fn validate_covering(cov: &CoveringEntry, source: &OrbifoldEntry, target: &OrbifoldEntry) -> Report {
    let mut report = Report::new();
    let subject = format!("covering {}", cov.id);
    if cov.source != source.id || cov.target != target.id {
        report.push(&subject, "covering-ends", "source/target do not match the supplied entries");
        return report;
    }
    if cov.total_degree == 0 {
        report.push(&subject, "covering-degree", "total degree must be positive");
    }
    let mut seen = BTreeSet::new();
    let mut per_target: BTreeMap<&str, Rational> = BTreeMap::new();
    for a in &cov.cusp_assignments {
        let Some(sc) = source.cusp(&a.source_cusp) else {
            report.push(&subject, "covering-cusps", format!("unknown source cusp {}", a.source_cusp));
            continue;
        };
        let Some(tc) = target.cusp(&a.target_cusp) else {
            report.push(&subject, "covering-cusps", format!("unknown target cusp {}", a.target_cusp));
            continue;
        };
        if !seen.insert(a.source_cusp.as_str()) {
            report.push(&subject, "covering-cusps", format!("source cusp {} assigned twice", a.source_cusp));
        }
        let det = a.psi.det();
        if det <= Rational::zero() {
            report.push(&subject, "covering-orientation", format!("det(psi) = {} at cusp {} is not positive", det, a.source_cusp));
            continue;
        }
        let image = sc.lattice.image(&a.psi).expect("psi invertible");
        if !image.is_sublattice_of(&tc.lattice) {
            report.push(&subject, "covering-lattice", format!("psi does not map the lattice of {} into that of {}", sc.id, tc.id));
        }
        match conjugates_into(&a.psi, &sc.symmetry(), &tc.symmetry()) {
            Ok(true) => {}
            _ => report.push(&subject, "covering-symmetry", format!("psi does not carry the symmetry of {} into that of {}", sc.id, tc.id)),
        }
        let local = cusp_covering_degree(&a.psi, sc, tc).expect("psi invertible");
        if !local.denom().is_one() {
            report.push(&subject, "covering-degree", format!("cusp {} covers with non-integral degree {}", sc.id, local));
        }
        *per_target.entry(tc.id.as_str()).or_insert_with(Rational::zero) += local;
    }
    for c in &source.cusps {
        if !seen.contains(c.id.as_str()) {
            report.push(&subject, "covering-cusps", format!("source cusp {} not assigned", c.id));
        }
    }
    let total = Rational::from_integer(cov.total_degree.into());
    for c in &target.cusps {
        let sum = per_target.get(c.id.as_str()).cloned().unwrap_or_else(Rational::zero);
        if sum != total {
            report.push(
                &subject,
                "covering-degree-sum",
                format!("cusp {} is covered with degree {} but the total degree is {}", c.id, sum, total),
            );
        }
    }
    report
}

fn check_orbifold(cat: &OrbifoldCatalog, o: &OrbifoldEntry, report: &mut Report) {
    let subject = format!("orbifold {}", o.id);
    if o.cusps.is_empty() {
        report.push(&subject, "cusps", "an orbifold label needs at least one cusp");
    }
    let mut ids = BTreeSet::new();
    for c in &o.cusps {
        if !ids.insert(&c.id) {
            report.push(&subject, "cusp-ids", format!("duplicate cusp id {}", c.id));
        }
        check_cusp(&o.id, c, report);
    }
    for decl in &o.minimal_quotients {
        let dsub = format!("{subject} quotient {}", decl.covering);
        if let Err(e) = check_targets(o, &decl.targets) {
            report.push(&dsub, "quotient-targets", e.to_string());
        }
        let cov = match cat.covering(&decl.covering) {
            Ok(c) => c,
            Err(_) => {
                report.push(&dsub, "quotient-covering", "covering not declared");
                continue;
            }
        };
        if cov.source != o.id {
            report.push(&dsub, "quotient-covering", "covering does not start at this orbifold");
            continue;
        }
        let Ok(target) = cat.orbifold(&cov.target) else { continue };
        if !target.is_minimal {
            report.push(&dsub, "quotient-minimal", format!("quotient {} is not declared minimal", target.id));
        }
        if target.cusps.len() != o.cusps.len() {
            report.push(&dsub, "quotient-cusps", "a minimal quotient keeps the number of cusps");
        }
        let images: BTreeSet<_> = cov.cusp_assignments.iter().map(|a| &a.target_cusp).collect();
        if images.len() != cov.cusp_assignments.len() {
            report.push(&dsub, "quotient-cusps", "cusps of a minimal quotient correspond one to one");
        }
        for a in &cov.cusp_assignments {
            if let (Some(t), Some(&target_degree)) = (target.cusp(&a.target_cusp), decl.targets.get(&a.source_cusp)) {
                if target_degree % t.degree != 0 {
                    report.push(&dsub, "quotient-targets", format!("quotient cusp {} has degree {} not dividing target {}", t.id, t.degree, target_degree));
                }
            }
        }
        if o.is_minimal && decl.targets == o.own_degrees() && !cov.is_identity_of(&o.id) {
            report.push(&dsub, "quotient-minimal", "a minimal orbifold is its own quotient for its own degrees");
        }
    }
}

/// Every violated catalog invariant, with witnesses.
pub fn validate_catalog(cat: &OrbifoldCatalog) -> Report {
    let mut report = Report::new();
    for o in cat.orbifolds.values() {
        check_orbifold(cat, o, &mut report);
    }
    for c in cat.coverings.values() {
        let (src, tgt) = match (cat.orbifold(&c.source), cat.orbifold(&c.target)) {
            (Ok(s), Ok(t)) => (s, t),
            _ => {
                report.push(format!("covering {}", c.id), "covering-ends", format!("unresolved source {} or target {}", c.source, c.target));
                continue;
            }
        };
        report.extend(validate_covering(c, src, tgt));
    }
    report
}

/// The composite covering `second . first`.
pub fn compose_coverings(first: &CoveringEntry, second: &CoveringEntry) -> Result<CoveringEntry> {
    if first.target != second.source {
        return Err(Error::MismatchedEnds {
            first_target: first.target.clone(),
            second_source: second.source.clone(),
        });
    }
    let mut assignments = Vec::with_capacity(first.cusp_assignments.len());
    for a in &first.cusp_assignments {
        let b = second.assignment(&a.target_cusp).ok_or_else(|| Error::UnknownCusp {
            orbifold: second.source.clone(),
            cusp: a.target_cusp.clone(),
        })?;
        assignments.push(CuspAssignment {
            source_cusp: a.source_cusp.clone(),
            target_cusp: b.target_cusp.clone(),
            psi: &b.psi * &a.psi,
        });
    }
    let id = if first.id.starts_with(IDENTITY_PREFIX) {
        second.id.clone()
    } else if second.id.starts_with(IDENTITY_PREFIX) {
        first.id.clone()
    } else {
        format!("{}+{}", first.id, second.id)
    };
    Ok(CoveringEntry {
        id,
        source: first.source.clone(),
        target: second.target.clone(),
        total_degree: first.total_degree * second.total_degree,
        cusp_assignments: assignments,
        synthetic: first.synthetic || second.synthetic,
    })
}

fn check_targets(entry: &OrbifoldEntry, targets: &BTreeMap<String, u32>) -> Result<()> {
    for (cusp, t) in targets {
        let c = entry.cusp(cusp).ok_or_else(|| Error::InvalidTarget(format!("unknown cusp {cusp} on {}", entry.id)))?;
        if !ALLOWED_ORDERS.contains(t) {
            return Err(Error::InvalidTarget(format!("target {t} for cusp {cusp} is not in {{1,2,3,4,6}}")));
        }
        if t % c.degree != 0 {
            return Err(Error::InvalidTarget(format!("target {t} for cusp {cusp} is not a multiple of its degree {}", c.degree)));
        }
    }
    for c in &entry.cusps {
        if !targets.contains_key(&c.id) {
            return Err(Error::InvalidTarget(format!("no target for cusp {}", c.id)));
        }
    }
    Ok(())
}

/// The declared covering from `orbifold_id` to its minimal orbifold for the given targets.
pub fn minimal_quotient_of(
    cat: &OrbifoldCatalog,
    orbifold_id: &str,
    targets: &BTreeMap<String, u32>,
) -> Result<CoveringEntry> {
    let entry = cat.orbifold(orbifold_id)?;
    check_targets(entry, targets)?;
    if let Some(decl) = entry.minimal_quotients.iter().find(|d| &d.targets == targets) {
        return cat.covering(&decl.covering);
    }
    if entry.is_minimal && *targets == entry.own_degrees() {
        return Ok(identity_covering(entry));
    }
    Err(Error::NotDeclared(format!("minimal quotient of {orbifold_id} for targets {targets:?}")))
}

/// Identity of a covering up to the symmetry of the target cusps: target, cusp
/// assignment, and each `psi` as a left coset of the target cusp group.
pub fn covering_class(cat: &OrbifoldCatalog, cov: &CoveringEntry) -> Result<(String, Vec<(String, String, Matrix2)>)> {
    let target = cat.orbifold(&cov.target)?;
    let mut parts = Vec::with_capacity(cov.cusp_assignments.len());
    for a in &cov.cusp_assignments {
        let tc = target.cusp(&a.target_cusp).ok_or_else(|| Error::UnknownCusp {
            orbifold: target.id.clone(),
            cusp: a.target_cusp.clone(),
        })?;
        parts.push((a.source_cusp.clone(), a.target_cusp.clone(), left_coset_canonical(&a.psi, &tc.symmetry())));
    }
    parts.sort();
    Ok((cov.target.clone(), parts))
}

/// Whether every cusp keeps its orbifold degree under `cov`.
pub fn preserves_degrees(cat: &OrbifoldCatalog, cov: &CoveringEntry) -> Result<bool> {
    let source = cat.orbifold(&cov.source)?;
    let target = cat.orbifold(&cov.target)?;
    Ok(cov.cusp_assignments.iter().all(|a| {
        match (source.cusp(&a.source_cusp), target.cusp(&a.target_cusp)) {
            (Some(s), Some(t)) => s.degree == t.degree,
            _ => false,
        }
    }))
}

/// All degree-preserving coverings out of `orbifold_id` obtained by composing
/// declared coverings (at most `max_depth` steps), deduplicated by
/// [`covering_class`]. The identity comes first.
pub fn reachable_coverings(cat: &OrbifoldCatalog, orbifold_id: &str, max_depth: usize) -> Result<Vec<CoveringEntry>> {
    let start = identity_covering(cat.orbifold(orbifold_id)?);
    let mut seen = BTreeSet::new();
    seen.insert(covering_class(cat, &start)?);
    let mut out = vec![start.clone()];
    let mut frontier = vec![start];
    for _ in 0..max_depth {
        let mut next = Vec::new();
        for cov in &frontier {
            for step in cat.coverings_from(&cov.target) {
                if !preserves_degrees(cat, step)? {
                    continue;
                }
                let composite = compose_coverings(cov, step)?;
                if seen.insert(covering_class(cat, &composite)?) {
                    out.push(composite.clone());
                    next.push(composite);
                }
            }
        }
        if next.is_empty() {
            break;
        }
        frontier = next;
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linear::{canonical_lattice, Vector2};

    fn one_cusp(id: &str, degree: u32) -> OrbifoldEntry {
        OrbifoldEntry::new(id, false, vec![CuspSpec::new("c0", degree, Lattice2::standard())])
    }

    fn double_cover(id: &str, src: &str, tgt: &str, psi: Matrix2, total: u64) -> CoveringEntry {
        CoveringEntry {
            id: id.into(),
            source: src.into(),
            target: tgt.into(),
            total_degree: total,
            cusp_assignments: vec![CuspAssignment { source_cusp: "c0".into(), target_cusp: "c0".into(), psi }],
            synthetic: false,
        }
    }

    #[test]
    fn single_orbifold_catalog_is_valid() {
        let mut cat = OrbifoldCatalog::new();
        cat.add_orbifold(one_cusp("N", 1));
        assert!(validate_catalog(&cat).is_empty());
    }

    #[test]
    fn orientation_reversing_psi_is_reported() {
        let mut cat = OrbifoldCatalog::new();
        cat.add_orbifold(one_cusp("A", 1));
        cat.add_orbifold(one_cusp("B", 1));
        cat.add_covering(double_cover("c", "A", "B", Matrix2::ints(1, 0, 0, -1), 1));
        let report = validate_catalog(&cat);
        assert!(report.has_condition("covering-orientation"), "{report}");
    }

    #[test]
    fn degree_sum_mismatch_is_reported() {
        // psi = diag(1, 3) has index 3, but total_degree says 2
        let mut cat = OrbifoldCatalog::new();
        cat.add_orbifold(one_cusp("A", 1));
        cat.add_orbifold(one_cusp("B", 1));
        cat.add_covering(double_cover("c", "A", "B", Matrix2::ints(1, 0, 0, 3), 2));
        let report = validate_catalog(&cat);
        assert!(report.has_condition("covering-degree-sum"), "{report}");
        cat.add_covering(double_cover("c", "A", "B", Matrix2::ints(1, 0, 0, 3), 3));
        assert!(validate_catalog(&cat).is_empty());
    }

    #[test]
    fn orbifold_cusp_degree_counts_toward_sum() {
        // torus cusp wrapping a degree-2 cusp once: index 1 times 2/1
        let mut cat = OrbifoldCatalog::new();
        cat.add_orbifold(one_cusp("T", 1));
        cat.add_orbifold(one_cusp("P", 2));
        cat.add_covering(double_cover("c", "T", "P", Matrix2::identity(), 2));
        assert!(validate_catalog(&cat).is_empty(), "{}", validate_catalog(&cat));
    }

    #[test]
    fn composition_multiplies_degrees() {
        let a = double_cover("ab", "A", "B", Matrix2::ints(1, 0, 0, 2), 2);
        let b = double_cover("bc", "B", "C", Matrix2::ints(3, 0, 0, 1), 3);
        let ab = compose_coverings(&a, &b).unwrap();
        assert_eq!(ab.total_degree, 6);
        assert_eq!(ab.cusp_assignments[0].psi, &Matrix2::ints(3, 0, 0, 1) * &Matrix2::ints(1, 0, 0, 2));
        let mut cat = OrbifoldCatalog::new();
        for id in ["A", "B", "C"] {
            cat.add_orbifold(one_cusp(id, 1));
        }
        cat.add_covering(ab.clone());
        assert!(validate_catalog(&cat).is_empty());
        assert!(matches!(compose_coverings(&b, &a), Err(Error::MismatchedEnds { .. })));
        let id = identity_covering(cat.orbifold("A").unwrap());
        assert_eq!(compose_coverings(&id, &a).unwrap(), a);
    }

    #[test]
    fn minimal_quotient_lookup() {
        let mut cat = OrbifoldCatalog::new();
        let mut n = one_cusp("N", 2);
        n.is_minimal = false;
        n.minimal_quotients.push(QuotientDecl { targets: [("c0".to_string(), 4)].into(), covering: "q".into() });
        cat.add_orbifold(n);
        cat.add_orbifold(one_cusp("Q", 4));
        cat.add_covering(double_cover("q", "N", "Q", Matrix2::identity(), 2));
        assert!(validate_catalog(&cat).is_empty(), "{}", validate_catalog(&cat));

        let got = minimal_quotient_of(&cat, "N", &[("c0".to_string(), 4)].into()).unwrap();
        assert_eq!(got.id, "q");
        assert!(matches!(
            minimal_quotient_of(&cat, "N", &[("c0".to_string(), 3)].into()),
            Err(Error::InvalidTarget(_))
        ));
        assert!(matches!(
            minimal_quotient_of(&cat, "N", &[("c0".to_string(), 2)].into()),
            Err(Error::NotDeclared(_))
        ));
        let id = minimal_quotient_of(&cat, "Q", &[("c0".to_string(), 4)].into()).unwrap();
        assert!(id.is_identity_of("Q"));
    }

    #[test]
    fn symmetry_must_preserve_lattice() {
        let skew = canonical_lattice(&[Vector2::ints(1, 0), Vector2::ints(0, 2)]).unwrap();
        let mut cat = OrbifoldCatalog::new();
        cat.add_orbifold(OrbifoldEntry::new("A", false, vec![CuspSpec::new("c0", 4, skew)]));
        assert!(validate_catalog(&cat).has_condition("cusp-symmetry"));
    }
}
