//! Rank-2 lattices in the rational plane with a canonical Hermite basis.
//!
//! A lattice is stored by the basis matrix `[[a, 0], [c, d]]` (columns `(a, c)` and
//! `(0, d)`) with `a > 0`, `d > 0` and `0 <= c < d`. The basis is unique for each
//! lattice, so lattice equality is equality of stored bases.

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Signed, Zero};
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use super::matrix::{Matrix2, Vector2};
use super::rational::{lcm_denominators, Rational};
use crate::error::{Error, Result};

#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Debug)]
pub struct Lattice2 {
    basis: Matrix2,
}

impl Lattice2 {
    /// The standard lattice `Z^2`.
    pub fn standard() -> Self {
        Lattice2 { basis: Matrix2::identity() }
    }

    /// Lattice spanned by the columns of `m`.
    pub fn from_basis(m: &Matrix2) -> Result<Self> {
        canonical_lattice(&[m.column(0), m.column(1)])
    }

    /// Canonical basis; columns generate the lattice.
    pub fn basis(&self) -> &Matrix2 {
        &self.basis
    }

    /// Covolume `|det(basis)|`.
    pub fn covolume(&self) -> Rational {
        self.basis.det().abs()
    }

    pub fn contains(&self, v: &Vector2) -> bool {
        let inv = self.basis.inverse().expect("lattice basis is invertible");
        inv.apply(v).is_integral()
    }

    pub fn is_sublattice_of(&self, sup: &Lattice2) -> bool {
        let inv = sup.basis.inverse().expect("lattice basis is invertible");
        (&inv * &self.basis).is_integral()
    }

    /// Image of the lattice under an invertible linear map.
    pub fn image(&self, m: &Matrix2) -> Result<Lattice2> {
        if !m.is_invertible() {
            return Err(Error::SingularMatrix(m.to_string()));
        }
        Lattice2::from_basis(&(m * &self.basis))
    }

    pub fn scaled(&self, s: &Rational) -> Result<Lattice2> {
        self.image(&Matrix2::scalar(s.clone()))
    }

    /// Dual lattice `{w : w.v in Z for all v in self}`.
    pub fn dual(&self) -> Lattice2 {
        let inv_t = self.basis.inverse().expect("lattice basis is invertible").transpose();
        Lattice2::from_basis(&inv_t).expect("dual of a full lattice is full")
    }

    /// Shortest positive multiple of `direction` lying in the lattice, with the
    /// same orientation as `direction`.
    pub fn primitive_along(&self, direction: &Vector2) -> Option<Vector2> {
        if direction.is_zero() {
            return None;
        }
        // coordinates in the lattice basis; the line meets the lattice in t * (coords scaled to primitive integers)
        let coords = self.basis.inverse().ok()?.apply(direction);
        let l = lcm_denominators(coords.0.iter());
        let n0 = (&coords.0[0] * Rational::from_integer(l.clone())).to_integer();
        let n1 = (&coords.0[1] * Rational::from_integer(l)).to_integer();
        let g = n0.gcd(&n1);
        let prim = Vector2([Rational::from_integer(n0 / &g), Rational::from_integer(n1 / &g)]);
        Some(self.basis.apply(&prim))
    }
}

/// Canonical basis of the lattice generated by `generators`.
///
/// Fails with [`Error::DegenerateLattice`] when the generators do not span the plane.
pub fn canonical_lattice(generators: &[Vector2]) -> Result<Lattice2> {
    let scale = lcm_denominators(generators.iter().flat_map(|v| v.0.iter()));
    let scale_q = Rational::from_integer(scale.clone());
    let ints: Vec<[BigInt; 2]> = generators
        .iter()
        .map(|v| {
            let s = v.scale(&scale_q);
            [s.0[0].to_integer(), s.0[1].to_integer()]
        })
        .collect();
    let (a, c, d) = integer_hermite(&ints).ok_or(Error::DegenerateLattice)?;
    let basis = Matrix2::new(
        Rational::new(a, scale.clone()),
        Rational::zero(),
        Rational::new(c, scale.clone()),
        Rational::new(d, scale),
    );
    Ok(Lattice2 { basis })
}

/// Hermite data `(a, c, d)` for the integer lattice generated by `vs`: the lattice is
/// spanned by `(a, c)` and `(0, d)` with `a, d > 0` and `0 <= c < d`.
fn integer_hermite(vs: &[[BigInt; 2]]) -> Option<(BigInt, BigInt, BigInt)> {
    let mut pivot: Option<[BigInt; 2]> = None;
    let mut d = BigInt::zero();
    for v in vs {
        if v[0].is_zero() {
            d = d.gcd(&v[1]);
            continue;
        }
        match pivot.take() {
            None => pivot = Some(v.clone()),
            Some(p) => {
                // unimodular combination [[s, t], [-vx/g, px/g]]
                let e = p[0].extended_gcd(&v[0]);
                let (g, s, t) = (e.gcd, e.x, e.y);
                let new_pivot = [&s * &p[0] + &t * &v[0], &s * &p[1] + &t * &v[1]];
                let px = &p[0] / &g;
                let vx = &v[0] / &g;
                let residue_y = &vx * &p[1] - &px * &v[1];
                d = d.gcd(&residue_y);
                pivot = Some(new_pivot);
            }
        }
    }
    let mut p = pivot?;
    if d.is_zero() {
        return None;
    }
    if p[0].is_negative() {
        p = [-&p[0], -&p[1]];
    }
    let c = p[1].mod_floor(&d);
    Some((p[0].clone(), c, d))
}

/// Largest lattice contained in both inputs: the dual of the sum of the duals.
pub fn lattice_intersect(a: &Lattice2, b: &Lattice2) -> Lattice2 {
    let da = a.dual();
    let db = b.dual();
    let sum = canonical_lattice(&[
        da.basis.column(0),
        da.basis.column(1),
        db.basis.column(0),
        db.basis.column(1),
    ])
    .expect("sum of full lattices is full");
    sum.dual()
}

/// Smallest lattice containing both inputs.
pub fn lattice_sum(a: &Lattice2, b: &Lattice2) -> Lattice2 {
    canonical_lattice(&[
        a.basis.column(0),
        a.basis.column(1),
        b.basis.column(0),
        b.basis.column(1),
    ])
    .expect("sum of full lattices is full")
}

/// Covolume ratio `|det sub| / |det sup|` and whether `sub` is contained in `sup`.
/// When contained, the ratio is the (integer) group index.
pub fn lattice_index(sub: &Lattice2, sup: &Lattice2) -> (Rational, bool) {
    (sub.covolume() / sup.covolume(), sub.is_sublattice_of(sup))
}

/// Index as an integer, `None` unless `sub` is contained in `sup`.
pub fn integer_index(sub: &Lattice2, sup: &Lattice2) -> Option<BigInt> {
    let (r, contained) = lattice_index(sub, sup);
    contained.then(|| {
        debug_assert!(r.denom().is_one());
        r.to_integer()
    })
}

impl Serialize for Lattice2 {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        self.basis.serialize(s)
    }
}

/// Accepts any basis matrix and canonicalizes it.
impl<'de> Deserialize<'de> for Lattice2 {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let m = Matrix2::deserialize(d)?;
        Lattice2::from_basis(&m).map_err(serde::de::Error::custom)
    }
}

impl Default for Lattice2 {
    fn default() -> Self {
        Lattice2::standard()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linear::rational::{int, ratio};

    fn lat(cols: &[(i64, i64)]) -> Lattice2 {
        canonical_lattice(&cols.iter().map(|&(x, y)| Vector2::ints(x, y)).collect::<Vec<_>>()).unwrap()
    }

    #[test]
    fn standard_lattice_basis() {
        assert_eq!(lat(&[(1, 0), (0, 1)]).basis(), &Matrix2::identity());
    }

    #[test]
    fn unimodular_change_of_basis_is_invisible() {
        // columns of [[2, 1], [1, 1]] generate Z^2
        assert_eq!(lat(&[(2, 1), (1, 1)]), Lattice2::standard());
        assert_eq!(lat(&[(3, 5), (1, 2)]), Lattice2::standard());
    }

    #[test]
    fn redundant_generators_reduce() {
        // (2,0),(1,1),(0,2) generate the checkerboard lattice of index 2
        let l = lat(&[(2, 0), (1, 1), (0, 2)]);
        assert_eq!(l.basis(), &Matrix2::ints(1, 0, 1, 2));
        assert_eq!(l.covolume(), int(2));
    }

    #[test]
    fn degenerate_generators() {
        assert!(matches!(
            canonical_lattice(&[Vector2::ints(1, 2), Vector2::ints(2, 4)]),
            Err(Error::DegenerateLattice)
        ));
        assert!(canonical_lattice(&[Vector2::ints(1, 0)]).is_err());
        assert!(canonical_lattice(&[]).is_err());
    }

    #[test]
    fn nested_intersection_and_index() {
        let z = Lattice2::standard();
        let two = lat(&[(2, 0), (0, 2)]);
        assert_eq!(lattice_intersect(&z, &two), two);
        assert_eq!(lattice_intersect(&z, &z), z);
        assert_eq!(lattice_index(&two, &z), (int(4), true));
        assert_eq!(lattice_index(&z, &two), (ratio(1, 4), false));
        assert_eq!(lattice_index(&z, &z), (int(1), true));
    }

    #[test]
    fn rational_bases() {
        let half = canonical_lattice(&[Vector2::new(ratio(1, 2), ratio(1, 2)), Vector2::ints(1, 0)]).unwrap();
        assert_eq!(half.covolume(), ratio(1, 2));
        assert!(Lattice2::standard().is_sublattice_of(&half));
        assert_eq!(lattice_intersect(&Lattice2::standard(), &half), Lattice2::standard());
    }

    #[test]
    fn primitive_vectors() {
        let z = Lattice2::standard();
        assert_eq!(z.primitive_along(&Vector2::ints(4, -6)), Some(Vector2::ints(2, -3)));
        assert_eq!(
            z.primitive_along(&Vector2::new(ratio(1, 3), int(0))),
            Some(Vector2::ints(1, 0))
        );
        let two = lat(&[(2, 0), (0, 2)]);
        assert_eq!(two.primitive_along(&Vector2::ints(1, 1)), Some(Vector2::ints(2, 2)));
    }
}
