//! Finite cyclic rotation groups of cusp tangent planes and label cosets.

use serde::{Deserialize, Serialize};

use super::lattice::Lattice2;
use super::matrix::Matrix2;
use super::rational::int;
use crate::error::{Error, Result};

/// Orders a cusp symmetry group can have.
pub const ALLOWED_ORDERS: [u32; 5] = [1, 2, 3, 4, 6];

/// Cyclic group generated by `generator`, of order `order`.
#[derive(Clone, PartialEq, Eq, Hash, Debug, Serialize, Deserialize)]
pub struct CyclicSymmetry {
    pub order: u32,
    pub generator: Matrix2,
}

impl CyclicSymmetry {
    pub fn trivial() -> Self {
        CyclicSymmetry { order: 1, generator: Matrix2::identity() }
    }

    /// Standard generator of order `n` acting on `Z^2`.
    pub fn standard(order: u32) -> Result<Self> {
        let generator = match order {
            1 => Matrix2::identity(),
            2 => Matrix2::ints(-1, 0, 0, -1),
            3 => Matrix2::ints(0, -1, 1, -1),
            4 => Matrix2::ints(0, -1, 1, 0),
            6 => Matrix2::ints(1, -1, 1, 0),
            other => return Err(Error::InvalidOrder(other)),
        };
        Ok(CyclicSymmetry { order, generator })
    }

    /// Group elements `generator^k`, `0 <= k < order`.
    pub fn elements(&self) -> Vec<Matrix2> {
        let mut out = Vec::with_capacity(self.order as usize);
        let mut cur = Matrix2::identity();
        for _ in 0..self.order {
            out.push(cur.clone());
            cur = &cur * &self.generator;
        }
        out
    }

    pub fn contains(&self, m: &Matrix2) -> bool {
        self.elements().iter().any(|e| e == m)
    }

    /// Conjugate group `m F m^-1`.
    pub fn conjugate_by(&self, m: &Matrix2) -> Result<CyclicSymmetry> {
        let inv = m.inverse()?;
        Ok(CyclicSymmetry { order: self.order, generator: &(m * &self.generator) * &inv })
    }

    /// Violations of the group axioms, relative to the lattice it must preserve.
    pub fn check(&self, lattice: &Lattice2) -> Vec<String> {
        let mut out = Vec::new();
        if !ALLOWED_ORDERS.contains(&self.order) {
            out.push(format!("order {} not in {{1,2,3,4,6}}", self.order));
            return out;
        }
        if self.generator.det() != int(1) {
            out.push(format!("generator {} has determinant != 1", self.generator));
        }
        if !self.generator.pow(self.order).is_identity() {
            out.push(format!("generator {} does not have order dividing {}", self.generator, self.order));
        } else if (1..self.order).any(|k| self.generator.pow(k).is_identity()) {
            out.push(format!("generator {} has order smaller than {}", self.generator, self.order));
        }
        let expected_trace = match self.order {
            1 => 2,
            2 => -2,
            3 => -1,
            4 => 0,
            _ => 1,
        };
        if self.generator.trace() != int(expected_trace) {
            out.push(format!("generator trace {} is not that of a rotation of order {}", self.generator.trace(), self.order));
        }
        match lattice.image(&self.generator) {
            Ok(img) if &img == lattice => {}
            _ => out.push(format!("generator {} does not preserve the cusp lattice", self.generator)),
        }
        out
    }
}

/// Canonical representative of the coset `l F`: the least of `l g^k` under the
/// row-major entry order.
pub fn coset_canonical(l: &Matrix2, f: &CyclicSymmetry) -> Matrix2 {
    f.elements()
        .iter()
        .map(|g| l * g)
        .min()
        .expect("groups are nonempty")
}

/// Canonical representative of the left coset `F l`.
pub fn left_coset_canonical(l: &Matrix2, f: &CyclicSymmetry) -> Matrix2 {
    f.elements().iter().map(|g| g * l).min().expect("groups are nonempty")
}

/// Whether `l g_src l^-1` is a power of `g_dst`, i.e. `l` carries `f_src` into `f_dst`.
pub fn conjugates_into(l: &Matrix2, f_src: &CyclicSymmetry, f_dst: &CyclicSymmetry) -> Result<bool> {
    let inv = l.inverse()?;
    let conj = &(l * &f_src.generator) * &inv;
    Ok(f_dst.contains(&conj))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linear::rational::ratio;

    #[test]
    fn standard_generators_are_valid() {
        for n in ALLOWED_ORDERS {
            let f = CyclicSymmetry::standard(n).unwrap();
            let lattice = Lattice2::standard();
            assert!(f.check(&lattice).is_empty(), "order {n}: {:?}", f.check(&lattice));
        }
        assert!(CyclicSymmetry::standard(5).is_err());
    }

    #[test]
    fn trivial_coset_is_identity() {
        let l = Matrix2::identity();
        assert_eq!(coset_canonical(&l, &CyclicSymmetry::trivial()), l);
    }

    #[test]
    fn two_element_coset_takes_min() {
        let l = Matrix2::ints(0, 1, 1, 0);
        let f = CyclicSymmetry::standard(2).unwrap();
        assert_eq!(coset_canonical(&l, &f), Matrix2::ints(0, -1, -1, 0));
    }

    #[test]
    fn order_four_coset_is_invariant() {
        let f = CyclicSymmetry::standard(4).unwrap();
        let l = Matrix2::new(ratio(1, 2), ratio(3, 2), int(2), int(-1));
        let reps: Vec<_> = f.elements().iter().map(|g| &l * g).collect();
        let canon = coset_canonical(&l, &f);
        for r in &reps {
            assert_eq!(coset_canonical(r, &f), canon);
        }
        assert_eq!(&canon, reps.iter().min().unwrap());
    }

    #[test]
    fn conjugation_conditions() {
        let f6 = CyclicSymmetry::standard(6).unwrap();
        let f1 = CyclicSymmetry::trivial();
        assert!(conjugates_into(&Matrix2::identity(), &f6, &f6).unwrap());
        assert!(conjugates_into(&Matrix2::ints(3, 1, 7, 2), &f1, &f6).unwrap());
        // the hexagonal rotation itself commutes with the generator
        assert!(conjugates_into(&f6.generator, &f6, &f6).unwrap());
        // a shear does not normalize the hexagonal rotation group
        assert!(!conjugates_into(&Matrix2::ints(1, 1, 0, 1), &f6, &f6).unwrap());
        assert!(conjugates_into(&Matrix2::ints(1, 2, 0, 0), &f6, &f6).is_err());
    }
}
