use std::fmt;
use std::ops::{Mul, Neg};

use num_traits::{One, Zero};
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use super::rational::{format_rational, int, is_integer, parse_rational, Rational};
use crate::error::{Error, Result};

/// A column vector in the rational plane.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Debug)]
pub struct Vector2(pub [Rational; 2]);

impl Vector2 {
    pub fn new(x: Rational, y: Rational) -> Self {
        Vector2([x, y])
    }

    pub fn ints(x: i64, y: i64) -> Self {
        Vector2([int(x), int(y)])
    }

    pub fn x(&self) -> &Rational {
        &self.0[0]
    }

    pub fn y(&self) -> &Rational {
        &self.0[1]
    }

    pub fn is_zero(&self) -> bool {
        self.0[0].is_zero() && self.0[1].is_zero()
    }

    pub fn scale(&self, s: &Rational) -> Vector2 {
        Vector2([&self.0[0] * s, &self.0[1] * s])
    }

    pub fn is_integral(&self) -> bool {
        self.0.iter().all(is_integer)
    }

    /// `Some(t)` with `self = t * other` when the two are parallel and `other` is nonzero.
    pub fn ratio_to(&self, other: &Vector2) -> Option<Rational> {
        if other.is_zero() {
            return None;
        }
        let cross = &self.0[0] * &other.0[1] - &self.0[1] * &other.0[0];
        if !cross.is_zero() {
            return None;
        }
        Some(if !other.0[0].is_zero() {
            &self.0[0] / &other.0[0]
        } else {
            &self.0[1] / &other.0[1]
        })
    }

    /// Sign of the first nonzero coordinate (0 for the zero vector).
    pub fn leading_sign(&self) -> i32 {
        for c in &self.0 {
            if c > &Rational::zero() {
                return 1;
            }
            if c < &Rational::zero() {
                return -1;
            }
        }
        0
    }
}

impl Neg for &Vector2 {
    type Output = Vector2;
    fn neg(self) -> Vector2 {
        Vector2([-&self.0[0], -&self.0[1]])
    }
}

impl fmt::Display for Vector2 {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}, {})", format_rational(&self.0[0]), format_rational(&self.0[1]))
    }
}

/// Exact 2x2 rational matrix, rows first: `rows[i][j]` is row `i`, column `j`.
///
/// The derived ordering is lexicographic over the four entries in row-major order,
/// each compared by value. Coset canonicalization relies on this.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Debug)]
pub struct Matrix2 {
    pub rows: [[Rational; 2]; 2],
}

impl Matrix2 {
    pub fn new(a: Rational, b: Rational, c: Rational, d: Rational) -> Self {
        Matrix2 { rows: [[a, b], [c, d]] }
    }

    /// Integer matrix `[[a, b], [c, d]]`.
    pub fn ints(a: i64, b: i64, c: i64, d: i64) -> Self {
        Matrix2::new(int(a), int(b), int(c), int(d))
    }

    pub fn identity() -> Self {
        Matrix2::ints(1, 0, 0, 1)
    }

    pub fn scalar(s: Rational) -> Self {
        Matrix2::new(s.clone(), Rational::zero(), Rational::zero(), s)
    }

    /// Matrix whose columns are `c0` and `c1`.
    pub fn from_columns(c0: &Vector2, c1: &Vector2) -> Self {
        Matrix2::new(c0.0[0].clone(), c1.0[0].clone(), c0.0[1].clone(), c1.0[1].clone())
    }

    pub fn column(&self, j: usize) -> Vector2 {
        Vector2([self.rows[0][j].clone(), self.rows[1][j].clone()])
    }

    pub fn entries(&self) -> [&Rational; 4] {
        [&self.rows[0][0], &self.rows[0][1], &self.rows[1][0], &self.rows[1][1]]
    }

    pub fn det(&self) -> Rational {
        &self.rows[0][0] * &self.rows[1][1] - &self.rows[0][1] * &self.rows[1][0]
    }

    pub fn trace(&self) -> Rational {
        &self.rows[0][0] + &self.rows[1][1]
    }

    pub fn is_invertible(&self) -> bool {
        !self.det().is_zero()
    }

    pub fn inverse(&self) -> Result<Matrix2> {
        let det = self.det();
        if det.is_zero() {
            return Err(Error::SingularMatrix(self.to_string()));
        }
        let [[a, b], [c, d]] = &self.rows;
        Ok(Matrix2::new(d / &det, -b / &det, -c / &det, a / &det))
    }

    pub fn transpose(&self) -> Matrix2 {
        let [[a, b], [c, d]] = &self.rows;
        Matrix2::new(a.clone(), c.clone(), b.clone(), d.clone())
    }

    pub fn apply(&self, v: &Vector2) -> Vector2 {
        Vector2([
            &self.rows[0][0] * &v.0[0] + &self.rows[0][1] * &v.0[1],
            &self.rows[1][0] * &v.0[0] + &self.rows[1][1] * &v.0[1],
        ])
    }

    pub fn scale(&self, s: &Rational) -> Matrix2 {
        let [[a, b], [c, d]] = &self.rows;
        Matrix2::new(a * s, b * s, c * s, d * s)
    }

    pub fn pow(&self, k: u32) -> Matrix2 {
        (0..k).fold(Matrix2::identity(), |acc, _| &acc * self)
    }

    pub fn is_identity(&self) -> bool {
        *self == Matrix2::identity()
    }

    pub fn is_integral(&self) -> bool {
        self.entries().into_iter().all(is_integer)
    }

    /// Row-major canonical strings, the on-disk representation.
    pub fn to_strings(&self) -> [String; 4] {
        self.entries().map(format_rational)
    }

    pub fn from_strings(s: &[String]) -> std::result::Result<Matrix2, String> {
        if s.len() != 4 {
            return Err(format!("matrix needs 4 entries, got {}", s.len()));
        }
        let mut parsed = Vec::with_capacity(4);
        for entry in s {
            parsed.push(parse_rational(entry).map_err(|e| e.to_string())?);
        }
        let mut it = parsed.into_iter();
        let mut next = || it.next().unwrap();
        Ok(Matrix2::new(next(), next(), next(), next()))
    }
}

impl Mul for &Matrix2 {
    type Output = Matrix2;
    fn mul(self, o: &Matrix2) -> Matrix2 {
        let r = |i: usize, j: usize| &self.rows[i][0] * &o.rows[0][j] + &self.rows[i][1] * &o.rows[1][j];
        Matrix2::new(r(0, 0), r(0, 1), r(1, 0), r(1, 1))
    }
}

impl Mul for Matrix2 {
    type Output = Matrix2;
    fn mul(self, o: Matrix2) -> Matrix2 {
        &self * &o
    }
}

impl Neg for &Matrix2 {
    type Output = Matrix2;
    fn neg(self) -> Matrix2 {
        self.scale(&-Rational::one())
    }
}

impl fmt::Display for Matrix2 {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = self.to_strings();
        write!(f, "[[{}, {}], [{}, {}]]", s[0], s[1], s[2], s[3])
    }
}

impl Serialize for Matrix2 {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        self.to_strings().serialize(s)
    }
}

impl<'de> Deserialize<'de> for Matrix2 {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let raw = Vec::<String>::deserialize(d)?;
        Matrix2::from_strings(&raw).map_err(serde::de::Error::custom)
    }
}

impl Serialize for Vector2 {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        [format_rational(&self.0[0]), format_rational(&self.0[1])].serialize(s)
    }
}

impl<'de> Deserialize<'de> for Vector2 {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let raw = Vec::<String>::deserialize(d)?;
        if raw.len() != 2 {
            return Err(serde::de::Error::custom(format!("vector needs 2 entries, got {}", raw.len())));
        }
        let x = parse_rational(&raw[0]).map_err(serde::de::Error::custom)?;
        let y = parse_rational(&raw[1]).map_err(serde::de::Error::custom)?;
        Ok(Vector2([x, y]))
    }
}
