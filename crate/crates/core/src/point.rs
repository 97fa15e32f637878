use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

use serde::{Deserialize, Deserializer, Serialize, Serializer};

pub const MAX_DIM: usize = 3;

/// A point (or displacement) in R^n, n in {1, 2, 3}.
///
/// Unused trailing coordinates are kept at zero so norms and dot products can
/// run over the full array.
#[derive(Clone, Copy, PartialEq)]
pub struct Point {
    coords: [f64; MAX_DIM],
    dim: usize,
}

impl Point {
    /// Panics if `coords` is empty or longer than [`MAX_DIM`].
    pub fn new(coords: &[f64]) -> Self {
        Self::try_new(coords).expect("point dimension must be 1, 2 or 3")
    }

    pub fn try_new(coords: &[f64]) -> Option<Self> {
        if coords.is_empty() || coords.len() > MAX_DIM {
            return None;
        }
        let mut c = [0.0; MAX_DIM];
        c[..coords.len()].copy_from_slice(coords);
        Some(Self {
            coords: c,
            dim: coords.len(),
        })
    }

    pub fn zero(dim: usize) -> Self {
        assert!((1..=MAX_DIM).contains(&dim));
        Self {
            coords: [0.0; MAX_DIM],
            dim,
        }
    }

    pub fn xy(x: f64, y: f64) -> Self {
        Self {
            coords: [x, y, 0.0],
            dim: 2,
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn coords(&self) -> &[f64] {
        &self.coords[..self.dim]
    }

    pub fn get(&self, i: usize) -> f64 {
        self.coords[i]
    }

    pub fn set(&mut self, i: usize, v: f64) {
        assert!(i < self.dim);
        self.coords[i] = v;
    }

    pub fn is_finite(&self) -> bool {
        self.coords().iter().all(|c| c.is_finite())
    }

    pub fn dot(&self, other: &Point) -> f64 {
        self.coords[0] * other.coords[0]
            + self.coords[1] * other.coords[1]
            + self.coords[2] * other.coords[2]
    }

    pub fn norm_squared(&self) -> f64 {
        self.dot(self)
    }

    pub fn norm(&self) -> f64 {
        self.norm_squared().sqrt()
    }

    pub fn distance(&self, other: &Point) -> f64 {
        (*self - *other).norm()
    }

    pub fn scale(&self, c: f64) -> Point {
        *self * c
    }

    pub fn normalized(&self) -> Option<Point> {
        let n = self.norm();
        (n > 0.0 && n.is_finite()).then(|| *self * (1.0 / n))
    }
}

impl Add for Point {
    type Output = Point;
    fn add(mut self, rhs: Point) -> Point {
        debug_assert_eq!(self.dim, rhs.dim);
        for i in 0..MAX_DIM {
            self.coords[i] += rhs.coords[i];
        }
        self
    }
}

impl Sub for Point {
    type Output = Point;
    fn sub(mut self, rhs: Point) -> Point {
        debug_assert_eq!(self.dim, rhs.dim);
        for i in 0..MAX_DIM {
            self.coords[i] -= rhs.coords[i];
        }
        self
    }
}

impl Mul<f64> for Point {
    type Output = Point;
    fn mul(mut self, rhs: f64) -> Point {
        for c in &mut self.coords {
            *c *= rhs;
        }
        self
    }
}

impl Neg for Point {
    type Output = Point;
    fn neg(self) -> Point {
        self * -1.0
    }
}

impl fmt::Debug for Point {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_list().entries(self.coords()).finish()
    }
}

impl Serialize for Point {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        self.coords().serialize(s)
    }
}

impl<'de> Deserialize<'de> for Point {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let v = Vec::<f64>::deserialize(d)?;
        Point::try_new(&v).ok_or_else(|| serde::de::Error::custom("point must have 1 to 3 coordinates"))
    }
}
