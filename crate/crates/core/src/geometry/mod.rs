//! Bounded domains in R^n with boundary distance, uniform sampling,
//! exhaustion subdomains and geodesic distance.
//!
//! All domains are open sets: boundary points are never contained.

mod cusp;
mod exhaustion;
mod polygon;

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::point::Point;
use crate::rng::RandomStream;

pub use cusp::Cusp;
pub use exhaustion::{Exhaustion, ExhaustionLevel};
pub use polygon::Polygon;

/// Collinearity and boundary tolerance, relative to the domain scale.
pub const GEOMETRY_TOL: f64 = 1e-12;

/// Rejection sampling gives up after this many consecutive misses, i.e. once
/// the observed acceptance rate is below 1e-4.
pub const MAX_REJECTION_ATTEMPTS: usize = 10_000;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GeometryError {
    #[error("dimension mismatch: domain is {expected}-dimensional, point has {found} coordinates")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("point {0:?} is not in the domain")]
    Outside(Point),

    #[error("invalid domain: {0}")]
    InvalidDomain(String),

    #[error("degenerate domain: no accepted sample in {attempts} rejection attempts")]
    Degenerate { attempts: usize },

    #[error("exhaustion margin {margin} is not below the inradius {inradius}")]
    EmptySubdomain { margin: f64, inradius: f64 },

    #[error("geodesic distance is not available for {0} domains")]
    GeodesicUnsupported(&'static str),

    #[error("points lie in different components")]
    Disconnected,
}

/// JSON description of a domain, `{"kind": ..., ...}`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase", deny_unknown_fields)]
pub enum DomainSpec {
    Interval { corners: [f64; 2] },
    Box { corners: [Vec<f64>; 2] },
    Ball { center: Vec<f64>, radius: f64 },
    Polygon { vertices: Vec<[f64; 2]> },
    Cusp { gamma: f64 },
}

#[derive(Clone, Debug)]
pub enum Shape {
    Interval { lo: f64, hi: f64 },
    Box { lo: Point, hi: Point },
    Ball { center: Point, radius: f64 },
    Polygon(Polygon),
    Cusp(Cusp),
}

impl Shape {
    pub fn name(&self) -> &'static str {
        match self {
            Shape::Interval { .. } => "interval",
            Shape::Box { .. } => "box",
            Shape::Ball { .. } => "ball",
            Shape::Polygon(_) => "polygon",
            Shape::Cusp(_) => "cusp",
        }
    }
}

/// Anything the estimators can sample outer points from and test membership
/// against. Implemented by [`Domain`] and [`Exhaustion`].
pub trait Region: Sync {
    fn dim(&self) -> usize;

    /// Membership for a point of matching dimension.
    fn contains_point(&self, x: &Point) -> bool;

    fn measure(&self) -> f64;

    /// Axis-aligned box `(lo, hi)` containing the region.
    fn bounding_box(&self) -> (Point, Point);

    /// Uniform sample by rejection from the bounding box.
    fn sample(&self, stream: &mut RandomStream) -> Result<Point, GeometryError> {
        let (lo, hi) = self.bounding_box();
        let dim = self.dim();
        let mut x = Point::zero(dim);
        for _ in 0..MAX_REJECTION_ATTEMPTS {
            for i in 0..dim {
                x.set(i, stream.uniform_in(lo.get(i), hi.get(i)));
            }
            if self.contains_point(&x) {
                return Ok(x);
            }
        }
        Err(GeometryError::Degenerate {
            attempts: MAX_REJECTION_ATTEMPTS,
        })
    }

    /// Largest distance from `x` to a corner of the bounding box; bounds
    /// `|x - y|` for every `y` in the region.
    fn reach_from(&self, x: &Point) -> f64 {
        let (lo, hi) = self.bounding_box();
        let mut s = 0.0;
        for i in 0..self.dim() {
            let d = (x.get(i) - lo.get(i)).abs().max((hi.get(i) - x.get(i)).abs());
            s += d * d;
        }
        s.sqrt()
    }
}

/// A bounded open set Omega in R^n.
#[derive(Clone, Debug)]
pub struct Domain {
    shape: Shape,
    dim: usize,
    bbox: (Point, Point),
    measure: f64,
    inradius: f64,
}

impl Domain {
    pub fn interval(lo: f64, hi: f64) -> Result<Self, GeometryError> {
        if !(lo.is_finite() && hi.is_finite() && lo < hi) {
            return Err(GeometryError::InvalidDomain(format!("interval ({lo}, {hi})")));
        }
        Ok(Self {
            shape: Shape::Interval { lo, hi },
            dim: 1,
            bbox: (Point::new(&[lo]), Point::new(&[hi])),
            measure: hi - lo,
            inradius: 0.5 * (hi - lo),
        })
    }

    pub fn axis_box(lo: &[f64], hi: &[f64]) -> Result<Self, GeometryError> {
        if lo.len() != hi.len() {
            return Err(GeometryError::InvalidDomain("box corners differ in dimension".into()));
        }
        let (lo_p, hi_p) = match (Point::try_new(lo), Point::try_new(hi)) {
            (Some(a), Some(b)) => (a, b),
            _ => return Err(GeometryError::InvalidDomain("box must be 1-, 2- or 3-dimensional".into())),
        };
        let mut measure = 1.0;
        let mut half_min = f64::INFINITY;
        for i in 0..lo.len() {
            let w = hi[i] - lo[i];
            if !(w > 0.0 && w.is_finite()) {
                return Err(GeometryError::InvalidDomain(format!("box side {i} has width {w}")));
            }
            measure *= w;
            half_min = half_min.min(0.5 * w);
        }
        Ok(Self {
            shape: Shape::Box { lo: lo_p, hi: hi_p },
            dim: lo.len(),
            bbox: (lo_p, hi_p),
            measure,
            inradius: half_min,
        })
    }

    pub fn unit_square() -> Self {
        Self::axis_box(&[0.0, 0.0], &[1.0, 1.0]).unwrap()
    }

    pub fn ball(center: &[f64], radius: f64) -> Result<Self, GeometryError> {
        let c = Point::try_new(center)
            .ok_or_else(|| GeometryError::InvalidDomain("ball must be 1-, 2- or 3-dimensional".into()))?;
        if !(radius > 0.0 && radius.is_finite() && c.is_finite()) {
            return Err(GeometryError::InvalidDomain(format!("ball radius {radius}")));
        }
        let dim = center.len();
        let r = Point::new(&vec![radius; dim]);
        Ok(Self {
            shape: Shape::Ball { center: c, radius },
            dim,
            bbox: (c - r, c + r),
            measure: ball_volume(dim, radius),
            inradius: radius,
        })
    }

    pub fn unit_disk() -> Self {
        Self::ball(&[0.0, 0.0], 1.0).unwrap()
    }

    pub fn polygon(vertices: &[[f64; 2]]) -> Result<Self, GeometryError> {
        let poly = Polygon::new(vertices)?;
        let bbox = poly.bounding_box();
        let measure = poly.area();
        let mut dom = Self {
            shape: Shape::Polygon(poly),
            dim: 2,
            bbox,
            measure,
            inradius: 0.0,
        };
        dom.inradius = estimate_inradius(&dom);
        Ok(dom)
    }

    /// The L-shaped polygon: unit square minus `[0.5, 1) x [0.5, 1)`.
    pub fn l_shape() -> Self {
        Self::polygon(&[
            [0.0, 0.0],
            [1.0, 0.0],
            [1.0, 0.5],
            [0.5, 0.5],
            [0.5, 1.0],
            [0.0, 1.0],
        ])
        .unwrap()
    }

    pub fn cusp(gamma: f64) -> Result<Self, GeometryError> {
        let c = Cusp::new(gamma)?;
        let mut dom = Self {
            bbox: (Point::xy(0.0, -1.0), Point::xy(1.0, 1.0)),
            measure: c.area(),
            shape: Shape::Cusp(c),
            dim: 2,
            inradius: 0.0,
        };
        dom.inradius = estimate_inradius(&dom);
        Ok(dom)
    }

    pub fn from_spec(spec: &DomainSpec) -> Result<Self, GeometryError> {
        match spec {
            DomainSpec::Interval { corners } => Self::interval(corners[0], corners[1]),
            DomainSpec::Box { corners } => Self::axis_box(&corners[0], &corners[1]),
            DomainSpec::Ball { center, radius } => Self::ball(center, *radius),
            DomainSpec::Polygon { vertices } => Self::polygon(vertices),
            DomainSpec::Cusp { gamma } => Self::cusp(*gamma),
        }
    }

    pub fn to_spec(&self) -> DomainSpec {
        match &self.shape {
            Shape::Interval { lo, hi } => DomainSpec::Interval { corners: [*lo, *hi] },
            Shape::Box { lo, hi } => DomainSpec::Box {
                corners: [lo.coords().to_vec(), hi.coords().to_vec()],
            },
            Shape::Ball { center, radius } => DomainSpec::Ball {
                center: center.coords().to_vec(),
                radius: *radius,
            },
            Shape::Polygon(p) => DomainSpec::Polygon {
                vertices: p.vertices().to_vec(),
            },
            Shape::Cusp(c) => DomainSpec::Cusp { gamma: c.gamma() },
        }
    }

    pub fn shape(&self) -> &Shape {
        &self.shape
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn measure(&self) -> f64 {
        self.measure
    }

    pub fn bounding_box(&self) -> (Point, Point) {
        self.bbox
    }

    pub fn diameter(&self) -> f64 {
        self.bbox.0.distance(&self.bbox.1)
    }

    /// Largest `d(x)` over the domain. Exact for interval, box and ball;
    /// grid search plus pattern refinement otherwise.
    pub fn inradius(&self) -> f64 {
        self.inradius
    }

    pub fn is_convex(&self) -> bool {
        match &self.shape {
            Shape::Interval { .. } | Shape::Box { .. } | Shape::Ball { .. } => true,
            Shape::Polygon(p) => p.reflex_vertices().is_empty(),
            Shape::Cusp(_) => false,
        }
    }

    /// Whether [`Domain::geodesic_distance`] is available.
    pub fn supports_geodesic(&self) -> bool {
        !matches!(self.shape, Shape::Cusp(_))
    }

    fn check_dim(&self, x: &Point) -> Result<(), GeometryError> {
        if x.dim() != self.dim {
            return Err(GeometryError::DimensionMismatch {
                expected: self.dim,
                found: x.dim(),
            });
        }
        Ok(())
    }

    pub fn contains(&self, x: &Point) -> Result<bool, GeometryError> {
        self.check_dim(x)?;
        Ok(x.is_finite() && self.contains_unchecked(x))
    }

    fn contains_unchecked(&self, x: &Point) -> bool {
        match &self.shape {
            Shape::Interval { lo, hi } => *lo < x.get(0) && x.get(0) < *hi,
            Shape::Box { lo, hi } => (0..self.dim).all(|i| lo.get(i) < x.get(i) && x.get(i) < hi.get(i)),
            Shape::Ball { center, radius } => x.distance(center) < *radius,
            Shape::Polygon(p) => p.contains(x.get(0), x.get(1)),
            Shape::Cusp(c) => c.contains(x.get(0), x.get(1)),
        }
    }

    /// `d(x) = dist(x, boundary)` for an interior point.
    pub fn boundary_distance(&self, x: &Point) -> Result<f64, GeometryError> {
        if !self.contains(x)? {
            return Err(GeometryError::Outside(*x));
        }
        Ok(self.distance_unchecked(x))
    }

    pub(crate) fn distance_unchecked(&self, x: &Point) -> f64 {
        match &self.shape {
            Shape::Interval { lo, hi } => (x.get(0) - lo).min(hi - x.get(0)),
            Shape::Box { lo, hi } => (0..self.dim)
                .map(|i| (x.get(i) - lo.get(i)).min(hi.get(i) - x.get(i)))
                .fold(f64::INFINITY, f64::min),
            Shape::Ball { center, radius } => radius - x.distance(center),
            Shape::Polygon(p) => p.boundary_distance(x.get(0), x.get(1)),
            Shape::Cusp(c) => c.boundary_distance(x.get(0), x.get(1)),
        }
    }

    pub fn sample_uniform(&self, stream: &mut RandomStream) -> Result<Point, GeometryError> {
        Region::sample(self, stream)
    }

    pub fn exhaustion(&self, level: ExhaustionLevel) -> Result<Exhaustion<'_>, GeometryError> {
        Exhaustion::new(self, level)
    }

    /// Length of the shortest path from `x` to `y` inside the closure of the
    /// domain. Euclidean on interval, box and ball; visibility graph over
    /// reflex vertices for polygons.
    pub fn geodesic_distance(&self, x: &Point, y: &Point) -> Result<f64, GeometryError> {
        for p in [x, y] {
            if !self.contains(p)? {
                return Err(GeometryError::Outside(*p));
            }
        }
        self.geodesic_unchecked(x, y)
    }

    pub(crate) fn geodesic_unchecked(&self, x: &Point, y: &Point) -> Result<f64, GeometryError> {
        match &self.shape {
            Shape::Interval { .. } | Shape::Box { .. } | Shape::Ball { .. } => Ok(x.distance(y)),
            Shape::Polygon(p) => p
                .geodesic([x.get(0), x.get(1)], [y.get(0), y.get(1)])
                .ok_or(GeometryError::Disconnected),
            Shape::Cusp(_) => Err(GeometryError::GeodesicUnsupported("cusp")),
        }
    }
}

impl Region for Domain {
    fn dim(&self) -> usize {
        self.dim
    }

    fn contains_point(&self, x: &Point) -> bool {
        self.contains_unchecked(x)
    }

    fn measure(&self) -> f64 {
        self.measure
    }

    fn bounding_box(&self) -> (Point, Point) {
        self.bbox
    }
}

/// Surface area of the unit sphere S^{n-1}.
pub fn sphere_area(dim: usize) -> f64 {
    match dim {
        1 => 2.0,
        2 => 2.0 * PI,
        3 => 4.0 * PI,
        _ => panic!("dimension {dim} not supported"),
    }
}

pub fn ball_volume(dim: usize, radius: f64) -> f64 {
    sphere_area(dim) * radius.powi(dim as i32) / dim as f64
}

/// Maximise `d` over a 2-D domain: best point of a 65x65 grid, then compass
/// search down to a 1e-12 step.
fn estimate_inradius(dom: &Domain) -> f64 {
    let (lo, hi) = dom.bbox;
    let n = 64;
    let mut best = (0.0, Point::xy(0.0, 0.0));
    for i in 0..=n {
        for j in 0..=n {
            let x = Point::xy(
                lo.get(0) + (hi.get(0) - lo.get(0)) * i as f64 / n as f64,
                lo.get(1) + (hi.get(1) - lo.get(1)) * j as f64 / n as f64,
            );
            if dom.contains_unchecked(&x) {
                let d = dom.distance_unchecked(&x);
                if d > best.0 {
                    best = (d, x);
                }
            }
        }
    }
    let (mut d, mut x) = best;
    let mut step = (hi.get(0) - lo.get(0)).max(hi.get(1) - lo.get(1)) / n as f64;
    let h = std::f64::consts::FRAC_1_SQRT_2;
    let dirs = [(1.0, 0.0), (-1.0, 0.0), (0.0, 1.0), (0.0, -1.0), (h, h), (-h, h), (h, -h), (-h, -h)];
    while step > 1e-12 {
        let mut improved = false;
        for (dx, dy) in dirs {
            let y = Point::xy(x.get(0) + step * dx, x.get(1) + step * dy);
            if dom.contains_unchecked(&y) {
                let dy_ = dom.distance_unchecked(&y);
                if dy_ > d {
                    d = dy_;
                    x = y;
                    improved = true;
                }
            }
        }
        if !improved {
            step *= 0.5;
        }
    }
    d
}
