use super::{Domain, GeometryError, Region, Shape};
use crate::point::Point;
use crate::rng::RandomStream;

/// Samples used to estimate `|Omega_j|` when there is no closed form.
const MEASURE_SAMPLES: usize = 1 << 20;

/// One level `Omega_j = {x in Omega : d(x) > alpha_j}` of an exhaustion.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ExhaustionLevel {
    pub index: usize,
    pub margin: f64,
}

impl ExhaustionLevel {
    pub fn new(index: usize, margin: f64) -> Result<Self, GeometryError> {
        if index == 0 || !(margin > 0.0 && margin.is_finite()) {
            return Err(GeometryError::InvalidDomain(format!(
                "exhaustion level needs index >= 1 and margin > 0 (got {index}, {margin})"
            )));
        }
        Ok(Self { index, margin })
    }

    /// Levels `1..=n` for strictly decreasing margins.
    pub fn sequence(margins: &[f64]) -> Result<Vec<Self>, GeometryError> {
        if margins.windows(2).any(|w| w[1] >= w[0]) {
            return Err(GeometryError::InvalidDomain("exhaustion margins must strictly decrease".into()));
        }
        margins.iter().enumerate().map(|(i, &m)| Self::new(i + 1, m)).collect()
    }
}

/// Membership view of `Omega_j`. Boundary distances are those of the parent
/// domain.
#[derive(Clone, Debug)]
pub struct Exhaustion<'a> {
    parent: &'a Domain,
    level: ExhaustionLevel,
    bbox: (Point, Point),
    measure: f64,
    measure_stderr: f64,
}

impl<'a> Exhaustion<'a> {
    pub(super) fn new(parent: &'a Domain, level: ExhaustionLevel) -> Result<Self, GeometryError> {
        let margin = level.margin;
        if margin >= parent.inradius() {
            return Err(GeometryError::EmptySubdomain {
                margin,
                inradius: parent.inradius(),
            });
        }
        let (lo, hi) = parent.bounding_box();
        let dim = parent.dim();
        let inset = Point::new(&vec![margin; dim]);
        let mut view = Self {
            parent,
            level,
            bbox: (lo + inset, hi - inset),
            measure: 0.0,
            measure_stderr: 0.0,
        };
        if let Some(prim) = view.as_primitive() {
            view.bbox = prim.bounding_box();
            view.measure = prim.measure();
        } else {
            let mut stream = RandomStream::new(level.index as u64).derive_named("exhaustion-measure");
            let mut hits = 0usize;
            for _ in 0..MEASURE_SAMPLES {
                let x = parent.sample_uniform(&mut stream)?;
                if parent.distance_unchecked(&x) > margin {
                    hits += 1;
                }
            }
            let frac = hits as f64 / MEASURE_SAMPLES as f64;
            view.measure = parent.measure() * frac;
            view.measure_stderr = parent.measure() * (frac * (1.0 - frac) / MEASURE_SAMPLES as f64).sqrt();
        }
        Ok(view)
    }

    pub fn parent(&self) -> &Domain {
        self.parent
    }

    pub fn level(&self) -> ExhaustionLevel {
        self.level
    }

    pub fn margin(&self) -> f64 {
        self.level.margin
    }

    /// Standard error of [`Region::measure`]; zero when it is exact.
    pub fn measure_stderr(&self) -> f64 {
        self.measure_stderr
    }

    /// `d(x)` measured to the boundary of the parent domain.
    pub fn boundary_distance(&self, x: &Point) -> Result<f64, GeometryError> {
        if !self.contains(x)? {
            return Err(GeometryError::Outside(*x));
        }
        Ok(self.parent.distance_unchecked(x))
    }

    pub fn contains(&self, x: &Point) -> Result<bool, GeometryError> {
        Ok(self.parent.contains(x)? && self.parent.distance_unchecked(x) > self.level.margin)
    }

    /// The level set as a concrete domain, for shapes whose inner parallel
    /// set is again a primitive.
    pub fn as_primitive(&self) -> Option<Domain> {
        let m = self.level.margin;
        match self.parent.shape() {
            Shape::Interval { lo, hi } => Domain::interval(lo + m, hi - m).ok(),
            Shape::Box { lo, hi } => {
                let inset = Point::new(&vec![m; self.parent.dim()]);
                Domain::axis_box((*lo + inset).coords(), (*hi - inset).coords()).ok()
            }
            Shape::Ball { center, radius } => Domain::ball(center.coords(), radius - m).ok(),
            Shape::Polygon(_) | Shape::Cusp(_) => None,
        }
    }
}

impl Region for Exhaustion<'_> {
    fn dim(&self) -> usize {
        self.parent.dim()
    }

    fn contains_point(&self, x: &Point) -> bool {
        self.parent.contains_point(x) && self.parent.distance_unchecked(x) > self.level.margin
    }

    fn measure(&self) -> f64 {
        self.measure
    }

    fn bounding_box(&self) -> (Point, Point) {
        self.bbox
    }
}
