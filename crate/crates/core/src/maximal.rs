//! Directional and spherical maximal functions.
//!
//! `h1(x, nu) = sup_t (1/t) int_0^t h(x + nu s) ds` is approximated from
//! below by a maximum over a geometric grid of `t`, each average by the
//! composite midpoint rule. `h*(x) = (int_{S^{n-1}} h1(x, nu)^p d nu)^{1/p}`
//! is a quadrature over a fixed direction grid.

use std::f64::consts::PI;

use rayon::prelude::*;
use serde::Serialize;

use crate::functions::TestFunction;
use crate::geometry::{sphere_area, Domain, Region};
use crate::point::Point;
use crate::rng::RandomStream;
use crate::seminorm::{local_energy, SeminormParams};
use crate::{Error, Result};

/// Midpoint nodes per line average.
pub const MIN_NODES: usize = 64;

/// Relative slack absorbing the grid under-approximation of the sup.
pub const POINTWISE_EPSILON: f64 = 1e-2;

/// A nonnegative function on all of R^n.
pub trait Field: Sync {
    fn value(&self, x: &Point) -> f64;
}

#[derive(Clone, Copy, Debug)]
pub struct ConstantField(pub f64);

impl Field for ConstantField {
    fn value(&self, _: &Point) -> f64 {
        self.0
    }
}

/// Indicator of the open ball `|x - center| < radius`.
#[derive(Clone, Copy, Debug)]
pub struct BallIndicator {
    pub center: Point,
    pub radius: f64,
}

impl Field for BallIndicator {
    fn value(&self, x: &Point) -> f64 {
        if x.distance(&self.center) < self.radius {
            1.0
        } else {
            0.0
        }
    }
}

/// `inner` on the domain, zero outside.
pub struct ZeroExtended<'a, F> {
    pub inner: F,
    pub domain: &'a Domain,
}

impl<F: Field> Field for ZeroExtended<'_, F> {
    fn value(&self, x: &Point) -> f64 {
        if self.domain.contains_point(x) {
            self.inner.value(x)
        } else {
            0.0
        }
    }
}

/// `|grad f|` on the domain, zero outside and on the singular set.
pub struct GradientMagnitude<'a> {
    pub f: &'a TestFunction,
    pub domain: &'a Domain,
}

impl Field for GradientMagnitude<'_> {
    fn value(&self, x: &Point) -> f64 {
        if !self.domain.contains_point(x) {
            return 0.0;
        }
        self.f.gradient(x).map(|g| g.norm()).unwrap_or(0.0)
    }
}

pub struct ScaledField<F> {
    pub factor: f64,
    pub inner: F,
}

impl<F: Field> Field for ScaledField<F> {
    fn value(&self, x: &Point) -> f64 {
        self.factor * self.inner.value(x)
    }
}

/// Geometric grid `t_min * ratio^k <= t_max`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct TGrid {
    pub t_min: f64,
    pub t_max: f64,
    pub ratio: f64,
}

impl TGrid {
    pub fn new(t_min: f64, t_max: f64, ratio: f64) -> Result<Self> {
        if !(t_min > 0.0 && t_max >= t_min && ratio > 1.0 && t_max.is_finite()) {
            return Err(Error::param(format!(
                "t-grid needs 0 < t_min <= t_max and ratio > 1 (got {t_min}, {t_max}, {ratio})"
            )));
        }
        Ok(Self { t_min, t_max, ratio })
    }

    /// `t_min = 1e-3 diam`, `t_max = 2 diam`, ratio `2^{1/4}`.
    pub fn for_domain(dom: &Domain) -> Self {
        let diam = dom.diameter();
        Self {
            t_min: 1e-3 * diam,
            t_max: 2.0 * diam,
            ratio: 2f64.powf(0.25),
        }
    }

    pub fn levels(&self) -> Vec<f64> {
        let mut out = Vec::new();
        let mut k = 0;
        loop {
            let t = self.t_min * self.ratio.powi(k);
            if t > self.t_max * (1.0 + 1e-12) {
                break;
            }
            out.push(t);
            k += 1;
        }
        out
    }
}

/// Unit directions with equal quadrature weight.
#[derive(Clone, Debug)]
pub struct DirectionGrid {
    dim: usize,
    dirs: Vec<Point>,
}

impl DirectionGrid {
    /// `{-1, +1}`.
    pub fn signs() -> Self {
        Self {
            dim: 1,
            dirs: vec![Point::new(&[1.0]), Point::new(&[-1.0])],
        }
    }

    /// `count` equispaced angles starting at `offset`.
    pub fn circle(count: usize, offset: f64) -> Self {
        let dirs = (0..count)
            .map(|k| {
                let (s, c) = (offset + 2.0 * PI * k as f64 / count as f64).sin_cos();
                Point::xy(c, s)
            })
            .collect();
        Self { dim: 2, dirs }
    }

    /// Fibonacci lattice on S^2.
    pub fn fibonacci(count: usize) -> Self {
        let golden = PI * (3.0 - 5f64.sqrt());
        let dirs = (0..count)
            .map(|k| {
                let z = 1.0 - (2.0 * k as f64 + 1.0) / count as f64;
                let rho = (1.0 - z * z).sqrt();
                let (s, c) = (golden * k as f64).sin_cos();
                Point::new(&[rho * c, rho * s, z])
            })
            .collect();
        Self { dim: 3, dirs }
    }

    /// 2 signs, 256 angles or 1024 Fibonacci points.
    pub fn default_for(dim: usize) -> Result<Self> {
        match dim {
            1 => Ok(Self::signs()),
            2 => Ok(Self::circle(256, 0.0)),
            3 => Ok(Self::fibonacci(1024)),
            _ => Err(Error::param(format!("no direction grid for dimension {dim}"))),
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.dirs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.dirs.is_empty()
    }

    pub fn directions(&self) -> &[Point] {
        &self.dirs
    }
}

/// Largest grid average `(1/t) int_0^t h(x + nu s) ds`.
pub fn directional_maximal<H: Field + ?Sized>(h: &H, x: &Point, nu: &Point, grid: &TGrid) -> f64 {
    directional_maximal_with(h, x, nu, &grid.levels(), MIN_NODES)
}

fn directional_maximal_with<H: Field + ?Sized>(h: &H, x: &Point, nu: &Point, levels: &[f64], nodes: usize) -> f64 {
    let mut best = 0.0f64;
    for &t in levels {
        let step = t / nodes as f64;
        let mut sum = 0.0;
        for k in 0..nodes {
            sum += h.value(&(*x + *nu * ((k as f64 + 0.5) * step)));
        }
        best = best.max(sum / nodes as f64);
    }
    best
}

/// `h1(x, nu)` for every direction of the grid, in grid order.
pub fn directional_profile<H: Field + ?Sized>(h: &H, x: &Point, dirs: &DirectionGrid, grid: &TGrid) -> Vec<f64> {
    let levels = grid.levels();
    dirs.dirs
        .par_iter()
        .map(|nu| directional_maximal_with(h, x, nu, &levels, MIN_NODES))
        .collect()
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct MaximalEstimate {
    pub anchor: Point,
    pub p: f64,
    pub value: f64,
    pub directions: usize,
    pub t_grid: TGrid,
}

impl MaximalEstimate {
    /// `(|S^{n-1}| mean h1^p)^{1/p}` from a directional profile.
    pub fn from_profile(anchor: Point, profile: &[f64], p: f64, t_grid: TGrid) -> Self {
        let mean = profile.iter().map(|v| v.powf(p)).sum::<f64>() / profile.len() as f64;
        Self {
            anchor,
            p,
            value: (sphere_area(anchor.dim()) * mean).powf(1.0 / p),
            directions: profile.len(),
            t_grid,
        }
    }
}

pub fn spherical_maximal<H: Field + ?Sized>(
    h: &H,
    x: &Point,
    p: f64,
    dirs: &DirectionGrid,
    grid: &TGrid,
) -> Result<MaximalEstimate> {
    if dirs.dim() != x.dim() {
        return Err(Error::param("direction grid and point dimensions differ"));
    }
    if !(p >= 1.0 && p.is_finite()) {
        return Err(Error::param(format!("p = {p} must lie in [1, inf)")));
    }
    let profile = directional_profile(h, x, dirs, grid);
    Ok(MaximalEstimate::from_profile(*x, &profile, p, *grid))
}

/// `C_{n,p} = (p / (p - 1)) |S^{n-1}|^{1/p}`: the one-sided Hardy bound
/// `||sup_t (1/t) int_0^t g||_p <= p/(p-1) ||g||_p` on each line, integrated
/// over directions.
pub fn lp_constant(n: usize, p: f64) -> Result<f64> {
    if !(p > 1.0 && p.is_finite()) {
        return Err(Error::param(format!("p = {p} must lie in (1, inf)")));
    }
    if !(1..=3).contains(&n) {
        return Err(Error::param(format!("dimension {n} not supported")));
    }
    Ok(p / (p - 1.0) * sphere_area(n).powf(1.0 / p))
}

/// Both sides of `(1-s) F_s(x) <= (tau d(x))^{(1-s)p} / p * |grad f|*(x)^p`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PointwiseReport {
    pub anchor: Point,
    pub s: f64,
    pub lhs: f64,
    pub lhs_stderr: f64,
    pub rhs: f64,
    pub maximal: f64,
    pub pass: bool,
}

/// `|grad f|*(x)` with the default grids of `dom`.
pub fn gradient_maximal(f: &TestFunction, dom: &Domain, x: &Point, p: f64) -> Result<MaximalEstimate> {
    let h = GradientMagnitude { f, domain: dom };
    spherical_maximal(&h, x, p, &DirectionGrid::default_for(dom.dim())?, &TGrid::for_domain(dom))
}

pub fn verify_pointwise_bound(
    f: &TestFunction,
    dom: &Domain,
    params: &SeminormParams,
    x: &Point,
    inner_budget: usize,
    stream: &RandomStream,
) -> Result<PointwiseReport> {
    let maximal = gradient_maximal(f, dom, x, params.p())?;
    verify_pointwise_bound_with(f, dom, params, x, &maximal, inner_budget, stream)
}

/// As [`verify_pointwise_bound`] with a precomputed `|grad f|*(x)`.
pub fn verify_pointwise_bound_with(
    f: &TestFunction,
    dom: &Domain,
    params: &SeminormParams,
    x: &Point,
    maximal: &MaximalEstimate,
    inner_budget: usize,
    stream: &RandomStream,
) -> Result<PointwiseReport> {
    if maximal.anchor != *x || maximal.p != params.p() {
        return Err(Error::param("maximal estimate belongs to another point or exponent"));
    }
    let s = params.s();
    let local = local_energy(f, dom, x, params, inner_budget, stream)?;
    let d = dom.boundary_distance(x)?;
    let lhs = (1.0 - s) * local.value;
    let lhs_stderr = (1.0 - s) * local.stderr;
    let rhs = (params.tau() * d).powf(params.q()) / params.p() * maximal.value.powf(params.p());
    Ok(PointwiseReport {
        anchor: *x,
        s,
        lhs,
        lhs_stderr,
        rhs,
        maximal: maximal.value,
        pass: lhs <= rhs * (1.0 + POINTWISE_EPSILON) + 3.0 * lhs_stderr,
    })
}

/// Monte Carlo `||h*||_p` against `C_{n,p} ||h||_p` over the domain.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct LpReport {
    pub p: f64,
    pub maximal_norm: f64,
    pub maximal_stderr: f64,
    pub norm: f64,
    pub norm_stderr: f64,
    pub constant: f64,
    pub ratio: f64,
    pub pass: bool,
}

/// `(|Omega| mean v^p)^{1/p}` and its delta-method error.
fn norm_from_samples(values: &[f64], p: f64, measure: f64) -> (f64, f64) {
    let n = values.len() as f64;
    let pw: Vec<f64> = values.iter().map(|v| v.powf(p)).collect();
    let mean = pw.iter().sum::<f64>() / n;
    let var = pw.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0).max(1.0);
    let norm = (measure * mean).powf(1.0 / p);
    let rel = if mean > 0.0 { (var / n).sqrt() / mean } else { 0.0 };
    (norm, norm * rel / p)
}

/// Checks `||h*||_p <= C_{n,p} ||h||_p` for each exponent in `ps`. The
/// directional profiles are exponent-free and are computed once per point on
/// `point_budget` uniform points; `||h||_p` uses 64 times as many cheap
/// samples.
pub fn verify_lp_bounds<H: Field + ?Sized>(
    h: &H,
    dom: &Domain,
    ps: &[f64],
    point_budget: usize,
    dirs: &DirectionGrid,
    grid: &TGrid,
    stream: &RandomStream,
) -> Result<Vec<LpReport>> {
    if point_budget < 2 {
        return Err(Error::param("point budget must be at least 2"));
    }
    for &p in ps {
        lp_constant(dom.dim(), p)?;
    }
    let mut s = stream.derive_named("lp-points");
    let points: Vec<Point> = (0..point_budget)
        .map(|_| dom.sample_uniform(&mut s))
        .collect::<std::result::Result<_, _>>()?;
    let profiles: Vec<Vec<f64>> = points.iter().map(|x| directional_profile(h, x, dirs, grid)).collect();
    let mut s = stream.derive_named("lp-norm");
    let plain: Vec<f64> = (0..64 * point_budget)
        .map(|_| dom.sample_uniform(&mut s).map(|x| h.value(&x)))
        .collect::<std::result::Result<_, _>>()?;
    let area = sphere_area(dom.dim());
    ps.iter()
        .map(|&p| {
            let hstar: Vec<f64> = profiles
                .iter()
                .map(|prof| (area * prof.iter().map(|v| v.powf(p)).sum::<f64>() / prof.len() as f64).powf(1.0 / p))
                .collect();
            let (maximal_norm, maximal_stderr) = norm_from_samples(&hstar, p, dom.measure());
            let (norm, norm_stderr) = norm_from_samples(&plain, p, dom.measure());
            let constant = lp_constant(dom.dim(), p)?;
            let ratio = maximal_norm / norm;
            let rel = if maximal_norm > 0.0 {
                (maximal_stderr / maximal_norm).hypot(norm_stderr / norm)
            } else {
                0.0
            };
            Ok(LpReport {
                p,
                maximal_norm,
                maximal_stderr,
                norm,
                norm_stderr,
                constant,
                ratio,
                pass: maximal_norm <= constant * norm * (1.0 + 3.0 * rel),
            })
        })
        .collect()
}

pub fn verify_lp_bound<H: Field + ?Sized>(
    h: &H,
    dom: &Domain,
    p: f64,
    point_budget: usize,
    dirs: &DirectionGrid,
    grid: &TGrid,
    stream: &RandomStream,
) -> Result<LpReport> {
    let mut reports = verify_lp_bounds(h, dom, &[p], point_budget, dirs, grid, stream)?;
    Ok(reports.remove(0))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grid_has_about_45_levels() {
        let g = TGrid::for_domain(&Domain::unit_square());
        let n = g.levels().len();
        assert!((44..=46).contains(&n), "{n}");
    }

    #[test]
    fn constant_field() {
        let g = TGrid::new(1e-3, 4.0, 2f64.powf(0.25)).unwrap();
        let x = Point::xy(0.3, -0.2);
        let h = ConstantField(2.5);
        assert_eq!(directional_maximal(&h, &x, &Point::xy(0.0, 1.0), &g), 2.5);
        let m = spherical_maximal(&ConstantField(1.0), &x, 2.0, &DirectionGrid::circle(256, 0.0), &g).unwrap();
        assert!((m.value - (2.0 * PI).sqrt()).abs() < 1e-12);
    }

    #[test]
    fn ball_indicator_from_outside() {
        let h = BallIndicator {
            center: Point::xy(0.0, 0.0),
            radius: 1.0,
        };
        let fine = TGrid::new(0.5, 6.0, 1.0005).unwrap();
        let v = directional_maximal_with(&h, &Point::xy(2.0, 0.0), &Point::xy(-1.0, 0.0), &fine.levels(), 4096);
        assert!((v - 2.0 / 3.0).abs() < 2e-3, "{v}");
    }

    #[test]
    fn lp_constant_values() {
        assert!((lp_constant(2, 2.0).unwrap() - 2.0 * (2.0 * PI).sqrt()).abs() < 1e-12);
        assert!(lp_constant(2, 1.0).is_err());
    }
}
