//! Fractional energies of a test function on a domain.
//!
//! All estimators integrate in polar coordinates around each outer point
//! `x`. Inside the cone `|h| < tau * d(x)` the radius is drawn with density
//! proportional to `r^{(1-s)p - 1}`, which absorbs the kernel and leaves a
//! bounded integrand `|f(x + r sigma) - f(x)|^p / r^p` for Lipschitz `f`.
//! The complementary far region uses the same density restricted to
//! `[tau d(x), reach(x)]`.

mod constant;
mod sampler;

use serde::{Deserialize, Serialize};

use crate::functions::TestFunction;
use crate::geometry::{sphere_area, Domain, Exhaustion, GeometryError, Region};
use crate::point::Point;
use crate::rng::RandomStream;
use crate::{Error, Result};

pub use constant::{k_constant, sphere_mc, SharpConstant};

use sampler::{nested, Cone, FarPolar, Metric};

/// Largest admissible `s`; beyond it `1 / (1 - s)` amplifies rounding.
pub const S_MAX: f64 = 0.999999;

/// Pairs closer than this are rejected by the far-part kernel.
pub const KERNEL_FLOOR: f64 = 1e-12;

/// The triple `(s, p, tau)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SeminormParams {
    s: f64,
    p: f64,
    tau: f64,
}

impl SeminormParams {
    pub fn new(s: f64, p: f64, tau: f64) -> Result<Self> {
        if !(s > 0.0 && s < 1.0) {
            return Err(Error::param(format!("s = {s} must lie in (0, 1)")));
        }
        if s >= S_MAX {
            return Err(Error::param(format!("s = {s} is too close to 1 (limit {S_MAX})")));
        }
        if !(p > 1.0 && p.is_finite()) {
            return Err(Error::param(format!("p = {p} must lie in (1, inf)")));
        }
        if !(tau > 0.0 && tau < 1.0) {
            return Err(Error::param(format!("tau = {tau} must lie in (0, 1)")));
        }
        Ok(Self { s, p, tau })
    }

    pub fn s(&self) -> f64 {
        self.s
    }

    pub fn p(&self) -> f64 {
        self.p
    }

    pub fn tau(&self) -> f64 {
        self.tau
    }

    /// Radial exponent `(1 - s) p`.
    pub fn q(&self) -> f64 {
        (1.0 - self.s) * self.p
    }

    pub fn with_s(&self, s: f64) -> Result<Self> {
        Self::new(s, self.p, self.tau)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum EnergyKind {
    Truncated,
    Classical,
    Geodesic,
    FarPart,
    Local,
}

impl EnergyKind {
    pub fn as_str(&self) -> &'static str {
        match self {
            EnergyKind::Truncated => "truncated",
            EnergyKind::Classical => "classical",
            EnergyKind::Geodesic => "geodesic",
            EnergyKind::FarPart => "far-part",
            EnergyKind::Local => "local",
        }
    }
}

impl std::fmt::Display for EnergyKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Value and standard error of one part of a split estimate.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Component {
    pub value: f64,
    pub stderr: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EnergyEstimate {
    pub kind: EnergyKind,
    pub value: f64,
    pub stderr: f64,
    pub outer_samples: u64,
    /// Inner samples per outer point (near part for split estimates).
    pub inner_samples: u64,
    /// Samples dropped for hitting the singular set, the kernel floor or a
    /// disconnected pair.
    pub rejected: u64,
    /// Anchor point of a local estimate.
    pub anchor: Option<Point>,
    pub near: Option<Component>,
    pub far: Option<Component>,
}

impl EnergyEstimate {
    fn plain(kind: EnergyKind, value: f64, stderr: f64) -> Self {
        Self {
            kind,
            value,
            stderr,
            outer_samples: 0,
            inner_samples: 0,
            rejected: 0,
            anchor: None,
            near: None,
            far: None,
        }
    }

    pub fn component(&self) -> Component {
        Component {
            value: self.value,
            stderr: self.stderr,
        }
    }

    /// Same estimate with value and error multiplied by `c >= 0`.
    pub fn scaled(&self, c: f64) -> Self {
        let mut out = self.clone();
        out.value *= c;
        out.stderr *= c;
        for part in [&mut out.near, &mut out.far].into_iter().flatten() {
            part.value *= c;
            part.stderr *= c;
        }
        out
    }
}

/// Sample budgets: `outer` points, `inner` cone samples per point, and
/// `pairs` far-region samples in total.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Budgets {
    pub outer: usize,
    pub inner: usize,
    pub pairs: usize,
}

impl Default for Budgets {
    fn default() -> Self {
        Self {
            outer: 1 << 14,
            inner: 1 << 9,
            pairs: 1 << 22,
        }
    }
}

impl Budgets {
    pub fn new(outer: usize, inner: usize, pairs: usize) -> Self {
        Self { outer, inner, pairs }
    }

    pub fn validate(&self) -> Result<()> {
        if self.outer == 0 || self.inner < 2 || self.pairs == 0 {
            return Err(Error::param(format!(
                "budgets need outer >= 1, inner >= 2, pairs >= 1 (got {self:?})"
            )));
        }
        Ok(())
    }

    /// Far samples per outer point for the polar far sampler.
    fn far_inner(&self) -> usize {
        (self.pairs / self.outer).max(2)
    }
}

/// How the far region `|x - y| >= tau d(x)` is integrated.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum FarSampler {
    /// Radial density `r^{(1-s)p - 1}` on `[tau d(x), reach(x)]` around each
    /// outer point.
    #[default]
    Polar,
    /// `|Omega|^2 * mean(indicator * kernel)` over uniform pairs.
    UniformPairs(PairOrder),
}

/// Which of the two uniform draws plays the role of `x`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PairOrder {
    #[default]
    FirstIsX,
    SecondIsX,
}

fn check_function(f: &TestFunction, dom: &Domain) -> Result<()> {
    Ok(f.validate_for(dom)?)
}

fn check_interior(dom: &Domain, x: &Point) -> Result<f64> {
    Ok(dom.boundary_distance(x)?)
}

/// `F_s(x)`, the cone energy at one point.
pub fn local_energy(
    f: &TestFunction,
    dom: &Domain,
    x: &Point,
    params: &SeminormParams,
    inner_budget: usize,
    stream: &RandomStream,
) -> Result<EnergyEstimate> {
    check_function(f, dom)?;
    if inner_budget < 2 {
        return Err(Error::param("inner budget must be at least 2"));
    }
    let d = check_interior(dom, x)?;
    let cone = Cone::new(f, params, dom.dim(), None);
    let mut s = stream.derive_named("local");
    let mut scratch = Vec::new();
    let local = cone.estimate(x, d, inner_budget / 2, &mut s, &mut scratch)?;
    sampler::check_rejections(local.rejected, local.attempted)?;
    Ok(EnergyEstimate {
        outer_samples: 1,
        inner_samples: local.attempted,
        rejected: local.rejected,
        anchor: Some(*x),
        ..EnergyEstimate::plain(EnergyKind::Local, local.value, local.stderr)
    })
}

fn near_part<R: Region + ?Sized>(
    f: &TestFunction,
    outer: &R,
    dist: &(dyn Fn(&Point) -> f64 + Sync),
    accept: Option<&dyn Region>,
    params: &SeminormParams,
    budgets: &Budgets,
    stream: &RandomStream,
    extra_measure_stderr: f64,
) -> Result<EnergyEstimate> {
    budgets.validate()?;
    let cone = Cone::new(f, params, outer.dim(), accept);
    let pairs = budgets.inner / 2;
    let stats = nested(outer, budgets.outer, &stream.derive_named("near"), |x, s, scratch| {
        cone.estimate(x, dist(x), pairs, s, scratch)
    })?;
    let (value, stderr) = stats.scaled(outer.measure(), extra_measure_stderr);
    Ok(EnergyEstimate {
        outer_samples: stats.count,
        inner_samples: 2 * pairs as u64,
        rejected: stats.rejected,
        ..EnergyEstimate::plain(EnergyKind::Truncated, value, stderr)
    })
}

fn far_part<R: Region + ?Sized>(
    f: &TestFunction,
    outer: &R,
    target: &dyn Region,
    dist: &(dyn Fn(&Point) -> f64 + Sync),
    metric: Metric<'_>,
    sampler: FarSampler,
    params: &SeminormParams,
    budgets: &Budgets,
    stream: &RandomStream,
    extra_measure_stderr: f64,
) -> Result<EnergyEstimate> {
    budgets.validate()?;
    let label = match metric {
        Metric::Euclidean => "far",
        Metric::Geodesic(_) => "far-geodesic",
    };
    match sampler {
        FarSampler::Polar => {
            let far = FarPolar::new(f, params, outer.dim(), target, metric);
            let pairs = budgets.far_inner() / 2;
            let stats = nested(outer, budgets.outer, &stream.derive_named(label), |x, s, scratch| {
                far.estimate(x, dist(x), pairs, s, scratch)
            })?;
            let (value, stderr) = stats.scaled(outer.measure(), extra_measure_stderr);
            Ok(EnergyEstimate {
                outer_samples: stats.count,
                inner_samples: 2 * pairs as u64,
                rejected: stats.rejected,
                ..EnergyEstimate::plain(EnergyKind::FarPart, value, stderr)
            })
        }
        FarSampler::UniformPairs(order) => {
            let far = sampler::UniformPairs::new(f, params, target, metric, order);
            let est = far.estimate(outer, dist, budgets.pairs, &stream.derive_named(label))?;
            Ok(EnergyEstimate {
                outer_samples: est.count,
                inner_samples: 1,
                rejected: est.rejected,
                ..EnergyEstimate::plain(EnergyKind::FarPart, est.value, est.stderr)
            })
        }
    }
}

fn combine(kind: EnergyKind, near: EnergyEstimate, far: EnergyEstimate) -> EnergyEstimate {
    EnergyEstimate {
        kind,
        value: near.value + far.value,
        stderr: near.stderr.hypot(far.stderr),
        outer_samples: near.outer_samples,
        inner_samples: near.inner_samples,
        rejected: near.rejected + far.rejected,
        anchor: None,
        near: Some(near.component()),
        far: Some(far.component()),
    }
}

/// `int_Omega int_{|x-y| < tau d(x)} |f(x) - f(y)|^p / |x - y|^{n+sp}`.
pub fn truncated_energy(
    f: &TestFunction,
    dom: &Domain,
    params: &SeminormParams,
    budgets: &Budgets,
    stream: &RandomStream,
) -> Result<EnergyEstimate> {
    check_function(f, dom)?;
    let dist = |x: &Point| dom.distance_unchecked(x);
    near_part(f, dom, &dist, None, params, budgets, stream, 0.0)
}

/// Full Gagliardo energy over `Omega x Omega` with the polar far sampler.
pub fn classical_energy(
    f: &TestFunction,
    dom: &Domain,
    params: &SeminormParams,
    budgets: &Budgets,
    stream: &RandomStream,
) -> Result<EnergyEstimate> {
    classical_energy_with(f, dom, params, budgets, stream, FarSampler::Polar)
}

pub fn classical_energy_with(
    f: &TestFunction,
    dom: &Domain,
    params: &SeminormParams,
    budgets: &Budgets,
    stream: &RandomStream,
    sampler: FarSampler,
) -> Result<EnergyEstimate> {
    check_function(f, dom)?;
    let dist = |x: &Point| dom.distance_unchecked(x);
    let near = near_part(f, dom, &dist, None, params, budgets, stream, 0.0)?;
    let far = far_part(f, dom, dom, &dist, Metric::Euclidean, sampler, params, budgets, stream, 0.0)?;
    Ok(combine(EnergyKind::Classical, near, far))
}

fn require_geodesic(dom: &Domain) -> Result<()> {
    if dom.supports_geodesic() {
        Ok(())
    } else {
        Err(GeometryError::GeodesicUnsupported(dom.shape().name()).into())
    }
}

/// Gagliardo energy with the geodesic distance in the kernel. The near part
/// is the truncated energy, since `delta(x, y) = |x - y|` inside the cone.
pub fn geodesic_energy(
    f: &TestFunction,
    dom: &Domain,
    params: &SeminormParams,
    budgets: &Budgets,
    stream: &RandomStream,
) -> Result<EnergyEstimate> {
    check_function(f, dom)?;
    require_geodesic(dom)?;
    let dist = |x: &Point| dom.distance_unchecked(x);
    let near = near_part(f, dom, &dist, None, params, budgets, stream, 0.0)?;
    let far = far_part(
        f,
        dom,
        dom,
        &dist,
        Metric::Geodesic(dom),
        FarSampler::Polar,
        params,
        budgets,
        stream,
        0.0,
    )?;
    Ok(combine(EnergyKind::Geodesic, near, far))
}

/// The far component of [`geodesic_energy`] on its own.
pub fn far_part_energy(
    f: &TestFunction,
    dom: &Domain,
    params: &SeminormParams,
    budgets: &Budgets,
    stream: &RandomStream,
) -> Result<EnergyEstimate> {
    check_function(f, dom)?;
    require_geodesic(dom)?;
    let dist = |x: &Point| dom.distance_unchecked(x);
    far_part(
        f,
        dom,
        dom,
        &dist,
        Metric::Geodesic(dom),
        FarSampler::Polar,
        params,
        budgets,
        stream,
        0.0,
    )
}

/// Part I over `Omega_j`: `x, y` in `Omega_j` with `|x - y| < tau d(x)`,
/// where `d` is the distance to the boundary of the parent domain.
pub fn exhaustion_near_energy(
    f: &TestFunction,
    sub: &Exhaustion<'_>,
    params: &SeminormParams,
    budgets: &Budgets,
    stream: &RandomStream,
) -> Result<EnergyEstimate> {
    let dom = sub.parent();
    check_function(f, dom)?;
    let dist = |x: &Point| dom.distance_unchecked(x);
    let mut est = near_part(f, sub, &dist, Some(sub), params, budgets, stream, sub.measure_stderr())?;
    est.kind = EnergyKind::Truncated;
    Ok(est)
}

/// Part II over `Omega_j`: `x, y` in `Omega_j` with `|x - y| >= tau d(x)`.
pub fn exhaustion_far_energy(
    f: &TestFunction,
    sub: &Exhaustion<'_>,
    params: &SeminormParams,
    budgets: &Budgets,
    stream: &RandomStream,
) -> Result<EnergyEstimate> {
    let dom = sub.parent();
    check_function(f, dom)?;
    let dist = |x: &Point| dom.distance_unchecked(x);
    far_part(
        f,
        sub,
        sub,
        &dist,
        Metric::Euclidean,
        FarSampler::Polar,
        params,
        budgets,
        stream,
        sub.measure_stderr(),
    )
}

/// Dispatch on `kind`; `Local` is not a global energy and is rejected.
pub fn energy(
    kind: EnergyKind,
    f: &TestFunction,
    dom: &Domain,
    params: &SeminormParams,
    budgets: &Budgets,
    stream: &RandomStream,
) -> Result<EnergyEstimate> {
    match kind {
        EnergyKind::Truncated => truncated_energy(f, dom, params, budgets, stream),
        EnergyKind::Classical => classical_energy(f, dom, params, budgets, stream),
        EnergyKind::Geodesic => geodesic_energy(f, dom, params, budgets, stream),
        EnergyKind::FarPart => far_part_energy(f, dom, params, budgets, stream),
        EnergyKind::Local => Err(Error::param("local energy needs an anchor point")),
    }
}

/// `K_{n,p} |grad f(x)|^p (tau d(x))^{(1-s)p}`, the leading term of
/// `(1 - s) F_s(x)`.
pub fn local_leading_term(f: &TestFunction, dom: &Domain, x: &Point, params: &SeminormParams) -> Result<f64> {
    let d = check_interior(dom, x)?;
    let g = f.gradient(x)?.norm();
    let k = k_constant(dom.dim(), params.p())?.value;
    Ok(k * g.powf(params.p()) * (params.tau() * d).powf(params.q()))
}

/// Per-point second-order diagnostic: `|(1-s) F_s(x) - leading term|`
/// together with its standard error and the scale `(1-s) (tau d(x))^{2-s}`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct RateDiagnostic {
    pub s: f64,
    pub residual: f64,
    pub stderr: f64,
    pub scale: f64,
}

pub fn rate_diagnostic(
    f: &TestFunction,
    dom: &Domain,
    x: &Point,
    params: &SeminormParams,
    inner_budget: usize,
    stream: &RandomStream,
) -> Result<RateDiagnostic> {
    let s = params.s();
    let local = local_energy(f, dom, x, params, inner_budget, stream)?;
    let lead = local_leading_term(f, dom, x, params)?;
    let d = dom.boundary_distance(x)?;
    Ok(RateDiagnostic {
        s,
        residual: ((1.0 - s) * local.value - lead).abs(),
        stderr: (1.0 - s) * local.stderr,
        scale: (1.0 - s) * (params.tau() * d).powf(2.0 - s),
    })
}

/// `|S^{n-1}|` re-exported for callers that assemble closed forms.
pub fn sphere_measure(dim: usize) -> f64 {
    sphere_area(dim)
}
