//! Inner samplers and the nested outer-point driver.
//!
//! Inner draws come in antithetic pairs `(sigma, -sigma)` sharing one radius.
//! Directions are stratified over a half sphere (angle strata for `n = 2`,
//! height strata for `n = 3`) and radii are Latin-hypercube in the uniform
//! variable that generates them.

use std::f64::consts::PI;

use rayon::prelude::*;

use super::{PairOrder, SeminormParams, KERNEL_FLOOR};
use crate::functions::{TestFunction, BLOCK, SINGULAR_SKIP_LIMIT};
use crate::geometry::{sphere_area, Domain, GeometryError, Region};
use crate::point::Point;
use crate::rng::RandomStream;
use crate::{Error, Result};

/// Below `LINEAR_CUTOFF * tau d(x)` the difference quotient is replaced by
/// the directional derivative; the Taylor error there is far below the
/// rounding error of the raw quotient.
const LINEAR_CUTOFF: f64 = 1e-6;

#[derive(Clone, Copy)]
pub(crate) enum Metric<'a> {
    Euclidean,
    Geodesic(&'a Domain),
}

/// One local estimate: value, its standard error, and sample accounting.
#[derive(Clone, Copy, Debug, Default)]
pub(crate) struct Local {
    pub value: f64,
    pub stderr: f64,
    pub rejected: u64,
    pub attempted: u64,
}

#[inline]
fn pow_p(x: f64, p: f64) -> f64 {
    if p == 2.0 {
        x * x
    } else {
        x.powf(p)
    }
}

/// Direction of stratum `j` out of `m` on the half sphere `sigma_n >= 0`
/// (`sigma_1 = 1` in one dimension).
fn direction(dim: usize, j: usize, m: usize, s: &mut RandomStream) -> Point {
    let t = (j as f64 + s.uniform()) / m as f64;
    match dim {
        1 => Point::new(&[1.0]),
        2 => {
            let (sn, cs) = (PI * t).sin_cos();
            Point::xy(cs, sn)
        }
        _ => {
            let phi = 2.0 * PI * s.uniform();
            let rho = (1.0 - t * t).max(0.0).sqrt();
            let (sn, cs) = phi.sin_cos();
            Point::new(&[rho * cs, rho * sn, t])
        }
    }
}

#[derive(Clone, Copy, Debug, Default)]
struct Welford {
    n: u64,
    mean: f64,
    m2: f64,
}

impl Welford {
    fn push(&mut self, v: f64) {
        self.n += 1;
        let delta = v - self.mean;
        self.mean += delta / self.n as f64;
        self.m2 += delta * (v - self.mean);
    }

    fn merge(&mut self, o: &Welford) {
        if o.n == 0 {
            return;
        }
        if self.n == 0 {
            *self = *o;
            return;
        }
        let n = self.n + o.n;
        let delta = o.mean - self.mean;
        self.mean += delta * o.n as f64 / n as f64;
        self.m2 += o.m2 + delta * delta * (self.n as f64 * o.n as f64) / n as f64;
        self.n = n;
    }

    fn stderr_of_mean(&self) -> f64 {
        if self.n < 2 {
            return 0.0;
        }
        (self.m2.max(0.0) / ((self.n - 1) * self.n) as f64).sqrt()
    }
}

pub(crate) fn check_rejections(rejected: u64, attempted: u64) -> Result<()> {
    if rejected as f64 > SINGULAR_SKIP_LIMIT * attempted as f64 {
        return Err(Error::SingularBudgetExceeded { rejected, attempted });
    }
    Ok(())
}

fn finish(w: &Welford, weight: f64, rejected: u64, attempted: u64) -> Local {
    Local {
        value: weight * w.mean,
        stderr: weight * w.stderr_of_mean(),
        rejected,
        attempted,
    }
}

/// Cone sampler for `int_{|h| < tau d(x)} |f(x+h) - f(x)|^p / |h|^{n+sp} dh`,
/// optionally restricted to `x + h` in `accept`.
pub(crate) struct Cone<'a> {
    f: &'a TestFunction,
    p: f64,
    q: f64,
    tau: f64,
    dim: usize,
    sphere: f64,
    accept: Option<&'a dyn Region>,
}

impl<'a> Cone<'a> {
    pub fn new(f: &'a TestFunction, params: &SeminormParams, dim: usize, accept: Option<&'a dyn Region>) -> Self {
        Self {
            f,
            p: params.p(),
            q: params.q(),
            tau: params.tau(),
            dim,
            sphere: sphere_area(dim),
            accept,
        }
    }

    pub fn estimate(&self, x: &Point, d: f64, pairs: usize, s: &mut RandomStream, perm: &mut Vec<usize>) -> Result<Local> {
        let radius = self.tau * d;
        let fx = self.f.evaluate(x)?;
        let grad = self.f.gradient(x)?;
        let weight = self.sphere * radius.powf(self.q) / self.q;
        let r_lin = LINEAR_CUTOFF * radius;
        s.permutation(pairs, perm);
        let mut w = Welford::default();
        let mut rejected = 0;
        for j in 0..pairs {
            let sigma = direction(self.dim, j, pairs, s);
            let u = (perm[j] as f64 + s.uniform_open()) / pairs as f64;
            let r = radius * (u.ln() / self.q).exp();
            let mut acc = 0.0;
            let mut ok = true;
            for dir in [sigma, -sigma] {
                let y = *x + dir * r;
                if let Some(a) = self.accept {
                    if !a.contains_point(&y) {
                        continue;
                    }
                }
                let quot = if r < r_lin {
                    grad.dot(&dir).abs()
                } else {
                    match self.f.evaluate(&y) {
                        Ok(fy) => (fy - fx).abs() / r,
                        Err(_) => {
                            ok = false;
                            break;
                        }
                    }
                };
                acc += pow_p(quot, self.p);
            }
            if ok {
                w.push(0.5 * acc);
            } else {
                rejected += 1;
            }
        }
        Ok(finish(&w, weight, rejected, 2 * pairs as u64))
    }
}

/// Polar sampler for the far region `tau d(x) <= |h| <= reach(x)` with
/// `x + h` in `target`; radial density proportional to `r^{(1-s)p - 1}`.
pub(crate) struct FarPolar<'a> {
    f: &'a TestFunction,
    p: f64,
    q: f64,
    tau: f64,
    exponent: f64,
    dim: usize,
    sphere: f64,
    target: &'a dyn Region,
    metric: Metric<'a>,
}

impl<'a> FarPolar<'a> {
    pub fn new(
        f: &'a TestFunction,
        params: &SeminormParams,
        dim: usize,
        target: &'a dyn Region,
        metric: Metric<'a>,
    ) -> Self {
        Self {
            f,
            p: params.p(),
            q: params.q(),
            tau: params.tau(),
            exponent: dim as f64 + params.s() * params.p(),
            dim,
            sphere: sphere_area(dim),
            target,
            metric,
        }
    }

    pub fn estimate(&self, x: &Point, d: f64, pairs: usize, s: &mut RandomStream, perm: &mut Vec<usize>) -> Result<Local> {
        let r0 = self.tau * d;
        let reach = self.target.reach_from(x);
        if reach <= r0 {
            return Ok(Local::default());
        }
        let a = (self.q * (reach / r0).ln()).exp_m1();
        let weight = self.sphere * r0.powf(self.q) * a / self.q;
        let fx = self.f.evaluate(x)?;
        s.permutation(pairs, perm);
        let mut w = Welford::default();
        let mut rejected = 0;
        for j in 0..pairs {
            let sigma = direction(self.dim, j, pairs, s);
            let u = (perm[j] as f64 + s.uniform_open()) / pairs as f64;
            let r = r0 * ((u * a).ln_1p() / self.q).exp();
            if r < KERNEL_FLOOR {
                rejected += 1;
                continue;
            }
            let mut acc = 0.0;
            let mut ok = true;
            for dir in [sigma, -sigma] {
                let y = *x + dir * r;
                if !self.target.contains_point(&y) {
                    continue;
                }
                let Ok(fy) = self.f.evaluate(&y) else {
                    ok = false;
                    break;
                };
                let mut k = pow_p((fy - fx).abs() / r, self.p);
                if let Metric::Geodesic(dom) = self.metric {
                    match dom.geodesic_unchecked(x, &y) {
                        Ok(delta) => k *= (r / delta).powf(self.exponent),
                        Err(GeometryError::Disconnected) => {
                            ok = false;
                            break;
                        }
                        Err(e) => return Err(e.into()),
                    }
                }
                acc += k;
            }
            if ok {
                w.push(0.5 * acc);
            } else {
                rejected += 1;
            }
        }
        Ok(finish(&w, weight, rejected, 2 * pairs as u64))
    }
}

/// Running totals of a nested estimator.
#[derive(Clone, Copy, Debug, Default)]
pub(crate) struct Stats {
    w: Welford,
    pub count: u64,
    pub rejected: u64,
    pub attempted: u64,
}

impl Stats {
    /// `(|Omega| mean, stderr)`; `measure_stderr` accounts for an estimated
    /// measure.
    pub fn scaled(&self, measure: f64, measure_stderr: f64) -> (f64, f64) {
        let se = self.w.stderr_of_mean();
        let value = measure * self.w.mean;
        (value, (measure * se).hypot(self.w.mean * measure_stderr))
    }

    fn merge(&mut self, o: &Stats) {
        self.w.merge(&o.w);
        self.count += o.count;
        self.rejected += o.rejected;
        self.attempted += o.attempted;
    }
}

/// Outer average of `per_x` over uniform points of `outer`. Blocks of
/// [`BLOCK`] points draw from `stream.derive(block)` and are merged in block
/// order, so the result does not depend on the number of workers.
pub(crate) fn nested<R, F>(outer: &R, n_outer: usize, stream: &RandomStream, per_x: F) -> Result<Stats>
where
    R: Region + ?Sized,
    F: Fn(&Point, &mut RandomStream, &mut Vec<usize>) -> Result<Local> + Sync,
{
    let blocks = n_outer.div_ceil(BLOCK);
    let parts: Vec<Result<Stats>> = (0..blocks)
        .into_par_iter()
        .map(|b| {
            let mut s = stream.derive(b as u64);
            let mut perm = Vec::new();
            let mut st = Stats::default();
            for _ in 0..BLOCK.min(n_outer - b * BLOCK) {
                let x = outer.sample(&mut s)?;
                let local = per_x(&x, &mut s, &mut perm)?;
                st.w.push(local.value);
                st.count += 1;
                st.rejected += local.rejected;
                st.attempted += local.attempted;
            }
            Ok(st)
        })
        .collect();
    let mut total = Stats::default();
    for part in parts {
        total.merge(&part?);
    }
    check_rejections(total.rejected, total.attempted)?;
    Ok(total)
}

/// Far part by uniform pairs on `outer x target`.
pub(crate) struct UniformPairs<'a> {
    f: &'a TestFunction,
    p: f64,
    tau: f64,
    exponent: f64,
    target: &'a dyn Region,
    metric: Metric<'a>,
    order: PairOrder,
}

pub(crate) struct PairEstimate {
    pub value: f64,
    pub stderr: f64,
    pub count: u64,
    pub rejected: u64,
}

impl<'a> UniformPairs<'a> {
    pub fn new(
        f: &'a TestFunction,
        params: &SeminormParams,
        target: &'a dyn Region,
        metric: Metric<'a>,
        order: PairOrder,
    ) -> Self {
        Self {
            f,
            p: params.p(),
            tau: params.tau(),
            exponent: target.dim() as f64 + params.s() * params.p(),
            target,
            metric,
            order,
        }
    }

    fn kernel(&self, x: &Point, y: &Point, dist: &(dyn Fn(&Point) -> f64 + Sync)) -> Result<Option<f64>> {
        let r = x.distance(y);
        if r < KERNEL_FLOOR {
            return Ok(None);
        }
        if r < self.tau * dist(x) {
            return Ok(Some(0.0));
        }
        let (Ok(fx), Ok(fy)) = (self.f.evaluate(x), self.f.evaluate(y)) else {
            return Ok(None);
        };
        let len = match self.metric {
            Metric::Euclidean => r,
            Metric::Geodesic(dom) => match dom.geodesic_unchecked(x, y) {
                Ok(delta) => delta,
                Err(GeometryError::Disconnected) => return Ok(None),
                Err(e) => return Err(e.into()),
            },
        };
        Ok(Some(pow_p((fy - fx).abs(), self.p) / len.powf(self.exponent)))
    }

    /// Assumes `outer` and `target` describe the same set when the pair
    /// order is swapped.
    pub fn estimate<R: Region + ?Sized>(
        &self,
        outer: &R,
        dist: &(dyn Fn(&Point) -> f64 + Sync),
        budget: usize,
        stream: &RandomStream,
    ) -> Result<PairEstimate> {
        let blocks = budget.div_ceil(BLOCK);
        let parts: Vec<Result<Stats>> = (0..blocks)
            .into_par_iter()
            .map(|b| {
                let mut s = stream.derive(b as u64);
                let mut st = Stats::default();
                for _ in 0..BLOCK.min(budget - b * BLOCK) {
                    let first = outer.sample(&mut s)?;
                    let second = self.target.sample(&mut s)?;
                    let (x, y) = match self.order {
                        PairOrder::FirstIsX => (first, second),
                        PairOrder::SecondIsX => (second, first),
                    };
                    st.attempted += 1;
                    match self.kernel(&x, &y, dist)? {
                        Some(k) => {
                            st.w.push(k);
                            st.count += 1;
                        }
                        None => st.rejected += 1,
                    }
                }
                Ok(st)
            })
            .collect();
        let mut total = Stats::default();
        for part in parts {
            total.merge(&part?);
        }
        check_rejections(total.rejected, total.attempted)?;
        let (value, stderr) = total.scaled(outer.measure() * self.target.measure(), 0.0);
        Ok(PairEstimate {
            value,
            stderr,
            count: total.count,
            rejected: total.rejected,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn welford_merge_matches_single_pass() {
        let data: Vec<f64> = (0..1000).map(|i| ((i * 37) % 101) as f64 * 0.5).collect();
        let mut all = Welford::default();
        data.iter().for_each(|&v| all.push(v));
        let mut a = Welford::default();
        let mut b = Welford::default();
        data[..313].iter().for_each(|&v| a.push(v));
        data[313..].iter().for_each(|&v| b.push(v));
        a.merge(&b);
        assert!((a.mean - all.mean).abs() < 1e-12);
        assert!((a.m2 - all.m2).abs() < 1e-8 * all.m2);
    }

    #[test]
    fn directions_are_unit_and_in_upper_half() {
        let mut s = RandomStream::new(1);
        for dim in 1..=3 {
            for j in 0..16 {
                let v = direction(dim, j, 16, &mut s);
                assert!((v.norm() - 1.0).abs() < 1e-14);
                assert!(v.get(dim - 1) >= 0.0);
            }
        }
    }
}
