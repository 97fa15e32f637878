//! Closed-form test functions with analytic gradients.

use std::f64::consts::PI;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geometry::{Domain, Region, Shape};
use crate::point::Point;
use crate::rng::RandomStream;
use crate::{Error, Result};

/// Fraction of samples allowed to land on a singular set before an estimator
/// gives up.
pub const SINGULAR_SKIP_LIMIT: f64 = 1e-3;

pub(crate) const BLOCK: usize = 256;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum FunctionError {
    #[error("{function} is singular at {point:?}")]
    Singular { function: &'static str, point: Point },

    #[error("{0}")]
    Incompatible(String),
}

/// A real number or `+infinity`, kept apart so infinities never enter
/// arithmetic.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ExtendedReal {
    Finite(f64),
    Infinite,
}

impl ExtendedReal {
    pub fn finite(&self) -> Option<f64> {
        match self {
            ExtendedReal::Finite(v) => Some(*v),
            ExtendedReal::Infinite => None,
        }
    }
}

/// Monte Carlo estimate of `||grad f||_p^p`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct GradientPNorm {
    pub value: ExtendedReal,
    pub stderr: f64,
    pub samples: u64,
    pub skipped: u64,
}

/// Regularity of a function on a given domain.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Regularity {
    pub c2_on_domain: bool,
    pub in_w1p: bool,
    pub in_lp: bool,
}

/// JSON: `{"kind": "linear" | "quadratic" | "trig" | "power" | ..., ...}`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase", deny_unknown_fields)]
pub enum TestFunction {
    Constant {
        value: f64,
    },
    /// `a . x + b`
    Linear {
        coefficients: Vec<f64>,
        #[serde(default)]
        offset: f64,
    },
    /// `|x|^2 / 2`
    Quadratic {},
    /// `sin(pi x1) cos(pi x2)`; the cosine factor is 1 in one dimension.
    Trig {},
    /// `x1^(-beta)`, singular on `{x1 <= 0}`.
    Power {
        beta: f64,
    },
    /// `factor * inner`
    Scaled {
        factor: f64,
        inner: Box<TestFunction>,
    },
}

impl TestFunction {
    pub fn linear(coefficients: &[f64], offset: f64) -> Self {
        TestFunction::Linear {
            coefficients: coefficients.to_vec(),
            offset,
        }
    }

    pub fn quadratic() -> Self {
        TestFunction::Quadratic {}
    }

    pub fn trig() -> Self {
        TestFunction::Trig {}
    }

    pub fn power(beta: f64) -> Self {
        TestFunction::Power { beta }
    }

    pub fn scaled(self, factor: f64) -> Self {
        TestFunction::Scaled {
            factor,
            inner: Box::new(self),
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            TestFunction::Constant { .. } => "constant",
            TestFunction::Linear { .. } => "linear",
            TestFunction::Quadratic {} => "quadratic",
            TestFunction::Trig {} => "trig",
            TestFunction::Power { .. } => "power",
            TestFunction::Scaled { inner, .. } => inner.name(),
        }
    }

    /// True on points where the closed form is undefined.
    pub fn is_singular(&self, x: &Point) -> bool {
        match self {
            TestFunction::Power { .. } => x.get(0) <= 0.0,
            TestFunction::Scaled { inner, .. } => inner.is_singular(x),
            _ => false,
        }
    }

    fn singular(&self, x: &Point) -> FunctionError {
        FunctionError::Singular {
            function: self.name(),
            point: *x,
        }
    }

    pub fn evaluate(&self, x: &Point) -> std::result::Result<f64, FunctionError> {
        Ok(match self {
            TestFunction::Constant { value } => *value,
            TestFunction::Linear { coefficients, offset } => {
                coefficients.iter().zip(x.coords()).map(|(a, c)| a * c).sum::<f64>() + offset
            }
            TestFunction::Quadratic {} => 0.5 * x.norm_squared(),
            TestFunction::Trig {} => (PI * x.get(0)).sin() * (PI * x.get(1)).cos(),
            TestFunction::Power { beta } => {
                if x.get(0) <= 0.0 {
                    return Err(self.singular(x));
                }
                x.get(0).powf(-beta)
            }
            TestFunction::Scaled { factor, inner } => factor * inner.evaluate(x)?,
        })
    }

    pub fn gradient(&self, x: &Point) -> std::result::Result<Point, FunctionError> {
        let dim = x.dim();
        Ok(match self {
            TestFunction::Constant { .. } => Point::zero(dim),
            TestFunction::Linear { coefficients, .. } => {
                let mut g = Point::zero(dim);
                for (i, a) in coefficients.iter().take(dim).enumerate() {
                    g.set(i, *a);
                }
                g
            }
            TestFunction::Quadratic {} => *x,
            TestFunction::Trig {} => {
                let (s1, c1) = (PI * x.get(0)).sin_cos();
                let (s2, c2) = (PI * x.get(1)).sin_cos();
                let mut g = Point::zero(dim);
                g.set(0, PI * c1 * c2);
                if dim >= 2 {
                    g.set(1, -PI * s1 * s2);
                }
                g
            }
            TestFunction::Power { beta } => {
                if x.get(0) <= 0.0 {
                    return Err(self.singular(x));
                }
                let mut g = Point::zero(dim);
                g.set(0, -beta * x.get(0).powf(-beta - 1.0));
                g
            }
            TestFunction::Scaled { factor, inner } => inner.gradient(x)? * *factor,
        })
    }

    /// Checks that the function can be paired with `dom`: coefficient
    /// counts match and power functions only meet their singular set at the
    /// tip of a cusp.
    pub fn validate_for(&self, dom: &Domain) -> std::result::Result<(), FunctionError> {
        match self {
            TestFunction::Linear { coefficients, .. } if coefficients.len() != dom.dim() => {
                Err(FunctionError::Incompatible(format!(
                    "linear function has {} coefficients on a {}-dimensional domain",
                    coefficients.len(),
                    dom.dim()
                )))
            }
            TestFunction::Power { beta } => {
                if !(*beta > 0.0 && beta.is_finite()) {
                    return Err(FunctionError::Incompatible(format!("power exponent {beta} must be positive")));
                }
                let clear = dom.bounding_box().0.get(0) > 0.0;
                if clear || matches!(dom.shape(), Shape::Cusp(_)) {
                    Ok(())
                } else {
                    Err(FunctionError::Incompatible(
                        "power functions pair only with cusps or domains inside {x1 > 0}".into(),
                    ))
                }
            }
            TestFunction::Scaled { factor, inner } => {
                if !factor.is_finite() {
                    return Err(FunctionError::Incompatible("scale factor must be finite".into()));
                }
                inner.validate_for(dom)
            }
            _ => Ok(()),
        }
    }

    /// Regularity flags on `dom` for exponent `p`. For `x1^(-beta)` on the
    /// cusp of exponent `gamma`, `||grad f||_p^p` is a multiple of
    /// `int_0^1 x^(gamma - (beta + 1) p) dx`, finite iff
    /// `(beta + 1) p - gamma < 1`.
    pub fn regularity(&self, dom: &Domain, p: f64) -> Regularity {
        match self {
            TestFunction::Power { beta } => match dom.shape() {
                Shape::Cusp(c) => Regularity {
                    c2_on_domain: true,
                    in_w1p: (beta + 1.0) * p - c.gamma() < 1.0,
                    in_lp: beta * p - c.gamma() < 1.0,
                },
                _ => {
                    let clear = dom.bounding_box().0.get(0) > 0.0;
                    Regularity {
                        c2_on_domain: clear,
                        in_w1p: clear,
                        in_lp: clear,
                    }
                }
            },
            TestFunction::Scaled { inner, .. } => inner.regularity(dom, p),
            _ => Regularity {
                c2_on_domain: true,
                in_w1p: true,
                in_lp: true,
            },
        }
    }

    /// Closed-form `||grad f||_p^p` where one is known.
    pub fn gradient_p_norm_exact(&self, dom: &Domain, p: f64) -> Option<ExtendedReal> {
        if !self.regularity(dom, p).in_w1p {
            return Some(ExtendedReal::Infinite);
        }
        let v = match (self, dom.shape()) {
            (TestFunction::Constant { .. }, _) => 0.0,
            (TestFunction::Linear { coefficients, .. }, _) => {
                let a = coefficients.iter().map(|c| c * c).sum::<f64>().sqrt();
                a.powf(p) * dom.measure()
            }
            (TestFunction::Quadratic {}, Shape::Ball { center, radius }) if center.norm() == 0.0 => {
                let n = dom.dim() as f64;
                crate::geometry::sphere_area(dom.dim()) * radius.powf(n + p) / (n + p)
            }
            (TestFunction::Power { beta }, Shape::Cusp(c)) => {
                2.0 * beta.powf(p) / (c.gamma() + 1.0 - (beta + 1.0) * p)
            }
            (TestFunction::Scaled { factor, inner }, _) => {
                return inner
                    .gradient_p_norm_exact(dom, p)
                    .map(|v| match v {
                        ExtendedReal::Finite(x) => ExtendedReal::Finite(factor.abs().powf(p) * x),
                        ExtendedReal::Infinite => ExtendedReal::Infinite,
                    });
            }
            _ => return None,
        };
        Some(ExtendedReal::Finite(v))
    }

    /// Closed-form `||f||_p^p` where one is known: constants, linear
    /// functions of a single coordinate on intervals and boxes, and powers on
    /// the cusp.
    pub fn lp_norm_exact(&self, dom: &Domain, p: f64) -> Option<f64> {
        match (self, dom.shape()) {
            (TestFunction::Constant { value }, _) => Some(value.abs().powf(p) * dom.measure()),
            (TestFunction::Linear { coefficients, offset }, Shape::Box { .. } | Shape::Interval { .. }) => {
                let nonzero: Vec<usize> = (0..coefficients.len()).filter(|&i| coefficients[i] != 0.0).collect();
                let (lo, hi) = dom.bounding_box();
                match nonzero.as_slice() {
                    [] => Some(offset.abs().powf(p) * dom.measure()),
                    [k] => {
                        let a = coefficients[*k];
                        let (u0, u1) = (a * lo.get(*k) + offset, a * hi.get(*k) + offset);
                        let antideriv = |u: f64| u.signum() * u.abs().powf(p + 1.0) / (p + 1.0);
                        let one_d = (antideriv(u1) - antideriv(u0)) / a;
                        let width = hi.get(*k) - lo.get(*k);
                        Some(one_d * dom.measure() / width)
                    }
                    _ => None,
                }
            }
            (TestFunction::Power { beta }, Shape::Cusp(c)) => {
                let e = c.gamma() + 1.0 - beta * p;
                (e > 0.0).then(|| 2.0 / e)
            }
            (TestFunction::Scaled { factor, inner }, _) => inner.lp_norm_exact(dom, p).map(|v| factor.abs().powf(p) * v),
            _ => None,
        }
    }
}

/// Mean and standard error of `|Omega| * g(X)` for uniform `X`, skipping
/// singular points; shared by the two norm estimators.
fn integrate_over<R: Region + ?Sized>(
    region: &R,
    budget: usize,
    stream: &RandomStream,
    g: impl Fn(&Point) -> Option<f64> + Sync,
) -> Result<(f64, f64, u64, u64)> {
    let blocks = budget.div_ceil(BLOCK);
    let parts: Vec<Result<(u64, f64, f64, u64)>> = (0..blocks)
        .into_par_iter()
        .map(|b| {
            let mut s = stream.derive(b as u64);
            let n = BLOCK.min(budget - b * BLOCK);
            let (mut sum, mut sumsq, mut skipped, mut count) = (0.0, 0.0, 0u64, 0u64);
            for _ in 0..n {
                let x = region.sample(&mut s)?;
                match g(&x) {
                    Some(v) => {
                        sum += v;
                        sumsq += v * v;
                        count += 1;
                    }
                    None => skipped += 1,
                }
            }
            Ok((count, sum, sumsq, skipped))
        })
        .collect();
    let (mut n, mut sum, mut sumsq, mut skipped) = (0u64, 0.0, 0.0, 0u64);
    for part in parts {
        let (c, s1, s2, k) = part?;
        n += c;
        sum += s1;
        sumsq += s2;
        skipped += k;
    }
    if skipped as f64 > SINGULAR_SKIP_LIMIT * budget as f64 {
        return Err(Error::SingularBudgetExceeded {
            rejected: skipped,
            attempted: budget as u64,
        });
    }
    if n == 0 {
        return Err(Error::param("integration budget must be positive"));
    }
    let mean = sum / n as f64;
    let var = if n > 1 {
        ((sumsq - n as f64 * mean * mean) / (n - 1) as f64).max(0.0)
    } else {
        0.0
    };
    let m = region.measure();
    Ok((m * mean, m * (var / n as f64).sqrt(), n, skipped))
}

/// Monte Carlo `|Omega| * mean |grad f(X_i)|^p`. Returns the infinite flag
/// without sampling when `f` is not in `W^{1,p}(Omega)`.
pub fn gradient_p_norm(
    f: &TestFunction,
    dom: &Domain,
    p: f64,
    budget: usize,
    stream: &RandomStream,
) -> Result<GradientPNorm> {
    if !(p > 1.0 && p.is_finite()) {
        return Err(Error::param(format!("p = {p} must lie in (1, inf)")));
    }
    f.validate_for(dom)?;
    if !f.regularity(dom, p).in_w1p {
        return Ok(GradientPNorm {
            value: ExtendedReal::Infinite,
            stderr: 0.0,
            samples: 0,
            skipped: 0,
        });
    }
    let (value, stderr, samples, skipped) =
        integrate_over(dom, budget, stream, |x| f.gradient(x).ok().map(|g| g.norm().powf(p)))?;
    Ok(GradientPNorm {
        value: ExtendedReal::Finite(value),
        stderr,
        samples,
        skipped,
    })
}

/// Monte Carlo `||f||_p^p` with standard error.
pub fn lp_norm(f: &TestFunction, dom: &Domain, p: f64, budget: usize, stream: &RandomStream) -> Result<(f64, f64)> {
    f.validate_for(dom)?;
    let (v, se, _, _) = integrate_over(dom, budget, stream, |x| f.evaluate(x).ok().map(|v| v.abs().powf(p)))?;
    Ok((v, se))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn evaluate_examples() {
        let lin = TestFunction::linear(&[0.0, 1.0], 0.0);
        assert_eq!(lin.evaluate(&Point::xy(0.3, 0.7)).unwrap(), 0.7);
        assert_eq!(TestFunction::quadratic().evaluate(&Point::xy(3.0, 4.0)).unwrap(), 12.5);
        assert_eq!(TestFunction::power(0.5).evaluate(&Point::xy(0.25, 0.1)).unwrap(), 2.0);
        assert!(matches!(
            TestFunction::power(0.5).evaluate(&Point::xy(0.0, 0.1)),
            Err(FunctionError::Singular { .. })
        ));
    }

    #[test]
    fn gradient_examples() {
        let lin = TestFunction::linear(&[0.0, 1.0], 0.0);
        assert_eq!(lin.gradient(&Point::xy(5.0, -2.0)).unwrap().coords(), &[0.0, 1.0]);
        assert_eq!(TestFunction::quadratic().gradient(&Point::xy(3.0, 4.0)).unwrap().coords(), &[3.0, 4.0]);
        let g = TestFunction::trig().gradient(&Point::xy(0.5, 0.0)).unwrap();
        assert!(g.norm() < 1e-15);
        assert!(TestFunction::power(1.0).gradient(&Point::xy(-1.0, 0.0)).is_err());
    }

    #[test]
    fn w1p_criterion_on_cusp() {
        let cusp = Domain::cusp(3.0).unwrap();
        // (beta + 1) p - gamma < 1
        assert!(TestFunction::power(0.5).regularity(&cusp, 2.0).in_w1p);
        assert!(!TestFunction::power(1.0).regularity(&cusp, 2.0).in_w1p);
        let disk = Domain::unit_disk();
        assert!(TestFunction::power(0.5).validate_for(&disk).is_err());
        assert!(TestFunction::power(0.5).validate_for(&cusp).is_ok());
    }

    #[test]
    fn divergent_gradient_norm_is_flagged_without_sampling() {
        let cusp = Domain::cusp(2.0).unwrap();
        let g = gradient_p_norm(&TestFunction::power(1.0), &cusp, 2.0, 1000, &RandomStream::new(1)).unwrap();
        assert_eq!(g.value, ExtendedReal::Infinite);
        assert_eq!(g.samples, 0);
    }

    #[test]
    fn linear_gradient_norm_has_zero_error() {
        let lin = TestFunction::linear(&[0.0, 1.0], 0.0);
        let sq = Domain::unit_square();
        let g = gradient_p_norm(&lin, &sq, 2.0, 4096, &RandomStream::new(2)).unwrap();
        assert_eq!(g.value, ExtendedReal::Finite(1.0));
        assert!(g.stderr < 1e-14);
        let disk = Domain::unit_disk();
        let g = gradient_p_norm(&lin, &disk, 2.0, 4096, &RandomStream::new(2)).unwrap();
        assert!((g.value.finite().unwrap() - PI).abs() < 1e-12);
    }

    #[test]
    fn lp_norm_closed_form_for_linear() {
        let lin = TestFunction::linear(&[0.0, 1.0], 0.0);
        let sq = Domain::unit_square();
        assert!((lin.lp_norm_exact(&sq, 2.0).unwrap() - 1.0 / 3.0).abs() < 1e-15);
        let shifted = TestFunction::linear(&[2.0, 0.0], -1.0);
        // int_0^1 |2x - 1|^3 dx = 1/4
        assert!((shifted.lp_norm_exact(&sq, 3.0).unwrap() - 0.25).abs() < 1e-15);
    }

    #[test]
    fn json_round_trip() {
        let f = TestFunction::trig().scaled(-2.0);
        let s = serde_json::to_string(&f).unwrap();
        assert_eq!(serde_json::from_str::<TestFunction>(&s).unwrap(), f);
        let lin: TestFunction = serde_json::from_str(r#"{"kind":"linear","coefficients":[0,1]}"#).unwrap();
        assert_eq!(lin, TestFunction::linear(&[0.0, 1.0], 0.0));
        assert!(serde_json::from_str::<TestFunction>(r#"{"kind":"quadratic","extra":1}"#).is_err());
        assert!(serde_json::from_str::<TestFunction>(r#"{"kind":"linear","coefficients":[1],"slope":2}"#).is_err());
    }
}
