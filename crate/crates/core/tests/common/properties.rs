//! Property suites run through an explicit deterministic `TestRunner`, so the
//! same checks back both the `properties` test target and the acceptance
//! criterion on property coverage.

use bbmlab::limits::{fit_tail, FitModel};
use bbmlab::seminorm::{local_energy, truncated_energy};
use bbmlab::{Budgets, Domain, Point, RandomStream, SeminormParams, TestFunction};
use proptest::prelude::*;
use proptest::test_runner::{Config, TestCaseError, TestError, TestRng, TestRunner};

pub const CASES: u32 = 10_000;

fn runner(cases: u32) -> TestRunner {
    let config = Config {
        cases,
        failure_persistence: None,
        max_global_rejects: cases * 4,
        ..Config::default()
    };
    let rng = TestRng::deterministic_rng(config.rng_algorithm);
    TestRunner::new_with_rng(config, rng)
}

fn report<T: std::fmt::Debug>(r: Result<(), TestError<T>>) -> Result<(), String> {
    r.map_err(|e| e.to_string())
}

pub fn domains() -> Vec<(&'static str, Domain)> {
    vec![
        ("interval", Domain::interval(-1.0, 2.0).unwrap()),
        ("square", Domain::unit_square()),
        ("box3", Domain::axis_box(&[0.0, 0.0, 0.0], &[1.0, 2.0, 0.5]).unwrap()),
        ("disk", Domain::unit_disk()),
        ("ball3", Domain::ball(&[0.0, 0.0, 0.0], 1.0).unwrap()),
        ("l-shape", Domain::l_shape()),
        ("triangle", Domain::polygon(&[[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]]).unwrap()),
        ("cusp-1.5", Domain::cusp(1.5).unwrap()),
        ("cusp-2", Domain::cusp(2.0).unwrap()),
    ]
}

fn unit_vector(dim: usize, s: &mut RandomStream) -> Point {
    if dim == 1 {
        return Point::new(&[if s.uniform() < 0.5 { -1.0 } else { 1.0 }]);
    }
    loop {
        let c: Vec<f64> = (0..dim).map(|_| s.uniform_in(-1.0, 1.0)).collect();
        let n = c.iter().map(|v| v * v).sum::<f64>().sqrt();
        if n > 1e-3 && n <= 1.0 {
            return Point::new(&c.iter().map(|v| v / n).collect::<Vec<_>>());
        }
    }
}

fn offset(x: &Point, u: &Point, r: f64) -> Point {
    let c: Vec<f64> = x.coords().iter().zip(u.coords()).map(|(a, b)| a + r * b).collect();
    Point::new(&c)
}

fn fail(msg: String) -> TestCaseError {
    TestCaseError::fail(msg)
}

/// `|d(x) - d(y)| <= |x - y|` for far and nearby pairs.
pub fn lipschitz_distance(cases: u32) -> Result<(), String> {
    let doms = domains();
    report(runner(cases).run(&(0..doms.len(), any::<u64>(), 0.0f64..1.0), |(k, seed, frac)| {
        let (name, dom) = &doms[k];
        let mut s = RandomStream::new(seed);
        let x = dom.sample_uniform(&mut s).unwrap();
        let dx = dom.boundary_distance(&x).unwrap();
        if !(dx > 0.0 && dx <= dom.inradius() + 1e-12) {
            return Err(fail(format!("{name}: d({x:?}) = {dx} outside (0, inradius]")));
        }
        let far = dom.sample_uniform(&mut s).unwrap();
        let u = unit_vector(dom.dim(), &mut s);
        let near = offset(&x, &u, frac * dx);
        for y in [far, near] {
            if !dom.contains(&y).unwrap() {
                continue;
            }
            let dy = dom.boundary_distance(&y).unwrap();
            let gap = (dx - dy).abs();
            let dist = x.distance(&y);
            if gap > dist + 1e-10 {
                return Err(fail(format!("{name}: |d(x) - d(y)| = {gap} > |x - y| = {dist}")));
            }
        }
        Ok(())
    }))
}

/// Every point of the open ball of radius `d(x)` lies in the domain.
pub fn interior_ball(cases: u32) -> Result<(), String> {
    let doms = domains();
    report(runner(cases).run(&(0..doms.len(), any::<u64>(), 0.0f64..0.999), |(k, seed, frac)| {
        let (name, dom) = &doms[k];
        let mut s = RandomStream::new(seed);
        let x = dom.sample_uniform(&mut s).unwrap();
        let d = dom.boundary_distance(&x).unwrap();
        for _ in 0..8 {
            let y = offset(&x, &unit_vector(dom.dim(), &mut s), frac * d);
            if !dom.contains(&y).unwrap() {
                return Err(fail(format!("{name}: {y:?} at {} of d(x) = {d} left the domain", frac)));
            }
        }
        Ok(())
    }))
}

/// Geodesic distance never undercuts the Euclidean one and equals it on
/// convex domains.
pub fn geodesic_dominates(cases: u32) -> Result<(), String> {
    let doms: Vec<_> = domains().into_iter().filter(|(_, d)| d.supports_geodesic()).collect();
    report(runner(cases).run(&(0..doms.len(), any::<u64>()), |(k, seed)| {
        let (name, dom) = &doms[k];
        let mut s = RandomStream::new(seed);
        let x = dom.sample_uniform(&mut s).unwrap();
        let y = dom.sample_uniform(&mut s).unwrap();
        let g = dom.geodesic_distance(&x, &y).unwrap();
        let e = x.distance(&y);
        if g < e - 1e-12 {
            return Err(fail(format!("{name}: geodesic {g} < euclidean {e}")));
        }
        if dom.is_convex() && (g - e).abs() > 1e-12 {
            return Err(fail(format!("{name}: convex but geodesic {g} != euclidean {e}")));
        }
        Ok(())
    }))
}

fn smooth_functions() -> Vec<TestFunction> {
    vec![TestFunction::linear(&[0.3, -1.2], 0.5), TestFunction::quadratic(), TestFunction::trig()]
}

/// `E(c f) = |c|^p E(f)` on a shared stream. The tolerance allows for the
/// rounding of `c f(x) - c f(y)` at radii near the Taylor cutoff.
pub fn scaling_homogeneity(cases: u32) -> Result<(), String> {
    let fs = smooth_functions();
    let doms = [Domain::unit_square(), Domain::unit_disk()];
    let strat = (0..fs.len(), 0..2usize, -4.0f64..4.0, 0.3f64..0.99, 1.05f64..3.0, any::<u64>());
    report(runner(cases).run(&strat, |(i, j, c, s, p, seed)| {
        prop_assume!(c.abs() > 1e-3);
        let f = &fs[i];
        let dom = &doms[j];
        let g = f.clone().scaled(c);
        let params = SeminormParams::new(s, p, 0.5).unwrap();
        let stream = RandomStream::new(seed);
        let x = dom.sample_uniform(&mut stream.derive_named("x")).unwrap();
        let a = local_energy(f, dom, &x, &params, 32, &stream).unwrap();
        let b = local_energy(&g, dom, &x, &params, 32, &stream).unwrap();
        let want = c.abs().powf(p) * a.value;
        if (b.value - want).abs() > 1e-7 * want.abs().max(1e-300) {
            return Err(fail(format!("local: {} vs |c|^p * {} = {want}", b.value, a.value)));
        }
        let budgets = Budgets::new(8, 8, 16);
        let a = truncated_energy(f, dom, &params, &budgets, &stream).unwrap();
        let b = truncated_energy(&g, dom, &params, &budgets, &stream).unwrap();
        let want = c.abs().powf(p) * a.value;
        if (b.value - want).abs() > 1e-7 * want.abs().max(1e-300) {
            return Err(fail(format!("truncated: {} vs {want}", b.value)));
        }
        Ok(())
    }))
}

/// The cone energy grows with `tau`: exactly for linear `f`, within five
/// combined standard errors otherwise.
pub fn tau_monotone(cases: u32) -> Result<(), String> {
    let fs = smooth_functions();
    let strat = (0..fs.len(), 0.05f64..0.95, 0.05f64..0.95, 0.5f64..0.99, 1.05f64..3.0, any::<u64>());
    let dom = Domain::unit_square();
    report(runner(cases).run(&strat, |(i, t1, t2, s, p, seed)| {
        let (lo, hi) = if t1 <= t2 { (t1, t2) } else { (t2, t1) };
        let f = &fs[i];
        let stream = RandomStream::new(seed);
        let x = dom.sample_uniform(&mut stream.derive_named("x")).unwrap();
        let a = local_energy(f, &dom, &x, &SeminormParams::new(s, p, lo).unwrap(), 64, &stream).unwrap();
        let b = local_energy(f, &dom, &x, &SeminormParams::new(s, p, hi).unwrap(), 64, &stream).unwrap();
        let slack = if i == 0 {
            1e-10 * b.value
        } else {
            5.0 * a.stderr.hypot(b.stderr)
        };
        if a.value > b.value + slack {
            return Err(fail(format!("tau {lo} -> {} but tau {hi} -> {}", a.value, b.value)));
        }
        Ok(())
    }))
}

/// Tail fits recover the intercept of exact affine or quadratic data.
pub fn extrapolation_exact(cases: u32) -> Result<(), String> {
    let strat = (
        -10.0f64..10.0,
        -10.0f64..10.0,
        -10.0f64..10.0,
        prop::collection::btree_set(1u32..999, 4..9),
        prop::collection::vec(1e-4f64..1.0, 8),
        any::<bool>(),
    );
    report(runner(cases).run(&strat, |(a, b, c, ts, sig, quadratic)| {
        let t: Vec<f64> = ts.iter().map(|&k| k as f64 / 1e4).collect();
        let model = if quadratic { FitModel::Quadratic } else { FitModel::Affine };
        let cc = if quadratic { c } else { 0.0 };
        let y: Vec<f64> = t.iter().map(|t| a + b * t + cc * t * t).collect();
        let sigma = &sig[..t.len()];
        let fit = fit_tail(&t, &y, sigma, model).unwrap();
        if (fit.intercept - a).abs() > 1e-8 * (1.0 + a.abs() + b.abs() + c.abs()) {
            return Err(fail(format!("intercept {} vs {a}", fit.intercept)));
        }
        if fit.fit_error > 1e-8 * (1.0 + a.abs() + b.abs() + c.abs()) {
            return Err(fail(format!("fit error {} on exact data", fit.fit_error)));
        }
        Ok(())
    }))
}

/// Analytic gradients against central differences of `evaluate`.
pub fn gradient_matches_differences(cases: u32) -> Result<(), String> {
    let cases_list: Vec<(TestFunction, Domain)> = vec![
        (TestFunction::linear(&[0.3, -1.2], 0.5), Domain::unit_square()),
        (TestFunction::linear(&[2.0], -1.0), Domain::interval(0.0, 1.0).unwrap()),
        (TestFunction::quadratic(), Domain::unit_disk()),
        (TestFunction::quadratic(), Domain::ball(&[0.0, 0.0, 0.0], 1.0).unwrap()),
        (TestFunction::trig(), Domain::unit_square()),
        (TestFunction::trig(), Domain::interval(0.0, 1.0).unwrap()),
        (TestFunction::power(0.25), Domain::cusp(2.0).unwrap()),
        (TestFunction::power(1.5), Domain::cusp(3.0).unwrap()),
        (TestFunction::trig().scaled(-2.5), Domain::l_shape()),
    ];
    report(runner(cases).run(&(0..cases_list.len(), any::<u64>()), |(k, seed)| {
        let (f, dom) = &cases_list[k];
        let mut s = RandomStream::new(seed);
        let x = dom.sample_uniform(&mut s).unwrap();
        let grad = f.gradient(&x).unwrap();
        let scale = x.coords().iter().fold(0.1f64, |m, v| m.max(v.abs()));
        let h = 1e-5 * x.get(0).abs().clamp(1e-2, scale);
        let eval = |c: &[f64]| f.evaluate(&Point::new(c)).unwrap();
        let fx = f.evaluate(&x).unwrap().abs();
        for i in 0..dom.dim() {
            let fd = super::central_difference(eval, x.coords(), i, h);
            let tol = 1e-6 * (1.0 + grad.norm() + fx / h.max(1e-2));
            if (fd - grad.get(i)).abs() > tol {
                return Err(fail(format!("{} at {x:?}: d/dx{i} = {} vs difference {fd}", f.name(), grad.get(i))));
            }
        }
        Ok(())
    }))
}

pub type Suite = (&'static str, fn(u32) -> Result<(), String>);

pub const SUITES: [Suite; 7] = [
    ("lipschitz-distance", lipschitz_distance),
    ("interior-ball", interior_ball),
    ("geodesic-dominates", geodesic_dominates),
    ("scaling-homogeneity", scaling_homogeneity),
    ("tau-monotone", tau_monotone),
    ("extrapolation-exact", extrapolation_exact),
    ("gradient-differences", gradient_matches_differences),
];
