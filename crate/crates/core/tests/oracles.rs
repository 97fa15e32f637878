mod common;

use std::f64::consts::PI;

use bbmlab::seminorm::{
    classical_energy, classical_energy_with, geodesic_energy, k_constant, truncated_energy, FarSampler, PairOrder,
};
use bbmlab::{Budgets, Domain, RandomStream, SeminormParams, TestFunction};
use common::{k_beta, k_gauss, square_distance_moment, square_distance_moment_quadrature, tanh_sinh};

#[test]
fn quadrature_handles_endpoint_singularities() {
    assert!((tanh_sinh(|t| t.powf(-0.5), 0.0, 1.0) - 2.0).abs() < 1e-12);
    assert!((tanh_sinh(|t| (1.0 - t * t).sqrt(), -1.0, 1.0) - PI / 2.0).abs() < 1e-12);
    assert!((tanh_sinh(|t| t.exp(), 0.0, 1.0) - (1f64.exp() - 1.0)).abs() < 1e-14);
}

#[test]
fn k_matches_one_dimensional_reduction() {
    for n in 1..=4 {
        for p in [1.0, 1.5, 2.0, 2.5, 3.0, 4.0] {
            let k = k_constant(n, p).unwrap().value;
            let oracle = k_beta(n, p);
            assert!((k - oracle).abs() <= 1e-10 * oracle, "n = {n}, p = {p}: {k} vs {oracle}");
        }
    }
}

#[test]
fn k_matches_gaussian_sampling() {
    for (n, p) in [(2, 2.0), (3, 1.5), (3, 3.0)] {
        let k = k_constant(n, p).unwrap().value;
        let (mc, se) = k_gauss(n, p, 200_000, 11);
        assert!((mc - k).abs() < 4.0 * se, "n = {n}, p = {p}: {mc} +- {se} vs {k}");
    }
}

#[test]
fn square_distance_moment_two_ways() {
    for a in [0.02, 0.1, 0.5, 1.0, 2.0, 3.5] {
        let c = square_distance_moment(a);
        let q = square_distance_moment_quadrature(a);
        assert!((c - q).abs() < 1e-12, "a = {a}: {c} vs {q}");
    }
    assert!((square_distance_moment(1.0) - 1.0 / 6.0).abs() < 1e-15);
}

#[test]
fn truncated_linear_energy_matches_distance_moment() {
    let f = TestFunction::linear(&[0.0, 1.0], 0.0);
    let dom = Domain::unit_square();
    let budgets = Budgets::new(1 << 12, 1 << 6, 1 << 14);
    for (i, s) in [0.5, 0.9, 0.97].into_iter().enumerate() {
        let params = SeminormParams::new(s, 2.0, 0.5).unwrap();
        let e = truncated_energy(&f, &dom, &params, &budgets, &RandomStream::new(40 + i as u64)).unwrap();
        let a = (1.0 - s) * 2.0;
        let want = PI / 2.0 * 0.5f64.powf(a) * square_distance_moment(a) / (1.0 - s);
        assert!((e.value - want).abs() < 3.5 * e.stderr, "s = {s}: {} +- {} vs {want}", e.value, e.stderr);
    }
}

#[test]
fn classical_linear_energy_on_interval() {
    // int_0^1 int_0^1 |x - y|^alpha = 2 / ((alpha + 1)(alpha + 2)), alpha = p - 1 - sp.
    let f = TestFunction::linear(&[1.0], 0.0);
    let dom = Domain::interval(0.0, 1.0).unwrap();
    let budgets = Budgets::new(1 << 13, 1 << 5, 1 << 17);
    for (s, p) in [(0.5, 2.0), (0.8, 1.5), (0.3, 3.0)] {
        let params = SeminormParams::new(s, p, 0.5).unwrap();
        let e = classical_energy(&f, &dom, &params, &budgets, &RandomStream::new(5)).unwrap();
        let alpha = p - 1.0 - s * p;
        let want = 2.0 / ((alpha + 1.0) * (alpha + 2.0));
        assert!((e.value - want).abs() < 4.0 * e.stderr + 1e-3 * want, "s = {s}, p = {p}: {} +- {} vs {want}", e.value, e.stderr);
    }
}

#[test]
fn classical_near_part_is_the_truncated_energy() {
    let dom = Domain::unit_disk();
    let params = SeminormParams::new(0.9, 2.0, 0.5).unwrap();
    let budgets = Budgets::new(256, 16, 4096);
    let stream = RandomStream::new(3);
    let c = classical_energy(&TestFunction::trig(), &dom, &params, &budgets, &stream).unwrap();
    let t = truncated_energy(&TestFunction::trig(), &dom, &params, &budgets, &stream).unwrap();
    assert_eq!(c.near.unwrap().value, t.value);
    assert!(c.value >= t.value);
}

#[test]
fn geodesic_equals_classical_on_convex_domains() {
    let params = SeminormParams::new(0.7, 2.0, 0.5).unwrap();
    let budgets = Budgets::new(1 << 11, 16, 1 << 15);
    for dom in [Domain::unit_square(), Domain::unit_disk()] {
        let g = geodesic_energy(&TestFunction::trig(), &dom, &params, &budgets, &RandomStream::new(8)).unwrap();
        let c = classical_energy(&TestFunction::trig(), &dom, &params, &budgets, &RandomStream::new(9)).unwrap();
        assert!((g.value - c.value).abs() < 3.0 * g.stderr.hypot(c.stderr), "{} vs {}", g.value, c.value);
    }
}

#[test]
fn far_samplers_and_pair_orders_agree() {
    let dom = Domain::unit_square();
    let params = SeminormParams::new(0.5, 2.0, 0.5).unwrap();
    let budgets = Budgets::new(1 << 11, 16, 1 << 18);
    let f = TestFunction::quadratic();
    let run = |sampler, seed| classical_energy_with(&f, &dom, &params, &budgets, &RandomStream::new(seed), sampler).unwrap();
    let polar = run(FarSampler::Polar, 1);
    let first = run(FarSampler::UniformPairs(PairOrder::FirstIsX), 2);
    let second = run(FarSampler::UniformPairs(PairOrder::SecondIsX), 3);
    let far = |e: &bbmlab::EnergyEstimate| e.far.unwrap();
    let (a, b) = (far(&first), far(&second));
    assert!((a.value - b.value).abs() < 4.0 * a.stderr.hypot(b.stderr), "{a:?} vs {b:?}");
    let c = far(&polar);
    assert!((a.value - c.value).abs() < 4.0 * a.stderr.hypot(c.stderr), "{a:?} vs {c:?}");
}

#[test]
fn energy_is_deterministic_across_thread_counts() {
    let dom = Domain::l_shape();
    let params = SeminormParams::new(0.95, 2.0, 0.5).unwrap();
    let budgets = Budgets::new(2048, 16, 1 << 14);
    let run = |threads| {
        let pool = rayon::ThreadPoolBuilder::new().num_threads(threads).build().unwrap();
        pool.install(|| geodesic_energy(&TestFunction::trig(), &dom, &params, &budgets, &RandomStream::new(21)).unwrap())
    };
    assert_eq!(run(1), run(3));
}
