//! Oracles shared by the integration tests. None of them call into the
//! estimators they check.
#![allow(dead_code)]

pub mod properties;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

/// Double-exponential quadrature of `f` over `[a, b]`, refined by halving the
/// step until two levels agree to `1e-15` relative.
pub fn tanh_sinh<F: Fn(f64) -> f64>(f: F, a: f64, b: f64) -> f64 {
    let half = 0.5 * (b - a);
    let node = |t: f64| -> f64 {
        let u = std::f64::consts::FRAC_PI_2 * t.sinh();
        let w = std::f64::consts::FRAC_PI_2 * t.cosh() / u.cosh().powi(2);
        // Distance from the nearer endpoint, computed without cancellation.
        let gap = half / (u.abs().exp() * u.cosh());
        let x = if u > 0.0 { b - gap } else { a + gap };
        if !(x > a && x < b) || w == 0.0 {
            return 0.0;
        }
        w * f(x)
    };
    let t_max = 6.5;
    let mut h = 0.5;
    let mut sum = node(0.0);
    let mut k = 1;
    while k as f64 * h <= t_max {
        let t = k as f64 * h;
        sum += node(t) + node(-t);
        k += 1;
    }
    let mut prev = half * h * sum;
    for _ in 0..10 {
        h *= 0.5;
        let mut k = 1;
        while k as f64 * h <= t_max {
            let t = k as f64 * h;
            sum += node(t) + node(-t);
            k += 2;
        }
        let cur = half * h * sum;
        if (cur - prev).abs() <= 1e-15 * cur.abs().max(1e-300) {
            return cur;
        }
        prev = cur;
    }
    prev
}

/// `|S^{n-1}|` from the Gamma-function formula, written out for `n <= 4`.
pub fn sphere_area(n: usize) -> f64 {
    use std::f64::consts::PI;
    match n {
        1 => 2.0,
        2 => 2.0 * PI,
        3 => 4.0 * PI,
        4 => 2.0 * PI * PI,
        _ => panic!("oracle covers n <= 4"),
    }
}

/// `K_{n,p}` from the one-dimensional reduction
/// `int_S |sigma_1|^p = |S^{n-2}| int_{-1}^{1} |t|^p (1 - t^2)^{(n-3)/2} dt`,
/// integrated after `t = sin(theta)` so the endpoint weight disappears.
pub fn k_beta(n: usize, p: f64) -> f64 {
    if n == 1 {
        return 2.0 / p;
    }
    let half = tanh_sinh(|th| th.sin().powf(p) * th.cos().powi(n as i32 - 2), 0.0, std::f64::consts::FRAC_PI_2);
    sphere_area(n - 1) * 2.0 * half / p
}

/// `K_{n,p}` by normalized Gaussian vectors. Returns value and standard error.
pub fn k_gauss(n: usize, p: f64, samples: usize, seed: u64) -> (f64, f64) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (mut sum, mut sq) = (0.0, 0.0);
    let mut v = vec![0.0f64; n];
    for _ in 0..samples {
        for c in v.iter_mut() {
            *c = rng.sample(StandardNormal);
        }
        let norm = v.iter().map(|c| c * c).sum::<f64>().sqrt();
        let y = (v[0] / norm).abs().powf(p);
        sum += y;
        sq += y * y;
    }
    let m = sum / samples as f64;
    let var = (sq / samples as f64 - m * m).max(0.0) * samples as f64 / (samples as f64 - 1.0);
    let c = sphere_area(n) / p;
    (c * m, c * (var / samples as f64).sqrt())
}

/// `int_{(0,1)^2} d(x)^a dx` in closed form.
pub fn square_distance_moment(a: f64) -> f64 {
    0.5f64.powf(a) * (1.0 - 2.0 * a / (a + 1.0) + a / (a + 2.0))
}

/// `int_{(0,1)^2} d(x)^a dx` by the layer-cake formula, `|{d > t}| = (1 - 2t)^2`,
/// with `w = t^a`.
pub fn square_distance_moment_quadrature(a: f64) -> f64 {
    tanh_sinh(|w| (1.0 - 2.0 * w.powf(1.0 / a)).powi(2), 0.0, 0.5f64.powf(a))
}

/// Tensor double-exponential quadrature over a rectangle.
pub fn tanh_sinh_2d<F: Fn(f64, f64) -> f64>(f: F, x: (f64, f64), y: (f64, f64)) -> f64 {
    tanh_sinh(|u| tanh_sinh(|v| f(u, v), y.0, y.1), x.0, x.1)
}

/// Two-sided central difference of `g` along coordinate `i`.
pub fn central_difference<G: Fn(&[f64]) -> f64>(g: G, x: &[f64], i: usize, h: f64) -> f64 {
    let mut a = x.to_vec();
    let mut b = x.to_vec();
    a[i] += h;
    b[i] -= h;
    (g(&a) - g(&b)) / (2.0 * h)
}
