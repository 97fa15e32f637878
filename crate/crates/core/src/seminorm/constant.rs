use std::f64::consts::PI;

use serde::Serialize;
use statrs::function::gamma::ln_gamma;

use crate::geometry::sphere_area;
use crate::rng::RandomStream;
use crate::{Error, Result};

/// `K_{n,p} = (1/p) int_{S^{n-1}} |sigma_n|^p d sigma`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct SharpConstant {
    pub n: usize,
    pub p: f64,
    pub value: f64,
}

/// Closed form `2 pi^{(n-1)/2} Gamma((p+1)/2) / (p Gamma((n+p)/2))`.
/// Accepts `p = 1` as well as `p > 1`.
pub fn k_constant(n: usize, p: f64) -> Result<SharpConstant> {
    if n == 0 {
        return Err(Error::param("dimension must be at least 1"));
    }
    if !(p >= 1.0 && p.is_finite()) {
        return Err(Error::param(format!("p = {p} must lie in [1, inf)")));
    }
    let nf = n as f64;
    let ln = std::f64::consts::LN_2 + 0.5 * (nf - 1.0) * PI.ln() + ln_gamma(0.5 * (p + 1.0))
        - p.ln()
        - ln_gamma(0.5 * (nf + p));
    Ok(SharpConstant { n, p, value: ln.exp() })
}

/// Monte Carlo `(1/p) |S^{n-1}| mean |sigma_n|^p` with uniform directions
/// (signs for `n = 1`, angles for `n = 2`, Archimedes' `z` for `n = 3`).
/// Returns value and standard error.
pub fn sphere_mc(n: usize, p: f64, samples: usize, stream: &RandomStream) -> Result<(f64, f64)> {
    if !(1..=3).contains(&n) {
        return Err(Error::param(format!("sphere sampling supports n in 1..=3, got {n}")));
    }
    if samples < 2 {
        return Err(Error::param("need at least two sphere samples"));
    }
    let mut s = stream.derive_named("sphere-mc");
    let (mut mean, mut m2) = (0.0, 0.0);
    for i in 0..samples {
        let last = match n {
            1 => 1.0,
            2 => (2.0 * PI * s.uniform()).sin(),
            _ => s.uniform_in(-1.0, 1.0),
        };
        let v = last.abs().powf(p);
        let delta = v - mean;
        mean += delta / (i + 1) as f64;
        m2 += delta * (v - mean);
    }
    let var = m2 / (samples - 1) as f64;
    let scale = sphere_area(n) / p;
    Ok((scale * mean, scale * (var / samples as f64).sqrt()))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn spot_values() {
        assert!((k_constant(1, 2.0).unwrap().value - 1.0).abs() < 1e-14);
        assert!((k_constant(2, 2.0).unwrap().value - PI / 2.0).abs() < 1e-14);
        assert!((k_constant(2, 1.0).unwrap().value - 4.0).abs() < 1e-13);
        assert!((k_constant(3, 2.0).unwrap().value - 2.0 * PI / 3.0).abs() < 1e-14);
        assert!((k_constant(1, 3.0).unwrap().value - 2.0 / 3.0).abs() < 1e-14);
    }

    #[test]
    fn rejects_bad_input() {
        assert!(k_constant(0, 2.0).is_err());
        assert!(k_constant(2, 0.5).is_err());
    }

    #[test]
    fn sphere_mc_close() {
        let (v, se) = sphere_mc(3, 2.0, 200_000, &RandomStream::new(5)).unwrap();
        assert!((v - 2.0 * PI / 3.0).abs() < 4.0 * se);
    }
}
