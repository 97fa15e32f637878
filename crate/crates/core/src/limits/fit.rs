use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Model for `(1 - s) E(s)` as a polynomial in `t = 1 - s`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum FitModel {
    #[default]
    Affine,
    Quadratic,
}

impl FitModel {
    pub fn terms(&self) -> usize {
        match self {
            FitModel::Affine => 2,
            FitModel::Quadratic => 3,
        }
    }
}

/// Least-squares intercept with its two error sources.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TailFit {
    pub intercept: f64,
    pub slope: f64,
    /// Propagated Monte Carlo error of the intercept.
    pub mc_error: f64,
    /// Intercept error implied by the fit residuals.
    pub fit_error: f64,
    pub residual_rms: f64,
    /// Set when the residuals exceed three times the Monte Carlo errors.
    pub residual_flag: bool,
}

impl TailFit {
    pub fn uncertainty(&self) -> f64 {
        self.mc_error.hypot(self.fit_error)
    }
}

/// Unweighted least squares of `y ~ sum_k c_k t^k`; the intercept is the
/// extrapolated value at `t = 0`.
pub fn fit_tail(t: &[f64], y: &[f64], sigma: &[f64], model: FitModel) -> Result<TailFit> {
    let m = t.len();
    let k = model.terms();
    if y.len() != m || sigma.len() != m {
        return Err(Error::param("fit inputs differ in length"));
    }
    if m < k.max(3) {
        return Err(Error::param(format!("fit needs at least {} points, got {m}", k.max(3))));
    }
    let x = DMatrix::from_fn(m, k, |i, j| t[i].powi(j as i32));
    let pinv = x
        .clone()
        .pseudo_inverse(1e-14)
        .map_err(|e| Error::param(format!("degenerate fit design: {e}")))?;
    let yv = DVector::from_column_slice(y);
    let coef = &pinv * &yv;
    let resid = &yv - &x * &coef;
    let rss = resid.norm_squared();
    let weights = pinv.row(0);
    let mc_error = weights.iter().zip(sigma).map(|(w, s)| (w * s).powi(2)).sum::<f64>().sqrt();
    let w_norm = weights.iter().map(|w| w * w).sum::<f64>().sqrt();
    let dof = m - k;
    let fit_error = if dof > 0 { (rss / dof as f64).sqrt() * w_norm } else { 0.0 };
    let residual_rms = (rss / m as f64).sqrt();
    let sigma_rms = (sigma.iter().map(|s| s * s).sum::<f64>() / m as f64).sqrt();
    Ok(TailFit {
        intercept: coef[0],
        slope: coef[1],
        mc_error,
        fit_error,
        residual_rms,
        residual_flag: residual_rms > 3.0 * sigma_rms,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exact_affine_data() {
        let t = [0.06, 0.04, 0.02, 0.01];
        let y: Vec<f64> = t.iter().map(|t| 1.25 - 3.0 * t).collect();
        let f = fit_tail(&t, &y, &[0.0; 4], FitModel::Affine).unwrap();
        assert!((f.intercept - 1.25).abs() < 1e-12 * 1.25);
        assert!((f.slope + 3.0).abs() < 1e-10);
        assert!(f.fit_error < 1e-12);
    }

    #[test]
    fn exact_quadratic_data() {
        let t = [0.1, 0.08, 0.06, 0.04, 0.02, 0.01];
        let y: Vec<f64> = t.iter().map(|t| 0.5 + t + 4.0 * t * t).collect();
        let f = fit_tail(&t, &y, &[0.0; 6], FitModel::Quadratic).unwrap();
        assert!((f.intercept - 0.5).abs() < 1e-12);
    }

    #[test]
    fn too_few_points() {
        assert!(fit_tail(&[0.1, 0.05], &[1.0, 1.0], &[0.0, 0.0], FitModel::Affine).is_err());
    }
}
