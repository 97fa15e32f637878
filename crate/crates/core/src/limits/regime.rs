use serde::Serialize;

use super::verdict::{divergence_verdict, Status, Verdict};
use crate::functions::TestFunction;
use crate::geometry::Domain;
use crate::seminorm::Budgets;
use crate::Result;

/// Coarse grid over cusp exponent, power exponent and `p`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RegimeGrid {
    pub gammas: Vec<f64>,
    pub betas: Vec<f64>,
    pub ps: Vec<f64>,
    pub tau: f64,
    pub s_grid: Vec<f64>,
    pub budgets: Budgets,
    pub seed: u64,
    pub tolerance: f64,
}

impl Default for RegimeGrid {
    fn default() -> Self {
        Self {
            gammas: vec![1.25, 1.5, 2.0, 3.0, 4.0, 6.0],
            betas: vec![0.05, 0.1, 0.25, 0.5, 1.0, 2.0],
            ps: vec![1.5, 2.0, 3.0],
            tau: 0.5,
            s_grid: vec![0.90, 0.95, 0.98, 0.99],
            budgets: Budgets::new(1 << 11, 1 << 6, 1 << 17),
            seed: 0x5eed,
            tolerance: 0.05,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RegimeCandidate {
    pub gamma: f64,
    pub beta: f64,
    pub p: f64,
    pub in_w1p: bool,
    /// `None` when the combination is outside `W^{1,p}` and was skipped.
    pub verdict: Option<Verdict>,
    /// Last tail value of `(1 - s) * classical` over the target.
    pub ratio: f64,
}

/// Runs [`divergence_verdict`] on every `W^{1,p}` combination of the grid.
/// A combination whose estimators fail is recorded as inconclusive.
pub fn regime_sweep(grid: &RegimeGrid) -> Result<Vec<RegimeCandidate>> {
    let mut out = Vec::new();
    for &gamma in &grid.gammas {
        let dom = Domain::cusp(gamma)?;
        for &beta in &grid.betas {
            let f = TestFunction::power(beta);
            for &p in &grid.ps {
                let in_w1p = f.regularity(&dom, p).in_w1p;
                if !in_w1p {
                    out.push(RegimeCandidate {
                        gamma,
                        beta,
                        p,
                        in_w1p,
                        verdict: None,
                        ratio: f64::NAN,
                    });
                    continue;
                }
                let verdict = match divergence_verdict(
                    &f,
                    &dom,
                    p,
                    grid.tau,
                    &grid.s_grid,
                    &grid.budgets,
                    grid.seed,
                    grid.tolerance,
                ) {
                    Ok(v) => v,
                    Err(e) => Verdict::new(
                        "divergence",
                        Status::Inconclusive,
                        f64::NAN,
                        f64::NAN,
                        super::DIVERGENCE_FACTOR,
                        format!("estimator failed: {e}"),
                    ),
                };
                let ratio = verdict.lhs / (verdict.rhs / super::DIVERGENCE_FACTOR);
                log::info!(
                    "regime gamma = {gamma}, beta = {beta}, p = {p}: {} (ratio {ratio:.3})",
                    verdict.status
                );
                out.push(RegimeCandidate {
                    gamma,
                    beta,
                    p,
                    in_w1p,
                    verdict: Some(verdict),
                    ratio,
                });
            }
        }
    }
    Ok(out)
}

/// First passing candidate, else the one with the largest ratio.
pub fn select_regime(candidates: &[RegimeCandidate]) -> Option<&RegimeCandidate> {
    candidates
        .iter()
        .find(|c| c.verdict.as_ref().is_some_and(|v| v.passed()))
        .or_else(|| {
            candidates
                .iter()
                .filter(|c| c.verdict.is_some() && c.ratio.is_finite())
                .max_by(|a, b| a.ratio.total_cmp(&b.ratio))
        })
}
