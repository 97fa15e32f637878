use serde::{Deserialize, Serialize};

use super::{sweep, SweepResult, SweepSpec};
use crate::functions::TestFunction;
use crate::geometry::{Domain, Shape};
use crate::seminorm::{Budgets, EnergyKind};
use crate::{Error, Result};

/// `(1 - s) * classical` must end at least this many times above the target.
pub const DIVERGENCE_FACTOR: f64 = 10.0;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Status {
    Pass,
    Fail,
    Inconclusive,
}

impl Status {
    pub fn as_str(&self) -> &'static str {
        match self {
            Status::Pass => "pass",
            Status::Fail => "fail",
            Status::Inconclusive => "inconclusive",
        }
    }

    fn from_bool(ok: bool) -> Self {
        if ok {
            Status::Pass
        } else {
            Status::Fail
        }
    }
}

impl std::fmt::Display for Status {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Outcome of one numerical claim. `lhs` is the measured quantity, `rhs`
/// what it is compared against.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Verdict {
    pub claim: String,
    pub status: Status,
    pub lhs: f64,
    pub rhs: f64,
    pub discrepancy: f64,
    pub tolerance: f64,
    pub notes: String,
}

impl Verdict {
    pub fn new(claim: impl Into<String>, status: Status, lhs: f64, rhs: f64, tolerance: f64, notes: impl Into<String>) -> Self {
        Self {
            claim: claim.into(),
            status,
            lhs,
            rhs,
            discrepancy: (lhs - rhs).abs(),
            tolerance,
            notes: notes.into(),
        }
    }

    pub fn passed(&self) -> bool {
        self.status == Status::Pass
    }
}

pub fn theorem_verdict(sweep: &SweepResult, tolerance: f64) -> Result<Verdict> {
    theorem_verdict_scaled(sweep, tolerance, 1.0)
}

/// As [`theorem_verdict`] with the target multiplied by `target_factor`
/// (a negative control when the factor is not 1).
pub fn theorem_verdict_scaled(sweep: &SweepResult, tolerance: f64, target_factor: f64) -> Result<Verdict> {
    let lim = sweep
        .limit(EnergyKind::Truncated)
        .ok_or_else(|| Error::param("sweep has no extrapolated truncated energy"))?;
    let target = sweep
        .target
        .finite()
        .ok_or_else(|| Error::param("theorem verdict needs a finite ||grad f||_p"))?
        * target_factor;
    let sigma = lim.uncertainty.hypot(target_factor * sweep.target.stderr);
    let gap = (lim.value - target).abs();
    let allowed = tolerance * target.abs() + 3.0 * sigma;
    let mut notes = format!(
        "limit {:.6e} +- {:.2e}, target {:.6e} +- {:.2e}, allowed {:.3e}",
        lim.value,
        lim.uncertainty,
        target,
        target_factor * sweep.target.stderr,
        allowed
    );
    if target_factor != 1.0 {
        notes.push_str(&format!("; target scaled by {target_factor}"));
    }
    if lim.fit.residual_flag {
        notes.push_str("; fit residuals exceed 3x Monte Carlo error");
    }
    Ok(Verdict::new(
        "theorem-limit",
        Status::from_bool(gap <= allowed),
        lim.value,
        target,
        tolerance,
        notes,
    ))
}

/// Divergence of the classical energy on a cusp while the truncated energy
/// still satisfies the limit formula.
pub fn divergence_verdict(
    f: &TestFunction,
    dom: &Domain,
    p: f64,
    tau: f64,
    s_grid: &[f64],
    budgets: &Budgets,
    seed: u64,
    tolerance: f64,
) -> Result<Verdict> {
    if let Some(v) = divergence_precondition(f, dom, p) {
        return Ok(v);
    }
    let mut spec = SweepSpec::new(f, dom, p, tau);
    spec.s_grid = s_grid.to_vec();
    spec.kinds = vec![EnergyKind::Truncated, EnergyKind::Classical];
    spec.budgets = *budgets;
    spec.seed = seed;
    spec.tail = spec.tail.min(s_grid.len());
    let result = sweep(&spec)?;
    divergence_verdict_from_sweep(&result, tolerance)
}

/// Inconclusive verdict when the domain is not a cusp or `f` is not in
/// `W^{1,p}`.
pub fn divergence_precondition(f: &TestFunction, dom: &Domain, p: f64) -> Option<Verdict> {
    let reason = if !matches!(dom.shape(), Shape::Cusp(_)) {
        format!("precondition unmet: {} domain is not a cusp", dom.shape().name())
    } else if !f.regularity(dom, p).in_w1p {
        "precondition unmet: f is not in W^{1,p}".to_string()
    } else {
        return None;
    };
    Some(Verdict::new("divergence", Status::Inconclusive, f64::NAN, f64::NAN, DIVERGENCE_FACTOR, reason))
}

/// Pass iff `(1 - s) * classical` increases along the tail and its last value
/// exceeds [`DIVERGENCE_FACTOR`] times the target, with the truncated
/// theorem verdict passing on the same run. No divergence is reported as
/// inconclusive, a failing truncated verdict as fail.
pub fn divergence_verdict_from_sweep(sweep: &SweepResult, tolerance: f64) -> Result<Verdict> {
    let classical = sweep.curve(EnergyKind::Classical);
    if classical.is_empty() {
        return Err(Error::param("sweep has no classical energy"));
    }
    let theorem = theorem_verdict(sweep, tolerance)?;
    let target = theorem.rhs;
    let tail_len = sweep.limit(EnergyKind::Truncated).map_or(classical.len(), |l| l.tail_points);
    let tail = &classical[classical.len() - tail_len.min(classical.len())..];
    let increasing = tail.windows(2).all(|w| w[1].value > w[0].value);
    let last = tail.last().map_or(0.0, |c| c.value);
    let threshold = DIVERGENCE_FACTOR * target;
    let diverges = increasing && last >= threshold && last > 0.0;
    let notes = format!(
        "(1-s) classical over tail: [{}]; increasing: {increasing}; truncated verdict: {} ({})",
        tail.iter().map(|c| format!("{:.4e}", c.value)).collect::<Vec<_>>().join(", "),
        theorem.status,
        theorem.notes
    );
    let status = if !theorem.passed() {
        Status::Fail
    } else if diverges {
        Status::Pass
    } else {
        Status::Inconclusive
    };
    Ok(Verdict::new("divergence", status, last, threshold, DIVERGENCE_FACTOR, notes))
}

/// Pass iff `(1 - s) * far_part` decreases along the tail, each step allowed
/// to rise by at most its combined one-sigma error.
pub fn farpart_decay_verdict(
    f: &TestFunction,
    dom: &Domain,
    p: f64,
    tau: f64,
    s_grid: &[f64],
    budgets: &Budgets,
    seed: u64,
) -> Result<Verdict> {
    let mut spec = SweepSpec::new(f, dom, p, tau);
    spec.s_grid = s_grid.to_vec();
    spec.kinds = vec![EnergyKind::FarPart];
    spec.budgets = *budgets;
    spec.seed = seed;
    spec.tail = spec.tail.min(s_grid.len());
    let result = sweep(&spec)?;
    farpart_decay_from_sweep(&result)
}

pub fn farpart_decay_from_sweep(sweep: &SweepResult) -> Result<Verdict> {
    let curve = sweep.curve(EnergyKind::FarPart);
    let tail_len = sweep
        .limit(EnergyKind::FarPart)
        .map(|l| l.tail_points)
        .ok_or_else(|| Error::param("sweep has no far-part energy"))?;
    let tail = &curve[curve.len() - tail_len..];
    let mut worst = f64::NEG_INFINITY;
    for w in tail.windows(2) {
        let rise = w[1].value - w[0].value - w[0].stderr.hypot(w[1].stderr);
        worst = worst.max(rise);
    }
    let first = tail[0].value;
    let last = tail[tail.len() - 1].value;
    let notes = format!(
        "(1-s) far over tail: [{}]",
        tail.iter().map(|c| format!("{:.4e}", c.value)).collect::<Vec<_>>().join(", ")
    );
    Ok(Verdict::new("far-part-decay", Status::from_bool(worst <= 0.0), last, first, 1.0, notes))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn precondition_on_disk_is_inconclusive() {
        let dom = Domain::unit_disk();
        let v = divergence_verdict(&TestFunction::trig(), &dom, 2.0, 0.5, &[0.9, 0.95, 0.99], &Budgets::new(16, 4, 64), 1, 0.05)
            .unwrap();
        assert_eq!(v.status, Status::Inconclusive);
    }

    #[test]
    fn constant_on_cusp_is_inconclusive() {
        let dom = Domain::cusp(2.0).unwrap();
        let v = divergence_verdict(
            &TestFunction::Constant { value: 1.0 },
            &dom,
            2.0,
            0.5,
            &[0.9, 0.95, 0.99],
            &Budgets::new(256, 8, 1024),
            1,
            0.05,
        )
        .unwrap();
        assert_eq!(v.status, Status::Inconclusive);
    }

    #[test]
    fn status_json() {
        assert_eq!(serde_json::to_string(&Status::Inconclusive).unwrap(), "\"inconclusive\"");
    }
}
