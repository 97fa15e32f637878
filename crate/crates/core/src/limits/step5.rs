use serde::Serialize;

use super::verdict::{Status, Verdict};
use crate::functions::{lp_norm, TestFunction};
use crate::geometry::{Domain, ExhaustionLevel, Region};
use crate::rng::RandomStream;
use crate::seminorm::{
    exhaustion_far_energy, exhaustion_near_energy, truncated_energy, Budgets, EnergyEstimate, SeminormParams,
};
use crate::Result;

/// Part II at one `s` with its a-priori bound.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct FarRow {
    pub s: f64,
    pub value: f64,
    pub stderr: f64,
    pub bound: f64,
}

/// Split of the energy over `Omega_j x Omega_j` into the cone part I and the
/// far part II.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Step5Report {
    pub s: f64,
    pub margin: f64,
    pub sub_measure: f64,
    pub near: EnergyEstimate,
    pub truncated: EnergyEstimate,
    /// `||f||_p^p` over the parent domain used in the bound.
    pub lp_norm: f64,
    pub lp_norm_stderr: f64,
    /// Monte Carlo `||f||_p^p` when `lp_norm` is a closed form.
    pub lp_norm_mc: Option<(f64, f64)>,
    pub far: Vec<FarRow>,
    /// `(1 - s) II` at the first mini-sweep point over the last one.
    pub decay_ratio: f64,
}

impl Step5Report {
    pub fn verdicts(&self) -> Vec<Verdict> {
        let mut out = Vec::new();
        let allowed = self.truncated.value + 3.0 * self.near.stderr.hypot(self.truncated.stderr);
        out.push(Verdict::new(
            "exhaustion-near-bound",
            status(self.near.value <= allowed),
            self.near.value,
            self.truncated.value,
            0.0,
            format!("I over Omega_j (margin {}) vs truncated energy over Omega at s = {}", self.margin, self.s),
        ));
        let worst = self
            .far
            .iter()
            .map(|r| (r.value - 3.0 * r.stderr) / r.bound)
            .fold(f64::NEG_INFINITY, f64::max);
        let row = self.far.iter().find(|r| r.s == self.s).unwrap_or(&self.far[0]);
        out.push(Verdict::new(
            "exhaustion-far-bound",
            status(self.far.iter().all(|r| r.value - 3.0 * r.stderr <= r.bound)),
            row.value,
            row.bound,
            0.0,
            format!("II <= 2^(p+1)|Omega_j| ||f||_p^p / (tau alpha_j)^(n+sp) on every s; worst ratio {worst:.3e}"),
        ));
        let first = self.far.first().map(|r| (1.0 - r.s) * r.value).unwrap_or(0.0);
        let last = self.far.last().map(|r| (1.0 - r.s) * r.value).unwrap_or(0.0);
        let decreasing = self
            .far
            .windows(2)
            .all(|w| (1.0 - w[1].s) * w[1].value <= (1.0 - w[0].s) * w[0].value + (w[0].stderr.hypot(w[1].stderr)));
        out.push(Verdict::new(
            "exhaustion-far-decay",
            status(decreasing && (first == 0.0 || self.decay_ratio >= 2.0)),
            last,
            first,
            2.0,
            format!("(1-s) II decays by {:.3}x across the mini-sweep", self.decay_ratio),
        ));
        if let Some((mc, se)) = self.lp_norm_mc {
            out.push(Verdict::new(
                "lp-norm-consistency",
                status((mc - self.lp_norm).abs() <= 3.0 * se + 1e-12 * self.lp_norm.abs()),
                mc,
                self.lp_norm,
                0.0,
                "Monte Carlo ||f||_p^p vs closed form",
            ));
        }
        out
    }
}

fn status(ok: bool) -> Status {
    if ok {
        Status::Pass
    } else {
        Status::Fail
    }
}

/// Computes I and the truncated energy at `params.s()`, and II on every `s`
/// of `mini_grid` (which should contain `params.s()`). All parts at one
/// `s` share the stream `RandomStream::new(seed).derive_named("step5")
/// .derive(i)`.
pub fn step5_decomposition(
    f: &TestFunction,
    dom: &Domain,
    level: ExhaustionLevel,
    params: &SeminormParams,
    budgets: &Budgets,
    seed: u64,
    mini_grid: &[f64],
) -> Result<Step5Report> {
    super::validate_grid(mini_grid)?;
    let sub = dom.exhaustion(level)?;
    let root = RandomStream::new(seed).derive_named("step5");
    let at_s = root.derive_named("at-s");
    let near = exhaustion_near_energy(f, &sub, params, budgets, &at_s)?;
    let truncated = truncated_energy(f, dom, params, budgets, &at_s)?;
    let p = params.p();
    let norm_budget = budgets.outer.max(1 << 12) * 16;
    let mc = lp_norm(f, dom, p, norm_budget, &root.derive_named("lp"))?;
    let (lp, lp_se, lp_mc) = match f.lp_norm_exact(dom, p) {
        Some(v) => (v, 0.0, Some(mc)),
        None => (mc.0, mc.1, None),
    };
    let n = dom.dim() as f64;
    let mut far = Vec::with_capacity(mini_grid.len());
    for (i, &s) in mini_grid.iter().enumerate() {
        let ps = params.with_s(s)?;
        let e = exhaustion_far_energy(f, &sub, &ps, budgets, &root.derive(i as u64))?;
        let bound = 2f64.powf(p + 1.0) * sub.measure() * (lp + 3.0 * lp_se)
            / (params.tau() * level.margin).powf(n + s * p);
        far.push(FarRow {
            s,
            value: e.value,
            stderr: e.stderr,
            bound,
        });
    }
    let first = (1.0 - far[0].s) * far[0].value;
    let last = (1.0 - far[far.len() - 1].s) * far[far.len() - 1].value;
    let decay_ratio = if last > 0.0 { first / last } else if first > 0.0 { f64::INFINITY } else { 1.0 };
    Ok(Step5Report {
        s: params.s(),
        margin: level.margin,
        sub_measure: sub.measure(),
        near,
        truncated,
        lp_norm: lp,
        lp_norm_stderr: lp_se,
        lp_norm_mc: lp_mc,
        far,
        decay_ratio,
    })
}
