//! The `s -> 1` sweep: `(1 - s) * energy` on a grid of `s`, an affine tail
//! extrapolation, and comparison with `K_{n,p} ||grad f||_p^p`.

mod fit;
mod regime;
mod step5;
mod verdict;

use serde::{Deserialize, Serialize};

use crate::functions::{gradient_p_norm, ExtendedReal, TestFunction};
use crate::geometry::Domain;
use crate::rng::RandomStream;
use crate::seminorm::{energy, k_constant, Budgets, EnergyEstimate, EnergyKind, SeminormParams};
use crate::{Error, Result};

pub use fit::{fit_tail, FitModel, TailFit};
pub use regime::{regime_sweep, select_regime, RegimeCandidate, RegimeGrid};
pub use step5::{step5_decomposition, FarRow, Step5Report};
pub use verdict::{
    divergence_precondition, divergence_verdict, divergence_verdict_from_sweep, farpart_decay_verdict, farpart_decay_from_sweep,
    theorem_verdict, theorem_verdict_scaled, Status, Verdict, DIVERGENCE_FACTOR,
};

pub const DEFAULT_S_GRID: [f64; 6] = [0.90, 0.92, 0.94, 0.96, 0.98, 0.99];
pub const DEFAULT_TAIL: usize = 4;
pub const MAX_GRID_S: f64 = 0.999;
/// Samples for a Monte Carlo target when no closed form is known.
pub const TARGET_BUDGET: usize = 1 << 20;

/// Everything that defines one sweep.
#[derive(Clone, Debug)]
pub struct SweepSpec<'a> {
    pub function: &'a TestFunction,
    pub domain: &'a Domain,
    pub p: f64,
    pub tau: f64,
    pub s_grid: Vec<f64>,
    pub kinds: Vec<EnergyKind>,
    pub budgets: Budgets,
    pub seed: u64,
    pub fit: FitModel,
    pub tail: usize,
    pub target_budget: usize,
}

impl<'a> SweepSpec<'a> {
    /// Default grid, truncated energy, default budgets, seed 0.
    pub fn new(function: &'a TestFunction, domain: &'a Domain, p: f64, tau: f64) -> Self {
        Self {
            function,
            domain,
            p,
            tau,
            s_grid: DEFAULT_S_GRID.to_vec(),
            kinds: vec![EnergyKind::Truncated],
            budgets: Budgets::default(),
            seed: 0,
            fit: FitModel::Affine,
            tail: DEFAULT_TAIL,
            target_budget: TARGET_BUDGET,
        }
    }

    pub fn validate(&self) -> Result<()> {
        validate_grid(&self.s_grid)?;
        if self.kinds.is_empty() {
            return Err(Error::param("at least one energy kind is required"));
        }
        if self.kinds.contains(&EnergyKind::Local) {
            return Err(Error::param("the local energy cannot be swept"));
        }
        for (i, k) in self.kinds.iter().enumerate() {
            if self.kinds[..i].contains(k) {
                return Err(Error::param(format!("energy kind {k} listed twice")));
            }
        }
        if self.tail < 3 || self.tail > self.s_grid.len() {
            return Err(Error::param(format!(
                "tail of {} points needs 3 <= tail <= {} (grid size)",
                self.tail,
                self.s_grid.len()
            )));
        }
        if self.tail < self.fit.terms() + 1 {
            return Err(Error::param("tail too short for the fit model"));
        }
        for &s in &self.s_grid {
            SeminormParams::new(s, self.p, self.tau)?;
        }
        self.budgets.validate()?;
        if self.kinds.iter().any(|k| matches!(k, EnergyKind::Geodesic | EnergyKind::FarPart))
            && !self.domain.supports_geodesic()
        {
            return Err(Error::Unsupported(format!(
                "geodesic energies on a {} domain",
                self.domain.shape().name()
            )));
        }
        self.function.validate_for(self.domain)?;
        Ok(())
    }
}

pub fn validate_grid(s_grid: &[f64]) -> Result<()> {
    if s_grid.is_empty() {
        return Err(Error::param("empty s-grid"));
    }
    for w in s_grid.windows(2) {
        if !(w[1] > w[0]) {
            return Err(Error::param(format!("s-grid must increase strictly ({} then {})", w[0], w[1])));
        }
    }
    for &s in s_grid {
        if !(s > 0.0 && s <= MAX_GRID_S) {
            return Err(Error::param(format!("s = {s} outside (0, {MAX_GRID_S}]")));
        }
    }
    Ok(())
}

/// `K_{n,p} ||grad f||_p^p`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Target {
    pub value: ExtendedReal,
    pub stderr: f64,
    pub k: f64,
    /// Whether `||grad f||_p^p` came from a closed form.
    pub exact: bool,
}

impl Target {
    pub fn compute(f: &TestFunction, dom: &Domain, p: f64, budget: usize, stream: &RandomStream) -> Result<Self> {
        let k = k_constant(dom.dim(), p)?.value;
        if let Some(g) = f.gradient_p_norm_exact(dom, p) {
            return Ok(Self {
                value: scale(g, k),
                stderr: 0.0,
                k,
                exact: true,
            });
        }
        let g = gradient_p_norm(f, dom, p, budget, &stream.derive_named("target"))?;
        Ok(Self {
            value: scale(g.value, k),
            stderr: k * g.stderr,
            k,
            exact: false,
        })
    }

    pub fn finite(&self) -> Option<f64> {
        self.value.finite()
    }
}

fn scale(v: ExtendedReal, k: f64) -> ExtendedReal {
    match v {
        ExtendedReal::Finite(x) => ExtendedReal::Finite(k * x),
        ExtendedReal::Infinite => ExtendedReal::Infinite,
    }
}

/// Estimates at one grid point, in the order of the requested kinds.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepPoint {
    pub s: f64,
    pub estimates: Vec<EnergyEstimate>,
}

/// Extrapolated limit of `(1 - s) E(s)` for one kind.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Extrapolation {
    pub kind: EnergyKind,
    pub value: f64,
    pub uncertainty: f64,
    pub model: FitModel,
    pub tail_points: usize,
    pub fit: TailFit,
    /// Minimum of `(1 - s) E(s)` over the tail.
    pub liminf: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepResult {
    pub p: f64,
    pub tau: f64,
    pub dim: usize,
    pub s_grid: Vec<f64>,
    pub kinds: Vec<EnergyKind>,
    pub points: Vec<SweepPoint>,
    pub target: Target,
    pub limits: Vec<Extrapolation>,
}

/// One entry of a `(1 - s) E(s)` curve.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CurvePoint {
    pub s: f64,
    pub value: f64,
    pub stderr: f64,
}

impl SweepResult {
    pub fn estimate(&self, index: usize, kind: EnergyKind) -> Option<&EnergyEstimate> {
        self.points.get(index)?.estimates.iter().find(|e| e.kind == kind)
    }

    pub fn curve(&self, kind: EnergyKind) -> Vec<CurvePoint> {
        self.points
            .iter()
            .filter_map(|pt| {
                let e = pt.estimates.iter().find(|e| e.kind == kind)?;
                Some(CurvePoint {
                    s: pt.s,
                    value: (1.0 - pt.s) * e.value,
                    stderr: (1.0 - pt.s) * e.stderr,
                })
            })
            .collect()
    }

    pub fn limit(&self, kind: EnergyKind) -> Option<&Extrapolation> {
        self.limits.iter().find(|l| l.kind == kind)
    }

    pub fn is_complete(&self) -> bool {
        self.points.len() == self.s_grid.len()
    }
}

pub fn extrapolate(curve: &[CurvePoint], kind: EnergyKind, tail: usize, model: FitModel) -> Result<Extrapolation> {
    if curve.len() < tail {
        return Err(Error::param(format!("curve has {} points, tail needs {tail}", curve.len())));
    }
    let tail_pts = &curve[curve.len() - tail..];
    let t: Vec<f64> = tail_pts.iter().map(|c| 1.0 - c.s).collect();
    let y: Vec<f64> = tail_pts.iter().map(|c| c.value).collect();
    let sig: Vec<f64> = tail_pts.iter().map(|c| c.stderr).collect();
    let fit = fit_tail(&t, &y, &sig, model)?;
    Ok(Extrapolation {
        kind,
        value: fit.intercept,
        uncertainty: fit.uncertainty(),
        model,
        tail_points: tail,
        fit,
        liminf: y.iter().copied().fold(f64::INFINITY, f64::min),
    })
}

/// Runs every requested energy at every `s`. Grid point `i` draws from
/// `RandomStream::new(seed).derive(i)`; all kinds at one point share that
/// stream, so a classical estimate contains the truncated estimate of the
/// same point as its near part. A failure at any point aborts with the
/// completed points attached.
pub fn sweep(spec: &SweepSpec<'_>) -> Result<SweepResult> {
    spec.validate()?;
    let root = RandomStream::new(spec.seed);
    let target = Target::compute(spec.function, spec.domain, spec.p, spec.target_budget, &root)?;
    let mut result = SweepResult {
        p: spec.p,
        tau: spec.tau,
        dim: spec.domain.dim(),
        s_grid: spec.s_grid.clone(),
        kinds: spec.kinds.clone(),
        points: Vec::with_capacity(spec.s_grid.len()),
        target,
        limits: Vec::new(),
    };
    for (i, &s) in spec.s_grid.iter().enumerate() {
        let params = SeminormParams::new(s, spec.p, spec.tau)?;
        let stream = root.derive(i as u64);
        let mut estimates = Vec::with_capacity(spec.kinds.len());
        for &kind in &spec.kinds {
            match energy(kind, spec.function, spec.domain, &params, &spec.budgets, &stream) {
                Ok(e) => {
                    log::info!(
                        "s = {s}: {kind} = {:.6e} +- {:.2e}, (1-s) E = {:.6e}",
                        e.value,
                        e.stderr,
                        (1.0 - s) * e.value
                    );
                    estimates.push(e);
                }
                Err(source) => {
                    log::error!("s = {s}: {kind} failed: {source}");
                    return Err(Error::SweepAborted {
                        s,
                        partial: Box::new(result),
                        source: Box::new(source),
                    });
                }
            }
        }
        result.points.push(SweepPoint { s, estimates });
    }
    for &kind in &spec.kinds {
        let lim = extrapolate(&result.curve(kind), kind, spec.tail, spec.fit)?;
        if lim.fit.residual_flag {
            log::info!("{kind}: fit residuals exceed 3x the Monte Carlo errors");
        }
        result.limits.push(lim);
    }
    Ok(result)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grid_validation() {
        assert!(validate_grid(&[0.9, 0.95, 0.99]).is_ok());
        assert!(validate_grid(&[0.9, 0.9]).is_err());
        assert!(validate_grid(&[0.9, 0.9995]).is_err());
        assert!(validate_grid(&[]).is_err());
    }

    #[test]
    fn constant_sweep_is_zero() {
        let f = TestFunction::Constant { value: 1.0 };
        let dom = Domain::unit_square();
        let mut spec = SweepSpec::new(&f, &dom, 2.0, 0.5);
        spec.budgets = Budgets::new(256, 8, 1024);
        spec.kinds = vec![EnergyKind::Truncated, EnergyKind::Classical];
        let r = sweep(&spec).unwrap();
        assert!(r.points.iter().all(|p| p.estimates.iter().all(|e| e.value == 0.0)));
        assert_eq!(r.limit(EnergyKind::Truncated).unwrap().value, 0.0);
        assert_eq!(r.target.finite(), Some(0.0));
    }

    #[test]
    fn geodesic_kinds_need_a_capable_domain() {
        let f = TestFunction::trig();
        let dom = Domain::cusp(2.0).unwrap();
        let mut spec = SweepSpec::new(&f, &dom, 2.0, 0.5);
        spec.kinds = vec![EnergyKind::Geodesic];
        assert!(matches!(sweep(&spec), Err(Error::Unsupported(_))));
    }

    #[test]
    fn runtime_failure_aborts_with_partial_result() {
        // A sliver whose area is far below 1e-4 of its bounding box.
        let f = TestFunction::linear(&[1.0, 0.0], 0.0);
        let dom = Domain::polygon(&[[0.0, 0.0], [1.0, 1.0], [1.0 - 1e-6, 1.0]]).unwrap();
        let mut spec = SweepSpec::new(&f, &dom, 2.0, 0.5);
        spec.budgets = Budgets::new(16, 4, 64);
        match sweep(&spec) {
            Err(Error::SweepAborted { s, partial, .. }) => {
                assert_eq!(s, 0.90);
                assert!(partial.points.is_empty());
                let want = std::f64::consts::FRAC_PI_2 * dom.measure();
                assert!((partial.target.finite().unwrap() - want).abs() < 1e-12 * want);
            }
            other => panic!("expected abort, got {other:?}"),
        }
    }
}
