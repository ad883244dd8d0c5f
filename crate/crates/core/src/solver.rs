//! Sequential linear programming on the unit sphere.
//!
//! Each step minimizes the linearization of the concave truncated functional
//! `Ẽ^{order,τ}` over the unit ball; the minimizer is the normalized negative
//! gradient, e.g. for order 1
//!
//! ```text
//! φⁿ⁺¹ ∝ (1/τ)e^{τΔ}φⁿ - 2Vφⁿ - (β/2)f̃(φⁿ) + 2κφⁿ
//! ```
//!
//! [`run_fixed`] iterates at one `τ` until `‖φⁿ⁺¹ - φⁿ‖_∞/τ ≤ tol`;
//! [`run_adaptive`] warm-starts a decreasing sequence `τ₀, τ₀/r, ...` down to `τ_f`.

use std::sync::Arc;
use std::time::Instant;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::functionals::{
    check_tau, compute_kappa, original_from_spectrum, trunc_quartic_grad, truncated_from_spectrum,
    truncation_bound, KappaRule, Order, ProblemSpec, TruncationBound,
};
use crate::grid::{norms, Spectrum, WaveField};

/// Unit-norm tolerance required of every step input.
pub const NORM_TOLERANCE: f64 = 1e-8;
/// Initial data within this distance of unit norm is silently rescaled.
pub const INITIAL_NORM_SLACK: f64 = 1e-6;
/// A pre-normalization vector this small relative to the operator scale aborts the step.
const DEGENERATE_RELATIVE: f64 = 1e-12;

/// Relaxation parameter schedule.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum TauSchedule {
    Fixed(f64),
    /// `τ₀, τ₀/r, τ₀/r², ...` while `τ ≥ τ_f`.
    Adaptive { tau0: f64, tauf: f64, ratio: f64 },
}

#[derive(Clone, Debug, PartialEq)]
pub struct SolverConfig {
    pub order: Order,
    pub schedule: TauSchedule,
    pub tol: f64,
    pub n_max: usize,
    pub kappa_rule: KappaRule,
}

impl SolverConfig {
    /// Fixed-`τ` run with `tol = 1e-12`, `N_max = 80000` and the adaptive `κⁿ` rule.
    pub fn fixed(order: Order, tau: f64) -> Self {
        SolverConfig {
            order,
            schedule: TauSchedule::Fixed(tau),
            tol: 1e-12,
            n_max: 80_000,
            kappa_rule: KappaRule::Adaptive,
        }
    }

    pub fn adaptive(order: Order, tau0: f64, tauf: f64, ratio: f64) -> Self {
        SolverConfig {
            schedule: TauSchedule::Adaptive { tau0, tauf, ratio },
            ..SolverConfig::fixed(order, tau0)
        }
    }

    pub fn with_tol(mut self, tol: f64) -> Self {
        self.tol = tol;
        self
    }

    pub fn with_n_max(mut self, n_max: usize) -> Self {
        self.n_max = n_max;
        self
    }

    pub fn with_kappa(mut self, rule: KappaRule) -> Self {
        self.kappa_rule = rule;
        self
    }

    pub fn validate(&self) -> Result<()> {
        match self.schedule {
            TauSchedule::Fixed(tau) => check_tau(tau)?,
            TauSchedule::Adaptive { tau0, tauf, ratio } => {
                check_tau(tau0)?;
                check_tau(tauf)?;
                if tau0 < tauf {
                    return Err(Error::argument(format!("tau0 = {tau0} is below tauf = {tauf}")));
                }
                if !(ratio > 1.0 && ratio.is_finite()) {
                    return Err(Error::argument(format!("reduction ratio must exceed 1, got {ratio}")));
                }
            }
        }
        if !(self.tol > 0.0) {
            return Err(Error::argument(format!("tol must be positive, got {}", self.tol)));
        }
        if self.n_max == 0 {
            return Err(Error::argument("n_max must be at least 1"));
        }
        if let KappaRule::Fixed(k) = self.kappa_rule {
            if !(k >= 0.0 && k.is_finite()) {
                return Err(Error::argument(format!("fixed kappa must be non-negative, got {k}")));
            }
        }
        Ok(())
    }

    /// The `τ` of every stage, coarsest first.
    pub fn stage_taus(&self) -> Vec<f64> {
        match self.schedule {
            TauSchedule::Fixed(tau) => vec![tau],
            TauSchedule::Adaptive { tau0, tauf, ratio } => {
                // floor(log_r(τ₀/τ_f)) with slack so τ₀ = 10⁻¹, τ_f = 10⁻⁶, r = 10 gives 5.
                let extra = ((tau0 / tauf).ln() / ratio.ln() + 1e-9).floor().max(0.0) as i32;
                (0..=extra).map(|k| tau0 / ratio.powi(k)).collect()
            }
        }
    }

    /// Smallest `τ` the schedule reaches.
    pub fn final_tau(&self) -> f64 {
        *self.stage_taus().last().expect("schedule has at least one stage")
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum RunStatus {
    Converged,
    MaxIterations,
}

/// One SLP step.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct IterationRecord {
    /// Global index of the produced iterate, starting at 1.
    pub iter: usize,
    pub tau: f64,
    pub kappa: f64,
    /// Truncated relaxed energy of the new iterate.
    pub relaxed_energy: f64,
    /// Original (unrelaxed) energy of the new iterate.
    pub original_energy: f64,
    /// `‖φⁿ⁺¹ - φⁿ‖_∞ / τ`.
    pub residual: f64,
    pub wall_ns: u64,
    pub stage: usize,
}

/// Where a `τ` stage starts and how it ended.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct StageMark {
    pub stage: usize,
    pub tau: f64,
    /// `iter` of the first record produced in this stage.
    pub first_iter: usize,
    /// Energies of the stage's initial condition (before any step).
    pub initial_relaxed: f64,
    pub initial_original: f64,
    pub status: RunStatus,
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct IterationTrace {
    pub records: Vec<IterationRecord>,
    pub stages: Vec<StageMark>,
    /// Status of the last stage; `None` while running or for traces read from CSV.
    pub status: Option<RunStatus>,
    /// Amplitude bound used by the truncation, when one applies.
    pub truncation_bound: Option<f64>,
}

impl IterationTrace {
    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn converged(&self) -> bool {
        self.status == Some(RunStatus::Converged)
    }

    pub fn last(&self) -> Option<&IterationRecord> {
        self.records.last()
    }
}

/// `‖f_new - f_old‖_∞ / τ`.
pub fn residual(f_new: &WaveField, f_old: &WaveField, tau: f64) -> Result<f64> {
    f_new.ensure_same_grid(f_old)?;
    check_tau(tau)?;
    let diff = f_new
        .values()
        .iter()
        .zip(f_old.values())
        .map(|(a, b)| (a - b).norm())
        .fold(0.0, f64::max);
    Ok(diff / tau)
}

/// One SLP update; `f` must have unit norm.
pub fn slp_step(
    f: &WaveField,
    p: &ProblemSpec,
    tau: f64,
    kappa: f64,
    m: TruncationBound,
    order: Order,
) -> Result<WaveField> {
    check_tau(tau)?;
    check_unit_norm(f)?;
    if p.omega() != 0.0 {
        return Err(Error::argument("slp_step is non-rotating; use rotating::rot_slp_step"));
    }
    if **f.grid() != **p.grid() {
        return Err(Error::GridMismatch("field and problem grids differ".into()));
    }
    step_from_spectrum(f, &Spectrum::of(f), p, tau, kappa, m, order)
}

pub(crate) fn check_unit_norm(f: &WaveField) -> Result<()> {
    let l2 = norms(f).l2;
    if (l2 - 1.0).abs() > NORM_TOLERANCE {
        return Err(Error::argument(format!("step input must have unit L2 norm, got {l2}")));
    }
    Ok(())
}

fn step_from_spectrum(
    f: &WaveField,
    spectrum: &Spectrum,
    p: &ProblemSpec,
    tau: f64,
    kappa: f64,
    m: TruncationBound,
    order: Order,
) -> Result<WaveField> {
    let diffused = match order {
        Order::First => spectrum.synthesize(|k2| (-tau * k2).exp() / tau),
        Order::Second => spectrum.synthesize(|k2| {
            let half = (-0.5 * tau * k2).exp();
            (4.0 * half - half * half) / tau
        }),
    };
    let beta = p.beta();
    let values: Vec<Complex64> = diffused
        .values()
        .iter()
        .zip(f.values())
        .zip(p.potential())
        .map(|((&d, &z), &v)| d - z * (2.0 * v) - trunc_quartic_grad(z, m) * (0.5 * beta) + z * (2.0 * kappa))
        .collect();
    normalize_update(f.grid(), values, operator_scale(p, tau, kappa))
}

/// Rough size of the update operator on unit fields: `3/τ + 2‖V‖_∞ + 2|κ|`.
pub(crate) fn operator_scale(p: &ProblemSpec, tau: f64, kappa: f64) -> f64 {
    3.0 / tau + 2.0 * (p.potential_max() + kappa.abs())
}

/// Normalizes an unnormalized SLP update, refusing degenerate or non-finite ones.
pub(crate) fn normalize_update(
    grid: &Arc<crate::grid::SpectralGrid>,
    values: Vec<Complex64>,
    scale: f64,
) -> Result<WaveField> {
    let raw = WaveField::from_parts(grid.clone(), values);
    let l2 = norms(&raw).l2;
    if !l2.is_finite() {
        return Err(Error::solver("update is not finite"));
    }
    if l2 <= DEGENERATE_RELATIVE * scale {
        return Err(Error::solver(format!(
            "degenerate update (norm {l2:e}); kappa is likely misconfigured"
        )));
    }
    Ok(raw.scaled(Complex64::new(1.0 / l2, 0.0)))
}

/// The per-run pieces a driver needs: κ, one step, and the traced energies.
pub(crate) trait Scheme {
    fn kappa(&self, f: &WaveField) -> f64;
    fn step(&mut self, f: &WaveField, tau: f64, kappa: f64) -> Result<WaveField>;
    /// `(relaxed, original)` energies of `f`.
    fn energies(&mut self, f: &WaveField, tau: f64, kappa: f64) -> (f64, f64);
    fn truncation_bound(&self) -> Option<f64>;
}

/// Non-rotating scheme; caches the spectrum of the last field whose energies
/// were evaluated, since that field is the next step's input.
struct PlainScheme<'a> {
    problem: &'a ProblemSpec,
    bound: TruncationBound,
    order: Order,
    kappa_rule: KappaRule,
    cache: Option<(Vec<Complex64>, Spectrum)>,
}

impl PlainScheme<'_> {
    fn spectrum(&mut self, f: &WaveField) -> Spectrum {
        match &self.cache {
            Some((values, spectrum)) if values.as_slice() == f.values() => spectrum.clone(),
            _ => {
                let spectrum = Spectrum::of(f);
                self.cache = Some((f.values().to_vec(), spectrum.clone()));
                spectrum
            }
        }
    }
}

impl Scheme for PlainScheme<'_> {
    fn kappa(&self, f: &WaveField) -> f64 {
        compute_kappa(f, self.problem, self.kappa_rule)
    }

    fn step(&mut self, f: &WaveField, tau: f64, kappa: f64) -> Result<WaveField> {
        let spectrum = self.spectrum(f);
        step_from_spectrum(f, &spectrum, self.problem, tau, kappa, self.bound, self.order)
    }

    fn energies(&mut self, f: &WaveField, tau: f64, kappa: f64) -> (f64, f64) {
        let spectrum = self.spectrum(f);
        let relaxed =
            truncated_from_spectrum(&spectrum, f, self.problem, tau, kappa, self.bound, self.order);
        let original = original_from_spectrum(&spectrum, f, self.problem);
        (relaxed, original)
    }

    fn truncation_bound(&self) -> Option<f64> {
        Some(self.bound.value())
    }
}

/// Algorithm 1/2 style run at the single `τ` of a fixed schedule.
pub fn run_fixed(f0: &WaveField, p: &ProblemSpec, cfg: &SolverConfig) -> Result<(WaveField, IterationTrace)> {
    if !matches!(cfg.schedule, TauSchedule::Fixed(_)) {
        return Err(Error::argument("run_fixed needs a fixed tau schedule"));
    }
    solve(f0, p, cfg)
}

/// Adaptive-`τ` continuation.
pub fn run_adaptive(f0: &WaveField, p: &ProblemSpec, cfg: &SolverConfig) -> Result<(WaveField, IterationTrace)> {
    if !matches!(cfg.schedule, TauSchedule::Adaptive { .. }) {
        return Err(Error::argument("run_adaptive needs an adaptive tau schedule"));
    }
    solve(f0, p, cfg)
}

/// Runs whichever schedule `cfg` holds.
pub fn solve(f0: &WaveField, p: &ProblemSpec, cfg: &SolverConfig) -> Result<(WaveField, IterationTrace)> {
    let (mut fields, trace) = solve_with_stages(f0, p, cfg)?;
    Ok((fields.pop().expect("at least one stage"), trace))
}

/// Like [`solve`], but also returns the final iterate of every stage.
pub fn solve_with_stages(
    f0: &WaveField,
    p: &ProblemSpec,
    cfg: &SolverConfig,
) -> Result<(Vec<WaveField>, IterationTrace)> {
    if p.omega() != 0.0 {
        return Err(Error::argument("problem is rotating; use rotating::run_rotating"));
    }
    if **f0.grid() != **p.grid() {
        return Err(Error::GridMismatch("initial field and problem grids differ".into()));
    }
    let mut scheme = PlainScheme {
        problem: p,
        bound: truncation_bound(p),
        order: cfg.order,
        kappa_rule: cfg.kappa_rule,
        cache: None,
    };
    drive(&mut scheme, f0, cfg)
}

pub(crate) fn prepare_initial(f0: &WaveField) -> Result<WaveField> {
    let l2 = norms(f0).l2;
    if (l2 - 1.0).abs() >= INITIAL_NORM_SLACK {
        return Err(Error::argument(format!(
            "initial field norm {l2} is not within {INITIAL_NORM_SLACK} of 1"
        )));
    }
    if l2 == 1.0 {
        Ok(f0.clone())
    } else {
        f0.normalized()
    }
}

pub(crate) fn drive<S: Scheme>(
    scheme: &mut S,
    f0: &WaveField,
    cfg: &SolverConfig,
) -> Result<(Vec<WaveField>, IterationTrace)> {
    cfg.validate()?;
    let mut current = prepare_initial(f0)?;
    let mut trace = IterationTrace {
        truncation_bound: scheme.truncation_bound(),
        ..IterationTrace::default()
    };
    let frozen_kappa = match cfg.kappa_rule {
        KappaRule::Adaptive => None,
        _ => Some(scheme.kappa(&current)),
    };
    let mut stage_fields = Vec::new();
    let mut iter = 0usize;

    for (stage, tau) in cfg.stage_taus().into_iter().enumerate() {
        let kappa0 = frozen_kappa.unwrap_or_else(|| scheme.kappa(&current));
        let (initial_relaxed, initial_original) = scheme.energies(&current, tau, kappa0);
        trace.stages.push(StageMark {
            stage,
            tau,
            first_iter: iter + 1,
            initial_relaxed,
            initial_original,
            status: RunStatus::MaxIterations,
        });

        let mut status = RunStatus::MaxIterations;
        for _ in 0..cfg.n_max {
            let start = Instant::now();
            let kappa = frozen_kappa.unwrap_or_else(|| scheme.kappa(&current));
            let next = match scheme.step(&current, tau, kappa) {
                Ok(next) => next,
                Err(e) => return Err(e.with_trace(trace)),
            };
            let res = residual(&next, &current, tau)?;
            let (relaxed, original) = scheme.energies(&next, tau, kappa);
            iter += 1;
            trace.records.push(IterationRecord {
                iter,
                tau,
                kappa,
                relaxed_energy: relaxed,
                original_energy: original,
                residual: res,
                wall_ns: start.elapsed().as_nanos() as u64,
                stage,
            });
            if !(relaxed.is_finite() && original.is_finite()) {
                return Err(Error::solver(format!("non-finite energy at iteration {iter}"))
                    .with_trace(trace));
            }
            current = next;
            if res <= cfg.tol {
                status = RunStatus::Converged;
                break;
            }
        }
        trace.stages.last_mut().expect("stage pushed above").status = status;
        trace.status = Some(status);
        stage_fields.push(current.clone());
    }
    Ok((stage_fields, trace))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::SpectralGrid;

    fn constant_problem() -> (ProblemSpec, WaveField) {
        let grid = SpectralGrid::line(-4.0, 4.0, 32).unwrap();
        let p = ProblemSpec::new(grid.clone(), vec![0.0; 32], 1e-12, 0.0).unwrap();
        let c = 1.0 / grid.measure().sqrt();
        let f = WaveField::from_fn(grid, |_| Complex64::new(c, 0.0)).unwrap();
        (p, f)
    }

    #[test]
    fn constant_is_a_fixed_point() {
        let (p, f) = constant_problem();
        let m = truncation_bound(&p);
        for order in [Order::First, Order::Second] {
            let next = slp_step(&f, &p, 0.1, 1.0, m, order).unwrap();
            assert!(residual(&next, &f, 1.0).unwrap() < 1e-14);
            assert!((norms(&next).l2 - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn step_requires_unit_norm() {
        let (p, f) = constant_problem();
        let m = truncation_bound(&p);
        let off = f.scaled(Complex64::new(1.01, 0.0));
        assert!(matches!(slp_step(&off, &p, 0.1, 1.0, m, Order::First), Err(Error::Argument(_))));
    }

    #[test]
    fn degenerate_update_is_a_solver_error() {
        // (1/τ)e^{τΔ}c + 2κc vanishes for κ = -1/(2τ) on a constant.
        let (p, f) = constant_problem();
        let m = truncation_bound(&p);
        let tau = 0.25;
        let err = step_from_spectrum(&f, &Spectrum::of(&f), &p, tau, -1.0 / (2.0 * tau), m, Order::First)
            .unwrap_err();
        assert!(matches!(err, Error::Solver { .. }));
    }

    #[test]
    fn residual_definition() {
        let grid = SpectralGrid::line(0.0, 1.0, 8).unwrap();
        let a = WaveField::from_fn(grid.clone(), |x| Complex64::new(x[0], 0.0)).unwrap();
        assert_eq!(residual(&a, &a, 0.1).unwrap(), 0.0);
        let c = Complex64::new(0.3, -0.4);
        let b = WaveField::new(grid, a.values().iter().map(|v| v + c).collect()).unwrap();
        let r1 = residual(&b, &a, 0.5).unwrap();
        assert!((r1 - 1.0).abs() < 1e-12);
        let r2 = residual(&b, &a, 0.25).unwrap();
        assert!((r2 - 2.0 * r1).abs() < 1e-12);
    }

    #[test]
    fn infinite_tolerance_stops_after_one_step() {
        let grid = SpectralGrid::line(-8.0, 8.0, 64).unwrap();
        let p = ProblemSpec::from_fn(grid.clone(), |x| 0.5 * x[0] * x[0], 10.0, 0.0).unwrap();
        let f0 = WaveField::from_fn(grid, |x| Complex64::new((-x[0] * x[0]).exp(), 0.0))
            .unwrap()
            .normalized()
            .unwrap();
        let cfg = SolverConfig::fixed(Order::First, 0.1).with_tol(f64::INFINITY);
        let (_, trace) = run_fixed(&f0, &p, &cfg).unwrap();
        assert_eq!(trace.len(), 1);
        assert!(trace.converged());
    }

    #[test]
    fn initial_norm_slack() {
        let grid = SpectralGrid::line(-8.0, 8.0, 64).unwrap();
        let p = ProblemSpec::from_fn(grid.clone(), |x| 0.5 * x[0] * x[0], 10.0, 0.0).unwrap();
        let f0 = WaveField::from_fn(grid, |x| Complex64::new((-x[0] * x[0]).exp(), 0.0))
            .unwrap()
            .normalized()
            .unwrap();
        let cfg = SolverConfig::fixed(Order::First, 0.1).with_n_max(3);
        assert!(run_fixed(&f0.scaled(Complex64::new(1.0 + 1e-7, 0.0)), &p, &cfg).is_ok());
        assert!(run_fixed(&f0.scaled(Complex64::new(1.0 + 1e-5, 0.0)), &p, &cfg).is_err());
    }

    #[test]
    fn schedule_validation_and_stage_counts() {
        let cfg = SolverConfig::adaptive(Order::First, 1e-1, 1e-6, 10.0);
        assert_eq!(cfg.stage_taus().len(), 6);
        let cfg = SolverConfig::adaptive(Order::Second, 1.0 / 64.0, 1.0 / 128.0, 2.0);
        assert_eq!(cfg.stage_taus(), vec![1.0 / 64.0, 1.0 / 128.0]);
        let cfg = SolverConfig::adaptive(Order::Second, 0.2, 0.2, 3.0);
        assert_eq!(cfg.stage_taus(), vec![0.2]);
        let cfg = SolverConfig::adaptive(Order::Second, 0.3, 0.01, 2.0);
        // log2(30) = 4.9 → stages at 0.3, 0.15, 0.075, 0.0375, 0.01875
        assert_eq!(cfg.stage_taus().len(), 5);

        assert!(SolverConfig::adaptive(Order::First, 0.1, 0.2, 2.0).validate().is_err());
        assert!(SolverConfig::adaptive(Order::First, 0.1, 0.01, 1.0).validate().is_err());
        assert!(SolverConfig::fixed(Order::First, 0.0).validate().is_err());
        assert!(SolverConfig::fixed(Order::First, 0.1).with_tol(0.0).validate().is_err());
        assert!(SolverConfig::fixed(Order::First, 0.1).with_n_max(0).validate().is_err());
    }

    #[test]
    fn mode_mismatch_is_rejected() {
        let (p, f) = constant_problem();
        let adaptive = SolverConfig::adaptive(Order::First, 0.1, 0.01, 10.0);
        assert!(run_fixed(&f, &p, &adaptive).is_err());
        assert!(run_adaptive(&f, &p, &SolverConfig::fixed(Order::First, 0.1)).is_err());
    }
}
