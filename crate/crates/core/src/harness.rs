//! Reference solutions, convergence studies and the dissipation audit.

use std::path::Path;

use num_complex::Complex64;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::functionals::{chemical_potential, energy_original, relaxed_energy, Order, ProblemSpec};
use crate::grid::{SpectralGrid, WaveField};
use crate::io::{read_field_snapshot_on, write_field_snapshot};
use crate::problems::{Problem, ProblemConfig};
use crate::solver::{solve, IterationTrace, SolverConfig, TauSchedule};

/// Default energy increase tolerated by [`dissipation_audit`].
pub const DISSIPATION_THRESHOLD: f64 = 1e-10;

/// Order-2 continuation `τ = 10⁻¹ → 10⁻³` (`r = 10`) at `tol = 10⁻¹²`.
pub fn reference_config() -> SolverConfig {
    SolverConfig::adaptive(Order::Second, 0.1, 1e-3, 10.0)
        .with_tol(1e-12)
        .with_n_max(1_000_000)
}

/// A converged oracle field with its energy and chemical potential.
#[derive(Clone, Debug)]
pub struct Reference {
    pub field: WaveField,
    pub energy: f64,
    pub mu: f64,
    pub tau: f64,
    pub order: Order,
}

impl Reference {
    pub fn from_field(field: WaveField, p: &ProblemSpec, cfg: &SolverConfig) -> Result<Self> {
        Ok(Reference {
            energy: energy_original(&field, p)?,
            mu: chemical_potential(&field, p)?,
            tau: cfg.final_tau(),
            order: cfg.order,
            field,
        })
    }
}

/// Runs `cfg` and insists on convergence of the final stage.
pub fn reference_solution(
    f0: &WaveField,
    p: &ProblemSpec,
    cfg: &SolverConfig,
) -> Result<(Reference, IterationTrace)> {
    let (field, trace) = solve(f0, p, cfg)?;
    if !trace.converged() {
        return Err(Error::solver(format!(
            "reference did not converge within {} iterations at tau = {}",
            cfg.n_max,
            cfg.final_tau()
        ))
        .with_trace(trace));
    }
    Ok((Reference::from_field(field, p, cfg)?, trace))
}

/// [`reference_solution`], reusing the snapshot at `cache` when it exists.
pub fn cached_reference(
    f0: &WaveField,
    p: &ProblemSpec,
    cfg: &SolverConfig,
    cache: impl AsRef<Path>,
) -> Result<Reference> {
    let cache = cache.as_ref();
    if cache.exists() {
        let field = read_field_snapshot_on(cache, p.grid())?;
        return Reference::from_field(field, p, cfg);
    }
    let (reference, _) = reference_solution(f0, p, cfg)?;
    write_field_snapshot(&reference.field, cache)?;
    Ok(reference)
}

/// What a convergence study varies.
#[derive(Clone, Debug, PartialEq)]
pub enum Sweep {
    /// Final `τ` of each run (decreasing).
    Tau(Vec<f64>),
    /// Grid spacing of each run (decreasing).
    Spacing(Vec<f64>),
}

impl Sweep {
    pub fn values(&self) -> &[f64] {
        match self {
            Sweep::Tau(v) | Sweep::Spacing(v) => v,
        }
    }

    fn label(&self) -> &'static str {
        match self {
            Sweep::Tau(_) => "tau",
            Sweep::Spacing(_) => "h",
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ConvergenceRow {
    pub param: f64,
    /// `max_j |e^{iθ}φ_j - φ^ref_j|` after phase alignment.
    pub err_phi: f64,
    /// Same without phase alignment.
    pub err_phi_unaligned: f64,
    pub err_energy: f64,
    pub err_mu: f64,
    /// `None` on the first row; NaN when an error is exactly zero.
    pub rate_phi: Option<f64>,
    pub rate_energy: Option<f64>,
    pub rate_mu: Option<f64>,
    pub iterations: usize,
    pub converged: bool,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ReferenceDescriptor {
    pub points: Vec<usize>,
    pub bounds: Vec<(f64, f64)>,
    pub tau: f64,
    pub order: Order,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ConvergenceReport {
    pub parameter: &'static str,
    pub rows: Vec<ConvergenceRow>,
    pub reference: ReferenceDescriptor,
}

/// `rate_i = ln(e_{i-1}/e_i) / ln(ratio)`, one entry per consecutive pair.
pub fn estimate_rates(errors: &[f64], ratio: f64) -> Result<Vec<f64>> {
    if !(ratio > 1.0) {
        return Err(Error::argument(format!("rate ratio must exceed 1, got {ratio}")));
    }
    Ok(errors.windows(2).map(|w| pair_rate(w[0], w[1], ratio)).collect())
}

fn pair_rate(coarse: f64, fine: f64, ratio: f64) -> f64 {
    if coarse > 0.0 && fine > 0.0 {
        (coarse / fine).ln() / ratio.ln()
    } else {
        f64::NAN
    }
}

/// Multiplies `f` by the unit phase maximizing `Re⟨e^{iθ}f, g⟩`.
pub fn phase_align(f: &WaveField, g: &WaveField) -> Result<WaveField> {
    f.ensure_same_grid(g)?;
    let s: Complex64 = f.values().iter().zip(g.values()).map(|(a, b)| a.conj() * b).sum();
    let phase = if s.norm() > 0.0 { s / s.norm() } else { Complex64::new(1.0, 0.0) };
    Ok(f.scaled(phase))
}

fn max_diff(a: &[Complex64], b: &[Complex64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).norm()).fold(0.0, f64::max)
}

/// Samples of `fine` at the points of a coarser grid over the same domain.
pub fn restrict_to(fine: &WaveField, coarse: &SpectralGrid) -> Result<Vec<Complex64>> {
    let fg = fine.grid();
    if fg.bounds() != coarse.bounds() {
        return Err(Error::GridMismatch("restriction needs identical domains".into()));
    }
    let strides: Vec<usize> = fg
        .points()
        .iter()
        .zip(coarse.points())
        .map(|(&nf, &nc)| if nf % nc == 0 { Ok(nf / nc) } else { Err(()) })
        .collect::<std::result::Result<_, _>>()
        .map_err(|_| Error::GridMismatch("fine grid is not a refinement of the coarse grid".into()))?;
    let values = fine.values();
    Ok(match coarse.dim() {
        1 => (0..coarse.points()[0]).map(|i| values[i * strides[0]]).collect(),
        _ => {
            let (nc0, nc1) = (coarse.points()[0], coarse.points()[1]);
            let nf1 = fg.points()[1];
            (0..nc0 * nc1)
                .map(|j| values[(j / nc1) * strides[0] * nf1 + (j % nc1) * strides[1]])
                .collect()
        }
    })
}

fn row_config(base: &SolverConfig, tau: f64) -> SolverConfig {
    let schedule = match base.schedule {
        TauSchedule::Adaptive { tau0, ratio, .. } if tau0 > tau => TauSchedule::Adaptive {
            tau0,
            tauf: tau,
            ratio,
        },
        _ => TauSchedule::Fixed(tau),
    };
    SolverConfig {
        schedule,
        ..base.clone()
    }
}

fn rebuilt_on_spacing(config: &ProblemConfig, h: f64) -> Result<Problem> {
    let mut cfg = config.clone();
    cfg.grid_n = config
        .domain
        .iter()
        .map(|[a, b]| {
            let n = (b - a) / h;
            if (n - n.round()).abs() > 1e-9 {
                Err(Error::argument(format!("spacing {h} does not divide [{a}, {b}]")))
            } else {
                Ok(n.round() as usize)
            }
        })
        .collect::<Result<_>>()?;
    cfg.build()
}

/// Runs every row of `sweep` (in parallel) and compares each result to `reference`.
///
/// `τ` rows reuse `config`'s grid and solver, with the final `τ` replaced. `h`
/// rows rebuild the problem at each spacing and compare at the coarse points,
/// so the reference must live on a common refinement.
pub fn convergence_study(config: &ProblemConfig, sweep: &Sweep, reference: &Reference) -> Result<ConvergenceReport> {
    if config.omega != 0.0 {
        return Err(Error::argument("convergence studies cover non-rotating problems only"));
    }
    let params = sweep.values();
    if params.is_empty() {
        return Err(Error::argument("empty sweep"));
    }
    if params.windows(2).any(|w| !(w[0] > w[1])) {
        return Err(Error::argument("sweep must be strictly decreasing"));
    }
    let base = config.build()?;
    if matches!(sweep, Sweep::Tau(_)) && **reference.field.grid() != **base.problem.grid() {
        return Err(Error::GridMismatch("reference and problem grids differ".into()));
    }

    let measured: Vec<ConvergenceRow> = params
        .par_iter()
        .map(|&param| {
            let (problem, cfg) = match sweep {
                Sweep::Tau(_) => (base.clone(), row_config(&base.config, param)),
                Sweep::Spacing(_) => (rebuilt_on_spacing(config, param)?, base.config.clone()),
            };
            let (field, trace) = solve(&problem.initial, &problem.problem, &cfg)?;
            let target = restrict_to(&reference.field, problem.problem.grid())?;
            let target = WaveField::new(problem.problem.grid().clone(), target)?;
            let aligned = phase_align(&field, &target)?;
            Ok(ConvergenceRow {
                param,
                err_phi: max_diff(aligned.values(), target.values()),
                err_phi_unaligned: max_diff(field.values(), target.values()),
                err_energy: (energy_original(&field, &problem.problem)? - reference.energy).abs(),
                err_mu: (chemical_potential(&field, &problem.problem)? - reference.mu).abs(),
                rate_phi: None,
                rate_energy: None,
                rate_mu: None,
                iterations: trace.len(),
                converged: trace.converged(),
            })
        })
        .collect::<Result<_>>()?;

    let mut rows = measured;
    for i in 1..rows.len() {
        let ratio = rows[i - 1].param / rows[i].param;
        let (prev, cur) = (rows[i - 1].clone(), &mut rows[i]);
        cur.rate_phi = Some(pair_rate(prev.err_phi, cur.err_phi, ratio));
        cur.rate_energy = Some(pair_rate(prev.err_energy, cur.err_energy, ratio));
        cur.rate_mu = Some(pair_rate(prev.err_mu, cur.err_mu, ratio));
    }
    let grid = reference.field.grid();
    Ok(ConvergenceReport {
        parameter: sweep.label(),
        rows,
        reference: ReferenceDescriptor {
            points: grid.points().to_vec(),
            bounds: grid.bounds().to_vec(),
            tau: reference.tau,
            order: reference.order,
        },
    })
}

impl ConvergenceReport {
    pub fn to_csv(&self) -> String {
        let fmt_rate = |r: Option<f64>| r.map(|r| format!("{r:.6}")).unwrap_or_default();
        let mut out = format!("{},err_phi_inf,err_E,err_mu,rate_phi,rate_E,rate_mu\n", self.parameter);
        for r in &self.rows {
            out.push_str(&format!(
                "{:.16e},{:.16e},{:.16e},{:.16e},{},{},{}\n",
                r.param,
                r.err_phi,
                r.err_energy,
                r.err_mu,
                fmt_rate(r.rate_phi),
                fmt_rate(r.rate_energy),
                fmt_rate(r.rate_mu)
            ));
        }
        out
    }

    pub fn write_csv(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        std::fs::write(path, self.to_csv()).map_err(|e| Error::io(path, e))
    }
}

/// `E(φ) - E^{order,τ}(φ)` for each `τ`.
pub fn relaxation_gaps(f: &WaveField, p: &ProblemSpec, taus: &[f64], order: Order) -> Result<Vec<f64>> {
    let e = energy_original(f, p)?;
    taus.iter()
        .map(|&tau| Ok(e - relaxed_energy(f, p, tau, order)?))
        .collect()
}

/// An energy increase between consecutive iterates.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Violation {
    /// `iter` of the record whose energy went up.
    pub iter: usize,
    pub increase: f64,
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct DissipationReport {
    pub relaxed: Vec<Violation>,
    pub original: Vec<Violation>,
    pub max_relaxed_increase: f64,
    pub max_original_increase: f64,
    pub checked: usize,
}

impl DissipationReport {
    pub fn is_clean(&self) -> bool {
        self.relaxed.is_empty()
    }
}

/// [`dissipation_audit_with`] at [`DISSIPATION_THRESHOLD`].
pub fn dissipation_audit(trace: &IterationTrace) -> DissipationReport {
    dissipation_audit_with(trace, DISSIPATION_THRESHOLD)
}

/// Flags every iterate whose energy exceeds its predecessor's by more than
/// `threshold`.
///
/// The relaxed energy depends on `τ`, so it is only compared within a stage
/// (the first iterate of a stage against the stage's starting energy when the
/// trace has it). The original energy is compared across the whole run.
pub fn dissipation_audit_with(trace: &IterationTrace, threshold: f64) -> DissipationReport {
    let mut report = DissipationReport {
        checked: trace.records.len(),
        ..DissipationReport::default()
    };
    let mut prev_relaxed: Option<f64> = None;
    let mut prev_original: Option<f64> = trace.stages.first().map(|s| s.initial_original);
    let mut stage = None;
    for r in &trace.records {
        if stage != Some(r.stage) {
            stage = Some(r.stage);
            prev_relaxed = trace
                .stages
                .iter()
                .find(|s| s.stage == r.stage)
                .map(|s| s.initial_relaxed);
        }
        if let Some(prev) = prev_relaxed.filter(|p| p.is_finite()) {
            let inc = r.relaxed_energy - prev;
            report.max_relaxed_increase = report.max_relaxed_increase.max(inc);
            if inc > threshold {
                report.relaxed.push(Violation { iter: r.iter, increase: inc });
            }
        }
        if let Some(prev) = prev_original.filter(|p| p.is_finite()) {
            let inc = r.original_energy - prev;
            report.max_original_increase = report.max_original_increase.max(inc);
            if inc > threshold {
                report.original.push(Violation { iter: r.iter, increase: inc });
            }
        }
        prev_relaxed = Some(r.relaxed_energy);
        prev_original = Some(r.original_energy);
    }
    report
}
