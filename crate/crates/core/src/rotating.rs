//! Rotating condensates in 2D.
//!
//! With `R(x) = Ω(y, -x)` and `∇_R = ∇ + iR`, the rotating energy
//!
//! ```text
//! E_rot(φ) = ∫ ½|∇φ|² + V|φ|² + (β/2)|φ|⁴ - Ω φ̄ L_z φ,   L_z = -i(x∂_y - y∂_x)
//! ```
//!
//! equals `∫ -½(∇_R²φ)φ̄ + W|φ|² + (β/2)|φ|⁴` with `W = V - |R|²/2`. The relaxed
//! functionals use `e^{s∇_R²}` in place of `e^{sΔ}`.
//!
//! `∇_R² = A + B` with `A = (∂_x + iΩy)²` and `B = (∂_y - iΩx)²`. Each piece is
//! diagonal under a 1D transform along its own axis, so `e^{s∇_R²}` is realized
//! by the Strang product `e^{sA/2} e^{sB} e^{sA/2}`.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::functionals::{
    check_tau, compute_kappa, potential_integral, quartic_integral, trunc_quartic_grad, KappaRule, Order,
    ProblemSpec, TruncationBound,
};
use crate::grid::{complex_inner, norms, Spectrum, WaveField};
use crate::solver::{check_unit_norm, drive, normalize_update, operator_scale, IterationTrace, Scheme, SolverConfig};

/// Angular velocity of the rotating frame.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RotationSpec {
    pub omega: f64,
}

impl RotationSpec {
    pub fn new(omega: f64) -> Result<Self> {
        if omega >= 0.0 && omega.is_finite() {
            Ok(RotationSpec { omega })
        } else {
            Err(Error::argument(format!("omega must be non-negative, got {omega}")))
        }
    }

    pub fn of(p: &ProblemSpec) -> Self {
        RotationSpec { omega: p.omega() }
    }

    /// `R(x) = Ω(y, -x)`.
    pub fn velocity(&self, x: f64, y: f64) -> (f64, f64) {
        (self.omega * y, -self.omega * x)
    }
}

fn require_2d(f: &WaveField) -> Result<()> {
    if f.grid().dim() == 2 {
        Ok(())
    } else {
        Err(Error::argument("rotating operators are defined only in two dimensions"))
    }
}

/// `W(x) = V(x) - |R(x)|²/2`; may be negative for large `Ω`.
pub fn effective_potential(p: &ProblemSpec) -> Result<Vec<f64>> {
    let grid = p.grid();
    if grid.dim() != 2 {
        return Err(Error::argument("effective potential needs a two-dimensional grid"));
    }
    let rot = RotationSpec::of(p);
    let centrifugal = grid.sample(|x| {
        let (rx, ry) = rot.velocity(x[0], x[1]);
        0.5 * (rx * rx + ry * ry)
    });
    Ok(p.potential().iter().zip(centrifugal).map(|(v, c)| v - c).collect())
}

/// Strang-split approximation of `e^{s∇_R²} f`.
pub fn apply_rotating_semigroup(f: &WaveField, s: f64, rot: &RotationSpec) -> Result<WaveField> {
    require_2d(f)?;
    if !(s >= 0.0 && s.is_finite()) {
        return Err(Error::argument(format!("semigroup time must be >= 0, got {s}")));
    }
    if s == 0.0 {
        return Ok(f.clone());
    }
    let grid = f.grid();
    let kx = grid.wavenumbers(0);
    let ky = grid.wavenumbers(1);
    let xs = grid.coords(0);
    let ys = grid.coords(1);
    let omega = rot.omega;
    let half = 0.5 * s;

    let mut data = f.values().to_vec();
    // e^{(s/2)A}: along x for each fixed y, multiplier e^{-(s/2)(k_x + Ωy)²}.
    let a_factor = |col: usize, m: usize| {
        let q = kx[m] + omega * ys[col];
        (-half * q * q).exp()
    };
    grid.filter_axis(&mut data, 0, a_factor);
    // e^{sB}: along y for each fixed x, multiplier e^{-s(k_y - Ωx)²}.
    grid.filter_axis(&mut data, 1, |row, m| {
        let q = ky[m] - omega * xs[row];
        (-s * q * q).exp()
    });
    grid.filter_axis(&mut data, 0, a_factor);
    Ok(WaveField::from_parts(grid.clone(), data))
}

/// `Re ∫ φ̄ L_z φ`, with spectral derivatives.
pub fn angular_momentum(f: &WaveField) -> Result<f64> {
    require_2d(f)?;
    let lz = apply_lz(f);
    Ok(complex_inner(&lz, f).re)
}

/// `L_z f = -i(x ∂_y f - y ∂_x f)`.
fn apply_lz(f: &WaveField) -> WaveField {
    let grid = f.grid();
    let spectrum = Spectrum::of(f);
    let dx = spectrum.derivative(0);
    let dy = spectrum.derivative(1);
    let xs = grid.coords(0);
    let ys = grid.coords(1);
    let n1 = ys.len();
    let minus_i = Complex64::new(0.0, -1.0);
    let values = (0..grid.len())
        .map(|j| {
            let (x, y) = (xs[j / n1], ys[j % n1]);
            minus_i * (dy.values()[j] * x - dx.values()[j] * y)
        })
        .collect();
    WaveField::from_parts(grid.clone(), values)
}

/// `E_rot(φ)`.
pub fn rotating_energy_original(f: &WaveField, p: &ProblemSpec) -> Result<f64> {
    require_2d(f)?;
    check_grid(f, p)?;
    let spectrum = Spectrum::of(f);
    let kinetic = spectrum.weighted_sum(|k2| 0.5 * k2);
    let rotation = if p.omega() == 0.0 { 0.0 } else { p.omega() * angular_momentum(f)? };
    Ok(kinetic + potential_integral(f, p) + 0.5 * p.beta() * quartic_integral(f) - rotation)
}

/// Rotating relaxed energy `E_rot^{order,τ}` with its `-κ‖φ‖² + κ` terms.
pub fn rotating_relaxed_energy(
    f: &WaveField,
    p: &ProblemSpec,
    tau: f64,
    kappa: f64,
    order: Order,
) -> Result<f64> {
    require_2d(f)?;
    check_tau(tau)?;
    check_grid(f, p)?;
    let w = effective_potential(p)?;
    Ok(relaxed_with_potential(f, p, &w, tau, kappa, order))
}

fn relaxed_with_potential(
    f: &WaveField,
    p: &ProblemSpec,
    w: &[f64],
    tau: f64,
    kappa: f64,
    order: Order,
) -> f64 {
    let rot = RotationSpec::of(p);
    let mass = norms(f).l2.powi(2);
    let flowed_mass = |s: f64| {
        let g = apply_rotating_semigroup(f, s, &rot).expect("validated 2D input");
        norms(&g).l2.powi(2)
    };
    let relaxation = match order {
        Order::First => (1.0 - mass) / (2.0 * tau) + (mass - flowed_mass(0.5 * tau)) / (2.0 * tau),
        Order::Second => {
            3.0 * (1.0 - mass) / (2.0 * tau)
                + (3.0 * mass + flowed_mass(0.5 * tau) - 4.0 * flowed_mass(0.25 * tau)) / (2.0 * tau)
        }
    };
    let vol = f.grid().cell_volume();
    let potential: f64 = f.values().iter().zip(w).map(|(z, w)| w * z.norm_sqr()).sum::<f64>() * vol;
    relaxation + potential + 0.5 * p.beta() * quartic_integral(f) + kappa * (1.0 - mass)
}

fn check_grid(f: &WaveField, p: &ProblemSpec) -> Result<()> {
    if **f.grid() == **p.grid() {
        Ok(())
    } else {
        Err(Error::GridMismatch("field and problem grids differ".into()))
    }
}

/// One rotating SLP update. The nonlinearity is the raw `β|φ|²φ` unless a
/// truncation bound is supplied, in which case `(β/4)f̃(φ)` is used instead.
pub fn rot_slp_step(
    f: &WaveField,
    p: &ProblemSpec,
    tau: f64,
    kappa: f64,
    order: Order,
    truncation: Option<TruncationBound>,
) -> Result<WaveField> {
    require_2d(f)?;
    check_tau(tau)?;
    check_grid(f, p)?;
    check_unit_norm(f)?;
    let rot = RotationSpec::of(p);
    let diffused: Vec<Complex64> = match order {
        Order::First => {
            let full = apply_rotating_semigroup(f, tau, &rot)?;
            full.values().iter().map(|v| v / tau).collect()
        }
        Order::Second => {
            let full = apply_rotating_semigroup(f, tau, &rot)?;
            let half = apply_rotating_semigroup(f, 0.5 * tau, &rot)?;
            full.values()
                .iter()
                .zip(half.values())
                .map(|(a, b)| (b * 4.0 - a) / tau)
                .collect()
        }
    };
    let beta = p.beta();
    let values = diffused
        .into_iter()
        .zip(f.values())
        .zip(p.potential())
        .map(|((d, &z), &v)| {
            let nonlinear = match truncation {
                None => z * (beta * z.norm_sqr()),
                Some(m) => trunc_quartic_grad(z, m) * (0.25 * beta),
            };
            d - (z * (v - kappa) + nonlinear) * 2.0
        })
        .collect();
    normalize_update(f.grid(), values, operator_scale(p, tau, kappa))
}

struct RotatingScheme<'a> {
    problem: &'a ProblemSpec,
    effective: Vec<f64>,
    order: Order,
    kappa_rule: KappaRule,
    truncation: Option<TruncationBound>,
}

impl Scheme for RotatingScheme<'_> {
    fn kappa(&self, f: &WaveField) -> f64 {
        compute_kappa(f, self.problem, self.kappa_rule)
    }

    fn step(&mut self, f: &WaveField, tau: f64, kappa: f64) -> Result<WaveField> {
        rot_slp_step(f, self.problem, tau, kappa, self.order, self.truncation)
    }

    fn energies(&mut self, f: &WaveField, tau: f64, kappa: f64) -> (f64, f64) {
        let relaxed = relaxed_with_potential(f, self.problem, &self.effective, tau, kappa, self.order);
        let original = rotating_energy_original(f, self.problem).unwrap_or(f64::NAN);
        (relaxed, original)
    }

    fn truncation_bound(&self) -> Option<f64> {
        self.truncation.map(TruncationBound::value)
    }
}

/// Rotating SLP run under either schedule in `cfg`.
pub fn run_rotating(
    f0: &WaveField,
    p: &ProblemSpec,
    cfg: &SolverConfig,
    truncation: Option<TruncationBound>,
) -> Result<(WaveField, IterationTrace)> {
    let (mut fields, trace) = run_rotating_with_stages(f0, p, cfg, truncation)?;
    Ok((fields.pop().expect("at least one stage"), trace))
}

pub fn run_rotating_with_stages(
    f0: &WaveField,
    p: &ProblemSpec,
    cfg: &SolverConfig,
    truncation: Option<TruncationBound>,
) -> Result<(Vec<WaveField>, IterationTrace)> {
    require_2d(f0)?;
    check_grid(f0, p)?;
    let mut scheme = RotatingScheme {
        problem: p,
        effective: effective_potential(p)?,
        order: cfg.order,
        kappa_rule: cfg.kappa_rule,
        truncation,
    };
    drive(&mut scheme, f0, cfg)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::functionals::{energy_original, relaxed_energy, truncation_bound};
    use crate::grid::{apply_heat_semigroup, SpectralGrid};
    use crate::solver::slp_step;

    fn harmonic(omega: f64, n: usize) -> ProblemSpec {
        let grid = SpectralGrid::square(-6.0, 6.0, n).unwrap();
        ProblemSpec::from_fn(grid, |x| 0.5 * (x[0] * x[0] + x[1] * x[1]), 20.0, omega).unwrap()
    }

    fn blob(p: &ProblemSpec) -> WaveField {
        WaveField::from_fn(p.grid().clone(), |x| {
            let r2 = (x[0] - 0.4).powi(2) + 1.3 * (x[1] + 0.2).powi(2);
            Complex64::new((-0.5 * r2).exp() * (1.0 + 0.2 * x[0]), 0.3 * x[1] * (-r2).exp())
        })
        .unwrap()
        .normalized()
        .unwrap()
    }

    #[test]
    fn effective_potential_cases() {
        let p = harmonic(0.0, 16);
        assert_eq!(effective_potential(&p).unwrap(), p.potential());
        let p = harmonic(0.6, 16);
        let w = effective_potential(&p).unwrap();
        let expected = p.grid().sample(|x| (1.0 - 0.36) * 0.5 * (x[0] * x[0] + x[1] * x[1]));
        for (a, b) in w.iter().zip(&expected) {
            assert!((a - b).abs() < 1e-12);
        }
        let p = harmonic(1.0, 16);
        assert!(effective_potential(&p).unwrap().iter().all(|w| w.abs() < 1e-12));
        let line = ProblemSpec::new(SpectralGrid::line(0.0, 1.0, 8).unwrap(), vec![0.0; 8], 1.0, 0.0).unwrap();
        assert!(effective_potential(&line).is_err());
    }

    #[test]
    fn semigroup_reduces_to_heat_flow_without_rotation() {
        let p = harmonic(0.0, 32);
        let f = blob(&p);
        let rot = RotationSpec::new(0.0).unwrap();
        for s in [0.0, 0.01, 0.3] {
            let a = apply_rotating_semigroup(&f, s, &rot).unwrap();
            let b = apply_heat_semigroup(&f, s).unwrap();
            for (x, y) in a.values().iter().zip(b.values()) {
                assert!((x - y).norm() < 1e-12);
            }
        }
    }

    #[test]
    fn semigroup_rejects_1d_and_negative_time() {
        let line = WaveField::zeros(SpectralGrid::line(0.0, 1.0, 8).unwrap());
        let rot = RotationSpec::new(0.5).unwrap();
        assert!(apply_rotating_semigroup(&line, 0.1, &rot).is_err());
        let p = harmonic(0.5, 8);
        assert!(apply_rotating_semigroup(&blob(&p), -0.1, &rot).is_err());
    }

    #[test]
    fn energies_reduce_without_rotation() {
        let p = harmonic(0.0, 32);
        let f = blob(&p);
        let e = energy_original(&f, &p).unwrap();
        assert!((rotating_energy_original(&f, &p).unwrap() - e).abs() < 1e-12 * e.abs());
        for order in [Order::First, Order::Second] {
            for kappa in [0.0, 7.0] {
                let plain = relaxed_energy(&f, &p, 0.1, order).unwrap();
                let rot = rotating_relaxed_energy(&f, &p, 0.1, kappa, order).unwrap();
                assert!((plain - rot).abs() < 1e-12 * plain.abs(), "{order:?}: {plain} vs {rot}");
            }
        }
    }

    #[test]
    fn real_fields_carry_no_angular_momentum() {
        let p = harmonic(0.7, 32);
        let f = WaveField::from_fn(p.grid().clone(), |x| {
            Complex64::new((-(x[0] - 0.5).powi(2) - 2.0 * x[1] * x[1]).exp(), 0.0)
        })
        .unwrap()
        .normalized()
        .unwrap();
        assert!(angular_momentum(&f).unwrap().abs() < 1e-12);
        let p0 = p.with_omega(0.0).unwrap();
        let e0 = energy_original(&f, &p0).unwrap();
        assert!((rotating_energy_original(&f, &p).unwrap() - e0).abs() < 1e-10);
    }

    #[test]
    fn gaussian_vortex_has_unit_angular_momentum() {
        let grid = SpectralGrid::square(-8.0, 8.0, 64).unwrap();
        let f = WaveField::from_fn(grid, |x| {
            Complex64::new(x[0], x[1]) * (-0.5 * (x[0] * x[0] + x[1] * x[1])).exp()
        })
        .unwrap()
        .normalized()
        .unwrap();
        assert!((angular_momentum(&f).unwrap() - 1.0).abs() < 1e-10);
    }

    #[test]
    fn step_reduces_to_plain_step_with_truncation() {
        let p = harmonic(0.0, 32);
        let f = blob(&p);
        let m = truncation_bound(&p);
        for order in [Order::First, Order::Second] {
            let a = rot_slp_step(&f, &p, 0.05, 30.0, order, Some(m)).unwrap();
            let b = slp_step(&f, &p, 0.05, 30.0, m, order).unwrap();
            for (x, y) in a.values().iter().zip(b.values()) {
                assert!((x - y).norm() < 1e-12);
            }
        }
    }

    #[test]
    fn step_is_phase_equivariant() {
        let p = harmonic(0.6, 32);
        let f = blob(&p);
        let phase = Complex64::from_polar(1.0, 0.9);
        for order in [Order::First, Order::Second] {
            let a = rot_slp_step(&f.scaled(phase), &p, 0.05, 30.0, order, None).unwrap();
            let b = rot_slp_step(&f, &p, 0.05, 30.0, order, None).unwrap().scaled(phase);
            for (x, y) in a.values().iter().zip(b.values()) {
                assert!((x - y).norm() < 1e-12);
            }
            assert!((norms(&a).l2 - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn kappa_terms_cancel_on_unit_fields() {
        let p = harmonic(0.5, 32);
        let f = blob(&p);
        let a = rotating_relaxed_energy(&f, &p, 0.1, 0.0, Order::First).unwrap();
        let b = rotating_relaxed_energy(&f, &p, 0.1, 50.0, Order::First).unwrap();
        assert!((a - b).abs() < 1e-12);
    }
}
