//! Energy functionals of the (non-rotating) condensate and their relaxations.
//!
//! The Gross–Pitaevskii energy
//!
//! ```text
//! E(φ) = ∫ ½|∇φ|² + V|φ|² + (β/2)|φ|⁴
//! ```
//!
//! is approximated by replacing the gradient term with heat-semigroup quadratic
//! forms. With `‖φ‖₂ = 1`:
//!
//! ```text
//! E^{1,τ}(φ) = 1/(2τ) + ∫ -(1/2τ)|e^{τΔ/2}φ|² + V|φ|² + (β/2)|φ|⁴           (error O(τ))
//! E^{2,τ}(φ) = 3/(2τ) + ∫ (1/2τ)(|e^{τΔ/2}φ|² - 4|e^{τΔ/4}φ|²) + V|φ|² + ...   (error O(τ²))
//! ```
//!
//! The truncated variants swap `|φ|⁴` for the C¹ quadratic continuation `F̃`
//! beyond an amplitude bound `M` and add `-κ‖φ‖₂² + κ`, which makes them concave
//! on the unit ball for large enough `κ`.
//!
//! Relaxation terms are evaluated in Fourier space as `Σ|φ̂_k|²·w(τ|k|²)` with
//! `expm1`-based weights, so the `1/τ` prefactors never amplify cancellation.

use std::sync::Arc;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::grid::{norms, SpectralGrid, Spectrum, WaveField};

/// Accuracy order of the relaxation.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Order {
    First,
    Second,
}

impl Order {
    pub fn from_number(n: u32) -> Result<Order> {
        match n {
            1 => Ok(Order::First),
            2 => Ok(Order::Second),
            other => Err(Error::argument(format!("order must be 1 or 2, got {other}"))),
        }
    }

    pub fn number(self) -> u32 {
        match self {
            Order::First => 1,
            Order::Second => 2,
        }
    }
}

/// Potential, interaction strength and rotation speed on a grid.
#[derive(Clone, Debug)]
pub struct ProblemSpec {
    grid: Arc<SpectralGrid>,
    potential: Vec<f64>,
    beta: f64,
    omega: f64,
}

impl ProblemSpec {
    /// Validates `V ≥ 0` pointwise and finite, `β ≥ 0`, `Ω ≥ 0` (2D only when nonzero).
    ///
    /// `β = 0` is accepted for the linear oracle problems; the truncation bound is
    /// then infinite.
    pub fn new(grid: Arc<SpectralGrid>, potential: Vec<f64>, beta: f64, omega: f64) -> Result<Self> {
        if potential.len() != grid.len() {
            return Err(Error::GridMismatch(format!(
                "potential has {} samples, grid has {} points",
                potential.len(),
                grid.len()
            )));
        }
        if let Some(j) = potential.iter().position(|v| !(v.is_finite() && *v >= 0.0)) {
            return Err(Error::argument(format!(
                "potential must be finite and non-negative; V[{j}] = {}",
                potential[j]
            )));
        }
        if !(beta >= 0.0 && beta.is_finite()) {
            return Err(Error::argument(format!("beta must be non-negative, got {beta}")));
        }
        if !(omega >= 0.0 && omega.is_finite()) {
            return Err(Error::argument(format!("omega must be non-negative, got {omega}")));
        }
        if omega != 0.0 && grid.dim() != 2 {
            return Err(Error::argument("rotation requires a two-dimensional grid"));
        }
        Ok(ProblemSpec {
            grid,
            potential,
            beta,
            omega,
        })
    }

    /// Samples `V` from a closure.
    pub fn from_fn(
        grid: Arc<SpectralGrid>,
        potential: impl Fn(&[f64]) -> f64,
        beta: f64,
        omega: f64,
    ) -> Result<Self> {
        let v = grid.sample(potential);
        ProblemSpec::new(grid, v, beta, omega)
    }

    pub fn grid(&self) -> &Arc<SpectralGrid> {
        &self.grid
    }

    pub fn potential(&self) -> &[f64] {
        &self.potential
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    pub fn omega(&self) -> f64 {
        self.omega
    }

    /// Same problem with a different rotation speed.
    pub fn with_omega(&self, omega: f64) -> Result<Self> {
        ProblemSpec::new(self.grid.clone(), self.potential.clone(), self.beta, omega)
    }

    pub fn potential_max(&self) -> f64 {
        self.potential.iter().copied().fold(0.0, f64::max)
    }

    /// `∫V` by grid quadrature.
    pub fn potential_integral(&self) -> f64 {
        self.grid.integrate(&self.potential)
    }

    fn check_field(&self, f: &WaveField) -> Result<()> {
        if **f.grid() != *self.grid {
            return Err(Error::GridMismatch(format!(
                "field on {:?}, problem on {:?}",
                f.grid().points(),
                self.grid.points()
            )));
        }
        Ok(())
    }

    fn require_non_rotating(&self) -> Result<()> {
        if self.omega != 0.0 {
            return Err(Error::argument(
                "non-rotating functional called with omega != 0; use the rotating module",
            ));
        }
        Ok(())
    }
}

/// Amplitude bound `M` beyond which the quartic term is continued quadratically.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TruncationBound(f64);

impl TruncationBound {
    pub fn new(m: f64) -> Result<Self> {
        if m > 0.0 {
            Ok(TruncationBound(m))
        } else {
            Err(Error::argument(format!("truncation bound must be positive, got {m}")))
        }
    }

    pub fn value(self) -> f64 {
        self.0
    }
}

/// `M = sqrt((β + 2∫V) / (β|D|))`; infinite when `β = 0`.
pub fn truncation_bound(p: &ProblemSpec) -> TruncationBound {
    if p.beta == 0.0 {
        return TruncationBound(f64::INFINITY);
    }
    let m = ((p.beta + 2.0 * p.potential_integral()) / (p.beta * p.grid.measure())).sqrt();
    TruncationBound(m)
}

/// Truncated quartic `F̃(v)`: `|v|⁴` inside the bound, `6M²|v|² - 8M³|v| + 3M⁴` outside.
pub fn trunc_quartic(v: Complex64, m: TruncationBound) -> f64 {
    let r = v.norm();
    let m = m.0;
    if r <= m {
        let r2 = r * r;
        r2 * r2
    } else {
        let m2 = m * m;
        6.0 * m2 * r * r - 8.0 * m2 * m * r + 3.0 * m2 * m2
    }
}

/// Derivative of [`trunc_quartic`]: `4|v|²v` inside, `12M²v - 8M³ v/|v|` outside.
///
/// Along a direction `η`, `d/dε F̃(v + εη) = Re(f̃(v) η̄)`.
pub fn trunc_quartic_grad(v: Complex64, m: TruncationBound) -> Complex64 {
    let r = v.norm();
    let m = m.0;
    if r <= m {
        v * (4.0 * r * r)
    } else {
        let m2 = m * m;
        v * (12.0 * m2 - 8.0 * m2 * m / r)
    }
}

/// How the regularization `κ` is chosen.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum KappaRule {
    /// `κⁿ = ‖V + 3β|φⁿ|²‖_∞`, recomputed from every iterate.
    Adaptive,
    /// `κ = ‖V‖_∞ + 3βM²`, the bound under which concavity is proven.
    TheorySafe,
    /// A user-supplied constant.
    Fixed(f64),
}

pub fn compute_kappa(f: &WaveField, p: &ProblemSpec, rule: KappaRule) -> f64 {
    match rule {
        KappaRule::Adaptive => p
            .potential
            .iter()
            .zip(f.values())
            .map(|(v, z)| v + 3.0 * p.beta * z.norm_sqr())
            .fold(0.0, f64::max),
        KappaRule::TheorySafe => {
            let m = truncation_bound(p).value();
            p.potential_max() + 3.0 * p.beta * m * m
        }
        KappaRule::Fixed(k) => k,
    }
}

/// `E(φ) = ∫ ½|∇φ|² + V|φ|² + (β/2)|φ|⁴`.
pub fn energy_original(f: &WaveField, p: &ProblemSpec) -> Result<f64> {
    p.require_non_rotating()?;
    p.check_field(f)?;
    let spectrum = Spectrum::of(f);
    Ok(original_from_spectrum(&spectrum, f, p))
}

/// `μ = E(φ) + (β/2)∫|φ|⁴`.
pub fn chemical_potential(f: &WaveField, p: &ProblemSpec) -> Result<f64> {
    let e = energy_original(f, p)?;
    Ok(e + 0.5 * p.beta * quartic_integral(f))
}

/// Untruncated relaxed energy `E^{order,τ}`.
pub fn relaxed_energy(f: &WaveField, p: &ProblemSpec, tau: f64, order: Order) -> Result<f64> {
    check_tau(tau)?;
    p.require_non_rotating()?;
    p.check_field(f)?;
    let spectrum = Spectrum::of(f);
    let mass = norms(f).l2.powi(2);
    Ok(relaxation_term(&spectrum, mass, tau, order)
        + potential_integral(f, p)
        + 0.5 * p.beta * quartic_integral(f))
}

/// Truncated, κ-regularized relaxed energy `Ẽ^{order,τ}`.
pub fn truncated_relaxed_energy(
    f: &WaveField,
    p: &ProblemSpec,
    tau: f64,
    kappa: f64,
    m: TruncationBound,
    order: Order,
) -> Result<f64> {
    check_tau(tau)?;
    if !(kappa >= 0.0) {
        return Err(Error::argument(format!("kappa must be non-negative, got {kappa}")));
    }
    p.require_non_rotating()?;
    p.check_field(f)?;
    let spectrum = Spectrum::of(f);
    Ok(truncated_from_spectrum(&spectrum, f, p, tau, kappa, m, order))
}

pub(crate) fn check_tau(tau: f64) -> Result<()> {
    if tau > 0.0 && tau.is_finite() {
        Ok(())
    } else {
        Err(Error::argument(format!("tau must be positive, got {tau}")))
    }
}

/// The heat-semigroup replacement of `∫½|∇φ|²`, including the `1/(2τ)` or
/// `3/(2τ)` constant, for a field of squared norm `mass`.
pub(crate) fn relaxation_term(spectrum: &Spectrum, mass: f64, tau: f64, order: Order) -> f64 {
    match order {
        Order::First => {
            (1.0 - mass) / (2.0 * tau)
                + spectrum.weighted_sum(|k2| -(-tau * k2).exp_m1()) / (2.0 * tau)
        }
        Order::Second => {
            // e^{-2x} - 4e^{-x} + 3 = (1 - e^{-x})(3 - e^{-x}), x = τ|k|²/2
            3.0 * (1.0 - mass) / (2.0 * tau)
                + spectrum.weighted_sum(|k2| {
                    let x = 0.5 * tau * k2;
                    let u = (-x).exp();
                    -(-x).exp_m1() * (3.0 - u)
                }) / (2.0 * tau)
        }
    }
}

pub(crate) fn potential_integral(f: &WaveField, p: &ProblemSpec) -> f64 {
    let s: f64 = f
        .values()
        .iter()
        .zip(&p.potential)
        .map(|(z, v)| v * z.norm_sqr())
        .sum();
    s * f.grid().cell_volume()
}

pub(crate) fn quartic_integral(f: &WaveField) -> f64 {
    let s: f64 = f.values().iter().map(|z| z.norm_sqr().powi(2)).sum();
    s * f.grid().cell_volume()
}

fn truncated_quartic_integral(f: &WaveField, m: TruncationBound) -> f64 {
    let s: f64 = f.values().iter().map(|&z| trunc_quartic(z, m)).sum();
    s * f.grid().cell_volume()
}

pub(crate) fn original_from_spectrum(spectrum: &Spectrum, f: &WaveField, p: &ProblemSpec) -> f64 {
    spectrum.weighted_sum(|k2| 0.5 * k2) + potential_integral(f, p) + 0.5 * p.beta * quartic_integral(f)
}

pub(crate) fn truncated_from_spectrum(
    spectrum: &Spectrum,
    f: &WaveField,
    p: &ProblemSpec,
    tau: f64,
    kappa: f64,
    m: TruncationBound,
    order: Order,
) -> f64 {
    let mass = norms(f).l2.powi(2);
    relaxation_term(spectrum, mass, tau, order)
        + potential_integral(f, p)
        + 0.5 * p.beta * truncated_quartic_integral(f, m)
        + kappa * (1.0 - mass)
}
