//! Built-in experiments and the TOML run configuration.
//!
//! A run is one document:
//!
//! ```toml
//! domain = [[-8.0, 8.0], [-8.0, 8.0]]
//! grid_n = [128, 128]
//! beta = 300.0
//! omega = 0.0
//!
//! [potential]
//! name = "harmonic"
//!
//! [initial]
//! name = "gaussian"
//! width = 1.0
//!
//! [solver]
//! order = 1
//! tau = 0.015625
//! tol = 1e-7
//! ```
//!
//! `[solver]` takes either `tau` or all of `tau0`, `tauf`, `r`; `kappa` is
//! `"adaptive"` (default), `"theory_safe"` or a number.

use std::f64::consts::PI;
use std::path::Path;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::functionals::{KappaRule, Order, ProblemSpec};
use crate::grid::{SpectralGrid, WaveField};
use crate::solver::{SolverConfig, TauSchedule};

pub const BUILTIN_NAMES: [&str; 3] = ["ex1d_lattice", "ex2d_harmonic", "ex2d_rotating"];

/// External potential, from a closed set of parameterized families.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "name", rename_all = "snake_case", deny_unknown_fields)]
pub enum PotentialConfig {
    /// `|x|²/2`.
    Harmonic,
    /// `|x|²/2 + amplitude Σ sin²(π x_i / period)`.
    HarmonicLattice { amplitude: f64, period: f64 },
    /// `Σ γ_i² x_i² / 2`.
    AnisotropicHarmonic { gamma: Vec<f64> },
}

/// Initial state; always normalized in the discrete L² norm.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "name", rename_all = "snake_case", deny_unknown_fields)]
pub enum InitialConfig {
    /// `exp(-|x - center|² / (2 width²))`.
    Gaussian {
        #[serde(default = "default_width")]
        width: f64,
        #[serde(default)]
        center: Option<Vec<f64>>,
    },
    /// `(1-Ω)φ_a + Ωφ_b` with `φ_a = (γ_xγ_y)^{1/4} e^{-V}/√π` and
    /// `φ_b = (γ_x - iγ_y y) e^{-V}/√π`, using the problem's `V` and `Ω`.
    GaussianVortexMix { gamma: [f64; 2] },
}

fn default_width() -> f64 {
    1.0
}

/// `"adaptive"`, `"theory_safe"` or a fixed number.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum KappaSetting {
    Named(String),
    Fixed(f64),
}

impl Default for KappaSetting {
    fn default() -> Self {
        KappaSetting::Named("adaptive".into())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolverSection {
    #[serde(default = "default_order")]
    pub order: u32,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tau: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tau0: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tauf: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub r: Option<f64>,
    #[serde(default = "default_tol")]
    pub tol: f64,
    #[serde(default = "default_n_max")]
    pub n_max: usize,
    #[serde(default)]
    pub kappa: KappaSetting,
    /// Rotating runs only: use the truncated nonlinearity in the update.
    #[serde(default)]
    pub truncate: bool,
}

fn default_order() -> u32 {
    1
}
fn default_tol() -> f64 {
    1e-12
}
fn default_n_max() -> usize {
    80_000
}

impl SolverSection {
    pub fn fixed(order: u32, tau: f64, tol: f64) -> Self {
        SolverSection {
            order,
            tau: Some(tau),
            tau0: None,
            tauf: None,
            r: None,
            tol,
            n_max: default_n_max(),
            kappa: KappaSetting::default(),
            truncate: false,
        }
    }

    pub fn adaptive(order: u32, tau0: f64, tauf: f64, r: f64, tol: f64) -> Self {
        SolverSection {
            tau: None,
            tau0: Some(tau0),
            tauf: Some(tauf),
            r: Some(r),
            ..SolverSection::fixed(order, tau0, tol)
        }
    }

    pub fn to_config(&self) -> Result<SolverConfig> {
        let order = Order::from_number(self.order).map_err(|e| Error::config("solver.order", e.to_string()))?;
        let schedule = match (self.tau, self.tau0, self.tauf, self.r) {
            (Some(tau), None, None, None) => TauSchedule::Fixed(tau),
            (None, Some(tau0), Some(tauf), Some(ratio)) => TauSchedule::Adaptive { tau0, tauf, ratio },
            (None, None, None, None) => {
                return Err(Error::config("solver.tau", "give either `tau` or `tau0`, `tauf` and `r`"))
            }
            (Some(_), ..) => {
                return Err(Error::config("solver.tau", "`tau` cannot be combined with `tau0`/`tauf`/`r`"))
            }
            _ => return Err(Error::config("solver.tau0", "adaptive runs need all of `tau0`, `tauf` and `r`")),
        };
        let kappa_rule = match &self.kappa {
            KappaSetting::Named(s) if s == "adaptive" => KappaRule::Adaptive,
            KappaSetting::Named(s) if s == "theory_safe" => KappaRule::TheorySafe,
            KappaSetting::Named(s) => {
                return Err(Error::config(
                    "solver.kappa",
                    format!("unknown rule `{s}`; expected \"adaptive\", \"theory_safe\" or a number"),
                ))
            }
            KappaSetting::Fixed(k) => KappaRule::Fixed(*k),
        };
        let cfg = SolverConfig {
            order,
            schedule,
            tol: self.tol,
            n_max: self.n_max,
            kappa_rule,
        };
        cfg.validate().map_err(|e| Error::config("solver", e.to_string()))?;
        Ok(cfg)
    }
}

/// One complete run description.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProblemConfig {
    pub domain: Vec<[f64; 2]>,
    pub grid_n: Vec<usize>,
    pub beta: f64,
    #[serde(default)]
    pub omega: f64,
    pub potential: PotentialConfig,
    pub initial: InitialConfig,
    pub solver: SolverSection,
}

/// A fully built run: problem, normalized initial state and solver settings.
#[derive(Clone, Debug)]
pub struct Problem {
    pub problem: ProblemSpec,
    pub initial: WaveField,
    pub config: SolverConfig,
    /// Rotating runs only; see [`SolverSection::truncate`].
    pub truncate: bool,
}

impl ProblemConfig {
    /// The configuration behind a built-in experiment.
    pub fn builtin(name: &str) -> Result<Self> {
        let cfg = match name {
            // h = 1/128 on [-16, 16].
            "ex1d_lattice" => ProblemConfig {
                domain: vec![[-16.0, 16.0]],
                grid_n: vec![4096],
                beta: 250.0,
                omega: 0.0,
                potential: PotentialConfig::HarmonicLattice {
                    amplitude: 25.0,
                    period: 4.0,
                },
                initial: InitialConfig::Gaussian {
                    width: 1.0,
                    center: None,
                },
                solver: SolverSection::fixed(1, 1.0 / 20.0, 1e-12),
            },
            "ex2d_harmonic" => ProblemConfig {
                domain: vec![[-8.0, 8.0], [-8.0, 8.0]],
                grid_n: vec![128, 128],
                beta: 300.0,
                omega: 0.0,
                potential: PotentialConfig::Harmonic,
                initial: InitialConfig::Gaussian {
                    width: 1.0,
                    center: None,
                },
                solver: SolverSection::fixed(1, 1.0 / 64.0, 1e-7),
            },
            "ex2d_rotating" => ProblemConfig {
                domain: vec![[-12.0, 12.0], [-12.0, 12.0]],
                grid_n: vec![128, 128],
                beta: 1000.0,
                omega: 0.5,
                potential: PotentialConfig::AnisotropicHarmonic {
                    gamma: vec![1.05, 0.95],
                },
                initial: InitialConfig::GaussianVortexMix { gamma: [1.05, 0.95] },
                solver: SolverSection::adaptive(1, 1.0 / 64.0, 1.0 / 128.0, 2.0, 2e-3),
            },
            other => {
                return Err(Error::argument(format!(
                    "unknown builtin `{other}`; expected one of {}",
                    BUILTIN_NAMES.join(", ")
                )))
            }
        };
        Ok(cfg)
    }

    /// Parses a TOML document; errors name the offending key and line.
    pub fn from_toml(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| {
            let key = offending_key(e.message()).unwrap_or_else(|| "<document>".into());
            let line = e.span().map(|s| text[..s.start.min(text.len())].matches('\n').count() + 1);
            let message = match line {
                Some(l) => format!("line {l}: {}", e.message().trim()),
                None => e.message().trim().to_string(),
            };
            Error::config(key, message)
        })
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config is always representable")
    }

    pub fn grid(&self) -> Result<std::sync::Arc<SpectralGrid>> {
        if self.domain.len() != self.grid_n.len() {
            return Err(Error::config(
                "grid_n",
                format!("{} axes in `domain` but {} in `grid_n`", self.domain.len(), self.grid_n.len()),
            ));
        }
        let bounds: Vec<(f64, f64)> = self.domain.iter().map(|b| (b[0], b[1])).collect();
        SpectralGrid::new(&bounds, &self.grid_n).map_err(|e| Error::config("domain", e.to_string()))
    }

    pub fn build(&self) -> Result<Problem> {
        let grid = self.grid()?;
        let dim = grid.dim();
        let potential = match &self.potential {
            PotentialConfig::Harmonic => grid.sample(|x| 0.5 * x.iter().map(|v| v * v).sum::<f64>()),
            PotentialConfig::HarmonicLattice { amplitude, period } => {
                if !(*amplitude >= 0.0 && *period > 0.0) {
                    return Err(Error::config(
                        "potential",
                        "lattice needs amplitude >= 0 and period > 0",
                    ));
                }
                grid.sample(|x| {
                    x.iter()
                        .map(|v| 0.5 * v * v + amplitude * (PI * v / period).sin().powi(2))
                        .sum()
                })
            }
            PotentialConfig::AnisotropicHarmonic { gamma } => {
                if gamma.len() != dim || gamma.iter().any(|g| !(*g > 0.0)) {
                    return Err(Error::config(
                        "potential.gamma",
                        format!("needs {dim} positive entries"),
                    ));
                }
                grid.sample(|x| 0.5 * x.iter().zip(gamma).map(|(v, g)| g * g * v * v).sum::<f64>())
            }
        };
        let problem = ProblemSpec::new(grid.clone(), potential, self.beta, self.omega)
            .map_err(|e| Error::config("beta", e.to_string()))?;
        let initial = self.initial_field(&problem)?;
        let config = self.solver.to_config()?;
        Ok(Problem {
            problem,
            initial,
            config,
            truncate: self.solver.truncate,
        })
    }

    fn initial_field(&self, p: &ProblemSpec) -> Result<WaveField> {
        let grid = p.grid().clone();
        let raw = match &self.initial {
            InitialConfig::Gaussian { width, center } => {
                let c = center.clone().unwrap_or_else(|| vec![0.0; grid.dim()]);
                if c.len() != grid.dim() || !(*width > 0.0) {
                    return Err(Error::config(
                        "initial",
                        "gaussian needs width > 0 and one center coordinate per axis",
                    ));
                }
                let values = grid.sample(|x| {
                    let r2: f64 = x.iter().zip(&c).map(|(a, b)| (a - b) * (a - b)).sum();
                    (-0.5 * r2 / (width * width)).exp()
                });
                WaveField::from_real(grid, &values)?
            }
            InitialConfig::GaussianVortexMix { gamma } => {
                if grid.dim() != 2 {
                    return Err(Error::config("initial", "gaussian_vortex_mix needs a 2D grid"));
                }
                let omega = p.omega();
                let [gx, gy] = *gamma;
                let ys = grid.coords(1);
                let n1 = ys.len();
                let values = p
                    .potential()
                    .iter()
                    .enumerate()
                    .map(|(j, v)| {
                        let envelope = (-v).exp() / PI.sqrt();
                        let a = Complex64::new((gx * gy).powf(0.25), 0.0);
                        let b = Complex64::new(gx, -gy * ys[j % n1]);
                        (a * (1.0 - omega) + b * omega) * envelope
                    })
                    .collect();
                WaveField::new(grid, values)?
            }
        };
        raw.normalized()
            .map_err(|e| Error::config("initial", format!("cannot normalize initial state: {e}")))
    }
}

fn offending_key(message: &str) -> Option<String> {
    let start = message.find('`')? + 1;
    let len = message[start..].find('`')?;
    Some(message[start..start + len].to_string())
}

/// Builds one of [`BUILTIN_NAMES`].
pub fn builtin_problem(name: &str) -> Result<Problem> {
    ProblemConfig::builtin(name)?.build()
}

/// Reads and parses a TOML run configuration.
pub fn load_config(path: impl AsRef<Path>) -> Result<ProblemConfig> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    ProblemConfig::from_toml(&text)
}
