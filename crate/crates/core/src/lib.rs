//! Ground states of Bose–Einstein condensates by sequential linear programming
//! on concave relaxations of the Gross–Pitaevskii energy.
//!
//! The Laplacian term `∫½|∇φ|²` is replaced by heat-semigroup quadratic forms
//! (first or second order in `τ`), the quartic term is truncated above an
//! amplitude bound `M`, and `-κ‖φ‖² + κ` makes the whole functional concave on
//! the unit ball. Each solver step then minimizes a linear model over the ball,
//! which has the closed form "apply a Fourier multiplier, add a pointwise term,
//! normalize".
//!
//! ```no_run
//! use relaxed_gpe::problems::builtin_problem;
//! use relaxed_gpe::solver::solve;
//!
//! let b = builtin_problem("ex1d_lattice").unwrap();
//! let (phi, trace) = solve(&b.initial, &b.problem, &b.config).unwrap();
//! println!("{} iterations, E = {}", trace.len(), trace.last().unwrap().original_energy);
//! # let _ = phi;
//! ```

pub mod cli;
pub mod error;
pub mod functionals;
pub mod grid;
pub mod harness;
pub mod io;
pub mod problems;
pub mod rotating;
pub mod solver;

pub use error::{Error, Result};
pub use functionals::{KappaRule, Order, ProblemSpec, TruncationBound};
pub use grid::{SpectralGrid, WaveField};
pub use solver::{IterationTrace, SolverConfig, TauSchedule};
