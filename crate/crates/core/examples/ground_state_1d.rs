//! Ground state of the 1D harmonic-plus-lattice condensate at a fixed relaxation
//! parameter, with both relaxation orders.
//!
//!     cargo run --example ground_state_1d -- [tau]

use relaxed_gpe::functionals::{chemical_potential, energy_original};
use relaxed_gpe::problems::builtin_problem;
use relaxed_gpe::solver::{solve, SolverConfig};
use relaxed_gpe::Order;

fn main() -> relaxed_gpe::Result<()> {
    let tau: f64 = std::env::args().nth(1).map_or(1.0 / 20.0, |s| s.parse().expect("tau"));
    let b = builtin_problem("ex1d_lattice")?;

    for order in [Order::First, Order::Second] {
        let cfg = SolverConfig::fixed(order, tau).with_tol(1e-12);
        let start = std::time::Instant::now();
        let (phi, trace) = solve(&b.initial, &b.problem, &cfg)?;
        println!(
            "order {}  tau {tau}: {} iterations in {:.2?} ({})",
            order.number(),
            trace.len(),
            start.elapsed(),
            if trace.converged() { "converged" } else { "hit n_max" }
        );
        println!(
            "  E = {:.12}  mu = {:.12}  max|phi| = {:.6}",
            energy_original(&phi, &b.problem)?,
            chemical_potential(&phi, &b.problem)?,
            phi.values().iter().map(|z| z.norm()).fold(0.0, f64::max)
        );
    }
    Ok(())
}
