//! Adaptive τ continuation: each stage starts from the previous stage's iterate,
//! so the small-τ stages only polish an already good state.
//!
//!     cargo run --example adaptive_continuation

use relaxed_gpe::functionals::energy_original;
use relaxed_gpe::problems::builtin_problem;
use relaxed_gpe::solver::{solve, solve_with_stages, SolverConfig};
use relaxed_gpe::Order;

fn main() -> relaxed_gpe::Result<()> {
    let b = builtin_problem("ex1d_lattice")?;
    let cfg = SolverConfig::adaptive(Order::Second, 0.1, 1e-3, 10.0).with_tol(1e-12).with_n_max(1_000_000);

    let (fields, trace) = solve_with_stages(&b.initial, &b.problem, &cfg)?;
    for (mark, phi) in trace.stages.iter().zip(&fields) {
        let next = trace.stages.get(mark.stage + 1).map_or(trace.len() + 1, |m| m.first_iter);
        println!(
            "stage {}  tau {:<6} {:>5} iterations  {:?}  E = {:.12}",
            mark.stage,
            mark.tau,
            next - mark.first_iter,
            mark.status,
            energy_original(phi, &b.problem)?
        );
    }

    // Going straight to the final τ from the initial Gaussian.
    let direct = SolverConfig::fixed(Order::Second, 1e-3).with_tol(1e-12).with_n_max(1_000_000);
    let (_, t) = solve(&b.initial, &b.problem, &direct)?;
    println!("direct run at tau 0.001: {} iterations ({} with continuation)", t.len(), trace.len());
    Ok(())
}
