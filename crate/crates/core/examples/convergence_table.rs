//! Temporal convergence of both relaxation orders on the 1D lattice problem,
//! measured against an order-2 continuation reference.
//!
//!     cargo run --example convergence_table

use std::time::Instant;

use relaxed_gpe::harness::{convergence_study, reference_config, reference_solution, Sweep};
use relaxed_gpe::problems::{builtin_problem, ProblemConfig};

fn main() -> relaxed_gpe::Result<()> {
    let base = builtin_problem("ex1d_lattice")?;
    let start = Instant::now();
    let (reference, trace) = reference_solution(&base.initial, &base.problem, &reference_config())?;
    println!(
        "reference: {} iterations, {:.1?}, E = {:.14}, mu = {:.14}",
        trace.len(),
        start.elapsed(),
        reference.energy,
        reference.mu
    );

    let sweep = Sweep::Tau(vec![1.0 / 20.0, 1.0 / 40.0, 1.0 / 80.0, 1.0 / 160.0, 1.0 / 320.0]);
    for order in [1, 2] {
        let mut cfg = ProblemConfig::builtin("ex1d_lattice")?;
        cfg.solver.order = order;
        let start = Instant::now();
        let report = convergence_study(&cfg, &sweep, &reference)?;
        println!("\norder {order} ({:.1?})", start.elapsed());
        print!("{}", report.to_csv());
    }
    Ok(())
}
