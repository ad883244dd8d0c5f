//! How far the relaxed energy sits below the Gross-Pitaevskii energy as τ shrinks,
//! evaluated at the converged 2D harmonic ground state.
//!
//!     cargo run --example relaxation_gap_2d

use relaxed_gpe::harness::relaxation_gaps;
use relaxed_gpe::problems::builtin_problem;
use relaxed_gpe::solver::{solve, SolverConfig};
use relaxed_gpe::Order;

fn main() -> relaxed_gpe::Result<()> {
    let b = builtin_problem("ex2d_harmonic")?;
    let taus: Vec<f64> = [16.0, 32.0, 64.0, 128.0, 256.0].iter().map(|d| 1.0 / d).collect();

    for order in [Order::First, Order::Second] {
        let cfg = SolverConfig::fixed(order, 1.0 / 64.0).with_tol(1e-7);
        let (phi, trace) = solve(&b.initial, &b.problem, &cfg)?;
        println!("order {} ground state after {} iterations", order.number(), trace.len());
        let gaps = relaxation_gaps(&phi, &b.problem, &taus, order)?;
        for (i, (tau, gap)) in taus.iter().zip(&gaps).enumerate() {
            let ratio = if i > 0 { format!("{:.3}", gaps[i - 1] / gap) } else { "-".into() };
            println!("  tau 1/{:<4} gap {gap:.3e}  ratio {ratio}", (1.0 / tau).round());
        }
    }
    Ok(())
}
