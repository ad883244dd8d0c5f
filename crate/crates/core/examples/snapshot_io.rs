//! Save a ground state as a binary snapshot, load it back, and restart from it.
//!
//!     cargo run --example snapshot_io

use relaxed_gpe::io::{read_field_snapshot_on, write_field_snapshot};
use relaxed_gpe::problems::builtin_problem;
use relaxed_gpe::solver::{solve, SolverConfig};
use relaxed_gpe::Order;

fn main() -> relaxed_gpe::Result<()> {
    let b = builtin_problem("ex2d_harmonic")?;
    let (phi, trace) = solve(&b.initial, &b.problem, &b.config)?;
    println!("order 1 at tau 1/64: {} iterations", trace.len());

    let path = std::env::temp_dir().join("ex2d_harmonic.gpef");
    write_field_snapshot(&phi, &path)?;
    let loaded = read_field_snapshot_on(&path, b.problem.grid())?;
    println!(
        "{} bytes on disk, identical after reload: {}",
        std::fs::metadata(&path).map(|m| m.len()).unwrap_or(0),
        loaded == phi
    );

    // Warm restart with the second-order scheme.
    let cfg = SolverConfig::fixed(Order::Second, 1.0 / 64.0).with_tol(1e-7);
    let (_, warm) = solve(&loaded, &b.problem, &cfg)?;
    let (_, cold) = solve(&b.initial, &b.problem, &cfg)?;
    println!("order 2: {} iterations warm, {} cold", warm.len(), cold.len());
    Ok(())
}
