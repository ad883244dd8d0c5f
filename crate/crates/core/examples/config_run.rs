//! Run a problem described by a TOML file (defaults to configs/double_well.toml).
//!
//!     cargo run --example config_run -- [path.toml]

use relaxed_gpe::functionals::{chemical_potential, energy_original};
use relaxed_gpe::problems::load_config;
use relaxed_gpe::solver::solve;

fn main() -> relaxed_gpe::Result<()> {
    let path = std::env::args()
        .nth(1)
        .unwrap_or_else(|| concat!(env!("CARGO_MANIFEST_DIR"), "/examples/configs/double_well.toml").into());
    let config = load_config(&path)?;
    let b = config.build()?;
    let (phi, trace) = solve(&b.initial, &b.problem, &b.config)?;
    println!(
        "{path}: {} iterations, converged {}, E = {:.10}, mu = {:.10}",
        trace.len(),
        trace.converged(),
        energy_original(&phi, &b.problem)?,
        chemical_potential(&phi, &b.problem)?
    );
    print!("{}", config.to_toml());
    Ok(())
}
