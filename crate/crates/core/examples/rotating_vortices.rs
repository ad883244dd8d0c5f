//! Fast-rotating anisotropic trap: the relaxed split-step scheme nucleates
//! vortices from a single-vortex mixture. Prints a coarse density map.
//!
//!     cargo run --release --example rotating_vortices -- [omega]

use relaxed_gpe::problems::ProblemConfig;
use relaxed_gpe::rotating::{angular_momentum, rotating_energy_original, run_rotating};

fn main() -> relaxed_gpe::Result<()> {
    let mut config = ProblemConfig::builtin("ex2d_rotating")?;
    if let Some(omega) = std::env::args().nth(1) {
        config.omega = omega.parse().expect("omega");
    }
    let b = config.build()?;
    let start = std::time::Instant::now();
    let (phi, trace) = run_rotating(&b.initial, &b.problem, &b.config, None)?;
    println!(
        "omega {}: {} iterations in {:.1?}, converged {}",
        config.omega,
        trace.len(),
        start.elapsed(),
        trace.converged()
    );
    println!(
        "E = {:.6}  <L_z> = {:.4}",
        rotating_energy_original(&phi, &b.problem)?,
        angular_momentum(&phi)?
    );

    let n = config.grid_n[0];
    let rho = phi.density();
    let peak = rho.iter().cloned().fold(0.0, f64::max);
    let shades = [' ', '.', ':', '-', '=', '+', '*', '#', '%', '@'];
    for i in (n / 4..3 * n / 4).step_by(2) {
        let row: String = (n / 4..3 * n / 4)
            .map(|j| shades[((rho[j * n + i] / peak) * 9.0).round() as usize])
            .collect();
        println!("{row}");
    }
    Ok(())
}
