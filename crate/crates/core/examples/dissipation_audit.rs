//! Energy monotonicity check of a trace, before and after writing it as CSV.
//!
//!     cargo run --example dissipation_audit -- [trace.csv]

use relaxed_gpe::harness::dissipation_audit;
use relaxed_gpe::io::{read_trace_csv, write_trace_csv};
use relaxed_gpe::problems::builtin_problem;
use relaxed_gpe::solver::solve;
use relaxed_gpe::IterationTrace;

fn report(label: &str, trace: &IterationTrace) {
    let r = dissipation_audit(trace);
    println!(
        "{label}: {} records, {} relaxed / {} original increases, largest {:.2e} / {:.2e}",
        r.checked,
        r.relaxed.len(),
        r.original.len(),
        r.max_relaxed_increase,
        r.max_original_increase
    );
}

fn main() -> relaxed_gpe::Result<()> {
    if let Some(path) = std::env::args().nth(1) {
        report(&path, &read_trace_csv(&path)?);
        return Ok(());
    }
    let b = builtin_problem("ex1d_lattice")?;
    let (_, trace) = solve(&b.initial, &b.problem, &b.config)?;
    report("in memory", &trace);

    let path = std::env::temp_dir().join("dissipation_audit_trace.csv");
    write_trace_csv(&trace, &path)?;
    report(&path.display().to_string(), &read_trace_csv(&path)?);
    Ok(())
}
