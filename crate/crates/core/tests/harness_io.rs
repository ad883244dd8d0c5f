use num_complex::Complex64;
use proptest::prelude::*;
use proptest::strategy::ValueTree;
use proptest::test_runner::TestRunner;
use relaxed_gpe::functionals::{energy_original, Order, ProblemSpec};
use relaxed_gpe::grid::{SpectralGrid, WaveField};
use relaxed_gpe::harness::{
    convergence_study, dissipation_audit, phase_align, reference_solution, Reference, Sweep,
};
use relaxed_gpe::io::{
    decode_snapshot, encode_snapshot, read_field_snapshot, read_trace_csv, write_field_snapshot, write_trace_csv,
};
use relaxed_gpe::problems::{builtin_problem, InitialConfig, PotentialConfig, ProblemConfig, SolverSection};
use relaxed_gpe::solver::{solve, SolverConfig};
use relaxed_gpe::Error;

fn small_config() -> ProblemConfig {
    ProblemConfig {
        domain: vec![[-8.0, 8.0]],
        grid_n: vec![128],
        beta: 50.0,
        omega: 0.0,
        potential: PotentialConfig::Harmonic,
        initial: InitialConfig::Gaussian { width: 1.3, center: Some(vec![0.5]) },
        solver: SolverSection::fixed(1, 0.05, 1e-10),
    }
}

fn small_reference() -> Reference {
    let b = small_config().build().unwrap();
    let cfg = SolverConfig::adaptive(Order::Second, 0.1, 1e-3, 10.0).with_tol(1e-12).with_n_max(1_000_000);
    reference_solution(&b.initial, &b.problem, &cfg).unwrap().0
}

fn random_square(runner: &mut TestRunner) -> WaveField {
    let grid = SpectralGrid::new(&[(-1.0, 1.0), (-2.0, 2.0)], &[64, 64]).unwrap();
    let values = proptest::collection::vec((any::<f64>(), -1e3..1e3f64), 64 * 64)
        .new_tree(runner)
        .unwrap()
        .current();
    let values = values.into_iter().map(|(a, b)| Complex64::new(if a.is_finite() { a } else { 0.0 }, b)).collect();
    WaveField::new(grid, values).unwrap()
}

#[test]
fn linear_reference_energy() {
    let grid = SpectralGrid::line(-8.0, 8.0, 128).unwrap();
    let p = ProblemSpec::from_fn(grid.clone(), |x| 0.5 * x[0] * x[0], 0.0, 0.0).unwrap();
    let f0 = WaveField::from_fn(grid, |x| Complex64::new((-(x[0] - 1.0).powi(2)).exp(), 0.0))
        .unwrap()
        .normalized()
        .unwrap();
    let cfg = SolverConfig::adaptive(Order::Second, 0.1, 1e-3, 10.0).with_tol(1e-12).with_n_max(1_000_000);
    let (r, _) = reference_solution(&f0, &p, &cfg).unwrap();
    assert!((r.energy - 0.5).abs() < 1e-8, "{}", r.energy);
    assert!((r.mu - 0.5).abs() < 1e-8);
}

#[test]
fn reference_snapshots_are_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    let (a, b) = (dir.path().join("a.gpef"), dir.path().join("b.gpef"));
    write_field_snapshot(&small_reference().field, &a).unwrap();
    write_field_snapshot(&small_reference().field, &b).unwrap();
    assert_eq!(std::fs::read(a).unwrap(), std::fs::read(b).unwrap());
}

#[test]
fn reference_is_stable_under_refinement() {
    let b = builtin_problem("ex1d_lattice").unwrap();
    let energy = |tau0: f64, tauf: f64| {
        let cfg = SolverConfig::adaptive(Order::Second, tau0, tauf, 10.0).with_tol(1e-12).with_n_max(1_000_000);
        reference_solution(&b.initial, &b.problem, &cfg).unwrap().0.energy
    };
    let d = (energy(0.1, 1e-3) - energy(0.05, 5e-4)).abs();
    assert!(d < 1e-7, "{d:e}");
}

#[test]
fn single_row_study_has_no_rates() {
    let report = convergence_study(&small_config(), &Sweep::Tau(vec![0.05]), &small_reference()).unwrap();
    assert_eq!(report.rows.len(), 1);
    let row = &report.rows[0];
    assert!(row.rate_phi.is_none() && row.rate_energy.is_none() && row.rate_mu.is_none());
    let line = report.to_csv().lines().nth(1).unwrap().to_string();
    assert!(line.ends_with(",,,"), "{line}");
}

#[test]
fn studies_are_reproducible_and_alignment_helps() {
    let reference = small_reference();
    let sweep = Sweep::Tau(vec![0.1, 0.05, 0.025]);
    let a = convergence_study(&small_config(), &sweep, &reference).unwrap();
    let b = convergence_study(&small_config(), &sweep, &reference).unwrap();
    assert_eq!(a.to_csv(), b.to_csv());
    for row in &a.rows {
        assert!(row.converged);
        assert!(row.err_phi <= row.err_phi_unaligned);
    }
}

#[test]
fn alignment_recovers_a_rotated_copy() {
    let r = small_reference();
    let turned = r.field.scaled(Complex64::from_polar(1.0, 2.2));
    let back = phase_align(&turned, &r.field).unwrap();
    let gap = back.values().iter().zip(r.field.values()).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max);
    assert!(gap < 1e-13);
}

#[test]
fn snapshot_round_trip_is_exact() {
    let mut runner = TestRunner::deterministic();
    let dir = tempfile::tempdir().unwrap();
    for k in 0..4 {
        let f = random_square(&mut runner);
        let path = dir.path().join(format!("f{k}.gpef"));
        write_field_snapshot(&f, &path).unwrap();
        let g = read_field_snapshot(&path).unwrap();
        assert_eq!(f.grid(), g.grid());
        for (a, b) in f.values().iter().zip(g.values()) {
            assert_eq!(a.re.to_bits(), b.re.to_bits());
            assert_eq!(a.im.to_bits(), b.im.to_bits());
        }
    }
}

#[test]
fn corrupt_snapshots_are_rejected() {
    let mut runner = TestRunner::deterministic();
    let bytes = encode_snapshot(&random_square(&mut runner));
    assert!(matches!(decode_snapshot(&bytes[..bytes.len() - 3]), Err(Error::Format(_))));
    let mut bad = bytes.clone();
    bad[0] = b'X';
    assert!(matches!(decode_snapshot(&bad), Err(Error::Format(_))));
}

#[test]
fn lattice_run_audits_clean_after_round_trip() {
    let b = builtin_problem("ex1d_lattice").unwrap();
    let (f, trace) = solve(&b.initial, &b.problem, &b.config).unwrap();
    assert!(trace.converged());
    assert!(dissipation_audit(&trace).is_clean());
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("trace.csv");
    write_trace_csv(&trace, &path).unwrap();
    let back = read_trace_csv(&path).unwrap();
    assert_eq!(back.records, trace.records);
    assert!(dissipation_audit(&back).is_clean());
    assert!((energy_original(&f, &b.problem).unwrap() - 26.0845).abs() < 1e-3);
}
