use std::sync::Arc;

use num_complex::Complex64;
use proptest::prelude::*;
use relaxed_gpe::functionals::{Order, ProblemSpec};
use relaxed_gpe::grid::{norms, SpectralGrid, WaveField};
use relaxed_gpe::rotating::{
    angular_momentum, apply_rotating_semigroup, rotating_energy_original, rotating_relaxed_energy, RotationSpec,
};

fn square(n: usize) -> Arc<SpectralGrid> {
    SpectralGrid::new(&[(-6.0, 6.0), (-6.0, 6.0)], &[n, n]).unwrap()
}

fn blob(grid: &Arc<SpectralGrid>, cx: f64, cy: f64, twist: f64) -> WaveField {
    WaveField::from_fn(grid.clone(), |x| {
        let (dx, dy) = (x[0] - cx, x[1] - cy);
        Complex64::new(dx, twist * dy) * (-0.5 * (dx * dx + dy * dy)).exp()
            + Complex64::new(0.5 * (-(x[0] * x[0] + x[1] * x[1])).exp(), 0.0)
    })
    .unwrap()
    .normalized()
    .unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn split_flow_contracts(cx in -1.0..1.0f64, cy in -1.0..1.0f64, twist in -1.0..1.0f64, s in 0.0..0.2f64, omega in 0.0..1.0f64) {
        let f = blob(&square(32), cx, cy, twist);
        let g = apply_rotating_semigroup(&f, s, &RotationSpec::new(omega).unwrap()).unwrap();
        prop_assert!(norms(&g).l2 <= 1.0 + 1e-12);
    }

    #[test]
    fn angular_momentum_flips_under_conjugation(cx in -1.0..1.0f64, cy in -1.0..1.0f64, twist in -1.0..1.0f64) {
        let f = blob(&square(32), cx, cy, twist);
        let conj = WaveField::new(f.grid().clone(), f.values().iter().map(|z| z.conj()).collect()).unwrap();
        let (a, b) = (angular_momentum(&f).unwrap(), angular_momentum(&conj).unwrap());
        prop_assert!((a + b).abs() < 1e-12);
    }
}

#[test]
fn rotating_relaxation_consistency_orders() {
    let grid = square(64);
    let p = ProblemSpec::from_fn(grid.clone(), |x| 0.5 * (x[0] * x[0] + x[1] * x[1]), 20.0, 0.6).unwrap();
    let f = blob(&grid, 0.3, -0.2, 0.7);
    let e = rotating_energy_original(&f, &p).unwrap();
    let taus: Vec<f64> = (6..=9).map(|k| 1.0 / f64::powi(2.0, k)).collect();
    for (order, lo, hi) in [(Order::First, 0.8, 1.2), (Order::Second, 1.8, 2.2)] {
        let gaps: Vec<f64> = taus
            .iter()
            .map(|&t| (rotating_relaxed_energy(&f, &p, t, 0.0, order).unwrap() - e).abs())
            .collect();
        for w in gaps.windows(2) {
            let rate = (w[0] / w[1]).log2();
            assert!(rate >= lo && rate <= hi, "{order:?}: rate {rate}");
        }
    }
}

#[test]
fn counter_rotation_lowers_vortex_energy() {
    let grid = square(64);
    let vortex = WaveField::from_fn(grid.clone(), |x| {
        Complex64::new(x[0], x[1]) * (-0.5 * (x[0] * x[0] + x[1] * x[1])).exp()
    })
    .unwrap()
    .normalized()
    .unwrap();
    let harmonic = |x: &[f64]| 0.5 * (x[0] * x[0] + x[1] * x[1]);
    let still = ProblemSpec::from_fn(grid.clone(), harmonic, 10.0, 0.0).unwrap();
    let spun = ProblemSpec::from_fn(grid, harmonic, 10.0, 0.4).unwrap();
    let gap = rotating_energy_original(&vortex, &still).unwrap() - rotating_energy_original(&vortex, &spun).unwrap();
    assert!((gap - 0.4).abs() < 1e-10, "{gap}");
}
