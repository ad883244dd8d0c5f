//! Periodic pseudospectral discretization.
//!
//! A [`SpectralGrid`] is a uniform tensor grid on a rectangle `[a_0,b_0) x [a_1,b_1)`
//! (one or two axes) with periodic wrap-around. Fields living on it are stored
//! row-major: in 2D the value at `(x_i, y_j)` sits at `i * n_y + j`.
//!
//! Discrete integrals carry the quadrature weight `h^d`, so the continuum
//! constraint `∫|φ|² = 1` becomes `h^d Σ|φ_j|² = 1`. Differential operators act
//! through the FFT; the heat semigroup `e^{sΔ}` is the exact Fourier multiplier
//! `e^{-s|k|²}` of the discrete spectral Laplacian.

use std::f64::consts::PI;
use std::fmt;
use std::sync::Arc;

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use crate::error::{Error, Result};

const MIN_POINTS: usize = 4;

#[derive(Clone)]
struct AxisPlan {
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
}

/// Uniform periodic grid in one or two dimensions.
#[derive(Clone)]
pub struct SpectralGrid {
    n: Vec<usize>,
    bounds: Vec<(f64, f64)>,
    spacing: Vec<f64>,
    wavenumbers: Vec<Vec<f64>>,
    k_squared: Vec<f64>,
    plans: Vec<AxisPlan>,
}

impl fmt::Debug for SpectralGrid {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("SpectralGrid")
            .field("n", &self.n)
            .field("bounds", &self.bounds)
            .field("spacing", &self.spacing)
            .finish()
    }
}

impl PartialEq for SpectralGrid {
    fn eq(&self, other: &Self) -> bool {
        self.n == other.n && self.bounds == other.bounds
    }
}

/// Wavenumbers `2πm/L` in standard FFT order: `0, 1, ..., n/2-1, -n/2, ..., -1`.
pub fn fft_wavenumbers(n: usize, length: f64) -> Vec<f64> {
    let dk = 2.0 * PI / length;
    (0..n)
        .map(|i| {
            let m = if i < n / 2 { i as i64 } else { i as i64 - n as i64 };
            m as f64 * dk
        })
        .collect()
}

impl SpectralGrid {
    /// Builds a grid with `n[i]` points on `[bounds[i].0, bounds[i].1)`.
    pub fn new(bounds: &[(f64, f64)], n: &[usize]) -> Result<Arc<Self>> {
        if bounds.is_empty() || bounds.len() > 2 {
            return Err(Error::argument(format!(
                "grid dimension must be 1 or 2, got {}",
                bounds.len()
            )));
        }
        if bounds.len() != n.len() {
            return Err(Error::argument("bounds and point counts differ in length"));
        }
        for (axis, (&(a, b), &count)) in bounds.iter().zip(n).enumerate() {
            if !(a.is_finite() && b.is_finite() && b > a) {
                return Err(Error::argument(format!(
                    "axis {axis}: interval [{a}, {b}) is empty or non-finite"
                )));
            }
            if count < MIN_POINTS || !count.is_power_of_two() {
                return Err(Error::argument(format!(
                    "axis {axis}: point count {count} must be a power of two >= {MIN_POINTS}"
                )));
            }
        }

        let mut planner = FftPlanner::new();
        let plans = n
            .iter()
            .map(|&count| AxisPlan {
                forward: planner.plan_fft_forward(count),
                inverse: planner.plan_fft_inverse(count),
            })
            .collect();
        let spacing: Vec<f64> = bounds
            .iter()
            .zip(n)
            .map(|(&(a, b), &count)| (b - a) / count as f64)
            .collect();
        let wavenumbers: Vec<Vec<f64>> = bounds
            .iter()
            .zip(n)
            .map(|(&(a, b), &count)| fft_wavenumbers(count, b - a))
            .collect();
        let k_squared = match wavenumbers.as_slice() {
            [kx] => kx.iter().map(|k| k * k).collect(),
            [kx, ky] => kx
                .iter()
                .flat_map(|a| ky.iter().map(move |b| a * a + b * b))
                .collect(),
            _ => unreachable!(),
        };

        Ok(Arc::new(SpectralGrid {
            n: n.to_vec(),
            bounds: bounds.to_vec(),
            spacing,
            wavenumbers,
            k_squared,
            plans,
        }))
    }

    /// One-dimensional grid on `[a, b)`.
    pub fn line(a: f64, b: f64, n: usize) -> Result<Arc<Self>> {
        Self::new(&[(a, b)], &[n])
    }

    /// Square 2D grid `[a, b)²` with `n` points per axis.
    pub fn square(a: f64, b: f64, n: usize) -> Result<Arc<Self>> {
        Self::new(&[(a, b), (a, b)], &[n, n])
    }

    /// Builds a grid from a target spacing; `(b - a) / h` must be a power of two.
    pub fn with_spacing(bounds: &[(f64, f64)], h: f64) -> Result<Arc<Self>> {
        if !(h > 0.0 && h.is_finite()) {
            return Err(Error::argument(format!("spacing must be positive, got {h}")));
        }
        let n = bounds
            .iter()
            .map(|&(a, b)| {
                let ratio = (b - a) / h;
                let count = ratio.round();
                if (ratio - count).abs() > 1e-9 * ratio.max(1.0) || count < 1.0 {
                    Err(Error::argument(format!(
                        "spacing {h} does not divide interval [{a}, {b})"
                    )))
                } else {
                    Ok(count as usize)
                }
            })
            .collect::<Result<Vec<_>>>()?;
        Self::new(bounds, &n)
    }

    pub fn dim(&self) -> usize {
        self.n.len()
    }

    pub fn points(&self) -> &[usize] {
        &self.n
    }

    pub fn bounds(&self) -> &[(f64, f64)] {
        &self.bounds
    }

    pub fn spacing(&self) -> &[f64] {
        &self.spacing
    }

    /// Total number of grid points.
    pub fn len(&self) -> usize {
        self.n.iter().product()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Quadrature weight `h^d` (product of the per-axis spacings).
    pub fn cell_volume(&self) -> f64 {
        self.spacing.iter().product()
    }

    /// Lebesgue measure `|D|` of the domain.
    pub fn measure(&self) -> f64 {
        self.bounds.iter().map(|(a, b)| b - a).product()
    }

    pub fn wavenumbers(&self, axis: usize) -> &[f64] {
        &self.wavenumbers[axis]
    }

    /// `|k|²` for every Fourier mode, flattened in the same row-major order as fields.
    pub fn k_squared(&self) -> &[f64] {
        &self.k_squared
    }

    /// Node coordinates along one axis.
    pub fn coords(&self, axis: usize) -> Vec<f64> {
        let (a, _) = self.bounds[axis];
        let h = self.spacing[axis];
        (0..self.n[axis]).map(|i| a + i as f64 * h).collect()
    }

    /// Samples a real function at every node, row-major.
    pub fn sample(&self, f: impl Fn(&[f64]) -> f64) -> Vec<f64> {
        match self.dim() {
            1 => self.coords(0).iter().map(|&x| f(&[x])).collect(),
            _ => {
                let xs = self.coords(0);
                let ys = self.coords(1);
                xs.iter()
                    .flat_map(|&x| ys.iter().map(move |&y| [x, y]))
                    .map(|p| f(&p))
                    .collect()
            }
        }
    }

    /// Samples a complex function at every node, row-major.
    pub fn sample_complex(&self, f: impl Fn(&[f64]) -> Complex64) -> Vec<Complex64> {
        match self.dim() {
            1 => self.coords(0).iter().map(|&x| f(&[x])).collect(),
            _ => {
                let xs = self.coords(0);
                let ys = self.coords(1);
                xs.iter()
                    .flat_map(|&x| ys.iter().map(move |&y| [x, y]))
                    .map(|p| f(&p))
                    .collect()
            }
        }
    }

    /// Grid quadrature `h^d Σ v_j`.
    pub fn integrate(&self, values: &[f64]) -> f64 {
        self.cell_volume() * values.iter().sum::<f64>()
    }

    /// In-place forward transform over every axis (unnormalized).
    pub(crate) fn forward(&self, data: &mut [Complex64]) {
        for axis in (0..self.dim()).rev() {
            self.transform_axis(data, axis, false);
        }
    }

    /// In-place inverse transform over every axis, including the `1/N` factor.
    pub(crate) fn inverse(&self, data: &mut [Complex64]) {
        for axis in 0..self.dim() {
            self.transform_axis(data, axis, true);
        }
        let scale = 1.0 / self.len() as f64;
        data.iter_mut().for_each(|v| *v *= scale);
    }

    /// Applies, along a single axis, the Fourier multiplier `mult(line, mode)` where
    /// `line` indexes the position along the other axis (always 0 in 1D) and `mode`
    /// indexes the wavenumber along `axis`.
    pub(crate) fn filter_axis(
        &self,
        data: &mut [Complex64],
        axis: usize,
        mult: impl Fn(usize, usize) -> f64,
    ) {
        let n_axis = self.n[axis];
        let plan = &self.plans[axis];
        let mut scratch = vec![Complex64::default(); plan.forward.get_inplace_scratch_len()];
        let scale = 1.0 / n_axis as f64;
        let apply = |line_idx: usize, buf: &mut [Complex64], scratch: &mut [Complex64]| {
            plan.forward.process_with_scratch(buf, scratch);
            for (m, v) in buf.iter_mut().enumerate() {
                *v *= mult(line_idx, m) * scale;
            }
            plan.inverse.process_with_scratch(buf, scratch);
        };
        self.for_each_line(data, axis, |line_idx, buf| apply(line_idx, buf, &mut scratch));
    }

    fn transform_axis(&self, data: &mut [Complex64], axis: usize, inverse: bool) {
        let plan = &self.plans[axis];
        let fft = if inverse { &plan.inverse } else { &plan.forward };
        let mut scratch = vec![Complex64::default(); fft.get_inplace_scratch_len()];
        self.for_each_line(data, axis, |_, buf| fft.process_with_scratch(buf, &mut scratch));
    }

    /// Visits every 1D line along `axis`; strided lines are gathered into a buffer
    /// and scattered back.
    fn for_each_line(
        &self,
        data: &mut [Complex64],
        axis: usize,
        mut visit: impl FnMut(usize, &mut [Complex64]),
    ) {
        debug_assert_eq!(data.len(), self.len());
        let n_axis = self.n[axis];
        if self.dim() == 1 {
            visit(0, data);
        } else if axis == 1 {
            for (row, chunk) in data.chunks_exact_mut(n_axis).enumerate() {
                visit(row, chunk);
            }
        } else {
            let stride = self.n[1];
            let mut buf = vec![Complex64::default(); n_axis];
            for col in 0..stride {
                for (i, b) in buf.iter_mut().enumerate() {
                    *b = data[i * stride + col];
                }
                visit(col, &mut buf);
                for (i, b) in buf.iter().enumerate() {
                    data[i * stride + col] = *b;
                }
            }
        }
    }
}

/// A complex grid function.
#[derive(Clone, Debug)]
pub struct WaveField {
    grid: Arc<SpectralGrid>,
    values: Vec<Complex64>,
}

impl PartialEq for WaveField {
    fn eq(&self, other: &Self) -> bool {
        *self.grid == *other.grid && self.values == other.values
    }
}

impl WaveField {
    pub fn new(grid: Arc<SpectralGrid>, values: Vec<Complex64>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::GridMismatch(format!(
                "field has {} values, grid has {} points",
                values.len(),
                grid.len()
            )));
        }
        if let Some(j) = values.iter().position(|v| !(v.re.is_finite() && v.im.is_finite())) {
            return Err(Error::argument(format!("field value at index {j} is not finite")));
        }
        Ok(WaveField { grid, values })
    }

    /// Internal constructor for values known to be valid.
    pub(crate) fn from_parts(grid: Arc<SpectralGrid>, values: Vec<Complex64>) -> Self {
        debug_assert_eq!(values.len(), grid.len());
        WaveField { grid, values }
    }

    pub fn zeros(grid: Arc<SpectralGrid>) -> Self {
        let n = grid.len();
        WaveField::from_parts(grid, vec![Complex64::default(); n])
    }

    pub fn from_fn(grid: Arc<SpectralGrid>, f: impl Fn(&[f64]) -> Complex64) -> Result<Self> {
        let values = grid.sample_complex(f);
        WaveField::new(grid, values)
    }

    pub fn from_real(grid: Arc<SpectralGrid>, values: &[f64]) -> Result<Self> {
        WaveField::new(grid, values.iter().map(|&v| Complex64::new(v, 0.0)).collect())
    }

    pub fn grid(&self) -> &Arc<SpectralGrid> {
        &self.grid
    }

    pub fn values(&self) -> &[Complex64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<Complex64> {
        self.values
    }

    /// Pointwise modulus `|f|` as a (real-valued) field.
    pub fn modulus(&self) -> WaveField {
        let values = self.values.iter().map(|v| Complex64::new(v.norm(), 0.0)).collect();
        WaveField::from_parts(self.grid.clone(), values)
    }

    /// `c · f`.
    pub fn scaled(&self, c: Complex64) -> WaveField {
        let values = self.values.iter().map(|v| v * c).collect();
        WaveField::from_parts(self.grid.clone(), values)
    }

    /// `f / ‖f‖₂`; errors on the zero field.
    pub fn normalized(&self) -> Result<WaveField> {
        let l2 = norms(self).l2;
        if !(l2 > 0.0 && l2.is_finite()) {
            return Err(Error::argument("cannot normalize a field with zero or non-finite norm"));
        }
        Ok(self.scaled(Complex64::new(1.0 / l2, 0.0)))
    }

    /// Pointwise density `|f|²`.
    pub fn density(&self) -> Vec<f64> {
        self.values.iter().map(|v| v.norm_sqr()).collect()
    }

    pub(crate) fn ensure_same_grid(&self, other: &WaveField) -> Result<()> {
        if Arc::ptr_eq(&self.grid, &other.grid) || *self.grid == *other.grid {
            Ok(())
        } else {
            Err(Error::GridMismatch(format!(
                "{:?} vs {:?}",
                self.grid.points(),
                other.grid.points()
            )))
        }
    }
}

/// Discrete L² and max norms.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Norms {
    pub l2: f64,
    pub linf: f64,
}

/// `‖f‖₂ = sqrt(h^d Σ|f_j|²)` and `‖f‖_∞ = max_j |f_j|` (unweighted).
pub fn norms(f: &WaveField) -> Norms {
    let sum_sq: f64 = f.values.iter().map(|v| v.norm_sqr()).sum();
    let linf = f.values.iter().map(|v| v.norm()).fold(0.0, f64::max);
    Norms {
        l2: (f.grid.cell_volume() * sum_sq).sqrt(),
        linf,
    }
}

/// `⟨f, g⟩ = Re ∫ f ḡ`, discretized as `h^d Re Σ f_j ḡ_j`.
pub fn inner_product(f: &WaveField, g: &WaveField) -> Result<f64> {
    f.ensure_same_grid(g)?;
    Ok(complex_inner(f, g).re)
}

/// `h^d Σ f_j ḡ_j` without taking the real part.
pub(crate) fn complex_inner(f: &WaveField, g: &WaveField) -> Complex64 {
    let s: Complex64 = f.values.iter().zip(&g.values).map(|(a, b)| a * b.conj()).sum();
    s * f.grid.cell_volume()
}

/// `e^{sΔ} f`, the exact heat flow of the discrete periodic Laplacian.
pub fn apply_heat_semigroup(f: &WaveField, s: f64) -> Result<WaveField> {
    if !(s >= 0.0 && s.is_finite()) {
        return Err(Error::argument(format!("semigroup time must be >= 0, got {s}")));
    }
    if s == 0.0 {
        return Ok(f.clone());
    }
    Ok(Spectrum::of(f).synthesize(|k2| (-s * k2).exp()))
}

/// `∫ ½|∇f|²`, evaluated spectrally.
pub fn kinetic_integral(f: &WaveField) -> f64 {
    Spectrum::of(f).weighted_sum(|k2| 0.5 * k2)
}

/// Fourier coefficients of a field, kept around so several multipliers can be
/// applied after a single forward transform.
#[derive(Clone, Debug)]
pub(crate) struct Spectrum {
    grid: Arc<SpectralGrid>,
    coeffs: Vec<Complex64>,
}

impl Spectrum {
    pub fn of(f: &WaveField) -> Spectrum {
        let mut coeffs = f.values.clone();
        f.grid.forward(&mut coeffs);
        Spectrum {
            grid: f.grid.clone(),
            coeffs,
        }
    }

    /// `h^d Σ_j |(m(-Δ) f)_j|²`-style sums: returns `(h^d / N) Σ_k w(|k|²) |f̂_k|²`.
    pub fn weighted_sum(&self, w: impl Fn(f64) -> f64) -> f64 {
        let sum: f64 = self
            .coeffs
            .iter()
            .zip(self.grid.k_squared())
            .map(|(c, &k2)| w(k2) * c.norm_sqr())
            .sum();
        sum * self.grid.cell_volume() / self.grid.len() as f64
    }

    /// Inverse transform of `m(|k|²) f̂_k`.
    pub fn synthesize(&self, m: impl Fn(f64) -> f64) -> WaveField {
        let mut data: Vec<Complex64> = self
            .coeffs
            .iter()
            .zip(self.grid.k_squared())
            .map(|(c, &k2)| c * m(k2))
            .collect();
        self.grid.inverse(&mut data);
        WaveField::from_parts(self.grid.clone(), data)
    }

    /// Spectral `∂f/∂x_axis`, multiplier `i k_axis`. The Nyquist mode is
    /// dropped so real fields have real derivatives.
    pub fn derivative(&self, axis: usize) -> WaveField {
        let k = self.grid.wavenumbers(axis);
        let n = self.grid.points();
        let inner: usize = n[axis + 1..].iter().product();
        let mut data: Vec<Complex64> = self
            .coeffs
            .iter()
            .enumerate()
            .map(|(j, c)| {
                let m = (j / inner) % n[axis];
                let k = if 2 * m == n[axis] { 0.0 } else { k[m] };
                c * Complex64::new(0.0, k)
            })
            .collect();
        self.grid.inverse(&mut data);
        WaveField::from_parts(self.grid.clone(), data)
    }
}
