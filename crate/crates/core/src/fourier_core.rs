//! Periodic grids on `[-L, L)^n`, continuum-scaled Fourier transforms,
//! spectral multipliers and norms.
//!
//! The forward transform approximates `c_n ∫ e^{-ix·ξ} u(x) dx` with
//! `c_n = (2π)^{-n/2}`, so closed forms such as `Ĝ_t(ξ) = c_n e^{-t|ξ|²}`
//! hold verbatim on the lattice `ξ = (π/L)·m`, `m ∈ [-N/2, N/2)`.
//! Coefficients are stored in FFT order (`m = 0, 1, …, N/2-1, -N/2, …, -1`
//! per axis), row-major with axis 0 slowest.

use std::f64::consts::PI;
use std::fmt;
use std::sync::Arc;

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use crate::bump;
use crate::error::{Error, Result};

/// `c_n = (2π)^{-n/2}`.
pub fn c_n(dim: usize) -> f64 {
    (2.0 * PI).powf(-(dim as f64) / 2.0)
}

/// Uniform periodic grid approximating `R^n` by the box `[-L, L)^n`.
#[derive(Clone)]
pub struct SpectralGrid {
    dim: usize,
    points: usize,
    half_width: f64,
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
}

impl fmt::Debug for SpectralGrid {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("SpectralGrid")
            .field("dim", &self.dim)
            .field("points", &self.points)
            .field("half_width", &self.half_width)
            .finish()
    }
}

impl PartialEq for SpectralGrid {
    fn eq(&self, other: &Self) -> bool {
        self.dim == other.dim
            && self.points == other.points
            && self.half_width.to_bits() == other.half_width.to_bits()
    }
}

/// Builds a grid with `points` nodes per axis on `[-half_width, half_width)^dim`.
pub fn make_grid(dim: usize, points: usize, half_width: f64) -> Result<SpectralGrid> {
    SpectralGrid::new(dim, points, half_width)
}

impl SpectralGrid {
    pub fn new(dim: usize, points: usize, half_width: f64) -> Result<Self> {
        if dim != 1 && dim != 2 {
            return Err(Error::InvalidGrid(format!("dimension must be 1 or 2, got {dim}")));
        }
        if points < 8 || !points.is_power_of_two() {
            return Err(Error::InvalidGrid(format!(
                "points per axis must be a power of two >= 8, got {points}"
            )));
        }
        if !(half_width > 0.0) || !half_width.is_finite() {
            return Err(Error::InvalidGrid(format!("half width must be positive, got {half_width}")));
        }
        let mut planner = FftPlanner::new();
        Ok(Self {
            dim,
            points,
            half_width,
            forward: planner.plan_fft_forward(points),
            inverse: planner.plan_fft_inverse(points),
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn points_per_axis(&self) -> usize {
        self.points
    }

    pub fn half_width(&self) -> f64 {
        self.half_width
    }

    /// Mesh width `Δx = 2L/N`.
    pub fn mesh(&self) -> f64 {
        2.0 * self.half_width / self.points as f64
    }

    /// Lattice spacing `π/L`.
    pub fn frequency_spacing(&self) -> f64 {
        PI / self.half_width
    }

    /// Total number of nodes, `N^n`.
    pub fn len(&self) -> usize {
        self.points.pow(self.dim as u32)
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Quadrature weight of one physical cell, `Δx^n`.
    pub fn cell_volume(&self) -> f64 {
        self.mesh().powi(self.dim as i32)
    }

    /// Quadrature weight of one frequency cell, `(π/L)^n`.
    pub fn frequency_cell(&self) -> f64 {
        self.frequency_spacing().powi(self.dim as i32)
    }

    /// Signed integer wavenumber of FFT index `j`.
    pub fn wavenumber(&self, j: usize) -> i64 {
        let n = self.points as i64;
        let j = j as i64;
        if j < n / 2 {
            j
        } else {
            j - n
        }
    }

    /// Integer wavenumbers of a flat spectral index (second entry 0 for n = 1).
    pub fn mode(&self, idx: usize) -> [i64; 2] {
        match self.dim {
            1 => [self.wavenumber(idx), 0],
            _ => [self.wavenumber(idx / self.points), self.wavenumber(idx % self.points)],
        }
    }

    /// Frequency vector of a flat spectral index.
    pub fn frequency(&self, idx: usize) -> [f64; 2] {
        let m = self.mode(idx);
        let dk = self.frequency_spacing();
        [m[0] as f64 * dk, m[1] as f64 * dk]
    }

    /// `|ξ|²` of a flat spectral index.
    pub fn xi_squared(&self, idx: usize) -> f64 {
        let [a, b] = self.frequency(idx);
        a * a + b * b
    }

    /// `|ξ|²` for every lattice frequency, in storage order.
    pub fn xi_squared_table(&self) -> Vec<f64> {
        (0..self.len()).map(|i| self.xi_squared(i)).collect()
    }

    /// Index of the frequency `-ξ` (the Nyquist row maps to itself).
    pub fn mirror(&self, idx: usize) -> usize {
        let n = self.points;
        let neg = |j: usize| (n - j) % n;
        match self.dim {
            1 => neg(idx),
            _ => neg(idx / n) * n + neg(idx % n),
        }
    }

    /// Physical coordinate of a flat node index.
    pub fn point(&self, idx: usize) -> [f64; 2] {
        let dx = self.mesh();
        let x = |j: usize| -self.half_width + j as f64 * dx;
        match self.dim {
            1 => [x(idx), 0.0],
            _ => [x(idx / self.points), x(idx % self.points)],
        }
    }

    /// Euclidean distance of a node from the origin.
    pub fn radius(&self, idx: usize) -> f64 {
        let [a, b] = self.point(idx);
        a.hypot(b)
    }

    /// Whether a node lies in the outer `fraction` shell of the box, measured
    /// in the max-norm.
    pub fn in_outer_shell(&self, idx: usize, fraction: f64) -> bool {
        let [a, b] = self.point(idx);
        let edge = (1.0 - fraction) * self.half_width;
        a.abs().max(b.abs()) > edge
    }

    fn check_same(&self, other: &SpectralGrid) -> Result<()> {
        if self == other {
            Ok(())
        } else {
            Err(Error::GridMismatch)
        }
    }

    /// In-place unnormalized DFT along every axis.
    fn fft_in_place(&self, data: &mut [Complex64], inverse: bool) {
        let plan = if inverse { &self.inverse } else { &self.forward };
        let n = self.points;
        match self.dim {
            1 => plan.process(data),
            _ => {
                // rows (axis 1, contiguous)
                plan.process(data);
                // columns (axis 0) through a transpose
                let mut t = vec![Complex64::default(); data.len()];
                transpose(data, &mut t, n);
                plan.process(&mut t);
                transpose(&t, data, n);
            }
        }
    }

    /// `(-1)^(m_0 + m_1)` phase from placing the box origin at `-L`.
    fn origin_sign(&self, idx: usize) -> f64 {
        let [a, b] = self.mode(idx);
        if (a + b).rem_euclid(2) == 0 {
            1.0
        } else {
            -1.0
        }
    }
}

fn transpose(src: &[Complex64], dst: &mut [Complex64], n: usize) {
    const B: usize = 32;
    for ib in (0..n).step_by(B) {
        for jb in (0..n).step_by(B) {
            for i in ib..(ib + B).min(n) {
                for j in jb..(jb + B).min(n) {
                    dst[j * n + i] = src[i * n + j];
                }
            }
        }
    }
}

/// Real scalar field sampled on the grid nodes.
#[derive(Debug, Clone, PartialEq)]
pub struct Field {
    grid: SpectralGrid,
    values: Vec<f64>,
}

impl Field {
    pub fn new(grid: SpectralGrid, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::InvalidArgument(format!(
                "field has {} values, grid has {} nodes",
                values.len(),
                grid.len()
            )));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("field"));
        }
        Ok(Self { grid, values })
    }

    /// Unchecked constructor for values known to be finite.
    pub(crate) fn from_parts(grid: SpectralGrid, values: Vec<f64>) -> Self {
        debug_assert_eq!(values.len(), grid.len());
        Self { grid, values }
    }

    pub fn zeros(grid: &SpectralGrid) -> Self {
        Self { values: vec![0.0; grid.len()], grid: grid.clone() }
    }

    /// Samples `f(x)` at every node.
    pub fn from_fn(grid: &SpectralGrid, f: impl Fn([f64; 2]) -> f64) -> Result<Self> {
        let values = (0..grid.len()).map(|i| f(grid.point(i))).collect();
        Self::new(grid.clone(), values)
    }

    pub fn grid(&self) -> &SpectralGrid {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    /// Mesh-weighted integral `∫ u dx`.
    pub fn integral(&self) -> f64 {
        self.values.iter().sum::<f64>() * self.grid.cell_volume()
    }

    pub fn l1_norm(&self) -> f64 {
        self.values.iter().map(|v| v.abs()).sum::<f64>() * self.grid.cell_volume()
    }

    pub fn sup_norm(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// Physical-space L² norm by the mesh rule.
    pub fn l2_norm(&self) -> f64 {
        (self.values.iter().map(|v| v * v).sum::<f64>() * self.grid.cell_volume()).sqrt()
    }
}

/// Lattice Fourier coefficients with continuum scaling.
#[derive(Debug, Clone, PartialEq)]
pub struct Spectrum {
    grid: SpectralGrid,
    coeffs: Vec<Complex64>,
}

impl Spectrum {
    pub fn new(grid: SpectralGrid, coeffs: Vec<Complex64>) -> Result<Self> {
        if coeffs.len() != grid.len() {
            return Err(Error::InvalidArgument(format!(
                "spectrum has {} coefficients, grid has {} modes",
                coeffs.len(),
                grid.len()
            )));
        }
        if coeffs.iter().any(|c| !c.re.is_finite() || !c.im.is_finite()) {
            return Err(Error::NonFinite("spectrum"));
        }
        Ok(Self { grid, coeffs })
    }

    pub fn zeros(grid: &SpectralGrid) -> Self {
        Self { coeffs: vec![Complex64::default(); grid.len()], grid: grid.clone() }
    }

    /// Real coefficients `g(|ξ|²)` on every lattice frequency.
    pub fn from_radial(grid: &SpectralGrid, g: impl Fn(f64) -> f64) -> Self {
        let coeffs = (0..grid.len()).map(|i| Complex64::new(g(grid.xi_squared(i)), 0.0)).collect();
        Self { grid: grid.clone(), coeffs }
    }

    pub fn grid(&self) -> &SpectralGrid {
        &self.grid
    }

    pub fn coeffs(&self) -> &[Complex64] {
        &self.coeffs
    }

    pub fn coeffs_mut(&mut self) -> &mut [Complex64] {
        &mut self.coeffs
    }

    pub fn is_finite(&self) -> bool {
        self.coeffs.iter().all(|c| c.re.is_finite() && c.im.is_finite())
    }

    /// Coefficient at `ξ = 0`.
    pub fn zero_mode(&self) -> Complex64 {
        self.coeffs[0]
    }

    /// Multiplies every coefficient by the real radial multiplier
    /// `m(|ξ|²)` and re-imposes real-field conjugate symmetry.
    pub fn map_radial(&self, m: impl Fn(f64) -> f64) -> Spectrum {
        let coeffs = self
            .coeffs
            .iter()
            .enumerate()
            .map(|(i, c)| c * m(self.grid.xi_squared(i)))
            .collect();
        let mut out = Spectrum { grid: self.grid.clone(), coeffs };
        out.enforce_real_symmetry();
        out
    }

    /// Replaces each pair `(c(ξ), c(-ξ))` by its conjugate-symmetric part.
    pub fn enforce_real_symmetry(&mut self) {
        for i in 0..self.coeffs.len() {
            let j = self.grid.mirror(i);
            if j < i {
                continue;
            }
            if j == i {
                self.coeffs[i].im = 0.0;
            } else {
                let a = self.coeffs[i];
                let b = self.coeffs[j].conj();
                let avg = (a + b) * 0.5;
                self.coeffs[i] = avg;
                self.coeffs[j] = avg.conj();
            }
        }
    }

    /// Largest violation of `c(-ξ) = conj(c(ξ))`.
    pub fn symmetry_defect(&self) -> f64 {
        (0..self.coeffs.len())
            .map(|i| (self.coeffs[self.grid.mirror(i)] - self.coeffs[i].conj()).norm())
            .fold(0.0, f64::max)
    }

    /// Frequency-weighted `‖ |ξ|^k û ‖₂`, equal to `‖ |∇|^k u ‖₂` by Parseval.
    pub fn l2_norm(&self, k: f64) -> f64 {
        let sum: f64 = if k == 0.0 {
            self.coeffs.iter().map(|c| c.norm_sqr()).sum()
        } else {
            self.coeffs
                .iter()
                .enumerate()
                .map(|(i, c)| self.grid.xi_squared(i).powf(k) * c.norm_sqr())
                .sum()
        };
        (sum * self.grid.frequency_cell()).sqrt()
    }

    /// Fraction of `Σ|û|²` carried by modes whose largest `|m|` exceeds `N/4`.
    pub fn top_octave_fraction(&self) -> f64 {
        let quarter = (self.grid.points_per_axis() / 4) as i64;
        let mut total = 0.0;
        let mut top = 0.0;
        for (i, c) in self.coeffs.iter().enumerate() {
            let [a, b] = self.grid.mode(i);
            let e = c.norm_sqr();
            total += e;
            if a.abs().max(b.abs()) > quarter {
                top += e;
            }
        }
        if total == 0.0 {
            0.0
        } else {
            top / total
        }
    }

    /// Zeroes modes outside the 2/3-rule box `|m| <= N/3`.
    pub fn truncate_two_thirds(&mut self) {
        let cut = (self.grid.points_per_axis() / 3) as i64;
        for i in 0..self.coeffs.len() {
            let [a, b] = self.grid.mode(i);
            if a.abs() > cut || b.abs() > cut {
                self.coeffs[i] = Complex64::default();
            }
        }
    }

    pub fn add(&self, other: &Spectrum) -> Result<Spectrum> {
        self.grid.check_same(&other.grid)?;
        let coeffs = self.coeffs.iter().zip(&other.coeffs).map(|(a, b)| a + b).collect();
        Ok(Spectrum { grid: self.grid.clone(), coeffs })
    }

    pub fn scale(&self, factor: f64) -> Spectrum {
        Spectrum { grid: self.grid.clone(), coeffs: self.coeffs.iter().map(|c| c * factor).collect() }
    }
}

/// Forward transform of a physical field.
pub fn transform(field: &Field) -> Result<Spectrum> {
    if field.values.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("field"));
    }
    Ok(transform_unchecked(field))
}

pub(crate) fn transform_unchecked(field: &Field) -> Spectrum {
    let grid = &field.grid;
    let mut data: Vec<Complex64> = field.values.iter().map(|&v| Complex64::new(v, 0.0)).collect();
    grid.fft_in_place(&mut data, false);
    let scale = c_n(grid.dim) * grid.cell_volume();
    for (i, c) in data.iter_mut().enumerate() {
        *c *= scale * grid.origin_sign(i);
    }
    Spectrum { grid: grid.clone(), coeffs: data }
}

/// Inverse transform; the imaginary residue of a real-symmetric spectrum is
/// discarded.
pub fn inverse_transform(spectrum: &Spectrum) -> Field {
    let grid = &spectrum.grid;
    let scale = c_n(grid.dim) * grid.frequency_cell();
    let mut data: Vec<Complex64> = spectrum
        .coeffs
        .iter()
        .enumerate()
        .map(|(i, c)| c * (scale * grid.origin_sign(i)))
        .collect();
    grid.fft_in_place(&mut data, true);
    Field { grid: grid.clone(), values: data.into_iter().map(|c| c.re).collect() }
}

/// Applies `|ξ|^k`.
pub fn fractional_derivative(spectrum: &Spectrum, k: f64) -> Result<Spectrum> {
    if !(k >= 0.0) {
        return Err(Error::InvalidArgument(format!("derivative order must be >= 0, got {k}")));
    }
    if k == 0.0 {
        return Ok(spectrum.clone());
    }
    Ok(spectrum.map_radial(|s| s.powf(k / 2.0)))
}

/// Frequency localization: χ_L, χ_M = 1 - χ_L - χ_H, χ_H.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Band {
    Low,
    Mid,
    High,
}

impl Band {
    pub const ALL: [Band; 3] = [Band::Low, Band::Mid, Band::High];

    /// χ(|ξ|) for this band.
    pub fn weight(self, abs_xi: f64) -> f64 {
        match self {
            Band::Low => chi_low(abs_xi),
            Band::High => chi_high(abs_xi),
            Band::Mid => 1.0 - chi_low(abs_xi) - chi_high(abs_xi),
        }
    }
}

/// 1 on `|ξ| <= 1/2`, 0 on `|ξ| >= 3/4`.
fn chi_low(r: f64) -> f64 {
    bump::step((r - 0.5) / 0.25)
}

/// 0 on `|ξ| <= 2`, 1 on `|ξ| >= 3`.
fn chi_high(r: f64) -> f64 {
    bump::step_complement(r - 2.0)
}

pub fn band_filter(spectrum: &Spectrum, band: Band) -> Spectrum {
    spectrum.map_radial(|s| band.weight(s.sqrt()))
}

/// Norm triple returned by [`norms`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Norms {
    /// `‖ |∇|^k f ‖₂`, spectral.
    pub l2_of_k_derivative: f64,
    pub l1: f64,
    pub sup: f64,
}

pub fn norms(field: &Field, k: f64) -> Result<Norms> {
    let spectrum = transform(field)?;
    let d = fractional_derivative(&spectrum, k)?;
    Ok(Norms { l2_of_k_derivative: d.l2_norm(0.0), l1: field.l1_norm(), sup: field.sup_norm() })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::propagators::gauss_point;
    use proptest::prelude::*;

    fn gauss_field(grid: &SpectralGrid, t: f64) -> Field {
        Field::from_fn(grid, |x| gauss_point(grid.dim(), t, x).unwrap()).unwrap()
    }

    #[test]
    fn grid_examples() {
        let g = make_grid(1, 8, PI).unwrap();
        let mut f: Vec<f64> = (0..8).map(|i| g.frequency(i)[0]).collect();
        f.sort_by(f64::total_cmp);
        assert_eq!(f, vec![-4.0, -3.0, -2.0, -1.0, 0.0, 1.0, 2.0, 3.0]);
        let g2 = make_grid(2, 256, 100.0).unwrap();
        assert_eq!(g2.mesh(), 0.78125);
        assert_eq!(g2.mesh() * 256.0, 200.0);
        assert!(make_grid(1, 7, 1.0).is_err());
        assert!(make_grid(3, 8, 1.0).is_err());
        assert!(make_grid(1, 4, 1.0).is_err());
        assert!(make_grid(1, 8, 0.0).is_err());
        assert!(make_grid(1, 8, -1.0).is_err());
    }

    #[test]
    fn mirror_is_involution_and_negates() {
        for g in [make_grid(1, 16, 3.0).unwrap(), make_grid(2, 8, 3.0).unwrap()] {
            for i in 0..g.len() {
                let j = g.mirror(i);
                assert_eq!(g.mirror(j), i);
                let (a, b) = (g.mode(i), g.mode(j));
                let half = g.points_per_axis() as i64 / 2;
                for ax in 0..2 {
                    assert!(a[ax] == -b[ax] || (a[ax] == -half && b[ax] == -half));
                }
            }
        }
    }

    #[test]
    fn zero_field_transforms_to_zero() {
        let g = make_grid(2, 16, 5.0).unwrap();
        let s = transform(&Field::zeros(&g)).unwrap();
        assert!(s.coeffs().iter().all(|c| c.norm() == 0.0));
        let n = norms(&Field::zeros(&g), 1.0).unwrap();
        assert_eq!((n.l2_of_k_derivative, n.l1, n.sup), (0.0, 0.0, 0.0));
    }

    #[test]
    fn non_finite_rejected() {
        let g = make_grid(1, 8, 1.0).unwrap();
        let mut v = vec![0.0; 8];
        v[3] = f64::NAN;
        assert!(Field::new(g.clone(), v).is_err());
        let f = Field::from_parts(g, vec![f64::INFINITY; 8]);
        assert_eq!(transform(&f), Err(Error::NonFinite("field")));
    }

    #[test]
    fn gaussian_transform_matches_closed_form() {
        for (dim, n, l) in [(1, 512, 20.0), (2, 128, 20.0)] {
            let g = make_grid(dim, n, l).unwrap();
            let s = transform(&gauss_field(&g, 1.0)).unwrap();
            let c = c_n(dim);
            for (i, coeff) in s.coeffs().iter().enumerate() {
                let exact = c * (-g.xi_squared(i)).exp();
                assert!((coeff - exact).norm() <= 1e-8 * c, "{dim}d mode {i}");
            }
        }
    }

    #[test]
    fn derivative_of_gaussian() {
        let g = make_grid(1, 512, 20.0).unwrap();
        let s = transform(&gauss_field(&g, 1.0)).unwrap();
        let d2 = fractional_derivative(&s, 2.0).unwrap();
        for (i, c) in d2.coeffs().iter().enumerate() {
            let xi2 = g.xi_squared(i);
            assert!((c - xi2 * c_n(1) * (-xi2).exp()).norm() <= 1e-8);
        }
        let twice = fractional_derivative(&fractional_derivative(&s, 1.0).unwrap(), 1.0).unwrap();
        for (a, b) in twice.coeffs().iter().zip(d2.coeffs()) {
            assert!((a - b).norm() <= 1e-12 * b.norm().max(1e-300) + 1e-16);
        }
        assert_eq!(fractional_derivative(&s, 0.0).unwrap(), s);
        assert!(fractional_derivative(&s, -0.5).is_err());
    }

    #[test]
    fn band_examples() {
        let g = make_grid(2, 64, 10.0).unwrap();
        let s = transform(&gauss_field(&g, 0.05)).unwrap();
        let low_high = band_filter(&band_filter(&s, Band::Low), Band::High);
        assert!(low_high.coeffs().iter().all(|c| c.norm() == 0.0));
        let low = band_filter(&s, Band::Low);
        assert_eq!(low.zero_mode(), s.zero_mode());
        let sum = band_filter(&s, Band::Low)
            .add(&band_filter(&s, Band::Mid))
            .unwrap()
            .add(&band_filter(&s, Band::High))
            .unwrap();
        for (a, b) in sum.coeffs().iter().zip(s.coeffs()) {
            assert!((a - b).norm() <= 1e-12 * s.zero_mode().norm());
        }
    }

    #[test]
    fn band_partition_of_unity_on_lattice() {
        let g = make_grid(2, 64, 4.0).unwrap();
        for i in 0..g.len() {
            let r = g.xi_squared(i).sqrt();
            let w: Vec<f64> = Band::ALL.iter().map(|b| b.weight(r)).collect();
            assert!((w.iter().sum::<f64>() - 1.0).abs() <= 1e-15);
            assert!(w.iter().all(|x| (0.0..=1.0).contains(x)));
        }
        assert_eq!(Band::Low.weight(0.5), 1.0);
        assert_eq!(Band::Low.weight(0.75), 0.0);
        assert_eq!(Band::High.weight(2.0), 0.0);
        assert_eq!(Band::High.weight(3.0), 1.0);
    }

    #[test]
    fn gaussian_norm_examples() {
        for (dim, n) in [(1usize, 1024usize), (2, 256)] {
            let g = make_grid(dim, n, 25.0).unwrap();
            let n1 = norms(&gauss_field(&g, 1.0), 0.0).unwrap();
            let n4 = norms(&gauss_field(&g, 4.0), 0.0).unwrap();
            assert!((n1.l1 - 1.0).abs() <= 1e-8);
            let ratio = n4.l2_of_k_derivative / n1.l2_of_k_derivative;
            assert!((ratio - 4f64.powf(-(dim as f64) / 4.0)).abs() <= 1e-6);
            assert!((n1.sup - (4.0 * PI).powf(-(dim as f64) / 2.0)).abs() < 1e-12);
        }
    }

    fn random_field(dim: usize, n: usize, vals: &[f64]) -> Field {
        let g = make_grid(dim, n, 3.0).unwrap();
        Field::new(g.clone(), vals[..g.len()].to_vec()).unwrap()
    }

    proptest! {
        #[test]
        fn parseval_roundtrip_and_mass(
            vals in prop::collection::vec(-10.0f64..10.0, 256),
            two_d in any::<bool>(),
        ) {
            let f = if two_d { random_field(2, 16, &vals) } else { random_field(1, 256, &vals) };
            let s = transform(&f).unwrap();
            let back = inverse_transform(&s);
            let scale = f.sup_norm().max(1e-300);
            for (a, b) in back.values().iter().zip(f.values()) {
                prop_assert!((a - b).abs() <= 1e-12 * scale);
            }
            let (phys, spec) = (f.l2_norm(), s.l2_norm(0.0));
            prop_assert!((phys - spec).abs() <= 1e-12 * phys.max(1e-300));
            let mass = c_n(f.grid().dim()) * f.integral();
            let l1 = f.l1_norm();
            prop_assert!((s.zero_mode().re - mass).abs() <= 1e-12 * l1.max(1e-300));
            prop_assert!(s.symmetry_defect() <= 1e-12 * s.l2_norm(0.0).max(1e-300));
        }

        #[test]
        fn derivative_orders_compose(
            vals in prop::collection::vec(-1.0f64..1.0, 64),
            a in 0.0f64..2.0,
            b in 0.0f64..2.0,
        ) {
            let f = random_field(1, 64, &vals);
            let s = transform(&f).unwrap();
            let ab = fractional_derivative(&fractional_derivative(&s, a).unwrap(), b).unwrap();
            let direct = fractional_derivative(&s, a + b).unwrap();
            for (x, y) in ab.coeffs().iter().zip(direct.coeffs()) {
                prop_assert!((x - y).norm() <= 1e-12 * y.norm().max(1e-12));
            }
        }
    }
}
