//! Exact per-frequency solution operators of the linear damped equation
//! `u_tt - Δu + u_t - Δu_t = 0`.
//!
//! In Fourier variables every mode solves `û'' + (1+s)û' + s û = 0` with
//! `s = |ξ|²`. The two fundamental solutions are
//!
//! ```text
//! K0(t, s) = (e^{-ts} - s e^{-t}) / (1 - s)
//! K1(t, s) = (e^{-ts} -   e^{-t}) / (1 - s)
//! ```
//!
//! and satisfy `K0 = K1 + e^{-t}`, `∂tK0 = -s K1`, `∂tK1 = e^{-t} - s K1`.
//! The quotient by `1 - s` is a removable singularity at `|ξ| = 1`.

use std::f64::consts::PI;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::fourier_core::{c_n, SpectralGrid, Spectrum};
use crate::solver::State;

/// Below this `|1 - s|` the stable `t e^{-t} φ₁(t(1-s))` form is used.
pub const SINGULAR_BAND: f64 = 1e-4;

/// Roots of `λ² + (1+s)λ + s = 0`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CharacteristicRoots {
    pub lambda_plus: f64,
    pub lambda_minus: f64,
}

pub fn roots(s: f64) -> Result<CharacteristicRoots> {
    if !(s >= 0.0) {
        return Err(Error::InvalidArgument(format!("|xi|^2 must be >= 0, got {s}")));
    }
    Ok(CharacteristicRoots { lambda_plus: (-s).max(-1.0), lambda_minus: (-s).min(-1.0) })
}

/// The matrix `[K0, K1; ∂tK0, ∂tK1]` at one `(t, s)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PropagatorMatrix {
    pub k0: f64,
    pub k1: f64,
    pub dt_k0: f64,
    pub dt_k1: f64,
}

impl PropagatorMatrix {
    pub const IDENTITY: PropagatorMatrix = PropagatorMatrix { k0: 1.0, k1: 0.0, dt_k0: 0.0, dt_k1: 1.0 };

    /// Applies the matrix to one mode of the phase pair `(û, ∂tû)`.
    #[inline]
    pub fn apply(&self, u: Complex64, ut: Complex64) -> (Complex64, Complex64) {
        (u * self.k0 + ut * self.k1, u * self.dt_k0 + ut * self.dt_k1)
    }
}

/// `φ₁(z) = (e^z - 1)/z`, with the Taylor expansion for tiny `|z|`.
pub fn phi1(z: f64) -> f64 {
    if z.abs() < 1e-8 {
        1.0 + z / 2.0 + z * z / 6.0
    } else {
        z.exp_m1() / z
    }
}

/// `φ₂(z) = (e^z - 1 - z)/z²`.
pub fn phi2(z: f64) -> f64 {
    if z.abs() < 0.5 {
        // Σ z^j / (j+2)!
        let mut term = 0.5;
        let mut sum = 0.5;
        for j in 1..30 {
            term *= z / (j as f64 + 2.0);
            sum += term;
            if term.abs() < 1e-18 * sum.abs() {
                break;
            }
        }
        sum
    } else {
        (z.exp_m1() - z) / (z * z)
    }
}

/// `K1` by the closed form with the difference of exponentials taken
/// without cancellation.
pub fn k1_closed(t: f64, s: f64) -> f64 {
    let d = 1.0 - s;
    if d > 0.0 {
        // e^{-ts} - e^{-t} = e^{-ts}(1 - e^{-t(1-s)})
        -(-t * s).exp() * (-t * d).exp_m1() / d
    } else {
        // e^{-ts} - e^{-t} = e^{-t}(e^{-t(s-1)} - 1)
        (-t).exp() * (t * d).exp_m1() / d
    }
}

/// `K1 = t e^{-t} φ₁(t(1-s))`, accurate for `s` near 1.
pub fn k1_near_singular(t: f64, s: f64) -> f64 {
    t * (-t).exp() * phi1(t * (1.0 - s))
}

fn k1_value(t: f64, s: f64) -> f64 {
    if (1.0 - s).abs() < SINGULAR_BAND {
        k1_near_singular(t, s)
    } else {
        k1_closed(t, s)
    }
}

/// Evaluates the propagator matrix; negative arguments are rejected.
pub fn propagator(t: f64, s: f64) -> Result<PropagatorMatrix> {
    if !(t >= 0.0) || !(s >= 0.0) {
        return Err(Error::InvalidArgument(format!("propagator needs t, s >= 0, got ({t}, {s})")));
    }
    Ok(propagator_unchecked(t, s))
}

pub(crate) fn propagator_unchecked(t: f64, s: f64) -> PropagatorMatrix {
    let et = (-t).exp();
    let k1 = k1_value(t, s);
    let k0 = if (1.0 - s).abs() < SINGULAR_BAND {
        k1 + et
    } else {
        ((-t * s).exp() - s * et) / (1.0 - s)
    };
    PropagatorMatrix { k0, k1, dt_k0: -s * k1, dt_k1: et - s * k1 }
}

/// Heat semigroup multiplier `e^{-ts}`.
pub fn heat_multiplier(t: f64, s: f64) -> f64 {
    (-t * s).exp()
}

/// Gauss kernel `G_t(x) = (4πt)^{-n/2} e^{-|x|²/4t}`; the second coordinate
/// is ignored for `n = 1`.
pub fn gauss_point(dim: usize, t: f64, x: [f64; 2]) -> Result<f64> {
    if !(t > 0.0) {
        return Err(Error::InvalidArgument(format!("Gauss kernel needs t > 0, got {t}")));
    }
    let r2 = if dim == 1 { x[0] * x[0] } else { x[0] * x[0] + x[1] * x[1] };
    Ok((4.0 * PI * t).powf(-(dim as f64) / 2.0) * (-r2 / (4.0 * t)).exp())
}

/// `c_n e^{-t|ξ|²}` on the lattice: the spectrum of the periodized kernel.
pub fn gauss_spectrum(t: f64, grid: &SpectralGrid) -> Result<Spectrum> {
    if !(t > 0.0) {
        return Err(Error::InvalidArgument(format!("Gauss kernel needs t > 0, got {t}")));
    }
    let c = c_n(grid.dim());
    Ok(Spectrum::from_radial(grid, |s| c * heat_multiplier(t, s)))
}

/// Per-mode propagator matrices for one time increment.
#[derive(Debug, Clone)]
pub struct PropagatorTable {
    grid: SpectralGrid,
    dt: f64,
    entries: Vec<PropagatorMatrix>,
}

impl PropagatorTable {
    pub fn new(grid: &SpectralGrid, dt: f64) -> Result<Self> {
        if !(dt >= 0.0) || !dt.is_finite() {
            return Err(Error::InvalidArgument(format!("time increment must be >= 0, got {dt}")));
        }
        let entries = (0..grid.len()).map(|i| propagator_unchecked(dt, grid.xi_squared(i))).collect();
        Ok(Self { grid: grid.clone(), dt, entries })
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn grid(&self) -> &SpectralGrid {
        &self.grid
    }

    pub fn entries(&self) -> &[PropagatorMatrix] {
        &self.entries
    }

    /// Advances the phase pair by `dt` without time-discretization error.
    pub fn apply(&self, state: &State) -> Result<State> {
        if state.grid() != &self.grid {
            return Err(Error::GridMismatch);
        }
        let (mut u, mut ut) = (state.u_hat().clone(), state.ut_hat().clone());
        for ((m, a), b) in self.entries.iter().zip(u.coeffs_mut()).zip(ut.coeffs_mut()) {
            let (na, nb) = m.apply(*a, *b);
            *a = na;
            *b = nb;
        }
        u.enforce_real_symmetry();
        ut.enforce_real_symmetry();
        State::new(state.time() + self.dt, u, ut)
    }
}

/// Exact linear evolution of `state` by `t`.
pub fn apply_linear(state: &State, t: f64) -> Result<State> {
    if t == 0.0 {
        return Ok(state.clone());
    }
    PropagatorTable::new(state.grid(), t)?.apply(state)
}
