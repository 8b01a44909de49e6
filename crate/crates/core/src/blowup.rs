//! Test-function machinery for the blow-up regime: the cutoffs `φ_R`, `η_R`,
//! the space-time functional `K_R`, the viscoelastic boundary term and a
//! heuristic classifier of trajectories.

use std::fmt;

use crate::bump;
use crate::error::{Error, Result};
use crate::fourier_core::{inverse_transform, transform, Field, SpectralGrid};
use crate::solver::{Observable, Snapshot, Trajectory};

/// `p' = p/(p-1)`.
pub fn p_conjugate(p: f64) -> Result<f64> {
    if !(p > 1.0) || !p.is_finite() {
        return Err(Error::InvalidArgument(format!("conjugate exponent needs p > 1, got {p}")));
    }
    Ok(p / (p - 1.0))
}

/// Radial profile: 1 on `[0, 1/2]`, 0 on `[1, ∞)`.
pub fn phi(r: f64) -> f64 {
    bump::step((r - 0.5) / 0.5)
}

/// Time profile: 1 on `[0, 1/4]`, 0 on `[1, ∞)`.
pub fn eta(t: f64) -> f64 {
    bump::step((t - 0.25) / 0.75)
}

fn check_radius(radius: f64) -> Result<()> {
    if radius > 0.0 && radius.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidArgument(format!("cutoff radius must be positive, got {radius}")))
    }
}

/// `φ(|x|/R)`
pub fn phi_r(x: [f64; 2], radius: f64) -> Result<f64> {
    check_radius(radius)?;
    Ok(phi(x[0].hypot(x[1]) / radius))
}

/// `η(t/R²)`
pub fn eta_r(t: f64, radius: f64) -> Result<f64> {
    check_radius(radius)?;
    Ok(eta(t / (radius * radius)))
}

/// Sampled maxima of the scale-free derivative ratios of the cutoffs.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DerivativeBounds {
    /// `max |φ_R'|·R`
    pub phi_d1: f64,
    /// `max |φ_R''|·R²`
    pub phi_d2: f64,
    /// `max (|∇φ_R|²/φ_R)·R²`
    pub phi_grad_sq_ratio: f64,
    /// `max |η_R'|·R²`
    pub eta_d1: f64,
    /// `max |η_R''|·R⁴`
    pub eta_d2: f64,
    /// `max |Δφ_R^{p'}|·R² / φ_R^{p'-1}`
    pub laplacian_ratio: f64,
}

impl DerivativeBounds {
    pub fn as_array(&self) -> [f64; 6] {
        [self.phi_d1, self.phi_d2, self.phi_grad_sq_ratio, self.eta_d1, self.eta_d2, self.laplacian_ratio]
    }

    pub fn is_finite(&self) -> bool {
        self.as_array().iter().all(|v| v.is_finite())
    }
}

/// Points of the open transition interval `(0, 1)`: a uniform grid plus
/// points accumulating at both ends.
fn transition_samples() -> Vec<f64> {
    let mut s: Vec<f64> = (1..4000).map(|j| j as f64 / 4000.0).collect();
    for j in 12..=40 {
        let e = 0.5f64.powi(j);
        s.push(e);
        s.push(1.0 - e);
    }
    s
}

/// Derivative ratios of `φ_R` in dimension `dim` and `η_R`, with `p' = p/(p-1)`.
pub fn derivative_bound_report(radius: f64, p: f64, dim: usize) -> Result<DerivativeBounds> {
    check_radius(radius)?;
    let q = p_conjugate(p)?;
    let r2 = radius * radius;
    let mut out = DerivativeBounds {
        phi_d1: 0.0,
        phi_d2: 0.0,
        phi_grad_sq_ratio: 0.0,
        eta_d1: 0.0,
        eta_d2: 0.0,
        laplacian_ratio: 0.0,
    };
    for s in transition_samples() {
        // φ_R(r) = B(s) with s = 2r/R - 1
        let r = radius * (1.0 + s) / 2.0;
        let b = bump::step(s);
        let (l1, l2) = bump::log_derivatives(s);
        let (d1, d2) = (b * l1 * 2.0 / radius, b * l2 * 4.0 / r2);
        let grad_sq_over = b * (l1 * 2.0 / radius).powi(2);
        // Δ(φ^{q}) / φ^{q-1} = q(q-1) φ'²/φ + q φ'' + (n-1) q φ'/r
        let lap = q * (q - 1.0) * grad_sq_over + q * d2 + (dim as f64 - 1.0) * q * d1 / r;
        out.phi_d1 = out.phi_d1.max(d1.abs() * radius);
        out.phi_d2 = out.phi_d2.max(d2.abs() * r2);
        out.phi_grad_sq_ratio = out.phi_grad_sq_ratio.max(grad_sq_over * r2);
        out.laplacian_ratio = out.laplacian_ratio.max(lap.abs() * r2);

        // η_R(t) = B(s) with s = (t/R² - 1/4) / (3/4)
        let e1 = b * l1 * (4.0 / 3.0) / r2;
        let e2 = b * l2 * (16.0 / 9.0) / (r2 * r2);
        out.eta_d1 = out.eta_d1.max(e1.abs() * r2);
        out.eta_d2 = out.eta_d2.max(e2.abs() * r2 * r2);
    }
    Ok(out)
}

/// Snapshots restricted to `[0, R²]`, after checking coverage and cadence.
fn covering(snaps: &[Snapshot], radius: f64) -> Result<Vec<&Snapshot>> {
    check_radius(radius)?;
    let end = radius * radius;
    let tol = 1e-9 * end.max(1.0);
    let used: Vec<&Snapshot> = snaps.iter().filter(|s| s.time <= end + tol).collect();
    let first = used.first().map(|s| s.time);
    let last = used.last().map(|s| s.time);
    if first.is_none_or(|t| t.abs() > tol) || last.is_none_or(|t| t < end - tol) {
        return Err(Error::InvalidArgument(format!("snapshots do not cover [0, {end}]")));
    }
    let limit = end / 50.0 + tol;
    if used.windows(2).any(|w| !(w[1].time > w[0].time) || w[1].time - w[0].time > limit) {
        return Err(Error::InvalidArgument(format!("snapshot cadence exceeds R²/50 = {}", end / 50.0)));
    }
    let grid = used[0].field.grid();
    if radius > grid.half_width() {
        return Err(Error::InvalidArgument(format!(
            "R = {radius} exceeds the box half-width {}",
            grid.half_width()
        )));
    }
    if used.iter().any(|s| s.field.grid() != grid) {
        return Err(Error::GridMismatch);
    }
    Ok(used)
}

fn trapezoid(times: &[f64], values: &[f64]) -> f64 {
    times.windows(2).zip(values.windows(2)).map(|(t, v)| 0.5 * (t[1] - t[0]) * (v[0] + v[1])).sum()
}

/// Weights `φ_R(x)^{p'}` on the mesh.
fn phi_weights(grid: &SpectralGrid, radius: f64, q: f64) -> Vec<f64> {
    (0..grid.len()).map(|i| phi(grid.radius(i) / radius).powf(q)).collect()
}

/// `K_R = ∫₀^{R²}∫ |u|^p φ_R^{p'} η_R^{p'} dx dt` from physical snapshots.
pub fn kr_from_snapshots(snaps: &[Snapshot], radius: f64, p: f64) -> Result<f64> {
    let q = p_conjugate(p)?;
    let used = covering(snaps, radius)?;
    let grid = used[0].field.grid();
    let w = phi_weights(grid, radius, q);
    let times: Vec<f64> = used.iter().map(|s| s.time).collect();
    let values: Vec<f64> = used
        .iter()
        .map(|s| {
            let space: f64 =
                s.field.values().iter().zip(&w).filter(|(_, w)| **w > 0.0).map(|(u, w)| u.abs().powf(p) * w).sum();
            space * grid.cell_volume() * eta(s.time / (radius * radius)).powf(q)
        })
        .collect();
    Ok(trapezoid(&times, &values))
}

/// `K_R` from the physical snapshots of a trajectory.
pub fn kr_functional(traj: &Trajectory, radius: f64, p: f64) -> Result<f64> {
    kr_from_snapshots(&traj.fields, radius, p)
}

/// `∫₀^{R²}∫_{R/2 < |x| < R} |u|^p dx dt` from physical snapshots.
pub fn annulus_from_snapshots(snaps: &[Snapshot], radius: f64, p: f64) -> Result<f64> {
    p_conjugate(p)?;
    let used = covering(snaps, radius)?;
    let grid = used[0].field.grid();
    let inside: Vec<bool> = (0..grid.len())
        .map(|i| {
            let r = grid.radius(i);
            r > radius / 2.0 && r < radius
        })
        .collect();
    let times: Vec<f64> = used.iter().map(|s| s.time).collect();
    let values: Vec<f64> = used
        .iter()
        .map(|s| {
            s.field.values().iter().zip(&inside).filter(|(_, m)| **m).map(|(u, _)| u.abs().powf(p)).sum::<f64>()
                * grid.cell_volume()
        })
        .collect();
    Ok(trapezoid(&times, &values))
}

pub fn annulus_integral(traj: &Trajectory, radius: f64, p: f64) -> Result<f64> {
    annulus_from_snapshots(&traj.fields, radius, p)
}

/// `∫ (-Δu₀) φ_R^{p'} dx` with the spectral Laplacian. `R` may exceed the box.
pub fn viscoelastic_term(u0: &Field, radius: f64, p: f64) -> Result<f64> {
    check_radius(radius)?;
    let q = p_conjugate(p)?;
    let spec = transform(u0)?;
    let neg_lap = inverse_transform(&spec.map_radial(|s| s));
    let grid = u0.grid();
    let w = phi_weights(grid, radius, q);
    Ok(neg_lap.values().iter().zip(&w).map(|(v, w)| v * w).sum::<f64>() * grid.cell_volume())
}

/// Outcome of the heuristic classifier.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Verdict {
    GlobalLike,
    Growing,
    BlowupDetected,
}

impl Verdict {
    pub fn name(self) -> &'static str {
        match self {
            Verdict::GlobalLike => "Global-like",
            Verdict::Growing => "Growing",
            Verdict::BlowupDetected => "BlowupDetected",
        }
    }
}

impl fmt::Display for Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Thresholds of [`classify`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Thresholds {
    /// `sup|u|` above this multiple of its initial value counts as growth.
    pub growth_factor: f64,
    /// Relative growth of `∫u` over the last half of the run.
    pub mass_growth: f64,
}

impl Default for Thresholds {
    fn default() -> Self {
        Self { growth_factor: 100.0, mass_growth: 0.5 }
    }
}

impl Thresholds {
    pub fn scaled(self, factor: f64) -> Self {
        Self { growth_factor: self.growth_factor * factor, mass_growth: self.mass_growth * factor }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Classification {
    pub verdict: Verdict,
    /// Set when `p = 1 + 2/n`, where the detector cannot decide.
    pub near_critical: bool,
    /// `max sup|u| / sup|u₀|`
    pub sup_growth: f64,
    /// Relative growth of `∫u` over the last half of the run.
    pub mass_growth: f64,
    pub mass_monotone: bool,
    /// Time at which the run was stopped by the truncation guard.
    pub truncated: Option<f64>,
}

impl Classification {
    /// Free-text remarks: near-critical exponent, early stop.
    pub fn annotation(&self) -> String {
        let mut notes = Vec::new();
        if self.near_critical {
            notes.push("near-critical, inconclusive".to_string());
        }
        if let Some(t) = self.truncated {
            notes.push(format!("stopped by the truncation guard at t = {t}"));
        }
        notes.join("; ")
    }
}

/// Heuristic global-versus-growing classification of a trajectory.
pub fn classify(traj: &Trajectory, thresholds: Thresholds) -> Result<Classification> {
    let sup = traj.series(Observable::Sup)?;
    let mass = traj.series(Observable::Mass)?;
    let near_critical = traj
        .nonlinearity
        .is_some_and(|nl| (nl.p() - (1.0 + 2.0 / traj.dim as f64)).abs() < 1e-12);
    let initial = sup.first().copied().unwrap_or(0.0);
    let peak = sup.iter().copied().fold(0.0, f64::max);
    let sup_growth = if initial > 0.0 { peak / initial } else if peak > 0.0 { f64::INFINITY } else { 1.0 };
    let tail = &mass[mass.len() / 2..];
    let mass_monotone = tail.len() >= 2 && tail.windows(2).all(|w| w[1] > w[0]);
    let mass_growth = match (tail.first(), tail.last()) {
        (Some(&a), Some(&b)) if a != 0.0 => (b - a) / a.abs(),
        _ => 0.0,
    };
    let verdict = if traj.blowup.is_some() {
        Verdict::BlowupDetected
    } else if sup_growth > thresholds.growth_factor || (mass_monotone && mass_growth > thresholds.mass_growth) {
        Verdict::Growing
    } else {
        Verdict::GlobalLike
    };
    Ok(Classification { verdict, near_critical, sup_growth, mass_growth, mass_monotone, truncated: traj.truncated })
}
