//! Post-processing of trajectories: decay exponents, distance to the Gauss
//! profile, the asymptotic mass, the weighted sup-in-time norm, frequency
//! band decay and quadrature checks of the auxiliary decay estimates.

use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::fourier_core::{band_filter, c_n, transform, Band, Field, SpectralGrid, Spectrum};
use crate::propagators::{gauss_spectrum, heat_multiplier, PropagatorTable};
use crate::quadrature::{geometric_breaks, GaussLegendre};
use crate::solver::{Observable, State, Trajectory};

/// Minimum number of samples inside a fit window.
pub const MIN_FIT_SAMPLES: usize = 10;

/// Least-squares line through `(x, log value)` on a time window.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DecayFit {
    pub slope: f64,
    pub intercept: f64,
    /// Standard error of the slope.
    pub stderr: f64,
    pub window: (f64, f64),
    pub samples: usize,
}

/// Abscissa used by a fit.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FitScale {
    /// `log value` against `log(1+t)`.
    LogLog,
    /// `log value` against `t`.
    LogLinear,
}

/// Power-law exponent of `values ~ C (1+t)^slope` on `window`.
pub fn decay_fit(times: &[f64], values: &[f64], window: (f64, f64)) -> Result<DecayFit> {
    fit_on(times, values, window, FitScale::LogLog)
}

pub fn fit_on(times: &[f64], values: &[f64], window: (f64, f64), scale: FitScale) -> Result<DecayFit> {
    let (lo, hi) = window;
    if !(lo < hi) {
        return Err(Error::Fit(format!("empty window [{lo}, {hi}]")));
    }
    if times.len() != values.len() {
        return Err(Error::Fit("times and values differ in length".into()));
    }
    let mut xs = Vec::new();
    let mut ys = Vec::new();
    for (&t, &v) in times.iter().zip(values) {
        if t < lo || t > hi {
            continue;
        }
        if !(v > 0.0) || !v.is_finite() {
            return Err(Error::Fit(format!("non-positive value {v} at t = {t}")));
        }
        xs.push(match scale {
            FitScale::LogLog => (1.0 + t).ln(),
            FitScale::LogLinear => t,
        });
        ys.push(v.ln());
    }
    let n = xs.len();
    if n < MIN_FIT_SAMPLES {
        return Err(Error::Fit(format!("{n} samples in window, need {MIN_FIT_SAMPLES}")));
    }
    let nf = n as f64;
    let mx = xs.iter().sum::<f64>() / nf;
    let my = ys.iter().sum::<f64>() / nf;
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let ssr: f64 = xs.iter().zip(&ys).map(|(x, y)| (y - intercept - slope * x).powi(2)).sum();
    let stderr = if n > 2 { (ssr / (nf - 2.0) / sxx).sqrt() } else { 0.0 };
    Ok(DecayFit { slope, intercept, stderr, window, samples: n })
}

/// `t^{n/4+k/2} ‖ |∇|^k (u(t) - M G_t) ‖₂`, evaluated on the lattice.
pub fn profile_error(state: &State, mass: f64, k: f64) -> Result<f64> {
    let t = state.time();
    if !(t > 0.0) {
        return Err(Error::InvalidArgument("profile error needs t > 0".into()));
    }
    if !(k >= 0.0) {
        return Err(Error::InvalidArgument(format!("derivative order must be >= 0, got {k}")));
    }
    let grid = state.grid();
    let c = c_n(grid.dim());
    let sum: f64 = state
        .u_hat()
        .coeffs()
        .iter()
        .enumerate()
        .map(|(i, u)| {
            let s = grid.xi_squared(i);
            let weight = if k == 0.0 { 1.0 } else { s.powf(k) };
            weight * (u - mass * c * heat_multiplier(t, s)).norm_sqr()
        })
        .sum();
    let n = grid.dim() as f64;
    Ok(t.powf(n / 4.0 + k / 2.0) * (sum * grid.frequency_cell()).sqrt())
}

/// Asymptotic mass `∫(u₀+u₁) + ∫₀^∞∫ f(u)`, split into its pieces.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MassEstimate {
    pub linear_part: f64,
    /// Quadrature over the run plus `tail`.
    pub nonlinear_part: f64,
    /// Extrapolated `∫_T^∞ ∫ f(u)`.
    pub tail: f64,
    pub total: f64,
    /// Fitted exponent of `∫ f(u) dx` on the tail window, if any.
    pub tail_exponent: Option<f64>,
}

/// Trapezoidal `∫ f(u)` over the run plus a power-law tail fitted on
/// `[T/3, T]`.
pub fn accumulate_mass(traj: &Trajectory, p: f64, dim: usize) -> Result<MassEstimate> {
    if !traj.is_complete() {
        return Err(Error::InvalidArgument("trajectory did not reach its final time".into()));
    }
    if !(p > 1.0 + 2.0 / dim as f64) {
        return Err(Error::InvalidArgument(format!(
            "mass tail needs p > 1 + 2/n = {}, got {p}",
            1.0 + 2.0 / dim as f64
        )));
    }
    let times = traj.times();
    let f = traj.series(Observable::FMass)?;
    let (p0, p1) = traj.initial_masses;
    let linear_part = p0 + p1;
    if times.len() < 2 {
        return Err(Error::Fit("trajectory has fewer than two samples".into()));
    }
    let body: f64 = times.windows(2).zip(f.windows(2)).map(|(t, v)| 0.5 * (t[1] - t[0]) * (v[0] + v[1])).sum();
    let end = *times.last().unwrap();
    let (tail, tail_exponent) = power_law_tail(&times, &f, end)?;
    let nonlinear_part = body + tail;
    Ok(MassEstimate { linear_part, nonlinear_part, tail, total: linear_part + nonlinear_part, tail_exponent })
}

/// `∫_T^∞ C(1+t)^α dt` for the power law fitted to `values` on `[T/3, T]`.
fn power_law_tail(times: &[f64], values: &[f64], end: f64) -> Result<(f64, Option<f64>)> {
    let window = (end / 3.0, end);
    let in_window: Vec<f64> =
        times.iter().zip(values).filter(|(t, _)| **t >= window.0 && **t <= window.1).map(|(_, v)| *v).collect();
    if in_window.iter().all(|v| *v == 0.0) {
        return Ok((0.0, None));
    }
    let sign = if in_window.iter().all(|v| *v > 0.0) {
        1.0
    } else if in_window.iter().all(|v| *v < 0.0) {
        -1.0
    } else {
        return Err(Error::Fit("source mass changes sign on the tail window".into()));
    };
    let mags: Vec<f64> = values.iter().map(|v| v * sign).collect();
    let fit = decay_fit(times, &mags, window)?;
    if fit.slope >= -1.0 {
        return Err(Error::Fit(format!("tail exponent {} is not integrable", fit.slope)));
    }
    let alpha = fit.slope;
    let tail = fit.intercept.exp() * (1.0 + end).powf(alpha + 1.0) / (-alpha - 1.0);
    Ok((sign * tail, Some(alpha)))
}

/// `sup_t (1+t)^{n/4} ‖u‖₂ + (1+t)^{n/4+k0/2} ‖ |∇|^{k0} u ‖₂` over the samples.
pub fn xnorm(traj: &Trajectory, dim: usize, k0: f64) -> Result<f64> {
    xnorm_until(traj, dim, k0, f64::INFINITY)
}

/// [`xnorm`] restricted to samples with `t <= until`.
pub fn xnorm_until(traj: &Trajectory, dim: usize, k0: f64, until: f64) -> Result<f64> {
    let l2 = traj.series(Observable::L2)?;
    let dk = traj.series(Observable::Dk(k0))?;
    let n = dim as f64;
    Ok(traj
        .samples
        .iter()
        .zip(l2.iter().zip(&dk))
        .filter(|(s, _)| s.time <= until)
        .map(|(s, (a, b))| (1.0 + s.time).powf(n / 4.0) * a + (1.0 + s.time).powf(n / 4.0 + k0 / 2.0) * b)
        .fold(0.0, f64::max))
}

/// Evolves band-filtered data (`u₁ = 0`) linearly and fits the decay of
/// `‖ |ξ|^k χ û(t) ‖₂` on `[T/2, T]`: log-log for the low band, log-linear
/// otherwise.
pub fn band_decay_report(data: &Field, band: Band, k: f64, final_time: f64) -> Result<DecayFit> {
    if !(final_time > 0.0) {
        return Err(Error::InvalidArgument("band report needs T > 0".into()));
    }
    let full = transform(data)?;
    let filtered = band_filter(&full, band);
    let content = filtered.l2_norm(k);
    if !(content > 1e-14 * full.l2_norm(k).max(f64::MIN_POSITIVE)) {
        return Err(Error::InvalidArgument(format!("data has no content in the {band:?} band")));
    }
    let grid = data.grid();
    let mut state = State::new(0.0, filtered, Spectrum::zeros(grid))?;
    let steps = 100;
    let table = PropagatorTable::new(grid, final_time / steps as f64)?;
    let mut times = vec![0.0];
    let mut values = vec![content];
    for j in 1..=steps {
        state = table.apply(&state)?;
        times.push(j as f64 * final_time / steps as f64);
        values.push(state.u_hat().l2_norm(k));
    }
    let scale = if band == Band::Low { FitScale::LogLog } else { FitScale::LogLinear };
    fit_on(&times, &values, (final_time / 2.0, final_time), scale)
}

/// `t^{n/4+k/2} ‖ |∇|^k (e^{tΔ}g - m G_t) ‖₂` with `m = ∫g`.
pub fn heat_profile_error(g: &Field, k: f64, t: f64) -> Result<f64> {
    let spec = transform(g)?;
    let grid = g.grid();
    let m = g.integral();
    let heat = spec.map_radial(|s| heat_multiplier(t, s));
    let state = State::new(t, heat, Spectrum::zeros(grid))?;
    profile_error(&state, m, k)
}

/// One line of an oracle report.
#[derive(Debug, Clone, PartialEq)]
pub struct OracleRow {
    pub check: &'static str,
    pub t: f64,
    pub lhs: f64,
    pub reference: f64,
    pub ratio: f64,
}

/// Ratios for one check over its time samples.
#[derive(Debug, Clone, PartialEq)]
pub struct OracleSeries {
    pub check: &'static str,
    pub rows: Vec<OracleRow>,
}

impl OracleSeries {
    pub fn max_ratio(&self) -> f64 {
        self.rows.iter().map(|r| r.ratio).fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn min_ratio(&self) -> f64 {
        self.rows.iter().map(|r| r.ratio).fold(f64::INFINITY, f64::min)
    }

    /// `max / min` of the ratio column.
    pub fn spread(&self) -> f64 {
        self.max_ratio() / self.min_ratio()
    }
}

fn row(check: &'static str, t: f64, lhs: f64, reference: f64) -> OracleRow {
    OracleRow { check, t, lhs, reference, ratio: lhs / reference }
}

/// Surface measure of the unit sphere in `R^n`.
fn sphere_area(dim: usize) -> f64 {
    match dim {
        1 => 2.0,
        2 => 2.0 * PI,
        _ => 4.0 * PI,
    }
}

/// `‖ |ξ|^k e^{-(1+t)|ξ|²} ‖_{L^r(R^n)}` by radial quadrature, against
/// `(1+t)^{-n/(2r) - k/2}`.
pub fn gaussian_moment(dim: usize, k: f64, r: f64, t: f64) -> Result<OracleRow> {
    if !(k >= 0.0) || !(1.0..=2.0).contains(&r) || !(t >= 0.0) || !(1..=2).contains(&dim) {
        return Err(Error::InvalidArgument(format!("need k >= 0, r in [1,2], t >= 0, got ({k}, {r}, {t})")));
    }
    let a = (1.0 + t) * r;
    let power = k * r + dim as f64 - 1.0;
    let top = (60.0 / a).sqrt();
    let rule = GaussLegendre::new(24);
    let breaks = geometric_breaks(0.0, top, top * 1e-6);
    let integral = rule.integrate_breaks(&breaks, |x| x.powf(power) * (-a * x * x).exp());
    let lhs = (sphere_area(dim) * integral).powf(1.0 / r);
    let n = dim as f64;
    Ok(row("gaussian_moment", t, lhs, (1.0 + t).powf(-n / (2.0 * r) - k / 2.0)))
}

/// `∫₀ᵗ (1+t-s)^{-a} (1+s)^{-b} ds` against `(1+t)^{-min(a,b)}`.
pub fn power_convolution(a: f64, b: f64, t: f64) -> Result<OracleRow> {
    if !(a > 0.0 && b > 0.0 && a.max(b) > 1.0) || !(t >= 0.0) {
        return Err(Error::InvalidArgument(format!("need a, b > 0 with max(a, b) > 1, got ({a}, {b})")));
    }
    let rule = GaussLegendre::new(20);
    let half = t / 2.0;
    let left = rule.integrate_breaks(&geometric_breaks(0.0, half, 0.25), |s| {
        (1.0 + t - s).powf(-a) * (1.0 + s).powf(-b)
    });
    // w = t - s on the right half
    let right = rule.integrate_breaks(&geometric_breaks(0.0, half, 0.25), |w| {
        (1.0 + w).powf(-a) * (1.0 + t - w).powf(-b)
    });
    Ok(row("power_convolution", t, left + right, (1.0 + t).powf(-a.min(b))))
}

/// `∫₀ᵗ e^{-c(t-s)} (t-s)^{-a} (1+s)^{-b} ds` against `(1+t)^{-b}`.
pub fn exponential_convolution(a: f64, b: f64, c: f64, t: f64) -> Result<OracleRow> {
    if !((0.0..1.0).contains(&a) && b > 0.0 && c > 0.0) || !(t >= 0.0) {
        return Err(Error::InvalidArgument(format!("need 0 <= a < 1, b > 0, c > 0, got ({a}, {b}, {c})")));
    }
    // w = t - s = v^{1/(1-a)} removes the endpoint singularity
    let e = 1.0 / (1.0 - a);
    let top = t.powf(1.0 - a);
    let rule = GaussLegendre::new(20);
    let lhs = rule.integrate_breaks(&geometric_breaks(0.0, top, (top * 1e-3).min(0.05)), |v| {
        let w = v.powf(e);
        (-c * w).exp() * (1.0 + t - w).powf(-b) * e
    });
    Ok(row("exponential_convolution", t, lhs, (1.0 + t).powf(-b)))
}

/// `‖ |∇|^k e^{tΔ} g ‖₂` against `t^{-n/2(1/r-1/2) - k/2} ‖g‖_r`.
pub fn heat_decay(g: &Field, k: f64, r: f64, t: f64) -> Result<OracleRow> {
    if !(1.0..=2.0).contains(&r) || !(t > 0.0) || !(k >= 0.0) {
        return Err(Error::InvalidArgument(format!("need r in [1,2], t > 0, k >= 0, got ({r}, {t}, {k})")));
    }
    let grid: &SpectralGrid = g.grid();
    let spec = transform(g)?;
    let lhs = spec.map_radial(|s| heat_multiplier(t, s)).l2_norm(k);
    let lr = (g.values().iter().map(|v| v.abs().powf(r)).sum::<f64>() * grid.cell_volume()).powf(1.0 / r);
    let n = grid.dim() as f64;
    Ok(row("heat_decay", t, lhs, t.powf(-n / 2.0 * (1.0 / r - 0.5) - k / 2.0) * lr))
}

/// Log-spaced sample times on `[lo, hi]`.
pub fn log_times(lo: f64, hi: f64, count: usize) -> Vec<f64> {
    let (a, b) = (lo.ln(), hi.ln());
    (0..count).map(|j| (a + (b - a) * j as f64 / (count - 1) as f64).exp()).collect()
}

/// Parameters of the quadrature oracle suite.
#[derive(Debug, Clone, PartialEq)]
pub struct LemmaParams {
    pub dim: usize,
    pub k: f64,
    pub r: f64,
    pub moment_range: (f64, f64),
    pub power: (f64, f64),
    pub exponential: (f64, f64, f64),
    pub convolution_range: (f64, f64),
    pub samples: usize,
}

impl Default for LemmaParams {
    fn default() -> Self {
        Self {
            dim: 1,
            k: 1.0,
            r: 2.0,
            moment_range: (1.0, 1000.0),
            power: (2.0, 0.5),
            exponential: (0.5, 1.0, 1.0),
            convolution_range: (1.0, 1e4),
            samples: 25,
        }
    }
}

/// Runs the three quadrature checks plus the heat approximation on a grid.
pub fn lemma_oracles(params: &LemmaParams) -> Result<Vec<OracleSeries>> {
    let (m0, m1) = params.moment_range;
    let (c0, c1) = params.convolution_range;
    let moment = log_times(m0, m1, params.samples)
        .into_iter()
        .map(|t| gaussian_moment(params.dim, params.k, params.r, t))
        .collect::<Result<Vec<_>>>()?;
    let power = log_times(c0, c1, params.samples)
        .into_iter()
        .map(|t| power_convolution(params.power.0, params.power.1, t))
        .collect::<Result<Vec<_>>>()?;
    let (ea, eb, ec) = params.exponential;
    let expo = log_times(c0, c1, params.samples)
        .into_iter()
        .map(|t| exponential_convolution(ea, eb, ec, t))
        .collect::<Result<Vec<_>>>()?;
    Ok(vec![
        OracleSeries { check: "gaussian_moment", rows: moment },
        OracleSeries { check: "power_convolution", rows: power },
        OracleSeries { check: "exponential_convolution", rows: expo },
    ])
}

/// Heat-flow checks on a grid: decay ratio and normalized distance to `m G_t`.
pub fn heat_oracles(g: &Field, k: f64, times: &[f64]) -> Result<Vec<OracleSeries>> {
    let decay = times.iter().map(|&t| heat_decay(g, k, 1.0, t)).collect::<Result<Vec<_>>>()?;
    let approx = times
        .iter()
        .map(|&t| {
            let e = heat_profile_error(g, k, t)?;
            Ok(OracleRow { check: "heat_approximation", t, lhs: e, reference: 1.0, ratio: e })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(vec![
        OracleSeries { check: "heat_decay", rows: decay },
        OracleSeries { check: "heat_approximation", rows: approx },
    ])
}

/// Spectrum of `M G_t`, the asymptotic profile.
pub fn profile_spectrum(grid: &SpectralGrid, mass: f64, t: f64) -> Result<Spectrum> {
    Ok(gauss_spectrum(t, grid)?.scale(mass))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::DataSpec;
    use crate::fourier_core::make_grid;
    use crate::propagators::apply_linear;
    use crate::solver::{integrate, Form, Nonlinearity, RunPlan, Sample};

    fn power_series(exponent: f64, t_max: f64, count: usize) -> (Vec<f64>, Vec<f64>) {
        let t: Vec<f64> = (0..count).map(|j| t_max * j as f64 / (count - 1) as f64).collect();
        let v = t.iter().map(|x| (1.0 + x).powf(exponent)).collect();
        (t, v)
    }

    #[test]
    fn exact_power_law_recovered() {
        let (t, v) = power_series(-0.75, 100.0, 201);
        for window in [(0.0, 100.0), (50.0, 100.0), (3.0, 17.0)] {
            let fit = decay_fit(&t, &v, window).unwrap();
            assert!((fit.slope + 0.75).abs() <= 1e-3, "{window:?}");
            assert!(fit.stderr >= 0.0 && fit.stderr < 1e-10);
        }
    }

    #[test]
    fn fit_rejections() {
        let (t, mut v) = power_series(-1.0, 10.0, 50);
        assert!(decay_fit(&t, &v, (9.5, 10.0)).is_err());
        assert!(decay_fit(&t, &v, (5.0, 5.0)).is_err());
        v[40] = 0.0;
        assert!(decay_fit(&t, &v, (0.0, 10.0)).is_err());
    }

    #[test]
    fn heat_flow_of_gaussian_decays_at_quarter_rate() {
        // u(t) = G_{1+t}: closed-form norms on a wide grid
        let grid = make_grid(1, 2048, 200.0).unwrap();
        let t: Vec<f64> = (0..=100).map(|j| j as f64 * 5.0).collect();
        let v: Vec<f64> = t.iter().map(|&x| gauss_spectrum(1.0 + x, &grid).unwrap().l2_norm(0.0)).collect();
        let fit = decay_fit(&t, &v, (250.0, 500.0)).unwrap();
        assert!((fit.slope + 0.25).abs() <= 1e-3);
    }

    fn linear_state(grid: &SpectralGrid, u0: &DataSpec, u1: &DataSpec) -> State {
        State::from_data(&u0.sample(grid).unwrap(), &u1.sample(grid).unwrap()).unwrap()
    }

    #[test]
    fn profile_error_examples() {
        let grid = make_grid(1, 512, 50.0).unwrap();
        let spec = profile_spectrum(&grid, 1.7, 3.0).unwrap();
        let exact = State::new(3.0, spec, Spectrum::zeros(&grid)).unwrap();
        assert!(profile_error(&exact, 1.7, 0.0).unwrap() <= 1e-15);
        assert!(profile_error(&exact, 1.7, 1.0).unwrap() <= 1e-15);
        let at_zero = State::zeros(&grid);
        assert!(profile_error(&at_zero, 1.0, 0.0).is_err());
    }

    #[test]
    fn linear_profile_error_decreases() {
        let grid = make_grid(1, 4096, 200.0).unwrap();
        let st = linear_state(&grid, &DataSpec::gauss(1.0, 1.0), &DataSpec::zero());
        for k in [0.0, 1.0] {
            let e100 = profile_error(&apply_linear(&st, 100.0).unwrap(), 1.0, k).unwrap();
            let e400 = profile_error(&apply_linear(&st, 400.0).unwrap(), 1.0, k).unwrap();
            assert!(e400 <= 0.7 * e100, "k={k}: {e400} vs {e100}");
            let mut prev = f64::INFINITY;
            for t in [100.0, 200.0, 300.0, 400.0] {
                let e = profile_error(&apply_linear(&st, t).unwrap(), 1.0, k).unwrap();
                assert!(e < prev);
                prev = e;
            }
        }
    }

    #[test]
    fn zero_mean_data_decays_faster() {
        let grid = make_grid(1, 4096, 200.0).unwrap();
        let st = linear_state(&grid, &"dgauss(a=1,t=1)".parse().unwrap(), &DataSpec::zero());
        let times: Vec<f64> = (0..=50).map(|j| 250.0 + 5.0 * j as f64).collect();
        let v: Vec<f64> = times.iter().map(|&t| apply_linear(&st, t).unwrap().u_hat().l2_norm(0.0)).collect();
        let fit = decay_fit(&times, &v, (250.0, 500.0)).unwrap();
        assert!(fit.slope <= -0.65, "slope {}", fit.slope);
    }

    #[test]
    fn profile_error_grid_invariant_for_band_limited_states() {
        let coarse = make_grid(1, 1024, 100.0).unwrap();
        let fine = make_grid(1, 2048, 100.0).unwrap();
        let make = |g: &SpectralGrid| {
            let u = Spectrum::from_radial(g, |s| c_n(1) * (-(30.0) * s).exp() * (1.0 + s));
            State::new(30.0, u, Spectrum::zeros(g)).unwrap()
        };
        for k in [0.0, 1.0] {
            let a = profile_error(&make(&coarse), 0.9, k).unwrap();
            let b = profile_error(&make(&fine), 0.9, k).unwrap();
            assert!((a - b).abs() <= 1e-6 * a);
        }
    }

    fn synthetic(times: &[f64], f_mass: impl Fn(f64) -> f64, masses: (f64, f64)) -> Trajectory {
        Trajectory {
            dim: 1,
            k_list: vec![0.0, 1.0],
            nonlinearity: None,
            samples: times
                .iter()
                .map(|&t| Sample {
                    time: t,
                    l2: (1.0 + t).powf(-0.25),
                    dk: vec![(1.0 + t).powf(-0.25), 0.0],
                    l1: 1.0,
                    sup: 1.0,
                    mass: 1.0,
                    f_mass: f_mass(t),
                })
                .collect(),
            snapshots: Vec::new(),
            fields: Vec::new(),
            initial_masses: masses,
            blowup: None,
            guard_warning: None,
            truncated: None,
            max_top_octave: 0.0,
            final_state: None,
        }
    }

    #[test]
    fn mass_examples() {
        let times: Vec<f64> = (0..=10000).map(|j| j as f64 * 0.01).collect();
        let zero = synthetic(&times, |_| 0.0, (0.3, 0.4));
        let m = accumulate_mass(&zero, 4.0, 1).unwrap();
        assert_eq!((m.total, m.tail), (0.7, 0.0));

        let tr = synthetic(&times, |t| (1.0 + t).powi(-2), (0.0, 0.0));
        let m = accumulate_mass(&tr, 4.0, 1).unwrap();
        assert!((m.tail - 1.0 / 101.0).abs() <= 0.02 / 101.0);
        assert!((m.total - 1.0).abs() < 1e-3);
        assert_eq!(m.total, m.linear_part + m.nonlinear_part);

        assert!(accumulate_mass(&tr, 3.0, 1).is_err());
        assert!(accumulate_mass(&tr, 2.0, 2).is_err());
        let flat = synthetic(&times, |t| (1.0 + t).powf(-0.8), (0.0, 0.0));
        assert!(accumulate_mass(&flat, 4.0, 1).is_err());
    }

    #[test]
    fn tail_vanishes_with_horizon() {
        let mut prev = f64::INFINITY;
        for end in [10.0, 100.0, 1000.0] {
            let times: Vec<f64> = (0..=300).map(|j| end * j as f64 / 300.0).collect();
            let m = accumulate_mass(&synthetic(&times, |t| (1.0 + t).powf(-1.5), (0.0, 0.0)), 4.0, 1).unwrap();
            assert!(m.tail < prev);
            prev = m.tail;
        }
        assert!(prev < 0.07);
    }

    #[test]
    fn xnorm_examples() {
        let times: Vec<f64> = (0..100).map(|j| j as f64).collect();
        let mut tr = synthetic(&times, |_| 0.0, (0.0, 0.0));
        for s in &mut tr.samples {
            s.dk[1] = 0.0;
        }
        assert!((xnorm(&tr, 1, 1.0).unwrap() - 1.0).abs() < 1e-12);
        for s in &mut tr.samples {
            s.l2 = 0.0;
        }
        assert_eq!(xnorm(&tr, 1, 1.0).unwrap(), 0.0);
        assert!(matches!(xnorm(&tr, 1, 1.5), Err(Error::MissingObservable(_))));
    }

    #[test]
    fn band_decay_examples() {
        let grid = make_grid(1, 2048, 200.0).unwrap();
        let data = DataSpec::gauss(1.0, 0.05).sample(&grid).unwrap();
        let high = band_decay_report(&data, Band::High, 0.0, 20.0).unwrap();
        assert!(high.slope <= -0.9, "high {}", high.slope);
        let mid = band_decay_report(&data, Band::Mid, 0.0, 20.0).unwrap();
        assert!(mid.slope <= -0.125, "mid {}", mid.slope);
        let low = band_decay_report(&data, Band::Low, 0.0, 200.0).unwrap();
        assert!((low.slope + 0.25).abs() <= 0.05, "low {}", low.slope);

        // data without high-frequency content
        let wide = DataSpec::gauss(1.0, 100.0).sample(&grid).unwrap();
        assert!(band_decay_report(&wide, Band::High, 0.0, 20.0).is_err());
    }

    #[test]
    fn quadrature_oracles() {
        // exact Gaussian moment: (√π/2 · (2(1+t))^{-3/2})^{1/2}
        for &t in &[1.0, 10.0, 1000.0] {
            let r = gaussian_moment(1, 1.0, 2.0, t).unwrap();
            let exact = (PI.sqrt() / 2.0 * (2.0 * (1.0 + t)).powf(-1.5)).sqrt();
            assert!((r.lhs - exact).abs() <= 1e-10 * exact);
        }
        let s = &lemma_oracles(&LemmaParams::default()).unwrap();
        assert!(s[0].spread() <= 1.01);
        assert!(s[1].spread() <= 10.0);
        assert!(s[2].spread() <= 10.0);

        // direct check of one convolution value: a = 2, b = 2 at t = 0 is 0
        assert_eq!(power_convolution(2.0, 2.0, 0.0).unwrap().lhs, 0.0);
        // ∫₀ᵗ (1+t-s)^{-2} ds = 1 - 1/(1+t) for b -> product with (1+s)^{-b}, b small
        let r = power_convolution(2.0, 1e-12, 9.0).unwrap();
        assert!((r.lhs - 0.9).abs() < 1e-9);
        // a = 0: ∫₀ᵗ e^{-c w}(1+t-w)^{-b} with b -> 0 gives (1 - e^{-ct})/c
        let r = exponential_convolution(0.0, 1e-12, 2.0, 3.0).unwrap();
        assert!((r.lhs - (1.0 - (-6.0f64).exp()) / 2.0).abs() < 1e-9);
    }

    #[test]
    fn oracle_hypotheses_enforced() {
        assert!(power_convolution(1.0, 0.5, 1.0).is_err());
        assert!(power_convolution(0.5, 1.5, 1.0).is_ok());
        assert!(exponential_convolution(1.0, 1.0, 1.0, 1.0).is_err());
        assert!(exponential_convolution(0.5, 0.0, 1.0, 1.0).is_err());
        assert!(gaussian_moment(1, 1.0, 3.0, 1.0).is_err());
        assert!(gaussian_moment(1, -1.0, 2.0, 1.0).is_err());
    }

    #[test]
    fn heat_oracles_on_grid() {
        let grid = make_grid(1, 4096, 200.0).unwrap();
        let g = "gauss(a=1,t=1,cx=2)".parse::<DataSpec>().unwrap().sample(&grid).unwrap();
        let times = [10.0, 40.0, 160.0, 640.0];
        let s = heat_oracles(&g, 1.0, &times).unwrap();
        assert!(s[0].spread() < 10.0);
        let e: Vec<f64> = s[1].rows.iter().map(|r| r.ratio).collect();
        assert!(e.windows(2).all(|w| w[1] < w[0]), "{e:?}");
    }

    #[test]
    fn nonlinear_mass_estimate_small_data() {
        let grid = make_grid(1, 1024, 100.0).unwrap();
        let st = linear_state(&grid, &DataSpec::gauss(0.5, 1.0), &DataSpec::zero());
        let nl = Nonlinearity::new(4.0, Form::SignedPower).unwrap();
        let mut plan = RunPlan::new(st, Some(nl), 100.0, 0.05);
        plan.sample_dt = 0.5;
        let traj = integrate(&plan).unwrap();
        let m = accumulate_mass(&traj, 4.0, 1).unwrap();
        assert!(m.nonlinear_part > 0.0 && m.tail > 0.0);
        assert!(((m.total - 0.5) / 0.5).abs() < 0.2);
        let exponent = m.tail_exponent.unwrap();
        assert!((exponent + 1.5).abs() < 0.2, "{exponent}");
    }
}
