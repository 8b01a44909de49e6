//! Time integration of `u_tt - Δu + u_t - Δu_t = f(u)` in Duhamel form.
//!
//! The linear part is propagated exactly by the per-mode matrices of
//! [`crate::propagators`]; the source integral `∫ K1(h-τ) f̂(u(t+τ)) dτ` over
//! one step is handled by a second-order exponential Runge–Kutta pair:
//!
//! ```text
//! predictor  û*    = K0 û + K1 ût + W0 F(u)
//! corrector  û'    = û* + W1 (F(u*) - F(u))
//! ```
//!
//! with `W0 = ∫₀ʰ K1(σ) dσ` and `W1 = h⁻¹ ∫₀ʰ K1(σ)(h-σ) dσ` computed per
//! mode. The velocity row uses `∫₀ʰ ∂tK1 = K1(h)` and
//! `h⁻¹∫₀ʰ ∂tK1(σ)(h-σ) dσ = W0/h`.

use std::collections::BTreeSet;
use std::fmt;
use std::str::FromStr;

use num_complex::Complex64;

use crate::config::ExperimentConfig;
use crate::error::{Error, Result};
use crate::fourier_core::{inverse_transform, transform, transform_unchecked, Field, SpectralGrid, Spectrum};
use crate::propagators::{k1_near_singular, phi1, phi2, PropagatorTable};
use crate::quadrature::GaussLegendre;

/// Phase point `(û, ∂tû)` at a time.
#[derive(Debug, Clone, PartialEq)]
pub struct State {
    time: f64,
    u_hat: Spectrum,
    ut_hat: Spectrum,
}

impl State {
    pub fn new(time: f64, u_hat: Spectrum, ut_hat: Spectrum) -> Result<Self> {
        if u_hat.grid() != ut_hat.grid() {
            return Err(Error::GridMismatch);
        }
        if !(time >= 0.0) {
            return Err(Error::InvalidArgument(format!("state time must be >= 0, got {time}")));
        }
        if !u_hat.is_finite() || !ut_hat.is_finite() {
            return Err(Error::NonFinite("state"));
        }
        Ok(Self { time, u_hat, ut_hat })
    }

    /// State at `t = 0` from physical data.
    pub fn from_data(u0: &Field, u1: &Field) -> Result<Self> {
        let mut a = transform(u0)?;
        let mut b = transform(u1)?;
        a.enforce_real_symmetry();
        b.enforce_real_symmetry();
        State::new(0.0, a, b)
    }

    pub fn zeros(grid: &SpectralGrid) -> Self {
        Self { time: 0.0, u_hat: Spectrum::zeros(grid), ut_hat: Spectrum::zeros(grid) }
    }

    pub fn time(&self) -> f64 {
        self.time
    }

    pub fn grid(&self) -> &SpectralGrid {
        self.u_hat.grid()
    }

    pub fn u_hat(&self) -> &Spectrum {
        &self.u_hat
    }

    pub fn ut_hat(&self) -> &Spectrum {
        &self.ut_hat
    }

    /// `u(t)` in physical space.
    pub fn u(&self) -> Field {
        inverse_transform(&self.u_hat)
    }
}

/// Shape of the source term.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Form {
    /// `f(u) = |u|^p`
    AbsPower,
    /// `f(u) = |u|^(p-1) u`
    SignedPower,
}

impl fmt::Display for Form {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Form::AbsPower => "abs",
            Form::SignedPower => "signed",
        })
    }
}

impl FromStr for Form {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "abs" => Ok(Form::AbsPower),
            "signed" => Ok(Form::SignedPower),
            other => Err(Error::Config(format!("unknown nonlinearity form `{other}` (abs|signed)"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Nonlinearity {
    p: f64,
    form: Form,
}

impl Nonlinearity {
    pub fn new(p: f64, form: Form) -> Result<Self> {
        if !(p > 1.0) || !p.is_finite() {
            return Err(Error::InvalidArgument(format!("power must exceed 1, got {p}")));
        }
        Ok(Self { p, form })
    }

    pub fn p(&self) -> f64 {
        self.p
    }

    pub fn form(&self) -> Form {
        self.form
    }

    #[inline]
    pub fn eval(&self, u: f64) -> f64 {
        let a = u.abs();
        let mag = if self.p.fract() == 0.0 && self.p <= 16.0 {
            a.powi(self.p as i32)
        } else {
            a.powf(self.p)
        };
        match self.form {
            Form::AbsPower => mag,
            Form::SignedPower => mag.copysign(u),
        }
    }
}

/// Pointwise `f(u)`.
pub fn evaluate_f(u: &Field, nl: &Nonlinearity) -> Field {
    Field::from_parts(u.grid().clone(), u.values().iter().map(|&v| nl.eval(v)).collect())
}

/// Per-mode weights of the two-stage exponential integrator.
#[derive(Debug, Clone)]
struct DuhamelWeights {
    w0: Vec<f64>,
    w1: Vec<f64>,
}

/// Threshold on `|1 - s|` below which the weights are integrated numerically.
const WEIGHT_SINGULAR_BAND: f64 = 0.1;

fn duhamel_weights(h: f64, s: f64) -> (f64, f64) {
    if (1.0 - s).abs() < WEIGHT_SINGULAR_BAND {
        let rule = GaussLegendre::new(16);
        let panels = (h / 0.5).ceil().max(1.0) as usize;
        let w0 = rule.integrate_composite(0.0, h, panels, |x| k1_near_singular(x, s));
        let w1 = rule.integrate_composite(0.0, h, panels, |x| k1_near_singular(x, s) * (h - x)) / h;
        (w0, w1)
    } else {
        let g0 = |a: f64| h * phi1(-a * h);
        let g1 = |a: f64| h * phi2(-a * h);
        let d = 1.0 - s;
        ((g0(s) - g0(1.0)) / d, (g1(s) - g1(1.0)) / d)
    }
}

/// One-step map for a fixed `h` and source term.
#[derive(Debug, Clone)]
pub struct Stepper {
    h: f64,
    nonlinearity: Option<Nonlinearity>,
    propagator: PropagatorTable,
    weights: DuhamelWeights,
    dealias: bool,
    ceiling: f64,
}

impl Stepper {
    pub fn new(grid: &SpectralGrid, h: f64, nonlinearity: Option<Nonlinearity>) -> Result<Self> {
        if !(h > 0.0) || !h.is_finite() {
            return Err(Error::InvalidArgument(format!("step must be positive, got {h}")));
        }
        let propagator = PropagatorTable::new(grid, h)?;
        let (w0, w1) = (0..grid.len()).map(|i| duhamel_weights(h, grid.xi_squared(i))).unzip();
        Ok(Self {
            h,
            nonlinearity,
            propagator,
            weights: DuhamelWeights { w0, w1 },
            dealias: false,
            ceiling: 1e150,
        })
    }

    /// Enables 2/3-rule truncation of the source spectrum.
    pub fn with_dealias(mut self, on: bool) -> Self {
        self.dealias = on;
        self
    }

    /// Sets the magnitude of `u` treated as numerical blow-up.
    pub fn with_ceiling(mut self, ceiling: f64) -> Self {
        self.ceiling = ceiling;
        self
    }

    pub fn h(&self) -> f64 {
        self.h
    }

    fn source(&self, u: &Field, nl: &Nonlinearity) -> Spectrum {
        let mut f = transform_unchecked(&evaluate_f(u, nl));
        if self.dealias {
            f.truncate_two_thirds();
        }
        f
    }

    fn check(&self, u: &Field, last: f64) -> Result<()> {
        if u.values().iter().any(|v| !v.is_finite() || v.abs() > self.ceiling) {
            Err(Error::BlowupDetected { last_finite_time: last })
        } else {
            Ok(())
        }
    }

    /// Advances `state` by one step of length `h`.
    pub fn step(&self, state: &State) -> Result<State> {
        if state.grid() != self.propagator.grid() {
            return Err(Error::GridMismatch);
        }
        let last = state.time();
        let Some(nl) = self.nonlinearity else {
            return self.propagator.apply(state);
        };
        let entries = self.propagator.entries();
        let (w0, w1) = (&self.weights.w0, &self.weights.w1);

        let u = state.u();
        self.check(&u, last)?;
        let f_now = self.source(&u, &nl);

        let mut a = state.u_hat().clone();
        let mut b = state.ut_hat().clone();
        for (i, (x, y)) in a.coeffs_mut().iter_mut().zip(b.coeffs_mut()).enumerate() {
            let m = &entries[i];
            let (nx, ny) = m.apply(*x, *y);
            let f = f_now.coeffs()[i];
            *x = nx + f * w0[i];
            *y = ny + f * m.k1;
        }
        let u_pred = inverse_transform(&a);
        self.check(&u_pred, last)?;
        let f_pred = self.source(&u_pred, &nl);

        let inv_h = 1.0 / self.h;
        for (i, (x, y)) in a.coeffs_mut().iter_mut().zip(b.coeffs_mut()).enumerate() {
            let df: Complex64 = f_pred.coeffs()[i] - f_now.coeffs()[i];
            *x += df * w1[i];
            *y += df * (w0[i] * inv_h);
        }
        a.enforce_real_symmetry();
        b.enforce_real_symmetry();
        if !a.is_finite() || !b.is_finite() {
            return Err(Error::BlowupDetected { last_finite_time: last });
        }
        self.check(&inverse_transform(&a), last)?;
        State::new(last + self.h, a, b)
    }
}

/// One-step map of the semilinear problem.
pub fn step(state: &State, h: f64, nl: &Nonlinearity) -> Result<State> {
    Stepper::new(state.grid(), h, Some(*nl))?.step(state)
}

/// Observables recorded at one sample time.
#[derive(Debug, Clone, PartialEq)]
pub struct Sample {
    pub time: f64,
    pub l2: f64,
    /// `‖ |∇|^k u ‖₂` for each configured `k`, in order.
    pub dk: Vec<f64>,
    pub l1: f64,
    pub sup: f64,
    /// `∫ u dx`
    pub mass: f64,
    /// `∫ f(u) dx`
    pub f_mass: f64,
}

/// Physical field `u` at a time.
#[derive(Debug, Clone, PartialEq)]
pub struct Snapshot {
    pub time: f64,
    pub field: Field,
}

/// Time series of observables plus optional state snapshots.
#[derive(Debug, Clone)]
pub struct Trajectory {
    pub dim: usize,
    pub k_list: Vec<f64>,
    pub nonlinearity: Option<Nonlinearity>,
    pub samples: Vec<Sample>,
    pub snapshots: Vec<State>,
    /// Physical snapshots, lighter than full states.
    pub fields: Vec<Snapshot>,
    /// `(∫u₀, ∫u₁)`
    pub initial_masses: (f64, f64),
    /// Last finite time when the run stopped on blow-up.
    pub blowup: Option<f64>,
    /// Largest outer-shell mass fraction seen when it exceeded the guard in
    /// a linear run.
    pub guard_warning: Option<f64>,
    /// Time at which a nonlinear run was stopped by the truncation guard
    /// (only with [`RunPlan::stop_on_guard`]).
    pub truncated: Option<f64>,
    /// Largest top-octave energy fraction of `û` over the samples.
    pub max_top_octave: f64,
    pub final_state: Option<State>,
}

/// Named column of a trajectory.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Observable {
    L2,
    Dk(f64),
    L1,
    Sup,
    Mass,
    FMass,
}

impl Trajectory {
    pub fn times(&self) -> Vec<f64> {
        self.samples.iter().map(|s| s.time).collect()
    }

    /// Reached the final time: neither blown up nor stopped by the guard.
    pub fn is_complete(&self) -> bool {
        self.blowup.is_none() && self.truncated.is_none()
    }

    pub fn series(&self, obs: Observable) -> Result<Vec<f64>> {
        let pick: Box<dyn Fn(&Sample) -> f64> = match obs {
            Observable::L2 => Box::new(|s| s.l2),
            Observable::L1 => Box::new(|s| s.l1),
            Observable::Sup => Box::new(|s| s.sup),
            Observable::Mass => Box::new(|s| s.mass),
            Observable::FMass => Box::new(|s| s.f_mass),
            Observable::Dk(k) => {
                let j = self
                    .k_list
                    .iter()
                    .position(|&x| x == k)
                    .ok_or_else(|| Error::MissingObservable(format!("dk_{k}")))?;
                Box::new(move |s| s.dk[j])
            }
        };
        Ok(self.samples.iter().map(pick).collect())
    }

    /// Snapshot closest to `t`.
    pub fn snapshot_near(&self, t: f64) -> Option<&State> {
        self.snapshots.iter().min_by(|a, b| (a.time() - t).abs().total_cmp(&(b.time() - t).abs()))
    }
}

/// Everything needed to integrate one run.
#[derive(Debug, Clone)]
pub struct RunPlan {
    pub initial: State,
    pub nonlinearity: Option<Nonlinearity>,
    pub final_time: f64,
    pub dt: f64,
    pub sample_dt: f64,
    pub k_list: Vec<f64>,
    /// Times at which full states are kept (rounded to the step grid).
    pub snapshot_times: Vec<f64>,
    /// Times at which only the physical field `u` is kept.
    pub field_times: Vec<f64>,
    /// Outer-shell L1 fraction above which nonlinear runs abort.
    pub guard: f64,
    /// Stop and flag the trajectory instead of failing when the guard trips
    /// in a nonlinear run.
    pub stop_on_guard: bool,
    pub dealias: bool,
}

impl RunPlan {
    pub fn new(initial: State, nonlinearity: Option<Nonlinearity>, final_time: f64, dt: f64) -> Self {
        Self {
            initial,
            nonlinearity,
            final_time,
            dt,
            sample_dt: final_time / 200.0,
            k_list: vec![0.0, 1.0],
            snapshot_times: Vec::new(),
            field_times: Vec::new(),
            guard: 1e-6,
            stop_on_guard: false,
            dealias: false,
        }
    }

    /// Snapshot times `0, c, 2c, …` up to the final time.
    pub fn with_snapshot_cadence(mut self, cadence: f64) -> Self {
        let n = (self.final_time / cadence).floor() as usize;
        self.snapshot_times = (0..=n).map(|j| j as f64 * cadence).collect();
        self
    }
}

/// Growth of `sup|u|` over its initial value (at least 1) treated as blow-up
/// by [`integrate`].
pub const BLOWUP_GROWTH: f64 = 1e10;

/// Fraction of the shell band used by the truncation guard.
pub const GUARD_SHELL: f64 = 0.1;

fn sample_of(state: &State, field: &Field, k_list: &[f64], nl: Option<&Nonlinearity>) -> Sample {
    let f_mass = match nl {
        Some(nl) => field.values().iter().map(|&v| nl.eval(v)).sum::<f64>() * field.grid().cell_volume(),
        None => 0.0,
    };
    Sample {
        time: state.time(),
        l2: state.u_hat().l2_norm(0.0),
        dk: k_list.iter().map(|&k| state.u_hat().l2_norm(k)).collect(),
        l1: field.l1_norm(),
        sup: field.sup_norm(),
        mass: field.integral(),
        f_mass,
    }
}

fn shell_fraction(field: &Field) -> f64 {
    let grid = field.grid();
    let total: f64 = field.values().iter().map(|v| v.abs()).sum();
    if total == 0.0 {
        return 0.0;
    }
    let shell: f64 = field
        .values()
        .iter()
        .enumerate()
        .filter(|(i, _)| grid.in_outer_shell(*i, GUARD_SHELL))
        .map(|(_, v)| v.abs())
        .sum();
    shell / total
}

/// Integrates a plan, sampling observables every `sample_dt` (rounded to
/// whole steps) and always at the final step.
pub fn integrate(plan: &RunPlan) -> Result<Trajectory> {
    let dt = plan.dt;
    if !(dt > 0.0) || !(plan.final_time > 0.0) {
        return Err(Error::InvalidArgument("run needs dt > 0 and T > 0".into()));
    }
    let total_steps = (plan.final_time / dt).round().max(1.0) as usize;
    let every = (plan.sample_dt / dt).round().max(1.0) as usize;
    let to_steps = |times: &[f64]| -> BTreeSet<usize> { times.iter().map(|t| (t / dt).round() as usize).collect() };
    let snap_steps = to_steps(&plan.snapshot_times);
    let field_steps = to_steps(&plan.field_times);
    let want_sample = |n: usize| n.is_multiple_of(every) || n == total_steps;
    let want_snapshot = |n: usize| snap_steps.contains(&n);
    let want_field = |n: usize| field_steps.contains(&n);
    let wanted = |n: usize| want_sample(n) || want_snapshot(n) || want_field(n);
    let nl = plan.nonlinearity;

    let initial_u = plan.initial.u();
    let initial_ut = inverse_transform(plan.initial.ut_hat());
    let mut traj = Trajectory {
        dim: plan.initial.grid().dim(),
        k_list: plan.k_list.clone(),
        nonlinearity: nl,
        samples: Vec::new(),
        snapshots: Vec::new(),
        fields: Vec::new(),
        initial_masses: (initial_u.integral(), initial_ut.integral()),
        blowup: None,
        guard_warning: None,
        truncated: None,
        max_top_octave: 0.0,
        final_state: None,
    };

    // Ok(false) asks the caller to stop: the guard tripped with `stop_on_guard`
    let record = |traj: &mut Trajectory, n: usize, state: &State| -> Result<bool> {
        if !wanted(n) {
            return Ok(true);
        }
        // re-stamp the clock on the step grid to avoid drift from repeated additions
        let state = State { time: n as f64 * dt, ..state.clone() };
        let field = state.u();
        if want_field(n) {
            traj.fields.push(Snapshot { time: state.time(), field: field.clone() });
        }
        if want_sample(n) {
            let frac = shell_fraction(&field);
            if frac > plan.guard {
                if nl.is_some() {
                    if plan.stop_on_guard {
                        traj.truncated = Some(state.time());
                        return Ok(false);
                    }
                    return Err(Error::TruncationGuard { time: state.time(), fraction: frac, limit: plan.guard });
                }
                traj.guard_warning = Some(traj.guard_warning.unwrap_or(0.0).max(frac));
            }
            traj.max_top_octave = traj.max_top_octave.max(state.u_hat().top_octave_fraction());
            traj.samples.push(sample_of(&state, &field, &plan.k_list, nl.as_ref()));
        }
        if want_snapshot(n) {
            traj.snapshots.push(state);
        }
        Ok(true)
    };

    if !record(&mut traj, 0, &plan.initial)? {
        return Ok(traj);
    }
    let mut state = plan.initial.clone();
    match nl {
        None => {
            // exact propagation between consecutive events
            let events: Vec<usize> = (1..=total_steps).filter(|&n| wanted(n)).collect();
            let mut tables: Vec<(usize, PropagatorTable)> = Vec::new();
            let mut prev = 0;
            for n in events {
                let gap = n - prev;
                let table = match tables.iter().position(|(g, _)| *g == gap) {
                    Some(j) => &tables[j].1,
                    None => {
                        tables.push((gap, PropagatorTable::new(state.grid(), gap as f64 * dt)?));
                        &tables.last().unwrap().1
                    }
                };
                state = table.apply(&state)?;
                record(&mut traj, n, &state)?;
                prev = n;
            }
        }
        Some(_) => {
            let ceiling = BLOWUP_GROWTH * initial_u.sup_norm().max(1.0);
            let stepper = Stepper::new(state.grid(), dt, nl)?.with_dealias(plan.dealias).with_ceiling(ceiling);
            for n in 1..=total_steps {
                match stepper.step(&state) {
                    Ok(next) => state = next,
                    Err(Error::BlowupDetected { last_finite_time }) => {
                        traj.blowup = Some(last_finite_time);
                        return Ok(traj);
                    }
                    Err(e) => return Err(e),
                }
                if !record(&mut traj, n, &state)? {
                    return Ok(traj);
                }
            }
        }
    }
    traj.final_state = Some(State { time: total_steps as f64 * dt, ..state });
    Ok(traj)
}

/// Builds the initial state described by a config.
pub fn initial_state(config: &ExperimentConfig) -> Result<State> {
    let grid = config.grid()?;
    State::from_data(&config.u0.sample(&grid)?, &config.u1.sample(&grid)?)
}

/// Builds the run plan of a config (no snapshots).
pub fn plan(config: &ExperimentConfig) -> Result<RunPlan> {
    config.validate()?;
    let mut plan = RunPlan::new(initial_state(config)?, config.nonlinearity()?, config.final_time, config.dt);
    plan.sample_dt = config.sample_dt;
    plan.k_list = config.k_list.clone();
    plan.guard = config.guard;
    plan.dealias = config.dealias;
    Ok(plan)
}

/// Integrates the run described by `config`.
pub fn run(config: &ExperimentConfig) -> Result<Trajectory> {
    integrate(&plan(config)?)
}
