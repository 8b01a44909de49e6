//! The six experiments: each turns a resolved config into named CSV/text
//! outputs without touching the filesystem.

use rayon::prelude::*;

use viscowave::analysis::{
    accumulate_mass, band_decay_report, decay_fit, exponential_convolution, gaussian_moment,
    heat_oracles, log_times, power_convolution, profile_error, xnorm, xnorm_until, DecayFit, FitScale,
    OracleRow, OracleSeries,
};
use viscowave::blowup::{
    annulus_integral, classify, derivative_bound_report, kr_functional, viscoelastic_term, Classification,
    Thresholds,
};
use viscowave::fourier_core::Band;
use viscowave::propagators::apply_linear;
use viscowave::solver::{integrate, plan, Observable, Trajectory};
use viscowave::{Error, Experiment, ExperimentConfig, Result};

use crate::csv::{num, opt, Table};

/// Whether the run ended normally.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Outcome {
    Completed,
    /// A run of an experiment that expects global solutions blew up.
    BlowupInRun { time: f64 },
}

/// Named outputs of one experiment plus extra manifest lines.
#[derive(Debug, Clone, PartialEq)]
pub struct Report {
    pub files: Vec<(String, String)>,
    pub notes: Vec<(String, String)>,
    pub outcome: Outcome,
}

impl Report {
    pub fn file(&self, name: &str) -> Option<&str> {
        self.files.iter().find(|(n, _)| n == name).map(|(_, c)| c.as_str())
    }
}

/// Runs the experiment named by `config.experiment`.
pub fn run_experiment(config: &ExperimentConfig) -> Result<Report> {
    config.validate()?;
    match config.experiment {
        Experiment::LinearDecay => linear_decay(config),
        Experiment::Profile => profile(config),
        Experiment::NonlinearDecay => nonlinear_decay(config),
        Experiment::FujitaSweep => fujita_sweep(config),
        Experiment::BlowupFunctional => blowup_functional(config),
        Experiment::LemmaOracles => lemma_oracles(config),
    }
}

/// Sample times the solver aims for, including those lost to a blow-up.
pub fn planned_times(config: &ExperimentConfig) -> Vec<f64> {
    let total = (config.final_time / config.dt).round().max(1.0) as usize;
    let every = (config.sample_dt / config.dt).round().max(1.0) as usize;
    let mut steps: Vec<usize> = (0..=total).step_by(every).collect();
    if *steps.last().unwrap() != total {
        steps.push(total);
    }
    steps.into_iter().map(|n| n as f64 * config.dt).collect()
}

fn k_label(k: f64) -> String {
    format!("{k}")
}

/// `t, l2, l1, sup, dk_<k>…, mass, f_mass`; rows after a blow-up are `NA`.
pub fn observables_table(traj: &Trajectory, planned: &[f64]) -> Table {
    let mut header: Vec<String> = ["t", "l2", "l1", "sup"].iter().map(|s| s.to_string()).collect();
    header.extend(traj.k_list.iter().map(|k| format!("dk_{}", k_label(*k))));
    header.extend(["mass".to_string(), "f_mass".to_string()]);
    let width = header.len();
    let mut table = Table::new(header);
    for (i, &t) in planned.iter().enumerate() {
        match traj.samples.get(i) {
            Some(s) => {
                let mut row = vec![num(s.time), num(s.l2), num(s.l1), num(s.sup)];
                row.extend(s.dk.iter().map(|v| num(*v)));
                row.extend([num(s.mass), num(s.f_mass)]);
                table.push(row);
            }
            None => {
                let mut row = vec![num(t)];
                row.resize(width, "NA".to_string());
                table.push(row);
            }
        }
    }
    table
}

const FIT_HEADER: [&str; 10] =
    ["quantity", "k", "scale", "slope", "intercept", "stderr", "t_min", "t_max", "samples", "expected_slope"];

fn fit_row(quantity: &str, k: f64, scale: FitScale, fit: Result<DecayFit>, expected: Option<f64>) -> Vec<String> {
    let scale = match scale {
        FitScale::LogLog => "loglog",
        FitScale::LogLinear => "loglinear",
    };
    let mut row = vec![quantity.to_string(), num(k), scale.to_string()];
    match fit {
        Ok(f) => row.extend([
            num(f.slope),
            num(f.intercept),
            num(f.stderr),
            num(f.window.0),
            num(f.window.1),
            f.samples.to_string(),
        ]),
        Err(_) => row.extend(std::iter::repeat_n("NA".to_string(), 6)),
    }
    row.push(opt(expected));
    row
}

/// Log-log fits of `‖u‖₂` and each `‖|∇|^k u‖₂` on `[T/2, T]`.
fn decay_fits(traj: &Trajectory, final_time: f64) -> Table {
    let n = traj.dim as f64;
    let window = (final_time / 2.0, final_time);
    let times = traj.times();
    let mut table = Table::new(FIT_HEADER);
    let l2 = traj.series(Observable::L2);
    table.push(fit_row("l2", 0.0, FitScale::LogLog, l2.and_then(|v| decay_fit(&times, &v, window)), Some(-n / 4.0)));
    for &k in &traj.k_list {
        let v = traj.series(Observable::Dk(k));
        table.push(fit_row(
            &format!("dk_{}", k_label(k)),
            k,
            FitScale::LogLog,
            v.and_then(|v| decay_fit(&times, &v, window)),
            Some(-n / 4.0 - k / 2.0),
        ));
    }
    table
}

fn key_values(rows: &[(String, String)]) -> String {
    let mut t = Table::new(["key", "value"]);
    for (k, v) in rows {
        t.push(vec![k.clone(), v.clone()]);
    }
    t.render()
}

fn run_notes(traj: &Trajectory) -> Vec<(String, String)> {
    vec![
        ("guard_warning".into(), opt(traj.guard_warning)),
        ("max_top_octave_fraction".into(), num(traj.max_top_octave)),
        ("blowup_time".into(), opt(traj.blowup)),
    ]
}

fn linear_decay(config: &ExperimentConfig) -> Result<Report> {
    let traj = integrate(&plan(config)?)?;
    Ok(Report {
        files: vec![
            ("observables.csv".into(), observables_table(&traj, &planned_times(config)).render()),
            ("fits.csv".into(), decay_fits(&traj, config.final_time).render()),
        ],
        notes: run_notes(&traj),
        outcome: Outcome::Completed,
    })
}

fn profile_header(k_list: &[f64]) -> Vec<String> {
    let mut h = vec!["t".to_string(), "M_used".to_string(), "mass_source".to_string()];
    h.extend(k_list.iter().map(|k| format!("err_k{}", k_label(*k))));
    h
}

fn profile(config: &ExperimentConfig) -> Result<Report> {
    let plan = plan(config)?;
    let traj = integrate(&plan)?;
    let mass = traj.initial_masses.0 + traj.initial_masses.1;
    let count = 40;
    let times: Vec<f64> = (1..=count).map(|j| config.final_time * j as f64 / count as f64).collect();
    let mut table = Table::new(profile_header(&config.k_list));
    let mut errors: Vec<Vec<f64>> = vec![Vec::new(); config.k_list.len()];
    for &t in &times {
        let state = apply_linear(&plan.initial, t)?;
        let mut row = vec![num(t), num(mass), "initial".to_string()];
        for (j, &k) in config.k_list.iter().enumerate() {
            let e = profile_error(&state, mass, k)?;
            errors[j].push(e);
            row.push(num(e));
        }
        table.push(row);
    }
    let mut fits = decay_fits(&traj, config.final_time);
    let mut summary = vec![("mass_initial".to_string(), num(mass))];
    let quarter = count / 4 - 1;
    for (j, &k) in config.k_list.iter().enumerate() {
        let fit = decay_fit(&times, &errors[j], (config.final_time / 2.0, config.final_time));
        fits.push(fit_row(&format!("profile_k{}", k_label(k)), k, FitScale::LogLog, fit, None));
        summary.push((format!("profile_ratio_k{}", k_label(k)), num(errors[j][count - 1] / errors[j][quarter])));
    }
    Ok(Report {
        files: vec![
            ("observables.csv".into(), observables_table(&traj, &planned_times(config)).render()),
            ("fits.csv".into(), fits.render()),
            ("profile.csv".into(), table.render()),
            ("summary.csv".into(), key_values(&summary)),
        ],
        notes: run_notes(&traj),
        outcome: Outcome::Completed,
    })
}

/// Order used for the weighted sup-in-time norm: the largest configured `k`.
pub fn xnorm_order(config: &ExperimentConfig) -> f64 {
    config.k_list.iter().cloned().fold(0.0, f64::max)
}

fn nonlinear_decay(config: &ExperimentConfig) -> Result<Report> {
    let mut plan = plan(config)?;
    let count = if config.dim == 1 { 20 } else { 10 };
    plan.snapshot_times = (0..=count).map(|j| config.final_time * j as f64 / count as f64).collect();
    let traj = integrate(&plan)?;
    let observables = observables_table(&traj, &planned_times(config));
    let fits = decay_fits(&traj, config.final_time);
    let p_mass = traj.initial_masses.0 + traj.initial_masses.1;
    let mut summary = vec![
        ("P0".to_string(), num(traj.initial_masses.0)),
        ("P1".to_string(), num(traj.initial_masses.1)),
    ];
    let mut table = Table::new(profile_header(&config.k_list));
    if let Some(t) = traj.blowup {
        summary.push(("blowup_time".into(), num(t)));
        return Ok(Report {
            files: vec![
                ("observables.csv".into(), observables.render()),
                ("fits.csv".into(), fits.render()),
                ("profile.csv".into(), table.render()),
                ("summary.csv".into(), key_values(&summary)),
            ],
            notes: run_notes(&traj),
            outcome: Outcome::BlowupInRun { time: t },
        });
    }
    let mass = accumulate_mass(&traj, config.p, config.dim);
    if let Ok(m) = &mass {
        summary.extend([
            ("mass_linear".to_string(), num(m.linear_part)),
            ("mass_nonlinear".to_string(), num(m.nonlinear_part)),
            ("mass_tail".to_string(), num(m.tail)),
            ("mass_total".to_string(), num(m.total)),
            ("tail_exponent".to_string(), opt(m.tail_exponent)),
        ]);
    } else {
        summary.push(("mass_total".to_string(), "NA".to_string()));
    }
    let k0 = xnorm_order(config);
    let half = xnorm_until(&traj, config.dim, k0, config.final_time / 2.0)?;
    let full = xnorm(&traj, config.dim, k0)?;
    summary.extend([
        ("xnorm_k0".to_string(), num(k0)),
        ("xnorm_half".to_string(), num(half)),
        ("xnorm_full".to_string(), num(full)),
        ("xnorm_drift".to_string(), num(full / half - 1.0)),
    ]);
    let mut sources = vec![(p_mass, "initial")];
    if let Ok(m) = &mass {
        sources.push((m.total, "corrected"));
    }
    for snap in traj.snapshots.iter().filter(|s| s.time() > 0.0) {
        for &(m, label) in &sources {
            let mut row = vec![num(snap.time()), num(m), label.to_string()];
            for &k in &config.k_list {
                row.push(num(profile_error(snap, m, k)?));
            }
            table.push(row);
        }
    }
    Ok(Report {
        files: vec![
            ("observables.csv".into(), observables.render()),
            ("fits.csv".into(), fits.render()),
            ("profile.csv".into(), table.render()),
            ("summary.csv".into(), key_values(&summary)),
        ],
        notes: run_notes(&traj),
        outcome: Outcome::Completed,
    })
}

fn pool(jobs: usize) -> Result<rayon::ThreadPool> {
    rayon::ThreadPoolBuilder::new()
        .num_threads(jobs)
        .build()
        .map_err(|e| Error::Config(format!("cannot start {jobs} workers: {e}")))
}

fn classification_lines(c: &Classification, blowup: Option<f64>) -> Vec<(String, String)> {
    vec![
        ("verdict".into(), c.verdict.to_string()),
        ("near_critical".into(), c.near_critical.to_string()),
        ("annotation".into(), c.annotation()),
        ("sup_growth".into(), num(c.sup_growth)),
        ("mass_growth".into(), num(c.mass_growth)),
        ("mass_monotone".into(), c.mass_monotone.to_string()),
        ("blowup_time".into(), opt(blowup)),
    ]
}

fn file_tag(v: f64) -> String {
    format!("{v}").replace('-', "m")
}

/// One entry of a Fujita sweep.
struct SweepRun {
    p: f64,
    amp: f64,
    config: ExperimentConfig,
    traj: Trajectory,
    class: Classification,
}

fn fujita_sweep(config: &ExperimentConfig) -> Result<Report> {
    let mut amps = vec![config.amp];
    if config.control_amp != config.amp {
        amps.push(config.control_amp);
    }
    let cases: Vec<(f64, f64)> = config.p_list.iter().flat_map(|&p| amps.iter().map(move |&a| (p, a))).collect();
    let runs: Vec<Result<SweepRun>> = pool(config.jobs)?.install(|| {
        cases
            .par_iter()
            .map(|&(p, amp)| {
                let mut c = config.clone().with_amplitude(amp);
                c.p = p;
                let mut plan = plan(&c)?;
                plan.stop_on_guard = true;
                let traj = integrate(&plan)?;
                let class = classify(&traj, Thresholds::default())?;
                Ok(SweepRun { p, amp, config: c, traj, class })
            })
            .collect()
    });
    let runs = runs.into_iter().collect::<Result<Vec<_>>>()?;

    let mut sweep = Table::new([
        "p",
        "amp",
        "verdict",
        "near_critical",
        "blowup_time",
        "truncated_at",
        "sup_growth",
        "mass_growth",
        "observables",
    ]);
    let mut text = format!("# fujita exponent p_F = {}\n", num(config.fujita_exponent()));
    let mut files = Vec::new();
    for r in &runs {
        let name = format!("observables_p{}_amp{}.csv", file_tag(r.p), file_tag(r.amp));
        sweep.push(vec![
            num(r.p),
            num(r.amp),
            r.class.verdict.to_string(),
            r.class.near_critical.to_string(),
            opt(r.traj.blowup),
            opt(r.traj.truncated),
            num(r.class.sup_growth),
            num(r.class.mass_growth),
            name.clone(),
        ]);
        let mut line = format!("p = {}, amp = {}: {}", num(r.p), num(r.amp), r.class.verdict);
        let note = r.class.annotation();
        if !note.is_empty() {
            line.push_str(&format!(" ({note})"));
        }
        text.push_str(&line);
        text.push('\n');
        files.push((name, observables_table(&r.traj, &planned_times(&r.config)).render()));
    }
    files.insert(0, ("sweep.csv".to_string(), sweep.render()));
    files.insert(1, ("classification.txt".to_string(), text));
    Ok(Report { files, notes: Vec::new(), outcome: Outcome::Completed })
}

fn blowup_functional(config: &ExperimentConfig) -> Result<Report> {
    if let Some(r) = config.r_list.iter().find(|&&r| r > config.half_width) {
        return Err(Error::Config(format!("R = {r} exceeds the box half-width L = {}", config.half_width)));
    }
    let mut plan = plan(config)?;
    let mut times: Vec<f64> = Vec::new();
    for r in &config.r_list {
        let end = r * r;
        if end <= config.final_time + 1e-9 {
            times.extend((0..=100).map(|j| end * j as f64 / 100.0));
        }
    }
    times.sort_by(f64::total_cmp);
    times.dedup_by(|a, b| (*a - *b).abs() < 0.5 * config.dt);
    plan.field_times = times;
    let traj = integrate(&plan)?;
    let class = classify(&traj, Thresholds::default())?;
    let u0 = plan.initial.u();
    let p = config.p;

    let rows: Vec<Result<Vec<String>>> = pool(config.jobs)?.install(|| {
        config
            .r_list
            .par_iter()
            .map(|&r| {
                let kr = kr_functional(&traj, r, p).ok();
                let annulus = annulus_integral(&traj, r, p).ok();
                let visc = viscoelastic_term(&u0, r, p)?;
                Ok(vec![num(r), opt(kr), opt(annulus), num(visc)])
            })
            .collect()
    });
    let mut kr = Table::new(["R", "K_R", "annulus", "viscoelastic"]);
    for row in rows {
        kr.push(row?);
    }
    let mut bounds = Table::new(["R", "phi_d1", "phi_d2", "phi_grad_sq_ratio", "eta_d1", "eta_d2", "laplacian_ratio"]);
    for &r in &config.r_list {
        let b = derivative_bound_report(r, p, config.dim)?;
        let mut row = vec![num(r)];
        row.extend(b.as_array().iter().map(|v| num(*v)));
        bounds.push(row);
    }
    let text: String =
        classification_lines(&class, traj.blowup).iter().map(|(k, v)| format!("{k} = {v}\n")).collect();
    let mut fits = Table::new(FIT_HEADER);
    let times = traj.times();
    let l2 = traj.series(Observable::L2)?;
    fits.push(fit_row(
        "l2",
        0.0,
        FitScale::LogLog,
        decay_fit(&times, &l2, (config.final_time / 2.0, config.final_time)),
        Some(-(config.dim as f64) / 4.0),
    ));
    Ok(Report {
        files: vec![
            ("observables.csv".into(), observables_table(&traj, &planned_times(config)).render()),
            ("fits.csv".into(), fits.render()),
            ("kr.csv".into(), kr.render()),
            ("bounds.csv".into(), bounds.render()),
            ("classification.txt".into(), text),
        ],
        notes: run_notes(&traj),
        outcome: Outcome::Completed,
    })
}

/// Time window and fit scale of each band in the band report.
pub fn band_horizon(band: Band, final_time: f64) -> f64 {
    match band {
        Band::Low => final_time,
        Band::Mid | Band::High => 20.0,
    }
}

fn lemma_oracles(config: &ExperimentConfig) -> Result<Report> {
    let traj = integrate(&plan(config)?)?;
    let u0 = config.u0.sample(&config.grid()?)?;

    let mut lemmas = Table::new(["check", "k", "r", "t", "lhs", "reference", "ratio"]);
    let mut summary = Table::new(["check", "k", "r", "min_ratio", "max_ratio", "spread"]);
    let mut add = |series: OracleSeries, k: Option<f64>, r: Option<f64>| {
        for OracleRow { check, t, lhs, reference, ratio } in &series.rows {
            lemmas.push(vec![check.to_string(), opt(k), opt(r), num(*t), num(*lhs), num(*reference), num(*ratio)]);
        }
        summary.push(vec![
            series.check.to_string(),
            opt(k),
            opt(r),
            num(series.min_ratio()),
            num(series.max_ratio()),
            num(series.spread()),
        ]);
    };
    let moment_times = log_times(1.0, 1000.0, 25);
    let conv_times = log_times(1.0, 1e4, 25);
    for &k in &config.k_list {
        for r in [1.0, 2.0] {
            let rows = moment_times.iter().map(|&t| gaussian_moment(config.dim, k, r, t)).collect::<Result<_>>()?;
            add(OracleSeries { check: "gaussian_moment", rows }, Some(k), Some(r));
        }
    }
    for (a, b) in [(2.0, 0.5), (1.5, 0.8), (1.5, 1.5)] {
        let rows = conv_times.iter().map(|&t| power_convolution(a, b, t)).collect::<Result<_>>()?;
        add(OracleSeries { check: "power_convolution", rows }, None, None);
    }
    for (a, b) in [(0.0, 1.0), (0.5, 1.0), (0.5, 2.5)] {
        let rows = conv_times.iter().map(|&t| exponential_convolution(a, b, 1.0, t)).collect::<Result<_>>()?;
        add(OracleSeries { check: "exponential_convolution", rows }, None, None);
    }
    let heat_times = log_times(10.0, config.final_time.max(20.0), 20);
    for &k in &config.k_list {
        for series in heat_oracles(&u0, k, &heat_times)? {
            add(series, Some(k), None);
        }
    }

    let mut bands = Table::new(FIT_HEADER);
    for band in Band::ALL {
        let name = match band {
            Band::Low => "band_low",
            Band::Mid => "band_mid",
            Band::High => "band_high",
        };
        let scale = if band == Band::Low { FitScale::LogLog } else { FitScale::LogLinear };
        for &k in &config.k_list {
            let fit = band_decay_report(&u0, band, k, band_horizon(band, config.final_time));
            let expected = (band == Band::Low).then(|| -(config.dim as f64) / 4.0 - k / 2.0);
            bands.push(fit_row(name, k, scale, fit, expected));
        }
    }
    Ok(Report {
        files: vec![
            ("observables.csv".into(), observables_table(&traj, &planned_times(config)).render()),
            ("fits.csv".into(), decay_fits(&traj, config.final_time).render()),
            ("lemmas.csv".into(), lemmas.render()),
            ("lemma_summary.csv".into(), summary.render()),
            ("bands.csv".into(), bands.render()),
        ],
        notes: run_notes(&traj),
        outcome: Outcome::Completed,
    })
}
