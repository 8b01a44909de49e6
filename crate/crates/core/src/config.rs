//! Declarative experiment description.
//!
//! Configs are flat `key = value` text, one entry per line, `#` comments.
//! The resolved config written to a run manifest parses back to an equal
//! value.
//!
//! Initial data are sums of components written as
//! `gauss(a=1,t=1,cx=0,cy=0) + bump(a=0.5,r=2,cx=3,cy=0)`; `zero` is the
//! empty sum. `gauss` is `a·G_t(x-c)`, `dgauss` its derivative along the
//! first axis, and `bump` the smooth cutoff `a·φ(|x-c|/r)`.

use std::fmt;
use std::str::FromStr;

use crate::bump;
use crate::error::{Error, Result};
use crate::fourier_core::{make_grid, Field, SpectralGrid};
use crate::propagators::gauss_point;
use crate::solver::{Form, Nonlinearity};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Experiment {
    LinearDecay,
    Profile,
    NonlinearDecay,
    FujitaSweep,
    BlowupFunctional,
    LemmaOracles,
}

impl Experiment {
    pub const ALL: [Experiment; 6] = [
        Experiment::LinearDecay,
        Experiment::Profile,
        Experiment::NonlinearDecay,
        Experiment::FujitaSweep,
        Experiment::BlowupFunctional,
        Experiment::LemmaOracles,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Experiment::LinearDecay => "linear-decay",
            Experiment::Profile => "profile",
            Experiment::NonlinearDecay => "nonlinear-decay",
            Experiment::FujitaSweep => "fujita-sweep",
            Experiment::BlowupFunctional => "blowup-functional",
            Experiment::LemmaOracles => "lemma-oracles",
        }
    }

    /// Whether the source term is switched off.
    pub fn is_linear(self) -> bool {
        matches!(self, Experiment::LinearDecay | Experiment::Profile | Experiment::LemmaOracles)
    }
}

impl fmt::Display for Experiment {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Experiment {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Experiment::ALL
            .into_iter()
            .find(|e| e.name() == s)
            .ok_or_else(|| Error::Config(format!("unknown experiment `{s}`")))
    }
}

/// One additive piece of initial data.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Component {
    Gauss { amplitude: f64, t: f64, center: [f64; 2] },
    GaussDx { amplitude: f64, t: f64, center: [f64; 2] },
    Bump { amplitude: f64, radius: f64, center: [f64; 2] },
}

impl Component {
    pub fn gauss(amplitude: f64, t: f64) -> Self {
        Component::Gauss { amplitude, t, center: [0.0, 0.0] }
    }

    fn value(&self, dim: usize, x: [f64; 2]) -> f64 {
        let shift = |c: [f64; 2]| [x[0] - c[0], if dim == 1 { 0.0 } else { x[1] - c[1] }];
        match *self {
            Component::Gauss { amplitude, t, center } => {
                amplitude * gauss_point(dim, t, shift(center)).unwrap_or(0.0)
            }
            Component::GaussDx { amplitude, t, center } => {
                let y = shift(center);
                amplitude * (-y[0] / (2.0 * t)) * gauss_point(dim, t, y).unwrap_or(0.0)
            }
            Component::Bump { amplitude, radius, center } => {
                let y = shift(center);
                let r = y[0].hypot(y[1]) / radius;
                amplitude * bump::step((r - 0.5) / 0.5)
            }
        }
    }

    fn validate(&self) -> Result<()> {
        let ok = match *self {
            Component::Gauss { amplitude, t, center } | Component::GaussDx { amplitude, t, center } => {
                amplitude.is_finite() && t > 0.0 && t.is_finite() && center.iter().all(|c| c.is_finite())
            }
            Component::Bump { amplitude, radius, center } => {
                amplitude.is_finite() && radius > 0.0 && radius.is_finite() && center.iter().all(|c| c.is_finite())
            }
        };
        if ok {
            Ok(())
        } else {
            Err(Error::Config(format!("invalid data component `{self}`")))
        }
    }
}

impl fmt::Display for Component {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Component::Gauss { amplitude, t, center } => {
                write!(f, "gauss(a={amplitude},t={t},cx={},cy={})", center[0], center[1])
            }
            Component::GaussDx { amplitude, t, center } => {
                write!(f, "dgauss(a={amplitude},t={t},cx={},cy={})", center[0], center[1])
            }
            Component::Bump { amplitude, radius, center } => {
                write!(f, "bump(a={amplitude},r={radius},cx={},cy={})", center[0], center[1])
            }
        }
    }
}

impl FromStr for Component {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::Config(format!("malformed data component `{s}`"));
        let s = s.trim();
        let open = s.find('(').ok_or_else(bad)?;
        if !s.ends_with(')') {
            return Err(bad());
        }
        let kind = s[..open].trim();
        let mut a = 1.0;
        let mut t = 1.0;
        let mut r = 1.0;
        let mut c = [0.0, 0.0];
        for kv in s[open + 1..s.len() - 1].split(',').filter(|p| !p.trim().is_empty()) {
            let (k, v) = kv.split_once('=').ok_or_else(bad)?;
            let v: f64 = v.trim().parse().map_err(|_| bad())?;
            match k.trim() {
                "a" => a = v,
                "t" => t = v,
                "r" => r = v,
                "cx" => c[0] = v,
                "cy" => c[1] = v,
                _ => return Err(bad()),
            }
        }
        let comp = match kind {
            "gauss" => Component::Gauss { amplitude: a, t, center: c },
            "dgauss" => Component::GaussDx { amplitude: a, t, center: c },
            "bump" => Component::Bump { amplitude: a, radius: r, center: c },
            _ => return Err(bad()),
        };
        comp.validate()?;
        Ok(comp)
    }
}

/// Initial datum as a sum of components.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct DataSpec(pub Vec<Component>);

impl DataSpec {
    pub fn zero() -> Self {
        DataSpec(Vec::new())
    }

    pub fn gauss(amplitude: f64, t: f64) -> Self {
        DataSpec(vec![Component::gauss(amplitude, t)])
    }

    /// Samples the datum on the grid nodes.
    pub fn sample(&self, grid: &SpectralGrid) -> Result<Field> {
        let dim = grid.dim();
        Field::from_fn(grid, |x| self.0.iter().map(|c| c.value(dim, x)).sum())
    }
}

impl fmt::Display for DataSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.0.is_empty() {
            return f.write_str("zero");
        }
        for (i, c) in self.0.iter().enumerate() {
            if i > 0 {
                f.write_str(" + ")?;
            }
            write!(f, "{c}")?;
        }
        Ok(())
    }
}

impl FromStr for DataSpec {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        if s == "zero" {
            return Ok(DataSpec::zero());
        }
        s.split('+').map(str::parse).collect::<Result<Vec<_>>>().map(DataSpec)
    }
}

/// Fully resolved description of one run.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub experiment: Experiment,
    pub dim: usize,
    pub p: f64,
    pub form: Form,
    pub grid_points: usize,
    pub half_width: f64,
    pub final_time: f64,
    pub dt: f64,
    pub sample_dt: f64,
    pub k_list: Vec<f64>,
    pub u0: DataSpec,
    pub u1: DataSpec,
    pub amp: f64,
    pub control_amp: f64,
    pub p_list: Vec<f64>,
    pub r_list: Vec<f64>,
    pub jobs: usize,
    pub guard: f64,
    pub dealias: bool,
    pub out: Option<String>,
}

/// Keys understood by [`ExperimentConfig::from_entries`], in manifest order.
pub const KEYS: [&str; 20] = [
    "experiment", "n", "p", "form", "N", "L", "T", "dt", "sample_dt", "k", "u0", "u1", "amp",
    "control_amp", "p_list", "R_list", "jobs", "guard", "dealias", "out",
];

fn join(values: &[f64]) -> String {
    values.iter().map(|v| v.to_string()).collect::<Vec<_>>().join(",")
}

fn parse_list(key: &str, v: &str) -> Result<Vec<f64>> {
    v.split(',')
        .filter(|s| !s.trim().is_empty())
        .map(|s| s.trim().parse::<f64>().map_err(|_| Error::Config(format!("`{key}`: bad number `{s}`"))))
        .collect()
}

fn parse_num<T: FromStr>(key: &str, v: &str) -> Result<T> {
    v.trim().parse().map_err(|_| Error::Config(format!("`{key}`: cannot parse `{v}`")))
}

impl ExperimentConfig {
    /// Built-in defaults for an experiment in dimension `dim`.
    pub fn defaults(experiment: Experiment, dim: usize) -> Self {
        let (grid_points, half_width) = if dim == 2 { (1024, 100.0) } else { (4096, 200.0) };
        let mut c = ExperimentConfig {
            experiment,
            dim,
            p: 4.0,
            form: Form::SignedPower,
            grid_points,
            half_width,
            final_time: if dim == 2 { 200.0 } else { 500.0 },
            dt: 0.05,
            sample_dt: 0.0,
            k_list: if dim == 2 { vec![0.0, 1.0, 1.5] } else { vec![0.0, 1.0] },
            u0: DataSpec::zero(),
            u1: DataSpec::zero(),
            amp: 1.0,
            control_amp: 0.01,
            p_list: vec![1.5, 2.0, 2.5, 3.0, 3.5, 4.0],
            r_list: vec![10.0, 20.0, 40.0],
            jobs: 1,
            guard: 1e-6,
            dealias: false,
            out: None,
        };
        match experiment {
            Experiment::LinearDecay => {}
            Experiment::Profile => c.final_time = 400.0,
            Experiment::NonlinearDecay => c.amp = 0.01,
            Experiment::FujitaSweep => {
                c.form = Form::AbsPower;
                c.amp = 2.0;
                c.final_time = 50.0;
                c.grid_points = if dim == 2 { 256 } else { 1024 };
                c.half_width = if dim == 2 { 80.0 } else { 100.0 };
            }
            Experiment::BlowupFunctional => {
                c.amp = 0.01;
                c.half_width = if dim == 2 { 80.0 } else { 400.0 };
                c.grid_points = if dim == 2 { 256 } else { 8192 };
                c.r_list = if dim == 2 { vec![2.0, 4.0, 8.0] } else { vec![10.0, 20.0, 40.0] };
                c.final_time = c.r_list.iter().fold(0.0, |m, r| f64::max(m, r * r));
                c.dt = 0.1;
            }
            Experiment::LemmaOracles => {
                c.final_time = 1000.0;
                c.grid_points = 2048;
                c.half_width = 200.0;
                c.dim = 1;
            }
        }
        c.sample_dt = c.final_time / 200.0;
        c.apply_amp_data();
        c
    }

    /// Copy with amplitude `amp` and the default data derived from it.
    pub fn with_amplitude(mut self, amp: f64) -> Self {
        self.amp = amp;
        self.apply_amp_data();
        self
    }

    /// Default initial data derived from `amp` for this experiment.
    fn apply_amp_data(&mut self) {
        let a = self.amp;
        let (u0, u1) = match self.experiment {
            Experiment::LinearDecay => (DataSpec::gauss(a, 1.0), DataSpec::gauss(a, 1.0)),
            Experiment::Profile | Experiment::NonlinearDecay | Experiment::BlowupFunctional => {
                (DataSpec::gauss(a, 1.0), DataSpec::zero())
            }
            Experiment::FujitaSweep => (DataSpec::gauss(a, 1.0), DataSpec::gauss(a, 1.0)),
            Experiment::LemmaOracles => (DataSpec::gauss(a, 1.0), DataSpec::zero()),
        };
        self.u0 = u0;
        self.u1 = u1;
    }

    /// Resolves a config from ordered `(key, value)` entries. Later entries
    /// win; `experiment` is required. Defaults depending on `experiment`,
    /// `n` and `amp` are applied before the remaining keys.
    pub fn from_entries(entries: &[(String, String)]) -> Result<Self> {
        let last = |key: &str| entries.iter().rev().find(|(k, _)| k == key).map(|(_, v)| v.as_str());
        for (k, _) in entries {
            if !KEYS.contains(&k.as_str()) {
                return Err(Error::Config(format!("unknown key `{k}`")));
            }
        }
        let experiment: Experiment =
            last("experiment").ok_or_else(|| Error::Config("missing `experiment`".into()))?.trim().parse()?;
        let dim = match last("n") {
            Some(v) => parse_num::<usize>("n", v)?,
            None => 1,
        };
        if dim != 1 && dim != 2 {
            return Err(Error::Config(format!("`n` must be 1 or 2, got {dim}")));
        }
        let mut c = ExperimentConfig::defaults(experiment, dim);
        if let Some(v) = last("amp") {
            c.amp = parse_num("amp", v)?;
            c.apply_amp_data();
        }
        let mut explicit_sample_dt = false;
        for key in KEYS {
            let Some(v) = last(key) else { continue };
            match key {
                "experiment" | "n" | "amp" => {}
                "p" => c.p = parse_num(key, v)?,
                "form" => c.form = v.trim().parse()?,
                "N" => c.grid_points = parse_num(key, v)?,
                "L" => c.half_width = parse_num(key, v)?,
                "T" => c.final_time = parse_num(key, v)?,
                "dt" => c.dt = parse_num(key, v)?,
                "sample_dt" => {
                    c.sample_dt = parse_num(key, v)?;
                    explicit_sample_dt = true;
                }
                "k" => c.k_list = parse_list(key, v)?,
                "u0" => c.u0 = v.parse()?,
                "u1" => c.u1 = v.parse()?,
                "control_amp" => c.control_amp = parse_num(key, v)?,
                "p_list" => c.p_list = parse_list(key, v)?,
                "R_list" => c.r_list = parse_list(key, v)?,
                "jobs" => c.jobs = parse_num(key, v)?,
                "guard" => c.guard = parse_num(key, v)?,
                "dealias" => c.dealias = parse_num(key, v)?,
                "out" => c.out = Some(v.trim().to_string()).filter(|s| !s.is_empty()),
                _ => unreachable!(),
            }
        }
        if !explicit_sample_dt {
            c.sample_dt = c.final_time / 200.0;
        }
        if c.experiment == Experiment::BlowupFunctional && last("T").is_none() {
            let r_max = c.r_list.iter().cloned().fold(0.0, f64::max);
            c.final_time = r_max * r_max;
            if !explicit_sample_dt {
                c.sample_dt = c.final_time / 200.0;
            }
        }
        c.validate()?;
        Ok(c)
    }

    /// Parses `key = value` text.
    pub fn parse_text(text: &str) -> Result<Self> {
        Self::from_entries(&parse_entries(text)?)
    }

    pub fn validate(&self) -> Result<()> {
        let fail = |m: String| Err(Error::Config(m));
        if self.dim != 1 && self.dim != 2 {
            return fail(format!("`n` must be 1 or 2, got {}", self.dim));
        }
        if self.grid_points < 8 || !self.grid_points.is_power_of_two() {
            return fail(format!("`N` must be a power of two >= 8, got {}", self.grid_points));
        }
        if !(self.half_width > 0.0 && self.half_width.is_finite()) {
            return fail(format!("`L` must be positive, got {}", self.half_width));
        }
        if !(self.final_time > 0.0 && self.final_time.is_finite()) {
            return fail(format!("`T` must be positive, got {}", self.final_time));
        }
        if !(self.dt > 0.0 && self.dt <= self.final_time) {
            return fail(format!("`dt` must lie in (0, T], got {}", self.dt));
        }
        if !(self.sample_dt >= self.dt && self.sample_dt <= self.final_time) {
            return fail(format!("`sample_dt` must lie in [dt, T], got {}", self.sample_dt));
        }
        if !(self.p > 1.0 && self.p.is_finite()) {
            return fail(format!("`p` must exceed 1, got {}", self.p));
        }
        if self.k_list.is_empty() || self.k_list.iter().any(|k| !(0.0..=4.0).contains(k)) {
            return fail("`k` entries must lie in [0, 4]".into());
        }
        if !self.amp.is_finite() || !self.control_amp.is_finite() {
            return fail("amplitudes must be finite".into());
        }
        if self.p_list.is_empty() || self.p_list.iter().any(|p| !(*p > 1.0 && p.is_finite())) {
            return fail("`p_list` entries must exceed 1".into());
        }
        if self.r_list.is_empty() || self.r_list.iter().any(|r| !(*r > 0.0 && r.is_finite())) {
            return fail("`R_list` entries must be positive".into());
        }
        if self.jobs == 0 {
            return fail("`jobs` must be >= 1".into());
        }
        if !(self.guard > 0.0 && self.guard < 1.0) {
            return fail(format!("`guard` must lie in (0, 1), got {}", self.guard));
        }
        for c in self.u0.0.iter().chain(&self.u1.0) {
            c.validate()?;
        }
        Ok(())
    }

    /// Serializes every key; parses back to an equal config.
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let mut put = |k: &str, v: String| {
            s.push_str(k);
            s.push_str(" = ");
            s.push_str(&v);
            s.push('\n');
        };
        put("experiment", self.experiment.to_string());
        put("n", self.dim.to_string());
        put("p", self.p.to_string());
        put("form", self.form.to_string());
        put("N", self.grid_points.to_string());
        put("L", self.half_width.to_string());
        put("T", self.final_time.to_string());
        put("dt", self.dt.to_string());
        put("sample_dt", self.sample_dt.to_string());
        put("k", join(&self.k_list));
        put("u0", self.u0.to_string());
        put("u1", self.u1.to_string());
        put("amp", self.amp.to_string());
        put("control_amp", self.control_amp.to_string());
        put("p_list", join(&self.p_list));
        put("R_list", join(&self.r_list));
        put("jobs", self.jobs.to_string());
        put("guard", self.guard.to_string());
        put("dealias", self.dealias.to_string());
        put("out", self.out.clone().unwrap_or_default());
        s
    }

    pub fn grid(&self) -> Result<SpectralGrid> {
        make_grid(self.dim, self.grid_points, self.half_width)
    }

    /// The configured source term, `None` for linear experiments.
    pub fn nonlinearity(&self) -> Result<Option<Nonlinearity>> {
        if self.experiment.is_linear() {
            Ok(None)
        } else {
            Nonlinearity::new(self.p, self.form).map(Some)
        }
    }

    /// Fujita exponent `1 + 2/n`.
    pub fn fujita_exponent(&self) -> f64 {
        1.0 + 2.0 / self.dim as f64
    }
}

/// Splits `key = value` lines; blank lines and `#` comments are skipped.
pub fn parse_entries(text: &str) -> Result<Vec<(String, String)>> {
    let mut out = Vec::new();
    for (lineno, line) in text.lines().enumerate() {
        let line = line.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (k, v) = line
            .split_once('=')
            .ok_or_else(|| Error::Config(format!("line {}: expected `key = value`", lineno + 1)))?;
        out.push((k.trim().to_string(), v.trim().to_string()));
    }
    Ok(out)
}
