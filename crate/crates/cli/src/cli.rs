//! Command-line front end: flag parsing, config resolution, output layout
//! and exit codes.

use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand};
use viscowave::config::parse_entries;
use viscowave::{Error, Experiment, ExperimentConfig};

use crate::csv::write_all_atomic;
use crate::experiments::{run_experiment, Outcome, Report};

/// Environment variable naming the default output root.
pub const OUT_ENV: &str = "VISCOWAVE_OUT";

pub const EXIT_OK: u8 = 0;
pub const EXIT_OTHER: u8 = 1;
pub const EXIT_CONFIG: u8 = 2;
pub const EXIT_BLOWUP: u8 = 3;
pub const EXIT_GUARD: u8 = 4;

#[derive(Debug, Parser)]
#[command(name = "viscowave", version, about = "Damped wave equation experiments on periodic boxes")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Decay exponents of the linear flow.
    LinearDecay(Flags),
    /// Distance of the linear flow to the Gauss profile.
    Profile(Flags),
    /// Small-data nonlinear run: decay, mass correction and profile.
    NonlinearDecay(Flags),
    /// Classification over a list of exponents.
    FujitaSweep(Flags),
    /// Test-function functional K_R and cutoff bounds.
    BlowupFunctional(Flags),
    /// Quadrature checks of the auxiliary decay estimates and band decay.
    LemmaOracles(Flags),
}

impl Command {
    pub fn experiment(&self) -> Experiment {
        match self {
            Command::LinearDecay(_) => Experiment::LinearDecay,
            Command::Profile(_) => Experiment::Profile,
            Command::NonlinearDecay(_) => Experiment::NonlinearDecay,
            Command::FujitaSweep(_) => Experiment::FujitaSweep,
            Command::BlowupFunctional(_) => Experiment::BlowupFunctional,
            Command::LemmaOracles(_) => Experiment::LemmaOracles,
        }
    }

    pub fn flags(&self) -> &Flags {
        match self {
            Command::LinearDecay(f)
            | Command::Profile(f)
            | Command::NonlinearDecay(f)
            | Command::FujitaSweep(f)
            | Command::BlowupFunctional(f)
            | Command::LemmaOracles(f) => f,
        }
    }
}

/// Overrides on top of the optional config file.
#[derive(Debug, Clone, Default, Args)]
pub struct Flags {
    /// Config file of `key = value` lines.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Space dimension (1 or 2).
    #[arg(long)]
    pub n: Option<usize>,
    /// Exponent of the source term.
    #[arg(long)]
    pub p: Option<f64>,
    /// Source form: `abs` (|u|^p) or `signed` (|u|^{p-1}u).
    #[arg(long)]
    pub form: Option<String>,
    /// Grid points per axis (power of two).
    #[arg(long = "N")]
    pub grid_points: Option<usize>,
    /// Box half-width.
    #[arg(long = "L")]
    pub half_width: Option<f64>,
    /// Final time.
    #[arg(long = "T")]
    pub final_time: Option<f64>,
    /// Time step.
    #[arg(long)]
    pub dt: Option<f64>,
    /// Observable sampling interval.
    #[arg(long = "sample-dt")]
    pub sample_dt: Option<f64>,
    /// Derivative orders, comma separated.
    #[arg(long)]
    pub k: Option<String>,
    /// Data amplitude.
    #[arg(long)]
    pub amp: Option<f64>,
    /// Control amplitude of a sweep.
    #[arg(long = "control-amp")]
    pub control_amp: Option<f64>,
    /// Exponents of a sweep, comma separated.
    #[arg(long = "p-list")]
    pub p_list: Option<String>,
    /// Cutoff radii, comma separated.
    #[arg(long = "R-list")]
    pub r_list: Option<String>,
    /// Worker threads for sweeps.
    #[arg(long)]
    pub jobs: Option<usize>,
    /// Output directory.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Initial displacement, e.g. `gauss(a=1,t=1,cx=0,cy=0)`.
    #[arg(long)]
    pub u0: Option<String>,
    /// Initial velocity.
    #[arg(long)]
    pub u1: Option<String>,
    /// Outer-shell mass fraction aborting nonlinear runs.
    #[arg(long)]
    pub guard: Option<f64>,
    /// 2/3-rule truncation of the source.
    #[arg(long)]
    pub dealias: Option<bool>,
}

impl Flags {
    fn overrides(&self) -> Vec<(String, String)> {
        let mut out = Vec::new();
        let mut put = |k: &str, v: Option<String>| {
            if let Some(v) = v {
                out.push((k.to_string(), v));
            }
        };
        put("n", self.n.map(|v| v.to_string()));
        put("p", self.p.map(|v| v.to_string()));
        put("form", self.form.clone());
        put("N", self.grid_points.map(|v| v.to_string()));
        put("L", self.half_width.map(|v| v.to_string()));
        put("T", self.final_time.map(|v| v.to_string()));
        put("dt", self.dt.map(|v| v.to_string()));
        put("sample_dt", self.sample_dt.map(|v| v.to_string()));
        put("k", self.k.clone());
        put("amp", self.amp.map(|v| v.to_string()));
        put("control_amp", self.control_amp.map(|v| v.to_string()));
        put("p_list", self.p_list.clone());
        put("R_list", self.r_list.clone());
        put("jobs", self.jobs.map(|v| v.to_string()));
        put("u0", self.u0.clone());
        put("u1", self.u1.clone());
        put("guard", self.guard.map(|v| v.to_string()));
        put("dealias", self.dealias.map(|v| v.to_string()));
        put("out", self.out.as_ref().map(|p| p.display().to_string()));
        out
    }
}

/// Config file entries, then the subcommand's experiment, then flags.
pub fn resolve_config(experiment: Experiment, flags: &Flags) -> viscowave::Result<ExperimentConfig> {
    let mut entries = match &flags.config {
        Some(path) => {
            let text = std::fs::read_to_string(path)
                .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
            parse_entries(&text)?
        }
        None => Vec::new(),
    };
    if let Some((_, v)) = entries.iter().rev().find(|(k, _)| k == "experiment") {
        if v.trim() != experiment.name() {
            return Err(Error::Config(format!(
                "config file is for `{}` but the subcommand is `{}`",
                v.trim(),
                experiment.name()
            )));
        }
    }
    entries.push(("experiment".to_string(), experiment.name().to_string()));
    entries.extend(flags.overrides());
    ExperimentConfig::from_entries(&entries)
}

/// `out` from the config, else `$VISCOWAVE_OUT/<experiment>`, else
/// `viscowave-out/<experiment>`.
pub fn output_dir(config: &ExperimentConfig, env_root: Option<&str>) -> PathBuf {
    match (&config.out, env_root) {
        (Some(out), _) => PathBuf::from(out),
        (None, Some(root)) if !root.is_empty() => Path::new(root).join(config.experiment.name()),
        _ => Path::new("viscowave-out").join(config.experiment.name()),
    }
}

/// Resolved config as `key = value` lines followed by run metadata as
/// comments, so a manifest can be fed back through `--config`.
pub fn manifest_text(config: &ExperimentConfig, notes: &[(String, String)], wall_time: f64) -> String {
    let mut s = config.to_text();
    s.push_str(&format!("# version = {}\n", viscowave::VERSION));
    s.push_str(&format!("# wall_time_s = {wall_time:.3}\n"));
    for (k, v) in notes {
        s.push_str(&format!("# {k} = {v}\n"));
    }
    s
}

/// Exit status of a failed run.
pub fn exit_code_for(err: &Error) -> u8 {
    match err {
        Error::Config(_) => EXIT_CONFIG,
        Error::TruncationGuard { .. } => EXIT_GUARD,
        Error::BlowupDetected { .. } => EXIT_BLOWUP,
        _ => EXIT_OTHER,
    }
}

/// Runs one invocation and returns its exit status.
pub fn execute(cli: &Cli, env_root: Option<&str>) -> u8 {
    let experiment = cli.command.experiment();
    let mut config = match resolve_config(experiment, cli.command.flags()) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("viscowave: {e}");
            return EXIT_CONFIG;
        }
    };
    let dir = output_dir(&config, env_root);
    config.out = Some(dir.display().to_string());
    let start = Instant::now();
    let report: Report = match run_experiment(&config) {
        Ok(r) => r,
        Err(e) => {
            eprintln!("viscowave: {e}");
            return exit_code_for(&e);
        }
    };
    let mut files = report.files.clone();
    let mut notes = report.notes.clone();
    let status = match report.outcome {
        Outcome::Completed => "completed".to_string(),
        Outcome::BlowupInRun { time } => format!("blow-up after t = {time}"),
    };
    notes.insert(0, ("status".to_string(), status));
    files.push(("manifest.txt".to_string(), manifest_text(&config, &notes, start.elapsed().as_secs_f64())));
    if let Err(e) = write_all_atomic(&dir, &files) {
        eprintln!("viscowave: cannot write to {}: {e}", dir.display());
        return EXIT_OTHER;
    }
    for (name, _) in &files {
        println!("{}", dir.join(name).display());
    }
    match report.outcome {
        Outcome::Completed => EXIT_OK,
        Outcome::BlowupInRun { time } => {
            eprintln!("viscowave: solution blew up after t = {time}");
            EXIT_BLOWUP
        }
    }
}

/// Entry point used by the binary.
pub fn main() -> ExitCode {
    let cli = Cli::parse();
    let root = std::env::var(OUT_ENV).ok();
    ExitCode::from(execute(&cli, root.as_deref()))
}
