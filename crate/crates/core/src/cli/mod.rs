//! The `pendctl` command-line front end.
//!
//! Exit codes: 0 success, 1 usage error, 2 data or parse error,
//! 3 numerical failure (Riccati non-convergence, divergence, singular fit).

pub mod config;

use std::ffi::OsString;
use std::fmt::Write as _;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use nalgebra::{Complex, RowVector2};
use serde_json::json;
use thiserror::Error;

use crate::dynamics::DynamicsError;
use crate::harness::{
    self, compare, generate_trajectory, regulation_summary, resample_cubic, HarnessError,
};
use crate::linear::{
    eigenvalues_2x2, linearize, lqr_gain, stability_csv, stability_report, time_constant,
    CostMatrices, LinearError,
};
use crate::sysid::{
    self, average_trials, extract_static_segments, parse_log, regress_gravity,
    regress_inertia_damping, ParamFragment, RegressionKind, RegressionResult, SysidError,
};
use crate::trajectory::{Trajectory, TrajectoryError};

pub use config::{parse_angle, RunConfig};

#[derive(Debug, Error, PartialEq)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("{0}")]
    Data(String),
    #[error("{0}")]
    Numerical(String),
}

impl CliError {
    pub fn code(&self) -> i32 {
        match self {
            CliError::Usage(_) => 1,
            CliError::Data(_) => 2,
            CliError::Numerical(_) => 3,
        }
    }

    fn context(self, what: &str) -> Self {
        match self {
            CliError::Usage(m) => CliError::Usage(format!("{what}: {m}")),
            CliError::Data(m) => CliError::Data(format!("{what}: {m}")),
            CliError::Numerical(m) => CliError::Numerical(format!("{what}: {m}")),
        }
    }
}

impl From<DynamicsError> for CliError {
    fn from(e: DynamicsError) -> Self {
        match e {
            DynamicsError::IntegrationOverflow { .. } | DynamicsError::PolicyNonFinite { .. } => {
                CliError::Numerical(e.to_string())
            }
            _ => CliError::Usage(e.to_string()),
        }
    }
}

impl From<LinearError> for CliError {
    fn from(e: LinearError) -> Self {
        match e {
            LinearError::Dynamics(d) => d.into(),
            LinearError::InvalidCost(_) | LinearError::NotEquilibrium { .. } => {
                CliError::Usage(e.to_string())
            }
            _ => CliError::Numerical(e.to_string()),
        }
    }
}

impl From<SysidError> for CliError {
    fn from(e: SysidError) -> Self {
        match e {
            SysidError::Singular(_) => CliError::Numerical(e.to_string()),
            _ => CliError::Data(e.to_string()),
        }
    }
}

impl From<TrajectoryError> for CliError {
    fn from(e: TrajectoryError) -> Self {
        CliError::Data(e.to_string())
    }
}

impl From<HarnessError> for CliError {
    fn from(e: HarnessError) -> Self {
        match e {
            HarnessError::InvalidConfig(_) => CliError::Usage(e.to_string()),
            HarnessError::Dynamics(d) => d.into(),
            HarnessError::Diverged { .. } => CliError::Numerical(e.to_string()),
            _ => CliError::Data(e.to_string()),
        }
    }
}

#[derive(Debug, Parser)]
#[command(
    name = "pendctl",
    version,
    about = "Pendulum identification, LQR design, noisy simulation and comparison"
)]
struct Cli {
    /// Configuration file of `key = value` lines
    #[arg(long, global = true, value_name = "PATH")]
    config: Option<PathBuf>,
    /// Output file
    #[arg(long, global = true, value_name = "PATH")]
    out: Option<PathBuf>,
    /// Noise seed
    #[arg(long, global = true)]
    seed: Option<u64>,
    #[command(flatten)]
    keys: KeyFlags,
    #[command(subcommand)]
    command: Command,
}

/// Per-key overrides; these win over the configuration file.
#[derive(Debug, Args)]
struct KeyFlags {
    #[arg(long, global = true, allow_hyphen_values = true, help_heading = "Model")]
    m_c: Option<String>,
    #[arg(long, global = true, allow_hyphen_values = true, help_heading = "Model")]
    b_c: Option<String>,
    #[arg(long, global = true, allow_hyphen_values = true, help_heading = "Model")]
    g_c: Option<String>,
    #[arg(long, global = true, allow_hyphen_values = true, help_heading = "Run")]
    dt: Option<String>,
    #[arg(long, global = true, allow_hyphen_values = true, help_heading = "Run")]
    duration: Option<String>,
    /// Radians, or degrees with a `deg` suffix
    #[arg(long, global = true, allow_hyphen_values = true, help_heading = "Run")]
    setpoint_theta: Option<String>,
    /// Start this far from the setpoint (radians or `deg`)
    #[arg(long, global = true, allow_hyphen_values = true, help_heading = "Run")]
    initial_offset: Option<String>,
    #[arg(long, global = true, allow_hyphen_values = true, help_heading = "Cost")]
    q11: Option<String>,
    #[arg(long, global = true, allow_hyphen_values = true, help_heading = "Cost")]
    q22: Option<String>,
    #[arg(long, global = true, allow_hyphen_values = true, help_heading = "Cost")]
    r11: Option<String>,
    #[arg(long, global = true, allow_hyphen_values = true, help_heading = "Noise")]
    noise_lo: Option<String>,
    #[arg(long, global = true, allow_hyphen_values = true, help_heading = "Noise")]
    noise_hi: Option<String>,
    #[arg(long, global = true, allow_hyphen_values = true, help_heading = "Plant")]
    control_rate: Option<String>,
    #[arg(long, global = true, allow_hyphen_values = true, help_heading = "Plant")]
    quantization: Option<String>,
    #[arg(long, global = true, allow_hyphen_values = true, help_heading = "Plant")]
    hysteresis: Option<String>,
    #[arg(long, global = true, allow_hyphen_values = true, help_heading = "Plant")]
    perturb_m_c: Option<String>,
    #[arg(long, global = true, allow_hyphen_values = true, help_heading = "Plant")]
    perturb_b_c: Option<String>,
    #[arg(long, global = true, allow_hyphen_values = true, help_heading = "Plant")]
    perturb_g_c: Option<String>,
}

impl KeyFlags {
    fn pairs(&self) -> [(&'static str, &Option<String>); 18] {
        [
            ("m_c", &self.m_c),
            ("b_c", &self.b_c),
            ("g_c", &self.g_c),
            ("dt", &self.dt),
            ("duration", &self.duration),
            ("setpoint_theta", &self.setpoint_theta),
            ("initial_offset", &self.initial_offset),
            ("q11", &self.q11),
            ("q22", &self.q22),
            ("r11", &self.r11),
            ("noise_lo", &self.noise_lo),
            ("noise_hi", &self.noise_hi),
            ("control_rate", &self.control_rate),
            ("quantization", &self.quantization),
            ("hysteresis", &self.hysteresis),
            ("perturb_m_c", &self.perturb_m_c),
            ("perturb_b_c", &self.perturb_b_c),
            ("perturb_g_c", &self.perturb_g_c),
        ]
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Experiment {
    InertiaDamping,
    Gravity,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Mode {
    Ideal,
    Plant,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Fit model constants to actuator logs
    Identify {
        #[arg(value_enum)]
        experiment: Experiment,
        #[arg(required = true, value_name = "LOG")]
        logs: Vec<PathBuf>,
        /// Add a constant term to the regression
        #[arg(long)]
        intercept: bool,
        #[arg(long, default_value_t = sysid::DEFAULT_VELOCITY_THRESHOLD)]
        velocity_threshold: f64,
        #[arg(long, default_value_t = sysid::DEFAULT_MIN_DURATION)]
        min_duration: f64,
        /// Write the averaged constants as a configuration file
        #[arg(long, value_name = "PATH")]
        params_out: Option<PathBuf>,
    },
    /// Linearize at the setpoint and design the LQR gain
    Design {
        /// Emit the eigenvalue table for the four reference weightings
        #[arg(long)]
        table: bool,
    },
    /// Run the regulator under torque noise
    Simulate {
        #[arg(long, value_enum, default_value_t = Mode::Ideal)]
        mode: Mode,
        /// Comma-separated seeds run in parallel, one output file each
        #[arg(long, value_delimiter = ',')]
        seeds: Vec<u64>,
    },
    /// Resample a plant run onto a simulation's timestamps and compare
    Compare { sim: PathBuf, plant: PathBuf },
    /// Generate a command trajectory between two angles
    Trajgen {
        /// Radians, or degrees with a `deg` suffix
        #[arg(allow_hyphen_values = true)]
        start: String,
        #[arg(allow_hyphen_values = true)]
        end: String,
        #[arg(long, default_value_t = harness::command::DEFAULT_INCREMENT)]
        increment: f64,
        #[arg(long, default_value_t = harness::command::DEFAULT_PEAK_VELOCITY)]
        peak_velocity: f64,
        #[arg(long, default_value_t = harness::command::DEFAULT_RATE)]
        rate: f64,
    },
}

/// Parses `args` (program name first), runs the command and returns the
/// process exit code.
pub fn run<I, T>(args: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            let text = e.render().to_string();
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => {
                    let _ = write!(stdout, "{text}");
                    0
                }
                _ => {
                    let _ = write!(stderr, "{text}");
                    1
                }
            };
        }
    };
    match dispatch(&cli, stdout) {
        Ok(()) => 0,
        Err(e) => {
            let _ = writeln!(stderr, "pendctl: {e}");
            e.code()
        }
    }
}

fn effective_config(cli: &Cli) -> Result<RunConfig, CliError> {
    let mut cfg = RunConfig::default();
    if let Some(path) = &cli.config {
        let text = read_text(path)?;
        cfg.apply_file(&text, &path.display().to_string())?;
    }
    for (key, value) in cli.keys.pairs() {
        if let Some(v) = value {
            cfg.set(key, v)
                .map_err(|e| CliError::Usage(format!("--{}: {e}", key.replace('_', "-"))))?;
        }
    }
    if let Some(seed) = cli.seed {
        cfg.seed = seed;
    }
    Ok(cfg)
}

fn read_text(path: &Path) -> Result<String, CliError> {
    fs::read_to_string(path).map_err(|e| CliError::Data(format!("{}: {e}", path.display())))
}

fn write_text(path: &Path, text: &str) -> Result<(), CliError> {
    fs::write(path, text).map_err(|e| CliError::Data(format!("{}: {e}", path.display())))
}

fn emit(out: &mut dyn Write, text: &str) -> Result<(), CliError> {
    out.write_all(text.as_bytes())
        .map_err(|e| CliError::Data(format!("stdout: {e}")))
}

fn dispatch(cli: &Cli, stdout: &mut dyn Write) -> Result<(), CliError> {
    let cfg = effective_config(cli)?;
    match &cli.command {
        Command::Identify {
            experiment,
            logs,
            intercept,
            velocity_threshold,
            min_duration,
            params_out,
        } => cmd_identify(
            *experiment,
            logs,
            *intercept,
            *velocity_threshold,
            *min_duration,
            params_out.as_deref(),
            cli.out.as_deref(),
            stdout,
        ),
        Command::Design { table } => {
            cfg.validate()?;
            cmd_design(&cfg, *table, cli.out.as_deref(), stdout)
        }
        Command::Simulate { mode, seeds } => {
            cfg.validate()?;
            cmd_simulate(&cfg, *mode, seeds, cli.out.as_deref(), stdout)
        }
        Command::Compare { sim, plant } => cmd_compare(sim, plant, cli.out.as_deref(), stdout),
        Command::Trajgen {
            start,
            end,
            increment,
            peak_velocity,
            rate,
        } => {
            let start = parse_angle(start).map_err(CliError::Usage)?;
            let end = parse_angle(end).map_err(CliError::Usage)?;
            cmd_trajgen(start, end, *increment, *peak_velocity, *rate, cli.out.as_deref(), stdout)
        }
    }
}

fn trial_json(file: &Path, r: &RegressionResult, segments: Option<usize>) -> serde_json::Value {
    let mut v = json!({
        "file": file.display().to_string(),
        "coefficients": r.coefficients,
        "r_squared": r.r_squared,
        "n_samples": r.n_samples,
        "residual_std": r.residual_std,
    });
    if let Some(n) = segments {
        v["segments"] = json!(n);
    }
    v
}

#[allow(clippy::too_many_arguments)]
fn cmd_identify(
    experiment: Experiment,
    logs: &[PathBuf],
    intercept: bool,
    velocity_threshold: f64,
    min_duration: f64,
    params_out: Option<&Path>,
    out: Option<&Path>,
    stdout: &mut dyn Write,
) -> Result<(), CliError> {
    if !(velocity_threshold >= 0.0 && min_duration >= 0.0) {
        return Err(CliError::Usage(
            "velocity threshold and minimum duration must be ≥ 0".into(),
        ));
    }
    let kind = match experiment {
        Experiment::InertiaDamping => RegressionKind::InertiaDamping,
        Experiment::Gravity => RegressionKind::Gravity,
    };
    let mut results = Vec::with_capacity(logs.len());
    let mut trials = Vec::with_capacity(logs.len());
    for path in logs {
        let name = path.display().to_string();
        let records = parse_log(&read_text(path)?).map_err(|e| CliError::from(e).context(&name))?;
        let (result, segments) = match kind {
            RegressionKind::InertiaDamping => (regress_inertia_damping(&records, intercept), None),
            RegressionKind::Gravity => {
                let segs = extract_static_segments(&records, velocity_threshold, min_duration);
                (regress_gravity(&segs, intercept), Some(segs.len()))
            }
        };
        let result = result.map_err(|e| CliError::from(e).context(&name))?;
        trials.push(trial_json(path, &result, segments));
        results.push(result);
    }
    let fragment = average_trials(&results, kind)?;
    let (averaged, params_text) = match fragment {
        ParamFragment::InertiaDamping { m_c, b_c } => (
            json!({ "m_c": m_c, "b_c": b_c }),
            format!("m_c = {m_c}\nb_c = {b_c}\n"),
        ),
        ParamFragment::Gravity { g_c } => (json!({ "g_c": g_c }), format!("g_c = {g_c}\n")),
    };
    let report = json!({
        "experiment": kind,
        "settings": {
            "intercept": intercept,
            "velocity_threshold": velocity_threshold,
            "min_duration": min_duration,
        },
        "trials": trials,
        "averaged": averaged,
    });
    let text = serde_json::to_string_pretty(&report).expect("report serializes") + "\n";
    if let Some(p) = params_out {
        write_text(p, &params_text)?;
    }
    if let Some(p) = out {
        write_text(p, &text)?;
    }
    emit(stdout, &text)
}

fn fmt_complex(z: &Complex<f64>) -> String {
    if z.im == 0.0 {
        format!("{:.6}", z.re)
    } else {
        format!("{:.6}{:+.6}i", z.re, z.im)
    }
}

fn fmt_eigs(e: &[Complex<f64>; 2]) -> String {
    format!("{}, {}", fmt_complex(&e[0]), fmt_complex(&e[1]))
}

fn cmd_design(
    cfg: &RunConfig,
    table: bool,
    out: Option<&Path>,
    stdout: &mut dyn Write,
) -> Result<(), CliError> {
    let params = cfg.params()?;
    let ss = linearize(&params, cfg.setpoint(), 0.0)?;
    let mut text = cfg.echo();
    if table {
        let csv = stability_csv(&stability_report(&ss, &CostMatrices::reference_combinations()));
        match out {
            Some(p) => {
                write_text(p, &csv)?;
                let _ = writeln!(text, "table = {}", p.display());
            }
            None => text.push_str(&csv),
        }
        return emit(stdout, &text);
    }
    let sol = lqr_gain(&ss, &cfg.cost()?)?;
    let tau = time_constant(&sol.closed_loop_eigs)?;
    let a = ss.a;
    let _ = writeln!(text, "A = [[{}, {}], [{}, {}]]", a[(0, 0)], a[(0, 1)], a[(1, 0)], a[(1, 1)]);
    let _ = writeln!(text, "B = [{}, {}]", ss.b[0], ss.b[1]);
    let _ = writeln!(text, "open_loop_eigenvalues = {}", fmt_eigs(&eigenvalues_2x2(&ss.a)));
    let _ = writeln!(text, "K = [{:.6}, {:.6}]", sol.k[0], sol.k[1]);
    let _ = writeln!(text, "closed_loop_eigenvalues = {}", fmt_eigs(&sol.closed_loop_eigs));
    let _ = writeln!(text, "time_constant = {tau:.6}");
    let _ = writeln!(text, "care_residual = {:.3e}", sol.residual);
    let _ = writeln!(text, "iterations = {}", sol.iterations);
    if let Some(p) = out {
        write_text(p, &text)?;
    }
    emit(stdout, &text)
}

fn seeded_path(base: &Path, seed: u64) -> PathBuf {
    let stem = base.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
    let name = match base.extension() {
        Some(ext) => format!("{stem}-seed{seed}.{}", ext.to_string_lossy()),
        None => format!("{stem}-seed{seed}"),
    };
    base.with_file_name(name)
}

fn partial_path(path: &Path) -> PathBuf {
    let mut s = path.as_os_str().to_owned();
    s.push(".partial");
    PathBuf::from(s)
}

fn run_one(cfg: &RunConfig, mode: Mode, gain: &RowVector2<f64>, seed: u64) -> Result<Trajectory, HarnessError> {
    let params = cfg.params().map_err(|e| HarnessError::InvalidConfig(e.to_string()))?;
    let noise = cfg.noise(seed);
    match mode {
        Mode::Ideal => harness::run_lqr_noise_sim_from(
            &params,
            gain,
            &noise,
            cfg.dt,
            cfg.duration,
            cfg.setpoint(),
            cfg.initial_state(),
        ),
        Mode::Plant => harness::run_virtual_plant_from(
            &cfg.plant(),
            gain,
            &noise,
            cfg.duration,
            cfg.setpoint(),
            cfg.initial_state(),
        ),
    }
}

fn cmd_simulate(
    cfg: &RunConfig,
    mode: Mode,
    seeds: &[u64],
    out: Option<&Path>,
    stdout: &mut dyn Write,
) -> Result<(), CliError> {
    let params = cfg.params()?;
    let ss = linearize(&params, cfg.setpoint(), 0.0)?;
    let sol = lqr_gain(&ss, &cfg.cost()?)?;
    let default_name = match mode {
        Mode::Ideal => "sim.csv",
        Mode::Plant => "plant.csv",
    };
    let base = out.map(Path::to_path_buf).unwrap_or_else(|| PathBuf::from(default_name));
    let seeds: Vec<u64> = if seeds.is_empty() { vec![cfg.seed] } else { seeds.to_vec() };
    let paths: Vec<PathBuf> = if seeds.len() == 1 {
        vec![base.clone()]
    } else {
        seeds.iter().map(|s| seeded_path(&base, *s)).collect()
    };

    let gain = sol.k;
    let results: Vec<Result<Trajectory, HarnessError>> = if seeds.len() == 1 {
        vec![run_one(cfg, mode, &gain, seeds[0])]
    } else {
        std::thread::scope(|scope| {
            let handles: Vec<_> = seeds
                .iter()
                .map(|&seed| scope.spawn(move || run_one(cfg, mode, &gain, seed)))
                .collect();
            handles
                .into_iter()
                .map(|h| h.join().expect("simulation thread panicked"))
                .collect()
        })
    };

    let mut text = cfg.echo();
    let _ = writeln!(text, "mode = {}", if mode == Mode::Ideal { "ideal" } else { "plant" });
    let _ = writeln!(text, "K = [{:.6}, {:.6}]", gain[0], gain[1]);
    let mut failure: Option<CliError> = None;
    for ((seed, path), result) in seeds.iter().zip(&paths).zip(results) {
        let _ = writeln!(text, "seed = {seed}");
        match result {
            Ok(traj) => {
                write_text(path, &traj.to_csv_string())?;
                let s = regulation_summary(&traj, cfg.setpoint(), 0.0);
                let _ = writeln!(text, "samples = {}", traj.len());
                let _ = writeln!(text, "max_abs_u_control = {:.6}", s.max_abs_u_control);
                let _ = writeln!(text, "max_abs_deviation = {:.6}", s.max_abs_deviation);
                let _ = writeln!(text, "output = {}", path.display());
            }
            Err(HarnessError::Diverged { t, deviation, partial }) => {
                let p = partial_path(path);
                write_text(&p, &partial.to_csv_string())?;
                let _ = writeln!(text, "diverged_at = {t}");
                let _ = writeln!(text, "output = {}", p.display());
                failure.get_or_insert(CliError::Numerical(format!(
                    "seed {seed}: diverged at t = {t} s (|Δθ| = {deviation:.4} rad); partial run written to {}",
                    p.display()
                )));
            }
            Err(e) => return Err(e.into()),
        }
    }
    emit(stdout, &text)?;
    match failure {
        Some(e) => Err(e),
        None => Ok(()),
    }
}

fn load_trajectory(path: &Path) -> Result<Trajectory, CliError> {
    let name = path.display().to_string();
    Trajectory::from_csv_str(&read_text(path)?, name.clone())
        .map_err(|e| CliError::from(e).context(&name))
}

fn cmd_compare(
    sim_path: &Path,
    plant_path: &Path,
    out: Option<&Path>,
    stdout: &mut dyn Write,
) -> Result<(), CliError> {
    let sim = load_trajectory(sim_path)?;
    let plant = load_trajectory(plant_path)?;
    let resampled = resample_cubic(&plant, &sim.times())
        .map_err(|e| CliError::from(e).context(&plant_path.display().to_string()))?;
    let stats = compare(&sim, &resampled)?;
    let mut text = format!(
        "# sim = {}\n# plant = {}\n",
        sim_path.display(),
        plant_path.display()
    );
    text.push_str(&stats.to_string());
    if let Some(p) = out {
        write_text(p, &text)?;
    }
    emit(stdout, &text)
}

fn cmd_trajgen(
    start: f64,
    end: f64,
    increment: f64,
    peak_velocity: f64,
    rate: f64,
    out: Option<&Path>,
    stdout: &mut dyn Write,
) -> Result<(), CliError> {
    let tr = generate_trajectory(start, end, increment, peak_velocity, rate)?;
    let csv = tr.to_csv_string();
    match out {
        Some(p) => {
            write_text(p, &csv)?;
            let text = format!(
                "# start = {start}\n# end = {end}\n# increment = {increment}\n\
                 # peak_velocity = {peak_velocity}\n# rate = {rate}\nsamples = {}\noutput = {}\n",
                tr.len(),
                p.display()
            );
            emit(stdout, &text)
        }
        None => emit(stdout, &csv),
    }
}
