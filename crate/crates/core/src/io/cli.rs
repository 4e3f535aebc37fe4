//! `hodsar` command-line interface.
//!
//! Exit codes: 0 success, 1 usage error, 2 data or configuration error,
//! 3 numerical failure. Diagnostics go to the error stream; data goes to
//! files under `--out` or to standard output.

use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use clap::{Parser, Subcommand, ValueEnum};
use rand::RngCore;

use super::{
    load_config_with, parse_touchstone, svg_line_plot, write_atomic, write_touchstone, IoError,
    RunConfig, Table,
};
use crate::constants::dbm_to_mw;
use crate::dynamics::{fit_rabi, rabi_trace, DynamicsError, RabiFit, RabiTrace};
use crate::experiment::{
    contrast_scaling, coupling_eta, cw_spectrum, estimate_ensemble, pulse_sequence_run,
    shot_noise_snr, Execution, ExperimentError,
};
use crate::numeric::ode::OdeOptions;
use crate::numeric::rng::substream;
use crate::numeric::linear_regression;
use crate::resonator::{
    find_modes, linear_grid, qcircle_fit, synth_s21_cavity, synth_s21_modesum, FindModesOptions,
    ResonatorError,
};

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 1;
pub const EXIT_DATA: i32 = 2;
pub const EXIT_NUMERIC: i32 = 3;

#[derive(Debug, Parser)]
#[command(name = "hodsar", version, about = "Spin-acoustic resonance simulation and S-parameter analysis")]
struct Cli {
    /// TOML run configuration
    #[arg(long, global = true, value_name = "PATH")]
    config: Option<PathBuf>,
    /// Named parameter preset (paper-appendix, device-104p5)
    #[arg(long, global = true, value_name = "NAME")]
    preset: Option<String>,
    /// RNG seed; falls back to HODSAR_SEED, then the config
    #[arg(long, global = true, value_name = "N")]
    seed: Option<u64>,
    /// Output directory for generated files
    #[arg(long, global = true, value_name = "DIR", default_value = ".")]
    out: PathBuf,
    #[arg(long, global = true, value_enum, default_value_t = Format::Both)]
    format: Format,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Csv,
    Svg,
    Both,
}

impl Format {
    fn csv(self) -> bool {
        self != Format::Svg
    }
    fn svg(self) -> bool {
        self != Format::Csv
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum SynthModel {
    Modesum,
    Cavity,
}

#[derive(Debug, clap::Args)]
struct GridArgs {
    /// MHz
    #[arg(long)]
    f_start: Option<f64>,
    #[arg(long)]
    f_stop: Option<f64>,
    #[arg(long)]
    f_step: Option<f64>,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// CW contrast spectrum over an RF frequency sweep
    Spectrum {
        #[arg(long, allow_hyphen_values = true)]
        power_dbm: Option<f64>,
        #[command(flatten)]
        grid: GridArgs,
        /// Evaluate frequency points on one thread
        #[arg(long)]
        serial: bool,
    },
    /// Rabi trace versus acoustic pulse length, with a damped-cosine fit
    Rabi {
        #[arg(long, allow_hyphen_values = true)]
        power_dbm: Option<f64>,
        /// Drive frequency (MHz)
        #[arg(long)]
        f_drive: Option<f64>,
    },
    /// Fitted Rabi frequency versus the square root of RF power
    RabiPower {
        #[arg(long)]
        f_drive: Option<f64>,
    },
    /// Find resonances in a two-port Touchstone file and fit each Q-circle
    S21Fit { path: PathBuf },
    /// Synthesize S21 from the mode sum or the transfer-matrix cavity
    SynthS21 {
        #[arg(long, value_enum, default_value_t = SynthModel::Modesum)]
        model: SynthModel,
        #[command(flatten)]
        grid: GridArgs,
    },
    /// Addressed-ensemble size, contrast scaling and shot-noise SNR
    Estimate {
        /// Triplet fraction
        #[arg(long)]
        f_t: Option<f64>,
    },
    /// Magnetic energy fraction of the configured energy budget
    Eta,
}

#[derive(Debug)]
enum Failure {
    Usage(String),
    Data(String),
    Numeric(String),
}

impl Failure {
    fn code(&self) -> i32 {
        match self {
            Failure::Usage(_) => EXIT_USAGE,
            Failure::Data(_) => EXIT_DATA,
            Failure::Numeric(_) => EXIT_NUMERIC,
        }
    }
    fn message(&self) -> &str {
        match self {
            Failure::Usage(m) | Failure::Data(m) | Failure::Numeric(m) => m,
        }
    }
}

impl From<IoError> for Failure {
    fn from(e: IoError) -> Self {
        match e {
            IoError::Numeric(_) => Failure::Numeric(e.to_string()),
            _ => Failure::Data(e.to_string()),
        }
    }
}

fn dynamics_is_numeric(e: &DynamicsError) -> bool {
    matches!(
        e,
        DynamicsError::Numerical(_) | DynamicsError::Integrator(_) | DynamicsError::NoOscillationDetected
    )
}

fn resonator_is_numeric(e: &ResonatorError) -> bool {
    matches!(e, ResonatorError::FitFailed(_) | ResonatorError::CircleFitDegenerate)
}

impl From<DynamicsError> for Failure {
    fn from(e: DynamicsError) -> Self {
        if dynamics_is_numeric(&e) {
            Failure::Numeric(e.to_string())
        } else {
            Failure::Data(e.to_string())
        }
    }
}

impl From<ResonatorError> for Failure {
    fn from(e: ResonatorError) -> Self {
        if resonator_is_numeric(&e) {
            Failure::Numeric(e.to_string())
        } else {
            Failure::Data(e.to_string())
        }
    }
}

impl From<ExperimentError> for Failure {
    fn from(e: ExperimentError) -> Self {
        match e {
            ExperimentError::Dynamics(d) => d.into(),
            ExperimentError::Resonator(r) => r.into(),
            other => Failure::Data(other.to_string()),
        }
    }
}

/// Parse `args` (including the program name) and execute. Returns the
/// process exit code.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            use clap::error::ErrorKind;
            let text = e.render().to_string();
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => {
                    let _ = write!(out, "{text}");
                    EXIT_OK
                }
                _ => {
                    let _ = write!(err, "{text}");
                    EXIT_USAGE
                }
            };
        }
    };
    match execute(cli, out, err) {
        Ok(()) => EXIT_OK,
        Err(f) => {
            let _ = writeln!(err, "error: {}", f.message());
            f.code()
        }
    }
}

fn resolve_config(cli: &Cli) -> Result<RunConfig, Failure> {
    let text = match &cli.config {
        Some(p) => std::fs::read_to_string(p).map_err(|e| Failure::Data(format!("{}: {e}", p.display())))?,
        None => String::new(),
    };
    let mut cfg = load_config_with(&text, cli.preset.as_deref())?;
    if let Some(seed) = cli.seed {
        cfg.seed = seed;
    } else if let Ok(v) = std::env::var("HODSAR_SEED") {
        cfg.seed = v
            .trim()
            .parse()
            .map_err(|_| Failure::Usage(format!("HODSAR_SEED must be an unsigned integer (got `{v}`)")))?;
    }
    Ok(cfg)
}

fn timestamp() -> u64 {
    SystemTime::now().duration_since(UNIX_EPOCH).map_or(0, |d| d.as_secs())
}

fn write_table(dir: &Path, stem: &str, table: &Table) -> Result<(), Failure> {
    let mut t = table.clone();
    t.meta("timestamp_unix", timestamp());
    write_atomic(&dir.join(format!("{stem}.csv")), &t.to_csv())?;
    Ok(())
}

fn grid(start: f64, stop: f64, step: f64) -> Result<Vec<f64>, Failure> {
    if !(step > 0.0) || !(stop >= start) || !start.is_finite() || !stop.is_finite() {
        return Err(Failure::Data(format!("invalid grid {start}..{stop} step {step}")));
    }
    Ok(linear_grid(start, stop, step))
}

fn execute(cli: Cli, out: &mut dyn Write, err: &mut dyn Write) -> Result<(), Failure> {
    let mut cfg = resolve_config(&cli)?;
    let io = |e: std::io::Error| Failure::Data(e.to_string());
    match &cli.command {
        Command::Spectrum {
            power_dbm,
            grid: g,
            serial,
        } => {
            let s = &mut cfg.sweep;
            s.power_dbm = power_dbm.unwrap_or(s.power_dbm);
            s.f_start = g.f_start.unwrap_or(s.f_start);
            s.f_stop = g.f_stop.unwrap_or(s.f_stop);
            s.f_step = g.f_step.unwrap_or(s.f_step);
            cfg.validate()?;
            let freqs = grid(cfg.sweep.f_start, cfg.sweep.f_stop, cfg.sweep.f_step)?;
            let exec = if *serial { Execution::Serial } else { Execution::Parallel };
            let model = cfg.cw_model()?;
            let r = cw_spectrum(&model, &cfg.inhomogeneity_spec(), dbm_to_mw(cfg.sweep.power_dbm), &freqs, exec)?;
            let mut t = Table::new(&["f_mhz", "contrast", "stderr"]);
            for i in 0..r.freqs.len() {
                t.push(vec![r.freqs[i], r.contrast[i], r.stderr[i]]);
            }
            t.meta("config_hash", cfg.hash());
            t.meta("seed", cfg.seed);
            t.meta("power_dbm", cfg.sweep.power_dbm);
            if cli.format.csv() {
                write_table(&cli.out, "spectrum", &t)?;
            }
            if cli.format.svg() {
                let svg = svg_line_plot("CW contrast", "RF frequency (MHz)", "contrast", &[("contrast", &r.freqs, &r.contrast)]);
                write_atomic(&cli.out.join("spectrum.svg"), &svg)?;
            }
            if let Some((f, c)) = r.peak() {
                writeln!(out, "peak_f_mhz = {f:.6}\npeak_contrast = {c:.8e}").map_err(io)?;
            }
        }
        Command::Rabi { power_dbm, f_drive } => {
            cfg.rabi.power_dbm = power_dbm.unwrap_or(cfg.rabi.power_dbm);
            cfg.rabi.f_drive = f_drive.unwrap_or(cfg.rabi.f_drive);
            cfg.validate()?;
            let (trace, fit) = rabi_at(&cfg, cfg.rabi.power_dbm)?;
            let mut t = Table::new(&["tau_us", "signal", "fit", "counts"]);
            let mut seed_rng = substream(cfg.seed, 1, 0);
            for (tau, s) in trace.times.iter().zip(&trace.signal) {
                let seq = cfg.sequence.with_tau(*tau);
                let counts = pulse_sequence_run(&seq, &trace.drive, &cfg.rates, &cfg.photon_map, seed_rng.next_u64())?;
                t.push(vec![*tau, *s, fit.model(*tau), counts.total as f64]);
            }
            t.meta("config_hash", cfg.hash());
            t.meta("seed", cfg.seed);
            t.meta("power_dbm", cfg.rabi.power_dbm);
            t.meta("omega_r_mhz", format!("{:.8e}", fit.omega_r));
            t.meta("decay_rate_per_us", format!("{:.8e}", fit.decay_rate));
            if cli.format.csv() {
                write_table(&cli.out, "rabi", &t)?;
            }
            if cli.format.svg() {
                let fitted = t.column(2);
                let svg = svg_line_plot(
                    "Rabi oscillation",
                    "pulse length (μs)",
                    "signal",
                    &[("simulated", &trace.times, &trace.signal), ("fit", &trace.times, &fitted)],
                );
                write_atomic(&cli.out.join("rabi.svg"), &svg)?;
            }
            writeln!(
                out,
                "rabi_frequency_model_mhz = {:.8e}\nomega_r_mhz = {:.8e}\ndecay_rate_per_us = {:.8e}\ndetuning_mhz = {:.8e}",
                trace.drive.rabi_frequency, fit.omega_r, fit.decay_rate, trace.drive.detuning
            )
            .map_err(io)?;
        }
        Command::RabiPower { f_drive } => {
            cfg.rabi.f_drive = f_drive.unwrap_or(cfg.rabi.f_drive);
            cfg.validate()?;
            let mut t = Table::new(&["power_dbm", "power_mw", "sqrt_power", "omega_model_mhz", "omega_r_mhz", "decay_rate_per_us"]);
            for &dbm in &cfg.rabi.powers_dbm {
                let (trace, fit) = rabi_at(&cfg, dbm)?;
                let p = dbm_to_mw(dbm);
                t.push(vec![dbm, p, p.sqrt(), trace.drive.rabi_frequency, fit.omega_r, fit.decay_rate]);
            }
            let (x, y) = (t.column(2), t.column(4));
            let lin = linear_regression(&x, &y)
                .ok_or_else(|| Failure::Data("rabi.powers_dbm needs at least two distinct powers".into()))?;
            t.meta("config_hash", cfg.hash());
            t.meta("slope_mhz_per_sqrt_mw", format!("{:.8e}", lin.slope));
            t.meta("intercept_mhz", format!("{:.8e}", lin.intercept));
            t.meta("r_squared", format!("{:.8e}", lin.r_squared));
            if cli.format.csv() {
                write_table(&cli.out, "rabi_power", &t)?;
            }
            if cli.format.svg() {
                let line: Vec<f64> = x.iter().map(|v| lin.slope * v + lin.intercept).collect();
                let svg = svg_line_plot(
                    "Rabi frequency vs √P",
                    "√P (√mW)",
                    "Ω_R (MHz)",
                    &[("fitted Ω_R", &x, &y), ("linear fit", &x, &line)],
                );
                write_atomic(&cli.out.join("rabi_power.svg"), &svg)?;
            }
            writeln!(
                out,
                "slope_mhz_per_sqrt_mw = {:.8e}\nintercept_mhz = {:.8e}\nr_squared = {:.8e}",
                lin.slope, lin.intercept, lin.r_squared
            )
            .map_err(io)?;
        }
        Command::S21Fit { path } => {
            let text = std::fs::read_to_string(path).map_err(|e| Failure::Data(format!("{}: {e}", path.display())))?;
            let rec = parse_touchstone(&text)?;
            let cands = find_modes(&rec, &FindModesOptions::default());
            if cands.is_empty() {
                return Err(Failure::Numeric("no resonances found above the noise floor".into()));
            }
            let mut t = Table::new(&["f0_mhz", "q_loaded", "q_unloaded", "radius", "residual"]);
            for c in &cands {
                match qcircle_fit(&rec, c.window) {
                    Ok(fit) => t.push(vec![
                        fit.f0,
                        fit.q_loaded,
                        fit.q_unloaded().unwrap_or(f64::NAN),
                        fit.radius,
                        fit.residual,
                    ]),
                    Err(e) => {
                        let _ = writeln!(err, "warning: mode near {:.6} MHz: {e}", c.f0);
                    }
                }
            }
            if t.rows.is_empty() {
                return Err(Failure::Numeric("every Q-circle fit failed".into()));
            }
            write!(out, "{}", t.to_csv()).map_err(io)?;
        }
        Command::SynthS21 { model, grid: g } => {
            let s = &mut cfg.synth;
            s.f_start = g.f_start.unwrap_or(s.f_start);
            s.f_stop = g.f_stop.unwrap_or(s.f_stop);
            s.f_step = g.f_step.unwrap_or(s.f_step);
            cfg.validate()?;
            let freqs = grid(cfg.synth.f_start, cfg.synth.f_stop, cfg.synth.f_step)?;
            let rec = match model {
                SynthModel::Modesum => synth_s21_modesum(&cfg.mode_set()?, &freqs)?,
                SynthModel::Cavity => synth_s21_cavity(&cfg.resonator.cavity, &freqs)?,
            };
            write_atomic(&cli.out.join("synth_s21.s2p"), &write_touchstone(&rec))?;
            let db: Vec<f64> = rec.s21.iter().map(|s| 20.0 * s.norm().log10()).collect();
            if cli.format.csv() {
                let mut t = Table::new(&["f_mhz", "s21_re", "s21_im", "s21_db"]);
                for i in 0..rec.len() {
                    t.push(vec![rec.freqs[i], rec.s21[i].re, rec.s21[i].im, db[i]]);
                }
                t.meta("config_hash", cfg.hash());
                write_table(&cli.out, "synth_s21", &t)?;
            }
            if cli.format.svg() {
                let svg = svg_line_plot("|S21|", "frequency (MHz)", "|S21| (dB)", &[("S21", &rec.freqs, &db)]);
                write_atomic(&cli.out.join("synth_s21.svg"), &svg)?;
            }
            writeln!(out, "points = {}", rec.len()).map_err(io)?;
        }
        Command::Estimate { f_t } => {
            if f_t.is_some() {
                cfg.estimate.f_t = *f_t;
            }
            cfg.validate()?;
            let e = estimate_ensemble(&cfg.optics, &cfg.film, cfg.estimate.f_t.unwrap_or(0.0))?;
            let mut lines = vec![
                ("r_um", e.r),
                ("volume_m3", e.volume),
                ("n_pc_per_m3", e.n_pc),
                ("n_molecules", e.n_molecules),
            ];
            if cfg.estimate.f_t.is_some() {
                let c = contrast_scaling(e.n_triplets, cfg.estimate.c1, None);
                if c.capped {
                    let _ = writeln!(err, "warning: contrast capped at 1");
                }
                lines.push(("f_t", e.f_t));
                lines.push(("n_triplets", e.n_triplets));
                lines.push(("contrast", c.c));
                lines.push(("snr", shot_noise_snr(c.c, cfg.optics.detected_rate_cps, cfg.estimate.integration_s)));
            }
            for (k, v) in lines {
                writeln!(out, "{k} = {v:.6e}").map_err(io)?;
            }
        }
        Command::Eta => {
            let eta = coupling_eta(&cfg.energy)?;
            writeln!(out, "eta = {eta:.6e}").map_err(io)?;
        }
    }
    Ok(())
}

fn rabi_at(cfg: &RunConfig, power_dbm: f64) -> Result<(RabiTrace, RabiFit), Failure> {
    let drive = cfg.drive_at(cfg.rabi.f_drive, dbm_to_mw(power_dbm))?;
    let taus = grid(cfg.rabi.tau_start, cfg.rabi.tau_stop, cfg.rabi.tau_step)?;
    let trace = rabi_trace(&drive, &cfg.rates, &taus, &cfg.drive.readout, &OdeOptions::default())?;
    let fit = fit_rabi(&trace)?;
    Ok((trace, fit))
}
