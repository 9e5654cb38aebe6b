//! Experiment runner for the frequency-bin hybrid entanglement simulator.
//!
//! Subcommands: `fig2` (two-atom interference fringe), `fig3` (mixed-state
//! measurement maps), `witness` (entanglement-witness report over a named or
//! file-supplied state), `cavity-scan` (reflection scan plus gate-error
//! summary). Exit codes: 0 success, 2 configuration error, 3 I/O error.

mod config;

use clap::{Args, Parser, Subcommand};
use std::f64::consts::TAU;
use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use config::{ExperimentConfig, OutputFormat};
use fbin_core::catalog;
use fbin_core::experiments::{self, CavityScanOptions, FringeOptions, MapOptions};
use fbin_core::hilbert::{to_density, DensityMatrixFile, DensityOperator};
use fbin_core::witness::{self, AtomPair};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

#[derive(Parser)]
#[command(
    name = "fbin-sim",
    version,
    about = "Frequency-bin hybrid atom-photon entanglement simulator"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct CommonArgs {
    /// JSON experiment configuration.
    #[arg(long, value_name = "PATH")]
    config: Option<PathBuf>,
    /// Output file; stdout when omitted.
    #[arg(long, value_name = "PATH")]
    out: Option<PathBuf>,
    /// Output format.
    #[arg(long, value_enum)]
    format: Option<OutputFormat>,
    /// Seed for randomized scans.
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Subcommand)]
enum Command {
    /// Two-atom interference fringe versus click-time difference.
    Fig2 {
        #[command(flatten)]
        common: CommonArgs,
        /// Bin detuning as an ordinary frequency, Hz.
        #[arg(long, value_name = "HZ")]
        detuning_hz: Option<f64>,
        /// Number of time-difference rows.
        #[arg(long, value_name = "N")]
        grid_time: Option<usize>,
        /// Replace the entangled photon pair by a separable one.
        #[arg(long)]
        product_input: bool,
    },
    /// Measurement maps of the two named mixed states.
    Fig3 {
        #[command(flatten)]
        common: CommonArgs,
        /// Bin detuning as an ordinary frequency, Hz.
        #[arg(long, value_name = "HZ")]
        detuning_hz: Option<f64>,
        #[arg(long, value_name = "N")]
        grid_time: Option<usize>,
        #[arg(long, value_name = "N")]
        grid_theta: Option<usize>,
    },
    /// Entanglement-witness report over a named state or a density-matrix
    /// JSON file (eq1 | fig3a | fig3b | product | random-separable | path).
    Witness {
        state: String,
        #[command(flatten)]
        common: CommonArgs,
        #[arg(long, value_name = "HZ")]
        detuning_hz: Option<f64>,
        #[arg(long, value_name = "N")]
        grid_time: Option<usize>,
        #[arg(long, value_name = "N")]
        grid_theta: Option<usize>,
        #[arg(long)]
        eps_l: Option<f64>,
        #[arg(long)]
        eps_r: Option<f64>,
    },
    /// Reflection coefficients over a frequency scan plus the gate-error
    /// summary.
    CavityScan {
        #[command(flatten)]
        common: CommonArgs,
        /// Number of scan points.
        #[arg(long, value_name = "N")]
        grid_time: Option<usize>,
    },
}

enum CliError {
    Config(String),
    Io(String),
}

impl CliError {
    fn config(e: impl std::fmt::Display) -> Self {
        CliError::Config(e.to_string())
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Err(e) = init_thread_pool() {
        eprintln!("error: {e}");
        return ExitCode::from(2);
    }
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(CliError::Config(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
        Err(CliError::Io(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(3)
        }
    }
}

/// FBIN_SIM_THREADS caps the rayon pool; unset or 0 keeps the default.
fn init_thread_pool() -> Result<(), String> {
    let Ok(raw) = std::env::var("FBIN_SIM_THREADS") else {
        return Ok(());
    };
    let n: usize = raw
        .parse()
        .map_err(|_| format!("FBIN_SIM_THREADS = '{raw}' is not a thread count"))?;
    if n == 0 {
        return Ok(());
    }
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| format!("cannot configure thread pool: {e}"))
}

fn load_config(common: &CommonArgs, expected: &str) -> Result<ExperimentConfig, CliError> {
    let config = match &common.config {
        Some(path) => ExperimentConfig::load(path).map_err(CliError::Config)?,
        None => ExperimentConfig::default(),
    };
    config
        .check_experiment_id(expected)
        .map_err(CliError::Config)?;
    Ok(config)
}

fn run(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Fig2 {
            common,
            detuning_hz,
            grid_time,
            product_input,
        } => {
            let config = load_config(&common, "fig2")?;
            let detuning = detuning_hz
                .map(|hz| TAU * hz)
                .or(config.detuning)
                .unwrap_or(TAU * 1.77e9);
            let opts = FringeOptions {
                detuning,
                n_rows: grid_time.or(config.grid.n_time).unwrap_or(512),
                product_input,
                noise: config.noise,
            };
            let data = experiments::fringe_dataset(&opts).map_err(CliError::config)?;
            let body = match output_format(&common, &config, OutputFormat::Csv) {
                OutputFormat::Csv => fig2_csv(&data),
                OutputFormat::Json => fig2_json(&data),
            };
            write_output(&common, &config, &body)
        }
        Command::Fig3 {
            common,
            detuning_hz,
            grid_time,
            grid_theta,
        } => {
            let config = load_config(&common, "fig3")?;
            let detuning = detuning_hz
                .map(|hz| TAU * hz)
                .or(config.detuning)
                .unwrap_or(TAU * 20.0e6);
            let opts = MapOptions {
                detuning,
                window: config.grid.window.unwrap_or(1e-7),
                n_time: grid_time.or(config.grid.n_time).unwrap_or(64),
                n_theta: grid_theta.or(config.grid.n_theta).unwrap_or(64),
                noise: config.noise,
            };
            let data = experiments::mixed_state_maps(&opts).map_err(CliError::config)?;
            let body = match output_format(&common, &config, OutputFormat::Csv) {
                OutputFormat::Csv => fig3_csv(&data),
                OutputFormat::Json => fig3_json(&data),
            };
            write_output(&common, &config, &body)
        }
        Command::Witness {
            state,
            common,
            detuning_hz,
            grid_time,
            grid_theta,
            eps_l,
            eps_r,
        } => {
            let config = load_config(&common, "witness")?;
            let grid = config
                .witness_grid(grid_time, grid_theta)
                .map_err(CliError::Config)?;
            let detuning = detuning_hz
                .map(|hz| TAU * hz)
                .or(config.detuning)
                .unwrap_or(TAU * 20.0e6);
            let eps_l = eps_l.or(config.eps_l).unwrap_or(witness::DEFAULT_EPSILON);
            let eps_r = eps_r.or(config.eps_r).unwrap_or(witness::DEFAULT_EPSILON);
            let fc_tol = config.fc_tol.unwrap_or(witness::DEFAULT_FC_TOL);
            let seed = common.seed.or(config.seed).unwrap_or(0);
            let rho = resolve_state(&state, detuning, grid.window, seed, eps_l.min(eps_r))?;
            let report =
                witness::witness_report(&rho, &grid, &AtomPair::ground(), eps_l, eps_r, fc_tol)
                    .map_err(CliError::config)?;
            let body = match output_format(&common, &config, OutputFormat::Json) {
                OutputFormat::Json => {
                    serde_json::to_string_pretty(&report).map_err(CliError::config)? + "\n"
                }
                OutputFormat::Csv => witness_csv(&report),
            };
            write_output(&common, &config, &body)
        }
        Command::CavityScan { common, grid_time } => {
            let config = load_config(&common, "cavity-scan")?;
            let mut opts = CavityScanOptions::default();
            if let Some(params) = config.cavity {
                let kappa = params.kappa;
                opts.bins = vec![
                    fbin_core::hilbert::FrequencyBin::new("w1", params.omega_cavity),
                    fbin_core::hilbert::FrequencyBin::new(
                        "w2",
                        params.omega_cavity + 1.0e4 * kappa,
                    ),
                ];
                opts.half_width = 20.0 * kappa;
                opts.params = params;
            }
            if let Some(n) = grid_time.or(config.grid.n_time) {
                opts.n_points = n;
            }
            let data = experiments::cavity_scan(&opts).map_err(CliError::config)?;
            let body = match output_format(&common, &config, OutputFormat::Csv) {
                OutputFormat::Csv => cavity_csv(&data),
                OutputFormat::Json => cavity_json(&data),
            };
            write_output(&common, &config, &body)
        }
    }
}

/// Built-in witness states; anything else is treated as a density-matrix
/// JSON file path.
fn resolve_state(
    spec: &str,
    detuning: f64,
    window: f64,
    seed: u64,
    eps: f64,
) -> Result<DensityOperator, CliError> {
    let lattice_check = || -> Result<(), CliError> {
        let m = detuning * window / TAU;
        if (m - m.round()).abs() > 1e-6 * (1.0 + m.abs()) || m < 0.5 {
            return Err(CliError::Config(format!(
                "built-in witness states need a detuning on the window lattice; \
                 {detuning} rad/s is {m:.4} harmonics of 2*pi/window"
            )));
        }
        Ok(())
    };
    match spec {
        "eq1" => {
            lattice_check()?;
            Ok(to_density(&catalog::hybrid_bell(detuning)))
        }
        "fig3a" => {
            lattice_check()?;
            Ok(catalog::phase_mixture(detuning))
        }
        "fig3b" => {
            lattice_check()?;
            Ok(catalog::separable_mixture(detuning))
        }
        "product" => {
            lattice_check()?;
            Ok(catalog::single_product(detuning))
        }
        "random-separable" => {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            Ok(catalog::random_compliant_mixture(&mut rng, window, eps))
        }
        path => {
            let text = std::fs::read_to_string(path)
                .map_err(|e| CliError::Io(format!("cannot read state file {path}: {e}")))?;
            let file: DensityMatrixFile = serde_json::from_str(&text)
                .map_err(|e| CliError::Config(format!("malformed state file {path}: {e}")))?;
            file.into_density()
                .map_err(|e| CliError::Config(format!("state file {path}: {e}")))
        }
    }
}

fn output_format(
    common: &CommonArgs,
    config: &ExperimentConfig,
    default: OutputFormat,
) -> OutputFormat {
    common.format.or(config.format).unwrap_or(default)
}

fn write_output(
    common: &CommonArgs,
    config: &ExperimentConfig,
    body: &str,
) -> Result<(), CliError> {
    match common.out.as_ref().or(config.output.as_ref()) {
        Some(path) => std::fs::write(path, body)
            .map_err(|e| CliError::Io(format!("cannot write {}: {e}", path.display()))),
        None => {
            let mut stdout = std::io::stdout().lock();
            stdout
                .write_all(body.as_bytes())
                .map_err(|e| CliError::Io(format!("cannot write to stdout: {e}")))
        }
    }
}

/// Lossless float formatting: 17 significant digits, '.' separator.
fn fmt(x: f64) -> String {
    format!("{x:.16e}")
}

fn fig2_csv(data: &experiments::FringeDataset) -> String {
    let mut out = String::from("t_R_minus_t_L_ns,P_theta_0,P_theta_pi_over_4\n");
    for (k, &tau) in data.tau.iter().enumerate() {
        out.push_str(&format!(
            "{},{},{}\n",
            fmt(tau * 1e9),
            fmt(data.theta_zero[k]),
            fmt(data.theta_quarter[k])
        ));
    }
    out
}

fn fig2_json(data: &experiments::FringeDataset) -> String {
    let value = serde_json::json!({
        "t_R_minus_t_L_ns": data.tau.iter().map(|t| t * 1e9).collect::<Vec<_>>(),
        "P_theta_0": data.theta_zero,
        "P_theta_pi_over_4": data.theta_quarter,
        "period_ns": data.period * 1e9,
    });
    serde_json::to_string_pretty(&value).expect("serializable") + "\n"
}

fn fig3_csv(data: &experiments::MixedStateMaps) -> String {
    let mut out = String::from("state_id,t_L_ns,theta_R,rate\n");
    for (id, map) in [("a", &data.map_a), ("b", &data.map_b)] {
        for (j, &t) in data.times.iter().enumerate() {
            for (k, &theta) in data.thetas.iter().enumerate() {
                out.push_str(&format!(
                    "{id},{},{},{}\n",
                    fmt(t * 1e9),
                    fmt(theta),
                    fmt(map[j][k])
                ));
            }
        }
    }
    out
}

fn fig3_json(data: &experiments::MixedStateMaps) -> String {
    let value = serde_json::json!({
        "t_L_ns": data.times.iter().map(|t| t * 1e9).collect::<Vec<_>>(),
        "theta_R": data.thetas,
        "rate_a": data.map_a,
        "rate_b": data.map_b,
    });
    serde_json::to_string_pretty(&value).expect("serializable") + "\n"
}

fn witness_csv(report: &witness::WitnessReport) -> String {
    let mut out = String::from("kind,t_L_ns,theta_R,value\n");
    for (kind, grid) in [("fc", &report.fc_grid), ("klr", &report.klr_grid)] {
        for (j, &t) in report.times.iter().enumerate() {
            for (k, &theta) in report.thetas.iter().enumerate() {
                out.push_str(&format!(
                    "{kind},{},{},{}\n",
                    fmt(t * 1e9),
                    fmt(theta),
                    fmt(grid[j][k])
                ));
            }
        }
    }
    out
}

fn cavity_csv(data: &experiments::CavityScanDataset) -> String {
    let mut out =
        String::from("omega_in,re_r_uncoupled,im_r_uncoupled,re_r_coupled,im_r_coupled\n");
    for (k, &w) in data.omega_in.iter().enumerate() {
        out.push_str(&format!(
            "{},{},{},{},{}\n",
            fmt(w),
            fmt(data.uncoupled[k].re),
            fmt(data.uncoupled[k].im),
            fmt(data.coupled[k].re),
            fmt(data.coupled[k].im)
        ));
    }
    out.push_str(&format!("gate_error,{},,,\n", fmt(data.gate_error)));
    out
}

fn cavity_json(data: &experiments::CavityScanDataset) -> String {
    let value = serde_json::json!({
        "omega_in": data.omega_in,
        "r_uncoupled": data.uncoupled.iter().map(|z| [z.re, z.im]).collect::<Vec<_>>(),
        "r_coupled": data.coupled.iter().map(|z| [z.re, z.im]).collect::<Vec<_>>(),
        "gate_error": data.gate_error,
    });
    serde_json::to_string_pretty(&value).expect("serializable") + "\n"
}
