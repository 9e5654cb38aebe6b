//! Figure-level experiment drivers: the two-atom interference fringe, the
//! mixed-state measurement maps, and the cavity reflection scan. These build
//! the plot-ready datasets the command line serializes.

use num_complex::Complex64;
use rayon::prelude::*;
use std::f64::consts::{FRAC_PI_4, TAU};

use crate::catalog;
use crate::cavity::{self, CavityParams};
use crate::error::{Error, Result};
use crate::hilbert::{FrequencyBin, RegId, Side};
use crate::noise::{self, NoiseSpec};
use crate::protocol::{self, DephasingPoints};

/// Options of the two-atom fringe experiment.
#[derive(Clone, Copy, Debug)]
pub struct FringeOptions {
    /// Bin detuning w1 - w2, rad/s.
    pub detuning: f64,
    /// Number of time-difference samples; the scan spans two fringe periods.
    pub n_rows: usize,
    /// Replace the entangled input pair by the separable one.
    pub product_input: bool,
    pub noise: NoiseSpec,
}

impl Default for FringeOptions {
    fn default() -> Self {
        Self {
            detuning: TAU * 1.77e9,
            n_rows: 512,
            product_input: false,
            noise: NoiseSpec::default(),
        }
    }
}

/// Interference fringe versus click-time difference, for analyzer phases 0
/// and pi/4, normalized to a unit maximum over the dataset.
#[derive(Clone, Debug)]
pub struct FringeDataset {
    /// Click-time difference t_R - t_L, seconds.
    pub tau: Vec<f64>,
    pub theta_zero: Vec<f64>,
    pub theta_quarter: Vec<f64>,
    /// One fringe period 2*pi/detuning, seconds.
    pub period: f64,
}

/// Runs the networking sequence over a scan of click-time differences and
/// projects both analyzer settings.
pub fn fringe_dataset(opts: &FringeOptions) -> Result<FringeDataset> {
    if opts.detuning <= 0.0 || !opts.detuning.is_finite() {
        return Err(Error::Parameter(format!(
            "detuning {} must be positive",
            opts.detuning
        )));
    }
    if opts.n_rows < 4 {
        return Err(Error::Parameter(format!(
            "n_rows {} too small",
            opts.n_rows
        )));
    }
    opts.noise.validate()?;
    if opts.noise.photon_loss_prob >= 1.0 || opts.noise.leakage_prob >= 1.0 {
        return Err(Error::Parameter(
            "a loss or leakage probability of 1 aborts every run".into(),
        ));
    }
    let period = TAU / opts.detuning;
    let window = 2.0 * period;
    let pair = if opts.product_input {
        catalog::networking_product_pair(opts.detuning)
    } else {
        catalog::networking_photon_pair(opts.detuning)
    };
    let t_l = 0.0;
    let tau: Vec<f64> = (0..opts.n_rows)
        .map(|k| k as f64 * window / opts.n_rows as f64)
        .collect();
    let rows: Vec<(f64, f64)> = tau
        .par_iter()
        .map(|&dt| -> Result<(f64, f64)> {
            let t_r = t_l + dt;
            if opts.noise.is_zero() {
                let state = protocol::run_two_atom_protocol(&pair, "w1", t_l, t_r, window)?;
                Ok((
                    protocol::fringe_probability(&state, 0.0)?,
                    protocol::fringe_probability(&state, FRAC_PI_4)?,
                ))
            } else {
                let (_, rho) = protocol::run_two_atom_protocol_noisy(
                    &pair,
                    "w1",
                    t_l,
                    t_r,
                    window,
                    &opts.noise,
                    DephasingPoints::AfterEachPulse,
                )?;
                let rho = rho.expect("survival probability positive");
                Ok((
                    protocol::fringe_probability_density(&rho, 0.0)?,
                    protocol::fringe_probability_density(&rho, FRAC_PI_4)?,
                ))
            }
        })
        .collect::<Result<_>>()?;
    let mut theta_zero: Vec<f64> = rows.iter().map(|r| r.0).collect();
    let mut theta_quarter: Vec<f64> = rows.iter().map(|r| r.1).collect();
    let peak = theta_zero
        .iter()
        .chain(theta_quarter.iter())
        .cloned()
        .fold(f64::NEG_INFINITY, f64::max);
    if peak > 0.0 {
        for v in theta_zero.iter_mut().chain(theta_quarter.iter_mut()) {
            *v /= peak;
        }
    }
    Ok(FringeDataset {
        tau,
        theta_zero,
        theta_quarter,
        period,
    })
}

/// Options of the mixed-state measurement maps.
#[derive(Clone, Copy, Debug)]
pub struct MapOptions {
    /// Bin detuning w1 - w2 (equal to the ground splitting), rad/s.
    pub detuning: f64,
    pub window: f64,
    pub n_time: usize,
    pub n_theta: usize,
    pub noise: NoiseSpec,
}

impl Default for MapOptions {
    fn default() -> Self {
        Self {
            detuning: TAU * 20.0e6,
            window: 1e-7,
            n_time: 64,
            n_theta: 64,
            noise: NoiseSpec::default(),
        }
    }
}

/// Conditional projection-rate maps over (click time, analyzer phase) for
/// the two named mixed states.
#[derive(Clone, Debug)]
pub struct MixedStateMaps {
    pub times: Vec<f64>,
    pub thetas: Vec<f64>,
    /// Entangled phase mixture, rows indexed by time.
    pub map_a: Vec<Vec<f64>>,
    /// Separable mixture.
    pub map_b: Vec<Vec<f64>>,
}

/// Evaluates the conditional functional of both named mixtures over the
/// grid. Dephasing noise, when configured, acts on the atom before the
/// measurement; heralded loss and leakage rescale only the discarded branch
/// and leave the normalized maps untouched.
pub fn mixed_state_maps(opts: &MapOptions) -> Result<MixedStateMaps> {
    if opts.detuning <= 0.0 || !opts.detuning.is_finite() {
        return Err(Error::Parameter(format!(
            "detuning {} must be positive",
            opts.detuning
        )));
    }
    if opts.n_time < 4 || opts.n_theta < 4 {
        return Err(Error::Parameter("need at least 4 samples per axis".into()));
    }
    opts.noise.validate()?;
    let pair = crate::witness::AtomPair::ground();
    let times: Vec<f64> = (0..opts.n_time)
        .map(|j| j as f64 * opts.window / opts.n_time as f64)
        .collect();
    let thetas: Vec<f64> = (0..opts.n_theta)
        .map(|k| k as f64 * TAU / opts.n_theta as f64)
        .collect();
    let mut maps = Vec::with_capacity(2);
    for rho in [
        catalog::phase_mixture(opts.detuning),
        catalog::separable_mixture(opts.detuning),
    ] {
        let rho = if opts.noise.dephasing_prob > 0.0 {
            noise::apply_dephasing(&rho, RegId::atom(Side::R), opts.noise.dephasing_prob)?
        } else {
            rho
        };
        let map: Vec<Vec<f64>> = times
            .par_iter()
            .map(|&t| {
                thetas
                    .iter()
                    .map(|&th| crate::witness::f_c(&rho, t, th, &pair))
                    .collect::<Result<Vec<f64>>>()
            })
            .collect::<Result<_>>()?;
        maps.push(map);
    }
    let map_b = maps.pop().expect("two maps");
    let map_a = maps.pop().expect("two maps");
    Ok(MixedStateMaps {
        times,
        thetas,
        map_a,
        map_b,
    })
}

/// Options of the reflection scan.
#[derive(Clone, Debug)]
pub struct CavityScanOptions {
    pub params: CavityParams,
    /// Bins used for the gate-error summary.
    pub bins: Vec<FrequencyBin>,
    pub n_points: usize,
    /// Scan half-width around the cavity resonance, rad/s.
    pub half_width: f64,
}

impl Default for CavityScanOptions {
    fn default() -> Self {
        let kappa = TAU * 3.0e6;
        let omega_cavity = TAU * 3.0e14;
        let params = CavityParams {
            g: TAU * 5.0e6,
            kappa,
            gamma: TAU * 3.0e4,
            omega_cavity,
            omega_atom: omega_cavity,
        };
        let bins = vec![
            FrequencyBin::new("w1", omega_cavity),
            FrequencyBin::new("w2", omega_cavity + 1.0e4 * kappa),
        ];
        Self {
            params,
            bins,
            n_points: 1001,
            half_width: 20.0 * kappa,
        }
    }
}

/// Reflection coefficients over a frequency scan plus the gate-error summary
/// for the configured bins.
#[derive(Clone, Debug)]
pub struct CavityScanDataset {
    pub omega_in: Vec<f64>,
    pub uncoupled: Vec<Complex64>,
    pub coupled: Vec<Complex64>,
    pub gate_error: f64,
}

pub fn cavity_scan(opts: &CavityScanOptions) -> Result<CavityScanDataset> {
    opts.params.validate()?;
    if opts.n_points < 2 {
        return Err(Error::Parameter(format!(
            "n_points {} too small",
            opts.n_points
        )));
    }
    let omega_in: Vec<f64> = (0..opts.n_points)
        .map(|k| {
            opts.params.omega_cavity - opts.half_width
                + 2.0 * opts.half_width * k as f64 / (opts.n_points - 1) as f64
        })
        .collect();
    let mut uncoupled = Vec::with_capacity(omega_in.len());
    let mut coupled = Vec::with_capacity(omega_in.len());
    for &w in &omega_in {
        uncoupled.push(cavity::reflection_coefficient(w, false, &opts.params)?);
        coupled.push(cavity::reflection_coefficient(w, true, &opts.params)?);
    }
    let gate_error = cavity::gate_error(&opts.params, &opts.bins)?;
    Ok(CavityScanDataset {
        omega_in,
        uncoupled,
        coupled,
        gate_error,
    })
}
