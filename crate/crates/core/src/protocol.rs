//! Gate sequences for transcribing frequency-bin entanglement onto atoms:
//! local pi/2 pulses, the conditional-phase atom-photon gate, time-resolved
//! heralding, the single-atom transcription sequence, and the two-atom
//! networking sequence.
//!
//! Conventions fixed here and relied on by the tests:
//!
//! * Atomic kets are frame-fixed in the rotating frame of the local drive;
//!   no free evolution phase is applied between pulses.
//! * A time click at `t` multiplies the amplitude of bin `w_m` by
//!   `exp(-i w_m t)`. The common temporal envelope is a flat profile over the
//!   measurement window `[0, T]` and is factored out of every normalized
//!   quantity; it only enters the reported click density.
//! * The reflection off the coupled cavity leaves the blocked branches with
//!   `+1` and the branch that actually enters the cavity with `-1`. With the
//!   resonant transition on g2 <-> e, the resonant bin paired with g1 is the
//!   branch that enters, so the conditional pi phase rides on
//!   (resonant bin, g1). This is the sign realized by the input-output model
//!   in [`crate::cavity`], and the one the protocol sequences below assume.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::hilbert::{
    self, apply_conditional_phase, apply_level_pair_unitary, make_pure, tensor, to_density,
    AtomRegister, DensityOperator, HybridState, RegId, Register, Side, HERALD_THRESHOLD,
};
use crate::noise::{self, NoiseSpec};

/// Phase convention of the local pi/2 rotation. At `axis_phase = 0` the
/// rotation maps g1 to (g1 - i g2)/sqrt(2).
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PulseConvention {
    pub axis_phase: f64,
}

impl PulseConvention {
    /// The 2x2 rotation on the (g1, g2) block:
    /// (1/sqrt(2)) [[1, -i e^{-i phi}], [-i e^{i phi}, 1]].
    pub fn matrix(&self) -> [[Complex64; 2]; 2] {
        let r = std::f64::consts::FRAC_1_SQRT_2;
        let mi = Complex64::new(0.0, -1.0);
        let e_m = Complex64::from_polar(1.0, -self.axis_phase);
        let e_p = Complex64::from_polar(1.0, self.axis_phase);
        [
            [Complex64::new(r, 0.0), mi * e_m * r],
            [mi * e_p * r, Complex64::new(r, 0.0)],
        ]
    }
}

/// Outcome of a time-resolved photon detection.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct HeraldRecord {
    pub side: Side,
    /// Click time within the measurement window, seconds.
    pub click_time: f64,
    /// Click probability density at that time, 1/seconds, under the flat
    /// envelope convention.
    pub success_probability_density: f64,
}

fn atom_pair_block(state: &HybridState, atom: RegId) -> Result<(usize, usize, usize)> {
    let pos = state.register_position(atom)?;
    let reg = state.registers()[pos]
        .as_atom()
        .ok_or_else(|| Error::Register(format!("register {atom} is not an atom")))?;
    let g1 = reg
        .level_index("g1")
        .ok_or_else(|| Error::Register(format!("register {atom} has no level 'g1'")))?;
    let g2 = reg
        .level_index("g2")
        .ok_or_else(|| Error::Register(format!("register {atom} has no level 'g2'")))?;
    Ok((pos, g1, g2))
}

/// Local pi/2 pulse on the g1 <-> g2 transition of one atom register.
pub fn pi_half_pulse(state: &HybridState, atom: RegId, axis_phase: f64) -> Result<HybridState> {
    let (pos, g1, g2) = atom_pair_block(state, atom)?;
    let u = PulseConvention { axis_phase }.matrix();
    Ok(apply_level_pair_unitary(state, pos, g1, g2, &u))
}

/// Conditional-phase gate: every joint basis element containing
/// (`resonant_bin`, `target_level`) picks up a factor of -1.
pub fn ideal_cz(
    state: &HybridState,
    photon: RegId,
    atom: RegId,
    resonant_bin: &str,
    target_level: &str,
) -> Result<HybridState> {
    let photon_pos = state.register_position(photon)?;
    let bin = state.registers()[photon_pos]
        .as_photon()
        .ok_or_else(|| Error::Register(format!("register {photon} is not photonic")))?
        .bin_index(resonant_bin)
        .ok_or_else(|| Error::Register(format!("no bin '{resonant_bin}' in {photon}")))?;
    let atom_pos = state.register_position(atom)?;
    let level = state.registers()[atom_pos]
        .as_atom()
        .ok_or_else(|| Error::Register(format!("register {atom} is not an atom")))?
        .level_index(target_level)
        .ok_or_else(|| Error::Register(format!("no level '{target_level}' in {atom}")))?;
    Ok(apply_conditional_phase(
        state,
        &[(photon_pos, bin), (atom_pos, level)],
        Complex64::new(-1.0, 0.0),
    ))
}

fn check_window(t: f64, window: f64) -> Result<()> {
    if window <= 0.0 || !window.is_finite() {
        return Err(Error::Parameter(format!(
            "measurement window {window} must be positive"
        )));
    }
    if !(0.0..=window).contains(&t) {
        return Err(Error::Parameter(format!(
            "click time {t} outside window [0, {window}]"
        )));
    }
    Ok(())
}

/// Projects one photon register onto the time eigenstate at `t`, removing the
/// register. Bin `w_m` contributes with phase `exp(-i w_m t)`; the post-state
/// is renormalized and the click density under the flat window envelope is
/// returned.
pub fn herald_time(
    state: &HybridState,
    photon: RegId,
    t: f64,
    window: f64,
) -> Result<(HeraldRecord, HybridState)> {
    check_window(t, window)?;
    let pos = state.register_position(photon)?;
    let reg = state.registers()[pos]
        .as_photon()
        .ok_or_else(|| Error::Register(format!("register {photon} is not photonic")))?;
    let side = reg.side;
    let omegas: Vec<f64> = reg.bins.iter().map(|b| b.omega).collect();
    let dims = state.register_dims();
    let strides = hilbert::register_strides(&dims);
    let kept_positions: Vec<usize> = (0..dims.len()).filter(|&p| p != pos).collect();
    let kept_regs: Vec<Register> = kept_positions
        .iter()
        .map(|&p| state.registers()[p].clone())
        .collect();
    if kept_regs.is_empty() {
        return Err(Error::Register(
            "herald must leave at least one register".into(),
        ));
    }
    let kept_dims: Vec<usize> = kept_positions.iter().map(|&p| dims[p]).collect();
    let kept_strides = hilbert::register_strides(&kept_dims);
    let kept_dim: usize = kept_dims.iter().product();

    let phases: Vec<Complex64> = omegas
        .iter()
        .map(|&w| Complex64::from_polar(1.0, -w * t))
        .collect();
    let mut post = vec![Complex64::ZERO; kept_dim];
    for i in 0..state.dim() {
        let bin = (i / strides[pos]) % dims[pos];
        let kept: usize = kept_positions
            .iter()
            .zip(&kept_strides)
            .map(|(&p, s)| ((i / strides[p]) % dims[p]) * s)
            .sum();
        post[kept] += phases[bin] * state.amplitudes()[i];
    }
    let weight: f64 = post.iter().map(|a| a.norm_sqr()).sum();
    if weight < HERALD_THRESHOLD {
        return Err(Error::HeraldFailure {
            probability: weight,
        });
    }
    let scale = weight.sqrt();
    for a in &mut post {
        *a /= scale;
    }
    let record = HeraldRecord {
        side,
        click_time: t,
        success_probability_density: weight / window,
    };
    Ok((record, HybridState::from_normalized_parts(kept_regs, post)))
}

fn ground_atom(side: Side) -> Result<HybridState> {
    let reg = Register::Atom(AtomRegister::new(
        side,
        vec!["g1".into(), "g2".into()],
        vec![0.0, 0.0],
    )?);
    make_pure(vec![reg], &[Complex64::ONE, Complex64::ZERO])
}

fn photon_pair_sides(pair: &HybridState) -> Result<()> {
    let mut sides = Vec::new();
    for r in pair.registers() {
        match r {
            Register::Photon(p) => sides.push(p.side),
            Register::Atom(_) => {
                return Err(Error::Register(
                    "photon pair input must be purely photonic".into(),
                ))
            }
        }
    }
    if sides.len() != 2 || !sides.contains(&Side::L) || !sides.contains(&Side::R) {
        return Err(Error::Register(
            "expected one photon register per side".into(),
        ));
    }
    Ok(())
}

/// Transcription sequence for one atom: tensor in the ground-state atom on
/// the right, pi/2 pulse, conditional-phase gate against the resonant bin,
/// time herald of the right photon at `t_r`, second pi/2 pulse in phase with
/// the first.
pub fn run_single_atom_protocol(
    pair: &HybridState,
    resonant_bin: &str,
    t_r: f64,
    window: f64,
) -> Result<HybridState> {
    photon_pair_sides(pair)?;
    let atom = RegId::atom(Side::R);
    let state = tensor(pair, &ground_atom(Side::R)?)?;
    let state = pi_half_pulse(&state, atom, 0.0)?;
    // Reflection convention: the branch entering the cavity is (resonant, g1).
    let state = ideal_cz(&state, RegId::photon(Side::R), atom, resonant_bin, "g1")?;
    let (_, state) = herald_time(&state, RegId::photon(Side::R), t_r, window)?;
    pi_half_pulse(&state, atom, 0.0)
}

/// Networking sequence entangling two remote atoms through one entangled
/// photon pair: pi/2 pulses on both atoms, a conditional-phase gate on each
/// side, time heralds at `t_l` and `t_r`, and the closing pi/2 pulses.
pub fn run_two_atom_protocol(
    pair: &HybridState,
    resonant_bin: &str,
    t_l: f64,
    t_r: f64,
    window: f64,
) -> Result<HybridState> {
    photon_pair_sides(pair)?;
    let atom_l = RegId::atom(Side::L);
    let atom_r = RegId::atom(Side::R);
    let state = tensor(
        &tensor(pair, &ground_atom(Side::L)?)?,
        &ground_atom(Side::R)?,
    )?;
    let state = pi_half_pulse(&state, atom_l, 0.0)?;
    let state = pi_half_pulse(&state, atom_r, 0.0)?;
    let state = ideal_cz(&state, RegId::photon(Side::L), atom_l, resonant_bin, "g1")?;
    let state = ideal_cz(&state, RegId::photon(Side::R), atom_r, resonant_bin, "g1")?;
    let (_, state) = herald_time(&state, RegId::photon(Side::L), t_l, window)?;
    let (_, state) = herald_time(&state, RegId::photon(Side::R), t_r, window)?;
    let state = pi_half_pulse(&state, atom_l, 0.0)?;
    pi_half_pulse(&state, atom_r, 0.0)
}

fn fringe_coefficients(registers: &[Register], theta_r: f64) -> Result<Vec<Complex64>> {
    let mut pos_l = None;
    let mut pos_r = None;
    for (p, r) in registers.iter().enumerate() {
        let a = r
            .as_atom()
            .ok_or_else(|| Error::Register("fringe projection expects a two-atom state".into()))?;
        if a.level_index("g1") != Some(0) || a.level_index("g2") != Some(1) {
            return Err(Error::Register(
                "fringe projection expects levels [g1, g2]".into(),
            ));
        }
        match a.side {
            Side::L => pos_l = Some(p),
            Side::R => pos_r = Some(p),
        }
    }
    let (Some(pos_l), Some(pos_r)) = (pos_l, pos_r) else {
        return Err(Error::Register(
            "fringe projection expects atoms on both sides".into(),
        ));
    };
    if registers.len() != 2 {
        return Err(Error::Register(
            "fringe projection expects exactly two atoms".into(),
        ));
    }
    let dims: Vec<usize> = registers.iter().map(|r| r.dim()).collect();
    let strides = hilbert::register_strides(&dims);
    let i = Complex64::new(0.0, 1.0);
    let f_l = [Complex64::ONE, i];
    let f_r = [Complex64::ONE, i * Complex64::from_polar(1.0, theta_r)];
    let dim: usize = dims.iter().product();
    Ok((0..dim)
        .map(|k| {
            let ll = (k / strides[pos_l]) % dims[pos_l];
            let lr = (k / strides[pos_r]) % dims[pos_r];
            f_l[ll] * f_r[lr] * 0.5
        })
        .collect())
}

/// Probability of projecting a two-atom state onto the separable analyzer
/// state (1/2)(<g1|_L + i<g2|_L)(<g1|_R + i e^{i theta_R} <g2|_R).
///
/// The value is the raw projection probability; figure-level datasets
/// normalize by the maximum over the scanned time axis.
pub fn fringe_probability(state: &HybridState, theta_r: f64) -> Result<f64> {
    let coeff = fringe_coefficients(state.registers(), theta_r)?;
    let amp: Complex64 = coeff
        .iter()
        .zip(state.amplitudes())
        .map(|(c, a)| c * a)
        .sum();
    Ok(amp.norm_sqr())
}

/// Density-operator variant of [`fringe_probability`].
pub fn fringe_probability_density(rho: &DensityOperator, theta_r: f64) -> Result<f64> {
    let coeff = fringe_coefficients(rho.registers(), theta_r)?;
    let d = rho.dim();
    let mut acc = Complex64::ZERO;
    for i in 0..d {
        for j in 0..d {
            acc += coeff[i] * rho.matrix()[(i, j)] * coeff[j].conj();
        }
    }
    Ok(acc.re)
}

/// Where dephasing is inserted in the noisy sequences.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum DephasingPoints {
    /// After every local pi/2 pulse. The default.
    #[default]
    AfterEachPulse,
    /// Only after the closing pulse.
    AfterFinalPulse,
}

struct NoisyPipeline {
    rho: DensityOperator,
    success: f64,
    noise: NoiseSpec,
    points: DephasingPoints,
}

impl NoisyPipeline {
    fn pulse(&mut self, atom: RegId, final_pulse: bool) -> Result<()> {
        let pos = self.rho.register_position(atom)?;
        let reg = self.rho.registers()[pos].as_atom().expect("atom register");
        let g1 = reg.level_index("g1").expect("g1 present");
        let g2 = reg.level_index("g2").expect("g2 present");
        let u = PulseConvention { axis_phase: 0.0 }.matrix();
        self.rho = hilbert::conjugate_by_level_pair_unitary(&self.rho, pos, g1, g2, &u);
        let apply_dephasing = match self.points {
            DephasingPoints::AfterEachPulse => true,
            DephasingPoints::AfterFinalPulse => final_pulse,
        };
        if apply_dephasing && self.noise.dephasing_prob > 0.0 {
            self.rho = noise::apply_dephasing(&self.rho, atom, self.noise.dephasing_prob)?;
        }
        Ok(())
    }

    fn cz(&mut self, photon: RegId, atom: RegId, resonant_bin: &str) -> Result<bool> {
        let photon_pos = self.rho.register_position(photon)?;
        let bin = self.rho.registers()[photon_pos]
            .as_photon()
            .ok_or_else(|| Error::Register(format!("register {photon} is not photonic")))?
            .bin_index(resonant_bin)
            .ok_or_else(|| Error::Register(format!("no bin '{resonant_bin}' in {photon}")))?;
        let atom_pos = self.rho.register_position(atom)?;
        let level = self.rho.registers()[atom_pos]
            .as_atom()
            .expect("atom register")
            .level_index("g1")
            .expect("g1 present");
        let dims = self.rho.register_dims();
        let strides = hilbert::register_strides(&dims);
        let diag: Vec<Complex64> = (0..self.rho.dim())
            .map(|i| {
                let hit = (i / strides[photon_pos]) % dims[photon_pos] == bin
                    && (i / strides[atom_pos]) % dims[atom_pos] == level;
                if hit {
                    Complex64::new(-1.0, 0.0)
                } else {
                    Complex64::ONE
                }
            })
            .collect();
        self.rho = hilbert::conjugate_by_diagonal(&self.rho, &diag);
        // Leakage out of the computational subspace during the gate.
        let (p, state) = noise::apply_leakage(&self.rho, atom, self.noise.leakage_prob)?;
        self.success *= p;
        match state {
            Some(s) => {
                self.rho = s;
                Ok(true)
            }
            None => Ok(false),
        }
    }

    fn herald(&mut self, photon: RegId, t: f64, window: f64) -> Result<bool> {
        check_window(t, window)?;
        let (p, state) = noise::apply_loss(&self.rho, photon, self.noise.photon_loss_prob)?;
        self.success *= p;
        let Some(s) = state else { return Ok(false) };
        let pos = s.register_position(photon)?;
        let reg = s.registers()[pos].as_photon().expect("photon register");
        let n = reg.bins.len() as f64;
        let coeffs: Vec<Complex64> = reg
            .bins
            .iter()
            .map(|b| Complex64::from_polar(1.0 / n.sqrt(), -b.omega * t))
            .collect();
        let bra = hilbert::Bra::new(vec![photon], coeffs);
        let (_, post) = hilbert::project(&s, &bra)?;
        self.rho = post;
        Ok(true)
    }
}

/// Density-operator variant of the transcription sequence with decoherence
/// inserted per `points`. Returns the probability that the heralded branch
/// survives loss and leakage, and the conditional state (absent when the
/// branch cannot survive).
pub fn run_single_atom_protocol_noisy(
    pair: &HybridState,
    resonant_bin: &str,
    t_r: f64,
    window: f64,
    noise: &NoiseSpec,
    points: DephasingPoints,
) -> Result<(f64, Option<DensityOperator>)> {
    photon_pair_sides(pair)?;
    noise.validate()?;
    let atom = RegId::atom(Side::R);
    let state = tensor(pair, &ground_atom(Side::R)?)?;
    let mut pipe = NoisyPipeline {
        rho: to_density(&state),
        success: 1.0,
        noise: *noise,
        points,
    };
    pipe.pulse(atom, false)?;
    if !pipe.cz(RegId::photon(Side::R), atom, resonant_bin)? {
        return Ok((0.0, None));
    }
    if !pipe.herald(RegId::photon(Side::R), t_r, window)? {
        return Ok((0.0, None));
    }
    pipe.pulse(atom, true)?;
    Ok((pipe.success, Some(pipe.rho)))
}

/// Density-operator variant of the networking sequence; see
/// [`run_single_atom_protocol_noisy`].
pub fn run_two_atom_protocol_noisy(
    pair: &HybridState,
    resonant_bin: &str,
    t_l: f64,
    t_r: f64,
    window: f64,
    noise: &NoiseSpec,
    points: DephasingPoints,
) -> Result<(f64, Option<DensityOperator>)> {
    photon_pair_sides(pair)?;
    noise.validate()?;
    let atom_l = RegId::atom(Side::L);
    let atom_r = RegId::atom(Side::R);
    let state = tensor(
        &tensor(pair, &ground_atom(Side::L)?)?,
        &ground_atom(Side::R)?,
    )?;
    let mut pipe = NoisyPipeline {
        rho: to_density(&state),
        success: 1.0,
        noise: *noise,
        points,
    };
    pipe.pulse(atom_l, false)?;
    pipe.pulse(atom_r, false)?;
    if !pipe.cz(RegId::photon(Side::L), atom_l, resonant_bin)? {
        return Ok((0.0, None));
    }
    if !pipe.cz(RegId::photon(Side::R), atom_r, resonant_bin)? {
        return Ok((0.0, None));
    }
    if !pipe.herald(RegId::photon(Side::L), t_l, window)? {
        return Ok((0.0, None));
    }
    if !pipe.herald(RegId::photon(Side::R), t_r, window)? {
        return Ok((0.0, None));
    }
    pipe.pulse(atom_l, true)?;
    pipe.pulse(atom_r, true)?;
    Ok((pipe.success, Some(pipe.rho)))
}
