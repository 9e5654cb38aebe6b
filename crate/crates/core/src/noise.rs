//! Decoherence channels: heralded photon loss, heralded leakage out of the
//! computational subspace, and dephasing between the two ground levels.
//!
//! Loss and leakage are heralded reductions: the run either survives with the
//! conditional state unchanged or aborts, so only the success probability
//! carries the damage. Dephasing is a genuine Kraus channel on the g1/g2
//! block.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hilbert::{conjugate_by_diagonal, DensityOperator, RegId, Register, RegisterKind};

/// Per-run decoherence strengths. All probabilities default to zero.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct NoiseSpec {
    /// Probability the photon is lost during the run.
    #[serde(default)]
    pub photon_loss_prob: f64,
    /// Dephasing probability between g1 and g2, applied per protocol step.
    #[serde(default)]
    pub dephasing_prob: f64,
    /// Probability that population stranded in the excited state aborts the
    /// run.
    #[serde(default)]
    pub leakage_prob: f64,
}

impl NoiseSpec {
    pub fn validate(&self) -> Result<()> {
        for (name, p) in [
            ("photon_loss_prob", self.photon_loss_prob),
            ("dephasing_prob", self.dephasing_prob),
            ("leakage_prob", self.leakage_prob),
        ] {
            check_probability(name, p)?;
        }
        Ok(())
    }

    pub fn is_zero(&self) -> bool {
        self.photon_loss_prob == 0.0 && self.dephasing_prob == 0.0 && self.leakage_prob == 0.0
    }
}

fn check_probability(name: &str, p: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&p) {
        return Err(Error::Parameter(format!("{name} = {p} outside [0, 1]")));
    }
    Ok(())
}

fn find_register(
    rho: &DensityOperator,
    id: RegId,
    kind: RegisterKind,
) -> Result<(usize, &Register)> {
    let pos = rho.register_position(id)?;
    let reg = &rho.registers()[pos];
    if reg.id().kind != kind {
        return Err(Error::Register(format!("register {id} has the wrong kind")));
    }
    Ok((pos, reg))
}

/// Kraus channel {sqrt(1-p) I, sqrt(p) Z} on the g1/g2 block of one atom
/// register; g1-g2 coherences scale by (1 - 2p).
pub fn apply_dephasing(rho: &DensityOperator, atom: RegId, p: f64) -> Result<DensityOperator> {
    check_probability("dephasing_prob", p)?;
    let (pos, reg) = find_register(rho, atom, RegisterKind::Atom)?;
    let atom_reg = reg.as_atom().expect("kind checked");
    let g2 = atom_reg
        .level_index("g2")
        .ok_or_else(|| Error::Register(format!("register {atom} has no level 'g2'")))?;
    atom_reg
        .level_index("g1")
        .ok_or_else(|| Error::Register(format!("register {atom} has no level 'g1'")))?;

    let dims = rho.register_dims();
    let strides = crate::hilbert::register_strides(&dims);
    let d = rho.dim();
    let z_diag: Vec<Complex64> = (0..d)
        .map(|i| {
            if (i / strides[pos]) % dims[pos] == g2 {
                Complex64::new(-1.0, 0.0)
            } else {
                Complex64::ONE
            }
        })
        .collect();
    let flipped = conjugate_by_diagonal(rho, &z_diag);
    let matrix =
        rho.matrix() * Complex64::new(1.0 - p, 0.0) + flipped.matrix() * Complex64::new(p, 0.0);
    Ok(DensityOperator::from_trusted_parts(
        rho.registers().to_vec(),
        matrix,
    ))
}

/// Heralded photon loss: the run survives with probability 1 - p and the
/// conditional state is unchanged. Returns `None` for the state when the run
/// can never survive.
pub fn apply_loss(
    rho: &DensityOperator,
    photon: RegId,
    p: f64,
) -> Result<(f64, Option<DensityOperator>)> {
    check_probability("photon_loss_prob", p)?;
    find_register(rho, photon, RegisterKind::Photon)?;
    if p >= 1.0 {
        return Ok((0.0, None));
    }
    Ok((1.0 - p, Some(rho.clone())))
}

/// Heralded leakage into the excited state, modeled as loss from the
/// computational subspace.
pub fn apply_leakage(
    rho: &DensityOperator,
    atom: RegId,
    p: f64,
) -> Result<(f64, Option<DensityOperator>)> {
    check_probability("leakage_prob", p)?;
    find_register(rho, atom, RegisterKind::Atom)?;
    if p >= 1.0 {
        return Ok((0.0, None));
    }
    Ok((1.0 - p, Some(rho.clone())))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hilbert::{
        make_pure, to_density, AtomRegister, FrequencyBin, PhotonRegister, Side, ALGEBRA_TOL,
    };
    use approx::assert_relative_eq;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn regs() -> Vec<Register> {
        vec![
            Register::Photon(
                PhotonRegister::new(
                    Side::L,
                    vec![
                        FrequencyBin::new("w4", 4.0e9),
                        FrequencyBin::new("w3", 3.0e9),
                    ],
                )
                .unwrap(),
            ),
            Register::Atom(
                AtomRegister::new(Side::R, vec!["g1".into(), "g2".into()], vec![0.0, 0.0]).unwrap(),
            ),
        ]
    }

    fn bell() -> DensityOperator {
        to_density(
            &make_pure(
                regs(),
                &[c(0.0, 0.0), c(1.0, 0.0), c(1.0, 0.0), c(0.0, 0.0)],
            )
            .unwrap(),
        )
    }

    #[test]
    fn dephasing_zero_is_identity() {
        let rho = bell();
        let out = apply_dephasing(&rho, RegId::atom(Side::R), 0.0).unwrap();
        let defect = (out.matrix() - rho.matrix())
            .iter()
            .map(|z| z.norm())
            .fold(0.0, f64::max);
        assert!(defect < ALGEBRA_TOL);
    }

    #[test]
    fn dephasing_half_kills_coherence() {
        let rho = bell();
        let out = apply_dephasing(&rho, RegId::atom(Side::R), 0.5).unwrap();
        // (w4 g2, w3 g1) coherence = entry (1, 2) crosses g1/g2.
        assert_relative_eq!(out.matrix()[(1, 2)].norm(), 0.0, epsilon = ALGEBRA_TOL);
        assert_relative_eq!(out.matrix()[(1, 1)].re, 0.5, epsilon = ALGEBRA_TOL);
        assert_relative_eq!(out.matrix()[(2, 2)].re, 0.5, epsilon = ALGEBRA_TOL);
        out.validate().unwrap();
    }

    #[test]
    fn dephasing_scales_coherence() {
        let rho = bell();
        let p = 0.2;
        let out = apply_dephasing(&rho, RegId::atom(Side::R), p).unwrap();
        assert_relative_eq!(
            out.matrix()[(1, 2)].re,
            0.5 * (1.0 - 2.0 * p),
            epsilon = ALGEBRA_TOL
        );
    }

    #[test]
    fn dephasing_composes_multiplicatively() {
        let rho = bell();
        let (p1, p2) = (0.3, 0.15);
        let twice = apply_dephasing(
            &apply_dephasing(&rho, RegId::atom(Side::R), p1).unwrap(),
            RegId::atom(Side::R),
            p2,
        )
        .unwrap();
        let factor = (1.0 - 2.0 * p1) * (1.0 - 2.0 * p2);
        let p_eff = (1.0 - factor) / 2.0;
        let once = apply_dephasing(&rho, RegId::atom(Side::R), p_eff).unwrap();
        let defect = (twice.matrix() - once.matrix())
            .iter()
            .map(|z| z.norm())
            .fold(0.0, f64::max);
        assert!(defect < ALGEBRA_TOL);
    }

    #[test]
    fn dephasing_commutes_with_register_reordering() {
        let rho = bell();
        let a = apply_dephasing(&rho, RegId::atom(Side::R), 0.25)
            .unwrap()
            .permuted(&[1, 0])
            .unwrap();
        let b =
            apply_dephasing(&rho.permuted(&[1, 0]).unwrap(), RegId::atom(Side::R), 0.25).unwrap();
        let defect = (a.matrix() - b.matrix())
            .iter()
            .map(|z| z.norm())
            .fold(0.0, f64::max);
        assert!(defect < ALGEBRA_TOL);
    }

    #[test]
    fn loss_is_heralded() {
        let rho = bell();
        let (p, state) = apply_loss(&rho, RegId::photon(Side::L), 0.0).unwrap();
        assert_relative_eq!(p, 1.0);
        assert!(state.is_some());
        let (p, state) = apply_loss(&rho, RegId::photon(Side::L), 1.0).unwrap();
        assert_relative_eq!(p, 0.0);
        assert!(state.is_none());
        let (p, state) = apply_loss(&rho, RegId::photon(Side::L), 0.3).unwrap();
        assert_relative_eq!(p, 0.7, epsilon = ALGEBRA_TOL);
        let defect = (state.unwrap().matrix() - rho.matrix())
            .iter()
            .map(|z| z.norm())
            .fold(0.0, f64::max);
        assert!(defect < ALGEBRA_TOL);
    }

    #[test]
    fn leakage_mirrors_loss() {
        let rho = bell();
        let (p, state) = apply_leakage(&rho, RegId::atom(Side::R), 0.4).unwrap();
        assert_relative_eq!(p, 0.6, epsilon = ALGEBRA_TOL);
        assert!(state.is_some());
        let (p, state) = apply_leakage(&rho, RegId::atom(Side::R), 1.0).unwrap();
        assert_relative_eq!(p, 0.0);
        assert!(state.is_none());
    }

    #[test]
    fn out_of_range_probability_rejected() {
        let rho = bell();
        assert!(matches!(
            apply_dephasing(&rho, RegId::atom(Side::R), 1.2).unwrap_err(),
            Error::Parameter(_)
        ));
        assert!(matches!(
            apply_loss(&rho, RegId::photon(Side::L), -0.1).unwrap_err(),
            Error::Parameter(_)
        ));
    }

    #[test]
    fn channels_preserve_trace_on_heralded_branch() {
        let rho = bell();
        let out = apply_dephasing(&rho, RegId::atom(Side::R), 0.37).unwrap();
        assert_relative_eq!(out.trace().re, 1.0, epsilon = ALGEBRA_TOL);
    }

    #[test]
    fn spec_validate() {
        NoiseSpec::default().validate().unwrap();
        let bad = NoiseSpec {
            photon_loss_prob: 1.5,
            ..Default::default()
        };
        assert!(bad.validate().is_err());
    }
}
