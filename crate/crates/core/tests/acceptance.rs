//! Acceptance suite: one test per criterion, each printing a pass line and
//! enforcing its runtime budget. Expected values come from independently
//! derived closed forms, never from the code paths under test.

use approx::assert_relative_eq;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::f64::consts::{FRAC_1_SQRT_2, FRAC_PI_4, TAU};
use std::time::Instant;

use fbin_core::catalog;
use fbin_core::cavity;
use fbin_core::experiments::{self, FringeOptions, MapOptions};
use fbin_core::hilbert::{self, make_pure, mix, to_density, Bra, RegId, Side};
use fbin_core::noise;
use fbin_core::protocol;
use fbin_core::witness::{self, AtomPair, MeasurementGrid, Verdict};
use fbin_core::Complex64;

const WINDOW: f64 = 1e-7;

fn witness_grid() -> MeasurementGrid {
    MeasurementGrid::default_for_window(WINDOW, 256, 64).unwrap()
}

fn witness_detuning() -> f64 {
    TAU * 20.0e6
}

/// Transcription and networking outputs match their heralded closed forms at
/// fidelity 1 within 1e-12 over random click times.
#[test]
fn criterion_1_protocol_correctness() {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(101);

    let pair = catalog::transcription_photon_pair();
    let (w1, w2) = catalog::transcription_r_frequencies();
    let protocol_window = 1e-9;
    for _ in 0..10 {
        let t_r = rng.gen::<f64>() * protocol_window;
        let out = protocol::run_single_atom_protocol(&pair, "w1", t_r, protocol_window).unwrap();
        let target = catalog::transcription_target(w1, w2, t_r);
        let f = hilbert::fidelity(&out, &target).unwrap();
        assert!(
            (f - 1.0).abs() <= 1e-12,
            "transcription fidelity {f} at t_r = {t_r:.3e}"
        );
    }

    let delta = TAU * 1.77e9;
    let net_pair = catalog::networking_photon_pair(delta);
    let (nw1, nw2) = catalog::networking_frequencies(delta);
    let net_window = 4.0 / 1.77e9;
    for _ in 0..10 {
        let t_l = rng.gen::<f64>() * net_window;
        let t_r = rng.gen::<f64>() * net_window;
        let out = protocol::run_two_atom_protocol(&net_pair, "w1", t_l, t_r, net_window).unwrap();
        let target = catalog::networking_target(nw1, nw2, t_l, t_r);
        let f = hilbert::fidelity(&out, &target).unwrap();
        assert!(
            (f - 1.0).abs() <= 1e-12,
            "networking fidelity {f} at ({t_l:.3e}, {t_r:.3e})"
        );
    }

    let elapsed = start.elapsed();
    assert!(elapsed.as_secs_f64() < 1.0, "criterion 1 took {elapsed:?}");
    println!("criterion 1 (protocol correctness): PASS in {elapsed:?}");
}

/// The interference fringe at 1.77 GHz detuning: period 0.5650 ns within
/// 0.5%, unit normalization, exact quarter-period translation between the
/// analyzer settings, and flat output for a separable input.
#[test]
fn criterion_2_fringe_reproduction() {
    let start = Instant::now();
    let opts = FringeOptions::default();
    let data = experiments::fringe_dataset(&opts).unwrap();
    assert!(data.tau.len() >= 400);

    // Peak-to-peak spacing from interior local maxima of the shifted fringe.
    let column = &data.theta_quarter;
    let mut peaks = Vec::new();
    for k in 1..column.len() - 1 {
        if column[k] > column[k - 1] && column[k] > column[k + 1] {
            peaks.push(k);
        }
    }
    assert!(peaks.len() >= 2, "found {} fringe peaks", peaks.len());
    let step = data.tau[1] - data.tau[0];
    for pair in peaks.windows(2) {
        let spacing = (pair[1] - pair[0]) as f64 * step;
        let expected = 0.5650e-9;
        assert!(
            (spacing - expected).abs() <= 0.005 * expected,
            "fringe period {spacing:.6e} s off from {expected:.4e} s"
        );
    }

    for column in [&data.theta_zero, &data.theta_quarter] {
        let max = column.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        assert!((max - 1.0).abs() <= 1e-12, "column max {max}");
    }

    // theta = pi/4 is the theta = 0 curve translated by (pi/4)/detuning,
    // an exact number of grid steps on this scan.
    let shift_time = FRAC_PI_4 / opts.detuning;
    let shift_steps = (shift_time / step).round() as usize;
    assert!((shift_steps as f64 * step - shift_time).abs() < 1e-15);
    for k in 0..data.tau.len() - shift_steps {
        assert!(
            (data.theta_quarter[k] - data.theta_zero[k + shift_steps]).abs() <= 1e-9,
            "translation defect at row {k}"
        );
    }

    let product = experiments::fringe_dataset(&FringeOptions {
        product_input: true,
        ..FringeOptions::default()
    })
    .unwrap();
    for column in [&product.theta_zero, &product.theta_quarter] {
        let lo = column.iter().cloned().fold(f64::INFINITY, f64::min);
        let hi = column.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        assert!(hi - lo < 1e-12, "separable input produced a fringe");
    }

    let elapsed = start.elapsed();
    assert!(elapsed.as_secs_f64() < 5.0, "criterion 2 took {elapsed:?}");
    println!("criterion 2 (fringe reproduction): PASS in {elapsed:?}");
}

/// The mixed-state measurement maps match their closed forms: the entangled
/// mixture with visibility 1/sqrt(2), the separable one click-time
/// independent.
#[test]
fn criterion_3_mixed_state_maps() {
    let start = Instant::now();
    let opts = MapOptions::default();
    let data = experiments::mixed_state_maps(&opts).unwrap();
    let d = opts.detuning;

    for (j, &t) in data.times.iter().enumerate() {
        for (k, &theta) in data.thetas.iter().enumerate() {
            let expect_a = 0.5 * (1.0 + FRAC_1_SQRT_2 * (d * t - theta + FRAC_PI_4).cos());
            assert!(
                (data.map_a[j][k] - expect_a).abs() <= 1e-9,
                "entangled map defect at ({j}, {k})"
            );
            let expect_b = 0.5 * ((theta / 2.0).cos().powi(2) + (1.0 + theta.sin()) / 2.0);
            assert!(
                (data.map_b[j][k] - expect_b).abs() <= 1e-9,
                "separable map defect at ({j}, {k})"
            );
        }
    }

    for k in 0..data.thetas.len() {
        let column: Vec<f64> = data.map_b.iter().map(|row| row[k]).collect();
        let lo = column.iter().cloned().fold(f64::INFINITY, f64::min);
        let hi = column.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        assert!(hi - lo <= 1e-12, "separable map varies with click time");
    }

    let elapsed = start.elapsed();
    assert!(elapsed.as_secs_f64() < 5.0, "criterion 3 took {elapsed:?}");
    println!("criterion 3 (mixed-state maps): PASS in {elapsed:?}");
}

/// Witness soundness: 100 seeded compliant mixtures trip neither criterion;
/// the named entangled states trip at least one.
#[test]
fn criterion_4_witness_soundness_and_detection() {
    let start = Instant::now();
    let grid = witness_grid();
    let pair = AtomPair::ground();
    let eps = witness::DEFAULT_EPSILON;

    for seed in 0..100u64 {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let rho = catalog::random_compliant_mixture(&mut rng, WINDOW, eps);
        let report = witness::fourier_witness(&rho, &grid, &pair, eps, eps).unwrap();
        assert!(
            !report.fourier_flagged,
            "seed {seed}: separable mixture violated the Fourier bound ({})",
            report.max_abs_fourier_klr
        );
        assert!(
            !report.fc_flagged,
            "seed {seed}: separable mixture tripped the conditional criterion ({})",
            report.fc_tl_variation
        );
        assert_eq!(report.verdict, Verdict::Inconclusive);
    }

    let delta = witness_detuning();
    for (name, rho) in [
        ("eq1", to_density(&catalog::hybrid_bell(delta))),
        ("fig3a", catalog::phase_mixture(delta)),
    ] {
        let report = witness::fourier_witness(&rho, &grid, &pair, eps, eps).unwrap();
        assert_eq!(
            report.verdict,
            Verdict::EntangledWitnessed,
            "{name} was not flagged"
        );
    }

    let elapsed = start.elapsed();
    assert!(elapsed.as_secs_f64() < 30.0, "criterion 4 took {elapsed:?}");
    println!("criterion 4 (witness soundness and detection): PASS in {elapsed:?}");
}

/// Product states factorize: the joint rate equals the product of marginals
/// at every grid point, and the identity survives the Fourier transforms.
#[test]
fn criterion_5_factorization_identity() {
    let start = Instant::now();
    let grid = witness_grid();
    let pair = AtomPair::ground();
    let mut rng = ChaCha8Rng::seed_from_u64(505);

    for trial in 0..50 {
        let rho = to_density(&catalog::random_product_state(&mut rng, WINDOW));
        let report = witness::fourier_witness(&rho, &grid, &pair, 1.0, 1.0).unwrap();
        for j in 0..grid.n_time {
            for k in 0..grid.n_theta {
                let defect =
                    (report.klr_grid[j][k] - report.kl_series[j] * report.kr_series[k]).abs();
                assert!(
                    defect <= 1e-12,
                    "trial {trial}: rate factorization defect {defect:.3e} at ({j}, {k})"
                );
            }
        }
        for (s, row) in report.fourier_klr.iter().enumerate() {
            for (k, z) in row.iter().enumerate() {
                let defect = (z - report.fourier_kl[s] * report.fourier_kr[k]).norm();
                assert!(
                    defect <= 1e-9,
                    "trial {trial}: Fourier factorization defect {defect:.3e}"
                );
            }
        }
    }

    let elapsed = start.elapsed();
    println!("criterion 5 (factorization identity): PASS in {elapsed:?}");
}

/// Cavity limits: exact pi phase for the empty resonant cavity, unimodular
/// lossless reflection, near-ideal gate in the strong-coupling limit, and
/// monotone improvement with coupling.
#[test]
fn criterion_6_cavity_limits() {
    let start = Instant::now();

    let (ideal, bins) = cavity::ideal_limit_params();
    let empty = fbin_core::cavity::CavityParams { g: 0.0, ..ideal };
    let r = cavity::reflection_coefficient(empty.omega_cavity, false, &empty).unwrap();
    assert!(
        (r + Complex64::ONE).norm() <= 1e-12,
        "resonant reflection {r}"
    );

    for k in 0..1000 {
        let omega = ideal.omega_cavity + (k as f64 - 500.0) * 1.0e7 + 7.7e5;
        for coupled in [false, true] {
            let r = cavity::reflection_coefficient(omega, coupled, &ideal).unwrap();
            assert!(
                (r.norm() - 1.0).abs() <= 1e-12,
                "lossless |r| = {} at offset {k}",
                r.norm()
            );
        }
    }

    let err = cavity::gate_error(&ideal, &bins).unwrap();
    assert!(err < 1e-6, "ideal-limit gate error {err:.3e}");

    let (base, scan_bins, g_values) = cavity::monotone_scan();
    let errors = cavity::g_scan(&base, &scan_bins, &g_values).unwrap();
    for (k, pair) in errors.windows(2).enumerate() {
        assert!(
            pair[1] < pair[0],
            "gate error rose between scan points {k} and {}",
            k + 1
        );
    }

    let elapsed = start.elapsed();
    println!("criterion 6 (cavity limits): PASS in {elapsed:?}");
}

/// Algebraic invariant suite: unitarity, global-phase invariance,
/// density-operator invariants, mixture algebra, and the dephasing
/// composition law.
#[test]
fn criterion_7_algebraic_invariants() {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(707);
    let delta = witness_detuning();

    let random_state = |rng: &mut ChaCha8Rng| {
        let regs = to_density(&catalog::hybrid_bell(delta))
            .registers()
            .to_vec();
        let amps: Vec<Complex64> = (0..4)
            .map(|_| Complex64::new(rng.gen::<f64>() - 0.5, rng.gen::<f64>() - 0.5))
            .collect();
        make_pure(regs, &amps).unwrap()
    };

    // Unitarity of every gate, and global-phase invariance of projections.
    for _ in 0..10 {
        let state = random_state(&mut rng);
        let pulsed =
            protocol::pi_half_pulse(&state, RegId::atom(Side::R), rng.gen::<f64>() * TAU).unwrap();
        assert_relative_eq!(pulsed.norm(), 1.0, epsilon = 1e-12);
        let gated = protocol::ideal_cz(
            &state,
            RegId::photon(Side::L),
            RegId::atom(Side::R),
            "w1",
            "g2",
        )
        .unwrap();
        assert_relative_eq!(gated.norm(), 1.0, epsilon = 1e-12);

        let phase = Complex64::from_polar(1.0, rng.gen::<f64>() * TAU);
        let rotated = make_pure(
            state.registers().to_vec(),
            &state
                .amplitudes()
                .iter()
                .map(|a| a * phase)
                .collect::<Vec<_>>(),
        )
        .unwrap();
        let bra = Bra::basis(RegId::photon(Side::L), 2, 0);
        let p0 = hilbert::projection_weight(&to_density(&state), &bra).unwrap();
        let p1 = hilbert::projection_weight(&to_density(&rotated), &bra).unwrap();
        assert_relative_eq!(p0, p1, epsilon = 1e-12);
    }

    // Density-operator invariants under construction and mixing.
    let mut components = Vec::new();
    for _ in 0..4 {
        components.push(to_density(&random_state(&mut rng)));
    }
    for rho in &components {
        rho.validate().unwrap();
    }
    let mixed = mix(&[
        (0.1, components[0].clone()),
        (0.2, components[1].clone()),
        (0.3, components[2].clone()),
        (0.4, components[3].clone()),
    ])
    .unwrap();
    mixed.validate().unwrap();
    assert!(mixed.eigenvalues()[0] >= -1e-10);

    // Mixing is associative under flattening.
    let nested = mix(&[
        (
            0.3,
            mix(&[
                (1.0 / 3.0, components[0].clone()),
                (2.0 / 3.0, components[1].clone()),
            ])
            .unwrap(),
        ),
        (
            0.7,
            mix(&[
                (3.0 / 7.0, components[2].clone()),
                (4.0 / 7.0, components[3].clone()),
            ])
            .unwrap(),
        ),
    ])
    .unwrap();
    let flat = mix(&[
        (0.1, components[0].clone()),
        (0.2, components[1].clone()),
        (0.3, components[2].clone()),
        (0.4, components[3].clone()),
    ])
    .unwrap();
    let defect = (nested.matrix() - flat.matrix())
        .iter()
        .map(|z| z.norm())
        .fold(0.0, f64::max);
    assert!(defect <= 1e-12);

    // Dephasing composition: two applications equal one with coherence
    // factor (1-2p1)(1-2p2).
    let rho = to_density(&catalog::hybrid_bell(delta));
    for _ in 0..5 {
        let (p1, p2) = (rng.gen::<f64>(), rng.gen::<f64>());
        let twice = noise::apply_dephasing(
            &noise::apply_dephasing(&rho, RegId::atom(Side::R), p1).unwrap(),
            RegId::atom(Side::R),
            p2,
        )
        .unwrap();
        let p_eff = (1.0 - (1.0 - 2.0 * p1) * (1.0 - 2.0 * p2)) / 2.0;
        let once = noise::apply_dephasing(&rho, RegId::atom(Side::R), p_eff).unwrap();
        let defect = (twice.matrix() - once.matrix())
            .iter()
            .map(|z| z.norm())
            .fold(0.0, f64::max);
        assert!(defect <= 1e-12);
    }

    // Projection and partial trace commute on disjoint registers.
    let state = random_state(&mut rng);
    let joint = hilbert::tensor(
        &state,
        &make_pure(
            vec![catalog::ground_pair_atom(Side::L, 0.0)],
            &[Complex64::new(0.6, 0.0), Complex64::new(0.0, 0.8)],
        )
        .unwrap(),
    )
    .unwrap();
    let rho = to_density(&joint);
    let bra = Bra::new(
        vec![RegId::photon(Side::L)],
        vec![Complex64::new(0.6, 0.0), Complex64::new(0.0, 0.8)],
    );
    let (pa, projected) = hilbert::project(&rho, &bra).unwrap();
    let a = hilbert::partial_trace(&projected, RegId::atom(Side::L)).unwrap();
    let traced = hilbert::partial_trace(&rho, RegId::atom(Side::L)).unwrap();
    let (pb, b) = hilbert::project(&traced, &bra).unwrap();
    assert_relative_eq!(pa, pb, epsilon = 1e-12);
    let defect = (a.matrix() - b.matrix())
        .iter()
        .map(|z| z.norm())
        .fold(0.0, f64::max);
    assert!(defect <= 1e-12);

    let elapsed = start.elapsed();
    assert!(elapsed.as_secs_f64() < 60.0, "criterion 7 took {elapsed:?}");
    println!("criterion 7 (algebraic invariants): PASS in {elapsed:?}");
}
