//! Acceptance criteria for the toolkit, one test per criterion.
//!
//! Each test pins the tolerances it was specified with and prints a single
//! `criterion N PASS — …` line (visible under `--nocapture`) carrying the
//! measured numbers. Tolerances here are contracts: loosening one is a
//! behaviour change, not a test fix.

use std::process::Command;

use cit_cli::config;
use cit_core::analytic::{
    differential_delay, feasibility, group_velocity, transit_delay, transparency_window,
    FeasibilityThresholds, Verdict,
};
use cit_core::envelope::{next_power_of_two, SampledEnvelope};
use cit_core::fock::{assemble, optimize_gate, Engine, GateRequest};
use cit_core::params::{CavitySpec, MediumSpec, NumericsSpec, ProbePulse, PulseShape, Scenario};
use cit_core::spectral::{
    measure_delay, measure_transmission, propagate, PropagateOptions, TransferSpec,
};
use cit_core::timedomain::{solve, SolveMode, TdOptions, TimeDomainResult};
use cit_core::C64;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn preset_scenario(name: &str) -> Scenario {
    config::parse(&format!("preset = {name}\n"))
        .expect("preset parses")
        .to_scenario()
        .expect("preset builds")
}

fn log_uniform(rng: &mut ChaCha8Rng, lo: f64, hi: f64) -> f64 {
    (rng.gen_range(lo.ln()..hi.ln())).exp()
}

// criterion 1 — preset delay values from the closed forms, 1e-12 relative

#[test]
fn criterion_1_preset_delay_formulas() {
    let scenario = preset_scenario("paper-2009");
    let medium = &scenario.medium;
    let cavity = &scenario.cavity;

    let tau0 = transit_delay(medium, cavity, 0);
    let tau1 = transit_delay(medium, cavity, 1);
    let dtau1 = differential_delay(medium, cavity, 1);

    assert!((tau0 - 3e-7).abs() <= 1e-12 * 3e-7, "tau0 = {tau0:e}");
    assert!((tau1 - 1.5e-7).abs() <= 1e-12 * 1.5e-7, "tau1 = {tau1:e}");
    assert!((dtau1 - 5e-8).abs() <= 1e-12 * 5e-8, "dtau1 = {dtau1:e}");
    println!(
        "criterion 1 PASS — paper-2009 delays: tau0 = {tau0:.3e} s, tau1 = {tau1:.3e} s, \
         dtau1 = {dtau1:.3e} s (all within 1e-12 relative)"
    );
}

// criterion 2 — telescoping and monotonicity over 1000 random parameter sets

#[test]
fn criterion_2_delay_invariants_randomized() {
    let mut rng = ChaCha8Rng::seed_from_u64(0x0acc_0002);
    for trial in 0..1000 {
        let od = log_uniform(&mut rng, 0.1, 1e4);
        let gamma = log_uniform(&mut rng, 1e3, 1e9);
        let length = log_uniform(&mut rng, 1e-3, 10.0);
        let g = log_uniform(&mut rng, 1e4, 1e9);
        let medium = MediumSpec::from_macroscopic(od, gamma, length).unwrap();
        let cavity = CavitySpec::new(g, 0.0, 0).unwrap();

        // telescoping: five consecutive gaps sum to the endpoint difference
        let n0: u32 = rng.gen_range(0..4);
        let sum: f64 = (n0..n0 + 5)
            .map(|m| differential_delay(&medium, &cavity, m))
            .sum();
        let direct =
            transit_delay(&medium, &cavity, n0) - transit_delay(&medium, &cavity, n0 + 5);
        let scale = transit_delay(&medium, &cavity, n0);
        assert!(
            (sum - direct).abs() <= 1e-12 * scale,
            "trial {trial}: telescoping off by {:e} of {scale:e}",
            (sum - direct).abs()
        );

        // monotonicity: delays fall, gaps shrink, velocities rise with n
        for n in 0..8 {
            assert!(
                transit_delay(&medium, &cavity, n) > transit_delay(&medium, &cavity, n + 1),
                "trial {trial}: tau not decreasing at n = {n}"
            );
            assert!(
                differential_delay(&medium, &cavity, n)
                    > differential_delay(&medium, &cavity, n + 1),
                "trial {trial}: dtau not decreasing at n = {n}"
            );
            assert!(
                group_velocity(&medium, &cavity, n) < group_velocity(&medium, &cavity, n + 1),
                "trial {trial}: v not increasing at n = {n}"
            );
        }
    }
    println!(
        "criterion 2 PASS — telescoping (M = 5) and monotonicity held on 1000 random \
         parameter sets at 1e-12 relative"
    );
}

// criterion 3 — transfer-function identities on random response specs

#[test]
fn criterion_3_transfer_function_identities() {
    let mut rng = ChaCha8Rng::seed_from_u64(0x0acc_0003);
    let mut worst_unity: f64 = 0.0;
    let mut worst_passivity: f64 = 0.0;
    for _ in 0..64 {
        let od = log_uniform(&mut rng, 0.1, 100.0);
        let gamma = log_uniform(&mut rng, 1e3, 1e9);
        let rabi = log_uniform(&mut rng, 1e3, 1e9);
        let length = log_uniform(&mut rng, 1e-2, 10.0);
        let c = 2.997_924_58e8;
        let collective = od * c * gamma / length;
        let spec = TransferSpec::from_raw(0, rabi, collective, length, gamma, c);
        let od = spec.optical_depth();

        // exact transparency on two-photon resonance
        let h0 = spec.transfer_function(0.0);
        let unity_err = (h0 - C64::new(1.0, 0.0)).norm();
        assert!(unity_err <= 1e-12, "H(0) off by {unity_err:e}");
        worst_unity = worst_unity.max(unity_err);

        // Autler–Townes dips: |H(±Omega)| = e^{-OD}
        for sign in [-1.0, 1.0] {
            let h = spec.transfer_function(sign * rabi).norm();
            let expected = (-od).exp();
            assert!(
                (h - expected).abs() <= 1e-10 * expected,
                "|H({sign:+}Omega)| = {h:e}, expected {expected:e}"
            );
        }

        // passivity on a 10^4-point detuning grid spanning the doublet
        for k in 0..10_000 {
            let delta = (k as f64 / 9_999.0 - 0.5) * 16.0 * rabi;
            let mag = spec.transfer_function(delta).norm();
            assert!(mag <= 1.0 + 1e-12, "|H({delta:e})| = {mag}");
            worst_passivity = worst_passivity.max(mag);
        }
    }
    println!(
        "criterion 3 PASS — 64 random responses: worst |H(0)-1| = {worst_unity:.2e}, \
         Autler–Townes depth at 1e-10 relative, worst |H| = {worst_passivity:.15} on 1e4-point grids"
    );
}

// criterion 4 — adiabatic oracle agreement on demo-feasible at T·window = 20

#[test]
fn criterion_4_adiabatic_delay_and_transmission() {
    // demo-feasible with the pulse widened until T·window(0) = 20
    let cfg = config::parse("preset = demo-feasible\n\n[pulse]\nwidth = 12 us\n").unwrap();
    let scenario = cfg.to_scenario().unwrap();
    let medium = &scenario.medium;
    let cavity = &scenario.cavity;
    let window = transparency_window(medium, cavity, 0).corrected;
    let product = scenario.pulse.width * window;
    assert!(
        (product - 20.0).abs() < 1e-9,
        "fixture drifted: T·window = {product}"
    );

    let input = scenario.input_envelope().unwrap();
    let vacuum_transit = medium.length / medium.light_speed;
    let mut measured_delays = Vec::new();
    for sector in 0..=2u32 {
        let spec = TransferSpec::new(medium, cavity, sector);
        let output = propagate(&spec, &input, &PropagateOptions::default()).unwrap();
        let tau = transit_delay(medium, cavity, sector);
        let measured = measure_delay(&input, &output, vacuum_transit).unwrap();
        assert!(
            (measured - tau).abs() <= 0.01 * tau,
            "sector {sector}: measured {measured:e} vs tau {tau:e}"
        );
        let transmission = measure_transmission(&input, &output).unwrap();
        assert!(
            transmission > 0.99,
            "sector {sector}: transmission {transmission}"
        );
        measured_delays.push((sector, measured, tau, transmission));
    }
    let summary: Vec<String> = measured_delays
        .iter()
        .map(|(n, m, t, tr)| format!("n={n}: {m:.4e}/{t:.4e} s, T={tr:.4}"))
        .collect();
    println!(
        "criterion 4 PASS — demo-feasible, T·window = 20: measured/predicted delays within 1% \
         and transmission > 0.99 ({})",
        summary.join("; ")
    );
}

// criterion 5 — time-domain output converges onto the spectral path

/// `OD = 30`, `Γ = 2`, `g²N = 60`, `G² = 6`, `L = c = 1`, `T = 3`: real
/// absorption and reshaping, so the waveforms must genuinely agree.
fn cross_toy() -> Scenario {
    let medium = MediumSpec::new(60.0_f64.sqrt(), 1.0, 1.0, 2.0)
        .unwrap()
        .with_light_speed(1.0)
        .unwrap();
    let cavity = CavitySpec::new(6.0_f64.sqrt(), 0.0, 0).unwrap();
    let pulse = ProbePulse::new(
        PulseShape::Gaussian,
        3.0,
        vec![C64::new(0.0, 0.0), C64::new(1.0, 0.0)],
    )
    .unwrap();
    Scenario::new(medium, cavity, pulse, NumericsSpec::default()).unwrap()
}

fn boundary_error_vs_spectral(scenario: &Scenario, result: &TimeDomainResult, sector: u32) -> f64 {
    let mut samples = result.boundary_input.clone();
    samples.resize(next_power_of_two(2 * result.record_len()), C64::new(0.0, 0.0));
    let input = SampledEnvelope::new(result.start_time, result.time_step, samples).unwrap();
    let spec = TransferSpec::new(&scenario.medium, &scenario.cavity, sector);
    let reference = propagate(&spec, &input, &PropagateOptions::default()).unwrap();
    let mut num = 0.0;
    let mut den = 0.0;
    for (a, b) in result.boundary_output.iter().zip(reference.samples()) {
        num += (a - b).norm_sqr();
        den += b.norm_sqr();
    }
    (num / den).sqrt()
}

#[test]
fn criterion_5_time_domain_matches_spectral() {
    let scenario = cross_toy();
    let run = |cells: usize| -> f64 {
        let result = solve(
            &scenario,
            SolveMode::FixedSector { sector: 1 },
            &TdOptions {
                z_cells: Some(cells),
                ..TdOptions::default()
            },
        )
        .unwrap();
        boundary_error_vs_spectral(&scenario, &result, 1)
    };
    let fine = run(512);
    let coarse = run(256);
    assert!(fine < 1e-3, "waveform error at 512 cells: {fine:e}");
    assert!(
        coarse >= 3.0 * fine,
        "halving the grid only grew the error from {fine:e} to {coarse:e}"
    );
    println!(
        "criterion 5 PASS — boundary waveform vs spectral path: L2 error {fine:.2e} at 512 \
         cells, {coarse:.2e} at 256 (ratio {:.2})",
        coarse / fine
    );
}

// criterion 6 — conservation audit and the dynamic-filling plateau

#[test]
fn criterion_6_conservation_and_filling_plateau() {
    // conservation on the absorbing cross-validation toy
    let scenario = cross_toy();
    let result = solve(
        &scenario,
        SolveMode::FixedSector { sector: 1 },
        &TdOptions {
            z_cells: Some(512),
            ..TdOptions::default()
        },
    )
    .unwrap();
    let audit = result.conservation_audit();
    assert!(audit.drift < 1e-4, "photon accounting drift {:e}", audit.drift);

    // dynamic filling: once the probe is fully inside a slow medium, the
    // cavity occupation equals the number of probe photons sent in
    let medium = MediumSpec::new(240.0, 1.0, 1.0, 1.0)
        .unwrap()
        .with_light_speed(1.0)
        .unwrap();
    let cavity = CavitySpec::new(480.0_f64.sqrt(), 0.0, 0).unwrap();
    let pulse = ProbePulse::new(
        PulseShape::Gaussian,
        5.0,
        vec![C64::new(0.0, 0.0), C64::new(1.0, 0.0)],
    )
    .unwrap();
    let slow = Scenario::new(medium, cavity, pulse, NumericsSpec::default()).unwrap();
    let photons_in = 2.0;
    let result = solve(
        &slow,
        SolveMode::DynamicFilling,
        &TdOptions {
            z_cells: Some(512),
            duration: Some(66.0),
            photons_in: Some(photons_in),
            ..TdOptions::default()
        },
    )
    .unwrap();
    let trace = result.cavity_occupation_trace().unwrap();
    let mut checked = 0usize;
    let mut worst: f64 = 0.0;
    for (k, n) in trace.iter().enumerate() {
        let t = result.time(k);
        if (16.0..=25.0).contains(&t) {
            worst = worst.max((n - photons_in).abs());
            checked += 1;
            assert!(
                (n - photons_in).abs() <= 0.02 * photons_in,
                "t = {t}: n_cav = {n}"
            );
        }
    }
    assert!(checked > 1000, "plateau window sampled {checked} points");
    println!(
        "criterion 6 PASS — audit drift {:.2e} photons; dynamic plateau holds n_cav = {photons_in} \
         to {:.3}% over t in [16, 25] ({checked} samples)",
        audit.drift,
        100.0 * worst / photons_in
    );
}

// criterion 7 — gate quality across the separation threshold

fn separation_scenario(optical_depth: f64) -> Scenario {
    let medium = MediumSpec::new(optical_depth.sqrt(), 1.0, 1.0, 1.0)
        .unwrap()
        .with_light_speed(1.0)
        .unwrap();
    let cavity = CavitySpec::new(1.0, 0.0, 0).unwrap();
    let amp = C64::new(std::f64::consts::FRAC_1_SQRT_2, 0.0);
    let pulse = ProbePulse::new(
        PulseShape::Gaussian,
        1.0,
        vec![C64::new(0.0, 0.0), amp, amp],
    )
    .unwrap();
    Scenario::new(medium, cavity, pulse, NumericsSpec::default()).unwrap()
}

#[test]
fn criterion_7_separation_sets_gate_purity() {
    let request = GateRequest {
        min_success: 0.9,
        target: 1,
        resolution: 256,
    };

    // dtau_1 / T = OD/6 = 4: the components are cleanly separated
    let separated = separation_scenario(24.0);
    let state = assemble(&separated, Engine::Analytic).unwrap();
    let (_, good) = optimize_gate(&state, &request).unwrap();
    assert!(good.purity > 0.99, "separated purity {}", good.purity);
    assert!(good.success > 0.9, "separated success {}", good.success);

    // dtau_1 / T = 0.5: overlapping components cap the purity
    let overlapping = separation_scenario(3.0);
    let state = assemble(&overlapping, Engine::Analytic).unwrap();
    let (_, poor) = optimize_gate(&state, &request).unwrap();
    assert!(poor.purity < 0.8, "overlapping purity {}", poor.purity);

    println!(
        "criterion 7 PASS — optimal gate at dtau1/T = 4: purity {:.5}, success {:.4}; \
         at dtau1/T = 0.5 purity collapses to {:.4}",
        good.purity, good.success, poor.purity
    );
}

// criterion 8 — adiabaticity bounds the separation, and the preset verdicts

#[test]
fn criterion_8_feasibility_chain() {
    let mut rng = ChaCha8Rng::seed_from_u64(0x0acc_0008);
    for trial in 0..500 {
        let od = log_uniform(&mut rng, 1.0, 1e4);
        let gamma = log_uniform(&mut rng, 1e3, 1e9);
        let length = log_uniform(&mut rng, 1e-3, 10.0);
        let g = log_uniform(&mut rng, 1e4, 1e9);
        let medium = MediumSpec::from_macroscopic(od, gamma, length).unwrap();
        let cavity = CavitySpec::new(g, 0.0, 0).unwrap();

        // choose T so that T·window(0) = u ≥ 1, i.e. the pulse honours
        // the corrected adiabaticity condition with headroom u
        let u = log_uniform(&mut rng, 1.0, 100.0);
        let window = transparency_window(&medium, &cavity, 0).corrected;
        let width = u / window;
        assert!(width * window >= 1.0 - 1e-12);

        // then the separation can never exceed sqrt(OD)/6
        let od = medium.derive().optical_depth;
        let ratio = differential_delay(&medium, &cavity, 1) / width;
        let bound = od.sqrt() / 6.0;
        assert!(
            ratio <= bound * (1.0 + 1e-12),
            "trial {trial}: dtau1/T = {ratio:e} exceeds sqrt(OD)/6 = {bound:e}"
        );
    }

    // the shipped operating points land on the documented verdicts
    let thresholds = FeasibilityThresholds::default();
    let paper = feasibility(&preset_scenario("paper-2009"), &thresholds);
    assert_eq!(paper.verdict, Verdict::Marginal, "paper-2009: {paper:?}");
    let demo = feasibility(&preset_scenario("demo-feasible"), &thresholds);
    assert_eq!(demo.verdict, Verdict::Feasible, "demo-feasible: {demo:?}");
    assert!(demo.all_satisfied());

    println!(
        "criterion 8 PASS — dtau1/T ≤ sqrt(OD)/6 held on 500 adiabatic draws; paper-2009 is \
         marginal (worst margin {:.3}), demo-feasible passes every gate (worst margin {:.3})",
        paper.worst_margin, demo.worst_margin
    );
}

// criterion 9 — sweeps are deterministic and parallel-order-independent

#[test]
fn criterion_9_sweep_determinism() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("sweep.cfg");
    std::fs::write(
        &cfg,
        "preset = demo-feasible\n\n\
         [sweep]\n\
         axis = optical_depth log 10 1000 25\n\
         engine = analytic\n\
         metrics = transit_delay, differential_delay, separation_ratio, worst_margin\n",
    )
    .unwrap();

    let run = |out: &str, serial: bool| -> String {
        let mut args = vec!["sweep", "--config", "sweep.cfg", "--out", out];
        if serial {
            args.push("--serial");
        }
        let output = Command::new(env!("CARGO_BIN_EXE_cit"))
            .args(&args)
            .current_dir(dir.path())
            .output()
            .expect("binary runs");
        assert!(
            output.status.success(),
            "stderr: {}",
            String::from_utf8_lossy(&output.stderr)
        );
        std::fs::read_to_string(dir.path().join(out).join("sweep.csv")).unwrap()
    };

    let parallel_a = run("a", false);
    let parallel_b = run("b", false);
    let serial = run("c", true);
    assert_eq!(parallel_a, parallel_b, "parallel runs differ");
    assert_eq!(parallel_a, serial, "serial and parallel runs differ");
    let rows = parallel_a.lines().count() - 1;
    assert_eq!(rows, 25);
    println!(
        "criterion 9 PASS — 25-point sweep CSV is byte-identical across two parallel runs and \
         one serial run ({} bytes)",
        parallel_a.len()
    );
}
