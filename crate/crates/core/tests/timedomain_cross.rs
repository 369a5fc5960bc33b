//! Cross-validation of the time-domain solver against the frequency-domain
//! path: the two solve the same linear response, so the time-domain output
//! must converge onto the spectral one as the grid refines, at second
//! order, with matching transmission and arrival observables.

use cit_core::envelope::{next_power_of_two, SampledEnvelope};
use cit_core::params::{CavitySpec, MediumSpec, NumericsSpec, ProbePulse, PulseShape, Scenario};
use cit_core::spectral::{propagate, PropagateOptions, TransferSpec};
use cit_core::timedomain::{solve, SolveMode, TdOptions, TimeDomainResult};
use cit_core::C64;

/// `OD = 30`, `Γ = 2`, `g²N = 60`, `G² = 6`, `L = c = 1`, `T = 3`:
/// `T·Δω ≈ 1.6`, so the pulse sees real absorption and reshaping — a
/// demanding waveform comparison, not just a delay check.
fn toy_scenario() -> Scenario {
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

/// Spectral prediction for the boundary output of `result`: the recorded
/// input is zero-padded to a power of two and pushed through the sector's
/// transfer function on the same time grid.
fn spectral_reference(scenario: &Scenario, result: &TimeDomainResult, sector: u32) -> Vec<C64> {
    let records = result.record_len();
    let mut samples = result.boundary_input.clone();
    samples.resize(next_power_of_two(2 * records), C64::new(0.0, 0.0));
    let input = SampledEnvelope::new(result.start_time, result.time_step, samples).unwrap();
    let spec = TransferSpec::new(&scenario.medium, &scenario.cavity, sector);
    let output = propagate(&spec, &input, &PropagateOptions::default()).unwrap();
    output.into_samples()
}

/// Relative l2 distance between the time-domain boundary record and the
/// spectral prediction over the recorded window.
fn boundary_l2_error(result: &TimeDomainResult, reference: &[C64]) -> f64 {
    let mut num = 0.0;
    let mut den = 0.0;
    for (a, b) in result.boundary_output.iter().zip(reference) {
        num += (a - b).norm_sqr();
        den += b.norm_sqr();
    }
    (num / den).sqrt()
}

#[test]
fn boundary_output_matches_spectral_path() {
    let scenario = toy_scenario();
    for sector in [0_u32, 1] {
        let result = solve(
            &scenario,
            SolveMode::FixedSector { sector },
            &TdOptions {
                z_cells: Some(512),
                ..TdOptions::default()
            },
        )
        .unwrap();
        let reference = spectral_reference(&scenario, &result, sector);
        let err = boundary_l2_error(&result, &reference);
        assert!(
            err < 2e-3,
            "sector {sector}: waveform error {err} against the spectral path"
        );

        // the integral observables must agree even more tightly
        let energy = |xs: &[C64]| xs.iter().map(|x| x.norm_sqr()).sum::<f64>();
        let centroid = |xs: &[C64]| {
            let mut num = 0.0;
            let mut den = 0.0;
            for (k, x) in xs.iter().enumerate() {
                num += k as f64 * x.norm_sqr();
                den += x.norm_sqr();
            }
            num / den * result.time_step
        };
        let trans_td = energy(&result.boundary_output) / energy(&result.boundary_input);
        let trans_sp =
            energy(&reference[..result.record_len()]) / energy(&result.boundary_input);
        assert!(
            (trans_td - trans_sp).abs() < 1e-3,
            "sector {sector}: transmission {trans_td} vs {trans_sp}"
        );
        let arrival_td = centroid(&result.boundary_output);
        let arrival_sp = centroid(&reference[..result.record_len()]);
        assert!(
            (arrival_td - arrival_sp).abs() < 0.01,
            "sector {sector}: arrival {arrival_td} vs {arrival_sp}"
        );
    }
}

#[test]
fn refinement_converges_at_second_order() {
    let scenario = toy_scenario();
    let mut errs = Vec::new();
    for nz in [64_usize, 128, 256] {
        let result = solve(
            &scenario,
            SolveMode::FixedSector { sector: 0 },
            &TdOptions {
                z_cells: Some(nz),
                ..TdOptions::default()
            },
        )
        .unwrap();
        let reference = spectral_reference(&scenario, &result, 0);
        errs.push(boundary_l2_error(&result, &reference));
    }
    for pair in errs.windows(2) {
        let ratio = pair[0] / pair[1];
        assert!(
            ratio > 3.2 && ratio < 5.0,
            "halving the step must quarter the error: errors {errs:?}"
        );
    }
}

#[test]
fn audit_transmission_matches_spectral_energy() {
    // the conservation audit's transmitted fraction is an independent
    // integral of the same record; anchor it against the spectral value
    let scenario = toy_scenario();
    let result = solve(
        &scenario,
        SolveMode::FixedSector { sector: 0 },
        &TdOptions {
            z_cells: Some(512),
            ..TdOptions::default()
        },
    )
    .unwrap();
    let audit = result.conservation_audit();
    let reference = spectral_reference(&scenario, &result, 0);
    let e_ref: f64 = reference[..result.record_len()]
        .iter()
        .map(|x| x.norm_sqr())
        .sum::<f64>()
        * result.time_step;
    assert!((audit.entered - 1.0).abs() < 1e-3);
    assert!(
        (audit.transmitted - e_ref).abs() < 2e-3,
        "audit transmitted {} vs spectral {e_ref}",
        audit.transmitted
    );
    assert!(audit.drift < 1e-4, "conservation drift {}", audit.drift);
}
