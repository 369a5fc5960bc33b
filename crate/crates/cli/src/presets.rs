//! Shipped operating points, usable as whole configs or as defaults that
//! a config file overrides key by key (`preset = demo-feasible`).

use std::f64::consts::FRAC_1_SQRT_2;

use cit_core::C64;

use crate::config::{
    CavityConfig, FrequencyConvention, MediumConfig, NumericsConfig, PulseConfig, RunConfig,
    ShapeKind,
};

/// Preset names with one-line summaries, in listing order.
pub const SUMMARIES: [(&str, &str); 2] = [
    (
        "paper-2009",
        "proof-of-principle point: OD 10, G 10 MHz, gamma 3 MHz, kappa 1 MHz, T 100 ns",
    ),
    (
        "demo-feasible",
        "comfortable operating point: OD 400, kappa 10 kHz, T 1 us; passes every gate",
    ),
];

/// Look up a preset by name.
pub fn preset(name: &str) -> Option<RunConfig> {
    match name {
        "paper-2009" => Some(point(name, 10.0, 1e5, 1e6, 1e-7)),
        "demo-feasible" => Some(point(name, 400.0, 1e6, 1e4, 1e-6)),
        _ => None,
    }
}

fn point(name: &str, optical_depth: f64, atoms: f64, kappa: f64, width: f64) -> RunConfig {
    RunConfig {
        preset: Some(name.to_string()),
        medium: MediumConfig {
            optical_depth,
            gamma: 3e6,
            length: 1.0,
            atoms: Some(atoms),
        },
        cavity: CavityConfig {
            vacuum_rabi: 1e7,
            kappa,
            initial_photons: 0,
        },
        pulse: PulseConfig {
            shape: ShapeKind::Gaussian,
            width,
            amplitudes: vec![
                C64::new(0.0, 0.0),
                C64::new(FRAC_1_SQRT_2, 0.0),
                C64::new(FRAC_1_SQRT_2, 0.0),
            ],
            normalize: false,
        },
        numerics: NumericsConfig {
            convention: FrequencyConvention::Angular,
            oversample: 256,
            pad_factor: 4.0,
            z_cells: 0,
            snapshots: 32,
            duration: None,
        },
        sweep: None,
    }
}
