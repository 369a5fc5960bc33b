//! Photon-number-selective slow light in a cavity-driven EIT medium.
//!
//! An ensemble of three-level Λ atoms is driven on the control leg by a
//! single quantized cavity mode instead of the usual classical control
//! laser. Because an `n`-photon cavity state drives the atoms with an
//! effective Rabi frequency `Ω_n = G·√(n+1)`, each photon-number sector of
//! the joint field sees its own transparency window and its own group
//! velocity: the medium delays an `n`-photon probe component by
//! `τ_n = OD·Γ / ((n+1)·G²)`, where `OD` is the optical depth and `Γ` the
//! excited-state decay rate. A pulse prepared in a superposition of photon
//! numbers therefore fans out into temporally separated components, and a
//! time gate on the output turns the medium into a photon-number filter.
//!
//! The crate is organised around that one effect:
//!
//! - [`params`] — validated physical inputs (medium, cavity, probe pulse)
//!   and the derived bulk quantities (absorption length, optical depth).
//! - [`analytic`] — closed-form group velocities, sector delays,
//!   transparency windows, and the operating-point feasibility gates.
//! - [`envelope`] / [`fft`] — sampled complex envelopes on uniform time
//!   grids, and the radix-2 FFT they are propagated with.
//! - [`spectral`] — the per-sector linear-response transfer function and
//!   frequency-domain pulse propagation.
//! - [`timedomain`] — a method-of-characteristics Maxwell–Bloch solver for
//!   a fixed photon sector or with the cavity occupation driven
//!   self-consistently by the probe flux.
//! - [`fock`] — assembly of the delayed Fock components into an output
//!   state, overlap/gate metrics, and time-gate optimisation.
//! - [`sweep`] — deterministic parameter sweeps over the quantities above.
//!
//! The crate is `no_std` (with `alloc`); all file formats, configuration
//! parsing and CLI plumbing live in the companion `cit-cli` crate.
//!
//! # Conventions
//!
//! - All rates and detunings are angular frequencies in rad/s; times are
//!   seconds, lengths metres.
//! - Envelopes are slowly-varying complex amplitudes; `δ` is the detuning
//!   of a spectral component from the probe carrier, with time dependence
//!   `e^{-iδt}` (the standard forward-DFT sign).
//! - Pulse "width" `T` is the Gaussian `exp(-t²/(2T²))` amplitude width;
//!   bandwidth comparisons use `Δω ≈ 1/T`.

#![cfg_attr(not(test), no_std)]
#![forbid(unsafe_code)]

extern crate alloc;

pub mod analytic;
pub mod envelope;
pub mod fft;
pub mod fock;
pub mod params;
pub mod spectral;
pub mod sweep;
pub mod timedomain;

pub use num_complex::Complex64;

/// Shorthand for the complex scalar used throughout.
pub type C64 = Complex64;
