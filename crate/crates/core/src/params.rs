//! Validated physical inputs and derived bulk quantities.
//!
//! Three ingredient structs describe an operating point:
//!
//! - [`MediumSpec`] — the Λ-type atomic ensemble the probe traverses:
//!   probe coupling `g` per atom, atom number `N`, length `L`, excited-state
//!   decay `Γ`. The probe leg enters all observables only through the
//!   collective coupling `g²N`, summarised by [`DerivedMedium`].
//! - [`CavitySpec`] — the quantized control mode: vacuum Rabi frequency
//!   `G`, decay `κ`, and the initial photon occupation.
//! - [`ProbePulse`] — the input envelope shape, its width `T`, and the
//!   photon-number amplitudes `α_0..α_nmax` of the probe state.
//!
//! [`Scenario`] bundles the three with numerical controls and owns the
//! time-grid policy shared by the spectral and time-domain engines.

use alloc::vec::Vec;


use crate::envelope::{next_power_of_two, EnvelopeError, GridSpec, SampledEnvelope};
use crate::C64;

/// Vacuum light speed (m/s) used unless a scenario overrides it.
pub const LIGHT_SPEED: f64 = 2.997_924_58e8;

/// Atom number substituted when a medium is built from bulk observables
/// only; large enough that `√(n_p/N)` gates read as satisfied-by-default.
pub const SYNTHETIC_ATOM_COUNT: f64 = 1e12;

/// Hard cap on envelope grid sizes (2²² complex samples ≈ 64 MiB).
pub const MAX_GRID_LEN: usize = 1 << 22;

/// Validation errors for physical and numerical inputs.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ParamError {
    /// A quantity that must be strictly positive was not.
    #[error("{name} must be positive and finite, got {value}")]
    NotPositive {
        /// Parameter name as written in the spec struct.
        name: &'static str,
        /// Offending value.
        value: f64,
    },
    /// A quantity that must be finite and non-negative was not.
    #[error("{name} must be non-negative and finite, got {value}")]
    Negative {
        /// Parameter name.
        name: &'static str,
        /// Offending value.
        value: f64,
    },
    /// Fewer than one atom makes the collective coupling meaningless.
    #[error("atom_count must be at least 1, got {0}")]
    AtomCountTooSmall(f64),
    /// The photon-number amplitude list was empty.
    #[error("pulse needs at least one photon-number amplitude")]
    NoAmplitudes,
    /// An amplitude was NaN or infinite.
    #[error("pulse amplitude {index} is not finite")]
    AmplitudeNotFinite {
        /// Index into the amplitude list.
        index: usize,
    },
    /// Amplitudes must satisfy `Σ|α_n|² = 1`; use
    /// [`ProbePulse::normalized`] to normalise explicitly.
    #[error("pulse amplitudes are not normalised: Σ|α|² = {total}; normalisation is never implicit")]
    NotNormalized {
        /// The actual `Σ|α_n|²`.
        total: f64,
    },
    /// Normalisation was requested for an all-zero amplitude list.
    #[error("cannot normalise amplitudes with zero total weight")]
    ZeroWeight,
    /// A custom envelope must arrive with unit energy.
    #[error("custom pulse envelope must be unit energy, got {energy}")]
    CustomNotUnitEnergy {
        /// Discrete energy of the provided envelope.
        energy: f64,
    },
    /// `oversample` must be at least 1 sample per pulse width.
    #[error("numerics.oversample must be at least 1, got {0}")]
    BadOversample(u32),
    /// `pad_factor` must be at least 1.
    #[error("numerics.pad_factor must be at least 1, got {0}")]
    BadPadFactor(f64),
    /// At least two snapshots (start and end) are required.
    #[error("numerics.snapshots must be at least 2, got {0}")]
    BadSnapshots(u32),
    /// The grid policy produced an unreasonably large grid.
    #[error("time grid would need {needed} samples (cap {cap}); widen dt or reduce padding")]
    GridTooLarge {
        /// Samples the policy asked for.
        needed: usize,
        /// The [`MAX_GRID_LEN`] cap.
        cap: usize,
    },
    /// Envelope construction failed while realising the pulse.
    #[error(transparent)]
    Envelope(#[from] EnvelopeError),
}

/// The Λ-type ensemble the probe propagates through.
#[derive(Debug, Clone, PartialEq)]
pub struct MediumSpec {
    /// Single-atom probe coupling `g` (rad/s).
    pub coupling: f64,
    /// Number of atoms `N` in the probe path.
    pub atom_count: f64,
    /// Medium length `L` (m).
    pub length: f64,
    /// Excited-state decay rate `Γ` (rad/s).
    pub gamma: f64,
    /// Vacuum light speed (m/s); configurable only so unit-balanced toy
    /// scenarios can set `c = 1`.
    pub light_speed: f64,
    /// True when `atom_count` is the [`SYNTHETIC_ATOM_COUNT`] sentinel
    /// rather than a measured number; weak-probe gates then carry a note.
    pub synthetic_atom_count: bool,
}

impl MediumSpec {
    /// Build and validate a medium from microscopic inputs.
    pub fn new(coupling: f64, atom_count: f64, length: f64, gamma: f64) -> Result<Self, ParamError> {
        let spec = Self {
            coupling,
            atom_count,
            length,
            gamma,
            light_speed: LIGHT_SPEED,
            synthetic_atom_count: false,
        };
        spec.validate()?;
        Ok(spec)
    }

    /// Build a medium from bulk observables (optical depth, decay,
    /// length); the atom number is set to [`SYNTHETIC_ATOM_COUNT`] and the
    /// coupling back-solved so that `OD = g²N·L/(c·Γ)` reproduces the
    /// requested depth.
    pub fn from_macroscopic(optical_depth: f64, gamma: f64, length: f64) -> Result<Self, ParamError> {
        let mut spec = Self::from_macroscopic_with_atoms(
            optical_depth,
            gamma,
            length,
            SYNTHETIC_ATOM_COUNT,
        )?;
        spec.synthetic_atom_count = true;
        Ok(spec)
    }

    /// Like [`Self::from_macroscopic`] but with a known atom number, so
    /// weak-probe feasibility gates stay meaningful.
    pub fn from_macroscopic_with_atoms(
        optical_depth: f64,
        gamma: f64,
        length: f64,
        atom_count: f64,
    ) -> Result<Self, ParamError> {
        Self::from_macroscopic_at(optical_depth, gamma, length, atom_count, LIGHT_SPEED)
    }

    /// Back-solve the coupling for a requested optical depth at an explicit
    /// wave speed.  This is the constructor to use for unit-balanced toy
    /// media (`c = 1`): solving at the default speed and then calling
    /// [`Self::with_light_speed`] would rescale the depth instead of
    /// preserving it.
    pub fn from_macroscopic_at(
        optical_depth: f64,
        gamma: f64,
        length: f64,
        atom_count: f64,
        light_speed: f64,
    ) -> Result<Self, ParamError> {
        if !optical_depth.is_finite() || optical_depth <= 0.0 {
            return Err(ParamError::NotPositive {
                name: "optical_depth",
                value: optical_depth,
            });
        }
        if !atom_count.is_finite() || atom_count < 1.0 {
            return Err(ParamError::AtomCountTooSmall(atom_count));
        }
        if !gamma.is_finite() || gamma <= 0.0 {
            return Err(ParamError::NotPositive {
                name: "gamma",
                value: gamma,
            });
        }
        if !length.is_finite() || length <= 0.0 {
            return Err(ParamError::NotPositive {
                name: "length",
                value: length,
            });
        }
        if !light_speed.is_finite() || light_speed <= 0.0 {
            return Err(ParamError::NotPositive {
                name: "light_speed",
                value: light_speed,
            });
        }
        let collective = optical_depth * gamma * light_speed / length;
        let mut spec =
            Self::new((collective / atom_count).sqrt(), atom_count, length, gamma)?;
        spec.light_speed = light_speed;
        Ok(spec)
    }

    /// Replace the wave speed while keeping the microscopic parameters
    /// fixed.  Derived bulk quantities scale accordingly: the optical depth
    /// is proportional to `1/c`, so a medium built from a macroscopic depth
    /// keeps that depth only at the speed it was solved for (see
    /// [`Self::from_macroscopic_at`]).
    pub fn with_light_speed(mut self, light_speed: f64) -> Result<Self, ParamError> {
        self.light_speed = light_speed;
        self.validate()?;
        Ok(self)
    }

    fn validate(&self) -> Result<(), ParamError> {
        for (name, value) in [
            ("coupling", self.coupling),
            ("length", self.length),
            ("gamma", self.gamma),
            ("light_speed", self.light_speed),
        ] {
            if !value.is_finite() || value <= 0.0 {
                return Err(ParamError::NotPositive { name, value });
            }
        }
        if !self.atom_count.is_finite() || self.atom_count < 1.0 {
            return Err(ParamError::AtomCountTooSmall(self.atom_count));
        }
        Ok(())
    }

    /// Bulk quantities derived from the microscopic inputs.
    pub fn derive(&self) -> DerivedMedium {
        let collective_coupling = self.coupling * self.coupling * self.atom_count;
        let absorption_length = self.light_speed * self.gamma / collective_coupling;
        DerivedMedium {
            collective_coupling,
            absorption_length,
            optical_depth: self.length / absorption_length,
        }
    }
}

/// Bulk observables of a [`MediumSpec`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DerivedMedium {
    /// Collective coupling `g²N` (rad²/s²).
    pub collective_coupling: f64,
    /// Resonant absorption length `l_abs = c·Γ/(g²N)` (m).
    pub absorption_length: f64,
    /// Optical depth `OD = L/l_abs` (dimensionless).
    pub optical_depth: f64,
}

/// The quantized control mode.
#[derive(Debug, Clone, PartialEq)]
pub struct CavitySpec {
    /// Vacuum Rabi frequency `G` (rad/s); the `n`-photon sector is driven
    /// at `Ω_n = G·√(n+1)`.
    pub vacuum_rabi: f64,
    /// Cavity field decay rate `κ` (rad/s); `0` models an ideal cavity.
    pub kappa: f64,
    /// Photons already in the cavity before the probe arrives.
    pub initial_photons: u32,
}

impl CavitySpec {
    /// Build and validate a cavity description.
    pub fn new(vacuum_rabi: f64, kappa: f64, initial_photons: u32) -> Result<Self, ParamError> {
        if !vacuum_rabi.is_finite() || vacuum_rabi <= 0.0 {
            return Err(ParamError::NotPositive {
                name: "vacuum_rabi",
                value: vacuum_rabi,
            });
        }
        if !kappa.is_finite() || kappa < 0.0 {
            return Err(ParamError::Negative {
                name: "kappa",
                value: kappa,
            });
        }
        Ok(Self {
            vacuum_rabi,
            kappa,
            initial_photons,
        })
    }

    /// Effective Rabi frequency `Ω_n = G·√(n+1)` of photon sector `n`.
    pub fn sector_rabi(&self, sector: u32) -> f64 {
        self.vacuum_rabi * (sector as f64 + 1.0).sqrt()
    }
}

/// Analytic pulse families, or caller-supplied samples.
#[derive(Debug, Clone, PartialEq)]
pub enum PulseShape {
    /// `exp(-t²/(2T²))` amplitude profile.
    Gaussian,
    /// `sech(t/T)` amplitude profile.
    Sech,
    /// A unit-energy envelope on its own grid; the scenario adopts that
    /// grid unchanged.
    Custom(SampledEnvelope),
}

/// The probe input: envelope shape plus photon-number content.
#[derive(Debug, Clone, PartialEq)]
pub struct ProbePulse {
    /// Envelope family.
    pub shape: PulseShape,
    /// Width parameter `T` (s); bandwidth comparisons use `Δω ≈ 1/T`.
    pub width: f64,
    /// Photon-number amplitudes `α_0..α_nmax` with `Σ|α_n|² = 1`.
    pub amplitudes: Vec<C64>,
}

impl ProbePulse {
    /// Build a pulse, requiring amplitudes normalised to `1` within
    /// `1e-12`; normalisation is never applied implicitly.
    pub fn new(shape: PulseShape, width: f64, amplitudes: Vec<C64>) -> Result<Self, ParamError> {
        if !width.is_finite() || width <= 0.0 {
            return Err(ParamError::NotPositive {
                name: "width",
                value: width,
            });
        }
        if amplitudes.is_empty() {
            return Err(ParamError::NoAmplitudes);
        }
        for (index, a) in amplitudes.iter().enumerate() {
            if !a.re.is_finite() || !a.im.is_finite() {
                return Err(ParamError::AmplitudeNotFinite { index });
            }
        }
        let total: f64 = amplitudes.iter().map(|a| a.norm_sqr()).sum();
        if (total - 1.0).abs() > 1e-12 {
            return Err(ParamError::NotNormalized { total });
        }
        if let PulseShape::Custom(env) = &shape {
            let energy = env.energy();
            if (energy - 1.0).abs() > 1e-9 {
                return Err(ParamError::CustomNotUnitEnergy { energy });
            }
        }
        Ok(Self {
            shape,
            width,
            amplitudes,
        })
    }

    /// Build a pulse after explicitly rescaling the amplitudes to
    /// `Σ|α_n|² = 1`.
    pub fn normalized(
        shape: PulseShape,
        width: f64,
        amplitudes: Vec<C64>,
    ) -> Result<Self, ParamError> {
        let total: f64 = amplitudes.iter().map(|a| a.norm_sqr()).sum();
        if total <= 0.0 || !total.is_finite() {
            return Err(ParamError::ZeroWeight);
        }
        let scale = 1.0 / total.sqrt();
        let mut scaled: Vec<C64> = amplitudes.iter().map(|&a| a * scale).collect();
        // nudge the dominant term so the sum is exactly 1 within 1e-12
        let new_total: f64 = scaled.iter().map(|a| a.norm_sqr()).sum();
        if (new_total - 1.0).abs() > 1e-13 {
            let correction = (1.0 / new_total).sqrt();
            for a in &mut scaled {
                *a *= correction;
            }
        }
        Self::new(shape, width, scaled)
    }

    /// Highest photon number carried by the pulse.
    pub fn n_max(&self) -> u32 {
        (self.amplitudes.len() - 1) as u32
    }

    /// Amplitude `α_n` (zero outside the stored range).
    pub fn amplitude(&self, n: u32) -> C64 {
        self.amplitudes
            .get(n as usize)
            .copied()
            .unwrap_or(C64::new(0.0, 0.0))
    }

    /// Mean photon number `Σ n·|α_n|²`.
    pub fn mean_photons(&self) -> f64 {
        self.amplitudes
            .iter()
            .enumerate()
            .map(|(n, a)| n as f64 * a.norm_sqr())
            .sum()
    }
}

/// Numerical controls shared by the propagation engines.
#[derive(Debug, Clone, PartialEq)]
pub struct NumericsSpec {
    /// Envelope samples per pulse width `T` (grid spacing `Δt = T/oversample`).
    pub oversample: u32,
    /// Multiplier on the base time span before rounding the sample count
    /// up to a power of two; absorbs the sector delays plus pulse tails.
    pub pad_factor: f64,
    /// Spatial cells for the time-domain solver; `0` picks a stable
    /// default from the collective coupling.
    pub z_cells: u32,
    /// Field snapshots recorded across a time-domain run.
    pub snapshots: u32,
    /// Explicit time-domain run duration (s); `None` derives one from the
    /// slowest sector delay.
    pub duration: Option<f64>,
}

impl Default for NumericsSpec {
    fn default() -> Self {
        Self {
            oversample: 256,
            pad_factor: 4.0,
            z_cells: 0,
            snapshots: 32,
            duration: None,
        }
    }
}

impl NumericsSpec {
    fn validate(&self) -> Result<(), ParamError> {
        if self.oversample < 1 {
            return Err(ParamError::BadOversample(self.oversample));
        }
        if !self.pad_factor.is_finite() || self.pad_factor < 1.0 {
            return Err(ParamError::BadPadFactor(self.pad_factor));
        }
        if self.snapshots < 2 {
            return Err(ParamError::BadSnapshots(self.snapshots));
        }
        if let Some(d) = self.duration {
            if !d.is_finite() || d <= 0.0 {
                return Err(ParamError::NotPositive {
                    name: "duration",
                    value: d,
                });
            }
        }
        Ok(())
    }
}

/// A complete, validated operating point.
#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    /// The atomic medium.
    pub medium: MediumSpec,
    /// The control cavity.
    pub cavity: CavitySpec,
    /// The probe input.
    pub pulse: ProbePulse,
    /// Numerical controls.
    pub numerics: NumericsSpec,
}

impl Scenario {
    /// Bundle and cross-validate the ingredients.
    pub fn new(
        medium: MediumSpec,
        cavity: CavitySpec,
        pulse: ProbePulse,
        numerics: NumericsSpec,
    ) -> Result<Self, ParamError> {
        numerics.validate()?;
        let scenario = Self {
            medium,
            cavity,
            pulse,
            numerics,
        };
        // fail configuration-time rather than propagate-time if the grid
        // policy cannot produce a representable grid
        scenario.grid()?;
        Ok(scenario)
    }

    /// Cavity photon sector occupied while probe component `n` transits:
    /// the initial occupation plus the component's own photons.
    pub fn sector_of_component(&self, n: u32) -> u32 {
        self.cavity.initial_photons + n
    }

    /// The shared envelope grid.
    ///
    /// Custom pulses keep their own grid. For analytic families the grid
    /// spans `pad_factor · max(16T, 2·(L/c + τ_slow + T))` at spacing
    /// `T/oversample`, starts `8T` before the pulse centre (`t = 0`), and
    /// rounds the sample count up to a power of two so the spectral
    /// propagator can use it directly. `τ_slow` is the slowest sector
    /// delay the scenario can exhibit (the initial cavity occupation).
    pub fn grid(&self) -> Result<GridSpec, ParamError> {
        if let PulseShape::Custom(env) = &self.pulse.shape {
            return Ok(env.grid());
        }
        let t = self.pulse.width;
        let step = t / self.numerics.oversample as f64;
        let transit = self.medium.length / self.medium.light_speed;
        // slowest sector delay: τ = OD·Γ/Ω² at the initial occupation
        // (matches analytic::transit_delay)
        let derived = self.medium.derive();
        let rabi = self.cavity.sector_rabi(self.cavity.initial_photons);
        let tau_slow = derived.optical_depth * self.medium.gamma / (rabi * rabi);
        let base = (16.0 * t).max(2.0 * (transit + tau_slow + t));
        let span = self.numerics.pad_factor * base;
        let needed = (span / step).ceil() as usize;
        let len = next_power_of_two(needed);
        if len > MAX_GRID_LEN {
            return Err(ParamError::GridTooLarge {
                needed: len,
                cap: MAX_GRID_LEN,
            });
        }
        Ok(GridSpec {
            start: -8.0 * t,
            step,
            len,
        })
    }

    /// The unit-energy input envelope realised on [`Self::grid`], centred
    /// at `t = 0` for the analytic families.
    pub fn input_envelope(&self) -> Result<SampledEnvelope, ParamError> {
        let grid = self.grid()?;
        let env = match &self.pulse.shape {
            PulseShape::Gaussian => SampledEnvelope::gaussian(grid, 0.0, self.pulse.width)?,
            PulseShape::Sech => SampledEnvelope::sech(grid, 0.0, self.pulse.width)?,
            PulseShape::Custom(env) => env.clone(),
        };
        Ok(env)
    }
}
