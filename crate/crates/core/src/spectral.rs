//! Per-sector linear response and frequency-domain pulse propagation.
//!
//! A probe component locked to photon sector `n` sees the medium as a
//! linear filter. With detuning `δ` from the probe carrier (time
//! convention `e^{-iδt}`), the end-to-end transfer function over length
//! `L` is
//!
//! ```text
//! H_n(δ) = exp(-iδL/c) · exp( -(g²N·L/c) · δ / (δΓ - i(Ω_n² - δ²)) ),
//! ```
//!
//! whose real exponent `-(g²N·L/c)·δ²Γ/|δΓ - i(Ω_n²-δ²)|²` is never
//! positive — the medium is passive at every detuning. On resonance
//! `H_n(0) = 1` (ideal transparency), at the Autler–Townes peaks
//! `δ = ±Ω_n` the intensity is suppressed to `e^{-2·OD}`, and the phase
//! slope at the origin reproduces the sector delay:
//! `-d(arg H)/dδ|₀ = L/c + OD·Γ/Ω_n²`.
//!
//! [`propagate`] applies `H_n` bin-by-bin on the FFT of a sampled
//! envelope. Two failure modes are checked before touching the data: the
//! envelope spectrum must sit safely inside the grid's Nyquist range, and
//! the delayed pulse must still fit inside the padded window (a cyclic
//! convolution would otherwise wrap it around).


use crate::envelope::{EnvelopeError, SampledEnvelope};
use crate::fft::{fft_in_place, frequencies, ifft_in_place};
use crate::params::{CavitySpec, MediumSpec};
use crate::C64;

/// Fraction of the sampling bandwidth `2π/Δt` the input spectrum must
/// stay within (0.4 leaves a 20% guard band below Nyquist).
pub const NYQUIST_FRACTION: f64 = 0.4;
/// Spectral energy fraction required inside that band.
pub const ALIAS_ENERGY_FRACTION: f64 = 0.9999;
/// Energy quantile that must land inside the window after the predicted
/// delay.
pub const TAIL_QUANTILE: f64 = 0.9999;

/// Errors from frequency-domain propagation.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum SpectralError {
    /// The FFT path needs a power-of-two sample count.
    #[error("spectral propagation needs a power-of-two sample count, got {len}")]
    NonPowerOfTwo {
        /// Actual envelope length.
        len: usize,
    },
    /// The envelope is not resolved by its own grid: too much spectral
    /// energy sits near or beyond Nyquist.
    #[error(
        "aliasing: only {contained:.6} of the spectral energy lies within \
         {NYQUIST_FRACTION} of the sampling bandwidth (need {required}); refine the time step"
    )]
    Aliasing {
        /// Energy fraction found inside the guard band.
        contained: f64,
        /// Required fraction ([`ALIAS_ENERGY_FRACTION`]).
        required: f64,
    },
    /// The delayed pulse would run off (and wrap around) the padded grid.
    #[error(
        "window overflow: delayed tail reaches t = {needed:.6e} s but the grid ends at \
         {available:.6e} s; enlarge the padding"
    )]
    WindowOverflow {
        /// Predicted arrival of the trailing energy quantile.
        needed: f64,
        /// Last grid time.
        available: f64,
    },
    /// Envelope bookkeeping failed (zero energy, grid mismatch, ...).
    #[error(transparent)]
    Envelope(#[from] EnvelopeError),
}

/// Frequency-domain description of one photon sector of the medium.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TransferSpec {
    /// Photon sector `n` this response belongs to.
    pub sector: u32,
    /// Effective control Rabi frequency `Ω_n = G·√(n+1)` (rad/s).
    pub rabi: f64,
    /// Collective probe coupling `g²N` (rad²/s²).
    pub collective: f64,
    /// Medium length `L` (m).
    pub length: f64,
    /// Excited-state decay `Γ` (rad/s).
    pub gamma: f64,
    /// Vacuum light speed (m/s).
    pub light_speed: f64,
}

impl TransferSpec {
    /// Response of photon sector `sector` for a validated medium/cavity
    /// pair.
    pub fn new(medium: &MediumSpec, cavity: &CavitySpec, sector: u32) -> Self {
        Self {
            sector,
            rabi: cavity.sector_rabi(sector),
            collective: medium.derive().collective_coupling,
            length: medium.length,
            gamma: medium.gamma,
            light_speed: medium.light_speed,
        }
    }

    /// Build directly from raw parameters. Unlike [`MediumSpec`], a zero
    /// `length` or `collective` is allowed here (identity response), which
    /// is useful for degenerate-limit tests.
    pub fn from_raw(
        sector: u32,
        rabi: f64,
        collective: f64,
        length: f64,
        gamma: f64,
        light_speed: f64,
    ) -> Self {
        Self {
            sector,
            rabi,
            collective,
            length,
            gamma,
            light_speed,
        }
    }

    /// Optical depth `OD = g²N·L/(c·Γ)` seen by this response.
    pub fn optical_depth(&self) -> f64 {
        self.collective * self.length / (self.light_speed * self.gamma)
    }

    /// Predicted arrival delay of a narrowband pulse: vacuum transit plus
    /// the sector delay, `L/c + OD·Γ/Ω²`.
    pub fn predicted_delay(&self) -> f64 {
        self.length / self.light_speed
            + crate::analytic::transit_delay_from_depth(self.optical_depth(), self.gamma, self.rabi)
    }

    /// Evaluate `H_n(δ)`.
    ///
    /// The expression is numerically benign for every real `δ`: the
    /// denominator `δΓ - i(Ω² - δ²)` separates real and imaginary parts,
    /// so `|den|² = δ²Γ² + (Ω²-δ²)²` never suffers cancellation, and
    /// `δ → 0` smoothly reaches `H(0) = 1` exactly (zero numerator).
    pub fn transfer_function(&self, delta: f64) -> C64 {
        let strength = self.collective * self.length / self.light_speed; // = OD·Γ
        let den = C64::new(delta * self.gamma, -(self.rabi * self.rabi - delta * delta));
        let exponent = if strength == 0.0 {
            C64::new(0.0, 0.0)
        } else {
            -strength * delta / den
        };
        let vacuum_phase = C64::new(0.0, -delta * self.length / self.light_speed);
        (exponent + vacuum_phase).exp()
    }
}

/// Options for [`propagate`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PropagateOptions {
    /// Angular offset added to every bin's detuning before evaluating the
    /// transfer function; models an input carrier shifted by this amount
    /// from the EIT resonance.
    pub carrier_offset: f64,
}

impl Default for PropagateOptions {
    fn default() -> Self {
        Self {
            carrier_offset: 0.0,
        }
    }
}

/// Push an envelope through one sector of the medium in the frequency
/// domain.
///
/// Checks, in order: power-of-two grid; the spectrum is contained within
/// [`NYQUIST_FRACTION`] of Nyquist (else [`SpectralError::Aliasing`]); the
/// [`TAIL_QUANTILE`] of the input energy, delayed by the predicted sector
/// arrival, still lands inside the grid (else
/// [`SpectralError::WindowOverflow`]).
pub fn propagate(
    spec: &TransferSpec,
    input: &SampledEnvelope,
    options: &PropagateOptions,
) -> Result<SampledEnvelope, SpectralError> {
    let grid = input.grid();
    if !grid.is_power_of_two() {
        return Err(SpectralError::NonPowerOfTwo { len: grid.len });
    }

    let mut spectrum: alloc::vec::Vec<C64> = input.samples().to_vec();
    fft_in_place(&mut spectrum);
    let freqs = frequencies(grid.len, grid.step);

    // aliasing guard: the band |δ| ≤ 0.4·(2π/Δt) covers 80% of the
    // representable range; demand the spectral energy lives there
    let bound = NYQUIST_FRACTION * core::f64::consts::TAU / grid.step;
    let mut total = 0.0;
    let mut contained = 0.0;
    for (x, &f) in spectrum.iter().zip(&freqs) {
        let e = x.norm_sqr();
        total += e;
        if f.abs() <= bound {
            contained += e;
        }
    }
    if total <= 0.0 {
        return Err(SpectralError::Envelope(EnvelopeError::ZeroEnergy));
    }
    let fraction = contained / total;
    if fraction < ALIAS_ENERGY_FRACTION {
        return Err(SpectralError::Aliasing {
            contained: fraction,
            required: ALIAS_ENERGY_FRACTION,
        });
    }

    // wrap-around guard: the delayed tail must stay inside the window
    let tail = input.energy_quantile(TAIL_QUANTILE)?;
    let needed = tail + spec.predicted_delay();
    if needed > grid.end() {
        return Err(SpectralError::WindowOverflow {
            needed,
            available: grid.end(),
        });
    }

    for (x, &f) in spectrum.iter_mut().zip(&freqs) {
        *x *= spec.transfer_function(f + options.carrier_offset);
    }
    ifft_in_place(&mut spectrum);

    Ok(SampledEnvelope::new(grid.start, grid.step, spectrum)?)
}

/// Medium-induced arrival delay: the centroid shift between `output` and
/// `input`, minus the vacuum transit time `L/c` of the traversed medium.
pub fn measure_delay(
    input: &SampledEnvelope,
    output: &SampledEnvelope,
    vacuum_transit: f64,
) -> Result<f64, EnvelopeError> {
    Ok(centroid_shift(input, output)? - vacuum_transit)
}

/// Raw centroid shift `⟨t⟩_out − ⟨t⟩_in` (includes any vacuum transit).
pub fn centroid_shift(
    input: &SampledEnvelope,
    output: &SampledEnvelope,
) -> Result<f64, EnvelopeError> {
    Ok(output.centroid()? - input.centroid()?)
}

/// Energy transmission `‖output‖²/‖input‖²`.
pub fn measure_transmission(
    input: &SampledEnvelope,
    output: &SampledEnvelope,
) -> Result<f64, EnvelopeError> {
    let e_in = input.energy();
    if e_in <= 0.0 {
        return Err(EnvelopeError::ZeroEnergy);
    }
    Ok(output.energy() / e_in)
}
