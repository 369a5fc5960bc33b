//! Sampled complex pulse envelopes on uniform time grids.
//!
//! Every propagation path in the crate (analytic shifting, spectral
//! filtering, time-domain integration) exchanges data through
//! [`SampledEnvelope`]: a slowly-varying complex amplitude sampled at
//! uniform spacing. Energies are discrete sums `Σ |f_i|²·Δt`, so a
//! unit-energy envelope integrates to one photon when scaled by a photon
//! number elsewhere.
//!
//! Grids are described by [`GridSpec`]. The spectral propagator requires a
//! power-of-two sample count (see [`crate::spectral`]); envelopes recorded
//! by the time-domain solver are free to have any length, so the
//! power-of-two requirement is enforced at the point of use rather than at
//! construction.

use alloc::string::String;
use alloc::vec::Vec;


use crate::C64;

/// Errors from envelope construction and grid-aligned arithmetic.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum EnvelopeError {
    /// The sample spacing must be a positive, finite number of seconds.
    #[error("sample spacing must be positive and finite, got {0}")]
    BadStep(f64),
    /// The grid start time must be finite.
    #[error("grid start time must be finite, got {0}")]
    BadStart(f64),
    /// At least one sample is required.
    #[error("envelope must contain at least one sample")]
    Empty,
    /// A sample was NaN or infinite.
    #[error("sample {index} is not finite")]
    NonFinite {
        /// Index of the offending sample.
        index: usize,
    },
    /// Two envelopes were combined but live on different grids.
    #[error("envelope grids differ: {0}")]
    GridMismatch(String),
    /// An operation needed nonzero energy (centroid, normalisation).
    #[error("envelope carries no energy")]
    ZeroEnergy,
}

/// A uniform time grid: `t_i = start + i·step` for `i = 0..len`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridSpec {
    /// Time of the first sample (s).
    pub start: f64,
    /// Sample spacing (s).
    pub step: f64,
    /// Number of samples.
    pub len: usize,
}

impl GridSpec {
    /// Time of sample `i`.
    pub fn time(&self, i: usize) -> f64 {
        self.start + self.step * i as f64
    }

    /// Time of the last sample.
    pub fn end(&self) -> f64 {
        self.time(self.len.saturating_sub(1))
    }

    /// Total spanned duration (s).
    pub fn span(&self) -> f64 {
        self.step * self.len.saturating_sub(1) as f64
    }

    /// Whether the sample count is a power of two.
    pub fn is_power_of_two(&self) -> bool {
        self.len.is_power_of_two()
    }

    /// Index of the grid point nearest to `t`, clamped to the grid.
    pub fn nearest_index(&self, t: f64) -> usize {
        if self.len == 0 {
            return 0;
        }
        let raw = (t - self.start) / self.step;
        if raw <= 0.0 {
            0
        } else {
            (raw + 0.5).floor().min((self.len - 1) as f64) as usize
        }
    }
}

/// Round `n` up to the next power of two (at least 1).
pub fn next_power_of_two(n: usize) -> usize {
    n.max(1).next_power_of_two()
}

/// A complex envelope sampled on a [`GridSpec`].
#[derive(Debug, Clone, PartialEq)]
pub struct SampledEnvelope {
    grid: GridSpec,
    samples: Vec<C64>,
}

impl SampledEnvelope {
    /// Wrap raw samples, validating the grid and sample finiteness.
    pub fn new(start: f64, step: f64, samples: Vec<C64>) -> Result<Self, EnvelopeError> {
        if !step.is_finite() || step <= 0.0 {
            return Err(EnvelopeError::BadStep(step));
        }
        if !start.is_finite() {
            return Err(EnvelopeError::BadStart(start));
        }
        if samples.is_empty() {
            return Err(EnvelopeError::Empty);
        }
        for (index, s) in samples.iter().enumerate() {
            if !s.re.is_finite() || !s.im.is_finite() {
                return Err(EnvelopeError::NonFinite { index });
            }
        }
        let grid = GridSpec {
            start,
            step,
            len: samples.len(),
        };
        Ok(Self { grid, samples })
    }

    /// Evaluate `f(t)` on a grid.
    pub fn from_fn(grid: GridSpec, f: impl Fn(f64) -> C64) -> Result<Self, EnvelopeError> {
        let samples = (0..grid.len).map(|i| f(grid.time(i))).collect();
        Self::new(grid.start, grid.step, samples)
    }

    /// Unit-energy Gaussian `exp(-(t-center)²/(2·width²))`, normalised
    /// discretely so that [`Self::energy`] is exactly 1.
    pub fn gaussian(grid: GridSpec, center: f64, width: f64) -> Result<Self, EnvelopeError> {
        let env = Self::from_fn(grid, |t| {
            let u = (t - center) / width;
            C64::new((-0.5 * u * u).exp(), 0.0)
        })?;
        env.normalized()
    }

    /// Unit-energy hyperbolic secant `sech((t-center)/width)`.
    pub fn sech(grid: GridSpec, center: f64, width: f64) -> Result<Self, EnvelopeError> {
        let env = Self::from_fn(grid, |t| {
            let u = (t - center) / width;
            // decaying-exponential form of sech: never overflows, and
            // underflows cleanly to zero in the far tails
            let e = (-u.abs()).exp();
            C64::new(2.0 * e / (1.0 + e * e), 0.0)
        })?;
        env.normalized()
    }

    /// The grid this envelope is sampled on.
    pub fn grid(&self) -> GridSpec {
        self.grid
    }

    /// Time of the first sample (s).
    pub fn start(&self) -> f64 {
        self.grid.start
    }

    /// Sample spacing (s).
    pub fn step(&self) -> f64 {
        self.grid.step
    }

    /// Number of samples.
    pub fn len(&self) -> usize {
        self.samples.len()
    }

    /// True when the envelope holds no samples (never, by construction).
    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    /// Borrow the samples.
    pub fn samples(&self) -> &[C64] {
        &self.samples
    }

    /// Consume into the raw sample vector.
    pub fn into_samples(self) -> Vec<C64> {
        self.samples
    }

    /// Iterator over `(t_i, f_i)` pairs.
    pub fn iter(&self) -> impl Iterator<Item = (f64, C64)> + '_ {
        self.samples
            .iter()
            .enumerate()
            .map(|(i, &s)| (self.grid.time(i), s))
    }

    /// Discrete energy `Σ |f_i|²·Δt`.
    pub fn energy(&self) -> f64 {
        self.samples.iter().map(|s| s.norm_sqr()).sum::<f64>() * self.grid.step
    }

    /// Largest sample magnitude.
    pub fn max_abs(&self) -> f64 {
        self.samples.iter().map(|s| s.norm()).fold(0.0, f64::max)
    }

    /// Energy-weighted mean arrival time `Σ t_i·|f_i|² / Σ |f_i|²`.
    pub fn centroid(&self) -> Result<f64, EnvelopeError> {
        let mut wsum = 0.0;
        let mut tsum = 0.0;
        for (t, s) in self.iter() {
            let w = s.norm_sqr();
            wsum += w;
            tsum += w * t;
        }
        if wsum <= 0.0 {
            return Err(EnvelopeError::ZeroEnergy);
        }
        Ok(tsum / wsum)
    }

    /// Energy carried by samples with `a <= t_i <= b`.
    pub fn energy_in(&self, a: f64, b: f64) -> f64 {
        self.iter()
            .filter(|(t, _)| *t >= a && *t <= b)
            .map(|(_, s)| s.norm_sqr())
            .sum::<f64>()
            * self.grid.step
    }

    /// Running energy: element `i` is the energy of samples `0..=i`.
    pub fn cumulative_energy(&self) -> Vec<f64> {
        let mut acc = 0.0;
        self.samples
            .iter()
            .map(|s| {
                acc += s.norm_sqr() * self.grid.step;
                acc
            })
            .collect()
    }

    /// Earliest time by which `fraction` of the total energy has arrived.
    pub fn energy_quantile(&self, fraction: f64) -> Result<f64, EnvelopeError> {
        let cumulative = self.cumulative_energy();
        let total = *cumulative.last().expect("envelope is never empty");
        if total <= 0.0 {
            return Err(EnvelopeError::ZeroEnergy);
        }
        let target = fraction.clamp(0.0, 1.0) * total;
        let idx = cumulative
            .iter()
            .position(|&e| e >= target)
            .unwrap_or(self.samples.len() - 1);
        Ok(self.grid.time(idx))
    }

    /// Rescale to unit energy.
    pub fn normalized(&self) -> Result<Self, EnvelopeError> {
        let e = self.energy();
        if e <= 0.0 || !e.is_finite() {
            return Err(EnvelopeError::ZeroEnergy);
        }
        Ok(self.scaled(C64::new(1.0 / e.sqrt(), 0.0)))
    }

    /// Multiply every sample by `factor`.
    pub fn scaled(&self, factor: C64) -> Self {
        Self {
            grid: self.grid,
            samples: self.samples.iter().map(|&s| s * factor).collect(),
        }
    }

    /// Check that `other` lives on the identical grid.
    pub fn same_grid(&self, other: &Self) -> Result<(), EnvelopeError> {
        if self.grid != other.grid {
            return Err(EnvelopeError::GridMismatch(alloc::format!(
                "({}, {}, {}) vs ({}, {}, {})",
                self.grid.start,
                self.grid.step,
                self.grid.len,
                other.grid.start,
                other.grid.step,
                other.grid.len
            )));
        }
        Ok(())
    }

    /// Normalised overlap `|⟨f, g⟩| / (‖f‖·‖g‖)` on a shared grid.
    pub fn overlap(&self, other: &Self) -> Result<f64, EnvelopeError> {
        self.same_grid(other)?;
        let mut inner = C64::new(0.0, 0.0);
        let mut na = 0.0;
        let mut nb = 0.0;
        for (a, b) in self.samples.iter().zip(&other.samples) {
            inner += a.conj() * b;
            na += a.norm_sqr();
            nb += b.norm_sqr();
        }
        if na <= 0.0 || nb <= 0.0 {
            return Err(EnvelopeError::ZeroEnergy);
        }
        Ok(inner.norm() / (na * nb).sqrt())
    }

    /// Relative L2 distance `‖f - g‖ / ‖g‖` on a shared grid.
    pub fn l2_distance_rel(&self, reference: &Self) -> Result<f64, EnvelopeError> {
        self.same_grid(reference)?;
        let mut diff = 0.0;
        let mut norm = 0.0;
        for (a, b) in self.samples.iter().zip(&reference.samples) {
            diff += (a - b).norm_sqr();
            norm += b.norm_sqr();
        }
        if norm <= 0.0 {
            return Err(EnvelopeError::ZeroEnergy);
        }
        Ok((diff / norm).sqrt())
    }
}
