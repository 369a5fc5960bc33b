//! Time-domain Maxwell–Bloch solver on the probe characteristics.
//!
//! One photon sector of the coupled field–ensemble system reduces to
//! three slowly-varying amplitudes on `z ∈ [0, L]`: the probe field `E`,
//! the optical polarization `P`, and the spin coherence `S`,
//!
//! ```text
//! ∂t E + c·∂z E = i·gN·P
//! ∂t P = -Γ·P + i·Ω·S + i·g·E
//! ∂t S =         i·Ω·P
//! ```
//!
//! with `Ω` the control Rabi frequency — fixed at `G·√(n+1)` for a pinned
//! sector, or tracking the cavity occupation `Ω(t) = G·√(n_cav(t)+1)` in
//! dynamic-filling mode, where `n_cav` is the initial occupation plus the
//! net probe flux through the boundaries.
//!
//! # Scheme
//!
//! The grid locks the time step to the advection, `Δt = Δz/c`, so the
//! field update is an exact characteristic shift plus a source integral
//! (trapezoidal, with a predictor for the new-time polarization). The
//! stiff atomic pair `(P, S)` is advanced with the exact affine map for a
//! field varying linearly across the step: the 2×2 matrix exponential and
//! the two drive-response vectors are read out of one 4×4 augmented
//! exponential, so decay `Γ·Δt` of any size is handled without a
//! stability restriction from the atoms. The remaining explicit coupling
//! limits `Δt·√(g²N) ≲ 1`; the default cell count enforces it with a
//! factor-two margin.
//!
//! # Conservation
//!
//! The equations imply an exact photon balance,
//!
//! ```text
//! d/dt ∫ (|E|² + N·|P|² + N·|S|²) dz
//!     = c·(|E(0)|² - |E(L)|²) - 2ΓN·∫ |P|² dz,
//! ```
//!
//! which the solver tracks in photon units (scaling `|E|²` by the input
//! photon number): [`TimeDomainResult::conservation_audit`] reports the
//! worst violation of the discretised balance, the scattered-photon
//! total, and the transmitted fraction.

use alloc::string::String;
use alloc::vec::Vec;


use crate::analytic::group_velocity;
use crate::envelope::{EnvelopeError, SampledEnvelope};
use crate::params::{ParamError, PulseShape, Scenario};
use crate::C64;

/// Hard cap on spatial cells.
pub const MAX_Z_CELLS: usize = 1 << 15;
/// Hard cap on time steps.
pub const MAX_STEPS: usize = 20_000_000;

/// Errors from the time-domain solver.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum SolveError {
    /// Scenario or option validation failed.
    #[error(transparent)]
    Param(#[from] ParamError),
    /// Options were inconsistent with the scenario or each other.
    #[error("invalid solver options: {0}")]
    BadOptions(String),
    /// The stability rule asked for more cells than the cap allows.
    #[error("solver needs {needed} spatial cells (cap {cap})")]
    TooManyCells {
        /// Cells the stability rule requires.
        needed: usize,
        /// The [`MAX_Z_CELLS`] cap.
        cap: usize,
    },
    /// The requested duration needs more steps than the cap allows.
    #[error("solver needs {needed} time steps (cap {cap})")]
    TooManySteps {
        /// Steps the duration requires.
        needed: usize,
        /// The [`MAX_STEPS`] cap.
        cap: usize,
    },
    /// The field norm exploded; the spatial grid is too coarse for the
    /// collective coupling (`Δt·√(g²N)` too large) or the inputs are
    /// otherwise outside the scheme's stability region.
    #[error("numerical instability at t = {time:.6e} s (field grew {ratio:.3e}×); refine z_cells")]
    Instability {
        /// Simulation time at detection.
        time: f64,
        /// Field-energy growth factor at detection.
        ratio: f64,
    },
    /// Envelope bookkeeping failed.
    #[error(transparent)]
    Envelope(#[from] EnvelopeError),
}

/// Which control-field model to integrate.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SolveMode {
    /// The cavity holds exactly `sector` photons for the whole run:
    /// `Ω = G·√(sector+1)`.
    FixedSector {
        /// Pinned photon sector.
        sector: u32,
    },
    /// The cavity occupation follows the probe: `n_cav(t)` is the initial
    /// occupation plus the net photon flux that has entered the medium,
    /// and `Ω(t) = G·√(n_cav(t)+1)`.
    DynamicFilling,
}

/// Where the probe starts.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum InitialCondition {
    /// Empty medium; the probe enters through the `z = 0` boundary as the
    /// scenario's input envelope.
    Empty,
    /// A dark-state polariton already inside the medium (no boundary
    /// input): a Gaussian field profile with matched spin coherence
    /// `S = -(g/Ω)·E`, scaled so it carries the run's input photons.
    Preloaded {
        /// Profile centre as a fraction of the medium length (0, 1).
        center_fraction: f64,
        /// Profile 1/e half-width as a fraction of the medium length.
        width_fraction: f64,
    },
}

/// Call-site overrides for a solver run; `None` defers to the scenario's
/// [`crate::params::NumericsSpec`] (and its automatic rules).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TdOptions {
    /// Spatial cells (grid has `z_cells + 1` nodes).
    pub z_cells: Option<usize>,
    /// Run duration in seconds, measured from the envelope grid start.
    pub duration: Option<f64>,
    /// Number of full-field snapshots to record.
    pub snapshots: Option<usize>,
    /// Photons carried by the probe input; defaults to the pulse's mean
    /// photon number. Enters only the audit scaling and (in dynamic mode)
    /// the cavity occupation.
    pub photons_in: Option<f64>,
    /// Initial field configuration.
    pub initial: InitialCondition,
}

impl Default for TdOptions {
    fn default() -> Self {
        Self {
            z_cells: None,
            duration: None,
            snapshots: None,
            photons_in: None,
            initial: InitialCondition::Empty,
        }
    }
}

/// Full field state at one instant.
#[derive(Debug, Clone, PartialEq)]
pub struct Snapshot {
    /// Simulation time (s).
    pub time: f64,
    /// Probe field on the z-nodes.
    pub field: Vec<C64>,
    /// Optical polarization on the z-nodes.
    pub polarization: Vec<C64>,
    /// Spin coherence on the z-nodes.
    pub spin: Vec<C64>,
}

/// Everything a run records.
#[derive(Debug, Clone, PartialEq)]
pub struct TimeDomainResult {
    /// Mode the run used.
    pub mode: SolveMode,
    /// Time of the first record (s).
    pub start_time: f64,
    /// Time step `Δz/c` (s).
    pub time_step: f64,
    /// Node spacing (m).
    pub z_step: f64,
    /// Probe amplitude at the input face `z = 0`, per step.
    pub boundary_input: Vec<C64>,
    /// Probe amplitude at the output face `z = L`, per step.
    pub boundary_output: Vec<C64>,
    /// Cavity occupation per step (dynamic-filling runs only).
    pub occupation: Option<Vec<f64>>,
    /// Probe photons inside the medium, per step.
    pub probe_photons: Vec<f64>,
    /// Shared atomic excitations (polarization + spin) in photon units,
    /// per step.
    pub excitation_photons: Vec<f64>,
    /// Cumulative photons lost to spontaneous emission, per step.
    pub scattered_photons: Vec<f64>,
    /// Cumulative net photon flux into the medium, per step.
    pub flux_balance: Vec<f64>,
    /// Discrete conservation residual in photons, per step.
    pub residual: Vec<f64>,
    /// Recorded field snapshots.
    pub snapshots: Vec<Snapshot>,
    /// Photon scale used for the audit (and dynamic occupation).
    pub photons_in: f64,
}

/// Summary of the photon bookkeeping of a run.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AuditReport {
    /// Largest conservation violation along the run (photons).
    pub max_residual: f64,
    /// `max_residual` relative to the input photon number (equal to
    /// `max_residual` if the run carries zero photons).
    pub drift: f64,
    /// Photons inside the medium before the run (preloaded state).
    pub initial: f64,
    /// Photons that entered through `z = 0`.
    pub entered: f64,
    /// Photons that left through `z = L`.
    pub transmitted: f64,
    /// Photons scattered out of the probe mode.
    pub scattered: f64,
    /// Photons still inside (field + atoms) at the end.
    pub remaining: f64,
}

impl TimeDomainResult {
    /// Number of recorded time points.
    pub fn record_len(&self) -> usize {
        self.boundary_output.len()
    }

    /// Time of record `k`.
    pub fn time(&self, k: usize) -> f64 {
        self.start_time + self.time_step * k as f64
    }

    /// The output-face record as an envelope (its length is a step count,
    /// not a power of two; spectral re-processing requires re-gridding).
    pub fn boundary_envelope(&self) -> Result<SampledEnvelope, EnvelopeError> {
        SampledEnvelope::new(self.start_time, self.time_step, self.boundary_output.clone())
    }

    /// The input-face record as an envelope.
    pub fn input_envelope(&self) -> Result<SampledEnvelope, EnvelopeError> {
        SampledEnvelope::new(self.start_time, self.time_step, self.boundary_input.clone())
    }

    /// Cavity occupation trace; `None` unless the run used
    /// [`SolveMode::DynamicFilling`].
    pub fn cavity_occupation_trace(&self) -> Option<&[f64]> {
        self.occupation.as_deref()
    }

    /// Summarise the photon bookkeeping.
    pub fn conservation_audit(&self) -> AuditReport {
        let max_residual = self.residual.iter().fold(0.0_f64, |m, r| m.max(r.abs()));
        let drift = if self.photons_in > 0.0 {
            max_residual / self.photons_in
        } else {
            max_residual
        };
        let entered = self
            .flux_balance
            .last()
            .copied()
            .unwrap_or(0.0)
            + self.transmitted_photons();
        AuditReport {
            max_residual,
            drift,
            initial: self.probe_photons.first().copied().unwrap_or(0.0)
                + self.excitation_photons.first().copied().unwrap_or(0.0),
            entered,
            transmitted: self.transmitted_photons(),
            scattered: self.scattered_photons.last().copied().unwrap_or(0.0),
            remaining: self.probe_photons.last().copied().unwrap_or(0.0)
                + self.excitation_photons.last().copied().unwrap_or(0.0),
        }
    }

    /// Photons that left through the output face (time integral of the
    /// output intensity).
    pub fn transmitted_photons(&self) -> f64 {
        trapezoid_time(&self.boundary_output, self.time_step) * self.photons_in
    }

    /// Photons that entered through the input face.
    pub fn entered_photons(&self) -> f64 {
        trapezoid_time(&self.boundary_input, self.time_step) * self.photons_in
    }
}

/// Cavity occupation trace of a dynamic-filling run (`None` otherwise).
pub fn cavity_occupation_trace(result: &TimeDomainResult) -> Option<&[f64]> {
    result.cavity_occupation_trace()
}

/// Summarise the photon bookkeeping of a run.
pub fn conservation_audit(result: &TimeDomainResult) -> AuditReport {
    result.conservation_audit()
}

fn trapezoid_time(samples: &[C64], step: f64) -> f64 {
    if samples.len() < 2 {
        return 0.0;
    }
    let mut acc = 0.0;
    for (i, s) in samples.iter().enumerate() {
        let w = if i == 0 || i == samples.len() - 1 {
            0.5
        } else {
            1.0
        };
        acc += w * s.norm_sqr();
    }
    acc * step
}

/// 2×2 complex matrix.
type Mat2 = [[C64; 2]; 2];
/// 2-component complex vector.
type Vec2 = [C64; 2];

/// Per-step affine update for the atomic pair: exact matrix exponential
/// plus drive-response vectors for a field varying linearly over the step.
#[derive(Debug, Clone, Copy)]
struct AtomMap {
    m: Mat2,
    r0: Vec2,
    r1: Vec2,
}

impl AtomMap {
    /// Build the map for decay `gamma`, control Rabi `rabi`, single-atom
    /// coupling `g`, over time step `dt`.
    ///
    /// Uses the augmented-matrix identity: with
    /// `V = [[A, Cα, Cβ], [0, 0, 1], [0, 0, 0]]` (A the 2×2 atomic
    /// generator, Cα = g⃗/dt, Cβ = g⃗, g⃗ = (i·g, 0)ᵀ), the top-right
    /// columns of `exp(V·dt)` are
    /// `Xα = (1/dt)·∫ e^{A(dt-s)} g⃗ ds` and
    /// `Xβ = ∫ e^{A(dt-s)} g⃗ (1 + s/dt) ds`,
    /// from which the responses to the endpoint field values follow:
    /// `R1 = Xβ - dt·Xα` (weight of E(t+dt)) and `R0 = 2·dt·Xα - Xβ`.
    fn build(gamma: f64, rabi: f64, g: f64, dt: f64) -> Self {
        let zero = C64::new(0.0, 0.0);
        let ig = C64::new(0.0, g);
        let i_rabi = C64::new(0.0, rabi);
        let mut v = [[zero; 4]; 4];
        v[0][0] = C64::new(-gamma, 0.0);
        v[0][1] = i_rabi;
        v[1][0] = i_rabi;
        v[0][2] = ig / dt;
        v[0][3] = ig;
        v[2][3] = C64::new(1.0, 0.0);
        let e = expm4(scale4(&v, dt));
        let m = [[e[0][0], e[0][1]], [e[1][0], e[1][1]]];
        let xa = [e[0][2], e[1][2]];
        let xb = [e[0][3], e[1][3]];
        let r1 = [xb[0] - xa[0] * dt, xb[1] - xa[1] * dt];
        let r0 = [
            xa[0] * (2.0 * dt) - xb[0],
            xa[1] * (2.0 * dt) - xb[1],
        ];
        Self { m, r0, r1 }
    }

    /// Advance `(p, s)` across one step with endpoint fields `e0`, `e1`.
    #[inline]
    fn apply(&self, p: C64, s: C64, e0: C64, e1: C64) -> (C64, C64) {
        (
            self.m[0][0] * p + self.m[0][1] * s + self.r0[0] * e0 + self.r1[0] * e1,
            self.m[1][0] * p + self.m[1][1] * s + self.r0[1] * e0 + self.r1[1] * e1,
        )
    }
}

type Mat4 = [[C64; 4]; 4];

fn scale4(a: &Mat4, f: f64) -> Mat4 {
    let mut out = *a;
    for row in &mut out {
        for x in row {
            *x *= f;
        }
    }
    out
}

fn mul4(a: &Mat4, b: &Mat4) -> Mat4 {
    let zero = C64::new(0.0, 0.0);
    let mut out = [[zero; 4]; 4];
    for i in 0..4 {
        for k in 0..4 {
            let aik = a[i][k];
            if aik == zero {
                continue;
            }
            for j in 0..4 {
                out[i][j] += aik * b[k][j];
            }
        }
    }
    out
}

fn norm_inf4(a: &Mat4) -> f64 {
    a.iter()
        .map(|row| row.iter().map(|x| x.norm()).sum::<f64>())
        .fold(0.0, f64::max)
}

/// Matrix exponential by scaling-and-squaring with a Taylor series; exact
/// to round-off for the small matrices used here.
fn expm4(a: Mat4) -> Mat4 {
    let norm = norm_inf4(&a);
    let squarings = if norm > 0.25 {
        ((norm / 0.25).log2().ceil() as u32).min(60)
    } else {
        0
    };
    let b = scale4(&a, 0.5_f64.powi(squarings as i32));

    let zero = C64::new(0.0, 0.0);
    let mut result = [[zero; 4]; 4];
    for (i, row) in result.iter_mut().enumerate() {
        row[i] = C64::new(1.0, 0.0);
    }
    let mut term = result;
    for k in 1..=24 {
        term = mul4(&term, &b);
        term = scale4(&term, 1.0 / k as f64);
        for i in 0..4 {
            for j in 0..4 {
                result[i][j] += term[i][j];
            }
        }
        if norm_inf4(&term) < 1e-20 * norm_inf4(&result).max(1.0) {
            break;
        }
    }
    let mut out = result;
    for _ in 0..squarings {
        out = mul4(&out, &out);
    }
    out
}

/// Closed-form boundary drive for the scenario's pulse, continuous-time
/// normalised to unit energy.
fn boundary_drive(scenario: &Scenario) -> impl Fn(f64) -> C64 + '_ {
    let width = scenario.pulse.width;
    let shape = &scenario.pulse.shape;
    move |t: f64| match shape {
        PulseShape::Gaussian => {
            // ∫|f|² dt = 1 for f = π^{-1/4} T^{-1/2} exp(-t²/2T²)
            let amp = 1.0 / (core::f64::consts::PI.powf(0.25) * width.sqrt());
            let u = t / width;
            C64::new(amp * (-0.5 * u * u).exp(), 0.0)
        }
        PulseShape::Sech => {
            // ∫ sech²(t/T) dt = 2T; decaying-exponential form avoids
            // overflow in the far tails
            let amp = 1.0 / (2.0 * width).sqrt();
            let u = (-(t / width).abs()).exp();
            C64::new(amp * 2.0 * u / (1.0 + u * u), 0.0)
        }
        PulseShape::Custom(env) => {
            // linear interpolation between samples, zero outside
            let grid = env.grid();
            let pos = (t - grid.start) / grid.step;
            if pos < 0.0 || pos > (grid.len - 1) as f64 {
                return C64::new(0.0, 0.0);
            }
            let i = (pos.floor() as usize).min(grid.len - 2);
            let frac = pos - i as f64;
            env.samples()[i] * (1.0 - frac) + env.samples()[i + 1] * frac
        }
    }
}

/// Integrate one scenario in time.
///
/// The run starts at the scenario grid's start time with the medium in
/// the configured initial condition and records both faces every step.
pub fn solve(
    scenario: &Scenario,
    mode: SolveMode,
    options: &TdOptions,
) -> Result<TimeDomainResult, SolveError> {
    let medium = &scenario.medium;
    let cavity = &scenario.cavity;
    let derived = medium.derive();
    let grid = scenario.grid()?;
    let c = medium.light_speed;
    let length = medium.length;

    // --- spatial grid: lock Δt·√(g²N) ≲ 0.5 unless overridden ---
    let stability_cells = (2.0 * length * derived.collective_coupling.sqrt() / c).ceil();
    let auto_cells = (stability_cells as usize).max(64).next_power_of_two();
    let z_cells = options
        .z_cells
        .or(match scenario.numerics.z_cells {
            0 => None,
            n => Some(n as usize),
        })
        .unwrap_or(auto_cells);
    if z_cells < 8 {
        return Err(SolveError::BadOptions(alloc::format!(
            "z_cells must be at least 8, got {z_cells}"
        )));
    }
    if z_cells > MAX_Z_CELLS {
        return Err(SolveError::TooManyCells {
            needed: z_cells,
            cap: MAX_Z_CELLS,
        });
    }
    let dz = length / z_cells as f64;
    let dt = dz / c;

    // --- duration: cover the input window plus the slowest arrival ---
    let slow_sector = match mode {
        SolveMode::FixedSector { sector } => sector,
        SolveMode::DynamicFilling => cavity.initial_photons,
    };
    let rabi_slow = cavity.sector_rabi(slow_sector);
    let tau_slow = derived.optical_depth * medium.gamma / (rabi_slow * rabi_slow);
    let t_pulse = scenario.pulse.width;
    let duration = options
        .duration
        .or(scenario.numerics.duration)
        .unwrap_or_else(|| (0.0 - grid.start) + length / c + tau_slow + 8.0 * t_pulse);
    if !duration.is_finite() || duration <= 0.0 {
        return Err(SolveError::BadOptions(alloc::format!(
            "duration must be positive, got {duration}"
        )));
    }
    let steps = (duration / dt).ceil() as usize;
    if steps > MAX_STEPS {
        return Err(SolveError::TooManySteps {
            needed: steps,
            cap: MAX_STEPS,
        });
    }

    let photons_in = options
        .photons_in
        .unwrap_or_else(|| scenario.pulse.mean_photons());
    if !(photons_in.is_finite() && photons_in >= 0.0) {
        return Err(SolveError::BadOptions(alloc::format!(
            "photons_in must be non-negative, got {photons_in}"
        )));
    }

    // clamp so a long run cannot be asked to retain every step
    let snapshots_wanted = options
        .snapshots
        .unwrap_or(scenario.numerics.snapshots as usize)
        .clamp(2, 4096);

    // --- initial state ---
    let nodes = z_cells + 1;
    let zero = C64::new(0.0, 0.0);
    let mut e = alloc::vec![zero; nodes];
    let mut p = alloc::vec![zero; nodes];
    let mut s = alloc::vec![zero; nodes];

    // occupation the control field starts from
    let base_occupation = cavity.initial_photons as f64
        + match options.initial {
            InitialCondition::Empty => 0.0,
            InitialCondition::Preloaded { .. } => photons_in,
        };

    if let InitialCondition::Preloaded {
        center_fraction,
        width_fraction,
    } = options.initial
    {
        if !(0.0 < center_fraction && center_fraction < 1.0) || width_fraction <= 0.0 {
            return Err(SolveError::BadOptions(String::from(
                "preloaded profile must sit inside the medium with positive width",
            )));
        }
        // dark-state polariton: S = -(g/Ω)E, P = 0, with ∫|E|²dz = v_gr,
        // which makes the stored content exactly the run's photon number
        let occ_sector = match mode {
            SolveMode::FixedSector { sector } => sector,
            SolveMode::DynamicFilling => base_occupation.round().max(0.0) as u32,
        };
        let rabi0 = cavity.sector_rabi(occ_sector);
        let v_gr = group_velocity(medium, cavity, occ_sector);
        let zc = center_fraction * length;
        let zw = width_fraction * length;
        let mut norm = 0.0;
        for (j, ej) in e.iter_mut().enumerate() {
            let z = j as f64 * dz;
            let u = (z - zc) / zw;
            let val = (-0.5 * u * u).exp();
            *ej = C64::new(val, 0.0);
            let w = if j == 0 || j == nodes - 1 { 0.5 } else { 1.0 };
            norm += w * val * val * dz;
        }
        let scale = (v_gr / norm).sqrt();
        for (ej, sj) in e.iter_mut().zip(&mut s) {
            *ej *= scale;
            *sj = -(medium.coupling / rabi0) * *ej;
        }
    }

    let drive = boundary_drive(scenario);
    let start_time = grid.start;
    if matches!(options.initial, InitialCondition::Empty) {
        e[0] = drive(start_time);
    }

    // --- per-step machinery ---
    let coupling_n = C64::new(0.0, medium.coupling * medium.atom_count); // i·gN
    let half_dt = 0.5 * dt;
    let fixed_map = match mode {
        SolveMode::FixedSector { sector } => Some(AtomMap::build(
            medium.gamma,
            cavity.sector_rabi(sector),
            medium.coupling,
            dt,
        )),
        SolveMode::DynamicFilling => None,
    };

    // photon-unit scales (see module docs): content densities carry
    // s² = photons·L/c spread over the length
    let probe_scale = photons_in / c;
    let exc_scale = photons_in * medium.atom_count / c;
    let loss_scale = 2.0 * medium.gamma * photons_in * medium.atom_count / c;

    let trapz = |field: &[C64]| -> f64 {
        let mut acc = 0.0;
        for (j, x) in field.iter().enumerate() {
            let w = if j == 0 || j == field.len() - 1 { 0.5 } else { 1.0 };
            acc += w * x.norm_sqr();
        }
        acc * dz
    };

    let records = steps + 1;
    let mut boundary_input = Vec::with_capacity(records);
    let mut boundary_output = Vec::with_capacity(records);
    let mut probe_photons = Vec::with_capacity(records);
    let mut excitation_photons = Vec::with_capacity(records);
    let mut scattered_photons = Vec::with_capacity(records);
    let mut flux_balance = Vec::with_capacity(records);
    let mut residual = Vec::with_capacity(records);
    let mut occupation = matches!(mode, SolveMode::DynamicFilling)
        .then(|| Vec::with_capacity(records));
    let mut snapshots = Vec::with_capacity(snapshots_wanted);

    let snap_step = |k: usize| -> bool {
        if snapshots_wanted >= records {
            return true;
        }
        // evenly spaced including both ends
        let stride = (steps as f64) / (snapshots_wanted - 1) as f64;
        (0..snapshots_wanted).any(|i| (i as f64 * stride).round() as usize == k)
    };

    let mut probe_now = trapz(&e) * probe_scale;
    let exc_now = (trapz(&p) + trapz(&s)) * exc_scale;
    let initial_content = probe_now + exc_now;
    let mut loss_cum = 0.0;
    let mut flux_cum = 0.0;
    let mut loss_rate_prev = trapz(&p) * loss_scale;
    let mut flux_rate_prev = photons_in * (e[0].norm_sqr() - e[nodes - 1].norm_sqr());
    let mut n_cav = base_occupation;

    boundary_input.push(e[0]);
    boundary_output.push(e[nodes - 1]);
    probe_photons.push(probe_now);
    excitation_photons.push(exc_now);
    scattered_photons.push(0.0);
    flux_balance.push(0.0);
    residual.push(0.0);
    if let Some(occ) = occupation.as_mut() {
        occ.push(n_cav);
    }
    if snap_step(0) {
        snapshots.push(Snapshot {
            time: start_time,
            field: e.clone(),
            polarization: p.clone(),
            spin: s.clone(),
        });
    }

    let instability_ref = {
        // natural per-photon content scale: a pulse of peak intensity
        // |f|² filling the medium carries |f|²·L/c of probe content
        let boundary_peak = drive(0.0).norm_sqr() * length / c;
        (initial_content / photons_in.max(f64::MIN_POSITIVE))
            .max(boundary_peak)
            .max(f64::MIN_POSITIVE)
    };

    // --- main loop ---
    for k in 0..steps {
        let t_new = start_time + dt * (k + 1) as f64;

        let map = match fixed_map {
            Some(m) => m,
            None => AtomMap::build(
                medium.gamma,
                cavity.vacuum_rabi * (n_cav.max(0.0) + 1.0).sqrt(),
                medium.coupling,
                dt,
            ),
        };

        // interior sweep, descending so e[j-1] and p[j-1] stay old
        for j in (1..nodes).rev() {
            let source_old = p[j - 1] + p[j];
            let e_pred = e[j - 1] + coupling_n * source_old * half_dt;
            let (pj, sj) = map.apply(p[j], s[j], e[j], e_pred);
            p[j] = pj;
            s[j] = sj;
            e[j] = e[j - 1] + coupling_n * (p[j - 1] + pj) * half_dt;
        }
        // input boundary node
        let e0_new = match options.initial {
            InitialCondition::Empty => drive(t_new),
            InitialCondition::Preloaded { .. } => zero,
        };
        let (p0, s0) = map.apply(p[0], s[0], e[0], e0_new);
        p[0] = p0;
        s[0] = s0;
        e[0] = e0_new;

        // bookkeeping
        probe_now = trapz(&e) * probe_scale;
        let exc_now = (trapz(&p) + trapz(&s)) * exc_scale;
        let loss_rate = trapz(&p) * loss_scale;
        loss_cum += half_dt * (loss_rate_prev + loss_rate);
        loss_rate_prev = loss_rate;
        let flux_rate = photons_in * (e[0].norm_sqr() - e[nodes - 1].norm_sqr());
        flux_cum += half_dt * (flux_rate_prev + flux_rate);
        flux_rate_prev = flux_rate;
        if occupation.is_some() {
            n_cav = base_occupation + flux_cum;
        }

        boundary_input.push(e[0]);
        boundary_output.push(e[nodes - 1]);
        probe_photons.push(probe_now);
        excitation_photons.push(exc_now);
        scattered_photons.push(loss_cum);
        flux_balance.push(flux_cum);
        residual.push((probe_now + exc_now - initial_content) + loss_cum - flux_cum);
        if let Some(occ) = occupation.as_mut() {
            occ.push(n_cav);
        }
        if snap_step(k + 1) {
            snapshots.push(Snapshot {
                time: t_new,
                field: e.clone(),
                polarization: p.clone(),
                spin: s.clone(),
            });
        }

        if k % 128 == 0 {
            let scale = probe_now / photons_in.max(f64::MIN_POSITIVE);
            if !scale.is_finite() || scale > 1e12 * instability_ref {
                return Err(SolveError::Instability {
                    time: t_new,
                    ratio: scale / instability_ref,
                });
            }
        }
    }

    Ok(TimeDomainResult {
        mode,
        start_time,
        time_step: dt,
        z_step: dz,
        boundary_input,
        boundary_output,
        occupation,
        probe_photons,
        excitation_photons,
        scattered_photons,
        flux_balance,
        residual,
        snapshots,
        photons_in,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::params::{CavitySpec, MediumSpec, NumericsSpec, ProbePulse};
    use alloc::vec;

    /// `g²N = 60`, `Γ = 2`, `L = c = 1`, so the optical depth is 30 and
    /// the n = 0 sector (with `G² = 6`) has `v_gr = 1/11`, `τ = 10`.
    fn toy_medium() -> MediumSpec {
        MediumSpec::new(60.0_f64.sqrt(), 1.0, 1.0, 2.0)
            .unwrap()
            .with_light_speed(1.0)
            .unwrap()
    }

    fn toy_scenario(width: f64) -> Scenario {
        let cavity = CavitySpec::new(6.0_f64.sqrt(), 0.0, 0).unwrap();
        let pulse = ProbePulse::new(
            PulseShape::Gaussian,
            width,
            vec![C64::new(0.0, 0.0), C64::new(1.0, 0.0)],
        )
        .unwrap();
        Scenario::new(toy_medium(), cavity, pulse, NumericsSpec::default()).unwrap()
    }

    fn opts() -> TdOptions {
        TdOptions::default()
    }

    /// Stiffer medium for contained-polariton tests: `g²N = 240`, `Γ = 2`
    /// (depth 120) with `G = 2`.  A preload of width `0.1·L` then has
    /// bandwidth `v_gr/σ_z ≲ 0.14·Ω` in every sector used below, so
    /// essentially no spectral weight sits outside the transparency
    /// window where it would race ahead at `c` and leak out.
    fn stiff_scenario() -> Scenario {
        let medium = MediumSpec::new(240.0_f64.sqrt(), 1.0, 1.0, 2.0)
            .unwrap()
            .with_light_speed(1.0)
            .unwrap();
        let cavity = CavitySpec::new(2.0, 0.0, 0).unwrap();
        let pulse = ProbePulse::new(
            PulseShape::Gaussian,
            3.0,
            vec![C64::new(0.0, 0.0), C64::new(1.0, 0.0)],
        )
        .unwrap();
        Scenario::new(medium, cavity, pulse, NumericsSpec::default()).unwrap()
    }

    #[test]
    fn atom_map_reduces_to_trapezoid_without_atom_dynamics() {
        // Γ = Ω = 0 leaves pure integration of i·g·E; the exact map for a
        // linear-in-time field is then the trapezoid rule.
        let g = 0.3;
        let dt = 0.01;
        let map = AtomMap::build(0.0, 0.0, g, dt);
        let expected = C64::new(0.0, 0.5 * g * dt);
        assert!((map.r0[0] - expected).norm() < 1e-16);
        assert!((map.r1[0] - expected).norm() < 1e-16);
        assert!(map.r0[1].norm() < 1e-16 && map.r1[1].norm() < 1e-16);
        assert!((map.m[0][0] - C64::new(1.0, 0.0)).norm() < 1e-15);
        assert!((map.m[1][1] - C64::new(1.0, 0.0)).norm() < 1e-15);
        assert!(map.m[0][1].norm() < 1e-15 && map.m[1][0].norm() < 1e-15);
    }

    #[test]
    fn atom_map_preserves_dark_state_even_when_stiff() {
        // (P, S) = (0, -gE/Ω) is stationary under constant drive; the map
        // must hold it there even at Γ·dt = 50.
        let (gamma, rabi, g, dt) = (50.0, 1.0, 0.1, 1.0);
        let map = AtomMap::build(gamma, rabi, g, dt);
        let e = C64::new(2.0, 1.0);
        let dark = -(g / rabi) * e;
        let (p1, s1) = map.apply(C64::new(0.0, 0.0), dark, e, e);
        assert!(p1.norm() < 1e-9 * e.norm());
        assert!((s1 - dark).norm() < 1e-9 * dark.norm());
    }

    #[test]
    fn expm4_matches_closed_form_rotation() {
        // exp of [[0, iω], [iω, 0]] is cos(ω)·I + i·sin(ω)·σx
        let zero = C64::new(0.0, 0.0);
        let om = 0.7;
        let mut v = [[zero; 4]; 4];
        v[0][1] = C64::new(0.0, om);
        v[1][0] = C64::new(0.0, om);
        let e = expm4(v);
        assert!((e[0][0] - C64::new(om.cos(), 0.0)).norm() < 1e-14);
        assert!((e[0][1] - C64::new(0.0, om.sin())).norm() < 1e-14);
        assert!((e[1][0] - C64::new(0.0, om.sin())).norm() < 1e-14);
        assert!((e[1][1] - C64::new(om.cos(), 0.0)).norm() < 1e-14);
        // unused augmentation rows stay trivial: identity diagonal, no fill
        assert!((e[2][2] - C64::new(1.0, 0.0)).norm() < 1e-14);
        assert!((e[3][3] - C64::new(1.0, 0.0)).norm() < 1e-14);
        assert!(e[2][3].norm() < 1e-14);
        assert!(e[2][0].norm() < 1e-14 && e[3][1].norm() < 1e-14);
    }

    #[test]
    fn negligible_coupling_gives_exact_advection() {
        // with g ~ 1e-300 the source term underflows to zero and the
        // output face must reproduce the drive delayed by exactly L/c
        let medium = MediumSpec::new(1e-300, 1.0, 1.0, 2.0)
            .unwrap()
            .with_light_speed(1.0)
            .unwrap();
        let cavity = CavitySpec::new(1.0, 0.0, 0).unwrap();
        let pulse = ProbePulse::new(
            PulseShape::Gaussian,
            0.1,
            vec![C64::new(1.0, 0.0)],
        )
        .unwrap();
        let scenario =
            Scenario::new(medium, cavity, pulse, NumericsSpec::default()).unwrap();
        let result = solve(
            &scenario,
            SolveMode::FixedSector { sector: 0 },
            &TdOptions {
                z_cells: Some(64),
                duration: Some(2.0),
                ..opts()
            },
        )
        .unwrap();
        let drive = boundary_drive(&scenario);
        let cells = 64;
        for k in cells..result.record_len() {
            let expected = drive(result.time(k - cells));
            assert!(
                (result.boundary_output[k] - expected).norm() < 1e-250,
                "advection not exact at record {k}"
            );
        }
    }

    #[test]
    fn coarse_grid_instability_is_detected() {
        // Δt·√(g²N) = 30 on purpose: the explicit coupling must blow up
        // and the guard must catch it instead of returning garbage
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
        let scenario =
            Scenario::new(medium, cavity, pulse, NumericsSpec::default()).unwrap();
        let result = solve(
            &scenario,
            SolveMode::FixedSector { sector: 0 },
            &TdOptions {
                z_cells: Some(8),
                duration: Some(50.0),
                ..opts()
            },
        );
        assert!(matches!(result, Err(SolveError::Instability { .. })));
    }

    #[test]
    fn photon_bookkeeping_balances() {
        let scenario = toy_scenario(3.0);
        let result = solve(
            &scenario,
            SolveMode::FixedSector { sector: 0 },
            &TdOptions {
                z_cells: Some(256),
                ..opts()
            },
        )
        .unwrap();
        let audit = result.conservation_audit();
        assert!(
            audit.drift < 1e-2,
            "conservation drift too large: {}",
            audit.drift
        );
        assert!(
            (audit.entered - 1.0).abs() < 1e-3,
            "unit pulse should carry one photon, got {}",
            audit.entered
        );
        // T·Δω ≈ 1.6 here: real absorption, real transmission
        assert!(audit.scattered > 0.05 && audit.scattered < 0.95);
        assert!(audit.transmitted > 0.05 && audit.transmitted < 0.95);
        assert!(audit.initial.abs() < 1e-12);
        let balance =
            audit.entered - audit.transmitted - audit.scattered - audit.remaining;
        assert!(balance.abs() < 2.0 * audit.drift + 1e-9);
    }

    #[test]
    fn preloaded_polariton_travels_at_group_velocity() {
        let scenario = stiff_scenario();
        let result = solve(
            &scenario,
            SolveMode::FixedSector { sector: 0 },
            &TdOptions {
                z_cells: Some(256),
                duration: Some(18.3),
                snapshots: Some(3),
                initial: InitialCondition::Preloaded {
                    center_fraction: 0.3,
                    width_fraction: 0.1,
                },
                ..opts()
            },
        )
        .unwrap();
        assert_eq!(result.snapshots.len(), 3);
        let centroid = |snap: &Snapshot| -> f64 {
            let mut num = 0.0;
            let mut den = 0.0;
            for (j, x) in snap.field.iter().enumerate() {
                let w = x.norm_sqr();
                num += j as f64 * result.z_step * w;
                den += w;
            }
            num / den
        };
        // measure between the later two snapshots so any settling of the
        // small bright-polariton admixture is excluded
        let (s1, s2) = (&result.snapshots[1], &result.snapshots[2]);
        let measured = (centroid(s2) - centroid(s1)) / (s2.time - s1.time);
        let expected = 1.0 / 61.0; // Ω²/(Ω²+g²N)·c = 4/244
        // residual bandwidth makes the packet a percent slow; allow 3%
        assert!(
            (measured - expected).abs() < 0.03 * expected,
            "polariton speed {measured} vs expected {expected}"
        );
        // the preload carries the run's photon count by construction
        let audit = result.conservation_audit();
        assert!((audit.initial - 1.0).abs() < 1e-12);
        assert!(audit.drift < 1e-3);
    }

    #[test]
    fn dynamic_filling_matches_pinned_sector_in_weak_probe_limit() {
        // the dynamic feedback term is `photons_in · net flux`, so with a
        // vanishing photon number and the occupancy seeded by the cavity's
        // own `initial_photons`, the control field never moves off its base
        // value and the run must match the pinned-sector solver to
        // round-off — no initial-state approximation is involved
        let medium = MediumSpec::new(240.0_f64.sqrt(), 1.0, 1.0, 2.0)
            .unwrap()
            .with_light_speed(1.0)
            .unwrap();
        let cavity = CavitySpec::new(2.0, 0.0, 2).unwrap();
        let pulse = ProbePulse::new(
            PulseShape::Gaussian,
            3.0,
            vec![C64::new(0.0, 0.0), C64::new(1.0, 0.0)],
        )
        .unwrap();
        let scenario =
            Scenario::new(medium, cavity, pulse, NumericsSpec::default()).unwrap();
        let shared = TdOptions {
            z_cells: Some(256),
            duration: Some(12.0),
            snapshots: Some(2),
            photons_in: Some(1e-12),
            initial: InitialCondition::Empty,
        };
        let fixed = solve(&scenario, SolveMode::FixedSector { sector: 2 }, &shared).unwrap();
        let dynamic = solve(&scenario, SolveMode::DynamicFilling, &shared).unwrap();
        let peak = fixed
            .boundary_output
            .iter()
            .map(|x| x.norm())
            .fold(0.0, f64::max);
        let max_diff = fixed
            .boundary_output
            .iter()
            .zip(&dynamic.boundary_output)
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max);
        assert!(
            max_diff < 1e-9 * peak,
            "modes diverged: {max_diff} vs peak {peak}"
        );
        let occ = dynamic.cavity_occupation_trace().unwrap();
        assert!(occ.iter().all(|n| (n - 2.0).abs() < 1e-9));
        assert!(fixed.cavity_occupation_trace().is_none());
    }

    #[test]
    fn dynamic_filling_stays_near_pinned_for_contained_preload() {
        // the dark-state preload omits the O(v_gr·∂z/Ω) polarization
        // admixture, so a fraction ~(v_gr/(σ_z·Ω))²·g²N/Ω² of the content
        // (here ≈ 0.5%) rearranges during the first transit and part of it
        // radiates out at c; the dynamic occupancy follows that real flux.
        // Containment therefore holds at the per-mille level, not exactly.
        let scenario = stiff_scenario();
        let shared = TdOptions {
            z_cells: Some(256),
            duration: Some(1.5),
            snapshots: Some(2),
            photons_in: Some(2.0),
            initial: InitialCondition::Preloaded {
                center_fraction: 0.45,
                width_fraction: 0.08,
            },
        };
        let fixed = solve(&scenario, SolveMode::FixedSector { sector: 2 }, &shared).unwrap();
        let dynamic = solve(&scenario, SolveMode::DynamicFilling, &shared).unwrap();
        let f_end = &fixed.snapshots.last().unwrap().field;
        let d_end = &dynamic.snapshots.last().unwrap().field;
        let peak = f_end.iter().map(|x| x.norm()).fold(0.0, f64::max);
        let max_diff = f_end
            .iter()
            .zip(d_end)
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max);
        assert!(
            max_diff < 2e-3 * peak,
            "modes diverged: {max_diff} vs peak {peak}"
        );
        let occ = dynamic.cavity_occupation_trace().unwrap();
        assert!(occ.iter().all(|n| (n - 2.0).abs() < 0.01));
    }

    #[test]
    fn dynamic_occupation_tracks_net_flux() {
        let scenario = toy_scenario(3.0);
        let result = solve(
            &scenario,
            SolveMode::DynamicFilling,
            &TdOptions {
                z_cells: Some(256),
                ..opts()
            },
        )
        .unwrap();
        let occ = result.cavity_occupation_trace().unwrap();
        assert_eq!(occ.len(), result.record_len());
        assert_eq!(occ[0], 0.0);
        let audit = result.conservation_audit();
        let expected_end = audit.scattered + audit.remaining;
        assert!(
            (occ.last().unwrap() - expected_end).abs() < 0.02,
            "occupation should end at scattered + remaining"
        );
        let peak = occ.iter().copied().fold(0.0, f64::max);
        assert!(peak > 0.2 && peak <= 1.0 + 1e-6);
    }

    #[test]
    fn record_shapes_and_boundaries() {
        let scenario = toy_scenario(3.0);
        let result = solve(
            &scenario,
            SolveMode::FixedSector { sector: 0 },
            &TdOptions {
                z_cells: Some(64),
                duration: Some(10.0),
                snapshots: Some(5),
                ..opts()
            },
        )
        .unwrap();
        assert_eq!(result.record_len(), 641);
        assert_eq!(result.snapshots.len(), 5);
        assert!(result
            .snapshots
            .windows(2)
            .all(|w| w[0].time < w[1].time));
        assert_eq!(result.snapshots[0].time, result.start_time);
        let drive = boundary_drive(&scenario);
        for k in [0, 100, 640] {
            let expected = drive(result.time(k));
            assert!((result.boundary_input[k] - expected).norm() < 1e-15);
        }
        let env = result.boundary_envelope().unwrap();
        assert_eq!(env.len(), 641);
        assert_eq!(env.step(), result.time_step);
    }

    #[test]
    fn option_validation_rejects_bad_requests() {
        let scenario = toy_scenario(3.0);
        let fixed = SolveMode::FixedSector { sector: 0 };
        assert!(matches!(
            solve(&scenario, fixed, &TdOptions { z_cells: Some(4), ..opts() }),
            Err(SolveError::BadOptions(_))
        ));
        assert!(matches!(
            solve(
                &scenario,
                fixed,
                &TdOptions { z_cells: Some(MAX_Z_CELLS + 1), ..opts() }
            ),
            Err(SolveError::TooManyCells { .. })
        ));
        assert!(matches!(
            solve(&scenario, fixed, &TdOptions { duration: Some(-1.0), ..opts() }),
            Err(SolveError::BadOptions(_))
        ));
        assert!(matches!(
            solve(&scenario, fixed, &TdOptions { photons_in: Some(-0.5), ..opts() }),
            Err(SolveError::BadOptions(_))
        ));
        assert!(matches!(
            solve(
                &scenario,
                fixed,
                &TdOptions {
                    initial: InitialCondition::Preloaded {
                        center_fraction: 1.5,
                        width_fraction: 0.1,
                    },
                    ..opts()
                }
            ),
            Err(SolveError::BadOptions(_))
        ));
    }
}
