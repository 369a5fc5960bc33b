//! Deterministic parameter sweeps over scenario axes.
//!
//! A [`SweepPlan`] holds a base [`Scenario`], up to three [`AxisSpec`]
//! axes, an engine choice, and a list of metrics. [`run_sweep`] walks the
//! Cartesian product in lexicographic order (axis 0 outermost) and
//! produces one [`SweepRow`] per point. Each row is self-contained:
//! points that fail to build or to evaluate record their error strings
//! in-row instead of aborting the sweep, so a scan over a cliff edge in
//! parameter space still returns the full table.
//!
//! [`evaluate_point`] is exposed separately so callers may distribute
//! points over threads: rows depend only on the plan and the point index,
//! so any schedule that reassembles rows in index order reproduces the
//! serial table byte for byte.
//!
//! # Axis semantics
//!
//! Axes replace one knob and *re-derive* the dependent microscopic
//! parameters so the usual analytic knobs stay orthogonal:
//!
//! * [`AxisKind::OpticalDepth`] rebuilds the medium at the new depth,
//!   preserving `Γ`, length, atom count, and light speed;
//! * [`AxisKind::Gamma`] rebuilds the medium at the new linewidth,
//!   preserving the *optical depth* (the formulas treat `OD` and `Γ` as
//!   independent), length, atom count, and light speed;
//! * [`AxisKind::MaxPhotonNumber`] replaces the pulse statistics with a
//!   flat superposition over `1..=n` (no vacuum), the canonical probe of
//!   how gating degrades with superposition depth. Values are rounded to
//!   the nearest integer ≥ 1.

use alloc::string::{String, ToString};
use alloc::vec::Vec;


use crate::analytic::{
    differential_delay, feasibility, group_velocity, transit_delay, transparency_window,
    FeasibilityThresholds,
};
use crate::fock::{assemble, optimize_gate, Engine, FockError, GateRequest, OutputState};
use crate::params::{CavitySpec, MediumSpec, ParamError, ProbePulse, Scenario};
use crate::C64;

/// Which scenario knob an axis varies.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AxisKind {
    /// Cavity vacuum Rabi frequency `G` (rad/s).
    VacuumRabi,
    /// Optical depth of the medium (dimensionless), `Γ` preserved.
    OpticalDepth,
    /// Probe pulse width `T` (s).
    PulseWidth,
    /// Cavity decay rate `κ` (rad/s).
    CavityDecay,
    /// Depth of a flat superposition `1..=n` replacing the pulse
    /// statistics.
    MaxPhotonNumber,
    /// Atomic linewidth `Γ` (rad/s), optical depth preserved.
    Gamma,
}

impl AxisKind {
    /// Column name used in tables and CSV output.
    pub fn name(&self) -> &'static str {
        match self {
            AxisKind::VacuumRabi => "vacuum_rabi",
            AxisKind::OpticalDepth => "optical_depth",
            AxisKind::PulseWidth => "pulse_width",
            AxisKind::CavityDecay => "cavity_decay",
            AxisKind::MaxPhotonNumber => "max_photon_number",
            AxisKind::Gamma => "gamma",
        }
    }
}

/// How an axis spaces its points.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Spacing {
    /// Equal steps from `min` to `max`.
    Linear,
    /// Equal ratios from `min` to `max` (requires `min > 0`).
    Log,
}

/// One swept knob.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AxisSpec {
    /// Knob to vary.
    pub kind: AxisKind,
    /// First value.
    pub min: f64,
    /// Last value (equal to `min` when `count` is 1).
    pub max: f64,
    /// Number of points (≥ 1).
    pub count: usize,
    /// Point spacing.
    pub spacing: Spacing,
}

impl AxisSpec {
    /// The `i`-th coordinate of the axis.
    pub fn value(&self, i: usize) -> f64 {
        if self.count <= 1 {
            return self.min;
        }
        let frac = i as f64 / (self.count - 1) as f64;
        match self.spacing {
            Spacing::Linear => self.min + frac * (self.max - self.min),
            Spacing::Log => (self.min.ln() + frac * (self.max.ln() - self.min.ln())).exp(),
        }
    }

    fn validate(&self) -> Result<(), SweepError> {
        let bad = |reason: &str| {
            Err(SweepError::BadAxis {
                name: self.kind.name(),
                reason: String::from(reason),
            })
        };
        if self.count == 0 {
            return bad("count must be at least 1");
        }
        if !self.min.is_finite() || !self.max.is_finite() {
            return bad("bounds must be finite");
        }
        if self.min > self.max {
            return bad("min must not exceed max");
        }
        if matches!(self.spacing, Spacing::Log) && self.min <= 0.0 {
            return bad("log spacing requires min > 0");
        }
        Ok(())
    }
}

/// What to record at each point.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MetricKind {
    /// Group velocity of the single-photon component's sector (m/s).
    GroupVelocity,
    /// Transit delay of the single-photon component's sector (s).
    TransitDelay,
    /// Differential delay between the one- and two-photon components (s).
    DifferentialDelay,
    /// Differential delay over the pulse width (dimensionless).
    SeparationRatio,
    /// Corrected transparency window of the single-photon sector (rad/s).
    TransparencyWindow,
    /// Worst feasibility margin of the scenario.
    WorstMargin,
    /// Output energy fraction of the single-photon component (engine).
    Transmission,
    /// Centroid arrival minus the vacuum transit, single-photon
    /// component (engine) (s).
    MeasuredDelay,
    /// Success of the optimised gate (engine).
    GateSuccess,
    /// Purity of the optimised gate (engine).
    GatePurity,
    /// Contamination of the optimised gate (engine).
    GateContamination,
}

impl MetricKind {
    /// Column name used in tables and CSV output.
    pub fn name(&self) -> &'static str {
        match self {
            MetricKind::GroupVelocity => "group_velocity",
            MetricKind::TransitDelay => "transit_delay",
            MetricKind::DifferentialDelay => "differential_delay",
            MetricKind::SeparationRatio => "separation_ratio",
            MetricKind::TransparencyWindow => "transparency_window",
            MetricKind::WorstMargin => "worst_margin",
            MetricKind::Transmission => "transmission",
            MetricKind::MeasuredDelay => "measured_delay",
            MetricKind::GateSuccess => "gate_success",
            MetricKind::GatePurity => "gate_purity",
            MetricKind::GateContamination => "gate_contamination",
        }
    }

    fn needs_engine(&self) -> bool {
        matches!(
            self,
            MetricKind::Transmission
                | MetricKind::MeasuredDelay
                | MetricKind::GateSuccess
                | MetricKind::GatePurity
                | MetricKind::GateContamination
        )
    }

    fn needs_gate(&self) -> bool {
        matches!(
            self,
            MetricKind::GateSuccess | MetricKind::GatePurity | MetricKind::GateContamination
        )
    }
}

/// A full sweep description.
#[derive(Debug, Clone)]
pub struct SweepPlan {
    /// Scenario every point starts from.
    pub base: Scenario,
    /// Swept axes, outermost first (at most [`MAX_AXES`]).
    pub axes: Vec<AxisSpec>,
    /// Engine used for engine-backed metrics.
    pub engine: Engine,
    /// Metrics recorded per point, in column order.
    pub metrics: Vec<MetricKind>,
    /// Gate search request used by the gate metrics.
    pub gate: GateRequest,
    /// Optional cap tighter than the engine's own point budget.
    pub max_points: Option<usize>,
}

/// Most axes a plan may hold.
pub const MAX_AXES: usize = 3;

/// Point budget for each engine: analytic points are closed-form, the
/// spectral engine runs FFTs, and the time-domain engine runs full
/// integrations.
pub fn engine_point_cap(engine: Engine) -> usize {
    match engine {
        Engine::Analytic => 1_000_000,
        Engine::Spectral => 1_000,
        Engine::TimeDomain => 100,
    }
}

/// Plan-level errors (point-level problems never abort a sweep; they are
/// recorded in the affected row).
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum SweepError {
    /// More than [`MAX_AXES`] axes.
    #[error("a sweep holds at most {MAX_AXES} axes, got {0}")]
    TooManyAxes(usize),
    /// An axis failed validation.
    #[error("axis {name}: {reason}")]
    BadAxis {
        /// Axis column name.
        name: &'static str,
        /// What was wrong.
        reason: String,
    },
    /// The Cartesian product exceeds the budget.
    #[error("sweep spans {total} points, over the cap of {cap}")]
    TooManyPoints {
        /// Requested point count.
        total: usize,
        /// Applicable cap.
        cap: usize,
    },
    /// No metrics requested.
    #[error("a sweep must record at least one metric")]
    NoMetrics,
}

/// One evaluated point.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    /// Per-axis indices of the point.
    pub index: Vec<usize>,
    /// Per-axis coordinate values.
    pub coordinates: Vec<f64>,
    /// One entry per plan metric; `None` where evaluation failed.
    pub values: Vec<Option<f64>>,
    /// Collected failure notes for this point, if any.
    pub error: Option<String>,
}

/// The completed sweep.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepTable {
    /// Axis kinds, in column order.
    pub axes: Vec<AxisKind>,
    /// Metric kinds, in column order.
    pub metrics: Vec<MetricKind>,
    /// Rows in lexicographic index order.
    pub rows: Vec<SweepRow>,
}

/// Number of points the plan spans.
pub fn total_points(plan: &SweepPlan) -> usize {
    plan.axes.iter().map(|a| a.count).product()
}

/// Validate a plan against axis rules and the point budget.
pub fn validate_plan(plan: &SweepPlan) -> Result<(), SweepError> {
    if plan.axes.len() > MAX_AXES {
        return Err(SweepError::TooManyAxes(plan.axes.len()));
    }
    for axis in &plan.axes {
        axis.validate()?;
    }
    if plan.metrics.is_empty() {
        return Err(SweepError::NoMetrics);
    }
    let cap = plan
        .max_points
        .map_or(engine_point_cap(plan.engine), |m| {
            m.min(engine_point_cap(plan.engine))
        });
    let total = total_points(plan);
    if total > cap {
        return Err(SweepError::TooManyPoints { total, cap });
    }
    Ok(())
}

/// Decompose a flat point number into per-axis indices (axis 0 is the
/// outermost digit, so ascending flat order is lexicographic).
pub fn point_index(plan: &SweepPlan, flat: usize) -> Vec<usize> {
    let mut index = alloc::vec![0usize; plan.axes.len()];
    let mut rest = flat;
    for (slot, axis) in index.iter_mut().zip(&plan.axes).rev() {
        *slot = rest % axis.count;
        rest /= axis.count;
    }
    index
}

/// Build the scenario at one point of the plan.
pub fn scenario_at(plan: &SweepPlan, index: &[usize]) -> Result<Scenario, ParamError> {
    let mut medium = plan.base.medium.clone();
    let mut cavity = plan.base.cavity.clone();
    let mut pulse = plan.base.pulse.clone();
    for (axis, &i) in plan.axes.iter().zip(index) {
        let v = axis.value(i);
        match axis.kind {
            AxisKind::VacuumRabi => {
                cavity = CavitySpec::new(v, cavity.kappa, cavity.initial_photons)?;
            }
            AxisKind::CavityDecay => {
                cavity = CavitySpec::new(cavity.vacuum_rabi, v, cavity.initial_photons)?;
            }
            AxisKind::OpticalDepth => {
                medium = MediumSpec::from_macroscopic_at(
                    v,
                    medium.gamma,
                    medium.length,
                    medium.atom_count,
                    medium.light_speed,
                )?;
            }
            AxisKind::Gamma => {
                let depth = medium.derive().optical_depth;
                medium = MediumSpec::from_macroscopic_at(
                    depth,
                    v,
                    medium.length,
                    medium.atom_count,
                    medium.light_speed,
                )?;
            }
            AxisKind::PulseWidth => {
                pulse = ProbePulse::new(pulse.shape.clone(), v, pulse.amplitudes.clone())?;
            }
            AxisKind::MaxPhotonNumber => {
                let n = v.round().max(1.0) as usize;
                let weight = C64::new((1.0 / n as f64).sqrt(), 0.0);
                let mut amplitudes = alloc::vec![C64::new(0.0, 0.0)];
                amplitudes.resize(n + 1, weight);
                pulse = ProbePulse::new(pulse.shape.clone(), pulse.width, amplitudes)?;
            }
        }
    }
    Scenario::new(medium, cavity, pulse, plan.base.numerics.clone())
}

/// Evaluate one point. Never fails: problems land in the row's `error`
/// and the affected metrics read `None`.
pub fn evaluate_point(plan: &SweepPlan, index: &[usize]) -> SweepRow {
    let coordinates: Vec<f64> = plan
        .axes
        .iter()
        .zip(index)
        .map(|(a, &i)| a.value(i))
        .collect();
    let mut notes: Vec<String> = Vec::new();

    let scenario = match scenario_at(plan, index) {
        Ok(s) => s,
        Err(e) => {
            return SweepRow {
                index: index.to_vec(),
                coordinates,
                values: alloc::vec![None; plan.metrics.len()],
                error: Some(e.to_string()),
            };
        }
    };

    // engine-backed inputs, built lazily and shared across metrics
    let needs_engine = plan.metrics.iter().any(MetricKind::needs_engine);
    let state: Option<OutputState> = if needs_engine {
        match assemble(&scenario, plan.engine) {
            Ok(s) => Some(s),
            Err(e) => {
                notes.push(e.to_string());
                None
            }
        }
    } else {
        None
    };
    let needs_gate = plan.metrics.iter().any(MetricKind::needs_gate);
    let gate = if needs_gate {
        state.as_ref().and_then(|s| match optimize_gate(s, &plan.gate) {
            Ok(g) => Some(g),
            Err(e) => {
                notes.push(e.to_string());
                None
            }
        })
    } else {
        None
    };

    let sector = scenario.sector_of_component(1);
    let medium = &scenario.medium;
    let cavity = &scenario.cavity;
    fn single(state: &OutputState) -> Result<&crate::fock::FockComponent, FockError> {
        state.component(1).ok_or(FockError::MissingComponent(1))
    }

    let values = plan
        .metrics
        .iter()
        .map(|metric| match metric {
            MetricKind::GroupVelocity => Some(group_velocity(medium, cavity, sector)),
            MetricKind::TransitDelay => Some(transit_delay(medium, cavity, sector)),
            MetricKind::DifferentialDelay => {
                Some(differential_delay(medium, cavity, sector))
            }
            MetricKind::SeparationRatio => {
                Some(differential_delay(medium, cavity, sector) / scenario.pulse.width)
            }
            MetricKind::TransparencyWindow => {
                Some(transparency_window(medium, cavity, sector).corrected)
            }
            MetricKind::WorstMargin => {
                Some(feasibility(&scenario, &FeasibilityThresholds::default()).worst_margin)
            }
            MetricKind::Transmission => state.as_ref().and_then(|s| match single(s) {
                Ok(c) => Some(c.envelope.energy()),
                Err(e) => {
                    notes.push(e.to_string());
                    None
                }
            }),
            MetricKind::MeasuredDelay => state.as_ref().and_then(|s| match single(s) {
                Ok(c) => match c.envelope.centroid() {
                    Ok(t) => Some(t - medium.length / medium.light_speed),
                    Err(e) => {
                        notes.push(e.to_string());
                        None
                    }
                },
                Err(e) => {
                    notes.push(e.to_string());
                    None
                }
            }),
            MetricKind::GateSuccess => gate.as_ref().map(|(_, m)| m.success),
            MetricKind::GatePurity => gate.as_ref().map(|(_, m)| m.purity),
            MetricKind::GateContamination => gate.as_ref().map(|(_, m)| m.contamination),
        })
        .collect();

    notes.dedup();
    SweepRow {
        index: index.to_vec(),
        coordinates,
        values,
        error: if notes.is_empty() {
            None
        } else {
            Some(notes.join("; "))
        },
    }
}

/// Run the whole plan serially, in lexicographic point order.
pub fn run_sweep(plan: &SweepPlan) -> Result<SweepTable, SweepError> {
    validate_plan(plan)?;
    let total = total_points(plan);
    let mut rows = Vec::with_capacity(total);
    for flat in 0..total {
        let index = point_index(plan, flat);
        rows.push(evaluate_point(plan, &index));
    }
    Ok(SweepTable {
        axes: plan.axes.iter().map(|a| a.kind).collect(),
        metrics: plan.metrics.clone(),
        rows,
    })
}

fn csv_field(raw: &str) -> String {
    if raw.contains(',') || raw.contains('"') || raw.contains('\n') {
        let mut out = String::with_capacity(raw.len() + 2);
        out.push('"');
        for ch in raw.chars() {
            if ch == '"' {
                out.push('"');
            }
            out.push(ch);
        }
        out.push('"');
        out
    } else {
        String::from(raw)
    }
}

/// Render a table as CSV: axis columns, metric columns, then an `error`
/// column. Floats print in shortest round-trip form, absent values print
/// empty, and error text is quoted when it needs to be.
pub fn to_csv(table: &SweepTable) -> String {
    let mut out = String::new();
    let mut header: Vec<&str> = table.axes.iter().map(|a| a.name()).collect();
    header.extend(table.metrics.iter().map(|m| m.name()));
    header.push("error");
    out.push_str(&header.join(","));
    out.push('\n');
    for row in &table.rows {
        let mut fields: Vec<String> = Vec::with_capacity(header.len());
        for c in &row.coordinates {
            fields.push(alloc::format!("{c}"));
        }
        for v in &row.values {
            fields.push(match v {
                Some(x) => alloc::format!("{x}"),
                None => String::new(),
            });
        }
        fields.push(match &row.error {
            Some(e) => csv_field(e),
            None => String::new(),
        });
        out.push_str(&fields.join(","));
        out.push('\n');
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::params::{NumericsSpec, PulseShape};
    use alloc::vec;

    fn base_scenario() -> Scenario {
        let medium = MediumSpec::new(24.0_f64.sqrt(), 1.0, 1.0, 1.0)
            .unwrap()
            .with_light_speed(1.0)
            .unwrap();
        let cavity = CavitySpec::new(1.0, 0.5, 0).unwrap();
        let inv = C64::new(core::f64::consts::FRAC_1_SQRT_2, 0.0);
        let pulse =
            ProbePulse::new(PulseShape::Gaussian, 1.0, vec![C64::new(0.0, 0.0), inv, inv])
                .unwrap();
        Scenario::new(medium, cavity, pulse, NumericsSpec::default()).unwrap()
    }

    fn plan(axes: Vec<AxisSpec>, metrics: Vec<MetricKind>) -> SweepPlan {
        SweepPlan {
            base: base_scenario(),
            axes,
            engine: Engine::Analytic,
            metrics,
            gate: GateRequest::default(),
            max_points: None,
        }
    }

    #[test]
    fn axis_spacing_hits_endpoints() {
        let lin = AxisSpec {
            kind: AxisKind::VacuumRabi,
            min: 1.0,
            max: 5.0,
            count: 5,
            spacing: Spacing::Linear,
        };
        for (i, want) in [1.0, 2.0, 3.0, 4.0, 5.0].iter().enumerate() {
            assert!((lin.value(i) - want).abs() < 1e-12);
        }
        let log = AxisSpec {
            kind: AxisKind::OpticalDepth,
            min: 1.0,
            max: 100.0,
            count: 3,
            spacing: Spacing::Log,
        };
        for (i, want) in [1.0, 10.0, 100.0].iter().enumerate() {
            assert!((log.value(i) - want).abs() < 1e-12 * want);
        }
        let single = AxisSpec {
            kind: AxisKind::Gamma,
            min: 7.0,
            max: 7.0,
            count: 1,
            spacing: Spacing::Linear,
        };
        assert_eq!(single.value(0), 7.0);
    }

    #[test]
    fn plan_validation_catches_misuse() {
        let axis = AxisSpec {
            kind: AxisKind::VacuumRabi,
            min: 1.0,
            max: 2.0,
            count: 2,
            spacing: Spacing::Linear,
        };
        let too_many = plan(vec![axis; 4], vec![MetricKind::TransitDelay]);
        assert!(matches!(
            validate_plan(&too_many),
            Err(SweepError::TooManyAxes(4))
        ));

        let no_metrics = plan(vec![axis], vec![]);
        assert!(matches!(validate_plan(&no_metrics), Err(SweepError::NoMetrics)));

        let mut log_bad = axis;
        log_bad.min = -1.0;
        log_bad.max = 1.0;
        log_bad.spacing = Spacing::Log;
        let bad = plan(vec![log_bad], vec![MetricKind::TransitDelay]);
        assert!(matches!(validate_plan(&bad), Err(SweepError::BadAxis { .. })));

        let mut wide = axis;
        wide.count = 2000;
        let mut over = plan(vec![wide], vec![MetricKind::Transmission]);
        over.engine = Engine::Spectral;
        assert!(matches!(
            validate_plan(&over),
            Err(SweepError::TooManyPoints { total: 2000, cap: 1000 })
        ));

        let capped = SweepPlan {
            max_points: Some(10),
            ..plan(vec![wide], vec![MetricKind::TransitDelay])
        };
        assert!(matches!(
            validate_plan(&capped),
            Err(SweepError::TooManyPoints { total: 2000, cap: 10 })
        ));
    }

    #[test]
    fn lexicographic_order_and_closed_forms() {
        let axes = vec![
            AxisSpec {
                kind: AxisKind::VacuumRabi,
                min: 1.0,
                max: 2.0,
                count: 2,
                spacing: Spacing::Linear,
            },
            AxisSpec {
                kind: AxisKind::OpticalDepth,
                min: 10.0,
                max: 30.0,
                count: 3,
                spacing: Spacing::Linear,
            },
        ];
        let plan = plan(axes, vec![MetricKind::TransitDelay, MetricKind::SeparationRatio]);
        let table = run_sweep(&plan).unwrap();
        assert_eq!(table.rows.len(), 6);
        let expected_order = [
            [0, 0],
            [0, 1],
            [0, 2],
            [1, 0],
            [1, 1],
            [1, 2],
        ];
        for (row, want) in table.rows.iter().zip(&expected_order) {
            assert_eq!(row.index.as_slice(), want.as_slice());
            assert!(row.error.is_none());
            let (g, od) = (row.coordinates[0], row.coordinates[1]);
            // sector 1: τ = OD·Γ/(2G²); Δτ between sectors 1 and 2:
            // OD·Γ/(2·3·G²); Γ = 1, T = 1
            let tau = row.values[0].unwrap();
            let sep = row.values[1].unwrap();
            assert!((tau - od / (2.0 * g * g)).abs() < 1e-12 * tau);
            assert!((sep - od / (6.0 * g * g)).abs() < 1e-12 * sep);
        }
        // re-running reproduces the table exactly
        assert_eq!(run_sweep(&plan).unwrap(), table);
    }

    #[test]
    fn rows_match_evaluate_point() {
        let axes = vec![AxisSpec {
            kind: AxisKind::PulseWidth,
            min: 0.5,
            max: 2.0,
            count: 4,
            spacing: Spacing::Linear,
        }];
        let plan = plan(
            axes,
            vec![MetricKind::SeparationRatio, MetricKind::WorstMargin],
        );
        let table = run_sweep(&plan).unwrap();
        for (flat, row) in table.rows.iter().enumerate() {
            let index = point_index(&plan, flat);
            assert_eq!(evaluate_point(&plan, &index), *row);
        }
    }

    #[test]
    fn flat_superposition_axis_rebuilds_the_pulse() {
        let axes = vec![AxisSpec {
            kind: AxisKind::MaxPhotonNumber,
            min: 1.0,
            max: 3.0,
            count: 3,
            spacing: Spacing::Linear,
        }];
        let plan = plan(axes, vec![MetricKind::TransitDelay]);
        let scenario = scenario_at(&plan, &[2]).unwrap();
        assert_eq!(scenario.pulse.n_max(), 3);
        let w = (1.0_f64 / 3.0).sqrt();
        for n in 1..=3 {
            assert!((scenario.pulse.amplitude(n).norm() - w).abs() < 1e-12);
        }
        assert_eq!(scenario.pulse.amplitude(0).norm(), 0.0);
        let one = scenario_at(&plan, &[0]).unwrap();
        assert_eq!(one.pulse.n_max(), 1);
        assert!((one.pulse.amplitude(1).norm() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn point_failures_stay_in_their_rows() {
        // OD = 1e9 at this pulse width wants a grid beyond the hard cap,
        // so its scenario cannot be built; the first point must survive
        let axes = vec![AxisSpec {
            kind: AxisKind::OpticalDepth,
            min: 24.0,
            max: 1e9,
            count: 2,
            spacing: Spacing::Linear,
        }];
        let plan = plan(axes, vec![MetricKind::TransitDelay, MetricKind::Transmission]);
        let table = run_sweep(&plan).unwrap();
        assert_eq!(table.rows.len(), 2);
        assert!(table.rows[0].error.is_none());
        assert!(table.rows[0].values.iter().all(Option::is_some));
        assert!(table.rows[1].error.is_some());
        assert!(table.rows[1].values.iter().all(Option::is_none));
    }

    #[test]
    fn csv_renders_headers_gaps_and_quoting() {
        let table = SweepTable {
            axes: vec![AxisKind::VacuumRabi],
            metrics: vec![MetricKind::TransitDelay, MetricKind::GatePurity],
            rows: vec![
                SweepRow {
                    index: vec![0],
                    coordinates: vec![0.1],
                    values: vec![Some(12.0), None],
                    error: Some(String::from("gate: no window, really")),
                },
                SweepRow {
                    index: vec![1],
                    coordinates: vec![2.0],
                    values: vec![Some(f64::INFINITY), Some(0.25)],
                    error: None,
                },
            ],
        };
        let csv = to_csv(&table);
        let mut lines = csv.lines();
        assert_eq!(
            lines.next().unwrap(),
            "vacuum_rabi,transit_delay,gate_purity,error"
        );
        assert_eq!(
            lines.next().unwrap(),
            "0.1,12,,\"gate: no window, really\""
        );
        assert_eq!(lines.next().unwrap(), "2,inf,0.25,");
        assert!(lines.next().is_none());
    }

    #[test]
    fn gate_metrics_flow_through_rows() {
        let axes = vec![AxisSpec {
            kind: AxisKind::OpticalDepth,
            min: 24.0,
            max: 24.0,
            count: 1,
            spacing: Spacing::Linear,
        }];
        let mut p = plan(
            axes,
            vec![
                MetricKind::GateSuccess,
                MetricKind::GatePurity,
                MetricKind::GateContamination,
            ],
        );
        p.gate = GateRequest {
            min_success: 0.5,
            target: 1,
            resolution: 128,
        };
        let table = run_sweep(&p).unwrap();
        let row = &table.rows[0];
        assert!(row.error.is_none());
        let success = row.values[0].unwrap();
        let purity = row.values[1].unwrap();
        assert!(success >= 0.5);
        assert!(purity > 0.9);
    }
}
