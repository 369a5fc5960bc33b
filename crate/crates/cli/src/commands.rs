//! Subcommand implementations.
//!
//! Every command follows the same shape: build the scenario from a
//! [`RunConfig`], run the requested analysis in `cit-core`, then emit a
//! human summary to stdout (or the JSON report with `--json`) plus any
//! data files. Commands that exist to produce data (`propagate`,
//! `solve-td`, `filter`, `sweep`) always write files, defaulting to the
//! current directory; the purely informational ones (`delay`,
//! `feasibility`, `presets`) write their JSON report only when an output
//! directory is given explicitly.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicUsize, Ordering};

use cit_core::analytic::{
    differential_delay, feasibility, group_velocity, group_velocity_simplified, transit_delay,
    transparency_window, FeasibilityThresholds, Verdict,
};
use cit_core::fock::{assemble, optimize_gate, Engine, FockError, GateRequest};
use cit_core::spectral::{
    measure_delay, measure_transmission, propagate, PropagateOptions, TransferSpec,
};
use cit_core::sweep::{evaluate_point, point_index, to_csv, total_points, SweepRow, SweepTable};
use cit_core::timedomain::{solve, InitialCondition, SolveMode, TdOptions};
use rayon::prelude::*;
use serde_json::json;

use crate::config::{engine_name, RunConfig};
use crate::error::CliError;
use crate::presets;
use crate::report::{
    self, boundary_csv, envelope_csv, json_f64, occupation_csv, snapshots_csv, sweep_jsonl,
    Report,
};

/// Where and how a command talks to the outside world.
#[derive(Debug, Clone)]
pub struct Io {
    /// Output directory, when one was given (flag or environment).
    pub out: Option<PathBuf>,
    /// Print the JSON report to stdout instead of the human summary.
    pub json: bool,
}

impl Io {
    /// Directory for commands that always write data files.
    fn data_dir(&self) -> PathBuf {
        self.out.clone().unwrap_or_else(|| PathBuf::from("."))
    }

    /// Write one file atomically, creating the directory if needed.
    fn write_file(&self, dir: &Path, name: &str, contents: &str) -> Result<PathBuf, CliError> {
        std::fs::create_dir_all(dir).map_err(|e| {
            CliError::runtime(format!("cannot create output directory {}: {e}", dir.display()))
        })?;
        let path = dir.join(name);
        report::write_atomic(&path, contents)
            .map_err(|e| CliError::runtime(format!("cannot write {}: {e}", path.display())))?;
        Ok(path)
    }

    /// Print the report (JSON or human), write it to `json_file` when a
    /// directory applies, and surface warnings on stderr.
    fn emit(
        &self,
        report: &Report,
        human: &str,
        json_target: Option<(&Path, &str)>,
    ) -> Result<(), CliError> {
        for w in &report.warnings {
            eprintln!("warning: {w}");
        }
        let mut trailer = String::new();
        if let Some((dir, name)) = json_target {
            let path = self.write_file(dir, name, &report.to_text())?;
            let _ = writeln!(trailer, "wrote {}", path.display());
        }
        if self.json {
            print!("{}", report.to_text());
        } else {
            print!("{human}{trailer}");
        }
        Ok(())
    }
}

fn verdict_name(v: Verdict) -> &'static str {
    match v {
        Verdict::Feasible => "feasible",
        Verdict::Marginal => "marginal",
        Verdict::Infeasible => "infeasible",
    }
}

/// Map a Fock-layer failure onto an exit class: malformed requests are
/// validation problems, everything that happens while computing is a
/// runtime failure.
fn fock_error(e: FockError) -> CliError {
    match e {
        FockError::Param(_)
        | FockError::ClosedFormRequired
        | FockError::NoPropagatingComponent
        | FockError::MissingComponent(_)
        | FockError::BadGate { .. }
        | FockError::BadSuccessFloor(_) => CliError::validation(e),
        FockError::Spectral(_) | FockError::Solve(_) | FockError::Envelope(_) => {
            CliError::runtime(e)
        }
        FockError::NoFeasibleGate { .. } => CliError::runtime(e),
    }
}

// ---------------------------------------------------------------- delay --

/// Tabulate per-sector group velocities, delays, and windows.
pub fn delay(config: &RunConfig, n_max: Option<u32>, io: &Io) -> Result<(), CliError> {
    let scenario = config.to_scenario()?;
    let medium = &scenario.medium;
    let cavity = &scenario.cavity;
    let top = n_max.unwrap_or_else(|| scenario.pulse.n_max());
    let vacuum_transit = medium.length / medium.light_speed;

    let mut warnings = Vec::new();
    let mut sectors = Vec::new();
    let mut human = String::new();
    let _ = writeln!(
        human,
        "sector delays (vacuum transit {:.4e} s)",
        vacuum_transit
    );
    let _ = writeln!(
        human,
        "{:>3} {:>13} {:>13} {:>13} {:>13} {:>13} {:>13}",
        "n", "Omega [rad/s]", "v [m/s]", "v_simp [m/s]", "tau [s]", "dtau [s]", "win [rad/s]"
    );
    for n in 0..=top {
        let rabi = cavity.sector_rabi(n);
        let v = group_velocity(medium, cavity, n);
        let simp = group_velocity_simplified(medium, cavity, n);
        let tau = transit_delay(medium, cavity, n);
        let dtau = differential_delay(medium, cavity, n);
        let window = transparency_window(medium, cavity, n);
        if !simp.is_reliable() {
            warnings.push(format!(
                "sector {n}: atom dominance g2N/Omega2 = {:.3} is below 10; the simplified \
                 velocity overshoots by {:.1}%",
                simp.dominance,
                100.0 * simp.relative_error()
            ));
        }
        let _ = writeln!(
            human,
            "{:>3} {:>13.4e} {:>13.4e} {:>13.4e} {:>13.4e} {:>13.4e} {:>13.4e}",
            n, rabi, v, simp.speed, tau, dtau, window.corrected
        );
        sectors.push(json!({
            "n": n,
            "rabi_rad_per_s": json_f64(rabi),
            "group_velocity_m_per_s": json_f64(v),
            "simplified_velocity_m_per_s": json_f64(simp.speed),
            "atom_dominance": json_f64(simp.dominance),
            "simplified_reliable": simp.is_reliable(),
            "transit_delay_s": json_f64(tau),
            "differential_delay_s": json_f64(dtau),
            "window_corrected_rad_per_s": json_f64(window.corrected),
            "window_paper_form_rad_per_s": json_f64(window.paper_form),
        }));
    }
    let _ = writeln!(
        human,
        "dtau row n is the arrival gap between sectors n and n+1"
    );

    let report = Report {
        command: "delay",
        config_text: config.canonical_text(),
        results: json!({
            "vacuum_transit_s": json_f64(vacuum_transit),
            "optical_depth": json_f64(medium.derive().optical_depth),
            "sectors": sectors,
        }),
        warnings,
    };
    io.emit(&report, &human, io.out.as_deref().map(|d| (d, "delay.json")))
}

// ---------------------------------------------------------- feasibility --

/// Check an operating point against the design gates.
pub fn feasibility_cmd(
    config: &RunConfig,
    strong_ratio: Option<f64>,
    marginal_floor: Option<f64>,
    io: &Io,
) -> Result<(), CliError> {
    let scenario = config.to_scenario()?;
    let defaults = FeasibilityThresholds::default();
    let thresholds = FeasibilityThresholds {
        strong_ratio: strong_ratio.unwrap_or(defaults.strong_ratio),
        marginal_floor: marginal_floor.unwrap_or(defaults.marginal_floor),
        ..defaults
    };
    if thresholds.strong_ratio < 1.0 {
        return Err(CliError::validation(
            "strong-ratio must be at least 1".to_string(),
        ));
    }
    if !(0.0..1.0).contains(&thresholds.marginal_floor) {
        return Err(CliError::validation(
            "marginal-floor must lie in [0, 1)".to_string(),
        ));
    }
    let verdict_report = feasibility(&scenario, &thresholds);

    let mut human = String::new();
    let mut conditions = Vec::new();
    for c in &verdict_report.conditions {
        let status = if c.satisfied { "ok  " } else { "FAIL" };
        let _ = writeln!(human, "{status} {:<16} margin {:>10.4}", c.name, c.margin);
        for q in &c.quantities {
            let _ = writeln!(human, "       {} = {:.4e}", q.label, q.value);
        }
        if let Some(note) = &c.note {
            let _ = writeln!(human, "       note: {note}");
        }
        conditions.push(json!({
            "name": c.name,
            "satisfied": c.satisfied,
            "margin": json_f64(c.margin),
            "quantities": c.quantities.iter().map(|q| json!({
                "label": q.label,
                "value": json_f64(q.value),
            })).collect::<Vec<_>>(),
            "note": c.note,
        }));
    }
    let _ = writeln!(
        human,
        "verdict: {} (worst margin {:.4})",
        verdict_name(verdict_report.verdict),
        verdict_report.worst_margin
    );

    let warnings: Vec<String> = verdict_report
        .conditions
        .iter()
        .filter(|c| !c.satisfied)
        .map(|c| format!("condition {} fails with margin {:.4}", c.name, c.margin))
        .collect();
    let report = Report {
        command: "feasibility",
        config_text: config.canonical_text(),
        results: json!({
            "thresholds": {
                "strong_ratio": thresholds.strong_ratio,
                "marginal_floor": thresholds.marginal_floor,
            },
            "conditions": conditions,
            "worst_margin": json_f64(verdict_report.worst_margin),
            "verdict": verdict_name(verdict_report.verdict),
        }),
        warnings,
    };
    io.emit(
        &report,
        &human,
        io.out.as_deref().map(|d| (d, "feasibility.json")),
    )
}

// ------------------------------------------------------------ propagate --

/// Propagate one photon-number sector through the medium spectrally.
pub fn propagate_cmd(
    config: &RunConfig,
    sector: Option<u32>,
    carrier_offset: f64,
    io: &Io,
) -> Result<(), CliError> {
    let scenario = config.to_scenario()?;
    let sector = sector.unwrap_or_else(|| scenario.sector_of_component(1));
    let input = scenario
        .input_envelope()
        .map_err(CliError::validation)?;
    let spec = TransferSpec::new(&scenario.medium, &scenario.cavity, sector);
    let options = PropagateOptions { carrier_offset };
    let output = propagate(&spec, &input, &options).map_err(CliError::runtime)?;

    let vacuum_transit = scenario.medium.length / scenario.medium.light_speed;
    let measured = measure_delay(&input, &output, vacuum_transit).map_err(CliError::runtime)?;
    let predicted = spec.predicted_delay() - vacuum_transit;
    let transmission = measure_transmission(&input, &output).map_err(CliError::runtime)?;

    let dir = io.data_dir();
    let input_csv = io.write_file(&dir, "propagate_input.csv", &envelope_csv(&input))?;
    let output_csv = io.write_file(&dir, "propagate_output.csv", &envelope_csv(&output))?;

    let mut human = String::new();
    let _ = writeln!(
        human,
        "sector {sector}: OD {:.4}, Omega {:.4e} rad/s",
        spec.optical_depth(),
        scenario.cavity.sector_rabi(sector)
    );
    let _ = writeln!(
        human,
        "delay beyond vacuum transit: predicted {:.4e} s, measured {:.4e} s",
        predicted, measured
    );
    let _ = writeln!(human, "energy transmission: {:.6}", transmission);
    let _ = writeln!(human, "wrote {}", input_csv.display());
    let _ = writeln!(human, "wrote {}", output_csv.display());

    let report = Report {
        command: "propagate",
        config_text: config.canonical_text(),
        results: json!({
            "sector": sector,
            "optical_depth": json_f64(spec.optical_depth()),
            "carrier_offset_rad_per_s": json_f64(carrier_offset),
            "vacuum_transit_s": json_f64(vacuum_transit),
            "predicted_delay_s": json_f64(predicted),
            "measured_delay_s": json_f64(measured),
            "transmission": json_f64(transmission),
            "files": {
                "input": "propagate_input.csv",
                "output": "propagate_output.csv",
            },
        }),
        warnings: Vec::new(),
    };
    io.emit(&report, &human, Some((&dir, "propagate.json")))
}

// ------------------------------------------------------------- solve-td --

/// Options collected from `solve-td` flags.
#[derive(Debug, Clone, Default)]
pub struct SolveTdArgs {
    /// Pin the cavity to this sector (conflicts with `dynamic`).
    pub sector: Option<u32>,
    /// Let the cavity occupation follow the probe.
    pub dynamic: bool,
    /// Override the spatial resolution.
    pub z_cells: Option<usize>,
    /// Override the integration span (seconds).
    pub duration: Option<f64>,
    /// Number of recorded medium snapshots.
    pub snapshots: Option<usize>,
    /// Photon content scale of the run.
    pub photons_in: Option<f64>,
    /// Start from a polariton already inside: `center,width` fractions.
    pub preload: Option<String>,
}

fn parse_preload(text: &str) -> Result<InitialCondition, CliError> {
    let (c, w) = text.split_once(',').ok_or_else(|| {
        CliError::validation(format!(
            "preload must be `center,width` fractions of the length, got `{text}`"
        ))
    })?;
    let center_fraction: f64 = c
        .trim()
        .parse()
        .map_err(|_| CliError::validation(format!("preload center `{c}` is not a number")))?;
    let width_fraction: f64 = w
        .trim()
        .parse()
        .map_err(|_| CliError::validation(format!("preload width `{w}` is not a number")))?;
    Ok(InitialCondition::Preloaded {
        center_fraction,
        width_fraction,
    })
}

/// Integrate the driven medium in the time domain.
pub fn solve_td(config: &RunConfig, args: &SolveTdArgs, io: &Io) -> Result<(), CliError> {
    let scenario = config.to_scenario()?;
    let mode = if args.dynamic {
        SolveMode::DynamicFilling
    } else {
        SolveMode::FixedSector {
            sector: args
                .sector
                .unwrap_or_else(|| scenario.sector_of_component(1)),
        }
    };
    let initial = match &args.preload {
        Some(text) => parse_preload(text)?,
        None => InitialCondition::Empty,
    };
    let options = TdOptions {
        z_cells: args.z_cells,
        duration: args.duration,
        snapshots: args.snapshots,
        photons_in: args.photons_in,
        initial,
    };
    let result = solve(&scenario, mode, &options).map_err(CliError::runtime)?;
    let audit = result.conservation_audit();

    let dir = io.data_dir();
    let boundary = io.write_file(&dir, "solve_td_boundary.csv", &boundary_csv(&result))?;
    let snaps = io.write_file(&dir, "solve_td_snapshots.csv", &snapshots_csv(&result))?;
    let occupation = match occupation_csv(&result) {
        Some(csv) => Some(io.write_file(&dir, "solve_td_occupation.csv", &csv)?),
        None => None,
    };

    let steps = result.record_len().saturating_sub(1);
    let cells = ((scenario.medium.length / result.z_step).round()) as usize;
    let mode_name = match mode {
        SolveMode::FixedSector { .. } => "fixed-sector",
        SolveMode::DynamicFilling => "dynamic",
    };

    let mut human = String::new();
    match mode {
        SolveMode::FixedSector { sector } => {
            let _ = writeln!(
                human,
                "time-domain run: fixed sector {sector}, {steps} steps, {cells} cells"
            );
        }
        SolveMode::DynamicFilling => {
            let _ = writeln!(
                human,
                "time-domain run: dynamic filling, {steps} steps, {cells} cells"
            );
        }
    }
    let _ = writeln!(human, "  photons in     {:.6e}", result.photons_in);
    let _ = writeln!(human, "  entered        {:.6e}", audit.entered);
    let _ = writeln!(human, "  transmitted    {:.6e}", audit.transmitted);
    let _ = writeln!(human, "  scattered      {:.6e}", audit.scattered);
    let _ = writeln!(human, "  remaining      {:.6e}", audit.remaining);
    let _ = writeln!(human, "  drift          {:.3e}", audit.drift);
    let _ = writeln!(human, "  max residual   {:.3e}", audit.max_residual);
    let _ = writeln!(human, "wrote {}", boundary.display());
    let _ = writeln!(human, "wrote {}", snaps.display());
    if let Some(p) = &occupation {
        let _ = writeln!(human, "wrote {}", p.display());
    }

    let mut warnings = Vec::new();
    if audit.drift > 1e-3 {
        warnings.push(format!(
            "conservation drift {:.3e} exceeds 1e-3; refine z_cells or shorten the step",
            audit.drift
        ));
    }

    let mut files = json!({
        "boundary": "solve_td_boundary.csv",
        "snapshots": "solve_td_snapshots.csv",
    });
    if occupation.is_some() {
        files["occupation"] = json!("solve_td_occupation.csv");
    }
    let sector_value = match mode {
        SolveMode::FixedSector { sector } => json!(sector),
        SolveMode::DynamicFilling => serde_json::Value::Null,
    };
    let report = Report {
        command: "solve-td",
        config_text: config.canonical_text(),
        results: json!({
            "mode": mode_name,
            "sector": sector_value,
            "steps": steps,
            "z_cells": cells,
            "time_step_s": json_f64(result.time_step),
            "z_step_m": json_f64(result.z_step),
            "photons_in": json_f64(result.photons_in),
            "audit": {
                "initial": json_f64(audit.initial),
                "entered": json_f64(audit.entered),
                "transmitted": json_f64(audit.transmitted),
                "scattered": json_f64(audit.scattered),
                "remaining": json_f64(audit.remaining),
                "drift": json_f64(audit.drift),
                "max_residual": json_f64(audit.max_residual),
            },
            "files": files,
        }),
        warnings,
    };
    io.emit(&report, &human, Some((&dir, "solve_td.json")))
}

// --------------------------------------------------------------- filter --

/// Find the best time gate for one photon number.
pub fn filter(
    config: &RunConfig,
    target: u32,
    engine: Engine,
    min_success: f64,
    resolution: usize,
    io: &Io,
) -> Result<(), CliError> {
    let scenario = config.to_scenario()?;
    let state = assemble(&scenario, engine).map_err(fock_error)?;
    let request = GateRequest {
        min_success,
        target,
        resolution,
    };
    let (gate, metrics) = optimize_gate(&state, &request).map_err(fock_error)?;

    let dir = io.data_dir();
    let mut human = String::new();
    let _ = writeln!(
        human,
        "best gate for n = {target} ({} engine)",
        engine_name(engine)
    );
    let _ = writeln!(
        human,
        "  open {:.6e} s  close {:.6e} s  width {:.6e} s",
        gate.open,
        gate.close,
        gate.width()
    );
    let _ = writeln!(
        human,
        "  success {:.6}  purity {:.6}  contamination {:.3e}  vacuum weight {:.3e}",
        metrics.success, metrics.purity, metrics.contamination, metrics.vacuum_weight
    );
    let captured: Vec<String> = metrics
        .captured
        .iter()
        .map(|(n, p)| format!("n={n}: {p:.6}"))
        .collect();
    let _ = writeln!(human, "  captured: {}", captured.join(", "));

    let mut component_files = Vec::new();
    for comp in &state.components {
        let name = format!("filter_component_{}.csv", comp.photon_number);
        let path = io.write_file(&dir, &name, &envelope_csv(&comp.envelope))?;
        let _ = writeln!(human, "wrote {}", path.display());
        component_files.push(json!({
            "n": comp.photon_number,
            "sector": comp.sector,
            "amplitude_re": json_f64(comp.amplitude.re),
            "amplitude_im": json_f64(comp.amplitude.im),
            "predicted_delay_s": json_f64(comp.predicted_delay),
            "csv": name,
        }));
    }

    let report = Report {
        command: "filter",
        config_text: config.canonical_text(),
        results: json!({
            "engine": engine_name(engine),
            "target": target,
            "gate": {
                "open_s": json_f64(gate.open),
                "close_s": json_f64(gate.close),
                "width_s": json_f64(gate.width()),
            },
            "metrics": {
                "success": json_f64(metrics.success),
                "contamination": json_f64(metrics.contamination),
                "purity": json_f64(metrics.purity),
                "vacuum_weight": json_f64(metrics.vacuum_weight),
                "captured": metrics.captured.iter().map(|(n, p)| json!({
                    "n": n,
                    "probability": json_f64(*p),
                })).collect::<Vec<_>>(),
            },
            "components": component_files,
        }),
        warnings: Vec::new(),
    };
    io.emit(&report, &human, Some((&dir, "filter.json")))
}

// ---------------------------------------------------------------- sweep --

/// Output formats for sweep tables.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SweepFormat {
    /// `sweep.csv` only.
    Csv,
    /// `sweep.jsonl` only.
    Jsonl,
    /// Both files.
    Both,
}

/// Evaluate metrics over the configured parameter grid.
pub fn sweep(
    config: &RunConfig,
    serial: bool,
    format: SweepFormat,
    io: &Io,
) -> Result<(), CliError> {
    let plan = config.to_sweep_plan()?;
    let total = total_points(&plan);
    eprintln!(
        "sweep: {total} points over {} axis(es), {} engine",
        plan.axes.len(),
        engine_name(plan.engine)
    );

    let done = AtomicUsize::new(0);
    let stride = (total / 20).max(1);
    let work = |flat: usize| -> SweepRow {
        let index = point_index(&plan, flat);
        let row = evaluate_point(&plan, &index);
        let k = done.fetch_add(1, Ordering::Relaxed) + 1;
        if k % stride == 0 || k == total {
            eprintln!("sweep: {k}/{total}");
        }
        row
    };
    let mut rows: Vec<SweepRow> = if serial {
        (0..total).map(work).collect()
    } else {
        (0..total).into_par_iter().map(work).collect()
    };
    // identical row order either way: points are generated by flat index
    rows.sort_by(|a, b| a.index.cmp(&b.index));
    let table = SweepTable {
        axes: plan.axes.iter().map(|a| a.kind).collect(),
        metrics: plan.metrics.clone(),
        rows,
    };
    let failed = table.rows.iter().filter(|r| r.error.is_some()).count();

    let dir = io.data_dir();
    let mut human = String::new();
    let mut files = serde_json::Map::new();
    if matches!(format, SweepFormat::Csv | SweepFormat::Both) {
        let path = io.write_file(&dir, "sweep.csv", &to_csv(&table))?;
        let _ = writeln!(human, "wrote {}", path.display());
        files.insert("csv".into(), json!("sweep.csv"));
    }
    if matches!(format, SweepFormat::Jsonl | SweepFormat::Both) {
        let path = io.write_file(&dir, "sweep.jsonl", &sweep_jsonl(&table))?;
        let _ = writeln!(human, "wrote {}", path.display());
        files.insert("jsonl".into(), json!("sweep.jsonl"));
    }
    let _ = writeln!(human, "{total} points evaluated, {failed} failed");

    let mut warnings = Vec::new();
    if failed > 0 {
        warnings.push(format!("{failed} of {total} points failed; see the error column"));
    }
    let report = Report {
        command: "sweep",
        config_text: config.canonical_text(),
        results: json!({
            "points": total,
            "failed": failed,
            "engine": engine_name(plan.engine),
            "axes": table.axes.iter().map(|a| a.name()).collect::<Vec<_>>(),
            "metrics": table.metrics.iter().map(|m| m.name()).collect::<Vec<_>>(),
            "files": files,
        }),
        warnings,
    };
    io.emit(&report, &human, Some((&dir, "sweep.json")))
}

// -------------------------------------------------------------- presets --

/// List the shipped operating points, or print one as config text.
pub fn presets_cmd(show: Option<&str>, io: &Io) -> Result<(), CliError> {
    match show {
        Some(name) => {
            let config = presets::preset(name).ok_or_else(|| {
                CliError::validation(format!(
                    "unknown preset `{name}` (available: {})",
                    presets::SUMMARIES
                        .iter()
                        .map(|(n, _)| *n)
                        .collect::<Vec<_>>()
                        .join(", ")
                ))
            })?;
            let text = config.canonical_text();
            let report = Report {
                command: "presets",
                config_text: text.clone(),
                results: json!({ "preset": name }),
                warnings: Vec::new(),
            };
            io.emit(&report, &text, io.out.as_deref().map(|d| (d, "presets.json")))
        }
        None => {
            let mut human = String::new();
            for (name, summary) in presets::SUMMARIES {
                let _ = writeln!(human, "{name:<16} {summary}");
            }
            let report = Report {
                command: "presets",
                config_text: String::new(),
                results: json!({
                    "presets": presets::SUMMARIES.iter().map(|(n, s)| json!({
                        "name": n,
                        "summary": s,
                    })).collect::<Vec<_>>(),
                }),
                warnings: Vec::new(),
            };
            io.emit(&report, &human, io.out.as_deref().map(|d| (d, "presets.json")))
        }
    }
}
