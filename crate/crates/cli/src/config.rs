//! Configuration files: `key = value` lines under `[section]` headers.
//!
//! The format is deliberately small. Comments start with `#`; keys are
//! case-insensitive; dimensional quantities require a unit (`gamma = 3 MHz`,
//! `width = 100 ns`, `length = 1 m`) and dimensionless ones forbid it.
//! A top-level `preset = <name>` line loads one of the shipped operating
//! points (see [`crate::presets`]) as defaults, which explicit keys then
//! override. Parsing is not fail-fast: every problem is reported, each with
//! its line number.
//!
//! Frequency units follow the angular convention by default: `3 MHz` means
//! `3e6 rad/s`. Setting `frequency_convention = cycles` in `[numerics]`
//! reinterprets the `Hz` family as cycles per second (multiplying by `2π`);
//! `rad/s` is always accepted and never rescaled.
//!
//! [`RunConfig::canonical_text`] renders a config back to fully resolved
//! text; re-parsing that text reproduces the identical `RunConfig`.

use std::collections::HashMap;
use std::fmt;

use cit_core::fock::{Engine, GateRequest};
use cit_core::params::{
    CavitySpec, MediumSpec, NumericsSpec, ProbePulse, PulseShape, Scenario,
};
use cit_core::sweep::{validate_plan, AxisKind, AxisSpec, MetricKind, Spacing, SweepPlan};
use cit_core::C64;

use crate::error::CliError;
use crate::presets;

/// How the `Hz` unit family is interpreted.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FrequencyConvention {
    /// `3 MHz` means `3e6 rad/s` (the default; all core rates are angular).
    Angular,
    /// `3 MHz` means `3e6` cycles/s, i.e. `2π·3e6 rad/s`.
    Cycles,
}

impl FrequencyConvention {
    /// Config-file spelling.
    pub fn name(&self) -> &'static str {
        match self {
            FrequencyConvention::Angular => "angular",
            FrequencyConvention::Cycles => "cycles",
        }
    }
}

/// Analytic pulse families available to config files.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ShapeKind {
    /// `exp(-t²/2T²)` amplitude.
    Gaussian,
    /// `sech(t/T)` amplitude.
    Sech,
}

impl ShapeKind {
    fn name(&self) -> &'static str {
        match self {
            ShapeKind::Gaussian => "gaussian",
            ShapeKind::Sech => "sech",
        }
    }
}

/// `[medium]` section, resolved to SI / rad/s.
#[derive(Debug, Clone, PartialEq)]
pub struct MediumConfig {
    /// Optical depth `OD` (dimensionless).
    pub optical_depth: f64,
    /// Excited-state decay `Γ` (rad/s).
    pub gamma: f64,
    /// Medium length `L` (m).
    pub length: f64,
    /// Atom number `N`; `None` uses a synthetic count (weak-probe gates
    /// then carry a note).
    pub atoms: Option<f64>,
}

/// `[cavity]` section.
#[derive(Debug, Clone, PartialEq)]
pub struct CavityConfig {
    /// Vacuum Rabi frequency `G` (rad/s).
    pub vacuum_rabi: f64,
    /// Cavity decay `κ` (rad/s); `0` is an ideal cavity.
    pub kappa: f64,
    /// Photons in the cavity before the probe arrives.
    pub initial_photons: u32,
}

/// `[pulse]` section.
#[derive(Debug, Clone, PartialEq)]
pub struct PulseConfig {
    /// Envelope family.
    pub shape: ShapeKind,
    /// Width parameter `T` (s).
    pub width: f64,
    /// Photon-number amplitudes `α_0, α_1, …`.
    pub amplitudes: Vec<C64>,
    /// Rescale the amplitudes to unit norm instead of requiring it.
    pub normalize: bool,
}

/// `[numerics]` section.
#[derive(Debug, Clone, PartialEq)]
pub struct NumericsConfig {
    /// Frequency-unit interpretation used while parsing this config.
    pub convention: FrequencyConvention,
    /// Envelope samples per pulse width.
    pub oversample: u32,
    /// Time-span multiplier before power-of-two rounding.
    pub pad_factor: f64,
    /// Spatial cells for the time-domain solver (`0` = automatic).
    pub z_cells: u32,
    /// Snapshots recorded across a time-domain run.
    pub snapshots: u32,
    /// Explicit time-domain duration (s).
    pub duration: Option<f64>,
}

/// One swept axis.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AxisConfig {
    /// Scenario knob to vary.
    pub kind: AxisKind,
    /// Point spacing.
    pub spacing: Spacing,
    /// First value (SI / rad/s).
    pub min: f64,
    /// Last value (SI / rad/s).
    pub max: f64,
    /// Number of points (≥ 2).
    pub count: usize,
}

/// `[sweep]` section.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepConfig {
    /// Swept axes, outermost first (1–3).
    pub axes: Vec<AxisConfig>,
    /// Engine backing the engine-dependent metrics.
    pub engine: Engine,
    /// Metric columns, in order.
    pub metrics: Vec<MetricKind>,
    /// Photon number targeted by the gate metrics.
    pub gate_target: u32,
    /// Success floor for the gate search.
    pub min_success: f64,
    /// Gate-boundary candidates per envelope.
    pub gate_resolution: usize,
    /// Optional cap tighter than the engine's point budget.
    pub max_points: Option<usize>,
}

/// A fully resolved configuration.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    /// Preset the file started from, if any.
    pub preset: Option<String>,
    /// `[medium]`.
    pub medium: MediumConfig,
    /// `[cavity]`.
    pub cavity: CavityConfig,
    /// `[pulse]`.
    pub pulse: PulseConfig,
    /// `[numerics]`.
    pub numerics: NumericsConfig,
    /// `[sweep]`, when present.
    pub sweep: Option<SweepConfig>,
}

/// One problem found while parsing; `line` is 1-based and absent for
/// file-level problems (such as a missing required key).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConfigError {
    /// 1-based source line, when the problem is tied to one.
    pub line: Option<usize>,
    /// Human-readable description.
    pub message: String,
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.line {
            Some(n) => write!(f, "line {n}: {}", self.message),
            None => write!(f, "{}", self.message),
        }
    }
}

fn err_at(line: usize, message: impl Into<String>) -> ConfigError {
    ConfigError {
        line: Some(line),
        message: message.into(),
    }
}

fn err_global(message: impl Into<String>) -> ConfigError {
    ConfigError {
        line: None,
        message: message.into(),
    }
}

const SECTIONS: [&str; 5] = ["medium", "cavity", "pulse", "numerics", "sweep"];

/// A lexed `key = value` line.
struct Entry {
    section: &'static str,
    key: String,
    value: String,
    line: usize,
}

/// Parse a config file. Returns the resolved config, or every problem
/// found (never just the first).
pub fn parse(text: &str) -> Result<RunConfig, Vec<ConfigError>> {
    let mut errors = Vec::new();
    let mut entries = Vec::new();
    let mut section: Option<&'static str> = None;
    let mut skipping = false;
    let mut seen: HashMap<(&'static str, String), usize> = HashMap::new();

    for (i, raw) in text.lines().enumerate() {
        let line_no = i + 1;
        let line = match raw.find('#') {
            Some(pos) => &raw[..pos],
            None => raw,
        }
        .trim();
        if line.is_empty() {
            continue;
        }
        if let Some(name) = line.strip_prefix('[') {
            match name.strip_suffix(']') {
                Some(name) => {
                    let name = name.trim().to_ascii_lowercase();
                    match SECTIONS.iter().find(|s| **s == name) {
                        Some(known) => {
                            section = Some(known);
                            skipping = false;
                        }
                        None => {
                            errors.push(err_at(line_no, format!("unknown section `[{name}]`")));
                            skipping = true;
                        }
                    }
                }
                None => {
                    errors.push(err_at(line_no, "unterminated section header"));
                    skipping = true;
                }
            }
            continue;
        }
        if skipping {
            continue;
        }
        let Some((key, value)) = line.split_once('=') else {
            errors.push(err_at(line_no, "expected `key = value`"));
            continue;
        };
        let key = key.trim().to_ascii_lowercase().replace('-', "_");
        let value = value.trim().to_string();
        if key.is_empty() {
            errors.push(err_at(line_no, "empty key"));
            continue;
        }
        if value.is_empty() {
            errors.push(err_at(line_no, format!("key `{key}` has an empty value")));
            continue;
        }
        let section = match section {
            Some(s) => s,
            None if key == "preset" => "",
            None => {
                errors.push(err_at(
                    line_no,
                    format!("key `{key}` appears before any [section] header"),
                ));
                continue;
            }
        };
        let canonical = canonical_key(section, &key);
        if let Some(first) = seen.insert((section, canonical.clone()), line_no) {
            errors.push(err_at(
                line_no,
                format!("duplicate key `{canonical}` (first given on line {first})"),
            ));
            continue;
        }
        entries.push(Entry {
            section,
            key: canonical,
            value,
            line: line_no,
        });
    }

    // the convention must be known before any rate is converted
    let mut convention = FrequencyConvention::Angular;
    for e in &entries {
        if e.section == "numerics" && e.key == "frequency_convention" {
            match e.value.to_ascii_lowercase().as_str() {
                "angular" => convention = FrequencyConvention::Angular,
                "cycles" => convention = FrequencyConvention::Cycles,
                other => errors.push(err_at(
                    e.line,
                    format!("frequency_convention must be `angular` or `cycles`, got `{other}`"),
                )),
            }
        }
    }

    // preset defaults, overridden by explicit keys below
    let mut draft = Draft::empty();
    for e in &entries {
        if e.section == "" && e.key == "preset" {
            match presets::preset(&e.value) {
                Some(base) => draft = Draft::from_config(base),
                None => errors.push(err_at(
                    e.line,
                    format!(
                        "unknown preset `{}` (available: {})",
                        e.value,
                        presets::SUMMARIES
                            .iter()
                            .map(|(n, _)| *n)
                            .collect::<Vec<_>>()
                            .join(", ")
                    ),
                )),
            }
            draft.preset = Some(e.value.clone());
        }
    }
    draft.convention = convention;

    for e in &entries {
        if let Err(message) = draft.apply(e, convention) {
            errors.push(err_at(e.line, message));
        }
    }

    match draft.finish(&seen, &mut errors) {
        Some(config) if errors.is_empty() => Ok(config),
        _ => Err(errors),
    }
}

/// Map accepted aliases onto one canonical key per quantity, so an alias
/// and its canonical spelling also collide as duplicates.
fn canonical_key(section: &str, key: &str) -> String {
    match (section, key) {
        ("medium", "od") => "optical_depth".into(),
        ("cavity", "vacuum_rabi") => "g".into(),
        ("sweep", "axis1") => "axis".into(),
        _ => key.into(),
    }
}

/// Partially applied config being assembled.
struct Draft {
    preset: Option<String>,
    convention: FrequencyConvention,
    optical_depth: Option<f64>,
    gamma: Option<f64>,
    length: Option<f64>,
    atoms: Option<f64>,
    vacuum_rabi: Option<f64>,
    kappa: Option<f64>,
    initial_photons: Option<u32>,
    shape: Option<ShapeKind>,
    width: Option<f64>,
    amplitudes: Option<Vec<C64>>,
    normalize: Option<bool>,
    oversample: Option<u32>,
    pad_factor: Option<f64>,
    z_cells: Option<u32>,
    snapshots: Option<u32>,
    duration: Option<f64>,
    axes: [Option<AxisConfig>; 3],
    engine: Option<Engine>,
    metrics: Option<Vec<MetricKind>>,
    gate_target: Option<u32>,
    min_success: Option<f64>,
    gate_resolution: Option<usize>,
    max_points: Option<usize>,
    sweep_touched: bool,
}

impl Draft {
    fn empty() -> Self {
        Self {
            preset: None,
            convention: FrequencyConvention::Angular,
            optical_depth: None,
            gamma: None,
            length: None,
            atoms: None,
            vacuum_rabi: None,
            kappa: None,
            initial_photons: None,
            shape: None,
            width: None,
            amplitudes: None,
            normalize: None,
            oversample: None,
            pad_factor: None,
            z_cells: None,
            snapshots: None,
            duration: None,
            axes: [None, None, None],
            engine: None,
            metrics: None,
            gate_target: None,
            min_success: None,
            gate_resolution: None,
            max_points: None,
            sweep_touched: false,
        }
    }

    fn from_config(c: RunConfig) -> Self {
        let mut d = Self::empty();
        d.preset = c.preset;
        d.convention = c.numerics.convention;
        d.optical_depth = Some(c.medium.optical_depth);
        d.gamma = Some(c.medium.gamma);
        d.length = Some(c.medium.length);
        d.atoms = c.medium.atoms;
        d.vacuum_rabi = Some(c.cavity.vacuum_rabi);
        d.kappa = Some(c.cavity.kappa);
        d.initial_photons = Some(c.cavity.initial_photons);
        d.shape = Some(c.pulse.shape);
        d.width = Some(c.pulse.width);
        d.amplitudes = Some(c.pulse.amplitudes);
        d.normalize = Some(c.pulse.normalize);
        d.oversample = Some(c.numerics.oversample);
        d.pad_factor = Some(c.numerics.pad_factor);
        d.z_cells = Some(c.numerics.z_cells);
        d.snapshots = Some(c.numerics.snapshots);
        d.duration = c.numerics.duration;
        if let Some(s) = c.sweep {
            d.sweep_touched = true;
            for (slot, axis) in d.axes.iter_mut().zip(&s.axes) {
                *slot = Some(*axis);
            }
            d.engine = Some(s.engine);
            d.metrics = Some(s.metrics);
            d.gate_target = Some(s.gate_target);
            d.min_success = Some(s.min_success);
            d.gate_resolution = Some(s.gate_resolution);
            d.max_points = s.max_points;
        }
        d
    }

    /// Apply one entry; returns a message to attach to the entry's line on
    /// failure.
    fn apply(&mut self, e: &Entry, conv: FrequencyConvention) -> Result<(), String> {
        match (e.section, e.key.as_str()) {
            ("", "preset") => Ok(()), // consumed in the preset pre-pass
            ("medium", "optical_depth") => {
                self.optical_depth = Some(parse_positive(&e.value, "optical_depth")?);
                Ok(())
            }
            ("medium", "gamma") => {
                self.gamma = Some(parse_rate(&e.value, conv, "gamma")?);
                Ok(())
            }
            ("medium", "length") => {
                self.length = Some(parse_length(&e.value, "length")?);
                Ok(())
            }
            ("medium", "atoms") => {
                let n = parse_positive(&e.value, "atoms")?;
                if n < 1.0 {
                    return Err(format!("atoms must be at least 1, got {n}"));
                }
                self.atoms = Some(n);
                Ok(())
            }
            ("cavity", "g") => {
                self.vacuum_rabi = Some(parse_rate(&e.value, conv, "g")?);
                Ok(())
            }
            ("cavity", "kappa") => {
                let k = parse_rate(&e.value, conv, "kappa")?;
                if k < 0.0 {
                    return Err(format!("kappa must not be negative, got {k}"));
                }
                self.kappa = Some(k);
                Ok(())
            }
            ("cavity", "initial_photons") => {
                self.initial_photons = Some(parse_integer(&e.value, "initial_photons")?);
                Ok(())
            }
            ("pulse", "shape") => {
                self.shape = Some(match e.value.to_ascii_lowercase().as_str() {
                    "gaussian" => ShapeKind::Gaussian,
                    "sech" => ShapeKind::Sech,
                    other => return Err(format!("shape must be `gaussian` or `sech`, got `{other}`")),
                });
                Ok(())
            }
            ("pulse", "width") => {
                self.width = Some(parse_time(&e.value, "width")?);
                Ok(())
            }
            ("pulse", "amplitudes") => {
                let mut amps = Vec::new();
                for part in e.value.split(',') {
                    amps.push(parse_complex(part)?);
                }
                self.amplitudes = Some(amps);
                Ok(())
            }
            ("pulse", "normalize") => {
                self.normalize = Some(parse_bool(&e.value, "normalize")?);
                Ok(())
            }
            ("numerics", "frequency_convention") => Ok(()), // pre-scanned
            ("numerics", "oversample") => {
                self.oversample = Some(parse_integer(&e.value, "oversample")?);
                Ok(())
            }
            ("numerics", "pad_factor") => {
                self.pad_factor = Some(parse_positive(&e.value, "pad_factor")?);
                Ok(())
            }
            ("numerics", "z_cells") => {
                self.z_cells = Some(parse_integer(&e.value, "z_cells")?);
                Ok(())
            }
            ("numerics", "snapshots") => {
                self.snapshots = Some(parse_integer(&e.value, "snapshots")?);
                Ok(())
            }
            ("numerics", "duration") => {
                self.duration = Some(parse_time(&e.value, "duration")?);
                Ok(())
            }
            ("sweep", "axis") | ("sweep", "axis2") | ("sweep", "axis3") => {
                self.sweep_touched = true;
                let slot = match e.key.as_str() {
                    "axis" => 0,
                    "axis2" => 1,
                    _ => 2,
                };
                self.axes[slot] = Some(parse_axis(&e.value, conv)?);
                Ok(())
            }
            ("sweep", "engine") => {
                self.sweep_touched = true;
                self.engine = Some(
                    engine_from_name(&e.value)
                        .ok_or_else(|| format!("unknown engine `{}` (analytic, spectral, time-domain)", e.value))?,
                );
                Ok(())
            }
            ("sweep", "metrics") => {
                self.sweep_touched = true;
                let mut metrics = Vec::new();
                for part in e.value.split(',') {
                    let name = part.trim();
                    metrics.push(
                        metric_from_name(name)
                            .ok_or_else(|| format!("unknown metric `{name}`"))?,
                    );
                }
                self.metrics = Some(metrics);
                Ok(())
            }
            ("sweep", "gate_target") => {
                self.sweep_touched = true;
                self.gate_target = Some(parse_integer(&e.value, "gate_target")?);
                Ok(())
            }
            ("sweep", "min_success") => {
                self.sweep_touched = true;
                let s = parse_positive(&e.value, "min_success")?;
                if s > 1.0 {
                    return Err(format!("min_success must lie in (0, 1], got {s}"));
                }
                self.min_success = Some(s);
                Ok(())
            }
            ("sweep", "gate_resolution") => {
                self.sweep_touched = true;
                self.gate_resolution = Some(parse_integer::<usize>(&e.value, "gate_resolution")?);
                Ok(())
            }
            ("sweep", "max_points") => {
                self.sweep_touched = true;
                self.max_points = Some(parse_integer::<usize>(&e.value, "max_points")?);
                Ok(())
            }
            (section, key) => Err(format!("unknown key `{key}` in [{section}]")),
        }
    }

    fn finish(
        self,
        seen: &HashMap<(&'static str, String), usize>,
        errors: &mut Vec<ConfigError>,
    ) -> Option<RunConfig> {
        // a key that was written but failed to parse is reported at its
        // line, not again as missing
        let mut missing = |section: &'static str, key: &str| {
            if !seen.contains_key(&(section, key.to_string())) {
                errors.push(err_global(format!("missing required key [{section}] {key}")));
            }
        };
        let optical_depth = self.optical_depth;
        let gamma = self.gamma;
        let length = self.length;
        let vacuum_rabi = self.vacuum_rabi;
        let width = self.width;
        let amplitudes = self.amplitudes.clone();
        if optical_depth.is_none() {
            missing("medium", "optical_depth");
        }
        if gamma.is_none() {
            missing("medium", "gamma");
        }
        if length.is_none() {
            missing("medium", "length");
        }
        if vacuum_rabi.is_none() {
            missing("cavity", "g");
        }
        if width.is_none() {
            missing("pulse", "width");
        }
        if amplitudes.is_none() {
            missing("pulse", "amplitudes");
        }

        let sweep = if self.sweep_touched {
            let mut axes = Vec::new();
            for (i, slot) in self.axes.iter().enumerate() {
                match (slot, axes.len()) {
                    (Some(axis), have) if have == i => axes.push(*axis),
                    (Some(_), _) => errors.push(err_global(format!(
                        "[sweep] axis{} given but axis{} is missing",
                        i + 1,
                        i
                    ))),
                    (None, _) => {}
                }
            }
            if axes.is_empty() && !seen.contains_key(&("sweep", "axis".to_string())) {
                errors.push(err_global("missing required key [sweep] axis"));
            }
            let metrics = match self.metrics.clone() {
                Some(m) => m,
                None => {
                    if !seen.contains_key(&("sweep", "metrics".to_string())) {
                        errors.push(err_global("missing required key [sweep] metrics"));
                    }
                    Vec::new()
                }
            };
            Some(SweepConfig {
                axes,
                engine: self.engine.unwrap_or(Engine::Analytic),
                metrics,
                gate_target: self.gate_target.unwrap_or(1),
                min_success: self.min_success.unwrap_or(0.9),
                gate_resolution: self.gate_resolution.unwrap_or(64),
                max_points: self.max_points,
            })
        } else {
            None
        };

        Some(RunConfig {
            preset: self.preset,
            medium: MediumConfig {
                optical_depth: optical_depth?,
                gamma: gamma?,
                length: length?,
                atoms: self.atoms,
            },
            cavity: CavityConfig {
                vacuum_rabi: vacuum_rabi?,
                kappa: self.kappa.unwrap_or(0.0),
                initial_photons: self.initial_photons.unwrap_or(0),
            },
            pulse: PulseConfig {
                shape: self.shape.unwrap_or(ShapeKind::Gaussian),
                width: width?,
                amplitudes: amplitudes?,
                normalize: self.normalize.unwrap_or(false),
            },
            numerics: NumericsConfig {
                convention: self.convention,
                oversample: self.oversample.unwrap_or(256),
                pad_factor: self.pad_factor.unwrap_or(4.0),
                z_cells: self.z_cells.unwrap_or(0),
                snapshots: self.snapshots.unwrap_or(32),
                duration: self.duration,
            },
            sweep,
        })
    }
}

// ---------------------------------------------------------------- units --

/// How a unit maps its number onto the SI/rad-s value. Sub-unit factors
/// divide by the exact power of ten instead of multiplying by its rounded
/// reciprocal, so `250 ns` equals typing `2.5e-7 s` to the last bit.
#[derive(Debug, Clone, Copy)]
struct Scale {
    factor: f64,
    divide: bool,
    post: f64,
}

impl Scale {
    fn mul(factor: f64) -> Self {
        Scale {
            factor,
            divide: false,
            post: 1.0,
        }
    }

    fn div(factor: f64) -> Self {
        Scale {
            factor,
            divide: true,
            post: 1.0,
        }
    }

    fn then(mut self, post: f64) -> Self {
        self.post = post;
        self
    }

    fn apply(self, v: f64) -> f64 {
        let scaled = if self.divide {
            v / self.factor
        } else {
            v * self.factor
        };
        if self.post == 1.0 {
            scaled
        } else {
            scaled * self.post
        }
    }
}

fn split_value(value: &str) -> (Option<&str>, Option<&str>, bool) {
    let mut it = value.split_whitespace();
    let number = it.next();
    let unit = it.next();
    (number, unit, it.next().is_some())
}

fn parse_number(token: &str, name: &str) -> Result<f64, String> {
    token
        .parse::<f64>()
        .map_err(|_| format!("{name}: `{token}` is not a number"))
}

fn parse_dimensional(
    value: &str,
    name: &str,
    dimension: &str,
    scale_of: impl Fn(&str) -> Option<Scale>,
    example: &str,
) -> Result<f64, String> {
    let (number, unit, extra) = split_value(value);
    let number = parse_number(number.unwrap_or(""), name)?;
    let Some(unit) = unit else {
        return Err(format!("{name}: missing unit (expected e.g. `{example}`)"));
    };
    if extra {
        return Err(format!("{name}: trailing text after the unit"));
    }
    let Some(scale) = scale_of(unit) else {
        return Err(format!("{name}: unknown {dimension} unit `{unit}`"));
    };
    if !number.is_finite() {
        return Err(format!("{name}: value must be finite"));
    }
    Ok(scale.apply(number))
}

fn rate_scale(unit: &str, conv: FrequencyConvention) -> Option<Scale> {
    if unit.eq_ignore_ascii_case("rad/s") {
        return Some(Scale::mul(1.0));
    }
    let base = match unit.to_ascii_lowercase().as_str() {
        "hz" => Scale::mul(1.0),
        "khz" => Scale::mul(1e3),
        "mhz" => Scale::mul(1e6),
        "ghz" => Scale::mul(1e9),
        _ => return None,
    };
    Some(match conv {
        FrequencyConvention::Angular => base,
        FrequencyConvention::Cycles => base.then(std::f64::consts::TAU),
    })
}

fn time_scale(unit: &str) -> Option<Scale> {
    Some(match unit.to_ascii_lowercase().as_str() {
        "s" => Scale::mul(1.0),
        "ms" => Scale::div(1e3),
        "us" | "µs" => Scale::div(1e6),
        "ns" => Scale::div(1e9),
        "ps" => Scale::div(1e12),
        _ => return None,
    })
}

fn length_scale(unit: &str) -> Option<Scale> {
    Some(match unit.to_ascii_lowercase().as_str() {
        "km" => Scale::mul(1e3),
        "m" => Scale::mul(1.0),
        "cm" => Scale::div(1e2),
        "mm" => Scale::div(1e3),
        "um" | "µm" => Scale::div(1e6),
        _ => return None,
    })
}

fn parse_rate(value: &str, conv: FrequencyConvention, name: &str) -> Result<f64, String> {
    let v = parse_dimensional(value, name, "rate", |u| rate_scale(u, conv), "3 MHz")?;
    if v <= 0.0 && name != "kappa" {
        return Err(format!("{name} must be positive, got {v}"));
    }
    Ok(v)
}

fn parse_time(value: &str, name: &str) -> Result<f64, String> {
    let v = parse_dimensional(value, name, "time", time_scale, "100 ns")?;
    if v <= 0.0 {
        return Err(format!("{name} must be positive, got {v}"));
    }
    Ok(v)
}

fn parse_length(value: &str, name: &str) -> Result<f64, String> {
    let v = parse_dimensional(value, name, "length", length_scale, "1 m")?;
    if v <= 0.0 {
        return Err(format!("{name} must be positive, got {v}"));
    }
    Ok(v)
}

fn parse_positive(value: &str, name: &str) -> Result<f64, String> {
    let (number, unit, _) = split_value(value);
    if let Some(unit) = unit {
        return Err(format!(
            "{name} is dimensionless; remove the unit `{unit}`"
        ));
    }
    let v = parse_number(number.unwrap_or(""), name)?;
    if !v.is_finite() || v <= 0.0 {
        return Err(format!("{name} must be positive and finite, got {v}"));
    }
    Ok(v)
}

fn parse_integer<T>(value: &str, name: &str) -> Result<T, String>
where
    T: std::str::FromStr,
{
    let (number, unit, _) = split_value(value);
    if let Some(unit) = unit {
        return Err(format!("{name} is dimensionless; remove the unit `{unit}`"));
    }
    number
        .unwrap_or("")
        .parse::<T>()
        .map_err(|_| format!("{name}: `{value}` is not a non-negative integer"))
}

fn parse_bool(value: &str, name: &str) -> Result<bool, String> {
    match value.to_ascii_lowercase().as_str() {
        "true" => Ok(true),
        "false" => Ok(false),
        other => Err(format!("{name} must be `true` or `false`, got `{other}`")),
    }
}

/// Parse one complex amplitude: `0.6`, `0.8i`, `0.6+0.8i`, `1e-3-2e-3i`.
fn parse_complex(s: &str) -> Result<C64, String> {
    let t = s.trim();
    if t.is_empty() {
        return Err("empty amplitude".into());
    }
    let Some(body) = t.strip_suffix(['i', 'I']) else {
        return t
            .parse::<f64>()
            .map(|re| C64::new(re, 0.0))
            .map_err(|_| format!("amplitude `{t}` is not a number"));
    };
    // split before the last sign that is neither leading nor an exponent's
    let bytes = body.as_bytes();
    let split = (1..bytes.len())
        .rev()
        .find(|&i| matches!(bytes[i], b'+' | b'-') && !matches!(bytes[i - 1], b'e' | b'E'));
    let (re_str, im_str) = match split {
        Some(i) => (&body[..i], &body[i..]),
        None => ("", body),
    };
    let re = if re_str.is_empty() {
        0.0
    } else {
        re_str
            .parse::<f64>()
            .map_err(|_| format!("amplitude `{t}` is not a complex number"))?
    };
    let im = match im_str {
        "" | "+" => 1.0,
        "-" => -1.0,
        _ => im_str
            .parse::<f64>()
            .map_err(|_| format!("amplitude `{t}` is not a complex number"))?,
    };
    Ok(C64::new(re, im))
}

fn format_complex(c: C64) -> String {
    if c.im == 0.0 {
        format!("{}", c.re)
    } else if c.re == 0.0 {
        format!("{}i", c.im)
    } else if c.im < 0.0 {
        format!("{}{}i", c.re, c.im)
    } else {
        format!("{}+{}i", c.re, c.im)
    }
}

// ----------------------------------------------------------- sweep axes --

/// Dimension of an axis kind's coordinates.
enum AxisDimension {
    Rate,
    Time,
    Bare,
}

fn axis_dimension(kind: AxisKind) -> AxisDimension {
    match kind {
        AxisKind::VacuumRabi | AxisKind::CavityDecay | AxisKind::Gamma => AxisDimension::Rate,
        AxisKind::PulseWidth => AxisDimension::Time,
        AxisKind::OpticalDepth | AxisKind::MaxPhotonNumber => AxisDimension::Bare,
    }
}

fn axis_kind_from_name(name: &str) -> Option<AxisKind> {
    [
        AxisKind::VacuumRabi,
        AxisKind::OpticalDepth,
        AxisKind::PulseWidth,
        AxisKind::CavityDecay,
        AxisKind::MaxPhotonNumber,
        AxisKind::Gamma,
    ]
    .into_iter()
    .find(|k| k.name() == name)
}

/// Parse `kind spacing min [unit] max [unit] count`; units are mandatory
/// for dimensional kinds and forbidden for dimensionless ones.
fn parse_axis(value: &str, conv: FrequencyConvention) -> Result<AxisConfig, String> {
    let tokens: Vec<&str> = value.split_whitespace().collect();
    let mut pos = 0;
    let mut next = |what: &str| -> Result<&str, String> {
        let t = tokens
            .get(pos)
            .copied()
            .ok_or_else(|| format!("axis: missing {what} (syntax: `optical_depth log 10 1000 25`)"))?;
        pos += 1;
        Ok(t)
    };
    let kind_name = next("axis kind")?;
    let kind = axis_kind_from_name(&kind_name.to_ascii_lowercase())
        .ok_or_else(|| format!("axis: unknown kind `{kind_name}`"))?;
    let spacing = match next("spacing (`linear` or `log`)")?.to_ascii_lowercase().as_str() {
        "linear" => Spacing::Linear,
        "log" => Spacing::Log,
        other => return Err(format!("axis: spacing must be `linear` or `log`, got `{other}`")),
    };
    let mut bound = |what: &str| -> Result<f64, String> {
        let number = parse_number(next(what)?, "axis")?;
        match axis_dimension(kind) {
            AxisDimension::Bare => Ok(number),
            AxisDimension::Rate => {
                let unit = next(&format!("unit after the {what}"))?;
                let scale = rate_scale(unit, conv)
                    .ok_or_else(|| format!("axis: unknown rate unit `{unit}`"))?;
                Ok(scale.apply(number))
            }
            AxisDimension::Time => {
                let unit = next(&format!("unit after the {what}"))?;
                let scale =
                    time_scale(unit).ok_or_else(|| format!("axis: unknown time unit `{unit}`"))?;
                Ok(scale.apply(number))
            }
        }
    };
    let min = bound("lower bound")?;
    let max = bound("upper bound")?;
    let count: usize = next("point count")?
        .parse()
        .map_err(|_| "axis: point count must be an integer".to_string())?;
    if pos != tokens.len() {
        return Err(format!("axis: trailing text `{}`", tokens[pos..].join(" ")));
    }
    if count < 2 {
        return Err(format!("axis: count must be at least 2, got {count}"));
    }
    if !(min.is_finite() && max.is_finite()) || min >= max {
        return Err(format!("axis: bounds must be finite with min < max, got {min} and {max}"));
    }
    if matches!(spacing, Spacing::Log) && min <= 0.0 {
        return Err(format!("axis: log spacing requires min > 0, got {min}"));
    }
    Ok(AxisConfig {
        kind,
        spacing,
        min,
        max,
        count,
    })
}

fn format_axis(axis: &AxisConfig) -> String {
    let spacing = match axis.spacing {
        Spacing::Linear => "linear",
        Spacing::Log => "log",
    };
    match axis_dimension(axis.kind) {
        AxisDimension::Bare => format!(
            "{} {} {} {} {}",
            axis.kind.name(),
            spacing,
            axis.min,
            axis.max,
            axis.count
        ),
        AxisDimension::Rate => format!(
            "{} {} {} rad/s {} rad/s {}",
            axis.kind.name(),
            spacing,
            axis.min,
            axis.max,
            axis.count
        ),
        AxisDimension::Time => format!(
            "{} {} {} s {} s {}",
            axis.kind.name(),
            spacing,
            axis.min,
            axis.max,
            axis.count
        ),
    }
}

// ------------------------------------------------------- engine/metrics --

/// Engine name used by flags and config files.
pub fn engine_name(engine: Engine) -> &'static str {
    match engine {
        Engine::Analytic => "analytic",
        Engine::Spectral => "spectral",
        Engine::TimeDomain => "time-domain",
    }
}

/// Inverse of [`engine_name`].
pub fn engine_from_name(name: &str) -> Option<Engine> {
    match name.to_ascii_lowercase().as_str() {
        "analytic" => Some(Engine::Analytic),
        "spectral" => Some(Engine::Spectral),
        "time-domain" => Some(Engine::TimeDomain),
        _ => None,
    }
}

fn metric_from_name(name: &str) -> Option<MetricKind> {
    [
        MetricKind::GroupVelocity,
        MetricKind::TransitDelay,
        MetricKind::DifferentialDelay,
        MetricKind::SeparationRatio,
        MetricKind::TransparencyWindow,
        MetricKind::WorstMargin,
        MetricKind::Transmission,
        MetricKind::MeasuredDelay,
        MetricKind::GateSuccess,
        MetricKind::GatePurity,
        MetricKind::GateContamination,
    ]
    .into_iter()
    .find(|m| m.name() == name)
}

// ------------------------------------------------------------ rendering --

impl RunConfig {
    /// Render the fully resolved config; parsing the result reproduces
    /// `self` exactly. Rates are emitted in `rad/s`, times in `s`,
    /// lengths in `m`.
    pub fn canonical_text(&self) -> String {
        use std::fmt::Write;
        let mut out = String::new();
        if let Some(preset) = &self.preset {
            let _ = writeln!(out, "preset = {preset}");
            out.push('\n');
        }
        let _ = writeln!(out, "[medium]");
        let _ = writeln!(out, "optical_depth = {}", self.medium.optical_depth);
        let _ = writeln!(out, "gamma = {} rad/s", self.medium.gamma);
        let _ = writeln!(out, "length = {} m", self.medium.length);
        if let Some(atoms) = self.medium.atoms {
            let _ = writeln!(out, "atoms = {atoms}");
        }
        out.push('\n');
        let _ = writeln!(out, "[cavity]");
        let _ = writeln!(out, "g = {} rad/s", self.cavity.vacuum_rabi);
        let _ = writeln!(out, "kappa = {} rad/s", self.cavity.kappa);
        let _ = writeln!(out, "initial_photons = {}", self.cavity.initial_photons);
        out.push('\n');
        let _ = writeln!(out, "[pulse]");
        let _ = writeln!(out, "shape = {}", self.pulse.shape.name());
        let _ = writeln!(out, "width = {} s", self.pulse.width);
        let amps: Vec<String> = self.pulse.amplitudes.iter().map(|a| format_complex(*a)).collect();
        let _ = writeln!(out, "amplitudes = {}", amps.join(", "));
        let _ = writeln!(out, "normalize = {}", self.pulse.normalize);
        out.push('\n');
        let _ = writeln!(out, "[numerics]");
        let _ = writeln!(out, "frequency_convention = {}", self.numerics.convention.name());
        let _ = writeln!(out, "oversample = {}", self.numerics.oversample);
        let _ = writeln!(out, "pad_factor = {}", self.numerics.pad_factor);
        let _ = writeln!(out, "z_cells = {}", self.numerics.z_cells);
        let _ = writeln!(out, "snapshots = {}", self.numerics.snapshots);
        if let Some(d) = self.numerics.duration {
            let _ = writeln!(out, "duration = {d} s");
        }
        if let Some(sweep) = &self.sweep {
            out.push('\n');
            let _ = writeln!(out, "[sweep]");
            for (i, axis) in sweep.axes.iter().enumerate() {
                let key = match i {
                    0 => "axis",
                    1 => "axis2",
                    _ => "axis3",
                };
                let _ = writeln!(out, "{key} = {}", format_axis(axis));
            }
            let _ = writeln!(out, "engine = {}", engine_name(sweep.engine));
            let names: Vec<&str> = sweep.metrics.iter().map(|m| m.name()).collect();
            let _ = writeln!(out, "metrics = {}", names.join(", "));
            let _ = writeln!(out, "gate_target = {}", sweep.gate_target);
            let _ = writeln!(out, "min_success = {}", sweep.min_success);
            let _ = writeln!(out, "gate_resolution = {}", sweep.gate_resolution);
            if let Some(m) = sweep.max_points {
                let _ = writeln!(out, "max_points = {m}");
            }
        }
        out
    }

    /// Build the validated scenario this config describes.
    pub fn to_scenario(&self) -> Result<Scenario, CliError> {
        let medium = match self.medium.atoms {
            Some(atoms) => MediumSpec::from_macroscopic_with_atoms(
                self.medium.optical_depth,
                self.medium.gamma,
                self.medium.length,
                atoms,
            ),
            None => MediumSpec::from_macroscopic(
                self.medium.optical_depth,
                self.medium.gamma,
                self.medium.length,
            ),
        }
        .map_err(|e| CliError::validation(format!("config: [medium] {e}")))?;
        let cavity = CavitySpec::new(
            self.cavity.vacuum_rabi,
            self.cavity.kappa,
            self.cavity.initial_photons,
        )
        .map_err(|e| CliError::validation(format!("config: [cavity] {e}")))?;
        let shape = match self.pulse.shape {
            ShapeKind::Gaussian => PulseShape::Gaussian,
            ShapeKind::Sech => PulseShape::Sech,
        };
        let pulse = if self.pulse.normalize {
            ProbePulse::normalized(shape, self.pulse.width, self.pulse.amplitudes.clone())
        } else {
            ProbePulse::new(shape, self.pulse.width, self.pulse.amplitudes.clone())
        }
        .map_err(|e| CliError::validation(format!("config: [pulse] {e}")))?;
        let numerics = NumericsSpec {
            oversample: self.numerics.oversample,
            pad_factor: self.numerics.pad_factor,
            z_cells: self.numerics.z_cells,
            snapshots: self.numerics.snapshots,
            duration: self.numerics.duration,
        };
        Scenario::new(medium, cavity, pulse, numerics)
            .map_err(|e| CliError::validation(format!("config: {e}")))
    }

    /// Build and validate the sweep plan; requires a `[sweep]` section.
    pub fn to_sweep_plan(&self) -> Result<SweepPlan, CliError> {
        let sweep = self
            .sweep
            .as_ref()
            .ok_or_else(|| CliError::validation("config has no [sweep] section"))?;
        let base = self.to_scenario()?;
        let plan = SweepPlan {
            base,
            axes: sweep
                .axes
                .iter()
                .map(|a| AxisSpec {
                    kind: a.kind,
                    min: a.min,
                    max: a.max,
                    count: a.count,
                    spacing: a.spacing,
                })
                .collect(),
            engine: sweep.engine,
            metrics: sweep.metrics.clone(),
            gate: GateRequest {
                min_success: sweep.min_success,
                target: sweep.gate_target,
                resolution: sweep.gate_resolution,
            },
            max_points: sweep.max_points,
        };
        validate_plan(&plan).map_err(|e| CliError::validation(format!("config: [sweep] {e}")))?;
        Ok(plan)
    }
}
