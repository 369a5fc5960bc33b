//! Closed-form group velocities, sector delays, transparency windows, and
//! operating-point feasibility gates.
//!
//! In the adiabatic linear-response limit an `n`-photon probe component
//! propagates at
//!
//! ```text
//! v_n = c·Ω_n² / (Ω_n² + g²N),      Ω_n = G·√(n+1),
//! ```
//!
//! so the delay accumulated over the medium (beyond the vacuum transit
//! `L/c`) is, in the atom-dominated regime `g²N ≫ Ω_n²`,
//!
//! ```text
//! τ_n = OD·Γ / ((n+1)·G²),
//! ```
//!
//! and adjacent photon numbers separate by
//! `Δτ_m = τ_m − τ_{m+1} = OD·Γ / ((m+1)(m+2)·G²)`. The feasibility report
//! collects the standing assumptions behind those formulas — adiabaticity,
//! weak probe, atom dominance, cavity damping, the pulse fitting inside
//! the medium, and the separation chain `1 ≲ Δτ_1/T ≪ √OD` — as explicit
//! pass/fail gates with margins.

use alloc::string::String;
use alloc::vec::Vec;


use crate::params::{CavitySpec, MediumSpec, Scenario};

/// Full dispersive group velocity `v_n = c·Ω_n²/(Ω_n² + g²N)` of photon
/// sector `n`; always strictly between 0 and `c`.
pub fn group_velocity(medium: &MediumSpec, cavity: &CavitySpec, sector: u32) -> f64 {
    let rabi2 = cavity.sector_rabi(sector).powi(2);
    let collective = medium.derive().collective_coupling;
    medium.light_speed * rabi2 / (rabi2 + collective)
}

/// The atom-dominated simplification `v ≈ c·Ω_n²/(g²N)` together with the
/// dominance ratio that controls its validity.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SimplifiedVelocity {
    /// `c·Ω_n²/(g²N)` (m/s); may exceed `c` outside the validity regime.
    pub speed: f64,
    /// `g²N / Ω_n²`; the approximation holds for ratios well above 1.
    pub dominance: f64,
}

impl SimplifiedVelocity {
    /// Whether the dominance ratio clears the conventional ×10 margin.
    pub fn is_reliable(&self) -> bool {
        self.dominance >= 10.0
    }

    /// Relative deviation from the full expression,
    /// `(v_simpl − v_full)/v_simpl = Ω²/(Ω² + g²N)`.
    pub fn relative_error(&self) -> f64 {
        1.0 / (1.0 + self.dominance)
    }
}

/// Atom-dominated group velocity of sector `n`, with its validity ratio.
pub fn group_velocity_simplified(
    medium: &MediumSpec,
    cavity: &CavitySpec,
    sector: u32,
) -> SimplifiedVelocity {
    let rabi2 = cavity.sector_rabi(sector).powi(2);
    let collective = medium.derive().collective_coupling;
    SimplifiedVelocity {
        speed: medium.light_speed * rabi2 / collective,
        dominance: collective / rabi2,
    }
}

/// Medium-induced delay of sector `n` beyond the vacuum transit:
/// `τ_n = OD·Γ/Ω_n²`.
pub fn transit_delay(medium: &MediumSpec, cavity: &CavitySpec, sector: u32) -> f64 {
    transit_delay_from_depth(
        medium.derive().optical_depth,
        medium.gamma,
        cavity.sector_rabi(sector),
    )
}

/// [`transit_delay`] from bulk observables directly; `τ = OD·Γ/Ω²`.
/// Accepts `optical_depth = 0` (zero-length medium) and returns 0.
pub fn transit_delay_from_depth(optical_depth: f64, gamma: f64, rabi: f64) -> f64 {
    optical_depth * gamma / (rabi * rabi)
}

/// Delay separating adjacent photon sectors `m` and `m+1`:
/// `Δτ_m = OD·Γ/((m+1)(m+2)G²)`, evaluated in closed form so the
/// telescoping identity holds to round-off.
pub fn differential_delay(medium: &MediumSpec, cavity: &CavitySpec, m: u32) -> f64 {
    differential_delay_from_depth(
        medium.derive().optical_depth,
        medium.gamma,
        cavity.vacuum_rabi,
        m,
    )
}

/// [`differential_delay`] from bulk observables directly.
pub fn differential_delay_from_depth(
    optical_depth: f64,
    gamma: f64,
    vacuum_rabi: f64,
    m: u32,
) -> f64 {
    let m = m as f64;
    optical_depth * gamma / ((m + 1.0) * (m + 2.0) * vacuum_rabi * vacuum_rabi)
}

/// The two circulating forms of the transparency-window width.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TransparencyWindow {
    /// `Δω = Ω_n²/(Γ·√OD)`: the width that shrinks with optical depth and
    /// actually bounds adiabaticity; used by the feasibility gate.
    pub corrected: f64,
    /// `Δω = G²·√OD/Γ` as often quoted; wider than [`Self::corrected`] by
    /// exactly a factor `OD` at `n = 0`.
    pub paper_form: f64,
}

/// Transparency window of sector `n`, in both circulating forms.
pub fn transparency_window(
    medium: &MediumSpec,
    cavity: &CavitySpec,
    sector: u32,
) -> TransparencyWindow {
    let od = medium.derive().optical_depth;
    let rabi2 = cavity.sector_rabi(sector).powi(2);
    let g2 = cavity.vacuum_rabi * cavity.vacuum_rabi;
    TransparencyWindow {
        corrected: rabi2 / (medium.gamma * od.sqrt()),
        paper_form: g2 * od.sqrt() / medium.gamma,
    }
}

/// Tunable gate thresholds for [`feasibility`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FeasibilityThresholds {
    /// Ratio demanded of strongly-ordered (`≫`/`≪`) conditions.
    pub strong_ratio: f64,
    /// Relative slack applied to every margin comparison so operating
    /// points sitting exactly on a threshold are not failed by round-off.
    pub slack: f64,
    /// Overall verdict is `Marginal` (rather than `Infeasible`) when every
    /// margin stays above this floor.
    pub marginal_floor: f64,
}

impl Default for FeasibilityThresholds {
    fn default() -> Self {
        Self {
            strong_ratio: 10.0,
            slack: 1e-9,
            marginal_floor: 0.25,
        }
    }
}

/// One compared quantity inside a [`Condition`].
#[derive(Debug, Clone, PartialEq)]
pub struct Quantity {
    /// What the number is.
    pub label: &'static str,
    /// Its value (dimensionless unless the label says otherwise).
    pub value: f64,
}

/// A single feasibility gate.
#[derive(Debug, Clone, PartialEq)]
pub struct Condition {
    /// Stable identifier (`adiabaticity`, `weak_probe`, ...).
    pub name: &'static str,
    /// Whether the margin clears 1 (with slack).
    pub satisfied: bool,
    /// How far past its threshold the condition sits; 1 is exactly on
    /// threshold, `+∞` marks a condition that cannot fail (e.g. `κ = 0`).
    pub margin: f64,
    /// The quantities the gate compares, for reporting.
    pub quantities: Vec<Quantity>,
    /// Optional caveat (synthetic atom number, ideal cavity, ...).
    pub note: Option<String>,
}

/// Overall classification of an operating point.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Verdict {
    /// Every gate satisfied.
    Feasible,
    /// At least one gate fails but none collapses (margins above the
    /// marginal floor): proof-of-principle territory.
    Marginal,
    /// Some gate fails badly.
    Infeasible,
}

/// The full gate-by-gate assessment of an operating point.
#[derive(Debug, Clone, PartialEq)]
pub struct FeasibilityReport {
    /// One entry per gate, in a stable order.
    pub conditions: Vec<Condition>,
    /// Smallest margin across the gates.
    pub worst_margin: f64,
    /// Overall classification.
    pub verdict: Verdict,
}

impl FeasibilityReport {
    /// Whether every gate is satisfied.
    pub fn all_satisfied(&self) -> bool {
        self.conditions.iter().all(|c| c.satisfied)
    }

    /// Look a gate up by its stable name.
    pub fn condition(&self, name: &str) -> Option<&Condition> {
        self.conditions.iter().find(|c| c.name == name)
    }
}

/// Evaluate every standing assumption for `scenario`.
///
/// Photon numbers are taken at their worst case: the initial cavity
/// occupation plus the highest photon number the pulse carries.
pub fn feasibility(scenario: &Scenario, thresholds: &FeasibilityThresholds) -> FeasibilityReport {
    let medium = &scenario.medium;
    let cavity = &scenario.cavity;
    let pulse = &scenario.pulse;
    let derived = medium.derive();
    let strong = thresholds.strong_ratio;
    let pass = |margin: f64| margin >= 1.0 - thresholds.slack;

    let n_peak = cavity.initial_photons + pulse.n_max();
    let t = pulse.width;
    let mut conditions = Vec::with_capacity(6);

    // adiabaticity: the pulse bandwidth 1/T must sit inside the corrected
    // transparency window of the slowest sector present (order-unity gate;
    // both reference operating points live at T·Δω of a few)
    {
        let window = transparency_window(medium, cavity, cavity.initial_photons).corrected;
        let product = t * window;
        conditions.push(Condition {
            name: "adiabaticity",
            satisfied: pass(product),
            margin: product,
            quantities: alloc::vec![
                Quantity {
                    label: "T·Δω_corrected",
                    value: product,
                },
                Quantity {
                    label: "Δω_corrected (rad/s)",
                    value: window,
                },
            ],
            note: None,
        });
    }

    // weak probe: photon number per atom must stay negligible,
    // ε = √(n_peak/N) ≪ 1
    {
        let eps = (n_peak as f64 / medium.atom_count).sqrt();
        let margin = if eps > 0.0 { 1.0 / (eps * strong) } else { f64::INFINITY };
        conditions.push(Condition {
            name: "weak_probe",
            satisfied: pass(margin),
            margin,
            quantities: alloc::vec![
                Quantity {
                    label: "ε = √(n_peak/N)",
                    value: eps,
                },
                Quantity {
                    label: "n_peak",
                    value: n_peak as f64,
                },
            ],
            note: medium.synthetic_atom_count.then(|| {
                String::from("atom number is a synthetic placeholder; gate not meaningful")
            }),
        });
    }

    // atom dominance: g²N ≫ Ω² keeps the polariton mostly atomic and the
    // simplified delays accurate
    {
        let rabi2 = cavity.sector_rabi(n_peak).powi(2);
        let ratio = derived.collective_coupling / rabi2;
        let margin = ratio / strong;
        conditions.push(Condition {
            name: "atom_dominance",
            satisfied: pass(margin),
            margin,
            quantities: alloc::vec![
                Quantity {
                    label: "g²N/Ω²(n_peak)",
                    value: ratio,
                },
                Quantity {
                    label: "required ratio",
                    value: strong,
                },
            ],
            note: None,
        });
    }

    // cavity damping: the control state must survive the pulse,
    // n_peak·κ·T ≪ 1
    {
        let product = n_peak as f64 * cavity.kappa * t;
        let margin = if product > 0.0 {
            1.0 / (product * strong)
        } else {
            f64::INFINITY
        };
        conditions.push(Condition {
            name: "cavity_damping",
            satisfied: pass(margin),
            margin,
            quantities: alloc::vec![
                Quantity {
                    label: "n_peak·κ·T",
                    value: product,
                },
                Quantity {
                    label: "κ (rad/s)",
                    value: cavity.kappa,
                },
            ],
            note: (cavity.kappa == 0.0)
                .then(|| String::from("ideal cavity (κ = 0): gate cannot fail")),
        });
    }

    // the compressed pulse must fit inside the medium:
    // L/(v(n_peak)·T) ≥ 1 (order-unity gate; the fastest sector is the
    // least compressed, so it is the binding case)
    {
        let v = group_velocity(medium, cavity, n_peak);
        let ratio = medium.length / (v * t);
        conditions.push(Condition {
            name: "pulse_fits",
            satisfied: pass(ratio),
            margin: ratio,
            quantities: alloc::vec![
                Quantity {
                    label: "L/(v_gr(n_peak)·T)",
                    value: ratio,
                },
                Quantity {
                    label: "v_gr(n_peak) (m/s)",
                    value: v,
                },
            ],
            note: None,
        });
    }

    // separation chain: 1 ≲ Δτ_1/T ≪ √OD — the single-photon component
    // must clear its neighbours by a pulse width without outrunning the
    // bandwidth budget
    {
        let delta = transit_delay(medium, cavity, cavity.initial_photons + 1)
            - transit_delay(medium, cavity, cavity.initial_photons + 2);
        let ratio = delta / t;
        let upper = derived.optical_depth.sqrt();
        let margin = if ratio > 0.0 {
            (ratio / 1.0).min(upper / (ratio * strong))
        } else {
            0.0
        };
        conditions.push(Condition {
            name: "separation",
            satisfied: pass(margin),
            margin,
            quantities: alloc::vec![
                Quantity {
                    label: "Δτ_1/T",
                    value: ratio,
                },
                Quantity {
                    label: "√OD upper scale",
                    value: upper,
                },
            ],
            note: None,
        });
    }

    let worst_margin = conditions
        .iter()
        .map(|c| c.margin)
        .fold(f64::INFINITY, f64::min);
    let verdict = if conditions.iter().all(|c| c.satisfied) {
        Verdict::Feasible
    } else if worst_margin >= thresholds.marginal_floor {
        Verdict::Marginal
    } else {
        Verdict::Infeasible
    };

    FeasibilityReport {
        conditions,
        worst_margin,
        verdict,
    }
}
