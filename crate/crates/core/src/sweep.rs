//! Batch evaluation over temperature or distance grids, and the
//! asymptote comparison report.
//!
//! Grid points are evaluated in parallel; rows always come back in axis
//! order and every row is a pure function of its inputs, so the output is
//! byte-identical for any thread count.
//!
//! CSV columns, in order:
//!
//! | column | content |
//! |---|---|
//! | `temperature_K` or `z_m` | axis value |
//! | `u_nonresonant_J`, `u_evanescent_J`, `u_total_J` | potential components |
//! | `<token>_J` | one per requested asymptote, in request order |
//! | `u_nr_<i>_J`, `u_ev_<i>_J` | per transition, only with `per_transition` |
//! | `regime` | regime label |
//! | `far_field_warning` | `true` / `false` |
//! | `error` | empty unless the row failed |
//!
//! Numbers are written with 17 significant digits; fields of a failed
//! computation are left empty.

use std::fmt;
use std::io::Write;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::potential::{
    asymptote_for, thermal_state_breakdown, u_total_eigenstate_with, Asymptote, Component,
    EvaluationPath, PotentialBreakdown, Scenario, TransitionContribution,
};
use crate::spectrum::{characteristic_temperatures, Preparation, Regime, REGIME_FACTOR};
use crate::units::C;
use crate::{Error, Result};

/// Environment variable capping the worker count; `0` means all cores.
pub const THREADS_ENV: &str = "CPK_THREADS";

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Axis {
    Temperature,
    Distance,
}

impl Axis {
    pub fn column(&self) -> &'static str {
        match self {
            Axis::Temperature => "temperature_K",
            Axis::Distance => "z_m",
        }
    }
}

impl FromStr for Axis {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "temperature" | "T" => Ok(Axis::Temperature),
            "distance" | "z" => Ok(Axis::Distance),
            _ => Err(Error::InvalidInput(format!(
                "unknown axis '{s}'; expected temperature or distance"
            ))),
        }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Spacing {
    #[default]
    Linear,
    Log,
}

impl FromStr for Spacing {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "linear" | "lin" => Ok(Spacing::Linear),
            "log" => Ok(Spacing::Log),
            _ => Err(Error::InvalidInput(format!(
                "unknown spacing '{s}'; expected linear or log"
            ))),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepSpec {
    pub axis: Axis,
    pub min: f64,
    pub max: f64,
    pub points: usize,
    pub spacing: Spacing,
    /// Asymptote columns to add, in output order.
    pub asymptotes: Vec<Asymptote>,
    pub per_transition: bool,
    pub path: EvaluationPath,
}

impl SweepSpec {
    pub fn new(axis: Axis, min: f64, max: f64, points: usize, spacing: Spacing) -> Self {
        SweepSpec {
            axis,
            min,
            max,
            points,
            spacing,
            asymptotes: Vec::new(),
            per_transition: false,
            path: EvaluationPath::Auto,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.min.is_finite() && self.max.is_finite() && self.min < self.max) {
            return Err(Error::InvalidInput(format!(
                "sweep range needs finite min < max, got [{}, {}]",
                self.min, self.max
            )));
        }
        if self.points < 2 {
            return Err(Error::InvalidInput(format!(
                "a sweep needs at least 2 points, got {}",
                self.points
            )));
        }
        if self.spacing == Spacing::Log && self.min <= 0.0 {
            return Err(Error::InvalidInput(format!(
                "log spacing needs min > 0, got {}",
                self.min
            )));
        }
        match self.axis {
            Axis::Temperature if self.min < 0.0 => Err(Error::InvalidInput(format!(
                "temperatures must be non-negative, got min = {}",
                self.min
            ))),
            Axis::Distance if self.min <= 0.0 => Err(Error::InvalidInput(format!(
                "distances must be positive, got min = {}",
                self.min
            ))),
            _ => Ok(()),
        }
    }

    /// Grid points; the end points are exactly `min` and `max`.
    pub fn grid(&self) -> Result<Vec<f64>> {
        self.validate()?;
        let last = self.points - 1;
        let frac = |i: usize| i as f64 / last as f64;
        let inner = |i: usize| match self.spacing {
            Spacing::Linear => self.min + (self.max - self.min) * frac(i),
            Spacing::Log => {
                let (a, b) = (self.min.ln(), self.max.ln());
                (a + (b - a) * frac(i)).exp()
            }
        };
        Ok((0..self.points)
            .map(|i| match i {
                0 => self.min,
                i if i == last => self.max,
                i => inner(i),
            })
            .collect())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub axis_value: f64,
    pub z: f64,
    pub temperature: f64,
    pub u_nonresonant: Option<f64>,
    pub u_evanescent: Option<f64>,
    pub u_total: Option<f64>,
    /// Same order as `SweepTable::asymptotes`.
    pub asymptotes: Vec<Option<f64>>,
    pub per_transition: Vec<TransitionContribution>,
    pub regime: Option<Regime>,
    pub far_field_warning: Option<bool>,
    pub error: Option<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepTable {
    pub species: String,
    pub axis: Axis,
    pub asymptotes: Vec<Asymptote>,
    pub per_transition: bool,
    /// Number of per-transition column pairs.
    pub transitions: usize,
    pub rows: Vec<SweepRow>,
}

/// Worker count from `CPK_THREADS`; unset or `0` means all cores.
pub fn threads_from_env() -> Result<usize> {
    match std::env::var(THREADS_ENV) {
        Err(_) => Ok(0),
        Ok(v) => v.trim().parse().map_err(|_| {
            Error::InvalidInput(format!(
                "{THREADS_ENV} must be a non-negative integer, got '{v}'"
            ))
        }),
    }
}

/// Full breakdown for the scenario's preparation: eigenstate or thermal
/// ensemble.
pub fn evaluate(scenario: &Scenario, path: EvaluationPath) -> Result<PotentialBreakdown> {
    match scenario.species.preparation {
        Preparation::Eigenstate(_) => u_total_eigenstate_with(scenario, path),
        Preparation::ThermalEnsemble => thermal_state_breakdown(scenario, path),
    }
}

fn transition_count(scenario: &Scenario) -> Result<usize> {
    Ok(match scenario.species.preparation {
        Preparation::Eigenstate(_) => scenario.species.prepared_transitions()?.len(),
        Preparation::ThermalEnsemble => scenario.species.pairs().len(),
    })
}

fn check_asymptotes(scenario: &Scenario, list: &[Asymptote]) -> Result<()> {
    let ensemble = scenario.species.preparation == Preparation::ThermalEnsemble;
    for a in list {
        if a.needs_ensemble() != ensemble {
            return Err(Error::Contract(format!(
                "{} ({}) does not apply to species '{}' prepared as {}",
                a.token(),
                a.name(),
                scenario.species.name,
                if ensemble {
                    "a thermal ensemble"
                } else {
                    "an eigenstate"
                }
            )));
        }
    }
    Ok(())
}

fn sweep_row(template: &Scenario, spec: &SweepSpec, x: f64) -> SweepRow {
    let scenario = match spec.axis {
        Axis::Temperature => template.at_temperature(x),
        Axis::Distance => template.at_distance(x),
    };
    let mut errors = Vec::new();
    let mut row = SweepRow {
        axis_value: x,
        z: scenario.z,
        temperature: scenario.temperature,
        u_nonresonant: None,
        u_evanescent: None,
        u_total: None,
        asymptotes: Vec::with_capacity(spec.asymptotes.len()),
        per_transition: Vec::new(),
        regime: None,
        far_field_warning: None,
        error: None,
    };
    match evaluate(&scenario, spec.path) {
        Ok(b) => {
            row.u_nonresonant = Some(b.u_nonresonant);
            row.u_evanescent = Some(b.u_evanescent);
            row.u_total = Some(b.u_total);
            row.regime = Some(b.regime);
            row.far_field_warning = Some(b.validity.far_field_warning);
            if spec.per_transition {
                row.per_transition = b.per_transition;
            }
        }
        Err(e) => errors.push(e.to_string()),
    }
    for &a in &spec.asymptotes {
        match asymptote_for(&scenario.species, scenario.z, scenario.temperature, a) {
            Ok(v) => row.asymptotes.push(Some(v)),
            Err(e) => {
                row.asymptotes.push(None);
                errors.push(format!("{}: {e}", a.token()));
            }
        }
    }
    if !errors.is_empty() {
        row.error = Some(errors.join("; "));
    }
    row
}

fn pool(threads: usize) -> Result<rayon::ThreadPool> {
    rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| Error::InvalidInput(format!("cannot start worker pool: {e}")))
}

/// Evaluates `template` at every grid point of `spec`, with the swept
/// variable replaced. `threads = 0` uses all cores.
///
/// Only an invalid template or spec is an error; numerical failures are
/// kept in the affected row's `error` field.
pub fn run_sweep(template: &Scenario, spec: &SweepSpec, threads: usize) -> Result<SweepTable> {
    template.validate()?;
    let grid = spec.grid()?;
    check_asymptotes(template, &spec.asymptotes)?;
    if spec.path == EvaluationPath::Closed && !template.surface.is_perfect() {
        return Err(Error::Contract(
            "closed forms are defined for a perfect reflector only".into(),
        ));
    }
    let rows = pool(threads)?.install(|| {
        grid.par_iter()
            .map(|&x| sweep_row(template, spec, x))
            .collect::<Vec<_>>()
    });
    Ok(SweepTable {
        species: template.species.name.clone(),
        axis: spec.axis,
        asymptotes: spec.asymptotes.clone(),
        per_transition: spec.per_transition,
        transitions: if spec.per_transition {
            transition_count(template)?
        } else {
            0
        },
        rows,
    })
}

fn num(v: Option<f64>) -> String {
    v.map(|x| format!("{x:.16e}")).unwrap_or_default()
}

impl SweepTable {
    pub fn failed_rows(&self) -> usize {
        self.rows.iter().filter(|r| r.error.is_some()).count()
    }

    pub fn header(&self) -> Vec<String> {
        let mut h: Vec<String> = [
            self.axis.column(),
            "u_nonresonant_J",
            "u_evanescent_J",
            "u_total_J",
        ]
        .iter()
        .map(|s| s.to_string())
        .collect();
        h.extend(self.asymptotes.iter().map(|a| format!("{}_J", a.token())));
        for i in 0..self.transitions {
            h.push(format!("u_nr_{i}_J"));
            h.push(format!("u_ev_{i}_J"));
        }
        h.extend(["regime", "far_field_warning", "error"].map(String::from));
        h
    }

    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        let io = |e: csv::Error| Error::Io(std::io::Error::other(e));
        w.write_record(self.header()).map_err(io)?;
        for r in &self.rows {
            let mut rec = vec![
                format!("{:.16e}", r.axis_value),
                num(r.u_nonresonant),
                num(r.u_evanescent),
                num(r.u_total),
            ];
            rec.extend(r.asymptotes.iter().map(|&a| num(a)));
            for i in 0..self.transitions {
                let c = r.per_transition.get(i);
                rec.push(num(c.map(|c| c.u_nr)));
                rec.push(num(c.map(|c| c.u_ev)));
            }
            rec.push(r.regime.map(|g| g.label().to_string()).unwrap_or_default());
            rec.push(
                r.far_field_warning
                    .map(|f| f.to_string())
                    .unwrap_or_default(),
            );
            rec.push(r.error.clone().unwrap_or_default());
            w.write_record(rec).map_err(io)?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn to_csv_string(&self) -> Result<String> {
        let mut buf = Vec::new();
        self.write_csv(&mut buf)?;
        Ok(String::from_utf8(buf).expect("CSV output is UTF-8"))
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("sweep tables serialize")
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AsymptoteComparison {
    pub asymptote: Asymptote,
    pub value: f64,
    /// `(asymptote − exact)/|exact|` for the matching component.
    pub relative_deviation: f64,
    /// Whether every transition sits inside the formula's declared regime.
    pub in_regime: bool,
    /// In regime and off by more than the tolerance.
    pub violation: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ComparisonRow {
    pub temperature: f64,
    pub u_nonresonant: Option<f64>,
    pub u_evanescent: Option<f64>,
    pub u_total: Option<f64>,
    pub regime: Option<Regime>,
    pub comparisons: Vec<AsymptoteComparison>,
    /// Total-potential asymptote with the smallest deviation.
    pub best_total: Option<Asymptote>,
    pub error: Option<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ComparisonSummary {
    /// `U_total(T_last)/U_total(T_first) − 1`.
    pub relative_change: Option<f64>,
    /// `max_T |U_total(T) − U_total(T_first)|/|U_total(T_first)|`.
    pub max_relative_variation: Option<f64>,
    pub violations: usize,
    pub failed_rows: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ComparisonReport {
    pub species: String,
    pub z: f64,
    pub tolerance: f64,
    pub rows: Vec<ComparisonRow>,
    pub summary: ComparisonSummary,
}

impl ComparisonReport {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("reports serialize")
    }
}

/// Lower edge of the affine window in units of `T_z`; the retarded
/// plateau and the linear law cross near `0.48 T_z`.
const LINEAR_ONSET: f64 = 3.0;

/// Declared validity of each asymptote for one transition, with `≪` read
/// as a factor of ten.
fn in_regime(which: Asymptote, omega: f64, z: f64, t: f64) -> Result<bool> {
    let ct = characteristic_temperatures(omega, z)?;
    let ll = |a: f64, b: f64| a * REGIME_FACTOR <= b;
    let x = z * omega.abs() / C;
    let nonretarded = ll(x, 1.0);
    let retarded = ll(1.0, x);
    Ok(match which {
        Asymptote::NonretardedNonresonant => nonretarded && ll(t, ct.t_z),
        Asymptote::NonretardedTotal | Asymptote::ThermalStateTotal => nonretarded,
        Asymptote::HighTemperatureNonresonant | Asymptote::HighTemperatureEvanescent => {
            ll(ct.t_omega, t)
        }
        Asymptote::RetardedNonresonant | Asymptote::RetardedTotal => retarded && ll(t, ct.t_z),
        Asymptote::LowTemperatureEvanescent => ll(t, ct.t_omega),
        Asymptote::LinearTotal => retarded && t >= LINEAR_ONSET * ct.t_z && ll(t, ct.t_omega),
    })
}

fn relevant_asymptotes(scenario: &Scenario) -> Vec<Asymptote> {
    let ensemble = scenario.species.preparation == Preparation::ThermalEnsemble;
    Asymptote::ALL
        .into_iter()
        .filter(|a| a.needs_ensemble() == ensemble)
        .collect()
}

fn comparison_row(scenario: &Scenario, list: &[Asymptote], tolerance: f64) -> ComparisonRow {
    let t = scenario.temperature;
    let mut row = ComparisonRow {
        temperature: t,
        u_nonresonant: None,
        u_evanescent: None,
        u_total: None,
        regime: None,
        comparisons: Vec::new(),
        best_total: None,
        error: None,
    };
    let b = match evaluate(scenario, EvaluationPath::Auto) {
        Ok(b) => b,
        Err(e) => {
            row.error = Some(e.to_string());
            return row;
        }
    };
    row.u_nonresonant = Some(b.u_nonresonant);
    row.u_evanescent = Some(b.u_evanescent);
    row.u_total = Some(b.u_total);
    row.regime = Some(b.regime);
    let omegas: Vec<f64> = b
        .per_transition
        .iter()
        .map(|c| c.transition.omega_kn)
        .collect();
    let mut errors = Vec::new();
    let mut best: Option<(f64, Asymptote)> = None;
    for &a in list {
        let value = match asymptote_for(&scenario.species, scenario.z, t, a) {
            Ok(v) => v,
            Err(e) => {
                errors.push(format!("{}: {e}", a.token()));
                continue;
            }
        };
        let exact = match a.component() {
            Component::Nonresonant => b.u_nonresonant,
            Component::Evanescent => b.u_evanescent,
            Component::Total => b.u_total,
        };
        let relative_deviation = (value - exact) / exact.abs();
        let mut inside = !omegas.is_empty();
        for &w in &omegas {
            match in_regime(a, w, scenario.z, t) {
                Ok(ok) => inside &= ok,
                Err(e) => {
                    errors.push(e.to_string());
                    inside = false;
                }
            }
        }
        if a.component() == Component::Total
            && relative_deviation.is_finite()
            && best.is_none_or(|(d, _)| relative_deviation.abs() < d)
        {
            best = Some((relative_deviation.abs(), a));
        }
        row.comparisons.push(AsymptoteComparison {
            asymptote: a,
            value,
            relative_deviation,
            in_regime: inside,
            violation: inside && !(relative_deviation.abs() <= tolerance),
        });
    }
    row.best_total = best.map(|(_, a)| a);
    if !errors.is_empty() {
        row.error = Some(errors.join("; "));
    }
    row
}

/// Tabulates the exact potential against every applicable asymptote on
/// a temperature grid. Perfect reflector only.
pub fn compare_asymptotics(
    scenario: &Scenario,
    temperatures: &[f64],
    tolerance: f64,
    threads: usize,
) -> Result<ComparisonReport> {
    scenario.validate()?;
    if !scenario.surface.is_perfect() {
        return Err(Error::Contract(
            "asymptote comparison needs a perfect reflector".into(),
        ));
    }
    if !(tolerance.is_finite() && tolerance > 0.0) {
        return Err(Error::InvalidInput(format!(
            "tolerance must be positive, got {tolerance}"
        )));
    }
    if temperatures.is_empty() {
        return Err(Error::InvalidInput("empty temperature grid".into()));
    }
    for &t in temperatures {
        if !(t.is_finite() && t >= 0.0) {
            return Err(Error::InvalidInput(format!(
                "temperatures must be non-negative, got {t}"
            )));
        }
    }
    let list = relevant_asymptotes(scenario);
    let rows = pool(threads)?.install(|| {
        temperatures
            .par_iter()
            .map(|&t| comparison_row(&scenario.at_temperature(t), &list, tolerance))
            .collect::<Vec<_>>()
    });

    let first = rows.first().and_then(|r| r.u_total);
    let last = rows.last().and_then(|r| r.u_total);
    let relative_change = first.zip(last).map(|(a, b)| b / a - 1.0);
    let max_relative_variation = first.map(|u0| {
        rows.iter()
            .filter_map(|r| r.u_total)
            .map(|u| (u - u0).abs() / u0.abs())
            .fold(0.0, f64::max)
    });
    let violations = rows
        .iter()
        .flat_map(|r| &r.comparisons)
        .filter(|c| c.violation)
        .count();
    let failed_rows = rows.iter().filter(|r| r.error.is_some()).count();
    Ok(ComparisonReport {
        species: scenario.species.name.clone(),
        z: scenario.z,
        tolerance,
        rows,
        summary: ComparisonSummary {
            relative_change,
            max_relative_variation,
            violations,
            failed_rows,
        },
    })
}

impl fmt::Display for Axis {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Axis::Temperature => "temperature",
            Axis::Distance => "distance",
        })
    }
}
