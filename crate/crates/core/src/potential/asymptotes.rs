//! Closed-form regime asymptotes of the perfect-reflector potential.
//!
//! Each formula is evaluated directly from the species data; none of them
//! is ever used as a fallback inside the exact engine.

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::{check_distance, Scenario};
use crate::spectrum::{boltzmann_weights, photon_number, Preparation, SpeciesState};
use crate::units::{check_temperature, C, EPS0, HBAR, K_B};
use crate::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub enum Asymptote {
    /// Nonresonant part for `T ≪ T_z`: `−Σ(n + ½)|d|²/(24πε₀z³)`.
    NonretardedNonresonant,
    /// Temperature-independent total `−Σ|d|²/(48πε₀z³)`.
    NonretardedTotal,
    /// Nonresonant part for `T ≫ T_ω`, dominated by the static term.
    HighTemperatureNonresonant,
    /// Evanescent part for `T ≫ T_ω`.
    HighTemperatureEvanescent,
    /// Retarded zero-temperature nonresonant part, `∝ 1/z⁴`.
    RetardedNonresonant,
    /// Evanescent part for `T ≪ T_z ≪ T_ω`: downward transitions only.
    LowTemperatureEvanescent,
    /// Atom total for `T ≪ T_z`.
    RetardedTotal,
    /// Atom total for `T_z ≪ T ≪ T_ω`, affine in `T`.
    LinearTotal,
    /// Thermal-ensemble total `−Σ_{n<k} p_nk|d|²/(48πε₀z³)`.
    ThermalStateTotal,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Component {
    Nonresonant,
    Evanescent,
    Total,
}

impl Asymptote {
    pub const ALL: [Asymptote; 9] = [
        Asymptote::NonretardedNonresonant,
        Asymptote::NonretardedTotal,
        Asymptote::HighTemperatureNonresonant,
        Asymptote::HighTemperatureEvanescent,
        Asymptote::RetardedNonresonant,
        Asymptote::LowTemperatureEvanescent,
        Asymptote::RetardedTotal,
        Asymptote::LinearTotal,
        Asymptote::ThermalStateTotal,
    ];

    /// Short token used on the command line and in output headers.
    pub fn token(&self) -> &'static str {
        match self {
            Asymptote::NonretardedNonresonant => "eq9",
            Asymptote::NonretardedTotal => "eq10",
            Asymptote::HighTemperatureNonresonant => "eq11",
            Asymptote::HighTemperatureEvanescent => "eq12",
            Asymptote::RetardedNonresonant => "eq14",
            Asymptote::LowTemperatureEvanescent => "eq15",
            Asymptote::RetardedTotal => "eq16",
            Asymptote::LinearTotal => "eq17",
            Asymptote::ThermalStateTotal => "eq19",
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            Asymptote::NonretardedNonresonant => "nonretarded_nonresonant",
            Asymptote::NonretardedTotal => "nonretarded_total",
            Asymptote::HighTemperatureNonresonant => "high_temperature_nonresonant",
            Asymptote::HighTemperatureEvanescent => "high_temperature_evanescent",
            Asymptote::RetardedNonresonant => "retarded_nonresonant",
            Asymptote::LowTemperatureEvanescent => "low_temperature_evanescent",
            Asymptote::RetardedTotal => "retarded_total",
            Asymptote::LinearTotal => "linear_total",
            Asymptote::ThermalStateTotal => "thermal_state_total",
        }
    }

    pub fn component(&self) -> Component {
        match self {
            Asymptote::NonretardedNonresonant
            | Asymptote::HighTemperatureNonresonant
            | Asymptote::RetardedNonresonant => Component::Nonresonant,
            Asymptote::HighTemperatureEvanescent | Asymptote::LowTemperatureEvanescent => {
                Component::Evanescent
            }
            Asymptote::NonretardedTotal
            | Asymptote::RetardedTotal
            | Asymptote::LinearTotal
            | Asymptote::ThermalStateTotal => Component::Total,
        }
    }

    /// Whether the formula needs a thermal ensemble rather than an
    /// eigenstate.
    pub fn needs_ensemble(&self) -> bool {
        matches!(self, Asymptote::ThermalStateTotal)
    }
}

impl fmt::Display for Asymptote {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.token())
    }
}

impl FromStr for Asymptote {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let key = s.trim().to_ascii_lowercase();
        Asymptote::ALL
            .into_iter()
            .find(|a| a.token() == key || a.name() == key)
            .ok_or_else(|| {
                let known: Vec<_> = Asymptote::ALL.iter().map(|a| a.token()).collect();
                Error::InvalidInput(format!(
                    "unknown asymptote '{s}'; expected one of {}",
                    known.join(", ")
                ))
            })
    }
}

impl TryFrom<String> for Asymptote {
    type Error = Error;

    fn try_from(s: String) -> Result<Self> {
        s.parse()
    }
}

impl From<Asymptote> for String {
    fn from(a: Asymptote) -> Self {
        a.token().to_string()
    }
}

fn step(x: f64) -> f64 {
    if x > 0.0 {
        1.0
    } else if x < 0.0 {
        0.0
    } else {
        0.5
    }
}

pub fn asymptote(scenario: &Scenario, which: Asymptote) -> Result<f64> {
    scenario.validate()?;
    asymptote_for(&scenario.species, scenario.z, scenario.temperature, which)
}

/// Evaluates one closed-form asymptote for `species` at distance `z` and
/// temperature `T`.
pub fn asymptote_for(
    species: &SpeciesState,
    z: f64,
    temperature: f64,
    which: Asymptote,
) -> Result<f64> {
    check_distance(z)?;
    check_temperature(temperature)?;
    let pref = 1.0 / (24.0 * PI * EPS0 * z * z * z);
    let kt = K_B * temperature;

    if which == Asymptote::ThermalStateTotal {
        if species.preparation != Preparation::ThermalEnsemble {
            return Err(Error::Contract(format!(
                "{which} applies to a thermal ensemble; species '{}' is an eigenstate",
                species.name
            )));
        }
        let p = boltzmann_weights(species, temperature)?;
        let s: f64 = species
            .pairs()
            .iter()
            .map(|pair| (p[pair.lower] + p[pair.upper]) * pair.d2)
            .sum();
        return Ok(-0.5 * pref * s);
    }

    let transitions = species.prepared_transitions()?;
    let mut total = 0.0;
    for tr in transitions {
        let (w, d2) = (tr.omega_kn, tr.d2);
        let theta_down = step(-w);
        total += match which {
            Asymptote::NonretardedNonresonant => {
                -pref * (photon_number(w, temperature)? + 0.5) * d2
            }
            Asymptote::NonretardedTotal => -0.5 * pref * d2,
            Asymptote::HighTemperatureNonresonant => -pref * kt / (HBAR * w) * d2,
            Asymptote::HighTemperatureEvanescent => pref * (kt / (HBAR * w) - 0.5) * d2,
            Asymptote::RetardedNonresonant => -C * d2 / (w * 16.0 * PI * PI * EPS0 * z.powi(4)),
            Asymptote::LowTemperatureEvanescent => -pref * theta_down * d2,
            Asymptote::RetardedTotal => -pref * (3.0 * C / (2.0 * PI * z * w) + theta_down) * d2,
            Asymptote::LinearTotal => -pref * (kt / (HBAR * w) + theta_down) * d2,
            Asymptote::ThermalStateTotal => unreachable!(),
        };
    }
    Ok(total)
}
