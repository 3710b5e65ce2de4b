//! Species data, thermal occupation and the temperature scales that
//! organise the potential's behaviour.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::numerics::compensated_sum;
use crate::units::{check_temperature, C, HBAR, K_B};
use crate::{Error, Result};

/// One dipole transition seen from the prepared level `n`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Transition {
    /// `(E_k − E_n)/ħ` in rad/s; negative for downward transitions.
    pub omega_kn: f64,
    /// `|d_nk|²` in C²·m².
    pub d2: f64,
}

impl Transition {
    pub fn new(omega_kn: f64, d2: f64) -> Result<Self> {
        let t = Transition { omega_kn, d2 };
        t.validate()?;
        Ok(t)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.omega_kn.is_finite() && self.omega_kn != 0.0) {
            return Err(Error::InvalidInput(format!(
                "transition frequency must be finite and non-zero, got {}",
                self.omega_kn
            )));
        }
        if !(self.d2.is_finite() && self.d2 >= 0.0) {
            return Err(Error::InvalidInput(format!(
                "squared dipole moment must be finite and non-negative, got {}",
                self.d2
            )));
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Level {
    /// Energy in joules.
    pub energy: f64,
}

/// A dipole-coupled pair of levels, by index.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TransitionSpec {
    pub from: usize,
    pub to: usize,
    /// `|d|²` in C²·m².
    pub d2: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Preparation {
    Eigenstate(usize),
    ThermalEnsemble,
}

/// A transition pair with `E_lower < E_upper`, as used by the thermal
/// ensemble.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LevelPair {
    pub lower: usize,
    pub upper: usize,
    /// `(E_upper − E_lower)/ħ`, positive.
    pub omega: f64,
    pub d2: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SpeciesState {
    pub name: String,
    pub levels: Vec<Level>,
    pub transitions: Vec<TransitionSpec>,
    pub preparation: Preparation,
}

impl SpeciesState {
    pub fn new(
        name: impl Into<String>,
        levels: Vec<Level>,
        transitions: Vec<TransitionSpec>,
        preparation: Preparation,
    ) -> Result<Self> {
        let s = SpeciesState {
            name: name.into(),
            levels,
            transitions,
            preparation,
        };
        s.validate()?;
        Ok(s)
    }

    /// Two levels `[0, ħω]` coupled by `d2`.
    pub fn two_level(
        name: impl Into<String>,
        omega: f64,
        d2: f64,
        preparation: Preparation,
    ) -> Result<Self> {
        if !(omega.is_finite() && omega > 0.0) {
            return Err(Error::InvalidInput(format!(
                "two-level frequency must be positive, got {omega}"
            )));
        }
        Self::new(
            name,
            vec![
                Level { energy: 0.0 },
                Level {
                    energy: HBAR * omega,
                },
            ],
            vec![TransitionSpec { from: 0, to: 1, d2 }],
            preparation,
        )
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| {
            Err(Error::InvalidInput(format!(
                "species '{}': {msg}",
                self.name
            )))
        };
        if self.levels.is_empty() {
            return bad("at least one level is required".into());
        }
        for (i, l) in self.levels.iter().enumerate() {
            if !l.energy.is_finite() {
                return bad(format!("level {i} has non-finite energy"));
            }
        }
        for (i, t) in self.transitions.iter().enumerate() {
            let n = self.levels.len();
            if t.from >= n || t.to >= n {
                return bad(format!("transition {i} refers to a level outside 0..{n}"));
            }
            if t.from == t.to {
                return bad(format!("transition {i} couples level {} to itself", t.from));
            }
            if !(t.d2.is_finite() && t.d2 >= 0.0) {
                return bad(format!("transition {i} has invalid |d|² = {}", t.d2));
            }
            if self.levels[t.from].energy == self.levels[t.to].energy {
                return bad(format!("transition {i} connects degenerate levels"));
            }
        }
        if let Preparation::Eigenstate(n) = self.preparation {
            if n >= self.levels.len() {
                return bad(format!("prepared level {n} does not exist"));
            }
        }
        Ok(())
    }

    /// All transitions touching level `n`, with frequencies relative to it.
    pub fn transitions_from(&self, n: usize) -> Vec<Transition> {
        self.transitions
            .iter()
            .filter_map(|t| {
                let k = if t.from == n {
                    t.to
                } else if t.to == n {
                    t.from
                } else {
                    return None;
                };
                Some(Transition {
                    omega_kn: (self.levels[k].energy - self.levels[n].energy) / HBAR,
                    d2: t.d2,
                })
            })
            .collect()
    }

    /// Transitions from the prepared eigenstate.
    pub fn prepared_transitions(&self) -> Result<Vec<Transition>> {
        match self.preparation {
            Preparation::Eigenstate(n) => Ok(self.transitions_from(n)),
            Preparation::ThermalEnsemble => Err(Error::Contract(format!(
                "species '{}' is a thermal ensemble, not an eigenstate",
                self.name
            ))),
        }
    }

    /// Each coupled pair ordered by energy.
    pub fn pairs(&self) -> Vec<LevelPair> {
        self.transitions
            .iter()
            .map(|t| {
                let (lower, upper) = if self.levels[t.from].energy < self.levels[t.to].energy {
                    (t.from, t.to)
                } else {
                    (t.to, t.from)
                };
                LevelPair {
                    lower,
                    upper,
                    omega: (self.levels[upper].energy - self.levels[lower].energy) / HBAR,
                    d2: t.d2,
                }
            })
            .collect()
    }

    /// Transition with the largest `|d|²` (ties: lowest frequency), used
    /// for regime labels and validity checks.
    pub fn dominant_frequency(&self) -> Option<f64> {
        self.pairs()
            .into_iter()
            .max_by(|a, b| a.d2.total_cmp(&b.d2).then(b.omega.total_cmp(&a.omega)))
            .map(|p| p.omega)
    }

    /// Largest `|ω|` over all transitions.
    pub fn max_frequency(&self) -> f64 {
        self.pairs().iter().map(|p| p.omega).fold(0.0, f64::max)
    }
}

/// Thermal photon number `[e^{ħω/k_BT} − 1]⁻¹`, continued to negative
/// frequencies as `−[n(|ω|) + 1]`.
pub fn photon_number(omega: f64, temperature: f64) -> Result<f64> {
    check_temperature(temperature)?;
    if omega == 0.0 || !omega.is_finite() {
        return Err(Error::Singular(format!(
            "photon number needs a finite non-zero frequency, got {omega}"
        )));
    }
    let upward = if temperature == 0.0 {
        0.0
    } else {
        1.0 / (HBAR * omega.abs() / (K_B * temperature)).exp_m1()
    };
    Ok(if omega > 0.0 { upward } else { -(upward + 1.0) })
}

/// Boltzmann populations of the species' levels at temperature `T > 0`.
pub fn boltzmann_weights(species: &SpeciesState, temperature: f64) -> Result<Vec<f64>> {
    if !(temperature.is_finite() && temperature > 0.0) {
        return Err(Error::InvalidInput(format!(
            "thermal populations need T > 0, got {temperature} K; prepare an eigenstate for T = 0"
        )));
    }
    let e_min = species
        .levels
        .iter()
        .map(|l| l.energy)
        .fold(f64::INFINITY, f64::min);
    let kt = K_B * temperature;
    let raw: Vec<f64> = species
        .levels
        .iter()
        .map(|l| (-(l.energy - e_min) / kt).exp())
        .collect();
    let z = compensated_sum(raw.iter().copied());
    Ok(raw.into_iter().map(|w| w / z).collect())
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CharacteristicTemperatures {
    /// Spectroscopic temperature `ħ|ω|/k_B`.
    pub t_omega: f64,
    /// Geometric temperature `ħc/(z_A k_B)`.
    pub t_z: f64,
}

pub fn characteristic_temperatures(omega: f64, z: f64) -> Result<CharacteristicTemperatures> {
    if omega == 0.0 || !omega.is_finite() {
        return Err(Error::InvalidInput(format!(
            "frequency must be finite and non-zero, got {omega}"
        )));
    }
    if !(z.is_finite() && z > 0.0) {
        return Err(Error::InvalidInput(format!(
            "distance must be positive, got {z} m"
        )));
    }
    Ok(CharacteristicTemperatures {
        t_omega: HBAR * omega.abs() / K_B,
        t_z: HBAR * C / (z * K_B),
    })
}

/// `a ≪ b` is read as `a < b / REGIME_FACTOR`.
pub const REGIME_FACTOR: f64 = 10.0;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Regime {
    /// `T_ω ≪ T_z`: the two constant plateaus overlap.
    TemperatureInvariantMolecule,
    /// Atom-like, `T ≪ T_z`.
    GeometricLowTemperature,
    /// Atom-like, `T_z ≪ T ≪ T_ω`.
    LinearRegime,
    /// Atom-like, `T ≫ T_ω`.
    Saturated,
    Crossover,
}

impl Regime {
    pub fn label(&self) -> &'static str {
        match self {
            Regime::TemperatureInvariantMolecule => "temperature-invariant (molecule)",
            Regime::GeometricLowTemperature => "geometric low-temperature",
            Regime::LinearRegime => "linear regime",
            Regime::Saturated => "saturated",
            Regime::Crossover => "crossover",
        }
    }
}

impl fmt::Display for Regime {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

/// Regime of a single transition; depends only on `T/T_z` and `T/T_ω`.
pub fn classify_transition(omega: f64, z: f64, temperature: f64) -> Result<Regime> {
    check_temperature(temperature)?;
    let ct = characteristic_temperatures(omega, z)?;
    let much_less = |a: f64, b: f64| a < b / REGIME_FACTOR;
    if much_less(ct.t_omega, ct.t_z) {
        return Ok(Regime::TemperatureInvariantMolecule);
    }
    if !much_less(ct.t_z, ct.t_omega) {
        return Ok(Regime::Crossover);
    }
    let t = temperature;
    Ok(if much_less(t, ct.t_z) {
        Regime::GeometricLowTemperature
    } else if much_less(ct.t_omega, t) {
        Regime::Saturated
    } else if much_less(t, ct.t_omega) {
        // T ≥ T_z/10 here; the affine law already holds from there on.
        Regime::LinearRegime
    } else {
        Regime::Crossover
    })
}

/// Regime label of the species' dominant transition.
pub fn classify_regime(species: &SpeciesState, z: f64, temperature: f64) -> Result<Regime> {
    let omega = species.dominant_frequency().ok_or_else(|| {
        Error::InvalidInput(format!("species '{}' has no transitions", species.name))
    })?;
    classify_transition(omega, z, temperature)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    const Z5: f64 = 5e-6;

    fn omega_for_ratio(ratio: f64, z: f64) -> f64 {
        ratio * C / z
    }

    fn rel(a: f64, b: f64) -> f64 {
        (a - b).abs() / b.abs()
    }

    #[test]
    fn photon_number_at_unit_argument() {
        let t = 100.0;
        let omega = K_B * t / HBAR;
        let n = photon_number(omega, t).unwrap();
        assert!((n - 1.0 / (std::f64::consts::E - 1.0)).abs() < 1e-15);
        assert!((n - 0.581_977).abs() < 1e-6);
    }

    #[test]
    fn downward_rule_is_exact() {
        let (omega, t) = (3e12, 40.0);
        let up = photon_number(omega, t).unwrap();
        let down = photon_number(-omega, t).unwrap();
        assert_eq!(down, -(up + 1.0));
    }

    #[test]
    fn photon_number_small_argument_series() {
        let t = 300.0;
        let x: f64 = 1e-6;
        let omega = x * K_B * t / HBAR;
        let n = photon_number(omega, t).unwrap();
        let series = 1.0 / x - 0.5 + x / 12.0;
        assert!(rel(n, series) < 1e-9, "{n} vs {series}");
        assert!(rel(n, 1e6 - 0.5) < 1e-3);
    }

    #[test]
    fn photon_number_zero_temperature_and_errors() {
        assert_eq!(photon_number(1e13, 0.0).unwrap(), 0.0);
        assert_eq!(photon_number(-1e13, 0.0).unwrap(), -1.0);
        assert!(matches!(photon_number(0.0, 10.0), Err(Error::Singular(_))));
        assert!(photon_number(1e13, -1.0).is_err());
    }

    #[test]
    fn weights_for_ln2_spacing() {
        let t = 50.0;
        let s = SpeciesState::two_level(
            "x",
            K_B * t * std::f64::consts::LN_2 / HBAR,
            1.0,
            Preparation::ThermalEnsemble,
        )
        .unwrap();
        let p = boltzmann_weights(&s, t).unwrap();
        assert!((p[0] - 2.0 / 3.0).abs() < 1e-14);
        assert!((p[1] - 1.0 / 3.0).abs() < 1e-14);
    }

    #[test]
    fn weights_equipartition_proxy() {
        let t = 300.0;
        let s = SpeciesState::two_level(
            "x",
            1e-8 * K_B * t / HBAR,
            1.0,
            Preparation::ThermalEnsemble,
        )
        .unwrap();
        let p = boltzmann_weights(&s, t).unwrap();
        assert!((p[0] - 0.5).abs() < 1e-8 && (p[1] - 0.5).abs() < 1e-8);
    }

    #[test]
    fn weights_three_levels() {
        let t = 20.0;
        let kt = K_B * t;
        let s = SpeciesState::new(
            "three",
            vec![
                Level { energy: 0.0 },
                Level { energy: kt },
                Level { energy: 3.0 * kt },
            ],
            vec![],
            Preparation::ThermalEnsemble,
        )
        .unwrap();
        let p = boltzmann_weights(&s, t).unwrap();
        let e = std::f64::consts::E;
        let norm = 1.0 + 1.0 / e + 1.0 / (e * e * e);
        let expect = [1.0 / norm, 1.0 / (e * norm), 1.0 / (e * e * e * norm)];
        for (a, b) in p.iter().zip(expect) {
            assert!(rel(*a, b) < 1e-14);
        }
        assert!(boltzmann_weights(&s, 0.0).is_err());
    }

    #[test]
    fn characteristic_temperature_examples() {
        let ct = characteristic_temperatures(C / Z5, Z5).unwrap();
        assert!(rel(ct.t_omega, ct.t_z) < 1e-15);
        let ct = characteristic_temperatures(3.93e13, Z5).unwrap();
        assert!((ct.t_omega - 300.0).abs() < 1.5);
        let ct = characteristic_temperatures(omega_for_ratio(0.046, Z5), Z5).unwrap();
        assert!(rel(ct.t_omega / ct.t_z, 0.046) < 1e-12);
    }

    #[test]
    fn regime_examples() {
        let lih = SpeciesState::two_level(
            "LiH",
            omega_for_ratio(0.046, Z5),
            1.0,
            Preparation::Eigenstate(0),
        )
        .unwrap();
        for t in [0.0, 1.0, 77.0, 300.0, 600.0] {
            assert_eq!(
                classify_regime(&lih, Z5, t).unwrap(),
                Regime::TemperatureInvariantMolecule
            );
        }
        let rb = SpeciesState::two_level(
            "Rb",
            omega_for_ratio(40.2, Z5),
            1.0,
            Preparation::Eigenstate(0),
        )
        .unwrap();
        assert_eq!(
            classify_regime(&rb, Z5, 300.0).unwrap(),
            Regime::LinearRegime
        );
        assert_eq!(
            classify_regime(&rb, Z5, 1.0).unwrap(),
            Regime::GeometricLowTemperature
        );
        assert_eq!(classify_regime(&rb, Z5, 1e6).unwrap(), Regime::Saturated);
        let ybf = SpeciesState::two_level(
            "YbF",
            omega_for_ratio(1.59, Z5),
            1.0,
            Preparation::Eigenstate(0),
        )
        .unwrap();
        for t in [0.0, 10.0, 300.0, 1e5] {
            assert_eq!(classify_regime(&ybf, Z5, t).unwrap(), Regime::Crossover);
        }
        assert_eq!(Regime::LinearRegime.to_string(), "linear regime");
    }

    #[test]
    fn transitions_seen_from_each_level() {
        let s = SpeciesState::two_level("x", 1e13, 2.0, Preparation::Eigenstate(1)).unwrap();
        let down = s.prepared_transitions().unwrap();
        assert_eq!(down.len(), 1);
        assert!(rel(down[0].omega_kn, -1e13) < 1e-15);
        let up = s.transitions_from(0);
        assert_eq!(up[0].omega_kn, -down[0].omega_kn);
    }

    #[test]
    fn invalid_species_rejected() {
        let lv = vec![Level { energy: 0.0 }, Level { energy: 1e-21 }];
        let t = |from, to, d2| vec![TransitionSpec { from, to, d2 }];
        assert!(
            SpeciesState::new("a", lv.clone(), t(0, 2, 1.0), Preparation::ThermalEnsemble).is_err()
        );
        assert!(
            SpeciesState::new("a", lv.clone(), t(0, 0, 1.0), Preparation::ThermalEnsemble).is_err()
        );
        assert!(
            SpeciesState::new("a", lv.clone(), t(0, 1, -1.0), Preparation::ThermalEnsemble)
                .is_err()
        );
        assert!(
            SpeciesState::new("a", lv.clone(), t(0, 1, 1.0), Preparation::Eigenstate(5)).is_err()
        );
        let degenerate = vec![Level { energy: 0.0 }, Level { energy: 0.0 }];
        assert!(
            SpeciesState::new("a", degenerate, t(0, 1, 1.0), Preparation::ThermalEnsemble).is_err()
        );
    }

    proptest! {
        #[test]
        fn photon_identity(log_w in 8.0f64..17.0, log_t in -1.0f64..4.0, sign in prop::bool::ANY) {
            let omega = if sign { 1.0 } else { -1.0 } * 10f64.powf(log_w);
            let t = 10f64.powf(log_t);
            let sum = photon_number(omega, t).unwrap() + photon_number(-omega, t).unwrap();
            let n = photon_number(omega.abs(), t).unwrap();
            prop_assert!((sum + 1.0).abs() <= 2.0 * f64::EPSILON * (n + 1.0));
        }

        #[test]
        fn photon_number_increases_with_t(log_w in 8.0f64..16.0, t in 0.1f64..1e4, f in 1.001f64..10.0) {
            let omega = 10f64.powf(log_w);
            prop_assert!(photon_number(omega, t * f).unwrap() >= photon_number(omega, t).unwrap());
        }

        #[test]
        fn weights_shift_invariant(e1 in 0.0f64..5.0, e2 in 0.0f64..5.0, shift in -50.0f64..50.0, t in 1.0f64..500.0) {
            let kt = K_B * t;
            let mk = |s: f64| SpeciesState::new(
                "x",
                vec![Level { energy: s * kt }, Level { energy: (s + e1) * kt }, Level { energy: (s + e2) * kt }],
                vec![],
                Preparation::ThermalEnsemble,
            ).unwrap();
            let a = boltzmann_weights(&mk(0.0), t).unwrap();
            let b = boltzmann_weights(&mk(shift), t).unwrap();
            prop_assert!((a.iter().sum::<f64>() - 1.0).abs() < 1e-12);
            for (x, y) in a.iter().zip(&b) {
                prop_assert!((x - y).abs() <= 1e-12 * x.max(*y) + 1e-300);
            }
        }

        #[test]
        fn regime_is_scale_invariant(log_r in -3.0f64..3.0, log_t in -3.0f64..3.0, log_s in -2.0f64..2.0) {
            let z = 5e-6;
            let omega = 10f64.powf(log_r) * C / z;
            let t_z = HBAR * C / (z * K_B);
            let t = 10f64.powf(log_t) * t_z;
            let s = 10f64.powf(log_s);
            let a = classify_transition(omega, z, t).unwrap();
            let b = classify_transition(omega * s, z / s, t * s).unwrap();
            // Exact boundary hits aside, rescaling all three leaves the label unchanged.
            let ct = characteristic_temperatures(omega, z).unwrap();
            let near_edge = [ct.t_omega, ct.t_z, ct.t_z / 10.0, ct.t_z / 100.0, ct.t_omega / 10.0, ct.t_omega * 10.0, ct.t_z * 10.0]
                .iter().any(|e| (t / e - 1.0).abs() < 1e-9 || (ct.t_omega / (ct.t_z * 10.0) - 1.0).abs() < 1e-9 || (ct.t_z / (ct.t_omega * 10.0) - 1.0).abs() < 1e-9);
            prop_assert!(a == b || near_edge);
        }
    }
}
