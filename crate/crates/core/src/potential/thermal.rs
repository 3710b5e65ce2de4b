//! Thermal-ensemble potential and the dilute-medium Casimir energy.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use super::{
    check_distance, nonresonant_transition, nonresonant_transition_closed, EvaluationPath,
    PotentialBreakdown, Scenario, TransitionContribution, Validity,
};
use crate::material::SurfaceModel;
use crate::numerics::{compensated_sum, integrate_interval, Tolerances};
use crate::spectrum::{
    boltzmann_weights, classify_regime, Preparation, SpeciesState, Transition, REGIME_FACTOR,
};
use crate::units::{C, EPS0, HBAR, K_B};
use crate::{Error, Result};

/// Nonresonant component `U^nr_nk` of the lower level `n` of a pair
/// (`ω > 0`). The upper level's component is its exact negative.
pub fn pair_nonresonant(
    surface: &SurfaceModel,
    omega: f64,
    d2: f64,
    z: f64,
    temperature: f64,
    tol: &Tolerances,
    path: EvaluationPath,
) -> Result<f64> {
    let tr = Transition::new(omega, d2)?;
    if path.use_closed(surface)? {
        nonresonant_transition_closed(tr, z, temperature, tol)
    } else {
        nonresonant_transition(surface, tr, z, temperature, tol)
    }
}

/// `Σ_{n<k} p_nk tanh(ħω_kn/2k_BT) U^nr_nk`: resonant parts cancel
/// pairwise at equilibrium.
pub fn u_thermal_state(scenario: &Scenario) -> Result<f64> {
    u_thermal_state_with(scenario, EvaluationPath::Auto)
}

pub fn u_thermal_state_with(scenario: &Scenario, path: EvaluationPath) -> Result<f64> {
    Ok(thermal_state_breakdown(scenario, path)?.u_total)
}

/// Thermal-state potential split per level pair. The resonant parts of
/// the two levels of each pair cancel exactly, so the evanescent
/// components are zero and each pair entry carries its weighted
/// nonresonant share.
pub fn thermal_state_breakdown(
    scenario: &Scenario,
    path: EvaluationPath,
) -> Result<PotentialBreakdown> {
    scenario.validate()?;
    let species = &scenario.species;
    if species.preparation != Preparation::ThermalEnsemble {
        return Err(Error::Contract(format!(
            "species '{}' is not prepared as a thermal ensemble",
            species.name
        )));
    }
    let (z, t) = (scenario.z, scenario.temperature);
    let p = boltzmann_weights(species, t)?;
    let mut per = Vec::new();
    for pair in species.pairs() {
        let u_nk = pair_nonresonant(
            &scenario.surface,
            pair.omega,
            pair.d2,
            z,
            t,
            &scenario.tolerances,
            path,
        )?;
        let p_nk = p[pair.lower] + p[pair.upper];
        let weight = (HBAR * pair.omega / (2.0 * K_B * t)).tanh();
        per.push(TransitionContribution {
            transition: Transition::new(pair.omega, pair.d2)?,
            u_nr: p_nk * weight * u_nk,
            u_ev: 0.0,
        });
    }
    let total = compensated_sum(per.iter().map(|c| c.u_nr));
    let far_field = per
        .iter()
        .any(|c| z * c.transition.omega_kn.abs() / C > 1.0);
    Ok(PotentialBreakdown {
        u_nonresonant: total,
        u_evanescent: 0.0,
        u_total: total,
        per_transition: per,
        regime: classify_regime(species, z, t)?,
        validity: Validity {
            far_field_warning: far_field,
        },
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CasimirEnergy {
    /// Closed form from the thermal-state asymptote, J/m².
    pub closed: f64,
    /// Direct integration of the thermal-state potential, J/m².
    pub numerical: f64,
    /// Quadrature error estimate of `numerical`.
    pub numerical_error: f64,
    /// Distance beyond which the `1/z_A³` tail was integrated analytically.
    pub cutoff: f64,
    pub warnings: Vec<String>,
}

/// Relative drift of `U z_A³` between the cutoff and twice the cutoff
/// accepted as a certified `1/z_A³` tail.
const TAIL_DRIFT: f64 = 1e-4;
const MAX_CUTOFF_FACTOR: f64 = 256.0;

/// Casimir energy per unit area of a dilute half-space of density `eta`
/// whose nearest face is at distance `z`: `E = η ∫_z^∞ U(z_A) dz_A`.
///
/// The energy is attractive, so both paths return a negative number.
pub fn casimir_energy_dilute(
    species: &SpeciesState,
    surface: &SurfaceModel,
    z: f64,
    temperature: f64,
    eta: f64,
    tol: &Tolerances,
) -> Result<CasimirEnergy> {
    check_distance(z)?;
    if !(eta.is_finite() && eta > 0.0) {
        return Err(Error::InvalidInput(format!(
            "number density must be positive, got {eta} m⁻³"
        )));
    }
    let base = Scenario::new(species.clone(), *surface, z, temperature, *tol)?;
    if species.preparation != Preparation::ThermalEnsemble {
        return Err(Error::Contract(format!(
            "species '{}' must be prepared as a thermal ensemble",
            species.name
        )));
    }

    let p = boltzmann_weights(species, temperature)?;
    let weighted: f64 = species
        .pairs()
        .iter()
        .map(|pair| (p[pair.lower] + p[pair.upper]) * pair.d2)
        .sum();
    let closed = -eta * weighted / (96.0 * PI * EPS0 * z * z);

    let mut warnings = Vec::new();
    let w_max = species.max_frequency();
    let check_regime = |z_a: f64, warnings: &mut Vec<String>| {
        let ratio = z_a * w_max / C;
        if ratio >= 1.0 / REGIME_FACTOR {
            warnings.push(format!(
                "z_A|ω|/c = {ratio:.3} at z_A = {z_a:e} m is outside the molecule regime"
            ));
        }
    };

    // g(z_A) = U(z_A) z_A³ is nearly constant; with s = 1/z_A²,
    // ∫ U dz_A = ½ ∫ g ds.
    let g = |z_a: f64| -> Result<f64> {
        Ok(super::u_thermal_state(&base.at_distance(z_a))? * z_a * z_a * z_a)
    };

    let mut cutoff = 4.0 * z;
    let mut g_cut = g(cutoff)?;
    let mut certified = false;
    while cutoff <= MAX_CUTOFF_FACTOR * z {
        let g_next = g(2.0 * cutoff)?;
        if (g_next - g_cut).abs() <= TAIL_DRIFT * g_cut.abs() {
            certified = true;
            break;
        }
        cutoff *= 2.0;
        g_cut = g_next;
    }
    if !certified {
        warnings.push(format!(
            "1/z_A³ tail not certified up to z_A = {cutoff:e} m; tail is approximate"
        ));
    }
    check_regime(z, &mut warnings);
    check_regime(cutoff, &mut warnings);

    let mut failure: Option<Error> = None;
    let integrand = |s: f64| match g(1.0 / s.sqrt()) {
        Ok(v) => v,
        Err(e) => {
            failure.get_or_insert(e);
            f64::NAN
        }
    };
    let body = integrate_interval(
        integrand,
        1.0 / (cutoff * cutoff),
        1.0 / (z * z),
        1,
        &tol.quadrature(0.0),
    );
    if let Some(e) = failure {
        return Err(e);
    }
    let body = body.map_err(|e| Error::numerics("Casimir energy distance integral", e))?;
    let tail = g_cut / (2.0 * cutoff * cutoff);
    Ok(CasimirEnergy {
        closed,
        numerical: eta * (0.5 * body.value + tail),
        numerical_error: eta * 0.5 * body.error,
        cutoff,
        warnings,
    })
}
