//! The potential engine.
//!
//! Every transition is evaluated on its own; scenario totals are
//! compensated sums of the per-transition pieces. The b-integrals are
//! carried in the dimensionless variable `v = 2 b z_A` and normalised by
//! the perfect-reflector value `c²/(2 z_A³)`, so a perfect mirror gives
//! exactly one for the static term and for the evanescent bracket.

mod asymptotes;
mod thermal;

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

pub use asymptotes::{asymptote, asymptote_for, Asymptote, Component};
pub use thermal::{
    casimir_energy_dilute, pair_nonresonant, thermal_state_breakdown, u_thermal_state,
    u_thermal_state_with, CasimirEnergy,
};

use crate::material::{
    reflection_from_susceptibility, susceptibility, ImaginaryAxisResponse, SurfaceModel,
};
use crate::numerics::{
    compensated_sum, integrate_decaying, sum_matsubara_with, QuadratureControl, TailModel,
    Tolerances,
};
use crate::spectrum::{classify_regime, photon_number, Regime, SpeciesState, Transition};
use crate::units::{check_temperature, matsubara_spacing, C, EPS0, HBAR, K_B, MU0};
use crate::{Error, Result};

/// Ratio between the static Matsubara sample and the first Matsubara
/// frequency, and the tighter ratio used to confirm the limit.
const STATIC_SAMPLE: f64 = 1e-6;
const STATIC_CHECK: f64 = 1e-7;
const STATIC_STABILITY: f64 = 1e-6;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Scenario {
    pub species: SpeciesState,
    pub surface: SurfaceModel,
    /// Atom–surface distance in metres.
    pub z: f64,
    /// Temperature in kelvin.
    pub temperature: f64,
    pub tolerances: Tolerances,
}

impl Scenario {
    pub fn new(
        species: SpeciesState,
        surface: SurfaceModel,
        z: f64,
        temperature: f64,
        tolerances: Tolerances,
    ) -> Result<Self> {
        let s = Scenario {
            species,
            surface,
            z,
            temperature,
            tolerances,
        };
        s.validate()?;
        Ok(s)
    }

    pub fn validate(&self) -> Result<()> {
        check_distance(self.z)?;
        check_temperature(self.temperature)?;
        self.surface.validate()?;
        self.species.validate()?;
        self.tolerances
            .validate()
            .map_err(|e| Error::InvalidInput(e.to_string()))
    }

    pub fn at_temperature(&self, temperature: f64) -> Self {
        Scenario {
            temperature,
            ..self.clone()
        }
    }

    pub fn at_distance(&self, z: f64) -> Self {
        Scenario { z, ..self.clone() }
    }
}

/// Which evaluation route to take for the potential components.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EvaluationPath {
    /// Closed forms for a perfect reflector, quadrature otherwise.
    #[default]
    Auto,
    /// Reflection-coefficient integrals for every surface.
    Numerical,
    /// Perfect-reflector closed forms only.
    Closed,
}

impl EvaluationPath {
    fn use_closed(self, surface: &SurfaceModel) -> Result<bool> {
        match self {
            EvaluationPath::Auto => Ok(surface.is_perfect()),
            EvaluationPath::Numerical => Ok(false),
            EvaluationPath::Closed => {
                require_perfect(surface)?;
                Ok(true)
            }
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TransitionContribution {
    pub transition: Transition,
    pub u_nr: f64,
    pub u_ev: f64,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Validity {
    /// Set when some `z_A|ω_kn|/c > 1`; the omitted propagating-wave
    /// component may then matter.
    pub far_field_warning: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PotentialBreakdown {
    pub u_nonresonant: f64,
    pub u_evanescent: f64,
    pub u_total: f64,
    pub per_transition: Vec<TransitionContribution>,
    pub regime: Regime,
    pub validity: Validity,
}

fn check_distance(z: f64) -> Result<()> {
    if z.is_finite() && z > 0.0 {
        Ok(())
    } else {
        Err(Error::InvalidInput(format!(
            "distance must be finite and positive, got {z} m"
        )))
    }
}

fn require_perfect(surface: &SurfaceModel) -> Result<()> {
    if surface.is_perfect() {
        Ok(())
    } else {
        Err(Error::Contract(
            "closed forms are defined for a perfect reflector only".into(),
        ))
    }
}

fn check_common(tr: &Transition, z: f64, temperature: f64, tol: &Tolerances) -> Result<()> {
    tr.validate()?;
    check_distance(z)?;
    check_temperature(temperature)?;
    tol.validate()
        .map_err(|e| Error::InvalidInput(e.to_string()))
}

/// `c²/(2 z³)`, the perfect-reflector value of `∫ db e^{−2bz} 2b²c²`.
fn b_norm(z: f64) -> f64 {
    C * C / (2.0 * z * z * z)
}

fn quad(tol: &Tolerances, scale: f64) -> QuadratureControl {
    tol.quadrature(f64::EPSILON * scale)
}

/// `∫_{ξ/c}^∞ db e^{−2bz}{2b²c² r_p − ξ²(r_s + r_p)}` divided by
/// `c²/(2z³)`: `¼ e^{−α} ∫₀^∞ dv e^{−v}[2(α+v)² r_p − α²(r_s + r_p)]`
/// with `α = 2zξ/c` and `b = (α + v)/(2z)`.
fn matsubara_b_integral(
    response: &ImaginaryAxisResponse,
    xi: f64,
    z: f64,
    tol: &Tolerances,
) -> std::result::Result<f64, crate::NumericsError> {
    let alpha = 2.0 * z * xi / C;
    let decay = (-alpha).exp();
    if decay == 0.0 {
        return Ok(0.0);
    }
    let integrand = |v: f64| {
        let beta = alpha + v;
        let (r_s, r_p) = response.at(beta / (2.0 * z));
        (-v).exp() * (2.0 * beta * beta * r_p - alpha * alpha * (r_s + r_p))
    };
    let est = integrate_decaying(integrand, 0.0, 1.0, &quad(tol, 1.0 + alpha * alpha))?;
    Ok(0.25 * decay * est.value)
}

/// Static (`ξ → 0⁺`) bracket, `¼ ∫₀^∞ dv e^{−v} 2v² r_p(i ξ₀)`, normalised.
fn static_b_integral(surface: &SurfaceModel, xi0: f64, z: f64, tol: &Tolerances) -> Result<f64> {
    let response = ImaginaryAxisResponse::new(surface, xi0)?;
    let integrand = |v: f64| {
        let (_, r_p) = response.at(v / (2.0 * z));
        0.5 * (-v).exp() * v * v * r_p
    };
    let est = integrate_decaying(integrand, 0.0, 1.0, &quad(tol, 1.0))
        .map_err(|e| Error::numerics("static Matsubara term", e))?;
    Ok(est.value)
}

/// The `j = 0` bracket for a dissipative surface, taken at `ξ₀ = 10⁻⁶ ξ₁`
/// and confirmed at `10⁻⁷ ξ₁`.
fn static_term(surface: &SurfaceModel, xi1: f64, z: f64, tol: &Tolerances) -> Result<f64> {
    let sample = static_b_integral(surface, STATIC_SAMPLE * xi1, z, tol)?;
    if surface.is_perfect() {
        return Ok(sample);
    }
    let check = static_b_integral(surface, STATIC_CHECK * xi1, z, tol)?;
    let drift = (sample - check).abs() / check.abs();
    if !(drift <= STATIC_STABILITY) {
        return Err(Error::UnstableStaticLimit(format!(
            "static bracket moved by {drift:e} between ξ = {:e} and {:e} rad/s",
            STATIC_SAMPLE * xi1,
            STATIC_CHECK * xi1
        )));
    }
    Ok(sample)
}

/// Nonresonant potential of a single transition from the general
/// reflection-coefficient formula.
pub fn nonresonant_transition(
    surface: &SurfaceModel,
    tr: Transition,
    z: f64,
    temperature: f64,
    tol: &Tolerances,
) -> Result<f64> {
    check_common(&tr, z, temperature, tol)?;
    surface.validate()?;
    if tr.d2 == 0.0 {
        return Ok(0.0);
    }
    if temperature == 0.0 {
        return nonresonant_zero_temperature(surface, tr, z, tol, false);
    }
    let w = tr.omega_kn.abs();
    let sign = tr.omega_kn.signum();
    let xi1 = matsubara_spacing(temperature)?;
    let scale = MU0 * K_B * temperature / (6.0 * PI * HBAR) * tr.d2 * b_norm(z);
    let s0 = static_term(surface, xi1, z, tol)? / w;
    let ctrl = tol.series(tol.abs_floor / scale);
    let context = |j: usize| {
        format!(
            "nonresonant potential, transition ω = {:e} rad/s, Matsubara j = {j}",
            tr.omega_kn
        )
    };
    let sum = sum_matsubara_with(
        |j| -> Result<f64> {
            if j == 0 {
                return Ok(s0);
            }
            let xi = j as f64 * xi1;
            let response = ImaginaryAxisResponse::new(surface, xi)?;
            let jb = matsubara_b_integral(&response, xi, z, tol)
                .map_err(|e| Error::numerics(context(j), e))?;
            Ok(w / (w * w + xi * xi) * jb)
        },
        &ctrl,
        TailModel::Geometric,
    )
    .map_err(|e| match e {
        Error::Numerics { context, source } if context.is_empty() => Error::numerics(
            format!(
                "nonresonant potential, transition ω = {:e} rad/s",
                tr.omega_kn
            ),
            source,
        ),
        other => other,
    })?;
    Ok(-sign * scale * sum.value)
}

/// Perfect-reflector Matsubara sum with the b-integrals done analytically.
pub fn nonresonant_transition_closed(
    tr: Transition,
    z: f64,
    temperature: f64,
    tol: &Tolerances,
) -> Result<f64> {
    check_common(&tr, z, temperature, tol)?;
    if tr.d2 == 0.0 {
        return Ok(0.0);
    }
    if temperature == 0.0 {
        return nonresonant_zero_temperature(&SurfaceModel::PerfectReflector, tr, z, tol, true);
    }
    let w = tr.omega_kn.abs();
    let sign = tr.omega_kn.signum();
    let xi = matsubara_spacing(temperature)?;
    let a = z * xi / C;
    let scale = K_B * temperature / (12.0 * PI * EPS0 * HBAR * z * z * z) * tr.d2;
    let ctrl = tol.series(tol.abs_floor / scale);
    let sum = sum_matsubara_with(
        |j| -> std::result::Result<f64, crate::NumericsError> {
            let jf = j as f64;
            let ja = jf * a;
            let x = jf * xi;
            Ok(w * (-2.0 * ja).exp() * (1.0 + 2.0 * ja + 2.0 * ja * ja) / (w * w + x * x))
        },
        &ctrl,
        TailModel::Geometric,
    )
    .map_err(|e| {
        Error::numerics(
            format!(
                "closed nonresonant sum, transition ω = {:e} rad/s",
                tr.omega_kn
            ),
            e,
        )
    })?;
    Ok(-sign * scale * sum.value)
}

/// `T = 0`: the Matsubara sum becomes `(ħ/2πk_BT) ∫₀^∞ dξ`, giving
/// `−(μ₀/12π²) |d|² ∫₀^∞ dξ ω/(ω² + ξ²) I(ξ)`.
fn nonresonant_zero_temperature(
    surface: &SurfaceModel,
    tr: Transition,
    z: f64,
    tol: &Tolerances,
    closed: bool,
) -> Result<f64> {
    let w = tr.omega_kn.abs();
    let sign = tr.omega_kn.signum();
    let scale = MU0 / (12.0 * PI * PI) * tr.d2 * b_norm(z);
    let xi_scale = w.min(C / (2.0 * z));
    let mut failure: Option<Error> = None;
    let integrand = |xi: f64| {
        let lorentz = w / (w * w + xi * xi);
        let jb = if closed {
            let alpha = 2.0 * z * xi / C;
            (-alpha).exp() * (1.0 + alpha + 0.5 * alpha * alpha)
        } else {
            match ImaginaryAxisResponse::new(surface, xi)
                .and_then(|r| matsubara_b_integral(&r, xi, z, tol).map_err(Error::from))
            {
                Ok(v) => v,
                Err(e) => {
                    failure.get_or_insert(e);
                    f64::NAN
                }
            }
        };
        lorentz * jb
    };
    let est = integrate_decaying(integrand, 0.0, xi_scale, &tol.quadrature(0.0));
    if let Some(e) = failure {
        return Err(e);
    }
    let est = est.map_err(|e| {
        Error::numerics(
            format!(
                "zero-temperature frequency integral, ω = {:e} rad/s",
                tr.omega_kn
            ),
            e,
        )
    })?;
    Ok(-sign * scale * est.value)
}

/// `∫₀^∞ db e^{−2bz}{2b²c² Re r_p + ω² Re(r_s + r_p)}` divided by
/// `c²/(2z³)`: `∫₀^∞ dv e^{−v}{v²/2 Re r_p + (zω/c)² Re(r_s + r_p)}`.
fn evanescent_b_integral(
    surface: &SurfaceModel,
    omega: f64,
    z: f64,
    tol: &Tolerances,
) -> Result<f64> {
    if surface.is_perfect() {
        return Ok(1.0);
    }
    let w = Complex64::new(omega.abs(), 0.0);
    let chi = susceptibility(surface, w)?;
    let q = z * omega / C;
    let q2 = q * q;
    let mut failure: Option<Error> = None;
    let integrand = |v: f64| match reflection_from_susceptibility(chi, v / (2.0 * z), w) {
        Ok((r_s, r_p)) => (-v).exp() * (0.5 * v * v * r_p.re + q2 * (r_s.re + r_p.re)),
        Err(e) => {
            failure.get_or_insert(e);
            f64::NAN
        }
    };
    let est = integrate_decaying(integrand, 0.0, 1.0, &quad(tol, 1.0 + q2));
    if let Some(e) = failure {
        return Err(e);
    }
    let est =
        est.map_err(|e| Error::numerics(format!("evanescent b-integral, ω = {omega:e} rad/s"), e))?;
    Ok(est.value)
}

/// Evanescent potential of a single transition from the general formula.
pub fn evanescent_transition(
    surface: &SurfaceModel,
    tr: Transition,
    z: f64,
    temperature: f64,
    tol: &Tolerances,
) -> Result<f64> {
    check_common(&tr, z, temperature, tol)?;
    surface.validate()?;
    let n = photon_number(tr.omega_kn, temperature)?;
    if n == 0.0 || tr.d2 == 0.0 {
        return Ok(0.0);
    }
    let k = evanescent_b_integral(surface, tr.omega_kn, z, tol)?;
    Ok(MU0 / (12.0 * PI) * n * tr.d2 * b_norm(z) * k)
}

/// Perfect-reflector evanescent potential, `n(ω)|d|²/(24πε₀z³)`.
pub fn evanescent_transition_closed(tr: Transition, z: f64, temperature: f64) -> Result<f64> {
    check_common(&tr, z, temperature, &Tolerances::default())?;
    let n = photon_number(tr.omega_kn, temperature)?;
    Ok(n * tr.d2 / (24.0 * PI * EPS0 * z * z * z))
}

fn per_transition<F>(scenario: &Scenario, mut f: F) -> Result<f64>
where
    F: FnMut(Transition) -> Result<f64>,
{
    scenario.validate()?;
    let mut parts = Vec::new();
    for tr in scenario.species.prepared_transitions()? {
        parts.push(f(tr)?);
    }
    Ok(compensated_sum(parts))
}

/// Nonresonant potential of the prepared eigenstate, general formula.
pub fn u_nonresonant(scenario: &Scenario) -> Result<f64> {
    per_transition(scenario, |tr| {
        nonresonant_transition(
            &scenario.surface,
            tr,
            scenario.z,
            scenario.temperature,
            &scenario.tolerances,
        )
    })
}

/// Nonresonant potential of the prepared eigenstate, perfect reflector.
pub fn u_nonresonant_closed(scenario: &Scenario) -> Result<f64> {
    require_perfect(&scenario.surface)?;
    per_transition(scenario, |tr| {
        nonresonant_transition_closed(tr, scenario.z, scenario.temperature, &scenario.tolerances)
    })
}

pub fn u_evanescent(scenario: &Scenario) -> Result<f64> {
    per_transition(scenario, |tr| {
        evanescent_transition(
            &scenario.surface,
            tr,
            scenario.z,
            scenario.temperature,
            &scenario.tolerances,
        )
    })
}

pub fn u_evanescent_closed(scenario: &Scenario) -> Result<f64> {
    require_perfect(&scenario.surface)?;
    per_transition(scenario, |tr| {
        evanescent_transition_closed(tr, scenario.z, scenario.temperature)
    })
}

/// Full breakdown for an eigenstate, closed forms for a perfect
/// reflector and quadrature otherwise.
pub fn u_total_eigenstate(scenario: &Scenario) -> Result<PotentialBreakdown> {
    u_total_eigenstate_with(scenario, EvaluationPath::Auto)
}

pub fn u_total_eigenstate_with(
    scenario: &Scenario,
    path: EvaluationPath,
) -> Result<PotentialBreakdown> {
    scenario.validate()?;
    let closed = path.use_closed(&scenario.surface)?;
    let (z, t, tol) = (scenario.z, scenario.temperature, &scenario.tolerances);
    let mut per = Vec::new();
    let mut far_field = false;
    for tr in scenario.species.prepared_transitions()? {
        let (u_nr, u_ev) = if closed {
            (
                nonresonant_transition_closed(tr, z, t, tol)?,
                evanescent_transition_closed(tr, z, t)?,
            )
        } else {
            (
                nonresonant_transition(&scenario.surface, tr, z, t, tol)?,
                evanescent_transition(&scenario.surface, tr, z, t, tol)?,
            )
        };
        far_field |= z * tr.omega_kn.abs() / C > 1.0;
        per.push(TransitionContribution {
            transition: tr,
            u_nr,
            u_ev,
        });
    }
    let u_nonresonant = compensated_sum(per.iter().map(|c| c.u_nr));
    let u_evanescent = compensated_sum(per.iter().map(|c| c.u_ev));
    Ok(PotentialBreakdown {
        u_nonresonant,
        u_evanescent,
        u_total: u_nonresonant + u_evanescent,
        per_transition: per,
        regime: classify_regime(&scenario.species, z, t)?,
        validity: Validity {
            far_field_warning: far_field,
        },
    })
}
