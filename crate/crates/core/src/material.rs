//! Surface response: Drude permittivity and Fresnel reflection
//! coefficients, at real frequencies (complex arithmetic) and on the
//! positive imaginary axis (real arithmetic).
//!
//! Reflection coefficients are written in terms of the in-plane decay
//! constant `b` of the vacuum-side wave and
//! `b₁ = √(b² − (ε − 1) ω²/c²)` with `Re b₁ > 0`. The differences
//! `b − b₁` and `εb − b₁` are formed through `ε − 1` so that the nearly
//! transparent (`ε → 1`) and nearly perfect (`ε → ∞`) limits keep their
//! relative precision.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::units::C;
use crate::{Error, Result};

/// Plasma frequency and damping rate of the bundled gold entry (rad/s).
/// These are literature values for Au, not derived here.
pub const AU_OMEGA_P: f64 = 1.37e16;
pub const AU_GAMMA: f64 = 4.05e13;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SurfaceModel {
    PerfectReflector,
    Drude { omega_p: f64, gamma: f64 },
}

impl SurfaceModel {
    pub fn drude(omega_p: f64, gamma: f64) -> Result<Self> {
        let model = SurfaceModel::Drude { omega_p, gamma };
        model.validate()?;
        Ok(model)
    }

    pub fn gold() -> Self {
        SurfaceModel::Drude {
            omega_p: AU_OMEGA_P,
            gamma: AU_GAMMA,
        }
    }

    pub fn validate(&self) -> Result<()> {
        match *self {
            SurfaceModel::PerfectReflector => Ok(()),
            SurfaceModel::Drude { omega_p, gamma } => {
                if !(omega_p.is_finite() && omega_p > 0.0) {
                    return Err(Error::InvalidInput(format!(
                        "Drude plasma frequency must be positive, got {omega_p}"
                    )));
                }
                if !(gamma.is_finite() && gamma >= 0.0) {
                    return Err(Error::InvalidInput(format!(
                        "Drude damping rate must be non-negative, got {gamma}"
                    )));
                }
                Ok(())
            }
        }
    }

    pub fn is_perfect(&self) -> bool {
        matches!(self, SurfaceModel::PerfectReflector)
    }
}

/// `ε(ω) − 1` for complex `ω`.
pub(crate) fn susceptibility(model: &SurfaceModel, omega: Complex64) -> Result<Complex64> {
    match *model {
        SurfaceModel::PerfectReflector => Ok(Complex64::new(f64::INFINITY, 0.0)),
        SurfaceModel::Drude { omega_p, gamma } => {
            if omega == Complex64::new(0.0, 0.0) {
                return Err(Error::Singular(
                    "Drude permittivity has a pole at ω = 0; use the static Matsubara limit".into(),
                ));
            }
            let denom = omega * (omega + Complex64::new(0.0, gamma));
            if denom == Complex64::new(0.0, 0.0) {
                return Err(Error::Singular(format!(
                    "Drude permittivity has a pole at ω = {omega}"
                )));
            }
            Ok(-omega_p * omega_p / denom)
        }
    }
}

/// `ε(ω)`. A perfect reflector reports an infinite real permittivity.
pub fn permittivity(model: &SurfaceModel, omega: Complex64) -> Result<Complex64> {
    Ok(susceptibility(model, omega)? + 1.0)
}

/// `ε(iξ)` for `ξ > 0`; real and greater than one for a Drude metal.
pub fn permittivity_imaginary(model: &SurfaceModel, xi: f64) -> Result<f64> {
    Ok(1.0 + susceptibility_imaginary(model, xi)?)
}

fn susceptibility_imaginary(model: &SurfaceModel, xi: f64) -> Result<f64> {
    match *model {
        SurfaceModel::PerfectReflector => Ok(f64::INFINITY),
        SurfaceModel::Drude { omega_p, gamma } => {
            if !(xi > 0.0) {
                return Err(Error::Singular(format!(
                    "Drude permittivity on the imaginary axis needs ξ > 0, got {xi}"
                )));
            }
            Ok(omega_p * omega_p / (xi * (xi + gamma)))
        }
    }
}

/// `√(b² − (ε − 1) ω²/c²)` on the branch with `Re > 0`; when the real part
/// vanishes the root with `Im ≥ 0` is taken (the `γ → 0⁺` limit).
pub fn b1_from_permittivity(eps: Complex64, b: f64, omega: Complex64) -> Complex64 {
    let arg = b * b - (eps - 1.0) * omega * omega / (C * C);
    select_branch(arg.sqrt())
}

fn select_branch(root: Complex64) -> Complex64 {
    if root.re < 0.0 || (root.re == 0.0 && root.im < 0.0) {
        -root
    } else {
        root
    }
}

pub fn b1(model: &SurfaceModel, b: f64, omega: Complex64) -> Result<Complex64> {
    check_wavenumber(b)?;
    let chi = susceptibility(model, omega)?;
    Ok(select_branch(
        (b * b - chi * omega * omega / (C * C)).sqrt(),
    ))
}

fn check_wavenumber(b: f64) -> Result<()> {
    if b.is_finite() && b >= 0.0 {
        Ok(())
    } else {
        Err(Error::InvalidInput(format!(
            "wavenumber b must be finite and non-negative, got {b}"
        )))
    }
}

/// `(r_s, r_p)` at complex frequency `ω`.
pub fn reflection(
    model: &SurfaceModel,
    b: f64,
    omega: Complex64,
) -> Result<(Complex64, Complex64)> {
    check_wavenumber(b)?;
    if b == 0.0 && omega == Complex64::new(0.0, 0.0) {
        return Err(Error::Singular("reflection at b = 0, ω = 0".into()));
    }
    if model.is_perfect() {
        return Ok((Complex64::new(-1.0, 0.0), Complex64::new(1.0, 0.0)));
    }
    let chi = susceptibility(model, omega)?;
    reflection_from_susceptibility(chi, b, omega)
}

pub(crate) fn reflection_from_susceptibility(
    chi: Complex64,
    b: f64,
    omega: Complex64,
) -> Result<(Complex64, Complex64)> {
    // kappa2 = b1² − b²
    let kappa2 = -chi * omega * omega / (C * C);
    let b1 = select_branch((b * b + kappa2).sqrt());
    let sum = b1 + b;
    let eps_b_plus = (chi + 1.0) * b + b1;
    if sum == Complex64::new(0.0, 0.0) || eps_b_plus == Complex64::new(0.0, 0.0) {
        return Err(Error::Singular(format!(
            "vanishing Fresnel denominator at b = {b}, ω = {omega}"
        )));
    }
    // b − b₁ = −κ²/(b + b₁)
    let b_minus_b1 = -kappa2 / sum;
    let r_s = b_minus_b1 / sum;
    let r_p = (chi * b + b_minus_b1) / eps_b_plus;
    Ok((r_s, r_p))
}

pub fn r_s(model: &SurfaceModel, b: f64, omega: Complex64) -> Result<Complex64> {
    Ok(reflection(model, b, omega)?.0)
}

pub fn r_p(model: &SurfaceModel, b: f64, omega: Complex64) -> Result<Complex64> {
    Ok(reflection(model, b, omega)?.1)
}

/// `(r_s(iξ), r_p(iξ))`, both real.
pub fn reflection_imaginary(model: &SurfaceModel, b: f64, xi: f64) -> Result<(f64, f64)> {
    check_wavenumber(b)?;
    if model.is_perfect() {
        return Ok((-1.0, 1.0));
    }
    let chi = susceptibility_imaginary(model, xi)?;
    Ok(reflection_imaginary_from_susceptibility(chi, b, xi))
}

/// Imaginary-axis coefficients given `χ = ε(iξ) − 1 ≥ 0`. Denominators are
/// strictly positive whenever `b > 0` or `ξ > 0`.
#[inline]
pub(crate) fn reflection_imaginary_from_susceptibility(chi: f64, b: f64, xi: f64) -> (f64, f64) {
    let kappa2 = chi * xi * xi / (C * C);
    let b1 = (b * b + kappa2).sqrt();
    let sum = b + b1;
    let b_minus_b1 = -kappa2 / sum;
    let r_s = b_minus_b1 / sum;
    let r_p = (chi * b + b_minus_b1) / ((1.0 + chi) * b + b1);
    (r_s, r_p)
}

/// Fast evaluator for the imaginary axis used inside quadrature loops.
#[derive(Clone, Copy, Debug)]
pub(crate) struct ImaginaryAxisResponse {
    chi: Option<f64>,
    xi: f64,
}

impl ImaginaryAxisResponse {
    pub(crate) fn new(model: &SurfaceModel, xi: f64) -> Result<Self> {
        let chi = match model {
            SurfaceModel::PerfectReflector => None,
            _ => Some(susceptibility_imaginary(model, xi)?),
        };
        Ok(Self { chi, xi })
    }

    #[inline]
    pub(crate) fn at(&self, b: f64) -> (f64, f64) {
        match self.chi {
            None => (-1.0, 1.0),
            Some(chi) => reflection_imaginary_from_susceptibility(chi, b, self.xi),
        }
    }
}
