//! Thermal Casimir–Polder potentials of atoms and molecules near plane
//! metal surfaces.
//!
//! The crate evaluates the nonresonant (Matsubara) and evanescent
//! components of the potential for a particle prepared in an energy
//! eigenstate or in thermal equilibrium, along with the closed-form
//! perfect-reflector expressions and their regime asymptotes. The
//! propagating resonant component is not computed; results carry a
//! far-field flag whenever it would matter.
//!
//! Layout:
//! - [`units`]: constants and boundary conversions
//! - [`material`]: permittivity and Fresnel coefficients
//! - [`spectrum`]: species, photon numbers, Boltzmann weights, regimes
//! - [`numerics`]: quadrature and compensated Matsubara summation
//! - [`potential`]: the potential engine
//! - [`config`] and [`sweep`]: file schemas and batch evaluation

// `!(x > 0.0)` is used throughout to reject NaN along with the range.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod config;
pub mod material;
pub mod numerics;
pub mod potential;
pub mod spectrum;
pub mod sweep;
pub mod units;

pub use material::SurfaceModel;
pub use numerics::{Estimate, NumericsError, Tolerances};
pub use potential::{
    asymptote, casimir_energy_dilute, u_evanescent, u_evanescent_closed, u_nonresonant,
    u_nonresonant_closed, u_thermal_state, u_total_eigenstate, Asymptote, CasimirEnergy,
    PotentialBreakdown, Scenario, TransitionContribution, Validity,
};
pub use spectrum::{
    boltzmann_weights, characteristic_temperatures, classify_regime, photon_number, Level,
    Preparation, Regime, SpeciesState, Transition, TransitionSpec,
};
pub use units::{thermal_frequency, CONSTANTS};

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error("singular input: {0}")]
    Singular(String),
    #[error("contract violation: {0}")]
    Contract(String),
    #[error("{}{source}", if context.is_empty() { String::new() } else { format!("{context}: ") })]
    Numerics {
        context: String,
        #[source]
        source: NumericsError,
    },
    #[error("static Matsubara limit unstable: {0}")]
    UnstableStaticLimit(String),
    #[error("{path}: {message}")]
    Config { path: String, message: String },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

impl Error {
    pub(crate) fn numerics(context: impl Into<String>, source: NumericsError) -> Self {
        Error::Numerics {
            context: context.into(),
            source,
        }
    }
}

impl From<NumericsError> for Error {
    fn from(source: NumericsError) -> Self {
        Error::Numerics {
            context: String::new(),
            source,
        }
    }
}
