//! Global maximization by differential evolution and numerical integration.

mod cubature;
mod de;
mod integrate;
mod quadrature;

pub use de::{differential_evolution, DeConfig, DeResult, STALL_GENERATIONS};
pub use integrate::{
    integrate, integrate_importance, IntegrationMethod, IntegrationResult, IntegratorSpec,
    Proposal, Region,
};
pub(crate) use integrate::mean_and_standard_error;
