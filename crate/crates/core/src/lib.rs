//! Numerical laboratory for shallow scalar networks: activation families,
//! exact and quadrature risks, generalized gradients, gradient-flow and
//! gradient-descent dynamics, explicit low-risk parameter families, and
//! certified critical-point risk floors.

pub mod activation;
pub mod checks;
pub mod config;
pub mod constructions;
pub mod discrete;
pub mod domain;
pub mod dynamics;
pub mod error;
pub mod network;
mod poly;
pub mod quad;
pub mod report;
pub mod risk;
pub mod solvers;
pub mod target;
pub mod verification;

pub use activation::{ActivationKind, Mollifier};
pub use domain::Domain;
pub use error::{Error, Result};
pub use network::{
    active_interval, geometry, homogeneous_rescale, realize, rescale_to_unit, ActiveInterval,
    Breakpoint, Geometry, ParamVector,
};
pub use risk::{
    grad_norm, gradient, gradient_fd, gradient_tol, risk, risk_exact, risk_quadrature, FdScheme,
    RiskMethod, RiskReport,
};
pub use target::TargetFunction;
