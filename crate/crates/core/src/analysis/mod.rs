//! Convergence diagnostics: condition checks, step constants, the majorant
//! V-sequence and its radius, discrepancy, a Runge-Kutta reference oracle and
//! error reports.

mod conditions;
mod majorant;
mod reference;
mod report;

use thiserror::Error;

use crate::expr::ExprError;
use crate::fdcore::FdError;
use crate::mesh::MeshError;

pub use conditions::{
    check_conditions, check_conditions_default, ConditionReport, PowerSeriesForm, SampleBox,
};
pub use majorant::{
    majorant_sequence, radius, step_bound, step_constants, MajorantSpec, RadiusReport,
    StepConstants,
};
pub use reference::{reference_solve, ReferenceSolution};
pub use report::{discrepancy, discrepancy_samples, error_report, fit_ratio, ErrorReport, Truth};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum AnalysisError {
    #[error(transparent)]
    Expr(#[from] ExprError),
    #[error(transparent)]
    Fd(#[from] FdError),
    #[error(transparent)]
    Mesh(#[from] MeshError),
    #[error("invalid input: {0}")]
    Invalid(String),
    #[error("alpha must be positive, got {0}")]
    NonPositiveAlpha(f64),
    #[error("N is not polynomial in u; supply majorant coefficients B_i explicitly")]
    MissingMajorant,
    #[error("no certified radius: {0}")]
    NoCertifiedRadius(String),
    #[error("reference integrator step size underflow at x = {x}")]
    StepUnderflow { x: f64 },
}
