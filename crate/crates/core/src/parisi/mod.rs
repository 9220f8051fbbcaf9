//! Zero- and positive-temperature variational problems.

mod cone;
mod functional;
mod order;
mod positive;
mod prediction;
mod solver;
mod stationarity;

pub use functional::{evaluate_q, inverse_integral, QValues};
pub use order::{isotonic_nondecreasing, OrderParameter};
pub use positive::{
    evaluate_cs_positive_temp, evaluate_cs_with_qhat, minimize_cs_positive_temp, CsOptions, CsSolution,
    PositiveTempOrderParameter,
};
pub use prediction::{gs_derivative, BoxBounds, SpectralPrediction, RSB_REL_TOL};
pub use solver::{minimize_q, SolveOptions, ZeroTempSolution};
pub use stationarity::{default_tol_g, endpoint_run, stationarity_report, StationarityReport, SUPPORT_REL_TOL};
