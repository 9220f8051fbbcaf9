//! Minimization of the zero-temperature functional over the discretized cone.

use serde::Serialize;

use super::cone::{Anchor, ConeOptions, ConeSolver};
use super::functional::{evaluate_q, QValues, ZeroTempObjective};
use super::order::OrderParameter;
use super::prediction::{gs_derivative, BoxBounds, SpectralPrediction};
use super::stationarity::{default_tol_g, stationarity_report, StationarityReport};
use crate::error::{Error, Result};
use crate::mixture::Mixture;

#[derive(Debug, Clone, Serialize)]
pub struct SolveOptions {
    /// Number of grid cells M.
    pub cells: usize,
    /// Projected-gradient tolerance.
    pub tol: f64,
    pub max_iters: usize,
}

impl Default for SolveOptions {
    fn default() -> Self {
        Self {
            cells: 1000,
            tol: 1e-9,
            max_iters: 200_000,
        }
    }
}

impl SolveOptions {
    pub fn with_cells(cells: usize) -> Self {
        Self {
            cells,
            ..Self::default()
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct ZeroTempSolution {
    pub op: OrderParameter,
    pub q: QValues,
    pub prediction: SpectralPrediction,
    pub stationarity: StationarityReport,
    /// ξ'(0)L + ∫(2ξ'' + qξ''')ẑ at the minimizer.
    pub gs_derivative: f64,
    pub box_bounds: BoxBounds,
    pub within_box: bool,
    pub iterations: usize,
    pub residual: f64,
    /// Objective after every accepted step (nonincreasing).
    pub history: Vec<f64>,
}

/// Minimizes the functional over positive, nonincreasing, concave ẑ.
pub fn minimize_q(m: &Mixture, opts: &SolveOptions) -> Result<ZeroTempSolution> {
    if opts.cells < 64 {
        return Err(Error::Domain(format!("grid needs at least 64 cells, got {}", opts.cells)));
    }
    let obj = ZeroTempObjective::new(m, opts.cells);
    let l0 = 1.0 / m.xi1(1.0).sqrt();
    let res = ConeSolver::new(&obj, Anchor::Left, opts.cells, l0).solve(&ConeOptions {
        tol: opts.tol,
        max_iters: opts.max_iters,
    });
    let op = OrderParameter::from_zhat_unchecked(res.z);
    if !res.converged {
        return Err(Error::SolverNotConverged {
            best: Box::new(op),
            iterations: res.iterations,
            residual: res.residual,
        });
    }
    let q = evaluate_q(&op, m)?;
    let prediction = SpectralPrediction::new(m, res.value, op.l(), op.zhat1());
    let stationarity = stationarity_report(&op, m, default_tol_g(m));
    let box_bounds = BoxBounds::new(m);
    Ok(ZeroTempSolution {
        within_box: box_bounds.contains(&op),
        gs_derivative: gs_derivative(m, &op),
        op,
        q,
        prediction,
        stationarity,
        box_bounds,
        iterations: res.iterations,
        residual: res.residual,
        history: res.history,
    })
}
