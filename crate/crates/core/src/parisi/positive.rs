//! Positive-temperature Crisanti–Sommers functional with effective mixture β²ξ.

use serde::Serialize;

use super::cone::{Anchor, ConeOptions, ConeSolver};
use super::functional::{linear_weights, phi, PositiveTempObjective};
use super::order::isotonic_nondecreasing;
use crate::error::{Error, Result};
use crate::mixture::Mixture;

/// Threshold above which x counts as equal to 1.
const ONE_TOL: f64 = 1e-12;

/// Nondecreasing x ∈ [0, 1], constant on each grid cell, equal to 1 on a
/// terminal segment that starts strictly before q = 1.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PositiveTempOrderParameter {
    pub beta: f64,
    x: Vec<f64>,
}

impl PositiveTempOrderParameter {
    pub fn new(beta: f64, x: Vec<f64>) -> Result<Self> {
        if !(beta > 0.0) {
            return Err(Error::Domain(format!("beta = {beta} must be positive")));
        }
        if x.is_empty() {
            return Err(Error::Domain("empty order parameter".into()));
        }
        if x.iter().any(|&v| !(0.0..=1.0).contains(&v)) {
            return Err(Error::OutsideCone("x must take values in [0, 1]".into()));
        }
        if x.windows(2).any(|w| w[1] < w[0]) {
            return Err(Error::OutsideCone("x must be nondecreasing".into()));
        }
        let op = Self { beta, x };
        op.qhat_index()?;
        Ok(op)
    }

    /// Projects arbitrary cell values onto the admissible set: isotonic fit,
    /// clipping to [0, 1] and x = 1 on the last cell.
    pub fn project(beta: f64, raw: &[f64]) -> Result<Self> {
        let mut x: Vec<f64> = isotonic_nondecreasing(raw).into_iter().map(|v| v.clamp(0.0, 1.0)).collect();
        if let Some(last) = x.last_mut() {
            *last = 1.0;
        }
        Self::new(beta, x)
    }

    pub fn cells(&self) -> usize {
        self.x.len()
    }

    pub fn x(&self) -> &[f64] {
        &self.x
    }

    /// First node from which x = 1 on every later cell.
    pub fn qhat_index(&self) -> Result<usize> {
        let m = self.x.len();
        let mut i = m;
        while i > 0 && self.x[i - 1] >= 1.0 - ONE_TOL {
            i -= 1;
        }
        if i == m {
            return Err(Error::OutsideCone("no q̂ < 1 with x(q̂) = 1".into()));
        }
        Ok(i)
    }

    /// x̂(q_i) = ∫_{q_i}^1 x at the nodes.
    pub fn xhat(&self) -> Vec<f64> {
        let m = self.x.len();
        let h = 1.0 / m as f64;
        let mut y = vec![0.0; m + 1];
        for c in (0..m).rev() {
            y[c] = y[c + 1] + h * self.x[c];
        }
        y
    }

    /// Jumps of x at nodes 0..M−1 (the first entry is x on the first cell).
    pub fn increments(&self) -> Vec<f64> {
        let mut prev = 0.0;
        self.x
            .iter()
            .map(|&v| {
                let d = v - prev;
                prev = v;
                d
            })
            .collect()
    }
}

/// Evaluates the functional with q̂ the first grid node where x = 1.
pub fn evaluate_cs_positive_temp(x: &PositiveTempOrderParameter, m: &Mixture) -> Result<f64> {
    let k = x.qhat_index()?;
    evaluate_cs_with_qhat(x, m, k)
}

/// Evaluates the functional with q̂ = q_k for any admissible k (x = 1 on all
/// cells from k on, k < M).
pub fn evaluate_cs_with_qhat(x: &PositiveTempOrderParameter, m: &Mixture, k: usize) -> Result<f64> {
    let cells = x.cells();
    let first = x.qhat_index()?;
    if k < first || k >= cells {
        return Err(Error::Domain(format!("q̂ index {k} is not admissible (first valid {first})")));
    }
    let h = 1.0 / cells as f64;
    let y = x.xhat();
    let b2 = x.beta * x.beta;
    let w = linear_weights(m, cells);
    let lin: f64 = w.iter().zip(&y).map(|(a, b)| a * b).sum::<f64>() * b2;
    let inv: f64 = (0..k).map(|c| h * phi(y[c], y[c + 1])).sum();
    let qhat = k as f64 * h;
    Ok(0.5 * (lin + inv + (1.0 - qhat).ln()))
}

#[derive(Debug, Clone, Serialize)]
pub struct CsOptions {
    pub cells: usize,
    pub tol: f64,
    pub max_iters: usize,
}

impl Default for CsOptions {
    fn default() -> Self {
        Self {
            cells: 1000,
            tol: 1e-9,
            max_iters: 200_000,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct CsSolution {
    pub x: PositiveTempOrderParameter,
    pub f: f64,
    pub f_over_beta: f64,
    pub iterations: usize,
    pub residual: f64,
    pub history: Vec<f64>,
}

/// Minimizes the functional over admissible x at inverse temperature β.
pub fn minimize_cs_positive_temp(m: &Mixture, beta: f64, opts: &CsOptions) -> Result<CsSolution> {
    if !(beta > 0.0) {
        return Err(Error::Domain(format!("beta = {beta} must be positive")));
    }
    if opts.cells < 64 {
        return Err(Error::Domain(format!("grid needs at least 64 cells, got {}", opts.cells)));
    }
    let obj = PositiveTempObjective::new(m, beta, opts.cells);
    let res = ConeSolver::new(&obj, Anchor::RightPinned, opts.cells, 0.0).solve(&ConeOptions {
        tol: opts.tol,
        max_iters: opts.max_iters,
    });
    let h = 1.0 / opts.cells as f64;
    let mut xs: Vec<f64> = res.z.windows(2).map(|w| ((w[0] - w[1]) / h).clamp(0.0, 1.0)).collect();
    *xs.last_mut().unwrap() = 1.0;
    for i in 1..xs.len() {
        if xs[i] < xs[i - 1] {
            xs[i] = xs[i - 1];
        }
    }
    let x = PositiveTempOrderParameter { beta, x: xs };
    if !res.converged {
        return Err(Error::CsNotConverged {
            best: Box::new(x),
            iterations: res.iterations,
            residual: res.residual,
        });
    }
    Ok(CsSolution {
        f_over_beta: res.value / beta,
        f: res.value,
        x,
        iterations: res.iterations,
        residual: res.residual,
        history: res.history,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn constant_one_gives_half_beta_squared_xi() {
        let m = Mixture::pure(2).unwrap();
        let x = PositiveTempOrderParameter::new(0.5, vec![1.0; 200]).unwrap();
        let f = evaluate_cs_positive_temp(&x, &m).unwrap();
        assert!((f - 0.125).abs() < 1e-13);
        let m3 = Mixture::new([(2, 0.5), (3, 1.0)]).unwrap();
        let x = PositiveTempOrderParameter::new(2.0, vec![1.0; 100]).unwrap();
        let f = evaluate_cs_positive_temp(&x, &m3).unwrap();
        assert!((f - 4.0 * m3.xi(1.0) / 2.0).abs() < 1e-12);
    }

    #[test]
    fn requires_terminal_one() {
        assert!(PositiveTempOrderParameter::new(1.0, vec![0.2, 0.5]).is_err());
        assert!(PositiveTempOrderParameter::new(1.0, vec![0.5, 0.2, 1.0]).is_err());
        assert!(PositiveTempOrderParameter::new(1.0, vec![0.2, 1.0]).is_ok());
    }

    #[test]
    fn independent_of_qhat() {
        let m = Mixture::pure(3).unwrap();
        let mut x = vec![0.0; 100];
        for (i, v) in x.iter_mut().enumerate() {
            *v = if i < 30 { 0.1 } else if i < 60 { 0.4 } else { 1.0 };
        }
        let x = PositiveTempOrderParameter::new(3.0, x).unwrap();
        let k0 = x.qhat_index().unwrap();
        assert_eq!(k0, 60);
        let f0 = evaluate_cs_with_qhat(&x, &m, k0).unwrap();
        for k in [61, 75, 99] {
            let f = evaluate_cs_with_qhat(&x, &m, k).unwrap();
            assert!((f - f0).abs() < 1e-12, "{k}: {f} vs {f0}");
        }
    }
}
