//! Spectral predictions read off a zero-temperature minimizer.

use serde::Serialize;

use super::order::OrderParameter;
use crate::mixture::{EInfinity, Mixture};
use crate::quad::GaussLegendre;

#[derive(Debug, Clone, Serialize)]
pub struct SpectralPrediction {
    pub gs: f64,
    #[serde(rename = "L")]
    pub l: f64,
    pub zhat1: f64,
    /// Predicted radial derivative r = ẑ(1)ξ''(1) + 1/ẑ(1).
    pub r: f64,
    pub lambda_plus: f64,
    pub lambda_minus: f64,
    pub full_rsb_endpoint: bool,
    /// ẑ(1) − ξ''(1)^{−1/2}
    pub rsb_gap: f64,
    pub e_inf_minus: Option<f64>,
    pub e_inf_plus: Option<f64>,
    pub e_infinity: EInfinity,
}

/// Relative tolerance of the full-RSB endpoint test, in units of ξ''(1)^{−1/2}.
pub const RSB_REL_TOL: f64 = 1e-3;

impl SpectralPrediction {
    pub fn new(m: &Mixture, gs: f64, l: f64, zhat1: f64) -> Self {
        let x2 = m.xi2(1.0);
        let r = zhat1 * x2 + 1.0 / zhat1;
        let edge = 2.0 * x2.sqrt();
        let target = 1.0 / x2.sqrt();
        let rsb_gap = zhat1 - target;
        let e_infinity = m.e_infinity_pm();
        let window = e_infinity.window();
        Self {
            gs,
            l,
            zhat1,
            r,
            lambda_plus: edge - r,
            lambda_minus: -edge - r,
            full_rsb_endpoint: rsb_gap.abs() <= RSB_REL_TOL * target,
            rsb_gap,
            e_inf_minus: window.map(|w| w.0),
            e_inf_plus: window.map(|w| w.1),
            e_infinity,
        }
    }

    /// λ± written as −ẑ(1)(√ξ''(1) ∓ 1/ẑ(1))².
    pub fn lambda_factored(&self, m: &Mixture) -> (f64, f64) {
        let s = m.xi2(1.0).sqrt();
        let z = self.zhat1;
        (-z * (s - 1.0 / z).powi(2), -z * (s + 1.0 / z).powi(2))
    }
}

/// ξ'(0)L + ∫₀¹ (2ξ''(q) + qξ'''(q)) ẑ(q) dq.
pub fn gs_derivative(m: &Mixture, op: &OrderParameter) -> f64 {
    let gl = GaussLegendre::new((m.max_degree() as usize / 2 + 2).max(4));
    let h = op.h();
    let z = op.zhat();
    let mut s = m.xi1(0.0) * op.l();
    for c in 0..op.cells() {
        let q0 = c as f64 * h;
        let (a, b) = (z[c], z[c + 1]);
        s += gl.integrate(q0, q0 + h, |q| {
            let t = (q - q0) / h;
            (2.0 * m.xi2(q) + q * m.xi3(q)) * (a * (1.0 - t) + b * t)
        });
    }
    s
}

/// Box constraints containing the minimizer: L ≤ C and ẑ(1) ≥ 1/C.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct BoxBounds {
    pub l_max: f64,
    pub zhat1_min: f64,
    pub c_box: f64,
}

impl BoxBounds {
    pub fn new(m: &Mixture) -> Self {
        let u = m.xi1(1.0).sqrt();
        // Q ≥ ½Lξ(1) because concavity gives ẑ(q) ≥ L(1 − q), and Q ≤ √ξ'(1).
        let l_max = 2.0 * u / m.xi(1.0);
        let x2 = m.xi2(1.0);
        let zhat1_min = (0.5 / x2.sqrt()).min(0.5 / (l_max * x2));
        let c_box = l_max.max(1.0 / zhat1_min);
        Self { l_max, zhat1_min, c_box }
    }

    pub fn contains(&self, op: &OrderParameter) -> bool {
        op.l() <= self.c_box && op.zhat1() >= 1.0 / self.c_box
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn quadratic_prediction_closed_form() {
        let m = Mixture::pure(2).unwrap();
        let z = 1.0 / 2f64.sqrt();
        let p = SpectralPrediction::new(&m, 2f64.sqrt(), z, z);
        assert!((p.r - 2.0 * 2f64.sqrt()).abs() < 1e-14);
        assert!(p.lambda_plus.abs() < 1e-14);
        assert!((p.lambda_minus + 4.0 * 2f64.sqrt()).abs() < 1e-14);
        assert!(p.full_rsb_endpoint);
        let op = OrderParameter::constant(z, 50).unwrap();
        assert!((gs_derivative(&m, &op) - 2.0 * 2f64.sqrt()).abs() < 1e-13);
    }

    #[test]
    fn factored_lambdas_agree() {
        let m = Mixture::new([(2, 0.3), (4, 1.0)]).unwrap();
        for &z in &[0.1, 0.25, 0.6, 1.3] {
            let p = SpectralPrediction::new(&m, 1.0, 1.0, z);
            let (lp, lm) = p.lambda_factored(&m);
            assert!((lp - p.lambda_plus).abs() < 1e-12);
            assert!((lm - p.lambda_minus).abs() < 1e-12);
            assert!(p.lambda_plus <= 1e-15 && p.lambda_minus <= p.lambda_plus);
        }
    }
}
