//! Exact evaluation of the zero-temperature functional for piecewise-linear ẑ,
//! plus the cell kernels shared with the positive-temperature functional.

use serde::Serialize;

use super::order::OrderParameter;
use crate::error::{Error, Result};
use crate::mixture::Mixture;
use crate::quad::GaussLegendre;

/// Below this value of |a−b|/(a+b) the derivatives of φ use quadrature.
const SMALL_T: f64 = 0.1;
const KERNEL_POINTS: usize = 10;

/// φ(a, b) = ∫₀¹ dτ / (a(1−τ) + bτ) = ln(a/b)/(a−b), so a cell of width h
/// with endpoint values a, b contributes h·φ(a, b) to ∫ 1/ẑ.
pub(crate) fn phi(a: f64, b: f64) -> f64 {
    let d = a - b;
    if d == 0.0 {
        1.0 / a
    } else {
        (d / b).ln_1p() / d
    }
}

/// Value, gradient and Hessian of φ.
#[derive(Debug, Clone, Copy)]
pub(crate) struct PhiJet {
    pub a: f64,
    pub b: f64,
    pub aa: f64,
    pub ab: f64,
    pub bb: f64,
}

pub(crate) struct Kernel {
    gl: GaussLegendre,
}

impl Kernel {
    pub fn new() -> Self {
        Self {
            gl: GaussLegendre::new(KERNEL_POINTS),
        }
    }

    pub fn jet(&self, a: f64, b: f64) -> PhiJet {
        let d = a - b;
        if (d / (a + b)).abs() >= SMALL_T {
            let v = phi(a, b);
            let pa = (1.0 / a - v) / d;
            let pb = (v - 1.0 / b) / d;
            PhiJet {
                a: pa,
                b: pb,
                aa: (-1.0 / (a * a) - 2.0 * pa) / d,
                ab: (pa - pb) / d,
                bb: (2.0 * pb + 1.0 / (b * b)) / d,
            }
        } else {
            let (mut pa, mut pb, mut aa, mut ab, mut bb) = (0.0, 0.0, 0.0, 0.0, 0.0);
            for (&t, &w) in self.gl.nodes.iter().zip(&self.gl.weights) {
                let s = 1.0 - t;
                let den = a * s + b * t;
                let i2 = w / (den * den);
                let i3 = 2.0 * i2 / den;
                pa -= s * i2;
                pb -= t * i2;
                aa += s * s * i3;
                ab += s * t * i3;
                bb += t * t * i3;
            }
            PhiJet { a: pa, b: pb, aa, ab, bb }
        }
    }
}

/// Weights w with ξ'(0)ẑ(0) + ∫₀¹ ξ''ẑ = Σ w_i ẑ_i for every piecewise-linear ẑ.
pub(crate) fn linear_weights(m: &Mixture, cells: usize) -> Vec<f64> {
    let h = 1.0 / cells as f64;
    let mut w = vec![0.0; cells + 1];
    w[0] = m.xi1(0.0);
    for c in 0..cells {
        let l = c as f64 * h;
        let r = (c + 1) as f64 * h;
        let dxi = m.xi(r) - m.xi(l);
        // ∫ ξ''(q)(r−q) dq and ∫ ξ''(q)(q−l) dq over the cell, divided by h.
        w[c] += (dxi - h * m.xi1(l)) / h;
        w[c + 1] += (h * m.xi1(r) - dxi) / h;
    }
    w
}

/// Both displayed forms of the functional.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct QValues {
    /// ½(ξ'(0)L + ∫ξ''ẑ + ∫1/ẑ)
    pub form_a: f64,
    /// ½(ξ'(1)L − ∫ξ''(q)(∫₀^q ζ)dq + ∫1/ẑ)
    pub form_b: f64,
}

/// ∫₀¹ dq/ẑ(q), exact for piecewise-linear ẑ.
pub fn inverse_integral(op: &OrderParameter) -> f64 {
    let h = op.h();
    op.zhat().windows(2).map(|w| h * phi(w[0], w[1])).sum()
}

/// Evaluates both forms. Form a uses exact antiderivatives of ξ on each cell,
/// form b uses Gauss–Legendre on each cell; the two routes are independent.
pub fn evaluate_q(op: &OrderParameter, m: &Mixture) -> Result<QValues> {
    if op.zhat1() <= 0.0 {
        return Err(Error::OutsideCone("zhat(1) must be positive".into()));
    }
    let inv = inverse_integral(op);
    let w = linear_weights(m, op.cells());
    let lin: f64 = w.iter().zip(op.zhat()).map(|(a, b)| a * b).sum();
    let form_a = 0.5 * (lin + inv);

    let gl = GaussLegendre::new((m.max_degree() as usize / 2 + 2).max(4));
    let h = op.h();
    let l = op.l();
    let z = op.zhat();
    let mut cross = 0.0;
    for c in 0..op.cells() {
        let q0 = c as f64 * h;
        let (za, zb) = (l - z[c], l - z[c + 1]);
        cross += gl.integrate(q0, q0 + h, |q| {
            let t = (q - q0) / h;
            m.xi2(q) * (za * (1.0 - t) + zb * t)
        });
    }
    let form_b = 0.5 * (m.xi1(1.0) * l - cross + inv);
    Ok(QValues { form_a, form_b })
}

/// Zero-temperature objective f(ẑ) = form a, with its exact gradient and
/// tridiagonal Hessian.
pub(crate) struct ZeroTempObjective {
    w: Vec<f64>,
    h: f64,
    kernel: Kernel,
}

/// Positive-temperature objective in y = x̂ with y_M = 0 and y_{M−1} = h:
/// ½[β²ξ'(0)y₀ + β²∫ξ''y + Σ_{cells < M} hφ + ln h].
pub(crate) struct PositiveTempObjective {
    w: Vec<f64>,
    h: f64,
    kernel: Kernel,
}

pub(crate) trait ConeObjective {
    /// `None` outside the domain of the objective.
    fn value(&self, z: &[f64]) -> Option<f64>;
    fn gradient(&self, z: &[f64], g: &mut [f64]);
    fn hessian(&self, z: &[f64], diag: &mut [f64], off: &mut [f64]);
}

impl ZeroTempObjective {
    pub fn new(m: &Mixture, cells: usize) -> Self {
        Self {
            w: linear_weights(m, cells),
            h: 1.0 / cells as f64,
            kernel: Kernel::new(),
        }
    }
}

impl ConeObjective for ZeroTempObjective {
    fn value(&self, z: &[f64]) -> Option<f64> {
        if z.iter().any(|&v| !(v > 0.0)) {
            return None;
        }
        let lin: f64 = self.w.iter().zip(z).map(|(a, b)| a * b).sum();
        let inv: f64 = z.windows(2).map(|w| self.h * phi(w[0], w[1])).sum();
        Some(0.5 * (lin + inv))
    }

    fn gradient(&self, z: &[f64], g: &mut [f64]) {
        for (gi, wi) in g.iter_mut().zip(&self.w) {
            *gi = 0.5 * wi;
        }
        for c in 0..z.len() - 1 {
            let j = self.kernel.jet(z[c], z[c + 1]);
            g[c] += 0.5 * self.h * j.a;
            g[c + 1] += 0.5 * self.h * j.b;
        }
    }

    fn hessian(&self, z: &[f64], diag: &mut [f64], off: &mut [f64]) {
        diag.iter_mut().for_each(|d| *d = 0.0);
        for c in 0..z.len() - 1 {
            let j = self.kernel.jet(z[c], z[c + 1]);
            diag[c] += 0.5 * self.h * j.aa;
            diag[c + 1] += 0.5 * self.h * j.bb;
            off[c] = 0.5 * self.h * j.ab;
        }
    }
}

impl PositiveTempObjective {
    pub fn new(m: &Mixture, beta: f64, cells: usize) -> Self {
        let b2 = beta * beta;
        Self {
            w: linear_weights(m, cells).into_iter().map(|w| b2 * w).collect(),
            h: 1.0 / cells as f64,
            kernel: Kernel::new(),
        }
    }
}

impl ConeObjective for PositiveTempObjective {
    fn value(&self, y: &[f64]) -> Option<f64> {
        let n = y.len() - 1;
        if y[..n].iter().any(|&v| !(v > 0.0)) {
            return None;
        }
        let lin: f64 = self.w.iter().zip(y).map(|(a, b)| a * b).sum();
        let inv: f64 = y[..n].windows(2).map(|w| self.h * phi(w[0], w[1])).sum();
        Some(0.5 * (lin + inv + self.h.ln()))
    }

    fn gradient(&self, y: &[f64], g: &mut [f64]) {
        let n = y.len() - 1;
        for (gi, wi) in g.iter_mut().zip(&self.w) {
            *gi = 0.5 * wi;
        }
        g[n] = 0.0;
        for c in 0..n - 1 {
            let j = self.kernel.jet(y[c], y[c + 1]);
            g[c] += 0.5 * self.h * j.a;
            g[c + 1] += 0.5 * self.h * j.b;
        }
    }

    fn hessian(&self, y: &[f64], diag: &mut [f64], off: &mut [f64]) {
        let n = y.len() - 1;
        diag.iter_mut().for_each(|d| *d = 0.0);
        off.iter_mut().for_each(|d| *d = 0.0);
        for c in 0..n - 1 {
            let j = self.kernel.jet(y[c], y[c + 1]);
            diag[c] += 0.5 * self.h * j.aa;
            diag[c + 1] += 0.5 * self.h * j.bb;
            off[c] = 0.5 * self.h * j.ab;
        }
        // The pinned node carries no curvature; keep the system regular.
        diag[n] = 1.0;
    }
}
