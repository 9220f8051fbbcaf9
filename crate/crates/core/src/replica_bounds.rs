//! Two- and three-replica interpolation bounds evaluated at the zero-temperature
//! minimizer, with their matrix identities and first-order slopes.

use nalgebra::{Matrix2, Matrix3, SymmetricEigen};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::mixture::Mixture;
use crate::parisi::OrderParameter;
use crate::quad::GaussLegendre;

/// J₊ = 𝟙𝟙ᵀ.
pub fn j_plus() -> Matrix2<f64> {
    Matrix2::new(1.0, 1.0, 1.0, 1.0)
}

/// J₋ = (1,−1)(1,−1)ᵀ.
pub fn j_minus() -> Matrix2<f64> {
    Matrix2::new(1.0, -1.0, -1.0, 1.0)
}

/// Overlap matrix of the constrained pair.
pub fn q2(eps: f64) -> Matrix2<f64> {
    (1.0 - eps / 2.0) * j_plus() + (eps / 2.0) * j_minus()
}

/// Generating vectors of J₃, J₋ and J_* for the three-replica problem.
pub fn three_vectors(eps: f64) -> [nalgebra::Vector3<f64>; 3] {
    [
        nalgebra::Vector3::new(1.0, 1.0 - eps, 1.0 - eps),
        nalgebra::Vector3::new(0.0, 1.0, -1.0),
        nalgebra::Vector3::new(2.0 - 2.0 * eps, -1.0, -1.0),
    ]
}

pub fn j3_family(eps: f64) -> [Matrix3<f64>; 3] {
    three_vectors(eps).map(|v| v * v.transpose())
}

/// Overlap matrix of the constrained triple.
pub fn q3(eps: f64) -> Matrix3<f64> {
    let a = 1.0 - eps;
    let b = 1.0 - 4.0 * eps + 2.0 * eps * eps;
    Matrix3::new(1.0, a, a, a, 1.0, b, a, b, 1.0)
}

/// Weights of the three-replica Hamiltonian 3H(σ¹) − H(σ²) − H(σ³) in the
/// entrywise map applied to covariances.
pub fn three_weights() -> Matrix3<f64> {
    Matrix3::new(9.0, -3.0, -3.0, -3.0, 1.0, 1.0, -3.0, 1.0, 1.0)
}

/// t_* = Tr(J₃) = 1 + 2(1−ε)².
pub fn t_star(eps: f64) -> f64 {
    1.0 + 2.0 * (1.0 - eps) * (1.0 - eps)
}

fn frob2(a: &Matrix2<f64>, b: &Matrix2<f64>) -> f64 {
    a.component_mul(b).sum()
}

fn frob3(a: &Matrix3<f64>, b: &Matrix3<f64>) -> f64 {
    a.component_mul(b).sum()
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct BoundOptions {
    /// Gauss–Legendre points per sub-interval.
    pub points: usize,
    /// Each grid cell is split into this many sub-intervals.
    pub subdivide: usize,
}

impl Default for BoundOptions {
    fn default() -> Self {
        Self { points: 8, subdivide: 1 }
    }
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct BoundValue {
    pub eps: f64,
    pub value: f64,
    pub term_linear: f64,
    pub term_cross: f64,
    pub term_inverse: f64,
}

/// Data shared by both bounds: the profile as functions of q.
struct Profile<'a> {
    op: &'a OrderParameter,
    l: f64,
    ell: f64,
}

impl<'a> Profile<'a> {
    fn new(m: &Mixture, op: &'a OrderParameter) -> Self {
        Self {
            op,
            l: op.l(),
            ell: 1.0 / m.xi2(1.0).sqrt(),
        }
    }

    fn z(&self, u: f64) -> f64 {
        self.l - self.op.zhat_at(u)
    }

    fn zeta_last(&self) -> f64 {
        *self.op.zeta_cells().last().unwrap()
    }
}

/// Breakpoints of [a, b] ⊂ [0, 1] at grid nodes, each cell split `sub` times.
fn breakpoints(a: f64, b: f64, cells: usize, sub: usize) -> Vec<f64> {
    let n = cells * sub;
    let mut pts = vec![a];
    let first = (a * n as f64).floor() as usize + 1;
    for k in first..=n {
        let x = k as f64 / n as f64;
        if x >= b {
            break;
        }
        if x > a {
            pts.push(x);
        }
    }
    pts.push(b);
    pts
}

fn integrate_pieces<F: FnMut(f64) -> f64>(gl: &GaussLegendre, pts: &[f64], mut f: F) -> f64 {
    pts.windows(2).map(|w| gl.integrate(w[0], w[1], &mut f)).sum()
}

fn require_even(m: &Mixture) -> Result<()> {
    if !m.is_even() {
        return Err(Error::Precondition("interpolation bounds require an even mixture".into()));
    }
    Ok(())
}

/// Upper bound on 2·GS₂,ε.
pub fn two_replica_bound(m: &Mixture, op: &OrderParameter, eps: f64) -> Result<BoundValue> {
    two_replica_bound_with(m, op, eps, BoundOptions::default())
}

pub fn two_replica_bound_with(m: &Mixture, op: &OrderParameter, eps: f64, opts: BoundOptions) -> Result<BoundValue> {
    require_even(m)?;
    if !(0.0..0.3).contains(&eps) {
        return Err(Error::Domain(format!("eps = {eps} outside [0, 0.3)")));
    }
    let p = Profile::new(m, op);
    let (jp, jm) = (j_plus(), j_minus());
    let big_l = (p.l * jp + p.ell * jm) / 2.0;
    let q = q2(eps);
    let term_linear = frob2(&q.map(|x| m.xi1(x)), &big_l);

    let gl = GaussLegendre::new(opts.points);
    let uk = 1.0 - eps / 2.0;
    let zk = p.z(uk);
    let cells = op.cells();

    // Inverse of aJ₊ + bJ₋ through the spectral decomposition.
    let inv = |a: f64, b: f64| -> Result<Matrix2<f64>> {
        if !(a > 0.0) || !(b > 0.0) {
            return Err(Error::Singular(format!("shift minus path integral has coefficients ({a}, {b})")));
        }
        Ok((jp / a + jm / b) / 4.0)
    };

    // t ∈ [0, 2−ε], u = t/2.
    let pts = breakpoints(0.0, uk, cells, opts.subdivide);
    let dphi = jp / 2.0;
    let mut err = None;
    let cross1 = integrate_pieces(&gl, &pts, |u| {
        let phi = u * jp;
        let a = p.z(u) * jp / 2.0;
        2.0 * frob2(&phi.map(|x| m.xi2(x)).component_mul(&dphi), &a)
    });
    let inv1 = integrate_pieces(&gl, &pts, |u| match inv((p.l - p.z(u)) / 2.0, p.ell / 2.0) {
        Ok(i) => 2.0 * frob2(&i, &dphi),
        Err(e) => {
            err = Some(e);
            0.0
        }
    });
    // t ∈ [2−ε, 2].
    let pts = breakpoints(uk, 1.0, cells, opts.subdivide);
    let dphi = jm / 2.0;
    let cross2 = integrate_pieces(&gl, &pts, |u| {
        let t = 2.0 * u;
        let phi = (2.0 - eps) / 2.0 * jp + (t - (2.0 - eps)) / 2.0 * jm;
        let a = zk * jp / 2.0 + (p.z(u) - zk) * jm / 2.0;
        2.0 * frob2(&phi.map(|x| m.xi2(x)).component_mul(&dphi), &a)
    });
    let inv2 = integrate_pieces(&gl, &pts, |u| match inv((p.l - zk) / 2.0, (p.ell - (p.z(u) - zk)) / 2.0) {
        Ok(i) => 2.0 * frob2(&i, &dphi),
        Err(e) => {
            err = Some(e);
            0.0
        }
    });
    if let Some(e) = err {
        return Err(e);
    }
    let term_cross = -(cross1 + cross2);
    let term_inverse = inv1 + inv2;
    Ok(BoundValue {
        eps,
        value: term_linear + term_cross + term_inverse,
        term_linear,
        term_cross,
        term_inverse,
    })
}

/// Upper bound on 2·GS₃,ε. `with_star` = false drops the ε²J_* part of the
/// shift (ablation; the inverse pairing never sees J_*).
pub fn three_replica_bound(m: &Mixture, op: &OrderParameter, eps: f64) -> Result<BoundValue> {
    three_replica_bound_with(m, op, eps, BoundOptions::default(), true)
}

pub fn three_replica_bound_with(
    m: &Mixture,
    op: &OrderParameter,
    eps: f64,
    opts: BoundOptions,
    with_star: bool,
) -> Result<BoundValue> {
    require_even(m)?;
    if !(0.0..0.2).contains(&eps) {
        return Err(Error::Domain(format!("eps = {eps} outside [0, 0.2)")));
    }
    let p = Profile::new(m, op);
    let [j3, jm, js] = j3_family(eps);
    let [v3, vm, vs] = three_vectors(eps);
    let (n3, nm, ns) = (v3.norm_squared().powi(2), vm.norm_squared().powi(2), vs.norm_squared().powi(2));
    let cstar = if with_star { eps * eps } else { 0.0 };
    let big_l = p.l * j3 + (p.ell / 2.0) * jm + cstar * js;
    let w = three_weights();
    let bold = |x: &Matrix3<f64>, order: u32| -> Matrix3<f64> { w.component_mul(&x.map(|v| m.deriv(v, order))) };
    let term_linear = frob3(&bold(&q3(eps), 1), &big_l);

    // (aJ₃ + bJ₋ + cJ_*)⁻¹ paired with a matrix in span(J₃, J₋); the J_*
    // component only matters when it is present in the pairing.
    let pair = |a: f64, b: f64, c: f64, with: &Matrix3<f64>| -> Result<f64> {
        if !(a > 0.0) || !(b > 0.0) {
            return Err(Error::Singular(format!("three-replica shift has coefficients ({a}, {b}, {c})")));
        }
        let mut inv = j3 / (a * n3) + jm / (b * nm);
        if c > 0.0 {
            inv += js / (c * ns);
        }
        Ok(frob3(&inv, with))
    };

    let ts = t_star(eps);
    let gl = GaussLegendre::new(opts.points);
    let cells = op.cells();
    let mut err = None;

    // t ∈ [0, t_*], v = t/t_*.
    let pts = breakpoints(0.0, 1.0, cells, opts.subdivide);
    let dphi = j3 / ts;
    let cross1 = integrate_pieces(&gl, &pts, |v| {
        let a = p.z(v) * j3;
        ts * frob3(&bold(&(v * j3), 2).component_mul(&dphi), &a)
    });
    let inv1 = integrate_pieces(&gl, &pts, |v| match pair(p.l - p.z(v), p.ell / 2.0, cstar, &dphi) {
        Ok(x) => ts * x,
        Err(e) => {
            err = Some(e);
            0.0
        }
    });

    // t ∈ [t_*, 3], with α₃ = ζ(1⁻) constant.
    let zl = p.zeta_last();
    let z1 = p.z(1.0);
    let dphi = jm / 2.0;
    let len = 3.0 - ts;
    let pts = [0.0, 0.5, 1.0];
    let cross2 = integrate_pieces(&gl, &pts, |s| {
        let tau = s * len;
        let phi = j3 + (tau / 2.0) * jm;
        let a = z1 * j3 + (zl * tau / 2.0) * jm;
        len * frob3(&bold(&phi, 2).component_mul(&dphi), &a)
    });
    let inv2 = integrate_pieces(&gl, &pts, |s| {
        let tau = s * len;
        match pair(p.l - z1, (p.ell - zl * tau) / 2.0, cstar, &dphi) {
            Ok(x) => len * x,
            Err(e) => {
                err = Some(e);
                0.0
            }
        }
    });
    if let Some(e) = err {
        return Err(e);
    }
    let term_cross = -(cross1 + cross2);
    let term_inverse = inv1 + inv2;
    Ok(BoundValue {
        eps,
        value: term_linear + term_cross + term_inverse,
        term_linear,
        term_cross,
        term_inverse,
    })
}

/// Slope of (bound(ε) − base)/ε at ε → 0 from a geometric ladder.
#[derive(Debug, Clone, Serialize)]
pub struct SlopeEstimate {
    pub eps: Vec<f64>,
    pub bounds: Vec<f64>,
    pub raw_slopes: Vec<f64>,
    pub extrapolated: f64,
}

/// Richardson extrapolation over ε, ε/2, ε/4, … assuming a smooth expansion
/// of the difference quotient in powers of ε.
pub fn richardson_slope(eps: &[f64], bounds: &[f64], base: f64) -> SlopeEstimate {
    let raw: Vec<f64> = eps.iter().zip(bounds).map(|(e, b)| (b - base) / e).collect();
    let mut table = raw.clone();
    let mut factor = 2.0;
    while table.len() > 1 {
        table = table.windows(2).map(|w| (factor * w[1] - w[0]) / (factor - 1.0)).collect();
        factor *= 2.0;
    }
    SlopeEstimate {
        eps: eps.to_vec(),
        bounds: bounds.to_vec(),
        raw_slopes: raw,
        extrapolated: table[0],
    }
}

/// First-order coefficient of the two-replica bound: −ẑ(1)(√ξ''(1) − 1/ẑ(1))².
pub fn two_replica_slope_target(m: &Mixture, zhat1: f64) -> f64 {
    -zhat1 * (m.xi2(1.0).sqrt() - 1.0 / zhat1).powi(2)
}

/// First-order coefficient of the three-replica bound on 2·GS₃,ε:
/// 4ẑ(1)(√ξ''(1) + 1/ẑ(1))², twice the coefficient for GS₃,ε itself.
pub fn three_replica_slope_target(m: &Mixture, zhat1: f64) -> f64 {
    4.0 * zhat1 * (m.xi2(1.0).sqrt() + 1.0 / zhat1).powi(2)
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct IdentityReport {
    pub two_inverse_residual: f64,
    pub three_trace_residual: f64,
    pub orthogonality_residual: f64,
    pub samples: usize,
}

/// Checks both inverse identities by dense inversion on random coefficients.
pub fn matrix_identities_check(seed: u64) -> IdentityReport {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let coef = |rng: &mut ChaCha8Rng| -> f64 {
        let v: f64 = rng.random_range(0.5..2.0);
        if rng.random_bool(0.5) {
            v
        } else {
            -v
        }
    };
    let (jp, jm) = (j_plus(), j_minus());
    let mut r2: f64 = 0.0;
    let mut r3: f64 = 0.0;
    let mut ro: f64 = frob2(&jp, &jm).abs();
    let eps_values: Vec<f64> = (0..10).map(|k| 0.01 + 0.018 * k as f64).collect();
    let mut samples = 0;
    for _ in 0..100 {
        let (a, b) = (coef(&mut rng), coef(&mut rng));
        let dense = (a * jp + b * jm).try_inverse().expect("invertible for nonzero coefficients");
        let formula = (jp / a + jm / b) / 4.0;
        r2 = r2.max((dense - formula).abs().max());
        for &eps in &eps_values {
            let [j3, jm3, js] = j3_family(eps);
            ro = ro.max(frob3(&j3, &jm3).abs()).max(frob3(&j3, &js).abs()).max(frob3(&jm3, &js).abs());
            let (a, b, c) = (coef(&mut rng), coef(&mut rng), coef(&mut rng));
            let (d, e, f) = (coef(&mut rng), coef(&mut rng), coef(&mut rng));
            let lhs = (a * j3 + b * jm3 + c * js).try_inverse().expect("invertible for nonzero coefficients")
                * (d * j3 + e * jm3 + f * js);
            r3 = r3.max((lhs.trace() - (d / a + e / b + f / c)).abs());
            samples += 1;
        }
    }
    IdentityReport {
        two_inverse_residual: r2,
        three_trace_residual: r3,
        orthogonality_residual: ro,
        samples,
    }
}

/// Smallest eigenvalue over increments of both interpolation paths sampled
/// at `n` equally spaced times.
pub fn path_monotonicity(eps: f64, n: usize) -> f64 {
    let (jp, jm) = (j_plus(), j_minus());
    let phi2 = |t: f64| -> Matrix2<f64> {
        if t <= 2.0 - eps {
            t / 2.0 * jp
        } else {
            (2.0 - eps) / 2.0 * jp + (t - 2.0 + eps) / 2.0 * jm
        }
    };
    let [j3, jm3, _] = j3_family(eps);
    let ts = t_star(eps);
    let phi3 = |t: f64| -> Matrix3<f64> {
        if t <= ts {
            t / ts * j3
        } else {
            j3 + (t - ts) / 2.0 * jm3
        }
    };
    let mut worst = f64::INFINITY;
    for k in 0..n {
        let (a, b) = (k as f64 / n as f64, (k + 1) as f64 / n as f64);
        let d2 = phi2(2.0 * b) - phi2(2.0 * a);
        let d3 = phi3(3.0 * b) - phi3(3.0 * a);
        worst = worst.min(SymmetricEigen::new(d2).eigenvalues.min());
        worst = worst.min(SymmetricEigen::new(d3).eigenvalues.min());
    }
    worst
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn path_endpoints() {
        let eps = 0.07;
        let [j3, jm, _] = j3_family(eps);
        let end = j3 + (3.0 - t_star(eps)) / 2.0 * jm;
        assert!((end - q3(eps)).abs().max() < 1e-14);
        assert!((j3.trace() - t_star(eps)).abs() < 1e-15);
        assert!((q3(0.1)[(1, 2)] - 0.62).abs() < 1e-15);
        let end2 = (2.0 - eps) / 2.0 * j_plus() + eps / 2.0 * j_minus();
        assert!((end2 - q2(eps)).abs().max() < 1e-15);
    }

    #[test]
    fn simple_inverse_example() {
        let m = j_plus() + j_minus();
        assert!((m - 2.0 * Matrix2::<f64>::identity()).abs().max() < 1e-15);
        let inv = m.try_inverse().unwrap();
        assert!((inv - (j_plus() + j_minus()) / 4.0).abs().max() < 1e-15);
    }

    #[test]
    fn richardson_removes_linear_term() {
        let eps = [0.01, 0.005, 0.0025];
        let b: Vec<f64> = eps.iter().map(|e| 1.0 + 3.0 * e + 7.0 * e * e - 2.0 * e * e * e).collect();
        let s = richardson_slope(&eps, &b, 1.0);
        assert!((s.extrapolated - 3.0).abs() < 1e-10, "{}", s.extrapolated);
    }
}
