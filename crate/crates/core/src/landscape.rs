//! Approximate ground states on the sphere and the spectral diagnostics built
//! on them.

use nalgebra::{Cholesky, DMatrix, DVector, SymmetricEigen};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::hamiltonian::{spherical_from, HamiltonianInstance, SpherePoint, TangentFrame};
use crate::mixture::Mixture;
use crate::parisi::SpectralPrediction;

#[derive(Debug, Clone, Copy, Serialize)]
pub struct AscentOptions {
    /// Stop once ‖∇_sp H‖/√N falls below this.
    pub tol_grad: f64,
    pub max_steps: usize,
    /// Switch to Riemannian Newton steps below this gradient level.
    pub newton_below: f64,
    pub newton: bool,
}

impl Default for AscentOptions {
    fn default() -> Self {
        Self {
            tol_grad: 1e-7,
            max_steps: 20_000,
            newton_below: 1e-2,
            newton: true,
        }
    }
}

/// A point reached by ascent together with its spherical spectrum.
#[derive(Debug, Clone, Serialize)]
pub struct LandscapeRecord {
    #[serde(skip)]
    pub sigma: SpherePoint,
    pub energy_per_n: f64,
    pub grad_sp_norm_per_sqrt_n: f64,
    pub radial: f64,
    /// Eigenvalues of the spherical Hessian, descending, length N − 1.
    #[serde(skip)]
    pub eigs: Vec<f64>,
    #[serde(skip)]
    pub top_vector: DVector<f64>,
    #[serde(skip)]
    pub bottom_vector: DVector<f64>,
    pub ascent_steps: usize,
    pub converged: bool,
}

impl LandscapeRecord {
    pub fn lambda(&self, k: usize) -> f64 {
        self.eigs[k - 1]
    }

    pub fn lambda_max(&self) -> f64 {
        self.eigs[0]
    }

    pub fn lambda_min(&self) -> f64 {
        *self.eigs.last().unwrap()
    }
}

fn retract(x: DVector<f64>) -> DVector<f64> {
    let n = x.len() as f64;
    let norm = x.norm();
    x * (n.sqrt() / norm)
}

fn tangent_part(x: &DVector<f64>, grad: &DVector<f64>) -> DVector<f64> {
    let radial = x.dot(grad) / x.len() as f64;
    grad - x * radial
}

/// Spectral data at a point, with eigenvectors mapped back to ℝᴺ.
pub fn record_at(h: &HamiltonianInstance, sigma: SpherePoint, steps: usize, converged: bool) -> LandscapeRecord {
    let x = sigma.coords().as_slice();
    let (value, grad, hess) = h.derivatives_at(x);
    let ops = spherical_from(&sigma, &grad, &hess);
    let eig = SymmetricEigen::new(ops.hess_sp.clone());
    let mut order: Vec<usize> = (0..eig.eigenvalues.len()).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]));
    let eigs: Vec<f64> = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let frame = TangentFrame::new(&sigma);
    let lift = |i: usize| {
        let y = eig.eigenvectors.column(i).into_owned();
        let v = frame.from_tangent(&y);
        v * (sigma.dim() as f64).sqrt()
    };
    let n = sigma.dim() as f64;
    LandscapeRecord {
        energy_per_n: value / n,
        grad_sp_norm_per_sqrt_n: ops.grad_sp.norm() / n.sqrt(),
        radial: ops.radial,
        top_vector: lift(order[0]),
        bottom_vector: lift(*order.last().unwrap()),
        eigs,
        ascent_steps: steps,
        converged,
        sigma,
    }
}

/// Riemannian gradient ascent with Armijo backtracking, finished by Newton
/// steps once the spherical Hessian is negative definite.
pub fn ascend(h: &HamiltonianInstance, start: &SpherePoint, opts: &AscentOptions) -> Result<LandscapeRecord> {
    if start.dim() != h.n() {
        return Err(Error::DimensionMismatch {
            expected: h.n(),
            got: start.dim(),
        });
    }
    let n = h.n() as f64;
    let mut x = start.coords().clone();
    let (mut f, mut grad) = h.value_gradient_at(x.as_slice());
    let mut eta = 0.1;
    let mut steps = 0;
    let mut converged = false;
    while steps < opts.max_steps {
        let g = tangent_part(&x, &grad);
        let gn = g.norm() / n.sqrt();
        if gn <= opts.tol_grad {
            converged = true;
            break;
        }
        steps += 1;
        if opts.newton && gn <= opts.newton_below {
            if let Some(xn) = newton_step(h, &x, &grad) {
                let (fn_, gradn) = h.value_gradient_at(xn.as_slice());
                let gn_new = tangent_part(&xn, &gradn).norm() / n.sqrt();
                if fn_ > f || (gn_new < gn && fn_ >= f - 1e-12 * f.abs()) {
                    x = xn;
                    f = fn_;
                    grad = gradn;
                    continue;
                }
            }
        }
        let slope = g.norm_squared();
        loop {
            let trial = retract(&x + &g * eta);
            let (ft, gt) = h.value_gradient_at(trial.as_slice());
            if ft >= f + 1e-4 * eta * slope {
                x = trial;
                f = ft;
                grad = gt;
                eta = (eta * 1.5).min(10.0);
                break;
            }
            eta *= 0.5;
            if eta < 1e-14 {
                // No further ascent possible at working precision.
                let sigma = SpherePoint::from_direction(x)?;
                return Ok(record_at(h, sigma, steps, false));
            }
        }
    }
    let sigma = SpherePoint::from_direction(x)?;
    Ok(record_at(h, sigma, steps, converged))
}

fn newton_step(h: &HamiltonianInstance, x: &DVector<f64>, grad: &DVector<f64>) -> Option<DVector<f64>> {
    let sigma = SpherePoint::from_direction(x.clone()).ok()?;
    let hess = h.hessian_at(x.as_slice());
    let ops = spherical_from(&sigma, grad, &hess);
    let chol = Cholesky::new(-ops.hess_sp)?;
    let d = chol.solve(&ops.grad_sp);
    let frame = TangentFrame::new(&sigma);
    Some(retract(x + frame.from_tangent(&d)))
}

/// Independent restarts from uniform starting points; restart k draws its
/// start from stream k of `seed`.
pub fn ascend_restarts(
    h: &HamiltonianInstance,
    restarts: usize,
    seed: u64,
    opts: &AscentOptions,
) -> Result<Vec<LandscapeRecord>> {
    (0..restarts)
        .into_par_iter()
        .map(|k| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(k as u64);
            let start = SpherePoint::random(h.n(), &mut rng);
            ascend(h, &start, opts)
        })
        .collect()
}

/// Fraction q of the semicircle law on [−1, 1] lying above x.
fn semicircle_tail(x: f64) -> f64 {
    let x = x.clamp(-1.0, 1.0);
    0.5 - (x * (1.0 - x * x).sqrt() + x.asin()) / std::f64::consts::PI
}

/// Point of [−1, 1] above which a fraction `frac` of the semicircle law lies.
pub fn semicircle_quantile(frac: f64) -> f64 {
    let (mut lo, mut hi) = (-1.0, 1.0);
    for _ in 0..100 {
        let mid = 0.5 * (lo + hi);
        if semicircle_tail(mid) > frac {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

#[derive(Debug, Clone, Serialize)]
pub struct BulkEdgeReport {
    pub j: usize,
    pub lambda_top: f64,
    pub lambda_bottom: f64,
    pub radius: f64,
    pub predicted_top: f64,
    pub predicted_bottom: f64,
    pub gap_top: f64,
    pub gap_bottom: f64,
    /// Edge prediction moved to the j/N semicircle quantile.
    pub quantile_top: f64,
    pub quantile_bottom: f64,
    pub quantile_gap_top: f64,
    pub quantile_gap_bottom: f64,
}

impl BulkEdgeReport {
    /// Largest edge gap relative to the semicircle radius.
    pub fn relative_gap(&self) -> f64 {
        self.gap_top.max(self.gap_bottom) / self.radius
    }

    pub fn relative_quantile_gap(&self) -> f64 {
        self.quantile_gap_top.max(self.quantile_gap_bottom) / self.radius
    }
}

/// Compares λ_j and λ_{N−j} with ±2√ξ''(1) − ∂_rad, j = max(k0, ⌈k_frac·N⌉).
pub fn bulk_edge_check(rec: &LandscapeRecord, m: &Mixture, k_frac: f64, k0: usize) -> BulkEdgeReport {
    let n = rec.eigs.len() + 1;
    let j = k0.max((k_frac * n as f64).ceil() as usize).clamp(1, n - 1);
    let radius = 2.0 * m.xi2(1.0).sqrt();
    let lambda_top = rec.lambda(j);
    let lambda_bottom = rec.lambda(n - j);
    let predicted_top = radius - rec.radial;
    let predicted_bottom = -radius - rec.radial;
    let q = semicircle_quantile(j as f64 / n as f64);
    let quantile_top = radius * q - rec.radial;
    let quantile_bottom = -radius * q - rec.radial;
    BulkEdgeReport {
        j,
        lambda_top,
        lambda_bottom,
        radius,
        predicted_top,
        predicted_bottom,
        gap_top: (lambda_top - predicted_top).abs(),
        gap_bottom: (lambda_bottom - predicted_bottom).abs(),
        quantile_top,
        quantile_bottom,
        quantile_gap_top: (lambda_top - quantile_top).abs(),
        quantile_gap_bottom: (lambda_bottom - quantile_bottom).abs(),
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct RecordGaps {
    pub energy_per_n: f64,
    pub radial_gap: f64,
    pub bulk_gap: f64,
    pub outlier_gap: f64,
    pub bottom_gap: f64,
}

#[derive(Debug, Clone, Serialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum PredictionReport {
    Checked {
        delta: f64,
        records: Vec<RecordGaps>,
        max_radial_gap: f64,
        max_bulk_gap: f64,
        max_outlier_gap: f64,
        max_bottom_gap: f64,
        /// The outlier bound only applies to even mixtures.
        outlier_applies: bool,
        best_energy_gap: f64,
    },
    NoApproximateGroundStates {
        delta: f64,
        best_energy_gap: f64,
    },
}

/// δ defaulting to the achieved energy gap plus 0.01.
pub fn default_delta(recs: &[LandscapeRecord], gs: f64) -> f64 {
    let best = recs.iter().map(|r| r.energy_per_n).fold(f64::NEG_INFINITY, f64::max);
    (gs - best).max(0.0) + 0.01
}

/// Gaps between converged δ-approximate maxima and the predicted spectrum.
pub fn prediction_check(recs: &[LandscapeRecord], pred: &SpectralPrediction, delta: f64, even: bool) -> PredictionReport {
    let best = recs.iter().map(|r| r.energy_per_n).fold(f64::NEG_INFINITY, f64::max);
    let best_energy_gap = pred.gs - best;
    let kept: Vec<&LandscapeRecord> = recs.iter().filter(|r| r.energy_per_n >= pred.gs - delta).collect();
    if kept.is_empty() {
        return PredictionReport::NoApproximateGroundStates { delta, best_energy_gap };
    }
    let gaps: Vec<RecordGaps> = kept
        .iter()
        .map(|r| {
            let n = r.eigs.len() + 1;
            let k = ((delta * n as f64).ceil() as usize).clamp(1, n - 1);
            RecordGaps {
                energy_per_n: r.energy_per_n,
                radial_gap: (r.radial - pred.r).abs(),
                bulk_gap: (r.lambda(k) - pred.lambda_plus).abs(),
                outlier_gap: (r.lambda_max() - pred.lambda_plus).abs(),
                bottom_gap: (r.lambda_min() - pred.lambda_minus).abs(),
            }
        })
        .collect();
    let max = |f: fn(&RecordGaps) -> f64| gaps.iter().map(f).fold(0.0, f64::max);
    PredictionReport::Checked {
        delta,
        max_radial_gap: max(|g| g.radial_gap),
        max_bulk_gap: max(|g| g.bulk_gap),
        max_outlier_gap: max(|g| g.outlier_gap),
        max_bottom_gap: max(|g| g.bottom_gap),
        outlier_applies: even,
        best_energy_gap,
        records: gaps,
    }
}

/// Replicas a_k σ + b_k v weighted by w_k in the objective Σ w_k H.
#[derive(Debug, Clone)]
struct Replicas {
    coeffs: Vec<(f64, f64, f64)>,
}

impl Replicas {
    fn pair(eps: f64) -> Self {
        let theta = (eps / 2.0).sqrt().asin();
        let (s, c) = theta.sin_cos();
        Self {
            coeffs: vec![(c, s, 1.0), (c, -s, 1.0)],
        }
    }

    fn triple(eps: f64) -> Self {
        let theta = (eps / 2.0).sqrt().asin();
        let (s, c) = (2.0 * theta).sin_cos();
        Self {
            coeffs: vec![(1.0, 0.0, 3.0), (c, s, -1.0), (c, -s, -1.0)],
        }
    }

    fn points(&self, sigma: &DVector<f64>, v: &DVector<f64>) -> Vec<DVector<f64>> {
        self.coeffs.iter().map(|&(a, b, _)| sigma * a + v * b).collect()
    }

    fn value(&self, h: &HamiltonianInstance, sigma: &DVector<f64>, v: &DVector<f64>) -> f64 {
        self.points(sigma, v)
            .iter()
            .zip(&self.coeffs)
            .map(|(x, &(_, _, w))| w * h.value_at(x.as_slice()))
            .sum()
    }

    /// Riemannian gradient on {|σ|² = |v|² = N, σ ⟂ v}.
    fn gradient(&self, h: &HamiltonianInstance, sigma: &DVector<f64>, v: &DVector<f64>) -> (DVector<f64>, DVector<f64>) {
        let n = sigma.len();
        let mut gs = DVector::zeros(n);
        let mut gv = DVector::zeros(n);
        for (x, &(a, b, w)) in self.points(sigma, v).iter().zip(&self.coeffs) {
            let g = h.gradient_at(x.as_slice());
            gs += &g * (w * a);
            gv += &g * (w * b);
        }
        let nn = n as f64;
        let (ss, sv) = (sigma.dot(&gs) / nn, v.dot(&gs) / nn);
        let (vs, vv) = (sigma.dot(&gv) / nn, v.dot(&gv) / nn);
        let off = 0.5 * (sv + vs);
        let ps = &gs - sigma * ss - v * off;
        let pv = &gv - sigma * off - v * vv;
        (ps, pv)
    }
}

fn orthonormal_pair(sigma: DVector<f64>, v: DVector<f64>) -> (DVector<f64>, DVector<f64>) {
    let s = retract(sigma);
    let n = s.len() as f64;
    let v = &v - &s * (s.dot(&v) / n);
    (s, retract(v))
}

#[derive(Debug, Clone, Serialize)]
pub struct ReplicaSearch {
    pub eps: f64,
    /// Best objective divided by N.
    pub value_per_n: f64,
    /// Realized overlap matrix of the replicas.
    pub overlaps: Vec<Vec<f64>>,
    pub converged: bool,
    pub steps: usize,
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct SearchOptions {
    pub restarts: usize,
    pub seed: u64,
    pub ascent: AscentOptions,
    /// Gradient tolerance of the joint ascent.
    pub tol_grad: f64,
    pub max_steps: usize,
}

impl Default for SearchOptions {
    fn default() -> Self {
        Self {
            restarts: 10,
            seed: 0,
            ascent: AscentOptions {
                tol_grad: 1e-6,
                ..AscentOptions::default()
            },
            tol_grad: 1e-6,
            max_steps: 2_000,
        }
    }
}

fn joint_ascent(
    h: &HamiltonianInstance,
    reps: &Replicas,
    sigma: DVector<f64>,
    v: DVector<f64>,
    tol: f64,
    max_steps: usize,
) -> (f64, DVector<f64>, DVector<f64>, usize, bool) {
    let n = h.n() as f64;
    let (mut s, mut v) = orthonormal_pair(sigma, v);
    let mut f = reps.value(h, &s, &v);
    let mut eta = 0.05;
    // Curvature along v is of order b², so the v-step is rescaled by 1/b².
    let b2 = reps.coeffs.iter().map(|c| c.1 * c.1).fold(0.0, f64::max).max(1e-12);
    for step in 0..max_steps {
        let (gs, gv) = reps.gradient(h, &s, &v);
        if (gs.norm_squared() + gv.norm_squared()).sqrt() / n.sqrt() <= tol {
            return (f, s, v, step, true);
        }
        let dv = &gv / b2;
        let slope = gs.norm_squared() + gv.dot(&dv);
        loop {
            let (ts, tv) = orthonormal_pair(&s + &gs * eta, &v + &dv * eta);
            let ft = reps.value(h, &ts, &tv);
            if ft >= f + 1e-4 * eta * slope {
                s = ts;
                v = tv;
                f = ft;
                eta = (eta * 1.5).min(10.0);
                break;
            }
            eta *= 0.5;
            if eta < 1e-14 {
                return (f, s, v, step, false);
            }
        }
    }
    (f, s, v, max_steps, false)
}

fn overlap_matrix(points: &[DVector<f64>]) -> Vec<Vec<f64>> {
    let n = points[0].len() as f64;
    points.iter().map(|a| points.iter().map(|b| a.dot(b) / n).collect()).collect()
}

/// Objective of the pinned pair at a fixed (σ, v), divided by N.
pub fn pair_objective(h: &HamiltonianInstance, sigma: &SpherePoint, v: &DVector<f64>, eps: f64) -> f64 {
    let (s, v) = orthonormal_pair(sigma.coords().clone(), v.clone());
    Replicas::pair(eps).value(h, &s, &v) / h.n() as f64
}

/// Overlaps of σ± = cos θ·σ ± sin θ·v with sin²θ = ε/2.
pub fn pair_overlaps(sigma: &SpherePoint, v: &DVector<f64>, eps: f64) -> Vec<Vec<f64>> {
    let (s, v) = orthonormal_pair(sigma.coords().clone(), v.clone());
    overlap_matrix(&Replicas::pair(eps).points(&s, &v))
}

/// Overlaps of (σ, cos 2θ·σ + sin 2θ·v, cos 2θ·σ − sin 2θ·v).
pub fn triple_overlaps(sigma: &SpherePoint, v: &DVector<f64>, eps: f64) -> Vec<Vec<f64>> {
    let (s, v) = orthonormal_pair(sigma.coords().clone(), v.clone());
    overlap_matrix(&Replicas::triple(eps).points(&s, &v))
}

fn replica_search(h: &HamiltonianInstance, eps: f64, opts: &SearchOptions, triple: bool) -> Result<ReplicaSearch> {
    let reps = if triple { Replicas::triple(eps) } else { Replicas::pair(eps) };
    let starts = ascend_restarts(h, opts.restarts, opts.seed, &opts.ascent)?;
    let runs: Vec<_> = starts
        .into_par_iter()
        .map(|rec| {
            // Open the pair along the softest direction, the triple along the stiffest.
            let v = if triple { rec.bottom_vector.clone() } else { rec.top_vector.clone() };
            joint_ascent(h, &reps, rec.sigma.coords().clone(), v, opts.tol_grad, opts.max_steps)
        })
        .collect();
    let best = runs
        .into_iter()
        .max_by(|a, b| a.0.total_cmp(&b.0))
        .ok_or_else(|| Error::Precondition("at least one restart is required".into()))?;
    let (f, s, v, steps, converged) = best;
    Ok(ReplicaSearch {
        eps,
        value_per_n: f / h.n() as f64,
        overlaps: overlap_matrix(&reps.points(&s, &v)),
        converged,
        steps,
    })
}

/// Empirical GS₂,ε: max (H(σ⁺) + H(σ⁻))/N with R(σ⁺, σ⁻) = 1 − ε.
pub fn constrained_pair_search(h: &HamiltonianInstance, eps: f64, opts: &SearchOptions) -> Result<ReplicaSearch> {
    if !(eps > 0.0 && eps < 0.5) {
        return Err(Error::Domain(format!("eps = {eps} outside (0, 0.5)")));
    }
    replica_search(h, eps, opts, false)
}

/// Empirical GS₃,ε for 3H(σ¹) − H(σ²) − H(σ³) with overlaps pinned to Q₃.
pub fn constrained_triple_search(h: &HamiltonianInstance, eps: f64, opts: &SearchOptions) -> Result<ReplicaSearch> {
    if !(eps > 0.0 && eps < 0.25) {
        return Err(Error::Domain(format!("eps = {eps} outside (0, 0.25)")));
    }
    let res = replica_search(h, eps, opts, true)?;
    let q = crate::replica_bounds::q3(eps);
    let worst = (0..3)
        .flat_map(|i| (0..3).map(move |j| (i, j)))
        .map(|(i, j)| (res.overlaps[i][j] - q[(i, j)]).abs())
        .fold(0.0, f64::max);
    if worst > 1e-9 {
        return Err(Error::Precondition(format!("realized overlaps deviate from Q₃ by {worst:.2e}")));
    }
    Ok(res)
}

#[derive(Debug, Clone, Serialize)]
pub struct Component {
    pub members: Vec<usize>,
    pub diameter_per_sqrt_n: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct ClusterReport {
    pub threshold_per_sqrt_n: f64,
    pub kept: Vec<usize>,
    pub components: Vec<Component>,
    /// Smallest distance between different components, per √N.
    pub min_separation_per_sqrt_n: Option<f64>,
    pub antipodal_folded: bool,
}

/// Single-linkage clustering of records within δ of the best energy.
/// Even mixtures identify σ with −σ first.
pub fn cluster_level_set(recs: &[LandscapeRecord], delta: f64, threshold_per_sqrt_n: f64, fold_antipodes: bool) -> Result<ClusterReport> {
    if recs.len() < 2 {
        return Err(Error::Precondition("clustering needs at least two records".into()));
    }
    let best = recs.iter().map(|r| r.energy_per_n).fold(f64::NEG_INFINITY, f64::max);
    let kept: Vec<usize> = (0..recs.len()).filter(|&i| recs[i].energy_per_n >= best - delta).collect();
    let sqrt_n = (recs[0].sigma.dim() as f64).sqrt();
    let dist = |i: usize, j: usize| -> f64 {
        let (a, b) = (recs[i].sigma.coords(), recs[j].sigma.coords());
        let d = (a - b).norm();
        let d = if fold_antipodes { d.min((a + b).norm()) } else { d };
        d / sqrt_n
    };
    let k = kept.len();
    let mut d = vec![vec![0.0; k]; k];
    for i in 0..k {
        for j in i + 1..k {
            d[i][j] = dist(kept[i], kept[j]);
            d[j][i] = d[i][j];
        }
    }
    let mut parent: Vec<usize> = (0..k).collect();
    fn find(p: &mut [usize], mut i: usize) -> usize {
        while p[i] != i {
            p[i] = p[p[i]];
            i = p[i];
        }
        i
    }
    for i in 0..k {
        for j in i + 1..k {
            if d[i][j] <= threshold_per_sqrt_n {
                let (a, b) = (find(&mut parent, i), find(&mut parent, j));
                parent[a] = b;
            }
        }
    }
    let roots: Vec<usize> = (0..k).map(|i| find(&mut parent, i)).collect();
    let mut labels: Vec<usize> = roots.clone();
    labels.sort_unstable();
    labels.dedup();
    let components: Vec<Component> = labels
        .iter()
        .map(|&r| {
            let idx: Vec<usize> = (0..k).filter(|&i| roots[i] == r).collect();
            let diameter = idx
                .iter()
                .flat_map(|&i| idx.iter().map(move |&j| (i, j)))
                .map(|(i, j)| d[i][j])
                .fold(0.0, f64::max);
            Component {
                members: idx.iter().map(|&i| kept[i]).collect(),
                diameter_per_sqrt_n: diameter,
            }
        })
        .collect();
    let mut sep: Option<f64> = None;
    for i in 0..k {
        for j in i + 1..k {
            if roots[i] != roots[j] {
                sep = Some(sep.map_or(d[i][j], |s: f64| s.min(d[i][j])));
            }
        }
    }
    Ok(ClusterReport {
        threshold_per_sqrt_n,
        kept,
        components,
        min_separation_per_sqrt_n: sep,
        antipodal_folded: fold_antipodes,
    })
}

/// M̃ from the non-embedding argument: ((d+1)/(d+2))² on the diagonal and
/// −(d+1)/(d+2)² off it.
pub fn reference_matrix(d: usize) -> DMatrix<f64> {
    let k = d as f64;
    let diag = ((k + 1.0) / (k + 2.0)).powi(2);
    let off = -(k + 1.0) / (k + 2.0).powi(2);
    DMatrix::from_fn(d + 2, d + 2, |i, j| if i == j { diag } else { off })
}

/// Centered Gram matrix of a unit-edge regular simplex on d + 2 vertices.
pub fn simplex_gram(d: usize) -> DMatrix<f64> {
    let k = d as f64 + 2.0;
    DMatrix::from_fn(d + 2, d + 2, |i, j| if i == j { (k - 1.0) / (2.0 * k) } else { -1.0 / (2.0 * k) })
}

pub fn sorted_eigs(m: &DMatrix<f64>) -> Vec<f64> {
    let mut e: Vec<f64> = SymmetricEigen::new(m.clone()).eigenvalues.iter().copied().collect();
    e.sort_by(|a, b| b.total_cmp(a));
    e
}

#[derive(Debug, Clone, Serialize)]
pub struct RankCertificate {
    /// n − 2 for n input points.
    pub d: usize,
    pub gram_eigs: Vec<f64>,
    /// Weyl lower bound on λ_{d+1} of the centered Gram matrix.
    pub lower_bound: f64,
    /// True when the distance window is wide enough that d + 2 such points
    /// might fit in ℝᵈ.
    pub feasible: bool,
}

/// Certificate that d + 2 points with all pairwise distances in
/// [a(1−ε), a(1+ε)] need at least d + 1 dimensions.
pub fn equidistant_rank_certificate(points: &[DVector<f64>], a: f64, eps: f64) -> Result<RankCertificate> {
    let n = points.len();
    if n < 3 || !(a > 0.0) || !(eps >= 0.0) {
        return Err(Error::Precondition("need at least three points, a > 0 and ε ≥ 0".into()));
    }
    let dim = points[0].len();
    if points.iter().any(|p| p.len() != dim) {
        return Err(Error::Precondition("points have different dimensions".into()));
    }
    let tol = 1e-12 * a;
    for i in 0..n {
        for j in i + 1..n {
            let dij = (&points[i] - &points[j]).norm();
            if dij < a * (1.0 - eps) - tol || dij > a * (1.0 + eps) + tol {
                return Err(Error::Precondition(format!(
                    "points {i} and {j} are {dij:.6} apart, outside [{:.6}, {:.6}]",
                    a * (1.0 - eps),
                    a * (1.0 + eps)
                )));
            }
        }
    }
    let z = points.iter().fold(DVector::zeros(dim), |acc, p| acc + p) / n as f64;
    let y: Vec<DVector<f64>> = points.iter().map(|p| (p - &z) / a).collect();
    let gram = DMatrix::from_fn(n, n, |i, j| y[i].dot(&y[j]));
    let gram_eigs = sorted_eigs(&gram);
    // Squared distances move by at most η = 2ε + ε², so the Gram matrix moves
    // by at most nη/2 in operator norm; the simplex has λ_{d+1} = 1/2.
    let eta = 2.0 * eps + eps * eps;
    let lower_bound = 0.5 - 0.5 * n as f64 * eta;
    Ok(RankCertificate {
        d: n - 2,
        gram_eigs,
        lower_bound,
        feasible: lower_bound <= 0.0,
    })
}

/// Vertices of the unit-edge regular simplex on d + 2 points in ℝ^{d+1}.
pub fn regular_simplex(d: usize) -> Vec<DVector<f64>> {
    let n = d + 2;
    // Scaled standard basis of ℝⁿ, centered and expressed in an orthonormal
    // basis of the hyperplane Σx = 0.
    let basis = {
        let mut cols: Vec<DVector<f64>> = Vec::new();
        for k in 1..n {
            let mut v = DVector::zeros(n);
            for i in 0..k {
                v[i] = 1.0;
            }
            v[k] = -(k as f64);
            cols.push(v.normalize());
        }
        cols
    };
    (0..n)
        .map(|i| {
            let mut e = DVector::zeros(n);
            e[i] = std::f64::consts::FRAC_1_SQRT_2;
            DVector::from_iterator(n - 1, basis.iter().map(|b| b.dot(&e)))
        })
        .collect()
}
