//! Finite-N mixed p-spin Hamiltonians built from i.i.d. Gaussian tensors.
//!
//! H(σ) = Σ_p γ_p N^{-(p-1)/2} Σ G^{(p)}_{i₁…i_p} σ_{i₁}⋯σ_{i_p}. Tensors are kept
//! exactly as sampled. Derivatives go through a compressed symmetric copy
//! built on first use, which leaves H unchanged and stores about N^p/p!
//! weights.

use std::borrow::Cow;
use std::io::{Read, Write};
use std::path::Path;
use std::sync::OnceLock;

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::mixture::Mixture;

/// Default cap on Σ_p N^p stored tensor entries.
pub const DEFAULT_BUDGET: u128 = 200_000_000;

const DUMP_MAGIC: &[u8; 8] = b"PSPINH01";
const PAR_THRESHOLD: usize = 1 << 16;

/// A point of the sphere of radius √N.
#[derive(Debug, Clone, PartialEq)]
pub struct SpherePoint {
    coords: DVector<f64>,
}

impl SpherePoint {
    /// Accepts coordinates whose squared norm is N within 1e−9·N.
    pub fn new(coords: DVector<f64>) -> Result<Self> {
        let n = coords.len() as f64;
        if coords.is_empty() || (coords.norm_squared() - n).abs() > 1e-9 * n {
            return Err(Error::Domain(format!(
                "point has squared norm {} but dimension {}",
                coords.norm_squared(),
                coords.len()
            )));
        }
        Ok(Self { coords })
    }

    /// Rescales any nonzero vector onto the sphere.
    pub fn from_direction(v: DVector<f64>) -> Result<Self> {
        let norm = v.norm();
        if !(norm > 0.0) || !norm.is_finite() {
            return Err(Error::Domain("cannot normalize a zero or non-finite vector".into()));
        }
        let n = v.len() as f64;
        Ok(Self {
            coords: v * (n.sqrt() / norm),
        })
    }

    /// Uniform point on the sphere.
    pub fn random<R: Rng + ?Sized>(n: usize, rng: &mut R) -> Self {
        let v = DVector::from_fn(n, |_, _| rng.sample::<f64, _>(StandardNormal));
        Self::from_direction(v).expect("Gaussian vector is nonzero")
    }

    pub fn dim(&self) -> usize {
        self.coords.len()
    }

    pub fn coords(&self) -> &DVector<f64> {
        &self.coords
    }

    pub fn into_inner(self) -> DVector<f64> {
        self.coords
    }

    /// R(σ¹, σ²) = ⟨σ¹, σ²⟩/N.
    pub fn overlap(&self, other: &Self) -> f64 {
        self.coords.dot(&other.coords) / self.dim() as f64
    }
}

/// One Gaussian tensor G^{(p)} stored flat in row-major order.
#[derive(Debug, Clone, PartialEq)]
pub struct Tensor {
    pub degree: u32,
    pub gamma: f64,
    pub data: Vec<f64>,
}

/// Spherical derivatives at a point, in a Householder tangent frame.
#[derive(Debug, Clone)]
pub struct SphericalOps {
    pub radial: f64,
    pub grad_sp: DVector<f64>,
    pub hess_sp: DMatrix<f64>,
}

#[derive(Debug, Clone)]
pub struct HamiltonianInstance {
    n: usize,
    mixture: Mixture,
    seed: u64,
    tensors: Vec<Tensor>,
    /// Symmetrized tensors, built on the first derivative request.
    sym: OnceLock<Vec<SymTensor>>,
}

fn entries(n: usize, p: u32) -> u128 {
    (n as u128).checked_pow(p).unwrap_or(u128::MAX)
}

fn check_budget(n: usize, m: &Mixture, budget: u128) -> Result<()> {
    let mut total: u128 = 0;
    for &p in m.gammas().keys() {
        total = total.saturating_add(entries(n, p));
        if total > budget {
            return Err(Error::Capacity {
                degree: p,
                entries: entries(n, p),
                budget,
            });
        }
    }
    Ok(())
}

/// Draws the tensors for every degree of `m`. Each degree reads its own
/// ChaCha stream, so adding a degree never changes the others.
pub fn sample(n: usize, m: &Mixture, seed: u64) -> Result<HamiltonianInstance> {
    sample_with_budget(n, m, seed, DEFAULT_BUDGET)
}

pub fn sample_with_budget(n: usize, m: &Mixture, seed: u64, budget: u128) -> Result<HamiltonianInstance> {
    if n == 0 {
        return Err(Error::Domain("dimension must be positive".into()));
    }
    check_budget(n, m, budget)?;
    let tensors = m
        .gammas()
        .iter()
        .map(|(&p, &gamma)| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(p as u64);
            let len = n.pow(p);
            let data = (0..len).map(|_| rng.sample::<f64, _>(StandardNormal)).collect();
            Tensor { degree: p, gamma, data }
        })
        .collect();
    Ok(HamiltonianInstance {
        n,
        mixture: m.clone(),
        seed,
        tensors,
        sym: OnceLock::new(),
    })
}

/// Contracts axis `axis` of a `rank`-way cube of side n with `v`.
fn contract_axis(a: &[f64], n: usize, rank: u32, axis: u32, v: &[f64]) -> Vec<f64> {
    let inner = n.pow(rank - axis - 1);
    let outer = n.pow(axis);
    let mut out = vec![0.0; outer * inner];
    let block = |(o, dst): (usize, &mut [f64])| {
        let src = &a[o * n * inner..(o + 1) * n * inner];
        if inner == 1 {
            dst[0] = src.iter().zip(v).map(|(x, y)| x * y).sum();
        } else {
            for (k, &vk) in v.iter().enumerate() {
                for (d, s) in dst.iter_mut().zip(&src[k * inner..(k + 1) * inner]) {
                    *d += vk * s;
                }
            }
        }
    };
    if a.len() >= PAR_THRESHOLD {
        out.par_chunks_mut(inner).enumerate().for_each(block);
    } else {
        out.chunks_mut(inner).enumerate().for_each(block);
    }
    out
}

/// Next lexicographic permutation; false once the sequence is descending.
fn next_permutation(v: &mut [usize]) -> bool {
    let Some(i) = (1..v.len()).rev().find(|&i| v[i - 1] < v[i]) else {
        return false;
    };
    let j = (i..v.len()).rev().find(|&j| v[j] > v[i - 1]).unwrap();
    v.swap(i - 1, j);
    v[i..].reverse();
    true
}

/// Symmetric tensor stored on nondecreasing index tuples in lexicographic
/// order. Each weight is the sum of the raw entries over all distinct
/// permutations of its tuple, so H_p(x) = Σ_I w_I x^I with I sorted.
#[derive(Debug, Clone)]
struct SymTensor {
    p: usize,
    n: usize,
    w: Vec<f64>,
}

/// Advances a nondecreasing tuple with entries below n; false at the end.
fn next_sorted(idx: &mut [usize], n: usize) -> bool {
    for k in (0..idx.len()).rev() {
        if idx[k] + 1 < n {
            idx[k] += 1;
            let v = idx[k];
            idx[k + 1..].fill(v);
            return true;
        }
    }
    false
}

impl SymTensor {
    fn from_raw(data: &[f64], n: usize, p: u32) -> Self {
        let p = p as usize;
        let strides: Vec<usize> = (0..p).map(|k| n.pow((p - 1 - k) as u32)).collect();
        let mut w = Vec::new();
        let mut idx = vec![0usize; p];
        loop {
            let mut perm = idx.clone();
            let mut sum = 0.0;
            loop {
                sum += data[perm.iter().zip(&strides).map(|(i, s)| i * s).sum::<usize>()];
                if !next_permutation(&mut perm) {
                    break;
                }
            }
            w.push(sum);
            if !next_sorted(&mut idx, n) {
                break;
            }
        }
        Self { p, n, w }
    }

    /// Accumulates c·H_p and, when requested, its gradient and Hessian.
    /// The Hessian is split as a + b + bᵀ, both row-major.
    fn accumulate(&self, x: &[f64], c: f64, value: &mut f64, mut grad: Option<&mut [f64]>, mut hess: Option<(&mut [f64], &mut [f64])>) {
        let (p, n) = (self.p, self.n);
        let mut prefix = vec![0usize; p - 1];
        let mut offset = 0;
        let mut loo = vec![0.0; p - 1];
        loop {
            let start = prefix.last().copied().unwrap_or(0);
            let run = &self.w[offset..offset + n - start];
            let xs = &x[start..];
            let s: f64 = run.iter().zip(xs).map(|(a, b)| a * b).sum();
            // Leave-one-out products of the prefix.
            for (a, slot) in loo.iter_mut().enumerate() {
                *slot = prefix.iter().enumerate().filter(|&(b, _)| b != a).map(|(_, &i)| x[i]).product();
            }
            let full: f64 = prefix.iter().map(|&i| x[i]).product();
            *value += c * full * s;
            if let Some(g) = grad.as_deref_mut() {
                let cf = c * full;
                for (gl, r) in g[start..].iter_mut().zip(run) {
                    *gl += cf * r;
                }
                for (a, &i) in prefix.iter().enumerate() {
                    g[i] += c * s * loo[a];
                }
            }
            if let Some((ha, hb)) = hess.as_mut() {
                for a in 0..p - 1 {
                    for b in a + 1..p - 1 {
                        let rest: f64 = prefix
                            .iter()
                            .enumerate()
                            .filter(|&(k, _)| k != a && k != b)
                            .map(|(_, &i)| x[i])
                            .product();
                        let v = c * s * rest;
                        ha[prefix[a] * n + prefix[b]] += v;
                        ha[prefix[b] * n + prefix[a]] += v;
                    }
                    let coef = c * loo[a];
                    let row = &mut hb[prefix[a] * n + start..prefix[a] * n + n];
                    for (h, r) in row.iter_mut().zip(run) {
                        *h += coef * r;
                    }
                }
            }
            offset += n - start;
            if !next_sorted(&mut prefix, n) {
                break;
            }
        }
    }
}

impl HamiltonianInstance {
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn mixture(&self) -> &Mixture {
        &self.mixture
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn tensors(&self) -> &[Tensor] {
        &self.tensors
    }

    fn prefactor(&self, t: &Tensor) -> f64 {
        t.gamma / (self.n as f64).powf((t.degree as f64 - 1.0) / 2.0)
    }

    fn check_dim(&self, sigma: &SpherePoint) -> Result<()> {
        if sigma.dim() != self.n {
            return Err(Error::DimensionMismatch {
                expected: self.n,
                got: sigma.dim(),
            });
        }
        Ok(())
    }

    fn symmetric(&self) -> &[SymTensor] {
        self.sym.get_or_init(|| {
            self.tensors
                .iter()
                .map(|t| SymTensor::from_raw(&t.data, self.n, t.degree))
                .collect()
        })
    }

    /// H(σ) by direct contraction of the stored tensors.
    pub fn value_raw_at(&self, x: &[f64]) -> f64 {
        self.tensors
            .iter()
            .map(|t| {
                let mut a = Cow::Borrowed(t.data.as_slice());
                for rank in (1..=t.degree).rev() {
                    a = Cow::Owned(contract_axis(&a, self.n, rank, rank - 1, x));
                }
                self.prefactor(t) * a[0]
            })
            .sum()
    }

    /// Value and as many derivatives as `order` asks for, in one pass over
    /// each compressed symmetric tensor.
    fn jet(&self, x: &[f64], order: usize) -> (f64, Option<DVector<f64>>, Option<DMatrix<f64>>) {
        let n = self.n;
        let mut value = 0.0;
        let mut grad = (order >= 1).then(|| vec![0.0; n]);
        let mut ha = vec![0.0; if order >= 2 { n * n } else { 0 }];
        let mut hb = ha.clone();
        for (t, s) in self.tensors.iter().zip(self.symmetric()) {
            let c = self.prefactor(t);
            let hess = (order >= 2).then_some((ha.as_mut_slice(), hb.as_mut_slice()));
            s.accumulate(x, c, &mut value, grad.as_deref_mut(), hess);
        }
        let hess = (order >= 2).then(|| {
            let a = DMatrix::from_row_slice(n, n, &ha);
            let b = DMatrix::from_row_slice(n, n, &hb);
            let h = a + &b + b.transpose();
            (&h + h.transpose()) * 0.5
        });
        (value, grad.map(DVector::from_vec), hess)
    }

    /// H at any vector, on the sphere or not.
    pub fn value_at(&self, x: &[f64]) -> f64 {
        self.jet(x, 0).0
    }

    pub fn value_gradient_at(&self, x: &[f64]) -> (f64, DVector<f64>) {
        let (v, g, _) = self.jet(x, 1);
        (v, g.unwrap())
    }

    pub fn gradient_at(&self, x: &[f64]) -> DVector<f64> {
        self.jet(x, 1).1.unwrap()
    }

    /// ∇²H, symmetrized explicitly.
    pub fn hessian_at(&self, x: &[f64]) -> DMatrix<f64> {
        self.jet(x, 2).2.unwrap()
    }

    pub fn derivatives_at(&self, x: &[f64]) -> (f64, DVector<f64>, DMatrix<f64>) {
        let (v, g, h) = self.jet(x, 2);
        (v, g.unwrap(), h.unwrap())
    }

    pub fn evaluate(&self, sigma: &SpherePoint) -> Result<f64> {
        self.check_dim(sigma)?;
        Ok(self.value_at(sigma.coords.as_slice()))
    }

    pub fn gradient(&self, sigma: &SpherePoint) -> Result<DVector<f64>> {
        self.check_dim(sigma)?;
        Ok(self.gradient_at(sigma.coords.as_slice()))
    }

    pub fn hessian(&self, sigma: &SpherePoint) -> Result<DMatrix<f64>> {
        self.check_dim(sigma)?;
        Ok(self.hessian_at(sigma.coords.as_slice()))
    }

    /// Radial derivative, tangent gradient and spherical Hessian
    /// ∇²_{T×T}H − ∂_rad H · I.
    pub fn spherical_ops(&self, sigma: &SpherePoint) -> Result<SphericalOps> {
        self.check_dim(sigma)?;
        let grad = self.gradient(sigma)?;
        let hess = self.hessian(sigma)?;
        Ok(spherical_from(sigma, &grad, &hess))
    }

    /// Writes the tensors as little-endian f64 after a header carrying N, the
    /// seed and the degrees.
    pub fn dump<W: Write>(&self, mut w: W) -> Result<()> {
        w.write_all(DUMP_MAGIC)?;
        w.write_all(&(self.n as u64).to_le_bytes())?;
        w.write_all(&self.seed.to_le_bytes())?;
        w.write_all(&(self.tensors.len() as u32).to_le_bytes())?;
        for t in &self.tensors {
            w.write_all(&t.degree.to_le_bytes())?;
            w.write_all(&t.gamma.to_le_bytes())?;
            w.write_all(&(t.data.len() as u64).to_le_bytes())?;
            let mut buf = Vec::with_capacity(t.data.len() * 8);
            for x in &t.data {
                buf.extend_from_slice(&x.to_le_bytes());
            }
            w.write_all(&buf)?;
        }
        Ok(())
    }

    pub fn dump_to_path(&self, path: &Path) -> Result<()> {
        let f = std::io::BufWriter::new(std::fs::File::create(path)?);
        self.dump(f)
    }

    pub fn load<R: Read>(mut r: R) -> Result<Self> {
        fn take<const K: usize, R: Read>(r: &mut R) -> Result<[u8; K]> {
            let mut b = [0u8; K];
            r.read_exact(&mut b)?;
            Ok(b)
        }
        if &take::<8, _>(&mut r)? != DUMP_MAGIC {
            return Err(Error::Dump("bad magic".into()));
        }
        let n = u64::from_le_bytes(take(&mut r)?) as usize;
        let seed = u64::from_le_bytes(take(&mut r)?);
        let count = u32::from_le_bytes(take(&mut r)?);
        let mut tensors = Vec::new();
        for _ in 0..count {
            let degree = u32::from_le_bytes(take(&mut r)?);
            let gamma = f64::from_le_bytes(take(&mut r)?);
            let len = u64::from_le_bytes(take(&mut r)?) as usize;
            if entries(n, degree) != len as u128 {
                return Err(Error::Dump(format!("degree {degree} holds {len} entries, expected N^{degree}")));
            }
            let mut raw = vec![0u8; len * 8];
            r.read_exact(&mut raw)?;
            let data = raw.chunks_exact(8).map(|c| f64::from_le_bytes(c.try_into().unwrap())).collect();
            tensors.push(Tensor { degree, gamma, data });
        }
        let mixture = Mixture::new(tensors.iter().map(|t| (t.degree, t.gamma)))?;
        Ok(Self {
            n,
            mixture,
            seed,
            tensors,
            sym: OnceLock::new(),
        })
    }

    pub fn load_from_path(path: &Path) -> Result<Self> {
        Self::load(std::io::BufReader::new(std::fs::File::open(path)?))
    }
}

/// Householder reflection P = I − τuuᵀ with P e₁ = ±σ/√N.
#[derive(Debug, Clone)]
pub struct TangentFrame {
    u: DVector<f64>,
    tau: f64,
}

impl TangentFrame {
    pub fn new(sigma: &SpherePoint) -> Self {
        let n = sigma.dim();
        let s = sigma.coords() / (n as f64).sqrt();
        let mut u = -s.clone();
        // Choose the sign that avoids cancellation in u₁.
        if s[0] > 0.0 {
            u = s;
        }
        u[0] += 1.0;
        let uu = u.norm_squared();
        let tau = if uu > 0.0 { 2.0 / uu } else { 0.0 };
        Self { u, tau }
    }

    /// P x.
    pub fn apply(&self, x: &DVector<f64>) -> DVector<f64> {
        x - &self.u * (self.tau * self.u.dot(x))
    }

    /// Tangent coordinates (P x)[1..].
    pub fn to_tangent(&self, x: &DVector<f64>) -> DVector<f64> {
        let px = self.apply(x);
        px.rows(1, px.len() - 1).into_owned()
    }

    /// Embeds tangent coordinates back into ℝᴺ.
    pub fn from_tangent(&self, y: &DVector<f64>) -> DVector<f64> {
        let mut x = DVector::zeros(y.len() + 1);
        x.rows_mut(1, y.len()).copy_from(y);
        self.apply(&x)
    }

    /// (P A P) restricted to the tangent block.
    pub fn project(&self, a: &DMatrix<f64>) -> DMatrix<f64> {
        let v = (a * &self.u) * self.tau;
        let c = self.tau * self.u.dot(&v);
        let mut pap = a - &self.u * v.transpose() - &v * self.u.transpose();
        pap += (&self.u * self.u.transpose()) * c;
        let n = a.nrows();
        pap.view((1, 1), (n - 1, n - 1)).into_owned()
    }
}

/// Spherical quantities from a Euclidean gradient and Hessian.
pub fn spherical_from(sigma: &SpherePoint, grad: &DVector<f64>, hess: &DMatrix<f64>) -> SphericalOps {
    let n = sigma.dim();
    let radial = sigma.coords().dot(grad) / n as f64;
    let frame = TangentFrame::new(sigma);
    let grad_sp = frame.to_tangent(grad);
    let mut hess_sp = frame.project(hess);
    for i in 0..n - 1 {
        hess_sp[(i, i)] -= radial;
    }
    SphericalOps { radial, grad_sp, hess_sp }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn point(n: usize, seed: u64) -> SpherePoint {
        SpherePoint::random(n, &mut ChaCha8Rng::seed_from_u64(seed))
    }

    fn s_probe() -> DVector<f64> {
        point(6, 9).into_inner()
    }

    #[test]
    fn symmetrization_preserves_value() {
        let m = Mixture::new([(1, 0.5), (3, 1.0), (4, 0.7)]).unwrap();
        let h = sample(5, &m, 2).unwrap();
        let x = point(5, 8).into_inner();
        assert!((h.value_raw_at(x.as_slice()) - h.value_at(x.as_slice())).abs() < 1e-12);
    }

    #[test]
    fn derivatives_match_finite_differences() {
        let m = Mixture::new([(1, 0.5), (2, 0.8), (3, 1.0), (4, 0.7)]).unwrap();
        let h = sample(5, &m, 4).unwrap();
        let x = point(5, 1).into_inner();
        let (_, g, hess) = h.derivatives_at(x.as_slice());
        let step = 1e-5;
        for k in 0..5 {
            let mut xp = x.clone();
            let mut xm = x.clone();
            xp[k] += step;
            xm[k] -= step;
            let fd = (h.value_raw_at(xp.as_slice()) - h.value_raw_at(xm.as_slice())) / (2.0 * step);
            assert!((fd - g[k]).abs() < 1e-7 * (1.0 + g[k].abs()), "grad {k}");
            let col = (h.gradient_at(xp.as_slice()) - h.gradient_at(xm.as_slice())) / (2.0 * step);
            assert!((col - hess.column(k)).amax() < 1e-6, "hess {k}");
        }
    }

    #[test]
    fn permutations_of_multiset() {
        let mut v = vec![0, 1, 1];
        let mut count = 1;
        while next_permutation(&mut v) {
            count += 1;
        }
        assert_eq!(count, 3);
        assert_eq!(v, vec![1, 1, 0]);
    }

    #[test]
    fn quadratic_form() {
        let m = Mixture::pure(2).unwrap();
        let h = sample(6, &m, 3).unwrap();
        let g = DMatrix::from_row_slice(6, 6, &h.tensors()[0].data);
        assert!((h.value_raw_at(s_probe().as_slice()) - h.value_at(s_probe().as_slice())).abs() < 1e-12);
        let s = point(6, 1);
        let x = s.coords();
        let c = 1.0 / 6f64.sqrt();
        assert!((h.evaluate(&s).unwrap() - c * (x.transpose() * &g * x)[0]).abs() < 1e-12);
        let expect = (&g + g.transpose()) * c;
        assert!((h.hessian(&s).unwrap() - &expect).amax() < 1e-12);
        assert!((h.hessian(&point(6, 2)).unwrap() - expect).amax() < 1e-12);
    }

    #[test]
    fn streams_are_independent_per_degree() {
        let a = sample(5, &Mixture::pure(3).unwrap(), 11).unwrap();
        let b = sample(5, &Mixture::new([(2, 1.0), (3, 1.0)]).unwrap(), 11).unwrap();
        assert_eq!(a.tensors()[0].data, b.tensors()[1].data);
    }

    #[test]
    fn budget_names_degree() {
        let m = Mixture::new([(2, 1.0), (4, 1.0)]).unwrap();
        match sample(10_000, &m, 0) {
            Err(Error::Capacity { degree, entries, .. }) => {
                assert_eq!(degree, 4);
                assert_eq!(entries, 10u128.pow(16));
            }
            other => panic!("{other:?}"),
        }
        assert!(sample_with_budget(10, &m, 0, 10_100).is_ok());
        assert!(sample_with_budget(10, &m, 0, 10_099).is_err());
    }

    #[test]
    fn sphere_point_validation() {
        assert!(SpherePoint::new(DVector::from_element(4, 1.0)).is_ok());
        assert!(SpherePoint::new(DVector::from_element(4, 1.1)).is_err());
        let a = point(20, 1);
        assert!((a.overlap(&a) - 1.0).abs() < 1e-14);
    }

    #[test]
    fn dimension_mismatch() {
        let h = sample(5, &Mixture::pure(2).unwrap(), 0).unwrap();
        assert!(matches!(h.evaluate(&point(6, 0)), Err(Error::DimensionMismatch { expected: 5, got: 6 })));
    }

    #[test]
    fn frame_is_orthonormal() {
        let s = point(7, 4);
        let f = TangentFrame::new(&s);
        let basis = DMatrix::from_columns(
            &(0..6)
                .map(|i| f.from_tangent(&DVector::from_fn(6, |k, _| if k == i { 1.0 } else { 0.0 })))
                .collect::<Vec<_>>(),
        );
        assert!((basis.transpose() * &basis - DMatrix::identity(6, 6)).amax() < 1e-13);
        assert!((basis.transpose() * s.coords()).amax() < 1e-13);
    }
}
