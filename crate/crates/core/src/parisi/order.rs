//! Discretized order parameters on the uniform grid q_i = i/M.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Zero-temperature order parameter, stored through ẑ(q_i) = L − ∫₀^{q_i} ζ.
///
/// ẑ is piecewise linear between nodes, so ζ is constant on each cell.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OrderParameter {
    zhat: Vec<f64>,
}

/// Relative slack allowed when checking monotonicity and concavity.
const SHAPE_SLACK: f64 = 1e-12;

impl OrderParameter {
    /// Validates a node sequence: positive, nonincreasing and concave.
    pub fn from_zhat(zhat: Vec<f64>) -> Result<Self> {
        if zhat.len() < 2 {
            return Err(Error::OutsideCone("need at least two grid nodes".into()));
        }
        if let Some((i, z)) = zhat.iter().enumerate().find(|(_, z)| !(**z > 0.0) || !z.is_finite()) {
            return Err(Error::OutsideCone(format!("zhat[{i}] = {z} is not positive")));
        }
        let scale = zhat[0];
        let m = zhat.len() - 1;
        let h = 1.0 / m as f64;
        let levels: Vec<f64> = zhat.windows(2).map(|w| (w[0] - w[1]) / h).collect();
        let tol = SHAPE_SLACK * scale / h;
        if let Some(c) = levels.iter().position(|&l| l < -tol) {
            return Err(Error::OutsideCone(format!("zhat increases on cell {c}")));
        }
        if let Some(c) = levels.windows(2).position(|w| w[1] < w[0] - tol) {
            return Err(Error::OutsideCone(format!("zhat is not concave at node {}", c + 1)));
        }
        Ok(Self { zhat })
    }

    /// Builds ẑ from L and per-cell values of ζ (length M). The cell values
    /// must be nonnegative and nondecreasing.
    pub fn from_levels(l: f64, zeta: &[f64]) -> Result<Self> {
        let m = zeta.len();
        let h = 1.0 / m as f64;
        let mut zhat = Vec::with_capacity(m + 1);
        zhat.push(l);
        let mut z = l;
        for &c in zeta {
            z -= h * c;
            zhat.push(z);
        }
        Self::from_zhat(zhat)
    }

    /// Constant ẑ ≡ L (ζ ≡ 0).
    pub fn constant(l: f64, m: usize) -> Result<Self> {
        Self::from_zhat(vec![l; m + 1])
    }

    pub(crate) fn from_zhat_unchecked(zhat: Vec<f64>) -> Self {
        Self { zhat }
    }

    /// Number of cells M.
    pub fn cells(&self) -> usize {
        self.zhat.len() - 1
    }

    pub fn h(&self) -> f64 {
        1.0 / self.cells() as f64
    }

    pub fn grid(&self) -> Vec<f64> {
        let m = self.cells();
        (0..=m).map(|i| i as f64 / m as f64).collect()
    }

    pub fn zhat(&self) -> &[f64] {
        &self.zhat
    }

    pub fn l(&self) -> f64 {
        self.zhat[0]
    }

    pub fn zhat1(&self) -> f64 {
        *self.zhat.last().unwrap()
    }

    /// ζ on each cell, clamped at zero.
    pub fn zeta_cells(&self) -> Vec<f64> {
        let h = self.h();
        self.zhat.windows(2).map(|w| ((w[0] - w[1]) / h).max(0.0)).collect()
    }

    /// ζ at every node (right-continuous; the last node repeats ζ(1⁻)).
    pub fn zeta_nodes(&self) -> Vec<f64> {
        let mut z = self.zeta_cells();
        z.push(*z.last().unwrap());
        z
    }

    /// Jumps of ζ located at nodes 0..M−1; the jump at node 0 is ζ on the first cell.
    pub fn zeta_jumps(&self) -> Vec<f64> {
        let z = self.zeta_cells();
        let mut out = Vec::with_capacity(z.len());
        let mut prev = 0.0;
        for &c in &z {
            out.push((c - prev).max(0.0));
            prev = c;
        }
        out
    }

    /// Z(q) = L − ẑ(q) = ∫₀^q ζ at the nodes.
    pub fn zeta_integral(&self) -> Vec<f64> {
        let l = self.l();
        self.zhat.iter().map(|z| l - z).collect()
    }

    /// ẑ at an arbitrary q ∈ [0, 1] by linear interpolation.
    pub fn zhat_at(&self, q: f64) -> f64 {
        let m = self.cells();
        let x = (q * m as f64).clamp(0.0, m as f64);
        let c = (x.floor() as usize).min(m - 1);
        let t = x - c as f64;
        self.zhat[c] * (1.0 - t) + self.zhat[c + 1] * t
    }

    /// ζ at q (right-continuous), with ζ(1) = ζ(1⁻).
    pub fn zeta_at(&self, q: f64) -> f64 {
        let m = self.cells();
        let c = ((q * m as f64).floor().max(0.0) as usize).min(m - 1);
        ((self.zhat[c] - self.zhat[c + 1]) * m as f64).max(0.0)
    }

    /// Convex combination λ·self + (1−λ)·other on the same grid.
    pub fn mix(&self, other: &Self, lambda: f64) -> Result<Self> {
        if self.zhat.len() != other.zhat.len() {
            return Err(Error::DimensionMismatch {
                expected: self.zhat.len(),
                got: other.zhat.len(),
            });
        }
        Ok(Self {
            zhat: self.zhat.iter().zip(&other.zhat).map(|(a, b)| lambda * a + (1.0 - lambda) * b).collect(),
        })
    }
}

/// Nondecreasing least-squares fit (pool adjacent violators), unit weights.
pub fn isotonic_nondecreasing(y: &[f64]) -> Vec<f64> {
    let mut means: Vec<f64> = Vec::with_capacity(y.len());
    let mut counts: Vec<usize> = Vec::with_capacity(y.len());
    for &v in y {
        means.push(v);
        counts.push(1);
        while means.len() > 1 && means[means.len() - 2] > means[means.len() - 1] {
            let (m2, c2) = (means.pop().unwrap(), counts.pop().unwrap());
            let (m1, c1) = (means.pop().unwrap(), counts.pop().unwrap());
            let c = c1 + c2;
            means.push((m1 * c1 as f64 + m2 * c2 as f64) / c as f64);
            counts.push(c);
        }
    }
    means
        .iter()
        .zip(&counts)
        .flat_map(|(&m, &c)| std::iter::repeat_n(m, c))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_non_positive_and_non_concave() {
        assert!(OrderParameter::from_zhat(vec![1.0, 0.5, 0.0]).is_err());
        assert!(OrderParameter::from_zhat(vec![1.0, 1.1, 1.2]).is_err());
        // decreasing but convex
        assert!(OrderParameter::from_zhat(vec![1.0, 0.5, 0.4]).is_err());
        assert!(OrderParameter::from_zhat(vec![1.0, 0.9, 0.7]).is_ok());
    }

    #[test]
    fn levels_round_trip() {
        let op = OrderParameter::from_levels(2.0, &[0.0, 0.5, 0.5, 1.0]).unwrap();
        assert_eq!(op.cells(), 4);
        let z = op.zeta_cells();
        for (a, b) in z.iter().zip([0.0, 0.5, 0.5, 1.0]) {
            assert!((a - b).abs() < 1e-12);
        }
        let jumps = op.zeta_jumps();
        assert!((jumps[1] - 0.5).abs() < 1e-12 && jumps[2].abs() < 1e-12 && (jumps[3] - 0.5).abs() < 1e-12);
        assert!((op.zhat1() - (2.0 - 0.5)).abs() < 1e-12);
        assert!((op.zhat_at(0.375) - 1.9375).abs() < 1e-12);
    }

    #[test]
    fn pava_pools_violators() {
        let f = isotonic_nondecreasing(&[3.0, 1.0, 2.0, 5.0, 4.0]);
        assert_eq!(f, vec![2.0, 2.0, 2.0, 4.5, 4.5]);
        let f = isotonic_nondecreasing(&[1.0, 2.0, 3.0]);
        assert_eq!(f, vec![1.0, 2.0, 3.0]);
    }
}
