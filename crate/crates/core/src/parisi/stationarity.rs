//! First-order optimality data of a zero-temperature order parameter.

use serde::Serialize;

use super::order::OrderParameter;
use crate::mixture::Mixture;
use crate::quad::GaussLegendre;

/// Relative jump size above which a node counts as a support point of ζ.
pub const SUPPORT_REL_TOL: f64 = 1e-6;

#[derive(Debug, Clone, Serialize)]
pub struct StationarityReport {
    /// G(q) = ξ'(q) − ∫₀^q ẑ^{−2}
    pub g_big: Vec<f64>,
    /// g(q) = ∫_q^1 G
    pub g_small: Vec<f64>,
    pub t_indices: Vec<usize>,
    pub support: Vec<usize>,
    pub residual_g1: f64,
    pub residual_min_g: f64,
    pub min_g: f64,
    /// Largest q-distance from a connected run of T to the support of ζ.
    /// Node M counts as a support point.
    pub support_violation: f64,
    pub tol_g: f64,
}

/// Default T-set tolerance 1e−4·(1 + ξ'(1)).
pub fn default_tol_g(m: &Mixture) -> f64 {
    1e-4 * (1.0 + m.xi1(1.0))
}

/// Computes G exactly on the piecewise-linear profile and g by
/// Gauss–Legendre on every cell.
pub fn stationarity_report(op: &OrderParameter, m: &Mixture, tol_g: f64) -> StationarityReport {
    let cells = op.cells();
    let h = op.h();
    let z = op.zhat();
    let gl = GaussLegendre::new(10);

    let mut inv2 = vec![0.0; cells + 1];
    for c in 0..cells {
        inv2[c + 1] = inv2[c] + h / (z[c] * z[c + 1]);
    }
    let g_big: Vec<f64> = (0..=cells).map(|i| m.xi1(i as f64 * h) - inv2[i]).collect();

    let mut g_small = vec![0.0; cells + 1];
    for c in (0..cells).rev() {
        let (a, b) = (z[c], z[c + 1]);
        let k = b - a;
        let inner = gl.integrate(0.0, 1.0, |t| t / (a * (a + k * t)));
        let cell = m.xi((c + 1) as f64 * h) - m.xi(c as f64 * h) - h * inv2[c] - h * h * inner;
        g_small[c] = g_small[c + 1] + cell;
    }

    let min_g = g_small.iter().copied().fold(f64::INFINITY, f64::min);
    let mut t_indices: Vec<usize> = (0..=cells)
        .filter(|&i| g_small[i] <= tol_g || g_small[i] <= min_g + tol_g)
        .collect();
    if t_indices.last() != Some(&cells) {
        t_indices.push(cells);
    }

    let jumps = op.zeta_jumps();
    let jmax = jumps.iter().copied().fold(0.0, f64::max);
    let mut support: Vec<usize> = if jmax > 0.0 {
        (0..cells).filter(|&i| jumps[i] > SUPPORT_REL_TOL * jmax).collect()
    } else {
        Vec::new()
    };
    support.push(cells);

    let support_violation = run_violation(&t_indices, &support, h);

    StationarityReport {
        residual_g1: g_big[cells].abs(),
        residual_min_g: min_g.abs(),
        min_g,
        g_big,
        g_small,
        t_indices,
        support,
        support_violation,
        tol_g,
    }
}

fn run_violation(t: &[usize], support: &[usize], h: f64) -> f64 {
    let mut worst: f64 = 0.0;
    let mut i = 0;
    while i < t.len() {
        let mut j = i;
        while j + 1 < t.len() && t[j + 1] == t[j] + 1 {
            j += 1;
        }
        let (lo, hi) = (t[i], t[j]);
        let hit = support.iter().any(|&s| s >= lo && s <= hi);
        if !hit {
            let d = support
                .iter()
                .map(|&s| if s < lo { lo - s } else { s - hi })
                .min()
                .unwrap_or(0);
            worst = worst.max(d as f64 * h);
        }
        i = j + 1;
    }
    worst
}

/// Length of the run of T ending at q = 1 when T is recomputed with the
/// stricter tolerance `tol`. A run of more than one cell means 1 is not an
/// isolated point of T.
pub fn endpoint_run(report: &StationarityReport, tol: f64) -> f64 {
    let n = report.g_small.len() - 1;
    let mut i = n;
    while i > 0 && report.g_small[i - 1] <= tol {
        i -= 1;
    }
    (n - i) as f64 / n as f64
}
