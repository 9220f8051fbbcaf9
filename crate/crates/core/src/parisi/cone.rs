//! Primal active-set Newton method over concave, nonincreasing node sequences.
//!
//! A feasible point is described by blocks of consecutive cells sharing one
//! slope level (ζ or x). Levels increase strictly from block to block; the
//! jumps between blocks are the free kinks, every other kink is held at zero.
//! Within a face the objective is minimized by Newton steps in a hat basis on
//! the block boundaries, which keeps the reduced Hessian tridiagonal.

use super::functional::ConeObjective;

/// How the node sequence is anchored.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) enum Anchor {
    /// z₀ = L is free, levels are ζ ≥ 0 read from the left.
    Left,
    /// z_M = 0 and the last cell has level 1; levels are x ∈ [0, 1].
    RightPinned,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Pin {
    Free,
    Zero,
    One,
}

#[derive(Debug, Clone)]
struct Block {
    start: usize,
    end: usize,
    level: f64,
    pin: Pin,
}

#[derive(Debug, Clone)]
pub(crate) struct ConeOptions {
    pub tol: f64,
    pub max_iters: usize,
}

#[derive(Debug, Clone)]
pub(crate) struct ConeResult {
    pub z: Vec<f64>,
    pub value: f64,
    pub history: Vec<f64>,
    pub iterations: usize,
    pub residual: f64,
    pub converged: bool,
}

pub(crate) struct ConeSolver<'a, F: ConeObjective> {
    f: &'a F,
    anchor: Anchor,
    cells: usize,
    h: f64,
    offset: f64,
    blocks: Vec<Block>,
}

const ARMIJO: f64 = 1e-4;
/// Newton decrement below which a face counts as solved; f itself is only
/// known to about 1e−16 relative.
const FACE_TOL: f64 = 1e-20;

impl<'a, F: ConeObjective> ConeSolver<'a, F> {
    /// Starts from a constant sequence (Left) or from x ≡ 1 (RightPinned).
    pub fn new(f: &'a F, anchor: Anchor, cells: usize, offset: f64) -> Self {
        let blocks = match anchor {
            Anchor::Left => vec![Block {
                start: 0,
                end: cells,
                level: 0.0,
                pin: Pin::Zero,
            }],
            Anchor::RightPinned => vec![Block {
                start: 0,
                end: cells,
                level: 1.0,
                pin: Pin::One,
            }],
        };
        Self {
            f,
            anchor,
            cells,
            h: 1.0 / cells as f64,
            offset,
            blocks,
        }
    }

    fn levels(&self) -> Vec<f64> {
        let mut lv = vec![0.0; self.cells];
        for b in &self.blocks {
            lv[b.start..b.end].iter_mut().for_each(|v| *v = b.level);
        }
        lv
    }

    fn nodes_from(&self, offset: f64, levels: &[f64]) -> Vec<f64> {
        let mut z = vec![0.0; self.cells + 1];
        match self.anchor {
            Anchor::Left => {
                z[0] = offset;
                for c in 0..self.cells {
                    z[c + 1] = z[c] - self.h * levels[c];
                }
            }
            Anchor::RightPinned => {
                for c in (0..self.cells).rev() {
                    z[c] = z[c + 1] + self.h * levels[c];
                }
            }
        }
        z
    }

    fn nodes(&self) -> Vec<f64> {
        self.nodes_from(self.offset, &self.levels())
    }

    /// Boundary nodes b₀ = 0 < … < b_m = M.
    fn boundaries(&self) -> Vec<usize> {
        let mut b: Vec<usize> = self.blocks.iter().map(|b| b.start).collect();
        b.push(self.cells);
        b
    }

    /// Hat-basis Newton direction restricted to the current face.
    /// Returns (dz, d offset, d level per block).
    fn newton_direction(&self, z: &[f64], g: &[f64], diag: &[f64], off: &[f64]) -> (Vec<f64>, f64, Vec<f64>) {
        let bnd = self.boundaries();
        let nb = bnd.len();
        // Group boundaries tied by pinned blocks; group id or None if fixed at zero.
        let mut group: Vec<Option<usize>> = vec![None; nb];
        let mut ng = 0usize;
        let fixed_right = self.anchor == Anchor::RightPinned;
        for j in 0..nb {
            let tied_left = j > 0 && self.blocks[j - 1].pin != Pin::Free;
            if tied_left {
                group[j] = group[j - 1];
            } else {
                group[j] = Some(ng);
                ng += 1;
            }
        }
        if fixed_right {
            // Everything tied to the last boundary is fixed.
            let last = group[nb - 1];
            for gj in group.iter_mut() {
                if *gj == last {
                    *gj = None;
                }
            }
        }
        // Renumber groups densely in left-to-right order.
        let mut map = vec![usize::MAX; ng];
        let mut k = 0;
        for gj in group.iter_mut() {
            if let Some(id) = *gj {
                if map[id] == usize::MAX {
                    map[id] = k;
                    k += 1;
                }
                *gj = Some(map[id]);
            }
        }
        let ng = k;
        let n = self.cells + 1;
        if ng == 0 {
            return (vec![0.0; n], 0.0, vec![0.0; self.blocks.len()]);
        }

        // Basis vector for each group: (first node, values).
        let mut basis: Vec<(usize, Vec<f64>)> = Vec::with_capacity(ng);
        for gid in 0..ng {
            let members: Vec<usize> = (0..nb).filter(|&j| group[j] == Some(gid)).collect();
            let jl = members[0];
            let jr = *members.last().unwrap();
            let lo = if jl == 0 { 0 } else { bnd[jl - 1] };
            let hi = if jr == nb - 1 { bnd[nb - 1] } else { bnd[jr + 1] };
            let mut vals = vec![0.0; hi - lo + 1];
            for (i, v) in vals.iter_mut().enumerate() {
                let node = lo + i;
                *v = if node < bnd[jl] {
                    (node - lo) as f64 / (bnd[jl] - lo) as f64
                } else if node <= bnd[jr] {
                    1.0
                } else {
                    (hi - node) as f64 / (hi - bnd[jr]) as f64
                };
            }
            basis.push((lo, vals));
        }

        let hmul = |lo: usize, vals: &[f64]| -> (usize, Vec<f64>) {
            let s = lo.saturating_sub(1);
            let e = (lo + vals.len()).min(n - 1);
            let mut out = vec![0.0; e - s + 1];
            for (i, &v) in vals.iter().enumerate() {
                let node = lo + i;
                out[node - s] += diag[node] * v;
                if node > 0 {
                    out[node - 1 - s] += off[node - 1] * v;
                }
                if node + 1 < n {
                    out[node + 1 - s] += off[node] * v;
                }
            }
            (s, out)
        };
        let dot = |(la, va): (usize, &[f64]), (lb, vb): (usize, &[f64])| -> f64 {
            let s = la.max(lb);
            let e = (la + va.len()).min(lb + vb.len());
            (s..e).map(|i| va[i - la] * vb[i - lb]).sum()
        };

        let mut ad = vec![0.0; ng];
        let mut ao = vec![0.0; ng.saturating_sub(1)];
        let mut rhs = vec![0.0; ng];
        for k in 0..ng {
            let (lo, ref vals) = basis[k];
            let (s, hv) = hmul(lo, vals);
            ad[k] = dot((s, &hv), (lo, vals));
            if k + 1 < ng {
                let (lo2, ref v2) = basis[k + 1];
                ao[k] = dot((s, &hv), (lo2, v2));
            }
            rhs[k] = -dot((0, g), (lo, vals));
        }
        let c = solve_tridiagonal(&ad, &ao, &rhs);

        let mut u = vec![0.0; nb];
        for j in 0..nb {
            if let Some(gid) = group[j] {
                u[j] = c[gid];
            }
        }
        let mut dz = vec![0.0; n];
        let mut dlev = vec![0.0; self.blocks.len()];
        for (bi, b) in self.blocks.iter().enumerate() {
            let (ua, ub) = (u[bi], u[bi + 1]);
            let len = (b.end - b.start) as f64;
            for node in b.start..=b.end {
                let t = (node - b.start) as f64 / len;
                dz[node] = ua * (1.0 - t) + ub * t;
            }
            dlev[bi] = if b.pin == Pin::Free { (ua - ub) / (len * self.h) } else { 0.0 };
        }
        let doff = if self.anchor == Anchor::Left { u[0] } else { 0.0 };
        let _ = z;
        (dz, doff, dlev)
    }

    /// Kink values between blocks (index j: jump entering block j) and
    /// their directional change. The first entry is the jump at node 0.
    fn kinks(&self, dlev: &[f64]) -> Vec<(f64, f64)> {
        let mut out = Vec::with_capacity(self.blocks.len());
        for (j, b) in self.blocks.iter().enumerate() {
            let (prev, dprev) = if j == 0 { (0.0, 0.0) } else { (self.blocks[j - 1].level, dlev[j - 1]) };
            out.push((b.level - prev, dlev[j] - dprev));
        }
        out
    }

    /// Derivative of the objective with respect to a unit kink at each node
    /// 0..M−1 (for RightPinned, before the simplex shift).
    fn kink_gradient(&self, g: &[f64]) -> Vec<f64> {
        let m = self.cells;
        let h = self.h;
        let mut out = vec![0.0; m];
        match self.anchor {
            Anchor::Left => {
                // −Σ_{j>n} g_j (q_j − q_n)
                let mut s0 = 0.0;
                let mut s1 = 0.0;
                for n in (0..m).rev() {
                    let j = n + 1;
                    s0 += g[j];
                    s1 += g[j] * (j as f64 * h);
                    out[n] = -(s1 - (n as f64 * h) * s0);
                }
            }
            Anchor::RightPinned => {
                // Σ_j g_j (1 − q_{max(j,n)})
                let mut suffix = vec![0.0; m + 1];
                for j in (0..m).rev() {
                    suffix[j] = suffix[j + 1] + g[j] * (1.0 - j as f64 * h);
                }
                let mut prefix = 0.0;
                for n in 0..m {
                    prefix += g[n];
                    out[n] = (1.0 - n as f64 * h) * prefix + suffix[n + 1];
                }
            }
        }
        out
    }

    fn is_boundary(&self) -> Vec<bool> {
        let mut b = vec![false; self.cells];
        for blk in &self.blocks {
            b[blk.start] = true;
        }
        b
    }

    /// Multipliers of inactive kinks and the projected gradient norm.
    fn multipliers(&self, g: &[f64]) -> (Vec<Option<f64>>, f64) {
        let kg = self.kink_gradient(g);
        let bnd = self.is_boundary();
        let first_zero = self.blocks[0].pin == Pin::Zero;
        let active = |n: usize| bnd[n] && !(n == 0 && first_zero);
        let mut norm2 = 0.0;
        let shift = match self.anchor {
            Anchor::Left => {
                let dl: f64 = g.iter().sum();
                norm2 += dl * dl;
                0.0
            }
            Anchor::RightPinned => {
                let act: Vec<f64> = (0..self.cells).filter(|&n| active(n)).map(|n| kg[n]).collect();
                -act.iter().sum::<f64>() / act.len() as f64
            }
        };
        let mut mu = vec![None; self.cells];
        for n in 0..self.cells {
            let v = kg[n] + shift;
            if active(n) {
                norm2 += v * v;
            } else {
                mu[n] = Some(v);
                if v < 0.0 {
                    norm2 += v * v;
                }
            }
        }
        (mu, norm2.sqrt())
    }

    fn release(&mut self, node: usize) {
        let bi = self.blocks.iter().position(|b| b.start <= node && node < b.end).unwrap();
        let b = self.blocks[bi].clone();
        if node == b.start {
            // Only the zero-pinned first block has an inactive kink at its start.
            self.blocks[bi].pin = Pin::Free;
            return;
        }
        let (lp, rp) = match b.pin {
            Pin::Free => (Pin::Free, Pin::Free),
            Pin::Zero => (Pin::Zero, Pin::Free),
            Pin::One => (Pin::Free, Pin::One),
        };
        self.blocks[bi] = Block {
            start: b.start,
            end: node,
            level: b.level,
            pin: lp,
        };
        self.blocks.insert(
            bi + 1,
            Block {
                start: node,
                end: b.end,
                level: b.level,
                pin: rp,
            },
        );
    }

    /// Merges blocks whose entering kink vanished.
    fn merge_blocked(&mut self, hit: &[usize]) {
        for &j in hit.iter().rev() {
            if j == 0 {
                self.blocks[0].level = 0.0;
                self.blocks[0].pin = Pin::Zero;
                continue;
            }
            let right = self.blocks.remove(j);
            let left = &mut self.blocks[j - 1];
            left.end = right.end;
            left.pin = match (left.pin, right.pin) {
                (Pin::Free, p) | (p, Pin::Free) => p,
                (p, _) => p,
            };
            left.level = match left.pin {
                Pin::Zero => 0.0,
                Pin::One => 1.0,
                Pin::Free => 0.5 * (left.level + right.level),
            };
        }
    }

    pub fn solve(mut self, opts: &ConeOptions) -> ConeResult {
        let n = self.cells + 1;
        let mut g = vec![0.0; n];
        let mut diag = vec![0.0; n];
        let mut off = vec![0.0; n - 1];
        let mut z = self.nodes();
        let mut fval = self.f.value(&z).expect("starting point must be feasible");
        let mut history = vec![fval];
        let mut iters = 0usize;
        let mut residual = f64::INFINITY;

        while iters < opts.max_iters {
            self.f.gradient(&z, &mut g);
            self.f.hessian(&z, &mut diag, &mut off);
            let (dz, doff, dlev) = self.newton_direction(&z, &g, &diag, &off);
            let slope: f64 = g.iter().zip(&dz).map(|(a, b)| a * b).sum();
            let decrement = -slope;

            if decrement <= FACE_TOL * (1.0 + fval.abs()) || slope >= 0.0 {
                let (mu, pg) = self.multipliers(&g);
                residual = pg;
                let worst = mu
                    .iter()
                    .enumerate()
                    .filter_map(|(i, m)| m.map(|v| (i, v)))
                    .min_by(|a, b| a.1.total_cmp(&b.1));
                match worst {
                    Some((node, v)) if v < -opts.tol => {
                        self.release(node);
                        iters += 1;
                        continue;
                    }
                    _ => {
                        return ConeResult {
                            z,
                            value: fval,
                            history,
                            iterations: iters,
                            residual,
                            converged: true,
                        }
                    }
                }
            }

            let kinks = self.kinks(&dlev);
            let mut amax = f64::INFINITY;
            for &(k, dk) in &kinks {
                if dk < 0.0 {
                    amax = amax.min(k / -dk);
                }
            }
            let levels = self.levels();
            let trial = |alpha: f64, me: &Self| -> Vec<f64> {
                let lv: Vec<f64> = me
                    .blocks
                    .iter()
                    .zip(&dlev)
                    .flat_map(|(b, d)| std::iter::repeat_n(b.level + alpha * d, b.end - b.start))
                    .collect();
                let _ = &levels;
                me.nodes_from(me.offset + alpha * doff, &lv)
            };
            let mut alpha = amax.min(1.0);
            let mut accepted = None;
            for _ in 0..80 {
                let zt = trial(alpha, &self);
                if let Some(ft) = self.f.value(&zt) {
                    let decreases = ft < fval || (alpha == amax && ft <= fval);
                    if decreases && ft <= fval + ARMIJO * alpha * slope {
                        accepted = Some((zt, ft));
                        break;
                    }
                }
                alpha *= 0.5;
            }
            iters += 1;
            let Some((_, ft)) = accepted else {
                // No progress possible along the Newton direction: treat the face as solved.
                let (mu, pg) = self.multipliers(&g);
                residual = pg;
                let worst = mu
                    .iter()
                    .enumerate()
                    .filter_map(|(i, m)| m.map(|v| (i, v)))
                    .min_by(|a, b| a.1.total_cmp(&b.1));
                if let Some((node, v)) = worst {
                    if v < -opts.tol {
                        self.release(node);
                        continue;
                    }
                }
                return ConeResult {
                    z,
                    value: fval,
                    history,
                    iterations: iters,
                    residual,
                    converged: true,
                };
            };
            let blocked = alpha == amax;
            for (b, d) in self.blocks.iter_mut().zip(&dlev) {
                b.level += alpha * d;
            }
            self.offset += alpha * doff;
            if blocked {
                let hit: Vec<usize> = kinks
                    .iter()
                    .enumerate()
                    .filter(|(_, &(k, dk))| dk < 0.0 && k + alpha * dk <= 1e-14 * (1.0 + k.abs()))
                    .map(|(j, _)| j)
                    .collect();
                self.merge_blocked(&hit);
            }
            z = self.nodes();
            fval = self.f.value(&z).unwrap_or(ft);
            history.push(fval);
        }
        ConeResult {
            z,
            value: fval,
            history,
            iterations: iters,
            residual,
            converged: false,
        }
    }
}

/// Thomas algorithm for a symmetric tridiagonal system.
fn solve_tridiagonal(d: &[f64], o: &[f64], r: &[f64]) -> Vec<f64> {
    let n = d.len();
    let mut c = vec![0.0; n];
    let mut x = vec![0.0; n];
    let mut den = d[0];
    x[0] = r[0] / den;
    for i in 1..n {
        c[i - 1] = o[i - 1] / den;
        den = d[i] - o[i - 1] * c[i - 1];
        x[i] = (r[i] - o[i - 1] * x[i - 1]) / den;
    }
    for i in (0..n - 1).rev() {
        x[i] -= c[i] * x[i + 1];
    }
    x
}
