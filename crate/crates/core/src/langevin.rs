//! Spherical Langevin dynamics
//! dx = (β∇_sp H(x) − ((N−1)/N) x) dt + P⊥_x √2 dB,
//! integrated by Euler–Maruyama with renormalization to radius √N.

use nalgebra::DVector;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::hamiltonian::{HamiltonianInstance, SpherePoint};

/// Bound on dt·(β‖∇H‖/√N + 1).
pub const STABILITY_LIMIT: f64 = 0.1;

#[derive(Debug, Clone, Serialize)]
pub struct LangevinConfig {
    pub beta: f64,
    pub dt: f64,
    pub horizon: f64,
    pub seed: u64,
    /// Times at which R(x₀, x_t) and H/N are recorded; rounded to whole steps.
    pub record_times: Vec<f64>,
}

impl LangevinConfig {
    /// Default step 1e−3·min(1, 1/β) and `records` log-spaced record times.
    pub fn new(beta: f64, horizon: f64, seed: u64, records: usize) -> Self {
        let dt = default_dt(beta);
        Self {
            beta,
            dt,
            horizon,
            seed,
            record_times: log_times(dt, horizon, records),
        }
    }

    fn validate(&self) -> Result<()> {
        if !(self.beta >= 0.0) || !(self.dt > 0.0) || !(self.horizon > 0.0) {
            return Err(Error::Domain(format!(
                "need β ≥ 0, dt > 0 and T > 0 (got β = {}, dt = {}, T = {})",
                self.beta, self.dt, self.horizon
            )));
        }
        if self.record_times.iter().any(|&t| !(0.0..=self.horizon).contains(&t)) {
            return Err(Error::Domain("record times must lie in [0, T]".into()));
        }
        Ok(())
    }
}

pub fn default_dt(beta: f64) -> f64 {
    1e-3 * (1.0f64).min(1.0 / beta)
}

/// `k` times spaced geometrically from dt to T, always ending at T.
pub fn log_times(dt: f64, horizon: f64, k: usize) -> Vec<f64> {
    if k <= 1 {
        return vec![horizon];
    }
    let ratio = (horizon / dt).ln() / (k - 1) as f64;
    (0..k).map(|i| dt * (ratio * i as f64).exp()).collect()
}

#[derive(Debug, Clone, Serialize)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub overlap: Vec<f64>,
    pub energy_per_n: Vec<f64>,
    /// Smallest R(x₀, x_t) over every step, not only record times.
    pub min_overlap: f64,
    /// Largest |‖x_t‖ − √N| after renormalization.
    pub max_norm_error: f64,
    pub steps: usize,
}

fn record_steps(cfg: &LangevinConfig) -> Vec<usize> {
    cfg.record_times.iter().map(|t| (t / cfg.dt).round() as usize).collect()
}

/// One path; `path` selects the noise stream.
pub fn integrate(h: &HamiltonianInstance, x0: &SpherePoint, cfg: &LangevinConfig, path: u64) -> Result<Trajectory> {
    cfg.validate()?;
    if x0.dim() != h.n() {
        return Err(Error::DimensionMismatch {
            expected: h.n(),
            got: x0.dim(),
        });
    }
    let n = h.n();
    let nf = n as f64;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    rng.set_stream(path);
    let total = (cfg.horizon / cfg.dt).round() as usize;
    let marks = record_steps(cfg);
    let start = x0.coords().clone();
    let mut x = start.clone();
    let shrink = (nf - 1.0) / nf;
    let noise_scale = (2.0 * cfg.dt).sqrt();
    let mut out = Trajectory {
        times: Vec::with_capacity(marks.len()),
        overlap: Vec::with_capacity(marks.len()),
        energy_per_n: Vec::with_capacity(marks.len()),
        min_overlap: 1.0,
        max_norm_error: 0.0,
        steps: total,
    };
    let mut next = 0;
    let mut value = None;
    for step in 0..=total {
        while next < marks.len() && marks[next] == step {
            let e = value.unwrap_or_else(|| h.value_at(x.as_slice()));
            out.times.push(step as f64 * cfg.dt);
            out.overlap.push(start.dot(&x) / nf);
            out.energy_per_n.push(e / nf);
            next += 1;
        }
        if step == total {
            break;
        }
        let mut drift = &x * (-shrink);
        value = None;
        if cfg.beta > 0.0 {
            let (v, grad) = h.value_gradient_at(x.as_slice());
            value = Some(v);
            let gnorm = grad.norm() / nf.sqrt();
            if cfg.dt * (cfg.beta * gnorm + 1.0) > STABILITY_LIMIT {
                return Err(Error::Unstable(format!(
                    "dt·(β‖∇H‖/√N + 1) = {:.3} exceeds {STABILITY_LIMIT} at t = {:.4}; use dt ≤ {:.3e}",
                    cfg.dt * (cfg.beta * gnorm + 1.0),
                    step as f64 * cfg.dt,
                    STABILITY_LIMIT / (cfg.beta * gnorm + 1.0)
                )));
            }
            let radial = x.dot(&grad) / nf;
            drift += (grad - &x * radial) * cfg.beta;
        }
        let xi = DVector::from_fn(n, |_, _| rng.sample::<f64, _>(StandardNormal));
        let xi_perp = &xi - &x * (x.dot(&xi) / nf);
        x += drift * cfg.dt + xi_perp * noise_scale;
        let norm = x.norm();
        x *= nf.sqrt() / norm;
        out.max_norm_error = out.max_norm_error.max((x.norm() - nf.sqrt()).abs());
        out.min_overlap = out.min_overlap.min(start.dot(&x) / nf);
    }
    Ok(out)
}

#[derive(Debug, Clone, Serialize)]
pub struct Ensemble {
    pub times: Vec<f64>,
    pub mean_overlap: Vec<f64>,
    pub stderr_overlap: Vec<f64>,
    pub mean_energy_per_n: Vec<f64>,
    pub min_overlap: f64,
    pub max_norm_error: f64,
    pub paths: usize,
}

/// Independent paths from a common start, path k on stream k.
pub fn integrate_paths(h: &HamiltonianInstance, x0: &SpherePoint, cfg: &LangevinConfig, paths: usize) -> Result<Ensemble> {
    if paths == 0 {
        return Err(Error::Precondition("at least one path is required".into()));
    }
    let runs: Vec<Trajectory> = (0..paths as u64)
        .into_par_iter()
        .map(|k| integrate(h, x0, cfg, k))
        .collect::<Result<_>>()?;
    let k = runs[0].times.len();
    let p = paths as f64;
    let mean = |f: &dyn Fn(&Trajectory) -> f64| runs.iter().map(f).sum::<f64>() / p;
    let mut mean_overlap = Vec::with_capacity(k);
    let mut stderr_overlap = Vec::with_capacity(k);
    let mut mean_energy_per_n = Vec::with_capacity(k);
    for i in 0..k {
        let m = mean(&|r| r.overlap[i]);
        let var = if paths > 1 {
            runs.iter().map(|r| (r.overlap[i] - m).powi(2)).sum::<f64>() / (p - 1.0)
        } else {
            0.0
        };
        mean_overlap.push(m);
        stderr_overlap.push((var / p).sqrt());
        mean_energy_per_n.push(mean(&|r| r.energy_per_n[i]));
    }
    Ok(Ensemble {
        times: runs[0].times.clone(),
        mean_overlap,
        stderr_overlap,
        mean_energy_per_n,
        min_overlap: runs.iter().map(|r| r.min_overlap).fold(1.0, f64::min),
        max_norm_error: runs.iter().map(|r| r.max_norm_error).fold(0.0, f64::max),
        paths,
    })
}
