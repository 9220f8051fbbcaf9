//! Command runners behind the `pspin` binary. Every command writes its
//! artifacts under the output directory and returns the claims it checked.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use serde::Serialize;
use serde_json::json;

use crate::config::{ExperimentConfig, LangevinStart};
use crate::error::{Error, Result};
use crate::hamiltonian::{sample, SpherePoint};
use crate::landscape::{
    ascend_restarts, bulk_edge_check, cluster_level_set, constrained_pair_search, constrained_triple_search,
    default_delta, equidistant_rank_certificate, reference_matrix, regular_simplex, sorted_eigs, AscentOptions,
    LandscapeRecord, PredictionReport, SearchOptions,
};
use crate::langevin::{integrate_paths, log_times, LangevinConfig};
use crate::parisi::{minimize_cs_positive_temp, minimize_q, CsOptions, SolveOptions, ZeroTempSolution};
use crate::replica_bounds::{
    matrix_identities_check, richardson_slope, three_replica_bound_with, three_replica_slope_target,
    two_replica_bound_with, two_replica_slope_target, BoundOptions,
};

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Command {
    Solve,
    Predict,
    SampleLandscape,
    ReplicaBound,
    Langevin,
    Report,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::Solve => "solve",
            Command::Predict => "predict",
            Command::SampleLandscape => "sample-landscape",
            Command::ReplicaBound => "replica-bound",
            Command::Langevin => "langevin",
            Command::Report => "report",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Verdict {
    Pass,
    Fail,
    NotReached,
}

#[derive(Debug, Clone, Serialize)]
pub struct Claim {
    pub id: &'static str,
    pub statement: &'static str,
    pub verdict: Verdict,
    pub detail: serde_json::Value,
}

fn claim(id: &'static str, statement: &'static str, ok: bool, detail: serde_json::Value) -> Claim {
    Claim {
        id,
        statement,
        verdict: if ok { Verdict::Pass } else { Verdict::Fail },
        detail,
    }
}

#[derive(Debug, Clone)]
pub struct RunOptions {
    pub out: PathBuf,
    pub strict: bool,
}

#[derive(Debug, Clone)]
pub struct Outcome {
    pub claims: Vec<Claim>,
    pub artifacts: Vec<PathBuf>,
    /// 0, or 3 when `strict` is set and some claim failed.
    pub exit_code: i32,
}

/// Exit code for an error: 1 for configuration problems, 2 otherwise.
pub fn exit_code_for(e: &Error) -> i32 {
    match e {
        Error::Config(_) | Error::InvalidMixture(_) => 1,
        _ => 2,
    }
}

struct Sink {
    dir: PathBuf,
    artifacts: Vec<PathBuf>,
}

impl Sink {
    fn new(dir: &Path) -> Result<Self> {
        fs::create_dir_all(dir)?;
        Ok(Self {
            dir: dir.to_path_buf(),
            artifacts: Vec::new(),
        })
    }

    fn json<T: Serialize>(&mut self, name: &str, value: &T) -> Result<()> {
        let path = self.dir.join(name);
        let body = json!({ "version": VERSION, "data": value });
        let text = serde_json::to_string_pretty(&body).map_err(|e| Error::Dump(e.to_string()))?;
        fs::write(&path, text + "\n")?;
        self.artifacts.push(path);
        Ok(())
    }

    /// CSV preceded by a `# pspin <version>` stamp line.
    fn csv(&mut self, name: &str, header: &[&str], rows: &[Vec<String>]) -> Result<()> {
        let path = self.dir.join(name);
        let mut file = fs::File::create(&path)?;
        writeln!(file, "# pspin {VERSION}")?;
        let mut w = csv::Writer::from_writer(file);
        let to_err = |e: csv::Error| Error::Dump(e.to_string());
        w.write_record(header).map_err(to_err)?;
        for r in rows {
            w.write_record(r).map_err(to_err)?;
        }
        w.flush()?;
        self.artifacts.push(path);
        Ok(())
    }
}

fn solve_options(cfg: &ExperimentConfig) -> SolveOptions {
    SolveOptions {
        cells: cfg.solver.cells,
        tol: cfg.solver.tol,
        max_iters: cfg.solver.max_iters,
    }
}

/// Runs one command.
pub fn run(cmd: Command, cfg: &ExperimentConfig, opts: &RunOptions) -> Result<Outcome> {
    let mut sink = Sink::new(&opts.out)?;
    let claims = match cmd {
        Command::Solve => run_solve(cfg, &mut sink)?.1,
        Command::Predict => run_predict(cfg, &mut sink)?,
        Command::SampleLandscape => {
            let sol = minimize_q(&cfg.mixture, &solve_options(cfg))?;
            run_landscape(cfg, &sol, &mut sink)?
        }
        Command::ReplicaBound => {
            let sol = minimize_q(&cfg.mixture, &solve_options(cfg))?;
            run_bounds(cfg, &sol, &mut sink)?
        }
        Command::Langevin => run_langevin(cfg, &mut sink)?,
        Command::Report => run_report(cfg, &mut sink)?,
    };
    let failed = claims.iter().any(|c| c.verdict == Verdict::Fail);
    Ok(Outcome {
        exit_code: if opts.strict && failed { 3 } else { 0 },
        claims,
        artifacts: sink.artifacts,
    })
}

fn run_solve(cfg: &ExperimentConfig, sink: &mut Sink) -> Result<(ZeroTempSolution, Vec<Claim>)> {
    let m = &cfg.mixture;
    let sol = minimize_q(m, &solve_options(cfg))?;
    sink.json(
        "solve.json",
        &json!({
            "mixture": m,
            "options": solve_options(cfg),
            "gs": sol.prediction.gs,
            "L": sol.prediction.l,
            "zhat1": sol.prediction.zhat1,
            "r": sol.prediction.r,
            "lambda_plus": sol.prediction.lambda_plus,
            "lambda_minus": sol.prediction.lambda_minus,
            "full_rsb_endpoint": sol.prediction.full_rsb_endpoint,
            "rsb_gap": sol.prediction.rsb_gap,
            "e_inf_minus": sol.prediction.e_inf_minus,
            "e_inf_plus": sol.prediction.e_inf_plus,
            "functional": sol.q,
            "gs_derivative": sol.gs_derivative,
            "stationarity": {
                "residual_g1": sol.stationarity.residual_g1,
                "residual_min_g": sol.stationarity.residual_min_g,
                "support_violation": sol.stationarity.support_violation,
                "tol_g": sol.stationarity.tol_g,
            },
            "box": sol.box_bounds,
            "within_box": sol.within_box,
            "iterations": sol.iterations,
            "residual": sol.residual,
            "grid": sol.op.grid(),
            "zhat": sol.op.zhat(),
        }),
    )?;
    let grid = sol.op.grid();
    let zeta = sol.op.zeta_nodes();
    let st = &sol.stationarity;
    let rows: Vec<Vec<String>> = (0..grid.len())
        .map(|i| {
            vec![
                grid[i].to_string(),
                sol.op.zhat()[i].to_string(),
                zeta[i].to_string(),
                st.g_big[i].to_string(),
                st.g_small[i].to_string(),
            ]
        })
        .collect();
    sink.csv("order_parameter.csv", &["q", "zhat", "zeta", "G", "g"], &rows)?;
    let claims = solver_claims(&sol);
    Ok((sol, claims))
}

fn solver_claims(sol: &ZeroTempSolution) -> Vec<Claim> {
    let st = &sol.stationarity;
    let stat = st.residual_g1.max(st.residual_min_g).max(st.support_violation);
    let forms = (sol.q.form_a - sol.q.form_b).abs();
    vec![
        claim(
            "stationarity",
            "stationarity residuals at the minimizer are at most 1e-3",
            stat <= 1e-3,
            json!({ "max_residual": stat }),
        ),
        claim(
            "functional_forms",
            "both forms of the zero-temperature functional agree to 1e-9",
            forms <= 1e-9,
            json!({ "difference": forms }),
        ),
    ]
}

fn run_predict(cfg: &ExperimentConfig, sink: &mut Sink) -> Result<Vec<Claim>> {
    let m = &cfg.mixture;
    let sol = minimize_q(m, &solve_options(cfg))?;
    let p = &sol.prediction;
    sink.json(
        "predict.json",
        &json!({
            "mixture": m,
            "predicates": m.predicates(),
            "prediction": p,
            "lambda_factored": p.lambda_factored(m),
            "box": sol.box_bounds,
        }),
    )?;
    let mut claims = Vec::new();
    if let Some(minus) = p.e_inf_minus {
        claims.push(claim(
            "gs_above_e_inf_minus",
            "GS is at least E_inf^- (up to 1e-3)",
            p.gs >= minus - 1e-3,
            json!({ "gs": p.gs, "e_inf_minus": minus }),
        ));
    }
    Ok(claims)
}

fn ascent_options(cfg: &ExperimentConfig) -> AscentOptions {
    AscentOptions {
        tol_grad: cfg.landscape.tol_grad,
        max_steps: cfg.landscape.max_steps,
        ..AscentOptions::default()
    }
}

fn run_landscape(cfg: &ExperimentConfig, sol: &ZeroTempSolution, sink: &mut Sink) -> Result<Vec<Claim>> {
    let m = &cfg.mixture;
    let lc = &cfg.landscape;
    let pred = &sol.prediction;
    let opts = ascent_options(cfg);
    let mut all: Vec<(u64, usize, LandscapeRecord)> = Vec::new();
    let mut clusters = Vec::new();
    let mut searches = Vec::new();
    for inst in 0..lc.instances as u64 {
        let seed = cfg.seed.wrapping_add(inst);
        let h = sample(lc.n, m, seed)?;
        let recs = ascend_restarts(&h, lc.restarts, seed, &opts)?;
        if recs.len() >= 2 {
            let delta = lc.delta.unwrap_or_else(|| default_delta(&recs, pred.gs));
            clusters.push(json!({
                "seed": seed,
                "report": cluster_level_set(&recs, delta, lc.cluster_threshold, m.is_even())?,
            }));
        }
        for &eps in &lc.search_eps {
            let so = SearchOptions {
                restarts: lc.search_restarts,
                seed,
                ascent: AscentOptions { tol_grad: 1e-6, ..opts },
                ..SearchOptions::default()
            };
            let pair = constrained_pair_search(&h, eps, &so)?;
            let triple = if eps < 0.25 { Some(constrained_triple_search(&h, eps, &so)?) } else { None };
            let bounds = m.is_even().then(|| {
                let b2 = two_replica_bound_with(m, &sol.op, eps, BoundOptions::default()).ok().map(|b| b.value / 2.0);
                let b3 = if eps < 0.2 {
                    three_replica_bound_with(m, &sol.op, eps, BoundOptions::default(), true).ok().map(|b| b.value / 2.0)
                } else {
                    None
                };
                (b2, b3)
            });
            searches.push(json!({
                "seed": seed,
                "eps": eps,
                "pair": pair,
                "triple": triple,
                "pair_bound_half": bounds.and_then(|b| b.0),
                "triple_bound_half": bounds.and_then(|b| b.1),
            }));
        }
        all.extend(recs.into_iter().enumerate().map(|(k, r)| (seed, k, r)));
    }
    let recs: Vec<LandscapeRecord> = all.iter().map(|(_, _, r)| r.clone()).collect();
    let delta = lc.delta.unwrap_or_else(|| default_delta(&recs, pred.gs));
    let n = lc.n;
    let kk = ((delta * n as f64).ceil() as usize).clamp(1, n - 1);
    let rows: Vec<Vec<String>> = all
        .iter()
        .map(|(seed, k, r)| {
            vec![
                seed.to_string(),
                k.to_string(),
                r.energy_per_n.to_string(),
                r.radial.to_string(),
                r.lambda_max().to_string(),
                r.lambda(kk).to_string(),
                r.lambda_min().to_string(),
                r.converged.to_string(),
            ]
        })
        .collect();
    sink.csv(
        "landscape.csv",
        &["seed", "restart", "energy_per_N", "radial", "lambda_1", "lambda_k", "lambda_min", "converged"],
        &rows,
    )?;
    let check = crate::landscape::prediction_check(&recs, pred, delta, m.is_even());
    let converged: Vec<&LandscapeRecord> = recs.iter().filter(|r| r.converged).collect();
    let edges: Vec<_> = converged.iter().map(|r| bulk_edge_check(r, m, lc.k_frac, lc.k0)).collect();
    let max_edge = edges.iter().map(|e| e.relative_quantile_gap()).fold(0.0, f64::max);
    let max_lambda1 = converged.iter().map(|r| r.lambda_max()).fold(f64::NEG_INFINITY, f64::max);
    let best = recs.iter().map(|r| r.energy_per_n).fold(f64::NEG_INFINITY, f64::max);
    sink.json(
        "landscape.json",
        &json!({
            "mixture": m,
            "n": n,
            "prediction": pred,
            "best_energy_per_n": best,
            "gap_to_gs": pred.gs - best,
            "delta": delta,
            "prediction_check": check,
            "max_relative_edge_gap": max_edge,
            "clusters": clusters,
            "searches": searches,
        }),
    )?;

    let mut claims = Vec::new();
    if !converged.is_empty() {
        claims.push(claim(
            "second_order",
            "every converged record has lambda_1 of the spherical Hessian at most tol_eig",
            max_lambda1 <= lc.tol_eig,
            json!({ "max_lambda_1": max_lambda1, "tol_eig": lc.tol_eig }),
        ));
        claims.push(claim(
            "bulk_edge",
            "bulk edges at converged records match the shifted semicircle within 7% of its radius",
            max_edge <= 0.07,
            json!({ "max_relative_gap": max_edge }),
        ));
    }
    match &check {
        PredictionReport::NoApproximateGroundStates { best_energy_gap, .. } => claims.push(Claim {
            id: "radial_derivative",
            statement: "approximate ground states have radial derivative r(xi)",
            verdict: Verdict::NotReached,
            detail: json!({ "best_energy_gap": best_energy_gap }),
        }),
        PredictionReport::Checked { max_radial_gap, .. } => claims.push(claim(
            "radial_derivative",
            "approximate ground states have radial derivative r(xi) within 0.15",
            *max_radial_gap <= 0.15,
            json!({ "max_radial_gap": max_radial_gap, "delta": delta }),
        )),
    }
    for s in &searches {
        if let (Some(b), Some(v)) = (s["pair_bound_half"].as_f64(), s["pair"]["value_per_n"].as_f64()) {
            claims.push(claim(
                "pair_search_below_bound",
                "empirical GS_2,eps stays below half the two-replica bound plus 0.05",
                v <= b + 0.05,
                json!({ "eps": s["eps"], "value": v, "bound_half": b }),
            ));
        }
        if let (Some(b), Some(v)) = (s["triple_bound_half"].as_f64(), s["triple"]["value_per_n"].as_f64()) {
            claims.push(claim(
                "triple_search_below_bound",
                "empirical GS_3,eps stays below half the three-replica bound plus 0.05",
                v <= b + 0.05,
                json!({ "eps": s["eps"], "value": v, "bound_half": b }),
            ));
        }
    }
    Ok(claims)
}

fn run_bounds(cfg: &ExperimentConfig, sol: &ZeroTempSolution, sink: &mut Sink) -> Result<Vec<Claim>> {
    let m = &cfg.mixture;
    if !m.is_even() {
        return Err(Error::Precondition("replica bounds require an even mixture".into()));
    }
    let bo = BoundOptions {
        points: cfg.bounds.points,
        subdivide: 1,
    };
    let eps = &cfg.bounds.eps;
    if eps.is_empty() {
        return Err(Error::Config("bounds.eps must list at least one value".into()));
    }
    let gs = sol.prediction.gs;
    let z1 = sol.op.zhat1();
    let t2 = two_replica_slope_target(m, z1);
    let t3 = three_replica_slope_target(m, z1);
    let mut b2 = Vec::new();
    let mut b3 = Vec::new();
    for &e in eps {
        b2.push(two_replica_bound_with(m, &sol.op, e, bo)?.value);
        b3.push(three_replica_bound_with(m, &sol.op, e, bo, true)?.value);
    }
    let rows: Vec<Vec<String>> = eps
        .iter()
        .enumerate()
        .map(|(i, e)| {
            let s2 = (b2[i] - 4.0 * gs) / e;
            let s3 = (b3[i] - 2.0 * gs) / e;
            vec![
                e.to_string(),
                b2[i].to_string(),
                b3[i].to_string(),
                s2.to_string(),
                s3.to_string(),
                t2.to_string(),
                t3.to_string(),
                (s2 - t2).to_string(),
                (s3 - t3).to_string(),
            ]
        })
        .collect();
    sink.csv(
        "replica_bound.csv",
        &["eps", "bound2", "bound3", "slope2", "slope3", "target2", "target3", "residual2", "residual3"],
        &rows,
    )?;
    let r2 = richardson_slope(eps, &b2, 4.0 * gs);
    let r3 = richardson_slope(eps, &b3, 2.0 * gs);
    let ids = matrix_identities_check(cfg.seed);
    sink.json(
        "replica_bound.json",
        &json!({
            "mixture": m,
            "gs": gs,
            "zhat1": z1,
            "two_replica": r2,
            "three_replica": r3,
            "target2": t2,
            "target3": t3,
            "identities": ids,
        }),
    )?;
    let rel = |s: f64, t: f64| if t.abs() < 1e-6 { s.abs() <= 1e-3 } else { ((s - t) / t).abs() <= 0.02 };
    Ok(vec![
        claim(
            "two_replica_slope",
            "two-replica slope matches -zhat(1)(sqrt(xi''(1)) - 1/zhat(1))^2 within 2%",
            rel(r2.extrapolated, t2),
            json!({ "slope": r2.extrapolated, "target": t2 }),
        ),
        claim(
            "three_replica_slope",
            "three-replica slope matches 4 zhat(1)(sqrt(xi''(1)) + 1/zhat(1))^2 within 2%",
            rel(r3.extrapolated, t3),
            json!({ "slope": r3.extrapolated, "target": t3 }),
        ),
        claim(
            "matrix_identities",
            "both matrix inverse identities hold to 1e-10",
            ids.two_inverse_residual.max(ids.three_trace_residual) <= 1e-10,
            json!(ids),
        ),
    ])
}

fn run_langevin(cfg: &ExperimentConfig, sink: &mut Sink) -> Result<Vec<Claim>> {
    let m = &cfg.mixture;
    let lc = &cfg.langevin;
    let h = sample(lc.n, m, cfg.seed)?;
    let x0 = match lc.start {
        LangevinStart::Random => {
            use rand::SeedableRng;
            SpherePoint::random(lc.n, &mut rand_chacha::ChaCha8Rng::seed_from_u64(cfg.seed))
        }
        LangevinStart::Ascent => {
            let recs = ascend_restarts(&h, lc.start_restarts.max(1), cfg.seed, &ascent_options(cfg))?;
            recs.into_iter()
                .max_by(|a, b| a.energy_per_n.total_cmp(&b.energy_per_n))
                .expect("at least one restart")
                .sigma
        }
    };
    let dt = lc.dt.unwrap_or_else(|| crate::langevin::default_dt(lc.beta));
    let lcfg = LangevinConfig {
        beta: lc.beta,
        dt,
        horizon: lc.horizon,
        seed: cfg.seed,
        record_times: log_times(dt, lc.horizon, lc.records),
    };
    let ens = integrate_paths(&h, &x0, &lcfg, lc.paths)?;
    let rows: Vec<Vec<String>> = (0..ens.times.len())
        .map(|i| {
            vec![
                ens.times[i].to_string(),
                ens.mean_overlap[i].to_string(),
                ens.stderr_overlap[i].to_string(),
                ens.mean_energy_per_n[i].to_string(),
            ]
        })
        .collect();
    sink.csv("langevin.csv", &["t", "mean_R", "stderr_R", "mean_energy"], &rows)?;
    sink.json(
        "langevin.json",
        &json!({
            "mixture": m,
            "n": lc.n,
            "beta": lc.beta,
            "dt": dt,
            "horizon": lc.horizon,
            "paths": lc.paths,
            "start_energy_per_n": h.value_at(x0.coords().as_slice()) / lc.n as f64,
            "min_overlap": ens.min_overlap,
            "max_norm_error": ens.max_norm_error,
        }),
    )?;
    let mut claims = vec![claim(
        "sphere_constraint",
        "every step stays on the sphere to 1e-12",
        ens.max_norm_error <= 1e-12 * (lc.n as f64).sqrt(),
        json!({ "max_norm_error": ens.max_norm_error }),
    )];
    if lc.start == LangevinStart::Ascent && lc.beta >= 10.0 {
        claims.push(claim(
            "langevin_plateau",
            "from a deep start at large beta the overlap with the start stays at least 0.8",
            ens.min_overlap >= 0.8,
            json!({ "min_overlap": ens.min_overlap }),
        ));
    }
    Ok(claims)
}

/// Everything at once, cross-joined into a single verdict table.
fn run_report(cfg: &ExperimentConfig, sink: &mut Sink) -> Result<Vec<Claim>> {
    let m = &cfg.mixture;
    let (sol, mut claims) = run_solve(cfg, sink)?;
    claims.extend(run_predict(cfg, sink)?);

    // Envelope identity through a centered difference over the dilation family.
    let h = 1e-3;
    let opts = solve_options(cfg);
    let up = minimize_q(&m.dilate(1.0 + h)?, &opts)?.prediction.gs;
    let down = minimize_q(&m.dilate(1.0 - h)?, &opts)?.prediction.gs;
    let fd = (up - down) / (2.0 * h);
    let r = sol.prediction.r;
    claims.push(claim(
        "envelope_identity",
        "d/ds GS(xi_s) at s = 1 matches the quadrature formula and r(xi) within 1e-2 (1 + r)",
        (fd - sol.gs_derivative).abs() <= 1e-2 * (1.0 + r) && (fd - r).abs() <= 1e-2 * (1.0 + r),
        json!({ "finite_difference": fd, "quadrature": sol.gs_derivative, "r": r }),
    ));

    // Positive temperature: F(β)/β approaches GS from below.
    let cs = CsOptions {
        cells: cfg.positive.cells,
        ..CsOptions::default()
    };
    let mut gaps = Vec::new();
    for &beta in &cfg.positive.betas {
        let s = minimize_cs_positive_temp(m, beta, &cs)?;
        gaps.push((beta, sol.prediction.gs - s.f_over_beta));
    }
    let positive = gaps.iter().all(|g| g.1 > 0.0);
    let decreasing = gaps.windows(2).all(|w| w[1].1 < w[0].1);
    claims.push(claim(
        "positive_temperature_trend",
        "GS - F(beta)/beta is positive and decreasing in beta",
        positive && decreasing,
        json!({ "gaps": gaps }),
    ));

    if m.is_even() {
        claims.extend(run_bounds(cfg, &sol, sink)?);
    }
    claims.extend(run_landscape(cfg, &sol, sink)?);
    claims.extend(run_langevin(cfg, sink)?);

    // Rank certificate on the reference matrices and the simplex control.
    let mut rank_ok = true;
    let mut rank_detail = Vec::new();
    for d in [2usize, 3, 5] {
        let e = sorted_eigs(&reference_matrix(d));
        let gap = e[d] - e[d + 1].abs();
        let cert = equidistant_rank_certificate(&regular_simplex(d), 1.0, 0.0)?;
        rank_ok &= gap >= 0.1 && !cert.feasible;
        rank_detail.push(json!({ "d": d, "eigs": e, "gap": gap, "simplex_lower_bound": cert.lower_bound }));
    }
    claims.push(claim(
        "rank_certificate",
        "the reference matrix has rank d + 1 with eigenvalue gap at least 0.1 and the simplex control certifies",
        rank_ok,
        json!(rank_detail),
    ));

    sink.json("report.json", &json!({ "mixture": m, "claims": claims }))?;
    Ok(claims)
}
