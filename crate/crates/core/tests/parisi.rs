use proptest::prelude::*;
use pspin::parisi::{
    endpoint_run, evaluate_q, gs_derivative, minimize_cs_positive_temp, minimize_q, stationarity_report, CsOptions,
    OrderParameter, SolveOptions,
};
use pspin::Mixture;

fn xi(cs: &[(u32, f64)]) -> Mixture {
    Mixture::from_xi_coeffs(cs.iter().copied()).unwrap()
}

fn suite() -> Vec<Mixture> {
    vec![
        xi(&[(2, 1.0)]),
        xi(&[(3, 1.0)]),
        xi(&[(4, 1.0)]),
        xi(&[(2, 1.0), (4, 1.0)]),
        xi(&[(3, 0.5), (5, 1.0)]),
        xi(&[(2, 1.0), (4, 0.05)]),
    ]
}

/// Q for ẑ = L on [0, q₀] and linear down to L − c(1 − q₀) on [q₀, 1],
/// integrated by hand from the second displayed form.
fn one_step_q(m: &Mixture, l: f64, c: f64, q0: f64) -> f64 {
    let end = l - c * (1.0 - q0);
    let cross = c * (m.xi1(1.0) * (1.0 - q0) - (m.xi(1.0) - m.xi(q0)));
    let inv = q0 / l + if c > 1e-14 { (l / end).ln() / c } else { (1.0 - q0) / l };
    0.5 * (m.xi1(1.0) * l - cross + inv)
}

/// Nelder–Mead over an unconstrained parameterization of (L, ẑ(1), q₀).
fn one_step_oracle(m: &Mixture) -> f64 {
    let sig = |t: f64| 1.0 / (1.0 + (-t).exp());
    let f = |p: &[f64; 3]| {
        let l = p[0].exp();
        let end = l * sig(p[1]);
        let q0 = 0.999 * sig(p[2]);
        one_step_q(m, l, (l - end) / (1.0 - q0), q0)
    };
    let mut best = f64::INFINITY;
    for start in [[0.0, 0.0, -3.0], [-0.5, -1.0, -6.0], [0.3, 1.0, 0.0]] {
        let mut simplex: Vec<[f64; 3]> = vec![start];
        for k in 0..3 {
            let mut v = start;
            v[k] += 0.5;
            simplex.push(v);
        }
        let mut vals: Vec<f64> = simplex.iter().map(f).collect();
        for _ in 0..4000 {
            let mut idx: Vec<usize> = (0..4).collect();
            idx.sort_by(|&a, &b| vals[a].total_cmp(&vals[b]));
            simplex = idx.iter().map(|&i| simplex[i]).collect();
            vals = idx.iter().map(|&i| vals[i]).collect();
            let mut centroid = [0.0; 3];
            for v in &simplex[..3] {
                for k in 0..3 {
                    centroid[k] += v[k] / 3.0;
                }
            }
            let along = |t: f64| {
                let mut p = [0.0; 3];
                for k in 0..3 {
                    p[k] = centroid[k] + t * (simplex[3][k] - centroid[k]);
                }
                p
            };
            let r = along(-1.0);
            let fr = f(&r);
            if fr < vals[0] {
                let e = along(-2.0);
                let fe = f(&e);
                (simplex[3], vals[3]) = if fe < fr { (e, fe) } else { (r, fr) };
            } else if fr < vals[2] {
                (simplex[3], vals[3]) = (r, fr);
            } else {
                let c = along(0.5);
                let fc = f(&c);
                if fc < vals[3] {
                    (simplex[3], vals[3]) = (c, fc);
                } else {
                    for i in 1..4 {
                        for k in 0..3 {
                            simplex[i][k] = simplex[0][k] + 0.5 * (simplex[i][k] - simplex[0][k]);
                        }
                        vals[i] = f(&simplex[i]);
                    }
                }
            }
        }
        best = best.min(vals.iter().copied().fold(f64::INFINITY, f64::min));
    }
    best
}

#[test]
fn quadratic_closed_form() {
    let sol = minimize_q(&xi(&[(2, 1.0)]), &SolveOptions::default()).unwrap();
    let s2 = 2f64.sqrt();
    assert!((sol.prediction.gs - s2).abs() < 1e-6);
    assert!((sol.op.l() - 1.0 / s2).abs() < 1e-4);
    assert!(sol.op.zeta_jumps().iter().all(|j| *j <= 1e-6));
    assert!(sol.prediction.full_rsb_endpoint);
    assert!(sol.prediction.lambda_plus.abs() < 1e-4);
    assert!((sol.prediction.lambda_minus + 4.0 * s2).abs() < 1e-3);
    assert!(sol.stationarity.residual_g1 <= 1e-4);
    assert!((sol.gs_derivative - 2.0 * s2).abs() < 1e-6);
}

#[test]
fn cubic_matches_one_step_oracle_and_fine_grid() {
    let m = xi(&[(3, 1.0)]);
    let sol = minimize_q(&m, &SolveOptions::default()).unwrap();
    let oracle = one_step_oracle(&m);
    assert!((sol.prediction.gs - oracle).abs() < 1e-4, "{} vs {oracle}", sol.prediction.gs);
    let fine = minimize_q(&m, &SolveOptions::with_cells(8000)).unwrap();
    assert!((sol.prediction.gs - fine.prediction.gs).abs() < 1e-4);

    // One-step structure: ζ is constant away from the grid ends.
    let cells = sol.op.zeta_cells();
    let mid = &cells[10..cells.len() - 10];
    let spread = mid.iter().copied().fold(f64::NEG_INFINITY, f64::max) - mid.iter().copied().fold(f64::INFINITY, f64::min);
    assert!(spread < 1e-3 * mid[0].abs().max(1.0), "spread {spread}");

    assert!(sol.stationarity.residual_min_g <= 1e-4 && sol.stationarity.min_g >= -1e-4);
    assert!((sol.gs_derivative - sol.prediction.r).abs() < 1e-3);
    let p = &sol.prediction;
    assert!(p.gs >= p.e_inf_minus.unwrap() - 1e-3);
}

#[test]
fn minimizers_are_stationary_and_boxed() {
    for m in suite() {
        let sol = minimize_q(&m, &SolveOptions::default()).unwrap();
        let st = &sol.stationarity;
        assert!(st.residual_g1.max(st.residual_min_g).max(st.support_violation) <= 1e-3);
        assert_eq!(*st.t_indices.last().unwrap(), sol.op.cells());
        assert!(sol.within_box, "{m:?}");
        let p = &sol.prediction;
        assert!(p.lambda_plus <= 1e-4 && p.lambda_minus <= p.lambda_plus);
        let (lp, lm) = p.lambda_factored(&m);
        assert!((lp - p.lambda_plus).abs() < 1e-8 && (lm - p.lambda_minus).abs() < 1e-8);
        if p.full_rsb_endpoint {
            if let Some(plus) = p.e_inf_plus {
                assert!(p.gs <= plus + 1e-3);
            }
        }
        // A run of T ending at 1 forces full RSB behavior at the endpoint.
        if endpoint_run(st, 1e-9) > 0.01 {
            assert!(p.full_rsb_endpoint, "{m:?}");
        }
        assert!(sol.history.windows(2).all(|w| w[1] <= w[0] + 1e-12));
    }
}

#[test]
fn full_rsb_mixture_is_detected() {
    let sol = minimize_q(&xi(&[(2, 1.0), (4, 0.05)]), &SolveOptions::default()).unwrap();
    assert!(sol.prediction.full_rsb_endpoint);
    assert!(endpoint_run(&sol.stationarity, 1e-6) > 0.1);
    let q4 = minimize_q(&xi(&[(4, 1.0)]), &SolveOptions::default()).unwrap();
    assert!(!q4.prediction.full_rsb_endpoint && q4.prediction.lambda_plus < -0.1);
}

#[test]
fn grid_refinement_is_first_order_at_worst() {
    for m in suite() {
        for cells in [250, 500] {
            let a = minimize_q(&m, &SolveOptions::with_cells(cells)).unwrap().prediction.gs;
            let b = minimize_q(&m, &SolveOptions::with_cells(2 * cells)).unwrap().prediction.gs;
            assert!((a - b).abs() <= 10.0 / cells as f64, "{m:?} {cells}: {a} {b}");
        }
    }
}

#[test]
fn stationarity_flags_non_optimal_profile() {
    let m = xi(&[(2, 1.0)]);
    let op = OrderParameter::constant(1.0, 500).unwrap();
    let st = stationarity_report(&op, &m, 1e-4);
    assert!((st.residual_g1 - 1.0).abs() < 1e-12);
}

#[test]
fn envelope_derivative_matches_finite_difference() {
    let h = 1e-3;
    for m in suite() {
        let sol = minimize_q(&m, &SolveOptions::default()).unwrap();
        let up = minimize_q(&m.dilate(1.0 + h).unwrap(), &SolveOptions::default()).unwrap().prediction.gs;
        let down = minimize_q(&m.dilate(1.0 - h).unwrap(), &SolveOptions::default()).unwrap().prediction.gs;
        let fd = (up - down) / (2.0 * h);
        let r = sol.prediction.r;
        assert!((fd - r).abs() <= 1e-2 * (1.0 + r.abs()));
        assert!((gs_derivative(&m, &sol.op) - fd).abs() <= 1e-2 * (1.0 + r.abs()));
    }
}

#[test]
fn positive_temperature_high_temperature_value() {
    let m = xi(&[(2, 1.0)]);
    let s = minimize_cs_positive_temp(&m, 0.5, &CsOptions::default()).unwrap();
    assert!((s.f - 0.125).abs() < 1e-3, "{}", s.f);
}

#[test]
fn positive_temperature_approaches_ground_state() {
    let m = xi(&[(3, 1.0)]);
    let zero = minimize_q(&m, &SolveOptions::default()).unwrap();
    let gs = zero.prediction.gs;
    let zeta = zero.op.zeta_cells();
    let cells = zeta.len();
    let cut = (0.9 * cells as f64) as usize;
    let mut gaps = Vec::new();
    let mut l1 = Vec::new();
    let mut mass = Vec::new();
    for beta in [4.0, 8.0, 16.0, 32.0] {
        let s = minimize_cs_positive_temp(&m, beta, &CsOptions::default()).unwrap();
        gaps.push(gs - s.f_over_beta);
        let x = s.x.x();
        assert_eq!(x.len(), cells);
        l1.push((0..cut).map(|c| (beta * x[c] - zeta[c]).abs()).sum::<f64>() / cells as f64);
        mass.push(beta * x.iter().sum::<f64>() / cells as f64);
    }
    assert!(gaps.iter().all(|g| *g > 0.0), "{gaps:?}");
    assert!(gaps.windows(2).all(|w| w[1] < w[0]), "{gaps:?}");
    assert!(l1[1..].windows(2).all(|w| w[1] < w[0]), "{l1:?}");
    let l = zero.op.l();
    let mass_gap: Vec<f64> = mass.iter().map(|v| (v - l).abs()).collect();
    assert!(mass_gap[3] < mass_gap[1], "{mass:?} vs L = {l}");
}

fn feasible_op(cells: usize) -> impl Strategy<Value = OrderParameter> {
    (
        prop::collection::vec((0usize..1000, 0.0f64..3.0), 0..5),
        0.0f64..4.0,
        0.05f64..2.0,
    )
        .prop_map(move |(jumps, slope, slack)| {
            let mut zeta = vec![0.0; cells];
            for (at, j) in jumps {
                for z in &mut zeta[at * cells / 1000..] {
                    *z += j;
                }
            }
            for (i, z) in zeta.iter_mut().enumerate() {
                *z += slope * i as f64 / cells as f64;
            }
            let area = zeta.iter().sum::<f64>() / cells as f64;
            OrderParameter::from_levels(area + slack, &zeta).unwrap()
        })
}

fn mixture_strategy() -> impl Strategy<Value = Mixture> {
    prop::collection::vec((2u32..7, 0.1f64..1.5), 1..3).prop_map(|v| Mixture::new(v).unwrap())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn forms_agree(op in feasible_op(2000), m in mixture_strategy()) {
        let q = evaluate_q(&op, &m).unwrap();
        prop_assert!((q.form_a - q.form_b).abs() <= 1e-9 * (1.0 + q.form_a.abs()));
    }

    #[test]
    fn functional_is_convex(a in feasible_op(300), b in feasible_op(300), lambda in 0.01f64..0.99, m in mixture_strategy()) {
        let mid = a.mix(&b, lambda).unwrap();
        let qa = evaluate_q(&a, &m).unwrap().form_a;
        let qb = evaluate_q(&b, &m).unwrap().form_a;
        let qm = evaluate_q(&mid, &m).unwrap().form_a;
        prop_assert!(qm <= lambda * qa + (1.0 - lambda) * qb + 1e-10);
    }

    #[test]
    fn minimizer_beats_random_profiles(op in feasible_op(200), m in mixture_strategy()) {
        let sol = minimize_q(&m, &SolveOptions::with_cells(200)).unwrap();
        prop_assert!(sol.prediction.gs <= evaluate_q(&op, &m).unwrap().form_a + 1e-10);
    }
}
