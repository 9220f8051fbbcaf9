use nalgebra::{DMatrix, DVector, SymmetricEigen};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use statrs::distribution::{ContinuousCDF, Normal};

use pspin::hamiltonian::{sample, HamiltonianInstance, SpherePoint};
use pspin::{Error, Mixture};

fn point(n: usize, seed: u64) -> SpherePoint {
    SpherePoint::random(n, &mut ChaCha8Rng::seed_from_u64(seed))
}

fn mixed() -> Mixture {
    Mixture::from_xi_coeffs([(2, 0.5), (3, 1.0)]).unwrap()
}

#[test]
fn identical_inputs_give_identical_tensors() {
    let m = Mixture::pure(3).unwrap();
    let a = sample(50, &m, 7).unwrap();
    let b = sample(50, &m, 7).unwrap();
    let bits = |h: &HamiltonianInstance| -> Vec<u64> { h.tensors()[0].data.iter().map(|v| v.to_bits()).collect() };
    assert_eq!(bits(&a), bits(&b));
    assert_ne!(bits(&a), bits(&sample(50, &m, 8).unwrap()));
}

#[test]
fn oversized_instance_is_refused() {
    match sample(10_000, &Mixture::pure(4).unwrap(), 0) {
        Err(Error::Capacity { degree, entries, .. }) => {
            assert_eq!(degree, 4);
            assert_eq!(entries, 10u128.pow(16));
        }
        other => panic!("expected a capacity error, got {other:?}"),
    }
}

#[test]
fn quadratic_model_is_a_scaled_form() {
    let n = 12;
    let h = sample(n, &Mixture::pure(2).unwrap(), 3).unwrap();
    let g = DMatrix::from_row_slice(n, n, &h.tensors()[0].data);
    let x = point(n, 1).into_inner();
    let scale = (n as f64).powf(-0.5);
    assert!((h.value_at(x.as_slice()) - scale * x.dot(&(&g * &x))).abs() < 1e-12);
    let expected = (&g + g.transpose()) * scale;
    for seed in 0..3 {
        let y = point(n, 10 + seed).into_inner();
        assert!((h.hessian_at(y.as_slice()) - &expected).amax() < 1e-12);
    }
}

#[test]
fn derivatives_match_finite_differences() {
    let n = 30;
    let step = 1e-5;
    for m in [Mixture::pure(2).unwrap(), Mixture::pure(3).unwrap(), Mixture::pure(4).unwrap(), mixed()] {
        let h = sample(n, &m, 11).unwrap();
        let x = point(n, 2).into_inner();
        let g = h.gradient_at(x.as_slice());
        let fd = DVector::from_fn(n, |i, _| {
            let mut a = x.clone();
            let mut b = x.clone();
            a[i] += step;
            b[i] -= step;
            (h.value_at(a.as_slice()) - h.value_at(b.as_slice())) / (2.0 * step)
        });
        assert!((&fd - &g).amax() <= 1e-6 * g.amax(), "gradient {m:?}");

        // Hessian-vector product against a directional difference of the gradient.
        let v = point(n, 3).into_inner();
        let hv = h.hessian_at(x.as_slice()) * &v;
        let fd = (h.gradient_at((&x + &v * step).as_slice()) - h.gradient_at((&x - &v * step).as_slice())) / (2.0 * step);
        assert!((&fd - &hv).amax() <= 1e-6 * hv.amax(), "hessian {m:?}");
    }
}

#[test]
fn euler_identity_and_orthogonal_split() {
    let n = 25;
    for p in [2u32, 3, 4] {
        let h = sample(n, &Mixture::pure(p).unwrap(), p as u64).unwrap();
        for seed in 0..3 {
            let s = point(n, seed);
            let ops = h.spherical_ops(&s).unwrap();
            let e = h.evaluate(&s).unwrap() / n as f64;
            assert!((ops.radial - p as f64 * e).abs() < 1e-10);
            let g = h.gradient(&s).unwrap();
            let lhs = ops.grad_sp.norm_squared() + n as f64 * ops.radial.powi(2);
            assert!((lhs - g.norm_squared()).abs() < 1e-9 * g.norm_squared());
            assert_eq!(ops.grad_sp.len(), n - 1);
            assert_eq!(ops.hess_sp.nrows(), n - 1);
        }
    }
}

fn sorted(m: DMatrix<f64>) -> Vec<f64> {
    let mut e: Vec<f64> = SymmetricEigen::new(m).eigenvalues.iter().copied().collect();
    e.sort_by(f64::total_cmp);
    e
}

#[test]
fn spherical_spectrum_does_not_depend_on_the_tangent_basis() {
    let n = 20;
    let h = sample(n, &mixed(), 5).unwrap();
    let s = point(n, 6);
    let ours = sorted(h.spherical_ops(&s).unwrap().hess_sp);

    // Another completion: QR of [σ, random columns].
    let mut rng = ChaCha8Rng::seed_from_u64(99);
    let mut a = DMatrix::from_fn(n, n, |_, _| StandardNormal.sample(&mut rng));
    a.set_column(0, s.coords());
    let q = a.qr().q();
    let basis = q.columns(1, n - 1).into_owned();
    let radial = s.coords().dot(&h.gradient(&s).unwrap()) / n as f64;
    let shifted = h.hessian(&s).unwrap() - DMatrix::identity(n, n) * radial;
    let other = sorted(basis.transpose() * shifted * &basis);
    let gap = ours.iter().zip(&other).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
    assert!(gap <= 1e-8, "{gap}");
}

#[test]
fn value_is_gaussian_with_variance_xi_one() {
    let m = mixed();
    let n = 16;
    let s = point(n, 0);
    let seeds = 2000;
    let mut v: Vec<f64> = (0..seeds)
        .map(|k| sample(n, &m, 1000 + k).unwrap().evaluate(&s).unwrap() / (n as f64).sqrt())
        .collect();
    v.sort_by(f64::total_cmp);
    let law = Normal::new(0.0, m.xi(1.0).sqrt()).unwrap();
    let k = v.len() as f64;
    let d = v
        .iter()
        .enumerate()
        .map(|(i, x)| {
            let c = law.cdf(*x);
            (c - i as f64 / k).abs().max(((i + 1) as f64 / k - c).abs())
        })
        .fold(0.0, f64::max);
    // Asymptotic 5% critical value of the one-sample statistic.
    assert!(d <= 1.358 / k.sqrt(), "KS statistic {d}");
}

#[test]
fn covariance_matches_mixture_at_half_overlap() {
    let m = mixed();
    let n = 40;
    let r = 0.5;
    let s = point(n, 1).into_inner();
    let w = point(n, 2).into_inner();
    let w = &w - &s * (s.dot(&w) / n as f64);
    let w = &w * ((n as f64).sqrt() / w.norm());
    let t = &s * r + &w * (1.0f64 - r * r).sqrt();
    let seeds = 2000u64;
    let prods: Vec<f64> = (0..seeds)
        .map(|k| {
            let h = sample(n, &m, 50_000 + k).unwrap();
            h.value_at(s.as_slice()) * h.value_at(t.as_slice()) / n as f64
        })
        .collect();
    let mean = prods.iter().sum::<f64>() / seeds as f64;
    let var = prods.iter().map(|p| (p - mean).powi(2)).sum::<f64>() / (seeds - 1) as f64;
    let se = (var / seeds as f64).sqrt();
    assert!((mean - m.xi(r)).abs() <= 3.0 * se, "{mean} vs {} (se {se})", m.xi(r));
}

#[test]
fn derivative_norms_do_not_grow_with_dimension() {
    let m = mixed();
    let stats = |n: usize| {
        let mut g_max: f64 = 0.0;
        let mut h_max: f64 = 0.0;
        for seed in 0..4u64 {
            let h = sample(n, &m, seed).unwrap();
            for k in 0..10 {
                let x = point(n, 100 + k).into_inner();
                let (_, g, hess) = h.derivatives_at(x.as_slice());
                g_max = g_max.max(g.norm() / (n as f64).sqrt());
                let e = SymmetricEigen::new(hess).eigenvalues;
                h_max = h_max.max(e.amax());
            }
        }
        (g_max, h_max)
    };
    let (g50, h50) = stats(50);
    let (g200, h200) = stats(200);
    assert!(g200 <= 1.2 * g50, "{g50} -> {g200}");
    assert!(h200 <= 1.2 * h50, "{h50} -> {h200}");
}

#[test]
fn dump_round_trip() {
    let h = sample(9, &mixed(), 4).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("h.bin");
    h.dump_to_path(&path).unwrap();
    let back = HamiltonianInstance::load_from_path(&path).unwrap();
    assert_eq!(back.n(), 9);
    assert_eq!(back.seed(), 4);
    let x = point(9, 0);
    assert_eq!(h.evaluate(&x).unwrap().to_bits(), back.evaluate(&x).unwrap().to_bits());

    let mut bytes = std::fs::read(&path).unwrap();
    bytes[0] ^= 0xff;
    assert!(matches!(HamiltonianInstance::load(bytes.as_slice()), Err(Error::Dump(_))));
    assert!(HamiltonianInstance::load(&bytes[8..20]).is_err());
}

#[test]
fn wrong_dimension_is_rejected() {
    let h = sample(6, &mixed(), 0).unwrap();
    assert!(matches!(
        h.evaluate(&point(7, 0)),
        Err(Error::DimensionMismatch { expected: 6, got: 7 })
    ));
}
