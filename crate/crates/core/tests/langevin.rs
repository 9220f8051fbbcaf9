use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use pspin::hamiltonian::{sample, SpherePoint};
use pspin::langevin::{default_dt, integrate, integrate_paths, log_times, LangevinConfig};
use pspin::{Error, Mixture};

fn start(n: usize, seed: u64) -> SpherePoint {
    SpherePoint::random(n, &mut ChaCha8Rng::seed_from_u64(seed))
}

#[test]
fn free_diffusion_decays_exponentially() {
    let n = 100;
    let h = sample(n, &Mixture::pure(2).unwrap(), 0).unwrap();
    let cfg = LangevinConfig {
        beta: 0.0,
        dt: 1e-3,
        horizon: 1.0,
        seed: 1,
        record_times: vec![0.25, 0.5, 1.0],
    };
    let ens = integrate_paths(&h, &start(n, 2), &cfg, 100).unwrap();
    let rate = (n as f64 - 1.0) / n as f64;
    for ((t, m), se) in ens.times.iter().zip(&ens.mean_overlap).zip(&ens.stderr_overlap) {
        let expected = (-rate * t).exp();
        assert!((m - expected).abs() <= 4.0 * se + 2e-3, "t {t}: {m} vs {expected} (se {se})");
    }
    assert!(ens.max_norm_error <= 1e-12);
}

#[test]
fn halving_the_step_changes_little() {
    let n = 40;
    let h = sample(n, &Mixture::pure(3).unwrap(), 4).unwrap();
    let x0 = start(n, 5);
    let mean_at_end = |dt: f64| {
        let cfg = LangevinConfig {
            beta: 1.0,
            dt,
            horizon: 1.0,
            seed: 6,
            record_times: vec![1.0],
        };
        integrate_paths(&h, &x0, &cfg, 200).unwrap().mean_overlap[0]
    };
    let (a, b) = (mean_at_end(1e-3), mean_at_end(5e-4));
    assert!((a - b).abs() <= 5e-2, "{a} vs {b}");
}

#[test]
fn high_temperature_energy_settles_at_the_annealed_value() {
    let n = 60;
    let m = Mixture::pure(3).unwrap();
    let h = sample(n, &m, 8).unwrap();
    let beta = 0.5;
    let cfg = LangevinConfig {
        beta,
        dt: default_dt(beta),
        horizon: 5.0,
        seed: 9,
        record_times: vec![3.0, 4.0, 5.0],
    };
    let ens = integrate_paths(&h, &start(n, 10), &cfg, 4).unwrap();
    let late = ens.mean_energy_per_n.iter().sum::<f64>() / ens.mean_energy_per_n.len() as f64;
    assert!((late - beta * m.xi(1.0)).abs() <= 0.15, "{late}");
}

#[test]
fn paths_are_reproducible_and_distinct() {
    let n = 20;
    let h = sample(n, &Mixture::pure(3).unwrap(), 0).unwrap();
    let x0 = start(n, 1);
    let cfg = LangevinConfig::new(2.0, 0.5, 3, 4);
    let a = integrate(&h, &x0, &cfg, 0).unwrap();
    let b = integrate(&h, &x0, &cfg, 0).unwrap();
    let c = integrate(&h, &x0, &cfg, 1).unwrap();
    let bits = |v: &[f64]| v.iter().map(|x| x.to_bits()).collect::<Vec<_>>();
    assert_eq!(bits(&a.overlap), bits(&b.overlap));
    assert_ne!(bits(&a.overlap), bits(&c.overlap));
    assert_eq!(a.times.len(), 4);
    assert!(a.max_norm_error <= 1e-12);
}

#[test]
fn record_times_are_log_spaced_and_end_at_horizon() {
    let t = log_times(1e-3, 10.0, 5);
    assert_eq!(t.len(), 5);
    assert!((t[0] - 1e-3).abs() < 1e-15);
    assert!((t[4] - 10.0).abs() < 1e-9);
    let r: Vec<f64> = t.windows(2).map(|w| w[1] / w[0]).collect();
    assert!(r.iter().all(|x| (x - r[0]).abs() < 1e-9));
    assert_eq!(default_dt(20.0), 5e-5);
    assert_eq!(default_dt(0.5), 1e-3);
}

#[test]
fn oversized_steps_trip_the_guard() {
    let n = 20;
    let h = sample(n, &Mixture::pure(4).unwrap(), 0).unwrap();
    let cfg = LangevinConfig {
        beta: 1e3,
        dt: 1e-3,
        horizon: 0.1,
        seed: 0,
        record_times: vec![0.1],
    };
    assert!(matches!(integrate(&h, &start(n, 0), &cfg, 0), Err(Error::Unstable(_))));

    let bad = LangevinConfig { dt: -1.0, ..cfg.clone() };
    assert!(matches!(integrate(&h, &start(n, 0), &bad, 0), Err(Error::Domain(_))));
    assert!(matches!(
        integrate(&h, &start(n + 1, 0), &LangevinConfig { beta: 1.0, ..cfg }, 0),
        Err(Error::DimensionMismatch { .. })
    ));
}
