use nalgebra::{DMatrix, DVector};
use proptest::prelude::*;
use rand::Rng;
use rand_distr::StandardNormal;

use wavefdi::fdi::{
    covariance_matrix, global_chi2_test, minmax_test, normalized_residual, primary_residuals,
    run_fdi_pipeline, sensitivity_matrix, sensitivity_test, FdiSettings, ResidualBatch, Verdict,
};
use wavefdi::linalg::min_eigenvalue;
use wavefdi::simulator::sim_rng;
use wavefdi::stats::chi2_threshold;

fn gaussian(rng: &mut impl Rng) -> f64 {
    rng.sample(StandardNormal)
}

fn random_batch(rng: &mut impl Rng, nb: usize, p: usize) -> ResidualBatch {
    let regs = DMatrix::from_fn(nb, p, |_, _| gaussian(rng));
    let res = DVector::from_fn(nb, |_, _| gaussian(rng));
    ResidualBatch::new(res, regs).unwrap()
}

// P(χ²_k ≤ λ) by composite Simpson in u = √x, which removes the k = 1
// singularity at the origin. Γ(k/2) for the two odd cases is written out.
fn chi2_cdf_simpson(lambda: f64, k: usize) -> f64 {
    let pi = std::f64::consts::PI;
    let gamma_half_k = match k {
        1 => pi.sqrt(),
        5 => 0.75 * pi.sqrt(),
        _ => unreachable!(),
    };
    let half_k = k as f64 / 2.0;
    let pdf = |x: f64| x.powf(half_k - 1.0) * (-x / 2.0).exp() / (2f64.powf(half_k) * gamma_half_k);
    let g = |u: f64| {
        if u == 0.0 {
            if k == 1 {
                2.0 / (2f64.sqrt() * gamma_half_k)
            } else {
                0.0
            }
        } else {
            2.0 * u * pdf(u * u)
        }
    };
    let n = 20_000;
    let b = lambda.sqrt();
    let h = b / n as f64;
    let mut acc = g(0.0) + g(b);
    for i in 1..n {
        acc += g(i as f64 * h) * if i % 2 == 1 { 4.0 } else { 2.0 };
    }
    acc * h / 3.0
}

#[test]
fn thresholds_match_numerical_integration() {
    for (alpha, dof, expected) in [(0.05, 5, 11.0705), (0.5, 1, 0.4549)] {
        let lambda = chi2_threshold(alpha, dof);
        assert!((lambda - expected).abs() < 1e-4, "{lambda}");
        let tail = 1.0 - chi2_cdf_simpson(lambda, dof);
        assert!((tail - alpha).abs() < 1e-8, "tail {tail}");
    }
}

#[test]
fn primary_residuals_and_sensitivity_match_loops() {
    let mut rng = sim_rng(31);
    let b = random_batch(&mut rng, 50, 5);
    let h = primary_residuals(&b);
    let m = sensitivity_matrix(&b.regressors);
    for k in 0..50 {
        for j in 0..5 {
            assert_eq!(h[(k, j)], b.residuals[k] * b.regressors[(k, j)]);
        }
    }
    for i in 0..5 {
        for j in 0..5 {
            let mut acc = 0.0;
            for k in 0..50 {
                acc += b.regressors[(k, i)] * b.regressors[(k, j)];
            }
            assert!((m[(i, j)] - acc / 50.0).abs() < 1e-12);
        }
    }
}

// Literal transcription with 1-based sample indices.
fn covariance_oracle(h: &DMatrix<f64>, lags: usize) -> DMatrix<f64> {
    let nb = h.nrows();
    let p = h.ncols();
    let row = |k: usize| h.row(k - 1).transpose();
    let mut s = DMatrix::zeros(p, p);
    for k in 1..=nb {
        s += row(k) * row(k).transpose() / nb as f64;
    }
    for m in 1..=lags {
        let mut acc = DMatrix::zeros(p, p);
        for k in 1..=nb - m {
            acc += row(k) * row(k + m).transpose() + row(k + m) * row(k).transpose();
        }
        s += acc / (nb - m) as f64;
    }
    s
}

#[test]
fn covariance_matches_transcription() {
    let mut rng = sim_rng(32);
    let b = random_batch(&mut rng, 40, 5);
    let h = primary_residuals(&b);
    for lags in 0..=3 {
        let got = covariance_matrix(&h, lags);
        let want = covariance_oracle(&h, lags);
        assert!((got - want).amax() < 1e-12);
    }
    // One nonzero row: only the lag-0 term survives.
    let mut single = DMatrix::zeros(200, 3);
    single.row_mut(0).copy_from_slice(&[1.0, -2.0, 0.5]);
    let s = covariance_matrix(&single, 3);
    let hv = DVector::from_vec(vec![1.0, -2.0, 0.5]);
    assert!((s - &hv * hv.transpose() / 200.0).amax() < 1e-15);
}

#[test]
fn global_test_matches_explicit_inverse() {
    let mut rng = sim_rng(33);
    for _ in 0..20 {
        let p = 5;
        let g = DMatrix::from_fn(p, p, |_, _| gaussian(&mut rng));
        let s = &g * g.transpose() + DMatrix::identity(p, p) * 0.1;
        let m = DMatrix::from_fn(p, p, |_, _| gaussian(&mut rng));
        let x = DVector::from_fn(p, |_, _| gaussian(&mut rng));
        let si = s.clone().try_inverse().unwrap();
        let f = m.transpose() * &si * &m;
        let score = m.transpose() * &si * &x;
        let want = (score.transpose() * f.lu().solve(&score).unwrap())[0];
        let got = global_chi2_test(&x, &m, &s).unwrap();
        assert!(
            (got - want).abs() <= 1e-8 * want.abs().max(1.0),
            "{got} vs {want}"
        );
    }
}

#[test]
fn identity_information_gives_squared_norm() {
    let x = DVector::from_vec(vec![0.3, -1.2, 2.0]);
    let i = DMatrix::identity(3, 3);
    let t = global_chi2_test(&x, &i, &i).unwrap();
    assert!((t - x.norm_squared()).abs() < 1e-12);
}

#[test]
fn normalized_residual_covariance_follows_clt() {
    let mut rng = sim_rng(34);
    let p = 3;
    let l = DMatrix::from_row_slice(p, p, &[1.0, 0.0, 0.0, 0.5, 1.0, 0.0, -0.3, 0.2, 0.8]);
    let sigma = &l * l.transpose();
    let batches = 1000;
    let nb = 200;
    let mut xs = Vec::with_capacity(batches);
    for _ in 0..batches {
        let h = DMatrix::from_fn(nb, p, |_, _| gaussian(&mut rng)) * l.transpose();
        xs.push(normalized_residual(&h));
    }
    let mean = xs.iter().fold(DVector::zeros(p), |a, x| a + x) / batches as f64;
    let cov = xs.iter().fold(DMatrix::zeros(p, p), |a, x| {
        a + (x - &mean) * (x - &mean).transpose()
    }) / (batches - 1) as f64;
    let dev = (&cov - &sigma).norm() / sigma.norm();
    assert!(dev < 0.15, "relative Frobenius deviation {dev}");
}

#[test]
fn healthy_rate_is_inside_binomial_band() {
    let mut rng = sim_rng(35);
    let trials = 500;
    let settings = FdiSettings {
        alpha: 0.05,
        ..FdiSettings::default()
    };
    let healthy = (0..trials)
        .filter(|_| {
            let b = random_batch(&mut rng, 1000, 5);
            run_fdi_pipeline(&b, &settings).unwrap().verdict == Verdict::Healthy
        })
        .count() as f64;
    // 99% normal-approximation band around 0.95·500.
    let half = 2.576 * (trials as f64 * 0.95 * 0.05).sqrt();
    assert!((healthy - 475.0).abs() <= half, "{healthy} healthy");
}

proptest! {
    #[test]
    fn statistic_scales_quadratically(c in 0.1f64..10.0, seed in 0u64..500) {
        let mut rng = sim_rng(seed);
        let b = random_batch(&mut rng, 60, 5);
        let h = primary_residuals(&b);
        let x = normalized_residual(&h);
        let m = sensitivity_matrix(&b.regressors);
        let s = covariance_matrix(&h, 3);
        prop_assert!((&m - m.transpose()).amax() < 1e-12);
        prop_assert!((&s - s.transpose()).amax() < 1e-12);
        prop_assert!(min_eigenvalue(&m) >= -1e-10);
        let t = global_chi2_test(&x, &m, &s).unwrap();
        let tc = global_chi2_test(&(&x * c), &m, &s).unwrap();
        prop_assert!((tc - c * c * t).abs() <= 1e-9 * tc.max(1.0));
        let all: Vec<usize> = (0..5).collect();
        let ta = sensitivity_test(&x, &m, &s, &all).unwrap();
        prop_assert!((ta - t).abs() <= 1e-10 * t.max(1.0));
        let tm = minmax_test(&x, &m, &s, &all).unwrap();
        prop_assert!((tm - t).abs() <= 1e-10 * t.max(1.0));
    }
}
