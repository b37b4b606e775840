use hdtest::debias::{debias, decompose};
use hdtest::decorrelate::{self, coherence, default_mu, solve_column, QpOptions};
use hdtest::hypothesis::{project, project_lp};
use hdtest::inference::{
    decide, estimate_on, linear_from_stage, power_f, select_subspace, PowerQuery,
};
use hdtest::num::{cholesky, normal_cdf, normal_quantile, toeplitz_cov};
use hdtest::scaled_lasso::{self, LassoOptions};
use hdtest::{
    make_signal, run_test, sample_dataset, CovarianceModel, Dataset, DesignSampler, HypothesisSet,
    PipelineConfig, RngSeed, Subspace,
};
use ndarray::{Array1, Array2};
use proptest::prelude::*;

fn gram(n: usize, p: usize, rho: f64, seed: u64) -> Array2<f64> {
    let x = DesignSampler::new(&CovarianceModel::Toeplitz { p, rho })
        .unwrap()
        .design(n, RngSeed::new(seed, 0));
    x.t().dot(&x) / n as f64
}

fn instance(n: usize, p: usize, s0: usize, seed: u64) -> Dataset {
    let theta = make_signal(p, s0, 1.0, RngSeed::new(seed, 1)).unwrap();
    sample_dataset(
        n,
        &CovarianceModel::Toeplitz { p, rho: 0.3 },
        &theta,
        1.0,
        RngSeed::new(seed, 2),
    )
    .unwrap()
}

fn inf_norm(v: impl IntoIterator<Item = f64>) -> f64 {
    v.into_iter().fold(0.0, |a, x| a.max(x.abs()))
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 64, ..ProptestConfig::default() })]

    #[test]
    fn cdf_and_quantile_are_inverse(x in -6.0f64..6.0) {
        let q = normal_cdf(x);
        prop_assert!((normal_quantile(q).unwrap() - x).abs() <= 1e-8);
    }

    #[test]
    fn toeplitz_is_positive_definite(p in 1usize..60, rho in -0.9f64..0.9) {
        prop_assert!(cholesky(toeplitz_cov(p, rho).unwrap().view()).is_ok());
    }

    #[test]
    fn equal_seeds_give_equal_data(seed in any::<u64>(), stream in any::<u64>()) {
        let cov = CovarianceModel::Toeplitz { p: 7, rho: 0.4 };
        let theta = Array1::linspace(-1.0, 1.0, 7);
        let a = sample_dataset(12, &cov, &theta, 0.5, RngSeed::new(seed, stream)).unwrap();
        let b = sample_dataset(12, &cov, &theta, 0.5, RngSeed::new(seed, stream)).unwrap();
        prop_assert_eq!(a.x, b.x);
        prop_assert_eq!(a.y, b.y);
    }
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 24, ..ProptestConfig::default() })]

    #[test]
    fn noise_has_unit_variance(seed in any::<u64>()) {
        let n = 2000;
        let theta = Array1::from_elem(5, 0.7);
        let d = sample_dataset(n, &CovarianceModel::Identity { p: 5 }, &theta, 2.5, RngSeed::new(seed, 0)).unwrap();
        let w = (&d.y - &d.x.dot(&theta)) / 2.5;
        let mean = w.sum() / n as f64;
        let var = w.mapv(|v| (v - mean).powi(2)).sum() / (n - 1) as f64;
        prop_assert!((var - 1.0).abs() <= 5.0 / (n as f64).sqrt());
    }

    #[test]
    fn lasso_commutes_with_column_permutation(seed in any::<u64>()) {
        let d = instance(40, 12, 3, seed);
        let perm: Vec<usize> = (0..12).rev().collect();
        let xp = Array2::from_shape_fn((40, 12), |(i, j)| d.x[[i, perm[j]]]);
        let dp = Dataset::new(xp, d.y.clone()).unwrap();
        let lambda = scaled_lasso::default_lambda(40, 12);
        let opts = LassoOptions { tol_cd: 1e-12, tol_sigma: 1e-12, ..LassoOptions::default() };
        let a = scaled_lasso::fit(&d, lambda, &opts).unwrap();
        let b = scaled_lasso::fit(&dp, lambda, &opts).unwrap();
        for (j, &pj) in perm.iter().enumerate() {
            prop_assert!((b.theta_hat[j] - a.theta_hat[pj]).abs() <= 1e-8);
        }
        prop_assert!((a.sigma_hat - b.sigma_hat).abs() <= 1e-8);
    }

    #[test]
    fn lasso_objective_never_increases(seed in any::<u64>()) {
        let d = instance(50, 80, 4, seed);
        let fit = scaled_lasso::fit(&d, scaled_lasso::default_lambda(50, 80), &LassoOptions::default()).unwrap();
        for w in fit.objective_trace.windows(2) {
            prop_assert!(w[1] <= w[0] + 1e-12 * (1.0 + w[0].abs()));
        }
    }

    #[test]
    fn decorrelator_is_feasible_monotone_and_odd(seed in any::<u64>(), col in 0usize..15, rho in -0.6f64..0.8) {
        let s = gram(30, 15, rho, seed);
        let u = Subspace::basis_vector(15, col);
        let opts = QpOptions::default();
        let g = decorrelate::build(s.view(), &u, 0.3, &opts).unwrap();
        let top = g.mu_used.iter().cloned().fold(0.0, f64::max);
        prop_assert!(coherence(s.view(), g.g.view(), u.matrix().view()).unwrap() <= top + 1e-7);

        let small = solve_column(s.view(), u.column(0), 0.2, &opts);
        let large = solve_column(s.view(), u.column(0), 0.4, &opts).unwrap();
        if let Ok(small) = small {
            prop_assert!(small.objective >= large.objective - 1e-7);
        }
        let neg = solve_column(s.view(), (-&u.column(0)).view(), 0.4, &opts).unwrap();
        prop_assert!(inf_norm((&neg.g + &large.g).iter().copied()) <= 1e-8);
    }

    #[test]
    fn relative_mu_matches_plain_for_basis_vectors(seed in any::<u64>(), col in 0usize..10) {
        let s = gram(40, 10, 0.4, seed);
        let u = Subspace::basis_vector(10, col);
        let opts = QpOptions::default();
        let plain = decorrelate::build(s.view(), &u, 0.25, &opts).unwrap();
        let rel = decorrelate::build_relative(s.view(), &u, 0.25, 0.05, &opts).unwrap();
        prop_assert_eq!(plain.g, rel.g);
    }

    #[test]
    fn decomposition_is_exact_and_q_is_spd(seed in any::<u64>()) {
        let (n, p) = (60, 90);
        let d = instance(n, p, 4, seed);
        let fit = scaled_lasso::fit(&d, scaled_lasso::default_lambda(n, p), &LassoOptions::default()).unwrap();
        let u = Subspace::identity(p);
        let g = decorrelate::build(d.gram().view(), &u, default_mu(n, p), &QpOptions::default()).unwrap();
        let est = debias(&fit, &d, &u, &g).unwrap();
        let parts = decompose(&est, &d, &fit, &u, &g).unwrap();
        let theta0 = &d.truth.as_ref().unwrap().theta0;
        let lhs = (&est.gamma_d - theta0) * (n as f64).sqrt();
        let gap = inf_norm((&parts.z + &parts.delta - &lhs).iter().copied());
        prop_assert!(gap <= 1e-9 * (1.0 + inf_norm(est.gamma_d.iter().copied())));
        prop_assert!(cholesky(est.q.view()).is_ok());
    }

    #[test]
    fn projection_scales_with_d(
        gamma in proptest::collection::vec(-2.0f64..2.0, 4),
        d in proptest::collection::vec(0.2f64..3.0, 4),
        lambda in 0.1f64..10.0,
        which in 0usize..3,
    ) {
        let set = [HypothesisSet::BetaMin { c: 0.7 }, HypothesisSet::NonnegCone, HypothesisSet::MonotoneCone][which].clone();
        let (gamma, d) = (Array1::from(gamma), Array1::from(d));
        let u = Subspace::identity(4);
        let base = project(&set, gamma.view(), d.view(), &u).unwrap();
        let scaled = project(&set, gamma.view(), (&d * lambda).view(), &u).unwrap();
        let tol = if base.exact { 1e-12 } else { 1e-7 };
        prop_assert!((scaled.t_n - lambda * base.t_n).abs() <= tol * (1.0 + scaled.t_n));
        if let Some(theta) = &base.theta_p {
            prop_assert!(set.membership(theta.view(), 1e-6));
        }
    }

    #[test]
    fn members_have_zero_statistic(theta in proptest::collection::vec(-2.0f64..2.0, 5), d in 0.1f64..4.0) {
        let u = Subspace::identity(5);
        let d = Array1::from_elem(5, d);
        let nonneg = Array1::from(theta.iter().map(|v| v.abs()).collect::<Vec<_>>());
        prop_assert_eq!(project(&HypothesisSet::NonnegCone, nonneg.view(), d.view(), &u).unwrap().t_n, 0.0);
        let mut sorted = theta.clone();
        sorted.sort_by(f64::total_cmp);
        let sorted = Array1::from(sorted);
        prop_assert!(project_lp(&HypothesisSet::MonotoneCone, sorted.view(), d.view(), &u).unwrap().t_n <= 1e-9);
        let beta = nonneg.mapv(|v| if v < 0.5 { 0.0 } else { v });
        prop_assert_eq!(project(&HypothesisSet::BetaMin { c: 0.5 }, beta.view(), d.view(), &u).unwrap().t_n, 0.0);
    }

    #[test]
    fn selected_direction_is_unit(theta in proptest::collection::vec(-2.0f64..2.0, 6), which in 0usize..4) {
        let set = [
            HypothesisSet::NonnegCone,
            HypothesisSet::MonotoneCone,
            HypothesisSet::BetaMin { c: 1.0 },
            HypothesisSet::SqNorm { c: 1.0 },
        ][which].clone();
        let theta = Array1::from(theta);
        prop_assume!(theta.iter().any(|v| *v != 0.0));
        let u = select_subspace(&set, theta.view()).unwrap();
        let gram = u.matrix().t().dot(u.matrix());
        prop_assert!(inf_norm((gram - Array2::<f64>::eye(u.k())).iter().copied()) <= 1e-10);
    }
}

#[test]
fn power_bound_is_monotone_on_grids() {
    for alpha in [0.01, 0.05, 0.1] {
        for xi in 0..=60 {
            let x = 0.1 * xi as f64;
            let mut prev = f64::INFINITY;
            for k in 1..=50 {
                let f = power_f(&PowerQuery { alpha, x, k }).unwrap();
                if x > 0.0 {
                    assert!(f < prev, "F not decreasing in k at α={alpha} x={x} k={k}");
                }
                prev = f;
            }
        }
        for k in [1, 2, 5, 20, 50] {
            let mut prev = f64::NEG_INFINITY;
            for xi in 0..=60 {
                let f = power_f(&PowerQuery {
                    alpha,
                    x: 0.1 * xi as f64,
                    k,
                })
                .unwrap();
                assert!(f > prev, "F not increasing in x at α={alpha} k={k}");
                prev = f;
            }
        }
    }
}

#[test]
fn threshold_and_level_monotonicity() {
    let d = instance(120, 60, 3, 5);
    let cfg = PipelineConfig::fixed(Subspace::identity(60));
    let set = HypothesisSet::BetaMin { c: 1.2 };
    let mut rejected = false;
    for alpha in [0.001, 0.01, 0.05, 0.1, 0.2, 0.5] {
        let out = run_test(&d, &set, alpha, &cfg).unwrap();
        assert_eq!(
            out.threshold,
            normal_quantile(1.0 - alpha / (2.0 * out.k as f64)).unwrap()
        );
        assert_eq!(
            (out.threshold, out.reject),
            decide(out.t_n, alpha, out.k).unwrap()
        );
        assert!(
            !rejected || out.reject,
            "rejected at a smaller level but not at {alpha}"
        );
        rejected |= out.reject;
    }
}

#[test]
fn linear_interval_width_audit() {
    let (n, p) = (80, 50);
    let d = instance(n, p, 3, 9);
    let xi: Array1<f64> = Array1::from_shape_fn(p, |j| if j % 7 == 0 { 1.5 } else { 0.0 });
    let norm = xi.dot(&xi).sqrt();
    let stage = estimate_on(
        &d,
        Subspace::unit(xi.view()).unwrap(),
        &PipelineConfig::split(RngSeed::new(0, 0)),
    )
    .unwrap();
    let ci = linear_from_stage(&stage, norm, 0.05).unwrap();
    let z = normal_quantile(0.975).unwrap();
    let expect = 2.0 * z * stage.estimate.sigma_hat / (n as f64).sqrt()
        * stage.decorrelator.objective[0].sqrt()
        * norm;
    assert!((ci.width() - expect).abs() <= 1e-12 * expect);
}
