//! Joint estimate of coefficients and noise level on a sparse problem.

use hdtest::scaled_lasso::{self, LassoOptions};
use hdtest::{make_signal, sample_dataset, CovarianceModel, RngSeed};

fn main() -> hdtest::Result<()> {
    let (n, p, s0) = (200, 500, 8);
    let seed = RngSeed::new(11, 0);
    let theta0 = make_signal(p, s0, 1.0, seed)?;
    let cov = CovarianceModel::Toeplitz { p, rho: 0.3 };
    let data = sample_dataset(n, &cov, &theta0, 0.7, seed)?;

    let lambda = scaled_lasso::default_lambda(n, p);
    let fit = scaled_lasso::fit(&data, lambda, &LassoOptions::default())?;

    let support: Vec<usize> = (0..p).filter(|&j| fit.theta_hat[j] != 0.0).collect();
    let truth: Vec<usize> = (0..p).filter(|&j| theta0[j] != 0.0).collect();
    println!("lambda      {lambda:.4}");
    println!("sigma_hat   {:.4}  (true 0.7)", fit.sigma_hat);
    println!(
        "iterations  {}  converged {}",
        fit.iterations, fit.converged
    );
    println!("kkt |.|_inf {:.2e}", scaled_lasso::kkt_check(&fit, &data));
    println!("true support      {truth:?}");
    println!("estimated support {support:?}");
    let err = &fit.theta_hat - &theta0;
    println!("l2 error    {:.4}", err.dot(&err).sqrt());
    Ok(())
}
