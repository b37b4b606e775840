//! The debiased estimate splits exactly into a Gaussian term and a bias term.

use hdtest::debias::{debias, decompose};
use hdtest::decorrelate::{self, default_mu, QpOptions};
use hdtest::scaled_lasso::{self, LassoOptions};
use hdtest::{make_signal, sample_dataset, CovarianceModel, RngSeed, Subspace};

fn main() -> hdtest::Result<()> {
    let (n, p) = (200, 300);
    let seed = RngSeed::new(5, 0);
    let theta0 = make_signal(p, 5, 1.0, seed)?;
    let data = sample_dataset(
        n,
        &CovarianceModel::Toeplitz { p, rho: 0.4 },
        &theta0,
        1.0,
        seed,
    )?;

    let fit = scaled_lasso::fit(
        &data,
        scaled_lasso::default_lambda(n, p),
        &LassoOptions::default(),
    )?;
    let u = Subspace::identity(p);
    let g = decorrelate::build(
        data.gram().view(),
        &u,
        default_mu(n, p),
        &QpOptions::default(),
    )?;
    let est = debias(&fit, &data, &u, &g)?;
    let parts = decompose(&est, &data, &fit, &u, &g)?;

    let root_n = (n as f64).sqrt();
    let lhs = (&est.gamma_d - &theta0) * root_n;
    let gap = (&parts.z + &parts.delta - &lhs)
        .iter()
        .fold(0.0f64, |a, v| a.max(v.abs()));
    let inf = |v: &ndarray::Array1<f64>| v.iter().fold(0.0f64, |a, x| a.max(x.abs()));
    println!("|Z|_inf     {:.3}", inf(&parts.z));
    println!("|Δ|_inf     {:.3}", inf(&parts.delta));
    println!("identity gap {gap:.2e}");
    println!("coherence   {:.4}", g.coherence);
    Ok(())
}
