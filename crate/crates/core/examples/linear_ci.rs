//! Interval for a single linear functional ξᵀθ₀, sparse and dense ξ.

use hdtest::{
    ci_linear, make_signal, sample_dataset, CovarianceModel, PipelineConfig, RngSeed, Subspace,
};
use ndarray::Array1;

fn main() -> hdtest::Result<()> {
    let (n, p) = (300, 400);
    let theta0 = make_signal(p, 6, 1.0, RngSeed::new(4, 0))?;
    let data = sample_dataset(
        n,
        &CovarianceModel::Toeplitz { p, rho: 0.3 },
        &theta0,
        1.0,
        RngSeed::new(4, 1),
    )?;

    let mut sparse = Array1::zeros(p);
    sparse[0] = 1.0;
    sparse[1] = -2.0;
    let dense = Array1::from_shape_fn(p, |j| ((j as f64) * 0.37).sin());

    let mut cfg = PipelineConfig::fixed(Subspace::identity(p));
    for (name, xi) in [("sparse", &sparse), ("dense", &dense)] {
        cfg.relative_mu = name == "dense";
        let ci = ci_linear(&data, xi.view(), 0.05, &cfg)?;
        let truth = xi.dot(&theta0);
        println!(
            "{name:<6} truth {truth:8.4}  95% CI [{:8.4}, {:8.4}]  width {:.4}  covers {}",
            ci.lo,
            ci.hi,
            ci.width(),
            ci.contains(truth)
        );
    }
    Ok(())
}
