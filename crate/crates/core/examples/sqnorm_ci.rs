//! Interval for the signal energy ‖θ₀‖², from a split sample.

use hdtest::inference::default_a_n;
use hdtest::{ci_sqnorm, make_signal, sample_dataset, CovarianceModel, PipelineConfig, RngSeed};

fn main() -> hdtest::Result<()> {
    let (n, p, s0) = (400, 300, 5);
    let cov = CovarianceModel::Toeplitz { p, rho: 0.2 };
    for b in [0.0, 0.5, 1.0] {
        let theta0 = make_signal(p, s0, b, RngSeed::new(6, 0))?;
        let data = sample_dataset(n, &cov, &theta0, 1.0, RngSeed::new(6, 1))?;
        let cfg = PipelineConfig::split(RngSeed::new(6, 2));
        let ci = ci_sqnorm(&data, 0.05, s0, default_a_n(n), &cfg)?;
        let truth = theta0.dot(&theta0);
        println!(
            "‖θ₀‖² = {truth:5.2}  CI [{:7.4}, {:7.4}]  covers {}{}",
            ci.lo,
            ci.hi,
            ci.contains(truth),
            if ci.degenerate {
                "  (pilot fit was zero)"
            } else {
                ""
            }
        );
    }
    Ok(())
}
