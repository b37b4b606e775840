//! A user-defined polyhedral null {θ : Aθ ≤ b}: here "the first two
//! coefficients sum to at most 1 and the third is nonnegative".

use hdtest::hypothesis::project;
use hdtest::{
    run_test, sample_dataset, CovarianceModel, HypothesisSet, PipelineConfig, RngSeed, Subspace,
};
use ndarray::{array, Array1};

fn main() -> hdtest::Result<()> {
    let p = 6;
    let mut a = vec![vec![0.0; p]; 2];
    a[0][0] = 1.0;
    a[0][1] = 1.0;
    a[1][2] = -1.0;
    let set = HypothesisSet::polyhedral(a, vec![1.0, 0.0])?;

    let gamma = array![1.0, 0.8, -0.3, 0.0, 0.0, 0.0];
    let d = Array1::ones(p);
    let res = project(&set, gamma.view(), d.view(), &Subspace::identity(p))?;
    // The excess 0.8 in the sum is shared by two coordinates, 0.4 each.
    println!("T = {:.4}", res.t_n);
    if let Some(t) = &res.theta_p {
        println!("closest point in the weighted sup-norm: {:?}", t.to_vec());
        println!("member: {}", set.membership(t.view(), 1e-7));
    }
    println!(
        "euclidean projection: {:?}",
        set.euclidean_projection(gamma.view())?.to_vec()
    );

    let n = 400;
    let theta0 = array![0.9, 0.9, 0.0, 0.0, 0.5, 0.0];
    let data = sample_dataset(
        n,
        &CovarianceModel::Identity { p },
        &theta0,
        1.0,
        RngSeed::new(2, 0),
    )?;
    let out = run_test(
        &data,
        &set,
        0.05,
        &PipelineConfig::split(RngSeed::new(2, 1)),
    )?;
    println!(
        "θ₀ violates the sum constraint: T = {:.3}, reject = {}",
        out.t_n, out.reject
    );
    Ok(())
}
