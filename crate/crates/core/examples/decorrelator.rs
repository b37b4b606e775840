//! Decorrelating directions for a sparse and a dense target, and what the
//! choice of μ does to them.

use hdtest::decorrelate::{self, default_mu, QpOptions};
use hdtest::num::symmetric_eigen_desc;
use hdtest::{CovarianceModel, DesignSampler, RngSeed, Subspace};

fn main() -> hdtest::Result<()> {
    let (n, p) = (300, 200);
    let cov = CovarianceModel::Toeplitz { p, rho: 0.5 };
    let x = DesignSampler::new(&cov)?.design(n, RngSeed::new(3, 0));
    let sigma_hat = x.t().dot(&x) / n as f64;
    let opts = QpOptions::default();
    let mu = default_mu(n, p);
    println!("default mu = {mu:.4}");

    let e0 = Subspace::basis_vector(p, 0);
    let d = decorrelate::build(sigma_hat.view(), &e0, mu, &opts)?;
    println!(
        "e_0:       g'Σ̂g = {:.4}  coherence = {:.4}  nonzeros = {}",
        d.objective[0],
        d.coherence,
        d.g.iter().filter(|v| **v != 0.0).count()
    );

    // A dense unit vector: every entry is far below the default μ, so g = 0
    // is feasible and the correction disappears.
    let (_, vecs) = symmetric_eigen_desc(cov.matrix()?.view());
    let top = Subspace::unit(vecs.column(0))?;
    let plain = decorrelate::build(sigma_hat.view(), &top, mu, &opts)?;
    println!(
        "top eigvec, plain:    g'Σ̂g = {:.4}  mu = {:.4}",
        plain.objective[0], plain.mu_used[0]
    );
    let rel = decorrelate::build_relative(sigma_hat.view(), &top, mu, 0.05, &opts)?;
    println!(
        "top eigvec, relative: g'Σ̂g = {:.4}  mu = {:.4}  coherence = {:.4}",
        rel.objective[0], rel.mu_used[0], rel.coherence
    );

    for mu in [0.4, 0.2, 0.1, 0.05] {
        let s = decorrelate::solve_column(sigma_hat.view(), e0.column(0), mu, &opts)?;
        println!(
            "mu = {mu:<5} objective {:.4}  sweeps {}",
            s.objective, s.sweeps
        );
    }
    Ok(())
}
