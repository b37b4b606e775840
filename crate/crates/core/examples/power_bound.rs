//! The analytic power lower bound as a function of separation and of the
//! projection dimension, plus the population scale m₀.

use hdtest::inference::{m0, power_f, PowerQuery};
use hdtest::num::toeplitz_cov;
use hdtest::Subspace;

fn main() -> hdtest::Result<()> {
    println!("{:>5} {:>9} {:>9} {:>9}", "x", "k=1", "k=3", "k=10");
    for i in 0..=12 {
        let x = 0.5 * i as f64;
        let f = |k| power_f(&PowerQuery { alpha: 0.05, x, k });
        println!("{x:5.1} {:9.4} {:9.4} {:9.4}", f(1)?, f(3)?, f(10)?);
    }
    // Values below zero for k > 1 are vacuous bounds, reported as computed.

    let sigma = toeplitz_cov(50, 0.6)?;
    for (name, u) in [
        ("e_0", Subspace::basis_vector(50, 0)),
        ("e_25", Subspace::basis_vector(50, 25)),
    ] {
        println!("m0({name}) = {:.4}", m0(sigma.view(), &u)?);
    }
    Ok(())
}
