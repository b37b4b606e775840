//! The noise-resampling protocol on a design read from CSV. A synthetic
//! design stands in for a real one here; point `--x/--y` of the binary at
//! your own files for the real thing.

use std::fmt::Write as _;
use std::fs;

use hdtest::experiment::{real_data, Command, ExperimentConfig, Preset};
use hdtest::{make_signal, sample_dataset, CovarianceModel, RngSeed};
use serde_json::json;

fn main() -> hdtest::Result<()> {
    let (n, p) = (120, 80);
    let theta = make_signal(p, 4, 1.5, RngSeed::new(9, 0))?;
    let data = sample_dataset(
        n,
        &CovarianceModel::Toeplitz { p, rho: 0.3 },
        &theta,
        1.0,
        RngSeed::new(9, 1),
    )?;

    let dir = std::env::temp_dir().join("hdtest-real");
    fs::create_dir_all(&dir).expect("temp dir");
    let (mut xs, mut ys) = (String::new(), String::new());
    for i in 0..n {
        let row: Vec<String> = data.x.row(i).iter().map(|v| v.to_string()).collect();
        writeln!(xs, "{}", row.join(",")).unwrap();
        writeln!(ys, "{}", data.y[i]).unwrap();
    }
    let (x_path, y_path) = (dir.join("x.csv"), dir.join("y.csv"));
    fs::write(&x_path, xs).expect("write x");
    fs::write(&y_path, ys).expect("write y");

    let cfg = ExperimentConfig::from_json(
        Command::RealData,
        Preset::Desk,
        &json!({ "replicates": 50, "grid": { "sigma": [0.5, 2.0] } }),
    )?;
    let run = real_data(&cfg, Preset::Desk, &x_path, &y_path)?;
    println!(
        "support of the initial fit: {}",
        run.report.extras["support_size"]
    );
    for cell in &run.report.cells {
        println!(
            "sigma = {:<4} {:<8} coverage {:.2}  mean width {:.3}",
            cell.param("sigma").unwrap(),
            cell.params["functional"].as_str().unwrap(),
            cell.rate,
            cell.mean_width.unwrap_or(f64::NAN)
        );
    }
    Ok(())
}
