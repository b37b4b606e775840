//! A shrunken beta-min table through the library, written to disk the same
//! way the binary does it.

use hdtest::experiment::{table_betamin, Command, ExperimentConfig, Preset};
use serde_json::json;

fn main() -> hdtest::Result<()> {
    let overrides = json!({
        "n": 120, "p": 150, "s0": 3, "replicates": 40,
        "grid": { "c": [1.0, 1.5, 2.0], "rho": [0.3] }
    });
    let cfg = ExperimentConfig::from_json(Command::TableBetamin, Preset::Desk, &overrides)?;
    let run = table_betamin(&cfg, Preset::Desk)?;
    for cell in &run.report.cells {
        println!(
            "c = {:.1}  rho = {:.1}  rejection {:.3} ± {:.3}",
            cell.param("c").unwrap(),
            cell.param("rho").unwrap(),
            cell.rate,
            cell.se
        );
    }
    let dir = std::env::temp_dir().join("hdtest-grid");
    for path in run.write(&dir)? {
        println!("wrote {}", path.display());
    }
    Ok(())
}
