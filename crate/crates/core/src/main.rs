use std::fs;
use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::{json, Value};

use hdtest::error::Error;
use hdtest::experiment::{self, Command, ExperimentConfig, Preset, RunOutput};

#[derive(Parser)]
#[command(
    name = "hdtest",
    version,
    about = "Monte Carlo studies for debiased high-dimensional tests and intervals"
)]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Rejection rates over a (c, rho) grid for the beta-min null.
    TableBetamin(Common),
    /// Rejection rates over a (b, rho) grid for the nonnegative cone.
    TableCone(Common),
    /// Coverage and width of linear-functional intervals as n grows.
    CiSweep(Common),
    /// Noise resampling on a fixed real design.
    RealData {
        #[command(flatten)]
        common: Common,
        /// Design matrix CSV (overrides `x_csv` in the config).
        #[arg(long)]
        x: Option<PathBuf>,
        /// Response CSV (overrides `y_csv` in the config).
        #[arg(long)]
        y: Option<PathBuf>,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum PresetArg {
    Desk,
    Paper,
}

#[derive(Args)]
struct Common {
    /// JSON object merged over the preset.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Overrides `base_seed`.
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long, default_value = "results")]
    out: PathBuf,
    /// Worker threads; all cores if absent.
    #[arg(long)]
    threads: Option<usize>,
    #[arg(long, value_enum, default_value = "desk")]
    preset: PresetArg,
}

fn load(cmd: Command, c: &Common) -> Result<(ExperimentConfig, Preset), Error> {
    let preset = match c.preset {
        PresetArg::Desk => Preset::Desk,
        PresetArg::Paper => Preset::Paper,
    };
    let mut overrides = match &c.config {
        Some(path) => {
            let text = fs::read_to_string(path)
                .map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
            serde_json::from_str::<Value>(&text)
                .map_err(|e| Error::Config(format!("{}: {e}", path.display())))?
        }
        None => json!({}),
    };
    if let (Some(seed), Some(obj)) = (c.seed, overrides.as_object_mut()) {
        obj.insert("base_seed".into(), json!(seed));
    }
    Ok((
        ExperimentConfig::from_json(cmd, preset, &overrides)?,
        preset,
    ))
}

fn run(cli: Cli) -> Result<(RunOutput, PathBuf), Error> {
    let (cmd, common) = match &cli.cmd {
        Cmd::TableBetamin(c) => (Command::TableBetamin, c),
        Cmd::TableCone(c) => (Command::TableCone, c),
        Cmd::CiSweep(c) => (Command::CiSweep, c),
        Cmd::RealData { common, .. } => (Command::RealData, common),
    };
    let (cfg, preset) = load(cmd, common)?;
    let mut pool = rayon::ThreadPoolBuilder::new();
    if let Some(t) = common.threads {
        if t == 0 {
            return Err(Error::Config("--threads must be at least 1".into()));
        }
        pool = pool.num_threads(t);
    }
    let pool = pool.build().map_err(|e| Error::Config(e.to_string()))?;
    let output = pool.install(|| match &cli.cmd {
        Cmd::TableBetamin(_) => experiment::table_betamin(&cfg, preset),
        Cmd::TableCone(_) => experiment::table_cone(&cfg, preset),
        Cmd::CiSweep(_) => experiment::ci_sweep(&cfg, preset),
        Cmd::RealData { x, y, .. } => {
            let x = x.clone().or_else(|| cfg.x_csv.clone());
            let y = y.clone().or_else(|| cfg.y_csv.clone());
            match (x, y) {
                (Some(x), Some(y)) => experiment::real_data(&cfg, preset, &x, &y),
                _ => Err(Error::Config(
                    "real-data needs --x and --y (or x_csv/y_csv)".into(),
                )),
            }
        }
    })?;
    Ok((output, common.out.clone()))
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (output, out) = match run(cli) {
        Ok(v) => v,
        Err(e @ Error::Config(_)) => {
            eprintln!("error: {e}");
            return ExitCode::from(2);
        }
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(1);
        }
    };
    let files = match output.write(&out) {
        Ok(f) => f,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(1);
        }
    };
    let report = &output.report;
    // A closed stdout (e.g. piped into `head`) must not abort the run.
    let mut stdout = std::io::stdout().lock();
    for c in &report.cells {
        let params: Vec<String> = c.params.iter().map(|(k, v)| format!("{k}={v}")).collect();
        let flag = if c.valid { "" } else { "  INVALID" };
        let _ = writeln!(
            stdout,
            "{:<28} {:.3} ± {:.3}  (failures {}/{}){flag}",
            params.join(" "),
            c.rate,
            c.se,
            c.failures,
            c.replicates
        );
    }
    let _ = writeln!(
        stdout,
        "wrote {} files to {} in {:.1}s",
        files.len(),
        out.display(),
        report.elapsed_secs
    );
    let invalid = report.invalid_cells();
    if !invalid.is_empty() {
        eprintln!("error: solver-failure budget exceeded in cells {invalid:?}");
        return ExitCode::from(3);
    }
    ExitCode::SUCCESS
}
