//! Runs an experiment from a JSON config and writes its report.
//!
//! `cargo run --release --example run_config -- config.json out/`

use std::path::PathBuf;

use spectral_cns::harness::{run_experiment, Experiment, ExperimentConfig};

fn main() -> spectral_cns::Result<()> {
    let args: Vec<String> = std::env::args().collect();
    let cfg = match args.get(1) {
        Some(path) => ExperimentConfig::load(&PathBuf::from(path))?,
        None => ExperimentConfig::preset(Experiment::HeatSmoke, 1),
    };
    let report = run_experiment(&cfg)?;
    println!("{}", report.summary());
    if let Some(dir) = args.get(2) {
        for path in report.write(&PathBuf::from(dir), true)? {
            println!("wrote {}", path.display());
        }
    }
    Ok(())
}
