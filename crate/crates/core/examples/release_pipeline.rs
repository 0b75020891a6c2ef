//! The full release-level run on CSV files: mine, plan, evaluate.
//!
//! `cargo run --example release_pipeline [out-dir]`

use std::path::PathBuf;

use counteract::dataset::write_release_csv;
use counteract::pipeline::{run_all, RunConfig, MANIFEST};
use counteract::synth::{planted_releases, PlantedConfig};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let out: PathBuf = std::env::args().nth(1).map(Into::into).unwrap_or_else(|| "run-release".into());
    std::fs::create_dir_all(&out)?;
    let mut releases = Vec::new();
    for snap in planted_releases(&PlantedConfig::default()) {
        let path = out.join(format!("planted-{}.csv", snap.version));
        write_release_csv(&snap, &path)?;
        releases.push(path);
    }
    let config = RunConfig {
        releases,
        seed: 1,
        out: out.clone(),
        ..RunConfig::default()
    };
    let report = run_all(&config)?;
    print!("{}", report.to_markdown());
    println!("\nartifacts and {MANIFEST} written to {}", out.display());
    Ok(())
}
