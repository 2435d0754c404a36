//! Prints the Monte-Carlo table for the default replication scenario.
//!
//! Usage: `cargo run --release --example replication [runs] [scenario.json]`

use hybridloc_core::{run_monte_carlo, FusionMode, MonteCarloOptions, ScenarioSpec};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let mut args = std::env::args().skip(1);
    let runs = args.next().map(|s| s.parse()).transpose()?.unwrap_or(20);
    let spec = match args.next() {
        Some(path) => serde_json::from_str(&std::fs::read_to_string(path)?)?,
        None => ScenarioSpec::replication(),
    };
    let opts = MonteCarloOptions {
        n_runs: runs,
        modes: FusionMode::ALL.to_vec(),
        ..Default::default()
    };
    let table = run_monte_carlo(&spec, &opts)?;
    println!(
        "q={:.3e} r={:.3e} k=({:.4}, {:.4})",
        table.filter.q, table.filter.r, table.gain.kx, table.gain.ky
    );
    for row in &table.rows {
        println!(
            "{:<13} mean {:.3}  std {:.3}  max {:.3}",
            row.mode.as_str(),
            row.mean_rmse,
            row.std_rmse,
            row.mean_max_error
        );
    }
    Ok(())
}
