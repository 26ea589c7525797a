//! The three regime presets side by side.
//!
//! Runs a reduced disorder ensemble for each preset and prints the
//! order-parameter table: Edwards-Anderson overlap, its coefficient of
//! variation, mean absolute polarization, and modularity.
//!
//! Run with: cargo run --release --example run_preset

use aqia::ensemble::{run_ensemble, RegimePreset};
use aqia::meanfield::LoopConfig;

fn main() -> aqia::Result<()> {
    let config = LoopConfig::default();
    println!(
        "{:<10} {:>7} {:>7} {:>7} {:>7} {:>10} {:>8}",
        "preset", "qEA", "CV", "<|S|>", "Q", "converged", "iters"
    );
    for preset in [
        RegimePreset::critical(),
        RegimePreset::glassy(),
        RegimePreset::community(),
    ] {
        let mut p = preset;
        p.realizations = 10; // reduced from 50 to keep the demo quick
        let rec = run_ensemble(&p, 2024, &config)?;
        let converged = rec
            .results
            .iter()
            .filter(|r| r.fixed_point.converged)
            .count();
        let mean_iters = rec
            .results
            .iter()
            .map(|r| r.fixed_point.iterations)
            .sum::<usize>()
            / rec.results.len();
        println!(
            "{:<10} {:>7.3} {:>7.3} {:>7.3} {:>7.3} {:>7}/{:<2} {:>8}",
            p.name,
            rec.qea.mean,
            rec.cv_qea,
            rec.mean_abs_polarization.mean,
            rec.modularity.mean,
            converged,
            rec.results.len(),
            mean_iters
        );
    }
    println!("\nexpected ordering: qEA critical > community > glassy,");
    println!("                   CV  glassy > community > critical");
    Ok(())
}
