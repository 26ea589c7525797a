//! A small (J, Gamma) phase-diagram grid around the critical point.
//!
//! Prints the mean-|S| and susceptibility maps; the susceptibility ridge
//! marks the crossover between the ordered and disordered regions.
//!
//! Run with: cargo run --release --example phase_diagram

use aqia::ensemble::{sweep_grid, RegimePreset};
use aqia::meanfield::LoopConfig;

fn main() -> aqia::Result<()> {
    let mut preset = RegimePreset::critical();
    preset.realizations = 6;
    preset.n_agents = 20;
    let couplings = [0.6, 1.0, 1.4];
    let transverse = [0.6, 0.8, 1.0, 1.2, 1.4];
    let grid = sweep_grid(&preset, &couplings, &transverse, 11, &LoopConfig::default())?;

    let header: Vec<String> = transverse.iter().map(|g| format!("{g:>8.2}")).collect();
    println!("mean |S|  (rows: J, columns: Gamma)");
    println!("        {}", header.join(""));
    for (ji, &j) in couplings.iter().enumerate() {
        let row: Vec<String> = (0..transverse.len())
            .map(|gi| format!("{:>8.3}", grid.mean_abs_polarization[(ji, gi)]))
            .collect();
        println!("J={j:>4.1}  {}", row.join(""));
    }
    println!("\nsusceptibility chi = -d<|S|>/dGamma");
    println!("        {}", header.join(""));
    for (ji, &j) in couplings.iter().enumerate() {
        let row: Vec<String> = (0..transverse.len())
            .map(|gi| format!("{:>8.3}", grid.susceptibility[(ji, gi)]))
            .collect();
        println!("J={j:>4.1}  {}", row.join(""));
    }
    Ok(())
}
