//! Adaptive hysteresis: sweeping the coupling ratio opens a loop.
//!
//! The couplings react to summaries measured one iteration earlier, so a
//! fast sweep (few iterations per step) lags and encloses area; a slow sweep
//! nearly closes, and disabling feedback closes it exactly.
//!
//! Run with: cargo run --release --example hysteresis_loop

use aqia::ensemble::RegimePreset;
use aqia::meanfield::LoopConfig;
use aqia::scaling::hysteresis_sweep;

fn main() -> aqia::Result<()> {
    let mut preset = RegimePreset::critical();
    preset.n_agents = 16;
    preset.realizations = 4;
    let ratios: Vec<f64> = (0..9).map(|i| 0.5 + 0.125 * i as f64).collect();
    let config = LoopConfig::default();

    for (label, iters) in [("fast (1 iter/step)", 1), ("slow (30 iters/step)", 30)] {
        let sweep = hysteresis_sweep(&preset, &ratios, iters, 5, &config)?;
        println!("{label}: loop area = {:.4}", sweep.loop_area);
        for ((r, f), b) in ratios
            .iter()
            .zip(&sweep.forward)
            .zip(&sweep.backward)
        {
            println!("  J/Gamma {r:>5.3}  up {f:>7.3}  down {b:>7.3}");
        }
    }

    let no_feedback = LoopConfig {
        feedback: false,
        ..config
    };
    let sweep = hysteresis_sweep(&preset, &ratios, 1, 5, &no_feedback)?;
    println!("feedback disabled: loop area = {:.2e}", sweep.loop_area);
    Ok(())
}
