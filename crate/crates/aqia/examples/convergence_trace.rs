//! Energy descent of the self-consistency loop.
//!
//! Prints the total-energy trace of one realization per preset and verifies
//! it never rises, then linearizes the map at the fixed point to show the
//! contraction spectrum.
//!
//! Run with: cargo run --release --example convergence_trace

use aqia::ensemble::{sample_realization, RegimePreset};
use aqia::meanfield::{jacobian, run_to_convergence, LoopConfig};

fn main() -> aqia::Result<()> {
    let config = LoopConfig::default();
    for preset in [
        RegimePreset::critical(),
        RegimePreset::glassy(),
        RegimePreset::community(),
    ] {
        let (agents, mask) = sample_realization(&preset, 7)?;
        let (fp, trace) = run_to_convergence(&agents, &mask, &config, None)?;
        let e = &trace.energies;
        let rises = e[1..].windows(2).filter(|p| p[1] > p[0] + 1e-9).count();
        println!("== {} ==", preset.name);
        println!(
            "  converged={} iterations={} energy {:.6} -> {:.6}",
            fp.converged,
            fp.iterations,
            e[0],
            e.last().unwrap()
        );
        println!(
            "  descent violations beyond 1e-9: {rises}; damping retries: {}",
            trace.energy_retries
        );
        let shown: Vec<String> = e
            .iter()
            .step_by((e.len() / 8).max(1))
            .map(|x| format!("{x:.4}"))
            .collect();
        println!("  trace: {}", shown.join(" -> "));

        if fp.converged {
            let (_, moduli) = jacobian(&agents, &mask, &config, &fp, 1e-5)?;
            println!(
                "  spectral radius {:.4} (next: {:.4}, {:.4})\n",
                moduli[0], moduli[1], moduli[2]
            );
        }
    }
    Ok(())
}
