//! Exact diagonalization of a single agent patch.
//!
//! Builds a small transverse-field Ising patch, solves it exactly, and
//! checks the single-qubit polarization law <Z> = h / sqrt(h^2 + G^2)
//! against the closed form.
//!
//! Run with: cargo run --release --example single_patch

use aqia::agent::{bare_summary, build_hamiltonian, ground_state, AgentParams};

fn main() -> aqia::Result<()> {
    // A 6-qubit chain with uniform couplings near the critical balance.
    let n = 6;
    let params = AgentParams::new(
        n,
        AgentParams::chain_bonds(n),
        vec![0.1; n],
        vec![1.0; n - 1],
        1.0,
    )?;
    let h = build_hamiltonian(&params);
    let gs = ground_state(&h);
    let summary = bare_summary(&params)?;
    println!("6-qubit chain, J = 1, h = 0.1, Gamma = 1");
    println!("  ground energy   {:.6}", gs.energy);
    println!("  polarization S  {:.6}", summary.polarization);
    println!("  bond corr B     {:.6}", summary.bond_corr);
    println!("  energy/qubit U  {:.6}", summary.energy);

    println!("\nsingle-qubit law <Z> = h / sqrt(h^2 + Gamma^2):");
    for (h_field, gamma) in [(0.5, 1.0), (1.0, 1.0), (2.0, 0.5)] {
        let qubit = AgentParams::new(1, vec![], vec![h_field], vec![], gamma)?;
        let measured = bare_summary(&qubit)?.polarization;
        let exact = h_field / (h_field * h_field + gamma * gamma).sqrt();
        println!(
            "  h={h_field:.1} Gamma={gamma:.1}  measured {measured:.10}  exact {exact:.10}  |diff| {:.1e}",
            (measured - exact).abs()
        );
    }
    Ok(())
}
