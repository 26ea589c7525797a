//! Finite-size scaling on simulated data: scan, then fit the critical point
//! and exponents three independent ways.
//!
//! Uses a reduced grid so it finishes in a couple of minutes; the aqia `fss`
//! subcommand runs the full paper-scale version.
//!
//! Run with: cargo run --release --example fss_collapse

use aqia::ensemble::RegimePreset;
use aqia::meanfield::LoopConfig;
use aqia::scaling::{
    binder_crossing_fit, collapse_fit, fss_scan, peak_scaling_fit, FssDataset,
};

fn main() -> aqia::Result<()> {
    let mut preset = RegimePreset::critical();
    preset.realizations = 8;
    let sizes = [12, 18, 24, 32];
    let gammas: Vec<f64> = (0..9).map(|i| 0.6 + 0.1 * i as f64).collect();

    println!("scanning sizes {sizes:?} over {} gamma points ...", gammas.len());
    let raw = fss_scan(&preset, &sizes, &gammas, 2024, &LoopConfig::default())?;
    let data = FssDataset::from_raw(&raw)?;

    for &n in &sizes {
        let curve = data.curve(n);
        let s: Vec<String> = curve
            .iter()
            .map(|p| format!("{:.3}", p.mean_abs_polarization))
            .collect();
        println!("N={n:<3} <|S|>: {}", s.join(" "));
    }

    println!("\nfits:");
    match collapse_fit(&data, None, 20) {
        Ok(f) => println!(
            "  collapse        Gamma_c={:.3} nu={:.3} beta/nu={:.3} (variance {:.2e})",
            f.gamma_c, f.nu, f.beta_over_nu, f.collapse_variance
        ),
        Err(e) => println!("  collapse        failed: {e}"),
    }
    match binder_crossing_fit(&data, 20) {
        Ok(f) => println!(
            "  binder-crossing Gamma_c={:.3} nu={:.3} beta/nu={:.3}",
            f.gamma_c, f.nu, f.beta_over_nu
        ),
        Err(e) => println!("  binder-crossing failed: {e}"),
    }
    match peak_scaling_fit(&data, 20) {
        Ok(f) => println!(
            "  peak-scaling    Gamma_c={:.3} nu={:.3} beta/nu={:.3} chi_max ~ N^{:.2}",
            f.gamma_c,
            f.nu,
            f.beta_over_nu,
            f.peak_height_exponent.unwrap_or(f64::NAN)
        ),
        Err(e) => println!("  peak-scaling    failed: {e}"),
    }
    Ok(())
}
