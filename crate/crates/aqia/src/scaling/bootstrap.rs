//! Bootstrap confidence intervals for the collapse fit: resample disorder
//! realizations with replacement, independently at every (size, gamma) point,
//! and refit.

use rand::Rng;
use rayon::prelude::*;

use super::collapse::{ci_bounds_from, collapse_fit, collapse_variance};
use super::{FitMethod, FssDataset, FssPoint, FssRaw, ScalingFit};
use crate::error::{AqiaError, Result};
use crate::rng::{derive_seed, seeded_rng};

/// Bootstrap point estimate (medians), intervals, and the full resample
/// distributions.
#[derive(Debug, Clone)]
pub struct BootstrapOutcome {
    /// Median-convention fit with 95% percentile intervals.
    pub fit: ScalingFit,
    /// Fit on the un-resampled dataset, for reference.
    pub full_data_fit: ScalingFit,
    /// One (gamma_c, nu, beta/nu) triple per successful resample.
    pub distribution: Vec<[f64; 3]>,
    /// Resamples dropped because their fit produced non-finite parameters.
    pub excluded: usize,
}

fn mean(values: &[f64]) -> f64 {
    values.iter().sum::<f64>() / values.len() as f64
}

/// Dataset whose per-point means come from one resample draw.
fn resampled_dataset(raw: &FssRaw, rng: &mut impl Rng) -> FssDataset {
    let mut points = Vec::new();
    for (si, &n) in raw.sizes.iter().enumerate() {
        for (gi, &gamma) in raw.gammas.iter().enumerate() {
            let samples = &raw.abs_polarization[si][gi];
            let r = samples.len();
            let resampled_mean = if r == 0 {
                f64::NAN
            } else {
                (0..r).map(|_| samples[rng.gen_range(0..r)]).sum::<f64>() / r as f64
            };
            points.push(FssPoint {
                n_agents: n,
                gamma,
                mean_abs_polarization: resampled_mean,
                sem: 0.0,
                chi: 0.0,
                chi_err: 0.0,
                u4: 0.0,
                u4_err: 0.0,
                realizations: r,
            });
        }
    }
    FssDataset { points }
}

/// Bootstrap the collapse fit over `resamples` draws.
pub fn bootstrap_fit(
    raw: &FssRaw,
    resamples: usize,
    seed: u64,
    bins: usize,
) -> Result<BootstrapOutcome> {
    if resamples < 2 {
        return Err(AqiaError::InvalidInput {
            what: "bootstrap needs at least 2 resamples".into(),
        });
    }
    let full = full_dataset(raw);
    let full_data_fit = collapse_fit(&full, None, bins)?;

    let fits: Vec<Option<[f64; 3]>> = (0..resamples)
        .into_par_iter()
        .map(|b| {
            let mut rng = seeded_rng(derive_seed(seed, b as u64));
            let data = resampled_dataset(raw, &mut rng);
            match collapse_fit(&data, None, bins) {
                Ok(fit)
                    if fit.gamma_c.is_finite()
                        && fit.nu.is_finite()
                        && fit.beta_over_nu.is_finite() =>
                {
                    Some([fit.gamma_c, fit.nu, fit.beta_over_nu])
                }
                _ => None,
            }
        })
        .collect();

    let excluded = fits.iter().filter(|f| f.is_none()).count();
    let distribution: Vec<[f64; 3]> = fits.into_iter().flatten().collect();
    if distribution.len() < 2 {
        return Err(AqiaError::InvalidInput {
            what: format!("bootstrap produced only {} usable fits", distribution.len()),
        });
    }

    let mut samples = vec![
        distribution.iter().map(|f| f[0]).collect::<Vec<f64>>(),
        distribution.iter().map(|f| f[1]).collect::<Vec<f64>>(),
        distribution.iter().map(|f| f[2]).collect::<Vec<f64>>(),
    ];
    let (medians, ci) = ci_bounds_from(&mut samples);

    let points = full.collapse_points();
    let fit = ScalingFit {
        gamma_c: medians[0],
        nu: medians[1],
        beta_over_nu: medians[2],
        collapse_variance: collapse_variance(&points, medians[0], medians[1], medians[2], bins),
        ci95: Some(ci),
        method: FitMethod::Collapse,
        improved: full_data_fit.improved,
        peak_height_exponent: None,
        excluded_sizes: vec![],
    };
    Ok(BootstrapOutcome {
        fit,
        full_data_fit,
        distribution,
        excluded,
    })
}

/// Aggregate the raw samples into a plain means-only dataset.
fn full_dataset(raw: &FssRaw) -> FssDataset {
    let mut points = Vec::new();
    for (si, &n) in raw.sizes.iter().enumerate() {
        for (gi, &gamma) in raw.gammas.iter().enumerate() {
            let samples = &raw.abs_polarization[si][gi];
            points.push(FssPoint {
                n_agents: n,
                gamma,
                mean_abs_polarization: mean(samples),
                sem: 0.0,
                chi: 0.0,
                chi_err: 0.0,
                u4: 0.0,
                u4_err: 0.0,
                realizations: samples.len(),
            });
        }
    }
    FssDataset { points }
}
