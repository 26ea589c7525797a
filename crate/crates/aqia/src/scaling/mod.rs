//! Cross-regime scaling analyses: hysteresis sweeps, finite-size-scaling
//! datasets and collapse fits, and bootstrap confidence intervals.

mod bootstrap;
mod collapse;
mod simplex;

pub use bootstrap::{bootstrap_fit, BootstrapOutcome};
pub use collapse::{
    binder_crossing_fit, collapse_fit, collapse_variance, peak_scaling_fit, CollapsePoint,
};
pub use simplex::{nelder_mead, SimplexResult};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::diagnostics::{binder_cumulant, susceptibility};
use crate::ensemble::{mean_polarization, run_ensemble, sample_realization, RegimePreset};
use crate::error::{AqiaError, Result};
use crate::meanfield::{apply_map, bare_summaries, LoopConfig};
use crate::rng::derive_seed;

/// Forward/backward polarization branches over a swept coupling ratio.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepResult {
    /// Coupling-to-transverse-field ratios visited (ascending).
    pub ratios: Vec<f64>,
    /// Ensemble-mean signed polarization on the ascending pass.
    pub forward: Vec<f64>,
    /// Same quantity on the descending pass, aligned to `ratios`.
    pub backward: Vec<f64>,
    /// |trapezoidal integral of (forward - backward)| over the ratios.
    pub loop_area: f64,
}

/// One aggregated finite-size-scaling sample point.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FssPoint {
    pub n_agents: usize,
    pub gamma: f64,
    pub mean_abs_polarization: f64,
    pub sem: f64,
    pub chi: f64,
    pub chi_err: f64,
    pub u4: f64,
    pub u4_err: f64,
    pub realizations: usize,
}

/// Aggregated order-parameter, susceptibility, and Binder-cumulant data over
/// (system size, transverse field) grid points.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct FssDataset {
    pub points: Vec<FssPoint>,
}

impl FssDataset {
    /// Distinct system sizes, ascending.
    pub fn sizes(&self) -> Vec<usize> {
        let mut s: Vec<usize> = self.points.iter().map(|p| p.n_agents).collect();
        s.sort_unstable();
        s.dedup();
        s
    }

    /// Points of one size, sorted by transverse field.
    pub fn curve(&self, n_agents: usize) -> Vec<&FssPoint> {
        let mut c: Vec<&FssPoint> = self
            .points
            .iter()
            .filter(|p| p.n_agents == n_agents)
            .collect();
        c.sort_by(|a, b| a.gamma.partial_cmp(&b.gamma).unwrap());
        c
    }
}

/// Per-realization raw samples behind an [`FssDataset`], the unit the
/// bootstrap resamples.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FssRaw {
    pub sizes: Vec<usize>,
    pub gammas: Vec<f64>,
    /// `abs_polarization[size_idx][gamma_idx][realization]` = per-realization
    /// mean |S|.
    pub abs_polarization: Vec<Vec<Vec<f64>>>,
    /// Signed per-realization mean polarization (Binder-cumulant samples).
    pub polarization: Vec<Vec<Vec<f64>>>,
}

/// Signed mean polarization of a warm-started ensemble along an arbitrary
/// coupling-ratio schedule, with a fixed number of map applications per step.
///
/// Incomplete relaxation is the point: the returned curve lags the schedule,
/// and that lag is what the hysteresis loop measures. Disorder is drawn once
/// per realization; rescaling the mean coupling shifts every bond coherently.
pub fn polarization_schedule(
    preset: &RegimePreset,
    schedule: &[f64],
    iters_per_step: usize,
    master_seed: u64,
    config: &LoopConfig,
) -> Result<Vec<f64>> {
    if iters_per_step == 0 {
        return Err(AqiaError::InvalidInput {
            what: "iters_per_step must be at least 1".into(),
        });
    }
    let per_real: Vec<Vec<f64>> = (0..preset.realizations)
        .into_par_iter()
        .map(|r| -> Result<Vec<f64>> {
            let seed = derive_seed(master_seed, r as u64);
            let mut summaries = None;
            let mut curve = Vec::with_capacity(schedule.len());
            for &ratio in schedule {
                let mut p = preset.clone();
                p.mean_coupling = ratio * preset.transverse;
                let (agents, mask) = sample_realization(&p, seed)?;
                let mut m = match summaries {
                    Some(m) => m,
                    None => bare_summaries(&agents)?,
                };
                for _ in 0..iters_per_step {
                    m = apply_map(&agents, &m, &mask, config)?.summaries;
                }
                curve.push(mean_polarization(&m));
                summaries = Some(m);
            }
            Ok(curve)
        })
        .collect::<Result<_>>()?;

    let n = schedule.len();
    Ok((0..n)
        .map(|i| per_real.iter().map(|c| c[i]).sum::<f64>() / per_real.len() as f64)
        .collect())
}

/// Trapezoidal integral of `y` over `x`.
fn trapezoid(x: &[f64], y: &[f64]) -> f64 {
    x.windows(2)
        .zip(y.windows(2))
        .map(|(xs, ys)| 0.5 * (ys[0] + ys[1]) * (xs[1] - xs[0]))
        .sum()
}

/// Sweep the coupling ratio up the grid and back down, warm-starting each
/// step, and measure the enclosed polarization loop.
pub fn hysteresis_sweep(
    preset: &RegimePreset,
    ratios: &[f64],
    iters_per_step: usize,
    master_seed: u64,
    config: &LoopConfig,
) -> Result<SweepResult> {
    if ratios.len() < 2 || !ratios.windows(2).all(|p| p[1] > p[0]) {
        return Err(AqiaError::InvalidInput {
            what: "hysteresis ratio grid must be strictly increasing with at least 2 points"
                .into(),
        });
    }
    let mut schedule = ratios.to_vec();
    schedule.extend(ratios.iter().rev());
    let curve = polarization_schedule(preset, &schedule, iters_per_step, master_seed, config)?;

    let m = ratios.len();
    let forward = curve[..m].to_vec();
    let mut backward: Vec<f64> = curve[m..].to_vec();
    backward.reverse();
    let diff: Vec<f64> = forward.iter().zip(&backward).map(|(f, b)| f - b).collect();
    let loop_area = trapezoid(ratios, &diff).abs();
    Ok(SweepResult {
        ratios: ratios.to_vec(),
        forward,
        backward,
        loop_area,
    })
}

/// Simulate the finite-size-scaling raw dataset: every (size, gamma) cell
/// runs the full disorder ensemble with a shared master seed so realization
/// r keeps its disorder draw across the grid.
pub fn fss_scan(
    base: &RegimePreset,
    sizes: &[usize],
    gammas: &[f64],
    master_seed: u64,
    config: &LoopConfig,
) -> Result<FssRaw> {
    if sizes.is_empty() || gammas.is_empty() {
        return Err(AqiaError::InvalidInput {
            what: "fss scan needs non-empty size and gamma axes".into(),
        });
    }
    let cells: Vec<(Vec<f64>, Vec<f64>)> = sizes
        .iter()
        .flat_map(|&n| gammas.iter().map(move |&g| (n, g)))
        .collect::<Vec<_>>()
        .into_par_iter()
        .map(|(n, gamma)| -> Result<(Vec<f64>, Vec<f64>)> {
            let mut p = base.clone();
            p.n_agents = n;
            p.transverse = gamma;
            let rec = run_ensemble(&p, master_seed, config)?;
            Ok((
                rec.results.iter().map(|r| r.mean_abs_polarization).collect(),
                rec.results.iter().map(|r| r.mean_polarization).collect(),
            ))
        })
        .collect::<Result<_>>()?;

    let ng = gammas.len();
    let mut abs_polarization = Vec::with_capacity(sizes.len());
    let mut polarization = Vec::with_capacity(sizes.len());
    for (si, _) in sizes.iter().enumerate() {
        let mut row_abs = Vec::with_capacity(ng);
        let mut row_pol = Vec::with_capacity(ng);
        for gi in 0..ng {
            let (a, p) = &cells[si * ng + gi];
            row_abs.push(a.clone());
            row_pol.push(p.clone());
        }
        abs_polarization.push(row_abs);
        polarization.push(row_pol);
    }
    Ok(FssRaw {
        sizes: sizes.to_vec(),
        gammas: gammas.to_vec(),
        abs_polarization,
        polarization,
    })
}

fn mean_and_sem(values: &[f64]) -> (f64, f64) {
    let r = values.len() as f64;
    let mean = values.iter().sum::<f64>() / r;
    let sem = if values.len() > 1 {
        let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (r - 1.0);
        (var / r).sqrt()
    } else {
        0.0
    };
    (mean, sem)
}

/// Leave-one-out jackknife standard error of the Binder cumulant.
fn binder_jackknife_err(samples: &[f64]) -> f64 {
    let r = samples.len();
    if r < 3 {
        return 0.0;
    }
    let mut estimates = Vec::with_capacity(r);
    for skip in 0..r {
        let subset: Vec<f64> = samples
            .iter()
            .enumerate()
            .filter(|(i, _)| *i != skip)
            .map(|(_, &v)| v)
            .collect();
        if let Ok(u4) = binder_cumulant(&subset) {
            estimates.push(u4);
        }
    }
    if estimates.len() < 2 {
        return 0.0;
    }
    let m = estimates.len() as f64;
    let mean = estimates.iter().sum::<f64>() / m;
    let var = estimates.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() * (m - 1.0) / m;
    var.sqrt()
}

impl FssDataset {
    /// Aggregate a raw per-realization scan into dataset rows: means with
    /// standard errors, the susceptibility along each size's gamma curve
    /// (with propagated uncertainty), and the Binder cumulant over
    /// per-realization mean polarizations (jackknife uncertainty).
    pub fn from_raw(raw: &FssRaw) -> Result<FssDataset> {
        let mut points = Vec::new();
        for (si, &n) in raw.sizes.iter().enumerate() {
            let stats: Vec<(f64, f64)> = raw.abs_polarization[si]
                .iter()
                .map(|reals| mean_and_sem(reals))
                .collect();
            let curve: Vec<(f64, f64)> = raw
                .gammas
                .iter()
                .zip(&stats)
                .map(|(&g, &(mean, _))| (g, mean))
                .collect();
            let chi = susceptibility(&curve)?;
            let m = raw.gammas.len();
            for (gi, &gamma) in raw.gammas.iter().enumerate() {
                let (lo, hi) = if gi == 0 {
                    (0, 1)
                } else if gi == m - 1 {
                    (m - 2, m - 1)
                } else {
                    (gi - 1, gi + 1)
                };
                let chi_err = (stats[lo].1.powi(2) + stats[hi].1.powi(2)).sqrt()
                    / (raw.gammas[hi] - raw.gammas[lo]);
                let pol_samples = &raw.polarization[si][gi];
                let (u4, u4_err) = match binder_cumulant(pol_samples) {
                    Ok(u4) => (u4, binder_jackknife_err(pol_samples)),
                    Err(_) => (f64::NAN, f64::NAN),
                };
                points.push(FssPoint {
                    n_agents: n,
                    gamma,
                    mean_abs_polarization: stats[gi].0,
                    sem: stats[gi].1,
                    chi: chi[gi].1,
                    chi_err,
                    u4,
                    u4_err,
                    realizations: pol_samples.len(),
                });
            }
        }
        Ok(FssDataset { points })
    }
}

/// Fitted critical point and exponents with their provenance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScalingFit {
    pub gamma_c: f64,
    pub nu: f64,
    pub beta_over_nu: f64,
    /// Collapse objective evaluated at the fitted parameters.
    pub collapse_variance: f64,
    /// Bootstrap 95% intervals, when a bootstrap produced them.
    pub ci95: Option<CiBounds>,
    pub method: FitMethod,
    /// False when no optimizer start improved on its initial guess.
    pub improved: bool,
    /// Exponent of the peak-susceptibility growth (peak-scaling method).
    pub peak_height_exponent: Option<f64>,
    /// Sizes dropped because their susceptibility peaked on the grid edge.
    pub excluded_sizes: Vec<usize>,
}

/// Per-parameter 95% bootstrap intervals.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CiBounds {
    pub gamma_c: (f64, f64),
    pub nu: (f64, f64),
    pub beta_over_nu: (f64, f64),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum FitMethod {
    Collapse,
    BinderCrossing,
    PeakScaling,
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn tiny_preset() -> RegimePreset {
        RegimePreset {
            name: "tiny".into(),
            n_agents: 6,
            n_qubits: 2,
            realizations: 2,
            ..RegimePreset::critical()
        }
    }

    #[test]
    fn schedule_reversal_mirrors_branches() {
        // In the periodic steady cycle (after burn-in cycles), traversing
        // the grid down-then-up swaps the roles of the two branches and
        // leaves the enclosed area unchanged. The very first cycle carries
        // the initial transient and is direction-dependent, so cycle 3 is
        // compared.
        let preset = tiny_preset();
        let config = LoopConfig::default();
        let ratios = vec![0.6, 0.9, 1.2, 1.5];
        let up: Vec<f64> = ratios.clone();
        let down: Vec<f64> = ratios.iter().rev().cloned().collect();

        let cycles = 3;
        let mut sched_a = Vec::new();
        let mut sched_b = Vec::new();
        for _ in 0..cycles {
            sched_a.extend(up.clone());
            sched_a.extend(down.clone());
            sched_b.extend(down.clone());
            sched_b.extend(up.clone());
        }
        let a = polarization_schedule(&preset, &sched_a, 2, 7, &config).unwrap();
        let b = polarization_schedule(&preset, &sched_b, 2, 7, &config).unwrap();

        let m = ratios.len();
        let last = 2 * m * (cycles - 1);
        let fwd_a: Vec<f64> = a[last..last + m].to_vec();
        let mut bwd_a: Vec<f64> = a[last + m..last + 2 * m].to_vec();
        bwd_a.reverse();
        let mut fwd_b: Vec<f64> = b[last..last + m].to_vec();
        fwd_b.reverse();
        let bwd_b: Vec<f64> = b[last + m..last + 2 * m].to_vec();

        let diff_a: Vec<f64> = fwd_a.iter().zip(&bwd_a).map(|(x, y)| x - y).collect();
        let diff_b: Vec<f64> = bwd_b.iter().zip(&fwd_b).map(|(x, y)| x - y).collect();
        let area_a = trapezoid(&ratios, &diff_a).abs();
        let area_b = trapezoid(&ratios, &diff_b).abs();
        assert_relative_eq!(area_a, area_b, max_relative = 1e-6);
    }

    #[test]
    fn no_feedback_closes_loop() {
        let preset = tiny_preset();
        let config = LoopConfig {
            feedback: false,
            ..LoopConfig::default()
        };
        let sweep = hysteresis_sweep(&preset, &[0.5, 1.0, 1.5], 1, 3, &config).unwrap();
        for (f, b) in sweep.forward.iter().zip(&sweep.backward) {
            assert_relative_eq!(f, b, epsilon = 1e-9);
        }
        assert!(sweep.loop_area < 1e-9);
    }

    #[test]
    fn rejects_bad_grids() {
        let preset = tiny_preset();
        let config = LoopConfig::default();
        assert!(hysteresis_sweep(&preset, &[1.0], 1, 1, &config).is_err());
        assert!(hysteresis_sweep(&preset, &[1.0, 0.5], 1, 1, &config).is_err());
        assert!(hysteresis_sweep(&preset, &[0.5, 1.0], 0, 1, &config).is_err());
    }

    #[test]
    fn dataset_aggregation_shapes() {
        let raw = FssRaw {
            sizes: vec![4, 6],
            gammas: vec![0.8, 1.0, 1.2],
            abs_polarization: vec![
                vec![vec![0.9, 0.8], vec![0.7, 0.6], vec![0.4, 0.5]],
                vec![vec![0.85, 0.8], vec![0.6, 0.65], vec![0.35, 0.4]],
            ],
            polarization: vec![
                vec![vec![0.9, -0.9], vec![0.7, -0.7], vec![0.4, -0.4]],
                vec![vec![0.85, -0.85], vec![0.6, -0.6], vec![0.35, -0.35]],
            ],
        };
        let ds = FssDataset::from_raw(&raw).unwrap();
        assert_eq!(ds.points.len(), 6);
        assert_eq!(ds.sizes(), vec![4, 6]);
        let curve = ds.curve(4);
        assert_eq!(curve.len(), 3);
        assert_relative_eq!(curve[0].mean_abs_polarization, 0.85, epsilon = 1e-12);
        // chi at the middle point is the central difference.
        let expect = -(curve[2].mean_abs_polarization - curve[0].mean_abs_polarization) / 0.4;
        assert_relative_eq!(curve[1].chi, expect, epsilon = 1e-12);
        // +-s samples give the two-point Binder value 2/3.
        assert_relative_eq!(curve[0].u4, 2.0 / 3.0, epsilon = 1e-12);
    }
}
