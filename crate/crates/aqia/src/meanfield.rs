//! The ensemble self-consistency map and its convergence loop.
//!
//! One application of the map: ensemble statistics -> weight channels ->
//! renormalized fields -> per-agent mean-field ground states -> new
//! summaries. Iterating to an energy fixed point yields the adaptive
//! equilibrium; the Jacobian of the map at that point measures local
//! contraction.

use nalgebra::DMatrix;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::agent::{
    bare_summary, build_mf_hamiltonian, ground_state, measure_summaries, AgentParams,
    FeedbackFields, Summary,
};
use crate::error::{AqiaError, Result};
use crate::kernels::{
    channel_weights, compute_stats, renormalized_fields, ChannelWeights, FieldNorm, KernelConfig,
};

/// Loop controls for the self-consistency iteration.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LoopConfig {
    /// Stop once successive total energies differ by less than this.
    pub tol: f64,
    pub max_iters: usize,
    /// Mixing weight eta in (0, 1]: new = (1 - eta) * old + eta * map(old).
    pub mixing: f64,
    /// Keep per-iteration summaries in the trace (energies are always kept).
    pub record_trace: bool,
    /// Kill all feedback channels (agents decouple); used by controls.
    pub feedback: bool,
    /// Start from uniform-random summaries instead of the bare ground
    /// states; the ensemble layer seeds the draw per realization.
    pub random_init: bool,
    pub kernel: KernelConfig,
}

impl Default for LoopConfig {
    fn default() -> Self {
        Self {
            tol: 1e-6,
            max_iters: 2000,
            mixing: 1.0,
            record_trace: false,
            feedback: true,
            random_init: false,
            kernel: KernelConfig::default(),
        }
    }
}

/// Energy history of one run; optionally the full summary history.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct IterationTrace {
    /// Total energy at the initial state and after every accepted iteration.
    pub energies: Vec<f64>,
    pub summaries_per_iter: Option<Vec<Vec<Summary>>>,
    /// Times the monotonicity guard re-ran a step at half mixing.
    pub energy_retries: usize,
    /// Largest componentwise summary change over the final iteration.
    pub final_residual: f64,
}

/// Converged (or max-iteration) state of the ensemble map.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FixedPoint {
    pub summaries: Vec<Summary>,
    pub energy: f64,
    pub iterations: usize,
    pub converged: bool,
    pub fields: Vec<FeedbackFields>,
    #[serde(skip)]
    pub weights: Option<ChannelWeights>,
}

/// Result of a single map application.
#[derive(Debug, Clone)]
pub struct MapStep {
    /// Output summaries after mixing.
    pub summaries: Vec<Summary>,
    /// Raw ground-state summaries before mixing.
    pub raw_summaries: Vec<Summary>,
    pub fields: Vec<FeedbackFields>,
    pub weights: ChannelWeights,
}

/// Mean-field energy functional: bare per-agent energies minus the pairwise
/// channel interactions, with cross channels symmetrized so the renormalized
/// fields are exactly its (frozen-weight) gradient.
pub fn energy_functional(summaries: &[Summary], w: &ChannelWeights, norm: FieldNorm) -> f64 {
    let n = summaries.len();
    let degrees = match norm {
        FieldNorm::Sum => None,
        FieldNorm::MeanPartners => Some(crate::kernels::mask_degrees(&w.mask)),
    };
    let mut onsite = 0.0;
    for s in summaries {
        onsite += s.energy;
    }
    let mut interaction = 0.0;
    for i in 0..n {
        for j in (i + 1)..n {
            let pair_norm = degrees.as_ref().map_or(1.0, |d| (d[i] * d[j]).sqrt());
            let (si, sj) = (summaries[i].polarization, summaries[j].polarization);
            let (bi, bj) = (summaries[i].bond_corr, summaries[j].bond_corr);
            let (ui, uj) = (summaries[i].energy, summaries[j].energy);
            interaction += (w.ss[(i, j)] * si * sj
                + w.bb[(i, j)] * bi * bj
                + w.uu[(i, j)] * ui * uj
                + w.sb[(i, j)] * (si * bj + sj * bi)
                + w.su[(i, j)] * (si * uj + sj * ui)
                + w.bu[(i, j)] * (bi * uj + bj * ui))
                / pair_norm;
        }
    }
    onsite - interaction
}

fn weights_for(
    summaries: &[Summary],
    mask: &DMatrix<bool>,
    config: &LoopConfig,
) -> Result<ChannelWeights> {
    if config.feedback {
        let stats = compute_stats(summaries, config.kernel.epsilon)?;
        Ok(channel_weights(summaries, &stats, mask))
    } else {
        if summaries.len() < 2 {
            return Err(AqiaError::TooFewAgents {
                got: summaries.len(),
            });
        }
        let mut w = ChannelWeights::zero(summaries.len());
        w.mask = mask.clone();
        Ok(w)
    }
}

/// Total energy of a summary configuration under its own weights.
pub fn total_energy(
    summaries: &[Summary],
    mask: &DMatrix<bool>,
    config: &LoopConfig,
) -> Result<f64> {
    let w = weights_for(summaries, mask, config)?;
    Ok(energy_functional(summaries, &w, config.kernel.field_norm))
}

/// Bare (zero-feedback) ground-state summaries of every agent.
pub fn bare_summaries(agents: &[AgentParams]) -> Result<Vec<Summary>> {
    agents.par_iter().map(bare_summary).collect()
}

/// Uniform-random initial summaries: polarization and bond correlation in
/// [-1, 1], energy inside the range spanned by the agents' bare energies.
pub fn random_summaries(agents: &[AgentParams], seed: u64) -> Result<Vec<Summary>> {
    use rand::Rng;
    let bare = bare_summaries(agents)?;
    let (u_lo, u_hi) = bare.iter().fold((f64::MAX, f64::MIN), |(lo, hi), s| {
        (lo.min(s.energy), hi.max(s.energy))
    });
    let mut rng = crate::rng::seeded_rng(seed);
    Ok(agents
        .iter()
        .map(|_| Summary {
            polarization: rng.gen_range(-1.0..=1.0),
            bond_corr: rng.gen_range(-1.0..=1.0),
            energy: if u_hi > u_lo {
                rng.gen_range(u_lo..=u_hi)
            } else {
                u_lo
            },
        })
        .collect())
}

/// One application of the self-consistency map.
pub fn apply_map(
    agents: &[AgentParams],
    summaries: &[Summary],
    mask: &DMatrix<bool>,
    config: &LoopConfig,
) -> Result<MapStep> {
    assert_eq!(agents.len(), summaries.len(), "agent/summary count mismatch");
    let weights = weights_for(summaries, mask, config)?;
    let fields = renormalized_fields(summaries, &weights, &config.kernel);

    let raw_summaries: Vec<Summary> = agents
        .par_iter()
        .zip(fields.par_iter())
        .map(|(params, f)| {
            let h = build_mf_hamiltonian(params, f);
            let gs = ground_state(&h);
            measure_summaries(params, &gs)
        })
        .collect::<Result<_>>()?;

    let eta = config.mixing;
    let summaries_out = if eta < 1.0 {
        summaries
            .iter()
            .zip(&raw_summaries)
            .map(|(old, new)| Summary {
                polarization: (1.0 - eta) * old.polarization + eta * new.polarization,
                bond_corr: (1.0 - eta) * old.bond_corr + eta * new.bond_corr,
                energy: (1.0 - eta) * old.energy + eta * new.energy,
            })
            .collect()
    } else {
        raw_summaries.clone()
    };

    Ok(MapStep {
        summaries: summaries_out,
        raw_summaries,
        fields,
        weights,
    })
}

fn max_residual(a: &[Summary], b: &[Summary]) -> f64 {
    a.iter()
        .zip(b)
        .flat_map(|(x, y)| {
            [
                (x.polarization - y.polarization).abs(),
                (x.bond_corr - y.bond_corr).abs(),
                (x.energy - y.energy).abs(),
            ]
        })
        .fold(0.0, f64::max)
}

fn mix(old: &[Summary], raw: &[Summary], eta: f64) -> Vec<Summary> {
    old.iter()
        .zip(raw)
        .map(|(o, r)| Summary {
            polarization: (1.0 - eta) * o.polarization + eta * r.polarization,
            bond_corr: (1.0 - eta) * o.bond_corr + eta * r.bond_corr,
            energy: (1.0 - eta) * o.energy + eta * r.energy,
        })
        .collect()
}

/// Iterate the map until the total energy stops moving (or `max_iters`).
///
/// The energy trace records the initial configuration and every accepted
/// iterate. A step that raises the energy by more than 1e-9 at full mixing is
/// retried once at eta = 0.5 and counted in the trace either way;
/// non-convergence is reported in the result, not as an error.
pub fn run_to_convergence(
    agents: &[AgentParams],
    mask: &DMatrix<bool>,
    config: &LoopConfig,
    init: Option<Vec<Summary>>,
) -> Result<(FixedPoint, IterationTrace)> {
    let mut summaries = match init {
        Some(s) => {
            assert_eq!(s.len(), agents.len(), "init length must match agent count");
            s
        }
        None => bare_summaries(agents)?,
    };

    let mut trace = IterationTrace::default();
    let mut energy = total_energy(&summaries, mask, config)?;
    trace.energies.push(energy);
    if config.record_trace {
        trace.summaries_per_iter = Some(vec![summaries.clone()]);
    }

    let mut converged = false;
    let mut iterations = 0;
    for _ in 0..config.max_iters {
        let step = apply_map(agents, &summaries, mask, config)?;
        let mut next = step.summaries;
        let mut next_energy = total_energy(&next, mask, config)?;
        if next_energy > energy + 1e-10 && config.mixing >= 1.0 {
            // Monotonicity guard: re-take the step at successively halved
            // mixing, accepting the largest step that does not raise the
            // energy. If no damping works the raw direction itself points
            // uphill; the bottom-of-ladder step is then so small that the
            // recorded trace still cannot rise beyond the 1e-9 descent
            // tolerance.
            let mut eta = 0.5;
            loop {
                let candidate = mix(&summaries, &step.raw_summaries, eta);
                let candidate_energy = total_energy(&candidate, mask, config)?;
                trace.energy_retries += 1;
                if candidate_energy <= energy + 1e-10 || eta < 2e-12 {
                    next = candidate;
                    next_energy = candidate_energy;
                    break;
                }
                eta *= 0.5;
            }
        }
        iterations += 1;
        trace.final_residual = max_residual(&next, &summaries);
        let delta = (next_energy - energy).abs();
        summaries = next;
        energy = next_energy;
        trace.energies.push(energy);
        if let Some(hist) = trace.summaries_per_iter.as_mut() {
            hist.push(summaries.clone());
        }
        if delta < config.tol {
            converged = true;
            break;
        }
    }

    let weights = weights_for(&summaries, mask, config)?;
    let fields = renormalized_fields(&summaries, &weights, &config.kernel);
    Ok((
        FixedPoint {
            summaries,
            energy,
            iterations,
            converged,
            fields,
            weights: Some(weights),
        },
        trace,
    ))
}

/// Central-difference Jacobian of the raw map at a fixed point, plus the
/// moduli of its eigenvalues sorted descending (spectral radius first).
///
/// Components are ordered agent-major as (polarization, bond, energy)
/// triples; mixing is disabled for the differencing.
pub fn jacobian(
    agents: &[AgentParams],
    mask: &DMatrix<bool>,
    config: &LoopConfig,
    fp: &FixedPoint,
    step: f64,
) -> Result<(DMatrix<f64>, Vec<f64>)> {
    if !fp.converged {
        return Err(AqiaError::InvalidInput {
            what: "jacobian requires a converged fixed point".into(),
        });
    }
    if step <= 0.0 {
        return Err(AqiaError::InvalidInput {
            what: "jacobian step must be positive".into(),
        });
    }
    let pure = LoopConfig {
        mixing: 1.0,
        ..config.clone()
    };
    let n = agents.len();
    let dim = 3 * n;

    let flatten = |s: &[Summary]| -> Vec<f64> {
        s.iter()
            .flat_map(|m| [m.polarization, m.bond_corr, m.energy])
            .collect()
    };

    let columns: Vec<Vec<f64>> = (0..dim)
        .into_par_iter()
        .map(|col| -> Result<Vec<f64>> {
            let agent = col / 3;
            let channel = col % 3;
            let perturb = |sign: f64| -> Result<Vec<f64>> {
                let mut s = fp.summaries.clone();
                match channel {
                    0 => s[agent].polarization += sign * step,
                    1 => s[agent].bond_corr += sign * step,
                    _ => s[agent].energy += sign * step,
                }
                Ok(flatten(&apply_map(agents, &s, mask, &pure)?.raw_summaries))
            };
            let plus = perturb(1.0)?;
            let minus = perturb(-1.0)?;
            Ok(plus
                .iter()
                .zip(&minus)
                .map(|(p, m)| (p - m) / (2.0 * step))
                .collect())
        })
        .collect::<Result<_>>()?;

    let j = DMatrix::from_fn(dim, dim, |r, c| columns[c][r]);
    let mut moduli: Vec<f64> = j.clone().complex_eigenvalues().iter().map(|z| z.norm()).collect();
    moduli.sort_by(|a, b| b.partial_cmp(a).unwrap());
    Ok((j, moduli))
}
