//! Disorder sampling, regime presets, multi-realization averaging, and
//! (J, Gamma) sweep grids.

use nalgebra::DMatrix;
use rand_distr::{Distribution, Normal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::agent::{AgentParams, Summary};
use crate::diagnostics::{detect_communities, positive_part, susceptibility};
use crate::error::{AqiaError, Result};
use crate::kernels::sample_mask;
use crate::meanfield::{run_to_convergence, FixedPoint, IterationTrace, LoopConfig};
use crate::rng::{derive_seed, seeded_rng};

/// Stream index separating the mask draw from the parameter draws.
const MASK_STREAM: u64 = 0x6d61_736b;
/// Stream index for the random-initialization draw.
const INIT_STREAM: u64 = 0x696e_6974;

/// Internal bond layout of each agent patch.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum Topology {
    #[default]
    Chain,
    Ring,
    /// Ring with two opposite next-nearest braces.
    BracedRing,
}

/// Statistical parameters of one simulated regime.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegimePreset {
    pub name: String,
    /// Number of agents N.
    pub n_agents: usize,
    /// Qubits per agent.
    pub n_qubits: usize,
    pub mean_coupling: f64,
    pub sigma_coupling: f64,
    pub mean_field: f64,
    pub sigma_field: f64,
    pub transverse: f64,
    pub edge_density: f64,
    /// Disorder realizations R.
    pub realizations: usize,
    pub topology: Topology,
}

impl RegimePreset {
    /// Near-critical balance: strong uniform exchange against an equal
    /// transverse field, with narrow sign-symmetric field disorder.
    ///
    /// The shipped presets use zero-mean local fields: a net longitudinal
    /// bias pins every agent to one polarization sign and erases the
    /// bifurcated, frustrated, and modular equilibria the regimes are
    /// defined by.
    pub fn critical() -> Self {
        Self {
            name: "critical".into(),
            n_agents: 30,
            n_qubits: 6,
            mean_coupling: 1.0,
            sigma_coupling: 0.01,
            mean_field: 0.0,
            sigma_field: 0.1,
            transverse: 1.0,
            edge_density: 1.0,
            realizations: 50,
            topology: Topology::Chain,
        }
    }

    /// Frustrated multi-basin regime: weak mean coupling under broad
    /// sign-mixed coupling disorder and a reduced transverse field.
    pub fn glassy() -> Self {
        Self {
            name: "glassy".into(),
            n_agents: 30,
            n_qubits: 6,
            mean_coupling: 0.15,
            sigma_coupling: 0.5,
            mean_field: 0.0,
            sigma_field: 0.2,
            transverse: 0.6,
            edge_density: 1.0,
            realizations: 50,
            topology: Topology::Chain,
        }
    }

    /// Modular polarization: moderate coupling on densely braced patches
    /// interacting over a sparse random graph.
    pub fn community() -> Self {
        Self {
            name: "community".into(),
            n_agents: 30,
            n_qubits: 6,
            mean_coupling: 0.5,
            sigma_coupling: 0.1,
            mean_field: 0.0,
            sigma_field: 0.1,
            transverse: 1.0,
            edge_density: 0.3,
            realizations: 50,
            topology: Topology::BracedRing,
        }
    }

    pub fn by_name(name: &str) -> Option<Self> {
        match name {
            "critical" => Some(Self::critical()),
            "glassy" => Some(Self::glassy()),
            "community" => Some(Self::community()),
            _ => None,
        }
    }

    fn bonds(&self) -> Vec<(usize, usize)> {
        match self.topology {
            Topology::Chain => AgentParams::chain_bonds(self.n_qubits),
            Topology::Ring => AgentParams::ring_bonds(self.n_qubits),
            Topology::BracedRing => AgentParams::braced_ring_bonds(self.n_qubits),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_agents < 2 {
            return Err(AqiaError::TooFewAgents { got: self.n_agents });
        }
        if self.realizations < 1 {
            return Err(AqiaError::InvalidInput {
                what: "preset needs at least 1 realization".into(),
            });
        }
        if self.sigma_coupling < 0.0 || self.sigma_field < 0.0 {
            return Err(AqiaError::InvalidInput {
                what: "disorder widths must be non-negative".into(),
            });
        }
        if !(self.edge_density > 0.0 && self.edge_density <= 1.0) {
            return Err(AqiaError::EdgeDensity {
                got: self.edge_density,
            });
        }
        Ok(())
    }
}

/// One converged disorder realization with its scalar diagnostics.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RealizationResult {
    pub seed: u64,
    pub fixed_point: FixedPoint,
    pub trace: IterationTrace,
    /// Edwards-Anderson order parameter (1/N) sum S_i^2.
    pub qea: f64,
    /// Mean absolute polarization (1/N) sum |S_i|.
    pub mean_abs_polarization: f64,
    /// Signed mean polarization (1/N) sum S_i (Binder-cumulant sample).
    pub mean_polarization: f64,
    /// Modularity of the detected partition of the positive aggregate graph.
    pub modularity: f64,
    pub community_labels: Vec<usize>,
}

/// Mean, standard error, and coefficient of variation over realizations.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Aggregate {
    pub mean: f64,
    /// Sample standard deviation divided by sqrt(R); 0 for R = 1.
    pub sem: f64,
}

/// Ensemble-level averages over disorder realizations.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EnsembleRecord {
    pub preset: RegimePreset,
    pub master_seed: u64,
    pub qea: Aggregate,
    /// Population std of q_EA over realizations divided by its mean.
    pub cv_qea: f64,
    pub mean_abs_polarization: Aggregate,
    pub modularity: Aggregate,
    /// Realizations dropped because their solve failed.
    pub excluded: usize,
    pub results: Vec<RealizationResult>,
}

/// Edwards-Anderson order parameter of a summary configuration.
pub fn edwards_anderson(summaries: &[Summary]) -> f64 {
    let n = summaries.len().max(1) as f64;
    summaries.iter().map(|s| s.polarization * s.polarization).sum::<f64>() / n
}

/// Mean absolute polarization of a summary configuration.
pub fn mean_abs_polarization(summaries: &[Summary]) -> f64 {
    let n = summaries.len().max(1) as f64;
    summaries.iter().map(|s| s.polarization.abs()).sum::<f64>() / n
}

/// Signed mean polarization of a summary configuration.
pub fn mean_polarization(summaries: &[Summary]) -> f64 {
    let n = summaries.len().max(1) as f64;
    summaries.iter().map(|s| s.polarization).sum::<f64>() / n
}

/// Draw one disorder realization: per-qubit fields, per-bond couplings, and
/// the edge mask, all from the given seed.
pub fn sample_realization(
    preset: &RegimePreset,
    seed: u64,
) -> Result<(Vec<AgentParams>, DMatrix<bool>)> {
    preset.validate()?;
    let mut rng = seeded_rng(seed);
    let field_dist = Normal::new(preset.mean_field, preset.sigma_field).map_err(|_| {
        AqiaError::InvalidInput {
            what: "invalid field distribution".into(),
        }
    })?;
    let coupling_dist =
        Normal::new(preset.mean_coupling, preset.sigma_coupling).map_err(|_| {
            AqiaError::InvalidInput {
                what: "invalid coupling distribution".into(),
            }
        })?;
    let bonds = preset.bonds();
    let agents = (0..preset.n_agents)
        .map(|_| {
            let fields: Vec<f64> = (0..preset.n_qubits)
                .map(|_| field_dist.sample(&mut rng))
                .collect();
            let couplings: Vec<f64> = (0..bonds.len())
                .map(|_| coupling_dist.sample(&mut rng))
                .collect();
            AgentParams::new(
                preset.n_qubits,
                bonds.clone(),
                fields,
                couplings,
                preset.transverse,
            )
        })
        .collect::<Result<Vec<_>>>()?;
    let mask = sample_mask(
        preset.n_agents,
        preset.edge_density,
        derive_seed(seed, MASK_STREAM),
    )?;
    Ok((agents, mask))
}

/// Run one realization to convergence and collect its diagnostics.
pub fn run_realization(
    preset: &RegimePreset,
    seed: u64,
    config: &LoopConfig,
) -> Result<RealizationResult> {
    let (agents, mask) = sample_realization(preset, seed)?;
    let init = if config.random_init {
        Some(crate::meanfield::random_summaries(
            &agents,
            derive_seed(seed, INIT_STREAM),
        )?)
    } else {
        None
    };
    let (fp, trace) = run_to_convergence(&agents, &mask, config, init)?;
    let aggregate = fp
        .weights
        .as_ref()
        .map(|w| w.aggregate.clone())
        .unwrap_or_else(|| DMatrix::zeros(agents.len(), agents.len()));
    let communities = detect_communities(&positive_part(&aggregate));
    Ok(RealizationResult {
        seed,
        qea: edwards_anderson(&fp.summaries),
        mean_abs_polarization: mean_abs_polarization(&fp.summaries),
        mean_polarization: mean_polarization(&fp.summaries),
        modularity: communities.modularity,
        community_labels: communities.labels,
        fixed_point: fp,
        trace,
    })
}

fn aggregate(values: &[f64]) -> Aggregate {
    let r = values.len() as f64;
    let mean = values.iter().sum::<f64>() / r;
    let sem = if values.len() > 1 {
        let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (r - 1.0);
        (var / r).sqrt()
    } else {
        0.0
    };
    Aggregate { mean, sem }
}

fn coefficient_of_variation(values: &[f64]) -> f64 {
    let r = values.len() as f64;
    let mean = values.iter().sum::<f64>() / r;
    if mean == 0.0 {
        return 0.0;
    }
    let pop_var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / r;
    pop_var.sqrt() / mean
}

/// Run all `R` realizations of a preset (seeds derived from `master_seed`)
/// and aggregate the order-parameter statistics.
///
/// Failed realizations are excluded from the aggregates and counted in
/// `excluded`; only a fully failed ensemble is an error. Realizations run in
/// parallel but aggregate in index order, so results do not depend on
/// scheduling.
pub fn run_ensemble(
    preset: &RegimePreset,
    master_seed: u64,
    config: &LoopConfig,
) -> Result<EnsembleRecord> {
    preset.validate()?;
    let outcomes: Vec<Result<RealizationResult>> = (0..preset.realizations)
        .into_par_iter()
        .map(|r| run_realization(preset, derive_seed(master_seed, r as u64), config))
        .collect();

    let total = outcomes.len();
    let mut results = Vec::with_capacity(total);
    let mut excluded = 0;
    for outcome in outcomes {
        match outcome {
            Ok(res) => results.push(res),
            Err(_) => excluded += 1,
        }
    }
    if results.is_empty() {
        return Err(AqiaError::AllRealizationsFailed { total });
    }

    let qea_vals: Vec<f64> = results.iter().map(|r| r.qea).collect();
    let abs_vals: Vec<f64> = results.iter().map(|r| r.mean_abs_polarization).collect();
    let mod_vals: Vec<f64> = results.iter().map(|r| r.modularity).collect();

    Ok(EnsembleRecord {
        preset: preset.clone(),
        master_seed,
        qea: aggregate(&qea_vals),
        cv_qea: coefficient_of_variation(&qea_vals),
        mean_abs_polarization: aggregate(&abs_vals),
        modularity: aggregate(&mod_vals),
        excluded,
        results,
    })
}

/// Completion state of one sweep-grid cell.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum CellStatus {
    Ok,
    Failed,
}

/// Observable maps over a (J, Gamma) parameter grid.
#[derive(Debug, Clone, Serialize)]
pub struct GridResult {
    pub coupling_values: Vec<f64>,
    pub transverse_values: Vec<f64>,
    /// Matrices indexed (coupling row, transverse column).
    #[serde(skip)]
    pub mean_abs_polarization: DMatrix<f64>,
    #[serde(skip)]
    pub qea: DMatrix<f64>,
    #[serde(skip)]
    pub modularity: DMatrix<f64>,
    /// Gamma-derivative of the order parameter along each coupling row;
    /// NaN when the row has fewer than 3 transverse points.
    #[serde(skip)]
    pub susceptibility: DMatrix<f64>,
    pub status: Vec<Vec<CellStatus>>,
    #[serde(skip)]
    pub records: Vec<Vec<Option<EnsembleRecord>>>,
}

/// Run `run_ensemble` at every (J, Gamma) grid point of the base preset.
///
/// Every cell reuses the same master seed, so realization r shares its
/// disorder draw across the grid; that keeps rows smooth in Gamma for the
/// finite-difference susceptibility.
pub fn sweep_grid(
    base: &RegimePreset,
    coupling_values: &[f64],
    transverse_values: &[f64],
    master_seed: u64,
    config: &LoopConfig,
) -> Result<GridResult> {
    if coupling_values.is_empty() || transverse_values.is_empty() {
        return Err(AqiaError::InvalidInput {
            what: "sweep grid axes must be non-empty".into(),
        });
    }
    let nj = coupling_values.len();
    let ng = transverse_values.len();

    let cells: Vec<Option<EnsembleRecord>> = (0..nj * ng)
        .into_par_iter()
        .map(|idx| {
            let (ji, gi) = (idx / ng, idx % ng);
            let mut preset = base.clone();
            preset.name = format!("{}@grid", base.name);
            preset.mean_coupling = coupling_values[ji];
            preset.transverse = transverse_values[gi];
            run_ensemble(&preset, master_seed, config).ok()
        })
        .collect();

    let mut result = GridResult {
        coupling_values: coupling_values.to_vec(),
        transverse_values: transverse_values.to_vec(),
        mean_abs_polarization: DMatrix::from_element(nj, ng, f64::NAN),
        qea: DMatrix::from_element(nj, ng, f64::NAN),
        modularity: DMatrix::from_element(nj, ng, f64::NAN),
        susceptibility: DMatrix::from_element(nj, ng, f64::NAN),
        status: vec![vec![CellStatus::Failed; ng]; nj],
        records: vec![vec![None; ng]; nj],
    };

    for ji in 0..nj {
        for gi in 0..ng {
            if let Some(rec) = &cells[ji * ng + gi] {
                result.mean_abs_polarization[(ji, gi)] = rec.mean_abs_polarization.mean;
                result.qea[(ji, gi)] = rec.qea.mean;
                result.modularity[(ji, gi)] = rec.modularity.mean;
                result.status[ji][gi] = CellStatus::Ok;
            }
        }
        if ng >= 3 && result.status[ji].iter().all(|s| *s == CellStatus::Ok) {
            let curve: Vec<(f64, f64)> = (0..ng)
                .map(|gi| (transverse_values[gi], result.mean_abs_polarization[(ji, gi)]))
                .collect();
            if let Ok(chi) = susceptibility(&curve) {
                for (gi, (_, c)) in chi.into_iter().enumerate() {
                    result.susceptibility[(ji, gi)] = c;
                }
            }
        }
    }
    for (ji, row) in cells.chunks(ng).enumerate() {
        for (gi, cell) in row.iter().enumerate() {
            result.records[ji][gi] = cell.clone();
        }
    }
    Ok(result)
}
