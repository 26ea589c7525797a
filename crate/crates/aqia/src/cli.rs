//! Command-line interface: argument parsing, command dispatch, and artifact
//! emission. The `aqia` binary is a thin wrapper around [`run`].

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde::Serialize;
use serde_json::json;

use crate::config::{parse_config, ConfigError, RunConfig, Settings};
use crate::diagnostics::{
    correlation_matrix, detect_communities, positive_part, CorrelationMode,
};
use crate::ensemble::{
    edwards_anderson, mean_abs_polarization, mean_polarization, run_ensemble, sample_realization,
    Aggregate, CellStatus, EnsembleRecord,
};
use crate::error::AqiaError;
use crate::io::{
    fmt_f64, fss_samples_rows, locate_fss_samples, read_fss_samples, read_network_edges,
    read_summaries, summaries_rows, write_csv, write_json, write_sidecar, EDGES_SCHEMA,
    FSS_SAMPLES_SCHEMA, SUMMARIES_SCHEMA,
};
use crate::meanfield::jacobian;
use crate::scaling::{
    binder_crossing_fit, bootstrap_fit, collapse_fit, fss_scan, hysteresis_sweep,
    peak_scaling_fit, FssDataset, ScalingFit,
};

/// Adaptive quantum Ising agent simulations.
#[derive(Debug, Parser)]
#[command(name = "aqia", version, about)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run one preset ensemble: summaries, energy traces, network, stats.
    Run(RunArgs),
    /// Phase-diagram grid over coupling and transverse field.
    Sweep(SweepArgs),
    /// Forward/backward coupling-ratio sweep measuring the hysteresis loop.
    Hysteresis(HysteresisArgs),
    /// Finite-size-scaling scan plus collapse, Binder, and peak fits.
    Fss(FssArgs),
    /// Bootstrap confidence intervals for the collapse fit from stored
    /// samples.
    Bootstrap(BootstrapArgs),
    /// Recompute diagnostics from a completed run directory.
    Diagnose(DiagnoseArgs),
}

#[derive(Debug, Args)]
pub struct CommonArgs {
    /// TOML config file; flags override its values.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Preset name: critical, glassy, or community.
    #[arg(long)]
    pub preset: Option<String>,
    /// Master seed (required here or in the config file).
    #[arg(long)]
    pub seed: Option<u64>,
    /// Output directory.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Worker threads (falls back to AQIA_THREADS, then all cores).
    #[arg(long)]
    pub threads: Option<usize>,
    /// Transverse field override.
    #[arg(long)]
    pub gamma: Option<f64>,
    /// Mean intra-agent coupling override.
    #[arg(long = "mean-j")]
    pub mean_j: Option<f64>,
    /// Coupling disorder width override.
    #[arg(long = "sigma-j")]
    pub sigma_j: Option<f64>,
    /// Mean local field override.
    #[arg(long = "mean-h")]
    pub mean_h: Option<f64>,
    /// Field disorder width override.
    #[arg(long = "sigma-h")]
    pub sigma_h: Option<f64>,
    /// Ensemble size N.
    #[arg(long = "n-agents")]
    pub n_agents: Option<usize>,
    /// Qubits per agent.
    #[arg(long = "n-qubits")]
    pub n_qubits: Option<usize>,
    /// Disorder realizations R.
    #[arg(long)]
    pub realizations: Option<usize>,
    /// Interaction-graph edge density in (0, 1].
    #[arg(long = "edge-density")]
    pub edge_density: Option<f64>,
    /// Internal patch topology: chain, ring, or braced_ring.
    #[arg(long)]
    pub topology: Option<String>,
    /// Energy convergence tolerance.
    #[arg(long)]
    pub tol: Option<f64>,
    /// Iteration cap.
    #[arg(long = "max-iters")]
    pub max_iters: Option<usize>,
    /// Mixing weight in (0, 1].
    #[arg(long)]
    pub mixing: Option<f64>,
    /// Initialize from uniform-random summaries instead of bare ground
    /// states.
    #[arg(long = "random-init")]
    pub random_init: bool,
}

impl CommonArgs {
    fn settings(&self) -> Settings {
        Settings {
            preset: self.preset.clone(),
            seed: self.seed,
            out: self.out.clone(),
            threads: self.threads,
            gamma: self.gamma,
            mean_j: self.mean_j,
            sigma_j: self.sigma_j,
            mean_h: self.mean_h,
            sigma_h: self.sigma_h,
            n_agents: self.n_agents,
            n_qubits: self.n_qubits,
            realizations: self.realizations,
            edge_density: self.edge_density,
            topology: self.topology.clone(),
            tol: self.tol,
            max_iters: self.max_iters,
            mixing: self.mixing,
            random_init: if self.random_init { Some(true) } else { None },
            ..Settings::default()
        }
    }
}

#[derive(Debug, Args)]
pub struct RunArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    /// Skip the Jacobian stability analysis of realization 0.
    #[arg(long = "no-jacobian")]
    pub no_jacobian: bool,
}

#[derive(Debug, Args)]
pub struct SweepArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    /// Comma-separated mean-coupling axis.
    #[arg(long = "grid-j", value_delimiter = ',', num_args = 1..)]
    pub grid_j: Vec<f64>,
    /// Comma-separated transverse-field axis.
    #[arg(long = "grid-gamma", value_delimiter = ',', num_args = 1..)]
    pub grid_gamma: Vec<f64>,
}

#[derive(Debug, Args)]
pub struct HysteresisArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    /// Comma-separated ascending J/Gamma ratio grid.
    #[arg(long, value_delimiter = ',', num_args = 1..)]
    pub ratios: Vec<f64>,
    /// Map applications per sweep step (the sweep-rate knob).
    #[arg(long = "iters-per-step")]
    pub iters_per_step: Option<usize>,
}

#[derive(Debug, Args)]
pub struct FssArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    /// Comma-separated ensemble sizes.
    #[arg(long, value_delimiter = ',', num_args = 1..)]
    pub sizes: Vec<usize>,
    /// Comma-separated transverse-field axis.
    #[arg(long = "grid-gamma", value_delimiter = ',', num_args = 1..)]
    pub grid_gamma: Vec<f64>,
    /// Master-curve bins for the collapse objective.
    #[arg(long)]
    pub bins: Option<usize>,
}

#[derive(Debug, Args)]
pub struct BootstrapArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    /// fss_samples.csv file (or the directory containing it).
    #[arg(long)]
    pub raw: Option<PathBuf>,
    /// Number of bootstrap resamples.
    #[arg(long)]
    pub resamples: Option<usize>,
    #[arg(long)]
    pub bins: Option<usize>,
}

#[derive(Debug, Args)]
pub struct DiagnoseArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    /// Completed run directory (summaries.csv + network_edges.csv).
    #[arg(long)]
    pub input: Option<PathBuf>,
}

/// Exit statuses of the command layer.
const EXIT_OK: u8 = 0;
const EXIT_USAGE: u8 = 1;
const EXIT_RUNTIME: u8 = 2;
const EXIT_WARNINGS: u8 = 3;

/// Parse argv and execute; returns the process exit code.
pub fn run() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(cli) {
        Ok(warnings) => {
            if warnings.is_empty() {
                ExitCode::from(EXIT_OK)
            } else {
                for w in &warnings {
                    eprintln!("warning: {w}");
                }
                ExitCode::from(EXIT_WARNINGS)
            }
        }
        Err(CliError::Config(e)) => {
            eprintln!("error: {e}");
            ExitCode::from(EXIT_USAGE)
        }
        Err(CliError::Runtime(e)) => {
            eprintln!("error: {e}");
            ExitCode::from(EXIT_RUNTIME)
        }
    }
}

#[derive(Debug)]
pub enum CliError {
    Config(ConfigError),
    Runtime(AqiaError),
}

impl From<ConfigError> for CliError {
    fn from(e: ConfigError) -> Self {
        CliError::Config(e)
    }
}

impl From<AqiaError> for CliError {
    fn from(e: AqiaError) -> Self {
        CliError::Runtime(e)
    }
}

fn dispatch(cli: Cli) -> Result<Vec<String>, CliError> {
    match cli.command {
        Command::Run(args) => {
            let mut settings = args.common.settings();
            if args.no_jacobian {
                settings.jacobian = Some(false);
            }
            let config = prepare(&args.common.config, &settings)?;
            exec_run(&config)
        }
        Command::Sweep(args) => {
            let mut settings = args.common.settings();
            if !args.grid_j.is_empty() {
                settings.grid_j = Some(args.grid_j.clone());
            }
            if !args.grid_gamma.is_empty() {
                settings.grid_gamma = Some(args.grid_gamma.clone());
            }
            let config = prepare(&args.common.config, &settings)?;
            exec_sweep(&config)
        }
        Command::Hysteresis(args) => {
            let mut settings = args.common.settings();
            if !args.ratios.is_empty() {
                settings.ratios = Some(args.ratios.clone());
            }
            settings.iters_per_step = args.iters_per_step;
            let config = prepare(&args.common.config, &settings)?;
            exec_hysteresis(&config)
        }
        Command::Fss(args) => {
            let mut settings = args.common.settings();
            if !args.sizes.is_empty() {
                settings.sizes = Some(args.sizes.clone());
            }
            if !args.grid_gamma.is_empty() {
                settings.grid_gamma = Some(args.grid_gamma.clone());
            }
            settings.bins = args.bins;
            let config = prepare(&args.common.config, &settings)?;
            exec_fss(&config)
        }
        Command::Bootstrap(args) => {
            let mut settings = args.common.settings();
            settings.raw = args.raw.clone();
            settings.resamples = args.resamples;
            settings.bins = args.bins;
            let config = prepare(&args.common.config, &settings)?;
            exec_bootstrap(&config)
        }
        Command::Diagnose(args) => {
            let mut settings = args.common.settings();
            settings.input = args.input.clone();
            let config = prepare(&args.common.config, &settings)?;
            exec_diagnose(&config)
        }
    }
}

fn prepare(file: &Option<PathBuf>, overrides: &Settings) -> Result<RunConfig, CliError> {
    let config = parse_config(file.as_deref(), overrides)?;
    std::fs::create_dir_all(&config.out_dir).map_err(|e| {
        CliError::Config(ConfigError::Invalid {
            key: "out",
            message: format!("cannot create {}: {e}", config.out_dir.display()),
        })
    })?;
    if let Some(threads) = config.threads {
        // Ignore the error when a pool already exists (e.g. repeat calls in
        // one process); results do not depend on the pool size.
        let _ = rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build_global();
    }
    Ok(config)
}

#[derive(Serialize)]
struct PerRealizationStats {
    realization: usize,
    seed: u64,
    qea: f64,
    mean_abs_polarization: f64,
    mean_polarization: f64,
    modularity: f64,
    converged: bool,
    iterations: usize,
    energy: f64,
    energy_retries: usize,
}

#[derive(Serialize)]
struct StatsJson<'a> {
    preset: &'a crate::ensemble::RegimePreset,
    master_seed: u64,
    qea: Aggregate,
    cv_qea: f64,
    mean_abs_polarization: Aggregate,
    modularity: Aggregate,
    excluded: usize,
    community_labels: &'a [usize],
    jacobian_spectral_radius: Option<f64>,
    per_realization: Vec<PerRealizationStats>,
}

fn ensemble_warnings(rec: &EnsembleRecord) -> Vec<String> {
    let mut warnings = Vec::new();
    if rec.excluded > 0 {
        warnings.push(format!(
            "{} of {} realizations failed and were excluded from aggregates",
            rec.excluded,
            rec.excluded + rec.results.len()
        ));
    }
    let unconverged = rec
        .results
        .iter()
        .filter(|r| !r.fixed_point.converged)
        .count();
    if unconverged > 0 {
        warnings.push(format!(
            "{unconverged} realization(s) hit max_iters without meeting the energy tolerance"
        ));
    }
    warnings
}

fn exec_run(config: &RunConfig) -> Result<Vec<String>, CliError> {
    let rec = run_ensemble(&config.preset, config.seed, &config.loop_config)?;
    let mut warnings = ensemble_warnings(&rec);
    let out = &config.out_dir;

    let rows: Vec<(usize, u64, &[crate::agent::Summary])> = rec
        .results
        .iter()
        .enumerate()
        .map(|(i, r)| (i, r.seed, r.fixed_point.summaries.as_slice()))
        .collect();
    let summaries_path = out.join("summaries.csv");
    write_csv(&summaries_path, &SUMMARIES_SCHEMA, &summaries_rows(&rows))?;
    write_sidecar(&summaries_path, "run", &SUMMARIES_SCHEMA, config, vec![], false)?;

    let trace_path = out.join("energy_trace.csv");
    let trace_schema = ["realization", "iteration", "energy"];
    let mut trace_rows = Vec::new();
    for (i, r) in rec.results.iter().enumerate() {
        for (it, e) in r.trace.energies.iter().enumerate() {
            trace_rows.push(vec![i.to_string(), it.to_string(), fmt_f64(*e)]);
        }
    }
    write_csv(&trace_path, &trace_schema, &trace_rows)?;
    write_sidecar(&trace_path, "run", &trace_schema, config, vec![], false)?;

    let edges_path = out.join("network_edges.csv");
    let mut edge_rows = Vec::new();
    for (i, r) in rec.results.iter().enumerate() {
        if let Some(w) = &r.fixed_point.weights {
            let n = w.aggregate.nrows();
            for a in 0..n {
                for b in (a + 1)..n {
                    edge_rows.push(vec![
                        i.to_string(),
                        a.to_string(),
                        b.to_string(),
                        fmt_f64(w.aggregate[(a, b)]),
                    ]);
                }
            }
        }
    }
    write_csv(&edges_path, &EDGES_SCHEMA, &edge_rows)?;
    write_sidecar(&edges_path, "run", &EDGES_SCHEMA, config, vec![], false)?;

    let radius = if config.jacobian {
        match compute_reference_radius(config, &rec) {
            Ok(r) => r,
            Err(e) => {
                warnings.push(format!("jacobian analysis skipped: {e}"));
                None
            }
        }
    } else {
        None
    };

    let stats = StatsJson {
        preset: &config.preset,
        master_seed: config.seed,
        qea: rec.qea,
        cv_qea: rec.cv_qea,
        mean_abs_polarization: rec.mean_abs_polarization,
        modularity: rec.modularity,
        excluded: rec.excluded,
        community_labels: &rec.results[0].community_labels,
        jacobian_spectral_radius: radius,
        per_realization: rec
            .results
            .iter()
            .enumerate()
            .map(|(i, r)| PerRealizationStats {
                realization: i,
                seed: r.seed,
                qea: r.qea,
                mean_abs_polarization: r.mean_abs_polarization,
                mean_polarization: r.mean_polarization,
                modularity: r.modularity,
                converged: r.fixed_point.converged,
                iterations: r.fixed_point.iterations,
                energy: r.fixed_point.energy,
                energy_retries: r.trace.energy_retries,
            })
            .collect(),
    };
    let stats_path = out.join("stats.json");
    write_json(&stats_path, &stats)?;
    write_sidecar(&stats_path, "run", &[], config, warnings.clone(), false)?;

    Ok(warnings)
}

/// Spectral radius of the map Jacobian at realization 0's fixed point.
fn compute_reference_radius(
    config: &RunConfig,
    rec: &EnsembleRecord,
) -> Result<Option<f64>, AqiaError> {
    let first = &rec.results[0];
    if !first.fixed_point.converged {
        return Ok(None);
    }
    let (agents, mask) = sample_realization(&config.preset, first.seed)?;
    let (_, moduli) = jacobian(
        &agents,
        &mask,
        &config.loop_config,
        &first.fixed_point,
        1e-5,
    )?;
    Ok(moduli.first().copied())
}

fn exec_sweep(config: &RunConfig) -> Result<Vec<String>, CliError> {
    let grid = crate::ensemble::sweep_grid(
        &config.preset,
        &config.grid_coupling,
        &config.grid_transverse,
        config.seed,
        &config.loop_config,
    )?;
    let mut warnings = Vec::new();
    let schema = [
        "coupling",
        "transverse",
        "mean_abs_polarization",
        "sem_abs_polarization",
        "qea",
        "sem_qea",
        "cv_qea",
        "modularity",
        "sem_modularity",
        "susceptibility",
        "status",
    ];
    let mut rows = Vec::new();
    for (ji, &j) in grid.coupling_values.iter().enumerate() {
        for (gi, &g) in grid.transverse_values.iter().enumerate() {
            let status = grid.status[ji][gi];
            if status == CellStatus::Failed {
                warnings.push(format!("grid cell (J={j}, Gamma={g}) failed"));
            }
            let rec = grid.records[ji][gi].as_ref();
            rows.push(vec![
                fmt_f64(j),
                fmt_f64(g),
                fmt_f64(grid.mean_abs_polarization[(ji, gi)]),
                fmt_f64(rec.map_or(f64::NAN, |r| r.mean_abs_polarization.sem)),
                fmt_f64(grid.qea[(ji, gi)]),
                fmt_f64(rec.map_or(f64::NAN, |r| r.qea.sem)),
                fmt_f64(rec.map_or(f64::NAN, |r| r.cv_qea)),
                fmt_f64(grid.modularity[(ji, gi)]),
                fmt_f64(rec.map_or(f64::NAN, |r| r.modularity.sem)),
                fmt_f64(grid.susceptibility[(ji, gi)]),
                match status {
                    CellStatus::Ok => "ok".into(),
                    CellStatus::Failed => "failed".into(),
                },
            ]);
        }
    }
    let path = config.out_dir.join("grid.csv");
    write_csv(&path, &schema, &rows)?;
    write_sidecar(&path, "sweep", &schema, config, warnings.clone(), !warnings.is_empty())?;
    Ok(warnings)
}

fn exec_hysteresis(config: &RunConfig) -> Result<Vec<String>, CliError> {
    let sweep = hysteresis_sweep(
        &config.preset,
        &config.ratios,
        config.iters_per_step,
        config.seed,
        &config.loop_config,
    )?;
    let schema = ["ratio", "forward", "backward"];
    let rows: Vec<Vec<String>> = sweep
        .ratios
        .iter()
        .zip(sweep.forward.iter().zip(&sweep.backward))
        .map(|(r, (f, b))| vec![fmt_f64(*r), fmt_f64(*f), fmt_f64(*b)])
        .collect();
    let path = config.out_dir.join("hysteresis.csv");
    write_csv(&path, &schema, &rows)?;
    write_sidecar(&path, "hysteresis", &schema, config, vec![], false)?;
    write_json(
        &config.out_dir.join("hysteresis.json"),
        &json!({
            "loop_area": sweep.loop_area,
            "iters_per_step": config.iters_per_step,
            "ratios": sweep.ratios,
            "forward": sweep.forward,
            "backward": sweep.backward,
        }),
    )?;
    Ok(vec![])
}

#[derive(Serialize)]
struct FssFitJson {
    collapse: Option<ScalingFit>,
    binder_crossing: Option<ScalingFit>,
    peak_scaling: Option<ScalingFit>,
    errors: Vec<String>,
}

const FSS_RAW_SCHEMA: [&str; 9] = [
    "n_agents",
    "gamma",
    "mean_abs_polarization",
    "sem",
    "chi",
    "chi_err",
    "u4",
    "u4_err",
    "realizations",
];

fn write_fss_outputs(
    config: &RunConfig,
    raw: &crate::scaling::FssRaw,
) -> Result<Vec<String>, CliError> {
    let out = &config.out_dir;
    let samples_path = out.join("fss_samples.csv");
    write_csv(&samples_path, &FSS_SAMPLES_SCHEMA, &fss_samples_rows(raw))?;
    write_sidecar(&samples_path, "fss", &FSS_SAMPLES_SCHEMA, config, vec![], false)?;

    let dataset = FssDataset::from_raw(raw)?;
    let raw_path = out.join("fss_raw.csv");
    let rows: Vec<Vec<String>> = dataset
        .points
        .iter()
        .map(|p| {
            vec![
                p.n_agents.to_string(),
                fmt_f64(p.gamma),
                fmt_f64(p.mean_abs_polarization),
                fmt_f64(p.sem),
                fmt_f64(p.chi),
                fmt_f64(p.chi_err),
                fmt_f64(p.u4),
                fmt_f64(p.u4_err),
                p.realizations.to_string(),
            ]
        })
        .collect();
    write_csv(&raw_path, &FSS_RAW_SCHEMA, &rows)?;
    write_sidecar(&raw_path, "fss", &FSS_RAW_SCHEMA, config, vec![], false)?;

    let mut errors = Vec::new();
    let mut fit_of = |label: &str, r: crate::error::Result<ScalingFit>| match r {
        Ok(fit) => Some(fit),
        Err(e) => {
            errors.push(format!("{label}: {e}"));
            None
        }
    };
    let fits = FssFitJson {
        collapse: fit_of("collapse", collapse_fit(&dataset, None, config.bins)),
        binder_crossing: fit_of(
            "binder-crossing",
            binder_crossing_fit(&dataset, config.bins),
        ),
        peak_scaling: fit_of("peak-scaling", peak_scaling_fit(&dataset, config.bins)),
        errors: errors.clone(),
    };
    write_json(&out.join("fss_fit.json"), &fits)?;
    Ok(errors)
}

fn exec_fss(config: &RunConfig) -> Result<Vec<String>, CliError> {
    let raw = fss_scan(
        &config.preset,
        &config.sizes,
        &config.grid_transverse,
        config.seed,
        &config.loop_config,
    )?;
    write_fss_outputs(config, &raw)
}

fn exec_bootstrap(config: &RunConfig) -> Result<Vec<String>, CliError> {
    let raw_path = config
        .raw_input
        .as_ref()
        .ok_or(ConfigError::Missing("raw (fss samples file)"))?;
    let raw = read_fss_samples(&locate_fss_samples(raw_path))?;
    let outcome = bootstrap_fit(&raw, config.resamples, config.seed, config.bins)?;

    let schema = ["resample", "gamma_c", "nu", "beta_over_nu"];
    let rows: Vec<Vec<String>> = outcome
        .distribution
        .iter()
        .enumerate()
        .map(|(i, f)| {
            vec![
                i.to_string(),
                fmt_f64(f[0]),
                fmt_f64(f[1]),
                fmt_f64(f[2]),
            ]
        })
        .collect();
    let dist_path = config.out_dir.join("bootstrap_dist.csv");
    write_csv(&dist_path, &schema, &rows)?;
    write_sidecar(&dist_path, "bootstrap", &schema, config, vec![], false)?;

    write_json(
        &config.out_dir.join("bootstrap_fit.json"),
        &json!({
            "point": outcome.fit,
            "full_data_fit": outcome.full_data_fit,
            "resamples_requested": config.resamples,
            "resamples_used": outcome.distribution.len(),
            "excluded": outcome.excluded,
        }),
    )?;
    let mut warnings = Vec::new();
    if outcome.excluded > 0 {
        warnings.push(format!("{} resample fits were excluded", outcome.excluded));
    }
    Ok(warnings)
}

fn exec_diagnose(config: &RunConfig) -> Result<Vec<String>, CliError> {
    let input = config
        .input_dir
        .as_ref()
        .ok_or(ConfigError::Missing("input (completed run directory)"))?;
    let summaries = read_summaries(&input.join("summaries.csv"))?;
    if summaries.is_empty() {
        return Err(CliError::Runtime(AqiaError::InvalidInput {
            what: "no realizations found in summaries.csv".into(),
        }));
    }
    let n_agents = summaries[0].len();
    let graphs = read_network_edges(&input.join("network_edges.csv"), n_agents)?;

    let polarizations: Vec<Vec<f64>> = summaries
        .iter()
        .map(|s| s.iter().map(|m| m.polarization).collect())
        .collect();
    let per_realization: Vec<serde_json::Value> = summaries
        .iter()
        .enumerate()
        .map(|(i, s)| {
            let community = graphs
                .get(i)
                .map(|g| detect_communities(&positive_part(g)));
            json!({
                "realization": i,
                "qea": edwards_anderson(s),
                "mean_abs_polarization": mean_abs_polarization(s),
                "mean_polarization": mean_polarization(s),
                "modularity": community.as_ref().map(|c| c.modularity),
                "community_labels": community.as_ref().map(|c| c.labels.clone()),
            })
        })
        .collect();

    let qea_mean = summaries.iter().map(|s| edwards_anderson(s)).sum::<f64>()
        / summaries.len() as f64;
    let single = correlation_matrix(
        &polarizations,
        CorrelationMode::PerRealization {
            index: 0,
            sorted: true,
        },
    )?;
    let ensemble = correlation_matrix(&polarizations, CorrelationMode::Ensemble)?;

    let schema = ["mode", "i", "j", "value"];
    let mut rows = Vec::new();
    for (label, c) in [("per_realization_sorted", &single), ("ensemble", &ensemble)] {
        for i in 0..n_agents {
            for j in 0..n_agents {
                rows.push(vec![
                    label.to_string(),
                    i.to_string(),
                    j.to_string(),
                    fmt_f64(c.matrix[(i, j)]),
                ]);
            }
        }
    }
    let corr_path = config.out_dir.join("correlation.csv");
    write_csv(&corr_path, &schema, &rows)?;
    write_sidecar(&corr_path, "diagnose", &schema, config, vec![], false)?;

    write_json(
        &config.out_dir.join("diagnose.json"),
        &json!({
            "input": input,
            "n_agents": n_agents,
            "realizations": summaries.len(),
            "mean_qea": qea_mean,
            "per_realization": per_realization,
            "correlation_modes": ["per_realization_sorted", "ensemble"],
        }),
    )?;
    Ok(vec![])
}
