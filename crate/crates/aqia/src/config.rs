//! Run configuration: preset selection, file/flag merging, and validation.
//!
//! Settings come from an optional TOML file plus command-line flags; flags
//! win. Unknown keys in the file are hard errors so typos cannot silently
//! fall back to defaults.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::ensemble::{RegimePreset, Topology};
use crate::meanfield::LoopConfig;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("config file {path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("config file {path}: {message}")]
    Parse { path: PathBuf, message: String },
    #[error("unknown preset '{0}' (expected critical, glassy, or community)")]
    UnknownPreset(String),
    #[error("unknown topology '{0}' (expected chain, ring, or braced_ring)")]
    UnknownTopology(String),
    #[error("missing required setting: {0}")]
    Missing(&'static str),
    #[error("invalid value for {key}: {message}")]
    Invalid { key: &'static str, message: String },
}

/// Raw settings as they appear in a config file; every field optional.
#[derive(Debug, Clone, Default, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct Settings {
    pub preset: Option<String>,
    pub seed: Option<u64>,
    pub out: Option<PathBuf>,
    pub threads: Option<usize>,
    pub gamma: Option<f64>,
    pub mean_j: Option<f64>,
    pub sigma_j: Option<f64>,
    pub mean_h: Option<f64>,
    pub sigma_h: Option<f64>,
    pub n_agents: Option<usize>,
    pub n_qubits: Option<usize>,
    pub realizations: Option<usize>,
    pub edge_density: Option<f64>,
    pub topology: Option<String>,
    pub tol: Option<f64>,
    pub max_iters: Option<usize>,
    pub mixing: Option<f64>,
    pub epsilon: Option<f64>,
    pub random_init: Option<bool>,
    pub grid_j: Option<Vec<f64>>,
    pub grid_gamma: Option<Vec<f64>>,
    pub sizes: Option<Vec<usize>>,
    pub ratios: Option<Vec<f64>>,
    pub iters_per_step: Option<usize>,
    pub resamples: Option<usize>,
    pub bins: Option<usize>,
    pub raw: Option<PathBuf>,
    pub input: Option<PathBuf>,
    pub jacobian: Option<bool>,
}

impl Settings {
    /// Read settings from a TOML file.
    pub fn from_file(path: &Path) -> Result<Settings, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        toml::from_str(&text).map_err(|e| ConfigError::Parse {
            path: path.to_path_buf(),
            message: e.to_string(),
        })
    }

    /// Layer `over` on top of `self`: any field set in `over` wins.
    pub fn merged_with(mut self, over: &Settings) -> Settings {
        macro_rules! take {
            ($($field:ident),*) => {
                $(if over.$field.is_some() { self.$field = over.$field.clone(); })*
            };
        }
        take!(
            preset, seed, out, threads, gamma, mean_j, sigma_j, mean_h, sigma_h, n_agents,
            n_qubits, realizations, edge_density, topology, tol, max_iters, mixing, epsilon,
            random_init, grid_j, grid_gamma, sizes, ratios, iters_per_step, resamples, bins,
            raw, input, jacobian
        );
        self
    }
}

/// Fully resolved configuration for one command invocation.
#[derive(Debug, Clone, Serialize)]
pub struct RunConfig {
    pub preset: RegimePreset,
    pub loop_config: LoopConfig,
    pub seed: u64,
    pub out_dir: PathBuf,
    pub threads: Option<usize>,
    pub grid_coupling: Vec<f64>,
    pub grid_transverse: Vec<f64>,
    pub sizes: Vec<usize>,
    pub ratios: Vec<f64>,
    pub iters_per_step: usize,
    pub resamples: usize,
    pub bins: usize,
    pub raw_input: Option<PathBuf>,
    pub input_dir: Option<PathBuf>,
    pub jacobian: bool,
}

fn positive(key: &'static str, v: f64) -> Result<f64, ConfigError> {
    if v > 0.0 && v.is_finite() {
        Ok(v)
    } else {
        Err(ConfigError::Invalid {
            key,
            message: format!("must be positive and finite, got {v}"),
        })
    }
}

/// Resolve merged settings into a complete `RunConfig`.
///
/// The preset (default `critical`) supplies all physics parameters; explicit
/// settings override individual fields. A seed is required so no run is
/// silently nondeterministic.
pub fn resolve(settings: &Settings) -> Result<RunConfig, ConfigError> {
    let preset_name = settings.preset.as_deref().unwrap_or("critical");
    let mut preset = RegimePreset::by_name(preset_name)
        .ok_or_else(|| ConfigError::UnknownPreset(preset_name.to_string()))?;

    if let Some(g) = settings.gamma {
        preset.transverse = g;
    }
    if let Some(j) = settings.mean_j {
        preset.mean_coupling = j;
    }
    if let Some(s) = settings.sigma_j {
        preset.sigma_coupling = s;
    }
    if let Some(h) = settings.mean_h {
        preset.mean_field = h;
    }
    if let Some(s) = settings.sigma_h {
        preset.sigma_field = s;
    }
    if let Some(n) = settings.n_agents {
        preset.n_agents = n;
    }
    if let Some(n) = settings.n_qubits {
        preset.n_qubits = n;
    }
    if let Some(r) = settings.realizations {
        preset.realizations = r;
    }
    if let Some(d) = settings.edge_density {
        preset.edge_density = d;
    }
    if let Some(t) = &settings.topology {
        preset.topology = match t.as_str() {
            "chain" => Topology::Chain,
            "ring" => Topology::Ring,
            "braced_ring" => Topology::BracedRing,
            other => return Err(ConfigError::UnknownTopology(other.to_string())),
        };
    }
    preset
        .validate()
        .map_err(|e| ConfigError::Invalid {
            key: "preset",
            message: e.to_string(),
        })?;

    let mut loop_config = LoopConfig::default();
    if let Some(tol) = settings.tol {
        loop_config.tol = positive("tol", tol)?;
    }
    if let Some(m) = settings.max_iters {
        if m == 0 {
            return Err(ConfigError::Invalid {
                key: "max_iters",
                message: "must be at least 1".into(),
            });
        }
        loop_config.max_iters = m;
    }
    if let Some(eta) = settings.mixing {
        if !(eta > 0.0 && eta <= 1.0) {
            return Err(ConfigError::Invalid {
                key: "mixing",
                message: format!("must be in (0, 1], got {eta}"),
            });
        }
        loop_config.mixing = eta;
    }
    if let Some(eps) = settings.epsilon {
        loop_config.kernel.epsilon = positive("epsilon", eps)?;
    }
    if let Some(r) = settings.random_init {
        loop_config.random_init = r;
    }

    let seed = settings.seed.ok_or(ConfigError::Missing("seed"))?;
    let out_dir = settings
        .out
        .clone()
        .ok_or(ConfigError::Missing("out (output directory)"))?;

    let threads = match settings.threads {
        Some(t) => Some(t),
        None => std::env::var("AQIA_THREADS")
            .ok()
            .map(|v| {
                v.parse::<usize>().map_err(|_| ConfigError::Invalid {
                    key: "threads",
                    message: format!("AQIA_THREADS must be an integer, got '{v}'"),
                })
            })
            .transpose()?,
    };

    for (key, grid) in [
        ("grid_j", settings.grid_j.as_deref()),
        ("grid_gamma", settings.grid_gamma.as_deref()),
        ("ratios", settings.ratios.as_deref()),
    ] {
        if let Some(values) = grid {
            if values.iter().any(|v| !v.is_finite()) {
                return Err(ConfigError::Invalid {
                    key: match key {
                        "grid_j" => "grid_j",
                        "grid_gamma" => "grid_gamma",
                        _ => "ratios",
                    },
                    message: "grid values must be finite".into(),
                });
            }
        }
    }

    Ok(RunConfig {
        grid_coupling: settings
            .grid_j
            .clone()
            .unwrap_or_else(|| vec![preset.mean_coupling]),
        grid_transverse: settings
            .grid_gamma
            .clone()
            .unwrap_or_else(|| vec![preset.transverse]),
        sizes: settings.sizes.clone().unwrap_or_else(|| vec![20, 30, 40, 50]),
        ratios: settings
            .ratios
            .clone()
            .unwrap_or_else(|| (0..11).map(|i| 0.5 + 0.1 * i as f64).collect()),
        iters_per_step: settings.iters_per_step.unwrap_or(1),
        resamples: settings.resamples.unwrap_or(500),
        bins: settings.bins.unwrap_or(20),
        raw_input: settings.raw.clone(),
        input_dir: settings.input.clone(),
        jacobian: settings.jacobian.unwrap_or(true),
        preset,
        loop_config,
        seed,
        out_dir,
        threads,
    })
}

/// Parse settings from an optional file plus an override layer (flags).
pub fn parse_config(
    file: Option<&Path>,
    overrides: &Settings,
) -> Result<RunConfig, ConfigError> {
    let base = match file {
        Some(path) => Settings::from_file(path)?,
        None => Settings::default(),
    };
    resolve(&base.merged_with(overrides))
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::io::Write;

    fn base_settings() -> Settings {
        Settings {
            seed: Some(1),
            out: Some(PathBuf::from("/tmp/out")),
            ..Settings::default()
        }
    }

    #[test]
    fn critical_preset_defaults() {
        let cfg = resolve(&base_settings()).unwrap();
        let p = &cfg.preset;
        assert_eq!(p.name, "critical");
        assert_eq!((p.n_agents, p.n_qubits, p.realizations), (30, 6, 50));
        assert_eq!((p.mean_coupling, p.sigma_coupling), (1.0, 0.01));
        assert_eq!((p.mean_field, p.sigma_field), (0.0, 0.1));
        assert_eq!(p.transverse, 1.0);
        assert_eq!(p.edge_density, 1.0);
    }

    #[test]
    fn flag_overrides_preset() {
        let settings = Settings {
            preset: Some("glassy".into()),
            gamma: Some(0.6),
            ..base_settings()
        };
        let cfg = resolve(&settings).unwrap();
        assert_eq!(cfg.preset.transverse, 0.6);
        assert_eq!(cfg.preset.name, "glassy");
    }

    #[test]
    fn unknown_key_is_named_in_error() {
        let mut file = tempfile::NamedTempFile::new().unwrap();
        writeln!(file, "seed = 1\ngama = 0.5").unwrap();
        let err = Settings::from_file(file.path()).unwrap_err();
        let message = err.to_string();
        assert!(message.contains("gama"), "error should name the key: {message}");
    }

    #[test]
    fn unknown_preset_rejected() {
        let settings = Settings {
            preset: Some("cirtical".into()),
            ..base_settings()
        };
        let err = resolve(&settings).unwrap_err();
        assert!(err.to_string().contains("cirtical"));
    }

    #[test]
    fn missing_seed_rejected() {
        let settings = Settings {
            out: Some(PathBuf::from("/tmp/out")),
            ..Settings::default()
        };
        assert!(matches!(
            resolve(&settings),
            Err(ConfigError::Missing("seed"))
        ));
    }

    #[test]
    fn invalid_ranges_rejected() {
        for (make, key) in [
            (
                Settings {
                    tol: Some(-1.0),
                    ..base_settings()
                },
                "tol",
            ),
            (
                Settings {
                    mixing: Some(1.5),
                    ..base_settings()
                },
                "mixing",
            ),
            (
                Settings {
                    edge_density: Some(0.0),
                    ..base_settings()
                },
                "preset",
            ),
        ] {
            let err = resolve(&make).unwrap_err();
            assert!(err.to_string().contains(key), "{err}");
        }
    }

    #[test]
    fn file_then_flags_precedence() {
        let mut file = tempfile::NamedTempFile::new().unwrap();
        writeln!(file, "seed = 7\ngamma = 0.9\nn_agents = 12").unwrap();
        let overrides = Settings {
            gamma: Some(1.3),
            out: Some(PathBuf::from("/tmp/x")),
            ..Settings::default()
        };
        let cfg = parse_config(Some(file.path()), &overrides).unwrap();
        assert_eq!(cfg.seed, 7);
        assert_eq!(cfg.preset.transverse, 1.3);
        assert_eq!(cfg.preset.n_agents, 12);
    }

    #[test]
    fn topology_parse() {
        let settings = Settings {
            topology: Some("braced_ring".into()),
            ..base_settings()
        };
        assert_eq!(
            resolve(&settings).unwrap().preset.topology,
            Topology::BracedRing
        );
        let bad = Settings {
            topology: Some("moebius".into()),
            ..base_settings()
        };
        assert!(resolve(&bad).is_err());
    }
}
