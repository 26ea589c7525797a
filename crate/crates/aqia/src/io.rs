//! Plot-ready file emission and re-ingestion.
//!
//! Every artifact is a headered CSV (or JSON) accompanied by a
//! `<name>.meta.json` sidecar holding the fully resolved configuration and
//! seed, so any file can be regenerated from its sidecar alone. Floats are
//! written with 17 significant digits for bit-exact round trips.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::Serialize;

use crate::agent::Summary;
use crate::config::RunConfig;
use crate::error::{AqiaError, Result};
use crate::scaling::FssRaw;

/// 17-significant-digit float formatting (round-trips f64 exactly).
pub fn fmt_f64(x: f64) -> String {
    if x.is_nan() {
        "nan".to_string()
    } else {
        format!("{x:.16e}")
    }
}

fn parse_f64(s: &str) -> Result<f64> {
    if s == "nan" {
        return Ok(f64::NAN);
    }
    s.parse::<f64>().map_err(|_| AqiaError::InvalidInput {
        what: format!("malformed float '{s}'"),
    })
}

fn io_err(path: &Path, e: std::io::Error) -> AqiaError {
    AqiaError::InvalidInput {
        what: format!("{}: {e}", path.display()),
    }
}

/// Write a headered CSV file.
pub fn write_csv(path: &Path, header: &[&str], rows: &[Vec<String>]) -> Result<()> {
    let file = File::create(path).map_err(|e| io_err(path, e))?;
    let mut w = BufWriter::new(file);
    writeln!(w, "{}", header.join(",")).map_err(|e| io_err(path, e))?;
    for row in rows {
        writeln!(w, "{}", row.join(",")).map_err(|e| io_err(path, e))?;
    }
    Ok(())
}

/// Write pretty JSON.
pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let text = serde_json::to_string_pretty(value).map_err(|e| AqiaError::InvalidInput {
        what: format!("serialize {}: {e}", path.display()),
    })?;
    std::fs::write(path, text + "\n").map_err(|e| io_err(path, e))
}

/// Sidecar metadata attached to every emitted artifact.
#[derive(Debug, Serialize)]
pub struct Sidecar<'a> {
    pub artifact: &'a str,
    pub command: &'a str,
    pub schema: Vec<&'a str>,
    pub seed: u64,
    pub config: &'a RunConfig,
    pub warnings: Vec<String>,
    pub partial: bool,
}

/// Write `<file>.meta.json` next to an artifact.
pub fn write_sidecar(
    artifact: &Path,
    command: &str,
    schema: &[&str],
    config: &RunConfig,
    warnings: Vec<String>,
    partial: bool,
) -> Result<()> {
    let name = artifact
        .file_name()
        .and_then(|n| n.to_str())
        .unwrap_or("artifact");
    let sidecar = Sidecar {
        artifact: name,
        command,
        schema: schema.to_vec(),
        seed: config.seed,
        config,
        warnings,
        partial,
    };
    let mut meta_path = artifact.to_path_buf();
    let meta_name = format!("{name}.meta.json");
    meta_path.set_file_name(meta_name);
    write_json(&meta_path, &sidecar)
}

/// Read a headered CSV back into (header, rows of strings).
pub fn read_csv(path: &Path) -> Result<(Vec<String>, Vec<Vec<String>>)> {
    let file = File::open(path).map_err(|e| io_err(path, e))?;
    let mut lines = BufReader::new(file).lines();
    let header = lines
        .next()
        .ok_or_else(|| AqiaError::InvalidInput {
            what: format!("{}: empty file", path.display()),
        })?
        .map_err(|e| io_err(path, e))?;
    let header: Vec<String> = header.split(',').map(|s| s.to_string()).collect();
    let mut rows = Vec::new();
    for line in lines {
        let line = line.map_err(|e| io_err(path, e))?;
        if line.is_empty() {
            continue;
        }
        rows.push(line.split(',').map(|s| s.to_string()).collect());
    }
    Ok((header, rows))
}

fn column(header: &[String], name: &str, path: &Path) -> Result<usize> {
    header
        .iter()
        .position(|h| h == name)
        .ok_or_else(|| AqiaError::InvalidInput {
            what: format!("{}: missing column '{name}'", path.display()),
        })
}

pub const SUMMARIES_SCHEMA: [&str; 6] = [
    "realization",
    "seed",
    "agent",
    "polarization",
    "bond_corr",
    "energy",
];

/// Per-realization, per-agent converged summaries.
pub fn summaries_rows(results: &[(usize, u64, &[Summary])]) -> Vec<Vec<String>> {
    let mut rows = Vec::new();
    for (realization, seed, summaries) in results {
        for (agent, s) in summaries.iter().enumerate() {
            rows.push(vec![
                realization.to_string(),
                seed.to_string(),
                agent.to_string(),
                fmt_f64(s.polarization),
                fmt_f64(s.bond_corr),
                fmt_f64(s.energy),
            ]);
        }
    }
    rows
}

/// Read per-realization polarization vectors (and full summaries) back from
/// a summaries.csv, grouped by realization index order.
pub fn read_summaries(path: &Path) -> Result<Vec<Vec<Summary>>> {
    let (header, rows) = read_csv(path)?;
    let c_real = column(&header, "realization", path)?;
    let c_agent = column(&header, "agent", path)?;
    let c_pol = column(&header, "polarization", path)?;
    let c_bond = column(&header, "bond_corr", path)?;
    let c_energy = column(&header, "energy", path)?;
    let mut grouped: Vec<(usize, usize, Summary)> = Vec::with_capacity(rows.len());
    for row in &rows {
        grouped.push((
            row[c_real].parse().map_err(|_| AqiaError::InvalidInput {
                what: format!("bad realization index '{}'", row[c_real]),
            })?,
            row[c_agent].parse().map_err(|_| AqiaError::InvalidInput {
                what: format!("bad agent index '{}'", row[c_agent]),
            })?,
            Summary {
                polarization: parse_f64(&row[c_pol])?,
                bond_corr: parse_f64(&row[c_bond])?,
                energy: parse_f64(&row[c_energy])?,
            },
        ));
    }
    grouped.sort_by_key(|&(r, a, _)| (r, a));
    let mut out: Vec<Vec<Summary>> = Vec::new();
    let mut last_real = None;
    for (r, _, s) in grouped {
        if last_real != Some(r) {
            out.push(Vec::new());
            last_real = Some(r);
        }
        out.last_mut().unwrap().push(s);
    }
    Ok(out)
}

pub const EDGES_SCHEMA: [&str; 4] = ["realization", "i", "j", "weight"];

/// Read per-realization aggregate graphs from network_edges.csv.
pub fn read_network_edges(path: &Path, n_agents: usize) -> Result<Vec<nalgebra::DMatrix<f64>>> {
    let (header, rows) = read_csv(path)?;
    let c_real = column(&header, "realization", path)?;
    let c_i = column(&header, "i", path)?;
    let c_j = column(&header, "j", path)?;
    let c_w = column(&header, "weight", path)?;
    let max_real = rows
        .iter()
        .map(|r| r[c_real].parse::<usize>().unwrap_or(0))
        .max()
        .unwrap_or(0);
    let mut graphs = vec![nalgebra::DMatrix::zeros(n_agents, n_agents); max_real + 1];
    for row in &rows {
        let r: usize = row[c_real].parse().map_err(|_| AqiaError::InvalidInput {
            what: format!("bad realization '{}'", row[c_real]),
        })?;
        let i: usize = row[c_i].parse().map_err(|_| AqiaError::InvalidInput {
            what: format!("bad node index '{}'", row[c_i]),
        })?;
        let j: usize = row[c_j].parse().map_err(|_| AqiaError::InvalidInput {
            what: format!("bad node index '{}'", row[c_j]),
        })?;
        let w = parse_f64(&row[c_w])?;
        graphs[r][(i, j)] = w;
        graphs[r][(j, i)] = w;
    }
    Ok(graphs)
}

pub const FSS_SAMPLES_SCHEMA: [&str; 5] = [
    "n_agents",
    "gamma",
    "realization",
    "mean_abs_polarization",
    "mean_polarization",
];

/// Per-realization FSS sample rows.
pub fn fss_samples_rows(raw: &FssRaw) -> Vec<Vec<String>> {
    let mut rows = Vec::new();
    for (si, &n) in raw.sizes.iter().enumerate() {
        for (gi, &gamma) in raw.gammas.iter().enumerate() {
            for (r, (&abs_pol, &pol)) in raw.abs_polarization[si][gi]
                .iter()
                .zip(&raw.polarization[si][gi])
                .enumerate()
            {
                rows.push(vec![
                    n.to_string(),
                    fmt_f64(gamma),
                    r.to_string(),
                    fmt_f64(abs_pol),
                    fmt_f64(pol),
                ]);
            }
        }
    }
    rows
}

/// Rebuild the raw FSS samples from an fss_samples.csv.
pub fn read_fss_samples(path: &Path) -> Result<FssRaw> {
    let (header, rows) = read_csv(path)?;
    let c_n = column(&header, "n_agents", path)?;
    let c_g = column(&header, "gamma", path)?;
    let c_r = column(&header, "realization", path)?;
    let c_abs = column(&header, "mean_abs_polarization", path)?;
    let c_pol = column(&header, "mean_polarization", path)?;

    let mut parsed: Vec<(usize, f64, usize, f64, f64)> = Vec::with_capacity(rows.len());
    for row in &rows {
        parsed.push((
            row[c_n].parse().map_err(|_| AqiaError::InvalidInput {
                what: format!("bad n_agents '{}'", row[c_n]),
            })?,
            parse_f64(&row[c_g])?,
            row[c_r].parse().map_err(|_| AqiaError::InvalidInput {
                what: format!("bad realization '{}'", row[c_r]),
            })?,
            parse_f64(&row[c_abs])?,
            parse_f64(&row[c_pol])?,
        ));
    }
    let mut sizes: Vec<usize> = parsed.iter().map(|p| p.0).collect();
    sizes.sort_unstable();
    sizes.dedup();
    let mut gammas: Vec<f64> = parsed.iter().map(|p| p.1).collect();
    gammas.sort_by(|a, b| a.partial_cmp(b).unwrap());
    gammas.dedup();

    let mut abs_polarization =
        vec![vec![Vec::<(usize, f64)>::new(); gammas.len()]; sizes.len()];
    let mut polarization = vec![vec![Vec::<(usize, f64)>::new(); gammas.len()]; sizes.len()];
    for (n, g, r, abs_pol, pol) in parsed {
        let si = sizes.binary_search(&n).unwrap();
        let gi = gammas
            .iter()
            .position(|&x| x == g)
            .expect("gamma present by construction");
        abs_polarization[si][gi].push((r, abs_pol));
        polarization[si][gi].push((r, pol));
    }
    let order = |cell: Vec<(usize, f64)>| -> Vec<f64> {
        let mut cell = cell;
        cell.sort_by_key(|&(r, _)| r);
        cell.into_iter().map(|(_, v)| v).collect()
    };
    Ok(FssRaw {
        sizes,
        gammas,
        abs_polarization: abs_polarization
            .into_iter()
            .map(|row| row.into_iter().map(order).collect())
            .collect(),
        polarization: polarization
            .into_iter()
            .map(|row| row.into_iter().map(order).collect())
            .collect(),
    })
}

/// Resolve a `--raw` argument: either the samples file itself or a directory
/// containing `fss_samples.csv`.
pub fn locate_fss_samples(raw: &Path) -> PathBuf {
    if raw.is_dir() {
        raw.join("fss_samples.csv")
    } else {
        raw.to_path_buf()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn float_round_trip_is_exact() {
        for &x in &[
            0.1,
            -1.0 / 3.0,
            std::f64::consts::PI,
            1.2345678912345678e-300,
            -9.87654321e250,
            0.0,
        ] {
            let s = fmt_f64(x);
            let back: f64 = s.parse().unwrap();
            assert_eq!(x.to_bits(), back.to_bits(), "{x} -> {s}");
        }
        assert!(parse_f64(&fmt_f64(f64::NAN)).unwrap().is_nan());
    }

    #[test]
    fn csv_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("t.csv");
        write_csv(
            &path,
            &["a", "b"],
            &[
                vec!["1".into(), fmt_f64(0.5)],
                vec!["2".into(), fmt_f64(-1.5)],
            ],
        )
        .unwrap();
        let (header, rows) = read_csv(&path).unwrap();
        assert_eq!(header, vec!["a", "b"]);
        assert_eq!(rows.len(), 2);
        assert_eq!(parse_f64(&rows[1][1]).unwrap(), -1.5);
    }

    #[test]
    fn fss_samples_round_trip() {
        let raw = FssRaw {
            sizes: vec![4, 8],
            gammas: vec![0.5, 1.0],
            abs_polarization: vec![
                vec![vec![0.9, 0.8], vec![0.6, 0.7]],
                vec![vec![0.85, 0.88], vec![0.55, 0.6]],
            ],
            polarization: vec![
                vec![vec![0.9, -0.8], vec![0.6, -0.7]],
                vec![vec![0.85, -0.88], vec![0.55, -0.6]],
            ],
        };
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("fss_samples.csv");
        write_csv(&path, &FSS_SAMPLES_SCHEMA, &fss_samples_rows(&raw)).unwrap();
        let back = read_fss_samples(&path).unwrap();
        assert_eq!(back.sizes, raw.sizes);
        assert_eq!(back.gammas, raw.gammas);
        for si in 0..2 {
            for gi in 0..2 {
                for r in 0..2 {
                    assert_relative_eq!(
                        back.abs_polarization[si][gi][r],
                        raw.abs_polarization[si][gi][r],
                        epsilon = 0.0
                    );
                    assert_relative_eq!(
                        back.polarization[si][gi][r],
                        raw.polarization[si][gi][r],
                        epsilon = 0.0
                    );
                }
            }
        }
    }

    #[test]
    fn summaries_round_trip() {
        let s0 = vec![
            Summary {
                polarization: 0.25,
                bond_corr: -0.5,
                energy: -1.25,
            },
            Summary {
                polarization: -0.75,
                bond_corr: 0.1,
                energy: -0.9,
            },
        ];
        let s1 = vec![
            Summary {
                polarization: 1.0 / 3.0,
                bond_corr: 0.0,
                energy: -2.0 / 3.0,
            },
            Summary {
                polarization: 0.0,
                bond_corr: 0.0,
                energy: 0.0,
            },
        ];
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("summaries.csv");
        let rows = summaries_rows(&[(0, 11, &s0), (1, 12, &s1)]);
        write_csv(&path, &SUMMARIES_SCHEMA, &rows).unwrap();
        let back = read_summaries(&path).unwrap();
        assert_eq!(back.len(), 2);
        assert_eq!(back[0], s0);
        assert_eq!(back[1], s1);
    }
}
