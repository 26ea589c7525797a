//! Network and statistical observables of converged ensembles.
//!
//! The network measures operate on the aggregate coupling graph (sum of the
//! six weight channels); modularity and community detection use its positive
//! part, since the configuration-model null assumes non-negative weights.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{AqiaError, Result};

/// Community labels plus the modularity of that assignment.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CommunityAssignment {
    /// Community index per node; indices are contiguous from 0.
    pub labels: Vec<usize>,
    pub modularity: f64,
}

/// Node strengths and clustering coefficients of a weighted graph.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NetworkStats {
    /// Signed strength k_i = sum_j w_ij.
    pub strengths: Vec<f64>,
    /// Per-node clustering on the thresholded unweighted graph.
    pub clustering: Vec<f64>,
    /// Absolute-weight threshold that defined the unweighted graph.
    pub threshold: f64,
}

/// Elementwise positive part, the graph modularity operates on.
pub fn positive_part(w: &DMatrix<f64>) -> DMatrix<f64> {
    w.map(|x| x.max(0.0))
}

/// Modularity of a labeled partition of a non-negative weighted graph,
/// with the diagonal excluded from the pair sum (an empty graph scores 0).
pub fn modularity(w: &DMatrix<f64>, labels: &[usize]) -> f64 {
    let n = w.nrows();
    assert_eq!(labels.len(), n, "one label per node");
    let strengths: Vec<f64> = (0..n).map(|i| w.row(i).sum()).collect();
    let two_w: f64 = strengths.iter().sum();
    if two_w <= 0.0 {
        return 0.0;
    }
    let mut q = 0.0;
    for i in 0..n {
        for j in 0..n {
            if i != j && labels[i] == labels[j] {
                q += w[(i, j)] - strengths[i] * strengths[j] / two_w;
            }
        }
    }
    q / two_w
}

/// Greedy agglomerative modularity maximization.
///
/// Starts from singletons and merges the pair with the largest modularity
/// gain until no merge improves it; ties pick the smallest community-index
/// pair. Labels in the result are renumbered contiguously in order of first
/// node appearance.
pub fn detect_communities(w: &DMatrix<f64>) -> CommunityAssignment {
    let n = w.nrows();
    if n == 0 {
        return CommunityAssignment {
            labels: vec![],
            modularity: 0.0,
        };
    }
    let strengths: Vec<f64> = (0..n).map(|i| w.row(i).sum()).collect();
    let two_w: f64 = strengths.iter().sum();
    let mut membership: Vec<usize> = (0..n).collect();
    if two_w > 0.0 {
        // Community-level cut weights and total strengths.
        let mut cut = w.clone();
        let mut strength = strengths.clone();
        let mut alive: Vec<bool> = vec![true; n];
        loop {
            let mut best: Option<(f64, usize, usize)> = None;
            for a in 0..n {
                if !alive[a] {
                    continue;
                }
                for b in (a + 1)..n {
                    if !alive[b] {
                        continue;
                    }
                    let gain = 2.0 * (cut[(a, b)] - strength[a] * strength[b] / two_w) / two_w;
                    let better = match best {
                        None => gain > 0.0,
                        Some((g, _, _)) => gain > g + 1e-15,
                    };
                    if better && gain > 0.0 {
                        best = Some((gain, a, b));
                    }
                }
            }
            let Some((_, a, b)) = best else { break };
            // Merge b into a.
            for c in 0..n {
                if alive[c] && c != a && c != b {
                    cut[(a, c)] += cut[(b, c)];
                    cut[(c, a)] = cut[(a, c)];
                }
            }
            strength[a] += strength[b];
            alive[b] = false;
            for m in membership.iter_mut() {
                if *m == b {
                    *m = a;
                }
            }
        }
    }
    // Renumber communities contiguously by first appearance.
    let mut remap: Vec<Option<usize>> = vec![None; n];
    let mut next = 0;
    let labels: Vec<usize> = membership
        .iter()
        .map(|&m| {
            *remap[m].get_or_insert_with(|| {
                let id = next;
                next += 1;
                id
            })
        })
        .collect();
    let q = modularity(w, &labels);
    CommunityAssignment {
        labels,
        modularity: q,
    }
}

/// Signed strengths plus clustering coefficients on the graph obtained by
/// keeping edges with |w_ij| above `threshold_fraction` of the largest
/// absolute weight.
pub fn network_stats(w: &DMatrix<f64>, threshold_fraction: f64) -> NetworkStats {
    let n = w.nrows();
    let strengths: Vec<f64> = (0..n).map(|i| w.row(i).sum()).collect();
    let max_abs = w.iter().fold(0.0_f64, |m, &x| m.max(x.abs()));
    let threshold = threshold_fraction * max_abs;
    let adj = |i: usize, j: usize| i != j && w[(i, j)].abs() > threshold;

    let clustering = (0..n)
        .map(|i| {
            let neighbors: Vec<usize> = (0..n).filter(|&j| adj(i, j)).collect();
            let deg = neighbors.len();
            if deg < 2 {
                return 0.0;
            }
            let mut triangles = 0usize;
            for (a, &u) in neighbors.iter().enumerate() {
                for &v in &neighbors[(a + 1)..] {
                    if adj(u, v) {
                        triangles += 1;
                    }
                }
            }
            triangles as f64 / (deg * (deg - 1) / 2) as f64
        })
        .collect();

    NetworkStats {
        strengths,
        clustering,
        threshold,
    }
}

/// How a spin-spin correlation matrix is assembled.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum CorrelationMode {
    /// Products S_i S_j of a single realization, optionally with agents
    /// reordered by polarization to expose block structure.
    PerRealization { index: usize, sorted: bool },
    /// Average of per-realization products with agents sorted by
    /// polarization inside each realization before averaging.
    Ensemble,
}

/// A correlation matrix together with the assembly metadata.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CorrelationMatrix {
    #[serde(skip)]
    pub matrix: DMatrix<f64>,
    pub mode: CorrelationMode,
}

fn sorted_desc(values: &[f64]) -> Vec<f64> {
    let mut v = values.to_vec();
    v.sort_by(|a, b| b.partial_cmp(a).unwrap());
    v
}

/// Spin-spin correlation matrix over per-realization polarization vectors.
pub fn correlation_matrix(
    polarizations: &[Vec<f64>],
    mode: CorrelationMode,
) -> Result<CorrelationMatrix> {
    if polarizations.is_empty() {
        return Err(AqiaError::InvalidInput {
            what: "correlation matrix needs at least one realization".into(),
        });
    }
    let n = polarizations[0].len();
    let matrix = match mode {
        CorrelationMode::PerRealization { index, sorted } => {
            let s = polarizations
                .get(index)
                .ok_or_else(|| AqiaError::InvalidInput {
                    what: format!("realization index {index} out of range"),
                })?;
            let s = if sorted { sorted_desc(s) } else { s.clone() };
            DMatrix::from_fn(n, n, |i, j| s[i] * s[j])
        }
        CorrelationMode::Ensemble => {
            let mut acc = DMatrix::zeros(n, n);
            for s in polarizations {
                let s = sorted_desc(s);
                for i in 0..n {
                    for j in 0..n {
                        acc[(i, j)] += s[i] * s[j];
                    }
                }
            }
            acc / polarizations.len() as f64
        }
    };
    Ok(CorrelationMatrix { matrix, mode })
}

/// Susceptibility as the negated numerical derivative of the order parameter
/// over the grid: central differences inside, one-sided at the ends, so a
/// decreasing order parameter yields positive values.
pub fn susceptibility(points: &[(f64, f64)]) -> Result<Vec<(f64, f64)>> {
    if points.len() < 3 {
        return Err(AqiaError::TooFewGridPoints);
    }
    if !points.windows(2).all(|p| p[1].0 > p[0].0) {
        return Err(AqiaError::InvalidInput {
            what: "susceptibility grid must be strictly increasing".into(),
        });
    }
    let m = points.len();
    Ok((0..m)
        .map(|i| {
            let (lo, hi) = if i == 0 {
                (0, 1)
            } else if i == m - 1 {
                (m - 2, m - 1)
            } else {
                (i - 1, i + 1)
            };
            let slope = (points[hi].1 - points[lo].1) / (points[hi].0 - points[lo].0);
            (points[i].0, -slope)
        })
        .collect())
}

/// Fourth-order Binder cumulant of the sample set.
pub fn binder_cumulant(samples: &[f64]) -> Result<f64> {
    if samples.len() < 2 {
        return Err(AqiaError::InvalidInput {
            what: "Binder cumulant needs at least 2 samples".into(),
        });
    }
    let n = samples.len() as f64;
    let m2 = samples.iter().map(|m| m * m).sum::<f64>() / n;
    let m4 = samples.iter().map(|m| m.powi(4)).sum::<f64>() / n;
    if m2 == 0.0 {
        return Err(AqiaError::DegenerateBinderSamples);
    }
    Ok(1.0 - m4 / (3.0 * m2 * m2))
}
