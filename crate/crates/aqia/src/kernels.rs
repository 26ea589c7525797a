//! Observable-similarity feedback: ensemble statistics, Gaussian weight
//! channels, and the renormalized fields each agent receives.
//!
//! Six symmetric weight matrices couple the agents pairwise, one per ordered
//! observable pair: SS, BB, UU (diagonal channels) and SB, SU, BU (cross
//! channels). Weights vanish on the diagonal and on masked-off edges.

use nalgebra::DMatrix;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::agent::{FeedbackFields, Summary};
use crate::error::{AqiaError, Result};
use crate::rng::seeded_rng;

/// How the renormalized fields aggregate over partners.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
pub enum FieldNorm {
    /// Plain sum over partners.
    Sum,
    /// Each pair term divided by sqrt(deg_i * deg_j) of the edge mask,
    /// keeping fields on the scale of one partner. On a complete graph this
    /// is a plain division by N - 1. Symmetric in (i, j), so the energy
    /// functional normalized the same way still has the fields as its
    /// gradient. This is the default: with plain sums the feedback scales
    /// with ensemble size and drives every regime into the same saturated
    /// state.
    #[default]
    MeanPartners,
}

/// Per-node divisor for [`FieldNorm::MeanPartners`]: masked degree, floored
/// at 1 so isolated nodes (whose weights are all zero) stay finite.
pub fn mask_degrees(mask: &DMatrix<bool>) -> Vec<f64> {
    (0..mask.nrows())
        .map(|i| {
            let d = (0..mask.ncols()).filter(|&j| j != i && mask[(i, j)]).count();
            d.max(1) as f64
        })
        .collect()
}

/// Knobs of the similarity kernels and field aggregation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KernelConfig {
    /// Regularizer added to every standard deviation before dividing.
    pub epsilon: f64,
    /// Use the centered energy (U - mu_U) in the UU term of the energy field.
    /// Off by default: the plain energy is the literal rule.
    pub centered_energy_fields: bool,
    pub field_norm: FieldNorm,
}

impl Default for KernelConfig {
    fn default() -> Self {
        Self {
            epsilon: 1e-6,
            centered_energy_fields: false,
            field_norm: FieldNorm::default(),
        }
    }
}

/// Per-channel population mean and standard deviation over the ensemble.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EnsembleStats {
    pub mean_polarization: f64,
    pub mean_bond_corr: f64,
    pub mean_energy: f64,
    pub std_polarization: f64,
    pub std_bond_corr: f64,
    pub std_energy: f64,
    pub epsilon: f64,
}

/// Population mean and standard deviation of `values`.
fn mean_std(values: impl Iterator<Item = f64> + Clone) -> (f64, f64) {
    let n = values.clone().count() as f64;
    let mean = values.clone().sum::<f64>() / n;
    let var = values.map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
    (mean, var.sqrt())
}

/// Ensemble means and population standard deviations of the three channels.
pub fn compute_stats(summaries: &[Summary], epsilon: f64) -> Result<EnsembleStats> {
    if summaries.len() < 2 {
        return Err(AqiaError::TooFewAgents {
            got: summaries.len(),
        });
    }
    let (mean_polarization, std_polarization) =
        mean_std(summaries.iter().map(|s| s.polarization));
    let (mean_bond_corr, std_bond_corr) = mean_std(summaries.iter().map(|s| s.bond_corr));
    let (mean_energy, std_energy) = mean_std(summaries.iter().map(|s| s.energy));
    Ok(EnsembleStats {
        mean_polarization,
        mean_bond_corr,
        mean_energy,
        std_polarization,
        std_bond_corr,
        std_energy,
        epsilon,
    })
}

/// The six feedback weight matrices plus the edge mask and their sum.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelWeights {
    pub ss: DMatrix<f64>,
    pub bb: DMatrix<f64>,
    pub uu: DMatrix<f64>,
    pub sb: DMatrix<f64>,
    pub su: DMatrix<f64>,
    pub bu: DMatrix<f64>,
    pub mask: DMatrix<bool>,
    /// Elementwise sum of the six channels; the graph used by network
    /// diagnostics.
    pub aggregate: DMatrix<f64>,
}

impl ChannelWeights {
    pub fn n(&self) -> usize {
        self.ss.nrows()
    }

    /// All-zero weights on a complete mask (decoupled ensemble of `n` agents).
    pub fn zero(n: usize) -> Self {
        Self {
            ss: DMatrix::zeros(n, n),
            bb: DMatrix::zeros(n, n),
            uu: DMatrix::zeros(n, n),
            sb: DMatrix::zeros(n, n),
            su: DMatrix::zeros(n, n),
            bu: DMatrix::zeros(n, n),
            mask: complete_mask(n),
            aggregate: DMatrix::zeros(n, n),
        }
    }
}

/// Symmetric zero-diagonal mask with every off-diagonal edge present.
pub fn complete_mask(n: usize) -> DMatrix<bool> {
    DMatrix::from_fn(n, n, |i, j| i != j)
}

/// Random symmetric edge mask: each pair is present independently with
/// probability `edge_density`. Density 1.0 yields the complete graph.
pub fn sample_mask(n: usize, edge_density: f64, seed: u64) -> Result<DMatrix<bool>> {
    if !(edge_density > 0.0 && edge_density <= 1.0) {
        return Err(AqiaError::EdgeDensity { got: edge_density });
    }
    if edge_density >= 1.0 {
        return Ok(complete_mask(n));
    }
    let mut rng = seeded_rng(seed);
    let mut mask = DMatrix::from_element(n, n, false);
    for i in 0..n {
        for j in (i + 1)..n {
            let present = rng.gen::<f64>() < edge_density;
            mask[(i, j)] = present;
            mask[(j, i)] = present;
        }
    }
    Ok(mask)
}

/// Gaussian similarity factor for one channel pair.
#[inline]
fn gauss(delta: f64) -> f64 {
    (-0.5 * delta * delta).exp()
}

/// Compute the six weight channels from the current summaries.
///
/// For each unmasked pair, the normalized difference of an observable O is
/// `(O_i - O_j) / (sigma_O + eps)`. Diagonal channels multiply the raw
/// observables (the UU channel multiplies centered, variance-normalized
/// energies); cross channels symmetrize the mixed product and average the two
/// squared differences inside the Gaussian.
pub fn channel_weights(
    summaries: &[Summary],
    stats: &EnsembleStats,
    mask: &DMatrix<bool>,
) -> ChannelWeights {
    let n = summaries.len();
    let eps = stats.epsilon;
    let ds = stats.std_polarization + eps;
    let db = stats.std_bond_corr + eps;
    let du = stats.std_energy + eps;

    let mut w = ChannelWeights {
        ss: DMatrix::zeros(n, n),
        bb: DMatrix::zeros(n, n),
        uu: DMatrix::zeros(n, n),
        sb: DMatrix::zeros(n, n),
        su: DMatrix::zeros(n, n),
        bu: DMatrix::zeros(n, n),
        mask: mask.clone(),
        aggregate: DMatrix::zeros(n, n),
    };

    for i in 0..n {
        for j in (i + 1)..n {
            if !mask[(i, j)] {
                continue;
            }
            let (si, sj) = (summaries[i].polarization, summaries[j].polarization);
            let (bi, bj) = (summaries[i].bond_corr, summaries[j].bond_corr);
            let (ui, uj) = (summaries[i].energy, summaries[j].energy);
            let cui = ui - stats.mean_energy;
            let cuj = uj - stats.mean_energy;

            let d_s = (si - sj) / ds;
            let d_b = (bi - bj) / db;
            let d_u = (ui - uj) / du;

            let ss = si * sj * gauss(d_s);
            let bb = bi * bj * gauss(d_b);
            let uu = (cui * cuj) / (du * du) * gauss(d_u);
            let sb = 0.5 * (si * bj + sj * bi) * (-0.25 * (d_s * d_s + d_b * d_b)).exp();
            let su = 0.5 * (si * uj + sj * ui) * (-0.25 * (d_s * d_s + d_u * d_u)).exp();
            let bu = 0.5 * (bi * uj + bj * ui) * (-0.25 * (d_b * d_b + d_u * d_u)).exp();

            for (m, v) in [
                (&mut w.ss, ss),
                (&mut w.bb, bb),
                (&mut w.uu, uu),
                (&mut w.sb, sb),
                (&mut w.su, su),
                (&mut w.bu, bu),
            ] {
                m[(i, j)] = v;
                m[(j, i)] = v;
            }
            let total = ss + bb + uu + sb + su + bu;
            w.aggregate[(i, j)] = total;
            w.aggregate[(j, i)] = total;
        }
    }
    w
}

/// Renormalized feedback fields acting on each agent.
///
/// Each field collects, over all partners, the matching diagonal-channel term
/// plus the two cross-channel terms feeding the same observable.
pub fn renormalized_fields(
    summaries: &[Summary],
    w: &ChannelWeights,
    config: &KernelConfig,
) -> Vec<FeedbackFields> {
    let n = summaries.len();
    let mean_energy = if config.centered_energy_fields {
        summaries.iter().map(|s| s.energy).sum::<f64>() / n as f64
    } else {
        0.0
    };
    let degrees = match config.field_norm {
        FieldNorm::Sum => None,
        FieldNorm::MeanPartners => Some(mask_degrees(&w.mask)),
    };

    (0..n)
        .map(|i| {
            let mut f = FeedbackFields::ZERO;
            for j in 0..n {
                if j == i {
                    continue;
                }
                let pair_norm = degrees
                    .as_ref()
                    .map_or(1.0, |d| (d[i] * d[j]).sqrt());
                let sj = summaries[j].polarization;
                let bj = summaries[j].bond_corr;
                let uj = summaries[j].energy;
                f.polarization +=
                    (w.ss[(i, j)] * sj + w.sb[(i, j)] * bj + w.su[(i, j)] * uj) / pair_norm;
                f.bond_corr +=
                    (w.bb[(i, j)] * bj + w.sb[(i, j)] * sj + w.bu[(i, j)] * uj) / pair_norm;
                f.energy += (w.uu[(i, j)] * (uj - mean_energy)
                    + w.su[(i, j)] * sj
                    + w.bu[(i, j)] * bj)
                    / pair_norm;
            }
            f
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use rand::rngs::StdRng;
    use rand::SeedableRng;

    fn summary(s: f64, b: f64, u: f64) -> Summary {
        Summary {
            polarization: s,
            bond_corr: b,
            energy: u,
        }
    }

    fn random_summaries(rng: &mut StdRng, n: usize) -> Vec<Summary> {
        (0..n)
            .map(|_| {
                summary(
                    rng.gen_range(-1.0..1.0),
                    rng.gen_range(-1.0..1.0),
                    rng.gen_range(-3.0..0.0),
                )
            })
            .collect()
    }

    #[test]
    fn stats_rejects_singleton() {
        assert!(compute_stats(&[summary(0.0, 0.0, 0.0)], 1e-6).is_err());
    }

    #[test]
    fn stats_identical_summaries() {
        let s = vec![summary(0.5, 0.3, -1.0); 4];
        let st = compute_stats(&s, 1e-6).unwrap();
        assert_eq!(st.mean_polarization, 0.5);
        assert_eq!(st.mean_bond_corr, 0.3);
        assert_eq!(st.mean_energy, -1.0);
        assert_eq!(st.std_polarization, 0.0);
        assert_eq!(st.std_bond_corr, 0.0);
        assert_eq!(st.std_energy, 0.0);
    }

    #[test]
    fn stats_two_point_symmetric() {
        let s = vec![summary(1.0, 0.0, 0.0), summary(-1.0, 0.0, 0.0)];
        let st = compute_stats(&s, 1e-6).unwrap();
        assert_eq!(st.mean_polarization, 0.0);
        assert_eq!(st.std_polarization, 1.0);
    }

    #[test]
    fn stats_population_variance() {
        let s = vec![
            summary(0.2, 0.0, 0.0),
            summary(0.4, 0.0, 0.0),
            summary(0.6, 0.0, 0.0),
        ];
        let st = compute_stats(&s, 1e-6).unwrap();
        assert_relative_eq!(st.mean_polarization, 0.4, epsilon = 1e-15);
        assert_relative_eq!(
            st.std_polarization,
            (2.0_f64 / 75.0).sqrt(),
            epsilon = 1e-12
        );
    }

    #[test]
    fn weights_identical_pair() {
        let s = vec![summary(0.5, 0.0, -1.0), summary(0.5, 0.0, -1.0)];
        let st = compute_stats(&s, 1e-6).unwrap();
        let w = channel_weights(&s, &st, &complete_mask(2));
        assert_relative_eq!(w.ss[(0, 1)], 0.25, epsilon = 1e-9);
        assert_eq!(w.ss[(0, 0)], 0.0);
        assert_eq!(w.ss[(1, 1)], 0.0);
    }

    #[test]
    fn weights_opposed_pair_formula() {
        // sigma_S = 1, delta = 2 (up to epsilon), w = -exp(-2).
        let s = vec![summary(1.0, 0.0, 0.0), summary(-1.0, 0.0, 0.0)];
        let st = compute_stats(&s, 1e-6).unwrap();
        let w = channel_weights(&s, &st, &complete_mask(2));
        assert_relative_eq!(w.ss[(0, 1)], -(-2.0_f64).exp(), epsilon = 1e-5);
    }

    #[test]
    fn weights_centered_energy_row_vanishes() {
        // Agent 0 sits exactly at the ensemble mean energy.
        let s = vec![
            summary(0.1, 0.1, -1.0),
            summary(0.2, 0.2, -0.5),
            summary(0.3, 0.3, -1.5),
        ];
        let st = compute_stats(&s, 1e-6).unwrap();
        assert_relative_eq!(st.mean_energy, -1.0, epsilon = 1e-15);
        let w = channel_weights(&s, &st, &complete_mask(3));
        for j in 0..3 {
            assert!(w.uu[(0, j)].abs() < 1e-12);
        }
    }

    #[test]
    fn weights_respect_mask() {
        let mut rng = StdRng::seed_from_u64(5);
        let s = random_summaries(&mut rng, 5);
        let st = compute_stats(&s, 1e-6).unwrap();
        let mask = sample_mask(5, 0.4, 99).unwrap();
        let w = channel_weights(&s, &st, &mask);
        for i in 0..5 {
            for j in 0..5 {
                if i == j || !mask[(i, j)] {
                    for m in [&w.ss, &w.bb, &w.uu, &w.sb, &w.su, &w.bu, &w.aggregate] {
                        assert_eq!(m[(i, j)], 0.0);
                    }
                }
            }
        }
    }

    #[test]
    fn weights_symmetric_and_bounded() {
        let mut rng = StdRng::seed_from_u64(17);
        for _ in 0..20 {
            let s = random_summaries(&mut rng, 6);
            let st = compute_stats(&s, 1e-6).unwrap();
            let w = channel_weights(&s, &st, &complete_mask(6));
            for i in 0..6 {
                for j in 0..6 {
                    for m in [&w.ss, &w.bb, &w.uu, &w.sb, &w.su, &w.bu] {
                        assert_eq!(m[(i, j)], m[(j, i)]);
                    }
                    let bound_s =
                        s[i].polarization.abs() * s[j].polarization.abs() + 1e-15;
                    let bound_b = s[i].bond_corr.abs() * s[j].bond_corr.abs() + 1e-15;
                    assert!(w.ss[(i, j)].abs() <= bound_s);
                    assert!(w.bb[(i, j)].abs() <= bound_b);
                    assert!(w.ss[(i, j)].abs() <= 1.0 + 1e-12);
                    assert!(w.bb[(i, j)].abs() <= 1.0 + 1e-12);
                }
            }
        }
    }

    #[test]
    fn weights_exchange_symmetry() {
        // Swapping the two agents' summaries leaves each w_ij unchanged.
        let mut rng = StdRng::seed_from_u64(29);
        for _ in 0..20 {
            let mut s = random_summaries(&mut rng, 4);
            let st = compute_stats(&s, 1e-6).unwrap();
            let w = channel_weights(&s, &st, &complete_mask(4));
            s.swap(1, 3);
            let st2 = compute_stats(&s, 1e-6).unwrap();
            let w2 = channel_weights(&s, &st2, &complete_mask(4));
            assert_relative_eq!(w.ss[(1, 3)], w2.ss[(1, 3)], epsilon = 1e-14);
            assert_relative_eq!(w.sb[(1, 3)], w2.sb[(1, 3)], epsilon = 1e-14);
            assert_relative_eq!(w.su[(1, 3)], w2.su[(1, 3)], epsilon = 1e-14);
            assert_relative_eq!(w.bu[(1, 3)], w2.bu[(1, 3)], epsilon = 1e-14);
        }
    }

    #[test]
    fn weights_permutation_equivariance() {
        let mut rng = StdRng::seed_from_u64(41);
        let s = random_summaries(&mut rng, 5);
        let st = compute_stats(&s, 1e-6).unwrap();
        let w = channel_weights(&s, &st, &complete_mask(5));
        // Apply the cyclic shift p(i) = (i + 1) mod 5.
        let perm: Vec<usize> = (0..5).map(|i| (i + 1) % 5).collect();
        let mut s_p = s.clone();
        for (i, &pi) in perm.iter().enumerate() {
            s_p[pi] = s[i];
        }
        let st_p = compute_stats(&s_p, 1e-6).unwrap();
        let w_p = channel_weights(&s_p, &st_p, &complete_mask(5));
        for i in 0..5 {
            for j in 0..5 {
                assert_relative_eq!(
                    w.aggregate[(i, j)],
                    w_p.aggregate[(perm[i], perm[j])],
                    epsilon = 1e-13
                );
            }
        }
    }

    #[test]
    fn fields_zero_weights() {
        let s = vec![summary(0.4, 0.2, -1.0); 3];
        let fields = renormalized_fields(&s, &ChannelWeights::zero(3), &KernelConfig::default());
        for f in fields {
            assert_eq!(f.polarization, 0.0);
            assert_eq!(f.bond_corr, 0.0);
            assert_eq!(f.energy, 0.0);
        }
    }

    #[test]
    fn fields_single_channel_pair() {
        let s = vec![summary(0.5, 0.0, 0.0), summary(0.5, 0.0, 0.0)];
        let mut w = ChannelWeights::zero(2);
        w.ss[(0, 1)] = 0.25;
        w.ss[(1, 0)] = 0.25;
        let fields = renormalized_fields(&s, &w, &KernelConfig::default());
        assert_relative_eq!(fields[0].polarization, 0.125, epsilon = 1e-15);
        assert_relative_eq!(fields[1].polarization, 0.125, epsilon = 1e-15);
        assert_eq!(fields[0].bond_corr, 0.0);
        assert_eq!(fields[0].energy, 0.0);
    }

    #[test]
    fn fields_match_triple_loop_oracle() {
        let mut rng = StdRng::seed_from_u64(53);
        let s = random_summaries(&mut rng, 3);
        let st = compute_stats(&s, 1e-6).unwrap();
        let w = channel_weights(&s, &st, &complete_mask(3));
        let config = KernelConfig {
            field_norm: FieldNorm::Sum,
            ..KernelConfig::default()
        };
        let fields = renormalized_fields(&s, &w, &config);
        // Independent brute-force evaluation straight from the definition.
        for i in 0..3 {
            let mut phi_s = 0.0;
            let mut phi_b = 0.0;
            let mut phi_u = 0.0;
            for j in 0..3 {
                if j == i {
                    continue;
                }
                phi_s += w.ss[(i, j)] * s[j].polarization
                    + w.sb[(i, j)] * s[j].bond_corr
                    + w.su[(i, j)] * s[j].energy;
                phi_b += w.bb[(i, j)] * s[j].bond_corr
                    + w.sb[(i, j)] * s[j].polarization
                    + w.bu[(i, j)] * s[j].energy;
                phi_u += w.uu[(i, j)] * s[j].energy
                    + w.su[(i, j)] * s[j].polarization
                    + w.bu[(i, j)] * s[j].bond_corr;
            }
            assert_relative_eq!(fields[i].polarization, phi_s, epsilon = 1e-14);
            assert_relative_eq!(fields[i].bond_corr, phi_b, epsilon = 1e-14);
            assert_relative_eq!(fields[i].energy, phi_u, epsilon = 1e-14);
        }
    }

    #[test]
    fn mean_partners_norm_divides() {
        // On a complete 4-node mask the degree normalization is exactly 3.
        let mut rng = StdRng::seed_from_u64(61);
        let s = random_summaries(&mut rng, 4);
        let st = compute_stats(&s, 1e-6).unwrap();
        let w = channel_weights(&s, &st, &complete_mask(4));
        let sum = renormalized_fields(
            &s,
            &w,
            &KernelConfig {
                field_norm: FieldNorm::Sum,
                ..KernelConfig::default()
            },
        );
        let mean = renormalized_fields(
            &s,
            &w,
            &KernelConfig {
                field_norm: FieldNorm::MeanPartners,
                ..KernelConfig::default()
            },
        );
        for (a, b) in sum.iter().zip(&mean) {
            assert_relative_eq!(a.polarization / 3.0, b.polarization, epsilon = 1e-14);
            assert_relative_eq!(a.energy / 3.0, b.energy, epsilon = 1e-14);
        }
    }

    #[test]
    fn mask_complete_graph() {
        let mask = sample_mask(4, 1.0, 0).unwrap();
        for i in 0..4 {
            for j in 0..4 {
                assert_eq!(mask[(i, j)], i != j);
            }
        }
    }

    #[test]
    fn mask_determinism() {
        assert_eq!(
            sample_mask(20, 0.3, 777).unwrap(),
            sample_mask(20, 0.3, 777).unwrap()
        );
        assert_ne!(
            sample_mask(20, 0.3, 777).unwrap(),
            sample_mask(20, 0.3, 778).unwrap()
        );
    }

    #[test]
    fn mask_rejects_bad_density() {
        assert!(sample_mask(5, 0.0, 1).is_err());
        assert!(sample_mask(5, 1.5, 1).is_err());
    }

    #[test]
    fn mask_edge_count_binomial() {
        let n = 30;
        let density = 0.3;
        let pairs = (n * (n - 1) / 2) as f64;
        let runs = 100;
        let mut total = 0usize;
        for seed in 0..runs {
            let mask = sample_mask(n, density, seed).unwrap();
            let edges: usize = (0..n)
                .map(|i| ((i + 1)..n).filter(|&j| mask[(i, j)]).count())
                .sum();
            total += edges;
        }
        let mean = total as f64 / runs as f64;
        let expect = density * pairs;
        let sigma = (pairs * density * (1.0 - density)).sqrt();
        assert!(
            (mean - expect).abs() < 3.0 * sigma / (runs as f64).sqrt(),
            "mean {mean} vs expected {expect}"
        );
    }
}
