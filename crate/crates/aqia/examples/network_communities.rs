//! Network diagnostics of converged coupling graphs.
//!
//! For one realization per preset: community detection with modularity on
//! the positive aggregate graph, node strengths, clustering coefficients,
//! and the sorted spin-spin correlation matrix.
//!
//! Run with: cargo run --release --example network_communities

use aqia::diagnostics::{
    correlation_matrix, detect_communities, network_stats, positive_part, CorrelationMode,
};
use aqia::ensemble::{run_realization, RegimePreset};
use aqia::meanfield::LoopConfig;

fn main() -> aqia::Result<()> {
    for preset in [
        RegimePreset::critical(),
        RegimePreset::glassy(),
        RegimePreset::community(),
    ] {
        let mut p = preset;
        p.n_agents = 16;
        let res = run_realization(&p, 42, &LoopConfig::default())?;
        let weights = res.fixed_point.weights.as_ref().unwrap();
        let communities = detect_communities(&positive_part(&weights.aggregate));
        let stats = network_stats(&weights.aggregate, 0.1);
        let mean_clustering =
            stats.clustering.iter().sum::<f64>() / stats.clustering.len() as f64;
        let n_communities = communities.labels.iter().max().unwrap() + 1;

        println!("== {} ==", p.name);
        println!(
            "  communities {}  Q {:.3}  mean clustering {:.3}",
            n_communities, communities.modularity, mean_clustering
        );
        println!("  labels  {:?}", communities.labels);

        let pol: Vec<Vec<f64>> = vec![res
            .fixed_point
            .summaries
            .iter()
            .map(|s| s.polarization)
            .collect()];
        let corr = correlation_matrix(
            &pol,
            CorrelationMode::PerRealization {
                index: 0,
                sorted: true,
            },
        )?;
        println!("  sorted correlation matrix (sign blocks):");
        for i in 0..p.n_agents {
            let row: String = (0..p.n_agents)
                .map(|j| {
                    let c = corr.matrix[(i, j)];
                    if c > 0.05 {
                        '+'
                    } else if c < -0.05 {
                        '-'
                    } else {
                        '.'
                    }
                })
                .collect();
            println!("    {row}");
        }
        println!();
    }
    Ok(())
}
