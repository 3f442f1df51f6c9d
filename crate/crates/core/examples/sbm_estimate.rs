//! Samples the two-community running example and prints the estimate trace
//! for each standard weight scheme next to the closed-form truth.
//!
//! ```text
//! cargo run --example sbm_estimate -- [seed]
//! ```

use localdeg::estimator::estimate_trace;
use localdeg::graph::bfs_annuli;
use localdeg::model::{sample_sbm_graph, sbm_truth};
use localdeg::{SbmSpec, SeedStream, WeightScheme};

fn main() -> localdeg::Result<()> {
    let seed = std::env::args().nth(1).and_then(|s| s.parse().ok()).unwrap_or(7);
    let spec = SbmSpec::running_example();
    let truth = sbm_truth(&spec)?.value;
    let g = sample_sbm_graph(&spec, &mut SeedStream::new(seed).rng())?;
    let annuli = bfs_annuli(&g);

    println!("vertices {}  edges {}  origin degree {}", g.vertex_count(), g.edge_count(), g.out_degree(0)?);
    println!("annulus sizes {:?}", annuli.sizes());
    println!("truth {truth}");
    for scheme in WeightScheme::standard(0.1) {
        let trace = estimate_trace(&g, &scheme)?;
        println!("\n{}", scheme.label());
        for (k, &m) in trace.boundaries().iter().enumerate() {
            let v = trace.value_at(m);
            println!("  k={k} m={m:>3} estimate {v:.5} error {:+.5}", v - truth);
        }
    }
    Ok(())
}
