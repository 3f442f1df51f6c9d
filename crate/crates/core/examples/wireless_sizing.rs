//! Sizing a wireless ad hoc network so a new node at (3, 3) hears at least
//! one neighbour with probability 0.9.
//!
//! The local connection probability is first computed by Monte Carlo, then
//! estimated from a single sampled network with MCCV, and both are turned
//! into a network size and checked by simulation.

use localdeg::analysis::{verify_connectivity, wireless_min_n, ConnectivitySource};
use localdeg::experiments::wireless_model;
use localdeg::mccv::estimate_with_mccv;
use localdeg::model::{EdgeMode, TruthRequest};
use localdeg::{SeedStream, SplitPlan, WeightScheme};

const Q: f64 = 0.9;

fn main() -> localdeg::Result<()> {
    let (rcm, origin) = wireless_model()?;
    let stream = SeedStream::new(3);

    let truth = rcm.truth(&origin, TruthRequest::MonteCarlo { samples: 200_000 }, stream.fork("truth"))?;
    let n0 = wireless_min_n(truth.value, Q)?;
    println!("p(x) = {:.5} +- {:.5}, n0 = {n0}", truth.value, truth.std_error());

    let g = rcm.sample_graph(500, &origin, EdgeMode::Undirected, &mut stream.fork("graph").rng())?;
    let plan = SplitPlan::new(50, stream.fork("splits").seed());
    let src = ConnectivitySource::OriginEdges { rcm: &rcm, origin: &origin };
    for scheme in WeightScheme::standard(0.1) {
        let est = estimate_with_mccv(&g, &scheme, &plan)?;
        let n_bar = wireless_min_n(est.estimate, Q)?;
        let hit = verify_connectivity(&src, n_bar, 20_000, stream.fork("verify"))?;
        println!(
            "{:<16} p = {:.5}  n = {n_bar:>4}  connected {:.4} +- {:.4}",
            scheme.label(),
            est.estimate,
            hit.value,
            hit.std_error
        );
    }
    Ok(())
}
