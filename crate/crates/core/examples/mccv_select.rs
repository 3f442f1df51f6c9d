//! Picks the neighbourhood size by Monte Carlo cross-validation on one
//! sampled graph and compares it with the oracle choice.

use localdeg::estimator::estimate_trace;
use localdeg::mccv::estimate_with_mccv;
use localdeg::model::{sample_sbm_graph, sbm_truth};
use localdeg::{SbmSpec, SeedStream, SplitPlan, WeightScheme};

fn main() -> localdeg::Result<()> {
    let spec = SbmSpec::running_example();
    let truth = sbm_truth(&spec)?.value;
    let stream = SeedStream::new(11);
    let g = sample_sbm_graph(&spec, &mut stream.fork("graph").rng())?;
    let plan = SplitPlan::new(100, stream.fork("splits").seed());

    println!("{:<16} {:>4} {:>9} {:>9} {:>6} {:>9}", "scheme", "m", "estimate", "min risk", "oracle", "error");
    for scheme in WeightScheme::standard(0.1) {
        let est = estimate_with_mccv(&g, &scheme, &plan)?;
        let trace = estimate_trace(&g, &scheme)?;
        let oracle = (0..=trace.m_max())
            .min_by(|&a, &b| (trace.value_at(a) - truth).abs().total_cmp(&(trace.value_at(b) - truth).abs()))
            .unwrap_or(0);
        println!(
            "{:<16} {:>4} {:>9.5} {:>9.6} {:>6} {:>+9.5}",
            scheme.label(),
            est.selected_m,
            est.estimate,
            est.curve.min_risk(),
            oracle,
            est.estimate - truth
        );
    }

    // Risk curve of the last scheme, coarsely.
    let est = estimate_with_mccv(&g, &WeightScheme::Geometric { gamma: 0.1 }, &plan)?;
    for (m, r) in est.curve.risk.iter().enumerate().step_by(5) {
        println!("R({m:>2}) = {r:.6}");
    }
    Ok(())
}
