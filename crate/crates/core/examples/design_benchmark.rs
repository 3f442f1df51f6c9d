//! Computes the truths of the design benchmark cases and logs them next to
//! the published values, then runs a short benchmark.

use localdeg::experiments::{
    design_cases, run_design_benchmark, ExperimentConfig, ModelFamily, Statistic, PUBLISHED_DESIGN_TRUTHS,
};
use localdeg::{ConnectionFunction, Rcm, SeedStream, WeightScheme};

fn main() -> localdeg::Result<()> {
    let cases = design_cases()?;
    let stream = SeedStream::new(1);
    println!("{:<8} {:>4} {:>6} {:>12} {:>12}", "case", "n", "origin", "computed", "published");
    for &(label, n, published) in PUBLISHED_DESIGN_TRUTHS {
        let case = cases.iter().find(|c| c.label == label).expect("known case");
        let rcm = Rcm::new(case.features.clone(), ConnectionFunction::hard_threshold(case.alpha(n))?);
        for (oi, origin) in case.origins.iter().enumerate() {
            let method = rcm.best_truth_method(200_000);
            let t = rcm.truth(origin, method, stream.fork(label).child(oi as u64))?;
            println!("{label:<8} {n:>4} {oi:>6} {:>12.4e} {:>12.4e}", t.value, published[oi]);
        }
    }

    let mut cfg = ExperimentConfig::new(ModelFamily::GrowingSbm, WeightScheme::standard(0.1), vec![50], 20, 9);
    cfg.mccv.replications = 20;
    cfg.truth_samples = 100_000;
    let res = run_design_benchmark(&cfg, &cases)?;
    println!("\nmedian log error ratio, n = 50, 20 replicates");
    for (si, label) in res.labels.iter().enumerate() {
        let mut v: Vec<f64> =
            res.select(Statistic::LogRatio, 50, Some(si)).filter(|r| !r.flags.excluded()).map(|r| r.value).collect();
        if v.is_empty() {
            continue;
        }
        v.sort_by(f64::total_cmp);
        println!("  {label:<32} {:+.3}  ({} usable)", v[v.len() / 2], v.len());
    }
    Ok(())
}
