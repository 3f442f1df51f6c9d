//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits
//! non-zero if any fails.

use std::fmt::Write as _;
use std::time::Instant;

use localdeg::analysis::{clt_check, verify_connectivity, wireless_min_n, CltSource, ConnectivitySource};
use localdeg::estimator::{estimate_pk, estimate_pk_recursive, estimate_trace, gamma_sequence};
use localdeg::experiments::{
    design_cases, run_design_benchmark, run_mccv_bias_profile, run_mccv_stability, run_mccv_study, run_mse_study,
    run_wireless_study, wireless_model, ExperimentConfig, ExperimentResult, ModelFamily, Statistic,
    PUBLISHED_DESIGN_TRUTHS,
};
use localdeg::graph::bfs_annuli;
use localdeg::model::{sample_sbm_graph, sbm_truth, GraphModel, TruthRequest};
use localdeg::{ConnectionFunction, Graph, Rcm, SbmSpec, SeedStream, SplitPlan, WeightScheme};
use rand::Rng;
use rayon::prelude::*;

const SBM_TRUTH: f64 = 0.062;
const WIRELESS_TRUTH: f64 = 0.021745;
const WIRELESS_TRUTH_TOL: f64 = 0.001;
const WIRELESS_N0: usize = 105;
const WIRELESS_CONNECT: f64 = 0.9047;
const WIRELESS_CONNECT_TOL: f64 = 0.01;
const RECURSION_TOL: f64 = 1e-12;
const GEOMETRIC_GAMMA_TOL: f64 = 1e-12;
const SIGMAS: f64 = 3.0;
const KS_MAX: f64 = 0.05;
const RANDOM_GRAPHS: usize = 1000;

struct Outcome {
    pass: bool,
    detail: String,
}

type Criterion = fn() -> Outcome;

fn outcome(pass: bool, detail: String) -> Outcome {
    Outcome { pass, detail }
}

fn running_example() -> GraphModel {
    GraphModel::Sbm(SbmSpec::running_example())
}

/// Random graph with 2..=100 vertices, sometimes directed, and a scheme
/// chosen by `i`.
fn random_case(i: usize) -> (Graph, WeightScheme) {
    let mut rng = SeedStream::new(1234).child(i as u64).rng();
    let v = rng.random_range(2..=100);
    let p = rng.random_range(0.0..0.15);
    let directed = rng.random_bool(0.25);
    let mut edges = Vec::new();
    for a in 0..v {
        for b in 0..v {
            if a != b && (directed || a < b) && rng.random::<f64>() < p {
                edges.push((a, b));
            }
        }
    }
    let g = Graph::from_edges(v, &edges, directed).unwrap();
    let scheme = match i % 4 {
        0 => WeightScheme::AnnulusSize,
        1 => WeightScheme::ConstantOne,
        2 => WeightScheme::Geometric { gamma: rng.random_range(0.01..0.99) },
        _ => WeightScheme::Custom { weights: (0..100).map(|_| rng.random_range(0.1..3.0)).collect() },
    };
    (g, scheme)
}

fn sbm_truth_exact() -> Outcome {
    let v = sbm_truth(&SbmSpec::running_example()).unwrap().value;
    outcome(v == SBM_TRUTH, format!("sbm_truth = {v} (want exactly {SBM_TRUTH})"))
}

fn wireless_numbers() -> Outcome {
    let (rcm, origin) = wireless_model().unwrap();
    let t = rcm.truth(&origin, TruthRequest::MonteCarlo { samples: 1_000_000 }, SeedStream::new(1)).unwrap();
    let truth_ok = (t.value - WIRELESS_TRUTH).abs() <= WIRELESS_TRUTH_TOL;
    let n0 = wireless_min_n(WIRELESS_TRUTH, 0.9).unwrap();
    let conn = verify_connectivity(
        &ConnectivitySource::Binomial { p: WIRELESS_TRUTH },
        WIRELESS_N0,
        100_000,
        SeedStream::new(2),
    )
    .unwrap();
    let conn_ok = (conn.value - WIRELESS_CONNECT).abs() <= WIRELESS_CONNECT_TOL;
    outcome(
        truth_ok && n0 == WIRELESS_N0 && conn_ok,
        format!(
            "MC truth {:.6} +- {:.6} (want {WIRELESS_TRUTH} +- {WIRELESS_TRUTH_TOL}: {}); n0 = {n0} (want {WIRELESS_N0}); \
             connect at {WIRELESS_N0} = {:.4} (want {WIRELESS_CONNECT} +- {WIRELESS_CONNECT_TOL}: {})",
            t.value,
            t.std_error(),
            if truth_ok { "ok" } else { "MISS" },
            conn.value,
            if conn_ok { "ok" } else { "MISS" },
        ),
    )
}

fn recursion_equivalence() -> Outcome {
    let worst = (0..RANDOM_GRAPHS)
        .into_par_iter()
        .map(|i| {
            let (g, scheme) = random_case(i);
            let ecc = bfs_annuli(&g).eccentricity();
            (0..=ecc)
                .map(|k| (estimate_pk_recursive(&g, &scheme, k).unwrap() - estimate_pk(&g, &scheme, k).unwrap()).abs())
                .fold(0.0, f64::max)
        })
        .reduce(|| 0.0, f64::max);
    outcome(worst <= RECURSION_TOL, format!("max |recursive - direct| = {worst:.3e} over {RANDOM_GRAPHS} graphs"))
}

fn gamma_identities() -> Outcome {
    let mut geo_dev: f64 = 0.0;
    let mut annulus_exact = true;
    let mut constant_dev: f64 = 0.0;
    for i in 0..RANDOM_GRAPHS {
        let (g, _) = random_case(i);
        let annuli = bfs_annuli(&g);
        for gamma in [0.05, 0.1, 0.5, 0.9] {
            let gs = gamma_sequence(&WeightScheme::Geometric { gamma }, &annuli).unwrap();
            geo_dev = gs.iter().map(|x| (x - gamma).abs()).fold(geo_dev, f64::max);
        }
        let sizes = annuli.sizes();
        let cum = annuli.cumulative_sizes();
        let gs = gamma_sequence(&WeightScheme::AnnulusSize, &annuli).unwrap();
        for (k, x) in gs.iter().enumerate() {
            annulus_exact &= *x == sizes[k + 1] as f64 / cum[k + 1] as f64;
        }
        let gs = gamma_sequence(&WeightScheme::ConstantOne, &annuli).unwrap();
        for (k, x) in gs.iter().enumerate() {
            constant_dev = constant_dev.max((x - 1.0 / (k + 2) as f64).abs());
        }
    }
    outcome(
        geo_dev <= GEOMETRIC_GAMMA_TOL && annulus_exact && constant_dev == 0.0,
        format!(
            "geometric max deviation {geo_dev:.2e}; annulus-size exact: {annulus_exact}; \
             constant-one vs 1/(i+2) max deviation {constant_dev:.2e}"
        ),
    )
}

fn subsequence_consistency() -> Outcome {
    let mismatches: usize = (0..RANDOM_GRAPHS)
        .into_par_iter()
        .map(|i| {
            let (g, scheme) = random_case(i);
            let trace = estimate_trace(&g, &scheme).unwrap();
            trace
                .boundaries()
                .iter()
                .enumerate()
                .filter(|(k, &m)| trace.value_at(m).to_bits() != estimate_pk(&g, &scheme, *k).unwrap().to_bits())
                .count()
        })
        .sum();
    outcome(mismatches == 0, format!("{mismatches} boundary values differ from p_k over {RANDOM_GRAPHS} graphs"))
}

fn empirical_law() -> Outcome {
    let spec = SbmSpec::running_example();
    let reps = 100_000;
    let root = SeedStream::new(6);
    let vals: Vec<f64> = (0..reps)
        .into_par_iter()
        .map(|r| {
            let g = sample_sbm_graph(&spec, &mut root.child(r as u64).rng()).unwrap();
            g.out_degree(0).unwrap() as f64 / g.n_other() as f64
        })
        .collect();
    let n = reps as f64;
    let mean = vals.iter().sum::<f64>() / n;
    let var = vals.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
    let m4 = vals.iter().map(|v| (v - mean).powi(4)).sum::<f64>() / n;
    let mean_se = (var / n).sqrt();
    let var_se = ((m4 - var * var) / n).sqrt();
    let want_var = SBM_TRUTH * (1.0 - SBM_TRUTH) / 50.0;
    let mean_z = (mean - SBM_TRUTH) / mean_se;
    let var_z = (var - want_var) / var_se;
    outcome(
        mean_z.abs() <= SIGMAS && var_z.abs() <= SIGMAS,
        format!("mean {mean:.6} (z = {mean_z:+.1} vs {SBM_TRUTH}); var {var:.4e} (z = {var_z:+.1} vs {want_var:.4e})"),
    )
}

fn oracle_improvement() -> Outcome {
    let cfg =
        ExperimentConfig::new(ModelFamily::Fixed(running_example()), WeightScheme::standard(0.1), vec![], 10_000, 7);
    let res = run_mse_study(&cfg).unwrap();
    let curves: Vec<Vec<f64>> = (0..3).map(|s| res.mse_curve(50, s)).collect();
    let mins: Vec<f64> = curves.iter().map(|c| c.iter().copied().fold(f64::INFINITY, f64::min)).collect();
    let improves = curves.iter().zip(&mins).all(|(c, m)| *m < c[0]);
    let ordered = mins[1].min(mins[2]) <= mins[0];
    let mut detail = format!("MSE(0) = {:.4e};", curves[0][0]);
    for (l, m) in res.labels.iter().zip(&mins) {
        write!(detail, " min {l} = {m:.4e};").unwrap();
    }
    outcome(improves && ordered, detail)
}

fn mccv_bias_constancy() -> Outcome {
    let plan = SplitPlan::new(50, 0);
    let mut worst: f64 = 0.0;
    let mut detail = String::new();
    for scheme in WeightScheme::standard(0.1) {
        let p = run_mccv_bias_profile(&running_example(), &scheme, 2000, &plan, 8).unwrap();
        let dev = p.max_deviation();
        worst = worst.max(dev);
        write!(detail, "{} max |d(m) - c|/se = {dev:.2}; ", scheme.label()).unwrap();
    }
    outcome(worst <= SIGMAS, detail.trim_end_matches("; ").to_string())
}

fn median(mut v: Vec<f64>) -> f64 {
    v.sort_by(f64::total_cmp);
    let k = v.len();
    if k % 2 == 1 {
        v[k / 2]
    } else {
        (v[k / 2 - 1] + v[k / 2]) / 2.0
    }
}

fn mccv_improvement() -> Outcome {
    let mut cfg =
        ExperimentConfig::new(ModelFamily::Fixed(running_example()), WeightScheme::standard(0.1), vec![], 1000, 9);
    cfg.mccv = SplitPlan::new(50, 0);
    let res = run_mccv_study(&cfg).unwrap();
    let meds: Vec<f64> = (0..3)
        .map(|s| {
            median(
                res.select(Statistic::LogRatio, 50, Some(s)).filter(|r| !r.flags.excluded()).map(|r| r.value).collect(),
            )
        })
        .collect();
    outcome(
        meds[2] < 0.0,
        format!(
            "median log error ratio: {} {:+.4}, {} {:+.4}, {} {:+.4}",
            res.labels[0], meds[0], res.labels[1], meds[1], res.labels[2], meds[2]
        ),
    )
}

fn clt_diagnostic() -> Outcome {
    let r = clt_check(&CltSource::Binomial { p: 0.01 }, 10_000, 10_000, SeedStream::new(10)).unwrap();
    outcome(r.ks_distance <= KS_MAX, format!("KS = {:.4} (max {KS_MAX})", r.ks_distance))
}

fn csv_bytes(res: &ExperimentResult) -> (Vec<u8>, Vec<u8>) {
    let mut a = Vec::new();
    let mut b = Vec::new();
    res.write_records_csv(&mut a).unwrap();
    res.write_aggregates_csv(&mut b).unwrap();
    (a, b)
}

fn all_studies() -> Vec<(Vec<u8>, Vec<u8>)> {
    let mut sbm =
        ExperimentConfig::new(ModelFamily::Fixed(running_example()), WeightScheme::standard(0.1), vec![], 40, 11);
    sbm.mccv = SplitPlan::new(10, 0);
    let mut growing = sbm.clone();
    growing.family = ModelFamily::GrowingSbm;
    growing.n_grid = vec![60, 120];
    let (rcm, origin) = wireless_model().unwrap();
    let mut wireless = sbm.clone();
    wireless.family = ModelFamily::Rcm { rcm, origin, edge_mode: Default::default() };
    wireless.n_grid = vec![100, 200];
    wireless.replicates = 10;
    wireless.truth_samples = 50_000;
    wireless.verify_replicates = 2_000;
    let mut design = sbm.clone();
    design.n_grid = vec![50, 75];
    design.replicates = 4;
    design.truth_samples = 50_000;

    let mut out = vec![
        csv_bytes(&run_mse_study(&sbm).unwrap()),
        csv_bytes(&run_mse_study(&growing).unwrap()),
        csv_bytes(&run_mccv_study(&sbm).unwrap()),
        csv_bytes(&run_wireless_study(&wireless).unwrap()),
        csv_bytes(&run_design_benchmark(&design, &design_cases().unwrap()).unwrap()),
    ];
    let g = sample_sbm_graph(&SbmSpec::running_example(), &mut SeedStream::new(12).rng()).unwrap();
    let stab = run_mccv_stability(&g, &WeightScheme::ConstantOne, &[10, 20, 40, 80], 0.5, 13).unwrap();
    let mut s = Vec::new();
    stab.write_csv(&mut s).unwrap();
    out.push((s, Vec::new()));
    out
}

fn determinism() -> Outcome {
    let saved = std::env::var("LOCALDEG_THREADS").ok();
    let mut runs = Vec::new();
    for threads in ["1", "2", "7"] {
        std::env::set_var("LOCALDEG_THREADS", threads);
        runs.push(all_studies());
    }
    match saved {
        Some(v) => std::env::set_var("LOCALDEG_THREADS", v),
        None => std::env::remove_var("LOCALDEG_THREADS"),
    }
    runs.push(all_studies());
    let same = runs.iter().all(|r| *r == runs[0]);
    let bytes: usize = runs[0].iter().map(|(a, b)| a.len() + b.len()).sum();
    outcome(same, format!("6 studies, LOCALDEG_THREADS in {{1, 2, 7, unset}}, {bytes} bytes each run"))
}

fn excluded_substitutes() -> Outcome {
    use statrs::distribution::{Beta, ContinuousCDF};

    // City truth: empirical-exact against a plain loop on a synthetic file.
    let mut rng = SeedStream::new(14).rng();
    let mut text = String::from("name,country,population,latitude,longitude\n");
    for i in 0..15549 {
        let lat: f64 = rng.random_range(-60.0..70.0);
        let lon: f64 = rng.random_range(-180.0..180.0);
        writeln!(text, "c{i},X,{},{lat},{lon}", rng.random_range(1..1_000_000)).unwrap();
    }
    let cities = localdeg::io::read_cities(text.as_bytes(), "synthetic").unwrap();
    let rcm = Rcm::new(
        localdeg::io::city_distribution(&cities).unwrap(),
        ConnectionFunction::exponential_decay(2.0 / 3.0).unwrap(),
    );
    let probe = [40.4, -3.7];
    let got = rcm.truth(&probe, TruthRequest::EmpiricalExact, SeedStream::new(0)).unwrap().value;
    let mut sum = 0.0;
    for c in &cities {
        sum += (-(2.0 / 3.0) * ((c.latitude - probe[0]).powi(2) + (c.longitude - probe[1]).powi(2)).sqrt()).exp();
    }
    let city_ok = got.to_bits() == (sum / cities.len() as f64).to_bits();

    // Beta design truths: quadrature against the Beta CDF.
    let beta = Beta::new(2.0, 5.0).unwrap();
    let case = design_cases().unwrap().into_iter().find(|c| c.label == "beta").unwrap();
    let mut beta_dev: f64 = 0.0;
    let mut log = String::new();
    for &(label, n, published) in PUBLISHED_DESIGN_TRUTHS.iter().filter(|t| t.0 == "beta") {
        let alpha = case.alpha(n);
        let rcm = Rcm::new(case.features.clone(), ConnectionFunction::hard_threshold(alpha).unwrap());
        for (oi, origin) in case.origins.iter().enumerate() {
            let q = rcm.truth(origin, TruthRequest::NumericIntegration, SeedStream::new(0)).unwrap().value;
            let x = origin[0];
            let exact = beta.cdf((x + alpha).min(1.0)) - beta.cdf((x - alpha).max(0.0));
            beta_dev = beta_dev.max((q - exact).abs());
            if n == 50 {
                write!(log, " {label}@{oi} {q:.3e} (published {:.3e});", published[oi]).unwrap();
            }
        }
    }
    outcome(
        city_ok && beta_dev <= 1e-10,
        format!(
            "excluded: proprietary city value and published design truths; substitutes: \
             15549-row empirical-exact bit-equal {city_ok}, beta quadrature vs CDF {beta_dev:.1e};{log}"
        ),
    )
}

fn main() {
    let criteria: Vec<(&str, Criterion)> = vec![
        ("sbm-truth", sbm_truth_exact),
        ("wireless-numbers", wireless_numbers),
        ("recursion-equivalence", recursion_equivalence),
        ("gamma-identities", gamma_identities),
        ("subsequence-consistency", subsequence_consistency),
        ("empirical-estimator-law", empirical_law),
        ("oracle-improvement", oracle_improvement),
        ("mccv-bias-constancy", mccv_bias_constancy),
        ("mccv-improvement", mccv_improvement),
        ("clt-diagnostic", clt_diagnostic),
        ("determinism", determinism),
        ("excluded-substitutes", excluded_substitutes),
    ];
    let mut failed = 0;
    for (i, (name, f)) in criteria.into_iter().enumerate() {
        let start = Instant::now();
        let o = f();
        let secs = start.elapsed().as_secs_f64();
        if !o.pass {
            failed += 1;
        }
        println!("{} {:>2} {name}: {} [{secs:.1}s]", if o.pass { "PASS" } else { "FAIL" }, i + 1, o.detail);
    }
    println!("{failed} failed");
    if failed > 0 {
        std::process::exit(1);
    }
}
