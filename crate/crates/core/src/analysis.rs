//! Diagnostics: the oracle bound, variance and moment checks, a CLT check
//! for the empirical estimator, and wireless network sizing.

use rand_distr::{Binomial, Distribution};
use rayon::prelude::*;
use statrs::distribution::{ContinuousCDF, Normal};

use crate::error::{Error, Result};
use crate::estimator::{estimate_pk, gamma_sequence, WeightScheme};
use crate::graph::bfs_annuli;
use crate::model::{GraphModel, Rcm, SbmSpec, TruthRequest};
use crate::rng::SeedStream;

/// A Monte Carlo estimate with its standard error.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Estimate {
    pub value: f64,
    pub std_error: f64,
}

/// Inputs to the oracle bound on `E|p_{k+1} - p(x)|^2`.
#[derive(Clone, Debug, PartialEq)]
pub struct OracleBoundInputs {
    pub k0: usize,
    pub k: usize,
    /// Step sizes indexed from 0; missing entries count as 0.
    pub gammas: Vec<f64>,
    pub n: usize,
    /// `Var P_ij`.
    pub sigma2: f64,
    /// `E|p_{k0} - p(x)|^2`.
    pub initial_error: f64,
    /// `E max_{i in V_{k+1}} |p(X_i) - p(x)|^2`.
    pub approx: f64,
}

impl OracleBoundInputs {
    pub fn validate(&self) -> Result<()> {
        if self.k0 > self.k || self.k > self.n {
            return Err(Error::invalid(format!(
                "need 0 <= k0 <= k <= n, got k0={} k={} n={}",
                self.k0, self.k, self.n
            )));
        }
        if !(0.0..=0.25).contains(&self.sigma2) {
            return Err(Error::invalid(format!("sigma^2 must lie in [0, 1/4], got {}", self.sigma2)));
        }
        if !(self.initial_error >= 0.0 && self.approx >= 0.0) {
            return Err(Error::invalid("expectation terms must be non-negative"));
        }
        Ok(())
    }
}

/// Right-hand side of the oracle bound with the universal constant set to 1:
///
/// ```text
/// E|d_k0|^2 exp(-2 S1) + S2 + S1^2 [ (3 + 4 sigma^2 log n) / n + approx ]
/// ```
///
/// with `S1 = sum_{i=k0}^{k} gamma_i` and `S2 = sum gamma_i^2`. The bound
/// only holds up to that unspecified constant, so treat it as a shape.
pub fn oracle_bound_rhs(inp: &OracleBoundInputs) -> Result<f64> {
    inp.validate()?;
    let window = (inp.k0..=inp.k).map(|i| inp.gammas.get(i).copied().unwrap_or(0.0));
    let (s1, s2) = window.fold((0.0, 0.0), |(a, b), g| (a + g, b + g * g));
    let n = inp.n.max(1) as f64;
    let noise = (3.0 + 4.0 * inp.sigma2 * n.ln()) / n;
    Ok(inp.initial_error * (-2.0 * s1).exp() + s2 + s1 * s1 * (noise + inp.approx))
}

const BATCH: usize = 4096;

fn batched<T: Send>(
    total: usize,
    stream: SeedStream,
    f: impl Fn(usize, &mut crate::rng::StreamRng) -> Result<T> + Sync,
) -> Result<Vec<T>> {
    let batches = total.div_ceil(BATCH);
    let out: Vec<Result<Vec<T>>> = (0..batches)
        .into_par_iter()
        .map(|b| {
            let mut rng = stream.child(b as u64).rng();
            let len = BATCH.min(total - b * BATCH);
            (0..len).map(|i| f(b * BATCH + i, &mut rng)).collect()
        })
        .collect();
    let mut all = Vec::with_capacity(total);
    for r in out {
        all.extend(r?);
    }
    Ok(all)
}

fn mean_and_se(xs: &[f64]) -> Estimate {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    let var = if xs.len() > 1 { xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0) } else { 0.0 };
    Estimate { value: mean, std_error: (var / n).sqrt() }
}

/// Sample variance of `rho(|X - Y|)` over i.i.d. pairs `X, Y ~ F`.
pub fn estimate_sigma2(rcm: &Rcm, samples: usize, stream: SeedStream) -> Result<Estimate> {
    if samples < 2 {
        return Err(Error::invalid("sigma^2 needs at least 2 samples"));
    }
    let vals = batched(samples, stream, |_, rng| {
        let f = crate::model::sample_features(&rcm.features, 2, rng)?;
        Ok(rcm.connection.eval(rcm.metric.distance(f.point(0), f.point(1))))
    })?;
    let n = samples as f64;
    let mean = vals.iter().sum::<f64>() / n;
    let var = vals.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
    let m4 = vals.iter().map(|v| (v - mean).powi(4)).sum::<f64>() / n;
    Ok(Estimate { value: var.clamp(0.0, 0.25), std_error: ((m4 - var * var).max(0.0) / n).sqrt() })
}

/// `E max_{i in V_{k+1}} (p(X_i) - p(x))^2` by simulation. SBM vertex
/// probabilities are closed-form per community; RCM ones use the exact
/// method when available and `truth_samples` Monte Carlo draws otherwise.
pub fn estimate_approx_term(
    model: &GraphModel,
    k: usize,
    replicates: usize,
    truth_samples: usize,
    stream: SeedStream,
) -> Result<Estimate> {
    if replicates == 0 {
        return Err(Error::invalid("need at least one replicate"));
    }
    let origin_truth = model.origin_truth(truth_samples, stream.fork("origin-truth"))?.value;
    let graphs = stream.fork("graphs");
    let vals: Vec<Result<f64>> = (0..replicates)
        .into_par_iter()
        .map(|r| {
            let sg = model.sample(&mut graphs.child(r as u64).rng())?;
            let annuli = bfs_annuli(&sg.graph);
            let ball = annuli.layers().iter().take(k + 2).flatten();
            let mut worst: f64 = 0.0;
            match (model, &sg.labels) {
                (GraphModel::Sbm(spec), Some(labels)) => {
                    for &v in ball {
                        worst = worst.max((spec.community_truth(labels[v]) - origin_truth).powi(2));
                    }
                }
                (GraphModel::Rcm { rcm, .. }, _) => {
                    let feats = sg.graph.features().expect("RCM graphs carry features");
                    let method = rcm.best_truth_method(truth_samples);
                    let vstream = stream.fork("vertex-truth").child(r as u64);
                    for &v in ball {
                        let t = rcm.truth(feats.point(v), method, vstream.child(v as u64))?.value;
                        worst = worst.max((t - origin_truth).powi(2));
                    }
                }
                _ => unreachable!("SBM samples carry labels"),
            }
            Ok(worst)
        })
        .collect();
    let vals = vals.into_iter().collect::<Result<Vec<_>>>()?;
    Ok(mean_and_se(&vals))
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MomentCheck {
    /// `[E{rho - p(X)}^3]^2`
    pub lhs: f64,
    /// `n [E{rho - p(X)}^2]^3`
    pub rhs: f64,
    /// `lhs / rhs`, 0 when both vanish.
    pub ratio: f64,
}

/// Monte Carlo evaluation of the moment condition behind the oracle bound,
/// using `samples` draws each of `X` and `Y`; `p(X_i)` is estimated by the
/// average of `rho` against all `Y` draws.
pub fn check_moment_condition(rcm: &Rcm, n: usize, samples: usize, stream: SeedStream) -> Result<MomentCheck> {
    if samples < 2 {
        return Err(Error::invalid("moment check needs at least 2 samples"));
    }
    let xs = crate::model::sample_features(&rcm.features, samples, &mut stream.fork("x").rng())?;
    let ys = crate::model::sample_features(&rcm.features, samples, &mut stream.fork("y").rng())?;
    let rows: Vec<(f64, f64)> = (0..samples)
        .into_par_iter()
        .map(|i| {
            let rho: Vec<f64> = ys.iter().map(|y| rcm.connection.eval(rcm.metric.distance(xs.point(i), y))).collect();
            let p = rho.iter().sum::<f64>() / samples as f64;
            rho.iter().fold((0.0, 0.0), |(m2, m3), r| {
                let d = r - p;
                (m2 + d * d, m3 + d * d * d)
            })
        })
        .collect();
    let total = (samples * samples) as f64;
    let (m2, m3) = rows.iter().fold((0.0, 0.0), |(a, b), (c, d)| (a + c, b + d));
    let (m2, m3) = (m2 / total, m3 / total);
    let lhs = m3 * m3;
    let rhs = n as f64 * m2.powi(3);
    let ratio = if rhs > 0.0 { lhs / rhs } else { 0.0 };
    Ok(MomentCheck { lhs, rhs, ratio })
}

/// Where the origin degree comes from in the CLT check.
#[derive(Clone, Debug, PartialEq)]
pub enum CltSource<'a> {
    /// `B_0 ~ Bin(n, p)` drawn directly.
    Binomial { p: f64 },
    /// A full graph per replicate; `n` is taken from the model.
    Graphs { model: &'a GraphModel, truth: f64 },
}

#[derive(Clone, Debug, PartialEq)]
pub struct CltReport {
    pub standardized: Vec<f64>,
    pub ks_distance: f64,
}

/// One-sample Kolmogorov–Smirnov distance to the standard normal.
pub fn ks_to_standard_normal(samples: &[f64]) -> f64 {
    let normal = Normal::standard();
    let mut z: Vec<f64> = samples.to_vec();
    z.sort_by(f64::total_cmp);
    let n = z.len() as f64;
    z.iter()
        .enumerate()
        .map(|(i, &v)| {
            let c = normal.cdf(v);
            ((i + 1) as f64 / n - c).max(c - i as f64 / n)
        })
        .fold(0.0, f64::max)
}

/// Standardises `p_0 = B_0 / n` as `sqrt(n p / (1 - p)) (p_0 / p - 1)` over
/// `replicates` draws and measures the KS distance to `N(0, 1)`.
pub fn clt_check(source: &CltSource, n: usize, replicates: usize, stream: SeedStream) -> Result<CltReport> {
    if replicates == 0 {
        return Err(Error::invalid("CLT check needs at least one replicate"));
    }
    let (p, n) = match source {
        CltSource::Binomial { p } => (*p, n),
        CltSource::Graphs { model, truth } => (*truth, model.n_other()),
    };
    if !(p > 0.0 && p < 1.0) {
        return Err(Error::invalid(format!("CLT check needs 0 < p < 1, got {p}")));
    }
    if n == 0 {
        return Err(Error::invalid("CLT check needs n >= 1"));
    }
    let scale = (n as f64 * p / (1.0 - p)).sqrt();
    let degrees: Vec<u64> = match source {
        CltSource::Binomial { .. } => {
            let bin = Binomial::new(n as u64, p).map_err(|e| Error::invalid(format!("binomial: {e}")))?;
            batched(replicates, stream, |_, rng| Ok(bin.sample(rng)))?
        }
        CltSource::Graphs { model, .. } => (0..replicates)
            .into_par_iter()
            .map(|r| Ok(model.sample(&mut stream.child(r as u64).rng())?.graph.out_degree(0)? as u64))
            .collect::<Result<Vec<_>>>()?,
    };
    let standardized: Vec<f64> = degrees.iter().map(|&b| scale * (b as f64 / n as f64 / p - 1.0)).collect();
    let ks_distance = ks_to_standard_normal(&standardized);
    Ok(CltReport { standardized, ks_distance })
}

/// Smallest `n` with `P(Bin(n, p) > 0) >= q`, i.e.
/// `ceil(log(1 - q) / log(1 - p))`.
pub fn wireless_min_n(p: f64, q: f64) -> Result<usize> {
    if !(p > 0.0 && p < 1.0) {
        return Err(Error::invalid(format!("connection probability must lie in (0, 1), got {p}")));
    }
    if !(q > 0.0 && q < 1.0) {
        return Err(Error::invalid(format!("target probability must lie in (0, 1), got {q}")));
    }
    let miss = |n: usize| (1.0 - p).powf(n as f64);
    let mut n = ((1.0 - q).ln() / (1.0 - p).ln()).ceil().max(1.0) as usize;
    // settle rounding at the boundary so the bracket holds exactly
    while miss(n) > 1.0 - q {
        n += 1;
    }
    while n > 1 && miss(n - 1) <= 1.0 - q {
        n -= 1;
    }
    Ok(n)
}

/// How the origin degree is drawn in [`verify_connectivity`].
#[derive(Clone, Debug, PartialEq)]
pub enum ConnectivitySource<'a> {
    Binomial {
        p: f64,
    },
    /// Fresh features and origin edges only; same law as the full graph.
    OriginEdges {
        rcm: &'a Rcm,
        origin: &'a [f64],
    },
    FullGraph {
        rcm: &'a Rcm,
        origin: &'a [f64],
    },
}

/// Fraction of `replicates` graphs with `n` non-origin vertices in which
/// the origin has at least one neighbour.
pub fn verify_connectivity(
    source: &ConnectivitySource,
    n: usize,
    replicates: usize,
    stream: SeedStream,
) -> Result<Estimate> {
    if replicates == 0 {
        return Err(Error::invalid("need at least one replicate"));
    }
    let hits: Vec<f64> = match source {
        ConnectivitySource::Binomial { p } => {
            if !(0.0..=1.0).contains(p) {
                return Err(Error::invalid(format!("probability out of range: {p}")));
            }
            let bin = Binomial::new(n as u64, *p).map_err(|e| Error::invalid(format!("binomial: {e}")))?;
            batched(replicates, stream, |_, rng| Ok(if bin.sample(rng) > 0 { 1.0 } else { 0.0 }))?
        }
        ConnectivitySource::OriginEdges { rcm, origin } => batched(replicates, stream, |_, rng| {
            Ok(if rcm.sample_origin_degree(n, origin, rng)? > 0 { 1.0 } else { 0.0 })
        })?,
        ConnectivitySource::FullGraph { rcm, origin } => (0..replicates)
            .into_par_iter()
            .map(|r| {
                let g = rcm.sample_graph(n, origin, Default::default(), &mut stream.child(r as u64).rng())?;
                Ok(if g.out_degree(0)? > 0 { 1.0 } else { 0.0 })
            })
            .collect::<Result<Vec<_>>>()?,
    };
    let frac = hits.iter().sum::<f64>() / replicates as f64;
    Ok(Estimate { value: frac, std_error: (frac * (1.0 - frac) / replicates as f64).sqrt() })
}

/// Truth method used by the connectivity and CLT helpers for RCM models.
pub fn rcm_truth(rcm: &Rcm, origin: &[f64], mc_samples: usize, stream: SeedStream) -> Result<f64> {
    let method = match rcm.best_truth_method(mc_samples) {
        TruthRequest::MonteCarlo { .. } => TruthRequest::MonteCarlo { samples: mc_samples },
        m => m,
    };
    Ok(rcm.truth(origin, method, stream)?.value)
}

/// `Var P_ij` for a uniformly chosen ordered pair of distinct vertices.
pub fn sbm_sigma2(spec: &SbmSpec) -> Result<f64> {
    spec.validate()?;
    let n = spec.n() as f64;
    let pairs = n * (n - 1.0);
    if pairs <= 0.0 {
        return Ok(0.0);
    }
    let (mut m1, mut m2) = (0.0, 0.0);
    for (c, p) in spec.sizes.iter().zip(&spec.intra) {
        let c = *c as f64;
        let within = c * (c - 1.0) / pairs;
        let across = c * (n - c) / pairs;
        m1 += within * p + across * spec.inter;
        m2 += within * p * p + across * spec.inter * spec.inter;
    }
    Ok((m2 - m1 * m1).clamp(0.0, 0.25))
}

/// One row of [`bound_report`].
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BoundRow {
    pub k: usize,
    /// Bound with the universal constant set to 1.
    pub rhs: f64,
    /// Simulated `E|p_{k+1} - p(x)|^2`.
    pub mse: f64,
    pub mse_se: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct BoundSettings {
    pub k0: usize,
    pub k_max: usize,
    pub replicates: usize,
    /// Pairs for `sigma^2` (RCM only).
    pub sigma_samples: usize,
    /// Monte Carlo draws for truths without an exact method.
    pub truth_samples: usize,
}

/// Evaluates the oracle bound for `k = k0..=k_max` next to the simulated
/// MSE of `p_{k+1}`. Step sizes are averaged over the simulated graphs
/// (missing annuli count as 0); `sigma^2` is exact for SBMs and simulated
/// otherwise.
pub fn bound_report(
    model: &GraphModel,
    scheme: &WeightScheme,
    settings: BoundSettings,
    stream: SeedStream,
) -> Result<Vec<BoundRow>> {
    let BoundSettings { k0, k_max, replicates, sigma_samples, truth_samples } = settings;
    if k0 > k_max {
        return Err(Error::invalid(format!("need k0 <= k_max, got {k0} > {k_max}")));
    }
    if replicates < 2 {
        return Err(Error::invalid("bound report needs at least 2 replicates"));
    }
    let truth = model.origin_truth(truth_samples, stream.fork("truth"))?.value;
    let sigma2 = match model {
        GraphModel::Sbm(spec) => sbm_sigma2(spec)?,
        GraphModel::Rcm { rcm, .. } => estimate_sigma2(rcm, sigma_samples, stream.fork("sigma2"))?.value,
    };
    let graphs = stream.fork("graphs");
    let rows: Vec<Result<(Vec<f64>, Vec<f64>)>> = (0..replicates)
        .into_par_iter()
        .map(|r| {
            let g = model.sample(&mut graphs.child(r as u64).rng())?.graph;
            let annuli = bfs_annuli(&g);
            let gammas = gamma_sequence(scheme, &annuli)?;
            let mut gam = vec![0.0; k_max + 1];
            for (slot, v) in gam.iter_mut().zip(&gammas) {
                *slot = *v;
            }
            let sq = (k0..=k_max + 1)
                .map(|k| estimate_pk(&g, scheme, k).map(|v| (v - truth).powi(2)))
                .collect::<Result<Vec<_>>>()?;
            Ok((gam, sq))
        })
        .collect();
    let rows = rows.into_iter().collect::<Result<Vec<_>>>()?;
    let reps = replicates as f64;
    let mut gammas = vec![0.0; k_max + 1];
    for (g, _) in &rows {
        for (acc, v) in gammas.iter_mut().zip(g) {
            *acc += v / reps;
        }
    }
    let col = |j: usize| -> Estimate {
        let v: Vec<f64> = rows.iter().map(|(_, sq)| sq[j]).collect();
        mean_and_se(&v)
    };
    let initial_error = col(0).value;
    let approx_stream = stream.fork("approx");
    (k0..=k_max)
        .map(|k| {
            let approx =
                estimate_approx_term(model, k, replicates, truth_samples, approx_stream.child(k as u64))?.value;
            let inp = OracleBoundInputs {
                k0,
                k,
                gammas: gammas.clone(),
                n: model.n_other().max(k),
                sigma2,
                initial_error,
                approx,
            };
            let mse = col(k + 1 - k0);
            Ok(BoundRow { k, rhs: oracle_bound_rhs(&inp)?, mse: mse.value, mse_se: mse.std_error })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{ConnectionFunction, EmpiricalPoints, FeatureDistribution, Features, SbmSpec};
    use proptest::prelude::*;

    fn inputs() -> OracleBoundInputs {
        OracleBoundInputs { k0: 0, k: 3, gammas: vec![0.1; 5], n: 50, sigma2: 0.05, initial_error: 0.002, approx: 0.0 }
    }

    #[test]
    fn bound_without_averaging_is_initial_error() {
        let inp = OracleBoundInputs { gammas: vec![0.0; 5], ..inputs() };
        assert_eq!(oracle_bound_rhs(&inp).unwrap(), 0.002);
    }

    #[test]
    fn bound_single_step() {
        let g = 0.3;
        let inp = OracleBoundInputs { k0: 2, k: 2, gammas: vec![0.9, 0.9, g], approx: 0.01, ..inputs() };
        let n = 50.0f64;
        let expect = 0.002 * (-2.0 * g).exp() + g * g + g * g * ((3.0 + 4.0 * 0.05 * n.ln()) / n + 0.01);
        assert!((oracle_bound_rhs(&inp).unwrap() - expect).abs() < 1e-15);
    }

    #[test]
    fn bound_rejects_bad_inputs() {
        assert!(oracle_bound_rhs(&OracleBoundInputs { k0: 4, ..inputs() }).is_err());
        assert!(oracle_bound_rhs(&OracleBoundInputs { sigma2: 0.3, ..inputs() }).is_err());
        assert!(oracle_bound_rhs(&OracleBoundInputs { approx: -1.0, ..inputs() }).is_err());
    }

    #[test]
    fn sigma2_examples() {
        let cube = FeatureDistribution::uniform_cube(2).unwrap();
        let one = Rcm::new(cube, ConnectionFunction::hard_threshold(10.0).unwrap());
        assert_eq!(estimate_sigma2(&one, 1000, SeedStream::new(1)).unwrap().value, 0.0);

        let pts = Features::from_rows(1, &[vec![0.0], vec![1.0]]).unwrap();
        let two = Rcm::new(
            FeatureDistribution::Empirical(EmpiricalPoints::uniform(pts).unwrap()),
            ConnectionFunction::hard_threshold(0.5).unwrap(),
        );
        let s = estimate_sigma2(&two, 200_000, SeedStream::new(2)).unwrap();
        assert!((s.value - 0.25).abs() < 1e-4, "{s:?}");

        let single = Features::from_rows(2, &[vec![3.0, 4.0]]).unwrap();
        let degenerate = Rcm::new(
            FeatureDistribution::Empirical(EmpiricalPoints::uniform(single).unwrap()),
            ConnectionFunction::exponential_decay(2.0).unwrap(),
        );
        assert_eq!(estimate_sigma2(&degenerate, 100, SeedStream::new(3)).unwrap().value, 0.0);
    }

    #[test]
    fn approx_term_sbm() {
        let spec = SbmSpec::new(vec![20, 20], vec![0.9, 0.1], 0.0, 1).unwrap();
        // no inter edges: the ball never leaves the origin's community
        let a = estimate_approx_term(&GraphModel::Sbm(spec), 3, 50, 0, SeedStream::new(1)).unwrap();
        assert_eq!(a.value, 0.0);

        // complete graph: every community is in V_1
        let spec = SbmSpec::new(vec![10, 25, 15], vec![1.0, 1.0, 1.0], 1.0, 1).unwrap();
        let a = estimate_approx_term(&GraphModel::Sbm(spec.clone()), 0, 5, 0, SeedStream::new(1)).unwrap();
        assert_eq!(a.value, 0.0);

        // q = 1 puts every community in V_1; n p_j = 42.7, 37, 39.2
        let dense = SbmSpec { inter: 1.0, ..SbmSpec::running_example() };
        let a = estimate_approx_term(&GraphModel::Sbm(dense), 1, 3, 0, SeedStream::new(4)).unwrap();
        assert!((a.value - (5.7f64 / 50.0).powi(2)).abs() < 1e-12, "{a:?}");

        // n p_j = 3.1, 12.25, 4.55: the worst community is the second
        let a =
            estimate_approx_term(&GraphModel::Sbm(SbmSpec::running_example()), 10, 200, 0, SeedStream::new(5)).unwrap();
        assert!(a.value > 0.0 && a.value <= (9.15f64 / 50.0).powi(2) + 1e-12, "{a:?}");
    }

    #[test]
    fn approx_term_constant_truth() {
        let pts = Features::from_rows(1, &[vec![0.0]]).unwrap();
        let rcm = Rcm::new(
            FeatureDistribution::Empirical(EmpiricalPoints::uniform(pts).unwrap()),
            ConnectionFunction::exponential_decay(1.0).unwrap(),
        );
        let m = GraphModel::Rcm { rcm, origin: vec![0.0], n: 20, edge_mode: Default::default() };
        assert_eq!(estimate_approx_term(&m, 2, 10, 0, SeedStream::new(1)).unwrap().value, 0.0);
    }

    #[test]
    fn moment_condition() {
        let cube = FeatureDistribution::uniform_cube(2).unwrap();
        let flat = Rcm::new(cube.clone(), ConnectionFunction::hard_threshold(10.0).unwrap());
        let c = check_moment_condition(&flat, 100, 200, SeedStream::new(1)).unwrap();
        assert_eq!((c.lhs, c.rhs, c.ratio), (0.0, 0.0, 0.0));

        let rcm = Rcm::new(cube, ConnectionFunction::hard_threshold(0.3).unwrap());
        let a = check_moment_condition(&rcm, 100, 500, SeedStream::new(2)).unwrap();
        let b = check_moment_condition(&rcm, 1000, 500, SeedStream::new(2)).unwrap();
        assert!(a.ratio > 0.0);
        assert!((b.ratio * 10.0 - a.ratio).abs() < 1e-12 * a.ratio.max(1.0));
    }

    #[test]
    fn clt_examples() {
        let r = clt_check(&CltSource::Binomial { p: 0.01 }, 10_000, 10_000, SeedStream::new(1)).unwrap();
        assert!(r.ks_distance <= 0.05, "{}", r.ks_distance);
        let r = clt_check(&CltSource::Binomial { p: 0.5 }, 1_000_000, 100_000, SeedStream::new(2)).unwrap();
        assert!(r.ks_distance <= 0.01, "{}", r.ks_distance);
        let r = clt_check(&CltSource::Binomial { p: 0.3 }, 100, 1, SeedStream::new(3)).unwrap();
        assert!(r.ks_distance.is_finite() && r.ks_distance >= 0.5);
        assert!(clt_check(&CltSource::Binomial { p: 0.0 }, 100, 10, SeedStream::new(3)).is_err());
    }

    #[test]
    fn clt_improves_with_np() {
        let small = clt_check(&CltSource::Binomial { p: 0.01 }, 500, 20_000, SeedStream::new(4)).unwrap();
        let large = clt_check(&CltSource::Binomial { p: 0.01 }, 50_000, 20_000, SeedStream::new(5)).unwrap();
        assert!(large.ks_distance + 0.01 < small.ks_distance, "{} vs {}", large.ks_distance, small.ks_distance);
    }

    #[test]
    fn wireless_examples() {
        assert_eq!(wireless_min_n(0.021745, 0.9).unwrap(), 105);
        assert_eq!(wireless_min_n(0.9, 0.9).unwrap(), 1);
        assert_eq!(wireless_min_n(0.5, 0.9).unwrap(), 4);
        assert!(wireless_min_n(0.0, 0.9).is_err());
        assert!(wireless_min_n(1.0, 0.9).is_err());
    }

    #[test]
    fn connectivity_examples() {
        let cube = FeatureDistribution::uniform_cube(2).unwrap();
        let none = Rcm::new(cube.clone(), ConnectionFunction::hard_threshold(0.0).unwrap());
        let src = ConnectivitySource::OriginEdges { rcm: &none, origin: &[0.5, 0.5] };
        assert_eq!(verify_connectivity(&src, 50, 100, SeedStream::new(1)).unwrap().value, 0.0);

        let rcm = Rcm::new(cube, ConnectionFunction::hard_threshold(0.1).unwrap());
        let p = std::f64::consts::PI * 0.01;
        let n = 30;
        let exact = 1.0 - (1.0 - p).powi(n as i32);
        for src in [
            ConnectivitySource::OriginEdges { rcm: &rcm, origin: &[0.5, 0.5] },
            ConnectivitySource::FullGraph { rcm: &rcm, origin: &[0.5, 0.5] },
            ConnectivitySource::Binomial { p },
        ] {
            let reps = if matches!(src, ConnectivitySource::FullGraph { .. }) { 4000 } else { 40_000 };
            let e = verify_connectivity(&src, n, reps, SeedStream::new(2)).unwrap();
            assert!((e.value - exact).abs() < 3.0 * e.std_error.max(1e-3), "{src:?}: {e:?} vs {exact}");
        }
    }

    #[test]
    fn sbm_sigma2_two_point() {
        // one community: P is constant
        let spec = SbmSpec::new(vec![6], vec![0.4], 0.0, 1).unwrap();
        assert_eq!(sbm_sigma2(&spec).unwrap(), 0.0);
        // two blocks of 2 with p = 1, q = 0: P = 1 on a third of the pairs
        let spec = SbmSpec::new(vec![2, 2], vec![1.0, 1.0], 0.0, 1).unwrap();
        assert!((sbm_sigma2(&spec).unwrap() - 2.0 / 9.0).abs() < 1e-15);
    }

    #[test]
    fn bound_report_shape() {
        let model = GraphModel::Sbm(SbmSpec::running_example());
        let settings = BoundSettings { k0: 0, k_max: 3, replicates: 200, sigma_samples: 0, truth_samples: 0 };
        let rows = bound_report(&model, &WeightScheme::Geometric { gamma: 0.1 }, settings, SeedStream::new(1)).unwrap();
        assert_eq!(rows.len(), 4);
        assert!(rows.iter().all(|r| r.rhs.is_finite() && r.mse >= 0.0));
        let bad = BoundSettings { k0: 3, k_max: 1, ..settings };
        assert!(bound_report(&model, &WeightScheme::ConstantOne, bad, SeedStream::new(1)).is_err());
    }

    proptest! {
        #[test]
        fn wireless_bracket(p in 0.0005f64..0.9995, q in 0.0005f64..0.9995) {
            let n = wireless_min_n(p, q).unwrap();
            prop_assert!(n >= 1);
            prop_assert!((1.0 - p).powf(n as f64) <= 1.0 - q);
            if n > 1 {
                prop_assert!(1.0 - q < (1.0 - p).powf((n - 1) as f64));
            }
        }

        #[test]
        fn bound_monotone(extra in 0.0f64..1.0, e0 in 0.0f64..1.0, approx in 0.0f64..1.0) {
            let base = OracleBoundInputs { initial_error: e0, approx, ..inputs() };
            let b = oracle_bound_rhs(&base).unwrap();
            let more_approx = oracle_bound_rhs(&OracleBoundInputs { approx: approx + extra, ..base.clone() }).unwrap();
            let more_init = oracle_bound_rhs(&OracleBoundInputs { initial_error: e0 + extra, ..base.clone() }).unwrap();
            prop_assert!(more_approx >= b && more_init >= b);
        }
    }
}
