//! Seeded, parallel replication studies.
//!
//! Every `(n, replicate)` cell draws from its own [`SeedStream`] child and
//! results are collected in cell order, so output is byte-identical for any
//! worker count.

use std::collections::BTreeMap;
use std::fmt;
use std::fs;
use std::io::Write;
use std::path::Path;

use rayon::prelude::*;
use serde::Serialize;

use crate::analysis::{verify_connectivity, wireless_min_n, ConnectivitySource};
use crate::error::{Error, Result};
use crate::estimator::{estimate_trace, WeightScheme};
use crate::graph::Graph;
use crate::mccv::{estimate_with_mccv, split_replicates, RiskCurve, SplitPlan};
use crate::model::{ConnectionFunction, EdgeMode, FeatureDistribution, GaussianMixture, GraphModel, Rcm, SbmSpec};
use crate::rng::{with_thread_pool, SeedStream};

/// A graph law indexed by `n`.
#[derive(Clone, Debug, PartialEq)]
pub enum ModelFamily {
    /// One fixed law; its only admissible `n` is its own (total vertices
    /// for an SBM, non-origin vertices for an RCM).
    Fixed(GraphModel),
    /// [`SbmSpec::growing`] with `n` total vertices.
    GrowingSbm,
    /// RCM with `n` non-origin vertices.
    Rcm { rcm: Rcm, origin: Vec<f64>, edge_mode: EdgeMode },
}

impl ModelFamily {
    pub fn natural_n(&self) -> Option<usize> {
        match self {
            ModelFamily::Fixed(GraphModel::Sbm(spec)) => Some(spec.n()),
            ModelFamily::Fixed(GraphModel::Rcm { n, .. }) => Some(*n),
            _ => None,
        }
    }

    pub fn at(&self, n: usize) -> Result<GraphModel> {
        match self {
            ModelFamily::Fixed(m) if self.natural_n() == Some(n) => Ok(m.clone()),
            ModelFamily::Fixed(_) => {
                Err(Error::invalid(format!("fixed model has n = {}, grid asks for {n}", self.natural_n().unwrap_or(0))))
            }
            ModelFamily::GrowingSbm => Ok(GraphModel::Sbm(SbmSpec::growing(n)?)),
            ModelFamily::Rcm { rcm, origin, edge_mode } => {
                Ok(GraphModel::Rcm { rcm: rcm.clone(), origin: origin.clone(), n, edge_mode: *edge_mode })
            }
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ExperimentConfig {
    pub family: ModelFamily,
    pub schemes: Vec<WeightScheme>,
    pub n_grid: Vec<usize>,
    pub replicates: usize,
    /// Split count and fraction; the seed is replaced per cell.
    pub mccv: SplitPlan,
    pub seed: u64,
    /// Monte Carlo draws for truths without an exact method.
    pub truth_samples: usize,
    /// Wireless study target connectivity.
    pub target_q: f64,
    /// Wireless study verification replicates per `(n, scheme)`.
    pub verify_replicates: usize,
}

impl ExperimentConfig {
    pub fn new(
        family: ModelFamily,
        schemes: Vec<WeightScheme>,
        n_grid: Vec<usize>,
        replicates: usize,
        seed: u64,
    ) -> Self {
        ExperimentConfig {
            family,
            schemes,
            n_grid,
            replicates,
            mccv: SplitPlan::new(100, 0),
            seed,
            truth_samples: 1_000_000,
            target_q: 0.9,
            verify_replicates: 10_000,
        }
    }

    /// `n_grid` defaults to the family's own size when empty.
    fn grid(&self) -> Result<Vec<usize>> {
        if !self.n_grid.is_empty() {
            return Ok(self.n_grid.clone());
        }
        self.family.natural_n().map(|n| vec![n]).ok_or_else(|| Error::invalid("n grid is empty"))
    }

    fn validate(&self) -> Result<Vec<usize>> {
        if self.schemes.is_empty() {
            return Err(Error::invalid("no weight schemes given"));
        }
        for s in &self.schemes {
            s.validate()?;
        }
        self.grid()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Statistic {
    Truth,
    SqError,
    OracleM,
    OracleError,
    SelectedM,
    Estimate,
    Error,
    LogRatio,
    N0,
    NBar,
    ConnectFraction,
}

impl Statistic {
    pub fn as_str(self) -> &'static str {
        match self {
            Statistic::Truth => "truth",
            Statistic::SqError => "sq_error",
            Statistic::OracleM => "oracle_m",
            Statistic::OracleError => "oracle_error",
            Statistic::SelectedM => "selected_m",
            Statistic::Estimate => "estimate",
            Statistic::Error => "error",
            Statistic::LogRatio => "log_ratio",
            Statistic::N0 => "n0",
            Statistic::NBar => "n_bar",
            Statistic::ConnectFraction => "connect_fraction",
        }
    }
}

impl fmt::Display for Statistic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum Flag {
    #[default]
    None,
    /// Trace shorter than `m`; value held at its last entry.
    Clamped,
    /// Empirical error is 0, so the log-ratio is undefined; value 0.
    Censored,
    /// Weighted error is 0 while the empirical one is not; value is
    /// `ln(f64::EPSILON)`.
    LeftCensored,
    /// Estimate of 0 or 1 where a probability in (0, 1) was required.
    Undefined,
}

impl Flag {
    pub fn as_str(self) -> &'static str {
        match self {
            Flag::None => "",
            Flag::Clamped => "clamped",
            Flag::Censored => "censored",
            Flag::LeftCensored => "left-censored",
            Flag::Undefined => "undefined",
        }
    }

    /// Records with these flags carry placeholder values and are left out
    /// of aggregates.
    pub fn excluded(self) -> bool {
        matches!(self, Flag::Censored | Flag::Undefined)
    }
}

/// One long-form result row. `scheme` indexes [`ExperimentResult::labels`].
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Record {
    pub n: usize,
    pub replicate: Option<usize>,
    pub scheme: Option<usize>,
    pub m: Option<usize>,
    pub statistic: Statistic,
    pub value: f64,
    pub flags: Flag,
}

impl Record {
    fn new(
        n: usize,
        replicate: Option<usize>,
        scheme: Option<usize>,
        m: Option<usize>,
        statistic: Statistic,
        value: f64,
    ) -> Self {
        Record { n, replicate, scheme, m, statistic, value, flags: Flag::None }
    }

    fn flagged(mut self, flags: Flag) -> Self {
        self.flags = flags;
        self
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Aggregate {
    pub n: usize,
    pub scheme: Option<usize>,
    pub m: Option<usize>,
    pub statistic: Statistic,
    pub count: usize,
    pub mean: f64,
    pub sd: f64,
    pub q25: f64,
    pub median: f64,
    pub q75: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ExperimentResult {
    pub study: String,
    pub seed: u64,
    pub labels: Vec<String>,
    pub records: Vec<Record>,
    manifest: Manifest,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
struct Manifest {
    study: String,
    seed: u64,
    version: String,
    model: String,
    schemes: Vec<String>,
    n_grid: Vec<usize>,
    replicates: usize,
    mccv_replications: usize,
    mccv_fraction: f64,
    truth_samples: usize,
}

/// `(n, scheme, statistic, m)`
type GroupKey = (usize, Option<usize>, Statistic, Option<usize>);

/// Linear-interpolation quantile of sorted data.
fn quantile(sorted: &[f64], q: f64) -> f64 {
    let h = (sorted.len() - 1) as f64 * q;
    let lo = h.floor() as usize;
    let hi = h.ceil() as usize;
    sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
}

fn opt(v: Option<usize>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

impl ExperimentResult {
    fn new(study: &str, cfg: &ExperimentConfig, labels: Vec<String>, n_grid: Vec<usize>) -> Self {
        ExperimentResult {
            study: study.into(),
            seed: cfg.seed,
            labels: labels.clone(),
            records: Vec::new(),
            manifest: Manifest {
                study: study.into(),
                seed: cfg.seed,
                version: env!("CARGO_PKG_VERSION").into(),
                model: format!("{:?}", cfg.family),
                schemes: labels,
                n_grid,
                replicates: cfg.replicates,
                mccv_replications: cfg.mccv.replications,
                mccv_fraction: cfg.mccv.fraction,
                truth_samples: cfg.truth_samples,
            },
        }
    }

    pub fn label(&self, scheme: Option<usize>) -> &str {
        scheme.map(|s| self.labels[s].as_str()).unwrap_or("")
    }

    /// Records matching `statistic`, `n` and `scheme`, in order.
    pub fn select(&self, statistic: Statistic, n: usize, scheme: Option<usize>) -> impl Iterator<Item = &Record> {
        self.records.iter().filter(move |r| r.statistic == statistic && r.n == n && r.scheme == scheme)
    }

    /// Summaries per `(n, scheme, m, statistic)`, skipping censored and
    /// undefined records. Sums run in record order.
    pub fn aggregates(&self) -> Vec<Aggregate> {
        let mut groups: BTreeMap<GroupKey, Vec<f64>> = BTreeMap::new();
        for r in self.records.iter().filter(|r| !r.flags.excluded()) {
            groups.entry((r.n, r.scheme, r.statistic, r.m)).or_default().push(r.value);
        }
        groups
            .into_iter()
            .map(|((n, scheme, statistic, m), vals)| {
                let count = vals.len();
                let mean = vals.iter().sum::<f64>() / count as f64;
                let sd = if count > 1 {
                    (vals.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (count - 1) as f64).sqrt()
                } else {
                    0.0
                };
                let mut sorted = vals;
                sorted.sort_by(f64::total_cmp);
                Aggregate {
                    n,
                    scheme,
                    m,
                    statistic,
                    count,
                    mean,
                    sd,
                    q25: quantile(&sorted, 0.25),
                    median: quantile(&sorted, 0.5),
                    q75: quantile(&sorted, 0.75),
                }
            })
            .collect()
    }

    /// Mean squared error per `m` for one scheme (MSE study).
    pub fn mse_curve(&self, n: usize, scheme: usize) -> Vec<f64> {
        self.aggregates()
            .into_iter()
            .filter(|a| a.statistic == Statistic::SqError && a.n == n && a.scheme == Some(scheme))
            .map(|a| a.mean)
            .collect()
    }

    /// CSV with columns `n,replicate,scheme,m,statistic,value,flags`.
    pub fn write_records_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut wtr = csv::Writer::from_writer(w);
        wtr.write_record(["n", "replicate", "scheme", "m", "statistic", "value", "flags"])?;
        for r in &self.records {
            wtr.write_record([
                r.n.to_string(),
                opt(r.replicate),
                self.label(r.scheme).to_string(),
                opt(r.m),
                r.statistic.to_string(),
                r.value.to_string(),
                r.flags.as_str().to_string(),
            ])?;
        }
        wtr.flush()?;
        Ok(())
    }

    /// CSV with columns `n,scheme,m,statistic,count,mean,sd,q25,median,q75`.
    pub fn write_aggregates_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut wtr = csv::Writer::from_writer(w);
        wtr.write_record(["n", "scheme", "m", "statistic", "count", "mean", "sd", "q25", "median", "q75"])?;
        for a in self.aggregates() {
            wtr.write_record([
                a.n.to_string(),
                self.label(a.scheme).to_string(),
                opt(a.m),
                a.statistic.to_string(),
                a.count.to_string(),
                a.mean.to_string(),
                a.sd.to_string(),
                a.q25.to_string(),
                a.median.to_string(),
                a.q75.to_string(),
            ])?;
        }
        wtr.flush()?;
        Ok(())
    }

    pub fn manifest_toml(&self) -> Result<String> {
        toml::to_string(&self.manifest).map_err(|e| Error::Config(e.to_string()))
    }

    /// Writes `<study>_records.csv`, `<study>_aggregates.csv` and
    /// `<study>_manifest.toml` into `dir`.
    pub fn write_all(&self, dir: &Path) -> Result<()> {
        fs::create_dir_all(dir)?;
        self.write_records_csv(fs::File::create(dir.join(format!("{}_records.csv", self.study)))?)?;
        self.write_aggregates_csv(fs::File::create(dir.join(format!("{}_aggregates.csv", self.study)))?)?;
        fs::write(dir.join(format!("{}_manifest.toml", self.study)), self.manifest_toml()?)?;
        Ok(())
    }
}

/// `argmin_m |trace_m - truth|` over the native trace, smallest on ties.
fn oracle_m(values: &[f64], truth: f64) -> usize {
    let mut best = 0;
    for (m, v) in values.iter().enumerate() {
        if (v - truth).abs() < (values[best] - truth).abs() {
            best = m;
        }
    }
    best
}

/// `ln(|weighted| / |empirical|)` with censoring flags.
pub fn log_error_ratio(weighted_err: f64, empirical_err: f64) -> (f64, Flag) {
    let (a, b) = (weighted_err.abs(), empirical_err.abs());
    if b == 0.0 {
        (0.0, Flag::Censored)
    } else if a == 0.0 {
        (f64::EPSILON.ln(), Flag::LeftCensored)
    } else {
        ((a / b).ln(), Flag::None)
    }
}

/// Runs `cell(n_index, n, replicate, stream)` over the grid in parallel and
/// concatenates the records in cell order.
fn run_cells<F>(grid: &[usize], replicates: usize, root: SeedStream, cell: F) -> Result<Vec<Record>>
where
    F: Fn(usize, usize, usize, SeedStream) -> Result<Vec<Record>> + Sync,
{
    let total = grid.len() * replicates;
    let out: Vec<Result<Vec<Record>>> = with_thread_pool(|| {
        (0..total)
            .into_par_iter()
            .map(|c| {
                let (ni, rep) = (c / replicates, c % replicates);
                cell(ni, grid[ni], rep, root.child(ni as u64).child(rep as u64))
            })
            .collect()
    });
    let mut records = Vec::new();
    for r in out {
        records.extend(r?);
    }
    Ok(records)
}

fn truths(cfg: &ExperimentConfig, grid: &[usize], root: SeedStream) -> Result<Vec<(GraphModel, f64)>> {
    grid.iter()
        .enumerate()
        .map(|(i, &n)| {
            let model = cfg.family.at(n)?;
            let truth = with_thread_pool(|| model.origin_truth(cfg.truth_samples, root.fork("truth").child(i as u64)))?;
            Ok((model, truth.value))
        })
        .collect()
}

fn labels(schemes: &[WeightScheme]) -> Vec<String> {
    schemes.iter().map(WeightScheme::label).collect()
}

/// Squared residuals of the trace against the truth for every `m` up to
/// `n_other` (clamped past the trace), plus per replicate the oracle `m*`
/// and its signed error.
pub fn run_mse_study(cfg: &ExperimentConfig) -> Result<ExperimentResult> {
    let grid = cfg.validate()?;
    let mut result = ExperimentResult::new("mse", cfg, labels(&cfg.schemes), grid.clone());
    if cfg.replicates == 0 {
        return Ok(result);
    }
    let root = SeedStream::new(cfg.seed).fork("mse");
    let models = truths(cfg, &grid, root)?;
    for (n, (_, truth)) in grid.iter().zip(&models) {
        result.records.push(Record::new(*n, None, None, None, Statistic::Truth, *truth));
    }
    let cells = run_cells(&grid, cfg.replicates, root, |ni, n, rep, stream| {
        let (model, truth) = &models[ni];
        let g = model.sample(&mut stream.fork("graph").rng())?.graph;
        let mut out = Vec::new();
        for (si, scheme) in cfg.schemes.iter().enumerate() {
            let trace = estimate_trace(&g, scheme)?;
            for m in 0..=g.n_other() {
                let d = trace.value_at(m) - truth;
                let rec = Record::new(n, Some(rep), Some(si), Some(m), Statistic::SqError, d * d);
                out.push(if m > trace.m_max() { rec.flagged(Flag::Clamped) } else { rec });
            }
            let star = oracle_m(trace.values(), *truth);
            out.push(Record::new(n, Some(rep), Some(si), None, Statistic::OracleM, star as f64));
            out.push(Record::new(n, Some(rep), Some(si), None, Statistic::OracleError, trace.value_at(star) - truth));
        }
        Ok(out)
    })?;
    result.records.extend(cells);
    Ok(result)
}

/// Per replicate and scheme: MCCV-selected `m`, the estimate there, its
/// error, the oracle `m*` and its error, and the log error ratio against
/// the empirical estimator.
pub fn run_mccv_study(cfg: &ExperimentConfig) -> Result<ExperimentResult> {
    let grid = cfg.validate()?;
    let mut result = ExperimentResult::new("mccv", cfg, labels(&cfg.schemes), grid.clone());
    if cfg.replicates == 0 {
        return Ok(result);
    }
    let root = SeedStream::new(cfg.seed).fork("mccv");
    let models = truths(cfg, &grid, root)?;
    for (n, (_, truth)) in grid.iter().zip(&models) {
        result.records.push(Record::new(*n, None, None, None, Statistic::Truth, *truth));
    }
    let cells = run_cells(&grid, cfg.replicates, root, |ni, n, rep, stream| {
        let (model, truth) = &models[ni];
        let g = model.sample(&mut stream.fork("graph").rng())?.graph;
        let plan = SplitPlan { seed: stream.fork("splits").seed(), ..cfg.mccv };
        mccv_records(&g, &cfg.schemes, &plan, *truth, n, rep)
    })?;
    result.records.extend(cells);
    Ok(result)
}

fn mccv_records(
    g: &Graph,
    schemes: &[WeightScheme],
    plan: &SplitPlan,
    truth: f64,
    n: usize,
    rep: usize,
) -> Result<Vec<Record>> {
    let mut out = Vec::new();
    for (si, scheme) in schemes.iter().enumerate() {
        let est = estimate_with_mccv(g, scheme, plan)?;
        let trace = estimate_trace(g, scheme)?;
        let err = est.estimate - truth;
        let (ratio, flag) = log_error_ratio(err, trace.value_at(0) - truth);
        let star = oracle_m(trace.values(), truth);
        let rec = |stat, v| Record::new(n, Some(rep), Some(si), None, stat, v);
        out.push(rec(Statistic::SelectedM, est.selected_m as f64));
        out.push(rec(Statistic::Estimate, est.estimate));
        out.push(rec(Statistic::Error, err));
        out.push(rec(Statistic::OracleM, star as f64));
        out.push(rec(Statistic::OracleError, trace.value_at(star) - truth));
        out.push(rec(Statistic::LogRatio, ratio).flagged(flag));
    }
    Ok(out)
}

/// Risk curves for a grid of split counts on one graph.
#[derive(Clone, Debug, PartialEq)]
pub struct StabilityResult {
    pub curves: Vec<RiskCurve>,
    /// Standard error of each `R(m)` across splits.
    pub std_errors: Vec<Vec<f64>>,
    pub minimizers: Vec<usize>,
    /// Index into the grid of the last change of minimizer (0 if none).
    pub last_change: usize,
}

impl StabilityResult {
    /// CSV with columns `M,m,risk,std_error,selected`.
    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut wtr = csv::Writer::from_writer(w);
        wtr.write_record(["M", "m", "risk", "std_error", "selected"])?;
        for (c, se) in self.curves.iter().zip(&self.std_errors) {
            for (m, (r, s)) in c.risk.iter().zip(se).enumerate() {
                wtr.write_record([
                    c.replications.to_string(),
                    m.to_string(),
                    r.to_string(),
                    s.to_string(),
                    u8::from(m == c.selected).to_string(),
                ])?;
            }
        }
        wtr.flush()?;
        Ok(())
    }
}

/// `R(m)` for each `M` in `m_grid`. Split `i` is the same for every `M`,
/// so each curve extends the splits of the smaller ones.
pub fn run_mccv_stability(
    g: &Graph,
    scheme: &WeightScheme,
    m_grid: &[usize],
    fraction: f64,
    seed: u64,
) -> Result<StabilityResult> {
    let max_m = m_grid.iter().copied().max().ok_or_else(|| Error::invalid("split-count grid is empty"))?;
    if m_grid.contains(&0) {
        return Err(Error::invalid("split counts must be at least 1"));
    }
    let plan = SplitPlan::new(max_m, seed).with_fraction(fraction);
    let reps = with_thread_pool(|| split_replicates(g, scheme, &plan))?;
    let mut curves = Vec::with_capacity(m_grid.len());
    let mut std_errors = Vec::with_capacity(m_grid.len());
    for &mm in m_grid {
        let prefix = &reps[..mm];
        let curve = RiskCurve::from_replicates(prefix, scheme, &SplitPlan { replications: mm, ..plan });
        let se = curve
            .risk
            .iter()
            .enumerate()
            .map(|(m, &mean)| {
                if mm < 2 {
                    return 0.0;
                }
                let ss: f64 = prefix.iter().map(|r| ((r.value_at(m) - r.holdout).powi(2) - mean).powi(2)).sum();
                (ss / (mm - 1) as f64 / mm as f64).sqrt()
            })
            .collect();
        curves.push(curve);
        std_errors.push(se);
    }
    let minimizers: Vec<usize> = curves.iter().map(|c| c.selected).collect();
    let last_change = (1..minimizers.len()).rev().find(|&i| minimizers[i] != minimizers[i - 1]).unwrap_or(0);
    Ok(StabilityResult { curves, std_errors, minimizers, last_change })
}

/// `{10 * 2^i, i = 0..=7}`.
pub fn default_stability_grid() -> Vec<usize> {
    (0..8).map(|i| 10usize << i).collect()
}

/// Per-`m` mean MCCV risk against the mean squared error of the fitting-half
/// estimator, both by simulation, with standard errors.
#[derive(Clone, Debug, PartialEq)]
pub struct BiasProfile {
    pub risk_mean: Vec<f64>,
    pub risk_se: Vec<f64>,
    pub mse_half: Vec<f64>,
    pub mse_half_se: Vec<f64>,
}

impl BiasProfile {
    pub fn difference(&self) -> Vec<(f64, f64)> {
        (0..self.risk_mean.len())
            .map(|m| (self.risk_mean[m] - self.mse_half[m], self.risk_se[m].hypot(self.mse_half_se[m])))
            .collect()
    }

    /// Largest `|d(m) - c| / se(m)`, with `c` the inverse-variance weighted
    /// mean of the differences.
    pub fn max_deviation(&self) -> f64 {
        let d = self.difference();
        let (num, den) =
            d.iter().filter(|(_, s)| *s > 0.0).fold((0.0, 0.0), |(a, b), (v, s)| (a + v / (s * s), b + 1.0 / (s * s)));
        let c = if den > 0.0 { num / den } else { 0.0 };
        d.iter()
            .map(|(v, s)| {
                if *s > 0.0 {
                    (v - c).abs() / s
                } else if *v == c {
                    0.0
                } else {
                    f64::INFINITY
                }
            })
            .fold(0.0, f64::max)
    }
}

/// Profile of `E[R(m)] - MSE_half(m)` on one fixed model. `MSE_half` uses
/// independent graphs restricted to a random fitting half, which has the
/// law of the graphs MCCV fits on.
pub fn run_mccv_bias_profile(
    model: &GraphModel,
    scheme: &WeightScheme,
    replicates: usize,
    plan: &SplitPlan,
    seed: u64,
) -> Result<BiasProfile> {
    if replicates < 2 {
        return Err(Error::invalid("bias profile needs at least 2 replicates"));
    }
    let truth = model.origin_truth(0, SeedStream::new(seed).fork("truth"))?.value;
    let n_other = model.n_other();
    plan.validate(n_other)?;
    let m_len = plan.fit_size(n_other) + 1;
    let root = SeedStream::new(seed).fork("bias");
    let rows: Vec<Result<(Vec<f64>, Vec<f64>)>> = with_thread_pool(|| {
        (0..replicates)
            .into_par_iter()
            .map(|r| {
                let cell = root.child(r as u64);
                let g = model.sample(&mut cell.fork("risk-graph").rng())?.graph;
                let p = SplitPlan { seed: cell.fork("splits").seed(), ..*plan };
                let reps = split_replicates(&g, scheme, &p)?;
                let curve = RiskCurve::from_replicates(&reps, scheme, &p);
                let risk: Vec<f64> = (0..m_len).map(|m| curve.risk[m.min(curve.risk.len() - 1)]).collect();

                let h = model.sample(&mut cell.fork("half-graph").rng())?.graph;
                let half = SplitPlan::new(1, cell.fork("half").seed()).with_fraction(plan.fraction);
                let (fit, _) = crate::mccv::split_for(&half, n_other, 0);
                let mut keep = vec![0];
                keep.extend(fit);
                let (sub, _) = h.induced_subgraph(&keep)?;
                let trace = estimate_trace(&sub, scheme)?;
                let sq: Vec<f64> = (0..m_len).map(|m| (trace.value_at(m) - truth).powi(2)).collect();
                Ok((risk, sq))
            })
            .collect()
    });
    let rows = rows.into_iter().collect::<Result<Vec<_>>>()?;
    let stats = |second: bool| -> (Vec<f64>, Vec<f64>) {
        (0..m_len)
            .map(|m| {
                let vals: Vec<f64> = rows.iter().map(|r| if second { r.1[m] } else { r.0[m] }).collect();
                let k = vals.len() as f64;
                let mean = vals.iter().sum::<f64>() / k;
                let var = vals.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (k - 1.0);
                (mean, (var / k).sqrt())
            })
            .unzip()
    };
    let (risk_mean, risk_se) = stats(false);
    let (mse_half, mse_half_se) = stats(true);
    Ok(BiasProfile { risk_mean, risk_se, mse_half, mse_half_se })
}

/// MCCV estimates of the origin probability mapped through
/// [`wireless_min_n`], then the connectivity achieved with the mean `n_bar`
/// per `(n, scheme)` checked by simulation (origin edges only). The `m`
/// column of `connect_fraction` rows holds the `n_bar` used.
pub fn run_wireless_study(cfg: &ExperimentConfig) -> Result<ExperimentResult> {
    let grid = cfg.validate()?;
    let mut result = ExperimentResult::new("wireless", cfg, labels(&cfg.schemes), grid.clone());
    if cfg.replicates == 0 {
        return Ok(result);
    }
    let root = SeedStream::new(cfg.seed).fork("wireless");
    let models = truths(cfg, &grid, root)?;
    for (n, (_, truth)) in grid.iter().zip(&models) {
        result.records.push(Record::new(*n, None, None, None, Statistic::Truth, *truth));
        let (n0, flag) = match wireless_min_n(*truth, cfg.target_q) {
            Ok(v) => (v as f64, Flag::None),
            Err(_) => (0.0, Flag::Undefined),
        };
        result.records.push(Record::new(*n, None, None, None, Statistic::N0, n0).flagged(flag));
    }
    let cells = run_cells(&grid, cfg.replicates, root, |ni, n, rep, stream| {
        let g = models[ni].0.sample(&mut stream.fork("graph").rng())?.graph;
        let plan = SplitPlan { seed: stream.fork("splits").seed(), ..cfg.mccv };
        let mut out = Vec::new();
        for (si, scheme) in cfg.schemes.iter().enumerate() {
            let est = estimate_with_mccv(&g, scheme, &plan)?;
            out.push(Record::new(n, Some(rep), Some(si), Some(est.selected_m), Statistic::Estimate, est.estimate));
            let rec = match wireless_min_n(est.estimate, cfg.target_q) {
                Ok(v) => Record::new(n, Some(rep), Some(si), None, Statistic::NBar, v as f64),
                Err(_) => Record::new(n, Some(rep), Some(si), None, Statistic::NBar, 0.0).flagged(Flag::Undefined),
            };
            out.push(rec);
        }
        Ok(out)
    })?;
    result.records.extend(cells);

    for (ni, &n) in grid.iter().enumerate() {
        let GraphModel::Rcm { rcm, origin, .. } = &models[ni].0 else {
            return Err(Error::Unsupported { method: "wireless study", what: "SBM models".into() });
        };
        for si in 0..cfg.schemes.len() {
            let vals: Vec<f64> =
                result.select(Statistic::NBar, n, Some(si)).filter(|r| !r.flags.excluded()).map(|r| r.value).collect();
            if vals.is_empty() || cfg.verify_replicates == 0 {
                continue;
            }
            let n_bar = (vals.iter().sum::<f64>() / vals.len() as f64).ceil() as usize;
            let src = ConnectivitySource::OriginEdges { rcm, origin };
            let stream = root.fork("verify").child(ni as u64).child(si as u64);
            let frac = with_thread_pool(|| verify_connectivity(&src, n_bar, cfg.verify_replicates, stream))?;
            result.records.push(Record::new(n, None, Some(si), Some(n_bar), Statistic::ConnectFraction, frac.value));
        }
    }
    Ok(result)
}

/// `{100 i, i = 1..=50}`.
pub fn default_wireless_grid() -> Vec<usize> {
    (1..=50).map(|i| 100 * i).collect()
}

/// The three-component mixture on `[0, 10]^2` with `HardThreshold(2)` and
/// the origin at `(3, 3)`.
pub fn wireless_model() -> Result<(Rcm, Vec<f64>)> {
    let mix = GaussianMixture::new(
        vec![
            (0.4, vec![9.0, 9.0], vec![vec![4.0, 1.2], vec![1.2, 4.0]]),
            (0.3, vec![8.0, 3.0], vec![vec![4.0, 0.0], vec![0.0, 4.0]]),
            (0.3, vec![3.0, 9.0], vec![vec![4.0, 2.0], vec![2.0, 4.0]]),
        ],
        Some(crate::model::BoxBounds { lower: vec![0.0, 0.0], upper: vec![10.0, 10.0] }),
    )?;
    let rcm = Rcm::new(FeatureDistribution::GaussianMixture(mix), ConnectionFunction::hard_threshold(2.0)?);
    Ok((rcm, vec![3.0, 3.0]))
}

/// One feature distribution of the design benchmark.
#[derive(Clone, Debug, PartialEq)]
pub struct DesignCase {
    pub label: String,
    pub features: FeatureDistribution,
    /// Threshold per `n`; sizes not listed use `default_alpha`.
    pub alphas: Vec<(usize, f64)>,
    pub default_alpha: f64,
    pub origins: Vec<Vec<f64>>,
}

impl DesignCase {
    pub fn alpha(&self, n: usize) -> f64 {
        self.alphas.iter().find(|(k, _)| *k == n).map(|(_, a)| *a).unwrap_or(self.default_alpha)
    }
}

/// Beta(2, 5), a two-component Gaussian mixture and the unit cube, with
/// three origins each.
pub fn design_cases() -> Result<Vec<DesignCase>> {
    let mix = GaussianMixture::new(
        vec![
            (0.5, vec![0.0, 0.0], vec![vec![1.0, 0.0], vec![0.0, 1.0]]),
            (0.5, vec![2.75, 2.75], vec![vec![1.0, 0.75], vec![0.75, 1.0]]),
        ],
        None,
    )?;
    Ok(vec![
        DesignCase {
            label: "beta".into(),
            features: FeatureDistribution::beta(2.0, 5.0)?,
            alphas: vec![],
            default_alpha: 0.01,
            origins: vec![vec![0.5], vec![0.1], vec![2.0 / 7.0]],
        },
        DesignCase {
            label: "mixture".into(),
            features: FeatureDistribution::GaussianMixture(mix),
            alphas: vec![(50, 0.6), (75, 0.5), (100, 0.4)],
            default_alpha: 0.4,
            origins: vec![vec![1.0, 1.0], vec![0.0, 0.0], vec![1.75, 1.75]],
        },
        DesignCase {
            label: "uniform".into(),
            features: FeatureDistribution::uniform_cube(3)?,
            alphas: vec![],
            default_alpha: 0.2,
            origins: vec![vec![0.5, 0.0, 0.0], vec![0.5, 0.5, 0.0], vec![0.5, 0.5, 0.5]],
        },
    ])
}

/// Published truths for the design cases, `(case, n, per-origin values)`,
/// kept only to log next to the computed ones.
pub const PUBLISHED_DESIGN_TRUTHS: &[(&str, usize, [f64; 3])] = &[
    ("beta", 50, [2.83e-7, 2.51e-2, 5.93e-2]),
    ("beta", 75, [2.06e-7, 2.35e-2, 5.56e-2]),
    ("beta", 100, [1.62e-7, 2.24e-2, 5.30e-2]),
    ("mixture", 50, [3.15e-2, 4.45e-2, 5.50e-2]),
    ("mixture", 75, [2.97e-2, 4.21e-2, 5.24e-2]),
    ("mixture", 100, [2.80e-2, 4.00e-2, 5.00e-2]),
    ("uniform", 50, [6.13e-3, 1.20e-2, 2.35e-2]),
    ("uniform", 75, [5.63e-3, 1.10e-2, 2.17e-2]),
    ("uniform", 100, [5.18e-3, 1.02e-2, 2.00e-2]),
];

/// Every case × `n` × origin × scheme: MCCV log error ratios per replicate.
/// Labels are `case@origin:scheme`; truth rows use `case@origin`.
/// `cfg.family` is ignored.
pub fn run_design_benchmark(cfg: &ExperimentConfig, cases: &[DesignCase]) -> Result<ExperimentResult> {
    if cfg.schemes.is_empty() || cfg.n_grid.is_empty() {
        return Err(Error::invalid("design benchmark needs schemes and an n grid"));
    }
    for s in &cfg.schemes {
        s.validate()?;
    }
    let mut labels = Vec::new();
    let mut models = Vec::new();
    for case in cases {
        for (oi, origin) in case.origins.iter().enumerate() {
            let base = labels.len();
            labels.push(format!("{}@{oi}", case.label));
            for s in &cfg.schemes {
                labels.push(format!("{}@{oi}:{}", case.label, s.label()));
            }
            models.push((case, origin, base));
        }
    }
    let mut result = ExperimentResult::new("design", cfg, labels, cfg.n_grid.clone());
    if cfg.replicates == 0 {
        return Ok(result);
    }
    let root = SeedStream::new(cfg.seed).fork("design");
    for (ci, (case, origin, base)) in models.iter().enumerate() {
        let family = |n: usize| -> Result<GraphModel> {
            Ok(GraphModel::Rcm {
                rcm: Rcm::new(case.features.clone(), ConnectionFunction::hard_threshold(case.alpha(n))?),
                origin: origin.to_vec(),
                n,
                edge_mode: EdgeMode::Undirected,
            })
        };
        let cell_root = root.child(ci as u64);
        let mut truth_by_n = Vec::new();
        for (ni, &n) in cfg.n_grid.iter().enumerate() {
            let model = family(n)?;
            let t =
                with_thread_pool(|| model.origin_truth(cfg.truth_samples, cell_root.fork("truth").child(ni as u64)))?;
            result.records.push(Record::new(n, None, Some(*base), None, Statistic::Truth, t.value));
            truth_by_n.push((model, t.value));
        }
        let recs = run_cells(&cfg.n_grid, cfg.replicates, cell_root, |ni, n, rep, stream| {
            let (model, truth) = &truth_by_n[ni];
            let g = model.sample(&mut stream.fork("graph").rng())?.graph;
            let plan = SplitPlan { seed: stream.fork("splits").seed(), ..cfg.mccv };
            let mut out = Vec::new();
            for (si, scheme) in cfg.schemes.iter().enumerate() {
                let est = estimate_with_mccv(&g, scheme, &plan)?;
                let p0 = g.out_degree(0)? as f64 / g.n_other() as f64;
                let (ratio, flag) = log_error_ratio(est.estimate - truth, p0 - truth);
                out.push(
                    Record::new(n, Some(rep), Some(base + 1 + si), Some(est.selected_m), Statistic::LogRatio, ratio)
                        .flagged(flag),
                );
            }
            Ok(out)
        })?;
        result.records.extend(recs);
    }
    Ok(result)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{EmpiricalPoints, Features};

    fn small_cfg(replicates: usize) -> ExperimentConfig {
        let mut cfg = ExperimentConfig::new(
            ModelFamily::Fixed(GraphModel::Sbm(SbmSpec::running_example())),
            WeightScheme::standard(0.1),
            vec![],
            replicates,
            7,
        );
        cfg.mccv = SplitPlan::new(10, 0);
        cfg
    }

    #[test]
    fn edgeless_mse_is_truth_squared() {
        let pts = Features::from_rows(1, &[vec![0.0], vec![1.0]]).unwrap();
        let rcm = Rcm::new(
            FeatureDistribution::Empirical(EmpiricalPoints::uniform(pts).unwrap()),
            ConnectionFunction::hard_threshold(0.5).unwrap(),
        );
        let family = ModelFamily::Rcm { rcm, origin: vec![5.0], edge_mode: EdgeMode::Undirected };
        let cfg = ExperimentConfig::new(family, WeightScheme::standard(0.1), vec![6], 1, 1);
        let res = run_mse_study(&cfg).unwrap();
        for s in 0..3 {
            assert_eq!(res.mse_curve(6, s), vec![0.0; 7]);
        }
        let sbm = SbmSpec::new(vec![5, 5], vec![0.0, 0.0], 0.0, 1).unwrap();
        let cfg =
            ExperimentConfig::new(ModelFamily::Fixed(GraphModel::Sbm(sbm)), WeightScheme::standard(0.1), vec![], 1, 1);
        assert_eq!(run_mse_study(&cfg).unwrap().mse_curve(10, 1), vec![0.0; 10]);
    }

    #[test]
    fn record_count_and_oracle_dominance() {
        let cfg = small_cfg(20);
        let res = run_mse_study(&cfg).unwrap();
        // truth + R * schemes * (50 m values + oracle m + oracle error)
        assert_eq!(res.records.len(), 1 + 20 * 3 * (49 + 1 + 2));
        let res = run_mccv_study(&cfg).unwrap();
        assert_eq!(res.records.len(), 1 + 20 * 3 * 6);
        for rep in 0..20 {
            for s in 0..3 {
                let get = |stat| {
                    res.records
                        .iter()
                        .find(|r| r.replicate == Some(rep) && r.scheme == Some(s) && r.statistic == stat)
                        .unwrap()
                        .value
                };
                assert!(get(Statistic::OracleError).abs() <= get(Statistic::Error).abs());
            }
        }
    }

    #[test]
    fn aggregates_recompute_from_records() {
        let res = run_mccv_study(&small_cfg(15)).unwrap();
        let aggs = res.aggregates();
        for a in &aggs {
            let vals: Vec<f64> = res
                .records
                .iter()
                .filter(|r| {
                    r.n == a.n
                        && r.scheme == a.scheme
                        && r.m == a.m
                        && r.statistic == a.statistic
                        && !r.flags.excluded()
                })
                .map(|r| r.value)
                .collect();
            assert_eq!(vals.len(), a.count);
            assert_eq!(vals.iter().sum::<f64>() / vals.len() as f64, a.mean);
        }
    }

    #[test]
    fn growing_sbm_truths_exact() {
        let grid = vec![101, 301, 1001];
        let cfg = ExperimentConfig::new(ModelFamily::GrowingSbm, vec![WeightScheme::ConstantOne], grid.clone(), 1, 3);
        let res = run_mse_study(&cfg).unwrap();
        for n in grid {
            let t = res.select(Statistic::Truth, n, None).next().unwrap().value;
            assert_eq!(t, crate::model::sbm_truth(&SbmSpec::growing(n).unwrap()).unwrap().value);
            let approx = 3.0 * (n as f64).ln() / n as f64;
            assert!((t / approx - 1.0).abs() < 0.2, "{n}: {t} vs {approx}");
        }
    }

    #[test]
    fn complete_graph_is_censored() {
        let spec = SbmSpec::new(vec![8], vec![1.0], 0.0, 1).unwrap();
        let mut cfg =
            ExperimentConfig::new(ModelFamily::Fixed(GraphModel::Sbm(spec)), WeightScheme::standard(0.1), vec![], 3, 1);
        cfg.mccv = SplitPlan::new(5, 0);
        let res = run_mccv_study(&cfg).unwrap();
        // truth 7/8 on a complete graph with n_other = 7: empirical value 1
        let t = res.select(Statistic::Truth, 8, None).next().unwrap().value;
        assert_eq!(t, 7.0 / 8.0);
        for r in res.records.iter().filter(|r| r.statistic == Statistic::Estimate) {
            assert_eq!(r.value, 1.0);
        }
        assert!(res.aggregates().iter().all(|a| a.mean.is_finite()));
    }

    #[test]
    fn log_ratio_flags() {
        assert_eq!(log_error_ratio(0.1, 0.0), (0.0, Flag::Censored));
        assert_eq!(log_error_ratio(0.0, 0.0), (0.0, Flag::Censored));
        assert_eq!(log_error_ratio(0.0, 0.2).1, Flag::LeftCensored);
        assert!((log_error_ratio(-0.1, 0.2).0 - 0.5f64.ln()).abs() < 1e-15);
    }

    #[test]
    fn csv_is_reproducible() {
        let write = |cfg: &ExperimentConfig| {
            let res = run_mccv_study(cfg).unwrap();
            let mut a = Vec::new();
            res.write_records_csv(&mut a).unwrap();
            res.write_aggregates_csv(&mut a).unwrap();
            a
        };
        let a = write(&small_cfg(4));
        assert_eq!(a, write(&small_cfg(4)));
        let first = String::from_utf8(a).unwrap();
        assert!(first.starts_with("n,replicate,scheme,m,statistic,value,flags\n50,,,,truth,0.062,\n"));
    }

    #[test]
    fn stability_prefix_and_repeat() {
        let g = crate::model::sample_sbm_graph(&SbmSpec::running_example(), &mut SeedStream::new(5).rng()).unwrap();
        let s = run_mccv_stability(&g, &WeightScheme::ConstantOne, &[1, 1, 40, 160], 0.5, 9).unwrap();
        assert_eq!(s.curves[0], s.curves[1]);
        let solo = run_mccv_stability(&g, &WeightScheme::ConstantOne, &[40], 0.5, 9).unwrap();
        assert_eq!(solo.curves[0].risk, s.curves[2].risk);
        // variance of the mean scales like 1/M
        let m = 0;
        let ratio = (s.std_errors[2][m] / s.std_errors[3][m]).powi(2);
        assert!((2.0..8.0).contains(&ratio), "{ratio}");
        assert!(run_mccv_stability(&g, &WeightScheme::ConstantOne, &[], 0.5, 9).is_err());
    }

    #[test]
    fn design_empty_and_labels() {
        let mut cfg = small_cfg(0);
        cfg.n_grid = vec![50];
        let cases = design_cases().unwrap();
        let res = run_design_benchmark(&cfg, &cases).unwrap();
        assert!(res.records.is_empty());
        assert_eq!(res.labels.len(), 9 * 4);
        assert_eq!(res.labels[1], "beta@0:annulus-size");
        assert_eq!(cases[1].alpha(75), 0.5);
    }

    #[test]
    fn wireless_grid_and_model() {
        assert_eq!(default_wireless_grid().len(), 50);
        assert_eq!(default_stability_grid(), vec![10, 20, 40, 80, 160, 320, 640, 1280]);
        let (rcm, origin) = wireless_model().unwrap();
        assert_eq!(origin, vec![3.0, 3.0]);
        assert_eq!(rcm.features.dim(), 2);
    }

    #[test]
    fn fixed_family_rejects_other_sizes() {
        let f = ModelFamily::Fixed(GraphModel::Sbm(SbmSpec::running_example()));
        assert!(f.at(50).is_ok());
        assert!(f.at(60).is_err());
    }
}
