//! Monte Carlo cross-validation of the neighbourhood size.
//!
//! Each replicate splits the non-origin vertices at random into a fitting
//! half `V_i` and its complement. The full trace is computed on the graph
//! induced by `V_i ∪ {0}` and compared against the empirical estimate on the
//! graph induced by the complement plus the origin:
//!
//! ```text
//! R(m) = (1/M) sum_i (p_{i,m} - p~_{i,0})^2
//! ```
//!
//! Because the two halves are independent and the hold-out estimate is
//! unbiased, `E R(m)` equals the fitting-half MSE plus a term that does not
//! depend on `m`, so the minimiser of `R` targets the MSE minimiser.

use std::io::Write;

use rand::seq::index::sample;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::estimator::{estimate_trace, WeightScheme};
use crate::graph::Graph;
use crate::rng::SeedStream;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SplitPlan {
    /// Number of random splits `M`.
    pub replications: usize,
    /// Fraction of non-origin vertices in the fitting half.
    #[serde(default = "default_fraction")]
    pub fraction: f64,
    pub seed: u64,
}

fn default_fraction() -> f64 {
    0.5
}

impl SplitPlan {
    pub fn new(replications: usize, seed: u64) -> Self {
        SplitPlan { replications, fraction: 0.5, seed }
    }

    pub fn with_fraction(mut self, fraction: f64) -> Self {
        self.fraction = fraction;
        self
    }

    /// Fitting-half size for `n_other` non-origin vertices.
    pub fn fit_size(&self, n_other: usize) -> usize {
        (self.fraction * n_other as f64).floor() as usize
    }

    pub fn validate(&self, n_other: usize) -> Result<()> {
        if self.replications == 0 {
            return Err(Error::invalid("MCCV needs at least one replication"));
        }
        if !(self.fraction > 0.0 && self.fraction < 1.0) {
            return Err(Error::invalid(format!("split fraction must lie in (0, 1), got {}", self.fraction)));
        }
        if n_other < 2 {
            return Err(Error::invalid(format!("MCCV needs at least 2 non-origin vertices, got {n_other}")));
        }
        let k = self.fit_size(n_other);
        if k < 1 || n_other - k < 1 {
            return Err(Error::invalid(format!(
                "split fraction {} leaves an empty half for n = {n_other}",
                self.fraction
            )));
        }
        Ok(())
    }
}

/// The split of replicate `i`: sorted fitting-half and hold-out vertex sets,
/// both without the origin.
pub fn split_for(plan: &SplitPlan, n_other: usize, i: usize) -> (Vec<usize>, Vec<usize>) {
    let mut rng = SeedStream::new(plan.seed).child(i as u64).rng();
    let k = plan.fit_size(n_other);
    let mut in_fit = vec![false; n_other + 1];
    for idx in sample(&mut rng, n_other, k) {
        in_fit[idx + 1] = true;
    }
    let fit = (1..=n_other).filter(|&v| in_fit[v]).collect();
    let hold = (1..=n_other).filter(|&v| !in_fit[v]).collect();
    (fit, hold)
}

/// One replicate's ingredients: the fitting-half trace and hold-out estimate.
#[derive(Clone, Debug, PartialEq)]
pub struct SplitReplicate {
    pub trace: Vec<f64>,
    pub holdout: f64,
}

impl SplitReplicate {
    /// Trace value at `m`, clamped to the last entry.
    pub fn value_at(&self, m: usize) -> f64 {
        self.trace[m.min(self.trace.len() - 1)]
    }
}

/// Per-replicate traces and hold-out estimates for `M` splits, computed in
/// parallel and returned in replicate order.
pub fn split_replicates(g: &Graph, scheme: &WeightScheme, plan: &SplitPlan) -> Result<Vec<SplitReplicate>> {
    plan.validate(g.n_other())?;
    scheme.validate()?;
    (0..plan.replications)
        .into_par_iter()
        .map(|i| {
            let (fit, hold) = split_for(plan, g.n_other(), i);
            let mut keep = Vec::with_capacity(fit.len() + 1);
            keep.push(0);
            keep.extend(&fit);
            let (g_fit, _) = g.induced_subgraph(&keep)?;
            keep.truncate(1);
            keep.extend(&hold);
            let (g_hold, _) = g.induced_subgraph(&keep)?;
            let trace = estimate_trace(&g_fit, scheme)?.values().to_vec();
            let holdout = g_hold.out_degree(0)? as f64 / g_hold.n_other() as f64;
            Ok(SplitReplicate { trace, holdout })
        })
        .collect()
}

/// MCCV risk estimates `R(m)` for `m = 0..=m_cap`.
#[derive(Clone, Debug, PartialEq)]
pub struct RiskCurve {
    pub risk: Vec<f64>,
    /// Replicates whose fitting-half trace reaches `m` without clamping.
    pub native_counts: Vec<usize>,
    pub selected: usize,
    pub scheme: String,
    pub replications: usize,
    pub seed: u64,
}

impl RiskCurve {
    /// Aggregates replicates in index order.
    pub fn from_replicates(reps: &[SplitReplicate], scheme: &WeightScheme, plan: &SplitPlan) -> Self {
        let m_cap = reps.iter().map(|r| r.trace.len() - 1).max().unwrap_or(0);
        let mut risk = vec![0.0; m_cap + 1];
        let mut native_counts = vec![0; m_cap + 1];
        for r in reps {
            let last = r.trace.len() - 1;
            for (m, acc) in risk.iter_mut().enumerate() {
                let d = r.value_at(m) - r.holdout;
                *acc += d * d;
            }
            for c in native_counts.iter_mut().take(last + 1) {
                *c += 1;
            }
        }
        let mf = reps.len().max(1) as f64;
        risk.iter_mut().for_each(|v| *v /= mf);
        let selected = select_m(&risk);
        RiskCurve { risk, native_counts, selected, scheme: scheme.label(), replications: reps.len(), seed: plan.seed }
    }

    pub fn min_risk(&self) -> f64 {
        self.risk[self.selected]
    }

    /// CSV with columns `m,risk,scheme,M,seed`.
    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut wtr = csv::Writer::from_writer(w);
        wtr.write_record(["m", "risk", "scheme", "M", "seed"])?;
        for (m, r) in self.risk.iter().enumerate() {
            wtr.write_record([
                m.to_string(),
                format!("{r}"),
                self.scheme.clone(),
                self.replications.to_string(),
                self.seed.to_string(),
            ])?;
        }
        wtr.flush()?;
        Ok(())
    }
}

pub fn mccv_risk(g: &Graph, scheme: &WeightScheme, plan: &SplitPlan) -> Result<RiskCurve> {
    let reps = split_replicates(g, scheme, plan)?;
    Ok(RiskCurve::from_replicates(&reps, scheme, plan))
}

/// Smallest index attaining the minimum. Empty input selects 0.
pub fn select_m(risk: &[f64]) -> usize {
    let mut best = 0;
    for (m, &r) in risk.iter().enumerate() {
        if r < risk[best] {
            best = m;
        }
    }
    best
}

/// Index of the curve with the lowest minimal risk (first on ties).
pub fn select_scheme(curves: &[RiskCurve]) -> Option<usize> {
    let mut best: Option<usize> = None;
    for (i, c) in curves.iter().enumerate() {
        if best.is_none_or(|b| c.min_risk() < curves[b].min_risk()) {
            best = Some(i);
        }
    }
    best
}

#[derive(Clone, Debug, PartialEq)]
pub struct MccvEstimate {
    pub selected_m: usize,
    pub estimate: f64,
    pub curve: RiskCurve,
}

/// Selects `m` by MCCV and evaluates the full-graph trace there.
pub fn estimate_with_mccv(g: &Graph, scheme: &WeightScheme, plan: &SplitPlan) -> Result<MccvEstimate> {
    let curve = mccv_risk(g, scheme, plan)?;
    let trace = estimate_trace(g, scheme)?;
    Ok(MccvEstimate { selected_m: curve.selected, estimate: trace.value_at(curve.selected), curve })
}
