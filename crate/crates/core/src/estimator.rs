//! Locally weighted estimator of the origin's connection probability.
//!
//! Vertices are grouped by geodesic distance `l` from the origin. Annulus
//! `l` gets weight `w_l` (with `w_0 = 1`), spread evenly over its members,
//! and each vertex contributes its normalised degree `B_i / n`. The
//! estimate over the full ball of radius `k` is
//!
//! ```text
//! p_k = sum_{l<=k} (w_l / a_l) sum_{i in annulus l} B_i / n  /  sum_{l<=k} w_l
//! ```
//!
//! where `a_l` is the annulus size. [`estimate_trace`] refines this to one
//! value per added vertex (`m = 0, 1, ...`); completing annulus `k`
//! reproduces [`estimate_pk`] exactly.

use std::io::Write;

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{bfs_annuli_with, Annuli, Geodesic, Graph};
use crate::rng::SeedStream;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum WeightScheme {
    /// `w_l = |V_l \ V_{l-1}|`: plain average of degrees over the ball.
    AnnulusSize,
    /// `w_l = 1`: every annulus counts as much as the origin.
    ConstantOne,
    /// `w_l = gamma (1 - gamma)^{-l}`, `0 < gamma < 1`.
    Geometric { gamma: f64 },
    /// Explicit `w_1, w_2, ...`; `w_0` stays 1.
    Custom { weights: Vec<f64> },
}

impl WeightScheme {
    /// The three standard schemes, geometric with the given `gamma`.
    pub fn standard(gamma: f64) -> Vec<WeightScheme> {
        vec![WeightScheme::AnnulusSize, WeightScheme::ConstantOne, WeightScheme::Geometric { gamma }]
    }

    pub fn label(&self) -> String {
        match self {
            WeightScheme::AnnulusSize => "annulus-size".into(),
            WeightScheme::ConstantOne => "constant-one".into(),
            WeightScheme::Geometric { gamma } => format!("geometric({gamma})"),
            WeightScheme::Custom { .. } => "custom".into(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            WeightScheme::Geometric { gamma } if !(*gamma > 0.0 && *gamma < 1.0) => {
                Err(Error::invalid(format!("geometric gamma must lie in (0, 1), got {gamma}")))
            }
            WeightScheme::Custom { weights } if weights.iter().any(|w| !(*w >= 0.0) || !w.is_finite()) => {
                Err(Error::invalid("custom weights must be finite and non-negative"))
            }
            _ => Ok(()),
        }
    }
}

/// `w_0..=w_ecc` for the given annuli.
pub fn weights_for(scheme: &WeightScheme, annuli: &Annuli) -> Result<Vec<f64>> {
    scheme.validate()?;
    let ecc = annuli.eccentricity();
    let mut w = Vec::with_capacity(ecc + 1);
    w.push(1.0);
    for l in 1..=ecc {
        w.push(match scheme {
            WeightScheme::AnnulusSize => annuli.layer(l).len() as f64,
            WeightScheme::ConstantOne => 1.0,
            WeightScheme::Geometric { gamma } => gamma * (1.0 - gamma).powi(-(l as i32)),
            WeightScheme::Custom { weights } => *weights.get(l - 1).ok_or_else(|| {
                Error::invalid(format!("custom weights cover {} annuli, eccentricity is {ecc}", weights.len()))
            })?,
        });
    }
    Ok(w)
}

/// Step sizes `gamma_k = w_{k+1} / sum_{l<=k+1} w_l`, `k = 0..ecc`.
pub fn gamma_sequence(scheme: &WeightScheme, annuli: &Annuli) -> Result<Vec<f64>> {
    let w = weights_for(scheme, annuli)?;
    let mut total = w[0];
    Ok(w[1..]
        .iter()
        .map(|&wk| {
            total += wk;
            wk / total
        })
        .collect())
}

/// Order in which the members of one annulus enter the trace.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum InclusionOrder {
    /// Ascending vertex index.
    #[default]
    Index,
    /// Seeded shuffle within each annulus.
    Shuffled(u64),
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct TraceOptions {
    pub geodesic: Geodesic,
    pub order: InclusionOrder,
}

/// Estimates `p_m` after including the `m` closest non-origin vertices.
#[derive(Clone, Debug, PartialEq)]
pub struct EstimateTrace {
    values: Vec<f64>,
    /// `m` at which annulus `k` is complete, i.e. `|V_k| - 1`.
    boundaries: Vec<usize>,
    annulus: Vec<usize>,
    vertices: Vec<usize>,
}

impl EstimateTrace {
    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Largest `m` with a native value.
    pub fn m_max(&self) -> usize {
        self.values.len() - 1
    }

    /// Value at `m`, held constant past the reachable set.
    pub fn value_at(&self, m: usize) -> f64 {
        self.values[m.min(self.m_max())]
    }

    pub fn boundaries(&self) -> &[usize] {
        &self.boundaries
    }

    /// Annulus of the vertex added at step `m`.
    pub fn annulus(&self) -> &[usize] {
        &self.annulus
    }

    /// Vertex added at step `m` (0 for the origin).
    pub fn vertices(&self) -> &[usize] {
        &self.vertices
    }

    /// CSV with columns `m,estimate,annulus,vertex_added`.
    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut wtr = csv::Writer::from_writer(w);
        wtr.write_record(["m", "estimate", "annulus", "vertex_added"])?;
        for m in 0..self.values.len() {
            wtr.write_record([
                m.to_string(),
                format!("{}", self.values[m]),
                self.annulus[m].to_string(),
                self.vertices[m].to_string(),
            ])?;
        }
        wtr.flush()?;
        Ok(())
    }
}

fn normalised_degrees(g: &Graph) -> Vec<f64> {
    let n = g.n_other();
    if n == 0 {
        return vec![0.0; g.vertex_count()];
    }
    g.degrees().into_iter().map(|d| d as f64 / n as f64).collect()
}

pub fn estimate_trace(g: &Graph, scheme: &WeightScheme) -> Result<EstimateTrace> {
    estimate_trace_with(g, scheme, TraceOptions::default())
}

pub fn estimate_trace_with(g: &Graph, scheme: &WeightScheme, opts: TraceOptions) -> Result<EstimateTrace> {
    let annuli = bfs_annuli_with(g, opts.geodesic);
    trace_from_annuli(g, &annuli, scheme, opts.order)
}

pub(crate) fn trace_from_annuli(
    g: &Graph,
    annuli: &Annuli,
    scheme: &WeightScheme,
    order: InclusionOrder,
) -> Result<EstimateTrace> {
    let weights = weights_for(scheme, annuli)?;
    let values_by_vertex = normalised_degrees(g);
    let reachable = annuli.reachable();
    let mut trace = EstimateTrace {
        values: Vec::with_capacity(reachable),
        boundaries: Vec::with_capacity(annuli.layers().len()),
        annulus: Vec::with_capacity(reachable),
        vertices: Vec::with_capacity(reachable),
    };
    let mut shuffler = match order {
        InclusionOrder::Shuffled(seed) => Some(SeedStream::new(seed).rng()),
        InclusionOrder::Index => None,
    };
    let (mut num_done, mut den_done) = (0.0, 0.0);
    for (l, layer) in annuli.layers().iter().enumerate() {
        let mut members = layer.clone();
        if let Some(rng) = shuffler.as_mut() {
            members.shuffle(rng);
        }
        let w = weights[l];
        let a = members.len() as f64;
        let coef = w / a;
        let mut s = 0.0;
        for (j, &v) in members.iter().enumerate() {
            s += values_by_vertex[v];
            let num = num_done + coef * s;
            let den = den_done + w * ((j + 1) as f64 / a);
            trace.values.push(num / den);
            trace.annulus.push(l);
            trace.vertices.push(v);
        }
        num_done += coef * s;
        den_done += w;
        trace.boundaries.push(trace.values.len() - 1);
    }
    Ok(trace)
}

/// `p_k` from the closed form; `k` past the eccentricity clamps.
pub fn estimate_pk(g: &Graph, scheme: &WeightScheme, k: usize) -> Result<f64> {
    let annuli = bfs_annuli_with(g, Geodesic::default());
    let weights = weights_for(scheme, &annuli)?;
    let values_by_vertex = normalised_degrees(g);
    let k = k.min(annuli.eccentricity());
    let (mut num, mut den) = (0.0, 0.0);
    for (l, &w) in weights.iter().enumerate().take(k + 1) {
        let layer = annuli.layer(l);
        let sum: f64 = layer.iter().map(|&v| values_by_vertex[v]).sum();
        num += w / layer.len() as f64 * sum;
        den += w;
    }
    Ok(num / den)
}

/// `p_k` by the stochastic-approximation recursion
/// `p_{k+1} = p_k + gamma_k (mean of annulus k+1 - p_k)`, from `p_0 = B_0 / n`.
pub fn estimate_pk_recursive(g: &Graph, scheme: &WeightScheme, k: usize) -> Result<f64> {
    let annuli = bfs_annuli_with(g, Geodesic::default());
    let gammas = gamma_sequence(scheme, &annuli)?;
    let values_by_vertex = normalised_degrees(g);
    let k = k.min(annuli.eccentricity());
    let mut p = values_by_vertex[0];
    for (step, gamma) in gammas.iter().enumerate().take(k) {
        let layer = annuli.layer(step + 1);
        let mean = layer.iter().map(|&v| values_by_vertex[v]).sum::<f64>() / layer.len() as f64;
        p += gamma * (mean - p);
    }
    Ok(p)
}
