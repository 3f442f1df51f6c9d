//! Feature distributions, connection functions, graph samplers and true
//! local connection probabilities.

use rand::distr::weighted::WeightedIndex;
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::Graph;
use crate::rng::SeedStream;

/// `n` points in `dim` dimensions, stored row-major.
#[derive(Clone, Debug, PartialEq)]
pub struct Features {
    dim: usize,
    data: Vec<f64>,
}

impl Features {
    pub fn new(dim: usize) -> Self {
        Features { dim, data: Vec::new() }
    }

    pub fn from_rows(dim: usize, rows: &[Vec<f64>]) -> Result<Self> {
        let mut f = Features::with_capacity(dim, rows.len());
        for r in rows {
            f.push(r)?;
        }
        Ok(f)
    }

    pub fn with_capacity(dim: usize, n: usize) -> Self {
        Features { dim, data: Vec::with_capacity(dim * n) }
    }

    pub fn push(&mut self, point: &[f64]) -> Result<()> {
        if point.len() != self.dim {
            return Err(Error::Dimension { expected: self.dim, got: point.len() });
        }
        self.data.extend_from_slice(point);
        Ok(())
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.data.len().checked_div(self.dim).unwrap_or(0)
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn point(&self, i: usize) -> &[f64] {
        &self.data[i * self.dim..(i + 1) * self.dim]
    }

    pub fn iter(&self) -> impl Iterator<Item = &[f64]> {
        self.data.chunks_exact(self.dim.max(1))
    }
}

/// Distance between feature vectors.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Metric {
    #[default]
    Euclidean,
    /// Great-circle distance in kilometres between (latitude, longitude)
    /// pairs given in degrees.
    HaversineKm,
}

const EARTH_RADIUS_KM: f64 = 6371.0088;

impl Metric {
    pub fn distance(&self, a: &[f64], b: &[f64]) -> f64 {
        match self {
            Metric::Euclidean => a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt(),
            Metric::HaversineKm => {
                let (lat1, lon1) = (a[0].to_radians(), a[1].to_radians());
                let (lat2, lon2) = (b[0].to_radians(), b[1].to_radians());
                let h =
                    ((lat2 - lat1) / 2.0).sin().powi(2) + lat1.cos() * lat2.cos() * ((lon2 - lon1) / 2.0).sin().powi(2);
                2.0 * EARTH_RADIUS_KM * h.sqrt().min(1.0).asin()
            }
        }
    }

    fn check_dim(&self, dim: usize) -> Result<()> {
        match self {
            Metric::HaversineKm if dim != 2 => Err(Error::Dimension { expected: 2, got: dim }),
            _ => Ok(()),
        }
    }
}

/// Non-increasing map from feature distance to edge probability.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum ConnectionFunction {
    /// `1{d <= alpha}`
    HardThreshold { alpha: f64 },
    /// `exp(-rate * d)`
    ExponentialDecay { rate: f64 },
}

impl ConnectionFunction {
    pub fn hard_threshold(alpha: f64) -> Result<Self> {
        let cf = ConnectionFunction::HardThreshold { alpha };
        cf.validate()?;
        Ok(cf)
    }

    pub fn exponential_decay(rate: f64) -> Result<Self> {
        let cf = ConnectionFunction::ExponentialDecay { rate };
        cf.validate()?;
        Ok(cf)
    }

    pub fn validate(&self) -> Result<()> {
        match *self {
            ConnectionFunction::HardThreshold { alpha } if !(alpha >= 0.0) || alpha.is_nan() => {
                Err(Error::invalid(format!("threshold alpha must be >= 0, got {alpha}")))
            }
            ConnectionFunction::ExponentialDecay { rate } if !(rate > 0.0 && rate.is_finite()) => {
                Err(Error::invalid(format!("decay rate must be > 0, got {rate}")))
            }
            _ => Ok(()),
        }
    }

    #[inline]
    pub fn eval(&self, distance: f64) -> f64 {
        match *self {
            ConnectionFunction::HardThreshold { alpha } => {
                if distance <= alpha {
                    1.0
                } else {
                    0.0
                }
            }
            ConnectionFunction::ExponentialDecay { rate } => (-rate * distance).exp(),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
struct MixtureComponent {
    weight: f64,
    mean: Vec<f64>,
    cov: Vec<Vec<f64>>,
    /// Lower Cholesky factor of `cov`, row-major.
    chol: Vec<f64>,
}

/// Axis-aligned box `[lower_i, upper_i]`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BoxBounds {
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
}

impl BoxBounds {
    pub fn contains(&self, p: &[f64]) -> bool {
        p.iter().zip(self.lower.iter().zip(&self.upper)).all(|(x, (lo, hi))| *x >= *lo && *x <= *hi)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct GaussianMixture {
    dim: usize,
    components: Vec<MixtureComponent>,
    picker: WeightedIndex<f64>,
    truncation: Option<BoxBounds>,
}

/// Cholesky factorisation; `None` unless `cov` is symmetric positive definite.
fn cholesky(cov: &[Vec<f64>]) -> Option<Vec<f64>> {
    let d = cov.len();
    if cov.iter().any(|r| r.len() != d) {
        return None;
    }
    for (i, row) in cov.iter().enumerate() {
        for (j, &a) in row.iter().enumerate().take(i) {
            if (a - cov[j][i]).abs() > 1e-12 * (1.0 + a.abs()) {
                return None;
            }
        }
    }
    let mut l = vec![0.0; d * d];
    for i in 0..d {
        for j in 0..=i {
            let s: f64 = (0..j).map(|k| l[i * d + k] * l[j * d + k]).sum();
            if i == j {
                let v = cov[i][i] - s;
                if !(v > 0.0) {
                    return None;
                }
                l[i * d + i] = v.sqrt();
            } else {
                l[i * d + j] = (cov[i][j] - s) / l[j * d + j];
            }
        }
    }
    Some(l)
}

/// Maximum rejection attempts per truncated draw before giving up.
const MAX_REJECTIONS: usize = 10_000_000;

impl GaussianMixture {
    /// Components are `(weight, mean, covariance)`. Weights are normalised.
    pub fn new(components: Vec<(f64, Vec<f64>, Vec<Vec<f64>>)>, truncation: Option<BoxBounds>) -> Result<Self> {
        let dim = components
            .first()
            .map(|c| c.1.len())
            .ok_or_else(|| Error::invalid("mixture needs at least one component"))?;
        if dim == 0 {
            return Err(Error::invalid("mixture dimension must be positive"));
        }
        let total: f64 = components.iter().map(|c| c.0).sum();
        if components.iter().any(|c| !(c.0 >= 0.0)) || !(total > 0.0) {
            return Err(Error::invalid("mixture weights must be non-negative with positive sum"));
        }
        let mut comps = Vec::with_capacity(components.len());
        for (w, mean, cov) in components {
            if mean.len() != dim {
                return Err(Error::Dimension { expected: dim, got: mean.len() });
            }
            if cov.len() != dim {
                return Err(Error::Dimension { expected: dim, got: cov.len() });
            }
            let chol =
                cholesky(&cov).ok_or_else(|| Error::invalid("covariance matrix is not symmetric positive definite"))?;
            comps.push(MixtureComponent { weight: w / total, mean, cov, chol });
        }
        if let Some(b) = &truncation {
            if b.lower.len() != dim || b.upper.len() != dim {
                return Err(Error::Dimension { expected: dim, got: b.lower.len().min(b.upper.len()) });
            }
            if b.lower.iter().zip(&b.upper).any(|(lo, hi)| !(lo < hi)) {
                return Err(Error::invalid("truncation box must have lower < upper"));
            }
        }
        let picker = WeightedIndex::new(comps.iter().map(|c| c.weight))
            .map_err(|e| Error::invalid(format!("mixture weights: {e}")))?;
        Ok(GaussianMixture { dim, components: comps, picker, truncation })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn truncation(&self) -> Option<&BoxBounds> {
        self.truncation.as_ref()
    }

    /// `(weight, mean, covariance)` per component, weights normalised.
    pub fn components(&self) -> impl Iterator<Item = (f64, &[f64], &[Vec<f64>])> {
        self.components.iter().map(|c| (c.weight, c.mean.as_slice(), c.cov.as_slice()))
    }

    fn draw_untruncated<R: Rng + ?Sized>(&self, rng: &mut R, out: &mut [f64]) {
        let c = &self.components[self.picker.sample(rng)];
        let d = self.dim;
        let z: Vec<f64> = (0..d).map(|_| rng.sample(StandardNormal)).collect();
        for (i, o) in out.iter_mut().enumerate().take(d) {
            *o = c.mean[i] + (0..=i).map(|k| c.chol[i * d + k] * z[k]).sum::<f64>();
        }
    }

    fn draw<R: Rng + ?Sized>(&self, rng: &mut R, out: &mut [f64]) -> Result<()> {
        for _ in 0..MAX_REJECTIONS {
            self.draw_untruncated(rng, out);
            match &self.truncation {
                Some(b) if !b.contains(out) => continue,
                _ => return Ok(()),
            }
        }
        Err(Error::invalid("truncation box has negligible mass under the mixture"))
    }
}

/// Finite point set with sampling weights.
#[derive(Clone, Debug, PartialEq)]
pub struct EmpiricalPoints {
    points: Features,
    weights: Vec<f64>,
    picker: WeightedIndex<f64>,
    with_replacement: bool,
}

impl EmpiricalPoints {
    pub fn new(points: Features, weights: Vec<f64>, with_replacement: bool) -> Result<Self> {
        if points.is_empty() {
            return Err(Error::invalid("empirical point set is empty"));
        }
        if weights.len() != points.len() {
            return Err(Error::invalid(format!("{} sampling weights for {} points", weights.len(), points.len())));
        }
        let total: f64 = weights.iter().sum();
        if weights.iter().any(|w| !(*w >= 0.0) || !w.is_finite()) || !(total > 0.0) {
            return Err(Error::invalid("sampling weights must be non-negative with positive sum"));
        }
        let weights: Vec<f64> = weights.iter().map(|w| w / total).collect();
        let picker = WeightedIndex::new(&weights).map_err(|e| Error::invalid(format!("sampling weights: {e}")))?;
        Ok(EmpiricalPoints { points, weights, picker, with_replacement })
    }

    /// Equal sampling weights, with replacement.
    pub fn uniform(points: Features) -> Result<Self> {
        let n = points.len();
        EmpiricalPoints::new(points, vec![1.0; n], true)
    }

    pub fn points(&self) -> &Features {
        &self.points
    }

    /// Normalised sampling weights.
    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn with_replacement(&self) -> bool {
        self.with_replacement
    }

    /// Indices of `n` draws.
    pub fn sample_indices<R: Rng + ?Sized>(&self, n: usize, rng: &mut R) -> Result<Vec<usize>> {
        if self.with_replacement {
            Ok((0..n).map(|_| self.picker.sample(rng)).collect())
        } else {
            let positive = self.weights.iter().filter(|w| **w > 0.0).count();
            if n > positive {
                return Err(Error::invalid(format!(
                    "cannot draw {n} points without replacement from {positive} with positive weight"
                )));
            }
            let idx = rand::seq::index::sample_weighted(rng, self.weights.len(), |i| self.weights[i], n)
                .map_err(|e| Error::invalid(format!("weighted sampling: {e}")))?;
            Ok(idx.into_vec())
        }
    }
}

/// Latent feature law.
#[derive(Clone, Debug, PartialEq)]
pub enum FeatureDistribution {
    /// Beta(a, b) on [0, 1].
    Beta {
        a: f64,
        b: f64,
    },
    GaussianMixture(GaussianMixture),
    /// Uniform on [0, 1]^dim.
    UniformCube {
        dim: usize,
    },
    Empirical(EmpiricalPoints),
}

impl FeatureDistribution {
    pub fn beta(a: f64, b: f64) -> Result<Self> {
        if !(a > 0.0 && b > 0.0 && a.is_finite() && b.is_finite()) {
            return Err(Error::invalid(format!("beta parameters must be positive, got ({a}, {b})")));
        }
        Ok(FeatureDistribution::Beta { a, b })
    }

    pub fn uniform_cube(dim: usize) -> Result<Self> {
        if dim == 0 {
            return Err(Error::invalid("cube dimension must be positive"));
        }
        Ok(FeatureDistribution::UniformCube { dim })
    }

    pub fn dim(&self) -> usize {
        match self {
            FeatureDistribution::Beta { .. } => 1,
            FeatureDistribution::GaussianMixture(m) => m.dim(),
            FeatureDistribution::UniformCube { dim } => *dim,
            FeatureDistribution::Empirical(e) => e.points().dim(),
        }
    }

    fn draw_into<R: Rng + ?Sized>(&self, rng: &mut R, out: &mut [f64]) -> Result<()> {
        match self {
            FeatureDistribution::Beta { a, b } => {
                let beta = rand_distr::Beta::new(*a, *b).map_err(|e| Error::invalid(format!("beta: {e}")))?;
                out[0] = beta.sample(rng);
            }
            FeatureDistribution::GaussianMixture(m) => m.draw(rng, out)?,
            FeatureDistribution::UniformCube { .. } => {
                for v in out.iter_mut() {
                    *v = rng.random::<f64>();
                }
            }
            FeatureDistribution::Empirical(e) => {
                // single draws are always with replacement
                let i = e.picker.sample(rng);
                out.copy_from_slice(e.points().point(i));
            }
        }
        Ok(())
    }
}

/// `n` independent draws from `dist`.
pub fn sample_features<R: Rng + ?Sized>(dist: &FeatureDistribution, n: usize, rng: &mut R) -> Result<Features> {
    let dim = dist.dim();
    let mut out = Features::with_capacity(dim, n);
    match dist {
        FeatureDistribution::Empirical(e) => {
            for i in e.sample_indices(n, rng)? {
                out.push(e.points().point(i))?;
            }
        }
        FeatureDistribution::Beta { a, b } => {
            let beta = rand_distr::Beta::new(*a, *b).map_err(|e| Error::invalid(format!("beta: {e}")))?;
            for _ in 0..n {
                out.push(&[beta.sample(rng)])?;
            }
        }
        _ => {
            let mut buf = vec![0.0; dim];
            for _ in 0..n {
                dist.draw_into(rng, &mut buf)?;
                out.push(&buf)?;
            }
        }
    }
    Ok(out)
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum EdgeMode {
    Directed,
    #[default]
    Undirected,
}

/// Bernoulli(`p`) edge decision. Degenerate probabilities consume no draw.
#[inline]
fn bernoulli<R: Rng + ?Sized>(p: f64, rng: &mut R) -> bool {
    if p <= 0.0 {
        false
    } else if p >= 1.0 {
        true
    } else {
        p > rng.random::<f64>()
    }
}

/// Random connection model graph: vertex 0 sits at `origin`, vertices
/// `1..=n` carry `features`.
pub fn sample_rcm_graph<R: Rng + ?Sized>(
    features: &Features,
    origin: &[f64],
    cf: &ConnectionFunction,
    metric: Metric,
    mode: EdgeMode,
    rng: &mut R,
) -> Result<Graph> {
    if origin.len() != features.dim() {
        return Err(Error::Dimension { expected: features.dim(), got: origin.len() });
    }
    metric.check_dim(origin.len())?;
    let mut all = Features::with_capacity(origin.len(), features.len() + 1);
    all.push(origin)?;
    for p in features.iter() {
        all.push(p)?;
    }
    let n = all.len();
    let mut edges = Vec::new();
    for i in 0..n {
        let start = match mode {
            EdgeMode::Undirected => i + 1,
            EdgeMode::Directed => 0,
        };
        for j in start..n {
            if i == j {
                continue;
            }
            let p = cf.eval(metric.distance(all.point(i), all.point(j)));
            if bernoulli(p, rng) {
                edges.push((i, j));
            }
        }
    }
    let mut g = Graph::from_edges(n, &edges, mode == EdgeMode::Directed)?;
    g.set_features(all);
    Ok(g)
}

/// Random connection model: feature law, connection function and metric.
#[derive(Clone, Debug, PartialEq)]
pub struct Rcm {
    pub features: FeatureDistribution,
    pub connection: ConnectionFunction,
    pub metric: Metric,
}

impl Rcm {
    pub fn new(features: FeatureDistribution, connection: ConnectionFunction) -> Self {
        Rcm { features, connection, metric: Metric::Euclidean }
    }

    pub fn with_metric(mut self, metric: Metric) -> Self {
        self.metric = metric;
        self
    }

    pub fn sample_graph<R: Rng + ?Sized>(
        &self,
        n: usize,
        origin: &[f64],
        mode: EdgeMode,
        rng: &mut R,
    ) -> Result<Graph> {
        let feats = sample_features(&self.features, n, rng)?;
        sample_rcm_graph(&feats, origin, &self.connection, self.metric, mode, rng)
    }

    /// Degree of a probe at `origin` among `n` fresh features, without
    /// building the rest of the graph. Same law as `B_0` in a full graph.
    pub fn sample_origin_degree<R: Rng + ?Sized>(&self, n: usize, origin: &[f64], rng: &mut R) -> Result<usize> {
        if origin.len() != self.features.dim() {
            return Err(Error::Dimension { expected: self.features.dim(), got: origin.len() });
        }
        let mut buf = vec![0.0; origin.len()];
        let mut degree = 0;
        for _ in 0..n {
            self.features.draw_into(rng, &mut buf)?;
            let p = self.connection.eval(self.metric.distance(origin, &buf));
            if bernoulli(p, rng) {
                degree += 1;
            }
        }
        Ok(degree)
    }

    pub fn truth(&self, x: &[f64], method: TruthRequest, stream: SeedStream) -> Result<TruthValue> {
        truth_with_metric(&self.features, &self.connection, self.metric, x, method, stream)
    }
}

/// Stochastic block model with the origin inside community
/// `origin_community` (1-based). `sizes` count the origin.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SbmSpec {
    pub sizes: Vec<usize>,
    pub intra: Vec<f64>,
    pub inter: f64,
    pub origin_community: usize,
}

impl SbmSpec {
    pub fn new(sizes: Vec<usize>, intra: Vec<f64>, inter: f64, origin_community: usize) -> Result<Self> {
        let s = SbmSpec { sizes, intra, inter, origin_community };
        s.validate()?;
        Ok(s)
    }

    /// The running example: c=(10,25,15), p=(0.3,0.5,0.3), q=0.01, origin in community 1.
    pub fn running_example() -> Self {
        SbmSpec { sizes: vec![10, 25, 15], intra: vec![0.3, 0.5, 0.3], inter: 0.01, origin_community: 1 }
    }

    /// Growing family: c_n = ([n/5], [n/2], rest), p_n = 1 ∧ (15, 10, 20)·log n / n, q_n = 1/n.
    pub fn growing(n: usize) -> Result<Self> {
        if n < 3 {
            return Err(Error::invalid("growing SBM needs n >= 3"));
        }
        let nf = n as f64;
        let c1 = (nf / 5.0).round() as usize;
        let c2 = (nf / 2.0).round() as usize;
        let c3 = n - c1 - c2;
        let r = nf.ln() / nf;
        let intra = [15.0, 10.0, 20.0].iter().map(|k| (k * r).min(1.0)).collect();
        SbmSpec::new(vec![c1, c2, c3], intra, 1.0 / nf, 1)
    }

    pub fn validate(&self) -> Result<()> {
        if self.sizes.is_empty() || self.sizes.len() != self.intra.len() {
            return Err(Error::invalid("SBM needs one intra probability per community"));
        }
        if self.sizes.contains(&0) {
            return Err(Error::invalid("community sizes must be positive"));
        }
        if self.origin_community == 0 || self.origin_community > self.sizes.len() {
            return Err(Error::invalid(format!(
                "origin community {} outside 1..={}",
                self.origin_community,
                self.sizes.len()
            )));
        }
        if self.intra.iter().chain(std::iter::once(&self.inter)).any(|p| !(0.0..=1.0).contains(p)) {
            return Err(Error::invalid("SBM probabilities must lie in [0, 1]"));
        }
        Ok(())
    }

    /// Total vertex count, origin included.
    pub fn n(&self) -> usize {
        self.sizes.iter().sum()
    }

    /// Community (0-based) of every vertex; vertex 0 is the origin.
    pub fn labels(&self) -> Vec<usize> {
        let j0 = self.origin_community - 1;
        let mut labels = Vec::with_capacity(self.n());
        labels.push(j0);
        for (j, &c) in self.sizes.iter().enumerate() {
            let extra = if j == j0 { c - 1 } else { c };
            labels.extend(std::iter::repeat_n(j, extra));
        }
        labels
    }

    /// `((c_j - 1) p_j + (n - c_j) q) / n` for a vertex of community `j` (0-based),
    /// evaluated as a mixture of the two probabilities.
    pub fn community_truth(&self, j: usize) -> f64 {
        let n = self.n() as f64;
        let c = self.sizes[j] as f64;
        (c - 1.0) / n * self.intra[j] + (n - c) / n * self.inter
    }

    /// `E[B_0] / (n - 1)`: the mean of the empirical estimator on a sampled
    /// graph, whose origin has `n - 1` potential neighbours.
    pub fn expected_empirical(&self) -> f64 {
        let n = self.n();
        if n < 2 {
            return 0.0;
        }
        self.community_truth(self.origin_community - 1) * n as f64 / (n - 1) as f64
    }
}

pub fn sample_sbm_graph<R: Rng + ?Sized>(spec: &SbmSpec, rng: &mut R) -> Result<Graph> {
    sample_sbm_graph_labeled(spec, rng).map(|(g, _)| g)
}

/// SBM graph plus the community label of every vertex.
pub fn sample_sbm_graph_labeled<R: Rng + ?Sized>(spec: &SbmSpec, rng: &mut R) -> Result<(Graph, Vec<usize>)> {
    spec.validate()?;
    let labels = spec.labels();
    let n = labels.len();
    let mut edges = Vec::new();
    for i in 0..n {
        for j in i + 1..n {
            let p = if labels[i] == labels[j] { spec.intra[labels[i]] } else { spec.inter };
            if bernoulli(p, rng) {
                edges.push((i, j));
            }
        }
    }
    Ok((Graph::from_edges(n, &edges, false)?, labels))
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum TruthMethod {
    ClosedForm,
    NumericIntegration,
    MonteCarlo { samples: usize, std_error: f64 },
    EmpiricalExact,
}

/// A local connection probability with the method that produced it.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TruthValue {
    pub value: f64,
    pub method: TruthMethod,
}

impl TruthValue {
    pub fn std_error(&self) -> f64 {
        match self.method {
            TruthMethod::MonteCarlo { std_error, .. } => std_error,
            _ => 0.0,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum TruthRequest {
    MonteCarlo {
        samples: usize,
    },
    NumericIntegration,
    /// Plain average of `rho` over every stored point; sampling weights
    /// are ignored.
    EmpiricalExact,
}

pub fn sbm_truth(spec: &SbmSpec) -> Result<TruthValue> {
    spec.validate()?;
    Ok(TruthValue { value: spec.community_truth(spec.origin_community - 1), method: TruthMethod::ClosedForm })
}

/// `E rho(|X - x|)` with Euclidean distance.
pub fn true_connection_probability(
    dist: &FeatureDistribution,
    cf: &ConnectionFunction,
    x: &[f64],
    method: TruthRequest,
    stream: SeedStream,
) -> Result<TruthValue> {
    truth_with_metric(dist, cf, Metric::Euclidean, x, method, stream)
}

const MC_BATCH: usize = 10_000;

fn truth_with_metric(
    dist: &FeatureDistribution,
    cf: &ConnectionFunction,
    metric: Metric,
    x: &[f64],
    method: TruthRequest,
    stream: SeedStream,
) -> Result<TruthValue> {
    if x.len() != dist.dim() {
        return Err(Error::Dimension { expected: dist.dim(), got: x.len() });
    }
    metric.check_dim(x.len())?;
    match method {
        TruthRequest::EmpiricalExact => {
            let FeatureDistribution::Empirical(e) = dist else {
                return Err(Error::Unsupported {
                    method: "empirical-exact",
                    what: "a non-empirical distribution".into(),
                });
            };
            let pts = e.points();
            let sum: f64 = pts.iter().map(|p| cf.eval(metric.distance(p, x))).sum();
            Ok(TruthValue { value: sum / pts.len() as f64, method: TruthMethod::EmpiricalExact })
        }
        TruthRequest::NumericIntegration => match (dist, cf) {
            (FeatureDistribution::Beta { a, b }, ConnectionFunction::HardThreshold { alpha }) => Ok(TruthValue {
                value: beta_mass(*a, *b, x[0] - alpha, x[0] + alpha).clamp(0.0, 1.0),
                method: TruthMethod::NumericIntegration,
            }),
            _ => Err(Error::Unsupported {
                method: "numeric-integration",
                what: "anything but Beta features with a hard threshold".into(),
            }),
        },
        TruthRequest::MonteCarlo { samples } => {
            if samples < 2 {
                return Err(Error::invalid("Monte Carlo truth needs at least 2 samples"));
            }
            let batches = samples.div_ceil(MC_BATCH);
            let partial: Vec<Result<(f64, f64)>> = (0..batches)
                .into_par_iter()
                .map(|b| {
                    let mut rng = stream.child(b as u64).rng();
                    let len = MC_BATCH.min(samples - b * MC_BATCH);
                    let mut buf = vec![0.0; x.len()];
                    let (mut s, mut s2) = (0.0, 0.0);
                    for _ in 0..len {
                        dist.draw_into(&mut rng, &mut buf)?;
                        let v = cf.eval(metric.distance(&buf, x));
                        s += v;
                        s2 += v * v;
                    }
                    Ok((s, s2))
                })
                .collect();
            let (mut s, mut s2) = (0.0, 0.0);
            for r in partial {
                let (a, b) = r?;
                s += a;
                s2 += b;
            }
            let nf = samples as f64;
            let mean = s / nf;
            let var = ((s2 - nf * mean * mean) / (nf - 1.0)).max(0.0);
            Ok(TruthValue { value: mean, method: TruthMethod::MonteCarlo { samples, std_error: (var / nf).sqrt() } })
        }
    }
}

const GAUSS_LEGENDRE_5: [(f64, f64); 5] = [
    (0.0, 0.568_888_888_888_888_9),
    (-0.538_469_310_105_683_1, 0.478_628_670_499_366_5),
    (0.538_469_310_105_683_1, 0.478_628_670_499_366_5),
    (-0.906_179_845_938_664, 0.236_926_885_056_189_1),
    (0.906_179_845_938_664, 0.236_926_885_056_189_1),
];

/// Beta(a, b) probability of `[lo, hi] ∩ [0, 1]` by composite Gauss–Legendre.
fn beta_mass(a: f64, b: f64, lo: f64, hi: f64) -> f64 {
    let lo = lo.max(0.0);
    let hi = hi.min(1.0);
    if !(hi > lo) {
        return 0.0;
    }
    let log_norm = statrs::function::gamma::ln_gamma(a + b)
        - statrs::function::gamma::ln_gamma(a)
        - statrs::function::gamma::ln_gamma(b);
    let pdf = |t: f64| ((a - 1.0) * t.ln() + (b - 1.0) * (1.0 - t).ln() + log_norm).exp();
    const PANELS: usize = 1024;
    let h = (hi - lo) / PANELS as f64;
    (0..PANELS)
        .map(|k| {
            let mid = lo + (k as f64 + 0.5) * h;
            GAUSS_LEGENDRE_5.iter().map(|(node, w)| w * pdf(mid + node * h / 2.0)).sum::<f64>() * h / 2.0
        })
        .sum()
}

/// A fully specified graph law with its origin: what a study replicates.
#[derive(Clone, Debug, PartialEq)]
pub enum GraphModel {
    Sbm(SbmSpec),
    Rcm {
        rcm: Rcm,
        origin: Vec<f64>,
        /// Number of non-origin vertices.
        n: usize,
        edge_mode: EdgeMode,
    },
}

/// A sampled graph with its community labels (SBM only).
#[derive(Clone, Debug, PartialEq)]
pub struct SampledGraph {
    pub graph: Graph,
    pub labels: Option<Vec<usize>>,
}

impl GraphModel {
    pub fn n_other(&self) -> usize {
        match self {
            GraphModel::Sbm(spec) => spec.n().saturating_sub(1),
            GraphModel::Rcm { n, .. } => *n,
        }
    }

    /// Same law with `n` non-origin vertices. SBM specs cannot be resized.
    pub fn with_n(&self, n: usize) -> Result<GraphModel> {
        match self {
            GraphModel::Sbm(spec) if spec.n() == n + 1 => Ok(self.clone()),
            GraphModel::Sbm(_) => Err(Error::invalid("an SBM spec fixes its own size")),
            GraphModel::Rcm { rcm, origin, edge_mode, .. } => {
                Ok(GraphModel::Rcm { rcm: rcm.clone(), origin: origin.clone(), n, edge_mode: *edge_mode })
            }
        }
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Result<SampledGraph> {
        match self {
            GraphModel::Sbm(spec) => {
                let (graph, labels) = sample_sbm_graph_labeled(spec, rng)?;
                Ok(SampledGraph { graph, labels: Some(labels) })
            }
            GraphModel::Rcm { rcm, origin, n, edge_mode } => {
                Ok(SampledGraph { graph: rcm.sample_graph(*n, origin, *edge_mode, rng)?, labels: None })
            }
        }
    }

    /// Truth at the origin. RCM truths use the cheapest exact method
    /// available, otherwise Monte Carlo with `mc_samples` draws.
    pub fn origin_truth(&self, mc_samples: usize, stream: SeedStream) -> Result<TruthValue> {
        match self {
            GraphModel::Sbm(spec) => sbm_truth(spec),
            GraphModel::Rcm { rcm, origin, .. } => rcm.truth(origin, rcm.best_truth_method(mc_samples), stream),
        }
    }
}

impl Rcm {
    /// Exact method when one exists for this model, else Monte Carlo.
    pub fn best_truth_method(&self, mc_samples: usize) -> TruthRequest {
        match (&self.features, &self.connection) {
            (FeatureDistribution::Empirical(_), _) => TruthRequest::EmpiricalExact,
            (FeatureDistribution::Beta { .. }, ConnectionFunction::HardThreshold { .. }) => {
                TruthRequest::NumericIntegration
            }
            _ => TruthRequest::MonteCarlo { samples: mc_samples },
        }
    }
}
