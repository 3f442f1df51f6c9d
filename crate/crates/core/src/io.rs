//! Run configuration, city data ingestion and SVG charts.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::io::Read;
use std::path::{Path, PathBuf};

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::estimator::WeightScheme;
use crate::graph::Graph;
use crate::mccv::SplitPlan;
use crate::model::{
    sample_features, BoxBounds, ConnectionFunction, EdgeMode, EmpiricalPoints, FeatureDistribution, Features,
    GaussianMixture, GraphModel, Metric, Rcm, SbmSpec,
};

/// Top-level configuration file. Every section is optional; unknown keys
/// are rejected.
///
/// ```toml
/// seed = 1
///
/// [model]
/// kind = "sbm"
/// sizes = [10, 25, 15]
/// intra = [0.3, 0.5, 0.3]
/// inter = 0.01
/// origin_community = 1
///
/// [[schemes]]
/// kind = "geometric"
/// gamma = 0.1
/// ```
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub seed: Option<u64>,
    pub model: Option<ModelConfig>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub schemes: Vec<WeightScheme>,
    pub mccv: Option<MccvConfig>,
    pub study: Option<StudyConfig>,
    pub truth: Option<TruthConfig>,
    pub clt: Option<CltConfig>,
    pub bound: Option<BoundConfig>,
    pub wireless: Option<WirelessConfig>,
    pub graph: Option<GraphInput>,
    pub output: Option<OutputConfig>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum ModelConfig {
    Sbm {
        sizes: Vec<usize>,
        intra: Vec<f64>,
        inter: f64,
        origin_community: usize,
    },
    /// Sizes and probabilities grow with `n`; see [`SbmSpec::growing`].
    GrowingSbm {
        n: Option<usize>,
    },
    Rcm {
        features: FeatureConfig,
        connection: ConnectionFunction,
        /// Origin feature vector. Alternatively `origin_from_data` names a
        /// city of a `cities` feature set.
        origin: Option<Vec<f64>>,
        origin_from_data: Option<String>,
        /// Non-origin vertex count.
        n: Option<usize>,
        #[serde(default)]
        edge_mode: EdgeMode,
        #[serde(default)]
        metric: Metric,
    },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum FeatureConfig {
    Beta {
        a: f64,
        b: f64,
    },
    UniformCube {
        dim: usize,
    },
    GaussianMixture {
        components: Vec<MixtureComponentConfig>,
        truncation: Option<BoxBounds>,
    },
    /// City CSV; points are `(latitude, longitude)` weighted by population.
    Cities {
        path: PathBuf,
    },
    /// CSV of coordinates with a header row, one column per dimension;
    /// equal weights.
    Points {
        path: PathBuf,
    },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MixtureComponentConfig {
    pub weight: f64,
    pub mean: Vec<f64>,
    pub cov: Vec<Vec<f64>>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MccvConfig {
    pub replications: usize,
    pub fraction: Option<f64>,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StudyConfig {
    #[serde(default)]
    pub n_grid: Vec<usize>,
    pub replicates: Option<usize>,
    pub truth_samples: Option<usize>,
    /// Split counts for the stability study.
    pub m_grid: Option<Vec<usize>>,
    pub target_q: Option<f64>,
    pub verify_replicates: Option<usize>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum TruthMethodConfig {
    /// Exact when available, otherwise Monte Carlo.
    Auto,
    MonteCarlo,
    NumericIntegration,
    EmpiricalExact,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TruthConfig {
    pub method: TruthMethodConfig,
    pub samples: Option<usize>,
    /// Evaluation point; defaults to the model's origin.
    pub x: Option<Vec<f64>>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CltConfig {
    pub n: Option<usize>,
    /// Binomial probability; defaults to the model truth.
    pub p: Option<f64>,
    pub replicates: usize,
    #[serde(default)]
    pub full_graph: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BoundConfig {
    pub k0: usize,
    pub k_max: usize,
    pub replicates: usize,
    pub sigma_samples: Option<usize>,
    pub truth_samples: Option<usize>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WirelessConfig {
    pub p: Option<f64>,
    pub q: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GraphInput {
    pub path: PathBuf,
    #[serde(default)]
    pub directed: bool,
    /// Total vertex count including isolated ones missing from the list.
    pub vertices: Option<usize>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputConfig {
    pub dir: PathBuf,
    #[serde(default)]
    pub svg: bool,
}

impl RunConfig {
    pub fn parse(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Config(e.to_string()))
    }

    /// Reads and parses `path`. Relative data paths inside are resolved
    /// against the file's directory.
    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path)?;
        let mut cfg = Self::parse(&text)?;
        if let Some(base) = path.parent() {
            cfg.resolve_paths(base);
        }
        Ok(cfg)
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Config(e.to_string()))
    }

    fn resolve_paths(&mut self, base: &Path) {
        let fix = |p: &mut PathBuf| {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        };
        if let Some(ModelConfig::Rcm {
            features: FeatureConfig::Cities { path } | FeatureConfig::Points { path },
            ..
        }) = &mut self.model
        {
            fix(path);
        }
        if let Some(g) = &mut self.graph {
            fix(&mut g.path);
        }
    }

    pub fn schemes_or_default(&self) -> Vec<WeightScheme> {
        if self.schemes.is_empty() {
            WeightScheme::standard(0.1)
        } else {
            self.schemes.clone()
        }
    }

    pub fn split_plan(&self, seed: u64) -> SplitPlan {
        match &self.mccv {
            Some(m) => {
                let plan = SplitPlan::new(m.replications, seed);
                match m.fraction {
                    Some(f) => plan.with_fraction(f),
                    None => plan,
                }
            }
            None => SplitPlan::new(100, seed),
        }
    }
}

impl FeatureConfig {
    pub fn build(&self) -> Result<FeatureDistribution> {
        match self {
            FeatureConfig::Beta { a, b } => FeatureDistribution::beta(*a, *b),
            FeatureConfig::UniformCube { dim } => FeatureDistribution::uniform_cube(*dim),
            FeatureConfig::GaussianMixture { components, truncation } => {
                Ok(FeatureDistribution::GaussianMixture(GaussianMixture::new(
                    components.iter().map(|c| (c.weight, c.mean.clone(), c.cov.clone())).collect(),
                    truncation.clone(),
                )?))
            }
            FeatureConfig::Cities { path } => city_distribution(&load_cities(path)?),
            FeatureConfig::Points { path } => {
                let pts = load_points(path)?;
                Ok(FeatureDistribution::Empirical(EmpiricalPoints::uniform(pts)?))
            }
        }
    }
}

impl ModelConfig {
    /// The graph law. `n_override` replaces the configured size (RCM and
    /// growing SBM only).
    pub fn build(&self, n_override: Option<usize>) -> Result<GraphModel> {
        match self {
            ModelConfig::Sbm { sizes, intra, inter, origin_community } => {
                Ok(GraphModel::Sbm(SbmSpec::new(sizes.clone(), intra.clone(), *inter, *origin_community)?))
            }
            ModelConfig::GrowingSbm { n } => {
                let n = n_override.or(*n).ok_or_else(|| Error::Config("growing-sbm needs n".into()))?;
                Ok(GraphModel::Sbm(SbmSpec::growing(n)?))
            }
            ModelConfig::Rcm { features, connection, origin, origin_from_data, n, edge_mode, metric } => {
                connection.validate()?;
                let origin = match (origin, origin_from_data) {
                    (Some(x), None) => x.clone(),
                    (None, Some(name)) => match features {
                        FeatureConfig::Cities { path } => city_coordinates(&load_cities(path)?, name)?,
                        _ => return Err(Error::Config("origin_from_data needs a cities feature set".into())),
                    },
                    (Some(_), Some(_)) => {
                        return Err(Error::Config("give origin or origin_from_data, not both".into()))
                    }
                    (None, None) => return Err(Error::Config("rcm model needs an origin".into())),
                };
                let n = n_override.or(*n).ok_or_else(|| Error::Config("rcm model needs n".into()))?;
                let rcm = Rcm::new(features.build()?, *connection).with_metric(*metric);
                if origin.len() != rcm.features.dim() {
                    return Err(Error::Dimension { expected: rcm.features.dim(), got: origin.len() });
                }
                Ok(GraphModel::Rcm { rcm, origin, n, edge_mode: *edge_mode })
            }
        }
    }
}

/// One row of a city file.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CityRecord {
    pub name: String,
    pub country: String,
    pub population: f64,
    pub latitude: f64,
    pub longitude: f64,
}

impl CityRecord {
    fn check(&self) -> std::result::Result<(), String> {
        if !(self.population >= 0.0 && self.population.is_finite()) {
            return Err(format!("population must be non-negative, got {}", self.population));
        }
        if !(-90.0..=90.0).contains(&self.latitude) {
            return Err(format!("latitude {} outside [-90, 90]", self.latitude));
        }
        if !(-180.0..=180.0).contains(&self.longitude) {
            return Err(format!("longitude {} outside [-180, 180]", self.longitude));
        }
        Ok(())
    }
}

/// Parses a city CSV with header `name,country,population,latitude,longitude`.
pub fn read_cities<R: Read>(r: R, source: &str) -> Result<Vec<CityRecord>> {
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(r);
    let header: Vec<String> = rdr.headers()?.iter().map(str::to_owned).collect();
    if header != ["name", "country", "population", "latitude", "longitude"] {
        return Err(Error::Parse {
            path: source.into(),
            line: 1,
            msg: format!("expected header name,country,population,latitude,longitude, got {}", header.join(",")),
        });
    }
    let mut out = Vec::new();
    for rec in rdr.deserialize::<CityRecord>() {
        let rec = rec.map_err(|e| Error::Parse {
            path: source.into(),
            line: e.position().map(|p| p.line()).unwrap_or(0),
            msg: e.to_string(),
        })?;
        rec.check().map_err(|msg| Error::Parse { path: source.into(), line: out.len() as u64 + 2, msg })?;
        out.push(rec);
    }
    Ok(out)
}

pub fn load_cities(path: &Path) -> Result<Vec<CityRecord>> {
    read_cities(fs::File::open(path)?, &path.display().to_string())
}

/// Empirical distribution over `(latitude, longitude)` weighted by
/// population, sampled with replacement.
pub fn city_distribution(cities: &[CityRecord]) -> Result<FeatureDistribution> {
    let rows: Vec<Vec<f64>> = cities.iter().map(|c| vec![c.latitude, c.longitude]).collect();
    let weights: Vec<f64> = cities.iter().map(|c| c.population).collect();
    if !(weights.iter().sum::<f64>() > 0.0) {
        return Err(Error::invalid("total population is zero"));
    }
    let pts = Features::from_rows(2, &rows)?;
    Ok(FeatureDistribution::Empirical(EmpiricalPoints::new(pts, weights, true)?))
}

/// Coordinates of the first city called `name`.
pub fn city_coordinates(cities: &[CityRecord], name: &str) -> Result<Vec<f64>> {
    cities
        .iter()
        .find(|c| c.name == name)
        .map(|c| vec![c.latitude, c.longitude])
        .ok_or_else(|| Error::invalid(format!("no city named {name:?}")))
}

/// The population-weighted distribution of `path` and `n` draws from it.
pub fn load_city_features<R: Rng + ?Sized>(
    path: &Path,
    n: usize,
    rng: &mut R,
) -> Result<(FeatureDistribution, Features)> {
    let dist = city_distribution(&load_cities(path)?)?;
    let feats = sample_features(&dist, n, rng)?;
    Ok((dist, feats))
}

/// CSV of numeric coordinates with a header row.
pub fn load_points(path: &Path) -> Result<Features> {
    let source = path.display().to_string();
    let mut rdr = csv::Reader::from_reader(fs::File::open(path)?);
    let dim = rdr.headers()?.len();
    let mut feats = Features::new(dim);
    for (i, rec) in rdr.records().enumerate() {
        let rec = rec?;
        let row: std::result::Result<Vec<f64>, _> = rec.iter().map(|s| s.trim().parse::<f64>()).collect();
        let row = row.map_err(|e| Error::Parse { path: source.clone(), line: i as u64 + 2, msg: e.to_string() })?;
        feats.push(&row).map_err(|e| Error::Parse { path: source.clone(), line: i as u64 + 2, msg: e.to_string() })?;
    }
    Ok(feats)
}

pub fn load_graph(input: &GraphInput) -> Result<Graph> {
    Graph::read_edge_csv(fs::File::open(&input.path)?, input.directed, input.vertices.unwrap_or(1))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ChartKind {
    Line,
    Box,
    Bar,
}

/// Which CSV columns to plot. Line charts group rows into series by
/// `group` and plot `(x, y)`; box and bar charts treat `x` as a category.
/// Rows must match every `(column, value)` pair in `filter`.
#[derive(Clone, Debug, PartialEq)]
pub struct ChartSpec {
    pub kind: ChartKind,
    pub title: String,
    pub x: String,
    pub y: String,
    pub group: Option<String>,
    pub filter: Vec<(String, String)>,
    pub width: f64,
    pub height: f64,
}

impl ChartSpec {
    pub fn new(kind: ChartKind, x: &str, y: &str) -> Self {
        ChartSpec {
            kind,
            title: String::new(),
            x: x.into(),
            y: y.into(),
            group: None,
            filter: Vec::new(),
            width: 640.0,
            height: 400.0,
        }
    }
}

pub const MARGIN_LEFT: f64 = 60.0;
pub const MARGIN_RIGHT: f64 = 20.0;
pub const MARGIN_TOP: f64 = 30.0;
pub const MARGIN_BOTTOM: f64 = 50.0;

const PALETTE: [&str; 6] = ["#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b"];

struct Axis {
    lo: f64,
    hi: f64,
    a: f64,
    b: f64,
}

impl Axis {
    /// Maps `[lo, hi]` onto `[a, b]`; a degenerate range is widened by 0.5
    /// either side.
    fn new(lo: f64, hi: f64, a: f64, b: f64) -> Self {
        let (lo, hi) = if hi > lo { (lo, hi) } else { (lo - 0.5, lo + 0.5) };
        Axis { lo, hi, a, b }
    }

    fn map(&self, v: f64) -> f64 {
        self.a + (v - self.lo) / (self.hi - self.lo) * (self.b - self.a)
    }
}

fn read_rows<R: Read>(r: R, spec: &ChartSpec) -> Result<Vec<BTreeMap<String, String>>> {
    let mut rdr = csv::Reader::from_reader(r);
    let header: Vec<String> = rdr.headers()?.iter().map(str::to_owned).collect();
    let needed = [Some(&spec.x), Some(&spec.y), spec.group.as_ref()];
    for col in needed.into_iter().flatten().chain(spec.filter.iter().map(|(c, _)| c)) {
        if !header.contains(col) {
            return Err(Error::invalid(format!("CSV has no column {col:?}")));
        }
    }
    let mut rows = Vec::new();
    for rec in rdr.records() {
        let rec = rec?;
        let row: BTreeMap<String, String> = header.iter().cloned().zip(rec.iter().map(str::to_owned)).collect();
        if spec.filter.iter().all(|(c, v)| row[c] == *v) {
            rows.push(row);
        }
    }
    Ok(rows)
}

fn num(row: &BTreeMap<String, String>, col: &str, line: usize) -> Result<f64> {
    row[col].trim().parse().map_err(|_| Error::Parse {
        path: "chart data".into(),
        line: line as u64,
        msg: format!("{col} = {:?} is not a number", row[col]),
    })
}

/// Renders a CSV as a line, box or bar chart. Output depends only on the
/// input; empty data gives a frame with axes only.
pub fn render_svg<R: Read>(csv_data: R, spec: &ChartSpec) -> Result<String> {
    let rows = read_rows(csv_data, spec)?;
    let (w, h) = (spec.width, spec.height);
    let (x0, x1, y0, y1) = (MARGIN_LEFT, w - MARGIN_RIGHT, h - MARGIN_BOTTOM, MARGIN_TOP);
    let mut body = String::new();

    let (xr, yr): (Axis, Axis);
    match spec.kind {
        ChartKind::Line => {
            let mut series: BTreeMap<String, Vec<(f64, f64)>> = BTreeMap::new();
            for (i, row) in rows.iter().enumerate() {
                let key = spec.group.as_ref().map(|g| row[g].clone()).unwrap_or_default();
                series.entry(key).or_default().push((num(row, &spec.x, i + 2)?, num(row, &spec.y, i + 2)?));
            }
            let all: Vec<(f64, f64)> = series.values().flatten().copied().collect();
            xr = span(all.iter().map(|p| p.0), x0, x1);
            yr = span(all.iter().map(|p| p.1), y0, y1);
            for (si, (name, mut pts)) in series.into_iter().enumerate() {
                pts.sort_by(|a, b| a.0.total_cmp(&b.0));
                let coords: Vec<String> =
                    pts.iter().map(|(x, y)| format!("{:.2},{:.2}", xr.map(*x), yr.map(*y))).collect();
                let color = PALETTE[si % PALETTE.len()];
                let _ = writeln!(
                    body,
                    r#"<polyline fill="none" stroke="{color}" stroke-width="1.5" points="{}"/>"#,
                    coords.join(" ")
                );
                if !name.is_empty() {
                    let _ = writeln!(
                        body,
                        r#"<text x="{:.2}" y="{:.2}" font-size="11" fill="{color}">{}</text>"#,
                        x1 - 120.0,
                        y1 + 14.0 * (si + 1) as f64,
                        escape(&name)
                    );
                }
            }
        }
        ChartKind::Box | ChartKind::Bar => {
            let mut cats: BTreeMap<String, Vec<f64>> = BTreeMap::new();
            for (i, row) in rows.iter().enumerate() {
                cats.entry(row[&spec.x].clone()).or_default().push(num(row, &spec.y, i + 2)?);
            }
            let k = cats.len().max(1) as f64;
            xr = Axis::new(0.0, k, x0, x1);
            let values = cats.values().flatten().copied();
            yr = if spec.kind == ChartKind::Bar {
                let means = cats.values().map(|v| v.iter().sum::<f64>() / v.len() as f64);
                span(means.chain(std::iter::once(0.0)), y0, y1)
            } else {
                span(values, y0, y1)
            };
            let slot = (x1 - x0) / k;
            for (ci, (name, mut vals)) in cats.into_iter().enumerate() {
                let cx = xr.map(ci as f64 + 0.5);
                let half = slot * 0.3;
                vals.sort_by(f64::total_cmp);
                if spec.kind == ChartKind::Bar {
                    let mean = vals.iter().sum::<f64>() / vals.len() as f64;
                    let (top, base) = (yr.map(mean), yr.map(0.0));
                    let _ = writeln!(
                        body,
                        r#"<rect x="{:.2}" y="{:.2}" width="{:.2}" height="{:.2}" fill="{}"/>"#,
                        cx - half,
                        top.min(base),
                        2.0 * half,
                        (top - base).abs(),
                        PALETTE[0]
                    );
                } else {
                    let q = |p: f64| {
                        let hh = (vals.len() - 1) as f64 * p;
                        let (lo, hi) = (hh.floor() as usize, hh.ceil() as usize);
                        vals[lo] + (hh - lo as f64) * (vals[hi] - vals[lo])
                    };
                    let (lo, q1, med, q3, hi) = (vals[0], q(0.25), q(0.5), q(0.75), vals[vals.len() - 1]);
                    let _ = writeln!(
                        body,
                        r#"<line x1="{cx:.2}" y1="{:.2}" x2="{cx:.2}" y2="{:.2}" stroke="black"/>"#,
                        yr.map(lo),
                        yr.map(hi)
                    );
                    let _ = writeln!(
                        body,
                        r#"<rect x="{:.2}" y="{:.2}" width="{:.2}" height="{:.2}" fill="white" stroke="{}"/>"#,
                        cx - half,
                        yr.map(q3),
                        2.0 * half,
                        yr.map(q1) - yr.map(q3),
                        PALETTE[0]
                    );
                    let _ = writeln!(
                        body,
                        r#"<line x1="{:.2}" y1="{m:.2}" x2="{:.2}" y2="{m:.2}" stroke="black" stroke-width="2"/>"#,
                        cx - half,
                        cx + half,
                        m = yr.map(med)
                    );
                }
                let _ = writeln!(
                    body,
                    r#"<text x="{cx:.2}" y="{:.2}" font-size="11" text-anchor="middle">{}</text>"#,
                    y0 + 15.0,
                    escape(&name)
                );
            }
        }
    }

    let mut svg = String::new();
    let _ = writeln!(svg, r#"<svg xmlns="http://www.w3.org/2000/svg" width="{w}" height="{h}" viewBox="0 0 {w} {h}">"#);
    let _ = writeln!(svg, r#"<rect width="{w}" height="{h}" fill="white"/>"#);
    let _ = writeln!(svg, r#"<line x1="{x0:.2}" y1="{y0:.2}" x2="{x1:.2}" y2="{y0:.2}" stroke="black"/>"#);
    let _ = writeln!(svg, r#"<line x1="{x0:.2}" y1="{y0:.2}" x2="{x0:.2}" y2="{y1:.2}" stroke="black"/>"#);
    if !rows.is_empty() {
        for (v, label_y) in [(yr.lo, y0), (yr.hi, y1)] {
            let _ = writeln!(
                svg,
                r#"<text x="{:.2}" y="{:.2}" font-size="10" text-anchor="end">{}</text>"#,
                x0 - 4.0,
                label_y + 3.0,
                tick(v)
            );
        }
        if spec.kind == ChartKind::Line {
            for (v, label_x) in [(xr.lo, x0), (xr.hi, x1)] {
                let _ = writeln!(
                    svg,
                    r#"<text x="{label_x:.2}" y="{:.2}" font-size="10" text-anchor="middle">{}</text>"#,
                    y0 + 15.0,
                    tick(v)
                );
            }
        }
    }
    let _ = writeln!(
        svg,
        r#"<text x="{:.2}" y="{:.2}" font-size="12" text-anchor="middle">{}</text>"#,
        (x0 + x1) / 2.0,
        h - 10.0,
        escape(&spec.x)
    );
    let _ = writeln!(
        svg,
        r#"<text x="14" y="{:.2}" font-size="12" text-anchor="middle" transform="rotate(-90 14 {:.2})">{}</text>"#,
        (y0 + y1) / 2.0,
        (y0 + y1) / 2.0,
        escape(&spec.y)
    );
    if !spec.title.is_empty() {
        let _ = writeln!(
            svg,
            r#"<text x="{:.2}" y="18" font-size="14" text-anchor="middle">{}</text>"#,
            w / 2.0,
            escape(&spec.title)
        );
    }
    svg.push_str(&body);
    svg.push_str("</svg>\n");
    Ok(svg)
}

fn span(vals: impl Iterator<Item = f64>, a: f64, b: f64) -> Axis {
    let (lo, hi) = vals.fold((f64::INFINITY, f64::NEG_INFINITY), |(l, h), v| (l.min(v), h.max(v)));
    if lo.is_finite() {
        Axis::new(lo, hi, a, b)
    } else {
        Axis::new(0.0, 1.0, a, b)
    }
}

fn tick(v: f64) -> String {
    if v != 0.0 && (v.abs() < 1e-3 || v.abs() >= 1e5) {
        format!("{v:.2e}")
    } else {
        format!("{}", (v * 1e4).round() / 1e4)
    }
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;").replace('"', "&quot;")
}

/// Writes `svg` next to `csv_path` with the extension swapped.
pub fn render_svg_file(csv_path: &Path, spec: &ChartSpec) -> Result<PathBuf> {
    let svg = render_svg(fs::File::open(csv_path)?, spec)?;
    let out = csv_path.with_extension("svg");
    fs::write(&out, svg)?;
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::SeedStream;

    const SBM_CFG: &str = r#"
seed = 3

[model]
kind = "sbm"
sizes = [10, 25, 15]
intra = [0.3, 0.5, 0.3]
inter = 0.01
origin_community = 1

[[schemes]]
kind = "annulus-size"

[[schemes]]
kind = "geometric"
gamma = 0.1

[mccv]
replications = 50
fraction = 0.5

[study]
n_grid = [50]
replicates = 10
"#;

    #[test]
    fn config_round_trip() {
        let cfg = RunConfig::parse(SBM_CFG).unwrap();
        assert_eq!(cfg.seed, Some(3));
        assert_eq!(cfg.schemes.len(), 2);
        let again = RunConfig::parse(&cfg.to_toml().unwrap()).unwrap();
        assert_eq!(cfg, again);
        let model = cfg.model.unwrap().build(None).unwrap();
        assert_eq!(model.origin_truth(0, SeedStream::new(0)).unwrap().value, 0.062);
    }

    #[test]
    fn rcm_config_round_trip() {
        let text = r#"
[model]
kind = "rcm"
origin = [3.0, 3.0]
n = 100
[model.features]
kind = "gaussian-mixture"
truncation = { lower = [0.0, 0.0], upper = [10.0, 10.0] }
components = [
  { weight = 0.4, mean = [9.0, 9.0], cov = [[4.0, 1.2], [1.2, 4.0]] },
  { weight = 0.6, mean = [8.0, 3.0], cov = [[4.0, 0.0], [0.0, 4.0]] },
]
[model.connection]
kind = "hard-threshold"
alpha = 2.0
"#;
        let cfg = RunConfig::parse(text).unwrap();
        assert_eq!(RunConfig::parse(&cfg.to_toml().unwrap()).unwrap(), cfg);
        let m = cfg.model.unwrap().build(Some(7)).unwrap();
        assert_eq!(m.n_other(), 7);
    }

    #[test]
    fn unknown_keys_rejected() {
        assert!(RunConfig::parse("sed = 1").is_err());
        assert!(RunConfig::parse("[mccv]\nreplications = 3\nfractoin = 0.5").is_err());
        assert!(RunConfig::parse(
            "[model]\nkind = \"sbm\"\nsizes=[1]\nintra=[0.1]\ninter=0.0\norigin_community=1\nextra=2"
        )
        .is_err());
        assert!(matches!(RunConfig::parse("seed = \"x\""), Err(Error::Config(_))));
    }

    fn city_csv(rows: &[(&str, f64, f64, f64)]) -> String {
        let mut s = String::from("name,country,population,latitude,longitude\n");
        for (name, pop, lat, lon) in rows {
            s.push_str(&format!("\"{name}\",es,{pop},{lat},{lon}\n"));
        }
        s
    }

    #[test]
    fn single_city_and_zero_weights() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("one.csv");
        fs::write(&p, city_csv(&[("Madrid", 3.0e6, 40.4, -3.7)])).unwrap();
        let (_, f) = load_city_features(&p, 3, &mut SeedStream::new(1).rng()).unwrap();
        assert_eq!(f.len(), 3);
        assert!(f.iter().all(|x| x == [40.4, -3.7]));

        fs::write(&p, city_csv(&[("A", 0.0, 1.0, 1.0), ("B", 10.0, 2.0, 2.0)])).unwrap();
        let (_, f) = load_city_features(&p, 200, &mut SeedStream::new(2).rng()).unwrap();
        assert!(f.iter().all(|x| x == [2.0, 2.0]));

        fs::write(&p, city_csv(&[("A", 0.0, 1.0, 1.0)])).unwrap();
        assert!(load_city_features(&p, 1, &mut SeedStream::new(2).rng()).is_err());
    }

    #[test]
    fn malformed_rows_report_lines() {
        let text = "name,country,population,latitude,longitude\nA,x,1,0,0\nB,x,oops,0,0\n";
        match read_cities(text.as_bytes(), "c.csv") {
            Err(Error::Parse { line, .. }) => assert_eq!(line, 3),
            other => panic!("{other:?}"),
        }
        let text = "name,country,population,latitude,longitude\nA,x,1,0,0\nB,x,1,95,0\n";
        match read_cities(text.as_bytes(), "c.csv") {
            Err(Error::Parse { line, .. }) => assert_eq!(line, 3),
            other => panic!("{other:?}"),
        }
        assert!(read_cities("a,b\n1,2\n".as_bytes(), "c.csv").is_err());
        let quoted = "name,country,population,latitude,longitude\n\"Alcalá, de\",es,5,40,-3\n";
        assert_eq!(read_cities(quoted.as_bytes(), "q").unwrap()[0].name, "Alcalá, de");
    }

    #[test]
    fn city_draw_frequencies() {
        let cities: Vec<CityRecord> = [1.0, 2.0, 7.0]
            .iter()
            .enumerate()
            .map(|(i, &p)| CityRecord {
                name: i.to_string(),
                country: "x".into(),
                population: p,
                latitude: i as f64,
                longitude: 0.0,
            })
            .collect();
        let dist = city_distribution(&cities).unwrap();
        let n = 100_000;
        let f = sample_features(&dist, n, &mut SeedStream::new(9).rng()).unwrap();
        for (i, share) in [0.1, 0.2, 0.7].iter().enumerate() {
            let hits = f.iter().filter(|x| x[0] == i as f64).count() as f64 / n as f64;
            let se = (share * (1.0 - share) / n as f64).sqrt();
            assert!((hits - share).abs() < 3.0 * se, "{i}: {hits}");
        }
    }

    #[test]
    fn origin_from_data() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("c.csv");
        fs::write(&p, city_csv(&[("Madrid", 3.0, 40.4, -3.7), ("Paris", 2.0, 48.9, 2.35)])).unwrap();
        let m = ModelConfig::Rcm {
            features: FeatureConfig::Cities { path: p },
            connection: ConnectionFunction::exponential_decay(2.0 / 3.0).unwrap(),
            origin: None,
            origin_from_data: Some("Paris".into()),
            n: Some(4),
            edge_mode: EdgeMode::Undirected,
            metric: Metric::Euclidean,
        };
        let GraphModel::Rcm { origin, .. } = m.build(None).unwrap() else { panic!() };
        assert_eq!(origin, vec![48.9, 2.35]);
    }

    fn line_spec() -> ChartSpec {
        ChartSpec::new(ChartKind::Line, "m", "risk")
    }

    #[test]
    fn empty_svg_has_axes() {
        let svg = render_svg("m,risk\n".as_bytes(), &line_spec()).unwrap();
        assert!(svg.starts_with("<svg") && svg.ends_with("</svg>\n"));
        assert_eq!(svg.matches("<line").count(), 2);
        assert!(!svg.contains("polyline"));
    }

    #[test]
    fn polyline_coordinates() {
        let svg = render_svg("m,risk\n0,1\n1,3\n2,2\n".as_bytes(), &line_spec()).unwrap();
        // x: 0..2 onto 60..620, y: 1..3 onto 350..30
        assert!(svg.contains(r#"points="60.00,350.00 340.00,30.00 620.00,190.00""#), "{svg}");
        let again = render_svg("m,risk\n0,1\n1,3\n2,2\n".as_bytes(), &line_spec()).unwrap();
        assert_eq!(svg, again);
    }

    #[test]
    fn box_and_bar() {
        let data = "scheme,v\na,1\na,2\na,3\nb,5\n";
        let spec = ChartSpec::new(ChartKind::Box, "scheme", "v");
        let svg = render_svg(data.as_bytes(), &spec).unwrap();
        assert_eq!(svg.matches("fill=\"white\" stroke").count(), 2);
        let spec = ChartSpec { kind: ChartKind::Bar, ..spec };
        let svg = render_svg(data.as_bytes(), &spec).unwrap();
        assert_eq!(svg.matches("<rect").count(), 3);
        assert!(render_svg("scheme,v\na,x\n".as_bytes(), &spec).is_err());
        assert!(render_svg("a,b\n".as_bytes(), &spec).is_err());
    }
}
