//! Command line front end. [`cli_dispatch`] returns the process exit status:
//! 0 on success, 1 for usage and validation errors, 2 for runtime errors.

use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::analysis::{bound_report, clt_check, wireless_min_n, BoundSettings, CltSource};
use crate::error::{Error, Result};
use crate::estimator::{estimate_trace, WeightScheme};
use crate::experiments::{
    default_stability_grid, default_wireless_grid, design_cases, run_design_benchmark, run_mccv_stability,
    run_mccv_study, run_mse_study, run_wireless_study, wireless_model, ExperimentConfig, ExperimentResult, ModelFamily,
};
use crate::graph::Graph;
use crate::io::{
    load_graph, render_svg_file, ChartKind, ChartSpec, GraphInput, ModelConfig, RunConfig, TruthMethodConfig,
};
use crate::mccv::estimate_with_mccv;
use crate::model::{GraphModel, SbmSpec, TruthRequest};
use crate::rng::{with_thread_pool, SeedStream};

#[derive(Parser, Debug)]
#[command(name = "localdeg", version, about = "Local connection probability estimation in random graphs")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug, Clone, Default)]
struct Common {
    /// TOML run configuration.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Master seed; overrides the configuration.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Output directory for result files.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Edge-list CSV to use instead of sampling a graph.
    #[arg(long, global = true)]
    graph: Option<PathBuf>,
    /// Vertex count of `--graph`, counting isolated vertices.
    #[arg(long, global = true)]
    vertices: Option<usize>,
    /// Read `--graph` as directed.
    #[arg(long, global = true)]
    directed: bool,
    /// Place the origin at the coordinates of this city (cities feature sets).
    #[arg(long, global = true, conflicts_with = "origin_coords")]
    origin_from_data: Option<String>,
    /// Place the origin at these comma-separated coordinates.
    #[arg(long, global = true, value_delimiter = ',', allow_hyphen_values = true)]
    origin_coords: Option<Vec<f64>>,
    /// Non-origin vertex count (RCM and growing SBM).
    #[arg(long, global = true)]
    n: Option<usize>,
    /// Weight scheme label to report, e.g. `constant-one`; default: first.
    #[arg(long, global = true)]
    scheme: Option<String>,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Sample a graph and write its edge list.
    Sample(WithCommon),
    /// Estimate trace of a graph for one weight scheme.
    Estimate(WithCommon),
    /// MCCV risk curves and the selected neighbourhood sizes.
    Mccv(WithCommon),
    /// True local connection probability at the origin.
    Truth(WithCommon),
    /// Replicated simulation studies.
    Study {
        #[arg(value_enum)]
        kind: StudyKind,
        #[command(flatten)]
        common: Common,
    },
    /// KS distance of the standardised empirical estimator to N(0, 1).
    Clt {
        #[arg(long)]
        p: Option<f64>,
        #[arg(long)]
        replicates: Option<usize>,
        #[arg(long)]
        full_graph: bool,
        #[command(flatten)]
        common: Common,
    },
    /// Smallest network size connecting the origin with probability q.
    WirelessSize {
        #[arg(long)]
        p: Option<f64>,
        #[arg(long)]
        q: Option<f64>,
        #[command(flatten)]
        common: Common,
    },
    /// Oracle bound next to the simulated MSE.
    Bound(WithCommon),
}

#[derive(Args, Debug)]
struct WithCommon {
    #[command(flatten)]
    common: Common,
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
enum StudyKind {
    Mse,
    Mccv,
    Stability,
    Wireless,
    Design,
}

/// Parses `argv` (program name first), runs the subcommand and returns the
/// exit status.
pub fn cli_dispatch<I, S>(argv: I) -> i32
where
    I: IntoIterator<Item = S>,
    S: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 1 } else { 0 };
        }
    };
    let stdout = io::stdout();
    let mut out = stdout.lock();
    match run(cli.command, &mut out) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            if e.is_validation() {
                1
            } else {
                2
            }
        }
    }
}

/// Resolved inputs shared by all subcommands.
struct Ctx {
    cfg: RunConfig,
    common: Common,
    seed: u64,
}

impl Ctx {
    fn new(common: Common) -> Result<Self> {
        let mut cfg = match &common.config {
            Some(p) => RunConfig::load(p)?,
            None => RunConfig::default(),
        };
        if let Some(path) = &common.graph {
            cfg.graph = Some(GraphInput { path: path.clone(), directed: common.directed, vertices: common.vertices });
        }
        if common.origin_coords.is_some() || common.origin_from_data.is_some() {
            match &mut cfg.model {
                Some(ModelConfig::Rcm { origin, origin_from_data, .. }) => {
                    *origin = common.origin_coords.clone();
                    *origin_from_data = common.origin_from_data.clone();
                }
                _ => return Err(Error::Config("origin options need an rcm model".into())),
            }
        }
        let seed = common.seed.or(cfg.seed).unwrap_or(0);
        Ok(Ctx { cfg, common, seed })
    }

    fn model_config(&self) -> ModelConfig {
        self.cfg.model.clone().unwrap_or_else(|| {
            let s = SbmSpec::running_example();
            ModelConfig::Sbm { sizes: s.sizes, intra: s.intra, inter: s.inter, origin_community: s.origin_community }
        })
    }

    fn model(&self) -> Result<GraphModel> {
        self.model_config().build(self.common.n)
    }

    fn stream(&self) -> SeedStream {
        SeedStream::new(self.seed)
    }

    /// The input graph, or one sampled from the model.
    fn graph(&self) -> Result<Graph> {
        match &self.cfg.graph {
            Some(input) => load_graph(input),
            None => self.model()?.sample(&mut self.stream().fork("sample").rng()).map(|s| s.graph),
        }
    }

    fn schemes(&self) -> Vec<WeightScheme> {
        self.cfg.schemes_or_default()
    }

    fn scheme(&self) -> Result<WeightScheme> {
        let all = self.schemes();
        match &self.common.scheme {
            None => Ok(all[0].clone()),
            Some(label) => all
                .into_iter()
                .find(|s| s.label() == *label)
                .ok_or_else(|| Error::invalid(format!("no configured scheme labelled {label:?}"))),
        }
    }

    fn out_dir(&self) -> Option<PathBuf> {
        self.common.out.clone().or_else(|| self.cfg.output.as_ref().map(|o| o.dir.clone()))
    }

    fn svg(&self) -> bool {
        self.cfg.output.as_ref().is_some_and(|o| o.svg)
    }

    fn truth_samples(&self) -> usize {
        self.cfg
            .study
            .as_ref()
            .and_then(|s| s.truth_samples)
            .or(self.cfg.truth.as_ref().and_then(|t| t.samples))
            .unwrap_or(1_000_000)
    }
}

fn run(command: Command, out: &mut dyn Write) -> Result<()> {
    match command {
        Command::Sample(c) => sample(&Ctx::new(c.common)?, out),
        Command::Estimate(c) => estimate(&Ctx::new(c.common)?, out),
        Command::Mccv(c) => mccv(&Ctx::new(c.common)?, out),
        Command::Truth(c) => truth(&Ctx::new(c.common)?, out),
        Command::Study { kind, common } => study(&Ctx::new(common)?, kind, out),
        Command::Clt { p, replicates, full_graph, common } => clt(&Ctx::new(common)?, p, replicates, full_graph, out),
        Command::WirelessSize { p, q, common } => {
            let ctx = Ctx::new(common)?;
            let w = ctx.cfg.wireless.clone();
            let p = p.or(w.as_ref().and_then(|w| w.p)).ok_or_else(|| Error::invalid("--p is required"))?;
            let q = q.or(w.as_ref().and_then(|w| w.q)).unwrap_or(0.9);
            writeln!(out, "{}", wireless_min_n(p, q)?)?;
            Ok(())
        }
        Command::Bound(c) => bound(&Ctx::new(c.common)?, out),
    }
}

fn sample(ctx: &Ctx, out: &mut dyn Write) -> Result<()> {
    let g = ctx.graph()?;
    eprintln!("vertices: {}, edges: {}", g.vertex_count(), g.edge_count());
    match ctx.out_dir() {
        Some(dir) => {
            fs::create_dir_all(&dir)?;
            g.write_edge_csv(fs::File::create(dir.join("graph.csv"))?)
        }
        None => g.write_edge_csv(out),
    }
}

fn estimate(ctx: &Ctx, out: &mut dyn Write) -> Result<()> {
    let g = ctx.graph()?;
    let trace = estimate_trace(&g, &ctx.scheme()?)?;
    match ctx.out_dir() {
        Some(dir) => {
            fs::create_dir_all(&dir)?;
            let path = dir.join("trace.csv");
            trace.write_csv(fs::File::create(&path)?)?;
            if ctx.svg() {
                render_svg_file(&path, &ChartSpec::new(ChartKind::Line, "m", "estimate"))?;
            }
            Ok(())
        }
        None => trace.write_csv(out),
    }
}

fn mccv(ctx: &Ctx, out: &mut dyn Write) -> Result<()> {
    let g = ctx.graph()?;
    let plan = ctx.cfg.split_plan(ctx.stream().fork("mccv").seed());
    let mut wtr = csv::Writer::from_writer(out);
    wtr.write_record(["scheme", "selected_m", "estimate", "min_risk", "M"])?;
    for scheme in ctx.schemes() {
        let est = with_thread_pool(|| estimate_with_mccv(&g, &scheme, &plan))?;
        wtr.write_record([
            scheme.label(),
            est.selected_m.to_string(),
            est.estimate.to_string(),
            est.curve.min_risk().to_string(),
            plan.replications.to_string(),
        ])?;
        if let Some(dir) = ctx.out_dir() {
            fs::create_dir_all(&dir)?;
            let path = dir.join(format!("risk_{}.csv", file_label(&scheme.label())));
            est.curve.write_csv(fs::File::create(&path)?)?;
            if ctx.svg() {
                render_svg_file(&path, &ChartSpec::new(ChartKind::Line, "m", "risk"))?;
            }
        }
    }
    wtr.flush()?;
    Ok(())
}

fn file_label(label: &str) -> String {
    label.chars().map(|c| if c.is_ascii_alphanumeric() || c == '-' { c } else { '_' }).collect()
}

fn truth(ctx: &Ctx, out: &mut dyn Write) -> Result<()> {
    let model = ctx.model()?;
    let tc = ctx.cfg.truth.clone();
    let samples = ctx.truth_samples();
    let value = match &model {
        GraphModel::Sbm(_) => model.origin_truth(samples, ctx.stream().fork("truth"))?,
        GraphModel::Rcm { rcm, origin, .. } => {
            let x = tc.as_ref().and_then(|t| t.x.clone()).unwrap_or_else(|| origin.clone());
            let method = match tc.map(|t| t.method).unwrap_or(TruthMethodConfig::Auto) {
                TruthMethodConfig::Auto => rcm.best_truth_method(samples),
                TruthMethodConfig::MonteCarlo => TruthRequest::MonteCarlo { samples },
                TruthMethodConfig::NumericIntegration => TruthRequest::NumericIntegration,
                TruthMethodConfig::EmpiricalExact => TruthRequest::EmpiricalExact,
            };
            with_thread_pool(|| rcm.truth(&x, method, ctx.stream().fork("truth")))?
        }
    };
    writeln!(out, "{}", value.value)?;
    if value.std_error() > 0.0 {
        eprintln!("standard error: {}", value.std_error());
    }
    Ok(())
}

fn clt(ctx: &Ctx, p: Option<f64>, replicates: Option<usize>, full_graph: bool, out: &mut dyn Write) -> Result<()> {
    let cc = ctx.cfg.clt.clone();
    let replicates = replicates.or(cc.as_ref().map(|c| c.replicates)).unwrap_or(10_000);
    let full_graph = full_graph || cc.as_ref().is_some_and(|c| c.full_graph);
    let p = p.or(cc.as_ref().and_then(|c| c.p));
    let n_cfg = ctx.common.n.or(cc.as_ref().and_then(|c| c.n));
    let stream = ctx.stream().fork("clt");
    let (source, n, p) = if full_graph {
        let model = ctx.model()?;
        let truth = model.origin_truth(ctx.truth_samples(), ctx.stream().fork("truth"))?.value;
        let n = model.n_other();
        (Some(model), n, truth)
    } else {
        let (n, p) = match (n_cfg, p) {
            (Some(n), Some(p)) => (n, p),
            _ => {
                let model = ctx.model()?;
                let p = match p {
                    Some(p) => p,
                    None => model.origin_truth(ctx.truth_samples(), ctx.stream().fork("truth"))?.value,
                };
                (n_cfg.unwrap_or(model.n_other()), p)
            }
        };
        (None, n, p)
    };
    let report = with_thread_pool(|| match &source {
        Some(model) => clt_check(&CltSource::Graphs { model, truth: p }, n, replicates, stream),
        None => clt_check(&CltSource::Binomial { p }, n, replicates, stream),
    })?;
    writeln!(out, "n,p,replicates,ks_distance")?;
    writeln!(out, "{n},{p},{replicates},{}", report.ks_distance)?;
    Ok(())
}

fn bound(ctx: &Ctx, out: &mut dyn Write) -> Result<()> {
    let bc = ctx.cfg.bound.clone();
    let model = ctx.model()?;
    let settings = match &bc {
        Some(b) => BoundSettings {
            k0: b.k0,
            k_max: b.k_max,
            replicates: b.replicates,
            sigma_samples: b.sigma_samples.unwrap_or(100_000),
            truth_samples: b.truth_samples.unwrap_or(100_000),
        },
        None => BoundSettings { k0: 0, k_max: 5, replicates: 1000, sigma_samples: 100_000, truth_samples: 100_000 },
    };
    let rows = with_thread_pool(|| bound_report(&model, &ctx.scheme()?, settings, ctx.stream().fork("bound")))?;
    writeln!(out, "k,bound_up_to_constant,mse,mse_se")?;
    for r in rows {
        writeln!(out, "{},{},{},{}", r.k, r.rhs, r.mse, r.mse_se)?;
    }
    Ok(())
}

fn experiment_config(ctx: &Ctx, kind: StudyKind) -> Result<ExperimentConfig> {
    let sc = ctx.cfg.study.clone().unwrap_or_default();
    let mut grid = sc.n_grid.clone();
    let family = match (&ctx.cfg.model, kind) {
        (None, StudyKind::Wireless) => {
            let (rcm, origin) = wireless_model()?;
            if grid.is_empty() {
                grid = default_wireless_grid();
            }
            ModelFamily::Rcm { rcm, origin, edge_mode: Default::default() }
        }
        (Some(ModelConfig::GrowingSbm { n }), _) => {
            if grid.is_empty() {
                grid.extend(*n);
            }
            ModelFamily::GrowingSbm
        }
        (Some(mc @ ModelConfig::Rcm { n, .. }), _) if !grid.is_empty() || n.is_none() => {
            let GraphModel::Rcm { rcm, origin, edge_mode, .. } = mc.build(Some(0))? else { unreachable!() };
            ModelFamily::Rcm { rcm, origin, edge_mode }
        }
        _ => ModelFamily::Fixed(ctx.model()?),
    };
    if kind == StudyKind::Design && grid.is_empty() {
        grid = vec![50, 75, 100];
    }
    let mut cfg = ExperimentConfig::new(family, ctx.schemes(), grid, sc.replicates.unwrap_or(100), ctx.seed);
    cfg.mccv = ctx.cfg.split_plan(0);
    cfg.truth_samples = ctx.truth_samples();
    if let Some(q) = sc.target_q {
        cfg.target_q = q;
    }
    if let Some(v) = sc.verify_replicates {
        cfg.verify_replicates = v;
    }
    Ok(cfg)
}

fn study(ctx: &Ctx, kind: StudyKind, out: &mut dyn Write) -> Result<()> {
    let dir = ctx.out_dir().unwrap_or_else(|| PathBuf::from("results"));
    if kind == StudyKind::Stability {
        let g = ctx.graph()?;
        let grid = ctx.cfg.study.as_ref().and_then(|s| s.m_grid.clone()).unwrap_or_else(default_stability_grid);
        let fraction = ctx.cfg.mccv.as_ref().and_then(|m| m.fraction).unwrap_or(0.5);
        let res = run_mccv_stability(&g, &ctx.scheme()?, &grid, fraction, ctx.stream().fork("stability").seed())?;
        fs::create_dir_all(&dir)?;
        let path = dir.join("stability.csv");
        res.write_csv(fs::File::create(&path)?)?;
        if ctx.svg() {
            let mut spec = ChartSpec::new(ChartKind::Line, "m", "risk");
            spec.group = Some("M".into());
            render_svg_file(&path, &spec)?;
        }
        writeln!(out, "M,selected_m")?;
        for (c, m) in res.curves.iter().zip(&res.minimizers) {
            writeln!(out, "{},{m}", c.replications)?;
        }
        writeln!(out, "# last change at grid index {}", res.last_change)?;
        return Ok(());
    }
    let cfg = experiment_config(ctx, kind)?;
    let res = match kind {
        StudyKind::Mse => run_mse_study(&cfg)?,
        StudyKind::Mccv => run_mccv_study(&cfg)?,
        StudyKind::Wireless => run_wireless_study(&cfg)?,
        StudyKind::Design => run_design_benchmark(&cfg, &design_cases()?)?,
        StudyKind::Stability => unreachable!(),
    };
    res.write_all(&dir)?;
    if ctx.svg() {
        study_charts(&res, &dir)?;
    }
    writeln!(out, "{} records written to {}", res.records.len(), dir.display())?;
    Ok(())
}

fn study_charts(res: &ExperimentResult, dir: &Path) -> Result<()> {
    let records = dir.join(format!("{}_records.csv", res.study));
    let aggregates = dir.join(format!("{}_aggregates.csv", res.study));
    let filtered = |kind, path: &Path, x: &str, y: &str, stat: &str, group: Option<&str>, name: &str| -> Result<()> {
        let mut spec = ChartSpec::new(kind, x, y);
        spec.filter = vec![("statistic".into(), stat.into())];
        spec.group = group.map(str::to_owned);
        spec.title = name.into();
        let svg = crate::io::render_svg(fs::File::open(path)?, &spec)?;
        fs::write(dir.join(format!("{}_{name}.svg", res.study)), svg)?;
        Ok(())
    };
    match res.study.as_str() {
        "mse" => {
            filtered(ChartKind::Line, &aggregates, "m", "mean", "sq_error", Some("scheme"), "mse")?;
            filtered(ChartKind::Box, &records, "scheme", "value", "oracle_m", None, "oracle_m")?;
        }
        "mccv" | "design" => filtered(ChartKind::Box, &records, "scheme", "value", "log_ratio", None, "log_ratio")?,
        "wireless" => filtered(ChartKind::Line, &aggregates, "n", "mean", "n_bar", Some("scheme"), "n_bar")?,
        _ => {}
    }
    Ok(())
}
