//! Replicated mean squared error of the trace on a growing SBM, written to
//! `results/mse_*` with SVG charts.

use std::path::Path;

use localdeg::experiments::{run_mse_study, ExperimentConfig, ModelFamily, Statistic};
use localdeg::io::{render_svg_file, ChartKind, ChartSpec};
use localdeg::WeightScheme;

fn main() -> localdeg::Result<()> {
    let cfg = ExperimentConfig::new(ModelFamily::GrowingSbm, WeightScheme::standard(0.1), vec![100, 200], 200, 4);
    let res = run_mse_study(&cfg)?;
    let dir = Path::new("results");
    res.write_all(dir)?;

    let mut spec = ChartSpec::new(ChartKind::Line, "m", "mean");
    spec.filter = vec![("statistic".into(), "sq_error".into()), ("n".into(), "100".into())];
    spec.group = Some("scheme".into());
    render_svg_file(&dir.join("mse_aggregates.csv"), &spec)?;

    for n in &cfg.n_grid {
        println!("n = {n}");
        for (si, label) in res.labels.iter().enumerate() {
            let curve = res.mse_curve(*n, si);
            let (best, mse) =
                curve.iter().enumerate().min_by(|a, b| a.1.total_cmp(b.1)).map(|(m, v)| (m, *v)).unwrap_or((0, 0.0));
            let oracle: Vec<f64> = res.select(Statistic::OracleM, *n, Some(si)).map(|r| r.value).collect();
            let mean_oracle = oracle.iter().sum::<f64>() / oracle.len() as f64;
            println!("  {label:<16} best m {best:>3}  mse {mse:.3e}  mean oracle m {mean_oracle:.1}");
        }
    }
    println!("wrote {}", dir.display());
    Ok(())
}
