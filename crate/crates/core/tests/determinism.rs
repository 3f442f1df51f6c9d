//! Result files do not depend on the worker count or on reruns.

use std::fs;
use std::path::Path;
use std::process::Command;

use localdeg::experiments::{run_mccv_study, run_mse_study, ExperimentConfig, ModelFamily};
use localdeg::model::GraphModel;
use localdeg::{Graph, SbmSpec, SplitPlan, WeightScheme};

fn study(kind: &str, threads: &str, cfg: &Path, out: &Path) -> Vec<(String, Vec<u8>)> {
    let o = Command::new(env!("CARGO_BIN_EXE_localdeg"))
        .args(["study", kind, "--config", cfg.to_str().unwrap(), "--out", out.to_str().unwrap()])
        .env("LOCALDEG_THREADS", threads)
        .output()
        .unwrap();
    assert!(o.status.success(), "{kind}: {}", String::from_utf8_lossy(&o.stderr));
    let mut files: Vec<(String, Vec<u8>)> = fs::read_dir(out)
        .unwrap()
        .map(|e| {
            let e = e.unwrap();
            (e.file_name().to_string_lossy().into_owned(), fs::read(e.path()).unwrap())
        })
        .collect();
    files.sort();
    files
}

#[test]
fn studies_are_byte_identical_across_thread_counts() {
    let dir = tempfile::tempdir().unwrap();
    let sbm = dir.path().join("sbm.cfg");
    fs::write(&sbm, "seed = 5\n[mccv]\nreplications = 8\n[study]\nreplicates = 12\nm_grid = [5, 10, 20]\n").unwrap();
    let wireless = dir.path().join("w.cfg");
    fs::write(
        &wireless,
        "seed = 5\n[mccv]\nreplications = 5\n[study]\nn_grid = [60, 90]\nreplicates = 4\n\
         truth_samples = 20000\nverify_replicates = 500\n",
    )
    .unwrap();
    let design = dir.path().join("d.cfg");
    fs::write(
        &design,
        "seed = 5\n[mccv]\nreplications = 4\n[study]\nn_grid = [50]\nreplicates = 2\ntruth_samples = 20000\n",
    )
    .unwrap();
    for (kind, cfg) in
        [("mse", &sbm), ("mccv", &sbm), ("stability", &sbm), ("wireless", &wireless), ("design", &design)]
    {
        let a = study(kind, "1", cfg, &dir.path().join(format!("{kind}-1")));
        let b = study(kind, "4", cfg, &dir.path().join(format!("{kind}-4")));
        let c = study(kind, "3", cfg, &dir.path().join(format!("{kind}-3")));
        assert!(!a.is_empty());
        assert_eq!(a, b, "{kind}");
        assert_eq!(a, c, "{kind}");
    }
}

#[test]
fn six_vertex_study_reruns_bit_identically() {
    let spec = SbmSpec::new(vec![3, 3], vec![0.6, 0.4], 0.2, 1).unwrap();
    let mut cfg =
        ExperimentConfig::new(ModelFamily::Fixed(GraphModel::Sbm(spec)), WeightScheme::standard(0.25), vec![], 40, 77);
    cfg.mccv = SplitPlan::new(6, 0);
    let a = run_mccv_study(&cfg).unwrap();
    let b = run_mccv_study(&cfg).unwrap();
    assert_eq!(a.records.len(), b.records.len());
    for (x, y) in a.records.iter().zip(&b.records) {
        assert_eq!(x.value.to_bits(), y.value.to_bits());
        assert_eq!(
            (x.n, x.replicate, x.scheme, x.m, x.statistic, x.flags),
            (y.n, y.replicate, y.scheme, y.m, y.statistic, y.flags)
        );
    }
    let mut ca = Vec::new();
    let mut cb = Vec::new();
    a.write_records_csv(&mut ca).unwrap();
    b.write_records_csv(&mut cb).unwrap();
    assert_eq!(ca, cb);

    let m = run_mse_study(&cfg).unwrap();
    let mut other = cfg.clone();
    other.seed = 78;
    assert_ne!(m.records, run_mse_study(&other).unwrap().records);
}

#[test]
fn edge_csv_roundtrip() {
    let g = Graph::from_edges(7, &[(0, 3), (3, 4), (1, 2)], false).unwrap();
    let mut buf = Vec::new();
    g.write_edge_csv(&mut buf).unwrap();
    let back = Graph::read_edge_csv(buf.as_slice(), false, 7).unwrap();
    assert_eq!(back.edges(), g.edges());
    assert_eq!(back.vertex_count(), 7);
}
