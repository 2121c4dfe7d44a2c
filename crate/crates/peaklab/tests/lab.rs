use std::path::Path;

use peaklab::lab::{
    approximants, evaluate, fit_rates, load_config, load_records, report, run::record_path, run_pipeline, top_half,
    ExperimentConfig, KRecord, KStatus, Status,
};
use peaklab::Error;

const SMALL: &str = "
# a quick sweep
n = 1
grid = 16
k_max = 8
centers = 2
pairs = 10
sites = 10
";

fn small() -> ExperimentConfig {
    ExperimentConfig::parse(SMALL).unwrap()
}

#[test]
fn config_errors_are_reported() {
    for bad in [
        "epsilon = 3",
        "n = 2\nepsilon = 0.4",
        "grid = 9",
        "bogus = 1",
        "grid = 8\ngrid = 16",
        "r2 = 0.5",
        "class = -1",
        "eps0 = 1",
        "grid",
        "workers = 0",
    ] {
        assert!(matches!(ExperimentConfig::parse(bad), Err(Error::Config(_)) | Err(Error::OddGrid(_))), "{bad}");
    }
}

#[test]
fn defaults_follow_the_class() {
    let c1 = ExperimentConfig::defaults(1).unwrap();
    assert_eq!((c1.grid, c1.k_max), (64, 40));
    assert!((c1.delta0 - 0.5 * (5f64.sqrt() - 1.0) / 2.0).abs() < 1e-15);
    assert!((c1.epsilon - 1.8).abs() < 1e-15);
    let c2 = ExperimentConfig::defaults(2).unwrap();
    assert_eq!(c2.type_offset, vec![0, 1, 0, 0, 0, 0]);
    assert!((c2.epsilon - 0.3).abs() < 1e-15);
    // δ₀ is recomputed when the class changes but not when pinned
    let c = ExperimentConfig::parse("class = 2").unwrap();
    assert!((c.delta0 - 1.0).abs() < 1e-15 && (c.eps0 - 0.5).abs() < 1e-15);
    let c = ExperimentConfig::parse("class = 2\ndelta0 = 0.3").unwrap();
    assert!((c.delta0 - 0.3).abs() < 1e-15);
}

#[test]
fn canonical_form_round_trips_and_ignores_bookkeeping() {
    for cfg in [small(), ExperimentConfig::defaults(2).unwrap()] {
        let back = ExperimentConfig::parse(&cfg.canonical()).unwrap();
        assert_eq!(back.canonical(), cfg.canonical());
        assert_eq!(back.hash(), cfg.hash());
    }
    let mut named = small();
    named.name = Some("x".into());
    named.workers = 4;
    assert_eq!(named.hash(), small().hash());
    assert_eq!(named.run_name(), "x");
    assert!(small().run_name().starts_with("n1-N16-"));
    let mut other = small();
    other.seed += 1;
    assert_ne!(other.hash(), small().hash());
}

#[test]
fn rate_fits() {
    let exact: Vec<(f64, f64)> = [5.0, 8.0, 13.0, 21.0, 34.0].iter().map(|&k| (k, 3.0 / k)).collect();
    let f = fit_rates(&exact).unwrap();
    assert!((f.slope + 1.0).abs() < 1e-12 && (f.intercept - 3f64.ln()).abs() < 1e-12);
    assert!(f.residual < 1e-12 && f.slope_se < 1e-12);
    let flat: Vec<(f64, f64)> = (1..6).map(|k| (k as f64, 0.5)).collect();
    assert!(fit_rates(&flat).unwrap().slope.abs() < 1e-12);
    assert!(fit_rates(&exact[..3]).is_err());
    assert!(fit_rates(&[(1.0, 1.0), (2.0, 0.0), (3.0, 1.0), (4.0, 1.0)]).is_err());
    assert!(fit_rates(&[(2.0, 1.0); 4]).is_err());
    assert_eq!(top_half(&[13, 1, 2, 3, 5, 8]), vec![5, 8, 13]);
    assert_eq!(top_half(&[1, 2, 3, 5, 8]), vec![3, 5, 8]);
}

#[test]
fn empty_selection_gives_an_empty_run() {
    let mut cfg = small();
    cfg.k_max = 0;
    assert!(approximants(&cfg).unwrap().is_empty());
    let dir = tempfile::tempdir().unwrap();
    let run = run_pipeline(&cfg, dir.path()).unwrap();
    assert!(load_records(&run).unwrap().is_empty());
    assert!(run.join("config.txt").exists());
}

fn read(path: &Path) -> Vec<u8> {
    std::fs::read(path).unwrap()
}

fn rewrite(run: &Path, k: u64, edit: impl FnOnce(&mut KRecord)) {
    let path = record_path(run, k);
    let mut rec: KRecord = serde_json::from_slice(&read(&path)).unwrap();
    edit(&mut rec);
    std::fs::write(&path, serde_json::to_string_pretty(&rec).unwrap()).unwrap();
}

#[test]
fn sweep_resumes_reports_and_flags_problems() {
    let cfg = small();
    let dir = tempfile::tempdir().unwrap();
    let run = run_pipeline(&cfg, dir.path()).unwrap();
    let ks: Vec<u64> = load_records(&run).unwrap().iter().map(|r| r.k).collect();
    assert_eq!(ks, vec![1, 2, 3, 5, 8]);
    assert_eq!(load_config(&run).unwrap().hash(), cfg.hash());
    for table in ["approximants.csv", "spectrum.csv", "gap.csv", "dimensions.csv", "peaks.csv", "jets.csv", "embedding.csv", "convergence.csv", "summary.json"] {
        assert!(run.join(table).exists(), "{table}");
    }

    // Finished records are reused verbatim.
    let before = read(&record_path(&run, 5));
    run_pipeline(&cfg, dir.path()).unwrap();
    assert_eq!(read(&record_path(&run, 5)), before);

    let v = report(&run).unwrap();
    assert!(run.join("verdict.json").exists());
    let gap = v.criteria.iter().find(|c| c.name == "spectral_gap").unwrap();
    assert!(gap.pass, "{gap:?}");
    let status = v.status;

    // An injected gap violation fails the report.
    rewrite(&run, 8, |r| {
        if let Some(g) = r.gap.as_mut() {
            g.pass = false;
        }
    });
    let v = evaluate(&cfg, &load_records(&run).unwrap()).unwrap();
    assert_eq!(v.status, Status::Fail);
    assert_eq!(v.status.exit_code(), 1);

    // A failed k makes the run incomplete; rerunning recomputes it.
    rewrite(&run, 8, |r| r.status = KStatus::Failed("injected".into()));
    let v = evaluate(&cfg, &load_records(&run).unwrap()).unwrap();
    assert_eq!((v.status, v.failed.clone()), (Status::Incomplete, vec![8]));
    std::fs::remove_file(record_path(&run, 3)).unwrap();
    let v = evaluate(&cfg, &load_records(&run).unwrap()).unwrap();
    assert_eq!(v.missing, vec![3]);
    assert_eq!(v.status.exit_code(), 2);
    run_pipeline(&cfg, dir.path()).unwrap();
    assert_eq!(report(&run).unwrap().status, status);
}
