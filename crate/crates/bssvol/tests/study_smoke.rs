use std::time::Instant;

use bssvol::config::StudyConfig;
use bssvol::study::{run_study, StudyMethod};

#[test]
fn smoke_preset_is_fast_and_keeps_the_ordering() {
    let cfg = StudyConfig::smoke();
    let start = Instant::now();
    let report = run_study(&cfg).unwrap();
    let elapsed = start.elapsed().as_secs_f64();
    assert!(elapsed < 120.0, "smoke study took {elapsed:.1}s");
    for label in ["5m", "30m"] {
        let f = *cfg.frequencies.iter().find(|&&f| cfg.label(f) == label).unwrap();
        let np = report.rmse(StudyMethod::NonParametric, f).unwrap();
        let cof = report.rmse(StudyMethod::Cof, f).unwrap();
        let acf = report.rmse(StudyMethod::Acf, f).unwrap();
        println!("{label}: nonparametric {np:.4} cof {cof:.4} acf {acf:.4}");
        assert!(np < cof && np < acf, "{label}: nonparametric {np} cof {cof} acf {acf}");
    }
    let dir = tempfile::tempdir().unwrap();
    report.write(dir.path()).unwrap();
    for f in ["rmse.csv", "clt_samples.csv", "tau_samples.csv", "coverage.csv"] {
        assert!(dir.path().join(f).exists());
    }
    let rmse = std::fs::read_to_string(dir.path().join("rmse.csv")).unwrap();
    assert_eq!(rmse.lines().count(), 1 + cfg.frequencies.len() * StudyMethod::ALL.len());
}
