mod common;

use std::collections::BTreeMap;
use std::path::Path;

use lg4nmr_lab::config::{parse_value, Engine};
use lg4nmr_lab::export::sha256_hex;
use lg4nmr_lab::run::run_experiment;
use lg4nmr_lab::spectrum::most_prominent;
use lg4nmr_lab::sweep::sweep;

fn data_files(dir: &Path) -> BTreeMap<String, Vec<u8>> {
    std::fs::read_dir(dir)
        .unwrap()
        .map(|e| e.unwrap())
        .filter(|e| e.file_name() != "manifest.json")
        .map(|e| (e.file_name().to_string_lossy().into_owned(), std::fs::read(e.path()).unwrap()))
        .collect()
}

#[test]
fn same_seed_gives_identical_files() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = common::small_config(tmp.path());
    let mut a = cfg.clone();
    a.run.output_dir = tmp.path().join("a");
    let mut b = cfg.clone();
    b.run.output_dir = tmp.path().join("b");
    let ra = run_experiment(&a).unwrap();
    let rb = run_experiment(&b).unwrap();
    let fa = data_files(&a.output_dir());
    assert!(fa.contains_key("trace.csv") && fa.contains_key("oracle_records.csv") && fa.contains_key("residual.json"));
    assert_eq!(fa, data_files(&b.output_dir()));
    assert_eq!(ra.manifest.files, rb.manifest.files);

    let mut c = cfg.with_override("run.seed", parse_value("6")).unwrap();
    c.run.output_dir = tmp.path().join("c");
    run_experiment(&c).unwrap();
    let fc = data_files(&c.output_dir());
    assert_ne!(fa["trace.csv"], fc["trace.csv"]);
    // the oracle has no noise
    assert_eq!(fa["oracle_records.csv"], fc["oracle_records.csv"]);
}

#[test]
fn manifest_hashes_match_the_files() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = common::small_config(tmp.path());
    let report = run_experiment(&cfg).unwrap();
    let text = std::fs::read_to_string(report.output_dir.join("manifest.json")).unwrap();
    let manifest: serde_json::Value = serde_json::from_str(&text).unwrap();
    assert_eq!(manifest["status"], "complete");
    assert_eq!(manifest["seed"], 5);
    assert_eq!(manifest["n_blocks"], 24);
    assert_eq!(manifest["geometry_hash"], sha256_hex(common::PAIR_XYZ.as_bytes()));
    let files = manifest["files"].as_array().unwrap();
    assert_eq!(files.len(), report.manifest.files.len());
    for entry in files {
        let bytes = std::fs::read(report.output_dir.join(entry["path"].as_str().unwrap())).unwrap();
        assert_eq!(entry["sha256"], sha256_hex(&bytes));
        assert_eq!(entry["bytes"], bytes.len());
    }
    let spectrum: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(report.output_dir.join("spectrum.json")).unwrap()).unwrap();
    assert!(spectrum["frequencies_hz"].as_array().unwrap().len() > 4);
    assert!(std::fs::read_to_string(report.output_dir.join("spectrum.svg")).unwrap().starts_with("<svg"));
}

#[test]
fn engines_agree_on_the_small_pair() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = common::small_config(tmp.path())
        .with_override("sample.dipolar", parse_value("false"))
        .unwrap()
        .with_override("noise.enabled", parse_value("false"))
        .unwrap();
    let report = run_experiment(&cfg).unwrap();
    assert_eq!(report.manifest.engine, Engine::Both);
    let r = report.residual.unwrap();
    assert!(r.relative < 0.02, "relative residual {}", r.relative);
}

#[test]
fn failed_sweep_points_do_not_stop_the_rest() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = common::small_config(tmp.path());
    let values: Vec<String> = ["120e3", "-5.0", "180e3"].iter().map(|s| s.to_string()).collect();
    let (outcomes, summary) = sweep(&cfg, "rf.rabi_hz", &values).unwrap();
    assert_eq!(outcomes.len(), 3);
    assert!(outcomes[0].result.is_ok() && outcomes[2].result.is_ok());
    assert!(outcomes[1].result.as_ref().is_err_and(|e| e.is_config_error()));
    let text = std::fs::read_to_string(cfg.output_dir().join(&summary.path)).unwrap();
    let rows: Vec<&str> = text.lines().collect();
    assert_eq!(rows.len(), 4);
    assert!(rows[1].starts_with("120e3,ok"));
    assert!(rows[2].starts_with("-5.0,error"));
    assert!(rows[3].starts_with("180e3,ok"));
    for o in [&outcomes[0], &outcomes[2]] {
        assert!(o.output_dir.join("records.csv").exists());
    }
    assert!(sweep(&cfg, "rf.nope", &values).is_err());
}

#[test]
fn single_value_sweep_matches_a_plain_run() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = common::small_config(tmp.path());
    let (outcomes, _) = sweep(&cfg, "rf.rabi_hz", &["150e3".to_string()]).unwrap();
    assert_eq!(outcomes.len(), 1);
    let swept = outcomes[0].result.as_ref().unwrap();
    let mut plain = cfg.clone();
    plain.run.output_dir = tmp.path().join("plain");
    let report = run_experiment(&plain).unwrap();
    assert_eq!(data_files(&swept.output_dir), data_files(&report.output_dir));
}

#[test]
fn peak_locations_do_not_depend_on_the_noise_seed() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = common::small_config(tmp.path())
        .with_override("rf.n_blocks", parse_value("2048"))
        .unwrap()
        .with_override("run.engine", parse_value("\"quantum\""))
        .unwrap();
    let values: Vec<String> = (1..=4).map(|s| s.to_string()).collect();
    let (outcomes, _) = sweep(&cfg, "noise.seed", &values).unwrap();
    let peaks: Vec<Vec<f64>> = outcomes
        .iter()
        .map(|o| {
            let spec = &o.result.as_ref().unwrap().primary().spectrum;
            most_prominent(&spec.peaks, 2).iter().map(|p| p.frequency).collect()
        })
        .collect();
    let bin = outcomes[0].result.as_ref().unwrap().primary().spectrum.bin_width();
    assert_eq!(peaks[0].len(), 2);
    for p in &peaks[1..] {
        assert_eq!(p.len(), 2);
        for (a, b) in p.iter().zip(&peaks[0]) {
            assert!((a - b).abs() <= bin, "{peaks:?} with bin {bin}");
        }
    }
}
