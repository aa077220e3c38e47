use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use bezier_simplex::metrics::{gd, grid_sample, igd};
use bezier_simplex::{BezierSimplex, SampleSet};
use bezier_simplex_cli::commands::{Manifest, ManifestEntry, MANIFEST};
use bezier_simplex_cli::experiment::read_rows;
use bezier_simplex_cli::stats;

fn bsf(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_bsf")).args(args).output().unwrap()
}

fn ok(args: &[&str]) -> String {
    let out = bsf(args);
    assert!(
        out.status.success(),
        "bsf {args:?} failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout).unwrap()
}

fn p(path: &Path) -> &str {
    path.to_str().unwrap()
}

fn dir_bytes(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut files: Vec<(String, Vec<u8>)> = fs::read_dir(dir)
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
fn generate_writes_one_file_per_face_reproducibly() {
    let tmp = tempfile::tempdir().unwrap();
    let a = tmp.path().join("a");
    let b = tmp.path().join("b");
    for out in [&a, &b] {
        ok(&["generate", "--problem", "med3", "--sizes", "1,2,1", "--seed", "7", "--out", p(out)]);
    }
    let files = dir_bytes(&a);
    let trains = files.iter().filter(|(n, _)| n.starts_with("train_")).count();
    assert_eq!(trains, 7);
    assert!(files.iter().any(|(n, _)| n == "validation.csv"));
    assert_eq!(files, dir_bytes(&b));
    let manifest: Manifest = serde_json::from_slice(&fs::read(a.join(MANIFEST)).unwrap()).unwrap();
    assert_eq!(manifest.seed, 7);
    assert_eq!(manifest.sizes, vec![1, 2, 1]);
    assert_eq!(manifest.training.iter().map(|e| e.points).sum::<usize>(), 10);
}

#[test]
fn usage_errors_exit_with_two() {
    let tmp = tempfile::tempdir().unwrap();
    let out = bsf(&["generate", "--problem", "dtlz9", "--sizes", "1,2", "--out", p(tmp.path())]);
    assert_eq!(out.status.code(), Some(2));
    let err = String::from_utf8_lossy(&out.stderr);
    for name in ["schaffer", "constrex", "osyczka2", "viennet2", "med3", "med5", "medM:<M>", "file:<path>"] {
        assert!(err.contains(name), "{err}");
    }
    assert_eq!(bsf(&["frobnicate"]).status.code(), Some(2));
    let out = bsf(&["plot", "--input", p(&tmp.path().join("missing.csv")), "--out", p(&tmp.path().join("x.svg"))]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn runtime_failures_exit_with_one() {
    let tmp = tempfile::tempdir().unwrap();
    let out = bsf(&[
        "generate", "--problem", "constrex", "--sizes", "1,30", "--pool-size", "10", "--out", p(tmp.path()),
    ]);
    assert_eq!(out.status.code(), Some(1), "{}", String::from_utf8_lossy(&out.stderr));
}

#[test]
fn schaffer_edge_fit_takes_three_iterations() {
    let tmp = tempfile::tempdir().unwrap();
    let data = tmp.path().join("data");
    ok(&["generate", "--problem", "schaffer", "--sizes", "1,3", "--seed", "1", "--out", p(&data)]);
    let fit = tmp.path().join("fit");
    let text = ok(&["fit", "--method", "inductive", "--degree", "3", "--input", p(&data), "--out", p(&fit)]);
    assert!(text.contains("outer iterations: 3"), "{text}");
    let report: serde_json::Value = serde_json::from_slice(&fs::read(fit.join("fit_report.json")).unwrap()).unwrap();
    assert_eq!(report["per_face_report"].as_array().unwrap().len(), 3);

    let rs = tmp.path().join("rs");
    ok(&["fit", "--method", "response-surface", "--input", p(&data), "--out", p(&rs)]);
    let coeffs: serde_json::Value = serde_json::from_slice(&fs::read(rs.join("response_surface.json")).unwrap()).unwrap();
    assert_eq!(coeffs["coefficients"].as_array().unwrap().len(), 4);
}

/// Hand-written training directory sampled from a cubic height-field triangle.
fn exact_training_dir(dir: &Path) -> BezierSimplex {
    let truth = BezierSimplex::from_fn(3, 3, 3, |d| {
        let e = d.entries();
        let lift = if e.iter().filter(|&&v| v > 0).count() > 1 { 0.02 * f64::from(e[0] + 2 * e[2]) } else { 0.0 };
        e.iter().map(|&v| f64::from(v) / 3.0 + lift).collect()
    })
    .unwrap();
    fs::create_dir_all(dir).unwrap();
    let mut training = Vec::new();
    let mut write = |label: &str, ts: Vec<Vec<f64>>| {
        let pts: Vec<Vec<f64>> = ts
            .iter()
            .map(|t| truth.evaluate(&bezier_simplex::Barycentric::new(t.clone()).unwrap()).unwrap())
            .collect();
        let file = format!("train_{label}.csv");
        SampleSet::from_objectives(3, pts.clone()).unwrap().save(dir.join(&file)).unwrap();
        training.push(ManifestEntry {
            face: label.into(),
            file,
            points: pts.len(),
        });
    };
    write("1", vec![vec![1.0, 0.0, 0.0]]);
    write("2", vec![vec![0.0, 1.0, 0.0]]);
    write("3", vec![vec![0.0, 0.0, 1.0]]);
    let mut interior = Vec::new();
    for i in 1..8 {
        for j in 1..8 - i {
            let (a, b) = (i as f64 / 8.0, j as f64 / 8.0);
            interior.push(vec![a, b, 1.0 - a - b]);
        }
    }
    write("1-2-3", interior);
    let manifest = Manifest {
        problem: "synthetic".into(),
        seed: 0,
        sizes: vec![1, 0, 21],
        validation_size: 0,
        pool_size: 0,
        normalization: None,
        training,
        validation: String::new(),
    };
    fs::write(dir.join(MANIFEST), serde_json::to_string(&manifest).unwrap()).unwrap();
    truth
}

#[test]
fn exact_data_is_refit_exactly() {
    let tmp = tempfile::tempdir().unwrap();
    let data = tmp.path().join("data");
    exact_training_dir(&data);
    let text = ok(&["fit", "--method", "all-at-once", "--input", p(&data), "--out", p(&tmp.path().join("fit"))]);
    let rms: f64 = text
        .lines()
        .find_map(|l| l.strip_prefix("final sqrt(SSR)/N: "))
        .unwrap()
        .parse()
        .unwrap();
    assert!(rms <= 1e-6, "{text}");
}

#[test]
fn evaluate_agrees_with_direct_computation() {
    let tmp = tempfile::tempdir().unwrap();
    let data = tmp.path().join("data");
    let truth = exact_training_dir(&data);
    let model_path = tmp.path().join("model.json");
    truth.save(&model_path).unwrap();

    let own_grid = tmp.path().join("grid.csv");
    SampleSet::from_objectives(3, grid_sample(&truth, 20).unwrap()).unwrap().save(&own_grid).unwrap();
    let metrics = tmp.path().join("m.csv");
    ok(&["evaluate", "--model", p(&model_path), "--validation", p(&own_grid), "--out", p(&metrics)]);
    assert_eq!(fs::read_to_string(&metrics).unwrap(), "gd,igd\n0.0,0.0\n");

    let fixture = data.join("train_1-2-3.csv");
    ok(&["evaluate", "--model", p(&model_path), "--validation", p(&fixture), "--resolution", "7", "--out", p(&metrics)]);
    let grid = grid_sample(&truth, 7).unwrap();
    let val = SampleSet::load(&fixture).unwrap().objectives();
    let expected = format!("gd,igd\n{:?},{:?}\n", gd(&grid, &val).unwrap(), igd(&grid, &val).unwrap());
    assert_eq!(fs::read_to_string(&metrics).unwrap(), expected);

    let flat = tmp.path().join("flat.csv");
    SampleSet::from_objectives(2, vec![vec![0.0, 1.0]]).unwrap().save(&flat).unwrap();
    let out = bsf(&["evaluate", "--model", p(&model_path), "--validation", p(&flat)]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn experiment_rows_and_summary_agree() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("exp");
    let text = ok(&[
        "experiment", "--problem", "med3", "--method", "inductive,all-at-once", "--sizes", "1,2,1", "--trials", "4",
        "--validation", "300", "--seed", "11", "--jobs", "2", "--out", p(&out),
    ]);
    assert!(text.contains("Mann-Whitney"));
    let rows = read_rows(fs::File::open(out.join("results.csv")).unwrap()).unwrap();
    assert_eq!(rows.len(), 8);
    assert_eq!(rows.iter().filter(|r| r.method.to_string() == "inductive").count(), 4);
    assert!(rows.iter().all(|r| r.seed == 11 + r.trial as u64));
    let summary: serde_json::Value = serde_json::from_slice(&fs::read(out.join("summary.json")).unwrap()).unwrap();
    for g in summary["groups"].as_array().unwrap() {
        let method = g["method"].as_str().unwrap();
        let gds: Vec<f64> = rows.iter().filter(|r| r.method.to_string() == method).filter_map(|r| r.gd).collect();
        assert!((g["gd"]["mean"].as_f64().unwrap() - stats::mean(&gds)).abs() <= 1e-12);
        assert!((g["gd"]["sd"].as_f64().unwrap() - stats::std_dev(&gds)).abs() <= 1e-12);
    }
    assert_eq!(summary["comparisons"].as_array().unwrap().len(), 2);

    let svg = tmp.path().join("box.svg");
    ok(&["plot", "--input", p(&out.join("results.csv")), "--out", p(&svg)]);
    assert_eq!(fs::read_to_string(&svg).unwrap().matches("class=\"panel\"").count(), 2);
}

#[test]
fn scatter_plots_have_one_panel_per_pair() {
    let tmp = tempfile::tempdir().unwrap();
    for (problem, panels) in [("med3", 3), ("med5", 10)] {
        let data = tmp.path().join(problem);
        ok(&["generate", "--problem", problem, "--sizes", "1,2,1", "--validation", "100", "--out", p(&data)]);
        let svg = tmp.path().join(format!("{problem}.svg"));
        let again = tmp.path().join(format!("{problem}-again.svg"));
        for target in [&svg, &again] {
            ok(&["plot", "--input", p(&data.join("validation.csv")), "--out", p(target)]);
        }
        let text = fs::read_to_string(&svg).unwrap();
        assert_eq!(text.matches("class=\"panel\"").count(), panels);
        assert_eq!(fs::read(&svg).unwrap(), fs::read(&again).unwrap());
    }
}
