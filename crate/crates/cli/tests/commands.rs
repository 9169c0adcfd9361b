mod common;

use std::fs;

use common::{rng, write_dataset, PremierFixture, PREMIER_COLUMNS};
use proptest::prelude::*;
use xportme::simulation::{generate_population, rng::replicate_rng, FittedModel, ModelForm, ScenarioSpec};
use xportme::{fit_membership, predict_prob, Dataset, FitOptions, Row};
use xportme_cli::commands::{simulation_grid, RESULT_COLUMNS};
use xportme_cli::config::{DomConfig, EstimateConfig, SimulateArgs, SimulateConfig, WeightingConfig};
use xportme_cli::{cmd_dom, cmd_estimate, cmd_simulate, cmd_weights, parse_stacked_csv, parse_stacked_reader, write_stacked_csv};

fn estimate_config(data: &std::path::Path, out: Option<&std::path::Path>) -> EstimateConfig {
    let mut weighting = WeightingConfig::new(data);
    weighting.out = out.map(Into::into);
    EstimateConfig {
        weighting,
        mu1_grid: None,
    }
}

#[test]
fn premier_header_order_survives_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let d = PremierFixture::shifted().draw(200, 300, &mut rng(1));
    let path = write_dataset(dir.path(), "premier.csv", &d, None);
    let back = parse_stacked_csv(&path).unwrap();
    assert_eq!(back.dataset.covariate_names(), PREMIER_COLUMNS);
    assert_eq!(back.dataset, d);
}

fn arb_row() -> impl Strategy<Value = Row> {
    (
        any::<bool>(),
        any::<bool>(),
        -1e6..1e6f64,
        proptest::option::of(-1e6..1e6f64),
        proptest::collection::vec(-1e9..1e9f64, 3),
    )
        .prop_map(|(val, treated, y, z, x)| {
            if val {
                Row::validation(y, z.unwrap_or(0.0), x)
            } else {
                Row::trial(treated, y, z, x)
            }
        })
}

proptest! {
    #[test]
    fn csv_round_trip_preserves_values(
        rows in proptest::collection::vec(arb_row(), 1..40),
        scale in 1e-12..1e3f64,
    ) {
        let probs: Vec<f64> = (0..rows.len()).map(|i| scale * (i as f64 + 0.5) / (1e3 * rows.len() as f64)).collect();
        let d = Dataset::with_default_names(rows);
        let mut buf = Vec::new();
        write_stacked_csv(&d, Some(&probs), &mut buf).unwrap();
        let back = parse_stacked_reader(buf.as_slice()).unwrap();
        prop_assert_eq!(back.probs.as_deref(), Some(probs.as_slice()));
        for (a, b) in d.rows().iter().zip(back.dataset.rows()) {
            let rel = |u: f64, v: f64| (u - v).abs() <= 1e-12 * u.abs().max(1.0);
            prop_assert_eq!(a.sample, b.sample);
            prop_assert_eq!(a.treated, b.treated);
            prop_assert!(rel(a.y_reported, b.y_reported));
            prop_assert_eq!(a.z_true.is_some(), b.z_true.is_some());
            for (u, v) in a.covariates.iter().zip(&b.covariates) {
                prop_assert!(rel(*u, *v));
            }
        }
    }
}

#[test]
fn estimate_without_shift_agrees_with_naive() {
    let dir = tempfile::tempdir().unwrap();
    let d = PremierFixture::unshifted().draw(600, 600, &mut rng(2));
    let path = write_dataset(dir.path(), "flat.csv", &d, None);
    let out = cmd_estimate(&estimate_config(&path, None)).unwrap();
    let r = &out.report;
    let gap = (r.mu0_weighted.estimate - r.mu0_naive.estimate).abs();
    assert!(gap < 2.0 * r.mu0_naive.se.unwrap(), "gap {gap}");
}

#[test]
fn estimate_writes_report_balance_and_meta() {
    let dir = tempfile::tempdir().unwrap();
    let d = PremierFixture::shifted().draw(400, 400, &mut rng(3));
    let path = write_dataset(dir.path(), "in.csv", &d, None);
    let out_dir = dir.path().join("out");
    let mut cfg = estimate_config(&path, Some(&out_dir));
    cfg.mu1_grid = Some(vec![0.0, 0.5]);
    let out = cmd_estimate(&cfg).unwrap();
    let report: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(out_dir.join("report.json")).unwrap()).unwrap();
    assert_eq!(report["corrected_ate"].as_array().unwrap().len(), 2);
    assert_eq!(report["membership"]["source"], "fitted");
    assert!(report["empirical_bias"]["weighted"].is_number());
    let balance = fs::read_to_string(out_dir.join("balance.csv")).unwrap();
    assert_eq!(balance.lines().count(), 1 + PREMIER_COLUMNS.len());
    assert!(balance.starts_with("covariate,trial_mean,validation_mean,asmd,"));
    let meta: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(out_dir.join("meta.json")).unwrap()).unwrap();
    assert_eq!(meta["command"], "estimate");
    assert_eq!(meta["config"]["mu1_grid"], serde_json::json!([0.0, 0.5]));

    // corrected ATE = naive ATE - (mu1 - weighted mu0)
    let r = &out.report;
    for p in &r.corrected_ate {
        let want = r.naive_ate.estimate - (p.mu1 - r.mu0_weighted.estimate);
        assert!((p.report.estimate - want).abs() < 1e-12);
    }

    // same inputs, same bytes
    let again = dir.path().join("again");
    let mut cfg = estimate_config(&path, Some(&again));
    cfg.mu1_grid = Some(vec![0.0, 0.5]);
    cmd_estimate(&cfg).unwrap();
    assert_eq!(
        fs::read(out_dir.join("report.json")).unwrap(),
        fs::read(again.join("report.json")).unwrap()
    );
}

#[test]
fn prob_column_bypasses_fitting_with_identical_output() {
    let dir = tempfile::tempdir().unwrap();
    let d = PremierFixture::shifted().draw(300, 500, &mut rng(4));
    let fitted_path = write_dataset(dir.path(), "a.csv", &d, None);
    let fitted = cmd_estimate(&estimate_config(&fitted_path, None)).unwrap();
    let bypass_path = write_dataset(dir.path(), "b.csv", &d, Some(&fitted.weighting.probs));
    let bypass = cmd_estimate(&estimate_config(&bypass_path, None)).unwrap();
    assert_eq!(bypass.report.membership.source, "prob_column");
    assert_eq!(bypass.weighting.probs, fitted.weighting.probs);
    assert_eq!(bypass.report.mu0_weighted, fitted.report.mu0_weighted);
    assert_eq!(bypass.report.corrected_ate, fitted.report.corrected_ate);
}

#[test]
fn estimate_surfaces_model_errors_with_context() {
    let dir = tempfile::tempdir().unwrap();
    let d = PremierFixture::shifted().draw(50, 50, &mut rng(5));
    let path = write_dataset(dir.path(), "in.csv", &d, None);
    let mut cfg = estimate_config(&path, None);
    cfg.weighting.terms = Some("bmi+weight".into());
    let err = cmd_estimate(&cfg).unwrap_err().to_string();
    assert!(err.contains("weight"), "{err}");
}

#[test]
fn homogeneous_samples_give_flat_weights() {
    let dir = tempfile::tempdir().unwrap();
    let d = PremierFixture::unshifted().draw(1000, 500, &mut rng(6));
    let path = write_dataset(dir.path(), "flat.csv", &d, None);
    let (w, diag) = cmd_weights(&WeightingConfig::new(&path)).unwrap();
    assert!(diag.membership.asmd_probabilities < 0.25);
    let odds = 500.0 / 1000.0;
    let vals = w.raw.validation_weights();
    let mean = vals.iter().sum::<f64>() / vals.len() as f64;
    assert!((mean / odds - 1.0).abs() < 0.02, "mean weight {mean}");
    assert!(vals.iter().all(|v| (v / odds - 1.0).abs() < 0.5));
}

#[test]
fn weighting_improves_balance_and_trim_caps_at_threshold() {
    let dir = tempfile::tempdir().unwrap();
    let d = PremierFixture::shifted().draw(800, 800, &mut rng(7));
    let path = write_dataset(dir.path(), "shift.csv", &d, None);
    let out_dir = dir.path().join("w");
    let mut cfg = WeightingConfig::new(&path);
    cfg.out = Some(out_dir.clone());
    let (w, _) = cmd_weights(&cfg).unwrap();
    // covariates that start out imbalanced improve; the rest stay balanced
    for (pre, post) in w.balance_pre.rows.iter().zip(&w.balance_post.rows) {
        if pre.asmd > 0.1 {
            assert!(post.asmd <= pre.asmd, "{}: {} -> {}", pre.covariate, pre.asmd, post.asmd);
        }
        assert!(post.asmd < 0.1, "{}: {}", post.covariate, post.asmd);
    }
    assert!(w.balance_pre.rows.iter().filter(|r| r.asmd > 0.1).count() >= 3);

    cfg.trim_quantile = Some(0.9);
    let (w, diag) = cmd_weights(&cfg).unwrap();
    let threshold = diag.weights.trim_threshold.unwrap();
    assert_eq!(diag.weights.max_weight, threshold);
    let text = fs::read_to_string(out_dir.join("weights.csv")).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("row,S,prob,weight,weight_trimmed"));
    let max_emitted = lines
        .map(|l| l.rsplit(',').next().unwrap().parse::<f64>().unwrap())
        .fold(0.0, f64::max);
    assert_eq!(max_emitted, threshold);
    assert_eq!(w.used.weights().len(), d.len());
    assert!(out_dir.join("diagnostics.json").exists());
    assert!(out_dir.join("meta.json").exists());
}

fn write_prob_columns(dir: &std::path::Path, fitted: &[f64], truth: &[f64]) -> std::path::PathBuf {
    let path = dir.join("probs.csv");
    let mut w = csv::Writer::from_path(&path).unwrap();
    w.write_record(["true", "fitted"]).unwrap();
    for (f, t) in fitted.iter().zip(truth) {
        w.write_record([t.to_string(), f.to_string()]).unwrap();
    }
    w.flush().unwrap();
    path
}

fn dom_config(data: std::path::PathBuf) -> DomConfig {
    DomConfig {
        data,
        fitted_column: "fitted".into(),
        true_column: "true".into(),
        out: None,
    }
}

#[test]
fn dom_identities_through_the_command() {
    let dir = tempfile::tempdir().unwrap();
    let truth: Vec<f64> = (0..50).map(|i| 0.2 + 0.01 * i as f64).collect();
    let path = write_prob_columns(dir.path(), &truth, &truth);
    assert_eq!(cmd_dom(&dom_config(path)).unwrap().dom, 0.0);

    let delta = 0.03;
    let shifted: Vec<f64> = truth.iter().map(|p| p + delta).collect();
    let mean = truth.iter().sum::<f64>() / 50.0;
    let sd = (truth.iter().map(|p| (p - mean).powi(2)).sum::<f64>() / 49.0).sqrt();
    let path = write_prob_columns(dir.path(), &shifted, &truth);
    let got = cmd_dom(&dom_config(path)).unwrap().dom;
    assert!((got - delta / sd).abs() < 1e-12 * (delta / sd), "{got}");

    let flat = vec![0.5; 10];
    let path = write_prob_columns(dir.path(), &flat, &flat);
    assert!(cmd_dom(&dom_config(path)).is_err());
}

#[test]
fn dom_command_matches_library_on_quadratic_truth() {
    let dir = tempfile::tempdir().unwrap();
    let form = ModelForm::new(2).unwrap();
    let spec = ScenarioSpec::new(1.0, 0.0, form).with_sizes(4000, 10, 1);
    let d = generate_population(&spec, &mut replicate_rng(9, 0)).to_dataset::<f64>();
    let opts = FitOptions::default();
    let truth = predict_prob(&fit_membership(&d, &form.terms(), &opts).unwrap(), &d).unwrap();
    let mains = FittedModel::MainEffectsOnly.terms(form);
    let fitted = predict_prob(&fit_membership(&d, &mains, &opts).unwrap(), &d).unwrap();
    let path = write_prob_columns(dir.path(), &fitted, &truth);
    let out_dir = dir.path().join("dom");
    let mut cfg = dom_config(path);
    cfg.out = Some(out_dir.clone());
    let got = cmd_dom(&cfg).unwrap();
    assert_eq!(got.dom, xportme::dom(&fitted, &truth).unwrap());
    assert!(got.dom > 0.0);
    let json: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(out_dir.join("dom.json")).unwrap()).unwrap();
    assert_eq!(json["dom"].as_f64().unwrap(), got.dom);
}

fn small_sim(out: Option<std::path::PathBuf>) -> SimulateConfig {
    let mut cfg = SimulateArgs {
        gamma1: Some(vec![0.4]),
        gamma2: Some(vec![0.6]),
        models: Some(vec![3]),
        replicates: Some(2),
        n: Some(200),
        pop_size: Some(5000),
        seed: Some(11),
        threads: Some(2),
        ..Default::default()
    }
    .resolve(None)
    .unwrap();
    cfg.out = out;
    cfg
}

#[test]
fn single_cell_simulation_writes_three_rows() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a");
    let out = cmd_simulate(&small_sim(Some(a.clone()))).unwrap();
    assert_eq!(out.failed_scenarios(), 0);
    let text = fs::read_to_string(a.join("results.csv")).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], RESULT_COLUMNS.join(","));
    assert_eq!(lines.len(), 4);
    for (line, est) in lines[1..].iter().zip(["naive", "weighted_true", "weighted_misspecified"]) {
        assert!(line.starts_with(&format!("0.4,0.6,3,{est},")), "{line}");
    }
    let meta: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(a.join("meta.json")).unwrap()).unwrap();
    assert_eq!(meta["config"]["seed"], 11);
    assert_eq!(meta["notes"]["failed_scenarios"], 0);
    // rerun into the same directory: the sidecar is reproduced byte for byte
    let first = fs::read(a.join("meta.json")).unwrap();
    cmd_simulate(&small_sim(Some(a.clone()))).unwrap();
    assert_eq!(fs::read(a.join("meta.json")).unwrap(), first);

    let b = dir.path().join("b");
    cmd_simulate(&small_sim(Some(b.clone()))).unwrap();
    for f in ["results.csv", "scenarios.csv"] {
        assert_eq!(fs::read(a.join(f)).unwrap(), fs::read(b.join(f)).unwrap(), "{f}");
    }
}

#[test]
fn default_grid_has_756_estimator_rows() {
    let cfg = SimulateArgs::default().resolve(None).unwrap();
    let grid = simulation_grid(&cfg).unwrap();
    assert_eq!(grid.len(), 252);
    assert_eq!(grid.iter().map(|s| s.estimators().len()).sum::<usize>(), 756);
    assert_eq!(grid[0].population_size, ScenarioSpec::DESK_POPULATION);
    let full = SimulateArgs {
        full_scale: true,
        ..Default::default()
    }
    .resolve(None)
    .unwrap();
    assert_eq!(simulation_grid(&full).unwrap()[0].population_size, ScenarioSpec::FULL_POPULATION);
}

#[test]
fn replicate_failures_are_counted_not_fatal() {
    // tiny strongly separated samples make some fits fail
    let mut cfg = small_sim(None);
    cfg.gamma1 = vec![1.0];
    cfg.models = vec![7];
    cfg.n = 4;
    cfg.replicates = 30;
    let out = cmd_simulate(&cfg).unwrap();
    let r = out.results[0].as_ref().unwrap();
    assert!(r.failed_replicates > 0);
    assert!(r.first_failure.is_some());
    let rows = out.result_rows();
    assert_eq!(rows.len(), 3);
    assert_eq!(rows[0][9], r.failed_replicates.to_string());
}

#[test]
fn invalid_grid_is_a_config_error() {
    let mut cfg = small_sim(None);
    cfg.gamma1 = vec![1.5];
    assert!(cmd_simulate(&cfg).is_err());
    cfg.gamma1 = vec![0.5];
    cfg.pop_size = 100;
    assert!(cmd_simulate(&cfg).is_err());
}
