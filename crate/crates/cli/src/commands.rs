//! Command implementations. Each returns its results and, when the config
//! names an output directory, writes them there with a `meta.json` sidecar.

use std::fs::{self, File};
use std::io::BufWriter;
use std::path::Path;

use serde::Serialize;
use xportme::membership::{asmd_of_probabilities, BalanceTable};
use xportme::simulation::{build_grid, run_grid, Estimator, EstimatorSummary, ScenarioSpec};
use xportme::{
    balance_table, corrected_ate, empirical_mu0_bias, fit_membership, make_weights, naive_ate,
    naive_mu0, predict_prob, trim_weights, validate_dataset, weighted_mu0, FitOptions, Model,
    ScenarioOutcome,
    Report, SensitivityPoint, Weights,
};

use crate::config::{DomConfig, EstimateConfig, SimulateConfig, WeightingConfig, DEFAULT_MU1_OFFSETS};
use crate::csv_io::{parse_stacked_csv, StackedInput};
use crate::error::{CliError, ModelContext, Result};
use crate::terms::{describe_terms, parse_terms};

#[derive(Debug, Clone, Serialize)]
struct Meta<'a, C: Serialize> {
    command: &'a str,
    version: &'a str,
    config: &'a C,
    #[serde(skip_serializing_if = "Option::is_none")]
    notes: Option<serde_json::Value>,
}

fn prepare_dir(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))
}

fn write_json<T: Serialize>(dir: &Path, name: &str, value: &T) -> Result<()> {
    let path = dir.join(name);
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    fs::write(&path, text).map_err(|e| CliError::io(path, e))
}

fn write_meta<C: Serialize>(
    dir: &Path,
    command: &str,
    config: &C,
    notes: Option<serde_json::Value>,
) -> Result<()> {
    let meta = Meta {
        command,
        version: env!("CARGO_PKG_VERSION"),
        config,
        notes,
    };
    write_json(dir, "meta.json", &meta)
}

fn csv_writer(dir: &Path, name: &str) -> Result<csv::Writer<BufWriter<File>>> {
    let path = dir.join(name);
    let f = File::create(&path).map_err(|e| CliError::io(path, e))?;
    Ok(csv::Writer::from_writer(BufWriter::new(f)))
}

/// Empty for NaN, shortest round-trip form otherwise.
pub fn fmt_f64(x: f64) -> String {
    if x.is_nan() {
        String::new()
    } else {
        x.to_string()
    }
}

// ---------------------------------------------------------------- weighting

/// Membership probabilities, weights and balance for one dataset.
#[derive(Debug, Clone)]
pub struct Weighting {
    pub input: StackedInput,
    /// `None` when probabilities came from the `prob` column.
    pub model: Option<Model>,
    pub probs: Vec<f64>,
    pub raw: Weights,
    /// Weights actually used: `raw` after trimming, if requested.
    pub used: Weights,
    pub balance_pre: BalanceTable<f64>,
    pub balance_post: BalanceTable<f64>,
}

#[derive(Debug, Clone, Serialize)]
pub struct Coefficient {
    pub term: String,
    pub estimate: f64,
    pub se: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct MembershipSummary {
    /// `fitted` or `prob_column`.
    pub source: &'static str,
    pub terms: Option<String>,
    pub coefficients: Vec<Coefficient>,
    pub converged: Option<bool>,
    pub iterations: Option<usize>,
    pub asmd_probabilities: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct WeightSummary {
    pub quantile_rule: &'static str,
    pub trim_quantile: Option<f64>,
    pub trim_threshold: Option<f64>,
    pub max_weight_raw: f64,
    pub max_weight: f64,
    pub effective_sample_size_raw: f64,
    pub effective_sample_size: f64,
    pub n_trimmed: usize,
}

impl Weighting {
    pub fn membership_summary(&self) -> Result<MembershipSummary> {
        let d = &self.input.dataset;
        let asmd_probabilities =
            asmd_of_probabilities(d, &self.probs).context("probability balance")?;
        Ok(match &self.model {
            Some(m) => MembershipSummary {
                source: "fitted",
                terms: Some(describe_terms(&m.terms, d.covariate_names())),
                coefficients: m
                    .column_names
                    .iter()
                    .zip(&m.theta)
                    .zip(&m.std_errors)
                    .map(|((term, &estimate), &se)| Coefficient {
                        term: term.clone(),
                        estimate,
                        se,
                    })
                    .collect(),
                converged: Some(m.converged),
                iterations: Some(m.iterations),
                asmd_probabilities,
            },
            None => MembershipSummary {
                source: "prob_column",
                terms: None,
                coefficients: Vec::new(),
                converged: None,
                iterations: None,
                asmd_probabilities,
            },
        })
    }

    pub fn weight_summary(&self) -> Result<WeightSummary> {
        let n_trimmed = self
            .raw
            .weights()
            .iter()
            .zip(self.used.weights())
            .filter(|(a, b)| a != b)
            .count();
        Ok(WeightSummary {
            quantile_rule: xportme::membership::QUANTILE_RULE,
            trim_quantile: self.used.trim_quantile(),
            trim_threshold: self.used.trim_threshold(),
            max_weight_raw: self.raw.max_weight(),
            max_weight: self.used.max_weight(),
            effective_sample_size_raw: self.raw.effective_sample_size().context("weights")?,
            effective_sample_size: self.used.effective_sample_size().context("weights")?,
            n_trimmed,
        })
    }
}

pub fn load_checked(path: &Path) -> Result<StackedInput> {
    let input = parse_stacked_csv(path)?;
    let problems = validate_dataset(&input.dataset);
    if !problems.is_empty() {
        let lines: Vec<String> = problems
            .iter()
            .map(|v| match v.row {
                // header is line 1
                Some(r) => format!("line {}: {}", r + 2, v.rule.describe()),
                None => v.rule.describe().to_string(),
            })
            .collect();
        return Err(CliError::InvalidDataset(lines.join("\n  ")));
    }
    Ok(input)
}

pub fn run_weighting(cfg: &WeightingConfig) -> Result<Weighting> {
    let input = load_checked(&cfg.data)?;
    weigh(input, cfg.terms.as_deref(), cfg.trim_quantile)
}

/// Fit (or read) membership probabilities and build weights for a parsed dataset.
pub fn weigh(input: StackedInput, terms: Option<&str>, trim_quantile: Option<f64>) -> Result<Weighting> {
    let d = &input.dataset;
    let (model, probs) = match &input.probs {
        Some(p) => (None, p.clone()),
        None => {
            let set = match terms {
                Some(spec) => parse_terms(spec, d.covariate_names())?,
                None => xportme::TermSet::main_effects(d.n_covariates()),
            };
            let m = fit_membership(d, &set, &FitOptions::default()).context("membership model")?;
            let p = predict_prob(&m, d).context("membership probabilities")?;
            (Some(m), p)
        }
    };
    let raw = make_weights(&probs, d).context("weights")?;
    let used = match trim_quantile {
        Some(q) => trim_weights(&raw, q).context("trimming")?,
        None => raw.clone(),
    };
    let balance_pre = balance_table(d, None);
    let balance_post = balance_table(d, Some(&used));
    Ok(Weighting {
        input,
        model,
        probs,
        raw,
        used,
        balance_pre,
        balance_post,
    })
}

fn write_balance(dir: &Path, pre: &BalanceTable<f64>, post: &BalanceTable<f64>) -> Result<()> {
    let mut w = csv_writer(dir, "balance.csv")?;
    w.write_record([
        "covariate",
        "trial_mean",
        "validation_mean",
        "asmd",
        "validation_mean_weighted",
        "asmd_weighted",
    ])?;
    for (a, b) in pre.rows.iter().zip(&post.rows) {
        w.write_record([
            a.covariate.clone(),
            fmt_f64(a.trial_mean),
            fmt_f64(a.validation_mean),
            fmt_f64(a.asmd),
            fmt_f64(b.validation_mean),
            fmt_f64(b.asmd),
        ])?;
    }
    w.flush().map_err(|e| CliError::io(dir.join("balance.csv"), e))
}

// ---------------------------------------------------------------- estimate

#[derive(Debug, Clone, Serialize)]
pub struct EmpiricalBias {
    /// Mean of Y − Z over trial control rows.
    pub mu0_rct: f64,
    pub naive: f64,
    pub weighted: f64,
}

/// Contents of `report.json`.
#[derive(Debug, Clone, Serialize)]
pub struct EstimateReportFile {
    pub n_validation: usize,
    pub n_trial: usize,
    pub covariates: Vec<String>,
    pub membership: MembershipSummary,
    pub weights: WeightSummary,
    pub naive_ate: Report,
    pub mu0_naive: Report,
    pub mu0_weighted: Report,
    /// Present when Z is observed on every trial control row.
    pub empirical_bias: Option<EmpiricalBias>,
    /// Corrected ATE using the weighted μ̂₀.
    pub corrected_ate: Vec<SensitivityPoint<f64>>,
    pub asmd_convention: &'static str,
}

#[derive(Debug, Clone)]
pub struct EstimateOutcome {
    pub report: EstimateReportFile,
    pub weighting: Weighting,
}

pub fn cmd_estimate(cfg: &EstimateConfig) -> Result<EstimateOutcome> {
    let weighting = run_weighting(&cfg.weighting)?;
    let d = &weighting.input.dataset;
    let mu0_naive = naive_mu0(d).context("naive error mean")?;
    let mu0_weighted = weighted_mu0(d, &weighting.used).context("weighted error mean")?;
    let ate = naive_ate(d).context("naive ATE")?;
    let grid = match &cfg.mu1_grid {
        Some(g) => g.clone(),
        None => DEFAULT_MU1_OFFSETS
            .iter()
            .map(|o| mu0_weighted.estimate + o)
            .collect(),
    };
    let corrected = corrected_ate(d, &mu0_weighted, &grid).context("corrected ATE")?;
    let empirical_bias = match (
        empirical_mu0_bias(d, &mu0_naive),
        empirical_mu0_bias(d, &mu0_weighted),
    ) {
        (Ok(naive), Ok(weighted)) => Some(EmpiricalBias {
            mu0_rct: mu0_naive.estimate - naive,
            naive,
            weighted,
        }),
        _ => None,
    };
    let report = EstimateReportFile {
        n_validation: d.n_validation(),
        n_trial: d.n_trial(),
        covariates: d.covariate_names().to_vec(),
        membership: weighting.membership_summary()?,
        weights: weighting.weight_summary()?,
        naive_ate: ate,
        mu0_naive,
        mu0_weighted,
        empirical_bias,
        corrected_ate: corrected,
        asmd_convention: weighting.balance_pre.convention,
    };
    if let Some(dir) = &cfg.weighting.out {
        prepare_dir(dir)?;
        write_json(dir, "report.json", &report)?;
        write_balance(dir, &weighting.balance_pre, &weighting.balance_post)?;
        write_meta(dir, "estimate", cfg, None)?;
    }
    Ok(EstimateOutcome { report, weighting })
}

// ---------------------------------------------------------------- weights

#[derive(Debug, Clone, Serialize)]
pub struct WeightDiagnostics {
    pub membership: MembershipSummary,
    pub weights: WeightSummary,
    pub asmd_convention: &'static str,
}

pub fn cmd_weights(cfg: &WeightingConfig) -> Result<(Weighting, WeightDiagnostics)> {
    let weighting = run_weighting(cfg)?;
    let diag = WeightDiagnostics {
        membership: weighting.membership_summary()?,
        weights: weighting.weight_summary()?,
        asmd_convention: weighting.balance_pre.convention,
    };
    if let Some(dir) = &cfg.out {
        prepare_dir(dir)?;
        let mut w = csv_writer(dir, "weights.csv")?;
        w.write_record(["row", "S", "prob", "weight", "weight_trimmed"])?;
        let rows = weighting.input.dataset.rows();
        for (i, row) in rows.iter().enumerate() {
            w.write_record([
                i.to_string(),
                row.sample.as_str().to_string(),
                fmt_f64(weighting.probs[i]),
                fmt_f64(weighting.raw.weights()[i]),
                fmt_f64(weighting.used.weights()[i]),
            ])?;
        }
        w.flush().map_err(|e| CliError::io(dir.join("weights.csv"), e))?;
        write_balance(dir, &weighting.balance_pre, &weighting.balance_post)?;
        write_json(dir, "diagnostics.json", &diag)?;
        write_meta(dir, "weights", cfg, None)?;
    }
    Ok((weighting, diag))
}

// ---------------------------------------------------------------- dom

#[derive(Debug, Clone, Serialize)]
pub struct DomOutcome {
    pub dom: f64,
    pub n: usize,
    pub fitted_column: String,
    pub true_column: String,
}

pub fn cmd_dom(cfg: &DomConfig) -> Result<DomOutcome> {
    let f = File::open(&cfg.data).map_err(|e| CliError::io(&cfg.data, e))?;
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(f);
    let headers = rdr.headers()?.clone();
    let find = |name: &str| {
        headers
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| CliError::MissingColumn(name.to_string()))
    };
    let (fi, ti) = (find(&cfg.fitted_column)?, find(&cfg.true_column)?);
    let (mut fitted, mut truth) = (Vec::new(), Vec::new());
    for (k, rec) in rdr.records().enumerate() {
        let rec = rec?;
        for (idx, name, dest) in [
            (fi, &cfg.fitted_column, &mut fitted),
            (ti, &cfg.true_column, &mut truth),
        ] {
            let raw = rec.get(idx).unwrap_or("");
            dest.push(raw.parse::<f64>().map_err(|_| CliError::NonNumeric {
                line: k + 2,
                column: name.clone(),
                value: raw.to_string(),
            })?);
        }
    }
    let value = xportme::dom(&fitted, &truth).context("degree of misspecification")?;
    let out = DomOutcome {
        dom: value,
        n: fitted.len(),
        fitted_column: cfg.fitted_column.clone(),
        true_column: cfg.true_column.clone(),
    };
    if let Some(dir) = &cfg.out {
        prepare_dir(dir)?;
        write_json(dir, "dom.json", &out)?;
        write_meta(dir, "dom", cfg, None)?;
    }
    Ok(out)
}

// ---------------------------------------------------------------- simulate

pub const RESULT_COLUMNS: [&str; 10] = [
    "gamma1",
    "gamma2",
    "true_model",
    "estimator",
    "mean_bias",
    "abs_bias",
    "mc_se",
    "coverage",
    "asmd_true_probs",
    "failed_replicates",
];

pub const SCENARIO_COLUMNS: [&str; 8] = [
    "gamma1",
    "gamma2",
    "true_model",
    "asmd_true_probs",
    "mean_dom",
    "mean_analytic_bias",
    "failed_replicates",
    "error",
];

#[derive(Debug, Clone)]
pub struct SimulateOutcome {
    pub scenarios: Vec<ScenarioSpec>,
    /// One entry per scenario, in grid order.
    pub results: Vec<std::result::Result<ScenarioOutcome, String>>,
}

impl SimulateOutcome {
    pub fn failed_scenarios(&self) -> usize {
        self.results.iter().filter(|r| r.is_err()).count()
    }

    /// `results.csv` rows: one per scenario and estimator.
    pub fn result_rows(&self) -> Vec<[String; 10]> {
        let mut rows = Vec::new();
        for (spec, res) in self.scenarios.iter().zip(&self.results) {
            let head = [
                spec.gamma1.to_string(),
                spec.gamma2.to_string(),
                spec.true_model.index().to_string(),
            ];
            for est in spec.estimators() {
                let [g1, g2, m] = head.clone();
                let row = match res {
                    Ok(r) => {
                        let s = r.summary(est);
                        let get = |f: fn(&EstimatorSummary<f64>) -> f64| {
                            s.map_or(String::new(), |s| fmt_f64(f(s)))
                        };
                        [
                            g1,
                            g2,
                            m,
                            est.label().to_string(),
                            get(|s| s.mean_bias),
                            get(|s| s.abs_mean_bias),
                            get(|s| s.mc_se),
                            get(|s| s.coverage),
                            fmt_f64(r.asmd_true_probs),
                            r.failed_replicates.to_string(),
                        ]
                    }
                    Err(_) => [
                        g1,
                        g2,
                        m,
                        est.label().to_string(),
                        String::new(),
                        String::new(),
                        String::new(),
                        String::new(),
                        String::new(),
                        spec.replicates.to_string(),
                    ],
                };
                rows.push(row);
            }
        }
        rows
    }

    pub fn scenario_rows(&self) -> Vec<[String; 8]> {
        self.scenarios
            .iter()
            .zip(&self.results)
            .map(|(spec, res)| {
                let head = [
                    spec.gamma1.to_string(),
                    spec.gamma2.to_string(),
                    spec.true_model.index().to_string(),
                ];
                let [g1, g2, m] = head;
                match res {
                    Ok(r) => [
                        g1,
                        g2,
                        m,
                        fmt_f64(r.asmd_true_probs),
                        r.mean_dom.map(fmt_f64).unwrap_or_default(),
                        fmt_f64(r.mean_analytic_bias),
                        r.failed_replicates.to_string(),
                        r.first_failure.clone().unwrap_or_default(),
                    ],
                    Err(e) => [
                        g1,
                        g2,
                        m,
                        String::new(),
                        String::new(),
                        String::new(),
                        spec.replicates.to_string(),
                        e.clone(),
                    ],
                }
            })
            .collect()
    }

    pub fn summary(&self, index: usize, which: Estimator) -> Option<&EstimatorSummary<f64>> {
        self.results.get(index)?.as_ref().ok()?.summary(which)
    }
}

/// Scenario grid for a config, in (γ₁, γ₂, model) order.
pub fn simulation_grid(cfg: &SimulateConfig) -> Result<Vec<ScenarioSpec>> {
    let forms = cfg.forms()?;
    let mut template = ScenarioSpec::new(0.0, 0.0, forms[0]).with_sizes(cfg.pop_size, cfg.n, cfg.replicates);
    template.outcome_noise_var = cfg.outcome_noise_var;
    let grid = build_grid(&template, &cfg.gamma1, &cfg.gamma2, &forms, cfg.seed);
    for spec in &grid {
        spec.validate().map_err(|e| CliError::Config(e.to_string()))?;
    }
    Ok(grid)
}

pub fn cmd_simulate(cfg: &SimulateConfig) -> Result<SimulateOutcome> {
    let scenarios = simulation_grid(cfg)?;
    let results = run_grid::<f64>(&scenarios, cfg.threads)
        .context("simulation")?
        .into_iter()
        .map(|r| r.map_err(|e| e.to_string()))
        .collect();
    let outcome = SimulateOutcome { scenarios, results };
    if let Some(dir) = &cfg.out {
        prepare_dir(dir)?;
        let mut w = csv_writer(dir, "results.csv")?;
        w.write_record(RESULT_COLUMNS)?;
        for row in outcome.result_rows() {
            w.write_record(&row)?;
        }
        w.flush().map_err(|e| CliError::io(dir.join("results.csv"), e))?;
        let mut w = csv_writer(dir, "scenarios.csv")?;
        w.write_record(SCENARIO_COLUMNS)?;
        for row in outcome.scenario_rows() {
            w.write_record(&row)?;
        }
        w.flush().map_err(|e| CliError::io(dir.join("scenarios.csv"), e))?;
        let notes = serde_json::json!({
            "scenarios": outcome.scenarios.len(),
            "failed_scenarios": outcome.failed_scenarios(),
            "scenario_seeds": outcome.scenarios.iter().map(|s| s.seed).collect::<Vec<_>>(),
        });
        write_meta(dir, "simulate", cfg, Some(notes))?;
    }
    Ok(outcome)
}
