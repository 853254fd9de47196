use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use conclab_core::ising::{
    dobrushin_check, exact_distribution, glauber_sample, heat_bath_transition, index_of, ising_chaos_experiment, log_sobolev_fit,
    sweep_transition, tabulate, IsingFixture, IsingModel, IsingSampler, MAX_LOG_SOBOLEV_DIM,
};
use conclab_core::montecarlo::RngStream;
use conclab_core::SymMatrix;

use super::{emit_plot, opt_num, survival_chart, tail_cells};
use crate::config::{self, resolve, FamilyConfig, GridConfig};
use crate::error::{CliError, CliResult};
use crate::report::{num, ReportWriter, Table, RESULTS};
use crate::RunArgs;

pub const COLUMNS: &str = "results.csv columns:
  model             index into the configured models list
  rho               Dobrushin margin the model is checked against
  t                 deviation level
  count, reps       replicates with Z >= t, total replicates
  p_hat             empirical P(Z >= t), Z = sup_A s^T A s - E sup_A s^T A s
  ci_low, ci_high   Clopper-Pearson 95% interval
  rhs               bound at C = 1
  valid             validity flag of the bound
  rhs_fitted        bound at the fitted constant (empty when the fit failed)
Glauber, transition and log-Sobolev diagnostics are reported in manifest.json.";

/// Ising model fixture; `rho` is the margin in `‖J‖_{1→1} ≤ 1 − ρ`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum ModelConfig {
    CurieWeiss {
        n: usize,
        rho: f64,
        field: f64,
    },
    RandomDobrushin {
        n: usize,
        rho: f64,
        alpha: f64,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        seed: Option<u64>,
    },
    Inline {
        rho: f64,
        #[serde(rename = "J")]
        j: Vec<Vec<f64>>,
        h: Vec<f64>,
    },
    /// JSON file with fields `n`, `J` (row-major) and `h`.
    Fixture { rho: f64, path: PathBuf },
}

impl ModelConfig {
    pub fn rho(&self) -> f64 {
        match self {
            ModelConfig::CurieWeiss { rho, .. }
            | ModelConfig::RandomDobrushin { rho, .. }
            | ModelConfig::Inline { rho, .. }
            | ModelConfig::Fixture { rho, .. } => *rho,
        }
    }

    pub fn build(&self, run_seed: u64, base: &Path) -> CliResult<IsingModel> {
        Ok(match self {
            ModelConfig::CurieWeiss { n, rho, field } => IsingModel::curie_weiss(*n, *rho, *field)?,
            ModelConfig::RandomDobrushin { n, rho, alpha, seed } => {
                IsingModel::random_dobrushin(*n, *rho, *alpha, &mut RngStream::new(seed.unwrap_or(run_seed), 0x15))?
            }
            ModelConfig::Inline { j, h, .. } => IsingModel::new(SymMatrix::from_rows(j)?, h.clone())?,
            ModelConfig::Fixture { path, .. } => {
                let path = resolve(base, path);
                let text = std::fs::read_to_string(&path).map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
                let fixture: IsingFixture = serde_json::from_str(&text).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
                IsingModel::from_fixture(&fixture)?
            }
        })
    }
}

/// Glauber chain against the exact law of model `model`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TvConfig {
    #[serde(default)]
    pub model: usize,
    pub samples: usize,
    /// Sweeps before the first sample.
    pub burn_in: usize,
    /// Sweeps between samples.
    #[serde(default = "one")]
    pub thin: usize,
}

fn one() -> usize {
    1
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LogSobolevConfig {
    pub lambdas: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct IsingConfig {
    pub seed: u64,
    pub reps: usize,
    pub t_grid: GridConfig,
    #[serde(default = "exact")]
    pub sampler: IsingSampler,
    /// Apply every single-site kernel and one sweep to the exact law of each model.
    #[serde(default)]
    pub transition_check: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output_dir: Option<PathBuf>,
    pub models: Vec<ModelConfig>,
    pub family: FamilyConfig,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tv: Option<TvConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub log_sobolev: Option<LogSobolevConfig>,
}

fn exact() -> IsingSampler {
    IsingSampler::Exact
}

pub struct IsingOutput {
    pub table: Table,
    pub summary: Value,
    pub charts: Vec<(String, crate::plot::Chart)>,
    pub fit_failures: Vec<String>,
}

pub fn execute(cfg: &IsingConfig, base: &Path) -> CliResult<IsingOutput> {
    if cfg.models.is_empty() {
        return Err(CliError::Config("at least one model is required".into()));
    }
    let models = cfg.models.iter().map(|m| m.build(cfg.seed, base)).collect::<CliResult<Vec<_>>>()?;
    let n = models[0].n();
    if models.iter().any(|m| m.n() != n) {
        return Err(CliError::Config("all models must have the same number of spins".into()));
    }
    let family = cfg.family.build(n, cfg.seed, base)?;
    let t_grid = cfg.t_grid.values()?;
    let root = RngStream::new(cfg.seed, 0);

    let mut table = Table::new(&["model", "rho", "t", "count", "reps", "p_hat", "ci_low", "ci_high", "rhs", "valid", "rhs_fitted"]);
    let mut per_model = Vec::new();
    let mut charts = Vec::new();
    let mut fit_failures = Vec::new();
    for (k, (mc, model)) in cfg.models.iter().zip(&models).enumerate() {
        let dob = dobrushin_check(model, mc.rho())?;
        if !dob.satisfied {
            log::warn!("model {k}: ||J||_1->1 = {} exceeds 1 - rho = {}", dob.one_to_one_norm, 1.0 - mc.rho());
        }
        let rep = ising_chaos_experiment(model, &family, &t_grid, cfg.reps, cfg.sampler, &root.substream(k as u64))?;
        let fitted = match &rep.fit {
            Some(f) => {
                let p = conclab_core::bounds::BoundParams { big_c: f.c, ..Default::default() };
                let vals = t_grid
                    .iter()
                    .map(|&t| conclab_core::bounds::ising_rhs(t, rep.e_sup_a_sigma, rep.sup_op, &p))
                    .collect::<conclab_core::Result<Vec<_>>>()?;
                Some(vals)
            }
            None => {
                fit_failures.push(format!("model {k}: {}", rep.fit_error.clone().unwrap_or_default()));
                None
            }
        };
        for i in 0..t_grid.len() {
            let mut row = vec![k.to_string(), num(mc.rho())];
            row.extend(tail_cells(&rep.tail, i));
            let (rhs, valid) = rep.bound.get(i).map(|b| (num(b.value), b.valid.to_string())).unwrap_or_default();
            row.extend([rhs, valid, opt_num(fitted.as_ref().map(|v| v[i].value))]);
            table.push(row);
        }
        let curves = match (&fitted, &rep.fit) {
            (Some(v), Some(f)) => vec![(format!("bound (C={:.3})", f.c), v.clone())],
            _ => Vec::new(),
        };
        charts.push((format!("ising_model{k}.svg"), survival_chart(&format!("Ising chaos tail, model {k}"), "t", &rep.tail, curves)));
        per_model.push(json!({
            "rho": mc.rho(),
            "dobrushin": { "one_to_one_norm": dob.one_to_one_norm, "h_inf": dob.h_inf, "satisfied": dob.satisfied },
            "mean_z": rep.mean_z,
            "e_sup_a_sigma": rep.e_sup_a_sigma,
            "sup_op": rep.sup_op,
            "fit": rep.fit.map(|f| json!({ "C": f.c, "at_cap": f.at_cap, "valid_points": f.valid_points })),
            "fit_error": rep.fit_error,
        }));
    }

    let mut summary = serde_json::Map::new();
    summary.insert("n".into(), json!(n));
    summary.insert("reps".into(), json!(cfg.reps));
    summary.insert("models".into(), Value::Array(per_model));

    if let Some(tv) = &cfg.tv {
        let model = models.get(tv.model).ok_or_else(|| CliError::Config(format!("tv.model {} is out of range", tv.model)))?;
        let dist = exact_distribution(model)?;
        let samples = glauber_sample(model, tv.burn_in, tv.thin, tv.samples, &mut RngStream::new(cfg.seed, 1))?;
        let mut counts = vec![0usize; 1 << n];
        for s in &samples {
            counts[index_of(s)] += 1;
        }
        let distance = dist.tv_to_counts(&counts);
        summary.insert("tv".into(), json!({ "model": tv.model, "samples": tv.samples, "burn_in_sweeps": tv.burn_in, "thin": tv.thin, "tv": distance }));
    }

    if cfg.transition_check {
        let mut worst = Vec::new();
        for model in &models {
            let dist = exact_distribution(model)?;
            let pi = dist.probs();
            let dev = |next: &[f64]| next.iter().zip(pi).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
            let mut m = dev(&sweep_transition(model, pi)?);
            for i in 0..n {
                m = m.max(dev(&heat_bath_transition(model, pi, i)?));
            }
            worst.push(m);
        }
        summary.insert("transition_max_deviation".into(), json!(worst));
    }

    if let Some(ls) = &cfg.log_sobolev {
        if n > MAX_LOG_SOBOLEV_DIM {
            return Err(CliError::Capacity(format!("log-Sobolev fits need n <= {MAX_LOG_SOBOLEV_DIM}")));
        }
        let tables: Vec<Vec<f64>> = family.iter().map(|a| tabulate(n, |s| a.quad_form(s))).collect();
        let mut fits = Vec::new();
        for model in &models {
            let f = log_sobolev_fit(model, &tables, &ls.lambdas)?;
            fits.push(json!({ "c": f.c, "evaluated": f.evaluated, "skipped": f.skipped }));
        }
        summary.insert("log_sobolev".into(), Value::Array(fits));
    }

    Ok(IsingOutput { table, summary: Value::Object(summary), charts, fit_failures })
}

pub fn run(args: &RunArgs) -> CliResult<()> {
    let (mut cfg, base): (IsingConfig, PathBuf) = config::load(&args.config)?;
    args.overrides().apply(&mut cfg.seed, &mut cfg.reps, &mut cfg.output_dir);
    let out = config::output_dir(&cfg.output_dir, &base, "ising");
    let mut writer = ReportWriter::create(&out)?;
    let result = execute(&cfg, &base)?;
    writer.write_table(RESULTS, &result.table)?;
    for (name, chart) in &result.charts {
        emit_plot(&mut writer, name, chart)?;
    }
    writer.finish("ising", &cfg, Some(cfg.seed), result.summary)?;
    println!("ising: {} models written to {}", cfg.models.len(), out.display());
    if !result.fit_failures.is_empty() {
        return Err(CliError::Capacity(result.fit_failures.join("; ")));
    }
    Ok(())
}
