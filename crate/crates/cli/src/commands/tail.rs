use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use conclab_core::bounds::{adamczak_rhs, fit_constant, hanson_wright_rhs, mainthm_rhs, talagrand_rhs, BoundParams, BoundValue, TailCurve};
use conclab_core::chaos::{sup_norm_ax, truncation_level, ChaosProblem};
use conclab_core::distributions::{psi_alpha_norm, Laws, ProductDistribution};
use conclab_core::montecarlo::{crossover_fit, estimate_mean, estimate_tail, RngStream};

use super::{emit_plot, fit_json, opt_num, survival_chart, tail_cells};
use crate::config::{self, DistConfig, FamilyConfig, GridConfig};
use crate::error::{CliError, CliResult};
use crate::report::{num, ReportWriter, Table, RESULTS};
use crate::RunArgs;

pub const COLUMNS: &str = "results.csv columns:
  t                 deviation level
  count, reps       replicates with Z >= t, total replicates
  p_hat             empirical P(Z >= t)
  ci_low, ci_high   Clopper-Pearson 95% interval
  <bound>_rhs       bound at the configured constants
  <bound>_fitted    bound at its fitted constant (empty when the fit failed)
  <bound>_valid     whether t lies in the bound's validity region
Bounds: hanson_wright, talagrand, adamczak, mainthm.
Z = sup_A (X^T A X - E X^T A X) over the configured family.";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BoundKind {
    HansonWright,
    Talagrand,
    Adamczak,
    Mainthm,
}

impl BoundKind {
    pub fn name(self) -> &'static str {
        match self {
            BoundKind::HansonWright => "hanson_wright",
            BoundKind::Talagrand => "talagrand",
            BoundKind::Adamczak => "adamczak",
            BoundKind::Mainthm => "mainthm",
        }
    }
}

/// Units of the configured t grid.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GridUnits {
    #[default]
    Absolute,
    /// Multiples of `sup_A ‖A‖_HS`.
    Hs,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TailConfig {
    pub seed: u64,
    pub reps: usize,
    /// Replicates for `E sup‖AX‖` and the truncation level.
    #[serde(default = "default_scale_reps")]
    pub scale_reps: usize,
    #[serde(default = "all_bounds")]
    pub bounds: Vec<BoundKind>,
    #[serde(default)]
    pub t_units: GridUnits,
    pub t_grid: GridConfig,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output_dir: Option<PathBuf>,
    #[serde(default)]
    pub params: BoundParams,
    pub distribution: DistConfig,
    pub family: FamilyConfig,
}

fn default_scale_reps() -> usize {
    20_000
}

fn all_bounds() -> Vec<BoundKind> {
    vec![BoundKind::HansonWright, BoundKind::Talagrand, BoundKind::Adamczak, BoundKind::Mainthm]
}

/// Scale parameters entering the bounds.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Scales {
    pub k: f64,
    pub hs: f64,
    pub op: f64,
    pub e_sup_ax: f64,
    pub e_sup_ax_stderr: f64,
    pub m: f64,
}

impl Scales {
    pub fn eval(&self, kind: BoundKind, t: f64, params: &BoundParams) -> conclab_core::Result<BoundValue> {
        match kind {
            BoundKind::HansonWright => hanson_wright_rhs(t, self.k, self.hs, self.op, params),
            BoundKind::Talagrand => talagrand_rhs(t, self.e_sup_ax, self.op, params),
            BoundKind::Adamczak => adamczak_rhs(t, self.k, self.e_sup_ax, self.op, params),
            BoundKind::Mainthm => mainthm_rhs(t, self.m, self.e_sup_ax, self.op, params),
        }
    }
}

fn max_psi2(dist: &ProductDistribution) -> CliResult<f64> {
    let laws: Vec<_> = match dist.laws() {
        Laws::Iid(l) => vec![l.clone()],
        Laws::Independent(ls) => ls.clone(),
    };
    let mut k = 0.0f64;
    for l in &laws {
        k = k.max(psi_alpha_norm(l, 2.0)?);
    }
    Ok(k)
}

pub struct TailOutput {
    pub table: Table,
    pub summary: Value,
    pub chart: crate::plot::Chart,
    pub fit_failures: Vec<String>,
}

pub fn execute(cfg: &TailConfig, base: &Path) -> CliResult<TailOutput> {
    if cfg.bounds.is_empty() {
        return Err(CliError::Config("at least one bound is required".into()));
    }
    let dist = cfg.distribution.build()?;
    let family = cfg.family.build(dist.n(), cfg.seed, base)?;
    let problem = ChaosProblem::new(family.clone(), dist.clone())?;
    let root = RngStream::new(cfg.seed, 0);

    let hs = family.iter().map(|a| a.hs_norm()).fold(0.0, f64::max);
    let op = family.sup_spectral_norm();
    let unit = match cfg.t_units {
        GridUnits::Absolute => 1.0,
        GridUnits::Hs => hs,
    };
    let t_grid: Vec<f64> = cfg.t_grid.values()?.into_iter().map(|t| t * unit).collect();
    if t_grid[0] < 0.0 {
        return Err(CliError::Config("t grid must be nonnegative".into()));
    }

    let tail = estimate_tail(|x| problem.z_value(x).map(|z| z.value).unwrap_or(f64::NAN), &dist, &t_grid, cfg.reps, &root.substream(0))?;
    let e_sup = estimate_mean(|x| sup_norm_ax(&family, x).unwrap_or(f64::NAN), &dist, cfg.scale_reps, &root.substream(1))?;
    let m = truncation_level(&dist, cfg.scale_reps, &root.substream(2))?;
    let scales = Scales { k: max_psi2(&dist)?, hs, op, e_sup_ax: e_sup.mean, e_sup_ax_stderr: e_sup.stderr, m: m.level };

    let upper = TailCurve::new(tail.t_grid.clone(), tail.ci_high.clone())?;
    let mut header: Vec<String> = ["t", "count", "reps", "p_hat", "ci_low", "ci_high"].iter().map(|s| s.to_string()).collect();
    let mut columns: Vec<(Vec<BoundValue>, Vec<Option<f64>>)> = Vec::new();
    let mut fits = serde_json::Map::new();
    let mut curves = Vec::new();
    let mut fit_failures = Vec::new();
    for &kind in &cfg.bounds {
        let name = kind.name();
        header.extend([format!("{name}_rhs"), format!("{name}_fitted"), format!("{name}_valid")]);
        let at_params = t_grid.iter().map(|&t| scales.eval(kind, t, &cfg.params)).collect::<conclab_core::Result<Vec<_>>>()?;
        let fit = fit_constant(&upper, |t, c| scales.eval(kind, t, &BoundParams { c, ..cfg.params })).map_err(|e| e.to_string());
        let fitted: Vec<Option<f64>> = match &fit {
            Ok(f) => {
                let p = BoundParams { c: f.c, ..cfg.params };
                let vals = t_grid.iter().map(|&t| scales.eval(kind, t, &p)).collect::<conclab_core::Result<Vec<_>>>()?;
                curves.push((format!("{name} (c={:.3})", f.c), vals.clone()));
                vals.into_iter().map(|v| Some(v.value)).collect()
            }
            Err(e) => {
                fit_failures.push(format!("{name}: {e}"));
                vec![None; t_grid.len()]
            }
        };
        fits.insert(name.to_string(), fit_json(&fit));
        columns.push((at_params, fitted));
    }

    let mut table = Table::new(&header);
    for k in 0..t_grid.len() {
        let mut row = tail_cells(&tail, k);
        for (rhs, fitted) in &columns {
            row.extend([num(rhs[k].value), opt_num(fitted[k]), rhs[k].valid.to_string()]);
        }
        table.push(row);
    }

    let (xs, ys): (Vec<f64>, Vec<f64>) =
        (0..t_grid.len()).filter(|&k| tail.counts[k] >= 10 && t_grid[k] > 0.0).map(|k| (t_grid[k], -tail.point[k].ln())).unzip();
    let crossover = crossover_fit(&xs, &ys);

    let summary = json!({
        "n": dist.n(),
        "members": family.len(),
        "reps": cfg.reps,
        "scales": scales,
        "truncation_exact": m.exact,
        "fits": fits,
        "crossover": crossover,
    });
    let chart = survival_chart("Tail of the chaos supremum", "t", &tail, curves);
    Ok(TailOutput { table, summary, chart, fit_failures })
}

pub fn run(args: &RunArgs) -> CliResult<()> {
    let (mut cfg, base): (TailConfig, PathBuf) = config::load(&args.config)?;
    args.overrides().apply(&mut cfg.seed, &mut cfg.reps, &mut cfg.output_dir);
    let out = config::output_dir(&cfg.output_dir, &base, "tail");
    let mut writer = ReportWriter::create(&out)?;
    let result = execute(&cfg, &base)?;
    writer.write_table(RESULTS, &result.table)?;
    emit_plot(&mut writer, "tail.svg", &result.chart)?;
    writer.finish("tail", &cfg, Some(cfg.seed), result.summary)?;
    println!("tail: {} grid points written to {}", result.table.rows.len(), out.display());
    if !result.fit_failures.is_empty() {
        return Err(CliError::Capacity(result.fit_failures.join("; ")));
    }
    Ok(())
}
