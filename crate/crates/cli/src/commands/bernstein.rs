use std::path::PathBuf;

use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use conclab_core::bounds::BoundParams;
use conclab_core::covariance::{bernstein_experiment, BernsteinEnsemble, BernsteinReport};
use conclab_core::montecarlo::RngStream;

use super::{emit_plot, tail_cells};
use crate::config::{self, GridConfig};
use crate::error::{CliError, CliResult};
use crate::plot::{Chart, Series, Style};
use crate::report::{num, ReportWriter, Table, RESULTS};
use crate::RunArgs;

pub const COLUMNS: &str = "results.csv columns:
  eff_rank          effective rank of R = sum_i E X_i^2
  u                 deviation level
  count, reps       replicates with ||S|| >= u, total replicates
  p_hat             empirical P(||S|| >= u)
  ci_low, ci_high   Clopper-Pearson 95% interval
  rhs               bound at the configured constants
  valid             whether u lies in the validity region
  rhs_shared        bound at the constant fitted on the fit_rank ensemble (empty if that fit failed)";

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Spectrum {
    /// `diag(κ, 1, …, 1)` with `κ` solved for the effective rank.
    #[default]
    Spiked,
    /// Projection onto `eff_rank` coordinates.
    Flat,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BernsteinConfig {
    pub seed: u64,
    pub reps: usize,
    pub n: usize,
    pub n_terms: usize,
    #[serde(default)]
    pub spectrum: Spectrum,
    pub eff_ranks: Vec<f64>,
    /// Effective rank whose fitted constant is shared with the others.
    pub fit_rank: f64,
    /// Grid in multiples of σ for each ensemble.
    pub u_grid: GridConfig,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output_dir: Option<PathBuf>,
    #[serde(default)]
    pub params: BoundParams,
}

fn ensemble(cfg: &BernsteinConfig, rank: f64) -> CliResult<BernsteinEnsemble> {
    Ok(match cfg.spectrum {
        Spectrum::Spiked => BernsteinEnsemble::spiked_for_rank(cfg.n, rank, cfg.n_terms)?,
        Spectrum::Flat => {
            if rank.fract() != 0.0 || rank < 1.0 {
                return Err(CliError::Config(format!("flat spectra need integer effective ranks, got {rank}")));
            }
            BernsteinEnsemble::flat(cfg.n, rank as usize, cfg.n_terms)?
        }
    })
}

pub struct BernsteinOutput {
    pub table: Table,
    pub summary: Value,
    pub chart: Chart,
    pub fit_failure: Option<String>,
}

pub fn execute(cfg: &BernsteinConfig) -> CliResult<BernsteinOutput> {
    let fit_index = cfg
        .eff_ranks
        .iter()
        .position(|&r| r == cfg.fit_rank)
        .ok_or_else(|| CliError::Config(format!("fit_rank {} is not among eff_ranks", cfg.fit_rank)))?;
    let multiples = cfg.u_grid.values()?;
    let root = RngStream::new(cfg.seed, 0);
    let mut reports: Vec<BernsteinReport> = Vec::new();
    for (k, &rank) in cfg.eff_ranks.iter().enumerate() {
        let ens = ensemble(cfg, rank)?;
        let sigma = ens.sigma2().sqrt();
        let grid: Vec<f64> = multiples.iter().map(|m| m * sigma).collect();
        reports.push(bernstein_experiment(&ens, &grid, cfg.reps, &root.substream(k as u64), &cfg.params)?);
    }
    let shared = reports[fit_index].fit.map(|f| BoundParams { c: f.c, ..cfg.params });

    let mut table = Table::new(&["eff_rank", "u", "count", "reps", "p_hat", "ci_low", "ci_high", "rhs", "valid", "rhs_shared"]);
    let mut per_rank = Vec::new();
    let mut series = Vec::new();
    let mut all_dominated = shared.is_some();
    for (rank, rep) in cfg.eff_ranks.iter().zip(&reports) {
        let shared_vals = match &shared {
            Some(p) => Some(rep.tail.t_grid.iter().map(|&u| rep.rhs(u, p)).collect::<conclab_core::Result<Vec<_>>>()?),
            None => None,
        };
        for k in 0..rep.tail.len() {
            let mut row = vec![num(*rank)];
            row.extend(tail_cells(&rep.tail, k));
            row.extend([
                num(rep.bound[k].value),
                rep.bound[k].valid.to_string(),
                shared_vals.as_ref().map(|v| num(v[k].value)).unwrap_or_default(),
            ]);
            table.push(row);
        }
        let domination = match &shared {
            Some(p) => Some(rep.dominated_by(p)?),
            None => None,
        };
        if let Some((ok, valid)) = domination {
            all_dominated &= ok && valid > 0;
        }
        let sigma = rep.sigma2.sqrt();
        series.push(Series {
            label: format!("r={rank} empirical"),
            points: rep.tail.t_grid.iter().zip(&rep.tail.point).map(|(&u, &p)| (u / sigma, p)).collect(),
            style: Style::Markers,
        });
        if let Some(v) = &shared_vals {
            series.push(Series {
                label: format!("r={rank} shared bound"),
                points: rep.tail.t_grid.iter().zip(v).filter(|(_, b)| b.valid).map(|(&u, b)| (u / sigma, b.value)).collect(),
                style: Style::Dashed,
            });
        }
        per_rank.push(json!({
            "eff_rank": rep.eff_rank,
            "sigma2": rep.sigma2,
            "sigma2_mc": rep.sigma2_mc,
            "psi1_max": { "point": rep.psi1_max.point, "low": rep.psi1_max.low, "high": rep.psi1_max.high },
            "fit": rep.fit.map(|f| json!({ "c": f.c, "at_cap": f.at_cap, "valid_points": f.valid_points })),
            "fit_error": rep.fit_error,
            "dominated_by_shared": domination.map(|d| d.0),
            "shared_valid_points": domination.map(|d| d.1),
        }));
    }
    let fit_failure = reports[fit_index].fit_error.clone();
    let summary = json!({
        "n": cfg.n,
        "n_terms": cfg.n_terms,
        "reps": cfg.reps,
        "fit_rank": cfg.fit_rank,
        "shared_params": shared,
        "dimension_free": all_dominated,
        "ensembles": per_rank,
    });
    let chart = Chart {
        title: "Matrix Bernstein tails".into(),
        x_label: "u / sigma".into(),
        y_label: "P(||S|| >= u)".into(),
        log_x: false,
        log_y: true,
        band: None,
        series,
        annotation: shared.map(|p| format!("shared c = {:.4}, C = {}", p.c, p.big_c)),
    };
    Ok(BernsteinOutput { table, summary, chart, fit_failure })
}

pub fn run(args: &RunArgs) -> CliResult<()> {
    let (mut cfg, base): (BernsteinConfig, PathBuf) = config::load(&args.config)?;
    args.overrides().apply(&mut cfg.seed, &mut cfg.reps, &mut cfg.output_dir);
    let out = config::output_dir(&cfg.output_dir, &base, "bernstein");
    let mut writer = ReportWriter::create(&out)?;
    let result = execute(&cfg)?;
    writer.write_table(RESULTS, &result.table)?;
    emit_plot(&mut writer, "bernstein.svg", &result.chart)?;
    writer.finish("bernstein", &cfg, Some(cfg.seed), result.summary.clone())?;
    println!("bernstein: dimension_free={} ({})", result.summary["dimension_free"], out.display());
    if let Some(e) = result.fit_failure {
        return Err(CliError::Capacity(format!("fit on eff_rank {}: {e}", cfg.fit_rank)));
    }
    Ok(())
}
