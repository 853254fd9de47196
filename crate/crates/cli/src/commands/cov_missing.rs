use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use conclab_core::covariance::{
    apply_mask, estimation_error, lemma_norm_scaling, lemma_trace_scaling, missing_cov_experiment, read_samples_csv, sigma_hat, with_mask,
    unbiasedness_check, CovModel, MomentScaling, SigmaSpec, SpectrumKind,
};
use conclab_core::distributions::CoordinateLaw;
use conclab_core::montecarlo::RngStream;

use super::emit_plot;
use crate::config::{self, resolve, GridConfig};
use crate::error::{CliError, CliResult};
use crate::plot::{Chart, Series, Style};
use crate::report::{num, ReportWriter, Table, RESULTS};
use crate::RunArgs;

pub const COLUMNS: &str = "results.csv columns (one statistic per row):
  experiment   scaling | scaling_slope | lemma_trace | lemma_norm | unbiasedness | data
  n_rows       sample size N (empty when not applicable)
  delta        observation probability (empty for slopes against delta)
  statistic    median, q90, mean, stderr, bound for scaling cells;
               slope_vs_n, slope_vs_delta for scaling slopes;
               off_moment, diag_moment, off_slope, diag_slope, psd_constant for the lemmas;
               error, mc_se, sigma_norm for unbiasedness;
               error_vs_complete, complete_norm, complete_eff_rank, observed_fraction for data
  value        the statistic";

/// Covariance fixture; `eff_rank` fixes `kappa` for a spiked spectrum.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SigmaConfig {
    pub kind: SpectrumKind,
    pub n: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub kappa: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub eff_rank: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rotation_seed: Option<u64>,
}

impl SigmaConfig {
    pub fn spec(&self) -> CliResult<SigmaSpec> {
        match (self.kind, self.kappa, self.eff_rank) {
            (_, Some(kappa), None) => Ok(SigmaSpec { kind: self.kind, n: self.n, kappa, rotation_seed: self.rotation_seed }),
            (SpectrumKind::Spiked, None, Some(r)) => {
                Ok(SigmaSpec { rotation_seed: self.rotation_seed, ..SigmaSpec::spiked_with_rank(self.n, r)? })
            }
            _ => Err(CliError::Config("sigma needs exactly one of `kappa` or `eff_rank` (the latter for spiked spectra)".into())),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScalingConfig {
    pub n_rows: Vec<usize>,
    pub deltas: GridConfig,
    pub reps: usize,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LemmaVersion {
    Trace,
    Norm,
    #[default]
    Both,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LemmaConfig {
    pub deltas: GridConfig,
    pub reps: usize,
    #[serde(default)]
    pub version: LemmaVersion,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct UnbiasednessConfig {
    pub n_rows: usize,
    pub deltas: Vec<f64>,
    pub reps: usize,
}

/// Complete observations from a CSV file, masked at rate `delta`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DataConfig {
    pub path: PathBuf,
    pub delta: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CovMissingConfig {
    pub seed: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output_dir: Option<PathBuf>,
    #[serde(default = "gaussian")]
    pub law: CoordinateLaw,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sigma: Option<SigmaConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub scaling: Option<ScalingConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lemma: Option<LemmaConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub unbiasedness: Option<UnbiasednessConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub data: Option<DataConfig>,
}

fn gaussian() -> CoordinateLaw {
    CoordinateLaw::StandardGaussian
}

impl CovMissingConfig {
    fn apply_reps(&mut self, reps: usize) {
        if let Some(s) = &mut self.scaling {
            s.reps = reps;
        }
        if let Some(l) = &mut self.lemma {
            l.reps = reps;
        }
        if let Some(u) = &mut self.unbiasedness {
            u.reps = reps;
        }
    }
}

struct Rows(Table);

impl Rows {
    fn add(&mut self, experiment: &str, n_rows: Option<usize>, delta: Option<f64>, statistic: &str, value: f64) {
        self.0.push(vec![
            experiment.to_string(),
            n_rows.map(|n| n.to_string()).unwrap_or_default(),
            delta.map(num).unwrap_or_default(),
            statistic.to_string(),
            num(value),
        ]);
    }

    fn lemma(&mut self, name: &str, m: &MomentScaling) {
        for (k, &d) in m.delta_grid.iter().enumerate() {
            self.add(name, None, Some(d), "off_moment", m.off_moment[k]);
            self.add(name, None, Some(d), "diag_moment", m.diag_moment[k]);
        }
        self.add(name, None, None, "off_slope", m.off_slope);
        self.add(name, None, None, "diag_slope", m.diag_slope);
        if let Some(c) = m.psd_constant {
            self.add(name, None, None, "psd_constant", c);
        }
    }
}

pub struct CovOutput {
    pub table: Table,
    pub summary: Value,
    pub charts: Vec<(String, Chart)>,
}

pub fn execute(cfg: &CovMissingConfig, base: &Path) -> CliResult<CovOutput> {
    let model = match &cfg.sigma {
        Some(s) => Some(CovModel::from_spec(&s.spec()?, cfg.law.clone())?),
        None => None,
    };
    let need_model = |section: &str| model.as_ref().ok_or_else(|| CliError::Config(format!("[{section}] needs a [sigma] table")));
    let mut rows = Rows(Table::new(&["experiment", "n_rows", "delta", "statistic", "value"]));
    let mut summary = serde_json::Map::new();
    let mut charts = Vec::new();
    if let Some(m) = &model {
        summary.insert("eff_rank".into(), json!(m.sigma().effective_rank()?));
        summary.insert("sigma_norm".into(), json!(m.sigma().spectral_norm()));
    }

    if let Some(sc) = &cfg.scaling {
        let model = need_model("scaling")?;
        let deltas = sc.deltas.values()?;
        let report = missing_cov_experiment(model, &sc.n_rows, &deltas, sc.reps, &RngStream::new(cfg.seed, 1))?;
        for c in &report.cells {
            for (stat, v) in [("median", c.median), ("q90", c.q90), ("mean", c.mean), ("stderr", c.stderr), ("bound", c.bound)] {
                rows.add("scaling", Some(c.n_rows), Some(c.delta), stat, v);
            }
        }
        for &(d, s) in &report.slope_vs_n {
            rows.add("scaling_slope", None, Some(d), "slope_vs_n", s);
        }
        for &(n, s) in &report.slope_vs_delta {
            rows.add("scaling_slope", Some(n), None, "slope_vs_delta", s);
        }
        let series = deltas
            .iter()
            .map(|&d| Series {
                label: format!("delta={d}"),
                points: report.cells.iter().filter(|c| c.delta == d).map(|c| (c.n_rows as f64, c.median)).collect(),
                style: Style::Line,
            })
            .collect();
        let slopes: Vec<String> = report.slope_vs_n.iter().map(|(d, s)| format!("{d}: {s:.3}")).collect();
        charts.push((
            "scaling.svg".to_string(),
            Chart {
                title: "Median estimation error".into(),
                x_label: "N".into(),
                y_label: "median error".into(),
                log_x: true,
                log_y: true,
                band: None,
                series,
                annotation: Some(format!("slope vs N by delta: {}", slopes.join(", "))),
            },
        ));
        summary.insert("scaling".into(), serde_json::to_value(&report).map_err(|e| CliError::Io(e.to_string()))?);
    }

    if let Some(lc) = &cfg.lemma {
        let model = need_model("lemma")?;
        let deltas = lc.deltas.values()?;
        let mut lemma = serde_json::Map::new();
        let mut series = Vec::new();
        let mut add_series = |name: &str, m: &MomentScaling| {
            let pts = |v: &[f64]| m.delta_grid.iter().copied().zip(v.iter().copied()).collect::<Vec<_>>();
            series.push(Series { label: format!("{name} off ({:.2})", m.off_slope), points: pts(&m.off_moment), style: Style::Line });
            series.push(Series { label: format!("{name} diag ({:.2})", m.diag_slope), points: pts(&m.diag_moment), style: Style::Dashed });
        };
        if lc.version != LemmaVersion::Norm {
            let m = lemma_trace_scaling(model, &deltas, lc.reps, &RngStream::new(cfg.seed, 2))?;
            rows.lemma("lemma_trace", &m);
            add_series("trace", &m);
            lemma.insert("trace".into(), serde_json::to_value(&m).map_err(|e| CliError::Io(e.to_string()))?);
        }
        if lc.version != LemmaVersion::Trace {
            let n = model.dim();
            if n < 2 {
                return Err(CliError::Config("the norm lemma needs n >= 2".into()));
            }
            let mut u = vec![0.0; n];
            u[0] = std::f64::consts::FRAC_1_SQRT_2;
            u[1] = std::f64::consts::FRAC_1_SQRT_2;
            let m = lemma_norm_scaling(model, &u, &deltas, lc.reps, &RngStream::new(cfg.seed, 3))?;
            rows.lemma("lemma_norm", &m);
            add_series("norm", &m);
            lemma.insert("norm".into(), serde_json::to_value(&m).map_err(|e| CliError::Io(e.to_string()))?);
        }
        charts.push((
            "lemma.svg".to_string(),
            Chart {
                title: "Masked moments against delta".into(),
                x_label: "delta".into(),
                y_label: "moment".into(),
                log_x: true,
                log_y: true,
                band: None,
                series,
                annotation: Some("legend: fitted log-log slope".into()),
            },
        ));
        summary.insert("lemma".into(), Value::Object(lemma));
    }

    if let Some(uc) = &cfg.unbiasedness {
        let model = need_model("unbiasedness")?;
        let mut reports = Vec::new();
        for (k, &delta) in uc.deltas.iter().enumerate() {
            let r = unbiasedness_check(model, uc.n_rows, delta, uc.reps, &RngStream::new(cfg.seed, 4).substream(k as u64))?;
            for (stat, v) in [("error", r.error), ("mc_se", r.mc_se), ("sigma_norm", r.sigma_norm)] {
                rows.add("unbiasedness", Some(uc.n_rows), Some(delta), stat, v);
            }
            reports.push(r);
        }
        summary.insert("unbiasedness".into(), serde_json::to_value(&reports).map_err(|e| CliError::Io(e.to_string()))?);
    }

    if let Some(dc) = &cfg.data {
        let path = resolve(base, &dc.path);
        let file = std::fs::File::open(&path).map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
        let data = read_samples_csv(file)?;
        let masked = apply_mask(&data, dc.delta, &mut RngStream::new(cfg.seed, 5))?;
        let estimate = sigma_hat(&masked)?;
        let complete = sigma_hat(&with_mask(&data, vec![1; data.as_slice().len()], 1.0)?)?;
        let observed = masked.mask.iter().filter(|m| **m == 1).count() as f64 / masked.mask.len() as f64;
        let error = estimation_error(&estimate, &complete)?;
        let stats = [
            ("error_vs_complete", error),
            ("complete_norm", complete.spectral_norm()),
            ("complete_eff_rank", complete.effective_rank()?),
            ("observed_fraction", observed),
        ];
        for (stat, v) in stats {
            rows.add("data", Some(data.rows()), Some(dc.delta), stat, v);
        }
        summary.insert("data".into(), json!({ "rows": data.rows(), "cols": data.cols(), "error_vs_complete": error, "observed_fraction": observed }));
    }

    if rows.0.rows.is_empty() {
        log::warn!("cov-missing config enables no experiment section");
    }
    Ok(CovOutput { table: rows.0, summary: Value::Object(summary), charts })
}

pub fn run(args: &RunArgs) -> CliResult<()> {
    let (mut cfg, base): (CovMissingConfig, PathBuf) = config::load(&args.config)?;
    let ov = args.overrides();
    if let Some(r) = ov.reps {
        cfg.apply_reps(r);
    }
    if let Some(s) = ov.seed {
        cfg.seed = s;
    }
    if let Some(o) = ov.out_path() {
        cfg.output_dir = Some(o);
    }
    let out = config::output_dir(&cfg.output_dir, &base, "cov-missing");
    let mut writer = ReportWriter::create(&out)?;
    let result = execute(&cfg, &base)?;
    writer.write_table(RESULTS, &result.table)?;
    for (name, chart) in &result.charts {
        emit_plot(&mut writer, name, chart)?;
    }
    writer.finish("cov-missing", &cfg, Some(cfg.seed), result.summary)?;
    println!("cov-missing: {} rows written to {}", result.table.rows.len(), out.display());
    Ok(())
}
