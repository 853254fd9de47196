pub mod bernstein;
pub mod checks;
pub mod counterexample;
pub mod cov_missing;
pub mod ising;
pub mod report;
pub mod tail;

use serde_json::{json, Value};

use conclab_core::bounds::{BoundValue, ConstantFit};
use conclab_core::montecarlo::TailEstimate;

use crate::error::CliResult;
use crate::plot::{render, Band, Chart, Series, Style};
use crate::report::{num, ReportWriter};
use crate::Command;

pub fn dispatch(command: &Command) -> CliResult<()> {
    match command {
        Command::Tail(args) => tail::run(args),
        Command::CovMissing(args) => cov_missing::run(args),
        Command::Bernstein(args) => bernstein::run(args),
        Command::Ising(args) => ising::run(args),
        Command::Counterexample(args) => counterexample::run(args),
        Command::Checks(args) => checks::run(args),
        Command::Report(args) => report::run(args),
    }
}

/// `t, count, reps, p_hat, ci_low, ci_high` for grid point `k`.
pub(crate) fn tail_cells(tail: &TailEstimate, k: usize) -> Vec<String> {
    vec![
        num(tail.t_grid[k]),
        tail.counts[k].to_string(),
        tail.reps.to_string(),
        num(tail.point[k]),
        num(tail.ci_low[k]),
        num(tail.ci_high[k]),
    ]
}

pub(crate) fn fit_json(fit: &Result<ConstantFit, String>) -> Value {
    match fit {
        Ok(f) => json!({ "c": f.c, "at_cap": f.at_cap, "valid_points": f.valid_points }),
        Err(e) => json!({ "error": e }),
    }
}

pub(crate) fn opt_num(v: Option<f64>) -> String {
    v.map(num).unwrap_or_default()
}

/// Empirical survival with its CI band, plus bound curves drawn on their valid points.
pub(crate) fn survival_chart(title: &str, x_label: &str, tail: &TailEstimate, bounds: Vec<(String, Vec<BoundValue>)>) -> Chart {
    let pts = |v: &[f64]| tail.t_grid.iter().copied().zip(v.iter().copied()).collect::<Vec<_>>();
    let mut series = vec![Series { label: "empirical".into(), points: pts(&tail.point), style: Style::Markers }];
    for (label, values) in bounds {
        let points = tail.t_grid.iter().zip(&values).filter(|(_, b)| b.valid).map(|(&t, b)| (t, b.value)).collect();
        series.push(Series { label, points, style: Style::Dashed });
    }
    Chart {
        title: title.into(),
        x_label: x_label.into(),
        y_label: "P(Z >= t)".into(),
        log_x: false,
        log_y: true,
        band: Some(Band { label: "95% CI".into(), lower: pts(&tail.ci_low), upper: pts(&tail.ci_high) }),
        series,
        annotation: None,
    }
}

/// Writes the chart, or logs a warning when there is nothing to draw.
pub(crate) fn emit_plot(writer: &mut ReportWriter, name: &str, chart: &Chart) -> CliResult<()> {
    match render(chart) {
        Some(svg) => writer.write_bytes(name, svg.as_bytes()),
        None => {
            log::warn!("{name}: no plottable records, chart skipped");
            Ok(())
        }
    }
}
