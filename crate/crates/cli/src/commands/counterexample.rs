use std::path::PathBuf;

use serde::Serialize;
use serde_json::json;

use conclab_core::distributions::{counterexample_max_moments, psi_alpha_norm, tail_regularity_witness, CoordinateLaw, ProductDistribution};
use conclab_core::montecarlo::{mean_stderr, replicate, RngStream};

use super::opt_num;
use crate::error::{CliError, CliResult};
use crate::report::{num, ReportWriter, Table, RESULTS};
use crate::CounterexampleArgs;

pub const COLUMNS: &str = "results.csv columns (one row per (r, n)):
  r, n             two-point law parameter and number of coordinates
  violation        whether P(X^2 > A t) > P(X^2 > t)/A for some t >= E|X|
  witness          such a t (empty when none)
  psi2             psi_2 norm of the two-point law
  l1, l2           E max X_i^2 and the L2 norm of max X_i^2 in closed form
  mc_l1, mc_l1_se  Monte Carlo mean of max X_i^2 and its standard error
  mc_l2sq, mc_l2sq_se  Monte Carlo mean of (max X_i^2)^2 and its standard error
  z_l1, z_l2sq     (Monte Carlo - closed form) / standard error (empty when the sample has no spread)";

/// Arguments as recorded in the manifest.
#[derive(Debug, Serialize)]
struct Resolved<'a> {
    r: &'a [f64],
    a: f64,
    n: &'a [usize],
    reps: usize,
    seed: u64,
}

pub fn run(args: &CounterexampleArgs) -> CliResult<()> {
    if args.n.is_empty() || args.n.contains(&0) {
        return Err(CliError::Config("--n needs positive values".into()));
    }
    if args.reps < 2 {
        return Err(CliError::Config("--reps must be at least 2".into()));
    }
    let out = args.out.clone().unwrap_or_else(|| PathBuf::from("conclab-out").join("counterexample"));
    let mut writer = ReportWriter::create(&out)?;
    let mut table = Table::new(&[
        "r", "n", "violation", "witness", "psi2", "l1", "l2", "mc_l1", "mc_l1_se", "mc_l2sq", "mc_l2sq_se", "z_l1", "z_l2sq",
    ]);
    let mut cases = Vec::new();
    for (ri, &r) in args.r.iter().enumerate() {
        let law = CoordinateLaw::TwoPointSymmetric { r };
        let witness = tail_regularity_witness(&law, args.a)?;
        let psi2 = psi_alpha_norm(&law, 2.0)?;
        println!("r={r} A={} violation={}", args.a, witness.is_some());
        for (ni, &n) in args.n.iter().enumerate() {
            let (l1, l2) = counterexample_max_moments(r, n)?;
            let dist = ProductDistribution::iid(n, law.clone())?;
            let rng = RngStream::new(args.seed, (ri * args.n.len() + ni) as u64);
            let maxima = replicate(args.reps, &rng, |s| dist.sample(s).iter().fold(0.0f64, |m, v| m.max(v * v)))?;
            let (m1, se1) = mean_stderr(&maxima);
            let squares: Vec<f64> = maxima.iter().map(|v| v * v).collect();
            let (m2, se2) = mean_stderr(&squares);
            // a sample without any large atom has zero spread and no z-score
            let z = |diff: f64, se: f64| (se > 0.0).then(|| diff / se);
            let (z1, z2) = (z(m1 - l1, se1), z(m2 - l2 * l2, se2));
            table.push(vec![
                num(r),
                n.to_string(),
                witness.is_some().to_string(),
                witness.map(num).unwrap_or_default(),
                num(psi2),
                num(l1),
                num(l2),
                num(m1),
                num(se1),
                num(m2),
                num(se2),
                opt_num(z1),
                opt_num(z2),
            ]);
            cases.push(json!({
                "r": r, "n": n, "violation": witness.is_some(), "witness": witness, "psi2": psi2,
                "l1": l1, "l2": l2, "mc_l1": m1, "mc_l1_se": se1, "mc_l2sq": m2, "mc_l2sq_se": se2, "z_l1": z1, "z_l2sq": z2,
            }));
        }
    }
    writer.write_table(RESULTS, &table)?;
    let resolved = Resolved { r: &args.r, a: args.a, n: &args.n, reps: args.reps, seed: args.seed };
    writer.finish("counterexample", &resolved, Some(args.seed), json!({ "cases": cases }))?;
    Ok(())
}
