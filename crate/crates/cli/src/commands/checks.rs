use std::path::PathBuf;
use std::time::Instant;

use rand::Rng;
use serde::Serialize;
use serde_json::{json, Value};

use conclab_core::chaos::{convex_poincare_check, diag_comparison_check, entropy_variational_check, khinchin_check, mls_check, ChaosProblem};
use conclab_core::covariance::decoupling_check;
use conclab_core::distributions::{CoordinateLaw, ProductDistribution};
use conclab_core::fixtures::{random_family, random_psd_family, random_symmetric};
use conclab_core::ising::{conditional_plus_prob, exact_distribution, heat_bath_transition, spins_of, sweep_transition, IsingModel};
use conclab_core::montecarlo::RngStream;

use crate::error::{CliError, CliResult};
use crate::report::{num, ReportWriter, Table, RESULTS};
use crate::ChecksArgs;

pub const COLUMNS: &str = "results.csv columns:
  check        mls | entropy_variational | khinchin | convex_poincare | diag_comparison | decoupling |
               heat_bath_invariance | conditional
  parameters   case description (semicolon separated key=value pairs)
  margin       slack of the inequality; nonnegative up to rounding when it holds
               (khinchin: ratio - 1/sqrt(2); ising checks: minus the absolute deviation)
  status       pass when margin >= the check's tolerance, fail otherwise
Tolerances: mls -1e-10, convex_poincare 0, heat_bath_invariance -1e-10, all others -1e-12.";

/// Case counts of the full suite; `--quick` runs a fifth of each.
pub struct Sizes {
    pub mls_families: usize,
    pub entropy_pairs: usize,
    pub khinchin: usize,
    pub poincare: usize,
    pub diag_families: usize,
    pub decoupling: usize,
    pub ising_models: usize,
}

impl Sizes {
    pub fn full() -> Self {
        Sizes { mls_families: 20, entropy_pairs: 100, khinchin: 100, poincare: 100, diag_families: 50, decoupling: 200, ising_models: 5 }
    }

    pub fn quick() -> Self {
        let f = Self::full();
        let q = |v: usize| (v / 5).max(1);
        Sizes {
            mls_families: q(f.mls_families),
            entropy_pairs: q(f.entropy_pairs),
            khinchin: q(f.khinchin),
            poincare: q(f.poincare),
            diag_families: q(f.diag_families),
            decoupling: q(f.decoupling),
            ising_models: q(f.ising_models),
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct GroupSummary {
    pub check: String,
    pub cases: usize,
    pub failures: usize,
    pub min_margin: f64,
    pub tolerance: f64,
    pub runtime_ms: u64,
}

struct Suite {
    table: Table,
    groups: Vec<GroupSummary>,
}

impl Suite {
    /// Runs one group of cases, each producing `(parameters, margin)`.
    fn group(&mut self, check: &str, tolerance: f64, cases: impl FnOnce() -> CliResult<Vec<(String, f64)>>) -> CliResult<()> {
        let start = Instant::now();
        let rows = cases()?;
        let runtime_ms = start.elapsed().as_millis() as u64;
        let mut summary = GroupSummary { check: check.into(), cases: rows.len(), failures: 0, min_margin: f64::INFINITY, tolerance, runtime_ms };
        for (params, margin) in rows {
            let pass = margin >= tolerance;
            summary.failures += usize::from(!pass);
            summary.min_margin = summary.min_margin.min(margin);
            self.table.push(vec![check.into(), params, num(margin), if pass { "pass" } else { "fail" }.into()]);
        }
        self.groups.push(summary);
        Ok(())
    }
}

fn three_point<R: Rng>(rng: &mut R) -> CoordinateLaw {
    let p: f64 = rng.random_range(0.1..0.9);
    let a: f64 = rng.random_range(0.5..2.0);
    CoordinateLaw::FiniteSupport { atoms: vec![(-a, p / 2.0), (0.0, 1.0 - p), (a, p / 2.0)] }
}

pub fn execute(seed: u64, sizes: &Sizes) -> CliResult<(Table, Vec<GroupSummary>)> {
    let mut suite = Suite { table: Table::new(&["check", "parameters", "margin", "status"]), groups: Vec::new() };

    suite.group("mls", -1e-10, || {
        let mut rng = RngStream::new(seed, 1);
        let dist = ProductDistribution::iid(8, CoordinateLaw::Rademacher)?;
        let mut out = Vec::new();
        for f in 0..sizes.mls_families {
            let problem = ChaosProblem::new(random_family(3, 8, &mut rng), dist.clone())?;
            for lambda in [0.1, 0.5, 1.0] {
                out.push((format!("family={f};n=8;members=3;lambda={lambda}"), mls_check(&problem, lambda)?));
            }
        }
        Ok(out)
    })?;

    suite.group("entropy_variational", -1e-12, || {
        let mut rng = RngStream::new(seed, 2);
        let mut out = Vec::new();
        for k in 0..sizes.entropy_pairs {
            let m = rng.random_range(2..=8usize);
            let raw: Vec<f64> = (0..m).map(|_| rng.random_range(0.05..1.0)).collect();
            let total: f64 = raw.iter().sum();
            let probs: Vec<f64> = raw.iter().map(|p| p / total).collect();
            let y: Vec<f64> = (0..m).map(|_| rng.random_range(-3.0..3.0)).collect();
            let w: Vec<f64> = (0..m).map(|_| rng.random_range(-3.0..3.0)).collect();
            let lambda = rng.random_range(-2.0..2.0);
            out.push((format!("pair={k};atoms={m};lambda={lambda}"), entropy_variational_check(&y, &w, &probs, lambda)?));
        }
        Ok(out)
    })?;

    suite.group("khinchin", -1e-12, || {
        let mut rng = RngStream::new(seed, 3);
        (0..sizes.khinchin)
            .map(|k| Ok((format!("matrix={k};dim=10"), khinchin_check(&random_symmetric(10, &mut rng))? - std::f64::consts::FRAC_1_SQRT_2)))
            .collect()
    })?;

    suite.group("convex_poincare", 0.0, || {
        let mut rng = RngStream::new(seed, 4);
        (0..sizes.poincare)
            .map(|k| Ok((format!("family={k};dim=10;members=3"), convex_poincare_check(&random_family(3, 10, &mut rng))?)))
            .collect()
    })?;

    suite.group("diag_comparison", -1e-12, || {
        let mut rng = RngStream::new(seed, 5);
        let mut out = Vec::new();
        for f in 0..sizes.diag_families {
            let family = random_psd_family(3, 8, &mut rng);
            out.push((format!("family={f};n=8;law=rademacher"), diag_comparison_check(&family, &CoordinateLaw::Rademacher)?));
            let law = three_point(&mut rng);
            let desc = match &law {
                CoordinateLaw::FiniteSupport { atoms } => format!("three_point(a={},p0={})", atoms[2].0, atoms[1].1),
                _ => unreachable!(),
            };
            out.push((format!("family={f};n=8;law={desc}"), diag_comparison_check(&family, &law)?));
        }
        Ok(out)
    })?;

    suite.group("decoupling", -1e-12, || {
        let mut rng = RngStream::new(seed, 6);
        let mut out = Vec::new();
        for k in 0..sizes.decoupling {
            let n = [4, 8, 12][k % 3];
            let a: Vec<f64> = (0..n).map(|_| rng.random_range(-1.0..1.0)).collect();
            let b: Vec<f64> = (0..n).map(|_| rng.random_range(-1.0..1.0)).collect();
            let delta = 1.0 - rng.random::<f64>();
            out.push((format!("case={k};n={n};delta={delta}"), decoupling_check(&a, &b, delta)?.margin));
        }
        Ok(out)
    })?;

    let mut rng = RngStream::new(seed, 7);
    let models: Vec<IsingModel> = (0..sizes.ising_models)
        .map(|_| {
            let rho = rng.random_range(0.1..0.9);
            IsingModel::random_dobrushin(6, rho, 0.5, &mut rng)
        })
        .collect::<conclab_core::Result<_>>()?;

    suite.group("heat_bath_invariance", -1e-10, || {
        let mut out = Vec::new();
        for (k, model) in models.iter().enumerate() {
            let dist = exact_distribution(model)?;
            let pi = dist.probs();
            let dev = |next: &[f64]| next.iter().zip(pi).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
            for i in 0..model.n() {
                out.push((format!("model={k};n=6;site={i}"), -dev(&heat_bath_transition(model, pi, i)?)));
            }
            out.push((format!("model={k};n=6;sweep"), -dev(&sweep_transition(model, pi)?)));
        }
        Ok(out)
    })?;

    suite.group("conditional", -1e-12, || {
        let mut rng = RngStream::new(seed, 8);
        let mut out = Vec::new();
        for (k, model) in models.iter().enumerate() {
            let dist = exact_distribution(model)?;
            let n = model.n();
            for _ in 0..10 {
                let state = rng.random_range(0..1usize << n);
                let i = rng.random_range(0..n);
                let sigma = spins_of(state, n);
                let (plus, minus) = (dist.probs()[state | 1 << i], dist.probs()[state & !(1 << i)]);
                let margin = -(conditional_plus_prob(model, &sigma, i)? - plus / (plus + minus)).abs();
                out.push((format!("model={k};n={n};state={state};site={i}"), margin));
            }
        }
        Ok(out)
    })?;

    Ok((suite.table, suite.groups))
}

#[derive(Debug, Serialize)]
struct Resolved {
    seed: u64,
    quick: bool,
}

pub fn run(args: &ChecksArgs) -> CliResult<()> {
    let out = args.out.clone().unwrap_or_else(|| PathBuf::from("conclab-out").join("checks"));
    let mut writer = ReportWriter::create(&out)?;
    let sizes = if args.quick { Sizes::quick() } else { Sizes::full() };
    let (table, groups) = execute(args.seed, &sizes)?;
    writer.write_table(RESULTS, &table)?;
    let failures: usize = groups.iter().map(|g| g.failures).sum();
    for g in &groups {
        println!("{:<22} cases={:<4} failures={} min_margin={:e}", g.check, g.cases, g.failures, g.min_margin);
    }
    let summary: Value = json!({ "groups": groups, "failures": failures });
    writer.finish("checks", &Resolved { seed: args.seed, quick: args.quick }, Some(args.seed), summary)?;
    if failures > 0 {
        return Err(CliError::Failed(format!("{failures} inequality checks failed; see {}", out.join(RESULTS).display())));
    }
    Ok(())
}
