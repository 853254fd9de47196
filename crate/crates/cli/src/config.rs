use std::path::{Path, PathBuf};

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use conclab_core::distributions::{CoordinateLaw, ProductDistribution};
use conclab_core::fixtures::{random_psd, random_symmetric, wigner};
use conclab_core::linalg::parse_matrix_text;
use conclab_core::montecarlo::RngStream;
use conclab_core::{MatrixFamily, SymMatrix};

use crate::error::{CliError, CliResult};

/// Stream id reserved for drawing random family fixtures.
const FAMILY_STREAM: u64 = 0xFA;

/// Reads and parses a TOML config; returns it with the directory relative paths
/// inside it resolve against.
pub fn load<T: DeserializeOwned>(path: &Path) -> CliResult<(T, PathBuf)> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
    let cfg = toml::from_str(&text).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
    let base = path.parent().map(Path::to_path_buf).unwrap_or_default();
    Ok((cfg, base))
}

/// SHA-256 of the compact JSON form of the resolved config.
pub fn config_hash<T: Serialize>(cfg: &T) -> String {
    let json = serde_json::to_string(cfg).expect("config serializes");
    Sha256::digest(json.as_bytes()).iter().map(|b| format!("{b:02x}")).collect()
}

pub fn resolve(base: &Path, p: &Path) -> PathBuf {
    if p.is_absolute() {
        p.to_path_buf()
    } else {
        base.join(p)
    }
}

/// Explicit list, or `points` values from `start` to `stop` (geometric when `log`).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum GridConfig {
    List(Vec<f64>),
    Range {
        start: f64,
        stop: f64,
        points: usize,
        #[serde(default)]
        log: bool,
    },
}

impl GridConfig {
    pub fn values(&self) -> CliResult<Vec<f64>> {
        let v = match self {
            GridConfig::List(v) => v.clone(),
            GridConfig::Range { start, stop, points, log } => {
                if *points == 0 || (*log && !(*start > 0.0 && *stop > 0.0)) {
                    return Err(CliError::Config("grid range needs points >= 1 and positive ends on a log scale".into()));
                }
                if *points == 1 {
                    vec![*start]
                } else {
                    let m = (*points - 1) as f64;
                    (0..*points)
                        .map(|k| {
                            let f = k as f64 / m;
                            if *log {
                                (start.ln() + f * (stop.ln() - start.ln())).exp()
                            } else {
                                start + f * (stop - start)
                            }
                        })
                        .collect()
                }
            }
        };
        if v.is_empty() || v.iter().any(|x| !x.is_finite()) || v.windows(2).any(|w| w[0] >= w[1]) {
            return Err(CliError::Config("grid must be nonempty, finite and strictly increasing".into()));
        }
        Ok(v)
    }
}

/// Either one iid law or one law per coordinate.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DistConfig {
    pub n: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub law: Option<CoordinateLaw>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub laws: Option<Vec<CoordinateLaw>>,
}

impl DistConfig {
    pub fn build(&self) -> CliResult<ProductDistribution> {
        match (&self.law, &self.laws) {
            (Some(l), None) => Ok(ProductDistribution::iid(self.n, l.clone())?),
            (None, Some(ls)) if ls.len() == self.n => Ok(ProductDistribution::independent(ls.clone())?),
            (None, Some(_)) => Err(CliError::Config("laws must have one entry per coordinate".into())),
            _ => Err(CliError::Config("distribution needs exactly one of `law` or `laws`".into())),
        }
    }
}

fn one() -> usize {
    1
}

/// Matrix family fixture.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum FamilyConfig {
    /// Symmetric Gaussian entries scaled by `1/√n`.
    Wigner {
        #[serde(default = "one")]
        members: usize,
        #[serde(default)]
        zero_diag: bool,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        seed: Option<u64>,
    },
    /// Unscaled symmetric Gaussian entries.
    RandomSymmetric {
        #[serde(default = "one")]
        members: usize,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        seed: Option<u64>,
    },
    RandomPsd {
        #[serde(default = "one")]
        members: usize,
        rank: usize,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        seed: Option<u64>,
    },
    Identity,
    /// One matrix text file per member.
    Files { paths: Vec<PathBuf> },
    Inline { members: Vec<Vec<Vec<f64>>> },
}

impl FamilyConfig {
    /// Random fixtures draw from `seed` (or the run seed) on a dedicated stream.
    pub fn build(&self, n: usize, run_seed: u64, base: &Path) -> CliResult<MatrixFamily> {
        let stream = |seed: &Option<u64>| RngStream::new(seed.unwrap_or(run_seed), FAMILY_STREAM);
        let members: Vec<SymMatrix> = match self {
            FamilyConfig::Wigner { members, zero_diag, seed } => {
                let mut rng = stream(seed);
                (0..*members).map(|_| wigner(n, *zero_diag, &mut rng)).collect()
            }
            FamilyConfig::RandomSymmetric { members, seed } => {
                let mut rng = stream(seed);
                (0..*members).map(|_| random_symmetric(n, &mut rng)).collect()
            }
            FamilyConfig::RandomPsd { members, rank, seed } => {
                let mut rng = stream(seed);
                (0..*members).map(|_| random_psd(n, *rank, &mut rng)).collect()
            }
            FamilyConfig::Identity => vec![SymMatrix::identity(n)],
            FamilyConfig::Files { paths } => paths
                .iter()
                .map(|p| {
                    let path = resolve(base, p);
                    let text = std::fs::read_to_string(&path).map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
                    Ok(parse_matrix_text(&text)?)
                })
                .collect::<CliResult<_>>()?,
            FamilyConfig::Inline { members } => members.iter().map(|rows| Ok(SymMatrix::from_rows(rows)?)).collect::<CliResult<_>>()?,
        };
        if members.iter().any(|m| m.dim() != n) {
            return Err(CliError::Config(format!("family members must be {n} x {n}")));
        }
        Ok(MatrixFamily::new(members)?)
    }
}

/// Command-line values that take precedence over config keys.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub seed: Option<u64>,
    pub reps: Option<usize>,
    pub out: Option<PathBuf>,
}

impl Overrides {
    /// `--out` resolved against the working directory, not the config's directory.
    pub fn out_path(&self) -> Option<PathBuf> {
        self.out.as_ref().map(|o| std::env::current_dir().map(|d| d.join(o)).unwrap_or_else(|_| o.clone()))
    }

    pub fn apply(&self, seed: &mut u64, reps: &mut usize, output_dir: &mut Option<PathBuf>) {
        if let Some(s) = self.seed {
            *seed = s;
        }
        if let Some(r) = self.reps {
            *reps = r;
        }
        if let Some(o) = self.out_path() {
            *output_dir = Some(o);
        }
    }
}

pub fn output_dir(configured: &Option<PathBuf>, base: &Path, subcommand: &str) -> PathBuf {
    match configured {
        Some(p) => resolve(base, p),
        None => PathBuf::from("conclab-out").join(subcommand),
    }
}
