//! Versioned JSON run configuration.

use std::path::PathBuf;

use polaron_core::{Grid, Params};
use serde::{Deserialize, Serialize};

pub const SCHEMA_VERSION: u32 = 1;
/// Largest composite dimension a configuration may request for dense work.
pub const MAX_DENSE_DIM: usize = 6000;
pub const MAX_PARALLELISM: usize = 256;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Experiment {
    VerifyIdentities,
    VerifySplit,
    VerifyH2,
    VerifyH3,
    MarkovianRun,
    ExactVsMarkovian,
    TwoQubitDemo,
    Sweep,
}

impl Experiment {
    pub fn name(self) -> &'static str {
        match self {
            Self::VerifyIdentities => "verify-identities",
            Self::VerifySplit => "verify-split",
            Self::VerifyH2 => "verify-h2",
            Self::VerifyH3 => "verify-h3",
            Self::MarkovianRun => "markovian-run",
            Self::ExactVsMarkovian => "exact-vs-markovian",
            Self::TwoQubitDemo => "two-qubit-demo",
            Self::Sweep => "sweep",
        }
    }

    /// Experiments run by the `verify` verb.
    pub const VERIFICATION_SUITE: [Experiment; 4] =
        [Self::VerifyIdentities, Self::VerifySplit, Self::VerifyH2, Self::VerifyH3];
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSpec {
    pub g: Vec<f64>,
    pub j_star: Vec<f64>,
    pub cutoffs: Vec<usize>,
    #[serde(default = "default_budget")]
    pub budget: usize,
}

impl SweepSpec {
    pub fn points(&self) -> usize {
        self.g.len() * self.j_star.len() * self.cutoffs.len()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub schema_version: u32,
    pub experiment: Experiment,
    pub model: Params,
    #[serde(default = "default_grid")]
    pub grid: Grid,
    /// Phonon cutoffs for the split and second-order ladders.
    #[serde(default = "default_ladder")]
    pub cutoff_ladder: Vec<usize>,
    /// Lattice sizes for the hopping-string identities.
    #[serde(default = "default_identity_sites")]
    pub identity_sites: Vec<usize>,
    /// Lattice sizes for the second-order commutation check.
    #[serde(default = "default_commutation_sites")]
    pub commutation_sites: Vec<usize>,
    /// Lattice sizes for the third-order commutation check.
    #[serde(default = "default_h3_sites")]
    pub h3_sites: Vec<usize>,
    #[serde(default = "default_h3_cutoff")]
    pub h3_cutoff: usize,
    /// Couplings compared by the exact-oracle ripple trend.
    #[serde(default = "default_coupling_ladder")]
    pub coupling_ladder: Vec<f64>,
    #[serde(default)]
    pub sweep: Option<SweepSpec>,
    #[serde(default = "default_output_dir")]
    pub output_dir: PathBuf,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_parallelism")]
    pub parallelism: usize,
}

fn default_budget() -> usize {
    256
}

fn default_grid() -> Grid {
    Grid {
        t_start: 0.0,
        t_end: 100.0,
        n_steps: 10_000,
        sample_stride: 100,
    }
}

fn default_ladder() -> Vec<usize> {
    vec![4, 6, 8, 10]
}

fn default_identity_sites() -> Vec<usize> {
    vec![4, 5]
}

fn default_commutation_sites() -> Vec<usize> {
    vec![3, 4, 5]
}

fn default_h3_sites() -> Vec<usize> {
    vec![3, 4]
}

fn default_h3_cutoff() -> usize {
    12
}

fn default_coupling_ladder() -> Vec<f64> {
    vec![0.5, 1.0, 2.0]
}

fn default_output_dir() -> PathBuf {
    PathBuf::from("polaron-output")
}

fn default_parallelism() -> usize {
    1
}

#[derive(Debug)]
pub struct ConfigError(pub String);

impl std::fmt::Display for ConfigError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "invalid configuration: {}", self.0)
    }
}

impl std::error::Error for ConfigError {}

fn invalid<T>(msg: impl Into<String>) -> Result<T, ConfigError> {
    Err(ConfigError(msg.into()))
}

impl RunConfig {
    /// Parses a configuration, or the `config` member of a run manifest.
    pub fn from_json(text: &str) -> Result<Self, ConfigError> {
        let value: serde_json::Value =
            serde_json::from_str(text).map_err(|e| ConfigError(format!("not valid JSON: {e}")))?;
        let body = match value.get("config") {
            Some(inner) if value.get("experiment").is_none() => inner.clone(),
            _ => value,
        };
        serde_json::from_value(body).map_err(|e| ConfigError(e.to_string()))
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("configuration serializes")
    }

    /// Checks every field the given experiments need before any computation.
    pub fn validate_for(&self, experiments: &[Experiment]) -> Result<(), ConfigError> {
        if self.schema_version != SCHEMA_VERSION {
            return invalid(format!(
                "schema_version {} is not supported (expected {SCHEMA_VERSION})",
                self.schema_version
            ));
        }
        self.model.validate().map_err(|e| ConfigError(format!("model: {e}")))?;
        self.grid.validate().map_err(|e| ConfigError(format!("grid: {e}")))?;
        if self.parallelism == 0 || self.parallelism > MAX_PARALLELISM {
            return invalid(format!("parallelism must be in 1..={MAX_PARALLELISM}"));
        }
        for &e in experiments {
            self.validate_experiment(e)?;
        }
        Ok(())
    }

    fn validate_experiment(&self, e: Experiment) -> Result<(), ConfigError> {
        let n = self.model.n_sites;
        let m = self.model.phonon_cutoff;
        match e {
            Experiment::VerifyIdentities => {
                sites_in(&self.identity_sites, "identity_sites", 3, 10)?;
            }
            Experiment::VerifySplit => {
                ladder(&self.cutoff_ladder, 1)?;
                let top = *self.cutoff_ladder.last().expect("non-empty");
                dense_dim(n, 2 * top, "cutoff_ladder (reference at twice the cutoff)")?;
                if m < 2 {
                    return invalid("model.phonon_cutoff must be at least 2 for the first-order check");
                }
                dense_dim(n, m, "model.phonon_cutoff")?;
            }
            Experiment::VerifyH2 => {
                ladder(&self.cutoff_ladder, 2)?;
                let top = *self.cutoff_ladder.last().expect("non-empty");
                dense_dim(n, top, "cutoff_ladder")?;
                sites_in(&self.commutation_sites, "commutation_sites", 2, 10)?;
            }
            Experiment::VerifyH3 => {
                sites_in(&self.h3_sites, "h3_sites", 2, 5)?;
                if self.h3_cutoff < 5 {
                    return invalid("h3_cutoff must be at least 5");
                }
                for &s in &self.h3_sites {
                    if (self.h3_cutoff + 1).checked_pow(s as u32).is_none_or(|d| d > 1 << 20) {
                        return invalid(format!("h3_cutoff {} is too large for N = {s}", self.h3_cutoff));
                    }
                }
            }
            Experiment::MarkovianRun => {
                if n > 6 {
                    return invalid("markovian-run supports model.n_sites <= 6");
                }
            }
            Experiment::ExactVsMarkovian => {
                two_sites(n, e)?;
                if m < 1 {
                    return invalid("exact-vs-markovian needs model.phonon_cutoff >= 1");
                }
                dense_dim(n, m, "model.phonon_cutoff")?;
                aligned_grid(&self.grid)?;
                if self.coupling_ladder.is_empty() {
                    return invalid("coupling_ladder must not be empty");
                }
                if self.coupling_ladder.iter().any(|g| !(g.is_finite() && *g >= 0.0)) {
                    return invalid("coupling_ladder entries must be finite and non-negative");
                }
                if self.coupling_ladder.windows(2).any(|w| w[1] <= w[0]) {
                    return invalid("coupling_ladder must be strictly increasing");
                }
            }
            Experiment::TwoQubitDemo => {
                two_sites(n, e)?;
                if m < 1 {
                    return invalid("two-qubit-demo needs model.phonon_cutoff >= 1");
                }
                dense_dim(n, m, "model.phonon_cutoff")?;
            }
            Experiment::Sweep => {
                let Some(s) = &self.sweep else {
                    return invalid("sweep experiment needs a `sweep` section");
                };
                if s.g.is_empty() || s.j_star.is_empty() || s.cutoffs.is_empty() {
                    return invalid("sweep ranges must be non-empty");
                }
                if s.points() > s.budget {
                    return invalid(format!("sweep has {} points, above the budget of {}", s.points(), s.budget));
                }
                if n > 4 {
                    return invalid("sweep supports model.n_sites <= 4");
                }
                if s.g.iter().any(|g| !(g.is_finite() && *g >= 0.0)) {
                    return invalid("sweep.g entries must be finite and non-negative");
                }
                if s.j_star.iter().any(|j| !(j.is_finite() && *j > 0.0)) {
                    return invalid("sweep.j_star entries must be positive");
                }
                for &c in &s.cutoffs {
                    if c < 2 {
                        return invalid("sweep.cutoffs entries must be at least 2");
                    }
                    dense_dim(n, c, "sweep.cutoffs")?;
                }
                if n == 2 {
                    aligned_grid(&self.grid)?;
                }
            }
        }
        Ok(())
    }
}

fn sites_in(sites: &[usize], field: &str, lo: usize, hi: usize) -> Result<(), ConfigError> {
    if sites.is_empty() {
        return invalid(format!("{field} must not be empty"));
    }
    if sites.iter().any(|&s| s < lo || s > hi) {
        return invalid(format!("{field} entries must be in {lo}..={hi}"));
    }
    Ok(())
}

fn ladder(l: &[usize], min: usize) -> Result<(), ConfigError> {
    if l.is_empty() {
        return invalid("cutoff_ladder must not be empty");
    }
    if l[0] < min {
        return invalid(format!("cutoff_ladder entries must be at least {min}"));
    }
    if l.windows(2).any(|w| w[1] <= w[0]) {
        return invalid("cutoff_ladder must be strictly increasing");
    }
    Ok(())
}

fn dense_dim(n: usize, cutoff: usize, field: &str) -> Result<(), ConfigError> {
    let dim = (cutoff + 1)
        .checked_pow(n as u32)
        .and_then(|d| d.checked_mul(1 << n));
    match dim {
        Some(d) if d <= MAX_DENSE_DIM => Ok(()),
        _ => invalid(format!("{field}: composite dimension exceeds {MAX_DENSE_DIM}")),
    }
}

fn two_sites(n: usize, e: Experiment) -> Result<(), ConfigError> {
    if n != 2 {
        return invalid(format!("{} needs model.n_sites = 2", e.name()));
    }
    Ok(())
}

fn aligned_grid(grid: &Grid) -> Result<(), ConfigError> {
    if grid.t_start != 0.0 || !grid.n_steps.is_multiple_of(grid.sample_stride) {
        return invalid("grid must start at 0 with n_steps divisible by sample_stride");
    }
    Ok(())
}
