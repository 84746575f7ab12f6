//! Flat key-value experiment configuration.
//!
//! One `key = value` per line, `#` starts a comment, vectors are comma
//! separated. Unknown or malformed fields are rejected with a diagnostic
//! naming the offending key. `scenario` is required; everything else has a
//! scenario-dependent default.
//!
//! Recognized keys:
//!
//! | key                | value                                   | default              |
//! |--------------------|-----------------------------------------|----------------------|
//! | `scenario`         | `sparse` \| `bpsk` \| `custom`          | required             |
//! | `m`, `n`           | measurement / symbol counts             | 8x10 (sparse/custom), 20x10 (bpsk) |
//! | `snr_grid_db`      | comma list of SNR levels in dB          | `0,5,...,50`         |
//! | `instances_per_snr`| instances per SNR level                 | `500`                |
//! | `strategies`       | comma list of estimator names           | all strategies + `lmmse` |
//! | `master_seed`      | 64-bit unsigned seed                    | `1`                  |
//! | `max_sweeps`       | sweep cap per run                       | `200`                |
//! | `tol`              | convergence tolerance                   | `1e-8`               |
//! | `output_path`      | output directory                        | `out`                |
//! | `emit_svg`         | `true` \| `false`                       | `false`              |
//! | `prior_weights`\*  | comma list (custom scenario only)       | —                    |
//! | `prior_means`\*    | comma list (custom scenario only)       | —                    |
//! | `prior_vars`\*     | comma list (custom scenario only)       | —                    |

use std::collections::HashMap;
use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use revamp::oracle::MAX_ASSIGNMENTS;
use revamp::prior::MixturePrior;
use revamp::strategy::Strategy;

use crate::error::{BenchError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Scenario {
    Sparse,
    Bpsk,
    Custom,
}

impl Scenario {
    pub fn name(&self) -> &'static str {
        match self {
            Scenario::Sparse => "sparse",
            Scenario::Bpsk => "bpsk",
            Scenario::Custom => "custom",
        }
    }
}

impl fmt::Display for Scenario {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Scenario {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "sparse" => Ok(Scenario::Sparse),
            "bpsk" => Ok(Scenario::Bpsk),
            "custom" => Ok(Scenario::Custom),
            other => Err(format!(
                "unknown scenario `{other}`; expected sparse, bpsk or custom"
            )),
        }
    }
}

/// Estimators the harness can run: the EP strategies plus the LMMSE baseline.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Estimator {
    Strategy(Strategy),
    Lmmse,
}

impl Estimator {
    pub fn name(&self) -> &'static str {
        match self {
            Estimator::Strategy(s) => s.name(),
            Estimator::Lmmse => "lmmse",
        }
    }

    pub fn all() -> Vec<Estimator> {
        let mut out: Vec<Estimator> = Strategy::ALL
            .iter()
            .copied()
            .map(Estimator::Strategy)
            .collect();
        out.push(Estimator::Lmmse);
        out
    }
}

impl fmt::Display for Estimator {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Estimator {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        if s == "lmmse" {
            return Ok(Estimator::Lmmse);
        }
        s.parse::<Strategy>().map(Estimator::Strategy).map_err(|_| {
            let mut names: Vec<&str> = Strategy::ALL.iter().map(|st| st.name()).collect();
            names.push("lmmse");
            format!(
                "unknown estimator `{s}`; expected one of {}",
                names.join(", ")
            )
        })
    }
}

#[derive(Debug, Clone)]
pub struct ExperimentConfig {
    pub scenario: Scenario,
    pub m: usize,
    pub n: usize,
    pub snr_grid_db: Vec<f64>,
    pub instances_per_snr: usize,
    pub strategies: Vec<Estimator>,
    pub master_seed: u64,
    pub max_sweeps: usize,
    pub tol: f64,
    pub output_path: PathBuf,
    pub emit_svg: bool,
    /// Per-symbol prior for the `custom` scenario (same mixture for every
    /// symbol); ignored otherwise.
    pub custom_prior: Option<MixturePrior>,
}

impl ExperimentConfig {
    fn scenario_defaults(scenario: Scenario) -> Self {
        let (m, n) = match scenario {
            Scenario::Bpsk => (20, 10),
            Scenario::Sparse | Scenario::Custom => (8, 10),
        };
        Self {
            scenario,
            m,
            n,
            snr_grid_db: (0..=10).map(|i| 5.0 * i as f64).collect(),
            instances_per_snr: 500,
            strategies: Estimator::all(),
            master_seed: 1,
            max_sweeps: 200,
            tol: 1e-8,
            output_path: PathBuf::from("out"),
            emit_svg: false,
            custom_prior: None,
        }
    }

    pub fn sparse_defaults() -> Self {
        Self::scenario_defaults(Scenario::Sparse)
    }

    pub fn bpsk_defaults() -> Self {
        Self::scenario_defaults(Scenario::Bpsk)
    }

    pub fn custom_defaults(prior: MixturePrior) -> Self {
        let mut cfg = Self::scenario_defaults(Scenario::Custom);
        cfg.custom_prior = Some(prior);
        cfg
    }

    pub fn from_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| {
            BenchError::Config(format!("cannot read config file {}: {e}", path.display()))
        })?;
        Self::parse_str(&text)
    }

    pub fn parse_str(text: &str) -> Result<Self> {
        let mut fields: HashMap<&str, &str> = HashMap::new();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let Some((key, value)) = line.split_once('=') else {
                return Err(BenchError::Config(format!(
                    "line {}: expected `key = value`, got `{line}`",
                    lineno + 1
                )));
            };
            let key = key.trim();
            let value = value.trim();
            if fields.insert(key, value).is_some() {
                return Err(BenchError::Config(format!("field `{key}`: duplicated")));
            }
        }

        let known = [
            "scenario",
            "m",
            "n",
            "snr_grid_db",
            "instances_per_snr",
            "strategies",
            "master_seed",
            "max_sweeps",
            "tol",
            "output_path",
            "emit_svg",
            "prior_weights",
            "prior_means",
            "prior_vars",
        ];
        for key in fields.keys() {
            if !known.contains(key) {
                return Err(BenchError::Config(format!("field `{key}`: unknown key")));
            }
        }

        let scenario: Scenario = fields
            .get("scenario")
            .ok_or_else(|| BenchError::Config("field `scenario`: missing (required)".into()))?
            .parse()
            .map_err(|e| BenchError::Config(format!("field `scenario`: {e}")))?;

        let mut cfg = Self::scenario_defaults(scenario);
        if let Some(v) = fields.get("m") {
            cfg.m = parse_scalar(v, "m")?;
        }
        if let Some(v) = fields.get("n") {
            cfg.n = parse_scalar(v, "n")?;
        }
        if let Some(v) = fields.get("snr_grid_db") {
            cfg.snr_grid_db = parse_list(v, "snr_grid_db")?;
        }
        if let Some(v) = fields.get("instances_per_snr") {
            cfg.instances_per_snr = parse_scalar(v, "instances_per_snr")?;
        }
        if let Some(v) = fields.get("strategies") {
            cfg.strategies = parse_estimators(v)?;
        }
        if let Some(v) = fields.get("master_seed") {
            cfg.master_seed = parse_scalar(v, "master_seed")?;
        }
        if let Some(v) = fields.get("max_sweeps") {
            cfg.max_sweeps = parse_scalar(v, "max_sweeps")?;
        }
        if let Some(v) = fields.get("tol") {
            cfg.tol = parse_scalar(v, "tol")?;
        }
        if let Some(v) = fields.get("output_path") {
            cfg.output_path = PathBuf::from(v);
        }
        if let Some(v) = fields.get("emit_svg") {
            cfg.emit_svg = parse_scalar(v, "emit_svg")?;
        }

        let prior_keys = ["prior_weights", "prior_means", "prior_vars"];
        if scenario == Scenario::Custom {
            let mut parts = Vec::new();
            for key in prior_keys {
                let v = fields.get(key).ok_or_else(|| {
                    BenchError::Config(format!("field `{key}`: required for the custom scenario"))
                })?;
                parts.push(parse_list(v, key)?);
            }
            let [w, m, s] = <[Vec<f64>; 3]>::try_from(parts).expect("three lists");
            cfg.custom_prior = Some(MixturePrior::new(w, m, s).map_err(|e| {
                BenchError::Config(format!("fields `prior_*`: invalid mixture: {e}"))
            })?);
        } else {
            for key in prior_keys {
                if fields.contains_key(key) {
                    return Err(BenchError::Config(format!(
                        "field `{key}`: only valid for the custom scenario"
                    )));
                }
            }
        }

        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if self.m < 1 {
            return Err(BenchError::Config("field `m`: must be at least 1".into()));
        }
        if self.n < 1 {
            return Err(BenchError::Config("field `n`: must be at least 1".into()));
        }
        if self.instances_per_snr < 1 {
            return Err(BenchError::Config(
                "field `instances_per_snr`: must be at least 1".into(),
            ));
        }
        if self.snr_grid_db.is_empty() {
            return Err(BenchError::Config(
                "field `snr_grid_db`: must be non-empty".into(),
            ));
        }
        if self.snr_grid_db.iter().any(|v| !v.is_finite()) {
            return Err(BenchError::Config(
                "field `snr_grid_db`: entries must be finite".into(),
            ));
        }
        if self.strategies.is_empty() {
            return Err(BenchError::Config(
                "field `strategies`: must be non-empty".into(),
            ));
        }
        for (i, a) in self.strategies.iter().enumerate() {
            if self.strategies[..i].contains(a) {
                return Err(BenchError::Config(format!(
                    "field `strategies`: `{a}` listed twice"
                )));
            }
        }
        if !(self.tol > 0.0) || !self.tol.is_finite() {
            return Err(BenchError::Config(
                "field `tol`: must be positive and finite".into(),
            ));
        }
        if self.max_sweeps < 1 {
            return Err(BenchError::Config(
                "field `max_sweeps`: must be at least 1".into(),
            ));
        }
        if self.scenario == Scenario::Custom && self.custom_prior.is_none() {
            return Err(BenchError::Config(
                "fields `prior_*`: required for the custom scenario".into(),
            ));
        }
        // The reference estimate enumerates component assignments; refuse
        // configurations it cannot handle.
        let components: u128 = match self.scenario {
            Scenario::Sparse | Scenario::Bpsk => 2,
            Scenario::Custom => self
                .custom_prior
                .as_ref()
                .expect("checked above")
                .num_components() as u128,
        };
        let mut assignments: u128 = 1;
        for _ in 0..self.n {
            assignments = assignments.saturating_mul(components);
        }
        if assignments > MAX_ASSIGNMENTS {
            return Err(BenchError::Config(format!(
                "field `n`: {assignments} component assignments exceed the oracle limit of {MAX_ASSIGNMENTS}"
            )));
        }
        Ok(())
    }
}

fn parse_scalar<T: FromStr>(value: &str, key: &str) -> Result<T>
where
    T::Err: fmt::Display,
{
    value
        .parse()
        .map_err(|e| BenchError::Config(format!("field `{key}`: invalid value `{value}` ({e})")))
}

fn parse_list(value: &str, key: &str) -> Result<Vec<f64>> {
    value
        .split(',')
        .map(|part| {
            let part = part.trim();
            part.parse::<f64>()
                .map_err(|_| BenchError::Config(format!("field `{key}`: invalid entry `{part}`")))
        })
        .collect()
}

fn parse_estimators(value: &str) -> Result<Vec<Estimator>> {
    value
        .split(',')
        .map(|part| {
            part.trim()
                .parse::<Estimator>()
                .map_err(|e| BenchError::Config(format!("field `strategies`: {e}")))
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_a_full_config() {
        let cfg = ExperimentConfig::parse_str(
            "# comment\n\
             scenario = sparse\n\
             m = 8\n\
             n = 10          # trailing comment\n\
             snr_grid_db = 0, 5, 10\n\
             instances_per_snr = 7\n\
             strategies = lmmse, acrevamp\n\
             master_seed = 42\n\
             max_sweeps = 50\n\
             tol = 1e-6\n\
             output_path = results\n\
             emit_svg = true\n",
        )
        .unwrap();
        assert_eq!(cfg.scenario, Scenario::Sparse);
        assert_eq!((cfg.m, cfg.n), (8, 10));
        assert_eq!(cfg.snr_grid_db, vec![0.0, 5.0, 10.0]);
        assert_eq!(cfg.instances_per_snr, 7);
        assert_eq!(
            cfg.strategies,
            vec![Estimator::Lmmse, Estimator::Strategy(Strategy::AcRevamp)]
        );
        assert_eq!(cfg.master_seed, 42);
        assert_eq!(cfg.max_sweeps, 50);
        assert_eq!(cfg.tol, 1e-6);
        assert!(cfg.emit_svg);
        assert_eq!(cfg.output_path, PathBuf::from("results"));
    }

    #[test]
    fn defaults_depend_on_scenario() {
        let sparse = ExperimentConfig::parse_str("scenario = sparse").unwrap();
        assert_eq!((sparse.m, sparse.n), (8, 10));
        assert_eq!(sparse.snr_grid_db.len(), 11);
        assert_eq!(sparse.instances_per_snr, 500);
        assert_eq!(sparse.strategies.len(), 8);

        let bpsk = ExperimentConfig::parse_str("scenario = bpsk").unwrap();
        assert_eq!((bpsk.m, bpsk.n), (20, 10));
    }

    #[test]
    fn custom_scenario_requires_prior_fields() {
        let err = ExperimentConfig::parse_str("scenario = custom").unwrap_err();
        assert!(err.to_string().contains("prior_weights"), "{err}");

        let cfg = ExperimentConfig::parse_str(
            "scenario = custom\n\
             prior_weights = 1\n\
             prior_means = 0\n\
             prior_vars = 1\n",
        )
        .unwrap();
        let prior = cfg.custom_prior.unwrap();
        assert_eq!(prior.num_components(), 1);
    }

    #[test]
    fn diagnostics_name_the_offending_field() {
        let err = ExperimentConfig::parse_str("scenario = sparse\ntol = abc").unwrap_err();
        assert!(err.to_string().contains("`tol`"), "{err}");

        let err = ExperimentConfig::parse_str("scenario = sparse\nbogus = 1").unwrap_err();
        assert!(err.to_string().contains("`bogus`"), "{err}");

        let err = ExperimentConfig::parse_str("scenario = sparse\nstrategies = warp").unwrap_err();
        assert!(err.to_string().contains("`warp`"), "{err}");

        let err = ExperimentConfig::parse_str("scenario = sparse\nprior_means = 0").unwrap_err();
        assert!(err.to_string().contains("`prior_means`"), "{err}");

        let err = ExperimentConfig::parse_str("scenario = sparse\nn = 0").unwrap_err();
        assert!(err.to_string().contains("`n`"), "{err}");
    }

    #[test]
    fn oracle_guard_rejects_unenumerable_sizes() {
        let err = ExperimentConfig::parse_str("scenario = bpsk\nm = 25\nn = 25").unwrap_err();
        assert!(err.to_string().contains("oracle limit"), "{err}");
    }
}
