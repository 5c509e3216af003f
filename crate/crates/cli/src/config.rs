//! JSON system configuration and its resolution against command-line
//! overrides.

use std::path::PathBuf;

use clap::ValueEnum;
use serde::Deserialize;
use sha2::{Digest, Sha256};

use randcycles::beta::{golden_ratio, greedy_map, lazy_map, BetaSystem};
use randcycles::lsv::lsv_map;
use randcycles::tolerances::{BETA_DEPTH_BOUND, DEDUPE_TOL, ENUMERATION_GUARD, MARKOV_TOL};
use randcycles::{EnumerationOptions, MarkovMap, RandomSystem, SymbolicSystem};

use crate::error::{CliError, CliResult};

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Experiment {
    Validate,
    Cycles,
    Equidistribute,
    Annealed,
    Digits,
    Stationary,
    LsvTails,
    Preimages,
}

impl Experiment {
    pub fn name(self) -> &'static str {
        match self {
            Experiment::Validate => "validate",
            Experiment::Cycles => "cycles",
            Experiment::Equidistribute => "equidistribute",
            Experiment::Annealed => "annealed",
            Experiment::Digits => "digits",
            Experiment::Stationary => "stationary",
            Experiment::LsvTails => "lsv-tails",
            Experiment::Preimages => "preimages",
        }
    }

    pub fn all_names() -> Vec<&'static str> {
        Experiment::value_variants().iter().map(|e| e.name()).collect()
    }
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum MapSpec {
    AffineMarkov {
        breakpoints: Vec<f64>,
        slopes: Vec<f64>,
        intercepts: Vec<f64>,
    },
    BetaGreedy {
        beta: f64,
    },
    BetaLazy {
        beta: f64,
    },
    Lsv {
        alpha: f64,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Tolerances {
    pub markov: f64,
    pub dedupe: f64,
    pub ulam: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances {
            markov: MARKOV_TOL,
            dedupe: DEDUPE_TOL,
            ulam: randcycles::tolerances::ULAM_TOL,
        }
    }
}

/// The document as written.
#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConfigFile {
    pub maps: Vec<MapSpec>,
    pub p: Vec<f64>,
    #[serde(default)]
    pub identify_endpoints: bool,
    pub experiment: Option<Experiment>,
    #[serde(default)]
    pub n: Vec<usize>,
    #[serde(default)]
    pub seeds: Vec<u64>,
    pub x0: Option<f64>,
    pub cells: Option<usize>,
    pub out: Option<PathBuf>,
    pub threads: Option<usize>,
    #[serde(default)]
    pub tolerances: Tolerances,
    pub tail_n_max: Option<usize>,
    pub beta_depth: Option<usize>,
}

impl ConfigFile {
    pub fn parse(text: &str) -> CliResult<Self> {
        serde_json::from_str(text).map_err(|e| CliError::Config(e.to_string()))
    }
}

/// Values given on the command line; each replaces the config field.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub experiment: Option<Experiment>,
    pub n: Option<Vec<usize>>,
    pub seeds: Option<Vec<u64>>,
    pub x0: Option<f64>,
    pub cells: Option<usize>,
    pub out: Option<PathBuf>,
    pub threads: Option<usize>,
}

pub const DEFAULT_CELLS: usize = 2048;
pub const DEFAULT_TAIL_N_MAX: usize = 1000;
pub const DEFAULT_SEED: u64 = 0;

/// Fully resolved run description.
#[derive(Debug, Clone)]
pub struct ExperimentConfig {
    pub maps: Vec<MapSpec>,
    pub system: RandomSystem,
    /// Present when the maps are a greedy and lazy pair for one β.
    pub beta_pair: Option<BetaSystem>,
    pub experiment: Experiment,
    pub n: Vec<usize>,
    pub seeds: Vec<u64>,
    pub x0: Option<f64>,
    pub cells: usize,
    pub out: PathBuf,
    pub threads: Option<usize>,
    pub tolerances: Tolerances,
    pub tail_n_max: usize,
    pub config_sha256: String,
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().map(|b| format!("{b:02x}")).collect()
}

impl ExperimentConfig {
    pub fn resolve(text: &str, ov: Overrides) -> CliResult<Self> {
        let file = ConfigFile::parse(text)?;
        let experiment = ov.experiment.or(file.experiment).ok_or_else(|| {
            CliError::Usage(format!(
                "no experiment given; valid experiments: {}",
                Experiment::all_names().join(", ")
            ))
        })?;
        if file.maps.is_empty() {
            return Err(CliError::Config("maps: at least one map is required".into()));
        }
        if file.p.len() != file.maps.len() {
            return Err(CliError::Config(format!(
                "p: {} probabilities for {} maps",
                file.p.len(),
                file.maps.len()
            )));
        }
        let n = ov.n.unwrap_or(file.n);
        if let Some(k) = n.iter().position(|&v| v == 0) {
            return Err(CliError::Config(format!("n[{k}]: periods must be at least 1")));
        }
        let mut seeds = ov.seeds.unwrap_or(file.seeds);
        if seeds.is_empty() {
            seeds.push(DEFAULT_SEED);
        }
        let cells = ov.cells.or(file.cells).unwrap_or(DEFAULT_CELLS);
        if cells < 2 {
            return Err(CliError::Config(format!("cells: need at least 2, got {cells}")));
        }
        if ov.threads.or(file.threads) == Some(0) {
            return Err(CliError::Config("threads: must be at least 1".into()));
        }
        let depth = file.beta_depth.unwrap_or(BETA_DEPTH_BOUND);
        let maps = file
            .maps
            .iter()
            .enumerate()
            .map(|(k, m)| build_map(m, depth).map_err(|e| CliError::Config(format!("maps[{k}]: {e}"))))
            .collect::<CliResult<Vec<_>>>()?;
        let beta_pair = match file.maps.as_slice() {
            [MapSpec::BetaGreedy { beta: a }, MapSpec::BetaLazy { beta: b }] if a == b => {
                Some(BetaSystem::new(*a, &file.p, depth)?)
            }
            _ => None,
        };
        let system = RandomSystem::new(maps, file.p.clone())
            .map_err(|e| CliError::Config(format!("p: {e}")))?
            .with_identified_endpoints(file.identify_endpoints);
        Ok(ExperimentConfig {
            maps: file.maps,
            system,
            beta_pair,
            experiment,
            n,
            seeds,
            x0: ov.x0.or(file.x0),
            cells,
            out: ov.out.or(file.out).unwrap_or_else(|| PathBuf::from(".")),
            threads: ov.threads.or(file.threads),
            tolerances: file.tolerances,
            tail_n_max: file.tail_n_max.unwrap_or(DEFAULT_TAIL_N_MAX),
            config_sha256: sha256_hex(text.as_bytes()),
        })
    }

    pub fn symbolic(&self) -> CliResult<SymbolicSystem> {
        Ok(SymbolicSystem::new(self.system.clone(), self.tolerances.markov)?)
    }

    pub fn options(&self) -> EnumerationOptions {
        EnumerationOptions {
            dedupe: true,
            dedupe_tol: self.tolerances.dedupe,
            threads: self.threads,
            guard: ENUMERATION_GUARD,
        }
    }

    pub fn require_n(&self) -> CliResult<&[usize]> {
        if self.n.is_empty() {
            return Err(CliError::Usage(format!(
                "experiment {} needs --n or --n-list",
                self.experiment.name()
            )));
        }
        Ok(&self.n)
    }

    /// Common β when every map is a β-map for the same β.
    pub fn common_beta(&self) -> Option<f64> {
        let betas: Vec<f64> = self
            .maps
            .iter()
            .map(|m| match m {
                MapSpec::BetaGreedy { beta } | MapSpec::BetaLazy { beta } => Some(*beta),
                _ => None,
            })
            .collect::<Option<_>>()?;
        betas.iter().all(|b| *b == betas[0]).then(|| betas[0])
    }

    pub fn lsv_alphas(&self) -> Option<Vec<f64>> {
        self.maps
            .iter()
            .map(|m| match m {
                MapSpec::Lsv { alpha } => Some(*alpha),
                _ => None,
            })
            .collect()
    }

    pub fn is_golden_pair(&self) -> bool {
        self.beta_pair
            .as_ref()
            .is_some_and(|b| (b.beta() - golden_ratio()).abs() < 1e-12)
    }
}

fn build_map(spec: &MapSpec, depth: usize) -> randcycles::Result<MarkovMap> {
    match spec {
        MapSpec::AffineMarkov {
            breakpoints,
            slopes,
            intercepts,
        } => MarkovMap::affine(breakpoints, slopes, intercepts),
        MapSpec::BetaGreedy { beta } => greedy_map(*beta, depth),
        MapSpec::BetaLazy { beta } => lazy_map(*beta, depth),
        MapSpec::Lsv { alpha } => lsv_map(*alpha),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const GOLDEN: &str = r#"{
        "maps": [{"kind": "beta_greedy", "beta": 1.618033988749895},
                 {"kind": "beta_lazy", "beta": 1.618033988749895}],
        "p": [0.3, 0.7]
    }"#;

    fn cycles() -> Overrides {
        Overrides {
            experiment: Some(Experiment::Cycles),
            ..Overrides::default()
        }
    }

    #[test]
    fn golden_resolves_to_pair() {
        let c = ExperimentConfig::resolve(GOLDEN, cycles()).unwrap();
        assert!(c.beta_pair.is_some());
        assert!(c.is_golden_pair());
        assert_eq!(c.seeds, vec![DEFAULT_SEED]);
        assert_eq!(c.common_beta(), Some(golden_ratio()));
        assert!(c.lsv_alphas().is_none());
    }

    #[test]
    fn overrides_win() {
        let ov = Overrides {
            n: Some(vec![3, 4]),
            seeds: Some(vec![7]),
            cells: Some(100),
            ..cycles()
        };
        let c = ExperimentConfig::resolve(GOLDEN, ov).unwrap();
        assert_eq!(c.n, vec![3, 4]);
        assert_eq!(c.seeds, vec![7]);
        assert_eq!(c.cells, 100);
    }

    #[test]
    fn errors_name_the_field() {
        let bad_p = r#"{"maps": [{"kind": "lsv", "alpha": 0.5}], "p": [0.5, 0.5]}"#;
        let e = ExperimentConfig::resolve(bad_p, cycles()).unwrap_err();
        assert!(e.to_string().contains("p:"), "{e}");
        assert_eq!(e.exit_code(), 2);

        let bad_alpha = r#"{"maps": [{"kind": "lsv", "alpha": -1}], "p": [1]}"#;
        let e = ExperimentConfig::resolve(bad_alpha, cycles()).unwrap_err();
        assert!(e.to_string().contains("maps[0]"), "{e}");

        let unknown = r#"{"maps": [{"kind": "tent"}], "p": [1]}"#;
        let e = ExperimentConfig::resolve(unknown, cycles()).unwrap_err();
        assert!(e.to_string().contains("line"), "{e}");

        let typo = r#"{"maps": [{"kind": "lsv", "alpha": 0.5}], "p": [1], "seed": 3}"#;
        let e = ExperimentConfig::resolve(typo, cycles()).unwrap_err();
        assert!(e.to_string().contains("seed"), "{e}");

        let zero_n = r#"{"maps": [{"kind": "lsv", "alpha": 0.5}], "p": [1], "n": [3, 0]}"#;
        let e = ExperimentConfig::resolve(zero_n, cycles()).unwrap_err();
        assert!(e.to_string().contains("n[1]"), "{e}");
    }

    #[test]
    fn experiment_is_required() {
        let e = ExperimentConfig::resolve(GOLDEN, Overrides::default()).unwrap_err();
        assert_eq!(e.exit_code(), 2);
        assert!(e.to_string().contains("lsv-tails"));
    }

    #[test]
    fn unknown_experiment_in_config() {
        let text = r#"{"maps": [{"kind": "lsv", "alpha": 0.5}], "p": [1], "experiment": "bogus"}"#;
        let e = ExperimentConfig::resolve(text, Overrides::default()).unwrap_err();
        assert_eq!(e.exit_code(), 2);
        assert!(e.to_string().contains("preimages"), "{e}");
    }

    #[test]
    fn hash_is_stable() {
        assert_eq!(
            sha256_hex(b"abc"),
            "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad"
        );
    }
}
