//! Run configuration: a TOML file, overridden field by field by command-line flags.

use std::path::{Path, PathBuf};

use lidtest_core::io::FieldSpec;
use lidtest_core::pasting::CoordRegime;
use lidtest_core::sdp::SdpOptions;
use serde::{Deserialize, Serialize};

use crate::CliError;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum Format {
    Json,
    Csv,
}

/// Where a strategy comes from when no file is given.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum Generator {
    /// Honest strategy for a random low-degree polynomial.
    Honest,
    /// The `x_1^{d+1}` strategy that gives up on lines in direction 1.
    Example,
    /// Mixture of honest and point-corrupted strategies.
    Noisy,
    /// `noisy`, embedded and conjugated by a random real orthogonal matrix.
    Rotated,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    Auto,
    Exact,
    MonteCarlo,
    Both,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PovmMode {
    Naimark,
    Orthogonalize,
    Sub,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SliceSource {
    Random,
    Honest,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Params {
    pub m: usize,
    pub q: u32,
    /// Explicit field; overrides `q`.
    pub field: Option<FieldSpec>,
    pub d: usize,
    pub k: usize,
    pub theta: f64,
    /// Subtest weights (axis, self-consistency, diagonal) as `"a/b"` strings.
    pub weights: Option<[String; 3]>,
}

impl Default for Params {
    fn default() -> Self {
        Params { m: 2, q: 3, field: None, d: 1, k: 3, theta: 0.5, weights: None }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunTestConfig {
    pub method: Method,
    pub samples: usize,
    /// Optional JSON-lines transcript path; deterministic classical strategies only.
    pub transcript: Option<PathBuf>,
}

impl Default for RunTestConfig {
    fn default() -> Self {
        RunTestConfig { method: Method::Auto, samples: 20_000, transcript: None }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RoundPovmConfig {
    pub mode: PovmMode,
    pub dim: usize,
    pub outcomes: usize,
    /// Mixing weight of the random POVM added to a projective measurement.
    pub noise: f64,
}

impl Default for RoundPovmConfig {
    fn default() -> Self {
        RoundPovmConfig { mode: PovmMode::Orthogonalize, dim: 4, outcomes: 3, noise: 0.05 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SpectrumConfig {
    /// Operator dimension of the random Poincaré instances.
    pub dim: usize,
}

impl Default for SpectrumConfig {
    fn default() -> Self {
        SpectrumConfig { dim: 2 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PasteConfig {
    pub regime: CoordRegime,
    pub source: SliceSource,
    pub slice_dim: usize,
    /// Coordinate-tuple samples when enumeration is too large.
    pub samples: usize,
}

impl Default for PasteConfig {
    fn default() -> Self {
        PasteConfig { regime: CoordRegime::Distinct, source: SliceSource::Random, slice_dim: 3, samples: 2000 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Tolerances {
    /// Slack allowed when comparing a measured quantity with its bound.
    pub bound: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances { bound: 1e-7 }
    }
}

/// Fully resolved configuration, embedded in every report.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub seed: u64,
    pub workers: usize,
    pub format: Format,
    pub out: Option<PathBuf>,
    pub strategy: Option<PathBuf>,
    pub generator: Option<Generator>,
    /// Batch size for the randomized commands.
    pub instances: usize,
    pub params: Params,
    pub run_test: RunTestConfig,
    pub round_povm: RoundPovmConfig,
    pub spectrum: SpectrumConfig,
    pub paste: PasteConfig,
    pub sdp: SdpOptions,
    pub tolerances: Tolerances,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            seed: 0,
            workers: 1,
            format: Format::Json,
            out: None,
            strategy: None,
            generator: None,
            instances: 10,
            params: Params::default(),
            run_test: RunTestConfig::default(),
            round_povm: RoundPovmConfig::default(),
            spectrum: SpectrumConfig::default(),
            paste: PasteConfig::default(),
            sdp: SdpOptions::default(),
            tolerances: Tolerances::default(),
        }
    }
}

/// Flag values that take precedence over the file.
#[derive(Clone, Debug, Default)]
pub struct Overrides {
    pub seed: Option<u64>,
    pub out: Option<PathBuf>,
    pub workers: Option<usize>,
    pub format: Option<Format>,
    pub strategy: Option<PathBuf>,
    pub generator: Option<Generator>,
    pub instances: Option<usize>,
}

impl RunConfig {
    /// Reads `path` (if any), resolves relative paths against its directory, applies flags.
    pub fn resolve(path: Option<&Path>, o: Overrides) -> Result<Self, CliError> {
        let mut cfg = match path {
            Some(p) => {
                let text = std::fs::read_to_string(p).map_err(|e| CliError::Config(format!("{}: {e}", p.display())))?;
                let mut cfg: RunConfig = toml::from_str(&text).map_err(|e| CliError::Config(format!("{}: {e}", p.display())))?;
                let base = p.parent().unwrap_or(Path::new(""));
                for f in [&mut cfg.strategy, &mut cfg.run_test.transcript, &mut cfg.out] {
                    if let Some(x) = f.as_mut() {
                        if x.is_relative() {
                            *x = base.join(&*x);
                        }
                    }
                }
                cfg
            }
            None => RunConfig::default(),
        };
        macro_rules! set {
            ($($f:ident),*) => { $(if let Some(v) = o.$f { cfg.$f = v; })* };
        }
        set!(seed, workers, format, instances);
        if o.out.is_some() {
            cfg.out = o.out;
        }
        if o.strategy.is_some() {
            cfg.strategy = o.strategy;
            cfg.generator = None;
        }
        if o.generator.is_some() {
            cfg.generator = o.generator;
            cfg.strategy = None;
        }
        cfg.validate()?;
        Ok(cfg)
    }

    fn validate(&self) -> Result<(), CliError> {
        let bad = |s: String| Err(CliError::Config(s));
        if self.workers == 0 {
            return bad("workers must be at least 1".into());
        }
        if self.instances == 0 {
            return bad("instances must be at least 1".into());
        }
        if self.params.m == 0 {
            return bad("m must be at least 1".into());
        }
        if !(self.params.theta > 0.0 && self.params.theta < 1.0) {
            return bad(format!("theta = {} is outside (0, 1)", self.params.theta));
        }
        if self.run_test.samples == 0 || self.paste.samples == 0 {
            return bad("sample counts must be positive".into());
        }
        if self.round_povm.dim == 0 || self.round_povm.outcomes == 0 || self.spectrum.dim == 0 || self.paste.slice_dim == 0 {
            return bad("dimensions and outcome counts must be positive".into());
        }
        if !(0.0..=1.0).contains(&self.round_povm.noise) {
            return bad(format!("noise = {} is outside [0, 1]", self.round_povm.noise));
        }
        if self.strategy.is_some() && self.generator.is_some() {
            return bad("give either a strategy file or a generator, not both".into());
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn flags_override_file() {
        let dir = std::env::temp_dir().join(format!("lidtest-cfg-{}", std::process::id()));
        std::fs::create_dir_all(&dir).unwrap();
        let p = dir.join("run.toml");
        std::fs::write(&p, "seed = 5\nworkers = 2\nstrategy = \"s.json\"\n[params]\nm = 1\nq = 5\n").unwrap();
        let cfg = RunConfig::resolve(Some(&p), Overrides { seed: Some(9), ..Default::default() }).unwrap();
        assert_eq!(cfg.seed, 9);
        assert_eq!(cfg.workers, 2);
        assert_eq!(cfg.params.q, 5);
        assert_eq!(cfg.strategy, Some(dir.join("s.json")));
        let cfg = RunConfig::resolve(Some(&p), Overrides { generator: Some(Generator::Honest), ..Default::default() }).unwrap();
        assert_eq!(cfg.strategy, None);
        std::fs::remove_dir_all(&dir).unwrap();
    }

    #[test]
    fn unknown_keys_and_bad_values_rejected() {
        assert!(toml::from_str::<RunConfig>("sed = 1").is_err());
        let mut cfg = RunConfig::default();
        cfg.params.theta = 1.5;
        assert!(cfg.validate().is_err());
        cfg.params.theta = 0.5;
        cfg.workers = 0;
        assert!(cfg.validate().is_err());
    }

    #[test]
    fn defaults_round_trip_through_toml() {
        let cfg = RunConfig::default();
        let text = toml::to_string(&cfg).unwrap();
        assert_eq!(toml::from_str::<RunConfig>(&text).unwrap(), cfg);
    }
}
