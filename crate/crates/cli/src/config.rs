//! Run configuration: JSON file merged with flag overrides, validated once.
//! Every field has a reproducible default except the seed, which is
//! mandatory for simulate/spectral so that no run depends on wall-clock
//! state.

use std::path::{Path, PathBuf};

use gaplab_core::scenarios::ScenarioConfig;
use gaplab_core::{Error, Result};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

/// Axis grid of frequencies for twisted-operator tables and scans.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(default)]
pub struct LambdaGrid {
    /// Largest multiple of `step` per axis.
    pub max: f64,
    pub step: f64,
    /// Also include the main-diagonal multiples.
    pub diagonal: bool,
}

impl Default for LambdaGrid {
    fn default() -> Self {
        LambdaGrid { max: 3.2, step: 0.4, diagonal: false }
    }
}

fn d_n() -> usize {
    4096
}
fn d_paths() -> usize {
    1000
}
fn d_horizons() -> Vec<usize> {
    vec![1000, 10_000, 100_000]
}
fn d_out() -> PathBuf {
    PathBuf::from("out")
}
fn d_stride() -> usize {
    8
}
fn d_csv_paths() -> usize {
    4
}

/// One batch configuration.  The `scenario` tag (plus optional inline
/// parameters such as the free-group rank) is flattened into the object.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunConfig {
    #[serde(flatten)]
    pub scenario: ScenarioConfig,
    /// Steps per path.
    #[serde(default = "d_n")]
    pub n: usize,
    #[serde(default = "d_paths")]
    pub paths: usize,
    /// Mandatory for simulate/spectral; no wall-clock fallback.
    #[serde(default)]
    pub seed: Option<u64>,
    /// Snapshot horizons for the running-minimum profile.
    #[serde(default = "d_horizons")]
    pub horizons: Vec<usize>,
    /// Frequency-ball radius; resolved per scenario dimension when absent.
    #[serde(default)]
    pub ball_radius: Option<f64>,
    #[serde(default)]
    pub lambda_grid: LambdaGrid,
    /// Output directory.
    #[serde(default = "d_out")]
    pub out: PathBuf,
    /// CSV row thinning stride.
    #[serde(default = "d_stride")]
    pub stride: usize,
    /// How many per-path trajectory CSVs simulate writes.
    #[serde(default = "d_csv_paths")]
    pub csv_paths: usize,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            scenario: ScenarioConfig::TorusSl2,
            n: d_n(),
            paths: d_paths(),
            seed: None,
            horizons: d_horizons(),
            ball_radius: None,
            lambda_grid: LambdaGrid::default(),
            out: d_out(),
            stride: d_stride(),
            csv_paths: d_csv_paths(),
        }
    }
}

/// Flag-level overrides applied on top of the config file.
#[derive(Debug, Default, Clone)]
pub struct Overrides {
    pub scenario: Option<String>,
    pub steps: Option<usize>,
    pub paths: Option<usize>,
    pub seed: Option<u64>,
    pub ball_radius: Option<f64>,
    pub out: Option<PathBuf>,
}

impl RunConfig {
    pub fn load(path: Option<&Path>) -> Result<RunConfig> {
        match path {
            None => Ok(RunConfig::default()),
            Some(p) => {
                let text = std::fs::read_to_string(p)
                    .map_err(|e| Error::Config(format!("cannot read config {}: {e}", p.display())))?;
                serde_json::from_str(&text)
                    .map_err(|e| Error::Config(format!("invalid config {}: {e}", p.display())))
            }
        }
    }

    pub fn apply(&mut self, ov: &Overrides) -> Result<()> {
        if let Some(id) = &ov.scenario {
            self.scenario = ScenarioConfig::from_id(id)?;
        }
        if let Some(n) = ov.steps {
            self.n = n;
        }
        if let Some(p) = ov.paths {
            self.paths = p;
        }
        if let Some(s) = ov.seed {
            self.seed = Some(s);
        }
        if let Some(r) = ov.ball_radius {
            self.ball_radius = Some(r);
        }
        if let Some(o) = &ov.out {
            self.out = o.clone();
        }
        Ok(())
    }

    /// Structural validation shared by all commands; seed presence is
    /// checked separately because verify has a default seed.
    pub fn validate(&self) -> Result<()> {
        if self.n == 0 {
            return Err(Error::Config("n must be positive".into()));
        }
        if self.paths == 0 {
            return Err(Error::Config("paths must be positive".into()));
        }
        if self.stride == 0 {
            return Err(Error::Config("stride must be positive".into()));
        }
        if let Some(r) = self.ball_radius {
            if !(r > 0.0) || !r.is_finite() {
                return Err(Error::Config(format!("ball_radius must be positive, got {r}")));
            }
        }
        if !(self.lambda_grid.step > 0.0) || !(self.lambda_grid.max >= 0.0) {
            return Err(Error::Config("lambda_grid needs step > 0 and max >= 0".into()));
        }
        if self.horizons.is_empty() || self.horizons.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::Config("horizons must be nonempty and strictly increasing".into()));
        }
        Ok(())
    }

    pub fn require_seed(&self) -> Result<u64> {
        self.seed
            .ok_or_else(|| Error::Config("seed is mandatory (set it in the config or pass --seed)".into()))
    }

    /// Ball radius resolved against the torus dimension: high resolution is
    /// affordable in low dimension only.
    /// Twisted applies convolve a cube of side ~2R per axis, so the default
    /// radius has to fall quickly with the torus dimension.
    pub fn resolved_ball_radius(&self, torus_dim: usize) -> f64 {
        self.ball_radius.unwrap_or(match torus_dim {
            0..=2 => 40.0,
            3 => 12.0,
            4 => 6.0,
            5 => 3.0,
            _ => 2.0,
        })
    }

    /// Short hash of the canonical serialized config, embedded in every
    /// output file.  The output directory is plumbing, not part of the run
    /// identity: the same run written elsewhere produces identical data.
    pub fn hash(&self) -> String {
        let mut canon = self.clone();
        canon.out = d_out();
        let text = serde_json::to_string(&canon).expect("config serializes");
        let digest = Sha256::digest(text.as_bytes());
        digest.iter().take(8).map(|b| format!("{b:02x}")).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_validate_except_seed() {
        let cfg = RunConfig::default();
        cfg.validate().unwrap();
        assert!(cfg.require_seed().is_err());
    }

    #[test]
    fn parses_partial_config_with_inline_scenario() {
        let cfg: RunConfig =
            serde_json::from_str(r#"{"scenario": "scenery_free_group", "k": 3, "seed": 5}"#).unwrap();
        assert_eq!(cfg.scenario, ScenarioConfig::SceneryFreeGroup { k: 3 });
        assert_eq!(cfg.seed, Some(5));
        assert_eq!(cfg.n, 4096);
        cfg.validate().unwrap();
    }

    #[test]
    fn rejects_zero_paths_and_missing_step() {
        let mut cfg = RunConfig::default();
        cfg.paths = 0;
        assert!(cfg.validate().is_err());
        let bad: std::result::Result<RunConfig, _> = serde_json::from_str(r#"{"n": 10}"#);
        assert!(bad.is_err(), "scenario tag is required in config files");
    }

    #[test]
    fn hash_is_stable_and_sensitive() {
        let a = RunConfig::default();
        let mut b = RunConfig::default();
        assert_eq!(a.hash(), b.hash());
        b.out = PathBuf::from("elsewhere");
        assert_eq!(a.hash(), b.hash(), "output directory is not run identity");
        b.n += 1;
        assert_ne!(a.hash(), b.hash());
        assert_eq!(a.hash().len(), 16);
    }

    #[test]
    fn overrides_take_precedence() {
        let mut cfg = RunConfig::default();
        cfg.apply(&Overrides {
            scenario: Some("coin_iid".into()),
            steps: Some(64),
            paths: Some(10),
            seed: Some(9),
            ball_radius: Some(8.0),
            out: Some(PathBuf::from("elsewhere")),
        })
        .unwrap();
        assert_eq!(cfg.scenario, ScenarioConfig::CoinIid);
        assert_eq!((cfg.n, cfg.paths, cfg.seed), (64, 10, Some(9)));
        assert_eq!(cfg.ball_radius, Some(8.0));
        assert!(cfg.apply(&Overrides { scenario: Some("nope".into()), ..Default::default() }).is_err());
    }

    #[test]
    fn ball_radius_resolution_shrinks_with_dimension() {
        let cfg = RunConfig::default();
        assert_eq!(cfg.resolved_ball_radius(2), 40.0);
        assert_eq!(cfg.resolved_ball_radius(3), 12.0);
        assert_eq!(cfg.resolved_ball_radius(6), 2.0);
        let mut fixed = RunConfig::default();
        fixed.ball_radius = Some(9.0);
        assert_eq!(fixed.resolved_ball_radius(6), 9.0);
    }
}
