//! Experiment configuration, validation and the optional key-value file.

use std::fmt;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use stace::ace::DEFAULT_CLIP_DB;
use stace::{Constellation, Modulation};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
#[value(rename_all = "snake_case")]
pub enum ConstellationKind {
    Qpsk,
    Qam16,
}

impl ConstellationKind {
    pub fn build(self) -> Constellation {
        Constellation::new(match self {
            ConstellationKind::Qpsk => Modulation::Qpsk,
            ConstellationKind::Qam16 => Modulation::Qam16,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
#[value(rename_all = "snake_case")]
pub enum Coding {
    None,
    Stbc2,
    Stbc4,
    Sfbc2,
    Sfbc4,
}

impl Coding {
    pub fn n_t(self) -> usize {
        match self {
            Coding::None => 1,
            Coding::Stbc2 | Coding::Sfbc2 => 2,
            Coding::Stbc4 | Coding::Sfbc4 => 4,
        }
    }

    /// Symbol frames consumed by one transmission.
    pub fn slots(self) -> usize {
        match self {
            Coding::Stbc2 => 2,
            Coding::Stbc4 => 4,
            _ => 1,
        }
    }

    /// Subcarriers per code block.
    pub fn gamma(self) -> usize {
        match self {
            Coding::Sfbc2 => 2,
            Coding::Sfbc4 => 4,
            _ => 1,
        }
    }

    pub fn is_sfbc(self) -> bool {
        matches!(self, Coding::Sfbc2 | Coding::Sfbc4)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
#[value(rename_all = "snake_case")]
pub enum Method {
    None,
    Ace,
    SubAce,
    SelectiveAce,
}

macro_rules! display_as_serde {
    ($($t:ty),*) => {$(
        impl fmt::Display for $t {
            fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                let v = serde_json::to_value(self).map_err(|_| fmt::Error)?;
                f.write_str(v.as_str().unwrap_or_default())
            }
        }
    )*};
}
display_as_serde!(ConstellationKind, Coding, Method);

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ThresholdGrid {
    pub start_db: f64,
    pub stop_db: f64,
    pub step_db: f64,
}

impl Default for ThresholdGrid {
    fn default() -> Self {
        ThresholdGrid {
            start_db: 4.0,
            stop_db: 13.0,
            step_db: 0.1,
        }
    }
}

impl ThresholdGrid {
    pub fn values(&self) -> stace::Result<Vec<f64>> {
        stace::metrics::threshold_grid(self.start_db, self.stop_db, self.step_db)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub constellation: ConstellationKind,
    pub n_c: usize,
    pub oversample: usize,
    pub coding: Coding,
    pub method: Method,
    pub iterations: usize,
    pub clip_db: f64,
    /// Transmissions, i.e. PAPR samples. STBC transmissions use several
    /// symbol frames each.
    pub frames: u64,
    pub seed: u64,
    pub thresholds: ThresholdGrid,
    pub output_path: Option<PathBuf>,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            constellation: ConstellationKind::Qpsk,
            n_c: 256,
            oversample: 4,
            coding: Coding::None,
            method: Method::None,
            iterations: 0,
            clip_db: DEFAULT_CLIP_DB,
            frames: 10_000,
            seed: 1,
            thresholds: ThresholdGrid::default(),
            output_path: None,
        }
    }
}

/// Every constraint a configuration breaks.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, thiserror::Error)]
#[error("invalid configuration: {}", violations.join("; "))]
pub struct ValidationError {
    pub violations: Vec<String>,
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<(), ValidationError> {
        let mut v = Vec::new();
        if self.n_c == 0 {
            v.push("n_c must be positive".to_string());
        }
        if self.oversample == 0 {
            v.push("oversample must be positive".to_string());
        }
        if self.frames == 0 {
            v.push("frames must be positive".to_string());
        }
        if !self.clip_db.is_finite() {
            v.push("clip_db must be finite".to_string());
        }
        let t = &self.thresholds;
        if !(t.step_db > 0.0 && t.start_db.is_finite() && t.stop_db.is_finite() && t.start_db <= t.stop_db) {
            v.push(format!(
                "threshold grid {}..{} step {} is not an ascending grid",
                t.start_db, t.stop_db, t.step_db
            ));
        }
        match (self.method, self.coding) {
            (Method::SubAce | Method::SelectiveAce, c) if !c.is_sfbc() => {
                v.push(format!(
                    "method {} requires sfbc2 or sfbc4 coding, got {c}",
                    self.method
                ));
            }
            (Method::Ace, c) if c.is_sfbc() => {
                v.push(format!("method ace requires coding none, stbc2 or stbc4, got {c}"));
            }
            _ => {}
        }
        let g = self.coding.gamma();
        if !self.n_c.is_multiple_of(g) {
            v.push(format!(
                "n_c = {} is not divisible by {g} for coding {}",
                self.n_c, self.coding
            ));
        }
        if v.is_empty() {
            Ok(())
        } else {
            Err(ValidationError { violations: v })
        }
    }
}

/// Same fields as [`ExperimentConfig`], all optional; read from a TOML file.
#[derive(Debug, Clone, Default, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PartialConfig {
    pub constellation: Option<ConstellationKind>,
    pub n_c: Option<usize>,
    pub oversample: Option<usize>,
    pub coding: Option<Coding>,
    pub method: Option<Method>,
    pub iterations: Option<usize>,
    pub clip_db: Option<f64>,
    pub frames: Option<u64>,
    pub seed: Option<u64>,
    pub threshold_start_db: Option<f64>,
    pub threshold_stop_db: Option<f64>,
    pub threshold_step_db: Option<f64>,
    pub output_path: Option<PathBuf>,
}

impl PartialConfig {
    pub fn from_toml(text: &str) -> Result<Self, toml::de::Error> {
        toml::from_str(text)
    }

    pub fn load(path: &Path) -> anyhow::Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Ok(Self::from_toml(&text)?)
    }

    /// Fields set in `other` win.
    pub fn overlay(self, other: PartialConfig) -> PartialConfig {
        PartialConfig {
            constellation: other.constellation.or(self.constellation),
            n_c: other.n_c.or(self.n_c),
            oversample: other.oversample.or(self.oversample),
            coding: other.coding.or(self.coding),
            method: other.method.or(self.method),
            iterations: other.iterations.or(self.iterations),
            clip_db: other.clip_db.or(self.clip_db),
            frames: other.frames.or(self.frames),
            seed: other.seed.or(self.seed),
            threshold_start_db: other.threshold_start_db.or(self.threshold_start_db),
            threshold_stop_db: other.threshold_stop_db.or(self.threshold_stop_db),
            threshold_step_db: other.threshold_step_db.or(self.threshold_step_db),
            output_path: other.output_path.or(self.output_path),
        }
    }

    pub fn resolve(self) -> ExperimentConfig {
        let d = ExperimentConfig::default();
        ExperimentConfig {
            constellation: self.constellation.unwrap_or(d.constellation),
            n_c: self.n_c.unwrap_or(d.n_c),
            oversample: self.oversample.unwrap_or(d.oversample),
            coding: self.coding.unwrap_or(d.coding),
            method: self.method.unwrap_or(d.method),
            iterations: self.iterations.unwrap_or(d.iterations),
            clip_db: self.clip_db.unwrap_or(d.clip_db),
            frames: self.frames.unwrap_or(d.frames),
            seed: self.seed.unwrap_or(d.seed),
            thresholds: ThresholdGrid {
                start_db: self.threshold_start_db.unwrap_or(d.thresholds.start_db),
                stop_db: self.threshold_stop_db.unwrap_or(d.thresholds.stop_db),
                step_db: self.threshold_step_db.unwrap_or(d.thresholds.step_db),
            },
            output_path: self.output_path.or(d.output_path),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_is_valid() {
        assert_eq!(ExperimentConfig::default().validate(), Ok(()));
    }

    #[test]
    fn method_coding_compatibility() {
        let ok = [
            (Method::None, Coding::None),
            (Method::None, Coding::Sfbc4),
            (Method::Ace, Coding::None),
            (Method::Ace, Coding::Stbc2),
            (Method::Ace, Coding::Stbc4),
            (Method::SubAce, Coding::Sfbc2),
            (Method::SelectiveAce, Coding::Sfbc4),
        ];
        let bad = [
            (Method::Ace, Coding::Sfbc2),
            (Method::SubAce, Coding::None),
            (Method::SubAce, Coding::Stbc2),
            (Method::SelectiveAce, Coding::Stbc4),
        ];
        for (method, coding) in ok {
            let cfg = ExperimentConfig {
                method,
                coding,
                ..Default::default()
            };
            assert!(cfg.validate().is_ok(), "{method} {coding}");
        }
        for (method, coding) in bad {
            let cfg = ExperimentConfig {
                method,
                coding,
                ..Default::default()
            };
            assert_eq!(cfg.validate().unwrap_err().violations.len(), 1, "{method} {coding}");
        }
    }

    #[test]
    fn lists_every_violation() {
        let cfg = ExperimentConfig {
            n_c: 6,
            coding: Coding::Sfbc4,
            method: Method::Ace,
            frames: 0,
            clip_db: f64::NAN,
            thresholds: ThresholdGrid {
                start_db: 5.0,
                stop_db: 4.0,
                step_db: 0.1,
            },
            ..Default::default()
        };
        assert_eq!(cfg.validate().unwrap_err().violations.len(), 5);
    }

    #[test]
    fn partial_config_overlay() {
        let file =
            PartialConfig::from_toml("coding = \"sfbc2\"\nmethod = \"sub_ace\"\nframes = 50\nseed = 9\n").unwrap();
        let flags = PartialConfig {
            seed: Some(3),
            iterations: Some(7),
            ..Default::default()
        };
        let cfg = file.overlay(flags).resolve();
        assert_eq!(cfg.coding, Coding::Sfbc2);
        assert_eq!(cfg.method, Method::SubAce);
        assert_eq!(cfg.frames, 50);
        assert_eq!(cfg.seed, 3);
        assert_eq!(cfg.iterations, 7);
        assert_eq!(cfg.n_c, 256);
        assert!(PartialConfig::from_toml("bogus = 1").is_err());
    }

    #[test]
    fn names_round_trip() {
        assert_eq!(Method::SelectiveAce.to_string(), "selective_ace");
        assert_eq!(Coding::Stbc4.to_string(), "stbc4");
        assert_eq!(ConstellationKind::Qam16.to_string(), "qam16");
    }
}
