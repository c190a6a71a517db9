use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::{ExperimentError, Result};
use crate::data::{self, generate_szt_standin, load_idx_limited, load_szt, LabeledDataset};

/// Weight-decay coefficients; `0` means plain Adam.
pub const LAMBDA_GRID: [f64; 11] = [0.0, 0.1, 0.2, 0.5, 0.7, 1.0, 1.1, 1.2, 1.5, 1.7, 2.0];
/// Allowed variable widths of the hourglass and bottleneck presets.
pub const VARIANT_WIDTHS: [usize; 5] = [2, 4, 6, 8, 10];

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum DatasetSpec {
    /// The generated 12-bit stand-in, split into training and validation.
    SztStandin {
        #[serde(default)]
        seed: u64,
    },
    /// An SZT text file, split into training and validation.
    Szt { path: PathBuf },
    /// IDX files; information is measured on the test split.
    Idx {
        name: String,
        train_images: PathBuf,
        train_labels: PathBuf,
        test_images: PathBuf,
        test_labels: PathBuf,
        #[serde(default)]
        train_limit: Option<usize>,
        #[serde(default)]
        test_limit: Option<usize>,
    },
}

impl DatasetSpec {
    pub fn name(&self) -> String {
        match self {
            Self::SztStandin { .. } => "szt-standin".to_string(),
            Self::Szt { .. } => "szt".to_string(),
            Self::Idx { name, .. } => name.clone(),
        }
    }
}

/// Hidden-layer layouts. Widths list hidden layers only; the output layer
/// has one unit per class.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "preset", rename_all = "kebab-case", deny_unknown_fields)]
pub enum ArchitectureChoice {
    /// 10-8-6-4
    Szt {},
    /// 1024-20-20-20-10
    RajLike {},
    /// 1024-20-10-A-10-20-10
    Hourglass {
        a: usize,
    },
    /// 1024-20-10-A-10
    Bottleneck {
        a: usize,
    },
    /// 50-10-10
    SmallBnn {},
    Custom {
        hidden_widths: Vec<usize>,
    },
}

impl ArchitectureChoice {
    pub fn hidden_widths(&self) -> Result<Vec<usize>> {
        let check_a = |a: usize| {
            if VARIANT_WIDTHS.contains(&a) {
                Ok(a)
            } else {
                Err(ExperimentError::Config(format!(
                    "variant width A = {a} not in {VARIANT_WIDTHS:?}"
                )))
            }
        };
        Ok(match self {
            Self::Szt {} => vec![10, 8, 6, 4],
            Self::RajLike {} => vec![1024, 20, 20, 20, 10],
            Self::Hourglass { a } => vec![1024, 20, 10, check_a(*a)?, 10, 20, 10],
            Self::Bottleneck { a } => vec![1024, 20, 10, check_a(*a)?, 10],
            Self::SmallBnn {} => vec![50, 10, 10],
            Self::Custom { hidden_widths } => {
                if hidden_widths.is_empty() || hidden_widths.contains(&0) {
                    return Err(ExperimentError::Config(
                        "custom widths must be non-empty and positive".into(),
                    ));
                }
                hidden_widths.clone()
            }
        })
    }

    /// Preset plus variant parameters; every run of a group is pooled when
    /// correlating.
    pub fn group_name(&self) -> String {
        match self {
            Self::Szt {} => "szt".into(),
            Self::RajLike {} => "raj-like".into(),
            Self::Hourglass { a } => format!("hourglass-a{a}"),
            Self::Bottleneck { a } => format!("bottleneck-a{a}"),
            Self::SmallBnn {} => "small-bnn".into(),
            Self::Custom { hidden_widths } => {
                let w: Vec<String> = hidden_widths.iter().map(usize::to_string).collect();
                format!("custom-{}", w.join("-"))
            }
        }
    }
}

fn default_stride() -> u32 {
    1
}

fn default_window() -> usize {
    crate::analysis::DEFAULT_WINDOW
}

fn default_fraction() -> f64 {
    0.2
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub dataset: DatasetSpec,
    pub architecture: ArchitectureChoice,
    pub lambdas: Vec<f64>,
    pub learning_rate: f64,
    pub batch_size: usize,
    pub epochs: u32,
    /// One run per seed and λ.
    pub seeds: Vec<u64>,
    /// Information is measured every `stride` epochs.
    #[serde(default = "default_stride")]
    pub stride: u32,
    /// Trailing epochs aggregated by the analysis.
    #[serde(default = "default_window")]
    pub window: usize,
    /// Validation share for datasets without a designated test split.
    #[serde(default = "default_fraction")]
    pub validation_fraction: f64,
    #[serde(default)]
    pub split_seed: u64,
}

impl ExperimentConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: Self = serde_json::from_str(text).map_err(|e| ExperimentError::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(super::io_err(path))?;
        Self::from_json(&text)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serialises")
    }

    /// Applies command-line overrides and re-validates.
    pub fn with_overrides(mut self, seed: Option<u64>, stride: Option<u32>, epochs: Option<u32>) -> Result<Self> {
        if let Some(s) = seed {
            self.seeds = vec![s];
        }
        if let Some(s) = stride {
            self.stride = s;
        }
        if let Some(e) = epochs {
            self.epochs = e;
        }
        self.validate()?;
        Ok(self)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(ExperimentError::Config(m));
        self.architecture.hidden_widths()?;
        if self.lambdas.is_empty() {
            return bad("at least one λ is required".into());
        }
        for (i, l) in self.lambdas.iter().enumerate() {
            if !LAMBDA_GRID.contains(l) {
                return bad(format!("λ = {l} not in {LAMBDA_GRID:?}"));
            }
            if self.lambdas[..i].contains(l) {
                return bad(format!("duplicate λ = {l}"));
            }
        }
        if !(self.learning_rate.is_finite() && self.learning_rate >= 0.0) {
            return bad(format!(
                "learning rate {} must be finite and non-negative",
                self.learning_rate
            ));
        }
        if self.batch_size == 0 {
            return bad("batch size must be at least 1".into());
        }
        if self.epochs == 0 {
            return bad("epochs must be at least 1".into());
        }
        if self.seeds.is_empty() {
            return bad("at least one seed is required".into());
        }
        for (i, s) in self.seeds.iter().enumerate() {
            if self.seeds[..i].contains(s) {
                return bad(format!("duplicate seed {s}"));
            }
        }
        if self.stride == 0 || self.stride > self.epochs {
            return bad(format!("stride {} must lie in 1..={}", self.stride, self.epochs));
        }
        if self.window == 0 {
            return bad("window must be at least 1".into());
        }
        if !(self.validation_fraction > 0.0 && self.validation_fraction < 1.0) {
            return bad(format!(
                "validation fraction {} outside (0, 1)",
                self.validation_fraction
            ));
        }
        Ok(())
    }

    /// SHA-256 of the compact JSON form, hex encoded.
    pub fn hash(&self) -> String {
        let json = serde_json::to_string(self).expect("config serialises");
        Sha256::digest(json.as_bytes())
            .iter()
            .map(|b| format!("{b:02x}"))
            .collect()
    }

    pub fn group(&self) -> String {
        self.architecture.group_name()
    }

    /// Training set and the set used for accuracy and information estimates.
    pub fn load_data(&self) -> Result<LoadedData> {
        let name = self.dataset.name();
        let (train, eval) = match &self.dataset {
            DatasetSpec::SztStandin { seed } => {
                data::split(&generate_szt_standin(*seed), self.validation_fraction, self.split_seed)?
            }
            DatasetSpec::Szt { path } => data::split(&load_szt(path)?, self.validation_fraction, self.split_seed)?,
            DatasetSpec::Idx {
                train_images,
                train_labels,
                test_images,
                test_labels,
                train_limit,
                test_limit,
                ..
            } => (
                load_idx_limited(train_images, train_labels, *train_limit)?,
                load_idx_limited(test_images, test_labels, *test_limit)?,
            ),
        };
        if train.input_dim() != eval.input_dim() || train.class_count != eval.class_count {
            return Err(ExperimentError::Config(
                "training and evaluation sets disagree in shape".into(),
            ));
        }
        Ok(LoadedData {
            name: name.clone(),
            train: train.with_name(format!("{name}-train")),
            eval: eval.with_name(format!("{name}-eval")),
        })
    }
}

#[derive(Clone, Debug)]
pub struct LoadedData {
    pub name: String,
    pub train: LabeledDataset,
    pub eval: LabeledDataset,
}

#[cfg(test)]
mod tests {
    use super::*;

    fn szt_config() -> ExperimentConfig {
        ExperimentConfig::from_json(
            r#"{"dataset": {"kind": "szt-standin"}, "architecture": {"preset": "szt"},
                "lambdas": [0, 0.5], "learning_rate": 1e-4, "batch_size": 64, "epochs": 10, "seeds": [0, 1, 2]}"#,
        )
        .unwrap()
    }

    #[test]
    fn presets_expand_exactly() {
        assert_eq!(ArchitectureChoice::Szt {}.hidden_widths().unwrap(), vec![10, 8, 6, 4]);
        assert_eq!(
            ArchitectureChoice::RajLike {}.hidden_widths().unwrap(),
            vec![1024, 20, 20, 20, 10]
        );
        assert_eq!(
            ArchitectureChoice::Hourglass { a: 4 }.hidden_widths().unwrap(),
            vec![1024, 20, 10, 4, 10, 20, 10]
        );
        assert_eq!(
            ArchitectureChoice::Bottleneck { a: 2 }.hidden_widths().unwrap(),
            vec![1024, 20, 10, 2, 10]
        );
        assert_eq!(
            ArchitectureChoice::SmallBnn {}.hidden_widths().unwrap(),
            vec![50, 10, 10]
        );
        for a in VARIANT_WIDTHS {
            assert_eq!(ArchitectureChoice::Hourglass { a }.hidden_widths().unwrap()[3], a);
        }
        assert!(ArchitectureChoice::Bottleneck { a: 3 }.hidden_widths().is_err());
        assert!(ArchitectureChoice::Custom { hidden_widths: vec![] }
            .hidden_widths()
            .is_err());
    }

    #[test]
    fn defaults_and_group() {
        let c = szt_config();
        assert_eq!(
            (c.stride, c.window, c.validation_fraction, c.split_seed),
            (1, 50, 0.2, 0)
        );
        assert_eq!(c.group(), "szt");
        assert_eq!(ArchitectureChoice::Hourglass { a: 6 }.group_name(), "hourglass-a6");
    }

    #[test]
    fn rejects_unknown_fields_and_bad_values() {
        let base = r#""dataset": {"kind": "szt-standin"}, "architecture": {"preset": "szt"},
            "learning_rate": 1e-4, "batch_size": 64, "epochs": 10, "seeds": [0]"#;
        assert!(ExperimentConfig::from_json(&format!("{{{base}, \"lambdas\": [0], \"colour\": 1}}")).is_err());
        assert!(ExperimentConfig::from_json(&format!("{{{base}, \"lambdas\": [0.3]}}")).is_err());
        assert!(ExperimentConfig::from_json(&format!("{{{base}, \"lambdas\": [0, 0]}}")).is_err());
        assert!(ExperimentConfig::from_json(&format!("{{{base}, \"lambdas\": [], \"stride\": 2}}")).is_err());
        assert!(ExperimentConfig::from_json(&format!("{{{base}, \"lambdas\": [0], \"stride\": 11}}")).is_err());
        assert!(ExperimentConfig::from_json(
            r#"{"dataset": {"kind": "szt-standin", "path": "x"}, "architecture": {"preset": "szt"},
                "lambdas": [0], "learning_rate": 1e-4, "batch_size": 64, "epochs": 10, "seeds": [0]}"#
        )
        .is_err());
        assert!(ExperimentConfig::from_json(
            r#"{"dataset": {"kind": "szt-standin"}, "architecture": {"preset": "szt", "a": 4},
                "lambdas": [0], "learning_rate": 1e-4, "batch_size": 64, "epochs": 10, "seeds": [0]}"#
        )
        .is_err());
    }

    #[test]
    fn overrides() {
        let c = szt_config().with_overrides(Some(7), Some(2), Some(4)).unwrap();
        assert_eq!((c.seeds.clone(), c.stride, c.epochs), (vec![7], 2, 4));
        assert!(szt_config().with_overrides(None, Some(20), None).is_err());
    }

    #[test]
    fn json_round_trip_and_hash() {
        let c = szt_config();
        let back = ExperimentConfig::from_json(&c.to_json()).unwrap();
        assert_eq!(back, c);
        assert_eq!(back.hash(), c.hash());
        assert_eq!(c.hash().len(), 64);
        let other = c.clone().with_overrides(Some(9), None, None).unwrap();
        assert_ne!(other.hash(), c.hash());
    }

    #[test]
    fn szt_data_split() {
        let d = szt_config().load_data().unwrap();
        assert_eq!((d.train.len(), d.eval.len()), (4096 - 819, 819));
        assert_eq!(d.name, "szt-standin");
    }
}
