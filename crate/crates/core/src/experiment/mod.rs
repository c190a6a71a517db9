//! Experiment configuration, the training/estimation runner, JSON-lines run
//! logs and the summary pipeline.
//!
//! A run log starts with one header object followed by one object per
//! recorded epoch:
//!
//! ```text
//! {"schema_version":1,"run_id":...,"config":{...},"seed":0,"layer_widths":[10,8,6,4],"regime_flags":[...],...}
//! {"epoch":1,"train_loss":0.69,"val_accuracy":51.2,"layers":[{"offset":-4,"mi_xt":7.1,"mi_ty":0.2},...]}
//! ```

mod config;

pub use config::{ArchitectureChoice, DatasetSpec, ExperimentConfig, LoadedData, LAMBDA_GRID, VARIANT_WIDTHS};

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::analysis::{
    build_run_summary, correlation_csv, correlation_table, summary_csv, window_records, AnalysisError, CorrelationRow,
    IpPoint, IpTrajectory, RunMeta, RunSummary,
};
use crate::bnn::{
    evaluate_accuracy, extract_binary_activations, train_epoch, ArchitectureSpec, BnnError, BnnModel, OptimizerState,
};
use crate::data::{DataError, LabeledDataset};
use crate::estimator::{check_regime, mi_input_representation, mi_representation_label, EstimatorError, RegimeVerdict};

pub const SCHEMA_VERSION: u32 = 1;
pub const SUMMARY_FILE: &str = "summary.csv";
pub const CORRELATION_FILE: &str = "correlation.csv";

#[derive(Debug, Error)]
pub enum ExperimentError {
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error(transparent)]
    Data(#[from] DataError),
    #[error(transparent)]
    Bnn(#[from] BnnError),
    #[error(transparent)]
    Estimator(#[from] EstimatorError),
    #[error(transparent)]
    Analysis(#[from] AnalysisError),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}:{line}: {message}")]
    Corrupt {
        path: PathBuf,
        line: usize,
        message: String,
    },
    #[error("no run logs (*.jsonl) in {0}")]
    NoRuns(PathBuf),
    #[error("run {run_id} has no layer with offset {offset}")]
    MissingLayer { run_id: String, offset: i32 },
}

pub type Result<T> = std::result::Result<T, ExperimentError>;

pub(crate) fn io_err(path: impl Into<PathBuf>) -> impl FnOnce(std::io::Error) -> ExperimentError {
    let path = path.into();
    move |source| ExperimentError::Io { path, source }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RegimeFlag {
    pub offset: i32,
    pub width: usize,
    pub reliable: bool,
    pub sample_count: u64,
    pub max_reliable_width: u32,
}

impl RegimeFlag {
    pub fn verdict(&self) -> RegimeVerdict {
        check_regime(self.sample_count, self.width as u32)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunHeader {
    pub schema_version: u32,
    pub run_id: String,
    pub config: ExperimentConfig,
    pub config_hash: String,
    pub seed: u64,
    pub lambda: f64,
    pub dataset: String,
    pub group: String,
    pub class_count: usize,
    pub layer_widths: Vec<usize>,
    pub regime_flags: Vec<RegimeFlag>,
    /// Samples used for every information estimate.
    pub mi_sample_count: u64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LayerMi {
    pub offset: i32,
    pub mi_xt: f64,
    pub mi_ty: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EpochRecord {
    pub epoch: u32,
    pub train_loss: f64,
    pub val_accuracy: f64,
    pub layers: Vec<LayerMi>,
}

/// A complete run: header plus the recorded epochs in order.
#[derive(Clone, Debug, PartialEq)]
pub struct RunLog {
    pub header: RunHeader,
    pub epochs: Vec<EpochRecord>,
}

impl RunLog {
    pub fn to_jsonl(&self) -> String {
        let mut out = serde_json::to_string(&self.header).expect("header serialises");
        out.push('\n');
        for e in &self.epochs {
            out.push_str(&serde_json::to_string(e).expect("record serialises"));
            out.push('\n');
        }
        out
    }

    pub fn from_jsonl(path: &Path, text: &str) -> Result<Self> {
        let corrupt = |line: usize, message: String| ExperimentError::Corrupt {
            path: path.to_path_buf(),
            line,
            message,
        };
        let mut lines = text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty());
        let (_, first) = lines.next().ok_or_else(|| corrupt(1, "empty run log".into()))?;
        let header: RunHeader = serde_json::from_str(first).map_err(|e| corrupt(1, e.to_string()))?;
        if header.schema_version != SCHEMA_VERSION {
            return Err(corrupt(
                1,
                format!("unsupported schema version {}", header.schema_version),
            ));
        }
        let mut epochs: Vec<EpochRecord> = Vec::new();
        for (i, line) in lines {
            let rec: EpochRecord = serde_json::from_str(line).map_err(|e| corrupt(i + 1, e.to_string()))?;
            if rec.layers.len() != header.layer_widths.len() {
                return Err(corrupt(i + 1, "layer count differs from header".into()));
            }
            if epochs.last().is_some_and(|p| p.epoch >= rec.epoch) {
                return Err(corrupt(i + 1, "epochs not increasing".into()));
            }
            epochs.push(rec);
        }
        Ok(Self { header, epochs })
    }

    pub fn read(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(io_err(path))?;
        Self::from_jsonl(path, &text)
    }

    pub fn write(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        fs::write(path, self.to_jsonl()).map_err(io_err(path))
    }

    /// One trajectory per hidden layer, ordered from the input side.
    pub fn trajectories(&self) -> Result<Vec<IpTrajectory>> {
        self.header
            .regime_flags
            .iter()
            .enumerate()
            .map(|(idx, flag)| {
                let points = self.epochs.iter().map(|e| IpPoint {
                    epoch: e.epoch,
                    mi_xt: e.layers[idx].mi_xt,
                    mi_ty: e.layers[idx].mi_ty,
                    accuracy: e.val_accuracy,
                });
                Ok(IpTrajectory::from_points(flag.offset, flag.width, points)?)
            })
            .collect()
    }

    pub fn trajectory(&self, offset: i32) -> Result<IpTrajectory> {
        self.trajectories()?
            .into_iter()
            .find(|t| t.layer_offset == offset)
            .ok_or_else(|| ExperimentError::MissingLayer {
                run_id: self.header.run_id.clone(),
                offset,
            })
    }

    pub fn meta(&self) -> RunMeta {
        RunMeta {
            run_id: self.header.run_id.clone(),
            config_hash: self.header.config_hash.clone(),
            dataset: self.header.dataset.clone(),
            group: self.header.group.clone(),
            seed: self.header.seed,
            lambda: self.header.lambda,
        }
    }

    /// Summary over the last `window` epochs, i.e. `ceil(window / stride)`
    /// records.
    pub fn summary(&self) -> Result<RunSummary> {
        let cfg = &self.header.config;
        let regimes: Vec<RegimeVerdict> = self.header.regime_flags.iter().map(RegimeFlag::verdict).collect();
        Ok(build_run_summary(
            self.meta(),
            &self.trajectories()?,
            &regimes,
            window_records(cfg.window, cfg.stride as usize),
        )?)
    }
}

/// `Î(X;T_ℓ)` and `Î(T_ℓ;Y)` of every hidden layer on `dataset`. The model
/// must be in evaluation mode.
pub fn estimate_layers(model: &BnnModel, dataset: &LabeledDataset) -> Result<Vec<LayerMi>> {
    let acts = extract_binary_activations(model, dataset.inputs.view())?;
    let labels = dataset.labels_u32();
    let depth = acts.len() as i32;
    acts.iter()
        .enumerate()
        .map(|(i, batch)| {
            Ok(LayerMi {
                offset: i as i32 - depth,
                mi_xt: mi_input_representation(batch)?,
                mi_ty: mi_representation_label(batch, &labels)?,
            })
        })
        .collect()
}

pub fn run_id(group: &str, lambda: f64, seed: u64) -> String {
    format!("{group}_lambda{lambda}_seed{seed}")
}

/// Trains one `(λ, seed)` cell and records every `stride`-th epoch.
pub fn run_cell(config: &ExperimentConfig, data: &LoadedData, lambda: f64, seed: u64) -> Result<RunLog> {
    run_cell_with(config, data, lambda, seed, |_| {})
}

/// Like [`run_cell`], calling `progress` after each recorded epoch.
pub fn run_cell_with(
    config: &ExperimentConfig,
    data: &LoadedData,
    lambda: f64,
    seed: u64,
    mut progress: impl FnMut(&EpochRecord),
) -> Result<RunLog> {
    let widths = config.architecture.hidden_widths()?;
    let arch = ArchitectureSpec::new(data.train.input_dim(), widths.clone(), data.train.class_count);
    let mut model = BnnModel::new(arch, seed)?;
    let mut optimizer = OptimizerState::for_weight_decay(config.learning_rate, lambda);

    let n_eval = data.eval.len() as u64;
    let depth = widths.len() as i32;
    let regime_flags = widths
        .iter()
        .enumerate()
        .map(|(i, &w)| {
            let v = check_regime(n_eval, w as u32);
            RegimeFlag {
                offset: i as i32 - depth,
                width: w,
                reliable: v.reliable,
                sample_count: n_eval,
                max_reliable_width: v.max_reliable_width,
            }
        })
        .collect();
    let group = config.group();
    let header = RunHeader {
        schema_version: SCHEMA_VERSION,
        run_id: run_id(&group, lambda, seed),
        config: config.clone(),
        config_hash: config.hash(),
        seed,
        lambda,
        dataset: data.name.clone(),
        group,
        class_count: data.train.class_count,
        layer_widths: widths,
        regime_flags,
        mi_sample_count: n_eval,
    };

    let mut epochs = Vec::new();
    for epoch in 1..=config.epochs {
        model.train();
        let train_loss = train_epoch(
            &mut model,
            &mut optimizer,
            &data.train,
            config.batch_size,
            seed,
            epoch as u64,
        )?;
        if epoch % config.stride == 0 {
            model.eval();
            let rec = EpochRecord {
                epoch,
                train_loss,
                val_accuracy: evaluate_accuracy(&model, &data.eval)?,
                layers: estimate_layers(&model, &data.eval)?,
            };
            progress(&rec);
            epochs.push(rec);
        }
    }
    Ok(RunLog { header, epochs })
}

/// Runs every `(λ, seed)` cell and writes `<run_id>.jsonl` files into
/// `output_dir`. Returns the written paths in cell order.
pub fn run_experiment(config: &ExperimentConfig, output_dir: impl AsRef<Path>) -> Result<Vec<PathBuf>> {
    config.validate()?;
    let out = output_dir.as_ref();
    let data = config.load_data()?;
    fs::create_dir_all(out).map_err(io_err(out))?;
    let cells: Vec<(f64, u64)> = config
        .lambdas
        .iter()
        .flat_map(|&l| config.seeds.iter().map(move |&s| (l, s)))
        .collect();

    let run = |&(lambda, seed): &(f64, u64)| -> Result<PathBuf> {
        let log = run_cell(config, &data, lambda, seed)?;
        let path = out.join(format!("{}.jsonl", log.header.run_id));
        log.write(&path)?;
        Ok(path)
    };
    #[cfg(feature = "parallel")]
    {
        use rayon::prelude::*;
        cells.par_iter().map(run).collect()
    }
    #[cfg(not(feature = "parallel"))]
    {
        cells.iter().map(run).collect()
    }
}

/// Every `*.jsonl` file of `run_dir`, sorted by file name.
pub fn read_run_dir(run_dir: impl AsRef<Path>) -> Result<Vec<RunLog>> {
    let dir = run_dir.as_ref();
    let mut paths: Vec<PathBuf> = fs::read_dir(dir)
        .map_err(io_err(dir))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|x| x == "jsonl"))
        .collect();
    if paths.is_empty() {
        return Err(ExperimentError::NoRuns(dir.to_path_buf()));
    }
    paths.sort();
    paths.iter().map(RunLog::read).collect()
}

#[derive(Clone, Debug, PartialEq)]
pub struct AnalysisReport {
    pub summaries: Vec<RunSummary>,
    pub correlations: Vec<CorrelationRow>,
    /// Groups skipped by the correlation step, with the reason.
    pub diagnostics: Vec<String>,
    pub summary_path: PathBuf,
    pub correlation_path: PathBuf,
}

pub fn summarize_runs(runs: &[RunLog]) -> Result<Vec<RunSummary>> {
    runs.iter().map(RunLog::summary).collect()
}

/// Reads every run log in `run_dir` and writes `summary.csv` and
/// `correlation.csv` into `output_dir`.
pub fn analyze(run_dir: impl AsRef<Path>, output_dir: impl AsRef<Path>) -> Result<AnalysisReport> {
    let runs = read_run_dir(run_dir)?;
    let summaries = summarize_runs(&runs)?;
    let (correlations, diagnostics) = correlation_table(&summaries);
    let out = output_dir.as_ref();
    fs::create_dir_all(out).map_err(io_err(out))?;
    let summary_path = out.join(SUMMARY_FILE);
    let correlation_path = out.join(CORRELATION_FILE);
    fs::write(&summary_path, summary_csv(&summaries)).map_err(io_err(&summary_path))?;
    fs::write(&correlation_path, correlation_csv(&correlations)).map_err(io_err(&correlation_path))?;
    Ok(AnalysisReport {
        summaries,
        correlations,
        diagnostics,
        summary_path,
        correlation_path,
    })
}
