use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand, ValueEnum};

use ipbnn::data::read_activation_dump;
use ipbnn::estimator::{
    benchmark_csv, bernoulli_benchmark, check_regime, count_patterns, mi_input_representation, mi_representation_label,
    BenchmarkConfig,
};
use ipbnn::experiment::{analyze, read_run_dir, run_cell_with, summarize_runs, ExperimentConfig, RunLog};
use ipbnn::plot::{plot_compression_scatter, plot_entropy_benchmark, plot_ip, plot_mi_accuracy};

/// Plug-in information-plane experiments on binary neural networks.
#[derive(Parser)]
#[command(name = "ipbnn", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Plug-in entropy of i.i.d. Bernoulli vectors against the true entropy.
    BenchEntropy(BenchArgs),
    /// Train every (λ, seed) cell of a config and write one JSONL log per cell.
    Train(TrainArgs),
    /// Summarise a directory of run logs into summary.csv and correlation.csv.
    Analyze {
        #[arg(long)]
        runs: PathBuf,
        /// Output directory for the two CSVs.
        #[arg(long)]
        out: PathBuf,
    },
    /// Render an SVG figure from a directory of run logs.
    Plot(PlotArgs),
    /// Entropy and information estimates of an activation dump.
    Estimate {
        #[arg(long)]
        dump: PathBuf,
    },
}

#[derive(clap::Args)]
struct BenchArgs {
    /// Samples per repetition.
    #[arg(long, default_value_t = 1000)]
    n: usize,
    #[arg(long, default_value_t = 20)]
    reps: usize,
    #[arg(long, value_delimiter = ',', default_value = "0.5,0.7,0.9")]
    p: Vec<f64>,
    #[arg(long, default_value_t = 1)]
    dmin: usize,
    #[arg(long, default_value_t = 20)]
    dmax: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// CSV destination; standard output when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Optional SVG figure.
    #[arg(long)]
    plot: Option<PathBuf>,
}

#[derive(clap::Args)]
struct TrainArgs {
    #[arg(long)]
    config: PathBuf,
    #[arg(long)]
    out: PathBuf,
    /// Run a single seed instead of the configured list.
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    stride: Option<u32>,
    #[arg(long)]
    epochs: Option<u32>,
    #[arg(long, short)]
    quiet: bool,
}

#[derive(Clone, Copy, ValueEnum)]
enum PlotKind {
    Ip,
    Compression,
    MiAccuracy,
}

#[derive(clap::Args)]
struct PlotArgs {
    #[arg(long)]
    runs: PathBuf,
    #[arg(long, value_enum)]
    kind: PlotKind,
    /// Layer offsets (−1 is the last hidden layer); comma separated for `ip`.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true, default_value = "-1")]
    layer: Vec<i32>,
    /// Run plotted by `ip`; the first log in file-name order by default.
    #[arg(long)]
    run_id: Option<String>,
    #[arg(long)]
    out: PathBuf,
}

fn write_file(path: &Path, contents: &str) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    }
    fs::write(path, contents).with_context(|| format!("writing {}", path.display()))
}

fn bench(args: BenchArgs) -> Result<()> {
    if args.dmax < args.dmin {
        bail!("--dmax {} is below --dmin {}", args.dmax, args.dmin);
    }
    let cfg = BenchmarkConfig {
        sample_count: args.n,
        dims: args.dmin..=args.dmax,
        ps: args.p,
        repetitions: args.reps,
        seed: args.seed,
    };
    let rows = bernoulli_benchmark(&cfg)?;
    let csv = benchmark_csv(&rows);
    match &args.out {
        Some(path) => write_file(path, &csv)?,
        None => std::io::stdout().write_all(csv.as_bytes())?,
    }
    if let Some(path) = &args.plot {
        write_file(path, &plot_entropy_benchmark(&rows)?)?;
    }
    Ok(())
}

fn train(args: TrainArgs) -> Result<()> {
    let config = ExperimentConfig::load(&args.config)?.with_overrides(args.seed, args.stride, args.epochs)?;
    let data = config.load_data()?;
    fs::create_dir_all(&args.out).with_context(|| format!("creating {}", args.out.display()))?;
    for &lambda in &config.lambdas {
        for &seed in &config.seeds {
            let log = run_cell_with(&config, &data, lambda, seed, |rec| {
                if !args.quiet && (rec.epoch % 100 == 0 || rec.epoch == config.epochs) {
                    eprintln!(
                        "λ={lambda} seed={seed} epoch {}: loss {:.4}, accuracy {:.2}%",
                        rec.epoch, rec.train_loss, rec.val_accuracy
                    );
                }
            })?;
            let path = args.out.join(format!("{}.jsonl", log.header.run_id));
            log.write(&path)?;
            println!("{}", path.display());
        }
    }
    Ok(())
}

fn pick_run(runs: Vec<RunLog>, run_id: Option<&str>) -> Result<RunLog> {
    match run_id {
        None => Ok(runs.into_iter().next().expect("read_run_dir returns at least one run")),
        Some(id) => runs
            .into_iter()
            .find(|r| r.header.run_id == id)
            .with_context(|| format!("no run with id {id}")),
    }
}

fn plot(args: PlotArgs) -> Result<()> {
    let runs = read_run_dir(&args.runs)?;
    let svg = match args.kind {
        PlotKind::Ip => plot_ip(&pick_run(runs, args.run_id.as_deref())?, &args.layer)?,
        PlotKind::Compression => plot_compression_scatter(&summarize_runs(&runs)?)?,
        PlotKind::MiAccuracy => {
            let [layer] = args.layer[..] else {
                bail!("mi-accuracy takes exactly one --layer");
            };
            plot_mi_accuracy(&summarize_runs(&runs)?, layer)?
        }
    };
    write_file(&args.out, &svg)
}

fn estimate(path: &Path) -> Result<()> {
    let dump = read_activation_dump(path)?;
    let h = count_patterns(&dump.patterns)?.entropy();
    let mi_xt = mi_input_representation(&dump.patterns)?;
    let mi_ty = mi_representation_label(&dump.patterns, &dump.labels)?;
    let v = check_regime(dump.sample_count() as u64, dump.width().max(1) as u32);
    println!("samples,width,classes,entropy_bits,mi_xt_bits,mi_ty_bits,reliable,max_reliable_width");
    println!(
        "{},{},{},{h},{mi_xt},{mi_ty},{},{}",
        dump.sample_count(),
        dump.width(),
        dump.class_count,
        v.reliable,
        v.max_reliable_width
    );
    Ok(())
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::BenchEntropy(a) => bench(a),
        Command::Train(a) => train(a),
        Command::Analyze { runs, out } => {
            let report = analyze(&runs, &out)?;
            for d in &report.diagnostics {
                eprintln!("{d}");
            }
            println!("{}", report.summary_path.display());
            println!("{}", report.correlation_path.display());
            Ok(())
        }
        Command::Plot(a) => plot(a),
        Command::Estimate { dump } => estimate(&dump),
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
