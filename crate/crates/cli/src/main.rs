use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use wavespec::energy::{Algorithm, EnergyEstimator, EstimatorKind};
use wavespec::io::{feature_matrix_csv, load_dataset, read_signal, write_atomic, BenignPolicy};
use wavespec::pipeline::{extracted_features, run_pipeline, PipelineConfig};
use wavespec::spectra::{fit_slope, wavelet_spectrum, FitRange};
use wavespec::synth::{bias_gap_bootstrap, slope_bias_experiment, ContaminationSpec, LevelOverflow, SlopeBiasConfig};
use wavespec::wavelet::{dwt, dyadic_exponent, FilterPair};
use wavespec::Error;

#[derive(Parser)]
#[command(name = "wavespec", version, about = "Wavelet-spectrum slope features and spectra classification")]
struct Cli {
    /// Worker threads for parallel stages (0 = one per core).
    #[arg(long, global = true, default_value_t = 0)]
    threads: usize,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Dump the wavelet coefficients of a signal as CSV (level,index,value).
    Decompose {
        #[arg(long)]
        input: PathBuf,
        #[arg(long, default_value = "db6")]
        wavelet: String,
        #[arg(long)]
        levels: usize,
        #[arg(long)]
        out: PathBuf,
    },
    /// Per-level log2 energies and the fitted slope, as JSON.
    Spectrum {
        #[arg(long)]
        input: PathBuf,
        #[arg(long, value_enum, default_value_t = EstimatorArg::Dvar)]
        estimator: EstimatorArg,
        /// Use the O(n log n) distance variance instead of the pairwise one.
        #[arg(long)]
        fast: bool,
        #[arg(long, default_value = "db6")]
        wavelet: String,
        /// Decomposition depth; defaults to the deepest possible.
        #[arg(long)]
        levels: Option<usize>,
        #[arg(long, requires = "fit_max")]
        fit_min: Option<u32>,
        #[arg(long, requires = "fit_min")]
        fit_max: Option<u32>,
        /// Defaults to standard output.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Extract the configured feature matrix as CSV.
    Features {
        #[command(flatten)]
        data: DataArgs,
        #[arg(long)]
        out: PathBuf,
    },
    /// Run the repeated hold-out evaluation and write a JSON report.
    Classify {
        #[command(flatten)]
        data: DataArgs,
        #[arg(long)]
        reps: Option<usize>,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Synthetic experiments.
    #[command(subcommand)]
    Simulate(Simulation),
}

#[derive(Args)]
struct DataArgs {
    /// Dataset directory (case/ and control/) or a `path,label` manifest.
    #[arg(long, env = "WAVESPEC_DATA")]
    data: PathBuf,
    /// TOML pipeline configuration; omitted keys use defaults.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = BenignArg::Exclude)]
    benign: BenignArg,
}

#[derive(Subcommand)]
enum Simulation {
    /// Slope bias of both energy estimators on contaminated Brownian paths.
    BrownianBias {
        #[arg(long, default_value_t = 1000)]
        reps: usize,
        /// Contaminated coefficients per detail level (0 disables contamination).
        #[arg(long, default_value_t = 4)]
        per_level: usize,
        #[arg(long, default_value_t = 1.0)]
        noise_sd: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 1024)]
        length: usize,
        #[arg(long, default_value_t = 9)]
        levels: usize,
        /// Pairwise distance variance instead of the fast algorithm.
        #[arg(long)]
        naive: bool,
        /// Slope CSV; the JSON summary is written beside it.
        #[arg(long)]
        out: PathBuf,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum EstimatorArg {
    Var,
    Dvar,
}

#[derive(Clone, Copy, ValueEnum)]
enum BenignArg {
    Exclude,
    AsCase,
    AsControl,
}

impl From<BenignArg> for BenignPolicy {
    fn from(b: BenignArg) -> Self {
        match b {
            BenignArg::Exclude => BenignPolicy::Exclude,
            BenignArg::AsCase => BenignPolicy::AsCase,
            BenignArg::AsControl => BenignPolicy::AsControl,
        }
    }
}

fn exit_code(err: &Error) -> u8 {
    match err.root() {
        Error::Convergence { .. } => 3,
        Error::Parameter(_) | Error::Config(_) => 1,
        _ => 2,
    }
}

fn load_config(path: Option<&Path>) -> wavespec::Result<PipelineConfig> {
    match path {
        Some(p) => PipelineConfig::load(p),
        None => Ok(PipelineConfig::default()),
    }
}

fn run(command: Command) -> wavespec::Result<()> {
    match command {
        Command::Decompose { input, wavelet, levels, out } => {
            let signal = read_signal(&input)?;
            let decomp = dwt(&signal, &FilterPair::from_name(&wavelet)?, levels)?;
            let mut csv = String::from("level,index,value\n");
            for (i, v) in decomp.smooth().iter().enumerate() {
                csv.push_str(&format!("smooth,{i},{v}\n"));
            }
            for (level, coeffs) in decomp.levels() {
                for (i, v) in coeffs.iter().enumerate() {
                    csv.push_str(&format!("{level},{i},{v}\n"));
                }
            }
            write_atomic(&out, csv.as_bytes())
        }
        Command::Spectrum { input, estimator, fast, wavelet, levels, fit_min, fit_max, out } => {
            let signal = read_signal(&input)?;
            let levels = match levels {
                Some(l) => l,
                None => dyadic_exponent(signal.len())
                    .map(|j| j.saturating_sub(1) as usize)
                    .ok_or_else(|| Error::Input(format!("signal length {} is not a power of two", signal.len())))?,
            };
            let decomp = dwt(&signal, &FilterPair::from_name(&wavelet)?, levels)?;
            let kind = match estimator {
                EstimatorArg::Var => EstimatorKind::MeanSquare,
                EstimatorArg::Dvar => EstimatorKind::DistanceVariance,
            };
            let algorithm = if fast { Algorithm::Fast } else { Algorithm::Naive };
            let spectrum = wavelet_spectrum(&decomp, EnergyEstimator { kind, algorithm })?;
            let range = match (fit_min, fit_max) {
                (Some(min), Some(max)) => FitRange::Explicit { min, max },
                _ => FitRange::Default,
            };
            let (lo, hi) = range.resolve(decomp.coarsest_level(), decomp.finest_level());
            let fit = fit_slope(&spectrum, lo, hi)?;
            let json = serde_json::json!({ "spectrum": spectrum, "fit": fit });
            let text = serde_json::to_string_pretty(&json)? + "\n";
            match out {
                Some(path) => write_atomic(&path, text.as_bytes()),
                None => {
                    print!("{text}");
                    Ok(())
                }
            }
        }
        Command::Features { data, out } => {
            let config = load_config(data.config.as_deref())?;
            config.validate()?;
            let dataset = load_dataset(&data.data, data.benign.into())?;
            let matrix = extracted_features(&config, &dataset)?;
            let names: Vec<String> = dataset.samples().iter().map(|s| s.name.clone()).collect();
            write_atomic(&out, feature_matrix_csv(&matrix, &names).as_bytes())
        }
        Command::Classify { data, reps, seed, out } => {
            let mut config = load_config(data.config.as_deref())?;
            config.reps = reps.unwrap_or(config.reps);
            config.seed = seed.unwrap_or(config.seed);
            config.validate()?;
            let dataset = load_dataset(&data.data, data.benign.into())?;
            let report = run_pipeline(&config, &dataset)?;
            report.write(&out)?;
            let e = &report.evaluation;
            eprintln!(
                "accuracy {:.2}% (sd {:.2}), sensitivity {:.2}%, specificity {:.2}% over {} repetitions",
                e.accuracy, e.accuracy_sd, e.sensitivity, e.specificity, e.repetitions
            );
            Ok(())
        }
        Command::Simulate(Simulation::BrownianBias { reps, per_level, noise_sd, seed, length, levels, naive, out }) => {
            let config = SlopeBiasConfig {
                reps,
                length,
                num_levels: levels,
                contamination: ContaminationSpec {
                    coefficients_per_level: per_level,
                    noise_sd,
                    seed,
                    overflow: LevelOverflow::Saturate,
                },
                dvar_algorithm: if naive { Algorithm::Naive } else { Algorithm::Fast },
                seed,
                ..Default::default()
            };
            let summary = slope_bias_experiment(&config)?;
            summary.write_csv(&out)?;
            summary.write_json(&out.with_extension("json"))?;
            eprintln!(
                "mean slope: var {:.4} (sd {:.4}), dvar {:.4} (sd {:.4}), theoretical {}",
                summary.variance.mean,
                summary.variance.sd,
                summary.distance_variance.mean,
                summary.distance_variance.sd,
                summary.theoretical_slope
            );
            if reps > 1 {
                let ci = bias_gap_bootstrap(&summary, 2000, 0.98, seed)?;
                eprintln!("bias gap |var+2| - |dvar+2| = {:.4}, 98% interval [{:.4}, {:.4}]", ci.estimate, ci.lower, ci.upper);
            }
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(cli.threads).build_global() {
        eprintln!("error: {e}");
        return ExitCode::from(1);
    }
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}
