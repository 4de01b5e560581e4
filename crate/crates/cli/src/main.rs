use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use critical_reservoir::divergence::{classify_decay, DivergenceSeries};
use critical_reservoir::experiment::{
    run_batch, run_experiment, validate_config, ConfigError, ExperimentConfig, ExperimentError, ExperimentKind,
    RunArtifacts, RunOutcome,
};
use critical_reservoir::matrix::{largest_singular_value, normality_defect, parse_matrix_text, spectral_radius, SquareMatrix};

#[derive(Parser)]
#[command(name = "crit-esn", version, about = "Input-anticipating critical echo state networks")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Train and run a twin experiment from a config file or a bare experiment name.
    Run {
        /// TOML config path, or one of: reduced, grammar-violation, grammar-swap, grammar-permanent
        config: String,
        #[arg(long)]
        seed: Option<u64>,
        /// Run several seeds in parallel, e.g. `--seeds 0,1,2`.
        #[arg(long, value_delimiter = ',', conflicts_with = "seed")]
        seeds: Vec<u64>,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        horizon: Option<usize>,
    },
    /// Check a config and print it with defaults filled in.
    Validate { config: PathBuf },
    /// Classify a divergence CSV as power law or exponential.
    Fit {
        csv: PathBuf,
        #[arg(long, num_args = 2, value_names = ["LO", "HI"])]
        window: Option<Vec<usize>>,
        /// Truncate the window at the first distance below this value.
        #[arg(long)]
        floor: Option<f64>,
    },
    /// Print spectral radius, largest singular value and normality defect of a matrix file.
    Probe { matrix: PathBuf },
}

const EXIT_CONFIG: u8 = 1;
const EXIT_NUMERIC: u8 = 2;

fn main() -> ExitCode {
    let cli = Cli::parse();
    match cli.command {
        Command::Run {
            config,
            seed,
            seeds,
            out,
            horizon,
        } => run(&config, seed, &seeds, out, horizon),
        Command::Validate { config } => match validate_config(&config) {
            Ok(cfg) => {
                print!("{}", cfg.to_toml());
                ExitCode::SUCCESS
            }
            Err(e) => config_failure(&e),
        },
        Command::Fit { csv, window, floor } => fit(&csv, window, floor),
        Command::Probe { matrix } => probe(&matrix),
    }
}

fn config_failure(e: &ConfigError) -> ExitCode {
    eprintln!("error: {e}");
    ExitCode::from(EXIT_CONFIG)
}

fn load_config(arg: &str) -> Result<ExperimentConfig, ConfigError> {
    let path = Path::new(arg);
    if path.is_file() {
        return validate_config(path);
    }
    arg.parse::<ExperimentKind>().map(ExperimentConfig::defaults)
}

fn run(arg: &str, seed: Option<u64>, seeds: &[u64], out: Option<PathBuf>, horizon: Option<usize>) -> ExitCode {
    let mut cfg = match load_config(arg) {
        Ok(cfg) => cfg,
        Err(e) => return config_failure(&e),
    };
    if let Some(seed) = seed {
        cfg = cfg.with_seed(seed);
    }
    if let Some(out) = out {
        cfg.output_dir = out;
    }
    if let Some(h) = horizon {
        cfg.horizon = h;
    }
    if let Err(e) = cfg.validate() {
        return config_failure(&e);
    }

    let results = if seeds.is_empty() {
        vec![run_experiment(&cfg)]
    } else {
        run_batch(&cfg, seeds)
    };
    let mut worst = 0u8;
    for result in results {
        match result {
            Ok((outcome, artifacts)) => report(&outcome, &artifacts),
            Err(e) => {
                eprintln!("error: {e}");
                worst = worst.max(exit_byte(&e));
            }
        }
    }
    ExitCode::from(worst)
}

fn exit_byte(e: &ExperimentError) -> u8 {
    if e.exit_code() == 1 {
        EXIT_CONFIG
    } else {
        EXIT_NUMERIC
    }
}

fn report(outcome: &RunOutcome, artifacts: &RunArtifacts) {
    println!("run {}", outcome.run_id);
    println!("  output            {}", artifacts.dir.display());
    println!("  final cost        {:.3e}", outcome.final_cost);
    println!("  critical distance {:.3e}", outcome.critical_distance);
    match &outcome.fit {
        Ok(fit) => println!(
            "  decay             {:?} slope {:.4} r2 {:.4} window [{}, {}]{}",
            fit.model,
            fit.slope,
            fit.r_squared,
            fit.window.0,
            fit.window.1,
            if fit.tie { " (tie)" } else { "" }
        ),
        Err(e) => println!("  decay             not fitted: {e}"),
    }
    if let Some(t) = outcome.convergence_step {
        println!("  converged at t={t}");
    }
}

fn fit(csv: &Path, window: Option<Vec<usize>>, floor: Option<f64>) -> ExitCode {
    let text = match std::fs::read_to_string(csv) {
        Ok(t) => t,
        Err(e) => {
            eprintln!("error: cannot read {}: {e}", csv.display());
            return ExitCode::from(EXIT_CONFIG);
        }
    };
    let series = match DivergenceSeries::from_csv(&text, csv.display().to_string()) {
        Ok(s) => match floor {
            Some(f) => s.with_floor(f),
            None => s,
        },
        Err(e) => {
            eprintln!("error: {}: {e}", csv.display());
            return ExitCode::from(EXIT_CONFIG);
        }
    };
    let window = window.map_or_else(|| series.default_window(), |w| (w[0], w[1]));
    match classify_decay(&series, window) {
        Ok(fit) => {
            println!("{}", fit.to_json());
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(EXIT_NUMERIC)
        }
    }
}

fn probe(path: &Path) -> ExitCode {
    let parsed = std::fs::read_to_string(path)
        .map_err(|e| format!("cannot read {}: {e}", path.display()))
        .and_then(|t| parse_matrix_text(&t).map_err(|e| format!("{}: {e}", path.display())))
        .and_then(|m| SquareMatrix::new(m).map_err(|e| format!("{}: {e}", path.display())));
    let m = match parsed {
        Ok(m) => m,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(EXIT_CONFIG);
        }
    };
    match (spectral_radius(&m), largest_singular_value(&m)) {
        (Ok(rho), Ok(sigma)) => {
            println!("spectral_radius   {rho:.12}");
            println!("sigma_max         {sigma:.12}");
            println!("normality_defect  {:.6e}", normality_defect(&m));
            ExitCode::SUCCESS
        }
        (Err(e), _) | (_, Err(e)) => {
            eprintln!("error: {e}");
            ExitCode::from(EXIT_NUMERIC)
        }
    }
}
