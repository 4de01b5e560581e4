//! Configured end-to-end runs: train, run the matching twin experiment, fit
//! the divergence and write every artifact under `<output_dir>/<run_id>/`.
//!
//! Configs are TOML. Only `experiment` is required; everything else defaults
//! to the published settings for that experiment.
//!
//! ```toml
//! experiment = "grammar-violation"
//! seed = 3
//!
//! [train]
//! learning_rate = 0.009
//! ```

use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use serde_json::json;
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::divergence::{classify_decay, run_twins, DecayFit, DivergenceError, DivergenceSeries};
use crate::matrix::{matrix_to_text, ConstraintMode};
use crate::reservoir::{max_critical_distance, simulate, ReservoirError, TransferFunction};
use crate::rng;
use crate::sequences::{
    alternating_sequence, grammar_sequence, inject_violation, permanent_violation, swap_block, InputSequence,
    SequenceError, BLOCK_LEN,
};
use crate::trainer::{initial_params, train, TrainConfig, TrainError, TrainTrace, COST_WINDOW};

/// Relative distance at which two twins count as converged.
pub const CONVERGENCE_FRACTION: f64 = 1e-6;

/// Post-training steps inspected for the criticality report.
pub const CRITICALITY_PROBE: usize = 100;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ExperimentKind {
    /// Eight neurons, alternating ±1 input, one flipped input.
    Reduced,
    /// Grammar model, one block with the wrong terminal token.
    GrammarViolation,
    /// Grammar model, one block replaced by the other grammatical block.
    GrammarSwap,
    /// Grammar model, wrong terminals from the perturbation onward in both twins.
    GrammarPermanent,
}

impl ExperimentKind {
    pub const ALL: [ExperimentKind; 4] = [
        ExperimentKind::Reduced,
        ExperimentKind::GrammarViolation,
        ExperimentKind::GrammarSwap,
        ExperimentKind::GrammarPermanent,
    ];

    pub fn name(self) -> &'static str {
        match self {
            ExperimentKind::Reduced => "reduced",
            ExperimentKind::GrammarViolation => "grammar-violation",
            ExperimentKind::GrammarSwap => "grammar-swap",
            ExperimentKind::GrammarPermanent => "grammar-permanent",
        }
    }

    pub fn is_grammar(self) -> bool {
        self != ExperimentKind::Reduced
    }

    fn input_dim(self) -> usize {
        if self.is_grammar() {
            2
        } else {
            1
        }
    }
}

impl fmt::Display for ExperimentKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ExperimentKind {
    type Err = ConfigError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Self::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| ConfigError::UnknownExperiment {
                name: s.to_string(),
                valid: Self::ALL.iter().map(|k| k.name()).collect::<Vec<_>>().join(", "),
            })
    }
}

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("{path}: parse error at line {line}, column {column}: {message}")]
    Parse {
        path: String,
        line: usize,
        column: usize,
        message: String,
    },
    #[error("{field}: {message}")]
    Field { field: String, message: String },
    #[error("unknown experiment {name:?}; valid names: {valid}")]
    UnknownExperiment { name: String, valid: String },
    #[error("cannot read {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

#[derive(Debug, Error)]
pub enum ExperimentError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("training failed: {0}")]
    Train(#[from] TrainError),
    #[error("twin run failed: {0}")]
    Twins(#[from] DivergenceError),
    #[error("input construction failed: {0}")]
    Sequence(#[from] SequenceError),
    #[error("reservoir failure: {0}")]
    Reservoir(#[from] ReservoirError),
    #[error("cannot write {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

impl ExperimentError {
    /// Process exit code: 1 for configuration and I/O problems, 2 for numeric failures.
    pub fn exit_code(&self) -> i32 {
        match self {
            ExperimentError::Config(_) | ExperimentError::Io { .. } => 1,
            _ => 2,
        }
    }
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawTrain {
    learning_rate: Option<f64>,
    constraint: Option<ConstraintMode>,
    seed: Option<u64>,
    iterations: Option<usize>,
    s_start: Option<f64>,
    s_end: Option<f64>,
    ramp_iterations: Option<usize>,
    transient: Option<usize>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    experiment: String,
    seed: Option<u64>,
    neurons: Option<usize>,
    constraint: Option<ConstraintMode>,
    transfer: Option<TransferFunction>,
    horizon: Option<usize>,
    output_dir: Option<PathBuf>,
    perturb_offset: Option<usize>,
    fit_window: Option<(usize, usize)>,
    #[serde(default)]
    train: RawTrain,
}

/// A fully resolved, validated experiment description.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub experiment: ExperimentKind,
    pub seed: u64,
    pub neurons: usize,
    pub transfer: TransferFunction,
    pub horizon: usize,
    pub output_dir: PathBuf,
    /// Step (reduced) or block (grammar) index, counted after the transient,
    /// at which the twins' inputs first differ.
    pub perturb_offset: usize,
    /// Fit window in 1-based iterations; `[10, horizon/2]` when absent.
    pub fit_window: Option<(usize, usize)>,
    pub train: TrainConfig,
}

impl ExperimentConfig {
    /// Published defaults for `kind`.
    pub fn defaults(kind: ExperimentKind) -> Self {
        let (neurons, train) = match kind {
            ExperimentKind::Reduced => (8, TrainConfig::reduced_model()),
            _ => (15, TrainConfig::grammar_model()),
        };
        Self {
            experiment: kind,
            seed: 0,
            neurons,
            transfer: TransferFunction::SinCritical,
            horizon: 10_000,
            output_dir: PathBuf::from("runs"),
            perturb_offset: 0,
            fit_window: None,
            train,
        }
    }

    /// Same config with a different root seed.
    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self.train.seed = seed;
        self
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        let field = |field: &str, message: String| Err(ConfigError::Field { field: field.to_string(), message });
        if self.neurons == 0 {
            return field("neurons", "must be positive".into());
        }
        if self.horizon == 0 {
            return field("horizon", "must be positive".into());
        }
        if self.train.seed != self.seed {
            return field("train.seed", "must equal the root seed".into());
        }
        if let Err(TrainError::InvalidConfig { field: f, reason }) = self.train.validate() {
            return field(&format!("train.{f}"), reason);
        }
        if let Some((lo, hi)) = self.fit_window {
            if lo == 0 || lo >= hi || hi > self.horizon {
                return field("fit_window", format!("[{lo}, {hi}] must satisfy 1 <= lo < hi <= horizon ({})", self.horizon));
            }
        }
        if self.experiment.is_grammar() {
            if !self.train.iterations.is_multiple_of(BLOCK_LEN) {
                return field("train.iterations", format!("must be a multiple of {BLOCK_LEN} for grammar experiments"));
            }
            if !self.train.transient.is_multiple_of(BLOCK_LEN) {
                return field("train.transient", format!("must be a multiple of {BLOCK_LEN} for grammar experiments"));
            }
        }
        Ok(())
    }

    /// Parses TOML text, applies defaults and validates.
    pub fn from_toml(text: &str, origin: &str) -> Result<Self, ConfigError> {
        let raw: RawConfig = toml::from_str(text).map_err(|e| {
            let (line, column) = e.span().map_or((0, 0), |span| line_column(text, span.start));
            ConfigError::Parse {
                path: origin.to_string(),
                line,
                column,
                message: e.message().to_string(),
            }
        })?;
        let kind: ExperimentKind = raw.experiment.parse()?;
        let t = raw.train;
        let seed = either("seed", raw.seed, "train.seed", t.seed)?.unwrap_or(0);
        let mut cfg = Self::defaults(kind).with_seed(seed);
        if let Some(v) = raw.neurons {
            cfg.neurons = v;
        }
        if let Some(v) = either("constraint", raw.constraint, "train.constraint", t.constraint)? {
            cfg.train.constraint = v;
        }
        if let Some(v) = raw.transfer {
            cfg.transfer = v;
        }
        if let Some(v) = raw.horizon {
            cfg.horizon = v;
        }
        if let Some(v) = raw.output_dir {
            cfg.output_dir = v;
        }
        if let Some(v) = raw.perturb_offset {
            cfg.perturb_offset = v;
        }
        cfg.fit_window = raw.fit_window;
        if let Some(v) = t.learning_rate {
            cfg.train.learning_rate = v;
        }
        if let Some(v) = t.iterations {
            cfg.train.iterations = v;
        }
        if let Some(v) = t.s_start {
            cfg.train.s_start = v;
        }
        if let Some(v) = t.s_end {
            cfg.train.s_end = v;
        }
        if let Some(v) = t.ramp_iterations {
            cfg.train.ramp_iterations = v;
        }
        if let Some(v) = t.transient {
            cfg.train.transient = v;
        }
        cfg.validate()?;
        Ok(cfg)
    }

    /// Deterministic identifier: hash of the config with the output directory removed.
    pub fn run_id(&self) -> String {
        let mut echo = serde_json::to_value(self).expect("config is serializable");
        if let Some(obj) = echo.as_object_mut() {
            obj.remove("output_dir");
        }
        let digest = Sha256::digest(echo.to_string().as_bytes());
        let hex: String = digest.iter().take(8).map(|b| format!("{b:02x}")).collect();
        format!("{}-s{}-{hex}", self.experiment.name(), self.seed)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config is serializable")
    }
}

/// A setting that may appear at the top level or under `[train]`.
fn either<T: PartialEq + fmt::Debug>(top: &str, a: Option<T>, nested: &str, b: Option<T>) -> Result<Option<T>, ConfigError> {
    match (a, b) {
        (Some(x), Some(y)) if x != y => Err(ConfigError::Field {
            field: nested.to_string(),
            message: format!("{y:?} conflicts with {top} = {x:?}"),
        }),
        (a, b) => Ok(a.or(b)),
    }
}

fn line_column(text: &str, offset: usize) -> (usize, usize) {
    let before = &text[..offset.min(text.len())];
    let line = before.matches('\n').count() + 1;
    let column = before.rfind('\n').map_or(before.len(), |i| before.len() - i - 1) + 1;
    (line, column)
}

/// Reads and validates a config file.
pub fn validate_config(path: &Path) -> Result<ExperimentConfig, ConfigError> {
    let text = fs::read_to_string(path).map_err(|source| ConfigError::Io {
        path: path.display().to_string(),
        source,
    })?;
    ExperimentConfig::from_toml(&text, &path.display().to_string())
}

/// Everything a run computes, before anything touches the filesystem.
#[derive(Debug, Clone)]
pub struct RunOutcome {
    pub config: ExperimentConfig,
    pub run_id: String,
    pub trace: TrainTrace,
    /// Mean instantaneous cost over the last [`COST_WINDOW`] training iterations.
    pub final_cost: f64,
    /// Largest distance of any pre-activation to the critical set over the
    /// first [`CRITICALITY_PROBE`] frozen-weight steps after training.
    pub critical_distance: f64,
    pub series: DivergenceSeries,
    pub fit: Result<DecayFit, DivergenceError>,
    /// First `t` with `d(t) ≤ 1e-6 · d(1)`.
    pub convergence_step: Option<usize>,
}

struct TwinInputs {
    warmup: InputSequence,
    a: InputSequence,
    b: InputSequence,
}

fn build_inputs(cfg: &ExperimentConfig) -> Result<(InputSequence, TwinInputs), ExperimentError> {
    let tr = &cfg.train;
    let kind = cfg.experiment;
    let post = tr.transient + (cfg.perturb_offset + 2) * BLOCK_LEN + cfg.horizon;
    let total = tr.iterations + post;
    let seq = if kind.is_grammar() {
        grammar_sequence(total.div_ceil(BLOCK_LEN), rng::derive_seed(cfg.seed, "grammar"))
    } else {
        alternating_sequence(total)
    };
    let warmup = seq.slice(tr.iterations, tr.iterations + tr.transient);
    let twin = seq.slice(tr.iterations + tr.transient, seq.len());
    let k = cfg.perturb_offset;
    let (a, b) = match kind {
        ExperimentKind::Reduced => {
            let mut values: Vec<f64> = twin.vectors().iter().map(|v| v[0]).collect();
            values[k] = -values[k];
            (twin.clone(), InputSequence::from_scalars(&values))
        }
        ExperimentKind::GrammarViolation => (twin.clone(), inject_violation(&twin, k)?),
        ExperimentKind::GrammarSwap => (twin.clone(), swap_block(&twin, k)?),
        ExperimentKind::GrammarPermanent => (permanent_violation(&twin, k)?, permanent_violation(&twin, k + 1)?),
    };
    Ok((seq, TwinInputs { warmup, a, b }))
}

/// Trains, runs the twins and fits, without writing anything.
pub fn execute(cfg: &ExperimentConfig) -> Result<RunOutcome, ExperimentError> {
    cfg.validate()?;
    let (seq, twins) = build_inputs(cfg)?;
    let params = initial_params(cfg.neurons, cfg.experiment.input_dim(), cfg.transfer, &cfg.train);
    let trace = train(&params, &seq, &cfg.train)?;

    let probe_len = CRITICALITY_PROBE.min(twins.warmup.len().max(1));
    let probe_inputs = seq.slice(cfg.train.iterations, cfg.train.iterations + probe_len);
    let critical_distance = simulate(&trace.params, &trace.final_state, probe_inputs.vectors())?
        .iter()
        .map(|s| max_critical_distance(s.x_lin()))
        .fold(0.0, f64::max);

    let series = run_twins(&trace.params, &trace.final_state, &twins.warmup, &twins.a, &twins.b, cfg.horizon)?;
    let window = cfg.fit_window.unwrap_or_else(|| series.default_window());
    let fit = classify_decay(&series, window);
    let convergence_step = series.first_below(CONVERGENCE_FRACTION);
    Ok(RunOutcome {
        run_id: cfg.run_id(),
        final_cost: trace.final_running_mean(COST_WINDOW),
        config: cfg.clone(),
        trace,
        critical_distance,
        series,
        fit,
        convergence_step,
    })
}

/// Paths of the files written for one run.
#[derive(Debug, Clone)]
pub struct RunArtifacts {
    pub dir: PathBuf,
    pub files: Vec<PathBuf>,
}

fn write_file(dir: &Path, name: &str, contents: &str, files: &mut Vec<PathBuf>) -> Result<(), ExperimentError> {
    let path = dir.join(name);
    fs::write(&path, contents).map_err(|source| ExperimentError::Io {
        path: path.display().to_string(),
        source,
    })?;
    files.push(path);
    Ok(())
}

/// Writes trace, divergence, fit, parameter and manifest files under `<output_dir>/<run_id>/`.
pub fn write_artifacts(outcome: &RunOutcome) -> Result<RunArtifacts, ExperimentError> {
    let dir = outcome.config.output_dir.join(&outcome.run_id);
    fs::create_dir_all(&dir).map_err(|source| ExperimentError::Io {
        path: dir.display().to_string(),
        source,
    })?;
    let mut files = Vec::new();
    let run_id = &outcome.run_id;
    let params = &outcome.trace.params;

    let tag = format!("# run_id: {run_id}\n");
    write_file(&dir, "trace.csv", &(tag.clone() + &outcome.trace.cost_csv()), &mut files)?;
    write_file(&dir, "divergence.csv", &(tag.clone() + &outcome.series.to_csv()), &mut files)?;
    if let Ok(fit) = &outcome.fit {
        let mut value = serde_json::to_value(fit).expect("fit is serializable");
        value["run_id"] = json!(run_id);
        write_file(&dir, "fit.json", &pretty(&value), &mut files)?;
    }
    write_file(&dir, "W.txt", &(tag.clone() + &params.w().to_text()), &mut files)?;
    write_file(&dir, "w_in.txt", &(tag + &matrix_to_text(params.w_in())), &mut files)?;
    let params_manifest = json!({
        "run_id": run_id,
        "neurons": params.n(),
        "inputs": params.m(),
        "transfer": params.transfer(),
        "constraint": outcome.config.train.constraint,
        "seed": outcome.config.seed,
        "recurrent_weights": "W.txt",
        "input_weights": "w_in.txt",
        "train": outcome.config.train,
    });
    write_file(&dir, "params.json", &pretty(&params_manifest), &mut files)?;

    let mut artifacts: Vec<String> = files
        .iter()
        .filter_map(|p| p.file_name().map(|n| n.to_string_lossy().into_owned()))
        .collect();
    artifacts.push("manifest.json".into());
    let manifest = json!({
        "run_id": run_id,
        "package": env!("CARGO_PKG_NAME"),
        "version": env!("CARGO_PKG_VERSION"),
        "rng": rng::ALGORITHM,
        "root_seed": outcome.config.seed,
        "derived_seeds": {
            "init": rng::derive_seed(outcome.config.seed, "init"),
            "grammar": rng::derive_seed(outcome.config.seed, "grammar"),
        },
        "config": outcome.config,
        "artifacts": artifacts,
        "results": {
            "final_running_mean_cost": outcome.final_cost,
            "cost_window": COST_WINDOW,
            "critical_distance": outcome.critical_distance,
            "initial_distance": outcome.series.at(1),
            "convergence_step": outcome.convergence_step,
            "fit": outcome.fit.as_ref().ok(),
            "fit_error": outcome.fit.as_ref().err().map(|e| e.to_string()),
        },
    });
    write_file(&dir, "manifest.json", &pretty(&manifest), &mut files)?;
    Ok(RunArtifacts { dir, files })
}

fn pretty(value: &serde_json::Value) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("json value is serializable");
    s.push('\n');
    s
}

/// Executes a config and writes its artifacts.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<(RunOutcome, RunArtifacts), ExperimentError> {
    let outcome = execute(cfg)?;
    let artifacts = write_artifacts(&outcome)?;
    Ok((outcome, artifacts))
}

/// Runs one experiment per seed on separate threads. Each run writes to its own directory.
pub fn run_batch(cfg: &ExperimentConfig, seeds: &[u64]) -> Vec<Result<(RunOutcome, RunArtifacts), ExperimentError>> {
    std::thread::scope(|scope| {
        let handles: Vec<_> = seeds
            .iter()
            .map(|&seed| {
                let cfg = cfg.clone().with_seed(seed);
                scope.spawn(move || run_experiment(&cfg))
            })
            .collect();
        handles
            .into_iter()
            .map(|h| h.join().expect("experiment thread panicked"))
            .collect()
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn minimal_config_gets_published_defaults() {
        let cfg = ExperimentConfig::from_toml("experiment = \"reduced\"\n", "inline").unwrap();
        assert_eq!(cfg.neurons, 8);
        assert_eq!(cfg.train.constraint, ConstraintMode::Orthogonal);
        assert_eq!(cfg.train.learning_rate, 0.01);
        assert_eq!(cfg.train.iterations, 5000);

        let cfg = ExperimentConfig::from_toml("experiment = \"grammar-violation\"\n", "inline").unwrap();
        assert_eq!(cfg.neurons, 15);
        assert_eq!(cfg.train.constraint, ConstraintMode::GeneralUnitSpectralRadius);
        assert_eq!(cfg.train.learning_rate, 0.009);
        assert_eq!(cfg.train.iterations, 20_000);
        assert_eq!(cfg.train.ramp_iterations, 7500);
        assert_eq!(cfg.train.s_start, 0.8);
        assert_eq!(cfg.train.s_end, 1.0);
        assert_eq!(cfg.train.transient, 1000);
        assert_eq!(cfg.horizon, 10_000);
    }

    #[test]
    fn overrides_apply() {
        let text = "experiment = \"grammar-swap\"\nseed = 9\nneurons = 10\nfit_window = [5, 50]\n[train]\nlearning_rate = 0.005\n";
        let cfg = ExperimentConfig::from_toml(text, "inline").unwrap();
        assert_eq!(cfg.seed, 9);
        assert_eq!(cfg.train.seed, 9);
        assert_eq!(cfg.neurons, 10);
        assert_eq!(cfg.fit_window, Some((5, 50)));
        assert_eq!(cfg.train.learning_rate, 0.005);
    }

    #[test]
    fn s_start_above_one_is_named() {
        let err = ExperimentConfig::from_toml("experiment = \"reduced\"\n[train]\ns_start = 1.2\n", "inline").unwrap_err();
        match err {
            ConfigError::Field { field, .. } => assert_eq!(field, "train.s_start"),
            other => panic!("{other}"),
        }
    }

    #[test]
    fn unknown_experiment_lists_valid_names() {
        let err = ExperimentConfig::from_toml("experiment = \"lstm\"\n", "inline").unwrap_err();
        let msg = err.to_string();
        for k in ExperimentKind::ALL {
            assert!(msg.contains(k.name()), "{msg}");
        }
    }

    #[test]
    fn parse_errors_carry_line_and_column() {
        let err = ExperimentConfig::from_toml("experiment = \"reduced\"\nseed = = 3\n", "cfg.toml").unwrap_err();
        match err {
            ConfigError::Parse { line, column, .. } => {
                assert_eq!(line, 2);
                assert!(column >= 6, "column {column}");
            }
            other => panic!("{other}"),
        }
        let err = ExperimentConfig::from_toml("experiment = \"reduced\"\nbogus = 1\n", "cfg.toml").unwrap_err();
        assert!(matches!(err, ConfigError::Parse { line: 2, .. }), "{err}");
    }

    #[test]
    fn grammar_iterations_must_align_to_blocks() {
        let err = ExperimentConfig::from_toml("experiment = \"grammar-violation\"\n[train]\niterations = 9999\n", "x").unwrap_err();
        assert!(err.to_string().starts_with("train.iterations"), "{err}");
    }

    #[test]
    fn bad_fit_window_rejected() {
        let err = ExperimentConfig::from_toml("experiment = \"reduced\"\nfit_window = [100, 20000]\n", "x").unwrap_err();
        assert!(err.to_string().starts_with("fit_window"), "{err}");
    }

    #[test]
    fn run_id_ignores_output_dir_and_tracks_seed() {
        let a = ExperimentConfig::defaults(ExperimentKind::Reduced);
        let mut b = a.clone();
        b.output_dir = PathBuf::from("elsewhere");
        assert_eq!(a.run_id(), b.run_id());
        assert_ne!(a.run_id(), a.clone().with_seed(1).run_id());
        assert!(a.run_id().starts_with("reduced-s0-"));
    }

    #[test]
    fn resolved_config_round_trips_through_toml() {
        let mut cfg = ExperimentConfig::defaults(ExperimentKind::GrammarPermanent).with_seed(12);
        cfg.fit_window = Some((10, 400));
        cfg.train.constraint = ConstraintMode::SkewSymmetricUnitSpectrum;
        let text = cfg.to_toml();
        let back: ExperimentConfig = toml::from_str(&text).unwrap();
        assert_eq!(back, cfg);
        assert_eq!(ExperimentConfig::from_toml(&text, "echo").unwrap(), cfg);
    }

    #[test]
    fn nested_and_top_level_settings_must_agree() {
        let text = "experiment = \"reduced\"\nconstraint = \"orthogonal\"\n[train]\nconstraint = \"general-unit-spectral-radius\"\n";
        let err = ExperimentConfig::from_toml(text, "x").unwrap_err();
        assert!(err.to_string().starts_with("train.constraint"), "{err}");
        let err = ExperimentConfig::from_toml("experiment = \"reduced\"\nseed = 1\n[train]\nseed = 2\n", "x").unwrap_err();
        assert!(err.to_string().starts_with("train.seed"), "{err}");
        let cfg = ExperimentConfig::from_toml("experiment = \"reduced\"\n[train]\nseed = 4\n", "x").unwrap();
        assert_eq!((cfg.seed, cfg.train.seed), (4, 4));
    }

    #[test]
    fn twin_inputs_differ_where_expected() {
        let mut cfg = ExperimentConfig::defaults(ExperimentKind::GrammarPermanent);
        cfg.train.iterations = 40;
        cfg.train.ramp_iterations = 20;
        cfg.train.transient = 8;
        cfg.horizon = 50;
        cfg.perturb_offset = 2;
        let (_, twins) = build_inputs(&cfg).unwrap();
        let diff: Vec<usize> = (0..twins.a.len()).filter(|&t| twins.a.vectors()[t] != twins.b.vectors()[t]).collect();
        assert_eq!(diff, vec![2 * BLOCK_LEN + 3]);
        assert!(twins.a.block_is_grammatical(1).unwrap());
        assert!(!twins.a.block_is_grammatical(3).unwrap());
        assert!(!twins.b.block_is_grammatical(3).unwrap());
        assert!(twins.b.block_is_grammatical(2).unwrap());

        cfg.experiment = ExperimentKind::GrammarSwap;
        let (_, twins) = build_inputs(&cfg).unwrap();
        let diff: Vec<usize> = (0..twins.a.len()).filter(|&t| twins.a.vectors()[t] != twins.b.vectors()[t]).collect();
        assert_eq!(diff, vec![9, 11]);
    }
}
