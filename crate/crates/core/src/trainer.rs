//! Anticipation training of the recurrent and input weights.
//!
//! The cost is `E = Σ_i ⟨cos²(x_lin_i)⟩_t`, minimal when every pre-activation
//! sits on a critical point `π(n + 1/2)` of the sinusoidal transfer function.
//! Training is online: each iteration takes one gradient step on the
//! instantaneous cost, re-projects `W` onto the chosen constraint set and
//! multiplies it by the current spectral scale.
//!
//! The state advances through the updated weights, i.e. after the weight
//! update the pre-activation of the current tick is recomputed with the new
//! `W` and `w_in`. At the critical point the reservoir has no linear damping,
//! so state transients excited by stale weights would otherwise never settle.

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::matrix::{self, ConstraintMode, MatrixError, SquareMatrix};
use crate::reservoir::{shape_error, ReservoirError, ReservoirParams, ReservoirState, TransferFunction};
use crate::rng;
use crate::sequences::InputSequence;

/// Window length used when reporting the running-mean cost.
pub const COST_WINDOW: usize = 500;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum TrainError {
    #[error("invalid train config: {field}: {reason}")]
    InvalidConfig { field: &'static str, reason: String },
    #[error("input sequence has {got} steps, training needs {needed}")]
    InputTooShort { needed: usize, got: usize },
    #[error("non-finite cost at iteration {iteration}")]
    NonFiniteCost { iteration: usize },
    #[error("constraint projection failed at iteration {iteration}: {source}")]
    Projection {
        iteration: usize,
        #[source]
        source: MatrixError,
    },
    #[error(transparent)]
    Reservoir(#[from] ReservoirError),
    #[error(transparent)]
    Matrix(#[from] MatrixError),
}

impl TrainError {
    /// Iteration at which training failed numerically, if any.
    pub fn iteration(&self) -> Option<usize> {
        match self {
            TrainError::NonFiniteCost { iteration } | TrainError::Projection { iteration, .. } => Some(*iteration),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrainConfig {
    pub learning_rate: f64,
    pub iterations: usize,
    pub constraint: ConstraintMode,
    /// Spectral scale at iteration 0.
    pub s_start: f64,
    /// Spectral scale reached at `ramp_iterations` and held afterward.
    pub s_end: f64,
    pub ramp_iterations: usize,
    pub seed: u64,
    /// Frozen-weight iterations run after training before any evaluation.
    pub transient: usize,
}

impl TrainConfig {
    /// Eight-neuron alternating-input setting.
    pub fn reduced_model() -> Self {
        Self {
            learning_rate: 0.01,
            iterations: 5000,
            constraint: ConstraintMode::Orthogonal,
            s_start: 1.0,
            s_end: 1.0,
            ramp_iterations: 0,
            seed: 0,
            transient: 1000,
        }
    }

    /// Fifteen-neuron grammar setting with the 0.8 → 1.0 spectral ramp.
    pub fn grammar_model() -> Self {
        Self {
            learning_rate: 0.009,
            iterations: 20_000,
            constraint: ConstraintMode::GeneralUnitSpectralRadius,
            s_start: 0.8,
            s_end: 1.0,
            ramp_iterations: 7500,
            seed: 0,
            transient: 1000,
        }
    }

    pub fn validate(&self) -> Result<(), TrainError> {
        let bad = |field, reason: String| Err(TrainError::InvalidConfig { field, reason });
        if !(self.learning_rate.is_finite() && self.learning_rate >= 0.0) {
            return bad("learning_rate", format!("must be finite and nonnegative, got {}", self.learning_rate));
        }
        if self.iterations == 0 {
            return bad("iterations", "must be positive".into());
        }
        if !(self.s_start > 0.0 && self.s_start <= 1.0) {
            return bad("s_start", format!("must lie in (0, 1], got {}", self.s_start));
        }
        if !(self.s_end > 0.0 && self.s_end <= 1.0) {
            return bad("s_end", format!("must lie in (0, 1], got {}", self.s_end));
        }
        if self.s_start > self.s_end {
            return bad("s_start", format!("s_start {} exceeds s_end {}", self.s_start, self.s_end));
        }
        if self.ramp_iterations > self.iterations {
            return bad(
                "ramp_iterations",
                format!("{} exceeds iterations {}", self.ramp_iterations, self.iterations),
            );
        }
        Ok(())
    }
}

/// Per-iteration cost history plus the trained network.
#[derive(Debug, Clone)]
pub struct TrainTrace {
    pub costs: Vec<f64>,
    pub params: ReservoirParams,
    /// State after the last training iteration, consistent with `params`.
    pub final_state: ReservoirState,
}

impl TrainTrace {
    /// Trailing mean over at most `window` costs, one value per iteration.
    pub fn running_mean(&self, window: usize) -> Vec<f64> {
        running_mean(&self.costs, window)
    }

    /// Mean of the last `window` costs.
    pub fn final_running_mean(&self, window: usize) -> f64 {
        let w = window.clamp(1, self.costs.len().max(1));
        let tail = &self.costs[self.costs.len().saturating_sub(w)..];
        tail.iter().sum::<f64>() / tail.len().max(1) as f64
    }

    /// CSV `t,cost`, with `t` counting from 0.
    pub fn cost_csv(&self) -> String {
        let mut out = String::from("t,cost\n");
        for (t, c) in self.costs.iter().enumerate() {
            out.push_str(&format!("{t},{c:?}\n"));
        }
        out
    }
}

pub fn running_mean(values: &[f64], window: usize) -> Vec<f64> {
    let window = window.max(1);
    let mut out = Vec::with_capacity(values.len());
    let mut acc = 0.0;
    for (i, v) in values.iter().enumerate() {
        acc += v;
        if i >= window {
            acc -= values[i - window];
        }
        out.push(acc / (i + 1).min(window) as f64);
    }
    out
}

/// `Σ_i cos²(x_lin_i)`.
pub fn instantaneous_cost(x_lin: &DVector<f64>) -> f64 {
    x_lin.iter().map(|v| v.cos().powi(2)).sum()
}

/// Negative gradient of the instantaneous cost with respect to `W` and `w_in`:
///
/// `ΔW_ij = 2 cos(x_lin_i) sin(x_lin_i) · prev_x_j`,
/// `Δw_in_ij = 2 cos(x_lin_i) sin(x_lin_i) · u_j`.
///
/// `x_lin` must equal `W·prev_x + w_in·u`; the caller owns that consistency.
pub fn gradients(
    params: &ReservoirParams,
    prev_x: &DVector<f64>,
    u: &DVector<f64>,
    x_lin: &DVector<f64>,
) -> Result<(DMatrix<f64>, DMatrix<f64>), ReservoirError> {
    params.check_state_vector("previous state", prev_x)?;
    params.check_state_vector("pre-activation", x_lin)?;
    params.check_input(u)?;
    let g = error_signal(x_lin);
    Ok((&g * prev_x.transpose(), &g * u.transpose()))
}

fn error_signal(x_lin: &DVector<f64>) -> DVector<f64> {
    x_lin.map(|v| 2.0 * v.cos() * v.sin())
}

/// Result of one training iteration.
#[derive(Debug, Clone)]
pub struct StepOutcome {
    pub params: ReservoirParams,
    pub state: ReservoirState,
    /// Instantaneous cost of the pre-update prediction.
    pub cost: f64,
}

/// One training iteration at spectral scale 1.
pub fn train_step(
    params: &ReservoirParams,
    state: &ReservoirState,
    u: &DVector<f64>,
    lr: f64,
    constraint: ConstraintMode,
) -> Result<StepOutcome, TrainError> {
    train_step_scaled(params, state, u, lr, constraint, 1.0)
}

/// One training iteration; the projected `W` is multiplied by `scale`.
pub fn train_step_scaled(
    params: &ReservoirParams,
    state: &ReservoirState,
    u: &DVector<f64>,
    lr: f64,
    constraint: ConstraintMode,
    scale: f64,
) -> Result<StepOutcome, TrainError> {
    params.check_state_vector("state", state.x())?;
    params.check_input(u)?;
    let prev_x = state.x();
    let x_lin = params.pre_activation(prev_x, u);
    let cost = instantaneous_cost(&x_lin);
    let g = error_signal(&x_lin);

    let transfer = params.transfer();
    let (w, mut w_in, _) = params.clone().into_parts();
    let mut w_tilde = w.into_inner();
    w_tilde.ger(lr, &g, prev_x, 1.0);
    w_in.ger(lr, &g, u, 1.0);

    let w_tilde = SquareMatrix::new(w_tilde)?;
    let mut w_new = constraint.project(&w_tilde)?;
    if scale != 1.0 {
        w_new = w_new.scaled(scale);
    }
    let params = ReservoirParams::new(w_new, w_in, transfer)?;
    let state = ReservoirState::from_pre_activation(transfer, params.pre_activation(prev_x, u));
    Ok(StepOutcome { params, state, cost })
}

/// Geometric ramp `s_start · (s_end/s_start)^(min(t, ramp)/ramp)`.
pub fn spectral_scale_at(cfg: &TrainConfig, t: usize) -> f64 {
    if cfg.ramp_iterations == 0 {
        return cfg.s_end;
    }
    if t >= cfg.ramp_iterations {
        return cfg.s_end;
    }
    let frac = t as f64 / cfg.ramp_iterations as f64;
    cfg.s_start * (cfg.s_end / cfg.s_start).powf(frac)
}

/// Starting weights: `W` is `s_start` times a random member of the constraint
/// family, `w_in` is i.i.d. uniform on `[-0.5, 0.5]`.
pub fn initial_params(n: usize, m: usize, transfer: TransferFunction, cfg: &TrainConfig) -> ReservoirParams {
    let mut r = rng::from_seed(rng::derive_seed(cfg.seed, "init"));
    let base = match cfg.constraint {
        ConstraintMode::Orthogonal | ConstraintMode::GeneralUnitSpectralRadius => matrix::random_orthogonal_with(n, &mut r),
        ConstraintMode::SkewSymmetricUnitSpectrum if n == 1 => SquareMatrix::zeros(1),
        ConstraintMode::SkewSymmetricUnitSpectrum => loop {
            let g = DMatrix::from_fn(n, n, |_, _| r.sample::<f64, _>(StandardNormal));
            if let Ok(s) = matrix::project_skew_unit(&SquareMatrix::new(g).expect("gaussian entries are finite")) {
                break s;
            }
        },
    };
    let w_in = DMatrix::from_fn(n, m, |_, _| r.random_range(-0.5..=0.5));
    ReservoirParams::new(base.scaled(cfg.s_start), w_in, transfer).expect("shapes agree by construction")
}

/// Runs `cfg.iterations` online training steps from the zero state.
pub fn train(params: &ReservoirParams, input: &InputSequence, cfg: &TrainConfig) -> Result<TrainTrace, TrainError> {
    cfg.validate()?;
    if input.len() < cfg.iterations {
        return Err(TrainError::InputTooShort {
            needed: cfg.iterations,
            got: input.len(),
        });
    }
    if input.dim() != params.m() {
        return Err(shape_error("input sequence", params.m(), input.dim()).into());
    }
    let mut params = params.clone();
    let mut state = ReservoirState::zeros(params.n());
    let mut costs = Vec::with_capacity(cfg.iterations);
    let mut scale = spectral_scale_at(cfg, 0);
    for (t, u) in input.vectors().iter().take(cfg.iterations).enumerate() {
        scale = spectral_scale_at(cfg, t + 1);
        let out = train_step_scaled(&params, &state, u, cfg.learning_rate, cfg.constraint, scale).map_err(|e| match e {
            TrainError::Matrix(source) => TrainError::Projection { iteration: t, source },
            other => other,
        })?;
        if !out.cost.is_finite() || out.state.x().iter().any(|v| !v.is_finite()) {
            return Err(TrainError::NonFiniteCost { iteration: t });
        }
        costs.push(out.cost);
        params = out.params;
        state = out.state;
    }
    if scale != 1.0 {
        let (w, w_in, transfer) = params.into_parts();
        let w = cfg
            .constraint
            .project(&w)
            .map_err(|source| TrainError::Projection { iteration: cfg.iterations, source })?;
        params = ReservoirParams::new(w, w_in, transfer)?;
    }
    Ok(TrainTrace {
        costs,
        params,
        final_state: state,
    })
}
