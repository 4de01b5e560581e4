//! The echo state network itself: update rule, transfer functions, Jacobian
//! and contraction diagnostics.
//!
//! One iteration is
//!
//! ```text
//! x_lin(t) = W · x(t-1) + w_in · u(t)
//! x(t)     = θ(x_lin(t))
//! ```
//!
//! so the input at tick `t` already enters the pre-activation of tick `t`.

use std::f64::consts::{FRAC_PI_2, PI};
use std::fmt::Write as _;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::matrix::{MatrixError, SquareMatrix};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ReservoirError {
    #[error("shape mismatch for {what}: expected {expected}, got {actual}")]
    ShapeMismatch {
        what: &'static str,
        expected: String,
        actual: String,
    },
    #[error("non-finite {what}")]
    NonFinite { what: &'static str },
    #[error("contraction factor undefined: zero denominator (states coincide)")]
    ZeroDenominator,
    #[error(transparent)]
    Matrix(#[from] MatrixError),
}

pub(crate) fn shape_error(what: &'static str, expected: impl ToString, actual: impl ToString) -> ReservoirError {
    ReservoirError::ShapeMismatch {
        what,
        expected: expected.to_string(),
        actual: actual.to_string(),
    }
}

/// Neuron nonlinearity `θ`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum TransferFunction {
    Tanh,
    /// `θ(x) = x/2 − sin(2x)/4`. Its slope reaches 1 exactly at `x = π(n + 1/2)`.
    SinCritical,
}

impl TransferFunction {
    #[inline]
    pub fn apply(self, x: f64) -> f64 {
        match self {
            TransferFunction::Tanh => x.tanh(),
            TransferFunction::SinCritical => 0.5 * x - 0.25 * (2.0 * x).sin(),
        }
    }

    #[inline]
    pub fn derivative(self, x: f64) -> f64 {
        match self {
            TransferFunction::Tanh => {
                let t = x.tanh();
                1.0 - t * t
            }
            TransferFunction::SinCritical => 0.5 - 0.5 * (2.0 * x).cos(),
        }
    }
}

pub fn transfer(f: TransferFunction, x: f64) -> f64 {
    f.apply(x)
}

pub fn transfer_derivative(f: TransferFunction, x: f64) -> f64 {
    f.derivative(x)
}

/// Recurrent and input weights plus the transfer function.
#[derive(Debug, Clone, PartialEq)]
pub struct ReservoirParams {
    w: SquareMatrix,
    w_in: DMatrix<f64>,
    transfer: TransferFunction,
}

impl ReservoirParams {
    pub fn new(w: SquareMatrix, w_in: DMatrix<f64>, transfer: TransferFunction) -> Result<Self, ReservoirError> {
        if w_in.nrows() != w.dim() {
            return Err(shape_error(
                "input weights",
                format!("{} rows", w.dim()),
                format!("{}x{}", w_in.nrows(), w_in.ncols()),
            ));
        }
        if w_in.iter().any(|v| !v.is_finite()) {
            return Err(ReservoirError::NonFinite { what: "input weights" });
        }
        Ok(Self { w, w_in, transfer })
    }

    /// Number of reservoir neurons.
    pub fn n(&self) -> usize {
        self.w.dim()
    }

    /// Input dimension.
    pub fn m(&self) -> usize {
        self.w_in.ncols()
    }

    pub fn w(&self) -> &SquareMatrix {
        &self.w
    }

    pub fn w_in(&self) -> &DMatrix<f64> {
        &self.w_in
    }

    pub fn transfer(&self) -> TransferFunction {
        self.transfer
    }

    pub(crate) fn into_parts(self) -> (SquareMatrix, DMatrix<f64>, TransferFunction) {
        (self.w, self.w_in, self.transfer)
    }

    pub(crate) fn check_input(&self, u: &DVector<f64>) -> Result<(), ReservoirError> {
        if u.len() != self.m() {
            return Err(shape_error("input vector", self.m(), u.len()));
        }
        Ok(())
    }

    pub(crate) fn check_state_vector(&self, what: &'static str, x: &DVector<f64>) -> Result<(), ReservoirError> {
        if x.len() != self.n() {
            return Err(shape_error(what, self.n(), x.len()));
        }
        Ok(())
    }

    /// `W · x + w_in · u`, without shape checks.
    pub(crate) fn pre_activation(&self, x: &DVector<f64>, u: &DVector<f64>) -> DVector<f64> {
        let mut out = self.w.as_matrix() * x;
        out.gemv(1.0, &self.w_in, u, 1.0);
        out
    }
}

/// Readout weights `o = w_out · x`. Only evaluated; never trained here.
#[derive(Debug, Clone, PartialEq)]
pub struct Readout {
    pub w_out: DMatrix<f64>,
}

impl Readout {
    pub fn output(&self, state: &ReservoirState) -> Result<DVector<f64>, ReservoirError> {
        if self.w_out.ncols() != state.x.len() {
            return Err(shape_error("readout", state.x.len(), self.w_out.ncols()));
        }
        Ok(&self.w_out * &state.x)
    }
}

/// Activations `x` and the pre-activations `x_lin` they came from.
#[derive(Debug, Clone, PartialEq)]
pub struct ReservoirState {
    x: DVector<f64>,
    x_lin: DVector<f64>,
}

impl ReservoirState {
    /// The all-zero state; a fixed point of both transfer functions.
    pub fn zeros(n: usize) -> Self {
        Self {
            x: DVector::zeros(n),
            x_lin: DVector::zeros(n),
        }
    }

    pub fn from_pre_activation(transfer: TransferFunction, x_lin: DVector<f64>) -> Self {
        let x = x_lin.map(|v| transfer.apply(v));
        Self { x, x_lin }
    }

    pub fn x(&self) -> &DVector<f64> {
        &self.x
    }

    pub fn x_lin(&self) -> &DVector<f64> {
        &self.x_lin
    }

    pub fn len(&self) -> usize {
        self.x.len()
    }

    pub fn is_empty(&self) -> bool {
        self.x.is_empty()
    }
}

/// One network update.
pub fn step(params: &ReservoirParams, state: &ReservoirState, u: &DVector<f64>) -> Result<ReservoirState, ReservoirError> {
    params.check_state_vector("state", &state.x)?;
    params.check_input(u)?;
    Ok(ReservoirState::from_pre_activation(
        params.transfer,
        params.pre_activation(&state.x, u),
    ))
}

/// Runs the network over `inputs`, returning every visited state (initial state excluded).
pub fn simulate<'a, I>(params: &ReservoirParams, initial: &ReservoirState, inputs: I) -> Result<Vec<ReservoirState>, ReservoirError>
where
    I: IntoIterator<Item = &'a DVector<f64>>,
{
    let mut state = initial.clone();
    let mut out = Vec::new();
    for u in inputs {
        state = step(params, &state, u)?;
        out.push(state.clone());
    }
    Ok(out)
}

/// `J_ij = θ'(x_lin_i) · W_ij`.
pub fn jacobian(params: &ReservoirParams, x_lin: &DVector<f64>) -> Result<SquareMatrix, ReservoirError> {
    params.check_state_vector("pre-activation", x_lin)?;
    let mut j = params.w.as_matrix().clone();
    for (i, mut row) in j.row_iter_mut().enumerate() {
        row *= params.transfer.derivative(x_lin[i]);
    }
    Ok(SquareMatrix::new(j)?)
}

/// One-step ratio `‖F(y) − F(x)‖₂ / ‖y − x‖₂` of Euclidean distances between
/// the activations of two states driven by the same input.
pub fn contraction_factor(
    params: &ReservoirParams,
    x: &ReservoirState,
    y: &ReservoirState,
    u: &DVector<f64>,
) -> Result<f64, ReservoirError> {
    let before = (&y.x - &x.x).norm();
    if before == 0.0 {
        return Err(ReservoirError::ZeroDenominator);
    }
    let x1 = step(params, x, u)?;
    let y1 = step(params, y, u)?;
    Ok((&y1.x - &x1.x).norm() / before)
}

/// Distance from `v` to the nearest point of `{π(n + 1/2) : n ∈ ℤ}`.
pub fn distance_to_critical_set(v: f64) -> f64 {
    let shifted = v - FRAC_PI_2;
    (shifted - PI * (shifted / PI).round()).abs()
}

/// Largest per-neuron distance of the pre-activations to the critical set.
pub fn critical_state_distance(state: &ReservoirState) -> f64 {
    max_critical_distance(&state.x_lin)
}

pub fn max_critical_distance(x_lin: &DVector<f64>) -> f64 {
    x_lin.iter().map(|&v| distance_to_critical_set(v)).fold(0.0, f64::max)
}

/// CSV with header `t,x_lin_0..x_lin_{N-1},x_0..x_{N-1}`; `t` counts from 0.
pub fn trajectory_csv(states: &[ReservoirState]) -> String {
    let n = states.first().map_or(0, ReservoirState::len);
    let mut out = String::from("t");
    for i in 0..n {
        let _ = write!(out, ",x_lin_{i}");
    }
    for i in 0..n {
        let _ = write!(out, ",x_{i}");
    }
    out.push('\n');
    for (t, s) in states.iter().enumerate() {
        let _ = write!(out, "{t}");
        for v in s.x_lin.iter().chain(s.x.iter()) {
            let _ = write!(out, ",{v:?}");
        }
        out.push('\n');
    }
    out
}
