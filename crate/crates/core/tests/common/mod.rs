#![allow(dead_code)]

use critical_reservoir::matrix::{random_orthogonal_with, SquareMatrix};
use critical_reservoir::reservoir::{ReservoirParams, ReservoirState, TransferFunction};
use critical_reservoir::rng;
use critical_reservoir::trainer::{gradients, instantaneous_cost};
use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_distr::StandardNormal;

pub fn gaussian_matrix<R: Rng>(rows: usize, cols: usize, r: &mut R) -> DMatrix<f64> {
    DMatrix::from_fn(rows, cols, |_, _| r.sample(StandardNormal))
}

pub fn gaussian_vector<R: Rng>(n: usize, r: &mut R) -> DVector<f64> {
    DVector::from_fn(n, |_, _| r.sample(StandardNormal))
}

/// Random `(params, previous state, input)` triple for gradient checks.
pub fn random_triple(seed: u64, n: usize, m: usize) -> (ReservoirParams, DVector<f64>, DVector<f64>) {
    let mut r = rng::from_seed(seed);
    let w = SquareMatrix::new(gaussian_matrix(n, n, &mut r).scale(0.5)).unwrap();
    let w_in = gaussian_matrix(n, m, &mut r);
    let params = ReservoirParams::new(w, w_in, TransferFunction::SinCritical).unwrap();
    let prev_x = gaussian_vector(n, &mut r);
    let u = gaussian_vector(m, &mut r);
    (params, prev_x, u)
}

fn cost_at(w: &DMatrix<f64>, w_in: &DMatrix<f64>, prev_x: &DVector<f64>, u: &DVector<f64>) -> f64 {
    instantaneous_cost(&(w * prev_x + w_in * u))
}

/// Largest relative error, per weight block, between the analytic negative
/// gradient and central differences with step `h`.
pub fn gradient_relative_error(params: &ReservoirParams, prev_x: &DVector<f64>, u: &DVector<f64>, h: f64) -> f64 {
    let w = params.w().as_matrix().clone();
    let w_in = params.w_in().clone();
    let x_lin = &w * prev_x + &w_in * u;
    let (dw, dw_in) = gradients(params, prev_x, u, &x_lin).unwrap();

    let mut fd_w = DMatrix::zeros(w.nrows(), w.ncols());
    for idx in 0..w.len() {
        let (mut plus, mut minus) = (w.clone(), w.clone());
        plus[idx] += h;
        minus[idx] -= h;
        fd_w[idx] = -(cost_at(&plus, &w_in, prev_x, u) - cost_at(&minus, &w_in, prev_x, u)) / (2.0 * h);
    }
    let mut fd_in = DMatrix::zeros(w_in.nrows(), w_in.ncols());
    for idx in 0..w_in.len() {
        let (mut plus, mut minus) = (w_in.clone(), w_in.clone());
        plus[idx] += h;
        minus[idx] -= h;
        fd_in[idx] = -(cost_at(&w, &plus, prev_x, u) - cost_at(&w, &minus, prev_x, u)) / (2.0 * h);
    }
    let rel = |a: &DMatrix<f64>, b: &DMatrix<f64>| (a - b).norm() / a.norm().max(1e-300);
    rel(&dw, &fd_w).max(rel(&dw_in, &fd_in))
}

/// Orthogonal `W` scaled to `radius`, Tanh transfer, Gaussian input weights.
pub fn subcritical_tanh(seed: u64, n: usize, m: usize, radius: f64) -> ReservoirParams {
    let mut r = rng::from_seed(seed);
    let w = random_orthogonal_with(n, &mut r).scaled(radius);
    let w_in = gaussian_matrix(n, m, &mut r);
    ReservoirParams::new(w, w_in, TransferFunction::Tanh).unwrap()
}

pub fn random_state<R: Rng>(n: usize, r: &mut R) -> ReservoirState {
    ReservoirState::from_pre_activation(TransferFunction::Tanh, gaussian_vector(n, r))
}
