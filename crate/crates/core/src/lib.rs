//! Input-anticipating critical echo state networks.
//!
//! The recurrent weights are trained so that expected input drives every
//! neuron's pre-activation onto a point where the transfer function has unit
//! slope, while the recurrent matrix is held on the boundary of the
//! echo-state condition. Such a reservoir forgets unexpected inputs with a
//! power law instead of exponentially.
//!
//! Modules, bottom up:
//!
//! - [`matrix`]: spectral diagnostics and constraint projections
//! - [`reservoir`]: update rule, transfer functions, Jacobian
//! - [`sequences`]: alternating and grammar input streams
//! - [`trainer`]: online anticipation training
//! - [`divergence`]: twin runs and power-law / exponential fits
//! - [`experiment`]: configured end-to-end runs writing CSV/JSON artifacts

pub mod divergence;
pub mod experiment;
pub mod matrix;
pub mod reservoir;
pub mod rng;
pub mod sequences;
pub mod trainer;

pub use divergence::{classify_decay, fit_exponential, fit_power_law, l1_distance, run_twins, DecayFit, DecayModel, DivergenceSeries};
pub use matrix::{ConstraintMode, SquareMatrix};
pub use reservoir::{ReservoirParams, ReservoirState, TransferFunction};
pub use sequences::{GrammarToken, InputSequence};
pub use trainer::{train, TrainConfig, TrainTrace};
