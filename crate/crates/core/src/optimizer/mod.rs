//! Alternating optimization of the beamformer and the active RIS.

pub mod amplitude;
mod ao;
mod baseline;
mod config;
pub mod phase;
mod problem;
pub mod qcqp;

pub use amplitude::{dinkelbach, feasible_set, Quadratic, SubproblemCoefficients};
pub use ao::{amplitude_sweep, ao_loop, initialize, optimize, phase_update, residuals, Residuals};
pub use baseline::{optimize_baseline, unaware_outcome, SchemeOutcome};
pub use config::AoConfig;
pub use phase::{phase_model, PhaseModel};
pub use problem::{AoProblem, Scheme};
pub use qcqp::{beamforming_problem, kkt_residual, solve_beamforming, solve_qcqp, BeamformingProblem, QcqpSolution};
