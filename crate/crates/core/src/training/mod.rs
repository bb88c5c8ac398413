//! The deep splitting recursion.
//!
//! For `n = 1, ..., N` a network `V_n` is fitted by stochastic gradient
//! descent to the regression target
//! `V_{n-1}(Y_{N-n+1}) + (t_n - t_{n-1}) f(Y_{N-n+1}, V_{n-1}, grad V_{n-1})`
//! as a function of `Y_{N-n}`, where `Y` is the Euler-Maruyama approximation
//! of the auxiliary diffusion on the reversed grid and `V_0 = phi`.

mod optim;
mod schedule;
mod solver;

pub use optim::{adam_step, sgd_step, AdamState};
pub use schedule::{
    InitPolicy, Optimizer, PiecewiseRate, TrainingSchedule, ADAM_BETA1, ADAM_BETA2, ADAM_EPSILON,
    BN_RECALIBRATION_BATCHES,
};
pub use solver::{
    loss_and_grad, recalibrate_batch_norm, regression_loss_and_grad, regression_targets, solve, train_timestep,
    LossAndGrad, Previous, SolverResult, TimestepOutput, DIVERGENCE_THRESHOLD,
};
