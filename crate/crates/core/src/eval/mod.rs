//! Ground truth by exhaustive sweep, the model-error metric, multi-trial
//! experiments and their tables and curves.

mod curves;
mod ground_truth;
mod metric;
mod stats;
mod trials;

pub use curves::{emit_curves, log_reward, Curves, REWARD_FLOOR};
pub use ground_truth::{build_ground_truth, sweep_grid, GroundTruth, SweepResolution, MAX_ASPECTS};
pub use metric::{grasp_accuracy, model_error, scored_edges, GraspAccuracy};
pub use stats::{incomplete_beta, ln_gamma, mean, sample_std, sample_variance, student_t_two_sided, welch_p, welch_test, WelchTest};
pub use trials::{run_method, run_trial, run_trials, Cell, Experiment, TableRow, TrialRecord, TrialTable};
