//! Window selection: threshold schedules, the offline pairwise-test selector,
//! its online version with dyadic candidates, and rolling cross-validation.

mod cv;
mod offline;
mod online;
mod threshold;

pub use cv::{rolling_score, select_hyperparameter_cv, CvOutcome};
pub use offline::{candidate_windows, pairwise_test, select_window_offline, SolveMode, WindowSelection};
pub use online::{default_theta1, drive, run_online, Decision, Learner, OnlineState};
pub use threshold::{ThresholdRule, ThresholdSchedule};
