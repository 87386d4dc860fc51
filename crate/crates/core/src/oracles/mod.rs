//! Independent ground truth: Monte Carlo simulation and the truncated-lattice
//! fixed-point solver.

mod grid;
pub mod montecarlo;
pub mod truncated;

pub use montecarlo::{
    mc_absorption_histogram, mc_expected_visits, mc_lifetime, mc_window, simulate_walk, walk_rng,
    EstimateWithError, MonteCarloSummary, WalkTrajectory, STEP_CAP,
};
pub use truncated::{
    iteration_budget, truncated_fixed_point, uniqueness_convergence_report, ConvergenceReport,
    RadiusGap, TruncatedSolution,
};
