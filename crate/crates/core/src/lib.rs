//! Distributed parameter estimation over connected graphs with diffusion
//! LMS: adapt-then-combine, combine-then-adapt, and a serial-inspired
//! schedule (SI-LMS) in which each node reuses estimates its neighbors
//! have already refreshed within the current iteration.

pub mod algorithms;
pub mod combiners;
pub mod experiment;
pub mod graph;
pub mod linalg;
pub mod metrics;
pub mod seed;
pub mod signal;

pub use algorithms::{
    atc_iteration, combine, cta_iteration, lms_adapt, no_coop_iteration, run_trajectory, si_lms_iteration, Algorithm,
    AlgorithmError, ErrorMetric, NodeState, Schedule, Setup, StepSizes, Trajectory,
};
pub use combiners::{CombinationMatrix, Rule, Violation};
pub use experiment::{
    reference_scenarios, run_experiment, ExperimentConfig, ExperimentError, ExperimentResult, Scenario,
};
pub use graph::{random_geometric_graph, Graph, GraphError, Neighborhood};
pub use metrics::{average_curves, cost_report, iterations_to_threshold, CostReport, LearningCurve, RunSeries};
pub use signal::{
    draw_sample, random_parameter, variance_profiles, InputProfile, NoiseProfile, ParameterVector, Sample, SignalKind,
    VarianceMode,
};
