//! Simulation scenarios, data generation and the Monte-Carlo study runner.

mod generate;
mod scenario;
mod study;

pub use generate::{generate, generate_dataset, replicate_seed, FibroidDesign, Generated};
pub use scenario::{phi_exp, phi_quad, phi_sin, phi_zero, Scenario, ScenarioId};
pub use study::{
    run_replicate, run_study, summarize, CoefficientSummary, Method, ReplicateRecord,
    SimulationSummary, StudyConfig,
};
