//! Oracle replay and synthetic benchmarks.

pub mod bandit;
pub mod info;
pub mod oracle;
pub mod testing;
pub mod time_saved;
pub mod treatment;

pub use bandit::{
    average_regret, best_arm_identification, benchmark_run_env, exploitation_probability, policy_regret,
    policy_regret_at, run_benchmark, run_treatment_sim, BanditEnv, BanditPolicy, BanditReport, BenchmarkSpec,
    EigMethod, MeanCi, PolicySummary, RunMetrics, Setup, DEFAULT_EXPLORATION_SAMPLES,
};
pub use info::{grid_ability_posterior, information_gain, GRID_POINTS};
pub use oracle::{
    generate_synthetic_oracle, generate_synthetic_oracle_with, oracle_from_latents, OracleDataset,
    SyntheticDurations, SyntheticOptions,
};
pub use testing::{
    information_retention, run_adaptive_testing_sim, run_testing_sim, DecisionRecord, SimReport, Termination,
    TestingSimConfig,
};
pub use time_saved::{time_saved_estimate, time_saved_estimate_with, TimeSavedConfig, TimeSavedReport};
pub use treatment::{run_treatment_replay, CompositionPoint, TreatmentReplayConfig, TreatmentReplayReport};
