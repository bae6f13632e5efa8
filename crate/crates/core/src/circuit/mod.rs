//! Switched-linear simulation of one class-E half circuit.

mod metrics;
mod model;
mod steady;
mod system;
mod tune;
mod waveform;

pub use metrics::{compute_metrics, SimMetrics};
pub use model::{
    build_class_e_model, build_class_e_model_with, CapacitorPlacement, CircuitModel,
    ModelOptions, SwitchModel, I_FEED, I_SERIES, V_DRAIN, V_LOAD_CAP, V_SERIES_CAP,
};
pub use steady::{
    find_periodic_steady_state, find_periodic_steady_state_from, simulate, SteadyState,
};
pub use system::{
    periodic_steady_state, AffineSystem, CycleOperators, PeriodicSolution, Schedule,
    StepOperator, SteadyStateOptions, SwitchedSystem, MIN_STEPS_PER_CYCLE,
};
pub use tune::{trim_duty_for_zvs, DutyTrim};
pub use waveform::{integrate_cycles, SteadyInfo, Waveform};
