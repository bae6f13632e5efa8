use nalgebra::DVector;

use super::metrics::{compute_metrics, SimMetrics};
use super::model::CircuitModel;
use super::system::{periodic_steady_state_with, SteadyStateOptions};
use super::waveform::{SteadyInfo, Waveform};
use crate::error::Result;

/// Periodic steady state of a class-E model.
#[derive(Debug, Clone)]
pub struct SteadyState {
    pub x_star: DVector<f64>,
    /// One period starting at `x_star`, the OFF->ON instant.
    pub waveform: Waveform,
    pub converged: bool,
    pub cycles_used: usize,
    pub residual: f64,
}

/// Finds the periodic steady state starting from the zero state.
pub fn find_periodic_steady_state(
    model: &CircuitModel,
    opts: &SteadyStateOptions,
) -> Result<SteadyState> {
    find_periodic_steady_state_from(model, &model.zero_state(), opts)
}

/// Same as [`find_periodic_steady_state`] with a caller-chosen initial
/// guess; sweeps use it to warm-start from a neighbouring solution.
pub fn find_periodic_steady_state_from(
    model: &CircuitModel,
    x0: &DVector<f64>,
    opts: &SteadyStateOptions,
) -> Result<SteadyState> {
    let schedule = model.system().schedule(opts.steps_per_cycle)?;
    let ops = model.system().operators(&schedule);
    let guess = if x0.len() == model.n_states() {
        x0.clone()
    } else {
        model.zero_state()
    };
    let sol = periodic_steady_state_with(&ops, &guess, opts)?;
    let mut waveform = Waveform::empty(schedule.dt, schedule.steps_per_cycle, schedule.on_steps);
    ops.integrate(&sol.x_star, 1, |x| waveform.push_state(x))?;
    waveform.steady = Some(SteadyInfo {
        converged: sol.converged,
        cycles_used: sol.cycles_used,
        residual: sol.residual,
    });
    Ok(SteadyState {
        x_star: sol.x_star,
        waveform,
        converged: sol.converged,
        cycles_used: sol.cycles_used,
        residual: sol.residual,
    })
}

/// Steady state followed by metric extraction.
pub fn simulate(
    model: &CircuitModel,
    opts: &SteadyStateOptions,
    p_in: f64,
) -> Result<(SteadyState, SimMetrics)> {
    let ss = find_periodic_steady_state(model, opts)?;
    let metrics = compute_metrics(&ss.waveform, model, p_in)?;
    Ok((ss, metrics))
}
