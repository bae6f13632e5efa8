//! Closed-loop drain peak limiter: sensing divider, envelope rectifier,
//! error amplifier and drive-stage gain actuator.

use std::io::Write;

use nalgebra::DVector;
use serde::Serialize;

use crate::circuit::{
    compute_metrics, find_periodic_steady_state_from, CircuitModel, SimMetrics, SteadyStateOptions,
};
use crate::error::{domain, Error, Result};
use crate::report::{csv_writer, fmt_f64};

/// Rectifier resistor network and detector drop.
///
/// `ra`/`rb` divide the AC part of the sensed drain voltage, `rc`/`rd`
/// divide its DC level; the envelope capacitors are ideal shorts at f0.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RectifierParams {
    pub ra: f64,
    pub rb: f64,
    pub rc: f64,
    pub rd: f64,
    pub vgs_m: f64,
}

impl Default for RectifierParams {
    fn default() -> Self {
        Self {
            ra: 10e3,
            rb: 10e3,
            rc: 100e3,
            rd: 100e3,
            vgs_m: 0.4,
        }
    }
}

impl RectifierParams {
    pub fn validate(&self) -> Result<()> {
        for (name, v) in [("ra", self.ra), ("rb", self.rb), ("rc", self.rc), ("rd", self.rd)] {
            if !(v > 0.0 && v.is_finite()) {
                return domain(format!("{name} = {v} must be > 0"));
            }
        }
        if !self.vgs_m.is_finite() {
            return domain("vgs_m must be finite");
        }
        Ok(())
    }

    /// Gain from the sensed peak to `v_c`.
    pub fn ac_gain(&self) -> f64 {
        self.ra / (self.ra + self.rb)
    }

    pub fn dc_gain(&self) -> f64 {
        self.rc / (self.rc + self.rd)
    }

    /// Whether the DC divider is at least ten times the AC series arm, the
    /// regime where the two dividers do not load each other.
    pub fn divider_isolation_holds(&self) -> bool {
        self.rc.min(self.rd) >= 10.0 * self.rb
    }
}

/// Voltage at the rectifier output node.
pub fn rectifier_vc(v_sen_peak: f64, vcon: f64, p: &RectifierParams) -> Result<f64> {
    if !(vcon >= 0.0) {
        return domain(format!("vcon = {vcon} must be >= 0"));
    }
    if !(v_sen_peak >= vcon) {
        return domain(format!(
            "sensed peak {v_sen_peak} V lies below its DC level {vcon} V"
        ));
    }
    Ok((v_sen_peak - vcon) * p.ac_gain() + vcon * p.dc_gain() - p.vgs_m)
}

/// Loop constants and the gain-to-drive coupling.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ProtectionLoopParams {
    /// Drain-to-sense divider ratio.
    pub sense_ratio: f64,
    /// Error amplifier reference on the `v_c` node, volts.
    pub v_ref_threshold: f64,
    /// Gain decrease per volt of positive error per time constant.
    pub loop_gain: f64,
    /// Gain increase per volt of negative error per time constant.
    pub recovery: f64,
    pub g_max: f64,
    pub g_min: f64,
    pub time_constant: f64,
    /// Time advanced per loop iteration.
    pub dt: f64,
    /// Convergence band on the error, volts.
    pub error_tol: f64,
    pub max_iters: usize,
    /// Conduction depth left at `g_min`.
    pub min_swing_fraction: f64,
    /// Error sign reversals tolerated before the run is flagged.
    pub oscillation_limit: usize,
}

impl Default for ProtectionLoopParams {
    fn default() -> Self {
        Self {
            sense_ratio: 0.5,
            v_ref_threshold: 1.225,
            loop_gain: 0.03,
            recovery: 0.03,
            g_max: 1.0,
            g_min: 1e-3,
            time_constant: 1e-6,
            dt: 1e-7,
            error_tol: 2e-3,
            max_iters: 400,
            min_swing_fraction: 0.0,
            oscillation_limit: 20,
        }
    }
}

impl ProtectionLoopParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.g_min > 0.0 && self.g_min <= self.g_max && self.g_max.is_finite()) {
            return domain(format!(
                "gain range [{}, {}] must satisfy 0 < g_min <= g_max",
                self.g_min, self.g_max
            ));
        }
        if !(self.sense_ratio > 0.0 && self.sense_ratio <= 1.0) {
            return domain(format!("sense_ratio = {} must lie in (0, 1]", self.sense_ratio));
        }
        if !(self.time_constant > 0.0 && self.dt > 0.0) {
            return domain("time_constant and dt must be > 0");
        }
        if !(self.loop_gain >= 0.0 && self.recovery >= 0.0) {
            return domain("loop_gain and recovery must be >= 0");
        }
        if !(self.error_tol > 0.0) {
            return domain("error_tol must be > 0");
        }
        if !(0.0..=1.0).contains(&self.min_swing_fraction) {
            return domain("min_swing_fraction must lie in [0, 1]");
        }
        if self.max_iters == 0 {
            return domain("max_iters must be >= 1");
        }
        Ok(())
    }

    /// Switch conduction depth commanded by a VGA gain: full drive at
    /// `g_max`, `min_swing_fraction` at `g_min`, linear in between.
    pub fn drive_depth(&self, gain: f64) -> f64 {
        let m = self.min_swing_fraction;
        let span = self.g_max - self.g_min;
        if span <= 0.0 {
            return 1.0;
        }
        let u = ((gain - self.g_min) / span).clamp(0.0, 1.0);
        m + (1.0 - m) * u
    }
}

/// One first-order VGA update.
pub fn vga_gain(control_error: f64, p: &ProtectionLoopParams, prev_gain: f64, dt: f64) -> f64 {
    let k = dt / p.time_constant;
    let g = prev_gain - p.loop_gain * control_error.max(0.0) * k
        + p.recovery * (-control_error).max(0.0) * k;
    g.clamp(p.g_min, p.g_max)
}

/// Error-amp reference that puts the loop's balance point at a drain peak
/// of `target_peak` with the stage supplied from `vcon`.
pub fn calibrate_threshold(
    target_peak: f64,
    vcon: f64,
    sense_ratio: f64,
    rect: &RectifierParams,
) -> Result<f64> {
    rectifier_vc(sense_ratio * target_peak, sense_ratio * vcon, rect)
}

/// Drain peak at which `v_c` equals `threshold`; inverse of
/// [`calibrate_threshold`].
pub fn drain_referred_threshold(
    threshold: f64,
    vcon: f64,
    sense_ratio: f64,
    rect: &RectifierParams,
) -> f64 {
    let vs = sense_ratio * vcon;
    let sensed = (threshold + rect.vgs_m - vs * rect.dc_gain()) / rect.ac_gain() + vs;
    sensed / sense_ratio
}

/// Rectifier, loop constants and the drain peak the loop should hold.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ProtectionSettings {
    pub rect: RectifierParams,
    pub loop_params: ProtectionLoopParams,
    pub target_peak: f64,
}

impl ProtectionSettings {
    /// Loop parameters with the threshold calibrated at supply `vcon`.
    pub fn for_supply(&self, vcon: f64) -> Result<ProtectionLoopParams> {
        let mut p = self.loop_params;
        p.v_ref_threshold =
            calibrate_threshold(self.target_peak, vcon, p.sense_ratio, &self.rect)?;
        Ok(p)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LoopRow {
    pub iter: usize,
    pub gain: f64,
    pub v_drain_peak: f64,
    pub v_c: f64,
    pub error: f64,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct LoopTrace {
    pub rows: Vec<LoopRow>,
}

impl LoopTrace {
    /// `iter,gain,v_drain_peak_V,v_c_V,error_V`.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv_writer(out);
        w.write_record(["iter", "gain", "v_drain_peak_V", "v_c_V", "error_V"])?;
        for r in &self.rows {
            w.write_record([
                r.iter.to_string(),
                fmt_f64(r.gain),
                fmt_f64(r.v_drain_peak),
                fmt_f64(r.v_c),
                fmt_f64(r.error),
            ])?;
        }
        w.flush()?;
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum LoopStatus {
    /// First simulation already below threshold.
    Inactive,
    /// Error settled inside the tolerance band.
    Settled,
    /// Gain stuck at a clamp with the error still of the wrong sign.
    Pinned,
    /// Error kept changing sign.
    Oscillating,
    /// Iteration budget exhausted.
    Exhausted,
}

#[derive(Debug, Clone)]
pub struct LoopOutcome {
    pub trace: LoopTrace,
    pub metrics: SimMetrics,
    pub final_gain: f64,
    pub status: LoopStatus,
    /// Inactive, settled, or released back to `g_max` below threshold.
    pub converged: bool,
    pub simulations: usize,
}

impl LoopOutcome {
    pub fn limiting(&self) -> bool {
        self.status != LoopStatus::Inactive
    }
}

/// Iterates simulate, sense, compare, update until the error settles.
///
/// `model_builder` maps a VGA gain to a circuit; each simulation starts
/// from the previous steady state.
pub fn run_protection_loop<F>(
    mut model_builder: F,
    rect: &RectifierParams,
    params: &ProtectionLoopParams,
    steady: &SteadyStateOptions,
    p_in: f64,
) -> Result<LoopOutcome>
where
    F: FnMut(f64) -> Result<CircuitModel>,
{
    rect.validate()?;
    params.validate()?;
    let mut gain = params.g_max;
    let mut warm: Option<DVector<f64>> = None;
    let mut trace = LoopTrace::default();
    let mut sign_changes = 0;
    let mut last_sign = 0.0;

    for iter in 1..=params.max_iters {
        let model = model_builder(gain)?;
        let x0 = warm.take().unwrap_or_else(|| model.zero_state());
        let ss = find_periodic_steady_state_from(&model, &x0, steady)?;
        let metrics = compute_metrics(&ss.waveform, &model, p_in)?;
        warm = Some(ss.x_star);

        let vcon_sensed = params.sense_ratio * model.vdd;
        let v_sen = (params.sense_ratio * metrics.v_drain_peak).max(vcon_sensed);
        let v_c = rectifier_vc(v_sen, vcon_sensed, rect)?;
        let error = v_c - params.v_ref_threshold;
        trace.rows.push(LoopRow {
            iter,
            gain,
            v_drain_peak: metrics.v_drain_peak,
            v_c,
            error,
        });
        let finish = |status: LoopStatus, converged: bool, trace: LoopTrace| LoopOutcome {
            trace,
            metrics,
            final_gain: gain,
            status,
            converged,
            simulations: iter,
        };

        if iter == 1 && error <= 0.0 {
            return Ok(finish(LoopStatus::Inactive, true, trace));
        }
        if error.abs() < params.error_tol {
            return Ok(finish(LoopStatus::Settled, true, trace));
        }
        let next = vga_gain(error, params, gain, params.dt);
        if next == gain {
            // Released at full gain below threshold counts as settled.
            let released = error < 0.0 && gain >= params.g_max;
            let status = if released {
                LoopStatus::Settled
            } else {
                LoopStatus::Pinned
            };
            return Ok(finish(status, released, trace));
        }
        let sign = error.signum();
        if last_sign != 0.0 && sign != last_sign {
            sign_changes += 1;
            if sign_changes > params.oscillation_limit {
                return Ok(finish(LoopStatus::Oscillating, false, trace));
            }
        }
        last_sign = sign;
        if iter == params.max_iters {
            return Ok(finish(LoopStatus::Exhausted, false, trace));
        }
        gain = next;
    }
    Err(Error::Precondition("max_iters must be >= 1".into()))
}
