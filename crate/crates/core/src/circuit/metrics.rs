use std::f64::consts::PI;

use num_complex::Complex64;
use serde::Serialize;

use super::model::CircuitModel;
use super::waveform::Waveform;
use crate::error::{Error, Result};

/// Power, efficiency and stress figures over one steady-state period.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SimMetrics {
    /// Fundamental power delivered to the load resistance, watts.
    pub p_out_fund: f64,
    /// Supply power, watts.
    pub p_dc: f64,
    pub drain_efficiency: f64,
    pub pae: f64,
    pub v_drain_peak: f64,
    /// |v_drain| at the OFF->ON switching instant.
    pub zvs_residual: f64,
    /// Total power dissipated in the load resistance (all harmonics).
    pub p_load_total: f64,
    /// Power dissipated in the switch.
    pub p_switch: f64,
    pub converged: bool,
    pub cycles_used: usize,
}

impl SimMetrics {
    /// Harmonic (non-fundamental) power into the load resistance.
    pub fn p_harmonic(&self) -> f64 {
        self.p_load_total - self.p_out_fund
    }

    /// Relative mismatch of `p_dc` against the dissipated power.
    pub fn energy_closure_error(&self) -> f64 {
        let dissipated = self.p_load_total + self.p_switch;
        if self.p_dc == 0.0 {
            return dissipated.abs();
        }
        (self.p_dc - dissipated).abs() / self.p_dc.abs()
    }

    /// Output power reported for the differential pair (both halves).
    pub fn differential_pout(&self) -> f64 {
        2.0 * self.p_out_fund
    }
}

/// Relative power scale below which a waveform counts as quiescent.
const POWER_FLOOR: f64 = 1e-15;

/// Extracts metrics from the last full period of `w`.
pub fn compute_metrics(w: &Waveform, model: &CircuitModel, p_in: f64) -> Result<SimMetrics> {
    let n = w.period_samples;
    if n == 0 || w.len() < n + 1 {
        return Err(Error::Precondition(format!(
            "waveform of {} samples does not cover one period of {n} steps",
            w.len()
        )));
    }
    let start = w.len() - 1 - n;
    let end = w.len() - 1;
    let r = model.load.r;
    let g_on = model.switch.g_on();
    let g_off = model.switch.g_off;
    let omega = 2.0 * PI * model.f0;

    let mut idc_mean = 0.0;
    let mut i2_mean = 0.0;
    let mut p_switch = 0.0;
    let mut phasor = Complex64::new(0.0, 0.0);
    for k in 0..n {
        let (a, b) = (start + k, start + k + 1);
        let g = if k < w.on_samples { g_on } else { g_off };
        idc_mean += 0.5 * (w.i_dc[a] + w.i_dc[b]);
        i2_mean += 0.5 * (w.i_load[a].powi(2) + w.i_load[b].powi(2));
        p_switch += g * 0.5 * (w.v_drain[a].powi(2) + w.v_drain[b].powi(2));
        let phase = omega * k as f64 * w.dt;
        phasor += w.i_load[a] * Complex64::from_polar(1.0, -phase);
    }
    let nf = n as f64;
    idc_mean /= nf;
    i2_mean /= nf;
    p_switch /= nf;
    let i1 = phasor * (2.0 / nf);
    let v1 = i1 * r;
    let p_out_fund = 0.5 * (v1 * i1.conj()).re;
    let p_dc = model.vdd * idc_mean;
    let p_load_total = r * i2_mean;

    let scale = POWER_FLOOR * (1.0 + p_out_fund.abs());
    let (drain_efficiency, pae) = if p_dc.abs() <= scale {
        if p_out_fund > scale {
            return Err(Error::Inconsistent(format!(
                "p_dc = {p_dc} W with p_out = {p_out_fund} W"
            )));
        }
        (0.0, 0.0)
    } else {
        (p_out_fund / p_dc, (p_out_fund - p_in) / p_dc)
    };

    let v_drain_peak = w.v_drain[start..=end]
        .iter()
        .copied()
        .fold(f64::NEG_INFINITY, f64::max)
        .max(0.0);
    let zvs_residual = w.v_drain[end].abs();
    let (converged, cycles_used) = w
        .steady
        .map(|s| (s.converged, s.cycles_used))
        .unwrap_or((false, w.cycles()));

    Ok(SimMetrics {
        p_out_fund,
        p_dc,
        drain_efficiency,
        pae,
        v_drain_peak,
        zvs_residual,
        p_load_total,
        p_switch,
        converged,
        cycles_used,
    })
}
