//! Ramp-controlled, temperature-compensated gate bias reference.
//!
//! `vref(T, vramp) = a(T) + a1 * vramp` where `a` mixes a falling
//! junction voltage with a rising `V_T ln n` term and `a1` is a pure
//! resistor/mirror ratio.

use std::io::Write;

use rayon::prelude::*;
use serde::Serialize;

use crate::design::watts_to_dbm;
use crate::error::{domain, Error, Result};
use crate::power_control::{regulator_vcon, RegulatorParams};
use crate::report::{csv_writer, fmt_f64};
use crate::stage::Stage;

/// Boltzmann constant over elementary charge, V/K.
pub const K_OVER_Q: f64 = 8.617333262145e-5;
pub const ZERO_CELSIUS: f64 = 273.15;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BiasNetworkParams {
    pub r3: f64,
    pub r4: f64,
    pub r5: f64,
    pub r_ref: f64,
    /// Converts the ramp voltage into the mirrored current.
    pub r_conv: f64,
    /// Junction area ratio.
    pub n: f64,
    pub mirror_ratio: f64,
    /// Junction voltage at `t0`.
    pub vbe0: f64,
    /// Kelvin.
    pub t0: f64,
}

impl Default for BiasNetworkParams {
    fn default() -> Self {
        let th = ThermalModel::default();
        Self {
            r3: 10e3,
            r4: 10e3,
            r5: compensating_r5(10e3, 10e3, 8.0, &th),
            r_ref: 10e3,
            r_conv: 40e3,
            n: 8.0,
            mirror_ratio: 2.0,
            vbe0: 0.7,
            t0: 300.0,
        }
    }
}

impl BiasNetworkParams {
    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("r3", self.r3),
            ("r4", self.r4),
            ("r5", self.r5),
            ("r_ref", self.r_ref),
            ("r_conv", self.r_conv),
        ] {
            if !(v > 0.0) {
                return domain(format!("{name} = {v} must be > 0"));
            }
        }
        if !(self.n > 1.0) {
            return domain(format!("n = {} must be > 1", self.n));
        }
        if !(self.mirror_ratio > 0.0) {
            return domain(format!("mirror_ratio = {} must be > 0", self.mirror_ratio));
        }
        if !(self.t0 > 0.0) {
            return domain(format!("t0 = {} K must be > 0", self.t0));
        }
        Ok(())
    }
}

/// First-order temperature behaviour of the junction and thermal voltages.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ThermalModel {
    /// Junction voltage slope, V/K.
    pub dvbe_dt: f64,
    /// Thermal-voltage slope used when sizing the compensation, V/K.
    pub dvt_dt_design: f64,
}

impl Default for ThermalModel {
    fn default() -> Self {
        Self {
            dvbe_dt: -1.5e-3,
            dvt_dt_design: 0.087e-3,
        }
    }
}

impl ThermalModel {
    pub fn validate(&self) -> Result<()> {
        if !(self.dvbe_dt < 0.0) {
            return domain(format!("dvbe_dt = {} must be < 0", self.dvbe_dt));
        }
        if !(self.dvt_dt_design > 0.0) {
            return domain(format!("dvt_dt_design = {} must be > 0", self.dvt_dt_design));
        }
        Ok(())
    }

    /// Physical thermal voltage at `t_kelvin`.
    pub fn vt(&self, t_kelvin: f64) -> f64 {
        K_OVER_Q * t_kelvin
    }

    pub fn vbe(&self, p: &BiasNetworkParams, t_kelvin: f64) -> f64 {
        p.vbe0 + self.dvbe_dt * (t_kelvin - p.t0)
    }
}

pub fn kelvin(temp_c: f64) -> f64 {
    temp_c + ZERO_CELSIUS
}

pub fn coefficient_a(p: &BiasNetworkParams, th: &ThermalModel, temp_c: f64) -> f64 {
    let t = kelvin(temp_c);
    th.vbe(p, t) * p.r_ref / (p.r3 + p.r4) + th.vt(t) * p.n.ln() * p.r_ref / p.r5
}

pub fn coefficient_a1(p: &BiasNetworkParams) -> f64 {
    p.r_ref / p.r_conv * p.mirror_ratio
}

pub fn vref(p: &BiasNetworkParams, th: &ThermalModel, vramp: f64, temp_c: f64) -> f64 {
    coefficient_a(p, th, temp_c) + coefficient_a1(p) * vramp
}

/// `da/dT` with the design thermal-voltage slope.
pub fn da_dt_design(p: &BiasNetworkParams, th: &ThermalModel) -> f64 {
    p.r_ref * (th.dvbe_dt / (p.r3 + p.r4) + th.dvt_dt_design * p.n.ln() / p.r5)
}

fn compensating_r5(r3: f64, r4: f64, n: f64, th: &ThermalModel) -> f64 {
    n.ln() * th.dvt_dt_design / th.dvbe_dt.abs() * (r3 + r4)
}

/// `r5` that zeroes [`da_dt_design`].
pub fn solve_compensation(r3: f64, r4: f64, n: f64, th: &ThermalModel) -> Result<f64> {
    th.validate()?;
    if !(n > 1.0) {
        return Err(Error::NoCompensation(format!(
            "area ratio n = {n} leaves no rising term to cancel the junction slope"
        )));
    }
    if !(r3 > 0.0 && r4 > 0.0) {
        return domain("r3 and r4 must be > 0");
    }
    Ok(compensating_r5(r3, r4, n, th))
}

/// Finite-difference `dvref/dT` over `[t_lo, t_hi]`, V/K.
pub fn temp_sensitivity(
    p: &BiasNetworkParams,
    th: &ThermalModel,
    vramp: f64,
    t_lo: f64,
    t_hi: f64,
) -> Result<f64> {
    if !(t_lo < t_hi) {
        return domain(format!("temperature range [{t_lo}, {t_hi}] is empty"));
    }
    Ok((vref(p, th, vramp, t_hi) - vref(p, th, vramp, t_lo)) / (t_hi - t_lo))
}

/// How the bias reference sets the output switch's conduction depth.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DriveCoupling {
    /// Reference voltage at which conduction starts.
    pub gate_threshold: f64,
    /// Overdrive above threshold giving full conduction.
    pub full_overdrive: f64,
}

impl Default for DriveCoupling {
    fn default() -> Self {
        Self {
            gate_threshold: 0.6,
            full_overdrive: 0.4,
        }
    }
}

impl DriveCoupling {
    pub fn validate(&self) -> Result<()> {
        if !(self.full_overdrive > 0.0) {
            return domain(format!("full_overdrive = {} must be > 0", self.full_overdrive));
        }
        Ok(())
    }

    /// Conduction depth in `[0, 1]`.
    pub fn depth(&self, vref: f64) -> f64 {
        ((vref - self.gate_threshold) / self.full_overdrive).clamp(0.0, 1.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TempPoint {
    pub temp_c: f64,
    pub vramp: f64,
    pub vref: f64,
    pub drive: f64,
    /// Output power in the stage's reporting scope.
    pub pout: f64,
    pub pout_dbm: f64,
    pub converged: bool,
}

/// Bias network and drive coupling for a temperature sweep.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BiasChain {
    pub bias: BiasNetworkParams,
    pub thermal: ThermalModel,
    pub coupling: DriveCoupling,
}

/// Output power across temperature at a fixed ramp: the ramp sets both the
/// regulated supply and, through the bias reference, the drive depth.
pub fn temperature_sweep(
    stage: &Stage,
    reg: &RegulatorParams,
    chain: &BiasChain,
    vramp: f64,
    temps_c: &[f64],
) -> Result<Vec<TempPoint>> {
    chain.bias.validate()?;
    chain.thermal.validate()?;
    chain.coupling.validate()?;
    reg.validate()?;
    let vcon = regulator_vcon(vramp, reg);
    temps_c
        .par_iter()
        .map(|&t| {
            let v = vref(&chain.bias, &chain.thermal, vramp, t);
            let drive = chain.coupling.depth(v);
            let model = stage.matched(vcon, drive)?;
            let (_, m) = stage.simulate(&model)?;
            let pout = stage.reported(m.p_out_fund);
            Ok(TempPoint {
                temp_c: t,
                vramp,
                vref: v,
                drive,
                pout,
                pout_dbm: watts_to_dbm(pout),
                converged: m.converged,
            })
        })
        .collect()
}

/// `tempC,vramp_V,vref_V,drive,pout_W,pout_dBm`.
pub fn write_temp_csv<W: Write>(points: &[TempPoint], out: W) -> Result<()> {
    let mut w = csv_writer(out);
    w.write_record(["tempC", "vramp_V", "vref_V", "drive", "pout_W", "pout_dBm"])?;
    for r in points {
        w.write_record([
            fmt_f64(r.temp_c),
            fmt_f64(r.vramp),
            fmt_f64(r.vref),
            fmt_f64(r.drive),
            fmt_f64(r.pout),
            fmt_f64(r.pout_dbm),
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// Spread (max - min) of a sweep's output power in dB.
pub fn pout_spread_db(points: &[TempPoint]) -> f64 {
    let (lo, hi) = points.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), p| {
        (lo.min(p.pout_dbm), hi.max(p.pout_dbm))
    });
    hi - lo
}
