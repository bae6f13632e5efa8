//! Open-loop supply-regulated power control.

use std::io::Write;

use rayon::prelude::*;
use serde::Serialize;

use crate::design::watts_to_dbm;
use crate::error::{domain, Error, Result};
use crate::report::{csv_writer, fmt_f64};
use crate::stage::Stage;

/// Load-line constant shared with the load-resistance equation.
pub const POWER_CONSTANT: f64 = 0.577;

/// Series regulator setting the stage supply from the ramp voltage.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RegulatorParams {
    pub r1: f64,
    pub r2: f64,
    pub vbat: f64,
    pub dropout: f64,
}

impl Default for RegulatorParams {
    fn default() -> Self {
        Self {
            r1: 10e3,
            r2: 10e3,
            vbat: 3.3,
            dropout: 0.2,
        }
    }
}

impl RegulatorParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.r1 >= 0.0 && self.r1.is_finite()) {
            return domain(format!("r1 = {} must be >= 0", self.r1));
        }
        if !(self.r2 > 0.0 && self.r2.is_finite()) {
            return domain(format!("r2 = {} must be > 0", self.r2));
        }
        if !(self.dropout >= 0.0 && self.vbat > self.dropout) {
            return domain(format!(
                "need vbat > dropout >= 0 (vbat = {}, dropout = {})",
                self.vbat, self.dropout
            ));
        }
        Ok(())
    }

    pub fn gain(&self) -> f64 {
        1.0 + self.r1 / self.r2
    }

    /// Highest output before the regulator runs out of headroom.
    pub fn vcon_limit(&self) -> f64 {
        self.vbat - self.dropout
    }
}

pub fn regulator_vcon(vramp: f64, p: &RegulatorParams) -> f64 {
    (p.gain() * vramp).min(p.vcon_limit())
}

pub fn ideal_pout(vcon: f64, rload: f64) -> Result<f64> {
    if !(rload > 0.0) {
        return domain(format!("rload = {rload} must be > 0"));
    }
    Ok(POWER_CONSTANT * vcon * vcon / rload)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PowerStep {
    pub level: usize,
    pub vramp: f64,
    pub vcon: f64,
    pub pout_model: f64,
    pub pout_dbm: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PowerStepTable {
    pub step_db: f64,
    pub rows: Vec<PowerStep>,
}

impl PowerStepTable {
    /// `level,vramp_V,vcon_V,pout_W,pout_dBm`, followed by simulated
    /// columns when `sim` is given.
    pub fn write_csv<W: Write>(&self, out: W, sim: Option<&[VrampPoint]>) -> Result<()> {
        let mut w = csv_writer(out);
        let mut header = vec!["level", "vramp_V", "vcon_V", "pout_W", "pout_dBm"];
        if sim.is_some() {
            header.extend(["sim_pout_W", "sim_pout_dBm", "sim_pae", "sim_converged"]);
        }
        w.write_record(&header)?;
        for (k, r) in self.rows.iter().enumerate() {
            let mut rec = vec![
                r.level.to_string(),
                fmt_f64(r.vramp),
                fmt_f64(r.vcon),
                fmt_f64(r.pout_model),
                fmt_f64(r.pout_dbm),
            ];
            if let Some(s) = sim {
                let p = &s[k];
                rec.extend([
                    fmt_f64(p.pout),
                    fmt_f64(p.pout_dbm),
                    fmt_f64(p.pae),
                    p.converged.to_string(),
                ]);
            }
            w.write_record(&rec)?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn vramps(&self) -> Vec<f64> {
        self.rows.iter().map(|r| r.vramp).collect()
    }
}

/// Ramp levels spaced `step_db` apart, starting at the level that yields
/// `pmax` into `rload`.
pub fn power_step_table(
    pmax: f64,
    step_db: f64,
    n_steps: usize,
    p: &RegulatorParams,
    rload: f64,
) -> Result<PowerStepTable> {
    p.validate()?;
    if !(pmax > 0.0 && pmax.is_finite()) {
        return domain(format!("pmax = {pmax} must be > 0"));
    }
    if !(step_db > 0.0 && step_db.is_finite()) {
        return domain(format!("step_db = {step_db} must be > 0"));
    }
    if n_steps == 0 {
        return domain("n_steps must be >= 1");
    }
    if !(rload > 0.0) {
        return domain(format!("rload = {rload} must be > 0"));
    }
    let vcon_needed = (pmax * rload / POWER_CONSTANT).sqrt();
    if vcon_needed > p.vcon_limit() {
        return Err(Error::Headroom {
            pmax_w: pmax,
            vcon_needed,
            vcon_limit: p.vcon_limit(),
        });
    }
    let vramp_max = vcon_needed / p.gain();
    let rows = (0..n_steps)
        .map(|k| {
            let vramp = vramp_max * 10f64.powf(-(k as f64) * step_db / 20.0);
            let vcon = regulator_vcon(vramp, p);
            let pout_model = ideal_pout(vcon, rload)?;
            Ok(PowerStep {
                level: k,
                vramp,
                vcon,
                pout_model,
                pout_dbm: watts_to_dbm(pout_model),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(PowerStepTable { step_db, rows })
}

/// One simulated point of a ramp sweep. Power is in the stage's
/// reporting scope.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct VrampPoint {
    pub vramp: f64,
    pub vcon: f64,
    pub pout_half: f64,
    pub pout: f64,
    pub pout_dbm: f64,
    pub drain_efficiency: f64,
    pub pae: f64,
    pub converged: bool,
}

/// Output power and PAE versus ramp voltage.
pub fn simulated_pout_vs_vramp(
    vramp_grid: &[f64],
    p: &RegulatorParams,
    stage: &Stage,
) -> Result<Vec<VrampPoint>> {
    if vramp_grid.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(Error::Precondition("vramp grid must be increasing".into()));
    }
    simulate_vramps(vramp_grid, p, stage)
}

/// Simulates each ramp level independently, in input order.
pub fn simulate_vramps(vramps: &[f64], p: &RegulatorParams, stage: &Stage) -> Result<Vec<VrampPoint>> {
    p.validate()?;
    vramps
        .par_iter()
        .map(|&vramp| {
            if !(vramp >= 0.0) {
                return domain(format!("vramp = {vramp} must be >= 0"));
            }
            let vcon = regulator_vcon(vramp, p);
            let model = stage.matched(vcon, 1.0)?;
            let (_, m) = stage.simulate(&model)?;
            let pout = stage.reported(m.p_out_fund);
            Ok(VrampPoint {
                vramp,
                vcon,
                pout_half: m.p_out_fund,
                pout,
                pout_dbm: watts_to_dbm(pout),
                drain_efficiency: m.drain_efficiency,
                pae: m.pae,
                converged: m.converged,
            })
        })
        .collect()
}

/// `vramp_V,vcon_V,pout_half_W,pout_W,pout_dBm,drain_eff,pae,converged`.
pub fn write_vramp_csv<W: Write>(points: &[VrampPoint], out: W) -> Result<()> {
    let mut w = csv_writer(out);
    w.write_record([
        "vramp_V",
        "vcon_V",
        "pout_half_W",
        "pout_W",
        "pout_dBm",
        "drain_eff",
        "pae",
        "converged",
    ])?;
    for r in points {
        w.write_record([
            fmt_f64(r.vramp),
            fmt_f64(r.vcon),
            fmt_f64(r.pout_half),
            fmt_f64(r.pout),
            fmt_f64(r.pout_dbm),
            fmt_f64(r.drain_efficiency),
            fmt_f64(r.pae),
            r.converged.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// Least-squares line `y = slope * x` with its coefficient of determination.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct OriginFit {
    pub slope: f64,
    pub r_squared: f64,
}

pub fn fit_through_origin(x: &[f64], y: &[f64]) -> Result<OriginFit> {
    if x.len() != y.len() || x.len() < 2 {
        return Err(Error::Precondition(
            "fit needs two or more paired samples".into(),
        ));
    }
    let sxx: f64 = x.iter().map(|v| v * v).sum();
    if sxx == 0.0 {
        return Err(Error::Precondition("all abscissae are zero".into()));
    }
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| a * b).sum();
    let slope = sxy / sxx;
    let mean = y.iter().sum::<f64>() / y.len() as f64;
    let ss_res: f64 = x.iter().zip(y).map(|(a, b)| (b - slope * a).powi(2)).sum();
    let ss_tot: f64 = y.iter().map(|b| (b - mean).powi(2)).sum();
    let r_squared = if ss_tot == 0.0 { 1.0 } else { 1.0 - ss_res / ss_tot };
    Ok(OriginFit { slope, r_squared })
}
