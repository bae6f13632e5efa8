//! TOML configuration with defaults, overrides and field-path validation.
//!
//! Every key is optional. Sections: `[design]`, `[circuit]`,
//! `[regulator]`, `[bias]`, `[protection]`, `[sweep]`, `[output]`.
//! Unknown keys and duplicate keys are rejected.

use serde::{Deserialize, Serialize};
use toml::{Table, Value};

use crate::bias::{solve_compensation, BiasChain, BiasNetworkParams, DriveCoupling, ThermalModel};
use crate::circuit::{CapacitorPlacement, ModelOptions, SteadyStateOptions, MIN_STEPS_PER_CYCLE};
use crate::design::{spec_from_dbm, DesignSpec, PowerScope};
use crate::error::{Error, Result};
use crate::mismatch::phase_grid;
use crate::power_control::RegulatorParams;
use crate::protection::{ProtectionLoopParams, ProtectionSettings, RectifierParams};
use crate::stage::StageSettings;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DesignSection {
    pub vdc: f64,
    pub vknee: f64,
    pub pout_dbm: f64,
    pub f0_hz: f64,
    pub q_factor: f64,
    pub pout_scope: PowerScope,
}

impl Default for DesignSection {
    fn default() -> Self {
        Self {
            vdc: 1.8,
            vknee: 0.2,
            pout_dbm: 25.1,
            f0_hz: 2.45e9,
            q_factor: 5.0,
            pout_scope: PowerScope::PerHalf,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CircuitSection {
    pub l6_h: Option<f64>,
    pub r_on: f64,
    pub g_off: f64,
    pub duty: Option<f64>,
    pub steps_per_cycle: usize,
    pub tol: f64,
    pub max_cycles: usize,
    pub shooting_interval: usize,
    pub capacitor_placement: CapacitorPlacement,
    /// Drive power per half circuit.
    pub p_in_dbm: f64,
}

impl Default for CircuitSection {
    fn default() -> Self {
        let ss = SteadyStateOptions::default();
        Self {
            l6_h: None,
            r_on: 0.3,
            g_off: 0.0,
            duty: None,
            steps_per_cycle: ss.steps_per_cycle,
            tol: ss.tol,
            max_cycles: ss.max_cycles,
            shooting_interval: ss.shooting_interval,
            capacitor_placement: CapacitorPlacement::Classical,
            p_in_dbm: 0.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RegulatorSection {
    pub r1: f64,
    pub r2: f64,
    pub vbat: f64,
    pub dropout: f64,
}

impl Default for RegulatorSection {
    fn default() -> Self {
        let p = RegulatorParams::default();
        Self {
            r1: p.r1,
            r2: p.r2,
            vbat: p.vbat,
            dropout: p.dropout,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BiasSection {
    pub r3: f64,
    pub r4: f64,
    /// Solved for zero temperature coefficient when absent.
    pub r5: Option<f64>,
    pub r_ref: f64,
    pub r_conv: f64,
    pub n: f64,
    pub mirror_ratio: f64,
    pub vbe0: f64,
    pub t0_k: f64,
    pub dvbe_dt: f64,
    pub dvt_dt_design: f64,
    pub gate_threshold: f64,
    pub full_overdrive: f64,
}

impl Default for BiasSection {
    fn default() -> Self {
        let p = BiasNetworkParams::default();
        let th = ThermalModel::default();
        let c = DriveCoupling::default();
        Self {
            r3: p.r3,
            r4: p.r4,
            r5: None,
            r_ref: p.r_ref,
            r_conv: p.r_conv,
            n: p.n,
            mirror_ratio: p.mirror_ratio,
            vbe0: p.vbe0,
            t0_k: p.t0,
            dvbe_dt: th.dvbe_dt,
            dvt_dt_design: th.dvt_dt_design,
            gate_threshold: c.gate_threshold,
            full_overdrive: c.full_overdrive,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ProtectionSection {
    pub ra: f64,
    pub rb: f64,
    pub rc: f64,
    pub rd: f64,
    pub vgs_m: f64,
    pub sense_ratio: f64,
    /// Drain peak the loop regulates to; sets the error-amp reference.
    pub target_peak_v: f64,
    pub loop_gain: f64,
    pub recovery: f64,
    pub g_max: f64,
    pub g_min: f64,
    pub time_constant_s: f64,
    pub dt_s: f64,
    pub error_tol: f64,
    pub max_iters: usize,
    pub min_swing_fraction: f64,
    pub oscillation_limit: usize,
}

impl Default for ProtectionSection {
    fn default() -> Self {
        let r = RectifierParams::default();
        let l = ProtectionLoopParams::default();
        Self {
            ra: r.ra,
            rb: r.rb,
            rc: r.rc,
            rd: r.rd,
            vgs_m: r.vgs_m,
            sense_ratio: l.sense_ratio,
            target_peak_v: 6.5,
            loop_gain: l.loop_gain,
            recovery: l.recovery,
            g_max: l.g_max,
            g_min: l.g_min,
            time_constant_s: l.time_constant,
            dt_s: l.dt,
            error_tol: l.error_tol,
            max_iters: l.max_iters,
            min_swing_fraction: l.min_swing_fraction,
            oscillation_limit: l.oscillation_limit,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ProtectionMode {
    On,
    Off,
    Both,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SweepSection {
    pub temp_start_c: f64,
    pub temp_stop_c: f64,
    pub temp_step_c: f64,
    pub temp_vramp: f64,
    pub vramp_start: f64,
    pub vramp_stop: f64,
    pub vramp_points: usize,
    pub step_db: f64,
    pub n_steps: usize,
    pub vswr: f64,
    pub phases: usize,
    pub supplies: Vec<f64>,
    /// VSWR reference impedance; the synthesized load when absent.
    pub z0: Option<f64>,
    pub breakdown_v: f64,
    pub protection: ProtectionMode,
    /// Reflection phase used by `protect-sim`.
    pub protect_phase_deg: f64,
}

impl Default for SweepSection {
    fn default() -> Self {
        Self {
            temp_start_c: -25.0,
            temp_stop_c: 85.0,
            temp_step_c: 5.0,
            temp_vramp: 0.6,
            vramp_start: 0.0,
            vramp_stop: 2.0,
            vramp_points: 21,
            step_db: 2.0,
            n_steps: 11,
            vswr: 10.0,
            phases: 12,
            supplies: vec![5.0],
            z0: None,
            breakdown_v: 6.8,
            protection: ProtectionMode::Both,
            protect_phase_deg: 270.0,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OutputSection {
    pub dir: Option<String>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ToolkitConfig {
    pub design: DesignSection,
    pub circuit: CircuitSection,
    pub regulator: RegulatorSection,
    pub bias: BiasSection,
    pub protection: ProtectionSection,
    pub sweep: SweepSection,
    pub output: OutputSection,
}

/// Parses and validates a configuration document.
pub fn parse_config(text: &str) -> Result<ToolkitConfig> {
    parse_config_with(text, &[])
}

/// Like [`parse_config`], applying `section.key=value` overrides first.
/// Values are read as TOML; anything that does not parse is a string.
pub fn parse_config_with(text: &str, overrides: &[String]) -> Result<ToolkitConfig> {
    let mut table: Table = text
        .parse()
        .map_err(|e: toml::de::Error| Error::ConfigParse(e.to_string().trim_end().to_string()))?;
    for o in overrides {
        apply_override(&mut table, o)?;
    }
    let cfg: ToolkitConfig = Value::Table(table)
        .try_into()
        .map_err(|e: toml::de::Error| Error::ConfigParse(e.to_string().trim_end().to_string()))?;
    cfg.validate()?;
    Ok(cfg)
}

fn apply_override(table: &mut Table, item: &str) -> Result<()> {
    let bad = |msg: &str| Error::ConfigParse(format!("override `{item}`: {msg}"));
    let (path, raw) = item.split_once('=').ok_or_else(|| bad("expected key=value"))?;
    let keys: Vec<&str> = path.trim().split('.').collect();
    if keys.iter().any(|k| k.is_empty()) {
        return Err(bad("empty key"));
    }
    let raw = raw.trim();
    let value = format!("v = {raw}")
        .parse::<Table>()
        .ok()
        .and_then(|mut t| t.remove("v"))
        .unwrap_or_else(|| Value::String(raw.to_string()));
    let (last, parents) = keys.split_last().expect("non-empty");
    let mut cur = table;
    for k in parents {
        cur = cur
            .entry(k.to_string())
            .or_insert_with(|| Value::Table(Table::new()))
            .as_table_mut()
            .ok_or_else(|| bad(&format!("`{k}` is not a section")))?;
    }
    cur.insert(last.to_string(), value);
    Ok(())
}

fn field<T>(path: &str, r: Result<T>) -> Result<T> {
    r.map_err(|e| Error::Config {
        path: path.to_string(),
        message: e.to_string(),
    })
}

fn check(path: &str, ok: bool, message: impl Into<String>) -> Result<()> {
    if ok {
        Ok(())
    } else {
        Err(Error::Config {
            path: path.to_string(),
            message: message.into(),
        })
    }
}

impl ToolkitConfig {
    pub fn validate(&self) -> Result<()> {
        let d = &self.design;
        check("design.vdc", d.vdc.is_finite() && d.vdc > d.vknee, "must exceed design.vknee")?;
        check("design.vknee", d.vknee >= 0.0, "must be >= 0")?;
        check("design.pout_dbm", d.pout_dbm.is_finite(), "must be finite")?;
        check("design.f0_hz", d.f0_hz > 0.0 && d.f0_hz.is_finite(), "must be > 0")?;
        field("design.q_factor", self.design_spec().validate())?;

        let c = &self.circuit;
        if let Some(l6) = c.l6_h {
            check("circuit.l6_h", l6 > 0.0 && l6.is_finite(), "must be > 0")?;
        }
        check("circuit.r_on", c.r_on > 0.0 && c.r_on.is_finite(), "must be > 0")?;
        check("circuit.g_off", c.g_off >= 0.0 && c.g_off.is_finite(), "must be >= 0")?;
        if let Some(duty) = c.duty {
            check("circuit.duty", duty > 0.0 && duty < 1.0, "must lie in (0, 1)")?;
            let edge = duty * c.steps_per_cycle as f64;
            check(
                "circuit.duty",
                (edge - edge.round()).abs() < 1e-9,
                format!(
                    "duty * steps_per_cycle = {edge} must be an integer so the switch edge falls on a step"
                ),
            )?;
        }
        check(
            "circuit.steps_per_cycle",
            c.steps_per_cycle >= MIN_STEPS_PER_CYCLE,
            format!("must be >= {MIN_STEPS_PER_CYCLE}"),
        )?;
        check("circuit.tol", c.tol > 0.0, "must be > 0")?;
        check("circuit.max_cycles", c.max_cycles >= 1, "must be >= 1")?;
        check("circuit.shooting_interval", c.shooting_interval >= 1, "must be >= 1")?;
        check("circuit.p_in_dbm", c.p_in_dbm.is_finite(), "must be finite")?;

        field("regulator", self.regulator().validate())?;
        let b = &self.bias;
        if let Some(r5) = b.r5 {
            check("bias.r5", r5 > 0.0, "must be > 0")?;
        }
        field("bias.dvbe_dt", self.thermal().validate())?;
        field("bias.n", self.bias_params().and_then(|p| p.validate()))?;
        field("bias.full_overdrive", self.coupling().validate())?;

        field("protection", RectifierParams::validate(&self.rectifier()))?;
        field("protection", self.loop_params().validate())?;
        check(
            "protection.target_peak_v",
            self.protection.target_peak_v > 0.0,
            "must be > 0",
        )?;

        let s = &self.sweep;
        check(
            "sweep.temp_step_c",
            s.temp_step_c > 0.0 && s.temp_stop_c >= s.temp_start_c,
            "need temp_step_c > 0 and temp_stop_c >= temp_start_c",
        )?;
        check("sweep.temp_vramp", s.temp_vramp >= 0.0, "must be >= 0")?;
        check(
            "sweep.vramp_points",
            s.vramp_points >= 1 && (s.vramp_points == 1 || s.vramp_stop > s.vramp_start),
            "need at least one point and vramp_stop > vramp_start",
        )?;
        check("sweep.vramp_start", s.vramp_start >= 0.0, "must be >= 0")?;
        check("sweep.step_db", s.step_db > 0.0, "must be > 0")?;
        check("sweep.n_steps", s.n_steps >= 1, "must be >= 1")?;
        check("sweep.vswr", s.vswr >= 1.0 && s.vswr.is_finite(), "must be >= 1")?;
        check("sweep.phases", s.phases >= 1, "must be >= 1")?;
        check(
            "sweep.supplies",
            !s.supplies.is_empty() && s.supplies.iter().all(|v| *v > 0.0),
            "need one or more positive supplies",
        )?;
        if let Some(z0) = s.z0 {
            check("sweep.z0", z0 > 0.0, "must be > 0")?;
        }
        check("sweep.breakdown_v", s.breakdown_v > 0.0, "must be > 0")?;
        Ok(())
    }

    /// Specification at the reported power target.
    pub fn design_spec(&self) -> DesignSpec {
        DesignSpec {
            vdc: self.design.vdc,
            vknee: self.design.vknee,
            pout_target: spec_from_dbm(self.design.pout_dbm),
            f0: self.design.f0_hz,
            q_factor: self.design.q_factor,
        }
    }

    pub fn steady_options(&self) -> SteadyStateOptions {
        SteadyStateOptions {
            tol: self.circuit.tol,
            max_cycles: self.circuit.max_cycles,
            steps_per_cycle: self.circuit.steps_per_cycle,
            shooting_interval: self.circuit.shooting_interval,
        }
    }

    pub fn stage_settings(&self) -> StageSettings {
        StageSettings {
            spec: self.design_spec(),
            scope: self.design.pout_scope,
            l6: self.circuit.l6_h,
            r_on: self.circuit.r_on,
            duty: self.circuit.duty,
            model_opts: ModelOptions {
                placement: self.circuit.capacitor_placement,
                g_off: self.circuit.g_off,
                drive: 1.0,
            },
            steady: self.steady_options(),
            p_in: spec_from_dbm(self.circuit.p_in_dbm),
        }
    }

    pub fn regulator(&self) -> RegulatorParams {
        let r = &self.regulator;
        RegulatorParams {
            r1: r.r1,
            r2: r.r2,
            vbat: r.vbat,
            dropout: r.dropout,
        }
    }

    pub fn thermal(&self) -> ThermalModel {
        ThermalModel {
            dvbe_dt: self.bias.dvbe_dt,
            dvt_dt_design: self.bias.dvt_dt_design,
        }
    }

    pub fn coupling(&self) -> DriveCoupling {
        DriveCoupling {
            gate_threshold: self.bias.gate_threshold,
            full_overdrive: self.bias.full_overdrive,
        }
    }

    /// Bias parameters, solving `r5` when it is not given.
    pub fn bias_params(&self) -> Result<BiasNetworkParams> {
        let b = &self.bias;
        let r5 = match b.r5 {
            Some(r5) => r5,
            None => solve_compensation(b.r3, b.r4, b.n, &self.thermal())?,
        };
        Ok(BiasNetworkParams {
            r3: b.r3,
            r4: b.r4,
            r5,
            r_ref: b.r_ref,
            r_conv: b.r_conv,
            n: b.n,
            mirror_ratio: b.mirror_ratio,
            vbe0: b.vbe0,
            t0: b.t0_k,
        })
    }

    pub fn bias_chain(&self) -> Result<BiasChain> {
        Ok(BiasChain {
            bias: self.bias_params()?,
            thermal: self.thermal(),
            coupling: self.coupling(),
        })
    }

    pub fn rectifier(&self) -> RectifierParams {
        let p = &self.protection;
        RectifierParams {
            ra: p.ra,
            rb: p.rb,
            rc: p.rc,
            rd: p.rd,
            vgs_m: p.vgs_m,
        }
    }

    /// Loop parameters; the threshold is calibrated per supply later.
    pub fn loop_params(&self) -> ProtectionLoopParams {
        let p = &self.protection;
        ProtectionLoopParams {
            sense_ratio: p.sense_ratio,
            v_ref_threshold: 0.0,
            loop_gain: p.loop_gain,
            recovery: p.recovery,
            g_max: p.g_max,
            g_min: p.g_min,
            time_constant: p.time_constant_s,
            dt: p.dt_s,
            error_tol: p.error_tol,
            max_iters: p.max_iters,
            min_swing_fraction: p.min_swing_fraction,
            oscillation_limit: p.oscillation_limit,
        }
    }

    pub fn protection_settings(&self) -> ProtectionSettings {
        ProtectionSettings {
            rect: self.rectifier(),
            loop_params: self.loop_params(),
            target_peak: self.protection.target_peak_v,
        }
    }

    pub fn temperatures(&self) -> Vec<f64> {
        let s = &self.sweep;
        let n = ((s.temp_stop_c - s.temp_start_c) / s.temp_step_c + 1e-9).floor() as usize;
        (0..=n).map(|k| s.temp_start_c + k as f64 * s.temp_step_c).collect()
    }

    pub fn vramp_grid(&self) -> Vec<f64> {
        let s = &self.sweep;
        if s.vramp_points == 1 {
            return vec![s.vramp_start];
        }
        let span = s.vramp_stop - s.vramp_start;
        let last = (s.vramp_points - 1) as f64;
        (0..s.vramp_points)
            .map(|k| s.vramp_start + span * k as f64 / last)
            .collect()
    }

    pub fn phases(&self) -> Vec<f64> {
        phase_grid(self.sweep.phases)
    }
}
