//! Closed-form class-E network synthesis.
//!
//! The load resistance and the resonator/shunt values follow the classical
//! finite-Q class-E design equations:
//!
//! ```text
//! R_l = 0.577 (V_dc - V_knee)^2 / P_out
//! C_3 = 1 / (5.447 w R_l)
//! L_7 = Q R_l / w
//! C_s = C_3 (5.447 / Q) (1 + 1.42 / (Q - 2.08))
//! ```
//!
//! `ComponentSet` keeps the equation labels (`c3`, `cs`). Which physical
//! branch each capacitor occupies is decided when the circuit model is
//! built, see [`crate::circuit::CapacitorPlacement`].

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{domain, Error, Result};

/// Load-resistance constant of the class-E power equation.
pub const POWER_CONSTANT: f64 = 0.577;
/// Capacitance constant shared by the resonator and shunt equations.
pub const CAPACITANCE_CONSTANT: f64 = 5.447;
/// Pole of the shunt-capacitor equation.
pub const Q_SINGULARITY: f64 = 2.08;
const Q_CORRECTION: f64 = 1.42;

/// Target operating point for the output stage.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DesignSpec {
    /// Output-stage supply (the regulated V_con at full power), volts.
    pub vdc: f64,
    /// Switch knee voltage, volts.
    pub vknee: f64,
    /// Target output power, watts.
    pub pout_target: f64,
    /// Operating frequency, hertz.
    pub f0: f64,
    /// Loaded Q of the series resonator.
    pub q_factor: f64,
}

impl DesignSpec {
    pub fn omega(&self) -> f64 {
        2.0 * PI * self.f0
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.vdc.is_finite() && self.vknee.is_finite()) {
            return domain("supply and knee voltage must be finite");
        }
        if self.vknee < 0.0 {
            return domain(format!("vknee = {} must be >= 0", self.vknee));
        }
        if self.vdc <= self.vknee {
            return domain(format!(
                "vdc = {} must exceed vknee = {}",
                self.vdc, self.vknee
            ));
        }
        if !(self.pout_target > 0.0 && self.pout_target.is_finite()) {
            return domain(format!("pout_target = {} must be > 0", self.pout_target));
        }
        if !(self.f0 > 0.0 && self.f0.is_finite()) {
            return domain(format!("f0 = {} must be > 0", self.f0));
        }
        if !(self.q_factor > Q_SINGULARITY) {
            return Err(Error::Singularity { q: self.q_factor });
        }
        Ok(())
    }
}

/// Which power a [`DesignSpec::pout_target`] refers to.
///
/// The engine simulates one half of the differential pair; with
/// `Differential` each half is synthesized for half the target.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum PowerScope {
    #[default]
    PerHalf,
    Differential,
}

impl PowerScope {
    /// Target the half-circuit network is synthesized for.
    pub fn half_circuit_target(self, pout: f64) -> f64 {
        match self {
            PowerScope::PerHalf => pout,
            PowerScope::Differential => pout / 2.0,
        }
    }

    /// Reported power per unit of half-circuit power.
    pub fn report_factor(self) -> f64 {
        match self {
            PowerScope::PerHalf => 1.0,
            PowerScope::Differential => 2.0,
        }
    }
}

/// Synthesized passives plus the fixed circuit elements.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ComponentSet {
    /// Optimum load resistance, ohms.
    pub r_load: f64,
    /// Resonator capacitor from the `1 / (5.447 w R_l)` equation, farads.
    pub c3: f64,
    /// Resonator inductor, henries.
    pub l7: f64,
    /// Charging capacitor from the Q-corrected equation, farads.
    pub cs: f64,
    /// DC-feed inductance, henries.
    pub l6: f64,
    /// Switch on-resistance, ohms.
    pub r_on: f64,
}

impl ComponentSet {
    pub fn validate(&self) -> Result<()> {
        let fields = [
            ("r_load", self.r_load),
            ("c3", self.c3),
            ("l7", self.l7),
            ("cs", self.cs),
            ("l6", self.l6),
            ("r_on", self.r_on),
        ];
        for (name, v) in fields {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::InvalidModel(format!(
                    "component {name} = {v} must be positive and finite"
                )));
            }
        }
        Ok(())
    }
}

/// Optimum class-E load resistance for the given supply headroom and power.
pub fn synthesize_load_resistance(vdc: f64, vknee: f64, pout: f64) -> Result<f64> {
    if !(pout > 0.0 && pout.is_finite()) {
        return domain(format!("pout = {pout} must be positive"));
    }
    if !(vdc > vknee) {
        return domain(format!("vdc = {vdc} must exceed vknee = {vknee}"));
    }
    let headroom = vdc - vknee;
    Ok(POWER_CONSTANT * headroom * headroom / pout)
}

/// Default DC-feed inductance: twenty times the resonator inductor.
pub fn default_feed_inductance(l7: f64) -> f64 {
    20.0 * l7
}

/// Synthesizes the full network for `spec`; `l6` and `r_on` pass through.
pub fn synthesize_network(spec: &DesignSpec, l6: f64, r_on: f64) -> Result<ComponentSet> {
    spec.validate()?;
    let omega = spec.omega();
    let q = spec.q_factor;
    let r_load = synthesize_load_resistance(spec.vdc, spec.vknee, spec.pout_target)?;
    let c3 = 1.0 / (CAPACITANCE_CONSTANT * omega * r_load);
    let l7 = q * r_load / omega;
    let cs = c3 * (CAPACITANCE_CONSTANT / q) * (1.0 + Q_CORRECTION / (q - Q_SINGULARITY));
    let set = ComponentSet {
        r_load,
        c3,
        l7,
        cs,
        l6,
        r_on,
    };
    set.validate()?;
    Ok(set)
}

/// Converts a power level in dBm to watts.
pub fn spec_from_dbm(pout_dbm: f64) -> f64 {
    10f64.powf(pout_dbm / 10.0) / 1000.0
}

/// Converts watts to dBm. Zero power maps to negative infinity.
pub fn watts_to_dbm(watts: f64) -> f64 {
    10.0 * (watts * 1000.0).log10()
}
