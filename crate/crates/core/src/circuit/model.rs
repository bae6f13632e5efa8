//! State-space model of one class-E half circuit.
//!
//! Topology: the supply feeds the drain through the DC-feed inductor; the
//! switch and the shunt capacitor sit from drain to ground; the series
//! resonator (inductor + capacitor) connects the drain to the load, which
//! is a resistor optionally in series with one reactive element.
//!
//! State ordering, shared by the ON and OFF systems:
//!
//! | index | quantity                          |
//! |-------|-----------------------------------|
//! | 0     | DC-feed inductor current          |
//! | 1     | drain (shunt capacitor) voltage   |
//! | 2     | series branch / load current      |
//! | 3     | series resonator capacitor voltage|
//! | 4     | load capacitor voltage (if any)   |

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::system::{AffineSystem, SwitchedSystem};
use crate::design::ComponentSet;
use crate::error::{Error, Result};
use crate::mismatch::{series_equivalent, ReactiveElement, SeriesEquivalent};

pub const I_FEED: usize = 0;
pub const V_DRAIN: usize = 1;
pub const I_SERIES: usize = 2;
pub const V_SERIES_CAP: usize = 3;
pub const V_LOAD_CAP: usize = 4;

/// Which physical branch the two synthesized capacitors occupy.
///
/// `Classical` puts the `1 / (5.447 w R)` capacitor (`c3`) across the
/// switch and the Q-corrected one (`cs`) in series with the resonator
/// inductor. `AsLabeled` swaps them, following the component labels
/// literally; that network does not reach zero-voltage switching.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum CapacitorPlacement {
    #[default]
    Classical,
    AsLabeled,
}

impl CapacitorPlacement {
    /// `(shunt, series)` capacitances for this placement.
    pub fn assign(self, c: &ComponentSet) -> (f64, f64) {
        match self {
            CapacitorPlacement::Classical => (c.c3, c.cs),
            CapacitorPlacement::AsLabeled => (c.cs, c.c3),
        }
    }
}

/// Switch conductances.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SwitchModel {
    /// ON resistance at full drive, ohms.
    pub r_on: f64,
    /// OFF conductance, siemens.
    pub g_off: f64,
    /// Conduction depth: scales the ON conductance, 1 is full drive and 0
    /// leaves the switch open for the whole period.
    pub drive: f64,
}

impl SwitchModel {
    pub fn full_drive(r_on: f64) -> Self {
        Self {
            r_on,
            g_off: 0.0,
            drive: 1.0,
        }
    }

    pub fn g_on(&self) -> f64 {
        self.g_off + self.drive / self.r_on
    }

    fn validate(&self) -> Result<()> {
        if !(self.r_on > 0.0 && self.r_on.is_finite()) {
            return Err(Error::InvalidModel(format!("r_on = {} must be > 0", self.r_on)));
        }
        if !(self.g_off >= 0.0 && self.g_off.is_finite()) {
            return Err(Error::InvalidModel(format!("g_off = {} must be >= 0", self.g_off)));
        }
        if !(self.drive >= 0.0 && self.drive.is_finite()) {
            return Err(Error::InvalidModel(format!("drive = {} must be >= 0", self.drive)));
        }
        Ok(())
    }
}

/// Construction knobs beyond the operating point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ModelOptions {
    pub placement: CapacitorPlacement,
    pub g_off: f64,
    pub drive: f64,
}

impl Default for ModelOptions {
    fn default() -> Self {
        Self {
            placement: CapacitorPlacement::Classical,
            g_off: 0.0,
            drive: 1.0,
        }
    }
}

/// An immutable class-E half-circuit model.
#[derive(Debug, Clone, PartialEq)]
pub struct CircuitModel {
    pub components: ComponentSet,
    pub placement: CapacitorPlacement,
    pub load: SeriesEquivalent,
    pub vdd: f64,
    pub f0: f64,
    pub duty: f64,
    pub switch: SwitchModel,
    shunt_c: f64,
    series_c: f64,
    series_l: f64,
    system: SwitchedSystem,
}

/// Builds a model with classical capacitor placement and full drive.
pub fn build_class_e_model(
    components: &ComponentSet,
    load: Complex64,
    vdd: f64,
    f0: f64,
    duty: f64,
) -> Result<CircuitModel> {
    build_class_e_model_with(components, load, vdd, f0, duty, &ModelOptions::default())
}

pub fn build_class_e_model_with(
    components: &ComponentSet,
    load: Complex64,
    vdd: f64,
    f0: f64,
    duty: f64,
    opts: &ModelOptions,
) -> Result<CircuitModel> {
    if !(load.re > 0.0) || !load.im.is_finite() {
        return Err(Error::NonPassiveLoad { re: load.re });
    }
    if !(f0 > 0.0 && f0.is_finite()) {
        return Err(Error::InvalidModel(format!("f0 = {f0} must be > 0")));
    }
    let equivalent = series_equivalent(load, f0)?;
    CircuitModel::new(components, equivalent, vdd, f0, duty, opts)
}

impl CircuitModel {
    pub fn new(
        components: &ComponentSet,
        load: SeriesEquivalent,
        vdd: f64,
        f0: f64,
        duty: f64,
        opts: &ModelOptions,
    ) -> Result<Self> {
        components.validate()?;
        if !vdd.is_finite() || vdd < 0.0 {
            return Err(Error::InvalidModel(format!("vdd = {vdd} must be >= 0")));
        }
        if !(load.r > 0.0) {
            return Err(Error::NonPassiveLoad { re: load.r });
        }
        let switch = SwitchModel {
            r_on: components.r_on,
            g_off: opts.g_off,
            drive: opts.drive,
        };
        switch.validate()?;

        let (shunt_c, series_c) = opts.placement.assign(components);
        let mut series_l = components.l7;
        let mut load_c = None;
        match load.element {
            ReactiveElement::None => {}
            ReactiveElement::Inductor(l) => series_l += l,
            ReactiveElement::Capacitor(c) => load_c = Some(c),
        }
        let n = if load_c.is_some() { 5 } else { 4 };

        let field = |g_switch: f64| -> Result<AffineSystem> {
            let mut a = DMatrix::zeros(n, n);
            let mut b = DVector::zeros(n);
            let l6 = components.l6;
            a[(I_FEED, V_DRAIN)] = -1.0 / l6;
            b[I_FEED] = vdd / l6;

            a[(V_DRAIN, I_FEED)] = 1.0 / shunt_c;
            a[(V_DRAIN, V_DRAIN)] = -g_switch / shunt_c;
            a[(V_DRAIN, I_SERIES)] = -1.0 / shunt_c;

            a[(I_SERIES, V_DRAIN)] = 1.0 / series_l;
            a[(I_SERIES, I_SERIES)] = -load.r / series_l;
            a[(I_SERIES, V_SERIES_CAP)] = -1.0 / series_l;

            a[(V_SERIES_CAP, I_SERIES)] = 1.0 / series_c;

            if let Some(cl) = load_c {
                a[(I_SERIES, V_LOAD_CAP)] = -1.0 / series_l;
                a[(V_LOAD_CAP, I_SERIES)] = 1.0 / cl;
            }
            AffineSystem::new(a, b)
        };
        let system = SwitchedSystem::new(
            field(switch.g_on())?,
            field(switch.g_off)?,
            1.0 / f0,
            duty,
        )?;

        Ok(Self {
            components: *components,
            placement: opts.placement,
            load,
            vdd,
            f0,
            duty,
            switch,
            shunt_c,
            series_c,
            series_l,
            system,
        })
    }

    pub fn system(&self) -> &SwitchedSystem {
        &self.system
    }

    pub fn n_states(&self) -> usize {
        self.system.dim()
    }

    pub fn period(&self) -> f64 {
        1.0 / self.f0
    }

    pub fn shunt_capacitance(&self) -> f64 {
        self.shunt_c
    }

    pub fn series_capacitance(&self) -> f64 {
        self.series_c
    }

    /// Resonator inductance plus any inductive load element.
    pub fn series_inductance(&self) -> f64 {
        self.series_l
    }

    pub fn state_names(&self) -> &'static [&'static str] {
        const NAMES: [&str; 5] = [
            "i_feed_A",
            "v_shunt_V",
            "i_series_A",
            "v_series_cap_V",
            "v_load_cap_V",
        ];
        &NAMES[..self.n_states()]
    }

    /// Same circuit at a different supply.
    pub fn with_vdd(&self, vdd: f64) -> Result<Self> {
        self.rebuild(vdd, self.duty, self.switch.drive)
    }

    pub fn with_duty(&self, duty: f64) -> Result<Self> {
        self.rebuild(self.vdd, duty, self.switch.drive)
    }

    pub fn with_drive(&self, drive: f64) -> Result<Self> {
        self.rebuild(self.vdd, self.duty, drive)
    }

    fn rebuild(&self, vdd: f64, duty: f64, drive: f64) -> Result<Self> {
        let opts = ModelOptions {
            placement: self.placement,
            g_off: self.switch.g_off,
            drive,
        };
        Self::new(&self.components, self.load, vdd, self.f0, duty, &opts)
    }

    /// Zero state sized for this model.
    pub fn zero_state(&self) -> DVector<f64> {
        DVector::zeros(self.n_states())
    }

    /// DC operating point with the switch held open: all supply current
    /// stopped by the series capacitor, drain at `vdd`.
    pub fn open_switch_state(&self) -> DVector<f64> {
        let mut x = self.zero_state();
        x[V_DRAIN] = self.vdd;
        x[V_SERIES_CAP] = self.vdd;
        x
    }
}
