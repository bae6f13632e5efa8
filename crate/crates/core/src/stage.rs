//! A synthesized output stage bundled with its simulation settings.

use num_complex::Complex64;

use crate::circuit::{
    build_class_e_model_with, simulate, trim_duty_for_zvs, CircuitModel, DutyTrim, ModelOptions,
    SimMetrics, SteadyState, SteadyStateOptions,
};
use crate::design::{default_feed_inductance, synthesize_network, ComponentSet, DesignSpec, PowerScope};
use crate::error::Result;

/// Duty window searched when trimming for zero-voltage switching.
pub const TRIM_RANGE: (f64, f64) = (0.3, 0.7);

#[derive(Debug, Clone, PartialEq)]
pub struct Stage {
    /// Specification the half circuit was synthesized for.
    pub spec: DesignSpec,
    pub scope: PowerScope,
    pub components: ComponentSet,
    pub duty: f64,
    /// Present when `duty` came from the ZVS trim.
    pub trim: Option<DutyTrim>,
    pub model_opts: ModelOptions,
    pub steady: SteadyStateOptions,
    /// Input drive power per half circuit, watts.
    pub p_in: f64,
}

/// Everything needed to build a [`Stage`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StageSettings {
    /// Specification with the reported (scope-level) power target.
    pub spec: DesignSpec,
    pub scope: PowerScope,
    /// DC-feed inductance; twenty times the resonator inductor when `None`.
    pub l6: Option<f64>,
    pub r_on: f64,
    /// Fixed duty; trimmed for ZVS when `None`.
    pub duty: Option<f64>,
    pub model_opts: ModelOptions,
    pub steady: SteadyStateOptions,
    pub p_in: f64,
}

impl Stage {
    pub fn build(s: &StageSettings) -> Result<Self> {
        let half = DesignSpec {
            pout_target: s.scope.half_circuit_target(s.spec.pout_target),
            ..s.spec
        };
        let mut components = synthesize_network(&half, 1.0, s.r_on)?;
        components.l6 = s.l6.unwrap_or_else(|| default_feed_inductance(components.l7));
        components.validate()?;
        let (duty, trim) = match s.duty {
            Some(d) => (d, None),
            None => {
                let t = trim_duty_for_zvs(&components, half.f0, &s.model_opts, &s.steady, TRIM_RANGE)?;
                (t.duty, Some(t))
            }
        };
        Ok(Self {
            spec: half,
            scope: s.scope,
            components,
            duty,
            trim,
            model_opts: s.model_opts,
            steady: s.steady,
            p_in: s.p_in,
        })
    }

    pub fn f0(&self) -> f64 {
        self.spec.f0
    }

    /// Model at load `z`, supply `vdd` and conduction depth `drive`.
    pub fn model(&self, z: Complex64, vdd: f64, drive: f64) -> Result<CircuitModel> {
        let opts = ModelOptions {
            drive,
            ..self.model_opts
        };
        build_class_e_model_with(&self.components, z, vdd, self.f0(), self.duty, &opts)
    }

    /// Model into the synthesized load.
    pub fn matched(&self, vdd: f64, drive: f64) -> Result<CircuitModel> {
        self.model(Complex64::new(self.components.r_load, 0.0), vdd, drive)
    }

    pub fn simulate(&self, model: &CircuitModel) -> Result<(SteadyState, SimMetrics)> {
        simulate(model, &self.steady, self.p_in)
    }

    /// Half-circuit power expressed in the configured scope.
    pub fn reported(&self, half_watts: f64) -> f64 {
        self.scope.report_factor() * half_watts
    }
}
