//! Mismatched loads from VSWR and phase, and ruggedness sweeps.

use std::f64::consts::PI;
use std::io::Write;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{domain, Error, Result};
use crate::protection::{run_protection_loop, ProtectionSettings};
use crate::report::{csv_writer, fmt_f64};
use crate::stage::Stage;

/// Reactive part of a series-equivalent load at one frequency.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub enum ReactiveElement {
    None,
    /// Henries.
    Inductor(f64),
    /// Farads.
    Capacitor(f64),
}

/// Series `r` plus at most one reactive element.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SeriesEquivalent {
    pub r: f64,
    pub element: ReactiveElement,
}

impl SeriesEquivalent {
    pub fn resistive(r: f64) -> Self {
        Self {
            r,
            element: ReactiveElement::None,
        }
    }

    /// Impedance of the equivalent at `f`.
    pub fn impedance(&self, f: f64) -> Complex64 {
        let w = 2.0 * PI * f;
        let x = match self.element {
            ReactiveElement::None => 0.0,
            ReactiveElement::Inductor(l) => w * l,
            ReactiveElement::Capacitor(c) => -1.0 / (w * c),
        };
        Complex64::new(self.r, x)
    }
}

/// Reflection magnitude for a VSWR.
pub fn gamma_magnitude(vswr: f64) -> Result<f64> {
    if !(vswr >= 1.0) || !vswr.is_finite() {
        return domain(format!("vswr = {vswr} must be a finite value >= 1"));
    }
    Ok((vswr - 1.0) / (vswr + 1.0))
}

/// Load impedance on the constant-VSWR circle around `z0`.
pub fn load_from_vswr(vswr: f64, phase_deg: f64, z0: f64) -> Result<Complex64> {
    let mag = gamma_magnitude(vswr)?;
    if !(z0 > 0.0 && z0.is_finite()) {
        return domain(format!("z0 = {z0} must be > 0"));
    }
    let gamma = Complex64::from_polar(mag, phase_deg.to_radians());
    Ok(z0 * (1.0 + gamma) / (1.0 - gamma))
}

pub fn reflection_coefficient(z: Complex64, z0: f64) -> Complex64 {
    (z - z0) / (z + z0)
}

pub fn vswr_from_load(z: Complex64, z0: f64) -> f64 {
    let g = reflection_coefficient(z, z0).norm();
    (1.0 + g) / (1.0 - g)
}

/// Realizes `z` at `f0` as a resistor plus one inductor or capacitor.
pub fn series_equivalent(z: Complex64, f0: f64) -> Result<SeriesEquivalent> {
    if !(z.re > 0.0) {
        return Err(Error::NonPassiveLoad { re: z.re });
    }
    if !(f0 > 0.0) {
        return domain(format!("f0 = {f0} must be > 0"));
    }
    let w = 2.0 * PI * f0;
    let element = if z.im > 0.0 {
        ReactiveElement::Inductor(z.im / w)
    } else if z.im < 0.0 {
        ReactiveElement::Capacitor(-1.0 / (w * z.im))
    } else {
        ReactiveElement::None
    };
    Ok(SeriesEquivalent { r: z.re, element })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LoadCondition {
    pub vswr: f64,
    pub phase_deg: f64,
    pub z0: f64,
    pub z_load: Complex64,
}

impl LoadCondition {
    pub fn new(vswr: f64, phase_deg: f64, z0: f64) -> Result<Self> {
        let phase_deg = phase_deg.rem_euclid(360.0);
        Ok(Self {
            vswr,
            phase_deg,
            z0,
            z_load: load_from_vswr(vswr, phase_deg, z0)?,
        })
    }
}

/// `n` phases evenly spaced over a full turn, starting at 0.
pub fn phase_grid(n: usize) -> Vec<f64> {
    (0..n).map(|k| 360.0 * k as f64 / n as f64).collect()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RuggednessRow {
    pub vswr: f64,
    pub phase_deg: f64,
    pub supply: f64,
    pub protection: bool,
    /// NaN when the row failed to simulate.
    pub v_drain_peak: f64,
    pub pass: bool,
    /// Final protection gain, or 1 without protection.
    pub gain: f64,
    pub converged: bool,
    pub failure: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RuggednessReport {
    pub breakdown: f64,
    pub rows: Vec<RuggednessRow>,
}

impl RuggednessReport {
    pub fn extend(&mut self, other: RuggednessReport) {
        self.rows.extend(other.rows);
    }

    /// `vswr,phase_deg,supply_V,protection,v_drain_peak_V,pass`.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv_writer(out);
        w.write_record(["vswr", "phase_deg", "supply_V", "protection", "v_drain_peak_V", "pass"])?;
        for r in &self.rows {
            w.write_record([
                fmt_f64(r.vswr),
                fmt_f64(r.phase_deg),
                fmt_f64(r.supply),
                if r.protection { "on" } else { "off" }.to_string(),
                fmt_f64(r.v_drain_peak),
                r.pass.to_string(),
            ])?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Inputs of one ruggedness sweep.
#[derive(Debug, Clone, Copy)]
pub struct VswrSweep<'a> {
    pub supply: f64,
    pub vswr: f64,
    /// Reference impedance; the stage's synthesized load when `None`.
    pub z0: Option<f64>,
    pub phases: &'a [f64],
    pub breakdown: f64,
}

/// Runs every phase, with the protection loop when `protection` is given.
/// Rows are independent and evaluated in parallel on the current rayon
/// pool; output order follows `phases`.
pub fn sweep_vswr(
    stage: &Stage,
    sweep: &VswrSweep<'_>,
    protection: Option<&ProtectionSettings>,
) -> Result<RuggednessReport> {
    if sweep.phases.is_empty() {
        return Err(Error::Precondition("phase list is empty".into()));
    }
    let z0 = sweep.z0.unwrap_or(stage.components.r_load);
    let rows = sweep
        .phases
        .par_iter()
        .map(|&phase| sweep_row(stage, sweep, z0, phase, protection))
        .collect();
    Ok(RuggednessReport {
        breakdown: sweep.breakdown,
        rows,
    })
}

fn sweep_row(
    stage: &Stage,
    sweep: &VswrSweep<'_>,
    z0: f64,
    phase: f64,
    protection: Option<&ProtectionSettings>,
) -> RuggednessRow {
    let mut row = RuggednessRow {
        vswr: sweep.vswr,
        phase_deg: phase,
        supply: sweep.supply,
        protection: protection.is_some(),
        v_drain_peak: f64::NAN,
        pass: false,
        gain: 1.0,
        converged: false,
        failure: None,
    };
    let outcome = (|| -> Result<(f64, f64, bool)> {
        let load = LoadCondition::new(sweep.vswr, phase, z0)?;
        match protection {
            None => {
                let m = stage.model(load.z_load, sweep.supply, 1.0)?;
                let (_, metrics) = stage.simulate(&m)?;
                Ok((metrics.v_drain_peak, 1.0, metrics.converged))
            }
            Some(settings) => {
                let params = settings.for_supply(sweep.supply)?;
                let out = run_protection_loop(
                    |gain| stage.model(load.z_load, sweep.supply, params.drive_depth(gain)),
                    &settings.rect,
                    &params,
                    &stage.steady,
                    stage.p_in,
                )?;
                let ok = out.converged && out.metrics.converged;
                Ok((out.metrics.v_drain_peak, out.final_gain, ok))
            }
        }
    })();
    match outcome {
        Ok((peak, gain, converged)) => {
            row.v_drain_peak = peak;
            row.gain = gain;
            row.converged = converged;
            row.pass = peak <= sweep.breakdown;
        }
        Err(e) => row.failure = Some(e.to_string()),
    }
    row
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RuggednessVerdict {
    pub pass: bool,
    pub rows: usize,
    pub failures: usize,
    pub worst_phase_deg: f64,
    pub worst_supply: f64,
    pub worst_protection: bool,
    pub worst_peak: f64,
    /// `breakdown - worst_peak`; negative on failure.
    pub margin: f64,
    pub failing_phases: Vec<f64>,
}

pub fn ruggedness_verdict(report: &RuggednessReport) -> Result<RuggednessVerdict> {
    if report.rows.is_empty() {
        return Err(Error::Precondition("ruggedness report has no rows".into()));
    }
    let peak_key = |r: &RuggednessRow| {
        if r.v_drain_peak.is_nan() {
            f64::INFINITY
        } else {
            r.v_drain_peak
        }
    };
    let worst = report
        .rows
        .iter()
        .max_by(|a, b| peak_key(a).total_cmp(&peak_key(b)))
        .expect("non-empty");
    let failing: Vec<f64> = report
        .rows
        .iter()
        .filter(|r| !r.pass)
        .map(|r| r.phase_deg)
        .collect();
    Ok(RuggednessVerdict {
        pass: failing.is_empty(),
        rows: report.rows.len(),
        failures: failing.len(),
        worst_phase_deg: worst.phase_deg,
        worst_supply: worst.supply,
        worst_protection: worst.protection,
        worst_peak: worst.v_drain_peak,
        margin: report.breakdown - peak_key(worst),
        failing_phases: failing,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    #[test]
    fn unit_vswr_returns_reference() {
        for phase in [0.0, 45.0, 180.0, 300.0] {
            let z = load_from_vswr(1.0, phase, 50.0).unwrap();
            assert_relative_eq!(z.re, 50.0, max_relative = 1e-15);
            assert!(z.im.abs() < 1e-12);
        }
    }

    #[test]
    fn real_axis_points() {
        let z = load_from_vswr(10.0, 180.0, 50.0).unwrap();
        assert_relative_eq!(z.re, 5.0, max_relative = 1e-12);
        assert!(z.im.abs() < 1e-12);
        let z = load_from_vswr(10.0, 0.0, 50.0).unwrap();
        assert_relative_eq!(z.re, 500.0, max_relative = 1e-12);
    }

    #[test]
    fn vswr_below_one_rejected() {
        assert!(matches!(load_from_vswr(0.9, 0.0, 50.0), Err(Error::Domain(_))));
    }

    #[test]
    fn series_equivalents() {
        let f = 2.45e9;
        let w = 2.0 * PI * f;
        assert_eq!(
            series_equivalent(Complex64::new(50.0, 0.0), f).unwrap(),
            SeriesEquivalent::resistive(50.0)
        );
        match series_equivalent(Complex64::new(10.0, 15.394), f).unwrap().element {
            ReactiveElement::Inductor(l) => assert_relative_eq!(l, 1.0e-9, max_relative = 1e-4),
            other => panic!("{other:?}"),
        }
        let z = Complex64::new(10.0, -1.0 / (w * 1e-12));
        match series_equivalent(z, f).unwrap().element {
            ReactiveElement::Capacitor(c) => assert_relative_eq!(c, 1e-12, max_relative = 1e-12),
            other => panic!("{other:?}"),
        }
        assert!(series_equivalent(Complex64::new(0.0, 1.0), f).is_err());
    }

    #[test]
    fn verdict_summaries() {
        let row = |phase: f64, peak: f64| RuggednessRow {
            vswr: 10.0,
            phase_deg: phase,
            supply: 5.0,
            protection: false,
            v_drain_peak: peak,
            pass: peak <= 6.8,
            gain: 1.0,
            converged: true,
            failure: None,
        };
        let mut report = RuggednessReport {
            breakdown: 6.8,
            rows: vec![row(0.0, 5.0), row(30.0, 6.0)],
        };
        let v = ruggedness_verdict(&report).unwrap();
        assert!(v.pass);
        assert_relative_eq!(v.margin, 0.8, max_relative = 1e-12);
        report.rows.push(row(60.0, 9.0));
        let v = ruggedness_verdict(&report).unwrap();
        assert!(!v.pass);
        assert_eq!(v.failing_phases, vec![60.0]);
        assert_eq!(v.worst_phase_deg, 60.0);
        report.rows.clear();
        assert!(ruggedness_verdict(&report).is_err());
    }

    proptest! {
        #[test]
        fn antipodal_loads_multiply_to_z0_squared(
            vswr in 1.0f64..50.0, phase in 0.0f64..360.0, z0 in 1.0f64..100.0
        ) {
            let a = load_from_vswr(vswr, phase, z0).unwrap();
            let b = load_from_vswr(vswr, phase + 180.0, z0).unwrap();
            let p = a * b / (z0 * z0);
            prop_assert!((p - 1.0).norm() < 1e-9);
        }

        #[test]
        fn vswr_round_trip(vswr in 1.0f64..50.0, phase in 0.0f64..360.0, z0 in 1.0f64..100.0) {
            let z = load_from_vswr(vswr, phase, z0).unwrap();
            prop_assert!(z.re > 0.0);
            let back = vswr_from_load(z, z0);
            prop_assert!((back - vswr).abs() <= 1e-12 * vswr);
        }

        #[test]
        fn series_equivalent_reproduces_impedance(
            re in 0.1f64..100.0, im in -100.0f64..100.0
        ) {
            let z = Complex64::new(re, im);
            let eq = series_equivalent(z, 2.45e9).unwrap();
            prop_assert!((eq.impedance(2.45e9) - z).norm() < 1e-9 * (1.0 + z.norm()));
        }
    }
}
