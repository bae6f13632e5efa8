use std::io::Write;

use nalgebra::DVector;

use super::model::{CircuitModel, I_FEED, I_SERIES, V_DRAIN};
use crate::error::Result;
use crate::report::{csv_writer, fmt_f64};

/// Periodic steady-state bookkeeping carried by a waveform.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SteadyInfo {
    pub converged: bool,
    pub cycles_used: usize,
    pub residual: f64,
}

/// Uniformly sampled simulation output.
///
/// Samples include both endpoints: `cycles * period_samples + 1` rows,
/// the first being the initial state.
#[derive(Debug, Clone, PartialEq)]
pub struct Waveform {
    pub dt: f64,
    pub period_samples: usize,
    /// Steps of each period spent with the switch ON.
    pub on_samples: usize,
    pub states: Vec<Vec<f64>>,
    pub v_drain: Vec<f64>,
    pub i_load: Vec<f64>,
    pub i_dc: Vec<f64>,
    pub steady: Option<SteadyInfo>,
}

impl Waveform {
    pub fn len(&self) -> usize {
        self.states.len()
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }

    /// Number of whole periods covered.
    pub fn cycles(&self) -> usize {
        self.len().saturating_sub(1) / self.period_samples
    }

    pub fn time(&self, k: usize) -> f64 {
        k as f64 * self.dt
    }

    pub(crate) fn push_state(&mut self, x: &DVector<f64>) {
        self.v_drain.push(x[V_DRAIN]);
        self.i_load.push(x[I_SERIES]);
        self.i_dc.push(x[I_FEED]);
        self.states.push(x.iter().copied().collect());
    }

    pub(crate) fn empty(dt: f64, period_samples: usize, on_samples: usize) -> Self {
        Self {
            dt,
            period_samples,
            on_samples,
            states: Vec::new(),
            v_drain: Vec::new(),
            i_load: Vec::new(),
            i_dc: Vec::new(),
            steady: None,
        }
    }

    /// Writes `t_s,v_drain_V,i_load_A,i_dc_A,<state columns>`.
    pub fn write_csv<W: Write>(&self, model: &CircuitModel, out: W) -> Result<()> {
        let mut w = csv_writer(out);
        let mut header = vec!["t_s", "v_drain_V", "i_load_A", "i_dc_A"];
        header.extend_from_slice(model.state_names());
        w.write_record(&header)?;
        for k in 0..self.len() {
            let mut row = vec![
                fmt_f64(self.time(k)),
                fmt_f64(self.v_drain[k]),
                fmt_f64(self.i_load[k]),
                fmt_f64(self.i_dc[k]),
            ];
            row.extend(self.states[k].iter().map(|&v| fmt_f64(v)));
            w.write_record(&row)?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Integrates `n_cycles` periods of `model` from `x0`.
pub fn integrate_cycles(
    model: &CircuitModel,
    x0: &DVector<f64>,
    n_cycles: usize,
    steps_per_cycle: usize,
) -> Result<Waveform> {
    let schedule = model.system().schedule(steps_per_cycle)?;
    let ops = model.system().operators(&schedule);
    let mut w = Waveform::empty(schedule.dt, steps_per_cycle, schedule.on_steps);
    ops.integrate(x0, n_cycles, |x| w.push_state(x))?;
    Ok(w)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::circuit::build_class_e_model;
    use crate::testutil::nominal_components;
    use num_complex::Complex64;

    fn model(vdd: f64) -> CircuitModel {
        let c = nominal_components();
        build_class_e_model(&c, Complex64::new(c.r_load, 0.0), vdd, 2.45e9, 0.5).unwrap()
    }

    #[test]
    fn zero_supply_zero_state_stays_zero() {
        let m = model(0.0);
        let w = integrate_cycles(&m, &m.zero_state(), 3, 256).unwrap();
        assert_eq!(w.len(), 3 * 256 + 1);
        assert!(w.states.iter().flatten().all(|&v| v == 0.0));
    }

    #[test]
    fn zero_cycles_returns_initial_state() {
        let m = model(1.8);
        let mut x0 = m.zero_state();
        x0[1] = 0.7;
        let w = integrate_cycles(&m, &x0, 0, 256).unwrap();
        assert_eq!(w.len(), 1);
        assert_eq!(w.states[0], vec![0.0, 0.7, 0.0, 0.0]);
        assert_eq!(w.cycles(), 0);
    }

    #[test]
    fn self_convergence_under_step_refinement() {
        let m = model(1.8);
        let x0 = m.zero_state();
        let coarse = integrate_cycles(&m, &x0, 5, 2048).unwrap();
        let fine = integrate_cycles(&m, &x0, 5, 4096).unwrap();
        let a = DVector::from_vec(coarse.states.last().unwrap().clone());
        let b = DVector::from_vec(fine.states.last().unwrap().clone());
        let rel = (&a - &b).norm() / b.norm();
        assert!(rel < 1e-4, "relative difference {rel}");
    }

    #[test]
    fn misaligned_switch_edge_is_rejected() {
        let c = nominal_components();
        let m = build_class_e_model(&c, Complex64::new(c.r_load, 0.0), 1.8, 2.45e9, 0.3).unwrap();
        assert!(integrate_cycles(&m, &m.zero_state(), 1, 1024).is_err());
        assert!(integrate_cycles(&m, &m.zero_state(), 1, 1000).is_ok());
    }

    #[test]
    fn csv_has_expected_header() {
        let m = model(1.8);
        let w = integrate_cycles(&m, &m.zero_state(), 1, 1024).unwrap();
        let mut buf = Vec::new();
        w.write_csv(&m, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let first = text.lines().next().unwrap();
        assert_eq!(
            first,
            "t_s,v_drain_V,i_load_A,i_dc_A,i_feed_A,v_shunt_V,i_series_A,v_series_cap_V"
        );
        assert_eq!(text.lines().count(), 1026);
        assert!(!text.contains('\r'));
    }
}
