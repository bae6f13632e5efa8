//! Drive duty trimming for zero-voltage switching.
//!
//! The simplified finite-Q shunt/series equations leave a residual drain
//! voltage at turn-on when driven at exactly 50 %. Trimming the ON
//! fraction restores ZVS without touching the synthesized passives.

use num_complex::Complex64;

use super::model::{build_class_e_model_with, ModelOptions};
use super::steady::find_periodic_steady_state_from;
use super::system::SteadyStateOptions;
use crate::design::ComponentSet;
use crate::error::{Error, Result};

/// Result of [`trim_duty_for_zvs`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DutyTrim {
    pub duty: f64,
    pub on_steps: usize,
    /// `|v_drain|` at turn-on divided by the supply.
    pub zvs_ratio: f64,
    /// Most negative drain voltage over the period divided by the supply.
    pub min_ratio: f64,
}

impl DutyTrim {
    fn score(&self) -> f64 {
        self.zvs_ratio + (-self.min_ratio).max(0.0)
    }
}

/// Searches ON-step counts in `[lo, hi]` (fractions of the period) for the
/// duty minimizing the turn-on residual plus any negative drain excursion,
/// at matched load and unit supply.
pub fn trim_duty_for_zvs(
    components: &ComponentSet,
    f0: f64,
    model_opts: &ModelOptions,
    ss_opts: &SteadyStateOptions,
    range: (f64, f64),
) -> Result<DutyTrim> {
    let n = ss_opts.steps_per_cycle;
    let lo = ((range.0 * n as f64).ceil() as usize).max(1);
    let hi = ((range.1 * n as f64).floor() as usize).min(n - 1);
    if lo > hi {
        return Err(Error::Precondition(format!(
            "duty range {range:?} holds no step edge at {n} steps per cycle"
        )));
    }
    let load = Complex64::new(components.r_load, 0.0);
    let mut warm = None;
    let mut evaluate = |on_steps: usize| -> Result<DutyTrim> {
        let duty = on_steps as f64 / n as f64;
        let model = build_class_e_model_with(components, load, 1.0, f0, duty, model_opts)?;
        let x0 = warm.take().unwrap_or_else(|| model.zero_state());
        let ss = find_periodic_steady_state_from(&model, &x0, ss_opts)?;
        let v = &ss.waveform.v_drain;
        let trim = DutyTrim {
            duty,
            on_steps,
            zvs_ratio: v[v.len() - 1].abs(),
            min_ratio: v.iter().copied().fold(f64::INFINITY, f64::min),
        };
        warm = Some(ss.x_star);
        Ok(trim)
    };

    let coarse = (n / 128).max(1);
    let mut best: Option<DutyTrim> = None;
    let mut k = lo;
    while k <= hi {
        let t = evaluate(k)?;
        if best.is_none_or(|b| t.score() < b.score()) {
            best = Some(t);
        }
        k += coarse;
    }
    let centre = best.expect("range is non-empty").on_steps;
    let fine_lo = centre.saturating_sub(coarse).max(lo);
    let fine_hi = (centre + coarse).min(hi);
    for k in fine_lo..=fine_hi {
        let t = evaluate(k)?;
        if best.is_none_or(|b| t.score() < b.score()) {
            best = Some(t);
        }
    }
    Ok(best.expect("range is non-empty"))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::testutil::nominal_components;

    #[test]
    fn trimmed_duty_reaches_zvs() {
        let c = nominal_components();
        let opts = SteadyStateOptions::default();
        let trim =
            trim_duty_for_zvs(&c, 2.45e9, &ModelOptions::default(), &opts, (0.4, 0.65)).unwrap();
        assert!(trim.zvs_ratio < 0.05, "{trim:?}");
        assert!(trim.min_ratio > -0.05, "{trim:?}");
        assert!(trim.duty > 0.5 && trim.duty < 0.62, "{trim:?}");
        assert_eq!(trim.duty * 1024.0, trim.on_steps as f64);
    }

    #[test]
    fn empty_range_is_rejected() {
        let c = nominal_components();
        let opts = SteadyStateOptions::default();
        let err = trim_duty_for_zvs(&c, 2.45e9, &ModelOptions::default(), &opts, (0.5001, 0.5009));
        assert!(err.is_err());
    }
}
