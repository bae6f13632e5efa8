//! End-to-end properties of the stage, sweeps and protection loop.

use classe_forge::circuit::{ModelOptions, SteadyStateOptions};
use classe_forge::design::{spec_from_dbm, DesignSpec, PowerScope};
use classe_forge::mismatch::load_from_vswr;
use classe_forge::power_control::{simulate_vramps, simulated_pout_vs_vramp, RegulatorParams};
use classe_forge::protection::{
    run_protection_loop, LoopStatus, ProtectionLoopParams, ProtectionSettings, RectifierParams,
};
use classe_forge::stage::{Stage, StageSettings};
use std::sync::OnceLock;

fn nominal() -> &'static Stage {
    static STAGE: OnceLock<Stage> = OnceLock::new();
    STAGE.get_or_init(|| {
        Stage::build(&StageSettings {
            spec: DesignSpec {
                vdc: 1.8,
                vknee: 0.2,
                pout_target: spec_from_dbm(25.1),
                f0: 2.45e9,
                q_factor: 5.0,
            },
            scope: PowerScope::PerHalf,
            l6: None,
            r_on: 0.3,
            duty: None,
            model_opts: ModelOptions::default(),
            steady: SteadyStateOptions::default(),
            p_in: spec_from_dbm(0.0),
        })
        .unwrap()
    })
}

fn settings(target: f64) -> ProtectionSettings {
    ProtectionSettings {
        rect: RectifierParams::default(),
        loop_params: ProtectionLoopParams::default(),
        target_peak: target,
    }
}

#[test]
fn nominal_operating_bands() {
    let s = nominal();
    let (ss, m) = s.simulate(&s.matched(1.8, 1.0).unwrap()).unwrap();
    assert!(ss.converged && m.converged);
    assert!((0.5..=0.95).contains(&m.drain_efficiency), "{}", m.drain_efficiency);
    assert!(m.zvs_residual < 0.18);
    let ratio = m.v_drain_peak / 1.8;
    assert!((2.5..=4.0).contains(&ratio), "{ratio}");
    assert!(m.pae <= m.drain_efficiency);
}

#[test]
fn steady_state_is_periodic() {
    let s = nominal();
    let (ss, _) = s.simulate(&s.matched(1.8, 1.0).unwrap()).unwrap();
    let w = &ss.waveform;
    let first = &w.states[0];
    let last = w.states.last().unwrap();
    let scale = first.iter().fold(0.0f64, |a, v| a.max(v.abs()));
    for (a, b) in first.iter().zip(last) {
        assert!((a - b).abs() < 1e-3 * scale, "{a} vs {b}");
    }
    assert_eq!(w.v_drain.len(), w.period_samples + 1);
}

#[test]
fn drain_peak_grows_with_supply() {
    let s = nominal();
    let z = load_from_vswr(3.0, 90.0, s.components.r_load).unwrap();
    let peaks: Vec<f64> = [1.2, 1.8, 2.5, 3.3]
        .iter()
        .map(|&v| s.simulate(&s.model(z, v, 1.0).unwrap()).unwrap().1.v_drain_peak)
        .collect();
    assert!(peaks.windows(2).all(|w| w[1] > w[0]), "{peaks:?}");
}

#[test]
fn protection_idle_below_threshold() {
    let s = nominal();
    let st = settings(6.8);
    let params = st.for_supply(1.8).unwrap();
    let out = run_protection_loop(
        |g| s.matched(1.8, params.drive_depth(g)),
        &st.rect,
        &params,
        &s.steady,
        s.p_in,
    )
    .unwrap();
    assert_eq!(out.status, LoopStatus::Inactive);
    assert_eq!(out.simulations, 1);
    assert_eq!(out.final_gain, params.g_max);
    assert!(!out.limiting());
}

#[test]
fn protection_clamps_and_actuates_monotonically() {
    let s = nominal();
    let st = settings(6.5);
    let params = st.for_supply(5.0).unwrap();
    let z = load_from_vswr(10.0, 270.0, s.components.r_load).unwrap();
    let out = run_protection_loop(
        |g| s.model(z, 5.0, params.drive_depth(g)),
        &st.rect,
        &params,
        &s.steady,
        s.p_in,
    )
    .unwrap();
    assert!(out.converged, "{:?}", out.status);
    assert!(out.metrics.v_drain_peak <= 6.5 * 1.02);
    // Starting far above threshold the gain only ever falls.
    let gains: Vec<f64> = out.trace.rows.iter().map(|r| r.gain).collect();
    assert!(gains.windows(2).all(|w| w[1] <= w[0]));
    assert!(out.trace.rows[0].v_drain_peak > 6.8);
}

#[test]
fn pinned_gain_range_needs_one_simulation() {
    let s = nominal();
    let mut st = settings(6.5);
    st.loop_params.g_min = 0.2;
    st.loop_params.g_max = 0.2;
    let params = st.for_supply(5.0).unwrap();
    let z = load_from_vswr(10.0, 270.0, s.components.r_load).unwrap();
    let out = run_protection_loop(
        |g| s.model(z, 5.0, params.drive_depth(g)),
        &st.rect,
        &params,
        &s.steady,
        s.p_in,
    )
    .unwrap();
    assert_eq!(out.simulations, 1);
    assert_eq!(out.final_gain, 0.2);
}

#[test]
fn single_vramp_matches_direct_simulation() {
    let s = nominal();
    let reg = RegulatorParams::default();
    let pts = simulated_pout_vs_vramp(&[0.6], &reg, s).unwrap();
    let (_, m) = s.simulate(&s.matched(1.2, 1.0).unwrap()).unwrap();
    assert_eq!(pts[0].vcon, 1.2);
    assert_eq!(pts[0].pout_half, m.p_out_fund);
}

#[test]
fn zero_ramp_gives_zero_power() {
    let s = nominal();
    let pts = simulate_vramps(&[0.0], &RegulatorParams::default(), s).unwrap();
    assert_eq!(pts[0].vcon, 0.0);
    assert!(pts[0].pout.abs() < 1e-18);
}

#[test]
fn power_rises_with_ramp() {
    let s = nominal();
    let grid = [0.2, 0.4, 0.6, 0.8, 1.0];
    let pts = simulated_pout_vs_vramp(&grid, &RegulatorParams::default(), s).unwrap();
    assert!(pts.windows(2).all(|w| w[1].pout > w[0].pout));
    assert!(simulated_pout_vs_vramp(&[0.4, 0.2], &RegulatorParams::default(), s).is_err());
}

#[test]
fn halving_the_step_barely_moves_power() {
    let s = nominal();
    let mut fine = s.clone();
    fine.steady.steps_per_cycle *= 2;
    let a = s.simulate(&s.matched(1.8, 1.0).unwrap()).unwrap().1;
    let b = fine.simulate(&fine.matched(1.8, 1.0).unwrap()).unwrap().1;
    assert!(((a.p_out_fund - b.p_out_fund) / a.p_out_fund).abs() < 1e-3);
}
