// 10:1 VSWR at a 5 V supply, twelve reflection phases, with and without
// the drain peak limiter, judged against a 6.8 V breakdown.

use classe_forge::circuit::{ModelOptions, SteadyStateOptions};
use classe_forge::design::{spec_from_dbm, DesignSpec, PowerScope};
use classe_forge::mismatch::{phase_grid, ruggedness_verdict, sweep_vswr, VswrSweep};
use classe_forge::protection::{ProtectionLoopParams, ProtectionSettings, RectifierParams};
use classe_forge::stage::{Stage, StageSettings};

pub fn run_example() -> classe_forge::Result<()> {
    let stage = Stage::build(&StageSettings {
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
        p_in: 0.0,
    })?;
    let phases = phase_grid(12);
    let sweep = VswrSweep {
        supply: 5.0,
        vswr: 10.0,
        z0: None,
        phases: &phases,
        breakdown: 6.8,
    };
    let settings = ProtectionSettings {
        rect: RectifierParams::default(),
        loop_params: ProtectionLoopParams::default(),
        target_peak: 6.5,
    };
    let off = sweep_vswr(&stage, &sweep, None)?;
    let on = sweep_vswr(&stage, &sweep, Some(&settings))?;

    println!("phase  off V    on V    gain");
    for (a, b) in off.rows.iter().zip(&on.rows) {
        println!(
            "{:5}  {:6.2}  {:6.3}  {:.4}",
            a.phase_deg, a.v_drain_peak, b.v_drain_peak, b.gain
        );
    }
    for (label, report) in [("off", &off), ("on", &on)] {
        let v = ruggedness_verdict(report)?;
        println!(
            "protection {label}: {} ({} failing phases, margin {:.2} V)",
            if v.pass { "PASS" } else { "FAIL" },
            v.failures,
            v.margin
        );
    }
    Ok(())
}

#[allow(dead_code)]
fn main() {
    run_example().unwrap();
}
