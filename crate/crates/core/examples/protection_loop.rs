// Iteration trace of the drain peak limiter into the worst mismatch.

use classe_forge::circuit::{ModelOptions, SteadyStateOptions};
use classe_forge::design::{spec_from_dbm, DesignSpec, PowerScope};
use classe_forge::mismatch::load_from_vswr;
use classe_forge::protection::{
    drain_referred_threshold, run_protection_loop, ProtectionLoopParams, ProtectionSettings,
    RectifierParams,
};
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
    let settings = ProtectionSettings {
        rect: RectifierParams::default(),
        loop_params: ProtectionLoopParams::default(),
        target_peak: 6.5,
    };
    let supply = 5.0;
    let params = settings.for_supply(supply)?;
    println!(
        "threshold {:.4} V at v_c, {:.3} V at the drain",
        params.v_ref_threshold,
        drain_referred_threshold(params.v_ref_threshold, supply, params.sense_ratio, &settings.rect)
    );

    let z = load_from_vswr(10.0, 270.0, stage.components.r_load)?;
    let out = run_protection_loop(
        |g| stage.model(z, supply, params.drive_depth(g)),
        &settings.rect,
        &params,
        &stage.steady,
        stage.p_in,
    )?;
    for r in out.trace.rows.iter().step_by(20) {
        println!(
            "iter {:>3}  gain {:.4}  peak {:6.2} V  error {:+.4} V",
            r.iter, r.gain, r.v_drain_peak, r.error
        );
    }
    println!(
        "{:?} after {} simulations, final peak {:.3} V",
        out.status, out.simulations, out.metrics.v_drain_peak
    );
    Ok(())
}

#[allow(dead_code)]
fn main() {
    run_example().unwrap();
}
