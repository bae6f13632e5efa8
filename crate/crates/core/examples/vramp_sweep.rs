// Output power and PAE against the ramp voltage, 0 to 2 V.

use classe_forge::circuit::{ModelOptions, SteadyStateOptions};
use classe_forge::design::{spec_from_dbm, DesignSpec, PowerScope};
use classe_forge::power_control::{simulated_pout_vs_vramp, RegulatorParams};
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
        scope: PowerScope::Differential,
        l6: None,
        r_on: 0.3,
        duty: None,
        model_opts: ModelOptions::default(),
        steady: SteadyStateOptions::default(),
        p_in: spec_from_dbm(0.0),
    })?;
    let grid: Vec<f64> = (0..=20).map(|k| 0.1 * k as f64).collect();
    let pts = simulated_pout_vs_vramp(&grid, &RegulatorParams::default(), &stage)?;
    println!("vramp  vcon   Pout dBm   PAE %");
    for p in pts.iter().skip(1) {
        println!(
            "{:.2}   {:.2}   {:7.2}   {:5.1}",
            p.vramp,
            p.vcon,
            p.pout_dbm,
            100.0 * p.pae
        );
    }
    Ok(())
}

#[allow(dead_code)]
fn main() {
    run_example().unwrap();
}
