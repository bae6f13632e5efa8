// 2 dB power steps from the regulator ramp, model against simulation.

use classe_forge::circuit::{ModelOptions, SteadyStateOptions};
use classe_forge::design::{spec_from_dbm, DesignSpec, PowerScope};
use classe_forge::power_control::{
    fit_through_origin, power_step_table, simulate_vramps, RegulatorParams,
};
use classe_forge::stage::{Stage, StageSettings};

pub fn run_example() -> classe_forge::Result<()> {
    let pmax = spec_from_dbm(25.1);
    let stage = Stage::build(&StageSettings {
        spec: DesignSpec {
            vdc: 1.8,
            vknee: 0.2,
            pout_target: pmax,
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
    let reg = RegulatorParams::default();
    let table = power_step_table(pmax, 2.0, 11, &reg, stage.components.r_load)?;
    let sim = simulate_vramps(&table.vramps(), &reg, &stage)?;

    println!("level  vramp    vcon   model dBm  sim dBm");
    for (r, s) in table.rows.iter().zip(&sim) {
        println!(
            "{:>5}  {:.4}  {:.4}  {:8.3}  {:8.3}",
            r.level, r.vramp, r.vcon, r.pout_dbm, s.pout_dbm
        );
    }

    let v2: Vec<f64> = sim.iter().map(|s| s.vcon * s.vcon).collect();
    let p: Vec<f64> = sim.iter().map(|s| s.pout_half).collect();
    let fit = fit_through_origin(&v2, &p)?;
    println!("P = {:.4} * vcon^2, R^2 = {:.6}", fit.slope, fit.r_squared);
    Ok(())
}

#[allow(dead_code)]
fn main() {
    run_example().unwrap();
}
