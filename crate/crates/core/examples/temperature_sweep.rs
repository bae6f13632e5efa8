// Bias reference and output power from -25 to 85 C, with the solved
// compensation resistor and with it detuned tenfold.

use classe_forge::bias::{
    pout_spread_db, solve_compensation, temp_sensitivity, temperature_sweep, BiasChain,
    BiasNetworkParams, DriveCoupling, ThermalModel,
};
use classe_forge::circuit::{ModelOptions, SteadyStateOptions};
use classe_forge::design::{spec_from_dbm, DesignSpec, PowerScope};
use classe_forge::power_control::RegulatorParams;
use classe_forge::stage::{Stage, StageSettings};

pub fn run_example() -> classe_forge::Result<()> {
    let thermal = ThermalModel::default();
    let r5 = solve_compensation(10e3, 10e3, 8.0, &thermal)?;
    println!("compensating r5 = {r5:.1} ohm");

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
    let temps: Vec<f64> = (0..=22).map(|k| -25.0 + 5.0 * k as f64).collect();
    let reg = RegulatorParams::default();

    for (label, factor) in [("compensated", 1.0), ("r5 x 10", 10.0)] {
        let bias = BiasNetworkParams {
            r5: r5 * factor,
            ..Default::default()
        };
        let slope = temp_sensitivity(&bias, &thermal, 0.6, -25.0, 85.0)?;
        let chain = BiasChain {
            bias,
            thermal,
            coupling: DriveCoupling::default(),
        };
        let pts = temperature_sweep(&stage, &reg, &chain, 0.6, &temps)?;
        println!(
            "{label:>12}: dVref/dT = {:8.3} uV/K, Pout {:.2} -> {:.2} dBm, spread {:.4} dB",
            slope * 1e6,
            pts[0].pout_dbm,
            pts[pts.len() - 1].pout_dbm,
            pout_spread_db(&pts)
        );
    }
    Ok(())
}

#[allow(dead_code)]
fn main() {
    run_example().unwrap();
}
