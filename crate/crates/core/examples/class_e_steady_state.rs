// Periodic steady state of one half circuit and its metrics, plus the
// waveform written as CSV.

use classe_forge::circuit::{ModelOptions, SteadyStateOptions};
use classe_forge::design::{spec_from_dbm, watts_to_dbm, DesignSpec, PowerScope};
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
    println!("ZVS-trimmed duty: {}", stage.duty);

    let model = stage.matched(1.8, 1.0)?;
    let (ss, m) = stage.simulate(&model)?;
    println!(
        "converged {} after {} cycles (residual {:.1e})",
        ss.converged, ss.cycles_used, ss.residual
    );
    println!("P_out (half)     {:.2} dBm", watts_to_dbm(m.p_out_fund));
    println!("P_out (pair)     {:.2} dBm", watts_to_dbm(m.differential_pout()));
    println!("drain efficiency {:.1} %", 100.0 * m.drain_efficiency);
    println!("PAE              {:.1} %", 100.0 * m.pae);
    println!("peak / vdd       {:.2}", m.v_drain_peak / model.vdd);
    println!("ZVS residual     {:.3} V", m.zvs_residual);
    println!("energy closure   {:.2e}", m.energy_closure_error());

    let path = std::env::temp_dir().join("classe_forge_waveform.csv");
    ss.waveform.write_csv(&model, std::fs::File::create(&path)?)?;
    println!("waveform: {}", path.display());
    Ok(())
}

#[allow(dead_code)]
fn main() {
    run_example().unwrap();
}
