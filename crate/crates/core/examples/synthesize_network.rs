// Closed-form class-E network for a 1.8 V, 25.1 dBm, 2.45 GHz stage.

use classe_forge::design::{
    default_feed_inductance, spec_from_dbm, synthesize_network, DesignSpec,
};

pub fn run_example() -> classe_forge::Result<()> {
    let spec = DesignSpec {
        vdc: 1.8,
        vknee: 0.2,
        pout_target: spec_from_dbm(25.1),
        f0: 2.45e9,
        q_factor: 5.0,
    };
    let mut c = synthesize_network(&spec, 1.0, 0.3)?;
    c.l6 = default_feed_inductance(c.l7);

    println!("R_load = {:.4} ohm", c.r_load);
    println!("C3     = {:.3} pF", c.c3 * 1e12);
    println!("L7     = {:.3} nH", c.l7 * 1e9);
    println!("Cs     = {:.3} pF", c.cs * 1e12);
    println!("L6     = {:.2} nH (20 x L7)", c.l6 * 1e9);

    // Resonance check: L7 and the Q-corrected capacitor leave a small
    // residual reactance that the class-E phase relation needs.
    let w = spec.omega();
    println!("X(L7) - X(Cs) = {:.3} ohm", w * c.l7 - 1.0 / (w * c.cs));
    Ok(())
}

#[allow(dead_code)]
fn main() {
    run_example().unwrap();
}
