//! Builds the default experiment for a seed and writes it as a replayable
//! scenario file.
//!
//! `cargo run --example scenario_synthesis -- [seed] [path]`

use equiflex::grid::builtin_ieee33;
use equiflex::scenario::{defaults, synthesize_scenario, PenetrationConfig};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let seed = std::env::args().nth(1).map_or(Ok(0), |s| s.parse())?;
    let path = std::env::args().nth(2).unwrap_or_else(|| "scenario.json".into());
    let config = PenetrationConfig { seed, ..Default::default() };
    let s = synthesize_scenario(&builtin_ieee33(), &config, defaults::DISTURBANCE_MAGNITUDE)?;
    let p = &s.portfolio;
    println!(
        "{} actors; {} pv, {} dg, {} bess, {} ev, {} flexible loads",
        s.actors.actors.len(),
        p.pv.len(),
        p.dg.len(),
        p.bess.len(),
        p.ev.len(),
        p.flex.len()
    );
    for t in s.disturbance.affected() {
        println!("disturbance at t={t}: {:.1} kW", s.disturbance.total(t));
    }
    s.save(&path)?;
    println!("wrote {path}");
    Ok(())
}
