//! Round-trips the built-in feeder through the JSON case format and prints
//! its topology.

use equiflex::grid::{builtin_ieee33, parse_case, to_json};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let case = builtin_ieee33();
    let text = to_json(&case);
    let back = parse_case(&text)?;
    let topo = back.topology();
    println!("{}: {} buses, {} lines, root {:?}", back.name, back.buses.len(), back.lines.len(), topo.root);
    println!("radial {}, max depth {}", topo.radial, topo.depth.iter().max().unwrap_or(&0));
    println!("peak load {:.1} kW", back.peak_load());
    Ok(())
}
