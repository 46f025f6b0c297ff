//! Undirected extremal network recovery from the precision matrix model.

use extail::discovery::{learn_emn, DiscoveryConfig};
use extail::graph::uned;
use extail::models::{reference_emn, sample_emn, seeded_rng};

fn main() -> extail::Result<()> {
    let spec = reference_emn();
    println!("Q ={:.2}", spec.precision());
    let truth = spec.graph();
    println!("true edges: {:?}", truth.edges());
    for n in [5_000, 50_000] {
        let x = sample_emn(&spec, n, &mut seeded_rng(n as u64))?;
        let out = learn_emn(&x, &DiscoveryConfig::default())?;
        println!("n = {n}: {:?}, UNED {:.3}", out.graph.edges(), uned(truth.edges(), out.graph.edges()));
    }
    Ok(())
}
