//! Lagged graph learning on the reference series, with and without
//! contemporaneous effects.

use extail::discovery::{discover_ts, DiscoveryConfig};
use extail::graph::{ned, to_dot, GraphJson};
use extail::models::{reference_ts_xscm, reference_ts_xscm_lagged_only, sample_ts_xscm, seeded_rng};

fn main() -> extail::Result<()> {
    let cfg = DiscoveryConfig { tau: 1, ..DiscoveryConfig::default() };
    for (name, spec) in [("lagged only", reference_ts_xscm_lagged_only()), ("with B0", reference_ts_xscm())] {
        let truth = spec.ts_graph();
        let x = sample_ts_xscm(&spec, 20_000, &mut seeded_rng(21))?;
        let out = discover_ts(&x, &cfg)?;
        println!("{name}: true {:?}", truth.edges());
        println!("{name}: learned {:?}, undirected {:?}", out.graph.edges(), out.graph.undirected());
        println!("{name}: lagged NED {:.3}", ned(&truth.lagged(), &out.graph.lagged()));
        print!("{}", to_dot(&GraphJson::from(&out.graph)));
    }
    Ok(())
}
