//! CPDAG learning on a random structural model, with the exact oracle for comparison.

use extail::discovery::{discover_dag, discover_dag_with, DiscoveryConfig};
use extail::graph::{cpdag_of, ned, ned_star, uned};
use extail::models::{random_xscm, sample_xscm, seeded_rng};
use extail::ptcc::AnalyticSeparation;

fn main() -> extail::Result<()> {
    let mut rng = seeded_rng(8);
    let spec = random_xscm(8, 0.3, &mut rng)?;
    let truth = spec.dag();
    println!("true edges: {:?}", truth.edges());

    let cfg = DiscoveryConfig::default();
    let oracle = discover_dag_with(&AnalyticSeparation::new(spec.analytic_tpdm()?), &cfg)?;
    assert_eq!(oracle.cpdag, cpdag_of(&truth));
    println!("oracle CPDAG: directed {:?}, undirected {:?}", oracle.cpdag.directed(), oracle.cpdag.undirected());

    for n in [5_000, 50_000] {
        let x = sample_xscm(&spec, n, &mut rng)?;
        let out = discover_dag(&x, &cfg)?;
        let est = out.cpdag.as_edge_set();
        println!(
            "n = {n}: UNED {:.3}, NED {:.3}, NED* {:.3}; {} tests, {} skipped, {} conflicts",
            uned(truth.edges(), &est),
            ned(truth.edges(), &est),
            ned_star(&truth, &out.cpdag),
            out.stats.tests_run,
            out.stats.tests_skipped,
            out.stats.orientation_conflicts
        );
        for ((a, b), entry) in out.sepsets.iter().take(3) {
            println!("  removed {a}–{b} given {:?}", entry.set);
        }
    }
    Ok(())
}
