//! A small replicated sweep through the command-line layer, written to a
//! temporary directory.

use extail::cli::{cmd_experiment, ExperimentArgs, RunContext, Scenario};
use extail::ptcc::NullCentering;

fn main() -> extail::Result<()> {
    let out = std::env::temp_dir().join("extail-sweep");
    let args = ExperimentArgs {
        scenario: Scenario::Dag,
        p: vec![6],
        phi: vec![0.3],
        n: vec![5_000, 20_000],
        replicates: 5,
        seed: 1,
        q: 0.99,
        alpha: 0.005,
        q_grid: None,
        alpha_grid: Some(vec![0.001, 0.01]),
        tau: 1,
        contemporaneous: false,
        max_cond_size: None,
        centering: NullCentering::CyclicShift,
        out: out.clone(),
    };
    let rows = cmd_experiment(&args, &RunContext::default())?;
    for r in rows.iter().filter(|r| r.replicate == 0) {
        println!("n = {:>6} α = {:<5} UNED {:.3} {}", r.n, r.alpha, r.uned.unwrap_or(f64::NAN), r.status);
    }
    println!("{}", std::fs::read_to_string(out.join("summary.csv"))?);
    Ok(())
}
