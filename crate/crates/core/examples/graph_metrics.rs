//! Separation queries, CPDAGs and edit distances on small graphs.

use extail::graph::{cpdag_of, d_separated, ned, ned_star, u_separated, uned, Cpdag, Dag, GraphJson, UndirectedGraph};

fn main() -> extail::Result<()> {
    let dag = Dag::new(4, [(0, 2), (1, 2), (2, 3)])?;
    println!("0 ⫫ 1 | ∅: {}", d_separated(&dag, 0, 1, &[]));
    println!("0 ⫫ 1 | {{3}}: {}", d_separated(&dag, 0, 1, &[3]));
    let cpdag = cpdag_of(&dag);
    println!("CPDAG directed {:?}, undirected {:?}", cpdag.directed(), cpdag.undirected());

    let est = Cpdag::new(4, [(0, 2)], [(1, 2), (0, 3)])?;
    let set = est.as_edge_set();
    println!(
        "NED {:.3}, UNED {:.3}, NED* {:.3}",
        ned(dag.edges(), &set),
        uned(dag.edges(), &set),
        ned_star(&dag, &est)
    );

    let ug = UndirectedGraph::new(4, [(0, 1), (1, 2), (2, 3)])?;
    println!("0 ⫫ 3 | {{2}} in the path graph: {}", u_separated(&ug, 0, 3, &[2]));

    let json = GraphJson::from(&est);
    println!("{}", json.to_json_string());
    Ok(())
}
