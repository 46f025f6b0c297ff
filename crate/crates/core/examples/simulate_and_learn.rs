//! The command-line pipeline driven in-process: simulate, discover, evaluate.

fn main() {
    let dir = std::env::temp_dir().join("extail-pipeline");
    let d = |name: &str| dir.join(name).to_string_lossy().into_owned();
    let steps: Vec<Vec<String>> = vec![
        vec!["simulate", "--model", "xscm", "--p", "6", "--phi", "0.5", "--n", "20000", "--seed", "7", "--out", &d("sim")],
        vec!["discover", &d("sim/data.csv"), "--out", &d("disc")],
        vec!["evaluate", &d("sim/spec.json"), &d("disc/graph.json")],
    ]
    .into_iter()
    .map(|v| v.into_iter().map(String::from).collect())
    .collect();
    for step in steps {
        let code = extail::cli::run(std::iter::once("extail".to_string()).chain(step.clone()));
        println!("{} → exit {code}", step[0]);
    }
    println!("{}", std::fs::read_to_string(dir.join("disc/graph.dot")).unwrap_or_default());
}
