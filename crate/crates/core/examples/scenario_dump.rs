//! Generates a scenario, saves it as JSON and reloads it unchanged.
//!
//! cargo run --example scenario_dump -- [OUT.json]

use edge_alloc::simulator::{generate_scenario, Distribution, Scenario, ScenarioConfig};

fn main() -> edge_alloc::Result<()> {
    let out = std::env::args()
        .nth(1)
        .unwrap_or_else(|| std::env::temp_dir().join("scenario.json").display().to_string());
    let cfg = ScenarioConfig {
        nodes: 5,
        dims: 4,
        queries: 20,
        distribution: Distribution::Gaussian,
        seed: 3,
        ..ScenarioConfig::default()
    };
    let s = generate_scenario(&cfg)?;
    s.save(out.as_ref())?;
    let back = Scenario::load(out.as_ref())?;
    assert_eq!(back, s);
    println!("{out}: {} nodes, {} queries, round trip ok", back.nodes.len(), back.queries.len());
    for n in &back.nodes {
        let mu: Vec<String> = n.digest.means.iter().map(|m| format!("{m:.3}")).collect();
        println!("node {} load {:.2} speed {:.2} means [{}]", n.id, n.load, n.speed, mu.join(", "));
    }
    let q = &back.queries[0];
    println!("query 0 (class {}): {}", back.query_classes[0], q.statement);
    Ok(())
}
