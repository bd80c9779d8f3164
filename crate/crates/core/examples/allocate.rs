//! Allocates a few queries with both fusion schemes and prints the
//! per-node ensemble labels, fused labels and vote tallies.
//!
//! cargo run --release --example allocate

use edge_alloc::allocator::{ova_allocate, select_top_k, FusionScheme};
use edge_alloc::experiment::{prepare, PipelineConfig};
use edge_alloc::simulator::{ScenarioConfig, Simulation};

fn main() -> edge_alloc::Result<()> {
    let pipeline = PipelineConfig::default();
    let cfg = ScenarioConfig {
        nodes: 6,
        queries: 3,
        seed: 11,
        ..ScenarioConfig::default()
    };
    let p = prepare(&pipeline, &cfg, pipeline.classifier(None)?)?;
    println!("training set: {}", p.balance);

    let mut sim = Simulation::new(p.scenario.clone())?;
    for (epoch, query) in p.scenario.queries.iter().enumerate() {
        sim.begin_epoch(epoch);
        println!("\nquery {}: {}", query.id, query.statement);
        for scheme in FusionScheme::ALL {
            let d = ova_allocate(query, sim.nodes(), &p.ensembles, scheme, &p.fcp, &cfg.relevance)?;
            println!("  {scheme}: winner {} top-2 {:?} ({:.3} ms)", d.selected, select_top_k(&d, 2)?, d.conclusion_ms);
            for (i, node) in sim.nodes().iter().enumerate() {
                println!(
                    "    node {} load {:.2} speed {:.2} labels {:?} fused {} votes {}",
                    node.id, node.load, node.speed, d.ensemble_labels[i], d.fused[i], d.votes[i]
                );
            }
        }
        sim.commit(&[0], query.id)?;
    }
    Ok(())
}
