//! Synthesizes a processor-utilization trace, writes it as CSV, reads it
//! back through the trace ingester and shows how it is dealt to nodes.
//!
//! cargo run --example utilization_trace -- [OUT.csv]

use edge_alloc::simulator::trace::{
    synthesize_utilization_trace, utilization_trace_csv, BUNDLED_COLUMN, BUNDLED_CORES, BUNDLED_LEN, BUNDLED_SEED,
};
use edge_alloc::simulator::LoadTrace;

fn main() -> edge_alloc::Result<()> {
    let out = std::env::args()
        .nth(1)
        .unwrap_or_else(|| std::env::temp_dir().join("utilization_trace.csv").display().to_string());
    let values = synthesize_utilization_trace(BUNDLED_LEN, BUNDLED_CORES, BUNDLED_SEED);
    std::fs::write(&out, utilization_trace_csv(&values, BUNDLED_CORES)).map_err(|e| edge_alloc::Error::io(&out, e))?;

    let trace = LoadTrace::load(out.as_ref(), BUNDLED_COLUMN)?;
    let mean = trace.values().iter().sum::<f64>() / trace.len() as f64;
    println!("{out}: {} samples, mean load {mean:.3}", trace.len());

    let nodes = 4;
    for node in 0..nodes {
        let first: Vec<String> = (0..6).map(|e| format!("{:.2}", trace.load_at(node, nodes, e))).collect();
        println!("node {node}: {}", first.join(" "));
    }
    Ok(())
}
