//! A reduced benchmark sweep: both schemes over every dataset for a few
//! network sizes, written as per-run and summary CSV files.
//!
//! cargo run --release --example bench_sweep -- [OUT_DIR]

use edge_alloc::allocator::FusionScheme;
use edge_alloc::experiment::{run_cell, CellSpec, DatasetKind, PipelineConfig};
use edge_alloc::metrics::{emit_results, summarize};
use edge_alloc::simulator::{ScenarioConfig, TraceSource};

fn main() -> edge_alloc::Result<()> {
    let out = std::env::args()
        .nth(1)
        .unwrap_or_else(|| std::env::temp_dir().join("edge-alloc-sweep").display().to_string());
    let pipeline = PipelineConfig::default();
    let fcp = pipeline.classifier(None)?;
    let base = ScenarioConfig {
        queries: 300,
        ..ScenarioConfig::default()
    };
    let mut results = Vec::new();
    for dataset in DatasetKind::ALL {
        for nodes in [10, 50, 100] {
            for seed in 0..3 {
                let cell = CellSpec { dataset, nodes, seed };
                results.extend(run_cell(&pipeline, &base, &TraceSource::Bundled, &cell, &FusionScheme::ALL, &fcp)?);
            }
        }
    }
    emit_results(&results, out.as_ref())?;

    let metrics: Vec<_> = results
        .iter()
        .map(|r| Ok((r.descriptor.clone(), r.metrics()?)))
        .collect::<edge_alloc::Result<_>>()?;
    println!("{:<4} {:>4} {:<9} {:>7} {:>7} {:>9}", "", "N", "dataset", "D_l", "D_s", "R per ms");
    for c in summarize(&metrics) {
        let (scheme, n, dataset, ..) = &c.key;
        let m = |k| c.mean(k).unwrap_or(f64::NAN);
        println!("{scheme:<4} {n:>4} {dataset:<9} {:>7.4} {:>7.4} {:>9.2}", m("d_l"), m("d_s"), m("throughput"));
    }
    println!("tables in {out}");
    Ok(())
}
