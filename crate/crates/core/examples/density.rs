//! Histogram density estimates of the load and speed gaps of one run.
//!
//! cargo run --release --example density

use edge_alloc::allocator::FusionScheme;
use edge_alloc::experiment::{run_cell, CellSpec, DatasetKind, PipelineConfig};
use edge_alloc::metrics::density_estimate;
use edge_alloc::simulator::{ScenarioConfig, TraceSource};

fn main() -> edge_alloc::Result<()> {
    let pipeline = PipelineConfig::default();
    let cell = CellSpec {
        dataset: DatasetKind::Uniform,
        nodes: 100,
        seed: 0,
    };
    let runs = run_cell(
        &pipeline,
        &ScenarioConfig::default(),
        &TraceSource::Bundled,
        &cell,
        &[FusionScheme::Cs],
        &pipeline.classifier(None)?,
    )?;
    let run = &runs[0];
    for (name, samples) in [("D_l", run.d_l_samples()), ("D_s", run.d_s_samples())] {
        let d = density_estimate(&samples, 10)?;
        println!("{name}: {} samples, integral {:.6}", samples.len(), d.integral());
        for (c, v) in d.centers.iter().zip(&d.densities) {
            println!("  {c:>6.3} {v:>8.3} {}", "#".repeat((v * d.bin_width * 60.0).round() as usize));
        }
    }
    Ok(())
}
