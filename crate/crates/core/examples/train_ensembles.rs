//! Synthesizes a labeled training set from a scenario, trains AdaBoost,
//! Stacking and Bagging, and scores them on a held-out split.
//!
//! cargo run --release --example train_ensembles -- [MODEL_DIR]

use edge_alloc::experiment::PipelineConfig;
use edge_alloc::learners::{accuracy, stratified_split, EnsembleSuite, ModelFile};
use edge_alloc::simulator::{generate_scenario, synthesize_training_set, LabelingPolicy, ScenarioConfig};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn main() -> edge_alloc::Result<()> {
    let pipeline = PipelineConfig::default();
    let fcp = pipeline.classifier(None)?;
    let scenario = generate_scenario(&ScenarioConfig::default())?;
    let (td, balance) = synthesize_training_set(&scenario, &fcp, &LabelingPolicy::default(), 3000)?;
    println!("training set: {balance}");

    let (fit, hold) = stratified_split(td.labels(), 0.8, &mut ChaCha8Rng::seed_from_u64(1))?;
    let (fit, hold) = (td.subset(&fit), td.subset(&hold));
    let baseline = hold.positive_ratio().max(1.0 - hold.positive_ratio());
    let suite = EnsembleSuite::default().train(&fit, 7)?;
    for (name, model) in ["adaboost", "stacking", "bagging"].iter().zip(suite.members()) {
        println!("{name:<9} held-out accuracy {:.3} (majority {baseline:.3})", accuracy(model, &hold));
    }

    if let Some(dir) = std::env::args().nth(1) {
        std::fs::create_dir_all(&dir).map_err(|e| edge_alloc::Error::io(&dir, e))?;
        for (name, model) in ["adaboost", "stacking", "bagging"].iter().zip(suite.members()) {
            let path = std::path::Path::new(&dir).join(format!("model_{name}.json"));
            ModelFile::new(model.clone()).save(&path)?;
            println!("wrote {}", path.display());
        }
    }
    Ok(())
}
