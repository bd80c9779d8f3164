//! Classifies SQL statements into complexity classes with the fuzzy
//! classification process and reports leave-one-out accuracy.
//!
//! cargo run --example fcp_classify -- ["SELECT ..."]

use edge_alloc::fcp::{FcpParams, FuzzyClassifier};
use edge_alloc::model::ComplexityClasses;
use edge_alloc::simulator::corpus::{generate_corpus, generate_statement};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn main() -> edge_alloc::Result<()> {
    let classes = ComplexityClasses::default();
    let corpus = generate_corpus(&classes, 30, 0)?;
    println!("corpus: {} statements over {} classes", corpus.len(), classes.len());

    // Fresh statements from each class template, unseen by the corpus.
    let mut rng = ChaCha8Rng::seed_from_u64(99);
    let mut statements: Vec<String> = (0..classes.len()).map(|c| generate_statement(c, &mut rng)).collect();
    statements.extend(std::env::args().skip(1));

    let clf = FuzzyClassifier::new(classes.clone(), corpus.clone(), FcpParams::default())?;
    for s in &statements {
        let c = clf.classify(s)?;
        let label = c.resolved.and_then(|i| classes.get(i)).map_or("unresolved", |k| k.label.as_str());
        let m: Vec<String> = c.memberships.0.iter().map(|v| format!("{v:.3}")).collect();
        println!("[{}] -> {label} (o = {:.3})\n  {s}", m.join(", "), c.complexity_scalar());
    }

    for threshold in [0.7, 0.8, 0.85, 0.9] {
        let clf = FuzzyClassifier::new(classes.clone(), corpus.clone(), FcpParams { threshold, ..FcpParams::default() })?;
        let loo = clf.leave_one_out()?;
        let hits = loo.iter().filter(|(p, t)| *p == Some(*t)).count();
        println!("threshold {threshold}: leave-one-out upsilon {:.3}", hits as f64 / loo.len() as f64);
    }
    Ok(())
}
