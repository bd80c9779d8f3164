//! Synthetic query corpus built from per-class statement templates.
//!
//! Each complexity class has one statement skeleton: plain filtered scans
//! for `O(n)`, grouping and sorting for `O(n log n)`, joins for `O(n^2)`.
//! Skeletons carry a handful of slots (table, columns, constants) filled
//! from small vocabularies, so statements of one class share most tokens
//! while statements of different classes share few.

use rand::seq::IndexedRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::Result;
use crate::fcp::TrainingQueryCorpus;
use crate::model::ComplexityClasses;

const TABLES: [&str; 2] = ["sensors", "readings"];
const MEASURES: [&str; 2] = ["temperature", "humidity"];
const FILTERS: [&str; 2] = ["battery", "signal"];
const CONSTANTS: [&str; 2] = ["10", "50"];

/// Template for class `class` of the default three-class set
/// (`0 = O(n log n)`, `1 = O(n)`, `2 = O(n^2)`).
pub fn generate_statement<R: Rng>(class: usize, rng: &mut R) -> String {
    let t = TABLES.choose(rng).expect("non-empty");
    let m = MEASURES.choose(rng).expect("non-empty");
    let f = FILTERS.choose(rng).expect("non-empty");
    let c = CONSTANTS.choose(rng).expect("non-empty");
    match class % 3 {
        0 => format!(
            "SELECT region, site, device_type, firmware, AVG({m}) AS avg_value, MAX({m}) AS max_value, \
             MIN(quality) AS min_quality, SUM(weight) AS total_weight, COUNT(*) AS n \
             FROM {t} WHERE {f} > {c} AND status = 'active' AND owner <> 'test' \
             GROUP BY region, site, device_type, firmware HAVING COUNT(*) > 1 \
             ORDER BY avg_value DESC, region ASC, site ASC"
        ),
        1 => format!(
            "SELECT device_id, site, region, ts, {m}, quality, firmware, owner, location, weight, status, battery_level \
             FROM {t} WHERE {f} >= {c} AND {m} IS NOT NULL AND quality <> 'bad' \
             AND owner LIKE 'lab%' AND status = 'active' AND location IS NOT NULL \
             AND firmware >= '2.0' LIMIT 1000"
        ),
        _ => format!(
            "SELECT a.device_id, a.ts, a.{m}, b.{m}, c.owner, c.location, c.firmware, d.name, d.team \
             FROM {t} a JOIN {t} b ON a.site = b.site AND a.region = b.region \
             JOIN devices c ON c.device_id = b.device_id AND c.site = a.site \
             JOIN owners d ON d.owner_id = c.owner_id \
             WHERE a.{f} < {c} AND b.ts > a.ts AND c.active = 1 AND d.region = a.region \
             AND d.team IS NOT NULL"
        ),
    }
}

/// `per_class` statements per class, reproducible from `seed`.
pub fn generate_corpus(classes: &ComplexityClasses, per_class: usize, seed: u64) -> Result<TrainingQueryCorpus> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut entries = Vec::with_capacity(per_class * classes.len());
    for k in 0..per_class {
        for class in 0..classes.len() {
            let _ = k;
            entries.push((generate_statement(class, &mut rng), class));
        }
    }
    TrainingQueryCorpus::new(classes, entries)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fcp::{FcpParams, FuzzyClassifier};

    #[test]
    fn corpus_is_reproducible_and_complete() {
        let classes = ComplexityClasses::default();
        let a = generate_corpus(&classes, 30, 7).unwrap();
        assert_eq!(a, generate_corpus(&classes, 30, 7).unwrap());
        assert_eq!(a.len(), 90);
        assert_ne!(a, generate_corpus(&classes, 30, 8).unwrap());
    }

    #[test]
    fn statements_classify_to_their_template() {
        let classes = ComplexityClasses::default();
        let corpus = generate_corpus(&classes, 30, 1).unwrap();
        let clf = FuzzyClassifier::new(classes, corpus, FcpParams::default()).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(99);
        for class in 0..3 {
            let s = generate_statement(class, &mut rng);
            assert_eq!(clf.classify(&s).unwrap().best().0, class);
        }
    }
}
