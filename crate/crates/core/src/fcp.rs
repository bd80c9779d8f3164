//! Fuzzy classification of query complexity.
//!
//! A query statement is compared with every statement of a labeled corpus.
//! For each corpus tuple several similarity metrics are computed; each
//! metric value receives a significance level (a sigmoid of how many other
//! metric values lie within radius `γ` of it), the top-`n` values by
//! significance are fused with the Hamacher product, and the per-tuple
//! results of each class are averaged with a quasi-arithmetic mean. The
//! resulting vector holds one membership degree per complexity class.

use std::cmp::Ordering;
use std::collections::BTreeMap;
use std::fmt;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::aggregate::{self, hamacher, power_mean_unchecked};
use crate::error::{Error, Result};
use crate::model::ComplexityClasses;

/// Token multiset of a statement, sorted by token.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TokenFeature {
    counts: Vec<(String, u32)>,
}

impl TokenFeature {
    pub fn count(&self, token: &str) -> u32 {
        self.counts
            .binary_search_by(|(t, _)| t.as_str().cmp(token))
            .map(|i| self.counts[i].1)
            .unwrap_or(0)
    }

    pub fn distinct(&self) -> usize {
        self.counts.len()
    }

    pub fn total(&self) -> u32 {
        self.counts.iter().map(|(_, c)| c).sum()
    }

    pub fn tokens(&self) -> impl Iterator<Item = (&str, u32)> {
        self.counts.iter().map(|(t, c)| (t.as_str(), *c))
    }
}

/// Case-folds and splits a statement into tokens.
///
/// Alphanumeric runs (with `_` and `.`) form word tokens; runs of comparison
/// and arithmetic symbols (`< > = ! * + - /`) form operator tokens. Other
/// punctuation and whitespace separate tokens and are dropped.
pub fn tokenize_statement(statement: &str) -> Result<TokenFeature> {
    if statement.trim().is_empty() {
        return Err(Error::invalid("cannot tokenize an empty statement"));
    }
    #[derive(PartialEq, Clone, Copy)]
    enum Kind {
        Word,
        Op,
        Sep,
    }
    let kind = |c: char| {
        if c.is_alphanumeric() || c == '_' || c == '.' {
            Kind::Word
        } else if "<>=!*+-/".contains(c) {
            Kind::Op
        } else {
            Kind::Sep
        }
    };
    let mut counts: BTreeMap<String, u32> = BTreeMap::new();
    let mut current = String::new();
    let mut current_kind = Kind::Sep;
    for c in statement.chars().flat_map(char::to_lowercase) {
        let k = kind(c);
        if k != current_kind && !current.is_empty() {
            *counts.entry(std::mem::take(&mut current)).or_default() += 1;
        }
        if k != Kind::Sep {
            current.push(c);
        }
        current_kind = k;
    }
    if !current.is_empty() {
        *counts.entry(current).or_default() += 1;
    }
    if counts.is_empty() {
        return Err(Error::invalid(format!("statement {statement:?} has no tokens")));
    }
    Ok(TokenFeature {
        counts: counts.into_iter().collect(),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SimilarityKind {
    Hamming,
    Jaccard,
    Cosine,
}

impl SimilarityKind {
    pub const ALL: [SimilarityKind; 3] = [SimilarityKind::Hamming, SimilarityKind::Jaccard, SimilarityKind::Cosine];
}

impl fmt::Display for SimilarityKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            SimilarityKind::Hamming => "hamming",
            SimilarityKind::Jaccard => "jaccard",
            SimilarityKind::Cosine => "cosine",
        })
    }
}

/// Set/count statistics over the shared vocabulary of two features.
struct Overlap {
    shared: usize,
    union: usize,
    dot: f64,
    norm_x: f64,
    norm_y: f64,
}

fn overlap(x: &TokenFeature, y: &TokenFeature) -> Overlap {
    let (mut i, mut j) = (0, 0);
    let (a, b) = (&x.counts, &y.counts);
    let mut o = Overlap {
        shared: 0,
        union: 0,
        dot: 0.0,
        norm_x: 0.0,
        norm_y: 0.0,
    };
    while i < a.len() || j < b.len() {
        let ord = match (a.get(i), b.get(j)) {
            (Some(p), Some(q)) => p.0.cmp(&q.0),
            (Some(_), None) => Ordering::Less,
            _ => Ordering::Greater,
        };
        o.union += 1;
        match ord {
            Ordering::Equal => {
                let (cx, cy) = (a[i].1 as f64, b[j].1 as f64);
                o.shared += 1;
                o.dot += cx * cy;
                o.norm_x += cx * cx;
                o.norm_y += cy * cy;
                i += 1;
                j += 1;
            }
            Ordering::Less => {
                o.norm_x += (a[i].1 as f64).powi(2);
                i += 1;
            }
            Ordering::Greater => {
                o.norm_y += (b[j].1 as f64).powi(2);
                j += 1;
            }
        }
    }
    o
}

/// Similarity in `[0, 1]`; 1 means identical token content.
///
/// Hamming compares binary presence vectors over the union vocabulary; the
/// mismatch count is normalized by the vocabulary size and mapped through
/// [`distance_to_similarity`]. Jaccard uses token sets, cosine uses term
/// counts.
pub fn similarity_metric(kind: SimilarityKind, x: &TokenFeature, y: &TokenFeature) -> f64 {
    let o = overlap(x, y);
    similarity_from_overlap(kind, &o)
}

fn similarity_from_overlap(kind: SimilarityKind, o: &Overlap) -> f64 {
    match kind {
        SimilarityKind::Hamming => {
            let d = (o.union - o.shared) as f64 / o.union as f64;
            1.0 / (1.0 + d)
        }
        SimilarityKind::Jaccard => o.shared as f64 / o.union as f64,
        SimilarityKind::Cosine => (o.dot / (o.norm_x.sqrt() * o.norm_y.sqrt())).clamp(0.0, 1.0),
    }
}

/// `1 / (1 + d)` for a non-negative distance.
pub fn distance_to_similarity(d: f64) -> Result<f64> {
    if !(d >= 0.0) {
        return Err(Error::invalid(format!("distance must be >= 0, got {d}")));
    }
    Ok(1.0 / (1.0 + d))
}

/// `SL_i = sigmoid(δ1·c_i − δ2)` where `c_i` counts the values within `γ`
/// of value `i`, itself included.
pub fn significance_levels(values: &[f64], gamma: f64, delta1: f64, delta2: f64) -> Result<Vec<f64>> {
    if values.is_empty() {
        return Err(Error::invalid("significance levels of an empty list"));
    }
    Ok(values
        .iter()
        .map(|v| {
            let c = values.iter().filter(|u| (*u - v).abs() <= gamma).count() as f64;
            aggregate::sigmoid(delta1 * c - delta2)
        })
        .collect())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FcpParams {
    /// Neighborhood radius for significance levels.
    pub gamma: f64,
    pub delta1: f64,
    pub delta2: f64,
    /// How many metric values (ranked by significance) enter the Hamacher fold.
    pub n_top: usize,
    /// Hamacher parameter.
    pub hamacher: f64,
    /// Quasi-arithmetic exponent across the tuples of a class.
    pub alpha: f64,
    /// Minimum membership for a class to be accepted.
    pub threshold: f64,
    pub metrics: Vec<SimilarityKind>,
}

impl Default for FcpParams {
    fn default() -> Self {
        Self {
            gamma: 0.1,
            delta1: 1.0,
            delta2: 1.0,
            n_top: 2,
            hamacher: 1.0,
            alpha: 1.0,
            threshold: 0.8,
            metrics: SimilarityKind::ALL.to_vec(),
        }
    }
}

impl FcpParams {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::invalid(format!("fcp parameters: {m}")));
        if !(self.gamma > 0.0) {
            return bad("gamma must be > 0");
        }
        if self.n_top == 0 {
            return bad("n_top must be >= 1");
        }
        if !(self.hamacher >= 0.0) || !self.hamacher.is_finite() {
            return bad("hamacher parameter must be >= 0");
        }
        if self.alpha == 0.0 || !self.alpha.is_finite() {
            return bad("alpha must be non-zero");
        }
        if !(self.threshold > 0.0 && self.threshold <= 1.0) {
            return bad("threshold must lie in (0, 1]");
        }
        if self.metrics.is_empty() {
            return bad("at least one similarity metric is required");
        }
        if !(self.delta1.is_finite() && self.delta2.is_finite()) {
            return bad("delta1 and delta2 must be finite");
        }
        Ok(())
    }
}

/// Fused similarity `ω` between a query and one corpus statement.
pub fn per_tuple_similarity(q: &TokenFeature, p: &TokenFeature, params: &FcpParams) -> Result<f64> {
    params.validate()?;
    Ok(omega(q, p, params))
}

fn omega(q: &TokenFeature, p: &TokenFeature, params: &FcpParams) -> f64 {
    let o = overlap(q, p);
    let values: Vec<f64> = params.metrics.iter().map(|&k| similarity_from_overlap(k, &o)).collect();
    fuse_metric_values(&values, params)
}

/// SL-ranked top-`n` selection followed by the Hamacher fold.
///
/// Ranking is by significance descending, then value descending, then metric
/// position, so the fold order is deterministic.
pub fn fuse_metric_values(values: &[f64], params: &FcpParams) -> f64 {
    let sl = significance_levels(values, params.gamma, params.delta1, params.delta2).expect("non-empty metric list");
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&a, &b| {
        sl[b]
            .total_cmp(&sl[a])
            .then(values[b].total_cmp(&values[a]))
            .then(a.cmp(&b))
    });
    let keep = params.n_top.min(values.len());
    order[1..keep]
        .iter()
        .fold(values[order[0]], |acc, &i| hamacher(acc, values[i], params.hamacher))
}

/// Labeled statements `⟨p_k, θ_k⟩`.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainingQueryCorpus {
    entries: Vec<(String, usize)>,
}

impl TrainingQueryCorpus {
    /// Every class of `classes` needs at least one statement.
    pub fn new(classes: &ComplexityClasses, entries: Vec<(String, usize)>) -> Result<Self> {
        let mut per_class = vec![0usize; classes.len()];
        for (stmt, class) in &entries {
            if *class >= classes.len() {
                return Err(Error::Corpus(format!("class id {class} outside the class set")));
            }
            if stmt.trim().is_empty() {
                return Err(Error::Corpus("empty statement".into()));
            }
            per_class[*class] += 1;
        }
        if let Some(missing) = per_class.iter().position(|&c| c == 0) {
            return Err(Error::Corpus(format!(
                "class {:?} has no corpus statements",
                classes.get(missing).map(|c| c.label.as_str()).unwrap_or("?")
            )));
        }
        Ok(Self { entries })
    }

    pub fn entries(&self) -> &[(String, usize)] {
        &self.entries
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Reads `statement<TAB>class_label` lines. Blank lines and lines
    /// starting with `#` are skipped.
    pub fn load(path: &Path, classes: &ComplexityClasses) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse(&text, &path.display().to_string(), classes)
    }

    pub fn parse(text: &str, origin: &str, classes: &ComplexityClasses) -> Result<Self> {
        let mut entries = Vec::new();
        for (i, line) in text.lines().enumerate() {
            if line.trim().is_empty() || line.starts_with('#') {
                continue;
            }
            let err = |message: String| Error::Parse {
                path: origin.to_string(),
                line: i + 1,
                message,
            };
            let (stmt, label) = line
                .rsplit_once('\t')
                .ok_or_else(|| err("expected statement<TAB>class_label".into()))?;
            let class = classes
                .by_label(label.trim())
                .ok_or_else(|| err(format!("unknown class label {:?}", label.trim())))?;
            entries.push((stmt.to_string(), class.id));
        }
        Self::new(classes, entries)
    }

    pub fn to_tsv(&self, classes: &ComplexityClasses) -> String {
        let mut out = String::new();
        for (stmt, class) in &self.entries {
            out.push_str(stmt);
            out.push('\t');
            out.push_str(&classes.get(*class).expect("validated class id").label);
            out.push('\n');
        }
        out
    }
}

/// Membership degrees over the class set.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComplexityVector(pub Vec<f64>);

#[derive(Debug, Clone, PartialEq)]
pub struct Classification {
    pub memberships: ComplexityVector,
    /// Winning class, if its membership reaches the threshold.
    pub resolved: Option<usize>,
}

impl Classification {
    /// Argmax class; ties go to the lowest index.
    pub fn best(&self) -> (usize, f64) {
        self.memberships
            .0
            .iter()
            .copied()
            .enumerate()
            .fold((0, f64::NEG_INFINITY), |best, (i, v)| if v > best.1 { (i, v) } else { best })
    }

    /// Scalar complexity feature: winning membership scaled by
    /// `(class_index + 1) / |Θ|`.
    pub fn complexity_scalar(&self) -> f64 {
        let (idx, m) = self.best();
        m * (idx + 1) as f64 / self.memberships.0.len() as f64
    }
}

/// A trained classifier: the class set, the tokenized corpus and parameters.
#[derive(Debug, Clone)]
pub struct FuzzyClassifier {
    classes: ComplexityClasses,
    corpus: Vec<(TokenFeature, usize)>,
    params: FcpParams,
}

impl FuzzyClassifier {
    pub fn new(classes: ComplexityClasses, corpus: TrainingQueryCorpus, params: FcpParams) -> Result<Self> {
        params.validate()?;
        let corpus = corpus
            .entries
            .iter()
            .map(|(s, c)| Ok((tokenize_statement(s)?, *c)))
            .collect::<Result<Vec<_>>>()?;
        Ok(Self {
            classes,
            corpus,
            params,
        })
    }

    pub fn classes(&self) -> &ComplexityClasses {
        &self.classes
    }

    pub fn params(&self) -> &FcpParams {
        &self.params
    }

    pub fn corpus_len(&self) -> usize {
        self.corpus.len()
    }

    pub fn classify(&self, statement: &str) -> Result<Classification> {
        self.classify_feature(&tokenize_statement(statement)?, None)
    }

    /// Classifies against the corpus with entry `exclude` left out, as used
    /// for leave-one-out evaluation.
    pub fn classify_feature(&self, q: &TokenFeature, exclude: Option<usize>) -> Result<Classification> {
        let mut omegas: Vec<Vec<f64>> = vec![Vec::new(); self.classes.len()];
        for (k, (p, class)) in self.corpus.iter().enumerate() {
            if Some(k) == exclude {
                continue;
            }
            omegas[*class].push(omega(q, p, &self.params));
        }
        let memberships = omegas
            .iter()
            .enumerate()
            .map(|(c, w)| {
                if w.is_empty() {
                    Err(Error::Corpus(format!("class {c} has no corpus statements")))
                } else {
                    Ok(power_mean_unchecked(w, self.params.alpha).clamp(0.0, 1.0))
                }
            })
            .collect::<Result<Vec<_>>>()?;
        let mut out = Classification {
            memberships: ComplexityVector(memberships),
            resolved: None,
        };
        let (idx, m) = out.best();
        if m >= self.params.threshold {
            out.resolved = Some(idx);
        }
        Ok(out)
    }

    /// Leave-one-out predictions `(predicted, true)` over the whole corpus.
    pub fn leave_one_out(&self) -> Result<Vec<(Option<usize>, usize)>> {
        self.corpus
            .iter()
            .enumerate()
            .map(|(k, (p, class))| Ok((self.classify_feature(p, Some(k))?.resolved, *class)))
            .collect()
    }
}

/// Free-function form: classify `statement` against `corpus`.
pub fn classify_complexity(
    statement: &str,
    classes: &ComplexityClasses,
    corpus: &TrainingQueryCorpus,
    params: &FcpParams,
) -> Result<Classification> {
    FuzzyClassifier::new(classes.clone(), corpus.clone(), params.clone())?.classify(statement)
}

impl FromStr for SimilarityKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "hamming" => Ok(Self::Hamming),
            "jaccard" => Ok(Self::Jaccard),
            "cosine" => Ok(Self::Cosine),
            other => Err(Error::invalid(format!("unknown similarity metric {other:?}"))),
        }
    }
}
