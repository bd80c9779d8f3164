use std::io::{Read, Write};

use crate::error::{Error, Result};
use crate::model::{ContextVector, TrainingTuple};

/// Rows of real features with binary labels.
#[derive(Debug, Clone, PartialEq)]
pub struct LabeledDataset {
    features: Vec<Vec<f64>>,
    labels: Vec<u8>,
    arity: usize,
}

const CONTEXT_HEADER: [&str; 6] = ["o", "a", "r", "l", "s", "label"];

impl LabeledDataset {
    pub fn new(features: Vec<Vec<f64>>, labels: Vec<u8>) -> Result<Self> {
        if features.len() != labels.len() {
            return Err(Error::invalid(format!(
                "{} feature rows but {} labels",
                features.len(),
                labels.len()
            )));
        }
        let arity = features.first().map_or(0, Vec::len);
        if features.iter().any(|r| r.len() != arity) {
            return Err(Error::invalid("feature rows have different arity"));
        }
        if features.iter().flatten().any(|v| !v.is_finite()) {
            return Err(Error::invalid("non-finite feature value"));
        }
        if let Some(bad) = labels.iter().find(|&&l| l > 1) {
            return Err(Error::invalid(format!("label must be 0 or 1, got {bad}")));
        }
        Ok(Self {
            features,
            labels,
            arity,
        })
    }

    pub fn from_tuples(tuples: &[TrainingTuple]) -> Self {
        Self {
            features: tuples.iter().map(|t| t.context.features().to_vec()).collect(),
            labels: tuples.iter().map(|t| t.label).collect(),
            arity: ContextVector::ARITY,
        }
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn arity(&self) -> usize {
        self.arity
    }

    pub fn positives(&self) -> usize {
        self.labels.iter().filter(|&&l| l == 1).count()
    }

    pub fn positive_ratio(&self) -> f64 {
        self.positives() as f64 / self.len().max(1) as f64
    }

    pub fn x(&self, i: usize) -> &[f64] {
        &self.features[i]
    }

    pub fn y(&self, i: usize) -> u8 {
        self.labels[i]
    }

    pub fn labels(&self) -> &[u8] {
        &self.labels
    }

    pub fn rows(&self) -> impl Iterator<Item = (&[f64], u8)> {
        self.features.iter().map(Vec::as_slice).zip(self.labels.iter().copied())
    }

    pub fn subset(&self, indices: &[usize]) -> Self {
        Self {
            features: indices.iter().map(|&i| self.features[i].clone()).collect(),
            labels: indices.iter().map(|&i| self.labels[i]).collect(),
            arity: self.arity,
        }
    }

    /// Writes `o,a,r,l,s,label` CSV. Only valid for context-vector data.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        if self.arity != ContextVector::ARITY {
            return Err(Error::invalid("CSV export expects context-vector rows"));
        }
        let mut w = csv::Writer::from_writer(out);
        let csv_err = |e: csv::Error| Error::Format(e.to_string());
        w.write_record(CONTEXT_HEADER).map_err(csv_err)?;
        for (x, y) in self.rows() {
            let mut rec: Vec<String> = x.iter().map(|v| format!("{v:?}")).collect();
            rec.push(y.to_string());
            w.write_record(&rec).map_err(csv_err)?;
        }
        w.flush().map_err(|e| Error::Format(e.to_string()))
    }

    pub fn read_csv<R: Read>(input: R, origin: &str) -> Result<Self> {
        let mut r = csv::Reader::from_reader(input);
        let header = r
            .headers()
            .map_err(|e| Error::Format(format!("{origin}: {e}")))?
            .clone();
        if header.iter().map(str::trim).ne(CONTEXT_HEADER) {
            return Err(Error::Parse {
                path: origin.into(),
                line: 1,
                message: format!("expected header {}", CONTEXT_HEADER.join(",")),
            });
        }
        let mut features = Vec::new();
        let mut labels = Vec::new();
        for (i, rec) in r.records().enumerate() {
            let line = i + 2;
            let err = |message: String| Error::Parse {
                path: origin.into(),
                line,
                message,
            };
            let rec = rec.map_err(|e| err(e.to_string()))?;
            let vals = rec
                .iter()
                .take(ContextVector::ARITY)
                .map(|f| f.trim().parse::<f64>().map_err(|e| err(format!("{f:?}: {e}"))))
                .collect::<Result<Vec<_>>>()?;
            let label = rec
                .get(ContextVector::ARITY)
                .ok_or_else(|| err("missing label".into()))?
                .trim()
                .parse::<u8>()
                .map_err(|e| err(e.to_string()))?;
            if label > 1 {
                return Err(err(format!("label must be 0 or 1, got {label}")));
            }
            features.push(vals);
            labels.push(label);
        }
        Self::new(features, labels)
    }
}
