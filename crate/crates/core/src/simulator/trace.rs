//! Processor-utilization traces replayed as node loads.
//!
//! A trace is one column of a delimited file with a header row. Values are
//! fractions in `[0, 1]` or percentages in `[0, 100]`; if any value exceeds
//! 1 the whole column is read as percent. The series is dealt round-robin to
//! the nodes, and node `j` replays its share cyclically, one value per
//! decision epoch.

use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution as _, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Name of the utilization column in the bundled trace.
pub const BUNDLED_COLUMN: &str = "cpu_util";

/// Multi-core processor utilization samples, percent, one row per core and
/// sampling tick. Produced by [`synthesize_utilization_trace`] with
/// `BUNDLED_LEN` rows, `BUNDLED_CORES` cores and seed `BUNDLED_SEED`.
pub const BUNDLED_TRACE: &str = include_str!("../../data/utilization_trace.csv");
pub const BUNDLED_LEN: usize = 20_000;
pub const BUNDLED_SEED: u64 = 2024;
pub const BUNDLED_CORES: usize = 16;

/// Where the utilization series comes from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum TraceSource {
    Bundled,
    File { path: String, column: String },
}

impl TraceSource {
    pub fn load(&self) -> Result<LoadTrace> {
        match self {
            TraceSource::Bundled => LoadTrace::parse(BUNDLED_TRACE, BUNDLED_COLUMN, "bundled trace"),
            TraceSource::File { path, column } => LoadTrace::load(Path::new(path), column),
        }
    }
}

/// A normalized utilization series.
#[derive(Debug, Clone, PartialEq)]
pub struct LoadTrace {
    values: Vec<f64>,
}

fn delimiter_of(header: &str) -> u8 {
    for d in *b",\t;" {
        if header.as_bytes().contains(&d) {
            return d;
        }
    }
    b','
}

impl LoadTrace {
    /// From fractions or percentages (see the module docs).
    pub fn from_values(raw: Vec<f64>) -> Result<Self> {
        if raw.is_empty() {
            return Err(Error::invalid("utilization trace is empty"));
        }
        if let Some(v) = raw.iter().find(|v| !(0.0..=100.0).contains(*v)) {
            return Err(Error::invalid(format!("utilization value {v} outside [0, 100]")));
        }
        let percent = raw.iter().any(|&v| v > 1.0);
        let values = if percent { raw.iter().map(|v| v / 100.0).collect() } else { raw };
        Ok(Self { values })
    }

    pub fn load(path: &Path, column: &str) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse(&text, column, &path.display().to_string())
    }

    /// Parses `column` out of delimited `text`. Comma, tab and semicolon
    /// delimiters are recognized from the header line.
    pub fn parse(text: &str, column: &str, origin: &str) -> Result<Self> {
        let header = text.lines().next().unwrap_or("");
        let mut rdr = csv::ReaderBuilder::new()
            .delimiter(delimiter_of(header))
            .trim(csv::Trim::All)
            .from_reader(text.as_bytes());
        let headers = rdr.headers().map_err(|e| Error::Parse {
            path: origin.into(),
            line: 1,
            message: e.to_string(),
        })?;
        let col = headers.iter().position(|h| h == column).ok_or_else(|| Error::Parse {
            path: origin.into(),
            line: 1,
            message: format!("no column named {column:?}"),
        })?;
        let mut raw = Vec::new();
        for rec in rdr.records() {
            let rec = rec.map_err(|e| Error::Parse {
                path: origin.into(),
                line: e.position().map_or(0, |p| p.line() as usize),
                message: e.to_string(),
            })?;
            let line = rec.position().map_or(0, |p| p.line() as usize);
            let err = |message: String| Error::Parse {
                path: origin.into(),
                line,
                message,
            };
            let field = rec.get(col).ok_or_else(|| err(format!("missing field {column:?}")))?;
            let v: f64 = field.parse().map_err(|_| err(format!("unparsable utilization {field:?}")))?;
            if !(0.0..=100.0).contains(&v) {
                return Err(err(format!("utilization {v} outside [0, 100]")));
            }
            raw.push(v);
        }
        Self::from_values(raw).map_err(|e| match e {
            Error::InvalidInput(m) => Error::Parse {
                path: origin.into(),
                line: 1,
                message: m,
            },
            other => other,
        })
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Round-robin split: node `j` gets values `j, j + n, j + 2n, ...`.
    pub fn partition(&self, n: usize) -> Result<Vec<Vec<f64>>> {
        if n == 0 || n > self.values.len() {
            return Err(Error::invalid(format!(
                "cannot deal {} trace values to {n} nodes",
                self.values.len()
            )));
        }
        let mut parts = vec![Vec::with_capacity(self.values.len() / n + 1); n];
        for (i, &v) in self.values.iter().enumerate() {
            parts[i % n].push(v);
        }
        Ok(parts)
    }

    /// Load of node `node` (of `n`) at `epoch`, wrapping cyclically.
    pub fn load_at(&self, node: usize, n: usize, epoch: usize) -> f64 {
        let share = (self.values.len() - node).div_ceil(n);
        self.values[node + n * (epoch % share)]
    }

    /// A uniformly chosen value, for training-set sampling.
    pub fn sample<R: Rng>(&self, rng: &mut R) -> f64 {
        self.values[rng.random_range(0..self.values.len())]
    }
}

/// Percent utilization of a pool of cores sampled at a fixed tick.
///
/// Consecutive rows are neighboring cores at one tick. All cores share a
/// slowly drifting machine-level demand; each core adds a smaller AR(1)
/// deviation of its own.
pub fn synthesize_utilization_trace(len: usize, cores: usize, seed: u64) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let shock = Normal::new(0.0, 1.0).expect("unit normal");
    let cores = cores.max(1);
    let mut demand: f64 = 50.0;
    let mut own = vec![0.0f64; cores];
    let mut out = Vec::with_capacity(len);
    while out.len() < len {
        demand = (50.0 + 0.97 * (demand - 50.0) + 4.0 * shock.sample(&mut rng)).clamp(5.0, 95.0);
        for dev in own.iter_mut() {
            *dev = 0.8 * *dev + 8.0 * shock.sample(&mut rng);
            if out.len() < len {
                let v: f64 = (demand + *dev).clamp(0.0, 100.0);
                out.push((v * 100.0).round() / 100.0);
            }
        }
    }
    out
}

/// CSV text of a synthesized trace with `tick,core,cpu_util` columns.
pub fn utilization_trace_csv(values: &[f64], cores: usize) -> String {
    let mut s = format!("tick,core,{BUNDLED_COLUMN}\n");
    for (i, v) in values.iter().enumerate() {
        s.push_str(&format!("{},{},{v:.2}\n", i / cores, i % cores));
    }
    s
}
