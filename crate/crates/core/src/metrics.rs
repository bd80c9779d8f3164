//! Evaluation metrics over allocation runs and their CSV output.
//!
//! * `υ`: fraction of queries whose complexity class was predicted right.
//! * `R`: queries decided per millisecond of decision time.
//! * `D_l = l* - l_min`: load of the chosen node above the least loaded one.
//! * `D_s = s_max - s*`: speed of the fastest node above the chosen one.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::allocator::{AllocationDecision, FusionScheme};
use crate::error::{Error, Result};
use crate::model::NodeState;

/// One decision as seen against the node snapshot it was made on.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecisionRecord {
    pub query_id: u64,
    pub conclusion_ms: f64,
    pub selected: usize,
    pub load_selected: f64,
    pub speed_selected: f64,
    pub load_min: f64,
    pub speed_max: f64,
    pub load_mean: f64,
    pub predicted_class: usize,
    pub true_class: usize,
}

impl DecisionRecord {
    pub fn new(
        decision: &AllocationDecision,
        nodes: &[NodeState],
        predicted_class: usize,
        true_class: usize,
    ) -> Result<Self> {
        let chosen = nodes
            .iter()
            .find(|n| n.id == decision.selected)
            .ok_or_else(|| Error::invalid(format!("selected node {} not in snapshot", decision.selected)))?;
        let load_min = nodes.iter().map(|n| n.load).fold(f64::INFINITY, f64::min);
        let speed_max = nodes.iter().map(|n| n.speed).fold(f64::NEG_INFINITY, f64::max);
        let load_mean = nodes.iter().map(|n| n.load).sum::<f64>() / nodes.len() as f64;
        Ok(Self {
            query_id: decision.query_id,
            conclusion_ms: decision.conclusion_ms,
            selected: chosen.id,
            load_selected: chosen.load,
            speed_selected: chosen.speed,
            load_min,
            speed_max,
            load_mean,
            predicted_class,
            true_class,
        })
    }
}

/// `υ = correct / total` over `(predicted, true)` pairs.
pub fn accuracy_upsilon(predictions: &[(usize, usize)]) -> Result<f64> {
    if predictions.is_empty() {
        return Err(Error::invalid("no predictions"));
    }
    let correct = predictions.iter().filter(|(p, t)| p == t).count();
    Ok(correct as f64 / predictions.len() as f64)
}

/// `R = |Q| / Σ T^c`, in queries per millisecond.
pub fn throughput_r(conclusion_times_ms: &[f64]) -> Result<f64> {
    if conclusion_times_ms.is_empty() {
        return Err(Error::invalid("no conclusion times"));
    }
    if let Some(t) = conclusion_times_ms.iter().find(|t| !(**t >= 0.0) || !t.is_finite()) {
        return Err(Error::invalid(format!("conclusion time {t} is not a finite non-negative value")));
    }
    let total: f64 = conclusion_times_ms.iter().sum();
    if total <= 0.0 {
        return Err(Error::invalid("total conclusion time is zero"));
    }
    Ok(conclusion_times_ms.len() as f64 / total)
}

/// `(D_l, D_s)` of one record.
pub fn distance_metrics(record: &DecisionRecord) -> (f64, f64) {
    (
        record.load_selected - record.load_min,
        record.speed_max - record.speed_selected,
    )
}

#[derive(Debug, Clone, PartialEq)]
pub struct Density {
    pub centers: Vec<f64>,
    pub densities: Vec<f64>,
    pub bin_width: f64,
}

impl Density {
    /// `Σ density · width`.
    pub fn integral(&self) -> f64 {
        self.densities.iter().sum::<f64>() * self.bin_width
    }
}

pub const DEFAULT_BINS: usize = 50;

/// Histogram density over `[min, max]` with `bins` equal bins (the last
/// one closed). Constant samples give one unit-width bin of density 1.
pub fn density_estimate(samples: &[f64], bins: usize) -> Result<Density> {
    if samples.len() < 2 {
        return Err(Error::invalid("density estimate needs at least 2 samples"));
    }
    if bins == 0 {
        return Err(Error::invalid("bins must be >= 1"));
    }
    if samples.iter().any(|v| !v.is_finite()) {
        return Err(Error::invalid("non-finite sample"));
    }
    let lo = samples.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = samples.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if lo == hi {
        return Ok(Density {
            centers: vec![lo],
            densities: vec![1.0],
            bin_width: 1.0,
        });
    }
    let width = (hi - lo) / bins as f64;
    let mut counts = vec![0usize; bins];
    for &v in samples {
        let b = (((v - lo) / width) as usize).min(bins - 1);
        counts[b] += 1;
    }
    let n = samples.len() as f64;
    Ok(Density {
        centers: (0..bins).map(|b| lo + (b as f64 + 0.5) * width).collect(),
        densities: counts.iter().map(|&c| c as f64 / (n * width)).collect(),
        bin_width: width,
    })
}

/// Identifies one experiment cell and seed.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct RunDescriptor {
    pub scheme: FusionScheme,
    pub nodes: usize,
    /// `uniform`, `gaussian` or `trace`.
    pub dataset: String,
    pub dims: usize,
    /// Relevance exponent, kept as text so descriptors can be ordered.
    pub alpha: String,
    pub seed: u64,
}

impl RunDescriptor {
    pub fn file_stem(&self) -> String {
        format!(
            "{}_{}_n{}_l{}_a{}_seed{}",
            self.scheme, self.dataset, self.nodes, self.dims, self.alpha, self.seed
        )
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunResult {
    pub descriptor: RunDescriptor,
    pub records: Vec<DecisionRecord>,
}

/// Per-run means of every metric.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RunMetrics {
    pub upsilon: f64,
    pub throughput: f64,
    pub d_l: f64,
    pub d_s: f64,
    pub t_c_ms: f64,
    pub load_selected: f64,
    pub load_population: f64,
}

impl RunMetrics {
    pub const NAMES: [&'static str; 7] = [
        "upsilon",
        "throughput",
        "d_l",
        "d_s",
        "t_c_ms",
        "load_selected",
        "load_population",
    ];

    pub fn values(&self) -> [f64; 7] {
        [
            self.upsilon,
            self.throughput,
            self.d_l,
            self.d_s,
            self.t_c_ms,
            self.load_selected,
            self.load_population,
        ]
    }
}

impl RunResult {
    pub fn metrics(&self) -> Result<RunMetrics> {
        if self.records.is_empty() {
            return Err(Error::invalid("run has no records"));
        }
        let n = self.records.len() as f64;
        let mean = |f: &dyn Fn(&DecisionRecord) -> f64| self.records.iter().map(f).sum::<f64>() / n;
        let pairs: Vec<(usize, usize)> = self.records.iter().map(|r| (r.predicted_class, r.true_class)).collect();
        let times: Vec<f64> = self.records.iter().map(|r| r.conclusion_ms).collect();
        Ok(RunMetrics {
            upsilon: accuracy_upsilon(&pairs)?,
            throughput: throughput_r(&times)?,
            d_l: mean(&|r| distance_metrics(r).0),
            d_s: mean(&|r| distance_metrics(r).1),
            t_c_ms: mean(&|r| r.conclusion_ms),
            load_selected: mean(&|r| r.load_selected),
            load_population: mean(&|r| r.load_mean),
        })
    }

    pub fn d_l_samples(&self) -> Vec<f64> {
        self.records.iter().map(|r| distance_metrics(r).0).collect()
    }

    pub fn d_s_samples(&self) -> Vec<f64> {
        self.records.iter().map(|r| distance_metrics(r).1).collect()
    }
}

/// Mean and standard error of the mean (sample standard deviation over
/// `sqrt(n)`; zero for a single value).
pub fn mean_stderr(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    if values.is_empty() {
        return (f64::NAN, f64::NAN);
    }
    let mean = values.iter().sum::<f64>() / n;
    if values.len() < 2 {
        return (mean, 0.0);
    }
    let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1.0);
    (mean, (var / n).sqrt())
}

const RECORD_HEADER: [&str; 18] = [
    "scheme",
    "n",
    "dataset",
    "dims",
    "alpha",
    "seed",
    "query_id",
    "selected",
    "l_star",
    "s_star",
    "l_min",
    "s_max",
    "l_mean",
    "d_l",
    "d_s",
    "t_c_ms",
    "predicted_class",
    "true_class",
];

fn csv_err(path: &Path) -> impl Fn(csv::Error) -> Error + '_ {
    move |e| Error::Format(format!("{}: {e}", path.display()))
}

/// Writes one run's per-query records.
pub fn write_run_csv(run: &RunResult, path: &Path) -> Result<()> {
    let mut w = csv::Writer::from_path(path).map_err(csv_err(path))?;
    w.write_record(RECORD_HEADER).map_err(csv_err(path))?;
    let d = &run.descriptor;
    for r in &run.records {
        let (dl, ds) = distance_metrics(r);
        w.write_record([
            d.scheme.to_string(),
            d.nodes.to_string(),
            d.dataset.clone(),
            d.dims.to_string(),
            d.alpha.clone(),
            d.seed.to_string(),
            r.query_id.to_string(),
            r.selected.to_string(),
            format!("{:?}", r.load_selected),
            format!("{:?}", r.speed_selected),
            format!("{:?}", r.load_min),
            format!("{:?}", r.speed_max),
            format!("{:?}", r.load_mean),
            format!("{dl:?}"),
            format!("{ds:?}"),
            format!("{:?}", r.conclusion_ms),
            r.predicted_class.to_string(),
            r.true_class.to_string(),
        ])
        .map_err(csv_err(path))?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

/// Reads a file written by [`write_run_csv`].
pub fn read_run_csv(path: &Path) -> Result<RunResult> {
    let mut rdr = csv::Reader::from_path(path).map_err(csv_err(path))?;
    let header = rdr.headers().map_err(csv_err(path))?.clone();
    if header.iter().ne(RECORD_HEADER) {
        return Err(Error::Parse {
            path: path.display().to_string(),
            line: 1,
            message: "unexpected run header".into(),
        });
    }
    let mut descriptor = None;
    let mut records = Vec::new();
    for (i, rec) in rdr.records().enumerate() {
        let line = i + 2;
        let perr = |message: String| Error::Parse {
            path: path.display().to_string(),
            line,
            message,
        };
        let rec = rec.map_err(|e| perr(e.to_string()))?;
        let f = |k: usize| rec.get(k).unwrap_or("");
        let num = |k: usize| f(k).parse::<f64>().map_err(|e| perr(format!("column {}: {e}", RECORD_HEADER[k])));
        let int = |k: usize| f(k).parse::<u64>().map_err(|e| perr(format!("column {}: {e}", RECORD_HEADER[k])));
        let d = RunDescriptor {
            scheme: f(0).parse()?,
            nodes: int(1)? as usize,
            dataset: f(2).to_string(),
            dims: int(3)? as usize,
            alpha: f(4).to_string(),
            seed: int(5)?,
        };
        match &descriptor {
            None => descriptor = Some(d),
            Some(prev) if *prev != d => return Err(perr("mixed runs in one file".into())),
            Some(_) => {}
        }
        records.push(DecisionRecord {
            query_id: int(6)?,
            selected: int(7)? as usize,
            load_selected: num(8)?,
            speed_selected: num(9)?,
            load_min: num(10)?,
            speed_max: num(11)?,
            load_mean: num(12)?,
            conclusion_ms: num(15)?,
            predicted_class: int(16)? as usize,
            true_class: int(17)? as usize,
        });
    }
    let descriptor = descriptor.ok_or_else(|| Error::Format(format!("{}: no records", path.display())))?;
    Ok(RunResult { descriptor, records })
}

/// Cell key used for grouping seeds in the summary.
pub type CellKey = (FusionScheme, usize, String, usize, String);

fn cell_key(d: &RunDescriptor) -> CellKey {
    (d.scheme, d.nodes, d.dataset.clone(), d.dims, d.alpha.clone())
}

/// Per-cell mean and standard error of every metric across seeds.
#[derive(Debug, Clone, PartialEq)]
pub struct CellSummary {
    pub key: CellKey,
    pub seeds: usize,
    /// `(mean, stderr)` in [`RunMetrics::NAMES`] order.
    pub stats: Vec<(f64, f64)>,
}

impl CellSummary {
    pub fn mean(&self, metric: &str) -> Option<f64> {
        RunMetrics::NAMES.iter().position(|m| *m == metric).map(|i| self.stats[i].0)
    }
}

pub fn summarize(runs: &[(RunDescriptor, RunMetrics)]) -> Vec<CellSummary> {
    let mut groups: BTreeMap<CellKey, Vec<RunMetrics>> = BTreeMap::new();
    for (d, m) in runs {
        groups.entry(cell_key(d)).or_default().push(*m);
    }
    groups
        .into_iter()
        .map(|(key, ms)| {
            let stats = (0..RunMetrics::NAMES.len())
                .map(|i| mean_stderr(&ms.iter().map(|m| m.values()[i]).collect::<Vec<_>>()))
                .collect();
            CellSummary {
                key,
                seeds: ms.len(),
                stats,
            }
        })
        .collect()
}

/// Text of `summary.csv`.
pub fn summary_csv(cells: &[CellSummary]) -> String {
    let mut s = String::from("scheme,n,dataset,dims,alpha,seeds");
    for m in RunMetrics::NAMES {
        let _ = write!(s, ",{m}_mean,{m}_stderr");
    }
    s.push('\n');
    for c in cells {
        let (scheme, n, dataset, dims, alpha) = &c.key;
        let _ = write!(s, "{scheme},{n},{dataset},{dims},{alpha},{}", c.seeds);
        for (m, e) in &c.stats {
            let _ = write!(s, ",{m:?},{e:?}");
        }
        s.push('\n');
    }
    s
}

/// Text of `runs.csv`: one row of metrics per run.
pub fn runs_csv(runs: &[(RunDescriptor, RunMetrics)]) -> String {
    let mut s = String::from("scheme,n,dataset,dims,alpha,seed");
    for m in RunMetrics::NAMES {
        let _ = write!(s, ",{m}");
    }
    s.push('\n');
    for (d, m) in runs {
        let _ = write!(s, "{},{},{},{},{},{}", d.scheme, d.nodes, d.dataset, d.dims, d.alpha, d.seed);
        for v in m.values() {
            let _ = write!(s, ",{v:?}");
        }
        s.push('\n');
    }
    s
}

/// Writes `runs/<cell>.csv` per run, then `runs.csv` and `summary.csv`
/// under `dir`. Returns every path written.
pub fn emit_results(results: &[RunResult], dir: &Path) -> Result<Vec<PathBuf>> {
    let runs_dir = dir.join("runs");
    std::fs::create_dir_all(&runs_dir).map_err(|e| Error::io(&runs_dir, e))?;
    let mut written = Vec::new();
    let mut metrics = Vec::new();
    for run in results {
        let path = runs_dir.join(format!("{}.csv", run.descriptor.file_stem()));
        write_run_csv(run, &path)?;
        written.push(path);
        metrics.push((run.descriptor.clone(), run.metrics()?));
    }
    written.extend(write_tables(&metrics, dir)?);
    Ok(written)
}

/// Writes `runs.csv` and `summary.csv` from already computed metrics.
pub fn write_tables(metrics: &[(RunDescriptor, RunMetrics)], dir: &Path) -> Result<Vec<PathBuf>> {
    let runs = dir.join("runs.csv");
    std::fs::write(&runs, runs_csv(metrics)).map_err(|e| Error::io(&runs, e))?;
    let summary = dir.join("summary.csv");
    std::fs::write(&summary, summary_csv(&summarize(metrics))).map_err(|e| Error::io(&summary, e))?;
    Ok(vec![runs, summary])
}

#[cfg(test)]
mod tests {
    use super::*;

    fn record(l: f64, lmin: f64, s: f64, smax: f64, t: f64) -> DecisionRecord {
        DecisionRecord {
            query_id: 0,
            conclusion_ms: t,
            selected: 0,
            load_selected: l,
            speed_selected: s,
            load_min: lmin,
            speed_max: smax,
            load_mean: 0.5,
            predicted_class: 0,
            true_class: 0,
        }
    }

    #[test]
    fn upsilon_examples() {
        assert_eq!(accuracy_upsilon(&[(1, 1), (2, 2)]).unwrap(), 1.0);
        assert_eq!(accuracy_upsilon(&[(0, 1); 10]).unwrap(), 0.0);
        let mixed: Vec<_> = (0..100).map(|i| if i < 55 { (1, 1) } else { (0, 1) }).collect();
        assert_close!(accuracy_upsilon(&mixed).unwrap(), 0.55, 1e-12);
        assert!(accuracy_upsilon(&[]).is_err());
    }

    #[test]
    fn throughput_examples() {
        assert_close!(throughput_r(&[1.0; 10]).unwrap(), 1.0, 1e-12);
        assert_close!(throughput_r(&[4.0; 1000]).unwrap(), 0.25, 1e-12);
        assert!(throughput_r(&[0.0, 0.0]).is_err());
        assert!(throughput_r(&[]).is_err());
        assert!(throughput_r(&[-1.0, 2.0]).is_err());
    }

    #[test]
    fn distance_examples() {
        let (dl, _) = distance_metrics(&record(0.3, 0.1, 0.5, 0.9, 1.0));
        assert_close!(dl, 0.2, 1e-12);
        assert_eq!(distance_metrics(&record(0.3, 0.1, 0.9, 0.9, 1.0)).1, 0.0);
        assert_eq!(distance_metrics(&record(0.1, 0.1, 0.9, 0.9, 1.0)), (0.0, 0.0));
    }

    #[test]
    fn density_examples() {
        let d = density_estimate(&[0.0, 1.0], 2).unwrap();
        assert_eq!(d.densities, vec![1.0, 1.0]);
        assert_eq!(d.centers, vec![0.25, 0.75]);
        let c = density_estimate(&[0.4, 0.4, 0.4], 10).unwrap();
        assert_eq!(c.densities, vec![1.0]);
        assert_close!(c.integral(), 1.0, 1e-12);
        assert!(density_estimate(&[1.0], 5).is_err());
    }

    #[test]
    fn uniform_density_is_flat() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(3);
        let mut xs: Vec<f64> = (0..10_000).map(|_| rng.random::<f64>()).collect();
        xs.extend([0.0, 1.0]);
        let d = density_estimate(&xs, 10).unwrap();
        for v in &d.densities {
            assert_close!(*v, 1.0, 0.15);
        }
        assert_close!(d.integral(), 1.0, 1e-9);
    }

    #[test]
    fn stderr() {
        let (m, e) = mean_stderr(&[1.0, 2.0, 3.0]);
        assert_close!(m, 2.0, 1e-12);
        assert_close!(e, (1.0f64 / 3.0).sqrt(), 1e-12);
        assert_eq!(mean_stderr(&[5.0]), (5.0, 0.0));
    }

    fn descriptor(scheme: FusionScheme, nodes: usize, dataset: &str, seed: u64) -> RunDescriptor {
        RunDescriptor {
            scheme,
            nodes,
            dataset: dataset.into(),
            dims: 10,
            alpha: "1".into(),
            seed,
        }
    }

    #[test]
    fn summary_cardinality() {
        let mut runs = Vec::new();
        for scheme in FusionScheme::ALL {
            for n in [10, 50, 100, 500] {
                for ds in ["uniform", "gaussian"] {
                    for seed in 0..3 {
                        let r = RunResult {
                            descriptor: descriptor(scheme, n, ds, seed),
                            records: vec![record(0.3, 0.1, 0.5, 0.9, 1.0 + seed as f64)],
                        };
                        runs.push((r.descriptor.clone(), r.metrics().unwrap()));
                    }
                }
            }
        }
        let cells = summarize(&runs);
        assert_eq!(cells.len(), 16);
        assert!(cells.iter().all(|c| c.seeds == 3 && c.stats.len() == RunMetrics::NAMES.len()));
        let text = summary_csv(&cells);
        assert_eq!(text.lines().count(), 17);
        assert!(text.lines().next().unwrap().contains("d_l_stderr"));
    }

    #[test]
    fn run_csv_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let run = RunResult {
            descriptor: descriptor(FusionScheme::Mvs, 10, "trace", 4),
            records: vec![record(0.3, 0.1, 0.5, 0.9, 0.0123), record(1.0 / 3.0, 0.0, 0.2, 0.7, 0.5)],
        };
        let paths = emit_results(std::slice::from_ref(&run), dir.path()).unwrap();
        assert_eq!(paths.len(), 3);
        let back = read_run_csv(&paths[0]).unwrap();
        assert_eq!(back.descriptor, run.descriptor);
        for (a, b) in back.records.iter().zip(&run.records) {
            assert_eq!((a.load_selected, a.speed_max, a.conclusion_ms), (b.load_selected, b.speed_max, b.conclusion_ms));
        }
    }

    #[test]
    fn write_failure_names_path() {
        let dir = tempfile::tempdir().unwrap();
        let blocker = dir.path().join("file");
        std::fs::write(&blocker, "x").unwrap();
        let err = emit_results(&[], &blocker).unwrap_err();
        assert!(err.to_string().contains("file"));
    }
}
