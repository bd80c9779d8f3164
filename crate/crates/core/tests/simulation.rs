//! Whole-pipeline properties of the simulator and metrics.

use edge_alloc::allocator::FusionScheme;
use edge_alloc::experiment::{prepare, run_cell, simulate, CellSpec, DatasetKind, PipelineConfig};
use edge_alloc::metrics::{emit_results, read_run_csv, RunResult};
use edge_alloc::simulator::{generate_scenario, LoadMode, LoadTrace, ScenarioConfig, Simulation, TraceSource};
use tempfile::TempDir;

fn quick_pipeline() -> PipelineConfig {
    PipelineConfig {
        training_size: 800,
        ..PipelineConfig::default()
    }
}

fn quick_base(queries: usize) -> ScenarioConfig {
    ScenarioConfig {
        queries,
        samples_per_node: 200,
        ..ScenarioConfig::default()
    }
}

fn strip(run: &RunResult) -> Vec<(u64, usize, f64, f64, f64, f64, usize)> {
    run.records
        .iter()
        .map(|r| (r.query_id, r.selected, r.load_selected, r.speed_selected, r.load_min, r.speed_max, r.predicted_class))
        .collect()
}

#[test]
fn large_network_selects_lighter_nodes() {
    let pipeline = PipelineConfig::default();
    let fcp = pipeline.classifier(None).unwrap();
    let base = quick_base(300);
    for dataset in [DatasetKind::Uniform, DatasetKind::Gaussian] {
        let mut gaps = Vec::new();
        for seed in 0..10 {
            let cell = CellSpec { dataset, nodes: 500, seed };
            for r in run_cell(&pipeline, &base, &TraceSource::Bundled, &cell, &FusionScheme::ALL, &fcp).unwrap() {
                let m = r.metrics().unwrap();
                gaps.push(m.load_population - m.load_selected);
            }
        }
        // Paired one-sided test: every run below the population mean, and
        // the mean gap many standard errors above zero.
        let n = gaps.len() as f64;
        let mean = gaps.iter().sum::<f64>() / n;
        let sd = (gaps.iter().map(|g| (g - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt();
        assert!(gaps.iter().all(|&g| g > 0.0), "{dataset}: {gaps:?}");
        assert!(mean / (sd / n.sqrt()) > 5.0, "{dataset}: mean {mean} sd {sd}");
    }
}

#[test]
fn full_loop_is_reproducible() {
    let pipeline = quick_pipeline();
    let fcp = pipeline.classifier(None).unwrap();
    for dataset in DatasetKind::ALL {
        let cell = CellSpec {
            dataset,
            nodes: 20,
            seed: 5,
        };
        let a = run_cell(&pipeline, &quick_base(60), &TraceSource::Bundled, &cell, &FusionScheme::ALL, &fcp).unwrap();
        let b = run_cell(&pipeline, &quick_base(60), &TraceSource::Bundled, &cell, &FusionScheme::ALL, &fcp).unwrap();
        for (x, y) in a.iter().zip(&b) {
            assert_eq!(strip(x), strip(y));
            assert_eq!(x.descriptor, y.descriptor);
        }
    }
}

#[test]
fn records_respect_metric_ranges() {
    let pipeline = quick_pipeline();
    let fcp = pipeline.classifier(None).unwrap();
    for dataset in DatasetKind::ALL {
        let cell = CellSpec {
            dataset,
            nodes: 30,
            seed: 2,
        };
        for run in run_cell(&pipeline, &quick_base(80), &TraceSource::Bundled, &cell, &FusionScheme::ALL, &fcp).unwrap() {
            for r in &run.records {
                let (dl, ds) = (r.load_selected - r.load_min, r.speed_max - r.speed_selected);
                assert!((0.0..=1.0).contains(&dl) && (0.0..=1.0).contains(&ds), "{r:?}");
                assert!(r.conclusion_ms > 0.0);
            }
            let m = run.metrics().unwrap();
            assert!((0.0..=1.0).contains(&m.upsilon));
            assert!(m.throughput > 0.0 && m.throughput.is_finite());
        }
    }
}

#[test]
fn queue_dynamics_keep_loads_in_range() {
    let pipeline = quick_pipeline();
    let fcp = pipeline.classifier(None).unwrap();
    let cfg = ScenarioConfig {
        nodes: 8,
        load_mode: LoadMode::QueueDynamics,
        queue_capacity: 10,
        service_rate: 1,
        ..quick_base(200)
    };
    let p = prepare(&pipeline, &cfg, fcp).unwrap();
    for scheme in FusionScheme::ALL {
        let records = simulate(&p, scheme, 3).unwrap();
        assert_eq!(records.len(), 200);
        assert!(records.iter().all(|r| (0.0..=1.0).contains(&r.load_selected)));
    }
    // Heavy arrivals on slow nodes must eventually saturate some queue.
    let mut sim = Simulation::new(p.scenario.clone()).unwrap();
    let mut peak: f64 = 0.0;
    for (e, q) in p.scenario.queries.iter().enumerate() {
        sim.begin_epoch(e);
        sim.commit(&[0, 1, 2, 3, 4, 5, 6, 7], q.id).unwrap();
        for n in sim.nodes() {
            assert!((0.0..=1.0).contains(&n.load));
            peak = peak.max(n.load);
        }
    }
    assert!(peak > 0.5, "peak load {peak}");
}

#[test]
fn external_trace_is_replayed_round_robin() {
    let dir = TempDir::new().unwrap();
    let path = dir.path().join("cpu.tsv");
    let mut text = String::from("ts\tcpu_pct\n");
    let raw: Vec<f64> = (0..23).map(|i| ((i * 41) % 100) as f64).collect();
    for (i, v) in raw.iter().enumerate() {
        text.push_str(&format!("{i}\t{v}\n"));
    }
    std::fs::write(&path, text).unwrap();
    let source = TraceSource::File {
        path: path.display().to_string(),
        column: "cpu_pct".into(),
    };
    let trace = source.load().unwrap();
    let expected = LoadTrace::from_values(raw.iter().map(|v| v / 100.0).collect()).unwrap();
    assert_eq!(trace, expected);

    let cfg = ScenarioConfig {
        nodes: 4,
        queries: 12,
        samples_per_node: 50,
        trace: Some(source),
        ..ScenarioConfig::default()
    };
    let mut sim = Simulation::new(generate_scenario(&cfg).unwrap()).unwrap();
    let shares = trace.partition(4).unwrap();
    for epoch in 0..12 {
        sim.begin_epoch(epoch);
        for (i, node) in sim.nodes().iter().enumerate() {
            let share = &shares[i];
            assert_eq!(node.load, share[epoch % share.len()], "node {i} epoch {epoch}");
            assert_eq!(node.load, raw[i + 4 * (epoch % share.len())] / 100.0);
        }
    }

    std::fs::write(&path, "ts\tcpu_pct\n0\t50\n1\tbusy\n").unwrap();
    let err = TraceSource::File {
        path: path.display().to_string(),
        column: "cpu_pct".into(),
    }
    .load()
    .unwrap_err();
    assert!(err.to_string().contains("cpu.tsv:3:"), "{err}");
}

#[test]
fn emitted_tables_cover_the_grid() {
    let pipeline = PipelineConfig {
        training_size: 400,
        ..PipelineConfig::default()
    };
    let fcp = pipeline.classifier(None).unwrap();
    let mut results = Vec::new();
    for dataset in [DatasetKind::Uniform, DatasetKind::Gaussian] {
        for nodes in [10, 50, 100, 500] {
            for seed in 0..2 {
                let cell = CellSpec { dataset, nodes, seed };
                let base = ScenarioConfig {
                    queries: 5,
                    samples_per_node: 50,
                    ..ScenarioConfig::default()
                };
                results.extend(run_cell(&pipeline, &base, &TraceSource::Bundled, &cell, &FusionScheme::ALL, &fcp).unwrap());
            }
        }
    }
    let dir = TempDir::new().unwrap();
    emit_results(&results, dir.path()).unwrap();
    let summary = std::fs::read_to_string(dir.path().join("summary.csv")).unwrap();
    let mut lines = summary.lines();
    let header: Vec<&str> = lines.next().unwrap().split(',').collect();
    for m in ["upsilon", "throughput", "d_l", "d_s"] {
        assert!(header.contains(&format!("{m}_stderr").as_str()), "{header:?}");
    }
    let rows: Vec<&str> = lines.collect();
    assert_eq!(rows.len(), 16);
    assert!(rows.iter().all(|r| r.split(',').nth(5) == Some("2")));
    let runs = std::fs::read_to_string(dir.path().join("runs.csv")).unwrap();
    assert_eq!(runs.lines().count(), 1 + 32);

    let back = read_run_csv(&dir.path().join("runs").join(format!("{}.csv", results[0].descriptor.file_stem()))).unwrap();
    assert_eq!(back.descriptor, results[0].descriptor);
    assert_eq!(strip(&back), strip(&results[0]));
}
