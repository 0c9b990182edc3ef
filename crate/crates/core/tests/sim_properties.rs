//! Engine-level properties: paired randomness, bounds, sweep plumbing and
//! stroke sources.

use std::path::Path;

use beamtrack::array::{ArrayConfig, RfMismatch, Ula};
use beamtrack::dynamics::{fit_ar, synthesize, write_trace_csv, ArModel};
use beamtrack::protocol::PointingPolicy;
use beamtrack::sim::{
    run_bi, run_once, run_scenario, run_scenario_with, sweep, BiRecord, RunContext, Scenario, ScenarioConfig,
    ScenarioFile, StrokeSource, SweepAxis,
};

fn configs_dir() -> &'static Path {
    Path::new(concat!(env!("CARGO_MANIFEST_DIR"), "/../../configs"))
}

fn short(runs: usize, duration: f64) -> ScenarioConfig {
    let mut cfg = ScenarioConfig::reference();
    cfg.n_monte_carlo = runs;
    cfg.duration = duration;
    cfg.policies = vec![
        PointingPolicy::conventional(),
        PointingPolicy::sensor_aided(0.1),
        PointingPolicy::sensor_aided(0.0),
        PointingPolicy::IdealOracle,
    ];
    cfg
}

fn records(cfg: &ScenarioConfig) -> Vec<BiRecord> {
    let scenario = Scenario::new(cfg.clone()).unwrap();
    let mut out = Vec::new();
    run_scenario_with(&scenario, |r| {
        out.push(*r);
        Ok(())
    })
    .unwrap();
    out
}

#[test]
fn shipped_configs_resolve() {
    let reference = ScenarioConfig::from_toml_path(&configs_dir().join("reference.toml")).unwrap();
    assert_eq!(reference, ScenarioConfig::reference());
    let quick = ScenarioConfig::from_toml_path(&configs_dir().join("quick.toml")).unwrap();
    assert_eq!(quick.n_monte_carlo, 4);
}

#[test]
fn oracle_dominates_every_step() {
    // Literal-mode patterns peak at zero error, so no policy can exceed the
    // oracle SNR under shared shadowing and mismatch.
    let mut cfg = short(3, 4.0);
    for bw in [0.2f64, 1.0] {
        cfg = cfg.with_beamwidth(bw.to_radians());
        let recs = records(&cfg);
        let oracle = cfg.policies.len() - 1;
        for r in &recs {
            assert!(r.min_margin_db <= 1e-9, "{r:?}");
            if r.policy == oracle {
                assert!(r.frame_ok);
                assert_eq!(r.min_margin_db, 0.0);
            }
        }
        // Per interval, throughput never exceeds eta times the oracle's.
        for chunk in recs.chunks(cfg.policies.len()) {
            let ideal = chunk[oracle].throughput_bps;
            for r in chunk {
                assert_eq!((r.run, r.bi), (chunk[0].run, chunk[0].bi));
                assert!(r.throughput_bps <= r.efficiency * ideal * (1.0 + 1e-12));
                assert!(r.throughput_bps >= 0.0);
                if !r.frame_ok {
                    assert_eq!(r.throughput_bps, 0.0);
                }
            }
        }
    }
}

#[test]
fn record_count_is_runs_times_intervals() {
    let cfg = short(2, 3.0);
    let result = run_scenario(&cfg).unwrap();
    for p in &result.policies {
        assert_eq!(p.n_records, 2 * 300);
        assert!((0.0..=1.0).contains(&p.frame_error_rate));
    }
    assert_eq!(result.metadata.n_bi_per_run, 300);
}

#[test]
fn oracle_beats_noiseless_sensor_policy() {
    let result = run_scenario(&short(2, 10.0)).unwrap();
    let oracle = result.policy("ideal_oracle").unwrap().mean_throughput_bps;
    let sa = result.policy("sensor_aided_sr0").unwrap().mean_throughput_bps;
    assert!(oracle >= sa && sa >= 0.0, "{oracle} {sa}");
    assert_eq!(result.policy("ideal_oracle").unwrap().frame_error_rate, 0.0);
}

#[test]
fn perfect_prediction_reproduces_oracle_trace() {
    // Vehicle 2 at rest: the predictor returns its mean, which is the exact
    // height. Vehicle 1 moves but knows its own height.
    let mut cfg = short(1, 1.0);
    cfg.array = ArrayConfig::ideal(64);
    cfg.policies = vec![PointingPolicy::sensor_aided(0.0), PointingPolicy::IdealOracle];
    let scenario = Scenario::new(cfg.clone()).unwrap();
    let len = scenario.trace_len();
    let h1 = synthesize(&ArModel::default_stroke(cfg.vehicle1.rest_height), len, 4)
        .unwrap()
        .into_samples();
    let ctx = RunContext {
        run: 0,
        h1,
        h2: vec![cfg.vehicle2.rest_height; len],
        predictor: Some(ArModel::new(vec![0.5; 10], 1e-6, cfg.vehicle2.rest_height, 500.0).unwrap()),
        ula1: Ula::new(cfg.array, RfMismatch::ideal(64)),
        ula2: Ula::new(cfg.array, RfMismatch::ideal(64)),
        ranging_z: vec![0.0; len],
        shadow_per_run_db: None,
    };
    let mut out = Vec::new();
    for bi in 0..scenario.n_bi() {
        run_bi(&scenario, &ctx, bi, &mut out).unwrap();
    }
    for pair in out.chunks(2) {
        assert!(pair[0].frame_ok);
        assert!(pair[0].min_margin_db.abs() < 1e-9);
        let ratio = pair[0].throughput_bps / pair[1].throughput_bps;
        assert!((ratio - 0.99).abs() < 1e-9, "{ratio}");
    }
}

#[test]
fn results_do_not_depend_on_thread_count() {
    let cfg = short(4, 1.0);
    let run_with = |threads| {
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build()
            .unwrap()
            .install(|| records(&cfg))
    };
    assert_eq!(run_with(1), run_with(3));
}

#[test]
fn single_value_sweep_equals_direct_run() {
    let cfg = short(1, 2.0);
    let points = sweep(&cfg, SweepAxis::BiDuration, &[0.01]).unwrap();
    assert_eq!(points[0].result, run_scenario(&cfg).unwrap());
}

#[test]
fn bi_duration_sweep_keeps_seed() {
    let cfg = short(1, 1.5);
    let points = sweep(&cfg, SweepAxis::BiDuration, &[0.01, 0.03, 0.05]).unwrap();
    assert_eq!(points.len(), 3);
    for p in &points {
        assert_eq!(p.result.metadata.master_seed, cfg.master_seed);
    }
    let eta: Vec<f64> = points
        .iter()
        .map(|p| p.result.policy("conventional_ba").unwrap().efficiency)
        .collect();
    assert!(eta[0] < eta[1] && eta[1] < eta[2]);
}

#[test]
fn throughput_non_increasing_in_ranging_noise() {
    let mut cfg = short(4, 20.0).with_beamwidth(0.25f64.to_radians());
    cfg.policies = vec![PointingPolicy::sensor_aided(0.0)];
    let points = sweep(&cfg, SweepAxis::RangingStd, &[0.0, 0.1, 0.3]).unwrap();
    let t: Vec<f64> = points.iter().map(|p| p.result.policies[0].mean_throughput_bps).collect();
    assert!(t[0] >= t[1] && t[1] >= t[2], "{t:?}");
}

#[test]
fn conventional_loses_throughput_with_longer_intervals_at_64_elements() {
    let mut cfg = short(10, 200.0);
    cfg.policies = vec![PointingPolicy::conventional()];
    let points = sweep(&cfg, SweepAxis::BiDuration, &[0.01, 0.05]).unwrap();
    let t10 = points[0].result.policies[0].mean_throughput_bps;
    let t50 = points[1].result.policies[0].mean_throughput_bps;
    assert!(t50 < t10, "10 ms {t10} vs 50 ms {t50}");
}

#[test]
fn csv_and_model_stroke_sources() {
    let dir = tempfile::tempdir().unwrap();
    let model = ArModel::default_stroke(0.0);
    // Measured traces are re-centred, so an offset must not matter.
    let trace = synthesize(&model.clone().with_mean(3.0), 2_000, 8).unwrap();
    let csv_path = dir.path().join("stroke.csv");
    write_trace_csv(&trace, std::fs::File::create(&csv_path).unwrap()).unwrap();

    let fitted = fit_ar(&trace, 10).unwrap();
    let json = serde_json::json!({
        "model": fitted,
        "prediction_error_variance": fitted.innovation_variance(),
        "source_sha256": "0",
        "source_samples": trace.len(),
    });
    let model_path = dir.path().join("model.json");
    std::fs::write(&model_path, serde_json::to_string(&json).unwrap()).unwrap();

    let text = "n_monte_carlo = 2\nduration_s = 30.0\n\
        [strokes.vehicle1]\nsource = \"csv\"\npath = \"stroke.csv\"\n\
        [strokes.vehicle2]\nsource = \"model\"\npath = \"model.json\"\n";
    let file: ScenarioFile = toml::from_str(text).unwrap();
    let cfg = file.resolve(dir.path()).unwrap();
    assert!(matches!(cfg.stroke1, StrokeSource::Csv { .. }));
    match &cfg.stroke2 {
        StrokeSource::Synthetic { model } => assert_eq!(model.mean(), cfg.vehicle2.rest_height),
        other => panic!("{other:?}"),
    }
    let scenario = Scenario::new(cfg).unwrap();
    let a = run_once(&scenario, 0).unwrap();
    let b = run_once(&scenario, 1).unwrap();
    assert_eq!(a.len(), 3 * 3000);
    // The replayed trace is shared; the synthetic peer differs per run.
    assert_ne!(a, b);

    assert!(ScenarioConfig::from_toml_path(&dir.path().join("missing.toml")).is_err());
    let too_long = "duration_s = 100.0\n[strokes.vehicle1]\nsource = \"csv\"\npath = \"stroke.csv\"\n\
        [strokes.vehicle2]\nsource = \"synthetic\"\n";
    let cfg = toml::from_str::<ScenarioFile>(too_long).unwrap().resolve(dir.path()).unwrap();
    let err = run_scenario(&cfg).unwrap_err();
    assert!(err.to_string().contains("too short"), "{err}");
}
