use std::sync::OnceLock;

use voxfield::config::PipelineConfig;
use voxfield::error::{AppError, Stage};
use voxfield::persist::{load_model, load_volume, persist_artifacts, save_model, volume_to_text};
use voxfield::pipeline::run_pipeline_once;
use voxfield::sim::reference_readings;
use voxfield::SnapshotArtifacts;
use voxfield_core::field::{Domain, PlacementScheme, SensorReading};
use voxfield_core::solver::lattice_point;
use voxfield_core::Exec;
use voxfield_oracles::{trilinear, REFERENCE_CORNERS};

const T0: u64 = 1_714_000_000_000;

fn room() -> PipelineConfig {
    PipelineConfig { domain: Domain::new([0.0; 3], [5.0, 3.0, 4.0]).unwrap(), ..PipelineConfig::default() }
}

fn readings(cfg: &PipelineConfig) -> Vec<SensorReading> {
    reference_readings(&cfg.domain, cfg.scheme, T0)
}

fn trained() -> &'static SnapshotArtifacts {
    static A: OnceLock<SnapshotArtifacts> = OnceLock::new();
    A.get_or_init(|| {
        let cfg = room();
        run_pipeline_once(&readings(&cfg), &cfg, true).unwrap()
    })
}

fn shape_count(text: &str) -> usize {
    let doc = roxmltree::Document::parse_with_options(
        text,
        roxmltree::ParsingOptions { allow_dtd: true, ..Default::default() },
    )
    .unwrap();
    doc.descendants().filter(|n| n.has_tag_name("Shape")).count()
}

#[test]
fn solve_only_run_matches_trilinear() {
    let cfg = room();
    let a = run_pipeline_once(&readings(&cfg), &cfg, false).unwrap();
    assert!(a.model.is_none() && a.refined_volume.is_none() && a.refined_x3d.is_none());
    assert_eq!(a.x3d.shape_count, 512);
    assert_eq!(shape_count(&a.x3d.text), 512);
    let worst = a
        .volume
        .nodes()
        .map(|([i, j, k], v)| (v - trilinear(&REFERENCE_CORNERS, lattice_point(8, i, j, k))).abs())
        .fold(0.0, f64::max);
    assert!(worst <= 1e-8, "{worst}");
    let stages: Vec<Stage> = a.timings.iter().map(|(s, _)| *s).collect();
    assert_eq!(stages, [Stage::Match, Stage::Boundary, Stage::Solve, Stage::Emit]);
    assert!(a.timings.iter().all(|(_, ms)| *ms >= 0.0));
    assert_eq!(a.snapshot_time(), T0);
    assert_eq!(a.volume.field(), a.corner_set.field());
}

#[test]
fn training_run_adds_surrogate_and_refined_volume() {
    let a = trained();
    let model = a.model.as_ref().unwrap();
    assert!(model.report().final_rmse_field_units <= 0.16);
    let refined = a.refined_volume.as_ref().unwrap();
    assert_eq!(refined.n(), 16);
    assert!(refined.min() >= 18.5 && refined.max() <= 27.5);
    assert_eq!(a.refined_x3d.as_ref().unwrap().shape_count, 4096);
    for s in [Stage::Train, Stage::Sample] {
        assert!(a.timing(s).is_some(), "{s}");
    }
    assert_eq!(model.field(), a.volume.field());
}

#[test]
fn incomplete_readings_name_missing_point() {
    let cfg = room();
    let mut rs = readings(&cfg);
    rs.retain(|r| r.sensor_id.as_str() != "s05");
    let err = run_pipeline_once(&rs, &cfg, false).unwrap_err();
    assert_eq!(err.stage(), Some(Stage::Match));
    assert_eq!(err.exit_code(), 2);
    let msg = err.to_string();
    assert!(msg.contains("[1, 0, 1]") || msg.contains("(1, 0, 1)"), "{msg}");
}

#[test]
fn stale_readings_make_snapshot_incomplete() {
    let cfg = room();
    let mut rs = readings(&cfg);
    let stale = 2 * 60_000 + 1;
    rs[0].timestamp -= stale;
    assert!(run_pipeline_once(&rs, &cfg, false).is_err());
    rs[0].timestamp += 1;
    assert!(run_pipeline_once(&rs, &cfg, false).is_ok());
}

#[test]
fn non_convergence_is_a_solve_error() {
    // corner-only data warm-starts exactly, so ask for an unreachable residual
    let mut cfg = room();
    cfg.solver.max_iterations = Some(2);
    cfg.solver.tolerance = 1e-300;
    let err = run_pipeline_once(&readings(&cfg), &cfg, false).unwrap_err();
    assert_eq!(err.stage(), Some(Stage::Solve));
    assert_eq!(err.exit_code(), 3);
}

#[test]
fn output_is_deterministic_and_mode_independent() {
    let mut cfg = room();
    cfg.scheme = PlacementScheme::S2CornersPlusCenters14;
    cfg.boundary_method = voxfield_core::boundary::BoundaryMethod::Fd2d;
    cfg.grid_n = 9;
    let rs = readings(&cfg);
    let a = run_pipeline_once(&rs, &cfg, false).unwrap();
    let b = run_pipeline_once(&rs, &cfg, false).unwrap();
    cfg.exec = Exec::Sequential;
    let c = run_pipeline_once(&rs, &cfg, false).unwrap();
    assert_eq!(a.x3d.text, b.x3d.text);
    assert_eq!(a.x3d.text, c.x3d.text);
    assert_eq!(volume_to_text(&a.volume), volume_to_text(&c.volume));
}

#[test]
fn persisted_artifacts_reload_exactly() {
    let a = trained();
    let dir = tempfile::tempdir().unwrap();
    let paths = persist_artifacts(a, dir.path(), Some("room")).unwrap();
    assert_eq!(load_volume(&paths.volume).unwrap(), a.volume);
    assert_eq!(&load_volume(paths.refined.as_ref().unwrap()).unwrap(), a.refined_volume.as_ref().unwrap());
    assert_eq!(std::fs::read_to_string(&paths.scene).unwrap(), a.x3d.text);
    let html = std::fs::read_to_string(paths.html.as_ref().unwrap()).unwrap();
    assert!(html.contains("<title>room</title>"));

    let model = a.model.as_ref().unwrap();
    let back = load_model(paths.model.as_ref().unwrap()).unwrap();
    let mut rng_state = 0x2545_f491_4f6c_dd1du64;
    let mut unit = move || {
        rng_state ^= rng_state << 13;
        rng_state ^= rng_state >> 7;
        rng_state ^= rng_state << 17;
        (rng_state >> 11) as f64 / (1u64 << 53) as f64
    };
    for _ in 0..1000 {
        let p = [unit(), unit(), unit()];
        assert_eq!(model.eval(p).to_bits(), back.eval(p).to_bits());
    }
}

#[test]
fn future_format_versions_are_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("model.txt");
    save_model(&path, trained().model.as_ref().unwrap()).unwrap();
    let text = std::fs::read_to_string(&path).unwrap();
    assert!(text.contains("format_version 1"));
    std::fs::write(&path, text.replace("format_version 1", "format_version 999")).unwrap();
    let err = load_model(&path).unwrap_err();
    assert!(matches!(err, AppError::Input(_)));
    assert!(err.to_string().contains("unsupported"), "{err}");

    let err = load_volume(&dir.path().join("nope.txt")).unwrap_err();
    assert_eq!(err.exit_code(), 4);
    assert!(err.to_string().contains("nope.txt"));
}
