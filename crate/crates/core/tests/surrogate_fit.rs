use std::sync::OnceLock;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use voxfield_core::ann::{
    anomaly_score, model_from_text, model_to_text, sample_volume, train_surrogate, SurrogateModel, TrainParams,
    DEFAULT_ANOMALY_FLOOR, DEFAULT_HIDDEN, REFINED_GRID,
};
use voxfield_core::boundary::{assemble_boundary, BoundaryMethod};
use voxfield_core::field::{CornerSet, FieldKind, PlacementScheme, SensorReading};
use voxfield_core::solver::{solve_laplace3d, Provenance, SolverParams, VolumeGrid};
use voxfield_oracles::{net_forward, REFERENCE_CORNERS};

const SEED: u64 = 7;

fn reference_volume() -> &'static VolumeGrid {
    static V: OnceLock<VolumeGrid> = OnceLock::new();
    V.get_or_init(|| {
        let cs =
            CornerSet::new(PlacementScheme::S1Corners8, REFERENCE_CORNERS.to_vec(), FieldKind::temperature(), 0).unwrap();
        let b = assemble_boundary(&cs, BoundaryMethod::Bilinear, 8, &SolverParams::default()).unwrap();
        solve_laplace3d(&b, &SolverParams::default()).unwrap()
    })
}

fn reference_model() -> &'static SurrogateModel {
    static M: OnceLock<SurrogateModel> = OnceLock::new();
    M.get_or_init(|| train_surrogate(reference_volume(), DEFAULT_HIDDEN, &TrainParams::default(), SEED).unwrap())
}

#[test]
fn reference_fit_quality() {
    let model = reference_model();
    let r = model.report();
    assert!(r.final_rmse_field_units <= 0.16, "rmse {}", r.final_rmse_field_units);
    assert!(r.epochs_run <= 20_000);
    assert!(r.wall_time_ms <= 300_000);
    assert_eq!(r.training_grid_n, 8);
    assert!((r.final_rmse_field_units - r.final_rmse_normalized * model.out_halfrange()).abs() < 1e-15);
    assert!((model.eval([0.5; 3]) - 23.0).abs() <= 0.25);
}

#[test]
fn refined_sampling_stays_in_range() {
    let refined = sample_volume(reference_model(), REFINED_GRID).unwrap();
    assert_eq!(refined.values().len(), 4096);
    assert_eq!(refined.provenance(), Provenance::SurrogateSample);
    assert!(refined.values().iter().all(|v| (18.5..=27.5).contains(v)));
    let bound = reference_model().params().output_bound();
    let (mid, half) = (reference_model().out_mid(), reference_model().out_halfrange());
    assert!(refined.values().iter().all(|v| ((v - mid) / half).abs() <= bound + 1e-12));
}

#[test]
fn training_grid_is_reproduced_within_three_rmse() {
    let model = reference_model();
    let resampled = sample_volume(model, 8).unwrap();
    let three = 3.0 * model.report().final_rmse_field_units;
    let close =
        resampled.values().iter().zip(reference_volume().values()).filter(|(a, b)| (*a - *b).abs() <= three).count();
    assert!(close as f64 >= 0.95 * 512.0, "{close} of 512 within 3x rmse");
}

#[test]
fn evaluation_matches_reference_forward_pass() {
    let model = reference_model();
    let p = model.params();
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    for _ in 0..100 {
        let q = [rng.random(), rng.random(), rng.random()];
        let expect = model.out_mid() + model.out_halfrange() * net_forward(&p.w, &p.b1, &p.z, p.b2, q);
        assert!((model.eval(q) - expect).abs() <= 1e-12);
    }
}

#[test]
fn lipschitz_bound_holds_on_random_pairs() {
    let p = reference_model().params();
    let k = p.lipschitz_l1();
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    for _ in 0..2000 {
        let a: [f64; 3] = [rng.random(), rng.random(), rng.random()];
        let b: [f64; 3] = [rng.random(), rng.random(), rng.random()];
        let dist: f64 = a.iter().zip(&b).map(|(x, y)| (x - y).abs()).sum();
        assert!((p.forward(a) - p.forward(b)).abs() <= k * dist + 1e-12);
    }
}

#[test]
fn retraining_is_bit_identical() {
    let again = train_surrogate(reference_volume(), DEFAULT_HIDDEN, &TrainParams::default(), SEED).unwrap();
    let first = reference_model();
    assert_eq!(again.params(), first.params());
    let strip = |m: &SurrogateModel| {
        model_to_text(m).lines().filter(|l| !l.starts_with("wall_time_ms")).collect::<Vec<_>>().join("\n")
    };
    assert_eq!(strip(&again), strip(first));
}

#[test]
fn persisted_model_evaluates_identically() {
    let model = reference_model();
    let back = model_from_text(&model_to_text(model)).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for _ in 0..1000 {
        let q = [rng.random(), rng.random(), rng.random()];
        assert_eq!(back.eval(q).to_bits(), model.eval(q).to_bits());
    }
}

#[test]
fn corner_jump_is_flagged() {
    let model = reference_model();
    let jump = SensorReading::new("p00", [0.0; 3], 40.0, 1).unwrap();
    let v = anomaly_score(model, &jump, DEFAULT_ANOMALY_FLOOR);
    assert!(v.score >= 20.0 && v.flag, "{v:?}");

    let own = SensorReading::new("p00", [0.3, 0.6, 0.2], model.eval([0.3, 0.6, 0.2]), 1).unwrap();
    let v = anomaly_score(model, &own, DEFAULT_ANOMALY_FLOOR);
    assert_eq!(v.score, 0.0);
    assert!(!v.flag);

    let rmse = model.report().final_rmse_field_units;
    let near = SensorReading::new("p00", [0.5; 3], model.eval([0.5; 3]) + rmse, 1).unwrap();
    assert!(!anomaly_score(model, &near, 0.0).flag);
}

#[test]
fn constant_volume_gives_constant_model() {
    let flat = VolumeGrid::from_fn(6, FieldKind::temperature(), Provenance::Predefined, |_| 20.0).unwrap();
    let model = train_surrogate(&flat, 4, &TrainParams::default(), 0).unwrap();
    assert_eq!(model.report().epochs_run, 0);
    assert!(sample_volume(&model, 16).unwrap().values().iter().all(|v| *v == 20.0));
}
