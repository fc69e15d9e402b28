//! One pass from raw readings to a scene.

use std::time::Instant;

use voxfield_core::ann::{sample_volume_with, train_surrogate, SurrogateModel};
use voxfield_core::boundary::{assemble_boundary_with, BoundaryField};
use voxfield_core::field::{match_readings, CornerSet, SensorReading};
use voxfield_core::solver::{solve_laplace3d, VolumeGrid};
use voxfield_core::x3d::{emit_x3d, X3DDocument};

use crate::config::PipelineConfig;
use crate::error::{AppResult, Stage, StageExt};

#[derive(Debug, Clone)]
pub struct SnapshotArtifacts {
    pub corner_set: CornerSet,
    pub boundary: BoundaryField,
    pub volume: VolumeGrid,
    pub model: Option<SurrogateModel>,
    pub refined_volume: Option<VolumeGrid>,
    /// Scene of the solved volume.
    pub x3d: X3DDocument,
    /// Scene of the refined surrogate samples, when trained.
    pub refined_x3d: Option<X3DDocument>,
    /// Wall-clock milliseconds per executed stage, in execution order.
    pub timings: Vec<(Stage, f64)>,
}

impl SnapshotArtifacts {
    pub fn timing(&self, stage: Stage) -> Option<f64> {
        self.timings.iter().find(|(s, _)| *s == stage).map(|(_, ms)| *ms)
    }

    pub fn snapshot_time(&self) -> u64 {
        self.corner_set.snapshot_time()
    }
}

/// Drops readings more than `stale_after_ms` older than the newest one.
pub fn fresh_readings(readings: &[SensorReading], stale_after_ms: u64) -> Vec<SensorReading> {
    let Some(newest) = readings.iter().map(|r| r.timestamp).max() else {
        return Vec::new();
    };
    let cutoff = newest.saturating_sub(stale_after_ms);
    readings.iter().filter(|r| r.timestamp >= cutoff).cloned().collect()
}

fn timed<T>(timings: &mut Vec<(Stage, f64)>, stage: Stage, f: impl FnOnce() -> AppResult<T>) -> AppResult<T> {
    let start = Instant::now();
    let out = f()?;
    timings.push((stage, start.elapsed().as_secs_f64() * 1e3));
    Ok(out)
}

/// Trains the surrogate on `volume` and samples it on the refined grid.
pub fn train_and_sample(
    volume: &VolumeGrid,
    config: &PipelineConfig,
) -> AppResult<(SurrogateModel, VolumeGrid, X3DDocument)> {
    let mut timings = Vec::new();
    train_stages(volume, config, &mut timings)
}

fn train_stages(
    volume: &VolumeGrid,
    config: &PipelineConfig,
    timings: &mut Vec<(Stage, f64)>,
) -> AppResult<(SurrogateModel, VolumeGrid, X3DDocument)> {
    let sur = &config.surrogate;
    let hyper = voxfield_core::ann::TrainParams { exec: config.exec, ..sur.train };
    let model =
        timed(timings, Stage::Train, || train_surrogate(volume, sur.hidden, &hyper, config.seed).at(Stage::Train))?;
    let refined =
        timed(timings, Stage::Sample, || sample_volume_with(&model, sur.refined_grid, config.exec).at(Stage::Sample))?;
    let doc = timed(timings, Stage::Emit, || Ok(emit_x3d(&refined, &config.colormap)))?;
    Ok((model, refined, doc))
}

/// Matches the fresh readings to the placement, builds the boundary, solves
/// the volume and emits its scene. With `train`, also fits the surrogate and
/// emits the refined scene. Errors name the failing stage.
pub fn run_pipeline_once(
    readings: &[SensorReading],
    config: &PipelineConfig,
    train: bool,
) -> AppResult<SnapshotArtifacts> {
    config.validate()?;
    let mut timings = Vec::new();
    let corner_set = timed(&mut timings, Stage::Match, || {
        let fresh = fresh_readings(readings, config.stale_after_ms());
        match_readings(&fresh, &config.domain, config.scheme, &config.field, config.match_tol).at(Stage::Match)
    })?;
    let boundary = timed(&mut timings, Stage::Boundary, || {
        assemble_boundary_with(&corner_set, config.boundary_method, config.grid_n, &config.solver, config.exec)
            .at(Stage::Boundary)
    })?;
    let volume = timed(&mut timings, Stage::Solve, || solve_laplace3d(&boundary, &config.solver).at(Stage::Solve))?;
    let x3d = timed(&mut timings, Stage::Emit, || Ok(emit_x3d(&volume, &config.colormap)))?;

    let (model, refined_volume, refined_x3d) = if train {
        let (m, r, d) = train_stages(&volume, config, &mut timings)?;
        (Some(m), Some(r), Some(d))
    } else {
        (None, None, None)
    };
    Ok(SnapshotArtifacts { corner_set, boundary, volume, model, refined_volume, x3d, refined_x3d, timings })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn reading(id: &str, t: u64) -> SensorReading {
        SensorReading::new(id, [0.0; 3], 1.0, t).unwrap()
    }

    #[test]
    fn stale_readings_are_dropped() {
        let rs = vec![reading("a", 1_000), reading("b", 200_000), reading("c", 90_000), reading("d", 80_000)];
        let fresh = fresh_readings(&rs, 120_000);
        let ids: Vec<&str> = fresh.iter().map(|r| r.sensor_id.as_str()).collect();
        assert_eq!(ids, vec!["b", "c", "d"]);
        assert!(fresh_readings(&[], 10).is_empty());
    }
}
