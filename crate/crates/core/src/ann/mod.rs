//! One-hidden-layer sigmoid surrogate of a scalar field on the unit cube.
//!
//! The network is
//!
//! ```text
//! N(x, y, z) = sum_i Z_i * sigmoid(W_1i x + W_2i y + W_3i z + b1_i) + b2
//! ```
//!
//! trained on targets rescaled to `[-1, 1]`; evaluation maps back with
//! `out_mid + out_halfrange * N`.

mod format;
mod train;

pub use format::{model_from_text, model_to_text, MODEL_FORMAT_VERSION};
pub use train::{loss_and_grad, loss_and_grad_with, train_surrogate, Sample, TrainParams};

use crate::field::{FieldKind, SensorReading};
use crate::solver::{lattice_point, Provenance, VolumeGrid};
use crate::{Error, Exec, Point3, Result};

/// Default hidden width.
pub const DEFAULT_HIDDEN: usize = 32;

/// Default refined sampling grid.
pub const REFINED_GRID: usize = 16;

pub fn sigmoid(x: f64) -> f64 {
    1.0 / (1.0 + (-x).exp())
}

/// Network parameters. Also used as the gradient container.
#[derive(Debug, Clone, PartialEq)]
pub struct NetParams {
    /// Input weights, row-major `3 x L`: `w[k * L + i]` couples input `k` to
    /// hidden unit `i`.
    pub w: Vec<f64>,
    pub b1: Vec<f64>,
    pub z: Vec<f64>,
    pub b2: f64,
}

impl NetParams {
    pub fn zeros(hidden: usize) -> Self {
        Self { w: vec![0.0; 3 * hidden], b1: vec![0.0; hidden], z: vec![0.0; hidden], b2: 0.0 }
    }

    pub fn hidden(&self) -> usize {
        self.b1.len()
    }

    /// Number of scalar parameters, `5 L + 1`.
    pub fn len(&self) -> usize {
        5 * self.hidden() + 1
    }

    pub fn is_empty(&self) -> bool {
        self.hidden() == 0
    }

    /// Flat view in the order `w, b1, z, b2`.
    pub fn to_flat(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.len());
        out.extend_from_slice(&self.w);
        out.extend_from_slice(&self.b1);
        out.extend_from_slice(&self.z);
        out.push(self.b2);
        out
    }

    pub fn from_flat(hidden: usize, flat: &[f64]) -> Result<Self> {
        if flat.len() != 5 * hidden + 1 {
            return Err(Error::InvalidArgument(format!(
                "expected {} parameters for L={hidden}, got {}",
                5 * hidden + 1,
                flat.len()
            )));
        }
        let (w, rest) = flat.split_at(3 * hidden);
        let (b1, rest) = rest.split_at(hidden);
        let (z, rest) = rest.split_at(hidden);
        Ok(Self { w: w.to_vec(), b1: b1.to_vec(), z: z.to_vec(), b2: rest[0] })
    }

    pub(crate) fn slices_mut(&mut self) -> [&mut [f64]; 4] {
        [&mut self.w, &mut self.b1, &mut self.z, std::slice::from_mut(&mut self.b2)]
    }

    pub(crate) fn slices(&self) -> [&[f64]; 4] {
        [&self.w, &self.b1, &self.z, std::slice::from_ref(&self.b2)]
    }

    /// Normalized network output.
    pub fn forward(&self, p: Point3) -> f64 {
        let l = self.hidden();
        let mut out = self.b2;
        for i in 0..l {
            let a = self.w[i] * p[0] + self.w[l + i] * p[1] + self.w[2 * l + i] * p[2] + self.b1[i];
            out += self.z[i] * sigmoid(a);
        }
        out
    }

    /// Bound on `|N|`: `sum |Z_i| + |b2|`.
    pub fn output_bound(&self) -> f64 {
        self.z.iter().map(|z| z.abs()).sum::<f64>() + self.b2.abs()
    }

    /// Lipschitz constant of `N` with respect to the L1 distance between
    /// inputs: `sum_i |Z_i| max_k |W_ki| / 4`.
    pub fn lipschitz_l1(&self) -> f64 {
        let l = self.hidden();
        (0..l)
            .map(|i| {
                let wmax = (0..3).map(|k| self.w[k * l + i].abs()).fold(0.0, f64::max);
                self.z[i].abs() * wmax / 4.0
            })
            .sum()
    }

    fn all_finite(&self) -> bool {
        self.slices().iter().all(|s| s.iter().all(|v| v.is_finite()))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainingReport {
    pub epochs_run: usize,
    pub final_rmse_normalized: f64,
    pub final_rmse_field_units: f64,
    pub wall_time_ms: u64,
    pub training_grid_n: usize,
}

/// Trained network plus the output scaling and training metadata.
#[derive(Debug, Clone, PartialEq)]
pub struct SurrogateModel {
    params: NetParams,
    out_mid: f64,
    out_halfrange: f64,
    field: FieldKind,
    seed: u64,
    report: TrainingReport,
}

impl SurrogateModel {
    pub fn from_parts(
        params: NetParams,
        out_mid: f64,
        out_halfrange: f64,
        field: FieldKind,
        seed: u64,
        report: TrainingReport,
    ) -> Result<Self> {
        if params.is_empty() {
            return Err(Error::InvalidArgument("hidden width must be >= 1".into()));
        }
        let l = params.hidden();
        if params.w.len() != 3 * l || params.z.len() != l {
            return Err(Error::InvalidArgument("inconsistent parameter shapes".into()));
        }
        if !params.all_finite() || !out_mid.is_finite() {
            return Err(Error::InvalidArgument("non-finite model parameter".into()));
        }
        if !(out_halfrange > 0.0 && out_halfrange.is_finite()) {
            return Err(Error::InvalidArgument(format!("out_halfrange {out_halfrange} must be positive")));
        }
        Ok(Self { params, out_mid, out_halfrange, field, seed, report })
    }

    pub fn params(&self) -> &NetParams {
        &self.params
    }

    pub fn hidden(&self) -> usize {
        self.params.hidden()
    }

    pub fn out_mid(&self) -> f64 {
        self.out_mid
    }

    pub fn out_halfrange(&self) -> f64 {
        self.out_halfrange
    }

    pub fn field(&self) -> &FieldKind {
        &self.field
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn report(&self) -> &TrainingReport {
        &self.report
    }

    /// Field value at `p`. Points outside the unit cube are extrapolated.
    pub fn eval(&self, p: Point3) -> f64 {
        self.out_mid + self.out_halfrange * self.params.forward(p)
    }
}

/// Field-unit value of the surrogate at a normalized point.
pub fn eval_surrogate(model: &SurrogateModel, p: Point3) -> f64 {
    model.eval(p)
}

/// Evaluates the surrogate on every node of an `n_out^3` lattice.
pub fn sample_volume(model: &SurrogateModel, n_out: usize) -> Result<VolumeGrid> {
    sample_volume_with(model, n_out, Exec::default())
}

pub fn sample_volume_with(model: &SurrogateModel, n_out: usize, exec: Exec) -> Result<VolumeGrid> {
    if n_out < 2 {
        return Err(Error::InvalidArgument(format!("sample grid side {n_out} < 2")));
    }
    let n = n_out;
    let mut values = vec![0.0; n * n * n];
    // one z-slab per chunk
    exec.fill_chunks(&mut values, n * n, |slab, start| {
        for (off, v) in slab.iter_mut().enumerate() {
            let idx = start + off;
            *v = model.eval(lattice_point(n, idx % n, (idx / n) % n, idx / (n * n)));
        }
    });
    VolumeGrid::new(n, values, model.field.clone(), Provenance::SurrogateSample)
}

/// Default lower bound on the anomaly threshold, in field units.
pub const DEFAULT_ANOMALY_FLOOR: f64 = 0.5;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AnomalyVerdict {
    pub predicted: f64,
    pub score: f64,
    pub threshold: f64,
    pub flag: bool,
}

/// Compares a reading with the surrogate's prediction at its position.
///
/// `reading.position` must already be normalized to the unit cube. The
/// reading is flagged when `|value - prediction|` exceeds
/// `max(3 * training RMSE, floor)`.
pub fn anomaly_score(model: &SurrogateModel, reading: &SensorReading, floor: f64) -> AnomalyVerdict {
    let predicted = model.eval(reading.position);
    let score = (reading.value - predicted).abs();
    let threshold = (3.0 * model.report.final_rmse_field_units).max(floor);
    AnomalyVerdict { predicted, score, threshold, flag: score > threshold }
}
