use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{sigmoid, NetParams, SurrogateModel, TrainingReport};
use crate::solver::VolumeGrid;
use crate::{Error, Exec, Point3, Result};

/// Samples per gradient chunk. Partial sums are reduced in chunk order, so
/// the result is identical for every [`Exec`] mode.
const GRAD_CHUNK: usize = 64;

/// A training pair; `target` is already in normalized output units.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Sample {
    pub point: Point3,
    pub target: f64,
}

/// Full-batch optimizer settings. The step rule keeps exponentially decayed
/// first and second gradient moments per parameter (Adam).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrainParams {
    pub learning_rate: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
    pub max_epochs: usize,
    /// Stop once the normalized RMSE reaches this value.
    pub rmse_target: f64,
    pub exec: Exec,
}

impl Default for TrainParams {
    fn default() -> Self {
        Self {
            learning_rate: 0.01,
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-8,
            max_epochs: 20_000,
            rmse_target: 1e-3,
            exec: Exec::default(),
        }
    }
}

impl TrainParams {
    fn validate(&self) -> Result<()> {
        let ok = self.learning_rate > 0.0
            && (0.0..1.0).contains(&self.beta1)
            && (0.0..1.0).contains(&self.beta2)
            && self.epsilon > 0.0
            && self.rmse_target >= 0.0;
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidArgument(format!("bad training parameters {self:?}")))
        }
    }
}

/// Mean squared error of the normalized outputs and its exact gradient.
pub fn loss_and_grad(params: &NetParams, samples: &[Sample]) -> (f64, NetParams) {
    loss_and_grad_with(params, samples, Exec::default())
}

pub fn loss_and_grad_with(params: &NetParams, samples: &[Sample], exec: Exec) -> (f64, NetParams) {
    assert!(!samples.is_empty(), "loss needs at least one sample");
    let chunks: Vec<&[Sample]> = samples.chunks(GRAD_CHUNK).collect();
    let partials = exec.map_slice(&chunks, |chunk| chunk_sums(params, chunk));

    let l = params.hidden();
    let mut sse = 0.0;
    let mut grad = NetParams::zeros(l);
    for (part_sse, part) in &partials {
        sse += part_sse;
        for (g, p) in grad.slices_mut().into_iter().zip(part.slices()) {
            g.iter_mut().zip(p).for_each(|(a, b)| *a += b);
        }
    }
    let m = samples.len() as f64;
    let scale = 2.0 / m;
    for g in grad.slices_mut() {
        g.iter_mut().for_each(|v| *v *= scale);
    }
    (sse / m, grad)
}

/// Sum of squared errors and the unscaled gradient sums
/// `sum (N - t) dN/dtheta` over one chunk.
fn chunk_sums(params: &NetParams, chunk: &[Sample]) -> (f64, NetParams) {
    let l = params.hidden();
    let mut g = NetParams::zeros(l);
    let mut hidden = vec![0.0; l];
    let mut sse = 0.0;
    for s in chunk {
        let p = s.point;
        let mut out = params.b2;
        for (i, h) in hidden.iter_mut().enumerate() {
            let a = params.w[i] * p[0] + params.w[l + i] * p[1] + params.w[2 * l + i] * p[2] + params.b1[i];
            *h = sigmoid(a);
            out += params.z[i] * *h;
        }
        let err = out - s.target;
        sse += err * err;
        g.b2 += err;
        for (i, &h) in hidden.iter().enumerate() {
            g.z[i] += err * h;
            let da = err * params.z[i] * h * (1.0 - h);
            g.b1[i] += da;
            g.w[i] += da * p[0];
            g.w[l + i] += da * p[1];
            g.w[2 * l + i] += da * p[2];
        }
    }
    (sse, g)
}

fn init_params(hidden: usize, seed: u64) -> NetParams {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let w_bound = 1.0 / 3f64.sqrt();
    let z_bound = 1.0 / (hidden as f64).sqrt();
    let mut p = NetParams::zeros(hidden);
    for w in &mut p.w {
        *w = rng.random_range(-w_bound..=w_bound);
    }
    for z in &mut p.z {
        *z = rng.random_range(-z_bound..=z_bound);
    }
    p
}

/// Fits a surrogate to every node of `volume` (boundary included).
///
/// Targets are rescaled to `[-1, 1]` using the volume's range. A constant
/// volume yields the constant model without any optimization. The parameters
/// returned are the best iterate seen, never worse than the initial ones.
pub fn train_surrogate(volume: &VolumeGrid, hidden: usize, hyper: &TrainParams, seed: u64) -> Result<SurrogateModel> {
    if hidden == 0 {
        return Err(Error::InvalidArgument("hidden width must be >= 1".into()));
    }
    hyper.validate()?;
    let started = Instant::now();
    let (lo, hi) = (volume.min(), volume.max());
    let n = volume.n();

    if hi == lo {
        let report = TrainingReport {
            epochs_run: 0,
            final_rmse_normalized: 0.0,
            final_rmse_field_units: 0.0,
            wall_time_ms: started.elapsed().as_millis() as u64,
            training_grid_n: n,
        };
        return SurrogateModel::from_parts(NetParams::zeros(hidden), lo, 1.0, volume.field().clone(), seed, report);
    }

    let mid = 0.5 * (hi + lo);
    let half = 0.5 * (hi - lo);
    let samples: Vec<Sample> = volume
        .nodes()
        .map(|([i, j, k], v)| Sample { point: volume.point(i, j, k), target: (v - mid) / half })
        .collect();

    let mut params = init_params(hidden, seed);
    let mut best = params.clone();
    let mut best_mse = f64::INFINITY;
    let mut m1 = NetParams::zeros(hidden);
    let mut m2 = NetParams::zeros(hidden);
    let target_mse = hyper.rmse_target * hyper.rmse_target;
    let mut epochs_run = 0;

    loop {
        let (mse, grad) = loss_and_grad_with(&params, &samples, hyper.exec);
        if mse < best_mse {
            best_mse = mse;
            best.clone_from(&params);
        }
        if mse <= target_mse || epochs_run == hyper.max_epochs {
            break;
        }
        epochs_run += 1;
        let t = epochs_run as i32;
        let c1 = 1.0 - hyper.beta1.powi(t);
        let c2 = 1.0 - hyper.beta2.powi(t);
        let slices = params.slices_mut().into_iter().zip(m1.slices_mut()).zip(m2.slices_mut());
        for (((p, a), b), g) in slices.zip(grad.slices()) {
            for idx in 0..p.len() {
                a[idx] = hyper.beta1 * a[idx] + (1.0 - hyper.beta1) * g[idx];
                b[idx] = hyper.beta2 * b[idx] + (1.0 - hyper.beta2) * g[idx] * g[idx];
                let m_hat = a[idx] / c1;
                let v_hat = b[idx] / c2;
                p[idx] -= hyper.learning_rate * m_hat / (v_hat.sqrt() + hyper.epsilon);
            }
        }
    }

    let rmse = best_mse.sqrt();
    let report = TrainingReport {
        epochs_run,
        final_rmse_normalized: rmse,
        final_rmse_field_units: rmse * half,
        wall_time_ms: started.elapsed().as_millis() as u64,
        training_grid_n: n,
    };
    SurrogateModel::from_parts(best, mid, half, volume.field().clone(), seed, report)
}
