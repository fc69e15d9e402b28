//! Finite-difference solve of the steady-state (Laplace) problem on the unit
//! cube with Dirichlet data, plus the closed-form trilinear reference.

use std::f64::consts::PI;

use crate::boundary::BoundaryField;
use crate::field::{CornerSet, FieldKind};
use crate::{Error, Exec, Point3, Result};

pub const DEFAULT_TOLERANCE: f64 = 1e-10;

/// Where a volume's values came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Provenance {
    FdSolve,
    SurrogateSample,
    Predefined,
}

impl Provenance {
    pub fn as_str(self) -> &'static str {
        match self {
            Provenance::FdSolve => "fd_solve",
            Provenance::SurrogateSample => "surrogate_sample",
            Provenance::Predefined => "predefined",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "fd_solve" => Some(Provenance::FdSolve),
            "surrogate_sample" => Some(Provenance::SurrogateSample),
            "predefined" => Some(Provenance::Predefined),
            _ => None,
        }
    }
}

/// `n^3` samples on the regular lattice of the unit cube.
///
/// Node `(i, j, k)` sits at `(i, j, k) / (n - 1)` and is stored at
/// `i + n * (j + n * k)`, so `i` runs fastest.
#[derive(Debug, Clone, PartialEq)]
pub struct VolumeGrid {
    n: usize,
    values: Vec<f64>,
    field: FieldKind,
    provenance: Provenance,
}

impl VolumeGrid {
    pub fn new(n: usize, values: Vec<f64>, field: FieldKind, provenance: Provenance) -> Result<Self> {
        if n < 2 {
            return Err(Error::InvalidArgument(format!("grid side {n} < 2")));
        }
        if values.len() != n * n * n {
            return Err(Error::InvalidArgument(format!(
                "expected {} values for n={n}, got {}",
                n * n * n,
                values.len()
            )));
        }
        if let Some(pos) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::InvalidArgument(format!("non-finite value at index {pos}")));
        }
        Ok(Self { n, values, field, provenance })
    }

    /// Samples `f(x, y, z)` at every lattice node.
    pub fn from_fn(n: usize, field: FieldKind, provenance: Provenance, f: impl Fn(Point3) -> f64) -> Result<Self> {
        let mut values = Vec::with_capacity(n * n * n);
        for k in 0..n {
            for j in 0..n {
                for i in 0..n {
                    values.push(f(lattice_point(n, i, j, k)));
                }
            }
        }
        Self::new(n, values, field, provenance)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn field(&self) -> &FieldKind {
        &self.field
    }

    pub fn provenance(&self) -> Provenance {
        self.provenance
    }

    pub fn index(&self, i: usize, j: usize, k: usize) -> usize {
        i + self.n * (j + self.n * k)
    }

    pub fn get(&self, i: usize, j: usize, k: usize) -> f64 {
        self.values[self.index(i, j, k)]
    }

    pub fn point(&self, i: usize, j: usize, k: usize) -> Point3 {
        lattice_point(self.n, i, j, k)
    }

    pub fn is_boundary(&self, i: usize, j: usize, k: usize) -> bool {
        let last = self.n - 1;
        i == 0 || j == 0 || k == 0 || i == last || j == last || k == last
    }

    pub fn min(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn max(&self) -> f64 {
        self.values.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    /// `((i, j, k), value)` in storage order.
    pub fn nodes(&self) -> impl Iterator<Item = ([usize; 3], f64)> + '_ {
        let n = self.n;
        self.values.iter().enumerate().map(move |(idx, v)| ([idx % n, (idx / n) % n, idx / (n * n)], *v))
    }
}

pub fn lattice_coord(n: usize, i: usize) -> f64 {
    i as f64 / (n - 1) as f64
}

pub fn lattice_point(n: usize, i: usize, j: usize, k: usize) -> Point3 {
    [lattice_coord(n, i), lattice_coord(n, j), lattice_coord(n, k)]
}

/// Iteration controls for the SOR sweeps. `None` fields take the grid-size
/// dependent defaults of [`SolverParams::resolve`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolverParams {
    /// Max-norm threshold for both the last sweep's update and the residual.
    pub tolerance: f64,
    /// Defaults to `200 n^2`.
    pub max_iterations: Option<usize>,
    /// Relaxation factor in `(0, 2)`; defaults to `2 / (1 + sin(pi / (n - 1)))`.
    pub relaxation: Option<f64>,
}

impl Default for SolverParams {
    fn default() -> Self {
        Self { tolerance: DEFAULT_TOLERANCE, max_iterations: None, relaxation: None }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ResolvedParams {
    pub tolerance: f64,
    pub max_iterations: usize,
    pub relaxation: f64,
}

impl SolverParams {
    pub fn resolve(&self, n: usize) -> Result<ResolvedParams> {
        if !(self.tolerance > 0.0 && self.tolerance.is_finite()) {
            return Err(Error::InvalidArgument(format!("solver tolerance {} must be positive", self.tolerance)));
        }
        let relaxation = self.relaxation.unwrap_or_else(|| default_relaxation(n));
        if !(relaxation > 0.0 && relaxation < 2.0) {
            return Err(Error::InvalidArgument(format!("relaxation {relaxation} outside (0, 2)")));
        }
        Ok(ResolvedParams {
            tolerance: self.tolerance,
            max_iterations: self.max_iterations.unwrap_or(200 * n * n),
            relaxation,
        })
    }
}

/// Optimal SOR factor for the model problem with spacing `1/(n-1)`.
pub fn default_relaxation(n: usize) -> f64 {
    if n < 3 {
        return 1.0;
    }
    2.0 / (1.0 + (PI / (n - 1) as f64).sin())
}

/// Trilinear blend of 8 corner values given in canonical order
/// (`x` fastest, then `y`, then `z`).
pub fn trilinear(corners: &[f64; 8], p: Point3) -> f64 {
    let lerp = |a: f64, b: f64, t: f64| (1.0 - t) * a + t * b;
    let [x, y, z] = p;
    let c00 = lerp(corners[0], corners[1], x);
    let c10 = lerp(corners[2], corners[3], x);
    let c01 = lerp(corners[4], corners[5], x);
    let c11 = lerp(corners[6], corners[7], x);
    lerp(lerp(c00, c10, y), lerp(c01, c11, y), z)
}

/// Trilinear interpolant of the corner readings (face centers, if any, are
/// not used).
pub fn trilinear_reference(corner_set: &CornerSet, p: Point3) -> f64 {
    trilinear(&corner_set.corners(), p)
}

/// Max over interior nodes of `|6 u - sum(neighbors)| / 6`.
pub fn discrete_residual(volume: &VolumeGrid) -> f64 {
    residual_of(volume.n, &volume.values)
}

fn residual_of(n: usize, u: &[f64]) -> f64 {
    let (sy, sz) = (n, n * n);
    let mut worst = 0.0f64;
    for k in 1..n - 1 {
        for j in 1..n - 1 {
            for i in 1..n - 1 {
                let idx = i + sy * j + sz * k;
                let sum = u[idx - 1] + u[idx + 1] + u[idx - sy] + u[idx + sy] + u[idx - sz] + u[idx + sz];
                worst = worst.max((6.0 * u[idx] - sum).abs() / 6.0);
            }
        }
    }
    worst
}

/// Solves the 7-point discrete Laplace equation with the boundary as
/// Dirichlet data.
///
/// Gauss-Seidel with over-relaxation, lexicographic `(k, j, i)` sweeps, warm
/// started from the trilinear blend of the 8 boundary corners. Stops once both
/// the largest update of a sweep and the residual are within tolerance.
pub fn solve_laplace3d(boundary: &BoundaryField, params: &SolverParams) -> Result<VolumeGrid> {
    let n = boundary.n();
    if n < 3 {
        return Err(Error::InvalidArgument(format!("3D solve needs n >= 3, got {n}")));
    }
    let p = params.resolve(n)?;
    let corners: [f64; 8] =
        std::array::from_fn(|c| boundary.value_at([(c & 1) * (n - 1), ((c >> 1) & 1) * (n - 1), (c >> 2) * (n - 1)]));

    let mut u = vec![0.0; n * n * n];
    let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
    for k in 0..n {
        for j in 0..n {
            for i in 0..n {
                let idx = i + n * (j + n * k);
                let last = n - 1;
                if i == 0 || j == 0 || k == 0 || i == last || j == last || k == last {
                    let v = boundary.value_at([i, j, k]);
                    lo = lo.min(v);
                    hi = hi.max(v);
                    u[idx] = v;
                } else {
                    u[idx] = trilinear(&corners, lattice_point(n, i, j, k));
                }
            }
        }
    }

    let (sy, sz) = (n, n * n);
    let omega = p.relaxation;
    let mut converged = false;
    let mut iterations = 0;
    while iterations < p.max_iterations {
        iterations += 1;
        let mut max_update = 0.0f64;
        for k in 1..n - 1 {
            for j in 1..n - 1 {
                for i in 1..n - 1 {
                    let idx = i + sy * j + sz * k;
                    let avg = (u[idx - 1] + u[idx + 1] + u[idx - sy] + u[idx + sy] + u[idx - sz] + u[idx + sz]) / 6.0;
                    let delta = omega * (avg - u[idx]);
                    u[idx] += delta;
                    max_update = max_update.max(delta.abs());
                }
            }
        }
        if max_update <= p.tolerance && residual_of(n, &u) <= p.tolerance {
            converged = true;
            break;
        }
    }
    if !converged {
        return Err(Error::NotConverged { iterations, residual: residual_of(n, &u) });
    }

    // The exact solution lies in [lo, hi]; project away sub-tolerance overshoot.
    for k in 1..n - 1 {
        for j in 1..n - 1 {
            for i in 1..n - 1 {
                let idx = i + sy * j + sz * k;
                u[idx] = u[idx].clamp(lo, hi);
            }
        }
    }
    VolumeGrid::new(n, u, boundary.field().clone(), Provenance::FdSolve)
}

/// Solves independent problems, concurrently under [`Exec::Parallel`].
/// Each solve is itself sequential, so results do not depend on `exec`.
pub fn solve_many(boundaries: &[BoundaryField], params: &SolverParams, exec: Exec) -> Vec<Result<VolumeGrid>> {
    exec.map_slice(boundaries, |b| solve_laplace3d(b, params))
}
