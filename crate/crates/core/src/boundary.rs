//! Dirichlet data on the six faces of the unit cube.
//!
//! Each face is an `n x n` lattice with local coordinates `(u, v)` in
//! `[0, 1]^2`, stored row-major with `u` fastest. The embeddings are:
//!
//! | face   | u | v | fixed  |
//! |--------|---|---|--------|
//! | `Zmin` | x | y | z = 0  |
//! | `Ymin` | x | z | y = 0  |
//! | `Xmin` | y | z | x = 0  |
//! | `Zmax` | x | y | z = 1  |
//! | `Ymax` | x | z | y = 1  |
//! | `Xmax` | y | z | x = 1  |
//!
//! The 12 cube edges are interpolated once from the corners and copied into
//! every face that touches them, so shared nodes agree bit for bit.

use crate::field::{CornerSet, FieldKind, PlacementScheme};
use crate::solver::{lattice_coord, ResolvedParams, SolverParams, VolumeGrid};
use crate::{Error, Exec, Point3, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum FaceId {
    Zmin,
    Ymin,
    Xmin,
    Zmax,
    Ymax,
    Xmax,
}

impl FaceId {
    /// Canonical order, matching the face-center order of S2.
    pub const ALL: [FaceId; 6] = [FaceId::Zmin, FaceId::Ymin, FaceId::Xmin, FaceId::Zmax, FaceId::Ymax, FaceId::Xmax];

    pub fn ordinal(self) -> usize {
        self as usize
    }

    /// Volume lattice index of face node `(a, b)`.
    pub fn node(self, a: usize, b: usize, n: usize) -> [usize; 3] {
        let last = n - 1;
        match self {
            FaceId::Zmin => [a, b, 0],
            FaceId::Ymin => [a, 0, b],
            FaceId::Xmin => [0, a, b],
            FaceId::Zmax => [a, b, last],
            FaceId::Ymax => [a, last, b],
            FaceId::Xmax => [last, a, b],
        }
    }

    /// Normalized cube position of face coordinates `(u, v)`.
    pub fn embed(self, u: f64, v: f64) -> Point3 {
        match self {
            FaceId::Zmin => [u, v, 0.0],
            FaceId::Ymin => [u, 0.0, v],
            FaceId::Xmin => [0.0, u, v],
            FaceId::Zmax => [u, v, 1.0],
            FaceId::Ymax => [u, 1.0, v],
            FaceId::Xmax => [1.0, u, v],
        }
    }

    /// Corner values `(c00, c10, c01, c11)` of this face in `(u, v)` order.
    pub fn corner_values(self, corner_set: &CornerSet) -> [f64; 4] {
        [(0, 0), (1, 0), (0, 1), (1, 1)].map(|(a, b)| {
            let [x, y, z] = self.node(a, b, 2);
            corner_set.corner(x, y, z)
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum BoundaryMethod {
    Bilinear,
    Fd2d,
}

impl BoundaryMethod {
    pub fn as_str(self) -> &'static str {
        match self {
            BoundaryMethod::Bilinear => "bilinear",
            BoundaryMethod::Fd2d => "fd2d",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s.to_ascii_lowercase().as_str() {
            "bilinear" => Some(BoundaryMethod::Bilinear),
            "fd2d" => Some(BoundaryMethod::Fd2d),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FaceGrid {
    face: FaceId,
    n: usize,
    values: Vec<f64>,
}

impl FaceGrid {
    pub fn face(&self) -> FaceId {
        self.face
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn get(&self, a: usize, b: usize) -> f64 {
        self.values[a + self.n * b]
    }

    fn set(&mut self, a: usize, b: usize, v: f64) {
        self.values[a + self.n * b] = v;
    }
}

/// Boundary nodes of an `n x n` face, counter-clockwise from `(0, 0)`:
/// bottom row left to right, right column upward, top row right to left,
/// left column downward. `4 (n - 1)` entries.
pub fn ring_nodes(n: usize) -> Vec<(usize, usize)> {
    let last = n - 1;
    let mut ring = Vec::with_capacity(4 * last);
    ring.extend((0..last).map(|a| (a, 0)));
    ring.extend((0..last).map(|b| (last, b)));
    ring.extend((1..=last).rev().map(|a| (a, last)));
    ring.extend((1..=last).rev().map(|b| (0, b)));
    ring
}

/// Nodes pinned to the face-center reading: the center node for odd `n`,
/// the four nodes around the center for even `n`.
pub fn pin_nodes(n: usize) -> Vec<(usize, usize)> {
    if n % 2 == 1 {
        let c = (n - 1) / 2;
        vec![(c, c)]
    } else {
        let (lo, hi) = (n / 2 - 1, n / 2);
        vec![(lo, lo), (hi, lo), (lo, hi), (hi, hi)]
    }
}

/// Node values along the 12 cube edges.
#[derive(Debug, Clone, PartialEq)]
pub struct CubeEdges {
    n: usize,
    // edge id = 4 * axis + fixed bits; nodes ordered by increasing coordinate
    edges: Vec<Vec<f64>>,
}

impl CubeEdges {
    /// Edge along `axis` whose other two coordinates are `lo_hi` (each 0 or 1,
    /// in increasing axis order).
    pub fn edge(&self, axis: usize, lo_hi: [usize; 2]) -> &[f64] {
        &self.edges[4 * axis + lo_hi[0] + 2 * lo_hi[1]]
    }

    /// Value at a volume lattice index lying on an edge.
    ///
    /// # Panics
    /// If the index is not on a cube edge.
    pub fn value_at(&self, idx: [usize; 3]) -> f64 {
        let last = self.n - 1;
        let on_ext = |c: usize| c == 0 || c == last;
        let axis = (0..3)
            .find(|&d| (0..3).filter(|&e| e != d).all(|e| on_ext(idx[e])))
            .unwrap_or_else(|| panic!("node {idx:?} is not on a cube edge"));
        let others: Vec<usize> = (0..3).filter(|&e| e != axis).collect();
        let bits = [others[0], others[1]].map(|e| usize::from(idx[e] == last));
        self.edge(axis, bits)[idx[axis]]
    }
}

/// Linear interpolation of the corner readings along every cube edge.
pub fn interp_edges(corner_set: &CornerSet, n: usize) -> Result<CubeEdges> {
    if n < 2 {
        return Err(Error::InvalidArgument(format!("face grid side {n} < 2")));
    }
    let mut edges = Vec::with_capacity(12);
    for axis in 0..3 {
        let others: Vec<usize> = (0..3).filter(|&e| e != axis).collect();
        for bits in 0..4 {
            let mut lo = [0usize; 3];
            lo[others[0]] = bits & 1;
            lo[others[1]] = bits >> 1;
            let mut hi = lo;
            hi[axis] = 1;
            let a = corner_set.corner(lo[0], lo[1], lo[2]);
            let b = corner_set.corner(hi[0], hi[1], hi[2]);
            edges.push((0..n).map(|m| lerp(a, b, lattice_coord(n, m))).collect());
        }
    }
    Ok(CubeEdges { n, edges })
}

/// Exact at both endpoints and for `a == b`.
fn lerp(a: f64, b: f64, t: f64) -> f64 {
    if t == 1.0 {
        b
    } else {
        a + t * (b - a)
    }
}

/// Nested form of the bilinear blend; exact at corners, along edges and for
/// constant data.
fn bilinear(c: [f64; 4], u: f64, v: f64) -> f64 {
    lerp(lerp(c[0], c[1], u), lerp(c[2], c[3], u), v)
}

/// Bilinear fill of a face from its corners `(c00, c10, c01, c11)`.
pub fn bilinear_face(face: FaceId, corners: [f64; 4], n: usize) -> Result<FaceGrid> {
    if n < 2 {
        return Err(Error::InvalidArgument(format!("face grid side {n} < 2")));
    }
    let mut values = Vec::with_capacity(n * n);
    for b in 0..n {
        for a in 0..n {
            values.push(bilinear(corners, lattice_coord(n, a), lattice_coord(n, b)));
        }
    }
    Ok(FaceGrid { face, n, values })
}

/// 5-point Laplace solve on one face.
///
/// `ring` holds the `4 (n - 1)` Dirichlet values in [`ring_nodes`] order. With
/// `center_pin`, the nodes of [`pin_nodes`] are held at that value. Interior
/// values are clamped to the range of the Dirichlet and pin data.
pub fn fd2d_face(
    face: FaceId,
    ring: &[f64],
    center_pin: Option<f64>,
    n: usize,
    params: &SolverParams,
) -> Result<FaceGrid> {
    if n < 2 {
        return Err(Error::InvalidArgument(format!("face grid side {n} < 2")));
    }
    if ring.len() != 4 * (n - 1) {
        return Err(Error::InvalidArgument(format!("face ring needs {} values, got {}", 4 * (n - 1), ring.len())));
    }
    if ring.iter().chain(center_pin.iter()).any(|v| !v.is_finite()) {
        return Err(Error::InvalidArgument("non-finite face data".into()));
    }
    if center_pin.is_some() && n < 3 {
        return Err(Error::InvalidArgument(format!("center pin needs n >= 3, got {n}")));
    }
    let p = params.resolve(n)?;

    let mut grid = FaceGrid { face, n, values: vec![0.0; n * n] };
    let mut fixed = vec![false; n * n];
    for (&(a, b), &v) in ring_nodes(n).iter().zip(ring) {
        grid.set(a, b, v);
        fixed[a + n * b] = true;
    }
    let (mut lo, mut hi) = ring.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(l, h), &v| (l.min(v), h.max(v)));
    if let Some(pin) = center_pin {
        for (a, b) in pin_nodes(n) {
            grid.set(a, b, pin);
            fixed[a + n * b] = true;
        }
        lo = lo.min(pin);
        hi = hi.max(pin);
    }
    if n < 3 {
        return Ok(grid);
    }

    let last = n - 1;
    let corners = [grid.get(0, 0), grid.get(last, 0), grid.get(0, last), grid.get(last, last)];
    for b in 1..last {
        for a in 1..last {
            if !fixed[a + n * b] {
                grid.set(a, b, bilinear(corners, lattice_coord(n, a), lattice_coord(n, b)));
            }
        }
    }

    sor_2d(&mut grid.values, &fixed, n, &p)?;
    for (v, f) in grid.values.iter_mut().zip(&fixed) {
        if !f {
            *v = v.clamp(lo, hi);
        }
    }
    Ok(grid)
}

fn residual_2d(u: &[f64], fixed: &[bool], n: usize) -> f64 {
    let mut worst = 0.0f64;
    for b in 1..n - 1 {
        for a in 1..n - 1 {
            let idx = a + n * b;
            if fixed[idx] {
                continue;
            }
            let avg = (u[idx - 1] + u[idx + 1] + u[idx - n] + u[idx + n]) / 4.0;
            worst = worst.max((avg - u[idx]).abs());
        }
    }
    worst
}

fn sor_2d(u: &mut [f64], fixed: &[bool], n: usize, p: &ResolvedParams) -> Result<()> {
    let omega = p.relaxation;
    for _ in 0..p.max_iterations {
        let mut max_update = 0.0f64;
        for b in 1..n - 1 {
            for a in 1..n - 1 {
                let idx = a + n * b;
                if fixed[idx] {
                    continue;
                }
                let avg = (u[idx - 1] + u[idx + 1] + u[idx - n] + u[idx + n]) / 4.0;
                let delta = omega * (avg - u[idx]);
                u[idx] += delta;
                max_update = max_update.max(delta.abs());
            }
        }
        if max_update <= p.tolerance && residual_2d(u, fixed, n) <= p.tolerance {
            return Ok(());
        }
    }
    Err(Error::NotConverged { iterations: p.max_iterations, residual: residual_2d(u, fixed, n) })
}

/// Complete Dirichlet data for the 3D solve.
#[derive(Debug, Clone, PartialEq)]
pub struct BoundaryField {
    n: usize,
    faces: Vec<FaceGrid>,
    method: BoundaryMethod,
    field: FieldKind,
}

impl BoundaryField {
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn faces(&self) -> &[FaceGrid] {
        &self.faces
    }

    pub fn face(&self, id: FaceId) -> &FaceGrid {
        &self.faces[id.ordinal()]
    }

    pub fn method(&self) -> BoundaryMethod {
        self.method
    }

    pub fn field(&self) -> &FieldKind {
        &self.field
    }

    /// Value at a boundary node of the volume lattice.
    ///
    /// # Panics
    /// If `idx` is an interior node.
    pub fn value_at(&self, idx: [usize; 3]) -> f64 {
        let last = self.n - 1;
        let [i, j, k] = idx;
        let (face, a, b) = if k == 0 {
            (FaceId::Zmin, i, j)
        } else if k == last {
            (FaceId::Zmax, i, j)
        } else if j == 0 {
            (FaceId::Ymin, i, k)
        } else if j == last {
            (FaceId::Ymax, i, k)
        } else if i == 0 {
            (FaceId::Xmin, j, k)
        } else if i == last {
            (FaceId::Xmax, j, k)
        } else {
            panic!("node {idx:?} is interior")
        };
        self.face(face).get(a, b)
    }

    /// Restricts a volume to its boundary layer. Useful for arbitrary
    /// (non-corner-derived) Dirichlet data.
    pub fn from_volume(volume: &VolumeGrid, method: BoundaryMethod) -> Self {
        let n = volume.n();
        let faces = FaceId::ALL
            .iter()
            .map(|&face| {
                let mut values = Vec::with_capacity(n * n);
                for b in 0..n {
                    for a in 0..n {
                        let [i, j, k] = face.node(a, b, n);
                        values.push(volume.get(i, j, k));
                    }
                }
                FaceGrid { face, n, values }
            })
            .collect();
        Self { n, faces, method, field: volume.field().clone() }
    }

    /// Largest disagreement between faces on shared nodes; 0 for any field
    /// built by this module.
    pub fn edge_mismatch(&self) -> f64 {
        let n = self.n;
        let mut seen: std::collections::HashMap<[usize; 3], f64> = Default::default();
        let mut worst = 0.0f64;
        for face in &self.faces {
            for b in 0..n {
                for a in 0..n {
                    let v = face.get(a, b);
                    let key = face.face.node(a, b, n);
                    match seen.get(&key) {
                        Some(&w) => worst = worst.max((w - v).abs()),
                        None => {
                            seen.insert(key, v);
                        }
                    }
                }
            }
        }
        worst
    }

    pub fn min(&self) -> f64 {
        self.faces.iter().flat_map(|f| f.values.iter().copied()).fold(f64::INFINITY, f64::min)
    }

    pub fn max(&self) -> f64 {
        self.faces.iter().flat_map(|f| f.values.iter().copied()).fold(f64::NEG_INFINITY, f64::max)
    }
}

/// Builds the six faces from a snapshot. See [`assemble_boundary_with`].
pub fn assemble_boundary(
    corner_set: &CornerSet,
    method: BoundaryMethod,
    n: usize,
    params: &SolverParams,
) -> Result<BoundaryField> {
    assemble_boundary_with(corner_set, method, n, params, Exec::default())
}

/// Edges are interpolated once and shared. `Bilinear` fills each face from
/// its corners; `Fd2d` solves each face with the edges as Dirichlet data and,
/// for S2 snapshots, the face-center reading as a pin. Face solves run
/// concurrently under [`Exec::Parallel`].
pub fn assemble_boundary_with(
    corner_set: &CornerSet,
    method: BoundaryMethod,
    n: usize,
    params: &SolverParams,
    exec: Exec,
) -> Result<BoundaryField> {
    let edges = interp_edges(corner_set, n)?;
    let ring_idx = ring_nodes(n);
    let faces = exec.map_slice(&FaceId::ALL, |&face| -> Result<FaceGrid> {
        let ring: Vec<f64> = ring_idx.iter().map(|&(a, b)| edges.value_at(face.node(a, b, n))).collect();
        let mut grid = match method {
            BoundaryMethod::Bilinear => bilinear_face(face, face.corner_values(corner_set), n)?,
            BoundaryMethod::Fd2d => {
                let pin = match corner_set.scheme() {
                    PlacementScheme::S2CornersPlusCenters14 => corner_set.face_center(face.ordinal()),
                    PlacementScheme::S1Corners8 => None,
                };
                fd2d_face(face, &ring, pin, n, params)?
            }
        };
        for (&(a, b), &v) in ring_idx.iter().zip(&ring) {
            grid.set(a, b, v);
        }
        Ok(grid)
    });
    Ok(BoundaryField { n, faces: faces.into_iter().collect::<Result<_>>()?, method, field: corner_set.field().clone() })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::canonical_placement;
    use proptest::prelude::*;

    const REFERENCE: [f64; 8] = [19.0, 20.0, 26.0, 27.0, 20.0, 21.0, 25.0, 26.0];

    fn corners(values: [f64; 8]) -> CornerSet {
        CornerSet::new(PlacementScheme::S1Corners8, values.to_vec(), FieldKind::temperature(), 0).unwrap()
    }

    #[test]
    fn ring_layout() {
        let ring = ring_nodes(4);
        assert_eq!(ring.len(), 12);
        assert_eq!(ring[0], (0, 0));
        assert_eq!(ring[3], (3, 0));
        assert_eq!(ring[6], (3, 3));
        assert_eq!(ring[9], (0, 3));
        assert_eq!(ring[11], (0, 1));
        let mut sorted = ring.clone();
        sorted.sort();
        sorted.dedup();
        assert_eq!(sorted.len(), 12);
    }

    #[test]
    fn pins_by_parity() {
        assert_eq!(pin_nodes(9), vec![(4, 4)]);
        assert_eq!(pin_nodes(8), vec![(3, 3), (4, 3), (3, 4), (4, 4)]);
    }

    #[test]
    fn edge_examples() {
        // x-edge at y=0,z=0 joins corners 19 (origin) and 20
        let e = interp_edges(&corners(REFERENCE), 8).unwrap();
        for (i, v) in e.edge(0, [0, 0]).iter().enumerate() {
            assert!((v - (19.0 + i as f64 / 7.0)).abs() < 1e-12);
        }
        let flat = interp_edges(&corners([20.0; 8]), 8).unwrap();
        assert!(flat.edge(2, [1, 1]).iter().all(|v| *v == 20.0));
        // y-edge at x=0,z=0 joins 19 and 26; z... use a custom pair 19/27
        let mut c = [0.0; 8];
        c[0] = 19.0;
        c[4] = 27.0;
        let e = interp_edges(&corners(c), 9).unwrap();
        assert_eq!(e.edge(2, [0, 0])[4], 23.0);
        assert_eq!(e.value_at([0, 0, 4]), 23.0);
    }

    #[test]
    fn bilinear_examples() {
        let f = bilinear_face(FaceId::Zmin, [19.0, 20.0, 26.0, 27.0], 9).unwrap();
        assert_eq!(f.get(0, 0), 19.0);
        assert_eq!(f.get(8, 0), 20.0);
        assert_eq!(f.get(0, 8), 26.0);
        assert_eq!(f.get(8, 8), 27.0);
        assert_eq!(f.get(4, 4), 23.0);
        let flat = bilinear_face(FaceId::Xmax, [20.0; 4], 5).unwrap();
        assert!(flat.values().iter().all(|v| *v == 20.0));
    }

    #[test]
    fn fd2d_constant_and_affine() {
        let params = SolverParams::default();
        let f = fd2d_face(FaceId::Zmin, &[22.0; 28], None, 8, &params).unwrap();
        assert!(f.values().iter().all(|v| (v - 22.0).abs() <= 1e-9));

        let affine = |u: f64, v: f64| 1.5 - 2.0 * u + 0.75 * v;
        let n = 10;
        let ring: Vec<f64> =
            ring_nodes(n).iter().map(|&(a, b)| affine(lattice_coord(n, a), lattice_coord(n, b))).collect();
        let f = fd2d_face(FaceId::Ymax, &ring, None, n, &params).unwrap();
        for b in 0..n {
            for a in 0..n {
                assert!((f.get(a, b) - affine(lattice_coord(n, a), lattice_coord(n, b))).abs() <= 1e-8);
            }
        }
    }

    #[test]
    fn fd2d_rejects_bad_input() {
        let params = SolverParams::default();
        assert!(fd2d_face(FaceId::Zmin, &[0.0; 27], None, 8, &params).is_err());
        assert!(fd2d_face(FaceId::Zmin, &[0.0; 4], Some(1.0), 2, &params).is_err());
        let tight = SolverParams { max_iterations: Some(1), ..Default::default() };
        let mut ring = vec![0.0; 28];
        ring[5] = 10.0;
        assert!(matches!(fd2d_face(FaceId::Zmin, &ring, None, 8, &tight), Err(Error::NotConverged { .. })));
    }

    #[test]
    fn fd2d_pinned_center_symmetry() {
        let n = 9;
        let f = fd2d_face(FaceId::Zmin, &vec![0.0; 32], Some(1.0), n, &SolverParams::default()).unwrap();
        assert_eq!(f.get(4, 4), 1.0);
        for b in 1..n - 1 {
            for a in 1..n - 1 {
                if (a, b) == (4, 4) {
                    continue;
                }
                let v = f.get(a, b);
                assert!(v > 0.0 && v < 1.0);
                assert!((v - f.get(n - 1 - a, b)).abs() < 1e-9);
                assert!((v - f.get(a, n - 1 - b)).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn assemble_reference_bilinear() {
        let b = assemble_boundary(&corners(REFERENCE), BoundaryMethod::Bilinear, 8, &SolverParams::default()).unwrap();
        let z = b.face(FaceId::Zmin);
        assert_eq!([z.get(0, 0), z.get(7, 0), z.get(0, 7), z.get(7, 7)], [19.0, 20.0, 26.0, 27.0]);
        assert_eq!(b.edge_mismatch(), 0.0);
    }

    #[test]
    fn assemble_constant_both_methods() {
        for method in [BoundaryMethod::Bilinear, BoundaryMethod::Fd2d] {
            let b = assemble_boundary(&corners([20.0; 8]), method, 8, &SolverParams::default()).unwrap();
            assert_eq!(b.faces().len(), 6);
            assert!(b.faces().iter().all(|f| f.values().len() == 64));
            assert!(b.faces().iter().flat_map(|f| f.values()).all(|v| (v - 20.0).abs() <= 1e-12));
        }
    }

    #[test]
    fn assemble_s2_pins_centers() {
        let mut values = REFERENCE.to_vec();
        values.extend([23.5, 21.0, 22.0, 24.0, 25.5, 23.0]);
        let cs = CornerSet::new(PlacementScheme::S2CornersPlusCenters14, values, FieldKind::temperature(), 0).unwrap();
        let b = assemble_boundary(&cs, BoundaryMethod::Fd2d, 9, &SolverParams::default()).unwrap();
        assert_eq!(b.face(FaceId::Zmin).get(4, 4), 23.5);
        assert_eq!(b.face(FaceId::Xmax).get(4, 4), 23.0);
        assert_eq!(b.edge_mismatch(), 0.0);

        let even = assemble_boundary(&cs, BoundaryMethod::Fd2d, 8, &SolverParams::default()).unwrap();
        for (a, bb) in pin_nodes(8) {
            assert_eq!(even.face(FaceId::Ymax).get(a, bb), 25.5);
        }
    }

    #[test]
    fn exec_modes_match() {
        let mut values = REFERENCE.to_vec();
        values.extend([23.5, 21.0, 22.0, 24.0, 25.5, 23.0]);
        let cs = CornerSet::new(PlacementScheme::S2CornersPlusCenters14, values, FieldKind::temperature(), 0).unwrap();
        let p = SolverParams::default();
        let a = assemble_boundary_with(&cs, BoundaryMethod::Fd2d, 12, &p, Exec::Sequential).unwrap();
        let b = assemble_boundary_with(&cs, BoundaryMethod::Fd2d, 12, &p, Exec::Parallel).unwrap();
        assert_eq!(a, b);
    }

    fn arb_values(count: usize) -> impl Strategy<Value = Vec<f64>> {
        proptest::collection::vec(-40.0..60.0f64, count)
    }

    proptest! {
        #[test]
        fn corners_and_edges_consistent(v in arb_values(14), n in 3usize..12, s2 in any::<bool>(), fd in any::<bool>()) {
            let scheme = if s2 { PlacementScheme::S2CornersPlusCenters14 } else { PlacementScheme::S1Corners8 };
            let cs = CornerSet::new(scheme, v[..scheme.point_count()].to_vec(), FieldKind::temperature(), 0).unwrap();
            let method = if fd { BoundaryMethod::Fd2d } else { BoundaryMethod::Bilinear };
            let b = assemble_boundary(&cs, method, n, &SolverParams::default()).unwrap();
            prop_assert_eq!(b.edge_mismatch(), 0.0);
            for (p, val) in cs.iter().take(8) {
                let idx = p.map(|c| c as usize * (n - 1));
                prop_assert_eq!(b.value_at(idx), val);
            }
        }

        #[test]
        fn bilinear_linear_precision(a in -10.0..10.0f64, bx in -5.0..5.0f64, cy in -5.0..5.0f64, dz in -5.0..5.0f64, n in 2usize..10) {
            let f = |p: Point3| a + bx * p[0] + cy * p[1] + dz * p[2];
            let vals: Vec<f64> = canonical_placement(PlacementScheme::S1Corners8).iter().map(|p| f(*p)).collect();
            let cs = CornerSet::new(PlacementScheme::S1Corners8, vals, FieldKind::temperature(), 0).unwrap();
            let b = assemble_boundary(&cs, BoundaryMethod::Bilinear, n, &SolverParams::default()).unwrap();
            for face in FaceId::ALL {
                for bb in 0..n {
                    for aa in 0..n {
                        let p = face.embed(lattice_coord(n, aa), lattice_coord(n, bb));
                        prop_assert!((b.face(face).get(aa, bb) - f(p)).abs() <= 1e-12);
                    }
                }
            }
        }

        #[test]
        fn fd2d_max_principle(ring in arb_values(4 * 8), pin in proptest::option::of(-40.0..60.0f64)) {
            let f = fd2d_face(FaceId::Xmin, &ring, pin, 9, &SolverParams::default()).unwrap();
            let lo = ring.iter().chain(pin.iter()).copied().fold(f64::INFINITY, f64::min);
            let hi = ring.iter().chain(pin.iter()).copied().fold(f64::NEG_INFINITY, f64::max);
            prop_assert!(f.values().iter().all(|v| *v >= lo && *v <= hi));
        }
    }
}
