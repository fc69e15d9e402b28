//! Domains, normalization to the unit cube, canonical sensor placements and
//! snapshot assembly.
//!
//! Axis convention used everywhere: `x` runs left to right, `y` bottom to top,
//! `z` front to back. A "front-bottom-left" sensor therefore sits at
//! normalized `(0, 0, 0)` and "back-top-right" at `(1, 1, 1)`.

use std::fmt;

use crate::{Error, Point3, Result};

/// Default Chebyshev matching tolerance in normalized units.
pub const DEFAULT_MATCH_TOL: f64 = 0.05;

/// Axis-aligned box in meters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Domain {
    min: Point3,
    max: Point3,
}

impl Domain {
    pub fn new(min: Point3, max: Point3) -> Result<Self> {
        for d in 0..3 {
            if !(min[d].is_finite() && max[d].is_finite()) {
                return Err(Error::InvalidDomain(format!("non-finite bound on axis {d}")));
            }
            if max[d] <= min[d] {
                return Err(Error::InvalidDomain(format!("axis {d}: max {} must exceed min {}", max[d], min[d])));
            }
        }
        Ok(Self { min, max })
    }

    /// The normalized domain `[0, 1]^3`.
    pub fn unit() -> Self {
        Self { min: [0.0; 3], max: [1.0; 3] }
    }

    pub fn min_corner(&self) -> Point3 {
        self.min
    }

    pub fn max_corner(&self) -> Point3 {
        self.max
    }

    pub fn extent(&self) -> Point3 {
        [0, 1, 2].map(|d| self.max[d] - self.min[d])
    }

    pub fn volume(&self) -> f64 {
        self.extent().iter().product()
    }

    pub fn contains(&self, p: Point3) -> bool {
        (0..3).all(|d| p[d] >= self.min[d] && p[d] <= self.max[d])
    }

    /// Maps a point of the domain (bounds inclusive) onto `[0, 1]^3`.
    pub fn normalize_point(&self, p: Point3) -> Result<Point3> {
        for (d, &value) in p.iter().enumerate() {
            let (min, max) = (self.min[d], self.max[d]);
            // NaN fails the range check and is rejected here too.
            if !(min..=max).contains(&value) {
                return Err(Error::OutOfBounds { axis: d, value, min, max });
            }
        }
        Ok([0, 1, 2].map(|d| (p[d] - self.min[d]) / (self.max[d] - self.min[d])))
    }

    /// Inverse of [`Domain::normalize_point`]; exact at the corners.
    pub fn denormalize_point(&self, q: Point3) -> Point3 {
        [0, 1, 2].map(|d| if q[d] == 1.0 { self.max[d] } else { self.min[d] + q[d] * (self.max[d] - self.min[d]) })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum FieldName {
    Temperature,
    NitrogenCompound,
}

impl FieldName {
    pub fn as_str(&self) -> &'static str {
        match self {
            FieldName::Temperature => "temperature",
            FieldName::NitrogenCompound => "nitrogen",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "temperature" => Some(FieldName::Temperature),
            "nitrogen" => Some(FieldName::NitrogenCompound),
            _ => None,
        }
    }
}

/// Which physical quantity a field carries.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct FieldKind {
    name: FieldName,
    unit: String,
    compound_label: Option<String>,
}

impl FieldKind {
    pub fn new(name: FieldName, unit: &str, compound_label: Option<&str>) -> Result<Self> {
        let unit = unit.trim();
        if unit.is_empty() || unit.contains(char::is_whitespace) {
            return Err(Error::InvalidArgument(format!("bad unit {unit:?}")));
        }
        if let Some(label) = compound_label {
            if label.is_empty() || label == "-" || label.contains(char::is_whitespace) {
                return Err(Error::InvalidArgument(format!("bad compound label {label:?}")));
            }
        }
        Ok(Self { name, unit: unit.to_string(), compound_label: compound_label.map(str::to_string) })
    }

    /// Air or water temperature in degrees Celsius.
    pub fn temperature() -> Self {
        Self { name: FieldName::Temperature, unit: "°C".to_string(), compound_label: None }
    }

    /// Dissolved nitrogen compound concentration in mg/L, e.g. `NH3`, `NO3`.
    pub fn nitrogen(compound: &str) -> Result<Self> {
        Self::new(FieldName::NitrogenCompound, "mg/L", Some(compound))
    }

    pub fn name(&self) -> FieldName {
        self.name
    }

    pub fn unit(&self) -> &str {
        &self.unit
    }

    pub fn compound_label(&self) -> Option<&str> {
        self.compound_label.as_deref()
    }
}

impl Default for FieldKind {
    fn default() -> Self {
        Self::temperature()
    }
}

/// Sensor identifier, `[A-Za-z0-9_-]{1,32}`.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct SensorId(String);

impl SensorId {
    pub const MAX_LEN: usize = 32;

    pub fn new(id: &str) -> Result<Self> {
        if is_valid_id(id) {
            Ok(Self(id.to_string()))
        } else {
            Err(Error::InvalidReading(format!("bad sensor id {id:?}")))
        }
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl fmt::Display for SensorId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

pub(crate) fn is_valid_id(id: &str) -> bool {
    !id.is_empty()
        && id.len() <= SensorId::MAX_LEN
        && id.bytes().all(|b| b.is_ascii_alphanumeric() || b == b'_' || b == b'-')
}

/// One timestamped sample.
#[derive(Debug, Clone, PartialEq)]
pub struct SensorReading {
    pub sensor_id: SensorId,
    /// Meters, in the coordinates of the room's [`Domain`].
    pub position: Point3,
    pub value: f64,
    /// Unix time in milliseconds.
    pub timestamp: u64,
}

impl SensorReading {
    pub fn new(sensor_id: &str, position: Point3, value: f64, timestamp: u64) -> Result<Self> {
        if !value.is_finite() {
            return Err(Error::InvalidReading(format!("non-finite value from {sensor_id}")));
        }
        if position.iter().any(|c| !c.is_finite()) {
            return Err(Error::InvalidReading(format!("non-finite position from {sensor_id}")));
        }
        Ok(Self { sensor_id: SensorId::new(sensor_id)?, position, value, timestamp })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum PlacementScheme {
    /// The 8 cube corners.
    S1Corners8,
    /// Corners plus the 6 face centers.
    S2CornersPlusCenters14,
}

impl PlacementScheme {
    pub fn point_count(self) -> usize {
        match self {
            PlacementScheme::S1Corners8 => 8,
            PlacementScheme::S2CornersPlusCenters14 => 14,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            PlacementScheme::S1Corners8 => "s1",
            PlacementScheme::S2CornersPlusCenters14 => "s2",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s.to_ascii_lowercase().as_str() {
            "s1" => Some(PlacementScheme::S1Corners8),
            "s2" => Some(PlacementScheme::S2CornersPlusCenters14),
            _ => None,
        }
    }
}

/// Normalized sensor positions of a scheme.
///
/// Corners come first in `(z, y, x)` lexicographic order, then the face
/// centers in the order `z=0, y=0, x=0, z=1, y=1, x=1`.
pub fn canonical_placement(scheme: PlacementScheme) -> Vec<Point3> {
    let mut points = Vec::with_capacity(scheme.point_count());
    for z in 0..2 {
        for y in 0..2 {
            for x in 0..2 {
                points.push([x as f64, y as f64, z as f64]);
            }
        }
    }
    if scheme == PlacementScheme::S2CornersPlusCenters14 {
        points.extend_from_slice(&FACE_CENTERS);
    }
    points
}

/// Face centers in canonical order (same order as [`crate::boundary::FaceId::ALL`]).
pub const FACE_CENTERS: [Point3; 6] =
    [[0.5, 0.5, 0.0], [0.5, 0.0, 0.5], [0.0, 0.5, 0.5], [0.5, 0.5, 1.0], [0.5, 1.0, 0.5], [1.0, 0.5, 0.5]];

/// Index of corner `(x, y, z)`, each in `{0, 1}`, in canonical order.
pub fn corner_index(x: usize, y: usize, z: usize) -> usize {
    debug_assert!(x < 2 && y < 2 && z < 2);
    x + 2 * y + 4 * z
}

/// One value per canonical point of a scheme.
#[derive(Debug, Clone, PartialEq)]
pub struct CornerSet {
    values: Vec<f64>,
    scheme: PlacementScheme,
    field: FieldKind,
    snapshot_time: u64,
}

impl CornerSet {
    /// `values` follow [`canonical_placement`] order.
    pub fn new(scheme: PlacementScheme, values: Vec<f64>, field: FieldKind, snapshot_time: u64) -> Result<Self> {
        if values.len() != scheme.point_count() {
            return Err(Error::InvalidArgument(format!(
                "scheme {} needs {} values, got {}",
                scheme.as_str(),
                scheme.point_count(),
                values.len()
            )));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidArgument("non-finite corner value".into()));
        }
        Ok(Self { values, scheme, field, snapshot_time })
    }

    pub fn scheme(&self) -> PlacementScheme {
        self.scheme
    }

    pub fn field(&self) -> &FieldKind {
        &self.field
    }

    pub fn snapshot_time(&self) -> u64 {
        self.snapshot_time
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn corner(&self, x: usize, y: usize, z: usize) -> f64 {
        self.values[corner_index(x, y, z)]
    }

    /// The 8 corner values in canonical order.
    pub fn corners(&self) -> [f64; 8] {
        std::array::from_fn(|i| self.values[i])
    }

    /// Center reading of face `face` (canonical face order), S2 only.
    pub fn face_center(&self, face: usize) -> Option<f64> {
        self.values.get(8 + face).copied()
    }

    /// Value at an exact canonical point.
    pub fn get(&self, p: Point3) -> Option<f64> {
        canonical_placement(self.scheme).iter().position(|q| *q == p).map(|i| self.values[i])
    }

    pub fn iter(&self) -> impl Iterator<Item = (Point3, f64)> + '_ {
        canonical_placement(self.scheme).into_iter().zip(self.values.iter().copied())
    }

    /// Same values with the scheme reduced to the 8 corners.
    pub fn to_corners_only(&self) -> CornerSet {
        CornerSet {
            values: self.values[..8].to_vec(),
            scheme: PlacementScheme::S1Corners8,
            field: self.field.clone(),
            snapshot_time: self.snapshot_time,
        }
    }

    /// Synthesizes one reading per canonical point, positioned in `domain`.
    /// Ids are `p00`, `p01`, ... in canonical order.
    pub fn to_readings(&self, domain: &Domain) -> Vec<SensorReading> {
        self.iter()
            .enumerate()
            .map(|(i, (p, v))| SensorReading {
                sensor_id: SensorId(format!("p{i:02}")),
                position: domain.denormalize_point(p),
                value: v,
                timestamp: self.snapshot_time,
            })
            .collect()
    }
}

/// Assembles a [`CornerSet`] from raw readings.
///
/// Each canonical point takes the value of the newest reading within `tol`
/// (Chebyshev distance, normalized units); ties on timestamp go to the
/// lexicographically larger sensor id. Readings that match no canonical point
/// are ignored.
pub fn match_readings(
    readings: &[SensorReading],
    domain: &Domain,
    scheme: PlacementScheme,
    field: &FieldKind,
    tol: f64,
) -> Result<CornerSet> {
    if !(tol > 0.0 && tol < 0.25) {
        return Err(Error::InvalidArgument(format!("match tolerance {tol} outside (0, 0.25)")));
    }
    let normalized = readings.iter().map(|r| domain.normalize_point(r.position)).collect::<Result<Vec<_>>>()?;

    let targets = canonical_placement(scheme);
    let mut best: Vec<Option<&SensorReading>> = vec![None; targets.len()];
    for (reading, q) in readings.iter().zip(&normalized) {
        for (slot, target) in best.iter_mut().zip(&targets) {
            let dist = (0..3).map(|d| (q[d] - target[d]).abs()).fold(0.0, f64::max);
            if dist > tol {
                continue;
            }
            let newer = match slot {
                None => true,
                Some(cur) => (reading.timestamp, &reading.sensor_id) > (cur.timestamp, &cur.sensor_id),
            };
            if newer {
                *slot = Some(reading);
            }
        }
    }

    let missing: Vec<Point3> = best.iter().zip(&targets).filter(|(b, _)| b.is_none()).map(|(_, t)| *t).collect();
    if !missing.is_empty() {
        return Err(Error::IncompleteSnapshot { missing });
    }
    let matched: Vec<&SensorReading> = best.into_iter().flatten().collect();
    let snapshot_time = matched.iter().map(|r| r.timestamp).max().unwrap_or(0);
    CornerSet::new(scheme, matched.iter().map(|r| r.value).collect(), field.clone(), snapshot_time)
}

/// A normalized sub-box of the unit cube produced by recursive halving.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Cell {
    pub bounds: Domain,
    pub depth: u32,
}

impl Cell {
    pub fn unit() -> Self {
        Self { bounds: Domain::unit(), depth: 0 }
    }

    /// Half-open membership `[min, max)` per axis.
    pub fn contains_half_open(&self, p: Point3) -> bool {
        (0..3).all(|d| p[d] >= self.bounds.min[d] && p[d] < self.bounds.max[d])
    }

    /// Splits every edge in half. Children are ordered like the corners of
    /// [`canonical_placement`]: `(z, y, x)` lexicographic by lower corner.
    pub fn subdivide(&self) -> [Cell; 8] {
        let lo = self.bounds.min;
        let hi = self.bounds.max;
        let mid = [0, 1, 2].map(|d| 0.5 * (lo[d] + hi[d]));
        std::array::from_fn(|c| {
            let bits = [c & 1, (c >> 1) & 1, (c >> 2) & 1];
            let min = [0, 1, 2].map(|d| if bits[d] == 0 { lo[d] } else { mid[d] });
            let max = [0, 1, 2].map(|d| if bits[d] == 0 { mid[d] } else { hi[d] });
            Cell { bounds: Domain { min, max }, depth: self.depth + 1 }
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn room() -> Domain {
        Domain::new([0.0; 3], [4.0, 3.0, 5.0]).unwrap()
    }

    fn reading(id: &str, p: Point3, v: f64, t: u64) -> SensorReading {
        SensorReading::new(id, p, v, t).unwrap()
    }

    pub(crate) const REFERENCE: [f64; 8] = [19.0, 20.0, 26.0, 27.0, 20.0, 21.0, 25.0, 26.0];

    #[test]
    fn normalize_examples() {
        let d = room();
        assert_eq!(d.normalize_point([0.0, 0.0, 0.0]).unwrap(), [0.0, 0.0, 0.0]);
        assert_eq!(d.normalize_point([4.0, 3.0, 5.0]).unwrap(), [1.0, 1.0, 1.0]);
        assert_eq!(d.normalize_point([2.0, 3.0, 0.0]).unwrap(), [0.5, 1.0, 0.0]);
    }

    #[test]
    fn normalize_rejects_out_of_bounds_with_axis() {
        match room().normalize_point([1.0, 3.5, 1.0]) {
            Err(Error::OutOfBounds { axis, .. }) => assert_eq!(axis, 1),
            other => panic!("expected out-of-bounds, got {other:?}"),
        }
        assert!(room().normalize_point([f64::NAN, 0.0, 0.0]).is_err());
    }

    #[test]
    fn bad_domains() {
        assert!(Domain::new([0.0; 3], [1.0, 0.0, 1.0]).is_err());
        assert!(Domain::new([0.0; 3], [1.0, f64::INFINITY, 1.0]).is_err());
    }

    #[test]
    fn placement_examples() {
        let s1 = canonical_placement(PlacementScheme::S1Corners8);
        assert_eq!(s1.len(), 8);
        assert_eq!(s1[0], [0.0, 0.0, 0.0]);
        assert_eq!(s1[7], [1.0, 1.0, 1.0]);
        assert!(s1.iter().flatten().all(|c| *c == 0.0 || *c == 1.0));

        let s2 = canonical_placement(PlacementScheme::S2CornersPlusCenters14);
        assert_eq!(s2.len(), 14);
        assert_eq!(s2[8], [0.5, 0.5, 0.0]);
        assert!(s1.iter().all(|p| s2.contains(p)));
    }

    #[test]
    fn match_exact_room_corners() {
        let d = room();
        let readings: Vec<_> = canonical_placement(PlacementScheme::S1Corners8)
            .iter()
            .enumerate()
            .map(|(i, q)| reading(&format!("c{i}"), d.denormalize_point(*q), 10.0 + i as f64, 5))
            .collect();
        let cs =
            match_readings(&readings, &d, PlacementScheme::S1Corners8, &FieldKind::temperature(), DEFAULT_MATCH_TOL)
                .unwrap();
        assert_eq!(cs.values(), &[10.0, 11.0, 12.0, 13.0, 14.0, 15.0, 16.0, 17.0]);
        assert_eq!(cs.snapshot_time(), 5);
    }

    #[test]
    fn match_reports_missing_point() {
        let d = room();
        let readings: Vec<_> = canonical_placement(PlacementScheme::S1Corners8)
            .iter()
            .take(7)
            .enumerate()
            .map(|(i, q)| reading(&format!("c{i}"), d.denormalize_point(*q), 1.0, 0))
            .collect();
        let err =
            match_readings(&readings, &d, PlacementScheme::S1Corners8, &FieldKind::temperature(), DEFAULT_MATCH_TOL)
                .unwrap_err();
        match err {
            Error::IncompleteSnapshot { missing } => assert_eq!(missing, vec![[1.0, 1.0, 1.0]]),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn match_reference_named_corners() {
        // front/back = z, bottom/top = y, left/right = x
        let named = [
            ("front-bottom-left", [0.0, 0.0, 0.0], 19.0),
            ("front-bottom-right", [1.0, 0.0, 0.0], 20.0),
            ("front-top-left", [0.0, 1.0, 0.0], 26.0),
            ("front-top-right", [1.0, 1.0, 0.0], 27.0),
            ("back-bottom-left", [0.0, 0.0, 1.0], 20.0),
            ("back-bottom-right", [1.0, 0.0, 1.0], 21.0),
            ("back-top-left", [0.0, 1.0, 1.0], 25.0),
            ("back-top-right", [1.0, 1.0, 1.0], 26.0),
        ];
        let readings: Vec<_> = named.iter().map(|(id, p, v)| reading(id, *p, *v, 1)).collect();
        let cs = match_readings(
            &readings,
            &Domain::unit(),
            PlacementScheme::S1Corners8,
            &FieldKind::temperature(),
            DEFAULT_MATCH_TOL,
        )
        .unwrap();
        assert_eq!(cs.values(), &REFERENCE);
        assert_eq!(cs.get([0.0, 1.0, 0.0]), Some(26.0));
        assert_eq!(cs.get([1.0, 0.0, 1.0]), Some(21.0));
    }

    #[test]
    fn match_tie_breaks() {
        let d = Domain::unit();
        let mut readings: Vec<_> = canonical_placement(PlacementScheme::S1Corners8)
            .iter()
            .enumerate()
            .map(|(i, q)| reading(&format!("c{i}"), *q, 0.0, 10))
            .collect();
        // newer reading near the origin corner wins
        readings.push(reading("late", [0.01, 0.0, 0.02], 5.0, 11));
        // same timestamp, larger id wins
        readings.push(reading("zz", [1.0, 1.0, 0.98], 7.0, 10));
        // outside tolerance, ignored
        readings.push(reading("far", [0.1, 0.0, 0.0], 99.0, 50));
        let cs =
            match_readings(&readings, &d, PlacementScheme::S1Corners8, &FieldKind::temperature(), DEFAULT_MATCH_TOL)
                .unwrap();
        assert_eq!(cs.corner(0, 0, 0), 5.0);
        assert_eq!(cs.corner(1, 1, 1), 7.0);
        assert_eq!(cs.snapshot_time(), 11);
    }

    #[test]
    fn match_rejects_bad_tolerance() {
        let r = [reading("a", [0.0; 3], 1.0, 0)];
        for tol in [0.0, 0.25, -1.0, f64::NAN] {
            assert!(match_readings(&r, &Domain::unit(), PlacementScheme::S1Corners8, &FieldKind::temperature(), tol)
                .is_err());
        }
    }

    #[test]
    fn reading_validation() {
        assert!(SensorReading::new("ok_id-1", [0.0; 3], 1.0, 0).is_ok());
        assert!(SensorReading::new("", [0.0; 3], 1.0, 0).is_err());
        assert!(SensorReading::new("bad id", [0.0; 3], 1.0, 0).is_err());
        assert!(SensorReading::new(&"a".repeat(33), [0.0; 3], 1.0, 0).is_err());
        assert!(SensorReading::new("a", [0.0; 3], f64::NAN, 0).is_err());
        assert!(SensorReading::new("a", [0.0; 3], f64::INFINITY, 0).is_err());
    }

    #[test]
    fn subdivide_examples() {
        let children = Cell::unit().subdivide();
        assert_eq!(children[0].bounds.min_corner(), [0.0; 3]);
        assert_eq!(children[0].bounds.max_corner(), [0.5; 3]);
        assert!(children.iter().all(|c| c.depth == 1 && c.bounds.extent() == [0.5; 3]));
        let total: f64 = children.iter().map(|c| c.bounds.volume()).sum();
        assert_eq!(total, 1.0);

        let grand = children[0].subdivide();
        assert!(grand.iter().all(|c| c.depth == 2 && c.bounds.extent() == [0.25; 3]));
    }

    proptest! {
        #[test]
        fn normalize_roundtrip(fx in 0.0..=1.0f64, fy in 0.0..=1.0f64, fz in 0.0..=1.0f64,
                               ox in -50.0..50.0f64, lx in 0.1..20.0f64) {
            let d = Domain::new([ox, ox - 1.0, ox + 2.0], [ox + lx, ox - 1.0 + 2.0 * lx, ox + 2.0 + 0.5 * lx]).unwrap();
            let e = d.extent();
            let p = [ox + fx * e[0], ox - 1.0 + fy * e[1], ox + 2.0 + fz * e[2]];
            let p = [0, 1, 2].map(|k| p[k].clamp(d.min_corner()[k], d.max_corner()[k]));
            let q = d.normalize_point(p).unwrap();
            prop_assert!(q.iter().all(|c| (0.0..=1.0).contains(c)));
            let back = d.denormalize_point(q);
            for k in 0..3 {
                prop_assert!((back[k] - p[k]).abs() <= 1e-12 * (1.0 + p[k].abs()));
            }
        }

        #[test]
        fn subdivide_partitions_interior(x in 1e-9..1.0f64, y in 1e-9..1.0f64, z in 1e-9..1.0f64, depth in 0u32..4) {
            // descend `depth` levels following the point, then split once more
            let mut cell = Cell::unit();
            for _ in 0..depth {
                cell = *cell.subdivide().iter().find(|c| c.contains_half_open([x, y, z])).unwrap();
            }
            let hits = cell.subdivide().iter().filter(|c| c.contains_half_open([x, y, z])).count();
            prop_assert_eq!(hits, 1);
        }

        #[test]
        fn match_is_idempotent(vals in proptest::collection::vec(-50.0..50.0f64, 14), s2 in any::<bool>(), t in 0u64..1_000_000) {
            let scheme = if s2 { PlacementScheme::S2CornersPlusCenters14 } else { PlacementScheme::S1Corners8 };
            let vals = vals[..scheme.point_count()].to_vec();
            let cs = CornerSet::new(scheme, vals, FieldKind::temperature(), t).unwrap();
            let d = room();
            let again = match_readings(&cs.to_readings(&d), &d, scheme, &FieldKind::temperature(), DEFAULT_MATCH_TOL).unwrap();
            prop_assert_eq!(again, cs);
        }
    }
}
