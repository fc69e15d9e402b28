//! CSV files: recorded readings and the sensor registry.
//!
//! Readings: `sensor_id,x,y,z,value,timestamp` with positions in room
//! coordinates and Unix milliseconds. Registry: `sensor_id,x,y,z`.

use std::collections::BTreeMap;
use std::fs::File;
use std::io::{Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};
use voxfield_core::field::{canonical_placement, Domain, PlacementScheme, SensorId, SensorReading};
use voxfield_core::Point3;

use crate::error::{AppError, AppResult};

#[derive(Debug, Serialize, Deserialize)]
struct ReadingRow {
    sensor_id: String,
    x: f64,
    y: f64,
    z: f64,
    value: f64,
    timestamp: u64,
}

#[derive(Debug, Serialize, Deserialize)]
struct SensorRow {
    sensor_id: String,
    x: f64,
    y: f64,
    z: f64,
}

fn csv_error(what: &str, e: csv::Error) -> AppError {
    let msg = e.to_string();
    match e.into_kind() {
        csv::ErrorKind::Io(io) => AppError::io(what, io),
        _ => AppError::Input(format!("{what}: {msg}")),
    }
}

pub fn read_readings_from(reader: impl Read, what: &str) -> AppResult<Vec<SensorReading>> {
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
    let mut out = Vec::new();
    for row in rdr.deserialize::<ReadingRow>() {
        let row = row.map_err(|e| csv_error(what, e))?;
        let reading = SensorReading::new(&row.sensor_id, [row.x, row.y, row.z], row.value, row.timestamp)
            .map_err(|e| AppError::Input(format!("{what}: {e}")))?;
        out.push(reading);
    }
    Ok(out)
}

pub fn read_readings(path: &Path) -> AppResult<Vec<SensorReading>> {
    let file = File::open(path).map_err(|e| AppError::io(path, e))?;
    read_readings_from(file, &path.display().to_string())
}

/// Writes the header only when `with_header` is set, so callers can append.
pub fn write_readings_to(writer: impl Write, readings: &[SensorReading], with_header: bool) -> Result<(), csv::Error> {
    let mut wtr = csv::WriterBuilder::new().has_headers(with_header).from_writer(writer);
    for r in readings {
        wtr.serialize(ReadingRow {
            sensor_id: r.sensor_id.as_str().to_string(),
            x: r.position[0],
            y: r.position[1],
            z: r.position[2],
            value: r.value,
            timestamp: r.timestamp,
        })?;
    }
    wtr.flush()?;
    Ok(())
}

pub fn write_readings(path: &Path, readings: &[SensorReading]) -> AppResult<()> {
    let mut buf = Vec::new();
    write_readings_to(&mut buf, readings, true).map_err(|e| csv_error(&path.display().to_string(), e))?;
    crate::persist::write_atomic(path, &buf)
}

/// Maps sensor ids to positions in room coordinates.
#[derive(Debug, Clone, PartialEq)]
pub struct SensorRegistry {
    positions: BTreeMap<SensorId, Point3>,
}

impl SensorRegistry {
    /// Canonical placement of `scheme` scaled to `domain`, with ids `s00`,
    /// `s01`, ... in placement order.
    pub fn canonical(scheme: PlacementScheme, domain: &Domain) -> Self {
        let positions = canonical_placement(scheme)
            .into_iter()
            .enumerate()
            .map(|(i, q)| (SensorId::new(&format!("s{i:02}")).expect("valid id"), domain.denormalize_point(q)))
            .collect();
        Self { positions }
    }

    pub fn load(path: &Path) -> AppResult<Self> {
        let file = File::open(path).map_err(|e| AppError::io(path, e))?;
        let what = path.display().to_string();
        let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(file);
        let mut positions = BTreeMap::new();
        for row in rdr.deserialize::<SensorRow>() {
            let row = row.map_err(|e| csv_error(&what, e))?;
            let id = SensorId::new(&row.sensor_id).map_err(|e| AppError::Input(format!("{what}: {e}")))?;
            if positions.insert(id, [row.x, row.y, row.z]).is_some() {
                return Err(AppError::Input(format!("{what}: duplicate sensor id {}", row.sensor_id)));
            }
        }
        Ok(Self { positions })
    }

    pub fn position(&self, id: &SensorId) -> Option<Point3> {
        self.positions.get(id).copied()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&SensorId, Point3)> {
        self.positions.iter().map(|(id, p)| (id, *p))
    }

    pub fn len(&self) -> usize {
        self.positions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.positions.is_empty()
    }
}
