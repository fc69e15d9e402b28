use crate::Point3;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("invalid domain: {0}")]
    InvalidDomain(String),

    #[error("point outside domain on axis {axis}: {value} not in [{min}, {max}]")]
    OutOfBounds { axis: usize, value: f64, min: f64, max: f64 },

    #[error("invalid reading: {0}")]
    InvalidReading(String),

    #[error("incomplete snapshot, no reading for canonical point(s) {}", fmt_points(.missing))]
    IncompleteSnapshot { missing: Vec<Point3> },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("solver did not converge after {iterations} iterations (residual {residual:e})")]
    NotConverged { iterations: usize, residual: f64 },

    #[error("malformed {what}: {detail}")]
    Format { what: &'static str, detail: String },

    #[error("unsupported version {0}")]
    UnsupportedVersion(u32),
}

fn fmt_points(points: &[Point3]) -> String {
    points.iter().map(|p| format!("({}, {}, {})", p[0], p[1], p[2])).collect::<Vec<_>>().join(", ")
}
