//! Seeded delivery-delay simulation in virtual time.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use crate::field::{SensorId, SensorReading};
use crate::{Error, Exec, Point3, Result};

pub const DEFAULT_MEAN_DELAY_MS: f64 = 80.0;
pub const DEFAULT_JITTER_SD_MS: f64 = 30.0;
pub const DEFAULT_FETCH_BUFFER_MS: f64 = 500.0;

/// How jitter is added to the nominal delay.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum JitterShape {
    /// `mean + |N(0, sd)|`: the jitter is a normal truncated at zero, so the
    /// nominal delay is a floor no packet beats.
    #[default]
    OneSided,
    /// `N(mean, sd)` truncated at zero; the nominal delay is the average.
    Symmetric,
}

/// End-to-end delay distribution.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LinkModel {
    /// Nominal transmission delay.
    pub mean_delay_ms: f64,
    pub jitter_sd_ms: f64,
    pub shape: JitterShape,
    pub seed: u64,
}

impl Default for LinkModel {
    fn default() -> Self {
        Self {
            mean_delay_ms: DEFAULT_MEAN_DELAY_MS,
            jitter_sd_ms: DEFAULT_JITTER_SD_MS,
            shape: JitterShape::OneSided,
            seed: 0,
        }
    }
}

impl LinkModel {
    pub fn new(mean_delay_ms: f64, jitter_sd_ms: f64, seed: u64) -> Result<Self> {
        if !(mean_delay_ms.is_finite() && mean_delay_ms >= 0.0) {
            return Err(Error::InvalidArgument(format!("mean delay {mean_delay_ms} must be >= 0")));
        }
        if !(jitter_sd_ms.is_finite() && jitter_sd_ms >= 0.0) {
            return Err(Error::InvalidArgument(format!("jitter sd {jitter_sd_ms} must be >= 0")));
        }
        Ok(Self { mean_delay_ms, jitter_sd_ms, shape: JitterShape::default(), seed })
    }

    pub fn with_shape(self, shape: JitterShape) -> Self {
        Self { shape, ..self }
    }

    /// Independent delay stream for one sensor.
    fn stream(&self, sensor_index: u64) -> DelayStream {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(sensor_index);
        let normal =
            (self.jitter_sd_ms > 0.0).then(|| Normal::new(0.0, self.jitter_sd_ms).expect("validated parameters"));
        DelayStream { rng, normal, mean: self.mean_delay_ms, shape: self.shape }
    }
}

struct DelayStream {
    rng: ChaCha8Rng,
    normal: Option<Normal<f64>>,
    mean: f64,
    shape: JitterShape,
}

impl DelayStream {
    fn sample(&mut self) -> f64 {
        let Some(normal) = &self.normal else {
            return self.mean;
        };
        match self.shape {
            // |N(0, sd)| is exactly N(0, sd) conditioned on being >= 0
            JitterShape::OneSided => self.mean + normal.sample(&mut self.rng).abs(),
            JitterShape::Symmetric => {
                // rejection; the negative tail is tiny for realistic links
                for _ in 0..1024 {
                    let d = self.mean + normal.sample(&mut self.rng);
                    if d >= 0.0 {
                        return d;
                    }
                }
                self.rng.random_range(0.0..=self.mean.max(f64::MIN_POSITIVE))
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimSensor {
    pub id: SensorId,
    pub position: Point3,
}

/// One reading and when the consumer receives it.
#[derive(Debug, Clone, PartialEq)]
pub struct Delivery {
    pub reading: SensorReading,
    pub emit_ms: u64,
    pub arrival_ms: f64,
}

impl Delivery {
    pub fn delay_ms(&self) -> f64 {
        self.arrival_ms - self.emit_ms as f64
    }
}

/// See [`simulate_sensors_with`].
pub fn simulate_sensors(
    profile: &(dyn Fn(Point3, u64) -> f64 + Sync),
    sensors: &[SimSensor],
    period_s: f64,
    link: &LinkModel,
    duration_s: f64,
    start_ms: u64,
) -> Result<Vec<Delivery>> {
    simulate_sensors_with(profile, sensors, period_s, link, duration_s, start_ms, Exec::default())
}

/// Every sensor emits `floor(duration / period)` readings, the `p`-th at
/// `start_ms + p * period`. Values come from `profile(position, emit_ms)`,
/// quantized to 3 decimals so they fit the wire format. Each sensor draws its
/// delays from its own seeded stream, so the schedule is identical in every
/// [`Exec`] mode. The result is ordered by arrival time.
pub fn simulate_sensors_with(
    profile: &(dyn Fn(Point3, u64) -> f64 + Sync),
    sensors: &[SimSensor],
    period_s: f64,
    link: &LinkModel,
    duration_s: f64,
    start_ms: u64,
    exec: Exec,
) -> Result<Vec<Delivery>> {
    if !(period_s > 0.0 && period_s.is_finite()) {
        return Err(Error::InvalidArgument(format!("sensor period {period_s} must be > 0")));
    }
    if !(duration_s >= 0.0 && duration_s.is_finite()) {
        return Err(Error::InvalidArgument(format!("duration {duration_s} must be >= 0")));
    }
    let count = (duration_s / period_s + 1e-9).floor() as u64;
    let period_ms = period_s * 1000.0;

    let per_sensor = exec.map_range(sensors.len(), |s| -> Result<Vec<Delivery>> {
        let sensor = &sensors[s];
        let mut delays = link.stream(s as u64);
        (0..count)
            .map(|p| {
                let emit_ms = start_ms + (p as f64 * period_ms).round() as u64;
                let value = (profile(sensor.position, emit_ms) * 1000.0).round() / 1000.0;
                let reading = SensorReading::new(sensor.id.as_str(), sensor.position, value, emit_ms)?;
                Ok(Delivery { reading, emit_ms, arrival_ms: emit_ms as f64 + delays.sample() })
            })
            .collect()
    });

    let mut schedule = Vec::with_capacity(sensors.len() * count as usize);
    for part in per_sensor {
        schedule.extend(part?);
    }
    schedule.sort_by(|a, b| a.arrival_ms.total_cmp(&b.arrival_ms).then(a.emit_ms.cmp(&b.emit_ms)));
    Ok(schedule)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FetchMetrics {
    pub delivered: usize,
    /// Records whose delay exceeded the fetch buffer; counted as lost.
    pub late: usize,
    pub mean_delay_ms: f64,
    pub max_delay_ms: f64,
    /// Consumer fetches needed to cover the schedule at `fetch_period_s`.
    pub fetch_cycles: u64,
}

/// A record is late iff its end-to-end delay is strictly greater than
/// `fetch_buffer_ms`; a delay equal to the buffer is on time.
pub fn timed_fetch_metrics(schedule: &[Delivery], fetch_period_s: f64, fetch_buffer_ms: f64) -> Result<FetchMetrics> {
    if fetch_buffer_ms.is_nan() || fetch_buffer_ms <= 0.0 {
        return Err(Error::InvalidArgument(format!("fetch buffer {fetch_buffer_ms} must be > 0")));
    }
    if !(fetch_period_s > 0.0 && fetch_period_s.is_finite()) {
        return Err(Error::InvalidArgument(format!("fetch period {fetch_period_s} must be > 0")));
    }
    let delivered = schedule.len();
    let late = schedule.iter().filter(|d| d.delay_ms() > fetch_buffer_ms).count();
    let total: f64 = schedule.iter().map(Delivery::delay_ms).sum();
    let max_delay_ms = schedule.iter().map(Delivery::delay_ms).fold(0.0, f64::max);
    let fetch_cycles =
        match (schedule.iter().map(|d| d.emit_ms).min(), schedule.iter().map(|d| d.arrival_ms).reduce(f64::max)) {
            (Some(first), Some(last)) => {
                ((last - first as f64 + fetch_buffer_ms) / (fetch_period_s * 1000.0)).ceil() as u64
            }
            _ => 0,
        };
    Ok(FetchMetrics {
        delivered,
        late,
        mean_delay_ms: if delivered == 0 { 0.0 } else { total / delivered as f64 },
        max_delay_ms,
        fetch_cycles,
    })
}
