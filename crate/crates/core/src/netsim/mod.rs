//! Sensor to concentrator to consumer data plane.
//!
//! Sensors write into a per-room circular buffer held by a data concentrator
//! (DC). Consumers query it over a line-based TCP protocol (see [`wire`]).
//! [`link`] simulates delivery delays in virtual time and counts records that
//! miss the consumer's fetch window.

pub mod buffer;
pub mod link;
pub mod server;
pub mod wire;

pub use buffer::{BufferStats, ConcentratorBuffer, SharedBuffer, DEFAULT_CAPACITY};
pub use link::{
    simulate_sensors, simulate_sensors_with, timed_fetch_metrics, Delivery, FetchMetrics, JitterShape, LinkModel,
    SimSensor, DEFAULT_FETCH_BUFFER_MS, DEFAULT_JITTER_SD_MS, DEFAULT_MEAN_DELAY_MS,
};
pub use server::{serve_connection, DcClient, NetError};
pub use wire::{decode_message, encode_message, DecodeError, ErrorCode, Record, WireMessage};
