use std::collections::VecDeque;
use std::sync::{Arc, Mutex, MutexGuard};

use crate::field::SensorReading;

/// Records held by a concentrator before the oldest are overwritten.
pub const DEFAULT_CAPACITY: usize = 1000;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct BufferStats {
    pub occupancy: usize,
    pub capacity: usize,
    pub dropped_total: u64,
    pub pushed_total: u64,
    pub drained_total: u64,
}

/// Fixed-capacity FIFO. A push into a full buffer evicts the oldest record.
#[derive(Debug, Clone)]
pub struct ConcentratorBuffer<T = SensorReading> {
    capacity: usize,
    records: VecDeque<T>,
    dropped_total: u64,
    pushed_total: u64,
    drained_total: u64,
}

impl<T> ConcentratorBuffer<T> {
    /// # Panics
    /// If `capacity` is zero.
    pub fn new(capacity: usize) -> Self {
        assert!(capacity > 0, "buffer capacity must be positive");
        Self {
            capacity,
            records: VecDeque::with_capacity(capacity),
            dropped_total: 0,
            pushed_total: 0,
            drained_total: 0,
        }
    }

    pub fn push(&mut self, record: T) {
        if self.records.len() == self.capacity {
            self.records.pop_front();
            self.dropped_total += 1;
        }
        self.records.push_back(record);
        self.pushed_total += 1;
    }

    /// Removes and returns up to `k` of the oldest records.
    pub fn drain(&mut self, k: usize) -> Vec<T> {
        let m = k.min(self.records.len());
        self.drained_total += m as u64;
        self.records.drain(..m).collect()
    }

    pub fn occupancy(&self) -> usize {
        self.records.len()
    }

    pub fn capacity(&self) -> usize {
        self.capacity
    }

    pub fn dropped_total(&self) -> u64 {
        self.dropped_total
    }

    pub fn iter(&self) -> impl Iterator<Item = &T> {
        self.records.iter()
    }

    pub fn stats(&self) -> BufferStats {
        BufferStats {
            occupancy: self.records.len(),
            capacity: self.capacity,
            dropped_total: self.dropped_total,
            pushed_total: self.pushed_total,
            drained_total: self.drained_total,
        }
    }
}

impl<T> Default for ConcentratorBuffer<T> {
    fn default() -> Self {
        Self::new(DEFAULT_CAPACITY)
    }
}

/// A buffer shared between producer and consumer threads; every operation
/// takes the same lock.
#[derive(Debug)]
pub struct SharedBuffer<T = SensorReading>(Arc<Mutex<ConcentratorBuffer<T>>>);

impl<T> Clone for SharedBuffer<T> {
    fn clone(&self) -> Self {
        Self(Arc::clone(&self.0))
    }
}

impl<T> SharedBuffer<T> {
    pub fn new(capacity: usize) -> Self {
        Self(Arc::new(Mutex::new(ConcentratorBuffer::new(capacity))))
    }

    fn lock(&self) -> MutexGuard<'_, ConcentratorBuffer<T>> {
        // a panicking holder cannot leave the deque half-updated
        self.0.lock().unwrap_or_else(|e| e.into_inner())
    }

    pub fn push(&self, record: T) {
        self.lock().push(record);
    }

    pub fn drain(&self, k: usize) -> Vec<T> {
        self.lock().drain(k)
    }

    pub fn stats(&self) -> BufferStats {
        self.lock().stats()
    }
}
