//! Long-running concentrator service.
//!
//! One acceptor thread hands each TCP connection to its own thread speaking
//! the line protocol; records land in a shared ring buffer. A recompute
//! thread wakes every period, drains the buffer, keeps the newest reading per
//! sensor and, when something new arrived, runs the pipeline without training
//! and atomically replaces the artifacts in the output directory. Every
//! `train_every`-th snapshot (starting with the first) also retrains the
//! surrogate on a background thread. Incoming readings are scored against the
//! current surrogate before they enter the snapshot; flagged readings are
//! logged and appended to `events.log`.
//!
//! Every accepted reading is appended to `ingest.csv`, so running the
//! pipeline on that file reproduces the latest published scene.

use std::collections::BTreeMap;
use std::fs::OpenOptions;
use std::io::{BufReader, Write};
use std::net::{Shutdown, SocketAddr, TcpListener, TcpStream};
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicBool, Ordering};
use std::sync::{Arc, Mutex, MutexGuard};
use std::thread::JoinHandle;
use std::time::{Duration, Instant};

use voxfield_core::ann::{anomaly_score, AnomalyVerdict, SurrogateModel};
use voxfield_core::field::{SensorId, SensorReading};
use voxfield_core::netsim::{serve_connection, Record, SharedBuffer, DEFAULT_CAPACITY};

use crate::config::PipelineConfig;
use crate::csvio::{write_readings_to, SensorRegistry};
use crate::error::{AppError, AppResult};
use crate::persist::{persist_artifacts, save_model, save_scene, save_volume};
use crate::persist::{MODEL_FILE, REFINED_FILE, REFINED_SCENE_FILE};
use crate::pipeline::{run_pipeline_once, train_and_sample};

pub const INGEST_FILE: &str = "ingest.csv";
pub const EVENTS_FILE: &str = "events.log";

#[derive(Debug, Clone)]
pub struct ServiceConfig {
    pub pipeline: PipelineConfig,
    pub listen: String,
    pub period: Duration,
    pub out_dir: PathBuf,
    /// Positions of the sensors allowed to report.
    pub registry: SensorRegistry,
    /// Title of the HTML pages written next to each scene; `None` skips them.
    pub html_title: Option<String>,
    pub buffer_capacity: usize,
    /// Surrogate used for anomaly scoring until the first retrain finishes.
    pub initial_model: Option<SurrogateModel>,
}

impl ServiceConfig {
    pub fn new(pipeline: PipelineConfig, listen: &str, period: Duration, out_dir: &Path) -> Self {
        let registry = SensorRegistry::canonical(pipeline.scheme, &pipeline.domain);
        Self {
            pipeline,
            listen: listen.to_string(),
            period,
            out_dir: out_dir.to_path_buf(),
            registry,
            html_title: None,
            buffer_capacity: DEFAULT_CAPACITY,
            initial_model: None,
        }
    }
}

/// Counters published by the service threads.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ServiceStatus {
    /// Recompute periods elapsed.
    pub ticks: u64,
    /// Snapshots published to disk.
    pub snapshots: u64,
    /// Periods without new readings.
    pub skipped: u64,
    /// Pipeline runs that failed; previous artifacts stay in place.
    pub failed: u64,
    pub trained: u64,
    pub anomalies: u64,
    pub ingested: u64,
    /// Records from sensors missing from the registry.
    pub unknown: u64,
    pub last_snapshot_time: Option<u64>,
    pub last_error: Option<String>,
    /// Most recent flagged reading and its verdict.
    pub last_anomaly: Option<(SensorReading, AnomalyVerdict)>,
}

struct Shared {
    config: ServiceConfig,
    buffer: SharedBuffer<Record>,
    status: Mutex<ServiceStatus>,
    model: Mutex<Option<SurrogateModel>>,
    stop: AtomicBool,
    training: Mutex<Option<JoinHandle<()>>>,
    connections: Mutex<Vec<TcpStream>>,
}

fn lock<T>(m: &Mutex<T>) -> MutexGuard<'_, T> {
    m.lock().unwrap_or_else(|e| e.into_inner())
}

impl Shared {
    fn update(&self, f: impl FnOnce(&mut ServiceStatus)) {
        f(&mut lock(&self.status));
    }

    fn event(&self, line: &str) {
        let path = self.config.out_dir.join(EVENTS_FILE);
        let res = OpenOptions::new().create(true).append(true).open(&path).and_then(|mut f| writeln!(f, "{line}"));
        if let Err(e) = res {
            log::error!("{}: {e}", path.display());
        }
    }
}

/// Handle to a running service; dropping it shuts the service down.
pub struct ServiceHandle {
    local_addr: SocketAddr,
    shared: Arc<Shared>,
    threads: Vec<JoinHandle<()>>,
}

impl ServiceHandle {
    pub fn local_addr(&self) -> SocketAddr {
        self.local_addr
    }

    pub fn status(&self) -> ServiceStatus {
        lock(&self.shared.status).clone()
    }

    pub fn out_dir(&self) -> &Path {
        &self.shared.config.out_dir
    }

    /// Polls the status until `pred` holds or `timeout` passes.
    pub fn wait_until(&self, timeout: Duration, pred: impl Fn(&ServiceStatus) -> bool) -> Option<ServiceStatus> {
        let deadline = Instant::now() + timeout;
        loop {
            let s = self.status();
            if pred(&s) {
                return Some(s);
            }
            if Instant::now() >= deadline {
                return None;
            }
            std::thread::sleep(Duration::from_millis(5));
        }
    }

    /// Blocks until the service is stopped from another thread or by a
    /// failure of the acceptor.
    pub fn join(mut self) {
        for t in self.threads.drain(..) {
            let _ = t.join();
        }
    }

    pub fn shutdown(mut self) {
        self.stop();
    }

    fn stop(&mut self) {
        self.shared.stop.store(true, Ordering::SeqCst);
        for c in lock(&self.shared.connections).drain(..) {
            let _ = c.shutdown(Shutdown::Both);
        }
        for t in self.threads.drain(..) {
            let _ = t.join();
        }
        if let Some(t) = lock(&self.shared.training).take() {
            let _ = t.join();
        }
    }
}

impl Drop for ServiceHandle {
    fn drop(&mut self) {
        self.stop();
    }
}

/// Binds the listener and starts the service threads.
pub fn run_service(config: ServiceConfig) -> AppResult<ServiceHandle> {
    config.pipeline.validate()?;
    if config.period.is_zero() {
        return Err(AppError::Input("recompute period must be > 0".into()));
    }
    if config.buffer_capacity == 0 {
        return Err(AppError::Input("buffer capacity must be > 0".into()));
    }
    std::fs::create_dir_all(&config.out_dir).map_err(|e| AppError::io(&config.out_dir, e))?;
    let listener = TcpListener::bind(&config.listen).map_err(|e| AppError::io(&config.listen, e))?;
    let local_addr = listener.local_addr().map_err(|e| AppError::io(&config.listen, e))?;
    listener.set_nonblocking(true).map_err(|e| AppError::io(&config.listen, e))?;
    log::info!("listening on {local_addr}, recompute every {:?}", config.period);

    let shared = Arc::new(Shared {
        buffer: SharedBuffer::new(config.buffer_capacity),
        model: Mutex::new(config.initial_model.clone()),
        config,
        status: Mutex::new(ServiceStatus::default()),
        stop: AtomicBool::new(false),
        training: Mutex::new(None),
        connections: Mutex::new(Vec::new()),
    });
    let acceptor = {
        let shared = Arc::clone(&shared);
        std::thread::spawn(move || accept_loop(listener, &shared))
    };
    let recompute = {
        let shared = Arc::clone(&shared);
        std::thread::spawn(move || recompute_loop(&shared))
    };
    Ok(ServiceHandle { local_addr, shared, threads: vec![acceptor, recompute] })
}

fn accept_loop(listener: TcpListener, shared: &Arc<Shared>) {
    let mut workers = Vec::new();
    while !shared.stop.load(Ordering::SeqCst) {
        match listener.accept() {
            Ok((stream, peer)) => {
                log::debug!("connection from {peer}");
                let _ = stream.set_nonblocking(false);
                let (reader, keep) = match (stream.try_clone(), stream.try_clone()) {
                    (Ok(r), Ok(k)) => (r, k),
                    (Err(e), _) | (_, Err(e)) => {
                        log::warn!("{peer}: {e}");
                        continue;
                    }
                };
                lock(&shared.connections).push(keep);
                let shared = Arc::clone(shared);
                workers.push(std::thread::spawn(move || {
                    if let Err(e) = serve_connection(BufReader::new(reader), stream, &shared.buffer) {
                        log::debug!("{peer}: {e}");
                    }
                }));
            }
            Err(e) if e.kind() == std::io::ErrorKind::WouldBlock => std::thread::sleep(Duration::from_millis(2)),
            Err(e) => log::warn!("accept: {e}"),
        }
        workers.retain(|w| !w.is_finished());
    }
    for w in workers {
        let _ = w.join();
    }
}

fn recompute_loop(shared: &Arc<Shared>) {
    let period = shared.config.period;
    let mut latest: BTreeMap<SensorId, SensorReading> = BTreeMap::new();
    let mut next = Instant::now() + period;
    while !shared.stop.load(Ordering::SeqCst) {
        let now = Instant::now();
        if now < next {
            std::thread::sleep((next - now).min(Duration::from_millis(10)));
            continue;
        }
        next += period;
        if next < now {
            // fell behind; do not burst
            next = now + period;
        }
        tick(shared, &mut latest);
    }
}

/// Resolves drained records into readings, dropping unknown sensors.
fn resolve(shared: &Shared, records: Vec<Record>) -> Vec<SensorReading> {
    let mut out = Vec::with_capacity(records.len());
    for r in records {
        match shared.config.registry.position(r.id()) {
            Some(pos) => match SensorReading::new(r.id().as_str(), pos, r.value(), r.unix_ms()) {
                Ok(reading) => out.push(reading),
                Err(e) => log::warn!("dropping record from {}: {e}", r.id().as_str()),
            },
            None => {
                log::warn!("record from unregistered sensor {}", r.id().as_str());
                shared.update(|s| s.unknown += 1);
            }
        }
    }
    out
}

fn append_ingest(shared: &Shared, readings: &[SensorReading]) {
    let path = shared.config.out_dir.join(INGEST_FILE);
    let res = OpenOptions::new().create(true).append(true).open(&path).and_then(|f| {
        let fresh = f.metadata()?.len() == 0;
        write_readings_to(f, readings, fresh).map_err(std::io::Error::other)
    });
    if let Err(e) = res {
        log::error!("{}: {e}", path.display());
    }
}

fn score_readings(shared: &Shared, readings: &[SensorReading]) {
    let model = lock(&shared.model).clone();
    let Some(model) = model else { return };
    let cfg = &shared.config.pipeline;
    for r in readings {
        let Ok(q) = cfg.domain.normalize_point(r.position) else {
            continue;
        };
        let mut normalized = r.clone();
        normalized.position = q;
        let v = anomaly_score(&model, &normalized, cfg.anomaly_floor);
        if v.flag {
            let line = format!(
                "{} anomaly sensor={} value={} predicted={:.6} score={:.6} threshold={:.6}",
                r.timestamp,
                r.sensor_id.as_str(),
                r.value,
                v.predicted,
                v.score,
                v.threshold
            );
            log::warn!("{line}");
            shared.event(&line);
            shared.update(|s| {
                s.anomalies += 1;
                s.last_anomaly = Some((r.clone(), v));
            });
        }
    }
}

fn tick(shared: &Arc<Shared>, latest: &mut BTreeMap<SensorId, SensorReading>) {
    shared.update(|s| s.ticks += 1);
    let records = shared.buffer.drain(usize::MAX);
    let readings = resolve(shared, records);
    if readings.is_empty() {
        shared.update(|s| s.skipped += 1);
        return;
    }
    shared.update(|s| s.ingested += readings.len() as u64);
    append_ingest(shared, &readings);
    score_readings(shared, &readings);
    for r in readings {
        match latest.get(&r.sensor_id) {
            Some(old) if old.timestamp > r.timestamp => {}
            _ => {
                latest.insert(r.sensor_id.clone(), r);
            }
        }
    }

    let cfg = &shared.config;
    let snapshot: Vec<SensorReading> = latest.values().cloned().collect();
    let result = run_pipeline_once(&snapshot, &cfg.pipeline, false)
        .and_then(|a| persist_artifacts(&a, &cfg.out_dir, cfg.html_title.as_deref()).map(|_| a));
    let artifacts = match result {
        Ok(a) => a,
        Err(e) => {
            log::error!("snapshot failed: {e}");
            shared.event(&format!("error {e}"));
            shared.update(|s| {
                s.failed += 1;
                s.last_error = Some(e.to_string());
            });
            return;
        }
    };
    let count = {
        let mut s = lock(&shared.status);
        s.snapshots += 1;
        s.last_snapshot_time = Some(artifacts.snapshot_time());
        s.snapshots
    };
    log::info!(
        "snapshot {count} at t={} published ({:.1} ms)",
        artifacts.snapshot_time(),
        artifacts.timings.iter().map(|(_, ms)| ms).sum::<f64>()
    );
    if (count - 1) % cfg.pipeline.surrogate.train_every == 0 {
        start_training(shared, artifacts.volume);
    }
}

fn start_training(shared: &Arc<Shared>, volume: voxfield_core::solver::VolumeGrid) {
    let mut slot = lock(&shared.training);
    if slot.as_ref().is_some_and(|t| !t.is_finished()) {
        log::info!("retrain requested while one is running; skipped");
        return;
    }
    if let Some(t) = slot.take() {
        let _ = t.join();
    }
    let worker = Arc::clone(shared);
    *slot = Some(std::thread::spawn(move || {
        let cfg = &worker.config;
        let result = train_and_sample(&volume, &cfg.pipeline).and_then(|(model, refined, doc)| {
            save_model(&cfg.out_dir.join(MODEL_FILE), &model)?;
            save_volume(&cfg.out_dir.join(REFINED_FILE), &refined)?;
            save_scene(&cfg.out_dir.join(REFINED_SCENE_FILE), &doc, cfg.html_title.as_deref())?;
            Ok(model)
        });
        match result {
            Ok(model) => {
                log::info!(
                    "surrogate retrained: {} epochs, rmse {:.4}",
                    model.report().epochs_run,
                    model.report().final_rmse_field_units
                );
                *lock(&worker.model) = Some(model);
                worker.update(|s| s.trained += 1);
            }
            Err(e) => {
                log::error!("retrain failed: {e}");
                worker.event(&format!("error {e}"));
                worker.update(|s| s.last_error = Some(e.to_string()));
            }
        }
    }));
}
