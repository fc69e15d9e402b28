use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Duration;

use clap::{Args, Parser, Subcommand};
use voxfield::config::{parse_boundary, parse_scheme, PipelineConfig};
use voxfield::csvio::{read_readings, write_readings, SensorRegistry};
use voxfield::persist::{load_model, load_volume, persist_artifacts, save_model, save_scene, save_volume};
use voxfield::pipeline::run_pipeline_once;
use voxfield::service::{run_service, ServiceConfig};
use voxfield::sim::{reference_profile, sim_sensors, REFERENCE_CORNERS};
use voxfield::{AppError, AppResult};
use voxfield_core::ann::{anomaly_score, sample_volume_with, train_surrogate};
use voxfield_core::netsim::{
    simulate_sensors_with, timed_fetch_metrics, DcClient, LinkModel, Record, DEFAULT_FETCH_BUFFER_MS,
    DEFAULT_JITTER_SD_MS, DEFAULT_MEAN_DELAY_MS,
};
use voxfield_core::x3d::{emit_x3d, DEFAULT_HTML_TITLE};

/// Sensor readings to Laplace-interpolated volumes, neural surrogates and
/// X3D scenes.
#[derive(Debug, Parser)]
#[command(name = "voxfield", version)]
struct Cli {
    #[command(flatten)]
    common: Common,
    #[command(subcommand)]
    command: Command,
}

/// Pipeline settings; flags override the config file.
#[derive(Debug, Args)]
struct Common {
    /// TOML configuration file.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Lattice side of the solved volume.
    #[arg(long, global = true)]
    grid: Option<usize>,
    /// Sensor placement: s1 (corners) or s2 (corners and face centers).
    #[arg(long, global = true)]
    scheme: Option<String>,
    /// Face construction: bilinear or fd2d.
    #[arg(long, global = true)]
    boundary: Option<String>,
    /// Hidden width of the surrogate.
    #[arg(long, global = true)]
    hidden: Option<usize>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Run sequentially even when built with parallel support.
    #[arg(long, global = true)]
    sequential: bool,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Simulate sensors over a lossy link; write readings and report delays.
    Simulate {
        /// Registry CSV (sensor_id,x,y,z); defaults to the canonical placement.
        #[arg(long)]
        sensors: Option<PathBuf>,
        /// Simulated seconds.
        #[arg(long, default_value_t = 3600.0)]
        duration: f64,
        /// Seconds between readings of one sensor; defaults to the config.
        #[arg(long)]
        period: Option<f64>,
        /// Fetch buffer for the late count, in milliseconds.
        #[arg(long, default_value_t = DEFAULT_FETCH_BUFFER_MS)]
        buffer_ms: f64,
        #[arg(long, default_value_t = DEFAULT_MEAN_DELAY_MS)]
        delay_ms: f64,
        #[arg(long, default_value_t = DEFAULT_JITTER_SD_MS)]
        jitter_ms: f64,
        /// Daily temperature swing added to the reference room.
        #[arg(long, default_value_t = 1.0)]
        swing: f64,
        /// Unix milliseconds of the first reading.
        #[arg(long, default_value_t = 1_714_000_000_000)]
        start: u64,
        /// Readings CSV, in arrival order.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Also send every reading to a running service at host:port.
        #[arg(long)]
        send: Option<String>,
    },
    /// Solve the volume for the newest snapshot of a readings CSV.
    Solve {
        #[arg(long)]
        input: PathBuf,
        #[arg(long, default_value = "volume.txt")]
        out: PathBuf,
    },
    /// Fit a surrogate to a volume file.
    Train {
        #[arg(long)]
        input: PathBuf,
        #[arg(long, default_value = "model.txt")]
        out: PathBuf,
    },
    /// Sample a surrogate on a lattice, or at one normalized point.
    Eval {
        #[arg(long)]
        model: PathBuf,
        /// Side of the sampled lattice; defaults to the refined grid.
        #[arg(long = "samples")]
        samples: Option<usize>,
        /// Print the value at x,y,z (unit cube) instead.
        #[arg(long, value_delimiter = ',', value_name = "X,Y,Z")]
        at: Option<Vec<f64>>,
        #[arg(long, default_value = "refined.txt")]
        out: PathBuf,
    },
    /// Write the X3D scene of a volume file.
    Emit {
        #[arg(long)]
        input: PathBuf,
        #[arg(long, default_value = "scene.x3d")]
        out: PathBuf,
        /// Also write an HTML page embedding the scene.
        #[arg(long)]
        html: bool,
    },
    /// Run the concentrator service.
    Serve {
        #[arg(long, default_value = "127.0.0.1:7878")]
        listen: String,
        /// Recompute period in seconds.
        #[arg(long, default_value_t = 60.0)]
        period: f64,
        /// Artifact directory.
        #[arg(long, default_value = "artifacts")]
        out: PathBuf,
        #[arg(long)]
        sensors: Option<PathBuf>,
        /// Surrogate used for anomaly scoring until the first retrain.
        #[arg(long)]
        model: Option<PathBuf>,
        #[arg(long)]
        html: bool,
        /// Stop after this many seconds instead of running until killed.
        #[arg(long)]
        duration: Option<f64>,
    },
    /// Score readings against a surrogate.
    Anomaly {
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        input: PathBuf,
        /// Lower bound of the flag threshold; defaults to the config.
        #[arg(long)]
        floor: Option<f64>,
    },
    /// Whole pipeline on a readings CSV, writing every artifact to a directory.
    Run {
        #[arg(long)]
        input: PathBuf,
        #[arg(long, default_value = "artifacts")]
        out: PathBuf,
        /// Also fit the surrogate and emit the refined scene.
        #[arg(long)]
        train: bool,
        #[arg(long)]
        html: bool,
    },
}

fn pipeline_config(c: &Common) -> AppResult<PipelineConfig> {
    let mut cfg = match &c.config {
        Some(path) => PipelineConfig::load(path)?,
        None => PipelineConfig::default(),
    };
    if let Some(v) = c.grid {
        cfg.grid_n = v;
    }
    if let Some(s) = &c.scheme {
        cfg.scheme = parse_scheme(s)?;
    }
    if let Some(s) = &c.boundary {
        cfg.boundary_method = parse_boundary(s)?;
    }
    if let Some(v) = c.hidden {
        cfg.surrogate.hidden = v;
    }
    if let Some(v) = c.seed {
        cfg.seed = v;
    }
    if c.sequential {
        cfg.exec = voxfield_core::Exec::Sequential;
        cfg.surrogate.train.exec = cfg.exec;
    }
    cfg.validate()?;
    Ok(cfg)
}

fn registry(path: Option<&Path>, cfg: &PipelineConfig) -> AppResult<SensorRegistry> {
    match path {
        Some(p) => SensorRegistry::load(p),
        None => Ok(SensorRegistry::canonical(cfg.scheme, &cfg.domain)),
    }
}

fn html_title(html: bool) -> Option<&'static str> {
    html.then_some(DEFAULT_HTML_TITLE)
}

fn positive_secs(what: &str, s: f64) -> AppResult<Duration> {
    Duration::try_from_secs_f64(s)
        .ok()
        .filter(|d| !d.is_zero())
        .ok_or_else(|| AppError::Input(format!("{what} must be a positive number of seconds, got {s}")))
}

fn run(cli: Cli) -> AppResult<()> {
    let cfg = pipeline_config(&cli.common)?;
    match cli.command {
        Command::Simulate { sensors, duration, period, buffer_ms, delay_ms, jitter_ms, swing, start, out, send } => {
            let reg = registry(sensors.as_deref(), &cfg)?;
            let period = period.unwrap_or(cfg.sensor_period_s);
            let link = LinkModel::new(delay_ms, jitter_ms, cfg.seed)?;
            let profile = reference_profile(cfg.domain, REFERENCE_CORNERS, swing);
            let schedule =
                simulate_sensors_with(&profile, &sim_sensors(&reg), period, &link, duration, start, cfg.exec)?;
            let m = timed_fetch_metrics(&schedule, period, buffer_ms)?;
            println!(
                "delivered {} late {} mean_delay_ms {:.3} max_delay_ms {:.3} fetch_cycles {}",
                m.delivered, m.late, m.mean_delay_ms, m.max_delay_ms, m.fetch_cycles
            );
            let readings: Vec<_> = schedule.into_iter().map(|d| d.reading).collect();
            if let Some(path) = out {
                write_readings(&path, &readings)?;
            }
            if let Some(addr) = send {
                let net = |e| AppError::Input(format!("{addr}: {e}"));
                let mut client = DcClient::connect(addr.as_str()).map_err(net)?;
                for r in &readings {
                    let record = Record::new(r.sensor_id.as_str(), r.timestamp, r.value)
                        .map_err(|c| AppError::Input(format!("{}: {}", r.sensor_id.as_str(), c.describe())))?;
                    client.put(record).map_err(net)?;
                }
                log::info!("sent {} readings to {addr}", readings.len());
            }
        }
        Command::Solve { input, out } => {
            let readings = read_readings(&input)?;
            let a = run_pipeline_once(&readings, &cfg, false)?;
            save_volume(&out, &a.volume)?;
            for (stage, ms) in &a.timings {
                log::info!("{stage}: {ms:.3} ms");
            }
            println!("{}: n={} snapshot_time={}", out.display(), a.volume.n(), a.snapshot_time());
        }
        Command::Train { input, out } => {
            let volume = load_volume(&input)?;
            let model = train_surrogate(&volume, cfg.surrogate.hidden, &cfg.surrogate.train, cfg.seed)?;
            save_model(&out, &model)?;
            let r = model.report();
            println!(
                "{}: epochs {} rmse {:.6} ({:.6} normalized) in {} ms",
                out.display(),
                r.epochs_run,
                r.final_rmse_field_units,
                r.final_rmse_normalized,
                r.wall_time_ms
            );
        }
        Command::Eval { model, samples, at, out } => {
            let model = load_model(&model)?;
            match at {
                Some(p) => {
                    let p: [f64; 3] = p
                        .try_into()
                        .map_err(|p: Vec<f64>| AppError::Input(format!("--at needs 3 coordinates, got {}", p.len())))?;
                    println!("{}", model.eval(p));
                }
                None => {
                    let n = samples.unwrap_or(cfg.surrogate.refined_grid);
                    let volume = sample_volume_with(&model, n, cfg.exec)?;
                    save_volume(&out, &volume)?;
                    println!("{}: n={n} min {} max {}", out.display(), volume.min(), volume.max());
                }
            }
        }
        Command::Emit { input, out, html } => {
            let volume = load_volume(&input)?;
            let doc = emit_x3d(&volume, &cfg.colormap);
            save_scene(&out, &doc, html_title(html))?;
            println!("{}: {} shapes", out.display(), doc.shape_count);
        }
        Command::Serve { listen, period, out, sensors, model, html, duration } => {
            let mut sc = ServiceConfig::new(cfg.clone(), &listen, positive_secs("--period", period)?, &out);
            sc.registry = registry(sensors.as_deref(), &cfg)?;
            sc.html_title = html_title(html).map(str::to_string);
            if let Some(path) = model {
                sc.initial_model = Some(load_model(&path)?);
            }
            let handle = run_service(sc)?;
            println!("listening on {}", handle.local_addr());
            match duration {
                Some(s) => {
                    std::thread::sleep(positive_secs("--duration", s)?);
                    let status = handle.status();
                    handle.shutdown();
                    println!(
                        "snapshots {} skipped {} failed {} trained {} anomalies {}",
                        status.snapshots, status.skipped, status.failed, status.trained, status.anomalies
                    );
                }
                None => handle.join(),
            }
        }
        Command::Anomaly { model, input, floor } => {
            let model = load_model(&model)?;
            let floor = floor.unwrap_or(cfg.anomaly_floor);
            println!("sensor_id,timestamp,value,predicted,score,threshold,flag");
            for r in read_readings(&input)? {
                let mut q = r.clone();
                q.position = cfg.domain.normalize_point(r.position)?;
                let v = anomaly_score(&model, &q, floor);
                println!(
                    "{},{},{},{},{},{},{}",
                    r.sensor_id.as_str(),
                    r.timestamp,
                    r.value,
                    v.predicted,
                    v.score,
                    v.threshold,
                    v.flag
                );
            }
        }
        Command::Run { input, out, train, html } => {
            let readings = read_readings(&input)?;
            let a = run_pipeline_once(&readings, &cfg, train)?;
            let paths = persist_artifacts(&a, &out, html_title(html))?;
            let timings: Vec<String> = a.timings.iter().map(|(s, ms)| format!("{s} {ms:.3} ms")).collect();
            println!("{}: {}", paths.scene.display(), timings.join(", "));
            if let Some(m) = &a.model {
                println!("surrogate rmse {:.6}", m.report().final_rmse_field_units);
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
