//! Synthetic generator for five-step save-and-load offloading traces.
//!
//! Step durations come from a documented closed-form ground-truth model
//! instead of real hardware:
//!
//! ```text
//! d_eff(host)  = base_disk_throughput_mbps * (1 - disk_slope * disk_load)
//! f_cpu(host)  = 1 + cpu_slope * cpu_load
//! commit       = commit_overhead + (image_mb / (commit_divisor * d_eff(cloud))) * f_cpu(cloud)
//! save         = save_overhead   + (image_mb / (save_divisor   * d_eff(cloud))) * f_cpu(cloud)
//! transfer     = compression_ratio * image_mb * 8e6 / bandwidth_bps + latency_ms / 1000
//! load         = load_overhead   + (image_mb / (load_divisor    * d_eff(fog)))  * f_cpu(fog)
//! start        = start_overhead  + start_size_slope * ln(1 + image_mb)
//! ```
//!
//! Each duration is then multiplied by `(1 + e)` with `e ~ N(0, eta^2)`
//! truncated to `e > -1`; `eta = 0` makes the simulator fully
//! deterministic. Runtime parameters P1-P12 are emitted on a one-second
//! grid as stress baseline + step-specific offset + seeded jitter.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::catalog::{
    CatalogError, HostRole, HostStress, NetworkProfile, OffloadTiming, PlatformSpec, StressProfile,
};

#[derive(Debug, Error)]
pub enum SimulatorError {
    #[error("invalid ground-truth model: {0}")]
    InvalidModel(String),
    #[error("invalid grid: {0}")]
    InvalidGrid(String),
    #[error("image size must be finite and > 0, got {0}")]
    InvalidImageSize(f64),
    #[error("effective disk throughput must be > 0, got {0}")]
    NonPositiveThroughput(f64),
    #[error(transparent)]
    Catalog(#[from] CatalogError),
    #[error("trace io")]
    Io(#[from] std::io::Error),
    #[error("trace serialization")]
    Json(#[from] serde_json::Error),
}

/// The five pipeline steps, in execution order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StepKind {
    Commit,
    Save,
    Transfer,
    Load,
    Start,
}

impl StepKind {
    pub const ALL: [StepKind; 5] = [
        StepKind::Commit,
        StepKind::Save,
        StepKind::Transfer,
        StepKind::Load,
        StepKind::Start,
    ];

    /// Position in execution order (commit = 0 .. start = 4).
    pub fn index(self) -> usize {
        match self {
            StepKind::Commit => 0,
            StepKind::Save => 1,
            StepKind::Transfer => 2,
            StepKind::Load => 3,
            StepKind::Start => 4,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            StepKind::Commit => "commit",
            StepKind::Save => "save",
            StepKind::Transfer => "transfer",
            StepKind::Load => "load",
            StepKind::Start => "start",
        }
    }
}

impl From<StepKind> for crate::catalog::MaskKind {
    fn from(step: StepKind) -> Self {
        use crate::catalog::MaskKind;
        match step {
            StepKind::Commit => MaskKind::Commit,
            StepKind::Save => MaskKind::Save,
            StepKind::Transfer => MaskKind::Transfer,
            StepKind::Load => MaskKind::Load,
            StepKind::Start => MaskKind::Start,
        }
    }
}

/// Coefficients of the closed-form step-duration model.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GroundTruthModel {
    /// Fixed per-step overheads, seconds.
    pub commit_overhead_s: f64,
    pub save_overhead_s: f64,
    pub load_overhead_s: f64,
    pub start_overhead_s: f64,
    /// Dimensionless disk-work divisors (> 0); smaller means more work
    /// per megabyte.
    pub commit_divisor: f64,
    pub save_divisor: f64,
    pub load_divisor: f64,
    /// CPU-contention slope (>= 0).
    pub cpu_slope: f64,
    /// Disk-contention slope (in [0, 1)).
    pub disk_slope: f64,
    /// Compressed fraction of the image that crosses the network (in (0, 1]).
    pub compression_ratio: f64,
    /// Container start cost per ln(1 + image_mb) (>= 0).
    pub start_size_slope: f64,
    /// Optional memory-load slowdown of disk-bound steps (>= 0, default 0:
    /// memory stress shows up only in the sampled parameters).
    pub memory_coupling: f64,
    /// Multiplicative noise level (>= 0; 0 = deterministic).
    pub noise_eta: f64,
}

impl Default for GroundTruthModel {
    fn default() -> Self {
        GroundTruthModel {
            commit_overhead_s: 0.5,
            save_overhead_s: 0.3,
            load_overhead_s: 0.4,
            start_overhead_s: 0.8,
            commit_divisor: 1.0,
            save_divisor: 0.7,
            load_divisor: 0.8,
            cpu_slope: 1.0,
            disk_slope: 0.5,
            compression_ratio: 0.4,
            start_size_slope: 0.05,
            memory_coupling: 0.0,
            noise_eta: 0.05,
        }
    }
}

impl GroundTruthModel {
    pub fn validate(&self) -> Result<(), SimulatorError> {
        let err = |msg: String| Err(SimulatorError::InvalidModel(msg));
        for (name, v) in [
            ("commit_overhead_s", self.commit_overhead_s),
            ("save_overhead_s", self.save_overhead_s),
            ("load_overhead_s", self.load_overhead_s),
            ("start_overhead_s", self.start_overhead_s),
            ("cpu_slope", self.cpu_slope),
            ("start_size_slope", self.start_size_slope),
            ("memory_coupling", self.memory_coupling),
            ("noise_eta", self.noise_eta),
        ] {
            if !v.is_finite() || v < 0.0 {
                return err(format!("{name} must be finite and >= 0, got {v}"));
            }
        }
        for (name, v) in [
            ("commit_divisor", self.commit_divisor),
            ("save_divisor", self.save_divisor),
            ("load_divisor", self.load_divisor),
        ] {
            if !v.is_finite() || v <= 0.0 {
                return err(format!("{name} must be finite and > 0, got {v}"));
            }
        }
        if !self.disk_slope.is_finite() || !(0.0..1.0).contains(&self.disk_slope) {
            return err(format!("disk_slope must lie in [0, 1), got {}", self.disk_slope));
        }
        if !self.compression_ratio.is_finite()
            || self.compression_ratio <= 0.0
            || self.compression_ratio > 1.0
        {
            return err(format!(
                "compression_ratio must lie in (0, 1], got {}",
                self.compression_ratio
            ));
        }
        Ok(())
    }
}

/// One-second snapshot of the runtime parameters P1-P12.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RuntimeSample {
    /// Seconds since the offload started (integer grid).
    pub timestamp: f64,
    pub active_step: StepKind,
    /// P1..P12 in catalogue order.
    pub runtime: [f64; 12],
}

/// Snapshot of everything that produced a trace.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TraceConfig {
    pub platform_id: u32,
    pub cloud: PlatformSpec,
    pub fog: PlatformSpec,
    pub network: NetworkProfile,
    pub stress: StressProfile,
    pub image_mb: f64,
    pub seed: u64,
}

/// One simulated offload: configuration, per-second samples and final
/// step timings.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OffloadTrace {
    pub config: TraceConfig,
    pub samples: Vec<RuntimeSample>,
    pub timing: OffloadTiming,
}

/// Disk throughput (MB/s) left for the offloading process under
/// background disk load.
fn effective_disk_throughput(
    platform: &PlatformSpec,
    stress: &HostStress,
    model: &GroundTruthModel,
) -> Result<f64, SimulatorError> {
    let d = platform.base_disk_throughput_mbps * (1.0 - model.disk_slope * stress.disk);
    if d <= 0.0 || !d.is_finite() {
        return Err(SimulatorError::NonPositiveThroughput(d));
    }
    Ok(d)
}

fn cpu_contention(stress: &HostStress, model: &GroundTruthModel) -> f64 {
    1.0 + model.cpu_slope * stress.cpu
}

fn memory_contention(stress: &HostStress, model: &GroundTruthModel) -> f64 {
    1.0 + model.memory_coupling * stress.memory
}

fn closed_form_duration(
    step: StepKind,
    model: &GroundTruthModel,
    cloud: &PlatformSpec,
    fog: &PlatformSpec,
    net: &NetworkProfile,
    stress: &StressProfile,
    image_mb: f64,
) -> Result<f64, SimulatorError> {
    let disk_step = |overhead: f64, divisor: f64, host: &PlatformSpec, load: &HostStress| {
        let d_eff = effective_disk_throughput(host, load, model)?;
        Ok(overhead
            + (image_mb / (divisor * d_eff))
                * cpu_contention(load, model)
                * memory_contention(load, model))
    };
    match step {
        StepKind::Commit => disk_step(
            model.commit_overhead_s,
            model.commit_divisor,
            cloud,
            &stress.cloud,
        ),
        StepKind::Save => disk_step(
            model.save_overhead_s,
            model.save_divisor,
            cloud,
            &stress.cloud,
        ),
        StepKind::Transfer => Ok(model.compression_ratio * image_mb * 8e6 / net.bandwidth_bps
            + net.latency_ms / 1000.0),
        StepKind::Load => disk_step(model.load_overhead_s, model.load_divisor, fog, &stress.fog),
        StepKind::Start => {
            Ok(model.start_overhead_s + model.start_size_slope * (1.0 + image_mb).ln())
        }
    }
}

/// Duration of one step under the ground-truth model, with multiplicative
/// noise drawn from `rng` (a no-op when `noise_eta` is 0).
#[allow(clippy::too_many_arguments)]
pub fn step_duration<R: Rng>(
    step: StepKind,
    model: &GroundTruthModel,
    cloud: &PlatformSpec,
    fog: &PlatformSpec,
    net: &NetworkProfile,
    stress: &StressProfile,
    image_mb: f64,
    rng: &mut R,
) -> Result<f64, SimulatorError> {
    if !image_mb.is_finite() || image_mb <= 0.0 {
        return Err(SimulatorError::InvalidImageSize(image_mb));
    }
    let base = closed_form_duration(step, model, cloud, fog, net, stress, image_mb)?;
    Ok(base * (1.0 + noise_factor(model.noise_eta, rng)))
}

/// Draw from N(0, eta^2) truncated to (-1, inf) so durations stay positive.
fn noise_factor<R: Rng>(eta: f64, rng: &mut R) -> f64 {
    let normal = Normal::new(0.0, eta).expect("eta validated non-negative");
    loop {
        let e = normal.sample(rng);
        if e > -1.0 {
            return e;
        }
    }
}

// Step-specific offsets applied on top of the stress baselines when
// synthesizing runtime samples. Percent values; throughputs come from the
// effective disk speed of the active host.
const ACTIVE_SYS_CPU_OFFSET: f64 = 25.0;
const ACTIVE_SYS_MEM_OFFSET: f64 = 5.0;
const ACTIVE_SYS_DISK_OFFSET: f64 = 20.0;
const ACTIVE_PROC_CPU: f64 = 55.0;
const TRANSFER_SYS_CPU_OFFSET: f64 = 5.0;
const TRANSFER_PROC_CPU: f64 = 8.0;
const TRANSFER_PROC_MEM: f64 = 2.0;
const FOG_START_PROC_CPU: f64 = 60.0;
const PERCENT_JITTER_STD: f64 = 1.2;
const THROUGHPUT_JITTER_STD: f64 = 0.05;

struct HostSampleSpec {
    sys_cpu: f64,
    sys_mem: f64,
    sys_disk: f64,
    proc_cpu: f64,
    proc_mem: f64,
    proc_disk_bps: f64,
}

fn idle_host(stress: &HostStress) -> HostSampleSpec {
    HostSampleSpec {
        sys_cpu: 100.0 * stress.cpu,
        sys_mem: 100.0 * stress.memory,
        sys_disk: 100.0 * stress.disk,
        proc_cpu: 0.0,
        proc_mem: 0.0,
        proc_disk_bps: 0.0,
    }
}

fn busy_host(stress: &HostStress, proc_cpu: f64, image_mb: f64, d_eff_mbps: f64) -> HostSampleSpec {
    HostSampleSpec {
        sys_cpu: 100.0 * stress.cpu + ACTIVE_SYS_CPU_OFFSET,
        sys_mem: 100.0 * stress.memory + ACTIVE_SYS_MEM_OFFSET,
        sys_disk: 100.0 * stress.disk + ACTIVE_SYS_DISK_OFFSET,
        proc_cpu,
        proc_mem: (5.0 + 0.02 * image_mb).min(30.0),
        proc_disk_bps: d_eff_mbps * 1e6,
    }
}

fn transfer_host(stress: &HostStress, proc_cpu: f64) -> HostSampleSpec {
    HostSampleSpec {
        sys_cpu: 100.0 * stress.cpu + TRANSFER_SYS_CPU_OFFSET,
        sys_mem: 100.0 * stress.memory + 2.0,
        sys_disk: 100.0 * stress.disk + 2.0,
        proc_cpu,
        proc_mem: TRANSFER_PROC_MEM,
        proc_disk_bps: 0.0,
    }
}

fn synthesize_sample<R: Rng>(
    step: StepKind,
    model: &GroundTruthModel,
    cloud: &PlatformSpec,
    fog: &PlatformSpec,
    stress: &StressProfile,
    image_mb: f64,
    rng: &mut R,
) -> Result<[f64; 12], SimulatorError> {
    let (cloud_spec, fog_spec) = match step {
        StepKind::Commit | StepKind::Save => (
            busy_host(
                &stress.cloud,
                ACTIVE_PROC_CPU,
                image_mb,
                effective_disk_throughput(cloud, &stress.cloud, model)?,
            ),
            idle_host(&stress.fog),
        ),
        StepKind::Transfer => (
            transfer_host(&stress.cloud, TRANSFER_PROC_CPU),
            transfer_host(&stress.fog, TRANSFER_PROC_CPU - 3.0),
        ),
        StepKind::Load | StepKind::Start => (
            idle_host(&stress.cloud),
            busy_host(
                &stress.fog,
                FOG_START_PROC_CPU,
                image_mb,
                effective_disk_throughput(fog, &stress.fog, model)?,
            ),
        ),
    };

    let standard = Normal::new(0.0, 1.0).expect("unit normal");
    let mut jitter = || standard.sample(rng);
    let percent = |v: f64, z: f64| (v + PERCENT_JITTER_STD * z).clamp(0.0, 100.0);
    let throughput = |v: f64, z: f64| (v * (1.0 + THROUGHPUT_JITTER_STD * z)).max(0.0);

    // Fixed draw order keeps traces reproducible: P1..P12.
    Ok([
        percent(cloud_spec.sys_cpu, jitter()),
        percent(cloud_spec.sys_mem, jitter()),
        percent(cloud_spec.sys_disk, jitter()),
        percent(cloud_spec.proc_cpu, jitter()),
        percent(cloud_spec.proc_mem, jitter()),
        throughput(cloud_spec.proc_disk_bps, jitter()),
        percent(fog_spec.sys_cpu, jitter()),
        percent(fog_spec.sys_mem, jitter()),
        percent(fog_spec.sys_disk, jitter()),
        percent(fog_spec.proc_cpu, jitter()),
        percent(fog_spec.proc_mem, jitter()),
        throughput(fog_spec.proc_disk_bps, jitter()),
    ])
}

fn validate_hosts(cloud: &PlatformSpec, fog: &PlatformSpec) -> Result<(), SimulatorError> {
    cloud.validate()?;
    fog.validate()?;
    if cloud.role != HostRole::Cloud || fog.role != HostRole::Fog {
        return Err(SimulatorError::InvalidGrid(
            "platform pair must be (cloud, fog)".into(),
        ));
    }
    Ok(())
}

/// Simulate one offload: five step durations plus one runtime sample per
/// elapsed second. Fully determined by its arguments.
pub fn simulate_offload(
    model: &GroundTruthModel,
    cloud: &PlatformSpec,
    fog: &PlatformSpec,
    net: &NetworkProfile,
    stress: &StressProfile,
    image_mb: f64,
    seed: u64,
) -> Result<OffloadTrace, SimulatorError> {
    model.validate()?;
    validate_hosts(cloud, fog)?;
    net.validate()?;
    stress.validate()?;
    if !image_mb.is_finite() || image_mb <= 0.0 {
        return Err(SimulatorError::InvalidImageSize(image_mb));
    }

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut durations = [0.0; 5];
    for step in StepKind::ALL {
        durations[step.index()] =
            step_duration(step, model, cloud, fog, net, stress, image_mb, &mut rng)?;
    }
    let timing = OffloadTiming::from_steps(
        durations[0],
        durations[1],
        durations[2],
        durations[3],
        durations[4],
    )?;

    let sample_count = timing.t_offload.ceil() as usize;
    let mut samples = Vec::with_capacity(sample_count);
    for i in 0..sample_count {
        let t = i as f64;
        let step = active_step_at(t, &durations);
        let runtime = synthesize_sample(step, model, cloud, fog, stress, image_mb, &mut rng)?;
        samples.push(RuntimeSample {
            timestamp: t,
            active_step: step,
            runtime,
        });
    }

    Ok(OffloadTrace {
        config: TraceConfig {
            platform_id: 0,
            cloud: *cloud,
            fog: *fog,
            network: *net,
            stress: *stress,
            image_mb,
            seed,
        },
        samples,
        timing,
    })
}

/// Step running at `t` seconds after the offload started (sample-and-hold
/// at the start of each second).
fn active_step_at(t: f64, durations: &[f64; 5]) -> StepKind {
    let mut boundary = 0.0;
    for step in StepKind::ALL {
        boundary += durations[step.index()];
        if t < boundary {
            return step;
        }
    }
    StepKind::Start
}

/// One cloud/fog pair together with the network and stress conditions it
/// is swept over.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridPlatform {
    pub name: String,
    pub cloud: PlatformSpec,
    pub fog: PlatformSpec,
    pub bandwidths_bps: Vec<f64>,
    pub latency_ms: f64,
    pub stress_profiles: Vec<StressProfile>,
}

/// Full experiment grid: the Cartesian product of each platform's
/// bandwidths and stress profiles with the shared image-size list.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridConfig {
    pub platforms: Vec<GridPlatform>,
    pub image_sizes_mb: Vec<f64>,
}

impl GridConfig {
    pub fn cell_count(&self) -> usize {
        self.platforms
            .iter()
            .map(|p| p.bandwidths_bps.len() * p.stress_profiles.len())
            .sum::<usize>()
            * self.image_sizes_mb.len()
    }

    fn validate(&self) -> Result<(), SimulatorError> {
        let err = |msg: &str| Err(SimulatorError::InvalidGrid(msg.into()));
        if self.platforms.is_empty() {
            return err("platform list is empty");
        }
        if self.image_sizes_mb.is_empty() {
            return err("image size list is empty");
        }
        for p in &self.platforms {
            if p.bandwidths_bps.is_empty() {
                return Err(SimulatorError::InvalidGrid(format!(
                    "platform {} has an empty bandwidth list",
                    p.name
                )));
            }
            if p.stress_profiles.is_empty() {
                return Err(SimulatorError::InvalidGrid(format!(
                    "platform {} has an empty stress schedule",
                    p.name
                )));
            }
        }
        Ok(())
    }
}

/// Run every grid cell. Cell seeds are `seed XOR cell_index`, so each
/// trace depends only on its own cell and results are independent of
/// evaluation order.
pub fn run_experiment_grid(
    grid: &GridConfig,
    model: &GroundTruthModel,
    seed: u64,
) -> Result<Vec<OffloadTrace>, SimulatorError> {
    grid.validate()?;
    let mut traces = Vec::with_capacity(grid.cell_count());
    let mut cell_index: u64 = 0;
    for (platform_id, platform) in grid.platforms.iter().enumerate() {
        for &bandwidth_bps in &platform.bandwidths_bps {
            let net = NetworkProfile {
                bandwidth_bps,
                latency_ms: platform.latency_ms,
            };
            for stress in &platform.stress_profiles {
                for &image_mb in &grid.image_sizes_mb {
                    let mut trace = simulate_offload(
                        model,
                        &platform.cloud,
                        &platform.fog,
                        &net,
                        stress,
                        image_mb,
                        seed ^ cell_index,
                    )?;
                    trace.config.platform_id = platform_id as u32;
                    traces.push(trace);
                    cell_index += 1;
                }
            }
        }
    }
    Ok(traces)
}

/// Write traces as JSON lines, one trace per line.
pub fn write_traces_jsonl(traces: &[OffloadTrace], path: &Path) -> Result<(), SimulatorError> {
    let mut out = BufWriter::new(File::create(path)?);
    for trace in traces {
        serde_json::to_writer(&mut out, trace)?;
        out.write_all(b"\n")?;
    }
    out.flush()?;
    Ok(())
}

pub fn read_traces_jsonl(path: &Path) -> Result<Vec<OffloadTrace>, SimulatorError> {
    let reader = BufReader::new(File::open(path)?);
    let mut traces = Vec::new();
    for line in reader.lines() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        traces.push(serde_json::from_str(&line)?);
    }
    Ok(traces)
}
