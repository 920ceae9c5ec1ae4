//! Aggregate dataset instances built from traces, with CSV persistence.
//!
//! One instance per offload: runtime parameters are the arithmetic mean of
//! the trace's per-second samples, offline parameters are copied from the
//! trace configuration, and the targets are the five step durations plus
//! total. The CSV schema is fixed so files interoperate across tools:
//! `instance_id,platform_id,p1..p21,t_commit,t_save,t_transfer,t_load,t_start,t_offload`.

use std::fmt::Write as _;
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::catalog::{
    param, validate_parameter_vector, OffloadTiming, ParameterVector, PARAM_COUNT,
};
use crate::simulator::{OffloadTrace, StepKind};

pub const CSV_HEADER: &str = "instance_id,platform_id,p1,p2,p3,p4,p5,p6,p7,p8,p9,p10,p11,p12,p13,p14,p15,p16,p17,p18,p19,p20,p21,t_commit,t_save,t_transfer,t_load,t_start,t_offload";

const CSV_COLUMNS: usize = 2 + PARAM_COUNT + 6;

#[derive(Debug, Error)]
pub enum DatasetError {
    #[error("trace has no runtime samples")]
    EmptyTrace,
    #[error("dataset must contain at least one instance")]
    Empty,
    #[error("instance {index} violates catalogue invariants: {violations:?}")]
    InvalidInstance {
        index: usize,
        violations: Vec<String>,
    },
    #[error("{path}:{line}: {message}")]
    Parse {
        path: String,
        line: usize,
        message: String,
    },
    #[error("dataset io")]
    Io(#[from] std::io::Error),
}

/// One aggregate row: mean runtime features, offline features and timings.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DatasetInstance {
    pub instance_id: usize,
    pub platform_id: u32,
    pub features: ParameterVector,
    pub targets: OffloadTiming,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Dataset {
    instances: Vec<DatasetInstance>,
}

impl Dataset {
    pub fn from_instances(instances: Vec<DatasetInstance>) -> Result<Self, DatasetError> {
        if instances.is_empty() {
            return Err(DatasetError::Empty);
        }
        Ok(Dataset { instances })
    }

    pub fn instances(&self) -> &[DatasetInstance] {
        &self.instances
    }

    pub fn len(&self) -> usize {
        self.instances.len()
    }

    pub fn is_empty(&self) -> bool {
        self.instances.is_empty()
    }

    /// Target column for one step, in instance order.
    pub fn step_targets(&self, step: StepKind) -> Vec<f64> {
        self.instances
            .iter()
            .map(|i| i.targets.steps()[step.index()])
            .collect()
    }

    pub fn total_targets(&self) -> Vec<f64> {
        self.instances.iter().map(|i| i.targets.t_offload).collect()
    }
}

fn mean_runtime(trace: &OffloadTrace) -> Result<[f64; 12], DatasetError> {
    if trace.samples.is_empty() {
        return Err(DatasetError::EmptyTrace);
    }
    let mut sums = [0.0; 12];
    for sample in &trace.samples {
        for (acc, v) in sums.iter_mut().zip(sample.runtime.iter()) {
            *acc += v;
        }
    }
    let n = trace.samples.len() as f64;
    Ok(sums.map(|s| s / n))
}

fn offline_features(trace: &OffloadTrace, runtime: [f64; 12]) -> ParameterVector {
    let cfg = &trace.config;
    let mut values = [0.0; PARAM_COUNT];
    values[..12].copy_from_slice(&runtime);
    values[param::IMAGE_SIZE_MB - 1] = cfg.image_mb;
    values[param::CLOUD_CORES - 1] = cfg.cloud.cores as f64;
    values[param::CLOUD_MEMORY_GB - 1] = cfg.cloud.memory_gb;
    values[param::CLOUD_DISK_GB - 1] = cfg.cloud.disk_gb;
    values[param::FOG_CORES - 1] = cfg.fog.cores as f64;
    values[param::FOG_MEMORY_GB - 1] = cfg.fog.memory_gb;
    values[param::FOG_DISK_GB - 1] = cfg.fog.disk_gb;
    values[param::NETWORK_BANDWIDTH_BPS - 1] = cfg.network.bandwidth_bps;
    values[param::NETWORK_LATENCY_MS - 1] = cfg.network.latency_ms;
    ParameterVector::from_array(values)
}

/// Collapse one trace into an aggregate instance: runtime parameters are
/// averaged over all samples, offline parameters copied from the config.
/// The instance id is assigned by [`build_dataset`].
pub fn aggregate_trace(trace: &OffloadTrace) -> Result<DatasetInstance, DatasetError> {
    let features = offline_features(trace, mean_runtime(trace)?);
    Ok(DatasetInstance {
        instance_id: 0,
        platform_id: trace.config.platform_id,
        features,
        targets: trace.timing,
    })
}

/// Per-step variant of [`aggregate_trace`]: for each step, the runtime
/// parameters are averaged over that step's own sample window. Steps whose
/// window contains no full second fall back to the whole-trace mean.
pub fn step_window_features(trace: &OffloadTrace) -> Result<[ParameterVector; 5], DatasetError> {
    let whole = mean_runtime(trace)?;
    let mut sums = [[0.0; 12]; 5];
    let mut counts = [0usize; 5];
    for sample in &trace.samples {
        let idx = sample.active_step.index();
        counts[idx] += 1;
        for (acc, v) in sums[idx].iter_mut().zip(sample.runtime.iter()) {
            *acc += v;
        }
    }
    let mut result = [offline_features(trace, whole); 5];
    for step in StepKind::ALL {
        let idx = step.index();
        if counts[idx] > 0 {
            let mean = sums[idx].map(|s| s / counts[idx] as f64);
            result[idx] = offline_features(trace, mean);
        }
    }
    Ok(result)
}

/// One instance per trace, order preserved, `instance_id` = position.
pub fn build_dataset(traces: &[OffloadTrace]) -> Result<Dataset, DatasetError> {
    if traces.is_empty() {
        return Err(DatasetError::Empty);
    }
    let mut instances = Vec::with_capacity(traces.len());
    for (index, trace) in traces.iter().enumerate() {
        let mut instance = aggregate_trace(trace)?;
        instance.instance_id = index;
        let violations = validate_parameter_vector(&instance.features);
        if !violations.is_empty() {
            return Err(DatasetError::InvalidInstance { index, violations });
        }
        instances.push(instance);
    }
    Dataset::from_instances(instances)
}

/// Write the dataset as CSV. Floats use Rust's shortest round-trip
/// formatting, so values survive a write/read cycle bit-exactly.
pub fn write_dataset(dataset: &Dataset, path: &Path) -> Result<(), DatasetError> {
    let mut out = BufWriter::new(File::create(path)?);
    writeln!(out, "{CSV_HEADER}")?;
    let mut line = String::new();
    for instance in dataset.instances() {
        line.clear();
        write!(line, "{},{}", instance.instance_id, instance.platform_id).unwrap();
        for v in instance.features.as_array() {
            write!(line, ",{v}").unwrap();
        }
        let t = &instance.targets;
        write!(
            line,
            ",{},{},{},{},{},{}",
            t.t_commit, t.t_save, t.t_transfer, t.t_load, t.t_start, t.t_offload
        )
        .unwrap();
        writeln!(out, "{line}")?;
    }
    out.flush()?;
    Ok(())
}

pub fn read_dataset(path: &Path) -> Result<Dataset, DatasetError> {
    let display = path.display().to_string();
    let parse_err = |line: usize, message: String| DatasetError::Parse {
        path: display.clone(),
        line,
        message,
    };

    let reader = BufReader::new(File::open(path)?);
    let mut lines = reader.lines();
    let header = lines
        .next()
        .ok_or_else(|| parse_err(1, "file is empty".into()))??;
    check_header(&header).map_err(|message| parse_err(1, message))?;

    let mut instances = Vec::new();
    for (offset, line) in lines.enumerate() {
        let line_no = offset + 2;
        let line = line?;
        if line.is_empty() {
            continue;
        }
        let cells: Vec<&str> = line.split(',').collect();
        if cells.len() != CSV_COLUMNS {
            return Err(parse_err(
                line_no,
                format!("expected {CSV_COLUMNS} columns, found {}", cells.len()),
            ));
        }
        let expected = CSV_HEADER.split(',').collect::<Vec<_>>();
        let number = |i: usize| -> Result<f64, DatasetError> {
            cells[i].parse::<f64>().map_err(|_| {
                parse_err(
                    line_no,
                    format!("column {} is not numeric: {:?}", expected[i], cells[i]),
                )
            })
        };
        let instance_id = cells[0]
            .parse::<usize>()
            .map_err(|_| parse_err(line_no, format!("bad instance_id {:?}", cells[0])))?;
        let platform_id = cells[1]
            .parse::<u32>()
            .map_err(|_| parse_err(line_no, format!("bad platform_id {:?}", cells[1])))?;
        let mut values = [0.0; PARAM_COUNT];
        for (i, value) in values.iter_mut().enumerate() {
            *value = number(2 + i)?;
        }
        let base = 2 + PARAM_COUNT;
        let targets = OffloadTiming {
            t_commit: number(base)?,
            t_save: number(base + 1)?,
            t_transfer: number(base + 2)?,
            t_load: number(base + 3)?,
            t_start: number(base + 4)?,
            t_offload: number(base + 5)?,
        };
        let features = ParameterVector::from_array(values);
        let violations = validate_parameter_vector(&features);
        if !violations.is_empty() {
            return Err(parse_err(line_no, format!("invalid features: {violations:?}")));
        }
        instances.push(DatasetInstance {
            instance_id,
            platform_id,
            features,
            targets,
        });
    }
    Dataset::from_instances(instances)
}

fn check_header(header: &str) -> Result<(), String> {
    if header == CSV_HEADER {
        return Ok(());
    }
    let expected: Vec<&str> = CSV_HEADER.split(',').collect();
    let actual: Vec<&str> = header.split(',').collect();
    for (i, want) in expected.iter().enumerate() {
        match actual.get(i) {
            None => return Err(format!("missing column `{want}`")),
            Some(got) if got != want => {
                return Err(format!("expected column `{want}` at position {i}, found `{got}`"))
            }
            _ => {}
        }
    }
    if actual.len() > expected.len() {
        return Err(format!("unexpected extra column `{}`", actual[expected.len()]));
    }
    Ok(())
}
