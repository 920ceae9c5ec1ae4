//! Domain types for offloading experiments: the 21-entry parameter
//! catalogue, per-step timings, platform/network/stress configuration,
//! and the feature masks that select which parameters feed each model.

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Number of entries in a [`ParameterVector`] (P1..P21).
pub const PARAM_COUNT: usize = 21;

/// Upper bound on any stress fraction (hosts are never loaded past 75%).
pub const STRESS_CAP: f64 = 0.75;

/// 1-based indices into the parameter catalogue.
pub mod param {
    pub const CLOUD_SYS_CPU: usize = 1;
    pub const CLOUD_SYS_MEM: usize = 2;
    pub const CLOUD_SYS_DISK: usize = 3;
    pub const CLOUD_PROC_CPU: usize = 4;
    pub const CLOUD_PROC_MEM: usize = 5;
    pub const CLOUD_PROC_DISK_BPS: usize = 6;
    pub const FOG_SYS_CPU: usize = 7;
    pub const FOG_SYS_MEM: usize = 8;
    pub const FOG_SYS_DISK: usize = 9;
    pub const FOG_PROC_CPU: usize = 10;
    pub const FOG_PROC_MEM: usize = 11;
    pub const FOG_PROC_DISK_BPS: usize = 12;
    pub const IMAGE_SIZE_MB: usize = 13;
    pub const CLOUD_CORES: usize = 14;
    pub const CLOUD_MEMORY_GB: usize = 15;
    pub const CLOUD_DISK_GB: usize = 16;
    pub const FOG_CORES: usize = 17;
    pub const FOG_MEMORY_GB: usize = 18;
    pub const FOG_DISK_GB: usize = 19;
    pub const NETWORK_BANDWIDTH_BPS: usize = 20;
    pub const NETWORK_LATENCY_MS: usize = 21;
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum CatalogError {
    #[error("step time must be finite and non-negative, got {0}")]
    InvalidStepTime(f64),
    #[error("feature mask must not be empty")]
    EmptyMask,
    #[error("feature mask index {0} outside 1..=21")]
    MaskIndexOutOfRange(usize),
    #[error("feature mask index {0} listed twice")]
    DuplicateMaskIndex(usize),
    #[error("{0}")]
    InvalidConfig(String),
}

/// One offload instance's 21 features, in fixed order P1..P21.
///
/// P1-P3 / P7-P9: cloud/fog system CPU, memory, disk utilisation (%).
/// P4-P6 / P10-P12: cloud/fog offloading-process CPU (%), memory (%) and
/// disk throughput (bytes/s). P13: image size (MB). P14-P16 / P17-P19:
/// cloud/fog cores, memory (GB), disk (GB). P20: bandwidth (bps).
/// P21: latency (ms).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ParameterVector([f64; PARAM_COUNT]);

impl ParameterVector {
    pub fn from_array(values: [f64; PARAM_COUNT]) -> Self {
        ParameterVector(values)
    }

    pub fn as_array(&self) -> &[f64; PARAM_COUNT] {
        &self.0
    }

    /// Value of the parameter with the given 1-based index.
    pub fn value(&self, index: usize) -> f64 {
        assert!(
            (1..=PARAM_COUNT).contains(&index),
            "parameter index {index} outside 1..=21"
        );
        self.0[index - 1]
    }

    pub fn set(&mut self, index: usize, value: f64) {
        assert!(
            (1..=PARAM_COUNT).contains(&index),
            "parameter index {index} outside 1..=21"
        );
        self.0[index - 1] = value;
    }
}

/// Check every catalogue invariant; the returned list is empty iff the
/// vector is valid.
pub fn validate_parameter_vector(pv: &ParameterVector) -> Vec<String> {
    let mut violations = Vec::new();
    for index in 1..=PARAM_COUNT {
        let v = pv.value(index);
        if !v.is_finite() {
            violations.push(format!("p{index} must be finite"));
            continue;
        }
        match index {
            1..=5 | 7..=11 => {
                if !(0.0..=100.0).contains(&v) {
                    violations.push(format!("p{index} out of [0,100]"));
                }
            }
            6 | 12 => {
                if v < 0.0 {
                    violations.push(format!("p{index} must be >= 0"));
                }
            }
            14 | 17 => {
                if v < 1.0 {
                    violations.push(format!("p{index} must be >= 1"));
                }
            }
            13 | 15 | 16 | 18 | 19 | 20 => {
                if v <= 0.0 {
                    violations.push(format!("p{index} must be > 0"));
                }
            }
            21 => {
                if v < 0.0 {
                    violations.push(format!("p{index} must be >= 0"));
                }
            }
            _ => unreachable!(),
        }
    }
    violations
}

/// Sum the five step durations, rejecting negative or non-finite inputs.
pub fn total_offload_time(
    t_commit: f64,
    t_save: f64,
    t_transfer: f64,
    t_load: f64,
    t_start: f64,
) -> Result<f64, CatalogError> {
    for t in [t_commit, t_save, t_transfer, t_load, t_start] {
        if !t.is_finite() || t < 0.0 {
            return Err(CatalogError::InvalidStepTime(t));
        }
    }
    Ok(t_commit + t_save + t_transfer + t_load + t_start)
}

/// The five step durations of one offload plus their total.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OffloadTiming {
    pub t_commit: f64,
    pub t_save: f64,
    pub t_transfer: f64,
    pub t_load: f64,
    pub t_start: f64,
    pub t_offload: f64,
}

impl OffloadTiming {
    pub fn from_steps(
        t_commit: f64,
        t_save: f64,
        t_transfer: f64,
        t_load: f64,
        t_start: f64,
    ) -> Result<Self, CatalogError> {
        let t_offload = total_offload_time(t_commit, t_save, t_transfer, t_load, t_start)?;
        Ok(OffloadTiming {
            t_commit,
            t_save,
            t_transfer,
            t_load,
            t_start,
            t_offload,
        })
    }

    /// Step durations in execution order (commit, save, transfer, load, start).
    pub fn steps(&self) -> [f64; 5] {
        [
            self.t_commit,
            self.t_save,
            self.t_transfer,
            self.t_load,
            self.t_start,
        ]
    }

    /// Whether the stored total matches the component sum within 1e-9
    /// relative tolerance.
    pub fn total_is_consistent(&self) -> bool {
        let sum: f64 = self.steps().iter().sum();
        (self.t_offload - sum).abs() <= 1e-9 * self.t_offload.abs().max(1.0)
    }
}

/// Ordered set of 1-based parameter indices selecting model inputs.
///
/// Indices are kept ascending so design matrices have a deterministic
/// column order.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FeatureMask {
    indices: Vec<usize>,
}

impl FeatureMask {
    pub fn new(indices: impl IntoIterator<Item = usize>) -> Result<Self, CatalogError> {
        let mut indices: Vec<usize> = indices.into_iter().collect();
        indices.sort_unstable();
        if indices.is_empty() {
            return Err(CatalogError::EmptyMask);
        }
        for pair in indices.windows(2) {
            if pair[0] == pair[1] {
                return Err(CatalogError::DuplicateMaskIndex(pair[0]));
            }
        }
        for &i in &indices {
            if !(1..=PARAM_COUNT).contains(&i) {
                return Err(CatalogError::MaskIndexOutOfRange(i));
            }
        }
        Ok(FeatureMask { indices })
    }

    pub fn indices(&self) -> &[usize] {
        &self.indices
    }

    pub fn len(&self) -> usize {
        self.indices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.indices.is_empty()
    }

    pub fn contains(&self, index: usize) -> bool {
        self.indices.binary_search(&index).is_ok()
    }

    pub fn is_subset_of(&self, other: &FeatureMask) -> bool {
        self.indices.iter().all(|&i| other.contains(i))
    }

    /// Extract the masked entries of a parameter vector, in mask order.
    pub fn project(&self, pv: &ParameterVector) -> Vec<f64> {
        self.indices.iter().map(|&i| pv.value(i)).collect()
    }
}

/// Which model a feature mask is built for: one of the five pipeline
/// steps, or the collective model over all 21 parameters.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MaskKind {
    Commit,
    Save,
    Transfer,
    Load,
    Start,
    Collective,
}

/// The parameter subset that impacts each step (save mirrors commit:
/// both run on the cloud host and depend on the same inputs).
pub fn make_feature_mask(kind: MaskKind) -> FeatureMask {
    let indices: Vec<usize> = match kind {
        MaskKind::Commit | MaskKind::Save => (1..=6).chain(13..=19).collect(),
        MaskKind::Transfer => vec![13, 20, 21],
        MaskKind::Load | MaskKind::Start => (7..=19).collect(),
        MaskKind::Collective => (1..=PARAM_COUNT).collect(),
    };
    FeatureMask::new(indices).expect("built-in masks are valid")
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum HostRole {
    Cloud,
    Fog,
}

/// Static description of one host (cloud or fog side).
///
/// `base_disk_throughput_mbps` is the unloaded sequential disk speed used
/// by the simulator; it is not part of the parameter catalogue.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PlatformSpec {
    pub role: HostRole,
    pub cores: u32,
    pub memory_gb: f64,
    pub disk_gb: f64,
    pub base_disk_throughput_mbps: f64,
}

impl PlatformSpec {
    pub fn validate(&self) -> Result<(), CatalogError> {
        if self.cores < 1 {
            return Err(CatalogError::InvalidConfig(
                "platform cores must be >= 1".into(),
            ));
        }
        for (name, v) in [
            ("memory_gb", self.memory_gb),
            ("disk_gb", self.disk_gb),
            ("base_disk_throughput_mbps", self.base_disk_throughput_mbps),
        ] {
            if !v.is_finite() || v <= 0.0 {
                return Err(CatalogError::InvalidConfig(format!(
                    "platform {name} must be finite and > 0, got {v}"
                )));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NetworkProfile {
    pub bandwidth_bps: f64,
    pub latency_ms: f64,
}

impl NetworkProfile {
    pub fn validate(&self) -> Result<(), CatalogError> {
        if !self.bandwidth_bps.is_finite() || self.bandwidth_bps <= 0.0 {
            return Err(CatalogError::InvalidConfig(format!(
                "bandwidth_bps must be finite and > 0, got {}",
                self.bandwidth_bps
            )));
        }
        if !self.latency_ms.is_finite() || self.latency_ms < 0.0 {
            return Err(CatalogError::InvalidConfig(format!(
                "latency_ms must be finite and >= 0, got {}",
                self.latency_ms
            )));
        }
        Ok(())
    }
}

/// Background load fractions for one host, each in [0, 0.75].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HostStress {
    pub cpu: f64,
    pub memory: f64,
    pub disk: f64,
}

impl HostStress {
    pub const NONE: HostStress = HostStress {
        cpu: 0.0,
        memory: 0.0,
        disk: 0.0,
    };

    pub fn validate(&self) -> Result<(), CatalogError> {
        for (name, v) in [("cpu", self.cpu), ("memory", self.memory), ("disk", self.disk)] {
            if !v.is_finite() || !(0.0..=STRESS_CAP).contains(&v) {
                return Err(CatalogError::InvalidConfig(format!(
                    "{name} stress must lie in [0, {STRESS_CAP}], got {v}"
                )));
            }
        }
        Ok(())
    }
}

/// Background load applied to both hosts during one offload.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StressProfile {
    pub cloud: HostStress,
    pub fog: HostStress,
}

impl StressProfile {
    pub const NONE: StressProfile = StressProfile {
        cloud: HostStress::NONE,
        fog: HostStress::NONE,
    };

    pub fn validate(&self) -> Result<(), CatalogError> {
        self.cloud.validate()?;
        self.fog.validate()
    }
}
