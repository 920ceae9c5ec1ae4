//! JSON experiment configuration: platforms, network and stress sweeps,
//! ground-truth constants, hyperparameters and the evaluation plan, all in
//! one schema-validated file so a whole experiment is reproducible from a
//! single committed document.

use std::fs::File;
use std::io::BufReader;
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::catalog::{
    CatalogError, FeatureMask, HostRole, HostStress, PlatformSpec, StressProfile, STRESS_CAP,
};
use crate::evaluation::{AccuracyMode, ImAggregation, TrainOptions};
use crate::simulator::{GridConfig, GridPlatform, GroundTruthModel, SimulatorError, StepKind};

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("config io")]
    Io(#[from] std::io::Error),
    #[error("config parse")]
    Parse(#[from] serde_json::Error),
    #[error("invalid config: {0}")]
    Invalid(String),
    #[error(transparent)]
    Catalog(#[from] CatalogError),
    #[error(transparent)]
    Simulator(#[from] SimulatorError),
}

fn invalid(msg: impl Into<String>) -> ConfigError {
    ConfigError::Invalid(msg.into())
}

/// One cloud/fog pair with its network sweep.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PlatformConfig {
    pub name: String,
    pub cloud: PlatformSpec,
    pub fog: PlatformSpec,
    pub bandwidths_bps: Vec<f64>,
    pub latency_ms: f64,
}

/// Stress sweep parameters: CPU rises in fractional steps, memory and disk
/// in absolute per-host units, every dimension capped at `cap` of capacity.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StressSchedule {
    pub cpu_step: f64,
    pub cloud_memory_step_gb: f64,
    pub fog_memory_step_gb: f64,
    pub cloud_disk_step_gb: f64,
    pub fog_disk_step_gb: f64,
    pub cap: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EvaluationPlan {
    pub holdout_fractions: Vec<f64>,
    pub kfold_values: Vec<usize>,
    pub accuracy_mode: AccuracyMode,
    #[serde(default)]
    pub im_aggregation: ImAggregation,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub seed: u64,
    pub ground_truth: GroundTruthModel,
    pub platforms: Vec<PlatformConfig>,
    pub stress_schedule: StressSchedule,
    pub image_sizes_mb: Vec<f64>,
    #[serde(default)]
    pub training: TrainOptions,
    pub evaluation: EvaluationPlan,
}

impl ExperimentConfig {
    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let reader = BufReader::new(File::open(path)?);
        let config: ExperimentConfig = serde_json::from_reader(reader)?;
        config.validate()?;
        Ok(config)
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        self.ground_truth.validate()?;
        if self.platforms.is_empty() {
            return Err(invalid("platform list is empty"));
        }
        for p in &self.platforms {
            p.cloud.validate()?;
            p.fog.validate()?;
            if p.cloud.role != HostRole::Cloud || p.fog.role != HostRole::Fog {
                return Err(invalid(format!(
                    "platform {}: cloud/fog roles are swapped or wrong",
                    p.name
                )));
            }
            if p.bandwidths_bps.is_empty() {
                return Err(invalid(format!("platform {}: bandwidth list is empty", p.name)));
            }
            for &bw in &p.bandwidths_bps {
                if !bw.is_finite() || bw <= 0.0 {
                    return Err(invalid(format!(
                        "platform {}: bandwidth must be finite and > 0, got {bw}",
                        p.name
                    )));
                }
            }
            if !p.latency_ms.is_finite() || p.latency_ms < 0.0 {
                return Err(invalid(format!(
                    "platform {}: latency must be finite and >= 0, got {}",
                    p.name, p.latency_ms
                )));
            }
        }

        let s = &self.stress_schedule;
        if !(0.0 < s.cap && s.cap <= STRESS_CAP) {
            return Err(invalid(format!(
                "stress cap must lie in (0, {STRESS_CAP}], got {}",
                s.cap
            )));
        }
        if !s.cpu_step.is_finite() || s.cpu_step <= 0.0 || s.cpu_step > s.cap {
            return Err(invalid(format!(
                "cpu_step must lie in (0, cap], got {}",
                s.cpu_step
            )));
        }
        for (name, v) in [
            ("cloud_memory_step_gb", s.cloud_memory_step_gb),
            ("fog_memory_step_gb", s.fog_memory_step_gb),
            ("cloud_disk_step_gb", s.cloud_disk_step_gb),
            ("fog_disk_step_gb", s.fog_disk_step_gb),
        ] {
            if !v.is_finite() || v <= 0.0 {
                return Err(invalid(format!("{name} must be finite and > 0, got {v}")));
            }
        }

        if self.image_sizes_mb.is_empty() {
            return Err(invalid("image size list is empty"));
        }
        for &size in &self.image_sizes_mb {
            if !size.is_finite() || size <= 0.0 {
                return Err(invalid(format!(
                    "image sizes must be finite and > 0, got {size}"
                )));
            }
        }

        for (step, indices) in &self.training.mask_overrides {
            if !StepKind::ALL.iter().any(|s| s.name() == step) {
                return Err(invalid(format!(
                    "mask override for unknown step {step:?} (use commit|save|transfer|load|start)"
                )));
            }
            FeatureMask::new(indices.iter().copied())?;
        }
        let fit = &self.training.fit;
        if !fit.ridge_lambda.is_finite() || fit.ridge_lambda < 0.0 {
            return Err(invalid(format!(
                "ridge_lambda must be finite and >= 0, got {}",
                fit.ridge_lambda
            )));
        }
        if fit.poly_degree < 1 {
            return Err(invalid("poly_degree must be >= 1"));
        }
        if fit.rfr.trees < 1 || fit.rfr.min_samples_leaf < 1 {
            return Err(invalid("rfr needs trees >= 1 and min_samples_leaf >= 1"));
        }
        if fit.svr.c <= 0.0 || fit.svr.epsilon <= 0.0 || fit.svr.tol <= 0.0 {
            return Err(invalid("svr needs c, epsilon and tol > 0"));
        }

        for &f in &self.evaluation.holdout_fractions {
            if !f.is_finite() || f <= 0.0 || f >= 1.0 {
                return Err(invalid(format!(
                    "holdout fractions must lie strictly between 0 and 1, got {f}"
                )));
            }
        }
        for &k in &self.evaluation.kfold_values {
            if k < 2 {
                return Err(invalid(format!("k-fold values must be >= 2, got {k}")));
            }
        }
        Ok(())
    }

    /// Stress profiles for one platform: the unstressed baseline, then a
    /// CPU sweep in `cpu_step` fractions, then memory and disk sweeps in
    /// per-host unit steps. A sweep continues while either host is still
    /// below the cap; the other host saturates at the cap.
    pub fn stress_profiles(&self, platform: &PlatformConfig) -> Vec<StressProfile> {
        let s = &self.stress_schedule;
        let cap = s.cap;
        let mut profiles = vec![StressProfile::NONE];

        let mut level = 1;
        loop {
            let cpu = s.cpu_step * level as f64;
            if cpu > cap + 1e-9 {
                break;
            }
            let host = |cpu| HostStress {
                cpu,
                memory: 0.0,
                disk: 0.0,
            };
            profiles.push(StressProfile {
                cloud: host(cpu),
                fog: host(cpu),
            });
            level += 1;
        }

        let mut unit_sweep = |cloud_step: f64,
                              fog_step: f64,
                              cloud_capacity: f64,
                              fog_capacity: f64,
                              make: fn(f64, f64) -> StressProfile| {
            let mut level = 1;
            loop {
                let cloud_raw = cloud_step * level as f64 / cloud_capacity;
                let fog_raw = fog_step * level as f64 / fog_capacity;
                if cloud_raw > cap + 1e-9 && fog_raw > cap + 1e-9 {
                    break;
                }
                profiles.push(make(cloud_raw.min(cap), fog_raw.min(cap)));
                level += 1;
            }
        };
        unit_sweep(
            s.cloud_memory_step_gb,
            s.fog_memory_step_gb,
            platform.cloud.memory_gb,
            platform.fog.memory_gb,
            |cloud, fog| StressProfile {
                cloud: HostStress { cpu: 0.0, memory: cloud, disk: 0.0 },
                fog: HostStress { cpu: 0.0, memory: fog, disk: 0.0 },
            },
        );
        unit_sweep(
            s.cloud_disk_step_gb,
            s.fog_disk_step_gb,
            platform.cloud.disk_gb,
            platform.fog.disk_gb,
            |cloud, fog| StressProfile {
                cloud: HostStress { cpu: 0.0, memory: 0.0, disk: cloud },
                fog: HostStress { cpu: 0.0, memory: 0.0, disk: fog },
            },
        );
        profiles
    }

    /// Expand the configuration into a simulator grid. `quick` thins the
    /// stress schedule 4x and the image list 2x for fast smoke runs.
    pub fn grid(&self, quick: bool) -> GridConfig {
        let stride =
            |v: Vec<StressProfile>, by: usize| v.into_iter().step_by(by).collect::<Vec<_>>();
        let platforms = self
            .platforms
            .iter()
            .map(|p| {
                let mut stress = self.stress_profiles(p);
                if quick {
                    stress = stride(stress, 4);
                }
                GridPlatform {
                    name: p.name.clone(),
                    cloud: p.cloud,
                    fog: p.fog,
                    bandwidths_bps: p.bandwidths_bps.clone(),
                    latency_ms: p.latency_ms,
                    stress_profiles: stress,
                }
            })
            .collect();
        let image_sizes_mb = if quick {
            self.image_sizes_mb.iter().copied().step_by(2).collect()
        } else {
            self.image_sizes_mb.clone()
        };
        GridConfig {
            platforms,
            image_sizes_mb,
        }
    }

    /// Default experiment: two cloud/fog platform pairs, a four-point
    /// bandwidth sweep on the first (30 ms latency) plus a single slow
    /// link on the second, the documented stress schedule, and eight image
    /// sizes. Sized to land near 840 aggregate instances with roughly 65
    /// runtime samples each.
    pub fn paper_defaults() -> Self {
        ExperimentConfig {
            seed: 42,
            ground_truth: GroundTruthModel::default(),
            platforms: vec![
                PlatformConfig {
                    name: "platform-1".into(),
                    cloud: PlatformSpec {
                        role: HostRole::Cloud,
                        cores: 6,
                        memory_gb: 6.0,
                        disk_gb: 30.0,
                        base_disk_throughput_mbps: 200.0,
                    },
                    fog: PlatformSpec {
                        role: HostRole::Fog,
                        cores: 2,
                        memory_gb: 2.0,
                        disk_gb: 20.0,
                        base_disk_throughput_mbps: 100.0,
                    },
                    bandwidths_bps: vec![25e6, 50e6, 100e6, 1000e6],
                    latency_ms: 30.0,
                },
                PlatformConfig {
                    name: "platform-2".into(),
                    cloud: PlatformSpec {
                        role: HostRole::Cloud,
                        cores: 4,
                        memory_gb: 8.0,
                        disk_gb: 80.0,
                        base_disk_throughput_mbps: 200.0,
                    },
                    fog: PlatformSpec {
                        role: HostRole::Fog,
                        cores: 2,
                        memory_gb: 4.0,
                        disk_gb: 40.0,
                        base_disk_throughput_mbps: 100.0,
                    },
                    bandwidths_bps: vec![3.2e6],
                    latency_ms: 30.0,
                },
            ],
            stress_schedule: StressSchedule {
                cpu_step: 0.1,
                cloud_memory_step_gb: 1.0,
                fog_memory_step_gb: 0.5,
                cloud_disk_step_gb: 4.0,
                fog_disk_step_gb: 2.0,
                cap: STRESS_CAP,
            },
            image_sizes_mb: vec![25.0, 50.0, 75.0, 100.0, 150.0, 200.0, 300.0, 500.0],
            training: TrainOptions::default(),
            evaluation: EvaluationPlan {
                holdout_fractions: vec![0.5, 0.6, 0.7, 0.8, 0.9],
                kfold_values: vec![3, 5, 10],
                accuracy_mode: AccuracyMode::Mape,
                im_aggregation: ImAggregation::WholeOffload,
            },
        }
    }
}
