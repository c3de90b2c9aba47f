use std::path::PathBuf;
use std::time::Duration;

use ctws_core::rtm::{ModelSpec, RtmCluster, RtmConfig};
use ctws_core::sched::Backoff;
use ctws_core::sim::{presets, ClockMode, ContentionModel, Experiment, SchedulerMode, SkewModel, Workload};
use ctws_core::rma::{Latency, LatencyMode};
use ctws_core::wave::SnapshotBackend;
use serde::{Deserialize, Serialize};

use crate::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum WorkloadKind {
    Synthetic,
    Rtm,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum SkewKind {
    None,
    Fixed,
    LogUniform,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum ModelKind {
    TwoLayer,
    Homogeneous,
    File,
}

/// Everything a run needs. Flat so every key has a flag of the same name.
/// Defaults reproduce the skewed synthetic preset on 4 ranks.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub workload: WorkloadKind,
    pub sched: SchedulerMode,
    pub ranks: usize,
    /// Synthetic tasks, or shots for the rtm workload.
    pub tasks: usize,
    pub iterations: u32,
    pub iteration_ms: f64,
    pub clock: ClockMode,
    pub skew: SkewKind,
    pub skew_lo: f64,
    pub skew_hi: f64,
    pub skew_segment_ms: f64,
    pub skew_multipliers: Vec<f64>,
    pub contention_capacity: usize,
    pub contention_access_us: f64,
    pub latency_us: f64,
    pub jitter_us: f64,
    pub backoff_initial_ms: f64,
    pub backoff_max_ms: f64,
    pub seed: u64,
    pub watchdog_factor: f64,
    pub model: ModelKind,
    pub model_file: Option<PathBuf>,
    /// Cells per side of the square rtm grid.
    pub grid: usize,
    pub dx: f64,
    pub c_top: f64,
    pub c_bottom: f64,
    pub nt: usize,
    pub dt_ms: f64,
    pub f_peak: f64,
    pub snapshot_every: usize,
    pub snapshot_dir: Option<PathBuf>,
    pub output: Option<PathBuf>,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        let rtm = RtmConfig::two_layer_desk();
        ExperimentConfig {
            workload: WorkloadKind::Synthetic,
            sched: SchedulerMode::Ctws,
            ranks: 4,
            tasks: 4 * presets::TASKS_PER_RANK,
            iterations: presets::ITERATIONS,
            iteration_ms: presets::ITERATION.as_secs_f64() * 1e3,
            clock: ClockMode::Virtual,
            skew: SkewKind::LogUniform,
            skew_lo: presets::SKEW_LO,
            skew_hi: presets::SKEW_HI,
            skew_segment_ms: 2.0 * f64::from(presets::ITERATIONS) * presets::ITERATION.as_secs_f64() * 1e3,
            skew_multipliers: vec![1.0],
            contention_capacity: 16,
            contention_access_us: 100.0,
            latency_us: 50.0,
            jitter_us: 20.0,
            backoff_initial_ms: 1.0,
            backoff_max_ms: 16.0,
            seed: 0,
            watchdog_factor: 50.0,
            model: ModelKind::TwoLayer,
            model_file: None,
            grid: 201,
            dx: 10.0,
            c_top: 1400.0,
            c_bottom: 2000.0,
            nt: rtm.nt,
            dt_ms: rtm.dt * 1e3,
            f_peak: rtm.f_peak,
            snapshot_every: rtm.snapshot_every,
            snapshot_dir: None,
            output: None,
        }
    }
}

fn ms(v: f64) -> Duration {
    Duration::from_secs_f64(v / 1e3)
}

fn us(v: f64) -> Duration {
    Duration::from_secs_f64(v / 1e6)
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<(), CliError> {
        let usage = |m: String| Err(CliError::Usage(m));
        if self.ranks == 0 {
            return usage("ranks must be at least 1".into());
        }
        let times = [
            ("iteration_ms", self.iteration_ms),
            ("skew_segment_ms", self.skew_segment_ms),
            ("contention_access_us", self.contention_access_us),
            ("latency_us", self.latency_us),
            ("jitter_us", self.jitter_us),
            ("backoff_initial_ms", self.backoff_initial_ms),
            ("backoff_max_ms", self.backoff_max_ms),
            ("dt_ms", self.dt_ms),
        ];
        if let Some((k, v)) = times.iter().find(|(_, v)| !(v.is_finite() && *v >= 0.0)) {
            return usage(format!("{k} must be a non-negative number, got {v}"));
        }
        if self.workload == WorkloadKind::Rtm {
            if self.tasks == 0 {
                return usage("the rtm workload needs at least one shot".into());
            }
            if self.model == ModelKind::File && self.model_file.is_none() {
                return usage("model file requires model_file".into());
            }
            self.rtm_config()?
                .validate()
                .map_err(|e| CliError::Usage(e.to_string()))?;
        } else {
            self.experiment()
                .validate()
                .map_err(|e| CliError::Usage(e.to_string()))?;
            self.experiment()
                .profiles()
                .map_err(|e| CliError::Usage(e.to_string()))?;
        }
        Ok(())
    }

    fn skew_model(&self) -> SkewModel {
        match self.skew {
            SkewKind::None => SkewModel::None,
            SkewKind::Fixed => SkewModel::Fixed {
                multipliers: self.skew_multipliers.clone(),
            },
            SkewKind::LogUniform => SkewModel::LogUniform {
                lo: self.skew_lo,
                hi: self.skew_hi,
                segment_ns: ms(self.skew_segment_ms).as_nanos() as u64,
            },
        }
    }

    fn backoff(&self) -> Backoff {
        Backoff {
            initial: ms(self.backoff_initial_ms),
            max: ms(self.backoff_max_ms),
        }
    }

    /// The synthetic experiment described by this config.
    pub fn experiment(&self) -> Experiment {
        let workload = Workload::uniform(self.tasks, self.iterations, ms(self.iteration_ms));
        let mut e = Experiment::new(self.ranks, self.sched, workload);
        e.clock = self.clock;
        e.skew = self.skew_model();
        e.contention = ContentionModel {
            capacity: self.contention_capacity,
            access_ns: us(self.contention_access_us).as_nanos() as u64,
        };
        e.latency_fixed = us(self.latency_us);
        e.latency_jitter = us(self.jitter_us);
        e.backoff = self.backoff();
        e.seed = self.seed;
        e.watchdog_factor = self.watchdog_factor;
        e
    }

    pub fn rtm_config(&self) -> Result<RtmConfig, CliError> {
        let n = [self.grid, self.grid, 1];
        let model = match self.model {
            ModelKind::TwoLayer => ModelSpec::TwoLayer {
                n,
                dx: self.dx,
                c_top: self.c_top,
                c_bottom: self.c_bottom,
                interface: self.grid / 2,
            },
            ModelKind::Homogeneous => ModelSpec::Homogeneous {
                n,
                dx: self.dx,
                c: self.c_top,
            },
            ModelKind::File => ModelSpec::File {
                path: self
                    .model_file
                    .clone()
                    .ok_or_else(|| CliError::Usage("model file requires model_file".into()))?,
            },
        };
        Ok(RtmConfig {
            model,
            nt: self.nt,
            dt: self.dt_ms / 1e3,
            f_peak: self.f_peak,
            shots: self.tasks,
            snapshots: match &self.snapshot_dir {
                Some(d) => SnapshotBackend::File(d.clone()),
                None => SnapshotBackend::Memory,
            },
            snapshot_every: self.snapshot_every,
            ..RtmConfig::two_layer_desk()
        })
    }

    pub fn cluster(&self) -> RtmCluster {
        RtmCluster {
            ranks: self.ranks,
            mode: self.sched,
            latency: Latency {
                fixed: us(self.latency_us),
                jitter: us(self.jitter_us),
                mode: LatencyMode::Sleep,
            },
            backoff: self.backoff(),
            seed: self.seed,
            watchdog: None,
        }
    }

    /// Directory name used when no output path is given.
    pub fn default_name(&self) -> String {
        let w = match self.workload {
            WorkloadKind::Synthetic => "synthetic",
            WorkloadKind::Rtm => "rtm",
        };
        format!("{w}-{}-p{}-seed{}", self.sched, self.ranks, self.seed)
    }
}
