use std::collections::BTreeMap;
use std::sync::Arc;
use std::time::Duration;

use serde::{Deserialize, Serialize};

use super::{RtmConfig, RtmContext, RtmError, ShotDescriptor};
use crate::rma::Latency;
use crate::sched::{block_partition, Backoff, TaskExecutor, TaskId};
use crate::sim::{run_threaded, MetricsRecord, SchedulerMode, ThreadedOptions};
use crate::wave::Image;

/// Block partition of the shot list, the first `shots % P` ranks taking one
/// extra.
pub fn static_distribute(shots: &[ShotDescriptor], ranks: usize) -> Vec<Vec<ShotDescriptor>> {
    block_partition(shots.len(), ranks)
        .into_iter()
        .map(|r| shots[r].to_vec())
        .collect()
}

/// Elementwise sum of the per-rank partial images, in the given order.
pub fn reduce_images(images: &[Image]) -> Result<Image, RtmError> {
    let (first, rest) = images
        .split_first()
        .ok_or_else(|| RtmError::Config("no images to reduce".into()))?;
    let mut total = first.clone();
    for img in rest {
        total.add(img)?;
    }
    Ok(total)
}

/// The simulated cluster a migration runs on.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RtmCluster {
    pub ranks: usize,
    pub mode: SchedulerMode,
    pub latency: Latency,
    pub backoff: Backoff,
    pub seed: u64,
    pub watchdog: Option<Duration>,
}

impl RtmCluster {
    pub fn new(ranks: usize, mode: SchedulerMode) -> Self {
        RtmCluster {
            ranks,
            mode,
            latency: Latency::ZERO,
            backoff: Backoff::default(),
            seed: 0,
            watchdog: None,
        }
    }
}

/// Per-rank shot runner: migrates each shot it is handed and stacks the
/// result into its partial image.
#[derive(Debug)]
pub struct RtmExecutor {
    ctx: Arc<RtmContext>,
    shots: Arc<BTreeMap<TaskId, ShotDescriptor>>,
    image: Image,
    shots_imaged: usize,
    hook_calls: u64,
}

impl RtmExecutor {
    pub fn new(ctx: Arc<RtmContext>, shots: Arc<BTreeMap<TaskId, ShotDescriptor>>) -> Self {
        let image = Image::zeros(ctx.model().dims());
        RtmExecutor {
            ctx,
            shots,
            image,
            shots_imaged: 0,
            hook_calls: 0,
        }
    }

    pub fn image(&self) -> &Image {
        &self.image
    }

    pub fn shots_imaged(&self) -> usize {
        self.shots_imaged
    }

    pub fn hook_calls(&self) -> u64 {
        self.hook_calls
    }
}

impl TaskExecutor for RtmExecutor {
    type Error = RtmError;

    fn execute(&mut self, task: TaskId, hook: &mut dyn FnMut()) -> Result<(), RtmError> {
        let shot = self
            .shots
            .get(&task)
            .ok_or_else(|| RtmError::Config(format!("no shot with id {task}")))?;
        let calls = &mut self.hook_calls;
        let img = self.ctx.run_shot(shot, &mut || {
            *calls += 1;
            hook()
        })?;
        self.image.add(&img)?;
        self.shots_imaged += 1;
        Ok(())
    }
}

#[derive(Debug)]
pub struct RtmOutput {
    pub image: Image,
    pub metrics: MetricsRecord,
    pub shots_imaged: usize,
    pub hook_calls: u64,
}

/// Runs every shot once across the cluster and reduces the partial images
/// after all ranks have returned.
pub fn run_rtm(config: &RtmConfig, cluster: &RtmCluster) -> Result<RtmOutput, RtmError> {
    let ctx = Arc::new(RtmContext::new(config.clone())?);
    let shots = ctx.shots()?;
    let ids: Vec<TaskId> = shots.iter().map(|s| s.id).collect();
    let by_id = Arc::new(shots.into_iter().map(|s| (s.id, s)).collect());
    let opts = ThreadedOptions {
        mode: cluster.mode,
        latency: cluster.latency,
        backoff: cluster.backoff,
        seed: cluster.seed,
        watchdog: cluster.watchdog,
    };
    let run = run_threaded(
        cluster.ranks,
        &ids,
        |_| RtmExecutor::new(ctx.clone(), Arc::clone(&by_id)),
        opts,
    )?;
    let images: Vec<Image> = run.executors.iter().map(|e| e.image.clone()).collect();
    Ok(RtmOutput {
        image: reduce_images(&images)?,
        shots_imaged: run.executors.iter().map(|e| e.shots_imaged).sum(),
        hook_calls: run.executors.iter().map(|e| e.hook_calls).sum(),
        metrics: run.metrics,
    })
}
