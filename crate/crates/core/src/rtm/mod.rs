//! Reverse time migration over the scheduler: the shot loop is either a
//! fixed block partition or the CTWS task loop, with `update_list` called
//! from inside both time loops of every shot.

mod config;
mod run;
mod shot;

use thiserror::Error;

use crate::sched::TaskId;
use crate::sim::SimError;
use crate::wave::WaveError;

pub use config::{ModelSpec, RtmConfig, ShotDescriptor};
pub use run::{reduce_images, run_rtm, static_distribute, RtmCluster, RtmExecutor, RtmOutput};
pub use shot::RtmContext;

#[derive(Debug, Error)]
pub enum RtmError {
    #[error("invalid migration setup: {0}")]
    Config(String),
    #[error(transparent)]
    Wave(#[from] WaveError),
    #[error("shot {shot} aborted: {source}")]
    Shot {
        shot: TaskId,
        #[source]
        source: WaveError,
    },
    #[error(transparent)]
    Cluster(#[from] SimError),
}
