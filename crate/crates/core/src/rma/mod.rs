//! One-sided remote memory access.
//!
//! The scheduler only ever talks to other ranks through the [`OneSided`]
//! contract: collectively created windows of integer slots, exclusive
//! passive-target locks, and `put`/`get` issued under those locks. The
//! [`Fabric`] backend hosts every rank of a simulated cluster inside one
//! process.

mod fabric;

use std::fmt;
use std::time::Duration;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use fabric::{Endpoint, Event, EventKind, Fabric, FabricConfig};

/// Integer slot stored in a window.
pub type Slot = i64;

/// Process identity in `[0, P)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Rank(pub usize);

impl Rank {
    pub fn index(self) -> usize {
        self.0
    }

    /// Successor in the ring of `ranks` processes.
    pub fn next(self, ranks: usize) -> Rank {
        Rank((self.0 + 1) % ranks)
    }
}

impl fmt::Display for Rank {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// Handle of a collectively created window.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct WindowId(pub(crate) usize);

impl fmt::Display for WindowId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "win{}", self.0)
    }
}

/// Proof of an exclusive lock on one rank's segment of a window.
///
/// Only the acquiring rank may release it. A token that was already released
/// is rejected by [`OneSided::unlock`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct LockToken {
    pub window: WindowId,
    pub target: Rank,
    pub origin: Rank,
    pub(crate) epoch: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorKind {
    Configuration,
    Protocol,
    Usage,
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum RmaError {
    #[error("window length mismatch across ranks: {lengths:?}")]
    LengthMismatch { lengths: Vec<usize> },
    #[error("expected one window length per rank ({expected}), got {got}")]
    WrongParticipantCount { expected: usize, got: usize },
    #[error("cluster needs at least one rank")]
    NoRanks,
    #[error("windows must be created before any communication")]
    CommunicationStarted,
    #[error("unknown window {0}")]
    UnknownWindow(WindowId),
    #[error("rank {rank} out of range for {ranks} ranks")]
    RankOutOfRange { rank: Rank, ranks: usize },
    #[error("rank {origin} already holds the lock on {window} at rank {target}")]
    Reentrant {
        origin: Rank,
        target: Rank,
        window: WindowId,
    },
    #[error("rank {origin} does not hold the lock on {window} at rank {target}")]
    NotLocked {
        origin: Rank,
        target: Rank,
        window: WindowId,
    },
    #[error("access [{offset}, {offset}+{len}) exceeds window length {window_len}")]
    OutOfBounds {
        offset: usize,
        len: usize,
        window_len: usize,
    },
}

impl RmaError {
    pub fn kind(&self) -> ErrorKind {
        match self {
            RmaError::LengthMismatch { .. }
            | RmaError::WrongParticipantCount { .. }
            | RmaError::NoRanks => ErrorKind::Configuration,
            RmaError::CommunicationStarted
            | RmaError::Reentrant { .. }
            | RmaError::NotLocked { .. } => ErrorKind::Protocol,
            RmaError::UnknownWindow(_)
            | RmaError::RankOutOfRange { .. }
            | RmaError::OutOfBounds { .. } => ErrorKind::Usage,
        }
    }
}

/// The remote memory contract the scheduler is written against.
///
/// Every call is issued by the implementing endpoint's own rank. Targets are
/// passive: serving a `put` or `get` never requires the target rank to call
/// into the transport.
pub trait OneSided {
    fn rank(&self) -> Rank;

    fn ranks(&self) -> usize;

    /// Blocks until the caller holds `window` at `target` exclusively.
    fn lock_exclusive(&self, target: Rank, window: WindowId) -> Result<LockToken, RmaError>;

    /// Releases a lock. Everything issued under it is visible to the next
    /// locker once this returns.
    fn unlock(&self, token: &LockToken) -> Result<(), RmaError>;

    fn put(
        &self,
        target: Rank,
        window: WindowId,
        offset: usize,
        values: &[Slot],
    ) -> Result<(), RmaError>;

    fn get(
        &self,
        target: Rank,
        window: WindowId,
        offset: usize,
        len: usize,
    ) -> Result<Vec<Slot>, RmaError>;
}

/// How injected latency is paid.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LatencyMode {
    /// Sleep the calling thread.
    #[default]
    Sleep,
    /// Accumulate on the endpoint; a virtual-clock driver drains it with
    /// [`Endpoint::take_virtual_delay`].
    Virtual,
}

/// Per-operation delay on remote segments: `fixed` plus uniform jitter in
/// `[0, jitter]`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct Latency {
    pub fixed: Duration,
    pub jitter: Duration,
    pub mode: LatencyMode,
}

impl Latency {
    pub const ZERO: Latency = Latency {
        fixed: Duration::ZERO,
        jitter: Duration::ZERO,
        mode: LatencyMode::Sleep,
    };

    pub fn is_zero(&self) -> bool {
        self.fixed.is_zero() && self.jitter.is_zero()
    }
}
