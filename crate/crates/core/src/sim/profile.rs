use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::SimError;

/// Speed of one worker over time. Multipliers scale task durations, so 2.0
/// means half as fast. `segments[k]` applies from `k * segment_ns` on; the
/// last one holds forever.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WorkerProfile {
    pub rank: usize,
    pub base: f64,
    pub segment_ns: u64,
    pub segments: Vec<f64>,
}

impl WorkerProfile {
    pub fn constant(rank: usize, multiplier: f64) -> Result<Self, SimError> {
        let p = WorkerProfile {
            rank,
            base: multiplier,
            segment_ns: u64::MAX,
            segments: vec![1.0],
        };
        p.validate()?;
        Ok(p)
    }

    pub fn homogeneous(rank: usize) -> Self {
        Self::constant(rank, 1.0).expect("unit speed is valid")
    }

    pub fn validate(&self) -> Result<(), SimError> {
        let ok = |m: f64| m > 0.0 && m.is_finite();
        if !ok(self.base) || self.segments.is_empty() || !self.segments.iter().all(|&m| ok(m)) {
            return Err(SimError::Config(format!(
                "rank {} profile needs positive finite multipliers",
                self.rank
            )));
        }
        if self.segment_ns == 0 {
            return Err(SimError::Config("profile segments must have positive length".into()));
        }
        Ok(())
    }

    pub fn multiplier_at(&self, t_ns: u64) -> f64 {
        let k = (t_ns / self.segment_ns) as usize;
        self.base * self.segments[k.min(self.segments.len() - 1)]
    }

    /// Duration of `nominal_ns` of work started at `t_ns`.
    pub fn scaled(&self, nominal_ns: u64, t_ns: u64) -> u64 {
        (nominal_ns as f64 * self.multiplier_at(t_ns)).round() as u64
    }
}

/// How per-rank profiles are generated.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum SkewModel {
    /// Every rank at unit speed.
    None,
    /// One constant multiplier per rank, cycled if shorter than the ranks.
    Fixed { multipliers: Vec<f64> },
    /// Piecewise-constant multipliers drawn log-uniformly from `[lo, hi]`,
    /// independently per rank and per segment.
    LogUniform { lo: f64, hi: f64, segment_ns: u64 },
}

impl SkewModel {
    pub fn profiles(&self, ranks: usize, seed: u64, horizon_ns: u64) -> Result<Vec<WorkerProfile>, SimError> {
        match self {
            SkewModel::None => Ok((0..ranks).map(WorkerProfile::homogeneous).collect()),
            SkewModel::Fixed { multipliers } => {
                if multipliers.is_empty() {
                    return Err(SimError::Config("fixed skew needs at least one multiplier".into()));
                }
                (0..ranks)
                    .map(|r| WorkerProfile::constant(r, multipliers[r % multipliers.len()]))
                    .collect()
            }
            &SkewModel::LogUniform { lo, hi, segment_ns } => {
                if !(lo > 0.0 && hi >= lo && hi.is_finite()) || segment_ns == 0 {
                    return Err(SimError::Config(format!(
                        "log-uniform skew needs 0 < lo <= hi and a positive segment (got {lo}, {hi}, {segment_ns})"
                    )));
                }
                let count = (horizon_ns / segment_ns).saturating_add(1).min(1 << 20) as usize;
                let (llo, lhi) = (lo.ln(), hi.ln());
                (0..ranks)
                    .map(|r| {
                        let mut rng = ChaCha8Rng::seed_from_u64(seed);
                        rng.set_stream(r as u64 + 1);
                        let segments = (0..count)
                            .map(|_| {
                                if lhi > llo {
                                    rng.random_range(llo..=lhi).exp()
                                } else {
                                    lo
                                }
                            })
                            .collect();
                        let p = WorkerProfile {
                            rank: r,
                            base: 1.0,
                            segment_ns,
                            segments,
                        };
                        p.validate()?;
                        Ok(p)
                    })
                    .collect()
            }
        }
    }
}

/// Shared service (network, parallel file system) every task iteration
/// touches once. Up to `capacity` concurrent users pay `access_ns`; beyond
/// that the cost grows in proportion to the demand.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ContentionModel {
    pub capacity: usize,
    pub access_ns: u64,
}

impl ContentionModel {
    pub const NONE: ContentionModel = ContentionModel {
        capacity: usize::MAX,
        access_ns: 0,
    };

    pub fn validate(&self) -> Result<(), SimError> {
        if self.capacity == 0 {
            return Err(SimError::Config("contention capacity must be positive".into()));
        }
        Ok(())
    }

    /// Access cost when `active` ranks use the service at once.
    pub fn delay_ns(&self, active: usize) -> u64 {
        if self.access_ns == 0 {
            return 0;
        }
        let load = (active as f64 / self.capacity as f64).max(1.0);
        (self.access_ns as f64 * load).round() as u64
    }
}

impl Default for ContentionModel {
    fn default() -> Self {
        Self::NONE
    }
}
