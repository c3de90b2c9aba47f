use std::path::PathBuf;

use serde::{Deserialize, Serialize};

use super::RtmError;
use crate::sched::TaskId;
use crate::wave::{Point, SnapshotBackend, VelocityModel};

/// Where the true velocity model comes from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum ModelSpec {
    Homogeneous {
        n: [usize; 3],
        dx: f64,
        c: f64,
    },
    /// Horizontal interface at depth index `interface`.
    TwoLayer {
        n: [usize; 3],
        dx: f64,
        c_top: f64,
        c_bottom: f64,
        interface: usize,
    },
    /// Raw f32 file with a `.hdr` sidecar.
    File { path: PathBuf },
}

impl ModelSpec {
    pub fn build(&self) -> Result<VelocityModel, RtmError> {
        Ok(match self {
            &ModelSpec::Homogeneous { n, dx, c } => VelocityModel::homogeneous(n, dx, c)?,
            &ModelSpec::TwoLayer {
                n,
                dx,
                c_top,
                c_bottom,
                interface,
            } => VelocityModel::two_layer(n, dx, c_top, c_bottom, interface)?,
            ModelSpec::File { path } => VelocityModel::read_raw(path)?,
        })
    }
}

/// One shot gather: the unit of scheduling. `id` is the scheduler task id.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ShotDescriptor {
    pub id: TaskId,
    pub source: Point,
    pub receivers: Vec<Point>,
    /// Recorded data for this shot. Modelled over the true model if absent.
    pub seismogram: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RtmConfig {
    pub model: ModelSpec,
    /// Time steps per propagation.
    pub nt: usize,
    pub dt: f64,
    pub f_peak: f64,
    pub order: usize,
    pub nb: usize,
    pub attenuation: f64,
    /// Box-filter radius (cells) turning the true model into the migration
    /// background.
    pub smoothing_radius: usize,
    pub shots: usize,
    pub source_depth: usize,
    pub receiver_depth: usize,
    pub snapshots: SnapshotBackend,
    /// Keep every k-th forward frame for the imaging condition.
    pub snapshot_every: usize,
    /// Image rows shallower than this are zeroed after stacking.
    pub top_mute: usize,
    /// Per-shot recorded data, by shot index. Missing entries are modelled.
    #[serde(default)]
    pub seismograms: Vec<PathBuf>,
}

impl RtmConfig {
    /// 201 x 201 cells at 10 m: 1400 m/s over 2000 m/s with the interface at
    /// mid-depth.
    pub fn two_layer_desk() -> Self {
        RtmConfig {
            model: ModelSpec::TwoLayer {
                n: [201, 201, 1],
                dx: 10.0,
                c_top: 1400.0,
                c_bottom: 2000.0,
                interface: 100,
            },
            nt: 1800,
            dt: 1e-3,
            f_peak: 15.0,
            order: 8,
            nb: 20,
            attenuation: 0.015,
            smoothing_radius: 5,
            shots: 4,
            source_depth: 2,
            receiver_depth: 2,
            snapshots: SnapshotBackend::Memory,
            snapshot_every: 4,
            top_mute: 0,
            seismograms: Vec::new(),
        }
    }

    pub fn homogeneous_desk() -> Self {
        RtmConfig {
            model: ModelSpec::Homogeneous {
                n: [201, 201, 1],
                dx: 10.0,
                c: 1400.0,
            },
            ..Self::two_layer_desk()
        }
    }

    pub fn validate(&self) -> Result<(), RtmError> {
        let bad = |m: String| Err(RtmError::Config(m));
        if self.nt == 0 || self.shots == 0 || self.snapshot_every == 0 {
            return bad("nt, shots and snapshot_every must be positive".into());
        }
        if !(self.dt > 0.0 && self.f_peak > 0.0) {
            return bad(format!("dt {} and f_peak {} must be positive", self.dt, self.f_peak));
        }
        if self.seismograms.len() > self.shots {
            return bad(format!(
                "{} seismogram files for {} shots",
                self.seismograms.len(),
                self.shots
            ));
        }
        Ok(())
    }

    /// Sources spread evenly along the second axis at `source_depth`, in the
    /// middle of the third; receivers cover the plane at `receiver_depth`.
    pub fn shot_descriptors(&self, n: [usize; 3]) -> Result<Vec<ShotDescriptor>, RtmError> {
        if self.source_depth >= n[0] || self.receiver_depth >= n[0] {
            return Err(RtmError::Config(format!(
                "source depth {} / receiver depth {} outside {} rows",
                self.source_depth, self.receiver_depth, n[0]
            )));
        }
        let receivers: Vec<Point> = (0..n[2])
            .flat_map(|i3| (0..n[1]).map(move |i2| [self.receiver_depth, i2, i3]))
            .collect();
        Ok((0..self.shots)
            .map(|i| {
                let x = ((i as f64 + 0.5) * n[1] as f64 / self.shots as f64) as usize;
                ShotDescriptor {
                    id: TaskId(i as u64),
                    source: [self.source_depth, x.min(n[1] - 1), n[2] / 2],
                    receivers: receivers.clone(),
                    seismogram: self.seismograms.get(i).cloned(),
                }
            })
            .collect())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn shots_are_spread_laterally() {
        let mut c = RtmConfig::two_layer_desk();
        c.shots = 4;
        let s = c.shot_descriptors([201, 201, 1]).unwrap();
        let xs: Vec<usize> = s.iter().map(|d| d.source[1]).collect();
        assert_eq!(xs, vec![25, 75, 125, 175]);
        assert!(s.iter().all(|d| d.receivers.len() == 201 && d.source[0] == 2));
        assert_eq!(s[3].id, TaskId(3));
    }

    #[test]
    fn config_round_trips_through_json() {
        let c = RtmConfig::two_layer_desk();
        let back: RtmConfig = serde_json::from_str(&serde_json::to_string(&c).unwrap()).unwrap();
        assert_eq!(c, back);
        assert!(serde_json::to_string(&c).unwrap().contains("\"kind\":\"two_layer\""));
    }

    #[test]
    fn rejects_bad_configs() {
        let mut c = RtmConfig::two_layer_desk();
        c.snapshot_every = 0;
        assert!(c.validate().is_err());
        let mut c = RtmConfig::two_layer_desk();
        c.source_depth = 500;
        assert!(c.shot_descriptors([201, 201, 1]).is_err());
    }
}
