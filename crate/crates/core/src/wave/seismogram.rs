use std::path::Path;

use super::model::{read_f32_file, write_f32_file};
use super::{Point, WaveError};

/// Traces recorded at fixed receivers, `traces[r * nt + t]`.
#[derive(Debug, Clone, PartialEq)]
pub struct Seismogram {
    receivers: Vec<Point>,
    nt: usize,
    dt: f64,
    traces: Vec<f64>,
}

impl Seismogram {
    pub fn new(receivers: Vec<Point>, nt: usize, dt: f64) -> Result<Self, WaveError> {
        if !(dt > 0.0) {
            return Err(WaveError::Config(format!(
                "sample interval must be positive, got {dt}"
            )));
        }
        let traces = vec![0.0; receivers.len() * nt];
        Ok(Seismogram {
            receivers,
            nt,
            dt,
            traces,
        })
    }

    /// One receiver per lateral position at depth index `depth`.
    pub fn surface_line(
        n: [usize; 3],
        depth: usize,
        nt: usize,
        dt: f64,
    ) -> Result<Self, WaveError> {
        let receivers = (0..n[2])
            .flat_map(|i3| (0..n[1]).map(move |i2| [depth, i2, i3]))
            .collect();
        Self::new(receivers, nt, dt)
    }

    pub fn receivers(&self) -> &[Point] {
        &self.receivers
    }

    pub fn nt(&self) -> usize {
        self.nt
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn traces(&self) -> &[f64] {
        &self.traces
    }

    pub fn trace(&self, r: usize) -> &[f64] {
        &self.traces[r * self.nt..(r + 1) * self.nt]
    }

    pub fn sample(&self, r: usize, t: usize) -> f64 {
        self.traces[r * self.nt + t]
    }

    pub fn set_sample(&mut self, r: usize, t: usize, v: f64) {
        self.traces[r * self.nt + t] = v;
    }

    /// Stores one value per receiver at time sample `t`.
    pub fn record_row(&mut self, t: usize, values: &[f64]) {
        for (r, &v) in values.iter().enumerate() {
            self.traces[r * self.nt + t] = v;
        }
    }

    /// `self - other`, trace by trace.
    pub fn subtract(&self, other: &Seismogram) -> Result<Seismogram, WaveError> {
        if self.receivers != other.receivers || self.nt != other.nt {
            return Err(WaveError::Shape(
                "seismograms have different layouts".into(),
            ));
        }
        let mut out = self.clone();
        for (a, b) in out.traces.iter_mut().zip(&other.traces) {
            *a -= b;
        }
        Ok(out)
    }

    /// Raw little-endian f32 samples, trace after trace.
    pub fn write_raw(&self, path: &Path) -> Result<(), WaveError> {
        write_f32_file(path, self.traces.iter().map(|&v| v as f32))
    }

    /// Reads samples for a known receiver layout.
    pub fn read_raw(
        path: &Path,
        receivers: Vec<Point>,
        nt: usize,
        dt: f64,
    ) -> Result<Self, WaveError> {
        let values = read_f32_file(path)?;
        if values.len() != receivers.len() * nt {
            return Err(WaveError::Shape(format!(
                "{} samples on disk, layout needs {}",
                values.len(),
                receivers.len() * nt
            )));
        }
        let mut s = Self::new(receivers, nt, dt)?;
        s.traces = values.into_iter().map(f64::from).collect();
        Ok(s)
    }
}
