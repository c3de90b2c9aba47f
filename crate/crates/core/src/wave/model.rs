use std::fs;
use std::io::{BufWriter, Read, Write};
use std::path::{Path, PathBuf};

use super::{Point, WaveError};

/// Largest stencil half-width supported; an active axis needs at least
/// `2 * MAX_HALF_WIDTH + 1` points.
pub(crate) const MAX_HALF_WIDTH: usize = 4;

/// Gridded wave speed in m/s on a regular grid with spacing `dx` meters.
#[derive(Debug, Clone, PartialEq)]
pub struct VelocityModel {
    n: [usize; 3],
    dx: f64,
    values: Vec<f64>,
    c_min: f64,
    c_max: f64,
}

impl VelocityModel {
    pub fn new(n: [usize; 3], dx: f64, values: Vec<f64>) -> Result<Self, WaveError> {
        let min_len = 2 * MAX_HALF_WIDTH + 1;
        if n[0] < min_len {
            return Err(WaveError::Model(format!(
                "depth axis has {} points, need at least {min_len}",
                n[0]
            )));
        }
        for (axis, &len) in n.iter().enumerate().skip(1) {
            if len != 1 && len < min_len {
                return Err(WaveError::Model(format!(
                    "axis {} has {len} points, need 1 or at least {min_len}",
                    axis + 1
                )));
            }
        }
        if !(dx > 0.0 && dx.is_finite()) {
            return Err(WaveError::Model(format!(
                "grid spacing must be positive, got {dx}"
            )));
        }
        let expected = n[0] * n[1] * n[2];
        if values.len() != expected {
            return Err(WaveError::Model(format!(
                "{} values for a {}x{}x{} grid",
                values.len(),
                n[0],
                n[1],
                n[2]
            )));
        }
        let mut c_min = f64::INFINITY;
        let mut c_max = 0.0f64;
        for &c in &values {
            if !(c > 0.0 && c.is_finite()) {
                return Err(WaveError::Model(format!(
                    "velocity must be positive, found {c}"
                )));
            }
            c_min = c_min.min(c);
            c_max = c_max.max(c);
        }
        Ok(VelocityModel {
            n,
            dx,
            values,
            c_min,
            c_max,
        })
    }

    pub fn homogeneous(n: [usize; 3], dx: f64, c: f64) -> Result<Self, WaveError> {
        Self::new(n, dx, vec![c; n[0] * n[1] * n[2]])
    }

    /// `c_top` above depth index `interface`, `c_bottom` from it down.
    pub fn two_layer(
        n: [usize; 3],
        dx: f64,
        c_top: f64,
        c_bottom: f64,
        interface: usize,
    ) -> Result<Self, WaveError> {
        let values = (0..n[0] * n[1] * n[2])
            .map(|i| {
                if i % n[0] < interface {
                    c_top
                } else {
                    c_bottom
                }
            })
            .collect();
        Self::new(n, dx, values)
    }

    pub fn dims(&self) -> [usize; 3] {
        self.n
    }

    pub fn dx(&self) -> f64 {
        self.dx
    }

    pub fn c_min(&self) -> f64 {
        self.c_min
    }

    pub fn c_max(&self) -> f64 {
        self.c_max
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Number of axes with more than one point.
    pub fn active_axes(&self) -> usize {
        self.n.iter().filter(|&&len| len > 1).count()
    }

    pub fn index(&self, p: Point) -> usize {
        p[0] + self.n[0] * (p[1] + self.n[1] * p[2])
    }

    pub fn get(&self, p: Point) -> f64 {
        self.values[self.index(p)]
    }

    /// Separable box filter of half-width `radius` along every active axis,
    /// clamping at the edges.
    pub fn smoothed(&self, radius: usize) -> Self {
        let mut v = self.values.clone();
        if radius > 0 {
            let strides = [1, self.n[0], self.n[0] * self.n[1]];
            for axis in 0..3 {
                let len = self.n[axis];
                if len > 1 {
                    v = box_axis(&v, self.n, strides[axis], len, radius);
                }
            }
        }
        let mut model = Self::new(self.n, self.dx, v).expect("smoothing keeps velocities positive");
        // Averaging identical values can drift by an ulp; snap back so a
        // constant model stays exactly constant.
        if self.c_min == self.c_max {
            model = self.clone();
        }
        model
    }

    /// Writes raw little-endian f32 values and a `<path>.hdr` text sidecar.
    pub fn write_raw(&self, path: &Path) -> Result<(), WaveError> {
        write_f32_file(path, self.values.iter().map(|&v| v as f32))?;
        fs::write(
            header_path(path),
            format!("{} {} {} {}\n", self.n[0], self.n[1], self.n[2], self.dx),
        )?;
        Ok(())
    }

    pub fn read_raw(path: &Path) -> Result<Self, WaveError> {
        let hdr = fs::read_to_string(header_path(path))?;
        let fields: Vec<&str> = hdr.split_whitespace().collect();
        if fields.len() != 4 {
            return Err(WaveError::Model(format!(
                "header needs `n1 n2 n3 dx`, got {hdr:?}"
            )));
        }
        let parse_n = |s: &str| {
            s.parse::<usize>()
                .map_err(|e| WaveError::Model(format!("bad dimension {s:?}: {e}")))
        };
        let n = [
            parse_n(fields[0])?,
            parse_n(fields[1])?,
            parse_n(fields[2])?,
        ];
        let dx = fields[3]
            .parse::<f64>()
            .map_err(|e| WaveError::Model(format!("bad spacing {:?}: {e}", fields[3])))?;
        let values = read_f32_file(path)?.into_iter().map(f64::from).collect();
        Self::new(n, dx, values)
    }
}

fn box_axis(v: &[f64], n: [usize; 3], stride: usize, len: usize, radius: usize) -> Vec<f64> {
    let mut out = vec![0.0; v.len()];
    let total = n[0] * n[1] * n[2];
    for start in 0..total {
        // Visit each line once, from its first point.
        if (start / stride) % len != 0 {
            continue;
        }
        for i in 0..len {
            let lo = i.saturating_sub(radius);
            let hi = (i + radius).min(len - 1);
            let sum: f64 = (lo..=hi).map(|j| v[start + j * stride]).sum();
            out[start + i * stride] = sum / (hi - lo + 1) as f64;
        }
    }
    out
}

pub(crate) fn header_path(path: &Path) -> PathBuf {
    let mut s = path.as_os_str().to_owned();
    s.push(".hdr");
    PathBuf::from(s)
}

pub(crate) fn write_f32_file(
    path: &Path,
    values: impl Iterator<Item = f32>,
) -> Result<(), WaveError> {
    let mut w = BufWriter::new(fs::File::create(path)?);
    for v in values {
        w.write_all(&v.to_le_bytes())?;
    }
    w.flush()?;
    Ok(())
}

pub(crate) fn read_f32_file(path: &Path) -> Result<Vec<f32>, WaveError> {
    let mut bytes = Vec::new();
    fs::File::open(path)?.read_to_end(&mut bytes)?;
    if bytes.len() % 4 != 0 {
        return Err(WaveError::Shape(format!(
            "{} is {} bytes, not a whole number of f32 values",
            path.display(),
            bytes.len()
        )));
    }
    Ok(bytes
        .chunks_exact(4)
        .map(|c| f32::from_le_bytes([c[0], c[1], c[2], c[3]]))
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn caches_extremes() {
        let m = VelocityModel::two_layer([20, 15, 1], 10.0, 1400.0, 2000.0, 10).unwrap();
        assert_eq!(m.c_min(), 1400.0);
        assert_eq!(m.c_max(), 2000.0);
        assert_eq!(m.get([9, 3, 0]), 1400.0);
        assert_eq!(m.get([10, 3, 0]), 2000.0);
        assert_eq!(m.active_axes(), 2);
    }

    #[test]
    fn rejects_bad_models() {
        assert!(VelocityModel::homogeneous([8, 20, 1], 10.0, 1500.0).is_err());
        assert!(VelocityModel::homogeneous([20, 5, 1], 10.0, 1500.0).is_err());
        assert!(VelocityModel::homogeneous([20, 1, 1], 0.0, 1500.0).is_err());
        assert!(VelocityModel::homogeneous([20, 1, 1], 10.0, 0.0).is_err());
        assert!(VelocityModel::new([20, 1, 1], 10.0, vec![1.0; 19]).is_err());
        let mut v = vec![1500.0; 20];
        v[3] = f64::NAN;
        assert!(VelocityModel::new([20, 1, 1], 10.0, v).is_err());
    }

    #[test]
    fn smoothing_blurs_interface_and_keeps_constants() {
        let m = VelocityModel::two_layer([30, 12, 1], 10.0, 1400.0, 2000.0, 15).unwrap();
        let s = m.smoothed(3);
        assert_eq!(s.get([0, 5, 0]), 1400.0);
        assert_eq!(s.get([29, 5, 0]), 2000.0);
        let mid = s.get([15, 5, 0]);
        assert!(mid > 1400.0 && mid < 2000.0);
        assert!((mid - (3.0 * 1400.0 + 4.0 * 2000.0) / 7.0).abs() < 1e-9);
        let h = VelocityModel::homogeneous([20, 20, 1], 10.0, 1234.567).unwrap();
        assert_eq!(h.smoothed(5), h);
    }

    #[test]
    fn raw_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("model.bin");
        let m = VelocityModel::two_layer([12, 10, 9], 12.5, 1400.0, 2000.0, 6).unwrap();
        m.write_raw(&path).unwrap();
        assert_eq!(fs::metadata(&path).unwrap().len(), 12 * 10 * 9 * 4);
        assert_eq!(
            fs::read_to_string(dir.path().join("model.bin.hdr")).unwrap(),
            "12 10 9 12.5\n"
        );
        assert_eq!(VelocityModel::read_raw(&path).unwrap(), m);
    }
}
