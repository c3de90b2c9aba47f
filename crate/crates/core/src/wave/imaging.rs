use std::path::Path;

use super::model::write_f32_file;
use super::{Real, WaveError, Wavefield};

/// Zero-lag cross-correlation image on the interior grid, accumulated in f64.
#[derive(Debug, Clone, PartialEq)]
pub struct Image {
    n: [usize; 3],
    values: Vec<f64>,
}

impl Image {
    pub fn zeros(n: [usize; 3]) -> Self {
        Image {
            n,
            values: vec![0.0; n.iter().product()],
        }
    }

    pub fn from_values(n: [usize; 3], values: Vec<f64>) -> Result<Self, WaveError> {
        if values.len() != n.iter().product::<usize>() {
            return Err(WaveError::Shape(format!(
                "{} values for image {n:?}",
                values.len()
            )));
        }
        Ok(Image { n, values })
    }

    pub fn dims(&self) -> [usize; 3] {
        self.n
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn get(&self, p: [usize; 3]) -> f64 {
        self.values[p[0] + self.n[0] * (p[1] + self.n[1] * p[2])]
    }

    pub fn add(&mut self, other: &Image) -> Result<(), WaveError> {
        if self.n != other.n {
            return Err(WaveError::Shape(format!(
                "image {:?} + {:?}",
                self.n, other.n
            )));
        }
        for (a, b) in self.values.iter_mut().zip(&other.values) {
            *a += b;
        }
        Ok(())
    }

    pub fn energy(&self) -> f64 {
        self.values.iter().map(|v| v * v).sum()
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0f64, |m, v| m.max(v.abs()))
    }

    /// Depth profile at lateral position `(i2, i3)`.
    pub fn column(&self, i2: usize, i3: usize) -> &[f64] {
        let start = self.n[0] * (i2 + self.n[1] * i3);
        &self.values[start..start + self.n[0]]
    }

    /// Largest relative difference `|a - b| / max|a|`.
    pub fn relative_difference(&self, other: &Image) -> Result<f64, WaveError> {
        if self.n != other.n {
            return Err(WaveError::Shape(format!(
                "image {:?} vs {:?}",
                self.n, other.n
            )));
        }
        let scale = self.max_abs().max(other.max_abs());
        if scale == 0.0 {
            return Ok(0.0);
        }
        let diff = self
            .values
            .iter()
            .zip(&other.values)
            .fold(0.0f64, |m, (a, b)| m.max((a - b).abs()));
        Ok(diff / scale)
    }

    pub fn write_raw(&self, path: &Path) -> Result<(), WaveError> {
        write_f32_file(path, self.values.iter().map(|&v| v as f32))?;
        std::fs::write(
            super::model::header_path(path),
            format!("{} {} {}\n", self.n[0], self.n[1], self.n[2]),
        )?;
        Ok(())
    }
}

/// `image += forward * backward` pointwise over the interior. `forward` is
/// an interior frame in depth-fastest order.
pub fn imaging_accumulate<T: Real>(
    image: &mut Image,
    forward: &[f32],
    backward: &Wavefield<T>,
) -> Result<(), WaveError> {
    let g = backward.geometry();
    if g.n != image.n || forward.len() != image.values.len() {
        return Err(WaveError::Shape(format!(
            "imaging {:?} with a {:?} wavefield and {} forward samples",
            image.n,
            g.n,
            forward.len()
        )));
    }
    let n1 = g.n[0];
    let data = backward.data();
    for (col, start) in g.interior_columns().enumerate() {
        let img = &mut image.values[col * n1..(col + 1) * n1];
        let fwd = &forward[col * n1..(col + 1) * n1];
        for ((i, f), b) in img.iter_mut().zip(fwd).zip(&data[start..start + n1]) {
            *i += f64::from(*f) * b.to_f64().unwrap_or(f64::NAN);
        }
    }
    Ok(())
}
