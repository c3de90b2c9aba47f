use super::WaveError;

/// Sampled source pulse.
#[derive(Debug, Clone, PartialEq)]
pub struct SourceWavelet {
    pub samples: Vec<f64>,
    pub dt: f64,
    pub f_peak: f64,
    /// Time of the peak, seconds from sample 0.
    pub delay: f64,
}

impl SourceWavelet {
    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn at(&self, step: usize) -> f64 {
        self.samples.get(step).copied().unwrap_or(0.0)
    }

    /// Period of the peak frequency in samples.
    pub fn dominant_period_samples(&self) -> f64 {
        1.0 / (self.f_peak * self.dt)
    }
}

/// Ricker wavelet `(1 - 2 pi^2 f^2 tau^2) exp(-pi^2 f^2 tau^2)` with
/// `tau = t - 1/f`, normalized to unit peak.
pub fn ricker(f_peak: f64, dt: f64, nt: usize) -> Result<SourceWavelet, WaveError> {
    if !(f_peak > 0.0 && f_peak.is_finite()) || !(dt > 0.0 && dt.is_finite()) {
        return Err(WaveError::Config(format!(
            "ricker needs positive f_peak and dt (got {f_peak}, {dt})"
        )));
    }
    let delay = 1.0 / f_peak;
    let support = 2.0 * delay;
    if (nt as f64) * dt < support {
        return Err(WaveError::Config(format!(
            "{nt} samples of {dt} s cannot hold a {f_peak} Hz wavelet ({support} s)"
        )));
    }
    let pf2 = (std::f64::consts::PI * f_peak).powi(2);
    let mut samples: Vec<f64> = (0..nt)
        .map(|i| {
            let tau = i as f64 * dt - delay;
            let arg = pf2 * tau * tau;
            (1.0 - 2.0 * arg) * (-arg).exp()
        })
        .collect();
    let peak = samples.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    samples.iter_mut().for_each(|v| *v /= peak);
    Ok(SourceWavelet {
        samples,
        dt,
        f_peak,
        delay,
    })
}
