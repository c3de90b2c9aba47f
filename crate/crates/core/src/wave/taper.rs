use super::WaveError;

/// Damping factors for a boundary layer of `nb` points, innermost first:
/// `g[j] = exp(-(attenuation * j)^2)`, so `g[0] = 1` continues the interior
/// and the values shrink toward the outer edge.
pub fn cerjan_coefficients(nb: usize, attenuation: f64) -> Result<Vec<f64>, WaveError> {
    if !(attenuation > 0.0 && attenuation < 1.0) {
        return Err(WaveError::Config(format!(
            "taper attenuation must lie in (0, 1), got {attenuation}"
        )));
    }
    Ok((0..nb)
        .map(|j| {
            let a = attenuation * j as f64;
            (-a * a).exp()
        })
        .collect())
}
