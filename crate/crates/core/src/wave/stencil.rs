use super::WaveError;

/// Central second-derivative weights `[w0, w1, ..., w_{order/2}]`; the full
/// stencil is symmetric, `w_k` applying to both `i-k` and `i+k`.
pub fn stencil_coefficients(order: usize) -> Result<Vec<f64>, WaveError> {
    let w = match order {
        2 => vec![-2.0, 1.0],
        4 => vec![-5.0 / 2.0, 4.0 / 3.0, -1.0 / 12.0],
        8 => vec![
            -205.0 / 72.0,
            8.0 / 5.0,
            -1.0 / 5.0,
            8.0 / 315.0,
            -1.0 / 560.0,
        ],
        _ => {
            return Err(WaveError::Config(format!(
                "unsupported stencil order {order} (expected 2, 4 or 8)"
            )))
        }
    };
    Ok(w)
}

/// Applies the stencil to a 1D sample vector. Points closer than the
/// half-width to either end come back as NaN.
pub fn second_derivative_1d(f: &[f64], dx: f64, order: usize) -> Result<Vec<f64>, WaveError> {
    let w = stencil_coefficients(order)?;
    let h = w.len() - 1;
    let inv = 1.0 / (dx * dx);
    Ok((0..f.len())
        .map(|i| {
            if i < h || i + h >= f.len() {
                return f64::NAN;
            }
            let mut acc = w[0] * f[i];
            for (k, wk) in w.iter().enumerate().skip(1) {
                acc += wk * (f[i - k] + f[i + k]);
            }
            acc * inv
        })
        .collect())
}
