//! Numerical self-checks of the propagator, shared by the test suite and
//! the command line.

use serde::Serialize;

use super::{
    second_derivative_1d, Propagator, PropagatorConfig, VelocityModel, WaveError, WaveState,
    Wavefield,
};

/// Worst relative error of the stencil over monomials of degree `0..=max_degree`
/// sampled on `[-1, 1]`, normalized by `max(1, p (p - 1))`.
pub fn stencil_exactness(order: usize, max_degree: i32) -> Result<f64, WaveError> {
    let dx = 0.05;
    let xs: Vec<f64> = (0..41).map(|i| -1.0 + i as f64 * dx).collect();
    let h = order / 2;
    let mut worst = 0.0f64;
    for p in 0..=max_degree {
        let f: Vec<f64> = xs.iter().map(|x| x.powi(p)).collect();
        let d = second_derivative_1d(&f, dx, order)?;
        let scale = f64::from((p * (p - 1)).max(1));
        for i in h..xs.len() - h {
            let exact = if p >= 2 {
                f64::from(p * (p - 1)) * xs[i].powi(p - 2)
            } else {
                0.0
            };
            worst = worst.max((d[i] - exact).abs() / scale);
        }
    }
    Ok(worst)
}

#[derive(Debug, Clone, Serialize)]
pub struct ConvergenceReport {
    pub dts: Vec<f64>,
    /// RMS difference from the finest run at the final time.
    pub errors: Vec<f64>,
    /// Least-squares slope of `log error` against `log dt`.
    pub slope: f64,
}

/// Gaussian pulse at rest in a homogeneous 2D medium, run to a fixed time
/// with successively halved time steps and compared with a much finer run.
/// The grid is the same for every run, so only the temporal error varies.
pub fn temporal_convergence() -> Result<ConvergenceReport, WaveError> {
    let n = 81;
    let dx = 10.0;
    let c = 2000.0;
    let t_end = 0.048;
    let model = VelocityModel::homogeneous([n, n, 1], dx, c)?;
    let sigma = 40.0;
    let centre = (n / 2) as f64 * dx;
    let mut u0 = Vec::with_capacity(n * n);
    for i2 in 0..n {
        for i1 in 0..n {
            let r2 = (i1 as f64 * dx - centre).powi(2) + (i2 as f64 * dx - centre).powi(2);
            u0.push((-r2 / (2.0 * sigma * sigma)).exp());
        }
    }
    let run = |steps: usize| -> Result<Vec<f64>, WaveError> {
        let mut cfg = PropagatorConfig::new(t_end / steps as f64);
        cfg.nb = 0;
        let prop = Propagator::<f64>::new(&model, cfg)?;
        let mut st = at_rest(&prop, &u0)?;
        for _ in 0..steps {
            prop.advance(&mut st)?;
        }
        Ok(st.curr.interior())
    };
    let base_steps = 30;
    let reference = run(base_steps * 64)?;
    let mut dts = Vec::new();
    let mut errors = Vec::new();
    for k in 0..4 {
        let steps = base_steps << k;
        let u = run(steps)?;
        let sq: f64 = u.iter().zip(&reference).map(|(a, b)| (a - b).powi(2)).sum();
        dts.push(t_end / steps as f64);
        errors.push((sq / u.len() as f64).sqrt());
    }
    let slope = fit_slope(&dts, &errors);
    Ok(ConvergenceReport { dts, errors, slope })
}

/// State whose current level is `u0` with zero time derivative. The
/// previous level is `u0 + dt^2/2 u_tt`, i.e. half of a step from `(u0, u0)`.
fn at_rest(prop: &Propagator<f64>, u0: &[f64]) -> Result<WaveState<f64>, WaveError> {
    let curr = Wavefield::from_interior(*prop.geometry(), u0)?;
    let stepped = prop.step_wavefield(&curr, &curr)?;
    let mut prev = curr.clone();
    for (p, (a, b)) in prev
        .data_mut()
        .iter_mut()
        .zip(curr.data().iter().zip(stepped.data()))
    {
        *p = 0.5 * (a + b);
    }
    WaveState::new(prev, curr)
}

fn fit_slope(x: &[f64], y: &[f64]) -> f64 {
    let lx: Vec<f64> = x.iter().map(|v| v.ln()).collect();
    let ly: Vec<f64> = y.iter().map(|v| v.ln()).collect();
    let n = lx.len() as f64;
    let mx = lx.iter().sum::<f64>() / n;
    let my = ly.iter().sum::<f64>() / n;
    let cov: f64 = lx.iter().zip(&ly).map(|(a, b)| (a - mx) * (b - my)).sum();
    let var: f64 = lx.iter().map(|a| (a - mx).powi(2)).sum();
    cov / var
}

/// Energy (sum of squares) that comes back into a 1D interior after a
/// pulse has run into the damping layer, relative to the outgoing energy.
/// A zero-mean pulse at rest (a Ricker shape in space, dominant wavelength
/// near 100 m) splits into two pulses heading for either edge. The
/// reference is the same start on a domain long enough that nothing
/// returns within the observation window.
pub fn taper_reflection_ratio(nb: usize, attenuation: f64) -> Result<f64, WaveError> {
    let n = 201;
    let margin = 400;
    let dx = 10.0;
    let c = 2000.0;
    let dt = 1e-3;
    let sigma = 25.0;
    // Pulses travel 0.2 cells per step: by now they have crossed the half
    // interior and the layer, and anything reflected is back inside.
    let steps = 900;

    let run = |len: usize, nb: usize, centre: usize| -> Result<Vec<f64>, WaveError> {
        let model = VelocityModel::homogeneous([len, 1, 1], dx, c)?;
        let mut cfg = PropagatorConfig::new(dt);
        cfg.nb = nb;
        cfg.attenuation = attenuation;
        let prop = Propagator::<f64>::new(&model, cfg)?;
        let u0: Vec<f64> = (0..len)
            .map(|i| {
                let x = (i as f64 - centre as f64) * dx;
                let a = x * x / (sigma * sigma);
                (1.0 - a) * (-0.5 * a).exp()
            })
            .collect();
        let mut st = at_rest(&prop, &u0)?;
        for _ in 0..steps {
            prop.advance(&mut st)?;
        }
        Ok(st.curr.interior())
    };

    let small = run(n, nb, n / 2)?;
    let big = run(n + 2 * margin, 0, margin + n / 2)?;
    let incident: f64 = big.iter().map(|v| v * v).sum();
    let reflected: f64 = small
        .iter()
        .zip(&big[margin..margin + n])
        .map(|(a, b)| (a - b).powi(2))
        .sum();
    if incident == 0.0 {
        return Err(WaveError::Config(
            "reference pulse carried no energy".into(),
        ));
    }
    Ok(reflected / incident)
}

#[derive(Debug, Clone, Serialize)]
pub struct KernelReport {
    pub stencil_max_error: f64,
    pub stencil_ok: bool,
    pub convergence: ConvergenceReport,
    pub convergence_ok: bool,
    pub reflection_ratio: f64,
    pub reflection_ok: bool,
}

impl KernelReport {
    pub fn passed(&self) -> bool {
        self.stencil_ok && self.convergence_ok && self.reflection_ok
    }
}

/// Runs the stencil, convergence and taper checks with their default
/// tolerances.
pub fn run_kernel_checks() -> Result<KernelReport, WaveError> {
    let stencil_max_error = stencil_exactness(8, 9)?;
    let convergence = temporal_convergence()?;
    let reflection_ratio = taper_reflection_ratio(20, 0.015)?;
    Ok(KernelReport {
        stencil_max_error,
        stencil_ok: stencil_max_error <= 1e-9,
        convergence_ok: (convergence.slope - 2.0).abs() <= 0.3,
        convergence,
        reflection_ratio,
        reflection_ok: reflection_ratio <= 0.01,
    })
}
