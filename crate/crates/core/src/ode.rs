//! Classical fourth-order Runge–Kutta on flat state vectors.

use crate::error::Result;

/// One RK4 step of y' = f(t, y). The right-hand side may fail, which aborts
/// the step.
pub fn rk4_step<F>(y: &[f64], t: f64, dt: f64, mut f: F) -> Result<Vec<f64>>
where
    F: FnMut(f64, &[f64]) -> Result<Vec<f64>>,
{
    let n = y.len();
    let k1 = f(t, y)?;
    let mut tmp: Vec<f64> = (0..n).map(|i| y[i] + 0.5 * dt * k1[i]).collect();
    let k2 = f(t + 0.5 * dt, &tmp)?;
    for i in 0..n {
        tmp[i] = y[i] + 0.5 * dt * k2[i];
    }
    let k3 = f(t + 0.5 * dt, &tmp)?;
    for i in 0..n {
        tmp[i] = y[i] + dt * k3[i];
    }
    let k4 = f(t + dt, &tmp)?;
    Ok((0..n)
        .map(|i| y[i] + dt / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]))
        .collect())
}
