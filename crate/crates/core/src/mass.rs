//! Mass functionals: static Brown–York mass of a leaf, the monotone
//! quasi-local series along the extension, the total mass at infinity and
//! the inequality between them.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{KmlError, Result};
use crate::extension::ExtensionTrajectory;
use crate::geometry::{surface_geometry, GraphSurface, SurfaceGeometry};
use crate::grid::{neumaier_sum, PeriodicField};

/// (1/8π)∫ V(H₀ − H_phys) dA over the reference surface.
pub fn static_brown_york(geom: &SurfaceGeometry, h_phys: &PeriodicField) -> Result<f64> {
    if h_phys.grid() != geom.grid() {
        return Err(KmlError::input("H_phys lives on a different grid"));
    }
    if !(h_phys.min() > 0.0) || !h_phys.is_finite() {
        let k = h_phys.argmin();
        let n2 = h_phys.grid().n2();
        return Err(KmlError::hypothesis(format!(
            "H_phys > 0 fails at grid point ({},{})",
            k / n2,
            k % n2
        )));
    }
    let n = geom.grid().len();
    let dens: Vec<f64> = (0..n)
        .map(|i| {
            geom.potential.values()[i]
                * (geom.mean_curvature.values()[i] - h_phys.values()[i])
                * geom.area_density.values()[i]
        })
        .collect();
    Ok(weighted_integral(geom, dens) / (8.0 * PI))
}

fn weighted_integral(geom: &SurfaceGeometry, dens: Vec<f64>) -> f64 {
    let grid = geom.grid();
    let (h1, h2) = grid.spacing();
    neumaier_sum(dens) * h1 * h2 * grid.torus().sqrt_det()
}

/// 𝔪(t_k) = (1/8π)∫ V(H − w^{−1}H) dA on each stored leaf of the extension.
pub fn quasilocal_series(ext: &ExtensionTrajectory) -> Result<Vec<(f64, f64)>> {
    let mut out = Vec::with_capacity(ext.len());
    for k in 0..ext.len() {
        let t = ext.times()[k];
        let geom = surface_geometry(&GraphSurface::new(ext.v(k)))?;
        let e3 = (-3.0 * t).exp();
        let z = ext.z(k).values();
        let dens: Vec<f64> = (0..z.len())
            .map(|i| {
                let eps = e3 * z[i];
                // 1 − 1/w without cancellation
                let frac = eps / (1.0 + eps);
                geom.potential.values()[i]
                    * geom.mean_curvature.values()[i]
                    * frac
                    * geom.area_density.values()[i]
            })
            .collect();
        out.push((t, weighted_integral(&geom, dens) / (8.0 * PI)));
    }
    Ok(out)
}

/// Largest forward increment of a mass series (≤ 0 when nonincreasing).
pub fn monotonicity_violation(series: &[(f64, f64)]) -> f64 {
    series
        .windows(2)
        .map(|w| w[1].1 - w[0].1)
        .fold(f64::NEG_INFINITY, f64::max)
        .max(0.0)
}

/// m(g₊) = (1/4π)∫ w_∞ dA_σ.
pub fn total_mass_from_w_infinity(w_inf: &PeriodicField) -> f64 {
    w_inf.integrate() * w_inf.grid().torus().sqrt_det() / (4.0 * PI)
}

/// Tangential metric components sampled on one coordinate sphere r = const
/// of an asymptotic chart g = dr² + g_ij(r, θ)dθ^i dθ^j.
#[derive(Clone, Debug)]
pub struct RadialSample {
    pub r: f64,
    pub g11: PeriodicField,
    pub g12: PeriodicField,
    pub g22: PeriodicField,
}

#[derive(Clone, Debug)]
pub struct MassAspect {
    /// Tr_σ(3𝐦)
    pub trace: PeriodicField,
    pub mass: f64,
    /// max weighted residual e^{−2r}|g − fit| over samples
    pub residual: f64,
    pub condition: f64,
}

/// Largest acceptable condition number of the scaled design matrix.
pub const MAX_FIT_CONDITION: f64 = 1e10;

/// Fit g_ij(r) = a_ij e^{2r} + 𝐦_ij e^{−r} pointwise by least squares,
/// weighting each sample by e^{−2r}.
pub fn mass_aspect_from_expansion(samples: &[RadialSample]) -> Result<MassAspect> {
    if samples.len() < 3 {
        return Err(KmlError::input("mass aspect fit needs at least 3 radii"));
    }
    let grid = samples[0].g11.grid().clone();
    let torus = *grid.torus();
    let r0 = samples.iter().map(|s| s.r).fold(f64::INFINITY, f64::min);
    // weighted basis {1, e^{−3(r−r0)}}
    let b: Vec<f64> = samples.iter().map(|s| (-3.0 * (s.r - r0)).exp()).collect();
    let m = samples.len() as f64;
    let (s1, s2) = (b.iter().sum::<f64>(), b.iter().map(|x| x * x).sum::<f64>());
    let det = m * s2 - s1 * s1;
    let tr = m + s2;
    let disc = ((m - s2).powi(2) + 4.0 * s1 * s1).sqrt();
    let (lmax, lmin) = (0.5 * (tr + disc), 0.5 * (tr - disc));
    let condition = if lmin > 0.0 {
        (lmax / lmin).sqrt()
    } else {
        f64::INFINITY
    };
    if !(condition <= MAX_FIT_CONDITION) || det <= 0.0 {
        return Err(KmlError::input(format!(
            "mass aspect fit is ill-conditioned (condition number {condition:.3e}); spread the radii"
        )));
    }
    let n = grid.len();
    let scale_m = (-3.0 * r0).exp();
    let mut fits: [Vec<f64>; 3] = [vec![0.0; n], vec![0.0; n], vec![0.0; n]];
    let mut residual = 0.0f64;
    for (c, fit) in fits.iter_mut().enumerate() {
        for (idx, out) in fit.iter_mut().enumerate() {
            let ys: Vec<f64> = samples
                .iter()
                .map(|s| {
                    let g = [&s.g11, &s.g12, &s.g22][c].values()[idx];
                    g * (-2.0 * s.r).exp()
                })
                .collect();
            let t1: f64 = ys.iter().sum();
            let t2: f64 = ys.iter().zip(&b).map(|(y, x)| y * x).sum();
            let a = (s2 * t1 - s1 * t2) / det;
            let coef = (m * t2 - s1 * t1) / det;
            for (y, x) in ys.iter().zip(&b) {
                residual = residual.max((y - a - coef * x).abs());
            }
            // coefficient of e^{−3r} in the weighted fit is 𝐦
            *out = coef / scale_m;
        }
    }
    let si = torus.sigma_inv();
    let trace: Vec<f64> = (0..n)
        .map(|i| {
            3.0 * (si[0][0] * fits[0][i] + 2.0 * si[0][1] * fits[1][i] + si[1][1] * fits[2][i])
        })
        .collect();
    let trace = PeriodicField::from_parts(grid.clone(), trace);
    let mass = trace.integrate() * torus.sqrt_det() / (16.0 * PI);
    Ok(MassAspect {
        trace,
        mass,
        residual,
        condition,
    })
}

/// (1/8π)∫ V H₀ (1 − w₀^{−1}) dA over the reference surface.
pub fn shi_tam_lhs(geom: &SurfaceGeometry, w0: &PeriodicField) -> f64 {
    let n = geom.grid().len();
    let dens: Vec<f64> = (0..n)
        .map(|i| {
            let w = w0.values()[i];
            geom.potential.values()[i]
                * geom.mean_curvature.values()[i]
                * ((w - 1.0) / w)
                * geom.area_density.values()[i]
        })
        .collect();
    weighted_integral(geom, dens) / (8.0 * PI)
}

/// Gap between the weighted boundary integral and the total mass of the
/// extension; nonnegative for admissible data.
pub fn shi_tam_inequality_report(
    geom: &SurfaceGeometry,
    h_phys: &PeriodicField,
    w0: &PeriodicField,
    m_total: f64,
) -> Result<f64> {
    let n = geom.grid().len();
    for i in 0..n {
        let expected = geom.mean_curvature.values()[i] / h_phys.values()[i];
        if (expected - w0.values()[i]).abs() > 1e-12 * expected.abs().max(1.0) {
            return Err(KmlError::input(
                "w0 must equal H0 / H_phys pointwise for the boundary inequality",
            ));
        }
    }
    Ok(shi_tam_lhs(geom, w0) - m_total)
}

/// Penrose-type lower bound 𝒞|Σ_h|/16π.
pub fn penrose_bound(c: f64, area: f64) -> Result<f64> {
    if !(c > 0.0) || !(area > 0.0) {
        return Err(KmlError::input(format!(
            "penrose bound needs C > 0 and area > 0, got C = {c}, area = {area}"
        )));
    }
    Ok(c * area / (16.0 * PI))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MassReport {
    pub m_by_static: f64,
    pub m_total: f64,
    pub m_total_error_estimate: f64,
    pub final_series_value: f64,
    pub gap: f64,
    pub monotonicity_violation: f64,
    pub series_path: String,
}
