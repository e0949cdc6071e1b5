//! Closed-form boundary data and static mass of the toroidal geon shell
//! Ω = [r_h, r₀] × T² with g = r⁻²(1−r⁻³)⁻¹dr² + r²(1−r⁻³)dξ² + r²dθ².
//!
//! Every quantity here is evaluated exactly, so the module also serves as a
//! golden oracle for the numerical mass pipeline.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{KmlError, Result};
use crate::geometry::{surface_geometry, GraphSurface};
use crate::grid::{FlatTorus, Grid};
use crate::mass::static_brown_york;

/// Period of ξ for which the metric closes smoothly at r = 1.
pub const SMOOTH_XI_PERIOD: f64 = 4.0 * PI / 3.0;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct GeonConfig {
    pub r_h: f64,
    pub r_0: f64,
    pub p_xi: f64,
    pub p_theta: f64,
}

impl GeonConfig {
    pub fn new(r_h: f64, r_0: f64, p_xi: f64, p_theta: f64) -> Result<Self> {
        let cfg = Self {
            r_h,
            r_0,
            p_xi,
            p_theta,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.r_h >= 1.0) || !self.r_h.is_finite() {
            return Err(KmlError::input(format!(
                "r_h must be >= 1, got {}",
                self.r_h
            )));
        }
        if !(self.r_0 > self.r_h) || !self.r_0.is_finite() {
            return Err(KmlError::input(format!(
                "r_0 must exceed r_h = {}, got {}",
                self.r_h, self.r_0
            )));
        }
        if !(self.p_xi > 0.0 && self.p_theta > 0.0) {
            return Err(KmlError::input("periods must be positive"));
        }
        Ok(())
    }

    /// Whether ξ has the period that makes the r = 1 closure smooth.
    pub fn smooth_closure(&self) -> bool {
        (self.p_xi - SMOOTH_XI_PERIOD).abs() <= 1e-12 * SMOOTH_XI_PERIOD
    }

    /// Flat metric (1 − r₀⁻³)dξ² + dθ² on T², rescaled to 2π coordinate periods.
    pub fn reference_torus(&self) -> Result<FlatTorus> {
        FlatTorus::from_periods(1.0 - self.r_0.powi(-3), self.p_xi, 1.0, self.p_theta)
    }
}

/// Mean curvature of {r = const} toward increasing r:
/// (1 − r⁻³)^{−1/2}(2 − ½r⁻³), which diverges as r → 1.
pub fn level_mean_curvature(r: f64) -> f64 {
    let x = r.powi(-3);
    (2.0 - 0.5 * x) / (1.0 - x).sqrt()
}

/// H − 2 for the level {r = const}, free of cancellation for large r.
pub fn level_mean_curvature_excess(r: f64) -> f64 {
    let x = r.powi(-3);
    let root = (1.0 - x).sqrt();
    x * (2.0 / (1.0 + root) - 0.5) / root
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct GeonBoundary {
    /// static potential V = r₀ on the outer boundary
    pub potential: f64,
    pub h_outer: f64,
    /// mean curvature of Σ_h toward increasing r (pointing into Ω);
    /// None when r_h = 1, where the level set degenerates
    pub h_inner_toward_outer: Option<f64>,
    /// mean curvature of Σ_h with respect to the normal leaving Ω
    pub h_inner_outward: Option<f64>,
    pub area_outer: f64,
    /// r_h = 1: the inner level degenerates and the curvature formula blows up
    pub inner_degenerate: bool,
}

pub fn geon_boundary_geometry(cfg: &GeonConfig) -> Result<GeonBoundary> {
    cfg.validate()?;
    let x0 = cfg.r_0.powi(-3);
    let inner_degenerate = cfg.r_h == 1.0;
    let h_in = (!inner_degenerate).then(|| level_mean_curvature(cfg.r_h));
    Ok(GeonBoundary {
        potential: cfg.r_0,
        h_outer: level_mean_curvature(cfg.r_0),
        h_inner_toward_outer: h_in,
        h_inner_outward: h_in.map(|h| -h),
        area_outer: cfg.r_0 * cfg.r_0 * (1.0 - x0).sqrt() * cfg.p_xi * cfg.p_theta,
        inner_degenerate,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct GeonMass {
    pub m_exact: f64,
    pub m_leading: f64,
    pub remainder: f64,
}

/// Static Brown–York mass of the outer boundary against its isometric image
/// {r = r₀} in the Kottler reference, where H₀ = 2.
pub fn geon_static_mass(cfg: &GeonConfig) -> Result<GeonMass> {
    let b = geon_boundary_geometry(cfg)?;
    let m_exact = -b.potential * level_mean_curvature_excess(cfg.r_0) * b.area_outer / (8.0 * PI);
    let m_leading = -cfg.p_xi * cfg.p_theta / (16.0 * PI);
    Ok(GeonMass {
        m_exact,
        m_leading,
        remainder: m_exact - m_leading,
    })
}

/// Static Brown–York mass of the outer boundary computed by quadrature: the
/// constant graph v = ln r₀ over the reference torus is isometric to
/// {r = r₀}, and H_phys = H_outer.
pub fn geon_mass_by_quadrature(cfg: &GeonConfig, n: usize) -> Result<f64> {
    let b = geon_boundary_geometry(cfg)?;
    let grid = Grid::square(n, cfg.reference_torus()?)?;
    let geom = surface_geometry(&GraphSurface::new(grid.constant(cfg.r_0.ln())))?;
    static_brown_york(&geom, &grid.constant(b.h_outer))
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CounterexampleReport {
    pub config: GeonConfig,
    pub boundary: GeonBoundary,
    pub mass: GeonMass,
    pub mass_negative: bool,
    /// Σ_h fails H ≤ 2 (mean curvature toward the outer boundary exceeds 2)
    pub trapping_violated: bool,
    /// r_h = 1: no inner boundary at all
    pub homotopy_case: bool,
    pub smooth_closure: bool,
}

pub fn counterexample_report(cfg: &GeonConfig) -> Result<CounterexampleReport> {
    let boundary = geon_boundary_geometry(cfg)?;
    let mass = geon_static_mass(cfg)?;
    let homotopy_case = boundary.inner_degenerate;
    Ok(CounterexampleReport {
        config: *cfg,
        boundary,
        mass,
        mass_negative: mass.m_exact < 0.0,
        trapping_violated: boundary.h_inner_toward_outer.is_some_and(|h| h > 2.0),
        homotopy_case,
        smooth_closure: cfg.smooth_closure(),
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub r_0: f64,
    pub h_outer: f64,
    pub m_exact: f64,
    pub m_leading: f64,
    pub remainder: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Sweep {
    pub rows: Vec<SweepRow>,
    /// least-squares slope of log|remainder| against log r₀
    pub slope: f64,
}

/// Evaluate the outer mass over a list of radii and fit the decay order.
pub fn geon_sweep(r_h: f64, radii: &[f64], p_xi: f64, p_theta: f64) -> Result<Sweep> {
    if radii.len() < 2 {
        return Err(KmlError::input("sweep needs at least two radii"));
    }
    let mut rows = Vec::with_capacity(radii.len());
    for &r0 in radii {
        let cfg = GeonConfig::new(r_h, r0, p_xi, p_theta)?;
        let b = geon_boundary_geometry(&cfg)?;
        let m = geon_static_mass(&cfg)?;
        rows.push(SweepRow {
            r_0: r0,
            h_outer: b.h_outer,
            m_exact: m.m_exact,
            m_leading: m.m_leading,
            remainder: m.remainder,
        });
    }
    let xs: Vec<f64> = rows.iter().map(|r| r.r_0.ln()).collect();
    let ys: Vec<f64> = rows.iter().map(|r| r.remainder.abs().ln()).collect();
    let n = xs.len() as f64;
    let (mx, my) = (xs.iter().sum::<f64>() / n, ys.iter().sum::<f64>() / n);
    let (mut num, mut den) = (0.0, 0.0);
    for (x, y) in xs.iter().zip(&ys) {
        num += (x - mx) * (y - my);
        den += (x - mx) * (x - mx);
    }
    Ok(Sweep {
        rows,
        slope: num / den,
    })
}

/// `count` log-spaced radii between `lo` and `hi`.
pub fn log_spaced(lo: f64, hi: f64, count: usize) -> Vec<f64> {
    if count == 1 {
        return vec![lo];
    }
    (0..count)
        .map(|i| (lo.ln() + (hi.ln() - lo.ln()) * i as f64 / (count - 1) as f64).exp())
        .collect()
}
