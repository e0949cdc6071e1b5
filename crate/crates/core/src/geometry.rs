//! Geometry of graphical tori Σ_v = {(v(θ), θ)} in the Kottler manifold
//! (ℝ × T², ds² + e^{2s}σ) with static potential V = e^s.
//!
//! The unit normal is taken to point toward increasing s.

use serde::{Deserialize, Serialize};

use crate::curvature::{curvature, MetricJet};
use crate::error::{KmlError, Result};
use crate::grid::{FlatTorus, Grid, PeriodicField, SymTensor};

/// Graph height v over the level set s = 0.
#[derive(Clone, Debug)]
pub struct GraphSurface {
    pub v: PeriodicField,
}

impl GraphSurface {
    pub fn new(v: PeriodicField) -> Self {
        Self { v }
    }

    pub fn grid(&self) -> &Grid {
        self.v.grid()
    }

    pub fn torus(&self) -> &FlatTorus {
        self.v.grid().torus()
    }
}

/// Intrinsic and extrinsic data of a graphical torus, sampled on its grid.
#[derive(Clone, Debug)]
pub struct SurfaceGeometry {
    pub gamma: SymTensor,
    pub gamma_inv: SymTensor,
    pub rho: PeriodicField,
    pub h: SymTensor,
    pub mean_curvature: PeriodicField,
    /// Intrinsic Gauss curvature of γ.
    pub gauss_curvature: PeriodicField,
    /// dA_γ / dA_σ = ρ e^{2v}.
    pub area_density: PeriodicField,
    /// Static potential e^v on the surface.
    pub potential: PeriodicField,
}

#[inline]
pub(crate) fn inv2(m: [[f64; 2]; 2]) -> Option<[[f64; 2]; 2]> {
    let det = m[0][0] * m[1][1] - m[0][1] * m[1][0];
    if det == 0.0 || !det.is_finite() {
        return None;
    }
    Some([
        [m[1][1] / det, -m[0][1] / det],
        [-m[1][0] / det, m[0][0] / det],
    ])
}

#[inline]
pub(crate) fn mul2(a: [[f64; 2]; 2], b: [[f64; 2]; 2]) -> [[f64; 2]; 2] {
    let mut c = [[0.0; 2]; 2];
    for i in 0..2 {
        for j in 0..2 {
            c[i][j] = a[i][0] * b[0][j] + a[i][1] * b[1][j];
        }
    }
    c
}

/// Eigenvalues of a 2×2 matrix with real spectrum, ascending. Complex
/// pairs are reported through their real part.
#[inline]
pub(crate) fn eig2(m: [[f64; 2]; 2]) -> (f64, f64) {
    let tr = m[0][0] + m[1][1];
    let half_diff = 0.5 * (m[0][0] - m[1][1]);
    let disc = half_diff * half_diff + m[0][1] * m[1][0];
    let r = disc.max(0.0).sqrt();
    (0.5 * tr - r, 0.5 * tr + r)
}

/// Pointwise algebra of the graph: returns (γ, γ⁻¹, ρ, h) at one point from
/// v, its gradient and Hessian.
#[inline]
pub(crate) fn graph_point(
    torus: &FlatTorus,
    v: f64,
    g: (f64, f64),
    hess: [[f64; 2]; 2],
) -> ([[f64; 2]; 2], [[f64; 2]; 2], f64, [[f64; 2]; 2]) {
    let s = torus.sigma();
    let si = torus.sigma_inv();
    let e2v = (2.0 * v).exp();
    let em2v = 1.0 / e2v;
    let grad = [g.0, g.1];
    let up = torus.raise(g.0, g.1);
    let up = [up.0, up.1];
    let rho2 = 1.0 + em2v * torus.norm_sq(g.0, g.1);
    let rho = rho2.sqrt();
    let mut gamma = [[0.0; 2]; 2];
    let mut gamma_inv = [[0.0; 2]; 2];
    let mut h = [[0.0; 2]; 2];
    for i in 0..2 {
        for j in 0..2 {
            gamma[i][j] = e2v * s[i][j] + grad[i] * grad[j];
            gamma_inv[i][j] = em2v * si[i][j] - em2v * em2v * up[i] * up[j] / rho2;
            h[i][j] = (-hess[i][j] + 2.0 * grad[i] * grad[j] + e2v * s[i][j]) / rho;
        }
    }
    (gamma, gamma_inv, rho, h)
}

/// Gauss curvature of a 2-metric via the Brioschi formula, from the metric
/// coefficients and their first and (needed) second partials.
#[allow(clippy::too_many_arguments)]
#[inline]
pub(crate) fn brioschi(
    e: f64,
    f: f64,
    g: f64,
    de: (f64, f64),
    df: (f64, f64),
    dg: (f64, f64),
    e_22: f64,
    f_12: f64,
    g_11: f64,
) -> f64 {
    let (e_u, e_v) = de;
    let (f_u, f_v) = df;
    let (g_u, g_v) = dg;
    let det3 = |m: [[f64; 3]; 3]| {
        m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1])
            - m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0])
            + m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0])
    };
    let a = det3([
        [-0.5 * e_22 + f_12 - 0.5 * g_11, 0.5 * e_u, f_u - 0.5 * e_v],
        [f_v - 0.5 * g_u, e, f],
        [0.5 * g_v, f, g],
    ]);
    let b = det3([
        [0.0, 0.5 * e_v, 0.5 * g_u],
        [0.5 * e_v, e, f],
        [0.5 * g_u, f, g],
    ]);
    let w = e * g - f * f;
    (a - b) / (w * w)
}

/// Compute γ, ρ, h, H, the intrinsic K, area density and potential of the graph.
pub fn surface_geometry(surface: &GraphSurface) -> Result<SurfaceGeometry> {
    let grid = surface.grid();
    let torus = *surface.torus();
    let v = &surface.v;
    let (grad, hess) = grid.jet2(v);
    let n = grid.len();

    let mut gamma = [vec![0.0; n], vec![0.0; n], vec![0.0; n]];
    let mut gamma_inv = [vec![0.0; n], vec![0.0; n], vec![0.0; n]];
    let mut h = [vec![0.0; n], vec![0.0; n], vec![0.0; n]];
    let mut rho = vec![0.0; n];
    let mut mean = vec![0.0; n];
    let mut area = vec![0.0; n];
    let mut pot = vec![0.0; n];

    for idx in 0..n {
        let vv = v.values()[idx];
        let g = (grad.d1.values()[idx], grad.d2.values()[idx]);
        let (gm, gi, r, hh) = graph_point(&torus, vv, g, hess.at(idx));
        let det = gm[0][0] * gm[1][1] - gm[0][1] * gm[0][1];
        if !(gm[0][0] > 0.0 && det > 0.0) {
            let (i, j) = (idx / grid.n2(), idx % grid.n2());
            return Err(KmlError::solver(format!(
                "induced metric not positive definite at grid point ({i},{j})"
            )));
        }
        gamma[0][idx] = gm[0][0];
        gamma[1][idx] = gm[0][1];
        gamma[2][idx] = gm[1][1];
        gamma_inv[0][idx] = gi[0][0];
        gamma_inv[1][idx] = gi[0][1];
        gamma_inv[2][idx] = gi[1][1];
        h[0][idx] = hh[0][0];
        h[1][idx] = hh[0][1];
        h[2][idx] = hh[1][1];
        rho[idx] = r;
        mean[idx] = gi[0][0] * hh[0][0] + 2.0 * gi[0][1] * hh[0][1] + gi[1][1] * hh[1][1];
        area[idx] = r * (2.0 * vv).exp();
        pot[idx] = vv.exp();
    }

    let field = |vals: Vec<f64>| PeriodicField::from_parts(grid.clone(), vals);
    let [g11, g12, g22] = gamma;
    let g11 = field(g11);
    let g12 = field(g12);
    let g22 = field(g22);

    // K from γ alone, so that the Gauss equation is an independent check.
    let (s11, s12) = grid.spectrum_pair(&g11, &g12);
    let s22 = grid.spectrum(&g22);
    use crate::grid::Deriv;
    let (e_u, e_v) = grid.derive2(&s11, Deriv::D1, Deriv::D2);
    let (f_u, f_v) = grid.derive2(&s12, Deriv::D1, Deriv::D2);
    let (g_u, g_v) = grid.derive2(&s22, Deriv::D1, Deriv::D2);
    let (e_22, g_11) = grid.inverse_pair((&s11, Deriv::D22), Some((&s22, Deriv::D11)));
    let g_11 = g_11.expect("pair requested");
    let f_12 = grid.derive(&s12, Deriv::D12);
    let gauss: Vec<f64> = (0..n)
        .map(|idx| {
            brioschi(
                g11.values()[idx],
                g12.values()[idx],
                g22.values()[idx],
                (e_u.values()[idx], e_v.values()[idx]),
                (f_u.values()[idx], f_v.values()[idx]),
                (g_u.values()[idx], g_v.values()[idx]),
                e_22.values()[idx],
                f_12.values()[idx],
                g_11.values()[idx],
            )
        })
        .collect();

    let [gi11, gi12, gi22] = gamma_inv;
    let [h11, h12, h22] = h;
    Ok(SurfaceGeometry {
        gamma: SymTensor {
            t11: g11,
            t12: g12,
            t22: g22,
        },
        gamma_inv: SymTensor {
            t11: field(gi11),
            t12: field(gi12),
            t22: field(gi22),
        },
        rho: field(rho),
        h: SymTensor {
            t11: field(h11),
            t12: field(h12),
            t22: field(h22),
        },
        mean_curvature: field(mean),
        gauss_curvature: field(gauss),
        area_density: field(area),
        potential: field(pot),
    })
}

impl SurfaceGeometry {
    pub fn grid(&self) -> &Grid {
        self.rho.grid()
    }

    /// Mixed shape operator γ^{-1}h at a grid point.
    pub fn shape_operator(&self, idx: usize) -> [[f64; 2]; 2] {
        mul2(self.gamma_inv.at(idx), self.h.at(idx))
    }

    /// Principal curvatures (ascending) at a grid point.
    pub fn principal_curvatures(&self, idx: usize) -> (f64, f64) {
        eig2(self.shape_operator(idx))
    }

    /// |h|²_γ = tr((γ⁻¹h)²)
    pub fn h_norm_sq(&self) -> PeriodicField {
        let n = self.grid().len();
        let vals = (0..n)
            .map(|idx| {
                let a = self.shape_operator(idx);
                a[0][0] * a[0][0] + 2.0 * a[0][1] * a[1][0] + a[1][1] * a[1][1]
            })
            .collect();
        PeriodicField::from_parts(self.grid().clone(), vals)
    }

    /// |h - γ|_γ = sqrt(tr((γ⁻¹h - I)²)).
    pub fn umbilic_deviation(&self) -> PeriodicField {
        let n = self.grid().len();
        let vals = (0..n)
            .map(|idx| {
                let a = self.shape_operator(idx);
                let (p, q) = (a[0][0] - 1.0, a[1][1] - 1.0);
                (p * p + 2.0 * a[0][1] * a[1][0] + q * q).max(0.0).sqrt()
            })
            .collect();
        PeriodicField::from_parts(self.grid().clone(), vals)
    }

    /// Pointwise residual H² − |h|²_γ − 2K − 2 of the traced Gauss equation.
    pub fn gauss_identity_residual(&self) -> PeriodicField {
        let hn = self.h_norm_sq();
        let n = self.grid().len();
        let vals = (0..n)
            .map(|idx| {
                let hm = self.mean_curvature.values()[idx];
                hm * hm - hn.values()[idx] - 2.0 * self.gauss_curvature.values()[idx] - 2.0
            })
            .collect();
        PeriodicField::from_parts(self.grid().clone(), vals)
    }

    /// Total area ∫ dA_γ.
    pub fn area(&self) -> f64 {
        self.area_density.integrate() * self.grid().torus().sqrt_det()
    }
}

/// Minimum shape-operator eigenvalue below which h counts as not positive definite.
pub const POSDEF_TOL: f64 = 1e-10;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AdmissibilityReport {
    pub k_min: f64,
    pub k_min_at: (usize, usize),
    pub h_min: f64,
    pub h_min_at: (usize, usize),
    pub lambda_min: f64,
    pub lambda_min_at: (usize, usize),
    pub h_posdef: bool,
}

impl AdmissibilityReport {
    pub fn admissible(&self) -> bool {
        self.k_min > -1.0 && self.h_min > 0.0 && self.h_posdef
    }

    /// First failed condition, phrased as the hypothesis that fails.
    pub fn violation(&self) -> Option<String> {
        if self.k_min <= -1.0 {
            let (i, j) = self.k_min_at;
            return Some(format!(
                "K > -1 fails at grid point ({i},{j}): K = {:.6e}",
                self.k_min
            ));
        }
        if self.h_min <= 0.0 {
            let (i, j) = self.h_min_at;
            return Some(format!(
                "H > 0 fails at grid point ({i},{j}): H = {:.6e}",
                self.h_min
            ));
        }
        if !self.h_posdef {
            let (i, j) = self.lambda_min_at;
            return Some(format!(
                "h positive definite fails at grid point ({i},{j}): min principal curvature = {:.6e}",
                self.lambda_min
            ));
        }
        None
    }
}

pub fn admissibility_check(geom: &SurfaceGeometry) -> AdmissibilityReport {
    let grid = geom.grid();
    let n2 = grid.n2();
    let at = |idx: usize| (idx / n2, idx % n2);
    let k_idx = geom.gauss_curvature.argmin();
    let h_idx = geom.mean_curvature.argmin();
    let mut lam_min = f64::INFINITY;
    let mut lam_idx = 0;
    for idx in 0..grid.len() {
        let (l1, _) = geom.principal_curvatures(idx);
        if l1 < lam_min {
            lam_min = l1;
            lam_idx = idx;
        }
    }
    AdmissibilityReport {
        k_min: geom.gauss_curvature.values()[k_idx],
        k_min_at: at(k_idx),
        h_min: geom.mean_curvature.values()[h_idx],
        h_min_at: at(h_idx),
        lambda_min: lam_min,
        lambda_min_at: at(lam_idx),
        h_posdef: lam_min > POSDEF_TOL,
    }
}

/// Max orthonormal-frame component of (ΔV)b − ∇²V + V·Ric(b) for V = e^s
/// on the Kottler metric b = ds² + e^{2s}σ, with the Hessian and Ricci
/// tensor assembled from Christoffel symbols of the exact metric jet.
pub fn static_identity_residual(s_values: &[f64], torus: &FlatTorus) -> f64 {
    let sigma = torus.sigma();
    // Cholesky factor of σ: σ = L Lᵀ
    let l11 = sigma[0][0].sqrt();
    let l21 = sigma[1][0] / l11;
    let l22 = (sigma[1][1] - l21 * l21).sqrt();
    let mut worst = 0.0f64;
    for &s in s_values {
        let e2s = (2.0 * s).exp();
        let mut jet = MetricJet {
            g: [[0.0; 3]; 3],
            dg: [[[0.0; 3]; 3]; 3],
            ddg: [[[[0.0; 3]; 3]; 3]; 3],
        };
        jet.g[0][0] = 1.0;
        for i in 0..2 {
            for j in 0..2 {
                jet.g[i + 1][j + 1] = e2s * sigma[i][j];
                jet.dg[0][i + 1][j + 1] = 2.0 * e2s * sigma[i][j];
                jet.ddg[0][0][i + 1][j + 1] = 4.0 * e2s * sigma[i][j];
            }
        }
        let Some(c) = curvature(&jet) else {
            return f64::INFINITY;
        };
        let v = s.exp();
        let dv = [v, 0.0, 0.0];
        let mut hess = [[0.0; 3]; 3];
        for a in 0..3 {
            for b in 0..3 {
                let second = if a == 0 && b == 0 { v } else { 0.0 };
                hess[a][b] = second - (0..3).map(|k| c.christoffel[k][a][b] * dv[k]).sum::<f64>();
            }
        }
        let lap: f64 = (0..3)
            .flat_map(|a| (0..3).map(move |b| (a, b)))
            .map(|(a, b)| c.inverse[a][b] * hess[a][b])
            .sum();
        let mut t = [[0.0; 3]; 3];
        for a in 0..3 {
            for b in 0..3 {
                t[a][b] = lap * jet.g[a][b] - hess[a][b] + v * c.ricci[a][b];
            }
        }
        // orthonormal frame e_0 = ∂_s, rows of e^{-s} L^{-1} on the θ block
        let es = s.exp();
        let m = [
            [1.0, 0.0, 0.0],
            [0.0, 1.0 / (l11 * es), 0.0],
            [0.0, -l21 / (l11 * l22 * es), 1.0 / (l22 * es)],
        ];
        for a in 0..3 {
            for b in 0..3 {
                let mut acc = 0.0;
                for p in 0..3 {
                    for q in 0..3 {
                        acc += m[a][p] * t[p][q] * m[b][q];
                    }
                }
                worst = worst.max(acc.abs());
            }
        }
    }
    worst
}
