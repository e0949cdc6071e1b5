//! Lapse equation of the scalar-curvature −6 extension over the flow
//! foliation, its asymptotic data, and a finite-difference curvature check.
//!
//! The lapse w(t,θ) is solved in the same Eulerian θ-coordinates as the
//! graph. In these coordinates the Lagrangian time derivative picks up an
//! advection term, and the evolved unknown is z = e^{3t}(w − 1):
//!
//!   ∂ₜz = 3z − U·∇z + H^{-1}[(1+ε)²Δz − (K+3)(1+ε)(2+ε)z],   ε = e^{−3t}z.
//!
//! The graph u = v − t is integrated alongside, so every stage sees the
//! exact foliation of the current RK4 stage.

use serde::{Deserialize, Serialize};

use crate::curvature::{curvature, MetricJet};
use crate::error::{KmlError, Result};
use crate::flow::{rate_warning, richardson, FlowTrajectory};
use crate::geometry::{eig2, graph_point, mul2, GraphSurface};
use crate::grid::{Grid, PeriodicField};

/// Barrier bracketing slack.
pub const BARRIER_SLACK: f64 = 1e-8;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExtensionParams {
    /// c in dt ≤ c·Δθ²·min H / max(w²λ_max(γ^{-1})).
    pub stability_factor: f64,
}

impl Default for ExtensionParams {
    fn default() -> Self {
        Self {
            stability_factor: 0.2,
        }
    }
}

impl ExtensionParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.stability_factor > 0.0 && self.stability_factor <= 1.0) {
            return Err(KmlError::input(format!(
                "stability_factor must lie in (0, 1], got {}",
                self.stability_factor
            )));
        }
        Ok(())
    }
}

/// Scalar comparison solutions bracketing w.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Barriers {
    pub c_lower: f64,
    pub c_upper: f64,
    /// whether the lower barrier integrates max (K+3)/H (true when min w₀ > 1)
    pub lower_uses_max: bool,
}

impl Barriers {
    pub fn from_initial(w0: &PeriodicField) -> Self {
        let (lo, hi) = (w0.min(), w0.max());
        Self {
            c_lower: lo.powi(-2) - 1.0,
            c_upper: -1.0 + (hi + 1.0).powi(-2),
            lower_uses_max: lo > 1.0,
        }
    }

    /// (1 + C e^{−2I})^{−1/2}
    pub fn profile(c: f64, exponent_integral: f64) -> f64 {
        (1.0 + c * (-2.0 * exponent_integral).exp()).powf(-0.5)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExtensionSnapshot {
    pub t: f64,
    pub w_min: f64,
    pub w_max: f64,
    pub barrier_lo: f64,
    pub barrier_hi: f64,
    /// max |e^{3t}(w − 1)|
    pub z_max_abs: f64,
    pub substeps: usize,
}

#[derive(Clone, Debug)]
pub struct ExtensionTrajectory {
    times: Vec<f64>,
    shifted: Vec<PeriodicField>,
    z: Vec<PeriodicField>,
    snapshots: Vec<ExtensionSnapshot>,
    barriers: Barriers,
    /// smallest bracketing margin seen at any step (negative: violation)
    worst_margin: f64,
}

impl ExtensionTrajectory {
    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn grid(&self) -> &Grid {
        self.z[0].grid()
    }

    pub fn snapshots(&self) -> &[ExtensionSnapshot] {
        &self.snapshots
    }

    pub fn barriers(&self) -> Barriers {
        self.barriers
    }

    /// Smallest distance of w to either barrier over all steps.
    pub fn worst_barrier_margin(&self) -> f64 {
        self.worst_margin
    }

    /// z = e^{3t}(w − 1) at snapshot k.
    pub fn z(&self, k: usize) -> &PeriodicField {
        &self.z[k]
    }

    pub fn w(&self, k: usize) -> PeriodicField {
        let e = (-3.0 * self.times[k]).exp();
        self.z[k].map(|z| 1.0 + e * z)
    }

    /// Graph height of the foliation leaf co-integrated with w.
    pub fn v(&self, k: usize) -> PeriodicField {
        let t = self.times[k];
        self.shifted[k].map(|u| u + t)
    }

    pub fn shifted(&self, k: usize) -> &PeriodicField {
        &self.shifted[k]
    }

    /// Constant C₀ with |w − 1| ≤ C₀e^{−3t}, read off the barriers.
    pub fn barrier_decay_constant(&self) -> f64 {
        self.snapshots
            .iter()
            .map(|s| (3.0 * s.t).exp() * (s.barrier_lo - 1.0).abs().max((s.barrier_hi - 1.0).abs()))
            .fold(0.0, f64::max)
    }
}

/// Pointwise coefficients of one foliation leaf.
struct Leaf {
    du: Vec<f64>,
    adv1: Vec<f64>,
    adv2: Vec<f64>,
    mean: Vec<f64>,
    kappa: Vec<f64>,
    /// √det γ · γ^{ij}
    a11: Vec<f64>,
    a12: Vec<f64>,
    a22: Vec<f64>,
    sqrt_det: Vec<f64>,
    lam_max_inv: Vec<f64>,
}

fn leaf(grid: &Grid, u: &[f64], t: f64) -> Result<Leaf> {
    let torus = *grid.torus();
    let n = grid.len();
    let uf = PeriodicField::from_parts(grid.clone(), u.to_vec());
    let (grad, hess) = grid.jet2(&uf);
    let mut out = Leaf {
        du: vec![0.0; n],
        adv1: vec![0.0; n],
        adv2: vec![0.0; n],
        mean: vec![0.0; n],
        kappa: vec![0.0; n],
        a11: vec![0.0; n],
        a12: vec![0.0; n],
        a22: vec![0.0; n],
        sqrt_det: vec![0.0; n],
        lam_max_inv: vec![0.0; n],
    };
    for idx in 0..n {
        let v = u[idx] + t;
        let g = (grad.d1.values()[idx], grad.d2.values()[idx]);
        let em2v = (-2.0 * v).exp();
        let q = em2v * torus.norm_sq(g.0, g.1);
        if !q.is_finite() {
            return Err(KmlError::solver(format!(
                "non-finite graph slope at t = {t}"
            )));
        }
        let (gm, gi, rho, h) = graph_point(&torus, v, g, hess.at(idx));
        let a = mul2(gi, h);
        let mean = a[0][0] + a[1][1];
        if !(mean > 0.0) {
            let (i, j) = (idx / grid.n2(), idx % grid.n2());
            return Err(KmlError::hypothesis(format!(
                "H > 0 fails on the leaf at t = {t}, grid point ({i},{j})"
            )));
        }
        let gauss = a[0][0] * a[1][1] - a[0][1] * a[1][0] - 1.0;
        let det = gm[0][0] * gm[1][1] - gm[0][1] * gm[1][0];
        let sd = det.sqrt();
        let (r1, r2) = torus.raise(g.0, g.1);
        out.du[idx] = q / (1.0 + rho);
        out.adv1[idx] = -em2v * r1 / rho;
        out.adv2[idx] = -em2v * r2 / rho;
        out.mean[idx] = mean;
        out.kappa[idx] = (gauss + 3.0) / mean;
        out.a11[idx] = sd * gi[0][0];
        out.a12[idx] = sd * gi[0][1];
        out.a22[idx] = sd * gi[1][1];
        out.sqrt_det[idx] = sd;
        out.lam_max_inv[idx] = eig2(gi).1;
    }
    Ok(out)
}

/// Per-evaluation summaries used for the barriers and the step-size cap.
#[derive(Clone, Copy, Debug)]
struct StageStats {
    kappa_min: f64,
    kappa_max: f64,
    mean_min: f64,
    w_min: f64,
    w_max: f64,
    diffusion_max: f64,
}

fn ext_rhs(grid: &Grid, t: f64, y: &[f64]) -> Result<(Vec<f64>, StageStats)> {
    let n = grid.len();
    let (u, z) = y.split_at(n);
    let lf = leaf(grid, u, t)?;
    let zf = PeriodicField::from_parts(grid.clone(), z.to_vec());
    let gz = grid.gradient(&zf);
    let (z1, z2) = (gz.d1.values(), gz.d2.values());
    let x1: Vec<f64> = (0..n)
        .map(|i| lf.a11[i] * z1[i] + lf.a12[i] * z2[i])
        .collect();
    let x2: Vec<f64> = (0..n)
        .map(|i| lf.a12[i] * z1[i] + lf.a22[i] * z2[i])
        .collect();
    let div = grid.divergence(
        &PeriodicField::from_parts(grid.clone(), x1),
        &PeriodicField::from_parts(grid.clone(), x2),
    );
    let e3 = (-3.0 * t).exp();
    let mut out = vec![0.0; 2 * n];
    out[..n].copy_from_slice(&lf.du);
    let mut st = StageStats {
        kappa_min: f64::INFINITY,
        kappa_max: f64::NEG_INFINITY,
        mean_min: f64::INFINITY,
        w_min: f64::INFINITY,
        w_max: f64::NEG_INFINITY,
        diffusion_max: 0.0,
    };
    for i in 0..n {
        let eps = e3 * z[i];
        let w = 1.0 + eps;
        if !(w > 0.0) {
            let (a, b) = (i / grid.n2(), i % grid.n2());
            return Err(KmlError::solver(format!(
                "lapse lost positivity at grid point ({a},{b}), t = {t}"
            )));
        }
        let lap = div.values()[i] / lf.sqrt_det[i];
        let advect = lf.adv1[i] * z1[i] + lf.adv2[i] * z2[i];
        out[n + i] =
            3.0 * z[i] - advect + (w * w * lap) / lf.mean[i] - lf.kappa[i] * w * (2.0 + eps) * z[i];
        st.kappa_min = st.kappa_min.min(lf.kappa[i]);
        st.kappa_max = st.kappa_max.max(lf.kappa[i]);
        st.mean_min = st.mean_min.min(lf.mean[i]);
        st.w_min = st.w_min.min(w);
        st.w_max = st.w_max.max(w);
        st.diffusion_max = st.diffusion_max.max(w * w * lf.lam_max_inv[i]);
    }
    Ok((out, st))
}

fn rk4_with_first_stage(grid: &Grid, y: &[f64], t: f64, h: f64, k1: &[f64]) -> Result<Vec<f64>> {
    let n = y.len();
    let mut tmp: Vec<f64> = (0..n).map(|i| y[i] + 0.5 * h * k1[i]).collect();
    let (k2, _) = ext_rhs(grid, t + 0.5 * h, &tmp)?;
    for i in 0..n {
        tmp[i] = y[i] + 0.5 * h * k2[i];
    }
    let (k3, _) = ext_rhs(grid, t + 0.5 * h, &tmp)?;
    for i in 0..n {
        tmp[i] = y[i] + h * k3[i];
    }
    let (k4, _) = ext_rhs(grid, t + h, &tmp)?;
    Ok((0..n)
        .map(|i| y[i] + h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]))
        .collect())
}

/// Integrate the lapse equation along the foliation of `flow`, starting
/// from `w0`, with snapshots at the flow's snapshot times.
pub fn solve_w(
    flow: &FlowTrajectory,
    w0: &PeriodicField,
    params: ExtensionParams,
) -> Result<ExtensionTrajectory> {
    params.validate()?;
    let fp = *flow.params();
    let surface: GraphSurface = flow.initial_surface();
    let grid = surface.grid().clone();
    if w0.grid() != &grid {
        return Err(KmlError::input(
            "w0 lives on a different grid than the flow",
        ));
    }
    if !(w0.min() > 0.0) || !w0.is_finite() {
        return Err(KmlError::hypothesis("w0 > 0 fails"));
    }
    let n = grid.len();
    let (h1, h2) = grid.spacing();
    let dtheta = h1.min(h2);

    let barriers = Barriers::from_initial(w0);
    let mut y = vec![0.0; 2 * n];
    y[..n].copy_from_slice(surface.v.values());
    for (dst, w) in y[n..].iter_mut().zip(w0.values()) {
        *dst = w - 1.0;
    }

    let (mut k1, mut st) = ext_rhs(&grid, 0.0, &y)?;
    let (mut int_plus, mut int_minus) = (0.0, 0.0);
    let mut worst_margin = f64::INFINITY;

    let bounds = |ip: f64, im: f64| {
        let lo_int = if barriers.lower_uses_max { im } else { ip };
        (
            Barriers::profile(barriers.c_lower, lo_int),
            Barriers::profile(barriers.c_upper, ip),
        )
    };

    let snaps = fp.snapshot_steps();
    let mut traj = ExtensionTrajectory {
        times: Vec::with_capacity(snaps.len()),
        shifted: Vec::with_capacity(snaps.len()),
        z: Vec::with_capacity(snaps.len()),
        snapshots: Vec::with_capacity(snaps.len()),
        barriers,
        worst_margin: 0.0,
    };
    let mut next = 0;
    let mut substeps = 1;
    for step in 0..=fp.steps() {
        let t = fp.time_of(step);
        let (lo, hi) = bounds(int_plus, int_minus);
        let margin = (st.w_min - lo).min(hi - st.w_max);
        worst_margin = worst_margin.min(margin);
        if margin < -BARRIER_SLACK {
            return Err(KmlError::solver(format!(
                "barrier bracketing violated by {:.3e} at t = {t} (w in [{}, {}], barriers [{lo}, {hi}])",
                -margin, st.w_min, st.w_max
            )));
        }
        if snaps[next] == step {
            let (u, z) = y.split_at(n);
            traj.times.push(t);
            traj.shifted
                .push(PeriodicField::from_parts(grid.clone(), u.to_vec()));
            let zf = PeriodicField::from_parts(grid.clone(), z.to_vec());
            traj.snapshots.push(ExtensionSnapshot {
                t,
                w_min: st.w_min,
                w_max: st.w_max,
                barrier_lo: lo,
                barrier_hi: hi,
                z_max_abs: zf.max_abs(),
                substeps,
            });
            traj.z.push(zf);
            next += 1;
        }
        if step == fp.steps() {
            break;
        }

        let cap = params.stability_factor * dtheta * dtheta * st.mean_min / st.diffusion_max;
        substeps = if fp.dt <= cap {
            1
        } else {
            (fp.dt / cap).ceil() as usize
        };
        let h = fp.dt / substeps as f64;
        for j in 0..substeps {
            let tj = t + j as f64 * h;
            let t_next = if j + 1 == substeps {
                fp.time_of(step + 1)
            } else {
                tj + h
            };
            y = rk4_with_first_stage(&grid, &y, tj, t_next - tj, &k1)?;
            let (k, st_next) = ext_rhs(&grid, t_next, &y)?;
            let hh = t_next - tj;
            int_plus += 0.5 * hh * (st.kappa_min + st_next.kappa_min);
            int_minus += 0.5 * hh * (st.kappa_max + st_next.kappa_max);
            k1 = k;
            st = st_next;
            if j + 1 < substeps {
                let (lo, hi) = bounds(int_plus, int_minus);
                let margin = (st.w_min - lo).min(hi - st.w_max);
                worst_margin = worst_margin.min(margin);
                if margin < -BARRIER_SLACK {
                    return Err(KmlError::solver(format!(
                        "barrier bracketing violated by {:.3e} at t = {t_next}",
                        -margin
                    )));
                }
            }
        }
    }
    traj.worst_margin = worst_margin;
    Ok(traj)
}

/// Asymptotic lapse coefficient w_∞ = lim e^{3s}(w − 1) on the θ-grid.
#[derive(Clone, Debug)]
pub struct WInfinity {
    pub w_inf: PeriodicField,
    /// sup |Richardson-improved − raw tail estimate|, assuming e^{−2t} convergence
    pub error_estimate: f64,
    pub warning: Option<String>,
}

/// Extract w_∞ = e^{3f}·lim z. The lapse is already Eulerian, so the
/// composition with the inverse limit map is built into the θ-grid values.
pub fn extract_w_infinity(ext: &ExtensionTrajectory, f: &PeriodicField) -> Result<WInfinity> {
    let t_max = *ext.times.last().expect("non-empty");
    if t_max < 6.0 - 1e-9 {
        return Err(KmlError::input(format!(
            "extracting w_inf needs t_max >= 6, extension ends at {t_max}"
        )));
    }
    let kc = ext.len() - 1;
    let near = |t: f64| {
        (0..ext.len())
            .min_by(|&a, &b| {
                (ext.times[a] - t)
                    .abs()
                    .total_cmp(&(ext.times[b] - t).abs())
            })
            .expect("non-empty")
    };
    let ka = near(0.5 * t_max);
    let kb = near(0.75 * t_max);
    if !(ka < kb && kb < kc) {
        return Err(KmlError::input(
            "extension has too few snapshots in its tail",
        ));
    }
    let (ta, tb, tc) = (ext.times[ka], ext.times[kb], ext.times[kc]);
    let (za, zb, zc) = (&ext.z[ka], &ext.z[kb], &ext.z[kc]);
    let zr = zb.zip_map(zc, |x1, x2| richardson(x1, x2, tb, tc));
    let scale = f.map(|x| (3.0 * x).exp());
    let w_inf = zr.zip_map(&scale, |a, b| a * b);
    let raw = zc.zip_map(&scale, |a, b| a * b);
    Ok(WInfinity {
        error_estimate: w_inf.sup_distance(&raw),
        w_inf,
        warning: rate_warning(zb.sup_distance(za), zc.sup_distance(zb), ta, tb, tc),
    })
}

/// One t-slice of g₊ = w²dt_L² + γ in Eulerian coordinates (t, θ¹, θ²):
/// g_tt = w² + ρ² − 1, g_ti = ρ v_i, g_ij = γ_ij.
#[derive(Clone, Debug)]
pub struct MetricSlice {
    pub t: f64,
    /// components tt, t1, t2, 11, 12, 22
    pub comps: [PeriodicField; 6],
}

pub fn metric_slice(
    grid: &Grid,
    t: f64,
    shifted: &PeriodicField,
    w: &PeriodicField,
) -> MetricSlice {
    let torus = *grid.torus();
    let n = grid.len();
    let grad = grid.gradient(shifted);
    let mut c: [Vec<f64>; 6] = Default::default();
    for comp in c.iter_mut() {
        *comp = vec![0.0; n];
    }
    let s = torus.sigma();
    for idx in 0..n {
        let v = shifted.values()[idx] + t;
        let (g1, g2) = (grad.d1.values()[idx], grad.d2.values()[idx]);
        let e2v = (2.0 * v).exp();
        let q = torus.norm_sq(g1, g2) / e2v;
        let rho = (1.0 + q).sqrt();
        let wv = w.values()[idx];
        c[0][idx] = wv * wv + q;
        c[1][idx] = rho * g1;
        c[2][idx] = rho * g2;
        c[3][idx] = e2v * s[0][0] + g1 * g1;
        c[4][idx] = e2v * s[0][1] + g1 * g2;
        c[5][idx] = e2v * s[1][1] + g2 * g2;
    }
    MetricSlice {
        t,
        comps: c.map(|v| PeriodicField::from_parts(grid.clone(), v)),
    }
}

/// Metric g₊ sampled on uniformly spaced t-slices.
#[derive(Clone, Debug)]
pub struct GPlusGrid {
    pub slices: Vec<MetricSlice>,
}

/// Sample g₊ at every snapshot of the extension.
pub fn assemble_g_plus(ext: &ExtensionTrajectory) -> GPlusGrid {
    let grid = ext.grid().clone();
    GPlusGrid {
        slices: (0..ext.len())
            .map(|k| metric_slice(&grid, ext.times[k], &ext.shifted[k], &ext.w(k)))
            .collect(),
    }
}

impl GPlusGrid {
    /// Smallest eigenvalue of γ over all nodes, and whether every entry is finite.
    pub fn well_posed(&self) -> (f64, bool) {
        let mut lam = f64::INFINITY;
        let mut finite = true;
        for s in &self.slices {
            finite &= s.comps.iter().all(|c| c.is_finite());
            for idx in 0..s.comps[0].values().len() {
                let g = [
                    [s.comps[3].values()[idx], s.comps[4].values()[idx]],
                    [s.comps[4].values()[idx], s.comps[5].values()[idx]],
                ];
                lam = lam.min(eig2(g).0);
            }
        }
        (lam, finite)
    }
}

/// Per-slice maximum of |R(g₊) + 6| on the interior slices of a uniformly
/// spaced window of five or more slices, using fourth-order central
/// differences in t and spectral derivatives in θ.
pub fn scalar_curvature_profile(slices: &[MetricSlice]) -> Result<Vec<(f64, f64)>> {
    if slices.len() < 5 {
        return Err(KmlError::input(
            "scalar curvature needs at least 5 t-slices",
        ));
    }
    let h = slices[1].t - slices[0].t;
    if !(h > 0.0) {
        return Err(KmlError::input("t-slices must be increasing"));
    }
    for w in slices.windows(2) {
        if ((w[1].t - w[0].t) - h).abs() > 1e-9 * h.max(1.0) {
            return Err(KmlError::input(
                "scalar curvature requires uniformly spaced t-slices",
            ));
        }
    }
    let grid = slices[0].comps[0].grid().clone();
    let mut out = Vec::with_capacity(slices.len() - 4);
    for k in 2..slices.len() - 2 {
        let win = &slices[k - 2..=k + 2];
        out.push((slices[k].t, slice_residual(&grid, win, h)?));
    }
    Ok(out)
}

pub fn scalar_curvature_residual(g_plus: &GPlusGrid) -> Result<f64> {
    Ok(scalar_curvature_profile(&g_plus.slices)?
        .into_iter()
        .map(|(_, r)| r)
        .fold(0.0, f64::max))
}

fn slice_residual(grid: &Grid, win: &[MetricSlice], h: f64) -> Result<f64> {
    let n = grid.len();
    let comp = |k: usize, c: usize| win[k].comps[c].values();
    // t-derivatives of the 6 components
    let mut gt: Vec<PeriodicField> = Vec::with_capacity(6);
    let mut gtt: Vec<Vec<f64>> = Vec::with_capacity(6);
    for c in 0..6 {
        let d1: Vec<f64> = (0..n)
            .map(|i| {
                (comp(0, c)[i] - 8.0 * comp(1, c)[i] + 8.0 * comp(3, c)[i] - comp(4, c)[i])
                    / (12.0 * h)
            })
            .collect();
        let d2: Vec<f64> = (0..n)
            .map(|i| {
                (-comp(0, c)[i] + 16.0 * comp(1, c)[i] - 30.0 * comp(2, c)[i]
                    + 16.0 * comp(3, c)[i]
                    - comp(4, c)[i])
                    / (12.0 * h * h)
            })
            .collect();
        gt.push(PeriodicField::from_parts(grid.clone(), d1));
        gtt.push(d2);
    }
    let jets: Vec<_> = win[2].comps.iter().map(|c| grid.jet2(c)).collect();
    let tgrads: Vec<_> = gt.iter().map(|c| grid.gradient(c)).collect();
    // component index of (a, b)
    const IDX: [[usize; 3]; 3] = [[0, 1, 2], [1, 3, 4], [2, 4, 5]];
    let mut worst = 0.0f64;
    for i in 0..n {
        let mut jet = MetricJet {
            g: [[0.0; 3]; 3],
            dg: [[[0.0; 3]; 3]; 3],
            ddg: [[[[0.0; 3]; 3]; 3]; 3],
        };
        for a in 0..3 {
            for b in 0..3 {
                let c = IDX[a][b];
                let (gr, he) = &jets[c];
                jet.g[a][b] = win[2].comps[c].values()[i];
                jet.dg[0][a][b] = gt[c].values()[i];
                jet.dg[1][a][b] = gr.d1.values()[i];
                jet.dg[2][a][b] = gr.d2.values()[i];
                let dt1 = tgrads[c].d1.values()[i];
                let dt2 = tgrads[c].d2.values()[i];
                let hh = he.at(i);
                let m = [
                    [gtt[c][i], dt1, dt2],
                    [dt1, hh[0][0], hh[0][1]],
                    [dt2, hh[1][0], hh[1][1]],
                ];
                for d in 0..3 {
                    for e in 0..3 {
                        jet.ddg[d][e][a][b] = m[d][e];
                    }
                }
            }
        }
        let r = curvature(&jet)
            .ok_or_else(|| KmlError::solver("degenerate extension metric"))?
            .scalar;
        worst = worst.max((r + 6.0).abs());
    }
    Ok(worst)
}

/// Closed-form lapse (1 + Ce^{−3t})^{−1/2} on a flat foliation with constant w₀.
pub fn flat_lapse(w0: f64, t: f64) -> f64 {
    (1.0 + (w0.powi(-2) - 1.0) * (-3.0 * t).exp()).powf(-0.5)
}
