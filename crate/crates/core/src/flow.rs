//! Unit normal flow of a graphical torus in the Kottler manifold.
//!
//! The flow is integrated in Eulerian graph form on the fixed θ-grid. The
//! evolved unknown is the translated height u = v − t, which satisfies
//!
//!   ∂ₜu = ρ − 1 = q / (1 + ρ),   q = e^{−2v}|∇v|²_σ,  ρ = sqrt(1 + q),
//!
//! and stays O(1) for all time. The Lagrangian maps Θ(t,·) (labels to
//! positions) are carried through their inverses Φ(t,·) = Θ(t,·)^{-1},
//! which obey the transport equation ∂ₜΦ + U·∇Φ = 0 with
//! U = −ρ^{-1}e^{−2v}σ^{-1}∇v. Φ is stored as a periodic displacement
//! E = Φ − id; Θ itself is recovered on demand by Newton iteration on the
//! trigonometric interpolant of E.

use serde::{Deserialize, Serialize};

use crate::error::{KmlError, Result};
use crate::geometry::{
    admissibility_check, eig2, inv2, mul2, surface_geometry, GraphSurface, SurfaceGeometry,
    POSDEF_TOL,
};
use crate::grid::{Deriv, Grid, PeriodicField};
use crate::ode::rk4_step;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FlowParams {
    pub t_max: f64,
    pub dt: f64,
    pub snapshot_stride: usize,
}

impl Default for FlowParams {
    fn default() -> Self {
        Self {
            t_max: 8.0,
            dt: 1e-3,
            snapshot_stride: 10,
        }
    }
}

impl FlowParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.t_max > 0.0 && self.t_max.is_finite()) {
            return Err(KmlError::input(format!(
                "t_max must be positive, got {}",
                self.t_max
            )));
        }
        if !(self.dt > 0.0 && self.dt <= 0.05) {
            return Err(KmlError::input(format!(
                "dt must lie in (0, 0.05], got {}",
                self.dt
            )));
        }
        if self.snapshot_stride == 0 {
            return Err(KmlError::input("snapshot_stride must be >= 1"));
        }
        let steps = self.t_max / self.dt;
        if (steps - steps.round()).abs() > 1e-9 * steps.max(1.0) {
            return Err(KmlError::input(format!(
                "t_max = {} is not an integer multiple of dt = {}",
                self.t_max, self.dt
            )));
        }
        Ok(())
    }

    pub fn steps(&self) -> usize {
        (self.t_max / self.dt).round() as usize
    }

    /// Time of step `k`, computed without accumulation.
    pub fn time_of(&self, k: usize) -> f64 {
        k as f64 * self.dt
    }

    /// Steps at which snapshots are stored: every stride, plus the last step.
    pub fn snapshot_steps(&self) -> Vec<usize> {
        let n = self.steps();
        let mut out: Vec<usize> = (0..=n).step_by(self.snapshot_stride).collect();
        if *out.last().expect("non-empty") != n {
            out.push(n);
        }
        out
    }
}

/// Per-snapshot flow diagnostics.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct FlowDiagnostics {
    pub t: f64,
    /// max over the torus of ρ² − 1
    pub rho_sq_minus_one: f64,
    /// max over the torus of |h − γ|_γ
    pub umbilic_deviation: f64,
    pub v_min: f64,
    pub v_max: f64,
    pub min_principal_curvature: f64,
    /// range of det ∂Θ/∂θ̄
    pub jacobian_min: f64,
    pub jacobian_max: f64,
}

#[derive(Clone, Debug)]
pub struct FlowTrajectory {
    params: FlowParams,
    times: Vec<f64>,
    shifted: Vec<PeriodicField>,
    inverse_displacement: Vec<[PeriodicField; 2]>,
    diagnostics: Vec<FlowDiagnostics>,
}

/// Velocities of the Eulerian graph flow at one time.
struct GraphVelocity {
    /// ∂ₜ(v − t)
    du: Vec<f64>,
    /// U^1, U^2
    u1: Vec<f64>,
    u2: Vec<f64>,
}

fn graph_velocity(grid: &Grid, u: &[f64], t: f64) -> Result<GraphVelocity> {
    let torus = *grid.torus();
    let n = grid.len();
    let uf = PeriodicField::from_parts(grid.clone(), u.to_vec());
    let s = grid.spectrum(&uf);
    let (g1, g2) = grid.derive2(&s, Deriv::D1, Deriv::D2);
    let g1 = g1.into_values();
    let g2 = g2.into_values();
    let mut du = vec![0.0; n];
    let mut u1 = vec![0.0; n];
    let mut u2 = vec![0.0; n];
    for idx in 0..n {
        let em2v = (-2.0 * (u[idx] + t)).exp();
        let q = em2v * torus.norm_sq(g1[idx], g2[idx]);
        let rho2 = 1.0 + q;
        if !rho2.is_finite() || rho2 < 1.0 - 1e-10 {
            let (i, j) = (idx / grid.n2(), idx % grid.n2());
            return Err(KmlError::solver(format!(
                "rho^2 = {rho2} at grid point ({i},{j}), t = {t}: numerical corruption"
            )));
        }
        let rho = rho2.sqrt();
        du[idx] = q / (1.0 + rho);
        let (r1, r2) = torus.raise(g1[idx], g2[idx]);
        u1[idx] = -em2v * r1 / rho;
        u2[idx] = -em2v * r2 / rho;
    }
    Ok(GraphVelocity { du, u1, u2 })
}

/// det(I + ∇E) pointwise, the Jacobian determinant of Φ = Θ^{-1}.
fn inverse_jacobian(grid: &Grid, e1: &[f64], e2: &[f64]) -> (Vec<f64>, [Vec<f64>; 4]) {
    let f1 = PeriodicField::from_parts(grid.clone(), e1.to_vec());
    let f2 = PeriodicField::from_parts(grid.clone(), e2.to_vec());
    let (s1, s2) = grid.spectrum_pair(&f1, &f2);
    let (d1e1, d1e2) = grid.inverse_pair((&s1, Deriv::D1), Some((&s2, Deriv::D1)));
    let (d2e1, d2e2) = grid.inverse_pair((&s1, Deriv::D2), Some((&s2, Deriv::D2)));
    let d1e1 = d1e1.into_values();
    let d1e2 = d1e2.expect("pair").into_values();
    let d2e1 = d2e1.into_values();
    let d2e2 = d2e2.expect("pair").into_values();
    let det = (0..grid.len())
        .map(|i| (1.0 + d1e1[i]) * (1.0 + d2e2[i]) - d2e1[i] * d1e2[i])
        .collect();
    (det, [d1e1, d2e1, d1e2, d2e2])
}

fn flow_rhs(grid: &Grid, t: f64, y: &[f64]) -> Result<Vec<f64>> {
    let n = grid.len();
    let (u, rest) = y.split_at(n);
    let (e1, e2) = rest.split_at(n);
    let vel = graph_velocity(grid, u, t)?;
    let (det, [d1e1, d2e1, d1e2, d2e2]) = inverse_jacobian(grid, e1, e2);
    let mut out = vec![0.0; 3 * n];
    out[..n].copy_from_slice(&vel.du);
    for idx in 0..n {
        if !(det[idx] > 0.0) {
            let (i, j) = (idx / grid.n2(), idx % grid.n2());
            return Err(KmlError::solver(format!(
                "Lagrangian map Jacobian lost positivity at ({i},{j}), t = {t}: under-resolved"
            )));
        }
        let (a, b) = (vel.u1[idx], vel.u2[idx]);
        out[n + idx] = -a - a * d1e1[idx] - b * d2e1[idx];
        out[2 * n + idx] = -b - a * d1e2[idx] - b * d2e2[idx];
    }
    Ok(out)
}

fn diagnostics(grid: &Grid, t: f64, u: &[f64], e1: &[f64], e2: &[f64]) -> Result<FlowDiagnostics> {
    let torus = *grid.torus();
    let uf = PeriodicField::from_parts(grid.clone(), u.to_vec());
    let v = uf.map(|x| x + t);
    let geom = surface_geometry(&GraphSurface::new(v.clone()))?;
    let grad = grid.gradient(&uf);
    let mut q_max = 0.0f64;
    for idx in 0..grid.len() {
        let em2v = (-2.0 * v.values()[idx]).exp();
        q_max = q_max.max(em2v * torus.norm_sq(grad.d1.values()[idx], grad.d2.values()[idx]));
    }
    let mut lam = f64::INFINITY;
    for idx in 0..grid.len() {
        lam = lam.min(geom.principal_curvatures(idx).0);
    }
    let (det, _) = inverse_jacobian(grid, e1, e2);
    let jac = det.iter().map(|d| 1.0 / d);
    let (jmin, jmax) = jac.fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), x| {
        (lo.min(x), hi.max(x))
    });
    Ok(FlowDiagnostics {
        t,
        rho_sq_minus_one: q_max,
        umbilic_deviation: geom.umbilic_deviation().max(),
        v_min: uf.min() + t,
        v_max: uf.max() + t,
        min_principal_curvature: lam,
        jacobian_min: jmin,
        jacobian_max: jmax,
    })
}

/// Precondition of the flow: positive semidefinite second fundamental form.
pub(crate) fn check_flow_hypothesis(geom: &SurfaceGeometry) -> Result<()> {
    let rep = admissibility_check(geom);
    if rep.lambda_min < -POSDEF_TOL {
        let (i, j) = rep.lambda_min_at;
        return Err(KmlError::hypothesis(format!(
            "h positive semidefinite fails at grid point ({i},{j}): min principal curvature = {:.6e}",
            rep.lambda_min
        )));
    }
    Ok(())
}

/// Integrate the unit normal flow with classical RK4 and spectral derivatives.
pub fn run_flow(surface: &GraphSurface, params: FlowParams) -> Result<FlowTrajectory> {
    params.validate()?;
    let grid = surface.grid().clone();
    let geom0 = surface_geometry(surface)?;
    check_flow_hypothesis(&geom0)?;

    let n = grid.len();
    let mut y = vec![0.0; 3 * n];
    y[..n].copy_from_slice(surface.v.values());

    let snaps = params.snapshot_steps();
    let mut traj = FlowTrajectory {
        params,
        times: Vec::with_capacity(snaps.len()),
        shifted: Vec::with_capacity(snaps.len()),
        inverse_displacement: Vec::with_capacity(snaps.len()),
        diagnostics: Vec::with_capacity(snaps.len()),
    };
    let mut next = 0;
    for step in 0..=params.steps() {
        let t = params.time_of(step);
        if snaps[next] == step {
            let (u, rest) = y.split_at(n);
            let (e1, e2) = rest.split_at(n);
            traj.times.push(t);
            traj.shifted
                .push(PeriodicField::from_parts(grid.clone(), u.to_vec()));
            traj.inverse_displacement.push([
                PeriodicField::from_parts(grid.clone(), e1.to_vec()),
                PeriodicField::from_parts(grid.clone(), e2.to_vec()),
            ]);
            traj.diagnostics.push(diagnostics(&grid, t, u, e1, e2)?);
            next += 1;
        }
        if step == params.steps() {
            break;
        }
        y = rk4_step(&y, t, params.dt, |tt, yy| flow_rhs(&grid, tt, yy))?;
    }
    Ok(traj)
}

impl FlowTrajectory {
    pub fn params(&self) -> &FlowParams {
        &self.params
    }

    pub fn grid(&self) -> &Grid {
        self.shifted[0].grid()
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn diagnostics(&self) -> &[FlowDiagnostics] {
        &self.diagnostics
    }

    /// Translated graph v(t_k, ·) − t_k.
    pub fn shifted(&self, k: usize) -> &PeriodicField {
        &self.shifted[k]
    }

    /// Graph height v(t_k, ·).
    pub fn v(&self, k: usize) -> PeriodicField {
        let t = self.times[k];
        self.shifted[k].map(|u| u + t)
    }

    pub fn surface(&self, k: usize) -> GraphSurface {
        GraphSurface::new(self.v(k))
    }

    pub fn initial_surface(&self) -> GraphSurface {
        self.surface(0)
    }

    /// Displacement Θ(t_k,·)^{-1} − id on the Eulerian grid.
    pub fn inverse_displacement(&self, k: usize) -> &[PeriodicField; 2] {
        &self.inverse_displacement[k]
    }

    /// Index of the stored snapshot closest to time `t`.
    pub fn index_near(&self, t: f64) -> usize {
        let mut best = 0;
        for (k, &tk) in self.times.iter().enumerate() {
            if (tk - t).abs() < (self.times[best] - t).abs() {
                best = k;
            }
        }
        best
    }

    /// Displacement Θ(t_k,·) − id at the label grid, by Newton iteration
    /// on the interpolant of the inverse map (tolerance 1e-12, at most 50
    /// iterations per point).
    pub fn theta_displacement(&self, k: usize) -> Result<[PeriodicField; 2]> {
        let grid = self.grid();
        let [e1, e2] = &self.inverse_displacement[k];
        let i1 = grid.spectrum(e1).interpolant();
        let i2 = grid.spectrum(e2).interpolant();
        let n = grid.len();
        let mut d1 = vec![0.0; n];
        let mut d2 = vec![0.0; n];
        for idx in 0..n {
            let (a, b) = grid.point(idx);
            let mut x = a - e1.values()[idx];
            let mut y = b - e2.values()[idx];
            let mut converged = false;
            for _ in 0..50 {
                let basis = grid.basis_at(x, y);
                let (f1, f1x, f1y) = i1.eval(&basis);
                let (f2, f2x, f2y) = i2.eval(&basis);
                let r1 = x + f1 - a;
                let r2 = y + f2 - b;
                let p = [[1.0 + f1x, f1y], [f2x, 1.0 + f2y]];
                let pi = inv2(p).ok_or_else(|| {
                    KmlError::solver("singular inverse-map Jacobian during Newton inversion")
                })?;
                let dx = pi[0][0] * r1 + pi[0][1] * r2;
                let dy = pi[1][0] * r1 + pi[1][1] * r2;
                x -= dx;
                y -= dy;
                if dx.abs().max(dy.abs()) < 1e-12 {
                    converged = true;
                    break;
                }
            }
            if !converged {
                let (i, j) = (idx / grid.n2(), idx % grid.n2());
                return Err(KmlError::solver(format!(
                    "Newton inversion of the flow map did not converge at label ({i},{j})"
                )));
            }
            d1[idx] = x - a;
            d2[idx] = y - b;
        }
        Ok([
            PeriodicField::from_parts(grid.clone(), d1),
            PeriodicField::from_parts(grid.clone(), d2),
        ])
    }
}

/// Closed-form solution h(t) = I + 2e^{−2t}(h₀−I)[h₀+I−(h₀−I)e^{−2t}]^{−1}
/// of ∂ₜh = −h² + I for a mixed shape operator h₀.
pub fn exact_shape_operator(h0: [[f64; 2]; 2], t: f64) -> Result<[[f64; 2]; 2]> {
    let q = (-2.0 * t).exp();
    let mut a = [[0.0; 2]; 2];
    let mut bracket = [[0.0; 2]; 2];
    for i in 0..2 {
        for j in 0..2 {
            let id = if i == j { 1.0 } else { 0.0 };
            a[i][j] = h0[i][j] - id;
            bracket[i][j] = h0[i][j] + id - a[i][j] * q;
        }
    }
    let det = bracket[0][0] * bracket[1][1] - bracket[0][1] * bracket[1][0];
    let scale = bracket.iter().flatten().fold(0.0f64, |m, x| m.max(x.abs()));
    if det.abs() <= 1e-14 * scale * scale {
        return Err(KmlError::solver(
            "singular bracket in the shape-operator solution (inadmissible initial data)",
        ));
    }
    let inv = inv2(bracket).expect("checked nonsingular");
    let prod = mul2(a, inv);
    let mut out = [[0.0; 2]; 2];
    for i in 0..2 {
        for j in 0..2 {
            let id = if i == j { 1.0 } else { 0.0 };
            out[i][j] = id + 2.0 * q * prod[i][j];
        }
    }
    Ok(out)
}

/// Sup-norm mismatch between the shape operator recomputed from v(t_k)
/// and pulled back to Lagrangian labels, and the closed-form evolution of
/// the initial shape operator.
pub fn shape_operator_consistency(traj: &FlowTrajectory, k: usize) -> Result<f64> {
    let grid = traj.grid();
    let geom0 = surface_geometry(&traj.initial_surface())?;
    let geom = surface_geometry(&traj.surface(k))?;
    let t = traj.times[k];
    let n = grid.len();
    let mut comps = [vec![0.0; n], vec![0.0; n], vec![0.0; n], vec![0.0; n]];
    for idx in 0..n {
        let a = geom.shape_operator(idx);
        comps[0][idx] = a[0][0];
        comps[1][idx] = a[0][1];
        comps[2][idx] = a[1][0];
        comps[3][idx] = a[1][1];
    }
    let interps: Vec<_> = comps
        .into_iter()
        .map(|c| {
            grid.spectrum(&PeriodicField::from_parts(grid.clone(), c))
                .interpolant()
        })
        .collect();
    let [e1, e2] = traj.inverse_displacement(k);
    let ie1 = grid.spectrum(e1).interpolant();
    let ie2 = grid.spectrum(e2).interpolant();
    let [d1, d2] = traj.theta_displacement(k)?;

    let mut worst = 0.0f64;
    for idx in 0..n {
        let (a, b) = grid.point(idx);
        let basis = grid.basis_at(a + d1.values()[idx], b + d2.values()[idx]);
        let s = [
            [interps[0].value(&basis), interps[1].value(&basis)],
            [interps[2].value(&basis), interps[3].value(&basis)],
        ];
        let (_, e1x, e1y) = ie1.eval(&basis);
        let (_, e2x, e2y) = ie2.eval(&basis);
        // P = ∂Φ/∂θ = (∂Θ/∂θ̄)^{-1}; label components are P S P^{-1}
        let p = [[1.0 + e1x, e1y], [e2x, 1.0 + e2y]];
        let pi = inv2(p).ok_or_else(|| KmlError::solver("singular flow-map Jacobian"))?;
        let label = mul2(mul2(p, s), pi);
        let exact = exact_shape_operator(geom0.shape_operator(idx), t)?;
        for i in 0..2 {
            for j in 0..2 {
                worst = worst.max((label[i][j] - exact[i][j]).abs());
            }
        }
    }
    Ok(worst)
}

/// Limit f = lim (v − t) of the translated graphs.
#[derive(Clone, Debug)]
pub struct FLimit {
    /// Richardson-improved limit assuming e^{−2t} convergence.
    pub f: PeriodicField,
    /// v(t_max) − t_max
    pub raw: PeriodicField,
    /// sup |(v − t)(t_max) − (v − t)(t_max/2)|
    pub tail_difference: f64,
    /// sup |f − raw|
    pub richardson_correction: f64,
    pub warning: Option<String>,
}

/// Richardson extrapolation of x(t) = x∞ + a e^{−2t} from samples at t1 < t2.
pub(crate) fn richardson(x1: f64, x2: f64, t1: f64, t2: f64) -> f64 {
    let q = (-2.0 * (t2 - t1)).exp();
    (x2 - q * x1) / (1.0 - q)
}

/// Flags tails whose last increment exceeds the e^{−2t} prediction tenfold.
pub(crate) fn rate_warning(d_early: f64, d_late: f64, ta: f64, tb: f64, tc: f64) -> Option<String> {
    if d_early < 1e-14 {
        return None;
    }
    let predicted =
        ((-2.0 * tc).exp() - (-2.0 * tb).exp()) / ((-2.0 * tb).exp() - (-2.0 * ta).exp());
    let observed = d_late / d_early;
    if observed > 10.0 * predicted.abs() && d_late > 1e-13 {
        Some(format!(
            "tail increments shrink by {observed:.3e}, e^(-2t) predicts {predicted:.3e}"
        ))
    } else {
        None
    }
}

pub fn extract_f(traj: &FlowTrajectory) -> Result<FLimit> {
    let t_max = *traj.times.last().expect("non-empty trajectory");
    if t_max < 6.0 - 1e-9 {
        return Err(KmlError::input(format!(
            "extracting f needs t_max >= 6, trajectory ends at {t_max}"
        )));
    }
    let kc = traj.len() - 1;
    let ka = traj.index_near(0.5 * t_max);
    let kb = traj.index_near(0.75 * t_max);
    if !(ka < kb && kb < kc) {
        return Err(KmlError::input(
            "trajectory has too few snapshots in its tail",
        ));
    }
    let (ta, tb, tc) = (traj.times[ka], traj.times[kb], traj.times[kc]);
    let (ua, ub, uc) = (&traj.shifted[ka], &traj.shifted[kb], &traj.shifted[kc]);
    let f = ub.zip_map(uc, |x1, x2| richardson(x1, x2, tb, tc));
    let tail_difference = uc.sup_distance(ua);
    let richardson_correction = f.sup_distance(uc);
    let warning = rate_warning(ub.sup_distance(ua), uc.sup_distance(ub), ta, tb, tc);
    Ok(FLimit {
        f,
        raw: uc.clone(),
        tail_difference,
        richardson_correction,
        warning,
    })
}

/// ln y ≈ intercept + slope·t
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExpFit {
    pub slope: f64,
    pub intercept: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DecayReport {
    pub fit_start: f64,
    pub fit_end: f64,
    /// fit of max(ρ² − 1), or None at the round-off floor
    pub rho: Option<ExpFit>,
    /// fit of max|h − γ|_γ, or None at the round-off floor
    pub umbilic: Option<ExpFit>,
}

impl DecayReport {
    pub fn rho_slope(&self) -> Option<f64> {
        self.rho.map(|f| f.slope)
    }

    pub fn umbilic_slope(&self) -> Option<f64> {
        self.umbilic.map(|f| f.slope)
    }

    pub fn at_floor(&self) -> bool {
        self.rho.is_none() && self.umbilic.is_none()
    }
}

/// Least-squares line through (t, ln y).
pub fn log_fit(ts: &[f64], ys: &[f64]) -> Option<ExpFit> {
    if ts.len() < 2 || ys.iter().any(|&y| !(y >= 1e-13)) {
        return None;
    }
    let n = ts.len() as f64;
    let mt = ts.iter().sum::<f64>() / n;
    let ly: Vec<f64> = ys.iter().map(|y| y.ln()).collect();
    let my = ly.iter().sum::<f64>() / n;
    let mut num = 0.0;
    let mut den = 0.0;
    for (t, l) in ts.iter().zip(&ly) {
        num += (t - mt) * (l - my);
        den += (t - mt) * (t - mt);
    }
    let slope = num / den;
    Some(ExpFit {
        slope,
        intercept: my - slope * mt,
    })
}

/// Exponential decay rates of the flow diagnostics over the second half of the run.
pub fn decay_report(traj: &FlowTrajectory) -> DecayReport {
    let t_max = *traj.times.last().expect("non-empty");
    let tail: Vec<&FlowDiagnostics> = traj
        .diagnostics
        .iter()
        .filter(|d| d.t >= 0.5 * t_max - 1e-12)
        .collect();
    let ts: Vec<f64> = tail.iter().map(|d| d.t).collect();
    let rho: Vec<f64> = tail.iter().map(|d| d.rho_sq_minus_one).collect();
    let umb: Vec<f64> = tail.iter().map(|d| d.umbilic_deviation).collect();
    DecayReport {
        fit_start: ts[0],
        fit_end: t_max,
        rho: log_fit(&ts, &rho),
        umbilic: log_fit(&ts, &umb),
    }
}

/// Largest violation of v_min(0) ≤ v_min(t) ≤ v_max(t) ≤ v_max(0) + t over
/// the stored snapshots (≤ 0 when the barriers hold).
/// The upper barrier uses the maximum of the interpolated initial graph,
/// since grid samples of later leaves can approach an off-grid peak.
pub fn height_barrier_violation(traj: &FlowTrajectory) -> f64 {
    let d0 = traj.diagnostics[0];
    let top = traj.grid().interpolated_max(&traj.shifted[0]);
    traj.diagnostics
        .iter()
        .map(|d| {
            (d0.v_min - d.v_min)
                .max(d.v_min - d.v_max)
                .max(d.v_max - top - d.t)
        })
        .fold(f64::NEG_INFINITY, f64::max)
}

/// Eigenvalues of a mixed shape operator, ascending.
pub fn principal_values(a: [[f64; 2]; 2]) -> (f64, f64) {
    eig2(a)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::FlatTorus;

    fn sine_surface(n: usize, amp: f64) -> GraphSurface {
        let g = Grid::square(n, FlatTorus::identity()).unwrap();
        GraphSurface::new(g.from_fn(|x, _| amp * x.sin()))
    }

    #[test]
    fn params_validation() {
        assert!(FlowParams::default().validate().is_ok());
        let bad = [
            FlowParams {
                t_max: 0.0,
                ..Default::default()
            },
            FlowParams {
                dt: 0.06,
                ..Default::default()
            },
            FlowParams {
                dt: 0.0,
                ..Default::default()
            },
            FlowParams {
                snapshot_stride: 0,
                ..Default::default()
            },
            FlowParams {
                t_max: 1.0005,
                dt: 1e-3,
                snapshot_stride: 1,
            },
        ];
        for p in bad {
            assert!(p.validate().is_err(), "{p:?}");
        }
        let p = FlowParams {
            t_max: 1.0,
            dt: 0.1,
            snapshot_stride: 3,
        };
        assert_eq!(p.snapshot_steps(), vec![0, 3, 6, 9, 10]);
    }

    #[test]
    fn constant_graph_translates() {
        let g = Grid::square(8, FlatTorus::identity()).unwrap();
        let c = 0.3;
        let params = FlowParams {
            t_max: 2.0,
            dt: 0.01,
            snapshot_stride: 50,
        };
        let traj = run_flow(&GraphSurface::new(g.constant(c)), params).unwrap();
        for k in 0..traj.len() {
            let t = traj.times()[k];
            assert!(traj
                .v(k)
                .values()
                .iter()
                .all(|&v| (v - (c + t)).abs() <= 1e-12));
            let [e1, e2] = traj.inverse_displacement(k);
            assert!(e1.max_abs() == 0.0 && e2.max_abs() == 0.0);
        }
        assert!(decay_report(&traj).at_floor());
    }

    #[test]
    fn exact_shape_operator_fixed_point_and_limit() {
        let id = [[1.0, 0.0], [0.0, 1.0]];
        for t in [0.0, 0.5, 3.0] {
            assert_eq!(exact_shape_operator(id, t).unwrap(), id);
        }
        let h = exact_shape_operator([[0.3, 0.0], [0.0, 0.3]], 20.0).unwrap();
        assert!((h[0][0] - 1.0).abs() < 1e-15 && (h[1][1] - 1.0).abs() < 1e-15);
        // λ = −3 blows up at e^{−2t} = 1/2
        assert!(exact_shape_operator([[-3.0, 0.0], [0.0, 1.0]], 0.5 * 2f64.ln()).is_err());
    }

    #[test]
    fn exact_shape_operator_matches_riccati_integration() {
        let h0 = [[2.0, 0.0], [0.0, 0.5]];
        let exact = exact_shape_operator(h0, 1.0).unwrap();
        // scalar closed form λ(t) of λ' = 1 − λ²
        let lam = |l0: f64, t: f64| {
            let q = (-2.0 * t).exp();
            1.0 + 2.0 * q * (l0 - 1.0) / (l0 + 1.0 - (l0 - 1.0) * q)
        };
        assert!((exact[0][0] - lam(2.0, 1.0)).abs() < 1e-14);
        assert!((exact[1][1] - lam(0.5, 1.0)).abs() < 1e-14);
        // RK4 on the matrix ODE ∂ₜh = −h² + I
        let mut y = vec![2.0, 0.0, 0.0, 0.5];
        let dt = 1e-3;
        for k in 0..1000 {
            y = rk4_step(&y, k as f64 * dt, dt, |_, y| {
                let m = [[y[0], y[1]], [y[2], y[3]]];
                let sq = mul2(m, m);
                Ok(vec![1.0 - sq[0][0], -sq[0][1], -sq[1][0], 1.0 - sq[1][1]])
            })
            .unwrap();
        }
        assert!((y[0] - exact[0][0]).abs() <= 1e-10);
        assert!((y[3] - exact[1][1]).abs() <= 1e-10);
        assert!(y[1].abs() <= 1e-10 && y[2].abs() <= 1e-10);
    }

    #[test]
    fn non_diagonal_shape_operator_matches_matrix_ode() {
        let h0 = [[1.4, 0.3], [0.1, 0.8]];
        let exact = exact_shape_operator(h0, 0.7).unwrap();
        let mut y = vec![h0[0][0], h0[0][1], h0[1][0], h0[1][1]];
        let dt = 1e-3;
        for k in 0..700 {
            y = rk4_step(&y, k as f64 * dt, dt, |_, y| {
                let m = [[y[0], y[1]], [y[2], y[3]]];
                let sq = mul2(m, m);
                Ok(vec![1.0 - sq[0][0], -sq[0][1], -sq[1][0], 1.0 - sq[1][1]])
            })
            .unwrap();
        }
        let flat = [exact[0][0], exact[0][1], exact[1][0], exact[1][1]];
        for (a, b) in y.iter().zip(flat) {
            assert!((a - b).abs() < 1e-10);
        }
    }

    #[test]
    fn rejects_non_convex_initial_graph() {
        let err = run_flow(&sine_surface(32, 5.0), FlowParams::default()).unwrap_err();
        assert!(matches!(err, KmlError::Hypothesis(_)), "{err}");
    }

    #[test]
    fn barriers_and_jacobian_on_short_run() {
        let params = FlowParams {
            t_max: 1.0,
            dt: 0.01,
            snapshot_stride: 10,
        };
        let traj = run_flow(&sine_surface(32, 0.2), params).unwrap();
        assert!(height_barrier_violation(&traj) <= 1e-10);
        for d in traj.diagnostics() {
            assert!(d.min_principal_curvature > 0.0);
            assert!(d.jacobian_min > 0.5 && d.jacobian_max < 1.5);
        }
    }

    #[test]
    fn newton_inversion_round_trips() {
        let params = FlowParams {
            t_max: 0.5,
            dt: 0.01,
            snapshot_stride: 50,
        };
        let traj = run_flow(&sine_surface(16, 0.2), params).unwrap();
        let k = traj.len() - 1;
        let grid = traj.grid().clone();
        let [d1, d2] = traj.theta_displacement(k).unwrap();
        let [e1, e2] = traj.inverse_displacement(k);
        let i1 = grid.spectrum(e1).interpolant();
        let i2 = grid.spectrum(e2).interpolant();
        for idx in 0..grid.len() {
            let basis = grid.basis_at(
                grid.point(idx).0 + d1.values()[idx],
                grid.point(idx).1 + d2.values()[idx],
            );
            // Φ(Θ(θ̄)) = θ̄  ⇔  E(Θ(θ̄)) = −(Θ(θ̄) − θ̄)
            assert!((i1.value(&basis) + d1.values()[idx]).abs() < 1e-11);
            assert!((i2.value(&basis) + d2.values()[idx]).abs() < 1e-11);
        }
        assert!(d1.max_abs() > 1e-4, "flow map should move points");
    }

    #[test]
    fn log_slope_declines_at_floor() {
        assert_eq!(log_fit(&[0.0, 1.0], &[1e-14, 1e-15]), None);
        let ts = [0.0, 1.0, 2.0];
        let ys: Vec<f64> = ts.iter().map(|t: &f64| 3.0 * (-2.0 * t).exp()).collect();
        let fit = log_fit(&ts, &ys).unwrap();
        assert!((fit.slope + 2.0).abs() < 1e-12);
    }
}
