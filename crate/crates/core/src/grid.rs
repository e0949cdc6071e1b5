//! Uniform periodic grids on the flat torus.
//!
//! Coordinates θ¹, θ² both have period 2π; the flat metric σ carries all
//! of the torus geometry. Derivatives are Fourier-collocation derivatives
//! of the trigonometric interpolant, so they are exact on every resolved
//! mode. The Nyquist mode contributes nothing to odd derivatives (the
//! interpolant's Nyquist term is a pure cosine, whose odd derivatives
//! vanish on the grid) and contributes `-(n/2)^2` to pure second
//! derivatives.

use std::f64::consts::PI;
use std::fmt;
use std::sync::Arc;

use rustfft::num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use crate::error::{KmlError, Result};

const TWO_PI: f64 = 2.0 * PI;

/// Constant flat metric σ_ij dθ^i dθ^j on T² with 2π-periodic coordinates.
#[derive(Clone, Copy, PartialEq)]
pub struct FlatTorus {
    sigma: [[f64; 2]; 2],
    sigma_inv: [[f64; 2]; 2],
    sqrt_det: f64,
}

impl fmt::Debug for FlatTorus {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("FlatTorus")
            .field("sigma", &self.sigma)
            .finish()
    }
}

impl FlatTorus {
    pub fn new(sigma: [[f64; 2]; 2]) -> Result<Self> {
        let [[a, b], [c, d]] = sigma;
        if ![a, b, c, d].iter().all(|x| x.is_finite()) {
            return Err(KmlError::input("sigma has non-finite entries"));
        }
        if (b - c).abs() > 1e-14 * (1.0 + b.abs().max(c.abs())) {
            return Err(KmlError::input(format!(
                "sigma is not symmetric: {b} vs {c}"
            )));
        }
        let det = a * d - b * b;
        if !(a > 0.0 && det > 0.0) {
            return Err(KmlError::input(format!(
                "sigma is not positive definite (sigma_11 = {a}, det = {det})"
            )));
        }
        Ok(Self {
            sigma: [[a, b], [b, d]],
            sigma_inv: [[d / det, -b / det], [-b / det, a / det]],
            sqrt_det: det.sqrt(),
        })
    }

    pub fn identity() -> Self {
        Self::diagonal(1.0, 1.0).expect("identity metric is positive definite")
    }

    pub fn diagonal(s11: f64, s22: f64) -> Result<Self> {
        Self::new([[s11, 0.0], [0.0, s22]])
    }

    /// Flat torus whose coordinate periods 2π reproduce physical periods
    /// `p1`, `p2` of a metric `c1 dx² + c2 dy²`.
    pub fn from_periods(c1: f64, p1: f64, c2: f64, p2: f64) -> Result<Self> {
        let s1 = p1 / TWO_PI;
        let s2 = p2 / TWO_PI;
        Self::diagonal(c1 * s1 * s1, c2 * s2 * s2)
    }

    pub fn sigma(&self) -> [[f64; 2]; 2] {
        self.sigma
    }

    pub fn sigma_inv(&self) -> [[f64; 2]; 2] {
        self.sigma_inv
    }

    pub fn sqrt_det(&self) -> f64 {
        self.sqrt_det
    }

    /// Total σ-area (2π)² sqrt(det σ).
    pub fn area(&self) -> f64 {
        TWO_PI * TWO_PI * self.sqrt_det
    }

    /// v^i = σ^{ij} v_j
    #[inline]
    pub fn raise(&self, v1: f64, v2: f64) -> (f64, f64) {
        let s = &self.sigma_inv;
        (s[0][0] * v1 + s[0][1] * v2, s[1][0] * v1 + s[1][1] * v2)
    }

    /// |v|²_σ for a covector.
    #[inline]
    pub fn norm_sq(&self, v1: f64, v2: f64) -> f64 {
        let s = &self.sigma_inv;
        s[0][0] * v1 * v1 + 2.0 * s[0][1] * v1 * v2 + s[1][1] * v2 * v2
    }
}

/// Derivative order along (θ¹, θ²); each entry is 0, 1 or 2.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Deriv(pub u8, pub u8);

impl Deriv {
    pub const ID: Deriv = Deriv(0, 0);
    pub const D1: Deriv = Deriv(1, 0);
    pub const D2: Deriv = Deriv(0, 1);
    pub const D11: Deriv = Deriv(2, 0);
    pub const D12: Deriv = Deriv(1, 1);
    pub const D22: Deriv = Deriv(0, 2);
}

struct GridInner {
    n1: usize,
    n2: usize,
    torus: FlatTorus,
    fwd1: Arc<dyn Fft<f64>>,
    fwd2: Arc<dyn Fft<f64>>,
    inv1: Arc<dyn Fft<f64>>,
    inv2: Arc<dyn Fft<f64>>,
    // multipliers[axis][order][k]
    mult: [[Vec<Complex64>; 3]; 2],
}

/// A uniform n1 × n2 sampling of T² (shared handle, cheap to clone).
#[derive(Clone)]
pub struct Grid {
    inner: Arc<GridInner>,
}

impl fmt::Debug for Grid {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Grid")
            .field("n1", &self.inner.n1)
            .field("n2", &self.inner.n2)
            .field("torus", &self.inner.torus)
            .finish()
    }
}

impl PartialEq for Grid {
    fn eq(&self, other: &Self) -> bool {
        Arc::ptr_eq(&self.inner, &other.inner)
            || (self.inner.n1 == other.inner.n1
                && self.inner.n2 == other.inner.n2
                && self.inner.torus == other.inner.torus)
    }
}

fn axis_multipliers(n: usize) -> [Vec<Complex64>; 3] {
    let half = (n / 2) as i64;
    let kappa = |k: usize| -> f64 {
        let k = k as i64;
        (if k > half { k - n as i64 } else { k }) as f64
    };
    let zeroth = vec![Complex64::new(1.0, 0.0); n];
    let first = (0..n)
        .map(|k| {
            if k as i64 == half {
                Complex64::new(0.0, 0.0)
            } else {
                Complex64::new(0.0, kappa(k))
            }
        })
        .collect();
    let second = (0..n)
        .map(|k| Complex64::new(-kappa(k) * kappa(k), 0.0))
        .collect();
    [zeroth, first, second]
}

impl Grid {
    pub fn new(n1: usize, n2: usize, torus: FlatTorus) -> Result<Self> {
        if n1 < 2 || n2 < 2 || !n1.is_multiple_of(2) || !n2.is_multiple_of(2) {
            return Err(KmlError::input(format!(
                "grid sizes must be even and >= 2, got {n1} x {n2}"
            )));
        }
        let mut planner = FftPlanner::new();
        let inner = GridInner {
            n1,
            n2,
            torus,
            fwd1: planner.plan_fft_forward(n1),
            fwd2: planner.plan_fft_forward(n2),
            inv1: planner.plan_fft_inverse(n1),
            inv2: planner.plan_fft_inverse(n2),
            mult: [axis_multipliers(n1), axis_multipliers(n2)],
        };
        Ok(Self {
            inner: Arc::new(inner),
        })
    }

    pub fn square(n: usize, torus: FlatTorus) -> Result<Self> {
        Self::new(n, n, torus)
    }

    pub fn n1(&self) -> usize {
        self.inner.n1
    }

    pub fn n2(&self) -> usize {
        self.inner.n2
    }

    pub fn len(&self) -> usize {
        self.inner.n1 * self.inner.n2
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn torus(&self) -> &FlatTorus {
        &self.inner.torus
    }

    /// Grid spacing (Δθ¹, Δθ²).
    pub fn spacing(&self) -> (f64, f64) {
        (TWO_PI / self.inner.n1 as f64, TWO_PI / self.inner.n2 as f64)
    }

    /// Coordinates of the grid point with flat index `idx` (row-major, θ¹ slow).
    #[inline]
    pub fn point(&self, idx: usize) -> (f64, f64) {
        let (i, j) = (idx / self.inner.n2, idx % self.inner.n2);
        let (h1, h2) = self.spacing();
        (i as f64 * h1, j as f64 * h2)
    }

    pub fn field(&self, values: Vec<f64>) -> Result<PeriodicField> {
        PeriodicField::new(self.clone(), values)
    }

    pub fn constant(&self, c: f64) -> PeriodicField {
        PeriodicField {
            grid: self.clone(),
            values: vec![c; self.len()],
        }
    }

    pub fn from_fn(&self, f: impl Fn(f64, f64) -> f64) -> PeriodicField {
        let values = (0..self.len())
            .map(|idx| {
                let (x, y) = self.point(idx);
                f(x, y)
            })
            .collect();
        PeriodicField {
            grid: self.clone(),
            values,
        }
    }

    /// Quadrature (2π/n1)(2π/n2) Σ values, summed in a fixed order.
    pub fn integrate(&self, density: &PeriodicField) -> f64 {
        let (h1, h2) = self.spacing();
        neumaier_sum(density.values.iter().copied()) * h1 * h2
    }

    fn transpose(src: &[Complex64], rows: usize, cols: usize, dst: &mut [Complex64]) {
        for r in 0..rows {
            for c in 0..cols {
                dst[c * rows + r] = src[r * cols + c];
            }
        }
    }

    /// Forward 2D DFT of row-major complex samples; output in [k2][k1] layout.
    fn fft2_forward(&self, mut buf: Vec<Complex64>) -> Vec<Complex64> {
        let (n1, n2) = (self.inner.n1, self.inner.n2);
        self.inner.fwd2.process(&mut buf);
        let mut t = vec![Complex64::new(0.0, 0.0); buf.len()];
        Self::transpose(&buf, n1, n2, &mut t);
        self.inner.fwd1.process(&mut t);
        t
    }

    /// Inverse of [`Self::fft2_forward`], normalized; returns row-major samples.
    fn fft2_inverse(&self, mut spec: Vec<Complex64>) -> Vec<Complex64> {
        let (n1, n2) = (self.inner.n1, self.inner.n2);
        self.inner.inv1.process(&mut spec);
        let mut t = vec![Complex64::new(0.0, 0.0); spec.len()];
        Self::transpose(&spec, n2, n1, &mut t);
        self.inner.inv2.process(&mut t);
        let scale = 1.0 / (n1 * n2) as f64;
        for z in t.iter_mut() {
            *z *= scale;
        }
        t
    }

    pub fn spectrum(&self, field: &PeriodicField) -> Spectrum {
        debug_assert!(field.grid == *self);
        let buf = field
            .values
            .iter()
            .map(|&x| Complex64::new(x, 0.0))
            .collect();
        Spectrum {
            grid: self.clone(),
            coeffs: self.fft2_forward(buf),
        }
    }

    /// Spectra of two real fields from a single complex transform.
    pub fn spectrum_pair(&self, a: &PeriodicField, b: &PeriodicField) -> (Spectrum, Spectrum) {
        let (n1, n2) = (self.inner.n1, self.inner.n2);
        let buf = a
            .values
            .iter()
            .zip(&b.values)
            .map(|(&x, &y)| Complex64::new(x, y))
            .collect();
        let packed = self.fft2_forward(buf);
        let mut sa = vec![Complex64::new(0.0, 0.0); packed.len()];
        let mut sb = vec![Complex64::new(0.0, 0.0); packed.len()];
        for k2 in 0..n2 {
            let m2 = (n2 - k2) % n2;
            for k1 in 0..n1 {
                let m1 = (n1 - k1) % n1;
                let p = packed[k2 * n1 + k1];
                let q = packed[m2 * n1 + m1].conj();
                sa[k2 * n1 + k1] = (p + q) * 0.5;
                sb[k2 * n1 + k1] = (p - q) * Complex64::new(0.0, -0.5);
            }
        }
        (
            Spectrum {
                grid: self.clone(),
                coeffs: sa,
            },
            Spectrum {
                grid: self.clone(),
                coeffs: sb,
            },
        )
    }

    #[inline]
    fn multiplier(&self, d: Deriv, k1: usize, k2: usize) -> Complex64 {
        self.inner.mult[0][d.0 as usize][k1] * self.inner.mult[1][d.1 as usize][k2]
    }

    /// Inverse transform of `d_a S_a + i d_b S_b`, split into its two real parts.
    pub fn inverse_pair(
        &self,
        a: (&Spectrum, Deriv),
        b: Option<(&Spectrum, Deriv)>,
    ) -> (PeriodicField, Option<PeriodicField>) {
        let (n1, n2) = (self.inner.n1, self.inner.n2);
        let i = Complex64::new(0.0, 1.0);
        let mut buf = vec![Complex64::new(0.0, 0.0); n1 * n2];
        for k2 in 0..n2 {
            for k1 in 0..n1 {
                let idx = k2 * n1 + k1;
                let mut z = self.multiplier(a.1, k1, k2) * a.0.coeffs[idx];
                if let Some((sb, db)) = b {
                    z += i * self.multiplier(db, k1, k2) * sb.coeffs[idx];
                }
                buf[idx] = z;
            }
        }
        let out = self.fft2_inverse(buf);
        let re = PeriodicField {
            grid: self.clone(),
            values: out.iter().map(|z| z.re).collect(),
        };
        let im = b.map(|_| PeriodicField {
            grid: self.clone(),
            values: out.iter().map(|z| z.im).collect(),
        });
        (re, im)
    }

    /// Apply two derivative operators to one spectrum with a single inverse transform.
    pub fn derive2(&self, s: &Spectrum, a: Deriv, b: Deriv) -> (PeriodicField, PeriodicField) {
        let (x, y) = self.inverse_pair((s, a), Some((s, b)));
        (x, y.expect("pair requested"))
    }

    pub fn derive(&self, s: &Spectrum, d: Deriv) -> PeriodicField {
        self.inverse_pair((s, d), None).0
    }

    /// Spectral gradient v_i = ∂_{θ^i} v.
    pub fn gradient(&self, field: &PeriodicField) -> Covector {
        let s = self.spectrum(field);
        let (d1, d2) = self.derive2(&s, Deriv::D1, Deriv::D2);
        Covector { d1, d2 }
    }

    /// Coordinate Hessian ∂²_{ij} v, which is the σ-covariant Hessian since
    /// σ is constant.
    pub fn hessian(&self, field: &PeriodicField) -> SymTensor {
        let s = self.spectrum(field);
        self.hessian_of(&s)
    }

    fn hessian_of(&self, s: &Spectrum) -> SymTensor {
        let (t11, t22) = self.derive2(s, Deriv::D11, Deriv::D22);
        let t12 = self.derive(s, Deriv::D12);
        SymTensor { t11, t12, t22 }
    }

    /// Gradient and Hessian sharing one forward transform.
    pub fn jet2(&self, field: &PeriodicField) -> (Covector, SymTensor) {
        let s = self.spectrum(field);
        let (d1, d2) = self.derive2(&s, Deriv::D1, Deriv::D2);
        (Covector { d1, d2 }, self.hessian_of(&s))
    }

    /// Divergence ∂_1 X¹ + ∂_2 X² of a vector field given by its components.
    pub fn divergence(&self, x1: &PeriodicField, x2: &PeriodicField) -> PeriodicField {
        let (s1, s2) = self.spectrum_pair(x1, x2);
        let (n1, n2) = (self.inner.n1, self.inner.n2);
        let mut buf = vec![Complex64::new(0.0, 0.0); n1 * n2];
        for k2 in 0..n2 {
            for k1 in 0..n1 {
                let idx = k2 * n1 + k1;
                buf[idx] = self.multiplier(Deriv::D1, k1, k2) * s1.coeffs[idx]
                    + self.multiplier(Deriv::D2, k1, k2) * s2.coeffs[idx];
            }
        }
        let out = self.fft2_inverse(buf);
        PeriodicField {
            grid: self.clone(),
            values: out.iter().map(|z| z.re).collect(),
        }
    }

    /// Maximum of the trigonometric interpolant, found by Newton iteration
    /// on its gradient from the largest sample. Never below the sample max.
    pub fn interpolated_max(&self, field: &PeriodicField) -> f64 {
        let interp = self.spectrum(field).interpolant();
        let k = field
            .values()
            .iter()
            .enumerate()
            .max_by(|a, b| a.1.total_cmp(b.1))
            .map_or(0, |(i, _)| i);
        let mut best = field.values()[k];
        let (mut x, mut y) = self.point(k);
        let grad = |x: f64, y: f64| {
            let (_, gx, gy) = interp.eval(&self.basis_at(x, y));
            (gx, gy)
        };
        let h = 1e-5;
        for _ in 0..20 {
            let (gx, gy) = grad(x, y);
            let (a1, b1) = grad(x + h, y);
            let (a0, b0) = grad(x - h, y);
            let (c1, d1) = grad(x, y + h);
            let (c0, d0) = grad(x, y - h);
            let hxx = (a1 - a0) / (2.0 * h);
            let hyy = (d1 - d0) / (2.0 * h);
            let hxy = 0.5 * ((b1 - b0) + (c1 - c0)) / (2.0 * h);
            let det = hxx * hyy - hxy * hxy;
            let curv = gx * (hxx * gx + hxy * gy) + gy * (hxy * gx + hyy * gy);
            let (dx, dy) = if det > 1e-8 * (hxx * hxx + hyy * hyy) && hxx < 0.0 {
                (-(hyy * gx - hxy * gy) / det, -(hxx * gy - hxy * gx) / det)
            } else if curv < 0.0 {
                // ridge: Newton along the gradient only
                let step = -(gx * gx + gy * gy) / curv;
                (step * gx, step * gy)
            } else {
                break;
            };
            let (hx, hy) = self.spacing();
            if dx.abs() > hx || dy.abs() > hy {
                break;
            }
            x += dx;
            y += dy;
            best = best.max(interp.value(&self.basis_at(x, y)));
            if dx.abs().max(dy.abs()) < 1e-14 {
                break;
            }
        }
        best
    }

    /// Tabulate interpolation basis functions at an arbitrary point.
    pub fn basis_at(&self, x: f64, y: f64) -> InterpBasis {
        InterpBasis {
            b1: axis_basis(self.inner.n1, x),
            b2: axis_basis(self.inner.n2, y),
        }
    }
}

/// Fourier coefficients of a real field ([k2][k1] layout, unnormalized).
#[derive(Clone)]
pub struct Spectrum {
    grid: Grid,
    coeffs: Vec<Complex64>,
}

impl Spectrum {
    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    /// Trigonometric interpolant of the sampled field.
    pub fn interpolant(&self) -> Interpolant {
        let (n1, n2) = (self.grid.n1(), self.grid.n2());
        let scale = 1.0 / (n1 * n2) as f64;
        // re-layout to [k1][k2] so the inner sum runs over contiguous k2
        let mut c = vec![Complex64::new(0.0, 0.0); n1 * n2];
        for k2 in 0..n2 {
            for k1 in 0..n1 {
                c[k1 * n2 + k2] = self.coeffs[k2 * n1 + k1] * scale;
            }
        }
        Interpolant { n1, n2, coeffs: c }
    }
}

/// Per-axis values and derivatives of the interpolation basis at a point.
pub struct InterpBasis {
    b1: (Vec<Complex64>, Vec<Complex64>),
    b2: (Vec<Complex64>, Vec<Complex64>),
}

fn axis_basis(n: usize, x: f64) -> (Vec<Complex64>, Vec<Complex64>) {
    let half = n / 2;
    let mut val = Vec::with_capacity(n);
    let mut der = Vec::with_capacity(n);
    for k in 0..n {
        if k == half {
            let a = half as f64 * x;
            val.push(Complex64::new(a.cos(), 0.0));
            der.push(Complex64::new(-(half as f64) * a.sin(), 0.0));
        } else {
            let kappa = if k > half {
                k as f64 - n as f64
            } else {
                k as f64
            };
            let e = Complex64::from_polar(1.0, kappa * x);
            val.push(e);
            der.push(Complex64::new(0.0, kappa) * e);
        }
    }
    (val, der)
}

/// Trigonometric interpolant, evaluable off-grid with first derivatives.
#[derive(Clone)]
pub struct Interpolant {
    n1: usize,
    n2: usize,
    coeffs: Vec<Complex64>,
}

impl Interpolant {
    /// Value and gradient (∂_1, ∂_2) at the basis point.
    pub fn eval(&self, basis: &InterpBasis) -> (f64, f64, f64) {
        let (v1, d1) = (&basis.b1.0, &basis.b1.1);
        let (v2, d2) = (&basis.b2.0, &basis.b2.1);
        let mut val = Complex64::new(0.0, 0.0);
        let mut dx = Complex64::new(0.0, 0.0);
        let mut dy = Complex64::new(0.0, 0.0);
        for k1 in 0..self.n1 {
            let row = &self.coeffs[k1 * self.n2..(k1 + 1) * self.n2];
            let mut g = Complex64::new(0.0, 0.0);
            let mut gy = Complex64::new(0.0, 0.0);
            for ((c, b), db) in row.iter().zip(v2).zip(d2) {
                g += c * b;
                gy += c * db;
            }
            val += v1[k1] * g;
            dx += d1[k1] * g;
            dy += v1[k1] * gy;
        }
        (val.re, dx.re, dy.re)
    }

    pub fn value(&self, basis: &InterpBasis) -> f64 {
        let v1 = &basis.b1.0;
        let v2 = &basis.b2.0;
        let mut val = Complex64::new(0.0, 0.0);
        for k1 in 0..self.n1 {
            let row = &self.coeffs[k1 * self.n2..(k1 + 1) * self.n2];
            let g: Complex64 = row.iter().zip(v2).map(|(c, b)| c * b).sum();
            val += v1[k1] * g;
        }
        val.re
    }
}

/// Real samples of a scalar field on a [`Grid`].
#[derive(Clone, Debug, PartialEq)]
pub struct PeriodicField {
    grid: Grid,
    values: Vec<f64>,
}

impl PeriodicField {
    pub fn new(grid: Grid, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(KmlError::input(format!(
                "field has {} samples, grid expects {}",
                values.len(),
                grid.len()
            )));
        }
        if let Some(idx) = values.iter().position(|x| !x.is_finite()) {
            return Err(KmlError::input(format!(
                "non-finite sample at grid index {idx}"
            )));
        }
        Ok(Self { grid, values })
    }

    pub(crate) fn from_parts(grid: Grid, values: Vec<f64>) -> Self {
        debug_assert_eq!(values.len(), grid.len());
        Self { grid, values }
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.values[i * self.grid.n2() + j]
    }

    pub fn is_finite(&self) -> bool {
        self.values.iter().all(|x| x.is_finite())
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> PeriodicField {
        PeriodicField {
            grid: self.grid.clone(),
            values: self.values.iter().map(|&x| f(x)).collect(),
        }
    }

    pub fn zip_map(&self, other: &PeriodicField, f: impl Fn(f64, f64) -> f64) -> PeriodicField {
        debug_assert!(self.grid == other.grid);
        PeriodicField {
            grid: self.grid.clone(),
            values: self
                .values
                .iter()
                .zip(&other.values)
                .map(|(&a, &b)| f(a, b))
                .collect(),
        }
    }

    pub fn min(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn max(&self) -> f64 {
        self.values
            .iter()
            .copied()
            .fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, x| m.max(x.abs()))
    }

    /// Index of the minimum sample (first occurrence).
    pub fn argmin(&self) -> usize {
        let mut best = 0;
        for (k, &x) in self.values.iter().enumerate() {
            if x < self.values[best] {
                best = k;
            }
        }
        best
    }

    pub fn sup_distance(&self, other: &PeriodicField) -> f64 {
        self.values
            .iter()
            .zip(&other.values)
            .fold(0.0, |m, (a, b)| m.max((a - b).abs()))
    }

    pub fn integrate(&self) -> f64 {
        self.grid.integrate(self)
    }
}

/// Covector field (v_1, v_2).
#[derive(Clone, Debug)]
pub struct Covector {
    pub d1: PeriodicField,
    pub d2: PeriodicField,
}

/// Symmetric 2-tensor field with components t_11, t_12, t_22.
#[derive(Clone, Debug)]
pub struct SymTensor {
    pub t11: PeriodicField,
    pub t12: PeriodicField,
    pub t22: PeriodicField,
}

impl SymTensor {
    #[inline]
    pub fn at(&self, idx: usize) -> [[f64; 2]; 2] {
        let a = self.t11.values[idx];
        let b = self.t12.values[idx];
        let d = self.t22.values[idx];
        [[a, b], [b, d]]
    }

    pub fn from_fn(grid: &Grid, f: impl Fn(usize) -> [[f64; 2]; 2]) -> SymTensor {
        let n = grid.len();
        let (mut a, mut b, mut d) = (vec![0.0; n], vec![0.0; n], vec![0.0; n]);
        for idx in 0..n {
            let m = f(idx);
            a[idx] = m[0][0];
            b[idx] = m[0][1];
            d[idx] = m[1][1];
        }
        SymTensor {
            t11: PeriodicField::from_parts(grid.clone(), a),
            t12: PeriodicField::from_parts(grid.clone(), b),
            t22: PeriodicField::from_parts(grid.clone(), d),
        }
    }
}

/// Compensated summation in iteration order.
pub fn neumaier_sum(xs: impl IntoIterator<Item = f64>) -> f64 {
    let mut sum = 0.0f64;
    let mut comp = 0.0f64;
    for x in xs {
        let t = sum + x;
        if sum.abs() >= x.abs() {
            comp += (sum - t) + x;
        } else {
            comp += (x - t) + sum;
        }
        sum = t;
    }
    sum + comp
}

#[cfg(test)]
mod tests {
    use super::*;

    fn unit_grid(n: usize) -> Grid {
        Grid::square(n, FlatTorus::identity()).unwrap()
    }

    #[test]
    fn interpolated_max_finds_off_grid_peak() {
        let g = Grid::square(16, FlatTorus::identity()).unwrap();
        let f = g.from_fn(|x, y| 0.3 * (x + 0.1).cos() + 0.2 * (y - 0.05).cos());
        assert!(f.max() < 0.5 - 1e-4);
        assert!((g.interpolated_max(&f) - 0.5).abs() < 1e-14);
        let ridge = g.from_fn(|x, y| 0.05 * (x + y).cos() + 0.02 * (x + y).sin());
        assert!((g.interpolated_max(&ridge) - 0.0029f64.sqrt()).abs() < 1e-14);
        let c = g.constant(2.0);
        assert_eq!(g.interpolated_max(&c), 2.0);
    }

    #[test]
    fn rejects_odd_and_degenerate_sizes() {
        assert!(Grid::new(15, 16, FlatTorus::identity()).is_err());
        assert!(Grid::new(16, 7, FlatTorus::identity()).is_err());
        assert!(Grid::new(0, 16, FlatTorus::identity()).is_err());
    }

    #[test]
    fn torus_rejects_indefinite_metric() {
        assert!(FlatTorus::new([[1.0, 2.0], [2.0, 1.0]]).is_err());
        assert!(FlatTorus::new([[1.0, 0.1], [0.2, 1.0]]).is_err());
        assert!(FlatTorus::new([[-1.0, 0.0], [0.0, -1.0]]).is_err());
        let t = FlatTorus::new([[2.0, 0.5], [0.5, 1.0]]).unwrap();
        assert!((t.area() - 4.0 * PI * PI * 1.75f64.sqrt()).abs() < 1e-12);
    }

    #[test]
    fn constant_has_zero_gradient() {
        let g = unit_grid(16);
        let v = g.constant(3.7);
        let grad = g.gradient(&v);
        assert!(grad.d1.max_abs() <= 1e-13);
        assert!(grad.d2.max_abs() <= 1e-13);
        let hess = g.hessian(&v);
        assert!(hess.t11.max_abs() <= 1e-13);
        assert!(hess.t12.max_abs() <= 1e-13);
        assert!(hess.t22.max_abs() <= 1e-13);
    }

    #[test]
    fn single_modes_are_exact() {
        let g = unit_grid(4);
        let grad = g.gradient(&g.from_fn(|x, _| x.sin()));
        let cos = g.from_fn(|x, _| x.cos());
        assert!(grad.d1.sup_distance(&cos) < 1e-14);
        assert!(grad.d2.max_abs() < 1e-14);

        let g = unit_grid(8);
        let hess = g.hessian(&g.from_fn(|_, y| y.cos()));
        assert!(hess.t22.sup_distance(&g.from_fn(|_, y| -y.cos())) < 1e-14);
        assert!(hess.t11.max_abs() < 1e-14);
        assert!(hess.t12.max_abs() < 1e-14);
    }

    #[test]
    fn mixed_mode_matches_analytic_partials() {
        let g = unit_grid(16);
        let v = g.from_fn(|x, y| (3.0 * x).sin() * (2.0 * y).cos());
        let (grad, hess) = g.jet2(&v);
        let e1 = g.from_fn(|x, y| 3.0 * (3.0 * x).cos() * (2.0 * y).cos());
        let e2 = g.from_fn(|x, y| -2.0 * (3.0 * x).sin() * (2.0 * y).sin());
        assert!(grad.d1.sup_distance(&e1) <= 1e-12);
        assert!(grad.d2.sup_distance(&e2) <= 1e-12);
        let h11 = g.from_fn(|x, y| -9.0 * (3.0 * x).sin() * (2.0 * y).cos());
        let h12 = g.from_fn(|x, y| -6.0 * (3.0 * x).cos() * (2.0 * y).sin());
        let h22 = g.from_fn(|x, y| -4.0 * (3.0 * x).sin() * (2.0 * y).cos());
        assert!(hess.t11.sup_distance(&h11) <= 1e-11);
        assert!(hess.t12.sup_distance(&h12) <= 1e-11);
        assert!(hess.t22.sup_distance(&h22) <= 1e-11);
    }

    #[test]
    fn nyquist_mode_has_zero_first_derivative() {
        let g = unit_grid(8);
        // cos(4x) is the Nyquist mode on n = 8
        let v = g.from_fn(|x, _| (4.0 * x).cos());
        let (grad, hess) = g.jet2(&v);
        assert!(grad.d1.max_abs() < 1e-13);
        assert!(hess.t11.sup_distance(&v.map(|c| -16.0 * c)) < 1e-12);
    }

    #[test]
    fn quadrature_examples() {
        let g = unit_grid(16);
        assert!((g.constant(1.0).integrate() - 4.0 * PI * PI).abs() < 1e-12);
        assert!(g.from_fn(|x, _| x.sin()).integrate().abs() < 1e-14);
        let d = g.from_fn(|x, y| 2.0 + (4.0 * x).cos() * (4.0 * y).cos());
        assert!((d.integrate() - 8.0 * PI * PI).abs() < 1e-12);
    }

    #[test]
    fn spectrum_pair_matches_single_transforms() {
        let g = Grid::new(8, 12, FlatTorus::identity()).unwrap();
        let a = g.from_fn(|x, y| (x + 2.0 * y).sin() + 0.3 * (3.0 * x).cos());
        let b = g.from_fn(|x, y| (2.0 * x - y).cos() * (0.5 * x.sin()).exp());
        let (sa, sb) = g.spectrum_pair(&a, &b);
        let (ra, rb) = (g.spectrum(&a), g.spectrum(&b));
        for (p, q) in sa.coeffs.iter().zip(&ra.coeffs) {
            assert!((p - q).norm() < 1e-12);
        }
        for (p, q) in sb.coeffs.iter().zip(&rb.coeffs) {
            assert!((p - q).norm() < 1e-12);
        }
    }

    #[test]
    fn divergence_of_gradient_is_laplacian() {
        let g = unit_grid(16);
        let v = g.from_fn(|x, y| (x + y).sin() + (2.0 * x).cos());
        let grad = g.gradient(&v);
        let lap = g.divergence(&grad.d1, &grad.d2);
        let exact = g.from_fn(|x, y| -2.0 * (x + y).sin() - 4.0 * (2.0 * x).cos());
        assert!(lap.sup_distance(&exact) < 1e-12);
    }

    #[test]
    fn interpolant_reproduces_band_limited_field() {
        let g = Grid::new(16, 8, FlatTorus::identity()).unwrap();
        let f = |x: f64, y: f64| (3.0 * x).sin() * (2.0 * y).cos() + 0.5 * (x - y).cos();
        let interp = g.spectrum(&g.from_fn(f)).interpolant();
        for &(x, y) in &[(0.3, 1.7), (4.0, 5.5), (6.1, 0.05)] {
            let (val, dx, dy) = interp.eval(&g.basis_at(x, y));
            assert!((val - f(x, y)).abs() < 1e-13);
            let ex = 3.0 * (3.0 * x).cos() * (2.0 * y).cos() - 0.5 * (x - y).sin();
            let ey = -2.0 * (3.0 * x).sin() * (2.0 * y).sin() + 0.5 * (x - y).sin();
            assert!((dx - ex).abs() < 1e-12);
            assert!((dy - ey).abs() < 1e-12);
        }
    }

    #[test]
    fn period_mapping_reproduces_physical_area() {
        let t = FlatTorus::from_periods(0.5, 3.0, 1.0, 7.0).unwrap();
        assert!((t.area() - 0.5f64.sqrt() * 21.0).abs() < 1e-12);
    }
}
