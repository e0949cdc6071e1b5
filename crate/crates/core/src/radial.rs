//! Radially symmetric solutions of Δu = 3|∇u| on warped products
//! ds² + e^{2A(s)}σ.
//!
//! For u = u(s) the equation reads u″ + 2A′u′ = 3|u′|. On the increasing
//! branch it is linear in u′, and u′(s) = u′(s₀)·exp(3(s−s₀) − 2(A(s)−A(s₀)))
//! exactly; u itself follows by Gauss–Legendre quadrature of u′.

use serde::{Deserialize, Serialize};

use crate::error::{KmlError, Result};

/// Warping function A(s) of the metric ds² + e^{2A(s)}σ.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Warp {
    /// A(s) = s
    Kottler,
    /// A(s) = slope·s
    Linear { slope: f64 },
    /// A(s) = s + amplitude·sin(frequency·s)
    Perturbed { amplitude: f64, frequency: f64 },
}

impl Warp {
    pub fn value(&self, s: f64) -> f64 {
        match *self {
            Warp::Kottler => s,
            Warp::Linear { slope } => slope * s,
            Warp::Perturbed {
                amplitude,
                frequency,
            } => s + amplitude * (frequency * s).sin(),
        }
    }

    pub fn derivative(&self, s: f64) -> f64 {
        match *self {
            Warp::Kottler => 1.0,
            Warp::Linear { slope } => slope,
            Warp::Perturbed {
                amplitude,
                frequency,
            } => 1.0 + amplitude * frequency * (frequency * s).cos(),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RadialBoundary {
    /// u(s₀)
    pub value_inner: f64,
    /// prescribed u′(s₁)
    pub slope_outer: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RadialSolution {
    pub warp: Warp,
    pub s: Vec<f64>,
    pub u: Vec<f64>,
    pub du: Vec<f64>,
    /// A(s) samples
    pub a: Vec<f64>,
}

// 8-point Gauss–Legendre nodes and weights on [−1, 1]
const GL_NODES: [f64; 8] = [
    -0.960_289_856_497_536_3,
    -0.796_666_477_413_626_7,
    -0.525_532_409_916_329_0,
    -0.183_434_642_495_649_8,
    0.183_434_642_495_649_8,
    0.525_532_409_916_329_0,
    0.796_666_477_413_626_7,
    0.960_289_856_497_536_3,
];
const GL_WEIGHTS: [f64; 8] = [
    0.101_228_536_290_376_3,
    0.222_381_034_453_374_5,
    0.313_706_645_877_887_3,
    0.362_683_783_378_362_0,
    0.362_683_783_378_362_0,
    0.313_706_645_877_887_3,
    0.222_381_034_453_374_5,
    0.101_228_536_290_376_3,
];

/// Solve the radial equation on `samples` uniform points of [s0, s1].
pub fn solve_radial(
    warp: Warp,
    s0: f64,
    s1: f64,
    bc: RadialBoundary,
    samples: usize,
) -> Result<RadialSolution> {
    if !(s1 > s0) || !s0.is_finite() || !s1.is_finite() {
        return Err(KmlError::input(format!("need s0 < s1, got [{s0}, {s1}]")));
    }
    if samples < 2 {
        return Err(KmlError::input("need at least 2 samples"));
    }
    let exponent = |s: f64| 3.0 * (s - s0) - 2.0 * (warp.value(s) - warp.value(s0));
    let du0 = bc.slope_outer * (-exponent(s1)).exp();
    if !(du0 > 0.0) || !du0.is_finite() {
        return Err(KmlError::solver(format!(
            "radial solution leaves the increasing branch (u'(s0) = {du0:e}); \
             only monotone solutions are supported"
        )));
    }
    let slope = |s: f64| du0 * exponent(s).exp();
    let h = (s1 - s0) / (samples - 1) as f64;
    let s: Vec<f64> = (0..samples)
        .map(|i| {
            if i + 1 == samples {
                s1
            } else {
                s0 + i as f64 * h
            }
        })
        .collect();
    let mut u = Vec::with_capacity(samples);
    u.push(bc.value_inner);
    for w in s.windows(2) {
        let (a, b) = (w[0], w[1]);
        let (mid, half) = (0.5 * (a + b), 0.5 * (b - a));
        let inc: f64 = GL_NODES
            .iter()
            .zip(GL_WEIGHTS)
            .map(|(x, wt)| wt * slope(mid + half * x))
            .sum::<f64>()
            * half;
        u.push(u.last().expect("seeded") + inc);
    }
    let du: Vec<f64> = s.iter().map(|&x| slope(x)).collect();
    if let Some(i) = du.iter().position(|d| !(*d > 0.0) || !d.is_finite()) {
        return Err(KmlError::solver(format!(
            "u' loses positivity at s = {}: radial monotone ansatz breaks",
            s[i]
        )));
    }
    Ok(RadialSolution {
        warp,
        a: s.iter().map(|&x| warp.value(x)).collect(),
        s,
        u,
        du,
    })
}

/// 𝒞 = 4·u′(s₀) with the inner normal +∂_s.
pub fn penrose_constant(sol: &RadialSolution) -> Result<f64> {
    let d = sol.du[0];
    if !(d > 0.0) {
        return Err(KmlError::solver(format!("u'(s0) = {d} is not positive")));
    }
    Ok(4.0 * d)
}

/// |∇²u − |∇u|g|²_g / |∇u| along s, which vanishes on the Kottler model with
/// u = e^s. In an orthonormal frame ∇²u = diag(u″, A′u′, A′u′).
pub fn mass_integrand_diagnostic(sol: &RadialSolution) -> Vec<f64> {
    sol.s
        .iter()
        .zip(&sol.du)
        .map(|(&s, &d)| {
            let d2 = d * (3.0 - 2.0 * sol.warp.derivative(s));
            let ang = sol.warp.derivative(s) * d - d;
            ((d2 - d).powi(2) + 2.0 * ang * ang) / d
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn kottler_recovers_exponential() {
        let (s0, s1): (f64, f64) = (0.0, 6.0);
        let bc = RadialBoundary {
            value_inner: 1.0,
            slope_outer: s1.exp(),
        };
        let sol = solve_radial(Warp::Kottler, s0, s1, bc, 121).unwrap();
        for (s, u) in sol.s.iter().zip(&sol.u) {
            assert!((u - s.exp()).abs() <= 1e-10 * s.exp(), "{s}: {u}");
        }
        assert!((penrose_constant(&sol).unwrap() - 4.0).abs() < 1e-12);
        assert!(mass_integrand_diagnostic(&sol)
            .iter()
            .all(|x| x.abs() <= 1e-10));
    }

    #[test]
    fn shifted_inner_boundary() {
        let s0 = 2f64.ln();
        let bc = RadialBoundary {
            value_inner: 2.0,
            slope_outer: 4f64.exp(),
        };
        let sol = solve_radial(Warp::Kottler, s0, 4.0, bc, 50).unwrap();
        assert!((penrose_constant(&sol).unwrap() - 8.0).abs() < 1e-12);
    }

    #[test]
    fn critical_warp_gives_linear_solution() {
        let bc = RadialBoundary {
            value_inner: 0.5,
            slope_outer: 1.0,
        };
        let sol = solve_radial(Warp::Linear { slope: 1.5 }, 0.0, 3.0, bc, 31).unwrap();
        for (s, u) in sol.s.iter().zip(&sol.u) {
            assert!((u - (0.5 + s)).abs() < 1e-13);
        }
        assert!((penrose_constant(&sol).unwrap() - 4.0).abs() < 1e-14);
        assert!(mass_integrand_diagnostic(&sol).iter().all(|&x| x > 0.0));
    }

    #[test]
    fn non_monotone_boundary_data_is_rejected() {
        let bc = RadialBoundary {
            value_inner: 1.0,
            slope_outer: -1.0,
        };
        assert!(matches!(
            solve_radial(Warp::Kottler, 0.0, 1.0, bc, 10),
            Err(KmlError::Solver(_))
        ));
        let bc = RadialBoundary {
            value_inner: 1.0,
            slope_outer: 1.0,
        };
        assert!(solve_radial(Warp::Kottler, 1.0, 0.0, bc, 10).is_err());
    }

    #[test]
    fn normalized_kottler_solution_converges_against_exponential() {
        let s1: f64 = 12.0;
        let bc = RadialBoundary {
            value_inner: 1.0,
            slope_outer: s1.exp(),
        };
        let sol = solve_radial(Warp::Kottler, 0.0, s1, bc, 121).unwrap();
        let n = sol.s.len();
        let k = sol
            .s
            .iter()
            .position(|&s| (s - (s1 - 1.0)).abs() < 1e-9)
            .unwrap();
        let diff = (sol.u[n - 1] * (-s1).exp() - sol.u[k] * (-(s1 - 1.0)).exp()).abs();
        assert!(diff <= 1e-8, "{diff}");
    }
}
