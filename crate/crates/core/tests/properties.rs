#![allow(clippy::needless_range_loop)]

use std::f64::consts::PI;

use proptest::prelude::*;

use kml_core::artifacts::{field_csv, read_field_csv};
use kml_core::extension::{solve_w, Barriers, ExtensionParams};
use kml_core::flow::{run_flow, FlowParams};
use kml_core::geometry::{admissibility_check, surface_geometry, GraphSurface};
use kml_core::geon::{geon_boundary_geometry, geon_static_mass, GeonConfig};
use kml_core::grid::{FlatTorus, Grid, PeriodicField};
use kml_core::mass::{monotonicity_violation, quasilocal_series, static_brown_york};
use kml_core::radial::{mass_integrand_diagnostic, solve_radial, RadialBoundary, Warp};

/// Sum of a·cos(k·θ) + b·sin(k·θ) terms.
#[derive(Clone, Debug)]
struct TrigPoly {
    mean: f64,
    terms: Vec<(i32, i32, f64, f64)>,
}

impl TrigPoly {
    fn eval(&self, x: f64, y: f64) -> f64 {
        self.mean
            + self
                .terms
                .iter()
                .map(|&(k1, k2, a, b)| {
                    let p = k1 as f64 * x + k2 as f64 * y;
                    a * p.cos() + b * p.sin()
                })
                .sum::<f64>()
    }

    fn d1(&self, x: f64, y: f64) -> f64 {
        self.terms
            .iter()
            .map(|&(k1, k2, a, b)| {
                let p = k1 as f64 * x + k2 as f64 * y;
                k1 as f64 * (b * p.cos() - a * p.sin())
            })
            .sum()
    }

    fn sample(&self, grid: &Grid) -> PeriodicField {
        grid.from_fn(|x, y| self.eval(x, y))
    }
}

fn trig_poly(max_k: i32, amp: f64) -> impl Strategy<Value = TrigPoly> {
    (
        -0.5..0.5f64,
        prop::collection::vec((-max_k..=max_k, -max_k..=max_k, -amp..amp, -amp..amp), 1..4),
    )
        .prop_map(|(mean, terms)| TrigPoly { mean, terms })
}

fn torus() -> impl Strategy<Value = FlatTorus> {
    (0.5..2.0f64, -0.3..0.3f64, 0.5..2.0f64)
        .prop_map(|(a, b, d)| FlatTorus::new([[a, b], [b, d]]).expect("positive definite"))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn constants_have_zero_derivatives(c in -10.0..10.0f64, t in torus()) {
        let grid = Grid::square(16, t).unwrap();
        let f = grid.constant(c);
        let g = grid.gradient(&f);
        let h = grid.hessian(&f);
        for x in [&g.d1, &g.d2, &h.t11, &h.t12, &h.t22] {
            prop_assert!(x.max_abs() <= 1e-13);
        }
    }

    #[test]
    fn derivatives_integrate_to_zero(p in trig_poly(6, 1.0)) {
        let grid = Grid::square(16, FlatTorus::identity()).unwrap();
        let g = grid.gradient(&p.sample(&grid));
        prop_assert!(grid.integrate(&g.d1).abs() <= 1e-12);
        prop_assert!(grid.integrate(&g.d2).abs() <= 1e-12);
    }

    #[test]
    fn spectral_derivatives_agree_under_refinement(p in trig_poly(5, 1.0)) {
        let coarse = Grid::square(16, FlatTorus::identity()).unwrap();
        let fine = Grid::square(32, FlatTorus::identity()).unwrap();
        let (gc, hc) = coarse.jet2(&p.sample(&coarse));
        let (gf, hf) = fine.jet2(&p.sample(&fine));
        for i in 0..16 {
            for j in 0..16 {
                let (x, y) = (2.0 * PI * i as f64 / 16.0, 2.0 * PI * j as f64 / 16.0);
                prop_assert!((gc.d1.get(i, j) - gf.d1.get(2 * i, 2 * j)).abs() <= 1e-12);
                prop_assert!((gc.d1.get(i, j) - p.d1(x, y)).abs() <= 1e-11);
                prop_assert!((hc.t12.get(i, j) - hf.t12.get(2 * i, 2 * j)).abs() <= 1e-11);
            }
        }
    }

    #[test]
    fn field_dumps_round_trip(p in trig_poly(4, 3.0)) {
        let grid = Grid::new(8, 6, FlatTorus::identity()).unwrap();
        let f = p.sample(&grid);
        let back = read_field_csv(&field_csv(&f).unwrap(), &grid).unwrap();
        prop_assert_eq!(back.values(), f.values());
    }

    #[test]
    fn surface_geometry_identities(p in trig_poly(2, 0.04), t in torus()) {
        let grid = Grid::square(32, t).unwrap();
        let v = p.sample(&grid);
        let geom = surface_geometry(&GraphSurface::new(v.clone())).unwrap();
        prop_assume!(admissibility_check(&geom).admissible());
        let det_sigma = t.sqrt_det().powi(2);
        for idx in 0..grid.len() {
            let g = geom.gamma.at(idx);
            let gi = geom.gamma_inv.at(idx);
            for a in 0..2 {
                for b in 0..2 {
                    let prod = g[a][0] * gi[0][b] + g[a][1] * gi[1][b];
                    let id = if a == b { 1.0 } else { 0.0 };
                    prop_assert!((prod - id).abs() <= 1e-12);
                }
            }
            let det = g[0][0] * g[1][1] - g[0][1] * g[1][0];
            let rho = geom.rho.values()[idx];
            let expected = rho * rho * (4.0 * v.values()[idx]).exp() * det_sigma;
            prop_assert!((det - expected).abs() <= 1e-12 * expected);
            let (l1, l2) = geom.principal_curvatures(idx);
            prop_assert!((l1 * l2 - geom.gauss_curvature.values()[idx] - 1.0).abs() <= 1e-8);
        }
        prop_assert!(geom.area_density.min() > 0.0);
        prop_assert!(geom.area() >= t.area() * (2.0 * v.min()).exp() * (1.0 - 1e-12));
        prop_assert!(geom.gauss_identity_residual().max_abs() <= 1e-8);
    }

    #[test]
    fn brown_york_is_linear_in_the_curvature_difference(p in trig_poly(2, 0.05), q in trig_poly(3, 0.1)) {
        let grid = Grid::square(16, FlatTorus::identity()).unwrap();
        let geom = surface_geometry(&GraphSurface::new(p.sample(&grid))).unwrap();
        let d = q.sample(&grid).map(|x| 0.1 * x);
        let h = &geom.mean_curvature;
        let once = static_brown_york(&geom, &h.zip_map(&d, |h, d| h - d)).unwrap();
        let twice = static_brown_york(&geom, &h.zip_map(&d, |h, d| h - 2.0 * d)).unwrap();
        prop_assert!((twice - 2.0 * once).abs() <= 1e-13 * (1.0 + once.abs()));
        prop_assert!(static_brown_york(&geom, h).unwrap().abs() <= 1e-14);
    }

    #[test]
    fn barriers_bracket_initial_data(p in trig_poly(3, 0.3)) {
        let grid = Grid::square(8, FlatTorus::identity()).unwrap();
        let w0 = p.sample(&grid).map(|x| 1.0 + 0.9 * x.tanh());
        let b = Barriers::from_initial(&w0);
        let lo = Barriers::profile(b.c_lower, 0.0);
        let hi = Barriers::profile(b.c_upper, 0.0);
        prop_assert!((lo - w0.min()).abs() <= 1e-14);
        prop_assert!(w0.max() < hi);
        prop_assert!(b.c_lower > -1.0 && b.c_upper > -1.0 && b.c_upper <= 0.0);
    }

    #[test]
    fn geon_outer_boundary(r_h in 1.0..3.0f64, ratio in 1.5..50.0f64) {
        let cfg = GeonConfig::new(r_h, r_h * ratio, 4.0 * PI / 3.0, 2.0 * PI).unwrap();
        prop_assert!(geon_boundary_geometry(&cfg).unwrap().h_outer > 2.0);
        prop_assert!(geon_static_mass(&cfg).unwrap().m_exact < 0.0);
    }

    #[test]
    fn radial_integrand_is_nonnegative(amp in 0.0..0.3f64, freq in 0.5..3.0f64, s1 in 1.0..8.0f64) {
        let warp = Warp::Perturbed { amplitude: amp, frequency: freq };
        let bc = RadialBoundary { value_inner: 1.0, slope_outer: 1.0 };
        let sol = solve_radial(warp, 0.0, s1, bc, 64).unwrap();
        prop_assert!(sol.du.iter().all(|&d| d > 0.0));
        prop_assert!(sol.u.windows(2).all(|w| w[1] > w[0]));
        prop_assert!(mass_integrand_diagnostic(&sol).iter().all(|&x| x >= 0.0));
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(6))]

    #[test]
    fn lapse_evolution_is_bracketed_and_monotone(p in trig_poly(1, 0.05), scale in 0.8..1.25f64) {
        let grid = Grid::square(8, FlatTorus::identity()).unwrap();
        let surface = GraphSurface::new(p.sample(&grid));
        let geom = surface_geometry(&surface).unwrap();
        prop_assume!(admissibility_check(&geom).admissible());
        let params = FlowParams { t_max: 2.0, dt: 2e-3, snapshot_stride: 25 };
        let flow = run_flow(&surface, params).unwrap();
        let w0 = grid.constant(scale);
        let ext = solve_w(&flow, &w0, ExtensionParams::default()).unwrap();
        prop_assert!(ext.worst_barrier_margin() >= -1e-8);
        let series = quasilocal_series(&ext).unwrap();
        prop_assert!(monotonicity_violation(&series) <= 1e-8 * (1.0 + series[0].1.abs()));

        let unit = solve_w(&flow, &grid.constant(1.0), ExtensionParams::default()).unwrap();
        for k in 0..unit.len() {
            prop_assert!(unit.w(k).map(|w| w - 1.0).max_abs() <= 1e-12);
        }
    }
}
