use kml_core::extension::{extract_w_infinity, solve_w, ExtensionParams};
use kml_core::flow::{extract_f, run_flow, FlowParams};
use kml_core::geometry::{surface_geometry, GraphSurface};
use kml_core::grid::{FlatTorus, Grid};
use kml_core::mass::{mass_aspect_from_expansion, total_mass_from_w_infinity, RadialSample};

/// A flat-flow extension w²dt² + e^{2t}σ rewritten with dr = w dt and
/// r − t → 0 has its mass aspect in the e^{−r} term of e^{2t(r)}σ.
#[test]
fn expansion_fit_matches_total_mass_on_flat_flow() {
    let torus = FlatTorus::new([[1.0, 0.2], [0.2, 1.5]]).unwrap();
    let grid = Grid::square(8, torus).unwrap();
    let params = FlowParams {
        t_max: 8.0,
        dt: 1e-3,
        snapshot_stride: 10,
    };
    let flow = run_flow(&GraphSurface::new(grid.constant(0.0)), params).unwrap();
    let ext = solve_w(&flow, &grid.constant(2.0), ExtensionParams::default()).unwrap();
    let f = extract_f(&flow).unwrap();
    let w_inf = extract_w_infinity(&ext, &f.f).unwrap();
    let m_total = total_mass_from_w_infinity(&w_inf.w_inf);

    // ∫_t^∞ (w − 1): composite Simpson over snapshots plus the e^{−3t} tail
    let times = ext.times();
    let excess: Vec<f64> = (0..ext.len()).map(|k| ext.w(k).values()[0] - 1.0).collect();
    let last = ext.len() - 1;
    let tail_beyond = excess[last] / 3.0;
    let h = times[1] - times[0];
    let r_of = |k: usize| {
        let mut integral = tail_beyond;
        let mut j = k;
        while j + 2 <= last {
            integral += h / 3.0 * (excess[j] + 4.0 * excess[j + 1] + excess[j + 2]);
            j += 2;
        }
        if j < last {
            integral += 0.5 * h * (excess[j] + excess[last]);
        }
        times[k] - integral
    };

    let samples: Vec<RadialSample> = [6.0, 7.0, 8.0]
        .iter()
        .map(|&t| {
            let k = flow.index_near(t);
            let gamma = surface_geometry(&GraphSurface::new(ext.v(k)))
                .unwrap()
                .gamma;
            RadialSample {
                r: r_of(k),
                g11: gamma.t11,
                g12: gamma.t12,
                g22: gamma.t22,
            }
        })
        .collect();
    let fit = mass_aspect_from_expansion(&samples).unwrap();
    assert!(
        (fit.mass - m_total).abs() <= 1e-4,
        "fit {} vs w_inf mass {m_total}",
        fit.mass
    );
    let closed = 0.375 * torus.area() / (4.0 * std::f64::consts::PI);
    assert!((m_total - closed).abs() <= 1e-8 * closed);
}
