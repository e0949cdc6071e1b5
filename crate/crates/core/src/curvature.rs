//! Pointwise Riemannian curvature of a 3-metric from its coordinate
//! components and their first and second partial derivatives.

/// Derivative data at one point: g_ab, ∂_d g_ab, ∂_d∂_e g_ab.
pub(crate) struct MetricJet {
    pub g: [[f64; 3]; 3],
    pub dg: [[[f64; 3]; 3]; 3],
    pub ddg: [[[[f64; 3]; 3]; 3]; 3],
}

pub(crate) struct PointCurvature {
    pub inverse: [[f64; 3]; 3],
    /// Γ^c_ab
    pub christoffel: [[[f64; 3]; 3]; 3],
    pub ricci: [[f64; 3]; 3],
    pub scalar: f64,
}

pub(crate) fn inv3(m: [[f64; 3]; 3]) -> Option<[[f64; 3]; 3]> {
    let c00 = m[1][1] * m[2][2] - m[1][2] * m[2][1];
    let c01 = m[1][2] * m[2][0] - m[1][0] * m[2][2];
    let c02 = m[1][0] * m[2][1] - m[1][1] * m[2][0];
    let det = m[0][0] * c00 + m[0][1] * c01 + m[0][2] * c02;
    if det == 0.0 || !det.is_finite() {
        return None;
    }
    let d = 1.0 / det;
    Some([
        [
            c00 * d,
            (m[0][2] * m[2][1] - m[0][1] * m[2][2]) * d,
            (m[0][1] * m[1][2] - m[0][2] * m[1][1]) * d,
        ],
        [
            c01 * d,
            (m[0][0] * m[2][2] - m[0][2] * m[2][0]) * d,
            (m[0][2] * m[1][0] - m[0][0] * m[1][2]) * d,
        ],
        [
            c02 * d,
            (m[0][1] * m[2][0] - m[0][0] * m[2][1]) * d,
            (m[0][0] * m[1][1] - m[0][1] * m[1][0]) * d,
        ],
    ])
}

pub(crate) fn curvature(jet: &MetricJet) -> Option<PointCurvature> {
    let MetricJet { g, dg, ddg } = jet;
    let gi = inv3(*g)?;
    // Γ_{c,ab} = ½(∂_a g_cb + ∂_b g_ca − ∂_c g_ab)
    let mut low = [[[0.0; 3]; 3]; 3];
    for c in 0..3 {
        for a in 0..3 {
            for b in 0..3 {
                low[c][a][b] = 0.5 * (dg[a][c][b] + dg[b][c][a] - dg[c][a][b]);
            }
        }
    }
    let mut gam = [[[0.0; 3]; 3]; 3];
    for c in 0..3 {
        for a in 0..3 {
            for b in 0..3 {
                gam[c][a][b] = (0..3).map(|e| gi[c][e] * low[e][a][b]).sum();
            }
        }
    }
    // ∂_d Γ^c_ab = g^{ce}(∂_d Γ_{e,ab} − ∂_d g_{ef} Γ^f_ab)
    let dgam = |d: usize, c: usize, a: usize, b: usize| -> f64 {
        let mut s = 0.0;
        for e in 0..3 {
            let dlow = 0.5 * (ddg[d][a][e][b] + ddg[d][b][e][a] - ddg[d][e][a][b]);
            let corr: f64 = (0..3).map(|f| dg[d][e][f] * gam[f][a][b]).sum();
            s += gi[c][e] * (dlow - corr);
        }
        s
    };
    let mut ricci = [[0.0; 3]; 3];
    for a in 0..3 {
        for b in a..3 {
            let mut r = 0.0;
            for c in 0..3 {
                r += dgam(c, c, a, b) - dgam(b, c, a, c);
                for d in 0..3 {
                    r += gam[c][c][d] * gam[d][a][b] - gam[c][b][d] * gam[d][a][c];
                }
            }
            ricci[a][b] = r;
            ricci[b][a] = r;
        }
    }
    let mut scalar = 0.0;
    for a in 0..3 {
        for b in 0..3 {
            scalar += gi[a][b] * ricci[a][b];
        }
    }
    Some(PointCurvature {
        inverse: gi,
        christoffel: gam,
        ricci,
        scalar,
    })
}
