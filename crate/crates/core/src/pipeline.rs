//! End-to-end run: admissibility, flow, lapse extension with w₀ = H₀/H_phys,
//! masses and the boundary inequality, plus the artifacts of a run.

use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::artifacts::{field_csv, fmt_f64, read_field_csv, sha256_hex, table_csv, ArtifactWriter};
use crate::error::{KmlError, Result};
use crate::extension::{
    assemble_g_plus, extract_w_infinity, scalar_curvature_profile, solve_w, Barriers,
    ExtensionParams, ExtensionTrajectory, WInfinity,
};
use crate::flow::{
    decay_report, extract_f, height_barrier_violation, run_flow, DecayReport, FLimit, FlowParams,
    FlowTrajectory,
};
use crate::geometry::{
    admissibility_check, surface_geometry, AdmissibilityReport, GraphSurface, SurfaceGeometry,
};
use crate::grid::{FlatTorus, Grid, PeriodicField};
use crate::mass::{
    monotonicity_violation, quasilocal_series, shi_tam_inequality_report, static_brown_york,
    total_mass_from_w_infinity, MassReport,
};

pub const SCHEMA_VERSION: u32 = 1;

/// Forward increments of 𝔪 above this multiple of 1 + |𝔪(0)| count as a violation.
pub const MONOTONICITY_TOL: f64 = 1e-8;
pub const GAP_TOL: f64 = 1e-6;

fn default_schema() -> u32 {
    SCHEMA_VERSION
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum TorusSpec {
    /// σ_ij directly, with 2π coordinate periods
    Sigma([[f64; 2]; 2]),
    /// c1 dx² + c2 dy² with physical periods p1, p2
    Periods { c1: f64, p1: f64, c2: f64, p2: f64 },
}

impl TorusSpec {
    pub fn build(&self) -> Result<FlatTorus> {
        match *self {
            TorusSpec::Sigma(s) => FlatTorus::new(s),
            TorusSpec::Periods { c1, p1, c2, p2 } => {
                if !(c1 > 0.0 && c2 > 0.0 && p1 > 0.0 && p2 > 0.0) {
                    return Err(KmlError::input(
                        "torus periods and coefficients must be positive",
                    ));
                }
                FlatTorus::from_periods(c1, p1, c2, p2)
            }
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSpec {
    pub n1: usize,
    pub n2: usize,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FourierTerm {
    pub k1: i64,
    pub k2: i64,
    #[serde(default)]
    pub cos: f64,
    #[serde(default)]
    pub sin: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FourierSpec {
    #[serde(default)]
    pub mean: f64,
    #[serde(default)]
    pub terms: Vec<FourierTerm>,
}

/// A scalar field on the grid.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum FieldSpec {
    Constant(f64),
    /// mean + Σ cos·cos(k1θ¹ + k2θ²) + sin·sin(k1θ¹ + k2θ²)
    Fourier(FourierSpec),
    /// field dump (theta1,theta2,value), relative to the config file
    File(PathBuf),
}

impl FieldSpec {
    pub fn validate(&self, grid: &GridSpec) -> Result<()> {
        match self {
            FieldSpec::Constant(c) if !c.is_finite() => {
                Err(KmlError::input("constant field is not finite"))
            }
            FieldSpec::Fourier(f) => {
                for t in &f.terms {
                    if 2 * t.k1.unsigned_abs() as usize >= grid.n1
                        || 2 * t.k2.unsigned_abs() as usize >= grid.n2
                    {
                        return Err(KmlError::input(format!(
                            "Fourier mode ({}, {}) is not below the Nyquist limit of a {}x{} grid",
                            t.k1, t.k2, grid.n1, grid.n2
                        )));
                    }
                    if !(t.cos.is_finite() && t.sin.is_finite()) {
                        return Err(KmlError::input("Fourier coefficient is not finite"));
                    }
                }
                Ok(())
            }
            _ => Ok(()),
        }
    }

    pub fn sample(&self, grid: &Grid, base_dir: &Path) -> Result<PeriodicField> {
        match self {
            FieldSpec::Constant(c) => Ok(grid.constant(*c)),
            FieldSpec::Fourier(f) => Ok(grid.from_fn(|x, y| {
                f.terms.iter().fold(f.mean, |acc, t| {
                    let phase = t.k1 as f64 * x + t.k2 as f64 * y;
                    acc + t.cos * phase.cos() + t.sin * phase.sin()
                })
            })),
            FieldSpec::File(p) => {
                let path = base_dir.join(p);
                let bytes = std::fs::read(&path).map_err(|e| {
                    KmlError::input(format!("cannot read field file {}: {e}", path.display()))
                })?;
                read_field_csv(&bytes, grid)
            }
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ReferenceTag {
    Reference,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ReferenceScale {
    pub reference_scale: f64,
}

/// Physical mean curvature: a field, "reference" (H_phys = H₀), or
/// {"reference_scale": s} (H_phys = s·H₀).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum HPhysSpec {
    Reference(ReferenceTag),
    Scaled(ReferenceScale),
    Field(FieldSpec),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PipelineConfig {
    #[serde(default = "default_schema")]
    pub schema_version: u32,
    pub torus: TorusSpec,
    pub grid: GridSpec,
    pub v: FieldSpec,
    pub h_phys: HPhysSpec,
    #[serde(default)]
    pub flow: FlowParams,
    #[serde(default)]
    pub extension: ExtensionParams,
}

impl PipelineConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: Self = serde_json::from_str(text)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if self.schema_version != SCHEMA_VERSION {
            return Err(KmlError::input(format!(
                "unsupported schema_version {}, expected {SCHEMA_VERSION}",
                self.schema_version
            )));
        }
        self.torus.build()?;
        Grid::new(self.grid.n1, self.grid.n2, FlatTorus::identity())?;
        self.v.validate(&self.grid)?;
        match &self.h_phys {
            HPhysSpec::Field(f) => f.validate(&self.grid)?,
            HPhysSpec::Scaled(s) if !(s.reference_scale > 0.0 && s.reference_scale.is_finite()) => {
                return Err(KmlError::input("reference_scale must be positive"));
            }
            _ => {}
        }
        self.flow.validate()?;
        self.extension.validate()
    }

    /// Compact JSON of the parsed config; field order is fixed by the types.
    pub fn canonical_json(&self) -> Result<String> {
        Ok(serde_json::to_string(self)?)
    }

    pub fn hash(&self) -> Result<String> {
        Ok(sha256_hex(self.canonical_json()?.as_bytes()))
    }
}

/// Everything computed by one run.
pub struct PipelineRun {
    pub config: PipelineConfig,
    pub grid: Grid,
    pub v0: PeriodicField,
    pub h_phys: PeriodicField,
    pub w0: PeriodicField,
    pub geometry: SurfaceGeometry,
    pub admissibility: AdmissibilityReport,
    pub flow: FlowTrajectory,
    pub extension: ExtensionTrajectory,
    pub f: FLimit,
    pub w_inf: WInfinity,
    pub series: Vec<(f64, f64)>,
    pub mass: MassReport,
    pub decay: DecayReport,
    /// per-slice max |R(g₊) + 6| on interior slices
    pub curvature: Vec<(f64, f64)>,
    pub violations: Vec<String>,
}

/// Run the full pipeline. Relative field files resolve against `base_dir`.
pub fn run_pipeline(config: &PipelineConfig, base_dir: &Path) -> Result<PipelineRun> {
    config.validate()?;
    let torus = config.torus.build()?;
    let grid = Grid::new(config.grid.n1, config.grid.n2, torus)?;
    let v0 = config.v.sample(&grid, base_dir)?;
    if !v0.is_finite() {
        return Err(KmlError::input("v has non-finite samples"));
    }
    let surface = GraphSurface::new(v0.clone());
    let geometry = surface_geometry(&surface)?;
    let admissibility = admissibility_check(&geometry);
    if let Some(msg) = admissibility.violation() {
        return Err(KmlError::hypothesis(msg));
    }
    let h_phys = match &config.h_phys {
        HPhysSpec::Reference(_) => geometry.mean_curvature.clone(),
        HPhysSpec::Scaled(s) => geometry.mean_curvature.map(|h| s.reference_scale * h),
        HPhysSpec::Field(f) => f.sample(&grid, base_dir)?,
    };
    if !(h_phys.min() > 0.0) || !h_phys.is_finite() {
        let k = h_phys.argmin();
        return Err(KmlError::hypothesis(format!(
            "H_phys > 0 fails at grid point ({},{})",
            k / grid.n2(),
            k % grid.n2()
        )));
    }
    let w0 = geometry.mean_curvature.zip_map(&h_phys, |h0, h| h0 / h);
    let m_by_static = static_brown_york(&geometry, &h_phys)?;

    let flow = run_flow(&surface, config.flow)?;
    let extension = solve_w(&flow, &w0, config.extension)?;
    let f = extract_f(&flow)?;
    let w_inf = extract_w_infinity(&extension, &f.f)?;
    let m_total = total_mass_from_w_infinity(&w_inf.w_inf);
    let series = quasilocal_series(&extension)?;
    let gap = shi_tam_inequality_report(&geometry, &h_phys, &w0, m_total)?;
    let mono = monotonicity_violation(&series);
    let decay = decay_report(&flow);
    let curvature = curvature_profile(&extension)?;

    let m0 = series[0].1;
    let mut violations = Vec::new();
    if mono > MONOTONICITY_TOL * (1.0 + m0.abs()) {
        violations.push(format!(
            "quasi-local mass series increases by {mono:.3e} (tolerance {:.3e})",
            MONOTONICITY_TOL * (1.0 + m0.abs())
        ));
    }
    if gap < -GAP_TOL {
        violations.push(format!(
            "boundary inequality gap {gap:.3e} is below -{GAP_TOL:e}"
        ));
    }
    let height = height_barrier_violation(&flow);
    if height > 1e-10 {
        violations.push(format!("graph height leaves its barriers by {height:.3e}"));
    }

    let mass = MassReport {
        m_by_static,
        m_total,
        m_total_error_estimate: w_inf.error_estimate * grid.torus().area() / (4.0 * PI),
        final_series_value: series.last().expect("non-empty").1,
        gap,
        monotonicity_violation: mono,
        series_path: "series.csv".to_string(),
    };
    Ok(PipelineRun {
        config: config.clone(),
        grid,
        v0,
        h_phys,
        w0,
        geometry,
        admissibility,
        flow,
        extension,
        f,
        w_inf,
        series,
        mass,
        decay,
        curvature,
        violations,
    })
}

/// R + 6 profile over the uniformly spaced snapshots; a shorter final
/// snapshot interval is left out.
fn curvature_profile(ext: &ExtensionTrajectory) -> Result<Vec<(f64, f64)>> {
    let mut slices = assemble_g_plus(ext).slices;
    let n = slices.len();
    if n >= 3 {
        let h = slices[1].t - slices[0].t;
        let last = slices[n - 1].t - slices[n - 2].t;
        if (last - h).abs() > 1e-9 * h {
            slices.pop();
        }
    }
    if slices.len() < 5 {
        return Ok(Vec::new());
    }
    scalar_curvature_profile(&slices)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FlowSummary {
    pub f_tail_difference: f64,
    pub f_richardson_correction: f64,
    pub f_warning: Option<String>,
    pub decay: DecayReport,
    pub height_barrier_violation: f64,
    pub snapshots: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExtensionSummary {
    pub barriers: Barriers,
    pub worst_barrier_margin: f64,
    /// C₀ in |w − 1| ≤ C₀e^{−3t}
    pub decay_constant: f64,
    pub w_inf_error_estimate: f64,
    pub w_inf_warning: Option<String>,
    pub curvature_residual_max: Option<f64>,
    pub curvature_t_grid: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub schema_version: u32,
    pub config: PipelineConfig,
    /// hypotheses on the interior region that the run cannot check
    pub obligations: Vec<String>,
    pub admissibility: AdmissibilityReport,
    pub gauss_identity_residual: f64,
    pub mass: MassReport,
    pub series_initial: f64,
    pub flow: FlowSummary,
    pub extension: ExtensionSummary,
    pub violations: Vec<String>,
    /// keys written by other versions of the tool, kept verbatim
    #[serde(flatten)]
    pub extra: BTreeMap<String, serde_json::Value>,
}

pub const OBLIGATIONS: [&str; 3] = [
    "the interior region satisfies the homotopy condition relative to its outer boundary",
    "the second homology of the interior region relative to its boundary vanishes as required",
    "each inner boundary component has mean curvature at most 2 with respect to the inner normal",
];

impl PipelineRun {
    pub fn report(&self) -> RunReport {
        let snaps = self.extension.snapshots();
        let t_grid = (snaps.len() > 1).then(|| snaps[1].t - snaps[0].t);
        RunReport {
            schema_version: SCHEMA_VERSION,
            config: self.config.clone(),
            obligations: OBLIGATIONS.iter().map(|s| s.to_string()).collect(),
            admissibility: self.admissibility.clone(),
            gauss_identity_residual: self.geometry.gauss_identity_residual().max_abs(),
            mass: self.mass.clone(),
            series_initial: self.series[0].1,
            flow: FlowSummary {
                f_tail_difference: self.f.tail_difference,
                f_richardson_correction: self.f.richardson_correction,
                f_warning: self.f.warning.clone(),
                decay: self.decay,
                height_barrier_violation: height_barrier_violation(&self.flow),
                snapshots: self.flow.len(),
            },
            extension: ExtensionSummary {
                barriers: self.extension.barriers(),
                worst_barrier_margin: self.extension.worst_barrier_margin(),
                decay_constant: self.extension.barrier_decay_constant(),
                w_inf_error_estimate: self.w_inf.error_estimate,
                w_inf_warning: self.w_inf.warning.clone(),
                curvature_residual_max: self.curvature.iter().map(|c| c.1).reduce(f64::max),
                curvature_t_grid: t_grid,
            },
            violations: self.violations.clone(),
            extra: BTreeMap::new(),
        }
    }

    /// Write report.json, the CSV series and the field dumps into `out`.
    /// The manifest is left to the caller.
    pub fn write_artifacts(&self, out: &mut ArtifactWriter) -> Result<()> {
        out.put_json("report.json", &self.report())?;

        let rows: Vec<Vec<String>> = self
            .series
            .iter()
            .map(|(t, m)| vec![fmt_f64(*t), fmt_f64(*m)])
            .collect();
        out.put("series.csv", &table_csv(&SERIES_HEADER, &rows)?)?;

        let rows: Vec<Vec<String>> = self
            .flow
            .diagnostics()
            .iter()
            .map(|d| {
                vec![
                    fmt_f64(d.t),
                    fmt_f64(d.rho_sq_minus_one),
                    fmt_f64(d.umbilic_deviation),
                    fmt_f64(d.v_min),
                    fmt_f64(d.v_max),
                    fmt_f64(d.min_principal_curvature),
                    fmt_f64(d.jacobian_min),
                    fmt_f64(d.jacobian_max),
                ]
            })
            .collect();
        out.put("flow.csv", &table_csv(&FLOW_HEADER, &rows)?)?;

        let rows: Vec<Vec<String>> = self
            .extension
            .snapshots()
            .iter()
            .map(|s| {
                let r = self
                    .curvature
                    .iter()
                    .find(|c| c.0 == s.t)
                    .map(|c| fmt_f64(c.1))
                    .unwrap_or_default();
                vec![
                    fmt_f64(s.t),
                    fmt_f64(s.w_min),
                    fmt_f64(s.w_max),
                    fmt_f64(s.barrier_lo),
                    fmt_f64(s.barrier_hi),
                    fmt_f64(s.z_max_abs),
                    s.substeps.to_string(),
                    r,
                ]
            })
            .collect();
        out.put("extension.csv", &table_csv(&EXTENSION_HEADER, &rows)?)?;

        let fit_row = |name: &str, fit: Option<crate::flow::ExpFit>| {
            let (s, i) = fit.map_or((String::new(), String::new()), |f| {
                (fmt_f64(f.slope), fmt_f64(f.intercept))
            });
            vec![
                name.to_string(),
                s,
                i,
                fmt_f64(self.decay.fit_start),
                fmt_f64(self.decay.fit_end),
            ]
        };
        let rows = vec![
            fit_row("rho_sq_minus_one", self.decay.rho),
            fit_row("umbilic_deviation", self.decay.umbilic),
        ];
        out.put("decay_fit.csv", &table_csv(&DECAY_HEADER, &rows)?)?;

        let last = self.flow.len() - 1;
        let fields: [(&str, &PeriodicField); 7] = [
            ("v0", &self.v0),
            ("h0", &self.geometry.mean_curvature),
            ("h_phys", &self.h_phys),
            ("w0", &self.w0),
            ("f", &self.f.f),
            ("w_inf", &self.w_inf.w_inf),
            ("shifted_final", self.flow.shifted(last)),
        ];
        for (name, field) in fields {
            out.put(&format!("fields/{name}.csv"), &field_csv(field)?)?;
        }
        Ok(())
    }
}

pub const SERIES_HEADER: [&str; 2] = ["t", "m"];
pub const FLOW_HEADER: [&str; 8] = [
    "t",
    "rho_sq_minus_one",
    "umbilic_deviation",
    "v_min",
    "v_max",
    "min_principal_curvature",
    "jacobian_min",
    "jacobian_max",
];
pub const EXTENSION_HEADER: [&str; 8] = [
    "t",
    "w_min",
    "w_max",
    "barrier_lo",
    "barrier_hi",
    "z_max_abs",
    "substeps",
    "curvature_residual",
];
pub const DECAY_HEADER: [&str; 5] = ["quantity", "slope", "intercept", "fit_start", "fit_end"];
