//! The `kml` command line: `run`, `geon`, `radial` and `verify`.
//!
//! Exit codes: 0 success, 1 solver failure or failed check, 2 violated
//! hypothesis, 64 usage error or malformed input.

use std::f64::consts::PI;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::time::Instant;

use clap::{Args, Parser, Subcommand};
use serde::{Deserialize, Serialize};

use crate::artifacts::{
    fmt_f64, read_field_csv, read_table, sha256_hex, table_csv, ArtifactWriter, RunManifest,
    MANIFEST_FILE,
};
use crate::error::{KmlError, Result};
use crate::extension::BARRIER_SLACK;
use crate::flow::{log_fit, ExpFit};
use crate::geometry::{surface_geometry, GraphSurface};
use crate::geon::{
    counterexample_report, geon_mass_by_quadrature, geon_sweep, log_spaced, CounterexampleReport,
    GeonConfig, SMOOTH_XI_PERIOD,
};
use crate::grid::Grid;
use crate::mass::{shi_tam_lhs, total_mass_from_w_infinity};
use crate::pipeline::{
    run_pipeline, PipelineConfig, RunReport, DECAY_HEADER, EXTENSION_HEADER, FLOW_HEADER, GAP_TOL,
    MONOTONICITY_TOL, SCHEMA_VERSION, SERIES_HEADER,
};
use crate::radial::{
    mass_integrand_diagnostic, penrose_constant, solve_radial, RadialBoundary, Warp,
};

pub const EXIT_OK: i32 = 0;
pub const EXIT_FAILURE: i32 = 1;
pub const EXIT_HYPOTHESIS: i32 = 2;
pub const EXIT_USAGE: i32 = 64;

/// Environment variable that overrides every output directory.
pub const OUT_ENV: &str = "KML_OUT";

/// Largest |R(g₊) + 6| accepted by `verify`.
pub const CURVATURE_TOL: f64 = 1e-2;
pub const GAUSS_TOL: f64 = 1e-8;
/// Grid size of the geon quadrature cross-check.
const GEON_QUADRATURE_N: usize = 8;

#[derive(Parser, Debug)]
#[command(
    name = "kml",
    version,
    about = "Static quasi-local mass of tori in the Kottler manifold"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Run the full pipeline on a JSON config
    Run(RunArgs),
    /// Closed-form geon shell: boundary data, static mass, decay sweep
    Geon(GeonArgs),
    /// Radially symmetric solution of Δu = 3|∇u| on a warped product
    Radial(RadialArgs),
    /// Re-check the stored artifacts of a previous command
    Verify(VerifyArgs),
}

#[derive(Args, Debug)]
pub struct RunArgs {
    pub config: PathBuf,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct GeonArgs {
    #[arg(long = "rh", default_value_t = 1.0)]
    pub r_h: f64,
    #[arg(long = "r0", required_unless_present = "sweep")]
    pub r_0: Option<f64>,
    #[arg(long = "pxi", default_value_t = SMOOTH_XI_PERIOD)]
    pub p_xi: f64,
    #[arg(long = "ptheta", default_value_t = 2.0 * PI)]
    pub p_theta: f64,
    /// Emit a CSV over log-spaced r₀ instead of a single report
    #[arg(long)]
    pub sweep: bool,
    #[arg(long, default_value_t = 4.0)]
    pub sweep_min: f64,
    #[arg(long, default_value_t = 32.0)]
    pub sweep_max: f64,
    #[arg(long, default_value_t = 4)]
    pub sweep_count: usize,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct RadialArgs {
    /// kottler | linear:<slope> | perturbed:<amplitude>:<frequency>
    #[arg(long, default_value = "kottler")]
    pub warp: WarpArg,
    #[arg(long, default_value_t = 0.0, allow_negative_numbers = true)]
    pub s0: f64,
    #[arg(long, default_value_t = 6.0, allow_negative_numbers = true)]
    pub s1: f64,
    /// u(s0)
    #[arg(long, default_value_t = 1.0, allow_negative_numbers = true)]
    pub u0: f64,
    /// u′(s1)
    #[arg(long, allow_negative_numbers = true)]
    pub slope_outer: f64,
    #[arg(long, default_value_t = 121)]
    pub samples: usize,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct VerifyArgs {
    pub dir: PathBuf,
}

#[derive(Clone, Copy, Debug)]
pub struct WarpArg(pub Warp);

impl FromStr for WarpArg {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        let parts: Vec<&str> = s.split(':').collect();
        let num = |x: &str| {
            x.parse::<f64>()
                .map_err(|_| format!("bad number {x:?} in warp {s:?}"))
        };
        match parts.as_slice() {
            ["kottler"] => Ok(WarpArg(Warp::Kottler)),
            ["linear", a] => Ok(WarpArg(Warp::Linear { slope: num(a)? })),
            ["perturbed", a, f] => Ok(WarpArg(Warp::Perturbed {
                amplitude: num(a)?,
                frequency: num(f)?,
            })),
            _ => Err(format!(
                "unknown warp {s:?}; use kottler, linear:<slope> or perturbed:<amplitude>:<frequency>"
            )),
        }
    }
}

/// Parse `args` (including the program name), run, and return the exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let args: Vec<std::ffi::OsString> = args.into_iter().map(Into::into).collect();
    let argv: Vec<String> = args
        .iter()
        .skip(1)
        .map(|a| a.to_string_lossy().into_owned())
        .collect();
    let cli = match Cli::try_parse_from(&args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return match e.kind() {
                clap::error::ErrorKind::DisplayHelp | clap::error::ErrorKind::DisplayVersion => {
                    EXIT_OK
                }
                _ => EXIT_USAGE,
            };
        }
    };
    let outcome = match cli.command {
        Command::Run(a) => cmd_run(&a, argv),
        Command::Geon(a) => cmd_geon(&a, argv),
        Command::Radial(a) => cmd_radial(&a, argv),
        Command::Verify(a) => return cmd_verify(&a.dir),
    };
    match outcome {
        Ok(code) => code,
        Err(e) => {
            eprintln!("kml: {e}");
            exit_code(&e)
        }
    }
}

pub fn exit_code(err: &KmlError) -> i32 {
    match err {
        KmlError::Hypothesis(_) => EXIT_HYPOTHESIS,
        KmlError::Solver(_) => EXIT_FAILURE,
        KmlError::Input(_) | KmlError::Json(_) | KmlError::Csv(_) | KmlError::Io(_) => EXIT_USAGE,
    }
}

/// `KML_OUT`, then `--out`, then `default`.
pub fn resolve_out(flag: Option<&Path>, default: &str) -> PathBuf {
    match std::env::var_os(OUT_ENV) {
        Some(v) if !v.is_empty() => PathBuf::from(v),
        _ => flag.map_or_else(|| PathBuf::from(default), Path::to_path_buf),
    }
}

fn write_failure(e: KmlError) -> KmlError {
    match e {
        KmlError::Io(io) => KmlError::solver(format!("cannot write artifacts: {io}")),
        other => other,
    }
}

pub fn cmd_run(args: &RunArgs, argv: Vec<String>) -> Result<i32> {
    let start = Instant::now();
    let text = fs::read_to_string(&args.config).map_err(|e| {
        KmlError::input(format!("cannot read config {}: {e}", args.config.display()))
    })?;
    let config = PipelineConfig::from_json(&text).map_err(|e| match e {
        KmlError::Json(j) => KmlError::input(format!("config {}: {j}", args.config.display())),
        other => other,
    })?;
    let base = args.config.parent().unwrap_or(Path::new("."));
    let run = run_pipeline(&config, base)?;
    let out = resolve_out(args.out.as_deref(), "kml-out");
    let mut w = ArtifactWriter::new(&out).map_err(write_failure)?;
    run.write_artifacts(&mut w).map_err(write_failure)?;
    w.finish(config.hash()?, "run", argv, start.elapsed().as_secs_f64())
        .map_err(write_failure)?;
    println!(
        "{}",
        serde_json::json!({
            "out": out.display().to_string(),
            "m_by_static": run.mass.m_by_static,
            "m_total": run.mass.m_total,
            "gap": run.mass.gap,
            "violations": run.violations,
        })
    );
    if run.violations.is_empty() {
        Ok(EXIT_OK)
    } else {
        for v in &run.violations {
            eprintln!("kml: check failed: {v}");
        }
        Ok(EXIT_FAILURE)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepSpec {
    pub min: f64,
    pub max: f64,
    pub count: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GeonRequest {
    pub r_h: f64,
    pub r_0: Option<f64>,
    pub p_xi: f64,
    pub p_theta: f64,
    pub sweep: Option<SweepSpec>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GeonOutput {
    pub schema_version: u32,
    pub request: GeonRequest,
    pub report: Option<CounterexampleReport>,
    /// static mass of the outer boundary by quadrature over a graph
    pub quadrature_mass: Option<f64>,
    pub sweep_slope: Option<f64>,
}

pub const SWEEP_HEADER: [&str; 6] = [
    "r_0",
    "h_outer",
    "m_exact",
    "m_leading",
    "remainder",
    "fitted_slope",
];

fn geon_output(req: &GeonRequest) -> Result<(GeonOutput, Option<Vec<u8>>)> {
    let mut out = GeonOutput {
        schema_version: SCHEMA_VERSION,
        request: req.clone(),
        report: None,
        quadrature_mass: None,
        sweep_slope: None,
    };
    if let Some(r0) = req.r_0 {
        let cfg = GeonConfig::new(req.r_h, r0, req.p_xi, req.p_theta)?;
        out.report = Some(counterexample_report(&cfg)?);
        out.quadrature_mass = Some(geon_mass_by_quadrature(&cfg, GEON_QUADRATURE_N)?);
    }
    let csv = match &req.sweep {
        None => None,
        Some(s) => {
            if !(s.min > req.r_h && s.max > s.min) || s.count < 2 {
                return Err(KmlError::input(
                    "sweep needs r_h < sweep-min < sweep-max and count >= 2",
                ));
            }
            let sweep = geon_sweep(
                req.r_h,
                &log_spaced(s.min, s.max, s.count),
                req.p_xi,
                req.p_theta,
            )?;
            out.sweep_slope = Some(sweep.slope);
            let rows: Vec<Vec<String>> = sweep
                .rows
                .iter()
                .map(|r| {
                    vec![
                        fmt_f64(r.r_0),
                        fmt_f64(r.h_outer),
                        fmt_f64(r.m_exact),
                        fmt_f64(r.m_leading),
                        fmt_f64(r.remainder),
                        fmt_f64(sweep.slope),
                    ]
                })
                .collect();
            Some(table_csv(&SWEEP_HEADER, &rows)?)
        }
    };
    Ok((out, csv))
}

pub fn cmd_geon(args: &GeonArgs, argv: Vec<String>) -> Result<i32> {
    let start = Instant::now();
    let req = GeonRequest {
        r_h: args.r_h,
        r_0: args.r_0,
        p_xi: args.p_xi,
        p_theta: args.p_theta,
        sweep: args.sweep.then_some(SweepSpec {
            min: args.sweep_min,
            max: args.sweep_max,
            count: args.sweep_count,
        }),
    };
    let (out, csv) = geon_output(&req)?;
    let stdout = std::io::stdout();
    let mut lock = stdout.lock();
    match &csv {
        Some(bytes) => lock.write_all(bytes)?,
        None => writeln!(lock, "{}", serde_json::to_string_pretty(&out)?)?,
    }
    if args.out.is_some() || std::env::var_os(OUT_ENV).is_some_and(|v| !v.is_empty()) {
        let dir = resolve_out(args.out.as_deref(), "kml-out");
        let mut w = ArtifactWriter::new(&dir).map_err(write_failure)?;
        w.put_json("report.json", &out).map_err(write_failure)?;
        if let Some(bytes) = &csv {
            w.put("sweep.csv", bytes).map_err(write_failure)?;
        }
        let hash = sha256_hex(serde_json::to_string(&req)?.as_bytes());
        w.finish(hash, "geon", argv, start.elapsed().as_secs_f64())
            .map_err(write_failure)?;
    }
    Ok(EXIT_OK)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RadialRequest {
    pub warp: Warp,
    pub s0: f64,
    pub s1: f64,
    pub boundary: RadialBoundary,
    pub samples: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RadialOutput {
    pub schema_version: u32,
    pub request: RadialRequest,
    /// u′(s₀)
    pub inner_slope: f64,
    pub penrose_constant: f64,
    pub integrand_max: f64,
    /// max |u − (u(s₀) + u′(s₀)(s − s₀))|
    pub linear_deviation: f64,
    pub linear: bool,
}

pub const PROFILE_HEADER: [&str; 5] = ["s", "u", "du", "a", "integrand"];

fn radial_output(req: &RadialRequest) -> Result<(RadialOutput, Vec<u8>)> {
    let sol = solve_radial(req.warp, req.s0, req.s1, req.boundary, req.samples)?;
    let c = penrose_constant(&sol)?;
    let integrand = mass_integrand_diagnostic(&sol);
    let d0 = sol.du[0];
    let linear_deviation = sol
        .s
        .iter()
        .zip(&sol.u)
        .map(|(s, u)| (u - (sol.u[0] + d0 * (s - req.s0))).abs())
        .fold(0.0, f64::max);
    let scale = 1.0 + sol.u.iter().fold(0.0f64, |m, u| m.max(u.abs()));
    let rows: Vec<Vec<String>> = (0..sol.s.len())
        .map(|i| {
            vec![
                fmt_f64(sol.s[i]),
                fmt_f64(sol.u[i]),
                fmt_f64(sol.du[i]),
                fmt_f64(sol.a[i]),
                fmt_f64(integrand[i]),
            ]
        })
        .collect();
    Ok((
        RadialOutput {
            schema_version: SCHEMA_VERSION,
            request: req.clone(),
            inner_slope: d0,
            penrose_constant: c,
            integrand_max: integrand.iter().copied().fold(0.0, f64::max),
            linear_deviation,
            linear: linear_deviation <= 1e-10 * scale,
        },
        table_csv(&PROFILE_HEADER, &rows)?,
    ))
}

pub fn cmd_radial(args: &RadialArgs, argv: Vec<String>) -> Result<i32> {
    let start = Instant::now();
    let req = RadialRequest {
        warp: args.warp.0,
        s0: args.s0,
        s1: args.s1,
        boundary: RadialBoundary {
            value_inner: args.u0,
            slope_outer: args.slope_outer,
        },
        samples: args.samples,
    };
    let (out, csv) = radial_output(&req)?;
    println!("{}", serde_json::to_string_pretty(&out)?);
    if args.out.is_some() || std::env::var_os(OUT_ENV).is_some_and(|v| !v.is_empty()) {
        let dir = resolve_out(args.out.as_deref(), "kml-out");
        let mut w = ArtifactWriter::new(&dir).map_err(write_failure)?;
        w.put_json("report.json", &out).map_err(write_failure)?;
        w.put("profile.csv", &csv).map_err(write_failure)?;
        let hash = sha256_hex(serde_json::to_string(&req)?.as_bytes());
        w.finish(hash, "radial", argv, start.elapsed().as_secs_f64())
            .map_err(write_failure)?;
    }
    Ok(EXIT_OK)
}

/// Outcome of re-checking one stored artifact directory.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Verification {
    pub passed: Vec<String>,
    pub failed: Vec<String>,
}

impl Verification {
    fn check(&mut self, ok: bool, what: String) {
        if ok {
            self.passed.push(what);
        } else {
            self.failed.push(what);
        }
    }
}

pub fn cmd_verify(dir: &Path) -> i32 {
    let manifest_path = dir.join(MANIFEST_FILE);
    let text = match fs::read_to_string(&manifest_path) {
        Ok(t) => t,
        Err(e) => {
            eprintln!("kml: cannot read {}: {e}", manifest_path.display());
            return EXIT_USAGE;
        }
    };
    match verify_dir(dir, &text) {
        Ok(v) => {
            for p in &v.passed {
                println!("ok   {p}");
            }
            for f in &v.failed {
                println!("FAIL {f}");
            }
            if v.failed.is_empty() {
                EXIT_OK
            } else {
                EXIT_FAILURE
            }
        }
        Err(e) => {
            eprintln!("kml: verify: {e}");
            EXIT_FAILURE
        }
    }
}

/// Check file hashes listed in the manifest, then the invariants of the
/// command that produced the directory.
pub fn verify_dir(dir: &Path, manifest_text: &str) -> Result<Verification> {
    let manifest: RunManifest = serde_json::from_str(manifest_text)?;
    let mut v = Verification::default();
    let mut files = std::collections::BTreeMap::new();
    for entry in &manifest.files {
        match fs::read(dir.join(&entry.path)) {
            Ok(bytes) => {
                v.check(
                    sha256_hex(&bytes) == entry.sha256,
                    format!("sha256 of {}", entry.path),
                );
                files.insert(entry.path.clone(), bytes);
            }
            Err(e) => v.failed.push(format!("{} unreadable: {e}", entry.path)),
        }
    }
    if !v.failed.is_empty() {
        return Ok(v);
    }
    let get = |name: &str| {
        files
            .get(name)
            .map(Vec::as_slice)
            .ok_or_else(|| KmlError::input(format!("manifest does not list {name}")))
    };
    match manifest.command.as_str() {
        "run" => verify_run(&mut v, &get)?,
        "geon" => {
            let stored: GeonOutput = serde_json::from_slice(get("report.json")?)?;
            let (fresh, csv) = geon_output(&stored.request)?;
            v.check(fresh == stored, "geon report reproduces".into());
            if let Some(q) = stored.quadrature_mass {
                let exact = stored.report.as_ref().map_or(f64::NAN, |r| r.mass.m_exact);
                v.check(
                    (q - exact).abs() <= 1e-10,
                    format!("geon quadrature mass {q} vs closed form {exact}"),
                );
            }
            if let Some(bytes) = csv {
                v.check(
                    get("sweep.csv")? == bytes.as_slice(),
                    "geon sweep reproduces".into(),
                );
            }
        }
        "radial" => {
            let stored: RadialOutput = serde_json::from_slice(get("report.json")?)?;
            let (fresh, csv) = radial_output(&stored.request)?;
            v.check(fresh == stored, "radial report reproduces".into());
            v.check(
                get("profile.csv")? == csv.as_slice(),
                "radial profile reproduces".into(),
            );
        }
        other => {
            return Err(KmlError::input(format!(
                "unknown command {other:?} in manifest"
            )))
        }
    }
    Ok(v)
}

fn verify_run<'a>(v: &mut Verification, get: &dyn Fn(&str) -> Result<&'a [u8]>) -> Result<()> {
    let report: RunReport = serde_json::from_slice(get("report.json")?)?;
    v.check(
        report.schema_version == SCHEMA_VERSION,
        "report schema version".into(),
    );
    v.check(
        report.violations.is_empty(),
        format!("run recorded no violations {:?}", report.violations),
    );
    let cfg = &report.config;
    let grid = Grid::new(cfg.grid.n1, cfg.grid.n2, cfg.torus.build()?)?;
    let field =
        |name: &str| -> Result<_> { read_field_csv(get(&format!("fields/{name}.csv"))?, &grid) };
    let v0 = field("v0")?;
    let geom = surface_geometry(&GraphSurface::new(v0))?;
    let gauss = geom.gauss_identity_residual().max_abs();
    v.check(
        gauss <= GAUSS_TOL,
        format!("Gauss identity residual {gauss:.3e}"),
    );
    let h0 = field("h0")?;
    let dh = h0.sup_distance(&geom.mean_curvature);
    v.check(
        dh <= 1e-12 * (1.0 + h0.max_abs()),
        format!("stored H0 reproduces ({dh:.1e})"),
    );
    let h_phys = field("h_phys")?;
    let w0 = field("w0")?;
    let w0_fresh = geom.mean_curvature.zip_map(&h_phys, |a, b| a / b);
    v.check(
        w0.sup_distance(&w0_fresh) <= 1e-12 * (1.0 + w0.max_abs()),
        "w0 = H0 / H_phys".into(),
    );

    let ext = read_table(get("extension.csv")?, &EXTENSION_HEADER)?;
    let worst = ext
        .iter()
        .map(|r| (r[3] - r[1]).max(r[2] - r[4]))
        .fold(f64::NEG_INFINITY, f64::max);
    v.check(
        worst <= BARRIER_SLACK,
        format!("barriers bracket w (worst excess {worst:.3e})"),
    );
    let curv: Vec<f64> = ext.iter().map(|r| r[7]).filter(|x| !x.is_nan()).collect();
    let rmax = curv.iter().copied().fold(0.0, f64::max);
    v.check(
        curv.is_empty() || rmax <= CURVATURE_TOL,
        format!("max |R + 6| = {rmax:.3e} over {} slices", curv.len()),
    );
    v.check(
        report.extension.curvature_residual_max.unwrap_or(0.0) == rmax,
        "curvature residual matches report".into(),
    );

    let series = read_table(get("series.csv")?, &SERIES_HEADER)?;
    let m0 = series.first().map_or(0.0, |r| r[1]);
    let mono = series
        .windows(2)
        .map(|w| w[1][1] - w[0][1])
        .fold(0.0, f64::max);
    let tol = MONOTONICITY_TOL * (1.0 + m0.abs());
    v.check(
        mono <= tol,
        format!("series nonincreasing (max increment {mono:.3e})"),
    );

    let w_inf = field("w_inf")?;
    let m_total = total_mass_from_w_infinity(&w_inf);
    let gap = shi_tam_lhs(&geom, &w0) - m_total;
    v.check(
        gap >= -GAP_TOL,
        format!("boundary inequality gap {gap:.6e}"),
    );
    v.check(
        (gap - report.mass.gap).abs() <= 1e-10 * (1.0 + gap.abs())
            && m_total == report.mass.m_total,
        "gap and total mass match report".into(),
    );

    let flow = read_table(get("flow.csv")?, &FLOW_HEADER)?;
    let fits = read_table_keyed(get("decay_fit.csv")?)?;
    let t_max = flow.last().map_or(0.0, |r| r[0]);
    let tail: Vec<&Vec<f64>> = flow
        .iter()
        .filter(|r| r[0] >= 0.5 * t_max - 1e-12)
        .collect();
    let ts: Vec<f64> = tail.iter().map(|r| r[0]).collect();
    for (col, name) in [(1, "rho_sq_minus_one"), (2, "umbilic_deviation")] {
        let ys: Vec<f64> = tail.iter().map(|r| r[col]).collect();
        let refit = log_fit(&ts, &ys);
        let stored = fits.iter().find(|(k, _)| k == name).map(|(_, f)| *f);
        let same = match (refit, stored.flatten()) {
            (None, None) => true,
            (Some(a), Some(b)) => {
                (a.slope - b.slope).abs() <= 1e-9 * (1.0 + b.slope.abs())
                    && (a.intercept - b.intercept).abs() <= 1e-9 * (1.0 + b.intercept.abs())
            }
            _ => false,
        };
        v.check(same, format!("decay fit of {name} reproduces"));
    }
    Ok(())
}

fn read_table_keyed(bytes: &[u8]) -> Result<Vec<(String, Option<ExpFit>)>> {
    let mut r = csv::Reader::from_reader(bytes);
    let header = r.headers()?.clone();
    if header.iter().collect::<Vec<_>>() != DECAY_HEADER {
        return Err(KmlError::input("decay_fit.csv has unexpected columns"));
    }
    let mut out = Vec::new();
    for rec in r.records() {
        let rec = rec?;
        let fit = if rec[1].is_empty() {
            None
        } else {
            let p = |k: usize| {
                rec[k].parse::<f64>().map_err(|_| {
                    KmlError::input(format!("decay_fit.csv: cannot parse {:?}", &rec[k]))
                })
            };
            Some(ExpFit {
                slope: p(1)?,
                intercept: p(2)?,
            })
        };
        out.push((rec[0].to_string(), fit));
    }
    Ok(out)
}
