//! The `check`, `sweep` and `oracle` commands and their serialized outputs.

use rayon::prelude::*;
use serde::Serialize;

use crate::catalog::{CatalogError, Rho};
use crate::config::{self, Format, ScenarioConfig, SweepConfig};
use crate::criteria::{self, Criterion, CriteriaError, NecessityFailure, Verdict};
use crate::expr::C64;
use crate::oracle::{self, OracleError, OracleReport};

pub const SCHEMA_VERSION: u32 = 1;
pub const TOOL_VERSION: &str = env!("CARGO_PKG_VERSION");

pub const EXIT_DISSIPATIVE: i32 = 0;
pub const EXIT_NOT_DISSIPATIVE: i32 = 1;
pub const EXIT_UNDETERMINED: i32 = 2;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum CommandError {
    #[error(transparent)]
    Catalog(#[from] CatalogError),
    #[error(transparent)]
    Criteria(#[from] CriteriaError),
    #[error(transparent)]
    Oracle(#[from] OracleError),
    #[error("scenario {0} has no boundary parameter to sweep")]
    NoSweepParameter(&'static str),
    #[error("invalid sweep axis: {0}")]
    InvalidAxis(String),
    #[error("meshes must be an increasing list of sizes >= {min}, got {0:?}", min = oracle::MIN_MESH)]
    InvalidMeshes(Vec<usize>),
    #[error("sweep point {0}: {1}")]
    SweepPoint(String, String),
}

impl CommandError {
    /// Machine-readable error code.
    pub fn code(&self) -> &'static str {
        match self {
            CommandError::Catalog(_) => "invalid_scenario",
            CommandError::Criteria(_) => "criterion_failed",
            CommandError::Oracle(_) => "oracle_failed",
            CommandError::InvalidMeshes(_) => "invalid_meshes",
            CommandError::NoSweepParameter(_) | CommandError::InvalidAxis(_) => "invalid_sweep",
            CommandError::SweepPoint(..) => "sweep_point_failed",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CheckReport {
    pub schema_version: u32,
    pub scenario: String,
    pub criterion: Criterion,
    pub lhs: f64,
    pub rhs: f64,
    pub margin: f64,
    pub dissipative: Option<bool>,
    pub necessity_failures: Vec<NecessityFailure>,
    pub maximal: bool,
}

pub fn exit_code(verdict: &Verdict) -> i32 {
    match verdict.dissipative {
        Some(true) => EXIT_DISSIPATIVE,
        Some(false) => EXIT_NOT_DISSIPATIVE,
        None => EXIT_UNDETERMINED,
    }
}

pub fn run_check(config: &ScenarioConfig) -> Result<(i32, CheckReport), CommandError> {
    let problem = config.problem()?;
    let v = criteria::evaluate(&problem)?;
    let report = CheckReport {
        schema_version: SCHEMA_VERSION,
        scenario: config.scenario.name().into(),
        criterion: v.criterion,
        lhs: v.lhs,
        rhs: v.rhs,
        margin: v.margin,
        dissipative: v.dissipative,
        necessity_failures: v.necessity_failures.clone(),
        maximal: v.maximal,
    };
    Ok((exit_code(&v), report))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepPoint {
    pub re_rho: f64,
    pub im_rho: f64,
    pub margin: f64,
    pub dissipative: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepAxes {
    pub re: [f64; 2],
    pub im: [f64; 2],
    pub step: f64,
    pub re_count: usize,
    pub im_count: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepResult {
    pub schema_version: u32,
    pub tool_version: &'static str,
    pub scenario: String,
    pub parameter: &'static str,
    pub config: ScenarioConfig,
    pub axes: SweepAxes,
    pub points: Vec<SweepPoint>,
}

fn axis_values(range: [f64; 2], step: f64) -> Vec<f64> {
    let count = ((range[1] - range[0]) / step + 1e-9).floor() as usize + 1;
    (0..count).map(|k| range[0] + k as f64 * step).collect()
}

/// Margins on a rectangular grid of boundary parameters, row-major with the
/// imaginary part as the outer index.
pub fn run_sweep(config: &ScenarioConfig, axes: &SweepConfig) -> Result<SweepResult, CommandError> {
    config::validate_sweep(axes).map_err(CommandError::InvalidAxis)?;
    let parameter = config.scenario.rho_key().ok_or(CommandError::NoSweepParameter(config.scenario.name()))?;
    let resolved = config.resolved().map_err(|e| CommandError::Catalog(CatalogError::InvalidParameter(e.message)))?;
    let res = axis_values(axes.re, axes.step);
    let ims = axis_values(axes.im, axes.step);
    let points: Vec<C64> = ims.iter().flat_map(|&im| res.iter().map(move |&re| C64::new(re, im))).collect();
    let results = points
        .par_iter()
        .map(|&z| {
            let scenario = resolved.with_rho(z).expect("sweepable scenario");
            sweep_point(&scenario, config, z).map_err(|e| CommandError::SweepPoint(config::format_complex(Rho::Finite(z)), e.to_string()))
        })
        .collect::<Result<Vec<SweepPoint>, _>>()?;
    Ok(SweepResult {
        schema_version: SCHEMA_VERSION,
        tool_version: TOOL_VERSION,
        scenario: config.scenario.name().into(),
        parameter,
        config: config.clone(),
        axes: SweepAxes { re: axes.re, im: axes.im, step: axes.step, re_count: res.len(), im_count: ims.len() },
        points: results,
    })
}

fn sweep_point(scenario: &config::ResolvedScenario, config: &ScenarioConfig, z: C64) -> Result<SweepPoint, CommandError> {
    let point = |margin: f64, dissipative: bool| SweepPoint { re_rho: z.re, im_rho: z.im, margin, dissipative };
    match config::build(scenario, &config.grid) {
        Ok(problem) => {
            let v = criteria::evaluate(&problem)?;
            Ok(point(v.margin, v.dissipative == Some(true)))
        }
        // Im h < 0: same right-hand side as the reflected point, never dissipative
        Err(CatalogError::NegativeImH(im)) => {
            let mirrored = scenario.with_rho(C64::new(z.re, 0.0)).expect("sweepable scenario");
            let v = criteria::evaluate(&config::build(&mirrored, &config.grid)?)?;
            Ok(point(im - v.rhs, false))
        }
        Err(e) => Err(e.into()),
    }
}

impl SweepResult {
    pub fn to_csv(&self) -> String {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(["re_rho", "im_rho", "margin", "dissipative"]).expect("in-memory write");
        for p in &self.points {
            w.serialize((p.re_rho, p.im_rho, p.margin, p.dissipative)).expect("in-memory write");
        }
        String::from_utf8(w.into_inner().expect("in-memory write")).expect("utf-8")
    }

    pub fn render(&self, format: Format) -> String {
        match format {
            Format::Csv => self.to_csv(),
            Format::Json => to_json(self),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OracleOutput {
    pub schema_version: u32,
    pub verdict: CheckReport,
    pub report: OracleReport,
}

/// Exit 0 iff the oracle agrees with the verdict or the margin is below the
/// resolution threshold.
pub fn run_oracle(config: &ScenarioConfig) -> Result<(i32, OracleOutput), CommandError> {
    let meshes = &config.oracle.meshes;
    if meshes.is_empty() || meshes[0] < oracle::MIN_MESH || meshes.windows(2).any(|w| w[0] >= w[1]) {
        return Err(CommandError::InvalidMeshes(meshes.clone()));
    }
    let (_, verdict) = run_check(config)?;
    let problem = config.problem()?;
    let v = criteria::evaluate(&problem)?;
    let report = oracle::cross_validate(&problem, &v, &config.oracle.meshes, config.oracle.tol)?;
    let code = if report.accepted() { 0 } else { 1 };
    Ok((code, OracleOutput { schema_version: SCHEMA_VERSION, verdict, report }))
}

/// Pretty JSON with non-finite numbers as `null`.
pub fn to_json<T: Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("serializable");
    s.push('\n');
    s
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::parse_config;

    fn shirley(phi: &str) -> ScenarioConfig {
        parse_config(&format!(
            "[scenario]\nname = \"shirley\"\ngamma = 2.0\nrho = \"0.5+0.375i\"\nphi = \"{phi}\"\n"
        ))
        .unwrap()
    }

    #[test]
    fn check_exit_codes() {
        let (code, r) = run_check(&shirley("x^2 - x")).unwrap();
        assert_eq!(code, 0);
        assert!((r.margin - 35.0 / 192.0).abs() < 1e-10);
        let (code, _) = run_check(&shirley("0")).unwrap();
        assert_eq!(code, 1);
        let c = parse_config("[scenario]\nname = \"konzert\"\ngamma = 0.25\nell = \"1\"\n").unwrap();
        let (code, r) = run_check(&c).unwrap();
        assert_eq!(code, 0);
        assert!(r.margin.abs() < 1e-10);
        let json = to_json(&r);
        assert!(json.contains("\"criterion\": \"unique_ext_5_8\""));
        assert!(json.contains("\"schema_version\": 1"));
    }

    #[test]
    fn sweep_matches_closed_form_and_is_deterministic() {
        let c = shirley("x^2 - x");
        let axes = SweepConfig { re: [-1.0, 2.0], im: [-1.0, 2.0], step: 0.25 };
        let r = run_sweep(&c, &axes).unwrap();
        assert_eq!(r.points.len(), 13 * 13);
        assert_eq!(r.points[1].re_rho, -0.75);
        assert_eq!(r.points[1].im_rho, -1.0);
        for p in &r.points {
            let z = C64::new(p.re_rho, p.im_rho);
            let closed = z.norm_sqr() - z.re + z.im - 1.0 / 12.0;
            assert!((p.margin - closed).abs() < 1e-10);
            assert!(p.margin.is_finite());
        }
        let again = run_sweep(&c, &axes).unwrap();
        assert_eq!(r.render(Format::Csv), again.render(Format::Csv));
        assert_eq!(r.render(Format::Json), again.render(Format::Json));
        assert!(r.to_csv().starts_with("re_rho,im_rho,margin,dissipative\n"));
    }

    #[test]
    fn degenerate_axis_and_zero_step() {
        let c = shirley("0");
        let r = run_sweep(&c, &SweepConfig { re: [1.0, 1.0], im: [0.0, 0.0], step: 0.1 }).unwrap();
        assert_eq!(r.points.len(), 1);
        assert_eq!(r.to_csv().lines().count(), 2);
        let e = run_sweep(&c, &SweepConfig { re: [0.0, 1.0], im: [0.0, 1.0], step: 0.0 }).unwrap_err();
        assert_eq!(e.code(), "invalid_sweep");
    }

    #[test]
    fn schrodinger_sweep_covers_lower_half_plane() {
        let c = parse_config(
            "[scenario]\nname = \"halfline_schrodinger\"\nh = \"1+1i\"\nperturbation = \"multiplication\"\nv = \"ind(0,1)\"\nk = \"2*ind(0,1)\"\n",
        )
        .unwrap();
        let r = run_sweep(&c, &SweepConfig { re: [0.0, 1.0], im: [-1.0, 2.0], step: 0.5 }).unwrap();
        for p in &r.points {
            assert!((p.margin - (p.im_rho - 1.0)).abs() < 1e-10);
            assert_eq!(p.dissipative, p.im_rho >= 1.0);
        }
    }

    #[test]
    fn oracle_command() {
        let c = parse_config(
            "[scenario]\nname = \"konzert\"\ngamma = 0.25\nell = \"1.2\"\n[oracle]\nmeshes = [32, 64]\n",
        )
        .unwrap();
        let (code, out) = run_oracle(&c).unwrap();
        assert_eq!(code, 0);
        assert!(out.report.infima.iter().all(|&m| m < 0.0));
        assert_eq!(out.report.agreement, Some(true));
    }
}
