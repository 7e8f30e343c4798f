//! Scenario configuration files (TOML) and their validation.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::catalog::{
    self, CatalogError, ExtensionProblem, GridOptions, KonzertVector, Perturbation, Rho,
};
use crate::expr::{Expr, C64};
use crate::grid::DEFAULT_HALFLINE_R;
use crate::oracle::{DEFAULT_MESHES, DEFAULT_TOL};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub struct ConfigError {
    pub line: usize,
    pub column: usize,
    pub message: String,
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "line {}, column {}: {}", self.line, self.column, self.message)
    }
}

fn zero_expr() -> String {
    "0".into()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum VectorChoice {
    #[default]
    Regular,
    Singular,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PerturbationKind {
    RankOne,
    Multiplication,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "name", rename_all = "snake_case", deny_unknown_fields)]
pub enum ScenarioParams {
    Potsdam {
        #[serde(default = "zero_expr")]
        w: String,
        rho: String,
        #[serde(default = "zero_expr")]
        phi: String,
    },
    Shirley {
        gamma: f64,
        rho: String,
        #[serde(default = "zero_expr")]
        phi: String,
    },
    Konzert {
        gamma: f64,
        #[serde(default = "zero_expr")]
        ell: String,
        #[serde(default)]
        vector: VectorChoice,
    },
    HalflineSchrodinger {
        h: String,
        perturbation: PerturbationKind,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        alpha: Option<f64>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        phi: Option<String>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        lambda: Option<String>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        v: Option<String>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        k: Option<String>,
    },
}

impl ScenarioParams {
    pub fn name(&self) -> &'static str {
        match self {
            ScenarioParams::Potsdam { .. } => "potsdam",
            ScenarioParams::Shirley { .. } => "shirley",
            ScenarioParams::Konzert { .. } => "konzert",
            ScenarioParams::HalflineSchrodinger { .. } => "halfline_schrodinger",
        }
    }

    /// Key of the boundary parameter swept by `sweep`.
    pub fn rho_key(&self) -> Option<&'static str> {
        match self {
            ScenarioParams::Potsdam { .. } | ScenarioParams::Shirley { .. } => Some("rho"),
            ScenarioParams::HalflineSchrodinger { .. } => Some("h"),
            ScenarioParams::Konzert { .. } => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub r: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub offset: Option<f64>,
}

fn default_meshes() -> Vec<usize> {
    DEFAULT_MESHES.to_vec()
}

fn default_tol() -> f64 {
    DEFAULT_TOL
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OracleConfig {
    #[serde(default = "default_meshes")]
    pub meshes: Vec<usize>,
    #[serde(default = "default_tol")]
    pub tol: f64,
}

impl Default for OracleConfig {
    fn default() -> Self {
        OracleConfig { meshes: default_meshes(), tol: default_tol() }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Format {
    Csv,
    #[default]
    Json,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputConfig {
    #[serde(default)]
    pub format: Format,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub path: Option<String>,
}

/// Rectangle `re × im` in the boundary-parameter plane.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepConfig {
    pub re: [f64; 2],
    pub im: [f64; 2],
    pub step: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    pub scenario: ScenarioParams,
    #[serde(default, skip_serializing_if = "is_default")]
    pub grid: GridConfig,
    #[serde(default, skip_serializing_if = "is_default")]
    pub oracle: OracleConfig,
    #[serde(default, skip_serializing_if = "is_default")]
    pub output: OutputConfig,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sweep: Option<SweepConfig>,
}

fn is_default<T: Default + PartialEq>(t: &T) -> bool {
    *t == T::default()
}

/// `a+bi`, a constant expression, or `inf`.
pub fn parse_complex(text: &str) -> Result<Rho, String> {
    let t = text.trim();
    if t.eq_ignore_ascii_case("inf") || t == "∞" {
        return Ok(Rho::Infinity);
    }
    let e = Expr::parse(t).map_err(|e| format!("column {}: {}", e.column, e.message))?;
    if !e.is_constant() {
        return Err(format!("'{t}' is not a constant"));
    }
    let z = e.eval(0.0);
    if !z.re.is_finite() || !z.im.is_finite() {
        return Err(format!("'{t}' is not finite"));
    }
    Ok(Rho::Finite(z))
}

/// Inverse of [`parse_complex`] for sweep points and serialization.
pub fn format_complex(rho: Rho) -> String {
    match rho {
        Rho::Infinity => "inf".into(),
        Rho::Finite(z) => format!("{:?}{:+?}i", z.re, z.im),
    }
}

/// Position of `key = …` in the text (1-based line and column of the value).
fn locate(text: &str, section: &str, key: &str) -> (usize, usize) {
    let mut in_section = section.is_empty();
    for (i, line) in text.lines().enumerate() {
        let trimmed = line.trim_start();
        if trimmed.starts_with('[') {
            in_section = trimmed.trim_end() == format!("[{section}]");
            continue;
        }
        if !in_section {
            continue;
        }
        if let Some(rest) = trimmed.strip_prefix(key) {
            let rest_trim = rest.trim_start();
            if rest_trim.starts_with('=') {
                let eq = line.len() - rest_trim.len();
                let after = &line[eq + 1..];
                let value = eq + 1 + (after.len() - after.trim_start().len());
                return (i + 1, value + 1);
            }
        }
    }
    (1, 1)
}

fn offset_to_line_col(text: &str, offset: usize) -> (usize, usize) {
    let before = &text[..offset.min(text.len())];
    let line = before.matches('\n').count() + 1;
    let col = before.rfind('\n').map_or(before.chars().count(), |p| before[p + 1..].chars().count()) + 1;
    (line, col)
}

fn required_keys(name: &str) -> &'static str {
    match name {
        "potsdam" => "scenario.rho (optional: w, phi)",
        "shirley" => "scenario.gamma, scenario.rho (optional: phi)",
        "konzert" => "scenario.gamma (optional: ell, vector)",
        "halfline_schrodinger" => {
            "scenario.h, scenario.perturbation, and alpha, phi, lambda (rank_one) or v, k (multiplication)"
        }
        _ => "scenario.name",
    }
}

const SCENARIOS: &str = "potsdam, shirley, konzert, halfline_schrodinger";

/// Parses and validates a configuration.
pub fn parse_config(text: &str) -> Result<ScenarioConfig, ConfigError> {
    let table: toml::Table = toml::from_str(text).map_err(|e| toml_error(text, &e))?;
    let Some(scenario) = table.get("scenario") else {
        return Err(ConfigError {
            line: 1,
            column: 1,
            message: format!(
                "missing required keys: [scenario] with name = one of {SCENARIOS}, plus its parameters \
                 (e.g. shirley needs {})",
                required_keys("shirley")
            ),
        });
    };
    match scenario.get("name").and_then(|n| n.as_str()) {
        None => {
            let (line, column) = locate(text, "", "[scenario]");
            return Err(ConfigError { line, column, message: format!("missing required key scenario.name ({SCENARIOS})") });
        }
        Some(name) if !SCENARIOS.split(", ").any(|s| s == name) => {
            let (line, column) = locate(text, "scenario", "name");
            return Err(ConfigError { line, column, message: format!("unknown scenario '{name}' (expected {SCENARIOS})") });
        }
        Some(_) => {}
    }
    let config: ScenarioConfig = toml::from_str(text).map_err(|e| {
        let mut err = toml_error(text, &e);
        if err.message.contains("missing field") {
            let name = scenario.get("name").and_then(|n| n.as_str()).unwrap_or("");
            err.message = format!("{}; required: {}", err.message, required_keys(name));
        }
        err
    })?;
    validate(&config, text)?;
    Ok(config)
}

fn toml_error(text: &str, e: &toml::de::Error) -> ConfigError {
    let (line, column) = e.span().map_or((1, 1), |s| offset_to_line_col(text, s.start));
    ConfigError { line, column, message: e.message().trim().to_string() }
}

fn expr_at(text: &str, section: &str, key: &str, value: &str) -> Result<Expr, ConfigError> {
    Expr::parse(value).map_err(|e| {
        let (line, column) = locate(text, section, key);
        // value columns are offset by the opening quote
        ConfigError { line, column: column + e.column, message: format!("{key}: {}", e.message) }
    })
}

fn complex_at(text: &str, key: &str, value: &str) -> Result<Rho, ConfigError> {
    parse_complex(value).map_err(|m| {
        let (line, column) = locate(text, "scenario", key);
        ConfigError { line, column, message: format!("{key}: {m}") }
    })
}

fn at(text: &str, section: &str, key: &str, message: String) -> ConfigError {
    let (line, column) = locate(text, section, key);
    ConfigError { line, column, message }
}

/// Parsed scenario parameters, ready for the catalog builders.
#[derive(Debug, Clone, PartialEq)]
pub enum ResolvedScenario {
    Potsdam { w: Expr, rho: Rho, phi: Expr },
    Shirley { gamma: f64, rho: Rho, phi: Expr },
    Konzert { gamma: f64, ell: Expr, vector: KonzertVector },
    HalflineSchrodinger { h: Rho, perturbation: Perturbation },
}

fn resolve(config: &ScenarioConfig, text: &str) -> Result<ResolvedScenario, ConfigError> {
    let s = "scenario";
    Ok(match &config.scenario {
        ScenarioParams::Potsdam { w, rho, phi } => ResolvedScenario::Potsdam {
            w: expr_at(text, s, "w", w)?,
            rho: complex_at(text, "rho", rho)?,
            phi: expr_at(text, s, "phi", phi)?,
        },
        ScenarioParams::Shirley { gamma, rho, phi } => ResolvedScenario::Shirley {
            gamma: *gamma,
            rho: complex_at(text, "rho", rho)?,
            phi: expr_at(text, s, "phi", phi)?,
        },
        ScenarioParams::Konzert { gamma, ell, vector } => ResolvedScenario::Konzert {
            gamma: *gamma,
            ell: expr_at(text, s, "ell", ell)?,
            vector: match vector {
                VectorChoice::Regular => KonzertVector::Regular,
                VectorChoice::Singular => KonzertVector::Singular,
            },
        },
        ScenarioParams::HalflineSchrodinger { h, perturbation, alpha, phi, lambda, v, k } => {
            let need = |key: &str, val: &Option<String>| {
                val.clone().ok_or_else(|| at(text, "", "[scenario]", format!("{} perturbation needs scenario.{key}", match perturbation {
                    PerturbationKind::RankOne => "rank_one",
                    PerturbationKind::Multiplication => "multiplication",
                })))
            };
            let pert = match perturbation {
                PerturbationKind::RankOne => {
                    let alpha = alpha.ok_or_else(|| at(text, "", "[scenario]", "rank_one perturbation needs scenario.alpha".into()))?;
                    let lambda = need("lambda", lambda)?;
                    let lambda = match complex_at(text, "lambda", &lambda)? {
                        Rho::Finite(z) => z,
                        Rho::Infinity => return Err(at(text, s, "lambda", "lambda must be finite".into())),
                    };
                    Perturbation::RankOne { alpha, phi: expr_at(text, s, "phi", &need("phi", phi)?)?, lambda }
                }
                PerturbationKind::Multiplication => Perturbation::Multiplication {
                    v: expr_at(text, s, "v", &need("v", v)?)?,
                    k: expr_at(text, s, "k", &need("k", k)?)?,
                },
            };
            ResolvedScenario::HalflineSchrodinger { h: complex_at(text, "h", h)?, perturbation: pert }
        }
    })
}

fn validate(config: &ScenarioConfig, text: &str) -> Result<(), ConfigError> {
    if config.oracle.meshes.is_empty() || config.oracle.meshes.windows(2).any(|w| w[0] >= w[1]) {
        return Err(at(text, "oracle", "meshes", "meshes must be a non-empty increasing list".into()));
    }
    if let Some(&n) = config.oracle.meshes.first() {
        if n < crate::oracle::MIN_MESH {
            return Err(at(text, "oracle", "meshes", format!("mesh sizes must be at least {}", crate::oracle::MIN_MESH)));
        }
    }
    if !(config.oracle.tol > 0.0) {
        return Err(at(text, "oracle", "tol", "tol must be positive".into()));
    }
    if let Some(sw) = &config.sweep {
        validate_sweep(sw).map_err(|m| at(text, "sweep", "step", m))?;
    }
    let resolved = resolve(config, text)?;
    build(&resolved, &config.grid).map_err(|e| {
        let key = match &e {
            CatalogError::GammaOutOfRange { .. } => "gamma",
            CatalogError::NegativeImH(_) => "h",
            CatalogError::PhiBoundary(_) => "phi",
            CatalogError::SupportViolation(_) => "k",
            _ => "name",
        };
        at(text, "scenario", key, e.to_string())
    })?;
    Ok(())
}

pub fn validate_sweep(sw: &SweepConfig) -> Result<(), String> {
    if !(sw.step > 0.0) || !sw.step.is_finite() {
        return Err("sweep step must be positive".into());
    }
    if sw.re[1] < sw.re[0] || sw.im[1] < sw.im[0] {
        return Err("sweep ranges must be ordered [min, max]".into());
    }
    Ok(())
}

pub fn grid_options(grid: &GridConfig) -> GridOptions {
    GridOptions { n: grid.n, r: grid.r.unwrap_or(DEFAULT_HALFLINE_R), offset: grid.offset }
}

pub fn build(resolved: &ResolvedScenario, grid: &GridConfig) -> Result<ExtensionProblem, CatalogError> {
    let opts = grid_options(grid);
    match resolved {
        ResolvedScenario::Potsdam { w, rho, phi } => catalog::build_potsdam(w.clone(), *rho, phi.clone(), &opts),
        ResolvedScenario::Shirley { gamma, rho, phi } => catalog::build_shirley(*gamma, *rho, phi.clone(), &opts),
        ResolvedScenario::Konzert { gamma, ell, vector } => catalog::build_konzert(*gamma, ell.clone(), *vector, &opts),
        ResolvedScenario::HalflineSchrodinger { h, perturbation } => {
            catalog::build_halfline_schrodinger(*h, perturbation.clone(), &opts)
        }
    }
}

impl ScenarioConfig {
    /// The scenario with all expressions parsed; the config must have passed [`parse_config`].
    pub fn resolved(&self) -> Result<ResolvedScenario, ConfigError> {
        resolve(self, "")
    }

    pub fn problem(&self) -> Result<ExtensionProblem, CatalogError> {
        let r = self.resolved().map_err(|e| CatalogError::InvalidParameter(e.message))?;
        build(&r, &self.grid)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }
}

impl ResolvedScenario {
    /// The same scenario with its boundary parameter replaced.
    pub fn with_rho(&self, value: C64) -> Option<ResolvedScenario> {
        let mut out = self.clone();
        match &mut out {
            ResolvedScenario::Potsdam { rho, .. } | ResolvedScenario::Shirley { rho, .. } => *rho = Rho::Finite(value),
            ResolvedScenario::HalflineSchrodinger { h, .. } => *h = Rho::Finite(value),
            ResolvedScenario::Konzert { .. } => return None,
        }
        Some(out)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const SHIRLEY: &str = r#"
[scenario]
name = "shirley"
gamma = 2.0
rho = "0.5+0.375i"
phi = "x^2 - x"
"#;

    #[test]
    fn minimal_shirley_parses() {
        let c = parse_config(SHIRLEY).unwrap();
        assert_eq!(c.scenario.name(), "shirley");
        assert_eq!(c.oracle.meshes, vec![64, 128, 256]);
        let pr = c.problem().unwrap();
        assert!((pr.reference.margin - 35.0 / 192.0).abs() < 1e-12);
    }

    #[test]
    fn konzert_gamma_range_error() {
        let text = "[scenario]\nname = \"konzert\"\ngamma = 0.7\n";
        let e = parse_config(text).unwrap_err();
        assert!(e.message.contains("0 < gamma < 1/2"), "{e}");
        assert_eq!((e.line, e.column), (3, 9));
    }

    #[test]
    fn empty_file_lists_required_keys() {
        let e = parse_config("").unwrap_err();
        assert!(e.message.contains("missing required keys"));
        assert!(e.message.contains("name"));
    }

    #[test]
    fn unknown_scenario() {
        let e = parse_config("[scenario]\nname = \"dresden\"\n").unwrap_err();
        assert!(e.message.contains("unknown scenario"));
        assert_eq!(e.line, 2);
    }

    #[test]
    fn malformed_expression_has_position() {
        let text = "[scenario]\nname = \"shirley\"\ngamma = 2.0\nrho = \"1\"\nphi = \"x^2 - * x\"\n";
        let e = parse_config(text).unwrap_err();
        assert_eq!(e.line, 5);
        assert!(e.column > 7, "{e}");
    }

    #[test]
    fn missing_parameter_names_required_keys() {
        let e = parse_config("[scenario]\nname = \"shirley\"\ngamma = 2.0\n").unwrap_err();
        assert!(e.message.contains("rho"), "{e}");
    }

    #[test]
    fn complex_literals() {
        assert_eq!(parse_complex("inf").unwrap(), Rho::Infinity);
        assert_eq!(parse_complex("0.5+0.375i").unwrap(), Rho::Finite(C64::new(0.5, 0.375)));
        assert_eq!(parse_complex("-2i").unwrap(), Rho::Finite(C64::new(0.0, -2.0)));
        assert_eq!(parse_complex("1/2 + 3i/8").unwrap(), Rho::Finite(C64::new(0.5, 0.375)));
        assert!(parse_complex("x").is_err());
        for z in [C64::new(0.1, -0.3), C64::new(-1.0, 2.0)] {
            assert_eq!(parse_complex(&format_complex(Rho::Finite(z))).unwrap(), Rho::Finite(z));
        }
    }

    #[test]
    fn round_trip() {
        let texts = [
            SHIRLEY.to_string(),
            "[scenario]\nname = \"konzert\"\ngamma = 0.25\nell = \"1\"\n[oracle]\nmeshes = [32, 64]\ntol = 1e-6\n".into(),
            "[scenario]\nname = \"halfline_schrodinger\"\nh = \"1+1i\"\nperturbation = \"multiplication\"\nv = \"ind(0,1)\"\nk = \"2*ind(0,1)\"\n[output]\nformat = \"csv\"\npath = \"out.csv\"\n[sweep]\nre = [-1.0, 1.0]\nim = [0.0, 1.0]\nstep = 0.5\n".into(),
            "[scenario]\nname = \"potsdam\"\nrho = \"inf\"\n[grid]\nn = 256\nr = 50.0\n".into(),
        ];
        for t in texts {
            let c = parse_config(&t).unwrap();
            assert_eq!(parse_config(&c.to_toml()).unwrap(), c);
        }
    }

    #[test]
    fn schrodinger_validation() {
        let t = "[scenario]\nname = \"halfline_schrodinger\"\nh = \"1-1i\"\nperturbation = \"multiplication\"\nv = \"ind(0,1)\"\nk = \"0\"\n";
        let e = parse_config(t).unwrap_err();
        assert_eq!(e.line, 3);
        let t = "[scenario]\nname = \"halfline_schrodinger\"\nh = \"1i\"\nperturbation = \"rank_one\"\nalpha = 1.0\nphi = \"sqrt(2)*exp(-x)\"\n";
        assert!(parse_config(t).unwrap_err().message.contains("lambda"));
    }
}
