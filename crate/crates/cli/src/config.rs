//! Run configuration: sectioned `key = value` text (TOML syntax).
//!
//! ```text
//! [domain]
//! nx = 32
//! b = 1.0
//!
//! [solver]
//! gamma = 1.0
//!
//! [forcing]
//! phi0 = [{ mode = [1], amplitude = 0.01 }]
//! ```

use std::path::{Path, PathBuf};

use serde::Deserialize;
use thiserror::Error;

use muskat_core::dn::{Dealias, DnOptions};
use muskat_core::evolution::Integrator;
use muskat_core::io;
use muskat_core::{DomainSpec, SurfaceField};

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("config parse error at line {line}, column {column}: {message}")]
    Parse {
        line: usize,
        column: usize,
        message: String,
    },
    #[error("invalid value for `{key}`: {message}")]
    Invalid { key: String, message: String },
    #[error("cannot read `{path}`: {message}")]
    File { path: PathBuf, message: String },
}

fn invalid(key: &str, message: impl ToString) -> ConfigError {
    ConfigError::Invalid {
        key: key.to_string(),
        message: message.to_string(),
    }
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    domain: RawDomain,
    solver: RawSolver,
    #[serde(default)]
    forcing: RawForcing,
    #[serde(default)]
    evolution: RawEvolution,
    #[serde(default)]
    output: RawOutput,
    #[serde(default)]
    linear: RawLinear,
    #[serde(default)]
    norms: RawNorms,
    #[serde(default)]
    dn: RawDn,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawDomain {
    #[serde(default = "default_d")]
    d: usize,
    nx: usize,
    #[serde(default = "default_nz")]
    nz: usize,
    #[serde(default = "default_b")]
    b: f64,
}

fn default_d() -> usize {
    1
}
fn default_nz() -> usize {
    65
}
fn default_b() -> f64 {
    1.0
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawSolver {
    gamma: f64,
    #[serde(default = "default_s")]
    s: f64,
    #[serde(default = "default_tol")]
    tol: f64,
    #[serde(default = "default_max_iter")]
    max_iter: usize,
    #[serde(default = "default_true")]
    dealias: bool,
    #[serde(default = "default_dn_tol")]
    dn_tol: f64,
    #[serde(default = "default_dn_max_iter")]
    dn_max_iter: usize,
    #[serde(default)]
    threads: usize,
}

fn default_s() -> f64 {
    2.5
}
fn default_tol() -> f64 {
    1e-10
}
fn default_max_iter() -> usize {
    100
}
fn default_true() -> bool {
    true
}
fn default_dn_tol() -> f64 {
    1e-12
}
fn default_dn_max_iter() -> usize {
    200
}

/// A list of cosine modes or a path to a field file.
#[derive(Debug, Clone, Deserialize)]
#[serde(untagged)]
pub enum FieldSource {
    Modes(Vec<ModeTerm>),
    File(PathBuf),
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModeTerm {
    pub mode: Vec<i64>,
    pub amplitude: f64,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawForcing {
    phi0: Option<FieldSource>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawEvolution {
    dt: Option<f64>,
    t_final: Option<f64>,
    integrator: Option<Integrator>,
    f0: Option<FieldSource>,
    eta_star: Option<FieldSource>,
    #[serde(default = "default_true")]
    nonlinear: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Json,
    Csv,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawOutput {
    directory: Option<PathBuf>,
    formats: Option<Vec<Format>>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawLinear {
    data: Option<PathBuf>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawNorms {
    field: Option<FieldSource>,
    s: Option<f64>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawDn {
    eta: Option<FieldSource>,
    f: Option<FieldSource>,
    seed: Option<u64>,
}

#[derive(Debug, Clone)]
pub struct SolverSettings {
    pub gamma: f64,
    pub s: f64,
    pub tol: f64,
    pub max_iter: usize,
    pub dealias: bool,
    pub dn_tol: f64,
    pub dn_max_iter: usize,
    /// 0 lets the thread pool pick.
    pub threads: usize,
}

impl SolverSettings {
    pub fn dn_options(&self) -> DnOptions {
        DnOptions {
            tol: self.dn_tol,
            max_iter: self.dn_max_iter,
            dealias: if self.dealias {
                Dealias::TwoThirds
            } else {
                Dealias::Off
            },
            ..DnOptions::default()
        }
    }
}

#[derive(Debug, Clone)]
pub struct EvolutionSettings {
    pub dt: f64,
    pub t_final: f64,
    pub integrator: Integrator,
    pub f0: Option<SurfaceField>,
    pub eta_star: Option<SurfaceField>,
    pub nonlinear: bool,
}

#[derive(Debug, Clone)]
pub struct OutputSettings {
    pub directory: PathBuf,
    pub formats: Vec<Format>,
}

impl OutputSettings {
    pub fn wants(&self, f: Format) -> bool {
        self.formats.contains(&f)
    }
}

#[derive(Debug, Clone)]
pub struct RunConfig {
    pub spec: DomainSpec,
    pub solver: SolverSettings,
    pub phi0: SurfaceField,
    pub evolution: EvolutionSettings,
    pub output: OutputSettings,
    pub linear_data: Option<PathBuf>,
    pub norms_field: Option<SurfaceField>,
    pub norms_s: f64,
    pub dn_eta: Option<SurfaceField>,
    pub dn_f: Option<SurfaceField>,
    pub seed: u64,
}

/// Parse with relative paths resolved against the working directory.
pub fn parse_config(text: &str) -> Result<RunConfig, ConfigError> {
    parse_config_in(text, Path::new("."))
}

pub fn parse_config_file(path: &Path) -> Result<RunConfig, ConfigError> {
    let text = std::fs::read_to_string(path).map_err(|e| ConfigError::File {
        path: path.to_path_buf(),
        message: e.to_string(),
    })?;
    let base = path.parent().unwrap_or(Path::new("."));
    parse_config_in(&text, base)
}

fn line_col(text: &str, offset: usize) -> (usize, usize) {
    let before = &text[..offset.min(text.len())];
    let line = before.matches('\n').count() + 1;
    let column = before.len() - before.rfind('\n').map_or(0, |i| i + 1) + 1;
    (line, column)
}

pub fn parse_config_in(text: &str, base: &Path) -> Result<RunConfig, ConfigError> {
    let raw: RawConfig = toml::from_str(text).map_err(|e| {
        let (line, column) = e.span().map_or((0, 0), |s| line_col(text, s.start));
        ConfigError::Parse {
            line,
            column,
            message: e.message().to_string(),
        }
    })?;

    let d = &raw.domain;
    let spec = DomainSpec::new(d.d, d.nx, d.nz, d.b).map_err(|e| invalid("domain", e))?;

    let s = &raw.solver;
    if !s.gamma.is_finite() {
        return Err(invalid("solver.gamma", "must be finite"));
    }
    if !(s.tol > 0.0) {
        return Err(invalid("solver.tol", "must be > 0"));
    }
    if !(s.dn_tol > 0.0) {
        return Err(invalid("solver.dn_tol", "must be > 0"));
    }
    if !(s.s >= 0.0) {
        return Err(invalid("solver.s", "must be >= 0"));
    }
    if s.max_iter == 0 || s.dn_max_iter == 0 {
        return Err(invalid("solver.max_iter", "iteration limits must be positive"));
    }
    let solver = SolverSettings {
        gamma: s.gamma,
        s: s.s,
        tol: s.tol,
        max_iter: s.max_iter,
        dealias: s.dealias,
        dn_tol: s.dn_tol,
        dn_max_iter: s.dn_max_iter,
        threads: s.threads,
    };

    let load = |key: &str, src: &Option<FieldSource>| -> Result<Option<SurfaceField>, ConfigError> {
        src.as_ref()
            .map(|src| build_field(key, src, spec, base))
            .transpose()
    };
    let phi0 = load("forcing.phi0", &raw.forcing.phi0)?.unwrap_or_else(|| SurfaceField::zeros(spec));

    let e = &raw.evolution;
    let dt = e.dt.unwrap_or(0.05 / solver.gamma.abs().max(1.0));
    if !(dt > 0.0) {
        return Err(invalid("evolution.dt", "must be > 0"));
    }
    let t_final = e.t_final.unwrap_or(20.0);
    if !(t_final >= 0.0) {
        return Err(invalid("evolution.t_final", "must be >= 0"));
    }
    let evolution = EvolutionSettings {
        dt,
        t_final,
        integrator: e.integrator.unwrap_or_default(),
        f0: load("evolution.f0", &e.f0)?,
        eta_star: load("evolution.eta_star", &e.eta_star)?,
        nonlinear: e.nonlinear,
    };

    let output = OutputSettings {
        directory: raw
            .output
            .directory
            .map(|p| base.join(p))
            .unwrap_or_else(|| PathBuf::from("out")),
        formats: raw.output.formats.unwrap_or_else(|| vec![Format::Json, Format::Csv]),
    };

    let linear_data = match raw.linear.data {
        Some(p) => {
            let p = base.join(p);
            if !p.is_file() {
                return Err(invalid("linear.data", format!("no such file {}", p.display())));
            }
            Some(p)
        }
        None => None,
    };

    Ok(RunConfig {
        spec,
        solver,
        phi0,
        evolution,
        output,
        linear_data,
        norms_field: load("norms.field", &raw.norms.field)?,
        norms_s: raw.norms.s.unwrap_or(s.s),
        dn_eta: load("dn.eta", &raw.dn.eta)?,
        dn_f: load("dn.f", &raw.dn.f)?,
        seed: raw.dn.seed.unwrap_or(1),
    })
}

/// `Σ amplitude · cos(mode · x)`.
pub fn field_from_modes(
    key: &str,
    terms: &[ModeTerm],
    spec: DomainSpec,
) -> Result<SurfaceField, ConfigError> {
    let mut out = SurfaceField::zeros(spec);
    for t in terms {
        if t.mode.len() != spec.d() {
            return Err(invalid(
                key,
                format!("mode {:?} has {} entries, domain has d = {}", t.mode, t.mode.len(), spec.d()),
            ));
        }
        let c = SurfaceField::cosine(spec, &t.mode, t.amplitude).map_err(|e| invalid(key, e))?;
        out = &out + &c;
    }
    Ok(out)
}

fn build_field(
    key: &str,
    src: &FieldSource,
    spec: DomainSpec,
    base: &Path,
) -> Result<SurfaceField, ConfigError> {
    match src {
        FieldSource::Modes(terms) => field_from_modes(key, terms, spec),
        FieldSource::File(p) => {
            let path = base.join(p);
            let f = io::load_surface(&path).map_err(|e| ConfigError::File {
                path: path.clone(),
                message: e.to_string(),
            })?;
            let (a, b) = (f.spec(), &spec);
            if a.d() != b.d() || a.nx() != b.nx() || a.b() != b.b() {
                return Err(invalid(key, format!("field in {} is on a different domain", path.display())));
            }
            SurfaceField::from_coeffs(spec, f.into_coeffs()).map_err(|e| invalid(key, e))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_complex::Complex64;

    const MINIMAL: &str = "[domain]\nnx = 16\n\n[solver]\ngamma = 1.0\n";

    #[test]
    fn minimal_config_defaults() {
        let c = parse_config(MINIMAL).unwrap();
        assert_eq!(c.solver.tol, 1e-10);
        assert_eq!(c.spec.nz(), 65);
        assert_eq!(c.evolution.dt, 0.05);
        assert_eq!(c.evolution.t_final, 20.0);
        assert_eq!(c.solver.s, 2.5);
        assert_eq!(c.phi0.l2_norm(), 0.0);
        assert_eq!(c.output.formats, vec![Format::Json, Format::Csv]);
    }

    #[test]
    fn unknown_key_is_named() {
        let err = parse_config(&format!("{MINIMAL}tolerance = 3\n")).unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("tolerance"), "{msg}");
        assert!(matches!(err, ConfigError::Parse { line: 6, .. }), "{err:?}");
    }

    #[test]
    fn phi0_modes() {
        let c = parse_config(&format!(
            "{MINIMAL}[forcing]\nphi0 = [{{ mode = [1], amplitude = 0.01 }}]\n"
        ))
        .unwrap();
        assert_eq!(c.phi0.coeff(&[1]).unwrap(), Complex64::new(0.005, 0.0));
        assert_eq!(c.phi0.coeff(&[-1]).unwrap(), Complex64::new(0.005, 0.0));
    }

    #[test]
    fn bad_mode_rejected() {
        let err = parse_config(&format!(
            "{MINIMAL}[forcing]\nphi0 = [{{ mode = [1, 2], amplitude = 0.01 }}]\n"
        ))
        .unwrap_err();
        assert!(err.to_string().contains("forcing.phi0"));
        let err = parse_config(&format!(
            "{MINIMAL}[forcing]\nphi0 = [{{ mode = [40], amplitude = 0.01 }}]\n"
        ))
        .unwrap_err();
        assert!(err.to_string().contains("forcing.phi0"));
    }

    #[test]
    fn missing_gamma_and_bad_values() {
        assert!(parse_config("[domain]\nnx = 16\n[solver]\n").unwrap_err().to_string().contains("gamma"));
        let err = parse_config(&format!("{MINIMAL}[evolution]\ndt = -1.0\n")).unwrap_err();
        assert!(err.to_string().contains("evolution.dt"));
        assert!(parse_config("[domain]\nnx = 15\n[solver]\ngamma = 0.0\n").is_err());
    }

    #[test]
    fn syntax_error_has_position() {
        let err = parse_config("[domain]\nnx = = 4\n").unwrap_err();
        assert!(matches!(err, ConfigError::Parse { line: 2, .. }), "{err:?}");
    }

    #[test]
    fn dt_default_scales_with_speed() {
        let c = parse_config("[domain]\nnx = 16\n[solver]\ngamma = 4.0\n").unwrap();
        assert_eq!(c.evolution.dt, 0.0125);
    }
}
