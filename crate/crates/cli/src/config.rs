//! Experiment configuration: a TOML document validated before any compute.

use greenlab_core::analysis::SweepMode;
use greenlab_core::kernel::{Coefficient, KernelFamily, KernelSpec};
use greenlab_core::lattice::{Backend, Shape};
use greenlab_core::solve::{Preconditioner, SolveConfig};
use serde::Deserialize;
use sha2::{Digest, Sha256};
use std::fmt;
use std::ops::Range;
use std::path::Path;
use toml::Spanned;

/// Malformed or inconsistent configuration, with the source position when known.
#[derive(Debug, Clone, PartialEq)]
pub struct ConfigError {
    pub origin: String,
    pub position: Option<(usize, usize)>,
    pub message: String,
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.position {
            Some((line, col)) => write!(f, "{}:{line}:{col}: {}", self.origin, self.message),
            None => write!(f, "{}: {}", self.origin, self.message),
        }
    }
}

impl std::error::Error for ConfigError {}

/// One-based line and column of a byte offset.
fn line_col(text: &str, offset: usize) -> (usize, usize) {
    let before = &text[..offset.min(text.len())];
    let line = before.matches('\n').count() + 1;
    let col = before.rsplit('\n').next().map_or(0, |l| l.chars().count()) + 1;
    (line, col)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FamilyName {
    AlphaStable,
    Cone,
    AnnulusUnion,
    BoundedCoeff,
    Corner,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CoefficientKind {
    Constant,
    Oscillating,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct KernelConfig {
    pub family: FamilyName,
    pub alpha: Spanned<f64>,
    #[serde(default = "default_dim")]
    pub dim: Spanned<usize>,
    #[serde(default)]
    pub smoke_test: bool,
    pub aperture: Option<Spanned<f64>>,
    pub axis: Option<Vec<f64>>,
    pub ratio: Option<f64>,
    pub ball_fraction: Option<f64>,
    pub coefficient: Option<CoefficientKind>,
    pub value: Option<f64>,
    pub lambda: Option<f64>,
    pub frequency: Option<f64>,
    pub b: Option<f64>,
}

fn default_dim() -> Spanned<usize> {
    Spanned::new(0..0, 3)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ShapeName {
    Ball,
    Box,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DomainConfig {
    pub shape: ShapeName,
    pub center: Option<Vec<f64>>,
    pub radius: Option<f64>,
    pub lo: Option<Vec<f64>>,
    pub hi: Option<Vec<f64>>,
    pub h: Spanned<f64>,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SourceConfig {
    pub y0: Option<Vec<f64>>,
    pub rho: Option<Spanned<f64>>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BackendName {
    #[default]
    Auto,
    Dense,
    Fft,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PreconditionerName {
    None,
    #[default]
    Diagonal,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolverConfig {
    #[serde(default = "default_tol")]
    pub tol: Spanned<f64>,
    #[serde(default = "default_max_iter")]
    pub max_iter: usize,
    #[serde(default)]
    pub preconditioner: PreconditionerName,
    #[serde(default)]
    pub backend: BackendName,
}

fn default_tol() -> Spanned<f64> {
    Spanned::new(0..0, 1e-10)
}

fn default_max_iter() -> usize {
    5000
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig {
            tol: default_tol(),
            max_iter: default_max_iter(),
            preconditioner: PreconditionerName::default(),
            backend: BackendName::default(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModeName {
    #[default]
    Solve,
    Oracle,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepConfig {
    #[serde(default = "default_alphas")]
    pub alphas: Spanned<Vec<f64>>,
    #[serde(default)]
    pub mode: ModeName,
    #[serde(default = "default_harnack_m")]
    pub harnack_m: f64,
}

fn default_alphas() -> Spanned<Vec<f64>> {
    Spanned::new(0..0, vec![1.2, 1.5, 1.8, 1.95])
}

fn default_harnack_m() -> f64 {
    4.0
}

impl Default for SweepConfig {
    fn default() -> Self {
        SweepConfig {
            alphas: default_alphas(),
            mode: ModeName::default(),
            harnack_m: default_harnack_m(),
        }
    }
}

/// Pass/fail thresholds; defaults are the acceptance values.
#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Budgets {
    pub slope_tol: f64,
    pub symmetry_factor: f64,
    pub oracle_rel_error: f64,
    /// Oracle-mode sweeps: `C_upper` against the limit coefficient.
    pub limit_rel_error: f64,
    pub spread: f64,
    pub quasinorm_spread: f64,
    pub u1: Option<f64>,
    pub u2: Option<f64>,
    pub ujs: Option<f64>,
    pub levy: Option<f64>,
}

impl Default for Budgets {
    fn default() -> Self {
        Budgets {
            slope_tol: 0.15,
            symmetry_factor: 10.0,
            oracle_rel_error: 0.15,
            limit_rel_error: 0.10,
            spread: 5.0,
            quasinorm_spread: 3.0,
            u1: None,
            u2: None,
            ujs: None,
            levy: None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Format {
    Csv,
    Json,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputConfig {
    pub directory: Option<String>,
    #[serde(default = "default_formats")]
    pub formats: Vec<Format>,
}

fn default_formats() -> Vec<Format> {
    vec![Format::Csv, Format::Json]
}

impl Default for OutputConfig {
    fn default() -> Self {
        OutputConfig {
            directory: None,
            formats: default_formats(),
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SamplingConfig {
    pub seed: u64,
    /// Base points for the kernel condition checks.
    pub points: usize,
    /// Random point pairs for the symmetry check.
    pub pairs: usize,
}

impl Default for SamplingConfig {
    fn default() -> Self {
        SamplingConfig {
            seed: 1,
            points: 64,
            pairs: 5,
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct IneqConfig {
    pub seed: u64,
    pub samples: usize,
}

impl Default for IneqConfig {
    fn default() -> Self {
        IneqConfig {
            seed: 20240601,
            samples: 100_000,
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub kernel: KernelConfig,
    pub domain: DomainConfig,
    #[serde(default)]
    pub source: SourceConfig,
    #[serde(default)]
    pub solver: SolverConfig,
    #[serde(default)]
    pub sweep: SweepConfig,
    #[serde(default)]
    pub budgets: Budgets,
    #[serde(default)]
    pub outputs: OutputConfig,
    #[serde(default)]
    pub sampling: SamplingConfig,
    #[serde(default)]
    pub ineq: IneqConfig,
}

/// A parsed configuration together with the resolved core objects.
#[derive(Debug, Clone)]
pub struct Experiment {
    pub raw: ExperimentConfig,
    pub sha256: String,
    pub kernel: KernelSpec,
    pub shape: Shape,
    pub h: f64,
    pub y0: Vec<f64>,
    pub rho: f64,
    pub solve: SolveConfig,
    pub backend: Backend,
    pub alphas: Vec<f64>,
    pub mode: SweepMode,
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes)
        .iter()
        .map(|b| format!("{b:02x}"))
        .collect()
}

pub fn load(path: &Path) -> Result<Experiment, ConfigError> {
    let origin = path.display().to_string();
    let text = std::fs::read_to_string(path).map_err(|e| ConfigError {
        origin: origin.clone(),
        position: None,
        message: format!("cannot read configuration: {e}"),
    })?;
    parse(&text, &origin)
}

/// Parses and validates; `origin` names the source in diagnostics.
pub fn parse(text: &str, origin: &str) -> Result<Experiment, ConfigError> {
    let raw: ExperimentConfig = toml::from_str(text).map_err(|e| ConfigError {
        origin: origin.to_string(),
        position: e.span().map(|s| line_col(text, s.start)),
        message: e.message().to_string(),
    })?;
    let fail = |span: Option<Range<usize>>, message: String| ConfigError {
        origin: origin.to_string(),
        position: span.filter(|s| s.end > 0).map(|s| line_col(text, s.start)),
        message,
    };
    let kernel = kernel_spec(&raw.kernel).map_err(|(span, m)| fail(span, m))?;
    kernel
        .validate()
        .map_err(|e| fail(Some(raw.kernel.alpha.span()), format!("kernel: {e}")))?;
    let dim = kernel.dim;
    let shape = shape(&raw.domain, dim).map_err(|m| fail(None, format!("domain: {m}")))?;
    let h = *raw.domain.h.get_ref();
    if !(h > 0.0 && h.is_finite()) {
        return Err(fail(
            Some(raw.domain.h.span()),
            format!("domain: h must be positive, got {h}"),
        ));
    }
    let y0 = match &raw.source.y0 {
        Some(v) if v.len() != dim => {
            return Err(fail(None, format!("source: y0 needs {dim} coordinates")))
        }
        Some(v) => v.clone(),
        None => match &shape {
            Shape::Ball { center, .. } => center.clone(),
            _ => {
                let (lo, hi) = shape.bounding_box();
                lo.iter().zip(&hi).map(|(a, b)| 0.5 * (a + b)).collect()
            }
        },
    };
    let rho = raw.source.rho.as_ref().map_or(2.0 * h, |r| *r.get_ref());
    if rho < h * (1.0 - 1e-12) {
        let span = raw.source.rho.as_ref().map(|r| r.span());
        return Err(fail(
            span,
            format!("source: rho = {rho} must be at least h = {h}"),
        ));
    }
    let solve = SolveConfig {
        tol: *raw.solver.tol.get_ref(),
        max_iter: raw.solver.max_iter,
        preconditioner: match raw.solver.preconditioner {
            PreconditionerName::None => Preconditioner::None,
            PreconditionerName::Diagonal => Preconditioner::Diagonal,
        },
    };
    solve
        .validate()
        .map_err(|e| fail(Some(raw.solver.tol.span()), format!("solver: {e}")))?;
    let backend = match raw.solver.backend {
        BackendName::Auto => Backend::Auto,
        BackendName::Dense => Backend::Dense,
        BackendName::Fft => Backend::Fft,
    };
    let alphas = raw.sweep.alphas.get_ref().clone();
    let alpha_span = Some(raw.sweep.alphas.span());
    if alphas.is_empty() {
        return Err(fail(alpha_span, "sweep: alphas must not be empty".into()));
    }
    if alphas.windows(2).any(|w| !(w[1] > w[0]))
        || alphas.iter().any(|a| !(*a >= 1.0 && *a <= 1.999))
    {
        return Err(fail(
            alpha_span,
            "sweep: alphas must be strictly increasing within [1, 1.999]".into(),
        ));
    }
    if !(raw.sweep.harnack_m > 2.0) {
        return Err(fail(
            None,
            format!(
                "sweep: harnack_m must exceed 2, got {}",
                raw.sweep.harnack_m
            ),
        ));
    }
    let mode = match raw.sweep.mode {
        ModeName::Solve => SweepMode::Solve,
        ModeName::Oracle => SweepMode::Oracle,
    };
    Ok(Experiment {
        sha256: sha256_hex(text.as_bytes()),
        raw,
        kernel,
        shape,
        h,
        y0,
        rho,
        solve,
        backend,
        alphas,
        mode,
    })
}

type Located = (Option<Range<usize>>, String);

fn require<T: Copy>(v: Option<T>, family: &str, key: &str) -> Result<T, Located> {
    v.ok_or_else(|| (None, format!("kernel: family {family} needs `{key}`")))
}

fn kernel_spec(k: &KernelConfig) -> Result<KernelSpec, Located> {
    let dim = *k.dim.get_ref();
    let family = match k.family {
        FamilyName::AlphaStable => KernelFamily::AlphaStable,
        FamilyName::Cone => {
            let aperture = k.aperture.as_ref().map(|a| *a.get_ref());
            let aperture = require(aperture, "cone", "aperture")?;
            let axis = k.axis.clone().unwrap_or_else(|| {
                let mut e = vec![0.0; dim];
                if dim > 0 {
                    e[dim - 1] = 1.0;
                }
                e
            });
            KernelFamily::Cone { aperture, axis }
        }
        FamilyName::AnnulusUnion => KernelFamily::AnnulusUnion {
            ratio: require(k.ratio, "annulus_union", "ratio")?,
            ball_fraction: require(k.ball_fraction, "annulus_union", "ball_fraction")?,
        },
        FamilyName::BoundedCoeff => {
            let coefficient = match require(k.coefficient, "bounded_coeff", "coefficient")? {
                CoefficientKind::Constant => {
                    Coefficient::Constant(require(k.value, "bounded_coeff", "value")?)
                }
                CoefficientKind::Oscillating => Coefficient::Oscillating {
                    lambda: require(k.lambda, "bounded_coeff", "lambda")?,
                    frequency: require(k.frequency, "bounded_coeff", "frequency")?,
                },
            };
            KernelFamily::BoundedCoeff { coefficient }
        }
        FamilyName::Corner => KernelFamily::Corner {
            b: require(k.b, "corner", "b")?,
        },
    };
    let mut spec = KernelSpec::new(family, *k.alpha.get_ref(), dim);
    spec.smoke_test = k.smoke_test;
    Ok(spec)
}

fn shape(d: &DomainConfig, dim: usize) -> Result<Shape, String> {
    match d.shape {
        ShapeName::Ball => {
            let center = d.center.clone().unwrap_or_else(|| vec![0.0; dim]);
            if center.len() != dim {
                return Err(format!("center needs {dim} coordinates"));
            }
            let radius = d.radius.unwrap_or(1.0);
            if !(radius > 0.0 && radius.is_finite()) {
                return Err(format!("radius must be positive, got {radius}"));
            }
            Ok(Shape::Ball { center, radius })
        }
        ShapeName::Box => {
            let (lo, hi) = match (&d.lo, &d.hi) {
                (Some(lo), Some(hi)) => (lo.clone(), hi.clone()),
                _ => return Err("box needs `lo` and `hi`".into()),
            };
            if lo.len() != dim || hi.len() != dim {
                return Err(format!("box corners need {dim} coordinates"));
            }
            if lo.iter().zip(&hi).any(|(a, b)| !(b > a)) {
                return Err("box needs lo < hi on every axis".into());
            }
            Ok(Shape::Box { lo, hi })
        }
    }
}
