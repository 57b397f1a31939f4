//! Run configuration: JSON schema, defaults and validation.

use besselbarrier::fd::FdGrid;
use besselbarrier::git::{PsiCoefficient, SeriesConfig, WeberOrrConfig};
use besselbarrier::bp::BpConfig;
use besselbarrier::models::{BarrierSpec, CevModel, CirModel, TimeCurve};
use serde::{Deserialize, Serialize};
use std::fmt;
use std::path::{Path, PathBuf};

/// Time-dependent coefficient.  Times in years.
#[derive(Debug, Clone, PartialEq, Deserialize, Serialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum CurveConfig {
    Constant(f64),
    /// `level + slope (t - offset)`.
    Linear { level: f64, slope: f64, offset: f64 },
    /// `scale sqrt(t + offset)`.
    SqrtAffine { scale: f64, offset: f64 },
    PiecewiseLinear { times: Vec<f64>, values: Vec<f64> },
}

impl CurveConfig {
    pub fn curve(&self) -> TimeCurve {
        match self {
            CurveConfig::Constant(v) => TimeCurve::Constant(*v),
            CurveConfig::Linear { level, slope, offset } => TimeCurve::Linear { level: *level, slope: *slope, offset: *offset },
            CurveConfig::SqrtAffine { scale, offset } => TimeCurve::SqrtAffine { scale: *scale, offset: *offset },
            CurveConfig::PiecewiseLinear { times, values } => {
                TimeCurve::PiecewiseLinear { times: times.clone(), values: values.clone() }
            }
        }
    }
}

#[derive(Debug, Clone, Deserialize, Serialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum ModelConfig {
    /// `dS = (r - q) S dt + sigma S^{beta + 1} dW`.
    Cev { r: CurveConfig, q: CurveConfig, sigma: CurveConfig, beta: f64 },
    /// `dr = kappa (theta - r) dt + sigma sqrt(r) dW` with `theta = m sigma^2 / (2 kappa)`;
    /// options are written on the bond maturing at `bond_expiry`.
    Cir { kappa: CurveConfig, sigma: CurveConfig, m: f64, bond_expiry: f64 },
}

#[derive(Debug, Clone, Deserialize, Serialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum BarrierConfig {
    UpAndOut { upper: CurveConfig },
    DownAndOut { lower: CurveConfig },
    Double { lower: CurveConfig, upper: CurveConfig },
    /// Knock-out when the bond price reaches `level` (CIR only).
    BondFloor { level: CurveConfig },
}

impl BarrierConfig {
    pub fn spec(&self) -> BarrierSpec {
        match self {
            BarrierConfig::UpAndOut { upper } => BarrierSpec::up_and_out(upper.curve()),
            BarrierConfig::DownAndOut { lower } => BarrierSpec::down_and_out(lower.curve()),
            BarrierConfig::Double { lower, upper } => BarrierSpec::double(lower.curve(), upper.curve()),
            BarrierConfig::BondFloor { level } => BarrierSpec::bond_floor(level.curve()),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Deserialize, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    Bp,
    Fd,
    Git,
}

impl Method {
    pub fn name(self) -> &'static str {
        match self {
            Method::Bp => "bp",
            Method::Fd => "fd",
            Method::Git => "git",
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, Copy, Deserialize, Serialize)]
#[serde(default, deny_unknown_fields)]
pub struct BpParams {
    pub m: usize,
    pub z_quad_tol: f64,
}

impl Default for BpParams {
    fn default() -> Self {
        let d = BpConfig::default();
        BpParams { m: d.m, z_quad_tol: d.z_quad_tol }
    }
}

impl BpParams {
    pub fn config(&self) -> BpConfig {
        BpConfig { m: self.m, z_quad_tol: self.z_quad_tol, ..Default::default() }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Coefficient {
    Mu,
    MuPlusNu,
}

#[derive(Debug, Clone, Copy, Deserialize, Serialize)]
#[serde(default, deny_unknown_fields)]
pub struct GitParams {
    /// Volterra grid size.
    pub m: usize,
    /// Series terms (bounded domain).
    pub n: usize,
    /// Spectral cut `P = p_scale / sqrt(t)` (semi-infinite domain).
    pub p_scale: f64,
    /// Fixed spectral cut overriding `p_scale`.
    pub p_max: Option<f64>,
    pub p_nodes: usize,
    /// Quadratic grading of the time grid towards `tau = 0`.
    pub graded: bool,
    pub pade: bool,
    pub theta_threshold: f64,
    pub coefficient: Coefficient,
    pub slow_boundary_shortcut: bool,
}

impl Default for GitParams {
    fn default() -> Self {
        let w = WeberOrrConfig::default();
        let s = SeriesConfig::default();
        GitParams {
            m: w.m,
            n: s.n,
            p_scale: w.p_scale,
            p_max: w.p_max,
            p_nodes: w.p_nodes,
            graded: false,
            pade: s.pade,
            theta_threshold: s.theta_threshold,
            coefficient: Coefficient::Mu,
            slow_boundary_shortcut: false,
        }
    }
}

impl GitParams {
    pub fn weber_orr(&self) -> WeberOrrConfig {
        WeberOrrConfig {
            p_max: self.p_max,
            p_scale: self.p_scale,
            p_nodes: self.p_nodes,
            m: self.m,
            slow_boundary_shortcut: self.slow_boundary_shortcut,
            graded: self.graded,
        }
    }

    pub fn series(&self) -> SeriesConfig {
        SeriesConfig {
            n: self.n,
            pade: self.pade,
            theta_threshold: self.theta_threshold,
            m: self.m,
            coefficient: match self.coefficient {
                Coefficient::Mu => PsiCoefficient::Mu,
                Coefficient::MuPlusNu => PsiCoefficient::MuPlusNu,
            },
            graded: self.graded,
        }
    }
}

#[derive(Debug, Clone, Copy, Deserialize, Serialize)]
#[serde(default, deny_unknown_fields)]
pub struct FdParams {
    pub space_nodes: usize,
    pub time_steps: usize,
    pub rannacher_steps: usize,
    pub clustering: f64,
}

impl Default for FdParams {
    fn default() -> Self {
        let g = FdGrid::default();
        FdParams {
            space_nodes: g.space_nodes,
            time_steps: g.time_steps,
            rannacher_steps: g.rannacher_steps,
            clustering: g.clustering,
        }
    }
}

impl FdParams {
    pub fn grid(&self) -> FdGrid {
        FdGrid {
            space_nodes: self.space_nodes,
            time_steps: self.time_steps,
            rannacher_steps: self.rannacher_steps,
            clustering: self.clustering,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Deserialize, Serialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum Format {
    #[default]
    Csv,
    Json,
}

#[derive(Debug, Clone, Default, Deserialize, Serialize)]
#[serde(default, deny_unknown_fields)]
pub struct OutputConfig {
    pub path: Option<PathBuf>,
    pub format: Format,
}

fn default_methods() -> Vec<Method> {
    vec![Method::Bp]
}

/// Whole run.  Spot and strikes in currency units (CIR: spot is the short
/// rate, strikes are bond prices).
#[derive(Debug, Clone, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub model: ModelConfig,
    pub barrier: BarrierConfig,
    pub strikes: Vec<f64>,
    pub maturities: Vec<f64>,
    pub spot: f64,
    #[serde(default = "default_methods")]
    pub methods: Vec<Method>,
    #[serde(default)]
    pub bp: BpParams,
    #[serde(default)]
    pub git: GitParams,
    #[serde(default)]
    pub fd: FdParams,
    #[serde(default)]
    pub output: OutputConfig,
}

/// Built model handed to the pricers.
#[derive(Debug, Clone)]
pub enum Model {
    Cev(CevModel),
    Cir(CirModel),
}

#[derive(Debug)]
pub enum ConfigError {
    Io { path: PathBuf, source: std::io::Error },
    Parse { path: String, message: String },
    Invalid(Vec<String>),
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ConfigError::Io { path, source } => write!(f, "cannot read {}: {source}", path.display()),
            ConfigError::Parse { path, message } => write!(f, "config error at `{path}`: {message}"),
            ConfigError::Invalid(list) => {
                writeln!(f, "invalid config ({} problem{}):", list.len(), if list.len() == 1 { "" } else { "s" })?;
                for (i, e) in list.iter().enumerate() {
                    if i + 1 < list.len() {
                        writeln!(f, "  - {e}")?;
                    } else {
                        write!(f, "  - {e}")?;
                    }
                }
                Ok(())
            }
        }
    }
}

impl std::error::Error for ConfigError {}

pub fn parse_config(text: &str) -> Result<RunConfig, ConfigError> {
    let de = &mut serde_json::Deserializer::from_str(text);
    let cfg: RunConfig = serde_path_to_error::deserialize(de).map_err(|e| ConfigError::Parse {
        path: e.path().to_string(),
        message: e.inner().to_string(),
    })?;
    cfg.validate()?;
    Ok(cfg)
}

pub fn load_config(path: &Path) -> Result<RunConfig, ConfigError> {
    let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io { path: path.to_path_buf(), source })?;
    parse_config(&text)
}

fn check_curve(name: &str, c: &CurveConfig, errs: &mut Vec<String>) {
    if let Err(e) = c.curve().validate() {
        errs.push(format!("{name}: {e}"));
    }
}

impl RunConfig {
    pub fn build_model(&self) -> Result<Model, String> {
        match &self.model {
            ModelConfig::Cev { r, q, sigma, beta } => CevModel::new(r.curve(), q.curve(), sigma.curve(), *beta)
                .map(Model::Cev)
                .map_err(|e| format!("model: {e}")),
            ModelConfig::Cir { kappa, sigma, m, bond_expiry } => CirModel::new(kappa.curve(), sigma.curve(), *m, *bond_expiry)
                .map(Model::Cir)
                .map_err(|e| format!("model: {e}")),
        }
    }

    /// Check every invariant and report all violations together.
    pub fn validate(&self) -> Result<(), ConfigError> {
        let mut errs = Vec::new();
        match &self.model {
            ModelConfig::Cev { r, q, sigma, .. } => {
                check_curve("model.cev.r", r, &mut errs);
                check_curve("model.cev.q", q, &mut errs);
                check_curve("model.cev.sigma", sigma, &mut errs);
            }
            ModelConfig::Cir { kappa, sigma, .. } => {
                check_curve("model.cir.kappa", kappa, &mut errs);
                check_curve("model.cir.sigma", sigma, &mut errs);
            }
        }
        if self.methods.is_empty() {
            errs.push("methods: at least one of bp, git, fd is required".into());
        }
        let mut seen = self.methods.clone();
        seen.sort();
        seen.dedup();
        if seen.len() != self.methods.len() {
            errs.push("methods: duplicate entries".into());
        }
        if self.strikes.is_empty() {
            errs.push("strikes: must be non-empty".into());
        }
        if self.strikes.iter().any(|&k| !(k > 0.0) || !k.is_finite()) {
            errs.push("strikes: every strike must be positive and finite".into());
        }
        if self.maturities.is_empty() {
            errs.push("maturities: must be non-empty".into());
        }
        if self.maturities.iter().any(|&t| !(t > 0.0) || !t.is_finite()) {
            errs.push("maturities: every maturity must be positive and finite".into());
        }
        if !self.spot.is_finite() || self.spot < 0.0 {
            errs.push("spot: must be finite and non-negative".into());
        }
        if let Err(e) = self.bp.config().validate() {
            errs.push(format!("bp: {e}"));
        }
        if let Err(e) = self.git.weber_orr().validate() {
            errs.push(format!("git: {e}"));
        }
        if let Err(e) = self.git.series().validate() {
            errs.push(format!("git: {e}"));
        }
        if self.fd.space_nodes < 21 || self.fd.time_steps < 10 {
            errs.push("fd: space_nodes >= 21 and time_steps >= 10 are required".into());
        }
        if !(self.fd.clustering >= 0.0) || !self.fd.clustering.is_finite() {
            errs.push("fd: clustering must be finite and >= 0".into());
        }
        let barrier = self.barrier.spec();
        if let Err(e) = barrier.validate() {
            errs.push(format!("barrier: {e}"));
        }
        match (&self.model, &self.barrier) {
            (ModelConfig::Cev { .. }, BarrierConfig::BondFloor { .. }) => {
                errs.push("barrier: bond_floor applies to the cir model only".into())
            }
            (ModelConfig::Cir { .. }, b) if !matches!(b, BarrierConfig::BondFloor { .. }) => {
                errs.push("barrier: the cir model supports bond_floor barriers only".into())
            }
            _ => {}
        }
        if errs.is_empty() {
            match self.build_model() {
                Ok(model) => self.check_spot(&model, &mut errs),
                Err(e) => errs.push(e),
            }
        }
        if errs.is_empty() {
            Ok(())
        } else {
            Err(ConfigError::Invalid(errs))
        }
    }

    /// The spot must lie strictly inside the alive region at t = 0.
    fn check_spot(&self, model: &Model, errs: &mut Vec<String>) {
        let s = self.spot;
        let outside = |msg: String| format!("spot: {s} lies outside the alive region at t = 0 ({msg})");
        match (&self.barrier, model) {
            (BarrierConfig::UpAndOut { upper }, _) => {
                let h = upper.curve().value(0.0);
                if !(s < h) {
                    errs.push(outside(format!("upper barrier {h}")));
                }
            }
            (BarrierConfig::DownAndOut { lower }, _) => {
                let l = lower.curve().value(0.0);
                if !(s > l) {
                    errs.push(outside(format!("lower barrier {l}")));
                }
            }
            (BarrierConfig::Double { lower, upper }, _) => {
                let (l, h) = (lower.curve().value(0.0), upper.curve().value(0.0));
                if !(s > l && s < h) {
                    errs.push(outside(format!("barriers ({l}, {h})")));
                }
            }
            (BarrierConfig::BondFloor { level }, Model::Cir(m)) => {
                let lf = level.curve().value(0.0);
                match m.rate_barrier(lf, 0.0) {
                    Ok(l) if s > l => {}
                    Ok(l) => errs.push(outside(format!("rate barrier {l} implied by bond level {lf}"))),
                    Err(e) => errs.push(format!("barrier: {e}")),
                }
                if let Some(&t) = self.maturities.iter().find(|&&t| !(t < m.bond_expiry)) {
                    errs.push(format!("maturities: {t} must precede the bond expiry {}", m.bond_expiry));
                }
            }
            _ => {}
        }
    }
}
