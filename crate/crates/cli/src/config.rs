//! TOML experiment configuration.

use std::f64::consts::FRAC_PI_2;
use std::path::Path;

use anisolab::aniso::{AnisotropyVector, GridSpec, SectorSpec};
use anisolab::elliptic::{DifferentialOperatorSpec, ForcingConfig};
use anisolab::rbound::{BanachSpaceSpec, EstimatorMode, RBoundBudget};
use anisolab::symbol::{MatrixSymbol, PolyTerm, Polynomial, ProbeConfig, SymbolSpace, XProfile};
use anyhow::{bail, ensure, Context, Result};
use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use std::sync::Arc;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ExperimentKind {
    Rbound,
    SymbolCheck,
    Composition,
    Multiplier,
    Parametrix,
    ResolventRbound,
    Maxreg,
    Ellipticity,
}

impl ExperimentKind {
    pub const ALL: [ExperimentKind; 8] = [
        ExperimentKind::Rbound,
        ExperimentKind::SymbolCheck,
        ExperimentKind::Composition,
        ExperimentKind::Multiplier,
        ExperimentKind::Parametrix,
        ExperimentKind::ResolventRbound,
        ExperimentKind::Maxreg,
        ExperimentKind::Ellipticity,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            ExperimentKind::Rbound => "rbound",
            ExperimentKind::SymbolCheck => "symbol-check",
            ExperimentKind::Composition => "composition",
            ExperimentKind::Multiplier => "multiplier",
            ExperimentKind::Parametrix => "parametrix",
            ExperimentKind::ResolventRbound => "resolvent-rbound",
            ExperimentKind::Maxreg => "maxreg",
            ExperimentKind::Ellipticity => "ellipticity",
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub kind: ExperimentKind,
    pub seed: u64,
    pub name: Option<String>,
    pub operator: Option<OperatorConfig>,
    pub symbol: Option<SymbolConfig>,
    pub grid: Option<GridConfig>,
    pub sector: Option<SectorConfig>,
    pub probes: Option<ProbeConfig>,
    #[serde(default)]
    pub budget: BudgetConfig,
    pub rbound: Option<RBoundConfig>,
    pub symbol_check: Option<SymbolCheckConfig>,
    pub composition: Option<CompositionConfig>,
    pub multiplier: Option<MultiplierConfig>,
    pub parametrix: Option<ParametrixConfig>,
    pub resolvent: Option<ResolventConfig>,
    pub maxreg: Option<MaxRegConfig>,
    pub ellipticity: Option<EllipticityConfig>,
}

/// A parsed config together with the bytes it came from.
#[derive(Debug, Clone)]
pub struct LoadedConfig {
    pub config: ExperimentConfig,
    pub sha256: String,
    pub stem: String,
}

pub fn load(path: &Path) -> Result<LoadedConfig> {
    let text =
        std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    let config = parse(&text).with_context(|| format!("parsing {}", path.display()))?;
    let stem = path
        .file_stem()
        .and_then(|s| s.to_str())
        .unwrap_or("experiment")
        .to_string();
    Ok(LoadedConfig {
        config,
        sha256: crate::report::sha256_hex(text.as_bytes()),
        stem,
    })
}

pub fn parse(text: &str) -> Result<ExperimentConfig> {
    Ok(toml::from_str(text)?)
}

impl ExperimentConfig {
    pub fn operator(&self) -> Result<DifferentialOperatorSpec> {
        self.operator
            .as_ref()
            .context("missing [operator] section")?
            .build()
    }

    pub fn grid(&self) -> Result<GridSpec> {
        self.grid
            .as_ref()
            .context("missing [grid] section")?
            .build()
    }

    pub fn sector(&self) -> Result<SectorSpec> {
        self.sector.clone().unwrap_or_default().build()
    }

    pub fn probes(&self) -> ProbeConfig {
        let mut p = self.probes.clone().unwrap_or_default();
        if self.probes.is_none() {
            p.seed = self.seed;
        }
        p
    }

    pub fn budget(&self) -> RBoundBudget {
        self.budget.build(self.seed)
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(untagged)]
pub enum CoefConfig {
    Scalar(f64),
    Complex {
        re: f64,
        im: f64,
    },
    Matrix {
        re: Vec<Vec<f64>>,
        im: Option<Vec<Vec<f64>>>,
    },
}

impl CoefConfig {
    fn matrix(&self, m: usize) -> Result<DMatrix<Complex64>> {
        match self {
            CoefConfig::Scalar(v) => Ok(DMatrix::identity(m, m) * Complex64::new(*v, 0.0)),
            CoefConfig::Complex { re, im } => {
                Ok(DMatrix::identity(m, m) * Complex64::new(*re, *im))
            }
            CoefConfig::Matrix { re, im } => {
                let z = complex_matrix(re, im.as_ref())?;
                ensure!(
                    z.shape() == (m, m),
                    "coefficient is {:?}, expected {m}x{m}",
                    z.shape()
                );
                Ok(z)
            }
        }
    }
}

pub fn complex_matrix(re: &[Vec<f64>], im: Option<&Vec<Vec<f64>>>) -> Result<DMatrix<Complex64>> {
    let rows = re.len();
    ensure!(rows > 0, "empty matrix");
    let cols = re[0].len();
    ensure!(re.iter().all(|r| r.len() == cols), "ragged matrix rows");
    if let Some(im) = im {
        ensure!(
            im.len() == rows && im.iter().all(|r| r.len() == cols),
            "imaginary part has a different shape"
        );
    }
    Ok(DMatrix::from_fn(rows, cols, |i, j| {
        Complex64::new(re[i][j], im.map_or(0.0, |m| m[i][j]))
    }))
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TermConfig {
    pub alpha: Vec<u32>,
    #[serde(default)]
    pub lambda_power: u32,
    pub coef: CoefConfig,
    #[serde(default)]
    pub profile: XProfile,
}

impl TermConfig {
    fn build(&self, m: usize) -> Result<PolyTerm> {
        Ok(PolyTerm::new(
            self.coef.matrix(m)?,
            self.alpha.clone(),
            self.lambda_power,
            self.profile.clone(),
        ))
    }
}

/// `A = Σ a_α(x) D^α` with `ℓ'` and fiber dimension `m`.
#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OperatorConfig {
    pub ell: Vec<u32>,
    #[serde(default = "one")]
    pub m: usize,
    pub terms: Vec<TermConfig>,
}

fn one() -> usize {
    1
}

impl OperatorConfig {
    pub fn build(&self) -> Result<DifferentialOperatorSpec> {
        ensure!(
            self.terms.iter().all(|t| t.lambda_power == 0),
            "operator terms cannot carry powers of λ"
        );
        let terms = self
            .terms
            .iter()
            .map(|t| t.build(self.m))
            .collect::<Result<Vec<_>>>()?;
        Ok(DifferentialOperatorSpec::new(
            AnisotropyVector::new(self.ell.clone())?,
            self.m,
            terms,
        )?)
    }
}

/// Polynomial symbol `Σ c φ(x) ξ^α λ^k`.
#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SymbolConfig {
    pub ell: Vec<u32>,
    pub lambda_weight: Option<u32>,
    #[serde(default = "one")]
    pub m: usize,
    pub terms: Vec<TermConfig>,
}

impl SymbolConfig {
    pub fn space(&self) -> Result<SymbolSpace> {
        let ell = AnisotropyVector::new(self.ell.clone())?;
        Ok(match self.lambda_weight {
            Some(w) => SymbolSpace::with_lambda(ell, w)?,
            None => SymbolSpace::xi_only(ell),
        })
    }

    pub fn polynomial(&self) -> Result<Polynomial> {
        let terms = self
            .terms
            .iter()
            .map(|t| t.build(self.m))
            .collect::<Result<Vec<_>>>()?;
        Ok(Polynomial::new(terms, (self.m, self.m), self.ell.len())?)
    }

    /// The polynomial as a symbol of its anisotropic degree.
    pub fn symbol(&self) -> Result<MatrixSymbol> {
        let space = self.space()?;
        let lw = space.lambda_weight.unwrap_or(1);
        let poly = self.polynomial()?;
        let order = poly
            .terms()
            .iter()
            .map(|t| t.degree(&space.ell_xi, lw))
            .max()
            .unwrap_or(0) as f64;
        Ok(MatrixSymbol::new(space, order, Arc::new(poly)))
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridConfig {
    pub dim: usize,
    #[serde(default = "default_half_width")]
    pub half_width: f64,
    pub points: usize,
}

fn default_half_width() -> f64 {
    16.0
}

impl GridConfig {
    pub fn build(&self) -> Result<GridSpec> {
        Ok(GridSpec::new(self.dim, self.half_width, self.points)?)
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SectorConfig {
    pub half_angle: f64,
    pub min_radius: f64,
    pub r_min: f64,
    pub r_max: f64,
    pub radii: usize,
    pub angles: usize,
}

impl Default for SectorConfig {
    fn default() -> Self {
        Self {
            half_angle: FRAC_PI_2,
            min_radius: 1.0,
            r_min: 1e2,
            r_max: 1e4,
            radii: 5,
            angles: 5,
        }
    }
}

impl SectorConfig {
    pub fn build(&self) -> Result<SectorSpec> {
        Ok(SectorSpec::new(self.half_angle, self.min_radius)?
            .with_log_radii(self.r_min, self.r_max, self.radii)?
            .with_uniform_angles(self.angles)?)
    }

    /// Same sector with twice as many radii and angles (endpoints kept).
    pub fn refined(&self) -> Self {
        Self {
            radii: 2 * self.radii - 1,
            angles: 2 * self.angles - 1,
            ..self.clone()
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct BudgetConfig {
    pub n_max: usize,
    pub samples: usize,
    pub ascent_steps: usize,
    pub mode: EstimatorMode,
}

impl Default for BudgetConfig {
    fn default() -> Self {
        let b = RBoundBudget::default();
        Self {
            n_max: b.n_max,
            samples: b.samples,
            ascent_steps: b.ascent_steps,
            mode: b.mode,
        }
    }
}

impl BudgetConfig {
    pub fn build(&self, seed: u64) -> RBoundBudget {
        RBoundBudget {
            n_max: self.n_max,
            samples: self.samples,
            ascent_steps: self.ascent_steps,
            seed,
            mode: self.mode,
            warm_start: None,
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum SpaceConfig {
    Euclidean { dim: usize },
    Lp { dim: usize, p: f64 },
}

impl SpaceConfig {
    pub fn build(&self) -> Result<BanachSpaceSpec> {
        Ok(match *self {
            SpaceConfig::Euclidean { dim } => BanachSpaceSpec::euclidean(dim),
            SpaceConfig::Lp { dim, p } => BanachSpaceSpec::lp(dim, p)?,
        })
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MatrixConfig {
    pub re: Vec<Vec<f64>>,
    pub im: Option<Vec<Vec<f64>>>,
}

impl MatrixConfig {
    pub fn build(&self) -> Result<DMatrix<Complex64>> {
        complex_matrix(&self.re, self.im.as_ref())
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RBoundConfig {
    pub members: Vec<MatrixConfig>,
    pub x_space: SpaceConfig,
    pub y_space: SpaceConfig,
    #[serde(default = "two")]
    pub p: f64,
    /// Expected value, checked to `expect_tol` relative.
    pub expect: Option<f64>,
    #[serde(default = "default_expect_tol")]
    pub expect_tol: f64,
}

fn two() -> f64 {
    2.0
}

fn default_expect_tol() -> f64 {
    1e-9
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SymbolCheckConfig {
    /// Largest `|β|` of the derivatives checked.
    pub max_beta: u32,
    pub order_tol: f64,
    /// Allowed relative growth of R-seminorms when the probe counts double.
    pub saturation_tol: f64,
    pub homogeneity: bool,
}

impl Default for SymbolCheckConfig {
    fn default() -> Self {
        Self {
            max_beta: 2,
            order_tol: 0.25,
            saturation_tol: 0.02,
            homogeneity: true,
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CompositionConfig {
    pub a: SymbolConfig,
    pub b: SymbolConfig,
    pub orders: Vec<usize>,
    #[serde(default = "default_slope_tol")]
    pub slope_tol: f64,
    /// Width of the Gaussian test input.
    #[serde(default = "one_f")]
    pub input_width: f64,
}

fn default_slope_tol() -> f64 {
    0.25
}

fn one_f() -> f64 {
    1.0
}

#[derive(Debug, Clone, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum MultiplierSample {
    Identity,
    /// `ξ/⟨ξ⟩`
    XiOverBracket,
    /// `ξ²/(t + ξ²)`
    Ratio {
        t: f64,
    },
    /// `⟨ξ⟩^s`
    BracketPower {
        s: f64,
    },
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HilbertConfig {
    pub p: f64,
    pub fiber: SpaceConfig,
    pub trials: usize,
    /// Upper bound the largest observed ratio must respect.
    pub max_ratio: f64,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SobolevConfig {
    pub s: u32,
    pub ell: Vec<u32>,
    #[serde(default = "two")]
    pub p: f64,
    #[serde(default = "default_sobolev_samples")]
    pub samples: usize,
}

fn default_sobolev_samples() -> usize {
    8
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MultiplierConfig {
    #[serde(default)]
    pub family: Vec<MatrixConfig>,
    #[serde(default)]
    pub multipliers: Vec<MultiplierSample>,
    pub space: Option<SpaceConfig>,
    #[serde(default = "two")]
    pub p: f64,
    #[serde(default = "default_hull_tol")]
    pub hull_tol: f64,
    pub hilbert: Option<HilbertConfig>,
    pub sobolev: Option<SobolevConfig>,
}

fn default_hull_tol() -> f64 {
    1e-6
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ParametrixConfig {
    pub orders: Vec<usize>,
    /// `|λ|` at which the corrected resolvent is compared with the direct inverse.
    pub check_radius: f64,
    #[serde(default = "default_discrepancy_tol")]
    pub discrepancy_tol: f64,
    #[serde(default = "default_slope_tol")]
    pub slope_tol: f64,
}

fn default_discrepancy_tol() -> f64 {
    1e-6
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ResolventConfig {
    #[serde(default)]
    pub s: f64,
    #[serde(default = "two")]
    pub p: f64,
    pub fiber: SpaceConfig,
    /// Upper bound for the estimate.
    pub max_value: Option<f64>,
    /// Relative change allowed when the λ samples are doubled; no refinement when absent.
    pub stability_tol: Option<f64>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MaxRegConfig {
    pub p: Vec<f64>,
    pub t_end: f64,
    pub steps: usize,
    /// Spectral shift; chosen from the grid spectrum when absent.
    pub gamma: Option<f64>,
    #[serde(default)]
    pub forcing: ForcingConfig,
    /// `[lo, hi]` bounds for `C_2`.
    pub c2_range: Option<[f64; 2]>,
    /// Relative change of `C_p` allowed when the time step is halved.
    pub halving_tol: Option<f64>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct EllipticityConfig {
    pub margin: f64,
}

impl Default for EllipticityConfig {
    fn default() -> Self {
        Self {
            margin: anisolab::elliptic::ELLIPTICITY_MARGIN,
        }
    }
}

/// Validates the pieces a given experiment needs without running anything.
pub fn require(cfg: &ExperimentConfig) -> Result<()> {
    match cfg.kind {
        ExperimentKind::Rbound => {
            cfg.rbound.as_ref().context("missing [rbound] section")?;
        }
        ExperimentKind::SymbolCheck => {
            cfg.symbol.as_ref().context("missing [symbol] section")?;
        }
        ExperimentKind::Composition => {
            cfg.composition
                .as_ref()
                .context("missing [composition] section")?;
            cfg.grid.as_ref().context("missing [grid] section")?;
        }
        ExperimentKind::Multiplier => {
            let m = cfg
                .multiplier
                .as_ref()
                .context("missing [multiplier] section")?;
            cfg.grid.as_ref().context("missing [grid] section")?;
            if m.multipliers.is_empty() && m.hilbert.is_none() && m.sobolev.is_none() {
                bail!("[multiplier] needs multipliers, hilbert or sobolev");
            }
        }
        ExperimentKind::Parametrix => {
            cfg.parametrix
                .as_ref()
                .context("missing [parametrix] section")?;
            cfg.operator
                .as_ref()
                .context("missing [operator] section")?;
            cfg.grid.as_ref().context("missing [grid] section")?;
        }
        ExperimentKind::ResolventRbound => {
            cfg.resolvent
                .as_ref()
                .context("missing [resolvent] section")?;
            cfg.operator
                .as_ref()
                .context("missing [operator] section")?;
            cfg.grid.as_ref().context("missing [grid] section")?;
        }
        ExperimentKind::Maxreg => {
            cfg.maxreg.as_ref().context("missing [maxreg] section")?;
            cfg.operator
                .as_ref()
                .context("missing [operator] section")?;
            cfg.grid.as_ref().context("missing [grid] section")?;
        }
        ExperimentKind::Ellipticity => {
            cfg.operator
                .as_ref()
                .context("missing [operator] section")?;
        }
    }
    Ok(())
}

/// Problems `validate` reports: structural errors plus numerical setups that are known to mislead.
pub fn diagnostics(cfg: &ExperimentConfig) -> Vec<String> {
    let mut out = Vec::new();
    if let Err(e) = require(cfg) {
        out.push(e.to_string());
    }
    if let Some(g) = &cfg.grid {
        if g.points % 2 == 1 {
            out.push(format!(
                "grid.points = {} is odd; use an even count so the Nyquist mode is explicit",
                g.points
            ));
        }
        if let Err(e) = g.build() {
            out.push(format!("grid: {e}"));
        }
    }
    if let Some(s) = &cfg.sector {
        if let Err(e) = s.build() {
            out.push(format!("sector: {e}"));
        }
        if s.r_min < s.min_radius {
            out.push(format!(
                "sector.r_min = {} lies below sector.min_radius = {}",
                s.r_min, s.min_radius
            ));
        }
    }
    let mut check_terms = |what: &str,
                           ell: &[u32],
                           terms: &[TermConfig],
                           grid: Option<&GridConfig>| {
        if let Some(g) = grid {
            if g.dim != ell.len() {
                out.push(format!(
                    "{what}: ell has {} entries but grid.dim = {}",
                    ell.len(),
                    g.dim
                ));
            }
        }
        for (i, t) in terms.iter().enumerate() {
            if t.alpha.len() != ell.len() {
                out.push(format!(
                    "{what}.terms[{i}]: alpha has {} entries, expected {}",
                    t.alpha.len(),
                    ell.len()
                ));
            }
            if let (
                XProfile::RadialSettling {
                    width,
                    center,
                    limit,
                },
                Some(g),
            ) = (&t.profile, grid)
            {
                let tail = (center - limit).abs() * (-(g.half_width / width).powi(2)).exp();
                if tail > 1e-8 {
                    out.push(format!(
                        "{what}.terms[{i}]: radial profile has not settled at the grid edge (deviation {tail:e} > 1e-8)"
                    ));
                }
            }
        }
    };
    if let Some(o) = &cfg.operator {
        check_terms("operator", &o.ell, &o.terms, cfg.grid.as_ref());
    }
    if let Some(s) = &cfg.symbol {
        check_terms("symbol", &s.ell, &s.terms, None);
    }
    if let Some(c) = &cfg.composition {
        check_terms("composition.a", &c.a.ell, &c.a.terms, cfg.grid.as_ref());
        check_terms("composition.b", &c.b.ell, &c.b.terms, cfg.grid.as_ref());
    }
    if let Some(sob) = cfg.multiplier.as_ref().and_then(|m| m.sobolev.as_ref()) {
        for &e in &sob.ell {
            if e == 0 || sob.s % e != 0 {
                out.push(format!(
                    "multiplier.sobolev: s = {} is not divisible by ell entry {e}",
                    sob.s
                ));
            }
        }
    }
    out
}
