use std::sync::Arc;

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::excision::{InverseLog, MAX_CONDITION};
use super::probes::{bracket_fn, measured_order_on, weighted_norms};
use super::{
    ClassicalSymbol, Excised, Excision, HomogeneousComponent, Inverse, Kernel, MatrixSymbol,
    OrderConfig, OrderFit, ProbeConfig, ProbeSet, Product, Sum, SymbolKernel, SymbolPoint, Var,
};
use crate::aniso::{MultiIndex, SectorSpec};
use crate::error::{Error, Result};
use crate::jet::MatrixJet;

/// Truncated Leibniz product `Σ_{|α| ≤ N} (1/α!) ∂_ξ^α a · D_x^α b`.
#[derive(Debug, Clone)]
pub struct Compose {
    a: Kernel,
    b: Kernel,
    n: usize,
    xi_dim: usize,
}

impl Compose {
    /// `x` and `ξ` are paired coordinatewise, so both have dimension `xi_dim`.
    pub fn new(a: Kernel, b: Kernel, n: usize, xi_dim: usize) -> Self {
        Self { a, b, n, xi_dim }
    }

    fn effective_order(&self) -> usize {
        match self.a.xi_degree() {
            Some(d) => self.n.min(d as usize),
            None => self.n,
        }
    }
}

impl SymbolKernel for Compose {
    fn shape(&self) -> (usize, usize) {
        let (ar, _) = self.a.shape();
        let (_, bc) = self.b.shape();
        match (self.a.shape(), self.b.shape()) {
            ((1, 1), s) => s,
            (s, (1, 1)) => s,
            _ => (ar, bc),
        }
    }

    fn jet(&self, pt: &SymbolPoint, vars: &[Var], order: usize) -> Result<MatrixJet> {
        let n = self.effective_order();
        if n == 0 {
            return self
                .a
                .jet(pt, vars, order)?
                .mul(&self.b.jet(pt, vars, order)?);
        }
        let mut all = vars.to_vec();
        let mut xi_idx = Vec::with_capacity(self.xi_dim);
        let mut x_idx = Vec::with_capacity(self.xi_dim);
        for j in 0..self.xi_dim {
            for (v, idx) in [(Var::Xi(j), &mut xi_idx), (Var::X(j), &mut x_idx)] {
                match all.iter().position(|&u| u == v) {
                    Some(i) => idx.push(i),
                    None => {
                        all.push(v);
                        idx.push(all.len() - 1);
                    }
                }
            }
        }
        let ja = self.a.jet(pt, &all, order + n)?;
        let jb = self.b.jet(pt, &all, order + n)?;
        let keep: Vec<usize> = (0..vars.len()).collect();
        let mut out: Option<MatrixJet> = None;
        for alpha in MultiIndex::up_to_total(self.xi_dim, n as u32) {
            let mut da = ja.clone();
            let mut db = jb.clone();
            for (j, &k) in alpha.0.iter().enumerate() {
                for _ in 0..k {
                    da = da.differentiate(xi_idx[j]);
                    db = db.differentiate(x_idx[j]);
                }
            }
            if da.max_abs() == 0.0 || db.max_abs() == 0.0 {
                continue;
            }
            let da = da.truncate(order).restrict(&keep);
            let db = db.truncate(order).restrict(&keep);
            let c = Complex64::new(0.0, -1.0).powu(alpha.total()) / alpha.factorial();
            let term = da.mul(&db)?.scale(c);
            out = Some(match out {
                None => term,
                Some(o) => o.add(&term)?,
            });
        }
        match out {
            Some(o) => Ok(o),
            None => {
                let (r, c) = self.shape();
                Ok(MatrixJet::zeros(vars.len(), order, r, c))
            }
        }
    }

    fn depends_on_x(&self) -> bool {
        self.a.depends_on_x() || self.b.depends_on_x()
    }

    fn depends_on_lambda(&self) -> bool {
        self.a.depends_on_lambda() || self.b.depends_on_lambda()
    }

    fn depends_on_xi(&self) -> bool {
        self.a.depends_on_xi() || self.b.depends_on_xi()
    }
}

fn check_composable(a: &MatrixSymbol, b: &MatrixSymbol) -> Result<()> {
    if a.space != b.space {
        return Err(Error::Precondition(
            "symbols live on different spaces".into(),
        ));
    }
    let (sa, sb) = (a.shape(), b.shape());
    if sa != (1, 1) && sb != (1, 1) && sa.1 != sb.0 {
        return Err(Error::ShapeMismatch(format!(
            "cannot compose {sa:?} with {sb:?}"
        )));
    }
    Ok(())
}

/// `a #_N b`, of order `μ_1 + μ_2`. The sum collapses to the pointwise product
/// when `b` is independent of `x` or `a` of `ξ`.
pub fn compose(a: &MatrixSymbol, b: &MatrixSymbol, n: usize) -> Result<MatrixSymbol> {
    check_composable(a, b)?;
    let order = a.order + b.order;
    if !b.depends_on_x() || !a.kernel.depends_on_xi() || n == 0 {
        return Ok(a.pointwise(b));
    }
    if a.space.x_dim != a.space.xi_dim() {
        return Err(Error::DimensionMismatch {
            expected: a.space.xi_dim(),
            got: a.space.x_dim,
        });
    }
    let k = Compose::new(a.kernel.clone(), b.kernel.clone(), n, a.space.xi_dim());
    Ok(MatrixSymbol::new(a.space.clone(), order, Arc::new(k)))
}

/// `χ·a_{(μ)}^{-1}` together with the log of condition numbers met while evaluating it.
#[derive(Debug, Clone)]
pub struct PrincipalInverse {
    pub symbol: ClassicalSymbol,
    pub log: Arc<InverseLog>,
    /// Largest condition number of `a_{(μ)}` over the sphere probes.
    pub probe_condition: f64,
}

/// Inverts the principal part, checking invertibility on the probe directions
/// (whose `λ` parts are expected to lie in the sector).
pub fn principal_inverse(
    a: &ClassicalSymbol,
    sector: &SectorSpec,
    probes: &ProbeSet,
) -> Result<PrincipalInverse> {
    sector.validate()?;
    let (r, c) = a.shape();
    if r != c {
        return Err(Error::ShapeMismatch(format!("principal symbol is {r}x{c}")));
    }
    let principal = &a.principal().kernel;
    let unit: Vec<SymbolPoint> = probes.with_radii(vec![1.0])?.points().to_vec();
    // conditioning relative to the largest value on the sphere, so scalar zeros count too
    let mut svals = Vec::new();
    for pt in &unit {
        if a.space.has_lambda() && sector.cone_distance(pt.lambda) > 1e-12 {
            continue;
        }
        let sv = principal.eval(pt)?.svd(false, false).singular_values;
        svals.push((sv.max(), sv.min()));
    }
    let scale = svals.iter().map(|s| s.0).fold(0.0, f64::max);
    let mut worst: f64 = 0.0;
    for &(_, lo) in &svals {
        let cond = if lo == 0.0 { f64::INFINITY } else { scale / lo };
        worst = worst.max(cond);
        if !(cond <= MAX_CONDITION) {
            return Err(Error::IllConditioned { cond });
        }
    }
    let inv = Inverse::new(principal.clone());
    let log = inv.log();
    let comp = HomogeneousComponent::homogeneous(Arc::new(inv), -a.order);
    let symbol = ClassicalSymbol::new(a.space.clone(), -a.order, vec![comp], a.excision)?;
    Ok(PrincipalInverse {
        symbol,
        log,
        probe_condition: worst,
    })
}

#[derive(Debug, Clone)]
pub struct Parametrix {
    pub p: MatrixSymbol,
    /// `1 - a#b`
    pub r: MatrixSymbol,
    /// `a#p - 1`
    pub r1: MatrixSymbol,
    /// `p#a - 1`
    pub r2: MatrixSymbol,
    pub r_order: OrderFit,
    pub n: usize,
}

/// `p = b #_N Σ_{k ≤ N} r^{#k}` with `r = 1 - a#b`.
pub fn neumann_parametrix(
    a: &MatrixSymbol,
    b: &MatrixSymbol,
    n: usize,
    cfg: &OrderConfig,
) -> Result<Parametrix> {
    check_composable(a, b)?;
    let (m, mc) = a.shape();
    if m != mc {
        return Err(Error::ShapeMismatch(format!(
            "parametrix of a {m}x{mc} symbol"
        )));
    }
    let space = a.space.clone();
    let id = MatrixSymbol::identity(space.clone(), m);
    let r = id.sub(&compose(a, b, n)?).with_order(-1.0);
    let probes = ProbeSet::generate(&space, &cfg.probes)?;
    let r_order = measured_order_on(&r, &[], &probes, cfg.floor)?;
    if !r_order.within(-1.0, cfg.tolerance) {
        return Err(Error::RemainderNotImproving {
            measured: r_order.slope,
            required: -1.0,
        });
    }
    let mut terms: Vec<Kernel> = vec![id.kernel.clone()];
    let mut power = id.clone();
    for _ in 0..n {
        power = compose(&r, &power, n)?;
        terms.push(power.kernel.clone());
    }
    let q = if n == 0 {
        id.clone()
    } else {
        MatrixSymbol::new(space.clone(), 0.0, Arc::new(Sum::new(terms)))
    };
    let p = compose(b, &q, n)?.with_order(-a.order);
    let tail = -(n as f64) - 1.0;
    let r1 = compose(a, &p, n)?.sub(&id).with_order(tail);
    let r2 = compose(&p, a, n)?.sub(&id).with_order(tail);
    Ok(Parametrix {
        p,
        r,
        r1,
        r2,
        r_order,
        n,
    })
}

/// Finite seminorm battery used to pick the excision scales of an asymptotic sum.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default)]
pub struct BatteryConfig {
    pub probes: ProbeConfig,
    /// Shells at `θ·2^{j/4}` for these `j`.
    pub relative_quarter_octaves: (i32, i32),
    /// Additional fixed shells.
    pub absolute_radii: Vec<f64>,
    pub max_doublings: usize,
    pub bisection_steps: usize,
}

impl Default for BatteryConfig {
    fn default() -> Self {
        Self {
            probes: ProbeConfig {
                directions: 8,
                ..ProbeConfig::default()
            },
            relative_quarter_octaves: (-4, 12),
            absolute_radii: vec![1.0, 4.0, 16.0, 64.0, 256.0],
            max_doublings: 60,
            bisection_steps: 12,
        }
    }
}

#[derive(Debug, Clone)]
pub struct AsymptoticSum {
    pub symbol: MatrixSymbol,
    /// Sorted summands `χ_{θ_k}·a_k`.
    pub summands: Vec<MatrixSymbol>,
    pub thetas: Vec<f64>,
    /// Battery value of each summand at the chosen scale.
    pub battery_values: Vec<f64>,
}

fn battery_value(
    a: &MatrixSymbol,
    excision: Excision,
    theta: f64,
    base: &ProbeSet,
    cfg: &BatteryConfig,
) -> Result<f64> {
    let chi = excision.scaled(theta)?;
    let cut: Kernel = Arc::new(Excised::new(a.kernel.clone(), &a.space, chi));
    let mut radii: Vec<f64> = (cfg.relative_quarter_octaves.0..=cfg.relative_quarter_octaves.1)
        .map(|j| theta * 2f64.powf(j as f64 / 4.0))
        .chain(cfg.absolute_radii.iter().cloned())
        .collect();
    radii.sort_by(f64::total_cmp);
    radii.dedup();
    let probes = base.with_radii(radii)?;
    let bracket = bracket_fn(&a.space);
    let mu = a.order + 1.0;
    let mut betas: Vec<Vec<(Var, u32)>> = vec![vec![]];
    betas.extend(
        a.space
            .covariable_vars(true)
            .into_iter()
            .map(|v| vec![(v, 1)]),
    );
    let mut worst: f64 = 0.0;
    for beta in betas {
        let s = -mu + a.space.derivative_weight(&beta) as f64;
        let norms = weighted_norms(&cut, probes.points(), &beta, |p| bracket(p).powf(s))?;
        worst = norms.into_iter().fold(worst, f64::max);
    }
    Ok(worst)
}

/// `Σ_{k ≤ K} χ_{θ_k}·a_k` with each `θ_k ≥ 1` chosen so that the battery of
/// `χ_{θ_k}·a_k` at order `μ_k + 1` stays below `2^{-k}`.
pub fn asymptotic_sum(
    terms: &[MatrixSymbol],
    k: usize,
    excision: Excision,
    cfg: &BatteryConfig,
) -> Result<AsymptoticSum> {
    let first = terms.first().ok_or(Error::Empty("asymptotic sum terms"))?;
    if k == 0 || k > terms.len() {
        return Err(Error::InvalidArgument(format!(
            "truncation {k} outside 1..={}",
            terms.len()
        )));
    }
    let mut sorted: Vec<MatrixSymbol> = terms.to_vec();
    sorted.sort_by(|a, b| b.order.total_cmp(&a.order));
    for w in sorted.windows(2) {
        if w[1].order >= w[0].order {
            return Err(Error::InvalidArgument(
                "orders must be strictly decreasing".into(),
            ));
        }
        if w[1].space != first.space || w[1].shape() != first.shape() {
            return Err(Error::Precondition(
                "terms must share space and shape".into(),
            ));
        }
    }
    let base = ProbeSet::generate(&first.space, &cfg.probes)?;
    let mut summands = Vec::with_capacity(k);
    let mut thetas = Vec::with_capacity(k);
    let mut values = Vec::with_capacity(k);
    for (idx, a) in sorted.iter().take(k).enumerate() {
        let bound = 0.5f64.powi(idx as i32 + 1);
        let pass = |t: f64| -> Result<(bool, f64)> {
            let v = battery_value(a, excision, t, &base, cfg)?;
            Ok((v < bound, v))
        };
        let (mut ok, mut val) = pass(1.0)?;
        let mut hi = 1.0;
        let mut lo = 1.0;
        let mut doublings = 0;
        while !ok {
            if doublings == cfg.max_doublings {
                return Err(Error::ThetaSearchFailed {
                    term: idx + 1,
                    iterations: doublings,
                });
            }
            lo = hi;
            hi *= 2.0;
            doublings += 1;
            (ok, val) = pass(hi)?;
        }
        if hi > 1.0 {
            for _ in 0..cfg.bisection_steps {
                let mid = (lo * hi).sqrt();
                let (m_ok, m_val) = pass(mid)?;
                if m_ok {
                    hi = mid;
                    val = m_val;
                } else {
                    lo = mid;
                }
            }
        }
        let chi = excision.scaled(hi)?;
        summands.push(MatrixSymbol::new(
            a.space.clone(),
            a.order,
            Arc::new(Excised::new(a.kernel.clone(), &a.space, chi)),
        ));
        thetas.push(hi);
        values.push(val);
    }
    let symbol = MatrixSymbol::new(
        first.space.clone(),
        sorted[0].order,
        Arc::new(Sum::new(
            summands.iter().map(|s| s.kernel.clone()).collect(),
        )),
    );
    Ok(AsymptoticSum {
        symbol,
        summands,
        thetas,
        battery_values: values,
    })
}

/// Diagonal symbol with the given entries, a convenience for tests and configs.
pub fn diagonal(space: &super::SymbolSpace, entries: Vec<Kernel>, order: f64) -> MatrixSymbol {
    let m = entries.len();
    let mut terms: Vec<Kernel> = Vec::with_capacity(m);
    for (i, e) in entries.into_iter().enumerate() {
        let mut unit = DMatrix::zeros(m, m);
        unit[(i, i)] = Complex64::new(1.0, 0.0);
        terms.push(Arc::new(Product::new(vec![
            e,
            Arc::new(super::Constant::new(unit)),
        ])));
    }
    MatrixSymbol::new(space.clone(), order, Arc::new(Sum::new(terms)))
}
