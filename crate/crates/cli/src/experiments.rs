//! One runner per experiment kind.

use std::sync::Arc;

use anisolab::elliptic::{
    choose_shift, ellipticity_check, maxreg_experiment, resolvent_rbound, resolvent_via_parametrix,
    DifferentialOperatorSpec, TimeGrid,
};
use anisolab::psido::{
    composition_defect, derivative_norm_equivalence, equivalent_norm_multiplier,
    hilbert_transform_check, multiplier_rbound_harness, random_smooth_function, GridFunction,
};
use anisolab::rbound::{rbound_estimate, spectral_norm, BanachSpaceSpec, OperatorFamily};
use anisolab::symbol::{
    measured_order_on, seminorm, BracketPower, ClassicalSymbol, ClosureSymbol, Excision,
    MatrixSymbol, OrderConfig, ProbeConfig, ProbeSet, SeminormKind, SymbolPoint, SymbolSpace, Var,
};
use anisolab::Error;
use anyhow::{bail, Context, Result};
use nalgebra::DMatrix;
use num_complex::Complex64;
use serde_json::{json, Value};

use crate::config::{ExperimentConfig, ExperimentKind, MultiplierSample};
use crate::report::{num, Check, Outcome, Table};

/// Library errors that mean "the property does not hold" rather than "the run broke".
pub fn is_property_failure(e: &Error) -> bool {
    matches!(
        e,
        Error::NotInvertible { .. }
            | Error::UnstableMode { .. }
            | Error::Membership(_)
            | Error::IllConditioned { .. }
            | Error::RemainderTooLarge { .. }
            | Error::RemainderNotImproving { .. }
            | Error::Divisibility { .. }
    )
}

/// Turns a property-failure error into a failing check; other errors propagate.
fn property<T>(name: &str, r: anisolab::Result<T>) -> Result<std::result::Result<T, Check>> {
    match r {
        Ok(v) => Ok(Ok(v)),
        Err(e) if is_property_failure(&e) => {
            let mut c = Check::flag(format!("{name}: {e}"), false);
            c.value = 0.0;
            Ok(Err(c))
        }
        Err(e) => Err(anyhow::Error::new(e).context(name.to_string())),
    }
}

fn failed(checks: Vec<Check>, report: Value) -> Outcome {
    Outcome {
        checks,
        report,
        tables: Vec::new(),
    }
}

pub fn run(cfg: &ExperimentConfig) -> Result<Outcome> {
    crate::config::require(cfg)?;
    match cfg.kind {
        ExperimentKind::Rbound => rbound(cfg),
        ExperimentKind::SymbolCheck => symbol_check(cfg),
        ExperimentKind::Composition => composition(cfg),
        ExperimentKind::Multiplier => multiplier(cfg),
        ExperimentKind::Parametrix => parametrix(cfg),
        ExperimentKind::ResolventRbound => resolvent(cfg),
        ExperimentKind::Maxreg => maxreg(cfg),
        ExperimentKind::Ellipticity => ellipticity(cfg),
    }
}

fn rbound(cfg: &ExperimentConfig) -> Result<Outcome> {
    let rc = cfg.rbound.as_ref().context("missing [rbound] section")?;
    let members = rc
        .members
        .iter()
        .map(|m| m.build())
        .collect::<Result<Vec<_>>>()?;
    let family = OperatorFamily::new(members)?;
    let (x, y) = (rc.x_space.build()?, rc.y_space.build()?);
    let est = rbound_estimate(&family, &x, &y, rc.p, &cfg.budget())?;
    let mut checks = vec![Check::flag("finite", est.value.is_finite())];
    if let Some(ub) = est.upper_bound {
        checks.push(Check::at_most(
            "below_certified_bound",
            est.value,
            ub * (1.0 + 1e-12),
        ));
    }
    if let Some(e) = rc.expect {
        checks.push(Check::at_most(
            "expected_value_rel_error",
            (est.value - e).abs() / e.abs().max(f64::MIN_POSITIVE),
            rc.expect_tol,
        ));
    }
    let mut t = Table::new("members", &["index", "rows", "cols", "spectral_norm"]);
    for (j, m) in family.members().iter().enumerate() {
        t.push(vec![
            j.to_string(),
            m.nrows().to_string(),
            m.ncols().to_string(),
            num(spectral_norm(m)),
        ]);
    }
    Ok(Outcome {
        checks,
        report: serde_json::to_value(&est)?,
        tables: vec![t],
    })
}

/// Multi-indices `β` over `vars` with `1 ≤ |β| ≤ max`, plus the empty one.
fn betas(vars: &[Var], max: u32) -> Vec<Vec<(Var, u32)>> {
    let mut out: Vec<Vec<u32>> = vec![vec![0; vars.len()]];
    let mut frontier = out.clone();
    for _ in 0..max {
        let mut next = Vec::new();
        for b in &frontier {
            let start = b.iter().rposition(|&k| k > 0).unwrap_or(0);
            for j in start..vars.len() {
                let mut c = b.clone();
                c[j] += 1;
                next.push(c);
            }
        }
        out.extend(next.iter().cloned());
        frontier = next;
    }
    out.into_iter()
        .map(|b| {
            vars.iter()
                .zip(b)
                .filter(|(_, k)| *k > 0)
                .map(|(&v, k)| (v, k))
                .collect()
        })
        .collect()
}

fn beta_label(beta: &[(Var, u32)]) -> String {
    if beta.is_empty() {
        return "none".into();
    }
    beta.iter()
        .map(|(v, k)| format!("{v:?}^{k}"))
        .collect::<Vec<_>>()
        .join("*")
}

fn refined_probes(p: &ProbeConfig) -> ProbeConfig {
    ProbeConfig {
        directions: 2 * p.directions,
        per_octave: 2 * p.per_octave,
        x_points: 2 * p.x_points,
        ..p.clone()
    }
}

fn symbol_check(cfg: &ExperimentConfig) -> Result<Outcome> {
    let sc = cfg.symbol.as_ref().context("missing [symbol] section")?;
    let opts = cfg.symbol_check.clone().unwrap_or_default();
    let space = sc.space()?;
    let classical =
        ClassicalSymbol::from_polynomial(space.clone(), &sc.polynomial()?, Excision::default())?;
    let a = classical.symbol();
    let pcfg = cfg.probes();
    let probes = ProbeSet::generate(&space, &pcfg)?;
    let fine = ProbeSet::generate(&space, &refined_probes(&pcfg))?;
    let budget = cfg.budget();
    let mut checks = Vec::new();
    let homogeneity = if opts.homogeneity {
        let h = classical.homogeneity_check(&probes, &[0.5, 2.0, 3.0])?;
        checks.push(Check::flag(
            format!("homogeneity (max rel error {:e})", h.max_relative_error),
            h.pass,
        ));
        Some(h)
    } else {
        None
    };
    let mut t = Table::new(
        "seminorms",
        &[
            "beta",
            "weight",
            "target_order",
            "measured_slope",
            "exact",
            "r_seminorm",
            "r_seminorm_refined",
            "relative_change",
        ],
    );
    let mut rows = Vec::new();
    for beta in betas(&space.covariable_vars(true), opts.max_beta) {
        let label = beta_label(&beta);
        let weight = space.derivative_weight(&beta);
        let target = a.order - weight as f64;
        let fit = measured_order_on(&a, &beta, &probes, OrderConfig::default().floor)?;
        checks.push(Check::at_most(
            format!("order {label}"),
            if fit.exact {
                f64::NEG_INFINITY
            } else {
                fit.slope
            },
            target + opts.order_tol,
        ));
        let coarse = seminorm(&a, &beta, SeminormKind::RBound, &probes, &budget)?.value;
        let refined = seminorm(&a, &beta, SeminormKind::RBound, &fine, &budget)?.value;
        let change = if coarse == refined {
            0.0
        } else {
            (refined - coarse).abs() / coarse.abs().max(refined.abs())
        };
        checks.push(Check::flag(
            format!("finite {label}"),
            coarse.is_finite() && refined.is_finite(),
        ));
        checks.push(Check::at_most(
            format!("saturation {label}"),
            change,
            opts.saturation_tol,
        ));
        t.push(vec![
            label.clone(),
            weight.to_string(),
            num(target),
            num(fit.slope),
            fit.exact.to_string(),
            num(coarse),
            num(refined),
            num(change),
        ]);
        rows.push(
            json!({ "beta": label, "target": target, "slope": fit.slope, "exact": fit.exact,
            "r_seminorm": coarse, "r_seminorm_refined": refined, "relative_change": change }),
        );
    }
    let report = json!({
        "order": a.order,
        "components": classical.components.len(),
        "probes": probes.describe(),
        "refined_probes": fine.describe(),
        "homogeneity": serde_json::to_value(&homogeneity)?,
        "derivatives": rows,
    });
    Ok(Outcome {
        checks,
        report,
        tables: vec![t],
    })
}

fn gaussian_input(grid: &anisolab::aniso::GridSpec, m: usize, width: f64) -> Result<GridFunction> {
    Ok(GridFunction::from_fn(
        grid.clone(),
        BanachSpaceSpec::euclidean(m),
        |x| {
            let r2: f64 = x.iter().map(|v| v * v).sum();
            vec![Complex64::new((-r2 / (width * width)).exp(), 0.0); m]
        },
    )?)
}

fn composition(cfg: &ExperimentConfig) -> Result<Outcome> {
    let cc = cfg
        .composition
        .as_ref()
        .context("missing [composition] section")?;
    let (a, b) = (cc.a.symbol()?, cc.b.symbol()?);
    let grid = cfg.grid()?;
    let lambdas = cfg.sector()?.samples();
    let u = gaussian_input(&grid, cc.b.m, cc.input_width)?;
    let mut checks = Vec::new();
    let mut reports = Vec::new();
    let mut t = Table::new(
        "defects",
        &["n", "lambda_re", "lambda_im", "bracket", "defect", "scale"],
    );
    for &n in &cc.orders {
        let r = composition_defect(&a, &b, n, &lambdas, &u)?;
        checks.push(Check::at_most(
            format!("N={n} defect slope"),
            r.slope,
            r.target + cc.slope_tol,
        ));
        for s in &r.samples {
            t.push(vec![
                n.to_string(),
                num(s.lambda[0]),
                num(s.lambda[1]),
                num(s.bracket),
                num(s.defect),
                num(s.scale),
            ]);
        }
        reports.push(
            json!({ "n": n, "target": r.target, "slope": r.slope, "samples": r.samples.len() }),
        );
    }
    let report = json!({ "order_a": a.order, "order_b": b.order, "lambdas": lambdas.len(), "orders": reports });
    Ok(Outcome {
        checks,
        report,
        tables: vec![t],
    })
}

type ScalarFn = Arc<dyn Fn(&[f64]) -> f64 + Send + Sync>;

fn sample_symbol(space: &SymbolSpace, m: usize, s: &MultiplierSample) -> MatrixSymbol {
    let scalar = |f: ScalarFn| {
        MatrixSymbol::new(
            space.clone(),
            0.0,
            Arc::new(ClosureSymbol::new(
                space,
                (m, m),
                false,
                Arc::new(move |p: &SymbolPoint| {
                    DMatrix::identity(m, m) * Complex64::new(f(&p.xi), 0.0)
                }),
            )),
        )
    };
    match *s {
        MultiplierSample::Identity => MatrixSymbol::identity(space.clone(), m),
        MultiplierSample::XiOverBracket => scalar(Arc::new(|xi: &[f64]| {
            xi[0] / (1.0 + xi.iter().map(|v| v * v).sum::<f64>()).sqrt()
        })),
        MultiplierSample::Ratio { t } => scalar(Arc::new(move |xi: &[f64]| {
            let r2: f64 = xi.iter().map(|v| v * v).sum();
            r2 / (t + r2)
        })),
        MultiplierSample::BracketPower { s } => {
            let k = MatrixSymbol::new(
                space.clone(),
                s,
                Arc::new(BracketPower::new(space, s, false)),
            );
            if m == 1 {
                k
            } else {
                k.pointwise(&MatrixSymbol::identity(space.clone(), m))
            }
        }
    }
}

fn multiplier(cfg: &ExperimentConfig) -> Result<Outcome> {
    let mc = cfg
        .multiplier
        .as_ref()
        .context("missing [multiplier] section")?;
    let grid = cfg.grid()?;
    let mut checks = Vec::new();
    let mut report = serde_json::Map::new();
    let mut tables = Vec::new();
    if !mc.multipliers.is_empty() {
        let members = mc
            .family
            .iter()
            .map(|m| m.build())
            .collect::<Result<Vec<_>>>()?;
        let family =
            OperatorFamily::new(members).context("[multiplier] needs a non-empty family")?;
        let m = family.shape().1;
        let space = match &mc.space {
            Some(s) => s.build()?,
            None => BanachSpaceSpec::euclidean(m),
        };
        let sym_space =
            SymbolSpace::xi_only(anisolab::aniso::AnisotropyVector::isotropic(grid.dim));
        let samples: Vec<MatrixSymbol> = mc
            .multipliers
            .iter()
            .map(|s| sample_symbol(&sym_space, m, s))
            .collect();
        let r = multiplier_rbound_harness(
            &family,
            &samples,
            &space,
            &space,
            mc.p,
            &grid,
            &cfg.budget(),
            mc.hull_tol,
        );
        match property("hull membership", r)? {
            Ok(h) => {
                checks.push(Check::flag("hull membership", true));
                checks.push(Check::flag("finite", h.r_multipliers.is_finite()));
                checks.push(Check::at_most("multiplier_to_family_ratio", h.ratio, 2.0));
                report.insert("harness".into(), serde_json::to_value(&h)?);
            }
            Err(c) => checks.push(c),
        }
    }
    if let Some(hc) = &mc.hilbert {
        let fiber = hc.fiber.build()?;
        let h = hilbert_transform_check(&fiber, hc.p, &grid, hc.trials, cfg.seed)?;
        checks.push(Check::at_most(
            "hilbert_max_ratio",
            h.max_ratio,
            hc.max_ratio,
        ));
        report.insert("hilbert".into(), serde_json::to_value(&h)?);
    }
    if let Some(sc) = &mc.sobolev {
        let ell = anisolab::aniso::AnisotropyVector::new(sc.ell.clone())?;
        match property(
            "equivalent norm",
            equivalent_norm_multiplier(sc.s, &ell, &grid, Excision::default(), &cfg.probes()),
        )? {
            Ok(e) => {
                checks.push(Check::flag(
                    "equivalent_norm_bounds",
                    e.lower > 0.0 && e.upper.is_finite(),
                ));
                let fns = (0..sc.samples as u64)
                    .map(|k| {
                        random_smooth_function(
                            &grid,
                            &BanachSpaceSpec::euclidean(1),
                            cfg.seed.wrapping_add(k),
                            3,
                        )
                    })
                    .collect::<anisolab::Result<Vec<_>>>()?;
                let q = derivative_norm_equivalence(&fns, sc.s, &ell, sc.p)?;
                checks.push(Check::flag(
                    "derivative_norm_equivalence",
                    q.lower > 0.0 && q.upper.is_finite(),
                ));
                let mut t = Table::new("equivalent_norm", &["quantity", "lower", "upper"]);
                t.push(vec![
                    "multiplier_over_bracket".into(),
                    num(e.lower),
                    num(e.upper),
                ]);
                t.push(vec![
                    "derivative_over_bessel".into(),
                    num(q.lower),
                    num(q.upper),
                ]);
                tables.push(t);
                report.insert("equivalent_norm".into(), serde_json::to_value(&e)?);
                report.insert("derivative_equivalence".into(), serde_json::to_value(&q)?);
            }
            Err(c) => checks.push(c),
        }
    }
    Ok(Outcome {
        checks,
        report: Value::Object(report),
        tables,
    })
}

fn ellipticity_gate(
    cfg: &ExperimentConfig,
    a: &DifferentialOperatorSpec,
) -> Result<(Check, Value)> {
    let margin = cfg.ellipticity.clone().unwrap_or_default().margin;
    let sector =
        anisolab::aniso::SectorSpec::new(cfg.sector.clone().unwrap_or_default().half_angle, 1.0)?;
    let rep = ellipticity_check(a, &sector, &cfg.probes(), margin)?;
    Ok((
        Check::flag("parameter_ellipticity", rep.pass),
        serde_json::to_value(&rep)?,
    ))
}

fn parametrix(cfg: &ExperimentConfig) -> Result<Outcome> {
    let pc = cfg
        .parametrix
        .as_ref()
        .context("missing [parametrix] section")?;
    let a = cfg.operator()?;
    let (gate, ell_report) = ellipticity_gate(cfg, &a)?;
    if !gate.pass {
        return Ok(failed(vec![gate], json!({ "ellipticity": ell_report })));
    }
    let grid = cfg.grid()?;
    let sector = cfg.sector()?;
    let lambdas = sector.samples();
    let ocfg = OrderConfig {
        probes: cfg.probes(),
        ..OrderConfig::default()
    };
    let mut checks = vec![gate];
    let mut t = Table::new(
        "samples",
        &[
            "n",
            "lambda_re",
            "lambda_im",
            "remainder_norm",
            "right_remainder_norm",
            "grid_remainder_norm",
            "resolvent_norm",
            "discrepancy",
        ],
    );
    let mut per_n = Vec::new();
    for &n in &pc.orders {
        let rep = match property(
            &format!("N={n}"),
            resolvent_via_parametrix(&a, &sector, &lambdas, n, &grid, &ocfg),
        )? {
            Ok(r) => r,
            Err(c) => {
                checks.push(c);
                continue;
            }
        };
        let bound = -((n + 1) as f64) / rep.order as f64 + pc.slope_tol;
        for s in &rep.slopes {
            checks.push(Check::at_most(
                format!("N={n} remainder slope at arg {:.4}", s.angle),
                s.slope,
                bound,
            ));
        }
        let at_radius: Vec<_> = rep
            .samples
            .iter()
            .filter(|s| {
                ((s.lambda[0].hypot(s.lambda[1]) - pc.check_radius) / pc.check_radius).abs() < 1e-9
            })
            .collect();
        if at_radius.is_empty() {
            bail!(
                "check radius {} is not one of the sampled radii",
                pc.check_radius
            );
        }
        let worst = at_radius
            .iter()
            .map(|s| s.discrepancy.unwrap_or(f64::INFINITY))
            .fold(0.0, f64::max);
        checks.push(Check::at_most(
            format!("N={n} discrepancy at |lambda|={}", pc.check_radius),
            worst,
            pc.discrepancy_tol,
        ));
        for s in &rep.samples {
            t.push(vec![
                n.to_string(),
                num(s.lambda[0]),
                num(s.lambda[1]),
                num(s.remainder_norm),
                num(s.right_remainder_norm),
                num(s.grid_remainder_norm),
                num(s.resolvent_norm),
                s.discrepancy.map(num).unwrap_or_default(),
            ]);
        }
        per_n.push(json!({
            "n": n,
            "order": rep.order,
            "threshold_radius": rep.threshold_radius,
            "max_discrepancy": rep.max_discrepancy,
            "discrepancy_at_check_radius": worst,
            "slopes": serde_json::to_value(&rep.slopes)?,
        }));
    }
    let report = json!({ "ellipticity": ell_report, "lambdas": lambdas.len(), "orders": per_n });
    Ok(Outcome {
        checks,
        report,
        tables: vec![t],
    })
}

fn resolvent(cfg: &ExperimentConfig) -> Result<Outcome> {
    let rc = cfg
        .resolvent
        .as_ref()
        .context("missing [resolvent] section")?;
    let a = cfg.operator()?;
    let grid = cfg.grid()?;
    let sector_cfg = cfg.sector.clone().unwrap_or_default();
    let sector = sector_cfg.build()?;
    let lambdas = sector.samples();
    let fiber = rc.fiber.build()?;
    let budget = cfg.budget();
    let (gate, ell_report) = ellipticity_gate(cfg, &a)?;
    let mut checks = vec![gate];
    let r = match property(
        "resolvent",
        resolvent_rbound(&a, &sector, &lambdas, rc.s, rc.p, &fiber, &grid, &budget),
    )? {
        Ok(r) => r,
        Err(c) => {
            checks.push(c);
            return Ok(failed(checks, json!({ "ellipticity": ell_report })));
        }
    };
    checks.push(Check::flag("finite", r.value.is_finite()));
    if let Some(max) = rc.max_value {
        checks.push(Check::at_most("estimate_bound", r.value, max));
    }
    let mut refined = Value::Null;
    if let Some(tol) = rc.stability_tol {
        let fine = sector_cfg.refined().build()?;
        let r2 = resolvent_rbound(
            &a,
            &fine,
            &fine.samples(),
            rc.s,
            rc.p,
            &fiber,
            &grid,
            &budget,
        )?;
        let change = (r2.value - r.value).abs() / r.value.abs().max(f64::MIN_POSITIVE);
        checks.push(Check::at_most(
            "stability_under_sample_doubling",
            change,
            tol,
        ));
        refined = json!({ "value": r2.value, "samples": r2.samples, "relative_change": change });
    }
    let mut t = Table::new(
        "samples",
        &[
            "lambda_re",
            "lambda_im",
            "resolvent_norm",
            "lambda_resolvent_norm",
            "rbound_running",
        ],
    );
    let mut running: f64 = 0.0;
    for (l, n) in lambdas.iter().zip(&r.norms) {
        running = running.max(*n);
        t.push(vec![
            num(l.re),
            num(l.im),
            num(n / l.norm()),
            num(*n),
            num(running),
        ]);
    }
    let report = json!({ "ellipticity": ell_report, "estimate": serde_json::to_value(&r)?, "refined": refined });
    Ok(Outcome {
        checks,
        report,
        tables: vec![t],
    })
}

fn maxreg(cfg: &ExperimentConfig) -> Result<Outcome> {
    let mc = cfg.maxreg.as_ref().context("missing [maxreg] section")?;
    let a = cfg.operator()?;
    let (gate, ell_report) = ellipticity_gate(cfg, &a)?;
    if !gate.pass {
        return Ok(failed(vec![gate], json!({ "ellipticity": ell_report })));
    }
    let grid = cfg.grid()?;
    let margin = cfg.ellipticity.clone().unwrap_or_default().margin;
    let shift = choose_shift(&a, &grid, margin)?;
    let gamma = mc.gamma.unwrap_or(shift.gamma);
    let forcing = anisolab::elliptic::ForcingConfig {
        seed: cfg.seed,
        ..mc.forcing.clone()
    };
    let time = TimeGrid {
        t_end: mc.t_end,
        steps: mc.steps,
    };
    let mut checks = vec![gate];
    let mut t = Table::new(
        "samples",
        &[
            "p",
            "steps",
            "index",
            "kind",
            "ratio",
            "u_prime_ratio",
            "au_ratio",
            "f_norm",
        ],
    );
    let mut per_p = Vec::new();
    for &p in &mc.p {
        let r = match property(
            &format!("p={p}"),
            maxreg_experiment(&a, gamma, p, &time, &forcing, &grid),
        )? {
            Ok(r) => r,
            Err(c) => {
                checks.push(c);
                continue;
            }
        };
        checks.push(Check::flag(format!("p={p} finite C_p"), r.c_p.is_finite()));
        if p == 2.0 {
            if let Some([lo, hi]) = mc.c2_range {
                checks.push(Check::at_least("C_2 lower", r.c_p, lo));
                checks.push(Check::at_most("C_2 upper", r.c_p, hi));
            }
        }
        let mut halved = Value::Null;
        if let Some(tol) = mc.halving_tol {
            let r2 = maxreg_experiment(&a, gamma, p, &time.halved(), &forcing, &grid)?;
            let change = (r2.c_p - r.c_p).abs() / r.c_p;
            checks.push(Check::at_most(
                format!("p={p} time-step halving"),
                change,
                tol,
            ));
            halved = json!({ "c_p": r2.c_p, "steps": r2.steps, "relative_change": change });
        }
        for s in &r.samples {
            t.push(vec![
                num(p),
                r.steps.to_string(),
                s.index.to_string(),
                s.kind.to_string(),
                num(s.ratio),
                num(s.u_prime_ratio),
                num(s.au_ratio),
                num(s.f_norm),
            ]);
        }
        per_p.push(json!({
            "p": p,
            "c_p": r.c_p,
            "max_u_prime_ratio": r.max_u_prime_ratio,
            "max_au_ratio": r.max_au_ratio,
            "steps": r.steps,
            "dt": r.dt,
            "samples": r.samples.len(),
            "halved": halved,
        }));
    }
    let report = json!({
        "ellipticity": ell_report,
        "gamma": gamma,
        "shift": serde_json::to_value(&shift)?,
        "t_end": mc.t_end,
        "exponents": per_p,
    });
    Ok(Outcome {
        checks,
        report,
        tables: vec![t],
    })
}

fn ellipticity(cfg: &ExperimentConfig) -> Result<Outcome> {
    let a = cfg.operator()?;
    let margin = cfg.ellipticity.clone().unwrap_or_default().margin;
    let sector = cfg.sector()?;
    let rep = ellipticity_check(&a, &sector, &cfg.probes(), margin)?;
    let checks = vec![
        Check::at_least("principal_distance", rep.principal_distance, margin),
        Check::at_least("extended_distance", rep.extended_distance, margin),
    ];
    Ok(Outcome {
        checks,
        report: serde_json::to_value(&rep)?,
        tables: Vec::new(),
    })
}
