//! Acceptance suite: one PASS/FAIL line per criterion, nonzero exit if any fails.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::Command;
use std::time::Instant;

use anisolab::aniso::{peetre_check, AnisotropyVector};
use anisolab::rbound::{
    contraction_check, rbound_estimate, spectral_norm, BanachSpaceSpec, OperatorFamily,
    RBoundBudget,
};
use anisolab_cli::{run_file, RunOptions, RunResult, EXIT_PROPERTY};
use anyhow::{ensure, Context, Result};
use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn configs_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs")
}

fn work_dir() -> PathBuf {
    Path::new(env!("CARGO_TARGET_TMPDIR")).join("acceptance")
}

fn cgauss(rng: &mut ChaCha8Rng) -> Complex64 {
    Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0))
}

/// Runs configs once and keeps the first-run bytes for the determinism check.
struct Runner {
    first: BTreeMap<String, Vec<(String, Vec<u8>)>>,
    results: BTreeMap<String, RunResult>,
}

impl Runner {
    fn run(&mut self, stem: &str) -> Result<&RunResult> {
        if !self.results.contains_key(stem) {
            let out = work_dir().join("first");
            let r = run_file(
                &configs_dir().join(format!("{stem}.toml")),
                &RunOptions {
                    out,
                    ..Default::default()
                },
            )
            .with_context(|| format!("running {stem}"))?;
            self.first.insert(stem.to_string(), read_outputs(&r)?);
            self.results.insert(stem.to_string(), r);
        }
        Ok(&self.results[stem])
    }
}

fn read_outputs(r: &RunResult) -> Result<Vec<(String, Vec<u8>)>> {
    r.written
        .iter()
        .map(|p| {
            Ok((
                p.file_name().unwrap().to_string_lossy().into_owned(),
                fs::read(p)?,
            ))
        })
        .collect()
}

fn failing(r: &RunResult) -> Vec<String> {
    r.outcome
        .checks
        .iter()
        .filter(|c| !c.pass)
        .map(|c| format!("{} ({:e} vs {:e})", c.name, c.value, c.bound))
        .collect()
}

fn check_value(r: &RunResult, prefix: &str) -> Vec<f64> {
    r.outcome
        .checks
        .iter()
        .filter(|c| c.name.starts_with(prefix))
        .map(|c| c.value)
        .collect()
}

fn hilbert_oracle() -> Result<String> {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let mut worst_low: f64 = f64::INFINITY;
    let mut worst_high: f64 = 0.0;
    for fam in 0..50u64 {
        let k = rng.random_range(1..=8);
        let d = rng.random_range(1..=8);
        let members: Vec<DMatrix<Complex64>> = (0..k)
            .map(|_| DMatrix::from_fn(d, d, |_, _| cgauss(&mut rng)))
            .collect();
        let family = OperatorFamily::new(members)?;
        let sp = BanachSpaceSpec::euclidean(d);
        let est = rbound_estimate(
            &family,
            &sp,
            &sp,
            2.0,
            &RBoundBudget::with_seed(fam).sampling(),
        )?;
        let oracle = family
            .members()
            .iter()
            .map(spectral_norm)
            .fold(0.0, f64::max);
        worst_low = worst_low.min(est.value / oracle);
        worst_high = worst_high.max(est.value / oracle);
    }
    let secs = start.elapsed().as_secs_f64();
    ensure!(worst_low >= 0.95, "ratio {worst_low} below 0.95");
    ensure!(worst_high <= 1.0 + 1e-12, "ratio {worst_high} above 1");
    ensure!(secs < 60.0, "took {secs:.1} s");
    Ok(format!(
        "50 families, estimate/oracle in [{worst_low:.12}, {worst_high:.12}], {secs:.1} s"
    ))
}

fn kahane_contraction() -> Result<String> {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let mut violations = 0;
    let mut worst: f64 = 0.0;
    for t in 0..1000 {
        let n = rng.random_range(1..=8);
        let d = rng.random_range(1..=4);
        let space = match t % 3 {
            0 => BanachSpaceSpec::euclidean(d),
            1 => BanachSpaceSpec::lp(d, 1.5)?,
            _ => BanachSpaceSpec::lp(d, 4.0)?,
        };
        let p = [1.0, 2.0, 3.0][t % 3];
        let beta: Vec<Complex64> = (0..n).map(|_| cgauss(&mut rng)).collect();
        let alpha: Vec<Complex64> = beta
            .iter()
            .map(|b| {
                Complex64::from_polar(
                    b.norm() * rng.random_range(0.0..=1.0),
                    rng.random_range(-3.2..3.2),
                )
            })
            .collect();
        let xs: Vec<DVector<Complex64>> = (0..n)
            .map(|_| DVector::from_fn(d, |_, _| cgauss(&mut rng)))
            .collect();
        let r = contraction_check(&alpha, &beta, &xs, p, &space)?;
        worst = worst.max(r.ratio);
        if !r.pass {
            violations += 1;
        }
    }
    ensure!(
        violations == 0,
        "{violations} violations, worst ratio {worst}"
    );
    Ok(format!("1000 pairs, N <= 8, worst ratio {worst:.4} <= 2"))
}

fn peetre() -> Result<String> {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let mut total = 0;
    let mut worst: f64 = 0.0;
    for ell in [vec![1, 1], vec![1, 2], vec![2, 3]] {
        let ell = AnisotropyVector::new(ell)?;
        let count = if total == 0 { 33_334 } else { 33_333 };
        let point = |rng: &mut ChaCha8Rng| -> Vec<f64> {
            (0..2)
                .map(|_| rng.random_range(-1.0..1.0) * 10f64.powf(rng.random_range(-3.0..4.0)))
                .collect()
        };
        for _ in 0..count {
            let pair = vec![(point(&mut rng), point(&mut rng))];
            let s = rng.random_range(-6.0..6.0);
            let r = peetre_check(s, &pair, &ell)?;
            ensure!(
                r.violations == 0,
                "violation for ell = {:?}, s = {s}, pair {:?}",
                ell.entries(),
                pair
            );
            worst = worst.max(r.max_ratio / r.bound);
        }
        total += count;
    }
    Ok(format!("{total} samples, max ratio/bound {worst:.6}"))
}

const SYMBOLS: [&str; 5] = [
    "symbol_heat_resolvent",
    "symbol_anisotropic_resolvent",
    "symbol_laplacian_2d",
    "symbol_variable_coefficient",
    "symbol_matrix_system",
];

fn classical_symbols(runner: &mut Runner) -> Result<String> {
    let mut worst: f64 = 0.0;
    for stem in SYMBOLS {
        let r = runner.run(stem)?;
        ensure!(r.outcome.pass(), "{stem}: {:?}", failing(r));
        let change = check_value(r, "saturation").into_iter().fold(0.0, f64::max);
        ensure!(
            check_value(r, "finite").iter().all(|&v| v == 1.0),
            "{stem}: divergent seminorm"
        );
        worst = worst.max(change);
    }
    ensure!(worst <= 0.02, "worst relative change {worst}");
    Ok(format!(
        "5 symbols, |beta| <= 2, worst change under doubling {:.3}%",
        100.0 * worst
    ))
}

fn composition(runner: &mut Runner) -> Result<String> {
    let r = runner.run("composition_heat")?;
    ensure!(r.outcome.pass(), "{:?}", failing(r));
    let slopes = check_value(r, "N=");
    ensure!(slopes.len() == 3, "expected N = 0, 1, 2");
    Ok(format!(
        "slopes {slopes:?} against targets [1.25, 0.25, -0.75]"
    ))
}

fn parametrix(runner: &mut Runner) -> Result<String> {
    let r = runner.run("parametrix_perturbed_heat")?;
    ensure!(r.outcome.pass(), "{:?}", failing(r));
    let disc = check_value(r, "N=1 discrepancy");
    let slopes: Vec<f64> = r
        .outcome
        .checks
        .iter()
        .filter(|c| c.name.contains("slope"))
        .map(|c| c.value - c.bound)
        .collect();
    ensure!(!disc.is_empty() && !slopes.is_empty(), "missing checks");
    Ok(format!(
        "M = 128, max discrepancy at |lambda| = 1e3: {:e}, worst slope margin {:.3}",
        disc.iter().cloned().fold(0.0, f64::max),
        slopes.iter().cloned().fold(f64::NEG_INFINITY, f64::max)
    ))
}

fn resolvent(runner: &mut Runner) -> Result<String> {
    let heat = runner.run("resolvent_heat")?;
    ensure!(heat.outcome.pass(), "heat: {:?}", failing(heat));
    let value = check_value(heat, "estimate_bound")[0];
    ensure!(value <= 1.0 + 1e-9, "heat estimate {value}");
    let aniso = runner.run("resolvent_anisotropic")?;
    ensure!(aniso.outcome.pass(), "anisotropic: {:?}", failing(aniso));
    let change = check_value(aniso, "stability")[0];
    ensure!(change <= 0.05, "anisotropic change {change}");
    Ok(format!(
        "heat estimate {value:.15}, anisotropic change under doubling {change:e}"
    ))
}

fn maxreg(runner: &mut Runner) -> Result<String> {
    let heat = runner.run("maxreg_heat")?;
    ensure!(heat.outcome.pass(), "heat: {:?}", failing(heat));
    let c2 = check_value(heat, "C_2 lower")[0];
    ensure!((0.95..=1.05).contains(&c2), "C_2 = {c2}");
    let halving = check_value(heat, "p=");
    let bad = runner.run("maxreg_positive_laplacian")?;
    ensure!(
        bad.exit_code() == EXIT_PROPERTY,
        "+Delta exit code {}",
        bad.exit_code()
    );
    let names: Vec<&str> = bad.outcome.checks.iter().map(|c| c.name.as_str()).collect();
    ensure!(
        names == ["parameter_ellipticity"],
        "+Delta not stopped at ellipticity: {names:?}"
    );
    let status = Command::new(env!("CARGO_BIN_EXE_anisolab"))
        .args(["maxreg", "--config"])
        .arg(configs_dir().join("maxreg_positive_laplacian.toml"))
        .arg("--out")
        .arg(work_dir().join("binary"))
        .output()?
        .status;
    ensure!(
        status.code() == Some(EXIT_PROPERTY),
        "binary exit status {status}"
    );
    Ok(format!("C_2 = {c2:.6}, p = 3, 4 finite and halving checks {halving:?}, +Delta rejected with exit 2"))
}

fn determinism(runner: &mut Runner) -> Result<String> {
    let mut stems: Vec<String> = fs::read_dir(configs_dir())?
        .filter_map(|e| e.ok())
        .map(|e| e.path())
        .filter(|p| p.extension().is_some_and(|x| x == "toml"))
        .map(|p| p.file_stem().unwrap().to_string_lossy().into_owned())
        .collect();
    stems.sort();
    let mut files = 0;
    for stem in &stems {
        runner.run(stem)?;
        let out = work_dir().join("second");
        let again = run_file(
            &configs_dir().join(format!("{stem}.toml")),
            &RunOptions {
                out,
                ..Default::default()
            },
        )?;
        let second = read_outputs(&again)?;
        let first = &runner.first[stem];
        ensure!(first.len() == second.len(), "{stem}: different output sets");
        for ((name, a), (_, b)) in first.iter().zip(&second) {
            ensure!(a == b, "{stem}: {name} differs between runs");
            files += 1;
        }
    }
    Ok(format!(
        "{} configs, {files} output files byte-identical",
        stems.len()
    ))
}

type Criterion = Box<dyn FnOnce(&mut Runner) -> Result<String>>;

fn main() {
    let start = Instant::now();
    let _ = fs::remove_dir_all(work_dir());
    let mut runner = Runner {
        first: BTreeMap::new(),
        results: BTreeMap::new(),
    };
    let criteria: Vec<(&str, Criterion)> = vec![
        ("1 hilbert r-bound oracle", Box::new(|_| hilbert_oracle())),
        ("2 kahane contraction", Box::new(|_| kahane_contraction())),
        ("3 peetre inequality", Box::new(|_| peetre())),
        (
            "4 classical symbols are r-bounded",
            Box::new(classical_symbols),
        ),
        ("5 composition remainder order", Box::new(composition)),
        ("6 parametrix vs direct inverse", Box::new(parametrix)),
        ("7 resolvent r-bound", Box::new(resolvent)),
        ("8 maximal regularity", Box::new(maxreg)),
        ("9 determinism", Box::new(determinism)),
    ];
    let mut failed = 0;
    for (name, f) in criteria {
        let t = Instant::now();
        match f(&mut runner) {
            Ok(detail) => println!(
                "PASS criterion {name}: {detail} [{:.1} s]",
                t.elapsed().as_secs_f64()
            ),
            Err(e) => {
                failed += 1;
                println!(
                    "FAIL criterion {name}: {e:#} [{:.1} s]",
                    t.elapsed().as_secs_f64()
                );
            }
        }
    }
    let total = start.elapsed().as_secs_f64();
    println!(
        "acceptance: {} of 9 criteria passed in {total:.1} s",
        9 - failed
    );
    if failed > 0 {
        std::process::exit(1);
    }
}
