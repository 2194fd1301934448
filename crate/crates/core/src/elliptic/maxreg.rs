use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::DifferentialOperatorSpec;
use crate::aniso::GridSpec;
use crate::error::{Error, Result};
use crate::psido::{GridFunction, GridOperator};
use crate::rbound::BanachSpaceSpec;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TimeGrid {
    pub t_end: f64,
    pub steps: usize,
}

impl TimeGrid {
    pub fn validate(&self) -> Result<()> {
        if !(self.t_end > 0.0 && self.t_end.is_finite()) || self.steps < 2 {
            return Err(Error::InvalidArgument(format!(
                "time grid [0, {}] with {} steps",
                self.t_end, self.steps
            )));
        }
        Ok(())
    }

    pub fn dt(&self) -> f64 {
        self.t_end / self.steps as f64
    }

    pub fn halved(&self) -> Self {
        Self {
            t_end: self.t_end,
            steps: 2 * self.steps,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ForcingConfig {
    /// Number of random forcings.
    pub samples: usize,
    pub seed: u64,
    /// Spatial modes are drawn from `1 ≤ |k|_∞ ≤ max_mode`.
    pub max_mode: i64,
    pub modes_per_sample: usize,
    pub time_modes: usize,
    /// Forcings live on `[0, support·t_end]`.
    pub support: f64,
    /// Adds a deterministic single-mode forcing with a slow time profile.
    pub single_mode: bool,
}

impl Default for ForcingConfig {
    fn default() -> Self {
        Self {
            samples: 32,
            seed: 0,
            max_mode: 4,
            modes_per_sample: 3,
            time_modes: 4,
            support: 0.5,
            single_mode: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum TimeProfile {
    /// `sin²(πt/T)`.
    SineSquared,
    /// `Σ_q a_q sin((q+1)πt/T)`.
    Sines(Vec<Complex64>),
}

impl TimeProfile {
    fn value(&self, t: f64, support: f64) -> Complex64 {
        if t <= 0.0 || t >= support {
            return Complex64::new(0.0, 0.0);
        }
        let s = std::f64::consts::PI * t / support;
        match self {
            TimeProfile::SineSquared => Complex64::new(s.sin().powi(2), 0.0),
            TimeProfile::Sines(a) => a
                .iter()
                .enumerate()
                .map(|(q, c)| c * ((q + 1) as f64 * s).sin())
                .sum(),
        }
    }
}

/// `g(t) · v e^{iκ_k·x}`.
#[derive(Debug, Clone, PartialEq)]
pub struct ForcingTerm {
    pub k: Vec<i64>,
    pub amplitude: Vec<Complex64>,
    pub profile: TimeProfile,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ForcingSample {
    pub kind: &'static str,
    pub terms: Vec<ForcingTerm>,
    pub support: f64,
}

impl ForcingConfig {
    pub fn build(&self, grid: &GridSpec, m: usize, time: &TimeGrid) -> Result<Vec<ForcingSample>> {
        let half = (grid.points / 2) as i64;
        if self.max_mode < 1 || self.max_mode >= half {
            return Err(Error::InvalidArgument(format!(
                "max mode {} outside [1, {})",
                self.max_mode, half
            )));
        }
        if !(self.support > 0.0 && self.support <= 1.0) {
            return Err(Error::InvalidArgument(format!(
                "support fraction {} outside (0, 1]",
                self.support
            )));
        }
        let support = self.support * time.t_end;
        let mut out = Vec::new();
        if self.single_mode {
            let mut k = vec![0; grid.dim];
            k[0] = (half / 4).max(1);
            let mut amp = vec![Complex64::new(0.0, 0.0); m];
            amp[0] = Complex64::new(1.0, 0.0);
            out.push(ForcingSample {
                kind: "single_mode",
                terms: vec![ForcingTerm {
                    k,
                    amplitude: amp,
                    profile: TimeProfile::SineSquared,
                }],
                support,
            });
        }
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        let gauss = |rng: &mut ChaCha8Rng| {
            Complex64::new(rng.sample(StandardNormal), rng.sample(StandardNormal))
        };
        for _ in 0..self.samples {
            let mut terms = Vec::with_capacity(self.modes_per_sample);
            for _ in 0..self.modes_per_sample {
                let k = loop {
                    let k: Vec<i64> = (0..grid.dim)
                        .map(|_| rng.random_range(-self.max_mode..=self.max_mode))
                        .collect();
                    if k.iter().any(|&v| v != 0) {
                        break k;
                    }
                };
                let amplitude = (0..m).map(|_| gauss(&mut rng)).collect();
                let coefs = (0..self.time_modes)
                    .map(|q| gauss(&mut rng) / (q + 1) as f64)
                    .collect();
                terms.push(ForcingTerm {
                    k,
                    amplitude,
                    profile: TimeProfile::Sines(coefs),
                });
            }
            out.push(ForcingSample {
                kind: "random",
                terms,
                support,
            });
        }
        if out.is_empty() {
            return Err(Error::Empty("forcing samples"));
        }
        Ok(out)
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct SampleRatio {
    pub index: usize,
    pub kind: &'static str,
    /// `(‖u'‖_p^p + ‖(A-γ)u‖_p^p)^{1/p} / ‖f‖_p`.
    pub ratio: f64,
    pub u_prime_ratio: f64,
    pub au_ratio: f64,
    pub f_norm: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct MaxRegReport {
    pub p: f64,
    pub gamma: f64,
    pub t_end: f64,
    pub steps: usize,
    pub dt: f64,
    /// Largest sample ratio.
    pub c_p: f64,
    pub max_u_prime_ratio: f64,
    pub max_au_ratio: f64,
    pub samples: Vec<SampleRatio>,
}

/// `exp(h·[[B, I, 0], [0, 0, I], [0, 0, 0]])`, returning the three top blocks.
fn propagators(
    b: &DMatrix<Complex64>,
    h: f64,
) -> (DMatrix<Complex64>, DMatrix<Complex64>, DMatrix<Complex64>) {
    let n = b.nrows();
    let mut z = DMatrix::zeros(3 * n, 3 * n);
    z.view_mut((0, 0), (n, n)).copy_from(b);
    for i in 0..n {
        z[(i, n + i)] = Complex64::new(1.0, 0.0);
        z[(n + i, 2 * n + i)] = Complex64::new(1.0, 0.0);
    }
    let e = (z * Complex64::new(h, 0.0)).exp();
    (
        e.view((0, 0), (n, n)).into_owned(),
        e.view((0, n), (n, n)).into_owned(),
        e.view((0, 2 * n), (n, n)).into_owned(),
    )
}

struct Accum {
    up: f64,
    au: f64,
    f: f64,
}

/// Solves `u' - (A - γ)u = f`, `u(0) = 0`, exactly for piecewise-linear-in-time
/// forcing and accumulates the space-time `L_p` norms with left Riemann weights.
fn solve_sample(
    b: &GridOperator,
    sample: &ForcingSample,
    fiber: &BanachSpaceSpec,
    p: f64,
    time: &TimeGrid,
    props: &Props,
) -> Result<Accum> {
    let grid = b.grid().clone();
    let m = fiber.dim;
    let dt = time.dt();
    let shapes: Vec<GridFunction> = sample
        .terms
        .iter()
        .map(|t| GridFunction::mode(grid.clone(), fiber.clone(), &t.k, &t.amplitude))
        .collect::<Result<Vec<_>>>()?;
    let forcing_at = |t: f64, spectral: bool| -> Vec<Complex64> {
        let mut acc = vec![Complex64::new(0.0, 0.0); grid.node_count() * m];
        for (term, shape) in sample.terms.iter().zip(&shapes) {
            let g = term.profile.value(t, sample.support);
            if g == Complex64::new(0.0, 0.0) {
                continue;
            }
            let v = if spectral {
                shape.spectrum()
            } else {
                shape.values().to_vec()
            };
            for (a, s) in acc.iter_mut().zip(v) {
                *a += g * s;
            }
        }
        acc
    };
    let mut acc = Accum {
        up: 0.0,
        au: 0.0,
        f: 0.0,
    };
    let norm_p = |vals: Vec<Complex64>| -> Result<f64> {
        Ok(GridFunction::new(grid.clone(), fiber.clone(), vals)?
            .lp_norm(p)
            .powf(p))
    };
    match props {
        Props::Slots(slots) => {
            let n = grid.node_count();
            let mut u = vec![Complex64::new(0.0, 0.0); n * m];
            let mut f_prev = forcing_at(0.0, true);
            let blocks = b.slot_blocks().expect("translation invariant");
            for step in 0..time.steps {
                let t = step as f64 * dt;
                let mut bu = vec![Complex64::new(0.0, 0.0); n * m];
                for k in 0..n {
                    let v = &blocks[k] * DVector::from_column_slice(&u[k * m..(k + 1) * m]);
                    bu[k * m..(k + 1) * m].copy_from_slice(v.as_slice());
                }
                let up: Vec<Complex64> = bu.iter().zip(&f_prev).map(|(x, y)| x + y).collect();
                let phys = |s: &[Complex64]| -> Result<Vec<Complex64>> {
                    Ok(GridFunction::from_spectrum(grid.clone(), fiber.clone(), s)?.into_values())
                };
                acc.up += norm_p(phys(&up)?)? * dt;
                acc.au += norm_p(phys(&bu)?)? * dt;
                acc.f += norm_p(phys(&f_prev)?)? * dt;
                let f_next = forcing_at(t + dt, true);
                for k in 0..n {
                    let r = k * m..(k + 1) * m;
                    let (e0, e1, e2) = &slots[k];
                    let fv = DVector::from_column_slice(&f_prev[r.clone()]);
                    let gv = (DVector::from_column_slice(&f_next[r.clone()]) - &fv)
                        / Complex64::new(dt, 0.0);
                    let next = e0 * DVector::from_column_slice(&u[r.clone()]) + e1 * fv + e2 * gv;
                    u[r].copy_from_slice(next.as_slice());
                }
                f_prev = f_next;
            }
        }
        Props::Dense(e0, e1, e2) => {
            let bm = b.to_dense();
            let mut u = DVector::zeros(bm.nrows());
            let mut f_prev = DVector::from_vec(forcing_at(0.0, false));
            for step in 0..time.steps {
                let t = step as f64 * dt;
                let bu = &bm * &u;
                let up = &bu + &f_prev;
                acc.up += norm_p(up.as_slice().to_vec())? * dt;
                acc.au += norm_p(bu.as_slice().to_vec())? * dt;
                acc.f += norm_p(f_prev.as_slice().to_vec())? * dt;
                let f_next = DVector::from_vec(forcing_at(t + dt, false));
                let g = (&f_next - &f_prev) / Complex64::new(dt, 0.0);
                u = e0 * &u + e1 * &f_prev + e2 * g;
                f_prev = f_next;
            }
        }
    }
    Ok(acc)
}

enum Props {
    Slots(Vec<(DMatrix<Complex64>, DMatrix<Complex64>, DMatrix<Complex64>)>),
    Dense(DMatrix<Complex64>, DMatrix<Complex64>, DMatrix<Complex64>),
}

/// Runs the maximal-regularity experiment on explicit forcing samples.
pub fn maxreg_with_forcing(
    a: &DifferentialOperatorSpec,
    gamma: f64,
    p: f64,
    time: &TimeGrid,
    grid: &GridSpec,
    samples: &[ForcingSample],
) -> Result<MaxRegReport> {
    time.validate()?;
    if !(p > 1.0 && p.is_finite()) {
        return Err(Error::InvalidArgument(format!(
            "exponent {p} must lie in (1, ∞)"
        )));
    }
    let b = a.grid_operator(grid)?.shifted(Complex64::new(-gamma, 0.0));
    if let Some(e) = b.eigenvalues()?.into_iter().find(|e| e.re >= 0.0) {
        return Err(Error::UnstableMode {
            eigenvalue: e,
            margin: 0.0,
        });
    }
    let dt = time.dt();
    let props = match b.slot_blocks() {
        Some(blocks) => Props::Slots(blocks.par_iter().map(|bk| propagators(bk, dt)).collect()),
        None => {
            if grid.dim != 1 {
                return Err(Error::Precondition(
                    "x-dependent evolution is only supported for d = 1".into(),
                ));
            }
            let (e0, e1, e2) = propagators(&b.to_dense(), dt);
            Props::Dense(e0, e1, e2)
        }
    };
    let fiber = BanachSpaceSpec::euclidean(a.m);
    let accs: Vec<Result<Accum>> = samples
        .par_iter()
        .map(|s| solve_sample(&b, s, &fiber, p, time, &props))
        .collect();
    let mut out = Vec::with_capacity(samples.len());
    for (index, (acc, s)) in accs.into_iter().zip(samples).enumerate() {
        let acc = acc?;
        let f_norm = acc.f.powf(1.0 / p);
        let (ratio, u_prime_ratio, au_ratio) = if f_norm == 0.0 {
            (0.0, 0.0, 0.0)
        } else {
            (
                (acc.up + acc.au).powf(1.0 / p) / f_norm,
                acc.up.powf(1.0 / p) / f_norm,
                acc.au.powf(1.0 / p) / f_norm,
            )
        };
        out.push(SampleRatio {
            index,
            kind: s.kind,
            ratio,
            u_prime_ratio,
            au_ratio,
            f_norm,
        });
    }
    let c_p = out.iter().map(|s| s.ratio).fold(0.0, f64::max);
    Ok(MaxRegReport {
        p,
        gamma,
        t_end: time.t_end,
        steps: time.steps,
        dt,
        c_p,
        max_u_prime_ratio: out.iter().map(|s| s.u_prime_ratio).fold(0.0, f64::max),
        max_au_ratio: out.iter().map(|s| s.au_ratio).fold(0.0, f64::max),
        samples: out,
    })
}

/// `C_p ≈ sup ‖(u', (A-γ)u)‖_{L_p} / ‖f‖_{L_p}` over seeded forcings.
pub fn maxreg_experiment(
    a: &DifferentialOperatorSpec,
    gamma: f64,
    p: f64,
    time: &TimeGrid,
    forcing: &ForcingConfig,
    grid: &GridSpec,
) -> Result<MaxRegReport> {
    time.validate()?;
    let samples = forcing.build(grid, a.m, time)?;
    maxreg_with_forcing(a, gamma, p, time, grid, &samples)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::elliptic::{choose_shift, laplacian};

    #[test]
    fn zero_forcing_gives_zero() {
        let g = GridSpec::new(1, 3.0, 16).unwrap();
        let heat = laplacian(1, -1.0);
        let s = ForcingSample {
            kind: "zero",
            terms: vec![],
            support: 1.0,
        };
        let r = maxreg_with_forcing(
            &heat,
            0.5,
            2.0,
            &TimeGrid {
                t_end: 2.0,
                steps: 20,
            },
            &g,
            &[s],
        )
        .unwrap();
        assert_eq!(r.c_p, 0.0);
    }

    #[test]
    fn heat_c2_close_to_one() {
        let g = GridSpec::new(1, std::f64::consts::PI, 32).unwrap();
        let heat = laplacian(1, -1.0);
        let gamma = choose_shift(&heat, &g, 1e-6).unwrap().gamma;
        let time = TimeGrid {
            t_end: 16.0,
            steps: 1600,
        };
        let cfg = ForcingConfig {
            samples: 4,
            ..Default::default()
        };
        let r = maxreg_experiment(&heat, gamma, 2.0, &time, &cfg, &g).unwrap();
        assert!(r.c_p <= 1.05 && r.c_p >= 0.95, "{r:?}");
        assert!(matches!(
            maxreg_experiment(&heat, 0.0, 2.0, &time, &cfg, &g),
            Err(Error::UnstableMode { .. })
        ));
    }
}
