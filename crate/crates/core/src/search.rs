//! Worst-case noise search: minimize the nonlinear expansion energy `Σ_{m≥2} c_m²`
//! over a parametric noise family at a fixed variance budget.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dist::{DistributionModel, MixtureComponent, TabulatedDensity};
use crate::error::{Error, Result};
use crate::grid::GridSpec;
use crate::mmse::mmse_estimator;
use crate::poly::moment_coeffs;

pub const MAX_FAMILY_PARAMS: usize = 12;
/// Smallest mixture weight; keeps vanishing outlier components from gaming high moments.
pub const WEIGHT_FLOOR: f64 = 0.01;
/// Component variances lie within `e^{±span}` before the budget rescale.
pub const LOG_VARIANCE_SPAN: f64 = 3.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "size", rename_all = "snake_case")]
pub enum NoiseFamily {
    /// `k`-component Gaussian mixture.
    GaussianMixture(usize),
    /// Gaussian density corrected by Hermite terms of degree 3 through `M`.
    GramCharlier(usize),
}

impl NoiseFamily {
    pub fn num_params(&self) -> usize {
        match *self {
            Self::GaussianMixture(k) => 3 * k,
            Self::GramCharlier(m) => m.saturating_sub(2),
        }
    }

    fn check(&self) -> Result<()> {
        let n = self.num_params();
        let ok = match *self {
            Self::GaussianMixture(k) => k >= 1,
            Self::GramCharlier(m) => m >= 3,
        };
        if !ok || n > MAX_FAMILY_PARAMS {
            return Err(Error::PreconditionViolated(format!(
                "family {self:?} needs between 1 and {MAX_FAMILY_PARAMS} parameters"
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SearchOptions {
    pub restarts: usize,
    pub max_evals: usize,
    pub seed: u64,
    pub jitter: f64,
}

impl Default for SearchOptions {
    fn default() -> Self {
        Self {
            restarts: 5,
            max_evals: 2000,
            seed: 0x5eed,
            jitter: 0.5,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NoiseSearchResult {
    pub noise: DistributionModel,
    pub params: Vec<f64>,
    pub objective: f64,
    pub mmse_attained: f64,
    pub iterations: usize,
    pub converged: bool,
    pub restart: usize,
    /// Probability mass removed by clipping negative density values.
    pub clip_magnitude: f64,
}

/// Maps unconstrained parameters to a zero-mean noise law of variance `budget`.
#[derive(Debug, Clone, Copy)]
pub struct FamilyProjection {
    family: NoiseFamily,
    budget: f64,
    grid: GridSpec,
}

impl FamilyProjection {
    pub fn new(family: NoiseFamily, budget: f64) -> Result<Self> {
        family.check()?;
        if !(budget > 0.0 && budget.is_finite()) {
            return Err(Error::PreconditionViolated(format!(
                "noise budget must be positive, got {budget}"
            )));
        }
        let grid = GridSpec::new(16.0 * budget.sqrt(), 2048)?;
        Ok(Self {
            family,
            budget,
            grid,
        })
    }

    pub fn start(&self) -> Vec<f64> {
        match self.family {
            NoiseFamily::GaussianMixture(k) => {
                let mut p = vec![0.0; 3 * k];
                for i in 0..k {
                    p[k + i] = if k > 1 {
                        -0.5 + i as f64 / (k - 1) as f64
                    } else {
                        0.0
                    };
                }
                p
            }
            NoiseFamily::GramCharlier(m) => vec![0.0; m - 2],
        }
    }

    /// Noise law and clipped mass for a parameter vector.
    pub fn project(&self, p: &[f64]) -> Result<(DistributionModel, f64)> {
        match self.family {
            NoiseFamily::GaussianMixture(k) => Ok((self.mixture(k, p)?, 0.0)),
            NoiseFamily::GramCharlier(_) => self.gram_charlier(p),
        }
    }

    fn mixture(&self, k: usize, p: &[f64]) -> Result<DistributionModel> {
        let top = p[..k].iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let raw: Vec<f64> = p[..k].iter().map(|l| (l - top).exp()).collect();
        let total: f64 = raw.iter().sum();
        let weights: Vec<f64> = raw
            .iter()
            .map(|w| WEIGHT_FLOOR + (1.0 - k as f64 * WEIGHT_FLOOR) * w / total)
            .collect();
        let mean: f64 = weights.iter().zip(&p[k..2 * k]).map(|(w, m)| w * m).sum();
        let means: Vec<f64> = p[k..2 * k].iter().map(|m| m - mean).collect();
        let vars: Vec<f64> = p[2 * k..]
            .iter()
            .map(|s| s.clamp(-LOG_VARIANCE_SPAN, LOG_VARIANCE_SPAN).exp())
            .collect();
        let second: f64 = (0..k).map(|i| weights[i] * (vars[i] + means[i] * means[i])).sum();
        let c = (self.budget / second).sqrt();
        let components = (0..k)
            .map(|i| MixtureComponent {
                weight: weights[i],
                mean: means[i] * c,
                variance: vars[i] * c * c,
            })
            .collect();
        DistributionModel::mixture(components)
    }

    fn gram_charlier(&self, d: &[f64]) -> Result<(DistributionModel, f64)> {
        let sigma = self.budget.sqrt();
        let raw = TabulatedDensity::from_fn(self.grid, |z| {
            let t = z / sigma;
            let mut he = [1.0, t];
            let mut correction = 1.0;
            for (j, dm) in (2..).zip(std::iter::once(&0.0).chain(d.iter())) {
                let next = t * he[1] - (j - 1) as f64 * he[0];
                he = [he[1], next];
                correction += dm * next;
            }
            (-0.5 * t * t).exp() / (sigma * (2.0 * std::f64::consts::PI).sqrt()) * correction
        });
        let negative: f64 = raw.values.iter().filter(|v| **v < 0.0).map(|v| -v).sum::<f64>()
            * self.grid.dx();
        let clipped = TabulatedDensity::new(
            self.grid,
            raw.values.iter().map(|v| v.max(0.0)).collect(),
        )?;
        if clipped.mass() <= 0.0 {
            return Err(Error::InfeasibleFamily);
        }
        // interpolation perturbs the moments slightly, so repeat until they settle
        let mut t = clipped.normalized();
        for _ in 0..8 {
            let mean = t.raw_moment(1);
            let var = t.raw_moment(2) - mean * mean;
            if !(var > 0.0) {
                return Err(Error::InfeasibleFamily);
            }
            if mean.abs() < 1e-12 * self.budget.sqrt() && (var / self.budget - 1.0).abs() < 1e-12 {
                break;
            }
            let s = (self.budget / var).sqrt();
            let prev = t;
            t = TabulatedDensity::from_fn(self.grid, |z| prev.eval(z / s + mean) / s).normalized();
        }
        Ok((DistributionModel::tabulated(t)?, negative))
    }
}

/// `Σ_{m=2..order} c_m²` for the pair, or `+∞` when the expansion is unavailable.
pub fn nonlinear_energy(source: &DistributionModel, noise: &DistributionModel, order: usize) -> f64 {
    moment_coeffs(source, noise, order)
        .map(|c| c.nonlinear_energy())
        .ok()
        .filter(|v| v.is_finite())
        .unwrap_or(f64::INFINITY)
}

pub fn worst_noise_search(
    source: &DistributionModel,
    budget: f64,
    order: usize,
    family: NoiseFamily,
) -> Result<NoiseSearchResult> {
    worst_noise_search_with(source, budget, order, family, SearchOptions::default())
}

pub fn worst_noise_search_with(
    source: &DistributionModel,
    budget: f64,
    order: usize,
    family: NoiseFamily,
    opts: SearchOptions,
) -> Result<NoiseSearchResult> {
    source.validate()?;
    if order < 2 {
        return Err(Error::PreconditionViolated(
            "expansion order must be at least 2".into(),
        ));
    }
    if opts.restarts == 0 {
        return Err(Error::PreconditionViolated("need at least one restart".into()));
    }
    let proj = FamilyProjection::new(family, budget)?;
    let objective = |p: &[f64]| match proj.project(p) {
        Ok((noise, _)) => nonlinear_energy(source, &noise, order),
        Err(_) => f64::INFINITY,
    };
    let base = proj.start();
    if !objective(&base).is_finite() {
        return Err(Error::InfeasibleFamily);
    }

    let runs: Vec<Simplex> = (0..opts.restarts)
        .into_par_iter()
        .map(|r| {
            let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
            rng.set_stream(r as u64);
            let start: Vec<f64> = base
                .iter()
                .map(|b| {
                    if r == 0 {
                        *b
                    } else {
                        let n: f64 = StandardNormal.sample(&mut rng);
                        b + opts.jitter * n
                    }
                })
                .collect();
            nelder_mead(&objective, start, 0.5, opts.max_evals)
        })
        .collect();

    let (restart, best) = runs
        .iter()
        .enumerate()
        .fold(None::<(usize, &Simplex)>, |acc, (i, s)| match acc {
            Some((_, b)) if b.value <= s.value => acc,
            _ => Some((i, s)),
        })
        .expect("at least one restart");
    if !best.value.is_finite() {
        return Err(Error::InfeasibleFamily);
    }
    let (noise, clip_magnitude) = proj.project(&best.point)?;
    let grid = GridSpec::covering(&[source, &noise]);
    let mmse_attained = mmse_estimator(source, &noise, &grid)?.mmse;
    Ok(NoiseSearchResult {
        noise,
        params: best.point.clone(),
        objective: best.value,
        mmse_attained,
        iterations: best.iterations,
        converged: best.converged,
        restart,
        clip_magnitude,
    })
}

#[derive(Debug, Clone)]
struct Simplex {
    point: Vec<f64>,
    value: f64,
    iterations: usize,
    converged: bool,
}

fn nelder_mead(f: &impl Fn(&[f64]) -> f64, start: Vec<f64>, step: f64, max_evals: usize) -> Simplex {
    let n = start.len();
    let evals = std::cell::Cell::new(0usize);
    let eval = |p: &[f64]| {
        evals.set(evals.get() + 1);
        let v = f(p);
        if v.is_nan() {
            f64::INFINITY
        } else {
            v
        }
    };
    let mut pts: Vec<Vec<f64>> = vec![start.clone()];
    for i in 0..n {
        let mut p = start.clone();
        p[i] += step;
        pts.push(p);
    }
    let mut vals: Vec<f64> = pts.iter().map(|p| eval(p)).collect();
    let mut iterations = 0;
    let mut converged = false;

    while evals.get() < max_evals {
        let mut order: Vec<usize> = (0..=n).collect();
        order.sort_by(|&a, &b| vals[a].total_cmp(&vals[b]));
        pts = order.iter().map(|&i| pts[i].clone()).collect();
        vals = order.iter().map(|&i| vals[i]).collect();

        let spread = vals[n] - vals[0];
        let size = pts[1..]
            .iter()
            .flat_map(|p| p.iter().zip(&pts[0]).map(|(a, b)| (a - b).abs()))
            .fold(0.0, f64::max);
        if (spread.is_finite() && spread <= 1e-15 * (1.0 + vals[0].abs())) || size < 1e-10 {
            converged = true;
            break;
        }
        iterations += 1;

        let centroid: Vec<f64> = (0..n)
            .map(|j| pts[..n].iter().map(|p| p[j]).sum::<f64>() / n as f64)
            .collect();
        let along = |t: f64| -> Vec<f64> {
            centroid
                .iter()
                .zip(&pts[n])
                .map(|(c, w)| c + t * (c - w))
                .collect()
        };

        let reflected = along(1.0);
        let fr = eval(&reflected);
        if fr < vals[0] {
            let expanded = along(2.0);
            let fe = eval(&expanded);
            if fe < fr {
                pts[n] = expanded;
                vals[n] = fe;
            } else {
                pts[n] = reflected;
                vals[n] = fr;
            }
            continue;
        }
        if fr < vals[n - 1] {
            pts[n] = reflected;
            vals[n] = fr;
            continue;
        }
        let (contracted, fc) = if fr < vals[n] {
            let c = along(0.5);
            let v = eval(&c);
            (c, v)
        } else {
            let c = along(-0.5);
            let v = eval(&c);
            (c, v)
        };
        if fc < vals[n].min(fr) {
            pts[n] = contracted;
            vals[n] = fc;
            continue;
        }
        for i in 1..=n {
            let shrunk: Vec<f64> = pts[i]
                .iter()
                .zip(&pts[0])
                .map(|(p, b)| b + 0.5 * (p - b))
                .collect();
            vals[i] = eval(&shrunk);
            pts[i] = shrunk;
        }
    }

    let best = (0..=n)
        .min_by(|&a, &b| vals[a].total_cmp(&vals[b]))
        .expect("non-empty simplex");
    Simplex {
        point: pts[best].clone(),
        value: vals[best],
        iterations,
        converged,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn nelder_mead_finds_quadratic_minimum() {
        let f = |p: &[f64]| (p[0] - 1.0).powi(2) + 10.0 * (p[1] + 2.0).powi(2);
        let s = nelder_mead(&f, vec![0.0, 0.0], 0.5, 2000);
        assert!(s.converged);
        assert!((s.point[0] - 1.0).abs() < 1e-5 && (s.point[1] + 2.0).abs() < 1e-5);
    }

    #[test]
    fn mixture_projection_meets_budget() {
        let proj = FamilyProjection::new(NoiseFamily::GaussianMixture(3), 0.7).unwrap();
        let (noise, clip) = proj
            .project(&[0.3, -1.0, 2.0, 1.5, -0.2, 0.9, -1.0, 0.0, 2.0])
            .unwrap();
        assert_eq!(clip, 0.0);
        assert!(noise.mean().abs() < 1e-12);
        assert!((noise.variance() - 0.7).abs() < 1e-12);
    }

    #[test]
    fn gram_charlier_projection_clips_and_meets_budget() {
        let proj = FamilyProjection::new(NoiseFamily::GramCharlier(5), 1.0).unwrap();
        let (noise, clip) = proj.project(&[0.4, 0.3, 0.1]).unwrap();
        assert!(clip > 0.0);
        assert!(noise.mean().abs() < 1e-6);
        assert!((noise.variance() - 1.0).abs() < 1e-6);
    }

    #[test]
    fn family_size_limits() {
        assert!(FamilyProjection::new(NoiseFamily::GaussianMixture(5), 1.0).is_err());
        assert!(FamilyProjection::new(NoiseFamily::GramCharlier(2), 1.0).is_err());
        assert!(FamilyProjection::new(NoiseFamily::GaussianMixture(2), 0.0).is_err());
    }
}
