//! Conditional-mean estimation of `X` from `U = X + Z`.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::cf::{cf_of, cf_power_with, density_from_cf, PowerOptions, Validity};
use crate::dist::DistributionModel;
use crate::error::{Error, Result};
use crate::grid::GridSpec;

/// Below this output density the conditional mean is extended from its nearest neighbour.
pub const DENSITY_FLOOR: f64 = 1e-12;
const COVERAGE_TAIL: f64 = 1e-10;
/// Tabulated laws carry a transform noise floor that a tighter tail budget would count as mass.
const TABULATED_COVERAGE_TAIL: f64 = 1e-8;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EstimatorCurve {
    pub grid: GridSpec,
    /// `h(u_k) = E[X | U = u_k]`.
    pub values: Vec<f64>,
    /// `f_U(u_k)`.
    pub output_density: Vec<f64>,
    pub mmse: f64,
    /// `L²(f_U)` distance between `h` and its best affine fit.
    pub linearity_residual: f64,
    pub linear_gain: f64,
    pub linear_offset: f64,
}

impl EstimatorCurve {
    /// Linear interpolation of `h`, held constant beyond the grid.
    pub fn eval(&self, u: f64) -> f64 {
        interpolate(&self.grid, &self.values, u)
    }
}

pub(crate) fn interpolate(grid: &GridSpec, values: &[f64], u: f64) -> f64 {
    let n = values.len();
    let t = u / grid.dx() + grid.center() as f64;
    if t <= 0.0 {
        return values[0];
    }
    if t >= (n - 1) as f64 {
        return values[n - 1];
    }
    let k = t.floor() as usize;
    let frac = t - k as f64;
    values[k] * (1.0 - frac) + values[k + 1] * frac
}

pub(crate) fn require_coverage(dists: &[&DistributionModel], grid: &GridSpec) -> Result<()> {
    let required: f64 = dists
        .iter()
        .map(|d| match d {
            DistributionModel::Tabulated(_) => d.tail_half_width(TABULATED_COVERAGE_TAIL),
            _ => d.tail_half_width(COVERAGE_TAIL),
        })
        .sum();
    if required > grid.half_width() {
        return Err(Error::GridTooNarrow {
            half_width: grid.half_width(),
            required,
            tolerance: COVERAGE_TAIL,
        });
    }
    Ok(())
}

fn require_density(noise: &DistributionModel) -> Result<()> {
    if noise.is_atomic() {
        return Err(Error::NoDensity(noise.family_name()));
    }
    Ok(())
}

fn require_zero_mean(d: &DistributionModel) -> Result<()> {
    let m = d.mean();
    if m.abs() > 1e-9 * d.std_dev().max(1.0) {
        return Err(Error::NonZeroMean(m));
    }
    Ok(())
}

pub fn mmse_estimator(
    source: &DistributionModel,
    noise: &DistributionModel,
    grid: &GridSpec,
) -> Result<EstimatorCurve> {
    source.validate()?;
    noise.validate()?;
    require_zero_mean(source)?;
    require_zero_mean(noise)?;
    require_density(noise)?;
    require_coverage(&[source, noise], grid)?;

    let nodes = source.quadrature_nodes();
    let (density, numerator): (Vec<f64>, Vec<f64>) = grid
        .xs()
        .into_par_iter()
        .map(|u| {
            nodes.iter().fold((0.0, 0.0), |(d, m), &(x, w)| {
                let p = w * noise.pdf_unchecked(u - x);
                (d + p, m + x * p)
            })
        })
        .unzip();

    let raw: Vec<Option<f64>> = density
        .iter()
        .zip(&numerator)
        .map(|(&d, &m)| (d >= DENSITY_FLOOR).then(|| m / d))
        .collect();
    let values = extend_nearest(&raw);

    let dx = grid.dx();
    let second_moment: f64 = values
        .iter()
        .zip(&density)
        .map(|(h, f)| h * h * f * dx)
        .sum();
    let mmse = (source.variance() - second_moment).max(0.0);
    let (linear_offset, linear_gain, linearity_residual) =
        affine_fit(&grid.xs(), &values, &density);

    Ok(EstimatorCurve {
        grid: *grid,
        values,
        output_density: density,
        mmse,
        linearity_residual,
        linear_gain,
        linear_offset,
    })
}

pub(crate) fn extend_nearest(raw: &[Option<f64>]) -> Vec<f64> {
    let n = raw.len();
    let mut left: Vec<Option<(usize, f64)>> = vec![None; n];
    let mut last = None;
    for k in 0..n {
        if let Some(v) = raw[k] {
            last = Some((k, v));
        }
        left[k] = last;
    }
    let mut out = vec![0.0; n];
    let mut next: Option<(usize, f64)> = None;
    for k in (0..n).rev() {
        if let Some(v) = raw[k] {
            next = Some((k, v));
        }
        out[k] = match (left[k], next) {
            (Some((i, a)), Some((j, b))) => {
                if k - i <= j - k {
                    a
                } else {
                    b
                }
            }
            (Some((_, a)), None) => a,
            (None, Some((_, b))) => b,
            (None, None) => 0.0,
        };
    }
    out
}

/// Weighted least squares `h ≈ a + b·u` under weights `f`; returns `(a, b, residual)`.
fn affine_fit(us: &[f64], h: &[f64], f: &[f64]) -> (f64, f64, f64) {
    let (mut s0, mut s1, mut s2, mut t0, mut t1) = (0.0, 0.0, 0.0, 0.0, 0.0);
    for ((&u, &y), &w) in us.iter().zip(h).zip(f) {
        s0 += w;
        s1 += w * u;
        s2 += w * u * u;
        t0 += w * y;
        t1 += w * u * y;
    }
    let det = s0 * s2 - s1 * s1;
    let (a, b) = if det.abs() > 0.0 {
        ((s2 * t0 - s1 * t1) / det, (s0 * t1 - s1 * t0) / det)
    } else {
        (t0 / s0, 0.0)
    };
    let weighted_sq: f64 = us
        .iter()
        .zip(h)
        .zip(f)
        .map(|((&u, &y), &w)| w * (y - a - b * u).powi(2))
        .sum();
    let spacing = if us.len() > 1 { us[1] - us[0] } else { 1.0 };
    (a, b, (weighted_sq * spacing).sqrt())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "outcome", rename_all = "snake_case")]
pub enum MatchedSource {
    Matched {
        source: DistributionModel,
        estimator: EstimatorCurve,
    },
    NoMatch {
        reason: String,
    },
}

/// Builds the source whose CF is `F_Z^κ` and, when valid, its conditional-mean estimator.
pub fn matched_source_check(
    noise: &DistributionModel,
    kappa: f64,
    grid: &GridSpec,
) -> Result<MatchedSource> {
    if !(kappa > 0.0 && kappa.is_finite()) {
        return Err(Error::PreconditionViolated(format!(
            "kappa must be positive, got {kappa}"
        )));
    }
    let powered = cf_power_with(&cf_of(noise, grid)?, kappa, PowerOptions::default())?.validated();
    match powered.validity() {
        Validity::Valid => {
            let source = DistributionModel::tabulated(density_from_cf(&powered)?)?;
            let estimator = mmse_estimator(&source, noise, grid)?;
            Ok(MatchedSource::Matched { source, estimator })
        }
        Validity::Invalid(reason) => Ok(MatchedSource::NoMatch {
            reason: reason.clone(),
        }),
        Validity::Unchecked => unreachable!("validated above"),
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Estimator<'a> {
    Curve(&'a EstimatorCurve),
    Linear(f64),
}

impl Estimator<'_> {
    pub fn apply(&self, u: f64) -> f64 {
        match self {
            Estimator::Curve(c) => c.eval(u),
            Estimator::Linear(g) => g * u,
        }
    }
}

/// `E[(X − h(X + Z))²]` by product quadrature over the source and noise laws.
pub fn distortion_of(
    source: &DistributionModel,
    noise: &DistributionModel,
    estimator: Estimator<'_>,
) -> Result<f64> {
    source.validate()?;
    noise.validate()?;
    if let Estimator::Curve(c) = estimator {
        require_coverage(&[source, noise], &c.grid)?;
    }
    let xs = source.quadrature_nodes();
    let zs = noise.quadrature_nodes();
    Ok(xs
        .par_iter()
        .map(|&(x, wx)| {
            wx * zs
                .iter()
                .map(|&(z, wz)| wz * (x - estimator.apply(x + z)).powi(2))
                .sum::<f64>()
        })
        .collect::<Vec<_>>()
        .iter()
        .sum())
}

/// Best linear gain `σ_X²/(σ_X² + σ_Z²)` and its distortion.
pub fn best_linear(source: &DistributionModel, noise: &DistributionModel) -> (f64, f64) {
    let (sx, sz) = (source.variance(), noise.variance());
    (sx / (sx + sz), sx * sz / (sx + sz))
}
