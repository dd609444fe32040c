//! Zero-mean scalar distributions: analytic families and tabulated densities.

use std::f64::consts::{PI, SQRT_2};

use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};
use statrs::function::erf::erfc_inv;
#[cfg(test)]
use statrs::function::erf::erfc;

use crate::error::{Error, Result};
use crate::grid::GridSpec;
use crate::quad;

/// Highest moment order handled before Hankel matrices become numerically singular.
pub const MAX_MOMENT_ORDER: usize = 24;

const TABULATED_MASS_TOL: f64 = 1e-6;
const TABULATED_NEGATIVITY_TOL: f64 = -1e-6;
const MOMENT_TAIL_TOL: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MixtureComponent {
    pub weight: f64,
    pub mean: f64,
    pub variance: f64,
}

/// A density sampled on a [`GridSpec`] signal grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TabulatedDensity {
    pub grid: GridSpec,
    pub values: Vec<f64>,
    /// Smallest sample before any clipping; negative when recovered from an invalid CF.
    #[serde(default)]
    pub negativity_floor: f64,
}

impl TabulatedDensity {
    pub fn new(grid: GridSpec, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.num_points() {
            return Err(Error::GridMismatch);
        }
        let negativity_floor = values.iter().copied().fold(f64::INFINITY, f64::min);
        Ok(Self {
            grid,
            values,
            negativity_floor,
        })
    }

    pub fn from_fn(grid: GridSpec, f: impl Fn(f64) -> f64) -> Self {
        let values = grid.xs().into_iter().map(f).collect();
        Self::new(grid, values).expect("length matches grid")
    }

    /// Rescales the samples to unit trapezoid mass.
    pub fn normalized(mut self) -> Self {
        let m = self.mass();
        if m > 0.0 {
            self.values.iter_mut().for_each(|v| *v /= m);
            self.negativity_floor /= m;
        }
        self
    }

    pub fn mass(&self) -> f64 {
        self.values.iter().sum::<f64>() * self.grid.dx()
    }

    pub fn raw_moment(&self, k: usize) -> f64 {
        let g = &self.grid;
        self.values
            .iter()
            .enumerate()
            .map(|(i, f)| g.x(i).powi(k as i32) * f)
            .sum::<f64>()
            * g.dx()
    }

    /// Linear interpolation; zero outside the grid.
    pub fn eval(&self, x: f64) -> f64 {
        let g = &self.grid;
        let t = (x + g.half_width()) / g.dx();
        if !(t >= 0.0) || t > (g.num_points() - 1) as f64 {
            return 0.0;
        }
        let i = t.floor() as usize;
        if i + 1 >= g.num_points() {
            return self.values[g.num_points() - 1];
        }
        let frac = t - i as f64;
        self.values[i] * (1.0 - frac) + self.values[i + 1] * frac
    }

    fn clipped(mut self) -> Self {
        for v in &mut self.values {
            if *v < 0.0 {
                *v = 0.0;
            }
        }
        self
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case")]
pub enum DistributionModel {
    Gaussian { variance: f64 },
    Laplace { variance: f64 },
    Uniform { variance: f64 },
    RademacherScaled { scale: f64 },
    GaussianMixture { components: Vec<MixtureComponent> },
    Tabulated(TabulatedDensity),
}

fn check_variance(v: f64) -> Result<()> {
    if v >= 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidDistribution(format!(
            "variance must be finite and >= 0, got {v}"
        )))
    }
}

fn double_factorial(n: i64) -> f64 {
    let mut acc = 1.0;
    let mut k = n;
    while k > 1 {
        acc *= k as f64;
        k -= 2;
    }
    acc
}

pub(crate) fn binomial(n: usize, k: usize) -> f64 {
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

fn gaussian_moment(variance: f64, k: usize) -> f64 {
    if k % 2 == 1 {
        0.0
    } else {
        double_factorial(k as i64 - 1) * variance.powi(k as i32 / 2)
    }
}

fn gaussian_pdf(x: f64, mean: f64, variance: f64) -> f64 {
    let d = x - mean;
    (-0.5 * d * d / variance).exp() / (2.0 * PI * variance).sqrt()
}

/// Half-width `t` with `P(|N(0, v)| > t) = eps`.
fn gaussian_tail(variance: f64, eps: f64) -> f64 {
    variance.sqrt() * SQRT_2 * erfc_inv(eps.clamp(1e-300, 1.0))
}

impl DistributionModel {
    pub fn gaussian(variance: f64) -> Result<Self> {
        check_variance(variance)?;
        Ok(Self::Gaussian { variance })
    }

    pub fn laplace(variance: f64) -> Result<Self> {
        check_variance(variance)?;
        Ok(Self::Laplace { variance })
    }

    pub fn uniform(variance: f64) -> Result<Self> {
        check_variance(variance)?;
        Ok(Self::Uniform { variance })
    }

    /// Two-point mass at `±scale`.
    pub fn rademacher(scale: f64) -> Result<Self> {
        if !(scale >= 0.0 && scale.is_finite()) {
            return Err(Error::InvalidDistribution(format!(
                "scale must be finite and >= 0, got {scale}"
            )));
        }
        Ok(Self::RademacherScaled { scale })
    }

    pub fn mixture(components: Vec<MixtureComponent>) -> Result<Self> {
        let d = Self::GaussianMixture { components };
        d.validate()?;
        Ok(d)
    }

    /// Validates a tabulated density and clips negligible negative samples to zero.
    pub fn tabulated(density: TabulatedDensity) -> Result<Self> {
        let d = Self::Tabulated(density);
        d.validate()?;
        match d {
            Self::Tabulated(t) => Ok(Self::Tabulated(t.clipped())),
            _ => unreachable!(),
        }
    }

    /// Checks every family invariant, including the zero-mean convention.
    pub fn validate(&self) -> Result<()> {
        match self {
            Self::Gaussian { variance } | Self::Laplace { variance } | Self::Uniform { variance } => {
                check_variance(*variance)
            }
            Self::RademacherScaled { scale } => Self::rademacher(*scale).map(|_| ()),
            Self::GaussianMixture { components } => {
                if components.is_empty() {
                    return Err(Error::InvalidDistribution("empty mixture".into()));
                }
                let mut total = 0.0;
                for c in components {
                    if !(c.weight > 0.0 && c.weight.is_finite()) {
                        return Err(Error::InvalidDistribution(format!(
                            "mixture weight must be positive, got {}",
                            c.weight
                        )));
                    }
                    if !(c.variance > 0.0 && c.variance.is_finite()) || !c.mean.is_finite() {
                        return Err(Error::InvalidDistribution(format!(
                            "bad mixture component {c:?}"
                        )));
                    }
                    total += c.weight;
                }
                if (total - 1.0).abs() > 1e-9 {
                    return Err(Error::InvalidDistribution(format!(
                        "mixture weights sum to {total}"
                    )));
                }
                let mean = self.mean();
                if mean.abs() > 1e-9 * self.std_dev().max(1.0) {
                    return Err(Error::NonZeroMean(mean));
                }
                Ok(())
            }
            Self::Tabulated(t) => {
                if t.values.len() != t.grid.num_points() {
                    return Err(Error::GridMismatch);
                }
                if t.values.iter().any(|v| !v.is_finite()) {
                    return Err(Error::InvalidDistribution("non-finite density".into()));
                }
                let min = t.values.iter().copied().fold(f64::INFINITY, f64::min);
                if min < TABULATED_NEGATIVITY_TOL {
                    return Err(Error::InvalidDistribution(format!(
                        "density is negative (min {min:e})"
                    )));
                }
                let mass = t.mass();
                if (mass - 1.0).abs() > TABULATED_MASS_TOL {
                    return Err(Error::InvalidDistribution(format!(
                        "density integrates to {mass}"
                    )));
                }
                let mean = t.raw_moment(1);
                if mean.abs() > 1e-6 * t.raw_moment(2).sqrt().max(1.0) {
                    return Err(Error::NonZeroMean(mean));
                }
                Ok(())
            }
        }
    }

    pub fn family_name(&self) -> &'static str {
        match self {
            Self::Gaussian { .. } => "gaussian",
            Self::Laplace { .. } => "laplace",
            Self::Uniform { .. } => "uniform",
            Self::RademacherScaled { .. } => "rademacher_scaled",
            Self::GaussianMixture { .. } => "gaussian_mixture",
            Self::Tabulated(_) => "tabulated",
        }
    }

    pub fn mean(&self) -> f64 {
        match self {
            Self::GaussianMixture { components } => {
                components.iter().map(|c| c.weight * c.mean).sum()
            }
            Self::Tabulated(t) => t.raw_moment(1),
            _ => 0.0,
        }
    }

    pub fn variance(&self) -> f64 {
        match self {
            Self::Gaussian { variance } | Self::Laplace { variance } | Self::Uniform { variance } => {
                *variance
            }
            Self::RademacherScaled { scale } => scale * scale,
            Self::GaussianMixture { components } => components
                .iter()
                .map(|c| c.weight * (c.mean * c.mean + c.variance))
                .sum(),
            Self::Tabulated(t) => t.raw_moment(2),
        }
    }

    pub fn std_dev(&self) -> f64 {
        self.variance().sqrt()
    }

    /// True when the law has point masses (no density).
    pub fn is_atomic(&self) -> bool {
        match self {
            Self::RademacherScaled { .. } => true,
            Self::Gaussian { variance } | Self::Laplace { variance } | Self::Uniform { variance } => {
                *variance == 0.0
            }
            _ => false,
        }
    }

    /// Density at `x`; linear interpolation for tabulated densities.
    pub fn pdf(&self, x: f64) -> Result<f64> {
        if self.is_atomic() {
            return Err(Error::NoDensity(self.family_name()));
        }
        Ok(self.pdf_unchecked(x))
    }

    pub(crate) fn pdf_unchecked(&self, x: f64) -> f64 {
        match self {
            Self::Gaussian { variance } => gaussian_pdf(x, 0.0, *variance),
            Self::Laplace { variance } => {
                let b = (variance / 2.0).sqrt();
                (-x.abs() / b).exp() / (2.0 * b)
            }
            Self::Uniform { variance } => {
                let a = (3.0 * variance).sqrt();
                if x.abs() < a {
                    0.5 / a
                } else if x.abs() == a {
                    0.25 / a
                } else {
                    0.0
                }
            }
            Self::RademacherScaled { .. } => 0.0,
            Self::GaussianMixture { components } => components
                .iter()
                .map(|c| c.weight * gaussian_pdf(x, c.mean, c.variance))
                .sum(),
            Self::Tabulated(t) => t.eval(x),
        }
    }

    /// Closed-form `E[exp(jωX)]`; a direct transform sum for tabulated densities.
    pub fn cf_at(&self, omega: f64) -> Complex64 {
        match self {
            Self::Gaussian { variance } => Complex64::new((-0.5 * variance * omega * omega).exp(), 0.0),
            Self::Laplace { variance } => {
                Complex64::new(1.0 / (1.0 + 0.5 * variance * omega * omega), 0.0)
            }
            Self::Uniform { variance } => {
                let t = (3.0 * variance).sqrt() * omega;
                Complex64::new(if t == 0.0 { 1.0 } else { t.sin() / t }, 0.0)
            }
            Self::RademacherScaled { scale } => Complex64::new((scale * omega).cos(), 0.0),
            Self::GaussianMixture { components } => components
                .iter()
                .map(|c| {
                    c.weight
                        * (-0.5 * c.variance * omega * omega).exp()
                        * Complex64::from_polar(1.0, c.mean * omega)
                })
                .sum(),
            Self::Tabulated(t) => {
                let g = &t.grid;
                t.values
                    .iter()
                    .enumerate()
                    .map(|(k, f)| f * Complex64::from_polar(1.0, omega * g.x(k)))
                    .sum::<Complex64>()
                    * g.dx()
            }
        }
    }

    /// `dF/dω` at `omega`.
    pub fn cf_derivative(&self, omega: f64) -> Complex64 {
        let i = Complex64::i();
        match self {
            Self::Gaussian { variance } => -variance * omega * self.cf_at(omega),
            Self::Laplace { variance } => {
                let c = 0.5 * variance;
                let d = 1.0 + c * omega * omega;
                Complex64::new(-2.0 * c * omega / (d * d), 0.0)
            }
            Self::Uniform { variance } => {
                let a = (3.0 * variance).sqrt();
                let t = a * omega;
                if t.abs() < 1e-4 {
                    // sinc'(t) ≈ -t/3 + t³/30
                    Complex64::new(a * (-t / 3.0 + t * t * t / 30.0), 0.0)
                } else {
                    Complex64::new(a * (t * t.cos() - t.sin()) / (t * t), 0.0)
                }
            }
            Self::RademacherScaled { scale } => Complex64::new(-scale * (scale * omega).sin(), 0.0),
            Self::GaussianMixture { components } => components
                .iter()
                .map(|c| {
                    c.weight
                        * (-0.5 * c.variance * omega * omega).exp()
                        * Complex64::from_polar(1.0, c.mean * omega)
                        * (i * c.mean - c.variance * omega)
                })
                .sum(),
            Self::Tabulated(t) => {
                let g = &t.grid;
                t.values
                    .iter()
                    .enumerate()
                    .map(|(k, f)| {
                        let x = g.x(k);
                        i * x * f * Complex64::from_polar(1.0, omega * x)
                    })
                    .sum::<Complex64>()
                    * g.dx()
            }
        }
    }

    /// Raw moment `E[X^k]` (closed form; quadrature for tabulated densities).
    pub fn moment(&self, k: usize) -> f64 {
        if k == 0 {
            return 1.0;
        }
        match self {
            Self::Gaussian { variance } => gaussian_moment(*variance, k),
            Self::Laplace { variance } => {
                if k % 2 == 1 {
                    0.0
                } else {
                    let b = (variance / 2.0).sqrt();
                    (1..=k).map(|i| i as f64 * b).product()
                }
            }
            Self::Uniform { variance } => {
                if k % 2 == 1 {
                    0.0
                } else {
                    (3.0 * variance).sqrt().powi(k as i32) / (k + 1) as f64
                }
            }
            Self::RademacherScaled { scale } => {
                if k % 2 == 1 {
                    0.0
                } else {
                    scale.powi(k as i32)
                }
            }
            Self::GaussianMixture { components } => components
                .iter()
                .map(|c| {
                    c.weight
                        * (0..=k)
                            .map(|j| {
                                binomial(k, j)
                                    * c.mean.powi((k - j) as i32)
                                    * gaussian_moment(c.variance, j)
                            })
                            .sum::<f64>()
                })
                .sum(),
            Self::Tabulated(t) => t.raw_moment(k),
        }
    }

    /// Smallest `t` with `P(|X| > t) <= eps`.
    pub fn tail_half_width(&self, eps: f64) -> f64 {
        match self {
            Self::Gaussian { variance } => gaussian_tail(*variance, eps),
            Self::Laplace { variance } => (variance / 2.0).sqrt() * (1.0 / eps).ln().max(0.0),
            Self::Uniform { variance } => (3.0 * variance).sqrt(),
            Self::RademacherScaled { scale } => *scale,
            Self::GaussianMixture { components } => {
                let per = eps / components.len() as f64;
                components
                    .iter()
                    .map(|c| c.mean.abs() + gaussian_tail(c.variance, per))
                    .fold(0.0, f64::max)
            }
            Self::Tabulated(t) => {
                let g = &t.grid;
                let c = g.center();
                let mut outside = 0.0;
                // peel symmetric shells from the edge inward until the mass budget is spent
                for m in (1..c).rev() {
                    let shell = (t.values[c + m].max(0.0) + t.values[c - m].max(0.0)) * g.dx();
                    if outside + shell > eps {
                        return (m as f64 + 0.5) * g.dx();
                    }
                    outside += shell;
                }
                0.5 * g.dx()
            }
        }
    }

    /// Law of `factor·X`.
    pub fn scaled(&self, factor: f64) -> Self {
        let f2 = factor * factor;
        match self {
            Self::Gaussian { variance } => Self::Gaussian { variance: variance * f2 },
            Self::Laplace { variance } => Self::Laplace { variance: variance * f2 },
            Self::Uniform { variance } => Self::Uniform { variance: variance * f2 },
            Self::RademacherScaled { scale } => Self::RademacherScaled {
                scale: scale * factor.abs(),
            },
            Self::GaussianMixture { components } => Self::GaussianMixture {
                components: components
                    .iter()
                    .map(|c| MixtureComponent {
                        weight: c.weight,
                        mean: c.mean * factor,
                        variance: c.variance * f2,
                    })
                    .collect(),
            },
            Self::Tabulated(t) => {
                let s = factor.abs();
                let scaled = TabulatedDensity::from_fn(t.grid, |y| t.eval(y / s) / s);
                Self::Tabulated(scaled)
            }
        }
    }

    /// Nodes `x_i` and probability weights `w_i` approximating the law of `X`.
    pub(crate) fn quadrature_nodes(&self) -> Vec<(f64, f64)> {
        let with_pdf = |rule: Vec<(f64, f64)>| -> Vec<(f64, f64)> {
            rule.into_iter()
                .map(|(x, w)| (x, w * self.pdf_unchecked(x)))
                .filter(|&(_, w)| w > 0.0)
                .collect()
        };
        if self.is_atomic() {
            return match self {
                Self::RademacherScaled { scale } if *scale > 0.0 => {
                    vec![(-scale, 0.5), (*scale, 0.5)]
                }
                _ => vec![(0.0, 1.0)],
            };
        }
        match self {
            Self::Gaussian { variance } => {
                let t = gaussian_tail(*variance, 1e-18);
                with_pdf(quad::composite(-t, t, variance.sqrt() / 8.0))
            }
            Self::Laplace { variance } => {
                let b = (variance / 2.0).sqrt();
                let t = b * 42.0;
                let mut rule = quad::composite(-t, 0.0, b / 8.0);
                rule.extend(quad::composite(0.0, t, b / 8.0));
                with_pdf(rule)
            }
            Self::Uniform { variance } => {
                let a = (3.0 * variance).sqrt();
                with_pdf(quad::composite(-a, a, a / 32.0))
            }
            Self::GaussianMixture { components } => {
                let t = self.tail_half_width(1e-18);
                let width = components
                    .iter()
                    .map(|c| c.variance.sqrt())
                    .fold(f64::INFINITY, f64::min)
                    / 8.0;
                with_pdf(quad::composite(-t, t, width))
            }
            Self::Tabulated(t) => {
                let g = &t.grid;
                t.values
                    .iter()
                    .enumerate()
                    .filter(|(_, f)| **f > 0.0)
                    .map(|(k, f)| (g.x(k), f * g.dx()))
                    .collect()
            }
            Self::RademacherScaled { .. } => unreachable!(),
        }
    }

    pub fn sampler(&self) -> Sampler {
        let kind = match self {
            _ if self.variance() == 0.0 => SamplerKind::Point,
            Self::Gaussian { variance } => SamplerKind::Gaussian(variance.sqrt()),
            Self::Laplace { variance } => SamplerKind::Laplace((variance / 2.0).sqrt()),
            Self::Uniform { variance } => SamplerKind::Uniform((3.0 * variance).sqrt()),
            Self::RademacherScaled { scale } => SamplerKind::Rademacher(*scale),
            Self::GaussianMixture { components } => {
                let mut acc = 0.0;
                let cumulative = components
                    .iter()
                    .map(|c| {
                        acc += c.weight;
                        acc
                    })
                    .collect();
                SamplerKind::Mixture {
                    cumulative,
                    components: components.clone(),
                }
            }
            Self::Tabulated(t) => {
                let g = &t.grid;
                let mut acc = 0.0;
                let mut cdf = vec![0.0];
                for k in 0..g.num_points() - 1 {
                    acc += 0.5 * (t.values[k].max(0.0) + t.values[k + 1].max(0.0)) * g.dx();
                    cdf.push(acc);
                }
                for c in &mut cdf {
                    *c /= acc;
                }
                SamplerKind::Table {
                    x0: g.x(0),
                    dx: g.dx(),
                    cdf,
                }
            }
        };
        Sampler { kind }
    }
}

#[derive(Debug, Clone)]
enum SamplerKind {
    Point,
    Gaussian(f64),
    Laplace(f64),
    Uniform(f64),
    Rademacher(f64),
    Mixture {
        cumulative: Vec<f64>,
        components: Vec<MixtureComponent>,
    },
    Table {
        x0: f64,
        dx: f64,
        cdf: Vec<f64>,
    },
}

/// Draws from a [`DistributionModel`]; tabulated laws use the inverse of the trapezoid CDF.
#[derive(Debug, Clone)]
pub struct Sampler {
    kind: SamplerKind,
}

impl Sampler {
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        match &self.kind {
            SamplerKind::Point => 0.0,
            SamplerKind::Gaussian(sd) => sd * rng.sample::<f64, _>(StandardNormal),
            SamplerKind::Laplace(b) => {
                let u: f64 = rng.random::<f64>() - 0.5;
                -b * u.signum() * (1.0 - 2.0 * u.abs()).ln()
            }
            SamplerKind::Uniform(a) => a * (2.0 * rng.random::<f64>() - 1.0),
            SamplerKind::Rademacher(s) => {
                if rng.random::<bool>() {
                    *s
                } else {
                    -s
                }
            }
            SamplerKind::Mixture {
                cumulative,
                components,
            } => {
                let u: f64 = rng.random();
                let idx = cumulative
                    .iter()
                    .position(|&c| u < c)
                    .unwrap_or(components.len() - 1);
                let c = &components[idx];
                c.mean + c.variance.sqrt() * rng.sample::<f64, _>(StandardNormal)
            }
            SamplerKind::Table { x0, dx, cdf } => {
                let u: f64 = rng.random();
                let k = cdf.partition_point(|&c| c <= u).clamp(1, cdf.len() - 1) - 1;
                let span = cdf[k + 1] - cdf[k];
                let frac = if span > 0.0 { (u - cdf[k]) / span } else { 0.5 };
                x0 + (k as f64 + frac) * dx
            }
        }
    }
}

/// Central moments `m_0..=m_up_to` (all laws here are zero-mean).
pub fn moments(dist: &DistributionModel, up_to: usize) -> Result<Vec<f64>> {
    if up_to > MAX_MOMENT_ORDER {
        return Err(Error::MomentOrderTooHigh(up_to));
    }
    if let DistributionModel::Tabulated(t) = dist {
        let g = &t.grid;
        let edge = 0.9 * g.half_width();
        for k in 2..=up_to {
            let (mut total, mut tail) = (0.0, 0.0);
            for (i, f) in t.values.iter().enumerate() {
                let x = g.x(i);
                let c = x.abs().powi(k as i32) * f.abs();
                total += c;
                if x.abs() > edge {
                    tail += c;
                }
            }
            if total > 0.0 && tail / total > MOMENT_TAIL_TOL {
                return Err(Error::MomentOverflow {
                    order: k,
                    relative: tail / total,
                });
            }
        }
    }
    let mut out: Vec<f64> = (0..=up_to).map(|k| dist.moment(k)).collect();
    if up_to >= 1 {
        out[1] = 0.0;
    }
    Ok(out)
}

/// Moments of `X + Z` for independent `X`, `Z` from their raw moments.
pub(crate) fn sum_moments(x: &[f64], z: &[f64]) -> Vec<f64> {
    let n = x.len().min(z.len());
    (0..n)
        .map(|k| (0..=k).map(|j| binomial(k, j) * x[j] * z[k - j]).sum())
        .collect()
}

/// `P(|N(0, v)| > t)`.
#[cfg(test)]
fn gaussian_two_sided_tail(variance: f64, t: f64) -> f64 {
    erfc(t / (2.0 * variance).sqrt())
}
