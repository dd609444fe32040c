//! Polynomials orthonormal under the output law of `U = X + Z` and the resulting
//! expansion of the conditional-mean estimator.

use nalgebra::{DMatrix, SymmetricEigen};
use serde::{Deserialize, Serialize};

use crate::dist::{binomial, moments, sum_moments, DistributionModel, TabulatedDensity};
use crate::error::{Error, Result};
use crate::grid::GridSpec;
use crate::mmse::{mmse_estimator, EstimatorCurve};

pub const MAX_BASIS_ORDER: usize = 12;
pub const MAX_HANKEL_CONDITION: f64 = 1e12;
const MEASURE_TOL: f64 = 1e-8;

/// `P_0..P_M` with `∫ P_k P_m dF = δ(k, m)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OrthoPolyBasis {
    /// Measure the basis is orthonormal under; `None` when built from moments alone.
    pub measure: Option<DistributionModel>,
    pub order: usize,
    /// Raw moments `μ_0..μ_{2M}` of the measure.
    pub moments: Vec<f64>,
    /// Row `m` holds the monomial coefficients of `P_m`, lowest degree first.
    pub poly_coeffs: Vec<Vec<f64>>,
    pub gram_residual: f64,
    /// Eigenvalue ratio of the variance-scaled Hankel matrix.
    pub condition: f64,
}

impl OrthoPolyBasis {
    pub fn eval(&self, m: usize, u: f64) -> f64 {
        self.poly_coeffs[m].iter().rev().fold(0.0, |acc, c| acc * u + c)
    }

    pub fn eval_all(&self, u: f64) -> Vec<f64> {
        (0..=self.order).map(|m| self.eval(m, u)).collect()
    }
}

pub fn build_basis(measure: &DistributionModel, order: usize) -> Result<OrthoPolyBasis> {
    check_order(order)?;
    let mu = moments(measure, 2 * order)?;
    let mut basis = basis_from_moments(&mu, order)?;
    basis.measure = Some(measure.clone());
    Ok(basis)
}

/// Basis under the law of `X + Z`, tabulated on `grid`, with exact moments.
pub fn build_basis_for_pair(
    source: &DistributionModel,
    noise: &DistributionModel,
    order: usize,
    grid: &GridSpec,
) -> Result<OrthoPolyBasis> {
    check_order(order)?;
    let curve = mmse_estimator(source, noise, grid)?;
    let measure = output_law(&curve)?;
    let mu = pair_moments(source, noise, 2 * order)?;
    let mut basis = basis_from_moments(&mu, order)?;
    basis.measure = Some(measure);
    Ok(basis)
}

fn output_law(curve: &EstimatorCurve) -> Result<DistributionModel> {
    DistributionModel::tabulated(TabulatedDensity::new(
        curve.grid,
        curve.output_density.clone(),
    )?)
}

fn pair_moments(
    source: &DistributionModel,
    noise: &DistributionModel,
    up_to: usize,
) -> Result<Vec<f64>> {
    Ok(sum_moments(&moments(source, up_to)?, &moments(noise, up_to)?))
}

fn check_order(order: usize) -> Result<()> {
    if order > MAX_BASIS_ORDER {
        return Err(Error::OrderTooHigh(order));
    }
    Ok(())
}

/// Gram-Schmidt on monomials under the moment inner product `<u^i, u^j> = μ_{i+j}`.
pub fn basis_from_moments(mu: &[f64], order: usize) -> Result<OrthoPolyBasis> {
    check_order(order)?;
    if mu.len() < 2 * order + 1 {
        return Err(Error::PreconditionViolated(format!(
            "need {} moments, got {}",
            2 * order + 1,
            mu.len()
        )));
    }
    let n = order + 1;
    let scale = if mu.len() > 2 && mu[2] > 0.0 {
        mu[2].sqrt()
    } else {
        1.0
    };
    let nu: Vec<f64> = mu
        .iter()
        .enumerate()
        .map(|(k, m)| m / scale.powi(k as i32))
        .collect();
    let hankel = DMatrix::from_fn(n, n, |i, j| nu[i + j]);
    let eig = SymmetricEigen::new(hankel.clone()).eigenvalues;
    let (lo, hi) = eig
        .iter()
        .fold((f64::INFINITY, 0.0_f64), |(lo, hi), &e| (lo.min(e), hi.max(e.abs())));
    let condition = if lo > 0.0 { hi / lo } else { f64::INFINITY };
    if condition > MAX_HANKEL_CONDITION {
        return Err(Error::IllConditioned(condition));
    }

    let inner = |p: &[f64], q: &[f64]| -> f64 {
        let mut s = 0.0;
        for (i, a) in p.iter().enumerate() {
            for (j, b) in q.iter().enumerate() {
                s += a * b * nu[i + j];
            }
        }
        s
    };

    let mut scaled: Vec<Vec<f64>> = Vec::with_capacity(n);
    for m in 0..n {
        let mut v = vec![0.0; m + 1];
        v[m] = 1.0;
        for _ in 0..2 {
            for p in &scaled {
                let proj = inner(&v, p);
                for (vi, pi) in v.iter_mut().zip(p) {
                    *vi -= proj * pi;
                }
            }
        }
        let norm = inner(&v, &v);
        if !(norm > 0.0) {
            return Err(Error::IllConditioned(f64::INFINITY));
        }
        let norm = norm.sqrt();
        v.iter_mut().for_each(|c| *c /= norm);
        scaled.push(v);
    }

    let mut gram_residual: f64 = 0.0;
    for (k, p) in scaled.iter().enumerate() {
        for (m, q) in scaled.iter().enumerate() {
            let target = if k == m { 1.0 } else { 0.0 };
            gram_residual = gram_residual.max((inner(p, q) - target).abs());
        }
    }

    let poly_coeffs = scaled
        .into_iter()
        .map(|p| {
            p.into_iter()
                .enumerate()
                .map(|(j, c)| c / scale.powi(j as i32))
                .collect()
        })
        .collect();

    Ok(OrthoPolyBasis {
        measure: None,
        order,
        moments: mu[..=2 * order].to_vec(),
        poly_coeffs,
        gram_residual,
        condition,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExpansionCoefficients {
    /// `c_m = E[h(U) P_m(U)]`.
    pub c: Vec<f64>,
    pub mmse_poly: f64,
    pub tail_bound_order: usize,
}

impl ExpansionCoefficients {
    fn new(c: Vec<f64>, source_variance: f64) -> Self {
        let captured: f64 = c.iter().map(|v| v * v).sum();
        Self {
            tail_bound_order: c.len() - 1,
            mmse_poly: (source_variance - captured).max(0.0),
            c,
        }
    }

    /// `Σ_{m≥2} c_m²`: energy of the estimator outside its affine part.
    pub fn nonlinear_energy(&self) -> f64 {
        self.c.iter().skip(2).map(|v| v * v).sum()
    }
}

/// Coefficients by grid quadrature of `h·P_m·f_U`, with `h` the conditional mean.
pub fn expansion_coeffs(
    source: &DistributionModel,
    noise: &DistributionModel,
    basis: &OrthoPolyBasis,
) -> Result<ExpansionCoefficients> {
    let grid = match &basis.measure {
        Some(DistributionModel::Tabulated(t)) => t.grid,
        _ => GridSpec::covering(&[source, noise]),
    };
    let curve = mmse_estimator(source, noise, &grid)?;
    coeffs_from_curve(source, &curve, basis)
}

pub(crate) fn coeffs_from_curve(
    source: &DistributionModel,
    curve: &EstimatorCurve,
    basis: &OrthoPolyBasis,
) -> Result<ExpansionCoefficients> {
    let grid = &curve.grid;
    if let Some(measure) = &basis.measure {
        let deviation = curve
            .output_density
            .iter()
            .enumerate()
            .map(|(k, f)| (f - measure_density(measure, grid.x(k))).abs())
            .fold(0.0, f64::max);
        if deviation > MEASURE_TOL {
            return Err(Error::BasisMismatch(deviation));
        }
    }
    let dx = grid.dx();
    let mut c = vec![0.0; basis.order + 1];
    for (k, (h, f)) in curve.values.iter().zip(&curve.output_density).enumerate() {
        let w = h * f * dx;
        for (m, p) in basis.eval_all(grid.x(k)).into_iter().enumerate() {
            c[m] += w * p;
        }
    }
    Ok(ExpansionCoefficients::new(c, source.variance()))
}

fn measure_density(measure: &DistributionModel, u: f64) -> f64 {
    match measure {
        DistributionModel::Tabulated(t) => t.eval(u),
        other => other.pdf(u).unwrap_or(f64::NAN),
    }
}

/// Coefficients from moments alone: `c_m = Σ_k a_{mk} E[X U^k]`.
pub fn moment_coeffs(
    source: &DistributionModel,
    noise: &DistributionModel,
    order: usize,
) -> Result<ExpansionCoefficients> {
    check_order(order)?;
    let top = (2 * order).max(order + 1);
    let mx = moments(source, top)?;
    let mz = moments(noise, top)?;
    let basis = basis_from_moments(&sum_moments(&mx, &mz), order)?;
    let cross: Vec<f64> = (0..=order)
        .map(|k| {
            (0..=k)
                .map(|j| binomial(k, j) * mx[j + 1] * mz[k - j])
                .sum()
        })
        .collect();
    let c = basis
        .poly_coeffs
        .iter()
        .map(|row| row.iter().zip(&cross).map(|(a, e)| a * e).sum())
        .collect();
    Ok(ExpansionCoefficients::new(c, source.variance()))
}

/// Expansion of order `order` and its gap to the quadrature MMSE.
pub fn mmse_via_expansion(
    source: &DistributionModel,
    noise: &DistributionModel,
    order: usize,
) -> Result<(ExpansionCoefficients, f64)> {
    let grid = GridSpec::covering(&[source, noise]);
    let curve = mmse_estimator(source, noise, &grid)?;
    let mu = pair_moments(source, noise, 2 * order)?;
    let mut basis = basis_from_moments(&mu, order)?;
    basis.measure = Some(output_law(&curve)?);
    let coeffs = coeffs_from_curve(source, &curve, &basis)?;
    let gap = (coeffs.mmse_poly - curve.mmse).abs();
    Ok((coeffs, gap))
}
