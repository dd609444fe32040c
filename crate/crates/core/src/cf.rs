//! Characteristic-function algebra on a frequency grid.
//!
//! Transforms use the trapezoid rule on the signal grid, evaluated with an FFT:
//! `F(ω_j) = Δx Σ_k f(x_k) exp(jω_j x_k)` and its inverse
//! `f(x_k) = (Δω/2π) Σ_j F(ω_j) exp(-jω_j x_k)`.

use std::f64::consts::{FRAC_PI_2, PI};

use num_complex::Complex64;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

use crate::dist::{DistributionModel, TabulatedDensity};
use crate::error::{Error, Result};
use crate::grid::GridSpec;

/// Probability mass allowed outside the grid when sampling a closed-form CF.
const GRID_MASS_TOL: f64 = 1e-10;
const UNIT_TOL: f64 = 1e-9;
const IMAG_TOL: f64 = 1e-6;
const NEGATIVITY_TOL: f64 = -1e-6;
const MASS_TOL: f64 = 1e-6;

pub const DEFAULT_POWER_FLOOR: f64 = 1e-12;
pub const DEFAULT_DIVISION_FLOOR: f64 = 1e-8;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "status", content = "reason", rename_all = "snake_case")]
pub enum Validity {
    Valid,
    Invalid(String),
    Unchecked,
}

impl Validity {
    pub fn is_valid(&self) -> bool {
        matches!(self, Validity::Valid)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CharacteristicFunction {
    grid: GridSpec,
    values: Vec<Complex64>,
    validity: Validity,
    /// Set when samples were zeroed by a zero-crossing or division floor.
    truncated: bool,
}

impl CharacteristicFunction {
    pub fn new(grid: GridSpec, values: Vec<Complex64>) -> Result<Self> {
        if values.len() != grid.num_points() {
            return Err(Error::GridMismatch);
        }
        Ok(Self {
            grid,
            values,
            validity: Validity::Unchecked,
            truncated: false,
        })
    }

    pub fn from_fn(grid: GridSpec, f: impl Fn(f64) -> Complex64) -> Self {
        let values = grid.omegas().into_iter().map(f).collect();
        Self::new(grid, values).expect("length matches grid")
    }

    /// CF of a point mass at zero.
    pub fn point_mass(grid: GridSpec) -> Self {
        let mut cf = Self::from_fn(grid, |_| Complex64::new(1.0, 0.0));
        cf.validity = Validity::Valid;
        cf
    }

    pub fn grid(&self) -> &GridSpec {
        &self.grid
    }

    pub fn values(&self) -> &[Complex64] {
        &self.values
    }

    pub fn validity(&self) -> &Validity {
        &self.validity
    }

    pub fn is_truncated(&self) -> bool {
        self.truncated
    }

    pub(crate) fn mark_truncated(mut self, truncated: bool) -> Self {
        self.truncated |= truncated;
        self
    }

    pub fn at_zero(&self) -> Complex64 {
        self.values[self.grid.center()]
    }

    /// Runs [`check_validity`] and records the verdict.
    pub fn validated(mut self) -> Self {
        self.validity = check_validity(&self);
        self
    }

    pub fn sup_distance(&self, other: &Self) -> Result<f64> {
        if !self.grid.same_as(&other.grid) {
            return Err(Error::GridMismatch);
        }
        Ok(self
            .values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max))
    }

    /// Max of `|F(-ω) - conj(F(ω))|` over mirrored grid pairs.
    pub fn hermitian_deviation(&self) -> f64 {
        let n = self.grid.num_points();
        (1..n)
            .map(|j| (self.values[n - j] - self.values[j].conj()).norm())
            .fold(0.0, f64::max)
    }

    /// Variance read from the curvature of `log|F|` at the origin, Richardson-extrapolated.
    pub fn variance_from_curvature(&self) -> f64 {
        let c = self.grid.center();
        let h = self.grid.d_omega();
        let v = |m: usize| {
            let w = m as f64 * h;
            -2.0 * self.values[c + m].norm().ln() / (w * w)
        };
        let r1 = (4.0 * v(1) - v(2)) / 3.0;
        let r2 = (4.0 * v(2) - v(4)) / 3.0;
        (16.0 * r1 - r2) / 15.0
    }
}

fn sign(k: usize) -> f64 {
    if k.is_multiple_of(2) {
        1.0
    } else {
        -1.0
    }
}

/// Trapezoid transform of signal-grid samples onto the frequency grid.
pub(crate) fn signal_to_cf(grid: &GridSpec, samples: &[f64]) -> Vec<Complex64> {
    let n = grid.num_points();
    let mut buf: Vec<Complex64> = samples
        .iter()
        .enumerate()
        .map(|(k, f)| Complex64::new(sign(k) * f, 0.0))
        .collect();
    FftPlanner::new().plan_fft_inverse(n).process(&mut buf);
    let dx = grid.dx();
    buf.iter_mut()
        .enumerate()
        .for_each(|(j, v)| *v *= sign(j) * dx);
    buf
}

/// Inverse of [`signal_to_cf`].
pub(crate) fn cf_to_signal(grid: &GridSpec, values: &[Complex64]) -> Vec<Complex64> {
    let n = grid.num_points();
    let mut buf: Vec<Complex64> = values
        .iter()
        .enumerate()
        .map(|(j, v)| v * sign(j))
        .collect();
    FftPlanner::new().plan_fft_forward(n).process(&mut buf);
    let scale = grid.d_omega() / (2.0 * PI);
    buf.iter_mut()
        .enumerate()
        .for_each(|(k, v)| *v *= sign(k) * scale);
    buf
}

/// Samples `E[exp(jωX)]` on the frequency grid.
pub fn cf_of(dist: &DistributionModel, grid: &GridSpec) -> Result<CharacteristicFunction> {
    let mean = dist.mean();
    if mean.abs() > 1e-6 * dist.std_dev().max(1.0) {
        return Err(Error::NonZeroMean(mean));
    }
    let values = match dist {
        DistributionModel::Tabulated(t) => {
            if !t.grid.same_as(grid) {
                return Err(Error::GridMismatch);
            }
            signal_to_cf(grid, &t.values)
        }
        _ => {
            let required = dist.tail_half_width(GRID_MASS_TOL);
            let inside = if dist.is_atomic() {
                required < grid.half_width()
            } else {
                required <= grid.half_width()
            };
            if !inside {
                return Err(Error::GridTooNarrow {
                    half_width: grid.half_width(),
                    required,
                    tolerance: GRID_MASS_TOL,
                });
            }
            grid.omegas().into_iter().map(|w| dist.cf_at(w)).collect()
        }
    };
    Ok(CharacteristicFunction {
        grid: *grid,
        values,
        validity: Validity::Valid,
        truncated: false,
    })
}

/// Inverse transform onto the signal grid. The result keeps its negativity floor;
/// wrap it with [`DistributionModel::tabulated`] to enforce density invariants.
pub fn density_from_cf(cf: &CharacteristicFunction) -> Result<TabulatedDensity> {
    let f0 = cf.at_zero();
    if (f0 - Complex64::new(1.0, 0.0)).norm() > UNIT_TOL {
        return Err(Error::NotNormalized(f0.re));
    }
    let dev = cf.hermitian_deviation();
    if dev > UNIT_TOL {
        return Err(Error::NotHermitian(dev));
    }
    let signal = cf_to_signal(&cf.grid, &cf.values);
    let max_imag = signal.iter().map(|v| v.im.abs()).fold(0.0, f64::max);
    if max_imag > IMAG_TOL {
        return Err(Error::ExcessImaginary(max_imag));
    }
    TabulatedDensity::new(cf.grid, signal.into_iter().map(|v| v.re).collect())
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PowerOptions {
    /// Magnitude below which a sample counts as vanishing.
    pub floor: f64,
    /// Raise [`Error::ZeroCrossing`] instead of truncating.
    pub strict: bool,
}

impl Default for PowerOptions {
    fn default() -> Self {
        Self {
            floor: DEFAULT_POWER_FLOOR,
            strict: false,
        }
    }
}

pub fn cf_power(cf: &CharacteristicFunction, beta: f64) -> Result<CharacteristicFunction> {
    cf_power_with(cf, beta, PowerOptions::default())
}

/// `F^β` with the logarithm's branch followed continuously outward from `ω = 0`.
///
/// Integer exponents are exact pointwise powers. For other exponents a zero crossing
/// (a sub-floor sample that later recovers, or a phase step above π/2) truncates the
/// rest of that half-line to zero, or fails in strict mode. Monotone sub-floor tails
/// are powered with their phase frozen.
pub fn cf_power_with(
    cf: &CharacteristicFunction,
    beta: f64,
    opts: PowerOptions,
) -> Result<CharacteristicFunction> {
    if !(beta > 0.0 && beta.is_finite()) {
        return Err(Error::PreconditionViolated(format!(
            "power must be positive, got {beta}"
        )));
    }
    if beta == 1.0 {
        let mut out = cf.clone();
        out.validity = Validity::Unchecked;
        return Ok(out);
    }
    if beta.fract() == 0.0 && beta <= i32::MAX as f64 {
        let k = beta as i32;
        return Ok(CharacteristicFunction {
            grid: cf.grid,
            values: cf.values.iter().map(|v| v.powi(k)).collect(),
            validity: Validity::Unchecked,
            truncated: cf.truncated,
        });
    }

    let n = cf.grid.num_points();
    let c = cf.grid.center();
    let mut out = vec![Complex64::new(0.0, 0.0); n];
    out[c] = power_at(cf.values[c], cf.values[c].arg(), beta);
    let mut truncated = cf.truncated;
    let up: Vec<usize> = (c + 1..n).collect();
    let down: Vec<usize> = (0..c).rev().collect();
    for side in [up, down] {
        let mut phase = cf.values[c].arg();
        let mut prev = cf.values[c];
        let mut tail_start: Option<usize> = None;
        let mut crossing: Option<usize> = None;
        for (pos, &j) in side.iter().enumerate() {
            let f = cf.values[j];
            if f.norm() < opts.floor {
                tail_start.get_or_insert(pos);
                out[j] = power_at(f, phase, beta);
                continue;
            }
            if let Some(t) = tail_start {
                crossing = Some(t);
                break;
            }
            let step = (f / prev).arg();
            if step.abs() > FRAC_PI_2 {
                crossing = Some(pos);
                break;
            }
            phase += step;
            prev = f;
            out[j] = power_at(f, phase, beta);
        }
        if let Some(pos) = crossing {
            if opts.strict {
                return Err(Error::ZeroCrossing {
                    omega: cf.grid.omega(side[pos]).abs(),
                });
            }
            for &j in &side[pos..] {
                out[j] = Complex64::new(0.0, 0.0);
            }
            truncated = true;
        }
    }
    Ok(CharacteristicFunction {
        grid: cf.grid,
        values: out,
        validity: Validity::Unchecked,
        truncated,
    })
}

fn power_at(f: Complex64, phase: f64, beta: f64) -> Complex64 {
    let r = f.norm();
    if r == 0.0 {
        return Complex64::new(0.0, 0.0);
    }
    Complex64::from_polar(r.powf(beta), beta * phase)
}

/// The validity battery: normalization, Hermitian symmetry, `|F| <= 1`, and a
/// nonnegative unit-mass inverse transform.
pub fn check_validity(cf: &CharacteristicFunction) -> Validity {
    let f0 = cf.at_zero();
    if (f0 - Complex64::new(1.0, 0.0)).norm() > UNIT_TOL {
        return Validity::Invalid(format!("F(0) = {f0} differs from 1"));
    }
    let dev = cf.hermitian_deviation();
    if dev > UNIT_TOL {
        return Validity::Invalid(format!("not Hermitian: deviation {dev:e}"));
    }
    let peak = cf.values.iter().map(|v| v.norm()).fold(0.0, f64::max);
    if peak > 1.0 + UNIT_TOL {
        return Validity::Invalid(format!("|F| reaches {peak}"));
    }
    let density = match density_from_cf(cf) {
        Ok(d) => d,
        Err(e) => return Validity::Invalid(e.to_string()),
    };
    if density.negativity_floor < NEGATIVITY_TOL {
        return Validity::Invalid(format!(
            "negative density: min {:e}",
            density.negativity_floor
        ));
    }
    let mass = density.mass();
    if (mass - 1.0).abs() > MASS_TOL {
        return Validity::Invalid(format!("density integrates to {mass}"));
    }
    Validity::Valid
}

/// Pointwise product: the CF of an independent sum.
pub fn cf_multiply(
    a: &CharacteristicFunction,
    b: &CharacteristicFunction,
) -> Result<CharacteristicFunction> {
    if !a.grid.same_as(&b.grid) {
        return Err(Error::GridMismatch);
    }
    let validity = if a.validity.is_valid() && b.validity.is_valid() {
        Validity::Valid
    } else {
        Validity::Unchecked
    };
    Ok(CharacteristicFunction {
        grid: a.grid,
        values: a.values.iter().zip(&b.values).map(|(x, y)| x * y).collect(),
        validity,
        truncated: a.truncated || b.truncated,
    })
}

/// Pointwise quotient. Below `floor` the quotient survives only where `|num| <= |den|`;
/// elsewhere it is zeroed and the result flagged as truncated.
pub fn cf_divide(
    num: &CharacteristicFunction,
    den: &CharacteristicFunction,
    floor: f64,
) -> Result<CharacteristicFunction> {
    if !num.grid.same_as(&den.grid) {
        return Err(Error::GridMismatch);
    }
    if !(floor > 0.0 && floor < 1.0) {
        return Err(Error::PreconditionViolated(format!(
            "division floor must lie in (0, 1), got {floor}"
        )));
    }
    let mut truncated = num.truncated || den.truncated;
    let values = num
        .values
        .iter()
        .zip(&den.values)
        .map(|(&a, &b)| {
            let bn = b.norm();
            if bn >= floor || (bn > 0.0 && a.norm() <= bn) {
                // scale by |b| first so tiny denominators do not underflow |b|²
                (a / bn) * (b.conj() / bn)
            } else {
                truncated = true;
                Complex64::new(0.0, 0.0)
            }
        })
        .collect();
    Ok(CharacteristicFunction {
        grid: num.grid,
        values,
        validity: Validity::Unchecked,
        truncated,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn grid() -> GridSpec {
        GridSpec::new(24.0, 4096).unwrap()
    }

    fn laplace_pdf(x: f64, variance: f64) -> f64 {
        let b = (variance / 2.0).sqrt();
        (-x.abs() / b).exp() / (2.0 * b)
    }

    #[test]
    fn closed_form_samples() {
        let g = grid();
        let cf = cf_of(&DistributionModel::gaussian(1.0).unwrap(), &g).unwrap();
        assert_eq!(cf.at_zero(), Complex64::new(1.0, 0.0));
        let d = DistributionModel::gaussian(1.0).unwrap();
        assert!((d.cf_at(1.0).re - (-0.5f64).exp()).abs() < 1e-15);
        let r = DistributionModel::rademacher(1.0).unwrap();
        assert!((r.cf_at(PI).re + 1.0).abs() < 1e-15);
    }

    #[test]
    fn narrow_grid_is_rejected() {
        let g = GridSpec::new(5.0, 1024).unwrap();
        let r = cf_of(&DistributionModel::laplace(1.0).unwrap(), &g);
        assert!(matches!(r, Err(Error::GridTooNarrow { .. })));
    }

    #[test]
    fn tabulated_transform_matches_direct_sum() {
        let g = GridSpec::new(10.0, 256).unwrap();
        let d = DistributionModel::tabulated(TabulatedDensity::from_fn(g, |x| {
            laplace_pdf(x, 1.0)
        }).normalized())
        .unwrap();
        let cf = cf_of(&d, &g).unwrap();
        for j in [0usize, 17, 128, 200] {
            assert!((cf.values()[j] - d.cf_at(g.omega(j))).norm() < 1e-12);
        }
    }

    #[test]
    fn gaussian_round_trip() {
        let g = grid();
        let d = DistributionModel::gaussian(1.0).unwrap();
        let f = density_from_cf(&cf_of(&d, &g).unwrap()).unwrap();
        let err = g
            .xs()
            .iter()
            .zip(&f.values)
            .map(|(x, v)| (v - d.pdf(*x).unwrap()).abs())
            .fold(0.0, f64::max);
        assert!(err < 1e-8, "{err}");
    }

    #[test]
    fn laplace_round_trip_error_matches_band_limit() {
        // |error| ≈ (1/π)∫_{ω_max}^∞ dω / (1 + b²ω²) at the kink.
        for n in [4096usize, 1 << 16] {
            let g = GridSpec::new(30.0, n).unwrap();
            let d = DistributionModel::laplace(2.0).unwrap();
            let f = density_from_cf(&cf_of(&d, &g).unwrap()).unwrap();
            let err = g
                .xs()
                .iter()
                .zip(&f.values)
                .map(|(x, v)| (v - d.pdf(*x).unwrap()).abs())
                .fold(0.0, f64::max);
            let bound = 1.0 / (PI * g.omega_max());
            assert!(err < 1.05 * bound && err > 0.5 * bound, "n={n} err={err} bound={bound}");
        }
    }

    #[test]
    fn sqrt_of_cosine_is_not_a_cf() {
        let g = GridSpec::new(12.0, 4096).unwrap();
        let cos = cf_of(&DistributionModel::rademacher(1.0).unwrap(), &g).unwrap();
        let strict = PowerOptions {
            strict: true,
            ..Default::default()
        };
        assert!(matches!(
            cf_power_with(&cos, 0.5, strict),
            Err(Error::ZeroCrossing { .. })
        ));
        let root = cf_power(&cos, 0.5).unwrap();
        assert!(root.is_truncated());
        assert!(matches!(check_validity(&root), Validity::Invalid(_)));
    }

    #[test]
    fn zero_crossing_found_off_grid() {
        // π/2 is not a grid frequency here, so the crossing shows as a sign flip.
        let g = GridSpec::new(11.3, 4096).unwrap();
        let cos = cf_of(&DistributionModel::rademacher(1.0).unwrap(), &g).unwrap();
        let strict = PowerOptions {
            strict: true,
            ..Default::default()
        };
        match cf_power_with(&cos, 0.5, strict) {
            Err(Error::ZeroCrossing { omega }) => {
                assert!((omega - FRAC_PI_2).abs() <= g.d_omega())
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn gaussian_powers_stay_gaussian() {
        let g = grid();
        let cf = cf_of(&DistributionModel::gaussian(1.0).unwrap(), &g).unwrap();
        let sq = cf_power(&cf, 2.0).unwrap();
        let target = cf_of(&DistributionModel::gaussian(2.0).unwrap(), &g).unwrap();
        assert!(sq.sup_distance(&target).unwrap() < 1e-9);
        // strict mode must not mistake the underflowing tail for a crossing
        let strict = PowerOptions {
            strict: true,
            ..Default::default()
        };
        let p = cf_power_with(&cf, 0.3, strict).unwrap();
        let target = cf_of(&DistributionModel::gaussian(0.3).unwrap(), &g).unwrap();
        assert!(p.sup_distance(&target).unwrap() < 1e-9);
        assert!(!p.is_truncated());
    }

    #[test]
    fn laplace_fractional_powers_are_valid() {
        let g = grid();
        let cf = cf_of(&DistributionModel::laplace(2.0).unwrap(), &g).unwrap();
        let half = cf_power(&cf, 0.5).unwrap();
        let err = g
            .omegas()
            .iter()
            .zip(half.values())
            .map(|(w, v)| (v - Complex64::new((1.0 + w * w).powf(-0.5), 0.0)).norm())
            .fold(0.0, f64::max);
        assert!(err < 1e-12);
        assert!(check_validity(&half).is_valid(), "{:?}", check_validity(&half));
        let p = cf_power(&cf, 3.7).unwrap();
        assert!(check_validity(&p).is_valid());
    }

    #[test]
    fn unit_power_is_bitwise_identity() {
        let g = grid();
        let cf = cf_of(&DistributionModel::uniform(1.0).unwrap(), &g).unwrap();
        assert_eq!(cf_power(&cf, 1.0).unwrap().values(), cf.values());
    }

    #[test]
    fn products_and_quotients() {
        let g = grid();
        let g1 = cf_of(&DistributionModel::gaussian(1.0).unwrap(), &g).unwrap();
        let g2 = cf_of(&DistributionModel::gaussian(2.0).unwrap(), &g).unwrap();
        let point = CharacteristicFunction::point_mass(g);
        assert_eq!(cf_multiply(&g1, &point).unwrap().values(), g1.values());
        assert!(cf_multiply(&g1, &g1).unwrap().sup_distance(&g2).unwrap() < 1e-9);
        let q = cf_divide(&g2, &g1, DEFAULT_DIVISION_FLOOR).unwrap();
        assert!(q.sup_distance(&g1).unwrap() < 1e-9);
        let selfq = cf_divide(&g1, &g1, DEFAULT_DIVISION_FLOOR).unwrap();
        for (v, d) in selfq.values().iter().zip(g1.values()) {
            if d.norm() >= DEFAULT_DIVISION_FLOOR {
                assert!((v - 1.0).norm() < 1e-12);
            }
        }
        let other = CharacteristicFunction::point_mass(GridSpec::new(24.0, 2048).unwrap());
        assert_eq!(cf_multiply(&g1, &other), Err(Error::GridMismatch));
        assert_eq!(
            cf_divide(&g1, &other, DEFAULT_DIVISION_FLOOR),
            Err(Error::GridMismatch)
        );
    }

    #[test]
    fn gaussian_over_laplace_verdict() {
        let g = grid();
        let gauss = cf_of(&DistributionModel::gaussian(1.0).unwrap(), &g).unwrap();
        let lap = cf_of(&DistributionModel::laplace(1.0).unwrap(), &g).unwrap();
        // (1 + ω²/2)·exp(-ω²/2) has a negative inverse transform
        let q = cf_divide(&gauss, &lap, DEFAULT_DIVISION_FLOOR).unwrap().validated();
        assert!(matches!(q.validity(), Validity::Invalid(_)), "{:?}", q.validity());
        // and the reverse quotient exceeds one in magnitude
        let r = cf_divide(&lap, &gauss, DEFAULT_DIVISION_FLOOR).unwrap().validated();
        assert!(matches!(r.validity(), Validity::Invalid(_)));
    }

    #[test]
    fn laplace_gaussian_convolution_matches_brute_force() {
        let g = GridSpec::new(24.0, 4096).unwrap();
        let lap = DistributionModel::laplace(1.0).unwrap();
        let gauss = DistributionModel::gaussian(1.0).unwrap();
        let prod = cf_multiply(&cf_of(&lap, &g).unwrap(), &cf_of(&gauss, &g).unwrap()).unwrap();
        let f = density_from_cf(&prod).unwrap();
        // brute-force convolution with a fine midpoint rule split at the kink
        let conv = |u: f64| {
            let h = 1e-3;
            let mut s = 0.0;
            for side in [-1.0, 1.0] {
                let mut t = 0.5 * h;
                while t < 30.0 {
                    let x = side * t;
                    s += laplace_pdf(x, 1.0) * gauss.pdf(u - x).unwrap() * h;
                    t += h;
                }
            }
            s
        };
        for k in (0..g.num_points()).step_by(97) {
            let u = g.x(k);
            if u.abs() > 15.0 {
                continue;
            }
            assert!((f.values[k] - conv(u)).abs() < 1e-6, "u={u}");
        }
    }

    #[test]
    fn variance_from_curvature_is_accurate() {
        let g = grid();
        for d in [
            DistributionModel::gaussian(1.7).unwrap(),
            DistributionModel::laplace(0.6).unwrap(),
            DistributionModel::uniform(1.0).unwrap(),
        ] {
            let cf = cf_of(&d, &g).unwrap();
            let v = cf.variance_from_curvature();
            assert!((v / d.variance() - 1.0).abs() < 1e-4, "{d:?}: {v}");
        }
    }
}
