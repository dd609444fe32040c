//! Jammer synthesis from the characteristic-function matching condition
//! `F_Z(ω) = F_X^β(α_T ω) / F_N(ω)`, plus the special-case and asymptotic checks.

use serde::{Deserialize, Serialize};

use crate::cf::{
    cf_divide, cf_multiply, cf_of, cf_power_with, density_from_cf, CharacteristicFunction,
    PowerOptions, Validity, DEFAULT_DIVISION_FLOOR,
};
use crate::dist::DistributionModel;
use crate::error::{Error, Result};
use crate::grid::GridSpec;

/// Source, channel noise and the two power budgets of the jamming game.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct JammingGameConfig {
    pub source: DistributionModel,
    pub channel_noise: DistributionModel,
    pub power_tx: f64,
    pub power_jam: f64,
}

impl JammingGameConfig {
    pub fn new(
        source: DistributionModel,
        channel_noise: DistributionModel,
        power_tx: f64,
        power_jam: f64,
    ) -> Result<Self> {
        let cfg = Self {
            source,
            channel_noise,
            power_tx,
            power_jam,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        self.source.validate()?;
        self.channel_noise.validate()?;
        if !(self.power_tx > 0.0 && self.power_tx.is_finite()) {
            return Err(Error::PreconditionViolated(format!(
                "transmit power must be positive, got {}",
                self.power_tx
            )));
        }
        if !(self.power_jam >= 0.0 && self.power_jam.is_finite()) {
            return Err(Error::PreconditionViolated(format!(
                "jamming power must be >= 0, got {}",
                self.power_jam
            )));
        }
        if self.source.variance() <= 0.0 {
            return Err(Error::PreconditionViolated(
                "source variance must be positive".into(),
            ));
        }
        Ok(())
    }

    /// `β = (P_A + σ_N²) / P_T`.
    pub fn beta(&self) -> f64 {
        (self.power_jam + self.channel_noise.variance()) / self.power_tx
    }

    /// `α_T = sqrt(P_T / σ_X²)`.
    pub fn alpha_t(&self) -> f64 {
        (self.power_tx / self.source.variance()).sqrt()
    }

    /// Distortion of the best linear encoder/decoder pair,
    /// `σ_X²(P_A + σ_N²)/(P_T + P_A + σ_N²)`. It is also the saddle-point cost.
    pub fn linear_distortion(&self) -> f64 {
        let noise = self.power_jam + self.channel_noise.variance();
        self.source.variance() * noise / (self.power_tx + noise)
    }

    pub fn saddle_cost(&self) -> f64 {
        self.linear_distortion()
    }

    /// Receiver gain applied to `γ·U` at the saddle point.
    pub fn decoder_gain(&self, literal: bool) -> f64 {
        let total = self.power_tx + self.power_jam + self.channel_noise.variance();
        let base = self.source.variance() / total;
        if literal {
            base
        } else {
            self.alpha_t() * base
        }
    }

    /// Grid covering `α_T X`, `N` and a jammer of power `P_A`.
    pub fn default_grid(&self) -> GridSpec {
        let scaled = self.source.scaled(self.alpha_t());
        let jam_proxy = DistributionModel::Laplace {
            variance: self.power_jam,
        };
        GridSpec::covering(&[&scaled, &self.channel_noise, &jam_proxy])
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "verdict", content = "reason")]
pub enum MatchVerdict {
    Matched,
    NoMatch(String),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MatchingResult {
    pub grid: GridSpec,
    pub jammer_cf: CharacteristicFunction,
    pub jammer_density: Option<DistributionModel>,
    pub verdict: MatchVerdict,
    pub jammer_variance: f64,
}

impl MatchingResult {
    pub fn is_matched(&self) -> bool {
        self.verdict == MatchVerdict::Matched
    }
}

pub fn synthesize_jammer(cfg: &JammingGameConfig, grid: &GridSpec) -> Result<MatchingResult> {
    synthesize_jammer_with(cfg, grid, PowerOptions::default())
}

/// Evaluates the matching quotient and runs the validity battery on it.
pub fn synthesize_jammer_with(
    cfg: &JammingGameConfig,
    grid: &GridSpec,
    opts: PowerOptions,
) -> Result<MatchingResult> {
    cfg.validate()?;
    let scaled_source = cf_of(&cfg.source.scaled(cfg.alpha_t()), grid)?;
    let numerator = cf_power_with(&scaled_source, cfg.beta(), opts)?;
    let noise = cf_of(&cfg.channel_noise, grid)?;
    let jammer_cf = cf_divide(&numerator, &noise, DEFAULT_DIVISION_FLOOR)?.validated();
    let jammer_variance = jammer_cf.variance_from_curvature();
    let (verdict, jammer_density) = match jammer_cf.validity() {
        Validity::Valid => {
            let density = DistributionModel::tabulated(density_from_cf(&jammer_cf)?)?;
            (MatchVerdict::Matched, Some(density))
        }
        Validity::Invalid(reason) => (MatchVerdict::NoMatch(reason.clone()), None),
        Validity::Unchecked => unreachable!("validated above"),
    };
    Ok(MatchingResult {
        grid: *grid,
        jammer_cf,
        jammer_density,
        verdict,
        jammer_variance,
    })
}

/// Identically distributed source and noise with `P_T = P_A = σ_N²` (so `β = 2`):
/// true iff the synthesized jammer matches the scaled source CF within 1e-6.
pub fn identical_law_check(cfg: &JammingGameConfig, grid: &GridSpec) -> Result<bool> {
    let same_law = cfg.source == cfg.channel_noise;
    let sn = cfg.channel_noise.variance();
    let rel = |a: f64, b: f64| (a - b).abs() <= 1e-12 * a.abs().max(b.abs());
    if !same_law || !rel(cfg.power_tx, cfg.power_jam) || !rel(cfg.power_jam, sn) {
        return Err(Error::PreconditionViolated(
            "requires identical source/noise laws and P_T = P_A = noise variance".into(),
        ));
    }
    let result = synthesize_jammer(cfg, grid)?;
    if !result.is_matched() {
        return Ok(false);
    }
    let target = cf_of(&cfg.source.scaled(cfg.alpha_t()), grid)?;
    Ok(result.jammer_cf.sup_distance(&target)? < 1e-6)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GaussianDistance {
    pub beta: f64,
    pub distance: f64,
}

/// Sup-norm distance between the variance-normalized `F_X^β` and the Gaussian CF of
/// equal variance, for each `β` (increasing). The distances shrink as `β → ∞`.
pub fn asymptotic_gaussianization(
    source: &DistributionModel,
    betas: &[f64],
    grid: &GridSpec,
) -> Result<Vec<GaussianDistance>> {
    check_schedule(betas, true)?;
    let gauss = cf_of(&DistributionModel::gaussian(source.variance())?, grid)?;
    betas
        .iter()
        .map(|&beta| {
            let cf = cf_of(&source.scaled(1.0 / beta.sqrt()), grid)?;
            let powered = cf_power_with(&cf, beta, PowerOptions::default())?;
            Ok(GaussianDistance {
                beta,
                distance: powered.sup_distance(&gauss)?,
            })
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct JammerGaussianDistance {
    pub beta: f64,
    pub jammer: String,
    pub distance: f64,
}

/// Fixed jammer test set at power `P_A`.
pub fn jammer_test_set(power_jam: f64) -> Result<Vec<DistributionModel>> {
    Ok(vec![
        DistributionModel::gaussian(power_jam)?,
        DistributionModel::laplace(power_jam)?,
        DistributionModel::uniform(power_jam)?,
    ])
}

/// High-CSNR check for a Gaussian source: for each `β` (decreasing toward 0) and each
/// jammer in [`jammer_test_set`], the distance between the unit-variance-normalized
/// `(F_Z F_N)^{1/β}` and the standard Gaussian CF.
pub fn high_csnr_gaussianization(
    noise: &DistributionModel,
    power_jam: f64,
    betas: &[f64],
    grid: &GridSpec,
) -> Result<Vec<JammerGaussianDistance>> {
    check_schedule(betas, false)?;
    let total = power_jam + noise.variance();
    if total <= 0.0 {
        return Err(Error::PreconditionViolated(
            "jammer plus noise power must be positive".into(),
        ));
    }
    let unit = cf_of(&DistributionModel::gaussian(1.0)?, grid)?;
    let mut rows = Vec::new();
    for jammer in jammer_test_set(power_jam)? {
        for &beta in betas {
            let s = (beta / total).sqrt();
            let sum = cf_multiply(
                &cf_of(&jammer.scaled(s), grid)?,
                &cf_of(&noise.scaled(s), grid)?,
            )?;
            let powered = cf_power_with(&sum, 1.0 / beta, PowerOptions::default())?;
            rows.push(JammerGaussianDistance {
                beta,
                jammer: jammer.family_name().to_string(),
                distance: powered.sup_distance(&unit)?,
            });
        }
    }
    Ok(rows)
}

fn check_schedule(betas: &[f64], increasing: bool) -> Result<()> {
    if betas.iter().any(|b| !(*b > 0.0 && b.is_finite())) {
        return Err(Error::PreconditionViolated(
            "every beta must be positive".into(),
        ));
    }
    let ordered = betas
        .windows(2)
        .all(|w| if increasing { w[0] < w[1] } else { w[0] > w[1] });
    if !ordered {
        return Err(Error::PreconditionViolated(format!(
            "beta schedule must be strictly {}",
            if increasing { "increasing" } else { "decreasing" }
        )));
    }
    Ok(())
}
