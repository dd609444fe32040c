//! Monte Carlo evaluation of encoder/jammer/decoder profiles and the deviation harnesses
//! around the randomized-linear saddle point.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dist::DistributionModel;
use crate::error::{Error, Result};
use crate::grid::GridSpec;
use crate::matching::{JammingGameConfig, MatchingResult};
use crate::mmse::{extend_nearest, interpolate, EstimatorCurve, DENSITY_FLOOR};

pub const MIN_TRIALS: usize = 10_000;
pub const DEFAULT_TRIALS: usize = 1_000_000;
/// Deviation checks compare against this many standard errors.
pub const SIGMA_THRESHOLD: f64 = 4.0;
const POWER_TOL: f64 = 1e-3;
const BLOCK: usize = 1 << 15;
const DECODER_POINTS: usize = 8192;
const DECODER_TAIL: f64 = 1e-12;

/// Odd memoryless shapes, rescaled to the transmit power.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "shape", rename_all = "snake_case")]
pub enum Compander {
    Linear,
    /// `x + a·x³`.
    CubicMix { a: f64 },
    /// `sign(x)`.
    HardLimiter,
    /// `tanh(k·x)`.
    Tanh { slope: f64 },
}

impl Compander {
    pub fn shape(&self, x: f64) -> f64 {
        match *self {
            Self::Linear => x,
            Self::CubicMix { a } => x + a * x * x * x,
            Self::HardLimiter => {
                if x > 0.0 {
                    1.0
                } else if x < 0.0 {
                    -1.0
                } else {
                    0.0
                }
            }
            Self::Tanh { slope } => (slope * x).tanh(),
        }
    }

    pub fn label(&self) -> String {
        match self {
            Self::Linear => "linear".into(),
            Self::CubicMix { a } => format!("cubic_mix(a={a})"),
            Self::HardLimiter => "hard_limiter".into(),
            Self::Tanh { slope } => format!("tanh(k={slope})"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Encoder {
    /// `Y = γ·α_T·X` with `P(γ = +1) = bernoulli_p`, `γ` shared with the decoder.
    RandomizedLinear { bernoulli_p: f64 },
    /// `Y = gain·shape(X)`; `gain = None` scales to exactly `P_T`.
    Deterministic {
        compander: Compander,
        gain: Option<f64>,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Jammer {
    IndependentNoise { law: DistributionModel },
    /// `Z = ρ·sqrt(P_A/σ_X²)·X + R`, with `R` the residual law rescaled to `(1 − ρ²)P_A`.
    Correlated { rho: f64, residual: DistributionModel },
}

impl Jammer {
    pub fn label(&self) -> String {
        match self {
            Self::IndependentNoise { law } => format!("independent_{}", law.family_name()),
            Self::Correlated { rho, residual } => {
                format!("correlated_{}(rho={rho})", residual.family_name())
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Decoder {
    /// `X̂ = gain·γ·U`.
    Linear { gain: f64 },
    /// `X̂ = h(γ·U)`.
    Curve { curve: EstimatorCurve },
    /// Conditional mean given `γ` for the profile's own encoder and jammer.
    MmseGivenProfile,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StrategyProfile {
    pub encoder: Encoder,
    pub jammer: Jammer,
    pub decoder: Decoder,
}

impl StrategyProfile {
    /// Randomized linear encoder with `p = 1/2`, the given jammer law, and the saddle gain.
    pub fn saddle(cfg: &JammingGameConfig, jammer: DistributionModel, literal_gain: bool) -> Self {
        Self {
            encoder: Encoder::RandomizedLinear { bernoulli_p: 0.5 },
            jammer: Jammer::IndependentNoise { law: jammer },
            decoder: Decoder::Linear {
                gain: cfg.decoder_gain(literal_gain),
            },
        }
    }

    /// Saddle profile around a synthesized jammer; fails when it did not match.
    pub fn saddle_from_matching(
        cfg: &JammingGameConfig,
        matching: &MatchingResult,
        literal_gain: bool,
    ) -> Result<Self> {
        let law = matching.jammer_density.clone().ok_or_else(|| {
            Error::InvalidProfile("the synthesized jammer is not a valid law".into())
        })?;
        Ok(Self::saddle(cfg, law, literal_gain))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SaddleOutcome {
    pub empirical_cost: f64,
    pub std_error: f64,
    pub trials: usize,
    pub theoretical_cost: f64,
    pub z_score: f64,
    /// `E[X·γU] / E[(γU)²]` from the same samples.
    pub empirical_gain: f64,
    pub encoder_power: f64,
    pub jammer_power: f64,
}

/// Seeds for the four random components; each block draws from its own stream.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct StreamSeeds {
    pub source: u64,
    pub sign: u64,
    pub jammer: u64,
    pub noise: u64,
}

impl StreamSeeds {
    pub fn from_master(seed: u64) -> Self {
        Self {
            source: seed,
            sign: seed,
            jammer: seed,
            noise: seed,
        }
    }
}

fn stream(seed: u64, block: usize, component: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(((block as u64) << 2) | component);
    rng
}

/// Profile resolved against a configuration: everything the trial loop needs.
struct Resolved {
    p_plus: f64,
    encoder: EncoderMap,
    jammer_coupling: f64,
    jammer_sampler: crate::dist::Sampler,
    noise_sampler: crate::dist::Sampler,
    source_sampler: crate::dist::Sampler,
    decode: DecodeRule,
    randomized: bool,
}

#[derive(Clone, Copy)]
enum EncoderMap {
    Linear(f64),
    Shaped(Compander, f64),
}

impl EncoderMap {
    fn apply(&self, x: f64) -> f64 {
        match *self {
            Self::Linear(a) => a * x,
            Self::Shaped(c, g) => g * c.shape(x),
        }
    }
}

enum DecodeRule {
    Linear(f64),
    Curve(EstimatorCurve),
    PerSign {
        grid: GridSpec,
        plus: Vec<f64>,
        minus: Vec<f64>,
    },
}

fn mean_square(dist: &DistributionModel, f: impl Fn(f64) -> f64) -> f64 {
    dist.quadrature_nodes()
        .iter()
        .map(|(x, w)| w * f(*x).powi(2))
        .sum()
}

fn resolve(cfg: &JammingGameConfig, profile: &StrategyProfile) -> Result<(Resolved, f64, f64)> {
    cfg.validate()?;
    let sx = cfg.source.variance();

    let (p_plus, encoder, randomized) = match &profile.encoder {
        Encoder::RandomizedLinear { bernoulli_p } => {
            if !(0.0..=1.0).contains(bernoulli_p) {
                return Err(Error::InvalidProfile(format!(
                    "bernoulli_p must lie in [0, 1], got {bernoulli_p}"
                )));
            }
            (*bernoulli_p, EncoderMap::Linear(cfg.alpha_t()), true)
        }
        Encoder::Deterministic { compander, gain } => {
            let raw = mean_square(&cfg.source, |x| compander.shape(x));
            if !(raw > 0.0) {
                return Err(Error::InvalidProfile(format!(
                    "{} carries no power for this source",
                    compander.label()
                )));
            }
            let g = gain.unwrap_or((cfg.power_tx / raw).sqrt());
            (1.0, EncoderMap::Shaped(*compander, g), false)
        }
    };
    let encoder_power = mean_square(&cfg.source, |x| encoder.apply(x));
    if encoder_power > cfg.power_tx * (1.0 + POWER_TOL) {
        return Err(Error::PowerViolation {
            actual: encoder_power,
            budget: cfg.power_tx,
        });
    }

    let (coupling, residual) = match &profile.jammer {
        Jammer::IndependentNoise { law } => {
            law.validate()?;
            (0.0, law.clone())
        }
        Jammer::Correlated { rho, residual } => {
            if !(-1.0..=1.0).contains(rho) {
                return Err(Error::InvalidProfile(format!(
                    "correlation must lie in [-1, 1], got {rho}"
                )));
            }
            residual.validate()?;
            let target = (1.0 - rho * rho) * cfg.power_jam;
            let rv = residual.variance();
            let scaled = if target > 0.0 && rv > 0.0 {
                residual.scaled((target / rv).sqrt())
            } else {
                residual.scaled(0.0)
            };
            (rho * (cfg.power_jam / sx).sqrt(), scaled)
        }
    };
    if residual.mean().abs() > 1e-9 * residual.std_dev().max(1.0) {
        return Err(Error::NonZeroMean(residual.mean()));
    }
    let jammer_power = coupling * coupling * sx + residual.variance();
    if jammer_power > cfg.power_jam * (1.0 + POWER_TOL) {
        return Err(Error::PowerViolation {
            actual: jammer_power,
            budget: cfg.power_jam,
        });
    }

    let decode = match &profile.decoder {
        Decoder::Linear { gain } => DecodeRule::Linear(*gain),
        Decoder::Curve { curve } => DecodeRule::Curve(curve.clone()),
        Decoder::MmseGivenProfile => {
            let maps = |sign: f64| {
                let enc = encoder;
                move |x: f64| sign * enc.apply(x) + coupling * x
            };
            let (grid, plus, minus) =
                per_sign_decoder(&cfg.source, &residual, &cfg.channel_noise, maps(1.0), maps(-1.0))?;
            DecodeRule::PerSign { grid, plus, minus }
        }
    };

    Ok((
        Resolved {
            p_plus,
            encoder,
            jammer_coupling: coupling,
            jammer_sampler: residual.sampler(),
            noise_sampler: cfg.channel_noise.sampler(),
            source_sampler: cfg.source.sampler(),
            decode,
            randomized,
        },
        encoder_power,
        jammer_power,
    ))
}

/// Conditional means of `X` given `U = m_±(X) + W`, with `W = R + N`, tabulated on a grid.
fn per_sign_decoder(
    source: &DistributionModel,
    residual: &DistributionModel,
    noise: &DistributionModel,
    plus: impl Fn(f64) -> f64,
    minus: impl Fn(f64) -> f64,
) -> Result<(GridSpec, Vec<f64>, Vec<f64>)> {
    let (dense, atoms) = match (residual.is_atomic(), noise.is_atomic()) {
        (_, false) => (noise, residual),
        (false, true) => (residual, noise),
        (true, true) => {
            return Err(Error::InvalidProfile(
                "the conditional-mean decoder needs a jammer or channel noise with a density"
                    .into(),
            ))
        }
    };
    let nodes = source.quadrature_nodes();
    let tx = source.tail_half_width(DECODER_TAIL);
    let reach = [-tx, tx]
        .iter()
        .map(|&x| plus(x).abs().max(minus(x).abs()))
        .fold(0.0, f64::max);
    let half_width =
        reach + residual.tail_half_width(DECODER_TAIL) + noise.tail_half_width(DECODER_TAIL);
    let grid = GridSpec::new(half_width.max(1e-6), DECODER_POINTS)?;

    let atom_nodes = atoms.quadrature_nodes();
    let w_grid = GridSpec::new(
        residual.tail_half_width(DECODER_TAIL) + noise.tail_half_width(DECODER_TAIL),
        DECODER_POINTS,
    )?;
    let w_density: Vec<f64> = w_grid
        .xs()
        .into_par_iter()
        .map(|w| {
            atom_nodes
                .iter()
                .map(|(a, p)| p * dense.pdf_unchecked(w - a))
                .sum()
        })
        .collect();
    let f_w = |w: f64| {
        if w.abs() > w_grid.half_width() {
            0.0
        } else {
            interpolate(&w_grid, &w_density, w)
        }
    };

    let curve = |map: &dyn Fn(f64) -> f64| -> Vec<f64> {
        let mapped: Vec<(f64, f64, f64)> = nodes.iter().map(|&(x, w)| (x, w, map(x))).collect();
        let raw: Vec<Option<f64>> = grid
            .xs()
            .into_par_iter()
            .map(|u| {
                let (mut d, mut m) = (0.0, 0.0);
                for &(x, w, y) in &mapped {
                    let p = w * f_w(u - y);
                    d += p;
                    m += x * p;
                }
                (d >= DENSITY_FLOOR).then(|| m / d)
            })
            .collect();
        extend_nearest(&raw)
    };
    let plus_curve = curve(&plus);
    let minus_curve = curve(&minus);
    Ok((grid, plus_curve, minus_curve))
}

#[derive(Debug, Clone, Copy, Default)]
struct Moments {
    n: f64,
    mean: f64,
    m2: f64,
    xv: f64,
    vv: f64,
}

impl Moments {
    fn push(&mut self, e: f64, xv: f64, vv: f64) {
        self.n += 1.0;
        let d = e - self.mean;
        self.mean += d / self.n;
        self.m2 += d * (e - self.mean);
        self.xv += xv;
        self.vv += vv;
    }

    fn merge(self, other: Self) -> Self {
        if self.n == 0.0 {
            return other;
        }
        let n = self.n + other.n;
        let d = other.mean - self.mean;
        Self {
            n,
            mean: self.mean + d * other.n / n,
            m2: self.m2 + other.m2 + d * d * self.n * other.n / n,
            xv: self.xv + other.xv,
            vv: self.vv + other.vv,
        }
    }
}

fn check_trials(trials: usize) -> Result<()> {
    if trials < MIN_TRIALS {
        return Err(Error::PreconditionViolated(format!(
            "at least {MIN_TRIALS} trials are required, got {trials}"
        )));
    }
    Ok(())
}

pub fn simulate(
    cfg: &JammingGameConfig,
    profile: &StrategyProfile,
    trials: usize,
    seed: u64,
) -> Result<SaddleOutcome> {
    simulate_with_seeds(cfg, profile, trials, StreamSeeds::from_master(seed))
}

pub fn simulate_with_seeds(
    cfg: &JammingGameConfig,
    profile: &StrategyProfile,
    trials: usize,
    seeds: StreamSeeds,
) -> Result<SaddleOutcome> {
    check_trials(trials)?;
    let (resolved, encoder_power, jammer_power) = resolve(cfg, profile)?;
    let blocks = trials.div_ceil(BLOCK);
    let stats = (0..blocks)
        .into_par_iter()
        .map(|b| {
            let len = BLOCK.min(trials - b * BLOCK);
            let mut acc = Moments::default();
            run_block(&resolved, seeds, b, len, |_, e, xv, vv| acc.push(e, xv, vv));
            acc
        })
        .collect::<Vec<_>>()
        .into_iter()
        .fold(Moments::default(), Moments::merge);

    let variance = stats.m2 / (stats.n - 1.0);
    let std_error = (variance / stats.n).sqrt();
    let theoretical_cost = cfg.saddle_cost();
    Ok(SaddleOutcome {
        empirical_cost: stats.mean,
        std_error,
        trials,
        theoretical_cost,
        z_score: (stats.mean - theoretical_cost) / std_error,
        empirical_gain: stats.xv / stats.vv,
        encoder_power,
        jammer_power,
    })
}

/// Per-trial squared errors, in trial order.
pub fn squared_errors(
    cfg: &JammingGameConfig,
    profile: &StrategyProfile,
    trials: usize,
    seeds: StreamSeeds,
) -> Result<Vec<f64>> {
    check_trials(trials)?;
    let (resolved, _, _) = resolve(cfg, profile)?;
    let blocks = trials.div_ceil(BLOCK);
    Ok((0..blocks)
        .into_par_iter()
        .flat_map_iter(|b| {
            let len = BLOCK.min(trials - b * BLOCK);
            let mut out = Vec::with_capacity(len);
            run_block(&resolved, seeds, b, len, |_, e, _, _| out.push(e));
            out
        })
        .collect())
}

fn run_block(
    r: &Resolved,
    seeds: StreamSeeds,
    block: usize,
    len: usize,
    mut sink: impl FnMut(usize, f64, f64, f64),
) {
    let mut rx = stream(seeds.source, block, 0);
    let mut rg = stream(seeds.sign, block, 1);
    let mut rz = stream(seeds.jammer, block, 2);
    let mut rn = stream(seeds.noise, block, 3);
    for i in 0..len {
        let x = r.source_sampler.sample(&mut rx);
        let gamma = if r.randomized && rg.random::<f64>() >= r.p_plus {
            -1.0
        } else {
            1.0
        };
        let z = r.jammer_coupling * x + r.jammer_sampler.sample(&mut rz);
        let n = r.noise_sampler.sample(&mut rn);
        let u = gamma * r.encoder.apply(x) + z + n;
        let v = gamma * u;
        let estimate = match &r.decode {
            DecodeRule::Linear(g) => g * v,
            DecodeRule::Curve(c) => c.eval(v),
            DecodeRule::PerSign { grid, plus, minus } => {
                interpolate(grid, if gamma > 0.0 { plus } else { minus }, u)
            }
        };
        sink(i, (x - estimate).powi(2), x * v, v * v);
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CandidateOutcome {
    pub label: String,
    pub outcome: SaddleOutcome,
    /// `(empirical − J) / std_error`.
    pub margin_sigmas: f64,
    pub passed: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DeviationReport {
    pub reference_cost: f64,
    pub candidates: Vec<CandidateOutcome>,
    pub all_passed: bool,
}

impl DeviationReport {
    fn new(reference_cost: f64, candidates: Vec<CandidateOutcome>) -> Self {
        let all_passed = candidates.iter().all(|c| c.passed);
        Self {
            reference_cost,
            candidates,
            all_passed,
        }
    }
}

/// Transmitter deviations: each encoder faces the fixed jammer with its own MMSE decoder;
/// none may beat `J` by more than the threshold.
pub fn verify_rhs_inequality(
    cfg: &JammingGameConfig,
    jammer: &DistributionModel,
    encoders: &[Compander],
    trials: usize,
    seed: u64,
) -> Result<DeviationReport> {
    let j = cfg.saddle_cost();
    let candidates = encoders
        .iter()
        .map(|c| {
            let profile = StrategyProfile {
                encoder: Encoder::Deterministic {
                    compander: *c,
                    gain: None,
                },
                jammer: Jammer::IndependentNoise { law: jammer.clone() },
                decoder: Decoder::MmseGivenProfile,
            };
            let outcome = simulate(cfg, &profile, trials, seed)?;
            let margin = (outcome.empirical_cost - j) / outcome.std_error;
            Ok(CandidateOutcome {
                label: c.label(),
                passed: margin >= -SIGMA_THRESHOLD,
                margin_sigmas: margin,
                outcome,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(DeviationReport::new(j, candidates))
}

/// Jammer deviations against the randomized encoder (`p = 1/2`) with the MMSE decoder for
/// each induced channel; none may exceed `J` by more than the threshold.
pub fn verify_lhs_inequality(
    cfg: &JammingGameConfig,
    jammers: &[Jammer],
    trials: usize,
    seed: u64,
) -> Result<DeviationReport> {
    let j = cfg.saddle_cost();
    let candidates = jammers
        .iter()
        .map(|jam| {
            let profile = StrategyProfile {
                encoder: Encoder::RandomizedLinear { bernoulli_p: 0.5 },
                jammer: jam.clone(),
                decoder: Decoder::MmseGivenProfile,
            };
            let outcome = simulate(cfg, &profile, trials, seed)?;
            let margin = (outcome.empirical_cost - j) / outcome.std_error;
            Ok(CandidateOutcome {
                label: jam.label(),
                passed: margin <= SIGMA_THRESHOLD,
                margin_sigmas: margin,
                outcome,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(DeviationReport::new(j, candidates))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExploitRow {
    pub bernoulli_p: f64,
    pub decoder_gain: f64,
    pub predicted_cost: f64,
    pub outcome: SaddleOutcome,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExploitReport {
    pub rho: f64,
    pub rows: Vec<ExploitRow>,
    /// Cost at `p = 1/2` minus the lowest cost over the sweep, in combined standard errors.
    pub best_reduction_sigmas: f64,
    pub exploit_found: bool,
}

/// Second-moment gain and cost of `X̂ = g·γU` against a correlated jammer.
pub fn reoptimized_linear(cfg: &JammingGameConfig, rho: f64, p: f64) -> (f64, f64) {
    let sx = cfg.source.variance();
    let at = cfg.alpha_t();
    let c = rho * (cfg.power_jam / sx).sqrt();
    let bias = 2.0 * p - 1.0;
    let cross = at * sx + bias * c * sx;
    let energy = cfg.power_tx
        + 2.0 * bias * at * c * sx
        + c * c * sx
        + (1.0 - rho * rho) * cfg.power_jam
        + cfg.channel_noise.variance();
    (cross / energy, sx - cross * cross / energy)
}

/// Sweeps the encoder's sign bias against a correlated jammer with the decoder re-fit per `p`.
pub fn bernoulli_exploit_check(
    cfg: &JammingGameConfig,
    p_values: &[f64],
    rho: f64,
    residual: &DistributionModel,
    trials: usize,
    seed: u64,
) -> Result<ExploitReport> {
    if rho == 0.0 {
        return Err(Error::PreconditionViolated(
            "the exploit needs a correlated jammer".into(),
        ));
    }
    let mut sweep: Vec<f64> = p_values.to_vec();
    if !sweep.contains(&0.5) {
        sweep.push(0.5);
    }
    let rows = sweep
        .iter()
        .map(|&p| {
            let (gain, predicted) = reoptimized_linear(cfg, rho, p);
            let profile = StrategyProfile {
                encoder: Encoder::RandomizedLinear { bernoulli_p: p },
                jammer: Jammer::Correlated {
                    rho,
                    residual: residual.clone(),
                },
                decoder: Decoder::Linear { gain },
            };
            Ok(ExploitRow {
                bernoulli_p: p,
                decoder_gain: gain,
                predicted_cost: predicted,
                outcome: simulate(cfg, &profile, trials, seed)?,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let fair = rows
        .iter()
        .find(|r| r.bernoulli_p == 0.5)
        .expect("sweep contains 1/2")
        .outcome;
    let best_reduction_sigmas = rows
        .iter()
        .map(|r| {
            let se = (fair.std_error.powi(2) + r.outcome.std_error.powi(2)).sqrt();
            (fair.empirical_cost - r.outcome.empirical_cost) / se
        })
        .fold(f64::NEG_INFINITY, f64::max);
    Ok(ExploitReport {
        rho,
        rows,
        best_reduction_sigmas,
        exploit_found: best_reduction_sigmas > SIGMA_THRESHOLD,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn unit_gaussian() -> JammingGameConfig {
        let g = DistributionModel::gaussian(1.0).unwrap();
        JammingGameConfig::new(g.clone(), g, 1.0, 1.0).unwrap()
    }

    #[test]
    fn gaussian_saddle_cost() {
        let cfg = unit_gaussian();
        let profile = StrategyProfile::saddle(&cfg, DistributionModel::gaussian(1.0).unwrap(), false);
        let out = simulate(&cfg, &profile, 200_000, 7).unwrap();
        assert!((out.theoretical_cost - 2.0 / 3.0).abs() < 1e-15);
        assert!(out.z_score.abs() < 4.0, "{out:?}");
        assert!((out.empirical_gain - cfg.decoder_gain(false)).abs() < 1e-2);
    }

    #[test]
    fn result_is_deterministic() {
        let cfg = unit_gaussian();
        let profile = StrategyProfile::saddle(&cfg, DistributionModel::laplace(1.0).unwrap(), false);
        let a = simulate(&cfg, &profile, 50_000, 3).unwrap();
        let b = simulate(&cfg, &profile, 50_000, 3).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn rejects_bad_profiles() {
        let cfg = unit_gaussian();
        let mut profile = StrategyProfile::saddle(&cfg, DistributionModel::gaussian(2.0).unwrap(), false);
        assert!(matches!(
            simulate(&cfg, &profile, 20_000, 1),
            Err(Error::PowerViolation { .. })
        ));
        profile.jammer = Jammer::IndependentNoise {
            law: DistributionModel::gaussian(1.0).unwrap(),
        };
        profile.encoder = Encoder::RandomizedLinear { bernoulli_p: 1.5 };
        assert!(matches!(
            simulate(&cfg, &profile, 20_000, 1),
            Err(Error::InvalidProfile(_))
        ));
        profile.encoder = Encoder::Deterministic {
            compander: Compander::Linear,
            gain: Some(2.0),
        };
        assert!(matches!(
            simulate(&cfg, &profile, 20_000, 1),
            Err(Error::PowerViolation { .. })
        ));
        assert!(matches!(
            simulate(&cfg, &StrategyProfile::saddle(&cfg, DistributionModel::gaussian(1.0).unwrap(), false), 100, 1),
            Err(Error::PreconditionViolated(_))
        ));
    }

    #[test]
    fn reoptimized_gain_matches_saddle_at_half() {
        let cfg = unit_gaussian();
        let (g, cost) = reoptimized_linear(&cfg, 0.7, 0.5);
        assert!((g - cfg.decoder_gain(false)).abs() < 1e-15);
        assert!((cost - 2.0 / 3.0).abs() < 1e-15);
        let (_, exploited) = reoptimized_linear(&cfg, 0.7, 1.0);
        assert!((exploited - (1.0 - 1.7f64.powi(2) / 4.4)).abs() < 1e-12);
    }

    #[test]
    fn compander_shapes() {
        assert_eq!(Compander::HardLimiter.shape(-0.3), -1.0);
        assert_eq!(Compander::CubicMix { a: 0.5 }.shape(2.0), 6.0);
        assert!((Compander::Tanh { slope: 1.0 }.shape(0.5) - 0.5f64.tanh()).abs() < 1e-15);
    }
}
