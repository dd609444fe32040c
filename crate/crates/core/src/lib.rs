//! Optimal jamming for zero-delay communication over additive-noise channels.
//!
//! The crate synthesizes the jamming density that forces the transmitter and receiver
//! into linear mappings (characteristic-function matching), checks the resulting
//! saddle point by Monte Carlo deviation tests, and approximates worst-case noise via
//! orthonormal-polynomial MMSE expansions when no matching density exists.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cf;
pub mod dist;
pub mod error;
pub mod game;
pub mod grid;
pub mod matching;
pub mod mmse;
pub mod ode;
pub mod poly;
pub mod search;
mod quad;

pub use cf::{
    cf_divide, cf_multiply, cf_of, cf_power, cf_power_with, check_validity, density_from_cf,
    CharacteristicFunction, PowerOptions, Validity,
};
pub use dist::{moments, DistributionModel, MixtureComponent, Sampler, TabulatedDensity};
pub use error::{Error, Result};
pub use grid::GridSpec;
pub use matching::{
    asymptotic_gaussianization, high_csnr_gaussianization, identical_law_check,
    synthesize_jammer, synthesize_jammer_with, JammingGameConfig, MatchVerdict, MatchingResult,
};
pub use mmse::{
    distortion_of, matched_source_check, mmse_estimator, Estimator, EstimatorCurve, MatchedSource,
};
pub use poly::{
    basis_from_moments, build_basis, build_basis_for_pair, expansion_coeffs, mmse_via_expansion,
    moment_coeffs, ExpansionCoefficients, OrthoPolyBasis,
};
pub use search::{
    nonlinear_energy, worst_noise_search, worst_noise_search_with, FamilyProjection, NoiseFamily,
    NoiseSearchResult, SearchOptions,
};
pub use ode::{noise_from_estimator, noise_from_estimator_with, NoiseRecovery};
pub use game::{
    bernoulli_exploit_check, simulate, simulate_with_seeds, squared_errors, verify_lhs_inequality,
    verify_rhs_inequality, Compander, Decoder, DeviationReport, Encoder, ExploitReport, Jammer,
    SaddleOutcome, StrategyProfile, StreamSeeds,
};
