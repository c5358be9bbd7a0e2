//! Parameter estimation for the symmetric variance-gamma (generalized
//! Laplace) distribution.
//!
//! The law has characteristic function e^{imw} (1 + b w^2/2)^{-a} with
//! shape a > 0, scale b > 0 and location m, and the gamma-normal mixture
//! representation X = m + sqrt(b G) Z. The crate provides:
//!
//! - [`dist`]: parameters, density (through a log-scaled Bessel K), the
//!   characteristic function, exact population moments and a seedable,
//!   order-stable sampler;
//! - [`moments`]: the classic method of moments (variance + fourth moment),
//!   the modified method of moments (absolute first moment + variance, via
//!   the strictly decreasing shape map L and its numerical inverse), and
//!   the feasibility predicates for both;
//! - [`mle`]: Nelder-Mead maximum likelihood with proposal clamping;
//! - [`asymptotics`]: limiting covariance matrices at rate sqrt(N) for the
//!   moment estimators, closed-form and delta-method routes;
//! - [`simlab`]: a deterministic, parallel Monte Carlo harness producing
//!   bias/MSE/standard-error tables and feasibility probabilities;
//! - [`special`]: the underlying log-gamma, digamma and log-Bessel-K kernel.

pub mod asymptotics;
pub mod dist;
mod error;
pub mod mle;
pub mod moments;
mod seed;
pub mod simlab;
pub mod special;

pub use dist::{cf, log_pdf, pdf, population_moments, sample, Params, PopulationMoments};
pub use error::{Error, Result};
pub use mle::{fit_mle, neg_log_likelihood, MleConfig};
pub use moments::{
    classic_mme, ell, feasibility_classic, feasibility_modified, l_function, l_prime,
    modified_mme, summarize, FitResult, Method, MomentSummary, Sample, L_BOUNDARY,
};
