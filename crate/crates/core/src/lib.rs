//! Adaptive multiple importance sampling.
//!
//! The crate implements three adaptive importance samplers over a Gaussian
//! proposal family: the modified AMIS (learn each proposal from the current
//! sample only, recycle every particle under the deterministic mixture at the
//! end), the original AMIS (recycle at every iteration and learn from all
//! particles), and a naive scheme that never recycles. Synthetic targets with
//! quadrature ground truth and a set of diagnostics make the convergence
//! behaviour of each scheme measurable.
//!
//! ```
//! use amis::{
//!     make_gaussian_target, run, Algorithm, FamilySpec, Integrand, NamedIntegrand,
//!     ProposalParams, RunConfig, Schedule,
//! };
//!
//! let target = make_gaussian_target(&[1.0, -1.0], &[1.0, 0.0, 0.0, 1.0]).unwrap();
//! let config = RunConfig::new(
//!     target,
//!     FamilySpec::gaussian(2),
//!     ProposalParams::isotropic(&[0.0, 0.0], 5.0).unwrap(),
//!     Schedule::quadratic(50, 5).unwrap(),
//!     7,
//! )
//! .with_algorithm(Algorithm::ModifiedAmis)
//! .with_integrands(vec![NamedIntegrand::new("x1", Integrand::coordinate(0, 2))]);
//! let out = run(&config).unwrap();
//! assert!((out.estimates["x1"] - 1.0).abs() < 0.1);
//! ```

pub mod algorithms;
pub mod diagnostics;
pub mod error;
pub mod grid;
pub mod integrand;
pub mod mixture;
pub mod params;
pub mod particles;
pub mod proposals;
pub mod quadrature;
pub mod rng;
pub mod schedule;
pub mod targets;
pub mod weights;

pub use algorithms::{
    estimate, learn_step, oracle_estimate, recycle, recycled_log_weights, run, run_modified_amis,
    run_naive, run_original_amis, Adaptation, RunConfig,
};
pub use diagnostics::{
    distances, empirical_cdf, ess, log_m_eps_at, m_eps_bound, theta_error, wlln_check, BallMode,
    BallSpec, DistanceReport, WllnReport, WllnSettings, WllnStatistic,
};
pub use error::{AmisError, Result};
pub use grid::{CdfGrid, GridSpec};
pub use integrand::{Integrand, NamedIntegrand};
pub use mixture::{mixture_log_density, Mixture};
pub use params::ProposalParams;
pub use particles::{Algorithm, Normalization, ParticleSystem, RunOutput};
pub use proposals::{
    accumulate_h, log_density, moments_to_params, sample, BoxBounds, Component, FamilySpec, HStat,
};
pub use rng::{derive_seed, StreamFactory};
pub use schedule::{Schedule, ScheduleKind};
pub use targets::{
    expectation, make_banana_target, make_gaussian_target, make_mixture_target,
    make_uniform_target, normalization_integral, true_cdf_grid, TargetModel,
};
pub use weights::{log_sum_exp, pairwise_sum, simple_log_weight};
