//! Moment and tail bounds for polynomials in dependent heavy-tailed
//! variables, together with a Monte Carlo harness that checks them.

pub mod calculus;
pub mod envelope;
pub mod error;
pub mod mcverify;
pub mod numeric;
pub mod polymodel;
pub mod tails;

pub use calculus::{
    otimes, otimes_chain, zeta_chain, ChainGrid, DependenceRegime, Direction, GrowthConstant, RegimeTag, ZetaChain,
};
pub use envelope::{
    empirical_moments, eval_envelope, gls_norm, moments_from_tail, EnvelopeForm, MomentEnvelope, MomentEstimate,
    SlowlyVarying, SupportInterval, TailBound,
};
pub use error::{Error, Result};
pub use mcverify::{
    brute_force_moments, convergence_diagnostics, doob_experiment, run_experiment, BoundSource, ExperimentPlan,
    MomentRow, VerificationReport,
};
pub use tails::{dominance_check, tail_from_envelope, ConjugateSpec};
