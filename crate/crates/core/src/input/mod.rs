//! Probabilistic input models: marginals, Gaussian copula, isoprobabilistic
//! transform and samplers.

pub mod marginal;
pub mod normal;
pub mod random_vector;
pub mod sampling;

pub use marginal::{Family, MarginalDistribution};
pub use random_vector::{RandomVector, SampleMatrix, Space};
pub use sampling::{
    sample_lhs, sample_lhs_standard, sample_mcs, sample_mcs_standard, sample_uniform_ball,
    sample_uniform_ball_standard, LhsVariant, DEFAULT_BALL_RADIUS,
};
