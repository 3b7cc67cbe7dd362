//! Boolean-function and distribution analysis with brute-force oracles.

mod advantage;
mod fourier;
mod oracles;
mod tv;

pub use advantage::{
    restriction_from_index, weak_learning_advantage, AdvantageOptions, AdvantageReport, Witness,
};
pub use fourier::{
    coordinate_values, covariance, inf_cov_identity_check, influence, influences, signed_values,
    variance, ProductDistribution,
};
pub use oracles::{kkl_oracle, osss_oracle, OracleReport, OracleRow};
pub use tv::{
    leaf_tv_check, leaf_tv_check_f64, tv_distance, tv_marginal, tv_moment_bounds_check,
    LeafTvReport, TvMomentReport, TV_TOL,
};
