//! D-optimal designs for paired comparisons of two-level attributes under a
//! model with main effects and interactions up to third order.
//!
//! Alternatives show `S` of `K` binary attributes. Designs that are invariant
//! under attribute permutations and level flips are described by weights on
//! the comparison depth `d`, the number of shown attributes on which the two
//! alternatives differ. Their information matrix is block diagonal with one
//! value per parameter block, which reduces D-optimal design to a small
//! concave problem on the simplex of depth weights.
//!
//! ```
//! use pcdesign::{optimize_full, ModelSpec, OptimOptions};
//!
//! let spec = ModelSpec::new(6, 6).unwrap();
//! let result = optimize_full(spec, OptimOptions::default()).unwrap();
//! assert_eq!(result.support, vec![2, 5]);
//! assert!(result.certificate.optimal);
//! ```

pub mod cli;
pub mod design_space;
pub mod document;
pub mod equivalence;
pub mod error;
pub mod information;
pub mod optimizer;
pub mod tables;

pub use design_space::{
    comparison_depth, count_pairs, difference_vector, enumerate_orbit, param_dims,
    regression_vector, ComparisonPair, ExplicitDesign, ModelSpec, PairSpace, ParamDims, Profile,
};
pub use equivalence::{
    kw_certify, kw_certify_exact, variance_at, variance_exact, variance_profile,
    variance_profile_exact, variance_uniform, Certificate, ExactVariance, VarianceProfile,
    DEFAULT_KW_TOL,
};
pub use error::{DesignError, Result};
pub use information::{
    h_values, info_matrix_exact, is_identifiable, log_det, mix_h, mix_h_exact, orbit_gram,
    BlockInfo, DenseInfo, OrbitGram, Rational,
};
pub use optimizer::{
    conjectured_design, optimal_depth_first_order, optimal_depth_main, optimal_depth_second_order,
    optimal_depth_third_order, optimize_full, uniform_on_all_pairs, DepthDesign, OptimOptions,
    OptimResult,
};
