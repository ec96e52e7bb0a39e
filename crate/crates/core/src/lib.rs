//! Optimal two-color microarray designs for factorial experiments under the baseline
//! parametrization.
//!
//! The crate covers exact BLUE variances of baseline factorial effects for any multiset
//! of slides, the named design constructions (saturated ρ-map designs, dye swaps,
//! reference and symmetric designs, ...), exhaustive and heuristic w-optimal searches,
//! and approximate-theory design measures with efficiency computations.

pub mod approx;
pub mod construct;
pub mod error;
pub mod factorial;
pub mod linalg;
pub mod model;
pub mod rational;
pub mod search;

pub use approx::{
    closed_form_orth, closed_form_pi0, efficiency, hetero_efficiency, measure_criterion, optimize_measure,
    round_measure, Candidate, DesignMeasure, OptimizerOptions,
};
pub use error::{Error, Result};
pub use factorial::{
    baseline_contrast, canonicalize, ordered_pairs, orthogonal_contrast_2x2, unordered_pairs, ContrastVector, Design,
    EffectIndex, FactorLayout, Parametrization, Slide, Treatment,
};
pub use model::{
    blue_variance, is_estimable, model_rows, observation_covariance, variance_report, DyeStructure, ModelSpec, Noise,
    ReplicationPlan, VarianceReport,
};
pub use rational::Rational;
pub use search::{
    augment_optimal, check_conjecture, criterion_value, exhaustive_w_optimal, min_slides, pareto_admissible,
    relative_efficiency, replication_search, CriterionWeights, SearchResult, SearchSpace,
};
