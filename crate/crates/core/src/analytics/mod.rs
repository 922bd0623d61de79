//! Closed-form limit laws, case classification, hitting probabilities and
//! tail bounds.

mod bdp;
mod classify;
mod hitting;
mod laws;
mod scaling;

pub use bdp::{bdp_extinction_cdf_exact, bdp_case5_alternative, bdp_limit_law, BdpSequencePoint};
pub use classify::{classify_case, classify_detailed, law_for_case, CaseLabel, Classification, ConditionCheck};
pub use hitting::{
    excursion_bound, hit_prob_id_time_bound, hit_prob_immig_death, hit_prob_linear_bdp, integral_laplace,
    integral_mean, integral_tail_bound,
};
pub use laws::{asymptotic_cdf, AsymptoticLaw, LawShape};
pub use scaling::{Exponent, LambdaGap, PowerLaw, R0Scaling, ScalingSpec};
