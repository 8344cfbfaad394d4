//! Multi-objective Tree-structured Parzen Estimator (MOTPE).
//!
//! Completed trials are split into a good and a bad set by nondomination
//! rank (hypervolume subset selection breaks the straddling rank), one
//! Parzen estimator per dimension is fitted to each set, and the candidate
//! drawn from the good estimator with the largest `l(x) / g(x)` is tried next.

pub mod pareto;
pub mod parzen;
pub mod space;
pub mod study;

pub use pareto::{dominates, hssp_select, hypervolume, nondominated_sort, reference_point, to_minimization, Direction};
pub use parzen::{suggest, Observation, SamplerConfig};
pub use space::{Dimension, Domain, ParamValue, Params, SearchSpace};
pub use study::{pick_final, run_study, Evaluation, ParetoFront, Study, StudyConfig, Trial, TrialState};
