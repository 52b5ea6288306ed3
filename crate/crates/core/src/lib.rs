//! Gaussian mixture order selection by penalized likelihood.
//!
//! Mixtures of increasing order are fitted by EM to an empirical sample or a
//! continuous input distribution, scored under information criteria, MAP with a
//! geometric prior over the order, or an accuracy/cost effectiveness ratio, and
//! the order is picked by an incremental search that stops once the objective
//! stops improving.

pub mod cli;
pub mod distributions;
pub mod entropy;
pub mod error;
pub mod mixture;
pub mod quadrature;
pub mod search;
pub mod selection;

pub use distributions::{InputDistribution, InputKind, WeightedPoints};
pub use entropy::{accuracy_report, loglik_from_expectation, relative_entropy, AccuracyReport};
pub use error::{MixselError, Result};
pub use mixture::{em_fit, num_params, Component, EmConfig, FitResult, GaussianMixture, MapPriorSpec};
pub use search::{accuracy_curve, select_model, SearchConfig, SelectionRow, SelectionTrace, StopReason};
pub use selection::{CriterionKind, CriterionSpec, Estimation};
