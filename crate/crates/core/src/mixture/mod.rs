//! Univariate Gaussian mixtures `f(x) = Σ p_i φ(x; μ_i, σ_i²)` and their fitting.

mod em;

pub use em::{augment, em_fit, variance_floor, EmConfig, FitResult, MapPriorSpec, MeanPrior, VariancePrior};

use serde::{Deserialize, Serialize};

use crate::distributions::WeightedPoints;
use crate::error::{MixselError, Result};

const LN_SQRT_2PI: f64 = 0.918_938_533_204_672_7;

/// Tolerance on `Σ p_i = 1` when accepting a mixture from outside.
const WEIGHT_SUM_TOL: f64 = 1e-9;

pub fn normal_pdf(x: f64, mean: f64, variance: f64) -> f64 {
    normal_ln_pdf(x, mean, variance).exp()
}

pub fn normal_ln_pdf(x: f64, mean: f64, variance: f64) -> f64 {
    let d = x - mean;
    -LN_SQRT_2PI - 0.5 * variance.ln() - 0.5 * d * d / variance
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Component {
    pub weight: f64,
    pub mean: f64,
    pub variance: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "MixtureSpec")]
pub struct GaussianMixture {
    components: Vec<Component>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct MixtureSpec {
    components: Vec<Component>,
}

impl TryFrom<MixtureSpec> for GaussianMixture {
    type Error = MixselError;

    fn try_from(spec: MixtureSpec) -> Result<Self> {
        GaussianMixture::new(spec.components)
    }
}

impl GaussianMixture {
    /// Validates positivity, finiteness and the weight simplex.
    pub fn new(components: Vec<Component>) -> Result<Self> {
        if components.is_empty() {
            return Err(MixselError::config("a mixture needs at least one component"));
        }
        for c in &components {
            if !(c.weight.is_finite() && c.weight > 0.0) {
                return Err(MixselError::config(format!(
                    "component weight {} is not positive",
                    c.weight
                )));
            }
            if !c.mean.is_finite() {
                return Err(MixselError::config("component mean is not finite"));
            }
            if !(c.variance.is_finite() && c.variance > 0.0) {
                return Err(MixselError::config(format!(
                    "component variance {} is not positive",
                    c.variance
                )));
            }
        }
        let total: f64 = components.iter().map(|c| c.weight).sum();
        if (total - 1.0).abs() > WEIGHT_SUM_TOL {
            return Err(MixselError::config(format!("component weights sum to {total}, not 1")));
        }
        Ok(Self { components })
    }

    /// Single Gaussian.
    pub fn single(mean: f64, variance: f64) -> Result<Self> {
        Self::new(vec![Component {
            weight: 1.0,
            mean,
            variance,
        }])
    }

    /// Builds from raw parts; weights are renormalized.
    pub(crate) fn from_parts(weights: &[f64], means: &[f64], variances: &[f64]) -> Self {
        let total: f64 = weights.iter().sum();
        let components = weights
            .iter()
            .zip(means)
            .zip(variances)
            .map(|((&w, &mean), &variance)| Component {
                weight: w / total,
                mean,
                variance,
            })
            .collect();
        Self { components }
    }

    pub fn components(&self) -> &[Component] {
        &self.components
    }

    pub fn order(&self) -> usize {
        self.components.len()
    }

    pub fn density(&self, x: f64) -> f64 {
        self.components
            .iter()
            .map(|c| c.weight * normal_pdf(x, c.mean, c.variance))
            .sum()
    }

    /// `ln f(x)` via log-sum-exp, finite far into the tails.
    pub fn ln_density(&self, x: f64) -> f64 {
        let terms: Vec<f64> = self
            .components
            .iter()
            .map(|c| c.weight.ln() + normal_ln_pdf(x, c.mean, c.variance))
            .collect();
        log_sum_exp(&terms)
    }

    /// `Σ_j w_j ln f(x_j)`; for an empirical sample this is the log-likelihood divided by `n`.
    pub fn expected_log_density(&self, pts: &WeightedPoints) -> f64 {
        pts.iter().map(|(x, w)| w * self.ln_density(x)).sum()
    }

    pub fn mean(&self) -> f64 {
        self.components.iter().map(|c| c.weight * c.mean).sum()
    }

    pub fn variance(&self) -> f64 {
        let mu = self.mean();
        self.components
            .iter()
            .map(|c| c.weight * (c.variance + (c.mean - mu).powi(2)))
            .sum()
    }

    /// Same components in a different order; `order` must be a permutation.
    pub fn permuted(&self, order: &[usize]) -> Self {
        assert_eq!(order.len(), self.order());
        Self {
            components: order.iter().map(|&i| self.components[i]).collect(),
        }
    }
}

pub(crate) fn log_sum_exp(terms: &[f64]) -> f64 {
    let max = terms.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if max == f64::NEG_INFINITY {
        return max;
    }
    max + terms.iter().map(|t| (t - max).exp()).sum::<f64>().ln()
}

/// Independent parameter counts `(v, v')` of an `m`-component univariate mixture:
/// `v = 3m - 1` (weights constrained to the simplex) and `v' = 3m` (dropping the constant).
pub fn num_params(m: usize) -> (usize, usize) {
    assert!(m >= 1, "mixture order must be positive");
    (3 * m - 1, 3 * m)
}
