//! Weighted EM for maximum-likelihood and MAP mixture fitting.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{GaussianMixture, LN_SQRT_2PI};
use crate::distributions::WeightedPoints;
use crate::error::{MixselError, Result};

/// Weight given to the new component of a warm start.
const WARM_START_WEIGHT: f64 = 0.05;

/// Weight of the second warm start; small enough that its starting objective
/// stays within 1e-10 of the smaller model's.
const NESTED_START_WEIGHT: f64 = 1e-12;

/// Components whose responsibility mass underflows keep their parameters and this weight.
const MIN_WEIGHT: f64 = 1e-300;

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MeanPrior {
    pub location: f64,
    /// Pseudo-observations: the log prior gains `-strength·(μ - location)²/(2σ²)`.
    /// The `σ²`-dependent normalizer of that Gaussian is left to
    /// [`VariancePrior::shape`], so the fit is continuous as `strength → 0`.
    pub strength: f64,
}

/// Contributes `-shape·ln σ² - scale/σ²` to the log prior, i.e. an
/// inverse-gamma with shape `shape - 1`; zero for both is flat.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VariancePrior {
    pub shape: f64,
    pub scale: f64,
}

/// Conjugate priors on the component parameters. All-zero strengths are the
/// flat prior, under which MAP fitting is maximum likelihood.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MapPriorSpec {
    /// Symmetric Dirichlet pseudo-count added to each component's weight count.
    #[serde(default)]
    pub dirichlet_pseudocount: f64,
    #[serde(default)]
    pub mean_prior: MeanPrior,
    #[serde(default)]
    pub variance_prior: VariancePrior,
}

impl MapPriorSpec {
    pub fn uniform() -> Self {
        Self::default()
    }

    pub fn is_uniform(&self) -> bool {
        self.dirichlet_pseudocount == 0.0
            && self.mean_prior.strength == 0.0
            && self.variance_prior.shape == 0.0
            && self.variance_prior.scale == 0.0
    }

    pub fn validate(&self) -> Result<()> {
        let vals = [
            self.dirichlet_pseudocount,
            self.mean_prior.strength,
            self.variance_prior.shape,
            self.variance_prior.scale,
        ];
        if vals.iter().any(|v| !(v.is_finite() && *v >= 0.0)) || !self.mean_prior.location.is_finite() {
            return Err(MixselError::config("prior strengths must be finite and nonnegative"));
        }
        Ok(())
    }

    fn ln_density(&self, mix: &GaussianMixture) -> f64 {
        if self.is_uniform() {
            return 0.0;
        }
        let MeanPrior { location, strength } = self.mean_prior;
        let VariancePrior { shape, scale } = self.variance_prior;
        mix.components()
            .iter()
            .map(|c| {
                let mut lp = self.dirichlet_pseudocount * c.weight.ln();
                lp -= strength * (c.mean - location).powi(2) / (2.0 * c.variance);
                lp - shape * c.variance.ln() - scale / c.variance
            })
            .sum()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EmConfig {
    /// Stop when the objective changes by less than `tol · max(|objective|, 1)`.
    pub tol: f64,
    pub max_iter: usize,
    /// Random restarts on top of the quantile start and any warm start.
    pub restarts: usize,
    pub seed: u64,
    /// Either an `m`-component start used as-is, or an `(m-1)`-component fit
    /// that is augmented with one new component.
    pub warm_start: Option<GaussianMixture>,
    /// Equivalent sample size the prior is weighed against; irrelevant under a flat prior.
    pub sample_size: f64,
}

impl Default for EmConfig {
    fn default() -> Self {
        Self {
            tol: 1e-8,
            max_iter: 500,
            restarts: 2,
            seed: 0,
            warm_start: None,
            sample_size: 1.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitResult {
    pub mixture: GaussianMixture,
    /// `Σ w_j ln f(x_j)` over the fitting points.
    pub expected_log_density: f64,
    pub iterations: usize,
    pub converged: bool,
    pub restarts_used: usize,
    /// Penalized objective after each EM step of the winning run, starting at its initial value.
    #[serde(skip)]
    pub objective_history: Vec<f64>,
}

impl FitResult {
    /// Final value of the (penalized) EM objective.
    pub fn objective(&self) -> f64 {
        *self.objective_history.last().expect("history is never empty")
    }
}

/// `1e-6` times the overall variance of the points.
pub fn variance_floor(pts: &WeightedPoints) -> f64 {
    (1e-6 * pts.variance()).max(1e-300)
}

/// Appends a component at the point of lowest current density, with variance
/// `100 × floor`, weight `new_weight`, and the others rescaled by `1 - new_weight`.
pub fn augment(mix: &GaussianMixture, pts: &WeightedPoints, new_weight: f64) -> GaussianMixture {
    let floor = variance_floor(pts);
    let (x_min, _) = pts
        .xs()
        .iter()
        .map(|&x| (x, mix.ln_density(x)))
        .fold(
            (f64::NAN, f64::INFINITY),
            |acc, (x, l)| if l < acc.1 { (x, l) } else { acc },
        );
    let keep = 1.0 - new_weight;
    let mut weights: Vec<f64> = mix.components().iter().map(|c| c.weight * keep).collect();
    let mut means: Vec<f64> = mix.components().iter().map(|c| c.mean).collect();
    let mut vars: Vec<f64> = mix.components().iter().map(|c| c.variance).collect();
    weights.push(new_weight);
    means.push(x_min);
    vars.push(floor * 100.0);
    GaussianMixture::from_parts(&weights, &means, &vars)
}

struct Run {
    mixture: GaussianMixture,
    history: Vec<f64>,
    iterations: usize,
    converged: bool,
}

/// Fits an `m`-component mixture to weighted points by EM, keeping the best
/// of the quantile start, any warm starts and `config.restarts` random starts.
/// Ties go to the earliest start in that order.
pub fn em_fit(pts: &WeightedPoints, m: usize, prior: &MapPriorSpec, config: &EmConfig) -> Result<FitResult> {
    if m == 0 {
        return Err(MixselError::config("mixture order must be positive"));
    }
    prior.validate()?;
    if !(config.sample_size.is_finite() && config.sample_size > 0.0) {
        return Err(MixselError::config("sample size must be positive"));
    }
    let distinct = pts.distinct_count();
    if distinct < m {
        return Err(MixselError::InfeasibleOrder { m, distinct });
    }

    let floor = variance_floor(pts);
    let mut starts = vec![quantile_start(pts, m)];
    let mut restarts = config.restarts;
    if m == 1 {
        // one component: the first M-step is the exact optimum from any start
        restarts = 0;
    } else {
        if let Some(warm) = &config.warm_start {
            if warm.order() == m {
                starts.push(warm.clone());
            } else if warm.order() + 1 == m {
                starts.push(augment(warm, pts, WARM_START_WEIGHT));
                starts.push(augment(warm, pts, NESTED_START_WEIGHT));
            } else {
                return Err(MixselError::config(format!(
                    "warm start has {} components, expected {} or {}",
                    warm.order(),
                    m - 1,
                    m
                )));
            }
        }
        for r in 0..restarts {
            starts.push(random_start(pts, m, restart_seed(config.seed, r)));
        }
    }

    let runs: Vec<Result<Run>> = starts
        .into_par_iter()
        .map(|start| run_em(pts, start, prior, floor, config))
        .collect();

    let mut best: Option<Run> = None;
    let mut first_err = None;
    for run in runs {
        match run {
            Ok(run) => {
                let better = match &best {
                    None => true,
                    Some(b) => run.history.last() > b.history.last(),
                };
                if better {
                    best = Some(run);
                }
            }
            Err(e) => {
                first_err.get_or_insert(e);
            }
        }
    }
    let best = match best {
        Some(b) => b,
        None => return Err(first_err.unwrap_or_else(|| MixselError::numeric("no EM start succeeded"))),
    };
    let expected_log_density = best.mixture.expected_log_density(pts);
    if !expected_log_density.is_finite() {
        return Err(MixselError::numeric(
            "fitted mixture has non-finite expected log-density",
        ));
    }
    Ok(FitResult {
        mixture: best.mixture,
        expected_log_density,
        iterations: best.iterations,
        converged: best.converged,
        restarts_used: restarts,
        objective_history: best.history,
    })
}

fn restart_seed(seed: u64, restart: usize) -> u64 {
    seed.wrapping_add((restart as u64 + 1).wrapping_mul(0x9E37_79B9_7F4A_7C15))
}

/// Means at the `(i - 0.5)/m` quantiles, variances `var/m²`, uniform weights.
fn quantile_start(pts: &WeightedPoints, m: usize) -> GaussianMixture {
    let var = (pts.variance() / (m * m) as f64).max(variance_floor(pts));
    let means: Vec<f64> = (1..=m).map(|i| pts.quantile((i as f64 - 0.5) / m as f64)).collect();
    GaussianMixture::from_parts(&vec![1.0; m], &means, &vec![var; m])
}

/// Means drawn from the points by weight, jittered weights and variances.
fn random_start(pts: &WeightedPoints, m: usize, seed: u64) -> GaussianMixture {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let base_var = (pts.variance() / (m * m) as f64).max(variance_floor(pts));
    let mut cumulative = Vec::with_capacity(pts.len());
    let mut acc = 0.0;
    for &w in pts.ws() {
        acc += w;
        cumulative.push(acc);
    }
    let means: Vec<f64> = (0..m)
        .map(|_| {
            let u: f64 = rng.random::<f64>() * acc;
            let idx = cumulative.partition_point(|&c| c < u).min(pts.len() - 1);
            pts.xs()[idx]
        })
        .collect();
    let weights: Vec<f64> = (0..m).map(|_| 0.5 + rng.random::<f64>()).collect();
    let vars: Vec<f64> = (0..m).map(|_| base_var * (0.5 + rng.random::<f64>())).collect();
    GaussianMixture::from_parts(&weights, &means, &vars)
}

fn run_em(
    pts: &WeightedPoints,
    start: GaussianMixture,
    prior: &MapPriorSpec,
    floor: f64,
    config: &EmConfig,
) -> Result<Run> {
    let m = start.order();
    let n = config.sample_size;
    let MeanPrior { location, strength } = prior.mean_prior;
    let VariancePrior { shape, scale } = prior.variance_prior;
    let alpha = prior.dirichlet_pseudocount;

    let mut weights: Vec<f64> = start.components().iter().map(|c| c.weight).collect();
    let mut means: Vec<f64> = start.components().iter().map(|c| c.mean).collect();
    let mut vars: Vec<f64> = start.components().iter().map(|c| c.variance.max(floor)).collect();

    let mut resp = vec![0.0; pts.len() * m];
    let mut terms = vec![0.0; m];
    let mut offset = vec![0.0; m];
    let mut half_precision = vec![0.0; m];
    let mut mass = vec![0.0; m];
    let mut first = vec![0.0; m];
    let mut history: Vec<f64> = Vec::with_capacity(config.max_iter.min(1024) + 1);
    let mut iterations = 0;
    let mut converged = false;

    loop {
        // E-step; also yields the objective of the current parameters
        for k in 0..m {
            offset[k] = weights[k].ln() - LN_SQRT_2PI - 0.5 * vars[k].ln();
            half_precision[k] = 0.5 / vars[k];
        }
        mass.iter_mut().for_each(|v| *v = 0.0);
        first.iter_mut().for_each(|v| *v = 0.0);
        let mut loglik = 0.0;
        for (j, (x, w)) in pts.iter().enumerate() {
            let mut max = f64::NEG_INFINITY;
            for k in 0..m {
                let d = x - means[k];
                terms[k] = offset[k] - d * d * half_precision[k];
                max = max.max(terms[k]);
            }
            let mut sum = 0.0;
            for t in terms.iter_mut() {
                *t = (*t - max).exp();
                sum += *t;
            }
            loglik += w * (max + sum.ln());
            let scale = w / sum;
            let row = &mut resp[j * m..(j + 1) * m];
            for k in 0..m {
                let r = terms[k] * scale;
                row[k] = r;
                mass[k] += r;
                first[k] += r * x;
            }
        }
        let current = GaussianMixture::from_parts(&weights, &means, &vars);
        let objective = loglik + prior.ln_density(&current) / n;
        if !objective.is_finite() {
            return Err(MixselError::numeric(format!(
                "EM objective became non-finite at iteration {iterations}"
            )));
        }
        if let Some(&prev) = history.last() {
            history.push(objective);
            // one component: the first M-step is the exact optimum
            if m == 1 || (objective - prev).abs() <= config.tol * objective.abs().max(1.0) {
                converged = true;
                break;
            }
        } else {
            history.push(objective);
        }
        if iterations >= config.max_iter {
            break;
        }

        // M-step
        let total: f64 = mass.iter().map(|nk| n * nk + alpha).sum();
        for k in 0..m {
            if mass[k] <= 0.0 || !mass[k].is_finite() {
                weights[k] = MIN_WEIGHT;
                continue;
            }
            let count = n * mass[k];
            weights[k] = ((count + alpha) / total).max(MIN_WEIGHT);
            let mu = (n * first[k] + strength * location) / (count + strength);
            let mut ss = 0.0;
            for (j, x) in pts.xs().iter().enumerate() {
                let d = x - mu;
                ss += resp[j * m + k] * d * d;
            }
            let num = n * ss + strength * (mu - location).powi(2) + 2.0 * scale;
            let den = count + 2.0 * shape;
            means[k] = mu;
            vars[k] = (num / den).max(floor);
        }
        let wsum: f64 = weights.iter().sum();
        weights.iter_mut().for_each(|w| *w /= wsum);
        iterations += 1;
    }

    Ok(Run {
        mixture: GaussianMixture::from_parts(&weights, &means, &vars),
        history,
        iterations,
        converged,
    })
}
