//! Input distributions: the thing a mixture is fitted to.
//!
//! A continuous input is treated as equivalent to an exchangeable sample of
//! `n_equiv` points; an empirical sample carries its own size.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use statrs::function::erf::erfc_inv;

use crate::error::{MixselError, Result};
use crate::quadrature::{QuadratureGrid, DEFAULT_QUAD_POINTS, TAIL_MASS};

/// Default number of mid-quantile points produced by [`InputDistribution::discretize`].
pub const DEFAULT_DISCRETIZE_COUNT: usize = 512;

#[derive(Debug, Clone, PartialEq)]
pub enum InputKind {
    Exponential {
        rate: f64,
    },
    Uniform {
        lo: f64,
        hi: f64,
    },
    Gaussian {
        mean: f64,
        variance: f64,
    },
    EmpiricalSample {
        points: Vec<f64>,
    },
    /// Elicited cumulative points, linearly interpolated.
    PiecewiseLinearCdf {
        x: Vec<f64>,
        cdf: Vec<f64>,
    },
}

impl InputKind {
    pub fn name(&self) -> &'static str {
        match self {
            InputKind::Exponential { .. } => "exponential",
            InputKind::Uniform { .. } => "uniform",
            InputKind::Gaussian { .. } => "gaussian",
            InputKind::EmpiricalSample { .. } => "sample",
            InputKind::PiecewiseLinearCdf { .. } => "piecewise_linear_cdf",
        }
    }
}

/// A validated input distribution together with its equivalent sample size.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "InputSpec", into = "InputSpec")]
pub struct InputDistribution {
    kind: InputKind,
    n_equiv: u64,
}

/// Wire form of an input distribution.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
enum InputSpec {
    Exponential {
        rate: f64,
        n_equiv: u64,
    },
    Uniform {
        lo: f64,
        hi: f64,
        n_equiv: u64,
    },
    Gaussian {
        mean: f64,
        variance: f64,
        n_equiv: u64,
    },
    Sample {
        points: Vec<f64>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        n_equiv: Option<u64>,
    },
    PiecewiseLinearCdf {
        x: Vec<f64>,
        cdf: Vec<f64>,
        n_equiv: u64,
    },
}

impl TryFrom<InputSpec> for InputDistribution {
    type Error = MixselError;

    fn try_from(spec: InputSpec) -> Result<Self> {
        match spec {
            InputSpec::Exponential { rate, n_equiv } => Self::exponential(rate, n_equiv),
            InputSpec::Uniform { lo, hi, n_equiv } => Self::uniform(lo, hi, n_equiv),
            InputSpec::Gaussian {
                mean,
                variance,
                n_equiv,
            } => Self::gaussian(mean, variance, n_equiv),
            InputSpec::Sample { points, n_equiv } => {
                if let Some(n) = n_equiv {
                    if n != points.len() as u64 {
                        return Err(MixselError::config(format!(
                            "n_equiv {n} does not match sample size {}",
                            points.len()
                        )));
                    }
                }
                Self::sample(points)
            }
            InputSpec::PiecewiseLinearCdf { x, cdf, n_equiv } => Self::piecewise_linear_cdf(x, cdf, n_equiv),
        }
    }
}

impl From<InputDistribution> for InputSpec {
    fn from(d: InputDistribution) -> Self {
        let n_equiv = d.n_equiv;
        match d.kind {
            InputKind::Exponential { rate } => InputSpec::Exponential { rate, n_equiv },
            InputKind::Uniform { lo, hi } => InputSpec::Uniform { lo, hi, n_equiv },
            InputKind::Gaussian { mean, variance } => InputSpec::Gaussian {
                mean,
                variance,
                n_equiv,
            },
            InputKind::EmpiricalSample { points } => InputSpec::Sample { points, n_equiv: None },
            InputKind::PiecewiseLinearCdf { x, cdf } => InputSpec::PiecewiseLinearCdf { x, cdf, n_equiv },
        }
    }
}

fn check_n(n_equiv: u64) -> Result<()> {
    if n_equiv == 0 {
        return Err(MixselError::config("n_equiv must be at least 1"));
    }
    Ok(())
}

impl InputDistribution {
    pub fn exponential(rate: f64, n_equiv: u64) -> Result<Self> {
        check_n(n_equiv)?;
        if !(rate.is_finite() && rate > 0.0) {
            return Err(MixselError::config(format!(
                "exponential rate must be positive, got {rate}"
            )));
        }
        Ok(Self {
            kind: InputKind::Exponential { rate },
            n_equiv,
        })
    }

    pub fn uniform(lo: f64, hi: f64, n_equiv: u64) -> Result<Self> {
        check_n(n_equiv)?;
        if !(lo.is_finite() && hi.is_finite() && lo < hi) {
            return Err(MixselError::config(format!(
                "uniform bounds must satisfy lo < hi, got [{lo}, {hi}]"
            )));
        }
        Ok(Self {
            kind: InputKind::Uniform { lo, hi },
            n_equiv,
        })
    }

    pub fn gaussian(mean: f64, variance: f64, n_equiv: u64) -> Result<Self> {
        check_n(n_equiv)?;
        if !mean.is_finite() || !(variance.is_finite() && variance > 0.0) {
            return Err(MixselError::config(format!(
                "gaussian needs finite mean and positive variance, got ({mean}, {variance})"
            )));
        }
        Ok(Self {
            kind: InputKind::Gaussian { mean, variance },
            n_equiv,
        })
    }

    /// An empirical sample; its equivalent size is the point count.
    pub fn sample(points: Vec<f64>) -> Result<Self> {
        if points.is_empty() {
            return Err(MixselError::config("empirical sample must be nonempty"));
        }
        if points.iter().any(|p| !p.is_finite()) {
            return Err(MixselError::config("empirical sample contains non-finite values"));
        }
        let n_equiv = points.len() as u64;
        Ok(Self {
            kind: InputKind::EmpiricalSample { points },
            n_equiv,
        })
    }

    pub fn piecewise_linear_cdf(x: Vec<f64>, cdf: Vec<f64>, n_equiv: u64) -> Result<Self> {
        check_n(n_equiv)?;
        if x.len() != cdf.len() || x.len() < 2 {
            return Err(MixselError::config(
                "piecewise cdf needs matching x and cdf arrays of length >= 2",
            ));
        }
        if x.iter().chain(cdf.iter()).any(|v| !v.is_finite()) {
            return Err(MixselError::config("piecewise cdf contains non-finite values"));
        }
        if x.windows(2).any(|w| w[1] <= w[0]) {
            return Err(MixselError::config("piecewise cdf x must be strictly increasing"));
        }
        if cdf.windows(2).any(|w| w[1] < w[0]) {
            return Err(MixselError::config("piecewise cdf must be nondecreasing"));
        }
        if cdf[0] != 0.0 || cdf[cdf.len() - 1] != 1.0 {
            return Err(MixselError::config("piecewise cdf must start at 0 and end at 1"));
        }
        Ok(Self {
            kind: InputKind::PiecewiseLinearCdf { x, cdf },
            n_equiv,
        })
    }

    pub fn kind(&self) -> &InputKind {
        &self.kind
    }

    pub fn n_equiv(&self) -> u64 {
        self.n_equiv
    }

    pub fn is_continuous(&self) -> bool {
        !matches!(self.kind, InputKind::EmpiricalSample { .. })
    }

    fn require_continuous(&self, op: &'static str) -> Result<()> {
        if self.is_continuous() {
            Ok(())
        } else {
            Err(MixselError::Unsupported {
                op,
                kind: self.kind.name(),
            })
        }
    }

    /// Density at `x`, zero outside the support.
    pub fn density(&self, x: f64) -> Result<f64> {
        self.require_continuous("density")?;
        Ok(match &self.kind {
            InputKind::Exponential { rate } => {
                if x < 0.0 {
                    0.0
                } else {
                    rate * (-rate * x).exp()
                }
            }
            InputKind::Uniform { lo, hi } => {
                if x < *lo || x > *hi {
                    0.0
                } else {
                    1.0 / (hi - lo)
                }
            }
            InputKind::Gaussian { mean, variance } => crate::mixture::normal_pdf(x, *mean, *variance),
            InputKind::PiecewiseLinearCdf { x: xs, cdf } => match segment_of(xs, x) {
                Some(i) => (cdf[i + 1] - cdf[i]) / (xs[i + 1] - xs[i]),
                None => 0.0,
            },
            InputKind::EmpiricalSample { .. } => unreachable!(),
        })
    }

    /// Inverse CDF for `q` in `[0, 1]`.
    pub fn quantile(&self, q: f64) -> Result<f64> {
        self.require_continuous("quantile")?;
        if !(0.0..=1.0).contains(&q) {
            return Err(MixselError::numeric(format!("quantile level {q} outside [0, 1]")));
        }
        let v = match &self.kind {
            InputKind::Exponential { rate } => -(-q).ln_1p() / rate,
            InputKind::Uniform { lo, hi } => lo + q * (hi - lo),
            InputKind::Gaussian { mean, variance } => {
                mean - std::f64::consts::SQRT_2 * variance.sqrt() * erfc_inv(2.0 * q)
            }
            InputKind::PiecewiseLinearCdf { x, cdf } => piecewise_quantile(x, cdf, q)?,
            InputKind::EmpiricalSample { .. } => unreachable!(),
        };
        if v.is_nan() {
            return Err(MixselError::numeric(format!("quantile inversion failed at {q}")));
        }
        Ok(v)
    }

    /// Distribution mean (sample mean for empirical inputs).
    pub fn mean(&self) -> f64 {
        match &self.kind {
            InputKind::Exponential { rate } => 1.0 / rate,
            InputKind::Uniform { lo, hi } => 0.5 * (lo + hi),
            InputKind::Gaussian { mean, .. } => *mean,
            InputKind::EmpiricalSample { points } => points.iter().sum::<f64>() / points.len() as f64,
            InputKind::PiecewiseLinearCdf { x, cdf } => x
                .windows(2)
                .zip(cdf.windows(2))
                .map(|(xw, cw)| (cw[1] - cw[0]) * 0.5 * (xw[0] + xw[1]))
                .sum(),
        }
    }

    /// Support-covering quadrature grid with `nodes` points (rounded up to
    /// an odd count per segment) spanning the central `1 - 2e-9` of mass.
    pub fn quadrature_grid(&self, nodes: usize) -> Result<QuadratureGrid> {
        self.require_continuous("quadrature")?;
        let a = self.quantile(TAIL_MASS)?;
        let b = self.quantile(1.0 - TAIL_MASS)?;
        match &self.kind {
            InputKind::PiecewiseLinearCdf { x, cdf } => {
                let mut segments = Vec::new();
                let mut slopes = Vec::new();
                for i in 0..x.len() - 1 {
                    if cdf[i + 1] <= cdf[i] {
                        continue;
                    }
                    let lo = x[i].max(a);
                    let hi = x[i + 1].min(b);
                    if hi > lo {
                        segments.push((lo, hi));
                        slopes.push((cdf[i + 1] - cdf[i]) / (x[i + 1] - x[i]));
                    }
                }
                QuadratureGrid::piecewise(&segments, nodes, |seg, _| slopes[seg])
            }
            _ => QuadratureGrid::simpson(a, b, nodes, |t| self.density(t).unwrap_or(0.0)),
        }
    }

    /// Differential entropy by quadrature on the default grid.
    pub fn entropy(&self) -> Result<f64> {
        self.entropy_with(DEFAULT_QUAD_POINTS)
    }

    pub fn entropy_with(&self, nodes: usize) -> Result<f64> {
        Ok(self.quadrature_grid(nodes)?.entropy())
    }

    /// Equal-weight points at the mid-quantiles `(i - 0.5) / count`; an
    /// empirical sample returns its own points with weight `1/n` each.
    pub fn discretize(&self, count: usize) -> Result<WeightedPoints> {
        if let InputKind::EmpiricalSample { points } = &self.kind {
            return Ok(WeightedPoints::uniform(points.clone()));
        }
        if count < 2 {
            return Err(MixselError::config("discretize needs count >= 2"));
        }
        let xs = (1..=count)
            .map(|i| self.quantile((i as f64 - 0.5) / count as f64))
            .collect::<Result<Vec<_>>>()?;
        if xs.iter().any(|x| !x.is_finite()) {
            return Err(MixselError::numeric("non-finite quantile during discretization"));
        }
        Ok(WeightedPoints::uniform(xs))
    }

    /// Points EM is run on: quadrature nodes weighted by the density for a
    /// continuous input, the sample itself for an empirical one.
    pub fn fitting_points(&self, quad_nodes: usize) -> Result<WeightedPoints> {
        match &self.kind {
            InputKind::EmpiricalSample { points } => Ok(WeightedPoints::uniform(points.clone())),
            _ => self.quadrature_grid(quad_nodes)?.to_weighted_points(),
        }
    }

    /// `n` i.i.d. draws by inverse-CDF sampling from a ChaCha8 stream seeded with `seed`.
    pub fn draw_sample(&self, n: usize, seed: u64) -> Result<Vec<f64>> {
        self.require_continuous("draw_sample")?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        (0..n)
            .map(|_| {
                // [0, 1) keeps the uniform draws inside [lo, hi)
                let u: f64 = rng.random();
                self.quantile(u)
            })
            .collect()
    }
}

fn segment_of(xs: &[f64], x: f64) -> Option<usize> {
    if x < xs[0] || x >= xs[xs.len() - 1] {
        return None;
    }
    // first index with xs[i] > x, minus one
    let idx = xs.partition_point(|&v| v <= x);
    Some(idx - 1)
}

fn piecewise_quantile(x: &[f64], cdf: &[f64], q: f64) -> Result<f64> {
    for i in 0..x.len() - 1 {
        if cdf[i + 1] >= q && cdf[i + 1] > cdf[i] {
            let t = ((q - cdf[i]) / (cdf[i + 1] - cdf[i])).clamp(0.0, 1.0);
            return Ok(x[i] + t * (x[i + 1] - x[i]));
        }
    }
    Err(MixselError::numeric(format!("cannot invert piecewise cdf at {q}")))
}

/// Discrete surrogate for an expectation over the input: points with
/// positive weights summing to one.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightedPoints {
    xs: Vec<f64>,
    ws: Vec<f64>,
}

impl WeightedPoints {
    /// Builds from raw positive weights, normalizing them to sum to one.
    pub fn new(xs: Vec<f64>, ws: Vec<f64>) -> Result<Self> {
        if xs.len() != ws.len() || xs.is_empty() {
            return Err(MixselError::config("weighted points need equal, nonzero lengths"));
        }
        if xs.iter().any(|x| !x.is_finite()) {
            return Err(MixselError::config("weighted points must be finite"));
        }
        if ws.iter().any(|w| !(w.is_finite() && *w > 0.0)) {
            return Err(MixselError::config("weights must be positive and finite"));
        }
        let total: f64 = ws.iter().sum();
        let ws = ws.into_iter().map(|w| w / total).collect();
        Ok(Self { xs, ws })
    }

    /// Equal weights `1/n`. Panics on an empty vector.
    pub fn uniform(xs: Vec<f64>) -> Self {
        assert!(!xs.is_empty(), "uniform weighted points need at least one point");
        let w = 1.0 / xs.len() as f64;
        let ws = vec![w; xs.len()];
        Self { xs, ws }
    }

    pub fn len(&self) -> usize {
        self.xs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.xs.is_empty()
    }

    pub fn xs(&self) -> &[f64] {
        &self.xs
    }

    pub fn ws(&self) -> &[f64] {
        &self.ws
    }

    pub fn iter(&self) -> impl Iterator<Item = (f64, f64)> + '_ {
        self.xs.iter().copied().zip(self.ws.iter().copied())
    }

    pub fn mean(&self) -> f64 {
        self.iter().map(|(x, w)| w * x).sum()
    }

    pub fn variance(&self) -> f64 {
        let mu = self.mean();
        self.iter().map(|(x, w)| w * (x - mu) * (x - mu)).sum()
    }

    pub fn distinct_count(&self) -> usize {
        let mut xs = self.xs.clone();
        xs.sort_by(f64::total_cmp);
        xs.dedup();
        xs.len()
    }

    /// Weighted lower quantile: smallest point whose cumulative weight reaches `q`.
    pub fn quantile(&self, q: f64) -> f64 {
        let mut order: Vec<usize> = (0..self.len()).collect();
        order.sort_by(|&a, &b| self.xs[a].total_cmp(&self.xs[b]));
        let mut acc = 0.0;
        for &i in &order {
            acc += self.ws[i];
            if acc >= q {
                return self.xs[i];
            }
        }
        self.xs[order[order.len() - 1]]
    }
}
