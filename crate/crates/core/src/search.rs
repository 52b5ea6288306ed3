//! Incremental search over nested mixture orders.
//!
//! Orders are fitted one at a time, each warm-started from the previous best
//! fit, and the search stops at the first order `m` whose successor does not
//! improve the objective (ties stop), after checking `lookahead` further orders.

use serde::{Deserialize, Serialize};

use crate::distributions::{InputDistribution, WeightedPoints};
use crate::entropy::{report_on, AccuracyReport};
use crate::error::{MixselError, Result};
use crate::mixture::{em_fit, EmConfig, FitResult, MapPriorSpec};
use crate::quadrature::{QuadratureGrid, DEFAULT_QUAD_POINTS};
use crate::selection::{argmax_first, objective_from_accuracy, penalty, CriterionSpec, Estimation};

#[derive(Debug, Clone, PartialEq)]
pub struct SearchConfig {
    /// Largest order ever fitted.
    pub m_max: usize,
    /// Extra orders checked past a local stop.
    pub lookahead: usize,
    /// EM settings; `warm_start` and `sample_size` are managed by the search.
    pub em: EmConfig,
    /// Quadrature nodes for continuous inputs.
    pub quad_points: usize,
}

impl Default for SearchConfig {
    fn default() -> Self {
        Self {
            m_max: 12,
            lookahead: 2,
            em: EmConfig::default(),
            quad_points: DEFAULT_QUAD_POINTS,
        }
    }
}

impl SearchConfig {
    pub fn validate(&self) -> Result<()> {
        if self.m_max == 0 {
            return Err(MixselError::config("m_max must be at least 1"));
        }
        if self.lookahead > self.m_max {
            return Err(MixselError::config("lookahead cannot exceed m_max"));
        }
        if self.quad_points < 3 {
            return Err(MixselError::config("quadrature needs at least 3 points"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StopReason {
    Heuristic,
    MMax,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SelectionRow {
    pub m: usize,
    pub accuracy: f64,
    pub penalty: f64,
    pub objective: f64,
    /// `D(X, Ŷ_m)`, present for continuous inputs.
    pub relative_entropy: Option<f64>,
    pub fit: FitResult,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SelectionTrace {
    pub criterion: CriterionSpec,
    pub rows: Vec<SelectionRow>,
    pub chosen_m: usize,
    pub stopped_by: StopReason,
}

impl SelectionTrace {
    pub fn chosen(&self) -> &SelectionRow {
        &self.rows[self.chosen_m - 1]
    }
}

#[derive(Debug, Clone)]
pub struct FittedOrder {
    pub fit: FitResult,
    pub report: AccuracyReport,
}

/// Fits successive orders of one input lazily, each warm-started from the last.
/// Shared by every criterion that uses the same estimation method.
pub struct OrderFitter {
    pts: WeightedPoints,
    grid: Option<QuadratureGrid>,
    prior: MapPriorSpec,
    em: EmConfig,
    max_order: usize,
    fits: Vec<FittedOrder>,
}

impl OrderFitter {
    pub fn new(d: &InputDistribution, estimation: &Estimation, cfg: &SearchConfig) -> Result<Self> {
        cfg.validate()?;
        let pts = d.fitting_points(cfg.quad_points)?;
        let grid = if d.is_continuous() {
            Some(d.quadrature_grid(cfg.quad_points)?)
        } else {
            None
        };
        let max_order = cfg.m_max.min(pts.distinct_count());
        let em = EmConfig {
            warm_start: None,
            sample_size: d.n_equiv() as f64,
            ..cfg.em.clone()
        };
        Ok(Self {
            pts,
            grid,
            prior: estimation.prior(),
            em,
            max_order,
            fits: Vec::new(),
        })
    }

    /// Highest order this fitter will produce (`m_max` capped by the distinct support points).
    pub fn max_order(&self) -> usize {
        self.max_order
    }

    pub fn fitted(&self) -> &[FittedOrder] {
        &self.fits
    }

    /// Fits every order up to `m` that is not yet fitted.
    pub fn fit_through(&mut self, m: usize) -> Result<&[FittedOrder]> {
        while self.fits.len() < m {
            let order = self.fits.len() + 1;
            let config = EmConfig {
                warm_start: self.fits.last().map(|f| f.fit.mixture.clone()),
                seed: self
                    .em
                    .seed
                    .wrapping_add((order as u64).wrapping_mul(0xD1B5_4A32_D192_ED03)),
                ..self.em.clone()
            };
            let fit = em_fit(&self.pts, order, &self.prior, &config)?;
            let report = match &self.grid {
                Some(grid) => report_on(grid, &fit.mixture),
                None => AccuracyReport {
                    expected_log_density: fit.expected_log_density,
                    input_entropy: None,
                    relative_entropy: None,
                },
            };
            self.fits.push(FittedOrder { fit, report });
        }
        Ok(&self.fits[..m])
    }

    fn accuracy(&self, m: usize) -> f64 {
        self.fits[m - 1].report.expected_log_density
    }
}

/// Stop test on objectives: stop when the next order is no better.
pub fn stops_by_objective(objective_m: f64, objective_next: f64) -> bool {
    objective_next <= objective_m
}

/// Equivalent stop test for continuous inputs: stop when the drop in
/// relative entropy is no larger than the increase in penalty.
pub fn stops_by_divergence(d_m: f64, d_next: f64, penalty_m: f64, penalty_next: f64) -> bool {
    d_m - d_next <= penalty_next - penalty_m
}

/// Runs the incremental search for one criterion.
pub fn select_model(d: &InputDistribution, spec: &CriterionSpec, cfg: &SearchConfig) -> Result<SelectionTrace> {
    spec.validate()?;
    let mut fitter = OrderFitter::new(d, &spec.estimation, cfg)?;
    search_with(&mut fitter, spec, cfg.lookahead)
}

/// Runs the search for several criteria, sharing fits between criteria with
/// the same estimation method. Traces come back in input order.
pub fn select_many(d: &InputDistribution, specs: &[CriterionSpec], cfg: &SearchConfig) -> Result<Vec<SelectionTrace>> {
    let mut fitters: Vec<(Estimation, OrderFitter)> = Vec::new();
    let mut traces = Vec::with_capacity(specs.len());
    for spec in specs {
        spec.validate()?;
        let idx = match fitters.iter().position(|(e, _)| *e == spec.estimation) {
            Some(i) => i,
            None => {
                fitters.push((spec.estimation, OrderFitter::new(d, &spec.estimation, cfg)?));
                fitters.len() - 1
            }
        };
        traces.push(search_with(&mut fitters[idx].1, spec, cfg.lookahead)?);
    }
    Ok(traces)
}

/// The search proper, over an existing fitter.
pub fn search_with(fitter: &mut OrderFitter, spec: &CriterionSpec, lookahead: usize) -> Result<SelectionTrace> {
    let m_max = fitter.max_order();
    let objective = |f: &OrderFitter, m: usize| objective_from_accuracy(spec, m, f.accuracy(m));

    fitter.fit_through(1)?;
    let mut m = 1;
    let mut fitted = 1;
    let stopped_by = loop {
        if m >= m_max {
            break StopReason::MMax;
        }
        fitter.fit_through(m + 1)?;
        fitted = fitted.max(m + 1);
        let base = objective(fitter, m);
        if !stops_by_objective(base, objective(fitter, m + 1)) {
            m += 1;
            continue;
        }
        let mut resumed = None;
        for j in (m + 2)..=(m + 1 + lookahead).min(m_max) {
            fitter.fit_through(j)?;
            fitted = fitted.max(j);
            if objective(fitter, j) > base {
                resumed = Some(j);
                break;
            }
        }
        match resumed {
            Some(j) => m = j,
            None => break StopReason::Heuristic,
        }
    };

    let rows: Vec<SelectionRow> = fitter.fitted()[..fitted]
        .iter()
        .enumerate()
        .map(|(i, f)| {
            let m = i + 1;
            let pen = penalty(spec, m);
            SelectionRow {
                m,
                accuracy: f.report.expected_log_density,
                penalty: pen,
                objective: f.report.expected_log_density - pen,
                relative_entropy: f.report.relative_entropy,
                fit: f.fit.clone(),
            }
        })
        .collect();
    let objectives: Vec<f64> = rows.iter().map(|r| r.objective).collect();
    let chosen_m = argmax_first(&objectives).map(|i| i + 1).unwrap_or(1);
    Ok(SelectionTrace {
        criterion: *spec,
        rows,
        chosen_m,
        stopped_by,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CurvePoint {
    pub m: usize,
    pub expected_log_density: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub relative_entropy: Option<f64>,
}

/// Maximum-likelihood accuracy of every order `1..=m_max` (capped by the
/// number of distinct support points).
pub fn accuracy_curve(d: &InputDistribution, m_max: usize, cfg: &SearchConfig) -> Result<Vec<CurvePoint>> {
    let cfg = SearchConfig {
        m_max,
        lookahead: cfg.lookahead.min(m_max),
        ..cfg.clone()
    };
    let mut fitter = OrderFitter::new(d, &Estimation::Ml, &cfg)?;
    let top = fitter.max_order();
    Ok(fitter
        .fit_through(top)?
        .iter()
        .enumerate()
        .map(|(i, f)| CurvePoint {
            m: i + 1,
            expected_log_density: f.report.expected_log_density,
            relative_entropy: f.report.relative_entropy,
        })
        .collect())
}
