//! Relative entropy and the accuracy measures derived from it.
//!
//! For a continuous input the accuracy of a fitted mixture is the expected log
//! density `E[ln f_Y(X)] = -D(X, Y) - H(X)`; for an empirical sample it is the
//! average log-likelihood of the points.

use serde::{Deserialize, Serialize};

use crate::distributions::{InputDistribution, InputKind, WeightedPoints};
use crate::error::{MixselError, Result};
use crate::mixture::GaussianMixture;
use crate::quadrature::{QuadratureGrid, DEFAULT_QUAD_POINTS};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AccuracyReport {
    pub expected_log_density: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub input_entropy: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub relative_entropy: Option<f64>,
}

/// `D(X, Y) = ∫ f_X ln(f_X / f_Y)` on the default grid.
pub fn relative_entropy(d: &InputDistribution, g: &GaussianMixture) -> Result<f64> {
    relative_entropy_with(d, g, DEFAULT_QUAD_POINTS)
}

pub fn relative_entropy_with(d: &InputDistribution, g: &GaussianMixture, nodes: usize) -> Result<f64> {
    if !d.is_continuous() {
        return Err(MixselError::Unsupported {
            op: "relative_entropy",
            kind: d.kind().name(),
        });
    }
    let grid = d.quadrature_grid(nodes)?;
    Ok(relative_entropy_on(&grid, g))
}

pub(crate) fn relative_entropy_on(grid: &QuadratureGrid, g: &GaussianMixture) -> f64 {
    grid.expect(|x, fx| fx.ln() - g.ln_density(x))
}

pub(crate) fn expected_log_density_on(grid: &QuadratureGrid, g: &GaussianMixture) -> f64 {
    grid.expect(|x, _| g.ln_density(x))
}

/// Accuracy of `g` against `d` on the default grid.
pub fn accuracy_report(d: &InputDistribution, g: &GaussianMixture) -> Result<AccuracyReport> {
    accuracy_report_with(d, g, DEFAULT_QUAD_POINTS)
}

/// Continuous inputs get all three fields from one shared grid; empirical
/// inputs only get the average log-likelihood of their points.
pub fn accuracy_report_with(d: &InputDistribution, g: &GaussianMixture, nodes: usize) -> Result<AccuracyReport> {
    if let InputKind::EmpiricalSample { points } = d.kind() {
        let pts = WeightedPoints::uniform(points.clone());
        return Ok(AccuracyReport {
            expected_log_density: g.expected_log_density(&pts),
            input_entropy: None,
            relative_entropy: None,
        });
    }
    let grid = d.quadrature_grid(nodes)?;
    Ok(report_on(&grid, g))
}

pub(crate) fn report_on(grid: &QuadratureGrid, g: &GaussianMixture) -> AccuracyReport {
    AccuracyReport {
        expected_log_density: expected_log_density_on(grid, g),
        input_entropy: Some(grid.entropy()),
        relative_entropy: Some(relative_entropy_on(grid, g)),
    }
}

/// Log-likelihood of an exchangeable sample of size `n` from its expected log density: `n·E`.
pub fn loglik_from_expectation(n: u64, expected_log_density: f64) -> f64 {
    n as f64 * expected_log_density
}
