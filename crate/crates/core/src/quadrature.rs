//! Composite Simpson quadrature over the effective support of an input.
//!
//! Entropy and relative entropy share one grid so that
//! `D(X, Y) = -E[ln f_Y(X)] - H(X)` holds to round-off.

use crate::distributions::WeightedPoints;
use crate::error::{MixselError, Result};

/// Default node count of the shared grid (overridable via `MIXSEL_QUAD_POINTS` in the CLI).
pub const DEFAULT_QUAD_POINTS: usize = 4096;

/// Probability mass cut from each tail before integrating.
pub const TAIL_MASS: f64 = 1e-9;

/// Densities below this contribute nothing (the `x ln x -> 0` limit).
pub const DENSITY_GUARD: f64 = 1e-300;

#[derive(Debug, Clone)]
pub struct QuadratureGrid {
    xs: Vec<f64>,
    weights: Vec<f64>,
    density: Vec<f64>,
}

fn even_intervals(nodes: usize) -> usize {
    let n = nodes.saturating_sub(1).max(2);
    n + n % 2
}

impl QuadratureGrid {
    /// Simpson grid on `[a, b]` with about `nodes` points.
    pub fn simpson(a: f64, b: f64, nodes: usize, density: impl Fn(f64) -> f64) -> Result<Self> {
        Self::piecewise(&[(a, b)], nodes, |_, x| density(x))
    }

    /// Concatenated Simpson grids, nodes split across segments by length.
    /// `density(i, x)` is evaluated with the index of the segment `x` belongs to,
    /// so densities that jump at segment ends stay one-sided.
    pub fn piecewise(segments: &[(f64, f64)], nodes: usize, density: impl Fn(usize, f64) -> f64) -> Result<Self> {
        if segments.is_empty() {
            return Err(MixselError::numeric("empty integration range"));
        }
        let total_len: f64 = segments.iter().map(|(a, b)| b - a).sum();
        if !(total_len.is_finite() && total_len > 0.0) {
            return Err(MixselError::numeric("degenerate integration range"));
        }
        let mut grid = QuadratureGrid {
            xs: Vec::with_capacity(nodes + 2 * segments.len()),
            weights: Vec::with_capacity(nodes + 2 * segments.len()),
            density: Vec::with_capacity(nodes + 2 * segments.len()),
        };
        for (seg, &(a, b)) in segments.iter().enumerate() {
            let share = ((b - a) / total_len * nodes as f64).round() as usize;
            let intervals = even_intervals(share);
            let h = (b - a) / intervals as f64;
            for i in 0..=intervals {
                let x = if i == intervals { b } else { a + i as f64 * h };
                let coef = if i == 0 || i == intervals {
                    1.0
                } else if i % 2 == 1 {
                    4.0
                } else {
                    2.0
                };
                grid.xs.push(x);
                grid.weights.push(coef * h / 3.0);
                grid.density.push(density(seg, x));
            }
        }
        Ok(grid)
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

    pub fn density(&self) -> &[f64] {
        &self.density
    }

    /// `∫ f_X(x) h(x, f_X(x)) dx`, skipping nodes where the density is below the guard.
    pub fn expect(&self, mut h: impl FnMut(f64, f64) -> f64) -> f64 {
        self.xs
            .iter()
            .zip(&self.weights)
            .zip(&self.density)
            .filter(|(_, &fx)| fx >= DENSITY_GUARD)
            .map(|((&x, &w), &fx)| w * fx * h(x, fx))
            .sum()
    }

    /// Integrated density over the grid; 1 up to truncation and rule error.
    pub fn mass(&self) -> f64 {
        self.expect(|_, _| 1.0)
    }

    /// `H(X) = -E[ln f_X(X)]`.
    pub fn entropy(&self) -> f64 {
        -self.expect(|_, fx| fx.ln())
    }

    /// Nodes weighted by `w_i f_X(x_i)`, renormalized to a probability vector.
    pub fn to_weighted_points(&self) -> Result<WeightedPoints> {
        let (xs, ws): (Vec<f64>, Vec<f64>) = self
            .xs
            .iter()
            .zip(&self.weights)
            .zip(&self.density)
            .filter(|(_, &fx)| fx >= DENSITY_GUARD)
            .map(|((&x, &w), &fx)| (x, w * fx))
            .unzip();
        WeightedPoints::new(xs, ws)
    }
}
