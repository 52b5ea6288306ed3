//! Penalized-likelihood objectives for choosing the mixture order.
//!
//! Every criterion is expressed per sample point: `objective(m) = accuracy(m) - penalty(m)`
//! where the accuracy is the expected log density of the fitted order-`m`
//! mixture and the penalty is the log cost (or negative log prior) divided by
//! `n`. Multiplying by `n` recovers the familiar log-likelihood forms up to a
//! constant that does not depend on `m`.
//!
//! The unassessed constant `a` of the cost forms `a·k^m` and `a·m^k` is taken
//! as 1; it shifts every objective equally and never changes the chosen order.

use serde::{Deserialize, Serialize};

use crate::error::{MixselError, Result};
use crate::mixture::{num_params, FitResult, MapPriorSpec};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum CriterionKind {
    /// Akaike: `c(n) = 1`.
    Aic,
    /// Schwarz: `c(n) = ½ ln n`.
    Bic,
    /// Geometric prior `P(M = m) = p1 (1 - p1)^(m-1)` over the order.
    MapGeometric { p1: f64 },
    /// Effectiveness ratio with cost `k^m`.
    EffratioExp { k: f64 },
    /// Effectiveness ratio with cost `m^k`.
    EffratioPoly { k: f64 },
    /// Pure accuracy; diagnostic only.
    NoPenalty,
}

impl CriterionKind {
    pub fn name(&self) -> &'static str {
        match self {
            CriterionKind::Aic => "aic",
            CriterionKind::Bic => "bic",
            CriterionKind::MapGeometric { .. } => "map_geometric",
            CriterionKind::EffratioExp { .. } => "effratio_exp",
            CriterionKind::EffratioPoly { .. } => "effratio_poly",
            CriterionKind::NoPenalty => "no_penalty",
        }
    }
}

/// How each order's parameters are estimated.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Estimation {
    #[default]
    Ml,
    Map(MapPriorSpec),
}

impl Estimation {
    pub fn prior(&self) -> MapPriorSpec {
        match self {
            Estimation::Ml => MapPriorSpec::uniform(),
            Estimation::Map(p) => *p,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CriterionSpec {
    #[serde(flatten)]
    pub kind: CriterionKind,
    pub n: u64,
    #[serde(default, skip_serializing_if = "is_ml")]
    pub estimation: Estimation,
}

fn is_ml(e: &Estimation) -> bool {
    matches!(e, Estimation::Ml)
}

impl CriterionSpec {
    pub fn new(kind: CriterionKind, n: u64) -> Result<Self> {
        let spec = Self {
            kind,
            n,
            estimation: Estimation::Ml,
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn aic(n: u64) -> Self {
        Self::new(CriterionKind::Aic, n).expect("valid n")
    }

    pub fn bic(n: u64) -> Self {
        Self::new(CriterionKind::Bic, n).expect("valid n")
    }

    pub fn with_estimation(mut self, estimation: Estimation) -> Self {
        self.estimation = estimation;
        self
    }

    /// Checks parameter ranges; returns advisory warnings that do not block use.
    pub fn validate(&self) -> Result<Vec<String>> {
        if self.n == 0 {
            return Err(MixselError::config("criterion n must be at least 1"));
        }
        match self.kind {
            CriterionKind::MapGeometric { p1 } if !(p1 > 0.0 && p1 <= 1.0) => {
                return Err(MixselError::config(format!("p1 must lie in (0, 1], got {p1}")));
            }
            CriterionKind::EffratioExp { k } if !(k.is_finite() && k > 1.0) => {
                return Err(MixselError::config(format!("effratio_exp needs k > 1, got {k}")));
            }
            CriterionKind::EffratioPoly { k } if !(k.is_finite() && k > 0.0) => {
                return Err(MixselError::config(format!("effratio_poly needs k > 0, got {k}")));
            }
            _ => {}
        }
        let mut warnings = Vec::new();
        if let Estimation::Map(prior) = &self.estimation {
            prior.validate()?;
            if matches!(self.kind, CriterionKind::Aic | CriterionKind::Bic) && !prior.is_uniform() {
                warnings.push(format!(
                    "{} assumes maximum-likelihood fits; MAP estimates were requested",
                    self.kind.name()
                ));
            }
        }
        Ok(warnings)
    }

    fn n_f64(&self) -> f64 {
        self.n as f64
    }
}

/// `c(n)` of the information criteria: 1 for AIC, `½ ln n` for BIC.
pub fn information_weight(kind: &CriterionKind, n: u64) -> Option<f64> {
    match kind {
        CriterionKind::Aic => Some(1.0),
        CriterionKind::Bic => Some(0.5 * (n as f64).ln()),
        _ => None,
    }
}

/// `ln[1/(1 - p1)]`, the per-order log-prior decrement; infinite at `p1 = 1`.
pub fn geometric_slope(p1: f64) -> f64 {
    -(-p1).ln_1p()
}

/// Size penalty per sample point, with `v(m) = 3m - 1` for the information criteria.
pub fn penalty(spec: &CriterionSpec, m: usize) -> f64 {
    let n = spec.n_f64();
    match spec.kind {
        CriterionKind::Aic | CriterionKind::Bic => {
            let c = information_weight(&spec.kind, spec.n).unwrap();
            c * num_params(m).0 as f64 / n
        }
        _ => shared_penalty(spec, m),
    }
}

/// Same as [`penalty`] but with `v'(m) = 3m` for AIC and BIC, i.e. `3m/n` and
/// `(3/2)(ln n / n) m`. Differs from [`penalty`] by a constant in `m`.
pub fn penalty_figure1(spec: &CriterionSpec, m: usize) -> f64 {
    let n = spec.n_f64();
    match spec.kind {
        CriterionKind::Aic | CriterionKind::Bic => {
            let c = information_weight(&spec.kind, spec.n).unwrap();
            c * num_params(m).1 as f64 / n
        }
        _ => shared_penalty(spec, m),
    }
}

fn shared_penalty(spec: &CriterionSpec, m: usize) -> f64 {
    let n = spec.n_f64();
    let m = m as f64;
    match spec.kind {
        CriterionKind::MapGeometric { p1 } => geometric_slope(p1) * m / n,
        CriterionKind::EffratioExp { k } => k.ln() * m / n,
        CriterionKind::EffratioPoly { k } => k * m.ln() / n,
        CriterionKind::NoPenalty => 0.0,
        CriterionKind::Aic | CriterionKind::Bic => unreachable!(),
    }
}

/// `accuracy - penalty(spec, m)`.
pub fn objective_from_accuracy(spec: &CriterionSpec, m: usize, accuracy: f64) -> f64 {
    accuracy - penalty(spec, m)
}

/// Objective of a fit scored by its own expected log density.
pub fn objective(spec: &CriterionSpec, m: usize, fit: &FitResult) -> f64 {
    objective_from_accuracy(spec, m, fit.expected_log_density)
}

/// Geometric-prior parameter equivalent to an information criterion with weight
/// `c(n)`: `p1 = 1 - exp(-c(n) v'(m) / m)`, which for Gaussian mixtures does not depend on `m`.
pub fn map_p1_equivalent(c_n: f64, m: usize) -> f64 {
    let v_prime = num_params(m).1 as f64;
    -(-c_n * v_prime / m as f64).exp_m1()
}

/// Geometric-prior parameter equivalent to the cost `k^m`: `p1 = 1 - 1/k`.
pub fn effratio_p1_equivalent(k: f64) -> Result<f64> {
    if !(k.is_finite() && k > 1.0) {
        return Err(MixselError::config(format!("k must exceed 1, got {k}")));
    }
    Ok(1.0 - 1.0 / k)
}

/// Index of the largest value, smallest index on ties. NaN never wins.
pub fn argmax_first(values: &[f64]) -> Option<usize> {
    let mut best: Option<usize> = None;
    for (i, &v) in values.iter().enumerate() {
        if v.is_nan() {
            continue;
        }
        match best {
            None => best = Some(i),
            Some(b) if v > values[b] => best = Some(i),
            _ => {}
        }
    }
    best
}

#[cfg(test)]
mod tests {
    use super::*;

    fn spec(kind: CriterionKind, n: u64) -> CriterionSpec {
        CriterionSpec::new(kind, n).unwrap()
    }

    #[test]
    fn penalty_forms() {
        let n = 100;
        assert!((penalty(&spec(CriterionKind::Aic, n), 2) - 5.0 / 100.0).abs() < 1e-15);
        assert!((penalty_figure1(&spec(CriterionKind::Aic, n), 2) - 6.0 / 100.0).abs() < 1e-15);
        let bic = spec(CriterionKind::Bic, n);
        let expect = 1.5 * (100f64).ln() / 100.0 * 3.0;
        assert!((penalty_figure1(&bic, 3) - expect).abs() < 1e-15);
        let poly = spec(CriterionKind::EffratioPoly { k: 5.0 }, n);
        assert_eq!(penalty(&poly, 1), 0.0);
        for m in 1..20 {
            let inc = penalty(&poly, m + 1) - penalty(&poly, m);
            let expect = 5.0 / 100.0 * ((m + 1) as f64 / m as f64).ln();
            assert!((inc - expect).abs() < 1e-15);
        }
        let map = spec(CriterionKind::MapGeometric { p1: 0.95 }, n);
        assert!((penalty(&map, 3) - 20f64.ln() * 3.0 / 100.0).abs() < 1e-14);
        let exp = spec(CriterionKind::EffratioExp { k: 2.0 }, n);
        assert!((penalty(&exp, 4) - 2f64.ln() * 4.0 / 100.0).abs() < 1e-15);
    }

    #[test]
    fn bic_increment_exceeds_aic_from_n_eight() {
        for n in 2..40u64 {
            let aic = spec(CriterionKind::Aic, n);
            let bic = spec(CriterionKind::Bic, n);
            let d_aic = penalty(&aic, 3) - penalty(&aic, 2);
            let d_bic = penalty(&bic, 3) - penalty(&bic, 2);
            assert_eq!(d_bic > d_aic, n >= 8, "n = {n}");
        }
    }

    #[test]
    fn p1_equivalents() {
        assert!((map_p1_equivalent(1.0, 1) - 0.9502).abs() < 1e-4);
        assert!((map_p1_equivalent(1.0, 1) - (1.0 - (-3f64).exp())).abs() < 1e-15);
        let bic_c = 0.5 * (100f64).ln();
        for m in 1..6 {
            assert!((map_p1_equivalent(bic_c, m) - 0.999).abs() < 1e-12);
        }
        assert!(map_p1_equivalent(1e-15, 2) < 1e-13);
        assert_eq!(effratio_p1_equivalent(2.0).unwrap(), 0.5);
        let k = 3f64.exp();
        assert!((effratio_p1_equivalent(k).unwrap() - map_p1_equivalent(1.0, 1)).abs() < 1e-15);
        assert!(effratio_p1_equivalent(1.0 + 1e-12).unwrap() < 1e-11);
        assert!(effratio_p1_equivalent(1.0).is_err());
        assert!(effratio_p1_equivalent(0.5).is_err());
    }

    #[test]
    fn validation() {
        assert!(CriterionSpec::new(CriterionKind::MapGeometric { p1: 0.0 }, 10).is_err());
        assert!(CriterionSpec::new(CriterionKind::MapGeometric { p1: 1.0 }, 10).is_ok());
        assert!(CriterionSpec::new(CriterionKind::EffratioExp { k: 1.0 }, 10).is_err());
        assert!(CriterionSpec::new(CriterionKind::EffratioPoly { k: 0.0 }, 10).is_err());
        assert!(CriterionSpec::new(CriterionKind::Aic, 0).is_err());
        let prior = MapPriorSpec {
            dirichlet_pseudocount: 1.0,
            ..MapPriorSpec::default()
        };
        let warned = CriterionSpec::bic(50).with_estimation(Estimation::Map(prior));
        assert_eq!(warned.validate().unwrap().len(), 1);
    }

    #[test]
    fn json_forms() {
        let s: CriterionSpec = serde_json::from_str(r#"{"kind":"bic","n":100}"#).unwrap();
        assert_eq!(s, CriterionSpec::bic(100));
        let s: CriterionSpec = serde_json::from_str(r#"{"kind":"map_geometric","p1":0.95,"n":100}"#).unwrap();
        assert_eq!(s.kind, CriterionKind::MapGeometric { p1: 0.95 });
        let s: CriterionSpec = serde_json::from_str(r#"{"kind":"effratio_poly","k":5,"n":100}"#).unwrap();
        assert_eq!(s.kind, CriterionKind::EffratioPoly { k: 5.0 });
        assert_eq!(
            serde_json::to_string(&s).unwrap(),
            r#"{"kind":"effratio_poly","k":5.0,"n":100}"#
        );
        let s: CriterionSpec =
            serde_json::from_str(r#"{"kind":"aic","n":10,"estimation":{"map":{"dirichlet_pseudocount":1.0}}}"#)
                .unwrap();
        assert!(matches!(s.estimation, Estimation::Map(_)));
    }

    #[test]
    fn argmax_prefers_smallest_index() {
        assert_eq!(argmax_first(&[1.0, 3.0, 3.0, 2.0]), Some(1));
        assert_eq!(argmax_first(&[f64::NEG_INFINITY, f64::NEG_INFINITY]), Some(0));
        assert_eq!(argmax_first(&[f64::NAN, 1.0]), Some(1));
        assert_eq!(argmax_first(&[]), None);
    }
}
