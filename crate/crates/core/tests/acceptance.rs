//! End-to-end acceptance checks. Runs without the libtest harness so every
//! criterion prints exactly one PASS/FAIL line; exits nonzero on any failure.

use std::f64::consts::PI;
use std::process::ExitCode;
use std::time::{Duration, Instant};

use mixsel::entropy::{accuracy_report, loglik_from_expectation, relative_entropy};
use mixsel::mixture::{em_fit, Component, EmConfig, GaussianMixture, MapPriorSpec};
use mixsel::search::{accuracy_curve, select_many, stops_by_divergence, stops_by_objective, SearchConfig};
use mixsel::selection::{
    effratio_p1_equivalent, map_p1_equivalent, objective_from_accuracy, penalty, penalty_figure1, CriterionKind,
    CriterionSpec,
};
use mixsel::{InputDistribution, WeightedPoints};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const N: u64 = 100;
const TIME_LIMIT: Duration = Duration::from_secs(30);

type Check = Result<String, String>;
type Criterion = (&'static str, fn() -> Check);
/// Input, mixture components `(weight, mean, variance)`, optional closed form.
type KlCase = (&'static str, Analytic, Vec<(f64, f64, f64)>, Option<f64>);

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn four_criteria(n: u64) -> Vec<CriterionSpec> {
    [
        CriterionKind::Aic,
        CriterionKind::Bic,
        CriterionKind::MapGeometric { p1: 0.95 },
        CriterionKind::EffratioPoly { k: 5.0 },
    ]
    .into_iter()
    .map(|kind| CriterionSpec::new(kind, n).unwrap())
    .collect()
}

/// Runs the four criteria on `d` and checks each choice lies in `lo..=hi`.
fn chosen_orders_within(d: &InputDistribution, lo: usize, hi: usize) -> Result<(Vec<usize>, String), String> {
    let start = Instant::now();
    let traces = select_many(d, &four_criteria(N), &SearchConfig::default()).map_err(|e| e.to_string())?;
    let elapsed = start.elapsed();
    let chosen: Vec<usize> = traces.iter().map(|t| t.chosen_m).collect();
    let summary = traces
        .iter()
        .map(|t| format!("{}={}", t.criterion.kind.name(), t.chosen_m))
        .collect::<Vec<_>>()
        .join(" ");
    ensure(chosen.iter().all(|m| (lo..=hi).contains(m)), || {
        format!("{summary} outside [{lo}, {hi}]")
    })?;
    ensure(elapsed < TIME_LIMIT, || format!("{summary} but took {elapsed:.1?}"))?;
    Ok((chosen, format!("{summary} in {elapsed:.1?}")))
}

fn exponential_example() -> Check {
    let d = InputDistribution::exponential(1.0, N).unwrap();
    chosen_orders_within(&d, 2, 6).map(|(_, s)| s)
}

fn uniform_example() -> Check {
    let d = InputDistribution::uniform(0.0, 1.0, N).unwrap();
    chosen_orders_within(&d, 1, 6).map(|(_, s)| s)
}

fn equivalence_identities() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    // any fixed accuracy curve will do; make it increasing and concave-ish
    let mut acc = vec![-1.5];
    for m in 1..10 {
        let prev = acc[m - 1];
        acc.push(prev + rng.random_range(0.0..0.3) / m as f64);
    }
    let spread = |diffs: &[f64]| {
        let lo = diffs.iter().cloned().fold(f64::INFINITY, f64::min);
        let hi = diffs.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        hi - lo
    };

    let mut notes = Vec::new();
    for (kind, c_n, expected_p1) in [
        (CriterionKind::Aic, 1.0, 0.9502),
        (CriterionKind::Bic, 0.5 * (N as f64).ln(), 0.9990),
    ] {
        let p1 = map_p1_equivalent(c_n, 1);
        ensure(((p1 * 1e4).round() - expected_p1 * 1e4).abs() < 0.5, || {
            format!("p1 for c(n)={c_n} is {p1}, expected {expected_p1} to 4 decimals")
        })?;
        ensure((p1 - (1.0 - (-3.0 * c_n).exp())).abs() < 1e-15, || {
            format!("p1 formula mismatch: {p1}")
        })?;
        let map = CriterionSpec::new(CriterionKind::MapGeometric { p1 }, N).unwrap();
        let ic = CriterionSpec::new(kind, N).unwrap();
        let diffs: Vec<f64> = (1..=10)
            .map(|m| {
                let a = acc[m - 1];
                (a - penalty(&map, m)) - (a - penalty_figure1(&ic, m))
            })
            .collect();
        let s = spread(&diffs);
        ensure(s <= 1e-12, || format!("{} vs MAP spread {s:e}", kind.name()))?;
        notes.push(format!("{} p1={p1:.4} spread={s:.1e}", kind.name()));
    }

    for k in [2.0, 5.0, 20.0] {
        let p1 = effratio_p1_equivalent(k).unwrap();
        let eff = CriterionSpec::new(CriterionKind::EffratioExp { k }, N).unwrap();
        let map = CriterionSpec::new(CriterionKind::MapGeometric { p1 }, N).unwrap();
        let diffs: Vec<f64> = (1..=10)
            .map(|m| objective_from_accuracy(&eff, m, acc[m - 1]) - objective_from_accuracy(&map, m, acc[m - 1]))
            .collect();
        let s = spread(&diffs);
        ensure(s <= 1e-12, || format!("effratio_exp k={k} vs MAP spread {s:e}"))?;
    }
    notes.push("effratio_exp/MAP constant for k in {2,5,20}".into());
    Ok(notes.join("; "))
}

/// Independent density of an input: closed forms written out here.
enum Analytic {
    Exponential(f64),
    Uniform(f64, f64),
    Gaussian(f64, f64),
}

impl Analytic {
    fn pdf(&self, x: f64) -> f64 {
        match *self {
            Analytic::Exponential(rate) => {
                if x < 0.0 {
                    0.0
                } else {
                    rate * (-rate * x).exp()
                }
            }
            Analytic::Uniform(lo, hi) => {
                if (lo..=hi).contains(&x) {
                    1.0 / (hi - lo)
                } else {
                    0.0
                }
            }
            Analytic::Gaussian(mean, var) => gauss(x, mean, var),
        }
    }

    /// Support truncated at quantiles 1e-12 and 1 - 1e-12.
    fn range(&self) -> (f64, f64) {
        const Z: f64 = 7.034_483_825_9; // standard normal upper 1e-12 quantile
        match *self {
            Analytic::Exponential(rate) => (-(1.0f64 - 1e-12).ln() / rate, 1e-12f64.ln() / -rate),
            Analytic::Uniform(lo, hi) => (lo + 1e-12 * (hi - lo), hi - 1e-12 * (hi - lo)),
            Analytic::Gaussian(mean, var) => (mean - Z * var.sqrt(), mean + Z * var.sqrt()),
        }
    }

    fn input(&self) -> InputDistribution {
        match *self {
            Analytic::Exponential(rate) => InputDistribution::exponential(rate, N).unwrap(),
            Analytic::Uniform(lo, hi) => InputDistribution::uniform(lo, hi, N).unwrap(),
            Analytic::Gaussian(mean, var) => InputDistribution::gaussian(mean, var, N).unwrap(),
        }
    }
}

fn gauss(x: f64, mean: f64, var: f64) -> f64 {
    (-(x - mean).powi(2) / (2.0 * var)).exp() / (2.0 * PI * var).sqrt()
}

fn mix_pdf(parts: &[(f64, f64, f64)], x: f64) -> f64 {
    parts.iter().map(|&(w, m, v)| w * gauss(x, m, v)).sum()
}

fn mixture(parts: &[(f64, f64, f64)]) -> GaussianMixture {
    GaussianMixture::new(
        parts
            .iter()
            .map(|&(weight, mean, variance)| Component { weight, mean, variance })
            .collect(),
    )
    .unwrap()
}

/// Brute-force trapezoid rule for `∫ f ln(f/g)` on 2^20 intervals.
fn trapezoid_kl(x: &Analytic, parts: &[(f64, f64, f64)]) -> f64 {
    let (a, b) = x.range();
    let intervals = 1usize << 20;
    let h = (b - a) / intervals as f64;
    let term = |t: f64| {
        let f = x.pdf(t);
        if f <= 0.0 {
            0.0
        } else {
            f * (f.ln() - mix_pdf(parts, t).ln())
        }
    };
    let mut sum = 0.5 * (term(a) + term(b));
    for i in 1..intervals {
        sum += term(a + i as f64 * h);
    }
    sum * h
}

fn relative_entropy_oracle() -> Check {
    let half_ln_2pi_minus_half = 0.5 * (2.0 * PI).ln() - 0.5;
    let gauss_kl = |m1: f64, v1: f64, m2: f64, v2: f64| 0.5 * ((v2 / v1).ln() + (v1 + (m1 - m2).powi(2)) / v2 - 1.0);
    let cases: Vec<KlCase> = vec![
        (
            "exp(1)|N(1,1)",
            Analytic::Exponential(1.0),
            vec![(1.0, 1.0, 1.0)],
            Some(half_ln_2pi_minus_half),
        ),
        (
            "N(0,1)|N(1,4)",
            Analytic::Gaussian(0.0, 1.0),
            vec![(1.0, 1.0, 4.0)],
            Some(gauss_kl(0.0, 1.0, 1.0, 4.0)),
        ),
        (
            "U(0,1)|N(.5,1/12)",
            Analytic::Uniform(0.0, 1.0),
            vec![(1.0, 0.5, 1.0 / 12.0)],
            Some(0.5 * (PI / 6.0).ln() + 0.5),
        ),
        (
            "exp(2)|mix2",
            Analytic::Exponential(2.0),
            vec![(0.7, 0.25, 0.06), (0.3, 1.0, 0.5)],
            None,
        ),
        (
            "N(0,1)|mix3",
            Analytic::Gaussian(0.0, 1.0),
            vec![(0.2, -1.0, 0.5), (0.5, 0.0, 1.0), (0.3, 1.5, 2.0)],
            None,
        ),
    ];

    let mut worst: f64 = 0.0;
    for (name, x, parts, closed) in &cases {
        let module = relative_entropy(&x.input(), &mixture(parts)).map_err(|e| e.to_string())?;
        let brute = trapezoid_kl(x, parts);
        let err = (module - brute).abs();
        worst = worst.max(err);
        ensure(err <= 1e-6, || format!("{name}: module {module} vs trapezoid {brute}"))?;
        if let Some(c) = closed {
            ensure((module - c).abs() <= 1e-6, || {
                format!("{name}: module {module} vs closed form {c}")
            })?;
        }
        ensure(module >= -1e-8, || format!("{name}: negative {module}"))?;
    }
    ensure((half_ln_2pi_minus_half - 0.41894).abs() < 5e-6, || {
        "closed form drifted".into()
    })?;

    let self_kl = relative_entropy(&Analytic::Gaussian(0.3, 2.0).input(), &mixture(&[(1.0, 0.3, 2.0)]))
        .map_err(|e| e.to_string())?;
    ensure(self_kl.abs() < 1e-8, || format!("D(X,X) = {self_kl:e}"))?;

    let mut rng = ChaCha8Rng::seed_from_u64(4);
    for _ in 0..40 {
        let x = match rng.random_range(0..3) {
            0 => Analytic::Exponential(rng.random_range(0.3..3.0)),
            1 => Analytic::Uniform(-1.0, rng.random_range(0.0..3.0)),
            _ => Analytic::Gaussian(rng.random_range(-2.0..2.0), rng.random_range(0.2..4.0)),
        };
        let m = rng.random_range(1..4);
        let parts: Vec<(f64, f64, f64)> = (0..m)
            .map(|_| (1.0 / m as f64, rng.random_range(-2.0..2.0), rng.random_range(0.3..4.0)))
            .collect();
        let d = relative_entropy(&x.input(), &mixture(&parts)).map_err(|e| e.to_string())?;
        ensure(d >= -1e-8, || format!("negative relative entropy {d:e}"))?;
    }
    Ok(format!(
        "5 pairs within {worst:.1e}; D(X,X)={self_kl:.1e}; 40 random pairs nonnegative"
    ))
}

fn loglik_identity() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let mut worst: f64 = 0.0;
    for _ in 0..50 {
        let n = rng.random_range(5..300);
        let points: Vec<f64> = (0..n)
            .map(|_| rng.random_range(-4.0..4.0) * rng.random::<f64>())
            .collect();
        let m = rng.random_range(1..5);
        let raw: Vec<f64> = (0..m).map(|_| rng.random_range(0.1..1.0)).collect();
        let total: f64 = raw.iter().sum();
        let parts: Vec<(f64, f64, f64)> = raw
            .iter()
            .map(|w| (w / total, rng.random_range(-3.0..3.0), rng.random_range(0.2..3.0)))
            .collect();
        let direct: f64 = points.iter().map(|&x| mix_pdf(&parts, x).ln()).sum();

        let d = InputDistribution::sample(points).unwrap();
        let report = accuracy_report(&d, &mixture(&parts)).map_err(|e| e.to_string())?;
        let via = loglik_from_expectation(n as u64, report.expected_log_density);
        let err = (via - direct).abs();
        worst = worst.max(err);
        ensure(err <= 1e-10, || format!("n={n}: {via} vs {direct}"))?;
    }
    Ok(format!("50 samples, max error {worst:.1e}"))
}

fn em_properties() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    for run in 0..100 {
        let n = rng.random_range(20..200);
        let xs: Vec<f64> = (0..n)
            .map(|_| rng.random_range(-3.0..3.0) + rng.random_range(0..3) as f64 * 2.0)
            .collect();
        let ws: Vec<f64> = (0..n).map(|_| rng.random_range(0.1..1.0)).collect();
        let pts = WeightedPoints::new(xs, ws).unwrap();
        let m = rng.random_range(1..5);
        let prior = if run % 4 == 3 {
            serde_json::from_str::<MapPriorSpec>(
                r#"{"dirichlet_pseudocount":1.0,"mean_prior":{"location":0.0,"strength":0.1},"variance_prior":{"shape":1.0,"scale":0.5}}"#,
            )
            .unwrap()
        } else {
            MapPriorSpec::uniform()
        };
        let cfg = EmConfig {
            seed: run,
            sample_size: n as f64,
            ..EmConfig::default()
        };
        let fit = em_fit(&pts, m, &prior, &cfg).map_err(|e| e.to_string())?;
        let h = &fit.objective_history;
        for w in h.windows(2) {
            ensure(w[1] >= w[0] - 1e-10, || {
                format!("run {run}: objective fell {} -> {}", w[0], w[1])
            })?;
        }
    }

    let xs: Vec<f64> = (0..37)
        .map(|i| (i as f64 * 0.77).sin() * 3.0 + i as f64 * 0.1)
        .collect();
    let ws: Vec<f64> = (0..37).map(|i| 1.0 + (i % 5) as f64).collect();
    let total: f64 = ws.iter().sum();
    let mean = xs.iter().zip(&ws).map(|(x, w)| x * w).sum::<f64>() / total;
    let var = xs.iter().zip(&ws).map(|(x, w)| w * (x - mean).powi(2)).sum::<f64>() / total;
    let pts = WeightedPoints::new(xs, ws).unwrap();
    let single = em_fit(&pts, 1, &MapPriorSpec::uniform(), &EmConfig::default()).map_err(|e| e.to_string())?;
    let c = single.mixture.components()[0];
    ensure(
        (c.mean - mean).abs() <= 1e-10 && (c.variance - var).abs() <= 1e-10,
        || format!("m=1 gave ({}, {}) vs ({mean}, {var})", c.mean, c.variance),
    )?;

    let mut sample = InputDistribution::gaussian(-5.0, 1.0, 1)
        .unwrap()
        .draw_sample(1000, 11)
        .unwrap();
    sample.extend(
        InputDistribution::gaussian(5.0, 1.0, 1)
            .unwrap()
            .draw_sample(1000, 12)
            .unwrap(),
    );
    let pts = WeightedPoints::uniform(sample);
    let two = em_fit(
        &pts,
        2,
        &MapPriorSpec::uniform(),
        &EmConfig {
            seed: 7,
            ..EmConfig::default()
        },
    )
    .map_err(|e| e.to_string())?;
    let mut means: Vec<f64> = two.mixture.components().iter().map(|c| c.mean).collect();
    means.sort_by(f64::total_cmp);
    ensure((means[0] + 5.0).abs() <= 0.15 && (means[1] - 5.0).abs() <= 0.15, || {
        format!("recovered means {means:?}")
    })?;
    Ok(format!(
        "100 monotone runs; m=1 closed form; means {:.3}, {:.3}",
        means[0], means[1]
    ))
}

fn nesting_invariant() -> Check {
    let d = InputDistribution::exponential(1.0, N).unwrap();
    let curve = accuracy_curve(&d, 12, &SearchConfig::default()).map_err(|e| e.to_string())?;
    ensure(curve.len() == 12, || format!("curve has {} points", curve.len()))?;
    let rel: Vec<f64> = curve.iter().map(|p| p.relative_entropy.unwrap()).collect();
    for (m, w) in rel.windows(2).enumerate() {
        ensure(w[1] <= w[0] + 1e-9, || {
            format!("D rose from m={} to m={}: {} -> {}", m + 1, m + 2, w[0], w[1])
        })?;
    }

    let mut checked = 0;
    for spec in four_criteria(N) {
        for m in 1..12 {
            let (a0, a1) = (curve[m - 1].expected_log_density, curve[m].expected_log_density);
            let (p0, p1) = (penalty(&spec, m), penalty(&spec, m + 1));
            let by_objective = stops_by_objective(a0 - p0, a1 - p1);
            let by_divergence = stops_by_divergence(rel[m - 1], rel[m], p0, p1);
            ensure(by_objective == by_divergence, || {
                format!("{} at m={m}: stop rules disagree", spec.kind.name())
            })?;
            checked += 1;
        }
    }
    Ok(format!(
        "D(1)={:.5} .. D(12)={:.5} nonincreasing; {checked} stop decisions agree",
        rel[0], rel[11]
    ))
}

fn comparative_statics() -> Check {
    let d = InputDistribution::exponential(1.0, N).unwrap();
    let traces = select_many(
        &d,
        &[CriterionSpec::aic(N), CriterionSpec::bic(N)],
        &SearchConfig::default(),
    )
    .map_err(|e| e.to_string())?;
    let (aic, bic) = (traces[0].chosen_m, traces[1].chosen_m);
    ensure(bic <= aic, || format!("bic chose {bic} > aic {aic}"))?;

    // BIC penalizes more than AIC per parameter exactly when ½ln n > 1
    for n in 2..=200u64 {
        let heavier = 0.5 * (n as f64).ln() > 1.0;
        ensure(heavier == (n >= 8), || {
            format!("BIC/AIC weight ordering flips at n={n}")
        })?;
    }

    // the log penalty grows more slowly than every linear one from some order on
    let log = CriterionSpec::new(CriterionKind::EffratioPoly { k: 5.0 }, N).unwrap();
    let linear = [
        CriterionSpec::aic(N),
        CriterionSpec::bic(N),
        CriterionSpec::new(CriterionKind::MapGeometric { p1: 0.95 }, N).unwrap(),
        CriterionSpec::new(CriterionKind::EffratioExp { k: 5.0 }, N).unwrap(),
    ];
    let mut crossovers = Vec::new();
    for spec in &linear {
        let step = |s: &CriterionSpec, m: usize| penalty(s, m + 1) - penalty(s, m);
        let last_stronger = (1..100).filter(|&m| step(&log, m) >= step(spec, m)).max().unwrap_or(0);
        ensure(last_stronger < 99, || {
            format!("log penalty never weaker than {}", spec.kind.name())
        })?;
        ensure(penalty(&log, 100) < penalty(spec, 100), || {
            format!("log penalty still above {} at m=100", spec.kind.name())
        })?;
        crossovers.push(format!("{}>{}", spec.kind.name(), last_stronger + 1));
    }
    Ok(format!(
        "aic={aic} bic={bic}; log increments weaker for m {}",
        crossovers.join(" ")
    ))
}

fn main() -> ExitCode {
    let criteria: [Criterion; 8] = [
        ("exponential example", exponential_example),
        ("uniform example", uniform_example),
        ("equivalence identities", equivalence_identities),
        ("relative entropy oracle", relative_entropy_oracle),
        ("log-likelihood identity", loglik_identity),
        ("EM properties", em_properties),
        ("nesting invariant", nesting_invariant),
        ("comparative statics", comparative_statics),
    ];
    let mut failed = 0;
    for (i, (name, check)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let outcome = std::panic::catch_unwind(check).unwrap_or_else(|_| Err("panicked".into()));
        let secs = start.elapsed().as_secs_f64();
        match outcome {
            Ok(detail) => println!("acceptance {}: PASS {name} ({secs:.1}s): {detail}", i + 1),
            Err(why) => {
                failed += 1;
                println!("acceptance {}: FAIL {name} ({secs:.1}s): {why}", i + 1);
            }
        }
    }
    println!("acceptance: {}/{} passed", criteria.len() - failed, criteria.len());
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
