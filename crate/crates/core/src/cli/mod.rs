//! Command-line front end: `fit`, `select`, `figure1` and `curve`.
//!
//! Exit codes: 0 success, 2 configuration error, 3 infeasible order, 4 numeric failure.

pub mod output;

use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use serde::{Deserialize, Serialize};

use crate::distributions::InputDistribution;
use crate::entropy::accuracy_report_with;
use crate::error::{MixselError, Result};
use crate::mixture::{em_fit, EmConfig, MapPriorSpec};
use crate::quadrature::DEFAULT_QUAD_POINTS;
use crate::search::{accuracy_curve, select_many, SearchConfig};
use crate::selection::{penalty_figure1, CriterionKind, CriterionSpec, Estimation};

use output::{
    criterion_csv_path, csv_table, fmt_g12, selection_csv, to_json, write_atomic, CriterionResult, FitEnvelope,
    SelectEnvelope,
};

/// Environment variable overriding the quadrature grid size.
pub const QUAD_POINTS_ENV: &str = "MIXSEL_QUAD_POINTS";

#[derive(Debug, Parser)]
#[command(name = "mixsel", version, about = "Select the number of Gaussian mixture components")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Fit a mixture with a fixed number of components
    Fit(FitArgs),
    /// Run the order search for one or more criteria
    Select(SelectArgs),
    /// Relative entropy and penalty curves for an exponential input
    Figure1(Figure1Args),
    /// Accuracy of every order up to --m-max
    Curve(CurveArgs),
}

#[derive(Debug, Clone, Args)]
pub struct EmArgs {
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Random EM restarts per order
    #[arg(long, default_value_t = 2)]
    pub restarts: usize,
    #[arg(long, default_value_t = 500)]
    pub max_iter: usize,
    #[arg(long, default_value_t = 1e-8)]
    pub tol: f64,
}

impl EmArgs {
    fn em_config(&self) -> EmConfig {
        EmConfig {
            tol: self.tol,
            max_iter: self.max_iter,
            restarts: self.restarts,
            seed: self.seed,
            ..EmConfig::default()
        }
    }
}

#[derive(Debug, Args)]
pub struct FitArgs {
    /// Input distribution JSON file
    #[arg(long)]
    pub input: PathBuf,
    /// Number of components
    #[arg(long)]
    pub m: usize,
    #[command(flatten)]
    pub em: EmArgs,
    #[arg(long)]
    pub out_json: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct SelectArgs {
    /// Experiment config JSON; alternative to --input/--criterion
    pub config: Option<PathBuf>,
    #[arg(long, conflicts_with = "config")]
    pub input: Option<PathBuf>,
    /// Criterion JSON, e.g. '{"kind":"bic","n":100}'; repeatable
    #[arg(long = "criterion")]
    pub criteria: Vec<String>,
    #[arg(long)]
    pub m_max: Option<usize>,
    #[arg(long)]
    pub lookahead: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub out_csv: Option<PathBuf>,
    #[arg(long)]
    pub out_json: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct Figure1Args {
    /// Equivalent sample size of the exponential input
    #[arg(long, default_value_t = 100)]
    pub n: u64,
    /// Exponent of the polynomial cost m^k
    #[arg(long, default_value_t = 5.0)]
    pub k: f64,
    /// Geometric prior parameter
    #[arg(long, default_value_t = 0.95)]
    pub p1: f64,
    #[arg(long, default_value_t = 12)]
    pub m_max: usize,
    #[command(flatten)]
    pub em: EmArgs,
    #[arg(long)]
    pub out_csv: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct CurveArgs {
    #[arg(long)]
    pub input: PathBuf,
    #[arg(long, default_value_t = 12)]
    pub m_max: usize,
    #[command(flatten)]
    pub em: EmArgs,
    #[arg(long)]
    pub out_csv: Option<PathBuf>,
}

/// A criterion as written in a config; `n` defaults to the input's equivalent size.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CriterionInput {
    #[serde(flatten)]
    pub kind: CriterionKind,
    #[serde(default)]
    pub n: Option<u64>,
    #[serde(default)]
    pub estimation: Estimation,
}

impl CriterionInput {
    pub fn resolve(&self, input: &InputDistribution) -> Result<CriterionSpec> {
        let spec = CriterionSpec {
            kind: self.kind,
            n: self.n.unwrap_or(input.n_equiv()),
            estimation: self.estimation,
        };
        for w in spec.validate()? {
            eprintln!("warning: {w}");
        }
        Ok(spec)
    }
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SearchSection {
    #[serde(default)]
    pub m_max: Option<usize>,
    #[serde(default)]
    pub lookahead: Option<usize>,
    #[serde(default)]
    pub restarts: Option<usize>,
    #[serde(default)]
    pub max_iter: Option<usize>,
    #[serde(default)]
    pub tol: Option<f64>,
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputSection {
    #[serde(default)]
    pub csv_path: Option<PathBuf>,
    #[serde(default)]
    pub json_path: Option<PathBuf>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub input: InputDistribution,
    pub criteria: Vec<CriterionInput>,
    #[serde(default)]
    pub search: SearchSection,
    #[serde(default)]
    pub output: OutputSection,
    #[serde(default)]
    pub seed: u64,
}

impl ExperimentConfig {
    pub fn search_config(&self, quad_points: usize) -> SearchConfig {
        let defaults = SearchConfig::default();
        let em_defaults = EmConfig::default();
        SearchConfig {
            m_max: self.search.m_max.unwrap_or(defaults.m_max),
            lookahead: self.search.lookahead.unwrap_or(defaults.lookahead),
            em: EmConfig {
                tol: self.search.tol.unwrap_or(em_defaults.tol),
                max_iter: self.search.max_iter.unwrap_or(em_defaults.max_iter),
                restarts: self.search.restarts.unwrap_or(em_defaults.restarts),
                seed: self.seed,
                ..em_defaults
            },
            quad_points,
        }
    }
}

/// Grid size from `MIXSEL_QUAD_POINTS`, falling back to the default.
pub fn quad_points_from_env() -> Result<usize> {
    match std::env::var(QUAD_POINTS_ENV) {
        Ok(v) => v
            .trim()
            .parse::<usize>()
            .ok()
            .filter(|&n| n >= 3)
            .ok_or_else(|| MixselError::config(format!("{QUAD_POINTS_ENV} must be an integer >= 3, got {v:?}"))),
        Err(_) => Ok(DEFAULT_QUAD_POINTS),
    }
}

fn read_json<T: serde::de::DeserializeOwned>(path: &Path) -> Result<T> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| MixselError::config(format!("cannot read {}: {e}", path.display())))?;
    serde_json::from_str(&text).map_err(|e| MixselError::config(format!("malformed JSON in {}: {e}", path.display())))
}

fn emit(path: Option<&Path>, contents: &str) -> Result<()> {
    match path {
        Some(p) => write_atomic(p, contents),
        None => {
            print!("{contents}");
            Ok(())
        }
    }
}

/// Parses arguments, runs the subcommand and returns the process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = e.exit_code();
            let _ = e.print();
            return code;
        }
    };
    match dispatch(cli.command) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

fn dispatch(command: Command) -> Result<()> {
    let quad_points = quad_points_from_env()?;
    match command {
        Command::Fit(args) => cmd_fit(&args, quad_points),
        Command::Select(args) => cmd_select(&args, quad_points),
        Command::Figure1(args) => cmd_figure1(&args, quad_points),
        Command::Curve(args) => cmd_curve(&args, quad_points),
    }
}

pub fn cmd_fit(args: &FitArgs, quad_points: usize) -> Result<()> {
    let input: InputDistribution = read_json(&args.input)?;
    if args.m == 0 {
        return Err(MixselError::config("--m must be at least 1"));
    }
    let pts = input.fitting_points(quad_points)?;
    let em = EmConfig {
        sample_size: input.n_equiv() as f64,
        ..args.em.em_config()
    };
    let fit = em_fit(&pts, args.m, &MapPriorSpec::uniform(), &em)?;
    let accuracy = accuracy_report_with(&input, &fit.mixture, quad_points)?;
    let envelope = FitEnvelope {
        m: args.m,
        fit,
        accuracy,
    };
    emit(args.out_json.as_deref(), &to_json(&envelope)?)
}

fn select_config(args: &SelectArgs) -> Result<ExperimentConfig> {
    let mut config = match (&args.config, &args.input) {
        (Some(path), _) => read_json::<ExperimentConfig>(path)?,
        (None, Some(input)) => ExperimentConfig {
            input: read_json(input)?,
            criteria: Vec::new(),
            search: SearchSection::default(),
            output: OutputSection::default(),
            seed: 0,
        },
        (None, None) => return Err(MixselError::config("select needs a config file or --input")),
    };
    for c in &args.criteria {
        let parsed: CriterionInput =
            serde_json::from_str(c).map_err(|e| MixselError::config(format!("malformed --criterion {c:?}: {e}")))?;
        config.criteria.push(parsed);
    }
    if let Some(m) = args.m_max {
        config.search.m_max = Some(m);
    }
    if let Some(l) = args.lookahead {
        config.search.lookahead = Some(l);
    }
    if let Some(s) = args.seed {
        config.seed = s;
    }
    if let Some(p) = &args.out_csv {
        config.output.csv_path = Some(p.clone());
    }
    if let Some(p) = &args.out_json {
        config.output.json_path = Some(p.clone());
    }
    if config.criteria.is_empty() {
        return Err(MixselError::config("at least one criterion is required"));
    }
    Ok(config)
}

pub fn cmd_select(args: &SelectArgs, quad_points: usize) -> Result<()> {
    let config = select_config(args)?;
    let specs = config
        .criteria
        .iter()
        .map(|c| c.resolve(&config.input))
        .collect::<Result<Vec<_>>>()?;
    let search = config.search_config(quad_points);
    let traces = select_many(&config.input, &specs, &search)?;

    let mut results = Vec::with_capacity(traces.len());
    for (i, trace) in traces.iter().enumerate() {
        let csv_path = match &config.output.csv_path {
            Some(base) => {
                let path = criterion_csv_path(base, i, traces.len(), trace.criterion.kind.name());
                write_atomic(&path, &selection_csv(trace))?;
                Some(path.display().to_string())
            }
            None => None,
        };
        results.push(CriterionResult::from_trace(trace, csv_path));
    }
    emit(
        config.output.json_path.as_deref(),
        &to_json(&SelectEnvelope { results })?,
    )
}

/// One row of the exponential-input comparison table.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Figure1Row {
    pub m: usize,
    pub relative_entropy: f64,
    /// AIC, BIC, MAP-geometric and polynomial-cost penalties, in that order.
    pub penalties: [f64; 4],
}

impl Figure1Row {
    pub fn totals(&self) -> [f64; 4] {
        self.penalties.map(|p| self.relative_entropy + p)
    }
}

/// Relative entropy of the ML fits to an exponential(1) input treated as a
/// sample of size `n`, with the four penalties in their `3m` forms.
pub fn figure1_rows(n: u64, k: f64, p1: f64, cfg: &SearchConfig) -> Result<Vec<Figure1Row>> {
    let input = InputDistribution::exponential(1.0, n)?;
    let specs = [
        CriterionSpec::new(CriterionKind::Aic, n)?,
        CriterionSpec::new(CriterionKind::Bic, n)?,
        CriterionSpec::new(CriterionKind::MapGeometric { p1 }, n)?,
        CriterionSpec::new(CriterionKind::EffratioPoly { k }, n)?,
    ];
    let curve = accuracy_curve(&input, cfg.m_max, cfg)?;
    Ok(curve
        .iter()
        .map(|pt| Figure1Row {
            m: pt.m,
            relative_entropy: pt.relative_entropy.expect("continuous input"),
            penalties: specs.map(|s| penalty_figure1(&s, pt.m)),
        })
        .collect())
}

pub fn figure1_csv(rows: &[Figure1Row]) -> String {
    csv_table(
        &[
            "m",
            "relative_entropy",
            "penalty_aic",
            "penalty_bic",
            "penalty_map",
            "penalty_effratio",
            "total_aic",
            "total_bic",
            "total_map",
            "total_effratio",
        ],
        rows.iter().map(|r| {
            let mut row = vec![r.m.to_string(), fmt_g12(r.relative_entropy)];
            row.extend(r.penalties.iter().map(|&p| fmt_g12(p)));
            row.extend(r.totals().iter().map(|&t| fmt_g12(t)));
            row
        }),
    )
}

pub fn cmd_figure1(args: &Figure1Args, quad_points: usize) -> Result<()> {
    let cfg = SearchConfig {
        m_max: args.m_max,
        lookahead: 0,
        em: args.em.em_config(),
        quad_points,
    };
    let rows = figure1_rows(args.n, args.k, args.p1, &cfg)?;
    emit(args.out_csv.as_deref(), &figure1_csv(&rows))
}

pub fn cmd_curve(args: &CurveArgs, quad_points: usize) -> Result<()> {
    let input: InputDistribution = read_json(&args.input)?;
    let cfg = SearchConfig {
        m_max: args.m_max,
        lookahead: 0,
        em: args.em.em_config(),
        quad_points,
    };
    let curve = accuracy_curve(&input, args.m_max, &cfg)?;
    let csv = if input.is_continuous() {
        csv_table(
            &["m", "expected_log_density", "relative_entropy"],
            curve.iter().map(|p| {
                vec![
                    p.m.to_string(),
                    fmt_g12(p.expected_log_density),
                    fmt_g12(p.relative_entropy.unwrap_or(f64::NAN)),
                ]
            }),
        )
    } else {
        csv_table(
            &["m", "expected_log_density"],
            curve
                .iter()
                .map(|p| vec![p.m.to_string(), fmt_g12(p.expected_log_density)]),
        )
    };
    emit(args.out_csv.as_deref(), &csv)
}
