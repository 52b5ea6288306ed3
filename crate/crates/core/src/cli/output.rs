//! CSV/JSON emission shared by the subcommands.

use std::fmt::Write as _;
use std::io::Write;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::entropy::AccuracyReport;
use crate::error::Result;
use crate::mixture::{FitResult, GaussianMixture};
use crate::search::{SelectionTrace, StopReason};
use crate::selection::CriterionSpec;

/// `%.12g`: 12 significant digits, trailing zeros trimmed.
pub fn fmt_g12(v: f64) -> String {
    if v.is_nan() {
        return "nan".into();
    }
    if v.is_infinite() {
        return if v > 0.0 { "inf".into() } else { "-inf".into() };
    }
    if v == 0.0 {
        return "0".into();
    }
    let sci = format!("{:.11e}", v);
    let (mantissa, exp) = sci.split_once('e').expect("exponent present");
    let exp: i32 = exp.parse().expect("integer exponent");
    if !(-4..12).contains(&exp) {
        let mantissa = trim_zeros(mantissa);
        let sign = if exp < 0 { '-' } else { '+' };
        format!("{mantissa}e{sign}{:02}", exp.abs())
    } else {
        let decimals = (11 - exp).max(0) as usize;
        trim_zeros(&format!("{:.*}", decimals, v)).to_string()
    }
}

fn trim_zeros(s: &str) -> &str {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.')
    } else {
        s
    }
}

/// Builds a CSV body: header plus rows, LF line endings.
pub fn csv_table(header: &[&str], rows: impl IntoIterator<Item = Vec<String>>) -> String {
    let mut out = header.join(",");
    out.push('\n');
    for row in rows {
        out.push_str(&row.join(","));
        out.push('\n');
    }
    out
}

pub fn selection_csv(trace: &SelectionTrace) -> String {
    csv_table(
        &["m", "accuracy", "penalty", "objective"],
        trace.rows.iter().map(|r| {
            vec![
                r.m.to_string(),
                fmt_g12(r.accuracy),
                fmt_g12(r.penalty),
                fmt_g12(r.objective),
            ]
        }),
    )
}

/// Writes through a temporary file in the target directory, then renames.
pub fn write_atomic(path: &Path, contents: &str) -> Result<()> {
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p.to_path_buf(),
        _ => PathBuf::from("."),
    };
    let mut tmp = tempfile::NamedTempFile::new_in(&dir)?;
    tmp.write_all(contents.as_bytes())?;
    tmp.flush()?;
    tmp.persist(path).map_err(|e| e.error)?;
    Ok(())
}

/// Per-criterion CSV path: the configured path itself for a single criterion,
/// otherwise `<stem>_<index>_<kind>.<ext>` with a 1-based index.
pub fn criterion_csv_path(base: &Path, index: usize, total: usize, kind: &str) -> PathBuf {
    if total == 1 {
        return base.to_path_buf();
    }
    let stem = base
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default();
    let mut name = String::new();
    let _ = write!(name, "{stem}_{}_{kind}", index + 1);
    if let Some(ext) = base.extension() {
        name.push('.');
        name.push_str(&ext.to_string_lossy());
    }
    base.with_file_name(name)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitEnvelope {
    pub m: usize,
    pub fit: FitResult,
    pub accuracy: AccuracyReport,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RowOut {
    pub m: usize,
    pub accuracy: f64,
    pub penalty: f64,
    pub objective: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub relative_entropy: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CriterionResult {
    pub criterion: CriterionSpec,
    pub chosen_m: usize,
    pub stopped_by: StopReason,
    pub chosen_mixture: GaussianMixture,
    pub rows: Vec<RowOut>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub csv_path: Option<String>,
}

impl CriterionResult {
    pub fn from_trace(trace: &SelectionTrace, csv_path: Option<String>) -> Self {
        Self {
            criterion: trace.criterion,
            chosen_m: trace.chosen_m,
            stopped_by: trace.stopped_by,
            chosen_mixture: trace.chosen().fit.mixture.clone(),
            rows: trace
                .rows
                .iter()
                .map(|r| RowOut {
                    m: r.m,
                    accuracy: r.accuracy,
                    penalty: r.penalty,
                    objective: r.objective,
                    relative_entropy: r.relative_entropy,
                })
                .collect(),
            csv_path,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SelectEnvelope {
    pub results: Vec<CriterionResult>,
}

/// Pretty JSON with a trailing newline.
pub fn to_json<T: Serialize>(value: &T) -> Result<String> {
    let mut s = serde_json::to_string_pretty(value)?;
    s.push('\n');
    Ok(s)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn g12_formatting() {
        assert_eq!(fmt_g12(0.0), "0");
        assert_eq!(fmt_g12(1.0), "1");
        assert_eq!(fmt_g12(-150.0), "-150");
        assert_eq!(fmt_g12(0.1), "0.1");
        assert_eq!(fmt_g12(0.4189385332046727), "0.418938533205");
        assert_eq!(fmt_g12(1.0 / 3.0), "0.333333333333");
        assert_eq!(fmt_g12(123456789012.0), "123456789012");
        assert_eq!(fmt_g12(1234567890123.0), "1.23456789012e+12");
        assert_eq!(fmt_g12(0.0001234), "0.0001234");
        assert_eq!(fmt_g12(0.00001234), "1.234e-05");
        assert_eq!(fmt_g12(7.69459862670642e-23), "7.69459862671e-23");
        assert_eq!(fmt_g12(f64::INFINITY), "inf");
    }

    #[test]
    fn csv_paths() {
        let base = Path::new("/tmp/out/trace.csv");
        assert_eq!(criterion_csv_path(base, 0, 1, "bic"), base);
        assert_eq!(
            criterion_csv_path(base, 1, 3, "aic"),
            Path::new("/tmp/out/trace_2_aic.csv")
        );
    }

    #[test]
    fn csv_table_uses_lf() {
        let t = csv_table(&["a", "b"], vec![vec!["1".into(), "2".into()]]);
        assert_eq!(t, "a,b\n1,2\n");
    }
}
