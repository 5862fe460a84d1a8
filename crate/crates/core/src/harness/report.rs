use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::Duration;

use serde::{Deserialize, Serialize};

use super::HarnessError;

/// One evaluation repetition. `predicted` is `None` when the target model
/// could not be trained or queried.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Outcome {
    pub rep: usize,
    pub group: usize,
    pub truth: usize,
    pub predicted: Option<usize>,
    pub confidence: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentResult {
    pub name: String,
    pub family: String,
    pub setting: String,
    pub arch: String,
    pub with_a: bool,
    pub queries: usize,
    pub digest: String,
    pub group_names: Vec<String>,
    pub outcomes: Vec<Outcome>,
    pub correct: usize,
    pub incorrect: usize,
    pub failed: usize,
    pub accuracy: f64,
    pub ci_half_width: f64,
    pub shadow_failures: usize,
    /// Kept out of result and report files so those stay reproducible.
    #[serde(skip)]
    pub wall_time: Duration,
}

/// Normal-approximation 95% binomial half-width, `1.96·sqrt(p(1−p)/n)`.
pub fn ci_half_width(p: f64, n: usize) -> f64 {
    if n == 0 {
        return 0.0;
    }
    1.96 * (p * (1.0 - p) / n as f64).sqrt()
}

impl ExperimentResult {
    /// Tallies outcomes into the summary fields.
    pub fn summarize(mut self) -> ExperimentResult {
        self.correct = self.outcomes.iter().filter(|o| o.predicted == Some(o.truth)).count();
        self.failed = self.outcomes.iter().filter(|o| o.predicted.is_none()).count();
        self.incorrect = self.outcomes.len() - self.correct - self.failed;
        let valid = self.correct + self.incorrect;
        self.accuracy = if valid == 0 { 0.0 } else { self.correct as f64 / valid as f64 };
        self.ci_half_width = ci_half_width(self.accuracy, valid);
        self
    }

    pub fn repetitions(&self) -> usize {
        self.outcomes.len()
    }

    /// `(group name, accuracy, valid count)` per evaluation group.
    pub fn group_accuracy(&self) -> Vec<(String, f64, usize)> {
        self.group_names
            .iter()
            .enumerate()
            .map(|(g, name)| {
                let valid: Vec<&Outcome> = self.outcomes.iter().filter(|o| o.group == g && o.predicted.is_some()).collect();
                let correct = valid.iter().filter(|o| o.predicted == Some(o.truth)).count();
                let acc = if valid.is_empty() { 0.0 } else { correct as f64 / valid.len() as f64 };
                (name.clone(), acc, valid.len())
            })
            .collect()
    }
}

pub fn write_result(result: &ExperimentResult, path: impl AsRef<Path>) -> Result<(), HarnessError> {
    let text = serde_json::to_string_pretty(result).map_err(|e| HarnessError::Io(e.to_string()))?;
    fs::write(path, text + "\n")?;
    Ok(())
}

pub fn read_result(path: impl AsRef<Path>) -> Result<ExperimentResult, HarnessError> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| HarnessError::Io(format!("{}: {e}", path.display())))?;
    serde_json::from_str(&text).map_err(|e| HarnessError::Io(format!("{}: {e}", path.display())))
}

pub fn render_csv(results: &[ExperimentResult]) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record([
        "name", "digest", "family", "setting", "arch", "with_a", "queries", "repetitions", "correct", "incorrect", "failed", "accuracy", "ci_low",
        "ci_high", "ci_half_width",
    ])
    .expect("in-memory write");
    for r in results {
        w.write_record([
            r.name.clone(),
            r.digest.clone(),
            r.family.clone(),
            r.setting.clone(),
            r.arch.clone(),
            r.with_a.to_string(),
            r.queries.to_string(),
            r.repetitions().to_string(),
            r.correct.to_string(),
            r.incorrect.to_string(),
            r.failed.to_string(),
            format!("{:.4}", r.accuracy),
            format!("{:.4}", (r.accuracy - r.ci_half_width).max(0.0)),
            format!("{:.4}", (r.accuracy + r.ci_half_width).min(1.0)),
            format!("{:.4}", r.ci_half_width),
        ])
        .expect("in-memory write");
    }
    String::from_utf8(w.into_inner().expect("in-memory flush")).expect("utf-8")
}

/// Fixed-width table: one row per result, with per-group accuracies.
pub fn render_text(results: &[ExperimentResult]) -> String {
    let rows: Vec<[String; 8]> = results
        .iter()
        .map(|r| {
            let groups: Vec<String> = r.group_accuracy().iter().map(|(n, a, _)| format!("{n} {a:.2}")).collect();
            [
                r.name.clone(),
                r.family.clone(),
                r.setting.clone(),
                r.arch.clone(),
                if r.with_a { "A".into() } else { "no A".into() },
                r.queries.to_string(),
                format!("{:.2} ± {:.3}", r.accuracy, r.ci_half_width),
                groups.join(", "),
            ]
        })
        .collect();
    let header = ["experiment", "family", "setting", "model", "mode", "k", "accuracy", "per group"];
    let mut widths = header.map(|h| h.chars().count());
    for row in &rows {
        for (w, cell) in widths.iter_mut().zip(row) {
            *w = (*w).max(cell.chars().count());
        }
    }
    let mut out = String::new();
    let line = |out: &mut String, cells: &[String]| {
        let padded: Vec<String> = cells.iter().zip(&widths).map(|(c, w)| format!("{c:<w$}", w = *w)).collect();
        let _ = writeln!(out, "{}", padded.join(" | ").trim_end());
    };
    line(&mut out, &header.map(String::from));
    let _ = writeln!(out, "{}", widths.iter().map(|w| "-".repeat(*w)).collect::<Vec<_>>().join("-+-"));
    for row in &rows {
        line(&mut out, row);
    }
    out
}

/// Writes `report.csv` and `report.txt` into `dir`; both depend only on the results.
pub fn emit_report(results: &[ExperimentResult], dir: impl AsRef<Path>) -> Result<Vec<PathBuf>, HarnessError> {
    if results.is_empty() {
        return Err(HarnessError::Io("no results to report".into()));
    }
    let dir = dir.as_ref();
    fs::create_dir_all(dir)?;
    let csv_path = dir.join("report.csv");
    let txt_path = dir.join("report.txt");
    fs::write(&csv_path, render_csv(results))?;
    fs::write(&txt_path, render_text(results))?;
    Ok(vec![csv_path, txt_path])
}

/// Wall-clock times, kept apart from the reproducible report.
pub fn write_timing(results: &[ExperimentResult], path: impl AsRef<Path>) -> Result<(), HarnessError> {
    let mut text = String::from("name,digest,wall_time_s\n");
    for r in results {
        let _ = writeln!(text, "{},{},{:.3}", r.name, r.digest, r.wall_time.as_secs_f64());
    }
    fs::write(path, text)?;
    Ok(())
}
