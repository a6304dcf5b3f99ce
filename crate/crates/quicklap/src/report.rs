//! Formatted tables over exported result directories.

use std::collections::BTreeMap;
use std::path::Path;

use crate::error::{Error, Result};
use crate::experiment::{mean_sem, EpisodeRecord, EPISODES_FILE, SUMMARY_FILE};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ReportFormat {
    Markdown,
    Csv,
}

impl std::str::FromStr for ReportFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "markdown" | "md" => Ok(ReportFormat::Markdown),
            "csv" => Ok(ReportFormat::Csv),
            other => Err(Error::InvalidConfig(format!(
                "unknown format `{other}` (expected csv or markdown)"
            ))),
        }
    }
}

struct SummaryRow {
    scenario: String,
    algorithm: String,
    mean: f64,
    sem: f64,
}

fn read_summary(dir: &Path) -> Result<Vec<SummaryRow>> {
    let path = dir.join(SUMMARY_FILE);
    let text = std::fs::read_to_string(&path).map_err(|source| Error::ReadFile {
        path: path.clone(),
        source,
    })?;
    let mut rows = Vec::new();
    for (i, line) in text.lines().enumerate() {
        if i == 0 || line.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != 5 {
            return Err(Error::InvalidConfig(format!(
                "{}: line {} has {} fields, expected 5",
                path.display(),
                i + 1,
                fields.len()
            )));
        }
        let parse = |s: &str| -> Result<f64> {
            s.parse()
                .map_err(|e| Error::InvalidConfig(format!("{}: {e}", path.display())))
        };
        rows.push(SummaryRow {
            scenario: fields[0].to_string(),
            algorithm: fields[1].to_string(),
            mean: parse(fields[2])?,
            sem: parse(fields[3])?,
        });
    }
    if rows.is_empty() {
        return Err(Error::InvalidConfig(format!(
            "{} holds no data rows",
            path.display()
        )));
    }
    Ok(rows)
}

fn read_episodes(dir: &Path) -> Result<Vec<EpisodeRecord>> {
    let path = dir.join(EPISODES_FILE);
    let text = std::fs::read_to_string(&path).map_err(|source| Error::ReadFile {
        path: path.clone(),
        source,
    })?;
    let mut records = Vec::new();
    for (i, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let record: EpisodeRecord = serde_json::from_str(line)
            .map_err(|e| Error::InvalidConfig(format!("{}:{}: {e}", path.display(), i + 1)))?;
        records.push(record);
    }
    Ok(records)
}

fn render_matrix(
    title: &str,
    row_label: &str,
    rows: &[String],
    columns: &[String],
    cell: impl Fn(&str, &str) -> Option<String>,
    format: ReportFormat,
) -> String {
    let mut out = String::new();
    match format {
        ReportFormat::Markdown => {
            out.push_str(&format!("## {title}\n\n"));
            out.push_str(&format!("| {row_label} |"));
            for c in columns {
                out.push_str(&format!(" {c} |"));
            }
            out.push('\n');
            out.push_str("|---|");
            for _ in columns {
                out.push_str("---|");
            }
            out.push('\n');
            for r in rows {
                out.push_str(&format!("| {r} |"));
                for c in columns {
                    out.push_str(&format!(" {} |", cell(r, c).unwrap_or_else(|| "-".into())));
                }
                out.push('\n');
            }
        }
        ReportFormat::Csv => {
            out.push_str(row_label);
            for c in columns {
                out.push_str(&format!(",{c}"));
            }
            out.push('\n');
            for r in rows {
                out.push_str(r);
                for c in columns {
                    out.push_str(&format!(",{}", cell(r, c).unwrap_or_default()));
                }
                out.push('\n');
            }
        }
    }
    out
}

/// Scenario-by-algorithm table of mean +/- SEM final NMSE.
pub fn render_summary(dir: &Path, format: ReportFormat) -> Result<String> {
    let rows = read_summary(dir)?;
    let mut scenarios = Vec::new();
    let mut algorithms = Vec::new();
    for r in &rows {
        if !scenarios.contains(&r.scenario) {
            scenarios.push(r.scenario.clone());
        }
        if !algorithms.contains(&r.algorithm) {
            algorithms.push(r.algorithm.clone());
        }
    }
    Ok(render_matrix(
        "Normalized MSE by scenario",
        "scenario",
        &scenarios,
        &algorithms,
        |scenario, algorithm| {
            rows.iter()
                .find(|r| r.scenario == scenario && r.algorithm == algorithm)
                .map(|r| match format {
                    ReportFormat::Markdown => format!("{:.4} ± {:.4}", r.mean, r.sem),
                    ReportFormat::Csv => format!("{:.6}", r.mean),
                })
        },
        format,
    ))
}

/// Utterance-by-algorithm table of mean final NMSE, built from the episode
/// traces.
pub fn render_utterance_table(dir: &Path, format: ReportFormat) -> Result<String> {
    let records = read_episodes(dir)?;
    let mut utterances: Vec<String> = Vec::new();
    let mut algorithms: Vec<String> = Vec::new();
    let mut samples: BTreeMap<(String, String), Vec<f64>> = BTreeMap::new();
    for record in records.iter().filter(|r| r.ok) {
        let utterance = record.key.utterance.clone();
        let algorithm = record.key.algorithm.name().to_string();
        if !utterances.contains(&utterance) {
            utterances.push(utterance.clone());
        }
        if !algorithms.contains(&algorithm) {
            algorithms.push(algorithm.clone());
        }
        if let Some(result) = &record.result {
            samples
                .entry((utterance, algorithm))
                .or_default()
                .push(result.final_nmse);
        }
    }
    if samples.is_empty() {
        return Err(Error::InvalidConfig(format!(
            "{} holds no successful episodes",
            dir.join(EPISODES_FILE).display()
        )));
    }
    Ok(render_matrix(
        "Normalized MSE by utterance",
        "utterance",
        &utterances,
        &algorithms,
        |utterance, algorithm| {
            samples
                .get(&(utterance.to_string(), algorithm.to_string()))
                .map(|values| {
                    let (mean, _) = mean_sem(values);
                    format!("{mean:.4}")
                })
        },
        format,
    ))
}

/// Full report: summary table plus utterance robustness table.
pub fn render_report(dir: &Path, format: ReportFormat) -> Result<String> {
    let mut out = render_summary(dir, format)?;
    out.push('\n');
    out.push_str(&render_utterance_table(dir, format)?);
    Ok(out)
}
