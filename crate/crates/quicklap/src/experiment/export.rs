//! Result files: summary and convergence CSVs, full episode traces as JSON
//! lines, and a manifest that replays the run exactly.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use crate::error::{Error, Result};

use super::sweep::SweepResult;

pub const SUMMARY_FILE: &str = "summary.csv";
pub const CONVERGENCE_FILE: &str = "convergence.csv";
pub const EPISODES_FILE: &str = "episodes.jsonl";
pub const MANIFEST_FILE: &str = "manifest.toml";

fn write_file(dir: &Path, name: &str, contents: &str) -> Result<PathBuf> {
    let path = dir.join(name);
    std::fs::write(&path, contents).map_err(|source| Error::WriteFile {
        path: path.clone(),
        source,
    })?;
    Ok(path)
}

/// Write all result files into `dir`, creating it if needed. Outputs are a
/// pure function of the results, so re-exporting identical results yields
/// byte-identical files.
pub fn export_results(result: &SweepResult, dir: &Path) -> Result<Vec<PathBuf>> {
    std::fs::create_dir_all(dir).map_err(|source| Error::WriteFile {
        path: dir.to_path_buf(),
        source,
    })?;

    let mut summary = String::from("scenario,algorithm,mean_nmse,sem,n\n");
    for cell in &result.summary.cells {
        writeln!(
            summary,
            "{},{},{:.6},{:.6},{}",
            cell.scenario,
            cell.algorithm.name(),
            cell.mean_nmse,
            cell.sem,
            cell.n
        )
        .expect("string write");
    }

    let mut convergence = String::from("intervention_index,algorithm,mean_nmse,sem\n");
    for row in &result.convergence {
        writeln!(
            convergence,
            "{},{},{:.6},{:.6}",
            row.intervention_index,
            row.algorithm.name(),
            row.mean_nmse,
            row.sem
        )
        .expect("string write");
    }

    let mut episodes = String::new();
    for record in &result.episodes {
        let line = serde_json::to_string(record)
            .map_err(|e| Error::InvalidConfig(format!("serialize episode record: {e}")))?;
        episodes.push_str(&line);
        episodes.push('\n');
    }

    let manifest = crate::config::RunConfig::from_sweep(&result.config)
        .to_toml()
        .map_err(|e| Error::InvalidConfig(format!("serialize manifest: {e}")))?;

    Ok(vec![
        write_file(dir, SUMMARY_FILE, &summary)?,
        write_file(dir, CONVERGENCE_FILE, &convergence)?,
        write_file(dir, EPISODES_FILE, &episodes)?,
        write_file(dir, MANIFEST_FILE, &manifest)?,
    ])
}
