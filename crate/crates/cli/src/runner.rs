//! Experiment-file runner and artifact writing.

use std::fs;
use std::path::{Path, PathBuf};

use rayon::prelude::*;

use crate::config::ExperimentConfig;
use crate::csv::write_atomic;
use crate::error::{CliError, Result};
use crate::jobs::{plan, JobOutput, JobPlan, Profile, Settings, Status};
use crate::params::Params;

#[derive(Debug, Clone)]
pub struct RunSummary {
    pub outputs: Vec<JobOutput>,
    pub files: Vec<PathBuf>,
    pub status: Status,
}

/// Writes every table and report; on any failure the files already written
/// by this call are removed again.
pub fn write_outputs(dir: &Path, outputs: &[JobOutput], combined_report: bool) -> Result<Vec<PathBuf>> {
    let mut written = Vec::new();
    let result = (|| {
        fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))?;
        for out in outputs {
            for (suffix, table) in &out.tables {
                let file = match suffix {
                    None => format!("{}.csv", out.name),
                    Some(s) => format!("{}.{s}.csv", out.name),
                };
                let path = dir.join(file);
                write_atomic(&path, &table.render())?;
                written.push(path);
            }
            let path = dir.join(format!("{}.report.txt", out.name));
            write_atomic(&path, &out.report)?;
            written.push(path);
        }
        if combined_report {
            let text: String = outputs.iter().map(|o| o.report.as_str()).collect::<Vec<_>>().join("\n");
            let path = dir.join("report.txt");
            write_atomic(&path, &text)?;
            written.push(path);
        }
        Ok(())
    })();
    match result {
        Ok(()) => Ok(written),
        Err(e) => {
            for p in &written {
                let _ = fs::remove_file(p);
            }
            Err(e)
        }
    }
}

/// Command-line values win over the file's, which win over the defaults.
fn settings_for(cfg: &ExperimentConfig, seed: Option<u64>, profile: Option<Profile>) -> Result<Settings> {
    let file_profile = match cfg.tolerance_profile.as_deref() {
        None => None,
        Some("strict") => Some(Profile::Strict),
        Some("fast") => Some(Profile::Fast),
        Some(p) => return Err(CliError::config("tolerance_profile", format!("unknown profile '{p}' (strict, fast)"))),
    };
    Ok(Settings {
        seed: seed.or(cfg.seed).unwrap_or_default(),
        profile: profile.or(file_profile).unwrap_or_default(),
    })
}

/// Validates every run, solves them on up to `jobs` threads, then writes all
/// artifacts. Each `Some` argument overrides the file's value.
pub fn run_experiment(
    cfg: &ExperimentConfig,
    out: Option<&Path>,
    jobs: Option<usize>,
    seed: Option<u64>,
    profile: Option<Profile>,
) -> Result<RunSummary> {
    let settings = settings_for(cfg, seed, profile)?;
    let runs: Vec<_> = cfg.runs.iter().flat_map(|r| r.expand()).collect();
    if runs.is_empty() {
        return Ok(RunSummary { outputs: Vec::new(), files: Vec::new(), status: Status::Ok });
    }
    let dir = out.map(Path::to_path_buf).or_else(|| cfg.out.clone()).unwrap_or_else(|| PathBuf::from("."));
    let mut seen = std::collections::BTreeSet::new();
    let plans: Vec<JobPlan> = runs
        .iter()
        .map(|r| {
            if !seen.insert(r.name.clone()) {
                return Err(CliError::config(r.name.clone(), "duplicate run name"));
            }
            plan(&r.name, &Params::new(r.entries.clone()), &settings).map_err(|e| match e {
                CliError::Config { key, message } => CliError::config(format!("{}.{key}", r.name), message),
                other => other,
            })
        })
        .collect::<Result<_>>()?;
    let threads = jobs.or(cfg.jobs).unwrap_or(1).max(1);
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| CliError::Numeric(format!("thread pool: {e}")))?;
    let outputs: Vec<JobOutput> = pool.install(|| plans.par_iter().map(JobPlan::execute).collect::<Result<_>>())?;
    let files = write_outputs(&dir, &outputs, true)?;
    let status = outputs.iter().map(|o| o.status).max().unwrap_or(Status::Ok);
    Ok(RunSummary { outputs, files, status })
}
