use std::fs;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::spec::ExperimentSpec;
use crate::agent::{
    random_policy_run, train, write_metrics_csv, AgentBundle, EpisodeLog, INIT_STREAM,
};
use crate::error::{Error, Result};
use crate::reactor::{write_trajectory_csv, TrajectoryRow};
use crate::rng::Rng;

const REPORT_VERSION: u32 = 1;
/// Caps the number of seeds trained concurrently.
pub const THREADS_ENV: &str = "TASAC_THREADS";
/// Commit recorded in report metadata; `unknown` when unset.
pub const COMMIT_ENV: &str = "TASAC_COMMIT";

pub const REPORT_FILE: &str = "report.json";
pub const MATRIX_FILE: &str = "itae_matrix.csv";
pub const RUN_INFO_FILE: &str = "run_info.json";

pub fn metrics_file(seed: u64) -> String {
    format!("metrics_seed{seed}.csv")
}

pub fn trajectory_file(seed: u64) -> String {
    format!("trajectory_seed{seed}.csv")
}

/// Outcome of one seed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeedRun {
    pub seed: u64,
    /// ITAE per episode.
    pub itae: Vec<f64>,
    /// Episodic return per episode.
    pub returns: Vec<f64>,
    /// Mean ITAE over the trailing window, when the seed completed.
    pub windowed_itae: Option<f64>,
    /// Mean ITAE of uniformly random actions over `window` batches.
    pub random_policy_itae: Option<f64>,
    pub aborted_episodes: Vec<usize>,
    /// Reason the seed is left out of the aggregate.
    pub failure: Option<String>,
}

/// Everything a multi-seed run produced. Serialized parts are deterministic
/// for a fixed spec; wall-clock data lives in [`RunInfo`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub format_version: u32,
    pub label: String,
    pub config_hash: String,
    pub commit: String,
    pub spec: ExperimentSpec,
    pub window: usize,
    /// Sorted by seed.
    pub runs: Vec<SeedRun>,
    /// Mean of the trailing-window ITAE entries of all included seeds.
    pub aggregate_itae: Option<f64>,
    /// Sample standard deviation of the per-seed windowed means.
    pub seed_std_itae: Option<f64>,
    pub included_seeds: Vec<u64>,
    #[serde(skip)]
    pub details: Vec<SeedDetail>,
}

/// Per-seed logs kept in memory and written as CSV.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct SeedDetail {
    pub seed: u64,
    pub episodes: Vec<EpisodeLog>,
    pub final_trajectory: Vec<TrajectoryRow>,
}

/// Timing metadata, written next to the report.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunInfo {
    pub started_unix: f64,
    pub finished_unix: f64,
    pub threads: usize,
}

fn unix_now() -> f64 {
    std::time::SystemTime::now()
        .duration_since(std::time::UNIX_EPOCH)
        .map_or(0.0, |d| d.as_secs_f64())
}

/// Thread cap from the environment, if set to a positive integer.
pub fn thread_cap() -> Result<Option<usize>> {
    match std::env::var(THREADS_ENV) {
        Err(_) => Ok(None),
        Ok(v) => match v.trim().parse::<usize>() {
            Ok(n) if n > 0 => Ok(Some(n)),
            _ => Err(Error::config(format!(
                "{THREADS_ENV}={v} is not a positive integer"
            ))),
        },
    }
}

fn run_seed(spec: &ExperimentSpec, seed: u64, window: usize) -> (SeedRun, SeedDetail) {
    let random =
        random_policy_run(&spec.env, window, seed).map(|v| v.iter().sum::<f64>() / v.len() as f64);
    let trained = AgentBundle::new(
        2,
        1,
        spec.algorithm.actor_count(),
        spec.strategy,
        spec.hyper.clone(),
        &mut Rng::with_stream(seed, INIT_STREAM),
    )
    .and_then(|b| train(b, &spec.env, spec.episodes, seed));
    let mut run = SeedRun {
        seed,
        itae: Vec::new(),
        returns: Vec::new(),
        windowed_itae: None,
        random_policy_itae: random.as_ref().ok().copied(),
        aborted_episodes: Vec::new(),
        failure: None,
    };
    let mut detail = SeedDetail {
        seed,
        ..SeedDetail::default()
    };
    match (trained, random) {
        (Ok((_, log)), Ok(_)) => {
            run.itae = log.itae();
            run.returns = log.episodes.iter().map(|e| e.episode_return).collect();
            run.aborted_episodes = log
                .episodes
                .iter()
                .filter(|e| e.aborted)
                .map(|e| e.episode)
                .collect();
            if run.aborted_episodes.is_empty() {
                let tail = &run.itae[run.itae.len() - window..];
                run.windowed_itae = Some(tail.iter().sum::<f64>() / window as f64);
            } else {
                run.failure = Some(format!("{} aborted episodes", run.aborted_episodes.len()));
            }
            detail.episodes = log.episodes;
            detail.final_trajectory = log.final_trajectory;
        }
        (Err(e), _) | (_, Err(e)) => run.failure = Some(e.to_string()),
    }
    if let Some(f) = &run.failure {
        log::warn!("seed {seed} excluded from the aggregate: {f}");
    }
    (run, detail)
}

/// Aggregate over the included seeds, summing in seed order.
fn aggregate(runs: &[SeedRun], window: usize) -> (Option<f64>, Option<f64>, Vec<u64>) {
    let included: Vec<&SeedRun> = runs.iter().filter(|r| r.windowed_itae.is_some()).collect();
    if included.is_empty() {
        return (None, None, Vec::new());
    }
    let mut sum = 0.0;
    for r in &included {
        sum += r.itae[r.itae.len() - window..].iter().sum::<f64>();
    }
    let mean = sum / (included.len() * window) as f64;
    let std = if included.len() > 1 {
        let means: Vec<f64> = included
            .iter()
            .map(|r| r.windowed_itae.unwrap_or(0.0))
            .collect();
        let m = means.iter().sum::<f64>() / means.len() as f64;
        let var = means.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / (means.len() - 1) as f64;
        Some(var.sqrt())
    } else {
        None
    };
    (Some(mean), std, included.iter().map(|r| r.seed).collect())
}

/// Train every seed of `spec` (in parallel, up to the thread cap) and
/// assemble the report.
pub fn run_experiment(spec: &ExperimentSpec) -> Result<RunReport> {
    spec.validate()?;
    let window = spec.effective_window();
    let mut seeds = spec.seeds.clone();
    seeds.sort_unstable();
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(n) = thread_cap()? {
        builder = builder.num_threads(n);
    }
    let pool = builder.build().map_err(|e| Error::config(e.to_string()))?;
    let results: Vec<(SeedRun, SeedDetail)> = pool.install(|| {
        seeds
            .par_iter()
            .map(|&s| run_seed(spec, s, window))
            .collect()
    });
    let (runs, details): (Vec<_>, Vec<_>) = results.into_iter().unzip();
    let (aggregate_itae, seed_std_itae, included_seeds) = aggregate(&runs, window);
    let mut stored = spec.clone();
    stored.seeds = seeds;
    Ok(RunReport {
        format_version: REPORT_VERSION,
        label: spec.label(),
        config_hash: spec.config_hash()?,
        commit: std::env::var(COMMIT_ENV).unwrap_or_else(|_| "unknown".to_string()),
        spec: stored,
        window,
        runs,
        aggregate_itae,
        seed_std_itae,
        included_seeds,
        details,
    })
}

impl RunReport {
    /// Recompute the aggregate from the stored matrix.
    pub fn recomputed_aggregate(&self) -> Option<f64> {
        aggregate(&self.runs, self.window).0
    }

    /// Write `report.json`, `itae_matrix.csv` and per-seed metrics and
    /// trajectory CSVs into `dir`.
    pub fn write(&self, dir: impl AsRef<Path>) -> Result<Vec<PathBuf>> {
        let dir = dir.as_ref();
        fs::create_dir_all(dir)?;
        let mut written = Vec::new();

        let path = dir.join(REPORT_FILE);
        let mut json = serde_json::to_string_pretty(self)?;
        json.push('\n');
        fs::write(&path, json)?;
        written.push(path);

        let path = dir.join(MATRIX_FILE);
        self.write_matrix(&path)?;
        written.push(path);

        for d in &self.details {
            if !d.episodes.is_empty() {
                let path = dir.join(metrics_file(d.seed));
                write_metrics_csv(&d.episodes, &path)?;
                written.push(path);
            }
            if !d.final_trajectory.is_empty() {
                let path = dir.join(trajectory_file(d.seed));
                write_trajectory_csv(&d.final_trajectory, &path)?;
                written.push(path);
            }
        }
        Ok(written)
    }

    /// Rows are episodes, columns are seeds.
    fn write_matrix(&self, path: &Path) -> Result<()> {
        let mut w = csv::Writer::from_path(path)?;
        let mut header = vec!["episode".to_string()];
        header.extend(self.runs.iter().map(|r| format!("seed_{}", r.seed)));
        w.write_record(&header)?;
        for ep in 0..self.spec.episodes {
            let mut rec = vec![ep.to_string()];
            rec.extend(
                self.runs
                    .iter()
                    .map(|r| r.itae.get(ep).map_or_else(String::new, |v| v.to_string())),
            );
            w.write_record(&rec)?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let path = if path.is_dir() {
            path.join(REPORT_FILE)
        } else {
            path.to_path_buf()
        };
        let text = fs::read_to_string(&path)
            .map_err(|e| Error::config(format!("cannot read report {}: {e}", path.display())))?;
        let report: RunReport = serde_json::from_str(&text)?;
        if report.format_version != REPORT_VERSION {
            return Err(Error::Format(format!(
                "unsupported report version {}",
                report.format_version
            )));
        }
        Ok(report)
    }
}

/// Write `run_info.json` for a run that started at `started_unix`.
pub fn write_run_info(dir: impl AsRef<Path>, started_unix: f64) -> Result<()> {
    let info = RunInfo {
        started_unix,
        finished_unix: unix_now(),
        threads: thread_cap()?.unwrap_or_else(rayon::current_num_threads),
    };
    fs::write(
        dir.as_ref().join(RUN_INFO_FILE),
        serde_json::to_string_pretty(&info)?,
    )?;
    Ok(())
}

pub fn now_unix() -> f64 {
    unix_now()
}
