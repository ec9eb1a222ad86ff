use std::fs;
use std::path::{Path, PathBuf};

use super::report::{trajectory_file, RunReport};
use crate::error::{Error, Result};

pub const REWARD_FILE: &str = "reward_curve.csv";
pub const TRACKING_FILE: &str = "tracking.csv";
pub const GNUPLOT_FILE: &str = "plots.gp";

fn csv_text(header: &[&str], rows: &[Vec<String>]) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(header)?;
    for r in rows {
        w.write_record(r)?;
    }
    String::from_utf8(w.into_inner().map_err(|e| Error::Format(e.to_string()))?)
        .map_err(|e| Error::Format(e.to_string()))
}

/// Episode-by-episode return across seeds: mean, sample std, min, max, then
/// one column per seed.
fn reward_rows(report: &RunReport) -> Result<(Vec<String>, Vec<Vec<String>>)> {
    let runs: Vec<_> = report
        .runs
        .iter()
        .filter(|r| !r.returns.is_empty())
        .collect();
    if runs.is_empty() {
        return Err(Error::usage(format!(
            "report {} holds no completed episodes",
            report.label
        )));
    }
    let episodes = runs.iter().map(|r| r.returns.len()).min().unwrap_or(0);
    let mut header: Vec<String> = [
        "episode",
        "mean_return",
        "std_return",
        "min_return",
        "max_return",
    ]
    .iter()
    .map(|s| s.to_string())
    .collect();
    header.extend(runs.iter().map(|r| format!("seed_{}", r.seed)));
    let rows = (0..episodes)
        .map(|ep| {
            let v: Vec<f64> = runs.iter().map(|r| r.returns[ep]).collect();
            let n = v.len() as f64;
            let mean = v.iter().sum::<f64>() / n;
            let std = if v.len() > 1 {
                (v.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / (n - 1.0)).sqrt()
            } else {
                0.0
            };
            let min = v.iter().copied().fold(f64::INFINITY, f64::min);
            let max = v.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            let mut row = vec![
                ep.to_string(),
                mean.to_string(),
                std.to_string(),
                min.to_string(),
                max.to_string(),
            ];
            row.extend(v.iter().map(|x| x.to_string()));
            row
        })
        .collect();
    Ok((header, rows))
}

/// `t, T_r` copied verbatim from a seed's trajectory log, plus the setpoint.
fn tracking_rows(
    report: &RunReport,
    report_dir: &Path,
    seed: Option<u64>,
) -> Result<Vec<Vec<String>>> {
    let seed = match seed {
        Some(s) => s,
        None => *report
            .included_seeds
            .first()
            .or_else(|| report.runs.first().map(|r| &r.seed))
            .ok_or_else(|| Error::usage("report has no seeds"))?,
    };
    let path = report_dir.join(trajectory_file(seed));
    let mut reader = csv::Reader::from_path(&path).map_err(|e| {
        Error::usage(format!(
            "no trajectory for seed {seed} at {}: {e}",
            path.display()
        ))
    })?;
    let headers = reader.headers()?.clone();
    let col = |name: &str| {
        headers
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| Error::Format(format!("{} lacks column {name}", path.display())))
    };
    let (ti, tri) = (col("t")?, col("T_r")?);
    let setpoint = report.spec.env.control.setpoint.to_string();
    let mut rows = Vec::new();
    for rec in reader.records() {
        let rec = rec?;
        rows.push(vec![
            rec[ti].to_string(),
            rec[tri].to_string(),
            setpoint.clone(),
        ]);
    }
    if rows.is_empty() {
        return Err(Error::usage(format!(
            "trajectory {} is empty",
            path.display()
        )));
    }
    Ok(rows)
}

fn gnuplot_script() -> String {
    format!(
        "set datafile separator ','\n\
         set key autotitle columnhead\n\
         set terminal pngcairo size 900,600\n\
         set output 'reward_curve.png'\n\
         set xlabel 'episode'\n\
         set ylabel 'return'\n\
         plot '{REWARD_FILE}' using 1:($2-$3):($2+$3) with filledcurves title 'mean +/- std', \\\n\
         \x20    '' using 1:2 with lines lw 2 title 'mean'\n\
         set output 'tracking.png'\n\
         set xlabel 't [s]'\n\
         set ylabel 'T [K]'\n\
         plot '{TRACKING_FILE}' using 1:2 with lines title 'T_r', '' using 1:3 with lines dt 2 title 'T_ref'\n"
    )
}

/// Write the reward curve, tracking CSV and a gnuplot script into `out`.
/// Nothing is written unless every input is valid.
pub fn emit_plots(
    report: &RunReport,
    report_dir: impl AsRef<Path>,
    out: impl AsRef<Path>,
    seed: Option<u64>,
) -> Result<Vec<PathBuf>> {
    let (header, rows) = reward_rows(report)?;
    let header: Vec<&str> = header.iter().map(String::as_str).collect();
    let reward = csv_text(&header, &rows)?;
    let tracking = csv_text(
        &["t", "T_r", "T_ref"],
        &tracking_rows(report, report_dir.as_ref(), seed)?,
    )?;

    let out = out.as_ref();
    fs::create_dir_all(out)?;
    let files = [
        (out.join(REWARD_FILE), reward),
        (out.join(TRACKING_FILE), tracking),
        (out.join(GNUPLOT_FILE), gnuplot_script()),
    ];
    for (path, text) in &files {
        fs::write(path, text)?;
    }
    Ok(files.into_iter().map(|(p, _)| p).collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::agent::{Algorithm, SelectionStrategy};
    use crate::bench::{run_experiment, ExperimentSpec};
    use crate::reactor::Scenario;

    fn report(episodes: usize) -> RunReport {
        let mut s =
            ExperimentSpec::desk(Scenario::Nominal, Algorithm::Sac, SelectionStrategy::MinMin);
        s.seeds = vec![0, 1];
        s.episodes = episodes;
        s.window = Some(1);
        s.hyper.hidden_layers = vec![8];
        s.hyper.batch_size = 8;
        s.env.control.batch_duration = 600.0;
        run_experiment(&s).unwrap()
    }

    #[test]
    fn reward_rows_equal_episodes_and_tracking_matches_log() {
        let r = report(3);
        let dir = tempfile::tempdir().unwrap();
        r.write(dir.path()).unwrap();
        let out = dir.path().join("plots");
        emit_plots(&r, dir.path(), &out, None).unwrap();

        let reward = fs::read_to_string(out.join(REWARD_FILE)).unwrap();
        assert_eq!(reward.lines().count(), 1 + 3);

        let mut log = csv::Reader::from_path(dir.path().join(trajectory_file(0))).unwrap();
        let mut track = csv::Reader::from_path(out.join(TRACKING_FILE)).unwrap();
        let a: Vec<(String, String)> = log
            .records()
            .map(|r| {
                let r = r.unwrap();
                (r[0].to_string(), r[1].to_string())
            })
            .collect();
        let b: Vec<(String, String)> = track
            .records()
            .map(|r| {
                let r = r.unwrap();
                (r[0].to_string(), r[1].to_string())
            })
            .collect();
        assert_eq!(a, b);
    }

    #[test]
    fn empty_report_writes_nothing() {
        let mut r = report(1);
        for run in &mut r.runs {
            run.returns.clear();
        }
        let dir = tempfile::tempdir().unwrap();
        let out = dir.path().join("plots");
        assert!(emit_plots(&r, dir.path(), &out, None).is_err());
        assert!(!out.exists());
    }
}
