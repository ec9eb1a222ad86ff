use std::path::Path;

use serde::{Deserialize, Serialize};

use super::report::RunReport;
use crate::error::{Error, Result};

/// Relative ITAE improvement of `a` over `b`, in percent: `100 (b - a) / a`.
pub fn improvement_pct(itae_a: f64, itae_b: f64) -> f64 {
    100.0 * (itae_b - itae_a) / itae_a
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComparisonRow {
    pub label: String,
    pub itae: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Improvement {
    pub better: String,
    pub than: String,
    pub percent: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Comparison {
    pub scenario: String,
    pub rows: Vec<ComparisonRow>,
    /// One entry per ordered pair of distinct reports.
    pub improvements: Vec<Improvement>,
}

/// Compare labelled aggregate ITAE values measured on one scenario.
pub fn compare_values(scenario: &str, rows: Vec<ComparisonRow>) -> Result<Comparison> {
    if rows.len() < 2 {
        return Err(Error::usage("a comparison needs at least two results"));
    }
    let mut improvements = Vec::new();
    for (i, a) in rows.iter().enumerate() {
        for (j, b) in rows.iter().enumerate() {
            if i != j {
                improvements.push(Improvement {
                    better: a.label.clone(),
                    than: b.label.clone(),
                    percent: improvement_pct(a.itae, b.itae),
                });
            }
        }
    }
    Ok(Comparison {
        scenario: scenario.to_string(),
        rows,
        improvements,
    })
}

/// Pairwise improvements between reports run on the same scenario.
pub fn compare_report(reports: &[RunReport]) -> Result<Comparison> {
    let first = reports
        .first()
        .ok_or_else(|| Error::usage("a comparison needs at least two reports"))?;
    if let Some(other) = reports
        .iter()
        .find(|r| r.spec.env.scenario != first.spec.env.scenario)
    {
        return Err(Error::config(format!(
            "scenario mismatch: {} ran {:?}, {} ran {:?}",
            first.label, first.spec.env.scenario, other.label, other.spec.env.scenario
        )));
    }
    let rows = reports
        .iter()
        .map(|r| {
            r.aggregate_itae
                .map(|itae| ComparisonRow {
                    label: r.label.clone(),
                    itae,
                })
                .ok_or_else(|| Error::usage(format!("report {} has no aggregate", r.label)))
        })
        .collect::<Result<Vec<_>>>()?;
    compare_values(first.spec.env.scenario.name(), rows)
}

impl Comparison {
    /// `comparison.csv` with the table, `improvements.csv` with the pairs.
    pub fn write(&self, dir: impl AsRef<Path>) -> Result<()> {
        let dir = dir.as_ref();
        std::fs::create_dir_all(dir)?;
        let mut w = csv::Writer::from_path(dir.join("comparison.csv"))?;
        w.write_record(["scenario", "label", "average_itae"])?;
        for r in &self.rows {
            w.write_record([
                self.scenario.as_str(),
                r.label.as_str(),
                &r.itae.to_string(),
            ])?;
        }
        w.flush()?;
        let mut w = csv::Writer::from_path(dir.join("improvements.csv"))?;
        w.write_record(["scenario", "better", "than", "improvement_pct"])?;
        for i in &self.improvements {
            w.write_record([
                self.scenario.as_str(),
                i.better.as_str(),
                i.than.as_str(),
                &i.percent.to_string(),
            ])?;
        }
        w.flush()?;
        Ok(())
    }
}
