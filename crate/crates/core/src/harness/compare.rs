//! Paired SpeCon / DS runs.
//!
//! `compare` writes `specon/` and `ds/` run directories plus:
//!
//! - `comparison.csv`: `id,profile,specon_completion,ds_completion,delta,improvement`
//!   where `delta = ds - specon` seconds and `improvement` is `delta / ds` in percent
//! - `table.csv`: `Parameters,Reduced,Overall,Best,Makespan`, all percentages

use std::fs;
use std::path::Path;

use crate::error::{Error, Result};
use crate::harness::config::ScenarioConfig;
use crate::harness::report::{csv_err, fmt6, io_err, run, RunReport};
use crate::model::ContainerId;
use crate::scheduler::Policy;

#[derive(Clone, Debug, PartialEq)]
pub struct JobDelta {
    pub id: ContainerId,
    pub profile: String,
    pub specon: f64,
    pub ds: f64,
}

impl JobDelta {
    /// Seconds saved relative to the baseline.
    pub fn delta(&self) -> f64 {
        self.ds - self.specon
    }

    /// Saving as a percentage of the baseline completion time.
    pub fn improvement(&self) -> f64 {
        pct(self.ds, self.specon)
    }
}

/// One row of the comparison table; every field is a percentage.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ComparisonSummary {
    /// Share of jobs finishing strictly faster than the baseline.
    pub reduced: f64,
    /// Improvement of the average completion time.
    pub overall: f64,
    /// Largest single-job improvement.
    pub best: f64,
    pub makespan: f64,
}

#[derive(Clone, Debug)]
pub struct Comparison {
    pub parameters: String,
    pub specon: RunReport,
    pub ds: RunReport,
    pub jobs: Vec<JobDelta>,
    pub summary: ComparisonSummary,
}

fn pct(baseline: f64, candidate: f64) -> f64 {
    if baseline == 0.0 {
        0.0
    } else {
        100.0 * (baseline - candidate) / baseline
    }
}

pub fn parameter_label(config: &ScenarioConfig) -> String {
    format!("{}, {}s", config.monitor.alpha, config.monitor.interval)
}

/// Checks that two scenarios differ in nothing but the policy.
pub fn check_pair(a: &ScenarioConfig, b: &ScenarioConfig) -> Result<()> {
    if a.with_policy(Policy::Specon) != b.with_policy(Policy::Specon) {
        return Err(Error::Mismatch("paired scenarios differ beyond the policy".into()));
    }
    Ok(())
}

/// Tabulates two finished runs against each other, `candidate` versus `baseline`.
pub fn compare_reports(parameters: String, candidate: RunReport, mut baseline: RunReport) -> Result<Comparison> {
    if candidate.jobs.len() != baseline.jobs.len() {
        return Err(Error::Mismatch(format!(
            "job counts differ: {} vs {}",
            candidate.jobs.len(),
            baseline.jobs.len()
        )));
    }
    let mut jobs = Vec::with_capacity(candidate.jobs.len());
    for (c, b) in candidate.jobs.iter().zip(&baseline.jobs) {
        if c.id != b.id || c.profile != b.profile || c.submitted_at != b.submitted_at {
            return Err(Error::Mismatch(format!("submission streams differ at {}", c.id)));
        }
        jobs.push(JobDelta {
            id: c.id,
            profile: c.profile.clone(),
            specon: c.completion_time,
            ds: b.completion_time,
        });
    }
    let n = jobs.len() as f64;
    let summary = ComparisonSummary {
        reduced: 100.0 * jobs.iter().filter(|j| j.specon < j.ds).count() as f64 / n,
        overall: pct(baseline.summary.average_completion, candidate.summary.average_completion),
        best: jobs.iter().map(JobDelta::improvement).fold(f64::NEG_INFINITY, f64::max),
        makespan: pct(baseline.summary.makespan, candidate.summary.makespan),
    };
    let mut candidate = candidate;
    candidate.summary.pct_improved = Some(summary.reduced);
    baseline.summary.pct_improved = Some(0.0);
    Ok(Comparison { parameters, specon: candidate, ds: baseline, jobs, summary })
}

/// Runs the scenario under both policies with identical submissions.
pub fn compare(config: &ScenarioConfig) -> Result<Comparison> {
    let specon = config.with_policy(Policy::Specon);
    let ds = config.with_policy(Policy::Ds);
    check_pair(&specon, &ds)?;
    compare_reports(parameter_label(config), run(&specon)?, run(&ds)?)
}

pub fn write_table(path: &Path, rows: &[(String, ComparisonSummary)]) -> Result<()> {
    let mut out = csv::Writer::from_path(path).map_err(csv_err)?;
    out.write_record(["Parameters", "Reduced", "Overall", "Best", "Makespan"]).map_err(csv_err)?;
    for (label, s) in rows {
        out.write_record([label.clone(), fmt6(s.reduced), fmt6(s.overall), fmt6(s.best), fmt6(s.makespan)])
            .map_err(csv_err)?;
    }
    out.flush().map_err(io_err)
}

impl Comparison {
    pub fn write_to(&self, dir: &Path) -> Result<()> {
        fs::create_dir_all(dir).map_err(io_err)?;
        self.specon.write_to(&dir.join("specon"))?;
        self.ds.write_to(&dir.join("ds"))?;

        let mut out = csv::Writer::from_path(dir.join("comparison.csv")).map_err(csv_err)?;
        out.write_record(["id", "profile", "specon_completion", "ds_completion", "delta", "improvement"])
            .map_err(csv_err)?;
        for j in &self.jobs {
            out.write_record([
                j.id.to_string(),
                j.profile.clone(),
                fmt6(j.specon),
                fmt6(j.ds),
                fmt6(j.delta()),
                fmt6(j.improvement()),
            ])
            .map_err(csv_err)?;
        }
        out.flush().map_err(io_err)?;

        write_table(&dir.join("table.csv"), &[(self.parameters.clone(), self.summary)])
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pct_of_zero_baseline_is_zero() {
        assert_eq!(pct(0.0, 5.0), 0.0);
        assert_eq!(pct(200.0, 150.0), 25.0);
    }

    #[test]
    fn pairs_must_match_beyond_policy() {
        let a = ScenarioConfig::default();
        assert!(check_pair(&a, &a.with_policy(Policy::Ds)).is_ok());
        assert!(matches!(check_pair(&a, &a.with_seed(7)), Err(Error::Mismatch(_))));
    }

    #[test]
    fn identical_policies_give_zero_deltas() {
        let mut config = ScenarioConfig::default();
        config.workload.n_jobs = 6;
        let a = run(&config).unwrap();
        let b = run(&config).unwrap();
        let cmp = compare_reports(parameter_label(&config), a, b).unwrap();
        assert!(cmp.jobs.iter().all(|j| j.delta() == 0.0));
        assert_eq!(cmp.summary, ComparisonSummary { reduced: 0.0, overall: 0.0, best: 0.0, makespan: 0.0 });
    }

    #[test]
    fn label_has_alpha_and_interval() {
        assert_eq!(parameter_label(&ScenarioConfig::default()), "0.01, 30s");
    }
}
