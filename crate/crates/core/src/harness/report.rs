//! Run reports and their CSV files.
//!
//! Every run writes, into its output directory:
//!
//! - `jobs.csv`: `id,profile,initial_worker,final_worker,submitted_at,completed_at,completion_time,n_migrations,rebalanced`
//! - `summary.csv`: `label,policy,seed,n_jobs,average_completion,makespan,pct_improved`
//!   (`pct_improved` is empty unless the run was paired with a baseline)
//! - `timeline_w<i>.csv`: `time,containers,cpu_fraction`, one row per simulated second
//! - `events.log`: `time,kind,container,worker,detail`
//!
//! Reals are printed with six decimals.

use std::fs::{self, File};
use std::io::BufWriter;
use std::path::Path;

use crate::engine::{average_completion, completion_time, makespan, JobRecord, RunRecord, Simulation};
use crate::error::{Error, Result};
use crate::harness::config::ScenarioConfig;
use crate::model::{ContainerId, SimTime, WorkerId};
use crate::scheduler::Policy;

#[derive(Clone, Debug, PartialEq)]
pub struct JobRow {
    pub id: ContainerId,
    pub profile: String,
    pub initial_worker: WorkerId,
    pub final_worker: WorkerId,
    pub submitted_at: SimTime,
    pub completed_at: SimTime,
    pub completion_time: f64,
    pub n_migrations: u32,
    pub rebalanced: bool,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Summary {
    pub n_jobs: usize,
    pub average_completion: f64,
    pub makespan: f64,
    /// Share of jobs finishing faster than in the paired baseline run.
    pub pct_improved: Option<f64>,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TimelineSample {
    pub time: SimTime,
    pub containers: usize,
    pub cpu_fraction: f64,
}

#[derive(Clone, Debug)]
pub struct RunReport {
    pub label: String,
    pub policy: Policy,
    pub seed: u64,
    pub jobs: Vec<JobRow>,
    pub summary: Summary,
    /// One series per worker, sampled every simulated second.
    pub timelines: Vec<Vec<TimelineSample>>,
    pub record: RunRecord,
}

/// Executes one scenario to quiescence.
pub fn run(config: &ScenarioConfig) -> Result<RunReport> {
    config.validate()?;
    let schedule = config.schedule()?;
    let record = Simulation::new(config.sim_params(), schedule)?.run()?;
    RunReport::from_record(config, record)
}

fn job_row(job: &JobRecord) -> Result<JobRow> {
    Ok(JobRow {
        id: job.id,
        profile: job.profile.clone(),
        initial_worker: job.initial_host,
        final_worker: job.final_host,
        submitted_at: job.submitted_at,
        completed_at: job.completed_at.ok_or(Error::Unfinished(1))?,
        completion_time: completion_time(job)?,
        n_migrations: job.n_migrations,
        rebalanced: job.rebalanced,
    })
}

impl RunReport {
    pub fn from_record(config: &ScenarioConfig, record: RunRecord) -> Result<Self> {
        let jobs = record.jobs.iter().map(job_row).collect::<Result<Vec<_>>>()?;
        let summary = Summary {
            n_jobs: jobs.len(),
            average_completion: average_completion(&record.jobs)?,
            makespan: makespan(&record.jobs)?,
            pct_improved: None,
        };
        let last = record.end_time.ceil() as u64;
        let timelines = (0..record.n_workers)
            .map(|w| {
                (0..=last)
                    .map(|s| {
                        let t = s as f64;
                        let point = record.timeline_at(t).expect("timeline starts at zero");
                        TimelineSample {
                            time: t,
                            containers: point.counts[w],
                            cpu_fraction: point.cpu_fraction[w],
                        }
                    })
                    .collect()
            })
            .collect();
        Ok(Self {
            label: config.label.clone(),
            policy: config.policy,
            seed: config.seed,
            jobs,
            summary,
            timelines,
            record,
        })
    }

    /// Summary statistics recomputed from the per-job rows.
    pub fn recompute_summary(&self) -> Summary {
        let n = self.jobs.len();
        let average = self.jobs.iter().map(|j| j.completion_time).sum::<f64>() / n as f64;
        let first = self.jobs.iter().map(|j| j.submitted_at).fold(f64::INFINITY, f64::min);
        let last = self.jobs.iter().map(|j| j.completed_at).fold(f64::NEG_INFINITY, f64::max);
        Summary {
            n_jobs: n,
            average_completion: average,
            makespan: last - first,
            pct_improved: self.summary.pct_improved,
        }
    }

    pub fn write_to(&self, dir: &Path) -> Result<()> {
        fs::create_dir_all(dir).map_err(io_err)?;

        let mut jobs = csv::Writer::from_path(dir.join("jobs.csv")).map_err(csv_err)?;
        jobs.write_record([
            "id",
            "profile",
            "initial_worker",
            "final_worker",
            "submitted_at",
            "completed_at",
            "completion_time",
            "n_migrations",
            "rebalanced",
        ])
        .map_err(csv_err)?;
        for j in &self.jobs {
            jobs.write_record([
                j.id.to_string(),
                j.profile.clone(),
                j.initial_worker.to_string(),
                j.final_worker.to_string(),
                fmt6(j.submitted_at),
                fmt6(j.completed_at),
                fmt6(j.completion_time),
                j.n_migrations.to_string(),
                j.rebalanced.to_string(),
            ])
            .map_err(csv_err)?;
        }
        jobs.flush().map_err(io_err)?;

        let mut summary = csv::Writer::from_path(dir.join("summary.csv")).map_err(csv_err)?;
        summary
            .write_record(["label", "policy", "seed", "n_jobs", "average_completion", "makespan", "pct_improved"])
            .map_err(csv_err)?;
        let s = &self.summary;
        summary
            .write_record([
                self.label.clone(),
                self.policy.to_string(),
                self.seed.to_string(),
                s.n_jobs.to_string(),
                fmt6(s.average_completion),
                fmt6(s.makespan),
                s.pct_improved.map(fmt6).unwrap_or_default(),
            ])
            .map_err(csv_err)?;
        summary.flush().map_err(io_err)?;

        for (w, series) in self.timelines.iter().enumerate() {
            let path = dir.join(format!("timeline_{}.csv", WorkerId(w as u32)));
            let mut out = csv::Writer::from_path(path).map_err(csv_err)?;
            out.write_record(["time", "containers", "cpu_fraction"]).map_err(csv_err)?;
            for p in series {
                out.write_record([fmt6(p.time), p.containers.to_string(), fmt6(p.cpu_fraction)])
                    .map_err(csv_err)?;
            }
            out.flush().map_err(io_err)?;
        }

        let log = File::create(dir.join("events.log")).map_err(io_err)?;
        self.record.log.write_to(BufWriter::new(log)).map_err(io_err)?;
        Ok(())
    }
}

pub(crate) fn fmt6(x: f64) -> String {
    format!("{x:.6}")
}

pub(crate) fn io_err(e: std::io::Error) -> Error {
    Error::Config(format!("i/o: {e}"))
}

pub(crate) fn csv_err(e: csv::Error) -> Error {
    Error::Config(format!("csv: {e}"))
}
