use crate::error::{Error, Result};
use crate::model::{ContainerId, SimTime, WorkerId};

/// Per-job outcome of a run.
#[derive(Clone, Debug, PartialEq)]
pub struct JobRecord {
    pub id: ContainerId,
    pub profile: String,
    pub initial_host: WorkerId,
    pub final_host: WorkerId,
    pub submitted_at: SimTime,
    pub completed_at: Option<SimTime>,
    pub n_migrations: u32,
    pub rebalanced: bool,
}

pub fn completion_time(job: &JobRecord) -> Result<f64> {
    job.completed_at.map(|done| done - job.submitted_at).ok_or(Error::Unfinished(1))
}

fn check_finished(jobs: &[JobRecord]) -> Result<()> {
    if jobs.is_empty() {
        return Err(Error::Unfinished(0));
    }
    let open = jobs.iter().filter(|j| j.completed_at.is_none()).count();
    if open > 0 {
        return Err(Error::Unfinished(open));
    }
    Ok(())
}

/// Last completion minus first submission.
pub fn makespan(jobs: &[JobRecord]) -> Result<f64> {
    check_finished(jobs)?;
    let first = jobs.iter().map(|j| j.submitted_at).fold(f64::INFINITY, f64::min);
    let last = jobs.iter().filter_map(|j| j.completed_at).fold(f64::NEG_INFINITY, f64::max);
    Ok(last - first)
}

pub fn average_completion(jobs: &[JobRecord]) -> Result<f64> {
    check_finished(jobs)?;
    let total: f64 = jobs.iter().map(completion_time).sum::<Result<f64>>()?;
    Ok(total / jobs.len() as f64)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn job(id: u32, submitted_at: f64, completed_at: Option<f64>) -> JobRecord {
        JobRecord {
            id: ContainerId(id),
            profile: "vae-T".into(),
            initial_host: WorkerId(0),
            final_host: WorkerId(0),
            submitted_at,
            completed_at,
            n_migrations: 0,
            rebalanced: false,
        }
    }

    #[test]
    fn single_job() {
        let jobs = [job(0, 0.0, Some(100.0))];
        assert_eq!(completion_time(&jobs[0]).unwrap(), 100.0);
        assert_eq!(makespan(&jobs).unwrap(), 100.0);
    }

    #[test]
    fn two_jobs() {
        let jobs = [job(0, 0.0, Some(100.0)), job(1, 50.0, Some(300.0))];
        assert_eq!(makespan(&jobs).unwrap(), 300.0);
        assert_eq!(average_completion(&jobs).unwrap(), 175.0);
    }

    #[test]
    fn unfinished_run_is_an_error() {
        let jobs = [job(0, 0.0, Some(100.0)), job(1, 50.0, None)];
        assert_eq!(makespan(&jobs), Err(Error::Unfinished(1)));
        assert!(average_completion(&jobs).is_err());
        assert!(completion_time(&jobs[1]).is_err());
    }
}
