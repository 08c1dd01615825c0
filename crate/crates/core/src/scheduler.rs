//! Manager-side placement: weighted worker scores, the minimum-score
//! candidate set, and the choice between staying put and migrating.

use std::collections::BTreeSet;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{Category, ClusterState, ContainerId, SchedulerConfig, SimTime, WorkerId};
use crate::monitor::ReallocationRequest;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Policy {
    /// Progress-aware speculative migration plus rebalancing.
    #[default]
    Specon,
    /// Fixed placement; requests and rebalance checks are ignored.
    Ds,
}

impl Policy {
    pub fn name(self) -> &'static str {
        match self {
            Policy::Specon => "specon",
            Policy::Ds => "ds",
        }
    }
}

impl fmt::Display for Policy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Policy {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "specon" => Ok(Policy::Specon),
            "ds" => Ok(Policy::Ds),
            other => Err(Error::Config(format!("unknown policy `{other}`"))),
        }
    }
}

/// Per-worker weighted score, indexed by worker id.
#[derive(Clone, Debug, PartialEq)]
pub struct ScoreTable {
    pub scores: Vec<f64>,
}

impl ScoreTable {
    pub fn min(&self) -> Option<f64> {
        self.scores.iter().copied().reduce(f64::min)
    }

    /// Workers attaining the minimum score, in id order.
    pub fn candidates(&self) -> Vec<WorkerId> {
        candidate_set(&self.scores)
    }
}

pub fn candidate_set(scores: &[f64]) -> Vec<WorkerId> {
    let Some(min) = scores.iter().copied().reduce(f64::min) else {
        return Vec::new();
    };
    scores
        .iter()
        .enumerate()
        .filter(|(_, &s)| s == min)
        .map(|(i, _)| WorkerId(i as u32))
        .collect()
}

pub fn score_workers(cluster: &ClusterState, config: &SchedulerConfig) -> ScoreTable {
    let scores = cluster
        .workers
        .iter()
        .map(|w| {
            [Category::Progressing, Category::Watching, Category::Converged]
                .into_iter()
                .map(|cat| {
                    let n = w
                        .category_set(cat)
                        .iter()
                        .filter(|c| cluster.containers[c.index()].is_active())
                        .count();
                    n as f64 * config.weight(cat)
                })
                .sum()
        })
        .collect();
    ScoreTable { scores }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Placement {
    Stay,
    Migrate(WorkerId),
}

/// Placement rule on plain vectors: stay if the current host has a minimum
/// score, otherwise take the minimum-score worker with the lowest resource
/// consumption, lower id first on exact ties.
pub fn choose_target(current: WorkerId, scores: &[f64], consumption: &[f64]) -> Placement {
    let candidates = candidate_set(scores);
    if candidates.contains(&current) {
        return Placement::Stay;
    }
    match candidates.as_slice() {
        [] => Placement::Stay,
        [only] => Placement::Migrate(*only),
        many => {
            let best = many
                .iter()
                .copied()
                .reduce(|best, w| {
                    if consumption[w.index()] < consumption[best.index()] {
                        w
                    } else {
                        best
                    }
                })
                .expect("non-empty candidate set");
            Placement::Migrate(best)
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Decision {
    pub time: SimTime,
    pub container: ContainerId,
    pub from: WorkerId,
    pub placement: Placement,
    pub scores: Vec<f64>,
    pub consumption: Vec<f64>,
}

impl Decision {
    pub fn target(&self) -> WorkerId {
        match self.placement {
            Placement::Stay => self.from,
            Placement::Migrate(w) => w,
        }
    }
}

/// Handles reallocation requests. Remembers which containers it has already
/// decided on so repeated requests are dropped.
#[derive(Clone, Debug)]
pub struct Manager {
    config: SchedulerConfig,
    policy: Policy,
    handled: BTreeSet<ContainerId>,
}

impl Manager {
    pub fn new(config: SchedulerConfig, policy: Policy) -> Self {
        Self { config, policy, handled: BTreeSet::new() }
    }

    pub fn policy(&self) -> Policy {
        self.policy
    }

    /// Decides where the requesting container should run and marks it
    /// migrated. Returns `None` for stale or duplicate requests and under
    /// the baseline policy. The caller performs any resulting migration.
    pub fn select_target(
        &mut self,
        request: &ReallocationRequest,
        cluster: &mut ClusterState,
    ) -> Result<Option<Decision>> {
        if self.policy == Policy::Ds || self.handled.contains(&request.container) {
            return Ok(None);
        }
        let container = cluster.container(request.container)?;
        if !container.is_active() || container.migrated {
            log::debug!("dropping stale request for {}", request.container);
            return Ok(None);
        }
        let from = container.host;
        let scores = score_workers(cluster, &self.config).scores;
        let consumption = cluster
            .worker_ids()
            .map(|w| cluster.resource_consumption(w))
            .collect::<Result<Vec<_>>>()?;
        let placement = choose_target(from, &scores, &consumption);

        self.handled.insert(request.container);
        let now = cluster.now;
        let container = cluster.container_mut(request.container)?;
        container.migrated = true;
        container.converged_at = Some(now);
        Ok(Some(Decision { time: now, container: request.container, from, placement, scores, consumption }))
    }
}

/// Round-robin by submission order.
pub fn initial_placement(job_index: usize, n_workers: usize) -> Result<WorkerId> {
    if n_workers == 0 {
        return Err(Error::NoWorkers);
    }
    Ok(WorkerId((job_index % n_workers) as u32))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::workload::{calibrate_profile, ProfileKind};
    use proptest::prelude::*;

    fn weights() -> SchedulerConfig {
        SchedulerConfig::default()
    }

    #[test]
    fn weighted_score_example() {
        let mut cluster = ClusterState::with_workers(2, 16.0, 0.2);
        let p = calibrate_profile(ProfileKind::Vae, 1000);
        let ids: Vec<_> = (0..6).map(|_| cluster.admit(WorkerId(0), p, 0.0).unwrap()).collect();
        cluster.set_category(ids[2], Category::Watching).unwrap();
        for &c in &ids[3..] {
            cluster.set_category(c, Category::Converged).unwrap();
        }
        let table = score_workers(&cluster, &weights());
        assert_eq!(table.scores, vec![8.5, 0.0]);
        assert_eq!(table.candidates(), vec![WorkerId(1)]);
    }

    #[test]
    fn completed_containers_do_not_score() {
        let mut cluster = ClusterState::with_workers(1, 16.0, 0.2);
        let p = calibrate_profile(ProfileKind::Vae, 1000);
        let c = cluster.admit(WorkerId(0), p, 0.0).unwrap();
        cluster.admit(WorkerId(0), p, 0.0).unwrap();
        cluster.complete(c, 5.0).unwrap();
        assert_eq!(score_workers(&cluster, &weights()).scores, vec![2.0]);
    }

    #[test]
    fn logged_scores_pick_worker_one() {
        let scores = [63.0, 88.0, 92.0, 72.0];
        assert_eq!(candidate_set(&scores), vec![WorkerId(0)]);
        assert_eq!(choose_target(WorkerId(1), &scores, &[0.8; 4]), Placement::Migrate(WorkerId(0)));
    }

    #[test]
    fn placement_examples() {
        let r = [0.5, 0.6, 0.3];
        assert_eq!(choose_target(WorkerId(0), &[5.0, 5.0, 9.0], &r), Placement::Stay);
        assert_eq!(choose_target(WorkerId(0), &[9.0, 5.0, 7.0], &r), Placement::Migrate(WorkerId(1)));
        assert_eq!(choose_target(WorkerId(0), &[9.0, 5.0, 5.0], &r), Placement::Migrate(WorkerId(2)));
        // exact R tie goes to the lower id
        assert_eq!(
            choose_target(WorkerId(0), &[9.0, 5.0, 5.0], &[0.1, 0.4, 0.4]),
            Placement::Migrate(WorkerId(1))
        );
    }

    #[test]
    fn round_robin_placement() {
        let got: Vec<u32> = (0..8).map(|k| initial_placement(k, 4).unwrap().0).collect();
        assert_eq!(got, vec![0, 1, 2, 3, 0, 1, 2, 3]);
        assert!((0..5).all(|k| initial_placement(k, 1).unwrap() == WorkerId(0)));
        // job 50 of 50 lands on the second of eight workers
        assert_eq!(initial_placement(49, 8).unwrap(), WorkerId(1));
        assert_eq!(initial_placement(0, 0), Err(Error::NoWorkers));
    }

    #[test]
    fn manager_marks_migrated_and_dedups() {
        let mut cluster = ClusterState::with_workers(2, 16.0, 0.2);
        let p = calibrate_profile(ProfileKind::Vae, 1000);
        let c = cluster.admit(WorkerId(0), p, 0.0).unwrap();
        cluster.admit(WorkerId(0), p, 0.0).unwrap();
        cluster.set_category(c, Category::Converged).unwrap();
        cluster.now = 90.0;
        let mut manager = Manager::new(weights(), Policy::Specon);
        let req = ReallocationRequest { container: c, worker: WorkerId(0), time: 90.0 };
        let d = manager.select_target(&req, &mut cluster).unwrap().unwrap();
        assert_eq!(d.placement, Placement::Migrate(WorkerId(1)));
        assert!(cluster.containers[0].migrated);
        assert_eq!(cluster.containers[0].converged_at, Some(90.0));
        assert!(manager.select_target(&req, &mut cluster).unwrap().is_none());
    }

    #[test]
    fn stay_decision_still_marks_migrated() {
        let mut cluster = ClusterState::with_workers(2, 16.0, 0.2);
        let p = calibrate_profile(ProfileKind::Vae, 1000);
        let c = cluster.admit(WorkerId(0), p, 0.0).unwrap();
        cluster.set_category(c, Category::Converged).unwrap();
        cluster.admit(WorkerId(1), p, 0.0).unwrap();
        let mut manager = Manager::new(weights(), Policy::Specon);
        let req = ReallocationRequest { container: c, worker: WorkerId(0), time: 0.0 };
        let d = manager.select_target(&req, &mut cluster).unwrap().unwrap();
        assert_eq!(d.placement, Placement::Stay);
        assert!(cluster.containers[0].migrated);
    }

    #[test]
    fn baseline_and_stale_requests_ignored() {
        let mut cluster = ClusterState::with_workers(2, 16.0, 0.2);
        let p = calibrate_profile(ProfileKind::Vae, 1000);
        let c = cluster.admit(WorkerId(0), p, 0.0).unwrap();
        let req = ReallocationRequest { container: c, worker: WorkerId(0), time: 0.0 };
        let mut ds = Manager::new(weights(), Policy::Ds);
        assert!(ds.select_target(&req, &mut cluster).unwrap().is_none());
        cluster.complete(c, 1.0).unwrap();
        let mut sp = Manager::new(weights(), Policy::Specon);
        assert!(sp.select_target(&req, &mut cluster).unwrap().is_none());
        assert!(!cluster.containers[0].migrated);
    }

    proptest! {
        #[test]
        fn scaling_weights_keeps_decisions(
            counts in proptest::collection::vec((0usize..6, 0usize..6, 0usize..6), 1..8),
            r in proptest::collection::vec(0.0f64..0.8, 8),
            current in 0usize..8,
            factor in prop::sample::select(vec![0.25, 0.5, 2.0, 3.0, 10.0]),
        ) {
            let current = WorkerId((current % counts.len()) as u32);
            let score = |cfg: &SchedulerConfig| -> Vec<f64> {
                counts.iter().map(|&(p, w, c)| p as f64 * cfg.w_pc + w as f64 * cfg.w_wc + c as f64 * cfg.w_cc).collect()
            };
            let base = weights();
            let scaled = SchedulerConfig { w_pc: base.w_pc * factor, w_wc: base.w_wc * factor, w_cc: base.w_cc * factor, ..base };
            prop_assert_eq!(
                choose_target(current, &score(&base), &r),
                choose_target(current, &score(&scaled), &r)
            );
        }

        #[test]
        fn chosen_worker_attains_min_score(
            scores in proptest::collection::vec(0u8..5, 1..8),
            current in 0usize..8,
        ) {
            let scores: Vec<f64> = scores.into_iter().map(f64::from).collect();
            let current = WorkerId((current % scores.len()) as u32);
            let target = match choose_target(current, &scores, &vec![0.5; scores.len()]) {
                Placement::Stay => current,
                Placement::Migrate(w) => w,
            };
            let min = scores.iter().copied().fold(f64::INFINITY, f64::min);
            prop_assert_eq!(scores[target.index()], min);
        }
    }
}
