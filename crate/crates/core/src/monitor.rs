//! Per-worker container monitor.
//!
//! Every categorization interval the monitor reads each unmigrated
//! container's evaluation value, normalises it by the first value it ever
//! saw for that container, and takes the absolute change since the previous
//! tick as the container's growth. Growth drives a three-state machine:
//!
//! | growth vs. previous | growth vs. alpha | effect                          |
//! |---------------------|------------------|---------------------------------|
//! | smaller             | below            | PC -> WC, WC -> CC, CC requests |
//! | not smaller         | below            | unchanged                       |
//! | any                 | above            | reset to PC                     |
//! | any                 | equal            | unchanged                       |
//!
//! A converged container asks the manager for reallocation only while more
//! than one container on its worker is still progressing or watching.

use std::collections::BTreeMap;

use crate::error::Result;
use crate::model::{Category, ClusterState, ContainerId, MonitorConfig, SimTime, WorkerId};

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ReallocationRequest {
    pub container: ContainerId,
    pub worker: WorkerId,
    pub time: SimTime,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CategoryChange {
    pub container: ContainerId,
    pub worker: WorkerId,
    pub from: Category,
    pub to: Category,
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct TickOutcome {
    pub changes: Vec<CategoryChange>,
    pub requests: Vec<ReallocationRequest>,
}

/// Absolute change between two normalised evaluation values.
pub fn growth(prev: f64, curr: f64) -> f64 {
    (curr - prev).abs()
}

#[derive(Clone, Copy, Debug, Default, PartialEq)]
struct Track {
    baseline: Option<f64>,
    last_e: f64,
    /// None until two samples exist.
    last_g: Option<f64>,
}

#[derive(Clone, Debug)]
pub struct Monitor {
    config: MonitorConfig,
    tracks: BTreeMap<ContainerId, Track>,
    next_tick: Vec<SimTime>,
}

impl Monitor {
    pub fn new(config: MonitorConfig, n_workers: usize) -> Self {
        Self {
            config,
            tracks: BTreeMap::new(),
            next_tick: vec![config.interval; n_workers],
        }
    }

    pub fn config(&self) -> &MonitorConfig {
        &self.config
    }

    pub fn next_tick(&self, worker: WorkerId) -> SimTime {
        self.next_tick[worker.index()]
    }

    /// Last normalised evaluation value and growth seen for `container`.
    pub fn last_observation(&self, container: ContainerId) -> Option<(f64, Option<f64>)> {
        self.tracks
            .get(&container)
            .filter(|t| t.baseline.is_some())
            .map(|t| (t.last_e, t.last_g))
    }

    /// Runs one categorization round on `worker` at `cluster.now`.
    /// `sample` returns the raw evaluation value of a container.
    pub fn tick(
        &mut self,
        worker: WorkerId,
        cluster: &mut ClusterState,
        mut sample: impl FnMut(&ClusterState, ContainerId) -> f64,
    ) -> Result<TickOutcome> {
        let now = cluster.now;
        self.next_tick[worker.index()] = now + self.config.interval;
        let alpha = self.config.alpha;
        let mut outcome = TickOutcome::default();

        for id in cluster.active_containers(worker)? {
            let container = cluster.container(id)?;
            if container.migrated || container.is_paused() {
                continue;
            }
            let raw = sample(cluster, id);
            let track = self.tracks.entry(id).or_default();
            let Some(baseline) = track.baseline else {
                let baseline = if raw.is_finite() && raw != 0.0 { raw } else { 1.0 };
                track.baseline = Some(baseline);
                track.last_e = raw / baseline;
                continue;
            };
            let e = raw / baseline;
            let g = growth(track.last_e, e);
            let prev = track.last_g;
            track.last_e = e;
            track.last_g = Some(g);

            let current = container.category;
            let slowing = prev.is_some_and(|p| g < p);
            let next = if g < alpha && slowing {
                match current {
                    Category::Progressing => Category::Watching,
                    Category::Watching | Category::Converged => Category::Converged,
                }
            } else if g > alpha {
                Category::Progressing
            } else {
                current
            };

            if next != current {
                cluster.set_category(id, next)?;
                outcome.changes.push(CategoryChange { container: id, worker, from: current, to: next });
            } else if current == Category::Converged && g < alpha && slowing {
                let w = cluster.worker(worker)?;
                if w.pc_set.len() + w.wc_set.len() > 1 {
                    outcome.requests.push(ReallocationRequest { container: id, worker, time: now });
                }
            }
        }
        Ok(outcome)
    }
}
