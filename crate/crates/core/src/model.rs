//! Domain types shared by the simulator, the monitor, the scheduler and the
//! rebalancer.
//!
//! Identifiers are dense integers handed out in submission order (containers)
//! or construction order (workers). Every set in this module is ordered by id,
//! so any iteration over residents or categories is deterministic.

use std::collections::BTreeSet;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::workload::ModelProfile;

/// Simulated time in seconds.
pub type SimTime = f64;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct ContainerId(pub u32);

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct WorkerId(pub u32);

impl ContainerId {
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

impl WorkerId {
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

impl fmt::Display for ContainerId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "c{}", self.0)
    }
}

impl fmt::Display for WorkerId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "w{}", self.0)
    }
}

/// Progress category assigned by the container monitor.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Category {
    Progressing,
    Watching,
    Converged,
}

impl Category {
    pub fn short(self) -> &'static str {
        match self {
            Category::Progressing => "PC",
            Category::Watching => "WC",
            Category::Converged => "CC",
        }
    }
}

impl fmt::Display for Category {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.short())
    }
}

/// One training job running inside a container.
#[derive(Clone, Debug, PartialEq)]
pub struct ContainerState {
    pub id: ContainerId,
    pub host: WorkerId,
    pub profile: ModelProfile,
    pub total_iterations: u64,
    /// Fractional progress; integrated between events.
    pub completed_iterations: f64,
    pub category: Category,
    pub migrated: bool,
    pub rebalanced: bool,
    /// Time at which `migrated` flipped to true.
    pub converged_at: Option<SimTime>,
    pub submitted_at: SimTime,
    pub completed_at: Option<SimTime>,
    pub cpu_demand: f64,
    /// Cores granted at the last allocation.
    pub allocated: f64,
    /// End of the checkpoint/restore window while a migration is in flight.
    pub paused_until: Option<SimTime>,
    pub n_migrations: u32,
}

impl ContainerState {
    pub fn new(
        id: ContainerId,
        host: WorkerId,
        profile: ModelProfile,
        submitted_at: SimTime,
    ) -> Self {
        Self {
            id,
            host,
            total_iterations: profile.total_iterations,
            cpu_demand: profile.cpu_demand,
            profile,
            completed_iterations: 0.0,
            category: Category::Progressing,
            migrated: false,
            rebalanced: false,
            converged_at: None,
            submitted_at,
            completed_at: None,
            allocated: 0.0,
            paused_until: None,
            n_migrations: 0,
        }
    }

    pub fn is_active(&self) -> bool {
        self.completed_at.is_none()
    }

    pub fn is_paused(&self) -> bool {
        self.paused_until.is_some()
    }

    /// Current iteration rate in iterations per second.
    pub fn iteration_rate(&self) -> f64 {
        if !self.is_active() || self.is_paused() || self.cpu_demand <= 0.0 {
            return 0.0;
        }
        self.profile.base_iter_rate * (self.allocated / self.cpu_demand).min(1.0)
    }

    pub fn remaining_iterations(&self) -> f64 {
        (self.total_iterations as f64 - self.completed_iterations).max(0.0)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct WorkerState {
    pub id: WorkerId,
    pub cpu_capacity: f64,
    /// Fraction of capacity held back for the system, in [0, 1).
    pub reserved_fraction: f64,
    pub residents: BTreeSet<ContainerId>,
    pub pc_set: BTreeSet<ContainerId>,
    pub wc_set: BTreeSet<ContainerId>,
    pub cc_set: BTreeSet<ContainerId>,
}

impl WorkerState {
    pub fn new(id: WorkerId, cpu_capacity: f64, reserved_fraction: f64) -> Self {
        Self {
            id,
            cpu_capacity,
            reserved_fraction,
            residents: BTreeSet::new(),
            pc_set: BTreeSet::new(),
            wc_set: BTreeSet::new(),
            cc_set: BTreeSet::new(),
        }
    }

    /// Capacity available to containers once the system reserve is removed.
    pub fn usable_capacity(&self) -> f64 {
        self.cpu_capacity * (1.0 - self.reserved_fraction)
    }

    pub fn category_set(&self, category: Category) -> &BTreeSet<ContainerId> {
        match category {
            Category::Progressing => &self.pc_set,
            Category::Watching => &self.wc_set,
            Category::Converged => &self.cc_set,
        }
    }

    fn category_set_mut(&mut self, category: Category) -> &mut BTreeSet<ContainerId> {
        match category {
            Category::Progressing => &mut self.pc_set,
            Category::Watching => &mut self.wc_set,
            Category::Converged => &mut self.cc_set,
        }
    }
}

/// Categorization threshold and interval used by the container monitor.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MonitorConfig {
    pub alpha: f64,
    /// Seconds between categorization ticks.
    pub interval: f64,
    /// Lag between the monitor's tick and the progress it reads from the log store.
    pub read_delay: f64,
}

impl Default for MonitorConfig {
    fn default() -> Self {
        Self { alpha: 0.01, interval: 30.0, read_delay: 0.0 }
    }
}

impl MonitorConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.alpha > 0.0 && self.alpha.is_finite()) {
            return Err(Error::Config(format!("alpha must be positive, got {}", self.alpha)));
        }
        if !(self.interval > 0.0 && self.interval.is_finite()) {
            return Err(Error::Config(format!(
                "categorization interval must be positive, got {}",
                self.interval
            )));
        }
        if !(self.read_delay >= 0.0) {
            return Err(Error::Config("read_delay must be non-negative".into()));
        }
        Ok(())
    }
}

/// Category weights for worker scoring.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SchedulerConfig {
    pub w_pc: f64,
    pub w_wc: f64,
    pub w_cc: f64,
    /// Worker-to-manager messaging delay for reallocation requests.
    pub heartbeat_delay: f64,
}

impl Default for SchedulerConfig {
    fn default() -> Self {
        Self { w_pc: 2.0, w_wc: 1.5, w_cc: 1.0, heartbeat_delay: 0.0 }
    }
}

impl SchedulerConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.w_pc > self.w_wc && self.w_wc > self.w_cc && self.w_cc > 0.0) {
            return Err(Error::Config(format!(
                "weights must satisfy w_pc > w_wc > w_cc > 0, got ({}, {}, {})",
                self.w_pc, self.w_wc, self.w_cc
            )));
        }
        if !(self.heartbeat_delay >= 0.0) {
            return Err(Error::Config("heartbeat_delay must be non-negative".into()));
        }
        Ok(())
    }

    pub fn weight(&self, category: Category) -> f64 {
        match category {
            Category::Progressing => self.w_pc,
            Category::Watching => self.w_wc,
            Category::Converged => self.w_cc,
        }
    }
}

/// Workers and containers, both indexed densely by id.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct ClusterState {
    pub workers: Vec<WorkerState>,
    pub containers: Vec<ContainerState>,
    pub now: SimTime,
}

impl ClusterState {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn with_workers(n: usize, cpu_capacity: f64, reserved_fraction: f64) -> Self {
        let mut cluster = Self::new();
        for _ in 0..n {
            cluster.add_worker(cpu_capacity, reserved_fraction);
        }
        cluster
    }

    pub fn add_worker(&mut self, cpu_capacity: f64, reserved_fraction: f64) -> WorkerId {
        let id = WorkerId(self.workers.len() as u32);
        self.workers.push(WorkerState::new(id, cpu_capacity, reserved_fraction));
        id
    }

    pub fn worker_ids(&self) -> impl Iterator<Item = WorkerId> + '_ {
        self.workers.iter().map(|w| w.id)
    }

    pub fn worker(&self, id: WorkerId) -> Result<&WorkerState> {
        self.workers.get(id.index()).ok_or(Error::UnknownWorker(id))
    }

    pub fn container(&self, id: ContainerId) -> Result<&ContainerState> {
        self.containers.get(id.index()).ok_or(Error::UnknownContainer(id))
    }

    pub fn container_mut(&mut self, id: ContainerId) -> Result<&mut ContainerState> {
        self.containers.get_mut(id.index()).ok_or(Error::UnknownContainer(id))
    }

    /// Places a newly submitted container on `host` as progressing.
    pub fn admit(
        &mut self,
        host: WorkerId,
        profile: ModelProfile,
        submitted_at: SimTime,
    ) -> Result<ContainerId> {
        self.worker(host)?;
        let id = ContainerId(self.containers.len() as u32);
        self.containers.push(ContainerState::new(id, host, profile, submitted_at));
        let worker = &mut self.workers[host.index()];
        worker.residents.insert(id);
        worker.pc_set.insert(id);
        Ok(id)
    }

    pub fn set_category(&mut self, id: ContainerId, category: Category) -> Result<()> {
        let container = self.containers.get_mut(id.index()).ok_or(Error::UnknownContainer(id))?;
        let old = container.category;
        if old == category {
            return Ok(());
        }
        container.category = category;
        let worker = &mut self.workers[container.host.index()];
        worker.category_set_mut(old).remove(&id);
        worker.category_set_mut(category).insert(id);
        Ok(())
    }

    /// Moves residency and category membership of `id` to `to`.
    pub fn relocate(&mut self, id: ContainerId, to: WorkerId) -> Result<()> {
        self.worker(to)?;
        let container = self.containers.get_mut(id.index()).ok_or(Error::UnknownContainer(id))?;
        let from = container.host;
        let category = container.category;
        container.host = to;
        let src = &mut self.workers[from.index()];
        src.residents.remove(&id);
        src.category_set_mut(category).remove(&id);
        let dst = &mut self.workers[to.index()];
        dst.residents.insert(id);
        dst.category_set_mut(category).insert(id);
        Ok(())
    }

    /// Marks `id` completed at `time` and drops it from its host's sets.
    pub fn complete(&mut self, id: ContainerId, time: SimTime) -> Result<()> {
        let container = self.containers.get_mut(id.index()).ok_or(Error::UnknownContainer(id))?;
        container.completed_at = Some(time);
        container.completed_iterations = container.total_iterations as f64;
        container.allocated = 0.0;
        container.paused_until = None;
        let worker = &mut self.workers[container.host.index()];
        worker.residents.remove(&id);
        worker.pc_set.remove(&id);
        worker.wc_set.remove(&id);
        worker.cc_set.remove(&id);
        Ok(())
    }

    /// Number of resident containers that have not completed. A container in
    /// the middle of a migration counts toward its destination.
    pub fn active_count(&self, worker: WorkerId) -> Result<usize> {
        let w = self.worker(worker)?;
        Ok(w.residents
            .iter()
            .filter(|c| self.containers[c.index()].is_active())
            .count())
    }

    pub fn active_containers(&self, worker: WorkerId) -> Result<Vec<ContainerId>> {
        let w = self.worker(worker)?;
        Ok(w.residents
            .iter()
            .copied()
            .filter(|c| self.containers[c.index()].is_active())
            .collect())
    }

    /// R(w, t): allocated cores of active residents over raw capacity. Never
    /// exceeds `1 - reserved_fraction`.
    pub fn resource_consumption(&self, worker: WorkerId) -> Result<f64> {
        let w = self.worker(worker)?;
        if w.cpu_capacity <= 0.0 {
            return Ok(0.0);
        }
        let used: f64 = w
            .residents
            .iter()
            .map(|c| &self.containers[c.index()])
            .filter(|c| c.is_active())
            .map(|c| c.allocated)
            .sum();
        Ok((used / w.cpu_capacity).min(1.0 - w.reserved_fraction))
    }

    pub fn total_active(&self) -> usize {
        self.containers.iter().filter(|c| c.is_active()).count()
    }

    /// Checks placement consistency, the category partition and the flag
    /// invariants. Returns a description of the first violation.
    pub fn check_invariants(&self) -> std::result::Result<(), String> {
        let mut seen = BTreeSet::new();
        for w in &self.workers {
            let pc = &w.pc_set;
            let wc = &w.wc_set;
            let cc = &w.cc_set;
            if !pc.is_disjoint(wc) || !pc.is_disjoint(cc) || !wc.is_disjoint(cc) {
                return Err(format!("{}: category sets overlap", w.id));
            }
            let union: BTreeSet<_> = pc.union(wc).chain(cc.iter()).copied().collect();
            let active: BTreeSet<_> = w
                .residents
                .iter()
                .copied()
                .filter(|c| self.containers[c.index()].is_active())
                .collect();
            if union != active {
                return Err(format!("{}: category union differs from active residents", w.id));
            }
            for &c in &w.residents {
                if !seen.insert(c) {
                    return Err(format!("{c} resides on two workers"));
                }
                let container = &self.containers[c.index()];
                if container.host != w.id {
                    return Err(format!("{c} host {} but resides on {}", container.host, w.id));
                }
                if !w.category_set(container.category).contains(&c) {
                    return Err(format!("{c} category {} not mirrored on {}", container.category, w.id));
                }
            }
        }
        for c in &self.containers {
            if c.is_active() && !seen.contains(&c.id) {
                return Err(format!("active {} has no host", c.id));
            }
            if c.completed_iterations < 0.0 || c.completed_iterations > c.total_iterations as f64 {
                return Err(format!("{} progress out of range", c.id));
            }
            if c.migrated != c.converged_at.is_some() {
                return Err(format!("{}: converged_at set iff migrated violated", c.id));
            }
            if c.migrated && c.category != Category::Converged {
                return Err(format!("{}: migrated but not converged", c.id));
            }
            if c.rebalanced && !c.migrated {
                return Err(format!("{}: rebalanced without being migrated", c.id));
            }
        }
        Ok(())
    }
}
