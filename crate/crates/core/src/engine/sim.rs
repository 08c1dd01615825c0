use std::collections::BTreeSet;
use std::fmt::Write as _;

use rand_chacha::ChaCha8Rng;

use super::alloc::allocate_cpu;
use super::event::{EventKind, EventQueue};
use super::eventlog::EventLog;
use super::metrics::JobRecord;
use super::overhead::{OverheadModel, OverheadSampler};
use crate::error::{Error, Result};
use crate::model::{ClusterState, ContainerId, MonitorConfig, SchedulerConfig, SimTime, WorkerId};
use crate::monitor::Monitor;
use crate::rebalancer::{self, RebalanceRound};
use crate::rng::{NoiseStream, RngStreams};
use crate::scheduler::{initial_placement, Decision, Manager, Placement, Policy};
use crate::workload::{loss_at, SubmissionSchedule};

/// Remaining work below which a container counts as finished.
const COMPLETION_EPS: f64 = 1e-9;

/// Everything about a run except the workload itself.
#[derive(Clone, Debug, PartialEq)]
pub struct SimParams {
    pub n_workers: usize,
    pub cpu_capacity: f64,
    pub reserved_fraction: f64,
    pub monitor: MonitorConfig,
    pub scheduler: SchedulerConfig,
    pub overhead: OverheadModel,
    pub policy: Policy,
    pub seed: u64,
}

impl Default for SimParams {
    fn default() -> Self {
        Self {
            n_workers: 4,
            cpu_capacity: 16.0,
            reserved_fraction: 0.2,
            monitor: MonitorConfig::default(),
            scheduler: SchedulerConfig::default(),
            overhead: OverheadModel::default(),
            policy: Policy::Specon,
            seed: 0,
        }
    }
}

impl SimParams {
    pub fn validate(&self) -> Result<()> {
        if self.n_workers == 0 {
            return Err(Error::NoWorkers);
        }
        if !(self.cpu_capacity > 0.0 && self.cpu_capacity.is_finite()) {
            return Err(Error::Config("cpu_capacity must be positive".into()));
        }
        if !(0.0..1.0).contains(&self.reserved_fraction) {
            return Err(Error::Config("reserved_fraction must lie in [0, 1)".into()));
        }
        self.monitor.validate()?;
        self.scheduler.validate()?;
        self.overhead.validate()
    }
}

/// One checkpoint/restore window.
#[derive(Clone, Debug, PartialEq)]
pub struct MigrationRecord {
    pub container: ContainerId,
    pub from: WorkerId,
    pub to: WorkerId,
    pub start: SimTime,
    pub end: SimTime,
    pub progress_at_start: f64,
    pub progress_at_end: Option<f64>,
    pub rebalance: bool,
}

/// Per-worker state right after the events at `time` were processed.
#[derive(Clone, Debug, PartialEq)]
pub struct TimelinePoint {
    pub time: SimTime,
    pub counts: Vec<usize>,
    pub cpu_fraction: Vec<f64>,
}

#[derive(Clone, Debug)]
pub struct RunRecord {
    pub policy: Policy,
    pub n_workers: usize,
    pub jobs: Vec<JobRecord>,
    pub final_state: ClusterState,
    pub log: EventLog,
    pub decisions: Vec<Decision>,
    pub rebalances: Vec<RebalanceRound>,
    pub migrations: Vec<MigrationRecord>,
    pub timeline: Vec<TimelinePoint>,
    pub end_time: SimTime,
}

impl RunRecord {
    /// Timeline state in force at `t`.
    pub fn timeline_at(&self, t: SimTime) -> Option<&TimelinePoint> {
        let idx = self.timeline.partition_point(|p| p.time <= t);
        idx.checked_sub(1).map(|i| &self.timeline[i])
    }
}

/// Moves every running container forward by `dt` seconds at its current
/// rate. Paused and completed containers do not progress.
pub fn advance(cluster: &mut ClusterState, dt: f64) {
    assert!(dt >= 0.0, "advance by negative dt {dt}");
    for c in cluster.containers.iter_mut() {
        let rate = c.iteration_rate();
        if rate > 0.0 {
            c.completed_iterations =
                (c.completed_iterations + rate * dt).min(c.total_iterations as f64);
        }
    }
    cluster.now += dt;
}

/// Piecewise-linear progress history of one container.
#[derive(Clone, Debug, Default)]
struct ProgressLog {
    points: Vec<(SimTime, f64)>,
}

impl ProgressLog {
    fn record(&mut self, t: SimTime, k: f64) {
        match self.points.last_mut() {
            Some(last) if last.0 == t => last.1 = k,
            _ => self.points.push((t, k)),
        }
    }

    fn at(&self, t: SimTime) -> f64 {
        let idx = self.points.partition_point(|p| p.0 <= t);
        if idx == 0 {
            return self.points.first().map_or(0.0, |p| p.1);
        }
        let (t0, k0) = self.points[idx - 1];
        match self.points.get(idx) {
            Some(&(t1, k1)) if t1 > t0 => k0 + (k1 - k0) * (t - t0) / (t1 - t0),
            _ => k0,
        }
    }
}

pub struct Simulation {
    params: SimParams,
    schedule: SubmissionSchedule,
    cluster: ClusterState,
    queue: EventQueue,
    monitor: Monitor,
    manager: Manager,
    overhead: OverheadSampler,
    overhead_rng: ChaCha8Rng,
    noise: Vec<NoiseStream>,
    progress: Vec<ProgressLog>,
    initial_hosts: Vec<WorkerId>,
    log: EventLog,
    decisions: Vec<Decision>,
    rebalances: Vec<RebalanceRound>,
    migrations: Vec<MigrationRecord>,
    timeline: Vec<TimelinePoint>,
    rebalance_in_flight: BTreeSet<ContainerId>,
    submitted: usize,
}

impl Simulation {
    pub fn new(params: SimParams, schedule: SubmissionSchedule) -> Result<Self> {
        params.validate()?;
        if schedule.jobs.is_empty() {
            return Err(Error::Config("schedule has no jobs".into()));
        }
        let streams = RngStreams::new(params.seed);
        let cluster =
            ClusterState::with_workers(params.n_workers, params.cpu_capacity, params.reserved_fraction);
        let initial_hosts = (0..schedule.jobs.len())
            .map(|k| initial_placement(k, params.n_workers))
            .collect::<Result<Vec<_>>>()?;
        let noise = (0..schedule.jobs.len())
            .map(|k| streams.noise(ContainerId(k as u32)))
            .collect();
        Ok(Self {
            monitor: Monitor::new(params.monitor, params.n_workers),
            manager: Manager::new(params.scheduler, params.policy),
            overhead: params.overhead.sampler()?,
            overhead_rng: streams.stream("overhead"),
            progress: vec![ProgressLog::default(); schedule.jobs.len()],
            noise,
            initial_hosts,
            cluster,
            queue: EventQueue::new(),
            log: EventLog::default(),
            decisions: Vec::new(),
            rebalances: Vec::new(),
            migrations: Vec::new(),
            timeline: Vec::new(),
            rebalance_in_flight: BTreeSet::new(),
            submitted: 0,
            schedule,
            params,
        })
    }

    pub fn cluster(&self) -> &ClusterState {
        &self.cluster
    }

    /// Runs until every job has been submitted and completed.
    pub fn run(mut self) -> Result<RunRecord> {
        for (k, job) in self.schedule.jobs.iter().enumerate() {
            self.queue.push(job.offset, EventKind::Submission(ContainerId(k as u32)));
        }
        let interval = self.params.monitor.interval;
        for w in 0..self.params.n_workers {
            self.queue.push(interval, EventKind::CategorizationTick(WorkerId(w as u32)));
        }
        self.queue.push(interval, EventKind::RebalanceCheck);
        self.record_timeline();

        let n_jobs = self.schedule.jobs.len();
        while self.submitted < n_jobs || self.cluster.total_active() > 0 {
            let next_event = self.queue.peek_time().expect("periodic events keep the queue non-empty");
            match self.next_completion() {
                Some(done) if done <= next_event => {
                    self.advance_to(done, next_event);
                    self.complete_finished()?;
                }
                _ => {
                    let event = self.queue.pop().expect("peeked");
                    self.advance_to(event.time, event.time);
                    self.handle(event.kind)?;
                }
            }
            self.reallocate();
            self.record_timeline();
            debug_assert_eq!(self.cluster.check_invariants(), Ok(()));
        }
        Ok(self.finish())
    }

    fn next_completion(&self) -> Option<SimTime> {
        self.cluster
            .containers
            .iter()
            .filter_map(|c| {
                let rate = c.iteration_rate();
                (rate > 0.0).then(|| self.cluster.now + c.remaining_iterations() / rate)
            })
            .reduce(f64::min)
    }

    fn advance_to(&mut self, t: SimTime, horizon: SimTime) {
        assert!(t <= horizon, "advance to {t} would skip an event at {horizon}");
        let start = self.cluster.now;
        advance(&mut self.cluster, (t - start).max(0.0));
        // pin the clock to the event time rather than the accumulated sum
        self.cluster.now = t.max(start);
        if self.params.monitor.read_delay > 0.0 {
            let now = self.cluster.now;
            for c in self.cluster.containers.iter().filter(|c| c.is_active()) {
                self.progress[c.id.index()].record(now, c.completed_iterations);
            }
        }
    }

    fn complete_finished(&mut self) -> Result<()> {
        let now = self.cluster.now;
        let done: Vec<(ContainerId, WorkerId, f64)> = self
            .cluster
            .containers
            .iter()
            .filter(|c| c.is_active() && !c.is_paused() && c.remaining_iterations() <= COMPLETION_EPS)
            .map(|c| (c.id, c.host, c.completed_iterations))
            .collect();
        for (id, host, k) in done {
            let submitted_at = self.cluster.container(id)?.submitted_at;
            self.cluster.complete(id, now)?;
            self.log.push(
                now,
                EventKind::JobCompletion(id).name(),
                Some(id),
                Some(host),
                format!("completion={} k={k}", now - submitted_at),
            );
        }
        Ok(())
    }

    fn handle(&mut self, kind: EventKind) -> Result<()> {
        let now = self.cluster.now;
        match kind {
            EventKind::Submission(expected) => {
                let index = self.submitted;
                let job = &self.schedule.jobs[index];
                let host = self.initial_hosts[index];
                let id = self.cluster.admit(host, job.profile, now)?;
                debug_assert_eq!(id, expected);
                self.submitted += 1;
                self.progress[id.index()].record(now, 0.0);
                self.log.push(now, kind.name(), Some(id), Some(host), format!("profile={}", job.label()));
            }
            EventKind::CategorizationTick(worker) => {
                self.queue.push(now + self.params.monitor.interval, kind);
                self.categorize(worker)?;
            }
            EventKind::RequestArrival(request) => {
                if let Some(decision) = self.manager.select_target(&request, &mut self.cluster)? {
                    self.log.push(
                        now,
                        "Decision",
                        Some(decision.container),
                        Some(decision.from),
                        decision_detail(&decision),
                    );
                    if let Placement::Migrate(to) = decision.placement {
                        self.schedule_migration(decision.container, to, false)?;
                    }
                    self.decisions.push(decision);
                }
            }
            EventKind::MigrationComplete { container, to } => {
                let c = self.cluster.container_mut(container)?;
                c.paused_until = None;
                let k = c.completed_iterations;
                if let Some(m) = self
                    .migrations
                    .iter_mut()
                    .rev()
                    .find(|m| m.container == container && m.progress_at_end.is_none())
                {
                    m.progress_at_end = Some(k);
                }
                self.rebalance_in_flight.remove(&container);
                self.log.push(now, kind.name(), Some(container), Some(to), format!("k={k}"));
            }
            EventKind::RebalanceCheck => {
                self.queue.push(now + self.params.monitor.interval, kind);
                self.rebalance_check()?;
            }
            EventKind::MigrationStart { .. } | EventKind::JobCompletion(_) => {
                unreachable!("{} is applied directly, never queued", kind.name())
            }
        }
        Ok(())
    }

    fn categorize(&mut self, worker: WorkerId) -> Result<()> {
        let now = self.cluster.now;
        let read_delay = self.params.monitor.read_delay;
        let Self { monitor, cluster, progress, noise, .. } = self;
        let outcome = monitor.tick(worker, cluster, |cluster, id| {
            let c = &cluster.containers[id.index()];
            let k = if read_delay > 0.0 {
                progress[id.index()].at(now - read_delay)
            } else {
                c.completed_iterations
            };
            let k = k.clamp(0.0, c.total_iterations as f64);
            loss_at(&c.profile, k, &noise[id.index()]).expect("progress clamped to range")
        })?;
        for change in &outcome.changes {
            self.log.push(
                now,
                "Category",
                Some(change.container),
                Some(worker),
                format!("from={} to={}", change.from, change.to),
            );
        }
        let delay = self.params.scheduler.heartbeat_delay;
        for request in outcome.requests {
            self.log.push(now, "Request", Some(request.container), Some(worker), "");
            self.queue.push(now + delay, EventKind::RequestArrival(request));
        }
        Ok(())
    }

    fn rebalance_check(&mut self) -> Result<()> {
        let now = self.cluster.now;
        if self.manager.policy() == Policy::Ds {
            return Ok(());
        }
        if !self.rebalance_in_flight.is_empty() {
            self.log.push(now, EventKind::RebalanceCheck.name(), None, None, "skip=in-flight");
            return Ok(());
        }
        let round = rebalancer::rebalance(&self.cluster, now)?;
        if round.snapshot.movable.is_empty() {
            return Ok(());
        }
        let snap = &round.snapshot;
        let mut detail = format!(
            "sum={} bf={} counts={} movable=",
            snap.sum,
            snap.bf,
            join(snap.counts.iter())
        );
        for (i, m) in snap.movable.iter().enumerate() {
            if i > 0 {
                detail.push('|');
            }
            write!(detail, "{}@{}:{}", m.container, m.host, m.d).unwrap();
        }
        self.log.push(now, EventKind::RebalanceCheck.name(), None, None, detail);
        for d in &round.directives {
            self.cluster.container_mut(d.container)?.rebalanced = true;
            self.log.push(
                now,
                "Directive",
                Some(d.container),
                Some(d.to),
                format!("from={} d={} bf={} reason={}", d.from, d.d, d.bf, d.reason),
            );
            self.schedule_migration(d.container, d.to, true)?;
            self.rebalance_in_flight.insert(d.container);
        }
        self.rebalances.push(round);
        Ok(())
    }

    /// Pauses `id`, moves its residency to `to` and queues the matching
    /// completion after a sampled checkpoint/restore delay.
    pub fn schedule_migration(&mut self, id: ContainerId, to: WorkerId, rebalance: bool) -> Result<()> {
        let now = self.cluster.now;
        self.cluster.worker(to)?;
        let container = self.cluster.container(id)?;
        if !container.is_active() {
            log::warn!("ignoring migration of completed container {id}");
            return Ok(());
        }
        let from = container.host;
        if from == to {
            return Ok(());
        }
        let delay = self.overhead.sample(&mut self.overhead_rng);
        let end = now + delay;
        let container = self.cluster.container_mut(id)?;
        container.paused_until = Some(end);
        container.n_migrations += 1;
        let k = container.completed_iterations;
        self.cluster.relocate(id, to)?;
        self.log.push(
            now,
            EventKind::MigrationStart { container: id, from, to }.name(),
            Some(id),
            Some(to),
            format!("from={from} delay={delay} k={k}"),
        );
        self.queue.push(end, EventKind::MigrationComplete { container: id, to });
        self.migrations.push(MigrationRecord {
            container: id,
            from,
            to,
            start: now,
            end,
            progress_at_start: k,
            progress_at_end: None,
            rebalance,
        });
        Ok(())
    }

    fn reallocate(&mut self) {
        let Self { cluster, .. } = self;
        for w in &cluster.workers {
            let demands: Vec<(ContainerId, f64)> = w
                .residents
                .iter()
                .map(|c| &cluster.containers[c.index()])
                .filter(|c| c.is_active() && !c.is_paused())
                .map(|c| (c.id, c.cpu_demand))
                .collect();
            for c in w.residents.iter() {
                cluster.containers[c.index()].allocated = 0.0;
            }
            for (id, cores) in allocate_cpu(w.usable_capacity(), &demands) {
                cluster.containers[id.index()].allocated = cores;
            }
        }
    }

    fn record_timeline(&mut self) {
        let now = self.cluster.now;
        let counts: Vec<usize> = self
            .cluster
            .worker_ids()
            .map(|w| self.cluster.active_count(w).expect("known worker"))
            .collect();
        let cpu_fraction: Vec<f64> = self
            .cluster
            .worker_ids()
            .map(|w| self.cluster.resource_consumption(w).expect("known worker"))
            .collect();
        let point = TimelinePoint { time: now, counts, cpu_fraction };
        match self.timeline.last_mut() {
            Some(last) if last.time == now => *last = point,
            _ => self.timeline.push(point),
        }
    }

    fn finish(self) -> RunRecord {
        let jobs = self
            .cluster
            .containers
            .iter()
            .map(|c| JobRecord {
                id: c.id,
                profile: self.schedule.jobs[c.id.index()].label(),
                initial_host: self.initial_hosts[c.id.index()],
                final_host: c.host,
                submitted_at: c.submitted_at,
                completed_at: c.completed_at,
                n_migrations: c.n_migrations,
                rebalanced: c.rebalanced,
            })
            .collect();
        RunRecord {
            policy: self.params.policy,
            n_workers: self.params.n_workers,
            jobs,
            end_time: self.cluster.now,
            final_state: self.cluster,
            log: self.log,
            decisions: self.decisions,
            rebalances: self.rebalances,
            migrations: self.migrations,
            timeline: self.timeline,
        }
    }
}

fn join<T: std::fmt::Display>(items: impl Iterator<Item = T>) -> String {
    items.map(|x| x.to_string()).collect::<Vec<_>>().join("|")
}

fn decision_detail(d: &Decision) -> String {
    let to = match d.placement {
        Placement::Stay => "stay".to_string(),
        Placement::Migrate(w) => w.to_string(),
    };
    format!(
        "to={to} scores={} R={}",
        join(d.scores.iter()),
        join(d.consumption.iter())
    )
}
