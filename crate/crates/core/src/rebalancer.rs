//! Cluster rebalancing once speculative placement has frozen.
//!
//! Only containers that were already handled by the manager (`migrated`) and
//! have not been rebalanced yet may move. Their converged duration
//! `d = t - converged_at` orders them: the most recently converged container
//! moves first.

use std::collections::BTreeMap;
use std::fmt;

use crate::error::{Error, Result};
use crate::model::{ClusterState, ContainerId, SimTime, WorkerId};

/// Per-worker uniform load target.
pub fn balance_factor(sum: usize, n_workers: usize) -> Result<usize> {
    if n_workers == 0 {
        return Err(Error::NoWorkers);
    }
    Ok(sum / n_workers)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum RebalanceReason {
    IdleFill,
    OverloadSpill,
}

impl fmt::Display for RebalanceReason {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            RebalanceReason::IdleFill => "idle-fill",
            RebalanceReason::OverloadSpill => "overload-spill",
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Movable {
    pub container: ContainerId,
    pub host: WorkerId,
    /// Converged duration in seconds.
    pub d: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct RebalanceSnapshot {
    pub time: SimTime,
    pub sum: usize,
    pub bf: usize,
    /// Active containers per worker, indexed by worker id.
    pub counts: Vec<usize>,
    /// Movable containers in id order.
    pub movable: Vec<Movable>,
    /// Workers with no active container.
    pub idle: Vec<WorkerId>,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Directive {
    pub time: SimTime,
    pub container: ContainerId,
    pub from: WorkerId,
    pub to: WorkerId,
    pub d: f64,
    pub bf: usize,
    pub reason: RebalanceReason,
}

#[derive(Clone, Debug, PartialEq)]
pub struct RebalanceRound {
    pub snapshot: RebalanceSnapshot,
    pub directives: Vec<Directive>,
}

pub fn snapshot(cluster: &ClusterState, t: SimTime) -> Result<RebalanceSnapshot> {
    let counts = cluster
        .worker_ids()
        .map(|w| cluster.active_count(w))
        .collect::<Result<Vec<_>>>()?;
    let sum = counts.iter().sum();
    let bf = balance_factor(sum, counts.len())?;
    let idle = counts
        .iter()
        .enumerate()
        .filter(|(_, &n)| n == 0)
        .map(|(i, _)| WorkerId(i as u32))
        .collect();
    let movable = cluster
        .containers
        .iter()
        .filter(|c| c.is_active() && c.migrated && !c.rebalanced && !c.is_paused())
        .map(|c| Movable {
            container: c.id,
            host: c.host,
            d: t - c.converged_at.unwrap_or(t),
        })
        .collect();
    Ok(RebalanceSnapshot { time: t, sum, bf, counts, movable, idle })
}

/// Directives for one round, computed from the snapshot alone.
///
/// With idle workers, each idle worker pulls most-recently-converged
/// containers until it holds `bf`, taking only from workers that currently
/// hold more than it does. Without idle workers, every worker below `bf - 1`
/// is a target; each other worker sends its most recently converged
/// container to the first target that still has fewer than `bf` containers,
/// provided the source stays at least as loaded as the target.
pub fn plan(snapshot: &RebalanceSnapshot) -> Vec<Directive> {
    let bf = snapshot.bf;
    let mut counts = snapshot.counts.clone();
    let mut pool: BTreeMap<ContainerId, Movable> =
        snapshot.movable.iter().map(|m| (m.container, *m)).collect();
    let mut directives = Vec::new();
    let mut emit = |m: Movable, to: WorkerId, reason, counts: &mut Vec<usize>| {
        counts[m.host.index()] -= 1;
        counts[to.index()] += 1;
        directives.push(Directive {
            time: snapshot.time,
            container: m.container,
            from: m.host,
            to,
            d: m.d,
            bf,
            reason,
        });
    };
    // ties on d go to the lower container id
    let most_recent = |pool: &BTreeMap<ContainerId, Movable>, ok: &dyn Fn(&Movable) -> bool| {
        pool.values()
            .filter(|m| ok(m))
            .copied()
            .reduce(|best, m| if m.d < best.d { m } else { best })
    };

    if !snapshot.idle.is_empty() {
        for &dst in &snapshot.idle {
            while counts[dst.index()] < bf {
                let dst_count = counts[dst.index()];
                let Some(m) = most_recent(&pool, &|m| counts[m.host.index()] > dst_count) else {
                    break;
                };
                pool.remove(&m.container);
                emit(m, dst, RebalanceReason::IdleFill, &mut counts);
            }
        }
    } else {
        let targets: Vec<WorkerId> = (0..counts.len())
            .filter(|&i| counts[i] + 1 < bf)
            .map(|i| WorkerId(i as u32))
            .collect();
        if targets.is_empty() {
            return directives;
        }
        for src in (0..counts.len()).map(|i| WorkerId(i as u32)) {
            if targets.contains(&src) {
                continue;
            }
            let Some(m) = most_recent(&pool, &|m| m.host == src) else {
                continue;
            };
            let dst = targets.iter().copied().find(|t| {
                counts[t.index()] < bf && counts[src.index()] >= counts[t.index()] + 2
            });
            if let Some(dst) = dst {
                pool.remove(&m.container);
                emit(m, dst, RebalanceReason::OverloadSpill, &mut counts);
            }
        }
    }
    directives
}

/// Snapshot plus plan. Does not touch the cluster; the caller marks the
/// containers rebalanced and starts the migrations.
pub fn rebalance(cluster: &ClusterState, t: SimTime) -> Result<RebalanceRound> {
    let snapshot = snapshot(cluster, t)?;
    let directives = plan(&snapshot);
    Ok(RebalanceRound { snapshot, directives })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::Category;
    use crate::workload::{calibrate_profile, ProfileKind};

    fn converge(cluster: &mut ClusterState, c: ContainerId, at: f64) {
        cluster.set_category(c, Category::Converged).unwrap();
        let s = cluster.container_mut(c).unwrap();
        s.migrated = true;
        s.converged_at = Some(at);
    }

    fn load(cluster: &mut ClusterState, w: u32, n: usize) -> Vec<ContainerId> {
        let p = calibrate_profile(ProfileKind::Vae, 1000);
        (0..n).map(|_| cluster.admit(WorkerId(w), p, 0.0).unwrap()).collect()
    }

    #[test]
    fn balance_factor_examples() {
        assert_eq!(balance_factor(7, 4).unwrap(), 1);
        assert_eq!(balance_factor(4, 2).unwrap(), 2);
        assert_eq!(balance_factor(0, 3).unwrap(), 0);
        assert_eq!(balance_factor(3, 0), Err(Error::NoWorkers));
    }

    #[test]
    fn idle_worker_pulls_most_recently_converged() {
        let mut cluster = ClusterState::with_workers(2, 16.0, 0.2);
        let done = load(&mut cluster, 0, 2);
        let busy = load(&mut cluster, 1, 2);
        for c in done {
            cluster.complete(c, 100.0).unwrap();
        }
        converge(&mut cluster, busy[0], 50.0);
        converge(&mut cluster, busy[1], 80.0);
        let round = rebalance(&cluster, 120.0).unwrap();
        assert_eq!(round.snapshot.bf, 1);
        assert_eq!(round.directives.len(), 1);
        let d = round.directives[0];
        assert_eq!((d.container, d.from, d.to), (busy[1], WorkerId(1), WorkerId(0)));
        assert_eq!(d.d, 40.0);
        assert_eq!(d.reason, RebalanceReason::IdleFill);
    }

    #[test]
    fn balanced_cluster_gets_no_directives() {
        let mut cluster = ClusterState::with_workers(3, 16.0, 0.2);
        for w in 0..3 {
            for c in load(&mut cluster, w, 2) {
                converge(&mut cluster, c, 10.0);
            }
        }
        assert!(rebalance(&cluster, 50.0).unwrap().directives.is_empty());
    }

    #[test]
    fn overloaded_worker_spills_to_underloaded() {
        // counts 8, 3, 1, 4 -> bf 4, target is the worker holding one
        let mut cluster = ClusterState::with_workers(4, 16.0, 0.2);
        let w0 = load(&mut cluster, 0, 8);
        load(&mut cluster, 1, 3);
        load(&mut cluster, 2, 1);
        let w3 = load(&mut cluster, 3, 4);
        converge(&mut cluster, w0[0], 100.0);
        converge(&mut cluster, w0[1], 200.0);
        converge(&mut cluster, w3[0], 150.0);
        let round = rebalance(&cluster, 620.0).unwrap();
        assert_eq!(round.snapshot.bf, 4);
        let moves: Vec<_> = round.directives.iter().map(|d| (d.container, d.from, d.to)).collect();
        assert_eq!(
            moves,
            vec![(w0[1], WorkerId(0), WorkerId(2)), (w3[0], WorkerId(3), WorkerId(2))]
        );
        assert!(round.directives.iter().all(|d| d.reason == RebalanceReason::OverloadSpill));
    }

    #[test]
    fn unconverged_and_rebalanced_containers_stay() {
        let mut cluster = ClusterState::with_workers(2, 16.0, 0.2);
        let cs = load(&mut cluster, 1, 3);
        converge(&mut cluster, cs[0], 10.0);
        cluster.container_mut(cs[0]).unwrap().rebalanced = true;
        assert!(rebalance(&cluster, 20.0).unwrap().directives.is_empty());
    }

    proptest::proptest! {
        #[test]
        fn plan_respects_load_bounds(
            counts in proptest::collection::vec(0usize..8, 1..7),
            picks in proptest::collection::vec((0usize..64, 0u32..50), 0..30),
        ) {
            let n = counts.len();
            let mut cluster = ClusterState::with_workers(n, 16.0, 0.2);
            let mut ids = Vec::new();
            for (w, &k) in counts.iter().enumerate() {
                ids.extend(load(&mut cluster, w as u32, k));
            }
            for &(i, d) in &picks {
                if !ids.is_empty() {
                    converge(&mut cluster, ids[i % ids.len()], 1000.0 - d as f64);
                }
            }
            let round = rebalance(&cluster, 1000.0).unwrap();
            let snap = &round.snapshot;
            proptest::prop_assert_eq!(snap.bf, snap.sum / n);
            let mut after = snap.counts.clone();
            let mut moved = std::collections::BTreeSet::new();
            for d in &round.directives {
                proptest::prop_assert!(moved.insert(d.container));
                proptest::prop_assert!(snap.movable.iter().any(|m| m.container == d.container && m.host == d.from));
                let src_before = after[d.from.index()];
                after[d.from.index()] -= 1;
                after[d.to.index()] += 1;
                proptest::prop_assert!(after[d.to.index()] <= snap.bf + 1);
                proptest::prop_assert!(after[d.to.index()] <= src_before);
            }
            proptest::prop_assert_eq!(after.iter().sum::<usize>(), snap.sum);
        }
    }
}
