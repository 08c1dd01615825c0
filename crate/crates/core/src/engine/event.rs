use std::cmp::{Ordering, Reverse};
use std::collections::BinaryHeap;

use crate::model::{ContainerId, SimTime, WorkerId};
use crate::monitor::ReallocationRequest;

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum EventKind {
    /// Carries the id the container will receive.
    Submission(ContainerId),
    CategorizationTick(WorkerId),
    MigrationStart { container: ContainerId, from: WorkerId, to: WorkerId },
    MigrationComplete { container: ContainerId, to: WorkerId },
    JobCompletion(ContainerId),
    RebalanceCheck,
    /// A reallocation request reaching the manager after the messaging delay.
    RequestArrival(ReallocationRequest),
}

impl EventKind {
    pub fn name(&self) -> &'static str {
        match self {
            EventKind::Submission(_) => "Submission",
            EventKind::CategorizationTick(_) => "CategorizationTick",
            EventKind::MigrationStart { .. } => "MigrationStart",
            EventKind::MigrationComplete { .. } => "MigrationComplete",
            EventKind::JobCompletion(_) => "JobCompletion",
            EventKind::RebalanceCheck => "RebalanceCheck",
            EventKind::RequestArrival(_) => "RequestArrival",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SimEvent {
    pub time: SimTime,
    pub seq: u64,
    pub kind: EventKind,
}

impl Eq for SimEvent {}

impl Ord for SimEvent {
    fn cmp(&self, other: &Self) -> Ordering {
        self.time.total_cmp(&other.time).then(self.seq.cmp(&other.seq))
    }
}

impl PartialOrd for SimEvent {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// Min-queue on `(time, seq)`; `seq` follows insertion order, so events at
/// the same instant pop in the order they were scheduled.
#[derive(Debug, Default)]
pub struct EventQueue {
    heap: BinaryHeap<Reverse<SimEvent>>,
    next_seq: u64,
}

impl EventQueue {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn push(&mut self, time: SimTime, kind: EventKind) -> u64 {
        assert!(time.is_finite(), "event time must be finite");
        let seq = self.next_seq;
        self.next_seq += 1;
        self.heap.push(Reverse(SimEvent { time, seq, kind }));
        seq
    }

    pub fn pop(&mut self) -> Option<SimEvent> {
        self.heap.pop().map(|Reverse(e)| e)
    }

    pub fn peek_time(&self) -> Option<SimTime> {
        self.heap.peek().map(|Reverse(e)| e.time)
    }

    pub fn len(&self) -> usize {
        self.heap.len()
    }

    pub fn is_empty(&self) -> bool {
        self.heap.is_empty()
    }
}
