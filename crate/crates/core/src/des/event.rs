//! Future event list.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use serde::{Deserialize, Serialize};

/// Declaration order is the tie-break order at equal timestamps.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EventKind {
    BlockComplete,
    WitnessServiceEnd,
    Arrival,
}

impl EventKind {
    pub fn as_str(self) -> &'static str {
        match self {
            EventKind::BlockComplete => "block_complete",
            EventKind::WitnessServiceEnd => "witness_service_end",
            EventKind::Arrival => "arrival",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Payload {
    Transaction(u64),
    Witness(usize),
    Block(u64),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SimEvent {
    pub time: f64,
    pub kind: EventKind,
    pub seq: u64,
    pub payload: Payload,
}

impl Eq for SimEvent {}

impl Ord for SimEvent {
    fn cmp(&self, other: &Self) -> Ordering {
        self.time
            .total_cmp(&other.time)
            .then(self.kind.cmp(&other.kind))
            .then(self.seq.cmp(&other.seq))
    }
}

impl PartialOrd for SimEvent {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// Min-queue on (time, kind, insertion sequence).
#[derive(Debug, Default)]
pub struct EventQueue {
    heap: BinaryHeap<std::cmp::Reverse<SimEvent>>,
    next_seq: u64,
    now: f64,
}

impl EventQueue {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn now(&self) -> f64 {
        self.now
    }

    pub fn len(&self) -> usize {
        self.heap.len()
    }

    pub fn is_empty(&self) -> bool {
        self.heap.is_empty()
    }

    pub fn schedule(&mut self, time: f64, kind: EventKind, payload: Payload) {
        assert!(
            time >= self.now && time.is_finite(),
            "event at {time} scheduled in the past of {}",
            self.now
        );
        let seq = self.next_seq;
        self.next_seq += 1;
        self.heap.push(std::cmp::Reverse(SimEvent {
            time,
            kind,
            seq,
            payload,
        }));
    }

    pub fn peek_time(&self) -> Option<f64> {
        self.heap.peek().map(|e| e.0.time)
    }

    pub fn pop(&mut self) -> Option<SimEvent> {
        let ev = self.heap.pop()?.0;
        self.now = ev.time;
        Some(ev)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ties_resolve_by_kind_then_sequence() {
        let mut q = EventQueue::new();
        q.schedule(1.0, EventKind::Arrival, Payload::Transaction(0));
        q.schedule(1.0, EventKind::WitnessServiceEnd, Payload::Witness(3));
        q.schedule(0.5, EventKind::Arrival, Payload::Transaction(1));
        q.schedule(1.0, EventKind::BlockComplete, Payload::Block(0));
        q.schedule(1.0, EventKind::WitnessServiceEnd, Payload::Witness(1));
        let order: Vec<_> = std::iter::from_fn(|| q.pop())
            .map(|e| (e.kind, e.payload))
            .collect();
        assert_eq!(
            order,
            vec![
                (EventKind::Arrival, Payload::Transaction(1)),
                (EventKind::BlockComplete, Payload::Block(0)),
                (EventKind::WitnessServiceEnd, Payload::Witness(3)),
                (EventKind::WitnessServiceEnd, Payload::Witness(1)),
                (EventKind::Arrival, Payload::Transaction(0)),
            ]
        );
    }

    #[test]
    #[should_panic]
    fn rejects_past_events() {
        let mut q = EventQueue::new();
        q.schedule(2.0, EventKind::Arrival, Payload::Transaction(0));
        q.pop();
        q.schedule(1.0, EventKind::Arrival, Payload::Transaction(1));
    }
}
