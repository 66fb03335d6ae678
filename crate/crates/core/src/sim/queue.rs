use alloc::collections::BinaryHeap;
use core::cmp::{Ordering, Reverse};

use crate::topology::NodeId;
use crate::Ticks;

/// What happens at an event. The variant order is the tie-break priority for
/// events sharing a tick.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EventKind {
    PeriodBoundary {
        index: u32,
    },
    Churn {
        index: usize,
    },
    Wake {
        epoch: u64,
    },
    Fire {
        epoch: u64,
    },
    /// Start of reception at `node` of a broadcast from `sender`.
    Arrival,
    /// End of reception; `reception` identifies it in the medium.
    Deliver {
        reception: u64,
    },
    Sleep {
        epoch: u64,
    },
}

impl EventKind {
    pub fn priority(&self) -> u8 {
        match self {
            EventKind::PeriodBoundary { .. } => 0,
            EventKind::Churn { .. } => 1,
            EventKind::Wake { .. } => 2,
            EventKind::Fire { .. } => 3,
            EventKind::Arrival => 4,
            EventKind::Deliver { .. } => 5,
            EventKind::Sleep { .. } => 6,
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            EventKind::PeriodBoundary { .. } => "period",
            EventKind::Churn { .. } => "churn",
            EventKind::Wake { .. } => "wake",
            EventKind::Fire { .. } => "fire",
            EventKind::Arrival => "arrival",
            EventKind::Deliver { .. } => "deliver",
            EventKind::Sleep { .. } => "sleep",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Event {
    pub time: Ticks,
    pub node: NodeId,
    pub sender: NodeId,
    pub kind: EventKind,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
struct Entry {
    key: (Ticks, u8, u32, u32, u64),
    event: Event,
}

impl Ord for Entry {
    fn cmp(&self, other: &Self) -> Ordering {
        self.key.cmp(&other.key)
    }
}

impl PartialOrd for Entry {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// Min-queue ordered by `(time, priority, node, sender, insertion)`.
#[derive(Debug, Default)]
pub struct EventQueue {
    heap: BinaryHeap<Reverse<Entry>>,
    seq: u64,
}

impl EventQueue {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn push(&mut self, event: Event) {
        let key = (
            event.time,
            event.kind.priority(),
            event.node.0,
            event.sender.0,
            self.seq,
        );
        self.seq += 1;
        self.heap.push(Reverse(Entry { key, event }));
    }

    pub fn pop(&mut self) -> Option<Event> {
        self.heap.pop().map(|Reverse(e)| e.event)
    }

    pub fn peek_time(&self) -> Option<Ticks> {
        self.heap.peek().map(|Reverse(e)| e.key.0)
    }

    pub fn len(&self) -> usize {
        self.heap.len()
    }

    pub fn is_empty(&self) -> bool {
        self.heap.is_empty()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec::Vec;

    fn ev(time: Ticks, node: u32, sender: u32, kind: EventKind) -> Event {
        Event {
            time,
            node: NodeId(node),
            sender: NodeId(sender),
            kind,
        }
    }

    #[test]
    fn lexicographic_order() {
        let mut q = EventQueue::new();
        q.push(ev(5, 0, 0, EventKind::Sleep { epoch: 0 }));
        q.push(ev(5, 2, 1, EventKind::Arrival));
        q.push(ev(5, 2, 0, EventKind::Arrival));
        q.push(ev(5, 9, 9, EventKind::Fire { epoch: 0 }));
        q.push(ev(5, 0, 0, EventKind::PeriodBoundary { index: 1 }));
        q.push(ev(3, 7, 7, EventKind::Deliver { reception: 0 }));
        let order: Vec<_> = core::iter::from_fn(|| q.pop())
            .map(|e| (e.time, e.kind.name(), e.node.0, e.sender.0))
            .collect();
        assert_eq!(
            order,
            [
                (3, "deliver", 7, 7),
                (5, "period", 0, 0),
                (5, "fire", 9, 9),
                (5, "arrival", 2, 0),
                (5, "arrival", 2, 1),
                (5, "sleep", 0, 0),
            ]
        );
    }

    #[test]
    fn insertion_breaks_remaining_ties() {
        let mut q = EventQueue::new();
        q.push(ev(1, 0, 0, EventKind::Fire { epoch: 1 }));
        q.push(ev(1, 0, 0, EventKind::Fire { epoch: 2 }));
        assert_eq!(q.pop().unwrap().kind, EventKind::Fire { epoch: 1 });
        assert_eq!(q.peek_time(), Some(1));
        assert_eq!(q.len(), 1);
    }
}
