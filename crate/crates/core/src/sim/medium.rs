//! Broadcast fan-out and the receiver-side collision model.

use alloc::collections::BTreeMap;
use alloc::vec::Vec;

use rand_chacha::ChaCha8Rng;

use super::models::{DelayModel, LinkFaultModel};
use super::queue::{Event, EventKind, EventQueue};
use crate::protocol::BroadcastMessage;
use crate::topology::{NodeId, Topology};
use crate::Ticks;

/// Enqueues one arrival per listener of the sender, after loss filtering.
/// Returns the number of arrivals scheduled.
pub fn deliver_broadcast(
    msg: &BroadcastMessage,
    topology: &Topology,
    delay: &DelayModel,
    faults: &LinkFaultModel,
    rng: &mut ChaCha8Rng,
    queue: &mut EventQueue,
) -> usize {
    let mut scheduled = 0;
    for receiver in topology.listeners(msg.sender) {
        if faults.lost(rng) {
            continue;
        }
        let d = delay.sample(msg.sender, receiver, rng);
        queue.push(Event {
            time: msg.sent_at + d,
            node: receiver,
            sender: msg.sender,
            kind: EventKind::Arrival,
        });
        scheduled += 1;
    }
    scheduled
}

#[derive(Debug, Clone, Copy)]
struct Reception {
    id: u64,
    end: Ticks,
    corrupted: bool,
}

/// Tracks receptions in progress. A reception occupies `[start, start + β)`
/// at its receiver; with collisions enabled any two overlapping receptions
/// destroy each other.
#[derive(Debug, Default)]
pub struct Medium {
    airtime: Ticks,
    collisions: bool,
    active: BTreeMap<NodeId, Vec<Reception>>,
    next_id: u64,
}

impl Medium {
    pub fn new(faults: &LinkFaultModel) -> Self {
        Medium {
            airtime: faults.airtime,
            collisions: faults.collisions,
            active: BTreeMap::new(),
            next_id: 0,
        }
    }

    /// Starts a reception and returns `(id, end)`.
    pub fn begin(&mut self, receiver: NodeId, now: Ticks) -> (u64, Ticks) {
        let id = self.next_id;
        self.next_id += 1;
        let end = now + self.airtime;
        let list = self.active.entry(receiver).or_default();
        let mut corrupted = false;
        if self.collisions && self.airtime > 0 {
            for r in list.iter_mut().filter(|r| r.end > now) {
                r.corrupted = true;
                corrupted = true;
            }
        }
        list.push(Reception { id, end, corrupted });
        (id, end)
    }

    /// Ends a reception; true when it survived.
    pub fn finish(&mut self, receiver: NodeId, id: u64) -> bool {
        let Some(list) = self.active.get_mut(&receiver) else {
            return false;
        };
        let Some(pos) = list.iter().position(|r| r.id == id) else {
            return false;
        };
        let r = list.swap_remove(pos);
        if list.is_empty() {
            self.active.remove(&receiver);
        }
        !r.corrupted
    }

    pub fn forget(&mut self, receiver: NodeId) {
        self.active.remove(&receiver);
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::protocol::MessageKind;
    use crate::sim::models::DelayKind;
    use crate::topology::make_regular_grid;
    use rand::SeedableRng;

    fn msg(sender: u32, at: Ticks) -> BroadcastMessage {
        BroadcastMessage {
            sender: NodeId(sender),
            sent_at: at,
            kind: MessageKind::Sync,
        }
    }

    #[test]
    fn fan_out_with_delay() {
        let t = make_regular_grid(5, 5, true).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let mut q = EventQueue::new();
        let d = DelayModel::new(DelayKind::Deterministic(10));
        let n = deliver_broadcast(&msg(12, 100), &t, &d, &LinkFaultModel::lossless(), &mut rng, &mut q);
        assert_eq!(n, 4);
        let mut got = Vec::new();
        while let Some(e) = q.pop() {
            assert_eq!(e.time, 110);
            assert_eq!(e.sender, NodeId(12));
            got.push(e.node.0);
        }
        assert_eq!(got, [7, 11, 13, 17]);
    }

    #[test]
    fn total_loss() {
        let t = make_regular_grid(5, 5, true).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let mut q = EventQueue::new();
        let f = LinkFaultModel {
            loss_probability: 1.0,
            ..LinkFaultModel::lossless()
        };
        assert_eq!(
            deliver_broadcast(&msg(0, 0), &t, &DelayModel::default(), &f, &mut rng, &mut q),
            0
        );
        assert!(q.is_empty());
    }

    #[test]
    fn overlapping_receptions_collide() {
        let f = LinkFaultModel {
            loss_probability: 0.0,
            collisions: true,
            airtime: 5,
        };
        let mut m = Medium::new(&f);
        let r = NodeId(0);
        let (a, _) = m.begin(r, 100);
        let (b, _) = m.begin(r, 103);
        assert!(!m.finish(r, a));
        assert!(!m.finish(r, b));
        // Back-to-back receptions do not overlap.
        let (c, end) = m.begin(r, 200);
        let (d, _) = m.begin(r, end);
        assert!(m.finish(r, c));
        assert!(m.finish(r, d));
    }

    #[test]
    fn collisions_off_keeps_both() {
        let f = LinkFaultModel {
            airtime: 5,
            ..LinkFaultModel::lossless()
        };
        let mut m = Medium::new(&f);
        let (a, _) = m.begin(NodeId(0), 100);
        let (b, _) = m.begin(NodeId(0), 101);
        assert!(m.finish(NodeId(0), a));
        assert!(m.finish(NodeId(0), b));
    }
}
