use std::collections::VecDeque;

use crate::error::{Error, Result};

/// M_S packets sent together; `symbols[k]` is the index of the k-th
/// transmit vector, which is also its bit label.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PacketSet {
    pub seq: u64,
    pub symbols: Vec<u32>,
    /// Slot in which the set entered its relay buffer.
    pub arrival_slot: usize,
}

/// One bounded FIFO per relay, holding up to `capacity` packet-sets.
#[derive(Clone, Debug)]
pub struct RelayBuffers {
    queues: Vec<VecDeque<PacketSet>>,
    occupancy: Vec<usize>,
    capacity: usize,
}

impl RelayBuffers {
    pub fn new(relays: usize, capacity: usize) -> Self {
        Self {
            queues: (0..relays).map(|_| VecDeque::with_capacity(capacity)).collect(),
            occupancy: vec![0; relays],
            capacity,
        }
    }

    #[inline]
    pub fn capacity(&self) -> usize {
        self.capacity
    }

    #[inline]
    pub fn relays(&self) -> usize {
        self.queues.len()
    }

    #[inline]
    pub fn occupancy(&self) -> &[usize] {
        &self.occupancy
    }

    pub fn total(&self) -> usize {
        self.occupancy.iter().sum()
    }

    pub fn is_empty(&self) -> bool {
        self.total() == 0
    }

    pub fn push(&mut self, relay: usize, set: PacketSet) -> Result<()> {
        if self.occupancy[relay] >= self.capacity {
            return Err(Error::InvalidParameter(format!("relay {relay} buffer is full")));
        }
        self.queues[relay].push_back(set);
        self.occupancy[relay] += 1;
        Ok(())
    }

    /// Removes the head of the relay's queue.
    pub fn pop(&mut self, relay: usize) -> Option<PacketSet> {
        let set = self.queues[relay].pop_front()?;
        self.occupancy[relay] -= 1;
        Some(set)
    }
}
