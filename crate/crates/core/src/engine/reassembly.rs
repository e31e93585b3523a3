/// A packet-set as it reached the destination.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DeliveredSet {
    pub seq: u64,
    pub symbols: Vec<u32>,
    pub delay: usize,
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Reassembled {
    /// Sets in sequence order.
    pub ordered: Vec<DeliveredSet>,
    /// Sequence ids in `0..expected` that never arrived.
    pub missing: Vec<u64>,
}

impl Reassembled {
    /// Symbol indices of all sets, concatenated in sequence order.
    pub fn stream(&self) -> Vec<u32> {
        self.ordered.iter().flat_map(|s| s.symbols.iter().copied()).collect()
    }
}

/// Restores source order using the sequence ids carried by each set.
pub fn reassemble(mut received: Vec<DeliveredSet>, expected: u64) -> Reassembled {
    received.sort_by_key(|s| s.seq);
    let mut missing = Vec::new();
    let mut next = 0u64;
    for s in &received {
        while next < s.seq.min(expected) {
            missing.push(next);
            next += 1;
        }
        next = next.max(s.seq + 1);
    }
    missing.extend(next..expected);
    Reassembled {
        ordered: received,
        missing,
    }
}
