//! Arithmetic cost of the MMD and QN criteria per selection.

use serde::Serialize;

use crate::selection::metric_count;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct ComplexityReport {
    pub metric_count: u64,
    pub mmd_additions: u64,
    pub mmd_multiplications: u64,
    pub qn_additions: u64,
    pub qn_multiplications: u64,
}

pub fn complexity_report(n: u64, u: u64, ms: u32, w: u32) -> ComplexityReport {
    let x = metric_count(ms, w);
    let ms = ms as u64;
    let base = 2 * n * u;
    ComplexityReport {
        metric_count: x,
        mmd_additions: base * ms * x.saturating_sub(1),
        mmd_multiplications: base * ms * x,
        qn_additions: base * (ms * ms).saturating_sub(1),
        qn_multiplications: base * ms * ms,
    }
}
