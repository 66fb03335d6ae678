//! Per-period duty-cycle, throughput and flap accounting.

use alloc::vec::Vec;

use serde::Serialize;

use crate::Ticks;

/// Network average of `100 · awake / elapsed`, one `(awake, elapsed)` pair
/// per node. Nodes with zero elapsed time are skipped.
pub fn duty_cycle(per_node: impl IntoIterator<Item = (Ticks, Ticks)>) -> f64 {
    let mut sum = 0.0;
    let mut n = 0usize;
    for (awake, elapsed) in per_node {
        if elapsed == 0 {
            continue;
        }
        sum += 100.0 * awake.min(elapsed) as f64 / elapsed as f64;
        n += 1;
    }
    if n == 0 {
        0.0
    } else {
        sum / n as f64
    }
}

/// `100 · received / (avg_degree · n)`.
pub fn throughput(received_total: u64, avg_degree: f64, n: usize) -> f64 {
    let denom = avg_degree * n as f64;
    if denom <= 0.0 {
        0.0
    } else {
        100.0 * received_total as f64 / denom
    }
}

/// One period of measurements. Field order is the CSV column order.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MetricsRow {
    pub period: u32,
    pub dphi_literal: f64,
    pub dphi_circular: f64,
    pub dplus: f64,
    pub duty_pct: f64,
    pub thr_pct: f64,
    pub steady_pct: f64,
    pub flaps: u32,
}

pub const CSV_COLUMNS: [&str; 8] = [
    "period",
    "dphi_literal",
    "dphi_circular",
    "dplus",
    "duty_pct",
    "thr_pct",
    "steady_pct",
    "flaps",
];

#[derive(Debug, Clone, PartialEq, Default)]
pub struct MetricsSeries {
    pub rows: Vec<MetricsRow>,
}

impl MetricsSeries {
    pub fn push(&mut self, row: MetricsRow) {
        debug_assert!(self.rows.last().is_none_or(|r| r.period < row.period));
        self.rows.push(row);
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    /// Rows with `period >= from`.
    pub fn tail(&self, from: u32) -> impl Iterator<Item = &MetricsRow> + '_ {
        self.rows.iter().filter(move |r| r.period >= from)
    }

    /// Mean of `(duty_pct, thr_pct)` over the periods from `from` on.
    pub fn steady_state(&self, from: u32) -> Option<(f64, f64)> {
        let mut n = 0usize;
        let (mut d, mut t) = (0.0, 0.0);
        for r in self.tail(from) {
            d += r.duty_pct;
            t += r.thr_pct;
            n += 1;
        }
        (n > 0).then(|| (d / n as f64, t / n as f64))
    }
}
