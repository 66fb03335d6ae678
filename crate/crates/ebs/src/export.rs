//! CSV and NDJSON output.

use std::io::Write;
use std::path::Path;

use ebs_core::metrics::{MetricsSeries, CSV_COLUMNS};
use ebs_core::sim::TraceRecord;
use serde::Serialize;

use crate::error::{Error, Result};

/// Header row, then one row per period in [`CSV_COLUMNS`] order.
pub fn write_csv(series: &MetricsSeries, w: impl Write) -> Result<()> {
    let mut out = csv::WriterBuilder::new().has_headers(false).from_writer(w);
    out.write_record(CSV_COLUMNS)?;
    for row in &series.rows {
        out.serialize(row)?;
    }
    out.flush().map_err(csv::Error::from)?;
    Ok(())
}

pub fn csv_bytes(series: &MetricsSeries) -> Vec<u8> {
    let mut buf = Vec::new();
    write_csv(series, &mut buf).expect("writing to memory");
    buf
}

pub fn export_csv(series: &MetricsSeries, path: &Path) -> Result<()> {
    std::fs::write(path, csv_bytes(series)).map_err(|e| Error::io(path, e))
}

#[derive(Serialize)]
struct TraceLine<'a> {
    time: u64,
    event: &'a str,
    node: u32,
    detail: &'a str,
}

/// One JSON object per line: `time`, `event`, `node`, `detail`.
pub fn write_trace(records: &[TraceRecord], mut w: impl Write) -> std::io::Result<()> {
    for r in records {
        let line = TraceLine {
            time: r.time.0,
            event: r.event,
            node: r.node.0,
            detail: &r.detail,
        };
        serde_json::to_writer(&mut w, &line)?;
        w.write_all(b"\n")?;
    }
    Ok(())
}

/// Steady-state averages for one sweep point and protocol.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SummaryRow {
    pub sweep: String,
    pub value: String,
    pub protocol: &'static str,
    pub seeds: u32,
    pub duty_pct: f64,
    pub thr_pct: f64,
    pub steady_pct: f64,
    pub flaps: f64,
}

pub const SUMMARY_COLUMNS: [&str; 8] = [
    "sweep",
    "value",
    "protocol",
    "seeds",
    "duty_pct",
    "thr_pct",
    "steady_pct",
    "flaps",
];

pub fn write_summary(rows: &[SummaryRow], w: impl Write) -> Result<()> {
    let mut out = csv::WriterBuilder::new().has_headers(false).from_writer(w);
    out.write_record(SUMMARY_COLUMNS)?;
    for row in rows {
        out.serialize(row)?;
    }
    out.flush().map_err(csv::Error::from)?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use ebs_core::metrics::MetricsRow;

    fn row(period: u32) -> MetricsRow {
        MetricsRow {
            period,
            dphi_literal: 0.25,
            dphi_circular: 0.125,
            dplus: 0.0,
            duty_pct: 100.0,
            thr_pct: 87.5,
            steady_pct: 0.0,
            flaps: 0,
        }
    }

    #[test]
    fn empty_series_is_header_only() {
        let text = String::from_utf8(csv_bytes(&MetricsSeries::default())).unwrap();
        assert_eq!(
            text,
            "period,dphi_literal,dphi_circular,dplus,duty_pct,thr_pct,steady_pct,flaps\n"
        );
    }

    #[test]
    fn three_periods_four_lines() {
        let mut s = MetricsSeries::default();
        for p in 0..3 {
            s.push(row(p));
        }
        let text = String::from_utf8(csv_bytes(&s)).unwrap();
        assert_eq!(text.lines().count(), 4);
        assert_eq!(text.lines().nth(1).unwrap(), "0,0.25,0.125,0.0,100.0,87.5,0.0,0");
    }
}
