//! Tabular outputs: horizon reports, per-frame curves and per-group tables, all as CSV.

use std::fmt::Write as _;
use std::path::Path;

use crate::error::{Error, Result};
use crate::eval::metrics::MetricKind;

pub const HORIZON_HEADER: &str = "method,horizon_ms,frame_index,metric";
pub const CURVE_HEADER: &str = "frame,metric";
pub const GROUP_HEADER: &str = "group,method,horizon_ms,frame_index,metric";

#[derive(Clone, Debug, PartialEq)]
pub struct HorizonRow {
    pub method: String,
    pub horizon_ms: f64,
    pub frame_index: usize,
    pub metric: f64,
}

/// Metric values at millisecond horizons, one row per (method, horizon).
#[derive(Clone, Debug, PartialEq)]
pub struct HorizonReport {
    pub metric: MetricKind,
    pub rows: Vec<HorizonRow>,
}

impl HorizonReport {
    pub fn new(metric: MetricKind) -> Self {
        HorizonReport { metric, rows: Vec::new() }
    }

    pub fn get(&self, method: &str, horizon_ms: f64) -> Option<f64> {
        self.rows
            .iter()
            .find(|r| r.method == method && r.horizon_ms == horizon_ms)
            .map(|r| r.metric)
    }

    pub fn methods(&self) -> Vec<&str> {
        let mut out: Vec<&str> = Vec::new();
        for r in &self.rows {
            if !out.contains(&r.method.as_str()) {
                out.push(&r.method);
            }
        }
        out
    }

    pub fn to_csv(&self) -> String {
        let mut s = format!("{HORIZON_HEADER}\n");
        for r in &self.rows {
            let _ = writeln!(s, "{},{},{},{}", r.method, r.horizon_ms, r.frame_index, r.metric);
        }
        s
    }

    pub fn parse_csv(text: &str, metric: MetricKind) -> Result<Self> {
        let mut lines = text.lines();
        if lines.next() != Some(HORIZON_HEADER) {
            return Err(Error::parse("line 1", format!("expected header {HORIZON_HEADER:?}")));
        }
        let mut rows = Vec::new();
        for (i, line) in lines.enumerate() {
            let at = || format!("line {}", i + 2);
            let f: Vec<&str> = line.split(',').collect();
            if f.len() != 4 {
                return Err(Error::parse(at(), format!("expected 4 fields, got {}", f.len())));
            }
            let num = |s: &str| s.parse::<f64>().map_err(|e| Error::parse(at(), e.to_string()));
            rows.push(HorizonRow {
                method: f[0].to_string(),
                horizon_ms: num(f[1])?,
                frame_index: f[2].parse().map_err(|e: std::num::ParseIntError| Error::parse(at(), e.to_string()))?,
                metric: num(f[3])?,
            });
        }
        Ok(HorizonReport { metric, rows })
    }

    pub fn write_csv(&self, path: impl AsRef<Path>) -> Result<()> {
        write_text(path.as_ref(), &self.to_csv())
    }
}

/// `frame,metric` lines, frames numbered from 1.
pub fn curve_csv(values: &[f64]) -> String {
    let mut s = format!("{CURVE_HEADER}\n");
    for (k, v) in values.iter().enumerate() {
        let _ = writeln!(s, "{},{v}", k + 1);
    }
    s
}

#[derive(Clone, Debug, PartialEq)]
pub struct GroupRow {
    pub group: String,
    pub row: HorizonRow,
}

pub fn grouped_csv(rows: &[GroupRow]) -> String {
    let mut s = format!("{GROUP_HEADER}\n");
    for g in rows {
        let r = &g.row;
        let _ = writeln!(s, "{},{},{},{},{}", g.group, r.method, r.horizon_ms, r.frame_index, r.metric);
    }
    s
}

pub(crate) fn write_text(path: &Path, text: &str) -> Result<()> {
    std::fs::write(path, text).map_err(|e| Error::io(path, e))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn csv_round_trip() {
        let mut r = HorizonReport::new(MetricKind::StackedL2);
        for (m, h, f, v) in [("zpzm", 80.0, 2, 1.25), ("zpzm", 400.0, 10, 7.0), ("joint", 80.0, 2, 0.1)] {
            r.rows.push(HorizonRow {
                method: m.into(),
                horizon_ms: h,
                frame_index: f,
                metric: v,
            });
        }
        let text = r.to_csv();
        assert!(text.starts_with("method,horizon_ms,frame_index,metric\nzpzm,80,2,1.25\n"));
        assert_eq!(HorizonReport::parse_csv(&text, MetricKind::StackedL2).unwrap(), r);
        assert_eq!(r.get("joint", 80.0), Some(0.1));
        assert_eq!(r.methods(), vec!["zpzm", "joint"]);
    }

    #[test]
    fn curve_lines() {
        assert_eq!(curve_csv(&[0.5, 2.0]), "frame,metric\n1,0.5\n2,2\n");
    }

    #[test]
    fn bad_header_rejected() {
        assert!(HorizonReport::parse_csv("a,b\n", MetricKind::StackedL2).is_err());
    }
}
