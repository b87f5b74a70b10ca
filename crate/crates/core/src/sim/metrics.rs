//! Per-message and per-node counters accumulated during a run.

use std::collections::BTreeMap;
use std::fmt::Write as _;

#[derive(Debug, Clone, Default, PartialEq)]
pub struct MessageMetrics {
    pub tx: u64,
    pub rx: u64,
    /// Unique first deliveries across nodes.
    pub delivered: u64,
    pub duplicates: u64,
    pub suppressions: u64,
    pub expire_drops: u64,
    pub created_at: Option<f64>,
    pub first_delivery: Option<f64>,
}

impl MessageMetrics {
    pub fn delivery_latency(&self) -> Option<f64> {
        match (self.created_at, self.first_delivery) {
            (Some(c), Some(d)) => Some(d - c),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct NodeMetrics {
    pub tx: u64,
    pub rx: u64,
    pub delivered: u64,
    pub duplicates: u64,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct Metrics {
    pub per_message: BTreeMap<String, MessageMetrics>,
    pub per_node: BTreeMap<String, NodeMetrics>,
}

impl Metrics {
    pub fn message(&mut self, msg_id: &str) -> &mut MessageMetrics {
        self.per_message.entry(msg_id.to_string()).or_default()
    }

    pub fn node(&mut self, node: &str) -> &mut NodeMetrics {
        self.per_node.entry(node.to_string()).or_default()
    }

    pub fn total_tx(&self) -> u64 {
        self.per_message.values().map(|m| m.tx).sum()
    }

    pub fn total_delivered(&self) -> u64 {
        self.per_message.values().map(|m| m.delivered).sum()
    }
}

pub const METRICS_HEADER: &str =
    "scope,key,tx,rx,delivered,duplicates,suppressions,expire_drops,first_delivery_latency_s";

/// One CSV with three scopes: per-message rows, per-node rows, and a
/// global summary row.
pub fn metrics_to_csv(metrics: &Metrics) -> String {
    let mut out = String::new();
    out.push_str(METRICS_HEADER);
    out.push('\n');
    for (id, m) in &metrics.per_message {
        let latency = m
            .delivery_latency()
            .map(|l| format!("{l:.3}"))
            .unwrap_or_default();
        writeln!(
            out,
            "message,{id},{},{},{},{},{},{},{latency}",
            m.tx, m.rx, m.delivered, m.duplicates, m.suppressions, m.expire_drops
        )
        .unwrap();
    }
    for (node, n) in &metrics.per_node {
        writeln!(
            out,
            "node,{node},{},{},{},{},,,",
            n.tx, n.rx, n.delivered, n.duplicates
        )
        .unwrap();
    }
    let (mut tx, mut rx, mut del, mut dup, mut sup, mut exp) = (0, 0, 0, 0, 0, 0);
    for m in metrics.per_message.values() {
        tx += m.tx;
        rx += m.rx;
        del += m.delivered;
        dup += m.duplicates;
        sup += m.suppressions;
        exp += m.expire_drops;
    }
    writeln!(out, "global,all,{tx},{rx},{del},{dup},{sup},{exp},").unwrap();
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn duplicates_are_rx_minus_unique_deliveries() {
        let mut metrics = Metrics::default();
        {
            let m = metrics.message("a1");
            m.created_at = Some(1.0);
            m.tx = 3;
            m.rx = 5;
            m.delivered = 2;
            m.duplicates = 3;
            m.first_delivery = Some(1.5);
        }
        let m = &metrics.per_message["a1"];
        assert_eq!(m.rx, m.delivered + m.duplicates);
        assert_eq!(m.delivery_latency(), Some(0.5));

        let csv = metrics_to_csv(&metrics);
        assert!(csv.contains("message,a1,3,5,2,3,0,0,0.500"));
        assert!(csv.contains("global,all,3,5,2,3,0,0,"));
    }
}
