//! The per-event trace and its CSV rendering. One row per event; the
//! schema is stable: `time,seq,node,kind,msg_id,detail`.

use std::fmt::Write as _;

/// Trace event kinds. The message-path kinds are `tx`, `rx`, `deliver`,
/// `duplicate`, `suppress`, `expire-drop`, and `hold`; the rest are
/// link-layer and bookkeeping events.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TraceKind {
    Tx,
    Rx,
    Deliver,
    Duplicate,
    Suppress,
    ExpireDrop,
    Hold,
    Inject,
    Connect,
    Disconnect,
    Loss,
    DropCount,
    Session,
}

impl TraceKind {
    pub fn as_str(&self) -> &'static str {
        match self {
            TraceKind::Tx => "tx",
            TraceKind::Rx => "rx",
            TraceKind::Deliver => "deliver",
            TraceKind::Duplicate => "duplicate",
            TraceKind::Suppress => "suppress",
            TraceKind::ExpireDrop => "expire-drop",
            TraceKind::Hold => "hold",
            TraceKind::Inject => "inject",
            TraceKind::Connect => "connect",
            TraceKind::Disconnect => "disconnect",
            TraceKind::Loss => "loss",
            TraceKind::DropCount => "drop-count",
            TraceKind::Session => "session",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TraceRow {
    pub time: f64,
    pub seq: u64,
    pub node: String,
    pub kind: TraceKind,
    pub msg_id: String,
    pub detail: String,
}

/// Commas and newlines in the detail column flatten to spaces so every
/// row stays a plain six-column CSV line.
fn sanitize(detail: &str) -> String {
    detail
        .chars()
        .map(|c| match c {
            ',' | '\n' | '\r' => ' ',
            other => other,
        })
        .collect()
}

pub const TRACE_HEADER: &str = "time,seq,node,kind,msg_id,detail";

pub fn trace_to_csv(rows: &[TraceRow]) -> String {
    let mut out = String::with_capacity(rows.len() * 48 + 40);
    out.push_str(TRACE_HEADER);
    out.push('\n');
    for row in rows {
        writeln!(
            out,
            "{:.3},{},{},{},{},{}",
            row.time,
            row.seq,
            row.node,
            row.kind.as_str(),
            row.msg_id,
            sanitize(&row.detail),
        )
        .unwrap();
    }
    out
}

/// A grant/deny record from a station's access control engine.
#[derive(Debug, Clone, PartialEq)]
pub struct DecisionRow {
    pub time: f64,
    pub station: String,
    pub user: String,
    pub service: String,
    pub verdict: &'static str,
    pub reason: &'static str,
}

pub const DECISIONS_HEADER: &str = "time,station,user,service,verdict,reason";

pub fn decisions_to_csv(rows: &[DecisionRow]) -> String {
    let mut out = String::new();
    out.push_str(DECISIONS_HEADER);
    out.push('\n');
    for row in rows {
        writeln!(
            out,
            "{:.3},{},{},{},{},{}",
            row.time, row.station, row.user, row.service, row.verdict, row.reason
        )
        .unwrap();
    }
    out
}
