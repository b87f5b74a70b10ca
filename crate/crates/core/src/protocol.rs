//! Dissemination logic: duplicate suppression with implicit
//! acknowledgement, bounded rebroadcast retries, and greedy geographic
//! forwarding toward a target segment.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use crate::geometry::Point;
use crate::mfs::Message;
use crate::mobility::Pose;

/// Retry cadence and suppression switches.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ProtocolParams {
    /// Seconds between rebroadcast attempts of an unacknowledged message.
    pub retry_interval: f64,
    /// Maximum transmissions of one message by one node (initial included).
    pub retry_limit: u32,
    /// When false, echoes never cancel pending rebroadcasts (naive flood).
    pub suppression: bool,
}

impl Default for ProtocolParams {
    fn default() -> Self {
        ProtocolParams {
            retry_interval: 1.0,
            retry_limit: 5,
            suppression: true,
        }
    }
}

/// Where a reception happened, for the from-behind test.
#[derive(Debug, Clone, PartialEq)]
pub struct RxContext {
    pub sender_position: Point,
    pub receiver_position: Point,
    /// Receiver's unit travel direction.
    pub receiver_heading: Point,
    pub time: f64,
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ProtocolError {
    #[error("receiver heading is zero; from-behind is undefined")]
    ZeroHeading,
    #[error("position is not finite")]
    NonFinitePosition,
}

/// True when the sender sits strictly behind the receiver's direction of
/// travel: negative dot product of (sender - receiver) with the heading.
/// Exactly abeam counts as not-behind.
pub fn is_from_behind(ctx: &RxContext) -> Result<bool, ProtocolError> {
    if ctx.receiver_heading.x == 0.0 && ctx.receiver_heading.y == 0.0 {
        return Err(ProtocolError::ZeroHeading);
    }
    if !ctx.sender_position.is_finite() || !ctx.receiver_position.is_finite() {
        return Err(ProtocolError::NonFinitePosition);
    }
    let dx = ctx.sender_position.x - ctx.receiver_position.x;
    let dy = ctx.sender_position.y - ctx.receiver_position.y;
    Ok(dx * ctx.receiver_heading.x + dy * ctx.receiver_heading.y < 0.0)
}

/// A scheduled rebroadcast.
#[derive(Debug, Clone, PartialEq)]
pub struct PendingRebroadcast {
    pub message: Message,
    pub next_tx: f64,
    /// Transmissions already made.
    pub sent: u32,
}

/// What the receive path asks the node to do next.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum RxAction {
    /// Queue the message for broadcast-with-retries (alerts).
    ScheduleRebroadcast,
    /// An echo acknowledged the message; drop its pending rebroadcast.
    CancelRebroadcast,
    /// Forward toward the target segment (queries and replies).
    ForwardGeographic,
    None,
}

/// Outcome of delivering a received message to the protocol layer.
#[derive(Debug, Clone, PartialEq)]
pub struct RxOutcome {
    /// True only on the first receipt of this msg_id.
    pub deliver: bool,
    pub action: RxAction,
}

/// Per-node forwarding state. Owned by one node and mutated only inside
/// that node's serialized event handlers.
#[derive(Debug, Clone, Default)]
pub struct ForwardingState {
    seen: BTreeMap<String, f64>,
    pending: BTreeMap<String, PendingRebroadcast>,
    acked: BTreeSet<String>,
}

impl ForwardingState {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn has_seen(&self, msg_id: &str) -> bool {
        self.seen.contains_key(msg_id)
    }

    pub fn first_receipt_time(&self, msg_id: &str) -> Option<f64> {
        self.seen.get(msg_id).copied()
    }

    pub fn is_acked(&self, msg_id: &str) -> bool {
        self.acked.contains(msg_id)
    }

    pub fn pending(&self, msg_id: &str) -> Option<&PendingRebroadcast> {
        self.pending.get(msg_id)
    }

    pub fn pending_ids(&self) -> impl Iterator<Item = &String> {
        self.pending.keys()
    }

    /// Registers a message this node originated so later echoes read as
    /// duplicates, and queues its broadcast.
    pub fn originate(&mut self, msg: &Message, params: &ProtocolParams, now: f64) {
        self.seen.insert(msg.msg_id.clone(), now);
        self.schedule_rebroadcast(msg, params, now);
    }

    fn schedule_rebroadcast(&mut self, msg: &Message, _params: &ProtocolParams, now: f64) {
        self.pending
            .entry(msg.msg_id.clone())
            .or_insert(PendingRebroadcast {
                message: msg.clone(),
                next_tx: now,
                sent: 0,
            });
    }

    /// Receive path. First receipt delivers and picks the action for the
    /// message type; duplicates only update acknowledgement bookkeeping.
    /// Any duplicate arriving from behind counts as an implicit ack.
    pub fn on_receive(
        &mut self,
        msg: &Message,
        ctx: &RxContext,
        params: &ProtocolParams,
    ) -> Result<RxOutcome, ProtocolError> {
        if !self.has_seen(&msg.msg_id) {
            self.seen.insert(msg.msg_id.clone(), ctx.time);
            let action = match msg.msg_type {
                crate::mfs::MsgType::Alert => {
                    self.schedule_rebroadcast(msg, params, ctx.time);
                    RxAction::ScheduleRebroadcast
                }
                crate::mfs::MsgType::Query => RxAction::ForwardGeographic,
                crate::mfs::MsgType::Service => RxAction::None,
            };
            return Ok(RxOutcome {
                deliver: true,
                action,
            });
        }

        // Duplicate.
        let mut action = RxAction::None;
        if params.suppression && is_from_behind(ctx)? && !self.acked.contains(&msg.msg_id) {
            self.acked.insert(msg.msg_id.clone());
            if self.pending.remove(&msg.msg_id).is_some() {
                action = RxAction::CancelRebroadcast;
            }
        }
        Ok(RxOutcome {
            deliver: false,
            action,
        })
    }

    /// Timer path: returns the message to transmit now, or `None` when a
    /// stop condition holds (acked, expired, budget exhausted, retry limit).
    /// Returns the follow-up timer time when more retries remain.
    pub fn rebroadcast_due(
        &mut self,
        msg_id: &str,
        now: f64,
        now_wall: crate::walltime::WallTime,
        params: &ProtocolParams,
    ) -> Option<(Message, Option<f64>)> {
        let entry = self.pending.get_mut(msg_id)?;
        if crate::mfs::is_expired(&entry.message, now_wall)
            || entry.message.msg_count == Some(0)
            || entry.sent >= params.retry_limit
        {
            self.pending.remove(msg_id);
            return None;
        }
        entry.sent += 1;
        entry.next_tx = now + params.retry_interval;
        let msg = entry.message.clone();
        let again = if entry.sent < params.retry_limit {
            Some(entry.next_tx)
        } else {
            // Limit reached; nothing further will fire.
            self.pending.remove(msg_id);
            None
        };
        Some((msg, again))
    }

    /// Invariant check: an acknowledged message has no pending rebroadcast.
    pub fn assert_consistent(&self) {
        for id in &self.acked {
            debug_assert!(
                !self.pending.contains_key(id),
                "acked {id} still has a pending rebroadcast"
            );
        }
    }
}

/// Greedy geographic step: the in-range neighbor strictly closer to the
/// target than we are, minimizing remaining distance (ties by node id).
/// `None` means local maximum: hold the message and retry later.
pub fn next_hop_geographic<'a>(
    self_pose: &Pose,
    neighbors: &'a [(String, Pose)],
    target: &Point,
) -> Option<&'a str> {
    let own = self_pose.position.distance(target);
    neighbors
        .iter()
        .filter(|(_, pose)| pose.position.distance(target) < own)
        .min_by(|(ida, pa), (idb, pb)| {
            let da = pa.position.distance(target);
            let db = pb.position.distance(target);
            da.partial_cmp(&db).unwrap().then_with(|| ida.cmp(idb))
        })
        .map(|(id, _)| id.as_str())
}
