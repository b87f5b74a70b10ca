//! Access-control records: users, services, and the policies the access
//! control engine evaluates from user, location, and time context.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use crate::geometry::Point;
use crate::roadnet::SegmentLocator;
use crate::walltime::{TimeWindow, WallTime};

/// A registered user: the `[username, code]` credential tuple plus a work
/// schedule used by schedule-based time rules.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UserRecord {
    pub username: String,
    pub code: String,
    #[serde(default)]
    pub schedule: Vec<TimeWindow>,
    /// Free-form profile attributes.
    #[serde(default)]
    pub profile: Vec<(String, String)>,
}

/// A resource the station can grant access to, anchored at a position for
/// distance rules.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ServiceEntry {
    pub service_id: String,
    pub position: Point,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum AllowedUsers {
    /// The literal "*".
    Any(String),
    Set(BTreeSet<String>),
}

impl AllowedUsers {
    pub fn permits(&self, username: &str) -> bool {
        match self {
            AllowedUsers::Any(_) => true,
            AllowedUsers::Set(users) => users.contains(username),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TimeRule {
    /// Grant only inside one of the requesting user's schedule windows.
    WithinSchedule,
    /// Grant only inside one of these explicit windows.
    Windows(Vec<TimeWindow>),
}

/// Location constraints; both present means both must hold.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct LocationRule {
    /// Maximum distance in meters from the service position.
    pub max_distance: Option<f64>,
    /// Segments the requester must be on (empty = unconstrained).
    #[serde(default)]
    pub segments: BTreeSet<SegmentLocator>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Policy {
    pub service_id: String,
    pub allowed_users: AllowedUsers,
    pub time_rule: TimeRule,
    #[serde(default)]
    pub location_rule: LocationRule,
}

impl Policy {
    pub fn validate(&self) -> Result<(), PolicyError> {
        if let Some(d) = self.location_rule.max_distance {
            if d <= 0.0 {
                return Err(PolicyError::NonPositiveDistance {
                    service_id: self.service_id.clone(),
                    distance: d,
                });
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum PolicyError {
    #[error("policy for {service_id}: max_distance must be positive, got {distance}")]
    NonPositiveDistance { service_id: String, distance: f64 },
}

/// The first rule that fails decides the deny reason; rules are checked in
/// the order authentication, user set, location, time.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DenyReason {
    NotAuthenticated,
    UserNotAllowed,
    Location,
    Time,
}

impl DenyReason {
    pub fn as_str(&self) -> &'static str {
        match self {
            DenyReason::NotAuthenticated => "auth",
            DenyReason::UserNotAllowed => "user",
            DenyReason::Location => "location",
            DenyReason::Time => "time",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AccessVerdict {
    Grant,
    Deny(DenyReason),
}

impl AccessVerdict {
    pub fn is_grant(&self) -> bool {
        matches!(self, AccessVerdict::Grant)
    }
}

/// Pure policy evaluation, shared by the access decision entry point and
/// the context manager's side-effect-free scan.
#[allow(clippy::too_many_arguments)]
pub fn evaluate_policy(
    policy: &Policy,
    service: &ServiceEntry,
    authenticated: bool,
    username: &str,
    user_schedule: Option<&[TimeWindow]>,
    requester_position: &Point,
    requester_segment: Option<&SegmentLocator>,
    now: WallTime,
) -> AccessVerdict {
    if !authenticated {
        return AccessVerdict::Deny(DenyReason::NotAuthenticated);
    }
    if !policy.allowed_users.permits(username) {
        return AccessVerdict::Deny(DenyReason::UserNotAllowed);
    }
    if let Some(max) = policy.location_rule.max_distance {
        if requester_position.distance(&service.position) > max {
            return AccessVerdict::Deny(DenyReason::Location);
        }
    }
    if !policy.location_rule.segments.is_empty() {
        match requester_segment {
            Some(seg) if policy.location_rule.segments.contains(seg) => {}
            _ => return AccessVerdict::Deny(DenyReason::Location),
        }
    }
    let in_time = match &policy.time_rule {
        TimeRule::WithinSchedule => user_schedule
            .map(|ws| ws.iter().any(|w| w.contains(now)))
            .unwrap_or(false),
        TimeRule::Windows(ws) => ws.iter().any(|w| w.contains(now)),
    };
    if !in_time {
        return AccessVerdict::Deny(DenyReason::Time);
    }
    AccessVerdict::Grant
}
