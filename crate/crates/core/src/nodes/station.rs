//! The base-station (local server) role: geographic information and user
//! repositories, location updates, identification requests, access
//! control, temporal alert rebroadcast, and query resolution.

use std::collections::{BTreeMap, BTreeSet};

use crate::geometry::Point;
use crate::mfs::{self, Message, MsgType};
use crate::nodes::policy::{evaluate_policy, AccessVerdict, Policy, ServiceEntry, UserRecord};
use crate::nodes::query::{
    resolve_facility_query, resolve_traffic_query, FacilityAdvertisement, QueryBody, ReplyBody,
    SensorSnapshot, ServiceBody, TrafficQueryParams,
};
use crate::roadnet::{RoadNetwork, SegmentLocator};
use crate::walltime::WallTime;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum NodesError {
    #[error("unknown service {0:?}")]
    UnknownService(String),
    #[error("station {station}: {problem}")]
    BadStation { station: String, problem: String },
    #[error(transparent)]
    Network(#[from] crate::roadnet::NetworkError),
    #[error(transparent)]
    Message(#[from] crate::mfs::MessageError),
}

/// What a station can see of a vehicle inside its coverage.
#[derive(Debug, Clone, PartialEq)]
pub struct VehicleView {
    pub vehicle_id: String,
    pub position: Point,
    pub speed: f64,
    pub segment: SegmentLocator,
}

/// A persistent alert parked at the station for periodic rebroadcast.
#[derive(Debug, Clone, PartialEq)]
pub struct AlertRecord {
    pub message: Message,
    pub stored_at: f64,
    pub rebroadcast_interval: f64,
    pub broadcasts: u32,
}

/// Outcome of feeding an alert to a station.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AlertIngest {
    /// Broadcast now; `stored` marks persistent alerts parked for rebroadcast.
    Accepted {
        stored: bool,
    },
    DuplicateId,
    Expired,
}

pub struct BaseStation {
    pub station_id: String,
    pub position: Point,
    pub coverage_radius: f64,
    pub covered_segments: BTreeSet<SegmentLocator>,
    /// The covered segment used as msg_source for station-born messages.
    pub home_segment: SegmentLocator,
    pub alert_rebroadcast_interval: f64,
    users: BTreeMap<String, UserRecord>,
    services: BTreeMap<String, ServiceEntry>,
    policies: Vec<Policy>,
    facilities: Vec<FacilityAdvertisement>,

    temporal_alerts: BTreeMap<String, AlertRecord>,
    last_segment: BTreeMap<String, SegmentLocator>,
    id_requested: BTreeSet<String>,
    sessions: BTreeMap<String, String>,
    offered: BTreeSet<(String, String)>,
    snapshots: Vec<SensorSnapshot>,
    msg_seq: u64,
    pub expired_drops: u64,
}

impl BaseStation {
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        station_id: impl Into<String>,
        position: Point,
        coverage_radius: f64,
        covered_segments: BTreeSet<SegmentLocator>,
        alert_rebroadcast_interval: f64,
        users: Vec<UserRecord>,
        services: Vec<ServiceEntry>,
        policies: Vec<Policy>,
        facilities: Vec<FacilityAdvertisement>,
        network: &RoadNetwork,
    ) -> Result<Self, NodesError> {
        let station_id = station_id.into();
        if coverage_radius <= 0.0 {
            return Err(NodesError::BadStation {
                station: station_id,
                problem: format!("coverage_radius must be positive, got {coverage_radius}"),
            });
        }
        for seg in &covered_segments {
            network.resolve(seg)?;
        }
        for policy in &policies {
            policy.validate().map_err(|e| NodesError::BadStation {
                station: station_id.clone(),
                problem: e.to_string(),
            })?;
            if !services.iter().any(|s| s.service_id == policy.service_id) {
                return Err(NodesError::UnknownService(policy.service_id.clone()));
            }
        }
        for ad in &facilities {
            ad.validate(network)?;
        }
        let mut user_map = BTreeMap::new();
        for u in users {
            if user_map.insert(u.username.clone(), u).is_some() {
                return Err(NodesError::BadStation {
                    station: station_id,
                    problem: "duplicate username in user repository".into(),
                });
            }
        }
        // Anchor the station to the nearest covered segment, or to the
        // network at large when it covers none.
        let home_segment = covered_segments
            .iter()
            .min_by(|a, b| {
                let da = network
                    .resolve(a)
                    .map(|s| s.polyline.distance_to(&position));
                let db = network
                    .resolve(b)
                    .map(|s| s.polyline.distance_to(&position));
                da.unwrap().partial_cmp(&db.unwrap()).unwrap()
            })
            .cloned()
            .map(Ok)
            .unwrap_or_else(|| network.locate_point(&position, coverage_radius))?;
        Ok(BaseStation {
            station_id,
            position,
            coverage_radius,
            covered_segments,
            home_segment,
            alert_rebroadcast_interval,
            users: user_map,
            services: services
                .into_iter()
                .map(|s| (s.service_id.clone(), s))
                .collect(),
            policies,
            facilities,
            temporal_alerts: BTreeMap::new(),
            last_segment: BTreeMap::new(),
            id_requested: BTreeSet::new(),
            sessions: BTreeMap::new(),
            offered: BTreeSet::new(),
            snapshots: Vec::new(),
            msg_seq: 0,
            expired_drops: 0,
        })
    }

    pub fn covers(&self, locator: &SegmentLocator) -> bool {
        self.covered_segments.contains(locator)
    }

    pub fn in_coverage(&self, p: &Point) -> bool {
        self.position.distance(p) <= self.coverage_radius
    }

    fn next_msg_id(&mut self) -> String {
        self.msg_seq += 1;
        format!("{}m{}", self.station_id, self.msg_seq)
    }

    fn service_message(
        &mut self,
        target: SegmentLocator,
        body: ServiceBody,
        now_wall: WallTime,
    ) -> Message {
        Message {
            msg_type: MsgType::Service,
            msg_target: target,
            msg_id: self.next_msg_id(),
            msg_source: self.home_segment.clone(),
            msg_creator: self.station_id.clone(),
            msg_time: now_wall,
            msg_expire: None,
            msg_count: None,
            msg_body: Some(body.encode()),
        }
    }

    /// Ends the visit state of vehicles that left coverage. Sessions,
    /// pending identification requests, and offer markers are visit-scoped.
    pub fn observe_coverage(&mut self, visible: &[VehicleView]) {
        let present: BTreeSet<&str> = visible.iter().map(|v| v.vehicle_id.as_str()).collect();
        self.id_requested.retain(|v| present.contains(v.as_str()));
        self.sessions.retain(|v, _| present.contains(v.as_str()));
        self.offered.retain(|(v, _)| present.contains(v.as_str()));
    }

    /// One location-update message per vehicle whose segment changed since
    /// the station's last record of it, ordered by vehicle id.
    pub fn location_updater_tick(
        &mut self,
        visible: &[VehicleView],
        now_wall: WallTime,
    ) -> Vec<(String, Message)> {
        let mut sorted: Vec<&VehicleView> = visible.iter().collect();
        sorted.sort_by(|a, b| a.vehicle_id.cmp(&b.vehicle_id));
        let mut out = Vec::new();
        for v in sorted {
            let changed = self.last_segment.get(&v.vehicle_id) != Some(&v.segment);
            if changed {
                self.last_segment
                    .insert(v.vehicle_id.clone(), v.segment.clone());
                let msg = self.service_message(
                    v.segment.clone(),
                    ServiceBody::LocationUpdate {
                        segment: v.segment.clone(),
                    },
                    now_wall,
                );
                out.push((v.vehicle_id.clone(), msg));
            }
        }
        out
    }

    /// One identification request per newly visible vehicle, at most once
    /// per visit, ordered by vehicle id.
    pub fn service_provider_tick(
        &mut self,
        visible: &[VehicleView],
        now_wall: WallTime,
    ) -> Vec<(String, Message)> {
        let mut sorted: Vec<&VehicleView> = visible.iter().collect();
        sorted.sort_by(|a, b| a.vehicle_id.cmp(&b.vehicle_id));
        let mut out = Vec::new();
        for v in sorted {
            if self.id_requested.insert(v.vehicle_id.clone()) {
                let msg =
                    self.service_message(v.segment.clone(), ServiceBody::IdentifyRequest, now_wall);
                out.push((v.vehicle_id.clone(), msg));
            }
        }
        out
    }

    /// Services that have a policy, in id order; only these ever produce
    /// decisions or offers.
    pub fn policied_service_ids(&self) -> Vec<String> {
        self.services
            .keys()
            .filter(|sid| self.policies.iter().any(|p| &p.service_id == *sid))
            .cloned()
            .collect()
    }

    /// Exact-match check against the user repository.
    pub fn authenticate(&self, username: &str, code: &str) -> bool {
        self.users
            .get(username)
            .map(|u| u.code == code)
            .unwrap_or(false)
    }

    /// Processes a vehicle's identification answer; a valid credential
    /// opens a session that lasts while the vehicle stays in coverage.
    pub fn handle_identification(&mut self, vehicle_id: &str, username: &str, code: &str) -> bool {
        if self.authenticate(username, code) {
            self.sessions
                .insert(vehicle_id.to_string(), username.to_string());
            true
        } else {
            false
        }
    }

    pub fn session_user(&self, vehicle_id: &str) -> Option<&str> {
        self.sessions.get(vehicle_id).map(|s| s.as_str())
    }

    fn has_session_for(&self, username: &str) -> bool {
        self.sessions.values().any(|u| u == username)
    }

    /// The access control engine: location, time, user information, and
    /// policies decide the verdict. Unknown services are an error, not a
    /// deny.
    pub fn access_decision(
        &self,
        username: &str,
        service_id: &str,
        requester_position: &Point,
        requester_segment: Option<&SegmentLocator>,
        now_wall: WallTime,
    ) -> Result<AccessVerdict, NodesError> {
        let service = self
            .services
            .get(service_id)
            .ok_or_else(|| NodesError::UnknownService(service_id.to_string()))?;
        let policy = self
            .policies
            .iter()
            .find(|p| p.service_id == service_id)
            .ok_or_else(|| NodesError::UnknownService(service_id.to_string()))?;
        let schedule = self.users.get(username).map(|u| u.schedule.as_slice());
        Ok(evaluate_policy(
            policy,
            service,
            self.has_session_for(username),
            username,
            schedule,
            requester_position,
            requester_segment,
            now_wall,
        ))
    }

    /// Side-effect-free scan: the services this user could use right now,
    /// in service-id order. This feeds the driver-facing service alerts.
    pub fn context_services(
        &self,
        username: &str,
        position: &Point,
        segment: Option<&SegmentLocator>,
        now_wall: WallTime,
    ) -> Vec<String> {
        self.services
            .keys()
            .filter(|sid| {
                self.access_decision(username, sid, position, segment, now_wall)
                    .map(|v| v.is_grant())
                    .unwrap_or(false)
            })
            .cloned()
            .collect()
    }

    /// Marks an offer as sent for this visit; false when already offered.
    pub fn mark_offered(&mut self, vehicle_id: &str, service_id: &str) -> bool {
        self.offered
            .insert((vehicle_id.to_string(), service_id.to_string()))
    }

    pub fn offer_message(
        &mut self,
        target: SegmentLocator,
        service_id: &str,
        now_wall: WallTime,
    ) -> Message {
        self.service_message(
            target,
            ServiceBody::Offer {
                service_id: service_id.to_string(),
            },
            now_wall,
        )
    }

    /// Takes in an arriving alert: broadcast immediately; persistent alerts
    /// (EXPIRES present) are parked in the temporal repository for periodic
    /// rebroadcast until they expire.
    pub fn alert_ingest(&mut self, msg: &Message, now: f64, now_wall: WallTime) -> AlertIngest {
        debug_assert_eq!(msg.msg_type, MsgType::Alert);
        if mfs::is_expired(msg, now_wall) {
            self.expired_drops += 1;
            return AlertIngest::Expired;
        }
        if self.temporal_alerts.contains_key(&msg.msg_id) {
            return AlertIngest::DuplicateId;
        }
        let stored = msg.msg_expire.is_some();
        if stored {
            self.temporal_alerts.insert(
                msg.msg_id.clone(),
                AlertRecord {
                    message: msg.clone(),
                    stored_at: now,
                    rebroadcast_interval: self.alert_rebroadcast_interval,
                    broadcasts: 1, // the ingest broadcast
                },
            );
        }
        AlertIngest::Accepted { stored }
    }

    /// Timer path for a parked alert: the message to rebroadcast now, or
    /// `None` once it expired (the record is then dropped).
    pub fn alert_due(&mut self, msg_id: &str, now_wall: WallTime) -> Option<Message> {
        let record = self.temporal_alerts.get_mut(msg_id)?;
        if mfs::is_expired(&record.message, now_wall) {
            self.temporal_alerts.remove(msg_id);
            return None;
        }
        record.broadcasts += 1;
        Some(record.message.clone())
    }

    /// Drops every expired record; the repository never holds dead alerts
    /// past a tick.
    pub fn purge_expired_alerts(&mut self, now_wall: WallTime) {
        self.temporal_alerts
            .retain(|_, r| !mfs::is_expired(&r.message, now_wall));
    }

    pub fn temporal_alert(&self, msg_id: &str) -> Option<&AlertRecord> {
        self.temporal_alerts.get(msg_id)
    }

    pub fn temporal_alert_count(&self) -> usize {
        self.temporal_alerts.len()
    }

    /// Fuses a vehicle report into the snapshot repository.
    pub fn record_snapshot(&mut self, snapshot: SensorSnapshot, window: f64) {
        let cutoff = snapshot.time - window;
        self.snapshots.push(snapshot);
        self.snapshots.retain(|s| s.time >= cutoff);
    }

    pub fn snapshots(&self) -> &[SensorSnapshot] {
        &self.snapshots
    }

    /// Resolves a query message this station covers; `None` when the
    /// target is outside the covered set or the body is not a question.
    pub fn resolve_query(
        &mut self,
        query: &Message,
        network: &RoadNetwork,
        now: f64,
        now_wall: WallTime,
        params: &TrafficQueryParams,
        reply_expire: u32,
    ) -> Result<Option<Message>, NodesError> {
        if !self.covers(&query.msg_target) {
            return Ok(None);
        }
        let body = match &query.msg_body {
            Some(b) => b,
            None => return Ok(None),
        };
        let reply_body = match QueryBody::decode(body) {
            Some(QueryBody::Traffic) => {
                let seg = network.resolve(&query.msg_target)?;
                let reply = resolve_traffic_query(
                    &self.snapshots,
                    &query.msg_target,
                    seg.length(),
                    now,
                    params,
                );
                ReplyBody::Traffic {
                    query_id: query.msg_id.clone(),
                    reply,
                }
            }
            Some(QueryBody::Facility { service_type }) => {
                let route = [query.msg_target.clone()];
                let matches =
                    resolve_facility_query(&self.facilities, &route, &service_type, network)?;
                ReplyBody::Facility {
                    query_id: query.msg_id.clone(),
                    matches: matches
                        .into_iter()
                        .map(|m| {
                            (
                                m.advertisement.service_type,
                                m.advertisement.address,
                                m.along_route_m,
                            )
                        })
                        .collect(),
                }
            }
            None => return Ok(None),
        };
        let reply = Message {
            msg_type: MsgType::Query,
            msg_target: query.msg_source.clone(),
            msg_id: self.next_msg_id(),
            msg_source: self.home_segment.clone(),
            msg_creator: self.station_id.clone(),
            msg_time: now_wall,
            msg_expire: Some(reply_expire),
            msg_count: None,
            msg_body: Some(reply_body.encode()),
        };
        Ok(Some(reply))
    }
}
