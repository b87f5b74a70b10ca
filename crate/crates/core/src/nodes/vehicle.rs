//! The vehicle (client) role: translating driver requests into
//! location-sensitive query messages and answering infrastructure
//! handshakes.

use crate::mfs::{Message, MsgType};
use crate::mobility::VehicleTrajectory;
use crate::nodes::query::{QueryBody, ServiceBody};
use crate::nodes::station::NodesError;
use crate::roadnet::{RoadNetwork, SegmentLocator};
use crate::walltime::WallTime;

/// A driver's end-user request: where they are going and what they care
/// about along the way.
#[derive(Debug, Clone, PartialEq)]
pub struct UserRequest {
    pub destination: SegmentLocator,
    pub interests: Vec<String>,
}

/// Client-side message factory for one vehicle.
#[derive(Debug, Clone)]
pub struct VehicleClient {
    pub vehicle_id: String,
    pub username: Option<String>,
    pub code: Option<String>,
    msg_seq: u64,
}

impl VehicleClient {
    pub fn new(
        vehicle_id: impl Into<String>,
        username: Option<String>,
        code: Option<String>,
    ) -> Self {
        VehicleClient {
            vehicle_id: vehicle_id.into(),
            username,
            code,
            msg_seq: 0,
        }
    }

    /// The CREATOR token for outgoing messages: the driver when known,
    /// otherwise the vehicle itself.
    pub fn creator(&self) -> &str {
        self.username.as_deref().unwrap_or(&self.vehicle_id)
    }

    pub fn fresh_msg_id(&mut self) -> String {
        self.msg_seq += 1;
        format!("{}{}", self.creator(), self.msg_seq)
    }

    /// Builds the alert a driver fires off at an observed condition.
    #[allow(clippy::too_many_arguments)]
    pub fn originate_alert(
        &mut self,
        body: impl Into<String>,
        target: SegmentLocator,
        source: SegmentLocator,
        expire: Option<u32>,
        count: Option<u32>,
        now_wall: WallTime,
    ) -> Message {
        Message {
            msg_type: MsgType::Alert,
            msg_target: target,
            msg_id: self.fresh_msg_id(),
            msg_source: source,
            msg_creator: self.creator().to_string(),
            msg_time: now_wall,
            msg_expire: expire,
            msg_count: count,
            msg_body: Some(body.into()),
        }
    }

    fn query_message(
        &mut self,
        target: SegmentLocator,
        source: SegmentLocator,
        body: QueryBody,
        expire: u32,
        now_wall: WallTime,
    ) -> Message {
        Message {
            msg_type: MsgType::Query,
            msg_target: target,
            msg_id: self.fresh_msg_id(),
            msg_source: source,
            msg_creator: self.creator().to_string(),
            msg_time: now_wall,
            msg_expire: Some(expire),
            msg_count: None,
            msg_body: Some(body.encode()),
        }
    }

    /// "How is traffic N meters ahead": one traffic query targeting the
    /// segment that far along the vehicle's plan.
    #[allow(clippy::too_many_arguments)]
    pub fn originate_traffic_ahead(
        &mut self,
        trajectory: &VehicleTrajectory,
        network: &RoadNetwork,
        now: f64,
        distance_m: f64,
        expire: u32,
        now_wall: WallTime,
    ) -> Result<Message, NodesError> {
        let pose = trajectory
            .pose_at(network, now)
            .map_err(|e| NodesError::BadStation {
                station: self.vehicle_id.clone(),
                problem: e.to_string(),
            })?;
        let target = trajectory
            .segment_ahead(network, now, distance_m)
            .map_err(|e| NodesError::BadStation {
                station: self.vehicle_id.clone(),
                problem: e.to_string(),
            })?;
        Ok(self.query_message(target, pose.segment, QueryBody::Traffic, expire, now_wall))
    }

    /// Translates an end-user request into location-sensitive queries: for
    /// every segment on the candidate routes to the destination, one
    /// traffic query, plus one facility query per interest. Message ids
    /// across the burst are pairwise distinct.
    #[allow(clippy::too_many_arguments)]
    pub fn originate_user_query(
        &mut self,
        request: &UserRequest,
        current_segment: &SegmentLocator,
        network: &RoadNetwork,
        max_routes: usize,
        expire: u32,
        now_wall: WallTime,
    ) -> Result<Vec<Message>, NodesError> {
        let routes = network.routes_between(current_segment, &request.destination, max_routes)?;
        if routes.is_empty() {
            return Err(NodesError::BadStation {
                station: self.vehicle_id.clone(),
                problem: format!(
                    "destination {} is unreachable from {current_segment}",
                    request.destination
                ),
            });
        }
        // Segments of interest: union over routes in first-appearance order.
        let mut segments: Vec<SegmentLocator> = Vec::new();
        for route in &routes {
            for seg in route {
                if !segments.contains(seg) {
                    segments.push(seg.clone());
                }
            }
        }
        let mut out = Vec::new();
        for seg in &segments {
            out.push(self.query_message(
                seg.clone(),
                current_segment.clone(),
                QueryBody::Traffic,
                expire,
                now_wall,
            ));
            for interest in &request.interests {
                out.push(self.query_message(
                    seg.clone(),
                    current_segment.clone(),
                    QueryBody::Facility {
                        service_type: interest.clone(),
                    },
                    expire,
                    now_wall,
                ));
            }
        }
        Ok(out)
    }

    /// Answer to a station's identification request, when the driver has
    /// credentials on board.
    pub fn identification_reply(
        &mut self,
        request: &Message,
        own_segment: SegmentLocator,
        now_wall: WallTime,
    ) -> Option<Message> {
        let (username, code) = match (&self.username, &self.code) {
            (Some(u), Some(c)) => (u.clone(), c.clone()),
            _ => return None,
        };
        Some(Message {
            msg_type: MsgType::Service,
            msg_target: request.msg_source.clone(),
            msg_id: self.fresh_msg_id(),
            msg_source: own_segment,
            msg_creator: self.creator().to_string(),
            msg_time: now_wall,
            msg_expire: None,
            msg_count: None,
            msg_body: Some(ServiceBody::Identification { username, code }.encode()),
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{Point, Polyline};
    use crate::roadnet::{Road, RoadNetwork, Segment};

    fn grid() -> RoadNetwork {
        let mut net = RoadNetwork::new();
        net.add_road(Road {
            road_id: 2,
            road_name: "hilton".into(),
            segments: vec![Segment::new(
                9,
                Polyline::new(vec![Point::new(0.0, 0.0), Point::new(100.0, 0.0)]).unwrap(),
            )
            .unwrap()],
        })
        .unwrap();
        net.add_road(Road {
            road_id: 5,
            road_name: "william".into(),
            segments: vec![
                Segment::new(
                    1,
                    Polyline::new(vec![Point::new(100.0, 0.0), Point::new(100.0, 300.0)]).unwrap(),
                )
                .unwrap(),
                Segment::new(
                    2,
                    Polyline::new(vec![Point::new(100.0, 300.0), Point::new(100.0, 600.0)])
                        .unwrap(),
                )
                .unwrap(),
            ],
        })
        .unwrap();
        net.add_road(Road {
            road_id: 11,
            road_name: "newton".into(),
            segments: vec![Segment::new(
                7,
                Polyline::new(vec![Point::new(100.0, 0.0), Point::new(400.0, 0.0)]).unwrap(),
            )
            .unwrap()],
        })
        .unwrap();
        net.add_road(Road {
            road_id: 6,
            road_name: "king".into(),
            segments: vec![
                Segment::new(
                    1,
                    Polyline::new(vec![Point::new(400.0, 0.0), Point::new(400.0, 300.0)]).unwrap(),
                )
                .unwrap(),
                Segment::new(
                    2,
                    Polyline::new(vec![Point::new(400.0, 300.0), Point::new(100.0, 300.0)])
                        .unwrap(),
                )
                .unwrap(),
            ],
        })
        .unwrap();
        net
    }

    #[test]
    fn user_query_covers_both_routes_with_interests() {
        let net = grid();
        let mut client = VehicleClient::new("x1", Some("nevirvj".into()), Some("n1".into()));
        let request = UserRequest {
            destination: SegmentLocator::new(5, "william", 2),
            interests: vec!["coffee".into()],
        };
        let from = SegmentLocator::new(2, "hilton", 9);
        let msgs = client
            .originate_user_query(
                &request,
                &from,
                &net,
                2,
                5000,
                WallTime::parse("101523").unwrap(),
            )
            .unwrap();

        // Two routes: direct (3 segments) and the newton/king detour
        // (5 segments); union = 6 distinct segments, each with a traffic
        // query and a coffee query.
        assert_eq!(msgs.len(), 12);
        let ids: std::collections::BTreeSet<&str> =
            msgs.iter().map(|m| m.msg_id.as_str()).collect();
        assert_eq!(ids.len(), msgs.len(), "msg ids must be pairwise distinct");
        assert!(msgs.iter().all(|m| m.msg_type == MsgType::Query));
        assert!(msgs.iter().all(|m| m.msg_source == from));
        assert!(msgs.iter().any(|m| m.msg_target == request.destination));
        let traffic = msgs
            .iter()
            .filter(|m| {
                QueryBody::decode(m.msg_body.as_deref().unwrap()) == Some(QueryBody::Traffic)
            })
            .count();
        assert_eq!(traffic, 6);
    }

    #[test]
    fn degenerate_route_yields_single_traffic_query() {
        let net = grid();
        let mut client = VehicleClient::new("x1", None, None);
        let from = SegmentLocator::new(2, "hilton", 9);
        let request = UserRequest {
            destination: from.clone(),
            interests: vec![],
        };
        let msgs = client
            .originate_user_query(
                &request,
                &from,
                &net,
                2,
                5000,
                WallTime::parse("101523").unwrap(),
            )
            .unwrap();
        assert_eq!(msgs.len(), 1);
        assert_eq!(msgs[0].msg_target, from);
        assert_eq!(msgs[0].msg_creator, "x1");
    }

    #[test]
    fn unroutable_destination_is_an_error() {
        let net = grid();
        let mut client = VehicleClient::new("x1", None, None);
        // hilton-9 is unreachable from william-2 (one-way grid).
        let request = UserRequest {
            destination: SegmentLocator::new(2, "hilton", 9),
            interests: vec![],
        };
        let from = SegmentLocator::new(5, "william", 2);
        assert!(client
            .originate_user_query(
                &request,
                &from,
                &net,
                2,
                5000,
                WallTime::parse("101523").unwrap()
            )
            .is_err());
    }

    #[test]
    fn identification_needs_credentials() {
        let req = Message {
            msg_type: MsgType::Service,
            msg_target: SegmentLocator::new(5, "william", 2),
            msg_id: "workm1".into(),
            msg_source: SegmentLocator::new(5, "william", 2),
            msg_creator: "work".into(),
            msg_time: WallTime::parse("084500").unwrap(),
            msg_expire: None,
            msg_count: None,
            msg_body: Some(ServiceBody::IdentifyRequest.encode()),
        };
        let mut anon = VehicleClient::new("x2", None, None);
        assert!(anon
            .identification_reply(&req, SegmentLocator::new(5, "william", 2), req.msg_time)
            .is_none());

        let mut john = VehicleClient::new("x1", Some("john".into()), Some("j123".into()));
        let reply = john
            .identification_reply(&req, SegmentLocator::new(5, "william", 2), req.msg_time)
            .unwrap();
        assert_eq!(reply.msg_target, req.msg_source);
        assert_eq!(
            ServiceBody::decode(reply.msg_body.as_deref().unwrap()),
            Some(ServiceBody::Identification {
                username: "john".into(),
                code: "j123".into()
            })
        );
    }
}
