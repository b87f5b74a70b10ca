//! Query resolution over fused vehicle reports, facility lookups, and the
//! small body grammars messages carry.
//!
//! Bodies are `key=value` pairs joined by `;`. Values escape `%`, `;`,
//! `,`, and `=` with percent escapes so free-text fields (addresses)
//! cannot break the grammar.

use serde::{Deserialize, Serialize};

use crate::geometry::Point;
use crate::roadnet::{RoadNetwork, SegmentLocator};

/// One fused report of a vehicle's state, as collected by a station.
#[derive(Debug, Clone, PartialEq)]
pub struct SensorSnapshot {
    pub vehicle_id: String,
    pub time: f64,
    pub speed: f64,
    pub position: Point,
    pub segment: SegmentLocator,
}

/// Thresholds for the congestion estimate.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TrafficQueryParams {
    /// Averaging window in seconds.
    pub window: f64,
    /// Below this average speed (km/h) a segment reads as congested.
    pub speed_threshold_kmh: f64,
    /// Above this density (vehicles per km) a segment reads as congested.
    pub density_threshold_per_km: f64,
}

impl Default for TrafficQueryParams {
    fn default() -> Self {
        TrafficQueryParams {
            window: 60.0,
            speed_threshold_kmh: 30.0,
            density_threshold_per_km: 50.0,
        }
    }
}

/// Computed answer to a traffic query.
#[derive(Debug, Clone, PartialEq)]
pub struct TrafficReply {
    /// Mean of the snapshot speeds in the window; `None` for an empty segment.
    pub avg_speed_ms: Option<f64>,
    /// Distinct vehicles per km of segment.
    pub density_per_km: f64,
    pub congested: bool,
}

/// Average speed, density, and congestion over the snapshots for
/// `target` within `[now - window, now]`.
pub fn resolve_traffic_query(
    snapshots: &[SensorSnapshot],
    target: &SegmentLocator,
    segment_length_m: f64,
    now: f64,
    params: &TrafficQueryParams,
) -> TrafficReply {
    let window_start = now - params.window;
    let relevant: Vec<&SensorSnapshot> = snapshots
        .iter()
        .filter(|s| s.segment == *target && s.time >= window_start && s.time <= now)
        .collect();
    if relevant.is_empty() {
        return TrafficReply {
            avg_speed_ms: None,
            density_per_km: 0.0,
            congested: false,
        };
    }
    let avg = relevant.iter().map(|s| s.speed).sum::<f64>() / relevant.len() as f64;
    let mut vehicles: Vec<&str> = relevant.iter().map(|s| s.vehicle_id.as_str()).collect();
    vehicles.sort_unstable();
    vehicles.dedup();
    let density = vehicles.len() as f64 / (segment_length_m / 1000.0);
    let congested = avg < params.speed_threshold_kmh / crate::mobility::KMH_PER_MS
        || density > params.density_threshold_per_km;
    TrafficReply {
        avg_speed_ms: Some(avg),
        density_per_km: density,
        congested,
    }
}

/// A roadside facility advertisement: what is sold, where, at what prices.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FacilityAdvertisement {
    pub service_type: String,
    pub address: String,
    #[serde(default)]
    pub prices: Vec<(String, f64)>,
    pub position: Point,
    pub segment: SegmentLocator,
}

impl FacilityAdvertisement {
    /// Advertised position must sit by its segment.
    pub fn validate(&self, network: &RoadNetwork) -> Result<(), crate::roadnet::NetworkError> {
        let seg = network.resolve(&self.segment)?;
        let d = seg.polyline.distance_to(&self.position);
        if d > 50.0 {
            return Err(crate::roadnet::NetworkError::OffNetwork {
                x: self.position.x,
                y: self.position.y,
                tolerance: 50.0,
            });
        }
        Ok(())
    }
}

/// A facility hit with its distance along the queried route.
#[derive(Debug, Clone, PartialEq)]
pub struct FacilityMatch {
    pub advertisement: FacilityAdvertisement,
    pub along_route_m: f64,
}

/// Advertisements of `service_type` on the route's segments, nearest along
/// the route first.
pub fn resolve_facility_query(
    advertisements: &[FacilityAdvertisement],
    route: &[SegmentLocator],
    service_type: &str,
    network: &RoadNetwork,
) -> Result<Vec<FacilityMatch>, crate::roadnet::NetworkError> {
    let mut walked = 0.0;
    let mut matches = Vec::new();
    for locator in route {
        let seg = network.resolve(locator)?;
        for ad in advertisements {
            if ad.segment == *locator && ad.service_type == service_type {
                let offset = seg.polyline.offset_of_closest(&ad.position);
                matches.push(FacilityMatch {
                    advertisement: ad.clone(),
                    along_route_m: walked + offset,
                });
            }
        }
        walked += seg.length();
    }
    matches.sort_by(|a, b| {
        a.along_route_m
            .partial_cmp(&b.along_route_m)
            .unwrap()
            .then_with(|| a.advertisement.address.cmp(&b.advertisement.address))
    });
    Ok(matches)
}

// ---------------------------------------------------------------------------
// Body grammar
// ---------------------------------------------------------------------------

fn escape_value(v: &str) -> String {
    let mut out = String::with_capacity(v.len());
    for ch in v.chars() {
        match ch {
            '%' => out.push_str("%25"),
            ';' => out.push_str("%3B"),
            ',' => out.push_str("%2C"),
            '=' => out.push_str("%3D"),
            c => out.push(c),
        }
    }
    out
}

fn unescape_value(v: &str) -> String {
    v.replace("%3B", ";")
        .replace("%2C", ",")
        .replace("%3D", "=")
        .replace("%25", "%")
}

/// The question a query message carries.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum QueryBody {
    Traffic,
    Facility { service_type: String },
}

impl QueryBody {
    pub fn encode(&self) -> String {
        match self {
            QueryBody::Traffic => "q=traffic".to_string(),
            QueryBody::Facility { service_type } => {
                format!("q=facility;type={}", escape_value(service_type))
            }
        }
    }

    pub fn decode(body: &str) -> Option<QueryBody> {
        let mut kind = None;
        let mut service_type = None;
        for pair in body.split(';') {
            match pair.split_once('=') {
                Some(("q", v)) => kind = Some(v.to_string()),
                Some(("type", v)) => service_type = Some(unescape_value(v)),
                _ => {}
            }
        }
        match kind.as_deref() {
            Some("traffic") => Some(QueryBody::Traffic),
            Some("facility") => service_type.map(|t| QueryBody::Facility { service_type: t }),
            _ => None,
        }
    }
}

/// A computed answer traveling back toward the querier.
#[derive(Debug, Clone, PartialEq)]
pub enum ReplyBody {
    Traffic {
        query_id: String,
        reply: TrafficReply,
    },
    Facility {
        query_id: String,
        matches: Vec<(String, String, f64)>, // (type, address, along_route_m)
    },
}

impl ReplyBody {
    pub fn query_id(&self) -> &str {
        match self {
            ReplyBody::Traffic { query_id, .. } => query_id,
            ReplyBody::Facility { query_id, .. } => query_id,
        }
    }

    pub fn encode(&self) -> String {
        match self {
            ReplyBody::Traffic { query_id, reply } => {
                let avg = match reply.avg_speed_ms {
                    Some(v) => format!("{v}"),
                    None => "NA".to_string(),
                };
                format!(
                    "re={};avg_speed={};density={};congested={}",
                    escape_value(query_id),
                    avg,
                    reply.density_per_km,
                    if reply.congested { 1 } else { 0 },
                )
            }
            ReplyBody::Facility { query_id, matches } => {
                let items: Vec<String> = matches
                    .iter()
                    .map(|(t, addr, d)| format!("{},{},{}", escape_value(t), escape_value(addr), d))
                    .collect();
                format!(
                    "re={};facilities={}",
                    escape_value(query_id),
                    items.join("|")
                )
            }
        }
    }

    pub fn decode(body: &str) -> Option<ReplyBody> {
        let mut query_id = None;
        let mut avg = None;
        let mut density = None;
        let mut congested = None;
        let mut facilities: Option<&str> = None;
        for pair in body.split(';') {
            match pair.split_once('=') {
                Some(("re", v)) => query_id = Some(unescape_value(v)),
                Some(("avg_speed", v)) => avg = Some(v.to_string()),
                Some(("density", v)) => density = v.parse::<f64>().ok(),
                Some(("congested", v)) => congested = Some(v == "1"),
                Some(("facilities", v)) => facilities = Some(v),
                _ => {}
            }
        }
        let query_id = query_id?;
        if let Some(items) = facilities {
            let mut matches = Vec::new();
            if !items.is_empty() {
                for item in items.split('|') {
                    let mut parts = item.splitn(3, ',');
                    let t = unescape_value(parts.next()?);
                    let addr = unescape_value(parts.next()?);
                    let d = parts.next()?.parse::<f64>().ok()?;
                    matches.push((t, addr, d));
                }
            }
            return Some(ReplyBody::Facility { query_id, matches });
        }
        let avg_speed_ms = match avg?.as_str() {
            "NA" => None,
            v => Some(v.parse::<f64>().ok()?),
        };
        Some(ReplyBody::Traffic {
            query_id,
            reply: TrafficReply {
                avg_speed_ms,
                density_per_km: density?,
                congested: congested?,
            },
        })
    }

    pub fn is_reply(body: &str) -> bool {
        body.starts_with("re=")
    }
}

/// Service-type message payloads used by the infrastructure handshakes.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ServiceBody {
    /// Station asks a newly seen vehicle for the driver's credentials.
    IdentifyRequest,
    /// Vehicle answers with its `[username, code]` tuple.
    Identification { username: String, code: String },
    /// Station tells a vehicle its freshly detected segment.
    LocationUpdate { segment: SegmentLocator },
    /// Station offers a currently grantable service.
    Offer { service_id: String },
}

impl ServiceBody {
    pub fn encode(&self) -> String {
        match self {
            ServiceBody::IdentifyRequest => "identify".to_string(),
            ServiceBody::Identification { username, code } => {
                format!("ident={}/{}", escape_value(username), escape_value(code))
            }
            ServiceBody::LocationUpdate { segment } => format!("locupdate={segment}"),
            ServiceBody::Offer { service_id } => format!("offer={}", escape_value(service_id)),
        }
    }

    pub fn decode(body: &str) -> Option<ServiceBody> {
        if body == "identify" {
            return Some(ServiceBody::IdentifyRequest);
        }
        if let Some(rest) = body.strip_prefix("ident=") {
            let (u, c) = rest.split_once('/')?;
            return Some(ServiceBody::Identification {
                username: unescape_value(u),
                code: unescape_value(c),
            });
        }
        if let Some(rest) = body.strip_prefix("locupdate=") {
            return SegmentLocator::parse(rest)
                .ok()
                .map(|segment| ServiceBody::LocationUpdate { segment });
        }
        if let Some(rest) = body.strip_prefix("offer=") {
            return Some(ServiceBody::Offer {
                service_id: unescape_value(rest),
            });
        }
        None
    }
}
