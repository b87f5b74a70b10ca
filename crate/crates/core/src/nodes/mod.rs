//! The two node roles of the service infrastructure: vehicles (clients)
//! and base stations (local servers), plus collaborative query resolution
//! and location/time/user access control.

pub mod policy;
pub mod query;
pub mod station;
pub mod vehicle;

pub use policy::{
    AccessVerdict, AllowedUsers, DenyReason, LocationRule, Policy, ServiceEntry, TimeRule,
    UserRecord,
};
pub use query::{
    resolve_facility_query, resolve_traffic_query, FacilityAdvertisement, FacilityMatch, QueryBody,
    ReplyBody, SensorSnapshot, ServiceBody, TrafficQueryParams, TrafficReply,
};
pub use station::{AlertIngest, AlertRecord, BaseStation, NodesError, VehicleView};
pub use vehicle::{UserRequest, VehicleClient};
