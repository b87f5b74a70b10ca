//! Deterministic discrete-event simulator and protocol library for
//! Bluetooth-based inter-vehicle communication.
//!
//! The crate models a collaborative-driving service infrastructure:
//!
//! - [`roadnet`]: the digitized road network and the
//!   `road_id-road_name-segment_id` locators all messages are addressed by;
//! - [`mobility`]: scripted vehicle kinematics and contact-window analytics;
//! - [`radio`]: Bluetooth-like range, discovery, and piconet clustering;
//! - [`mfs`]: the nine-field message format with its URI wire form and
//!   pluggable encryption envelope;
//! - [`protocol`]: broadcast suppression with implicit acknowledgement and
//!   greedy geographic forwarding;
//! - [`nodes`]: vehicle clients and base stations (location updates,
//!   identification, access control, temporal alerts, query resolution);
//! - [`scenario`] and [`sim`]: the scenario file format and the
//!   deterministic event kernel with CSV trace, metrics, and decision logs.

pub mod geometry;
pub mod mfs;
pub mod mobility;
pub mod nodes;
pub mod protocol;
pub mod radio;
pub mod roadnet;
pub mod scenario;
pub mod sim;
pub mod walltime;

pub use geometry::Point;
pub use mfs::{Message, MsgType};
pub use mobility::{ContactDuration, Pose, VehicleTrajectory};
pub use radio::RadioProfile;
pub use roadnet::{RoadNetwork, SegmentLocator};
pub use scenario::Scenario;
pub use sim::{SimOutput, Simulation};
pub use walltime::WallTime;
