//! Scenario configuration: one human-editable TOML file describing the
//! network, radio, nodes, and scripted injections of a simulation run.
//!
//! ```toml
//! duration = 60.0
//! seed = 1
//! loss_probability = 0.0
//! start_of_day = "080000"
//! network = "networks/straight.toml"   # relative to this file
//!
//! [radio]
//! nominal_range = 100.0
//! discovery_mean = 2.25
//! setup_time = 0.75
//!
//! [[vehicle]]
//! id = "v01"
//! plan = [{ segment = "1-main-1", entry = 0.0, speed = 25.0 }]
//!
//! [[inject]]
//! at = 5.0
//! kind = "alert"
//! vehicle = "v01"
//! body = "accident"
//! expire = 10000
//! ```
//!
//! Section-by-section field lists live in the repository README.

use std::collections::BTreeSet;
use std::path::{Path, PathBuf};

use serde::Deserialize;

use crate::geometry::Point;
use crate::mobility::{PlanLeg, VehicleTrajectory};
use crate::nodes::{
    AllowedUsers, BaseStation, FacilityAdvertisement, LocationRule, Policy, ServiceEntry, TimeRule,
    TrafficQueryParams, UserRecord,
};
use crate::protocol::ProtocolParams;
use crate::radio::RadioProfile;
use crate::roadnet::{RoadNetwork, SegmentLocator};
use crate::walltime::{TimeWindow, WallTime};

/// Kernel cadence and plumbing knobs; the defaults suit every bundled
/// scenario.
#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(default)]
pub struct SimTuning {
    /// Link-state and station-visibility sampling step.
    pub link_tick: f64,
    /// Station logic cadence (snapshots, location updater, offers).
    pub station_tick: f64,
    /// Per-hop processing delay between a transmission and its receptions.
    pub processing_delay: f64,
    /// EXPIRES attached to station-composed replies.
    pub reply_expire: u32,
    /// EXPIRES attached to injected queries when none is given.
    pub default_query_expire: u32,
    /// Candidate routes considered when translating an end-user request.
    pub max_routes: usize,
}

impl Default for SimTuning {
    fn default() -> Self {
        SimTuning {
            link_tick: 0.1,
            station_tick: 1.0,
            processing_delay: 0.005,
            reply_expire: 600,
            default_query_expire: 5000,
            max_routes: 2,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct VehicleSpec {
    pub id: String,
    pub username: Option<String>,
    pub code: Option<String>,
    pub trajectory: VehicleTrajectory,
}

#[derive(Debug, Clone, PartialEq)]
pub struct StationSpec {
    pub id: String,
    pub position: Point,
    pub coverage_radius: f64,
    pub segments: BTreeSet<SegmentLocator>,
    pub alert_rebroadcast_interval: f64,
    pub users: Vec<UserRecord>,
    pub services: Vec<ServiceEntry>,
    pub policies: Vec<Policy>,
    pub facilities: Vec<FacilityAdvertisement>,
}

impl StationSpec {
    pub fn build(&self, network: &RoadNetwork) -> Result<BaseStation, crate::nodes::NodesError> {
        BaseStation::new(
            self.id.clone(),
            self.position,
            self.coverage_radius,
            self.segments.clone(),
            self.alert_rebroadcast_interval,
            self.users.clone(),
            self.services.clone(),
            self.policies.clone(),
            self.facilities.clone(),
            network,
        )
    }
}

/// A scripted event fed into the simulation at a fixed time.
#[derive(Debug, Clone, PartialEq)]
pub enum Injection {
    Alert {
        at: f64,
        vehicle: String,
        body: String,
        target: Option<SegmentLocator>,
        expire: Option<u32>,
        count: Option<u32>,
    },
    TrafficAhead {
        at: f64,
        vehicle: String,
        distance_m: f64,
        expire: Option<u32>,
    },
    UserQuery {
        at: f64,
        vehicle: String,
        destination: SegmentLocator,
        interests: Vec<String>,
        expire: Option<u32>,
    },
}

impl Injection {
    pub fn at(&self) -> f64 {
        match self {
            Injection::Alert { at, .. }
            | Injection::TrafficAhead { at, .. }
            | Injection::UserQuery { at, .. } => *at,
        }
    }

    pub fn vehicle(&self) -> &str {
        match self {
            Injection::Alert { vehicle, .. }
            | Injection::TrafficAhead { vehicle, .. }
            | Injection::UserQuery { vehicle, .. } => vehicle,
        }
    }
}

/// A fully loaded and validated scenario, ready to run any number of times.
#[derive(Debug)]
pub struct Scenario {
    pub network: RoadNetwork,
    pub radio: RadioProfile,
    pub protocol: ProtocolParams,
    pub query: TrafficQueryParams,
    pub tuning: SimTuning,
    pub vehicles: Vec<VehicleSpec>,
    pub stations: Vec<StationSpec>,
    pub injections: Vec<Injection>,
    pub loss_probability: f64,
    pub duration: f64,
    pub seed: u64,
    pub start_of_day: WallTime,
}

#[derive(Debug, thiserror::Error)]
pub enum ScenarioError {
    #[error("cannot read {path}: {message}")]
    Io { path: String, message: String },
    #[error("config does not parse: {0}")]
    Parse(String),
    #[error("scenario is invalid:\n{}", .0.join("\n"))]
    Invalid(Vec<String>),
}

// ---------------------------------------------------------------------------
// Raw file schema
// ---------------------------------------------------------------------------

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct ScenarioFile {
    duration: f64,
    #[serde(default)]
    seed: u64,
    #[serde(default)]
    loss_probability: f64,
    start_of_day: String,
    network: PathBuf,
    #[serde(default)]
    radio: RadioProfile,
    #[serde(default)]
    protocol: ProtocolParams,
    #[serde(default)]
    query: TrafficQueryParams,
    #[serde(default)]
    sim: SimTuning,
    #[serde(default)]
    vehicle: Vec<VehicleEntry>,
    #[serde(default)]
    station: Vec<StationEntry>,
    #[serde(default)]
    inject: Vec<InjectEntry>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct VehicleEntry {
    id: String,
    #[serde(default)]
    user: Option<String>,
    #[serde(default)]
    code: Option<String>,
    plan: Vec<PlanEntry>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct PlanEntry {
    segment: String,
    entry: f64,
    speed: f64,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct StationEntry {
    id: String,
    position: [f64; 2],
    coverage_radius: f64,
    #[serde(default)]
    segments: Vec<String>,
    #[serde(default = "default_rebroadcast_interval")]
    alert_rebroadcast_interval: f64,
    #[serde(default)]
    user: Vec<UserEntry>,
    #[serde(default)]
    service: Vec<ServiceConfigEntry>,
    #[serde(default)]
    policy: Vec<PolicyEntry>,
    #[serde(default)]
    facility: Vec<FacilityEntry>,
}

fn default_rebroadcast_interval() -> f64 {
    600.0
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct UserEntry {
    username: String,
    code: String,
    #[serde(default)]
    schedule: Vec<WindowEntry>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct WindowEntry {
    start: String,
    end: String,
    #[serde(default)]
    wraps: bool,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct ServiceConfigEntry {
    id: String,
    position: [f64; 2],
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct PolicyEntry {
    service: String,
    /// Either the literal "*" or a list of usernames.
    users: toml::Value,
    /// Either "within_schedule" or { windows = [...] }.
    time: toml::Value,
    #[serde(default)]
    max_distance: Option<f64>,
    #[serde(default)]
    segments: Vec<String>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct FacilityEntry {
    service_type: String,
    address: String,
    position: [f64; 2],
    segment: String,
    #[serde(default)]
    prices: Vec<(String, f64)>,
}

#[derive(Debug, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
enum InjectEntry {
    Alert {
        at: f64,
        vehicle: String,
        body: String,
        #[serde(default)]
        target: Option<String>,
        #[serde(default)]
        expire: Option<u32>,
        #[serde(default)]
        count: Option<u32>,
    },
    TrafficAhead {
        at: f64,
        vehicle: String,
        distance_m: f64,
        #[serde(default)]
        expire: Option<u32>,
    },
    UserQuery {
        at: f64,
        vehicle: String,
        destination: String,
        #[serde(default)]
        interests: Vec<String>,
        #[serde(default)]
        expire: Option<u32>,
    },
}

// ---------------------------------------------------------------------------
// Loading and validation
// ---------------------------------------------------------------------------

struct Problems(Vec<String>);

impl Problems {
    fn push(&mut self, msg: impl Into<String>) {
        self.0.push(msg.into());
    }

    fn locator(&mut self, context: &str, text: &str) -> Option<SegmentLocator> {
        match SegmentLocator::parse(text) {
            Ok(l) => Some(l),
            Err(e) => {
                self.push(format!("{context}: {e}"));
                None
            }
        }
    }

    fn window(&mut self, context: &str, w: &WindowEntry) -> Option<TimeWindow> {
        let start = match WallTime::parse(&w.start) {
            Ok(t) => t,
            Err(e) => {
                self.push(format!("{context}: {e}"));
                return None;
            }
        };
        let end = match WallTime::parse(&w.end) {
            Ok(t) => t,
            Err(e) => {
                self.push(format!("{context}: {e}"));
                return None;
            }
        };
        match TimeWindow::new(start, end, w.wraps) {
            Ok(win) => Some(win),
            Err(e) => {
                self.push(format!("{context}: {e}"));
                None
            }
        }
    }
}

impl Scenario {
    /// Loads and fully validates a scenario file. Every problem found is
    /// reported at once; nothing executes on a scenario that fails here.
    pub fn load(path: &Path) -> Result<Scenario, ScenarioError> {
        let text = std::fs::read_to_string(path).map_err(|e| ScenarioError::Io {
            path: path.display().to_string(),
            message: e.to_string(),
        })?;
        let base = path.parent().unwrap_or(Path::new("."));
        Scenario::from_toml_str(&text, base)
    }

    pub fn from_toml_str(text: &str, base_dir: &Path) -> Result<Scenario, ScenarioError> {
        let file: ScenarioFile =
            toml::from_str(text).map_err(|e| ScenarioError::Parse(e.to_string()))?;
        let mut problems = Problems(Vec::new());

        if file.duration <= 0.0 {
            problems.push(format!("duration must be positive, got {}", file.duration));
        }
        if !(0.0..=1.0).contains(&file.loss_probability) {
            problems.push(format!(
                "loss_probability must be in [0, 1], got {}",
                file.loss_probability
            ));
        }
        let start_of_day = match WallTime::parse(&file.start_of_day) {
            Ok(t) => t,
            Err(e) => {
                problems.push(format!("start_of_day: {e}"));
                WallTime::from_hms(0, 0, 0).unwrap()
            }
        };
        if let Err(e) = file.radio.validate() {
            problems.push(format!("radio: {e}"));
        }
        if file.protocol.retry_interval <= 0.0 {
            problems.push("protocol.retry_interval must be positive".to_string());
        }

        let network_path = base_dir.join(&file.network);
        let network = match RoadNetwork::load(&network_path) {
            Ok(n) => n,
            Err(e) => {
                // Nothing else is checkable without the network.
                problems.push(format!("network {}: {e}", network_path.display()));
                return Err(ScenarioError::Invalid(problems.0));
            }
        };

        let mut vehicles = Vec::new();
        let mut vehicle_ids = BTreeSet::new();
        for v in &file.vehicle {
            if !vehicle_ids.insert(v.id.clone()) {
                problems.push(format!("vehicle {}: duplicate id", v.id));
            }
            let mut plan = Vec::new();
            for (i, leg) in v.plan.iter().enumerate() {
                if let Some(seg) =
                    problems.locator(&format!("vehicle {} leg {i}", v.id), &leg.segment)
                {
                    plan.push(PlanLeg {
                        segment: seg,
                        entry_time: leg.entry,
                        speed: leg.speed,
                    });
                }
            }
            let trajectory = VehicleTrajectory::new(v.id.clone(), plan);
            if let Err(e) = trajectory.validate(&network) {
                problems.push(e.to_string());
            }
            vehicles.push(VehicleSpec {
                id: v.id.clone(),
                username: v.user.clone(),
                code: v.code.clone(),
                trajectory,
            });
        }
        // Creator tokens feed msg_id generation, so they must not collide.
        let mut creators = BTreeSet::new();
        for v in &vehicles {
            let creator = v.username.clone().unwrap_or_else(|| v.id.clone());
            if !creators.insert(creator.clone()) {
                problems.push(format!(
                    "vehicle {}: creator token {creator:?} is not unique across vehicles",
                    v.id
                ));
            }
        }

        let mut stations = Vec::new();
        for s in &file.station {
            let ctx = format!("station {}", s.id);
            let mut segments = BTreeSet::new();
            for seg in &s.segments {
                if let Some(l) = problems.locator(&ctx, seg) {
                    segments.insert(l);
                }
            }
            let mut users = Vec::new();
            for u in &s.user {
                let mut schedule = Vec::new();
                for w in &u.schedule {
                    if let Some(win) = problems.window(&format!("{ctx} user {}", u.username), w) {
                        schedule.push(win);
                    }
                }
                users.push(UserRecord {
                    username: u.username.clone(),
                    code: u.code.clone(),
                    schedule,
                    profile: vec![],
                });
            }
            let services: Vec<ServiceEntry> = s
                .service
                .iter()
                .map(|e| ServiceEntry {
                    service_id: e.id.clone(),
                    position: Point::new(e.position[0], e.position[1]),
                })
                .collect();
            let mut policies = Vec::new();
            for p in &s.policy {
                let allowed = parse_allowed_users(&p.users, &mut problems, &ctx);
                let time_rule = parse_time_rule(&p.time, &mut problems, &ctx);
                let mut rule_segments = BTreeSet::new();
                for seg in &p.segments {
                    if let Some(l) = problems.locator(&ctx, seg) {
                        rule_segments.insert(l);
                    }
                }
                policies.push(Policy {
                    service_id: p.service.clone(),
                    allowed_users: allowed,
                    time_rule,
                    location_rule: LocationRule {
                        max_distance: p.max_distance,
                        segments: rule_segments,
                    },
                });
            }
            let mut facilities = Vec::new();
            for f in &s.facility {
                if let Some(seg) = problems.locator(&ctx, &f.segment) {
                    facilities.push(FacilityAdvertisement {
                        service_type: f.service_type.clone(),
                        address: f.address.clone(),
                        prices: f.prices.clone(),
                        position: Point::new(f.position[0], f.position[1]),
                        segment: seg,
                    });
                }
            }
            let spec = StationSpec {
                id: s.id.clone(),
                position: Point::new(s.position[0], s.position[1]),
                coverage_radius: s.coverage_radius,
                segments,
                alert_rebroadcast_interval: s.alert_rebroadcast_interval,
                users,
                services,
                policies,
                facilities,
            };
            // Dry-run construction surfaces repository problems now.
            if let Err(e) = spec.build(&network) {
                problems.push(format!("{ctx}: {e}"));
            }
            stations.push(spec);
        }

        let mut injections = Vec::new();
        for (i, inj) in file.inject.iter().enumerate() {
            let ctx = format!("inject[{i}]");
            match inj {
                InjectEntry::Alert {
                    at,
                    vehicle,
                    body,
                    target,
                    expire,
                    count,
                } => {
                    let target = target.as_ref().and_then(|t| problems.locator(&ctx, t));
                    injections.push(Injection::Alert {
                        at: *at,
                        vehicle: vehicle.clone(),
                        body: body.clone(),
                        target,
                        expire: *expire,
                        count: *count,
                    });
                }
                InjectEntry::TrafficAhead {
                    at,
                    vehicle,
                    distance_m,
                    expire,
                } => injections.push(Injection::TrafficAhead {
                    at: *at,
                    vehicle: vehicle.clone(),
                    distance_m: *distance_m,
                    expire: *expire,
                }),
                InjectEntry::UserQuery {
                    at,
                    vehicle,
                    destination,
                    interests,
                    expire,
                } => {
                    if let Some(dest) = problems.locator(&ctx, destination) {
                        injections.push(Injection::UserQuery {
                            at: *at,
                            vehicle: vehicle.clone(),
                            destination: dest,
                            interests: interests.clone(),
                            expire: *expire,
                        });
                    }
                }
            }
        }
        for (i, inj) in injections.iter().enumerate() {
            if !vehicle_ids.contains(inj.vehicle()) {
                problems.push(format!(
                    "inject[{i}] references unknown vehicle {:?}",
                    inj.vehicle()
                ));
            }
            if inj.at() < 0.0 || inj.at() > file.duration {
                problems.push(format!(
                    "inject[{i}] time {} is outside [0, duration]",
                    inj.at()
                ));
            }
            if let Injection::Alert {
                target: Some(t), ..
            } = inj
            {
                if let Err(e) = network.resolve(t) {
                    problems.push(format!("inject[{i}] target: {e}"));
                }
            }
            if let Injection::UserQuery { destination, .. } = inj {
                if let Err(e) = network.resolve(destination) {
                    problems.push(format!("inject[{i}] destination: {e}"));
                }
            }
        }

        if !problems.0.is_empty() {
            return Err(ScenarioError::Invalid(problems.0));
        }
        Ok(Scenario {
            network,
            radio: file.radio,
            protocol: file.protocol,
            query: file.query,
            tuning: file.sim,
            vehicles,
            stations,
            injections,
            loss_probability: file.loss_probability,
            duration: file.duration,
            seed: file.seed,
            start_of_day,
        })
    }
}

fn parse_allowed_users(value: &toml::Value, problems: &mut Problems, ctx: &str) -> AllowedUsers {
    match value {
        toml::Value::String(s) if s == "*" => AllowedUsers::Any("*".into()),
        toml::Value::String(s) => {
            problems.push(format!(
                "{ctx}: policy users must be \"*\" or a list, got {s:?}"
            ));
            AllowedUsers::Set(Default::default())
        }
        toml::Value::Array(items) => {
            let mut set = BTreeSet::new();
            for item in items {
                match item.as_str() {
                    Some(s) => {
                        set.insert(s.to_string());
                    }
                    None => problems.push(format!("{ctx}: policy users must be strings")),
                }
            }
            AllowedUsers::Set(set)
        }
        other => {
            problems.push(format!(
                "{ctx}: policy users must be \"*\" or a list, got {other}"
            ));
            AllowedUsers::Set(Default::default())
        }
    }
}

fn parse_time_rule(value: &toml::Value, problems: &mut Problems, ctx: &str) -> TimeRule {
    match value {
        toml::Value::String(s) if s == "within_schedule" || s == "schedule" => {
            TimeRule::WithinSchedule
        }
        toml::Value::Table(t) => {
            let mut windows = Vec::new();
            match t.get("windows").and_then(|w| w.as_array()) {
                Some(items) => {
                    for item in items {
                        let entry: Result<WindowEntry, _> = item.clone().try_into();
                        match entry {
                            Ok(w) => {
                                if let Some(win) = problems.window(ctx, &w) {
                                    windows.push(win);
                                }
                            }
                            Err(e) => problems.push(format!("{ctx}: bad time window: {e}")),
                        }
                    }
                }
                None => problems.push(format!("{ctx}: time rule table needs a windows array")),
            }
            TimeRule::Windows(windows)
        }
        other => {
            problems.push(format!(
                "{ctx}: time rule must be \"within_schedule\" or {{ windows = [...] }}, got {other}"
            ));
            TimeRule::WithinSchedule
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn write_network(dir: &Path) {
        std::fs::write(
            dir.join("net.toml"),
            r#"
            [[road]]
            id = 1
            name = "main"
            [[road.segment]]
            id = 1
            polyline = [[0.0, 0.0], [1000.0, 0.0]]
            "#,
        )
        .unwrap();
    }

    #[test]
    fn loads_a_minimal_scenario() {
        let dir = std::env::temp_dir().join("convoy_scenario_min");
        std::fs::create_dir_all(&dir).unwrap();
        write_network(&dir);
        let text = r#"
            duration = 10.0
            seed = 3
            start_of_day = "080000"
            network = "net.toml"

            [[vehicle]]
            id = "v01"
            plan = [{ segment = "1-main-1", entry = 0.0, speed = 10.0 }]

            [[inject]]
            at = 1.0
            kind = "alert"
            vehicle = "v01"
            body = "accident"
            expire = 100
        "#;
        let scenario = Scenario::from_toml_str(text, &dir).unwrap();
        assert_eq!(scenario.vehicles.len(), 1);
        assert_eq!(scenario.injections.len(), 1);
        assert_eq!(scenario.seed, 3);
        assert_eq!(scenario.tuning.link_tick, 0.1);
    }

    #[test]
    fn dangling_locator_is_reported_by_name() {
        let dir = std::env::temp_dir().join("convoy_scenario_bad");
        std::fs::create_dir_all(&dir).unwrap();
        write_network(&dir);
        let text = r#"
            duration = 10.0
            start_of_day = "080000"
            network = "net.toml"

            [[vehicle]]
            id = "v01"
            plan = [{ segment = "9-ghost-1", entry = 0.0, speed = 10.0 }]
        "#;
        let err = Scenario::from_toml_str(text, &dir).unwrap_err();
        let text = err.to_string();
        assert!(text.contains("unknown road_id 9"), "{text}");
    }

    #[test]
    fn all_problems_reported_at_once() {
        let dir = std::env::temp_dir().join("convoy_scenario_multi");
        std::fs::create_dir_all(&dir).unwrap();
        write_network(&dir);
        let text = r#"
            duration = -1.0
            start_of_day = "990000"
            network = "net.toml"

            [[inject]]
            at = 1.0
            kind = "alert"
            vehicle = "nobody"
            body = "x"
        "#;
        match Scenario::from_toml_str(text, &dir).unwrap_err() {
            ScenarioError::Invalid(problems) => {
                assert!(problems.len() >= 3, "{problems:?}");
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn unknown_fields_are_rejected() {
        let dir = std::env::temp_dir().join("convoy_scenario_unknown");
        std::fs::create_dir_all(&dir).unwrap();
        write_network(&dir);
        let text = r#"
            duration = 10.0
            start_of_day = "080000"
            network = "net.toml"
            typo_field = 1
        "#;
        assert!(matches!(
            Scenario::from_toml_str(text, &dir).unwrap_err(),
            ScenarioError::Parse(_)
        ));
    }
}
