//! The deterministic discrete-event engine binding mobility, radio,
//! protocol, and node behavior: a (time, seq)-ordered event queue, one
//! seeded RNG stream consumed in event order, a uniform per-link loss
//! model, and CSV-ready trace, metrics, and decision outputs.
//!
//! A simulation instance is strictly sequential. Identical (scenario,
//! seed) pairs replay to byte-identical traces; independent seeds can run
//! in parallel on shared read-only scenario data.

pub mod metrics;
pub mod trace;

use std::cmp::Ordering;
use std::collections::{BTreeMap, BTreeSet, BinaryHeap};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::geometry::Point;
use crate::mfs::{self, Message, MsgType};
use crate::mobility::{Pose, VehicleTrajectory};
use crate::nodes::{
    AccessVerdict, AlertIngest, BaseStation, NodesError, ReplyBody, SensorSnapshot, ServiceBody,
    VehicleClient, VehicleView,
};
use crate::protocol::{ForwardingState, RxAction, RxContext};
use crate::radio::sample_discovery;
use crate::scenario::{Injection, Scenario};
use crate::walltime::WallTime;

pub use metrics::{metrics_to_csv, MessageMetrics, Metrics, NodeMetrics, METRICS_HEADER};
pub use trace::{
    decisions_to_csv, trace_to_csv, DecisionRow, TraceKind, TraceRow, DECISIONS_HEADER,
    TRACE_HEADER,
};

/// Pairwise link state between two vehicles. Entering range starts the
/// discovery timer; leaving range at any point resets to undiscovered.
/// `OutOfRange` is reported when either node has no pose at query time.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LinkState {
    Undiscovered,
    Discovering,
    Connected,
    OutOfRange,
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum LinkPhase {
    Discovering { ready_at: f64 },
    Connected,
}

#[derive(Debug, Clone, PartialEq, Eq)]
enum TxMode {
    Broadcast,
    Unicast(String),
}

#[derive(Debug, Clone)]
enum EventKind {
    Tick,
    Inject(usize),
    Rx {
        to: String,
        from: String,
        msg: Message,
    },
    TxComplete {
        from: String,
        msg: Message,
        mode: TxMode,
    },
    Timer(TimerKind),
}

#[derive(Debug, Clone)]
enum TimerKind {
    Retry { node: String, msg_id: String },
    AlertRebroadcast { station: String, msg_id: String },
    Hold { node: String, msg_id: String },
}

struct QueueEntry {
    time: f64,
    seq: u64,
    kind: EventKind,
}

impl PartialEq for QueueEntry {
    fn eq(&self, other: &Self) -> bool {
        self.time == other.time && self.seq == other.seq
    }
}
impl Eq for QueueEntry {}
impl Ord for QueueEntry {
    fn cmp(&self, other: &Self) -> Ordering {
        // Min-heap on (time, seq).
        other
            .time
            .total_cmp(&self.time)
            .then_with(|| other.seq.cmp(&self.seq))
    }
}
impl PartialOrd for QueueEntry {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

#[derive(Debug, Clone)]
struct HeldMessage {
    msg: Message,
    last_sender: Option<String>,
}

struct SimVehicle {
    client: VehicleClient,
    trajectory: VehicleTrajectory,
    fwd: ForwardingState,
    held: BTreeMap<String, HeldMessage>,
    outstanding: BTreeSet<String>,
    replies: Vec<(f64, ReplyBody)>,
    offers: Vec<(f64, String)>,
}

struct SimStation {
    station: BaseStation,
    seen: BTreeSet<String>,
    last_verdict: BTreeMap<(String, String), AccessVerdict>,
}

/// Everything a run leaves behind.
pub struct SimOutput {
    pub trace: Vec<TraceRow>,
    pub decisions: Vec<DecisionRow>,
    pub metrics: Metrics,
    /// Temporal alerts still parked per station when the run ended.
    pub remaining_alerts: BTreeMap<String, usize>,
    /// Query replies accepted by each originating vehicle.
    pub replies: BTreeMap<String, Vec<(f64, ReplyBody)>>,
    /// Service offers each vehicle received.
    pub offers: BTreeMap<String, Vec<(f64, String)>>,
}

pub struct Simulation<'a> {
    scenario: &'a Scenario,
    rng: ChaCha8Rng,
    queue: BinaryHeap<QueueEntry>,
    next_seq: u64,
    now: f64,
    tick_index: u64,
    vehicles: BTreeMap<String, SimVehicle>,
    stations: BTreeMap<String, SimStation>,
    links: BTreeMap<(String, String), LinkPhase>,
    trace: Vec<TraceRow>,
    decisions: Vec<DecisionRow>,
    metrics: Metrics,
}

impl<'a> Simulation<'a> {
    /// Builds a fresh instance. The scenario is already validated by its
    /// loader; station construction re-checks the repositories.
    pub fn new(scenario: &'a Scenario, seed: u64) -> Result<Self, NodesError> {
        let mut vehicles = BTreeMap::new();
        for spec in &scenario.vehicles {
            vehicles.insert(
                spec.id.clone(),
                SimVehicle {
                    client: VehicleClient::new(
                        spec.id.clone(),
                        spec.username.clone(),
                        spec.code.clone(),
                    ),
                    trajectory: spec.trajectory.clone(),
                    fwd: ForwardingState::new(),
                    held: BTreeMap::new(),
                    outstanding: BTreeSet::new(),
                    replies: Vec::new(),
                    offers: Vec::new(),
                },
            );
        }
        let mut stations = BTreeMap::new();
        for spec in &scenario.stations {
            stations.insert(
                spec.id.clone(),
                SimStation {
                    station: spec.build(&scenario.network)?,
                    seen: BTreeSet::new(),
                    last_verdict: BTreeMap::new(),
                },
            );
        }
        Ok(Simulation {
            scenario,
            rng: ChaCha8Rng::seed_from_u64(seed),
            queue: BinaryHeap::new(),
            next_seq: 0,
            now: 0.0,
            tick_index: 0,
            vehicles,
            stations,
            links: BTreeMap::new(),
            trace: Vec::new(),
            decisions: Vec::new(),
            metrics: Metrics::default(),
        })
    }

    pub fn run(mut self) -> SimOutput {
        self.push_at(0.0, EventKind::Tick);
        for (i, inj) in self.scenario.injections.iter().enumerate() {
            self.push_at(inj.at(), EventKind::Inject(i));
        }
        while let Some(entry) = self.queue.pop() {
            if entry.time > self.scenario.duration + 1e-9 {
                break;
            }
            self.now = entry.time;
            self.handle(entry.kind);
        }
        let remaining_alerts = self
            .stations
            .iter()
            .map(|(id, s)| (id.clone(), s.station.temporal_alert_count()))
            .collect();
        let replies = self
            .vehicles
            .iter()
            .map(|(id, v)| (id.clone(), v.replies.clone()))
            .collect();
        let offers = self
            .vehicles
            .iter()
            .map(|(id, v)| (id.clone(), v.offers.clone()))
            .collect();
        SimOutput {
            trace: self.trace,
            decisions: self.decisions,
            metrics: self.metrics,
            remaining_alerts,
            replies,
            offers,
        }
    }

    // -- plumbing ----------------------------------------------------------

    fn push_at(&mut self, time: f64, kind: EventKind) {
        let seq = self.next_seq;
        self.next_seq += 1;
        self.queue.push(QueueEntry { time, seq, kind });
    }

    fn wall(&self, t: f64) -> WallTime {
        self.scenario.start_of_day.advanced_by(t)
    }

    fn log(&mut self, node: &str, kind: TraceKind, msg_id: &str, detail: String) {
        let seq = self.trace.len() as u64;
        self.trace.push(TraceRow {
            time: self.now,
            seq,
            node: node.to_string(),
            kind,
            msg_id: msg_id.to_string(),
            detail,
        });
    }

    fn poses_at(&self, t: f64) -> BTreeMap<String, Pose> {
        let mut out = BTreeMap::new();
        for (id, v) in &self.vehicles {
            if let Ok(pose) = v.trajectory.pose_at(&self.scenario.network, t) {
                out.insert(id.clone(), pose);
            }
        }
        out
    }

    fn position_of(&self, node: &str, poses: &BTreeMap<String, Pose>) -> Option<Point> {
        if let Some(pose) = poses.get(node) {
            return Some(pose.position);
        }
        self.stations.get(node).map(|s| s.station.position)
    }

    fn pair_key(a: &str, b: &str) -> (String, String) {
        if a <= b {
            (a.to_string(), b.to_string())
        } else {
            (b.to_string(), a.to_string())
        }
    }

    fn connected(&self, a: &str, b: &str) -> bool {
        matches!(
            self.links.get(&Self::pair_key(a, b)),
            Some(LinkPhase::Connected)
        )
    }

    /// Current link state of a vehicle pair.
    pub fn link_state(&self, a: &str, b: &str, t: f64) -> LinkState {
        let poses = self.poses_at(t);
        if !poses.contains_key(a) || !poses.contains_key(b) {
            return LinkState::OutOfRange;
        }
        match self.links.get(&Self::pair_key(a, b)) {
            None => LinkState::Undiscovered,
            Some(LinkPhase::Discovering { .. }) => LinkState::Discovering,
            Some(LinkPhase::Connected) => LinkState::Connected,
        }
    }

    // -- event handlers ----------------------------------------------------

    fn handle(&mut self, kind: EventKind) {
        match kind {
            EventKind::Tick => self.on_tick(),
            EventKind::Inject(i) => self.on_inject(i),
            EventKind::TxComplete { from, msg, mode } => self.on_tx(&from, msg, mode),
            EventKind::Rx { to, from, msg } => self.on_rx(&to, &from, msg),
            EventKind::Timer(timer) => self.on_timer(timer),
        }
    }

    fn on_tick(&mut self) {
        let t = self.now;
        let poses = self.poses_at(t);
        self.update_links(&poses, t);

        let station_every =
            (self.scenario.tuning.station_tick / self.scenario.tuning.link_tick).round() as u64;
        if self.tick_index.is_multiple_of(station_every.max(1)) {
            self.station_tick(t, &poses);
        }

        self.tick_index += 1;
        let next = self.tick_index as f64 * self.scenario.tuning.link_tick;
        if next <= self.scenario.duration {
            self.push_at(next, EventKind::Tick);
        }
    }

    fn update_links(&mut self, poses: &BTreeMap<String, Pose>, t: f64) {
        let profile = &self.scenario.radio;
        let ids: Vec<&String> = self.vehicles.keys().collect();
        let mut transitions: Vec<(String, String, bool)> = Vec::new(); // (a, b, connected?)
        let mut inserts: Vec<((String, String), LinkPhase)> = Vec::new();
        let mut removals: Vec<(String, String)> = Vec::new();
        let mut draws: Vec<(String, String)> = Vec::new();

        for i in 0..ids.len() {
            for j in i + 1..ids.len() {
                let key = (ids[i].clone(), ids[j].clone());
                match (poses.get(ids[i]), poses.get(ids[j])) {
                    (Some(pa), Some(pb)) => {
                        let in_range = pa.position.distance(&pb.position) <= profile.nominal_range;
                        match (self.links.get(&key), in_range) {
                            (None, true) => draws.push(key),
                            (Some(LinkPhase::Discovering { ready_at }), true) => {
                                if t >= *ready_at {
                                    inserts.push((key.clone(), LinkPhase::Connected));
                                    transitions.push((key.0, key.1, true));
                                }
                            }
                            (Some(phase), false) => {
                                if matches!(phase, LinkPhase::Connected) {
                                    transitions.push((key.0.clone(), key.1.clone(), false));
                                }
                                removals.push(key);
                            }
                            _ => {}
                        }
                    }
                    _ => {
                        if let Some(phase) = self.links.get(&key) {
                            if matches!(phase, LinkPhase::Connected) {
                                transitions.push((key.0.clone(), key.1.clone(), false));
                            }
                            removals.push(key);
                        }
                    }
                }
            }
        }
        for key in removals {
            self.links.remove(&key);
        }
        for key in draws {
            let overhead = sample_discovery(profile, &mut self.rng) + profile.setup_time;
            self.links.insert(
                key,
                LinkPhase::Discovering {
                    ready_at: t + overhead,
                },
            );
        }
        for (key, phase) in inserts {
            self.links.insert(key, phase);
        }
        for (a, b, connected) in transitions {
            let kind = if connected {
                TraceKind::Connect
            } else {
                TraceKind::Disconnect
            };
            self.log(&a, kind, "", format!("peer={b}"));
        }
    }

    fn station_tick(&mut self, t: f64, poses: &BTreeMap<String, Pose>) {
        let wall = self.wall(t);
        let station_ids: Vec<String> = self.stations.keys().cloned().collect();
        for sid in station_ids {
            let visible: Vec<VehicleView> = poses
                .iter()
                .filter(|(_, pose)| self.stations[&sid].station.in_coverage(&pose.position))
                .map(|(vid, pose)| VehicleView {
                    vehicle_id: vid.clone(),
                    position: pose.position,
                    speed: pose.speed,
                    segment: pose.segment.clone(),
                })
                .collect();

            let window = self.scenario.query.window;
            let mut emissions: Vec<(String, Message)> = Vec::new();
            {
                let entry = self.stations.get_mut(&sid).unwrap();
                entry.station.observe_coverage(&visible);
                let present: BTreeSet<&str> =
                    visible.iter().map(|v| v.vehicle_id.as_str()).collect();
                entry
                    .last_verdict
                    .retain(|(v, _), _| present.contains(v.as_str()));
                for v in &visible {
                    entry.station.record_snapshot(
                        SensorSnapshot {
                            vehicle_id: v.vehicle_id.clone(),
                            time: t,
                            speed: v.speed,
                            position: v.position,
                            segment: v.segment.clone(),
                        },
                        window,
                    );
                }
                emissions.extend(entry.station.location_updater_tick(&visible, wall));
                emissions.extend(entry.station.service_provider_tick(&visible, wall));
                entry.station.purge_expired_alerts(wall);
            }
            for (vehicle, msg) in emissions {
                self.metrics
                    .message(&msg.msg_id)
                    .created_at
                    .get_or_insert(t);
                self.push_at(
                    t,
                    EventKind::TxComplete {
                        from: sid.clone(),
                        msg,
                        mode: TxMode::Unicast(vehicle),
                    },
                );
            }
            self.context_offers(&sid, &visible, t, wall);
        }
    }

    /// Evaluates access for every sessioned vehicle against every policied
    /// service; logs verdict changes and sends an offer on each grant,
    /// once per visit.
    fn context_offers(&mut self, sid: &str, visible: &[VehicleView], t: f64, wall: WallTime) {
        let mut offers: Vec<(String, Message)> = Vec::new();
        {
            let entry = self.stations.get_mut(sid).unwrap();
            let service_ids = entry.station.policied_service_ids();
            for v in visible {
                let user = match entry.station.session_user(&v.vehicle_id) {
                    Some(u) => u.to_string(),
                    None => continue,
                };
                for service_id in &service_ids {
                    let verdict = match entry.station.access_decision(
                        &user,
                        service_id,
                        &v.position,
                        Some(&v.segment),
                        wall,
                    ) {
                        Ok(v) => v,
                        Err(_) => continue,
                    };
                    let key = (v.vehicle_id.clone(), service_id.clone());
                    if entry.last_verdict.get(&key) != Some(&verdict) {
                        entry.last_verdict.insert(key, verdict);
                        let (text, reason) = match verdict {
                            AccessVerdict::Grant => ("grant", ""),
                            AccessVerdict::Deny(r) => ("deny", r.as_str()),
                        };
                        self.decisions.push(DecisionRow {
                            time: t,
                            station: sid.to_string(),
                            user: user.clone(),
                            service: service_id.clone(),
                            verdict: text,
                            reason,
                        });
                    }
                    if verdict.is_grant() && entry.station.mark_offered(&v.vehicle_id, service_id) {
                        let msg = entry
                            .station
                            .offer_message(v.segment.clone(), service_id, wall);
                        offers.push((v.vehicle_id.clone(), msg));
                    }
                }
            }
        }
        for (vehicle, msg) in offers {
            self.metrics
                .message(&msg.msg_id)
                .created_at
                .get_or_insert(t);
            self.push_at(
                t,
                EventKind::TxComplete {
                    from: sid.to_string(),
                    msg,
                    mode: TxMode::Unicast(vehicle),
                },
            );
        }
    }

    fn on_inject(&mut self, index: usize) {
        let t = self.now;
        let wall = self.wall(t);
        let injection = self.scenario.injections[index].clone();
        let vehicle_id = injection.vehicle().to_string();
        let pose = match self.poses_at(t).remove(&vehicle_id) {
            Some(p) => p,
            None => {
                self.log(
                    &vehicle_id,
                    TraceKind::ExpireDrop,
                    "",
                    "inject-skipped: vehicle inactive".to_string(),
                );
                return;
            }
        };

        match injection {
            Injection::Alert {
                body,
                target,
                expire,
                count,
                ..
            } => {
                let target = target.unwrap_or_else(|| pose.segment.clone());
                let msg = {
                    let v = self.vehicles.get_mut(&vehicle_id).unwrap();
                    let msg = v.client.originate_alert(
                        body,
                        target,
                        pose.segment.clone(),
                        expire,
                        count,
                        wall,
                    );
                    v.fwd.originate(&msg, &self.scenario.protocol, t);
                    msg
                };
                self.metrics.message(&msg.msg_id).created_at = Some(t);
                self.log(&vehicle_id, TraceKind::Inject, &msg.msg_id, "alert".into());
                self.push_at(
                    t,
                    EventKind::Timer(TimerKind::Retry {
                        node: vehicle_id,
                        msg_id: msg.msg_id.clone(),
                    }),
                );
            }
            Injection::TrafficAhead {
                distance_m, expire, ..
            } => {
                let expire = expire.unwrap_or(self.scenario.tuning.default_query_expire);
                let result = {
                    let v = self.vehicles.get_mut(&vehicle_id).unwrap();
                    let trajectory = v.trajectory.clone();
                    v.client.originate_traffic_ahead(
                        &trajectory,
                        &self.scenario.network,
                        t,
                        distance_m,
                        expire,
                        wall,
                    )
                };
                match result {
                    Ok(msg) => {
                        let v = self.vehicles.get_mut(&vehicle_id).unwrap();
                        v.outstanding.insert(msg.msg_id.clone());
                        self.metrics.message(&msg.msg_id).created_at = Some(t);
                        self.log(
                            &vehicle_id,
                            TraceKind::Inject,
                            &msg.msg_id,
                            format!("traffic_ahead target={}", msg.msg_target),
                        );
                        self.attempt_forward(&vehicle_id, msg, None);
                    }
                    Err(e) => self.log(
                        &vehicle_id,
                        TraceKind::ExpireDrop,
                        "",
                        format!("inject: {e}"),
                    ),
                }
            }
            Injection::UserQuery {
                destination,
                interests,
                expire,
                ..
            } => {
                let expire = expire.unwrap_or(self.scenario.tuning.default_query_expire);
                let result = {
                    let v = self.vehicles.get_mut(&vehicle_id).unwrap();
                    v.client.originate_user_query(
                        &crate::nodes::UserRequest {
                            destination,
                            interests,
                        },
                        &pose.segment,
                        &self.scenario.network,
                        self.scenario.tuning.max_routes,
                        expire,
                        wall,
                    )
                };
                match result {
                    Ok(msgs) => {
                        for msg in msgs {
                            {
                                let v = self.vehicles.get_mut(&vehicle_id).unwrap();
                                v.outstanding.insert(msg.msg_id.clone());
                            }
                            self.metrics.message(&msg.msg_id).created_at = Some(t);
                            self.log(
                                &vehicle_id,
                                TraceKind::Inject,
                                &msg.msg_id,
                                format!("user_query target={}", msg.msg_target),
                            );
                            self.attempt_forward(&vehicle_id, msg, None);
                        }
                    }
                    Err(e) => self.log(
                        &vehicle_id,
                        TraceKind::ExpireDrop,
                        "",
                        format!("inject: {e}"),
                    ),
                }
            }
        }
    }

    /// One forwarding attempt for a query or reply: prefer an in-range
    /// station, else the greedy geographic next hop among connected
    /// vehicles, else hold the message and retry later. EXPIRES is the
    /// only way a held message dies.
    fn attempt_forward(&mut self, node: &str, msg: Message, last_sender: Option<String>) {
        let t = self.now;
        let wall = self.wall(t);
        if mfs::is_expired(&msg, wall) {
            self.log(
                node,
                TraceKind::ExpireDrop,
                &msg.msg_id,
                "held past expiry".into(),
            );
            self.metrics.message(&msg.msg_id).expire_drops += 1;
            if let Some(v) = self.vehicles.get_mut(node) {
                v.held.remove(&msg.msg_id);
            }
            return;
        }
        let poses = self.poses_at(t);
        let self_pose = match poses.get(node) {
            Some(p) => p.clone(),
            None => {
                if let Some(v) = self.vehicles.get_mut(node) {
                    v.held.remove(&msg.msg_id);
                }
                return;
            }
        };

        // Infrastructure first: the nearest covering station in range.
        let mut best_station: Option<(f64, &String)> = None;
        for (sid, s) in &self.stations {
            if Some(sid.as_str()) == last_sender.as_deref() {
                continue;
            }
            if s.station.in_coverage(&self_pose.position) {
                let d = s.station.position.distance(&self_pose.position);
                if best_station.map(|(bd, _)| d < bd).unwrap_or(true) {
                    best_station = Some((d, sid));
                }
            }
        }
        if let Some((_, sid)) = best_station {
            let sid = sid.clone();
            if let Some(v) = self.vehicles.get_mut(node) {
                v.held.remove(&msg.msg_id);
            }
            self.push_at(
                t,
                EventKind::TxComplete {
                    from: node.to_string(),
                    msg,
                    mode: TxMode::Unicast(sid),
                },
            );
            return;
        }

        let target_point = match self.scenario.network.resolve(&msg.msg_target) {
            Ok(seg) => seg.centroid(),
            Err(e) => {
                self.log(
                    node,
                    TraceKind::ExpireDrop,
                    &msg.msg_id,
                    format!("bad target: {e}"),
                );
                if let Some(v) = self.vehicles.get_mut(node) {
                    v.held.remove(&msg.msg_id);
                }
                return;
            }
        };
        let neighbors: Vec<(String, Pose)> = poses
            .iter()
            .filter(|(vid, pose)| {
                vid.as_str() != node
                    && self.connected(node, vid)
                    && pose.position.distance(&self_pose.position)
                        <= self.scenario.radio.nominal_range
            })
            .map(|(vid, pose)| (vid.clone(), pose.clone()))
            .collect();
        match crate::protocol::next_hop_geographic(&self_pose, &neighbors, &target_point) {
            Some(next) => {
                let next = next.to_string();
                if let Some(v) = self.vehicles.get_mut(node) {
                    v.held.remove(&msg.msg_id);
                }
                self.push_at(
                    t,
                    EventKind::TxComplete {
                        from: node.to_string(),
                        msg,
                        mode: TxMode::Unicast(next),
                    },
                );
            }
            None => {
                self.log(
                    node,
                    TraceKind::Hold,
                    &msg.msg_id,
                    "no closer neighbor".into(),
                );
                let retry = t + self.scenario.protocol.retry_interval;
                let msg_id = msg.msg_id.clone();
                if let Some(v) = self.vehicles.get_mut(node) {
                    v.held
                        .insert(msg_id.clone(), HeldMessage { msg, last_sender });
                }
                self.push_at(
                    retry,
                    EventKind::Timer(TimerKind::Hold {
                        node: node.to_string(),
                        msg_id,
                    }),
                );
            }
        }
    }

    fn on_tx(&mut self, from: &str, msg: Message, mode: TxMode) {
        let t = self.now;
        let poses = self.poses_at(t);
        let from_pos = match self.position_of(from, &poses) {
            Some(p) => p,
            None => return, // transmitter vanished before its slot
        };
        self.metrics
            .message(&msg.msg_id)
            .created_at
            .get_or_insert(t);
        self.metrics.message(&msg.msg_id).tx += 1;
        self.metrics.node(from).tx += 1;
        let mut mode_detail = match &mode {
            TxMode::Broadcast => "broadcast".to_string(),
            TxMode::Unicast(to) => format!("unicast to={to}"),
        };
        if msg.msg_type == MsgType::Service {
            if let Some(body) = &msg.msg_body {
                mode_detail.push_str(&format!(" body={body}"));
            }
        }
        self.log(from, TraceKind::Tx, &msg.msg_id, mode_detail);

        let is_station_sender = self.stations.contains_key(from);
        let mut receivers: Vec<String> = Vec::new();
        if is_station_sender {
            let coverage = self.stations[from].station.coverage_radius;
            let station_pos = self.stations[from].station.position;
            for (vid, pose) in &poses {
                if station_pos.distance(&pose.position) <= coverage {
                    receivers.push(vid.clone());
                }
            }
        } else {
            for (vid, pose) in &poses {
                if vid == from {
                    continue;
                }
                if self.connected(from, vid)
                    && pose.position.distance(&from_pos) <= self.scenario.radio.nominal_range
                {
                    receivers.push(vid.clone());
                }
            }
            for (sid, s) in &self.stations {
                if s.station.in_coverage(&from_pos) {
                    receivers.push(sid.clone());
                }
            }
        }
        if let TxMode::Unicast(to) = &mode {
            receivers.retain(|r| r == to);
        }
        receivers.sort();

        for r in receivers {
            let draw: f64 = self.rng.gen();
            if draw < self.scenario.loss_probability {
                self.log(&r, TraceKind::Loss, &msg.msg_id, format!("from={from}"));
                continue;
            }
            self.push_at(
                t + self.scenario.tuning.processing_delay,
                EventKind::Rx {
                    to: r,
                    from: from.to_string(),
                    msg: msg.clone(),
                },
            );
        }
    }

    fn on_rx(&mut self, to: &str, from: &str, msg: Message) {
        self.metrics.message(&msg.msg_id).rx += 1;
        self.metrics.node(to).rx += 1;
        self.log(to, TraceKind::Rx, &msg.msg_id, format!("from={from}"));
        if self.stations.contains_key(to) {
            self.station_rx(to, from, msg);
        } else {
            self.vehicle_rx(to, from, msg);
        }
    }

    fn vehicle_rx(&mut self, to: &str, from: &str, msg: Message) {
        let t = self.now;
        let wall = self.wall(t);
        let poses = self.poses_at(t);
        let pose = match poses.get(to) {
            Some(p) => p.clone(),
            None => return, // left its active window between tx and rx
        };
        if mfs::is_expired(&msg, wall) {
            self.log(to, TraceKind::ExpireDrop, &msg.msg_id, String::new());
            self.metrics.message(&msg.msg_id).expire_drops += 1;
            return;
        }
        if msg.msg_count == Some(0) {
            // The receive budget was exhausted before this copy arrived.
            self.log(to, TraceKind::DropCount, &msg.msg_id, String::new());
            return;
        }
        let sender_position = self.position_of(from, &poses).unwrap_or(pose.position);
        let ctx = RxContext {
            sender_position,
            receiver_position: pose.position,
            receiver_heading: pose.heading,
            time: t,
        };
        // Each accepting vehicle spends one unit of the receive budget; the
        // decremented form is what gets stored and re-forwarded.
        let first = !self.vehicles[to].fwd.has_seen(&msg.msg_id);
        let effective = if first {
            mfs::decrement_count(&msg).message
        } else {
            msg.clone()
        };
        let outcome = {
            let v = self.vehicles.get_mut(to).unwrap();
            match v.fwd.on_receive(&effective, &ctx, &self.scenario.protocol) {
                Ok(o) => o,
                Err(_) => return, // zero heading cannot happen for poses on segments
            }
        };

        if !outcome.deliver {
            self.log(
                to,
                TraceKind::Duplicate,
                &msg.msg_id,
                format!("from={from}"),
            );
            self.metrics.message(&msg.msg_id).duplicates += 1;
            self.metrics.node(to).duplicates += 1;
            if outcome.action == RxAction::CancelRebroadcast {
                self.log(to, TraceKind::Suppress, &msg.msg_id, "implicit ack".into());
                self.metrics.message(&msg.msg_id).suppressions += 1;
            }
            return;
        }

        self.log(to, TraceKind::Deliver, &msg.msg_id, format!("from={from}"));
        {
            let m = self.metrics.message(&msg.msg_id);
            m.delivered += 1;
            m.first_delivery.get_or_insert(t);
        }
        self.metrics.node(to).delivered += 1;

        match effective.msg_type {
            MsgType::Alert => {
                if outcome.action == RxAction::ScheduleRebroadcast {
                    self.push_at(
                        t,
                        EventKind::Timer(TimerKind::Retry {
                            node: to.to_string(),
                            msg_id: effective.msg_id.clone(),
                        }),
                    );
                }
            }
            MsgType::Query => {
                let body = effective.msg_body.clone().unwrap_or_default();
                if ReplyBody::is_reply(&body) {
                    if let Some(reply) = ReplyBody::decode(&body) {
                        let mine = {
                            let v = self.vehicles.get_mut(to).unwrap();
                            v.outstanding.remove(reply.query_id())
                        };
                        if mine {
                            let v = self.vehicles.get_mut(to).unwrap();
                            v.replies.push((t, reply));
                            return;
                        }
                    }
                }
                // A question (or someone else's answer): carry it onward.
                self.attempt_forward(to, effective, Some(from.to_string()));
            }
            MsgType::Service => match effective.msg_body.as_deref().and_then(ServiceBody::decode) {
                Some(ServiceBody::IdentifyRequest) => {
                    let reply = {
                        let v = self.vehicles.get_mut(to).unwrap();
                        v.client
                            .identification_reply(&effective, pose.segment.clone(), wall)
                    };
                    if let Some(reply) = reply {
                        self.push_at(
                            t,
                            EventKind::TxComplete {
                                from: to.to_string(),
                                msg: reply,
                                mode: TxMode::Unicast(from.to_string()),
                            },
                        );
                    }
                }
                Some(ServiceBody::Offer { service_id }) => {
                    let v = self.vehicles.get_mut(to).unwrap();
                    v.offers.push((t, service_id));
                }
                _ => {}
            },
        }
    }

    fn station_rx(&mut self, to: &str, from: &str, msg: Message) {
        let t = self.now;
        let wall = self.wall(t);
        if mfs::is_expired(&msg, wall) {
            self.log(to, TraceKind::ExpireDrop, &msg.msg_id, String::new());
            self.metrics.message(&msg.msg_id).expire_drops += 1;
            return;
        }
        let first = {
            let s = self.stations.get_mut(to).unwrap();
            s.seen.insert(msg.msg_id.clone())
        };
        if !first {
            self.log(
                to,
                TraceKind::Duplicate,
                &msg.msg_id,
                format!("from={from}"),
            );
            self.metrics.message(&msg.msg_id).duplicates += 1;
            self.metrics.node(to).duplicates += 1;
            return;
        }
        self.log(to, TraceKind::Deliver, &msg.msg_id, format!("from={from}"));
        {
            let m = self.metrics.message(&msg.msg_id);
            m.delivered += 1;
            m.first_delivery.get_or_insert(t);
        }
        self.metrics.node(to).delivered += 1;

        match msg.msg_type {
            MsgType::Alert => {
                let ingest = {
                    let s = self.stations.get_mut(to).unwrap();
                    s.station.alert_ingest(&msg, t, wall)
                };
                match ingest {
                    AlertIngest::Accepted { stored } => {
                        let interval = self.stations[to].station.alert_rebroadcast_interval;
                        self.push_at(
                            t,
                            EventKind::TxComplete {
                                from: to.to_string(),
                                msg: msg.clone(),
                                mode: TxMode::Broadcast,
                            },
                        );
                        if stored {
                            self.push_at(
                                t + interval,
                                EventKind::Timer(TimerKind::AlertRebroadcast {
                                    station: to.to_string(),
                                    msg_id: msg.msg_id.clone(),
                                }),
                            );
                        }
                    }
                    AlertIngest::Expired => {
                        self.log(to, TraceKind::ExpireDrop, &msg.msg_id, String::new());
                        self.metrics.message(&msg.msg_id).expire_drops += 1;
                    }
                    AlertIngest::DuplicateId => {}
                }
            }
            MsgType::Query => {
                let body = msg.msg_body.clone().unwrap_or_default();
                if ReplyBody::is_reply(&body) {
                    // Answers pass through stations as a coverage broadcast.
                    self.push_at(
                        t,
                        EventKind::TxComplete {
                            from: to.to_string(),
                            msg,
                            mode: TxMode::Broadcast,
                        },
                    );
                    return;
                }
                let resolved = {
                    let s = self.stations.get_mut(to).unwrap();
                    s.station.resolve_query(
                        &msg,
                        &self.scenario.network,
                        t,
                        wall,
                        &self.scenario.query,
                        self.scenario.tuning.reply_expire,
                    )
                };
                match resolved {
                    Ok(Some(reply)) => {
                        self.metrics.message(&reply.msg_id).created_at = Some(t);
                        self.push_at(
                            t,
                            EventKind::TxComplete {
                                from: to.to_string(),
                                msg: reply,
                                mode: TxMode::Broadcast,
                            },
                        );
                    }
                    Ok(None) => {
                        // Not our area: relay once toward whoever is around.
                        self.push_at(
                            t,
                            EventKind::TxComplete {
                                from: to.to_string(),
                                msg,
                                mode: TxMode::Broadcast,
                            },
                        );
                    }
                    Err(e) => {
                        self.log(to, TraceKind::ExpireDrop, &msg.msg_id, format!("{e}"));
                    }
                }
            }
            MsgType::Service => {
                if let Some(ServiceBody::Identification { username, code }) =
                    msg.msg_body.as_deref().and_then(ServiceBody::decode)
                {
                    let opened = {
                        let s = self.stations.get_mut(to).unwrap();
                        s.station.handle_identification(from, &username, &code)
                    };
                    let detail = if opened {
                        format!("user={username} vehicle={from} open")
                    } else {
                        format!("user={username} vehicle={from} rejected")
                    };
                    self.log(to, TraceKind::Session, &msg.msg_id, detail);
                }
            }
        }
    }

    fn on_timer(&mut self, timer: TimerKind) {
        let t = self.now;
        let wall = self.wall(t);
        match timer {
            TimerKind::Retry { node, msg_id } => {
                let due = {
                    let v = match self.vehicles.get_mut(&node) {
                        Some(v) => v,
                        None => return,
                    };
                    v.fwd
                        .rebroadcast_due(&msg_id, t, wall, &self.scenario.protocol)
                };
                if let Some((msg, again)) = due {
                    self.push_at(
                        t,
                        EventKind::TxComplete {
                            from: node.clone(),
                            msg,
                            mode: TxMode::Broadcast,
                        },
                    );
                    if let Some(at) = again {
                        self.push_at(at, EventKind::Timer(TimerKind::Retry { node, msg_id }));
                    }
                }
            }
            TimerKind::AlertRebroadcast { station, msg_id } => {
                let due = {
                    let s = match self.stations.get_mut(&station) {
                        Some(s) => s,
                        None => return,
                    };
                    s.station.alert_due(&msg_id, wall)
                };
                match due {
                    Some(msg) => {
                        let interval = self.stations[&station].station.alert_rebroadcast_interval;
                        self.push_at(
                            t,
                            EventKind::TxComplete {
                                from: station.clone(),
                                msg,
                                mode: TxMode::Broadcast,
                            },
                        );
                        self.push_at(
                            t + interval,
                            EventKind::Timer(TimerKind::AlertRebroadcast { station, msg_id }),
                        );
                    }
                    None => {
                        self.log(
                            &station,
                            TraceKind::ExpireDrop,
                            &msg_id,
                            "temporal alert aged out".into(),
                        );
                    }
                }
            }
            TimerKind::Hold { node, msg_id } => {
                let held = self
                    .vehicles
                    .get(&node)
                    .and_then(|v| v.held.get(&msg_id).cloned());
                if let Some(h) = held {
                    self.attempt_forward(&node, h.msg, h.last_sender);
                }
            }
        }
    }
}

/// Runs a scenario once with the given seed.
pub fn run_scenario(scenario: &Scenario, seed: u64) -> Result<SimOutput, NodesError> {
    Ok(Simulation::new(scenario, seed)?.run())
}
