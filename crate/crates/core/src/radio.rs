//! Bluetooth-like link model: range classes, discovery and setup latency,
//! effective exchange windows, and piconet clustering with bridge nodes.

use std::collections::BTreeSet;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::geometry::Point;
use crate::mobility::{ContactDuration, Pose};

/// Link-budget and cluster parameters of the on-board radio.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RadioProfile {
    /// Specification range of a Class 1 device.
    pub nominal_range: f64,
    /// Best range observed outdoors; selectable with [`RangeMode::Measured`].
    pub measured_max_range: f64,
    /// Mean inquiry time before two devices see each other.
    pub discovery_mean: f64,
    /// Half-width of the uniform jitter around `discovery_mean`.
    pub discovery_jitter: f64,
    /// Connection establishment cost after discovery.
    pub setup_time: f64,
    /// Active slave limit per piconet.
    pub max_active_slaves: usize,
}

impl Default for RadioProfile {
    fn default() -> Self {
        RadioProfile {
            nominal_range: 100.0,
            measured_max_range: 225.0,
            discovery_mean: 2.25,
            discovery_jitter: 0.0,
            setup_time: 0.75,
            max_active_slaves: 7,
        }
    }
}

impl RadioProfile {
    pub fn validate(&self) -> Result<(), RadioError> {
        if self.nominal_range <= 0.0 || self.nominal_range > self.measured_max_range {
            return Err(RadioError::BadRange {
                nominal: self.nominal_range,
                measured: self.measured_max_range,
            });
        }
        if self.discovery_mean < 0.0 || self.discovery_jitter > self.discovery_mean {
            return Err(RadioError::BadDiscovery {
                mean: self.discovery_mean,
                jitter: self.discovery_jitter,
            });
        }
        if self.setup_time < 0.0 {
            return Err(RadioError::NegativeSetup(self.setup_time));
        }
        Ok(())
    }

    pub fn range(&self, mode: RangeMode) -> f64 {
        match mode {
            RangeMode::Nominal => self.nominal_range,
            RangeMode::Measured => self.measured_max_range,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RangeMode {
    Nominal,
    Measured,
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum RadioError {
    #[error("nominal range {nominal} must be in (0, measured_max_range {measured}]")]
    BadRange { nominal: f64, measured: f64 },
    #[error("discovery mean {mean} and jitter {jitter} must satisfy 0 <= jitter <= mean")]
    BadDiscovery { mean: f64, jitter: f64 },
    #[error("setup time must be non-negative, got {0}")]
    NegativeSetup(f64),
    #[error("poses are from different instants: {a} vs {b}")]
    TimestampMismatch { a: f64, b: f64 },
}

/// Whether two poses taken at the same instant are within radio range.
/// The boundary counts as in range (closed disc).
pub fn in_range(
    a: &Pose,
    b: &Pose,
    profile: &RadioProfile,
    mode: RangeMode,
) -> Result<bool, RadioError> {
    if a.time != b.time {
        return Err(RadioError::TimestampMismatch {
            a: a.time,
            b: b.time,
        });
    }
    Ok(a.position.distance(&b.position) <= profile.range(mode))
}

/// One discovery-time draw: uniform on `[mean - jitter, mean + jitter]`,
/// clamped at zero.
pub fn sample_discovery<R: Rng + ?Sized>(profile: &RadioProfile, rng: &mut R) -> f64 {
    let lo = profile.discovery_mean - profile.discovery_jitter;
    let hi = profile.discovery_mean + profile.discovery_jitter;
    let draw = if hi > lo { rng.gen_range(lo..=hi) } else { lo };
    draw.max(0.0)
}

/// Usable data-exchange window once discovery and connection setup are paid.
pub fn effective_window<R: Rng + ?Sized>(
    contact: ContactDuration,
    profile: &RadioProfile,
    rng: &mut R,
) -> ContactDuration {
    match contact {
        ContactDuration::Unbounded => ContactDuration::Unbounded,
        ContactDuration::Seconds(s) => {
            let overhead = sample_discovery(profile, rng) + profile.setup_time;
            ContactDuration::Seconds((s - overhead).max(0.0))
        }
    }
}

/// A cluster of one master and its active slaves; the cluster id is the
/// master's node id.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Piconet {
    pub master: String,
    pub slaves: BTreeSet<String>,
}

impl Piconet {
    pub fn cluster_id(&self) -> &str {
        &self.master
    }

    pub fn contains(&self, node: &str) -> bool {
        self.master == node || self.slaves.contains(node)
    }
}

/// Snapshot of one node for clustering: id plus position at a common instant.
#[derive(Debug, Clone, PartialEq)]
pub struct NodePoint {
    pub id: String,
    pub position: Point,
}

/// Greedy deterministic clustering. The unassigned node with the lowest id
/// becomes a master and captures up to `max_active_slaves` nearest in-range
/// unassigned nodes (ties by id); repeat until everyone is assigned. An
/// isolated node is a master with no slaves. Bridges are slaves in range of
/// any member of a different piconet.
pub fn form_piconets(
    nodes: &[NodePoint],
    profile: &RadioProfile,
) -> (Vec<Piconet>, BTreeSet<String>) {
    let range = profile.nominal_range;
    let mut order: Vec<&NodePoint> = nodes.iter().collect();
    order.sort_by(|a, b| a.id.cmp(&b.id));

    let mut unassigned: BTreeSet<&str> = order.iter().map(|n| n.id.as_str()).collect();
    let position = |id: &str| order.iter().find(|n| n.id == id).unwrap().position;

    let mut piconets = Vec::new();
    while let Some(master) = unassigned.iter().next().copied() {
        unassigned.remove(master);
        let mp = position(master);
        let mut candidates: Vec<&str> = unassigned
            .iter()
            .copied()
            .filter(|id| position(id).distance(&mp) <= range)
            .collect();
        candidates.sort_by(|a, b| {
            let da = position(a).distance(&mp);
            let db = position(b).distance(&mp);
            da.partial_cmp(&db).unwrap().then_with(|| a.cmp(b))
        });
        let slaves: BTreeSet<String> = candidates
            .into_iter()
            .take(profile.max_active_slaves)
            .map(|id| id.to_string())
            .collect();
        for s in &slaves {
            unassigned.remove(s.as_str());
        }
        piconets.push(Piconet {
            master: master.to_string(),
            slaves,
        });
    }

    // Bridges: slaves within range of any member of a different piconet.
    let mut bridges = BTreeSet::new();
    for (i, pn) in piconets.iter().enumerate() {
        for slave in &pn.slaves {
            let sp = position(slave);
            let near_other = piconets.iter().enumerate().any(|(j, other)| {
                j != i
                    && std::iter::once(&other.master)
                        .chain(other.slaves.iter())
                        .any(|m| position(m).distance(&sp) <= range)
            });
            if near_other {
                bridges.insert(slave.clone());
            }
        }
    }
    (piconets, bridges)
}
