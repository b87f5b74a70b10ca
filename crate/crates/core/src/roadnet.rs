//! The digitized road network and segment-level geographic addressing.
//!
//! Every message and node position is addressed by a [`SegmentLocator`]:
//! the `[road_id, road_name, segment_id]` tuple whose text form is
//! `<road_id>-<road_name>-<segment_id>`, e.g. `5-william-2`. Opposite
//! travel directions on the same road are distinct segments.

use std::collections::BTreeMap;
use std::fmt;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::geometry::{Point, Polyline};

/// Endpoints closer than this are treated as the same junction.
/// Synthetic networks are authored exactly; the threshold absorbs rounding.
pub const ADJACENCY_TOLERANCE_M: f64 = 0.5;

/// True for the token charset used by road names: lowercase slug with no
/// `-`, `/`, or whitespace, so both the `-`-delimited locator and the
/// `/`-delimited message wire form stay unambiguous.
pub fn is_road_name_token(s: &str) -> bool {
    !s.is_empty()
        && s.bytes().next().is_some_and(|b| b.is_ascii_lowercase())
        && s.bytes()
            .all(|b| b.is_ascii_lowercase() || b.is_ascii_digit() || b == b'_')
}

/// The `[road_id, road_name, segment_id]` addressing tuple.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub struct SegmentLocator {
    pub road_id: u32,
    pub road_name: String,
    pub segment_id: u32,
}

impl SegmentLocator {
    pub fn new(road_id: u32, road_name: impl Into<String>, segment_id: u32) -> Self {
        SegmentLocator {
            road_id,
            road_name: road_name.into(),
            segment_id,
        }
    }

    /// Parses `<road_id>-<road_name>-<segment_id>`. Numeric components
    /// canonicalize (leading zeros dropped); a zero road id parses here and
    /// is rejected at network resolution.
    pub fn parse(text: &str) -> Result<Self, LocatorParseError> {
        if text.is_empty() {
            return Err(LocatorParseError::Empty);
        }
        let parts: Vec<&str> = text.split('-').collect();
        if parts.len() != 3 {
            return Err(LocatorParseError::WrongDelimiterCount {
                text: text.to_string(),
                found: parts.len().saturating_sub(1),
            });
        }
        let road_id = parts[0]
            .parse::<u32>()
            .map_err(|_| LocatorParseError::BadComponent {
                component: "road_id",
                value: parts[0].to_string(),
            })?;
        if !is_road_name_token(parts[1]) {
            return Err(LocatorParseError::BadComponent {
                component: "road_name",
                value: parts[1].to_string(),
            });
        }
        let segment_id = parts[2]
            .parse::<u32>()
            .map_err(|_| LocatorParseError::BadComponent {
                component: "segment_id",
                value: parts[2].to_string(),
            })?;
        Ok(SegmentLocator::new(road_id, parts[1], segment_id))
    }
}

impl fmt::Display for SegmentLocator {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}-{}-{}", self.road_id, self.road_name, self.segment_id)
    }
}

impl TryFrom<String> for SegmentLocator {
    type Error = LocatorParseError;
    fn try_from(s: String) -> Result<Self, Self::Error> {
        SegmentLocator::parse(&s)
    }
}

impl From<SegmentLocator> for String {
    fn from(l: SegmentLocator) -> String {
        l.to_string()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum LocatorParseError {
    #[error("locator is empty")]
    Empty,
    #[error("locator {text:?} needs exactly 2 '-' delimiters, found {found}")]
    WrongDelimiterCount { text: String, found: usize },
    #[error("locator component {component} is malformed: {value:?}")]
    BadComponent {
        component: &'static str,
        value: String,
    },
}

/// One directed segment of a road. Travel direction follows polyline order.
#[derive(Debug, Clone)]
pub struct Segment {
    pub segment_id: u32,
    pub polyline: Polyline,
    length: f64,
}

impl Segment {
    pub fn new(segment_id: u32, polyline: Polyline) -> Result<Self, NetworkError> {
        if segment_id == 0 {
            return Err(NetworkError::NonPositiveSegmentId);
        }
        let length = polyline.length();
        Ok(Segment {
            segment_id,
            polyline,
            length,
        })
    }

    pub fn length(&self) -> f64 {
        self.length
    }

    pub fn start(&self) -> Point {
        self.polyline.start()
    }

    pub fn end(&self) -> Point {
        self.polyline.end()
    }

    /// Point at half the segment length, the target of geographic forwarding.
    pub fn centroid(&self) -> Point {
        self.polyline.point_at(self.length / 2.0)
    }
}

#[derive(Debug, Clone)]
pub struct Road {
    pub road_id: u32,
    pub road_name: String,
    pub segments: Vec<Segment>,
}

/// The immutable network: built once, then read-only for every simulation.
#[derive(Debug, Default)]
pub struct RoadNetwork {
    roads: BTreeMap<u32, Road>,
}

impl RoadNetwork {
    pub fn new() -> Self {
        RoadNetwork::default()
    }

    pub fn add_road(&mut self, road: Road) -> Result<(), NetworkError> {
        if road.road_id == 0 {
            return Err(NetworkError::NonPositiveRoadId);
        }
        if !is_road_name_token(&road.road_name) {
            return Err(NetworkError::BadRoadName(road.road_name.clone()));
        }
        if self.roads.contains_key(&road.road_id) {
            return Err(NetworkError::DuplicateRoadId(road.road_id));
        }
        let mut seen = std::collections::BTreeSet::new();
        for seg in &road.segments {
            if !seen.insert(seg.segment_id) {
                return Err(NetworkError::DuplicateSegmentId {
                    road_id: road.road_id,
                    segment_id: seg.segment_id,
                });
            }
        }
        self.roads.insert(road.road_id, road);
        Ok(())
    }

    pub fn roads(&self) -> impl Iterator<Item = &Road> {
        self.roads.values()
    }

    /// All segments with their locators, in (road_id, segment_id) order.
    pub fn segments(&self) -> impl Iterator<Item = (SegmentLocator, &Segment)> {
        self.roads.values().flat_map(|r| {
            r.segments.iter().map(move |s| {
                (
                    SegmentLocator::new(r.road_id, r.road_name.clone(), s.segment_id),
                    s,
                )
            })
        })
    }

    /// Resolves a locator to its segment. The road name is a checked
    /// redundancy: a name that mismatches the registered road is an error.
    pub fn resolve(&self, locator: &SegmentLocator) -> Result<&Segment, NetworkError> {
        if locator.road_id == 0 {
            return Err(NetworkError::NonPositiveRoadId);
        }
        let road = self
            .roads
            .get(&locator.road_id)
            .ok_or(NetworkError::UnknownRoad(locator.road_id))?;
        if road.road_name != locator.road_name {
            return Err(NetworkError::RoadNameMismatch {
                road_id: locator.road_id,
                registered: road.road_name.clone(),
                given: locator.road_name.clone(),
            });
        }
        road.segments
            .iter()
            .find(|s| s.segment_id == locator.segment_id)
            .ok_or(NetworkError::UnknownSegment {
                road_id: locator.road_id,
                segment_id: locator.segment_id,
            })
    }

    /// Locator of the segment nearest `point`, if within `tolerance` meters.
    /// Exact ties break toward the lower (road_id, segment_id).
    pub fn locate_point(
        &self,
        point: &Point,
        tolerance: f64,
    ) -> Result<SegmentLocator, NetworkError> {
        if tolerance <= 0.0 {
            return Err(NetworkError::NonPositiveTolerance(tolerance));
        }
        let mut best: Option<(f64, SegmentLocator)> = None;
        for (locator, seg) in self.segments() {
            let d = seg.polyline.distance_to(point);
            match &best {
                Some((bd, _)) if d >= *bd => {}
                _ => best = Some((d, locator)),
            }
        }
        match best {
            Some((d, locator)) if d <= tolerance => Ok(locator),
            _ => Err(NetworkError::OffNetwork {
                x: point.x,
                y: point.y,
                tolerance,
            }),
        }
    }

    fn locator_of(&self, road: &Road, seg: &Segment) -> SegmentLocator {
        SegmentLocator::new(road.road_id, road.road_name.clone(), seg.segment_id)
    }

    /// Directed successors of a segment: segments whose start point lies
    /// within [`ADJACENCY_TOLERANCE_M`] of its end point.
    pub fn successors(
        &self,
        locator: &SegmentLocator,
    ) -> Result<Vec<SegmentLocator>, NetworkError> {
        let seg = self.resolve(locator)?;
        let end = seg.end();
        let mut out = Vec::new();
        for road in self.roads.values() {
            for cand in &road.segments {
                let cl = self.locator_of(road, cand);
                if cl == *locator {
                    continue;
                }
                if end.distance(&cand.start()) <= ADJACENCY_TOLERANCE_M {
                    out.push(cl);
                }
            }
        }
        Ok(out)
    }

    /// Up to `k` loop-free segment paths from `from` to `to`, ordered by
    /// total path length ascending (ties by locator sequence). Unreachable
    /// pairs give an empty list.
    pub fn routes_between(
        &self,
        from: &SegmentLocator,
        to: &SegmentLocator,
        k: usize,
    ) -> Result<Vec<Vec<SegmentLocator>>, NetworkError> {
        self.resolve(from)?;
        self.resolve(to)?;
        if k == 0 {
            return Ok(Vec::new());
        }
        if from == to {
            return Ok(vec![vec![from.clone()]]);
        }

        // Yen-style enumeration: shortest path, then repeated shortest-path
        // searches with one edge of a previous path excluded.
        let mut accepted: Vec<Vec<SegmentLocator>> = Vec::new();
        let mut candidates: Vec<Vec<SegmentLocator>> = Vec::new();
        match self.shortest_path(from, to, &[], &[])? {
            Some(p) => accepted.push(p),
            None => return Ok(Vec::new()),
        }

        while accepted.len() < k {
            let prev = accepted.last().unwrap().clone();
            for spur_idx in 0..prev.len() - 1 {
                let root = &prev[..=spur_idx];
                // Edges leaving the spur node on any accepted path sharing this root.
                let mut banned_edges: Vec<(SegmentLocator, SegmentLocator)> = Vec::new();
                for p in &accepted {
                    if p.len() > spur_idx + 1 && p[..=spur_idx] == *root {
                        banned_edges.push((p[spur_idx].clone(), p[spur_idx + 1].clone()));
                    }
                }
                let banned_nodes: Vec<SegmentLocator> = root[..spur_idx].to_vec();
                if let Some(tail) =
                    self.shortest_path(&prev[spur_idx], to, &banned_edges, &banned_nodes)?
                {
                    let mut path = root[..spur_idx].to_vec();
                    path.extend(tail);
                    if !accepted.contains(&path) && !candidates.contains(&path) {
                        candidates.push(path);
                    }
                }
            }
            if candidates.is_empty() {
                break;
            }
            candidates.sort_by(|a, b| {
                self.path_length(a)
                    .partial_cmp(&self.path_length(b))
                    .unwrap()
                    .then_with(|| a.cmp(b))
            });
            accepted.push(candidates.remove(0));
        }

        accepted.sort_by(|a, b| {
            self.path_length(a)
                .partial_cmp(&self.path_length(b))
                .unwrap()
                .then_with(|| a.cmp(b))
        });
        Ok(accepted)
    }

    /// Sum of segment lengths along a path.
    pub fn path_length(&self, path: &[SegmentLocator]) -> f64 {
        path.iter()
            .map(|l| self.resolve(l).map(|s| s.length()).unwrap_or(f64::INFINITY))
            .sum()
    }

    fn shortest_path(
        &self,
        from: &SegmentLocator,
        to: &SegmentLocator,
        banned_edges: &[(SegmentLocator, SegmentLocator)],
        banned_nodes: &[SegmentLocator],
    ) -> Result<Option<Vec<SegmentLocator>>, NetworkError> {
        use std::cmp::Ordering;
        use std::collections::BinaryHeap;

        #[derive(PartialEq)]
        struct Entry(f64, Vec<SegmentLocator>);
        impl Eq for Entry {}
        impl Ord for Entry {
            fn cmp(&self, other: &Self) -> Ordering {
                // Min-heap on (length, path), so equal-length ties are stable.
                other
                    .0
                    .partial_cmp(&self.0)
                    .unwrap()
                    .then_with(|| other.1.cmp(&self.1))
            }
        }
        impl PartialOrd for Entry {
            fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
                Some(self.cmp(other))
            }
        }

        if banned_nodes.contains(from) {
            return Ok(None);
        }
        let mut heap = BinaryHeap::new();
        let mut settled: std::collections::BTreeSet<SegmentLocator> = Default::default();
        heap.push(Entry(self.resolve(from)?.length(), vec![from.clone()]));
        while let Some(Entry(len, path)) = heap.pop() {
            let last = path.last().unwrap().clone();
            if last == *to {
                return Ok(Some(path));
            }
            if !settled.insert(last.clone()) {
                continue;
            }
            for next in self.successors(&last)? {
                if banned_nodes.contains(&next)
                    || path.contains(&next)
                    || banned_edges.iter().any(|(a, b)| *a == last && *b == next)
                {
                    continue;
                }
                let mut np = path.clone();
                let nlen = len + self.resolve(&next)?.length();
                np.push(next);
                heap.push(Entry(nlen, np));
            }
        }
        Ok(None)
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum NetworkError {
    #[error("road_id must be positive")]
    NonPositiveRoadId,
    #[error("segment_id must be positive")]
    NonPositiveSegmentId,
    #[error("road name {0:?} is not a lowercase token (no '-', '/', whitespace)")]
    BadRoadName(String),
    #[error("duplicate road_id {0}")]
    DuplicateRoadId(u32),
    #[error("duplicate segment_id {segment_id} within road {road_id}")]
    DuplicateSegmentId { road_id: u32, segment_id: u32 },
    #[error("unknown road_id {0}")]
    UnknownRoad(u32),
    #[error("road {road_id} is registered as {registered:?}, locator says {given:?}")]
    RoadNameMismatch {
        road_id: u32,
        registered: String,
        given: String,
    },
    #[error("road {road_id} has no segment {segment_id}")]
    UnknownSegment { road_id: u32, segment_id: u32 },
    #[error("point ({x}, {y}) is more than {tolerance} m from every segment")]
    OffNetwork { x: f64, y: f64, tolerance: f64 },
    #[error("tolerance must be positive, got {0}")]
    NonPositiveTolerance(f64),
    #[error("invalid polyline: {0}")]
    Polyline(#[from] crate::geometry::PolylineError),
    #[error("cannot read network file: {0}")]
    Io(String),
    #[error("network file does not parse: {0}")]
    Format(String),
}

// ---------------------------------------------------------------------------
// Network file format
// ---------------------------------------------------------------------------

/// On-disk network schema (TOML).
///
/// ```toml
/// [[road]]
/// id = 5
/// name = "william"
///
/// [[road.segment]]
/// id = 2
/// polyline = [[0.0, 0.0], [1000.0, 0.0]]
/// ```
#[derive(Debug, Deserialize)]
struct NetworkFile {
    #[serde(default)]
    road: Vec<RoadEntry>,
}

#[derive(Debug, Deserialize)]
struct RoadEntry {
    id: u32,
    name: String,
    #[serde(default)]
    segment: Vec<SegmentEntry>,
}

#[derive(Debug, Deserialize)]
struct SegmentEntry {
    id: u32,
    polyline: Vec<[f64; 2]>,
}

impl RoadNetwork {
    pub fn from_toml_str(text: &str) -> Result<Self, NetworkError> {
        let file: NetworkFile =
            toml::from_str(text).map_err(|e| NetworkError::Format(e.to_string()))?;
        let mut net = RoadNetwork::new();
        for road in file.road {
            let mut segments = Vec::new();
            for seg in road.segment {
                let points = seg
                    .polyline
                    .iter()
                    .map(|p| Point::new(p[0], p[1]))
                    .collect();
                segments.push(Segment::new(seg.id, Polyline::new(points)?)?);
            }
            net.add_road(Road {
                road_id: road.id,
                road_name: road.name,
                segments,
            })?;
        }
        Ok(net)
    }

    pub fn load(path: &Path) -> Result<Self, NetworkError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| NetworkError::Io(format!("{}: {e}", path.display())))?;
        RoadNetwork::from_toml_str(&text)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn straight(points: &[(f64, f64)]) -> Polyline {
        Polyline::new(points.iter().map(|&(x, y)| Point::new(x, y)).collect()).unwrap()
    }

    fn toy_network() -> RoadNetwork {
        let mut net = RoadNetwork::new();
        net.add_road(Road {
            road_id: 5,
            road_name: "william".into(),
            segments: vec![
                Segment::new(1, straight(&[(100.0, 0.0), (100.0, 300.0)])).unwrap(),
                Segment::new(2, straight(&[(100.0, 300.0), (100.0, 600.0)])).unwrap(),
            ],
        })
        .unwrap();
        net.add_road(Road {
            road_id: 2,
            road_name: "hilton".into(),
            segments: vec![Segment::new(9, straight(&[(0.0, 0.0), (100.0, 0.0)])).unwrap()],
        })
        .unwrap();
        net
    }

    #[test]
    fn parse_locator_examples() {
        assert_eq!(
            SegmentLocator::parse("5-william-2").unwrap(),
            SegmentLocator::new(5, "william", 2)
        );
        assert_eq!(
            SegmentLocator::parse("11-newton-7").unwrap(),
            SegmentLocator::new(11, "newton", 7)
        );
        // Parses fine; rejected later at network resolution.
        assert_eq!(
            SegmentLocator::parse("0-a-0").unwrap(),
            SegmentLocator::new(0, "a", 0)
        );
    }

    #[test]
    fn parse_locator_names_offending_component() {
        match SegmentLocator::parse("x-william-2").unwrap_err() {
            LocatorParseError::BadComponent { component, .. } => assert_eq!(component, "road_id"),
            other => panic!("unexpected: {other:?}"),
        }
        match SegmentLocator::parse("5-William-2").unwrap_err() {
            LocatorParseError::BadComponent { component, .. } => assert_eq!(component, "road_name"),
            other => panic!("unexpected: {other:?}"),
        }
        match SegmentLocator::parse("5-william-two").unwrap_err() {
            LocatorParseError::BadComponent { component, .. } => {
                assert_eq!(component, "segment_id")
            }
            other => panic!("unexpected: {other:?}"),
        }
        assert!(matches!(
            SegmentLocator::parse("5-william").unwrap_err(),
            LocatorParseError::WrongDelimiterCount { found: 1, .. }
        ));
        assert_eq!(
            SegmentLocator::parse("").unwrap_err(),
            LocatorParseError::Empty
        );
    }

    #[test]
    fn locator_round_trips_canonically() {
        for s in ["5-william-2", "11-newton-7", "1-a_1-1"] {
            assert_eq!(SegmentLocator::parse(s).unwrap().to_string(), s);
        }
        // Leading zeros canonicalize.
        assert_eq!(
            SegmentLocator::parse("05-william-002").unwrap().to_string(),
            "5-william-2"
        );
    }

    #[test]
    fn resolve_checks_name_and_existence() {
        let net = toy_network();
        let seg = net.resolve(&SegmentLocator::new(5, "william", 2)).unwrap();
        assert_eq!(seg.length(), 300.0);

        assert_eq!(
            net.resolve(&SegmentLocator::new(5, "hilton", 2))
                .unwrap_err(),
            NetworkError::RoadNameMismatch {
                road_id: 5,
                registered: "william".into(),
                given: "hilton".into()
            }
        );
        assert_eq!(
            net.resolve(&SegmentLocator::new(7, "king", 1)).unwrap_err(),
            NetworkError::UnknownRoad(7)
        );
        assert_eq!(
            net.resolve(&SegmentLocator::new(5, "william", 9))
                .unwrap_err(),
            NetworkError::UnknownSegment {
                road_id: 5,
                segment_id: 9
            }
        );
        assert_eq!(
            net.resolve(&SegmentLocator::new(0, "a", 0)).unwrap_err(),
            NetworkError::NonPositiveRoadId
        );
    }

    #[test]
    fn locate_point_prefers_nearest_and_breaks_ties_low() {
        let net = toy_network();
        // On hilton's polyline.
        assert_eq!(
            net.locate_point(&Point::new(50.0, 0.0), 1.0).unwrap(),
            SegmentLocator::new(2, "hilton", 9)
        );
        // Exactly equidistant from william-1 start and hilton end region:
        // point (100, 0) lies on both hilton (end) and william-1 (start).
        assert_eq!(
            net.locate_point(&Point::new(100.0, 0.0), 1.0).unwrap(),
            SegmentLocator::new(2, "hilton", 9)
        );
        // Hand-computed: 10 m off a straight segment, tolerance 5 m.
        assert_eq!(
            net.locate_point(&Point::new(50.0, 10.0), 5.0).unwrap_err(),
            NetworkError::OffNetwork {
                x: 50.0,
                y: 10.0,
                tolerance: 5.0
            }
        );
    }

    #[test]
    fn locate_point_invariant_to_geometry_preserving_subdivision() {
        let mut net = RoadNetwork::new();
        net.add_road(Road {
            road_id: 1,
            road_name: "a".into(),
            segments: vec![Segment::new(1, straight(&[(0.0, 0.0), (100.0, 0.0)])).unwrap()],
        })
        .unwrap();
        let mut subdivided = RoadNetwork::new();
        subdivided
            .add_road(Road {
                road_id: 1,
                road_name: "a".into(),
                segments: vec![Segment::new(
                    1,
                    straight(&[(0.0, 0.0), (25.0, 0.0), (50.0, 0.0), (100.0, 0.0)]),
                )
                .unwrap()],
            })
            .unwrap();
        let p = Point::new(37.0, 2.0);
        assert_eq!(
            net.locate_point(&p, 5.0).unwrap(),
            subdivided.locate_point(&p, 5.0).unwrap()
        );
    }

    /// Four-road grid with a short direct route and a long detour to the
    /// same target segment.
    fn grid_network() -> (RoadNetwork, SegmentLocator, SegmentLocator) {
        let mut net = RoadNetwork::new();
        net.add_road(Road {
            road_id: 2,
            road_name: "hilton".into(),
            segments: vec![Segment::new(9, straight(&[(0.0, 0.0), (100.0, 0.0)])).unwrap()],
        })
        .unwrap();
        net.add_road(Road {
            road_id: 5,
            road_name: "william".into(),
            segments: vec![
                Segment::new(1, straight(&[(100.0, 0.0), (100.0, 300.0)])).unwrap(),
                Segment::new(2, straight(&[(100.0, 300.0), (100.0, 600.0)])).unwrap(),
            ],
        })
        .unwrap();
        net.add_road(Road {
            road_id: 11,
            road_name: "newton".into(),
            segments: vec![Segment::new(7, straight(&[(100.0, 0.0), (400.0, 0.0)])).unwrap()],
        })
        .unwrap();
        net.add_road(Road {
            road_id: 6,
            road_name: "king".into(),
            segments: vec![
                Segment::new(1, straight(&[(400.0, 0.0), (400.0, 300.0)])).unwrap(),
                Segment::new(2, straight(&[(400.0, 300.0), (100.0, 300.0)])).unwrap(),
            ],
        })
        .unwrap();
        (
            net,
            SegmentLocator::new(2, "hilton", 9),
            SegmentLocator::new(5, "william", 2),
        )
    }

    /// Independent oracle: exhaustive DFS enumeration of all simple paths.
    fn enumerate_all_paths(
        net: &RoadNetwork,
        from: &SegmentLocator,
        to: &SegmentLocator,
    ) -> Vec<Vec<SegmentLocator>> {
        fn dfs(
            net: &RoadNetwork,
            path: &mut Vec<SegmentLocator>,
            to: &SegmentLocator,
            out: &mut Vec<Vec<SegmentLocator>>,
        ) {
            let last = path.last().unwrap().clone();
            if last == *to {
                out.push(path.clone());
                return;
            }
            for next in net.successors(&last).unwrap() {
                if !path.contains(&next) {
                    path.push(next);
                    dfs(net, path, to, out);
                    path.pop();
                }
            }
        }
        let mut out = Vec::new();
        dfs(net, &mut vec![from.clone()], to, &mut out);
        out.sort_by(|a, b| {
            net.path_length(a)
                .partial_cmp(&net.path_length(b))
                .unwrap()
                .then_with(|| a.cmp(b))
        });
        out
    }

    #[test]
    fn routes_between_matches_exhaustive_enumeration() {
        let (net, from, to) = grid_network();
        let oracle = enumerate_all_paths(&net, &from, &to);
        assert_eq!(oracle.len(), 2, "grid has exactly two routes");
        let got = net.routes_between(&from, &to, 5).unwrap();
        assert_eq!(got, oracle);
        // Direct route (hilton -> william-1 -> william-2) is shorter.
        assert_eq!(got[0].len(), 3);
        assert_eq!(got[1].len(), 5);
        assert!(net.path_length(&got[0]) < net.path_length(&got[1]));
        // Consecutive segments adjacent; lengths non-decreasing.
        for path in &got {
            for w in path.windows(2) {
                assert!(net.successors(&w[0]).unwrap().contains(&w[1]));
            }
        }
    }

    #[test]
    fn routes_between_degenerate_and_disconnected() {
        let (net, from, to) = grid_network();
        assert_eq!(
            net.routes_between(&from, &from, 3).unwrap(),
            vec![vec![from.clone()]]
        );
        // to -> from is unreachable (all segments are one-way).
        assert_eq!(
            net.routes_between(&to, &from, 3).unwrap(),
            Vec::<Vec<_>>::new()
        );
    }

    #[test]
    fn network_file_round_trip() {
        let text = r#"
            [[road]]
            id = 5
            name = "william"

            [[road.segment]]
            id = 2
            polyline = [[0.0, 0.0], [1000.0, 0.0]]
        "#;
        let net = RoadNetwork::from_toml_str(text).unwrap();
        assert_eq!(
            net.resolve(&SegmentLocator::parse("5-william-2").unwrap())
                .unwrap()
                .length(),
            1000.0
        );
        assert!(RoadNetwork::from_toml_str("[[road]]\nid = 0\nname = \"a\"").is_err());
    }
}
