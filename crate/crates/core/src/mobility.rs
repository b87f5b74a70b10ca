//! Vehicle kinematics over the road network and contact-window analytics.

use serde::{Deserialize, Serialize};

use crate::geometry::Point;
use crate::roadnet::{RoadNetwork, SegmentLocator};

/// Sampling step for contact detection, refined by bisection afterwards.
/// Vehicles below 60 m/s cannot cross a 100 m range disc undetected at this step.
pub const CONTACT_SCAN_DT: f64 = 0.1;
/// Bisection stops once the bracket is narrower than this.
pub const CONTACT_REFINE_TOL: f64 = 1e-3;

pub const KMH_PER_MS: f64 = 3.6;

/// One leg of a trajectory plan: enter `segment` at `entry_time`, then move
/// at constant `speed` along it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlanLeg {
    pub segment: SegmentLocator,
    pub entry_time: f64,
    pub speed: f64,
}

/// A scripted vehicle path: ordered legs with strictly increasing entry
/// times over segments that are adjacent in the network.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VehicleTrajectory {
    pub vehicle_id: String,
    pub plan: Vec<PlanLeg>,
}

/// Kinematic state of a vehicle at an instant.
#[derive(Debug, Clone, PartialEq)]
pub struct Pose {
    pub position: Point,
    pub speed: f64,
    pub heading: Point,
    pub segment: SegmentLocator,
    pub time: f64,
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum MobilityError {
    #[error("trajectory {0} has an empty plan")]
    EmptyPlan(String),
    #[error("trajectory {vehicle}: entry times must be strictly increasing at leg {leg}")]
    NonIncreasingEntry { vehicle: String, leg: usize },
    #[error("trajectory {vehicle}: negative speed at leg {leg}")]
    NegativeSpeed { vehicle: String, leg: usize },
    #[error("trajectory {vehicle}: legs {leg} and {next} are not adjacent in the network", next = leg + 1)]
    NonAdjacentLegs { vehicle: String, leg: usize },
    #[error("trajectory {vehicle}: {source}")]
    Network {
        vehicle: String,
        source: crate::roadnet::NetworkError,
    },
    #[error("t={t} is outside the active window [{start}, {end}] of {vehicle}")]
    OutOfWindow {
        vehicle: String,
        t: f64,
        start: f64,
        end: f64,
    },
    #[error("negative input: range {range} and relative speed {v_rel} must be non-negative")]
    NegativeContactInput { range: f64, v_rel: f64 },
}

impl VehicleTrajectory {
    pub fn new(vehicle_id: impl Into<String>, plan: Vec<PlanLeg>) -> Self {
        VehicleTrajectory {
            vehicle_id: vehicle_id.into(),
            plan,
        }
    }

    /// Checks plan invariants against a network.
    pub fn validate(&self, network: &RoadNetwork) -> Result<(), MobilityError> {
        if self.plan.is_empty() {
            return Err(MobilityError::EmptyPlan(self.vehicle_id.clone()));
        }
        for (i, leg) in self.plan.iter().enumerate() {
            network
                .resolve(&leg.segment)
                .map_err(|e| MobilityError::Network {
                    vehicle: self.vehicle_id.clone(),
                    source: e,
                })?;
            if leg.speed < 0.0 {
                return Err(MobilityError::NegativeSpeed {
                    vehicle: self.vehicle_id.clone(),
                    leg: i,
                });
            }
            if i + 1 < self.plan.len() {
                if self.plan[i + 1].entry_time <= leg.entry_time {
                    return Err(MobilityError::NonIncreasingEntry {
                        vehicle: self.vehicle_id.clone(),
                        leg: i + 1,
                    });
                }
                let successors =
                    network
                        .successors(&leg.segment)
                        .map_err(|e| MobilityError::Network {
                            vehicle: self.vehicle_id.clone(),
                            source: e,
                        })?;
                if !successors.contains(&self.plan[i + 1].segment) {
                    return Err(MobilityError::NonAdjacentLegs {
                        vehicle: self.vehicle_id.clone(),
                        leg: i,
                    });
                }
            }
        }
        Ok(())
    }

    pub fn start_time(&self) -> f64 {
        self.plan.first().map(|l| l.entry_time).unwrap_or(0.0)
    }

    /// End of the active window: the moment the last leg finishes its
    /// segment, or infinity for a stationary final leg.
    pub fn end_time(&self, network: &RoadNetwork) -> Result<f64, MobilityError> {
        let last = self
            .plan
            .last()
            .ok_or_else(|| MobilityError::EmptyPlan(self.vehicle_id.clone()))?;
        let seg = network
            .resolve(&last.segment)
            .map_err(|e| MobilityError::Network {
                vehicle: self.vehicle_id.clone(),
                source: e,
            })?;
        if last.speed == 0.0 {
            Ok(f64::INFINITY)
        } else {
            Ok(last.entry_time + seg.length() / last.speed)
        }
    }

    /// Pose at time `t`. Within a leg the vehicle advances at constant
    /// speed from the segment start and clamps at the segment end until the
    /// next leg's entry time.
    pub fn pose_at(&self, network: &RoadNetwork, t: f64) -> Result<Pose, MobilityError> {
        let start = self.start_time();
        let end = self.end_time(network)?;
        if t < start || t > end {
            return Err(MobilityError::OutOfWindow {
                vehicle: self.vehicle_id.clone(),
                t,
                start,
                end,
            });
        }
        let idx = match self.plan.iter().rposition(|l| l.entry_time <= t) {
            Some(i) => i,
            None => unreachable!("t >= start implies a containing leg"),
        };
        let leg = &self.plan[idx];
        let seg = network
            .resolve(&leg.segment)
            .map_err(|e| MobilityError::Network {
                vehicle: self.vehicle_id.clone(),
                source: e,
            })?;
        let s = (leg.speed * (t - leg.entry_time)).min(seg.length());
        Ok(Pose {
            position: seg.polyline.point_at(s),
            speed: leg.speed,
            heading: seg.polyline.direction_at(s),
            segment: leg.segment.clone(),
            time: t,
        })
    }

    /// Locator of the segment containing the point `distance_m` further
    /// along the plan from the pose at time `t`. Used to resolve
    /// "how is traffic N meters ahead" questions.
    pub fn segment_ahead(
        &self,
        network: &RoadNetwork,
        t: f64,
        distance_m: f64,
    ) -> Result<SegmentLocator, MobilityError> {
        let pose = self.pose_at(network, t)?;
        let idx = self
            .plan
            .iter()
            .rposition(|l| l.entry_time <= t)
            .unwrap_or(0);
        let seg = network
            .resolve(&pose.segment)
            .map_err(|e| MobilityError::Network {
                vehicle: self.vehicle_id.clone(),
                source: e,
            })?;
        let offset = seg.polyline.offset_of_closest(&pose.position);
        let mut remaining = distance_m - (seg.length() - offset);
        if remaining <= 0.0 {
            return Ok(pose.segment);
        }
        for leg in &self.plan[idx + 1..] {
            let seg = network
                .resolve(&leg.segment)
                .map_err(|e| MobilityError::Network {
                    vehicle: self.vehicle_id.clone(),
                    source: e,
                })?;
            if remaining <= seg.length() {
                return Ok(leg.segment.clone());
            }
            remaining -= seg.length();
        }
        // Past the end of the plan: the last planned segment.
        Ok(self.plan.last().unwrap().segment.clone())
    }
}

/// Duration two nodes stay within radio range, or unbounded when the
/// relative speed is zero.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ContactDuration {
    Seconds(f64),
    Unbounded,
}

impl ContactDuration {
    pub fn seconds(&self) -> Option<f64> {
        match self {
            ContactDuration::Seconds(s) => Some(*s),
            ContactDuration::Unbounded => None,
        }
    }
}

/// Co-linear pass-through contact: the faster node enters range at -R and
/// leaves at +R, covering 2R of relative travel, so the window is
/// `2 * range / v_rel`. Zero relative speed never leaves range.
pub fn contact_duration_1d(range_m: f64, v_rel: f64) -> Result<ContactDuration, MobilityError> {
    if range_m <= 0.0 || v_rel < 0.0 {
        return Err(MobilityError::NegativeContactInput {
            range: range_m,
            v_rel,
        });
    }
    if v_rel == 0.0 {
        Ok(ContactDuration::Unbounded)
    } else {
        Ok(ContactDuration::Seconds(2.0 * range_m / v_rel))
    }
}

/// One row of the speed-vs-in-range-time table.
#[derive(Debug, Clone, PartialEq)]
pub struct InRangeRow {
    pub speed_kmh: f64,
    /// Speed in m/s at the table's display precision (one decimal).
    pub speed_ms: f64,
    /// 2 * range / speed_ms.
    pub duration_exact_s: f64,
    /// Floor of the duration rounded to one decimal.
    pub duration_floor_s: u32,
    /// Field-measured reference value, where one exists for this row.
    pub reference_s: Option<u32>,
}

impl InRangeRow {
    /// `Some(true)` = agrees with the reference, `Some(false)` = documented
    /// discrepancy, `None` = no reference row.
    pub fn matches_reference(&self) -> Option<bool> {
        self.reference_s.map(|r| r == self.duration_floor_s)
    }
}

/// Reference in-range seconds measured for Class 1 (100 m nominal) devices
/// with one node stationary, keyed by speed in km/h.
pub const CLASS1_REFERENCE_IN_RANGE: [(u32, u32); 5] =
    [(100, 7), (80, 10), (60, 13), (40, 18), (20, 35)];

pub const CLASS1_TABLE_SPEEDS_KMH: [f64; 5] = [100.0, 80.0, 60.0, 40.0, 20.0];

fn round1(x: f64) -> f64 {
    (x * 10.0).round() / 10.0
}

/// Max time in range per speed, one vehicle stationary. The arithmetic
/// matches the reference table: speeds convert to m/s at one-decimal
/// display precision and the floor column floors the one-decimal duration,
/// which reproduces the reference rows 100/40/20 and surfaces the known
/// discrepancies at 80 and 60 km/h.
pub fn in_range_table(range_m: f64, speeds_kmh: &[f64]) -> Result<Vec<InRangeRow>, MobilityError> {
    let mut rows = Vec::with_capacity(speeds_kmh.len());
    for &kmh in speeds_kmh {
        if kmh <= 0.0 {
            return Err(MobilityError::NegativeContactInput {
                range: range_m,
                v_rel: kmh,
            });
        }
        let speed_ms = round1(kmh / KMH_PER_MS);
        let duration = match contact_duration_1d(range_m, speed_ms)? {
            ContactDuration::Seconds(s) => s,
            ContactDuration::Unbounded => unreachable!("speed > 0"),
        };
        let reference = if range_m == 100.0 {
            CLASS1_REFERENCE_IN_RANGE
                .iter()
                .find(|(s, _)| *s as f64 == kmh)
                .map(|(_, v)| *v)
        } else {
            None
        };
        rows.push(InRangeRow {
            speed_kmh: kmh,
            speed_ms,
            duration_exact_s: duration,
            duration_floor_s: round1(duration).floor() as u32,
            reference_s: reference,
        });
    }
    Ok(rows)
}

/// Earliest maximal interval during which the two vehicles are within
/// `range_m` of each other, or `None` if they never meet. Found by scanning
/// at [`CONTACT_SCAN_DT`] and refining both edges by bisection.
pub fn contact_interval(
    a: &VehicleTrajectory,
    b: &VehicleTrajectory,
    network: &RoadNetwork,
    range_m: f64,
) -> Result<Option<(f64, f64)>, MobilityError> {
    let start = a.start_time().max(b.start_time());
    let end = a.end_time(network)?.min(b.end_time(network)?);
    if end < start {
        return Ok(None);
    }
    // Cap unbounded overlap: two parked vehicles either touch forever or never.
    let horizon = if end.is_infinite() {
        let da = distance_at(a, b, network, start)?;
        if da <= range_m {
            return Ok(Some((start, f64::INFINITY)));
        }
        start + 86_400.0
    } else {
        end
    };

    let in_range =
        |t: f64| -> Result<bool, MobilityError> { Ok(distance_at(a, b, network, t)? <= range_m) };

    // Scan for the first in-range sample.
    let mut t_first = None;
    let mut t = start;
    let mut prev = start;
    loop {
        if in_range(t)? {
            t_first = Some((prev, t));
            break;
        }
        if t >= horizon {
            break;
        }
        prev = t;
        t = (t + CONTACT_SCAN_DT).min(horizon);
    }
    let (before_enter, at_enter) = match t_first {
        Some(pair) => pair,
        None => return Ok(None),
    };

    let t_enter = if at_enter == start {
        start
    } else {
        bisect_crossing(&|t| in_range(t), before_enter, at_enter)?
    };

    // Scan forward for the first out-of-range sample after entry.
    let mut t = at_enter;
    let t_exit = loop {
        let next = (t + CONTACT_SCAN_DT).min(horizon);
        if !in_range(next)? {
            break bisect_crossing(&|t| Ok(!in_range(t)?), t, next)?;
        }
        if next >= horizon {
            break horizon;
        }
        t = next;
    };
    Ok(Some((t_enter, t_exit)))
}

fn distance_at(
    a: &VehicleTrajectory,
    b: &VehicleTrajectory,
    network: &RoadNetwork,
    t: f64,
) -> Result<f64, MobilityError> {
    let pa = a.pose_at(network, t)?;
    let pb = b.pose_at(network, t)?;
    Ok(pa.position.distance(&pb.position))
}

/// Bisects for the earliest t in (lo, hi] where `pred` flips to true;
/// `pred(lo)` must be false and `pred(hi)` true.
fn bisect_crossing(
    pred: &dyn Fn(f64) -> Result<bool, MobilityError>,
    mut lo: f64,
    mut hi: f64,
) -> Result<f64, MobilityError> {
    while hi - lo > CONTACT_REFINE_TOL {
        let mid = 0.5 * (lo + hi);
        if pred(mid)? {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Ok(hi)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::Polyline;
    use crate::roadnet::{Road, Segment};

    fn line_network(len: f64) -> RoadNetwork {
        let mut net = RoadNetwork::new();
        net.add_road(Road {
            road_id: 1,
            road_name: "main".into(),
            segments: vec![Segment::new(
                1,
                Polyline::new(vec![Point::new(0.0, 0.0), Point::new(len, 0.0)]).unwrap(),
            )
            .unwrap()],
        })
        .unwrap();
        net
    }

    fn corner_network() -> RoadNetwork {
        let mut net = RoadNetwork::new();
        net.add_road(Road {
            road_id: 1,
            road_name: "main".into(),
            segments: vec![
                Segment::new(
                    1,
                    Polyline::new(vec![Point::new(0.0, 0.0), Point::new(100.0, 0.0)]).unwrap(),
                )
                .unwrap(),
                Segment::new(
                    2,
                    Polyline::new(vec![Point::new(100.0, 0.0), Point::new(100.0, 100.0)]).unwrap(),
                )
                .unwrap(),
            ],
        })
        .unwrap();
        net
    }

    #[test]
    fn pose_at_linear_motion() {
        let net = line_network(100.0);
        let traj = VehicleTrajectory::new(
            "v1",
            vec![PlanLeg {
                segment: SegmentLocator::new(1, "main", 1),
                entry_time: 2.0,
                speed: 10.0,
            }],
        );
        traj.validate(&net).unwrap();
        let p = traj.pose_at(&net, 2.0).unwrap();
        assert_eq!(p.position, Point::new(0.0, 0.0));
        let p = traj.pose_at(&net, 7.0).unwrap();
        assert_eq!(p.position, Point::new(50.0, 0.0));
        assert_eq!(p.speed, 10.0);
        assert!(matches!(
            traj.pose_at(&net, 1.0).unwrap_err(),
            MobilityError::OutOfWindow { .. }
        ));
        assert!(matches!(
            traj.pose_at(&net, 13.0).unwrap_err(),
            MobilityError::OutOfWindow { .. }
        ));
    }

    /// Independent step-wise integrator: advances distance at dt = 1 ms and
    /// walks the plan's segments by accumulated arc length.
    fn integrate_position(traj: &VehicleTrajectory, net: &RoadNetwork, t_end: f64) -> Point {
        let dt = 0.001;
        let mut t = traj.start_time();
        let mut leg_idx = 0;
        let mut s = 0.0;
        while t + dt <= t_end {
            t += dt;
            if leg_idx + 1 < traj.plan.len() && t >= traj.plan[leg_idx + 1].entry_time {
                leg_idx += 1;
                s = 0.0;
            }
            let leg = &traj.plan[leg_idx];
            let seg = net.resolve(&leg.segment).unwrap();
            s = (s + leg.speed * dt).min(seg.length());
        }
        let seg = net.resolve(&traj.plan[leg_idx].segment).unwrap();
        seg.polyline.point_at(s)
    }

    #[test]
    fn pose_at_multi_segment_matches_step_integrator() {
        let net = corner_network();
        let traj = VehicleTrajectory::new(
            "v1",
            vec![
                PlanLeg {
                    segment: SegmentLocator::new(1, "main", 1),
                    entry_time: 0.0,
                    speed: 10.0,
                },
                PlanLeg {
                    segment: SegmentLocator::new(1, "main", 2),
                    entry_time: 10.0,
                    speed: 10.0,
                },
            ],
        );
        traj.validate(&net).unwrap();
        // 4 s into the second segment: 40 m up the corner.
        let t = 14.0;
        let pose = traj.pose_at(&net, t).unwrap();
        assert_eq!(pose.segment, SegmentLocator::new(1, "main", 2));
        let integrated = integrate_position(&traj, &net, t);
        assert!(
            pose.position.distance(&integrated) < 0.05,
            "pose {:?} vs integrated {:?}",
            pose.position,
            integrated
        );
        assert_eq!(pose.position, Point::new(100.0, 40.0));
    }

    #[test]
    fn pose_clamps_at_segment_end_until_next_entry() {
        let net = corner_network();
        let traj = VehicleTrajectory::new(
            "v1",
            vec![
                PlanLeg {
                    segment: SegmentLocator::new(1, "main", 1),
                    entry_time: 0.0,
                    speed: 20.0, // finishes the 100 m segment at t=5
                },
                PlanLeg {
                    segment: SegmentLocator::new(1, "main", 2),
                    entry_time: 8.0,
                    speed: 10.0,
                },
            ],
        );
        let p = traj.pose_at(&net, 6.5).unwrap();
        assert_eq!(p.position, Point::new(100.0, 0.0));
        assert_eq!(p.segment, SegmentLocator::new(1, "main", 1));
    }

    #[test]
    fn distance_traveled_equals_speed_integral_for_exact_handoffs() {
        let net = corner_network();
        let traj = VehicleTrajectory::new(
            "v1",
            vec![
                PlanLeg {
                    segment: SegmentLocator::new(1, "main", 1),
                    entry_time: 0.0,
                    speed: 10.0,
                },
                PlanLeg {
                    segment: SegmentLocator::new(1, "main", 2),
                    entry_time: 10.0,
                    speed: 25.0,
                },
            ],
        );
        // Path distance from t=4 to t=12: 6 s at 10 + 2 s at 25 = 110 m.
        let p1 = traj.pose_at(&net, 4.0).unwrap();
        let p2 = traj.pose_at(&net, 12.0).unwrap();
        let d1 = 40.0 + 0.0;
        let d2 = 100.0 + (p2.position.y - 0.0);
        assert!((d2 - d1 - 110.0).abs() < 1e-9);
        assert_eq!(p1.position, Point::new(40.0, 0.0));
        assert_eq!(p2.position, Point::new(100.0, 50.0));
    }

    #[test]
    fn contact_duration_examples() {
        // 16 km/h differential at the table's display rounding.
        let d = contact_duration_1d(100.0, 4.5).unwrap().seconds().unwrap();
        assert!((d - 44.444).abs() < 0.001);
        let d = contact_duration_1d(100.0, 11.1).unwrap().seconds().unwrap();
        assert!((d - 18.018).abs() < 0.001);
        assert_eq!(
            contact_duration_1d(100.0, 0.0).unwrap(),
            ContactDuration::Unbounded
        );
        assert!(contact_duration_1d(100.0, -1.0).is_err());
        assert!(contact_duration_1d(0.0, 1.0).is_err());
    }

    #[test]
    fn contact_duration_is_homogeneous() {
        let base = contact_duration_1d(100.0, 5.0).unwrap().seconds().unwrap();
        let twice_range = contact_duration_1d(200.0, 5.0).unwrap().seconds().unwrap();
        let twice_speed = contact_duration_1d(100.0, 10.0).unwrap().seconds().unwrap();
        assert_eq!(twice_range, 2.0 * base);
        assert_eq!(twice_speed, base / 2.0);
    }

    #[test]
    fn in_range_table_reproduces_reference_rows() {
        let rows = in_range_table(100.0, &CLASS1_TABLE_SPEEDS_KMH).unwrap();
        let exact: Vec<f64> = rows.iter().map(|r| r.duration_exact_s).collect();
        let expected = [7.2, 9.0, 12.0, 18.0, 35.7];
        for (got, want) in exact.iter().zip(expected) {
            assert!((got - want).abs() < 0.05, "{got} vs {want}");
        }
        let floors: Vec<u32> = rows.iter().map(|r| r.duration_floor_s).collect();
        assert_eq!(floors, [7, 9, 12, 18, 35]);
        let matches: Vec<Option<bool>> = rows.iter().map(|r| r.matches_reference()).collect();
        assert_eq!(
            matches,
            [Some(true), Some(false), Some(false), Some(true), Some(true)]
        );
    }

    #[test]
    fn in_range_table_other_ranges_have_no_reference() {
        let rows = in_range_table(225.0, &[100.0]).unwrap();
        assert_eq!(rows[0].reference_s, None);
        assert!((rows[0].duration_exact_s - 16.2).abs() < 0.05);
    }

    #[test]
    fn contact_interval_overtake_matches_1d_oracle() {
        let net = line_network(3000.0);
        let seg = SegmentLocator::new(1, "main", 1);
        // A at 90 km/h from x=100; B at 106 km/h from x=0: exactly one
        // range behind at t=0.
        let a = VehicleTrajectory::new(
            "a",
            vec![PlanLeg {
                segment: seg.clone(),
                entry_time: -4.0, // at t=0 it is 100 m along
                speed: 25.0,
            }],
        );
        let b = VehicleTrajectory::new(
            "b",
            vec![PlanLeg {
                segment: seg.clone(),
                entry_time: 0.0,
                speed: 106.0 / KMH_PER_MS,
            }],
        );
        let (t_enter, t_exit) = contact_interval(&a, &b, &net, 100.0).unwrap().unwrap();
        assert_eq!(t_enter, 0.0);
        let duration = t_exit - t_enter;
        let oracle = contact_duration_1d(100.0, 106.0 / KMH_PER_MS - 25.0)
            .unwrap()
            .seconds()
            .unwrap();
        assert!((oracle - 45.0).abs() < 1e-9);
        assert!(
            (duration - oracle).abs() <= 2.0 * CONTACT_REFINE_TOL,
            "duration {duration} vs oracle {oracle}"
        );
        // Symmetry in the two trajectories.
        let (e2, x2) = contact_interval(&b, &a, &net, 100.0).unwrap().unwrap();
        assert_eq!((t_enter, t_exit), (e2, x2));
    }

    #[test]
    fn contact_interval_stationary_and_disjoint() {
        let net = line_network(1000.0);
        let seg = SegmentLocator::new(1, "main", 1);
        let parked = |id: &str| {
            VehicleTrajectory::new(
                id,
                vec![PlanLeg {
                    segment: seg.clone(),
                    entry_time: 0.0,
                    speed: 0.0,
                }],
            )
        };
        let (enter, exit) = contact_interval(&parked("a"), &parked("b"), &net, 100.0)
            .unwrap()
            .unwrap();
        assert_eq!(enter, 0.0);
        assert!(exit.is_infinite());

        // Parallel roads 150 m apart never touch at range 100.
        let mut net2 = RoadNetwork::new();
        for (id, y) in [(1u32, 0.0f64), (2, 150.0)] {
            net2.add_road(Road {
                road_id: id,
                road_name: if id == 1 {
                    "north".into()
                } else {
                    "south".into()
                },
                segments: vec![Segment::new(
                    1,
                    Polyline::new(vec![Point::new(0.0, y), Point::new(1000.0, y)]).unwrap(),
                )
                .unwrap()],
            })
            .unwrap();
        }
        let a = VehicleTrajectory::new(
            "a",
            vec![PlanLeg {
                segment: SegmentLocator::new(1, "north", 1),
                entry_time: 0.0,
                speed: 10.0,
            }],
        );
        let b = VehicleTrajectory::new(
            "b",
            vec![PlanLeg {
                segment: SegmentLocator::new(2, "south", 1),
                entry_time: 0.0,
                speed: 10.0,
            }],
        );
        assert_eq!(contact_interval(&a, &b, &net2, 100.0).unwrap(), None);
    }

    #[test]
    fn segment_ahead_walks_the_plan() {
        let net = corner_network();
        let traj = VehicleTrajectory::new(
            "v1",
            vec![
                PlanLeg {
                    segment: SegmentLocator::new(1, "main", 1),
                    entry_time: 0.0,
                    speed: 10.0,
                },
                PlanLeg {
                    segment: SegmentLocator::new(1, "main", 2),
                    entry_time: 10.0,
                    speed: 10.0,
                },
            ],
        );
        // At t=2 the vehicle is 20 m along segment 1; 50 m ahead stays there.
        assert_eq!(
            traj.segment_ahead(&net, 2.0, 50.0).unwrap(),
            SegmentLocator::new(1, "main", 1)
        );
        // 120 m ahead crosses into segment 2.
        assert_eq!(
            traj.segment_ahead(&net, 2.0, 120.0).unwrap(),
            SegmentLocator::new(1, "main", 2)
        );
        // Far past the plan end clamps to the last segment.
        assert_eq!(
            traj.segment_ahead(&net, 2.0, 10_000.0).unwrap(),
            SegmentLocator::new(1, "main", 2)
        );
    }
}
