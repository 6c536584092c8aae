//! Synthetic networks and GPS logs with known ground truth.

use std::collections::BTreeSet;

use chrono::NaiveDate;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::geo::GeoPoint;
use crate::model::{BusLine, BusStop, Dataset, GpsFix, ItineraryDef, ItineraryStop, LineCategory, StopType};

/// A complete input set.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Scenario {
    pub lines: Vec<BusLine>,
    pub stops: Vec<BusStop>,
    pub itineraries: Vec<ItineraryDef>,
    pub fixes: Vec<GpsFix>,
}

impl Scenario {
    pub fn dataset(&self) -> Dataset {
        Dataset::new(self.lines.clone(), self.stops.clone(), self.itineraries.clone(), self.fixes.clone())
    }

    fn extend(&mut self, other: Scenario) {
        self.lines.extend(other.lines);
        self.stops.extend(other.stops);
        self.itineraries.extend(other.itineraries);
        self.fixes.extend(other.fixes);
    }
}

pub fn service_day() -> NaiveDate {
    NaiveDate::from_ymd_opt(2022, 11, 7).expect("valid date")
}

/// Piecewise-linear motion through `(east_m, north_m, time_s)` waypoints.
#[derive(Debug, Clone)]
struct Track {
    origin: GeoPoint,
    points: Vec<(f64, f64, u32)>,
}

impl Track {
    fn local_at(&self, t: u32) -> (f64, f64) {
        let i = self.points.partition_point(|p| p.2 <= t).clamp(1, self.points.len() - 1);
        let (x0, y0, t0) = self.points[i - 1];
        let (x1, y1, t1) = self.points[i];
        if t <= t0 {
            return (x0, y0);
        }
        if t >= t1 {
            return (x1, y1);
        }
        let f = (t - t0) as f64 / (t1 - t0) as f64;
        (x0 + f * (x1 - x0), y0 + f * (y1 - y0))
    }

    fn at(&self, t: u32) -> GeoPoint {
        let (x, y) = self.local_at(t);
        self.origin.offset(x, y)
    }

    /// Fixes on a regular grid from the first waypoint plus one at every
    /// waypoint time.
    fn sample(&self, cadence_s: u32, vehicle: &str, line: &str) -> Vec<GpsFix> {
        let start = self.points[0].2;
        let end = self.points[self.points.len() - 1].2;
        let mut times: BTreeSet<u32> = (start..=end).step_by(cadence_s as usize).collect();
        times.extend(self.points.iter().map(|p| p.2));
        times
            .into_iter()
            .map(|t| GpsFix {
                vehicle_id: vehicle.to_string(),
                line_code: line.to_string(),
                position: self.at(t),
                day: service_day(),
                time: t,
            })
            .collect()
    }
}

fn itinerary(line_code: &str, direction: &str, stop_ids: &[String], circular: bool) -> ItineraryDef {
    ItineraryDef {
        line_code: line_code.to_string(),
        direction: direction.to_string(),
        stops: stop_ids
            .iter()
            .enumerate()
            .map(|(i, s)| ItineraryStop { seq: i as u32 + 1, stop_id: s.clone() })
            .collect(),
        circular,
    }
}

/// The line 829 case study: a circular ten-stop line driven once by bus
/// BA020, with the failure intervals applied.
#[derive(Debug, Clone)]
pub struct Line829 {
    /// Inputs with fixes inside the failure intervals removed.
    pub scenario: Scenario,
    /// Every fix of the trip.
    pub full_fixes: Vec<GpsFix>,
    /// True passage time of each itinerary position (1-based).
    pub passages: Vec<(usize, u32)>,
}

pub const LINE_829_STOP_NAMES: [&str; 10] = [
    "Terminal Campo Comprido",
    "R. Angelo Nebosne, 75",
    "R. Prof. Pedro Viriato Parigot de Souza, 4716",
    "R. Prof. Pedro Viriato Parigot de Souza, 5136",
    "R. Casemiro Augusto Rodacki, 233",
    "R. Carlos Müller, 331",
    "R. Carlos Müller, 871",
    "R. Eduardo Sprada, 5273",
    "R. Dep. Heitor Alencar Furtado, 5181",
    "R. Dep. Heitor Alencar Furtado, 4900",
];

/// Closed intervals `[from, to]` (seconds of day) with no GPS data.
pub const LINE_829_FAILURES: [(u32, u32); 3] = [
    (6 * 3600 + 15 * 60, 6 * 3600 + 16 * 60),
    (6 * 3600 + 17 * 60, 6 * 3600 + 19 * 60),
    (6 * 3600 + 26 * 60, 6 * 3600 + 28 * 60),
];

const fn hms(h: u32, m: u32, s: u32) -> u32 {
    h * 3600 + m * 60 + s
}

pub fn line_829() -> Line829 {
    let origin = GeoPoint::new(-25.44, -49.33);
    let local = [
        (0.0, 0.0),
        (600.0, 1500.0),
        (1000.0, 1900.0),
        (1400.0, 2300.0),
        (1800.0, 2700.0),
        (2200.0, 2400.0),
        (2200.0, 1900.0),
        (1500.0, 1300.0),
        (800.0, 1150.0),
        (300.0, 1400.0),
    ];
    let stops: Vec<BusStop> = local
        .iter()
        .enumerate()
        .map(|(i, &(x, y))| BusStop {
            stop_id: format!("P{}", i + 1),
            name: LINE_829_STOP_NAMES[i].to_string(),
            stop_type: if i == 0 { StopType::Terminal } else { StopType::StreetStop },
            position: origin.offset(x, y),
        })
        .collect();
    let mut ids: Vec<String> = stops.iter().map(|s| s.stop_id.clone()).collect();
    ids.push(ids[0].clone());

    // true passages; stops 3, 5 and 8 fall inside the failure intervals
    let times = [
        hms(6, 4, 51),
        hms(6, 14, 36),
        hms(6, 15, 30),
        hms(6, 16, 43),
        hms(6, 18, 0),
        hms(6, 19, 30),
        hms(6, 21, 6),
        hms(6, 27, 0),
        hms(6, 28, 30),
        hms(6, 29, 6),
        hms(6, 31, 41),
    ];
    let stop_point = |pos: usize| local[pos % local.len()];
    let mut points: Vec<(f64, f64, u32)> = Vec::new();
    for (pos, &t) in times.iter().enumerate() {
        let (x, y) = stop_point(pos);
        match pos {
            // the road from stop 1 to stop 2 passes 28 m from stop 10
            1 => points.push((320.0, 1380.0, hms(6, 14, 8))),
            // slow traffic after stop 7, so stop 8 is far from the last fix before the outage
            7 => points.push((1743.0, 1508.0, hms(6, 25, 30))),
            _ => {}
        }
        points.push((x, y, t));
    }
    let track = Track { origin, points };
    let mut full_fixes = track.sample(20, "BA020", "829");
    // stop passages use the stop's own coordinates
    for f in &mut full_fixes {
        if let Some(pos) = times.iter().position(|t| *t == f.time) {
            f.position = stops[pos % stops.len()].position;
        }
    }
    let fixes: Vec<GpsFix> = full_fixes
        .iter()
        .filter(|f| !LINE_829_FAILURES.iter().any(|(a, b)| (*a..=*b).contains(&f.time)))
        .cloned()
        .collect();
    Line829 {
        scenario: Scenario {
            lines: vec![BusLine {
                code: "829".into(),
                name: "UNIVERSIDADE POSITIVO".into(),
                category: LineCategory::Alimentador,
                color: "LARANJA".into(),
            }],
            stops,
            itineraries: vec![itinerary("829", "CIRCULAR", &ids, true)],
            fixes,
        },
        full_fixes,
        passages: times.iter().enumerate().map(|(i, t)| (i + 1, *t)).collect(),
    }
}

/// A circular line whose distinct stops sit on the corners of a regular
/// polygon with equal sides.
#[derive(Debug, Clone)]
pub struct LoopLine {
    pub line: BusLine,
    pub center: GeoPoint,
    pub corners: usize,
    pub side_m: f64,
}

impl LoopLine {
    pub fn new(code: &str, category: LineCategory, center: GeoPoint, corners: usize, side_m: f64) -> Self {
        Self {
            line: BusLine { code: code.into(), name: format!("LINE {code}"), category, color: "AZUL".into() },
            center,
            corners,
            side_m,
        }
    }

    fn radius(&self) -> f64 {
        self.side_m / (2.0 * (std::f64::consts::PI / self.corners as f64).sin())
    }

    fn corner(&self, k: usize) -> (f64, f64) {
        let a = std::f64::consts::TAU * (k % self.corners) as f64 / self.corners as f64;
        (self.radius() * a.cos(), self.radius() * a.sin())
    }

    pub fn stop_id(&self, k: usize) -> String {
        format!("{}-{:02}", self.line.code, k % self.corners + 1)
    }

    /// Itinerary length: every corner plus the closing return.
    pub fn positions(&self) -> usize {
        self.corners + 1
    }

    pub fn stops(&self) -> Vec<BusStop> {
        (0..self.corners)
            .map(|k| {
                let (x, y) = self.corner(k);
                BusStop {
                    stop_id: self.stop_id(k),
                    name: format!("{} stop {}", self.line.code, k + 1),
                    stop_type: if k == 0 { StopType::Terminal } else { StopType::StreetStop },
                    position: self.center.offset(x, y),
                }
            })
            .collect()
    }

    pub fn itinerary(&self) -> ItineraryDef {
        let ids: Vec<String> = (0..=self.corners).map(|k| self.stop_id(k)).collect();
        itinerary(&self.line.code, "CIRCULAR", &ids, true)
    }

    pub fn scenario(&self) -> Scenario {
        Scenario { lines: vec![self.line.clone()], stops: self.stops(), itineraries: vec![self.itinerary()], fixes: vec![] }
    }

    /// Fixes of one vehicle driving the laps of `plan` back to back.
    pub fn drive(&self, plan: &VehiclePlan, cadence_s: u32) -> Vec<GpsFix> {
        assert_eq!(plan.legs.len() % self.corners, 0, "whole laps only");
        let passages = plan.passages();
        let points = passages
            .iter()
            .enumerate()
            .map(|(e, &t)| {
                let (x, y) = self.corner(e);
                (x, y, t)
            })
            .collect();
        let track = Track { origin: self.center, points };
        let stops = self.stops();
        let mut fixes = track.sample(cadence_s, &plan.vehicle_id, &self.line.code);
        for f in &mut fixes {
            if let Some(e) = passages.iter().position(|t| *t == f.time) {
                f.position = stops[e % self.corners].position;
            }
        }
        fixes.retain(|f| !plan.dropped.iter().any(|&e| passages[e].abs_diff(f.time) <= plan.outage_half_width_s));
        for &(after, corner) in &plan.spurious {
            let t = (passages[after] + passages[after + 1]) / 2;
            fixes.retain(|f| f.time != t);
            fixes.push(GpsFix {
                vehicle_id: plan.vehicle_id.clone(),
                line_code: self.line.code.clone(),
                position: stops[corner].position,
                day: service_day(),
                time: t,
            });
        }
        fixes.sort_by_key(|f| f.time);
        fixes
    }
}

/// One vehicle looping a line without pause, and the faults injected into
/// its log.
///
/// Passage events are numbered from 0 over the whole day. Event `e` is at
/// corner `e % corners`; lap `l` runs from event `l * corners` to
/// `(l + 1) * corners`, so consecutive laps share their terminal event.
#[derive(Debug, Clone, PartialEq)]
pub struct VehiclePlan {
    pub vehicle_id: String,
    pub start: u32,
    /// Travel time of every leg, all laps concatenated.
    pub legs: Vec<u32>,
    /// Events hidden by a GPS outage.
    pub dropped: BTreeSet<usize>,
    /// Fixes removed within this many seconds of a dropped event.
    pub outage_half_width_s: u32,
    /// `(after, corner)`: one fix placed at the stop on `corner`, halfway
    /// between events `after` and `after + 1`.
    pub spurious: Vec<(usize, usize)>,
}

impl VehiclePlan {
    pub fn clean(vehicle_id: &str, start: u32, legs: Vec<u32>) -> Self {
        Self {
            vehicle_id: vehicle_id.into(),
            start,
            legs,
            dropped: BTreeSet::new(),
            outage_half_width_s: 0,
            spurious: Vec::new(),
        }
    }

    /// Time of every passage event.
    pub fn passages(&self) -> Vec<u32> {
        let mut t = Vec::with_capacity(self.legs.len() + 1);
        t.push(self.start);
        for l in &self.legs {
            t.push(t[t.len() - 1] + l);
        }
        t
    }

    pub fn laps(&self, corners: usize) -> usize {
        self.legs.len() / corners
    }

    /// Passage times of lap `l`, opening to closing terminal.
    pub fn lap_passages(&self, l: usize, corners: usize) -> Vec<u32> {
        self.passages()[l * corners..=(l + 1) * corners].to_vec()
    }
}

fn fleet(line: &LoopLine, vehicles: usize, laps: usize, first_start: u32, mut legs: impl FnMut() -> Vec<u32>) -> Vec<VehiclePlan> {
    (0..vehicles)
        .map(|v| {
            let all: Vec<u32> = (0..laps).flat_map(|_| legs()).collect();
            VehiclePlan::clean(&format!("{}-V{:02}", line.line.code, v + 1), first_start + 97 * v as u32, all)
        })
        .collect()
}

fn drive_all(line: &LoopLine, plans: &[VehiclePlan], cadence_s: u32) -> Scenario {
    let mut s = line.scenario();
    for p in plans {
        s.fixes.extend(line.drive(p, cadence_s));
    }
    s
}

/// Loop line driven at constant speed: every leg takes 50 s and fixes come
/// every 10 s, so each passage is sampled exactly.
pub fn uniform_loop_day(vehicles: usize, laps: usize) -> (Scenario, LoopLine, Vec<VehiclePlan>) {
    let line = LoopLine::new("U01", LineCategory::Convencional, GeoPoint::new(-25.40, -49.25), 12, 400.0);
    let plans = fleet(&line, vehicles, laps, 6 * 3600, || vec![50; 12]);
    (drive_all(&line, &plans, 10), line, plans)
}

/// Loop line with a speed that drifts along each lap, so consecutive leg
/// times are correlated.
pub fn jittered_loop_day(vehicles: usize, laps: usize, seed: u64) -> (Scenario, LoopLine, Vec<VehiclePlan>) {
    let line = LoopLine::new("J01", LineCategory::Convencional, GeoPoint::new(-25.40, -49.25), 12, 400.0);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let plans = fleet(&line, vehicles, laps, 6 * 3600, || {
        let mut pace: f64 = rng.random_range(0.8..1.2);
        let mut trend: f64 = rng.random_range(-0.1..0.1);
        (0..12)
            .map(|_| {
                trend += rng.random_range(-0.08..0.08);
                pace = (pace + trend).clamp(0.4, 2.5);
                (50.0 * pace).round() as u32
            })
            .collect()
    });
    (drive_all(&line, &plans, 10), line, plans)
}

/// Fault rates for [`multi_line_day`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FaultRates {
    /// Probability that an interior passage is lost to an outage.
    pub gap: f64,
    /// Probability that a leg carries one spurious mark.
    pub spurious: f64,
    /// Probability that a terminal passage is lost.
    pub anchor: f64,
}

/// Draws faults for one vehicle. Injections that would make the trip
/// boundaries ambiguous are skipped: a lost terminal passage keeps both
/// neighbours, the two passages after a terminal are never both lost, and a
/// spurious hit always precedes an observed passage and points further
/// along the lap.
fn inject(plan: &mut VehiclePlan, corners: usize, rates: FaultRates, rng: &mut ChaCha8Rng) {
    let events = plan.legs.len() + 1;
    plan.outage_half_width_s = 20;
    for e in 0..events {
        let pos = e % corners;
        if pos == 0 {
            if rng.random_bool(rates.anchor) {
                plan.dropped.insert(e);
            }
        } else if rng.random_bool(rates.gap) {
            plan.dropped.insert(e);
        }
    }
    let anchors: Vec<usize> = plan.dropped.iter().copied().filter(|e| e % corners == 0).collect();
    for e in anchors {
        plan.dropped.remove(&(e + 1));
        if e > 0 {
            plan.dropped.remove(&(e - 1));
        }
    }
    for e in (0..events).filter(|e| e % corners == 0) {
        if plan.dropped.contains(&(e + 1)) && plan.dropped.contains(&(e + 2)) {
            plan.dropped.remove(&(e + 2));
        }
    }
    for after in 0..events - 1 {
        let pos = after % corners;
        // lap position of `after` is pos + 1; the hit goes to a stop at least two further on
        if pos == 0 || pos + 2 >= corners || plan.dropped.contains(&(after + 1)) {
            continue;
        }
        if rng.random_bool(rates.spurious) {
            let corner = rng.random_range(pos + 2..corners);
            plan.spurious.push((after, corner));
        }
    }
}

/// Several loop lines per category with gaps and spurious marks injected at
/// the given rates. The plans record every injection so the expected tag
/// counts can be derived without running detection.
pub fn multi_line_day(
    categories: &[LineCategory],
    lines_per_category: usize,
    vehicles: usize,
    laps: usize,
    rates: FaultRates,
    seed: u64,
) -> (Scenario, Vec<(LoopLine, Vec<VehiclePlan>)>) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut scenario = Scenario::default();
    let mut out = Vec::new();
    let base = GeoPoint::new(-25.50, -49.35);
    let mut index = 0;
    for (ci, &category) in categories.iter().enumerate() {
        for li in 0..lines_per_category {
            let corners = rng.random_range(8..=16);
            let line = LoopLine::new(
                &format!("{}{:02}", (b'A' + ci as u8) as char, li + 1),
                category,
                base.offset(6000.0 * (index % 10) as f64, 6000.0 * (index / 10) as f64),
                corners,
                400.0,
            );
            index += 1;
            let mut plans = fleet(&line, vehicles, laps, 5 * 3600 + 30 * 60, || vec![50; corners]);
            for p in &mut plans {
                inject(p, corners, rates, &mut rng);
            }
            scenario.extend(drive_all(&line, &plans, 10));
            out.push((line, plans));
        }
    }
    (scenario, out)
}

/// Two circular lines sharing terminals at both ends of a 12 km corridor.
/// Line `CW` runs north on the west arm and south on the east arm, line
/// `CCW` the other way round, both stopping at every arm stop. The arms are
/// 3 km apart at their widest and 500 m apart at the middle stop pair.
#[derive(Debug, Clone)]
pub struct PinchedCorridors {
    pub scenario: Scenario,
    /// Arm stops from south to north, terminals excluded.
    pub west: Vec<String>,
    pub east: Vec<String>,
    /// Index into `west`/`east` of the closest pair.
    pub pinch: usize,
}

pub fn pinched_corridors() -> PinchedCorridors {
    let origin = GeoPoint::new(-25.45, -49.27);
    let (length, spacing) = (12_000.0, 600.0);
    let sections = (length / spacing) as usize;
    let half_gap = |y: f64| (1500.0 * (std::f64::consts::TAU * y / length).sin().abs()).max(250.0);
    let stop = |id: String, stop_type: StopType, x: f64, y: f64| BusStop {
        name: id.clone(),
        stop_id: id,
        stop_type,
        position: origin.offset(x, y),
    };
    let mut stops = vec![stop("T-S".into(), StopType::Terminal, 0.0, 0.0), stop("T-N".into(), StopType::Terminal, 0.0, length)];
    let (mut west, mut east) = (Vec::new(), Vec::new());
    for k in 1..sections {
        let y = spacing * k as f64;
        let h = half_gap(y);
        let (w, e) = (format!("W{k:02}"), format!("E{k:02}"));
        stops.push(stop(w.clone(), StopType::StreetStop, -h, y));
        stops.push(stop(e.clone(), StopType::StreetStop, h, y));
        west.push(w);
        east.push(e);
    }
    let loop_ids = |up: &[String], down: &[String]| {
        let mut ids = vec!["T-S".to_string()];
        ids.extend(up.iter().cloned());
        ids.push("T-N".into());
        ids.extend(down.iter().rev().cloned());
        ids.push("T-S".into());
        ids
    };
    let lines = ["CW", "CCW"]
        .iter()
        .map(|code| BusLine { code: code.to_string(), name: format!("CORRIDOR {code}"), category: LineCategory::Troncal, color: "VERMELHO".into() })
        .collect();
    let itineraries = vec![
        itinerary("CW", "CIRCULAR", &loop_ids(&west, &east), true),
        itinerary("CCW", "CIRCULAR", &loop_ids(&east, &west), true),
    ];
    PinchedCorridors {
        scenario: Scenario { lines, stops, itineraries, fixes: Vec::new() },
        pinch: sections / 2 - 1,
        west,
        east,
    }
}

/// Many vehicles looping all day, for throughput runs. Produces at least
/// `target_fixes` fixes.
pub fn bulk_day(target_fixes: usize, seed: u64) -> Scenario {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut scenario = Scenario::default();
    let corners = 20;
    let mut count = 0;
    let mut index = 0;
    while count < target_fixes {
        let line = LoopLine::new(
            &format!("B{index:03}"),
            LineCategory::ALL[index % LineCategory::ALL.len()],
            GeoPoint::new(-25.30, -49.40).offset(7000.0 * (index % 12) as f64, 7000.0 * (index / 12) as f64),
            corners,
            450.0,
        );
        index += 1;
        let mut s = line.scenario();
        for v in 0..20 {
            if count >= target_fixes {
                break;
            }
            let legs: Vec<u32> = (0..corners * 40).map(|_| rng.random_range(40..90)).collect();
            let fixes = line.drive(&VehiclePlan::clean(&format!("{}-V{v:02}", line.line.code), 5 * 3600 + 60 * v as u32, legs), 20);
            count += fixes.len();
            s.fixes.extend(fixes);
        }
        scenario.extend(s);
    }
    scenario
}
