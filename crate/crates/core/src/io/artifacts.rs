//! Files produced between pipeline stages: clusters, OD pairs and detected
//! itineraries.

use std::collections::{BTreeMap, BTreeSet};
use std::io::{BufRead, Read, Write};

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};

use super::records::{non_empty, point, records, write_record, Coord};
use crate::clustering::Cluster;
use crate::detection::{DetectedItinerary, Provenance, TimedStop};
use crate::error::ParseError;
use crate::model::{format_hms, parse_hms};
use crate::routing::OdPair;

#[derive(Debug, Serialize, Deserialize)]
struct ClusterRecord {
    cluster_id: String,
    centroid_stop_id: String,
    members: Vec<String>,
    #[serde(default)]
    absorbed: Vec<String>,
    #[serde(default)]
    shared_members: Vec<String>,
    #[serde(default)]
    lines_served: Vec<String>,
    #[serde(default)]
    avg_buses: f64,
}

/// Reads the clusters file, one cluster per line.
///
/// Members are sorted and must include the centroid. Cluster ids are unique.
pub fn parse_clusters<R: BufRead>(input: R) -> Result<Vec<Cluster>, ParseError> {
    let mut out = Vec::new();
    let mut seen = BTreeSet::new();
    for rec in records::<ClusterRecord, _>(input) {
        let (line, rec) = rec?;
        non_empty(line, "cluster_id", &rec.cluster_id)?;
        non_empty(line, "centroid_stop_id", &rec.centroid_stop_id)?;
        if !rec.avg_buses.is_finite() || rec.avg_buses < 0.0 {
            return Err(ParseError::InvalidRecord { line, message: format!("avg_buses {}", rec.avg_buses) });
        }
        let mut members = rec.members;
        members.sort();
        members.dedup();
        if members.binary_search(&rec.centroid_stop_id).is_err() {
            return Err(ParseError::InvalidRecord {
                line,
                message: format!("centroid {:?} is not a member", rec.centroid_stop_id),
            });
        }
        if !seen.insert(rec.cluster_id.clone()) {
            return Err(ParseError::DuplicateId { line, kind: "cluster", id: rec.cluster_id });
        }
        let sorted_subset = |mut v: Vec<String>, field: &str| {
            v.sort();
            v.dedup();
            match v.iter().find(|m| members.binary_search(m).is_err()) {
                Some(m) => Err(ParseError::InvalidRecord { line, message: format!("{field} entry {m:?} is not a member") }),
                None => Ok(v),
            }
        };
        let absorbed = sorted_subset(rec.absorbed, "absorbed")?;
        let shared = sorted_subset(rec.shared_members, "shared_members")?;
        let mut lines = rec.lines_served;
        lines.sort();
        lines.dedup();
        out.push(Cluster {
            cluster_id: rec.cluster_id,
            centroid_stop_id: rec.centroid_stop_id,
            members,
            absorbed,
            shared_members: shared,
            lines_served: lines,
            avg_buses: rec.avg_buses,
        });
    }
    Ok(out)
}

pub fn write_clusters<W: Write>(mut out: W, clusters: &[Cluster]) -> std::io::Result<()> {
    for c in clusters {
        write_record(&mut out, c)?;
    }
    Ok(())
}

#[derive(Debug, Serialize, Deserialize)]
struct OdRecord {
    od_id: String,
    origin_lat: Coord,
    origin_lon: Coord,
    destination_lat: Coord,
    destination_lon: Coord,
}

pub fn parse_od_pairs<R: BufRead>(input: R) -> Result<Vec<OdPair>, ParseError> {
    let mut out = Vec::new();
    let mut seen = BTreeSet::new();
    for rec in records::<OdRecord, _>(input) {
        let (line, rec) = rec?;
        non_empty(line, "od_id", &rec.od_id)?;
        let origin = point(line, &rec.origin_lat, &rec.origin_lon)?;
        let destination = point(line, &rec.destination_lat, &rec.destination_lon)?;
        if !seen.insert(rec.od_id.clone()) {
            return Err(ParseError::DuplicateId { line, kind: "OD pair", id: rec.od_id });
        }
        out.push(OdPair { od_id: rec.od_id, origin, destination });
    }
    Ok(out)
}

pub fn write_od_pairs<W: Write>(mut out: W, pairs: &[OdPair]) -> std::io::Result<()> {
    for p in pairs {
        let rec = OdRecord {
            od_id: p.od_id.clone(),
            origin_lat: Coord::Number(p.origin.lat),
            origin_lon: Coord::Number(p.origin.lon),
            destination_lat: Coord::Number(p.destination.lat),
            destination_lon: Coord::Number(p.destination.lon),
        };
        write_record(&mut out, &rec)?;
    }
    Ok(())
}

/// One row of the detected-itineraries CSV.
///
/// `time` is the rendered clock time; `seconds` keeps the exact value so the
/// file can be read back without loss.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DetectedRow {
    pub line_code: String,
    pub direction: String,
    pub vehicle_id: String,
    pub day: NaiveDate,
    pub trip: usize,
    pub position: usize,
    pub stop_id: String,
    pub time: String,
    pub seconds: f64,
    pub provenance: Provenance,
}

/// Writes one row per timed stop. Trips are numbered from 1 in input order.
pub fn write_detected<W: Write>(out: W, itineraries: &[DetectedItinerary]) -> crate::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for (i, d) in itineraries.iter().enumerate() {
        for e in &d.entries {
            w.serialize(DetectedRow {
                line_code: d.line_code.clone(),
                direction: d.direction.clone(),
                vehicle_id: d.vehicle_id.clone(),
                day: d.day,
                trip: i + 1,
                position: e.position,
                stop_id: e.stop_id.clone(),
                time: format_hms(e.time),
                seconds: e.time,
                provenance: e.provenance,
            })?;
        }
    }
    w.flush()?;
    Ok(())
}

/// Reads a detected-itineraries CSV back into itineraries, ordered by trip.
/// Every trip must satisfy the detected-itinerary invariants, and `time`
/// must agree with `seconds`.
pub fn parse_detected<R: Read>(input: R) -> Result<Vec<DetectedItinerary>, ParseError> {
    let mut reader = csv::Reader::from_reader(input);
    let mut trips: BTreeMap<usize, (usize, DetectedItinerary)> = BTreeMap::new();
    for (idx, row) in reader.deserialize::<DetectedRow>().enumerate() {
        // header is line 1
        let line = idx + 2;
        let row = row.map_err(|e| ParseError::Malformed { line, message: e.to_string() })?;
        non_empty(line, "line_code", &row.line_code)?;
        non_empty(line, "vehicle_id", &row.vehicle_id)?;
        non_empty(line, "stop_id", &row.stop_id)?;
        if !row.seconds.is_finite() || !(0.0..86_400.0).contains(&row.seconds) {
            return Err(ParseError::InvalidRecord { line, message: format!("seconds {}", row.seconds) });
        }
        if parse_hms(&row.time).is_none() || format_hms(row.seconds) != row.time.trim() {
            return Err(ParseError::BadTimestamp { line, value: row.time });
        }
        let entry = TimedStop { stop_id: row.stop_id, position: row.position, time: row.seconds, provenance: row.provenance };
        match trips.get_mut(&row.trip) {
            Some((_, d)) => {
                if (d.line_code.as_str(), d.direction.as_str(), d.vehicle_id.as_str(), d.day)
                    != (row.line_code.as_str(), row.direction.as_str(), row.vehicle_id.as_str(), row.day)
                {
                    return Err(ParseError::InvalidRecord {
                        line,
                        message: format!("trip {} changes identity", row.trip),
                    });
                }
                d.entries.push(entry);
            }
            None => {
                let d = DetectedItinerary {
                    line_code: row.line_code,
                    direction: row.direction,
                    vehicle_id: row.vehicle_id,
                    day: row.day,
                    entries: vec![entry],
                };
                trips.insert(row.trip, (line, d));
            }
        }
    }
    let mut out = Vec::with_capacity(trips.len());
    for (trip, (line, d)) in trips {
        d.check()
            .map_err(|message| ParseError::InvalidRecord { line, message: format!("trip {trip}: {message}") })?;
        out.push(d);
    }
    Ok(out)
}
