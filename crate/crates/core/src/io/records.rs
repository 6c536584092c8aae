//! Newline-delimited JSON record files: lines, line points and vehicle fixes.
//!
//! One JSON object per line, UTF-8, blank lines ignored. Coordinates may be
//! given as JSON numbers or as decimal strings (a decimal comma is accepted).
//! Unknown fields are ignored so upstream exports with extra attributes load.

use std::collections::BTreeMap;
use std::io::{BufRead, Write};

use chrono::{NaiveDateTime, Timelike};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::error::ParseError;
use crate::geo::{haversine_distance, GeoPoint};
use crate::model::{BusLine, BusStop, GpsFix, ItineraryDef, ItineraryStop, LineCategory, StopType};

/// Timestamp layout of the fixes file.
pub const DTHR_FORMAT: &str = "%d/%m/%Y %H:%M:%S";

/// Two declarations of the same stop further apart than this are rejected.
const STOP_CONFLICT_M: f64 = 1.0;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub(super) enum Coord {
    Number(f64),
    Text(String),
}

impl Coord {
    pub(super) fn value(&self) -> Option<f64> {
        match self {
            Coord::Number(v) => Some(*v),
            Coord::Text(s) => s.trim().replace(',', ".").parse().ok(),
        }
    }
}

#[derive(Debug, Serialize, Deserialize)]
struct LineRecord {
    code: String,
    name: String,
    category: String,
    color: String,
}

#[derive(Debug, Serialize, Deserialize)]
struct PointRecord {
    stop_id: String,
    name: String,
    stop_type: String,
    lat: Coord,
    lon: Coord,
    line_code: String,
    direction: String,
    seq: u32,
}

#[derive(Debug, Serialize, Deserialize)]
struct FixRecord {
    vehicle_id: String,
    line_code: String,
    lat: Coord,
    lon: Coord,
    dthr: String,
}

/// Iterates `(line_number, record)` over the non-blank lines of `input`.
pub(super) fn records<T: DeserializeOwned, R: BufRead>(
    input: R,
) -> impl Iterator<Item = Result<(usize, T), ParseError>> {
    input.split(b'\n').enumerate().filter_map(|(idx, raw)| {
        let line = idx + 1;
        let raw = match raw {
            Ok(raw) => raw,
            Err(e) => return Some(Err(ParseError::Malformed { line, message: e.to_string() })),
        };
        let text = match std::str::from_utf8(&raw) {
            Ok(t) => t.trim(),
            Err(e) => return Some(Err(ParseError::Malformed { line, message: e.to_string() })),
        };
        if text.is_empty() {
            return None;
        }
        Some(
            serde_json::from_str::<T>(text)
                .map(|r| (line, r))
                .map_err(|e| ParseError::Malformed { line, message: e.to_string() }),
        )
    })
}

pub(super) fn non_empty(line: usize, field: &'static str, value: &str) -> Result<(), ParseError> {
    if value.trim().is_empty() {
        Err(ParseError::EmptyField { line, field })
    } else {
        Ok(())
    }
}

pub(super) fn point(line: usize, lat: &Coord, lon: &Coord) -> Result<GeoPoint, ParseError> {
    let (Some(lat), Some(lon)) = (lat.value(), lon.value()) else {
        return Err(ParseError::Malformed { line, message: "non-numeric coordinate".into() });
    };
    let p = GeoPoint::new(lat, lon);
    if !p.is_valid() {
        return Err(ParseError::CoordinateOutOfRange { line, lat, lon });
    }
    Ok(p)
}

pub fn parse_lines<R: BufRead>(input: R) -> Result<Vec<BusLine>, ParseError> {
    let mut out: Vec<BusLine> = Vec::new();
    let mut seen = std::collections::BTreeSet::new();
    for rec in records::<LineRecord, _>(input) {
        let (line, rec) = rec?;
        non_empty(line, "code", &rec.code)?;
        let category = LineCategory::from_label(&rec.category)
            .ok_or_else(|| ParseError::UnknownCategory { line, value: rec.category.clone() })?;
        if !seen.insert(rec.code.clone()) {
            return Err(ParseError::DuplicateLine { line, code: rec.code });
        }
        out.push(BusLine { code: rec.code, name: rec.name, category, color: rec.color });
    }
    Ok(out)
}

/// Parses the line-points file into the stop table and one itinerary per
/// `(line_code, direction)`.
///
/// Stops are deduplicated by id and returned sorted by id; itineraries are
/// returned sorted by `(line_code, direction)` with their stops ordered by
/// `seq`. An itinerary is circular when its first and last stop coincide.
pub fn parse_line_points<R: BufRead>(input: R) -> Result<(Vec<BusStop>, Vec<ItineraryDef>), ParseError> {
    let mut stops: BTreeMap<String, (usize, BusStop)> = BTreeMap::new();
    let mut routes: BTreeMap<(String, String), BTreeMap<u32, String>> = BTreeMap::new();
    for rec in records::<PointRecord, _>(input) {
        let (line, rec) = rec?;
        non_empty(line, "stop_id", &rec.stop_id)?;
        non_empty(line, "line_code", &rec.line_code)?;
        let position = point(line, &rec.lat, &rec.lon)?;
        let stop_type = StopType::from_label(&rec.stop_type)
            .ok_or_else(|| ParseError::UnknownStopType { line, value: rec.stop_type.clone() })?;
        match stops.get(&rec.stop_id) {
            Some((_, known)) => {
                let d = haversine_distance(known.position, position);
                if d > STOP_CONFLICT_M {
                    return Err(ParseError::ConflictingStop { line, stop_id: rec.stop_id, distance_m: d });
                }
            }
            None => {
                let stop = BusStop { stop_id: rec.stop_id.clone(), name: rec.name, stop_type, position };
                stops.insert(rec.stop_id.clone(), (line, stop));
            }
        }
        let seqs = routes.entry((rec.line_code.clone(), rec.direction.clone())).or_default();
        if seqs.insert(rec.seq, rec.stop_id).is_some() {
            return Err(ParseError::DuplicateSeq {
                line,
                line_code: rec.line_code,
                direction: rec.direction,
                seq: rec.seq,
            });
        }
    }
    let mut itineraries = Vec::with_capacity(routes.len());
    for ((line_code, direction), seqs) in routes {
        let stops: Vec<ItineraryStop> =
            seqs.into_iter().map(|(seq, stop_id)| ItineraryStop { seq, stop_id }).collect();
        let circular = stops.len() >= 2 && stops.first().map(|s| &s.stop_id) == stops.last().map(|s| &s.stop_id);
        let iti = ItineraryDef { line_code, direction, stops, circular };
        iti.check().map_err(|message| ParseError::InvalidItinerary {
            line_code: iti.line_code.clone(),
            direction: iti.direction.clone(),
            message,
        })?;
        itineraries.push(iti);
    }
    Ok((stops.into_values().map(|(_, s)| s).collect(), itineraries))
}

/// Parses the fixes file. The result is sorted by vehicle, line, day and
/// time; records identical in vehicle, line, timestamp and coordinates are
/// collapsed into one.
pub fn parse_vehicle_fixes<R: BufRead>(input: R) -> Result<Vec<GpsFix>, ParseError> {
    let mut out = Vec::new();
    for rec in records::<FixRecord, _>(input) {
        let (line, rec) = rec?;
        non_empty(line, "vehicle_id", &rec.vehicle_id)?;
        non_empty(line, "line_code", &rec.line_code)?;
        let position = point(line, &rec.lat, &rec.lon)?;
        let stamp = NaiveDateTime::parse_from_str(rec.dthr.trim(), DTHR_FORMAT)
            .map_err(|_| ParseError::BadTimestamp { line, value: rec.dthr.clone() })?;
        out.push(GpsFix {
            vehicle_id: rec.vehicle_id,
            line_code: rec.line_code,
            position,
            day: stamp.date(),
            time: stamp.num_seconds_from_midnight(),
        });
    }
    sort_fixes(&mut out);
    out.dedup();
    Ok(out)
}

pub(crate) fn sort_fixes(fixes: &mut [GpsFix]) {
    fixes.sort_by(|a, b| {
        (&a.vehicle_id, &a.line_code, a.day, a.time)
            .cmp(&(&b.vehicle_id, &b.line_code, b.day, b.time))
            .then(a.position.lat.total_cmp(&b.position.lat))
            .then(a.position.lon.total_cmp(&b.position.lon))
    });
}

pub(super) fn write_record<W: Write, T: Serialize>(out: &mut W, rec: &T) -> std::io::Result<()> {
    serde_json::to_writer(&mut *out, rec)?;
    out.write_all(b"\n")
}

pub fn write_lines<W: Write>(mut out: W, lines: &[BusLine]) -> std::io::Result<()> {
    for l in lines {
        let rec = LineRecord {
            code: l.code.clone(),
            name: l.name.clone(),
            category: l.category.as_str().to_string(),
            color: l.color.clone(),
        };
        write_record(&mut out, &rec)?;
    }
    Ok(())
}

/// Writes one record per itinerary position. Every referenced stop must be in `stops`.
pub fn write_line_points<W: Write>(
    mut out: W,
    stops: &[BusStop],
    itineraries: &[ItineraryDef],
) -> std::io::Result<()> {
    let by_id: BTreeMap<&str, &BusStop> = stops.iter().map(|s| (s.stop_id.as_str(), s)).collect();
    for iti in itineraries {
        for is in &iti.stops {
            let stop = by_id.get(is.stop_id.as_str()).ok_or_else(|| {
                std::io::Error::new(std::io::ErrorKind::InvalidInput, format!("unknown stop {}", is.stop_id))
            })?;
            let rec = PointRecord {
                stop_id: stop.stop_id.clone(),
                name: stop.name.clone(),
                stop_type: stop.stop_type.as_str().to_string(),
                lat: Coord::Number(stop.position.lat),
                lon: Coord::Number(stop.position.lon),
                line_code: iti.line_code.clone(),
                direction: iti.direction.clone(),
                seq: is.seq,
            };
            write_record(&mut out, &rec)?;
        }
    }
    Ok(())
}

pub fn format_dthr(fix: &GpsFix) -> String {
    let t = fix.time;
    format!(
        "{} {:02}:{:02}:{:02}",
        fix.day.format("%d/%m/%Y"),
        t / 3600,
        (t / 60) % 60,
        t % 60
    )
}

pub fn write_vehicle_fixes<W: Write>(mut out: W, fixes: &[GpsFix]) -> std::io::Result<()> {
    for f in fixes {
        let rec = FixRecord {
            vehicle_id: f.vehicle_id.clone(),
            line_code: f.line_code.clone(),
            lat: Coord::Number(f.position.lat),
            lon: Coord::Number(f.position.lon),
            dthr: format_dthr(f),
        };
        write_record(&mut out, &rec)?;
    }
    Ok(())
}
