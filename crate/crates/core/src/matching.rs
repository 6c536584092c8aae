//! Nearest-stop map matching and temporal sequencing of passage marks.

use std::collections::BTreeMap;

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geo::{haversine_distance, GeoPoint};
use crate::model::{BusStop, GpsFix, ItineraryDef};

pub const DEFAULT_ACCEPTANCE_RADIUS_M: f64 = 100.0;

/// A vehicle passage at an itinerary stop.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StopMark {
    pub stop_id: String,
    /// Smallest zero-based itinerary position holding `stop_id`.
    pub seq_hint: usize,
    /// Seconds of day.
    pub time: u32,
    pub distance_m: f64,
    pub vehicle_id: String,
    pub day: NaiveDate,
}

/// Resolved itinerary: one representative position per distinct stop.
struct Candidates<'a> {
    ids: Vec<&'a str>,
    positions: Vec<GeoPoint>,
    seq: Vec<usize>,
}

fn candidates<'a>(iti: &'a ItineraryDef, stops: &BTreeMap<String, BusStop>) -> Result<Candidates<'a>> {
    let mut c = Candidates { ids: Vec::new(), positions: Vec::new(), seq: Vec::new() };
    for (pos, id) in iti.stop_ids().enumerate() {
        let stop = stops.get(id).ok_or_else(|| Error::UnknownStop(id.to_string()))?;
        // repeated stops keep their first position so ties favour the earlier one
        if !c.ids.contains(&id) {
            c.ids.push(id);
            c.positions.push(stop.position);
            c.seq.push(pos);
        }
    }
    Ok(c)
}

/// Index of the nearest candidate and its distance. Ties go to the earlier position.
fn nearest(c: &Candidates<'_>, p: GeoPoint) -> (usize, f64) {
    let mut best = (0, f64::INFINITY);
    for (i, q) in c.positions.iter().enumerate() {
        let d = haversine_distance(p, *q);
        if d < best.1 {
            best = (i, d);
        }
    }
    best
}

/// Labels every fix with its nearest itinerary stop and emits one mark per
/// run of consecutive fixes sharing a label, at the run's closest fix,
/// provided that fix lies within `acceptance_radius_m`.
///
/// `fixes` must be sorted by time. Marks come out in fix-time order.
pub fn match_fixes(
    fixes: &[GpsFix],
    iti: &ItineraryDef,
    stops: &BTreeMap<String, BusStop>,
    acceptance_radius_m: f64,
) -> Result<Vec<StopMark>> {
    let cands = candidates(iti, stops)?;
    let mut marks = Vec::new();
    if fixes.is_empty() || cands.ids.is_empty() {
        return Ok(marks);
    }
    // (label, index of closest fix in run, its distance)
    let mut run: Option<(usize, usize, f64)> = None;
    let flush = |run: (usize, usize, f64), marks: &mut Vec<StopMark>| {
        let (label, fix_idx, d) = run;
        if d <= acceptance_radius_m {
            marks.push(StopMark {
                stop_id: cands.ids[label].to_string(),
                seq_hint: cands.seq[label],
                time: fixes[fix_idx].time,
                distance_m: d,
                vehicle_id: fixes[fix_idx].vehicle_id.clone(),
                day: fixes[fix_idx].day,
            });
        }
    };
    for (j, fix) in fixes.iter().enumerate() {
        let (label, d) = nearest(&cands, fix.position);
        run = match run {
            Some((l, best_j, best_d)) if l == label => {
                if d < best_d {
                    Some((l, j, d))
                } else {
                    Some((l, best_j, best_d))
                }
            }
            Some(prev) => {
                flush(prev, &mut marks);
                Some((label, j, d))
            }
            None => Some((label, j, d)),
        };
    }
    if let Some(prev) = run {
        flush(prev, &mut marks);
    }
    Ok(marks)
}

/// Stable ascending sort by time.
pub fn sequence_marks(mut marks: Vec<StopMark>) -> Vec<StopMark> {
    marks.sort_by_key(|m| m.time);
    marks
}
