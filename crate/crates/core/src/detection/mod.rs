//! Itinerary detection: trip segmentation, the monotone-time association of
//! marks with itinerary positions, and interpolation of unobserved stops.

mod evaluation;
mod pipeline;

pub use evaluation::{errors_for_plan, evaluate_interpolation_error, InterpolationErrorSample};
pub use pipeline::{detect_group, run_detection, tag_report, DetectionConfig, DetectionRun, GroupOutcome, TagReport, TagRow, TagTally};

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matching::StopMark;
use crate::model::ItineraryDef;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Provenance {
    Observed,
    Interpolated,
}

impl Provenance {
    pub fn as_str(&self) -> &'static str {
        match self {
            Provenance::Observed => "OBSERVED",
            Provenance::Interpolated => "INTERPOLATED",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TimedStop {
    pub stop_id: String,
    /// One-based itinerary position.
    pub position: usize,
    /// Seconds of day; interpolated entries keep their fractional part.
    pub time: f64,
    pub provenance: Provenance,
}

/// A complete timed pass over an itinerary.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DetectedItinerary {
    pub line_code: String,
    pub direction: String,
    pub vehicle_id: String,
    pub day: NaiveDate,
    pub entries: Vec<TimedStop>,
}

impl DetectedItinerary {
    pub fn observed_count(&self) -> usize {
        self.entries.iter().filter(|e| e.provenance == Provenance::Observed).count()
    }

    pub fn interpolated_count(&self) -> usize {
        self.entries.len() - self.observed_count()
    }

    /// Checks: positions 1..n once each, strictly increasing times, observed endpoints.
    pub fn check(&self) -> std::result::Result<(), String> {
        for (i, e) in self.entries.iter().enumerate() {
            if e.position != i + 1 {
                return Err(format!("entry {i} has position {}", e.position));
            }
        }
        for w in self.entries.windows(2) {
            if w[1].time <= w[0].time {
                return Err(format!("time not increasing at position {}", w[1].position));
            }
        }
        match (self.entries.first(), self.entries.last()) {
            (Some(a), Some(b)) if a.provenance == Provenance::Observed && b.provenance == Provenance::Observed => Ok(()),
            _ => Err("endpoints must be observed".into()),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Rejection {
    MissingFirstStop,
    MissingLastStop,
    TooFewObserved,
}

/// Result of a successful detection plus the segment marks it consumed.
#[derive(Debug, Clone, PartialEq)]
pub struct Detection {
    pub itinerary: DetectedItinerary,
    /// Indices into the segment of the marks kept as observed passages.
    pub used_marks: Vec<usize>,
}

/// Times for the `w - 1` stops strictly between anchors `t_k` and `t_k_plus_w`,
/// spaced uniformly by `(t_k_plus_w - t_k) / w`.
pub fn interpolate_gap(t_k: f64, t_k_plus_w: f64, w: usize) -> Result<Vec<f64>> {
    if w < 2 {
        return Err(Error::GapTooNarrow(w));
    }
    let span = t_k_plus_w - t_k;
    if span.is_nan() || span <= 0.0 {
        return Err(Error::NonIncreasingAnchors { start: t_k, end: t_k_plus_w });
    }
    let step = span / w as f64;
    Ok((1..w).map(|i| t_k + step * i as f64).collect())
}

/// Fills every `None` between two known times. Both ends must be known.
pub(crate) fn fill_gaps(times: &[Option<f64>]) -> Result<Vec<(f64, Provenance)>> {
    let mut out = Vec::with_capacity(times.len());
    let mut last_anchor: Option<(usize, f64)> = None;
    for (i, t) in times.iter().enumerate() {
        if let Some(t) = *t {
            if let Some((k, tk)) = last_anchor {
                let w = i - k;
                if w >= 2 {
                    for est in interpolate_gap(tk, t, w)? {
                        out.push((est, Provenance::Interpolated));
                    }
                }
            } else if i > 0 {
                return Err(Error::InvalidArgument("first position has no anchor".into()));
            }
            out.push((t, Provenance::Observed));
            last_anchor = Some((i, t));
        }
    }
    if out.len() != times.len() {
        return Err(Error::InvalidArgument("last position has no anchor".into()));
    }
    Ok(out)
}

/// Associates a time-ordered trip segment with the itinerary.
///
/// For each position in order, the first mark at that position's stop whose
/// time is strictly later than the last accepted mark is taken. Marks that
/// would break time monotonicity (region-of-uncertainty hits) are thereby
/// skipped. Interior positions without a mark are interpolated; a missing
/// first or last position rejects the segment.
pub fn detect(iti: &ItineraryDef, segment: &[StopMark]) -> std::result::Result<Detection, Rejection> {
    let n = iti.len();
    let mut chosen: Vec<Option<usize>> = vec![None; n];
    let mut last_time: Option<u32> = None;
    // segment is sorted by time: every mark before the last accepted one is not later than it
    let mut start = 0;
    for (pos, slot) in chosen.iter_mut().enumerate() {
        let stop = iti.stop_at(pos);
        let hit = segment[start..]
            .iter()
            .position(|m| m.stop_id == stop && last_time.is_none_or(|lt| m.time > lt))
            .map(|off| start + off);
        if let Some(j) = hit {
            *slot = Some(j);
            last_time = Some(segment[j].time);
            start = j + 1;
        }
    }
    if chosen[0].is_none() {
        return Err(Rejection::MissingFirstStop);
    }
    if chosen[n - 1].is_none() {
        return Err(Rejection::MissingLastStop);
    }
    let used_marks: Vec<usize> = chosen.iter().flatten().copied().collect();
    if used_marks.len() < 2 {
        return Err(Rejection::TooFewObserved);
    }
    let times: Vec<Option<f64>> = chosen.iter().map(|c| c.map(|j| segment[j].time as f64)).collect();
    let filled = fill_gaps(&times).expect("anchors are observed and strictly increasing");
    let entries = filled
        .into_iter()
        .enumerate()
        .map(|(pos, (time, provenance))| TimedStop {
            stop_id: iti.stop_at(pos).to_string(),
            position: pos + 1,
            time,
            provenance,
        })
        .collect();
    let first = &segment[used_marks[0]];
    Ok(Detection {
        itinerary: DetectedItinerary {
            line_code: iti.line_code.clone(),
            direction: iti.direction.clone(),
            vehicle_id: first.vehicle_id.clone(),
            day: first.day,
            entries,
        },
        used_marks,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SegmentConfig {
    /// A silence longer than this (seconds) starts a new trip.
    pub idle_gap_s: u32,
    /// Fraction of the itinerary length a position must fall back by to count as a wrap.
    pub wrap_fraction: f64,
}

impl Default for SegmentConfig {
    fn default() -> Self {
        Self { idle_gap_s: 30 * 60, wrap_fraction: 0.5 }
    }
}

/// Marks split into candidate trips, as index lists into the input.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Segmentation {
    pub segments: Vec<Vec<usize>>,
    /// Segments dropped for covering fewer than two distinct positions.
    pub discarded: usize,
}

/// Splits a time-ordered mark list into trips.
///
/// A trip ends after an idle gap, or when the position falls back by more
/// than `wrap_fraction * n` below the running maximum. Isolated jumps are
/// filtered with a short lookahead: a forward jump whose next mark falls
/// straight back does not raise the running maximum, and a fall-back is only
/// a wrap if one of the next two marks moves forward from the new low
/// position (or the list ends). On
/// circular itineraries a wrapping mark at the closing terminal closes the
/// old trip and, unless nothing follows it, also opens the new one.
pub fn segment_trips(marks: &[StopMark], iti: &ItineraryDef, cfg: &SegmentConfig) -> Segmentation {
    let mut out = Segmentation::default();
    if marks.is_empty() || iti.is_empty() {
        return out;
    }
    let half = iti.len() as f64 * cfg.wrap_fraction;
    let closing_stop = iti.stop_at(iti.len() - 1);
    let close = |seg: Vec<usize>, out: &mut Segmentation| {
        let mut positions: Vec<usize> = seg.iter().map(|&j| marks[j].seq_hint).collect();
        positions.sort_unstable();
        positions.dedup();
        if positions.len() >= 2 {
            out.segments.push(seg);
        } else if !seg.is_empty() {
            out.discarded += 1;
        }
    };
    let within_gap = |a: &StopMark, b: &StopMark| b.time.saturating_sub(a.time) <= cfg.idle_gap_s;

    let mut current: Vec<usize> = vec![0];
    let mut max_pos = marks[0].seq_hint;
    for j in 1..marks.len() {
        let m = &marks[j];
        let prev = &marks[j - 1];
        let pos = m.seq_hint;
        if !within_gap(prev, m) {
            close(std::mem::take(&mut current), &mut out);
            current.push(j);
            max_pos = pos;
            continue;
        }
        let lookahead = |k: usize| marks.get(j + k).filter(|nx| within_gap(m, nx));
        if (max_pos as f64 - pos as f64) > half {
            // a real wrap is followed by progress from the new low position
            let resumes = |nx: &StopMark| nx.seq_hint > pos && (nx.seq_hint - pos) as f64 <= half;
            let confirmed = match (lookahead(1), lookahead(2)) {
                (None, _) => true,
                (Some(a), b) => resumes(a) || b.is_some_and(resumes),
            };
            if confirmed {
                let closing = iti.circular && m.stop_id == closing_stop;
                if closing {
                    current.push(j);
                }
                close(std::mem::take(&mut current), &mut out);
                if !closing || lookahead(1).is_some() {
                    current.push(j);
                }
                max_pos = pos;
            } else {
                current.push(j);
            }
            continue;
        }
        if pos > max_pos {
            let isolated = (pos - max_pos) as f64 > half
                && lookahead(1).is_some_and(|nx| (pos as f64 - nx.seq_hint as f64) > half);
            if !isolated {
                max_pos = pos;
            }
        }
        current.push(j);
    }
    close(current, &mut out);
    out
}
