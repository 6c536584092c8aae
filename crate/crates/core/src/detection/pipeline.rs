//! Dataset-wide detection and tag accounting.

use std::collections::BTreeMap;
use std::ops::AddAssign;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{detect, segment_trips, DetectedItinerary, SegmentConfig};
use crate::error::Result;
use crate::matching::{match_fixes, sequence_marks, DEFAULT_ACCEPTANCE_RADIUS_M};
use crate::model::{BusStop, Dataset, GpsFix, ItineraryDef, LineCategory};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DetectionConfig {
    pub acceptance_radius_m: f64,
    pub segment: SegmentConfig,
}

impl Default for DetectionConfig {
    fn default() -> Self {
        Self { acceptance_radius_m: DEFAULT_ACCEPTANCE_RADIUS_M, segment: SegmentConfig::default() }
    }
}

/// Mark counters. All fields add, so per-group tallies fold in any order.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct TagTally {
    /// Every mark produced by map matching.
    pub total_marks: u64,
    /// Marks belonging to a segment that detected successfully.
    pub valid_tags: u64,
    /// Valid tags skipped by the monotone-time rule.
    pub out_of_order: u64,
    /// Positions filled by interpolation in accepted itineraries.
    pub missing: u64,
    pub accepted_segments: u64,
    pub rejected_segments: u64,
    pub discarded_segments: u64,
}

impl AddAssign for TagTally {
    fn add_assign(&mut self, o: Self) {
        self.total_marks += o.total_marks;
        self.valid_tags += o.valid_tags;
        self.out_of_order += o.out_of_order;
        self.missing += o.missing;
        self.accepted_segments += o.accepted_segments;
        self.rejected_segments += o.rejected_segments;
        self.discarded_segments += o.discarded_segments;
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct GroupOutcome {
    pub itineraries: Vec<DetectedItinerary>,
    pub tally: TagTally,
}

/// Map matching, sequencing, segmentation and detection for one vehicle's
/// fixes against one itinerary.
pub fn detect_group(
    fixes: &[GpsFix],
    iti: &ItineraryDef,
    stops: &BTreeMap<String, BusStop>,
    cfg: &DetectionConfig,
) -> Result<GroupOutcome> {
    let marks = sequence_marks(match_fixes(fixes, iti, stops, cfg.acceptance_radius_m)?);
    let seg = segment_trips(&marks, iti, &cfg.segment);
    let mut valid = vec![false; marks.len()];
    let mut used = vec![false; marks.len()];
    let mut out = GroupOutcome::default();
    out.tally.total_marks = marks.len() as u64;
    out.tally.discarded_segments = seg.discarded as u64;
    for indices in &seg.segments {
        let segment: Vec<_> = indices.iter().map(|&j| marks[j].clone()).collect();
        match detect(iti, &segment) {
            Ok(d) => {
                for &j in indices {
                    valid[j] = true;
                }
                for &k in &d.used_marks {
                    used[indices[k]] = true;
                }
                out.tally.accepted_segments += 1;
                out.tally.missing += d.itinerary.interpolated_count() as u64;
                out.itineraries.push(d.itinerary);
            }
            Err(_) => out.tally.rejected_segments += 1,
        }
    }
    out.tally.valid_tags = valid.iter().filter(|v| **v).count() as u64;
    out.tally.out_of_order = valid.iter().zip(&used).filter(|(v, u)| **v && !**u).count() as u64;
    Ok(out)
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct DetectionRun {
    pub itineraries: Vec<DetectedItinerary>,
    pub tallies: BTreeMap<LineCategory, TagTally>,
    /// Fix groups skipped because their line is unknown or has no itinerary.
    pub skipped_groups: usize,
}

/// Runs detection over every fix group against every itinerary of its line.
/// Groups run in parallel; output order follows the dataset's group order.
pub fn run_detection(dataset: &Dataset, cfg: &DetectionConfig) -> Result<DetectionRun> {
    let groups: Vec<_> = dataset.fixes.iter().collect();
    let results: Vec<Result<Option<(LineCategory, Vec<GroupOutcome>)>>> = groups
        .par_iter()
        .map(|(key, fixes)| {
            let Some(line) = dataset.lines.get(&key.line_code) else {
                return Ok(None);
            };
            let itis: Vec<&ItineraryDef> = dataset.itineraries_of(&key.line_code).collect();
            if itis.is_empty() {
                return Ok(None);
            }
            let outcomes = itis
                .into_iter()
                .map(|iti| detect_group(fixes, iti, &dataset.stops, cfg))
                .collect::<Result<Vec<_>>>()?;
            Ok(Some((line.category, outcomes)))
        })
        .collect();
    let mut run = DetectionRun::default();
    for r in results {
        match r? {
            Some((category, outcomes)) => {
                for o in outcomes {
                    *run.tallies.entry(category).or_default() += o.tally;
                    run.itineraries.extend(o.itineraries);
                }
            }
            None => run.skipped_groups += 1,
        }
    }
    if run.skipped_groups > 0 {
        log::warn!("{} fix groups skipped: line unknown or without itinerary", run.skipped_groups);
    }
    Ok(run)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TagRow {
    /// Category name, or `TOTAL`.
    pub label: String,
    pub tally: TagTally,
    /// Valid tags as a percentage of all map-matching marks.
    pub valid_pct: f64,
    /// Out-of-order plus missing, as a percentage of valid tags.
    pub error_pct: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TagReport {
    pub rows: Vec<TagRow>,
    pub total: TagRow,
}

fn row(label: &str, t: TagTally) -> TagRow {
    let pct = |num: u64, den: u64| if den == 0 { 0.0 } else { 100.0 * num as f64 / den as f64 };
    TagRow {
        label: label.to_string(),
        tally: t,
        valid_pct: pct(t.valid_tags, t.total_marks),
        error_pct: pct(t.out_of_order + t.missing, t.valid_tags),
    }
}

/// Per-category and total tag validity.
///
/// The percentage denominator counts every map-matching mark, including
/// marks of rejected and discarded segments.
pub fn tag_report(tallies: &BTreeMap<LineCategory, TagTally>) -> TagReport {
    let mut total = TagTally::default();
    let rows = tallies
        .iter()
        .map(|(c, t)| {
            total += *t;
            row(c.as_str(), *t)
        })
        .collect();
    TagReport { rows, total: row("TOTAL", total) }
}
