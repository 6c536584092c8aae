use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{fill_gaps, DetectedItinerary, Provenance};
use crate::error::{Error, Result};

/// Absolute error of one re-estimated stop time.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct InterpolationErrorSample {
    pub w: usize,
    pub err_seconds: f64,
}

fn require_observed(it: &DetectedItinerary) -> Result<()> {
    if it.entries.iter().any(|e| e.provenance != Provenance::Observed) {
        return Err(Error::InvalidArgument(format!(
            "itinerary {}/{} of {} contains interpolated entries",
            it.line_code, it.direction, it.vehicle_id
        )));
    }
    Ok(())
}

/// Deletes the given one-based positions from a fully observed itinerary,
/// re-estimates them and returns `(position, |true - estimate|)` per deleted stop.
pub fn errors_for_plan(full: &DetectedItinerary, deleted: &[usize]) -> Result<Vec<(usize, f64)>> {
    require_observed(full)?;
    let n = full.entries.len();
    if deleted.iter().any(|&p| p <= 1 || p >= n) {
        return Err(Error::InvalidArgument("only interior positions can be deleted".into()));
    }
    let times: Vec<Option<f64>> = full
        .entries
        .iter()
        .map(|e| (!deleted.contains(&e.position)).then_some(e.time))
        .collect();
    let est = fill_gaps(&times)?;
    let mut out: Vec<(usize, f64)> = deleted
        .iter()
        .map(|&p| (p, (full.entries[p - 1].time - est[p - 1].0).abs()))
        .collect();
    out.sort_by_key(|(p, _)| *p);
    out.dedup_by_key(|(p, _)| *p);
    Ok(out)
}

/// Fault-injection estimate of interpolation error for gap width `w`.
///
/// Every `(itinerary, k)` with anchors at positions `k` and `k + w` is an
/// eligible gap. `samples` of them are drawn without replacement; for each,
/// the `w - 1` interior stops are deleted, re-estimated from the anchors, and
/// one error sample per deleted stop is returned.
pub fn evaluate_interpolation_error(
    full: &[DetectedItinerary],
    w: usize,
    samples: usize,
    seed: u64,
) -> Result<Vec<InterpolationErrorSample>> {
    if w < 2 {
        return Err(Error::GapTooNarrow(w));
    }
    let mut eligible = Vec::new();
    for (idx, it) in full.iter().enumerate() {
        require_observed(it)?;
        let n = it.entries.len();
        if n > w {
            eligible.extend((0..n - w).map(|k| (idx, k)));
        }
    }
    if eligible.len() < samples {
        return Err(Error::InsufficientPositions { needed: samples, available: eligible.len() });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let picks = rand::seq::index::sample(&mut rng, eligible.len(), samples);
    let mut out = Vec::with_capacity(samples * (w - 1));
    for pick in picks.iter() {
        let (idx, k) = eligible[pick];
        let entries = &full[idx].entries;
        let est = super::interpolate_gap(entries[k].time, entries[k + w].time, w)?;
        for (i, t_hat) in est.into_iter().enumerate() {
            let truth = entries[k + 1 + i].time;
            out.push(InterpolationErrorSample { w, err_seconds: (truth - t_hat).abs() });
        }
    }
    Ok(out)
}
