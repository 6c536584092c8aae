//! Per-stop bus availability in sliding windows, category aggregation,
//! outlier stops and correlation between stop series.

use std::collections::{BTreeMap, BTreeSet};

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};

use crate::detection::DetectedItinerary;
use crate::model::{BusStop, StopType};
use crate::stats::{mean, pearson, quantile};

/// First window start, 05:00.
pub const SPAN_START_MIN: u32 = 5 * 60;
/// Windows end no later than 23:00.
pub const SPAN_END_MIN: u32 = 23 * 60;
pub const DEFAULT_WINDOW_MIN: u32 = 10;
pub const DEFAULT_WINDOW_SET: [u32; 8] = [10, 15, 20, 25, 30, 35, 40, 45];

/// A slice of the day, `[start_min, end_min)` in window-start minutes.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Period {
    pub label: String,
    pub start_min: u32,
    pub end_min: u32,
}

impl Period {
    pub fn new(label: &str, start_hour: u32, end_hour: u32) -> Self {
        Self { label: label.to_string(), start_min: start_hour * 60, end_min: end_hour * 60 }
    }

    /// Morning 06-09, midday 11-14, evening 17-20.
    pub fn defaults() -> Vec<Period> {
        vec![Period::new("MORNING", 6, 9), Period::new("MIDDAY", 11, 14), Period::new("EVENING", 17, 20)]
    }

    pub fn full_day() -> Period {
        Period { label: "FULL_DAY".into(), start_min: SPAN_START_MIN, end_min: SPAN_END_MIN }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AvailabilitySeries {
    /// Stop id, merged-terminal key or cluster id.
    pub key: String,
    pub day: NaiveDate,
    pub window_minutes: u32,
    /// `counts[i]` covers window start minute `SPAN_START_MIN + i`.
    pub counts: Vec<u32>,
}

/// Number of windows of width `w` minutes in the span.
pub fn series_len(w: u32) -> usize {
    (SPAN_END_MIN - SPAN_START_MIN + 1).saturating_sub(w) as usize
}

/// Counts passages in `[m, m + w)` minutes for every start minute `m` from
/// 05:00 to 23:00 - `w`. Passage times are seconds of day.
pub fn moving_window_counts(passages: &[f64], w: u32) -> Vec<u32> {
    let mut sorted: Vec<f64> = passages.to_vec();
    sorted.sort_by(f64::total_cmp);
    (0..series_len(w))
        .map(|i| {
            let lo = (SPAN_START_MIN as usize + i) as f64 * 60.0;
            let hi = lo + w as f64 * 60.0;
            let a = sorted.partition_point(|t| *t < lo);
            let b = sorted.partition_point(|t| *t < hi);
            (b - a) as u32
        })
        .collect()
}

/// One bus passing a stop.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Passage {
    pub vehicle_id: String,
    pub line_code: String,
    pub time: f64,
}

/// Passages per stop and day, taken from detected itineraries (observed and
/// interpolated entries alike).
#[derive(Debug, Clone, Default)]
pub struct PassageStore {
    by_stop: BTreeMap<String, BTreeMap<NaiveDate, Vec<Passage>>>,
    days: BTreeSet<NaiveDate>,
}

impl PassageStore {
    pub fn from_itineraries(itineraries: &[DetectedItinerary]) -> Self {
        let mut store = PassageStore::default();
        for it in itineraries {
            store.days.insert(it.day);
            for e in &it.entries {
                store
                    .by_stop
                    .entry(e.stop_id.clone())
                    .or_default()
                    .entry(it.day)
                    .or_default()
                    .push(Passage { vehicle_id: it.vehicle_id.clone(), line_code: it.line_code.clone(), time: e.time });
            }
        }
        // a circular trip's closing terminal passage is the next trip's opening one
        for days in store.by_stop.values_mut() {
            for ps in days.values_mut() {
                ps.sort_by(|a, b| a.time.total_cmp(&b.time).then_with(|| a.vehicle_id.cmp(&b.vehicle_id)));
                ps.dedup_by(|a, b| a.vehicle_id == b.vehicle_id && a.time == b.time);
            }
        }
        store
    }

    pub fn days(&self) -> &BTreeSet<NaiveDate> {
        &self.days
    }

    pub fn stops(&self) -> impl Iterator<Item = &str> {
        self.by_stop.keys().map(String::as_str)
    }

    pub fn passages(&self, stop_id: &str, day: NaiveDate) -> &[Passage] {
        self.by_stop.get(stop_id).and_then(|d| d.get(&day)).map(Vec::as_slice).unwrap_or(&[])
    }

    /// Distinct lines seen at any of `stop_ids`.
    pub fn lines_at<'a>(&'a self, stop_ids: impl IntoIterator<Item = &'a str>) -> BTreeSet<String> {
        let mut out = BTreeSet::new();
        for id in stop_ids {
            if let Some(days) = self.by_stop.get(id) {
                for p in days.values().flatten() {
                    out.insert(p.line_code.clone());
                }
            }
        }
        out
    }

    /// Union of passages at `stop_ids` on `day`; a vehicle seen at two
    /// members at the same instant counts once.
    pub fn union_times(&self, stop_ids: &[&str], day: NaiveDate) -> Vec<f64> {
        let mut events: Vec<(f64, &str)> = stop_ids
            .iter()
            .flat_map(|id| self.passages(id, day).iter().map(|p| (p.time, p.vehicle_id.as_str())))
            .collect();
        events.sort_by(|a, b| a.0.total_cmp(&b.0).then_with(|| a.1.cmp(b.1)));
        events.dedup();
        events.into_iter().map(|(t, _)| t).collect()
    }

    /// One series per day of the store for the union of `stop_ids`.
    pub fn series(&self, key: &str, stop_ids: &[&str], w: u32) -> Vec<AvailabilitySeries> {
        self.days
            .iter()
            .map(|&day| AvailabilitySeries {
                key: key.to_string(),
                day,
                window_minutes: w,
                counts: moving_window_counts(&self.union_times(stop_ids, day), w),
            })
            .collect()
    }
}

/// Availability units: every terminal name is one unit, other stops stand alone.
/// Returns unit key -> (category, member stop ids).
pub fn availability_units(stops: &BTreeMap<String, BusStop>) -> BTreeMap<String, (StopType, Vec<String>)> {
    let mut units: BTreeMap<String, (StopType, Vec<String>)> = BTreeMap::new();
    for s in stops.values() {
        let key = match s.stop_type {
            StopType::Terminal => format!("TERMINAL:{}", s.name),
            _ => s.stop_id.clone(),
        };
        units.entry(key).or_insert_with(|| (s.stop_type, Vec::new())).1.push(s.stop_id.clone());
    }
    units
}

/// Element-wise mean over days, giving one profile per series key.
pub fn mean_profile(series: &[AvailabilitySeries]) -> Vec<f64> {
    let Some(first) = series.first() else {
        return Vec::new();
    };
    let mut acc = vec![0.0; first.counts.len()];
    for s in series {
        for (a, c) in acc.iter_mut().zip(&s.counts) {
            *a += *c as f64;
        }
    }
    acc.iter_mut().for_each(|a| *a /= series.len() as f64);
    acc
}

/// Mean of all window counts across all days.
pub fn daily_average(series: &[AvailabilitySeries]) -> f64 {
    let all: Vec<f64> = series.iter().flat_map(|s| s.counts.iter().map(|c| *c as f64)).collect();
    mean(&all).unwrap_or(0.0)
}

/// Element-wise mean profile per category. Categories without members are
/// omitted with a warning.
pub fn aggregate_by_category(
    profiles: &BTreeMap<String, Vec<f64>>,
    categories: &BTreeMap<String, StopType>,
) -> BTreeMap<StopType, Vec<f64>> {
    let mut sums: BTreeMap<StopType, (Vec<f64>, usize)> = BTreeMap::new();
    for (key, profile) in profiles {
        let Some(cat) = categories.get(key) else {
            log::warn!("series {key} has no category");
            continue;
        };
        let entry = sums.entry(*cat).or_insert_with(|| (vec![0.0; profile.len()], 0));
        for (a, v) in entry.0.iter_mut().zip(profile) {
            *a += v;
        }
        entry.1 += 1;
    }
    for cat in StopType::ALL {
        if !sums.contains_key(&cat) {
            log::warn!("category {cat} has no series");
        }
    }
    sums.into_iter()
        .map(|(cat, (mut acc, n))| {
            acc.iter_mut().for_each(|a| *a /= n as f64);
            (cat, acc)
        })
        .collect()
}

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct OutlierReport {
    pub outliers: BTreeSet<String>,
    /// Upper fence `Q3 + 1.5 IQR` per evaluated category.
    pub fences: BTreeMap<StopType, f64>,
    /// Categories with fewer than four stops.
    pub skipped: Vec<StopType>,
}

/// Upper boxplot outliers per category. Terminals never appear in the result.
pub fn find_outlier_stops(
    averages: &BTreeMap<String, f64>,
    categories: &BTreeMap<String, StopType>,
) -> OutlierReport {
    let mut report = OutlierReport::default();
    let mut by_cat: BTreeMap<StopType, Vec<(&str, f64)>> = BTreeMap::new();
    for (id, avg) in averages {
        if let Some(cat) = categories.get(id) {
            by_cat.entry(*cat).or_default().push((id, *avg));
        }
    }
    for (cat, members) in by_cat {
        if cat == StopType::Terminal {
            continue;
        }
        if members.len() < 4 {
            log::warn!("category {cat} has {} stops; outlier rule skipped", members.len());
            report.skipped.push(cat);
            continue;
        }
        let values: Vec<f64> = members.iter().map(|m| m.1).collect();
        let q1 = quantile(&values, 0.25).unwrap_or(0.0);
        let q3 = quantile(&values, 0.75).unwrap_or(0.0);
        let fence = q3 + 1.5 * (q3 - q1);
        report.fences.insert(cat, fence);
        report.outliers.extend(members.iter().filter(|m| m.1 > fence).map(|m| m.0.to_string()));
    }
    report
}

/// Restricts a series (or a day-concatenated series) to a period.
pub fn restrict(counts: &[u32], period: &Period) -> Vec<f64> {
    counts
        .iter()
        .enumerate()
        .filter(|(i, _)| {
            let m = SPAN_START_MIN + *i as u32;
            m >= period.start_min && m < period.end_min
        })
        .map(|(_, c)| *c as f64)
        .collect()
}

/// Period-restricted values of all days of one key, concatenated in day order.
pub fn period_values(series: &[AvailabilitySeries], period: &Period) -> Vec<f64> {
    series.iter().flat_map(|s| restrict(&s.counts, period)).collect()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CorrelationMatrix {
    pub ids: Vec<String>,
    pub period: String,
    /// `None` marks an undefined coefficient (zero variance).
    pub values: Vec<Vec<Option<f64>>>,
}

/// Pairwise Pearson matrix. The diagonal is 1 for every series with
/// non-zero variance and undefined otherwise.
pub fn correlation_matrix(ids: &[String], vectors: &[Vec<f64>], period: &str) -> CorrelationMatrix {
    let n = ids.len();
    let mut values = vec![vec![None; n]; n];
    for i in 0..n {
        values[i][i] = pearson(&vectors[i], &vectors[i]).map(|_| 1.0);
        for j in i + 1..n {
            let r = pearson(&vectors[i], &vectors[j]);
            values[i][j] = r;
            values[j][i] = r;
        }
    }
    CorrelationMatrix { ids: ids.to_vec(), period: period.to_string(), values }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SyncEntry {
    pub period: String,
    pub window_minutes: u32,
    /// Mean over defined pairs, `None` if every pair was undefined.
    pub mean_r: Option<f64>,
    pub defined_pairs: usize,
    pub total_pairs: usize,
}

/// Mean pairwise correlation among the member stops of one cluster, for
/// every period and window width.
pub fn cluster_sync_profile(
    members: &[String],
    store: &PassageStore,
    periods: &[Period],
    windows: &[u32],
) -> Vec<SyncEntry> {
    let mut out = Vec::new();
    for &w in windows {
        let series: Vec<Vec<AvailabilitySeries>> =
            members.iter().map(|m| store.series(m, &[m.as_str()], w)).collect();
        for period in periods {
            let vectors: Vec<Vec<f64>> = series.iter().map(|s| period_values(s, period)).collect();
            let mut rs = Vec::new();
            let mut total = 0;
            for i in 0..vectors.len() {
                for j in i + 1..vectors.len() {
                    total += 1;
                    if let Some(r) = pearson(&vectors[i], &vectors[j]) {
                        rs.push(r);
                    }
                }
            }
            out.push(SyncEntry {
                period: period.label.clone(),
                window_minutes: w,
                mean_r: mean(&rs),
                defined_pairs: rs.len(),
                total_pairs: total,
            });
        }
    }
    out
}

/// Averages per-cluster profiles entry by entry, skipping undefined values.
pub fn average_profiles(profiles: &[Vec<SyncEntry>]) -> Vec<SyncEntry> {
    let mut acc: BTreeMap<(String, u32), (Vec<f64>, usize, usize)> = BTreeMap::new();
    let mut order = Vec::new();
    for profile in profiles {
        for e in profile {
            let key = (e.period.clone(), e.window_minutes);
            let slot = acc.entry(key.clone()).or_insert_with(|| {
                order.push(key);
                (Vec::new(), 0, 0)
            });
            if let Some(r) = e.mean_r {
                slot.0.push(r);
            }
            slot.1 += e.defined_pairs;
            slot.2 += e.total_pairs;
        }
    }
    order
        .into_iter()
        .map(|key| {
            let (rs, defined, total) = &acc[&key];
            SyncEntry { period: key.0, window_minutes: key.1, mean_r: mean(rs), defined_pairs: *defined, total_pairs: *total }
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::detection::{Provenance, TimedStop};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn brute(passages: &[f64], w: u32) -> Vec<u32> {
        let mut out = Vec::new();
        let mut m = SPAN_START_MIN;
        while m + w <= SPAN_END_MIN {
            let lo = m as f64 * 60.0;
            let hi = (m + w) as f64 * 60.0;
            out.push(passages.iter().filter(|t| **t >= lo && **t < hi).count() as u32);
            m += 1;
        }
        out
    }

    #[test]
    fn empty_day_is_all_zero() {
        let c = moving_window_counts(&[], 10);
        assert_eq!(c.len(), 18 * 60 - 10 + 1);
        assert!(c.iter().all(|v| *v == 0));
    }

    #[test]
    fn single_passage_half_open() {
        let t = (6 * 3600 + 30) as f64;
        let c = moving_window_counts(&[t], 10);
        for (i, v) in c.iter().enumerate() {
            let m = SPAN_START_MIN + i as u32;
            let expect = (5 * 60 + 51..=6 * 60).contains(&m) as u32;
            assert_eq!(*v, expect, "minute {m}");
        }
    }

    #[test]
    fn random_days_match_brute_force() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..20 {
            let ps: Vec<f64> = (0..50).map(|_| rng.random_range(0.0..86_400.0)).collect();
            let w = rng.random_range(1..60);
            assert_eq!(moving_window_counts(&ps, w), brute(&ps, w));
        }
    }

    #[test]
    fn windows_nest() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let ps: Vec<f64> = (0..80).map(|_| rng.random_range(18_000.0..83_000.0)).collect();
        let small = moving_window_counts(&ps, 10);
        let big = moving_window_counts(&ps, 25);
        for (i, b) in big.iter().enumerate() {
            assert!(*b >= small[i]);
        }
    }

    #[test]
    fn category_means() {
        let profiles = BTreeMap::from([
            ("a".to_string(), vec![2.0; 4]),
            ("b".to_string(), vec![4.0; 4]),
            ("t".to_string(), vec![1.0, 2.0, 3.0, 4.0]),
        ]);
        let cats = BTreeMap::from([
            ("a".to_string(), StopType::StreetStop),
            ("b".to_string(), StopType::StreetStop),
            ("t".to_string(), StopType::TubeStation),
        ]);
        let agg = aggregate_by_category(&profiles, &cats);
        assert_eq!(agg[&StopType::StreetStop], vec![3.0; 4]);
        assert_eq!(agg[&StopType::TubeStation], vec![1.0, 2.0, 3.0, 4.0]);
        assert!(!agg.contains_key(&StopType::Terminal));
    }

    #[test]
    fn five_stop_hand_oracle() {
        // street: s1..s3, tube: t1, t2; hand-computed column means
        let p = |v: [f64; 3]| v.to_vec();
        let profiles = BTreeMap::from([
            ("s1".to_string(), p([0.0, 3.0, 6.0])),
            ("s2".to_string(), p([1.0, 1.0, 1.0])),
            ("s3".to_string(), p([2.0, 5.0, 2.0])),
            ("t1".to_string(), p([4.0, 0.0, 8.0])),
            ("t2".to_string(), p([6.0, 2.0, 0.0])),
        ]);
        let cats: BTreeMap<String, StopType> = profiles
            .keys()
            .map(|k| (k.clone(), if k.starts_with('s') { StopType::StreetStop } else { StopType::TubeStation }))
            .collect();
        let agg = aggregate_by_category(&profiles, &cats);
        assert_eq!(agg[&StopType::StreetStop], vec![1.0, 3.0, 3.0]);
        assert_eq!(agg[&StopType::TubeStation], vec![5.0, 1.0, 4.0]);
    }

    #[test]
    fn daily_average_cases() {
        let s = |counts: Vec<u32>| AvailabilitySeries {
            key: "k".into(),
            day: NaiveDate::from_ymd_opt(2022, 11, 7).unwrap(),
            window_minutes: 10,
            counts,
        };
        assert_eq!(daily_average(&[s(vec![3; 10])]), 3.0);
        assert_eq!(daily_average(&[s(vec![0; 10])]), 0.0);
        let v: Vec<u32> = (0..100).map(|i| (i * 7 % 13) as u32).collect();
        let oracle = v.iter().map(|x| *x as f64).sum::<f64>() / 100.0;
        assert!((daily_average(&[s(v)]) - oracle).abs() < 1e-12);
    }

    #[test]
    fn outliers() {
        let avgs: BTreeMap<String, f64> =
            [("a", 1.0), ("b", 1.0), ("c", 1.0), ("d", 1.0), ("e", 10.0), ("T", 500.0), ("u", 2.0), ("v", 2.0), ("w", 2.0), ("x", 2.0)]
                .into_iter()
                .map(|(k, v)| (k.to_string(), v))
                .collect();
        let mut cats: BTreeMap<String, StopType> = avgs.keys().map(|k| (k.clone(), StopType::StreetStop)).collect();
        cats.insert("T".into(), StopType::Terminal);
        for k in ["u", "v", "w", "x"] {
            cats.insert(k.into(), StopType::TubeStation);
        }
        let r = find_outlier_stops(&avgs, &cats);
        assert_eq!(r.outliers, BTreeSet::from(["e".to_string()]));
        assert_eq!(r.fences[&StopType::TubeStation], 2.0);

        let few = BTreeMap::from([("a".to_string(), 1.0), ("b".to_string(), 9.0)]);
        let r = find_outlier_stops(&few, &cats);
        assert!(r.outliers.is_empty());
        assert_eq!(r.skipped, vec![StopType::StreetStop]);
    }

    #[test]
    fn matrix_shape() {
        let ids = vec!["a".to_string(), "b".to_string(), "c".to_string()];
        let vs = vec![vec![1.0, 2.0, 3.0, 5.0], vec![2.0, 1.0, 4.0, 4.0], vec![7.0; 4]];
        let m = correlation_matrix(&ids, &vs, "MORNING");
        for i in 0..3 {
            for j in 0..3 {
                assert_eq!(m.values[i][j], m.values[j][i]);
            }
        }
        assert_eq!(m.values[0][0], Some(1.0));
        assert_eq!(m.values[2][2], None);
        assert_eq!(m.values[0][2], None);
    }

    fn itinerary(vehicle: &str, stops: &[&str], start: f64, step: f64) -> DetectedItinerary {
        DetectedItinerary {
            line_code: format!("L{vehicle}"),
            direction: "A".into(),
            vehicle_id: vehicle.into(),
            day: NaiveDate::from_ymd_opt(2022, 11, 7).unwrap(),
            entries: stops
                .iter()
                .enumerate()
                .map(|(i, s)| TimedStop {
                    stop_id: s.to_string(),
                    position: i + 1,
                    time: start + step * i as f64,
                    provenance: Provenance::Observed,
                })
                .collect(),
        }
    }

    #[test]
    fn store_dedups_circular_terminal() {
        let a = itinerary("V", &["T", "x", "T"], 21_600.0, 600.0);
        let b = itinerary("V", &["T", "x", "T"], 22_800.0, 600.0);
        let store = PassageStore::from_itineraries(&[a, b]);
        let day = *store.days().iter().next().unwrap();
        assert_eq!(store.passages("T", day).len(), 3);
        assert_eq!(store.lines_at(["T"]), BTreeSet::from(["LV".to_string()]));
    }

    #[test]
    fn sync_profile_pairs_oracle() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let mut its = Vec::new();
        for v in 0..30 {
            let start = rng.random_range(19_000.0..80_000.0);
            its.push(itinerary(&format!("V{v}"), &["a", "b", "c"], start, rng.random_range(30.0..400.0)));
        }
        its.push(itinerary("X", &["a"], 25_000.0, 0.0));
        let store = PassageStore::from_itineraries(&its);
        let members = vec!["a".to_string(), "b".to_string(), "c".to_string()];
        let periods = Period::defaults();
        let profile = cluster_sync_profile(&members, &store, &periods, &[10, 20]);
        assert_eq!(profile.len(), 6);
        for e in &profile {
            let period = periods.iter().find(|p| p.label == e.period).unwrap();
            let v: Vec<Vec<f64>> = members
                .iter()
                .map(|m| period_values(&store.series(m, &[m], e.window_minutes), period))
                .collect();
            let rs: Vec<f64> =
                [(0, 1), (0, 2), (1, 2)].iter().filter_map(|&(i, j)| pearson(&v[i], &v[j])).collect();
            assert_eq!(e.total_pairs, 3);
            assert_eq!(e.defined_pairs, rs.len());
            assert_eq!(e.mean_r, mean(&rs));
        }
        let two = cluster_sync_profile(&members[..2], &store, &periods, &[10]);
        for e in &two {
            let period = periods.iter().find(|p| p.label == e.period).unwrap();
            let a = period_values(&store.series("a", &["a"], 10), period);
            let b = period_values(&store.series("b", &["b"], 10), period);
            assert_eq!(e.mean_r, pearson(&a, &b));
        }
    }

    #[test]
    fn identical_members_correlate_fully() {
        let its = vec![
            itinerary("V1", &["a"], 25_000.0, 0.0),
            itinerary("V2", &["b"], 25_000.0, 0.0),
            itinerary("V3", &["a"], 40_000.0, 0.0),
            itinerary("V4", &["b"], 40_000.0, 0.0),
            itinerary("V5", &["a"], 64_000.0, 0.0),
            itinerary("V6", &["b"], 64_000.0, 0.0),
        ];
        let store = PassageStore::from_itineraries(&its);
        let profile =
            cluster_sync_profile(&["a".into(), "b".into()], &store, &[Period::full_day()], &DEFAULT_WINDOW_SET);
        for e in profile {
            assert!((e.mean_r.unwrap() - 1.0).abs() < 1e-12);
        }
    }
}
