//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits
//! non-zero when any hard criterion fails. Criterion 11 is advisory.

use std::collections::{BTreeMap, BTreeSet};
use std::fs;
use std::path::PathBuf;
use std::time::{Duration, Instant};

use busflow_core::analytics::{
    correlation_matrix, moving_window_counts, period_values, series_len, PassageStore, Period, SPAN_START_MIN,
};
use busflow_core::clustering::{build_candidates, cluster_stops, Cluster};
use busflow_core::detection::{
    evaluate_interpolation_error, run_detection, tag_report, DetectionConfig, Provenance, TagTally,
};
use busflow_core::io::{parse_line_points, parse_lines, parse_vehicle_fixes};
use busflow_core::matching::{match_fixes, sequence_marks};
use busflow_core::model::{format_hms, BusStop, Dataset, LineCategory};
use busflow_core::routing::{
    add_cluster_transfers, build_graph, evaluate_od, generate_od_pairs, nearest_stops, shortest_path,
    summarize_od, yen_k_shortest, OdPair, RouteConfig, TransitGraph, WeightedDigraph,
};
use busflow_core::stats::{median, pearson};
use busflow_core::synth::{
    bulk_day, jittered_loop_day, multi_line_day, pinched_corridors, uniform_loop_day, FaultRates, PinchedCorridors,
    VehiclePlan,
};
use busflow_core::{haversine_distance, GeoPoint};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Outcome = Result<String, String>;

const RADIUS_M: f64 = 600.0;

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn within(elapsed: Duration, limit: Duration) -> Result<(), String> {
    ensure(elapsed < limit, || format!("took {elapsed:?}, limit {limit:?}"))
}

// 1. Line 829 case study.

const EXPECTED_MARKS: [(&str, &str, usize); 9] = [
    ("Terminal Campo Comprido", "06:04:51", 1),
    ("R. Dep. Heitor Alencar Furtado, 4900", "06:14:08", 10),
    ("R. Angelo Nebosne, 75", "06:14:36", 2),
    ("R. Prof. Pedro Viriato Parigot de Souza, 5136", "06:16:43", 4),
    ("R. Carlos Müller, 331", "06:19:30", 6),
    ("R. Carlos Müller, 871", "06:21:06", 7),
    ("R. Dep. Heitor Alencar Furtado, 5181", "06:28:30", 9),
    ("R. Dep. Heitor Alencar Furtado, 4900", "06:29:06", 10),
    ("Terminal Campo Comprido", "06:31:41", 1),
];

const EXPECTED_TRIP: [(&str, &str, usize); 11] = [
    ("Terminal Campo Comprido", "06:04:51", 1),
    ("R. Angelo Nebosne, 75", "06:14:36", 2),
    ("R. Prof. Pedro Viriato Parigot de Souza, 4716", "06:15:39", 3),
    ("R. Prof. Pedro Viriato Parigot de Souza, 5136", "06:16:43", 4),
    ("R. Casemiro Augusto Rodacki, 233", "06:18:07", 5),
    ("R. Carlos Müller, 331", "06:19:30", 6),
    ("R. Carlos Müller, 871", "06:21:06", 7),
    ("R. Eduardo Sprada, 5273", "06:24:48", 8),
    ("R. Dep. Heitor Alencar Furtado, 5181", "06:28:30", 9),
    ("R. Dep. Heitor Alencar Furtado, 4900", "06:29:06", 10),
    ("Terminal Campo Comprido", "06:31:41", 11),
];

fn load_line_829() -> Dataset {
    let dir = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/data/line829");
    let read = |name: &str| fs::read(dir.join(name)).unwrap_or_else(|e| panic!("{name}: {e}"));
    let lines = parse_lines(read("lines.ndjson").as_slice()).expect("lines");
    let (stops, itineraries) = parse_line_points(read("line_points.ndjson").as_slice()).expect("points");
    let fixes = parse_vehicle_fixes(read("fixes.ndjson").as_slice()).expect("fixes");
    Dataset::new(lines, stops, itineraries, fixes)
}

fn criterion_1() -> Outcome {
    let start = Instant::now();
    let d = load_line_829();
    let iti = &d.itineraries[0];
    let fixes = d.fixes.values().next().ok_or("no fixes")?;
    let marks = sequence_marks(match_fixes(fixes, iti, &d.stops, 100.0).map_err(|e| e.to_string())?);
    let got3: Vec<(String, String, usize)> =
        marks.iter().map(|m| (d.stops[&m.stop_id].name.clone(), format_hms(m.time as f64), m.seq_hint + 1)).collect();
    let want3: Vec<(String, String, usize)> =
        EXPECTED_MARKS.iter().map(|(n, t, s)| (n.to_string(), t.to_string(), *s)).collect();
    ensure(got3 == want3, || format!("marks differ: {got3:?}"))?;

    let run = run_detection(&d, &DetectionConfig::default()).map_err(|e| e.to_string())?;
    let det = run.itineraries.iter().find(|i| i.vehicle_id == "BA020").ok_or("BA020 not detected")?;
    ensure(det.entries.len() == 11, || format!("{} positions", det.entries.len()))?;
    ensure(!det.entries.iter().any(|e| format_hms(e.time) == "06:14:08"), || "spurious 06:14:08 mark kept".into())?;
    let interpolated: Vec<usize> =
        det.entries.iter().filter(|e| e.provenance == Provenance::Interpolated).map(|e| e.position).collect();
    ensure(interpolated == [3, 5, 8], || format!("interpolated positions {interpolated:?}"))?;
    let mut mismatches = Vec::new();
    for (e, (name, time, pos)) in det.entries.iter().zip(EXPECTED_TRIP) {
        let got = (d.stops[&e.stop_id].name.as_str(), format_hms(e.time), e.position);
        if got != (name, time.to_string(), pos) {
            mismatches.push(format!("position {pos}: got {} ({}), expected {time}", got.1, e.time));
        }
    }
    within(start.elapsed(), Duration::from_secs(1))?;
    ensure(mismatches.is_empty(), || mismatches.join("; "))?;
    Ok("11 rows equal the expected trip".into())
}

// 2. Interpolation is exact under uniform motion.

fn criterion_2() -> Outcome {
    let start = Instant::now();
    let (scenario, _, _) = uniform_loop_day(3, 8);
    let run = run_detection(&scenario.dataset(), &DetectionConfig::default()).map_err(|e| e.to_string())?;
    ensure(run.itineraries.len() == 24, || format!("{} trips detected", run.itineraries.len()))?;
    let mut n = 0;
    for w in 2..=8 {
        let samples = evaluate_interpolation_error(&run.itineraries, w, 100, 20 + w as u64).map_err(|e| e.to_string())?;
        ensure(samples.len() == 100 * (w - 1), || format!("w={w}: {} samples", samples.len()))?;
        if let Some(s) = samples.iter().find(|s| s.err_seconds != 0.0) {
            return Err(format!("w={w}: err {} s", s.err_seconds));
        }
        n += samples.len();
    }
    within(start.elapsed(), Duration::from_secs(5))?;
    Ok(format!("{n} errors all exactly 0"))
}

// 3. Median error grows with the gap width on a jittered line.

fn criterion_3() -> Outcome {
    let (scenario, _, _) = jittered_loop_day(4, 12, 7);
    let run = run_detection(&scenario.dataset(), &DetectionConfig::default()).map_err(|e| e.to_string())?;
    let mut medians = Vec::new();
    for w in 2..=8 {
        let samples = evaluate_interpolation_error(&run.itineraries, w, 100, 300 + w as u64).map_err(|e| e.to_string())?;
        let errs: Vec<f64> = samples.iter().map(|s| s.err_seconds).collect();
        medians.push(median(&errs).ok_or("no samples")?);
    }
    let shown: Vec<String> = medians.iter().map(|m| format!("{m:.1}")).collect();
    ensure(medians.windows(2).all(|p| p[0] <= p[1]), || format!("medians not monotone: {shown:?}"))?;
    Ok(format!("medians {}", shown.join(" <= ")))
}

// 4. Tag report against a count derived from the injected faults.

fn expected_tally(plan: &VehiclePlan, corners: usize) -> TagTally {
    let events = plan.legs.len() + 1;
    let laps = plan.laps(corners);
    let dropped = |e: usize| plan.dropped.contains(&e);
    let accepted: Vec<bool> = (0..laps).map(|l| !dropped(l * corners) && !dropped((l + 1) * corners)).collect();
    let in_accepted = |e: usize| {
        let before = e.checked_sub(1).map(|p| p / corners);
        let lap = e / corners;
        if e.is_multiple_of(corners) {
            (lap < laps && accepted[lap]) || before.is_some_and(|b| accepted[b])
        } else {
            accepted[lap]
        }
    };
    let mut t = TagTally { total_marks: (events - plan.dropped.len() + plan.spurious.len()) as u64, ..Default::default() };
    for e in 0..events {
        if !dropped(e) && in_accepted(e) {
            t.valid_tags += 1;
        }
        if dropped(e) && e % corners != 0 && accepted[e / corners] {
            t.missing += 1;
        }
    }
    for &(after, _) in &plan.spurious {
        if accepted[after / corners] {
            t.valid_tags += 1;
            t.out_of_order += 1;
        }
    }
    t.accepted_segments = accepted.iter().filter(|a| **a).count() as u64;
    t
}

fn criterion_4() -> Outcome {
    let rates = FaultRates { gap: 0.08, spurious: 0.05, anchor: 0.06 };
    let cats = [LineCategory::Alimentador, LineCategory::Troncal, LineCategory::Expresso];
    let (scenario, lines) = multi_line_day(&cats, 2, 3, 6, rates, 2022);
    let run = run_detection(&scenario.dataset(), &DetectionConfig::default()).map_err(|e| e.to_string())?;
    let mut want: BTreeMap<LineCategory, TagTally> = BTreeMap::new();
    for (line, plans) in &lines {
        for p in plans {
            let t = expected_tally(p, line.corners);
            let e = want.entry(line.line.category).or_default();
            e.total_marks += t.total_marks;
            e.valid_tags += t.valid_tags;
            e.out_of_order += t.out_of_order;
            e.missing += t.missing;
            e.accepted_segments += t.accepted_segments;
        }
    }
    let report = tag_report(&run.tallies);
    for row in &report.rows {
        let cat = LineCategory::from_label(&row.label).ok_or("bad label")?;
        let w = want.get(&cat).ok_or("unexpected category")?;
        let g = row.tally;
        let got = (g.total_marks, g.valid_tags, g.out_of_order, g.missing, g.accepted_segments);
        let exp = (w.total_marks, w.valid_tags, w.out_of_order, w.missing, w.accepted_segments);
        ensure(got == exp, || format!("{}: got {got:?}, counted {exp:?}", row.label))?;
        let pct = 100.0 * w.valid_tags as f64 / w.total_marks as f64;
        ensure((row.valid_pct - pct).abs() <= 1e-9, || format!("{}: {}% vs {pct}%", row.label, row.valid_pct))?;
    }
    ensure(report.rows.len() == cats.len(), || format!("{} rows", report.rows.len()))?;
    let t = report.total.tally;
    ensure(t.out_of_order > 0 && t.missing > 0 && t.rejected_segments > 0, || format!("faults not exercised: {t:?}"))?;
    Ok(format!(
        "{} marks, {:.2}% valid, {} out of order, {} missing",
        t.total_marks, report.total.valid_pct, t.out_of_order, t.missing
    ))
}

// 5. Moving windows against a double loop.

fn criterion_5() -> Outcome {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for case in 0..200 {
        let w: u32 = rng.random_range(1..=60);
        let n = rng.random_range(0..120);
        let times: Vec<f64> = (0..n)
            .map(|_| {
                if rng.random_bool(0.3) {
                    60.0 * rng.random_range(280..1400) as f64
                } else {
                    rng.random_range(16_000.0..85_000.0)
                }
            })
            .collect();
        let mut sorted = times.clone();
        sorted.sort_by(f64::total_cmp);
        let got = moving_window_counts(&sorted, w);
        let want: Vec<u32> = (0..series_len(w))
            .map(|i| {
                let m = (SPAN_START_MIN as usize + i) as f64 * 60.0;
                times.iter().filter(|&&t| m <= t && t < m + 60.0 * w as f64).count() as u32
            })
            .collect();
        ensure(got == want, || format!("fixture {case} (W={w}) differs"))?;
    }
    within(start.elapsed(), Duration::from_secs(5))?;
    Ok("200 fixtures identical".into())
}

// 6. Pearson closed forms and matrix shape.

fn criterion_6() -> Outcome {
    let x = [1.0, 2.0, 3.0, 4.0, 5.0, 6.0];
    let y = [2.0, 1.0, 4.0, 3.0, 6.0, 5.0];
    let cases: [(&[f64], Vec<f64>, f64); 4] = [
        (&x, y.to_vec(), 29.0 / 35.0),
        (&x, x.iter().map(|v| 2.0 * v + 3.0).collect(), 1.0),
        (&x, x.iter().map(|v| -v).collect(), -1.0),
        // sum dx*dy = 10, sum dx^2 = 10, sum dy^2 = 14 for y = [1, 4, 2, 5, 3, 6] - 0
        (&[0.0, 1.0, 2.0, 3.0, 4.0], vec![2.0, 1.0, 4.0, 3.0, 5.0], 8.0 / 10.0),
    ];
    for (a, b, want) in &cases {
        let r = pearson(a, b).ok_or("undefined")?;
        ensure((r - want).abs() <= 1e-12, || format!("r = {r}, closed form {want}"))?;
    }
    ensure(pearson(&x, &[3.0; 6]).is_none(), || "constant series not flagged".into())?;

    let rates = FaultRates { gap: 0.05, spurious: 0.0, anchor: 0.0 };
    let (scenario, _) = multi_line_day(&[LineCategory::Convencional], 3, 3, 8, rates, 6);
    let run = run_detection(&scenario.dataset(), &DetectionConfig::default()).map_err(|e| e.to_string())?;
    let store = PassageStore::from_itineraries(&run.itineraries);
    let ids: Vec<String> = store.stops().map(str::to_string).collect();
    let mut periods = Period::defaults();
    periods.push(Period::full_day());
    // add a silent stop so undefined entries appear
    let mut ids_ext = ids.clone();
    ids_ext.push("SILENT".into());
    let (mut matrices, mut undefined) = (0, 0);
    for period in &periods {
        let vectors: Vec<Vec<f64>> = ids_ext
            .iter()
            .map(|id| period_values(&store.series(id, &[id.as_str()], 10), period))
            .collect();
        let m = correlation_matrix(&ids_ext, &vectors, &period.label);
        for i in 0..ids_ext.len() {
            let flat = vectors[i].iter().all(|v| *v == vectors[i][0]);
            match m.values[i][i] {
                Some(v) => ensure(v == 1.0 && !flat, || format!("{} diagonal {v}", ids_ext[i]))?,
                None => ensure(flat, || format!("{} diagonal undefined", ids_ext[i]))?,
            }
            for j in 0..ids_ext.len() {
                ensure(m.values[i][j] == m.values[j][i], || format!("asymmetric at {i},{j}"))?;
                match m.values[i][j] {
                    Some(v) => ensure((-1.0..=1.0).contains(&v), || format!("r = {v}"))?,
                    None => undefined += 1,
                }
            }
        }
        matrices += 1;
    }
    ensure(undefined > 0, || "no undefined entries exercised".into())?;
    Ok(format!("closed forms within 1e-12; {matrices} matrices symmetric, {undefined} undefined entries flagged"))
}

// 7. Clustering against a literal step-through of the greedy algorithm.

fn literal_clustering(
    candidates: &[(String, f64)],
    stops: &BTreeMap<String, BusStop>,
) -> Vec<(String, BTreeSet<String>)> {
    // descending by average, ties by id, via repeated selection
    let mut pool = candidates.to_vec();
    let mut ordered = Vec::new();
    while !pool.is_empty() {
        let mut best = 0;
        for i in 1..pool.len() {
            let (a, b) = (&pool[i], &pool[best]);
            if a.1 > b.1 || (a.1 == b.1 && a.0 < b.0) {
                best = i;
            }
        }
        ordered.push(pool.remove(best).0);
    }
    let mut out = Vec::new();
    while !ordered.is_empty() {
        let centroid = ordered[0].clone();
        let c = stops[&centroid].position;
        let mut cluster = BTreeSet::from([centroid.clone()]);
        for b in stops.values() {
            if haversine_distance(c, b.position) <= RADIUS_M {
                cluster.insert(b.stop_id.clone());
            }
        }
        ordered.retain(|s| !cluster.contains(s));
        out.push((centroid, cluster));
    }
    out
}

fn criterion_7() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(77);
    let origin = GeoPoint::new(-25.44, -49.27);
    let mut total_clusters = 0;
    for case in 0..100 {
        let n = rng.random_range(1..=50);
        let extent = rng.random_range(500.0..4000.0);
        let stops: BTreeMap<String, BusStop> = (0..n)
            .map(|i| {
                let id = format!("S{i:02}");
                let p = origin.offset(rng.random_range(0.0..extent), rng.random_range(0.0..extent));
                (id.clone(), BusStop { name: id.clone(), stop_id: id, stop_type: busflow_core::model::StopType::StreetStop, position: p })
            })
            .collect();
        let mut cand: Vec<(String, f64)> = Vec::new();
        for id in stops.keys() {
            if rng.random_bool(0.4) {
                cand.push((id.clone(), rng.random_range(0..6) as f64 * 0.5));
            }
        }
        let list = build_candidates(
            &cand.iter().map(|c| c.0.clone()).collect(),
            &cand.iter().cloned().collect(),
        )
        .map_err(|e| e.to_string())?;
        let clusters: Vec<Cluster> = cluster_stops(&list, &stops, RADIUS_M).map_err(|e| e.to_string())?;
        let got: Vec<(String, BTreeSet<String>)> = clusters
            .iter()
            .map(|c| (c.centroid_stop_id.clone(), c.members.iter().cloned().collect()))
            .collect();
        let want = literal_clustering(&cand, &stops);
        ensure(got == want, || format!("instance {case} differs from the step-through"))?;
        for c in &clusters {
            let p = stops[&c.centroid_stop_id].position;
            for m in &c.members {
                let d = haversine_distance(p, stops[m].position);
                ensure(d <= RADIUS_M, || format!("instance {case}: {m} at {d} m"))?;
            }
        }
        // every candidate is absorbed by exactly one cluster
        let cand_ids: BTreeSet<&str> = cand.iter().map(|c| c.0.as_str()).collect();
        let mut absorbed: BTreeMap<&str, usize> = BTreeMap::new();
        for c in &clusters {
            ensure(c.absorbed.contains(&c.centroid_stop_id), || format!("instance {case}: centroid not absorbed"))?;
            for m in &c.absorbed {
                ensure(c.members.contains(m), || format!("instance {case}: absorbed {m} outside cluster"))?;
                *absorbed.entry(m.as_str()).or_default() += 1;
            }
        }
        ensure(absorbed.keys().copied().collect::<BTreeSet<_>>() == cand_ids, || format!("instance {case}: candidates not covered"))?;
        ensure(absorbed.values().all(|n| *n == 1), || format!("instance {case}: candidate absorbed twice"))?;
        if let (Some(first), Some(top)) = (clusters.first(), list.0.first()) {
            ensure(first.centroid_stop_id == top.stop_id, || format!("instance {case}: first centroid not the maximum"))?;
        }
        total_clusters += clusters.len();
    }
    Ok(format!("100 instances match, {total_clusters} clusters checked"))
}

// 8. Yen against exhaustive enumeration.

fn all_simple_paths(g: &WeightedDigraph, s: usize, t: usize) -> Vec<(f64, Vec<usize>)> {
    fn walk(
        g: &WeightedDigraph,
        u: usize,
        t: usize,
        visited: &mut Vec<bool>,
        edges: &mut Vec<usize>,
        out: &mut Vec<(f64, Vec<usize>)>,
    ) {
        if u == t {
            let cost = edges.iter().fold(0.0, |acc, e| acc + g.edges()[*e].2);
            out.push((cost, edges.clone()));
            return;
        }
        for (id, &(from, to, _)) in g.edges().iter().enumerate() {
            if from == u && !visited[to] {
                visited[to] = true;
                edges.push(id);
                walk(g, to, t, visited, edges, out);
                edges.pop();
                visited[to] = false;
            }
        }
    }
    let mut visited = vec![false; g.edges().iter().map(|e| e.0.max(e.1) + 1).max().unwrap_or(0).max(s + 1).max(t + 1)];
    visited[s] = true;
    let mut out = Vec::new();
    walk(g, s, t, &mut visited, &mut Vec::new(), &mut out);
    out.sort_by(|a, b| a.0.total_cmp(&b.0));
    out
}

fn bellman_ford(g: &WeightedDigraph, n: usize, s: usize, t: usize) -> Option<f64> {
    let mut dist = vec![f64::INFINITY; n];
    dist[s] = 0.0;
    for _ in 0..n {
        for &(u, v, w) in g.edges() {
            if dist[u] + w < dist[v] {
                dist[v] = dist[u] + w;
            }
        }
    }
    dist[t].is_finite().then_some(dist[t])
}

fn criterion_8() -> Outcome {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(88);
    let (mut compared, mut truncated) = (0, 0);
    for case in 0..100 {
        let n = rng.random_range(2..=10);
        let density = rng.random_range(0.15..0.6);
        let mut g = WeightedDigraph::new(n);
        for u in 0..n {
            for v in 0..n {
                if u != v && rng.random_bool(density) {
                    g.add_edge(u, v, rng.random_range(0.5..10.0));
                    if rng.random_bool(0.05) {
                        g.add_edge(u, v, rng.random_range(0.5..10.0));
                    }
                }
            }
        }
        let (s, t) = (0, n - 1);
        let got = yen_k_shortest(&g, s, t, 30);
        let all = all_simple_paths(&g, s, t);
        let want: Vec<&(f64, Vec<usize>)> = all.iter().take(30).collect();
        ensure(got.len() == want.len(), || format!("graph {case}: {} paths, enumeration {}", got.len(), want.len()))?;
        for (i, (p, (cost, edges))) in got.iter().zip(&want).enumerate() {
            ensure(p.edges == *edges, || format!("graph {case}: path {i} differs"))?;
            ensure((p.cost - cost).abs() <= 1e-9, || format!("graph {case}: path {i} cost {} vs {cost}", p.cost))?;
            let distinct: BTreeSet<usize> = p.nodes.iter().copied().collect();
            ensure(distinct.len() == p.nodes.len(), || format!("graph {case}: path {i} has a loop"))?;
        }
        let first = yen_k_shortest(&g, s, t, 1);
        let single = shortest_path(&g, s, t, &vec![false; n], &Default::default());
        match (first.first(), single, bellman_ford(&g, n, s, t)) {
            (None, None, None) => {}
            (Some(a), Some(b), Some(d)) => {
                ensure(first.len() == 1 && a.edges == b.edges, || format!("graph {case}: K=1 differs from shortest path"))?;
                ensure((a.cost - d).abs() <= 1e-9, || format!("graph {case}: K=1 cost {} vs {d}", a.cost))?;
            }
            other => return Err(format!("graph {case}: reachability disagrees {:?}", other.2)),
        }
        compared += got.len();
        truncated += usize::from(all.len() > 30);
    }
    within(start.elapsed(), Duration::from_secs(10))?;
    Ok(format!("{compared} paths over 100 graphs equal enumeration ({truncated} capped at K=30)"))
}

// 9 and 10. Routing on the pinched corridor fixture.

fn corridor_networks(f: &PinchedCorridors, centroids: &[(&str, f64)]) -> Result<(TransitGraph, TransitGraph, Vec<Cluster>), String> {
    let stops: BTreeMap<String, BusStop> = f.scenario.stops.iter().map(|s| (s.stop_id.clone(), s.clone())).collect();
    let list = build_candidates(
        &centroids.iter().map(|c| c.0.to_string()).collect(),
        &centroids.iter().map(|c| (c.0.to_string(), c.1)).collect(),
    )
    .map_err(|e| e.to_string())?;
    let clusters = cluster_stops(&list, &stops, RADIUS_M).map_err(|e| e.to_string())?;
    let base = build_graph(&f.scenario.itineraries, &stops).map_err(|e| e.to_string())?;
    let mut clustered = base.clone();
    add_cluster_transfers(&mut clustered, &clusters);
    Ok((base, clustered, clusters))
}

fn stop_table(f: &PinchedCorridors) -> BTreeMap<String, BusStop> {
    f.scenario.stops.iter().map(|s| (s.stop_id.clone(), s.clone())).collect()
}

fn criterion_9() -> Outcome {
    let f = pinched_corridors();
    let stops = stop_table(&f);
    let cfg = RouteConfig::default();
    let mut checked = 0;
    let mut infeasible = 0;
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let every: Vec<(String, f64)> = stops.keys().map(|k| (k.clone(), rng.random_range(0..8) as f64)).collect();
    let every: Vec<(&str, f64)> = every.iter().map(|(k, v)| (k.as_str(), *v)).collect();
    let pinch = [(f.west[f.pinch].as_str(), 2.0), (f.east[f.pinch].as_str(), 1.0)];
    for (variant, centroids) in [("pinch", &pinch[..]), ("dense", &every[..])] {
        let (base, clustered, _) = corridor_networks(&f, centroids)?;
        let pairs = generate_od_pairs(&stops, 1000, 400.0, 90);
        for o in evaluate_od(&pairs, &base, &clustered, &stops, &cfg) {
            match (o.base.distance_m(), o.clustered.distance_m()) {
                (Some(b), Some(c)) => ensure(c <= b, || format!("{variant} {}: clustered {c} > base {b}", o.od_id))?,
                (None, None) => infeasible += 1,
                (None, Some(_)) => infeasible += 1,
                (Some(_), None) => return Err(format!("{variant} {}: feasible only without clusters", o.od_id)),
            }
            checked += 1;
        }
    }
    Ok(format!("{checked} pairs, 0 violations ({infeasible} infeasible on one network)"))
}

fn floyd(g: &TransitGraph) -> Vec<Vec<f64>> {
    let n = g.nodes().len();
    let mut d = vec![vec![f64::INFINITY; n]; n];
    for (i, row) in d.iter_mut().enumerate() {
        row[i] = 0.0;
    }
    for e in g.edges() {
        d[e.from][e.to] = d[e.from][e.to].min(e.length_m);
    }
    for k in 0..n {
        for i in 0..n {
            if d[i][k].is_infinite() {
                continue;
            }
            for j in 0..n {
                let via = d[i][k] + d[k][j];
                if via < d[i][j] {
                    d[i][j] = via;
                }
            }
        }
    }
    d
}

fn oracle_distance(g: &TransitGraph, d: &[Vec<f64>], p: &OdPair, stops: &BTreeMap<String, BusStop>) -> Option<f64> {
    let from = nearest_stops(p.origin, stops, RADIUS_M);
    let to = nearest_stops(p.destination, stops, RADIUS_M);
    let mut best = f64::INFINITY;
    for (a, wa) in &from {
        for (b, wb) in &to {
            let (na, nb) = (g.stop_node(&a.stop_id)?, g.stop_node(&b.stop_id)?);
            best = best.min(wa + d[na][nb] + wb);
        }
    }
    best.is_finite().then_some(best)
}

fn criterion_10() -> Outcome {
    let f = pinched_corridors();
    let stops = stop_table(&f);
    let pinch = [(f.west[f.pinch].as_str(), 2.0), (f.east[f.pinch].as_str(), 1.0)];
    let (base, clustered, clusters) = corridor_networks(&f, &pinch)?;
    ensure(clusters.len() == 1 && clusters[0].members.len() == 2, || format!("clusters {clusters:?}"))?;
    let arms = [5, 6, 7, 11, 12, 13];
    let mut pairs = Vec::new();
    for &i in &arms {
        for &j in &arms {
            let o = stops[&f.west[i]].position.offset(-80.0, 0.0);
            let d = stops[&f.east[j]].position.offset(80.0, 0.0);
            pairs.push(OdPair { od_id: format!("W{i}-E{j}"), origin: o, destination: d });
        }
    }
    let outcomes = evaluate_od(&pairs, &base, &clustered, &stops, &RouteConfig::default());
    let (fb, fc) = (floyd(&base), floyd(&clustered));
    for (p, o) in pairs.iter().zip(&outcomes) {
        for (label, g, d, r) in [("base", &base, &fb, &o.base), ("clustered", &clustered, &fc, &o.clustered)] {
            let want = oracle_distance(g, d, p, &stops).ok_or_else(|| format!("{} unreachable", p.od_id))?;
            let got = r.distance_m().ok_or_else(|| format!("{} {label} infeasible", p.od_id))?;
            ensure((got - want).abs() <= 1e-6 * want.max(1.0), || format!("{} {label}: {got} vs oracle {want}", p.od_id))?;
        }
    }
    let [b, c] = summarize_od(&outcomes);
    let (bd, cd) = (b.mean_distance_m.ok_or("no base mean")?, c.mean_distance_m.ok_or("no clustered mean")?);
    let (bt, ct) = (b.mean_transfers.ok_or("no base transfers")?, c.mean_transfers.ok_or("no clustered transfers")?);
    let reduction = 1.0 - cd / bd;
    ensure(reduction >= 0.30, || format!("distance reduced by {:.1}% only", 100.0 * reduction))?;
    ensure(ct > bt, || format!("transfers {bt} -> {ct} did not increase"))?;
    Ok(format!(
        "mean distance {:.0} m -> {:.0} m (-{:.1}%), mean transfers {bt:.2} -> {ct:.2}, Floyd oracle agrees",
        bd,
        cd,
        100.0 * reduction
    ))
}

// 11. Throughput (advisory).

fn criterion_11() -> Outcome {
    let scenario = bulk_day(1_000_000, 11);
    let n = scenario.fixes.len();
    let dataset = scenario.dataset();
    let start = Instant::now();
    let run = run_detection(&dataset, &DetectionConfig::default()).map_err(|e| e.to_string())?;
    let elapsed = start.elapsed();
    let msg = format!("{n} fixes -> {} trips in {:.2?}", run.itineraries.len(), elapsed);
    if elapsed > Duration::from_secs(30) {
        Err(msg)
    } else {
        Ok(msg)
    }
}

fn main() {
    // the libtest harness is off; answer `--list` so tooling can enumerate
    if std::env::args().any(|a| a == "--list") {
        println!("acceptance: test");
        return;
    }
    let criteria: [(u32, &str, fn() -> Outcome, bool); 11] = [
        (1, "case-study exactness", criterion_1, true),
        (2, "interpolation oracle", criterion_2, true),
        (3, "error growth", criterion_3, true),
        (4, "tag report", criterion_4, true),
        (5, "moving-window oracle", criterion_5, true),
        (6, "correlation correctness", criterion_6, true),
        (7, "clustering oracle", criterion_7, true),
        (8, "yen correctness", criterion_8, true),
        (9, "superset dominance", criterion_9, true),
        (10, "directional reproduction", criterion_10, true),
        (11, "throughput", criterion_11, false),
    ];
    let mut failed = Vec::new();
    for (id, name, run, hard) in criteria {
        let result = std::panic::catch_unwind(run).unwrap_or_else(|_| Err("panicked".into()));
        match result {
            Ok(detail) => println!("criterion {id:>2} PASS  {name}: {detail}"),
            Err(detail) if hard => {
                println!("criterion {id:>2} FAIL  {name}: {detail}");
                failed.push(id);
            }
            Err(detail) => println!("criterion {id:>2} WARN  {name}: {detail}"),
        }
    }
    if !failed.is_empty() {
        println!("failed criteria: {failed:?}");
        std::process::exit(1);
    }
}
