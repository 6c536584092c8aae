//! Stage wiring: ingestion, detection, analytics, clustering and routing.

use std::collections::{BTreeMap, BTreeSet};
use std::fs;
use std::path::{Path, PathBuf};

use busflow_core::analytics::{
    aggregate_by_category, availability_units, average_profiles, cluster_sync_profile, correlation_matrix,
    daily_average, find_outlier_stops, mean_profile, period_values, OutlierReport, PassageStore, Period, SyncEntry,
    SPAN_START_MIN,
};
use busflow_core::clustering::{build_candidates, cluster_stats, cluster_stops, coverage, Cluster};
use busflow_core::detection::{
    evaluate_interpolation_error, run_detection, tag_report, DetectedItinerary, Provenance, TagRow,
};
use busflow_core::io::{
    parse_clusters, parse_line_points, parse_lines, parse_od_pairs, parse_vehicle_fixes, write_clusters,
    write_detected, write_od_pairs,
};
use busflow_core::model::{Dataset, StopType};
use busflow_core::routing::{
    add_cluster_transfers, build_graph, evaluate_od, generate_od_pairs, summarize_od, OdPair, PathSummary,
};
use busflow_core::stats::{median, quantile};
use busflow_core::{Error, GeoPoint};
use clap::ValueEnum;
use rayon::prelude::*;
use serde::Serialize;

use crate::config::PipelineConfig;
use crate::error::CliError;
use crate::output::{Artifacts, FileDigest, Manifest};

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Command {
    /// Dataset consistency report
    Validate,
    /// Detected itineraries and tag report
    Detect,
    /// Availability series, outlier stops and correlations
    Analyze,
    /// Stop clusters and their statistics
    Cluster,
    /// Origin-destination evaluation on base and clustered networks
    Route,
    /// Every stage
    All,
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::Validate => "validate",
            Command::Detect => "detect",
            Command::Analyze => "analyze",
            Command::Cluster => "cluster",
            Command::Route => "route",
            Command::All => "all",
        }
    }
}

pub const CLUSTERS: &str = "clusters.ndjson";

pub struct Pipeline<'a> {
    cfg: &'a PipelineConfig,
    /// Directory relative input paths resolve against.
    base: PathBuf,
    out_dir: PathBuf,
    inputs: Vec<FileDigest>,
    artifacts: Artifacts,
}

struct Analysis {
    store: PassageStore,
    averages: BTreeMap<String, f64>,
    outliers: OutlierReport,
}

fn hhmm(minute: u32) -> String {
    format!("{:02}:{:02}", minute / 60, minute % 60)
}

impl<'a> Pipeline<'a> {
    pub fn new(cfg: &'a PipelineConfig, base: PathBuf, out_dir: PathBuf) -> Self {
        Self {
            cfg,
            base,
            out_dir,
            inputs: Vec::new(),
            artifacts: Artifacts::default(),
        }
    }

    /// Runs `command` and writes its artifacts. Returns the artifact count.
    pub fn run(mut self, command: Command) -> Result<usize, CliError> {
        let emit = |c: Command| command == c || command == Command::All;
        let ds = self.dataset()?;
        if emit(Command::Validate) {
            self.validate(&ds)?;
        }
        if command != Command::Validate && command != Command::Route {
            let detected = self.stage(emit(Command::Detect), |p| p.detect(&ds))?;
            if command != Command::Detect {
                let analysis = self.stage(emit(Command::Analyze), |p| p.analyze(&ds, &detected))?;
                if command != Command::Analyze {
                    let clusters = self.stage(emit(Command::Cluster), |p| p.cluster(&ds, &analysis))?;
                    if command == Command::All {
                        self.route(&ds, &clusters)?;
                    }
                }
            }
        }
        if command == Command::Route {
            let clusters = self.stored_clusters()?;
            self.route(&ds, &clusters)?;
        }
        let manifest = Manifest {
            tool: env!("CARGO_PKG_NAME"),
            version: env!("CARGO_PKG_VERSION"),
            command: command.name(),
            seed: self.cfg.seed,
            config: self.cfg,
            inputs: &self.inputs,
            artifacts: Vec::new(),
        };
        self.artifacts.commit(&self.out_dir, manifest)
    }

    /// Runs an upstream stage, discarding its artifacts unless `emit`.
    fn stage<T>(&mut self, emit: bool, f: impl FnOnce(&mut Self) -> Result<T, CliError>) -> Result<T, CliError> {
        if emit {
            return f(self);
        }
        let kept = std::mem::take(&mut self.artifacts);
        let out = f(self);
        self.artifacts = kept;
        out
    }

    fn read_input(&mut self, key: &str, path: Option<&Path>) -> Result<(PathBuf, Vec<u8>), CliError> {
        let rel = path.ok_or_else(|| CliError::config(Path::new(key), format!("input path `{key}` is not set")))?;
        let full = self.base.join(rel);
        let data = fs::read(&full).map_err(|e| CliError::input(&full, e))?;
        self.inputs.push(FileDigest::of(&rel.display().to_string(), &data));
        Ok((full, data))
    }

    fn dataset(&mut self) -> Result<Dataset, CliError> {
        let cfg = self.cfg;
        let (path, data) = self.read_input("lines", cfg.lines.as_deref())?;
        let lines = parse_lines(data.as_slice()).map_err(|source| CliError::Parse { path, source })?;
        let (path, data) = self.read_input("line_points", cfg.line_points.as_deref())?;
        let (stops, itineraries) =
            parse_line_points(data.as_slice()).map_err(|source| CliError::Parse { path, source })?;
        let (path, data) = self.read_input("fixes", cfg.fixes.as_deref())?;
        let fixes = parse_vehicle_fixes(data.as_slice()).map_err(|source| CliError::Parse { path, source })?;
        log::info!(
            "loaded {} lines, {} stops, {} itineraries, {} fixes",
            lines.len(),
            stops.len(),
            itineraries.len(),
            fixes.len()
        );
        Ok(Dataset::new(lines, stops, itineraries, fixes))
    }

    fn validate(&mut self, ds: &Dataset) -> Result<(), CliError> {
        #[derive(Serialize)]
        struct Summary<'r> {
            consistent: bool,
            lines: usize,
            stops: usize,
            itineraries: usize,
            fix_groups: usize,
            fixes: usize,
            report: &'r busflow_core::model::ValidationReport,
        }
        let report = ds.validate();
        if !report.is_empty() {
            log::warn!("dataset has consistency problems, see validation.json");
        }
        let summary = Summary {
            consistent: report.is_empty(),
            lines: ds.lines.len(),
            stops: ds.stops.len(),
            itineraries: ds.itineraries.len(),
            fix_groups: ds.fixes.len(),
            fixes: ds.fixes.values().map(Vec::len).sum(),
            report: &report,
        };
        self.artifacts.add_json("validation.json", &summary)
    }

    fn detect(&mut self, ds: &Dataset) -> Result<Vec<DetectedItinerary>, CliError> {
        let run = run_detection(ds, &self.cfg.detection())?;
        log::info!("detected {} itineraries", run.itineraries.len());
        let mut buf = Vec::new();
        write_detected(&mut buf, &run.itineraries)?;
        self.artifacts.add("detected_itineraries.csv", buf);

        #[derive(Serialize, Default)]
        struct TagLine<'r> {
            category: &'r str,
            total_marks: u64,
            valid_tags: u64,
            valid_pct: f64,
            out_of_order: u64,
            missing: u64,
            error_pct: f64,
            accepted_segments: u64,
            rejected_segments: u64,
            discarded_segments: u64,
        }
        fn line(r: &TagRow) -> TagLine<'_> {
            TagLine {
                category: &r.label,
                total_marks: r.tally.total_marks,
                valid_tags: r.tally.valid_tags,
                valid_pct: r.valid_pct,
                out_of_order: r.tally.out_of_order,
                missing: r.tally.missing,
                error_pct: r.error_pct,
                accepted_segments: r.tally.accepted_segments,
                rejected_segments: r.tally.rejected_segments,
                discarded_segments: r.tally.discarded_segments,
            }
        }
        let report = tag_report(&run.tallies);
        let rows: Vec<TagLine> = report.rows.iter().chain([&report.total]).map(line).collect();
        self.artifacts.add_csv("tag_report.csv", rows)?;

        self.interpolation_error(&run.itineraries)?;
        Ok(run.itineraries)
    }

    /// Re-estimates deleted stops of fully observed itineraries.
    fn interpolation_error(&mut self, detected: &[DetectedItinerary]) -> Result<(), CliError> {
        #[derive(Serialize, Default)]
        struct Sample {
            w: usize,
            err_seconds: f64,
        }
        #[derive(Serialize, Default)]
        struct Summary {
            w: usize,
            samples: usize,
            q1_seconds: Option<f64>,
            median_seconds: Option<f64>,
            q3_seconds: Option<f64>,
            max_seconds: Option<f64>,
        }
        let full: Vec<DetectedItinerary> = detected
            .iter()
            .filter(|it| it.entries.iter().all(|e| e.provenance == Provenance::Observed))
            .cloned()
            .collect();
        let mut samples = Vec::new();
        let mut summary = Vec::new();
        for &w in &self.cfg.error_gap_widths {
            let seed = self.cfg.seed.wrapping_add(w as u64);
            let errs = match evaluate_interpolation_error(&full, w, self.cfg.error_samples, seed) {
                Ok(e) => e,
                Err(Error::InsufficientPositions { needed, available }) => {
                    log::warn!("interpolation error for w={w} skipped: {available} eligible gaps, {needed} needed");
                    Vec::new()
                }
                Err(e) => return Err(e.into()),
            };
            let xs: Vec<f64> = errs.iter().map(|e| e.err_seconds).collect();
            summary.push(Summary {
                w,
                samples: xs.len(),
                q1_seconds: quantile(&xs, 0.25),
                median_seconds: median(&xs),
                q3_seconds: quantile(&xs, 0.75),
                max_seconds: xs.iter().copied().reduce(f64::max),
            });
            samples.extend(errs.into_iter().map(|e| Sample {
                w: e.w,
                err_seconds: e.err_seconds,
            }));
        }
        self.artifacts.add_csv("interpolation_error.csv", samples)?;
        self.artifacts.add_csv("interpolation_error_summary.csv", summary)
    }

    fn analyze(&mut self, ds: &Dataset, detected: &[DetectedItinerary]) -> Result<Analysis, CliError> {
        let w = self.cfg.window_minutes;
        let store = PassageStore::from_itineraries(detected);
        let units: Vec<(String, (StopType, Vec<String>))> = availability_units(&ds.stops).into_iter().collect();
        let computed: Vec<(f64, Vec<f64>)> = units
            .par_iter()
            .map(|(key, (_, ids))| {
                let ids: Vec<&str> = ids.iter().map(String::as_str).collect();
                let series = store.series(key, &ids, w);
                (daily_average(&series), mean_profile(&series))
            })
            .collect();
        let categories: BTreeMap<String, StopType> = units.iter().map(|(k, (c, _))| (k.clone(), *c)).collect();
        let averages: BTreeMap<String, f64> = units
            .iter()
            .zip(&computed)
            .map(|((k, _), (a, _))| (k.clone(), *a))
            .collect();
        let profiles: BTreeMap<String, Vec<f64>> = units
            .iter()
            .zip(&computed)
            .map(|((k, _), (_, p))| (k.clone(), p.clone()))
            .collect();
        let outliers = find_outlier_stops(&averages, &categories);
        log::info!(
            "{} availability units, {} outlier stops",
            units.len(),
            outliers.outliers.len()
        );

        #[derive(Serialize, Default)]
        struct SeriesRow {
            category: &'static str,
            window_start: String,
            mean_buses: f64,
        }
        let by_cat = aggregate_by_category(&profiles, &categories);
        let rows = by_cat.iter().flat_map(|(cat, profile)| {
            profile.iter().enumerate().map(|(i, v)| SeriesRow {
                category: cat.as_str(),
                window_start: hhmm(SPAN_START_MIN + i as u32),
                mean_buses: *v,
            })
        });
        self.artifacts.add_csv("category_series.csv", rows)?;

        #[derive(Serialize, Default)]
        struct StopRow<'r> {
            unit: &'r str,
            category: &'static str,
            members: String,
            lat: f64,
            lon: f64,
            avg_buses: f64,
            outlier: bool,
        }
        let rows = units.iter().map(|(key, (cat, ids))| {
            let pts: Vec<GeoPoint> = ids.iter().map(|id| ds.stops[id].position).collect();
            let n = pts.len() as f64;
            StopRow {
                unit: key,
                category: cat.as_str(),
                members: ids.join(" "),
                lat: pts.iter().map(|p| p.lat).sum::<f64>() / n,
                lon: pts.iter().map(|p| p.lon).sum::<f64>() / n,
                avg_buses: averages[key],
                outlier: outliers.outliers.contains(key),
            }
        });
        self.artifacts.add_csv("stop_averages.csv", rows)?;

        #[derive(Serialize, Default)]
        struct FenceRow {
            category: &'static str,
            units: usize,
            upper_fence: Option<f64>,
            outliers: usize,
        }
        let rows = StopType::ALL
            .into_iter()
            .filter(|c| *c != StopType::Terminal)
            .map(|cat| FenceRow {
                category: cat.as_str(),
                units: categories.values().filter(|c| **c == cat).count(),
                upper_fence: outliers.fences.get(&cat).copied(),
                outliers: outliers
                    .outliers
                    .iter()
                    .filter(|id| categories.get(*id) == Some(&cat))
                    .count(),
            });
        self.artifacts.add_csv("outlier_fences.csv", rows)?;

        self.correlations(&store, &outliers.outliers)?;
        Ok(Analysis {
            store,
            averages,
            outliers,
        })
    }

    /// Pairwise correlation among the outlier stops, per period and over the full day.
    fn correlations(&mut self, store: &PassageStore, stops: &BTreeSet<String>) -> Result<(), CliError> {
        #[derive(Serialize, Default)]
        struct Row<'r> {
            period: &'r str,
            stop_a: &'r str,
            stop_b: &'r str,
            r: Option<f64>,
        }
        let ids: Vec<String> = stops.iter().cloned().collect();
        let series: Vec<_> = ids
            .iter()
            .map(|id| store.series(id, &[id.as_str()], self.cfg.window_minutes))
            .collect();
        let mut periods = self.cfg.periods();
        periods.push(Period::full_day());
        let matrices: Vec<_> = periods
            .iter()
            .map(|p| {
                let vectors: Vec<Vec<f64>> = series.iter().map(|s| period_values(s, p)).collect();
                correlation_matrix(&ids, &vectors, &p.label)
            })
            .collect();
        let mut rows = Vec::new();
        for m in &matrices {
            for i in 0..m.ids.len() {
                for j in i..m.ids.len() {
                    rows.push(Row {
                        period: &m.period,
                        stop_a: &m.ids[i],
                        stop_b: &m.ids[j],
                        r: m.values[i][j],
                    });
                }
            }
        }
        self.artifacts.add_csv("correlations.csv", rows)
    }

    fn cluster(&mut self, ds: &Dataset, analysis: &Analysis) -> Result<Vec<Cluster>, CliError> {
        let candidates = build_candidates(&analysis.outliers.outliers, &analysis.averages)?;
        let mut clusters = cluster_stops(&candidates, &ds.stops, self.cfg.cluster_radius_m)?;
        let scatter = cluster_stats(&mut clusters, &analysis.store, self.cfg.window_minutes);
        log::info!("{} candidates formed {} clusters", candidates.len(), clusters.len());

        let mut buf = Vec::new();
        write_clusters(&mut buf, &clusters).map_err(|e| CliError::output(Path::new(CLUSTERS), e))?;
        self.artifacts.add(CLUSTERS, buf);

        #[derive(Serialize, Default)]
        struct StatRow<'r> {
            cluster_id: &'r str,
            centroid_stop_id: &'r str,
            members: usize,
            shared_members: usize,
            lines_served: usize,
            avg_buses: f64,
        }
        let rows = clusters.iter().map(|c| StatRow {
            cluster_id: &c.cluster_id,
            centroid_stop_id: &c.centroid_stop_id,
            members: c.members.len(),
            shared_members: c.shared_members.len(),
            lines_served: c.lines_served.len(),
            avg_buses: c.avg_buses,
        });
        self.artifacts.add_csv("cluster_stats.csv", rows)?;

        #[derive(Serialize, Default)]
        struct SummaryRow {
            candidates: usize,
            clusters: usize,
            distinct_stops: usize,
            total_memberships: usize,
            lines_vs_buses_r: Option<f64>,
            p_value: Option<f64>,
        }
        let cov = coverage(&clusters);
        let row = SummaryRow {
            candidates: candidates.len(),
            clusters: cov.clusters,
            distinct_stops: cov.distinct_stops,
            total_memberships: cov.total_memberships,
            lines_vs_buses_r: scatter.r,
            p_value: scatter.p_value,
        };
        self.artifacts.add_csv("cluster_summary.csv", [row])?;

        #[derive(Serialize, Default)]
        struct SyncRow<'r> {
            scope: &'r str,
            period: &'r str,
            window_minutes: u32,
            mean_r: Option<f64>,
            defined_pairs: usize,
            total_pairs: usize,
        }
        let periods = self.cfg.periods();
        let profiles: Vec<Vec<SyncEntry>> = clusters
            .par_iter()
            .map(|c| cluster_sync_profile(&c.members, &analysis.store, &periods, &self.cfg.window_set))
            .collect();
        let overall = average_profiles(&profiles);
        let scoped = clusters
            .iter()
            .map(|c| c.cluster_id.as_str())
            .zip(&profiles)
            .chain([("ALL", &overall)]);
        let rows = scoped.flat_map(|(scope, entries)| {
            entries.iter().map(move |e| SyncRow {
                scope,
                period: &e.period,
                window_minutes: e.window_minutes,
                mean_r: e.mean_r,
                defined_pairs: e.defined_pairs,
                total_pairs: e.total_pairs,
            })
        });
        self.artifacts.add_csv("sync_profiles.csv", rows)?;
        Ok(clusters)
    }

    fn stored_clusters(&mut self) -> Result<Vec<Cluster>, CliError> {
        let path = self.out_dir.join(CLUSTERS);
        let data = match fs::read(&path) {
            Ok(d) => d,
            Err(e) if e.kind() == std::io::ErrorKind::NotFound => {
                return Err(CliError::MissingDependency {
                    path,
                    producer: "cluster",
                });
            }
            Err(e) => return Err(CliError::input(&path, e)),
        };
        self.inputs.push(FileDigest::of(CLUSTERS, &data));
        parse_clusters(data.as_slice()).map_err(|source| CliError::Parse { path, source })
    }

    fn od_pairs(&mut self, ds: &Dataset) -> Result<Vec<OdPair>, CliError> {
        if let Some(rel) = self.cfg.od_pairs.clone() {
            let (path, data) = self.read_input("od_pairs", Some(&rel))?;
            return parse_od_pairs(data.as_slice()).map_err(|source| CliError::Parse { path, source });
        }
        let pairs = generate_od_pairs(&ds.stops, self.cfg.od_count, self.cfg.od_jitter_m, self.cfg.seed);
        let mut buf = Vec::new();
        write_od_pairs(&mut buf, &pairs).map_err(|e| CliError::output(Path::new("od_pairs.ndjson"), e))?;
        self.artifacts.add("od_pairs.ndjson", buf);
        Ok(pairs)
    }

    fn route(&mut self, ds: &Dataset, clusters: &[Cluster]) -> Result<(), CliError> {
        let pairs = self.od_pairs(ds)?;
        let base = build_graph(&ds.itineraries, &ds.stops)?;
        let mut clustered = base.clone();
        let walks = add_cluster_transfers(&mut clustered, clusters);
        log::info!("routing {} OD pairs, {} cluster walking edges", pairs.len(), walks);
        let outcomes = evaluate_od(&pairs, &base, &clustered, &ds.stops, &self.cfg.route());

        #[derive(Serialize, Default)]
        struct PathRow<'r> {
            od_id: &'r str,
            network: &'static str,
            rank: usize,
            distance_m: f64,
            transfers: usize,
            access_m: f64,
            walk_m: f64,
            lines: String,
            stops: String,
        }
        #[derive(Serialize, Default)]
        struct ResultRow<'r> {
            od_id: &'r str,
            network: &'static str,
            feasible: bool,
            alternatives: usize,
            distance_m: Option<f64>,
            transfers: Option<usize>,
            access_m: Option<f64>,
            walk_m: Option<f64>,
            lines: String,
        }
        let mut results = Vec::new();
        let mut paths = Vec::new();
        for o in &outcomes {
            for (network, trip) in [("base", &o.base), ("clustered", &o.clustered)] {
                let chosen: Option<&PathSummary> = trip.chosen.as_ref();
                results.push(ResultRow {
                    od_id: &o.od_id,
                    network,
                    feasible: trip.feasible,
                    alternatives: trip.alternatives.len(),
                    distance_m: chosen.map(|p| p.distance_m),
                    transfers: chosen.map(|p| p.transfers),
                    access_m: chosen.map(|p| p.access_m),
                    walk_m: chosen.map(|p| p.walk_m),
                    lines: chosen.map(|p| p.lines.join(" ")).unwrap_or_default(),
                });
                paths.extend(trip.alternatives.iter().enumerate().map(|(i, p)| PathRow {
                    od_id: &o.od_id,
                    network,
                    rank: i + 1,
                    distance_m: p.distance_m,
                    transfers: p.transfers,
                    access_m: p.access_m,
                    walk_m: p.walk_m,
                    lines: p.lines.join(" "),
                    stops: p.stops.join(" "),
                }));
            }
        }
        self.artifacts.add_csv("od_results.csv", results)?;
        self.artifacts.add_csv("od_paths.csv", paths)?;
        let summary = summarize_od(&outcomes);
        if let (Some(b), Some(c)) = (summary[0].mean_distance_m, summary[1].mean_distance_m) {
            log::info!("mean trip distance {b:.0} m base, {c:.0} m clustered");
        }
        self.artifacts.add_csv("od_summary.csv", summary)
    }
}
