//! Pipeline configuration: one TOML file with flat keys.

use std::path::{Path, PathBuf};

use busflow_core::analytics::{Period, DEFAULT_WINDOW_MIN, DEFAULT_WINDOW_SET, SPAN_END_MIN, SPAN_START_MIN};
use busflow_core::clustering::DEFAULT_CLUSTER_RADIUS_M;
use busflow_core::detection::{DetectionConfig, SegmentConfig};
use busflow_core::matching::DEFAULT_ACCEPTANCE_RADIUS_M;
use busflow_core::routing::{RouteConfig, DEFAULT_K, DEFAULT_OD_RADIUS_M};
use serde::{Deserialize, Serialize};

use crate::error::CliError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PipelineConfig {
    /// Input files. Relative paths resolve against the config file's directory.
    pub lines: Option<PathBuf>,
    pub line_points: Option<PathBuf>,
    pub fixes: Option<PathBuf>,
    /// Optional OD pair file; pairs are generated from the stops when absent.
    pub od_pairs: Option<PathBuf>,
    /// Output directory, overridden by `--out`.
    #[serde(skip_serializing)]
    pub out_dir: Option<PathBuf>,
    pub seed: u64,

    pub acceptance_radius_m: f64,
    pub idle_gap_minutes: u32,
    pub wrap_fraction: f64,
    /// Gap widths for the interpolation error estimate.
    pub error_gap_widths: Vec<usize>,
    pub error_samples: usize,

    pub window_minutes: u32,
    pub window_set: Vec<u32>,
    /// `LABEL=HH-HH`, end hour exclusive.
    pub periods: Vec<String>,

    pub cluster_radius_m: f64,

    pub k: usize,
    pub od_search_radius_m: f64,
    pub od_count: usize,
    pub od_jitter_m: f64,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        let segment = SegmentConfig::default();
        Self {
            lines: None,
            line_points: None,
            fixes: None,
            od_pairs: None,
            out_dir: None,
            seed: 0,
            acceptance_radius_m: DEFAULT_ACCEPTANCE_RADIUS_M,
            idle_gap_minutes: segment.idle_gap_s / 60,
            wrap_fraction: segment.wrap_fraction,
            error_gap_widths: (2..=8).collect(),
            error_samples: 100,
            window_minutes: DEFAULT_WINDOW_MIN,
            window_set: DEFAULT_WINDOW_SET.to_vec(),
            periods: Period::defaults()
                .iter()
                .map(|p| format!("{}={:02}-{:02}", p.label, p.start_min / 60, p.end_min / 60))
                .collect(),
            cluster_radius_m: DEFAULT_CLUSTER_RADIUS_M,
            k: DEFAULT_K,
            od_search_radius_m: DEFAULT_OD_RADIUS_M,
            od_count: 1000,
            od_jitter_m: 400.0,
        }
    }
}

fn parse_period(text: &str) -> Option<Period> {
    let (label, hours) = text.split_once('=')?;
    let (a, b) = hours.split_once('-')?;
    let (a, b): (u32, u32) = (a.trim().parse().ok()?, b.trim().parse().ok()?);
    let label = label.trim();
    if label.is_empty() || a >= b || a * 60 < SPAN_START_MIN || b * 60 > SPAN_END_MIN {
        return None;
    }
    Some(Period::new(label, a, b))
}

impl PipelineConfig {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::config(path, e.to_string()))?;
        let cfg: PipelineConfig = toml::from_str(&text).map_err(|e| CliError::config(path, e.to_string()))?;
        cfg.check().map_err(|m| CliError::config(path, m))?;
        Ok(cfg)
    }

    /// Range checks on every numeric key.
    pub fn check(&self) -> Result<(), String> {
        let positive = [
            ("acceptance_radius_m", self.acceptance_radius_m),
            ("cluster_radius_m", self.cluster_radius_m),
            ("od_search_radius_m", self.od_search_radius_m),
        ];
        for (key, v) in positive {
            if !(v.is_finite() && v > 0.0) {
                return Err(format!("{key} must be positive, got {v}"));
            }
        }
        if !(self.od_jitter_m.is_finite() && self.od_jitter_m >= 0.0) {
            return Err(format!("od_jitter_m must be non-negative, got {}", self.od_jitter_m));
        }
        if !(self.wrap_fraction > 0.0 && self.wrap_fraction <= 1.0) {
            return Err(format!("wrap_fraction must be in (0, 1], got {}", self.wrap_fraction));
        }
        if self.idle_gap_minutes == 0 {
            return Err("idle_gap_minutes must be positive".into());
        }
        let max_w = (SPAN_END_MIN - SPAN_START_MIN) / 2;
        for w in std::iter::once(self.window_minutes).chain(self.window_set.iter().copied()) {
            if w == 0 || w > max_w {
                return Err(format!("window widths must be in 1..={max_w} minutes, got {w}"));
            }
        }
        if self.window_set.is_empty() {
            return Err("window_set is empty".into());
        }
        if self.k == 0 {
            return Err("k must be at least 1".into());
        }
        if let Some(w) = self.error_gap_widths.iter().find(|w| **w < 2) {
            return Err(format!("error_gap_widths must be at least 2, got {w}"));
        }
        if self.periods.is_empty() {
            return Err("periods is empty".into());
        }
        for p in &self.periods {
            if parse_period(p).is_none() {
                return Err(format!("bad period {p:?}, expected LABEL=HH-HH within 05-23"));
            }
        }
        Ok(())
    }

    pub fn periods(&self) -> Vec<Period> {
        self.periods.iter().filter_map(|p| parse_period(p)).collect()
    }

    pub fn detection(&self) -> DetectionConfig {
        DetectionConfig {
            acceptance_radius_m: self.acceptance_radius_m,
            segment: SegmentConfig {
                idle_gap_s: self.idle_gap_minutes * 60,
                wrap_fraction: self.wrap_fraction,
            },
        }
    }

    pub fn route(&self) -> RouteConfig {
        RouteConfig {
            k: self.k,
            search_radius_m: self.od_search_radius_m,
        }
    }
}
