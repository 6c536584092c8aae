//! Static network and GPS log types.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};

use crate::geo::GeoPoint;

/// Seconds in a service day.
pub const DAY_SECONDS: u32 = 86_400;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum LineCategory {
    Alimentador,
    Convencional,
    Expresso,
    Jardineira,
    Ligeirao,
    LinhaDireta,
    Madrugueiro,
    Troncal,
}

impl LineCategory {
    pub const ALL: [LineCategory; 8] = [
        LineCategory::Alimentador,
        LineCategory::Convencional,
        LineCategory::Expresso,
        LineCategory::Jardineira,
        LineCategory::Ligeirao,
        LineCategory::LinhaDireta,
        LineCategory::Madrugueiro,
        LineCategory::Troncal,
    ];

    pub fn as_str(&self) -> &'static str {
        match self {
            LineCategory::Alimentador => "ALIMENTADOR",
            LineCategory::Convencional => "CONVENCIONAL",
            LineCategory::Expresso => "EXPRESSO",
            LineCategory::Jardineira => "JARDINEIRA",
            LineCategory::Ligeirao => "LIGEIRAO",
            LineCategory::LinhaDireta => "LINHA_DIRETA",
            LineCategory::Madrugueiro => "MADRUGUEIRO",
            LineCategory::Troncal => "TRONCAL",
        }
    }

    /// Case- and accent-insensitive lookup; spaces and hyphens count as `_`.
    pub fn from_label(label: &str) -> Option<Self> {
        let key = normalize_label(label);
        Self::ALL.into_iter().find(|c| c.as_str() == key)
    }
}

impl fmt::Display for LineCategory {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum StopType {
    Terminal,
    StreetStop,
    TubeStation,
}

impl StopType {
    pub const ALL: [StopType; 3] = [StopType::Terminal, StopType::StreetStop, StopType::TubeStation];

    pub fn as_str(&self) -> &'static str {
        match self {
            StopType::Terminal => "TERMINAL",
            StopType::StreetStop => "STREET_STOP",
            StopType::TubeStation => "TUBE_STATION",
        }
    }

    pub fn from_label(label: &str) -> Option<Self> {
        let key = normalize_label(label);
        Self::ALL.into_iter().find(|c| c.as_str() == key)
    }
}

impl fmt::Display for StopType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

fn strip_accent(c: char) -> char {
    match c {
        'À' | 'Á' | 'Â' | 'Ã' | 'Ä' | 'Å' => 'A',
        'Ç' => 'C',
        'È' | 'É' | 'Ê' | 'Ë' => 'E',
        'Ì' | 'Í' | 'Î' | 'Ï' => 'I',
        'Ñ' => 'N',
        'Ò' | 'Ó' | 'Ô' | 'Õ' | 'Ö' => 'O',
        'Ù' | 'Ú' | 'Û' | 'Ü' => 'U',
        'Ý' => 'Y',
        other => other,
    }
}

fn normalize_label(label: &str) -> String {
    label
        .trim()
        .chars()
        .flat_map(char::to_uppercase)
        .map(strip_accent)
        .map(|c| if c == ' ' || c == '-' { '_' } else { c })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BusLine {
    pub code: String,
    pub name: String,
    pub category: LineCategory,
    pub color: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BusStop {
    pub stop_id: String,
    pub name: String,
    pub stop_type: StopType,
    pub position: GeoPoint,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ItineraryStop {
    pub seq: u32,
    pub stop_id: String,
}

/// Ordered stop sequence of one line in one direction.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ItineraryDef {
    pub line_code: String,
    pub direction: String,
    pub stops: Vec<ItineraryStop>,
    pub circular: bool,
}

impl ItineraryDef {
    /// Number of positions `n`, counting the repeated terminal of circular lines twice.
    pub fn len(&self) -> usize {
        self.stops.len()
    }

    pub fn is_empty(&self) -> bool {
        self.stops.is_empty()
    }

    /// Stop id at zero-based position `i`.
    pub fn stop_at(&self, i: usize) -> &str {
        &self.stops[i].stop_id
    }

    pub fn stop_ids(&self) -> impl Iterator<Item = &str> {
        self.stops.iter().map(|s| s.stop_id.as_str())
    }

    /// Checks the structural invariants: n >= 2, strictly increasing
    /// sequence numbers, and a consistent circular flag.
    pub fn check(&self) -> Result<(), String> {
        if self.stops.len() < 2 {
            return Err(format!("needs at least 2 positions, has {}", self.stops.len()));
        }
        for pair in self.stops.windows(2) {
            if pair[1].seq <= pair[0].seq {
                return Err(format!("sequence {} does not follow {}", pair[1].seq, pair[0].seq));
            }
        }
        let closes = self.stops.first().map(|s| &s.stop_id) == self.stops.last().map(|s| &s.stop_id);
        if closes != self.circular {
            return Err(format!(
                "circular flag is {} but first/last stops {}",
                self.circular,
                if closes { "coincide" } else { "differ" }
            ));
        }
        Ok(())
    }
}

/// One timestamped vehicle position.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GpsFix {
    pub vehicle_id: String,
    pub line_code: String,
    pub position: GeoPoint,
    pub day: NaiveDate,
    /// Seconds since local midnight of `day`.
    pub time: u32,
}

/// Fix groups are keyed by vehicle, line and service day.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct GroupKey {
    pub vehicle_id: String,
    pub line_code: String,
    pub day: NaiveDate,
}

impl GpsFix {
    pub fn group_key(&self) -> GroupKey {
        GroupKey {
            vehicle_id: self.vehicle_id.clone(),
            line_code: self.line_code.clone(),
            day: self.day,
        }
    }
}

/// Formats seconds-of-day as `HH:MM:SS`, rounding half-up to whole seconds.
pub fn format_hms(seconds: f64) -> String {
    let total = (seconds + 0.5).floor().max(0.0) as u64;
    format!("{:02}:{:02}:{:02}", total / 3600, (total / 60) % 60, total % 60)
}

/// Parses `HH:MM:SS` (or `HH:MM`) into seconds of day.
pub fn parse_hms(text: &str) -> Option<u32> {
    let mut parts = text.trim().split(':');
    let h: u32 = parts.next()?.parse().ok()?;
    let m: u32 = parts.next()?.parse().ok()?;
    let s: u32 = match parts.next() {
        Some(p) => p.parse().ok()?,
        None => 0,
    };
    if parts.next().is_some() || h > 23 || m > 59 || s > 59 {
        return None;
    }
    Some(h * 3600 + m * 60 + s)
}

/// Everything the pipeline reads, assembled and immutable.
#[derive(Debug, Clone, Default)]
pub struct Dataset {
    pub lines: BTreeMap<String, BusLine>,
    pub stops: BTreeMap<String, BusStop>,
    pub itineraries: Vec<ItineraryDef>,
    pub fixes: BTreeMap<GroupKey, Vec<GpsFix>>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Default)]
pub struct DanglingStop {
    pub line_code: String,
    pub direction: String,
    pub stop_id: String,
}

/// Consistency problems found in a dataset. Empty when the dataset is coherent.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Default)]
pub struct ValidationReport {
    pub dangling_stops: Vec<DanglingStop>,
    pub itineraries_without_line: Vec<String>,
    pub lines_without_itineraries: Vec<String>,
    /// Fix groups whose line is unknown or has no itinerary.
    pub unresolvable_fix_lines: Vec<GroupKey>,
    pub empty_fix_groups: Vec<GroupKey>,
}

impl ValidationReport {
    pub fn is_empty(&self) -> bool {
        self.dangling_stops.is_empty()
            && self.itineraries_without_line.is_empty()
            && self.lines_without_itineraries.is_empty()
            && self.unresolvable_fix_lines.is_empty()
            && self.empty_fix_groups.is_empty()
    }
}

impl Dataset {
    pub fn new(
        lines: Vec<BusLine>,
        stops: Vec<BusStop>,
        itineraries: Vec<ItineraryDef>,
        fixes: Vec<GpsFix>,
    ) -> Self {
        let mut groups: BTreeMap<GroupKey, Vec<GpsFix>> = BTreeMap::new();
        for fix in fixes {
            groups.entry(fix.group_key()).or_default().push(fix);
        }
        for g in groups.values_mut() {
            g.sort_by_key(|f| f.time);
        }
        Dataset {
            lines: lines.into_iter().map(|l| (l.code.clone(), l)).collect(),
            stops: stops.into_iter().map(|s| (s.stop_id.clone(), s)).collect(),
            itineraries,
            fixes: groups,
        }
    }

    pub fn itineraries_of<'a>(&'a self, line_code: &'a str) -> impl Iterator<Item = &'a ItineraryDef> + 'a {
        self.itineraries.iter().filter(move |i| i.line_code == line_code)
    }

    pub fn validate(&self) -> ValidationReport {
        let mut report = ValidationReport::default();
        let mut lines_with_iti = BTreeSet::new();
        for iti in &self.itineraries {
            lines_with_iti.insert(iti.line_code.as_str());
            if !self.lines.contains_key(&iti.line_code) {
                report.itineraries_without_line.push(format!("{}/{}", iti.line_code, iti.direction));
            }
            let mut seen = BTreeSet::new();
            for id in iti.stop_ids() {
                if !self.stops.contains_key(id) && seen.insert(id) {
                    report.dangling_stops.push(DanglingStop {
                        line_code: iti.line_code.clone(),
                        direction: iti.direction.clone(),
                        stop_id: id.to_string(),
                    });
                }
            }
        }
        report.lines_without_itineraries = self
            .lines
            .keys()
            .filter(|code| !lines_with_iti.contains(code.as_str()))
            .cloned()
            .collect();
        for (key, fixes) in &self.fixes {
            if fixes.is_empty() {
                report.empty_fix_groups.push(key.clone());
            }
            if !self.lines.contains_key(&key.line_code) || !lines_with_iti.contains(key.line_code.as_str()) {
                report.unresolvable_fix_lines.push(key.clone());
            }
        }
        report
    }
}
