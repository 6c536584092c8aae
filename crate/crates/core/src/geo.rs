use serde::{Deserialize, Serialize};

/// Mean Earth radius used for every distance in the engine.
pub const EARTH_RADIUS_M: f64 = 6_371_000.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GeoPoint {
    pub lat: f64,
    pub lon: f64,
}

impl GeoPoint {
    pub const fn new(lat: f64, lon: f64) -> Self {
        Self { lat, lon }
    }

    pub fn is_valid(&self) -> bool {
        self.lat.is_finite()
            && self.lon.is_finite()
            && (-90.0..=90.0).contains(&self.lat)
            && (-180.0..=180.0).contains(&self.lon)
    }

    /// Point displaced by `east_m`/`north_m` metres using a local
    /// equirectangular approximation. Used to lay out synthetic networks.
    pub fn offset(&self, east_m: f64, north_m: f64) -> GeoPoint {
        let m_per_deg = EARTH_RADIUS_M * std::f64::consts::PI / 180.0;
        GeoPoint {
            lat: self.lat + north_m / m_per_deg,
            lon: self.lon + east_m / (m_per_deg * self.lat.to_radians().cos()),
        }
    }
}

/// Great-circle distance in metres.
pub fn haversine_distance(a: GeoPoint, b: GeoPoint) -> f64 {
    let lat1 = a.lat.to_radians();
    let lat2 = b.lat.to_radians();
    let dlat = (b.lat - a.lat).to_radians();
    let dlon = (b.lon - a.lon).to_radians();
    let h = (dlat / 2.0).sin().powi(2) + lat1.cos() * lat2.cos() * (dlon / 2.0).sin().powi(2);
    2.0 * EARTH_RADIUS_M * h.sqrt().min(1.0).asin()
}
