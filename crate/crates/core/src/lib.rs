//! Transit analytics over bus GPS logs: map matching, itinerary detection,
//! stop availability, stop clustering and K-shortest-path trip evaluation.

pub mod analytics;
pub mod clustering;
pub mod detection;
pub mod error;
pub mod geo;
pub mod io;
pub mod matching;
pub mod model;
pub mod routing;
pub mod stats;
pub mod synth;

pub use error::{Error, ParseError, Result};
pub use geo::{haversine_distance, GeoPoint};
