//! Labeled roadside samples: loading from disk, weather joins, and a
//! deterministic synthetic generator.

mod loader;
mod summary;
mod synthetic;
mod weather;

use chrono::{DateTime, NaiveDateTime, Utc};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::tensor::Tensor;

pub use loader::{load_image_dataset, write_image, LoadReport};
pub use summary::{dataset_summary, DatasetSummary};
pub use synthetic::{
    generate_synthetic, write_synthetic, ClassWeather, CoverageRange, GroundTruth, NullRates,
    RoadGeometry, SyntheticDataset, SyntheticSpec, WeatherMode, SNOW_THRESHOLD,
};
pub use weather::{join_weather, read_weather_csv, write_weather_csv, JoinReport, StationWeather};

/// Three-way road surface condition.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum RoadCondition {
    Bare = 0,
    Partial = 1,
    Full = 2,
}

impl RoadCondition {
    pub const ALL: [RoadCondition; 3] = [RoadCondition::Bare, RoadCondition::Partial, RoadCondition::Full];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn from_index(i: usize) -> Option<Self> {
        Self::ALL.get(i).copied()
    }

    /// Directory / CSV name.
    pub fn name(self) -> &'static str {
        match self {
            RoadCondition::Bare => "bare",
            RoadCondition::Partial => "partial",
            RoadCondition::Full => "full",
        }
    }

    pub fn from_name(s: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|c| c.name() == s)
    }
}

pub const NUM_CLASSES: usize = 3;

/// One weather observation; any field may be missing.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct WeatherRecord {
    /// °C
    pub air_temp: Option<f64>,
    /// %
    pub relative_humidity: Option<f64>,
    /// kPa
    pub pressure: Option<f64>,
    /// km/h
    pub wind_speed: Option<f64>,
    /// °C
    pub dew_point: Option<f64>,
}

pub const WEATHER_FIELDS: [&str; 5] = ["air_temp", "rh", "pressure", "wind_speed", "dew_point"];

impl WeatherRecord {
    pub fn fields(&self) -> [Option<f64>; 5] {
        [
            self.air_temp,
            self.relative_humidity,
            self.pressure,
            self.wind_speed,
            self.dew_point,
        ]
    }

    /// The four variables used for fusion; dew point is left out because it
    /// is derived from temperature and humidity.
    pub fn fusion_fields(&self) -> [Option<f64>; 4] {
        [self.air_temp, self.relative_humidity, self.pressure, self.wind_speed]
    }

    pub fn validate(&self) -> Result<()> {
        if let Some(rh) = self.relative_humidity {
            if !(0.0..=100.0).contains(&rh) {
                return Err(Error::input(format!("relative humidity {rh} outside [0, 100]")));
            }
        }
        if let Some(p) = self.pressure {
            if p <= 0.0 {
                return Err(Error::input(format!("pressure {p} must be positive")));
            }
        }
        Ok(())
    }
}

/// One station observation: image plus label, optionally with weather.
#[derive(Clone, Debug, PartialEq)]
pub struct LabeledSample {
    /// H×W×3 with values in [0, 1].
    pub image: Tensor<f32>,
    pub label: usize,
    pub station_id: String,
    pub timestamp: Option<DateTime<Utc>>,
    pub weather: Option<WeatherRecord>,
}

impl LabeledSample {
    pub fn new(image: Tensor<f32>, label: usize) -> Self {
        LabeledSample {
            image,
            label,
            station_id: String::new(),
            timestamp: None,
            weather: None,
        }
    }
}

/// Parses ISO-8601 UTC in extended (`2017-12-01T00:15:00Z`) or basic
/// (`20171201T001500Z`) form.
pub fn parse_timestamp(s: &str) -> Option<DateTime<Utc>> {
    if let Ok(t) = DateTime::parse_from_rfc3339(s) {
        return Some(t.with_timezone(&Utc));
    }
    let trimmed = s.strip_suffix('Z').unwrap_or(s);
    ["%Y%m%dT%H%M%S", "%Y-%m-%dT%H:%M:%S"]
        .iter()
        .find_map(|f| NaiveDateTime::parse_from_str(trimmed, f).ok())
        .map(|n| n.and_utc())
}

pub fn format_timestamp(t: &DateTime<Utc>) -> String {
    t.format("%Y-%m-%dT%H:%M:%SZ").to_string()
}

pub fn format_timestamp_basic(t: &DateTime<Utc>) -> String {
    t.format("%Y%m%dT%H%M%SZ").to_string()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn timestamps_parse_both_forms() {
        let a = parse_timestamp("2017-12-01T00:15:00Z").unwrap();
        let b = parse_timestamp("20171201T001500Z").unwrap();
        assert_eq!(a, b);
        assert_eq!(format_timestamp(&a), "2017-12-01T00:15:00Z");
        assert_eq!(format_timestamp_basic(&a), "20171201T001500Z");
        assert!(parse_timestamp("yesterday").is_none());
    }

    #[test]
    fn weather_invariants() {
        let mut w = WeatherRecord {
            relative_humidity: Some(101.0),
            ..Default::default()
        };
        assert!(w.validate().is_err());
        w.relative_humidity = Some(50.0);
        w.pressure = Some(0.0);
        assert!(w.validate().is_err());
        w.pressure = None;
        assert!(w.validate().is_ok());
    }
}
