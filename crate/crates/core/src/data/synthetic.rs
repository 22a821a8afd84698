//! Procedural stand-in for a roadside weather station image archive.
//!
//! Each sample is a perspective road on a darker background with a lane
//! line, partly covered by white snow blobs. The covered fraction of the road
//! is drawn from a per-class range; weather comes from class-conditional
//! Gaussians. Every latent draw is written to the ground-truth log.
//!
//! Sample `i` draws from its own ChaCha stream (`seed`, stream `i`), so the
//! output does not depend on generation order.

use std::fs;
use std::io::Write;
use std::path::Path;

use chrono::{DateTime, Duration, TimeZone, Utc};
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::data::weather::{write_weather_csv, StationWeather};
use crate::data::{
    format_timestamp, format_timestamp_basic, write_image, LabeledSample, RoadCondition, WeatherRecord,
};
use crate::error::{Error, Result};
use crate::tensor::Tensor;

/// Minimum channel value above which a road pixel counts as snow.
pub const SNOW_THRESHOLD: f32 = 0.6;

const ROAD_GRAY: [f32; 3] = [0.36, 0.37, 0.39];
const LANE_COLOR: [f32; 3] = [0.85, 0.75, 0.25];
const SNOW_COLOR: [f32; 3] = [0.92, 0.94, 0.97];
const CADENCE_MINUTES: i64 = 15;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CoverageRange {
    pub min: f64,
    pub max: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct NullRates {
    pub rh: f64,
    pub wind_speed: f64,
}

impl Default for NullRates {
    fn default() -> Self {
        NullRates {
            rh: 0.017,
            wind_speed: 0.0026,
        }
    }
}

/// `(mean, std)` per weather variable.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ClassWeather {
    pub air_temp: (f64, f64),
    pub rh: (f64, f64),
    pub pressure: (f64, f64),
    pub wind_speed: (f64, f64),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum WeatherMode {
    /// Class-conditional distributions.
    Informative,
    /// Every class draws from the partial-cover distribution.
    Independent,
    /// Every sample gets the partial-cover means exactly.
    Constant,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SyntheticSpec {
    pub n_samples: usize,
    pub class_priors: [f64; 3],
    pub image_size: usize,
    pub null_rates: NullRates,
    /// Snow coverage of the road region, per class (bare, partial, full).
    pub coverage: [CoverageRange; 3],
    /// Share of full-cover samples rendered just above the full-cover minimum.
    pub ambiguity_fraction: f64,
    pub ambiguous_band: f64,
    pub weather_mode: WeatherMode,
    pub weather: [ClassWeather; 3],
    pub noise_std: f64,
    pub num_stations: usize,
    pub seed: u64,
}

impl Default for SyntheticSpec {
    fn default() -> Self {
        SyntheticSpec {
            n_samples: 1000,
            class_priors: [0.45, 0.40, 0.15],
            image_size: 64,
            null_rates: NullRates::default(),
            coverage: [
                CoverageRange { min: 0.0, max: 0.05 },
                CoverageRange { min: 0.15, max: 0.6 },
                CoverageRange { min: 0.7, max: 1.0 },
            ],
            ambiguity_fraction: 0.0,
            ambiguous_band: 0.03,
            weather_mode: WeatherMode::Informative,
            weather: [
                ClassWeather {
                    air_temp: (-1.0, 3.5),
                    rh: (72.0, 9.0),
                    pressure: (101.4, 0.7),
                    wind_speed: (14.0, 6.0),
                },
                ClassWeather {
                    air_temp: (-5.0, 3.5),
                    rh: (80.0, 8.0),
                    pressure: (100.9, 0.7),
                    wind_speed: (20.0, 7.0),
                },
                ClassWeather {
                    air_temp: (-10.0, 3.5),
                    rh: (87.0, 6.0),
                    pressure: (100.3, 0.7),
                    wind_speed: (28.0, 8.0),
                },
            ],
            noise_std: 0.05,
            num_stations: 40,
            seed: 0,
        }
    }
}

impl SyntheticSpec {
    pub fn validate(&self) -> Result<()> {
        if self.n_samples == 0 {
            return Err(Error::config("synthetic n_samples must be at least 1"));
        }
        if self.class_priors.iter().any(|p| !(0.0..=1.0).contains(p)) {
            return Err(Error::config("class_priors must each lie in [0, 1]"));
        }
        let total: f64 = self.class_priors.iter().sum();
        if (total - 1.0).abs() > 1e-6 {
            return Err(Error::config(format!("class_priors must sum to 1, got {total}")));
        }
        for (name, r) in [("rh", self.null_rates.rh), ("wind_speed", self.null_rates.wind_speed)] {
            if !(0.0..1.0).contains(&r) {
                return Err(Error::config(format!("null rate for {name} must be in [0, 1), got {r}")));
            }
        }
        for (c, r) in RoadCondition::ALL.iter().zip(&self.coverage) {
            if !(0.0 <= r.min && r.min <= r.max && r.max <= 1.0) {
                return Err(Error::config(format!(
                    "coverage range for {} must satisfy 0 <= min <= max <= 1",
                    c.name()
                )));
            }
        }
        if !(0.0..=1.0).contains(&self.ambiguity_fraction) {
            return Err(Error::config("ambiguity_fraction must be in [0, 1]"));
        }
        if !(self.ambiguous_band >= 0.0) {
            return Err(Error::config("ambiguous_band must be nonnegative"));
        }
        if self.image_size < 8 {
            return Err(Error::config("image_size must be at least 8"));
        }
        if self.num_stations == 0 {
            return Err(Error::config("num_stations must be at least 1"));
        }
        if !(self.noise_std >= 0.0) {
            return Err(Error::config("noise_std must be nonnegative"));
        }
        for w in &self.weather {
            for (_, s) in [w.air_temp, w.rh, w.pressure, w.wind_speed] {
                if !(s >= 0.0) {
                    return Err(Error::config("weather standard deviations must be nonnegative"));
                }
            }
        }
        Ok(())
    }
}

/// Road trapezoid in image-fraction coordinates.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RoadGeometry {
    pub horizon: f64,
    pub top_center: f64,
    pub top_half_width: f64,
    pub bottom_left: f64,
    pub bottom_right: f64,
}

impl RoadGeometry {
    fn edges_at(&self, yc: f64) -> Option<(f64, f64, f64)> {
        if yc < self.horizon {
            return None;
        }
        let t = (yc - self.horizon) / (1.0 - self.horizon);
        let left = self.top_center - self.top_half_width;
        let right = self.top_center + self.top_half_width;
        Some((
            left + t * (self.bottom_left - left),
            right + t * (self.bottom_right - right),
            t,
        ))
    }

    /// Whether pixel `(x, y)` of a `size`×`size` image lies on the road.
    pub fn contains(&self, x: usize, y: usize, size: usize) -> bool {
        let xc = (x as f64 + 0.5) / size as f64;
        let yc = (y as f64 + 0.5) / size as f64;
        matches!(self.edges_at(yc), Some((l, r, _)) if l <= xc && xc <= r)
    }

    pub fn mask(&self, size: usize) -> Vec<bool> {
        (0..size * size).map(|i| self.contains(i % size, i / size, size)).collect()
    }
}

/// Ground-truth log entry for one sample.
#[derive(Clone, Debug, PartialEq)]
pub struct GroundTruth {
    pub id: usize,
    pub label: RoadCondition,
    pub station_id: String,
    pub timestamp: DateTime<Utc>,
    pub target_coverage: f64,
    /// Realized fraction of road pixels rendered as snow.
    pub coverage: f64,
    pub ambiguous: bool,
    pub illumination: f64,
    pub geometry: RoadGeometry,
    /// Weather before null injection.
    pub weather: WeatherRecord,
    pub rh_null: bool,
    pub wind_null: bool,
    pub weather_offset_s: i64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SyntheticDataset {
    pub spec: SyntheticSpec,
    /// Samples with weather attached (after null injection).
    pub samples: Vec<LabeledSample>,
    /// Station weather table as it would be ingested from CSV.
    pub weather: Vec<StationWeather>,
    pub log: Vec<GroundTruth>,
}

pub fn start_time() -> DateTime<Utc> {
    Utc.with_ymd_and_hms(2017, 12, 1, 0, 0, 0).single().expect("valid date")
}

fn normal(rng: &mut ChaCha8Rng, (mean, std): (f64, f64)) -> f64 {
    if std == 0.0 {
        return mean;
    }
    Normal::new(mean, std).expect("valid normal").sample(rng)
}

/// Dew point from temperature and relative humidity (Magnus formula).
fn dew_point(t: f64, rh: f64) -> f64 {
    let (b, c) = (17.62, 243.12);
    let gamma = (rh / 100.0).ln() + b * t / (c + t);
    c * gamma / (b - gamma)
}

fn draw_class(rng: &mut ChaCha8Rng, priors: &[f64; 3]) -> RoadCondition {
    let u: f64 = rng.random();
    let mut acc = 0.0;
    for (c, &p) in RoadCondition::ALL.iter().zip(priors) {
        acc += p;
        if u < acc {
            return *c;
        }
    }
    // u fell in the rounding slack above the cumulative sum
    *RoadCondition::ALL
        .iter()
        .zip(priors)
        .rev()
        .find(|(_, &p)| p > 0.0)
        .map(|(c, _)| c)
        .unwrap_or(&RoadCondition::Full)
}

struct Rendered {
    image: Tensor<f32>,
    coverage: f64,
}

fn render(
    rng: &mut ChaCha8Rng,
    size: usize,
    geometry: &RoadGeometry,
    target: f64,
    range: (f64, f64),
    illumination: f64,
    noise_std: f64,
) -> Rendered {
    let mask = geometry.mask(size);
    let road: Vec<usize> = (0..size * size).filter(|&i| mask[i]).collect();
    let n_road = road.len();

    // Blob field over the road; the top-k pixels become snow.
    let n_blobs = rng.random_range(3..=8);
    let blobs: Vec<(f64, f64, f64, f64)> = (0..n_blobs)
        .map(|_| {
            let cy = rng.random_range(geometry.horizon..1.0);
            let (l, r, _) = geometry.edges_at(cy).expect("below horizon");
            let cx = rng.random_range(l.min(r)..=r.max(l));
            let radius = rng.random_range(0.05..0.2);
            let amp = rng.random_range(0.5..1.0);
            (cx, cy, radius, amp)
        })
        .collect();
    let mut scored: Vec<(f64, usize)> = road
        .iter()
        .map(|&i| {
            let xc = ((i % size) as f64 + 0.5) / size as f64;
            let yc = ((i / size) as f64 + 0.5) / size as f64;
            let field: f64 = blobs
                .iter()
                .map(|&(bx, by, r, a)| a * (-((xc - bx).powi(2) + (yc - by).powi(2)) / (2.0 * r * r)).exp())
                .sum();
            (field + rng.random_range(0.0..0.05), i)
        })
        .collect();
    scored.sort_by(|a, b| b.0.total_cmp(&a.0).then(a.1.cmp(&b.1)));

    let lo = (range.0 * n_road as f64).ceil() as usize;
    let hi = ((range.1 * n_road as f64).floor() as usize).max(lo).min(n_road);
    let k = ((target * n_road as f64).round() as usize).clamp(lo.min(hi), hi);
    let mut snow = vec![false; size * size];
    for &(_, i) in &scored[..k] {
        snow[i] = true;
    }

    let lane_x = |yc: f64| -> Option<(f64, f64)> {
        let (l, r, t) = geometry.edges_at(yc)?;
        Some(((l + r) / 2.0, 0.006 + 0.012 * t))
    };
    let noise = Normal::new(0.0, noise_std.max(f64::MIN_POSITIVE)).expect("valid noise");
    let mut data = Vec::with_capacity(size * size * 3);
    for y in 0..size {
        let yc = (y as f64 + 0.5) / size as f64;
        let bg = 0.10 + 0.08 * yc;
        for x in 0..size {
            let i = y * size + x;
            let xc = (x as f64 + 0.5) / size as f64;
            let base: [f32; 3] = if snow[i] {
                SNOW_COLOR
            } else if mask[i] {
                match lane_x(yc) {
                    Some((cx, hw)) if (xc - cx).abs() <= hw.max(0.5 / size as f64) => LANE_COLOR,
                    _ => ROAD_GRAY,
                }
            } else {
                [bg as f32, (bg * 1.05) as f32, (bg * 0.95) as f32]
            };
            for ch in base {
                let mut v = ch as f64 * illumination;
                if noise_std > 0.0 {
                    v += noise.sample(rng);
                }
                data.push(v.clamp(0.0, 1.0) as f32);
            }
        }
    }
    Rendered {
        image: Tensor::new(vec![size, size, 3], data).expect("image shape"),
        coverage: if n_road == 0 { 0.0 } else { k as f64 / n_road as f64 },
    }
}

fn generate_one(spec: &SyntheticSpec, id: usize) -> (LabeledSample, StationWeather, GroundTruth) {
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    rng.set_stream(id as u64);

    let label = draw_class(&mut rng, &spec.class_priors);
    let range = spec.coverage[label.index()];
    let ambiguous = label == RoadCondition::Full && rng.random::<f64>() < spec.ambiguity_fraction;
    let (lo, hi) = if ambiguous {
        (range.min, (range.min + spec.ambiguous_band).min(range.max))
    } else {
        (range.min, range.max)
    };
    let target = if hi > lo { rng.random_range(lo..=hi) } else { lo };

    let geometry = RoadGeometry {
        horizon: rng.random_range(0.3..0.45),
        top_center: rng.random_range(0.4..0.6),
        top_half_width: rng.random_range(0.04..0.1),
        bottom_left: rng.random_range(0.0..0.15),
        bottom_right: rng.random_range(0.85..1.0),
    };
    let illumination = rng.random_range(0.85..1.05);
    let rendered = render(
        &mut rng,
        spec.image_size,
        &geometry,
        target,
        (lo, hi),
        illumination,
        spec.noise_std,
    );

    let params = match spec.weather_mode {
        WeatherMode::Informative => spec.weather[label.index()],
        WeatherMode::Independent | WeatherMode::Constant => spec.weather[RoadCondition::Partial.index()],
    };
    let constant = spec.weather_mode == WeatherMode::Constant;
    let mut draw = |p: (f64, f64)| {
        let v = normal(&mut rng, p);
        if constant {
            p.0
        } else {
            v
        }
    };
    let air_temp = draw(params.air_temp);
    let rh = draw(params.rh).clamp(5.0, 100.0);
    let pressure = draw(params.pressure).max(1.0);
    let wind = draw(params.wind_speed).max(0.0);
    let latent = WeatherRecord {
        air_temp: Some(air_temp),
        relative_humidity: Some(rh),
        pressure: Some(pressure),
        wind_speed: Some(wind),
        dew_point: Some(dew_point(air_temp, rh)),
    };
    let rh_null = rng.random::<f64>() < spec.null_rates.rh;
    let wind_null = rng.random::<f64>() < spec.null_rates.wind_speed;
    let observed = WeatherRecord {
        relative_humidity: if rh_null { None } else { latent.relative_humidity },
        wind_speed: if wind_null { None } else { latent.wind_speed },
        ..latent
    };

    let station_id = format!("RWIS{:02}", id % spec.num_stations);
    let slot = (id / spec.num_stations) as i64;
    let timestamp = start_time() + Duration::minutes(CADENCE_MINUTES * slot);
    let offset = rng.random_range(-120..=120i64);

    let sample = LabeledSample {
        image: rendered.image,
        label: label.index(),
        station_id: station_id.clone(),
        timestamp: Some(timestamp),
        weather: Some(observed),
    };
    let weather = StationWeather {
        station_id: station_id.clone(),
        timestamp: timestamp + Duration::seconds(offset),
        record: observed,
    };
    let log = GroundTruth {
        id,
        label,
        station_id,
        timestamp,
        target_coverage: target,
        coverage: rendered.coverage,
        ambiguous,
        illumination,
        geometry,
        weather: latent,
        rh_null,
        wind_null,
        weather_offset_s: offset,
    };
    (sample, weather, log)
}

pub fn generate_synthetic(spec: &SyntheticSpec) -> Result<SyntheticDataset> {
    spec.validate()?;
    let mut samples = Vec::with_capacity(spec.n_samples);
    let mut weather = Vec::with_capacity(spec.n_samples);
    let mut log = Vec::with_capacity(spec.n_samples);
    for id in 0..spec.n_samples {
        let (s, w, g) = generate_one(spec, id);
        samples.push(s);
        weather.push(w);
        log.push(g);
    }
    Ok(SyntheticDataset {
        spec: spec.clone(),
        samples,
        weather,
        log,
    })
}

fn opt(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

impl SyntheticDataset {
    pub fn log_csv(&self) -> String {
        let mut out = String::from(
            "id,label,station_id,timestamp,target_coverage,coverage,ambiguous,illumination,\
             horizon,top_center,top_half_width,bottom_left,bottom_right,\
             air_temp,rh,pressure,wind_speed,dew_point,rh_null,wind_null,weather_offset_s\n",
        );
        for g in &self.log {
            let w = g.weather;
            out.push_str(&format!(
                "{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{}\n",
                g.id,
                g.label.name(),
                g.station_id,
                format_timestamp(&g.timestamp),
                g.target_coverage,
                g.coverage,
                g.ambiguous,
                g.illumination,
                g.geometry.horizon,
                g.geometry.top_center,
                g.geometry.top_half_width,
                g.geometry.bottom_left,
                g.geometry.bottom_right,
                opt(w.air_temp),
                opt(w.relative_humidity),
                opt(w.pressure),
                opt(w.wind_speed),
                opt(w.dew_point),
                g.rh_null,
                g.wind_null,
                g.weather_offset_s,
            ));
        }
        out
    }

    /// File name (without directory) of sample `i`.
    pub fn file_name(&self, i: usize) -> String {
        let s = &self.samples[i];
        let ts = s.timestamp.expect("synthetic samples carry timestamps");
        format!("{}_{}.png", s.station_id, format_timestamp_basic(&ts))
    }
}

/// Writes class folders of PNGs, `weather.csv` and `ground_truth_log.csv`.
pub fn write_synthetic(dataset: &SyntheticDataset, out_dir: &Path) -> Result<()> {
    for c in RoadCondition::ALL {
        let dir = out_dir.join(c.name());
        fs::create_dir_all(&dir).map_err(|e| Error::io(&dir, e))?;
    }
    for (i, s) in dataset.samples.iter().enumerate() {
        let class = RoadCondition::from_index(s.label).expect("synthetic label");
        let path = out_dir.join(class.name()).join(dataset.file_name(i));
        write_image(&path, &s.image)?;
    }
    write_weather_csv(&out_dir.join("weather.csv"), &dataset.weather)?;
    let log_path = out_dir.join("ground_truth_log.csv");
    let mut f = fs::File::create(&log_path).map_err(|e| Error::io(&log_path, e))?;
    f.write_all(dataset.log_csv().as_bytes())
        .map_err(|e| Error::io(&log_path, e))?;
    Ok(())
}
