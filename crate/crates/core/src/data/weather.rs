use std::collections::HashMap;
use std::path::Path;

use chrono::{DateTime, Utc};

use crate::data::{format_timestamp, parse_timestamp, LabeledSample, WeatherRecord};
use crate::error::{Error, Result};

/// Maximum distance between image and weather timestamps for a join.
pub const JOIN_WINDOW_S: i64 = 450;

const HEADER: [&str; 7] = [
    "station_id",
    "timestamp",
    "air_temp",
    "rh",
    "pressure",
    "wind_speed",
    "dew_point",
];

#[derive(Clone, Debug, PartialEq)]
pub struct StationWeather {
    pub station_id: String,
    pub timestamp: DateTime<Utc>,
    pub record: WeatherRecord,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct JoinReport {
    pub matched: usize,
    pub unmatched: usize,
}

pub fn write_weather_csv(path: &Path, rows: &[StationWeather]) -> Result<()> {
    let csv_err = |e: csv::Error| Error::Csv {
        path: path.to_path_buf(),
        line: 0,
        reason: e.to_string(),
    };
    let mut w = csv::Writer::from_path(path).map_err(csv_err)?;
    w.write_record(HEADER).map_err(csv_err)?;
    for r in rows {
        let mut fields = vec![r.station_id.clone(), format_timestamp(&r.timestamp)];
        fields.extend(
            r.record
                .fields()
                .iter()
                .map(|v| v.map(|x| x.to_string()).unwrap_or_default()),
        );
        w.write_record(&fields).map_err(csv_err)?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

/// Reads a station weather table. Empty cells are missing values; anything
/// else that fails to parse is an error naming the line.
pub fn read_weather_csv(path: &Path) -> Result<Vec<StationWeather>> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .from_path(path)
        .map_err(|e| Error::Csv {
            path: path.to_path_buf(),
            line: 0,
            reason: e.to_string(),
        })?;
    let err = |line: u64, reason: String| Error::Csv {
        path: path.to_path_buf(),
        line,
        reason,
    };
    let header = reader.headers().map_err(|e| err(1, e.to_string()))?.clone();
    let cols: Vec<usize> = HEADER
        .iter()
        .map(|h| {
            header
                .iter()
                .position(|c| c.trim() == *h)
                .ok_or_else(|| err(1, format!("missing column {h}")))
        })
        .collect::<Result<_>>()?;

    let mut out = Vec::new();
    for row in reader.records() {
        let row = row.map_err(|e| {
            let line = e.position().map(|p| p.line()).unwrap_or(0);
            err(line, e.to_string())
        })?;
        let line = row.position().map(|p| p.line()).unwrap_or(0);
        let cell = |i: usize| row.get(cols[i]).unwrap_or("").trim();
        let ts = parse_timestamp(cell(1))
            .ok_or_else(|| err(line, format!("bad timestamp {:?}", cell(1))))?;
        let mut vals = [None; 5];
        for (k, v) in vals.iter_mut().enumerate() {
            let s = cell(k + 2);
            if !s.is_empty() {
                let x: f64 = s
                    .parse()
                    .map_err(|_| err(line, format!("bad {} value {s:?}", HEADER[k + 2])))?;
                *v = Some(x);
            }
        }
        let record = WeatherRecord {
            air_temp: vals[0],
            relative_humidity: vals[1],
            pressure: vals[2],
            wind_speed: vals[3],
            dew_point: vals[4],
        };
        record.validate().map_err(|e| err(line, e.to_string()))?;
        out.push(StationWeather {
            station_id: cell(0).to_string(),
            timestamp: ts,
            record,
        });
    }
    Ok(out)
}

/// Attaches to each sample the same-station record nearest in time within
/// ±450 s; on equal distance the earlier record wins. Samples without a match
/// (or without a station/timestamp) get no weather.
pub fn join_weather(samples: &mut [LabeledSample], records: &[StationWeather]) -> JoinReport {
    let mut by_station: HashMap<&str, Vec<&StationWeather>> = HashMap::new();
    for r in records {
        by_station.entry(r.station_id.as_str()).or_default().push(r);
    }
    for list in by_station.values_mut() {
        list.sort_by_key(|r| r.timestamp);
    }
    let mut report = JoinReport::default();
    for s in samples.iter_mut() {
        let best = s.timestamp.and_then(|t| {
            let list = by_station.get(s.station_id.as_str())?;
            let lo = t - chrono::Duration::seconds(JOIN_WINDOW_S);
            let start = list.partition_point(|r| r.timestamp < lo);
            let mut best: Option<(i64, &StationWeather)> = None;
            for r in &list[start..] {
                let d = (r.timestamp - t).num_seconds().abs();
                if r.timestamp > t + chrono::Duration::seconds(JOIN_WINDOW_S) {
                    break;
                }
                if best.is_none_or(|(bd, _)| d < bd) {
                    best = Some((d, r));
                }
            }
            best.map(|(_, r)| r.record)
        });
        match best {
            Some(_) => report.matched += 1,
            None => report.unmatched += 1,
        }
        s.weather = best;
    }
    report
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::parse_timestamp;
    use crate::Tensor;

    fn rec(station: &str, ts: &str, t: f64) -> StationWeather {
        StationWeather {
            station_id: station.into(),
            timestamp: parse_timestamp(ts).unwrap(),
            record: WeatherRecord {
                air_temp: Some(t),
                ..Default::default()
            },
        }
    }

    fn sample(station: &str, ts: &str) -> LabeledSample {
        LabeledSample {
            station_id: station.into(),
            timestamp: parse_timestamp(ts),
            ..LabeledSample::new(Tensor::zeros(&[1, 1, 3]), 0)
        }
    }

    #[test]
    fn window_is_inclusive_and_ties_prefer_earlier() {
        let records = vec![
            rec("A", "2017-12-01T00:07:30Z", 2.0),
            rec("A", "2017-12-01T00:00:00Z", 1.0),
            rec("B", "2017-12-01T00:00:00Z", 9.0),
        ];
        // 225 s from both A records
        let mut s = vec![sample("A", "2017-12-01T00:03:45Z")];
        let r = join_weather(&mut s, &records);
        assert_eq!(r.matched, 1);
        assert_eq!(s[0].weather.unwrap().air_temp, Some(1.0));

        let mut s = vec![sample("A", "2017-12-01T00:15:00Z"), sample("A", "2017-12-01T00:15:01Z")];
        let r = join_weather(&mut s, &records);
        assert_eq!(s[0].weather.unwrap().air_temp, Some(2.0));
        assert!(s[1].weather.is_none());
        assert_eq!((r.matched, r.unmatched), (1, 1));
    }
}
