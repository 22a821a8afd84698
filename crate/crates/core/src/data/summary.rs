use crate::data::{LabeledSample, RoadCondition, NUM_CLASSES, WEATHER_FIELDS};
use crate::error::{Error, Result};

/// Descriptive statistics of a labeled dataset.
///
/// Null rates are taken over samples that carry a weather record; moments use
/// the population standard deviation over non-null values.
#[derive(Clone, Debug, PartialEq)]
pub struct DatasetSummary {
    pub total: usize,
    pub class_counts: [usize; NUM_CLASSES],
    pub with_weather: usize,
    pub null_counts: [usize; 5],
    pub means: [Option<f64>; 5],
    pub stds: [Option<f64>; 5],
}

pub fn dataset_summary(samples: &[LabeledSample]) -> Result<DatasetSummary> {
    if samples.is_empty() {
        return Err(Error::input("dataset summary of an empty sample list"));
    }
    let mut class_counts = [0; NUM_CLASSES];
    let mut null_counts = [0; 5];
    let mut values: [Vec<f64>; 5] = Default::default();
    let mut with_weather = 0;
    for s in samples {
        let c = class_counts
            .get_mut(s.label)
            .ok_or_else(|| Error::input(format!("label {} out of range", s.label)))?;
        *c += 1;
        if let Some(w) = &s.weather {
            with_weather += 1;
            for (k, v) in w.fields().into_iter().enumerate() {
                match v {
                    Some(x) => values[k].push(x),
                    None => null_counts[k] += 1,
                }
            }
        }
    }
    let mut means = [None; 5];
    let mut stds = [None; 5];
    for k in 0..5 {
        let v = &values[k];
        if v.is_empty() {
            continue;
        }
        let n = v.len() as f64;
        let m = v.iter().sum::<f64>() / n;
        means[k] = Some(m);
        stds[k] = Some((v.iter().map(|x| (x - m).powi(2)).sum::<f64>() / n).sqrt());
    }
    Ok(DatasetSummary {
        total: samples.len(),
        class_counts,
        with_weather,
        null_counts,
        means,
        stds,
    })
}

impl DatasetSummary {
    pub fn class_shares(&self) -> [f64; NUM_CLASSES] {
        self.class_counts.map(|c| c as f64 / self.total as f64)
    }

    pub fn null_rates(&self) -> [f64; 5] {
        self.null_counts.map(|c| {
            if self.with_weather == 0 {
                0.0
            } else {
                c as f64 / self.with_weather as f64
            }
        })
    }

    /// Long-format CSV `metric,field,value`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("metric,field,value\n");
        out.push_str(&format!("total,all,{}\n", self.total));
        out.push_str(&format!("with_weather,all,{}\n", self.with_weather));
        for c in RoadCondition::ALL {
            out.push_str(&format!("count,{},{}\n", c.name(), self.class_counts[c.index()]));
        }
        let shares = self.class_shares();
        for c in RoadCondition::ALL {
            out.push_str(&format!("share,{},{}\n", c.name(), shares[c.index()]));
        }
        let rates = self.null_rates();
        for (k, f) in WEATHER_FIELDS.iter().enumerate() {
            out.push_str(&format!("null_count,{f},{}\n", self.null_counts[k]));
            out.push_str(&format!("null_rate,{f},{}\n", rates[k]));
            let opt = |v: Option<f64>| v.map(|x| x.to_string()).unwrap_or_default();
            out.push_str(&format!("mean,{f},{}\n", opt(self.means[k])));
            out.push_str(&format!("std,{f},{}\n", opt(self.stds[k])));
        }
        out
    }

    /// Parses the output of [`to_csv`](Self::to_csv). Derived rows (shares,
    /// rates) are ignored and recomputed.
    pub fn from_csv(text: &str) -> Result<Self> {
        let mut s = DatasetSummary {
            total: 0,
            class_counts: [0; NUM_CLASSES],
            with_weather: 0,
            null_counts: [0; 5],
            means: [None; 5],
            stds: [None; 5],
        };
        let bad = |line: usize, why: &str| Error::input(format!("summary CSV line {line}: {why}"));
        let mut lines = text.lines().enumerate();
        match lines.next() {
            Some((_, "metric,field,value")) => {}
            _ => return Err(bad(1, "missing header")),
        }
        for (i, line) in lines {
            let n = i + 1;
            let parts: Vec<&str> = line.split(',').collect();
            let [metric, field, value] = parts[..] else {
                return Err(bad(n, "expected 3 fields"));
            };
            let count = || value.parse::<usize>().map_err(|_| bad(n, "bad count"));
            let float = || {
                if value.is_empty() {
                    Ok(None)
                } else {
                    value.parse::<f64>().map(Some).map_err(|_| bad(n, "bad number"))
                }
            };
            let feature = || {
                WEATHER_FIELDS
                    .iter()
                    .position(|f| *f == field)
                    .ok_or_else(|| bad(n, "unknown weather field"))
            };
            match metric {
                "total" => s.total = count()?,
                "with_weather" => s.with_weather = count()?,
                "count" => {
                    let c = RoadCondition::from_name(field).ok_or_else(|| bad(n, "unknown class"))?;
                    s.class_counts[c.index()] = count()?;
                }
                "null_count" => s.null_counts[feature()?] = count()?,
                "mean" => s.means[feature()?] = float()?,
                "std" => s.stds[feature()?] = float()?,
                "share" | "null_rate" => {}
                _ => return Err(bad(n, "unknown metric")),
            }
        }
        Ok(s)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::WeatherRecord;
    use crate::Tensor;

    #[test]
    fn no_nulls_means_zero_rates() {
        let w = WeatherRecord {
            air_temp: Some(1.0),
            relative_humidity: Some(50.0),
            pressure: Some(100.0),
            wind_speed: Some(3.0),
            dew_point: Some(-8.0),
        };
        let samples: Vec<_> = (0..4)
            .map(|i| LabeledSample {
                weather: Some(w),
                ..LabeledSample::new(Tensor::zeros(&[1, 1, 3]), i % 3)
            })
            .collect();
        let s = dataset_summary(&samples).unwrap();
        assert_eq!(s.null_rates(), [0.0; 5]);
        assert_eq!(s.class_counts, [2, 1, 1]);
        assert_eq!(s.stds[0], Some(0.0));
    }

    #[test]
    fn empty_rejected() {
        assert!(dataset_summary(&[]).is_err());
    }
}
