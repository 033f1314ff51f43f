//! Output formats: sample CSV, histograms and benchmark tables.

use alignppl::inference::{json_f64, InferenceOutput};
use alignppl::value::Value;
use serde_json::json;

use crate::Method;

fn csv_text(w: csv::Writer<Vec<u8>>) -> std::io::Result<String> {
    let bytes = w.into_inner().map_err(|e| e.into_error())?;
    Ok(String::from_utf8(bytes).expect("csv of utf-8 fields"))
}

pub fn samples_csv(o: &InferenceOutput) -> std::io::Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["index", "value", "logWeight"])?;
    for (i, s) in o.samples.iter().enumerate() {
        w.write_record([i.to_string(), s.value.to_string(), s.log_weight.to_string()])?;
    }
    csv_text(w)
}

fn project(v: &Value, field: Option<&str>) -> Option<f64> {
    match field {
        Some(f) => v.field(f)?.as_f64(),
        None => v.as_f64(),
    }
}

/// Weighted histogram over `bins` equal bins spanning the sample range.
pub fn histogram_csv(o: &InferenceOutput, field: Option<&str>, bins: usize) -> Result<String, String> {
    if bins == 0 {
        return Err("need at least one bin".into());
    }
    let mut pts = Vec::with_capacity(o.samples.len());
    for (s, w) in o.samples.iter().zip(o.normalized_weights()) {
        let x = project(&s.value, field).ok_or_else(|| format!("sample {} has no numeric projection", s.value))?;
        pts.push((x, w));
    }
    let lo = pts.iter().map(|p| p.0).fold(f64::INFINITY, f64::min);
    let hi = pts.iter().map(|p| p.0).fold(f64::NEG_INFINITY, f64::max);
    let width = if hi > lo { (hi - lo) / bins as f64 } else { 1.0 };
    let mut mass = vec![0.0; bins];
    let mut count = vec![0usize; bins];
    for (x, w) in pts {
        let b = (((x - lo) / width) as usize).min(bins - 1);
        mass[b] += w;
        count[b] += 1;
    }
    let mut w = csv::Writer::from_writer(Vec::new());
    let io = |e: csv::Error| e.to_string();
    w.write_record(["lo", "hi", "count", "mass"]).map_err(io)?;
    for b in 0..bins {
        let l = lo + b as f64 * width;
        w.write_record([l.to_string(), (l + width).to_string(), count[b].to_string(), mass[b].to_string()])
            .map_err(io)?;
    }
    csv_text(w).map_err(|e| e.to_string())
}

/// The number a run estimates: log Z for SMC, else the posterior mean of
/// the (projected) return value.
pub fn estimate(o: &InferenceOutput, field: Option<&str>) -> Option<f64> {
    o.log_z.or_else(|| o.mean_of(|v| project(v, field)))
}

pub struct BenchRow {
    pub method: Method,
    pub times: Vec<f64>,
    pub estimates: Vec<f64>,
}

fn mean(xs: &[f64]) -> f64 {
    xs.iter().sum::<f64>() / xs.len() as f64
}

/// Sample standard deviation; 0 for a single value.
fn stddev(xs: &[f64]) -> f64 {
    if xs.len() < 2 {
        return 0.0;
    }
    let m = mean(xs);
    (xs.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (xs.len() - 1) as f64).sqrt()
}

/// Min, lower quartile, median, upper quartile, max (linear interpolation).
fn quartiles(xs: &[f64]) -> Option<[f64; 5]> {
    if xs.is_empty() {
        return None;
    }
    let mut v = xs.to_vec();
    v.sort_by(f64::total_cmp);
    let q = |p: f64| {
        let h = p * (v.len() - 1) as f64;
        let (i, f) = (h.floor() as usize, h.fract());
        if i + 1 < v.len() {
            v[i] + f * (v[i + 1] - v[i])
        } else {
            v[i]
        }
    };
    Some([q(0.0), q(0.25), q(0.5), q(0.75), q(1.0)])
}

impl BenchRow {
    pub fn new(method: Method, times: Vec<f64>, estimates: Vec<f64>) -> Self {
        BenchRow { method, times, estimates }
    }

    fn name(&self) -> &'static str {
        match self.method {
            Method::AlignedSmc => "aligned-smc",
            Method::UnalignedSmc => "unaligned-smc",
            Method::AlignedMcmc => "aligned-mcmc",
            Method::LightweightMcmc => "lightweight-mcmc",
        }
    }
}

/// Mean time of the baseline (first row) over the mean time of `r`.
fn speedup(rows: &[BenchRow], r: &BenchRow) -> f64 {
    mean(&rows[0].times) / mean(&r.times)
}

pub fn bench_json(program: &str, repeats: usize, rows: &[BenchRow]) -> serde_json::Value {
    let rs: Vec<serde_json::Value> = rows
        .iter()
        .map(|r| {
            json!({
                "method": r.name(),
                "meanMs": json_f64(mean(&r.times)),
                "stddevMs": json_f64(stddev(&r.times)),
                "speedup": json_f64(speedup(rows, r)),
                "estimateMean": if r.estimates.is_empty() { serde_json::Value::Null } else { json_f64(mean(&r.estimates)) },
                "estimateStddev": json_f64(stddev(&r.estimates)),
                "estimateQuartiles": quartiles(&r.estimates).map(|q| q.to_vec()),
                "timesMs": r.times,
                "estimates": r.estimates,
            })
        })
        .collect();
    json!({ "program": program, "repeats": repeats, "rows": rs })
}

pub fn bench_csv(rows: &[BenchRow]) -> std::io::Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record([
        "method", "mean_ms", "stddev_ms", "speedup", "est_mean", "est_stddev", "est_min", "est_q1", "est_median", "est_q3",
        "est_max",
    ])?;
    for r in rows {
        let mut rec = vec![
            r.name().to_string(),
            mean(&r.times).to_string(),
            stddev(&r.times).to_string(),
            speedup(rows, r).to_string(),
        ];
        match quartiles(&r.estimates) {
            Some(q) => {
                rec.push(mean(&r.estimates).to_string());
                rec.push(stddev(&r.estimates).to_string());
                rec.extend(q.iter().map(|x| x.to_string()));
            }
            None => rec.extend(std::iter::repeat_n(String::new(), 7)),
        }
        w.write_record(&rec)?;
    }
    csv_text(w)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn quartiles_interpolate() {
        assert_eq!(quartiles(&[4.0, 1.0, 3.0, 2.0, 5.0]), Some([1.0, 2.0, 3.0, 4.0, 5.0]));
        assert_eq!(quartiles(&[1.0, 2.0]).unwrap()[2], 1.5);
        assert_eq!(quartiles(&[]), None);
    }

    #[test]
    fn single_repeat_has_zero_spread() {
        assert_eq!(stddev(&[3.0]), 0.0);
        assert!((stddev(&[1.0, 3.0]) - 2f64.sqrt()).abs() < 1e-12);
    }
}
