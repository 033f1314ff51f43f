//! Reference computations shared by the integration tests.
#![allow(dead_code)]

use alignppl::inference::InferenceOutput;
use alignppl::value::Value;

/// Word counts `(zeros, ones)` of the documents `let docN = [...]` in an LDA source.
pub fn lda_counts(src: &str) -> Vec<(u32, u32)> {
    src.lines()
        .filter(|l| l.trim_start().starts_with("let doc") && l.contains('['))
        .map(|l| {
            let inner = &l[l.find('[').unwrap() + 1..l.find(']').unwrap()];
            let ws: Vec<u32> = inner.split(',').map(|w| w.trim().parse().unwrap()).collect();
            let zeros = ws.iter().filter(|&&w| w == 0).count() as u32;
            (zeros, ws.len() as u32 - zeros)
        })
        .collect()
}

/// Posterior means of the two-topic LDA model with uniform priors on every
/// topic mixture and word distribution, restricted to `phi1 > phi2` (the
/// model is symmetric under swapping topics). Computed by midpoint
/// quadrature: `(theta_d for each document, phi1, phi2)`.
pub struct LdaMeans {
    pub theta: Vec<f64>,
    pub phi1: f64,
    pub phi2: f64,
}

pub fn lda_identified_means(counts: &[(u32, u32)], grid: usize) -> LdaMeans {
    let h = 1.0 / grid as f64;
    let mid = |i: usize| (i as f64 + 0.5) * h;
    let nd = counts.len();
    let (mut z, mut th, mut p1, mut p2) = (0.0, vec![0.0; nd], 0.0, 0.0);
    let mut integ = vec![(0.0, 0.0); nd];
    for i in 0..grid {
        let a = mid(i);
        for j in 0..i {
            let b = mid(j);
            // per document: integral of the likelihood over theta, and of theta times it
            for (d, &(c0, c1)) in counts.iter().enumerate() {
                let (mut s, mut st) = (0.0, 0.0);
                for k in 0..grid {
                    let t = mid(k);
                    let p0 = t * a + (1.0 - t) * b;
                    let f = p0.powi(c0 as i32) * (1.0 - p0).powi(c1 as i32);
                    s += f;
                    st += t * f;
                }
                integ[d] = (s * h, st * h);
            }
            let joint: f64 = integ.iter().map(|x| x.0).product();
            z += joint;
            p1 += a * joint;
            p2 += b * joint;
            for d in 0..nd {
                th[d] += joint / integ[d].0 * integ[d].1;
            }
        }
    }
    LdaMeans { theta: th.iter().map(|t| t / z).collect(), phi1: p1 / z, phi2: p2 / z }
}

fn get(v: &Value, k: &str) -> f64 {
    v.field(k).and_then(Value::as_f64).unwrap_or_else(|| panic!("no real field {k} in {v}"))
}

/// MCMC samples of the LDA record, mapped onto `phi1 >= phi2` by swapping
/// the topics where needed. Returns `(theta1, theta2, theta3, phi1, phi2)` means.
pub fn identified_lda_means(out: &InferenceOutput) -> [f64; 5] {
    let mut acc = [0.0; 5];
    for s in &out.samples {
        let v = &s.value;
        let mut r = [get(v, "theta1"), get(v, "theta2"), get(v, "theta3"), get(v, "phi1"), get(v, "phi2")];
        if r[3] < r[4] {
            for t in &mut r[..3] {
                *t = 1.0 - *t;
            }
            r.swap(3, 4);
        }
        for (a, x) in acc.iter_mut().zip(r) {
            *a += x;
        }
    }
    acc.map(|a| a / out.samples.len() as f64)
}

pub fn raw_mean(out: &InferenceOutput, key: &str) -> f64 {
    out.samples.iter().map(|s| get(&s.value, key)).sum::<f64>() / out.samples.len() as f64
}

/// Counts of `key` over `bins` equal bins of [0, 1].
pub fn histogram(out: &InferenceOutput, key: &str, bins: usize) -> Vec<usize> {
    let mut h = vec![0; bins];
    for s in &out.samples {
        let x = get(&s.value, key);
        h[((x * bins as f64) as usize).min(bins - 1)] += 1;
    }
    h
}

/// Two modes: the fullest bin of each half holds at least twice as many
/// samples as the emptiest bin between them.
pub fn is_bimodal(h: &[usize]) -> bool {
    let half = h.len() / 2;
    let (l, &lmax) = h[..half].iter().enumerate().max_by_key(|x| x.1).unwrap();
    let (r, &rmax) = h[half..].iter().enumerate().max_by_key(|x| x.1).unwrap();
    let valley = *h[l..=half + r].iter().min().unwrap();
    lmax >= 2 * valley.max(1) && rmax >= 2 * valley.max(1)
}

/// Output as JSON without the timing field, for reproducibility checks.
pub fn fingerprint(out: &InferenceOutput) -> String {
    let mut j = out.to_json(true);
    j.as_object_mut().unwrap().remove("wallMs");
    let mut s = j.to_string();
    s.push_str(&format!("{:?}", out.decisions));
    s
}

pub fn mean(xs: &[f64]) -> f64 {
    xs.iter().sum::<f64>() / xs.len() as f64
}

/// Unbiased sample variance.
pub fn variance(xs: &[f64]) -> f64 {
    let m = mean(xs);
    xs.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (xs.len() - 1) as f64
}

/// Delta-method standard error of `log mean w` from the final particle weights.
pub fn log_z_standard_error(out: &InferenceOutput) -> f64 {
    let lw: Vec<f64> = out.samples.iter().map(|s| s.log_weight).collect();
    let max = lw.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let w: Vec<f64> = lw.iter().map(|l| (l - max).exp()).collect();
    let m = mean(&w);
    variance(&w).sqrt() / (w.len() as f64).sqrt() / m
}
