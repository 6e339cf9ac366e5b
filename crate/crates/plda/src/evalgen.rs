//! Synthetic contaminated benchmarks, point-adjusted best-F1 evaluation,
//! AC/HS bookkeeping, and the frequency-domain gradient harness.

use crate::error::{Error, Result};
use crate::nncore::{Activation, Network};
use crate::windows::{SampleSet, TimeSeries, WindowSample};
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use rustfft::num_complex::Complex64;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AnomalyKind {
    Spike,
    LevelShift,
    FreqShift,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct AnomalySegment {
    pub start: usize,
    pub length: usize,
    pub kind: AnomalyKind,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct HardSegment {
    pub start: usize,
    pub length: usize,
    /// Extra noise amplitude inside the segment: hard but genuinely normal.
    pub jitter: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SyntheticSpec {
    pub n: usize,
    pub d: usize,
    /// (frequency in cycles over the whole series, amplitude, phase)
    pub sinusoids: Vec<(f64, f64, f64)>,
    pub noise_sigma: f64,
    /// Applied to the test series (labeled ground truth).
    pub anomalies: Vec<AnomalySegment>,
    /// Applied to the train series (high-loss but normal regions).
    pub hard_segments: Vec<HardSegment>,
}

impl SyntheticSpec {
    pub fn validate(&self) -> Result<()> {
        if self.n == 0 || self.d == 0 {
            return Err(Error::InvalidArgument("n and d must be positive".into()));
        }
        for a in &self.anomalies {
            if a.length == 0 || a.start + a.length > self.n {
                return Err(Error::InvalidArgument(format!(
                    "anomaly segment [{}, {}) out of bounds",
                    a.start,
                    a.start + a.length
                )));
            }
        }
        for h in &self.hard_segments {
            if h.length == 0 || h.start + h.length > self.n {
                return Err(Error::InvalidArgument(format!(
                    "hard segment [{}, {}) out of bounds",
                    h.start,
                    h.start + h.length
                )));
            }
        }
        // anomaly and hard segments must not overlap
        for a in &self.anomalies {
            for h in &self.hard_segments {
                if a.start < h.start + h.length && h.start < a.start + a.length {
                    return Err(Error::InvalidArgument(format!(
                        "anomaly [{}, {}) overlaps hard segment [{}, {})",
                        a.start,
                        a.start + a.length,
                        h.start,
                        h.start + h.length
                    )));
                }
            }
        }
        Ok(())
    }

    fn base_point(&self, i: usize, dim: usize, n: usize) -> f64 {
        let t = i as f64 / n as f64;
        self.sinusoids
            .iter()
            .map(|&(f, a, phase)| {
                a * (2.0 * std::f64::consts::PI * f * t + phase + 0.4 * dim as f64).sin()
            })
            .sum()
    }
}

/// Deterministic synthetic benchmark: a clean train series (with hard
/// segments) and a labeled test series (with anomaly segments).
pub fn generate(spec: &SyntheticSpec, seed: u64) -> Result<(TimeSeries, TimeSeries)> {
    use rand::SeedableRng;
    spec.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let noise = Normal::new(0.0, spec.noise_sigma.max(1e-12)).unwrap();

    let mut train = vec![0.0; spec.n * spec.d];
    for i in 0..spec.n {
        for dim in 0..spec.d {
            train[i * spec.d + dim] = spec.base_point(i, dim, spec.n) + noise.sample(&mut rng);
        }
    }
    for h in &spec.hard_segments {
        for i in h.start..h.start + h.length {
            for dim in 0..spec.d {
                train[i * spec.d + dim] += rng.random_range(-h.jitter..=h.jitter);
            }
        }
    }

    let mut test = vec![0.0; spec.n * spec.d];
    let mut labels = vec![0u8; spec.n];
    for i in 0..spec.n {
        for dim in 0..spec.d {
            test[i * spec.d + dim] = spec.base_point(i, dim, spec.n) + noise.sample(&mut rng);
        }
    }
    for a in &spec.anomalies {
        let range = a.start..a.start + a.length;
        match a.kind {
            AnomalyKind::Spike => {
                for i in range.clone() {
                    for dim in 0..spec.d {
                        let sign = if (i + dim) % 2 == 0 { 1.0 } else { -1.0 };
                        test[i * spec.d + dim] += sign * rng.random_range(2.5..3.5);
                    }
                }
            }
            AnomalyKind::LevelShift => {
                let shift = rng.random_range(2.5..3.5);
                for i in range.clone() {
                    for dim in 0..spec.d {
                        test[i * spec.d + dim] += shift;
                    }
                }
            }
            AnomalyKind::FreqShift => {
                for i in range.clone() {
                    let t = i as f64 / spec.n as f64;
                    for dim in 0..spec.d {
                        test[i * spec.d + dim] = 2.5
                            * (2.0 * std::f64::consts::PI * 40.0 * spec.n as f64 / 100.0 * t).sin()
                            + noise.sample(&mut rng);
                    }
                }
            }
        }
        for i in range {
            labels[i] = 1;
        }
    }

    let train = TimeSeries::new("synthetic-train", train, spec.d, None)?;
    let test = TimeSeries::new("synthetic-test", test, spec.d, Some(labels))?;
    Ok((train, test))
}

/// Extracts the labeled anomaly segments of a test series as a pool for
/// contamination injection.
pub fn anomaly_pool(test: &TimeSeries) -> Vec<Vec<f64>> {
    let labels = match &test.labels {
        Some(l) => l,
        None => return Vec::new(),
    };
    let mut pool = Vec::new();
    let mut i = 0;
    while i < test.len() {
        if labels[i] == 1 {
            let start = i;
            while i < test.len() && labels[i] == 1 {
                i += 1;
            }
            pool.push(test.data()[start * test.dim()..i * test.dim()].to_vec());
        } else {
            i += 1;
        }
    }
    pool
}

/// Replaces random train segments with pool anomalies until the flagged
/// point fraction reaches `ratio`. Returns the contaminated series and
/// per-point anomaly-contamination flags.
pub fn inject_contamination(
    train: &TimeSeries,
    pool: &[Vec<f64>],
    ratio: f64,
    seed: u64,
) -> Result<(TimeSeries, Vec<u8>)> {
    use rand::SeedableRng;
    if !(0.0..=0.5).contains(&ratio) {
        return Err(Error::InvalidArgument(format!(
            "contamination ratio {ratio} outside [0, 0.5]"
        )));
    }
    let mut flags = vec![0u8; train.len()];
    if ratio == 0.0 {
        return Ok((train.clone(), flags));
    }
    if pool.is_empty() {
        return Err(Error::PoolTooSmall { ratio });
    }
    let d = train.dim();
    let n = train.len();
    let mut data = train.data().to_vec();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut flagged = 0usize;
    let mut attempts = 0usize;
    while (flagged as f64) < ratio * n as f64 {
        attempts += 1;
        if attempts > 10_000 {
            return Err(Error::PoolTooSmall { ratio });
        }
        let seg = &pool[rng.random_range(0..pool.len())];
        let seg_len = seg.len() / d;
        if seg_len == 0 || seg_len > n {
            continue;
        }
        let start = rng.random_range(0..=n - seg_len);
        if flags[start..start + seg_len].contains(&1) {
            continue;
        }
        data[start * d..(start + seg_len) * d].copy_from_slice(seg);
        for f in &mut flags[start..start + seg_len] {
            *f = 1;
        }
        flagged += seg_len;
    }
    let out = TimeSeries::new(format!("{}-contaminated", train.name), data, d, None)?;
    Ok((out, flags))
}

/// HS labeling rule: samples free of AC points whose baseline loss strictly
/// exceeds the given loss quantile.
pub fn label_hard_samples(
    samples: &[WindowSample],
    losses: &BTreeMap<u64, f64>,
    ac_flags: &[u8],
    quantile: f64,
) -> Result<Vec<bool>> {
    if !(0.0..=1.0).contains(&quantile) {
        return Err(Error::InvalidArgument(format!(
            "quantile {quantile} outside [0, 1]"
        )));
    }
    let mut all: Vec<f64> = Vec::with_capacity(samples.len());
    for s in samples {
        let l = losses.get(&s.id).ok_or(Error::DimensionMismatch {
            what: "loss map",
            expected: samples.len(),
            got: losses.len(),
        })?;
        all.push(*l);
    }
    let threshold = quantile_of(&all, quantile);
    Ok(samples
        .iter()
        .zip(&all)
        .map(|(s, &l)| {
            let overlaps_ac = ac_flags[s.start..(s.start + s.w).min(ac_flags.len())].contains(&1);
            !overlaps_ac && l > threshold
        })
        .collect())
}

fn quantile_of(values: &[f64], q: f64) -> f64 {
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    let pos = q * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    if lo == hi {
        sorted[lo]
    } else {
        sorted[lo] + (pos - lo as f64) * (sorted[hi] - sorted[lo])
    }
}

/// Expands per-sample HS flags to per-point flags (a point is HS-flagged if
/// any HS sample covers it).
pub fn hs_point_flags(samples: &[WindowSample], hs: &[bool], n: usize) -> Vec<u8> {
    let mut flags = vec![0u8; n];
    for (s, &is_hs) in samples.iter().zip(hs) {
        if is_hs {
            for f in &mut flags[s.start..(s.start + s.w).min(n)] {
                *f = 1;
            }
        }
    }
    flags
}

/// AC/HS fractions of the current sample set. AC takes precedence: a sample
/// overlapping any AC point counts as AC; otherwise it counts as HS if it
/// overlaps an HS-flagged point.
pub fn track_proportions(set: &SampleSet, ac_flags: &[u8], hs_flags: &[u8]) -> (f64, f64) {
    let mut ac = 0usize;
    let mut hs = 0usize;
    let total = set.len();
    for s in set.samples() {
        let end = (s.start + s.w).min(ac_flags.len());
        if ac_flags[s.start..end].contains(&1) {
            ac += 1;
        } else if hs_flags[s.start..end.min(hs_flags.len())].contains(&1) {
            hs += 1;
        }
    }
    (ac as f64 / total as f64, hs as f64 / total as f64)
}

/// Point adjustment: within each maximal contiguous label-1 segment, every
/// point's score becomes the segment maximum.
pub fn point_adjust(scores: &[f64], labels: &[u8]) -> Result<Vec<f64>> {
    if scores.len() != labels.len() {
        return Err(Error::DimensionMismatch {
            what: "labels",
            expected: scores.len(),
            got: labels.len(),
        });
    }
    let mut out = scores.to_vec();
    let mut i = 0;
    while i < labels.len() {
        if labels[i] == 1 {
            let start = i;
            while i < labels.len() && labels[i] == 1 {
                i += 1;
            }
            let max = scores[start..i]
                .iter()
                .cloned()
                .fold(f64::NEG_INFINITY, f64::max);
            for v in &mut out[start..i] {
                *v = max;
            }
        } else {
            i += 1;
        }
    }
    Ok(out)
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EvalResult {
    pub best_f1: f64,
    pub best_threshold: f64,
    pub precision: f64,
    pub recall: f64,
    pub adjusted_scores: Vec<f64>,
}

/// Best F1 over every distinct score threshold (prediction: score >=
/// threshold). Ties break toward the lower threshold.
pub fn best_f1(scores: &[f64], labels: &[u8], adjust: bool) -> Result<EvalResult> {
    if scores.len() != labels.len() {
        return Err(Error::DimensionMismatch {
            what: "labels",
            expected: scores.len(),
            got: labels.len(),
        });
    }
    let pos = labels.iter().filter(|&&l| l == 1).count();
    if pos == 0 || pos == labels.len() {
        return Err(Error::DegenerateLabels);
    }
    let adjusted = if adjust {
        point_adjust(scores, labels)?
    } else {
        scores.to_vec()
    };
    let mut thresholds: Vec<f64> = adjusted.to_vec();
    thresholds.sort_by(f64::total_cmp);
    thresholds.dedup();

    let mut best = EvalResult {
        best_f1: -1.0,
        best_threshold: f64::NAN,
        precision: 0.0,
        recall: 0.0,
        adjusted_scores: Vec::new(),
    };
    for &th in &thresholds {
        let mut tp = 0usize;
        let mut fp = 0usize;
        let mut fneg = 0usize;
        for (&s, &l) in adjusted.iter().zip(labels) {
            let pred = s >= th;
            match (pred, l == 1) {
                (true, true) => tp += 1,
                (true, false) => fp += 1,
                (false, true) => fneg += 1,
                _ => {}
            }
        }
        let precision = if tp + fp == 0 {
            0.0
        } else {
            tp as f64 / (tp + fp) as f64
        };
        let recall = if tp + fneg == 0 {
            0.0
        } else {
            tp as f64 / (tp + fneg) as f64
        };
        let f1 = if precision + recall == 0.0 {
            0.0
        } else {
            2.0 * precision * recall / (precision + recall)
        };
        if f1 > best.best_f1 || (f1 == best.best_f1 && th < best.best_threshold) {
            best.best_f1 = f1;
            best.best_threshold = th;
            best.precision = precision;
            best.recall = recall;
        }
    }
    best.adjusted_scores = adjusted;
    Ok(best)
}

/// Discrete Fourier amplitude per nonnegative frequency bin of the window's
/// per-dimension average signal. Amplitudes are scaled so that the sum of
/// their squares equals the signal energy (Parseval).
pub fn spectrum(window: &[f64], d: usize) -> Result<(Vec<usize>, Vec<f64>)> {
    if d == 0 || window.is_empty() || !window.len().is_multiple_of(d) {
        return Err(Error::InvalidArgument(
            "window length must be a positive multiple of d".into(),
        ));
    }
    let w = window.len() / d;
    if w < 2 {
        return Err(Error::InvalidArgument("spectrum needs w >= 2".into()));
    }
    let signal: Vec<f64> = (0..w)
        .map(|i| window[i * d..(i + 1) * d].iter().sum::<f64>() / d as f64)
        .collect();
    let coeffs = dft(&signal);
    let half = w / 2;
    let mut bins = Vec::with_capacity(half + 1);
    let mut amps = Vec::with_capacity(half + 1);
    for k in 0..=half {
        let boundary = k == 0 || (w.is_multiple_of(2) && k == half);
        let scale = if boundary { 1.0 } else { 2.0 };
        bins.push(k);
        amps.push((scale * coeffs[k].norm_sqr() / w as f64).sqrt());
    }
    Ok((bins, amps))
}

fn dft(signal: &[f64]) -> Vec<Complex64> {
    let mut buf: Vec<Complex64> = signal.iter().map(|&v| Complex64::new(v, 0.0)).collect();
    FftPlanner::new()
        .plan_fft_forward(buf.len())
        .process(&mut buf);
    buf
}

/// Per-frequency gradient magnitudes of a one-hidden-layer tanh scalar net
/// against a target signal sampled on the grid i/N.
///
/// For each bin f the per-frequency loss is half the squared residual
/// amplitude |F(D)(f) - F(y)(f)|^2 / 2; the returned magnitude sums
/// |dL_f / d theta_j| over all parameters, which is linear in the residual
/// amplitude A(f).
#[derive(Debug, Clone)]
pub struct FrequencyDecay {
    pub bins: Vec<usize>,
    pub magnitudes: Vec<f64>,
    /// |J(f)|: amplitude of the residual at each bin.
    pub residual_amplitudes: Vec<f64>,
    /// Amplitude spectrum of the target signal itself.
    pub signal_amplitudes: Vec<f64>,
}

pub fn frequency_gradient_decay(net: &Network, signal: &[f64]) -> Result<FrequencyDecay> {
    if net.sizes().len() != 3
        || net.input_len() != 1
        || net.output_len() != 1
        || net.activations()[0] != Activation::Tanh
        || net.activations()[1] != Activation::Identity
    {
        return Err(Error::InvalidArgument(
            "frequency decay needs a 1 -> hidden(tanh) -> 1(identity) network".into(),
        ));
    }
    let n = signal.len();
    if n < 4 {
        return Err(Error::InvalidArgument("signal too short".into()));
    }
    let p = net.param_count();

    let mut outputs = vec![0.0; n];
    // param-jacobian of the scalar output at each grid point
    let mut jac = vec![vec![0.0; n]; p];
    for (t, out) in outputs.iter_mut().enumerate() {
        let x = [t as f64 / n as f64];
        *out = net.forward(&x)?[0];
        let g = net.output_grad(&x, 0)?;
        for (j, &gj) in g.iter().enumerate() {
            jac[j][t] = gj;
        }
    }

    let f_out = dft(&outputs);
    let f_sig = dft(signal);
    let f_jac: Vec<Vec<Complex64>> = jac.iter().map(|row| dft(row)).collect();

    let half = n / 2;
    let mut decay = FrequencyDecay {
        bins: Vec::with_capacity(half),
        magnitudes: Vec::with_capacity(half),
        residual_amplitudes: Vec::with_capacity(half),
        signal_amplitudes: Vec::with_capacity(half),
    };
    for k in 1..=half {
        let residual = f_out[k] - f_sig[k];
        let amp = residual.norm();
        // d(|J|^2 / 2)/d theta_j = Re(conj(J) * dJ/d theta_j)
        let magnitude = if amp < 1e-12 {
            0.0
        } else {
            f_jac
                .iter()
                .map(|row| (residual.conj() * row[k]).re.abs())
                .sum()
        };
        decay.bins.push(k);
        decay.magnitudes.push(magnitude);
        decay.residual_amplitudes.push(amp);
        decay.signal_amplitudes.push(f_sig[k].norm());
    }
    Ok(decay)
}

/// Spearman rank correlation.
pub fn spearman(xs: &[f64], ys: &[f64]) -> Result<f64> {
    if xs.len() != ys.len() {
        return Err(Error::DimensionMismatch {
            what: "spearman inputs",
            expected: xs.len(),
            got: ys.len(),
        });
    }
    if xs.len() < 2 {
        return Err(Error::InvalidArgument("need at least 2 points".into()));
    }
    let rx = ranks(xs);
    let ry = ranks(ys);
    pearson(&rx, &ry)
}

fn ranks(v: &[f64]) -> Vec<f64> {
    let mut idx: Vec<usize> = (0..v.len()).collect();
    idx.sort_by(|&a, &b| v[a].total_cmp(&v[b]));
    let mut out = vec![0.0; v.len()];
    let mut i = 0;
    while i < idx.len() {
        let mut j = i;
        while j + 1 < idx.len() && v[idx[j + 1]] == v[idx[i]] {
            j += 1;
        }
        let avg = (i + j) as f64 / 2.0 + 1.0;
        for &k in &idx[i..=j] {
            out[k] = avg;
        }
        i = j + 1;
    }
    out
}

fn pearson(xs: &[f64], ys: &[f64]) -> Result<f64> {
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let mut cov = 0.0;
    let mut vx = 0.0;
    let mut vy = 0.0;
    for (&x, &y) in xs.iter().zip(ys) {
        cov += (x - mx) * (y - my);
        vx += (x - mx) * (x - mx);
        vy += (y - my) * (y - my);
    }
    if vx == 0.0 || vy == 0.0 {
        return Err(Error::InvalidArgument(
            "zero variance in correlation".into(),
        ));
    }
    Ok(cov / (vx * vy).sqrt())
}

/// Rank-based AUC of `scores` separating positives from negatives.
pub fn auc(scores_pos: &[f64], scores_neg: &[f64]) -> Result<f64> {
    if scores_pos.is_empty() || scores_neg.is_empty() {
        return Err(Error::DegenerateLabels);
    }
    let mut wins = 0.0;
    for &p in scores_pos {
        for &q in scores_neg {
            if p > q {
                wins += 1.0;
            } else if p == q {
                wins += 0.5;
            }
        }
    }
    Ok(wins / (scores_pos.len() * scores_neg.len()) as f64)
}
