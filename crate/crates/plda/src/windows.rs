//! Time-series storage, the window-sample registry, and the adaptive
//! sliding-window action space (expand / preserve / delete) with its
//! coprime offset algebra and state-transition rule.

use crate::error::{Error, Result};
use rand::Rng;
use serde::{Deserialize, Serialize};
use std::collections::{BTreeMap, BTreeSet, VecDeque};
use std::sync::Arc;

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TimeSeries {
    pub name: String,
    n: usize,
    d: usize,
    /// Row-major N x D.
    data: Vec<f64>,
    pub labels: Option<Vec<u8>>,
}

impl TimeSeries {
    pub fn new(
        name: impl Into<String>,
        data: Vec<f64>,
        d: usize,
        labels: Option<Vec<u8>>,
    ) -> Result<Self> {
        if d == 0 || data.is_empty() || !data.len().is_multiple_of(d) {
            return Err(Error::InvalidArgument(format!(
                "series data length {} not a positive multiple of dimension {}",
                data.len(),
                d
            )));
        }
        let n = data.len() / d;
        if let Some(l) = &labels {
            if l.len() != n {
                return Err(Error::DimensionMismatch {
                    what: "label vector",
                    expected: n,
                    got: l.len(),
                });
            }
        }
        Ok(TimeSeries {
            name: name.into(),
            n,
            d,
            data,
            labels,
        })
    }

    pub fn univariate(
        name: impl Into<String>,
        values: Vec<f64>,
        labels: Option<Vec<u8>>,
    ) -> Result<Self> {
        TimeSeries::new(name, values, 1, labels)
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    pub fn dim(&self) -> usize {
        self.d
    }

    pub fn point(&self, i: usize) -> &[f64] {
        &self.data[i * self.d..(i + 1) * self.d]
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [f64] {
        &mut self.data
    }

    /// Flattened window contents, `w * d` values starting at `start`.
    pub fn window(&self, start: usize, w: usize) -> Result<&[f64]> {
        if start + w > self.n {
            return Err(Error::WindowOutOfBounds {
                start,
                start_plus_w: start + w,
                n: self.n,
            });
        }
        Ok(&self.data[start * self.d..(start + w) * self.d])
    }

    /// Sub-series over the point range `[from, to)`.
    pub fn slice(&self, from: usize, to: usize) -> Result<TimeSeries> {
        if from >= to || to > self.n {
            return Err(Error::InvalidArgument(format!(
                "bad slice [{from}, {to}) of series with {} points",
                self.n
            )));
        }
        TimeSeries::new(
            format!("{}[{from}..{to}]", self.name),
            self.data[from * self.d..to * self.d].to_vec(),
            self.d,
            self.labels.as_ref().map(|l| l[from..to].to_vec()),
        )
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct WindowSample {
    pub id: u64,
    pub start: usize,
    pub w: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Action {
    Expand,
    Preserve,
    Delete,
}

impl Action {
    pub const ALL: [Action; 3] = [Action::Expand, Action::Preserve, Action::Delete];

    pub fn index(self) -> usize {
        match self {
            Action::Expand => 0,
            Action::Preserve => 1,
            Action::Delete => 2,
        }
    }

    pub fn from_index(i: usize) -> Option<Action> {
        Action::ALL.get(i).copied()
    }
}

impl std::fmt::Display for Action {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Action::Expand => write!(f, "expand"),
            Action::Preserve => write!(f, "preserve"),
            Action::Delete => write!(f, "delete"),
        }
    }
}

/// The mutable training-set registry: window samples over one series,
/// keyed by start offset (set semantics, unique starts).
#[derive(Debug, Clone)]
pub struct SampleSet {
    series: Arc<TimeSeries>,
    w: usize,
    by_start: BTreeMap<usize, u64>,
    next_id: u64,
}

#[derive(Debug, Clone, Default)]
pub struct ActionOutcome {
    pub added: Vec<WindowSample>,
    pub removed: Option<WindowSample>,
    /// True when a delete on the last remaining sample degraded to preserve.
    pub guard_triggered: bool,
}

impl SampleSet {
    pub fn series(&self) -> &TimeSeries {
        &self.series
    }

    pub fn series_arc(&self) -> Arc<TimeSeries> {
        Arc::clone(&self.series)
    }

    pub fn window_len(&self) -> usize {
        self.w
    }

    pub fn len(&self) -> usize {
        self.by_start.len()
    }

    pub fn is_empty(&self) -> bool {
        self.by_start.is_empty()
    }

    pub fn contains_start(&self, start: usize) -> bool {
        self.by_start.contains_key(&start)
    }

    /// Samples in start order.
    pub fn samples(&self) -> impl Iterator<Item = WindowSample> + '_ {
        self.by_start.iter().map(move |(&start, &id)| WindowSample {
            id,
            start,
            w: self.w,
        })
    }

    pub fn contents(&self, s: &WindowSample) -> Result<&[f64]> {
        self.series.window(s.start, s.w)
    }

    /// Uniform random member.
    pub fn choose<R: Rng>(&self, rng: &mut R) -> Option<WindowSample> {
        if self.by_start.is_empty() {
            return None;
        }
        let idx = rng.random_range(0..self.by_start.len());
        self.samples().nth(idx)
    }

    fn insert(&mut self, start: usize) -> WindowSample {
        let id = self.next_id;
        self.next_id += 1;
        self.by_start.insert(start, id);
        WindowSample {
            id,
            start,
            w: self.w,
        }
    }
}

/// No-overlap sliding window: samples at starts 0, w, 2w, ...; a trailing
/// partial window is dropped.
pub fn initial_windows(series: Arc<TimeSeries>, w: usize) -> Result<SampleSet> {
    if w == 0 {
        return Err(Error::InvalidArgument(
            "window length must be positive".into(),
        ));
    }
    if series.len() < w {
        return Err(Error::SeriesTooShort { n: series.len(), w });
    }
    let mut set = SampleSet {
        series,
        w,
        by_start: BTreeMap::new(),
        next_id: 0,
    };
    let n = set.series.len();
    let mut start = 0;
    while start + w <= n {
        set.insert(start);
        start += w;
    }
    Ok(set)
}

fn gcd(a: usize, b: usize) -> usize {
    if b == 0 {
        a
    } else {
        gcd(b, a % b)
    }
}

/// Splits `w` into coprime offsets `w1 < w2` with `w1 + w2 = w`. Odd `w`
/// uses ((w-1)/2, (w+1)/2); even `w` searches outward from w/2 for the
/// nearest coprime pair.
pub fn coprime_split(w: usize) -> Result<(usize, usize)> {
    if w < 3 {
        return Err(Error::InvalidArgument(format!(
            "coprime split needs w >= 3, got {w}"
        )));
    }
    if w % 2 == 1 {
        return Ok((w / 2, w / 2 + 1));
    }
    let mut w1 = w / 2;
    loop {
        let w2 = w - w1;
        if w1 < w2 && gcd(w1, w2) == 1 {
            return Ok((w1, w2));
        }
        w1 -= 1;
        if w1 == 0 {
            // unreachable for w >= 3: (1, w-1) is always coprime
            return Err(Error::InvalidArgument(format!("no coprime split for {w}")));
        }
    }
}

/// Applies one augmentation action to the registry. Expansion inserts the
/// four coprime-offset windows, skipping out-of-bounds or duplicate starts.
/// Deleting the last remaining sample degrades to preserve (guard event).
pub fn apply_action(
    set: &mut SampleSet,
    s: &WindowSample,
    action: Action,
) -> Result<ActionOutcome> {
    if set.by_start.get(&s.start) != Some(&s.id) {
        return Err(Error::SampleNotInSet { start: s.start });
    }
    let mut outcome = ActionOutcome::default();
    match action {
        Action::Preserve => {}
        Action::Delete => {
            if set.len() == 1 {
                outcome.guard_triggered = true;
            } else {
                set.by_start.remove(&s.start);
                outcome.removed = Some(*s);
            }
        }
        Action::Expand => {
            let (w1, w2) = coprime_split(set.w)?;
            let n = set.series.len();
            let max_start = n - set.w;
            let offsets: [(bool, usize); 4] = [(true, w1), (false, w2), (true, w2), (false, w1)];
            for (neg, o) in offsets {
                let start = if neg {
                    match s.start.checked_sub(o) {
                        Some(v) => v,
                        None => continue,
                    }
                } else {
                    let v = s.start + o;
                    if v > max_start {
                        continue;
                    }
                    v
                };
                if start > max_start || set.by_start.contains_key(&start) {
                    continue;
                }
                outcome.added.push(set.insert(start));
            }
        }
    }
    Ok(outcome)
}

/// Euclidean distance between the flattened contents of two windows.
pub fn window_distance(a: &[f64], b: &[f64]) -> Result<f64> {
    if a.len() != b.len() {
        return Err(Error::DimensionMismatch {
            what: "window contents",
            expected: a.len(),
            got: b.len(),
        });
    }
    Ok(a.iter()
        .zip(b)
        .map(|(&x, &y)| (x - y) * (x - y))
        .sum::<f64>()
        .sqrt())
}

/// State transition G: with probability `p_explore` a uniform random member
/// (G_r); otherwise G_a picks the closest member for expand/delete and the
/// farthest for preserve, excluding `s_t` itself when alternatives exist.
/// Ties break toward the lower start.
pub fn transition<R: Rng>(
    set: &SampleSet,
    s_t: &WindowSample,
    action: Action,
    p_explore: f64,
    rng: &mut R,
) -> Result<WindowSample> {
    if set.is_empty() {
        return Err(Error::EmptyBatch);
    }
    if p_explore > 0.0 && rng.random_range(0.0..1.0) < p_explore {
        return Ok(set.choose(rng).unwrap());
    }
    let reference = set.series.window(s_t.start, s_t.w)?.to_vec();
    let mut best: Option<(f64, WindowSample)> = None;
    let exclude_self = set.len() > 1;
    for cand in set.samples() {
        if exclude_self && cand.start == s_t.start {
            continue;
        }
        let d = window_distance(&reference, set.contents(&cand)?)?;
        let better = match &best {
            None => true,
            Some((bd, _)) => match action {
                Action::Expand | Action::Delete => d < *bd,
                Action::Preserve => d > *bd,
            },
        };
        if better {
            best = Some((d, cand));
        }
    }
    Ok(best.unwrap().1)
}

/// BFS closure of sums of the four expansion offsets within `[-bound, bound]`.
/// Test-facing realization of the reachability argument.
pub fn reachable_offsets(w: usize, bound: i64) -> Result<BTreeSet<i64>> {
    let (w1, w2) = coprime_split(w)?;
    let steps = [-(w1 as i64), w2 as i64, -(w2 as i64), w1 as i64];
    let mut seen = BTreeSet::new();
    let mut queue = VecDeque::new();
    seen.insert(0i64);
    queue.push_back(0i64);
    while let Some(cur) = queue.pop_front() {
        for &st in &steps {
            let next = cur + st;
            if next.abs() <= bound && seen.insert(next) {
                queue.push_back(next);
            }
        }
    }
    Ok(seen)
}
