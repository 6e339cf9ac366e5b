//! The reference anomaly detector: a fully-connected autoencoder over
//! flattened windows, trained by reconstruction loss.

use crate::error::{Error, Result};
use crate::nncore::{self, Activation, LossKind, Network, OptimizerState};
use crate::windows::{SampleSet, TimeSeries, WindowSample};
use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::io::{BufReader, BufWriter};
use std::path::Path;

const CHECKPOINT_VERSION: u32 = 1;

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq, Eq)]
pub struct DetectorConfig {
    /// Window length.
    pub w: usize,
    /// Feature dimension of the series.
    pub d: usize,
    pub bottleneck: usize,
    /// Hidden sizes of the encoder half; the decoder mirrors them.
    pub hidden: Vec<usize>,
}

impl DetectorConfig {
    pub fn validate(&self) -> Result<()> {
        if self.w == 0 || self.d == 0 || self.bottleneck == 0 {
            return Err(Error::InvalidArgument(
                "detector sizes must be positive".into(),
            ));
        }
        if self.bottleneck >= self.w * self.d {
            return Err(Error::InvalidArgument(format!(
                "bottleneck {} must be smaller than the flattened window {} (true compression)",
                self.bottleneck,
                self.w * self.d
            )));
        }
        if self.hidden.contains(&0) {
            return Err(Error::InvalidArgument(
                "hidden sizes must be positive".into(),
            ));
        }
        Ok(())
    }

    fn layer_sizes(&self) -> Vec<usize> {
        let io = self.w * self.d;
        let mut sizes = vec![io];
        sizes.extend(&self.hidden);
        sizes.push(self.bottleneck);
        sizes.extend(self.hidden.iter().rev());
        sizes.push(io);
        sizes
    }
}

#[derive(Debug, Clone)]
pub struct Detector {
    pub config: DetectorConfig,
    pub net: Network,
}

impl Detector {
    /// Tanh hidden layers, identity output, seeded uniform init.
    pub fn new<R: Rng>(config: DetectorConfig, rng: &mut R) -> Result<Self> {
        config.validate()?;
        let sizes = config.layer_sizes();
        let mut acts = vec![Activation::Tanh; sizes.len() - 2];
        acts.push(Activation::Identity);
        let mut net = Network::new(sizes, acts)?;
        net.init_uniform(rng);
        Ok(Detector { config, net })
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let file = std::fs::File::create(path)?;
        let ckpt = Checkpoint {
            version: CHECKPOINT_VERSION,
            config: self.config.clone(),
            net: self.net.clone(),
        };
        serde_json::to_writer(BufWriter::new(file), &ckpt)?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self> {
        let file = std::fs::File::open(path)?;
        let ckpt: Checkpoint = serde_json::from_reader(BufReader::new(file))?;
        if ckpt.version != CHECKPOINT_VERSION {
            return Err(Error::Checkpoint(format!(
                "unsupported checkpoint version {}",
                ckpt.version
            )));
        }
        ckpt.config.validate()?;
        Ok(Detector {
            config: ckpt.config,
            net: ckpt.net,
        })
    }
}

#[derive(Serialize, Deserialize)]
struct Checkpoint {
    version: u32,
    config: DetectorConfig,
    net: Network,
}

/// Mean squared reconstruction error over the flattened window.
pub fn sample_loss(det: &Detector, series: &TimeSeries, s: &WindowSample) -> Result<f64> {
    let win = series.window(s.start, s.w)?;
    nncore::loss(&det.net, win, win, LossKind::Mse)
}

/// Per-point anomaly scores: mean of sample_loss over all stride-1 windows
/// covering each point.
pub fn anomaly_scores(det: &Detector, series: &TimeSeries, w: usize) -> Result<Vec<f64>> {
    let n = series.len();
    if n < w {
        return Err(Error::SeriesTooShort { n, w });
    }
    let mut acc = vec![0.0; n];
    let mut cover = vec![0u32; n];
    for start in 0..=n - w {
        let win = series.window(start, w)?;
        let l = nncore::loss(&det.net, win, win, LossKind::Mse)?;
        for p in start..start + w {
            acc[p] += l;
            cover[p] += 1;
        }
    }
    for p in 0..n {
        acc[p] /= cover[p] as f64;
    }
    Ok(acc)
}

/// One full pass over `set` in shuffled mini-batches. Returns the loss of
/// each sample recorded at its visit (before that batch's update).
pub fn train_epoch<R: Rng>(
    det: &mut Detector,
    set: &SampleSet,
    opt: &mut OptimizerState,
    batch_size: usize,
    rng: &mut R,
) -> Result<BTreeMap<u64, f64>> {
    if set.is_empty() {
        return Err(Error::EmptyBatch);
    }
    if batch_size == 0 {
        return Err(Error::InvalidArgument("batch size must be positive".into()));
    }
    let mut order: Vec<WindowSample> = set.samples().collect();
    order.shuffle(rng);
    let mut losses = BTreeMap::new();
    for chunk in order.chunks(batch_size) {
        let mut grad = vec![0.0; det.net.param_count()];
        for s in chunk {
            let win = set.series().window(s.start, s.w)?;
            let (l, g) = nncore::loss_and_grad(&det.net, win, win, LossKind::Mse)?;
            losses.insert(s.id, l);
            for (a, b) in grad.iter_mut().zip(&g) {
                *a += b;
            }
        }
        let inv = 1.0 / chunk.len() as f64;
        for g in &mut grad {
            *g *= inv;
        }
        nncore::optimizer_step(opt, &mut det.net, &grad)?;
    }
    Ok(losses)
}

/// Mean sample_loss over the no-overlap windows of `series`; used as the
/// validation metric for early stopping.
pub fn mean_window_loss(det: &Detector, series: &TimeSeries, w: usize) -> Result<f64> {
    let n = series.len();
    if n < w {
        return Err(Error::SeriesTooShort { n, w });
    }
    let mut sum = 0.0;
    let mut count = 0usize;
    let mut start = 0;
    while start + w <= n {
        let win = series.window(start, w)?;
        sum += nncore::loss(&det.net, win, win, LossKind::Mse)?;
        count += 1;
        start += w;
    }
    Ok(sum / count as f64)
}
