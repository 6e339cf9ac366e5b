//! Orchestration of the full pipeline: alternating detector training and
//! agent-driven augmentation, then training to convergence on the final set.

use crate::agent::{
    q_values, select_action, state_features, warm_start, QAgent, ReplayMemory, Transition,
};
use crate::behavior::{
    behavior_center, dual_reward, normalize_rewards, parameter_behavior, select_key_parameters,
    BehaviorRecord, HessianContext, HessianMode, KeyParams,
};
use crate::detector::{mean_window_loss, sample_loss, train_epoch, Detector, DetectorConfig};
use crate::error::{Error, Result};
use crate::nncore::OptimizerState;
use crate::windows::{apply_action, initial_windows, transition, SampleSet, TimeSeries};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::sync::Arc;
use std::time::Instant;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    pub w: usize,
    pub e: usize,
    pub alpha: f64,
    pub k: usize,
    pub gamma: f64,
    pub p_explore: f64,
    /// Augmentation iterations per epoch; None means |S_i|.
    pub n_iters: Option<usize>,
    pub sync_period: usize,
    pub memory_capacity: usize,
    pub minibatch: usize,
    pub warm_start_steps: usize,
    /// TD updates on the warm-start memory before the first learned pass.
    pub warm_td_steps: usize,
    /// TD updates per augmentation iteration.
    pub td_per_iter: usize,
    pub seeds: Vec<u64>,
    pub hessian: HessianMode,
    pub hessian_batch: usize,
    pub bottleneck: usize,
    pub det_hidden: Vec<usize>,
    pub det_lr: f64,
    pub det_batch: usize,
    pub agent_hidden: Vec<usize>,
    pub agent_lr: f64,
    pub double_dqn: bool,
    pub patience: usize,
    /// Relative validation improvement below which an epoch counts as stale.
    pub min_rel_improvement: f64,
    pub max_epochs: usize,
    pub hs_quantile: f64,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            w: 25,
            e: 10,
            alpha: 0.5,
            k: 1000,
            gamma: 0.9,
            p_explore: 0.2,
            n_iters: None,
            sync_period: 10,
            memory_capacity: 2048,
            minibatch: 64,
            warm_start_steps: 256,
            warm_td_steps: 128,
            td_per_iter: 2,
            seeds: vec![1, 2, 3, 4, 5],
            hessian: HessianMode::default(),
            hessian_batch: 512,
            bottleneck: 8,
            det_hidden: vec![16],
            det_lr: 5e-3,
            det_batch: 32,
            agent_hidden: vec![64, 64],
            agent_lr: 1e-3,
            double_dqn: false,
            patience: 5,
            min_rel_improvement: 1e-3,
            max_epochs: 50,
            hs_quantile: 0.9,
        }
    }
}

impl RunConfig {
    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("alpha", self.alpha),
            ("gamma", self.gamma),
            ("p_explore", self.p_explore),
            ("hs_quantile", self.hs_quantile),
        ] {
            if !(0.0..=1.0).contains(&v) {
                return Err(Error::Config(format!("{name} = {v} outside [0, 1]")));
            }
        }
        if self.w < 2 {
            return Err(Error::Config("w must be at least 2".into()));
        }
        for (name, v) in [
            ("k", self.k),
            ("sync_period", self.sync_period),
            ("memory_capacity", self.memory_capacity),
            ("minibatch", self.minibatch),
            ("bottleneck", self.bottleneck),
            ("det_batch", self.det_batch),
            ("max_epochs", self.max_epochs),
        ] {
            if v == 0 {
                return Err(Error::Config(format!("{name} must be positive")));
            }
        }
        if !(0.0..1.0).contains(&self.min_rel_improvement) {
            return Err(Error::Config(
                "min_rel_improvement must be in [0, 1)".into(),
            ));
        }
        if self.det_lr <= 0.0 || self.agent_lr <= 0.0 {
            return Err(Error::Config("learning rates must be positive".into()));
        }
        if self.seeds.is_empty() {
            return Err(Error::Config("seeds must be nonempty".into()));
        }
        Ok(())
    }

    pub fn detector_config(&self, d: usize) -> DetectorConfig {
        DetectorConfig {
            w: self.w,
            d,
            bottleneck: self.bottleneck,
            hidden: self.det_hidden.clone(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Phase {
    Augment,
    Final,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpochRecord {
    pub epoch: usize,
    pub phase: Phase,
    pub mean_train_loss: f64,
    pub val_loss: f64,
    pub set_size: usize,
    pub agent_loss: Option<f64>,
    pub ac_frac: Option<f64>,
    pub hs_frac: Option<f64>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunReport {
    pub seed: u64,
    pub config: RunConfig,
    pub epochs: Vec<EpochRecord>,
    pub final_set_size: usize,
    pub final_val_loss: f64,
    pub wall_clock_secs: f64,
}

impl RunReport {
    pub fn augment_epochs(&self) -> impl Iterator<Item = &EpochRecord> {
        self.epochs.iter().filter(|r| r.phase == Phase::Augment)
    }
}

/// Ground-truth per-point flags for proportion tracking on simulated
/// contaminated sets. Indices refer to the training prefix of the series.
#[derive(Debug, Clone, Copy)]
pub struct Tracking<'a> {
    pub ac_flags: &'a [u8],
    pub hs_flags: &'a [u8],
}

/// Behavior bookkeeping for every sample in the set: key parameters from
/// this epoch's behaviors, per-sample records with normalized rewards.
pub fn behavior_records<R: Rng>(
    det: &Detector,
    set: &SampleSet,
    hessian: &HessianMode,
    k: usize,
    hessian_batch: usize,
    rng: &mut R,
) -> Result<(KeyParams, BTreeMap<u64, BehaviorRecord>)> {
    if set.is_empty() {
        return Err(Error::EmptyBatch);
    }
    let ctx = hessian_context(det, set, hessian, hessian_batch, rng)?;
    let samples: Vec<_> = set.samples().collect();
    let mut full = Vec::with_capacity(samples.len());
    for s in &samples {
        let win = set.contents(s)?;
        full.push(parameter_behavior(&det.net, win, win, &ctx, None)?);
    }
    let keys = select_key_parameters(&full, k.min(det.net.param_count()))?;
    let mut records = BTreeMap::new();
    for (s, p_full) in samples.iter().zip(&full) {
        let p_vec: Vec<f64> = keys.indices.iter().map(|&i| p_full[i]).collect();
        records.insert(
            s.id,
            BehaviorRecord {
                sample_id: s.id,
                r_l_raw: sample_loss(det, set.series(), s)?,
                p_vec,
                r_p_raw: 0.0,
                r_l: 0.0,
                r_p: 0.0,
            },
        );
    }
    renormalize(&mut records)?;
    Ok((keys, records))
}

fn hessian_context<R: Rng>(
    det: &Detector,
    set: &SampleSet,
    hessian: &HessianMode,
    hessian_batch: usize,
    rng: &mut R,
) -> Result<HessianContext> {
    let mut samples: Vec<_> = set.samples().collect();
    samples.shuffle(rng);
    samples.truncate(hessian_batch.max(1));
    let batch: Vec<(Vec<f64>, Vec<f64>)> = samples
        .iter()
        .map(|s| set.contents(s).map(|w| (w.to_vec(), w.to_vec())))
        .collect::<Result<_>>()?;
    HessianContext::new(&det.net, batch, hessian.clone())
}

/// Recomputes the behavior center, raw parameter rewards, and min-max
/// normalized (r_l, r_p) over the current population.
fn renormalize(records: &mut BTreeMap<u64, BehaviorRecord>) -> Result<()> {
    let p_vecs: Vec<Vec<f64>> = records.values().map(|r| r.p_vec.clone()).collect();
    let center = behavior_center(&p_vecs)?;
    for r in records.values_mut() {
        r.r_p_raw = r
            .p_vec
            .iter()
            .zip(&center)
            .map(|(a, b)| (a - b) * (a - b))
            .sum::<f64>()
            .sqrt();
    }
    let ids: Vec<u64> = records.keys().cloned().collect();
    let rl_norm = normalize_rewards(&ids.iter().map(|i| records[i].r_l_raw).collect::<Vec<_>>())?;
    let rp_norm = normalize_rewards(&ids.iter().map(|i| records[i].r_p_raw).collect::<Vec<_>>())?;
    for ((id, rl), rp) in ids.iter().zip(rl_norm).zip(rp_norm) {
        let r = records.get_mut(id).unwrap();
        r.r_l = rl;
        r.r_p = rp;
    }
    Ok(())
}

/// One augmentation epoch (warm start on the first): recomputes key
/// parameters and behaviors, then walks the set applying learned actions
/// with TD updates along the way. Returns the mean agent TD loss.
#[allow(clippy::too_many_arguments)]
pub fn augment_epoch<R: Rng>(
    det: &Detector,
    set: &mut SampleSet,
    agent: &mut QAgent,
    agent_opt: &mut OptimizerState,
    memory: &mut ReplayMemory,
    cfg: &RunConfig,
    first_epoch: bool,
    rng: &mut R,
) -> Result<f64> {
    let n_iters = cfg.n_iters.unwrap_or(set.len());
    if n_iters == 0 {
        return Ok(0.0);
    }
    let (keys, mut records) =
        behavior_records(det, set, &cfg.hessian, cfg.k, cfg.hessian_batch, rng)?;
    let ctx = hessian_context(det, set, &cfg.hessian, cfg.hessian_batch, rng)?;

    if first_epoch {
        let recs = &records;
        let alpha = cfg.alpha;
        warm_start(
            set,
            memory,
            cfg.warm_start_steps,
            cfg.p_explore,
            |s, a| {
                let r = recs
                    .get(&s.id)
                    .ok_or(Error::SampleNotInSet { start: s.start })?;
                dual_reward(r.r_l, r.r_p, a, alpha)
            },
            rng,
        )?;
        // burn-in on the warm-start tuples so the first applied actions are
        // already informed
        for _ in 0..cfg.warm_td_steps {
            if memory.len() < cfg.minibatch {
                break;
            }
            let batch = memory.sample(cfg.minibatch, rng);
            agent.td_update(&batch, agent_opt)?;
        }
    }

    let mut s_t = set.choose(rng).unwrap();
    let mut loss_sum = 0.0;
    let mut loss_count = 0usize;
    for _ in 0..n_iters {
        let state = state_features(set, &s_t)?;
        let action = select_action(&q_values(agent.online(), &state)?)?;
        let rec = records
            .get(&s_t.id)
            .ok_or(Error::SampleNotInSet { start: s_t.start })?;
        let reward = dual_reward(rec.r_l, rec.r_p, action, cfg.alpha)?;

        let outcome = apply_action(set, &s_t, action)?;
        if let Some(removed) = &outcome.removed {
            records.remove(&removed.id);
        }
        for added in &outcome.added {
            let win = set.contents(added)?;
            records.insert(
                added.id,
                BehaviorRecord {
                    sample_id: added.id,
                    r_l_raw: sample_loss(det, set.series(), added)?,
                    p_vec: parameter_behavior(&det.net, win, win, &ctx, Some(&keys))?,
                    r_p_raw: 0.0,
                    r_l: 0.0,
                    r_p: 0.0,
                },
            );
        }
        if outcome.removed.is_some() || !outcome.added.is_empty() {
            renormalize(&mut records)?;
        }

        let next = transition(set, &s_t, action, cfg.p_explore, rng)?;
        memory.push(Transition {
            state,
            action,
            reward,
            next_state: state_features(set, &next)?,
        });
        if memory.len() >= cfg.minibatch {
            for _ in 0..cfg.td_per_iter.max(1) {
                let batch = memory.sample(cfg.minibatch, rng);
                loss_sum += agent.td_update(&batch, agent_opt)?;
                loss_count += 1;
            }
        }
        s_t = next;
    }
    Ok(if loss_count == 0 {
        0.0
    } else {
        loss_sum / loss_count as f64
    })
}

/// Full pipeline: no-overlap windows, e alternating train/augment epochs,
/// then training on the final set until early stop or the epoch cap.
/// Deterministic per seed. The final 20% of the series is held out for
/// validation and never augmented.
pub fn run(
    x_train: &TimeSeries,
    cfg: &RunConfig,
    seed: u64,
    tracking: Option<Tracking>,
) -> Result<(Detector, RunReport)> {
    cfg.validate()?;
    let started = Instant::now();
    let n = x_train.len();
    let val_len = n / 5;
    let fit_len = n - val_len;
    if fit_len < cfg.w || val_len < cfg.w {
        return Err(Error::SeriesTooShort { n, w: cfg.w });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let fit_series = Arc::new(x_train.slice(0, fit_len)?);
    let val_series = x_train.slice(fit_len, n)?;

    let mut det = Detector::new(cfg.detector_config(x_train.dim()), &mut rng)?;
    let mut det_opt = OptimizerState::adam(cfg.det_lr, det.net.param_count());
    let mut set = initial_windows(Arc::clone(&fit_series), cfg.w)?;

    let mut agent = QAgent::new(
        cfg.w * x_train.dim(),
        &cfg.agent_hidden,
        cfg.gamma,
        cfg.sync_period as u64,
        cfg.double_dqn,
        &mut rng,
    )?;
    let mut agent_opt = OptimizerState::adam(cfg.agent_lr, agent.online().param_count());
    let mut memory = ReplayMemory::new(cfg.memory_capacity);

    let mut epochs = Vec::new();
    let proportions = |set: &SampleSet| -> (Option<f64>, Option<f64>) {
        match &tracking {
            Some(t) => {
                let (ac, hs) = crate::evalgen::track_proportions(set, t.ac_flags, t.hs_flags);
                (Some(ac), Some(hs))
            }
            None => (None, None),
        }
    };

    for i in 0..cfg.e {
        let losses = train_epoch(&mut det, &set, &mut det_opt, cfg.det_batch, &mut rng)?;
        let mean_loss = losses.values().sum::<f64>() / losses.len() as f64;
        let agent_loss = augment_epoch(
            &det,
            &mut set,
            &mut agent,
            &mut agent_opt,
            &mut memory,
            cfg,
            i == 0,
            &mut rng,
        )?;
        let (ac_frac, hs_frac) = proportions(&set);
        epochs.push(EpochRecord {
            epoch: i,
            phase: Phase::Augment,
            mean_train_loss: mean_loss,
            val_loss: mean_window_loss(&det, &val_series, cfg.w)?,
            set_size: set.len(),
            agent_loss: Some(agent_loss),
            ac_frac,
            hs_frac,
        });
    }

    // train to convergence on the final augmented set
    let mut best_val = f64::INFINITY;
    let mut best_params = det.net.params.clone();
    let mut stale = 0usize;
    for i in 0..cfg.max_epochs {
        let losses = train_epoch(&mut det, &set, &mut det_opt, cfg.det_batch, &mut rng)?;
        let mean_loss = losses.values().sum::<f64>() / losses.len() as f64;
        let val = mean_window_loss(&det, &val_series, cfg.w)?;
        let (ac_frac, hs_frac) = proportions(&set);
        epochs.push(EpochRecord {
            epoch: cfg.e + i,
            phase: Phase::Final,
            mean_train_loss: mean_loss,
            val_loss: val,
            set_size: set.len(),
            agent_loss: None,
            ac_frac,
            hs_frac,
        });
        if val < best_val {
            best_params = det.net.params.clone();
        }
        if val < best_val * (1.0 - cfg.min_rel_improvement) || best_val.is_infinite() {
            best_val = val;
            stale = 0;
        } else {
            best_val = best_val.min(val);
            stale += 1;
            if stale > cfg.patience {
                break;
            }
        }
    }
    det.net.params = best_params;

    let report = RunReport {
        seed,
        config: cfg.clone(),
        epochs,
        final_set_size: set.len(),
        final_val_loss: best_val,
        wall_clock_secs: started.elapsed().as_secs_f64(),
    };
    Ok((det, report))
}

/// The ORIG baseline: the same pipeline with no augmentation epochs.
pub fn baseline_run(
    x_train: &TimeSeries,
    cfg: &RunConfig,
    seed: u64,
) -> Result<(Detector, RunReport)> {
    let cfg = RunConfig {
        e: 0,
        ..cfg.clone()
    };
    run(x_train, &cfg, seed, None)
}
