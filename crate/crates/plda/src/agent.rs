//! Value-learning augmentation agent: policy/target MLPs over state
//! features, a FIFO replay memory, temporal-difference updates, and
//! periodic target synchronization.

use crate::error::{Error, Result};
use crate::nncore::{self, Activation, LossKind, Network, OptimizerState};
use crate::windows::{self, Action, SampleSet, WindowSample};
use rand::Rng;
use serde::{Deserialize, Serialize};
use std::collections::VecDeque;

pub const ACTION_COUNT: usize = 3;

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Transition {
    pub state: Vec<f64>,
    pub action: Action,
    pub reward: f64,
    pub next_state: Vec<f64>,
}

/// FIFO ring buffer of transitions.
#[derive(Debug, Clone)]
pub struct ReplayMemory {
    buf: VecDeque<Transition>,
    capacity: usize,
}

impl ReplayMemory {
    pub fn new(capacity: usize) -> Self {
        ReplayMemory {
            buf: VecDeque::with_capacity(capacity),
            capacity,
        }
    }

    pub fn capacity(&self) -> usize {
        self.capacity
    }

    pub fn len(&self) -> usize {
        self.buf.len()
    }

    pub fn is_empty(&self) -> bool {
        self.buf.is_empty()
    }

    pub fn push(&mut self, t: Transition) {
        if self.buf.len() == self.capacity {
            self.buf.pop_front();
        }
        self.buf.push_back(t);
    }

    pub fn iter(&self) -> impl Iterator<Item = &Transition> {
        self.buf.iter()
    }

    /// Uniform minibatch with replacement.
    pub fn sample<R: Rng>(&self, k: usize, rng: &mut R) -> Vec<Transition> {
        (0..k)
            .filter_map(|_| {
                if self.buf.is_empty() {
                    None
                } else {
                    Some(self.buf[rng.random_range(0..self.buf.len())].clone())
                }
            })
            .collect()
    }
}

#[derive(Debug, Clone)]
pub struct QAgent {
    online: Network,
    target: Network,
    pub gamma: f64,
    pub sync_period: u64,
    pub double_dqn: bool,
    iterations: u64,
}

impl QAgent {
    pub fn new<R: Rng>(
        feature_len: usize,
        hidden: &[usize],
        gamma: f64,
        sync_period: u64,
        double_dqn: bool,
        rng: &mut R,
    ) -> Result<Self> {
        if !(0.0..=1.0).contains(&gamma) {
            return Err(Error::InvalidArgument(format!(
                "gamma = {gamma} outside [0, 1]"
            )));
        }
        if sync_period == 0 {
            return Err(Error::InvalidArgument(
                "sync period must be positive".into(),
            ));
        }
        let mut sizes = vec![feature_len];
        sizes.extend_from_slice(hidden);
        sizes.push(ACTION_COUNT);
        let mut acts = vec![Activation::Relu; sizes.len() - 2];
        acts.push(Activation::Identity);
        let mut online = Network::new(sizes, acts)?;
        online.init_uniform(rng);
        let target = online.clone();
        Ok(QAgent {
            online,
            target,
            gamma,
            sync_period,
            double_dqn,
            iterations: 0,
        })
    }

    pub fn online(&self) -> &Network {
        &self.online
    }

    pub fn target(&self) -> &Network {
        &self.target
    }

    pub fn feature_len(&self) -> usize {
        self.online.input_len()
    }

    pub fn iterations(&self) -> u64 {
        self.iterations
    }

    /// Copies the trained (online) parameters into the stale (target) net.
    pub fn sync_target(&mut self) {
        self.target.params.copy_from_slice(&self.online.params);
    }

    /// One TD gradient step on a minibatch; returns the pre-step loss
    /// (mean squared TD error). Target-net outputs carry no gradient.
    /// Syncs the target net every `sync_period` calls.
    pub fn td_update(&mut self, minibatch: &[Transition], opt: &mut OptimizerState) -> Result<f64> {
        if minibatch.is_empty() {
            return Err(Error::EmptyBatch);
        }
        let mut grad = vec![0.0; self.online.param_count()];
        let mut loss_sum = 0.0;
        for t in minibatch {
            let q_next_target = q_values(&self.target, &t.next_state)?;
            let bootstrap = if self.double_dqn {
                let q_next_online = q_values(&self.online, &t.next_state)?;
                let a_star = select_action(&q_next_online)?;
                q_next_target[a_star.index()]
            } else {
                q_next_target
                    .iter()
                    .cloned()
                    .fold(f64::NEG_INFINITY, f64::max)
            };
            let td_target = t.reward + self.gamma * bootstrap;

            let q_online = q_values(&self.online, &t.state)?;
            let ai = t.action.index();
            let err = q_online[ai] - td_target;
            loss_sum += err * err;

            // gradient flows only through the taken action's output: reuse
            // the MSE machinery with the other outputs pinned to themselves
            let mut pinned = q_online.clone();
            pinned[ai] = td_target;
            let (_, g) = nncore::loss_and_grad(&self.online, &t.state, &pinned, LossKind::Mse)?;
            for (a, b) in grad.iter_mut().zip(&g) {
                // undo the 1/ACTION_COUNT factor of the mean-over-outputs MSE
                *a += b * ACTION_COUNT as f64;
            }
        }
        let inv = 1.0 / minibatch.len() as f64;
        for g in &mut grad {
            *g *= inv;
        }
        nncore::optimizer_step(opt, &mut self.online, &grad)?;
        self.iterations += 1;
        if self.iterations.is_multiple_of(self.sync_period) {
            self.sync_target();
        }
        Ok(loss_sum * inv)
    }
}

/// Action values for one state, one per action.
pub fn q_values(net: &Network, state: &[f64]) -> Result<Vec<f64>> {
    let q = net.forward(state)?;
    debug_assert_eq!(q.len(), ACTION_COUNT);
    Ok(q)
}

/// Argmax action; ties break toward the lower action index.
pub fn select_action(q: &[f64]) -> Result<Action> {
    if q.len() != ACTION_COUNT {
        return Err(Error::DimensionMismatch {
            what: "q values",
            expected: ACTION_COUNT,
            got: q.len(),
        });
    }
    if q.iter().any(|v| !v.is_finite()) {
        return Err(Error::InvalidArgument("non-finite q value".into()));
    }
    let mut best = 0;
    for i in 1..ACTION_COUNT {
        if q[i] > q[best] {
            best = i;
        }
    }
    Ok(Action::from_index(best).unwrap())
}

/// State features for a window sample: its flattened contents.
pub fn state_features(set: &SampleSet, s: &WindowSample) -> Result<Vec<f64>> {
    Ok(set.contents(s)?.to_vec())
}

/// Pre-fills the replay memory with random state/action/reward tuples
/// before the first learned augmentation epoch.
pub fn warm_start<F, R>(
    set: &SampleSet,
    memory: &mut ReplayMemory,
    steps: usize,
    p_explore: f64,
    mut reward_fn: F,
    rng: &mut R,
) -> Result<()>
where
    F: FnMut(&WindowSample, Action) -> Result<f64>,
    R: Rng,
{
    if set.is_empty() {
        return Err(Error::EmptyBatch);
    }
    for _ in 0..steps {
        let s = set.choose(rng).unwrap();
        let action = Action::ALL[rng.random_range(0..ACTION_COUNT)];
        let reward = reward_fn(&s, action)?;
        let next = windows::transition(set, &s, action, p_explore, rng)?;
        memory.push(Transition {
            state: state_features(set, &s)?,
            action,
            reward,
            next_state: state_features(set, &next)?,
        });
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::windows::{initial_windows, TimeSeries};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use std::sync::Arc;

    fn agent(rng: &mut ChaCha8Rng) -> QAgent {
        QAgent::new(2, &[16, 16], 0.9, 10, false, rng).unwrap()
    }

    #[test]
    fn zero_net_q_values_are_zero() {
        let net = Network::new(vec![2, ACTION_COUNT], vec![Activation::Identity]).unwrap();
        assert_eq!(q_values(&net, &[1.0, -1.0]).unwrap(), vec![0.0; 3]);
    }

    #[test]
    fn action_selection_rules() {
        assert_eq!(select_action(&[0.1, 0.9, 0.3]).unwrap(), Action::Preserve);
        assert_eq!(select_action(&[0.5, 0.5, 0.5]).unwrap(), Action::Expand);
        let shifted = select_action(&[0.1 + 7.0, 0.9 + 7.0, 0.3 + 7.0]).unwrap();
        assert_eq!(shifted, Action::Preserve);
        assert!(select_action(&[f64::NAN, 0.0, 0.0]).is_err());
    }

    #[test]
    fn replay_fifo_eviction() {
        let mut mem = ReplayMemory::new(3);
        for i in 0..4 {
            mem.push(Transition {
                state: vec![i as f64],
                action: Action::Preserve,
                reward: 0.5,
                next_state: vec![0.0],
            });
        }
        assert_eq!(mem.len(), 3);
        let first = mem.iter().next().unwrap();
        assert_eq!(first.state, vec![1.0]);
    }

    #[test]
    fn sync_is_exact_and_idempotent() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let mut ag = agent(&mut rng);
        // drift the online net
        let mut opt = OptimizerState::adam(1e-2, ag.online.param_count());
        let t = Transition {
            state: vec![0.1, 0.2],
            action: Action::Expand,
            reward: 1.0,
            next_state: vec![0.3, 0.4],
        };
        for _ in 0..3 {
            ag.td_update(std::slice::from_ref(&t), &mut opt).unwrap();
        }
        ag.sync_target();
        assert_eq!(ag.online.params, ag.target.params);
        let snapshot = ag.target.params.clone();
        ag.sync_target();
        assert_eq!(ag.target.params, snapshot);
        for s in [[0.0, 0.0], [0.5, -0.5], [1.0, 2.0]] {
            assert_eq!(
                q_values(&ag.online, &s).unwrap(),
                q_values(&ag.target, &s).unwrap()
            );
        }
    }

    #[test]
    fn target_net_frozen_between_syncs() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let mut ag = agent(&mut rng); // sync period 10
        let snapshot = ag.target.params.clone();
        let mut opt = OptimizerState::adam(1e-2, ag.online.param_count());
        let t = Transition {
            state: vec![0.1, 0.2],
            action: Action::Delete,
            reward: 0.7,
            next_state: vec![0.3, 0.4],
        };
        for _ in 0..9 {
            ag.td_update(std::slice::from_ref(&t), &mut opt).unwrap();
            // params changed on online only
        }
        assert_eq!(ag.target.params, snapshot);
        ag.td_update(std::slice::from_ref(&t), &mut opt).unwrap();
        assert_eq!(ag.target.params, ag.online.params);
    }

    #[test]
    fn gamma_zero_regresses_to_reward() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let mut ag = QAgent::new(2, &[16], 0.0, 1_000_000, false, &mut rng).unwrap();
        let mut opt = OptimizerState::adam(5e-3, ag.online.param_count());
        let t = Transition {
            state: vec![0.4, -0.3],
            action: Action::Preserve,
            reward: 0.8,
            next_state: vec![0.0, 0.0],
        };
        for _ in 0..2000 {
            ag.td_update(std::slice::from_ref(&t), &mut opt).unwrap();
        }
        let q = q_values(&ag.online, &t.state).unwrap();
        assert!((q[1] - 0.8).abs() < 1e-2, "q = {:?}", q);
    }

    #[test]
    fn zero_loss_when_q_matches_target() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        // zero net, zero reward, any gamma: target = 0 + gamma * 0 = q
        let mut ag = agent(&mut rng);
        ag.online = Network::new(vec![2, ACTION_COUNT], vec![Activation::Identity]).unwrap();
        ag.target = ag.online.clone();
        let mut opt = OptimizerState::sgd(0.1, ag.online.param_count());
        let t = Transition {
            state: vec![0.1, 0.2],
            action: Action::Expand,
            reward: 0.0,
            next_state: vec![0.3, 0.4],
        };
        let loss = ag.td_update(&[t], &mut opt).unwrap();
        assert_eq!(loss, 0.0);
    }

    #[test]
    fn q_targets_bounded_for_bounded_rewards() {
        // rewards in [0,1] with gamma: all TD targets in [0, 1/(1-gamma)]
        // provided q stays in range; verify on the greedy fixed point of a
        // random deterministic chain via value iteration bookkeeping
        let gamma: f64 = 0.9;
        let bound = 1.0 / (1.0 - gamma);
        let mut q = [[0.0f64; 3]; 4];
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let rewards: Vec<[f64; 3]> = (0..4)
            .map(|_| std::array::from_fn(|_| rng.random_range(0.0..1.0)))
            .collect();
        let next: Vec<[usize; 3]> = (0..4)
            .map(|_| std::array::from_fn(|_| rng.random_range(0..4)))
            .collect();
        for _ in 0..500 {
            for s in 0..4 {
                for a in 0..3 {
                    let ns = next[s][a];
                    let m = q[ns].iter().cloned().fold(f64::NEG_INFINITY, f64::max);
                    q[s][a] = rewards[s][a] + gamma * m;
                }
            }
        }
        for s in 0..4 {
            for a in 0..3 {
                assert!((0.0..=bound + 1e-9).contains(&q[s][a]));
            }
        }
    }

    #[test]
    fn toy_mdp_policy_matches_value_iteration() {
        // 3 states encoded one-hot-ish in 2 features, deterministic rewards
        // and transitions; compare the learned greedy policy with value
        // iteration.
        let states = [vec![0.0, 0.0], vec![1.0, 0.0], vec![0.0, 1.0]];
        let reward = [[0.1, 0.9, 0.2], [0.8, 0.2, 0.3], [0.1, 0.2, 0.9]];
        let next = [[1usize, 2, 0], [0, 1, 2], [2, 0, 1]];
        let gamma = 0.9;

        // value-iteration oracle
        let mut q_star = [[0.0f64; 3]; 3];
        for _ in 0..2000 {
            let prev = q_star;
            for s in 0..3 {
                for a in 0..3 {
                    let m = prev[next[s][a]]
                        .iter()
                        .cloned()
                        .fold(f64::NEG_INFINITY, f64::max);
                    q_star[s][a] = reward[s][a] + gamma * m;
                }
            }
        }
        let optimal: Vec<usize> = (0..3)
            .map(|s| {
                (0..3)
                    .max_by(|&a, &b| q_star[s][a].total_cmp(&q_star[s][b]))
                    .unwrap()
            })
            .collect();

        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let mut ag = QAgent::new(2, &[32], gamma, 10, false, &mut rng).unwrap();
        let mut opt = OptimizerState::adam(5e-3, ag.online.param_count());
        let mut s = 0usize;
        let mut mem = ReplayMemory::new(512);
        for step in 0..4000 {
            let a = if step < 500 || rng.random_range(0.0..1.0) < 0.2 {
                rng.random_range(0..3)
            } else {
                select_action(&q_values(&ag.online, &states[s]).unwrap())
                    .unwrap()
                    .index()
            };
            let ns = next[s][a];
            mem.push(Transition {
                state: states[s].clone(),
                action: Action::from_index(a).unwrap(),
                reward: reward[s][a],
                next_state: states[ns].clone(),
            });
            let batch = mem.sample(32, &mut rng);
            ag.td_update(&batch, &mut opt).unwrap();
            s = ns;
        }
        for s in 0..3 {
            let learned = select_action(&q_values(&ag.online, &states[s]).unwrap())
                .unwrap()
                .index();
            assert_eq!(
                learned, optimal[s],
                "state {s}: learned {learned}, optimal {:?}",
                optimal
            );
        }
    }

    #[test]
    fn q_regression_on_fixed_table() {
        let states = [vec![0.0, 0.0], vec![1.0, 0.0], vec![0.0, 1.0]];
        let table = [[0.2, 0.5, 0.1], [0.9, 0.3, 0.4], [0.0, 0.6, 0.8]];
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let mut net = Network::new(
            vec![2, 32, ACTION_COUNT],
            vec![Activation::Tanh, Activation::Identity],
        )
        .unwrap();
        net.init_uniform(&mut rng);
        let mut opt = OptimizerState::adam(1e-2, net.param_count());
        for _ in 0..3000 {
            let mut grad = vec![0.0; net.param_count()];
            for (x, t) in states.iter().zip(&table) {
                let (_, g) = nncore::loss_and_grad(&net, x, t.as_ref(), LossKind::Mse).unwrap();
                for (a, b) in grad.iter_mut().zip(&g) {
                    *a += b / 3.0;
                }
            }
            nncore::optimizer_step(&mut opt, &mut net, &grad).unwrap();
        }
        for (x, t) in states.iter().zip(&table) {
            let q = q_values(&net, x).unwrap();
            for (a, b) in q.iter().zip(t) {
                assert!((a - b).abs() < 1e-2, "{a} vs {b}");
            }
        }
    }

    #[test]
    fn warm_start_fills_memory_with_uniform_actions() {
        let series = Arc::new(
            TimeSeries::univariate(
                "t",
                (0..120).map(|i| (i as f64 * 0.3).sin()).collect(),
                None,
            )
            .unwrap(),
        );
        let set = initial_windows(series, 10).unwrap();
        let mut mem = ReplayMemory::new(64);
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        warm_start(&set, &mut mem, 64, 0.2, |_, _| Ok(0.5), &mut rng).unwrap();
        assert_eq!(mem.len(), 64);

        let mut mem = ReplayMemory::new(20_000);
        let mut counts = [0usize; 3];
        warm_start(
            &set,
            &mut mem,
            10_000,
            0.2,
            |_, a| {
                counts[a.index()] += 1;
                Ok(0.25)
            },
            &mut rng,
        )
        .unwrap();
        let expected = 10_000.0 / 3.0;
        let chi2: f64 = counts
            .iter()
            .map(|&c| (c as f64 - expected).powi(2) / expected)
            .sum();
        assert!(chi2 < 13.82, "chi2 {chi2}, counts {counts:?}"); // 99.9%, 2 dof
        assert!(mem.iter().all(|t| (0.0..=1.0).contains(&t.reward)));
    }
}
