//! Acceptance suite: one test per criterion, each printing a single
//! PASS/FAIL line with its metric (run with `--nocapture` to see them all).

#![allow(clippy::needless_range_loop)]

use plda::agent::{q_values, select_action, QAgent, ReplayMemory, Transition};
use plda::evalgen::{best_f1, point_adjust};
use plda::nncore::{self, Activation, LossKind, Network, OptimizerState};
use plda::validate;
use plda::windows::Action;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::time::Instant;

const SEEDS: [u64; 5] = [1, 2, 3, 4, 5];

fn report(criterion: usize, name: &str, pass: bool, detail: &str, started: Instant) {
    println!(
        "criterion {criterion} ({name}): {} — {detail} [{:.1}s]",
        if pass { "PASS" } else { "FAIL" },
        started.elapsed().as_secs_f64()
    );
    assert!(pass, "criterion {criterion} ({name}) failed: {detail}");
}

#[test]
fn criterion_1_influence_exactness() {
    let t = Instant::now();
    let out = validate::check_influence().unwrap();
    let within_budget = t.elapsed().as_secs_f64() < 5.0;
    report(1, "influence", out.pass && within_budget, &out.summary(), t);
}

#[test]
fn criterion_2_hvp_consistency() {
    let t = Instant::now();
    let out = validate::check_hvp_consistency().unwrap();
    let within_budget = t.elapsed().as_secs_f64() < 5.0;
    report(
        2,
        "hvp-consistency",
        out.pass && within_budget,
        &out.summary(),
        t,
    );
}

#[test]
fn criterion_3_expansion_reachability() {
    let t = Instant::now();
    let out = validate::check_reachability().unwrap();
    let within_budget = t.elapsed().as_secs_f64() < 1.0;
    report(
        3,
        "reachability",
        out.pass && within_budget,
        &out.summary(),
        t,
    );
}

#[test]
fn criterion_4_frequency_decay() {
    let t = Instant::now();
    let out = validate::check_decay().unwrap();
    let within_budget = t.elapsed().as_secs_f64() < 60.0;
    report(4, "decay", out.pass && within_budget, &out.summary(), t);
}

#[test]
fn criterion_5_reward_separation() {
    let t = Instant::now();
    let out = validate::check_rewards(&SEEDS).unwrap();
    let within_budget = t.elapsed().as_secs_f64() < 120.0;
    report(5, "rewards", out.pass && within_budget, &out.summary(), t);
}

#[test]
fn criterion_6_augmentation_dynamics() {
    let t = Instant::now();
    let out = validate::check_dynamics(&SEEDS).unwrap();
    let within_budget = t.elapsed().as_secs_f64() < 300.0;
    report(6, "dynamics", out.pass && within_budget, &out.summary(), t);
}

#[test]
fn criterion_7_end_to_end_improvement() {
    let t = Instant::now();
    let out = validate::check_improvement(&SEEDS).unwrap();
    let within_budget = t.elapsed().as_secs_f64() < 600.0;
    report(
        7,
        "improvement",
        out.pass && within_budget,
        &out.summary(),
        t,
    );
}

#[test]
fn criterion_8_metric_exactness() {
    let t = Instant::now();

    // point_adjust hand oracles, exact
    let unchanged = point_adjust(&[1.0, 5.0, 2.0], &[0, 0, 0]).unwrap();
    let single = point_adjust(&[1.0, 5.0, 2.0], &[1, 1, 1]).unwrap();
    let mixed = point_adjust(&[1.0, 5.0, 2.0, 9.0, 1.0], &[0, 1, 1, 0, 0]).unwrap();
    let adjust_ok = unchanged == [1.0, 5.0, 2.0]
        && single == [5.0, 5.0, 5.0]
        && mixed == [1.0, 5.0, 5.0, 9.0, 1.0];

    // best_f1 hand oracles, exact
    let sep = best_f1(&[0.9, 0.1, 0.8, 0.2], &[1, 0, 1, 0], false).unwrap();
    let mid = best_f1(&[0.3, 0.7, 0.5, 0.1], &[0, 1, 1, 0], false).unwrap();
    // threshold 0.5 predicts {0.7, 0.5}: tp=2 fp=0 fn=0 -> F1 = 1
    let f1_ok = sep.best_f1 == 1.0
        && sep.best_threshold == 0.8
        && mid.best_f1 == 1.0
        && mid.best_threshold == 0.5;

    let pass = adjust_ok && f1_ok;
    report(
        8,
        "metric-exactness",
        pass,
        &format!("point_adjust oracles {adjust_ok}, best_f1 oracles {f1_ok}"),
        t,
    );
}

fn gradient_max_rel_error() -> f64 {
    let mut rng = ChaCha8Rng::seed_from_u64(97);
    let mut worst: f64 = 0.0;
    for _ in 0..50 {
        let n_in = rng.random_range(1..4usize);
        let hidden = rng.random_range(2..6usize);
        let n_out = rng.random_range(1..3usize);
        let act = if rng.random_range(0.0..1.0) < 0.5 {
            Activation::Tanh
        } else {
            Activation::Relu
        };
        let mut net =
            Network::new(vec![n_in, hidden, n_out], vec![act, Activation::Identity]).unwrap();
        net.init_uniform(&mut rng);
        let x: Vec<f64> = (0..n_in).map(|_| rng.random_range(-1.0..1.0)).collect();
        let y: Vec<f64> = (0..n_out).map(|_| rng.random_range(-1.0..1.0)).collect();
        let (_, grad) = nncore::loss_and_grad(&net, &x, &y, LossKind::Mse).unwrap();
        let h = 1e-6;
        for j in 0..net.param_count() {
            let orig = net.params[j];
            net.params[j] = orig + h;
            let lp = nncore::loss(&net, &x, &y, LossKind::Mse).unwrap();
            net.params[j] = orig - h;
            let lm = nncore::loss(&net, &x, &y, LossKind::Mse).unwrap();
            net.params[j] = orig;
            let fd = (lp - lm) / (2.0 * h);
            let scale = grad[j].abs().max(fd.abs()).max(1.0);
            worst = worst.max((grad[j] - fd).abs() / scale);
        }
    }
    worst
}

fn toy_mdp_policy_matches_value_iteration() -> bool {
    let states = [vec![0.0, 0.0], vec![1.0, 0.0], vec![0.0, 1.0]];
    let reward = [[0.1, 0.9, 0.2], [0.8, 0.2, 0.3], [0.1, 0.2, 0.9]];
    let next = [[1usize, 2, 0], [0, 1, 2], [2, 0, 1]];
    let gamma = 0.9;

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
    let mut opt = OptimizerState::adam(5e-3, ag.online().param_count());
    let mut mem = ReplayMemory::new(512);
    let mut s = 0usize;
    for step in 0..4000 {
        let a = if step < 500 || rng.random_range(0.0..1.0) < 0.2 {
            rng.random_range(0..3)
        } else {
            select_action(&q_values(ag.online(), &states[s]).unwrap())
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
    (0..3).all(|s| {
        select_action(&q_values(ag.online(), &states[s]).unwrap())
            .unwrap()
            .index()
            == optimal[s]
    })
}

#[test]
fn criterion_9_numeric_core() {
    let t = Instant::now();
    let worst = gradient_max_rel_error();
    let grads_ok = worst < 1e-4;
    let mdp_ok = toy_mdp_policy_matches_value_iteration();
    let within_budget = t.elapsed().as_secs_f64() < 30.0;
    report(
        9,
        "numeric-core",
        grads_ok && mdp_ok && within_budget,
        &format!("max grad rel error {worst:.3e} (need < 1e-4), toy MDP policy optimal: {mdp_ok}"),
        t,
    );
}
