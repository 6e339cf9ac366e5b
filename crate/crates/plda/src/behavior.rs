//! Parameter behavior |H^-1 grad L|, key-parameter selection, the behavior
//! center, and the dual parameter/loss reward.

use crate::error::{Error, Result};
use crate::nncore::{self, LossKind, Network};
use crate::windows::Action;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase", tag = "mode")]
pub enum HessianMode {
    /// Behavior = |grad L| (H treated as identity).
    Identity,
    /// Divide by a Fisher-style diagonal estimate plus damping.
    Diagonal { damping: f64 },
    /// Solve (H + damping I) x = grad L by conjugate gradients.
    Cg {
        damping: f64,
        max_iters: usize,
        tol: f64,
    },
}

impl Default for HessianMode {
    fn default() -> Self {
        HessianMode::Diagonal { damping: 1e-3 }
    }
}

impl HessianMode {
    pub fn validate(&self) -> Result<()> {
        let lambda = match self {
            HessianMode::Identity => return Ok(()),
            HessianMode::Diagonal { damping } => *damping,
            HessianMode::Cg { damping, .. } => *damping,
        };
        if lambda <= 0.0 {
            return Err(Error::InvalidArgument(format!(
                "hessian damping must be positive, got {lambda}"
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct KeyParams {
    /// Sorted, unique parameter indices.
    pub indices: Vec<usize>,
}

impl KeyParams {
    pub fn k(&self) -> usize {
        self.indices.len()
    }
}

/// One sample's behavior bookkeeping for an augmentation epoch.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BehaviorRecord {
    pub sample_id: u64,
    pub r_l_raw: f64,
    pub p_vec: Vec<f64>,
    pub r_p_raw: f64,
    pub r_l: f64,
    pub r_p: f64,
}

/// Per-epoch Hessian context so the diagonal estimate is shared across
/// behavior calls instead of being rebuilt per sample.
#[derive(Debug, Clone)]
pub struct HessianContext {
    mode: HessianMode,
    batch: Vec<(Vec<f64>, Vec<f64>)>,
    diag: Option<Vec<f64>>,
}

impl HessianContext {
    pub fn new(net: &Network, batch: Vec<(Vec<f64>, Vec<f64>)>, mode: HessianMode) -> Result<Self> {
        mode.validate()?;
        if batch.is_empty() {
            return Err(Error::EmptyBatch);
        }
        let diag = match mode {
            HessianMode::Diagonal { .. } => {
                // Fisher-style estimate: mean squared per-sample gradients.
                let mut acc = vec![0.0; net.param_count()];
                for (x, t) in &batch {
                    let (_, g) = nncore::loss_and_grad(net, x, t, LossKind::Mse)?;
                    for (a, &b) in acc.iter_mut().zip(&g) {
                        *a += b * b;
                    }
                }
                let inv = 1.0 / batch.len() as f64;
                for a in &mut acc {
                    *a *= inv;
                }
                Some(acc)
            }
            _ => None,
        };
        Ok(HessianContext { mode, batch, diag })
    }

    pub fn mode(&self) -> &HessianMode {
        &self.mode
    }
}

/// Damped conjugate-gradient solve of (H + lambda I) x = b where H is given
/// implicitly through `hvp`.
pub fn solve_damped<F>(
    mut hvp: F,
    b: &[f64],
    lambda: f64,
    max_iters: usize,
    tol: f64,
) -> Result<Vec<f64>>
where
    F: FnMut(&[f64]) -> Vec<f64>,
{
    let n = b.len();
    let apply = |hvp: &mut F, v: &[f64]| -> Vec<f64> {
        let hv = hvp(v);
        hv.iter().zip(v).map(|(&h, &x)| h + lambda * x).collect()
    };
    let bnorm = b.iter().map(|x| x * x).sum::<f64>().sqrt();
    if bnorm == 0.0 {
        return Ok(vec![0.0; n]);
    }
    let mut x = vec![0.0; n];
    let mut r = b.to_vec();
    let mut p = r.clone();
    let mut rs_old: f64 = r.iter().map(|v| v * v).sum();
    for _ in 0..max_iters {
        if rs_old.sqrt() <= tol * bnorm {
            return Ok(x);
        }
        let ap = apply(&mut hvp, &p);
        let pap: f64 = p.iter().zip(&ap).map(|(a, b)| a * b).sum();
        if pap <= 0.0 {
            // damped operator should be PD; bail with the current residual
            return Err(Error::CgDidNotConverge {
                iters: max_iters,
                residual: rs_old.sqrt(),
            });
        }
        let alpha = rs_old / pap;
        for i in 0..n {
            x[i] += alpha * p[i];
            r[i] -= alpha * ap[i];
        }
        let rs_new: f64 = r.iter().map(|v| v * v).sum();
        let beta = rs_new / rs_old;
        for i in 0..n {
            p[i] = r[i] + beta * p[i];
        }
        rs_old = rs_new;
    }
    if rs_old.sqrt() <= tol * bnorm {
        Ok(x)
    } else {
        Err(Error::CgDidNotConverge {
            iters: max_iters,
            residual: rs_old.sqrt(),
        })
    }
}

/// Elementwise |H^-1 grad L| for one sample, restricted to `keys` when given.
pub fn parameter_behavior(
    net: &Network,
    sample_input: &[f64],
    sample_target: &[f64],
    ctx: &HessianContext,
    keys: Option<&KeyParams>,
) -> Result<Vec<f64>> {
    let (_, grad) = nncore::loss_and_grad(net, sample_input, sample_target, LossKind::Mse)?;
    let full: Vec<f64> = match &ctx.mode {
        HessianMode::Identity => grad.iter().map(|g| g.abs()).collect(),
        HessianMode::Diagonal { damping } => {
            let diag = ctx.diag.as_ref().unwrap();
            grad.iter()
                .zip(diag)
                .map(|(&g, &d)| (g / (d + damping)).abs())
                .collect()
        }
        HessianMode::Cg {
            damping,
            max_iters,
            tol,
        } => {
            let mut scratch = net.clone();
            let theta = net.params.clone();
            let x = solve_damped(
                |v| {
                    scratch.params.copy_from_slice(&theta);
                    nncore::hvp(&scratch, &ctx.batch, v).expect("batch checked nonempty")
                },
                &grad,
                *damping,
                *max_iters,
                *tol,
            )?;
            x.iter().map(|v| v.abs()).collect()
        }
    };
    Ok(match keys {
        None => full,
        Some(k) => k.indices.iter().map(|&i| full[i]).collect(),
    })
}

/// Top-k parameter indices by mean absolute behavior across samples.
/// Ties break toward the lower index; output is sorted ascending.
pub fn select_key_parameters(behaviors: &[Vec<f64>], k: usize) -> Result<KeyParams> {
    if behaviors.is_empty() {
        return Err(Error::EmptyBatch);
    }
    let p = behaviors[0].len();
    if k > p {
        return Err(Error::InvalidArgument(format!(
            "k = {k} exceeds parameter count {p}"
        )));
    }
    let mut means = vec![0.0; p];
    for b in behaviors {
        if b.len() != p {
            return Err(Error::DimensionMismatch {
                what: "behavior vector",
                expected: p,
                got: b.len(),
            });
        }
        for (m, &v) in means.iter_mut().zip(b) {
            *m += v.abs();
        }
    }
    let mut order: Vec<usize> = (0..p).collect();
    order.sort_by(|&a, &b| means[b].total_cmp(&means[a]).then(a.cmp(&b)));
    let mut indices: Vec<usize> = order[..k].to_vec();
    indices.sort_unstable();
    Ok(KeyParams { indices })
}

/// Arithmetic mean of behavior vectors.
pub fn behavior_center(p_vecs: &[Vec<f64>]) -> Result<Vec<f64>> {
    if p_vecs.is_empty() {
        return Err(Error::EmptyBatch);
    }
    let k = p_vecs[0].len();
    let mut center = vec![0.0; k];
    for p in p_vecs {
        if p.len() != k {
            return Err(Error::DimensionMismatch {
                what: "behavior vector",
                expected: k,
                got: p.len(),
            });
        }
        for (c, &v) in center.iter_mut().zip(p) {
            *c += v;
        }
    }
    let inv = 1.0 / p_vecs.len() as f64;
    for c in &mut center {
        *c *= inv;
    }
    Ok(center)
}

/// Min-max normalization over the epoch population. A degenerate (constant)
/// population maps to all 0.5.
pub fn normalize_rewards(raw: &[f64]) -> Result<Vec<f64>> {
    if raw.is_empty() {
        return Err(Error::EmptyBatch);
    }
    let min = raw.iter().cloned().fold(f64::INFINITY, f64::min);
    let max = raw.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let range = max - min;
    if range <= 0.0 {
        return Ok(vec![0.5; raw.len()]);
    }
    Ok(raw.iter().map(|&v| (v - min) / range).collect())
}

/// The three-case dual reward R_alpha, keyed by the action taken.
pub fn dual_reward(r_l: f64, r_p: f64, action: Action, alpha: f64) -> Result<f64> {
    for (name, v) in [("r_l", r_l), ("r_p", r_p), ("alpha", alpha)] {
        if !(0.0..=1.0).contains(&v) {
            return Err(Error::InvalidArgument(format!(
                "{name} = {v} outside [0, 1]"
            )));
        }
    }
    Ok(match action {
        Action::Expand => alpha * r_l + (1.0 - alpha) * (1.0 - r_p),
        Action::Preserve => alpha * (1.0 - r_l) + (1.0 - alpha) * (1.0 - r_p),
        Action::Delete => alpha * r_l + (1.0 - alpha) * r_p,
    })
}
