//! Inner-loop optimisation, Reptile meta-training and target retraining.

mod log;
mod optim;

use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::channel::CsiEigen;
use crate::error::{Error, Result};
use crate::model::{loss_and_grad, reconstruct, sgcs, ModelConfig, ModelParams, QuantMode};
use crate::numerics::{Purpose, RngStream};

pub use log::{ConvergenceLog, LogEntry};
pub use optim::{Optimizer, OptimizerState};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrainConfig {
    /// Optimiser for the meta inner loop.
    pub optimizer: Optimizer,
    /// Optimiser for target retraining; defaults to `optimizer`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub retrain_optimizer: Option<Optimizer>,
    pub batch_size: usize,
    /// Optimiser steps per meta task (`g`).
    pub inner_steps: usize,
    /// Reptile step size `ε`.
    pub meta_step: f64,
    /// Passes over the meta tasks, each in a fresh seeded order.
    pub meta_passes: usize,
    /// Target retraining steps (`g′`).
    pub retrain_steps: usize,
    /// Steps (tasks, for meta-training) between log entries.
    pub eval_interval: usize,
    /// Record wall time in logs. Off by default so logs are reproducible.
    #[serde(default)]
    pub log_wall_time: bool,
    /// Tasks held out of meta-training to score it.
    #[serde(default = "default_holdout")]
    pub meta_holdout_tasks: usize,
    #[serde(default)]
    pub seed: u64,
}

fn default_holdout() -> usize {
    10
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            optimizer: Optimizer::default(),
            retrain_optimizer: None,
            batch_size: 32,
            inner_steps: 32,
            meta_step: 0.25,
            meta_passes: 1,
            retrain_steps: 2000,
            eval_interval: 10,
            log_wall_time: false,
            meta_holdout_tasks: default_holdout(),
            seed: 0,
        }
    }
}

impl TrainConfig {
    pub fn retrain_optimizer(&self) -> Optimizer {
        self.retrain_optimizer.unwrap_or(self.optimizer)
    }

    pub fn validate(&self) -> Result<()> {
        for (field, opt) in [
            ("train.optimizer", Some(self.optimizer)),
            ("train.retrain_optimizer", self.retrain_optimizer),
        ] {
            let Some(opt) = opt else { continue };
            if !(opt.lr().is_finite() && opt.lr() >= 0.0) {
                return Err(Error::config(
                    format!("{field}.lr"),
                    "must be finite and non-negative",
                ));
            }
            if let Optimizer::Adam {
                beta1, beta2, eps, ..
            } = opt
            {
                if !(0.0..1.0).contains(&beta1) || !(0.0..1.0).contains(&beta2) {
                    return Err(Error::config(
                        format!("{field}.beta1"),
                        "betas must lie in [0, 1)",
                    ));
                }
                if !(eps > 0.0) {
                    return Err(Error::config(format!("{field}.eps"), "must be positive"));
                }
            }
        }
        if self.batch_size == 0 {
            return Err(Error::config("train.batch_size", "must be at least 1"));
        }
        if self.inner_steps == 0 {
            return Err(Error::config("train.inner_steps", "g must be at least 1"));
        }
        if !(0.0..=1.0).contains(&self.meta_step) {
            return Err(Error::config(
                "train.meta_step",
                "epsilon must lie in [0, 1]",
            ));
        }
        if self.meta_passes == 0 {
            return Err(Error::config("train.meta_passes", "must be at least 1"));
        }
        if self.retrain_steps == 0 {
            return Err(Error::config(
                "train.retrain_steps",
                "g' must be at least 1",
            ));
        }
        if self.eval_interval == 0 {
            return Err(Error::config("train.eval_interval", "must be at least 1"));
        }
        Ok(())
    }
}

/// Epoch-wise reshuffled mini-batch indices. The last batch of an epoch may be short.
struct Batcher {
    order: Vec<usize>,
    pos: usize,
    rng: RngStream,
}

impl Batcher {
    fn new(n: usize, mut rng: RngStream) -> Self {
        let mut order: Vec<usize> = (0..n).collect();
        rng.shuffle(&mut order);
        Self { order, pos: 0, rng }
    }

    fn next(&mut self, size: usize) -> &[usize] {
        if self.pos == self.order.len() {
            self.rng.shuffle(&mut self.order);
            self.pos = 0;
        }
        let start = self.pos;
        self.pos = (start + size).min(self.order.len());
        &self.order[start..self.pos]
    }
}

/// Runs `steps` optimiser steps; returns the trained copy and the mean batch loss.
fn run_steps(
    params: &ModelParams,
    mcfg: &ModelConfig,
    samples: &[CsiEigen],
    opt: Optimizer,
    batch_size: usize,
    steps: usize,
    rng: RngStream,
) -> Result<(ModelParams, f64)> {
    let mut p = params.clone();
    let mut state = opt.state(p.len());
    let mut batcher = Batcher::new(samples.len(), rng);
    let mut total = 0.0;
    for _ in 0..steps {
        let batch: Vec<&CsiEigen> = batcher
            .next(batch_size)
            .iter()
            .map(|&i| &samples[i])
            .collect();
        let (loss, grads) = loss_and_grad(&p, mcfg, &batch, QuantMode::Active)?;
        state.step(&mut p, &grads);
        total += loss;
    }
    Ok((p, total / steps.max(1) as f64))
}

/// `U^g`: `g` steps of the inner optimiser on one task, from a fresh optimiser
/// state. `params` is left untouched. Returns the updated copy and mean loss.
pub fn inner_update(
    params: &ModelParams,
    mcfg: &ModelConfig,
    samples: &[CsiEigen],
    cfg: &TrainConfig,
    rng: RngStream,
) -> Result<(ModelParams, f64)> {
    if samples.is_empty() {
        return Err(Error::Shape("inner update on an empty task".into()));
    }
    run_steps(
        params,
        mcfg,
        samples,
        cfg.optimizer,
        cfg.batch_size,
        cfg.inner_steps,
        rng,
    )
}

/// Mean SGCS of full quantised forward passes.
///
/// Per-sample scores are summed in sorted order, so the result does not depend
/// on dataset order or on how the work was split across threads.
pub fn evaluate(params: &ModelParams, mcfg: &ModelConfig, samples: &[CsiEigen]) -> Result<f64> {
    if samples.is_empty() {
        return Err(Error::Shape("empty evaluation set".into()));
    }
    let chunks: Vec<Vec<f64>> = samples
        .par_chunks(64)
        .map(|chunk| {
            let refs: Vec<&CsiEigen> = chunk.iter().collect();
            let recon = reconstruct(params, mcfg, &refs)?;
            chunk
                .iter()
                .zip(&recon)
                .map(|(s, r)| sgcs(&s.w, r))
                .collect()
        })
        .collect::<Result<_>>()?;
    let mut scores: Vec<f64> = chunks.into_iter().flatten().collect();
    scores.sort_by(f64::total_cmp);
    Ok(scores.iter().sum::<f64>() / scores.len() as f64)
}

struct Clock(Option<Instant>);

impl Clock {
    fn start(enabled: bool) -> Self {
        Clock(enabled.then(Instant::now))
    }

    fn ms(&self) -> u64 {
        self.0.map_or(0, |t| t.elapsed().as_millis() as u64)
    }
}

/// Reptile over `tasks`: for each task in seeded order,
/// `Θ ← Θ + ε (U^g(Θ) − Θ)`.
///
/// The log's step counts tasks processed; `eval_sgcs` is measured on `held_out`.
pub fn meta_train<T: AsRef<[CsiEigen]> + Sync>(
    init: &ModelParams,
    mcfg: &ModelConfig,
    tasks: &[T],
    held_out: &[CsiEigen],
    cfg: &TrainConfig,
) -> Result<(ModelParams, ConvergenceLog)> {
    if tasks.is_empty() {
        return Err(Error::Shape("meta-training needs at least one task".into()));
    }
    let clock = Clock::start(cfg.log_wall_time);
    let mut theta = init.clone();
    let mut log = ConvergenceLog::default();
    let initial = evaluate(&theta, mcfg, held_out)?;
    log.push(0, -initial, initial, clock.ms());
    let (mut done, mut pending, mut pending_loss) = (0usize, 0usize, 0.0);
    for pass in 0..cfg.meta_passes {
        let mut order: Vec<usize> = (0..tasks.len()).collect();
        RngStream::keyed(cfg.seed, Purpose::TaskOrder, &[pass as u64]).shuffle(&mut order);
        for &j in &order {
            let rng = RngStream::keyed(cfg.seed, Purpose::Batching, &[0, pass as u64, j as u64]);
            let (updated, loss) = inner_update(&theta, mcfg, tasks[j].as_ref(), cfg, rng)?;
            theta.interpolate_towards(&updated, cfg.meta_step);
            done += 1;
            pending += 1;
            pending_loss += loss;
            if done % cfg.eval_interval == 0 {
                log.push(
                    done,
                    pending_loss / pending as f64,
                    evaluate(&theta, mcfg, held_out)?,
                    clock.ms(),
                );
                pending = 0;
                pending_loss = 0.0;
            }
        }
    }
    if pending > 0 {
        log.push(
            done,
            pending_loss / pending as f64,
            evaluate(&theta, mcfg, held_out)?,
            clock.ms(),
        );
    }
    Ok((theta, log))
}

/// Seeded split into `(train, eval)` with `round(fraction · n)` eval samples,
/// at least one of each when `n ≥ 2`.
pub fn split_dataset(
    data: &[CsiEigen],
    eval_fraction: f64,
    seed: u64,
) -> (Vec<CsiEigen>, Vec<CsiEigen>) {
    let n = data.len();
    let mut order: Vec<usize> = (0..n).collect();
    RngStream::keyed(seed, Purpose::Split, &[]).shuffle(&mut order);
    let n_eval = if n < 2 {
        0
    } else {
        ((eval_fraction * n as f64).round() as usize).clamp(1, n - 1)
    };
    let eval = order[..n_eval].iter().map(|&i| data[i].clone()).collect();
    let train = order[n_eval..].iter().map(|&i| data[i].clone()).collect();
    (train, eval)
}

/// `g′` optimiser steps on `train` from `init`, logging eval SGCS on `eval`
/// at step 0 and every `eval_interval` steps.
pub fn target_retrain(
    init: &ModelParams,
    mcfg: &ModelConfig,
    train: &[CsiEigen],
    eval: &[CsiEigen],
    cfg: &TrainConfig,
) -> Result<(ModelParams, ConvergenceLog)> {
    if train.is_empty() || eval.is_empty() {
        return Err(Error::Shape(
            "retraining needs nonempty train and eval sets".into(),
        ));
    }
    let clock = Clock::start(cfg.log_wall_time);
    let mut p = init.clone();
    let mut log = ConvergenceLog::default();
    let initial_loss = -evaluate(&p, mcfg, train)?;
    log.push(0, initial_loss, evaluate(&p, mcfg, eval)?, clock.ms());
    let mut state = cfg.retrain_optimizer().state(p.len());
    let mut batcher = Batcher::new(
        train.len(),
        RngStream::keyed(cfg.seed, Purpose::Batching, &[1]),
    );
    let (mut pending, mut pending_loss) = (0usize, 0.0);
    for step in 1..=cfg.retrain_steps {
        let batch: Vec<&CsiEigen> = batcher
            .next(cfg.batch_size)
            .iter()
            .map(|&i| &train[i])
            .collect();
        let (loss, grads) = loss_and_grad(&p, mcfg, &batch, QuantMode::Active)?;
        state.step(&mut p, &grads);
        pending += 1;
        pending_loss += loss;
        if step % cfg.eval_interval == 0 || step == cfg.retrain_steps {
            log.push(
                step,
                pending_loss / pending as f64,
                evaluate(&p, mcfg, eval)?,
                clock.ms(),
            );
            pending = 0;
            pending_loss = 0.0;
        }
    }
    Ok((p, log))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel::SystemConfig;
    use crate::metaenv::{build_meta_env, MetaEnvConfig};

    fn small_model() -> ModelConfig {
        ModelConfig {
            encoder_hidden: vec![32],
            decoder_hidden: vec![32],
            ..ModelConfig::desk(8, 4)
        }
    }

    fn env(tasks: usize, seed: u64) -> Vec<Vec<CsiEigen>> {
        let sys = SystemConfig::desk();
        let cfg = MetaEnvConfig {
            tasks,
            seed,
            ..MetaEnvConfig::desk(&sys)
        };
        build_meta_env(&sys, &cfg)
            .unwrap()
            .tasks
            .into_iter()
            .map(|t| t.samples)
            .collect()
    }

    fn cfg() -> TrainConfig {
        TrainConfig {
            inner_steps: 4,
            batch_size: 8,
            retrain_steps: 20,
            eval_interval: 5,
            ..TrainConfig::default()
        }
    }

    #[test]
    fn batcher_covers_each_epoch() {
        let mut b = Batcher::new(10, RngStream::new(1, 1));
        let mut seen: Vec<usize> = Vec::new();
        let sizes: Vec<usize> = (0..3)
            .map(|_| {
                let batch = b.next(4).to_vec();
                seen.extend(&batch);
                batch.len()
            })
            .collect();
        assert_eq!(sizes, vec![4, 4, 2]);
        seen.sort();
        assert_eq!(seen, (0..10).collect::<Vec<_>>());
    }

    #[test]
    fn zero_lr_inner_update_is_identity_and_input_untouched() {
        let m = small_model();
        let p = ModelParams::init(&m, 1);
        let copy = p.clone();
        let tasks = env(1, 1);
        let c = TrainConfig {
            optimizer: Optimizer::adam(0.0),
            inner_steps: 1,
            ..cfg()
        };
        let (out, _) = inner_update(&p, &m, &tasks[0], &c, RngStream::new(0, 0)).unwrap();
        assert_eq!(out, p);
        let c = TrainConfig {
            optimizer: Optimizer::adam(1e-2),
            ..cfg()
        };
        let (out, _) = inner_update(&p, &m, &tasks[0], &c, RngStream::new(0, 0)).unwrap();
        assert_eq!(p, copy);
        assert_ne!(out, p);
    }

    #[test]
    fn single_sample_sgd_step_is_exact() {
        let m = small_model();
        let p = ModelParams::init(&m, 2);
        let sample = vec![env(1, 2)[0][0].clone()];
        let lr = 0.05;
        let c = TrainConfig {
            optimizer: Optimizer::Sgd { lr },
            inner_steps: 1,
            ..cfg()
        };
        let (out, _) = inner_update(&p, &m, &sample, &c, RngStream::new(0, 0)).unwrap();
        let (_, g) = loss_and_grad(&p, &m, &[&sample[0]], QuantMode::Active).unwrap();
        let expected: Vec<f64> = p
            .to_flat()
            .iter()
            .zip(g.to_flat())
            .map(|(x, d)| x - lr * d)
            .collect();
        assert_eq!(out.to_flat(), expected);
    }

    #[test]
    fn reptile_degenerate_steps() {
        let m = small_model();
        let init = ModelParams::init(&m, 3);
        let tasks = env(6, 3);
        let held = tasks[5].clone();
        let c = TrainConfig {
            meta_step: 0.0,
            ..cfg()
        };
        let (theta, _) = meta_train(&init, &m, &tasks[..5], &held, &c).unwrap();
        assert_eq!(theta, init);

        let c = TrainConfig {
            meta_step: 1.0,
            ..cfg()
        };
        let (theta, _) = meta_train(&init, &m, &tasks[..1], &held, &c).unwrap();
        let rng = RngStream::keyed(c.seed, Purpose::Batching, &[0, 0, 0]);
        let (direct, _) = inner_update(&init, &m, &tasks[0], &c, rng).unwrap();
        assert_eq!(theta, direct);
    }

    #[test]
    fn retrain_log_shape_and_determinism() {
        let m = small_model();
        let init = ModelParams::init(&m, 4);
        let data: Vec<CsiEigen> = env(10, 4).into_iter().flatten().collect();
        let (train, eval) = split_dataset(&data, 0.1, 4);
        assert_eq!(train.len() + eval.len(), data.len());
        let (p1, log1) = target_retrain(&init, &m, &train, &eval, &cfg()).unwrap();
        let (p2, log2) = target_retrain(&init, &m, &train, &eval, &cfg()).unwrap();
        assert_eq!(p1, p2);
        assert_eq!(log1, log2);
        let steps: Vec<usize> = log1.entries.iter().map(|e| e.step).collect();
        assert_eq!(steps, vec![0, 5, 10, 15, 20]);
    }

    #[test]
    fn zero_lr_retrain_is_flat() {
        let m = small_model();
        let init = ModelParams::init(&m, 5);
        let data: Vec<CsiEigen> = env(5, 5).into_iter().flatten().collect();
        let (train, eval) = split_dataset(&data, 0.1, 5);
        let c = TrainConfig {
            optimizer: Optimizer::adam(0.0),
            ..cfg()
        };
        let (p, log) = target_retrain(&init, &m, &train, &eval, &c).unwrap();
        assert_eq!(p, init);
        let first = log.entries[0].eval_sgcs;
        assert!(log.entries.iter().all(|e| e.eval_sgcs == first));
    }

    #[test]
    fn evaluate_is_order_invariant_and_bounded() {
        let m = ModelConfig::desk(8, 4);
        let p = ModelParams::init(&m, 6);
        let mut data: Vec<CsiEigen> = env(10, 6).into_iter().flatten().collect();
        let a = evaluate(&p, &m, &data).unwrap();
        data.reverse();
        let b = evaluate(&p, &m, &data).unwrap();
        assert_eq!(a, b);
        assert!(a > 0.0 && a < 1.0);
    }

    #[test]
    fn adam_descends_on_a_fixed_task() {
        let m = small_model();
        let sys = SystemConfig::desk();
        let mut improved = 0;
        for trial in 0..20u64 {
            let mcfg = MetaEnvConfig {
                tasks: 1,
                max_ues: 8,
                max_slots: 8,
                seed: 100 + trial,
                ..MetaEnvConfig::desk(&sys)
            };
            let mut task: Vec<CsiEigen> =
                build_meta_env(&sys, &mcfg).unwrap().tasks.remove(0).samples;
            while task.len() < 64 {
                task.extend_from_within(..task.len().min(64 - task.len()));
            }
            let p = ModelParams::init(&m, trial);
            let refs: Vec<&CsiEigen> = task.iter().collect();
            let before = loss_and_grad(&p, &m, &refs, QuantMode::Active).unwrap().0;
            let c = TrainConfig {
                inner_steps: 32,
                ..cfg()
            };
            let (q, _) = inner_update(&p, &m, &task, &c, RngStream::new(trial, 9)).unwrap();
            let after = loss_and_grad(&q, &m, &refs, QuantMode::Active).unwrap().0;
            improved += usize::from(after <= before);
        }
        assert!(improved >= 19, "{improved}/20 trials improved");
    }

    #[test]
    fn config_validation() {
        TrainConfig::default().validate().unwrap();
        for bad in [
            TrainConfig {
                inner_steps: 0,
                ..TrainConfig::default()
            },
            TrainConfig {
                retrain_steps: 0,
                ..TrainConfig::default()
            },
            TrainConfig {
                meta_step: 1.5,
                ..TrainConfig::default()
            },
            TrainConfig {
                batch_size: 0,
                ..TrainConfig::default()
            },
            TrainConfig {
                optimizer: Optimizer::Sgd { lr: -1.0 },
                ..TrainConfig::default()
            },
        ] {
            assert!(bad.validate().is_err());
        }
    }
}
