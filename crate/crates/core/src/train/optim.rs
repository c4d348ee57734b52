use serde::{Deserialize, Serialize};

use crate::model::ModelParams;

/// Inner-loop optimiser choice.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Optimizer {
    Sgd {
        lr: f64,
    },
    Adam {
        lr: f64,
        #[serde(default = "default_beta1")]
        beta1: f64,
        #[serde(default = "default_beta2")]
        beta2: f64,
        #[serde(default = "default_eps")]
        eps: f64,
    },
}

fn default_beta1() -> f64 {
    0.9
}
fn default_beta2() -> f64 {
    0.999
}
fn default_eps() -> f64 {
    1e-8
}

impl Default for Optimizer {
    fn default() -> Self {
        Optimizer::adam(1e-3)
    }
}

impl Optimizer {
    pub fn adam(lr: f64) -> Self {
        Optimizer::Adam {
            lr,
            beta1: default_beta1(),
            beta2: default_beta2(),
            eps: default_eps(),
        }
    }

    pub fn lr(&self) -> f64 {
        match *self {
            Optimizer::Sgd { lr } | Optimizer::Adam { lr, .. } => lr,
        }
    }

    pub fn with_lr(self, lr: f64) -> Self {
        match self {
            Optimizer::Sgd { .. } => Optimizer::Sgd { lr },
            Optimizer::Adam {
                beta1, beta2, eps, ..
            } => Optimizer::Adam {
                lr,
                beta1,
                beta2,
                eps,
            },
        }
    }

    pub fn state(&self, n_params: usize) -> OptimizerState {
        let moments = matches!(self, Optimizer::Adam { .. });
        OptimizerState {
            opt: *self,
            m: if moments {
                vec![0.0; n_params]
            } else {
                Vec::new()
            },
            v: if moments {
                vec![0.0; n_params]
            } else {
                Vec::new()
            },
            t: 0,
        }
    }
}

/// Per-run optimiser memory over the flat parameter vector.
#[derive(Debug, Clone)]
pub struct OptimizerState {
    opt: Optimizer,
    m: Vec<f64>,
    v: Vec<f64>,
    t: i32,
}

impl OptimizerState {
    pub fn step(&mut self, params: &mut ModelParams, grads: &ModelParams) {
        self.t += 1;
        let grads = grads.slices();
        match self.opt {
            Optimizer::Sgd { lr } => {
                for (p, g) in params.slices_mut().into_iter().zip(grads) {
                    for (x, &dx) in p.iter_mut().zip(g) {
                        *x -= lr * dx;
                    }
                }
            }
            Optimizer::Adam {
                lr,
                beta1,
                beta2,
                eps,
            } => {
                let c1 = 1.0 - beta1.powi(self.t);
                let c2 = 1.0 - beta2.powi(self.t);
                let mut k = 0;
                for (p, g) in params.slices_mut().into_iter().zip(grads) {
                    for (x, &dx) in p.iter_mut().zip(g) {
                        let m = &mut self.m[k];
                        let v = &mut self.v[k];
                        *m = beta1 * *m + (1.0 - beta1) * dx;
                        *v = beta2 * *v + (1.0 - beta2) * dx * dx;
                        *x -= lr * (*m / c1) / ((*v / c2).sqrt() + eps);
                        k += 1;
                    }
                }
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::ModelConfig;

    #[test]
    fn first_adam_step_moves_by_lr_times_sign() {
        let cfg = ModelConfig::desk(4, 2);
        let mut p = ModelParams::init(&cfg, 1);
        let before = p.to_flat();
        let mut g = p.zeros_like();
        g.for_each_mut(|x| *x = 0.5);
        let mut s = Optimizer::adam(1e-2).state(p.len());
        s.step(&mut p, &g);
        for (a, b) in before.iter().zip(p.to_flat()) {
            assert!(((a - b) - 1e-2 * 0.5 / (0.5 + 1e-8)).abs() < 1e-12);
        }
    }

    #[test]
    fn zero_lr_is_identity() {
        let cfg = ModelConfig::desk(4, 2);
        for opt in [Optimizer::Sgd { lr: 0.0 }, Optimizer::adam(0.0)] {
            let mut p = ModelParams::init(&cfg, 2);
            let orig = p.clone();
            let mut g = p.zeros_like();
            g.for_each_mut(|x| *x = 0.3);
            opt.state(p.len()).step(&mut p, &g);
            assert_eq!(p, orig);
        }
    }
}
