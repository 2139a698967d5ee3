use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SchedulerConfig {
    pub factor: f64,
    pub patience: usize,
    pub min_lr: f64,
    /// Relative improvement below which an epoch counts as stalled.
    pub threshold: f64,
}

impl Default for SchedulerConfig {
    fn default() -> Self {
        Self {
            factor: 0.5,
            patience: 25,
            min_lr: 1e-6,
            threshold: 1e-4,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SchedulerStep {
    pub epoch: usize,
    pub lr: f64,
    pub reduced: bool,
    pub stop: bool,
}

/// Reduce-on-plateau learning-rate control.
///
/// An epoch improves when `loss < best·(1 − threshold)`. After `patience`
/// consecutive stalled epochs the rate is multiplied by `factor` (never
/// below `min_lr`), and both the stall counter and `best` are reset, so a
/// flat trace reduces every `patience + 1` epochs. Training stops once the
/// rate has reached `min_lr` or the epoch cap is hit.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReduceOnPlateau {
    pub config: SchedulerConfig,
    pub lr: f64,
    pub best: f64,
    pub stalled: usize,
    pub epoch: usize,
    pub max_epochs: usize,
}

impl ReduceOnPlateau {
    pub fn new(lr: f64, max_epochs: usize, config: SchedulerConfig) -> Self {
        Self {
            config,
            lr,
            best: f64::INFINITY,
            stalled: 0,
            epoch: 0,
            max_epochs,
        }
    }

    pub fn step(&mut self, loss: f64) -> SchedulerStep {
        self.epoch += 1;
        if loss < self.best * (1.0 - self.config.threshold) {
            self.best = loss;
            self.stalled = 0;
        } else {
            self.stalled += 1;
        }
        let mut reduced = false;
        let mut stop = false;
        if self.stalled >= self.config.patience.max(1) {
            self.lr = (self.lr * self.config.factor).max(self.config.min_lr);
            self.stalled = 0;
            self.best = f64::INFINITY;
            reduced = true;
            stop = self.lr <= self.config.min_lr;
        }
        stop |= self.epoch >= self.max_epochs;
        SchedulerStep {
            epoch: self.epoch,
            lr: self.lr,
            reduced,
            stop,
        }
    }
}

/// Runs a scheduler over a loss trace, stopping at the first stop flag.
pub fn replay(lr: f64, max_epochs: usize, config: SchedulerConfig, trace: &[f64]) -> Vec<SchedulerStep> {
    let mut s = ReduceOnPlateau::new(lr, max_epochs, config);
    let mut out = Vec::new();
    for &l in trace {
        let st = s.step(l);
        out.push(st);
        if st.stop {
            break;
        }
    }
    out
}
