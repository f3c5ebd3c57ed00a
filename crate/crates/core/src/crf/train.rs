use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use super::model::CrfModel;
use super::objective::TrainingSet;
use super::owlqn::{self, OwlqnParams, StopReason};
use crate::errors::{Error, Result};

/// Regularization and stopping settings.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrainConfig {
    /// L1 coefficient (orthant-wise).
    pub l1: f64,
    /// L2 coefficient; the penalty is `(l2 / 2) |w|^2`.
    pub l2: f64,
    /// Iteration cap.
    pub max_iterations: usize,
    /// Quasi-Newton history size.
    pub memory: usize,
    /// Relative objective change below which training stops.
    pub tolerance: f64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self { l1: 0.1, l2: 0.1, max_iterations: 100, memory: 10, tolerance: 1e-5 }
    }
}

impl TrainConfig {
    /// Checks every field against its domain.
    pub fn validate(&self) -> Result<()> {
        if !(self.l1.is_finite() && self.l1 >= 0.0) {
            return Err(Error::InvalidConfig(format!("l1 must be finite and non-negative, got {}", self.l1)));
        }
        if !(self.l2.is_finite() && self.l2 >= 0.0) {
            return Err(Error::InvalidConfig(format!("l2 must be finite and non-negative, got {}", self.l2)));
        }
        if self.max_iterations == 0 {
            return Err(Error::InvalidConfig("max_iterations must be positive".into()));
        }
        if self.memory == 0 {
            return Err(Error::InvalidConfig("memory must be positive".into()));
        }
        if !(self.tolerance.is_finite() && self.tolerance > 0.0) {
            return Err(Error::InvalidConfig(format!("tolerance must be positive, got {}", self.tolerance)));
        }
        Ok(())
    }
}

/// Computes the smooth objective and its gradient over a training set.
///
/// The sequential implementation is [`SequentialEvaluator`]; a threaded
/// one can split [`TrainingSet::accumulate_range`] across workers as long
/// as it reduces partial results in a fixed order.
pub trait GradientEvaluator {
    /// `NLL + (l2 / 2) |w|^2` at `params`; overwrites `grad`.
    fn evaluate(&mut self, set: &TrainingSet, params: &[f64], l2: f64, grad: &mut [f64]) -> f64;
}

impl<T: GradientEvaluator + ?Sized> GradientEvaluator for &mut T {
    fn evaluate(&mut self, set: &TrainingSet, params: &[f64], l2: f64, grad: &mut [f64]) -> f64 {
        (**self).evaluate(set, params, l2, grad)
    }
}

/// Accumulates sentences one by one in corpus order.
#[derive(Debug, Default, Clone, Copy)]
pub struct SequentialEvaluator;

impl GradientEvaluator for SequentialEvaluator {
    fn evaluate(&mut self, set: &TrainingSet, params: &[f64], l2: f64, grad: &mut [f64]) -> f64 {
        set.smooth_objective(params, l2, grad)
    }
}

/// One accepted optimizer step as seen by a training observer.
#[derive(Debug, Clone, Copy)]
pub struct Checkpoint<'a> {
    /// 1-based iteration number.
    pub iteration: usize,
    /// Full objective including the L1 term.
    pub objective: f64,
    /// Current weights in layout order.
    pub params: &'a [f64],
    /// Objective evaluations so far.
    pub evaluations: usize,
}

/// Outcome of a training run.
#[derive(Debug, Clone)]
pub struct Trained {
    /// Final model.
    pub model: CrfModel,
    /// Objective before the first step, then after every iteration.
    pub history: Vec<f64>,
    /// Why the optimizer stopped.
    pub reason: StopReason,
}

/// Minimizes the elastic-net objective from all-zero weights.
pub fn train_with<E, O>(set: &TrainingSet, config: &TrainConfig, mut evaluator: E, observe: O) -> Result<Trained>
where
    E: GradientEvaluator,
    O: FnMut(&Checkpoint<'_>),
{
    config.validate()?;
    if set.instances().is_empty() {
        return Err(Error::EmptyCorpus);
    }
    let mut observe = observe;
    let params = OwlqnParams {
        l1: config.l1,
        memory: config.memory,
        max_iterations: config.max_iterations,
        tolerance: config.tolerance,
    };
    let x0 = vec![0.0; set.layout().len()];
    let l2 = config.l2;
    let min = owlqn::minimize(
        x0,
        &params,
        |x, g| evaluator.evaluate(set, x, l2, g),
        |it| {
            observe(&Checkpoint {
                iteration: it.iteration,
                objective: it.objective,
                params: it.x,
                evaluations: it.evaluations,
            })
        },
    )?;
    Ok(Trained { model: set.model(&min.x)?, history: min.history, reason: min.reason })
}

/// [`train_with`] using the sequential evaluator and no observer.
pub fn train(set: &TrainingSet, config: &TrainConfig) -> Result<Trained> {
    train_with(set, config, SequentialEvaluator, |_| {})
}
