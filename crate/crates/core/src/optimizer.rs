//! Stochastic-approximation driver for the buffer-size cost.
//!
//! The iterate is a real number: committing to integers directly would jam
//! the recursion once the decaying step sizes fall below one buffer unit, so
//! fractional descents accumulate in `theta` and only the evaluation point
//! is rounded. Each iteration rounds `theta` to a buffer size, asks the
//! evaluator for one fresh sample of the cost and its surrogate derivative
//! at that size, truncates the displacement to `r`, and steps downhill.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OptimizerConfig {
    /// Cost per buffer unit, nonnegative.
    pub a: f64,
    /// Displacement truncation threshold, positive.
    pub r: f64,
    /// Step-size scale: the step at iteration `i` is `lambda0 / i^p`.
    pub lambda0: f64,
    /// Step-size decay exponent in `(0.5, 1]`, so the steps sum to infinity
    /// while their squares stay summable.
    pub p: f64,
    pub iterations: u64,
    /// Initial real-valued iterate.
    pub theta0: f64,
    /// Smallest admissible buffer size.
    #[serde(default = "default_k_min")]
    pub k_min: u32,
}

fn default_k_min() -> u32 {
    1
}

impl OptimizerConfig {
    pub fn validate(&self) -> Result<()> {
        if self.a < 0.0 {
            return Err(Error::parameter(format!("buffer-unit cost must be >= 0, got {}", self.a)));
        }
        if !(self.r > 0.0) {
            return Err(Error::parameter(format!("truncation threshold must be > 0, got {}", self.r)));
        }
        if !(self.lambda0 > 0.0) {
            return Err(Error::parameter(format!("step scale must be > 0, got {}", self.lambda0)));
        }
        if !(self.p > 0.5 && self.p <= 1.0) {
            return Err(Error::parameter(format!(
                "step exponent must lie in (0.5, 1], got {}",
                self.p
            )));
        }
        if self.iterations < 1 {
            return Err(Error::parameter("at least one iteration is required"));
        }
        if self.k_min < 1 {
            return Err(Error::parameter("smallest buffer size must be at least 1"));
        }
        Ok(())
    }
}

/// One optimizer step: the iterate entering the step, the evaluated buffer
/// size, the sampled cost and derivative, and the applied displacement.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IterateRecord {
    pub i: u64,
    pub theta: f64,
    pub k: u32,
    #[serde(rename = "F")]
    pub cost: f64,
    #[serde(rename = "Fc_prime")]
    pub derivative: f64,
    pub d: f64,
}

/// Step size `lambda0 / i^p` for iteration `i >= 1`.
pub fn step_size(i: u64, config: &OptimizerConfig) -> Result<f64> {
    if i == 0 {
        return Err(Error::parameter("iteration index starts at 1"));
    }
    Ok(config.lambda0 / (i as f64).powf(config.p))
}

/// Truncate the raw displacement `lambda * derivative` to magnitude `r`.
pub fn truncate_displacement(lambda: f64, derivative: f64, r: f64) -> f64 {
    let raw = lambda * derivative;
    if raw.abs() <= r {
        raw
    } else {
        r * derivative.signum()
    }
}

/// Round to the closest integer (halves up) and clamp to the smallest
/// admissible buffer size.
pub fn round_to_buffer_size(theta: f64, k_min: u32) -> u32 {
    let rounded = (theta + 0.5).floor();
    if rounded < k_min as f64 {
        k_min
    } else {
        rounded as u32
    }
}

/// One iteration: evaluate at the rounded buffer size, truncate, descend.
/// Returns the record and the next iterate.
pub fn step<E>(
    theta: f64,
    evaluator: &mut E,
    i: u64,
    config: &OptimizerConfig,
) -> Result<(IterateRecord, f64)>
where
    E: FnMut(u32, u64) -> Result<(f64, f64)>,
{
    let k = round_to_buffer_size(theta, config.k_min);
    let (cost, derivative) = evaluator(k, i)
        .map_err(|e| Error::Evaluator { iteration: i, source: Box::new(e) })?;
    let lambda = step_size(i, config)?;
    let d = truncate_displacement(lambda, derivative, config.r);
    let record = IterateRecord { i, theta, k, cost, derivative, d };
    Ok((record, theta - d))
}

/// Run the full recursion for `config.iterations` steps. The evaluator is
/// called once per iteration with the buffer size and the iteration index;
/// wiring it to a seeded workload makes the whole run reproducible.
pub fn run<E>(config: &OptimizerConfig, mut evaluator: E) -> Result<Vec<IterateRecord>>
where
    E: FnMut(u32, u64) -> Result<(f64, f64)>,
{
    config.validate()?;
    let mut theta = config.theta0;
    let mut records = Vec::with_capacity(config.iterations as usize);
    for i in 1..=config.iterations {
        let (record, next) = step(theta, &mut evaluator, i, config)?;
        records.push(record);
        theta = next;
    }
    Ok(records)
}
