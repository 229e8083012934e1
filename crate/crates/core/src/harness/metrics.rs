//! Learning-curve summaries.

use crate::error::{Error, Result};

/// Area under the learning curve: the plain sum of per-episode returns.
pub fn auc(returns: &[f64]) -> Result<f64> {
    if returns.is_empty() {
        return Err(Error::InvalidInput("AUC of an empty curve".into()));
    }
    Ok(returns.iter().sum())
}

/// Relative improvement `(a - b) / |b|` of area `a` over baseline area `b`.
pub fn auc_improvement(a: f64, b: f64) -> Result<f64> {
    if b == 0.0 {
        return Err(Error::UndefinedBaseline);
    }
    Ok((a - b) / b.abs())
}

/// Mean return over the final `window` episodes.
pub fn policy_quality(returns: &[f64], window: usize) -> Result<f64> {
    if window == 0 {
        return Err(Error::InvalidInput(
            "policy-quality window must be at least 1".into(),
        ));
    }
    if returns.len() < window {
        return Err(Error::InvalidInput(format!(
            "run of {} episodes is shorter than the window of {window}",
            returns.len()
        )));
    }
    let tail = &returns[returns.len() - window..];
    Ok(tail.iter().sum::<f64>() / window as f64)
}

/// Mean and sample standard deviation (zero for a single value).
pub fn mean_std(values: &[f64]) -> Option<(f64, f64)> {
    if values.is_empty() {
        return None;
    }
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    if values.len() == 1 {
        return Some((mean, 0.0));
    }
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
    Some((mean, var.sqrt()))
}
