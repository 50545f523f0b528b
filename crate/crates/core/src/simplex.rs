//! Points of the probability simplex over the basic states.
//!
//! [`BeliefVector`] stores normalized log-probabilities. The multiplicative
//! update of the learner then becomes an addition in log space followed by a
//! log-sum-exp renormalization, which stays finite even when exponents of
//! size `V * c_max * T / alpha` appear. A weight that drops far below the
//! maximum reads back as probability `0.0` but keeps its finite log value,
//! so it can grow again later.

use crate::error::{Error, Result};

/// Tolerance accepted when checking that a mass function sums to one.
pub const NORMALIZATION_TOL: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq)]
pub struct BeliefVector {
    log_probs: Vec<f64>,
    probs: Vec<f64>,
}

impl BeliefVector {
    pub fn uniform(n: usize) -> Self {
        assert!(n > 0, "belief over an empty state set");
        let p = 1.0 / n as f64;
        Self {
            log_probs: vec![p.ln(); n],
            probs: vec![p; n],
        }
    }

    /// Builds the normalized belief proportional to `exp(log_weights)`.
    pub fn from_log_weights(mut log_weights: Vec<f64>) -> Result<Self> {
        if log_weights.is_empty() {
            return Err(Error::Domain("empty log-weight vector".into()));
        }
        if let Some(bad) = log_weights.iter().find(|x| !x.is_finite()) {
            return Err(Error::Domain(format!("non-finite log weight {bad}")));
        }
        let max = log_weights
            .iter()
            .copied()
            .fold(f64::NEG_INFINITY, f64::max);
        let sum: f64 = log_weights.iter().map(|l| (l - max).exp()).sum();
        let log_norm = max + sum.ln();
        let mut probs = Vec::with_capacity(log_weights.len());
        for l in log_weights.iter_mut() {
            *l -= log_norm;
            probs.push(l.exp());
        }
        Ok(Self {
            log_probs: log_weights,
            probs,
        })
    }

    /// Builds a belief from a strictly positive mass function.
    pub fn from_probs(probs: &[f64]) -> Result<Self> {
        check_simplex(probs)?;
        if let Some(i) = probs.iter().position(|&p| p <= 0.0) {
            return Err(Error::Domain(format!(
                "belief entry {i} is not strictly positive"
            )));
        }
        Self::from_log_weights(probs.iter().map(|p| p.ln()).collect())
    }

    pub fn len(&self) -> usize {
        self.probs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.probs.is_empty()
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn log_probs(&self) -> &[f64] {
        &self.log_probs
    }

    /// Returns the belief proportional to `self_i * exp(-scores_i / alpha)`.
    ///
    /// This is the minimizer over the simplex of
    /// `p . scores + alpha * D(p; self)`.
    pub fn exponentiated_update(&self, scores: &[f64], alpha: f64) -> Result<Self> {
        if scores.len() != self.len() {
            return Err(Error::Domain(format!(
                "score length {} does not match belief length {}",
                scores.len(),
                self.len()
            )));
        }
        let weights = self
            .log_probs
            .iter()
            .zip(scores)
            .map(|(l, m)| l - m / alpha)
            .collect();
        Self::from_log_weights(weights)
    }
}

fn check_simplex(p: &[f64]) -> Result<()> {
    if p.is_empty() {
        return Err(Error::InvalidDistribution("empty mass function".into()));
    }
    if let Some(x) = p.iter().find(|x| !x.is_finite() || **x < 0.0) {
        return Err(Error::InvalidDistribution(format!("bad entry {x}")));
    }
    let total: f64 = p.iter().sum();
    if (total - 1.0).abs() > NORMALIZATION_TOL {
        return Err(Error::InvalidDistribution(format!("mass sums to {total}")));
    }
    Ok(())
}

/// Inverse-CDF state sampler.
///
/// Returns the smallest index `j` with `q_0 + ... + q_j > r`, so `r` in
/// `[q_0 + ... + q_{j-1}, q_0 + ... + q_j)` selects `j` (0-based). If
/// rounding leaves `r` above the accumulated mass, the last state with
/// positive mass is returned.
pub fn sample_state(q: &[f64], r: f64) -> Result<usize> {
    check_simplex(q)?;
    if !(0.0..=1.0).contains(&r) {
        return Err(Error::Domain(format!("uniform draw {r} outside [0,1]")));
    }
    let mut acc = 0.0;
    let mut last_positive = 0;
    for (j, &qj) in q.iter().enumerate() {
        acc += qj;
        if qj > 0.0 {
            last_positive = j;
        }
        if acc > r {
            return Ok(j);
        }
    }
    Ok(last_positive)
}

/// [`sample_state`] on a sparse row of `(state, probability)` pairs sorted
/// by state. Gives the same answer as the dense rule on the expanded row.
pub(crate) fn sample_sparse(row: &[(usize, f64)], r: f64) -> usize {
    let mut acc = 0.0;
    let mut last_positive = row.first().map(|e| e.0).unwrap_or(0);
    for &(j, p) in row {
        acc += p;
        if p > 0.0 {
            last_positive = j;
        }
        if acc > r {
            return j;
        }
    }
    last_positive
}

/// Kullback-Leibler divergence `D(p; q) = sum_i p_i log(p_i / q_i)`.
///
/// Terms with `p_i = 0` contribute zero; every `q_i` must be positive.
pub fn kl_divergence(p: &[f64], q: &[f64]) -> Result<f64> {
    if p.len() != q.len() {
        return Err(Error::Domain(format!(
            "length mismatch: {} vs {}",
            p.len(),
            q.len()
        )));
    }
    if let Some(i) = q.iter().position(|&x| x <= 0.0 || !x.is_finite()) {
        return Err(Error::Domain(format!(
            "reference distribution entry {i} is not strictly positive"
        )));
    }
    Ok(p.iter()
        .zip(q)
        .filter(|(pi, _)| **pi > 0.0)
        .map(|(pi, qi)| pi * (pi / qi).ln())
        .sum::<f64>()
        .max(0.0))
}

pub fn l1_distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).sum()
}
