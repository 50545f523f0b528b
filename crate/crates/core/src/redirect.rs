//! Redirect mode for the actual system.
//!
//! The actual system can wander into a closed set of states that the virtual
//! system has learned to avoid; the contingency actions there are never
//! trained and may keep it stuck. Both systems keep an exponentially
//! weighted occupancy per state. When the actual system sits in a state whose
//! actual average exceeds `theta_high` while the virtual average is below
//! `theta_low`, it stops following the contingency actions and takes the
//! problem's escort actions until it reaches the home state.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RedirectConfig {
    pub gamma: f64,
    pub theta_high: f64,
    pub theta_low: f64,
}

impl Default for RedirectConfig {
    fn default() -> Self {
        Self {
            gamma: 1e-3,
            theta_high: 0.1,
            theta_low: 1e-5,
        }
    }
}

impl RedirectConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.gamma > 0.0 && self.gamma < 1.0) {
            return Err(Error::Config(format!(
                "redirect gamma must lie in (0,1), got {}",
                self.gamma
            )));
        }
        if !(self.theta_low < self.theta_high) {
            return Err(Error::Config(format!(
                "redirect thresholds need theta_low < theta_high, got {} and {}",
                self.theta_low, self.theta_high
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RedirectState {
    config: RedirectConfig,
    home: usize,
    actual_ema: Vec<f64>,
    virtual_ema: Vec<f64>,
    active: bool,
    activations: u64,
}

impl RedirectState {
    /// Both averages start at zero.
    pub fn new(config: RedirectConfig, n: usize, home: usize) -> Self {
        Self {
            config,
            home,
            actual_ema: vec![0.0; n],
            virtual_ema: vec![0.0; n],
            active: false,
            activations: 0,
        }
    }

    pub fn config(&self) -> &RedirectConfig {
        &self.config
    }

    pub fn is_active(&self) -> bool {
        self.active
    }

    pub fn activations(&self) -> u64 {
        self.activations
    }

    pub fn actual_ema(&self) -> &[f64] {
        &self.actual_ema
    }

    pub fn virtual_ema(&self) -> &[f64] {
        &self.virtual_ema
    }

    /// Folds slot `t` into the averages and updates the mode.
    ///
    /// `state` is `S(t)`, `belief` is `pi(t)` and `next_state` is `S(t+1)`.
    /// The trigger is evaluated on `S(t)` after the update; redirect mode
    /// ends as soon as the next state is home.
    pub fn observe(&mut self, state: usize, belief: &[f64], next_state: usize) {
        let g = self.config.gamma;
        for (i, (a, v)) in self
            .actual_ema
            .iter_mut()
            .zip(self.virtual_ema.iter_mut())
            .enumerate()
        {
            let hit = if i == state { 1.0 } else { 0.0 };
            *a += g * (hit - *a);
            *v += g * (belief[i] - *v);
        }
        if !self.active
            && state != self.home
            && self.actual_ema[state] > self.config.theta_high
            && self.virtual_ema[state] < self.config.theta_low
        {
            self.active = true;
            self.activations += 1;
        }
        if self.active && next_state == self.home {
            self.active = false;
        }
    }
}
