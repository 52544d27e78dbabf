//! Human drivers: logit route choice over remembered costs, with
//! exponential smoothing of experienced travel times.

use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::mesosim::DriverId;
use crate::net::ROUTES_PER_OD;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum HumanError {
    #[error("driver {driver}: non-finite cost expectation {value}")]
    NonFiniteCost { driver: DriverId, value: f64 },
    #[error("driver {driver}: negative observed cost {value}")]
    NegativeCost { driver: DriverId, value: f64 },
    #[error("driver {driver}: action {action} out of range")]
    BadAction { driver: DriverId, action: usize },
    #[error("driver {driver}: alpha {alpha} outside (0, 1]")]
    BadAlpha { driver: DriverId, alpha: f64 },
}

/// Unit in which costs enter the logit formula.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum CostUnit {
    Seconds,
    #[default]
    Minutes,
}

impl CostUnit {
    /// Multiplier converting seconds into this unit.
    pub fn from_seconds(self) -> f64 {
        match self {
            CostUnit::Seconds => 1.0,
            CostUnit::Minutes => 1.0 / 60.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HumanAgent {
    pub driver_id: DriverId,
    /// Index into the scenario's OD list.
    pub od: usize,
    pub start_time: f64,
    /// Decision sensitivity, negative.
    pub beta: f64,
    /// Step size in (0, 1].
    pub alpha: f64,
    /// Expected cost of each route, seconds.
    pub cost_memory: [f64; ROUTES_PER_OD],
    pub learning_enabled: bool,
    pub cost_unit: CostUnit,
}

impl HumanAgent {
    pub fn new(
        driver_id: DriverId,
        od: usize,
        start_time: f64,
        alpha: f64,
        beta: f64,
        cost_memory: [f64; ROUTES_PER_OD],
        cost_unit: CostUnit,
    ) -> Result<Self, HumanError> {
        if !(alpha > 0.0 && alpha <= 1.0) {
            return Err(HumanError::BadAlpha { driver: driver_id, alpha });
        }
        for &c in &cost_memory {
            if !c.is_finite() {
                return Err(HumanError::NonFiniteCost { driver: driver_id, value: c });
            }
            if c < 0.0 {
                return Err(HumanError::NegativeCost { driver: driver_id, value: c });
            }
        }
        Ok(HumanAgent {
            driver_id,
            od,
            start_time,
            beta,
            alpha,
            cost_memory,
            learning_enabled: true,
            cost_unit,
        })
    }

    /// `p(i) = exp(beta * c_i) / sum_j exp(beta * c_j)`, evaluated with the
    /// largest exponent subtracted.
    pub fn choice_probabilities(&self) -> Result<[f64; ROUTES_PER_OD], HumanError> {
        let scale = self.cost_unit.from_seconds();
        let mut util = [0.0; ROUTES_PER_OD];
        for (u, &c) in util.iter_mut().zip(&self.cost_memory) {
            if !c.is_finite() {
                return Err(HumanError::NonFiniteCost { driver: self.driver_id, value: c });
            }
            *u = self.beta * c * scale;
        }
        let max = util.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let mut probs = util.map(|u| (u - max).exp());
        let total: f64 = probs.iter().sum();
        for p in &mut probs {
            *p /= total;
        }
        Ok(probs)
    }

    pub fn choose_route<R: Rng + ?Sized>(&self, rng: &mut R) -> Result<usize, HumanError> {
        let probs = self.choice_probabilities()?;
        let mut draw: f64 = rng.random();
        for (i, p) in probs.iter().enumerate() {
            if draw < *p {
                return Ok(i);
            }
            draw -= p;
        }
        // Rounding left a sliver of mass past the last bucket.
        Ok(probs.iter().rposition(|&p| p > 0.0).unwrap_or(ROUTES_PER_OD - 1))
    }

    /// `c_a <- (1 - alpha) * c_a + alpha * observed`; a no-op while learning
    /// is disabled.
    pub fn update_costs(&mut self, action: usize, observed_cost: f64) -> Result<(), HumanError> {
        if action >= ROUTES_PER_OD {
            return Err(HumanError::BadAction { driver: self.driver_id, action });
        }
        if !observed_cost.is_finite() {
            return Err(HumanError::NonFiniteCost { driver: self.driver_id, value: observed_cost });
        }
        if observed_cost < 0.0 {
            return Err(HumanError::NegativeCost { driver: self.driver_id, value: observed_cost });
        }
        if !self.learning_enabled {
            return Ok(());
        }
        let c = &mut self.cost_memory[action];
        *c = (1.0 - self.alpha) * *c + self.alpha * observed_cost;
        Ok(())
    }
}
