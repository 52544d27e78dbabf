//! Independent deep Q-learning AV agents.
//!
//! Each agent makes one decision per episode, so there is no successor
//! state: the regression target of a transition is its (cost-like) reward
//! and the greedy policy takes the arg-min of the predicted costs.

mod qnet;
mod replay;

use rand::seq::index;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::behavior::BehaviorWeights;
use crate::mesosim::DriverId;
use crate::net::ROUTES_PER_OD;
use crate::stateobs::STATE_LEN;

pub use qnet::{Adam, AdamParams, QNetwork, Sample};
pub use replay::{ReplayBuffer, Transition};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum AvError {
    #[error("bad checkpoint: {0}")]
    Checkpoint(String),
    #[error("checkpoint network has sizes {found:?}, expected {expected:?}")]
    ShapeMismatch { found: Vec<usize>, expected: Vec<usize> },
}

/// Learning hyperparameters shared by every AV of a scenario.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DqnParams {
    pub hidden_layers: Vec<usize>,
    pub buffer_capacity: usize,
    pub batch_size: usize,
    pub epsilon_start: f64,
    pub epsilon_decay: f64,
    pub epsilon_min: f64,
    pub adam: AdamParams,
}

impl Default for DqnParams {
    fn default() -> Self {
        DqnParams {
            hidden_layers: vec![32, 64, 32],
            buffer_capacity: 256,
            batch_size: 32,
            epsilon_start: 0.99,
            epsilon_decay: 0.998,
            epsilon_min: 0.01,
            adam: AdamParams::default(),
        }
    }
}

impl DqnParams {
    pub fn layer_sizes(&self) -> Vec<usize> {
        let mut sizes = vec![STATE_LEN];
        sizes.extend(&self.hidden_layers);
        sizes.push(ROUTES_PER_OD);
        sizes
    }
}

pub type State = [f64; STATE_LEN];

#[derive(Debug, Clone)]
pub struct AvAgent {
    pub driver_id: DriverId,
    pub od: usize,
    pub start_time: f64,
    pub behavior: BehaviorWeights,
    pub qnet: QNetwork,
    pub buffer: ReplayBuffer,
    pub epsilon: f64,
    pub learning_enabled: bool,
    adam: Adam,
    rng: ChaCha8Rng,
    batch_size: usize,
    epsilon_decay: f64,
    epsilon_min: f64,
}

impl AvAgent {
    /// Network weights and all later sampling derive from `seed`.
    pub fn new(
        driver_id: DriverId,
        od: usize,
        start_time: f64,
        behavior: BehaviorWeights,
        params: &DqnParams,
        seed: u64,
    ) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let qnet = QNetwork::new(&params.layer_sizes(), &mut rng);
        let adam = Adam::new(params.adam, qnet.params().len());
        AvAgent {
            driver_id,
            od,
            start_time,
            behavior,
            qnet,
            buffer: ReplayBuffer::new(params.buffer_capacity),
            epsilon: params.epsilon_start,
            learning_enabled: true,
            adam,
            rng,
            batch_size: params.batch_size,
            epsilon_decay: params.epsilon_decay,
            epsilon_min: params.epsilon_min,
        }
    }

    /// Predicted cost of each action.
    pub fn q_values(&self, state: &State) -> Vec<f64> {
        self.qnet.forward(state)
    }

    /// Epsilon-greedy over predicted costs; greedy ties go to the lowest index.
    pub fn act(&mut self, state: &State) -> usize {
        if self.rng.random::<f64>() < self.epsilon {
            return self.rng.random_range(0..ROUTES_PER_OD);
        }
        argmin(&self.q_values(state))
    }

    pub fn store(&mut self, state: State, action: usize, reward: f64) {
        self.buffer.push(Transition { state, action, reward });
    }

    /// One Adam step on a uniformly sampled batch; `None` until the buffer
    /// holds a full batch.
    pub fn train_step(&mut self) -> Option<f64> {
        if !self.learning_enabled || self.buffer.len() < self.batch_size {
            return None;
        }
        let picks = index::sample(&mut self.rng, self.buffer.len(), self.batch_size);
        let batch: Vec<Sample<'_>> = picks
            .iter()
            .map(|i| {
                let t = self.buffer.get(i);
                Sample { input: &t.state, action: t.action, target: t.reward }
            })
            .collect();
        let (loss, grad) = self.qnet.loss_and_grad(&batch);
        self.adam.apply(self.qnet.params_mut(), &grad);
        Some(loss)
    }

    pub fn decay_epsilon(&mut self) {
        self.epsilon = (self.epsilon * self.epsilon_decay).max(self.epsilon_min);
    }

    /// Replaces the network weights from a checkpoint of identical shape.
    pub fn load_weights(&mut self, net: QNetwork) -> Result<(), AvError> {
        if net.sizes() != self.qnet.sizes() {
            return Err(AvError::ShapeMismatch { found: net.sizes(), expected: self.qnet.sizes() });
        }
        self.qnet = net;
        Ok(())
    }
}

pub fn argmin(values: &[f64]) -> usize {
    let mut best = 0;
    for (i, v) in values.iter().enumerate().skip(1) {
        if *v < values[best] {
            best = i;
        }
    }
    best
}
