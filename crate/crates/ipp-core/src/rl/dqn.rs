//! DQN training: FIFO replay buffer, epsilon schedule, TD updates against
//! a periodically synced target network, and the single-threaded
//! deterministic training loop.

use alloc::sync::Arc;
use alloc::vec::Vec;

use rand::Rng;
use rand_chacha::ChaCha8Rng;

use crate::field::{Cell, FieldInstance};
use crate::nn::{
    backward, forward_cached, forward_q, optimizer_step, AdamState, Gradients, NetSpec,
    QNetworkParams,
};
use crate::rng::{self, SeedMix};

use super::{epsilon_greedy, ActionSet, Env, RewardParams, RlError, Transition};

/// Training hyperparameters. The discount, interaction budget, and the
/// reward constants come from the experiment protocol; the remaining
/// values are standard DQN defaults, all overridable.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DqnConfig {
    pub discount: f64,
    pub buffer_capacity: usize,
    pub batch_size: usize,
    pub epsilon_start: f64,
    pub epsilon_end: f64,
    /// Fraction of total interactions over which epsilon decays linearly.
    pub epsilon_decay_frac: f64,
    /// Gradient updates between target-network syncs.
    pub target_sync_interval: usize,
    pub learning_rate: f64,
    pub total_interactions: usize,
    /// Stored rewards are divided by this; keeps TD targets near unit
    /// scale given the steep reward denominator. Recorded in checkpoints.
    pub reward_scale: f64,
}

impl Default for DqnConfig {
    fn default() -> Self {
        DqnConfig {
            discount: 0.99,
            buffer_capacity: 50_000,
            batch_size: 32,
            epsilon_start: 1.0,
            epsilon_end: 0.05,
            epsilon_decay_frac: 0.3,
            target_sync_interval: 1_000,
            learning_rate: 1e-4,
            total_interactions: 100_000,
            reward_scale: default_reward_scale(),
        }
    }
}

/// `2^(4e)`, the reward magnitude at rmse 0.5 and t' = 1.
pub fn default_reward_scale() -> f64 {
    2.0f64.powf(super::BETA_FOUR_E)
}

impl DqnConfig {
    /// Reduced budget for the 16x16 desk profile.
    pub fn desk() -> Self {
        DqnConfig { total_interactions: 10_000, ..DqnConfig::default() }
    }

    pub fn validate(&self) -> Result<(), RlError> {
        if !(0.0..=1.0).contains(&self.discount) {
            return Err(RlError::BadConfig("discount must lie in [0, 1]"));
        }
        if self.buffer_capacity == 0 || self.batch_size == 0 || self.target_sync_interval == 0 {
            return Err(RlError::BadConfig("capacities and intervals must be positive"));
        }
        if self.batch_size > self.buffer_capacity {
            return Err(RlError::BadConfig("batch size exceeds buffer capacity"));
        }
        if !(0.0..=1.0).contains(&self.epsilon_start)
            || !(0.0..=1.0).contains(&self.epsilon_end)
            || !(0.0..=1.0).contains(&self.epsilon_decay_frac)
        {
            return Err(RlError::BadConfig("epsilon schedule values must lie in [0, 1]"));
        }
        if !(self.learning_rate > 0.0) || !(self.reward_scale > 0.0) {
            return Err(RlError::BadConfig("learning rate and reward scale must be positive"));
        }
        if self.total_interactions == 0 {
            return Err(RlError::BadConfig("total_interactions must be positive"));
        }
        Ok(())
    }
}

/// Linear epsilon schedule over the first `epsilon_decay_frac` of the
/// interaction budget, flat afterwards.
pub fn epsilon_at(config: &DqnConfig, interaction: usize) -> f64 {
    let horizon = (config.total_interactions as f64 * config.epsilon_decay_frac).max(1.0);
    let progress = (interaction as f64 / horizon).min(1.0);
    config.epsilon_start + (config.epsilon_end - config.epsilon_start) * progress
}

/// Bounded FIFO transition store with uniform sampling.
#[derive(Debug, Clone, Default)]
pub struct ReplayBuffer {
    items: alloc::collections::VecDeque<Transition>,
    capacity: usize,
}

impl ReplayBuffer {
    pub fn new(capacity: usize) -> Self {
        ReplayBuffer { items: alloc::collections::VecDeque::with_capacity(capacity.min(65_536)), capacity }
    }

    /// Appends a transition, evicting the oldest once full.
    pub fn push(&mut self, transition: Transition) {
        if self.items.len() == self.capacity {
            self.items.pop_front();
        }
        self.items.push_back(transition);
    }

    pub fn len(&self) -> usize {
        self.items.len()
    }

    pub fn is_empty(&self) -> bool {
        self.items.is_empty()
    }

    pub fn get(&self, idx: usize) -> &Transition {
        &self.items[idx]
    }

    /// Uniform sample of `n` transitions (with replacement).
    pub fn sample(&self, n: usize, rng: &mut ChaCha8Rng) -> Vec<&Transition> {
        (0..n).map(|_| &self.items[rng.gen_range(0..self.items.len())]).collect()
    }
}

/// Point on the per-episode learning curve (rewards are stored scaled).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LearningCurvePoint {
    pub episode: usize,
    pub reward: f64,
}

/// Owns the online and target networks plus optimizer state.
#[derive(Debug, Clone)]
pub struct DqnTrainer {
    pub net: QNetworkParams,
    pub target: QNetworkParams,
    adam: AdamState,
    pub config: DqnConfig,
    updates: usize,
    pub skipped_updates: usize,
}

impl DqnTrainer {
    pub fn new(spec: NetSpec, config: DqnConfig, seed: u64) -> Result<Self, RlError> {
        config.validate()?;
        let net = QNetworkParams::init(spec, seed)?;
        let target = net.clone();
        let adam = AdamState::new(&net);
        Ok(DqnTrainer { net, target, adam, config, updates: 0, skipped_updates: 0 })
    }

    /// TD error of one transition under the current networks:
    /// `y - Q(s, a)` with `y = r` at terminals and
    /// `y = r + gamma * max_a' Q_target(s', a')` otherwise.
    pub fn td_error(&self, transition: &Transition) -> Result<f64, RlError> {
        let q = forward_q(&self.net, &transition.state.as_input())?;
        let y = self.td_target(transition)?;
        Ok(y - q[transition.action])
    }

    fn td_target(&self, transition: &Transition) -> Result<f64, RlError> {
        match &transition.next_state {
            None => Ok(transition.reward),
            Some(next) => {
                let q_next = forward_q(&self.target, &next.as_input())?;
                let max_next = q_next.iter().fold(f64::NEG_INFINITY, |m, &v| m.max(v));
                Ok(transition.reward + self.config.discount * max_next)
            }
        }
    }

    /// One minibatch update of squared TD error; returns the mean loss.
    /// Syncs the target network every `target_sync_interval` updates.
    pub fn td_update(&mut self, batch: &[&Transition]) -> Result<f64, RlError> {
        let mut grads = Gradients::zeros(&self.net.spec);
        let mut loss = 0.0;
        let inv = 1.0 / batch.len() as f64;
        for transition in batch {
            let (q, cache) = forward_cached(&self.net, &transition.state.as_input())?;
            let y = self.td_target(transition)?;
            let err = q[transition.action] - y;
            loss += err * err * inv;
            let mut upstream = alloc::vec![0.0f64; q.len()];
            upstream[transition.action] = 2.0 * err * inv;
            backward(&self.net, &cache, &upstream, &mut grads);
        }
        if !optimizer_step(&mut self.net, &grads, &mut self.adam, self.config.learning_rate) {
            self.skipped_updates += 1;
        }
        self.updates += 1;
        if self.updates % self.config.target_sync_interval == 0 {
            self.target = self.net.clone();
        }
        Ok(loss)
    }

    pub fn updates(&self) -> usize {
        self.updates
    }
}

/// Final artifacts of a training run.
#[derive(Debug, Clone)]
pub struct TrainResult {
    pub params: QNetworkParams,
    pub curve: Vec<LearningCurvePoint>,
    pub interactions: usize,
    pub episodes: usize,
    pub skipped_updates: usize,
}

/// Runs the full training loop: episodes sample instances uniformly with
/// replacement, transitions store scaled rewards, and one gradient update
/// follows every interaction once the buffer can fill a batch. Fully
/// deterministic in `seed`.
#[allow(clippy::too_many_arguments)]
pub fn train_dqn(
    instances: &[FieldInstance],
    actions: &ActionSet,
    spec: NetSpec,
    config: &DqnConfig,
    reward_params: &RewardParams,
    budget: usize,
    seed_locs: &[Cell],
    seed: u64,
    mut progress: Option<&mut dyn FnMut(usize, usize)>,
) -> Result<TrainResult, RlError> {
    if instances.is_empty() {
        return Err(RlError::NoInstances);
    }
    config.validate()?;
    let mut trainer =
        DqnTrainer::new(spec, *config, SeedMix::new(seed).str("dqn-init").build())?;
    let mut buffer = ReplayBuffer::new(config.buffer_capacity);
    let mut rng = rng::rng_from_seed(SeedMix::new(seed).str("dqn-train").build());
    let mut curve = Vec::new();
    let mut interactions = 0usize;
    let mut episode = 0usize;
    while interactions < config.total_interactions {
        let instance = &instances[rng.gen_range(0..instances.len())];
        let episode_seed = SeedMix::new(seed).str("episode").u64(episode as u64).build();
        let mut env = Env::new(
            instance,
            actions.clone(),
            budget,
            seed_locs,
            episode_seed,
            true,
            *reward_params,
        )?;
        let mut state = Arc::new(env.current_state()?);
        let mut episode_reward = 0.0;
        loop {
            let epsilon = epsilon_at(config, interactions);
            let q = forward_q(&trainer.net, &state.as_input())?;
            let action = epsilon_greedy(&q, epsilon, &mut rng);
            let step = env.step(action)?;
            let scaled = step.reward / config.reward_scale;
            episode_reward += scaled;
            let next = step.next_state.map(Arc::new);
            buffer.push(Transition::new(state.clone(), action, scaled, next.clone()));
            interactions += 1;
            if buffer.len() >= config.batch_size {
                let batch = buffer.sample(config.batch_size, &mut rng);
                trainer.td_update(&batch)?;
            }
            match next {
                Some(n) => state = n,
                None => break,
            }
        }
        curve.push(LearningCurvePoint { episode, reward: episode_reward });
        episode += 1;
        if let Some(cb) = progress.as_mut() {
            cb(interactions, config.total_interactions);
        }
    }
    Ok(TrainResult {
        params: trainer.net,
        curve,
        interactions,
        episodes: episode,
        skipped_updates: trainer.skipped_updates,
    })
}
