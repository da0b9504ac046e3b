//! High-level planner-selection control: the MDP over prediction states,
//! the counterfactual reward, and the DQN trainer/evaluator that blends
//! local-search planners.

mod dqn;
mod env;
mod eval;

pub use dqn::{
    epsilon_at, train_dqn, DqnConfig, DqnTrainer, LearningCurvePoint, ReplayBuffer, TrainResult,
};
pub use env::{hallucinated_delta, Env, EnvStep};
pub use eval::{
    action_history_matrix, empirical_mixture_policy, evaluate_policy, rollout, ActionChooser,
    EvalReport, MixturePolicy,
};

use alloc::string::String;
use alloc::sync::Arc;
use alloc::vec::Vec;

use rand::Rng;
use rand_chacha::ChaCha8Rng;

use crate::field::{Cell, GridField};
use crate::kriging::PredictionMap;
use crate::mission::{ls_label, MissionError};
use crate::nn::{NnError, StateInput};

/// Reward exponent `4e` written out exactly.
pub const BETA_FOUR_E: f64 = 4.0 * core::f64::consts::E;

#[derive(Debug, thiserror::Error, PartialEq)]
pub enum RlError {
    #[error("decision step {t} outside [{lo}, {hi}]")]
    StepOutOfRange { t: usize, lo: usize, hi: usize },
    #[error("position ({0}, {1}) outside {2}x{3} grid")]
    PositionOutOfBounds(usize, usize, usize, usize),
    #[error("action set must hold 2 or 3 distinct local planners")]
    InvalidActionSet,
    #[error("action index {0} out of range for {1} actions")]
    InvalidAction(usize, usize),
    #[error("episode already finished")]
    EpisodeFinished,
    #[error("invalid configuration: {0}")]
    BadConfig(&'static str),
    #[error("mixture probabilities must be non-negative and sum to 1")]
    BadMixture,
    #[error("no training instances supplied")]
    NoInstances,
    #[error(transparent)]
    Mission(#[from] MissionError),
    #[error(transparent)]
    Nn(#[from] NnError),
}

/// MDP state observed by the controller before choosing sample `t`:
/// the latest prediction mean and variance grids, a one-hot robot
/// position grid, and the normalized step `t / T`.
#[derive(Debug, Clone, PartialEq)]
pub struct MdpState {
    pub mean: GridField,
    pub variance: GridField,
    pub position_grid: GridField,
    pub t_norm: f64,
}

impl MdpState {
    pub fn as_input(&self) -> StateInput<'_> {
        StateInput {
            mean: &self.mean,
            variance: &self.variance,
            position: &self.position_grid,
            t_norm: self.t_norm,
        }
    }

    /// Recovers the robot cell from the indicator grid.
    pub fn position(&self) -> Cell {
        for cell in self.position_grid.cells() {
            if self.position_grid.at(cell) == 1.0 {
                return cell;
            }
        }
        unreachable!("indicator grid always holds exactly one 1")
    }
}

/// Packs the controller state for decision step `t` of a `budget`-sample
/// mission. Valid steps run from 4 (first decision after the three
/// seeds) through the budget itself.
pub fn make_state(
    pmap: &PredictionMap,
    position: Cell,
    t: usize,
    budget: usize,
) -> Result<MdpState, RlError> {
    if t < 4 || t > budget {
        return Err(RlError::StepOutOfRange { t, lo: 4, hi: budget });
    }
    let (h, w) = pmap.mean.dims();
    if position.row >= h || position.col >= w {
        return Err(RlError::PositionOutOfBounds(position.row, position.col, h, w));
    }
    let mut indicator = GridField::filled(h, w, 0.0).expect("pmap dims are valid");
    indicator.set(position.row, position.col, 1.0);
    Ok(MdpState {
        mean: pmap.mean.clone(),
        variance: pmap.variance.clone(),
        position_grid: indicator,
        t_norm: t as f64 / budget as f64,
    })
}

/// Ordered set of local-search planners the controller may execute.
#[derive(Debug, Clone, PartialEq)]
pub struct ActionSet {
    radii: Vec<f64>,
    labels: Vec<String>,
}

impl ActionSet {
    /// Builds the set from LS levels, e.g. `[3, 2]` for radii 30 and 20.
    pub fn from_levels(levels: &[u32]) -> Result<Self, RlError> {
        if !(2..=3).contains(&levels.len()) {
            return Err(RlError::InvalidActionSet);
        }
        let mut radii = Vec::with_capacity(levels.len());
        let mut labels = Vec::with_capacity(levels.len());
        for &level in levels {
            if level == 0 {
                return Err(RlError::InvalidActionSet);
            }
            let radius = level as f64 * 10.0;
            if radii.contains(&radius) {
                return Err(RlError::InvalidActionSet);
            }
            radii.push(radius);
            labels.push(ls_label(radius));
        }
        Ok(ActionSet { radii, labels })
    }

    pub fn len(&self) -> usize {
        self.radii.len()
    }

    pub fn is_empty(&self) -> bool {
        self.radii.is_empty()
    }

    pub fn radius(&self, action: usize) -> f64 {
        self.radii[action]
    }

    pub fn label(&self, action: usize) -> &str {
        &self.labels[action]
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn index_of_label(&self, label: &str) -> Option<usize> {
        self.labels.iter().position(|l| l == label)
    }
}

/// Constants of the reward shaping.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RewardParams {
    /// Offset keeping the denominator positive on normalized fields.
    pub c: f64,
    /// Error-weighting exponent.
    pub beta: f64,
    /// Hard floor for the denominator base.
    pub denominator_floor: f64,
}

impl Default for RewardParams {
    fn default() -> Self {
        RewardParams { c: 1.0, beta: BETA_FOUR_E, denominator_floor: 1e-6 }
    }
}

/// Shaped reward: `sgn(delta) * t_norm / max(c - rmse, floor)^beta`,
/// where the sign is positive exactly when the chosen action's outcome
/// was no worse than the best alternative.
pub fn reward(delta: f64, rmse_t: f64, t_norm: f64, params: &RewardParams) -> f64 {
    debug_assert!(rmse_t >= 0.0);
    let sign = if delta >= 0.0 { 1.0 } else { -1.0 };
    let base = (params.c - rmse_t).max(params.denominator_floor);
    sign * t_norm / base.powf(params.beta)
}

/// Epsilon-greedy action selection; exploits the first argmax on ties.
pub fn epsilon_greedy(q_values: &[f64], epsilon: f64, rng: &mut ChaCha8Rng) -> usize {
    debug_assert!(!q_values.is_empty());
    debug_assert!((0.0..=1.0).contains(&epsilon));
    if epsilon > 0.0 && rng.gen::<f64>() < epsilon {
        return rng.gen_range(0..q_values.len());
    }
    let mut best = 0;
    for (i, &q) in q_values.iter().enumerate().skip(1) {
        if q > q_values[best] {
            best = i;
        }
    }
    best
}

/// One stored interaction. `next_state` is absent exactly at episode end.
#[derive(Debug, Clone)]
pub struct Transition {
    pub state: Arc<MdpState>,
    pub action: usize,
    pub reward: f64,
    pub next_state: Option<Arc<MdpState>>,
    pub done: bool,
}

impl Transition {
    pub fn new(
        state: Arc<MdpState>,
        action: usize,
        reward: f64,
        next_state: Option<Arc<MdpState>>,
    ) -> Self {
        let done = next_state.is_none();
        Transition { state, action, reward, next_state, done }
    }
}
