//! The mission environment seen by the controller: executes the chosen
//! local planner, observes the field, refits and re-predicts, and (in
//! training mode) scores the choice against counterfactual alternatives.

use alloc::string::String;
use alloc::vec::Vec;

use crate::field::FieldInstance;
use crate::mission::{EpisodeTrace, MissionState, StepRecord};
use crate::rng::{self, SeedMix};

use super::{make_state, reward, ActionSet, MdpState, RewardParams, RlError};

/// Result of one environment step.
#[derive(Debug, Clone, PartialEq)]
pub struct EnvStep {
    /// Controller state for the next decision; `None` at episode end.
    pub next_state: Option<MdpState>,
    /// Shaped reward (unscaled); 0 outside training mode.
    pub reward: f64,
    pub done: bool,
    /// RMSE after the chosen observation was assimilated.
    pub rmse: f64,
}

/// Counterfactual advantage of the chosen action: the minimum RMSE any
/// alternative action would have produced from the same pre-step state,
/// minus the chosen action's RMSE. Positive (or zero) means no
/// alternative would have done better.
///
/// Each alternative runs on its own derived random substream, so the
/// simulation never advances the live mission's randomness, and the
/// pre-step state is cloned, never mutated.
pub fn hallucinated_delta(
    pre_step: &MissionState,
    actions: &ActionSet,
    chosen: usize,
    chosen_rmse: f64,
    step_t: usize,
    mission_seed: u64,
) -> Result<f64, RlError> {
    let mut best_alternative = f64::INFINITY;
    for alt in 0..actions.len() {
        if alt == chosen {
            continue;
        }
        let mut sim = pre_step.clone();
        sim.replace_rng(rng::rng_from_seed(
            SeedMix::new(mission_seed).str("alternative").u64(step_t as u64).u64(alt as u64).build(),
        ));
        let waypoint = sim.plan_ls(actions.radius(alt)).map_err(crate::mission::MissionError::from)?;
        let outcome = sim.observe(waypoint)?;
        best_alternative = best_alternative.min(outcome.rmse);
    }
    Ok(best_alternative - chosen_rmse)
}

/// One mission wrapped as an MDP episode over an action set of local
/// planners. Decisions run from sample 4 (after the three seeds) to the
/// budget.
#[derive(Debug, Clone)]
pub struct Env {
    state: MissionState,
    actions: ActionSet,
    budget: usize,
    reward_params: RewardParams,
    training: bool,
    mission_seed: u64,
    records: Vec<StepRecord>,
    done: bool,
}

impl Env {
    pub fn new(
        instance: &FieldInstance,
        actions: ActionSet,
        budget: usize,
        seed_locs: &[crate::field::Cell],
        seed: u64,
        training: bool,
        reward_params: RewardParams,
    ) -> Result<Self, RlError> {
        if budget <= seed_locs.len() {
            return Err(RlError::BadConfig("budget must exceed the seed count"));
        }
        let (state, records) = MissionState::bootstrap(instance, seed_locs, seed)?;
        Ok(Env {
            state,
            actions,
            budget,
            reward_params,
            training,
            mission_seed: seed,
            records,
            done: false,
        })
    }

    pub fn actions(&self) -> &ActionSet {
        &self.actions
    }

    pub fn budget(&self) -> usize {
        self.budget
    }

    pub fn done(&self) -> bool {
        self.done
    }

    /// Samples taken so far.
    pub fn t(&self) -> usize {
        self.state.t()
    }

    pub fn mission(&self) -> &MissionState {
        &self.state
    }

    /// Controller state for the upcoming decision.
    pub fn current_state(&self) -> Result<MdpState, RlError> {
        if self.done {
            return Err(RlError::EpisodeFinished);
        }
        make_state(self.state.pmap(), self.state.position(), self.state.t() + 1, self.budget)
    }

    /// Executes one action: plan within the action's radius, observe,
    /// refit, and in training mode score the decision by counterfactual
    /// comparison. Episodes end when the budget is exhausted.
    pub fn step(&mut self, action: usize) -> Result<EnvStep, RlError> {
        if self.done {
            return Err(RlError::EpisodeFinished);
        }
        if action >= self.actions.len() {
            return Err(RlError::InvalidAction(action, self.actions.len()));
        }
        let t_next = self.state.t() + 1;
        let pre_step = if self.training { Some(self.state.clone()) } else { None };
        let waypoint = self
            .state
            .plan_ls(self.actions.radius(action))
            .map_err(crate::mission::MissionError::from)?;
        let outcome = self.state.observe(waypoint)?;
        let reward_value = match pre_step {
            Some(pre) => {
                let delta = hallucinated_delta(
                    &pre,
                    &self.actions,
                    action,
                    outcome.rmse,
                    t_next,
                    self.mission_seed,
                )?;
                reward(delta, outcome.rmse, t_next as f64 / self.budget as f64, &self.reward_params)
            }
            None => 0.0,
        };
        self.done = t_next == self.budget;
        self.records.push(StepRecord {
            t: t_next,
            action_label: String::from(self.actions.label(action)),
            waypoint,
            observation: outcome.observation,
            rmse: outcome.rmse,
            cumulative_distance: self.state.cumulative_distance(),
            reward: self.training.then_some(reward_value),
            queue_origin: None,
            kv_rank_pct: None,
        });
        let next_state = if self.done { None } else { Some(self.current_state()?) };
        Ok(EnvStep { next_state, reward: reward_value, done: self.done, rmse: outcome.rmse })
    }

    pub fn into_trace(self) -> EpisodeTrace {
        EpisodeTrace {
            instance_id: String::from(self.state.instance_id()),
            steps: self.records,
            final_map: self.state.pmap().clone(),
        }
    }
}
