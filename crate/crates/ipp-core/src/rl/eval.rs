//! Policy evaluation: greedy Q-network rollouts, the context-free
//! empirical-mixture baseline, and per-step action statistics.

use alloc::vec::Vec;

use rand::Rng;
use rand_chacha::ChaCha8Rng;

use crate::field::{Cell, FieldInstance};
use crate::mission::EpisodeTrace;
use crate::nn::{forward_q, QNetworkParams};
use crate::rng::{self, SeedMix};
use crate::stats;

use super::{epsilon_greedy, ActionSet, Env, MdpState, RewardParams, RlError};

/// Context-free stochastic policy drawing actions from fixed
/// probabilities: a per-decision-step table when available, otherwise a
/// single marginal distribution.
#[derive(Debug, Clone, PartialEq)]
pub struct MixturePolicy {
    per_step: Option<Vec<Vec<f64>>>,
    marginal: Vec<f64>,
}

impl MixturePolicy {
    pub fn from_marginal(probs: Vec<f64>) -> Result<Self, RlError> {
        validate_row(&probs)?;
        Ok(MixturePolicy { per_step: None, marginal: probs })
    }

    /// Row `i` holds the action distribution for decision step `4 + i`.
    /// The marginal (mean over rows) covers any step beyond the table.
    pub fn from_table(rows: Vec<Vec<f64>>) -> Result<Self, RlError> {
        if rows.is_empty() {
            return Err(RlError::BadMixture);
        }
        let k = rows[0].len();
        let mut marginal = alloc::vec![0.0f64; k];
        for row in &rows {
            if row.len() != k {
                return Err(RlError::BadMixture);
            }
            validate_row(row)?;
            for (m, p) in marginal.iter_mut().zip(row) {
                *m += p / rows.len() as f64;
            }
        }
        Ok(MixturePolicy { per_step: Some(rows), marginal })
    }

    pub fn num_actions(&self) -> usize {
        self.marginal.len()
    }

    /// Draws an action for decision index `i` (0 = first post-seed step).
    pub fn draw(&self, decision_index: usize, rng: &mut ChaCha8Rng) -> usize {
        let row = match &self.per_step {
            Some(rows) if decision_index < rows.len() => &rows[decision_index],
            _ => &self.marginal,
        };
        let u: f64 = rng.gen();
        let mut acc = 0.0;
        for (i, &p) in row.iter().enumerate() {
            acc += p;
            if u < acc {
                return i;
            }
        }
        row.len() - 1
    }
}

fn validate_row(row: &[f64]) -> Result<(), RlError> {
    if row.is_empty() || row.iter().any(|&p| !(0.0..=1.0).contains(&p) || !p.is_finite()) {
        return Err(RlError::BadMixture);
    }
    if (row.iter().sum::<f64>() - 1.0).abs() > 1e-9 {
        return Err(RlError::BadMixture);
    }
    Ok(())
}

/// Builds the context-free ablation policy from observed action
/// frequencies.
pub fn empirical_mixture_policy(
    marginal: Vec<f64>,
    per_step: Option<Vec<Vec<f64>>>,
) -> Result<MixturePolicy, RlError> {
    match per_step {
        Some(rows) => MixturePolicy::from_table(rows),
        None => MixturePolicy::from_marginal(marginal),
    }
}

/// How actions are chosen during an evaluation rollout.
pub enum ActionChooser<'a> {
    /// Greedy argmax of the Q-network (no exploration).
    Greedy(&'a QNetworkParams),
    /// Context-free draw from fixed probabilities.
    Mixture(&'a MixturePolicy),
}

impl ActionChooser<'_> {
    fn choose(
        &self,
        state: &MdpState,
        decision_index: usize,
        rng: &mut ChaCha8Rng,
    ) -> Result<usize, RlError> {
        match self {
            ActionChooser::Greedy(net) => {
                let q = forward_q(net, &state.as_input())?;
                Ok(epsilon_greedy(&q, 0.0, rng))
            }
            ActionChooser::Mixture(policy) => Ok(policy.draw(decision_index, rng)),
        }
    }
}

/// One evaluation mission. No rewards, no counterfactuals: the chooser
/// sees only the prediction state; ground truth is read exclusively by
/// the metric bookkeeping inside the environment.
pub fn rollout(
    instance: &FieldInstance,
    actions: &ActionSet,
    chooser: &ActionChooser<'_>,
    budget: usize,
    seed_locs: &[Cell],
    seed: u64,
) -> Result<EpisodeTrace, RlError> {
    let mut env = Env::new(
        instance,
        actions.clone(),
        budget,
        seed_locs,
        seed,
        false,
        RewardParams::default(),
    )?;
    let mut policy_rng = rng::rng_from_seed(SeedMix::new(seed).str("policy").build());
    let mut state = env.current_state()?;
    let mut decision_index = 0usize;
    loop {
        let action = chooser.choose(&state, decision_index, &mut policy_rng)?;
        let step = env.step(action)?;
        decision_index += 1;
        match step.next_state {
            Some(next) => state = next,
            None => break,
        }
    }
    Ok(env.into_trace())
}

/// Aggregated evaluation metrics over instances x runs.
#[derive(Debug, Clone)]
pub struct EvalReport {
    pub traces: Vec<EpisodeTrace>,
    /// Mean RMSE after sample t (index 0 = first sample).
    pub per_step_rmse: Vec<f64>,
    /// Mean cumulative distance after sample t.
    pub per_step_distance: Vec<f64>,
    /// Rows = decision steps 4..=budget, columns = actions; rows sum to 1.
    pub action_freq: Vec<Vec<f64>>,
    pub final_rmse_mean: f64,
    pub final_rmse_std: f64,
    pub total_distance_mean: f64,
    pub total_distance_std: f64,
}

/// Greedy evaluation of a trained network over a test set; deterministic
/// in (`params`, instances, `seed`).
pub fn evaluate_policy(
    params: &QNetworkParams,
    actions: &ActionSet,
    instances: &[FieldInstance],
    n_runs: usize,
    budget: usize,
    seed_locs: &[Cell],
    seed: u64,
) -> Result<EvalReport, RlError> {
    if instances.is_empty() {
        return Err(RlError::NoInstances);
    }
    let chooser = ActionChooser::Greedy(params);
    let mut traces = Vec::with_capacity(instances.len() * n_runs);
    for instance in instances {
        for run in 0..n_runs {
            let mission_seed =
                SeedMix::new(seed).str("eval").str(&instance.id).u64(run as u64).build();
            traces.push(rollout(instance, actions, &chooser, budget, seed_locs, mission_seed)?);
        }
    }
    report_from_traces(traces, actions, budget)
}

pub(crate) fn report_from_traces(
    traces: Vec<EpisodeTrace>,
    actions: &ActionSet,
    budget: usize,
) -> Result<EvalReport, RlError> {
    let n = traces.len() as f64;
    let mut per_step_rmse = alloc::vec![0.0f64; budget];
    let mut per_step_distance = alloc::vec![0.0f64; budget];
    for trace in &traces {
        for (i, step) in trace.steps.iter().enumerate() {
            per_step_rmse[i] += step.rmse / n;
            per_step_distance[i] += step.cumulative_distance / n;
        }
    }
    let finals: Vec<f64> = traces.iter().map(|t| t.final_rmse()).collect();
    let dists: Vec<f64> = traces.iter().map(|t| t.total_distance()).collect();
    let action_freq = action_history_matrix(&traces, actions, budget);
    Ok(EvalReport {
        per_step_rmse,
        per_step_distance,
        action_freq,
        final_rmse_mean: stats::mean(&finals),
        final_rmse_std: if finals.len() > 1 { stats::sample_std(&finals) } else { 0.0 },
        total_distance_mean: stats::mean(&dists),
        total_distance_std: if dists.len() > 1 { stats::sample_std(&dists) } else { 0.0 },
        traces,
    })
}

/// Per-decision-step action selection frequencies; every row sums to 1.
/// Row `i` covers sample `4 + i`, columns follow the action-set order.
pub fn action_history_matrix(
    traces: &[EpisodeTrace],
    actions: &ActionSet,
    budget: usize,
) -> Vec<Vec<f64>> {
    let decisions = budget.saturating_sub(3);
    let mut matrix = alloc::vec![alloc::vec![0.0f64; actions.len()]; decisions];
    let mut row_counts = alloc::vec![0usize; decisions];
    for trace in traces {
        for step in trace.decisions() {
            if step.t >= 4 && step.t <= budget {
                if let Some(a) = actions.index_of_label(&step.action_label) {
                    matrix[step.t - 4][a] += 1.0;
                    row_counts[step.t - 4] += 1;
                }
            }
        }
    }
    for (row, &count) in matrix.iter_mut().zip(&row_counts) {
        if count > 0 {
            row.iter_mut().for_each(|v| *v /= count as f64);
        }
    }
    matrix
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::generate_synthetic_field;
    use crate::mission::DEFAULT_SEED_LOCS;
    use crate::nn::NetSpec;

    #[test]
    fn mixture_marginal_frequencies_converge() {
        let policy = MixturePolicy::from_marginal(alloc::vec![0.62, 0.38]).unwrap();
        let mut rng = rng::rng_from_seed(10);
        let n = 10_000;
        let mut count0 = 0usize;
        for i in 0..n {
            if policy.draw(i % 12, &mut rng) == 0 {
                count0 += 1;
            }
        }
        let freq = count0 as f64 / n as f64;
        assert!((freq - 0.62).abs() < 0.02, "freq = {freq}");
    }

    #[test]
    fn degenerate_mixture_always_picks_first() {
        let policy = MixturePolicy::from_marginal(alloc::vec![1.0, 0.0]).unwrap();
        let mut rng = rng::rng_from_seed(3);
        for i in 0..100 {
            assert_eq!(policy.draw(i, &mut rng), 0);
        }
    }

    #[test]
    fn invalid_mixtures_rejected() {
        assert!(MixturePolicy::from_marginal(alloc::vec![0.7, 0.7]).is_err());
        assert!(MixturePolicy::from_marginal(alloc::vec![-0.1, 1.1]).is_err());
        assert!(MixturePolicy::from_table(alloc::vec![]).is_err());
    }

    #[test]
    fn table_rows_used_per_step() {
        let rows = alloc::vec![alloc::vec![1.0, 0.0], alloc::vec![0.0, 1.0]];
        let policy = MixturePolicy::from_table(rows).unwrap();
        let mut rng = rng::rng_from_seed(0);
        assert_eq!(policy.draw(0, &mut rng), 0);
        assert_eq!(policy.draw(1, &mut rng), 1);
        // Beyond the table: the marginal (0.5, 0.5) applies.
        let mut seen = [false, false];
        for _ in 0..50 {
            seen[policy.draw(5, &mut rng)] = true;
        }
        assert!(seen[0] && seen[1]);
    }

    #[test]
    fn greedy_eval_is_deterministic_and_rows_sum_to_one() {
        let instances: Vec<FieldInstance> =
            (0..3).map(|i| generate_synthetic_field(500 + i, 16, 16, 4, 4.0).unwrap()).collect();
        let actions = ActionSet::from_levels(&[2, 1]).unwrap();
        let params = crate::nn::QNetworkParams::init(NetSpec::desk(2), 4).unwrap();
        let a = evaluate_policy(&params, &actions, &instances, 2, 15, &DEFAULT_SEED_LOCS, 9)
            .unwrap();
        let b = evaluate_policy(&params, &actions, &instances, 2, 15, &DEFAULT_SEED_LOCS, 9)
            .unwrap();
        assert_eq!(a.traces, b.traces);
        assert_eq!(a.action_freq, b.action_freq);
        assert_eq!(a.action_freq.len(), 12);
        for row in &a.action_freq {
            let sum: f64 = row.iter().sum();
            assert!((sum - 1.0).abs() < 1e-12, "row sums to {sum}");
        }
        assert_eq!(a.per_step_rmse.len(), 15);
        // Evaluation rollouts carry no rewards.
        for trace in &a.traces {
            assert!(trace.steps.iter().all(|s| s.reward.is_none()));
        }
    }

    #[test]
    fn single_trace_matrix_is_one_hot() {
        let inst = generate_synthetic_field(700, 16, 16, 4, 4.0).unwrap();
        let actions = ActionSet::from_levels(&[2, 1]).unwrap();
        let policy = MixturePolicy::from_marginal(alloc::vec![0.5, 0.5]).unwrap();
        let trace = rollout(
            &inst,
            &actions,
            &ActionChooser::Mixture(&policy),
            15,
            &DEFAULT_SEED_LOCS,
            3,
        )
        .unwrap();
        let matrix = action_history_matrix(&[trace], &actions, 15);
        for row in matrix {
            assert!(row.iter().filter(|&&v| v == 1.0).count() == 1);
            assert!(row.iter().filter(|&&v| v == 0.0).count() == row.len() - 1);
        }
    }
}
