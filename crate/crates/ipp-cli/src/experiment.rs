//! The experiment harness: runs (method x instance x run) missions on a
//! worker pool with independently derived seeds, gathers rows in a fixed
//! order, and writes byte-reproducible CSV tables.

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use anyhow::{bail, Context, Result};
use rayon::prelude::*;

use ipp_core::field::FieldInstance;
use ipp_core::mission::{run_mission, EpisodeTrace, DEFAULT_SEED_LOCS};
use ipp_core::nn::QNetworkParams;
use ipp_core::planner::QueueOrigin;
use ipp_core::rl::{empirical_mixture_policy, rollout, ActionChooser, ActionSet, MixturePolicy};
use ipp_core::rng::SeedMix;

use crate::checkpoint;
use crate::config::{parse_method, ExperimentConfig, MethodSpec};
use crate::fmt::sig9;

/// One row of the results table.
#[derive(Debug, Clone, PartialEq)]
pub struct ResultRow {
    pub method: String,
    pub run: usize,
    pub instance: String,
    pub t: usize,
    pub rmse: f64,
    pub distance: f64,
    pub action: String,
}

/// Per-mission GS-TSP instrumentation.
#[derive(Debug, Clone, PartialEq)]
pub struct TspStatRow {
    pub method: String,
    pub run: usize,
    pub instance: String,
    pub random_origin_visits: usize,
    pub mean_kv_rank_pct: f64,
}

#[derive(Debug)]
pub struct ExperimentOutput {
    pub rows: Vec<ResultRow>,
    pub tsp_stats: Vec<TspStatRow>,
    /// One representative trace per method (first instance, first run)
    /// for heatmap rendering.
    pub showcase: Vec<(String, EpisodeTrace)>,
    /// Every trace, keyed (method, instance, run), populated on request.
    pub traces: Vec<(String, String, usize, EpisodeTrace)>,
}

enum RunnableMethod {
    Fixed(ipp_core::mission::MissionPolicy),
    Rl { params: Box<QNetworkParams>, actions: ActionSet },
    Mixture { policy: MixturePolicy, actions: ActionSet },
}

/// Derives the per-mission seed from the experiment seed and the mission
/// coordinates; adding methods or instances never disturbs other
/// missions' seeds.
pub fn mission_seed(config_seed: u64, method: &str, instance: &str, run: usize) -> u64 {
    SeedMix::new(config_seed).str(method).str(instance).u64(run as u64).build()
}

pub fn run_experiment(
    cfg: &ExperimentConfig,
    instances: &[FieldInstance],
    keep_all_traces: bool,
) -> Result<ExperimentOutput> {
    if instances.is_empty() {
        bail!("no instances to run on");
    }
    let mut methods: Vec<(String, RunnableMethod)> = Vec::new();
    for label in &cfg.methods {
        let spec = parse_method(label, cfg.q_init)?;
        let runnable = match spec {
            MethodSpec::Fixed(policy) => RunnableMethod::Fixed(policy),
            MethodSpec::Rl { label, levels } => {
                let Some(path) = cfg.checkpoints.get(&label) else {
                    bail!(
                        "method {label} needs a trained checkpoint; add it under [checkpoints] \
                         or run `ipp train` first"
                    );
                };
                let loaded = checkpoint::load_checkpoint(path)?;
                if loaded.action_levels != levels {
                    bail!(
                        "checkpoint {} was trained for action levels {:?}, not {:?}",
                        path.display(),
                        loaded.action_levels,
                        levels
                    );
                }
                RunnableMethod::Rl { params: Box::new(loaded.params), actions: loaded.actions }
            }
            MethodSpec::Mixture => {
                let actions = ActionSet::from_levels(&cfg.mixture.levels)
                    .map_err(|e| anyhow::anyhow!("mixture levels invalid: {e}"))?;
                let policy = empirical_mixture_policy(cfg.mixture.probs.clone(), None)
                    .map_err(|e| anyhow::anyhow!("mixture probabilities invalid: {e}"))?;
                RunnableMethod::Mixture { policy, actions }
            }
        };
        methods.push((label.clone(), runnable));
    }

    struct Job<'a> {
        method_idx: usize,
        inst_idx: usize,
        run: usize,
        label: &'a str,
        runnable: &'a RunnableMethod,
        instance: &'a FieldInstance,
    }
    let mut jobs = Vec::new();
    for (method_idx, (label, runnable)) in methods.iter().enumerate() {
        for (inst_idx, instance) in instances.iter().enumerate() {
            for run in 0..cfg.runs {
                jobs.push(Job { method_idx, inst_idx, run, label, runnable, instance });
            }
        }
    }

    let run_one = |job: &Job| -> Result<EpisodeTrace> {
        let seed = mission_seed(cfg.seed, job.label, &job.instance.id, job.run);
        let trace = match job.runnable {
            RunnableMethod::Fixed(policy) => {
                run_mission(job.instance, policy, cfg.budget, &DEFAULT_SEED_LOCS, seed)?
            }
            RunnableMethod::Rl { params, actions } => rollout(
                job.instance,
                actions,
                &ActionChooser::Greedy(params),
                cfg.budget,
                &DEFAULT_SEED_LOCS,
                seed,
            )?,
            RunnableMethod::Mixture { policy, actions } => rollout(
                job.instance,
                actions,
                &ActionChooser::Mixture(policy),
                cfg.budget,
                &DEFAULT_SEED_LOCS,
                seed,
            )?,
        };
        Ok(trace)
    };

    let execute = || -> Result<Vec<((usize, usize, usize), EpisodeTrace)>> {
        jobs.par_iter()
            .map(|job| {
                run_one(job).map(|t| ((job.method_idx, job.inst_idx, job.run), t))
            })
            .collect()
    };
    let mut keyed: Vec<((usize, usize, usize), EpisodeTrace)> = if cfg.workers > 0 {
        rayon::ThreadPoolBuilder::new()
            .num_threads(cfg.workers)
            .build()
            .context("building worker pool")?
            .install(execute)?
    } else {
        execute()?
    };
    keyed.sort_by_key(|(key, _)| *key);

    let mut rows = Vec::with_capacity(keyed.len() * cfg.budget);
    let mut tsp_stats = Vec::new();
    let mut showcase: Vec<(String, EpisodeTrace)> = Vec::new();
    let mut traces = Vec::new();
    for ((method_idx, inst_idx, run), trace) in keyed {
        let label = &methods[method_idx].0;
        let instance_id = &instances[inst_idx].id;
        for step in &trace.steps {
            rows.push(ResultRow {
                method: label.clone(),
                run,
                instance: instance_id.clone(),
                t: step.t,
                rmse: step.rmse,
                distance: step.cumulative_distance,
                action: step.action_label.clone(),
            });
        }
        if matches!(methods[method_idx].1, RunnableMethod::Fixed(ipp_core::mission::MissionPolicy::GsTsp { .. })) {
            let visits = trace
                .decisions()
                .filter(|s| s.queue_origin == Some(QueueOrigin::RandomInit))
                .count();
            let ranks: Vec<f64> = trace.decisions().filter_map(|s| s.kv_rank_pct).collect();
            let mean_rank =
                if ranks.is_empty() { 0.0 } else { ranks.iter().sum::<f64>() / ranks.len() as f64 };
            tsp_stats.push(TspStatRow {
                method: label.clone(),
                run,
                instance: instance_id.clone(),
                random_origin_visits: visits,
                mean_kv_rank_pct: mean_rank,
            });
        }
        if inst_idx == 0 && run == 0 {
            showcase.push((label.clone(), trace.clone()));
        }
        if keep_all_traces {
            traces.push((label.clone(), instance_id.clone(), run, trace));
        }
    }
    Ok(ExperimentOutput { rows, tsp_stats, showcase, traces })
}

pub fn results_csv(rows: &[ResultRow]) -> String {
    let mut out = String::from("method,run,instance,t,rmse,distance,action\n");
    for r in rows {
        out.push_str(&format!(
            "{},{},{},{},{},{},{}\n",
            r.method,
            r.run,
            r.instance,
            r.t,
            sig9(r.rmse),
            sig9(r.distance),
            r.action
        ));
    }
    out
}

pub fn tsp_stats_csv(rows: &[TspStatRow]) -> String {
    let mut out = String::from("method,run,instance,random_origin_visits,mean_kv_rank_pct\n");
    for r in rows {
        out.push_str(&format!(
            "{},{},{},{},{}\n",
            r.method,
            r.run,
            r.instance,
            r.random_origin_visits,
            sig9(r.mean_kv_rank_pct)
        ));
    }
    out
}

pub fn write_results(dir: &Path, output: &ExperimentOutput) -> Result<()> {
    fs::create_dir_all(dir)?;
    fs::write(dir.join("results.csv"), results_csv(&output.rows))
        .context("writing results.csv")?;
    if !output.tsp_stats.is_empty() {
        fs::write(dir.join("tsp_stats.csv"), tsp_stats_csv(&output.tsp_stats))
            .context("writing tsp_stats.csv")?;
    }
    Ok(())
}

/// Parses a results.csv produced by [`results_csv`].
pub fn parse_results_csv(text: &str) -> Result<Vec<ResultRow>> {
    let mut rows = Vec::new();
    let mut lines = text.lines();
    let Some(header) = lines.next() else {
        bail!("results csv is empty");
    };
    if header != "method,run,instance,t,rmse,distance,action" {
        bail!("unexpected results csv header: {header}");
    }
    for (i, line) in lines.enumerate() {
        if line.is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != 7 {
            bail!("results csv line {} has {} fields", i + 2, fields.len());
        }
        rows.push(ResultRow {
            method: fields[0].to_string(),
            run: fields[1].parse().with_context(|| format!("line {}", i + 2))?,
            instance: fields[2].to_string(),
            t: fields[3].parse().with_context(|| format!("line {}", i + 2))?,
            rmse: fields[4].parse().with_context(|| format!("line {}", i + 2))?,
            distance: fields[5].parse().with_context(|| format!("line {}", i + 2))?,
            action: fields[6].to_string(),
        });
    }
    Ok(rows)
}

/// Parses a tsp_stats.csv produced by [`tsp_stats_csv`].
pub fn parse_tsp_stats_csv(text: &str) -> Result<Vec<TspStatRow>> {
    let mut rows = Vec::new();
    let mut lines = text.lines();
    let Some(header) = lines.next() else {
        bail!("tsp stats csv is empty");
    };
    if header != "method,run,instance,random_origin_visits,mean_kv_rank_pct" {
        bail!("unexpected tsp stats header: {header}");
    }
    for (i, line) in lines.enumerate() {
        if line.is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != 5 {
            bail!("tsp stats line {} has {} fields", i + 2, fields.len());
        }
        rows.push(TspStatRow {
            method: fields[0].to_string(),
            run: fields[1].parse().with_context(|| format!("line {}", i + 2))?,
            instance: fields[2].to_string(),
            random_origin_visits: fields[3].parse().with_context(|| format!("line {}", i + 2))?,
            mean_kv_rank_pct: fields[4].parse().with_context(|| format!("line {}", i + 2))?,
        });
    }
    Ok(rows)
}

/// Cumulative distance must never decrease within a mission.
pub fn check_distance_monotone(rows: &[ResultRow]) -> Result<()> {
    let mut last: BTreeMap<(String, String, usize), (usize, f64)> = BTreeMap::new();
    for row in rows {
        let key = (row.method.clone(), row.instance.clone(), row.run);
        if let Some((prev_t, prev_d)) = last.get(&key) {
            if row.t > *prev_t && row.distance < *prev_d - 1e-12 {
                bail!(
                    "distance decreased for {}/{} run {} at t={}",
                    row.method,
                    row.instance,
                    row.run,
                    row.t
                );
            }
        }
        last.insert(key, (row.t, row.distance));
    }
    Ok(())
}
