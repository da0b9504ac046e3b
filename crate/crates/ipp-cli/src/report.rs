//! Result summarization: per-method final metrics with pairwise
//! significance tests, per-step action histories, and curve data.

use std::collections::BTreeMap;

use anyhow::{bail, Result};

use ipp_core::stats::{mean, sample_std, two_sample_t_test};

use crate::experiment::{ResultRow, TspStatRow};
use crate::fmt::sig9;

/// Per-method aggregate of final-step metrics.
#[derive(Debug, Clone, PartialEq)]
pub struct SummaryRow {
    pub method: String,
    pub missions: usize,
    pub final_rmse_mean: f64,
    pub final_rmse_std: f64,
    pub total_distance_mean: f64,
    pub total_distance_std: f64,
    /// Methods whose final RMSE is statistically indistinguishable at
    /// the configured alpha.
    pub rmse_insignificant_vs: Vec<String>,
    pub distance_insignificant_vs: Vec<String>,
    /// GS-TSP instrumentation means (absent for other methods).
    pub tsp_random_origin_mean: Option<f64>,
    pub tsp_kv_rank_pct_mean: Option<f64>,
}

/// One pairwise test over final metrics.
#[derive(Debug, Clone, PartialEq)]
pub struct PairwiseTest {
    pub metric: &'static str,
    pub method_a: String,
    pub method_b: String,
    pub t: f64,
    pub df: f64,
    pub p: f64,
    pub significant: bool,
}

/// Final-step (rmse, distance) per (method, instance, run), in first-seen
/// method order.
fn final_metrics(rows: &[ResultRow]) -> Vec<(String, Vec<f64>, Vec<f64>)> {
    let mut method_order: Vec<String> = Vec::new();
    let mut finals: BTreeMap<(String, String, usize), (usize, f64, f64)> = BTreeMap::new();
    for row in rows {
        if !method_order.contains(&row.method) {
            method_order.push(row.method.clone());
        }
        let key = (row.method.clone(), row.instance.clone(), row.run);
        let entry = finals.entry(key).or_insert((0, 0.0, 0.0));
        if row.t >= entry.0 {
            *entry = (row.t, row.rmse, row.distance);
        }
    }
    method_order
        .into_iter()
        .map(|method| {
            let mut rmses = Vec::new();
            let mut dists = Vec::new();
            for ((m, _, _), (_, rmse, dist)) in &finals {
                if *m == method {
                    rmses.push(*rmse);
                    dists.push(*dist);
                }
            }
            (method, rmses, dists)
        })
        .collect()
}

/// Builds per-method summaries plus all pairwise pooled t-tests at
/// significance level `alpha`.
pub fn summarize(
    rows: &[ResultRow],
    tsp_stats: &[TspStatRow],
    alpha: f64,
) -> Result<(Vec<SummaryRow>, Vec<PairwiseTest>)> {
    if rows.is_empty() {
        bail!("no result rows to summarize");
    }
    let metrics = final_metrics(rows);
    let mut tests = Vec::new();
    for i in 0..metrics.len() {
        for j in i + 1..metrics.len() {
            for (metric, xs, ys) in [
                ("final_rmse", &metrics[i].1, &metrics[j].1),
                ("total_distance", &metrics[i].2, &metrics[j].2),
            ] {
                if xs.len() < 2 || ys.len() < 2 {
                    continue;
                }
                let r = two_sample_t_test(xs, ys)
                    .map_err(|e| anyhow::anyhow!("t-test failed: {e}"))?;
                tests.push(PairwiseTest {
                    metric,
                    method_a: metrics[i].0.clone(),
                    method_b: metrics[j].0.clone(),
                    t: r.t,
                    df: r.df,
                    p: r.p,
                    significant: r.p < alpha,
                });
            }
        }
    }
    let mut summaries = Vec::new();
    for (method, rmses, dists) in &metrics {
        let rmse_insig: Vec<String> = tests
            .iter()
            .filter(|t| {
                t.metric == "final_rmse"
                    && !t.significant
                    && (&t.method_a == method || &t.method_b == method)
            })
            .map(|t| if &t.method_a == method { t.method_b.clone() } else { t.method_a.clone() })
            .collect();
        let dist_insig: Vec<String> = tests
            .iter()
            .filter(|t| {
                t.metric == "total_distance"
                    && !t.significant
                    && (&t.method_a == method || &t.method_b == method)
            })
            .map(|t| if &t.method_a == method { t.method_b.clone() } else { t.method_a.clone() })
            .collect();
        let tsp: Vec<&TspStatRow> = tsp_stats.iter().filter(|s| &s.method == method).collect();
        let (tsp_origin, tsp_rank) = if tsp.is_empty() {
            (None, None)
        } else {
            let origins: Vec<f64> = tsp.iter().map(|s| s.random_origin_visits as f64).collect();
            let ranks: Vec<f64> = tsp.iter().map(|s| s.mean_kv_rank_pct).collect();
            (Some(mean(&origins)), Some(mean(&ranks)))
        };
        summaries.push(SummaryRow {
            method: method.clone(),
            missions: rmses.len(),
            final_rmse_mean: mean(rmses),
            final_rmse_std: if rmses.len() > 1 { sample_std(rmses) } else { 0.0 },
            total_distance_mean: mean(dists),
            total_distance_std: if dists.len() > 1 { sample_std(dists) } else { 0.0 },
            rmse_insignificant_vs: rmse_insig,
            distance_insignificant_vs: dist_insig,
            tsp_random_origin_mean: tsp_origin,
            tsp_kv_rank_pct_mean: tsp_rank,
        });
    }
    Ok((summaries, tests))
}

pub fn summary_csv(summaries: &[SummaryRow]) -> String {
    let mut out = String::from(
        "method,missions,final_rmse_mean,final_rmse_std,total_distance_mean,\
         total_distance_std,rmse_insignificant_vs,distance_insignificant_vs,\
         tsp_random_origin_mean,tsp_kv_rank_pct_mean\n",
    );
    for s in summaries {
        out.push_str(&format!(
            "{},{},{},{},{},{},{},{},{},{}\n",
            s.method,
            s.missions,
            sig9(s.final_rmse_mean),
            sig9(s.final_rmse_std),
            sig9(s.total_distance_mean),
            sig9(s.total_distance_std),
            s.rmse_insignificant_vs.join("|"),
            s.distance_insignificant_vs.join("|"),
            s.tsp_random_origin_mean.map(sig9).unwrap_or_default(),
            s.tsp_kv_rank_pct_mean.map(sig9).unwrap_or_default(),
        ));
    }
    out
}

pub fn pairwise_csv(tests: &[PairwiseTest]) -> String {
    let mut out = String::from("metric,method_a,method_b,t,df,p,significant\n");
    for t in tests {
        out.push_str(&format!(
            "{},{},{},{},{},{},{}\n",
            t.metric,
            t.method_a,
            t.method_b,
            sig9(t.t),
            sig9(t.df),
            sig9(t.p),
            t.significant
        ));
    }
    out
}

/// Per-step action frequencies for one method, from the action column of
/// the results table. Rows (t >= 4) sum to 1.
pub fn action_history(rows: &[ResultRow], method: &str) -> Vec<(usize, BTreeMap<String, f64>)> {
    let mut counts: BTreeMap<usize, BTreeMap<String, usize>> = BTreeMap::new();
    for row in rows {
        if row.method == method && row.action != "seed" {
            *counts.entry(row.t).or_default().entry(row.action.clone()).or_insert(0) += 1;
        }
    }
    counts
        .into_iter()
        .map(|(t, by_action)| {
            let total: usize = by_action.values().sum();
            let freqs = by_action
                .into_iter()
                .map(|(a, c)| (a, c as f64 / total as f64))
                .collect();
            (t, freqs)
        })
        .collect()
}

/// Long-form action frequency table over the methods that make choices.
pub fn actions_csv(rows: &[ResultRow]) -> String {
    let mut methods: Vec<String> = Vec::new();
    for row in rows {
        if !methods.contains(&row.method) {
            methods.push(row.method.clone());
        }
    }
    let mut out = String::from("method,t,action,frequency\n");
    for method in methods {
        for (t, freqs) in action_history(rows, &method) {
            for (action, freq) in freqs {
                out.push_str(&format!("{method},{t},{action},{}\n", sig9(freq)));
            }
        }
    }
    out
}

/// Mean metric per step for every method, for curve rendering.
pub fn per_step_means(rows: &[ResultRow]) -> Vec<(String, Vec<(f64, f64)>, Vec<(f64, f64)>)> {
    let mut methods: Vec<String> = Vec::new();
    for row in rows {
        if !methods.contains(&row.method) {
            methods.push(row.method.clone());
        }
    }
    methods
        .into_iter()
        .map(|method| {
            let mut by_t: BTreeMap<usize, (f64, f64, usize)> = BTreeMap::new();
            for row in rows.iter().filter(|r| r.method == method) {
                let e = by_t.entry(row.t).or_insert((0.0, 0.0, 0));
                e.0 += row.rmse;
                e.1 += row.distance;
                e.2 += 1;
            }
            let rmse_curve: Vec<(f64, f64)> =
                by_t.iter().map(|(&t, &(r, _, n))| (t as f64, r / n as f64)).collect();
            let dist_curve: Vec<(f64, f64)> =
                by_t.iter().map(|(&t, &(_, d, n))| (t as f64, d / n as f64)).collect();
            (method, rmse_curve, dist_curve)
        })
        .collect()
}
