//! End-to-end pipeline over the filesystem: synthesize instances, split,
//! run an experiment, write artifacts, summarize, and verify the outputs
//! are reproducible byte for byte.

use std::fs;

use ipp_cli::config::ExperimentConfig;
use ipp_cli::{experiment, instance_io, report, svg};
use ipp_core::field::{generate_synthetic_field, split_instances};

#[test]
fn synthetic_to_summary_pipeline() {
    let dir = tempfile::tempdir().unwrap();
    let inst_dir = dir.path().join("instances");
    fs::create_dir_all(&inst_dir).unwrap();
    for i in 0..6u64 {
        let mut inst = generate_synthetic_field(40 + i, 16, 16, 3, 4.0).unwrap();
        inst.id = format!("synth-{i:03}");
        instance_io::write_instance(&inst_dir.join(format!("{}.json", inst.id)), &inst).unwrap();
    }
    let loaded = instance_io::read_instance_dir(&inst_dir).unwrap();
    assert_eq!(loaded.len(), 6);
    let split = split_instances(&loaded, 3, 3, 9).unwrap();
    assert_eq!(split.train.len(), 3);

    let cfg_text = format!(
        r#"
        seed = 3
        budget = 9
        runs = 2
        methods = ["Rand", "GS", "GS-TSP", "LS-1", "empirical-mixture"]
        [instances]
        kind = "dir"
        path = "{}"
        "#,
        inst_dir.display()
    );
    let cfg: ExperimentConfig = toml::from_str(&cfg_text).unwrap();
    cfg.validate().unwrap();
    let instances = cfg.load_instances().unwrap();
    assert_eq!(instances.len(), 6);

    let out = experiment::run_experiment(&cfg, &instances, false).unwrap();
    // 5 methods x 6 instances x 2 runs x 9 samples.
    assert_eq!(out.rows.len(), 5 * 6 * 2 * 9);
    experiment::check_distance_monotone(&out.rows).unwrap();

    let out_dir = dir.path().join("out");
    experiment::write_results(&out_dir, &out).unwrap();
    let written = fs::read_to_string(out_dir.join("results.csv")).unwrap();
    let reparsed = experiment::parse_results_csv(&written).unwrap();
    assert_eq!(reparsed.len(), out.rows.len());
    assert!(out_dir.join("tsp_stats.csv").exists());

    // Re-running the experiment reproduces the results file exactly.
    let again = experiment::run_experiment(&cfg, &instances, false).unwrap();
    assert_eq!(experiment::results_csv(&again.rows), written);

    // Summary, significance annotations, actions, curves.
    let (summaries, tests) = report::summarize(&out.rows, &out.tsp_stats, 0.05).unwrap();
    assert_eq!(summaries.len(), 5);
    assert!(!tests.is_empty());
    let gs_tsp = summaries.iter().find(|s| s.method == "GS-TSP").unwrap();
    assert!(gs_tsp.tsp_random_origin_mean.is_some());
    let summary_text = report::summary_csv(&summaries);
    assert!(summary_text.lines().count() == 6);
    let actions_text = report::actions_csv(&out.rows);
    assert!(actions_text.contains("empirical-mixture"));

    // Heatmaps for the showcase traces.
    assert_eq!(out.showcase.len(), 5);
    for (label, trace) in &out.showcase {
        let svg_text = svg::heatmap_svg(&trace.final_map.mean, Some(&trace.path()));
        assert!(svg_text.contains("<svg"), "{label}");
        assert_eq!(svg_text.matches("<rect").count(), 16 * 16);
    }
}

#[test]
fn mixture_respects_probabilities_in_aggregate() {
    let cfg_text = r#"
        seed = 13
        budget = 15
        runs = 6
        methods = ["empirical-mixture"]
        [instances]
        kind = "synthetic"
        count = 6
        h = 16
        w = 16
        bumps = 3
        length_scale = 4.0
        [mixture]
        probs = [0.62, 0.38]
        levels = [2, 1]
    "#;
    let cfg: ExperimentConfig = toml::from_str(cfg_text).unwrap();
    let instances = cfg.load_instances().unwrap();
    let out = experiment::run_experiment(&cfg, &instances, false).unwrap();
    let decisions: Vec<&experiment::ResultRow> =
        out.rows.iter().filter(|r| r.action != "seed").collect();
    let ls2 = decisions.iter().filter(|r| r.action == "LS-2").count();
    let freq = ls2 as f64 / decisions.len() as f64;
    // 6 instances x 6 runs x 12 decisions = 432 draws; 4 sigma ~ 0.093.
    assert!((freq - 0.62).abs() < 0.1, "LS-2 frequency {freq}");
}
