//! `ipp` — mission lab for uncertainty-driven spatial sampling.

use std::fs;
use std::path::PathBuf;

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand};

use ipp_cli::config::{ExperimentConfig, SplitFile};
use ipp_cli::ingest::Attribute;
use ipp_cli::train::Profile;
use ipp_cli::{acceptance, experiment, ingest, instance_io, report, svg, trace_io, train};
use ipp_core::field::{generate_synthetic_field, split_instances};
use ipp_core::rng::SeedMix;

#[derive(Parser)]
#[command(
    name = "ipp",
    about = "Kriging-based informative path planning: baselines, DQN controllers, benchmarks",
    version
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Parse a sensor log and build dense surrogate instances.
    Ingest {
        /// Whitespace-separated log: date time epoch mote_id temperature
        /// humidity light voltage.
        #[arg(long)]
        log: PathBuf,
        /// Mote locations file: `mote_id x y` per line.
        #[arg(long)]
        locations: PathBuf,
        #[arg(long, value_enum, default_value = "temperature")]
        attribute: Attribute,
        /// Number of snapshot instances to build.
        #[arg(long, default_value_t = 240)]
        count: usize,
        /// Minimum reporting motes for a snapshot to qualify.
        #[arg(long, default_value_t = 45)]
        min_motes: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value = "instances")]
        out_dir: PathBuf,
        #[arg(long, default_value_t = 32)]
        out_h: usize,
        #[arg(long, default_value_t = 32)]
        out_w: usize,
        /// Open validity interval for readings, e.g. 0..50 Celsius.
        #[arg(long, default_value_t = 0.0)]
        validity_lo: f64,
        #[arg(long, default_value_t = 50.0)]
        validity_hi: f64,
        /// Drop motes missing more than this fraction of their rows.
        #[arg(long, default_value_t = 0.5)]
        max_missing_frac: f64,
    },
    /// Generate seeded synthetic ground-truth instances.
    MakeSynthetic {
        #[arg(long)]
        count: usize,
        #[arg(long, default_value_t = 32)]
        h: usize,
        #[arg(long, default_value_t = 32)]
        w: usize,
        #[arg(long, default_value_t = 5)]
        bumps: usize,
        #[arg(long, default_value_t = 6.0)]
        length_scale: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value = "instances")]
        out_dir: PathBuf,
    },
    /// Split an instance directory into disjoint train/test id lists.
    Split {
        #[arg(long)]
        dir: PathBuf,
        #[arg(long, default_value_t = 120)]
        n_train: usize,
        #[arg(long, default_value_t = 120)]
        n_test: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value = "split.json")]
        out: PathBuf,
    },
    /// Run baselines and trained controllers over an instance set.
    Run {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        out_dir: Option<PathBuf>,
        #[arg(long)]
        workers: Option<usize>,
        /// Also write one trace JSON per mission.
        #[arg(long)]
        emit_traces: bool,
        /// Also dump final prediction mean/variance grids.
        #[arg(long)]
        dump_pmaps: bool,
    },
    /// Train a DQN controller named in the config's [train] section.
    Train {
        #[arg(long)]
        config: PathBuf,
        #[arg(long, value_enum, default_value = "desk")]
        profile: Profile,
        #[arg(long)]
        seed: Option<u64>,
        /// Checkpoint output path.
        #[arg(long, default_value = "checkpoint.json")]
        out: PathBuf,
        /// Learning-curve CSV output path.
        #[arg(long)]
        curve: Option<PathBuf>,
    },
    /// Summarize a results table: summary.csv, actions.csv, curve SVGs.
    Report {
        #[arg(long)]
        results: PathBuf,
        #[arg(long)]
        tsp_stats: Option<PathBuf>,
        #[arg(long, default_value = "out")]
        out_dir: PathBuf,
        /// Significance level for pairwise tests.
        #[arg(long, default_value_t = 0.05)]
        alpha: f64,
    },
    /// Run the acceptance suite (all criteria, or a name filter).
    Selftest {
        #[arg(long, default_value = "")]
        filter: String,
    },
}

fn main() -> Result<()> {
    match Cli::parse().command {
        Command::Ingest {
            log,
            locations,
            attribute,
            count,
            min_motes,
            seed,
            out_dir,
            out_h,
            out_w,
            validity_lo,
            validity_hi,
            max_missing_frac,
        } => {
            let (readings, stats) = ingest::ingest_sensor_log(&log, &locations, attribute)?;
            eprintln!(
                "parsed {} readings from {} rows ({} dropped, {} unknown-mote)",
                stats.parsed, stats.total_rows, stats.dropped_rows, stats.unknown_mote_rows
            );
            let (kept, dropped) = ingest::filter_faulty_sensors(
                &readings,
                &stats,
                (validity_lo, validity_hi),
                max_missing_frac,
            )?;
            eprintln!("kept {} motes, dropped {:?}", kept.len(), dropped);
            let epochs = ingest::snapshot_epochs(&readings, &kept, min_motes);
            if epochs.len() < count {
                bail!(
                    "only {} snapshot epochs have >= {min_motes} reporting motes; asked for {count}",
                    epochs.len()
                );
            }
            let picked = ingest::select_snapshots(&epochs, count, seed);
            fs::create_dir_all(&out_dir)?;
            for epoch in &picked {
                let inst =
                    ingest::build_instance_at_epoch(&readings, &kept, *epoch, out_h, out_w)?;
                instance_io::write_instance(&out_dir.join(format!("{}.json", inst.id)), &inst)?;
            }
            eprintln!("wrote {} instances to {}", picked.len(), out_dir.display());
        }
        Command::MakeSynthetic { count, h, w, bumps, length_scale, seed, out_dir } => {
            fs::create_dir_all(&out_dir)?;
            for i in 0..count {
                let inst_seed = SeedMix::new(seed).str("instance").u64(i as u64).build();
                let mut inst = generate_synthetic_field(inst_seed, h, w, bumps, length_scale)?;
                inst.id = format!("synth-{i:03}");
                instance_io::write_instance(&out_dir.join(format!("{}.json", inst.id)), &inst)?;
            }
            eprintln!("wrote {count} synthetic instances to {}", out_dir.display());
        }
        Command::Split { dir, n_train, n_test, seed, out } => {
            let instances = instance_io::read_instance_dir(&dir)?;
            let split = split_instances(&instances, n_train, n_test, seed)?;
            let file = SplitFile { train: split.train, test: split.test };
            let mut body = serde_json::to_string_pretty(&file)?;
            body.push('\n');
            fs::write(&out, body).with_context(|| format!("writing {}", out.display()))?;
            eprintln!(
                "split {} instances into {}/{} -> {}",
                instances.len(),
                file.train.len(),
                file.test.len(),
                out.display()
            );
        }
        Command::Run { config, seed, out_dir, workers, emit_traces, dump_pmaps } => {
            let mut cfg = ExperimentConfig::load(&config)?;
            if let Some(seed) = seed {
                cfg.seed = seed;
            }
            if let Some(workers) = workers {
                cfg.workers = workers;
            }
            let out_dir = out_dir
                .or(cfg.out_dir.clone())
                .unwrap_or_else(|| PathBuf::from("out"));
            let instances = cfg.load_instances()?;
            eprintln!(
                "running {} methods x {} instances x {} runs (budget {})",
                cfg.methods.len(),
                instances.len(),
                cfg.runs,
                cfg.budget
            );
            let output = experiment::run_experiment(&cfg, &instances, emit_traces || dump_pmaps)?;
            experiment::write_results(&out_dir, &output)?;
            let heatmap_dir = out_dir.join("heatmaps");
            fs::create_dir_all(&heatmap_dir)?;
            for (label, trace) in &output.showcase {
                if let Some(inst) = instances.iter().find(|i| i.id == trace.instance_id) {
                    svg::write_heatmap(
                        &heatmap_dir.join(format!("truth_{}.svg", inst.id)),
                        &inst.truth,
                        None,
                    )?;
                }
                svg::write_heatmap(
                    &heatmap_dir.join(format!("{}_{}.svg", sanitize(label), trace.instance_id)),
                    &trace.final_map.mean,
                    Some(&trace.path()),
                )?;
            }
            if emit_traces {
                let trace_dir = out_dir.join("traces");
                fs::create_dir_all(&trace_dir)?;
                for (label, instance, run, trace) in &output.traces {
                    trace_io::write_trace(
                        &trace_dir.join(format!("{}_{}_{run}.json", sanitize(label), instance)),
                        trace,
                    )?;
                }
            }
            if dump_pmaps {
                let pmap_dir = out_dir.join("pmaps");
                fs::create_dir_all(&pmap_dir)?;
                for (label, instance, run, trace) in &output.traces {
                    let stem = format!("{}_{}_{run}", sanitize(label), instance);
                    instance_io::write_grid(
                        &pmap_dir.join(format!("{stem}_mean.json")),
                        &format!("{stem}-mean"),
                        &trace.final_map.mean,
                    )?;
                    instance_io::write_grid(
                        &pmap_dir.join(format!("{stem}_variance.json")),
                        &format!("{stem}-variance"),
                        &trace.final_map.variance,
                    )?;
                }
            }
            eprintln!("wrote results to {}", out_dir.display());
        }
        Command::Train { config, profile, seed, out, curve } => {
            let cfg = ExperimentConfig::load(&config)?;
            let instances = cfg.load_instances()?;
            let seed = seed.unwrap_or(cfg.seed);
            eprintln!("training on {} instances (profile {profile:?})", instances.len());
            let mut last_pct = 0usize;
            let mut progress = |done: usize, total: usize| {
                let pct = done * 100 / total.max(1);
                if pct >= last_pct + 10 {
                    last_pct = pct - pct % 10;
                    eprintln!("  {done}/{total} interactions ({last_pct}%)");
                }
            };
            let artifacts =
                train::train_from_config(&cfg, &instances, profile, seed, Some(&mut progress))?;
            train::write_artifacts(&artifacts, &out, curve.as_deref())?;
            eprintln!(
                "trained {} episodes / {} interactions -> {}",
                artifacts.result.episodes,
                artifacts.result.interactions,
                out.display()
            );
        }
        Command::Report { results, tsp_stats, out_dir, alpha } => {
            let rows = experiment::parse_results_csv(
                &fs::read_to_string(&results)
                    .with_context(|| format!("reading {}", results.display()))?,
            )?;
            experiment::check_distance_monotone(&rows)?;
            let tsp_rows = match &tsp_stats {
                Some(path) => experiment::parse_tsp_stats_csv(
                    &fs::read_to_string(path)
                        .with_context(|| format!("reading {}", path.display()))?,
                )?,
                None => Vec::new(),
            };
            let (summaries, tests) = report::summarize(&rows, &tsp_rows, alpha)?;
            fs::create_dir_all(&out_dir)?;
            fs::write(out_dir.join("summary.csv"), report::summary_csv(&summaries))?;
            fs::write(out_dir.join("pairwise.csv"), report::pairwise_csv(&tests))?;
            fs::write(out_dir.join("actions.csv"), report::actions_csv(&rows))?;
            let curves_dir = out_dir.join("curves");
            fs::create_dir_all(&curves_dir)?;
            let per_step = report::per_step_means(&rows);
            let rmse_series: Vec<svg::Series> = per_step
                .iter()
                .map(|(m, r, _)| svg::Series { label: m.clone(), points: r.clone() })
                .collect();
            let dist_series: Vec<svg::Series> = per_step
                .iter()
                .map(|(m, _, d)| svg::Series { label: m.clone(), points: d.clone() })
                .collect();
            svg::write_curves(&curves_dir.join("rmse.svg"), &rmse_series, "sample t", "mean RMSE")?;
            svg::write_curves(
                &curves_dir.join("distance.svg"),
                &dist_series,
                "sample t",
                "mean cumulative distance",
            )?;
            eprintln!("wrote summary, actions, and curves to {}", out_dir.display());
        }
        Command::Selftest { filter } => {
            let reports = acceptance::run_all(&filter);
            let failed = reports.iter().filter(|r| !r.passed).count();
            if reports.is_empty() {
                bail!("no acceptance criteria match filter {filter:?}");
            }
            if failed > 0 {
                bail!("{failed} of {} acceptance criteria failed", reports.len());
            }
            eprintln!("all {} criteria passed", reports.len());
        }
    }
    Ok(())
}

fn sanitize(label: &str) -> String {
    label
        .chars()
        .map(|c| if c.is_ascii_alphanumeric() || c == '-' || c == '_' { c } else { '_' })
        .collect()
}
