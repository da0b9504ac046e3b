//! Sensor-log ingestion: parses whitespace-separated mote logs
//! (`date time epoch mote_id temperature humidity light voltage`),
//! screens out faulty motes, picks snapshot epochs, and builds dense
//! surrogate instances via kriging + rescaling.

use std::collections::{BTreeMap, BTreeSet};
use std::fs;
use std::path::Path;

use anyhow::{bail, Context, Result};
use chrono::NaiveDateTime;
use clap::ValueEnum;

use ipp_core::field::FieldInstance;
use ipp_core::rng::{self, SeedMix};
use ipp_core::surrogate::{build_surrogate_with, SurrogateConfig};

/// Which log column becomes the field attribute.
#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Attribute {
    Temperature,
    Humidity,
}

impl Attribute {
    fn column(self) -> usize {
        match self {
            Attribute::Temperature => 4,
            Attribute::Humidity => 5,
        }
    }
}

/// One parsed log row, joined with the mote's position.
#[derive(Debug, Clone, PartialEq)]
pub struct SensorReading {
    pub timestamp: NaiveDateTime,
    /// Log epoch counter; readings across motes share it, so it doubles
    /// as the snapshot key.
    pub epoch: u64,
    pub mote_id: u32,
    /// Position in meters.
    pub x: f64,
    pub y: f64,
    pub value: f64,
}

/// Bookkeeping from one ingestion pass.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct IngestStats {
    pub total_rows: usize,
    pub parsed: usize,
    /// Rows dropped for a missing or unparseable attribute (or an
    /// entirely malformed prefix).
    pub dropped_rows: usize,
    /// Rows skipped because the mote has no known position.
    pub unknown_mote_rows: usize,
    /// Per-mote count of rows whose attribute was missing/unparseable.
    pub missing_by_mote: BTreeMap<u32, usize>,
    /// Per-mote count of rows with a parseable mote id.
    pub total_by_mote: BTreeMap<u32, usize>,
}

/// Parses a locations file of `mote_id x y` lines (blank lines and `#`
/// comments allowed).
pub fn parse_locations(text: &str) -> Result<BTreeMap<u32, (f64, f64)>> {
    let mut out = BTreeMap::new();
    for (lineno, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let fields: Vec<&str> = line.split_whitespace().collect();
        if fields.len() < 3 {
            bail!("locations line {} has {} fields, need 3", lineno + 1, fields.len());
        }
        let mote: u32 = fields[0].parse().with_context(|| format!("locations line {}", lineno + 1))?;
        let x: f64 = fields[1].parse().with_context(|| format!("locations line {}", lineno + 1))?;
        let y: f64 = fields[2].parse().with_context(|| format!("locations line {}", lineno + 1))?;
        if mote == 0 {
            bail!("locations line {}: mote ids start at 1", lineno + 1);
        }
        out.insert(mote, (x, y));
    }
    if out.is_empty() {
        bail!("locations file holds no motes");
    }
    Ok(out)
}

/// Parses a full log text against known mote locations. Rows with a
/// missing or unparseable attribute are dropped and counted; rows for
/// unknown motes are skipped and counted separately.
pub fn parse_log(
    text: &str,
    locations: &BTreeMap<u32, (f64, f64)>,
    attribute: Attribute,
) -> (Vec<SensorReading>, IngestStats) {
    let mut readings = Vec::new();
    let mut stats = IngestStats::default();
    let col = attribute.column();
    for line in text.lines() {
        if line.trim().is_empty() {
            continue;
        }
        stats.total_rows += 1;
        let fields: Vec<&str> = line.split_whitespace().collect();
        if fields.len() < 4 {
            stats.dropped_rows += 1;
            continue;
        }
        let Ok(mote_id) = fields[3].parse::<u32>() else {
            stats.dropped_rows += 1;
            continue;
        };
        if mote_id == 0 {
            stats.dropped_rows += 1;
            continue;
        }
        *stats.total_by_mote.entry(mote_id).or_insert(0) += 1;
        let timestamp = NaiveDateTime::parse_from_str(
            &format!("{} {}", fields[0], fields[1]),
            "%Y-%m-%d %H:%M:%S%.f",
        );
        let epoch = fields[2].parse::<u64>();
        let value = fields.get(col).and_then(|f| f.parse::<f64>().ok());
        match (timestamp, epoch, value) {
            (Ok(timestamp), Ok(epoch), Some(value)) if value.is_finite() => {
                match locations.get(&mote_id) {
                    Some(&(x, y)) => {
                        stats.parsed += 1;
                        readings.push(SensorReading { timestamp, epoch, mote_id, x, y, value });
                    }
                    None => stats.unknown_mote_rows += 1,
                }
            }
            _ => {
                stats.dropped_rows += 1;
                *stats.missing_by_mote.entry(mote_id).or_insert(0) += 1;
            }
        }
    }
    (readings, stats)
}

/// Reads and parses a sensor log plus its locations file.
pub fn ingest_sensor_log(
    log_path: &Path,
    locations_path: &Path,
    attribute: Attribute,
) -> Result<(Vec<SensorReading>, IngestStats)> {
    let locations_text = fs::read_to_string(locations_path)
        .with_context(|| format!("reading locations file {}", locations_path.display()))?;
    let locations = parse_locations(&locations_text)?;
    let log_text = fs::read_to_string(log_path)
        .with_context(|| format!("reading sensor log {}", log_path.display()))?;
    Ok(parse_log(&log_text, &locations, attribute))
}

/// Screens motes: any reading outside the open validity interval drops
/// the mote, as does a missing-row fraction above `max_missing_frac`.
/// Fails outright when fewer than 10 motes survive.
pub fn filter_faulty_sensors(
    readings: &[SensorReading],
    stats: &IngestStats,
    validity_range: (f64, f64),
    max_missing_frac: f64,
) -> Result<(Vec<u32>, Vec<u32>)> {
    let (lo, hi) = validity_range;
    if !(lo < hi) {
        bail!("validity range is empty: ({lo}, {hi})");
    }
    let mut out_of_range: BTreeSet<u32> = BTreeSet::new();
    let mut seen: BTreeSet<u32> = BTreeSet::new();
    for r in readings {
        seen.insert(r.mote_id);
        if r.value <= lo || r.value >= hi {
            out_of_range.insert(r.mote_id);
        }
    }
    seen.extend(stats.total_by_mote.keys());
    let mut kept = Vec::new();
    let mut dropped = Vec::new();
    for &mote in &seen {
        let total = stats.total_by_mote.get(&mote).copied().unwrap_or(0).max(1);
        let missing = stats.missing_by_mote.get(&mote).copied().unwrap_or(0);
        let missing_frac = missing as f64 / total as f64;
        if out_of_range.contains(&mote) || missing_frac > max_missing_frac {
            dropped.push(mote);
        } else {
            kept.push(mote);
        }
    }
    if kept.len() < 10 {
        bail!("only {} motes passed screening; need at least 10 to build surrogates", kept.len());
    }
    Ok((kept, dropped))
}

/// Epochs at which at least `min_motes` kept motes report, ascending.
pub fn snapshot_epochs(readings: &[SensorReading], kept: &[u32], min_motes: usize) -> Vec<u64> {
    let kept: BTreeSet<u32> = kept.iter().copied().collect();
    let mut motes_by_epoch: BTreeMap<u64, BTreeSet<u32>> = BTreeMap::new();
    for r in readings {
        if kept.contains(&r.mote_id) {
            motes_by_epoch.entry(r.epoch).or_default().insert(r.mote_id);
        }
    }
    motes_by_epoch
        .into_iter()
        .filter(|(_, motes)| motes.len() >= min_motes)
        .map(|(epoch, _)| epoch)
        .collect()
}

/// Uniform random selection of `count` snapshot epochs, returned sorted.
pub fn select_snapshots(epochs: &[u64], count: usize, seed: u64) -> Vec<u64> {
    let mut rng = rng::rng_from_seed(SeedMix::new(seed).str("snapshot-select").build());
    let mut picked = rng::sample_distinct(epochs, count, &mut rng);
    picked.sort_unstable();
    picked
}

/// Builds one surrogate instance from the first reading of every kept
/// mote at `epoch`.
pub fn build_instance_at_epoch(
    readings: &[SensorReading],
    kept: &[u32],
    epoch: u64,
    out_h: usize,
    out_w: usize,
) -> Result<FieldInstance> {
    let kept: BTreeSet<u32> = kept.iter().copied().collect();
    let mut per_mote: BTreeMap<u32, (f64, f64, f64)> = BTreeMap::new();
    for r in readings {
        if r.epoch == epoch && kept.contains(&r.mote_id) {
            per_mote.entry(r.mote_id).or_insert((r.x, r.y, r.value));
        }
    }
    let coords: Vec<(f64, f64)> = per_mote.values().map(|&(x, y, _)| (x, y)).collect();
    let values: Vec<f64> = per_mote.values().map(|&(_, _, v)| v).collect();
    let config = SurrogateConfig { out_h, out_w, ..SurrogateConfig::default() };
    let id = format!("lab-{epoch:08}");
    build_surrogate_with(&id, &coords, &values, &config)
        .map_err(|e| anyhow::anyhow!("epoch {epoch}: {e}"))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn locations_fixture(n: u32) -> BTreeMap<u32, (f64, f64)> {
        (1..=n).map(|m| (m, (((m % 9) * 5) as f64, ((m / 9) * 4) as f64))).collect()
    }

    /// An empty `temp` models a missing value, which truncates the row
    /// (whitespace logs cannot hold an empty middle column).
    fn row(epoch: u64, mote: u32, temp: &str) -> String {
        let prefix =
            format!("2004-03-01 00:{:02}:{:02}.123 {epoch} {mote}", epoch / 60, epoch % 60);
        if temp.is_empty() {
            prefix
        } else {
            format!("{prefix} {temp} 38.46 45.08 2.69")
        }
    }

    #[test]
    fn well_formed_row_parses() {
        let locations = locations_fixture(3);
        let (readings, stats) = parse_log(&row(1, 2, "19.98"), &locations, Attribute::Temperature);
        assert_eq!(readings.len(), 1);
        assert_eq!(readings[0].value, 19.98);
        assert_eq!(readings[0].mote_id, 2);
        assert_eq!(stats.parsed, 1);
        assert_eq!(stats.dropped_rows, 0);
    }

    #[test]
    fn humidity_column_selectable() {
        let locations = locations_fixture(3);
        let (readings, _) = parse_log(&row(1, 1, "19.98"), &locations, Attribute::Humidity);
        assert_eq!(readings[0].value, 38.46);
    }

    #[test]
    fn empty_attribute_column_dropped_and_counted() {
        let locations = locations_fixture(3);
        // Row truncated before the temperature column.
        let text = "2004-03-01 00:00:01.0 1 2";
        let (readings, stats) = parse_log(text, &locations, Attribute::Temperature);
        assert!(readings.is_empty());
        assert_eq!(stats.dropped_rows, 1);
        assert_eq!(stats.missing_by_mote.get(&2), Some(&1));
        assert_eq!(stats.total_by_mote.get(&2), Some(&1));
    }

    #[test]
    fn thousand_row_fixture_with_three_malformed_yields_997() {
        let locations = locations_fixture(20);
        let mut lines = Vec::new();
        for i in 0..1000u64 {
            let mote = (i % 20 + 1) as u32;
            if i == 100 || i == 500 {
                lines.push(row(i, mote, "")); // missing attribute column
            } else if i == 900 {
                lines.push(row(i, mote, "not-a-number"));
            } else {
                lines.push(row(i, mote, "19.5"));
            }
        }
        let text = lines.join("\n");
        let (readings, stats) = parse_log(&text, &locations, Attribute::Temperature);
        assert_eq!(stats.total_rows, 1000);
        assert_eq!(readings.len(), 997);
        assert_eq!(stats.dropped_rows, 3);
    }

    #[test]
    fn unknown_mote_skipped_with_count() {
        let locations = locations_fixture(2);
        let text = [row(1, 1, "20.0"), row(1, 7, "20.0")].join("\n");
        let (readings, stats) = parse_log(&text, &locations, Attribute::Temperature);
        assert_eq!(readings.len(), 1);
        assert_eq!(stats.unknown_mote_rows, 1);
    }

    #[test]
    fn missing_files_are_fatal() {
        let err = ingest_sensor_log(
            Path::new("/nonexistent/log.txt"),
            Path::new("/nonexistent/locs.txt"),
            Attribute::Temperature,
        );
        assert!(err.is_err());
    }

    fn synth_readings(
        n_motes: u32,
        rows_per_mote: u64,
        faulty: &[u32],
    ) -> (Vec<SensorReading>, IngestStats) {
        let locations = locations_fixture(n_motes);
        let mut lines = Vec::new();
        for epoch in 0..rows_per_mote {
            for mote in 1..=n_motes {
                let temp = if faulty.contains(&mote) { "122.153" } else { "19.1" };
                lines.push(row(epoch, mote, temp));
            }
        }
        parse_log(&lines.join("\n"), &locations, Attribute::Temperature)
    }

    #[test]
    fn fifty_four_motes_with_four_faulty_keeps_fifty() {
        let (readings, stats) = synth_readings(54, 5, &[5, 15, 18, 49]);
        let (kept, dropped) =
            filter_faulty_sensors(&readings, &stats, (0.0, 50.0), 0.5).unwrap();
        assert_eq!(kept.len(), 50);
        assert_eq!(dropped, vec![5, 15, 18, 49]);
    }

    #[test]
    fn all_in_range_mote_kept() {
        let (readings, stats) = synth_readings(12, 3, &[]);
        let (kept, dropped) =
            filter_faulty_sensors(&readings, &stats, (0.0, 50.0), 0.5).unwrap();
        assert_eq!(kept.len(), 12);
        assert!(dropped.is_empty());
    }

    #[test]
    fn too_few_survivors_is_fatal() {
        let (readings, stats) = synth_readings(12, 3, &[1, 2, 3, 4]);
        assert!(filter_faulty_sensors(&readings, &stats, (0.0, 50.0), 0.5).is_err());
    }

    #[test]
    fn mostly_missing_mote_dropped() {
        let locations = locations_fixture(11);
        let mut lines = Vec::new();
        for epoch in 0..10u64 {
            for mote in 1..=11u32 {
                // Mote 11 misses its attribute in 8 of 10 rows.
                let temp = if mote == 11 && epoch < 8 { "" } else { "18.0" };
                lines.push(row(epoch, mote, temp));
            }
        }
        let (readings, stats) = parse_log(&lines.join("\n"), &locations, Attribute::Temperature);
        let (kept, dropped) =
            filter_faulty_sensors(&readings, &stats, (0.0, 50.0), 0.5).unwrap();
        assert_eq!(dropped, vec![11]);
        assert_eq!(kept.len(), 10);
    }

    #[test]
    fn snapshot_pipeline_builds_instances() {
        let (readings, stats) = synth_readings(14, 6, &[]);
        let (kept, _) = filter_faulty_sensors(&readings, &stats, (0.0, 50.0), 0.5).unwrap();
        let epochs = snapshot_epochs(&readings, &kept, 12);
        assert_eq!(epochs.len(), 6);
        let picked = select_snapshots(&epochs, 3, 9);
        assert_eq!(picked.len(), 3);
        assert_eq!(picked, select_snapshots(&epochs, 3, 9));
        let inst = build_instance_at_epoch(&readings, &kept, picked[0], 32, 32).unwrap();
        assert_eq!(inst.truth.dims(), (32, 32));
    }
}
