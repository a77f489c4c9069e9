//! On-disk results: one CSV (and Q-table checkpoint) per episode under
//! `<out>/<scenario>/<mode>/`, a `summary.json` per output directory and,
//! for sweeps, a `sweep_summary.json` aggregated across seeds.

use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::Serialize;

use crate::error::{Error, Result};
use crate::experiment::{summarize, Episode, Summary, SweepCell, TimeSlotLog};

pub const SUMMARY_FILE: &str = "summary.json";
pub const SWEEP_SUMMARY_FILE: &str = "sweep_summary.json";

/// Exact CSV header for `num_leds` precoder weights.
pub fn csv_header(num_leds: usize) -> String {
    let mut cols = vec!["slot".to_string(), "M".to_string()];
    cols.extend((1..=num_leds).map(|n| format!("w_{n}")));
    cols.extend(["C_s_bits", "ber_bob", "ber_eve", "utility", "epsilon", "greedy"].map(String::from));
    cols.join(",")
}

/// Reals use 17 significant digits in scientific notation; `greedy` is 0/1.
pub fn write_csv<W: Write>(logs: &[TimeSlotLog], num_leds: usize, mut out: W) -> Result<()> {
    writeln!(out, "{}", csv_header(num_leds))?;
    for log in logs {
        if log.weights.len() != num_leds {
            return Err(Error::DimensionMismatch { expected: num_leds, got: log.weights.len() });
        }
        write!(out, "{},{}", log.slot, log.order)?;
        for w in &log.weights {
            write!(out, ",{w:.16e}")?;
        }
        writeln!(
            out,
            ",{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{}",
            log.secrecy_capacity,
            log.ber_bob,
            log.ber_eve,
            log.utility,
            log.epsilon,
            u8::from(log.greedy)
        )?;
    }
    Ok(())
}

pub fn episode_dir(out: &Path, scenario: &str, mode_label: &str) -> PathBuf {
    out.join(scenario).join(mode_label)
}

pub fn csv_path(out: &Path, scenario: &str, mode_label: &str, seed: u64) -> PathBuf {
    episode_dir(out, scenario, mode_label).join(format!("seed{seed}.csv"))
}

pub fn qtable_path(out: &Path, scenario: &str, mode_label: &str, seed: u64) -> PathBuf {
    episode_dir(out, scenario, mode_label).join(format!("seed{seed}.qtable"))
}

fn io_err(path: &Path, e: std::io::Error) -> Error {
    Error::Io(format!("{}: {e}", path.display()))
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    if let Some(dir) = path.parent() {
        fs::create_dir_all(dir).map_err(|e| io_err(dir, e))?;
    }
    Ok(BufWriter::new(File::create(path).map_err(|e| io_err(path, e))?))
}

/// Writes the episode CSV and its Q-table checkpoint.
pub fn write_episode(out: &Path, scenario: &str, mode_label: &str, seed: u64, episode: &Episode) -> Result<()> {
    let num_leds = episode.logs.first().map_or(0, |l| l.weights.len());
    let path = csv_path(out, scenario, mode_label, seed);
    let mut w = create(&path)?;
    write_csv(&episode.logs, num_leds, &mut w)?;
    w.flush().map_err(|e| io_err(&path, e))?;
    let path = qtable_path(out, scenario, mode_label, seed);
    let mut w = create(&path)?;
    episode.qtable.write_checkpoint(&mut w)?;
    w.flush().map_err(|e| io_err(&path, e))
}

#[derive(Debug, Clone, Serialize)]
pub struct EpisodeEntry {
    pub scenario: String,
    pub mode: String,
    pub seed: u64,
    /// Relative to the output directory.
    pub csv: String,
    pub qtable: String,
    pub num_slots: usize,
    pub summary: Summary,
}

#[derive(Debug, Clone, Serialize)]
pub struct Failure {
    pub scenario: String,
    pub mode: String,
    pub seed: u64,
    pub error: String,
}

#[derive(Debug, Clone, Serialize)]
pub struct RunSummary {
    pub summary_window: usize,
    pub episodes: Vec<EpisodeEntry>,
    pub failures: Vec<Failure>,
}

/// Mean and sample standard deviation across seeds.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MeanStd {
    pub mean: f64,
    pub std: f64,
}

impl MeanStd {
    pub fn of(values: &[f64]) -> Self {
        let n = values.len() as f64;
        let mean = values.iter().sum::<f64>() / n;
        let std = if values.len() > 1 {
            (values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt()
        } else {
            0.0
        };
        Self { mean, std }
    }
}

/// Window means of one (scenario, mode) cell aggregated over its seeds.
#[derive(Debug, Clone, Serialize)]
pub struct SweepGroup {
    pub scenario: String,
    pub mode: String,
    pub seeds: Vec<u64>,
    pub secrecy_capacity: MeanStd,
    pub ber_bob: MeanStd,
    pub ber_eve: MeanStd,
    pub utility: MeanStd,
    pub greedy_fraction: MeanStd,
}

#[derive(Debug, Clone, Serialize)]
pub struct SweepSummary {
    pub summary_window: usize,
    pub groups: Vec<SweepGroup>,
    pub failures: Vec<Failure>,
}

/// Writes every successful cell plus `summary.json`; failed cells (including
/// those whose output could not be written) are listed in the summary.
pub fn write_run(out: &Path, cells: &[SweepCell], window: usize) -> Result<RunSummary> {
    fs::create_dir_all(out).map_err(|e| io_err(out, e))?;
    let mut summary = RunSummary { summary_window: window, episodes: Vec::new(), failures: Vec::new() };
    for cell in cells {
        let label = cell.mode.label();
        let written = cell.outcome.clone().and_then(|ep| {
            let s = summarize(&ep.logs, window)?;
            write_episode(out, &cell.scenario, &label, cell.seed, &ep)?;
            Ok((ep.logs.len(), s))
        });
        match written {
            Ok((num_slots, s)) => summary.episodes.push(EpisodeEntry {
                scenario: cell.scenario.clone(),
                mode: label.clone(),
                seed: cell.seed,
                csv: format!("{}/{label}/seed{}.csv", cell.scenario, cell.seed),
                qtable: format!("{}/{label}/seed{}.qtable", cell.scenario, cell.seed),
                num_slots,
                summary: s,
            }),
            Err(e) => summary.failures.push(Failure {
                scenario: cell.scenario.clone(),
                mode: label,
                seed: cell.seed,
                error: e.to_string(),
            }),
        }
    }
    write_json(&out.join(SUMMARY_FILE), &summary)?;
    Ok(summary)
}

/// Groups the episodes of a run summary by (scenario, mode), keeping order
/// of first appearance.
pub fn aggregate(run: &RunSummary) -> SweepSummary {
    let mut keys: Vec<(&str, &str)> = Vec::new();
    for e in &run.episodes {
        let k = (e.scenario.as_str(), e.mode.as_str());
        if !keys.contains(&k) {
            keys.push(k);
        }
    }
    let groups = keys
        .into_iter()
        .map(|(scenario, mode)| {
            let eps: Vec<&EpisodeEntry> =
                run.episodes.iter().filter(|e| e.scenario == scenario && e.mode == mode).collect();
            let col = |f: fn(&Summary) -> f64| MeanStd::of(&eps.iter().map(|e| f(&e.summary)).collect::<Vec<_>>());
            SweepGroup {
                scenario: scenario.to_string(),
                mode: mode.to_string(),
                seeds: eps.iter().map(|e| e.seed).collect(),
                secrecy_capacity: col(|s| s.secrecy_capacity.mean),
                ber_bob: col(|s| s.ber_bob.mean),
                ber_eve: col(|s| s.ber_eve.mean),
                utility: col(|s| s.utility.mean),
                greedy_fraction: col(|s| s.greedy_fraction),
            }
        })
        .collect();
    SweepSummary { summary_window: run.summary_window, groups, failures: run.failures.clone() }
}

pub fn write_sweep_summary(out: &Path, run: &RunSummary) -> Result<SweepSummary> {
    let sweep = aggregate(run);
    write_json(&out.join(SWEEP_SUMMARY_FILE), &sweep)?;
    Ok(sweep)
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut w = create(path)?;
    serde_json::to_writer_pretty(&mut w, value).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
    writeln!(w)?;
    w.flush().map_err(|e| io_err(path, e))
}
