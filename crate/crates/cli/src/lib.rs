//! Command implementations behind the `convince` binary.

use std::collections::{BTreeMap, BTreeSet};
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use convince_core::detsim::{load_log, save_log, DetectionLog};
use convince_core::scenario::{build_inputs, build_network, preset, ScenarioConfig};
use convince_core::server::{run, write_outputs, RunMode, RunReport};
use convince_core::CameraId;
use rayon::prelude::*;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    /// Bad input, config or environment; exit code 1.
    #[error(transparent)]
    Core(#[from] convince_core::Error),
    #[error("{0}")]
    Usage(String),
}

pub type Result<T> = std::result::Result<T, CliError>;

fn usage(msg: impl Into<String>) -> CliError {
    CliError::Usage(msg.into())
}

fn io_err(path: &Path, e: std::io::Error) -> CliError {
    CliError::Core(convince_core::Error::Io {
        path: path.to_path_buf(),
        source: e,
    })
}

/// Reads `config` if given, else the named preset (`salsa-like` by default).
pub fn load_config(config: Option<&Path>, preset_name: Option<&str>) -> Result<ScenarioConfig> {
    match (config, preset_name) {
        (Some(_), Some(_)) => Err(usage("--config and --preset are mutually exclusive")),
        (Some(p), None) => Ok(ScenarioConfig::load(p)?),
        (None, name) => {
            let name = name.unwrap_or("salsa-like");
            preset(name).ok_or_else(|| usage(format!("unknown preset `{name}` (available: salsa-like)")))
        }
    }
}

pub fn det_log_path(dir: &Path, camera: &CameraId) -> PathBuf {
    dir.join(format!("cam_{camera}.det.jsonl"))
}

pub fn gt_log_path(dir: &Path, camera: &CameraId) -> PathBuf {
    dir.join(format!("cam_{camera}.gt.jsonl"))
}

/// Writes one detection log and one ground-truth log per camera plus
/// `gt_counts.csv` (`frame_idx,ground_truth`).
pub fn cmd_generate(cfg: &ScenarioConfig, seed: u64, out: &Path) -> Result<Vec<PathBuf>> {
    let inputs = build_inputs(cfg, seed)?;
    std::fs::create_dir_all(out).map_err(|e| io_err(out, e))?;
    let mut written = Vec::new();
    for (id, log) in &inputs.det_logs {
        let p = det_log_path(out, id);
        save_log(log, &p)?;
        written.push(p);
        let p = gt_log_path(out, id);
        save_log(&inputs.gt_logs[id], &p)?;
        written.push(p);
    }
    let p = out.join("gt_counts.csv");
    write_gt_counts(&p, &inputs.gt_counts)?;
    written.push(p);
    Ok(written)
}

fn write_gt_counts(path: &Path, counts: &[usize]) -> Result<()> {
    let f = File::create(path).map_err(|e| io_err(path, e))?;
    let mut w = BufWriter::new(f);
    let mut body = || -> std::io::Result<()> {
        writeln!(w, "frame_idx,ground_truth")?;
        for (f, c) in counts.iter().enumerate() {
            writeln!(w, "{f},{c}")?;
        }
        w.flush()
    };
    body().map_err(|e| io_err(path, e))
}

pub fn read_gt_counts(path: &Path) -> Result<Vec<usize>> {
    let f = File::open(path).map_err(|e| io_err(path, e))?;
    let mut out = Vec::new();
    for (k, line) in BufReader::new(f).lines().enumerate() {
        let line = line.map_err(|e| io_err(path, e))?;
        if k == 0 || line.trim().is_empty() {
            continue;
        }
        let bad = |msg: String| CliError::Core(convince_core::Error::Parse { line: k + 1, msg });
        let (idx, count) = line
            .split_once(',')
            .ok_or_else(|| bad(format!("{}: expected `frame_idx,ground_truth`", path.display())))?;
        let idx: usize = idx.trim().parse().map_err(|e| bad(format!("{}: {e}", path.display())))?;
        if idx != out.len() {
            return Err(bad(format!("{}: expected frame {}, found {idx}", path.display(), out.len())));
        }
        out.push(count.trim().parse().map_err(|e| bad(format!("{}: {e}", path.display())))?);
    }
    Ok(out)
}

/// Parses `--mode` and `--subset` into a run mode.
pub fn parse_mode(mode: &str, subset: Option<&str>) -> Result<RunMode> {
    let subset: Option<BTreeSet<CameraId>> = subset.map(|s| {
        s.split(',')
            .map(str::trim)
            .filter(|t| !t.is_empty())
            .map(CameraId::from)
            .collect()
    });
    match (mode, subset) {
        ("isolated", None) => Ok(RunMode::Isolated),
        ("collaborative", None) => Ok(RunMode::Collaborative),
        ("knowledge-sharing", Some(s)) if !s.is_empty() => Ok(RunMode::KnowledgeSharing(s)),
        ("knowledge-sharing", _) => Err(usage("knowledge-sharing needs --subset, e.g. --subset 3,4")),
        ("isolated" | "collaborative", Some(_)) => Err(usage("--subset only applies to knowledge-sharing")),
        (m, _) => Err(usage(format!("unknown mode `{m}` (expected isolated, collaborative or knowledge-sharing)"))),
    }
}

/// Runs one experiment, from synthesized logs or from a `generate` output
/// directory, and writes the report files into `out`.
pub fn cmd_run(cfg: &ScenarioConfig, mode: &RunMode, seed: u64, logs: Option<&Path>, out: &Path) -> Result<RunReport> {
    let output = match logs {
        None => {
            let inputs = build_inputs(cfg, seed)?;
            run(&inputs.network, &inputs.det_logs, &inputs.gt_counts, &cfg.server_params(), mode, seed)?
        }
        Some(dir) => {
            let gt_counts = read_gt_counts(&dir.join("gt_counts.csv"))?;
            let cams = cfg.camera_configs()?;
            let mut det_logs: BTreeMap<CameraId, DetectionLog<f64>> = BTreeMap::new();
            for cam in &cams {
                let log: DetectionLog<f64> = load_log(det_log_path(dir, &cam.camera_id))?;
                if log.camera_id != cam.camera_id {
                    return Err(usage(format!(
                        "{} holds camera {}",
                        det_log_path(dir, &cam.camera_id).display(),
                        log.camera_id
                    )));
                }
                det_logs.insert(cam.camera_id.clone(), log);
            }
            let network = build_network(cfg, cams, &det_logs, &gt_counts)?;
            run(&network, &det_logs, &gt_counts, &cfg.server_params(), mode, seed)?
        }
    };
    write_outputs(out, &output.report, &output.messages)?;
    Ok(output.report)
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub subset_size: usize,
    pub mean_accuracy: f64,
    pub mean_fraction: f64,
    /// Sample standard deviation of accuracy across seeds.
    pub stddev: f64,
}

/// Knowledge-sharing over nested subsets (supreme first, then by overlap)
/// for seeds `base_seed .. base_seed + seeds`.
pub fn sweep(cfg: &ScenarioConfig, seeds: u64, base_seed: u64) -> Result<Vec<SweepRow>> {
    if cfg.cameras.len() < 2 {
        return Err(usage("sweep requires ≥ 2 cameras"));
    }
    if seeds == 0 {
        return Err(usage("--seeds must be positive"));
    }
    let params = cfg.server_params();
    let per_seed: Vec<Vec<(f64, f64)>> = (base_seed..base_seed + seeds)
        .into_par_iter()
        .map(|seed| -> Result<Vec<(f64, f64)>> {
            let inputs = build_inputs(cfg, seed)?;
            let order = inputs.network.accretion_order()?;
            (1..=order.len())
                .map(|k| {
                    let mode = RunMode::KnowledgeSharing(order[..k].iter().cloned().collect());
                    let r = run(&inputs.network, &inputs.det_logs, &inputs.gt_counts, &params, &mode, seed)?.report;
                    Ok((r.accuracy, r.mean_fraction))
                })
                .collect()
        })
        .collect::<Result<_>>()?;
    let n = per_seed.len() as f64;
    let rows = (0..per_seed[0].len())
        .map(|k| {
            let accs: Vec<f64> = per_seed.iter().map(|r| r[k].0).collect();
            let mean_accuracy = accs.iter().sum::<f64>() / n;
            let mean_fraction = per_seed.iter().map(|r| r[k].1).sum::<f64>() / n;
            let stddev = if accs.len() > 1 {
                (accs.iter().map(|a| (a - mean_accuracy).powi(2)).sum::<f64>() / (n - 1.0)).sqrt()
            } else {
                0.0
            };
            SweepRow {
                subset_size: k + 1,
                mean_accuracy,
                mean_fraction,
                stddev,
            }
        })
        .collect();
    Ok(rows)
}

pub fn write_sweep_csv<W: Write>(rows: &[SweepRow], mut w: W) -> std::io::Result<()> {
    writeln!(w, "subset_size,mean_accuracy,mean_fraction,stddev")?;
    for r in rows {
        writeln!(w, "{},{},{},{}", r.subset_size, r.mean_accuracy, r.mean_fraction, r.stddev)?;
    }
    w.flush()
}

/// Runs [`sweep`] and writes `sweep.csv` into `out`.
pub fn cmd_sweep(cfg: &ScenarioConfig, seeds: u64, base_seed: u64, out: &Path) -> Result<Vec<SweepRow>> {
    let rows = sweep(cfg, seeds, base_seed)?;
    std::fs::create_dir_all(out).map_err(|e| io_err(out, e))?;
    let p = out.join("sweep.csv");
    let f = File::create(&p).map_err(|e| io_err(&p, e))?;
    write_sweep_csv(&rows, BufWriter::new(f)).map_err(|e| io_err(&p, e))?;
    Ok(rows)
}
