//! Acceptance run. Prints one PASS/FAIL line per criterion and exits non-zero
//! if any fails.

use std::collections::BTreeSet;
use std::path::Path;
use std::process::Command;
use std::time::Instant;

use convince_cli::sweep;
use convince_core::detsim::{DetectionLog, NoiseModel};
use convince_core::filter::{filter_stream, FilterParams};
use convince_core::fusion::{hungarian, nms};
use convince_core::geometry::{BBox, Homography, Point2};
use convince_core::scenario::{build_inputs, salsa_like, ScenarioConfig};
use convince_core::server::{compute_accuracy, run, RunMode, RunReport};
use convince_core::trust::trust_label;
use convince_core::CameraId;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const SEEDS: u64 = 20;

type Outcome = Result<String, String>;

fn check(ok: bool, detail: String) -> Outcome {
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn brute_min(cost: &[Vec<f64>]) -> f64 {
    let (r, c) = (cost.len(), cost[0].len());
    let t = r > c;
    let (short, long) = if t { (c, r) } else { (r, c) };
    let mut best = f64::INFINITY;
    let mut stack = vec![(0usize, 0u32, 0.0f64)];
    while let Some((s, used, acc)) = stack.pop() {
        if s == short {
            best = best.min(acc);
            continue;
        }
        for l in 0..long {
            if used & (1 << l) == 0 {
                let v = if t { cost[l][s] } else { cost[s][l] };
                stack.push((s + 1, used | (1 << l), acc + v));
            }
        }
    }
    best
}

fn c1_hungarian() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let start = Instant::now();
    let mut worst = 0.0f64;
    for _ in 0..1000 {
        let (r, c) = (rng.random_range(1..=7), rng.random_range(1..=7));
        let cost: Vec<Vec<f64>> = (0..r).map(|_| (0..c).map(|_| rng.random_range(0..20) as f64).collect()).collect();
        let got = hungarian(&cost).map_err(|e| e.to_string())?.total_cost;
        worst = worst.max((got - brute_min(&cost)).abs());
    }
    let secs = start.elapsed().as_secs_f64();
    check(worst == 0.0 && secs < 5.0, format!("max |cost - brute| = {worst}, {secs:.2}s"))
}

fn random_boxes(rng: &mut ChaCha8Rng) -> Vec<BBox<f64>> {
    (0..rng.random_range(0..=50))
        .map(|_| {
            BBox::new(
                rng.random_range(0.0..100.0),
                rng.random_range(0.0..100.0),
                rng.random_range(1.0..30.0),
                rng.random_range(1.0..30.0),
                rng.random_range(0.0..=1.0),
                CameraId::from("1"),
                0,
            )
            .unwrap()
        })
        .collect()
}

fn c2_nms() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let start = Instant::now();
    let mut bad = 0;
    for _ in 0..1000 {
        let boxes = random_boxes(&mut rng);
        let thr = 0.5;
        let kept = nms(&boxes, thr);
        let separated = kept.iter().enumerate().all(|(i, a)| kept[i + 1..].iter().all(|b| a.iou(b) < thr));
        if !separated || nms(&kept, thr) != kept || kept.len() > boxes.len() {
            bad += 1;
        }
    }
    let secs = start.elapsed().as_secs_f64();
    check(bad == 0 && secs < 5.0, format!("{bad} violating sets, {secs:.2}s"))
}

fn c3_geometry() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let (mut n, mut worst) = (0, 0.0f64);
    while n < 1000 {
        let mut m = [[0.0f64; 3]; 3];
        for (i, row) in m.iter_mut().enumerate() {
            for (j, v) in row.iter_mut().enumerate() {
                let scale = if i == 2 { 0.01 } else { 1.0 };
                *v = f64::from(u8::from(i == j)) + rng.random_range(-0.5..0.5) * scale;
            }
        }
        let Ok(h) = Homography::new(m) else { continue };
        if h.determinant().abs() < 0.1 {
            continue;
        }
        let p = Point2::new(rng.random_range(-50.0..50.0), rng.random_range(-50.0..50.0));
        let Ok(q) = h.apply(p) else { continue };
        let back = h.inverse().and_then(|inv| inv.apply(q)).map_err(|e| e.to_string())?;
        worst = worst.max(p.distance(&back));
        n += 1;
    }
    check(worst < 1e-9, format!("max round-trip error {worst:.2e}"))
}

fn c4_filter() -> Outcome {
    let n = 50;
    let cam = CameraId::from("1");
    let static_log = DetectionLog {
        camera_id: cam.clone(),
        frames: (0..n)
            .map(|f| vec![BBox::new(10.0, 10.0, 8.0, 20.0, 0.9, cam.clone(), f).unwrap()])
            .collect(),
    };
    let r = filter_stream(&static_log, &FilterParams::default());
    let single_ok = r.transmitted == BTreeSet::from([0]) && r.fraction == 1.0 / n as f64;
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let mut repeat_ok = true;
    for _ in 0..100 {
        let first = random_boxes(&mut rng);
        let log = DetectionLog {
            camera_id: cam.clone(),
            frames: (0..20)
                .map(|f| first.iter().cloned().map(|mut b| { b.frame_idx = f; b }).collect())
                .collect(),
        };
        let r = filter_stream(&log, &FilterParams::default());
        repeat_ok &= r.transmitted.iter().all(|&f| f == 0);
    }
    check(single_ok && repeat_ok, format!("static fraction {} (want {}), repeated streams quiet: {repeat_ok}", r.fraction, 1.0 / n as f64))
}

fn all_subset(cfg: &ScenarioConfig) -> RunMode {
    RunMode::KnowledgeSharing(cfg.cameras.iter().map(|c| c.camera_id.clone()).collect())
}

fn run_one(cfg: &ScenarioConfig, mode: &RunMode, seed: u64) -> Result<RunReport, String> {
    let inputs = build_inputs(cfg, seed).map_err(|e| e.to_string())?;
    run(&inputs.network, &inputs.det_logs, &inputs.gt_counts, &cfg.server_params(), mode, seed)
        .map(|o| o.report)
        .map_err(|e| e.to_string())
}

fn mean_over_seeds(cfg: &ScenarioConfig, mode: &RunMode) -> Result<(f64, f64), String> {
    let (mut acc, mut frac) = (0.0, 0.0);
    for seed in 0..SEEDS {
        let r = run_one(cfg, mode, seed)?;
        acc += r.accuracy;
        frac += r.mean_fraction;
    }
    Ok((acc / SEEDS as f64, frac / SEEDS as f64))
}

fn c5_zero_noise() -> Outcome {
    let cfg = salsa_like().with_noise(NoiseModel::zero());
    let iso = run_one(&cfg, &RunMode::Isolated, cfg.seed)?;
    let col = run_one(&cfg, &RunMode::Collaborative, cfg.seed)?;
    let ks = run_one(&cfg, &all_subset(&cfg), cfg.seed)?;
    check(
        iso.accuracy == 1.0 && col.accuracy == 1.0 && ks.accuracy == 1.0 && col.mean_fraction < iso.mean_fraction,
        format!(
            "accuracy {}/{}/{}, fraction isolated {:.4} collaborative {:.4}",
            iso.accuracy, col.accuracy, ks.accuracy, iso.mean_fraction, col.mean_fraction
        ),
    )
}

fn c6_filter_trend() -> Outcome {
    let cfg = salsa_like();
    let (iso_acc, iso_frac) = mean_over_seeds(&cfg, &RunMode::Isolated)?;
    let (col_acc, col_frac) = mean_over_seeds(&cfg, &RunMode::Collaborative)?;
    check(
        col_frac <= 0.5 * iso_frac && col_acc <= iso_acc,
        format!("fraction {col_frac:.4} vs {iso_frac:.4} (ratio {:.3}), accuracy {col_acc:.4} vs {iso_acc:.4}", col_frac / iso_frac),
    )
}

fn parse_golden(text: &str) -> Vec<Vec<f64>> {
    text.lines().skip(1).map(|l| l.split(',').map(|v| v.parse().unwrap()).collect()).collect()
}

fn c7_sweep() -> Outcome {
    let cfg = salsa_like();
    let rows = sweep(&cfg, SEEDS, 0).map_err(|e| e.to_string())?;
    let acc: Vec<f64> = rows.iter().map(|r| r.mean_accuracy).collect();
    // subset sizes 1, 2 and 4 of the accretion order
    let picked = [acc[0], acc[1], acc[3]];
    let monotone = picked.windows(2).all(|w| w[1] >= w[0]);
    let gain = acc[1..].iter().cloned().fold(f64::NEG_INFINITY, f64::max) - acc[0];
    let golden = parse_golden(include_str!("golden/sweep_salsa_like.csv"));
    let matches_golden = golden.len() == rows.len()
        && rows
            .iter()
            .zip(&golden)
            .all(|(r, g)| (r.mean_accuracy - g[1]).abs() < 1e-9 && (r.mean_fraction - g[2]).abs() < 1e-9);
    check(
        monotone && gain >= 0.02 && matches_golden,
        format!("accuracy by subset size {acc:.4?}, gain {gain:.4}, golden match {matches_golden}"),
    )
}

fn c8_boost() -> Outcome {
    let cfg = salsa_like();
    let mode = all_subset(&cfg);
    let (with, _) = mean_over_seeds(&cfg, &mode)?;
    let mut flat = cfg.clone();
    flat.fusion.boost_alpha = 0.0;
    let (without, _) = mean_over_seeds(&flat, &mode)?;
    check(with >= without, format!("alpha 0.25 {with:.4} vs alpha 0 {without:.4} (+{:.4})", with - without))
}

fn c9_trust() -> Outcome {
    let anchors = [
        (0.0, "Completely untrustworthy", "Extremely harmful"),
        (0.3, "Risk trust", "Risky"),
        (0.5, "Semi-trust", "Semi-Safe"),
        (0.7, "Trustworthy", "Safe"),
        (1.0, "Completely Trustworthy", "Completely Safe"),
    ];
    let table_ok = anchors.iter().all(|&(s, d, l)| trust_label(s).ok() == Some((d, l)));

    let mut honest = salsa_like();
    honest.trust.enabled = true;
    let mut attacked = honest.clone();
    attacked.trust.adversarial = vec![CameraId::from("1")];
    let mode = all_subset(&honest);
    let (mut latest_gate, mut gap_sum) = (0usize, 0.0);
    for seed in 0..SEEDS {
        let a = run_one(&attacked, &mode, seed)?;
        let h = run_one(&honest, &mode, seed)?;
        let Some(&gate) = a.first_gated.get(&CameraId::from("1")) else {
            return Err(format!("seed {seed}: adversary never gated"));
        };
        latest_gate = latest_gate.max(gate);
        let tail = |r: &RunReport| {
            let pairs: Vec<_> = r.per_frame_counts[gate + 1..].iter().map(|c| (c.predicted, c.ground_truth)).collect();
            compute_accuracy(&pairs).unwrap()
        };
        gap_sum += tail(&h) - tail(&a);
    }
    let gap = gap_sum / SEEDS as f64;
    check(
        table_ok && latest_gate < 100 && gap.abs() <= 0.02,
        format!("labels {table_ok}, gated by frame {latest_gate}, post-gate accuracy gap {gap:.4}"),
    )
}

fn invoke(args: &[&str]) -> Result<Vec<u8>, String> {
    let o = Command::new(env!("CARGO_BIN_EXE_convince")).args(args).output().map_err(|e| e.to_string())?;
    if !o.status.success() {
        return Err(format!("{args:?}: {}", String::from_utf8_lossy(&o.stderr)));
    }
    Ok(o.stdout)
}

fn dir_bytes(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut v: Vec<_> = std::fs::read_dir(dir)
        .unwrap()
        .map(|e| {
            let e = e.unwrap();
            (e.file_name().into_string().unwrap(), std::fs::read(e.path()).unwrap())
        })
        .collect();
    v.sort();
    v
}

fn c10_determinism() -> Outcome {
    let tmp = tempfile::tempdir().map_err(|e| e.to_string())?;
    let commands: [&[&str]; 6] = [
        &["generate"],
        &["run", "--mode", "isolated"],
        &["run", "--mode", "collaborative"],
        &["run", "--mode", "knowledge-sharing", "--subset", "1,2,3,4"],
        &["sweep", "--seeds", "3"],
        &["show-config"],
    ];
    for (k, cmd) in commands.iter().enumerate() {
        let mut outputs = Vec::new();
        for rep in 0..2 {
            let out = tmp.path().join(format!("{k}_{rep}"));
            let mut args = vec!["--out", out.to_str().unwrap()];
            args.extend_from_slice(cmd);
            // generate echoes its output directory
            let stdout = String::from_utf8_lossy(&invoke(&args)?).replace(out.to_str().unwrap(), "OUT");
            let files = if out.exists() { dir_bytes(&out) } else { Vec::new() };
            outputs.push((stdout, files));
        }
        if outputs[0] != outputs[1] {
            return Err(format!("{cmd:?} differs between invocations"));
        }
    }
    Ok(format!("{} commands byte-identical across two invocations", commands.len()))
}

fn main() {
    let criteria: [(&str, fn() -> Outcome); 10] = [
        ("hungarian oracle equivalence", c1_hungarian),
        ("nms properties", c2_nms),
        ("geometry round-trip", c3_geometry),
        ("filter exactness", c4_filter),
        ("zero-noise end-to-end", c5_zero_noise),
        ("filtering trend", c6_filter_trend),
        ("knowledge-sharing sweep trend", c7_sweep),
        ("boost effect", c8_boost),
        ("trust table and adversary", c9_trust),
        ("determinism", c10_determinism),
    ];
    let mut failed = 0;
    for (k, (name, f)) in criteria.iter().enumerate() {
        match f() {
            Ok(detail) => println!("criterion {:>2} PASS  {name}: {detail}", k + 1),
            Err(detail) => {
                failed += 1;
                println!("criterion {:>2} FAIL  {name}: {detail}", k + 1);
            }
        }
    }
    if failed > 0 {
        eprintln!("{failed} acceptance criteria failed");
        std::process::exit(1);
    }
}
