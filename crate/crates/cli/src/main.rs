use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};

use brcf_core::eval::synth::{preset, synth_sequence, PRESETS};
use brcf_core::eval::zone::{check_zones, load_zones, AlarmEvent};
use brcf_core::eval::{bench_report, evaluate_sequence, format_bench, format_summary, summarize, write_curves, write_jsonl};
use brcf_core::media::{load_sequence, Sequence};
use brcf_core::regression::pretrain_regressor;
use brcf_core::tracker::{track_sequence, Mode, TrackerConfig};
use brcf_core::BBox;

/// Correlation-filter tracker: tracking, evaluation, benchmarking and zone alarms.
#[derive(Parser)]
#[command(name = "brcf", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct Common {
    /// Tracker config file (`key = value` lines).
    #[arg(long)]
    config: Option<PathBuf>,
    /// Tracker variant; eval and bench run both when omitted.
    #[arg(long, value_parser = ["brcf", "kcf"])]
    mode: Option<String>,
    /// Seed for the tracker and for synthetic sequences.
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory (or file for trainreg).
    #[arg(long)]
    out: Option<PathBuf>,
    /// Extra config override, repeatable.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    set: Vec<String>,
}

#[derive(Args, Clone)]
struct Inputs {
    /// Sequence directories with `img/` and `groundtruth_rect.txt`.
    sequences: Vec<PathBuf>,
    /// Built-in synthetic sequence (static, translate, grow, diagonal), repeatable.
    #[arg(long)]
    synth: Vec<String>,
}

#[derive(Subcommand)]
enum Command {
    /// Track one sequence and emit one JSON result per frame.
    Track {
        #[command(flatten)]
        inputs: Inputs,
        #[command(flatten)]
        common: Common,
    },
    /// Score sequences: per-frame records, success/precision curves and a summary table.
    Eval {
        #[command(flatten)]
        inputs: Inputs,
        #[command(flatten)]
        common: Common,
        /// Print the summary as JSON lines instead of a table.
        #[arg(long)]
        json: bool,
    },
    /// Per-stage timing and frame rate.
    Bench {
        #[command(flatten)]
        inputs: Inputs,
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        json: bool,
    },
    /// Render a synthetic sequence to disk.
    Synth {
        #[arg(long, default_value = "translate")]
        kind: String,
        #[arg(long)]
        frames: Option<usize>,
        #[arg(long, default_value_t = 7)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Train the box regressor offline and write it to `--out`.
    Trainreg {
        #[command(flatten)]
        inputs: Inputs,
        #[command(flatten)]
        common: Common,
        /// Annotated frames used per sequence.
        #[arg(long, default_value_t = 4)]
        frames: usize,
        /// Jittered boxes per frame.
        #[arg(long, default_value_t = 32)]
        per_frame: usize,
    },
    /// Track with restricted-zone alarms.
    Watch {
        #[command(flatten)]
        inputs: Inputs,
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        zones: PathBuf,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}

fn config(common: &Common) -> Result<TrackerConfig> {
    let mut cfg = match &common.config {
        Some(p) => TrackerConfig::from_file(p).with_context(|| format!("reading {}", p.display()))?,
        None => TrackerConfig::default(),
    };
    for kv in &common.set {
        let (k, v) = kv.split_once('=').with_context(|| format!("--set {kv:?}: expected KEY=VALUE"))?;
        cfg.set(k.trim(), v.trim())?;
    }
    if let Some(m) = &common.mode {
        cfg.mode = m.parse()?;
    }
    if let Some(s) = common.seed {
        cfg.seed = s;
    }
    cfg.validate()?;
    Ok(cfg)
}

fn modes(common: &Common, cfg: &TrackerConfig) -> Vec<TrackerConfig> {
    if common.mode.is_some() {
        return vec![cfg.clone()];
    }
    [Mode::Brcf, Mode::Kcf].into_iter().map(|mode| TrackerConfig { mode, ..cfg.clone() }).collect()
}

fn mode_name(mode: Mode) -> &'static str {
    match mode {
        Mode::Brcf => "brcf",
        Mode::Kcf => "kcf",
    }
}

fn sequences(inputs: &Inputs, seed: u64) -> Result<Vec<Sequence>> {
    let mut out = Vec::new();
    for dir in &inputs.sequences {
        out.push(load_sequence(dir).with_context(|| format!("loading {}", dir.display()))?);
    }
    for kind in &inputs.synth {
        out.push(synth_sequence(&preset(kind, seed)?)?);
    }
    if out.is_empty() {
        bail!("no sequences given; pass directories or --synth one of {PRESETS:?}");
    }
    Ok(out)
}

fn emit_jsonl<T: serde::Serialize>(out: Option<&Path>, name: &str, items: &[T]) -> Result<()> {
    match out {
        Some(dir) => {
            std::fs::create_dir_all(dir)?;
            write_jsonl(&dir.join(name), items)?;
        }
        None => {
            let mut stdout = std::io::stdout().lock();
            for item in items {
                serde_json::to_writer(&mut stdout, item)?;
                writeln!(stdout)?;
            }
        }
    }
    Ok(())
}

fn run(command: Command) -> Result<()> {
    match command {
        Command::Track { inputs, common } => {
            let cfg = config(&common)?;
            let seqs = sequences(&inputs, cfg.seed)?;
            if seqs.len() != 1 {
                bail!("track takes exactly one sequence, got {}", seqs.len());
            }
            let results = track_sequence(&seqs[0], &cfg)?;
            emit_jsonl(common.out.as_deref(), "results.jsonl", &results)?;
        }
        Command::Eval { inputs, common, json } => {
            let cfg = config(&common)?;
            let seqs = sequences(&inputs, cfg.seed)?;
            let mut rows = Vec::new();
            for cfg in modes(&common, &cfg) {
                let name = mode_name(cfg.mode);
                let mut records = Vec::new();
                let mut results = Vec::new();
                for seq in &seqs {
                    let (r, rec) = evaluate_sequence(seq, &cfg).with_context(|| format!("{name} on {}", seq.name))?;
                    results.extend(r);
                    records.extend(rec);
                }
                if let Some(out) = &common.out {
                    let dir = out.join(name);
                    std::fs::create_dir_all(&dir)?;
                    write_jsonl(&dir.join("records.jsonl"), &records)?;
                    write_jsonl(&dir.join("results.jsonl"), &results)?;
                    write_curves(&dir, &records)?;
                }
                rows.push(summarize(name, &records)?);
            }
            if let Some(out) = &common.out {
                std::fs::write(out.join("summary.txt"), format_summary(&rows))?;
                write_jsonl(&out.join("summary.jsonl"), &rows)?;
            }
            if json {
                emit_jsonl(None, "", &rows)?;
            } else {
                print!("{}", format_summary(&rows));
            }
        }
        Command::Bench { inputs, common, json } => {
            let cfg = config(&common)?;
            let seqs = sequences(&inputs, cfg.seed)?;
            let mut rows = Vec::new();
            for cfg in modes(&common, &cfg) {
                let runs = seqs.iter().map(|s| track_sequence(s, &cfg)).collect::<brcf_core::Result<Vec<_>>>()?;
                rows.push(bench_report(mode_name(cfg.mode), &runs));
            }
            if let Some(out) = &common.out {
                std::fs::create_dir_all(out)?;
                write_jsonl(&out.join("bench.jsonl"), &rows)?;
            }
            if json {
                emit_jsonl(None, "", &rows)?;
            } else {
                print!("{}", format_bench(&rows));
            }
        }
        Command::Synth { kind, frames, seed, out } => {
            let mut spec = preset(&kind, seed)?;
            if let Some(n) = frames {
                spec.frames = n;
            }
            let seq = synth_sequence(&spec)?;
            seq.write_to(&out)?;
            println!("{}", serde_json::json!({ "kind": kind, "frames": seq.len(), "out": out }));
        }
        Command::Trainreg { inputs, common, frames, per_frame } => {
            let cfg = config(&common)?;
            let out = common.out.as_ref().context("trainreg needs --out FILE")?;
            let seqs = sequences(&inputs, cfg.seed)?;
            let w = pretrain_regressor(&seqs, &cfg.regression, frames, per_frame, cfg.seed)?;
            if let Some(parent) = out.parent().filter(|p| !p.as_os_str().is_empty()) {
                std::fs::create_dir_all(parent)?;
            }
            w.save(out)?;
            println!("{}", serde_json::json!({ "sequences": seqs.len(), "dim": w.dim, "out": out }));
        }
        Command::Watch { inputs, common, zones } => {
            let cfg = config(&common)?;
            let zones = load_zones(&zones).with_context(|| format!("reading {}", zones.display()))?;
            let seqs = sequences(&inputs, cfg.seed)?;
            if seqs.len() != 1 {
                bail!("watch takes exactly one sequence, got {}", seqs.len());
            }
            #[derive(serde::Serialize)]
            struct WatchLine {
                frame: usize,
                bbox: BBox,
                alarms: Vec<AlarmEvent>,
            }
            let results = track_sequence(&seqs[0], &cfg)?;
            let lines = results
                .iter()
                .map(|r| Ok(WatchLine { frame: r.frame, bbox: r.bbox, alarms: check_zones(r.frame, &r.bbox, &zones)? }))
                .collect::<Result<Vec<_>>>()?;
            for l in &lines {
                for a in l.alarms.iter().filter(|a| a.triggered) {
                    eprintln!("alarm: frame {} zone {} distance {:.1}", a.frame, a.zone, a.distance);
                }
            }
            emit_jsonl(common.out.as_deref(), "watch.jsonl", &lines)?;
        }
    }
    Ok(())
}
