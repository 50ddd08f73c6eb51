use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use rfdsa::config::{on_off, KeyValues};
use rfdsa::experiments::run_named;
use rfdsa::Error;

#[derive(Parser)]
#[command(name = "rfdsa", version, about = "RF signal classification and spectrum access experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct Common {
    #[arg(long, default_value_t = 1)]
    seed: u64,
    /// Output directory (created if missing).
    #[arg(long, default_value = "out")]
    out: PathBuf,
    /// Flat `key = value` config file.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Extra `key=value` override; repeatable, applied after --config.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    set: Vec<String>,
    /// Exit with status 1 if any thresholded check fails.
    #[arg(long)]
    check: bool,
}

#[derive(Clone, Copy, ValueEnum)]
enum Switch {
    On,
    Off,
}

impl Switch {
    fn value(self) -> String {
        on_off(matches!(self, Switch::On))
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum ClassifierArg {
    Ideal,
    Random,
    TableAll,
    TablePerSnr,
    Model,
}

impl ClassifierArg {
    fn name(self) -> &'static str {
        match self {
            ClassifierArg::Ideal => "ideal",
            ClassifierArg::Random => "random",
            ClassifierArg::TableAll => "table-all",
            ClassifierArg::TablePerSnr => "table-per-snr",
            ClassifierArg::Model => "model",
        }
    }
}

#[derive(Args)]
struct SimulateArgs {
    #[command(flatten)]
    common: Common,
    #[arg(long, value_enum)]
    classifier: Option<ClassifierArg>,
    /// Checkpoint for `--classifier model`.
    #[arg(long)]
    model: Option<PathBuf>,
    #[arg(long, value_enum)]
    jamming: Option<Switch>,
    #[arg(long, value_enum)]
    traffic_fusion: Option<Switch>,
    /// Weight on the traffic profile when fusing (default 0.2).
    #[arg(long)]
    fusion_weight: Option<f64>,
    #[arg(long, value_enum)]
    outliers: Option<Switch>,
    #[arg(long, value_enum)]
    superposition: Option<Switch>,
}

#[derive(Subcommand)]
enum Command {
    /// Train the 4-class channel classifier; accuracy by SNR and confusion matrices.
    TrainBase(Common),
    /// Task-A/Task-B accuracy over time under plain SGD and EWC retraining.
    EwcDemo(Common),
    /// MCD contamination sweep and k-means detection of unknown signals.
    OutlierEval(Common),
    /// 17-way phase-rotation classifier for replayed frames.
    ReplayEval(Common),
    /// FastICA separation and classification of two-signal mixtures.
    SuperimposedEval(Common),
    /// Network simulation with distributed scheduling and TDMA benchmarks.
    Simulate(SimulateArgs),
}

fn overrides(common: &Common) -> Result<KeyValues, Error> {
    let mut kv = match &common.config {
        Some(p) => KeyValues::load(p)?,
        None => KeyValues::default(),
    };
    for s in &common.set {
        let (k, v) = s
            .split_once('=')
            .ok_or_else(|| Error::Config(format!("--set {s:?}: expected KEY=VALUE")))?;
        kv.set(k.trim(), v.trim());
    }
    Ok(kv)
}

fn run(cli: Cli) -> Result<bool, Error> {
    let (name, common, mut kv) = match &cli.command {
        Command::TrainBase(c) => ("train-base", c, overrides(c)?),
        Command::EwcDemo(c) => ("ewc-demo", c, overrides(c)?),
        Command::OutlierEval(c) => ("outlier-eval", c, overrides(c)?),
        Command::ReplayEval(c) => ("replay-eval", c, overrides(c)?),
        Command::SuperimposedEval(c) => ("superimposed-eval", c, overrides(c)?),
        Command::Simulate(s) => ("simulate", &s.common, overrides(&s.common)?),
    };
    if let Command::Simulate(s) = &cli.command {
        if let Some(c) = s.classifier {
            kv.set("classifier", c.name());
        }
        if let Some(p) = &s.model {
            kv.set("model_path", p.display().to_string());
        }
        for (key, sw) in [
            ("jamming", s.jamming),
            ("traffic_fusion", s.traffic_fusion),
            ("outliers", s.outliers),
            ("superposition", s.superposition),
        ] {
            if let Some(sw) = sw {
                kv.set(key, sw.value());
            }
        }
        if let Some(w) = s.fusion_weight {
            kv.set("fusion_weight", w.to_string());
        }
    }
    let manifest = run_named(name, &kv, common.seed, &common.out)?;
    for (k, v) in &manifest.summary {
        println!("{k}: {v}");
    }
    for c in &manifest.checks {
        let verdict = if c.pass { "PASS" } else { "FAIL" };
        println!("{verdict} {} = {} ({} {})", c.name, c.value, c.op, c.threshold);
    }
    println!("wrote {}", common.out.display());
    Ok(!common.check || manifest.passed)
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
