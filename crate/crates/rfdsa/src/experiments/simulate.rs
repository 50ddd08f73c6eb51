//! Network simulation: distributed scheduling with a chosen classifier,
//! plus the two centralized TDMA benchmarks on the same scenario.

use std::path::{Path, PathBuf};

use rfdsa_core::dsa::{
    benchmark_scheme_1, benchmark_scheme_2, build_interference_graph, generate_topology, run_simulation, ActivityModel,
    Classifier, Metrics, SimOptions, SinrConfig, SuperframeConfig, Topology, TopologyConfig,
};
use rfdsa_core::nnet::NeuralModel;
use serde::{Deserialize, Serialize};

use crate::checkpoint;
use crate::config::{on_off, parse_bool, parse_value, unknown_key, Configurable};
use crate::error::{Error, Result};
use crate::manifest::Check;
use crate::tables::{self, MetricsRow};

/// Classifier selection by name; `model` loads a checkpoint.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ClassifierKind {
    Ideal,
    Random,
    TableAll,
    TablePerSnr,
    Model,
}

impl ClassifierKind {
    pub const ALL: [ClassifierKind; 5] = [
        ClassifierKind::Ideal,
        ClassifierKind::Random,
        ClassifierKind::TableAll,
        ClassifierKind::TablePerSnr,
        ClassifierKind::Model,
    ];

    pub fn name(self) -> &'static str {
        match self {
            ClassifierKind::Ideal => "ideal",
            ClassifierKind::Random => "random",
            ClassifierKind::TableAll => "table-all",
            ClassifierKind::TablePerSnr => "table-per-snr",
            ClassifierKind::Model => "model",
        }
    }
}

impl std::fmt::Display for ClassifierKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for ClassifierKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|c| c.name() == s)
            .ok_or_else(|| Error::Config(format!("unknown classifier {s:?}")))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimulateConfig {
    pub topology: TopologyConfig,
    pub superframe: SuperframeConfig,
    pub classifier: ClassifierKind,
    /// Checkpoint for the `model` classifier.
    pub model_path: Option<PathBuf>,
    pub options: SimOptions,
    /// `None` picks i.i.d. activity, or the sticky Markov chain when traffic
    /// fusion is on.
    pub activity: Option<ActivityModel>,
    pub benchmarks: bool,
}

impl Default for SimulateConfig {
    fn default() -> Self {
        Self {
            topology: TopologyConfig::default(),
            superframe: SuperframeConfig::default(),
            classifier: ClassifierKind::Ideal,
            model_path: None,
            options: SimOptions::default(),
            activity: None,
            benchmarks: true,
        }
    }
}

/// Stay probabilities used with traffic fusion unless configured otherwise.
pub const FUSION_STAY_PROB: f64 = 0.8;

impl SimulateConfig {
    pub fn resolved_options(&self) -> SimOptions {
        let activity = self.activity.unwrap_or(if self.options.traffic_fusion {
            ActivityModel::Markov {
                p00: FUSION_STAY_PROB,
                p11: FUSION_STAY_PROB,
            }
        } else {
            ActivityModel::default()
        });
        SimOptions {
            activity,
            ..self.options.clone()
        }
    }

    fn activity_mut(&mut self, markov: bool) -> &mut ActivityModel {
        let cur = self.activity.get_or_insert(ActivityModel::default());
        match (markov, *cur) {
            (true, ActivityModel::Iid { .. }) => {
                *cur = ActivityModel::Markov {
                    p00: FUSION_STAY_PROB,
                    p11: FUSION_STAY_PROB,
                }
            }
            (false, ActivityModel::Markov { .. }) => *cur = ActivityModel::default(),
            _ => {}
        }
        cur
    }
}

impl Configurable for SimulateConfig {
    fn apply(&mut self, key: &str, value: &str) -> Result<()> {
        let s = &mut self.options.sinr;
        match key {
            "in_network" => self.topology.in_network = parse_value(key, value)?,
            "out_network" => self.topology.out_network = parse_value(key, value)?,
            "jammers" => self.topology.jammers = parse_value(key, value)?,
            "side" => self.topology.side = parse_value(key, value)?,
            "range" => self.topology.range = parse_value(key, value)?,
            "slots" => self.superframe.slots = parse_value(key, value)?,
            "superframes" => self.superframe.superframes = parse_value(key, value)?,
            "active_links" => self.superframe.active_links = parse_value(key, value)?,
            "classifier" => self.classifier = value.parse()?,
            "model_path" => self.model_path = (!value.is_empty()).then(|| PathBuf::from(value)),
            "jamming" => self.options.jamming = parse_bool(key, value)?,
            "traffic_fusion" => self.options.traffic_fusion = parse_bool(key, value)?,
            "fusion_weight" => self.options.fusion_weight = parse_value(key, value)?,
            "outliers" => self.options.outliers = parse_bool(key, value)?,
            "superposition" => self.options.superposition = parse_bool(key, value)?,
            "activity" => match value {
                "iid" => {
                    self.activity_mut(false);
                }
                "markov" => {
                    self.activity_mut(true);
                }
                _ => return Err(Error::Config(format!("activity: expected iid or markov, got {value:?}"))),
            },
            "activity_p" => {
                let p = parse_value(key, value)?;
                match self.activity_mut(false) {
                    ActivityModel::Iid { p: cur } => *cur = p,
                    _ => unreachable!(),
                }
            }
            "p00" | "p11" => {
                let v = parse_value(key, value)?;
                match self.activity_mut(true) {
                    ActivityModel::Markov { p00, p11 } => *(if key == "p00" { p00 } else { p11 }) = v,
                    _ => unreachable!(),
                }
            }
            "power" => s.power = parse_value(key, value)?,
            "alpha" => s.alpha = parse_value(key, value)?,
            "min_distance" => s.min_distance = parse_value(key, value)?,
            "noise" => s.noise = parse_value(key, value)?,
            "beta_db" => s.beta_db = parse_value(key, value)?,
            "beta_jam_db" => s.beta_jam_db = parse_value(key, value)?,
            "rate_discount" => s.rate_discount = parse_bool(key, value)?,
            "benchmarks" => self.benchmarks = parse_bool(key, value)?,
            _ => return Err(unknown_key(key)),
        }
        Ok(())
    }

    fn pairs(&self) -> Vec<(String, String)> {
        let t = &self.topology;
        let f = &self.superframe;
        let o = &self.options;
        let s: &SinrConfig = &o.sinr;
        let mut v: Vec<(String, String)> = vec![
            ("in_network".into(), t.in_network.to_string()),
            ("out_network".into(), t.out_network.to_string()),
            ("jammers".into(), t.jammers.to_string()),
            ("side".into(), t.side.to_string()),
            ("range".into(), t.range.to_string()),
            ("slots".into(), f.slots.to_string()),
            ("superframes".into(), f.superframes.to_string()),
            ("active_links".into(), f.active_links.to_string()),
            ("classifier".into(), self.classifier.to_string()),
            (
                "model_path".into(),
                self.model_path.as_ref().map(|p| p.display().to_string()).unwrap_or_default(),
            ),
            ("jamming".into(), on_off(o.jamming)),
            ("traffic_fusion".into(), on_off(o.traffic_fusion)),
            ("fusion_weight".into(), o.fusion_weight.to_string()),
            ("outliers".into(), on_off(o.outliers)),
            ("superposition".into(), on_off(o.superposition)),
        ];
        match self.resolved_options().activity {
            ActivityModel::Iid { p } => {
                v.push(("activity".into(), "iid".into()));
                v.push(("activity_p".into(), p.to_string()));
            }
            ActivityModel::Markov { p00, p11 } => {
                v.push(("activity".into(), "markov".into()));
                v.push(("p00".into(), p00.to_string()));
                v.push(("p11".into(), p11.to_string()));
            }
        }
        v.extend([
            ("power".into(), s.power.to_string()),
            ("alpha".into(), s.alpha.to_string()),
            ("min_distance".into(), s.min_distance.to_string()),
            ("noise".into(), s.noise.to_string()),
            ("beta_db".into(), s.beta_db.to_string()),
            ("beta_jam_db".into(), s.beta_jam_db.to_string()),
            ("rate_discount".into(), on_off(s.rate_discount)),
            ("benchmarks".into(), on_off(self.benchmarks)),
        ]);
        v
    }
}

/// Per-superframe breakdown of the distributed run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SuperframeRow {
    pub superframe: usize,
    pub packets: f64,
    pub successes: u64,
    pub attempts: u64,
    pub outnet_success: u64,
    pub outnet_total: u64,
    pub conflicts: u64,
}

pub struct SimulateReport {
    pub topology: Topology,
    pub classifier: ClassifierKind,
    pub options: SimOptions,
    pub seed: u64,
    pub distributed: Metrics,
    pub benchmark_1: Option<Metrics>,
    pub benchmark_2: Option<Metrics>,
    /// Max degree of the all-links interference graph.
    pub max_degree: usize,
}

impl SimulateReport {
    fn row(&self, scenario: &str, classifier: &str, m: &Metrics) -> MetricsRow {
        MetricsRow {
            scenario: scenario.into(),
            classifier: classifier.into(),
            jamming: self.options.jamming,
            traffic_fusion: self.options.traffic_fusion,
            outliers: self.options.outliers,
            superposition: self.options.superposition,
            seed: self.seed,
            throughput_packets: m.throughput,
            outnet_success_pct: m.outnet_success_pct(),
        }
    }

    pub fn metrics_rows(&self) -> Vec<MetricsRow> {
        let mut rows = vec![self.row("distributed", self.classifier.name(), &self.distributed)];
        if let Some(m) = &self.benchmark_1 {
            rows.push(self.row("benchmark-1", "none", m));
        }
        if let Some(m) = &self.benchmark_2 {
            rows.push(self.row("benchmark-2", "none", m));
        }
        rows
    }

    pub fn checks(&self) -> Vec<Check> {
        let mut v = vec![Check::equals("conflicting_transmissions", self.distributed.conflicts as f64, 0.0)];
        if self.classifier == ClassifierKind::Ideal {
            v.push(Check::equals("outnet_success_pct", self.distributed.outnet_success_pct(), 100.0));
        }
        if let Some(b1) = &self.benchmark_1 {
            v.push(Check::equals("benchmark_1_slots", b1.slots_per_superframe as f64, 100.0));
        }
        if let Some(b2) = &self.benchmark_2 {
            v.push(Check::at_most(
                "benchmark_2_slots",
                b2.slots_per_superframe as f64,
                (self.max_degree + 1) as f64,
            ));
            let ratio = self.distributed.throughput / b2.throughput.max(f64::MIN_POSITIVE);
            v.push(Check::at_least("distributed_over_benchmark_2", ratio, 5.0));
        }
        v
    }

    pub fn write(&self, dir: &Path) -> Result<Vec<String>> {
        tables::write_rows(&dir.join("metrics.csv"), &self.metrics_rows())?;
        let per: Vec<SuperframeRow> = self
            .distributed
            .per_superframe
            .iter()
            .map(|r| SuperframeRow {
                superframe: r.index,
                packets: r.packets,
                successes: r.successes,
                attempts: r.attempts,
                outnet_success: r.outnet_success,
                outnet_total: r.outnet_total,
                conflicts: r.conflicts,
            })
            .collect();
        tables::write_rows(&dir.join("superframes.csv"), &per)?;
        tables::write_topology(&dir.join("nodes.csv"), &dir.join("links.csv"), &self.topology)?;
        Ok(vec![
            "metrics.csv".into(),
            "superframes.csv".into(),
            "nodes.csv".into(),
            "links.csv".into(),
        ])
    }
}

/// Runs on the topology generated from `seed`.
pub fn run(cfg: &SimulateConfig, seed: u64) -> Result<SimulateReport> {
    let topo = generate_topology(&cfg.topology, seed)?;
    run_on(cfg, topo, seed)
}

pub fn run_on(cfg: &SimulateConfig, topo: Topology, seed: u64) -> Result<SimulateReport> {
    let model: Option<NeuralModel> = match (cfg.classifier, &cfg.model_path) {
        (ClassifierKind::Model, Some(p)) => Some(checkpoint::load(p)?),
        (ClassifierKind::Model, None) => {
            return Err(Error::Config("the model classifier needs model_path (or --model)".into()))
        }
        _ => None,
    };
    let classifier = match cfg.classifier {
        ClassifierKind::Ideal => Classifier::Ideal,
        ClassifierKind::Random => Classifier::Random,
        ClassifierKind::TableAll => Classifier::TableAll,
        ClassifierKind::TablePerSnr => Classifier::TablePerSnr,
        ClassifierKind::Model => Classifier::Model(model.as_ref().unwrap()),
    };
    let opts = cfg.resolved_options();
    let distributed = run_simulation(&topo, &cfg.superframe, &classifier, &opts, seed)?;
    let (benchmark_1, benchmark_2) = if cfg.benchmarks {
        (
            Some(benchmark_scheme_1(&topo, &cfg.superframe, &opts, seed)?),
            Some(benchmark_scheme_2(&topo, &cfg.superframe, &opts, seed)?),
        )
    } else {
        (None, None)
    };
    let all: Vec<usize> = (0..topo.links.len()).collect();
    let max_degree = build_interference_graph(&topo, &all).max_degree();
    Ok(SimulateReport {
        topology: topo,
        classifier: cfg.classifier,
        options: opts,
        seed,
        distributed,
        benchmark_1,
        benchmark_2,
        max_degree,
    })
}
