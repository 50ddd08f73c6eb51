use alloc::vec;
use alloc::vec::Vec;

use rand::Rng as _;

use super::{
    build_interference_graph, evaluate_slot, greedy_coloring, make_request, make_response, resolve_transmission,
    sense_channel, ChannelStatus, Classifier, DsaError, InterferenceGraph, Request, RequestType, Response, SensingTruth,
    SinrConfig, Topology, Transmission,
};
use crate::rng::{self, tag};
use crate::sigsynth::SignalClass;
use crate::traffic::{self, FusionInput, MarkovProfile};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SuperframeConfig {
    /// Data slots per superframe.
    pub slots: usize,
    pub superframes: usize,
    /// Links drawn at random to be active in each superframe.
    pub active_links: usize,
}

impl Default for SuperframeConfig {
    fn default() -> Self {
        Self {
            slots: 10,
            superframes: 1000,
            active_links: 10,
        }
    }
}

impl SuperframeConfig {
    pub fn validate(&self, topo: &Topology) -> Result<(), DsaError> {
        if self.slots == 0 {
            return Err(DsaError::BadConfig("a superframe needs at least one data slot"));
        }
        if self.active_links > topo.links.len() {
            return Err(DsaError::BadConfig("more active links than links in the topology"));
        }
        Ok(())
    }
}

/// Per-superframe on/off process of jammers and out-network users.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ActivityModel {
    /// Active independently with probability `p`.
    Iid { p: f64 },
    /// Two-state chain with stay probabilities for off (`p00`) and on (`p11`).
    Markov { p00: f64, p11: f64 },
}

impl Default for ActivityModel {
    fn default() -> Self {
        ActivityModel::Iid { p: 0.5 }
    }
}

impl ActivityModel {
    fn validate(&self) -> Result<(), DsaError> {
        let ok = |p: f64| (0.0..=1.0).contains(&p);
        let valid = match *self {
            ActivityModel::Iid { p } => ok(p),
            ActivityModel::Markov { p00, p11 } => ok(p00) && ok(p11),
        };
        if valid {
            Ok(())
        } else {
            Err(DsaError::BadConfig("activity probabilities must lie in [0, 1]"))
        }
    }

    fn next(&self, prev: Option<bool>, r: &mut rng::Rng) -> bool {
        let u: f64 = r.random();
        match (*self, prev) {
            (ActivityModel::Iid { p }, _) => u < p,
            (ActivityModel::Markov { .. }, None) => u < 0.5,
            (ActivityModel::Markov { p11, .. }, Some(true)) => u < p11,
            (ActivityModel::Markov { p00, .. }, Some(false)) => u >= p00,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimOptions {
    pub jamming: bool,
    pub traffic_fusion: bool,
    /// Weight on the traffic profile when fusing.
    pub fusion_weight: f64,
    pub outliers: bool,
    pub superposition: bool,
    pub activity: ActivityModel,
    pub sinr: SinrConfig,
}

impl Default for SimOptions {
    fn default() -> Self {
        Self {
            jamming: true,
            traffic_fusion: false,
            fusion_weight: 0.2,
            outliers: false,
            superposition: false,
            activity: ActivityModel::default(),
            sinr: SinrConfig::default(),
        }
    }
}

impl SimOptions {
    pub fn validate(&self) -> Result<(), DsaError> {
        if !(0.0..=1.0).contains(&self.fusion_weight) {
            return Err(DsaError::BadConfig("fusion weight must lie in [0, 1]"));
        }
        self.activity.validate()?;
        self.sinr.validate()
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct SuperframeRecord {
    pub index: usize,
    /// Credited packets (1 per success, less for discounted adapted slots).
    pub packets: f64,
    pub successes: u64,
    pub attempts: u64,
    pub outnet_success: u64,
    pub outnet_total: u64,
    pub conflicts: u64,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct Metrics {
    /// Packets scaled to a superframe of `slots` data slots, so schemes with
    /// longer frames are charged for the extra airtime.
    pub throughput: f64,
    pub packets: f64,
    pub successes: u64,
    pub attempts: u64,
    pub outnet_success: u64,
    pub outnet_total: u64,
    /// Slot-level pairs of concurrently transmitting links that conflict in
    /// the interference graph.
    pub conflicts: u64,
    /// Data slots per superframe the scheme used.
    pub slots_per_superframe: usize,
    pub per_superframe: Vec<SuperframeRecord>,
}

impl Metrics {
    /// Out-network success ratio in percent; 100 when nobody transmitted.
    pub fn outnet_success_pct(&self) -> f64 {
        if self.outnet_total == 0 {
            100.0
        } else {
            100.0 * self.outnet_success as f64 / self.outnet_total as f64
        }
    }

    fn push(&mut self, rec: SuperframeRecord) {
        self.packets += rec.packets;
        self.successes += rec.successes;
        self.attempts += rec.attempts;
        self.outnet_success += rec.outnet_success;
        self.outnet_total += rec.outnet_total;
        self.conflicts += rec.conflicts;
        self.per_superframe.push(rec);
    }

    fn finish(mut self, slots: usize, used: usize) -> Self {
        self.slots_per_superframe = used;
        self.throughput = self.packets * slots as f64 / used as f64;
        self
    }
}

/// Who is on the air in one superframe.
struct Activity {
    links: Vec<usize>,
    jammers: Vec<usize>,
    outnet: Vec<usize>,
}

/// Draws active links and emitter activity superframe by superframe from
/// dedicated sub-streams, so every scheme sees the same scenario.
struct ScenarioStream<'a> {
    topo: &'a Topology,
    cfg: &'a SuperframeConfig,
    activity: ActivityModel,
    jamming: bool,
    links_rng: rng::Rng,
    jam_rng: rng::Rng,
    out_rng: rng::Rng,
    jam_state: Vec<Option<bool>>,
    out_state: Vec<Option<bool>>,
}

impl<'a> ScenarioStream<'a> {
    fn new(topo: &'a Topology, cfg: &'a SuperframeConfig, opts: &SimOptions, seed: u64) -> Self {
        Self {
            topo,
            cfg,
            activity: opts.activity,
            jamming: opts.jamming,
            links_rng: rng::stream(seed, &[tag::LINKS]),
            jam_rng: rng::stream(seed, &[tag::JAMMER_ACTIVITY]),
            out_rng: rng::stream(seed, &[tag::OUTNET_ACTIVITY]),
            jam_state: vec![None; topo.jammers().len()],
            out_state: vec![None; topo.out_network().len()],
        }
    }

    fn step(states: &mut [Option<bool>], ids: &[usize], model: ActivityModel, r: &mut rng::Rng) -> Vec<usize> {
        let mut on = Vec::new();
        for (s, &id) in states.iter_mut().zip(ids) {
            let next = model.next(*s, r);
            *s = Some(next);
            if next {
                on.push(id);
            }
        }
        on
    }

    fn next(&mut self) -> Activity {
        let mut links =
            rand::seq::index::sample(&mut self.links_rng, self.topo.links.len(), self.cfg.active_links).into_vec();
        links.sort_unstable();
        let jammers = Self::step(&mut self.jam_state, &self.topo.jammers(), self.activity, &mut self.jam_rng);
        let outnet = Self::step(&mut self.out_state, &self.topo.out_network(), self.activity, &mut self.out_rng);
        Activity {
            links,
            jammers: if self.jamming { jammers } else { Vec::new() },
            outnet,
        }
    }
}

fn count_conflicts(graph: &InterferenceGraph, txs: &[Transmission]) -> u64 {
    let mut n = 0;
    for (i, a) in txs.iter().enumerate() {
        for b in &txs[i + 1..] {
            n += graph.has_edge(a.link, b.link) as u64;
        }
    }
    n
}

/// Evaluates one slot and folds it into the superframe record.
fn account_slot(
    topo: &Topology,
    opts: &SimOptions,
    graph: &InterferenceGraph,
    txs: &[Transmission],
    act: &Activity,
    rec: &mut SuperframeRecord,
) {
    let out = evaluate_slot(topo, &opts.sinr, txs, &act.jammers, &act.outnet);
    for (tx, &(_, ok, _)) in txs.iter().zip(&out.links) {
        rec.attempts += 1;
        if ok {
            rec.successes += 1;
            rec.packets += opts.sinr.credit(tx.adapted);
        }
    }
    rec.outnet_total += out.outnet.len() as u64;
    rec.outnet_success += out.outnet.iter().filter(|o| o.1).count() as u64;
    rec.conflicts += count_conflicts(graph, txs);
}

fn all_links_graph(topo: &Topology) -> InterferenceGraph {
    let all: Vec<usize> = (0..topo.links.len()).collect();
    build_interference_graph(topo, &all)
}

/// Final status after optional traffic-profile fusion; the profile then
/// records the final busy/idle state.
fn apply_fusion(status: ChannelStatus, profile: &mut MarkovProfile, weight: f64) -> ChannelStatus {
    let deep_state = traffic::state_of(status.class);
    let (_, deep_conf) = traffic::deep_decision(&status.scores);
    let state = match profile.last_state() {
        Some(prev) => {
            let (traffic_state, traffic_conf) = profile.predict(prev);
            traffic::fuse(&FusionInput {
                traffic_state,
                traffic_conf,
                deep_state,
                deep_conf,
                weight,
            })
            .state
        }
        None => deep_state,
    };
    profile.observe(state);
    if state == deep_state {
        return status;
    }
    let class = traffic::fused_class(state, &status.scores);
    ChannelStatus {
        class,
        score: status.scores.get(class),
        scores: status.scores,
    }
}

/// Distributed scheduling driven by channel classification.
///
/// Each superframe: draw active links and emitter activity, let every
/// involved node sense and classify its channel, run the request/response
/// exchange among neighbors (nodes within range), then evaluate the data
/// slots. Deterministic in `seed`.
pub fn run_simulation(
    topo: &Topology,
    cfg: &SuperframeConfig,
    classifier: &Classifier<'_>,
    opts: &SimOptions,
    seed: u64,
) -> Result<Metrics, DsaError> {
    cfg.validate(topo)?;
    opts.validate()?;
    let graph = all_links_graph(topo);
    let mut scenario = ScenarioStream::new(topo, cfg, opts, seed);
    let in_net = topo.in_network();
    let mut profiles: Vec<MarkovProfile> = if opts.traffic_fusion {
        vec![MarkovProfile::new(); topo.nodes.len()]
    } else {
        Vec::new()
    };
    let mut metrics = Metrics::default();
    for f in 0..cfg.superframes {
        let act = scenario.next();
        let mut emitters: Vec<(usize, SignalClass)> = act.links.iter().map(|&l| (topo.links[l].tx, SignalClass::InNetwork)).collect();
        emitters.extend(act.jammers.iter().map(|&j| (j, SignalClass::Jammer)));
        emitters.extend(act.outnet.iter().map(|&o| (o, SignalClass::OutNetwork)));

        let mut sensing: Vec<usize> = if opts.traffic_fusion {
            in_net.clone()
        } else {
            act.links.iter().flat_map(|&l| [topo.links[l].tx, topo.links[l].rx]).collect()
        };
        sensing.sort_unstable();
        sensing.dedup();

        let mut status: Vec<Option<ChannelStatus>> = vec![None; topo.nodes.len()];
        for &n in &sensing {
            // A node does not count itself or a transmitter sending to it.
            let heard: Vec<(usize, SignalClass)> = emitters
                .iter()
                .copied()
                .filter(|&(id, _)| id != n && !act.links.iter().any(|&l| topo.links[l].tx == id && topo.links[l].rx == n))
                .collect();
            let truth = SensingTruth::at_node(topo, &opts.sinr, n, &heard);
            let mut r = rng::stream(seed, &[tag::SENSING, n as u64, f as u64]);
            let mut s = sense_channel(&truth, classifier, opts.superposition, opts.outliers, &mut r)?;
            if opts.traffic_fusion {
                s = apply_fusion(s, &mut profiles[n], opts.fusion_weight);
            }
            status[n] = Some(s);
        }

        // Requests: the receiver reports its status unless it hears an
        // out-network user, and the transmitter requests unless it does.
        let requests: Vec<(usize, Request)> = act
            .links
            .iter()
            .filter_map(|&l| {
                let link = topo.links[l];
                let rx_status = status[link.rx].expect("receiver sensed");
                let tx_status = status[link.tx].expect("transmitter sensed");
                if tx_status.class == SignalClass::OutNetwork {
                    return None;
                }
                make_request(&rx_status, link.tx, f as u64, cfg.slots, seed).map(|r| (l, r))
            })
            .collect();

        let responses: Vec<(usize, Response)> = requests
            .iter()
            .map(|(l, own)| {
                let rx = topo.links[*l].rx;
                let heard: Vec<Request> = requests
                    .iter()
                    .filter(|(_, r)| r.sender != own.sender && topo.within_range(r.sender, rx))
                    .map(|(_, r)| r.clone())
                    .collect();
                (*l, make_response(rx, &heard, own, cfg.slots))
            })
            .collect();

        let mut rec = SuperframeRecord {
            index: f,
            ..SuperframeRecord::default()
        };
        for t in 0..cfg.slots {
            let txs: Vec<Transmission> = responses
                .iter()
                .zip(&requests)
                .filter(|((l, own), _)| {
                    let tx = topo.links[*l].tx;
                    let heard: Vec<Response> = responses
                        .iter()
                        .filter(|(m, r)| m != l && topo.within_range(r.receiver, tx))
                        .map(|(_, r)| r.clone())
                        .collect();
                    resolve_transmission(tx, own, &heard, t)
                })
                .map(|((l, _), (_, req))| Transmission {
                    link: *l,
                    adapted: req.kind == RequestType::Jammer,
                })
                .collect();
            account_slot(topo, opts, &graph, &txs, &act, &mut rec);
        }
        metrics.push(rec);
    }
    Ok(metrics.finish(cfg.slots, cfg.slots))
}

/// Centralized TDMA with `slots_used` slots per superframe; each active
/// link transmits once, in slot `slot_of[link]`.
fn run_tdma(
    topo: &Topology,
    cfg: &SuperframeConfig,
    opts: &SimOptions,
    seed: u64,
    slot_of: &[usize],
    slots_used: usize,
) -> Result<Metrics, DsaError> {
    cfg.validate(topo)?;
    opts.validate()?;
    let graph = all_links_graph(topo);
    let mut scenario = ScenarioStream::new(topo, cfg, opts, seed);
    let mut metrics = Metrics::default();
    for f in 0..cfg.superframes {
        let act = scenario.next();
        let mut rec = SuperframeRecord {
            index: f,
            ..SuperframeRecord::default()
        };
        let mut by_slot: Vec<Vec<Transmission>> = vec![Vec::new(); slots_used];
        for &l in &act.links {
            by_slot[slot_of[l]].push(Transmission { link: l, adapted: false });
        }
        for txs in by_slot {
            if txs.is_empty() {
                // Nothing in-network on the air: every active out-network
                // user gets through.
                rec.outnet_total += act.outnet.len() as u64;
                rec.outnet_success += act.outnet.len() as u64;
            } else {
                account_slot(topo, opts, &graph, &txs, &act, &mut rec);
            }
        }
        metrics.push(rec);
    }
    Ok(metrics.finish(cfg.slots, slots_used))
}

/// One dedicated slot per in-network link.
pub fn benchmark_scheme_1(topo: &Topology, cfg: &SuperframeConfig, opts: &SimOptions, seed: u64) -> Result<Metrics, DsaError> {
    let slot_of: Vec<usize> = (0..topo.links.len()).collect();
    run_tdma(topo, cfg, opts, seed, &slot_of, topo.links.len().max(1))
}

/// Slots from a greedy coloring of the interference graph over all links;
/// the superframe has `D + 1` slots.
pub fn benchmark_scheme_2(topo: &Topology, cfg: &SuperframeConfig, opts: &SimOptions, seed: u64) -> Result<Metrics, DsaError> {
    let graph = all_links_graph(topo);
    let colors = greedy_coloring(&graph);
    run_tdma(topo, cfg, opts, seed, &colors, graph.max_degree() + 1)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dsa::{generate_topology, Link, Node, Role};

    fn small_cfg(superframes: usize) -> SuperframeConfig {
        SuperframeConfig {
            superframes,
            ..SuperframeConfig::default()
        }
    }

    #[test]
    fn ideal_protects_outnet_and_never_conflicts() {
        let topo = generate_topology(&Default::default(), 1).unwrap();
        let m = run_simulation(&topo, &small_cfg(200), &Classifier::Ideal, &SimOptions::default(), 9).unwrap();
        assert_eq!(m.outnet_success_pct(), 100.0);
        assert_eq!(m.conflicts, 0);
        assert!(m.successes > 0);
        assert_eq!(m.per_superframe.len(), 200);
    }

    #[test]
    fn zero_active_links_zero_throughput() {
        let topo = generate_topology(&Default::default(), 1).unwrap();
        let cfg = SuperframeConfig {
            active_links: 0,
            superframes: 20,
            ..SuperframeConfig::default()
        };
        let m = run_simulation(&topo, &cfg, &Classifier::Ideal, &SimOptions::default(), 2).unwrap();
        assert_eq!(m.throughput, 0.0);
        assert_eq!(m.outnet_success_pct(), 100.0);
    }

    #[test]
    fn deterministic_per_seed() {
        let topo = generate_topology(&Default::default(), 4).unwrap();
        let o = SimOptions {
            traffic_fusion: true,
            ..SimOptions::default()
        };
        let a = run_simulation(&topo, &small_cfg(50), &Classifier::TablePerSnr, &o, 3).unwrap();
        let b = run_simulation(&topo, &small_cfg(50), &Classifier::TablePerSnr, &o, 3).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn benchmark_slot_counts() {
        let topo = generate_topology(&Default::default(), 2).unwrap();
        let b1 = benchmark_scheme_1(&topo, &small_cfg(20), &SimOptions::default(), 1).unwrap();
        assert_eq!(b1.slots_per_superframe, 100);
        let b2 = benchmark_scheme_2(&topo, &small_cfg(20), &SimOptions::default(), 1).unwrap();
        let g = all_links_graph(&topo);
        assert_eq!(b2.slots_per_superframe, g.max_degree() + 1);
        assert!(b1.successes <= 10 * 20);
    }

    #[test]
    fn single_link_benchmark_succeeds_once_per_superframe() {
        let nodes = vec![
            Node {
                id: 0,
                role: Role::InNetwork,
                x: 0.0,
                y: 0.0,
            },
            Node {
                id: 1,
                role: Role::InNetwork,
                x: 5.0,
                y: 0.0,
            },
        ];
        let topo = Topology::from_parts(nodes, vec![Link { tx: 0, rx: 1 }, Link { tx: 1, rx: 0 }], 10.0, 50.0).unwrap();
        let cfg = SuperframeConfig {
            active_links: 1,
            superframes: 30,
            slots: 10,
        };
        let m = benchmark_scheme_1(&topo, &cfg, &SimOptions::default(), 0).unwrap();
        assert_eq!(m.successes, 30);
        assert_eq!(m.attempts, 30);
    }

    #[test]
    fn markov_activity_persists() {
        let model = ActivityModel::Markov { p00: 0.8, p11: 0.8 };
        let mut r = rng::stream(1, &[]);
        let mut prev = None;
        let (mut same, mut n) = (0, 0);
        for _ in 0..5000 {
            let s = model.next(prev, &mut r);
            if let Some(p) = prev {
                same += (p == s) as usize;
                n += 1;
            }
            prev = Some(s);
        }
        assert!((same as f64 / n as f64 - 0.8).abs() < 0.03);
    }

    #[test]
    fn bad_options_rejected() {
        let topo = generate_topology(&Default::default(), 1).unwrap();
        let o = SimOptions {
            fusion_weight: 1.5,
            ..SimOptions::default()
        };
        assert!(run_simulation(&topo, &small_cfg(1), &Classifier::Ideal, &o, 0).is_err());
        let cfg = SuperframeConfig {
            slots: 0,
            ..SuperframeConfig::default()
        };
        assert!(run_simulation(&topo, &cfg, &Classifier::Ideal, &SimOptions::default(), 0).is_err());
    }
}
