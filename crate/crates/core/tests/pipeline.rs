use rfdsa_core::dsa::{
    benchmark_scheme_1, benchmark_scheme_2, build_interference_graph, generate_topology, run_simulation, Classifier,
    SimOptions, SuperframeConfig, TopologyConfig,
};
use rfdsa_core::rng;
use rfdsa_core::separation::{matched_correlations, separate, IcaConfig};
use rfdsa_core::sigsynth::{superimpose, synth_clean, ModulationKind};

fn short() -> SuperframeConfig {
    SuperframeConfig {
        superframes: 60,
        ..SuperframeConfig::default()
    }
}

#[test]
fn distributed_schedule_is_conflict_free_and_repeatable() {
    let topo = generate_topology(&TopologyConfig::default(), 3).unwrap();
    let opts = SimOptions::default();
    for c in [Classifier::Ideal, Classifier::TableAll, Classifier::Random] {
        let a = run_simulation(&topo, &short(), &c, &opts, 3).unwrap();
        let b = run_simulation(&topo, &short(), &c, &opts, 3).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.conflicts, 0, "{}", c.name());
        assert_eq!(a.per_superframe.len(), 60);
    }
    let ideal = run_simulation(&topo, &short(), &Classifier::Ideal, &opts, 3).unwrap();
    assert_eq!(ideal.outnet_success_pct(), 100.0);
}

#[test]
fn benchmarks_use_expected_frame_lengths() {
    let topo = generate_topology(&TopologyConfig::default(), 4).unwrap();
    let opts = SimOptions::default();
    let all: Vec<usize> = (0..topo.links.len()).collect();
    let d = build_interference_graph(&topo, &all).max_degree();
    let b1 = benchmark_scheme_1(&topo, &short(), &opts, 4).unwrap();
    let b2 = benchmark_scheme_2(&topo, &short(), &opts, 4).unwrap();
    assert_eq!(b1.slots_per_superframe, 100);
    assert_eq!(b2.slots_per_superframe, d + 1);
    let dist = run_simulation(&topo, &short(), &Classifier::Ideal, &opts, 4).unwrap();
    assert!(dist.throughput > b2.throughput);
    assert!(b2.throughput > b1.throughput);
}

#[test]
fn turning_jammers_off_helps() {
    let topo = generate_topology(&TopologyConfig::default(), 5).unwrap();
    let on = SimOptions::default();
    let off = SimOptions {
        jamming: false,
        ..SimOptions::default()
    };
    let a = run_simulation(&topo, &short(), &Classifier::Ideal, &on, 5).unwrap();
    let b = run_simulation(&topo, &short(), &Classifier::Ideal, &off, 5).unwrap();
    assert!(b.throughput > a.throughput);
}

#[test]
fn ica_recovers_pam_and_fsk_sources() {
    let mut r = rng::stream(9, &[]);
    let mut total = 0.0;
    for _ in 0..20 {
        let a = synth_clean(ModulationKind::Pam4, &mut r);
        let b = synth_clean(ModulationKind::Gfsk, &mut r);
        let (o1, o2) = superimpose(&a, &b, [[0.8, 0.3], [0.4, 0.9]]).unwrap();
        let sep = separate(&[o1.stacked(), o2.stacked()], &IcaConfig::default()).unwrap();
        let c = matched_correlations(&sep.sources, &[a.stacked(), b.stacked()]);
        total += c[0] + c[1];
    }
    // Single draws can land lower; the requirement is on the average.
    assert!(total / 40.0 >= 0.95, "{}", total / 40.0);
}
