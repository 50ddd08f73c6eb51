use proptest::prelude::*;
use rfdsa_core::dsa::{build_interference_graph, generate_topology, greedy_coloring, TopologyConfig};
use rfdsa_core::linalg::Matrix;
use rfdsa_core::outlier::{kmeans_fit, mahalanobis, KMeansConfig, McdModel};
use rfdsa_core::rng;
use rfdsa_core::sigsynth::{apply_awgn, rotate_frame, superimpose, synth_clean, ModulationKind, FRAME_LEN};
use rfdsa_core::traffic::{fuse, FusionInput, MarkovProfile};

fn modulation() -> impl Strategy<Value = ModulationKind> {
    (0..ModulationKind::ALL.len()).prop_map(|i| ModulationKind::ALL[i])
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn clean_frames_have_unit_power(m in modulation(), seed in any::<u64>()) {
        let f = synth_clean(m, &mut rng::stream(seed, &[1]));
        prop_assert_eq!(f.samples().len(), FRAME_LEN);
        prop_assert!((f.power() - 1.0).abs() < 1e-9);
    }

    #[test]
    fn rotation_keeps_power(m in modulation(), seed in any::<u64>(), theta in -7.0f64..7.0) {
        let f = synth_clean(m, &mut rng::stream(seed, &[2]));
        let g = rotate_frame(&f, theta);
        prop_assert!((g.power() - f.power()).abs() < 1e-9);
        let back = rotate_frame(&g, -theta);
        for (a, b) in back.samples().iter().zip(f.samples()) {
            prop_assert!((a - b).norm() < 1e-9);
        }
    }

    #[test]
    fn noise_lowers_nothing_but_adds_power(m in modulation(), seed in any::<u64>(), snr in 0.0f64..20.0) {
        let mut r = rng::stream(seed, &[3]);
        let f = synth_clean(m, &mut r);
        let n = apply_awgn(&f, snr, &mut r);
        // Expected power 1 + 10^(-snr/10); allow generous sampling spread.
        let expect = 1.0 + 10f64.powf(-snr / 10.0);
        prop_assert!((n.power() - expect).abs() < 0.35 * expect);
    }

    #[test]
    fn mixing_is_linear(seed in any::<u64>(), a in 0.1f64..1.0, b in 0.1f64..1.0) {
        let mut r = rng::stream(seed, &[4]);
        let x = synth_clean(ModulationKind::Qpsk, &mut r);
        let y = synth_clean(ModulationKind::Gfsk, &mut r);
        let (o1, _) = superimpose(&x, &y, [[a, b], [b, -a]]).unwrap();
        for k in 0..FRAME_LEN {
            let want = x.samples()[k] * a + y.samples()[k] * b;
            prop_assert!((o1.samples()[k] - want).norm() < 1e-12);
        }
    }

    #[test]
    fn mahalanobis_ignores_translation(shift in prop::collection::vec(-50.0f64..50.0, 3), x in prop::collection::vec(-5.0f64..5.0, 3)) {
        let cov = Matrix::from_rows(&[vec![2.0, 0.3, 0.0], vec![0.3, 1.0, 0.1], vec![0.0, 0.1, 0.5]]);
        let base = McdModel::from_parts(vec![0.0; 3], cov.clone()).unwrap();
        let moved = McdModel::from_parts(shift.clone(), cov).unwrap();
        let xs: Vec<f64> = x.iter().zip(&shift).map(|(a, s)| a + s).collect();
        let d0 = mahalanobis(&base, &x).unwrap();
        let d1 = mahalanobis(&moved, &xs).unwrap();
        prop_assert!((d0 - d1).abs() < 1e-9 * (1.0 + d0));
    }

    #[test]
    fn markov_rows_are_distributions(states in prop::collection::vec(0u8..2, 0..200)) {
        let mut p = MarkovProfile::new();
        for s in &states {
            p.observe(*s);
        }
        for i in 0..2 {
            let total = p.transition_prob(i, 0) + p.transition_prob(i, 1);
            prop_assert!((total - 1.0).abs() < 1e-12);
        }
        prop_assert_eq!(p.total(), 4 + states.len().saturating_sub(1) as u64);
    }

    #[test]
    fn agreeing_decisions_pass_through(s in 0u8..2, ct in 0.5f64..1.0, cd in 0.5f64..1.0, w in 0.0f64..1.0) {
        let f = fuse(&FusionInput { traffic_state: s, traffic_conf: ct, deep_state: s, deep_conf: cd, weight: w });
        prop_assert_eq!(f.state, s);
    }

    #[test]
    fn coloring_is_proper(seed in 0u64..500) {
        let t = generate_topology(&TopologyConfig { in_network: 40, ..TopologyConfig::default() }, seed).unwrap();
        let all: Vec<usize> = (0..t.links.len()).collect();
        let g = build_interference_graph(&t, &all);
        let c = greedy_coloring(&g);
        for v in 0..g.len() {
            prop_assert!(c[v] <= g.max_degree());
            for &u in g.neighbors(v) {
                prop_assert_ne!(c[u], c[v]);
            }
        }
    }

    #[test]
    fn kmeans_separates_far_blobs(seed in 0u64..200, gap in 20.0f64..100.0) {
        let mut r = rng::stream(seed, &[5]);
        let mut pts: Vec<Vec<f64>> = (0..40).map(|_| vec![rng::normal(&mut r), rng::normal(&mut r)]).collect();
        pts.extend((0..40).map(|_| vec![gap + rng::normal(&mut r), rng::normal(&mut r)]));
        let m = kmeans_fit(&pts, &KMeansConfig { seed, ..KMeansConfig::default() }).unwrap();
        let first = m.assign(&pts[0]).unwrap();
        for (i, p) in pts.iter().enumerate() {
            prop_assert_eq!(m.assign(p).unwrap() == first, i < 40);
        }
    }
}
