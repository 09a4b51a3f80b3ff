mod common;

use std::collections::BTreeSet;
use std::sync::Arc;

use gnatkit_core::analogs::{build_second_order_graph, build_second_order_graph_quadtree};
use gnatkit_core::causal::{build_activity_graph, neg_log_omega_histogram, OmegaConfig};
use gnatkit_core::io;
use gnatkit_core::model::{incoming_norm, Network, NeuronId, NormKind, Spike, SpikeTrain};
use gnatkit_core::threads::extract_gnats;
use gnatkit_core::Execution;
use proptest::prelude::*;
use rand::seq::SliceRandom;

use common::*;

const N_EXC: usize = 12;
const N_INH: usize = 3;

fn network(seed: u64) -> Network {
    random_network(&mut rng(seed), N_EXC, N_INH, 0.35)
}

fn events() -> impl Strategy<Value = Vec<(u32, f64)>> {
    prop::collection::vec((0..(N_EXC + N_INH) as u32, 0.0..500.0f64), 0..250)
}

fn train(events: &[(u32, f64)]) -> Arc<SpikeTrain> {
    Arc::new(train_of(events, 500.0))
}

fn omega() -> impl Strategy<Value = OmegaConfig> {
    (1.0..15.0f64, prop::bool::ANY, 1.0..9.0f64).prop_map(|(tau, l2, log_threshold)| OmegaConfig {
        tau,
        norm_kind: if l2 { NormKind::L2 } else { NormKind::L1 },
        log_threshold,
        window_multiplier: None,
    })
}

fn edge_keys(net: &Network, train: Arc<SpikeTrain>, cfg: &OmegaConfig) -> BTreeSet<(u32, u32)> {
    build_activity_graph(train, net, cfg, Execution::Sequential)
        .unwrap()
        .edges()
        .iter()
        .map(|e| (e.pre.0, e.post.0))
        .collect()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn windowed_join_equals_brute_force(seed in 0u64..1000, ev in events(), cfg in omega()) {
        let net = network(seed);
        let t = train(&ev);
        let g = build_activity_graph(t.clone(), &net, &cfg, Execution::default()).unwrap();
        let want = brute_force_edges(&t, &net, cfg.tau, cfg.norm_kind, cfg.log_threshold);
        let got: Vec<(u32, u32, u32)> = g.edges().iter().map(|e| (e.pre.0, e.post.0, e.synapse)).collect();
        let want_keys: Vec<(u32, u32, u32)> = want.iter().map(|e| (e.0, e.1, e.3)).collect();
        prop_assert_eq!(got, want_keys);
    }

    #[test]
    fn graph_is_acyclic_and_respects_delays(seed in 0u64..1000, ev in events(), cfg in omega()) {
        let net = network(seed);
        let g = build_activity_graph(train(&ev), &net, &cfg, Execution::default()).unwrap();
        prop_assert!(g.topological_order().is_some());
        for e in g.edges() {
            let syn = &net.synapses[e.synapse as usize];
            prop_assert_eq!((syn.pre, syn.post), (g.train().neuron(e.pre), g.train().neuron(e.post)));
            prop_assert!(g.train().time(e.post) - g.train().time(e.pre) >= syn.delay);
        }
    }

    #[test]
    fn scaling_excitatory_weights_cancels_in_the_norm(seed in 0u64..1000, ev in events(), cfg in omega(), c in 0.1..10.0f64) {
        let net = network(seed);
        let scaled = net.with_weights(
            &net.synapses.iter().map(|s| if s.weight > 0.0 { s.weight * c } else { s.weight }).collect::<Vec<_>>(),
        );
        let t = train(&ev);
        let a = build_activity_graph(t.clone(), &net, &cfg, Execution::Sequential).unwrap();
        let b = build_activity_graph(t, &scaled, &cfg, Execution::Sequential).unwrap();
        prop_assert_eq!(a.edge_count(), b.edge_count());
        for (x, y) in a.edges().iter().zip(b.edges()) {
            prop_assert_eq!((x.pre, x.post), (y.pre, y.post));
            prop_assert!((x.omega - y.omega).abs() <= 1e-12 * x.omega);
        }
    }

    #[test]
    fn edges_grow_with_the_threshold(seed in 0u64..1000, ev in events(), cfg in omega(), extra in 0.0..4.0f64) {
        let net = network(seed);
        let t = train(&ev);
        let loose = OmegaConfig { log_threshold: cfg.log_threshold + extra, ..cfg };
        let tight = edge_keys(&net, t.clone(), &cfg);
        let wide = edge_keys(&net, t, &loose);
        prop_assert!(tight.is_subset(&wide));
    }

    #[test]
    fn resorting_a_train_is_idempotent(ev in events()) {
        let t = train(&ev);
        let mut shuffled = t.spikes().to_vec();
        shuffled.reverse();
        let again = SpikeTrain::from_events(shuffled, Some(t.duration())).unwrap();
        prop_assert_eq!(&again, t.as_ref());
        for w in t.spikes().windows(2) {
            prop_assert!((w[0].time, w[0].neuron) <= (w[1].time, w[1].neuron));
        }
    }

    #[test]
    fn incoming_norm_ignores_synapse_order(seed in 0u64..1000) {
        let net = network(seed);
        let mut permuted = net.clone();
        permuted.synapses.shuffle(&mut rng(seed ^ 0x5eed));
        for j in 0..net.len() {
            for kind in [NormKind::L1, NormKind::L2] {
                let a = incoming_norm(&net, NeuronId(j as u32), kind);
                let b = incoming_norm(&permuted, NeuronId(j as u32), kind);
                prop_assert!((a - b).abs() <= 1e-12 * a.max(1.0));
            }
        }
    }

    #[test]
    fn quadtree_and_synapse_join_agree(seed in 0u64..1000, ev_a in events(), ev_b in events(), self_mode in prop::bool::ANY) {
        let net = network(seed);
        let cfg = OmegaConfig { log_threshold: 6.0, ..OmegaConfig::default() };
        let a = build_activity_graph(train(&ev_a), &net, &cfg, Execution::Sequential).unwrap();
        let b = build_activity_graph(train(&ev_b), &net, &cfg, Execution::Sequential).unwrap();
        let join = build_second_order_graph(&a, &b, self_mode, Execution::Sequential).unwrap();
        let quad = build_second_order_graph_quadtree(&a, &b, self_mode).unwrap();
        let key = |g: &gnatkit_core::analogs::SecondOrderGraph| -> BTreeSet<_> {
            g.edge_pairs().map(|(u, v)| ((u.spike_a, u.spike_b), (v.spike_a, v.spike_b))).collect()
        };
        prop_assert_eq!(key(&join), key(&quad));
    }

    #[test]
    fn parallel_and_sequential_agree(seed in 0u64..1000, ev in events(), cfg in omega()) {
        let net = network(seed);
        let t = train(&ev);
        let a = build_activity_graph(t.clone(), &net, &cfg, Execution::Sequential).unwrap();
        let b = build_activity_graph(t.clone(), &net, &cfg, Execution::Parallel).unwrap();
        prop_assert_eq!(a.edges(), b.edges());
        let ha = neg_log_omega_histogram(&t, &net, &cfg, 0.1, Execution::Sequential).unwrap();
        let hb = neg_log_omega_histogram(&t, &net, &cfg, 0.1, Execution::Parallel).unwrap();
        prop_assert_eq!(ha, hb);
        let sa = build_second_order_graph(&a, &a, true, Execution::Sequential).unwrap();
        let sb = build_second_order_graph(&b, &b, true, Execution::Parallel).unwrap();
        prop_assert_eq!(sa.edges(), sb.edges());
        prop_assert_eq!(sa.vertices(), sb.vertices());
    }

    #[test]
    fn thread_partition_covers_every_excitatory_spike(seed in 0u64..1000, ev in events(), cfg in omega()) {
        let net = network(seed);
        let g = build_activity_graph(train(&ev), &net, &cfg, Execution::Sequential).unwrap();
        let d = extract_gnats(&g);
        let mut seen = BTreeSet::new();
        for t in &d.gnats {
            prop_assert!(t.size() >= 2 && t.t_start <= t.t_end);
            for &s in &t.spikes {
                prop_assert!(seen.insert(s));
            }
        }
        for &s in &d.isolated {
            prop_assert!(seen.insert(s));
        }
        prop_assert_eq!(seen.len(), g.vertex_count());
        for e in g.edges() {
            prop_assert_eq!(d.gnat_of(e.pre), d.gnat_of(e.post));
        }
        prop_assert_eq!(extract_gnats(&g), d);
    }

    #[test]
    fn artifacts_round_trip(seed in 0u64..1000, ev in events(), cfg in omega()) {
        let net = network(seed);
        let t = train(&ev);
        let mut buf = Vec::new();
        io::write_spikes(&mut buf, &t).unwrap();
        let t2 = io::read_spikes(buf.as_slice(), Some(t.duration())).unwrap();
        prop_assert_eq!(&t2, t.as_ref());

        let mut buf = Vec::new();
        io::write_network(&mut buf, &net).unwrap();
        prop_assert_eq!(io::read_network(buf.as_slice()).unwrap(), net.clone());

        let g = build_activity_graph(t.clone(), &net, &cfg, Execution::Sequential).unwrap();
        let mut buf = Vec::new();
        io::write_edges(&mut buf, &g).unwrap();
        let g2 = io::read_edges(buf.as_slice(), t.clone(), &net).unwrap();
        prop_assert_eq!(g.edges(), g2.edges());

        let d = extract_gnats(&g);
        let mut buf = Vec::new();
        io::write_membership(&mut buf, &d.membership).unwrap();
        prop_assert_eq!(io::read_membership(buf.as_slice()).unwrap(), d.membership.clone());
    }
}

#[test]
fn spike_new_is_plain_data() {
    let s = Spike::new(3, 1.5);
    assert_eq!((s.neuron, s.time), (NeuronId(3), 1.5));
}
