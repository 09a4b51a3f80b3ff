//! Independent reference implementations and random instance generators
//! shared by the integration tests.

#![allow(dead_code)]

use std::collections::{BTreeMap, BTreeSet, VecDeque};

use gnatkit_core::model::{Network, Neuron, NeuronId, NormKind, Spike, SpikeTrain, Synapse};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Random network with at most one synapse per ordered pair. Neurons
/// `0..n_exc` are excitatory; inhibitory neurons project onto excitatory ones.
pub fn random_network(rng: &mut impl Rng, n_exc: usize, n_inh: usize, p: f64) -> Network {
    let n = n_exc + n_inh;
    let neurons = (0..n)
        .map(|i| Neuron {
            x: rng.gen_range(0.0..50.0),
            y: rng.gen_range(0.0..50.0),
            excitatory: i < n_exc,
        })
        .collect();
    let mut synapses = Vec::new();
    for pre in 0..n {
        let targets = if pre < n_exc { n } else { n_exc };
        for post in 0..targets {
            if pre == post || rng.gen::<f64>() >= p {
                continue;
            }
            let (weight, delay) = if pre < n_exc {
                (rng.gen_range(0.5..10.0), rng.gen_range(1.0..20.0))
            } else {
                (-rng.gen_range(0.5..10.0), 1.0)
            };
            synapses.push(Synapse {
                pre: NeuronId(pre as u32),
                post: NeuronId(post as u32),
                weight,
                delay,
            });
        }
    }
    Network {
        width: 50.0,
        height: 50.0,
        neurons,
        synapses,
    }
}

pub fn random_train(rng: &mut impl Rng, n_neurons: usize, n_spikes: usize, duration: f64) -> SpikeTrain {
    let events = (0..n_spikes)
        .map(|_| Spike::new(rng.gen_range(0..n_neurons as u32), rng.gen_range(0.0..duration)))
        .collect();
    SpikeTrain::from_events(events, Some(duration)).unwrap()
}

/// Norm of the excitatory weights onto `post`, summed in synapse order.
pub fn reference_norm(net: &Network, post: usize, kind: NormKind) -> f64 {
    let mut acc = 0.0;
    for s in &net.synapses {
        if s.post.index() == post && net.neurons[s.pre.index()].excitatory {
            acc += match kind {
                NormKind::L1 => s.weight,
                NormKind::L2 => s.weight * s.weight,
            };
        }
    }
    match kind {
        NormKind::L1 => acc,
        NormKind::L2 => acc.sqrt(),
    }
}

/// Edge as `(pre spike, post spike, omega, synapse)`.
pub type RefEdge = (u32, u32, f64, u32);

/// Evaluates the causal score of every ordered spike pair and keeps those
/// with `-ln(omega) <= log_threshold`. No time window is applied.
pub fn brute_force_edges(train: &SpikeTrain, net: &Network, tau: f64, kind: NormKind, log_threshold: f64) -> Vec<RefEdge> {
    let n = net.neurons.len();
    let mut table = vec![None; n * n];
    for (i, s) in net.synapses.iter().enumerate() {
        table[s.pre.index() * n + s.post.index()] = Some(i);
    }
    let norms: Vec<f64> = (0..n).map(|j| reference_norm(net, j, kind)).collect();
    let spikes = train.spikes();
    let mut out = Vec::new();
    for (i, a) in spikes.iter().enumerate() {
        if !net.neurons[a.neuron.index()].excitatory {
            continue;
        }
        for (j, b) in spikes.iter().enumerate() {
            if !net.neurons[b.neuron.index()].excitatory {
                continue;
            }
            let Some(k) = table[a.neuron.index() * n + b.neuron.index()] else {
                continue;
            };
            let syn = &net.synapses[k];
            let lag = b.time - a.time - syn.delay;
            let norm = norms[b.neuron.index()];
            if lag < 0.0 || norm <= 0.0 {
                continue;
            }
            let omega = syn.weight / norm * (-lag / tau).exp();
            if omega > 0.0 && -omega.ln() <= log_threshold {
                out.push((i as u32, j as u32, omega, k as u32));
            }
        }
    }
    out.sort_by_key(|e| (e.0, e.1));
    out
}

/// Weakly connected components of the vertices touched by `edges`, each
/// sorted, listed by smallest member.
pub fn bfs_components(n: usize, edges: &[(usize, usize)]) -> Vec<Vec<usize>> {
    let mut adj = vec![Vec::new(); n];
    for &(u, v) in edges {
        adj[u].push(v);
        adj[v].push(u);
    }
    let mut seen = vec![false; n];
    let mut out = Vec::new();
    for start in 0..n {
        if seen[start] || adj[start].is_empty() {
            continue;
        }
        seen[start] = true;
        let mut comp = vec![start];
        let mut queue = VecDeque::from([start]);
        while let Some(u) = queue.pop_front() {
            for &v in &adj[u] {
                if !seen[v] {
                    seen[v] = true;
                    comp.push(v);
                    queue.push_back(v);
                }
            }
        }
        comp.sort_unstable();
        out.push(comp);
    }
    out
}

pub type PairVertex = (u32, u32);

/// Second-order edges by testing every ordered pair of same-neuron spike
/// pairs. In self mode only vertices with `spike_a < spike_b` exist.
pub fn nested_loop_second_order(
    train_a: &SpikeTrain,
    edges_a: &BTreeSet<(u32, u32)>,
    train_b: &SpikeTrain,
    edges_b: &BTreeSet<(u32, u32)>,
    self_mode: bool,
) -> BTreeSet<(PairVertex, PairVertex)> {
    let mut vertices = Vec::new();
    for (i, a) in train_a.spikes().iter().enumerate() {
        for (j, b) in train_b.spikes().iter().enumerate() {
            if a.neuron == b.neuron && (!self_mode || i < j) {
                vertices.push((i as u32, j as u32));
            }
        }
    }
    let mut out = BTreeSet::new();
    for &u in &vertices {
        for &v in &vertices {
            if edges_a.contains(&(u.0, v.0)) && edges_b.contains(&(u.1, v.1)) {
                out.insert((u, v));
            }
        }
    }
    out
}

/// Components of a vertex-keyed edge set, each sorted.
pub fn keyed_components<K: Ord + Copy>(edges: &BTreeSet<(K, K)>) -> BTreeSet<Vec<K>> {
    let keys: Vec<K> = edges
        .iter()
        .flat_map(|&(u, v)| [u, v])
        .collect::<BTreeSet<_>>()
        .into_iter()
        .collect();
    let index: BTreeMap<K, usize> = keys.iter().enumerate().map(|(i, &k)| (k, i)).collect();
    let flat: Vec<(usize, usize)> = edges.iter().map(|(u, v)| (index[u], index[v])).collect();
    bfs_components(keys.len(), &flat)
        .into_iter()
        .map(|c| c.into_iter().map(|i| keys[i]).collect())
        .collect()
}

/// Spike times of a lone regular-spiking neuron driven by a constant
/// current, integrated with two half-steps on `v` and one step on `u`.
pub fn reference_rs_spikes(current: f64, duration: f64, dt: f64) -> Vec<f64> {
    let (a, b, c, d) = (0.02, 0.2, -65.0, 8.0);
    let mut v: f64 = -65.0;
    let mut u = b * v;
    let mut out = Vec::new();
    let steps = (duration / dt).ceil() as usize;
    for k in 0..steps {
        for _ in 0..2 {
            v += 0.5 * dt * (0.04 * v * v + 5.0 * v + 140.0 - u + current);
        }
        u += dt * a * (b * v - u);
        if v >= 30.0 {
            out.push(((k + 1) as f64 * dt).min(duration));
            v = c;
            u += d;
        }
    }
    out
}

/// One synapse's weight after replaying pre arrivals and post spikes with
/// explicit sums over all earlier events of the other kind.
pub fn scripted_stdp(w0: f64, arrivals: &[f64], posts: &[f64], a_plus: f64, a_minus: f64, tau: f64, w_max: f64) -> f64 {
    let mut events: Vec<(f64, u8)> = arrivals.iter().map(|&t| (t, 0)).chain(posts.iter().map(|&t| (t, 1))).collect();
    events.sort_by(|x, y| x.0.total_cmp(&y.0).then(x.1.cmp(&y.1)));
    let mut w = w0;
    let mut seen_pre: Vec<f64> = Vec::new();
    let mut seen_post: Vec<f64> = Vec::new();
    for (t, kind) in events {
        if kind == 0 {
            let y: f64 = seen_post.iter().map(|&s| (-(t - s) / tau).exp()).sum();
            if y > 0.0 {
                w = (w - a_minus * y).clamp(0.0, w_max);
            }
            seen_pre.push(t);
        } else {
            let x: f64 = seen_pre.iter().map(|&s| (-(t - s) / tau).exp()).sum();
            if x > 0.0 {
                w = (w + a_plus * x).clamp(0.0, w_max);
            }
            seen_post.push(t);
        }
    }
    w
}

/// Copy of `train` with the spikes of every neuron given as `(neuron, time)`.
pub fn train_of(events: &[(u32, f64)], duration: f64) -> SpikeTrain {
    SpikeTrain::from_events(events.iter().map(|&(n, t)| Spike::new(n, t)).collect(), Some(duration)).unwrap()
}

/// Synthetic recording with a 20-spike causal motif repeated `copies` times.
pub struct MotifRecording {
    pub net: Network,
    pub train: SpikeTrain,
    /// For each copy, the spike id of every motif spike in motif order.
    pub instances: Vec<Vec<u32>>,
}

/// Builds a network whose first 20 neurons carry a random causal tree and
/// whose remaining excitatory neurons fire as Poisson background, then
/// replays the motif `copies` times with per-spike jitter of at most `jitter` ms.
pub fn motif_recording(seed: u64, copies: usize, jitter: f64, background_rate_hz: f64) -> MotifRecording {
    const MOTIF: usize = 20;
    const N_EXC: usize = 200;
    const N_INH: usize = 50;
    const LAG: f64 = 2.5;
    let mut r = rng(seed);
    let n = N_EXC + N_INH;
    let neurons = (0..n)
        .map(|i| Neuron {
            x: r.gen_range(0.0..50.0),
            y: r.gen_range(0.0..50.0),
            excitatory: i < N_EXC,
        })
        .collect();
    let mut synapses = Vec::new();
    let mut pairs = BTreeSet::new();
    let mut parent = vec![usize::MAX; MOTIF];
    let mut delay = vec![0.0; MOTIF];
    for i in 1..MOTIF {
        parent[i] = r.gen_range(0..i);
        delay[i] = r.gen_range(1.0..20.0);
        pairs.insert((parent[i], i));
        synapses.push(Synapse {
            pre: NeuronId(parent[i] as u32),
            post: NeuronId(i as u32),
            weight: 6.0,
            delay: delay[i],
        });
    }
    for post in 0..n {
        for _ in 0..4 {
            let pre = r.gen_range(MOTIF..N_EXC);
            if pre != post && pairs.insert((pre, post)) {
                synapses.push(Synapse {
                    pre: NeuronId(pre as u32),
                    post: NeuronId(post as u32),
                    weight: 6.0,
                    delay: r.gen_range(1.0..20.0),
                });
            }
        }
    }
    for pre in N_EXC..n {
        let post = r.gen_range(0..N_EXC);
        synapses.push(Synapse {
            pre: NeuronId(pre as u32),
            post: NeuronId(post as u32),
            weight: -5.0,
            delay: 1.0,
        });
    }
    let net = Network {
        width: 50.0,
        height: 50.0,
        neurons,
        synapses,
    };

    let mut template = vec![0.0; MOTIF];
    for i in 1..MOTIF {
        template[i] = template[parent[i]] + delay[i] + LAG;
    }
    let span = template.iter().cloned().fold(0.0, f64::max) + 50.0;
    let period = span.max(400.0);
    let duration = period * copies as f64;
    let mut events: Vec<(u32, f64, Option<(usize, usize)>)> = Vec::new();
    for c in 0..copies {
        let base = c as f64 * period + 10.0;
        for (i, &t) in template.iter().enumerate() {
            events.push((i as u32, base + t + r.gen_range(-jitter..=jitter), Some((c, i))));
        }
    }
    let mut background: Vec<usize> = (0..N_EXC).collect();
    background.shuffle(&mut r);
    for &neuron in &background {
        let mut t = 0.0;
        loop {
            t += -(1.0 - r.gen::<f64>()).ln() / (background_rate_hz / 1000.0);
            if t >= duration {
                break;
            }
            events.push((neuron as u32, t, None));
        }
    }
    events.sort_by(|a, b| a.1.total_cmp(&b.1).then(a.0.cmp(&b.0)));
    let mut instances = vec![vec![0u32; MOTIF]; copies];
    for (id, e) in events.iter().enumerate() {
        if let Some((c, i)) = e.2 {
            instances[c][i] = id as u32;
        }
    }
    let train = SpikeTrain::from_events(events.iter().map(|e| Spike::new(e.0, e.1)).collect(), Some(duration)).unwrap();
    for (id, (_, s)) in train.iter().enumerate() {
        assert_eq!((s.neuron.0, s.time), (events[id].0, events[id].1), "train keeps the constructed order");
    }
    MotifRecording { net, train, instances }
}
