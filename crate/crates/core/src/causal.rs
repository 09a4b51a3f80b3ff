//! Causal scoring of spike pairs and the thresholded activity graph.
//!
//! A presynaptic spike at `t_pre` is scored against a postsynaptic spike at
//! `t_post` as
//!
//! ```text
//! omega = (w / |W|) * H(t_post - t_pre - delay) * exp(-(t_post - t_pre - delay) / tau)
//! ```
//!
//! where `w` is the synaptic weight, `|W|` the norm of all excitatory weights
//! onto the postsynaptic neuron and `H` the Heaviside step with `H(0) = 1`.
//! Pairs with `-ln(omega) <= log_threshold` become edges. Only spikes of
//! excitatory neurons take part.
//!
//! Construction is a windowed join: each presynaptic spike only looks at the
//! postsynaptic spikes in `[t + delay, t + delay + window]`. With the L1 norm
//! `w / |W| <= 1`, so every pair beyond `window = log_threshold * tau` fails
//! the threshold and the join is exact. With the L2 norm the window of each
//! target neuron is widened by `tau * ln(max w / |W|)`.

use std::collections::BTreeMap;
use std::fmt;
use std::sync::Arc;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exec::{self, Execution};
use crate::model::{incoming_norms, Network, NeuronId, NeuronSpikes, NormKind, Spike, SpikeId, SpikeTrain};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct OmegaConfig {
    /// Decay constant of causal influence, ms.
    pub tau: f64,
    pub norm_kind: NormKind,
    /// Edges need `-ln(omega) <= log_threshold`.
    pub log_threshold: f64,
    /// Join window in units of `tau`; defaults to `log_threshold`.
    pub window_multiplier: Option<f64>,
}

impl Default for OmegaConfig {
    fn default() -> Self {
        OmegaConfig {
            tau: 5.0,
            norm_kind: NormKind::L1,
            log_threshold: 5.0,
            window_multiplier: None,
        }
    }
}

impl OmegaConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.tau > 0.0 && self.tau.is_finite()) {
            return Err(Error::param("tau", format!("{} must be positive", self.tau)));
        }
        if !(self.log_threshold > 0.0 && self.log_threshold.is_finite()) {
            return Err(Error::param(
                "log_threshold",
                format!("{} must be positive", self.log_threshold),
            ));
        }
        if let Some(m) = self.window_multiplier {
            if !(m > 0.0 && m.is_finite()) {
                return Err(Error::param("window_multiplier", format!("{m} must be positive")));
            }
        }
        Ok(())
    }

    pub fn window_multiplier(&self) -> f64 {
        self.window_multiplier.unwrap_or(self.log_threshold)
    }

    #[inline]
    pub fn passes(&self, omega: f64) -> bool {
        omega > 0.0 && -omega.ln() <= self.log_threshold
    }
}

/// Causal score of a presynaptic spike at `t_pre` on a postsynaptic spike at `t_post`.
#[inline]
pub fn compute_omega(t_post: f64, t_pre: f64, weight: f64, norm: f64, delay: f64, tau: f64) -> f64 {
    if norm <= 0.0 {
        return 0.0;
    }
    let lag = t_post - t_pre - delay;
    if lag < 0.0 {
        return 0.0;
    }
    (weight / norm) * (-lag / tau).exp()
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ActivityEdge {
    pub pre: SpikeId,
    pub post: SpikeId,
    pub omega: f64,
    /// Index into the network's synapse list.
    pub synapse: u32,
}

/// Directed acyclic graph over the excitatory spikes of a train.
#[derive(Clone, Debug)]
pub struct ActivityGraph {
    train: Arc<SpikeTrain>,
    vertex: Vec<bool>,
    edges: Vec<ActivityEdge>,
    out_offsets: Vec<usize>,
    in_offsets: Vec<usize>,
    in_edges: Vec<u32>,
    n_neurons: usize,
    n_synapses: usize,
}

impl ActivityGraph {
    /// Assembles a graph from an edge list; edges are sorted by `(pre, post)`.
    pub fn from_edges(
        train: Arc<SpikeTrain>,
        net: &Network,
        mut edges: Vec<ActivityEdge>,
    ) -> Result<Self> {
        train.check_neurons(net.len())?;
        let vertex: Vec<bool> = train
            .spikes()
            .iter()
            .map(|s| net.is_excitatory(s.neuron))
            .collect();
        edges.sort_by_key(|e| (e.pre, e.post));
        for (i, e) in edges.iter().enumerate() {
            let ok = e.pre.index() < train.len()
                && e.post.index() < train.len()
                && vertex[e.pre.index()]
                && vertex[e.post.index()]
                && (e.synapse as usize) < net.synapses.len()
                && train.time(e.post) > train.time(e.pre)
                && (i == 0 || (edges[i - 1].pre, edges[i - 1].post) != (e.pre, e.post));
            if !ok {
                return Err(Error::param(
                    "edges",
                    format!("edge {} -> {} is not a valid causal edge", e.pre, e.post),
                ));
            }
        }
        let n = train.len();
        let mut out_offsets = vec![0usize; n + 1];
        let mut in_offsets = vec![0usize; n + 1];
        for e in &edges {
            out_offsets[e.pre.index() + 1] += 1;
            in_offsets[e.post.index() + 1] += 1;
        }
        for i in 0..n {
            out_offsets[i + 1] += out_offsets[i];
            in_offsets[i + 1] += in_offsets[i];
        }
        let mut cursor = in_offsets.clone();
        let mut in_edges = vec![0u32; edges.len()];
        for (i, e) in edges.iter().enumerate() {
            let slot = &mut cursor[e.post.index()];
            in_edges[*slot] = i as u32;
            *slot += 1;
        }
        Ok(ActivityGraph {
            train,
            vertex,
            edges,
            out_offsets,
            in_offsets,
            in_edges,
            n_neurons: net.len(),
            n_synapses: net.synapses.len(),
        })
    }

    pub fn train(&self) -> &SpikeTrain {
        &self.train
    }

    pub fn shared_train(&self) -> Arc<SpikeTrain> {
        Arc::clone(&self.train)
    }

    pub fn edges(&self) -> &[ActivityEdge] {
        &self.edges
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    /// Whether the spike belongs to an excitatory neuron.
    #[inline]
    pub fn is_vertex(&self, s: SpikeId) -> bool {
        self.vertex[s.index()]
    }

    pub fn vertices(&self) -> impl Iterator<Item = SpikeId> + '_ {
        self.vertex
            .iter()
            .enumerate()
            .filter(|(_, &v)| v)
            .map(|(i, _)| SpikeId(i as u32))
    }

    pub fn vertex_count(&self) -> usize {
        self.vertex.iter().filter(|&&v| v).count()
    }

    pub fn out_edges(&self, s: SpikeId) -> &[ActivityEdge] {
        &self.edges[self.out_offsets[s.index()]..self.out_offsets[s.index() + 1]]
    }

    pub fn in_edges(&self, s: SpikeId) -> impl Iterator<Item = &ActivityEdge> + '_ {
        self.in_edges[self.in_offsets[s.index()]..self.in_offsets[s.index() + 1]]
            .iter()
            .map(|&i| &self.edges[i as usize])
    }

    pub fn degree(&self, s: SpikeId) -> usize {
        let i = s.index();
        (self.out_offsets[i + 1] - self.out_offsets[i]) + (self.in_offsets[i + 1] - self.in_offsets[i])
    }

    pub fn contains_edge(&self, pre: SpikeId, post: SpikeId) -> bool {
        self.out_edges(pre)
            .binary_search_by_key(&post, |e| e.post)
            .is_ok()
    }

    /// Identifies the network the graph was built on, by shape.
    pub fn network_shape(&self) -> (usize, usize) {
        (self.n_neurons, self.n_synapses)
    }

    /// Kahn's algorithm; `None` if the graph had a cycle.
    pub fn topological_order(&self) -> Option<Vec<SpikeId>> {
        let n = self.train.len();
        let mut indegree: Vec<usize> = (0..n)
            .map(|i| self.in_offsets[i + 1] - self.in_offsets[i])
            .collect();
        let mut stack: Vec<SpikeId> = (0..n)
            .rev()
            .filter(|&i| indegree[i] == 0)
            .map(|i| SpikeId(i as u32))
            .collect();
        let mut order = Vec::with_capacity(n);
        while let Some(s) = stack.pop() {
            order.push(s);
            for e in self.out_edges(s) {
                let d = &mut indegree[e.post.index()];
                *d -= 1;
                if *d == 0 {
                    stack.push(e.post);
                }
            }
        }
        (order.len() == n).then_some(order)
    }
}

/// Excitatory-to-excitatory synapse as seen by the join.
#[derive(Clone, Copy, Debug)]
struct Link {
    post: NeuronId,
    ratio: f64,
    delay: f64,
    synapse: u32,
}

/// Per-network tables shared by the graph and histogram passes.
struct CausalIndex {
    links: Vec<Vec<Link>>,
    /// Join window per target neuron, ms past the delay.
    window: Vec<f64>,
}

impl CausalIndex {
    fn new(net: &Network, cfg: &OmegaConfig, window_scale: f64) -> Self {
        let norms = incoming_norms(net, cfg.norm_kind);
        let mut links = vec![Vec::new(); net.len()];
        let mut max_ratio = vec![0.0f64; net.len()];
        for (i, s) in net.synapses.iter().enumerate() {
            if !(net.is_excitatory(s.pre) && net.is_excitatory(s.post)) {
                continue;
            }
            let norm = norms[s.post.index()];
            let ratio = if norm > 0.0 { s.weight / norm } else { 0.0 };
            max_ratio[s.post.index()] = max_ratio[s.post.index()].max(ratio);
            links[s.pre.index()].push(Link {
                post: s.post,
                ratio,
                delay: s.delay,
                synapse: i as u32,
            });
        }
        let base = cfg.window_multiplier() * window_scale;
        let window = max_ratio
            .iter()
            .map(|&r| cfg.tau * (base + if r > 1.0 { r.ln() } else { 0.0 }))
            .collect();
        CausalIndex { links, window }
    }

    /// Calls `f(post spike, omega, synapse)` for every pair in the join window of `pre`.
    #[inline]
    fn visit(
        &self,
        train: &SpikeTrain,
        by_neuron: &NeuronSpikes,
        cfg: &OmegaConfig,
        pre: Spike,
        mut f: impl FnMut(SpikeId, f64, u32),
    ) {
        for link in &self.links[pre.neuron.index()] {
            if link.ratio <= 0.0 {
                continue;
            }
            let lo = pre.time + link.delay;
            let hi = lo + self.window[link.post.index()];
            for &post in by_neuron.in_window(link.post, lo, hi) {
                let lag = train.time(post) - pre.time - link.delay;
                let omega = link.ratio * (-lag / cfg.tau).exp();
                f(post, omega, link.synapse);
            }
        }
    }
}

/// Builds the thresholded activity graph with the windowed join.
pub fn build_activity_graph(
    train: Arc<SpikeTrain>,
    net: &Network,
    cfg: &OmegaConfig,
    exec: Execution,
) -> Result<ActivityGraph> {
    cfg.validate()?;
    train.check_neurons(net.len())?;
    let index = CausalIndex::new(net, cfg, 1.0);
    let by_neuron = train.by_neuron(net.len());
    let spikes = train.spikes();
    let edges = exec::flat_map_range(exec, spikes.len(), |i, out: &mut Vec<ActivityEdge>| {
        let pre = spikes[i];
        if !net.is_excitatory(pre.neuron) {
            return;
        }
        let start = out.len();
        index.visit(&train, &by_neuron, cfg, pre, |post, omega, synapse| {
            if cfg.passes(omega) {
                out.push(ActivityEdge {
                    pre: SpikeId(i as u32),
                    post,
                    omega,
                    synapse,
                });
            }
        });
        out[start..].sort_by_key(|e| e.post);
    });
    ActivityGraph::from_edges(train, net, edges)
}

/// Counts over equal-width bins starting at `first_bin * bin_width`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Histogram {
    pub bin_width: f64,
    pub first_bin: i64,
    pub counts: Vec<u64>,
}

impl Histogram {
    pub fn empty(bin_width: f64) -> Self {
        Histogram {
            bin_width,
            first_bin: 0,
            counts: Vec::new(),
        }
    }

    pub fn from_bins(bin_width: f64, bins: &BTreeMap<i64, u64>) -> Self {
        let (Some((&lo, _)), Some((&hi, _))) = (bins.first_key_value(), bins.last_key_value()) else {
            return Histogram::empty(bin_width);
        };
        let mut counts = vec![0u64; (hi - lo + 1) as usize];
        for (&b, &c) in bins {
            counts[(b - lo) as usize] = c;
        }
        Histogram {
            bin_width,
            first_bin: lo,
            counts,
        }
    }

    pub fn is_empty(&self) -> bool {
        self.counts.is_empty()
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().sum()
    }

    pub fn bin_left(&self, i: usize) -> f64 {
        (self.first_bin + i as i64) as f64 * self.bin_width
    }

    pub fn bin_center(&self, i: usize) -> f64 {
        self.bin_left(i) + 0.5 * self.bin_width
    }

    pub fn bin_of(&self, x: f64) -> i64 {
        (x / self.bin_width).floor() as i64
    }

    /// `(bin_left, count)` rows.
    pub fn rows(&self) -> impl Iterator<Item = (f64, u64)> + '_ {
        self.counts
            .iter()
            .enumerate()
            .map(|(i, &c)| (self.bin_left(i), c))
    }
}

/// Distribution of `-ln(omega)` over connected excitatory spike pairs.
#[derive(Clone, Debug, PartialEq)]
pub struct NegLogOmega {
    pub histogram: Histogram,
    /// Window-admissible connected pairs with `omega > 0`.
    pub pairs: u64,
    /// Of those, pairs with `-ln(omega) <= log_threshold`.
    pub below_threshold: u64,
}

impl NegLogOmega {
    pub fn fraction_below(&self) -> f64 {
        if self.pairs == 0 {
            0.0
        } else {
            self.below_threshold as f64 / self.pairs as f64
        }
    }
}

/// Histogram of `-ln(omega)` for all connected excitatory pairs whose lag lies
/// within three join windows, so the flat tail is visible.
pub fn neg_log_omega_histogram(
    train: &SpikeTrain,
    net: &Network,
    cfg: &OmegaConfig,
    bin_width: f64,
    exec: Execution,
) -> Result<NegLogOmega> {
    cfg.validate()?;
    if !(bin_width > 0.0 && bin_width.is_finite()) {
        return Err(Error::param("bin_width", format!("{bin_width} must be positive")));
    }
    train.check_neurons(net.len())?;
    let index = CausalIndex::new(net, cfg, 3.0);
    let by_neuron = train.by_neuron(net.len());
    let spikes = train.spikes();
    const CHUNK: usize = 4096;
    let partial = exec::map_range(exec, spikes.len().div_ceil(CHUNK), |c| {
        let mut bins: BTreeMap<i64, u64> = BTreeMap::new();
        let mut pairs = 0u64;
        let mut below = 0u64;
        for pre in &spikes[c * CHUNK..((c + 1) * CHUNK).min(spikes.len())] {
            if !net.is_excitatory(pre.neuron) {
                continue;
            }
            index.visit(train, &by_neuron, cfg, *pre, |_, omega, _| {
                if omega <= 0.0 {
                    return;
                }
                let x = -omega.ln();
                *bins.entry((x / bin_width).floor() as i64).or_default() += 1;
                pairs += 1;
                if x <= cfg.log_threshold {
                    below += 1;
                }
            });
        }
        (bins, pairs, below)
    });
    let mut bins = BTreeMap::new();
    let (mut pairs, mut below) = (0, 0);
    for (b, p, l) in partial {
        for (k, v) in b {
            *bins.entry(k).or_default() += v;
        }
        pairs += p;
        below += l;
    }
    Ok(NegLogOmega {
        histogram: Histogram::from_bins(bin_width, &bins),
        pairs,
        below_threshold: below,
    })
}

/// Value substituted when no knee can be found.
pub const DEFAULT_LOG_THRESHOLD: f64 = 5.0;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ThresholdChoice {
    pub value: f64,
    /// True when no local minimum followed the peak.
    pub fallback: bool,
}

/// Centered moving average; windows are truncated at the edges.
pub fn moving_average(counts: &[u64], width: usize) -> Vec<f64> {
    let half = width / 2;
    (0..counts.len())
        .map(|i| {
            let lo = i.saturating_sub(half);
            let hi = (i + half + 1).min(counts.len());
            counts[lo..hi].iter().sum::<u64>() as f64 / (hi - lo) as f64
        })
        .collect()
}

/// Locates the transition between the low `-ln(omega)` peak and the flat
/// part: the first local minimum of the 5-bin moving average after its
/// global maximum, reported at the bin center.
pub fn select_threshold(hist: &Histogram) -> ThresholdChoice {
    let smooth = moving_average(&hist.counts, 5);
    let fallback = ThresholdChoice {
        value: DEFAULT_LOG_THRESHOLD,
        fallback: true,
    };
    let Some(peak) = smooth
        .iter()
        .enumerate()
        .fold(None::<(usize, f64)>, |best, (i, &v)| match best {
            Some((_, b)) if b >= v => best,
            _ => Some((i, v)),
        })
        .map(|(i, _)| i)
    else {
        log::warn!("empty -ln(omega) histogram; using threshold {DEFAULT_LOG_THRESHOLD}");
        return fallback;
    };
    for i in peak + 1..smooth.len().saturating_sub(1) {
        if smooth[i] <= smooth[i - 1] && smooth[i] < smooth[i + 1] {
            return ThresholdChoice {
                value: hist.bin_center(i),
                fallback: false,
            };
        }
    }
    log::warn!("no knee after the -ln(omega) peak; using threshold {DEFAULT_LOG_THRESHOLD}");
    fallback
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ShuffleMethod {
    /// Redraw each neuron's spike times uniformly over the recording.
    #[default]
    Uniform,
    /// Permute each neuron's inter-spike intervals, keeping its first spike.
    Isi,
}

impl std::str::FromStr for ShuffleMethod {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "uniform" => Ok(ShuffleMethod::Uniform),
            "isi" => Ok(ShuffleMethod::Isi),
            _ => Err(Error::UnknownName {
                what: "shuffle method",
                name: s.to_string(),
            }),
        }
    }
}

impl fmt::Display for ShuffleMethod {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ShuffleMethod::Uniform => "uniform",
            ShuffleMethod::Isi => "isi",
        })
    }
}

/// Surrogate train with per-neuron spike counts preserved.
pub fn shuffle_train(train: &SpikeTrain, seed: u64, method: ShuffleMethod) -> SpikeTrain {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let by_neuron = train.by_neuron(train.neuron_span());
    let duration = train.duration();
    let mut events = Vec::with_capacity(train.len());
    for n in 0..train.neuron_span() {
        let neuron = NeuronId(n as u32);
        let times = by_neuron.times(neuron);
        match method {
            ShuffleMethod::Uniform => {
                for _ in times {
                    let t = if duration > 0.0 {
                        rng.gen_range(0.0..=duration)
                    } else {
                        0.0
                    };
                    events.push(Spike { neuron, time: t });
                }
            }
            ShuffleMethod::Isi => {
                let Some(&first) = times.first() else { continue };
                let mut isi: Vec<f64> = times.windows(2).map(|w| w[1] - w[0]).collect();
                isi.shuffle(&mut rng);
                let mut t = first;
                events.push(Spike { neuron, time: t });
                for d in isi {
                    t = (t + d).min(duration);
                    events.push(Spike { neuron, time: t });
                }
            }
        }
    }
    SpikeTrain::from_events(events, Some(duration)).expect("shuffled times stay within the recording")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{Neuron, Synapse};

    fn pair_net(weight: f64, delay: f64) -> Network {
        Network {
            width: 10.0,
            height: 10.0,
            neurons: vec![
                Neuron {
                    x: 0.0,
                    y: 0.0,
                    excitatory: true,
                },
                Neuron {
                    x: 1.0,
                    y: 0.0,
                    excitatory: true,
                },
                Neuron {
                    x: 2.0,
                    y: 0.0,
                    excitatory: true,
                },
            ],
            synapses: vec![Synapse {
                pre: NeuronId(0),
                post: NeuronId(1),
                weight,
                delay,
            }],
        }
    }

    #[test]
    fn omega_direct_evaluation() {
        let w = compute_omega(15.0, 0.0, 1.0, 10.0, 10.0, 5.0);
        assert!((w - 0.1 * (-1.0f64).exp()).abs() < 1e-15);
        assert!((w - 0.036788).abs() < 1e-6);
        assert_eq!(compute_omega(9.9, 0.0, 1.0, 10.0, 10.0, 5.0), 0.0);
        assert_eq!(compute_omega(10.0, 0.0, 3.0, 4.0, 10.0, 5.0), 0.75);
        assert_eq!(compute_omega(20.0, 0.0, 3.0, 0.0, 10.0, 5.0), 0.0);
    }

    #[test]
    fn sole_input_at_exact_delay_gives_unit_omega() {
        let net = pair_net(4.0, 3.0);
        let train = Arc::new(
            SpikeTrain::from_events(vec![Spike::new(0, 10.0), Spike::new(1, 13.0)], None).unwrap(),
        );
        let g = build_activity_graph(train, &net, &OmegaConfig::default(), Execution::Sequential).unwrap();
        assert_eq!(g.edge_count(), 1);
        assert_eq!(g.edges()[0].omega, 1.0);
        assert_eq!((g.edges()[0].pre, g.edges()[0].post), (SpikeId(0), SpikeId(1)));
    }

    #[test]
    fn unconnected_spikes_have_no_edges() {
        let net = pair_net(4.0, 3.0);
        let train = Arc::new(
            SpikeTrain::from_events(vec![Spike::new(0, 10.0), Spike::new(2, 13.0)], None).unwrap(),
        );
        let g = build_activity_graph(train, &net, &OmegaConfig::default(), Execution::Sequential).unwrap();
        assert_eq!(g.edge_count(), 0);
        assert_eq!(g.vertex_count(), 2);
    }

    #[test]
    fn unknown_neuron_rejected() {
        let net = pair_net(4.0, 3.0);
        let train = Arc::new(SpikeTrain::from_events(vec![Spike::new(7, 1.0)], None).unwrap());
        let err = build_activity_graph(train, &net, &OmegaConfig::default(), Execution::Sequential);
        assert!(matches!(err, Err(Error::UnknownNeuron { .. })));
    }

    #[test]
    fn omega_decreases_with_lag() {
        let mut last = f64::INFINITY;
        for k in 0..50 {
            let w = compute_omega(3.0 + k as f64 * 0.5, 0.0, 1.0, 2.0, 3.0, 5.0);
            assert!(w < last);
            last = w;
        }
    }

    #[test]
    fn single_pair_histogram() {
        let net = pair_net(4.0, 3.0);
        // lag 25 ms = 5 tau, ratio 1 -> -ln(omega) = 5.
        let train =
            SpikeTrain::from_events(vec![Spike::new(0, 10.0), Spike::new(1, 38.0)], None).unwrap();
        let h = neg_log_omega_histogram(&train, &net, &OmegaConfig::default(), 0.1, Execution::Sequential)
            .unwrap();
        assert_eq!(h.pairs, 1);
        assert_eq!(h.histogram.total(), 1);
        let (left, count) = h.histogram.rows().next().unwrap();
        assert_eq!(count, 1);
        assert!(left <= 5.0 && 5.0 < left + 0.1 + 1e-9, "{left}");
        let none = SpikeTrain::from_events(vec![Spike::new(2, 1.0)], None).unwrap();
        let h = neg_log_omega_histogram(&none, &net, &OmegaConfig::default(), 0.1, Execution::Sequential)
            .unwrap();
        assert!(h.histogram.is_empty());
    }

    #[test]
    fn monotone_histogram_falls_back() {
        let hist = Histogram {
            bin_width: 0.1,
            first_bin: 0,
            counts: (0..100).rev().collect(),
        };
        let c = select_threshold(&hist);
        assert!(c.fallback);
        assert_eq!(c.value, DEFAULT_LOG_THRESHOLD);
        assert!(select_threshold(&Histogram::empty(0.1)).fallback);
    }

    #[test]
    fn shuffle_preserves_counts() {
        let train = SpikeTrain::from_events(
            (0..300).map(|i| Spike::new(i % 7, i as f64 * 1.3)).collect(),
            Some(400.0),
        )
        .unwrap();
        for method in [ShuffleMethod::Uniform, ShuffleMethod::Isi] {
            let s = shuffle_train(&train, 9, method);
            assert_eq!(s.len(), train.len());
            assert_eq!(s.duration(), 400.0);
            let count = |t: &SpikeTrain, n: u32| t.spikes().iter().filter(|s| s.neuron.0 == n).count();
            for n in 0..7 {
                assert_eq!(count(&s, n), count(&train, n));
            }
            assert_eq!(s, shuffle_train(&train, 9, method));
        }
        assert!(shuffle_train(&SpikeTrain::empty(10.0), 1, ShuffleMethod::Uniform).is_empty());
    }
}
