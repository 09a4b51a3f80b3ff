//! Spikes, spike trains and synaptic networks shared by every analysis stage.
//!
//! Time is always in milliseconds and positions in micrometers. A [`SpikeTrain`]
//! is kept in canonical `(time, neuron)` order, so a spike's position in the
//! train doubles as its stable [`SpikeId`].

use std::cmp::Ordering;
use std::collections::HashSet;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Smallest admissible axonal conduction delay.
pub const MIN_DELAY_MS: f64 = 1.0;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct NeuronId(pub u32);

impl NeuronId {
    #[inline]
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

impl fmt::Display for NeuronId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "n{}", self.0)
    }
}

/// Position of a spike in its canonically sorted train.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct SpikeId(pub u32);

impl SpikeId {
    #[inline]
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

impl fmt::Display for SpikeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "s{}", self.0)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Spike {
    pub neuron: NeuronId,
    pub time: f64,
}

impl Spike {
    pub fn new(neuron: u32, time: f64) -> Self {
        Spike {
            neuron: NeuronId(neuron),
            time,
        }
    }

    fn canonical_cmp(&self, other: &Spike) -> Ordering {
        self.time
            .total_cmp(&other.time)
            .then(self.neuron.cmp(&other.neuron))
    }
}

/// Time-sorted spikes over a recording of known duration.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct SpikeTrain {
    spikes: Vec<Spike>,
    duration: f64,
}

impl SpikeTrain {
    /// Sorts `events` canonically. When `duration` is `None` it defaults to
    /// the latest spike time.
    pub fn from_events(mut events: Vec<Spike>, duration: Option<f64>) -> Result<Self> {
        for (index, s) in events.iter().enumerate() {
            if !s.time.is_finite() || s.time < 0.0 {
                return Err(Error::InvalidSpikeTime {
                    index,
                    neuron: s.neuron,
                    time: s.time,
                });
            }
        }
        if events.len() > u32::MAX as usize {
            return Err(Error::param("spikes", "more than 2^32 - 1 spikes"));
        }
        events.sort_by(Spike::canonical_cmp);
        let latest = events.last().map_or(0.0, |s| s.time);
        let duration = match duration {
            Some(d) if !d.is_finite() || d < 0.0 => {
                return Err(Error::param("duration", format!("{d} is not a valid duration")))
            }
            Some(d) => {
                if latest > d {
                    let index = events.len() - 1;
                    return Err(Error::SpikeBeyondDuration {
                        index,
                        time: latest,
                        duration: d,
                    });
                }
                d
            }
            None => latest,
        };
        Ok(SpikeTrain {
            spikes: events,
            duration,
        })
    }

    pub fn empty(duration: f64) -> Self {
        SpikeTrain {
            spikes: Vec::new(),
            duration,
        }
    }

    pub fn spikes(&self) -> &[Spike] {
        &self.spikes
    }

    pub fn duration(&self) -> f64 {
        self.duration
    }

    pub fn len(&self) -> usize {
        self.spikes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.spikes.is_empty()
    }

    #[inline]
    pub fn spike(&self, id: SpikeId) -> Spike {
        self.spikes[id.index()]
    }

    #[inline]
    pub fn time(&self, id: SpikeId) -> f64 {
        self.spikes[id.index()].time
    }

    #[inline]
    pub fn neuron(&self, id: SpikeId) -> NeuronId {
        self.spikes[id.index()].neuron
    }

    pub fn iter(&self) -> impl Iterator<Item = (SpikeId, Spike)> + '_ {
        self.spikes
            .iter()
            .enumerate()
            .map(|(i, s)| (SpikeId(i as u32), *s))
    }

    /// Largest neuron index present, plus one.
    pub fn neuron_span(&self) -> usize {
        self.spikes
            .iter()
            .map(|s| s.neuron.index() + 1)
            .max()
            .unwrap_or(0)
    }

    /// Spike ids grouped by neuron, each group in time order.
    pub fn by_neuron(&self, n_neurons: usize) -> NeuronSpikes {
        let mut offsets = vec![0usize; n_neurons + 1];
        for s in &self.spikes {
            offsets[s.neuron.index() + 1] += 1;
        }
        for i in 0..n_neurons {
            offsets[i + 1] += offsets[i];
        }
        let mut cursor = offsets.clone();
        let mut ids = vec![SpikeId(0); self.spikes.len()];
        for (i, s) in self.spikes.iter().enumerate() {
            let slot = &mut cursor[s.neuron.index()];
            ids[*slot] = SpikeId(i as u32);
            *slot += 1;
        }
        let times = ids.iter().map(|&id| self.time(id)).collect();
        NeuronSpikes {
            offsets,
            ids,
            times,
        }
    }

    /// Checks that every spike refers to a neuron of a `count`-neuron network.
    pub fn check_neurons(&self, count: usize) -> Result<()> {
        match self
            .spikes
            .iter()
            .position(|s| s.neuron.index() >= count)
        {
            Some(index) => Err(Error::UnknownNeuron {
                index,
                neuron: self.spikes[index].neuron,
                count,
            }),
            None => Ok(()),
        }
    }
}

/// Canonical sort of an unordered event list; ids are assigned densely from 0.
pub fn sort_and_index_spikes(events: Vec<Spike>) -> Result<SpikeTrain> {
    SpikeTrain::from_events(events, None)
}

/// Per-neuron spike lists in compressed form.
#[derive(Clone, Debug)]
pub struct NeuronSpikes {
    offsets: Vec<usize>,
    ids: Vec<SpikeId>,
    times: Vec<f64>,
}

impl NeuronSpikes {
    pub fn ids(&self, neuron: NeuronId) -> &[SpikeId] {
        let n = neuron.index();
        &self.ids[self.offsets[n]..self.offsets[n + 1]]
    }

    pub fn times(&self, neuron: NeuronId) -> &[f64] {
        let n = neuron.index();
        &self.times[self.offsets[n]..self.offsets[n + 1]]
    }

    /// Spikes of `neuron` with time in `[lo, hi]`.
    pub fn in_window(&self, neuron: NeuronId, lo: f64, hi: f64) -> &[SpikeId] {
        let times = self.times(neuron);
        let start = times.partition_point(|&t| t < lo);
        let end = times.partition_point(|&t| t <= hi);
        if start >= end {
            return &[];
        }
        &self.ids(neuron)[start..end]
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Neuron {
    pub x: f64,
    pub y: f64,
    pub excitatory: bool,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Synapse {
    pub pre: NeuronId,
    pub post: NeuronId,
    pub weight: f64,
    pub delay: f64,
}

/// Neurons on a periodic rectangle joined by weighted, delayed synapses.
#[derive(Clone, Debug, PartialEq)]
pub struct Network {
    pub width: f64,
    pub height: f64,
    pub neurons: Vec<Neuron>,
    pub synapses: Vec<Synapse>,
}

impl Network {
    pub fn len(&self) -> usize {
        self.neurons.len()
    }

    pub fn is_empty(&self) -> bool {
        self.neurons.is_empty()
    }

    #[inline]
    pub fn is_excitatory(&self, n: NeuronId) -> bool {
        self.neurons[n.index()].excitatory
    }

    pub fn excitatory_count(&self) -> usize {
        self.neurons.iter().filter(|n| n.excitatory).count()
    }

    pub fn weights(&self) -> Vec<f64> {
        self.synapses.iter().map(|s| s.weight).collect()
    }

    /// Same topology with the weights replaced.
    pub fn with_weights(&self, weights: &[f64]) -> Network {
        assert_eq!(weights.len(), self.synapses.len());
        let mut net = self.clone();
        for (s, &w) in net.synapses.iter_mut().zip(weights) {
            s.weight = w;
        }
        net
    }

    /// Compressed in/out synapse lists.
    pub fn connectivity(&self) -> Connectivity {
        Connectivity::new(self)
    }
}

/// Synapse ids grouped by presynaptic and by postsynaptic neuron.
#[derive(Clone, Debug)]
pub struct Connectivity {
    out_offsets: Vec<usize>,
    out_syn: Vec<u32>,
    in_offsets: Vec<usize>,
    in_syn: Vec<u32>,
}

impl Connectivity {
    fn new(net: &Network) -> Self {
        let n = net.len();
        let group = |key: &dyn Fn(&Synapse) -> usize| {
            let mut offsets = vec![0usize; n + 1];
            for s in &net.synapses {
                offsets[key(s) + 1] += 1;
            }
            for i in 0..n {
                offsets[i + 1] += offsets[i];
            }
            let mut cursor = offsets.clone();
            let mut ids = vec![0u32; net.synapses.len()];
            for (i, s) in net.synapses.iter().enumerate() {
                let slot = &mut cursor[key(s)];
                ids[*slot] = i as u32;
                *slot += 1;
            }
            (offsets, ids)
        };
        let (out_offsets, out_syn) = group(&|s| s.pre.index());
        let (in_offsets, in_syn) = group(&|s| s.post.index());
        Connectivity {
            out_offsets,
            out_syn,
            in_offsets,
            in_syn,
        }
    }

    pub fn outgoing(&self, n: NeuronId) -> &[u32] {
        &self.out_syn[self.out_offsets[n.index()]..self.out_offsets[n.index() + 1]]
    }

    pub fn incoming(&self, n: NeuronId) -> &[u32] {
        &self.in_syn[self.in_offsets[n.index()]..self.in_offsets[n.index() + 1]]
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum Violation {
    NonFiniteGeometry,
    PositionOutOfBounds { neuron: NeuronId, x: f64, y: f64 },
    UnknownEndpoint { synapse: usize },
    SelfSynapse { synapse: usize, neuron: NeuronId },
    DuplicateSynapse { synapse: usize, pre: NeuronId, post: NeuronId },
    DelayBelowMinimum { synapse: usize, delay: f64 },
    WeightSign { synapse: usize, weight: f64, excitatory: bool },
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::NonFiniteGeometry => write!(f, "width/height must be finite and positive"),
            Violation::PositionOutOfBounds { neuron, x, y } => {
                write!(f, "neuron {neuron}: position ({x}, {y}) outside the rectangle")
            }
            Violation::UnknownEndpoint { synapse } => {
                write!(f, "synapse #{synapse}: endpoint is not a neuron of the network")
            }
            Violation::SelfSynapse { synapse, neuron } => {
                write!(f, "synapse #{synapse}: self-synapse on {neuron}")
            }
            Violation::DuplicateSynapse { synapse, pre, post } => {
                write!(f, "synapse #{synapse}: duplicate synapse {pre} -> {post}")
            }
            Violation::DelayBelowMinimum { synapse, delay } => {
                write!(f, "synapse #{synapse}: delay below minimum ({delay} ms < {MIN_DELAY_MS} ms)")
            }
            Violation::WeightSign {
                synapse,
                weight,
                excitatory,
            } => {
                let kind = if *excitatory { "excitatory" } else { "inhibitory" };
                write!(f, "synapse #{synapse}: {kind} weight has wrong sign ({weight})")
            }
        }
    }
}

/// Lists every broken network invariant. An empty list means the network is valid.
pub fn validate_network(net: &Network) -> Vec<Violation> {
    let mut out = Vec::new();
    let geometry_ok = net.width.is_finite()
        && net.height.is_finite()
        && net.width > 0.0
        && net.height > 0.0;
    if !geometry_ok {
        out.push(Violation::NonFiniteGeometry);
    }
    for (i, n) in net.neurons.iter().enumerate() {
        let inside = n.x >= 0.0 && n.x < net.width && n.y >= 0.0 && n.y < net.height;
        if !inside {
            out.push(Violation::PositionOutOfBounds {
                neuron: NeuronId(i as u32),
                x: n.x,
                y: n.y,
            });
        }
    }
    let mut seen = HashSet::with_capacity(net.synapses.len());
    for (i, s) in net.synapses.iter().enumerate() {
        if s.pre.index() >= net.len() || s.post.index() >= net.len() {
            out.push(Violation::UnknownEndpoint { synapse: i });
            continue;
        }
        if s.pre == s.post {
            out.push(Violation::SelfSynapse {
                synapse: i,
                neuron: s.pre,
            });
        }
        if !seen.insert((s.pre, s.post)) {
            out.push(Violation::DuplicateSynapse {
                synapse: i,
                pre: s.pre,
                post: s.post,
            });
        }
        if !(s.delay >= MIN_DELAY_MS) {
            out.push(Violation::DelayBelowMinimum {
                synapse: i,
                delay: s.delay,
            });
        }
        let excitatory = net.is_excitatory(s.pre);
        let sign_ok = if excitatory {
            s.weight >= 0.0
        } else {
            s.weight <= 0.0
        };
        if !sign_ok {
            out.push(Violation::WeightSign {
                synapse: i,
                weight: s.weight,
                excitatory,
            });
        }
    }
    out
}

/// Norm applied to the incoming excitatory weights of a neuron.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum NormKind {
    #[default]
    L1,
    L2,
}

impl FromStr for NormKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "l1" => Ok(NormKind::L1),
            "l2" => Ok(NormKind::L2),
            _ => Err(Error::UnknownName {
                what: "norm kind",
                name: s.to_string(),
            }),
        }
    }
}

impl fmt::Display for NormKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            NormKind::L1 => "l1",
            NormKind::L2 => "l2",
        })
    }
}

impl NormKind {
    fn finish(self, acc: f64) -> f64 {
        match self {
            NormKind::L1 => acc,
            NormKind::L2 => acc.sqrt(),
        }
    }

    fn term(self, w: f64) -> f64 {
        match self {
            NormKind::L1 => w,
            NormKind::L2 => w * w,
        }
    }
}

/// Norm of the excitatory weights onto `neuron`; inhibitory synapses are ignored.
pub fn incoming_norm(net: &Network, neuron: NeuronId, kind: NormKind) -> f64 {
    let acc: f64 = net
        .synapses
        .iter()
        .filter(|s| s.post == neuron && net.is_excitatory(s.pre))
        .map(|s| kind.term(s.weight))
        .sum();
    kind.finish(acc)
}

/// [`incoming_norm`] for every neuron in one pass.
pub fn incoming_norms(net: &Network, kind: NormKind) -> Vec<f64> {
    let mut acc = vec![0.0; net.len()];
    for s in &net.synapses {
        if net.is_excitatory(s.pre) {
            acc[s.post.index()] += kind.term(s.weight);
        }
    }
    acc.into_iter().map(|a| kind.finish(a)).collect()
}
