//! Activity threads: weakly connected components of the activity graph.

use serde::{Deserialize, Serialize};

use crate::causal::ActivityGraph;
use crate::error::{Error, Result};
use crate::model::SpikeId;
use crate::union_find::UnionFind;

/// One thread of causally linked spikes.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Gnat {
    pub id: u32,
    /// Member spikes, ascending.
    pub spikes: Vec<SpikeId>,
    /// Indices into the graph's edge list, ascending.
    pub edges: Vec<u32>,
    pub t_start: f64,
    pub t_end: f64,
}

impl Gnat {
    pub fn size(&self) -> usize {
        self.spikes.len()
    }

    pub fn duration(&self) -> f64 {
        self.t_end - self.t_start
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct GnatDecomposition {
    pub gnats: Vec<Gnat>,
    /// Excitatory spikes without any incident edge.
    pub isolated: Vec<SpikeId>,
    /// Thread of every spike; `None` for isolated and non-excitatory spikes.
    pub membership: Vec<Option<u32>>,
}

impl GnatDecomposition {
    pub fn gnat_of(&self, s: SpikeId) -> Option<u32> {
        self.membership[s.index()]
    }

    pub fn gnat(&self, id: u32) -> &Gnat {
        &self.gnats[id as usize]
    }

    /// Rebuilds a decomposition of `graph` from stored thread labels and
    /// checks that it is the one [`extract_gnats`] produces.
    pub fn from_membership(graph: &ActivityGraph, membership: Vec<Option<u32>>) -> Result<Self> {
        let expected = extract_gnats(graph);
        if expected.membership != membership {
            return Err(Error::param(
                "membership",
                "thread labels do not match the activity graph",
            ));
        }
        Ok(expected)
    }
}

/// Splits the graph into threads. Threads are numbered by
/// `(t_start, -size, smallest spike id)`.
pub fn extract_gnats(graph: &ActivityGraph) -> GnatDecomposition {
    let n = graph.train().len();
    let mut uf = UnionFind::new(n);
    for e in graph.edges() {
        uf.union(e.pre.index(), e.post.index());
    }

    // Group spikes with at least one edge by root; spike ids ascend within each group.
    let mut group_of_root: Vec<u32> = vec![u32::MAX; n];
    let mut groups: Vec<Vec<SpikeId>> = Vec::new();
    let mut isolated = Vec::new();
    for s in graph.vertices() {
        if graph.degree(s) == 0 {
            isolated.push(s);
            continue;
        }
        let r = uf.find(s.index());
        if group_of_root[r] == u32::MAX {
            group_of_root[r] = groups.len() as u32;
            groups.push(Vec::new());
        }
        groups[group_of_root[r] as usize].push(s);
    }

    let train = graph.train();
    let mut gnats: Vec<Gnat> = groups
        .into_iter()
        .map(|spikes| {
            let t_start = spikes.iter().map(|&s| train.time(s)).fold(f64::INFINITY, f64::min);
            let t_end = spikes.iter().map(|&s| train.time(s)).fold(f64::NEG_INFINITY, f64::max);
            Gnat {
                id: 0,
                spikes,
                edges: Vec::new(),
                t_start,
                t_end,
            }
        })
        .collect();
    gnats.sort_by(|a, b| {
        a.t_start
            .total_cmp(&b.t_start)
            .then(b.size().cmp(&a.size()))
            .then(a.spikes[0].cmp(&b.spikes[0]))
    });

    let mut membership = vec![None; n];
    for (id, g) in gnats.iter_mut().enumerate() {
        g.id = id as u32;
        for &s in &g.spikes {
            membership[s.index()] = Some(id as u32);
        }
    }
    for (i, e) in graph.edges().iter().enumerate() {
        let id = membership[e.pre.index()].expect("edge endpoints belong to a thread");
        gnats[id as usize].edges.push(i as u32);
    }

    GnatDecomposition {
        gnats,
        isolated,
        membership,
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DurationStats {
    pub bin_width: f64,
    /// Counts of `t_end - t_start` in bins `[k * bin_width, (k + 1) * bin_width)`.
    pub counts: Vec<u64>,
    pub count: usize,
    pub mean: f64,
    pub max: f64,
}

pub fn duration_stats(decomp: &GnatDecomposition, bin_width: f64) -> Result<DurationStats> {
    if !(bin_width > 0.0 && bin_width.is_finite()) {
        return Err(Error::param("bin_width", "must be positive"));
    }
    let durations: Vec<f64> = decomp.gnats.iter().map(Gnat::duration).collect();
    let max = durations.iter().copied().fold(0.0, f64::max);
    let mut counts = Vec::new();
    if !durations.is_empty() {
        counts = vec![0u64; (max / bin_width).floor() as usize + 1];
        for d in &durations {
            counts[(d / bin_width).floor() as usize] += 1;
        }
    }
    let mean = if durations.is_empty() {
        0.0
    } else {
        durations.iter().sum::<f64>() / durations.len() as f64
    };
    Ok(DurationStats {
        bin_width,
        counts,
        count: durations.len(),
        mean,
        max,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BinOverlap {
    pub bin_width: f64,
    /// Distinct threads with a spike in each bin `[k * w, (k + 1) * w)`.
    pub gnats_per_bin: Vec<u32>,
    /// Bins holding at least one excitatory spike.
    pub nonempty_bins: usize,
    pub bins_with_multiple: usize,
}

impl BinOverlap {
    /// Share of nonempty bins holding spikes of two or more threads.
    pub fn multiple_fraction(&self) -> f64 {
        if self.nonempty_bins == 0 {
            0.0
        } else {
            self.bins_with_multiple as f64 / self.nonempty_bins as f64
        }
    }
}

/// Number of distinct threads per time bin over the whole recording.
pub fn bin_overlap_stats(
    graph: &ActivityGraph,
    decomp: &GnatDecomposition,
    bin_width: f64,
) -> Result<BinOverlap> {
    if !(bin_width > 0.0 && bin_width.is_finite()) {
        return Err(Error::param("bin_width", "must be positive"));
    }
    let train = graph.train();
    let n_bins = ((train.duration() / bin_width).floor() as usize + 1).max(1);
    let bin = |t: f64| ((t / bin_width).floor() as usize).min(n_bins - 1);
    let mut nonempty = vec![false; n_bins];
    let mut per_bin: Vec<Vec<u32>> = vec![Vec::new(); n_bins];
    for s in graph.vertices() {
        let b = bin(train.time(s));
        nonempty[b] = true;
        if let Some(g) = decomp.gnat_of(s) {
            per_bin[b].push(g);
        }
    }
    let gnats_per_bin: Vec<u32> = per_bin
        .into_iter()
        .map(|mut ids| {
            ids.sort_unstable();
            ids.dedup();
            ids.len() as u32
        })
        .collect();
    Ok(BinOverlap {
        bin_width,
        nonempty_bins: nonempty.iter().filter(|&&b| b).count(),
        bins_with_multiple: gnats_per_bin.iter().filter(|&&c| c >= 2).count(),
        gnats_per_bin,
    })
}
