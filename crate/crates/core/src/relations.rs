//! Relations between threads: the multigraph induced by analogous subthreads,
//! classes of related threads, and their interval timelines.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::analogs::AnalogousSubthread;
use crate::error::{Error, Result};
use crate::threads::GnatDecomposition;
use crate::union_find::UnionFind;

pub const DEFAULT_TOP_K: usize = 2000;
pub const DEFAULT_MIN_EDGE_WEIGHT: u64 = 15;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct MultigraphEdge {
    pub gnat_a: u32,
    pub gnat_b: u32,
    pub subthread_id: u32,
    pub weight: u64,
}

impl MultigraphEdge {
    /// Both projections fall inside the same thread.
    pub fn is_self_loop(&self) -> bool {
        self.gnat_a == self.gnat_b
    }
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct GnatMultigraph {
    pub n_gnats: usize,
    /// Ordered by subthread id.
    pub edges: Vec<MultigraphEdge>,
}

/// One edge per subthread among the `top_k` largest, weighted by size.
///
/// `subthreads` must already be sorted largest first (as produced by
/// [`crate::analogs::extract_analogous_subthreads`]).
pub fn build_multigraph(
    decomp: &GnatDecomposition,
    subthreads: &[AnalogousSubthread],
    top_k: usize,
) -> Result<GnatMultigraph> {
    let host = |s: &AnalogousSubthread, side: &[crate::model::SpikeId]| -> Result<u32> {
        let first = side
            .first()
            .and_then(|&x| decomp.membership.get(x.index()).copied().flatten())
            .ok_or(Error::OrphanSubthread { subthread: s.id as usize })?;
        // Projections are connected, so every spike must sit in the same thread.
        if side.iter().any(|&x| decomp.membership.get(x.index()).copied().flatten() != Some(first)) {
            return Err(Error::OrphanSubthread { subthread: s.id as usize });
        }
        Ok(first)
    };
    let mut edges = subthreads
        .iter()
        .take(top_k)
        .map(|s| {
            Ok(MultigraphEdge {
                gnat_a: host(s, &s.projection_a)?,
                gnat_b: host(s, &s.projection_b)?,
                subthread_id: s.id,
                weight: s.size() as u64,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    edges.sort_by_key(|e| e.subthread_id);
    Ok(GnatMultigraph {
        n_gnats: decomp.gnats.len(),
        edges,
    })
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ClassMethod {
    #[default]
    Components,
    GreedyModularity,
}

impl FromStr for ClassMethod {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "components" => Ok(ClassMethod::Components),
            "greedy-modularity" | "modularity" => Ok(ClassMethod::GreedyModularity),
            _ => Err(Error::UnknownName {
                what: "class method",
                name: s.to_string(),
            }),
        }
    }
}

impl fmt::Display for ClassMethod {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ClassMethod::Components => "components",
            ClassMethod::GreedyModularity => "greedy-modularity",
        })
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct GnatClass {
    pub class_id: u32,
    /// Ascending.
    pub gnats: Vec<u32>,
    /// Subthreads whose edge lies inside the class, ascending.
    pub subthreads: Vec<u32>,
}

/// Partitions the threads touched by heavy enough non-loop edges.
///
/// Classes are numbered by their smallest member thread.
pub fn extract_classes(mg: &GnatMultigraph, method: ClassMethod, min_edge_weight: u64) -> Vec<GnatClass> {
    let kept: Vec<&MultigraphEdge> = mg
        .edges
        .iter()
        .filter(|e| !e.is_self_loop() && e.weight >= min_edge_weight)
        .collect();
    let mut touched = vec![false; mg.n_gnats];
    for e in &kept {
        touched[e.gnat_a as usize] = true;
        touched[e.gnat_b as usize] = true;
    }
    let label: Vec<u32> = match method {
        ClassMethod::Components => {
            let mut uf = UnionFind::new(mg.n_gnats);
            for e in &kept {
                uf.union(e.gnat_a as usize, e.gnat_b as usize);
            }
            uf.labels()
        }
        ClassMethod::GreedyModularity => greedy_modularity(mg.n_gnats, &kept),
    };

    let mut by_label: BTreeMap<u32, Vec<u32>> = BTreeMap::new();
    for g in (0..mg.n_gnats).filter(|&g| touched[g]) {
        by_label.entry(label[g]).or_default().push(g as u32);
    }
    let mut groups: Vec<Vec<u32>> = by_label.into_values().collect();
    groups.sort_by_key(|g| g[0]);
    let mut class_of = vec![u32::MAX; mg.n_gnats];
    for (c, g) in groups.iter().enumerate() {
        for &x in g {
            class_of[x as usize] = c as u32;
        }
    }
    let mut classes: Vec<GnatClass> = groups
        .into_iter()
        .enumerate()
        .map(|(c, gnats)| GnatClass {
            class_id: c as u32,
            gnats,
            subthreads: Vec::new(),
        })
        .collect();
    for e in kept {
        let c = class_of[e.gnat_a as usize];
        if c == class_of[e.gnat_b as usize] {
            classes[c as usize].subthreads.push(e.subthread_id);
        }
    }
    for c in &mut classes {
        c.subthreads.sort_unstable();
    }
    classes
}

/// Agglomerative modularity maximisation on the weight-aggregated simple
/// graph: repeatedly merge the pair of adjacent communities with the largest
/// positive gain, ties broken by smallest community ids.
fn greedy_modularity(n: usize, edges: &[&MultigraphEdge]) -> Vec<u32> {
    let mut w: Vec<BTreeMap<usize, f64>> = vec![BTreeMap::new(); n];
    let mut total = 0.0;
    for e in edges {
        let (a, b) = (e.gnat_a as usize, e.gnat_b as usize);
        *w[a].entry(b).or_default() += e.weight as f64;
        *w[b].entry(a).or_default() += e.weight as f64;
        total += e.weight as f64;
    }
    let mut community: Vec<usize> = (0..n).collect();
    if total == 0.0 {
        return community.iter().map(|&c| c as u32).collect();
    }
    let m2 = 2.0 * total;
    let mut strength: Vec<f64> = w.iter().map(|r| r.values().sum::<f64>() / m2).collect();
    let mut alive = vec![true; n];
    loop {
        let mut best: Option<(f64, usize, usize)> = None;
        for i in (0..n).filter(|&i| alive[i]) {
            for (&j, &wij) in w[i].range(i + 1..) {
                let gain = 2.0 * (wij / m2 - strength[i] * strength[j]);
                if gain > 1e-12 && best.is_none_or(|(g, _, _)| gain > g) {
                    best = Some((gain, i, j));
                }
            }
        }
        let Some((_, i, j)) = best else { break };
        // Fold j into i.
        let row = std::mem::take(&mut w[j]);
        for (k, wjk) in row {
            w[k].remove(&j);
            if k != i {
                *w[i].entry(k).or_default() += wjk;
                *w[k].entry(i).or_default() += wjk;
            }
        }
        w[i].remove(&j);
        strength[i] += strength[j];
        alive[j] = false;
        for c in community.iter_mut() {
            if *c == j {
                *c = i;
            }
        }
    }
    community.iter().map(|&c| c as u32).collect()
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ClassInterval {
    pub gnat_id: u32,
    pub class_id: u32,
    pub t_start: f64,
    pub t_end: f64,
}

/// Temporal extent of every classified thread, sorted by `(t_start, gnat_id)`.
pub fn class_intervals(classes: &[GnatClass], decomp: &GnatDecomposition) -> Vec<ClassInterval> {
    let mut out: Vec<ClassInterval> = classes
        .iter()
        .flat_map(|c| {
            c.gnats.iter().map(move |&g| {
                let gnat = decomp.gnat(g);
                ClassInterval {
                    gnat_id: g,
                    class_id: c.class_id,
                    t_start: gnat.t_start,
                    t_end: gnat.t_end,
                }
            })
        })
        .collect();
    out.sort_by(|a, b| a.t_start.total_cmp(&b.t_start).then(a.gnat_id.cmp(&b.gnat_id)));
    out
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrialInterval {
    pub trial_index: u32,
    pub gnat_id: u32,
    pub class_id: u32,
    pub rel_start: f64,
    pub rel_end: f64,
    /// The interval extended past the trial window and was cut.
    pub clipped: bool,
}

/// Intervals cut to each trial window `[start, start + trial_length]` and
/// shifted to trial-relative time. Intervals missing a trial entirely are left
/// out of it.
pub fn trial_overlay(intervals: &[ClassInterval], trial_starts: &[f64], trial_length: f64) -> Vec<Vec<TrialInterval>> {
    trial_starts
        .iter()
        .enumerate()
        .map(|(k, &start)| {
            let end = start + trial_length;
            intervals
                .iter()
                .filter(|iv| iv.t_end >= start && iv.t_start <= end)
                .map(|iv| {
                    let (lo, hi) = (iv.t_start.max(start), iv.t_end.min(end));
                    TrialInterval {
                        trial_index: k as u32,
                        gnat_id: iv.gnat_id,
                        class_id: iv.class_id,
                        rel_start: lo - start,
                        rel_end: hi - start,
                        clipped: lo != iv.t_start || hi != iv.t_end,
                    }
                })
                .collect()
        })
        .collect()
}
