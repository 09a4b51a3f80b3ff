use serde::{Deserialize, Serialize};

use crate::causal::{ActivityEdge, ActivityGraph};
use crate::error::{Error, Result};
use crate::exec::{self, Execution};
use crate::model::{NeuronId, SpikeId};
use crate::threads::GnatDecomposition;
use crate::union_find::UnionFind;

/// Two spikes of the same neuron, one from each compared graph.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct SecondOrderVertex {
    pub neuron: NeuronId,
    pub spike_a: SpikeId,
    pub spike_b: SpikeId,
}

/// Second-order graph restricted to vertices with at least one edge.
///
/// An edge `(u_a, u_b) -> (v_a, v_b)` exists iff `u_a -> v_a` is an edge of
/// graph A and `u_b -> v_b` an edge of graph B. In self mode A and B are the
/// same graph and only vertices with `spike_a < spike_b` are kept; an edge
/// pair is kept only when both of its endpoints are in that canonical half.
#[derive(Clone, Debug, PartialEq)]
pub struct SecondOrderGraph {
    pub self_mode: bool,
    /// Sorted by `(spike_a, spike_b)`.
    vertices: Vec<SecondOrderVertex>,
    /// Vertex index pairs, sorted.
    edges: Vec<(u32, u32)>,
    /// Size of the full vertex set, including vertices without edges.
    pub total_vertices: u64,
}

impl SecondOrderGraph {
    pub(crate) fn from_parts(
        a: &ActivityGraph,
        b: &ActivityGraph,
        self_mode: bool,
        vertices: Vec<SecondOrderVertex>,
        edges: Vec<(u32, u32)>,
    ) -> Self {
        SecondOrderGraph {
            self_mode,
            vertices,
            edges,
            total_vertices: total_vertices(a, b, self_mode),
        }
    }

    pub fn vertices(&self) -> &[SecondOrderVertex] {
        &self.vertices
    }

    pub fn edges(&self) -> &[(u32, u32)] {
        &self.edges
    }

    pub fn vertex(&self, i: u32) -> SecondOrderVertex {
        self.vertices[i as usize]
    }

    /// Vertices of the full graph that touch no edge and are not stored.
    pub fn singleton_vertices(&self) -> u64 {
        self.total_vertices - self.vertices.len() as u64
    }

    /// Edge list as vertex pairs.
    pub fn edge_pairs(&self) -> impl Iterator<Item = (SecondOrderVertex, SecondOrderVertex)> + '_ {
        self.edges
            .iter()
            .map(|&(a, b)| (self.vertex(a), self.vertex(b)))
    }
}

fn key(a: SpikeId, b: SpikeId) -> u64 {
    ((a.0 as u64) << 32) | b.0 as u64
}

/// Edge indices grouped by synapse.
struct BySynapse {
    offsets: Vec<usize>,
    edges: Vec<u32>,
}

impl BySynapse {
    fn new(graph: &ActivityGraph, n_synapses: usize) -> Self {
        let mut offsets = vec![0usize; n_synapses + 1];
        for e in graph.edges() {
            offsets[e.synapse as usize + 1] += 1;
        }
        for i in 0..n_synapses {
            offsets[i + 1] += offsets[i];
        }
        let mut cursor = offsets.clone();
        let mut edges = vec![0u32; graph.edge_count()];
        for (i, e) in graph.edges().iter().enumerate() {
            let slot = &mut cursor[e.synapse as usize];
            edges[*slot] = i as u32;
            *slot += 1;
        }
        BySynapse { offsets, edges }
    }

    fn get(&self, s: usize) -> &[u32] {
        &self.edges[self.offsets[s]..self.offsets[s + 1]]
    }
}

fn total_vertices(a: &ActivityGraph, b: &ActivityGraph, self_mode: bool) -> u64 {
    let (n_neurons, _) = a.network_shape();
    let count = |g: &ActivityGraph| {
        let mut c = vec![0u64; n_neurons];
        for s in g.vertices() {
            c[g.train().neuron(s).index()] += 1;
        }
        c
    };
    let ca = count(a);
    if self_mode {
        ca.iter().map(|&k| k * k.saturating_sub(1) / 2).sum()
    } else {
        let cb = count(b);
        ca.iter().zip(&cb).map(|(x, y)| x * y).sum()
    }
}

/// Builds the second-order graph by joining the two edge lists on their synapse.
///
/// Work is proportional to the output: for every synapse the cross product of
/// its edges in A and in B gives exactly the second-order edges routed
/// through it. `b` is ignored in self mode.
pub fn build_second_order_graph(
    a: &ActivityGraph,
    b: &ActivityGraph,
    self_mode: bool,
    exec: Execution,
) -> Result<SecondOrderGraph> {
    let b = if self_mode { a } else { b };
    if a.network_shape() != b.network_shape() {
        return Err(Error::NetworkMismatch);
    }
    let n_synapses = a.network_shape().1;
    let ga = BySynapse::new(a, n_synapses);
    let gb = if self_mode { None } else { Some(BySynapse::new(b, n_synapses)) };
    let ea = a.edges();
    let eb = b.edges();

    let mut pairs: Vec<(u64, u64)> = exec::flat_map_range(exec, n_synapses, |s, out| {
        let list_a = ga.get(s);
        match &gb {
            None => {
                for (i, &x) in list_a.iter().enumerate() {
                    let e = &ea[x as usize];
                    for &y in &list_a[i + 1..] {
                        let f = &ea[y as usize];
                        if e.pre < f.pre && e.post < f.post {
                            out.push((key(e.pre, f.pre), key(e.post, f.post)));
                        }
                    }
                }
            }
            Some(gb) => {
                for &x in list_a {
                    let e = &ea[x as usize];
                    for &y in gb.get(s) {
                        let f = &eb[y as usize];
                        out.push((key(e.pre, f.pre), key(e.post, f.post)));
                    }
                }
            }
        }
    });

    let mut keys: Vec<u64> = Vec::with_capacity(pairs.len() * 2);
    for &(u, v) in &pairs {
        keys.push(u);
        keys.push(v);
    }
    exec::sort_unstable(exec, &mut keys);
    keys.dedup();
    let index = |k: u64| keys.binary_search(&k).expect("endpoint was collected") as u32;
    exec::sort_unstable(exec, &mut pairs);
    let edges: Vec<(u32, u32)> = pairs.iter().map(|&(u, v)| (index(u), index(v))).collect();
    drop(pairs);

    let vertices = keys
        .iter()
        .map(|&k| {
            let spike_a = SpikeId((k >> 32) as u32);
            let spike_b = SpikeId(k as u32);
            SecondOrderVertex {
                neuron: a.train().neuron(spike_a),
                spike_a,
                spike_b,
            }
        })
        .collect();

    Ok(SecondOrderGraph::from_parts(a, b, self_mode, vertices, edges))
}

/// A weakly connected component of the second-order graph: the same causal
/// pattern occurring in graph A and in graph B.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AnalogousSubthread {
    pub id: u32,
    pub vertices: Vec<SecondOrderVertex>,
    /// Edges as pairs of positions in `vertices`.
    pub edges: Vec<(u32, u32)>,
    /// Distinct `spike_a` values, ascending.
    pub projection_a: Vec<SpikeId>,
    pub projection_b: Vec<SpikeId>,
    /// The two projections share spikes (self mode only).
    pub overlapping: bool,
    pub gnat_a: Option<u32>,
    pub gnat_b: Option<u32>,
}

impl AnalogousSubthread {
    /// Derives projections and overlap from the vertex list; threads are unassigned.
    pub fn new(id: u32, vertices: Vec<SecondOrderVertex>, edges: Vec<(u32, u32)>, self_mode: bool) -> Self {
        let mut projection_a: Vec<SpikeId> = vertices.iter().map(|v| v.spike_a).collect();
        let mut projection_b: Vec<SpikeId> = vertices.iter().map(|v| v.spike_b).collect();
        projection_a.sort_unstable();
        projection_a.dedup();
        projection_b.sort_unstable();
        projection_b.dedup();
        let overlapping = self_mode && projection_b.iter().any(|s| projection_a.binary_search(s).is_ok());
        AnalogousSubthread {
            id,
            vertices,
            edges,
            projection_a,
            projection_b,
            overlapping,
            gnat_a: None,
            gnat_b: None,
        }
    }

    pub fn size(&self) -> usize {
        self.vertices.len()
    }

    /// First-order edges `(pre, post)` covered in graph A.
    pub fn edges_a(&self) -> Vec<(SpikeId, SpikeId)> {
        self.edges
            .iter()
            .map(|&(u, v)| (self.vertices[u as usize].spike_a, self.vertices[v as usize].spike_a))
            .collect()
    }

    pub fn edges_b(&self) -> Vec<(SpikeId, SpikeId)> {
        self.edges
            .iter()
            .map(|&(u, v)| (self.vertices[u as usize].spike_b, self.vertices[v as usize].spike_b))
            .collect()
    }
}

/// Default minimum subthread size, in spike pairs.
pub const DEFAULT_MIN_SPIKES: usize = 15;

/// Weakly connected components with at least `min_spikes` vertices, largest
/// first (ties broken by their smallest vertex).
pub fn extract_analogous_subthreads(graph: &SecondOrderGraph, min_spikes: usize) -> Vec<AnalogousSubthread> {
    let n = graph.vertices.len();
    let mut uf = UnionFind::new(n);
    for &(u, v) in &graph.edges {
        uf.union(u as usize, v as usize);
    }
    let labels = uf.labels();
    let n_comp = labels.iter().copied().max().map_or(0, |m| m as usize + 1);
    let mut members: Vec<Vec<u32>> = vec![Vec::new(); n_comp];
    for (v, &l) in labels.iter().enumerate() {
        members[l as usize].push(v as u32);
    }
    let mut comp_edges: Vec<Vec<(u32, u32)>> = vec![Vec::new(); n_comp];
    for &(u, v) in &graph.edges {
        comp_edges[labels[u as usize] as usize].push((u, v));
    }

    let mut out: Vec<AnalogousSubthread> = members
        .into_iter()
        .zip(comp_edges)
        .filter(|(m, _)| m.len() >= min_spikes.max(1))
        .map(|(m, edges)| {
            let local = |g: u32| m.binary_search(&g).expect("edge inside component") as u32;
            let vertices: Vec<SecondOrderVertex> = m.iter().map(|&i| graph.vertex(i)).collect();
            let edges = edges.iter().map(|&(u, v)| (local(u), local(v))).collect();
            AnalogousSubthread::new(0, vertices, edges, graph.self_mode)
        })
        .collect();
    out.sort_by(|x, y| y.size().cmp(&x.size()).then(x.vertices[0].cmp(&y.vertices[0])));
    for (i, s) in out.iter_mut().enumerate() {
        s.id = i as u32;
    }
    out
}

/// Records the host thread of each projection.
pub fn assign_gnats(
    subthreads: &mut [AnalogousSubthread],
    decomp_a: &GnatDecomposition,
    decomp_b: &GnatDecomposition,
) -> Result<()> {
    let host = |spikes: &[SpikeId], d: &GnatDecomposition, id: u32| -> Result<u32> {
        let g = spikes
            .first()
            .and_then(|&s| d.gnat_of(s))
            .ok_or(Error::OrphanSubthread { subthread: id as usize })?;
        if spikes.iter().any(|&s| d.gnat_of(s) != Some(g)) {
            return Err(Error::OrphanSubthread { subthread: id as usize });
        }
        Ok(g)
    };
    for s in subthreads.iter_mut() {
        s.gnat_a = Some(host(&s.projection_a, decomp_a, s.id)?);
        s.gnat_b = Some(host(&s.projection_b, decomp_b, s.id)?);
    }
    Ok(())
}

/// Whether the neuron-preserving pairing of a subthread is an exact
/// isomorphism between the subgraphs its projections induce.
pub fn is_exact_isomorphism(sub: &AnalogousSubthread, a: &ActivityGraph, b: &ActivityGraph) -> bool {
    let n = sub.projection_a.len();
    if n != sub.projection_b.len() || n != sub.vertices.len() {
        return false;
    }
    let mut to_b: Vec<(SpikeId, SpikeId)> = sub.vertices.iter().map(|v| (v.spike_a, v.spike_b)).collect();
    to_b.sort_unstable();
    let map = |s: SpikeId| to_b.binary_search_by_key(&s, |p| p.0).ok().map(|i| to_b[i].1);
    let induced = |g: &ActivityGraph, set: &[SpikeId]| -> Vec<(SpikeId, SpikeId)> {
        set.iter()
            .flat_map(|&s| g.out_edges(s).iter())
            .filter(|e: &&ActivityEdge| set.binary_search(&e.post).is_ok())
            .map(|e| (e.pre, e.post))
            .collect()
    };
    let ea = induced(a, &sub.projection_a);
    let eb = induced(b, &sub.projection_b);
    ea.len() == eb.len()
        && ea.iter().all(|&(x, y)| match (map(x), map(y)) {
            (Some(p), Some(q)) => b.contains_edge(p, q),
            _ => false,
        })
}

/// Share of subthreads whose pairing is an exact isomorphism.
pub fn isomorphic_fraction(subthreads: &[AnalogousSubthread], a: &ActivityGraph, b: &ActivityGraph) -> f64 {
    if subthreads.is_empty() {
        return 0.0;
    }
    let exact = subthreads.iter().filter(|s| is_exact_isomorphism(s, a, b)).count();
    exact as f64 / subthreads.len() as f64
}
