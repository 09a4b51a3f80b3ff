//! Point quadtree over spike-time pairs, plus a second-order graph
//! construction that uses it to look up candidate successor pairs.

use std::collections::HashMap;

use super::second_order::{SecondOrderGraph, SecondOrderVertex};
use crate::causal::ActivityGraph;
use crate::error::{Error, Result};
use crate::model::{NeuronId, SpikeId};

const LEAF_CAPACITY: usize = 16;
const MAX_DEPTH: usize = 24;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Rect {
    pub x0: f64,
    pub y0: f64,
    pub x1: f64,
    pub y1: f64,
}

impl Rect {
    pub fn contains(&self, x: f64, y: f64) -> bool {
        x >= self.x0 && x <= self.x1 && y >= self.y0 && y <= self.y1
    }

    pub fn intersects(&self, o: &Rect) -> bool {
        self.x0 <= o.x1 && o.x0 <= self.x1 && self.y0 <= o.y1 && o.y0 <= self.y1
    }
}

enum Node<T> {
    Leaf(Vec<(f64, f64, T)>),
    Split(Box<[QuadTree<T>; 4]>),
}

pub struct QuadTree<T> {
    bounds: Rect,
    depth: usize,
    node: Node<T>,
}

impl<T: Copy> QuadTree<T> {
    pub fn new(bounds: Rect) -> Self {
        Self::with_depth(bounds, 0)
    }

    fn with_depth(bounds: Rect, depth: usize) -> Self {
        QuadTree {
            bounds,
            depth,
            node: Node::Leaf(Vec::new()),
        }
    }

    /// Points outside the bounds are ignored; returns whether it was stored.
    pub fn insert(&mut self, x: f64, y: f64, item: T) -> bool {
        if !self.bounds.contains(x, y) {
            return false;
        }
        match &mut self.node {
            Node::Leaf(points) => {
                points.push((x, y, item));
                if points.len() > LEAF_CAPACITY && self.depth < MAX_DEPTH {
                    self.split();
                }
                true
            }
            Node::Split(children) => children.iter_mut().any(|c| c.insert(x, y, item)),
        }
    }

    fn split(&mut self) {
        let Rect { x0, y0, x1, y1 } = self.bounds;
        let (mx, my) = (0.5 * (x0 + x1), 0.5 * (y0 + y1));
        let d = self.depth + 1;
        let mut children = Box::new([
            QuadTree::with_depth(Rect { x0, y0, x1: mx, y1: my }, d),
            QuadTree::with_depth(Rect { x0: mx, y0, x1, y1: my }, d),
            QuadTree::with_depth(Rect { x0, y0: my, x1: mx, y1 }, d),
            QuadTree::with_depth(Rect { x0: mx, y0: my, x1, y1 }, d),
        ]);
        if let Node::Leaf(points) = std::mem::replace(&mut self.node, Node::Leaf(Vec::new())) {
            for (x, y, item) in points {
                // Boundary points go to the first child that accepts them.
                let placed = children.iter_mut().any(|c| c.insert(x, y, item));
                debug_assert!(placed);
            }
        }
        self.node = Node::Split(children);
    }

    /// Calls `f` for every stored point inside `query` (inclusive).
    pub fn query(&self, query: &Rect, f: &mut impl FnMut(f64, f64, T)) {
        if !self.bounds.intersects(query) {
            return;
        }
        match &self.node {
            Node::Leaf(points) => {
                for &(x, y, item) in points {
                    if query.contains(x, y) {
                        f(x, y, item);
                    }
                }
            }
            Node::Split(children) => {
                for c in children.iter() {
                    c.query(query, f);
                }
            }
        }
    }
}

/// Second-order graph built by range queries instead of the synapse join.
///
/// For every neuron, the pairs of its spikes that receive edges (one spike
/// from each graph) are stored as points `(t_a, t_b)` in a quadtree. A pair
/// `(u_a, u_b)` of spikes with outgoing edges looks up, for each edge
/// `u_a -> v_a`, the pairs at `t_a = t(v_a)` whose `t_b` lies in the lag
/// range of graph B, and keeps those where `u_b -> v_b` is an edge. The work
/// grows with the per-neuron products of spike counts, so this is a cross-check
/// and not the production path.
pub fn build_second_order_graph_quadtree(
    a: &ActivityGraph,
    b: &ActivityGraph,
    self_mode: bool,
) -> Result<SecondOrderGraph> {
    let b = if self_mode { a } else { b };
    if a.network_shape() != b.network_shape() {
        return Err(Error::NetworkMismatch);
    }
    let n_neurons = a.network_shape().0;
    let (ta, tb) = (a.train(), b.train());
    let lag_b = b.edges().iter().fold((f64::INFINITY, 0.0f64), |(lo, hi), e| {
        let lag = tb.time(e.post) - tb.time(e.pre);
        (lo.min(lag), hi.max(lag))
    });

    let group = |g: &ActivityGraph, pick: &dyn Fn(SpikeId) -> bool| {
        let mut by: Vec<Vec<SpikeId>> = vec![Vec::new(); n_neurons];
        for s in g.vertices().filter(|&s| pick(s)) {
            by[g.train().neuron(s).index()].push(s);
        }
        by
    };
    let with_in_a = group(a, &|s| a.in_edges(s).next().is_some());
    let with_in_b = group(b, &|s| b.in_edges(s).next().is_some());
    let with_out_a = group(a, &|s| !a.out_edges(s).is_empty());
    let with_out_b = group(b, &|s| !b.out_edges(s).is_empty());

    let canonical = |x: SpikeId, y: SpikeId| !self_mode || x < y;
    let mut trees: HashMap<NeuronId, QuadTree<(SpikeId, SpikeId)>> = HashMap::new();
    for n in 0..n_neurons {
        let (xs, ys) = (&with_in_a[n], &with_in_b[n]);
        if xs.is_empty() || ys.is_empty() {
            continue;
        }
        let span = |g: &crate::model::SpikeTrain, v: &[SpikeId]| {
            v.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &s| {
                (lo.min(g.time(s)), hi.max(g.time(s)))
            })
        };
        let (x0, x1) = span(ta, xs);
        let (y0, y1) = span(tb, ys);
        let mut tree = QuadTree::new(Rect { x0, y0, x1, y1 });
        for &x in xs {
            for &y in ys {
                if canonical(x, y) {
                    tree.insert(ta.time(x), tb.time(y), (x, y));
                }
            }
        }
        trees.insert(NeuronId(n as u32), tree);
    }

    let mut pairs: Vec<((SpikeId, SpikeId), (SpikeId, SpikeId))> = Vec::new();
    for n in 0..n_neurons {
        for &ua in &with_out_a[n] {
            for &ub in &with_out_b[n] {
                if !canonical(ua, ub) {
                    continue;
                }
                for e in a.out_edges(ua) {
                    let Some(tree) = trees.get(&ta.neuron(e.post)) else { continue };
                    let t = ta.time(e.post);
                    let q = Rect {
                        x0: t,
                        x1: t,
                        y0: tb.time(ub) + lag_b.0,
                        y1: tb.time(ub) + lag_b.1,
                    };
                    tree.query(&q, &mut |_, _, (va, vb)| {
                        if va == e.post && b.contains_edge(ub, vb) {
                            pairs.push(((ua, ub), (va, vb)));
                        }
                    });
                }
            }
        }
    }
    pairs.sort_unstable();
    pairs.dedup();

    let mut keys: Vec<(SpikeId, SpikeId)> = pairs.iter().flat_map(|&(u, v)| [u, v]).collect();
    keys.sort_unstable();
    keys.dedup();
    let index = |k: (SpikeId, SpikeId)| keys.binary_search(&k).expect("collected") as u32;
    let edges = pairs.iter().map(|&(u, v)| (index(u), index(v))).collect();
    let vertices = keys
        .iter()
        .map(|&(x, y)| SecondOrderVertex {
            neuron: ta.neuron(x),
            spike_a: x,
            spike_b: y,
        })
        .collect();
    Ok(SecondOrderGraph::from_parts(a, b, self_mode, vertices, edges))
}
