//! Exact subgraph matching at toy scale through the modular product.
//!
//! Maximal cliques of the modular product of two digraphs are exactly the
//! maximal isomorphisms between induced subgraphs. Clique enumeration is
//! exponential and the product is dense, so everything here is bounded to a
//! few hundred product vertices and serves as a reference for the
//! second-order construction.

use crate::error::{Error, Result};

/// Largest admissible `|V_G| * |V_H|`.
pub const PRODUCT_VERTEX_LIMIT: usize = 400;

/// Largest induced subgraph checked by exhaustive permutation.
pub const PERMUTATION_LIMIT: usize = 8;

/// Small directed graph without self-loops, as an adjacency matrix.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Digraph {
    adj: Vec<Vec<bool>>,
}

impl Digraph {
    pub fn new(n: usize, edges: &[(usize, usize)]) -> Self {
        let mut adj = vec![vec![false; n]; n];
        for &(u, v) in edges {
            if u != v {
                adj[u][v] = true;
            }
        }
        Digraph { adj }
    }

    pub fn len(&self) -> usize {
        self.adj.len()
    }

    pub fn is_empty(&self) -> bool {
        self.adj.is_empty()
    }

    #[inline]
    pub fn has_edge(&self, u: usize, v: usize) -> bool {
        self.adj[u][v]
    }

    pub fn edges(&self) -> Vec<(usize, usize)> {
        let n = self.len();
        (0..n)
            .flat_map(|u| (0..n).map(move |v| (u, v)))
            .filter(|&(u, v)| self.adj[u][v])
            .collect()
    }
}

/// Modular product of `G` and `H`; vertex `(u, v)` has index `u * |V_H| + v`.
#[derive(Clone, Debug)]
pub struct ModularProduct {
    g_len: usize,
    h_len: usize,
    adj: Vec<Vec<bool>>,
}

impl ModularProduct {
    pub fn len(&self) -> usize {
        self.adj.len()
    }

    pub fn is_empty(&self) -> bool {
        self.adj.is_empty()
    }

    pub fn pair(&self, i: usize) -> (usize, usize) {
        (i / self.h_len, i % self.h_len)
    }

    pub fn index(&self, u: usize, v: usize) -> usize {
        u * self.h_len + v
    }

    pub fn has_edge(&self, from: (usize, usize), to: (usize, usize)) -> bool {
        self.adj[self.index(from.0, from.1)][self.index(to.0, to.1)]
    }

    pub fn edge_count(&self) -> usize {
        self.adj.iter().map(|r| r.iter().filter(|&&b| b).count()).sum()
    }

    /// Edge present in both directions.
    fn mutual(&self, i: usize, j: usize) -> bool {
        self.adj[i][j] && self.adj[j][i]
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.g_len, self.h_len)
    }
}

fn check_size(g: &Digraph, h: &Digraph) -> Result<()> {
    let got = g.len() * h.len();
    if got > PRODUCT_VERTEX_LIMIT {
        return Err(Error::Intractable {
            got,
            limit: PRODUCT_VERTEX_LIMIT,
        });
    }
    Ok(())
}

/// `(u, v) -> (u', v')` iff `u != u'`, `v != v'` and `u -> u'` in `G`
/// exactly when `v -> v'` in `H`.
pub fn modular_product(g: &Digraph, h: &Digraph) -> Result<ModularProduct> {
    check_size(g, h)?;
    let (gn, hn) = (g.len(), h.len());
    let mut adj = vec![vec![false; gn * hn]; gn * hn];
    for u in 0..gn {
        for v in 0..hn {
            for u2 in 0..gn {
                if u2 == u {
                    continue;
                }
                for v2 in 0..hn {
                    if v2 == v {
                        continue;
                    }
                    adj[u * hn + v][u2 * hn + v2] = g.has_edge(u, u2) == h.has_edge(v, v2);
                }
            }
        }
    }
    Ok(ModularProduct {
        g_len: gn,
        h_len: hn,
        adj,
    })
}

/// Maximal cliques of the mutual-edge graph (Bron-Kerbosch with pivoting),
/// each sorted, listed in lexicographic order.
pub fn maximal_cliques(p: &ModularProduct) -> Vec<Vec<usize>> {
    fn expand(p: &ModularProduct, r: &mut Vec<usize>, cand: Vec<usize>, mut excl: Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if cand.is_empty() {
            if excl.is_empty() && !r.is_empty() {
                let mut c = r.clone();
                c.sort_unstable();
                out.push(c);
            }
            return;
        }
        let pivot = cand
            .iter()
            .chain(&excl)
            .copied()
            .max_by_key(|&u| cand.iter().filter(|&&v| p.mutual(u, v)).count())
            .expect("candidates are non-empty");
        let branch: Vec<usize> = cand.iter().copied().filter(|&v| !p.mutual(pivot, v)).collect();
        let mut cand = cand;
        for v in branch {
            r.push(v);
            let c2 = cand.iter().copied().filter(|&w| p.mutual(v, w)).collect();
            let x2 = excl.iter().copied().filter(|&w| p.mutual(v, w)).collect();
            expand(p, r, c2, x2, out);
            r.pop();
            cand.retain(|&w| w != v);
            excl.push(v);
        }
    }
    let mut out = Vec::new();
    expand(p, &mut Vec::new(), (0..p.len()).collect(), Vec::new(), &mut out);
    out.sort();
    out
}

/// Exhaustive check that `G[gs]` and `H[hs]` are isomorphic.
pub fn induced_isomorphic(g: &Digraph, gs: &[usize], h: &Digraph, hs: &[usize]) -> bool {
    if gs.len() != hs.len() {
        return false;
    }
    assert!(gs.len() <= PERMUTATION_LIMIT, "exhaustive check limited to {PERMUTATION_LIMIT} vertices");
    let n = gs.len();
    let mut perm: Vec<usize> = (0..n).collect();
    let matches = |perm: &[usize]| {
        (0..n).all(|i| (0..n).all(|j| i == j || g.has_edge(gs[i], gs[j]) == h.has_edge(hs[perm[i]], hs[perm[j]])))
    };
    // Heap's algorithm.
    let mut c = vec![0usize; n];
    if matches(&perm) {
        return true;
    }
    let mut i = 0;
    while i < n {
        if c[i] < i {
            if i % 2 == 0 {
                perm.swap(0, i);
            } else {
                perm.swap(c[i], i);
            }
            if matches(&perm) {
                return true;
            }
            c[i] += 1;
            i = 0;
        } else {
            c[i] = 0;
            i += 1;
        }
    }
    false
}

/// A maximal clique read back as a correspondence between induced subgraphs.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CliqueMatch {
    /// `(u, v)` pairs, sorted by `u`.
    pub pairs: Vec<(usize, usize)>,
    pub g_vertices: Vec<usize>,
    pub h_vertices: Vec<usize>,
    /// Outcome of the independent permutation check (`None` above its size limit).
    pub verified: Option<bool>,
}

/// Enumerates maximal cliques of the modular product and the induced subgraph
/// pairs they match.
pub fn cliques_as_isomorphisms(g: &Digraph, h: &Digraph) -> Result<Vec<CliqueMatch>> {
    let p = modular_product(g, h)?;
    Ok(maximal_cliques(&p)
        .into_iter()
        .map(|c| {
            let pairs: Vec<(usize, usize)> = c.iter().map(|&i| p.pair(i)).collect();
            let g_vertices: Vec<usize> = pairs.iter().map(|x| x.0).collect();
            let h_vertices: Vec<usize> = pairs.iter().map(|x| x.1).collect();
            let verified = (pairs.len() <= PERMUTATION_LIMIT)
                .then(|| induced_isomorphic(g, &g_vertices, h, &h_vertices));
            CliqueMatch {
                pairs,
                g_vertices,
                h_vertices,
                verified,
            }
        })
        .collect())
}
