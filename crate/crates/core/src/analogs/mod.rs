//! Analogous subthreads: recurring causal patterns found as weakly connected
//! components of the second-order activity graph.

mod modular;
mod quadtree;
mod second_order;

pub use modular::{
    cliques_as_isomorphisms, induced_isomorphic, maximal_cliques, modular_product, CliqueMatch, Digraph,
    ModularProduct, PERMUTATION_LIMIT, PRODUCT_VERTEX_LIMIT,
};
pub use quadtree::{build_second_order_graph_quadtree, QuadTree, Rect};
pub use second_order::{
    assign_gnats, build_second_order_graph, extract_analogous_subthreads, is_exact_isomorphism,
    isomorphic_fraction, AnalogousSubthread, SecondOrderGraph, SecondOrderVertex, DEFAULT_MIN_SPIKES,
};
