//! Decomposition of spiking activity into causal activity threads.
//!
//! The pipeline runs [`netsim`] (or loads a recording), builds the causal
//! activity graph with [`causal`], splits it into threads with [`threads`],
//! finds recurring subthreads with [`analogs`] and relates threads to each
//! other with [`relations`].

pub mod analogs;
pub mod causal;
pub mod error;
pub mod exec;
pub mod io;
pub mod model;
pub mod netsim;
pub mod pipeline;
pub mod plot;
pub mod relations;
pub mod threads;
pub mod union_find;

pub use error::{Error, Result};
pub use exec::Execution;
