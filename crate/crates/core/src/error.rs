use std::path::PathBuf;

use thiserror::Error;

use crate::model::NeuronId;

#[derive(Debug, Error)]
pub enum Error {
    #[error("spike #{index} (neuron {neuron}) has invalid time {time}")]
    InvalidSpikeTime {
        index: usize,
        neuron: NeuronId,
        time: f64,
    },
    #[error("spike #{index} at {time} ms lies beyond the train duration {duration} ms")]
    SpikeBeyondDuration {
        index: usize,
        time: f64,
        duration: f64,
    },
    #[error("spike #{index} references neuron {neuron}, absent from a {count}-neuron network")]
    UnknownNeuron {
        index: usize,
        neuron: NeuronId,
        count: usize,
    },
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },
    #[error("network is invalid: {0}")]
    InvalidNetwork(String),
    #[error("numerical blow-up at neuron {neuron}, t = {time} ms")]
    NumericalBlowUp { neuron: NeuronId, time: f64 },
    #[error("activity graphs were built over different networks")]
    NetworkMismatch,
    #[error("toy-scale limit exceeded: {got} product vertices > {limit}; exact subgraph matching is intractable at this size")]
    Intractable { got: usize, limit: usize },
    #[error("unknown {what} `{name}`")]
    UnknownName { what: &'static str, name: String },
    #[error("subthread {subthread} projects outside any thread")]
    OrphanSubthread { subthread: usize },
    #[error("malformed {format} at line {line}: {reason}")]
    Format {
        format: &'static str,
        line: usize,
        reason: String,
    },
    #[error("{} not found; run `{stage}` first", file.display())]
    MissingStage { file: PathBuf, stage: &'static str },
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("i/o: {0}")]
    Stream(#[from] std::io::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

impl Error {
    pub(crate) fn param(name: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidParameter {
            name,
            reason: reason.into(),
        }
    }
}
