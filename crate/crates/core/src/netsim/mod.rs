//! Izhikevich network generation and simulation with optional STDP.
//!
//! All randomness comes from ChaCha8 generators seeded with explicit 64-bit
//! seeds, so networks, stimuli and spike trains are bit-reproducible.

mod izhikevich;
mod network;
mod stdp;
mod stimulus;

pub use izhikevich::{simulate, IzhikevichParams, SimConfig, SimOutput, Simulator, SPIKE_PEAK};
pub use network::{build_network, torus_distance, ConnectivityProfile, NetworkSpec};
pub use stdp::{stdp_step, PlasticityEvent, Stdp, StdpConfig};
pub use stimulus::{make_pattern, poisson_spikes, Pattern, StimulusConfig};
