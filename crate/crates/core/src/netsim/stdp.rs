//! Pair-based STDP with exponential traces.
//!
//! Presynaptic events are taken at their arrival on the postsynaptic side
//! (spike time plus conduction delay). Every arrival depresses the synapse by
//! `a_minus * y`, where `y` sums `exp(-dt / tau_minus)` over earlier
//! postsynaptic spikes; every postsynaptic spike potentiates each plastic
//! incoming synapse by `a_plus * x`, with `x` the matching sum over earlier
//! arrivals. Weights are clipped to `[0, w_max]` after each update.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{Connectivity, Network, NeuronId};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct StdpConfig {
    pub a_plus: f64,
    pub a_minus: f64,
    pub tau_plus: f64,
    pub tau_minus: f64,
    pub w_max: f64,
    /// Reserved for batched updates; traces are applied per event.
    pub update_interval: f64,
}

impl Default for StdpConfig {
    fn default() -> Self {
        StdpConfig {
            a_plus: 0.1,
            a_minus: 0.12,
            tau_plus: 20.0,
            tau_minus: 20.0,
            w_max: 10.0,
            update_interval: 1000.0,
        }
    }
}

impl StdpConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.a_plus >= 0.0 && self.a_minus >= 0.0) {
            return Err(Error::param("a_plus/a_minus", "amplitudes must be non-negative"));
        }
        if !(self.tau_plus > 0.0 && self.tau_minus > 0.0) {
            return Err(Error::param("tau_plus/tau_minus", "time constants must be positive"));
        }
        if !(self.w_max > 0.0 && self.w_max.is_finite()) {
            return Err(Error::param("w_max", "must be positive"));
        }
        if !(self.update_interval > 0.0) {
            return Err(Error::param("update_interval", "must be positive"));
        }
        Ok(())
    }
}

/// Exponentially decaying event count, decayed lazily on access.
#[derive(Clone, Copy, Debug, Default)]
struct Trace {
    value: f64,
    at: f64,
}

impl Trace {
    #[inline]
    fn value_at(&self, t: f64, tau: f64) -> f64 {
        if self.value == 0.0 {
            0.0
        } else {
            self.value * (-(t - self.at) / tau).exp()
        }
    }

    #[inline]
    fn bump(&mut self, t: f64, tau: f64) {
        self.value = self.value_at(t, tau) + 1.0;
        self.at = t;
    }
}

/// A plasticity-relevant event.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum PlasticityEvent {
    /// Presynaptic spike arriving through `synapse` at `time`.
    PreArrival { synapse: u32, time: f64 },
    PostSpike { neuron: NeuronId, time: f64 },
}

impl PlasticityEvent {
    fn time(&self) -> f64 {
        match *self {
            PlasticityEvent::PreArrival { time, .. } | PlasticityEvent::PostSpike { time, .. } => time,
        }
    }

    fn rank(&self) -> u8 {
        match self {
            PlasticityEvent::PreArrival { .. } => 0,
            PlasticityEvent::PostSpike { .. } => 1,
        }
    }
}

/// Online STDP state for one network.
#[derive(Clone, Debug)]
pub struct Stdp {
    cfg: StdpConfig,
    plastic: Vec<bool>,
    syn_post: Vec<NeuronId>,
    pre: Vec<Trace>,
    post: Vec<Trace>,
}

impl Stdp {
    /// Synapses leaving excitatory neurons are plastic; the rest stay fixed.
    pub fn new(net: &Network, cfg: StdpConfig) -> Result<Self> {
        cfg.validate()?;
        Ok(Stdp {
            cfg,
            plastic: net.synapses.iter().map(|s| net.is_excitatory(s.pre)).collect(),
            syn_post: net.synapses.iter().map(|s| s.post).collect(),
            pre: vec![Trace::default(); net.synapses.len()],
            post: vec![Trace::default(); net.len()],
        })
    }

    pub fn is_plastic(&self, synapse: u32) -> bool {
        self.plastic[synapse as usize]
    }

    fn clip(&self, w: f64) -> f64 {
        w.clamp(0.0, self.cfg.w_max)
    }

    pub fn on_pre_arrival(&mut self, synapse: u32, time: f64, weights: &mut [f64]) {
        let s = synapse as usize;
        if !self.plastic[s] {
            return;
        }
        let y = self.post[self.syn_post[s].index()].value_at(time, self.cfg.tau_minus);
        if y > 0.0 {
            weights[s] = self.clip(weights[s] - self.cfg.a_minus * y);
        }
        self.pre[s].bump(time, self.cfg.tau_plus);
    }

    pub fn on_post_spike(
        &mut self,
        neuron: NeuronId,
        time: f64,
        conn: &Connectivity,
        weights: &mut [f64],
    ) {
        for &s in conn.incoming(neuron) {
            let s = s as usize;
            if !self.plastic[s] {
                continue;
            }
            let x = self.pre[s].value_at(time, self.cfg.tau_plus);
            if x > 0.0 {
                weights[s] = self.clip(weights[s] + self.cfg.a_plus * x);
            }
        }
        self.post[neuron.index()].bump(time, self.cfg.tau_minus);
    }
}

/// Replays `history` (stably ordered by time, arrivals before spikes at equal
/// times) through fresh traces and returns the updated weights.
pub fn stdp_step(
    net: &Network,
    weights: &[f64],
    history: &[PlasticityEvent],
    cfg: StdpConfig,
) -> Result<Vec<f64>> {
    let mut stdp = Stdp::new(net, cfg)?;
    let conn = net.connectivity();
    let mut w = weights.to_vec();
    let mut events = history.to_vec();
    events.sort_by(|a, b| a.time().total_cmp(&b.time()).then(a.rank().cmp(&b.rank())));
    for e in events {
        match e {
            PlasticityEvent::PreArrival { synapse, time } => stdp.on_pre_arrival(synapse, time, &mut w),
            PlasticityEvent::PostSpike { neuron, time } => {
                stdp.on_post_spike(neuron, time, &conn, &mut w)
            }
        }
    }
    Ok(w)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{Neuron, Synapse};

    fn pair(pre_exc: bool) -> Network {
        Network {
            width: 10.0,
            height: 10.0,
            neurons: vec![
                Neuron {
                    x: 0.0,
                    y: 0.0,
                    excitatory: pre_exc,
                },
                Neuron {
                    x: 1.0,
                    y: 0.0,
                    excitatory: true,
                },
            ],
            synapses: vec![Synapse {
                pre: NeuronId(0),
                post: NeuronId(1),
                weight: if pre_exc { 5.0 } else { -5.0 },
                delay: 2.0,
            }],
        }
    }

    #[test]
    fn empty_history_leaves_weights() {
        let net = pair(true);
        let w = stdp_step(&net, &[5.0], &[], StdpConfig::default()).unwrap();
        assert_eq!(w, vec![5.0]);
    }

    #[test]
    fn single_pair_potentiates() {
        let net = pair(true);
        let cfg = StdpConfig::default();
        let history = [
            PlasticityEvent::PreArrival {
                synapse: 0,
                time: 10.0,
            },
            PlasticityEvent::PostSpike {
                neuron: NeuronId(1),
                time: 10.0 + cfg.tau_plus,
            },
        ];
        let w = stdp_step(&net, &[5.0], &history, cfg).unwrap();
        assert!((w[0] - (5.0 + cfg.a_plus * (-1.0f64).exp())).abs() < 1e-12);
    }

    #[test]
    fn post_before_pre_depresses_and_clips() {
        let net = pair(true);
        let cfg = StdpConfig {
            a_minus: 3.0,
            ..StdpConfig::default()
        };
        let history = [
            PlasticityEvent::PostSpike {
                neuron: NeuronId(1),
                time: 0.0,
            },
            PlasticityEvent::PreArrival {
                synapse: 0,
                time: 0.0,
            },
        ];
        // Arrival is ordered before the spike at equal times: zero-lag potentiation.
        let w = stdp_step(&net, &[5.0], &history, cfg).unwrap();
        assert_eq!(w, vec![5.0 + cfg.a_plus]);
        let history = [
            PlasticityEvent::PostSpike {
                neuron: NeuronId(1),
                time: 0.0,
            },
            PlasticityEvent::PreArrival {
                synapse: 0,
                time: 1.0,
            },
            PlasticityEvent::PreArrival {
                synapse: 0,
                time: 2.0,
            },
        ];
        let w = stdp_step(&net, &[5.0], &history, cfg).unwrap();
        let after_one = 5.0 - 3.0 * (-1.0f64 / 20.0).exp();
        let expected = (after_one - 3.0 * (-2.0f64 / 20.0).exp()).max(0.0);
        assert!((w[0] - expected).abs() < 1e-12);
        assert!(w[0] >= 0.0);
    }

    #[test]
    fn inhibitory_synapses_are_fixed() {
        let net = pair(false);
        let history = [
            PlasticityEvent::PreArrival {
                synapse: 0,
                time: 0.0,
            },
            PlasticityEvent::PostSpike {
                neuron: NeuronId(1),
                time: 1.0,
            },
        ];
        let w = stdp_step(&net, &[-5.0], &history, StdpConfig::default()).unwrap();
        assert_eq!(w, vec![-5.0]);
    }
}
