use serde::{Deserialize, Serialize};

use super::stdp::{Stdp, StdpConfig};
use super::stimulus::StimulusConfig;
use crate::error::{Error, Result};
use crate::model::{validate_network, Connectivity, Network, NeuronId, Spike, SpikeTrain, MIN_DELAY_MS};

/// Membrane potential at which a spike is emitted, mV.
pub const SPIKE_PEAK: f64 = 30.0;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct IzhikevichParams {
    pub a: f64,
    pub b: f64,
    pub c: f64,
    pub d: f64,
}

impl IzhikevichParams {
    pub const REGULAR_SPIKING: IzhikevichParams = IzhikevichParams {
        a: 0.02,
        b: 0.2,
        c: -65.0,
        d: 8.0,
    };
    pub const FAST_SPIKING: IzhikevichParams = IzhikevichParams {
        a: 0.1,
        b: 0.2,
        c: -65.0,
        d: 2.0,
    };

    pub fn validate(&self) -> Result<()> {
        let finite = [self.a, self.b, self.c, self.d].iter().all(|x| x.is_finite());
        if !finite || self.a <= 0.0 {
            return Err(Error::param("izhikevich", "constants must be finite with a > 0"));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SimConfig {
    pub dt: f64,
    pub duration: f64,
    pub plasticity: Option<StdpConfig>,
}

impl Default for SimConfig {
    fn default() -> Self {
        SimConfig {
            dt: 0.5,
            duration: 1000.0,
            plasticity: None,
        }
    }
}

#[derive(Clone, Debug)]
pub struct SimOutput {
    pub train: SpikeTrain,
    /// Input network carrying the final weights.
    pub network: Network,
}

/// Stateful forward-Euler integrator; successive [`Simulator::run`] calls
/// continue from where the previous one stopped, including in-flight spikes.
pub struct Simulator {
    net: Network,
    conn: Connectivity,
    params: Vec<IzhikevichParams>,
    weights: Vec<f64>,
    v: Vec<f64>,
    u: Vec<f64>,
    current: Vec<f64>,
    dt: f64,
    step: u64,
    queue: Vec<Vec<u32>>,
    stdp: Option<Stdp>,
}

impl Simulator {
    /// Excitatory neurons get regular-spiking constants, inhibitory ones fast-spiking.
    pub fn new(net: &Network, dt: f64) -> Result<Self> {
        if !(dt > 0.0 && dt <= MIN_DELAY_MS) {
            return Err(Error::param("dt", format!("{dt} must lie in (0, {MIN_DELAY_MS}] ms")));
        }
        if let Some(v) = validate_network(net).first() {
            return Err(Error::InvalidNetwork(v.to_string()));
        }
        let params: Vec<IzhikevichParams> = net
            .neurons
            .iter()
            .map(|n| {
                if n.excitatory {
                    IzhikevichParams::REGULAR_SPIKING
                } else {
                    IzhikevichParams::FAST_SPIKING
                }
            })
            .collect();
        let max_delay = net.synapses.iter().map(|s| s.delay).fold(MIN_DELAY_MS, f64::max);
        let slots = (max_delay / dt).ceil() as usize + 3;
        let v = vec![-65.0; net.len()];
        let u = params.iter().zip(&v).map(|(p, v)| p.b * v).collect();
        Ok(Simulator {
            conn: net.connectivity(),
            weights: net.weights(),
            current: vec![0.0; net.len()],
            net: net.clone(),
            params,
            v,
            u,
            dt,
            step: 0,
            queue: vec![Vec::new(); slots],
            stdp: None,
        })
    }

    pub fn set_params(&mut self, neuron: NeuronId, params: IzhikevichParams) -> Result<()> {
        params.validate()?;
        self.params[neuron.index()] = params;
        Ok(())
    }

    /// Turns plasticity on (fresh traces) or off.
    pub fn set_plasticity(&mut self, cfg: Option<StdpConfig>) -> Result<()> {
        self.stdp = match cfg {
            Some(cfg) => Some(Stdp::new(&self.net, cfg)?),
            None => None,
        };
        Ok(())
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn network(&self) -> Network {
        self.net.with_weights(&self.weights)
    }

    /// Advances by `duration` ms. Spike times are relative to the start of this call.
    pub fn run(&mut self, stim: &StimulusConfig, duration: f64) -> Result<SpikeTrain> {
        if !(duration > 0.0 && duration.is_finite()) {
            return Err(Error::param("duration", format!("{duration} must be positive")));
        }
        stim.validate()?;
        let forced = stim.forced_spikes(self.net.len(), duration);
        let n_steps = (duration / self.dt).ceil() as u64;
        let start = self.step;
        let dt = self.dt;
        let slots = self.queue.len() as u64;
        let mut spikes = Vec::new();
        let mut next_forced = 0;

        for k in 0..n_steps {
            let t0 = k as f64 * dt;
            let global = start + k;
            self.current.fill(stim.tonic_current);

            let mut arriving = std::mem::take(&mut self.queue[(global % slots) as usize]);
            for &syn in &arriving {
                let s = &self.net.synapses[syn as usize];
                self.current[s.post.index()] += self.weights[syn as usize] / dt;
                if let Some(stdp) = self.stdp.as_mut() {
                    stdp.on_pre_arrival(syn, t0, &mut self.weights);
                }
            }
            arriving.clear();
            self.queue[(global % slots) as usize] = arriving;

            while next_forced < forced.len() && forced[next_forced].time < t0 + dt {
                let Spike { neuron, time } = forced[next_forced];
                self.fire(neuron, time, start, &mut spikes);
                next_forced += 1;
            }

            let half = 0.5 * dt;
            let t_end = ((k + 1) as f64 * dt).min(duration);
            for n in 0..self.v.len() {
                let p = self.params[n];
                let (mut v, mut u) = (self.v[n], self.u[n]);
                let i = self.current[n];
                v += half * (0.04 * v * v + 5.0 * v + 140.0 - u + i);
                v += half * (0.04 * v * v + 5.0 * v + 140.0 - u + i);
                u += dt * p.a * (p.b * v - u);
                if !(v.is_finite() && u.is_finite()) {
                    return Err(Error::NumericalBlowUp {
                        neuron: NeuronId(n as u32),
                        time: t_end,
                    });
                }
                self.v[n] = v;
                self.u[n] = u;
                if v >= SPIKE_PEAK {
                    self.fire(NeuronId(n as u32), t_end, start, &mut spikes);
                }
            }
        }
        self.step = start + n_steps;
        SpikeTrain::from_events(spikes, Some(duration))
    }

    fn fire(&mut self, neuron: NeuronId, time: f64, start: u64, out: &mut Vec<Spike>) {
        let n = neuron.index();
        let p = self.params[n];
        self.v[n] = p.c;
        self.u[n] += p.d;
        out.push(Spike { neuron, time });
        let slots = self.queue.len() as u64;
        for &syn in self.conn.outgoing(neuron) {
            let delay = self.net.synapses[syn as usize].delay;
            let arrival = start + ((time + delay) / self.dt).round() as u64;
            self.queue[(arrival % slots) as usize].push(syn);
        }
        if let Some(stdp) = self.stdp.as_mut() {
            stdp.on_post_spike(neuron, time, &self.conn, &mut self.weights);
        }
    }
}

/// One simulation from rest; returns the emitted spikes and the final weights.
pub fn simulate(net: &Network, stim: &StimulusConfig, cfg: &SimConfig) -> Result<SimOutput> {
    let mut sim = Simulator::new(net, cfg.dt)?;
    sim.set_plasticity(cfg.plasticity)?;
    let train = sim.run(stim, cfg.duration)?;
    Ok(SimOutput {
        train,
        network: sim.network(),
    })
}
