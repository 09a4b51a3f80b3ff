use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exec::{self, Execution};
use crate::model::{Network, Neuron, NeuronId, Synapse, MIN_DELAY_MS};

/// Distance-dependent connection probability
/// `p(r) = p_max * (1 - 1 / (1 + exp(-sigma * (r - mu))))`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConnectivityProfile {
    pub p_max: f64,
    /// Half-probability distance, micrometers.
    pub mu: f64,
    /// Steepness, inverse micrometers.
    pub sigma: f64,
}

impl ConnectivityProfile {
    pub fn new(p_max: f64, mu: f64, sigma: f64) -> Result<Self> {
        let p = ConnectivityProfile { p_max, mu, sigma };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.p_max) {
            return Err(Error::param("p_max", format!("{} is not a probability", self.p_max)));
        }
        if !(self.sigma > 0.0 && self.sigma.is_finite()) {
            return Err(Error::param("sigma", format!("{} must be positive", self.sigma)));
        }
        if !self.mu.is_finite() {
            return Err(Error::param("mu", "must be finite"));
        }
        Ok(())
    }

    #[inline]
    pub fn probability(&self, r: f64) -> f64 {
        self.p_max * (1.0 - 1.0 / (1.0 + (-self.sigma * (r - self.mu)).exp()))
    }
}

/// Euclidean distance on a `width` x `height` torus.
#[inline]
pub fn torus_distance(p1: (f64, f64), p2: (f64, f64), width: f64, height: f64) -> f64 {
    let wrap = |d: f64, span: f64| {
        let d = d.abs() % span;
        d.min(span - d)
    };
    let dx = wrap(p1.0 - p2.0, width);
    let dy = wrap(p1.1 - p2.1, height);
    dx.hypot(dy)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NetworkSpec {
    pub n_exc: usize,
    pub n_inh: usize,
    pub width: f64,
    pub height: f64,
    /// Excitatory onto excitatory and inhibitory targets.
    pub exc_profile: ConnectivityProfile,
    /// Inhibitory onto excitatory targets.
    pub inh_profile: ConnectivityProfile,
    /// Uniform range of excitatory delays, ms.
    pub exc_delay: (f64, f64),
    pub inh_delay: f64,
    pub exc_weight: f64,
    pub inh_weight: f64,
    pub seed: u64,
}

impl Default for NetworkSpec {
    fn default() -> Self {
        NetworkSpec {
            n_exc: 4000,
            n_inh: 1000,
            width: 100.0,
            height: 100.0,
            exc_profile: ConnectivityProfile {
                p_max: 0.4,
                mu: 10.0,
                sigma: 1.0,
            },
            inh_profile: ConnectivityProfile {
                p_max: 0.5,
                mu: 10.0,
                sigma: 1.0,
            },
            exc_delay: (1.0, 20.0),
            inh_delay: 1.0,
            exc_weight: 6.0,
            inh_weight: -5.0,
            seed: 1,
        }
    }
}

impl NetworkSpec {
    /// Keeps the default neuron density on a smaller torus with `n_exc + n_inh` neurons.
    pub fn density_scaled(n_exc: usize, n_inh: usize, seed: u64) -> Self {
        let d = NetworkSpec::default();
        let scale = ((n_exc + n_inh) as f64 / (d.n_exc + d.n_inh) as f64).sqrt();
        NetworkSpec {
            n_exc,
            n_inh,
            width: d.width * scale,
            height: d.height * scale,
            seed,
            ..d
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_exc == 0 || self.n_inh == 0 {
            return Err(Error::param("n_exc/n_inh", "population sizes must be positive"));
        }
        if self.n_exc + self.n_inh > u32::MAX as usize {
            return Err(Error::param("n_exc/n_inh", "too many neurons"));
        }
        if !(self.width > 0.0 && self.height > 0.0 && self.width.is_finite() && self.height.is_finite()) {
            return Err(Error::param("width/height", "must be finite and positive"));
        }
        self.exc_profile.validate()?;
        self.inh_profile.validate()?;
        let (lo, hi) = self.exc_delay;
        if !(lo >= MIN_DELAY_MS && hi >= lo && hi.is_finite()) {
            return Err(Error::param("exc_delay", format!("[{lo}, {hi}] is not a valid delay range")));
        }
        if !(self.inh_delay >= MIN_DELAY_MS && self.inh_delay.is_finite()) {
            return Err(Error::param("inh_delay", format!("{} below minimum delay", self.inh_delay)));
        }
        if !(self.exc_weight >= 0.0 && self.inh_weight <= 0.0) {
            return Err(Error::param("weights", "excitatory must be >= 0, inhibitory <= 0"));
        }
        Ok(())
    }
}

/// Places neurons uniformly on the torus and connects every ordered pair
/// independently with the profile probability of their torus distance.
///
/// Excitatory neurons (ids `0..n_exc`) project onto all neurons, inhibitory
/// ones onto excitatory neurons only. Each presynaptic neuron draws from its
/// own ChaCha8 stream, so the result does not depend on the worker count.
pub fn build_network(spec: &NetworkSpec, exec: Execution) -> Result<Network> {
    spec.validate()?;
    let n = spec.n_exc + spec.n_inh;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let neurons: Vec<Neuron> = (0..n)
        .map(|i| Neuron {
            x: rng.gen_range(0.0..spec.width),
            y: rng.gen_range(0.0..spec.height),
            excitatory: i < spec.n_exc,
        })
        .collect();

    let synapses = exec::flat_map_range(exec, n, |pre, out: &mut Vec<Synapse>| {
        let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
        rng.set_stream(pre as u64 + 1);
        let excitatory = pre < spec.n_exc;
        let (profile, targets) = if excitatory {
            (&spec.exc_profile, n)
        } else {
            (&spec.inh_profile, spec.n_exc)
        };
        let from = (neurons[pre].x, neurons[pre].y);
        for post in 0..targets {
            if post == pre {
                continue;
            }
            let r = torus_distance(from, (neurons[post].x, neurons[post].y), spec.width, spec.height);
            if rng.gen::<f64>() >= profile.probability(r) {
                continue;
            }
            let (weight, delay) = if excitatory {
                let (lo, hi) = spec.exc_delay;
                let delay = if hi > lo { rng.gen_range(lo..=hi) } else { lo };
                (spec.exc_weight, delay)
            } else {
                (spec.inh_weight, spec.inh_delay)
            };
            out.push(Synapse {
                pre: NeuronId(pre as u32),
                post: NeuronId(post as u32),
                weight,
                delay,
            });
        }
    });

    Ok(Network {
        width: spec.width,
        height: spec.height,
        neurons,
        synapses,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::validate_network;

    #[test]
    fn sigmoid_midpoint_and_tail() {
        let p = ConnectivityProfile::new(0.4, 10.0, 1.0).unwrap();
        assert!((p.probability(10.0) - 0.2).abs() < 1e-15);
        assert!(p.probability(1e3) < 1e-300);
        assert!(p.probability(0.0) > 0.39);
    }

    #[test]
    fn invalid_profile_rejected() {
        assert!(ConnectivityProfile::new(1.5, 10.0, 1.0).is_err());
        let spec = NetworkSpec {
            exc_profile: ConnectivityProfile {
                p_max: 1.2,
                mu: 10.0,
                sigma: 1.0,
            },
            ..NetworkSpec::density_scaled(8, 2, 1)
        };
        assert!(build_network(&spec, Execution::Sequential).is_err());
    }

    #[test]
    fn torus_wraps() {
        assert!((torus_distance((0.0, 0.0), (99.0, 0.0), 100.0, 100.0) - 1.0).abs() < 1e-12);
        assert_eq!(torus_distance((0.0, 0.0), (50.0, 0.0), 100.0, 100.0), 50.0);
        assert_eq!(torus_distance((10.0, 10.0), (10.0, 10.0), 100.0, 100.0), 0.0);
        let d = torus_distance((1.0, 98.0), (99.0, 2.0), 100.0, 100.0);
        assert!((d - (4.0f64 + 16.0).sqrt()).abs() < 1e-12);
    }

    #[test]
    fn built_network_is_valid_and_deterministic() {
        let spec = NetworkSpec::density_scaled(160, 40, 7);
        let a = build_network(&spec, Execution::Sequential).unwrap();
        let b = build_network(&spec, Execution::Parallel).unwrap();
        assert_eq!(a, b);
        assert!(validate_network(&a).is_empty());
        assert!(a
            .synapses
            .iter()
            .all(|s| a.is_excitatory(s.pre) || a.is_excitatory(s.post)));
        assert!(a
            .synapses
            .iter()
            .filter(|s| !a.is_excitatory(s.pre))
            .all(|s| s.delay == 1.0 && s.weight == -5.0));
        assert!(a
            .synapses
            .iter()
            .filter(|s| a.is_excitatory(s.pre))
            .all(|s| (1.0..=20.0).contains(&s.delay)));
    }
}
