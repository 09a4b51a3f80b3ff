use rand::seq::index::sample;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{NeuronId, Spike};

/// A fixed spike pattern over one period, replayed periodically.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Pattern {
    pub neurons: Vec<NeuronId>,
    /// Spikes with times in `[0, period)`, sorted by time then neuron.
    pub spikes: Vec<Spike>,
    pub period: f64,
}

impl Pattern {
    pub fn validate(&self) -> Result<()> {
        if !(self.period > 0.0 && self.period.is_finite()) {
            return Err(Error::param("pattern_period", "must be positive"));
        }
        if let Some(s) = self.spikes.iter().find(|s| !(s.time >= 0.0 && s.time < self.period)) {
            return Err(Error::param(
                "pattern_spikes",
                format!("spike at {} ms outside [0, {})", s.time, self.period),
            ));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StimulusConfig {
    /// Independent forced Poisson spikes per neuron, Hz.
    pub poisson_rate: f64,
    pub pattern: Option<Pattern>,
    /// Pattern phase at the start of the run, ms.
    pub pattern_phase: f64,
    /// Constant current added to every neuron.
    pub tonic_current: f64,
    pub seed: u64,
}

impl Default for StimulusConfig {
    fn default() -> Self {
        StimulusConfig {
            poisson_rate: 0.4,
            pattern: None,
            pattern_phase: 0.0,
            tonic_current: 0.0,
            seed: 2,
        }
    }
}

impl StimulusConfig {
    pub fn silent() -> Self {
        StimulusConfig {
            poisson_rate: 0.0,
            ..StimulusConfig::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.poisson_rate >= 0.0 && self.poisson_rate.is_finite()) {
            return Err(Error::param("poisson_rate", "must be a non-negative rate"));
        }
        if !self.tonic_current.is_finite() {
            return Err(Error::param("tonic_current", "must be finite"));
        }
        if let Some(p) = &self.pattern {
            p.validate()?;
        }
        Ok(())
    }

    /// All forced spikes in `[0, duration)`, canonically sorted, duplicates removed.
    pub fn forced_spikes(&self, n_neurons: usize, duration: f64) -> Vec<Spike> {
        let mut out = poisson_spikes(n_neurons, self.poisson_rate, duration, self.seed);
        if let Some(p) = &self.pattern {
            // First repetition index whose spikes can land at or after t = 0.
            let mut k = (self.pattern_phase / p.period).floor();
            loop {
                let offset = k * p.period - self.pattern_phase;
                if offset >= duration {
                    break;
                }
                for s in &p.spikes {
                    let t = offset + s.time;
                    if t >= 0.0 && t < duration && s.neuron.index() < n_neurons {
                        out.push(Spike {
                            neuron: s.neuron,
                            time: t,
                        });
                    }
                }
                k += 1.0;
            }
        }
        out.sort_by(|a, b| a.time.total_cmp(&b.time).then(a.neuron.cmp(&b.neuron)));
        out.dedup();
        out
    }
}

/// Homogeneous Poisson spikes for every neuron, drawn neuron by neuron.
pub fn poisson_spikes(n_neurons: usize, rate_hz: f64, duration: f64, seed: u64) -> Vec<Spike> {
    let mut out = Vec::new();
    if rate_hz <= 0.0 || duration <= 0.0 {
        return out;
    }
    let isi = Exp::new(rate_hz / 1000.0).expect("positive rate");
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for n in 0..n_neurons {
        let mut t = isi.sample(&mut rng);
        while t < duration {
            out.push(Spike::new(n as u32, t));
            t += isi.sample(&mut rng);
        }
    }
    out
}

/// Draws a fixed pattern: `n_pattern` random neurons out of `n_neurons` fire
/// Poisson spikes at `rate_hz` during the first `active_window` ms of each
/// `period`, then stay silent.
pub fn make_pattern(
    n_neurons: usize,
    n_pattern: usize,
    rate_hz: f64,
    active_window: f64,
    period: f64,
    seed: u64,
) -> Result<Pattern> {
    if n_pattern > n_neurons {
        return Err(Error::param("n_pattern", "more pattern neurons than neurons"));
    }
    if !(period > 0.0 && active_window >= 0.0 && active_window <= period) {
        return Err(Error::param("active_window", "must lie within the period"));
    }
    if !(rate_hz >= 0.0) {
        return Err(Error::param("rate", "must be non-negative"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut neurons: Vec<NeuronId> = sample(&mut rng, n_neurons, n_pattern)
        .into_iter()
        .map(|i| NeuronId(i as u32))
        .collect();
    neurons.sort();
    let mut spikes = Vec::new();
    if rate_hz > 0.0 {
        let isi = Exp::new(rate_hz / 1000.0).expect("positive rate");
        for &n in &neurons {
            let mut t = isi.sample(&mut rng);
            while t < active_window {
                spikes.push(Spike { neuron: n, time: t });
                t += isi.sample(&mut rng);
            }
        }
    }
    spikes.sort_by(|a, b| a.time.total_cmp(&b.time).then(a.neuron.cmp(&b.neuron)));
    Ok(Pattern {
        neurons,
        spikes,
        period,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_rate_is_empty() {
        let p = make_pattern(50, 10, 0.0, 5000.0, 10000.0, 3).unwrap();
        assert!(p.spikes.is_empty());
        assert_eq!(p.neurons.len(), 10);
    }

    #[test]
    fn pattern_size_and_determinism() {
        let a = make_pattern(5000, 100, 2.0, 5000.0, 10000.0, 11).unwrap();
        let b = make_pattern(5000, 100, 2.0, 5000.0, 10000.0, 11).unwrap();
        assert_eq!(a, b);
        // Expected 1000 spikes; Poisson sd ~ 32.
        let n = a.spikes.len() as f64;
        assert!((n - 1000.0).abs() < 5.0 * 1000f64.sqrt(), "{n}");
        assert!(a.spikes.iter().all(|s| s.time < 5000.0));
        a.validate().unwrap();
    }

    #[test]
    fn window_beyond_period_rejected() {
        assert!(make_pattern(10, 5, 1.0, 20.0, 10.0, 1).is_err());
    }

    #[test]
    fn pattern_repeats_with_phase() {
        let pattern = Pattern {
            neurons: vec![NeuronId(3)],
            spikes: vec![Spike::new(3, 2.0)],
            period: 10.0,
        };
        let stim = StimulusConfig {
            poisson_rate: 0.0,
            pattern: Some(pattern),
            pattern_phase: 5.0,
            ..StimulusConfig::default()
        };
        let times: Vec<f64> = stim.forced_spikes(5, 30.0).iter().map(|s| s.time).collect();
        assert_eq!(times, vec![7.0, 17.0, 27.0]);
    }
}
