//! INI configuration files.
//!
//! Sections `network`, `stimulus`, `stdp` and `run` configure `simulate`;
//! section `analysis` configures the analysis commands. Unknown sections and
//! keys are errors so that typos do not go unnoticed.

use std::path::{Path, PathBuf};
use std::str::FromStr;

use anyhow::{anyhow, bail, Context, Result};
use gnatkit_core::netsim::NetworkSpec;
use gnatkit_core::pipeline::{AnalyzeConfig, Seeds, SimulateConfig};
use ini::Ini;

#[derive(Debug, Default)]
pub struct ConfigFile {
    ini: Option<Ini>,
}

const SECTIONS: [&str; 5] = ["network", "stimulus", "stdp", "run", "analysis"];

impl ConfigFile {
    pub fn load(path: Option<&Path>) -> Result<Self> {
        let Some(path) = path else {
            return Ok(ConfigFile::default());
        };
        let ini = Ini::load_from_file(path).with_context(|| format!("reading config {}", path.display()))?;
        for (section, _) in ini.iter() {
            match section {
                Some(s) if SECTIONS.contains(&s) => {}
                Some(s) => bail!("config: unknown section [{s}]"),
                None if ini.general_section().is_empty() => {}
                None => bail!("config: keys must belong to a section"),
            }
        }
        Ok(ConfigFile { ini: Some(ini) })
    }

    fn keys(&self, section: &str) -> Vec<(String, String)> {
        self.ini
            .as_ref()
            .and_then(|ini| ini.section(Some(section)))
            .map(|p| p.iter().map(|(k, v)| (k.to_string(), v.to_string())).collect())
            .unwrap_or_default()
    }

    pub fn simulate(&self) -> Result<SimulateConfig> {
        let run = self.keys("run");
        let mut cfg = match run.iter().find(|(k, _)| k == "profile").map(|(_, v)| v.as_str()) {
            None | Some("desk") => SimulateConfig::desk(),
            Some("full") => SimulateConfig::full(),
            Some(other) => bail!("config: run.profile must be `desk` or `full`, not `{other}`"),
        };

        let net_keys = self.keys("network");
        let sized = |k: &str| net_keys.iter().any(|(key, _)| key == k);
        if (sized("n_exc") || sized("n_inh")) && !(sized("width") || sized("height")) {
            let n_exc = lookup(&net_keys, "network", "n_exc")?.unwrap_or(cfg.network.n_exc);
            let n_inh = lookup(&net_keys, "network", "n_inh")?.unwrap_or(cfg.network.n_inh);
            cfg.network = NetworkSpec {
                exc_weight: cfg.network.exc_weight,
                ..NetworkSpec::density_scaled(n_exc, n_inh, cfg.network.seed)
            };
        }
        let n = &mut cfg.network;
        for (k, v) in &net_keys {
            match k.as_str() {
                "n_exc" => n.n_exc = field(&net_keys, "network", k)?,
                "n_inh" => n.n_inh = field(&net_keys, "network", k)?,
                "width" => n.width = field(&net_keys, "network", k)?,
                "height" => n.height = field(&net_keys, "network", k)?,
                "exc_p_max" => n.exc_profile.p_max = field(&net_keys, "network", k)?,
                "exc_mu" => n.exc_profile.mu = field(&net_keys, "network", k)?,
                "exc_sigma" => n.exc_profile.sigma = field(&net_keys, "network", k)?,
                "inh_p_max" => n.inh_profile.p_max = field(&net_keys, "network", k)?,
                "inh_mu" => n.inh_profile.mu = field(&net_keys, "network", k)?,
                "inh_sigma" => n.inh_profile.sigma = field(&net_keys, "network", k)?,
                "exc_delay_min" => n.exc_delay.0 = field(&net_keys, "network", k)?,
                "exc_delay_max" => n.exc_delay.1 = field(&net_keys, "network", k)?,
                "inh_delay" => n.inh_delay = field(&net_keys, "network", k)?,
                "exc_weight" => n.exc_weight = field(&net_keys, "network", k)?,
                "inh_weight" => n.inh_weight = field(&net_keys, "network", k)?,
                _ => bail!("config: unknown key network.{k} = {v}"),
            }
        }

        let keys = self.keys("stimulus");
        let s = &mut cfg.stimulus;
        for (k, _) in &keys {
            match k.as_str() {
                "poisson_rate" => s.poisson_rate = field(&keys, "stimulus", k)?,
                "pattern_neurons" => s.pattern_neurons = field(&keys, "stimulus", k)?,
                "pattern_rate" => s.pattern_rate = field(&keys, "stimulus", k)?,
                "pattern_window" => s.pattern_window = field(&keys, "stimulus", k)?,
                "pattern_period" => s.pattern_period = field(&keys, "stimulus", k)?,
                "tonic_current" => s.tonic_current = field(&keys, "stimulus", k)?,
                _ => bail!("config: unknown key stimulus.{k}"),
            }
        }

        let keys = self.keys("stdp");
        let p = &mut cfg.stdp;
        for (k, _) in &keys {
            match k.as_str() {
                "a_plus" => p.a_plus = field(&keys, "stdp", k)?,
                "a_minus" => p.a_minus = field(&keys, "stdp", k)?,
                "tau_plus" => p.tau_plus = field(&keys, "stdp", k)?,
                "tau_minus" => p.tau_minus = field(&keys, "stdp", k)?,
                "w_max" => p.w_max = field(&keys, "stdp", k)?,
                "update_interval" => p.update_interval = field(&keys, "stdp", k)?,
                _ => bail!("config: unknown key stdp.{k}"),
            }
        }

        if let Some(seed) = lookup::<u64>(&run, "run", "seed")? {
            cfg.seeds = Seeds::from_master(seed);
        }
        for (k, _) in &run {
            match k.as_str() {
                "profile" | "seed" => {}
                "plastic_duration" => cfg.run.plastic_duration = field(&run, "run", k)?,
                "fixed_duration" => cfg.run.fixed_duration = field(&run, "run", k)?,
                "dt" => cfg.run.dt = field(&run, "run", k)?,
                "network_seed" => cfg.seeds.network = field(&run, "run", k)?,
                "pattern_seed" => cfg.seeds.pattern = field(&run, "run", k)?,
                "plastic_stimulus_seed" => cfg.seeds.plastic_stimulus = field(&run, "run", k)?,
                "fixed_stimulus_seed" => cfg.seeds.fixed_stimulus = field(&run, "run", k)?,
                _ => bail!("config: unknown key run.{k}"),
            }
        }
        Ok(cfg)
    }

    pub fn analyze(&self) -> Result<AnalyzeConfig> {
        let mut cfg = AnalyzeConfig::default();
        let keys = self.keys("analysis");
        for (k, v) in &keys {
            match k.as_str() {
                "spikes" => cfg.spikes = Some(PathBuf::from(v)),
                "network" => cfg.network = Some(PathBuf::from(v)),
                "duration" => cfg.duration = Some(field(&keys, "analysis", k)?),
                "tau" => cfg.omega.tau = field(&keys, "analysis", k)?,
                "norm" => cfg.omega.norm_kind = field(&keys, "analysis", k)?,
                "log_threshold" => cfg.omega.log_threshold = field(&keys, "analysis", k)?,
                "window_multiplier" => cfg.omega.window_multiplier = Some(field(&keys, "analysis", k)?),
                "auto_threshold" => cfg.auto_threshold = field(&keys, "analysis", k)?,
                "histogram_bin" => cfg.histogram_bin = field(&keys, "analysis", k)?,
                "shuffle_seed" => cfg.shuffle_seed = Some(field(&keys, "analysis", k)?),
                "shuffle_method" => cfg.shuffle_method = field(&keys, "analysis", k)?,
                "min_spikes" => cfg.min_spikes = field(&keys, "analysis", k)?,
                "self" => cfg.self_mode = field(&keys, "analysis", k)?,
                "compare_spikes" => cfg.compare_spikes = Some(PathBuf::from(v)),
                "top_k" => cfg.top_k = field(&keys, "analysis", k)?,
                "min_edge_weight" => cfg.min_edge_weight = field(&keys, "analysis", k)?,
                "class_method" => cfg.class_method = field(&keys, "analysis", k)?,
                "duration_bin" => cfg.duration_bin = field(&keys, "analysis", k)?,
                "overlap_bin" => cfg.overlap_bin = field(&keys, "analysis", k)?,
                "plots" => cfg.plots = field(&keys, "analysis", k)?,
                _ => bail!("config: unknown key analysis.{k}"),
            }
        }
        Ok(cfg)
    }
}

fn field<T: FromStr>(keys: &[(String, String)], section: &str, key: &str) -> Result<T>
where
    T::Err: std::fmt::Display,
{
    lookup(keys, section, key)?.ok_or_else(|| anyhow!("config: missing {section}.{key}"))
}

fn lookup<T: FromStr>(keys: &[(String, String)], section: &str, key: &str) -> Result<Option<T>>
where
    T::Err: std::fmt::Display,
{
    keys.iter()
        .find(|(k, _)| k == key)
        .map(|(_, v)| {
            v.trim()
                .parse::<T>()
                .map_err(|e| anyhow!("config: {section}.{key} = `{v}`: {e}"))
        })
        .transpose()
}
