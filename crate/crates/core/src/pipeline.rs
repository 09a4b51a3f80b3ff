//! End-to-end commands: simulate a network, then analyze its recording in
//! stages that communicate only through files in one directory.
//!
//! Every command records its resolved configuration, seeds, input and output
//! hashes and stage timings in `run_manifest.json` under its own name, so a
//! later command does not erase what an earlier one recorded.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::sync::Arc;
use std::time::Instant;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::analogs::{
    assign_gnats, build_second_order_graph, extract_analogous_subthreads, isomorphic_fraction, DEFAULT_MIN_SPIKES,
};
use crate::causal::{
    build_activity_graph, neg_log_omega_histogram, select_threshold, shuffle_train, ActivityGraph, OmegaConfig,
    ShuffleMethod,
};
use crate::error::{Error, Result};
use crate::exec::Execution;
use crate::io;
use crate::model::{Network, SpikeTrain};
use crate::netsim::{build_network, make_pattern, NetworkSpec, Pattern, Simulator, StdpConfig, StimulusConfig};
use crate::plot::{self, PlotKind};
use crate::relations::{
    build_multigraph, class_intervals, extract_classes, trial_overlay, ClassMethod, DEFAULT_MIN_EDGE_WEIGHT,
    DEFAULT_TOP_K,
};
use crate::threads::{bin_overlap_stats, duration_stats, extract_gnats, BinOverlap, DurationStats, GnatDecomposition};

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

/// File names inside a run directory.
pub mod files {
    pub const SPIKES: &str = "spikes.csv";
    pub const NETWORK: &str = "network.json";
    pub const PLASTIC_SPIKES: &str = "plastic_spikes.csv";
    pub const PLASTIC_NETWORK: &str = "plastic_network.json";
    pub const STIMULUS: &str = "stimulus.json";
    pub const EDGES: &str = "edges.csv";
    pub const GRAPH: &str = "graph.json";
    pub const HISTOGRAM: &str = "neg_log_omega.csv";
    pub const HISTOGRAM_SHUFFLED: &str = "neg_log_omega_shuffled.csv";
    pub const GNATS: &str = "gnats.csv";
    pub const STATS: &str = "stats.json";
    pub const SUBTHREADS: &str = "subthreads.jsonl";
    pub const ANALOGS: &str = "analogs.json";
    pub const MULTIGRAPH: &str = "multigraph.csv";
    pub const CLASSES: &str = "classes.json";
    pub const INTERVALS: &str = "intervals.csv";
    pub const OVERLAY: &str = "trial_overlay.csv";
    pub const PLOTS: &str = "plots";
    pub const MANIFEST: &str = "run_manifest.json";
}

// Simulation.

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StimulusSettings {
    /// Forced Poisson spikes per neuron, Hz.
    pub poisson_rate: f64,
    pub pattern_neurons: usize,
    pub pattern_rate: f64,
    /// Active part of each pattern period, ms.
    pub pattern_window: f64,
    pub pattern_period: f64,
    pub tonic_current: f64,
}

impl Default for StimulusSettings {
    fn default() -> Self {
        StimulusSettings {
            poisson_rate: 0.4,
            pattern_neurons: 100,
            pattern_rate: 2.0,
            pattern_window: 5000.0,
            pattern_period: 10_000.0,
            tonic_current: 0.0,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunSettings {
    /// Length of the phase with plastic weights, ms.
    pub plastic_duration: f64,
    /// Length of the recorded phase with fixed weights, ms.
    pub fixed_duration: f64,
    pub dt: f64,
}

/// Named seeds; [`Seeds::from_master`] derives all of them from one value.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Seeds {
    pub network: u64,
    pub pattern: u64,
    pub plastic_stimulus: u64,
    pub fixed_stimulus: u64,
}

impl Seeds {
    pub fn from_master(seed: u64) -> Self {
        Seeds {
            network: seed,
            pattern: seed.wrapping_add(1),
            plastic_stimulus: seed.wrapping_add(2),
            fixed_stimulus: seed.wrapping_add(3),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SimulateConfig {
    pub network: NetworkSpec,
    pub stimulus: StimulusSettings,
    pub stdp: StdpConfig,
    pub run: RunSettings,
    pub seeds: Seeds,
}

impl SimulateConfig {
    /// 800 excitatory and 200 inhibitory neurons at the full-size density,
    /// one minute plastic and one minute fixed.
    pub fn desk() -> Self {
        SimulateConfig {
            network: NetworkSpec::density_scaled(800, 200, 1),
            stimulus: StimulusSettings::default(),
            stdp: StdpConfig::default(),
            run: RunSettings {
                plastic_duration: 60_000.0,
                fixed_duration: 60_000.0,
                dt: 0.5,
            },
            seeds: Seeds::from_master(1),
        }
    }

    /// Full-size network, ten minutes plastic and five minutes fixed.
    pub fn full() -> Self {
        SimulateConfig {
            network: NetworkSpec::default(),
            run: RunSettings {
                plastic_duration: 600_000.0,
                fixed_duration: 300_000.0,
                dt: 0.5,
            },
            ..SimulateConfig::desk()
        }
    }

    pub fn validate(&self) -> Result<()> {
        let r = &self.run;
        if !(r.plastic_duration > 0.0 && r.plastic_duration.is_finite()) {
            return Err(Error::param("run.plastic_duration", "must be positive"));
        }
        if !(r.fixed_duration > 0.0 && r.fixed_duration.is_finite()) {
            return Err(Error::param("run.fixed_duration", "must be positive"));
        }
        if !(r.dt > 0.0 && r.dt <= crate::model::MIN_DELAY_MS) {
            return Err(Error::param("run.dt", "must lie in (0, 1] ms"));
        }
        let s = &self.stimulus;
        if !(s.poisson_rate >= 0.0 && s.pattern_rate >= 0.0) {
            return Err(Error::param("stimulus.rate", "rates must be non-negative"));
        }
        if !(s.pattern_period > 0.0 && s.pattern_window >= 0.0 && s.pattern_window <= s.pattern_period) {
            return Err(Error::param("stimulus.pattern_window", "must lie within the pattern period"));
        }
        if s.pattern_neurons > self.network.n_exc + self.network.n_inh {
            return Err(Error::param("stimulus.pattern_neurons", "exceeds the number of neurons"));
        }
        self.network.validate()?;
        self.stdp.validate()
    }
}

/// Pattern timing within the recorded phase, for trial overlays.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StimulusRecord {
    pub pattern: Option<Pattern>,
    pub duration_ms: f64,
    pub trial_starts_ms: Vec<f64>,
    pub trial_length_ms: f64,
}

/// Starts of complete pattern repetitions within `[0, duration)` when the
/// pattern is at `phase` at time 0.
pub fn trial_starts(period: f64, phase: f64, duration: f64) -> Vec<f64> {
    let mut k = (phase / period).ceil();
    let mut out = Vec::new();
    loop {
        let t = k * period - phase;
        if t >= duration {
            break;
        }
        if t >= 0.0 {
            out.push(t);
        }
        k += 1.0;
    }
    out
}

#[derive(Clone, Debug, Default, Serialize)]
struct Timings(BTreeMap<String, f64>);

impl Timings {
    fn time<T>(&mut self, stage: &str, f: impl FnOnce() -> Result<T>) -> Result<T> {
        let start = Instant::now();
        let out = f()?;
        self.0.insert(stage.to_string(), start.elapsed().as_secs_f64() * 1000.0);
        Ok(out)
    }
}

/// Runs the plastic phase, then the recorded phase with weights frozen, and
/// writes both phases' trains and networks.
pub fn cmd_simulate(cfg: &SimulateConfig, out_dir: &Path, exec: Execution) -> Result<()> {
    cfg.validate()?;
    let mut t = Timings::default();
    let mut spec = cfg.network.clone();
    spec.seed = cfg.seeds.network;
    let net = t.time("build_network", || build_network(&spec, exec))?;
    let s = &cfg.stimulus;
    let pattern = (s.pattern_neurons > 0)
        .then(|| {
            make_pattern(
                net.len(),
                s.pattern_neurons,
                s.pattern_rate,
                s.pattern_window,
                s.pattern_period,
                cfg.seeds.pattern,
            )
        })
        .transpose()?;
    let plastic_stim = StimulusConfig {
        poisson_rate: s.poisson_rate,
        pattern: pattern.clone(),
        pattern_phase: 0.0,
        tonic_current: s.tonic_current,
        seed: cfg.seeds.plastic_stimulus,
    };
    // The pattern keeps its rhythm across the phase boundary.
    let fixed_stim = StimulusConfig {
        pattern_phase: cfg.run.plastic_duration,
        seed: cfg.seeds.fixed_stimulus,
        ..plastic_stim.clone()
    };

    let mut sim = Simulator::new(&net, cfg.run.dt)?;
    sim.set_plasticity(Some(cfg.stdp))?;
    let plastic = t.time("plastic_phase", || sim.run(&plastic_stim, cfg.run.plastic_duration))?;
    let plastic_net = sim.network();
    sim.set_plasticity(None)?;
    let fixed = t.time("fixed_phase", || sim.run(&fixed_stim, cfg.run.fixed_duration))?;
    let fixed_net = sim.network();
    log::info!(
        "simulated {} plastic and {} recorded spikes",
        plastic.len(),
        fixed.len()
    );

    let record = StimulusRecord {
        trial_starts_ms: pattern.as_ref().map_or_else(Vec::new, |p| {
            trial_starts(p.period, cfg.run.plastic_duration, cfg.run.fixed_duration)
        }),
        trial_length_ms: s.pattern_period,
        pattern,
        duration_ms: cfg.run.fixed_duration,
    };
    let out = |name: &str| out_dir.join(name);
    t.time("write", || {
        io::save(&out(files::PLASTIC_SPIKES), |w| io::write_spikes(w, &plastic))?;
        io::save(&out(files::PLASTIC_NETWORK), |w| io::write_network(w, &plastic_net))?;
        io::save(&out(files::SPIKES), |w| io::write_spikes(w, &fixed))?;
        io::save(&out(files::NETWORK), |w| io::write_network(w, &fixed_net))?;
        io::save(&out(files::STIMULUS), |w| io::write_json_file(w, &record))
    })?;
    let outputs = [
        files::PLASTIC_SPIKES,
        files::PLASTIC_NETWORK,
        files::SPIKES,
        files::NETWORK,
        files::STIMULUS,
    ];
    record_run(out_dir, "simulate", cfg, &[], &outputs.map(out), t)
}

// Analysis.

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AnalyzeConfig {
    /// Recorded train; defaults to `spikes.csv` in the run directory.
    pub spikes: Option<PathBuf>,
    /// Defaults to `network.json` in the run directory.
    pub network: Option<PathBuf>,
    /// Train length, ms; defaults to `stimulus.json` if present, else the last spike.
    pub duration: Option<f64>,
    pub omega: OmegaConfig,
    /// Replace `omega.log_threshold` by the knee of the `-ln(omega)` histogram.
    pub auto_threshold: bool,
    pub histogram_bin: f64,
    /// Also compute the histogram of a shuffled surrogate.
    pub shuffle_seed: Option<u64>,
    pub shuffle_method: ShuffleMethod,
    pub min_spikes: usize,
    /// Compare the recording with itself; otherwise with `compare_spikes`.
    pub self_mode: bool,
    pub compare_spikes: Option<PathBuf>,
    pub top_k: usize,
    pub min_edge_weight: u64,
    pub class_method: ClassMethod,
    pub duration_bin: f64,
    pub overlap_bin: f64,
    pub plots: bool,
}

impl Default for AnalyzeConfig {
    fn default() -> Self {
        AnalyzeConfig {
            spikes: None,
            network: None,
            duration: None,
            omega: OmegaConfig::default(),
            auto_threshold: false,
            histogram_bin: 0.1,
            shuffle_seed: None,
            shuffle_method: ShuffleMethod::default(),
            min_spikes: DEFAULT_MIN_SPIKES,
            self_mode: true,
            compare_spikes: None,
            top_k: DEFAULT_TOP_K,
            min_edge_weight: DEFAULT_MIN_EDGE_WEIGHT,
            class_method: ClassMethod::default(),
            duration_bin: 10.0,
            overlap_bin: 20.0,
            plots: true,
        }
    }
}

impl AnalyzeConfig {
    pub fn validate(&self) -> Result<()> {
        self.omega.validate()?;
        for (name, v) in [
            ("histogram_bin", self.histogram_bin),
            ("duration_bin", self.duration_bin),
            ("overlap_bin", self.overlap_bin),
        ] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::param(name, format!("{v} must be positive")));
            }
        }
        if !self.self_mode && self.compare_spikes.is_none() {
            return Err(Error::param("compare_spikes", "required unless comparing the recording with itself"));
        }
        Ok(())
    }
}

/// Summary of the graph stage.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GraphSummary {
    pub omega: OmegaConfig,
    pub auto_threshold: bool,
    pub threshold_fallback: bool,
    pub histogram_bin: f64,
    pub spikes: usize,
    pub vertices: usize,
    pub edges: usize,
    pub pairs: u64,
    pub fraction_below_threshold: f64,
    pub shuffle: Option<ShuffleSummary>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ShuffleSummary {
    pub seed: u64,
    pub method: ShuffleMethod,
    pub pairs: u64,
    pub fraction_below_threshold: f64,
}

/// Summary of the thread stage.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ThreadStats {
    pub spikes: usize,
    pub vertices: usize,
    pub edges: usize,
    pub gnats: usize,
    pub isolated: usize,
    pub largest_gnat: usize,
    pub durations: DurationStats,
    pub bin_overlap: BinOverlap,
}

/// Summary of the subthread stage.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AnalogSummary {
    pub self_mode: bool,
    pub min_spikes: usize,
    pub second_order_vertices: u64,
    pub second_order_vertices_with_edges: usize,
    pub second_order_edges: usize,
    pub subthreads: usize,
    pub overlapping: usize,
    pub isomorphic_fraction: f64,
}

fn require(path: PathBuf, stage: &'static str) -> Result<PathBuf> {
    if path.exists() {
        Ok(path)
    } else {
        Err(Error::MissingStage { file: path, stage })
    }
}

fn read_json<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<T> {
    io::read_json_file(io::open(path)?)
}

fn stimulus_record(dir: &Path) -> Result<Option<StimulusRecord>> {
    let p = dir.join(files::STIMULUS);
    if p.exists() {
        read_json(&p).map(Some)
    } else {
        Ok(None)
    }
}

/// Inputs shared by every analysis stage.
struct Recording {
    train: Arc<SpikeTrain>,
    net: Network,
    inputs: Vec<PathBuf>,
}

fn load_recording(cfg: &AnalyzeConfig, dir: &Path) -> Result<Recording> {
    let spikes = require(cfg.spikes.clone().unwrap_or_else(|| dir.join(files::SPIKES)), "simulate")?;
    let network = require(cfg.network.clone().unwrap_or_else(|| dir.join(files::NETWORK)), "simulate")?;
    let duration = match cfg.duration {
        Some(d) => Some(d),
        None => stimulus_record(dir)?.map(|r| r.duration_ms),
    };
    let net = io::read_network(io::open(&network)?)?;
    let train = io::read_spikes(io::open(&spikes)?, duration)?;
    train.check_neurons(net.len())?;
    Ok(Recording {
        train: Arc::new(train),
        net,
        inputs: vec![spikes, network],
    })
}

fn load_graph(rec: &Recording, dir: &Path) -> Result<ActivityGraph> {
    let edges = require(dir.join(files::EDGES), "build-graph")?;
    io::read_edges(io::open(&edges)?, rec.train.clone(), &rec.net)
}

fn load_decomposition(graph: &ActivityGraph, dir: &Path) -> Result<GnatDecomposition> {
    let path = require(dir.join(files::GNATS), "gnats")?;
    GnatDecomposition::from_membership(graph, io::read_membership(io::open(&path)?)?)
}

fn resolve_threshold(
    cfg: &AnalyzeConfig,
    train: &SpikeTrain,
    net: &Network,
    exec: Execution,
) -> Result<(OmegaConfig, crate::causal::NegLogOmega, bool)> {
    let hist = neg_log_omega_histogram(train, net, &cfg.omega, cfg.histogram_bin, exec)?;
    let mut omega = cfg.omega;
    let mut fallback = false;
    if cfg.auto_threshold {
        let choice = select_threshold(&hist.histogram);
        omega.log_threshold = choice.value;
        fallback = choice.fallback;
        log::info!("selected -ln(omega) threshold {}", choice.value);
    }
    // Recount below the threshold actually used.
    let hist = if cfg.auto_threshold {
        neg_log_omega_histogram(train, net, &omega, cfg.histogram_bin, exec)?
    } else {
        hist
    };
    Ok((omega, hist, fallback))
}

/// Builds the activity graph and the `-ln(omega)` histograms.
pub fn stage_build_graph(cfg: &AnalyzeConfig, dir: &Path, exec: Execution) -> Result<GraphSummary> {
    cfg.validate()?;
    let mut t = Timings::default();
    let rec = load_recording(cfg, dir)?;
    let (omega, hist, fallback) = t.time("histogram", || resolve_threshold(cfg, &rec.train, &rec.net, exec))?;
    let graph = t.time("activity_graph", || {
        build_activity_graph(rec.train.clone(), &rec.net, &omega, exec)
    })?;
    let shuffle = match cfg.shuffle_seed {
        Some(seed) => Some(t.time("shuffle_control", || {
            let shuffled = shuffle_train(&rec.train, seed, cfg.shuffle_method);
            let h = neg_log_omega_histogram(&shuffled, &rec.net, &omega, cfg.histogram_bin, exec)?;
            io::save(&dir.join(files::HISTOGRAM_SHUFFLED), |w| io::write_histogram(w, &h.histogram))?;
            Ok(ShuffleSummary {
                seed,
                method: cfg.shuffle_method,
                pairs: h.pairs,
                fraction_below_threshold: h.fraction_below(),
            })
        })?),
        None => {
            // A control left over from an earlier run would no longer match.
            let stale = dir.join(files::HISTOGRAM_SHUFFLED);
            if stale.exists() {
                std::fs::remove_file(&stale).map_err(|source| Error::Io { path: stale, source })?;
            }
            None
        }
    };
    let summary = GraphSummary {
        omega,
        auto_threshold: cfg.auto_threshold,
        threshold_fallback: fallback,
        histogram_bin: cfg.histogram_bin,
        spikes: rec.train.len(),
        vertices: graph.vertex_count(),
        edges: graph.edge_count(),
        pairs: hist.pairs,
        fraction_below_threshold: hist.fraction_below(),
        shuffle,
    };
    t.time("write", || {
        io::save(&dir.join(files::EDGES), |w| io::write_edges(w, &graph))?;
        io::save(&dir.join(files::HISTOGRAM), |w| io::write_histogram(w, &hist.histogram))?;
        io::save(&dir.join(files::GRAPH), |w| io::write_json_file(w, &summary))
    })?;
    let mut outputs = vec![dir.join(files::EDGES), dir.join(files::HISTOGRAM), dir.join(files::GRAPH)];
    if summary.shuffle.is_some() {
        outputs.push(dir.join(files::HISTOGRAM_SHUFFLED));
    }
    record_run(dir, "build-graph", cfg, &rec.inputs, &outputs, t)?;
    Ok(summary)
}

/// Splits the activity graph into threads.
pub fn stage_gnats(cfg: &AnalyzeConfig, dir: &Path, _exec: Execution) -> Result<ThreadStats> {
    cfg.validate()?;
    let mut t = Timings::default();
    let rec = load_recording(cfg, dir)?;
    let graph = t.time("load_graph", || load_graph(&rec, dir))?;
    let decomp = t.time("components", || Ok(extract_gnats(&graph)))?;
    let stats = ThreadStats {
        spikes: rec.train.len(),
        vertices: graph.vertex_count(),
        edges: graph.edge_count(),
        gnats: decomp.gnats.len(),
        isolated: decomp.isolated.len(),
        largest_gnat: decomp.gnats.iter().map(|g| g.size()).max().unwrap_or(0),
        durations: duration_stats(&decomp, cfg.duration_bin)?,
        bin_overlap: bin_overlap_stats(&graph, &decomp, cfg.overlap_bin)?,
    };
    t.time("write", || {
        io::save(&dir.join(files::GNATS), |w| io::write_membership(w, &decomp.membership))?;
        io::save(&dir.join(files::STATS), |w| io::write_json_file(w, &stats))
    })?;
    let mut inputs = rec.inputs.clone();
    inputs.push(dir.join(files::EDGES));
    record_run(dir, "gnats", cfg, &inputs, &[dir.join(files::GNATS), dir.join(files::STATS)], t)?;
    Ok(stats)
}

/// Finds analogous subthreads and their host threads.
pub fn stage_analogs(cfg: &AnalyzeConfig, dir: &Path, exec: Execution) -> Result<AnalogSummary> {
    cfg.validate()?;
    let mut t = Timings::default();
    let rec = load_recording(cfg, dir)?;
    let graph = t.time("load_graph", || load_graph(&rec, dir))?;
    let decomp = load_decomposition(&graph, dir)?;
    let mut inputs = rec.inputs.clone();
    inputs.extend([dir.join(files::EDGES), dir.join(files::GNATS)]);

    let other = match (&cfg.compare_spikes, cfg.self_mode) {
        (Some(path), false) => {
            let summary: GraphSummary = read_json(&require(dir.join(files::GRAPH), "build-graph")?)?;
            let train = io::read_spikes(io::open(path)?, None)?;
            inputs.push(path.clone());
            Some(build_activity_graph(Arc::new(train), &rec.net, &summary.omega, exec)?)
        }
        _ => None,
    };
    let b = other.as_ref().unwrap_or(&graph);
    let second = t.time("second_order", || build_second_order_graph(&graph, b, cfg.self_mode, exec))?;
    let mut subs = t.time("components", || Ok(extract_analogous_subthreads(&second, cfg.min_spikes)))?;
    let decomp_b = other.as_ref().map(extract_gnats);
    assign_gnats(&mut subs, &decomp, decomp_b.as_ref().unwrap_or(&decomp))?;
    let summary = AnalogSummary {
        self_mode: cfg.self_mode,
        min_spikes: cfg.min_spikes,
        second_order_vertices: second.total_vertices,
        second_order_vertices_with_edges: second.vertices().len(),
        second_order_edges: second.edges().len(),
        subthreads: subs.len(),
        overlapping: subs.iter().filter(|s| s.overlapping).count(),
        isomorphic_fraction: isomorphic_fraction(&subs, &graph, b),
    };
    t.time("write", || {
        io::save(&dir.join(files::SUBTHREADS), |w| io::write_subthreads(w, &subs))?;
        io::save(&dir.join(files::ANALOGS), |w| io::write_json_file(w, &summary))
    })?;
    record_run(
        dir,
        "analogs",
        cfg,
        &inputs,
        &[dir.join(files::SUBTHREADS), dir.join(files::ANALOGS)],
        t,
    )?;
    Ok(summary)
}

/// Relates threads through shared subthreads and lays out class timelines.
pub fn stage_relations(cfg: &AnalyzeConfig, dir: &Path, _exec: Execution) -> Result<usize> {
    cfg.validate()?;
    let mut t = Timings::default();
    let rec = load_recording(cfg, dir)?;
    let graph = load_graph(&rec, dir)?;
    let decomp = load_decomposition(&graph, dir)?;
    let analogs: AnalogSummary = read_json(&require(dir.join(files::ANALOGS), "analogs")?)?;
    if !analogs.self_mode {
        return Err(Error::param(
            "self_mode",
            "thread relations need subthreads of the recording compared with itself",
        ));
    }
    let subs_path = require(dir.join(files::SUBTHREADS), "analogs")?;
    let subs = io::read_subthreads(io::open(&subs_path)?)?;
    let mg = t.time("multigraph", || build_multigraph(&decomp, &subs, cfg.top_k))?;
    let classes = t.time("classes", || Ok(extract_classes(&mg, cfg.class_method, cfg.min_edge_weight)))?;
    let intervals = class_intervals(&classes, &decomp);
    let overlay = match stimulus_record(dir)? {
        Some(r) => trial_overlay(&intervals, &r.trial_starts_ms, r.trial_length_ms),
        None => Vec::new(),
    };
    t.time("write", || {
        io::save(&dir.join(files::MULTIGRAPH), |w| io::write_multigraph(w, &mg))?;
        io::save(&dir.join(files::CLASSES), |w| io::write_classes(w, &classes))?;
        io::save(&dir.join(files::INTERVALS), |w| io::write_intervals(w, &intervals))?;
        io::save(&dir.join(files::OVERLAY), |w| io::write_overlay(w, &overlay))
    })?;
    let mut inputs = rec.inputs.clone();
    inputs.extend([dir.join(files::EDGES), dir.join(files::GNATS), subs_path]);
    let outputs = [files::MULTIGRAPH, files::CLASSES, files::INTERVALS, files::OVERLAY].map(|f| dir.join(f));
    record_run(dir, "relations", cfg, &inputs, &outputs, t)?;
    Ok(classes.len())
}

/// All analysis stages in order, then every plot.
pub fn cmd_analyze(cfg: &AnalyzeConfig, dir: &Path, exec: Execution) -> Result<()> {
    let mut t = Timings::default();
    t.time("build-graph", || stage_build_graph(cfg, dir, exec))?;
    t.time("gnats", || stage_gnats(cfg, dir, exec))?;
    t.time("analogs", || stage_analogs(cfg, dir, exec))?;
    t.time("relations", || stage_relations(cfg, dir, exec))?;
    let mut outputs = Vec::new();
    if cfg.plots {
        t.time("plot", || {
            for kind in PlotKind::ALL {
                outputs.push(cmd_plot(cfg, dir, kind, None)?);
            }
            Ok(())
        })?;
    }
    let rec_inputs = [
        cfg.spikes.clone().unwrap_or_else(|| dir.join(files::SPIKES)),
        cfg.network.clone().unwrap_or_else(|| dir.join(files::NETWORK)),
    ];
    record_run(dir, "analyze", cfg, &rec_inputs, &outputs, t)
}

/// Renders one figure from the artifacts in `dir`; returns the file written.
pub fn cmd_plot(cfg: &AnalyzeConfig, dir: &Path, kind: PlotKind, output: Option<&Path>) -> Result<PathBuf> {
    let svg = match kind {
        PlotKind::Raster => {
            let rec = load_recording(cfg, dir)?;
            plot::raster(&rec.train, Some(&rec.net))
        }
        PlotKind::RasterThreads => {
            let rec = load_recording(cfg, dir)?;
            let graph = load_graph(&rec, dir)?;
            let decomp = load_decomposition(&graph, dir)?;
            plot::raster_threads(&graph, &decomp)
        }
        PlotKind::NegLogOmega => {
            let summary: GraphSummary = read_json(&require(dir.join(files::GRAPH), "build-graph")?)?;
            let path = require(dir.join(files::HISTOGRAM), "build-graph")?;
            let hist = io::read_histogram(io::open(&path)?, summary.histogram_bin)?;
            plot::neg_log_omega(&hist, Some(summary.omega.log_threshold))
        }
        PlotKind::Durations => {
            let stats: ThreadStats = read_json(&require(dir.join(files::STATS), "gnats")?)?;
            plot::durations(&stats.durations)
        }
        PlotKind::ClassTimeline => {
            let path = require(dir.join(files::INTERVALS), "relations")?;
            let intervals = io::read_intervals(io::open(&path)?)?;
            let duration = match cfg.duration {
                Some(d) => d,
                None => stimulus_record(dir)?.map_or(0.0, |r| r.duration_ms),
            };
            plot::class_timeline(&intervals, duration)
        }
        PlotKind::TrialOverlay => {
            let path = require(dir.join(files::OVERLAY), "relations")?;
            let trials = io::read_overlay(io::open(&path)?)?;
            let length = stimulus_record(dir)?.map_or_else(
                || trials.iter().map(|t| t.rel_end).fold(0.0, f64::max),
                |r| r.trial_length_ms,
            );
            plot::trial_overlay(&trials, length)
        }
    };
    let path = output.map_or_else(|| dir.join(files::PLOTS).join(format!("{kind}.svg")), Path::to_path_buf);
    io::save(&path, |w| Ok(w.write_all(svg.as_bytes())?))?;
    Ok(path)
}

/// Collected summaries of whatever stages have run in `dir`.
pub fn cmd_stats(dir: &Path) -> Result<serde_json::Value> {
    let mut out = serde_json::Map::new();
    for (key, name) in [
        ("graph", files::GRAPH),
        ("threads", files::STATS),
        ("analogs", files::ANALOGS),
    ] {
        let p = dir.join(name);
        if p.exists() {
            let mut v: serde_json::Value = read_json(&p)?;
            if let Some(o) = v.get_mut("bin_overlap").and_then(|b| b.as_object_mut()) {
                o.remove("gnats_per_bin");
            }
            out.insert(key.to_string(), v);
        }
    }
    let classes = dir.join(files::CLASSES);
    if classes.exists() {
        let c = io::read_classes(io::open(&classes)?)?;
        out.insert("classes".into(), serde_json::json!(c.len()));
    }
    if out.is_empty() {
        return Err(Error::MissingStage {
            file: dir.join(files::GRAPH),
            stage: "build-graph",
        });
    }
    Ok(serde_json::Value::Object(out))
}

// Manifest.

#[derive(Clone, Debug, Default, Serialize, Deserialize)]
pub struct RunRecord {
    pub config: serde_json::Value,
    /// SHA-256 of the raw bytes of each input file.
    pub inputs: BTreeMap<String, String>,
    pub outputs: BTreeMap<String, String>,
    /// Wall-clock milliseconds per stage; the only nondeterministic field.
    pub timings_ms: BTreeMap<String, f64>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Manifest {
    pub tool: String,
    pub version: String,
    pub hash_algorithm: String,
    pub rng: String,
    pub runs: BTreeMap<String, RunRecord>,
}

impl Default for Manifest {
    fn default() -> Self {
        Manifest {
            tool: "gnatkit".into(),
            version: VERSION.into(),
            hash_algorithm: "sha256".into(),
            rng: "ChaCha8 (rand_chacha 0.3) seeded with seed_from_u64".into(),
            runs: BTreeMap::new(),
        }
    }
}

pub fn sha256_file(path: &Path) -> Result<String> {
    let bytes = std::fs::read(path).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })?;
    Ok(format!("{:x}", Sha256::digest(&bytes)))
}

fn hashes(paths: &[PathBuf]) -> Result<BTreeMap<String, String>> {
    paths
        .iter()
        .map(|p| Ok((p.display().to_string(), sha256_file(p)?)))
        .collect()
}

fn record_run<C: Serialize>(
    dir: &Path,
    command: &str,
    config: &C,
    inputs: &[PathBuf],
    outputs: &[PathBuf],
    timings: Timings,
) -> Result<()> {
    let path = dir.join(files::MANIFEST);
    let mut manifest: Manifest = if path.exists() {
        read_json(&path).unwrap_or_default()
    } else {
        Manifest::default()
    };
    manifest.version = VERSION.into();
    manifest.runs.insert(
        command.to_string(),
        RunRecord {
            config: serde_json::to_value(config)?,
            inputs: hashes(inputs)?,
            outputs: hashes(outputs)?,
            timings_ms: timings.0,
        },
    );
    io::save(&path, |w| io::write_json_file(w, &manifest))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn trial_starts_follow_the_phase() {
        assert_eq!(trial_starts(10_000.0, 60_000.0, 30_000.0), vec![0.0, 10_000.0, 20_000.0]);
        assert_eq!(trial_starts(10_000.0, 5_000.0, 30_000.0), vec![5_000.0, 15_000.0, 25_000.0]);
        assert!(trial_starts(10_000.0, 5_000.0, 4_000.0).is_empty());
    }

    #[test]
    fn zero_duration_is_rejected_by_name() {
        let mut cfg = SimulateConfig::desk();
        cfg.run.fixed_duration = 0.0;
        let err = cfg.validate().unwrap_err().to_string();
        assert!(err.contains("run.fixed_duration"), "{err}");
    }

    #[test]
    fn seeds_are_distinct() {
        let s = Seeds::from_master(9);
        let all = [s.network, s.pattern, s.plastic_stimulus, s.fixed_stimulus];
        for i in 0..4 {
            for j in i + 1..4 {
                assert_ne!(all[i], all[j]);
            }
        }
    }
}
