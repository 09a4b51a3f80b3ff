//! `gnatkit`: simulate spiking networks and decompose their activity into
//! causal threads.
//!
//! Exit codes: 0 success, 1 unexpected failure, 2 invalid configuration or
//! arguments, 3 missing input (including an upstream stage not yet run),
//! 4 malformed input file, 5 computation failure (numerical blow-up,
//! intractable size, inconsistent artifacts).

mod config;

use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::Result;
use clap::{Parser, Subcommand};
use gnatkit_core::causal::ShuffleMethod;
use gnatkit_core::model::NormKind;
use gnatkit_core::pipeline::{self, AnalyzeConfig, Seeds};
use gnatkit_core::plot::PlotKind;
use gnatkit_core::{Error, Execution};

use crate::config::ConfigFile;

#[derive(Parser, Debug)]
#[command(name = "gnatkit", version, about = "Causal activity threads in spiking networks")]
struct Cli {
    /// INI file with [network], [stimulus], [stdp], [run] and [analysis] sections.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Run directory holding inputs and outputs.
    #[arg(long, global = true, default_value = "gnatkit-out")]
    out_dir: PathBuf,
    /// Master seed; overrides every seed in the config.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Worker threads (1 runs sequentially).
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Repeat for more detail.
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    verbose: u8,
    #[command(flatten)]
    analysis: AnalysisArgs,
    #[command(subcommand)]
    command: Command,
}

#[derive(clap::Args, Debug, Default)]
struct AnalysisArgs {
    /// Spike train CSV (default: <out-dir>/spikes.csv).
    #[arg(long, global = true)]
    spikes: Option<PathBuf>,
    /// Network JSON (default: <out-dir>/network.json).
    #[arg(long, global = true)]
    network: Option<PathBuf>,
    /// Decay constant of the causal kernel, ms.
    #[arg(long, global = true)]
    tau: Option<f64>,
    #[arg(long, global = true, value_parser = parse_from_str::<NormKind>)]
    norm: Option<NormKind>,
    #[arg(long, global = true)]
    log_threshold: Option<f64>,
    /// Pick the threshold at the knee of the -ln(omega) histogram.
    #[arg(long, global = true)]
    auto_threshold: bool,
    /// Also compute the shuffled-train control.
    #[arg(long, global = true)]
    shuffle_seed: Option<u64>,
    #[arg(long, global = true, value_parser = parse_from_str::<ShuffleMethod>)]
    shuffle_method: Option<ShuffleMethod>,
    #[arg(long, global = true)]
    min_spikes: Option<usize>,
    /// Compare the recording with itself (true) or with --compare-spikes (false).
    #[arg(long = "self", global = true)]
    self_mode: Option<bool>,
    #[arg(long, global = true)]
    compare_spikes: Option<PathBuf>,
    #[arg(long, global = true)]
    top_k: Option<usize>,
    #[arg(long, global = true)]
    no_plots: bool,
}

fn parse_from_str<T: std::str::FromStr<Err = Error>>(s: &str) -> Result<T, String> {
    s.parse().map_err(|e: Error| e.to_string())
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Run the plastic then the fixed-weight phase and save both recordings.
    Simulate,
    /// Build the activity graph and the -ln(omega) histogram.
    BuildGraph,
    /// Split the activity graph into threads.
    Gnats,
    /// Find analogous subthreads.
    Analogs,
    /// Relate threads through their subthreads.
    Relations,
    /// Run every analysis stage and plot.
    Analyze,
    /// Render one figure as SVG.
    Plot {
        #[arg(long, value_parser = parse_from_str::<PlotKind>)]
        kind: PlotKind,
        /// Destination (default: <out-dir>/plots/<kind>.svg).
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Print the summaries of the stages run so far.
    Stats,
}

impl AnalysisArgs {
    fn apply(&self, cfg: &mut AnalyzeConfig) {
        if let Some(p) = &self.spikes {
            cfg.spikes = Some(p.clone());
        }
        if let Some(p) = &self.network {
            cfg.network = Some(p.clone());
        }
        if let Some(v) = self.tau {
            cfg.omega.tau = v;
        }
        if let Some(v) = self.norm {
            cfg.omega.norm_kind = v;
        }
        if let Some(v) = self.log_threshold {
            cfg.omega.log_threshold = v;
        }
        cfg.auto_threshold |= self.auto_threshold;
        if self.shuffle_seed.is_some() {
            cfg.shuffle_seed = self.shuffle_seed;
        }
        if let Some(v) = self.shuffle_method {
            cfg.shuffle_method = v;
        }
        if let Some(v) = self.min_spikes {
            cfg.min_spikes = v;
        }
        if let Some(v) = self.self_mode {
            cfg.self_mode = v;
        }
        if let Some(p) = &self.compare_spikes {
            cfg.compare_spikes = Some(p.clone());
        }
        if let Some(v) = self.top_k {
            cfg.top_k = v;
        }
        if self.no_plots {
            cfg.plots = false;
        }
    }
}

fn run(cli: &Cli) -> Result<()> {
    let file = ConfigFile::load(cli.config.as_deref())?;
    let exec = match cli.threads {
        Some(0) => anyhow::bail!("--threads must be at least 1"),
        Some(1) => Execution::Sequential,
        Some(n) => {
            rayon::ThreadPoolBuilder::new().num_threads(n).build_global()?;
            Execution::Parallel
        }
        None => Execution::default(),
    };
    let dir = cli.out_dir.as_path();
    let analysis = || -> Result<AnalyzeConfig> {
        let mut cfg = file.analyze()?;
        cli.analysis.apply(&mut cfg);
        if let Some(seed) = cli.seed {
            cfg.shuffle_seed.get_or_insert(seed);
        }
        Ok(cfg)
    };
    match &cli.command {
        Command::Simulate => {
            let mut cfg = file.simulate()?;
            if let Some(seed) = cli.seed {
                cfg.seeds = Seeds::from_master(seed);
            }
            pipeline::cmd_simulate(&cfg, dir, exec)?;
        }
        Command::BuildGraph => {
            let s = pipeline::stage_build_graph(&analysis()?, dir, exec)?;
            log::info!("{} edges over {} spikes", s.edges, s.spikes);
        }
        Command::Gnats => {
            let s = pipeline::stage_gnats(&analysis()?, dir, exec)?;
            log::info!("{} threads, {} isolated spikes", s.gnats, s.isolated);
        }
        Command::Analogs => {
            let s = pipeline::stage_analogs(&analysis()?, dir, exec)?;
            log::info!("{} analogous subthreads", s.subthreads);
        }
        Command::Relations => {
            let n = pipeline::stage_relations(&analysis()?, dir, exec)?;
            log::info!("{n} thread classes");
        }
        Command::Analyze => pipeline::cmd_analyze(&analysis()?, dir, exec)?,
        Command::Plot { kind, output } => {
            let path = pipeline::cmd_plot(&analysis()?, dir, *kind, output.as_deref())?;
            log::info!("wrote {}", path.display());
        }
        Command::Stats => {
            let text = serde_json::to_string_pretty(&pipeline::cmd_stats(dir)?)?;
            match writeln!(std::io::stdout().lock(), "{text}") {
                Err(e) if e.kind() == std::io::ErrorKind::BrokenPipe => {}
                other => other?,
            }
        }
    }
    Ok(())
}

fn exit_code(err: &anyhow::Error) -> u8 {
    match err.downcast_ref::<Error>() {
        Some(Error::InvalidParameter { .. } | Error::UnknownName { .. }) => 2,
        Some(Error::MissingStage { .. } | Error::Io { .. } | Error::Stream(_)) => 3,
        Some(
            Error::Format { .. }
            | Error::Csv(_)
            | Error::Json(_)
            | Error::InvalidNetwork(_)
            | Error::InvalidSpikeTime { .. }
            | Error::SpikeBeyondDuration { .. }
            | Error::UnknownNeuron { .. },
        ) => 4,
        Some(
            Error::NumericalBlowUp { .. }
            | Error::Intractable { .. }
            | Error::OrphanSubthread { .. }
            | Error::NetworkMismatch,
        ) => 5,
        None if err.to_string().starts_with("config:") || err.to_string().starts_with("--threads") => 2,
        None => 1,
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let level = match cli.verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).init();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::from(exit_code(&err))
        }
    }
}
