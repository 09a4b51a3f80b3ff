//! Plain SVG figures. Output depends only on the inputs: coordinates are
//! printed with fixed precision and colors are a function of the id.

use std::fmt::{self, Write as _};
use std::str::FromStr;

use crate::causal::{ActivityGraph, Histogram};
use crate::error::{Error, Result};
use crate::model::{Network, SpikeTrain};
use crate::relations::{ClassInterval, TrialInterval};
use crate::threads::{DurationStats, GnatDecomposition};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum PlotKind {
    Raster,
    RasterThreads,
    NegLogOmega,
    Durations,
    ClassTimeline,
    TrialOverlay,
}

impl PlotKind {
    pub const ALL: [PlotKind; 6] = [
        PlotKind::Raster,
        PlotKind::RasterThreads,
        PlotKind::NegLogOmega,
        PlotKind::Durations,
        PlotKind::ClassTimeline,
        PlotKind::TrialOverlay,
    ];

    pub fn name(self) -> &'static str {
        match self {
            PlotKind::Raster => "raster",
            PlotKind::RasterThreads => "raster-threads",
            PlotKind::NegLogOmega => "neg-log-omega",
            PlotKind::Durations => "durations",
            PlotKind::ClassTimeline => "class-timeline",
            PlotKind::TrialOverlay => "trial-overlay",
        }
    }
}

impl FromStr for PlotKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        PlotKind::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| Error::UnknownName {
                what: "plot kind",
                name: s.to_string(),
            })
    }
}

impl fmt::Display for PlotKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Fill color for an id; consecutive ids land far apart on the hue circle.
pub fn color(id: u32) -> String {
    let hue = (id as u64 * 137_508 / 1000) % 360;
    let light = [42, 55, 35][(id as usize / 360) % 3];
    format!("hsl({hue},70%,{light}%)")
}

const GREY: &str = "#b0b0b0";
const W: f64 = 800.0;
const H: f64 = 420.0;
const LEFT: f64 = 60.0;
const RIGHT: f64 = 20.0;
const TOP: f64 = 30.0;
const BOTTOM: f64 = 45.0;

/// Data-to-pixel mapping plus the document under construction.
struct Canvas {
    out: String,
    x: (f64, f64),
    y: (f64, f64),
}

fn range(lo: f64, hi: f64) -> (f64, f64) {
    if lo.is_finite() && hi.is_finite() && hi > lo {
        (lo, hi)
    } else if lo.is_finite() {
        (lo, lo + 1.0)
    } else {
        (0.0, 1.0)
    }
}

impl Canvas {
    fn new(title: &str, x: (f64, f64), y: (f64, f64), x_label: &str, y_label: &str) -> Self {
        let mut c = Canvas {
            out: String::new(),
            x: range(x.0, x.1),
            y: range(y.0, y.1),
        };
        let _ = writeln!(
            c.out,
            "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{W}\" height=\"{H}\" viewBox=\"0 0 {W} {H}\" font-family=\"sans-serif\" font-size=\"11\">"
        );
        let _ = writeln!(c.out, "<rect width=\"{W}\" height=\"{H}\" fill=\"white\"/>");
        let _ = writeln!(c.out, "<text x=\"{:.1}\" y=\"18\" text-anchor=\"middle\" font-size=\"13\">{}</text>", W / 2.0, escape(title));
        c.axes(x_label, y_label);
        c
    }

    fn px(&self, x: f64) -> f64 {
        LEFT + (x - self.x.0) / (self.x.1 - self.x.0) * (W - LEFT - RIGHT)
    }

    fn py(&self, y: f64) -> f64 {
        H - BOTTOM - (y - self.y.0) / (self.y.1 - self.y.0) * (H - TOP - BOTTOM)
    }

    fn axes(&mut self, x_label: &str, y_label: &str) {
        let (x0, x1, y0, y1) = (LEFT, W - RIGHT, TOP, H - BOTTOM);
        let _ = writeln!(
            self.out,
            "<path d=\"M{x0:.1},{y0:.1}V{y1:.1}H{x1:.1}\" fill=\"none\" stroke=\"black\"/>"
        );
        for i in 0..=4 {
            let f = i as f64 / 4.0;
            let xv = self.x.0 + f * (self.x.1 - self.x.0);
            let yv = self.y.0 + f * (self.y.1 - self.y.0);
            let (px, py) = (self.px(xv), self.py(yv));
            let _ = writeln!(
                self.out,
                "<line x1=\"{px:.1}\" y1=\"{y1:.1}\" x2=\"{px:.1}\" y2=\"{:.1}\" stroke=\"black\"/><text x=\"{px:.1}\" y=\"{:.1}\" text-anchor=\"middle\">{}</text>",
                y1 + 4.0,
                y1 + 16.0,
                tick(xv)
            );
            let _ = writeln!(
                self.out,
                "<line x1=\"{:.1}\" y1=\"{py:.1}\" x2=\"{x0:.1}\" y2=\"{py:.1}\" stroke=\"black\"/><text x=\"{:.1}\" y=\"{:.1}\" text-anchor=\"end\">{}</text>",
                x0 - 4.0,
                x0 - 6.0,
                py + 4.0,
                tick(yv)
            );
        }
        let _ = writeln!(
            self.out,
            "<text x=\"{:.1}\" y=\"{:.1}\" text-anchor=\"middle\">{}</text>",
            (x0 + x1) / 2.0,
            H - 8.0,
            escape(x_label)
        );
        let _ = writeln!(
            self.out,
            "<text transform=\"translate(14,{:.1}) rotate(-90)\" text-anchor=\"middle\">{}</text>",
            (y0 + y1) / 2.0,
            escape(y_label)
        );
    }

    fn dot(&mut self, x: f64, y: f64, fill: &str) {
        let _ = writeln!(
            self.out,
            "<circle cx=\"{:.2}\" cy=\"{:.2}\" r=\"1.5\" fill=\"{fill}\"/>",
            self.px(x),
            self.py(y)
        );
    }

    fn segment(&mut self, a: (f64, f64), b: (f64, f64), stroke: &str) {
        let _ = writeln!(
            self.out,
            "<line x1=\"{:.2}\" y1=\"{:.2}\" x2=\"{:.2}\" y2=\"{:.2}\" stroke=\"{stroke}\" stroke-width=\"0.5\"/>",
            self.px(a.0),
            self.py(a.1),
            self.px(b.0),
            self.py(b.1)
        );
    }

    /// Axis-aligned box between data corners.
    fn rect(&mut self, x0: f64, x1: f64, y0: f64, y1: f64, fill: &str) {
        let (l, r) = (self.px(x0), self.px(x1));
        let (t, b) = (self.py(y1), self.py(y0));
        let _ = writeln!(
            self.out,
            "<rect x=\"{l:.2}\" y=\"{t:.2}\" width=\"{:.2}\" height=\"{:.2}\" fill=\"{fill}\"/>",
            (r - l).max(0.5),
            (b - t).max(0.0)
        );
    }

    fn vline(&mut self, x: f64, stroke: &str) {
        let px = self.px(x);
        let _ = writeln!(
            self.out,
            "<line x1=\"{px:.2}\" y1=\"{TOP:.1}\" x2=\"{px:.2}\" y2=\"{:.1}\" stroke=\"{stroke}\" stroke-dasharray=\"4 3\"/>",
            H - BOTTOM
        );
    }

    fn finish(mut self) -> String {
        self.out.push_str("</svg>\n");
        self.out
    }
}

fn tick(v: f64) -> String {
    let s = if v.abs() >= 100.0 || v == v.round() {
        format!("{v:.0}")
    } else {
        format!("{v:.2}")
    };
    if s == "-0" { "0".into() } else { s }
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

fn time_range(train: &SpikeTrain) -> (f64, f64) {
    (0.0, train.duration().max(train.spikes().last().map_or(0.0, |s| s.time)))
}

/// All spikes; inhibitory neurons in grey when the network is known.
pub fn raster(train: &SpikeTrain, net: Option<&Network>) -> String {
    let n = train.neuron_span().max(net.map_or(0, Network::len)) as f64;
    let mut c = Canvas::new("Spike raster", time_range(train), (0.0, n), "time (ms)", "neuron");
    for s in train.spikes() {
        let inhibitory = net.is_some_and(|net| !net.is_excitatory(s.neuron));
        c.dot(s.time, s.neuron.0 as f64, if inhibitory { GREY } else { "black" });
    }
    c.finish()
}

/// Spikes colored by thread with causal edges drawn between them.
pub fn raster_threads(graph: &ActivityGraph, decomp: &GnatDecomposition) -> String {
    let train = graph.train();
    let (n, _) = graph.network_shape();
    let mut c = Canvas::new("Activity threads", time_range(train), (0.0, n as f64), "time (ms)", "neuron");
    for e in graph.edges() {
        let g = decomp.gnat_of(e.pre).unwrap_or(0);
        let (a, b) = (train.spike(e.pre), train.spike(e.post));
        c.segment((a.time, a.neuron.0 as f64), (b.time, b.neuron.0 as f64), &color(g));
    }
    for s in graph.vertices() {
        let sp = train.spike(s);
        let fill = decomp.gnat_of(s).map_or_else(|| GREY.to_string(), color);
        c.dot(sp.time, sp.neuron.0 as f64, &fill);
    }
    c.finish()
}

fn bars(title: &str, x_label: &str, rows: &[(f64, u64)], width: f64, marker: Option<f64>) -> String {
    let x0 = rows.first().map_or(0.0, |r| r.0);
    let x1 = rows.last().map_or(1.0, |r| r.0 + width);
    let x1 = marker.map_or(x1, |m| x1.max(m));
    let top = rows.iter().map(|r| r.1).max().unwrap_or(0) as f64;
    let mut c = Canvas::new(title, (x0.min(marker.unwrap_or(x0)), x1), (0.0, top.max(1.0)), x_label, "count");
    for &(left, count) in rows.iter().filter(|r| r.1 > 0) {
        c.rect(left, left + width, 0.0, count as f64, "steelblue");
    }
    if let Some(m) = marker {
        c.vline(m, "crimson");
    }
    c.finish()
}

/// Histogram of `-ln(omega)` with the threshold marked.
pub fn neg_log_omega(hist: &Histogram, threshold: Option<f64>) -> String {
    let rows: Vec<(f64, u64)> = hist.rows().collect();
    bars("Distribution of -ln(omega)", "-ln(omega)", &rows, hist.bin_width, threshold)
}

pub fn durations(stats: &DurationStats) -> String {
    let rows: Vec<(f64, u64)> = stats
        .counts
        .iter()
        .enumerate()
        .map(|(i, &c)| (i as f64 * stats.bin_width, c))
        .collect();
    bars("Thread durations", "duration (ms)", &rows, stats.bin_width, None)
}

/// One row per class, one bar per classified thread.
pub fn class_timeline(intervals: &[ClassInterval], duration: f64) -> String {
    let classes = intervals.iter().map(|iv| iv.class_id + 1).max().unwrap_or(0) as f64;
    let t1 = intervals.iter().map(|iv| iv.t_end).fold(duration, f64::max);
    let mut c = Canvas::new("Thread classes over time", (0.0, t1), (0.0, classes), "time (ms)", "class");
    for iv in intervals {
        let y = iv.class_id as f64;
        c.rect(iv.t_start, iv.t_end, y + 0.1, y + 0.9, &color(iv.class_id));
    }
    c.finish()
}

/// Intervals of each trial stacked by trial index.
pub fn trial_overlay(trials: &[TrialInterval], trial_length: f64) -> String {
    let n = trials.iter().map(|t| t.trial_index + 1).max().unwrap_or(0) as f64;
    let mut c = Canvas::new("Thread classes per trial", (0.0, trial_length), (0.0, n), "time in trial (ms)", "trial");
    for t in trials {
        let y = t.trial_index as f64;
        c.rect(t.rel_start, t.rel_end, y + 0.1, y + 0.9, &color(t.class_id));
    }
    c.finish()
}
