//! Reading and writing every artifact of the pipeline.
//!
//! Writers take any `Write`; [`save`] runs one into a temporary file that is
//! renamed into place, so readers never observe a half-written artifact.
//! Floats are written in shortest round-trip form and reading a file written
//! here gives back the value that was saved.

use std::collections::{BTreeMap, HashMap};
use std::fs::{self, File};
use std::io::{BufRead, BufReader, BufWriter, Read, Write};
use std::path::Path;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::analogs::{AnalogousSubthread, SecondOrderVertex};
use crate::causal::{ActivityEdge, ActivityGraph, Histogram};
use crate::error::{Error, Result};
use crate::model::{validate_network, Network, Neuron, NeuronId, Spike, SpikeId, SpikeTrain, Synapse};
use crate::relations::{ClassInterval, GnatClass, GnatMultigraph, MultigraphEdge, TrialInterval};

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> Error + '_ {
    move |source| Error::Io {
        path: path.to_path_buf(),
        source,
    }
}

/// Writes through `f` into `path` atomically.
pub fn save(path: &Path, f: impl FnOnce(&mut dyn Write) -> Result<()>) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(io_err(dir))?;
    }
    let mut tmp = path.as_os_str().to_owned();
    tmp.push(".tmp");
    let tmp = Path::new(&tmp);
    {
        let file = File::create(tmp).map_err(io_err(tmp))?;
        let mut w = BufWriter::new(file);
        f(&mut w)?;
        w.flush().map_err(io_err(tmp))?;
    }
    fs::rename(tmp, path).map_err(io_err(path))
}

/// Opens `path` for buffered reading.
pub fn open(path: &Path) -> Result<BufReader<File>> {
    Ok(BufReader::new(File::open(path).map_err(io_err(path))?))
}

fn csv_writer(w: &mut dyn Write) -> csv::Writer<&mut dyn Write> {
    csv::WriterBuilder::new().has_headers(false).terminator(csv::Terminator::Any(b'\n')).from_writer(w)
}

fn csv_rows<T: for<'de> Deserialize<'de>>(r: impl Read) -> Result<Vec<T>> {
    Ok(csv::Reader::from_reader(r).deserialize().collect::<Result<Vec<T>, _>>()?)
}

fn write_rows<T: Serialize>(w: &mut dyn Write, header: &[&str], rows: impl IntoIterator<Item = T>) -> Result<()> {
    let mut cw = csv_writer(w);
    // Written explicitly so that an empty file still carries its header.
    cw.write_record(header)?;
    for row in rows {
        cw.serialize(row)?;
    }
    cw.flush().map_err(csv::Error::from)?;
    Ok(())
}

fn write_json<T: Serialize + ?Sized>(w: &mut dyn Write, value: &T) -> Result<()> {
    serde_json::to_writer_pretty(&mut *w, value)?;
    w.write_all(b"\n")?;
    Ok(())
}

fn format_err(format: &'static str, line: usize, reason: impl Into<String>) -> Error {
    Error::Format {
        format,
        line,
        reason: reason.into(),
    }
}

// Spike trains.

#[derive(Serialize, Deserialize)]
struct SpikeRow {
    spike_id: u32,
    neuron_id: u32,
    time_ms: f64,
}

const SPIKE_HEADER: [&str; 3] = ["spike_id", "neuron_id", "time_ms"];

pub fn write_spikes(w: &mut dyn Write, train: &SpikeTrain) -> Result<()> {
    write_rows(
        w,
        &SPIKE_HEADER,
        train.iter().map(|(id, s)| SpikeRow {
            spike_id: id.0,
            neuron_id: s.neuron.0,
            time_ms: s.time,
        }),
    )
}

/// Reads a spike train; without `duration` the last spike time is used.
/// Rows must already be in canonical order with consecutive ids.
pub fn read_spikes(r: impl Read, duration: Option<f64>) -> Result<SpikeTrain> {
    let rows: Vec<SpikeRow> = csv_rows(r)?;
    for (i, row) in rows.iter().enumerate() {
        if row.spike_id as usize != i {
            return Err(format_err("spike train", i + 2, "spike ids must be consecutive from 0"));
        }
    }
    let events: Vec<Spike> = rows.iter().map(|r| Spike::new(r.neuron_id, r.time_ms)).collect();
    let train = SpikeTrain::from_events(events, duration)?;
    if train.spikes().iter().zip(&rows).any(|(s, r)| s.neuron.0 != r.neuron_id || s.time != r.time_ms) {
        return Err(format_err("spike train", 0, "rows are not sorted by (time, neuron)"));
    }
    Ok(train)
}

// Networks.

#[derive(Serialize, Deserialize)]
struct NeuronRec {
    id: u32,
    x: f64,
    y: f64,
    excitatory: bool,
}

#[derive(Serialize, Deserialize)]
struct SynapseRec {
    pre: u32,
    post: u32,
    weight: f64,
    delay_ms: f64,
}

#[derive(Serialize, Deserialize)]
struct NetworkFile {
    width_um: f64,
    height_um: f64,
    neurons: Vec<NeuronRec>,
    synapses: Vec<SynapseRec>,
}

pub fn write_network(w: &mut dyn Write, net: &Network) -> Result<()> {
    let file = NetworkFile {
        width_um: net.width,
        height_um: net.height,
        neurons: net
            .neurons
            .iter()
            .enumerate()
            .map(|(i, n)| NeuronRec {
                id: i as u32,
                x: n.x,
                y: n.y,
                excitatory: n.excitatory,
            })
            .collect(),
        synapses: net
            .synapses
            .iter()
            .map(|s| SynapseRec {
                pre: s.pre.0,
                post: s.post.0,
                weight: s.weight,
                delay_ms: s.delay,
            })
            .collect(),
    };
    write_json(w, &file)
}

/// Reads and validates a network.
pub fn read_network(r: impl Read) -> Result<Network> {
    let file: NetworkFile = serde_json::from_reader(r)?;
    if let Some((i, _)) = file.neurons.iter().enumerate().find(|(i, n)| n.id as usize != *i) {
        return Err(Error::InvalidNetwork(format!("neuron #{i} has id out of order")));
    }
    let net = Network {
        width: file.width_um,
        height: file.height_um,
        neurons: file
            .neurons
            .iter()
            .map(|n| Neuron {
                x: n.x,
                y: n.y,
                excitatory: n.excitatory,
            })
            .collect(),
        synapses: file
            .synapses
            .iter()
            .map(|s| Synapse {
                pre: NeuronId(s.pre),
                post: NeuronId(s.post),
                weight: s.weight,
                delay: s.delay_ms,
            })
            .collect(),
    };
    let violations = validate_network(&net);
    if let Some(v) = violations.first() {
        return Err(Error::InvalidNetwork(format!("{v} ({} violations)", violations.len())));
    }
    Ok(net)
}

// Activity graphs.

#[derive(Serialize, Deserialize)]
struct EdgeRow {
    pre_spike_id: u32,
    post_spike_id: u32,
    omega: f64,
}

pub fn write_edges(w: &mut dyn Write, graph: &ActivityGraph) -> Result<()> {
    write_rows(
        w,
        &["pre_spike_id", "post_spike_id", "omega"],
        graph.edges().iter().map(|e| EdgeRow {
            pre_spike_id: e.pre.0,
            post_spike_id: e.post.0,
            omega: e.omega,
        }),
    )
}

/// Reads an edge list over `train`, resolving each edge to its synapse.
pub fn read_edges(r: impl Read, train: Arc<SpikeTrain>, net: &Network) -> Result<ActivityGraph> {
    let rows: Vec<EdgeRow> = csv_rows(r)?;
    let synapse_of: HashMap<(NeuronId, NeuronId), u32> = net
        .synapses
        .iter()
        .enumerate()
        .map(|(i, s)| ((s.pre, s.post), i as u32))
        .collect();
    let edges = rows
        .iter()
        .enumerate()
        .map(|(i, row)| {
            let (pre, post) = (SpikeId(row.pre_spike_id), SpikeId(row.post_spike_id));
            if pre.index() >= train.len() || post.index() >= train.len() {
                return Err(format_err("edge list", i + 2, "spike id outside the train"));
            }
            let synapse = *synapse_of
                .get(&(train.neuron(pre), train.neuron(post)))
                .ok_or_else(|| format_err("edge list", i + 2, "no synapse joins the two neurons"))?;
            Ok(ActivityEdge {
                pre,
                post,
                omega: row.omega,
                synapse,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    ActivityGraph::from_edges(train, net, edges)
}

// Histograms.

#[derive(Serialize, Deserialize)]
struct HistRow {
    bin_left: f64,
    count: u64,
}

pub fn write_histogram(w: &mut dyn Write, h: &Histogram) -> Result<()> {
    write_rows(
        w,
        &["bin_left", "count"],
        h.rows().map(|(bin_left, count)| HistRow { bin_left, count }),
    )
}

pub fn read_histogram(r: impl Read, bin_width: f64) -> Result<Histogram> {
    let rows: Vec<HistRow> = csv_rows(r)?;
    let bins: BTreeMap<i64, u64> = rows
        .iter()
        .map(|row| ((row.bin_left / bin_width).round() as i64, row.count))
        .collect();
    let mut h = Histogram::from_bins(bin_width, &bins);
    if h.counts.len() != rows.len() {
        return Err(format_err("histogram", 0, "bins are not contiguous"));
    }
    if rows.is_empty() {
        h = Histogram::empty(bin_width);
    }
    Ok(h)
}

// Thread membership.

#[derive(Serialize, Deserialize)]
struct GnatRow {
    spike_id: u32,
    gnat_id: i64,
}

/// One row per spike; `-1` marks spikes outside every thread.
pub fn write_membership(w: &mut dyn Write, membership: &[Option<u32>]) -> Result<()> {
    write_rows(
        w,
        &["spike_id", "gnat_id"],
        membership.iter().enumerate().map(|(i, g)| GnatRow {
            spike_id: i as u32,
            gnat_id: g.map_or(-1, i64::from),
        }),
    )
}

pub fn read_membership(r: impl Read) -> Result<Vec<Option<u32>>> {
    let rows: Vec<GnatRow> = csv_rows(r)?;
    rows.iter()
        .enumerate()
        .map(|(i, row)| {
            if row.spike_id as usize != i {
                return Err(format_err("thread membership", i + 2, "spike ids must be consecutive from 0"));
            }
            match row.gnat_id {
                -1 => Ok(None),
                g => u32::try_from(g)
                    .map(Some)
                    .map_err(|_| format_err("thread membership", i + 2, "invalid thread id")),
            }
        })
        .collect()
}

pub fn write_json_file<T: Serialize>(w: &mut dyn Write, value: &T) -> Result<()> {
    write_json(w, value)
}

pub fn read_json_file<T: for<'de> Deserialize<'de>>(r: impl Read) -> Result<T> {
    Ok(serde_json::from_reader(r)?)
}

// Analogous subthreads.

#[derive(Serialize, Deserialize)]
struct SubthreadRec {
    id: u32,
    size: usize,
    vertices: Vec<SecondOrderVertex>,
    edges: Vec<(u32, u32)>,
    gnat_a: Option<u32>,
    gnat_b: Option<u32>,
    overlapping: bool,
}

/// One JSON object per line.
pub fn write_subthreads(w: &mut dyn Write, subthreads: &[AnalogousSubthread]) -> Result<()> {
    for s in subthreads {
        let rec = SubthreadRec {
            id: s.id,
            size: s.size(),
            vertices: s.vertices.clone(),
            edges: s.edges.clone(),
            gnat_a: s.gnat_a,
            gnat_b: s.gnat_b,
            overlapping: s.overlapping,
        };
        serde_json::to_writer(&mut *w, &rec)?;
        w.write_all(b"\n")?;
    }
    Ok(())
}

pub fn read_subthreads(r: impl Read) -> Result<Vec<AnalogousSubthread>> {
    let mut out = Vec::new();
    for (i, line) in BufReader::new(r).lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let rec: SubthreadRec = serde_json::from_str(&line)?;
        if rec.size != rec.vertices.len() {
            return Err(format_err("subthreads", i + 1, "size does not match vertex count"));
        }
        if rec.edges.iter().any(|&(u, v)| u as usize >= rec.size || v as usize >= rec.size) {
            return Err(format_err("subthreads", i + 1, "edge refers to a missing vertex"));
        }
        let mut s = AnalogousSubthread::new(rec.id, rec.vertices, rec.edges, false);
        s.overlapping = rec.overlapping;
        s.gnat_a = rec.gnat_a;
        s.gnat_b = rec.gnat_b;
        out.push(s);
    }
    Ok(out)
}

// Multigraph, classes and intervals.

pub fn write_multigraph(w: &mut dyn Write, mg: &GnatMultigraph) -> Result<()> {
    write_rows(w, &["gnat_a", "gnat_b", "subthread_id", "weight"], &mg.edges)
}

pub fn read_multigraph(r: impl Read, n_gnats: usize) -> Result<GnatMultigraph> {
    let edges: Vec<MultigraphEdge> = csv_rows(r)?;
    if let Some(i) = edges
        .iter()
        .position(|e| e.gnat_a as usize >= n_gnats || e.gnat_b as usize >= n_gnats)
    {
        return Err(format_err("multigraph", i + 2, "thread id out of range"));
    }
    Ok(GnatMultigraph { n_gnats, edges })
}

/// `{"class_id": [gnat ids]}`, classes in numeric order.
pub fn write_classes(w: &mut dyn Write, classes: &[GnatClass]) -> Result<()> {
    if classes.is_empty() {
        w.write_all(b"{}\n")?;
        return Ok(());
    }
    w.write_all(b"{\n")?;
    for (i, c) in classes.iter().enumerate() {
        let sep = if i + 1 == classes.len() { "" } else { "," };
        writeln!(w, "  \"{}\": {}{}", c.class_id, serde_json::to_string(&c.gnats)?, sep)?;
    }
    w.write_all(b"}\n")?;
    Ok(())
}

/// Class ids and member threads, ascending by class id.
pub fn read_classes(r: impl Read) -> Result<Vec<(u32, Vec<u32>)>> {
    let map: BTreeMap<String, Vec<u32>> = serde_json::from_reader(r)?;
    let mut out = map
        .into_iter()
        .map(|(k, v)| {
            k.parse::<u32>()
                .map(|id| (id, v))
                .map_err(|_| format_err("classes", 0, format!("class id `{k}` is not a number")))
        })
        .collect::<Result<Vec<_>>>()?;
    out.sort_by_key(|c| c.0);
    Ok(out)
}

#[derive(Serialize, Deserialize)]
struct IntervalRow {
    gnat_id: u32,
    class_id: u32,
    t_start_ms: f64,
    t_end_ms: f64,
}

pub fn write_intervals(w: &mut dyn Write, intervals: &[ClassInterval]) -> Result<()> {
    write_rows(
        w,
        &["gnat_id", "class_id", "t_start_ms", "t_end_ms"],
        intervals.iter().map(|iv| IntervalRow {
            gnat_id: iv.gnat_id,
            class_id: iv.class_id,
            t_start_ms: iv.t_start,
            t_end_ms: iv.t_end,
        }),
    )
}

pub fn read_intervals(r: impl Read) -> Result<Vec<ClassInterval>> {
    let rows: Vec<IntervalRow> = csv_rows(r)?;
    Ok(rows
        .into_iter()
        .map(|r| ClassInterval {
            gnat_id: r.gnat_id,
            class_id: r.class_id,
            t_start: r.t_start_ms,
            t_end: r.t_end_ms,
        })
        .collect())
}

#[derive(Serialize, Deserialize)]
struct OverlayRow {
    gnat_id: u32,
    class_id: u32,
    trial_index: u32,
    rel_start_ms: f64,
    rel_end_ms: f64,
    clipped: bool,
}

pub fn write_overlay(w: &mut dyn Write, trials: &[Vec<TrialInterval>]) -> Result<()> {
    write_rows(
        w,
        &["gnat_id", "class_id", "trial_index", "rel_start_ms", "rel_end_ms", "clipped"],
        trials.iter().flatten().map(|t| OverlayRow {
            gnat_id: t.gnat_id,
            class_id: t.class_id,
            trial_index: t.trial_index,
            rel_start_ms: t.rel_start,
            rel_end_ms: t.rel_end,
            clipped: t.clipped,
        }),
    )
}

/// Flat list of overlay rows in file order.
pub fn read_overlay(r: impl Read) -> Result<Vec<TrialInterval>> {
    let rows: Vec<OverlayRow> = csv_rows(r)?;
    Ok(rows
        .into_iter()
        .map(|r| TrialInterval {
            trial_index: r.trial_index,
            gnat_id: r.gnat_id,
            class_id: r.class_id,
            rel_start: r.rel_start_ms,
            rel_end: r.rel_end_ms,
            clipped: r.clipped,
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn to_bytes(f: impl FnOnce(&mut dyn Write) -> Result<()>) -> Vec<u8> {
        let mut buf = Vec::new();
        f(&mut buf).unwrap();
        buf
    }

    #[test]
    fn spike_train_round_trip() {
        let train = SpikeTrain::from_events(
            vec![Spike::new(3, 0.1 + 0.2), Spike::new(1, 7.0), Spike::new(0, 7.0)],
            None,
        )
        .unwrap();
        let bytes = to_bytes(|w| write_spikes(w, &train));
        let text = String::from_utf8(bytes.clone()).unwrap();
        assert!(text.starts_with("spike_id,neuron_id,time_ms\n0,3,0.30000000000000004\n"));
        assert!(!text.contains('\r'));
        assert_eq!(read_spikes(&bytes[..], None).unwrap(), train);
    }

    #[test]
    fn empty_files_keep_headers() {
        let bytes = to_bytes(|w| write_spikes(w, &SpikeTrain::empty(0.0)));
        assert_eq!(bytes, b"spike_id,neuron_id,time_ms\n");
        assert!(read_spikes(&bytes[..], None).unwrap().is_empty());
        assert_eq!(to_bytes(|w| write_classes(w, &[])), b"{}\n");
    }

    #[test]
    fn unsorted_spike_rows_are_rejected() {
        let text = "spike_id,neuron_id,time_ms\n0,1,5.0\n1,0,2.0\n";
        assert!(read_spikes(text.as_bytes(), None).is_err());
    }

    #[test]
    fn membership_round_trip() {
        let m = vec![Some(0), None, Some(2), Some(0)];
        let bytes = to_bytes(|w| write_membership(w, &m));
        assert!(String::from_utf8_lossy(&bytes).contains("1,-1\n"));
        assert_eq!(read_membership(&bytes[..]).unwrap(), m);
    }

    #[test]
    fn classes_round_trip_in_numeric_order() {
        let classes: Vec<GnatClass> = (0..12)
            .map(|i| GnatClass {
                class_id: i,
                gnats: vec![2 * i, 2 * i + 1],
                subthreads: vec![],
            })
            .collect();
        let bytes = to_bytes(|w| write_classes(w, &classes));
        let text = String::from_utf8(bytes.clone()).unwrap();
        assert!(text.find("\"2\"").unwrap() < text.find("\"10\"").unwrap());
        let back = read_classes(&bytes[..]).unwrap();
        assert_eq!(back.len(), 12);
        assert_eq!(back[11], (11, vec![22, 23]));
    }
}
