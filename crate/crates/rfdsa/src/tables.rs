//! CSV tables written by the experiments, and readers for the formats
//! that are meant to be loaded back (datasets, topologies).

use std::path::Path;

use rfdsa_core::dsa::{Link, Node, Role, Topology};
use rfdsa_core::nnet::{Confusion, EpochRecord};
use rfdsa_core::outlier::SweepResult;
use rfdsa_core::sigsynth::{class_of, IqFrame, LabeledFrame, SourceKind, FRAME_LEN};
use rfdsa_core::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{io_err, Error, Result};

fn writer(path: &Path) -> Result<csv::Writer<std::fs::File>> {
    let f = std::fs::File::create(path).map_err(io_err(path))?;
    Ok(csv::Writer::from_writer(f))
}

/// Writes serializable rows with a header taken from the field names.
pub fn write_rows<T: Serialize>(path: &Path, rows: &[T]) -> Result<()> {
    let mut w = writer(path)?;
    for r in rows {
        w.serialize(r)?;
    }
    w.flush().map_err(io_err(path))
}

pub fn read_rows<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<Vec<T>> {
    let mut r = csv::Reader::from_path(path)?;
    r.deserialize().map(|row| row.map_err(Error::from)).collect()
}

/// One frame per record: id, source kind, SNR, I samples, Q samples, class.
pub fn write_dataset(path: &Path, frames: &[LabeledFrame]) -> Result<()> {
    let mut w = writer(path)?;
    let mut header = vec!["frame_id".to_string(), "modkind".into(), "snr_db".into()];
    header.extend((0..FRAME_LEN).map(|i| format!("i{i}")));
    header.extend((0..FRAME_LEN).map(|i| format!("q{i}")));
    header.push("class".into());
    w.write_record(&header)?;
    for (id, f) in frames.iter().enumerate() {
        let s = f.frame.samples();
        let mut rec = vec![id.to_string(), f.kind.to_string(), f.frame.snr_db.to_string()];
        rec.extend(s.iter().map(|c| c.re.to_string()));
        rec.extend(s.iter().map(|c| c.im.to_string()));
        rec.push(f.class.to_string());
        w.write_record(&rec)?;
    }
    w.flush().map_err(io_err(path))
}

pub fn read_dataset(path: &Path) -> Result<Vec<LabeledFrame>> {
    let mut r = csv::Reader::from_path(path)?;
    let bad = |why: String| Error::Config(format!("{}: {why}", path.display()));
    let mut out = Vec::new();
    for rec in r.records() {
        let rec = rec?;
        if rec.len() != 4 + 2 * FRAME_LEN {
            return Err(bad(format!("expected {} fields, found {}", 4 + 2 * FRAME_LEN, rec.len())));
        }
        let kind: SourceKind = rec[1].parse().map_err(|e| bad(format!("{e}")))?;
        let snr: f64 = rec[2].parse().map_err(|_| bad(format!("bad SNR {:?}", &rec[2])))?;
        let num = |i: usize| rec[i].parse::<f64>().map_err(|_| bad(format!("bad sample {:?}", &rec[i])));
        let samples = (0..FRAME_LEN)
            .map(|i| Ok(Complex64::new(num(3 + i)?, num(3 + FRAME_LEN + i)?)))
            .collect::<Result<Vec<_>>>()?;
        let class = rec[3 + 2 * FRAME_LEN].parse().map_err(|e| bad(format!("{e}")))?;
        if class != class_of(kind) {
            return Err(bad(format!("class {class} does not match {kind}")));
        }
        out.push(LabeledFrame {
            frame: IqFrame::new(samples, snr, kind)?,
            kind,
            class,
        });
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HistoryRow {
    pub epoch: usize,
    pub train_loss: f64,
    pub train_acc: f64,
    pub val_loss: f64,
    pub val_acc: f64,
}

impl From<&EpochRecord> for HistoryRow {
    fn from(r: &EpochRecord) -> Self {
        Self {
            epoch: r.epoch,
            train_loss: r.train_loss,
            train_acc: r.train_acc,
            val_loss: r.val_loss,
            val_acc: r.val_acc,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepCsvRow {
    pub contamination: f64,
    pub inlier_acc: f64,
    pub outlier_acc: f64,
    pub is_selected: bool,
}

pub fn sweep_rows(s: &SweepResult) -> Vec<SweepCsvRow> {
    s.rows
        .iter()
        .enumerate()
        .map(|(i, r)| SweepCsvRow {
            contamination: r.contamination,
            inlier_acc: r.inlier_acc,
            outlier_acc: r.outlier_acc,
            is_selected: i == s.selected,
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SnrAccuracyRow {
    pub snr_db: f64,
    pub samples: usize,
    pub accuracy: f64,
}

/// Square confusion matrix with row labels (truth) and one column per
/// predicted label.
pub fn write_confusion(path: &Path, labels: &[String], c: &Confusion) -> Result<()> {
    let mut w = writer(path)?;
    let mut header = vec!["truth".to_string()];
    header.extend(labels.iter().cloned());
    w.write_record(&header)?;
    for (label, row) in labels.iter().zip(c.counts()) {
        let mut rec = vec![label.clone()];
        rec.extend(row.iter().map(|n| n.to_string()));
        w.write_record(&rec)?;
    }
    w.flush().map_err(io_err(path))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeparationRow {
    pub trial_id: usize,
    pub snr_db: f64,
    pub true_pair: String,
    pub predicted_pair: String,
    pub correct: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsRow {
    pub scenario: String,
    pub classifier: String,
    pub jamming: bool,
    pub traffic_fusion: bool,
    pub outliers: bool,
    pub superposition: bool,
    pub seed: u64,
    pub throughput_packets: f64,
    pub outnet_success_pct: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TopologyRow {
    pub id: usize,
    pub role: String,
    pub x: f64,
    pub y: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinkRow {
    pub link: usize,
    pub tx: usize,
    pub rx: usize,
}

pub fn write_topology(nodes_path: &Path, links_path: &Path, topo: &Topology) -> Result<()> {
    let nodes: Vec<TopologyRow> = topo
        .nodes
        .iter()
        .map(|n| TopologyRow {
            id: n.id,
            role: n.role.name().into(),
            x: n.x,
            y: n.y,
        })
        .collect();
    write_rows(nodes_path, &nodes)?;
    let links: Vec<LinkRow> = topo
        .links
        .iter()
        .enumerate()
        .map(|(i, l)| LinkRow {
            link: i,
            tx: l.tx,
            rx: l.rx,
        })
        .collect();
    write_rows(links_path, &links)
}

pub fn read_topology(nodes_path: &Path, links_path: &Path, range: f64, side: f64) -> Result<Topology> {
    let nodes = read_rows::<TopologyRow>(nodes_path)?
        .into_iter()
        .map(|r| {
            let role = match r.role.as_str() {
                "in-network" => Role::InNetwork,
                "out-network" => Role::OutNetwork,
                "jammer" => Role::Jammer,
                other => return Err(Error::Config(format!("unknown role {other:?}"))),
            };
            Ok(Node {
                id: r.id,
                role,
                x: r.x,
                y: r.y,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let links = read_rows::<LinkRow>(links_path)?
        .into_iter()
        .map(|r| Link { tx: r.tx, rx: r.rx })
        .collect();
    Ok(Topology::from_parts(nodes, links, range, side)?)
}
