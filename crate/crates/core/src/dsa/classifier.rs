use alloc::vec::Vec;

use rand::seq::IndexedRandom as _;
use rand::Rng as _;

use super::{DsaError, SinrConfig, Topology};
use crate::math;
use crate::nnet::{scores_for, NeuralModel, ScoreVector};
use crate::rng::Rng;
use crate::sigsynth::{self, IqFrame, ModulationKind, SignalClass, SourceKind};

/// SNR grid of the per-SNR accuracy tables, in dB.
pub const SNR_GRID_DB: [f64; 10] = [0.0, 2.0, 4.0, 6.0, 8.0, 10.0, 12.0, 14.0, 16.0, 18.0];

/// Per-SNR accuracy of the baseline classifier.
pub const PER_SNR_ACCURACY: [f64; 10] = [0.906, 0.930, 0.928, 0.933, 0.934, 0.942, 0.950, 0.951, 0.933, 0.934];

/// Accuracy of a single classifier trained over all SNRs.
pub const TABLE_ALL_ACCURACY: f64 = 0.934;

/// Per-SNR accuracy when jammers use unknown signals and go through the
/// outlier detector.
pub const MCD_JAMMER_ACCURACY: [f64; 10] = [0.822, 0.814, 0.824, 0.832, 0.845, 0.843, 0.844, 0.847, 0.844, 0.839];

/// Per-SNR accuracy on superimposed signals after separation.
pub const SUPERIMPOSED_ACCURACY: [f64; 10] = [0.851, 0.820, 0.857, 0.843, 0.827, 0.824, 0.834, 0.843, 0.830, 0.841];

/// Index of the nearest grid SNR, clamped to the table range.
pub fn quantize_snr(snr_db: f64) -> usize {
    if !(snr_db > 0.0) {
        return 0;
    }
    (math::round(snr_db / 2.0) as usize).min(SNR_GRID_DB.len() - 1)
}

/// Accuracy looked up in a per-SNR table.
pub fn table_accuracy(table: &[f64; 10], snr_db: f64) -> f64 {
    table[quantize_snr(snr_db)]
}

/// How channel status is produced from the ground truth.
#[derive(Debug, Clone, Copy)]
pub enum Classifier<'a> {
    /// Always right, full confidence.
    Ideal,
    /// Uniformly random class, uniform scores.
    Random,
    /// Right with the all-SNR accuracy.
    TableAll,
    /// Right with the accuracy of the nearest SNR row.
    TablePerSnr,
    /// Classifies a synthesized frame with a trained 4-class model.
    Model(&'a NeuralModel),
}

impl Classifier<'_> {
    pub fn name(&self) -> &'static str {
        match self {
            Classifier::Ideal => "ideal",
            Classifier::Random => "random",
            Classifier::TableAll => "table-all",
            Classifier::TablePerSnr => "table-per-snr",
            Classifier::Model(_) => "model",
        }
    }
}

/// An emitter as seen from a sensing node.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EmitterView {
    pub id: usize,
    pub class: SignalClass,
    /// Received power at the sensing node.
    pub power: f64,
}

/// What is really on the channel at a node.
#[derive(Debug, Clone, PartialEq)]
pub struct SensingTruth {
    pub class: SignalClass,
    /// SINR of the dominant emitter; infinite when idle.
    pub snr_db: f64,
    /// In-range emitters, strongest first.
    pub emitters_in_range: Vec<EmitterView>,
}

impl SensingTruth {
    pub fn idle() -> Self {
        Self {
            class: SignalClass::Idle,
            snr_db: f64::INFINITY,
            emitters_in_range: Vec::new(),
        }
    }

    /// Ground truth at `node` given the emitters on the air. Any
    /// out-network user in range dominates; otherwise the strongest emitter
    /// in range decides, and the node hears idle when none is in range.
    pub fn at_node(topo: &Topology, sinr: &SinrConfig, node: usize, emitters: &[(usize, SignalClass)]) -> Self {
        let mut seen: Vec<EmitterView> = emitters
            .iter()
            .filter(|&&(id, _)| id != node && topo.within_range(id, node))
            .map(|&(id, class)| EmitterView {
                id,
                class,
                power: sinr.received(topo.distance(id, node)),
            })
            .collect();
        if seen.is_empty() {
            return Self::idle();
        }
        seen.sort_by(|a, b| b.power.total_cmp(&a.power).then(a.id.cmp(&b.id)));
        let dominant = seen
            .iter()
            .find(|e| e.class == SignalClass::OutNetwork)
            .copied()
            .unwrap_or(seen[0]);
        let rest: f64 = emitters
            .iter()
            .filter(|&&(id, _)| id != node && id != dominant.id)
            .map(|&(id, _)| sinr.received(topo.distance(id, node)))
            .sum();
        Self {
            class: dominant.class,
            snr_db: math::linear_to_db(dominant.power / (sinr.noise + rest)),
            emitters_in_range: seen,
        }
    }
}

/// Outcome of sensing and classification at one node.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChannelStatus {
    pub class: SignalClass,
    /// Confidence in `class`.
    pub score: f64,
    pub scores: ScoreVector,
}

impl ChannelStatus {
    pub fn from_scores(scores: ScoreVector) -> Self {
        let class = scores.argmax();
        Self {
            class,
            score: scores.get(class),
            scores,
        }
    }
}

/// Returns `truth` with probability `acc`, otherwise one of the other three
/// classes uniformly; the scores peak at the answer with height `acc`.
fn table_draw(truth: SignalClass, acc: f64, rng: &mut Rng) -> ChannelStatus {
    let answer = if rng.random::<f64>() < acc {
        truth
    } else {
        let others: Vec<SignalClass> = SignalClass::ALL.into_iter().filter(|&c| c != truth).collect();
        *others.choose(rng).expect("three other classes")
    };
    let scores = ScoreVector::peaked(answer, acc);
    ChannelStatus {
        class: answer,
        score: acc,
        scores,
    }
}

fn random_source(class: SignalClass, rng: &mut Rng) -> SourceKind {
    if class == SignalClass::Idle {
        return SourceKind::Idle;
    }
    let mods: Vec<ModulationKind> = ModulationKind::of_class(class).collect();
    SourceKind::Modulated(*mods.choose(rng).expect("every busy class has modulations"))
}

/// Synthesizes what the node would capture: the dominant emitter at the
/// sensing SNR, plus the runner-up scaled by its relative power when
/// `superposition` is on.
fn synth_observation(truth: &SensingTruth, superposition: bool, rng: &mut Rng) -> Result<IqFrame, DsaError> {
    let snr = truth.snr_db.min(30.0);
    let primary = random_source(truth.class, rng);
    if primary == SourceKind::Idle {
        return Ok(sigsynth::synth_idle(snr, rng));
    }
    let SourceKind::Modulated(m) = primary else { unreachable!() };
    let mut frame = sigsynth::synth_clean(m, rng);
    if superposition && truth.emitters_in_range.len() >= 2 {
        let dom = truth
            .emitters_in_range
            .iter()
            .find(|e| e.class == truth.class)
            .copied()
            .unwrap_or(truth.emitters_in_range[0]);
        if let Some(other) = truth.emitters_in_range.iter().find(|e| e.id != dom.id) {
            let SourceKind::Modulated(m2) = random_source(other.class, rng) else {
                unreachable!()
            };
            let second = sigsynth::synth_clean(m2, rng);
            let g = math::sqrt(other.power / dom.power);
            let mixed: Vec<_> = frame
                .samples()
                .iter()
                .zip(second.samples())
                .map(|(a, b)| a + b * g)
                .collect();
            frame = IqFrame::new(mixed, f64::INFINITY, primary).map_err(|_| DsaError::BadConfig("synthesis failed"))?;
        }
    }
    Ok(sigsynth::apply_awgn(&frame, snr, rng))
}

/// Classifies the channel at a node.
///
/// With `superposition`, table classifiers use the superimposed-signal
/// accuracy whenever two or more emitters are in range. With `outliers`,
/// jammer truth is classified with the outlier-detector accuracy.
pub fn sense_channel(
    truth: &SensingTruth,
    classifier: &Classifier<'_>,
    superposition: bool,
    outliers: bool,
    rng: &mut Rng,
) -> Result<ChannelStatus, DsaError> {
    let stacked = superposition && truth.emitters_in_range.len() >= 2;
    let table_acc = |per_snr: bool| {
        if truth.class == SignalClass::Idle {
            TABLE_ALL_ACCURACY
        } else if stacked {
            table_accuracy(&SUPERIMPOSED_ACCURACY, truth.snr_db)
        } else if outliers && truth.class == SignalClass::Jammer {
            table_accuracy(&MCD_JAMMER_ACCURACY, truth.snr_db)
        } else if per_snr {
            table_accuracy(&PER_SNR_ACCURACY, truth.snr_db)
        } else {
            TABLE_ALL_ACCURACY
        }
    };
    Ok(match classifier {
        Classifier::Ideal => ChannelStatus::from_scores(ScoreVector::certain(truth.class)),
        Classifier::Random => {
            let class = SignalClass::ALL[rng.random_range(0..4)];
            ChannelStatus {
                class,
                score: 0.25,
                scores: ScoreVector::uniform(),
            }
        }
        Classifier::TableAll => table_draw(truth.class, table_acc(false), rng),
        Classifier::TablePerSnr => table_draw(truth.class, table_acc(true), rng),
        Classifier::Model(model) => {
            let frame = synth_observation(truth, superposition, rng)?;
            ChannelStatus::from_scores(scores_for(model, &frame)?)
        }
    })
}
