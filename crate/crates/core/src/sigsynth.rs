//! Seeded synthesis of 128-sample baseband I/Q frames.
//!
//! Linear modulations use a raised-cosine pulse (the end-to-end response of a
//! root-raised-cosine transmit/receive pair, roll-off 0.35) at 8 samples per
//! symbol, so symbol-center samples land exactly on the constellation.
//! CPFSK and GFSK are phase-continuous; WBFM and the two AM kinds modulate a
//! random band-limited message.

use alloc::string::String;
use alloc::vec::Vec;
use core::f64::consts::PI;
use core::fmt;
use core::str::FromStr;

use num_complex::Complex64;

use crate::math;
use crate::rng::{self, tag};

/// Samples per frame.
pub const FRAME_LEN: usize = 128;
/// Samples per symbol for the digital kinds.
pub const SAMPLES_PER_SYMBOL: usize = 8;
/// Raised-cosine roll-off.
pub const ROLL_OFF: f64 = 0.35;
/// One-sided pulse span in symbols.
const PULSE_SPAN: usize = 6;
/// CPFSK modulation index.
pub const CPFSK_INDEX: f64 = 0.5;
/// GFSK modulation index.
pub const GFSK_INDEX: f64 = 1.0;
/// GFSK Gaussian filter bandwidth-time product.
pub const GFSK_BT: f64 = 0.35;
/// WBFM frequency sensitivity in cycles/sample per unit message amplitude.
const WBFM_SENSITIVITY: f64 = 0.05;
/// AM-DSB modulation depth.
const AM_DEPTH: f64 = 0.5;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum SynthError {
    #[error("mixing matrix is singular (|det| = {0:e})")]
    SingularMixing(f64),
    #[error("frame must contain exactly {FRAME_LEN} samples, got {0}")]
    BadLength(usize),
    #[error("SNR grid is empty")]
    EmptySnrGrid,
    #[error("per-modulation count must be positive")]
    ZeroCount,
    #[error("dataset selects no sources")]
    NoSources,
    #[error("unknown modulation or class name `{0}`")]
    UnknownName(String),
}

/// The ten modulations used by the experiments.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum ModulationKind {
    Qpsk,
    Psk8,
    Cpfsk,
    Qam16,
    Qam64,
    Pam4,
    Wbfm,
    AmSsb,
    AmDsb,
    Gfsk,
}

impl ModulationKind {
    pub const ALL: [ModulationKind; 10] = [
        ModulationKind::Qpsk,
        ModulationKind::Psk8,
        ModulationKind::Cpfsk,
        ModulationKind::Qam16,
        ModulationKind::Qam64,
        ModulationKind::Pam4,
        ModulationKind::Wbfm,
        ModulationKind::AmSsb,
        ModulationKind::AmDsb,
        ModulationKind::Gfsk,
    ];

    pub fn name(self) -> &'static str {
        match self {
            ModulationKind::Qpsk => "QPSK",
            ModulationKind::Psk8 => "8PSK",
            ModulationKind::Cpfsk => "CPFSK",
            ModulationKind::Qam16 => "QAM16",
            ModulationKind::Qam64 => "QAM64",
            ModulationKind::Pam4 => "PAM4",
            ModulationKind::Wbfm => "WBFM",
            ModulationKind::AmSsb => "AM-SSB",
            ModulationKind::AmDsb => "AM-DSB",
            ModulationKind::Gfsk => "GFSK",
        }
    }

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn class(self) -> SignalClass {
        class_of(SourceKind::Modulated(self))
    }

    /// All modulations mapped to `class`.
    pub fn of_class(class: SignalClass) -> impl Iterator<Item = ModulationKind> {
        Self::ALL.into_iter().filter(move |m| m.class() == class)
    }
}

impl fmt::Display for ModulationKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ModulationKind {
    type Err = SynthError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Self::ALL
            .into_iter()
            .find(|m| m.name().eq_ignore_ascii_case(s))
            .ok_or_else(|| SynthError::UnknownName(s.into()))
    }
}

/// What produced a frame: nothing, or one of the modulations.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum SourceKind {
    Idle,
    Modulated(ModulationKind),
}

impl SourceKind {
    pub fn name(self) -> &'static str {
        match self {
            SourceKind::Idle => "idle",
            SourceKind::Modulated(m) => m.name(),
        }
    }
}

impl fmt::Display for SourceKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for SourceKind {
    type Err = SynthError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        if s.eq_ignore_ascii_case("idle") {
            Ok(SourceKind::Idle)
        } else {
            s.parse().map(SourceKind::Modulated)
        }
    }
}

/// Channel status categories, in scheduling preference order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum SignalClass {
    Idle,
    InNetwork,
    Jammer,
    OutNetwork,
}

impl SignalClass {
    pub const ALL: [SignalClass; 4] = [
        SignalClass::Idle,
        SignalClass::InNetwork,
        SignalClass::Jammer,
        SignalClass::OutNetwork,
    ];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn from_index(i: usize) -> Option<Self> {
        Self::ALL.get(i).copied()
    }

    pub fn name(self) -> &'static str {
        match self {
            SignalClass::Idle => "idle",
            SignalClass::InNetwork => "in-network",
            SignalClass::Jammer => "jammer",
            SignalClass::OutNetwork => "out-network",
        }
    }
}

impl fmt::Display for SignalClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for SignalClass {
    type Err = SynthError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Self::ALL
            .into_iter()
            .find(|c| c.name().eq_ignore_ascii_case(s))
            .ok_or_else(|| SynthError::UnknownName(s.into()))
    }
}

/// Category of a source.
pub fn class_of(kind: SourceKind) -> SignalClass {
    use ModulationKind::*;
    match kind {
        SourceKind::Idle => SignalClass::Idle,
        SourceKind::Modulated(Qpsk | Psk8 | Cpfsk) => SignalClass::InNetwork,
        SourceKind::Modulated(Qam16 | Qam64 | Pam4 | Wbfm) => SignalClass::Jammer,
        SourceKind::Modulated(AmSsb | AmDsb | Gfsk) => SignalClass::OutNetwork,
    }
}

/// A frame of [`FRAME_LEN`] complex baseband samples.
#[derive(Debug, Clone, PartialEq)]
pub struct IqFrame {
    samples: Vec<Complex64>,
    /// Nominal SNR in dB; `f64::INFINITY` for noiseless frames.
    pub snr_db: f64,
    pub kind: SourceKind,
}

impl IqFrame {
    pub fn new(samples: Vec<Complex64>, snr_db: f64, kind: SourceKind) -> Result<Self, SynthError> {
        if samples.len() != FRAME_LEN {
            return Err(SynthError::BadLength(samples.len()));
        }
        Ok(Self {
            samples,
            snr_db,
            kind,
        })
    }

    pub fn samples(&self) -> &[Complex64] {
        &self.samples
    }

    pub fn class(&self) -> SignalClass {
        class_of(self.kind)
    }

    /// Mean per-sample power.
    pub fn power(&self) -> f64 {
        mean_power(&self.samples)
    }

    /// Scales the frame to unit mean power (no-op for an all-zero frame).
    pub fn normalized(mut self) -> Self {
        normalize(&mut self.samples);
        self
    }

    /// Samples as `[i0, q0, i1, q1, ...]`, the classifier's input layout.
    pub fn interleaved(&self) -> Vec<f64> {
        self.samples.iter().flat_map(|s| [s.re, s.im]).collect()
    }

    /// I values followed by Q values.
    pub fn stacked(&self) -> Vec<f64> {
        self.samples
            .iter()
            .map(|s| s.re)
            .chain(self.samples.iter().map(|s| s.im))
            .collect()
    }

    /// Inverse of [`IqFrame::stacked`].
    pub fn from_stacked(values: &[f64], snr_db: f64, kind: SourceKind) -> Result<Self, SynthError> {
        if values.len() != 2 * FRAME_LEN {
            return Err(SynthError::BadLength(values.len() / 2));
        }
        let samples = (0..FRAME_LEN)
            .map(|i| Complex64::new(values[i], values[FRAME_LEN + i]))
            .collect();
        Self::new(samples, snr_db, kind)
    }
}

fn mean_power(samples: &[Complex64]) -> f64 {
    samples.iter().map(|s| s.norm_sqr()).sum::<f64>() / samples.len() as f64
}

fn normalize(samples: &mut [Complex64]) {
    let p = mean_power(samples);
    if p > 0.0 {
        let g = 1.0 / math::sqrt(p);
        samples.iter_mut().for_each(|s| *s *= g);
    }
}

/// Unit-power constellation of a linear modulation.
pub fn constellation(kind: ModulationKind) -> Option<Vec<Complex64>> {
    let pts: Vec<Complex64> = match kind {
        ModulationKind::Qpsk => (0..4)
            .map(|k| Complex64::from_polar(1.0, PI / 4.0 + k as f64 * PI / 2.0))
            .collect(),
        ModulationKind::Psk8 => (0..8)
            .map(|k| Complex64::from_polar(1.0, k as f64 * PI / 4.0))
            .collect(),
        ModulationKind::Qam16 => square_qam(4),
        ModulationKind::Qam64 => square_qam(8),
        ModulationKind::Pam4 => [-3.0, -1.0, 1.0, 3.0]
            .into_iter()
            .map(|a| Complex64::new(a, 0.0))
            .collect(),
        _ => return None,
    };
    let p = mean_power(&pts);
    Some(pts.into_iter().map(|c| c / math::sqrt(p)).collect())
}

fn square_qam(side: usize) -> Vec<Complex64> {
    let level = |i: usize| 2.0 * i as f64 - (side as f64 - 1.0);
    (0..side)
        .flat_map(|i| (0..side).map(move |q| Complex64::new(level(i), level(q))))
        .collect()
}

/// Raised-cosine impulse response at `t` symbol periods.
pub fn raised_cosine(t: f64, beta: f64) -> f64 {
    if t == 0.0 {
        return 1.0;
    }
    let rt = math::round(t);
    if rt == t {
        return 0.0;
    }
    let sinc = math::sin(PI * t) / (PI * t);
    let denom = 1.0 - (2.0 * beta * t) * (2.0 * beta * t);
    if denom.abs() < 1e-12 {
        PI / 4.0 * sinc_at(1.0 / (2.0 * beta))
    } else {
        sinc * math::cos(PI * beta * t) / denom
    }
}

fn sinc_at(x: f64) -> f64 {
    math::sin(PI * x) / (PI * x)
}

/// Symbols visible in one frame.
pub const SYMBOLS_PER_FRAME: usize = FRAME_LEN / SAMPLES_PER_SYMBOL;

/// Pulse-shapes `visible` symbols (with random guard symbols either side
/// drawn from `pts`) and returns the 128 samples whose symbol centers are at
/// indices `0, 8, 16, ...`.
fn shape_symbols(visible: &[Complex64], pts: &[Complex64], rng: &mut impl rand::Rng) -> Vec<Complex64> {
    let guard = PULSE_SPAN;
    let mut symbols = Vec::with_capacity(visible.len() + 2 * guard);
    for _ in 0..guard {
        symbols.push(pts[rng.random_range(0..pts.len())]);
    }
    symbols.extend_from_slice(visible);
    for _ in 0..guard {
        symbols.push(pts[rng.random_range(0..pts.len())]);
    }
    let sps = SAMPLES_PER_SYMBOL as f64;
    (0..FRAME_LEN)
        .map(|n| {
            let t_abs = (n + guard * SAMPLES_PER_SYMBOL) as f64 / sps;
            let center = t_abs as usize;
            let lo = center.saturating_sub(guard);
            let hi = (center + guard + 1).min(symbols.len());
            (lo..hi)
                .map(|k| symbols[k] * raised_cosine(t_abs - k as f64, ROLL_OFF))
                .sum()
        })
        .collect()
}

fn linear_frame(kind: ModulationKind, preamble: &[Complex64], rng: &mut impl rand::Rng) -> Vec<Complex64> {
    let pts = constellation(kind).expect("linear modulation");
    let mut visible: Vec<Complex64> = preamble.iter().copied().take(SYMBOLS_PER_FRAME).collect();
    while visible.len() < SYMBOLS_PER_FRAME {
        visible.push(pts[rng.random_range(0..pts.len())]);
    }
    shape_symbols(&visible, &pts, rng)
}

fn binary_symbols(n: usize, rng: &mut impl rand::Rng) -> Vec<f64> {
    (0..n)
        .map(|_| if rng.random::<bool>() { 1.0 } else { -1.0 })
        .collect()
}

fn phase_to_samples(freq: impl Iterator<Item = f64>, phase0: f64) -> Vec<Complex64> {
    let mut phase = phase0;
    freq.take(FRAME_LEN)
        .map(|dphi| {
            let s = Complex64::from_polar(1.0, phase);
            phase += dphi;
            s
        })
        .collect()
}

fn cpfsk_frame(rng: &mut impl rand::Rng) -> Vec<Complex64> {
    let bits = binary_symbols(SYMBOLS_PER_FRAME, rng);
    let phase0 = rng.random::<f64>() * 2.0 * PI;
    let step = PI * CPFSK_INDEX / SAMPLES_PER_SYMBOL as f64;
    phase_to_samples(
        (0..FRAME_LEN).map(|n| step * bits[n / SAMPLES_PER_SYMBOL]),
        phase0,
    )
}

/// Gaussian frequency-shaping taps (unit sum), spanning three symbols.
fn gaussian_taps() -> Vec<f64> {
    let sps = SAMPLES_PER_SYMBOL as f64;
    let half = (3 * SAMPLES_PER_SYMBOL / 2) as isize;
    let a = 2.0 * PI * PI * GFSK_BT * GFSK_BT / core::f64::consts::LN_2;
    let taps: Vec<f64> = (-half..=half)
        .map(|i| {
            let t = i as f64 / sps;
            math::exp(-a * t * t)
        })
        .collect();
    let sum: f64 = taps.iter().sum();
    taps.into_iter().map(|v| v / sum).collect()
}

fn gfsk_frame(rng: &mut impl rand::Rng) -> Vec<Complex64> {
    let taps = gaussian_taps();
    let half = taps.len() / 2;
    // Extra symbols either side so the filter has settled inside the frame.
    let guard = 2;
    let bits = binary_symbols(SYMBOLS_PER_FRAME + 2 * guard, rng);
    let offset = guard * SAMPLES_PER_SYMBOL;
    let nrz = |n: isize| -> f64 {
        let idx = n.clamp(0, (bits.len() * SAMPLES_PER_SYMBOL) as isize - 1) as usize;
        bits[idx / SAMPLES_PER_SYMBOL]
    };
    let step = PI * GFSK_INDEX / SAMPLES_PER_SYMBOL as f64;
    let phase0 = rng.random::<f64>() * 2.0 * PI;
    phase_to_samples(
        (0..FRAME_LEN).map(|n| {
            let center = (n + offset) as isize;
            let f: f64 = taps
                .iter()
                .enumerate()
                .map(|(j, g)| g * nrz(center + j as isize - half as isize))
                .sum();
            step * f
        }),
        phase0,
    )
}

/// A band-limited message: three tones plus a dense comb of weak random
/// tones. Returned in analytic form; the real part is the message.
fn analytic_message(rng: &mut impl rand::Rng) -> Vec<Complex64> {
    struct Tone {
        amp: f64,
        freq: f64,
        phase: f64,
    }
    let mut tones = Vec::with_capacity(19);
    for _ in 0..3 {
        tones.push(Tone {
            amp: rng.random_range(0.5..1.0),
            freq: rng.random_range(0.002..0.02),
            phase: rng.random::<f64>() * 2.0 * PI,
        });
    }
    for _ in 0..16 {
        tones.push(Tone {
            amp: 0.25 * rng::normal(rng).abs() / 4.0,
            freq: rng.random_range(0.0..0.03),
            phase: rng.random::<f64>() * 2.0 * PI,
        });
    }
    let mut z: Vec<Complex64> = (0..FRAME_LEN)
        .map(|n| {
            tones
                .iter()
                .map(|t| Complex64::from_polar(t.amp, 2.0 * PI * t.freq * n as f64 + t.phase))
                .sum()
        })
        .collect();
    let peak = z.iter().map(|c| c.re.abs()).fold(0.0, f64::max);
    if peak > 0.0 {
        z.iter_mut().for_each(|c| *c /= peak);
    }
    z
}

fn analog_frame(kind: ModulationKind, rng: &mut impl rand::Rng) -> Vec<Complex64> {
    let msg = analytic_message(rng);
    let carrier = Complex64::from_polar(1.0, rng.random::<f64>() * 2.0 * PI);
    match kind {
        ModulationKind::Wbfm => {
            let step = 2.0 * PI * WBFM_SENSITIVITY;
            phase_to_samples(msg.iter().map(|m| step * m.re), carrier.arg())
        }
        ModulationKind::AmDsb => msg
            .iter()
            .map(|m| carrier * (1.0 + AM_DEPTH * m.re))
            .collect(),
        ModulationKind::AmSsb => msg.iter().map(|m| carrier * m).collect(),
        _ => unreachable!("not an analog kind"),
    }
}

/// Noiseless unit-power frame for `kind`. Linear modulations start with
/// `preamble` (truncated to the frame's symbol count).
pub fn synth_clean_with_preamble(
    kind: ModulationKind,
    preamble: &[Complex64],
    rng: &mut impl rand::Rng,
) -> IqFrame {
    use ModulationKind::*;
    let mut samples = match kind {
        Qpsk | Psk8 | Qam16 | Qam64 | Pam4 => linear_frame(kind, preamble, rng),
        Cpfsk => cpfsk_frame(rng),
        Gfsk => gfsk_frame(rng),
        Wbfm | AmSsb | AmDsb => analog_frame(kind, rng),
    };
    normalize(&mut samples);
    IqFrame {
        samples,
        snr_db: f64::INFINITY,
        kind: SourceKind::Modulated(kind),
    }
}

/// Noiseless unit-power frame for `kind`.
pub fn synth_clean(kind: ModulationKind, rng: &mut impl rand::Rng) -> IqFrame {
    synth_clean_with_preamble(kind, &[], rng)
}

/// A modulated frame with AWGN at `snr_db` (pass `f64::INFINITY` for none).
pub fn synth_frame(kind: ModulationKind, snr_db: f64, rng: &mut impl rand::Rng) -> IqFrame {
    let clean = synth_clean(kind, rng);
    apply_awgn(&clean, snr_db, rng)
}

/// Pure noise at the noise floor implied by `snr_db` for a unit-power signal.
pub fn synth_idle(snr_db: f64, rng: &mut impl rand::Rng) -> IqFrame {
    let var = if snr_db.is_infinite() && snr_db > 0.0 {
        0.0
    } else {
        1.0 / math::db_to_linear(snr_db)
    };
    let sd = math::sqrt(var / 2.0);
    let samples = (0..FRAME_LEN)
        .map(|_| Complex64::new(sd * rng::normal(rng), sd * rng::normal(rng)))
        .collect();
    IqFrame {
        samples,
        snr_db,
        kind: SourceKind::Idle,
    }
}

/// Frame for any source kind.
pub fn synth_source(kind: SourceKind, snr_db: f64, rng: &mut impl rand::Rng) -> IqFrame {
    match kind {
        SourceKind::Idle => synth_idle(snr_db, rng),
        SourceKind::Modulated(m) => synth_frame(m, snr_db, rng),
    }
}

/// Adds complex Gaussian noise of variance `P_signal / 10^(snr_db/10)`.
pub fn apply_awgn(frame: &IqFrame, snr_db: f64, rng: &mut impl rand::Rng) -> IqFrame {
    let mut out = frame.clone();
    out.snr_db = snr_db;
    if snr_db.is_infinite() && snr_db > 0.0 {
        return out;
    }
    let var = frame.power() / math::db_to_linear(snr_db);
    let sd = math::sqrt(var / 2.0);
    for s in &mut out.samples {
        *s += Complex64::new(sd * rng::normal(rng), sd * rng::normal(rng));
    }
    out
}

/// Multiplies every sample by `e^{j theta}`.
pub fn rotate_frame(frame: &IqFrame, theta: f64) -> IqFrame {
    let r = Complex64::from_polar(1.0, theta);
    let mut out = frame.clone();
    out.samples.iter_mut().for_each(|s| *s *= r);
    out
}

/// Two observations of a linear mixture: `obs_i = m[i][0] a + m[i][1] b`.
///
/// Each observation is labeled with the source carrying the larger
/// coefficient in its row.
pub fn superimpose(a: &IqFrame, b: &IqFrame, mixing: [[f64; 2]; 2]) -> Result<(IqFrame, IqFrame), SynthError> {
    let det = mixing[0][0] * mixing[1][1] - mixing[0][1] * mixing[1][0];
    if det.abs() <= 1e-6 {
        return Err(SynthError::SingularMixing(det));
    }
    let snr = a.snr_db.min(b.snr_db);
    let mix = |row: [f64; 2]| IqFrame {
        samples: a
            .samples
            .iter()
            .zip(&b.samples)
            .map(|(x, y)| x * row[0] + y * row[1])
            .collect(),
        snr_db: snr,
        kind: if row[0].abs() >= row[1].abs() { a.kind } else { b.kind },
    };
    Ok((mix(mixing[0]), mix(mixing[1])))
}

/// Parameters for [`make_dataset`].
#[derive(Debug, Clone, PartialEq)]
pub struct DatasetSpec {
    pub snr_grid_db: Vec<f64>,
    pub per_mod_count: usize,
    pub modulations: Vec<ModulationKind>,
    /// Also emit `per_mod_count` idle frames per SNR.
    pub include_idle: bool,
    pub seed: u64,
}

impl DatasetSpec {
    /// SNRs 0..=18 dB in 2 dB steps.
    pub fn default_snr_grid() -> Vec<f64> {
        (0..10).map(|i| 2.0 * i as f64).collect()
    }

    pub fn validate(&self) -> Result<(), SynthError> {
        if self.snr_grid_db.is_empty() {
            return Err(SynthError::EmptySnrGrid);
        }
        if self.per_mod_count == 0 {
            return Err(SynthError::ZeroCount);
        }
        if self.modulations.is_empty() && !self.include_idle {
            return Err(SynthError::NoSources);
        }
        Ok(())
    }

    fn sources(&self) -> Vec<SourceKind> {
        let mut v: Vec<SourceKind> = self.modulations.iter().map(|&m| SourceKind::Modulated(m)).collect();
        if self.include_idle {
            v.push(SourceKind::Idle);
        }
        v
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LabeledFrame {
    pub frame: IqFrame,
    pub kind: SourceKind,
    pub class: SignalClass,
}

fn source_tag(kind: SourceKind) -> u64 {
    match kind {
        SourceKind::Idle => 100,
        SourceKind::Modulated(m) => m.index() as u64,
    }
}

/// `per_mod_count` frames for every (source, SNR) pair, ordered by source,
/// then SNR, then index. Each frame has its own sub-stream, so datasets are
/// reproducible and a frame does not depend on which others were requested.
pub fn make_dataset(spec: &DatasetSpec) -> Result<Vec<LabeledFrame>, SynthError> {
    spec.validate()?;
    let sources = spec.sources();
    let mut out = Vec::with_capacity(sources.len() * spec.snr_grid_db.len() * spec.per_mod_count);
    for &kind in &sources {
        for &snr in &spec.snr_grid_db {
            let snr_key = (snr * 1000.0) as i64 as u64;
            for i in 0..spec.per_mod_count {
                let mut rng = rng::stream(spec.seed, &[tag::DATASET, source_tag(kind), snr_key, i as u64]);
                let frame = synth_source(kind, snr, &mut rng);
                out.push(LabeledFrame {
                    frame,
                    kind,
                    class: class_of(kind),
                });
            }
        }
    }
    Ok(out)
}
