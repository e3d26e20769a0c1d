//! Relay-side forwarding: analog-NC, DmNC, DF-NC, QDF-NC and the adaptive
//! selector between QDF-NC and analog-NC.
//!
//! Every digital scheme forwards the XOR of the two sources' messages,
//! re-mapped with the sources' modulation. Analog-NC forwards the received
//! superposition scaled to unit average energy.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::channel::Received;
use crate::fec::{conv_encode, ViterbiDecoder};
use crate::modem::{joint_xor_demap, Modulation, SymbolBlock};
use crate::{Error, Result};

/// Default quantizer resolution for QDF-NC.
pub const DEFAULT_QUANTIZER_BITS: u32 = 3;

/// Clip range of the QDF-NC quantizer, in multiples of
/// `signal amplitude + noise standard deviation` per dimension.
pub const QUANTIZER_CLIP_FACTOR: f64 = 4.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SchemeKind {
    /// Reference mode: S1 straight to D, no relay.
    PointToPoint,
    AnalogNc,
    Dmnc,
    DfNc,
    QdfNc,
    Adaptive,
}

impl SchemeKind {
    pub fn name(self) -> &'static str {
        match self {
            SchemeKind::PointToPoint => "p2p",
            SchemeKind::AnalogNc => "analog-nc",
            SchemeKind::Dmnc => "dmnc",
            SchemeKind::DfNc => "df-nc",
            SchemeKind::QdfNc => "qdf-nc",
            SchemeKind::Adaptive => "adaptive",
        }
    }

    /// Whether the relay has to run the channel decoder.
    pub fn needs_code(self) -> bool {
        matches!(self, SchemeKind::DfNc | SchemeKind::QdfNc | SchemeKind::Adaptive)
    }
}

/// How the relay hears the two sources.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RxMode {
    /// Two sub-slots, one per source.
    Orthogonal,
    /// Both sources at once; the relay sees their sum.
    Superposed,
}

/// Error-probability estimate used by the adaptive scheme.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BerProxy {
    /// Mismatch rate between raw hard decisions and the re-encoded Viterbi
    /// output.
    Hard,
    /// Mean of `1 / (1 + exp|L|)` over the channel LLRs.
    Aposteriori,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SchemeConfig {
    pub kind: SchemeKind,
    #[serde(default)]
    pub p_th: Option<f64>,
    pub quantizer_bits: u32,
    pub rx_mode: RxMode,
    pub proxy: BerProxy,
}

impl SchemeConfig {
    fn with_kind(kind: SchemeKind, rx_mode: RxMode) -> Self {
        Self { kind, p_th: None, quantizer_bits: DEFAULT_QUANTIZER_BITS, rx_mode, proxy: BerProxy::Aposteriori }
    }

    pub fn point_to_point() -> Self {
        Self::with_kind(SchemeKind::PointToPoint, RxMode::Orthogonal)
    }

    pub fn analog_nc(rx_mode: RxMode) -> Self {
        Self::with_kind(SchemeKind::AnalogNc, rx_mode)
    }

    pub fn dmnc(rx_mode: RxMode) -> Self {
        Self::with_kind(SchemeKind::Dmnc, rx_mode)
    }

    pub fn df_nc() -> Self {
        Self::with_kind(SchemeKind::DfNc, RxMode::Orthogonal)
    }

    pub fn qdf_nc(quantizer_bits: u32) -> Self {
        Self { quantizer_bits, ..Self::with_kind(SchemeKind::QdfNc, RxMode::Orthogonal) }
    }

    pub fn adaptive(p_th: f64) -> Self {
        Self { p_th: Some(p_th), ..Self::with_kind(SchemeKind::Adaptive, RxMode::Orthogonal) }
    }

    pub fn validate(&self) -> Result<()> {
        if self.quantizer_bits == 0 || self.quantizer_bits > 24 {
            return Err(Error::Config(format!("quantizer bits {} outside 1..=24", self.quantizer_bits)));
        }
        if self.kind == SchemeKind::Adaptive {
            match self.p_th {
                Some(p) if (0.0..=1.0).contains(&p) => {}
                Some(p) => return Err(Error::Config(format!("p_th {p} outside [0, 1]"))),
                None => return Err(Error::Config("adaptive scheme needs p_th".into())),
            }
        }
        if matches!(self.kind, SchemeKind::DfNc | SchemeKind::QdfNc | SchemeKind::Adaptive)
            && self.rx_mode != RxMode::Orthogonal
        {
            return Err(Error::Config(format!(
                "{} decodes each source and needs orthogonal relay reception",
                self.kind.name()
            )));
        }
        Ok(())
    }

    /// Curve label used in result tables.
    pub fn label(&self) -> String {
        match self.kind {
            SchemeKind::Adaptive => format!("adaptive(pth={})", self.p_th.unwrap_or(f64::NAN)),
            SchemeKind::QdfNc if self.quantizer_bits != DEFAULT_QUANTIZER_BITS => {
                format!("qdf-nc(q={})", self.quantizer_bits)
            }
            k => k.name().to_string(),
        }
    }
}

/// Uniform midrise scalar quantizer over `[-clip, clip]`, applied to the real
/// and imaginary parts independently.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Quantizer {
    bits: u32,
    clip: f64,
}

impl Quantizer {
    pub fn new(bits: u32, clip: f64) -> Result<Self> {
        if bits == 0 || bits > 24 {
            return Err(Error::Config(format!("quantizer bits {bits} outside 1..=24")));
        }
        if !(clip > 0.0 && clip.is_finite()) {
            return Err(Error::Config(format!("quantizer clip {clip} must be positive and finite")));
        }
        Ok(Self { bits, clip })
    }

    /// Quantizer for equalized samples of unit per-dimension amplitude with
    /// the given noise standard deviation.
    pub fn for_noise_std(bits: u32, noise_std: f64) -> Result<Self> {
        let std = if noise_std.is_finite() { noise_std } else { 0.0 };
        Self::new(bits, QUANTIZER_CLIP_FACTOR * (1.0 + std))
    }

    pub fn bits(&self) -> u32 {
        self.bits
    }

    pub fn clip(&self) -> f64 {
        self.clip
    }

    pub fn n_levels(&self) -> usize {
        1 << self.bits
    }

    pub fn step(&self) -> f64 {
        2.0 * self.clip / self.n_levels() as f64
    }

    pub fn level(&self, k: usize) -> f64 {
        -self.clip + (k as f64 + 0.5) * self.step()
    }

    pub fn levels(&self) -> Vec<f64> {
        (0..self.n_levels()).map(|k| self.level(k)).collect()
    }

    /// Snaps a real value to the nearest level after clamping; a value on a
    /// cell boundary goes to the lower level.
    pub fn quantize_value(&self, x: f64) -> f64 {
        let x = x.clamp(-self.clip, self.clip);
        let cell = ((x + self.clip) / self.step()).ceil() - 1.0;
        let k = cell.clamp(0.0, (self.n_levels() - 1) as f64) as usize;
        self.level(k)
    }

    pub fn quantize_sample(&self, y: Complex64) -> Complex64 {
        Complex64::new(self.quantize_value(y.re), self.quantize_value(y.im))
    }
}

pub fn quantize(block: &SymbolBlock, q: &Quantizer) -> SymbolBlock {
    let samples = block.samples.iter().map(|&y| q.quantize_sample(y)).collect();
    SymbolBlock::new(samples, block.modulation, block.scale)
}

pub fn xor_bits(a: &[u8], b: &[u8]) -> Result<Vec<u8>> {
    if a.len() != b.len() {
        return Err(Error::InvalidArgument(format!("XOR of {} and {} bits", a.len(), b.len())));
    }
    Ok(a.iter().zip(b).map(|(x, y)| x ^ y).collect())
}

/// Divides a block by its sample RMS `beta = sqrt(mean |y|^2)`.
///
/// Returns the normalized block (`scale = 1`) and `beta`.
pub fn analog_nc_forward(y: &SymbolBlock) -> Result<(SymbolBlock, f64)> {
    let beta = y.mean_energy().sqrt();
    if y.is_empty() || beta == 0.0 {
        return Err(Error::Degenerate("analog-NC input has zero energy".into()));
    }
    let samples = y.transmitted().map(|v| v / beta).collect();
    Ok((SymbolBlock::new(samples, y.modulation, 1.0), beta))
}

/// What the relay heard in the first phase.
#[derive(Debug, Clone, PartialEq)]
pub enum RelayReception {
    Orthogonal { s1: Received, s2: Received },
    Superposed { block: SymbolBlock, gains: (Complex64, Complex64), noise_var: f64 },
}

impl RelayReception {
    /// Superposition of both sources with the literal-unit gain of each, as
    /// forwarded by analog-NC. In orthogonal mode the relay adds its two
    /// sub-slot receptions.
    pub fn analog_sum(&self) -> Result<(SymbolBlock, (Complex64, Complex64))> {
        match self {
            RelayReception::Superposed { block, gains, .. } => Ok((block.clone(), *gains)),
            RelayReception::Orthogonal { s1, s2 } => {
                if s1.len() != s2.len() {
                    return Err(Error::InvalidArgument("relay sub-slot blocks differ in length".into()));
                }
                let samples = s1.block.samples.iter().zip(&s2.block.samples).map(|(a, b)| a + b).collect();
                Ok((SymbolBlock::new(samples, s1.block.modulation, 1.0), (s1.gain, s2.gain)))
            }
        }
    }
}

/// Hard decisions of one stream, optionally decoded to information bits.
fn detect(rx: &Received, modulation: Modulation, decoder: Option<&ViterbiDecoder>, info_len: usize) -> Result<Vec<u8>> {
    let raw = modulation.demap(&rx.equalized());
    match decoder {
        Some(dec) => dec.decode(&raw, info_len),
        None => Ok(raw),
    }
}

fn remap(xor: &[u8], modulation: Modulation, decoder: Option<&ViterbiDecoder>) -> Result<SymbolBlock> {
    match decoder {
        Some(dec) => modulation.map(&conv_encode(xor, dec.code())?),
        None => modulation.map(xor),
    }
}

/// A digitally re-generated relay transmission.
#[derive(Debug, Clone, PartialEq)]
pub struct Forwarded {
    pub block: SymbolBlock,
    /// XOR message carried by `block` (information bits for coded schemes,
    /// channel bits otherwise).
    pub xor: Vec<u8>,
}

/// De-map, XOR, re-map. Works on whatever bits were transmitted, so with a
/// channel code it forwards the XOR of the two codewords without decoding.
pub fn dmnc_forward(reception: &RelayReception, modulation: Modulation) -> Result<Forwarded> {
    let xor = match reception {
        RelayReception::Orthogonal { s1, s2 } => {
            if s1.len() != s2.len() {
                return Err(Error::InvalidArgument("DmNC streams differ in length".into()));
            }
            xor_bits(&modulation.demap(&s1.equalized()), &modulation.demap(&s2.equalized()))?
        }
        RelayReception::Superposed { block, gains, .. } => joint_xor_demap(&block.samples, modulation, *gains),
    };
    Ok(Forwarded { block: modulation.map(&xor)?, xor })
}

/// Decode both sources, XOR the information bits, re-encode and re-map.
pub fn df_nc_forward(
    s1: &Received,
    s2: &Received,
    decoder: &ViterbiDecoder,
    modulation: Modulation,
    info_len: usize,
) -> Result<Forwarded> {
    let b1 = detect(s1, modulation, Some(decoder), info_len)?;
    let b2 = detect(s2, modulation, Some(decoder), info_len)?;
    let xor = xor_bits(&b1, &b2)?;
    Ok(Forwarded { block: remap(&xor, modulation, Some(decoder))?, xor })
}

/// Quantize the equalized samples of each stream with `quantizer_bits`,
/// then proceed as DF-NC on the quantized values.
pub fn qdf_nc_forward(
    s1: &Received,
    s2: &Received,
    quantizer_bits: u32,
    decoder: &ViterbiDecoder,
    modulation: Modulation,
    info_len: usize,
) -> Result<Forwarded> {
    let quantized = |rx: &Received| -> Result<Received> {
        let q = Quantizer::for_noise_std(quantizer_bits, rx.equalized_noise_std())?;
        let eq = SymbolBlock::new(rx.equalized(), rx.block.modulation, 1.0);
        Ok(Received { block: quantize(&eq, &q), gain: Complex64::new(1.0, 0.0), noise_var: rx.noise_var })
    };
    df_nc_forward(&quantized(s1)?, &quantized(s2)?, decoder, modulation, info_len)
}

/// Sample mean and variance of `1 - b * b_hat` over bipolar sequences.
pub fn equivalent_noise_stats(hard: &[i8], reference: &[i8]) -> Result<(f64, f64)> {
    if hard.is_empty() || hard.len() != reference.len() {
        return Err(Error::InvalidArgument(format!(
            "equivalent noise needs two equal non-empty sequences, got {} and {}",
            hard.len(),
            reference.len()
        )));
    }
    if hard.iter().chain(reference).any(|&v| v != 1 && v != -1) {
        return Err(Error::InvalidArgument("equivalent noise inputs must be bipolar".into()));
    }
    let n = hard.len() as f64;
    let terms = || hard.iter().zip(reference).map(|(&a, &b)| 1.0 - (a as f64) * (b as f64));
    let mu = terms().sum::<f64>() / n;
    let var = terms().map(|t| (t - mu).powi(2)).sum::<f64>() / n;
    Ok((mu, var))
}

fn bipolar(bits: &[u8]) -> Vec<i8> {
    bits.iter().map(|&b| 2 * (b & 1) as i8 - 1).collect()
}

/// Error-probability estimate with the equivalent-noise statistics it was
/// derived from (`p_ber = mu_z / 2`).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ProxyEstimate {
    pub p_ber: f64,
    pub mu_z: f64,
    pub sigma2_z: f64,
}

/// Hard-decision proxy over one or more streams: raw decisions are compared
/// with the re-encoded Viterbi output of the same stream.
pub fn hard_proxy(
    streams: &[&Received],
    decoder: &ViterbiDecoder,
    modulation: Modulation,
    info_len: usize,
) -> Result<ProxyEstimate> {
    let mut raw_all = Vec::new();
    let mut clean_all = Vec::new();
    for rx in streams {
        let raw = modulation.demap(&rx.equalized());
        let info = decoder.decode(&raw, info_len)?;
        clean_all.extend(bipolar(&conv_encode(&info, decoder.code())?));
        raw_all.extend(bipolar(&raw));
    }
    let (mu_z, sigma2_z) = equivalent_noise_stats(&clean_all, &raw_all)?;
    Ok(ProxyEstimate { p_ber: (mu_z / 2.0).clamp(0.0, 1.0), mu_z, sigma2_z })
}

/// Mismatch fraction between the raw hard decisions of `y` and the
/// re-encoded decoder output.
pub fn estimate_ber_proxy(
    y: &Received,
    decoder: &ViterbiDecoder,
    modulation: Modulation,
    info_len: usize,
) -> Result<f64> {
    Ok(hard_proxy(&[y], decoder, modulation, info_len)?.p_ber)
}

/// A-posteriori estimate of the raw bit error probability from channel LLRs.
///
/// Each bit contributes `1 / (1 + exp|L|)`, its posterior probability of
/// being wrong; `mu_z` and `sigma2_z` are the mean and variance of twice that
/// quantity, the expected value of `1 - b * b_hat`.
pub fn aposteriori_proxy(streams: &[&Received], modulation: Modulation) -> Result<ProxyEstimate> {
    let mut probs = Vec::new();
    for rx in streams {
        let std = rx.equalized_noise_std();
        let eq = rx.equalized();
        let per_dim = |v: f64| -> f64 {
            if std == 0.0 {
                if v == 0.0 {
                    0.5
                } else {
                    0.0
                }
            } else if !std.is_finite() {
                0.5
            } else {
                let llr = 2.0 * v / (std * std);
                1.0 / (1.0 + llr.abs().exp())
            }
        };
        for y in eq {
            probs.push(per_dim(y.re));
            if modulation == Modulation::Qam4 {
                probs.push(per_dim(y.im));
            }
        }
    }
    if probs.is_empty() {
        return Err(Error::InvalidArgument("a-posteriori proxy needs at least one sample".into()));
    }
    let n = probs.len() as f64;
    let mu_z = probs.iter().map(|p| 2.0 * p).sum::<f64>() / n;
    let sigma2_z = probs.iter().map(|p| (2.0 * p - mu_z).powi(2)).sum::<f64>() / n;
    Ok(ProxyEstimate { p_ber: mu_z / 2.0, mu_z, sigma2_z })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum AdaptiveChoice {
    AnalogNc,
    QdfNc,
}

/// QDF-NC when the error probability strictly exceeds the threshold,
/// analog-NC otherwise.
pub fn adaptive_select(p_ber: f64, p_th: f64) -> Result<AdaptiveChoice> {
    if !(0.0..=1.0).contains(&p_ber) || !(0.0..=1.0).contains(&p_th) {
        return Err(Error::InvalidArgument(format!("p_ber {p_ber} and p_th {p_th} must lie in [0, 1]")));
    }
    Ok(if p_ber > p_th { AdaptiveChoice::QdfNc } else { AdaptiveChoice::AnalogNc })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RelayDecision {
    pub chosen: AdaptiveChoice,
    pub p_ber: f64,
    pub mu_z: f64,
    pub sigma2_z: f64,
}

/// How the destination should interpret the relay's transmission.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum RelayBranch {
    /// Re-mapped XOR message.
    Digital,
    /// Normalized superposition: the relay sent `(g1 x1 + g2 x2 + z) / beta`.
    Analog { beta: f64, source_gains: (Complex64, Complex64) },
}

#[derive(Debug, Clone, PartialEq)]
pub struct RelayOutput {
    pub block: SymbolBlock,
    pub branch: RelayBranch,
    pub decision: Option<RelayDecision>,
}

/// Coding parameters shared by relay and destination.
#[derive(Debug, Clone, Copy)]
pub struct LinkCoding<'a> {
    pub decoder: Option<&'a ViterbiDecoder>,
    pub modulation: Modulation,
    pub info_len: usize,
}

fn analog_output(reception: &RelayReception) -> Result<RelayOutput> {
    let (sum, source_gains) = reception.analog_sum()?;
    let (block, beta) = match analog_nc_forward(&sum) {
        Ok(v) => v,
        // an exactly cancelling superposition carries no energy; send it as is
        Err(Error::Degenerate(_)) => (sum, 1.0),
        Err(e) => return Err(e),
    };
    Ok(RelayOutput { block, branch: RelayBranch::Analog { beta, source_gains }, decision: None })
}

fn orthogonal(reception: &RelayReception, kind: SchemeKind) -> Result<(&Received, &Received)> {
    match reception {
        RelayReception::Orthogonal { s1, s2 } => Ok((s1, s2)),
        RelayReception::Superposed { .. } => {
            Err(Error::Config(format!("{} needs orthogonal relay reception", kind.name())))
        }
    }
}

fn need_decoder<'a>(coding: &LinkCoding<'a>, kind: SchemeKind) -> Result<&'a ViterbiDecoder> {
    coding.decoder.ok_or_else(|| Error::Config(format!("{} needs a channel code", kind.name())))
}

/// Runs the configured scheme on one packet's relay reception.
pub fn relay_forward(
    scheme: &SchemeConfig,
    reception: &RelayReception,
    coding: &LinkCoding<'_>,
) -> Result<RelayOutput> {
    let digital = |f: Forwarded| RelayOutput { block: f.block, branch: RelayBranch::Digital, decision: None };
    match scheme.kind {
        SchemeKind::PointToPoint => Err(Error::Config("point-to-point mode has no relay".into())),
        SchemeKind::AnalogNc => analog_output(reception),
        SchemeKind::Dmnc => Ok(digital(dmnc_forward(reception, coding.modulation)?)),
        SchemeKind::DfNc => {
            let (s1, s2) = orthogonal(reception, scheme.kind)?;
            let dec = need_decoder(coding, scheme.kind)?;
            Ok(digital(df_nc_forward(s1, s2, dec, coding.modulation, coding.info_len)?))
        }
        SchemeKind::QdfNc => {
            let (s1, s2) = orthogonal(reception, scheme.kind)?;
            let dec = need_decoder(coding, scheme.kind)?;
            Ok(digital(qdf_nc_forward(s1, s2, scheme.quantizer_bits, dec, coding.modulation, coding.info_len)?))
        }
        SchemeKind::Adaptive => {
            let (s1, s2) = orthogonal(reception, scheme.kind)?;
            let dec = need_decoder(coding, scheme.kind)?;
            let p_th = scheme.p_th.ok_or_else(|| Error::Config("adaptive scheme needs p_th".into()))?;
            let est = match scheme.proxy {
                BerProxy::Hard => hard_proxy(&[s1, s2], dec, coding.modulation, coding.info_len)?,
                BerProxy::Aposteriori => aposteriori_proxy(&[s1, s2], coding.modulation)?,
            };
            let chosen = adaptive_select(est.p_ber.clamp(0.0, 1.0), p_th)?;
            let decision = RelayDecision { chosen, p_ber: est.p_ber, mu_z: est.mu_z, sigma2_z: est.sigma2_z };
            let mut out = match chosen {
                AdaptiveChoice::QdfNc => {
                    digital(qdf_nc_forward(s1, s2, scheme.quantizer_bits, dec, coding.modulation, coding.info_len)?)
                }
                AdaptiveChoice::AnalogNc => analog_output(reception)?,
            };
            out.decision = Some(decision);
            Ok(out)
        }
    }
}
