//! Destination-side detection and XOR recovery of both source messages.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::bitsource::{Packet, SourceId};
use crate::channel::Received;
use crate::fec::conv_encode;
use crate::modem::{joint_xor_demap, Modulation};
use crate::relay::{xor_bits, LinkCoding, RelayBranch};
use crate::{Error, Result};

/// Whether the destination also hears the sources directly.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Topology {
    Direct,
    NoDirect,
}

/// Everything the destination receives for one packet pair.
#[derive(Debug, Clone, PartialEq)]
pub struct ReceptionSet {
    pub direct_s1: Option<Received>,
    pub direct_s2: Option<Received>,
    /// Relay transmission as heard at D. For the analog branch `gain` is the
    /// relay-to-destination amplitude applied to the relay's normalized
    /// output.
    pub relay: Received,
    pub relay_branch: RelayBranch,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RecoveryResult {
    /// `None` when the topology cannot separate the two messages.
    pub est_s1: Option<Vec<u8>>,
    pub est_s2: Option<Vec<u8>>,
    /// Estimate of `b1 XOR b2` taken from the relay.
    pub xor_estimate: Vec<u8>,
    pub errors_s1: Option<u64>,
    pub errors_s2: Option<u64>,
    pub xor_errors: u64,
    /// Errors of the direct-link-only estimates.
    pub direct_errors_s1: Option<u64>,
    pub direct_errors_s2: Option<u64>,
}

/// Hamming distance between an estimate and the transmitted bits.
pub fn count_bit_errors(estimate: &[u8], truth: &[u8]) -> Result<u64> {
    if estimate.len() != truth.len() {
        return Err(Error::InvalidArgument(format!("estimate has {} bits, truth has {}", estimate.len(), truth.len())));
    }
    Ok(estimate.iter().zip(truth).filter(|(a, b)| a != b).count() as u64)
}

fn decode_bits(raw: Vec<u8>, coding: &LinkCoding<'_>) -> Result<Vec<u8>> {
    match coding.decoder {
        Some(dec) => dec.decode(&raw, coding.info_len),
        None => Ok(raw),
    }
}

fn detect(rx: &Received, coding: &LinkCoding<'_>) -> Result<Vec<u8>> {
    decode_bits(coding.modulation.demap(&rx.equalized()), coding)
}

/// Literal constellation symbols a source would have sent for `info`.
fn rebuild(info: &[u8], coding: &LinkCoding<'_>) -> Result<Vec<Complex64>> {
    let channel_bits = match coding.decoder {
        Some(dec) => conv_encode(info, dec.code())?,
        None => info.to_vec(),
    };
    Ok(coding.modulation.map(&channel_bits)?.samples)
}

/// Self-interference cancellation on an analog-NC relay block.
///
/// `gains` are the literal-unit amplitudes of `x1` and `x2` inside the
/// received relay block. The symbols of the `known` source are rebuilt from
/// its direct-link estimate, subtracted, and the residual is de-mapped for the
/// other source. Returns `None` when the target's amplitude is zero (no
/// usable relay signal).
pub fn analog_nc_destination_detect(
    relay_block: &[Complex64],
    gains: (Complex64, Complex64),
    known: SourceId,
    known_symbols: &[Complex64],
    modulation: Modulation,
) -> Result<Option<Vec<u8>>> {
    if relay_block.len() != known_symbols.len() {
        return Err(Error::InvalidArgument("relay block and rebuilt symbols differ in length".into()));
    }
    let (g_known, g_target) = match known {
        SourceId::S1 => (gains.0, gains.1),
        SourceId::S2 => (gains.1, gains.0),
    };
    if g_target.norm_sqr() == 0.0 {
        return Ok(None);
    }
    let inv = g_target.inv();
    let residual: Vec<Complex64> =
        relay_block.iter().zip(known_symbols).map(|(&y, &x)| (y - g_known * x) * inv).collect();
    Ok(Some(modulation.demap(&residual)))
}

/// Recovers both messages from the direct links and the relay.
///
/// Digital relay branches carry `b1 XOR b2`; each source is recovered by
/// XORing the relay message with the *other* source's direct estimate. On the
/// analog branch the destination cancels the other source's rebuilt symbols
/// from the relay block instead. Without a usable relay signal, or when the
/// other direct link is missing, a source falls back to its own direct
/// estimate.
pub fn recover(reception: &ReceptionSet, coding: &LinkCoding<'_>, truth: (&Packet, &Packet)) -> Result<RecoveryResult> {
    let n = coding.info_len;
    if truth.0.len() != n || truth.1.len() != n {
        return Err(Error::InvalidArgument("truth packets do not match the configured length".into()));
    }
    let dir1 = reception.direct_s1.as_ref().map(|rx| detect(rx, coding)).transpose()?;
    let dir2 = reception.direct_s2.as_ref().map(|rx| detect(rx, coding)).transpose()?;
    let relay_silent = reception.relay.gain.norm_sqr() == 0.0;

    let (est1, est2, xor_estimate) = match reception.relay_branch {
        RelayBranch::Digital => {
            let xor = if relay_silent { vec![0; n] } else { detect(&reception.relay, coding)? };
            let cross = |other: &Option<Vec<u8>>, own: &Option<Vec<u8>>| -> Result<Option<Vec<u8>>> {
                match (other, relay_silent) {
                    (Some(o), false) => Ok(Some(xor_bits(&xor, o)?)),
                    _ => Ok(own.clone()),
                }
            };
            (cross(&dir2, &dir1)?, cross(&dir1, &dir2)?, xor)
        }
        RelayBranch::Analog { beta, source_gains } => {
            let a = reception.relay.gain / beta;
            let gains = (a * source_gains.0, a * source_gains.1);
            let y = &reception.relay.block.samples;
            let cancel =
                |known: SourceId, known_info: &Option<Vec<u8>>, own: &Option<Vec<u8>>| -> Result<Option<Vec<u8>>> {
                    let Some(info) = known_info else { return Ok(own.clone()) };
                    let symbols = rebuild(info, coding)?;
                    match analog_nc_destination_detect(y, gains, known, &symbols, coding.modulation)? {
                        Some(raw) => Ok(Some(decode_bits(raw, coding)?)),
                        None => Ok(own.clone()),
                    }
                };
            let e1 = cancel(SourceId::S2, &dir2, &dir1)?;
            let e2 = cancel(SourceId::S1, &dir1, &dir2)?;
            let xor = match (&e1, &e2) {
                (Some(p), Some(q)) => xor_bits(p, q)?,
                _ if relay_silent => vec![0; n],
                _ => decode_bits(joint_xor_demap(y, coding.modulation, gains), coding)?,
            };
            (e1, e2, xor)
        }
    };

    let truth_xor = xor_bits(truth.0.bits(), truth.1.bits())?;
    let count = |e: &Option<Vec<u8>>, t: &Packet| e.as_ref().map(|v| count_bit_errors(v, t.bits())).transpose();
    Ok(RecoveryResult {
        errors_s1: count(&est1, truth.0)?,
        errors_s2: count(&est2, truth.1)?,
        xor_errors: count_bit_errors(&xor_estimate, &truth_xor)?,
        direct_errors_s1: count(&dir1, truth.0)?,
        direct_errors_s2: count(&dir2, truth.1)?,
        est_s1: est1,
        est_s2: est2,
        xor_estimate,
    })
}
