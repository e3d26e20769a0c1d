//! Feed-forward convolutional encoder with zero-tail termination and a
//! hard-decision Viterbi decoder.
//!
//! Generators use the usual octal notation with the most significant tap
//! multiplying the current input bit: with constraint length `K`, generator
//! bit `K-1-i` taps the input delayed by `i` steps.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

const MAX_CONSTRAINT_LENGTH: u32 = 16;
const MAX_GENERATORS: usize = 8;

/// A rate `1/n` feed-forward convolutional code.
///
/// Serialized as `K:g1,g2,...` with octal generators, e.g. `6:23,35`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub struct CodeConfig {
    constraint_length: u32,
    generators: Vec<u32>,
}

impl CodeConfig {
    pub fn new(constraint_length: u32, generators: Vec<u32>) -> Result<Self> {
        if !(2..=MAX_CONSTRAINT_LENGTH).contains(&constraint_length) {
            return Err(Error::Config(format!(
                "constraint length {constraint_length} outside 2..={MAX_CONSTRAINT_LENGTH}"
            )));
        }
        if generators.len() < 2 || generators.len() > MAX_GENERATORS {
            return Err(Error::Config(format!(
                "need between 2 and {MAX_GENERATORS} generators, got {}",
                generators.len()
            )));
        }
        for &g in &generators {
            if g == 0 || g >= 1 << constraint_length {
                return Err(Error::Config(format!("generator {g:o} (octal) does not fit in {constraint_length} bits")));
            }
        }
        Ok(Self { constraint_length, generators })
    }

    /// Constraint length 6 with generators 23, 35 (octal) read as 6-bit taps.
    ///
    /// Both generators have a zero leading tap, so this behaves as the
    /// `K = 5` code below followed by a one-bit delay; the 32-state trellis
    /// and five tail bits are kept.
    pub fn k6_23_35() -> Self {
        Self { constraint_length: 6, generators: vec![0o23, 0o35] }
    }

    /// Constraint length 5 with generators 23, 35 (octal), the textbook
    /// optimum rate-1/2 code with free distance 7.
    pub fn k5_23_35() -> Self {
        Self { constraint_length: 5, generators: vec![0o23, 0o35] }
    }

    pub fn constraint_length(&self) -> u32 {
        self.constraint_length
    }

    pub fn generators(&self) -> &[u32] {
        &self.generators
    }

    /// Number of output bits per input bit.
    pub fn n_outputs(&self) -> usize {
        self.generators.len()
    }

    pub fn rate(&self) -> f64 {
        1.0 / self.n_outputs() as f64
    }

    pub fn tail_len(&self) -> usize {
        self.constraint_length as usize - 1
    }

    pub fn codeword_len(&self, info_len: usize) -> usize {
        self.n_outputs() * (info_len + self.tail_len())
    }

    fn n_states(&self) -> usize {
        1 << (self.constraint_length - 1)
    }

    /// Packed output symbol for input `bit` leaving `state`; bit `j` of the
    /// result is generator `j`'s parity.
    fn branch_output(&self, state: usize, bit: u8) -> u8 {
        let reg = ((bit as u32) << (self.constraint_length - 1)) | state as u32;
        self.generators.iter().enumerate().fold(0u8, |acc, (j, &g)| acc | ((((reg & g).count_ones() & 1) as u8) << j))
    }
}

impl Default for CodeConfig {
    fn default() -> Self {
        Self::k6_23_35()
    }
}

impl fmt::Display for CodeConfig {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:", self.constraint_length)?;
        for (i, g) in self.generators.iter().enumerate() {
            if i > 0 {
                f.write_str(",")?;
            }
            write!(f, "{g:o}")?;
        }
        Ok(())
    }
}

impl FromStr for CodeConfig {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::Config(format!("code `{s}` is not of the form K:g1,g2 (octal generators)"));
        let (k, gens) = s.split_once(':').ok_or_else(bad)?;
        let k: u32 = k.trim().parse().map_err(|_| bad())?;
        let gens =
            gens.split(',').map(|g| u32::from_str_radix(g.trim(), 8).map_err(|_| bad())).collect::<Result<Vec<_>>>()?;
        Self::new(k, gens)
    }
}

impl TryFrom<String> for CodeConfig {
    type Error = Error;

    fn try_from(s: String) -> Result<Self> {
        s.parse()
    }
}

impl From<CodeConfig> for String {
    fn from(c: CodeConfig) -> String {
        c.to_string()
    }
}

/// Encodes `info` and appends `K-1` zero tail bits so the encoder starts and
/// ends in the all-zero state. Output bits are interleaved generator by
/// generator: `c_0[t], c_1[t], ..., c_0[t+1], ...`.
pub fn conv_encode(info: &[u8], code: &CodeConfig) -> Result<Vec<u8>> {
    if info.is_empty() {
        return Err(Error::InvalidArgument("cannot encode an empty packet".into()));
    }
    let n = code.n_outputs();
    let mut out = Vec::with_capacity(code.codeword_len(info.len()));
    let mut state = 0usize;
    let tail = std::iter::repeat_n(0u8, code.tail_len());
    for bit in info.iter().copied().chain(tail) {
        let sym = code.branch_output(state, bit);
        out.extend((0..n).map(|j| (sym >> j) & 1));
        state = ((((bit as usize) << (code.constraint_length - 1)) | state) >> 1) & (code.n_states() - 1);
    }
    Ok(out)
}

/// Precomputed branch outputs for a code, shared across decodes.
#[derive(Debug, Clone)]
pub struct ViterbiDecoder {
    code: CodeConfig,
    /// `outputs[state * 2 + bit]`
    outputs: Vec<u8>,
}

impl ViterbiDecoder {
    pub fn new(code: &CodeConfig) -> Self {
        let outputs = (0..code.n_states()).flat_map(|s| [code.branch_output(s, 0), code.branch_output(s, 1)]).collect();
        Self { code: code.clone(), outputs }
    }

    pub fn code(&self) -> &CodeConfig {
        &self.code
    }

    /// Maximum-likelihood (minimum Hamming distance) decoding of a
    /// zero-tail-terminated codeword.
    ///
    /// When two paths merge with equal metric the one coming from the lower
    /// numbered predecessor state survives, which makes the output a pure
    /// function of the input.
    pub fn decode(&self, received: &[u8], info_len: usize) -> Result<Vec<u8>> {
        let code = &self.code;
        let expected = code.codeword_len(info_len);
        if info_len == 0 || received.len() != expected {
            return Err(Error::InvalidArgument(format!(
                "received {} bits, expected {expected} for {info_len} information bits",
                received.len()
            )));
        }
        let n = code.n_outputs();
        let states = code.n_states();
        let half = states / 2;
        let top = code.constraint_length as usize - 2;
        let steps = info_len + code.tail_len();
        const INF: u32 = u32::MAX / 2;

        let mut metric = vec![INF; states];
        metric[0] = 0;
        let mut next = vec![INF; states];
        let mut decisions = vec![0u8; steps * states];

        for t in 0..steps {
            let sym = received[t * n..(t + 1) * n].iter().enumerate().fold(0u8, |acc, (j, &b)| acc | ((b & 1) << j));
            let tail = t >= info_len;
            for ns in 0..states {
                let bit = ns >> top;
                if tail && bit == 1 {
                    next[ns] = INF;
                    continue;
                }
                let base = (ns & (half - 1)) << 1;
                let (p0, p1) = (base, base | 1);
                let m0 = metric[p0].saturating_add((self.outputs[p0 * 2 + bit] ^ sym).count_ones());
                let m1 = metric[p1].saturating_add((self.outputs[p1 * 2 + bit] ^ sym).count_ones());
                if m1 < m0 {
                    next[ns] = m1;
                    decisions[t * states + ns] = 1;
                } else {
                    next[ns] = m0;
                }
            }
            std::mem::swap(&mut metric, &mut next);
        }

        let mut info = vec![0u8; steps];
        let mut state = 0usize;
        for t in (0..steps).rev() {
            info[t] = (state >> top) as u8;
            let low = decisions[t * states + state] as usize;
            state = ((state & (half - 1)) << 1) | low;
        }
        info.truncate(info_len);
        Ok(info)
    }
}

/// One-shot convenience wrapper around [`ViterbiDecoder::decode`].
pub fn viterbi_decode(received: &[u8], info_len: usize, code: &CodeConfig) -> Result<Vec<u8>> {
    ViterbiDecoder::new(code).decode(received, info_len)
}
