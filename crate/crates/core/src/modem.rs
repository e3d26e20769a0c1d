//! BPSK and 4-QAM mapping, hard de-mapping, and the joint XOR de-mapper
//! for superposed two-user receptions.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Modulation {
    Bpsk,
    Qam4,
}

impl Modulation {
    pub fn bits_per_symbol(self) -> usize {
        match self {
            Modulation::Bpsk => 1,
            Modulation::Qam4 => 2,
        }
    }

    /// Amplitude factor that brings the literal constellation to unit
    /// average energy.
    pub fn scale(self) -> f64 {
        match self {
            Modulation::Bpsk => 1.0,
            Modulation::Qam4 => std::f64::consts::FRAC_1_SQRT_2,
        }
    }

    /// Literal constellation points indexed by symbol label.
    pub fn constellation(self) -> &'static [Complex64] {
        match self {
            Modulation::Bpsk => &BPSK_POINTS,
            Modulation::Qam4 => &QAM4_POINTS,
        }
    }

    pub fn map(self, bits: &[u8]) -> Result<SymbolBlock> {
        match self {
            Modulation::Bpsk => Ok(bpsk_map(bits)),
            Modulation::Qam4 => qam_map(bits),
        }
    }

    /// Hard decisions on samples expressed in literal constellation units.
    pub fn demap(self, samples: &[Complex64]) -> Vec<u8> {
        match self {
            Modulation::Bpsk => bpsk_demap(samples),
            Modulation::Qam4 => qam_demap(samples),
        }
    }
}

const BPSK_POINTS: [Complex64; 2] = [Complex64::new(-1.0, 0.0), Complex64::new(1.0, 0.0)];

/// Symbol `2*b0 + b1` for the bit pair `(b0, b1)`.
const QAM4_POINTS: [Complex64; 4] =
    [Complex64::new(-1.0, 1.0), Complex64::new(-1.0, -1.0), Complex64::new(1.0, 1.0), Complex64::new(1.0, -1.0)];

/// Complex baseband samples together with the modulation that produced them.
///
/// `samples` hold literal constellation values; the transmitted waveform is
/// `scale * samples`. Blocks built by the relay's analog path carry
/// already-normalized samples with `scale = 1`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SymbolBlock {
    pub samples: Vec<Complex64>,
    pub modulation: Modulation,
    pub scale: f64,
}

impl SymbolBlock {
    pub fn new(samples: Vec<Complex64>, modulation: Modulation, scale: f64) -> Self {
        Self { samples, modulation, scale }
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    /// Average energy per sample with `scale` applied.
    pub fn mean_energy(&self) -> f64 {
        if self.samples.is_empty() {
            return 0.0;
        }
        let s2 = self.scale * self.scale;
        self.samples.iter().map(|x| x.norm_sqr()).sum::<f64>() * s2 / self.samples.len() as f64
    }

    /// Samples as they leave the transmitter.
    pub fn transmitted(&self) -> impl Iterator<Item = Complex64> + '_ {
        self.samples.iter().map(move |&x| x * self.scale)
    }
}

/// Maps bit `b` to the real sample `2b - 1`.
pub fn bpsk_map(bits: &[u8]) -> SymbolBlock {
    let samples = bits.iter().map(|&b| Complex64::new(2.0 * (b & 1) as f64 - 1.0, 0.0)).collect();
    SymbolBlock::new(samples, Modulation::Bpsk, 1.0)
}

/// Sign decision on the real part; exactly zero decides 1.
pub fn bpsk_demap(samples: &[Complex64]) -> Vec<u8> {
    samples.iter().map(|y| (y.re >= 0.0) as u8).collect()
}

/// Maps bit pairs to 4-QAM symbols. The first bit of each pair has weight 2
/// and the second weight 1; the index selects `-1+j, -1-j, 1+j, 1-j`.
pub fn qam_map(bits: &[u8]) -> Result<SymbolBlock> {
    if !bits.len().is_multiple_of(2) {
        return Err(Error::InvalidArgument(format!("4-QAM needs an even number of bits, got {}", bits.len())));
    }
    let samples = bits.chunks_exact(2).map(|pair| QAM4_POINTS[qam_symbol_index(pair[0], pair[1])]).collect();
    Ok(SymbolBlock::new(samples, Modulation::Qam4, Modulation::Qam4.scale()))
}

pub fn qam_symbol_index(msb: u8, lsb: u8) -> usize {
    2 * (msb & 1) as usize + (lsb & 1) as usize
}

fn nearest_index(points: &[Complex64], y: Complex64) -> usize {
    let mut best = 0;
    let mut best_d = f64::INFINITY;
    for (i, p) in points.iter().enumerate() {
        let d = (y - p).norm_sqr();
        if d < best_d {
            best = i;
            best_d = d;
        }
    }
    best
}

/// Nearest-point 4-QAM decisions on literal-unit samples; ties go to the
/// lowest symbol index.
pub fn qam_demap(samples: &[Complex64]) -> Vec<u8> {
    samples
        .iter()
        .flat_map(|&y| {
            let idx = nearest_index(&QAM4_POINTS, y);
            [(idx >> 1) as u8, (idx & 1) as u8]
        })
        .collect()
}

/// Joint maximum-likelihood de-mapping of `y = g1*x1 + g2*x2 + z` straight to
/// the XOR of the two users' bit labels.
///
/// All `M^2` label pairs are scored; on equal distance the pair with the
/// smaller XOR label wins, then the lower pair index. With BPSK and unit
/// gains this is the rule `|re(y)| >= 1 -> 0`, otherwise `1`.
pub fn joint_xor_demap(samples: &[Complex64], modulation: Modulation, gains: (Complex64, Complex64)) -> Vec<u8> {
    let points = modulation.constellation();
    let m = points.len();
    let mut candidates: Vec<(Complex64, usize)> = Vec::with_capacity(m * m);
    for (i, &p1) in points.iter().enumerate() {
        for (k, &p2) in points.iter().enumerate() {
            candidates.push((gains.0 * p1 + gains.1 * p2, i ^ k));
        }
    }
    // stable sort keeps pair order within equal XOR labels
    candidates.sort_by_key(|&(_, label)| label);

    let bps = modulation.bits_per_symbol();
    let mut out = Vec::with_capacity(samples.len() * bps);
    for &y in samples {
        let mut best = (f64::INFINITY, 0usize);
        for &(point, label) in &candidates {
            let d = (y - point).norm_sqr();
            if d < best.0 {
                best = (d, label);
            }
        }
        let label = best.1;
        out.extend((0..bps).rev().map(|b| ((label >> b) & 1) as u8));
    }
    out
}

/// Divides received samples by the known complex gain so they are expressed
/// in literal constellation units.
pub fn equalize(samples: &[Complex64], gain: Complex64) -> Vec<Complex64> {
    if gain.norm_sqr() == 0.0 {
        return vec![Complex64::new(0.0, 0.0); samples.len()];
    }
    let inv = gain.inv();
    samples.iter().map(|&y| y * inv).collect()
}
