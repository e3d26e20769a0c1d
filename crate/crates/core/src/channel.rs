//! Flat AWGN and block-Rayleigh link models.
//!
//! SNR is Es/N0 at the receiver input for a unit-energy transmit symbol:
//! the complex noise variance on a link is `N0 = 10^(-snr_db/10)`, split
//! evenly between the real and imaginary dimensions. `snr_db = +inf` turns
//! the noise off.

use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::bitsource::RngStream;
use crate::modem::SymbolBlock;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum LinkId {
    S1R,
    S2R,
    S1D,
    S2D,
    RD,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ChannelKind {
    Awgn,
    /// One Rayleigh coefficient per link per packet.
    RayleighBlock,
}

/// Transmit powers of the two sources and the relay.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LinkPowers {
    pub s1: f64,
    pub s2: f64,
    pub relay: f64,
}

impl Default for LinkPowers {
    fn default() -> Self {
        Self { s1: 1.0, s2: 1.0, relay: 1.0 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChannelConfig {
    pub kind: ChannelKind,
    pub powers: LinkPowers,
    /// Accepted and recorded but not used by either channel kind.
    #[serde(default)]
    pub doppler_hz: Option<f64>,
}

impl Default for ChannelConfig {
    fn default() -> Self {
        Self { kind: ChannelKind::Awgn, powers: LinkPowers::default(), doppler_hz: None }
    }
}

impl ChannelConfig {
    pub fn validate(&self) -> Result<()> {
        let p = self.powers;
        // zero relay power is allowed as a degenerate case; sources must transmit
        if !(p.s1 > 0.0 && p.s2 > 0.0 && p.relay >= 0.0) || ![p.s1, p.s2, p.relay].iter().all(|v| v.is_finite()) {
            return Err(Error::Config(format!("link powers must be positive and finite, got {p:?}")));
        }
        Ok(())
    }

    pub fn power(&self, link: LinkId) -> f64 {
        match link {
            LinkId::S1R | LinkId::S1D => self.powers.s1,
            LinkId::S2R | LinkId::S2D => self.powers.s2,
            LinkId::RD => self.powers.relay,
        }
    }
}

/// Complex noise variance for an Es/N0 of `snr_db` with unit symbol energy.
pub fn noise_var_for_snr(snr_db: f64) -> f64 {
    if snr_db == f64::INFINITY {
        0.0
    } else {
        10f64.powf(-snr_db / 10.0)
    }
}

/// One realization of a link.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChannelDraw {
    pub h: Complex64,
    pub noise_var: f64,
    pub snr_db: f64,
    pub link: LinkId,
}

impl ChannelDraw {
    /// Amplitude seen by the receiver for a literal constellation point sent
    /// with `power` and amplitude `scale`.
    pub fn gain(&self, power: f64, scale: f64) -> Complex64 {
        self.h * (power.sqrt() * scale)
    }
}

/// A received block together with the receiver's (perfect) channel knowledge:
/// `block.samples = gain * x + z` with `x` in literal constellation units and
/// `z` of complex variance `noise_var`.
#[derive(Debug, Clone, PartialEq)]
pub struct Received {
    pub block: SymbolBlock,
    pub gain: Complex64,
    pub noise_var: f64,
}

impl Received {
    /// Receives `block` over `draw`, returning the samples plus the CSI a
    /// coherent receiver would use.
    pub fn over_link(block: &SymbolBlock, draw: &ChannelDraw, power: f64, rng: &mut RngStream) -> Self {
        Self {
            block: apply_link(block, draw, power, rng),
            gain: draw.gain(power, block.scale),
            noise_var: draw.noise_var,
        }
    }

    /// Samples divided by the known gain.
    pub fn equalized(&self) -> Vec<Complex64> {
        crate::modem::equalize(&self.block.samples, self.gain)
    }

    /// Per-dimension noise standard deviation after equalization.
    pub fn equalized_noise_std(&self) -> f64 {
        let g2 = self.gain.norm_sqr();
        if g2 == 0.0 {
            f64::INFINITY
        } else {
            (self.noise_var / (2.0 * g2)).sqrt()
        }
    }

    pub fn len(&self) -> usize {
        self.block.len()
    }

    pub fn is_empty(&self) -> bool {
        self.block.is_empty()
    }
}

/// Draws the coefficient of `link` for one packet.
pub fn draw_channel(config: &ChannelConfig, link: LinkId, snr_db: f64, rng: &mut RngStream) -> ChannelDraw {
    let h = match config.kind {
        ChannelKind::Awgn => Complex64::new(1.0, 0.0),
        ChannelKind::RayleighBlock => {
            // alpha^2 ~ Exp(1) so E[|h|^2] = 1; phase uniform on (-pi, pi]
            let u: f64 = 1.0 - rng.random::<f64>();
            let alpha = (-u.ln()).sqrt();
            let theta = std::f64::consts::PI * (1.0 - 2.0 * rng.random::<f64>());
            Complex64::from_polar(alpha, -theta)
        }
    };
    ChannelDraw { h, noise_var: noise_var_for_snr(snr_db), snr_db, link }
}

/// Circularly symmetric complex Gaussian noise of total variance `noise_var`.
pub fn complex_noise(noise_var: f64, len: usize, rng: &mut RngStream) -> Vec<Complex64> {
    if noise_var == 0.0 {
        return vec![Complex64::new(0.0, 0.0); len];
    }
    let sd = (noise_var / 2.0).sqrt();
    (0..len)
        .map(|_| {
            let re: f64 = rng.sample(StandardNormal);
            let im: f64 = rng.sample(StandardNormal);
            Complex64::new(re * sd, im * sd)
        })
        .collect()
}

/// `y = sqrt(power) * h * x + z` for every transmitted sample of `block`.
///
/// The result carries physical received samples (`scale = 1`).
pub fn apply_link(block: &SymbolBlock, draw: &ChannelDraw, power: f64, rng: &mut RngStream) -> SymbolBlock {
    let a = draw.h * power.sqrt();
    let noise = complex_noise(draw.noise_var, block.len(), rng);
    let samples = block.transmitted().zip(noise).map(|(x, z)| a * x + z).collect();
    SymbolBlock::new(samples, block.modulation, 1.0)
}

/// Superposed reception `y = sqrt(p1) h1 x1 + sqrt(p2) h2 x2 + z` with a
/// single noise draw of variance `noise_var`.
#[allow(clippy::too_many_arguments)]
pub fn superpose(
    x1: &SymbolBlock,
    x2: &SymbolBlock,
    draw1: &ChannelDraw,
    draw2: &ChannelDraw,
    powers: (f64, f64),
    noise_var: f64,
    rng: &mut RngStream,
) -> Result<SymbolBlock> {
    if x1.len() != x2.len() {
        return Err(Error::InvalidArgument(format!(
            "superposed blocks differ in length ({} vs {})",
            x1.len(),
            x2.len()
        )));
    }
    let a1 = draw1.h * powers.0.sqrt();
    let a2 = draw2.h * powers.1.sqrt();
    let noise = complex_noise(noise_var, x1.len(), rng);
    let samples = x1.transmitted().zip(x2.transmitted()).zip(noise).map(|((p, q), z)| a1 * p + a2 * q + z).collect();
    Ok(SymbolBlock::new(samples, x1.modulation, 1.0))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::modem::{bpsk_map, qam_map, Modulation};
    use statrs::distribution::{ChiSquared, ContinuousCDF};

    fn rayleigh() -> ChannelConfig {
        ChannelConfig { kind: ChannelKind::RayleighBlock, ..Default::default() }
    }

    #[test]
    fn awgn_coefficient_is_one() {
        let mut rng = RngStream::new(1, 1);
        for snr in [-5.0, 0.0, 17.0] {
            let d = draw_channel(&ChannelConfig::default(), LinkId::S1R, snr, &mut rng);
            assert_eq!(d.h, Complex64::new(1.0, 0.0));
            assert!((d.noise_var - 10f64.powf(-snr / 10.0)).abs() < 1e-15);
        }
    }

    #[test]
    fn rayleigh_has_unit_mean_square() {
        let mut rng = RngStream::new(99, 4);
        let n = 100_000;
        let mean =
            (0..n).map(|_| draw_channel(&rayleigh(), LinkId::RD, 10.0, &mut rng).h.norm_sqr()).sum::<f64>() / n as f64;
        assert!((0.99..=1.01).contains(&mean), "E|h|^2 = {mean}");
    }

    #[test]
    fn rayleigh_phase_is_uniform() {
        let mut rng = RngStream::new(1234, 9);
        let n = 100_000;
        let bins = 16;
        let mut counts = vec![0usize; bins];
        for _ in 0..n {
            let arg = draw_channel(&rayleigh(), LinkId::S2D, 0.0, &mut rng).h.arg();
            let u = (arg + std::f64::consts::PI) / (2.0 * std::f64::consts::PI);
            counts[((u * bins as f64) as usize).min(bins - 1)] += 1;
        }
        let expected = n as f64 / bins as f64;
        let chi2: f64 = counts.iter().map(|&c| (c as f64 - expected).powi(2) / expected).sum();
        let p = 1.0 - ChiSquared::new((bins - 1) as f64).unwrap().cdf(chi2);
        assert!(p > 0.001, "chi2 {chi2}, p {p}");
    }

    #[test]
    fn infinite_snr_is_identity() {
        let x = bpsk_map(&[0, 1, 1, 0, 1]);
        let d = draw_channel(&ChannelConfig::default(), LinkId::S1D, f64::INFINITY, &mut RngStream::new(0, 0));
        let y = apply_link(&x, &d, 1.0, &mut RngStream::new(0, 1));
        assert_eq!(y.samples, x.samples);
    }

    #[test]
    fn noise_power_matches_variance() {
        let zeros = SymbolBlock::new(vec![Complex64::new(0.0, 0.0); 100_000], Modulation::Bpsk, 1.0);
        let d = draw_channel(&ChannelConfig::default(), LinkId::S1R, 3.0, &mut RngStream::new(5, 0));
        let y = apply_link(&zeros, &d, 1.0, &mut RngStream::new(5, 1));
        let p = y.mean_energy();
        assert!((p / d.noise_var - 1.0).abs() < 0.03, "noise power {p} vs {}", d.noise_var);
    }

    #[test]
    fn measured_snr_is_calibrated() {
        let bits: Vec<u8> = (0..1_000_000u32).map(|i| (i.wrapping_mul(2654435761) >> 31) as u8).collect();
        let x = bpsk_map(&bits);
        for snr in [0.0, 7.0, 15.0] {
            let d = draw_channel(&ChannelConfig::default(), LinkId::S1R, snr, &mut RngStream::new(8, 0));
            let y = apply_link(&x, &d, 1.0, &mut RngStream::new(8, snr as u64 + 1));
            let noise_p = y.samples.iter().zip(&x.samples).map(|(a, b)| (a - b).norm_sqr()).sum::<f64>() / 1e6;
            let measured = 10.0 * (x.mean_energy() / noise_p).log10();
            assert!((measured - snr).abs() < 0.1, "requested {snr} dB, measured {measured} dB");
        }
    }

    #[test]
    fn superposition_is_additive() {
        let x1 = bpsk_map(&[1, 0, 1]);
        let x2 = bpsk_map(&[0, 0, 1]);
        let d1 = draw_channel(&ChannelConfig::default(), LinkId::S1R, 6.0, &mut RngStream::new(1, 0));
        let d2 = draw_channel(&ChannelConfig::default(), LinkId::S2R, 6.0, &mut RngStream::new(1, 1));
        let y = superpose(&x1, &x2, &d1, &d2, (1.0, 1.0), d1.noise_var, &mut RngStream::new(3, 3)).unwrap();
        let z = complex_noise(d1.noise_var, 3, &mut RngStream::new(3, 3));
        for (i, zi) in z.iter().enumerate() {
            let expected = x1.samples[i] + x2.samples[i] + zi;
            assert!((y.samples[i] - expected).norm() < 1e-12);
        }
    }

    #[test]
    fn noiseless_superposition_cancels() {
        let d = draw_channel(&ChannelConfig::default(), LinkId::S1R, f64::INFINITY, &mut RngStream::new(1, 0));
        let mut rng = RngStream::new(0, 0);
        let y = superpose(&bpsk_map(&[1]), &bpsk_map(&[0]), &d, &d, (1.0, 1.0), 0.0, &mut rng).unwrap();
        assert_eq!(y.samples[0], Complex64::new(0.0, 0.0));

        let y = superpose(&qam_map(&[0, 0]).unwrap(), &qam_map(&[1, 1]).unwrap(), &d, &d, (1.0, 1.0), 0.0, &mut rng)
            .unwrap();
        assert!(y.samples[0].norm() < 1e-15);
    }

    #[test]
    fn zero_power_source_reduces_to_single_link() {
        let x1 = qam_map(&[0, 1, 1, 1]).unwrap();
        let x2 = qam_map(&[1, 1, 0, 0]).unwrap();
        let d = draw_channel(&rayleigh(), LinkId::S1R, 4.0, &mut RngStream::new(2, 2));
        let y = superpose(&x1, &x2, &d, &d, (1.0, 0.0), d.noise_var, &mut RngStream::new(4, 4)).unwrap();
        let single = apply_link(&x1, &d, 1.0, &mut RngStream::new(4, 4));
        assert_eq!(y.samples, single.samples);
    }

    #[test]
    fn length_mismatch_rejected() {
        let d = draw_channel(&ChannelConfig::default(), LinkId::S1R, 1.0, &mut RngStream::new(1, 0));
        let r = superpose(&bpsk_map(&[1, 0]), &bpsk_map(&[1]), &d, &d, (1.0, 1.0), 0.1, &mut RngStream::new(1, 1));
        assert!(matches!(r, Err(Error::InvalidArgument(_))));
    }

    #[test]
    fn same_stream_same_noise() {
        let a = complex_noise(0.5, 64, &mut RngStream::new(77, 3));
        let b = complex_noise(0.5, 64, &mut RngStream::new(77, 3));
        assert_eq!(a, b);
    }

    #[test]
    fn powers_validated() {
        let mut c = ChannelConfig::default();
        assert!(c.validate().is_ok());
        c.powers.s1 = 0.0;
        assert!(c.validate().is_err());
        c.powers.s1 = 1.0;
        c.powers.relay = 0.0;
        assert!(c.validate().is_ok());
    }
}
