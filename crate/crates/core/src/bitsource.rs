//! Information packets and the counter-addressed random streams that feed
//! every stochastic part of the simulator.

use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Default packet size in information bits.
pub const DEFAULT_PACKET_LEN: usize = 1000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum SourceId {
    S1,
    S2,
}

impl SourceId {
    pub fn other(self) -> Self {
        match self {
            SourceId::S1 => SourceId::S2,
            SourceId::S2 => SourceId::S1,
        }
    }
}

/// Information bits emitted by one source in one time slot.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Packet {
    bits: Vec<u8>,
    source: SourceId,
}

impl Packet {
    /// Wraps an existing bit vector. Every element must be 0 or 1.
    pub fn new(bits: Vec<u8>, source: SourceId) -> Result<Self> {
        if bits.is_empty() {
            return Err(Error::InvalidArgument("packet must hold at least one bit".into()));
        }
        if let Some(b) = bits.iter().find(|&&b| b > 1) {
            return Err(Error::InvalidArgument(format!("packet bit value {b} is not binary")));
        }
        Ok(Self { bits, source })
    }

    pub fn bits(&self) -> &[u8] {
        &self.bits
    }

    pub fn into_bits(self) -> Vec<u8> {
        self.bits
    }

    pub fn source(&self) -> SourceId {
        self.source
    }

    pub fn len(&self) -> usize {
        self.bits.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bits.is_empty()
    }
}

/// What a stream is used for inside one packet's simulation. Streams are keyed
/// by purpose and never by scheme, so two schemes simulated under the same
/// seed see identical source bits, fading and noise on every link.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Lane {
    Bits(SourceId),
    /// Fading coefficient draws for a link.
    Fading(crate::channel::LinkId),
    /// Additive noise on a link.
    Noise(crate::channel::LinkId),
}

impl Lane {
    fn code(self) -> u64 {
        use crate::channel::LinkId;
        let link = |l: LinkId| match l {
            LinkId::S1R => 0,
            LinkId::S2R => 1,
            LinkId::S1D => 2,
            LinkId::S2D => 3,
            LinkId::RD => 4,
        };
        match self {
            Lane::Bits(SourceId::S1) => 1,
            Lane::Bits(SourceId::S2) => 2,
            Lane::Fading(l) => 16 + link(l),
            Lane::Noise(l) => 32 + link(l),
        }
    }
}

/// Address of a stream: SNR point, packet index and lane.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct StreamKey {
    pub point: u32,
    pub packet: u32,
    pub lane: Lane,
}

impl StreamKey {
    pub fn index(self) -> u64 {
        ((self.point as u64 & 0xffff) << 48) | ((self.packet as u64) << 16) | self.lane.code()
    }
}

/// A deterministic random stream identified by `(master_seed, stream_index)`.
///
/// Backed by ChaCha8 with the stream index placed in the cipher's 64-bit
/// stream word, so distinct indices give independent keystreams and any
/// stream can be opened directly without replaying the others.
#[derive(Debug, Clone)]
pub struct RngStream {
    master_seed: u64,
    stream_index: u64,
    rng: ChaCha8Rng,
}

impl RngStream {
    pub fn new(master_seed: u64, stream_index: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(master_seed);
        rng.set_stream(stream_index);
        Self { master_seed, stream_index, rng }
    }

    pub fn for_key(master_seed: u64, key: StreamKey) -> Self {
        Self::new(master_seed, key.index())
    }

    pub fn master_seed(&self) -> u64 {
        self.master_seed
    }

    pub fn stream_index(&self) -> u64 {
        self.stream_index
    }
}

impl RngCore for RngStream {
    fn next_u32(&mut self) -> u32 {
        self.rng.next_u32()
    }

    fn next_u64(&mut self) -> u64 {
        self.rng.next_u64()
    }

    fn fill_bytes(&mut self, dst: &mut [u8]) {
        self.rng.fill_bytes(dst)
    }
}

/// Draws `length` independent uniform bits for `source`.
pub fn generate_packet(length: usize, source: SourceId, rng: &mut RngStream) -> Result<Packet> {
    if length == 0 {
        return Err(Error::InvalidArgument("packet length must be at least 1".into()));
    }
    let bits = (0..length).map(|_| rng.random::<bool>() as u8).collect();
    Ok(Packet { bits, source })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn same_stream_same_packet() {
        let a = generate_packet(4, SourceId::S1, &mut RngStream::new(7, 3)).unwrap();
        let b = generate_packet(4, SourceId::S1, &mut RngStream::new(7, 3)).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn default_length_is_binary() {
        let p = generate_packet(DEFAULT_PACKET_LEN, SourceId::S2, &mut RngStream::new(1, 0)).unwrap();
        assert_eq!(p.len(), 1000);
        assert!(p.bits().iter().all(|&b| b <= 1));
        assert_eq!(p.source(), SourceId::S2);
    }

    #[test]
    fn zero_length_rejected() {
        let err = generate_packet(0, SourceId::S1, &mut RngStream::new(1, 0)).unwrap_err();
        assert!(matches!(err, Error::InvalidArgument(_)));
    }

    #[test]
    fn fraction_of_ones_is_balanced() {
        let p = generate_packet(100_000, SourceId::S1, &mut RngStream::new(2024, 11)).unwrap();
        let ones = p.bits().iter().map(|&b| b as usize).sum::<usize>() as f64 / 1e5;
        assert!((0.49..=0.51).contains(&ones), "fraction of ones {ones}");
    }

    #[test]
    fn distinct_streams_are_uncorrelated() {
        let a = generate_packet(100_000, SourceId::S1, &mut RngStream::new(5, 0)).unwrap();
        let b = generate_packet(100_000, SourceId::S1, &mut RngStream::new(5, 1)).unwrap();
        let n = 1e5;
        let xa: Vec<f64> = a.bits().iter().map(|&v| 2.0 * v as f64 - 1.0).collect();
        let xb: Vec<f64> = b.bits().iter().map(|&v| 2.0 * v as f64 - 1.0).collect();
        let ma = xa.iter().sum::<f64>() / n;
        let mb = xb.iter().sum::<f64>() / n;
        let cov = xa.iter().zip(&xb).map(|(p, q)| (p - ma) * (q - mb)).sum::<f64>() / n;
        let va = xa.iter().map(|p| (p - ma).powi(2)).sum::<f64>() / n;
        let vb = xb.iter().map(|q| (q - mb).powi(2)).sum::<f64>() / n;
        let rho = cov / (va * vb).sqrt();
        assert!(rho.abs() < 0.01, "correlation {rho}");
    }

    #[test]
    fn stream_keys_do_not_collide() {
        use crate::channel::LinkId;
        let lanes = [
            Lane::Bits(SourceId::S1),
            Lane::Bits(SourceId::S2),
            Lane::Noise(LinkId::S1R),
            Lane::Noise(LinkId::RD),
            Lane::Fading(LinkId::S1R),
            Lane::Fading(LinkId::RD),
        ];
        let mut seen = std::collections::HashSet::new();
        for point in 0..3 {
            for packet in 0..3 {
                for lane in lanes {
                    assert!(seen.insert(StreamKey { point, packet, lane }.index()));
                }
            }
        }
    }

    #[test]
    fn packet_rejects_non_binary() {
        assert!(Packet::new(vec![0, 2], SourceId::S1).is_err());
        assert!(Packet::new(vec![], SourceId::S1).is_err());
    }
}
