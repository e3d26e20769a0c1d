//! Monte Carlo engine: per-packet simulation, per-SNR accumulation with an
//! early-stopping rule, sweeps and multi-scheme comparisons.
//!
//! Packets are simulated in fixed-size batches on a rayon pool and merged in
//! packet order, so the stopping point and every counter are independent of
//! the number of worker threads.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::bitsource::{generate_packet, Lane, Packet, RngStream, SourceId, StreamKey, DEFAULT_PACKET_LEN};
use crate::channel::{draw_channel, superpose, ChannelConfig, ChannelDraw, LinkId, Received};
use crate::destination::{recover, ReceptionSet, Topology};
use crate::fec::{conv_encode, CodeConfig, ViterbiDecoder};
use crate::modem::{Modulation, SymbolBlock};
use crate::relay::{relay_forward, AdaptiveChoice, LinkCoding, RelayReception, RxMode, SchemeConfig, SchemeKind};
use crate::stats::{wilson_half_width, wilson_interval, CI_Z};
use crate::{Error, Result};

/// Packets simulated per parallel batch.
const BATCH: u64 = 64;

/// Which energy ratio the SNR grid is expressed in.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SnrAxis {
    /// Energy per transmitted symbol over N0.
    EsN0,
    /// Energy per information bit over N0.
    EbN0,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepConfig {
    /// Curve label; defaults to the scheme label.
    #[serde(default)]
    pub label: Option<String>,
    pub snr_grid: Vec<f64>,
    pub snr_axis: SnrAxis,
    pub packets_max: u64,
    /// Stop a point once this many bit errors are reached; `None` always
    /// runs `packets_max` packets.
    #[serde(default)]
    pub min_bit_errors: Option<u64>,
    pub scheme: SchemeConfig,
    /// `None` sends uncoded bits.
    #[serde(default)]
    pub code: Option<CodeConfig>,
    pub channel: ChannelConfig,
    pub modulation: Modulation,
    pub packet_len: usize,
    pub topology: Topology,
    pub master_seed: u64,
    /// Slot duration in seconds. Recorded only; no model uses it.
    #[serde(default)]
    pub slot_duration: Option<f64>,
}

impl Default for SweepConfig {
    fn default() -> Self {
        Self {
            label: None,
            snr_grid: default_grid(),
            snr_axis: SnrAxis::EsN0,
            packets_max: 2000,
            min_bit_errors: Some(100),
            scheme: SchemeConfig::analog_nc(RxMode::Superposed),
            code: Some(CodeConfig::default()),
            channel: ChannelConfig::default(),
            modulation: Modulation::Bpsk,
            packet_len: DEFAULT_PACKET_LEN,
            topology: Topology::Direct,
            master_seed: 1,
            slot_duration: None,
        }
    }
}

/// 0 to 20 dB in 2 dB steps.
pub fn default_grid() -> Vec<f64> {
    grid(0.0, 20.0, 2.0)
}

/// Inclusive arithmetic grid from `start` to `stop`.
pub fn grid(start: f64, stop: f64, step: f64) -> Vec<f64> {
    if step.is_nan() || step <= 0.0 || stop < start {
        return Vec::new();
    }
    let n = ((stop - start) / step + 1e-9).floor() as usize;
    (0..=n).map(|i| start + i as f64 * step).collect()
}

impl SweepConfig {
    pub fn label(&self) -> String {
        self.label.clone().unwrap_or_else(|| self.scheme.label())
    }

    fn channel_bits_len(&self) -> usize {
        match &self.code {
            Some(c) => c.codeword_len(self.packet_len),
            None => self.packet_len,
        }
    }

    /// Es/N0 in dB that corresponds to a grid value.
    pub fn es_n0_db(&self, snr_db: f64) -> f64 {
        match self.snr_axis {
            SnrAxis::EsN0 => snr_db,
            SnrAxis::EbN0 => {
                let rate = self.code.as_ref().map_or(1.0, |c| c.rate());
                snr_db + 10.0 * (self.modulation.bits_per_symbol() as f64 * rate).log10()
            }
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.snr_grid.iter().any(|v| v.is_nan()) || self.snr_grid.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::Config("SNR grid must be strictly increasing".into()));
        }
        if self.snr_grid.len() > 0xffff {
            return Err(Error::Config("SNR grid has too many points".into()));
        }
        if self.packets_max == 0 || self.packets_max > u32::MAX as u64 {
            return Err(Error::Config(format!("packets_max {} outside 1..=2^32-1", self.packets_max)));
        }
        if self.packet_len == 0 {
            return Err(Error::Config("packet length must be at least 1".into()));
        }
        self.scheme.validate()?;
        self.channel.validate()?;
        if self.scheme.kind.needs_code() && self.code.is_none() {
            return Err(Error::Config(format!("{} needs a channel code", self.scheme.kind.name())));
        }
        if self.modulation == Modulation::Qam4 && !self.channel_bits_len().is_multiple_of(2) {
            return Err(Error::Config(format!(
                "4-QAM needs an even number of channel bits per packet, got {}",
                self.channel_bits_len()
            )));
        }
        if let Some(t) = self.slot_duration {
            if !(t > 0.0 && t.is_finite()) {
                return Err(Error::Config(format!("slot duration {t} must be positive")));
            }
        }
        Ok(())
    }
}

/// Counters for one (scheme, SNR) cell.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BerRecord {
    pub scheme: String,
    pub snr_db: f64,
    pub bits_simulated: u64,
    pub bit_errors: u64,
    pub packets: u64,
    /// Packets on which the adaptive relay chose QDF-NC.
    pub qdf_selected: u64,
    /// Bits and errors of the direct-link-only estimates.
    pub direct_bits: u64,
    pub direct_errors: u64,
}

impl BerRecord {
    fn empty(scheme: String, snr_db: f64) -> Self {
        Self {
            scheme,
            snr_db,
            bits_simulated: 0,
            bit_errors: 0,
            packets: 0,
            qdf_selected: 0,
            direct_bits: 0,
            direct_errors: 0,
        }
    }

    pub fn ber(&self) -> f64 {
        if self.bits_simulated == 0 {
            0.0
        } else {
            self.bit_errors as f64 / self.bits_simulated as f64
        }
    }

    pub fn ci(&self) -> (f64, f64) {
        wilson_interval(self.bit_errors, self.bits_simulated, CI_Z)
    }

    pub fn ci_half_width(&self) -> f64 {
        wilson_half_width(self.bit_errors, self.bits_simulated, CI_Z)
    }

    pub fn qdf_fraction(&self) -> f64 {
        if self.packets == 0 {
            0.0
        } else {
            self.qdf_selected as f64 / self.packets as f64
        }
    }

    pub fn direct_ber(&self) -> f64 {
        if self.direct_bits == 0 {
            0.0
        } else {
            self.direct_errors as f64 / self.direct_bits as f64
        }
    }

    fn absorb(&mut self, o: &PacketOutcome) {
        self.packets += 1;
        self.bits_simulated += o.bits;
        self.bit_errors += o.errors;
        self.direct_bits += o.direct_bits;
        self.direct_errors += o.direct_errors;
        self.qdf_selected += o.qdf_selected as u64;
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct PacketOutcome {
    pub bits: u64,
    pub errors: u64,
    pub direct_bits: u64,
    pub direct_errors: u64,
    pub qdf_selected: bool,
}

/// Per-point state shared by all packets of one SNR point.
struct PointContext<'a> {
    config: &'a SweepConfig,
    decoder: Option<ViterbiDecoder>,
    point: u32,
    es_n0_db: f64,
}

impl PointContext<'_> {
    fn stream(&self, packet: u32, lane: Lane) -> RngStream {
        RngStream::for_key(self.config.master_seed, StreamKey { point: self.point, packet, lane })
    }

    fn draw(&self, packet: u32, link: LinkId) -> ChannelDraw {
        draw_channel(&self.config.channel, link, self.es_n0_db, &mut self.stream(packet, Lane::Fading(link)))
    }

    fn receive(&self, packet: u32, block: &SymbolBlock, link: LinkId) -> Received {
        let draw = self.draw(packet, link);
        let power = self.config.channel.power(link);
        Received::over_link(block, &draw, power, &mut self.stream(packet, Lane::Noise(link)))
    }

    fn coding(&self) -> LinkCoding<'_> {
        LinkCoding {
            decoder: self.decoder.as_ref(),
            modulation: self.config.modulation,
            info_len: self.config.packet_len,
        }
    }

    fn transmit(&self, packet: &Packet) -> Result<SymbolBlock> {
        match &self.config.code {
            Some(code) => self.config.modulation.map(&conv_encode(packet.bits(), code)?),
            None => self.config.modulation.map(packet.bits()),
        }
    }

    fn simulate(&self, packet: u32) -> Result<PacketOutcome> {
        let cfg = self.config;
        let b1 = generate_packet(cfg.packet_len, SourceId::S1, &mut self.stream(packet, Lane::Bits(SourceId::S1)))?;
        let b2 = generate_packet(cfg.packet_len, SourceId::S2, &mut self.stream(packet, Lane::Bits(SourceId::S2)))?;
        self.simulate_pair(packet, &b1, &b2)
    }

    fn simulate_pair(&self, packet: u32, b1: &Packet, b2: &Packet) -> Result<PacketOutcome> {
        let cfg = self.config;
        let x1 = self.transmit(b1)?;
        let n = cfg.packet_len as u64;

        if cfg.scheme.kind == SchemeKind::PointToPoint {
            let rx = self.receive(packet, &x1, LinkId::S1D);
            let raw = cfg.modulation.demap(&rx.equalized());
            let est = match &self.decoder {
                Some(d) => d.decode(&raw, cfg.packet_len)?,
                None => raw,
            };
            let errors = crate::destination::count_bit_errors(&est, b1.bits())?;
            return Ok(PacketOutcome { bits: n, errors, direct_bits: n, direct_errors: errors, qdf_selected: false });
        }

        let x2 = self.transmit(b2)?;

        let reception = match cfg.scheme.rx_mode {
            RxMode::Orthogonal => RelayReception::Orthogonal {
                s1: self.receive(packet, &x1, LinkId::S1R),
                s2: self.receive(packet, &x2, LinkId::S2R),
            },
            RxMode::Superposed => {
                let d1 = self.draw(packet, LinkId::S1R);
                let d2 = self.draw(packet, LinkId::S2R);
                let (p1, p2) = (cfg.channel.powers.s1, cfg.channel.powers.s2);
                let block = superpose(
                    &x1,
                    &x2,
                    &d1,
                    &d2,
                    (p1, p2),
                    d1.noise_var,
                    &mut self.stream(packet, Lane::Noise(LinkId::S1R)),
                )?;
                RelayReception::Superposed {
                    block,
                    gains: (d1.gain(p1, x1.scale), d2.gain(p2, x2.scale)),
                    noise_var: d1.noise_var,
                }
            }
        };

        let coding = self.coding();
        let out = relay_forward(&cfg.scheme, &reception, &coding)?;
        let relay = self.receive(packet, &out.block, LinkId::RD);
        let (direct_s1, direct_s2) = match cfg.topology {
            Topology::Direct => {
                (Some(self.receive(packet, &x1, LinkId::S1D)), Some(self.receive(packet, &x2, LinkId::S2D)))
            }
            Topology::NoDirect => (None, None),
        };
        let set = ReceptionSet { direct_s1, direct_s2, relay, relay_branch: out.branch };
        let r = recover(&set, &coding, (b1, b2))?;

        let qdf_selected = matches!(out.decision, Some(d) if d.chosen == AdaptiveChoice::QdfNc);
        let outcome = match (r.errors_s1, r.errors_s2) {
            (Some(e1), Some(e2)) => PacketOutcome {
                bits: 2 * n,
                errors: e1 + e2,
                direct_bits: 2 * n,
                direct_errors: r.direct_errors_s1.unwrap_or(0) + r.direct_errors_s2.unwrap_or(0),
                qdf_selected,
            },
            _ => PacketOutcome { bits: n, errors: r.xor_errors, direct_bits: 0, direct_errors: 0, qdf_selected },
        };
        Ok(outcome)
    }
}

/// Simulates a single packet of a point; mostly useful for tests.
pub fn simulate_packet(config: &SweepConfig, point: u32, snr_db: f64, packet: u32) -> Result<PacketOutcome> {
    config.validate()?;
    let ctx = PointContext {
        config,
        decoder: config.code.as_ref().map(ViterbiDecoder::new),
        point,
        es_n0_db: config.es_n0_db(snr_db),
    };
    ctx.simulate(packet)
}

/// Runs the packet pipeline on caller-supplied source packets instead of
/// generated ones. Channel randomness still comes from packet index 0 of
/// grid point 0.
pub fn simulate_packet_pair(config: &SweepConfig, snr_db: f64, b1: &Packet, b2: &Packet) -> Result<PacketOutcome> {
    config.validate()?;
    if b1.len() != config.packet_len || b2.len() != config.packet_len {
        return Err(Error::InvalidArgument(format!(
            "packets of {} and {} bits for packet length {}",
            b1.len(),
            b2.len(),
            config.packet_len
        )));
    }
    let ctx = PointContext {
        config,
        decoder: config.code.as_ref().map(ViterbiDecoder::new),
        point: 0,
        es_n0_db: config.es_n0_db(snr_db),
    };
    ctx.simulate_pair(0, b1, b2)
}

/// Simulates one SNR point (grid index `point`) in the current rayon pool.
///
/// Packets run until `packets_max` or until the error count first reaches
/// `min_bit_errors`; the record covers exactly the packets counted.
pub fn run_point(config: &SweepConfig, point: u32, snr_db: f64) -> Result<BerRecord> {
    config.validate()?;
    let ctx = PointContext {
        config,
        decoder: config.code.as_ref().map(ViterbiDecoder::new),
        point,
        es_n0_db: config.es_n0_db(snr_db),
    };
    let mut record = BerRecord::empty(config.label(), snr_db);
    let mut start = 0u64;
    while start < config.packets_max {
        let end = (start + BATCH).min(config.packets_max);
        let outcomes: Vec<PacketOutcome> =
            (start..end).into_par_iter().map(|p| ctx.simulate(p as u32)).collect::<Result<_>>()?;
        for o in &outcomes {
            record.absorb(o);
            if config.min_bit_errors.is_some_and(|m| record.bit_errors >= m) {
                return Ok(record);
            }
        }
        start = end;
    }
    Ok(record)
}

fn pool(threads: usize) -> Result<rayon::ThreadPool> {
    rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| Error::Config(format!("cannot start worker pool: {e}")))
}

/// One record per grid point, in grid order. `threads = 0` uses every core.
pub fn run_sweep(config: &SweepConfig, threads: usize) -> Result<Vec<BerRecord>> {
    config.validate()?;
    let pool = pool(threads)?;
    pool.install(|| config.snr_grid.iter().enumerate().map(|(i, &snr)| run_point(config, i as u32, snr)).collect())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Curve {
    pub label: String,
    pub records: Vec<BerRecord>,
}

/// BER of several schemes on a shared SNR grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComparisonTable {
    pub snr_grid: Vec<f64>,
    pub curves: Vec<Curve>,
}

impl ComparisonTable {
    pub fn curve(&self, label: &str) -> Option<&Curve> {
        self.curves.iter().find(|c| c.label == label)
    }

    /// All records, curve by curve.
    pub fn records(&self) -> Vec<BerRecord> {
        self.curves.iter().flat_map(|c| c.records.iter().cloned()).collect()
    }
}

/// Runs every configuration over the same grid, channel and seed.
pub fn compare_schemes(configs: &[SweepConfig], threads: usize) -> Result<ComparisonTable> {
    let Some(first) = configs.first() else {
        return Ok(ComparisonTable { snr_grid: Vec::new(), curves: Vec::new() });
    };
    for c in &configs[1..] {
        if c.snr_grid != first.snr_grid || c.snr_axis != first.snr_axis {
            return Err(Error::InvalidArgument(format!("curve `{}` uses a different SNR grid", c.label())));
        }
        if c.channel != first.channel || c.master_seed != first.master_seed {
            return Err(Error::InvalidArgument(format!("curve `{}` uses a different channel or seed", c.label())));
        }
    }
    let mut curves = Vec::with_capacity(configs.len());
    for c in configs {
        curves.push(Curve { label: c.label(), records: run_sweep(c, threads)? });
    }
    Ok(ComparisonTable { snr_grid: first.snr_grid.clone(), curves })
}
